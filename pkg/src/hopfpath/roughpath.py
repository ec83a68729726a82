"""Canonical lifts of piecewise-linear paths and rough-path axiom checking.

On a linear segment both lifts have closed forms with rational coefficients,
so the two-parameter evaluators are exact: identities (character, Chen,
inverse) are checked with no tolerance, while Hölder ratios and homogeneous
norms are reported as floats.
"""
from __future__ import annotations

import bisect
import csv
import functools
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .hopf_core import HopfInstance, concat_deshuffle_instance, shuffle_deconcat_instance
from .hopf_ck import (
    ck_reduced_coproduct,
    gl_instance,
    phi,
    phi_hat,
    phi_kernel_basis,
)
from .linalg import LinComb
from .series import TruncatedElement, homog_norm, is_grouplike, trunc_one
from .symbols import (
    EMPTY_WORD,
    Forest,
    Word,
    forests_up_to,
    words_up_to,
)


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, float)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot convert {x!r} to an exact time/value")


class PathError(ValueError):
    pass


@dataclass(frozen=True)
class PiecewiseLinearPath:
    """Knots (t_i, x_i) with strictly increasing times; clamped outside."""

    times: tuple[Fraction, ...]
    values: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def from_knots(cls, knots: Iterable[tuple]) -> "PiecewiseLinearPath":
        knots = list(knots)
        if len(knots) < 2:
            raise PathError("a path needs at least 2 knots")
        times = tuple(to_fraction(t) for t, _ in knots)
        values = tuple(tuple(to_fraction(v) for v in x) for _, x in knots)
        dims = {len(v) for v in values}
        if len(dims) != 1 or 0 in dims:
            raise PathError("all knots must share one positive dimension")
        for a, b in zip(times, times[1:]):
            if not a < b:
                raise PathError(f"knot times must be strictly increasing, got {a} then {b}")
        return cls(times, values)

    @classmethod
    def from_csv(cls, source) -> "PiecewiseLinearPath":
        """Read knots from CSV with header t,x1,...,xd."""
        if hasattr(source, "read"):
            text = source.read()
        else:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        reader = csv.reader(io.StringIO(text))
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
        if not rows:
            raise PathError("empty CSV")
        header = [c.strip() for c in rows[0]]
        if header[0] != "t" or len(header) < 2:
            raise PathError("CSV header must be t,x1,...,xd")
        knots = []
        for row in rows[1:]:
            cells = [c.strip() for c in row]
            knots.append((Fraction(cells[0]), tuple(Fraction(c) for c in cells[1:])))
        return cls.from_knots(knots)

    @property
    def dim(self) -> int:
        return len(self.values[0])

    def clamp(self, t) -> Fraction:
        t = to_fraction(t)
        if t <= self.times[0]:
            return self.times[0]
        if t >= self.times[-1]:
            return self.times[-1]
        return t

    def position(self, t) -> tuple[Fraction, ...]:
        t = self.clamp(t)
        idx = bisect.bisect_right(self.times, t) - 1
        if idx == len(self.times) - 1:
            return self.values[-1]
        t0, t1 = self.times[idx], self.times[idx + 1]
        lam = (t - t0) / (t1 - t0)
        return tuple(
            a + lam * (b - a) for a, b in zip(self.values[idx], self.values[idx + 1])
        )

    def breakpoints_between(self, s: Fraction, t: Fraction) -> list[Fraction]:
        lo, hi = (s, t) if s <= t else (t, s)
        inner = [u for u in self.times if lo < u < hi]
        return inner if s <= t else inner[::-1]


@dataclass(frozen=True)
class RoughPathConfig:
    gamma: Fraction
    flavor: str

    @classmethod
    def make(cls, gamma, flavor: str = "geometric") -> "RoughPathConfig":
        gamma = to_fraction(gamma)
        if not 0 < gamma < 1:
            raise ValueError("gamma must be in (0, 1)")
        if flavor not in ("geometric", "branched"):
            raise ValueError(f"unknown flavor {flavor!r}")
        return cls(gamma, flavor)

    @property
    def level(self) -> int:
        return int(1 / self.gamma)


class RoughLift:
    """A two-parameter family of truncated group-likes with exact evaluation."""

    def __init__(self, flavor: str, dim: int, level: int, evaluate: Callable):
        self.flavor = flavor
        self.dim = dim
        self.level = level
        self._evaluate = evaluate
        self._cache: dict = {}

    @property
    def algebra(self) -> HopfInstance:
        if self.flavor == "geometric":
            return concat_deshuffle_instance(self.dim)
        return gl_instance(self.dim)

    def eval(self, s, t) -> TruncatedElement:
        key = (to_fraction(s), to_fraction(t))
        if key not in self._cache:
            self._cache[key] = self._evaluate(*key)
        return self._cache[key]

    def coeff(self, s, t, basis) -> Fraction:
        return self.eval(s, t).coeff(basis)

    def value(self, s, t, x: LinComb) -> Fraction:
        """Evaluate the lift as a functional on a linear combination."""
        elt = self.eval(s, t)
        return sum((c * elt.coeff(b) for b, c in x), Fraction(0))


# ---------------------------------------------------------------------------
# closed forms on one linear segment


def _word_segment(increment: tuple[Fraction, ...], level: int, d: int) -> LinComb:
    # level-k slice of the signature of a line is increment^{(x) k} / k!
    terms = {EMPTY_WORD: Fraction(1)}
    frontier = {(): Fraction(1)}
    for k in range(1, level + 1):
        nxt: dict = {}
        for letters, c in frontier.items():
            for i in range(1, d + 1):
                v = increment[i - 1]
                if v == 0:
                    continue
                nxt[letters + (i,)] = nxt.get(letters + (i,), Fraction(0)) + c * v
        frontier = nxt
        fact = Fraction(1, math.factorial(k))
        for letters, c in frontier.items():
            terms[Word(letters)] = c * fact
    return LinComb(terms)


def _forest_segment(increment: tuple[Fraction, ...], level: int, d: int) -> LinComb:
    # coefficient recursion: a(|z|_i) = a(z) * v_i / (|z| + 1), multiplicative on forests
    from .symbols import forests

    @functools.lru_cache(maxsize=None)
    def coefficient(f: Forest) -> Fraction:
        if f.is_empty():
            return Fraction(1)
        if f.tree_count() == 1:
            tree = f.items[0][0]
            v = increment[tree.label - 1]
            if v == 0:
                return Fraction(0)
            return coefficient(tree.children) * v / tree.grade
        out = Fraction(1)
        for tree in f.trees():
            out *= coefficient(tree.as_forest())
        return out

    terms = {}
    for k in range(level + 1):
        for f in forests(d, k):
            c = coefficient(f)
            if c:
                terms[f] = c
    return LinComb(terms)


def _lift_factory(path: PiecewiseLinearPath, level: int, flavor: str) -> RoughLift:
    if level < 1:
        raise ValueError("lift level must be >= 1")
    d = path.dim
    algebra = concat_deshuffle_instance(d) if flavor == "geometric" else gl_instance(d)
    segment = _word_segment if flavor == "geometric" else _forest_segment

    @functools.lru_cache(maxsize=None)
    def piece(a: Fraction, b: Fraction) -> TruncatedElement:
        increment = tuple(
            x1 - x0 for x0, x1 in zip(path.position(a), path.position(b))
        )
        return TruncatedElement.make(segment(increment, level, d), level, algebra)

    def evaluate(s: Fraction, t: Fraction) -> TruncatedElement:
        s, t = path.clamp(s), path.clamp(t)
        if s == t:
            return trunc_one(level, algebra)
        stops = [s, *path.breakpoints_between(s, t), t]
        acc = piece(stops[0], stops[1])
        for a, b in zip(stops[1:], stops[2:]):
            acc = acc.mul(piece(a, b))
        return acc

    return RoughLift(flavor, d, level, evaluate)


def signature_lift(path: PiecewiseLinearPath, level: int) -> RoughLift:
    """Canonical geometric lift by iterated integrals (exact per segment)."""
    return _lift_factory(path, level, "geometric")


def branched_lift_fn(path: PiecewiseLinearPath, level: int) -> RoughLift:
    """Canonical branched lift: tree integrals computed exactly segment-wise."""
    return _lift_factory(path, level, "branched")


def signature(path: PiecewiseLinearPath, s, t, level: int) -> TruncatedElement:
    return signature_lift(path, level).eval(s, t)


def branched_lift(path: PiecewiseLinearPath, s, t, level: int) -> TruncatedElement:
    return branched_lift_fn(path, level).eval(s, t)


# ---------------------------------------------------------------------------
# axiom checking


@dataclass
class RoughCheckEntry:
    law: str
    ok: bool
    witness: str = ""


@dataclass
class RoughAxiomReport:
    flavor: str
    gamma: float
    level: int
    entries: list[RoughCheckEntry] = field(default_factory=list)
    holder_ratios: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(e.ok for e in self.entries)

    def summary(self) -> str:
        lines = [f"rough-path check: {self.flavor}, gamma={self.gamma}, level={self.level}"]
        for e in self.entries:
            status = "ok" if e.ok else "FAIL"
            line = f"  {e.law}: {status}"
            if not e.ok:
                line += f"  witness: {e.witness}"
            lines.append(line)
        if self.holder_ratios:
            worst = max(self.holder_ratios.values())
            lines.append(f"  empirical Hölder ratio sup (finite required): {worst:.6g}")
        return "\n".join(lines)


def _nonunit_basis(lift: RoughLift) -> list:
    if lift.flavor == "geometric":
        pool = words_up_to(lift.dim, lift.level)
    else:
        pool = forests_up_to(lift.dim, lift.level)
    return [b for b in pool if b.grade >= 1]


def check_rough_axioms(
    lift: RoughLift, config: RoughPathConfig, grid: Sequence
) -> RoughAxiomReport:
    """Exact character/Chen/inverse verification plus empirical Hölder ratios."""
    grid = [to_fraction(u) for u in grid]
    if len(grid) < 3:
        raise ValueError("grid needs at least 3 points")
    level = lift.level
    report = RoughAxiomReport(flavor=lift.flavor, gamma=float(config.gamma), level=level)
    basis = _nonunit_basis(lift)
    algebra = lift.algebra

    def run(law: str, failures_iter):
        witness = next(failures_iter, None)
        report.entries.append(RoughCheckEntry(law, witness is None, witness or ""))

    def identity_failures():
        for t in grid:
            if lift.eval(t, t) != trunc_one(level, algebra):
                yield f"X_tt != 1 at t={t}"

    run("identity", identity_failures())

    def grouplike_failures():
        for s in grid:
            for t in grid:
                ok, defect = is_grouplike(lift.eval(s, t))
                if not ok:
                    first = next(iter(defect.terms))
                    yield f"not group-like at (s,t)=({s},{t}); defect term {first[0]} (x) {first[1]}"
                    return

    run("group-like", grouplike_failures())

    def character_failures():
        for s in grid:
            for t in grid:
                elt = lift.eval(s, t)
                for b1 in basis:
                    for b2 in basis:
                        if b1.grade + b2.grade > level:
                            continue
                        if lift.flavor == "branched":
                            lhs = elt.coeff(b1.mul(b2))
                        else:
                            # character with respect to the shuffle product
                            sh = shuffle_deconcat_instance(lift.dim).product_basis(b1, b2)
                            lhs = sum((c * elt.coeff(w) for w, c in sh), Fraction(0))
                        if lhs != elt.coeff(b1) * elt.coeff(b2):
                            yield f"character fails at ({s},{t}) on ({b1}, {b2})"
                            return

    run("character", character_failures())

    def chen_failures():
        for s in grid:
            for u in grid:
                for t in grid:
                    if lift.eval(s, u).mul(lift.eval(u, t)) != lift.eval(s, t):
                        yield f"Chen fails on (s,u,t)=({s},{u},{t})"
                        return

    run("chen", chen_failures())

    def inverse_failures():
        for s in grid:
            for t in grid:
                if lift.eval(t, s) != lift.eval(s, t).antipode():
                    yield f"inverse law fails on (s,t)=({s},{t})"
                    return

    run("inverse", inverse_failures())

    # empirical Hölder ratios (floats; a lower bound of the true sup)
    gamma = float(config.gamma)
    ratios = {b: 0.0 for b in basis}
    for i, s in enumerate(grid):
        for t in grid[i + 1 :]:
            dt = abs(float(t - s))
            if dt == 0:
                continue
            elt = lift.eval(s, t)
            for b in basis:
                c = abs(float(elt.coeff(b)))
                ratios[b] = max(ratios[b], c / dt ** (gamma * b.grade))
    report.holder_ratios = {str(b): r for b, r in ratios.items()}
    report.entries.append(
        RoughCheckEntry(
            "holder-finite",
            all(math.isfinite(r) for r in report.holder_ratios.values()),
        )
    )
    return report


def holder_norm_estimate(lift: RoughLift, grid: Sequence, gamma) -> float:
    """sup over grid pairs of ||X_st|| / |t-s|^gamma (empirical, float)."""
    grid = [to_fraction(u) for u in grid]
    gamma = float(to_fraction(gamma))
    best = 0.0
    for i, s in enumerate(grid):
        for t in grid[i + 1 :]:
            dt = abs(float(t - s))
            if dt == 0:
                continue
            best = max(best, homog_norm(lift.eval(s, t)) / dt**gamma)
    return best


# ---------------------------------------------------------------------------
# q_gamma


class QGammaSingularity(ValueError):
    pass


@functools.lru_cache(maxsize=None)
def _q_gamma_cached(f: Forest, gamma: Fraction) -> float:
    if f.grade * gamma <= 1:
        return 1.0
    if f.tree_count() > 1:
        out = 1.0
        for tree in f.trees():
            out *= _q_gamma_cached(tree.as_forest(), gamma)
        return out
    denom = 2.0 ** (float(gamma) * f.grade) - 2.0
    if denom == 0:
        raise QGammaSingularity(f"2^(gamma*|z|) = 2 at grade {f.grade}")
    total = 0.0
    for (l, r), c in ck_reduced_coproduct(f):
        total += float(c) * _q_gamma_cached(l, gamma) * _q_gamma_cached(r, gamma)
    return total / denom


def q_gamma(f: Forest, gamma) -> float:
    """Gubinelli growth weights: 1 at low grade, reduced-coproduct recursion above."""
    gamma = to_fraction(gamma)
    if not 0 < gamma < 1:
        raise ValueError("gamma must be in (0, 1)")
    return _q_gamma_cached(f, gamma)


# ---------------------------------------------------------------------------
# geometric <-> branched conversion


class KernelConditionError(ValueError):
    def __init__(self, witness_element: LinComb, s, t, value):
        self.witness_element = witness_element
        self.s, self.t, self.value = s, t, value
        super().__init__(
            f"kernel condition violated at (s,t)=({s},{t}): "
            f"lift({witness_element}) = {value} != 0"
        )


def geo_to_branched(lift: RoughLift) -> RoughLift:
    """Pull the word functional back along phi to a branched lift."""
    if lift.flavor != "geometric":
        raise ValueError("geo_to_branched needs a geometric lift")
    d, level = lift.dim, lift.level
    algebra = gl_instance(d)
    pool = forests_up_to(d, level)

    def evaluate(s: Fraction, t: Fraction) -> TruncatedElement:
        value = {}
        for f in pool:
            c = lift.value(s, t, phi(f))
            if c:
                value[f] = c
        return TruncatedElement.make(LinComb(value), level, algebra)

    return RoughLift("branched", d, level, evaluate)


def kernel_condition_witness(lift: RoughLift, grid: Sequence):
    """First violation of vanishing on ker(phi), or None."""
    grid = [to_fraction(u) for u in grid]
    kernel = phi_kernel_basis(lift.dim, lift.level)
    for s in grid:
        for t in grid:
            for x in kernel:
                v = lift.value(s, t, x)
                if v != 0:
                    return (x, s, t, v)
    return None


def branched_to_geo(lift: RoughLift, grid: Sequence | None = None) -> RoughLift:
    """Restrict a branched lift along the ladder embedding to a geometric one.

    If a grid is given, the integration-by-parts kernel condition is verified
    there first; a violation raises KernelConditionError with a witness.
    """
    if lift.flavor != "branched":
        raise ValueError("branched_to_geo needs a branched lift")
    if grid is not None:
        witness = kernel_condition_witness(lift, grid)
        if witness is not None:
            raise KernelConditionError(*witness)
    d, level = lift.dim, lift.level
    algebra = concat_deshuffle_instance(d)
    pool = words_up_to(d, level)

    def evaluate(s: Fraction, t: Fraction) -> TruncatedElement:
        value = {}
        for w in pool:
            c = lift.coeff(s, t, phi_hat(w))
            if c:
                value[w] = c
        return TruncatedElement.make(LinComb(value), level, algebra)

    return RoughLift("geometric", d, level, evaluate)
