"""Structure-group actions, models built from rough paths, and rough ODEs.

The model space for the rough ODE splits into a function-like sector spanned
by the unit and single trees and a dotted sector of forest-times-noise
symbols.  The Picard step iterates the abstract fixed point on symbol
coefficients (nilpotent, so it stabilizes) and advances the state by
evaluating the branched lift, which realizes the Heaviside-kernel convolution
exactly on piecewise-linear drivers.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .hopf_ck import ck_coproduct
from .linalg import LinComb, TensorComb
from .roughpath import PiecewiseLinearPath, RoughLift, branched_lift_fn, to_fraction
from .series import TruncatedElement, is_grouplike
from .symbols import EMPTY_FOREST, Forest, forests_up_to, trees


class ModelError(ValueError):
    pass


class SectorError(ValueError):
    pass


# ---------------------------------------------------------------------------
# symbols of the rough ODE model space


class DottedForest:
    """A forest juxtaposed with a noise symbol: the derivative-sector basis."""

    __slots__ = ("forest", "letter", "_hash")

    def __init__(self, forest: Forest, letter: int):
        if letter < 1:
            raise ValueError("noise letter must be >= 1")
        object.__setattr__(self, "forest", forest)
        object.__setattr__(self, "letter", int(letter))
        object.__setattr__(self, "_hash", hash(("dot", forest, letter)))

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("DottedForest is immutable")

    @property
    def grade(self) -> int:
        return self.forest.grade + 1

    def sort_key(self):
        return (self.grade, self.letter, self.forest.sort_key())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DottedForest)
            and self.letter == other.letter
            and self.forest == other.forest
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"DottedForest({self.forest!r}, {self.letter})"

    def __str__(self) -> str:
        if self.forest.is_empty():
            return f"Xi_{self.letter}"
        return f"{self.forest}*Xi_{self.letter}"


def homogeneity(b, gamma) -> Fraction:
    """Scaled homogeneity: gamma * grade on forests, gamma*(|z|+1) - 1 on dotted."""
    gamma = to_fraction(gamma)
    if isinstance(b, Forest):
        return gamma * b.grade
    if isinstance(b, DottedForest):
        return gamma * (b.forest.grade + 1) - 1
    raise SectorError(f"no homogeneity for {type(b).__name__}")


def in_function_sector(x: LinComb) -> bool:
    """True if supported on the unit and single trees."""
    return all(isinstance(b, Forest) and b.tree_count() <= 1 for b in x.support())


def in_dotted_sector(x: LinComb) -> bool:
    return all(isinstance(b, DottedForest) for b in x.support())


def abstract_integration(x: LinComb) -> LinComb:
    """Symbol-level antiderivative: z*Xi_i goes to the grafted tree |z|_i."""
    if not in_dotted_sector(x):
        raise SectorError("abstract integration is defined on the dotted sector")
    return x.map_basis(
        lambda b: LinComb.term(b.forest.graft(b.letter).as_forest())
    )


def derivative_map(x: LinComb) -> LinComb:
    """Left inverse of integration: the unit dies, |z|_i goes to z*Xi_i."""
    if not in_function_sector(x):
        raise SectorError("the derivative map is defined on the function-like sector")

    def on_basis(b: Forest) -> LinComb:
        if b.is_empty():
            return LinComb.zero()
        tree = b.items[0][0]
        return LinComb.term(DottedForest(tree.children, tree.label))

    return x.map_basis(on_basis)


def branched_comodule_coproduct(x: LinComb) -> TensorComb:
    return comodule_coproduct(x)


def comodule_coproduct(x: LinComb) -> TensorComb:
    """Coaction of the forest coalgebra on the model space (mixed tensor)."""
    acc = TensorComb.zero()
    for b, c in x:
        if isinstance(b, Forest):
            acc = acc + ck_coproduct(b).scale(c)
        elif isinstance(b, DottedForest):
            part = {}
            for (l, r), m in ck_coproduct(b.forest):
                part[(l, DottedForest(r, b.letter))] = m
            acc = acc + TensorComb(part, _clean=True).scale(c)
        else:
            raise SectorError(f"not a model-space symbol: {b!r}")
    return acc


# ---------------------------------------------------------------------------
# characters and structure actions


@dataclass(frozen=True)
class Character:
    """A multiplicative functional on forests, tabulated up to a grade bound."""

    values: dict
    grade_bound: int

    @classmethod
    def from_element(cls, g: TruncatedElement) -> "Character":
        ok, _ = is_grouplike(g)
        if not ok:
            raise ModelError("characters come from group-like elements")
        return cls(dict(g.value.terms), g.level)

    @classmethod
    def counit(cls) -> "Character":
        # total on every grade: 1 on the unit, 0 elsewhere
        return cls({EMPTY_FOREST: Fraction(1)}, sys.maxsize)

    def __call__(self, x) -> Fraction:
        if isinstance(x, LinComb):
            return sum((c * self(b) for b, c in x), Fraction(0))
        if x.grade > self.grade_bound and x not in self.values:
            raise ModelError(f"character table has no entry for grade {x.grade}")
        return self.values.get(x, Fraction(0))

    def multiplicativity_witness(self, d: int, max_grade: int):
        if self(EMPTY_FOREST) != 1:
            return "g(1) != 1"
        pool = forests_up_to(d, max_grade)
        for a in pool:
            for b in pool:
                if a.grade + b.grade > max_grade:
                    continue
                if self(a.mul(b)) != self(a) * self(b):
                    return f"g not multiplicative on ({a}, {b})"
        return None


def struct_action(g: Character, x: LinComb, flavor: str = "left") -> LinComb:
    """(g (x) id) Delta (left) or (id (x) g) Delta (right) on forests."""
    acc = LinComb.zero()
    for b, c in x:
        if not isinstance(b, Forest):
            raise SectorError("struct_action acts on forest combinations")
        cop = ck_coproduct(b)
        if flavor == "left":
            part = cop.fold(lambda l, r: LinComb.term(r, g(l)))
        elif flavor == "right":
            part = cop.fold(lambda l, r: LinComb.term(l, g(r)))
        else:
            raise ValueError(f"unknown flavor {flavor!r}")
        acc = acc + part.scale(c)
    return acc


def comodule_action(g: Character, x: LinComb) -> LinComb:
    """(g (x) id) applied to the comodule coproduct; acts on the full model space."""
    acc: dict = {}
    for (l, r), c in comodule_coproduct(x):
        v = c * g(l)
        if v:
            new = acc.get(r, 0) + v
            if new:
                acc[r] = new
            else:
                acc.pop(r, None)
    return LinComb(acc, _clean=True)


def structure_map_witness(
    gamma_map: Callable[[LinComb], LinComb], d: int, max_grade: int, gamma
) -> str | None:
    """Check the four structure-group properties of an endomap of the model space.

    Returns a witness string on the first violation, else None.  The map is
    applied to basis combinations of the function-like and dotted sectors.
    """
    gamma = to_fraction(gamma)
    y_basis = [EMPTY_FOREST] + [
        t.as_forest() for k in range(1, max_grade + 1) for t in trees(d, k)
    ]
    dot_basis = [
        DottedForest(f, i)
        for f in forests_up_to(d, max_grade - 1)
        for i in range(1, d + 1)
    ]

    def lowered(b, image: LinComb) -> bool:
        delta = image - LinComb.term(b)
        return all(homogeneity(b2, gamma) < homogeneity(b, gamma) for b2 in delta.support())

    for b in y_basis + dot_basis:
        image = gamma_map(LinComb.term(b))
        if not lowered(b, image):
            return f"(i) fails: Gamma {b} - {b} does not lower homogeneity"
    for b in y_basis:
        if not in_function_sector(gamma_map(LinComb.term(b))):
            return f"(ii) fails: function-like sector not preserved at {b}"
    for b in dot_basis:
        if not in_dotted_sector(gamma_map(LinComb.term(b))):
            return f"(ii) fails: dotted sector not preserved at {b}"
    for b in dot_basis:
        x = LinComb.term(b)
        defect = abstract_integration(gamma_map(x)) - gamma_map(abstract_integration(x))
        if any(not bb.is_empty() for bb in defect.support()):
            return f"(iii) fails: integration commutator not a multiple of 1 at {b}"
    for a in y_basis:
        for b in dot_basis:
            if a.grade + b.forest.grade > max_grade - 1:
                continue
            prod = LinComb.term(DottedForest(a.mul(b.forest), b.letter))
            lhs = gamma_map(prod)
            ga = gamma_map(LinComb.term(a))
            gb = gamma_map(LinComb.term(b))
            rhs: dict = {}
            for fa, ca in ga:
                for db, cb in gb:
                    key = DottedForest(fa.mul(db.forest), db.letter)
                    new = rhs.get(key, 0) + ca * cb
                    if new:
                        rhs[key] = new
                    else:
                        rhs.pop(key, None)
            if lhs != LinComb(rhs, _clean=True):
                return f"(iv) fails: Gamma not multiplicative on ({a}, {b})"
    return None


# ---------------------------------------------------------------------------
# models from lifts


@dataclass
class Model:
    """The (evaluation, translation) pair realized by a branched rough path."""

    lift: RoughLift
    gamma: Fraction
    level: int

    def pi(self, s, x: LinComb, t) -> Fraction:
        """Evaluation map: the lift functional applied at (s, t)."""
        return self.lift.value(s, t, x)

    def character(self, s, t) -> Character:
        return Character.from_element(self.lift.eval(s, t))

    def gamma_st(self, s, t) -> Callable[[LinComb], LinComb]:
        g = Character.from_element(self.lift.eval(t, s))
        return lambda x: struct_action(g, x, "left")

    def gamma_st_model(self, s, t) -> Callable[[LinComb], LinComb]:
        """Translation on the full model space, through the comodule coaction."""
        g = Character.from_element(self.lift.eval(t, s))
        return lambda x: comodule_action(g, x)


def model_from_lift(lift: RoughLift, gamma, grid: Sequence | None = None) -> Model:
    """Wrap a branched lift as a model, optionally verifying axioms on a grid."""
    gamma = to_fraction(gamma)
    if lift.flavor != "branched":
        raise ModelError("models are built from branched lifts")
    if grid is not None:
        from .roughpath import RoughPathConfig, check_rough_axioms

        cfg = RoughPathConfig.make(gamma, "branched")
        report = check_rough_axioms(lift, cfg, grid)
        if not report.passed:
            bad = [e for e in report.entries if not e.ok]
            raise ModelError(f"lift fails rough-path axioms: {bad[0].witness}")
    return Model(lift=lift, gamma=gamma, level=lift.level)


@dataclass
class ModelCheckEntry:
    law: str
    ok: bool
    witness: str = ""


@dataclass
class ModelReport:
    entries: list[ModelCheckEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.ok for e in self.entries)

    def summary(self) -> str:
        lines = ["model check"]
        for e in self.entries:
            status = "ok" if e.ok else "FAIL"
            line = f"  {e.law}: {status}"
            if not e.ok:
                line += f"  witness: {e.witness}"
            lines.append(line)
        return "\n".join(lines)


def check_model(model: Model, grid: Sequence, max_grade: int | None = None) -> ModelReport:
    """Exact verification of the model identities on all grid tuples."""
    grid = [to_fraction(u) for u in grid]
    max_grade = model.level if max_grade is None else max_grade
    basis = forests_up_to(model.lift.dim, max_grade)
    report = ModelReport()

    def run(law: str, failures_iter):
        witness = next(failures_iter, None)
        report.entries.append(ModelCheckEntry(law, witness is None, witness or ""))

    def evaluation_failures():
        for s in grid:
            if model.pi(s, LinComb.term(EMPTY_FOREST), grid[0]) != 1:
                yield f"Pi_s 1 != 1 at s={s}"

    run("unit-evaluation", evaluation_failures())

    def translation_failures():
        # Pi_u Gamma_us = Pi_s, tested coefficient-wise on the basis
        for s in grid:
            for u in grid:
                gm = model.gamma_st(u, s)
                for t in grid:
                    for b in basis:
                        lhs = model.pi(u, gm(LinComb.term(b)), t)
                        rhs = model.pi(s, LinComb.term(b), t)
                        if lhs != rhs:
                            yield f"Pi_u Gamma_us != Pi_s at (s,u,t)=({s},{u},{t}), {b}"
                            return

    run("evaluation-translation", translation_failures())

    def cocycle_failures():
        for s in grid:
            for u in grid:
                for t in grid:
                    g_su, g_ut, g_st = (
                        model.gamma_st(s, u),
                        model.gamma_st(u, t),
                        model.gamma_st(s, t),
                    )
                    for b in basis:
                        if g_su(g_ut(LinComb.term(b))) != g_st(LinComb.term(b)):
                            yield f"cocycle fails at ({s},{u},{t}) on {b}"
                            return

    run("cocycle", cocycle_failures())

    def intertwining_failures():
        # Delta Gamma = (Gamma (x) id) Delta
        for s in grid:
            for t in grid:
                gm = model.gamma_st(s, t)
                for b in basis:
                    lhs = TensorComb.zero()
                    for b2, c in gm(LinComb.term(b)):
                        lhs = lhs + ck_coproduct(b2).scale(c)
                    rhs = ck_coproduct(b).map_left(lambda l: gm(LinComb.term(l)))
                    if lhs != rhs:
                        yield f"intertwining fails at ({s},{t}) on {b}"
                        return

    run("coproduct-intertwining", intertwining_failures())

    def grading_failures():
        for s in grid:
            for t in grid:
                gm = model.gamma_st(s, t)
                for b in basis:
                    delta = gm(LinComb.term(b)) - LinComb.term(b)
                    if any(b2.grade >= b.grade for b2 in delta.support() if b.grade > 0):
                        yield f"Gamma does not lower grade at ({s},{t}) on {b}"
                        return

    run("grade-lowering", grading_failures())
    return report


# ---------------------------------------------------------------------------
# vector fields


class ScalarField:
    """A scalar function of the solution with derivatives up to some order.

    ``derivatives`` is either a finite table [f, f', f'', ...] or a maker
    function n -> n-th derivative for closed-form fields.
    """

    def __init__(self, derivatives, order: int | None = None, name: str = "f"):
        if callable(derivatives):
            self._maker = derivatives
            self._order = order
        else:
            stack = list(derivatives)
            self._maker = lambda n: stack[n]
            self._order = len(stack) - 1 if order is None else order
        self.name = name

    @property
    def order(self) -> int | None:
        """Highest available derivative order, None for unlimited."""
        return self._order

    def derivative(self, n: int) -> Callable:
        if self._order is not None and n > self._order:
            raise ModelError(
                f"vector field {self.name!r} offers derivatives up to order "
                f"{self._order}, needed {n}"
            )
        return self._maker(n)

    def __call__(self, y):
        return self._maker(0)(y)


def constant_field(c) -> ScalarField:
    c = c if isinstance(c, (int, Fraction)) else float(c)

    def deriv(n):
        return (lambda y: c) if n == 0 else (lambda y: 0)

    return ScalarField(deriv, name=f"const:{c}")


def identity_field() -> ScalarField:
    def deriv(n):
        if n == 0:
            return lambda y: y
        if n == 1:
            return lambda y: 1
        return lambda y: 0

    return ScalarField(deriv, name="linear")


def polynomial_field(*coeffs) -> ScalarField:
    cs = [Fraction(c) if isinstance(c, (int, str)) else c for c in coeffs]

    def deriv(n):
        def ev(y):
            total = 0
            for k in range(n, len(cs)):
                fall = 1
                for j in range(k, k - n, -1):
                    fall *= j
                total = total + cs[k] * fall * y ** (k - n)
            return total

        return ev

    return ScalarField(deriv, name="poly:" + ",".join(str(c) for c in coeffs))


def sine_field() -> ScalarField:
    cycle = [math.sin, math.cos, lambda y: -math.sin(y), lambda y: -math.cos(y)]

    def deriv(n):
        return lambda y: cycle[n % 4](float(y))

    return ScalarField(deriv, name="sin")


@dataclass(frozen=True)
class VectorField:
    components: tuple[ScalarField, ...]

    @classmethod
    def uniform(cls, f: ScalarField, d: int) -> "VectorField":
        return cls(tuple([f] * d))

    @classmethod
    def from_spec(cls, spec: str, d: int) -> "VectorField":
        if spec.startswith("const"):
            value = spec.split(":", 1)[1] if ":" in spec else "1"
            return cls.uniform(constant_field(Fraction(value)), d)
        if spec == "linear":
            return cls.uniform(identity_field(), d)
        if spec.startswith("poly:"):
            coeffs = [Fraction(c) for c in spec.split(":", 1)[1].split(",")]
            return cls.uniform(polynomial_field(*coeffs), d)
        if spec == "sin":
            return cls.uniform(sine_field(), d)
        raise ValueError(f"unknown vector-field spec {spec!r}")

    @property
    def dim(self) -> int:
        return len(self.components)


# ---------------------------------------------------------------------------
# composition with a function (truncated Taylor series in the sector)


def _forest_mul_lin(x: LinComb, y: LinComb, max_grade: int) -> LinComb:
    acc: dict = {}
    for a, ca in x:
        for b, cb in y:
            if a.grade + b.grade > max_grade:
                continue
            key = a.mul(b)
            new = acc.get(key, 0) + ca * cb
            if new:
                acc[key] = new
            else:
                acc.pop(key, None)
    return LinComb(acc, _clean=True)


def compose_with_function(
    Y: LinComb, f: ScalarField, alpha, gamma, xi: int | None = None
) -> LinComb:
    """Truncated Taylor composition f(Y) on the function-like sector.

    The output keeps coefficients of homogeneity below alpha; with ``xi``
    given, the result is multiplied by the noise symbol (homogeneity below
    alpha + gamma - 1).
    """
    alpha, gamma = to_fraction(alpha), to_fraction(gamma)
    if not in_function_sector(Y):
        raise SectorError("composition needs a function-like argument")
    order = int(alpha / gamma)
    if f.order is not None and f.order < order:
        raise ModelError(
            f"insufficient derivative order: need {order}, have {f.order}"
        )
    max_grade = max((k for k in range(order + 1) if gamma * k < alpha), default=0)
    y0 = Y.coeff(EMPTY_FOREST)
    pure = Y - LinComb.term(EMPTY_FOREST, y0) if y0 else Y
    acc = LinComb.term(EMPTY_FOREST, f.derivative(0)(y0))
    power = LinComb.term(EMPTY_FOREST)
    factorial = 1
    for n in range(1, order + 1):
        power = _forest_mul_lin(power, pure, max_grade)
        if power.is_zero():
            break
        factorial *= n
        coeff = f.derivative(n)(y0) * Fraction(1, factorial)
        scaled = {b: c * coeff for b, c in power.terms.items() if c * coeff != 0}
        acc = acc + LinComb(scaled, _clean=True)
    acc = acc.truncate(max_grade)
    if xi is None:
        return acc
    return LinComb(
        {DottedForest(b, xi): c for b, c in acc.terms.items()}, _clean=True
    )


# ---------------------------------------------------------------------------
# Picard solver


def picard_solve(
    path: PiecewiseLinearPath,
    field: VectorField,
    y0,
    gamma,
    level: int,
    step,
    T=None,
    lift: RoughLift | None = None,
) -> list[tuple[Fraction, object]]:
    """Step-local Picard iteration for dy = sum_i f_i(y) dx^i.

    Within each step the abstract fixed point is iterated on symbol
    coefficients frozen at the step base; nilpotency makes it stationary in at
    most level+1 sweeps.  The state is then advanced by evaluating the
    coefficients against the exact branched lift (translation to the next base
    point), which realizes the kernel convolution without quadrature.
    """
    gamma = to_fraction(gamma)
    if not 0 < gamma < 1:
        raise ValueError("gamma must be in (0, 1)")
    if level < 1:
        raise ValueError("level must be >= 1")
    step = to_fraction(step)
    if step <= 0:
        raise ValueError("step must be positive")
    if field.dim != path.dim:
        raise ValueError(f"vector field has {field.dim} components, path dim {path.dim}")
    for comp in field.components:
        if comp.order is not None and comp.order < level - 1:
            raise ModelError(
                f"insufficient derivative order: need {level - 1}, have {comp.order}"
            )
    if lift is None:
        lift = branched_lift_fn(path, level)
    start = path.times[0]
    end = path.times[-1] if T is None else to_fraction(T)
    if end <= start:
        raise ValueError("T must exceed the path start time")

    samples: list[tuple[Fraction, object]] = [(start, y0)]
    s, y = start, y0
    while s < end:
        if isinstance(y, float) and not math.isfinite(y):
            raise ModelError(f"non-finite state at t={float(s)}")
        t = min(s + step, end)
        try:
            coeffs = _picard_step_coefficients(field, y, level)
            elt = lift.eval(s, t)
            y_next = 0
            for f, c in coeffs.items():
                y_next = y_next + c * elt.coeff(f)
        except OverflowError:
            raise ModelError(f"non-finite state at t={float(t)}") from None
        if isinstance(y_next, float) and not math.isfinite(y_next):
            raise ModelError(f"non-finite state at t={float(t)}")
        y_next = _demote_if_huge(y_next)
        samples.append((t, y_next))
        s, y = t, y_next
    return samples


_EXACT_STATE_BITS = 1 << 16


def _demote_if_huge(y):
    """Fall back to floats once exact states outgrow a fixed bit budget.

    Affine dynamics keep denominators growing linearly and stay exact; truly
    nonlinear ones would compound them exponentially, so the state degrades to
    the approximate scalar mode instead.
    """
    if isinstance(y, Fraction):
        size = y.numerator.bit_length() + y.denominator.bit_length()
        if size > _EXACT_STATE_BITS:
            try:
                return float(y)
            except OverflowError:
                raise ModelError("state overflows the floating range") from None
    return y


def _picard_step_coefficients(field: VectorField, y_base, level: int) -> dict:
    """Fixed point of c -> y 1 + I(sum_i f_i(c) Xi_i) on symbol coefficients."""
    derivs = []
    for comp in field.components:
        derivs.append([comp.derivative(n)(y_base) for n in range(level)])

    coeffs: dict = {EMPTY_FOREST: y_base}
    for _sweep in range(level + 1):
        new: dict = {EMPTY_FOREST: y_base}
        pure = {f: c for f, c in coeffs.items() if not f.is_empty()}
        for i, comp_derivs in enumerate(derivs, start=1):
            taylor = _taylor_on_symbols(comp_derivs, pure, level - 1)
            for f, c in taylor.items():
                tree = f.graft(i).as_forest()
                prev = new.get(tree, 0)
                new[tree] = prev + c
        new = {f: c for f, c in new.items() if c != 0 or f.is_empty()}
        if new == coeffs:
            return coeffs
        coeffs = new
    raise ModelError("Picard iteration did not stabilize in level + 1 sweeps")


def _taylor_on_symbols(comp_derivs: list, pure: dict, max_grade: int) -> dict:
    """sum_n f^(n)(y)/n! * (pure part)^n, truncated at max_grade."""
    acc: dict = {EMPTY_FOREST: comp_derivs[0]}
    power: dict = {EMPTY_FOREST: 1}
    factorial = 1
    for n in range(1, len(comp_derivs)):
        nxt: dict = {}
        for a, ca in power.items():
            for b, cb in pure.items():
                if a.grade + b.grade > max_grade:
                    continue
                key = a.mul(b)
                nxt[key] = nxt.get(key, 0) + ca * cb
        power = nxt
        if not power:
            break
        factorial *= n
        coeff = comp_derivs[n]
        if coeff == 0:
            continue
        inv_fact = Fraction(1, factorial)
        for f, c in power.items():
            acc[f] = acc.get(f, 0) + coeff * c * inv_fact
    return {f: c for f, c in acc.items() if c != 0}
