"""Generic connected-graded Hopf algebra machinery and three concrete instances.

An instance bundles a product and coproduct on a canonical basis together with
the counit, unit, grading and basis enumeration.  Antipodes come either from a
closed form or from the generic recursion on the reduced coproduct, which is
total on connected graded instances.
"""
from __future__ import annotations

import functools
import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .linalg import LinComb, TensorComb
from .symbols import (
    EMPTY_WORD,
    MultiIndex,
    Word,
    check_dimension,
    multi_indices,
    multiindex_binomial,
    words,
)


class GradeBoundExceeded(ValueError):
    pass


# ---------------------------------------------------------------------------
# word combinatorics on raw tuples


def shuffle_permutations(i: int, n: int) -> list[tuple[int, ...]]:
    """The (i, n-i) shuffles of S_n in one-line notation, lexicographically.

    sigma is in the set iff sigma(1) < ... < sigma(i) and
    sigma(i+1) < ... < sigma(n).
    """
    out = []
    for left_vals in itertools.combinations(range(1, n + 1), i):
        right_vals = tuple(v for v in range(1, n + 1) if v not in left_vals)
        out.append(left_vals + right_vals)
    return sorted(out)


def shuffle_tuples(u: tuple, v: tuple) -> dict[tuple, int]:
    """Multiset of interleavings of u and v preserving both orders."""
    out: dict[tuple, int] = {}
    n = len(u) + len(v)
    for positions in itertools.combinations(range(n), len(u)):
        word: list = [None] * n
        for letter, p in zip(u, positions):
            word[p] = letter
        rest = iter(v)
        for p in range(n):
            if word[p] is None:
                word[p] = next(rest)
        key = tuple(word)
        out[key] = out.get(key, 0) + 1
    return out


def deshuffle_tuples(w: tuple) -> dict[tuple[tuple, tuple], int]:
    """All (subsequence, complement) splits of w, with multiplicities."""
    out: dict[tuple[tuple, tuple], int] = {}
    n = len(w)
    for r in range(n + 1):
        for subset in itertools.combinations(range(n), r):
            chosen = frozenset(subset)
            left = tuple(w[i] for i in range(n) if i in chosen)
            right = tuple(w[i] for i in range(n) if i not in chosen)
            key = (left, right)
            out[key] = out.get(key, 0) + 1
    return out


def deconcat_tuples(w: tuple) -> list[tuple[tuple, tuple]]:
    return [(w[:i], w[i:]) for i in range(len(w) + 1)]


# ---------------------------------------------------------------------------
# instance definition


@dataclass(frozen=True, eq=False)
class HopfInstance:
    """A connected graded Hopf algebra given by structure maps on the basis."""

    name: str
    dim: int
    unit: object
    product_basis: Callable[[object, object], LinComb]
    coproduct_basis: Callable[[object], TensorComb]
    basis: Callable[[int], tuple]
    antipode_closed_basis: Callable[[object], LinComb] | None = None
    _memo: dict = field(default_factory=dict, repr=False)

    def counit(self, b) -> Fraction:
        return Fraction(1) if b.grade == 0 else Fraction(0)

    def counit_lin(self, x: LinComb) -> Fraction:
        return x.coeff(self.unit)

    def one(self) -> LinComb:
        return LinComb.term(self.unit)

    def product(self, x: LinComb, y: LinComb, max_grade: int | None = None) -> LinComb:
        """Bilinear product; pairs beyond max_grade are skipped (grading)."""
        acc: dict = {}
        for b1, c1 in x:
            for b2, c2 in y:
                if max_grade is not None and b1.grade + b2.grade > max_grade:
                    continue
                c = c1 * c2
                for b, c3 in self.product_basis(b1, b2):
                    new = acc.get(b, 0) + c * c3
                    if new:
                        acc[b] = new
                    else:
                        acc.pop(b, None)
        return LinComb(acc, _clean=True)

    def coproduct(self, x: LinComb) -> TensorComb:
        acc = TensorComb.zero()
        for b, c in x:
            acc = acc + self.coproduct_basis(b).scale(c)
        return acc

    def reduced_coproduct(self, x: LinComb) -> TensorComb:
        acc = self.coproduct(x)
        acc = acc - TensorComb.of(self.one(), x)
        acc = acc - TensorComb.of(x, self.one())
        return acc

    def multiply_tensors(self, a: TensorComb, b: TensorComb) -> TensorComb:
        """Slot-wise product on tensors, (x1 (x) x2)(y1 (x) y2) = x1y1 (x) x2y2."""
        acc: dict = {}
        for (l1, r1), c1 in a:
            for (l2, r2), c2 in b:
                part = TensorComb.of(self.product_basis(l1, l2), self.product_basis(r1, r2))
                for key, c in part:
                    new = acc.get(key, 0) + c1 * c2 * c
                    if new:
                        acc[key] = new
                    else:
                        acc.pop(key, None)
        return TensorComb(acc, _clean=True)

    # -- antipodes ---------------------------------------------------------

    def antipode_basis(self, b, side: str = "right") -> LinComb:
        """Antipode by the reduced-coproduct recursion; memoized per basis element."""
        key = (b, side)
        memo = self._memo.setdefault("antipode", {})
        if key in memo:
            return memo[key]
        if b.grade == 0:
            out = LinComb.term(b)
        else:
            red = self.reduced_coproduct(LinComb.term(b))
            if side == "right":
                # S h = -h - m(id (x) S) reduced(h)
                rest = red.fold(
                    lambda l, r: self.product(LinComb.term(l), self.antipode_basis(r, side))
                )
            elif side == "left":
                rest = red.fold(
                    lambda l, r: self.product(self.antipode_basis(l, side), LinComb.term(r))
                )
            else:
                raise ValueError(f"unknown antipode side {side!r}")
            out = -LinComb.term(b) - rest
        memo[key] = out
        return out

    def antipode(self, x: LinComb, side: str = "right") -> LinComb:
        return x.map_basis(lambda b: self.antipode_basis(b, side))

    def antipode_closed(self, x: LinComb) -> LinComb:
        if self.antipode_closed_basis is None:
            raise ValueError(f"no closed-form antipode for instance {self.name!r}")
        return x.map_basis(self.antipode_closed_basis)

    def basis_up_to(self, n: int) -> tuple:
        out: list = []
        for k in range(n + 1):
            out.extend(self.basis(k))
        return tuple(out)


def antipode_recursive(instance: HopfInstance, x: LinComb, side: str = "right") -> LinComb:
    return instance.antipode(x, side)


def antipode_closed(instance: HopfInstance, x: LinComb) -> LinComb:
    return instance.antipode_closed(x)


def reduced_coproduct(instance: HopfInstance, x: LinComb) -> TensorComb:
    return instance.reduced_coproduct(x)


def convolution(
    S, T, instance: HopfInstance, grade_bound: int | None = None
) -> Callable[[LinComb], LinComb]:
    """Convolution S * T = m (S (x) T) Delta on linear endomaps.

    S and T are either callables basis -> LinComb or finite tables (dicts);
    for tables, a missing key raises GradeBoundExceeded.
    """

    def as_map(M):
        if isinstance(M, dict):
            def lookup(b):
                try:
                    return M[b]
                except KeyError:
                    raise GradeBoundExceeded(f"endomap table has no entry for {b}")
            return lookup
        return M

    Sm, Tm = as_map(S), as_map(T)

    def conv(x: LinComb) -> LinComb:
        if grade_bound is not None and x.max_grade() > grade_bound:
            raise GradeBoundExceeded(
                f"input grade {x.max_grade()} exceeds bound {grade_bound}"
            )
        return instance.coproduct(x).fold(lambda l, r: instance.product(Sm(l), Tm(r)))

    return conv


def identity_map(b) -> LinComb:
    return LinComb.term(b)


def unit_counit_map(instance: HopfInstance) -> Callable[[object], LinComb]:
    def ue(b):
        return instance.one().scale(instance.counit(b))

    return ue


# ---------------------------------------------------------------------------
# concrete instances


@functools.lru_cache(maxsize=None)
def poly_instance(d: int) -> HopfInstance:
    """Polynomials X^n with pointwise product and binomial coproduct."""
    check_dimension(d)
    unit = MultiIndex((0,) * d)

    def product(n: MultiIndex, m: MultiIndex) -> LinComb:
        return LinComb.term(n + m)

    @functools.lru_cache(maxsize=None)
    def coproduct(n: MultiIndex) -> TensorComb:
        terms = {}
        ranges = [range(e + 1) for e in n.entries]
        for m_entries in itertools.product(*ranges):
            m = MultiIndex(m_entries)
            terms[(m, n - m)] = Fraction(multiindex_binomial(n, m))
        return TensorComb(terms, _clean=True)

    def antipode(n: MultiIndex) -> LinComb:
        return LinComb.term(n, Fraction(-1) ** n.grade)

    return HopfInstance(
        name="poly",
        dim=d,
        unit=unit,
        product_basis=product,
        coproduct_basis=coproduct,
        basis=lambda k: multi_indices(d, k),
        antipode_closed_basis=antipode,
    )


def _word_antipode(w: Word) -> LinComb:
    return LinComb.term(w.reverse(), Fraction(-1) ** w.grade)


@functools.lru_cache(maxsize=None)
def concat_deshuffle_instance(d: int) -> HopfInstance:
    """Words with concatenation product and deshuffle coproduct."""
    check_dimension(d)

    def product(u: Word, v: Word) -> LinComb:
        return LinComb.term(u.concat(v))

    @functools.lru_cache(maxsize=None)
    def coproduct(w: Word) -> TensorComb:
        return TensorComb(
            {
                (Word(l), Word(r)): Fraction(m)
                for (l, r), m in deshuffle_tuples(w.letters).items()
            },
            _clean=True,
        )

    return HopfInstance(
        name="concat_deshuffle",
        dim=d,
        unit=EMPTY_WORD,
        product_basis=product,
        coproduct_basis=coproduct,
        basis=lambda k: words(d, k),
        antipode_closed_basis=_word_antipode,
    )


@functools.lru_cache(maxsize=None)
def shuffle_deconcat_instance(d: int) -> HopfInstance:
    """Words with shuffle product and deconcatenation coproduct."""
    check_dimension(d)

    @functools.lru_cache(maxsize=None)
    def product(u: Word, v: Word) -> LinComb:
        return LinComb(
            {Word(w): Fraction(m) for w, m in shuffle_tuples(u.letters, v.letters).items()}
        )

    def coproduct(w: Word) -> TensorComb:
        return TensorComb(
            {(Word(l), Word(r)): Fraction(1) for l, r in deconcat_tuples(w.letters)},
            _clean=True,
        )

    return HopfInstance(
        name="shuffle_deconcat",
        dim=d,
        unit=EMPTY_WORD,
        product_basis=product,
        coproduct_basis=coproduct,
        basis=lambda k: words(d, k),
        antipode_closed_basis=_word_antipode,
    )


def shuffle(u: Word, v: Word) -> LinComb:
    d = max([1, *u.letters, *v.letters])
    return shuffle_deconcat_instance(d).product_basis(u, v)


def deshuffle(w: Word) -> TensorComb:
    d = max([1, *w.letters])
    return concat_deshuffle_instance(d).coproduct_basis(w)


def concat(u: Word, v: Word) -> LinComb:
    return LinComb.term(u.concat(v))


def deconcat(w: Word) -> TensorComb:
    d = max([1, *w.letters])
    return shuffle_deconcat_instance(d).coproduct_basis(w)


def poly_product(n: MultiIndex, m: MultiIndex) -> LinComb:
    return LinComb.term(n + m)


def poly_coproduct(n: MultiIndex) -> TensorComb:
    return poly_instance(n.dim).coproduct_basis(n)


def get_instance(name: str, d: int) -> HopfInstance:
    """Look up an instance by CLI name: poly, shuffle, concat, ck, gl."""
    if name in ("poly",):
        return poly_instance(d)
    if name in ("shuffle", "shuffle_deconcat"):
        return shuffle_deconcat_instance(d)
    if name in ("concat", "concat_deshuffle"):
        return concat_deshuffle_instance(d)
    if name in ("ck", "gl"):
        from . import hopf_ck

        return hopf_ck.ck_instance(d) if name == "ck" else hopf_ck.gl_instance(d)
    raise ValueError(f"unknown algebra {name!r}")


# ---------------------------------------------------------------------------
# axiom checking


@dataclass
class CheckEntry:
    law: str
    ok: bool
    witness: str = ""


@dataclass
class AxiomReport:
    instance: str
    max_grade: int
    entries: list[CheckEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.ok for e in self.entries)

    def failures(self) -> list[CheckEntry]:
        return [e for e in self.entries if not e.ok]

    def summary(self) -> str:
        lines = [f"axiom check: {self.instance}, grade <= {self.max_grade}"]
        for e in self.entries:
            status = "ok" if e.ok else "FAIL"
            line = f"  {e.law}: {status}"
            if not e.ok:
                line += f"  witness: {e.witness}"
            lines.append(line)
        return "\n".join(lines)


def _triple_left(instance: HopfInstance, x: LinComb) -> dict:
    """(Delta (x) id) Delta x as a dict over basis triples."""
    acc: dict = {}
    for (l, r), c in instance.coproduct(x):
        for (l1, l2), c2 in instance.coproduct_basis(l):
            key = (l1, l2, r)
            new = acc.get(key, 0) + c * c2
            if new:
                acc[key] = new
            else:
                acc.pop(key, None)
    return acc


def _triple_right(instance: HopfInstance, x: LinComb) -> dict:
    acc: dict = {}
    for (l, r), c in instance.coproduct(x):
        for (r1, r2), c2 in instance.coproduct_basis(r):
            key = (l, r1, r2)
            new = acc.get(key, 0) + c * c2
            if new:
                acc[key] = new
            else:
                acc.pop(key, None)
    return acc


def random_lincomb(rng: random.Random, basis_pool: tuple, max_terms: int = 3) -> LinComb:
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        b = rng.choice(basis_pool)
        terms[b] = terms.get(b, Fraction(0)) + Fraction(rng.randint(-9, 9), rng.randint(1, 9))
    return LinComb(terms)


def check_axioms(
    instance: HopfInstance, max_grade: int, samples: int = 500, seed: int = 0
) -> AxiomReport:
    """Exact verification of the Hopf axioms up to a grade bound.

    Deterministic part: every law on all basis tuples whose total grade stays
    within ``max_grade`` (products and coproducts are graded, so the laws are
    grade-local).  Randomized part: ``samples`` seeded random combinations.
    """
    if max_grade < 1:
        raise ValueError("max_grade must be >= 1")
    report = AxiomReport(instance=instance.name, max_grade=max_grade)
    rng = random.Random(seed)
    one = instance.one()

    by_grade = {k: instance.basis(k) for k in range(max_grade + 1)}
    all_basis = [b for k in range(max_grade + 1) for b in by_grade[k]]

    def lin(b) -> LinComb:
        return LinComb.term(b)

    def run(law: str, failures_iter):
        witness = next(failures_iter, None)
        report.entries.append(CheckEntry(law, witness is None, witness or ""))

    # unit and counit
    def unit_failures():
        for b in all_basis:
            x = lin(b)
            if instance.product(one, x) != x or instance.product(x, one) != x:
                yield f"unit law fails on {b}"

    run("unit", unit_failures())

    def counit_failures():
        for b in all_basis:
            x = lin(b)
            cop = instance.coproduct(x)
            left = cop.fold(lambda l, r: lin(r).scale(instance.counit(l)))
            right = cop.fold(lambda l, r: lin(l).scale(instance.counit(r)))
            if left != x or right != x:
                yield f"counit property fails on {b}"
        if instance.counit_lin(one) != 1:
            yield "counit(1) != 1"

    run("counit", counit_failures())

    # grading
    def grading_failures():
        for b1 in all_basis:
            for b2 in all_basis:
                if b1.grade + b2.grade > max_grade:
                    continue
                prod = instance.product_basis(b1, b2)
                if any(b.grade != b1.grade + b2.grade for b, _ in prod):
                    yield f"product not graded on ({b1}, {b2})"
        for b in all_basis:
            for (l, r), _ in instance.coproduct_basis(b):
                if l.grade + r.grade != b.grade:
                    yield f"coproduct not graded on {b}"

    run("grading", grading_failures())

    # associativity on basis triples within the bound
    def assoc_failures():
        for b1, b2, b3 in _bounded_triples(by_grade, max_grade):
            lhs = instance.product(instance.product_basis(b1, b2), lin(b3))
            rhs = instance.product(lin(b1), instance.product_basis(b2, b3))
            if lhs != rhs:
                yield f"associativity fails on ({b1}, {b2}, {b3})"

    run("associativity", assoc_failures())

    # coassociativity per basis element
    def coassoc_failures():
        for b in all_basis:
            if _triple_left(instance, lin(b)) != _triple_right(instance, lin(b)):
                yield f"coassociativity fails on {b}"

    run("coassociativity", coassoc_failures())

    # compatibility 1-3
    def compat_failures():
        if instance.coproduct(one) != TensorComb.term(instance.unit, instance.unit):
            yield "Delta(1) != 1 (x) 1"
        for b1, b2 in _bounded_pairs(by_grade, max_grade):
            prod = instance.product_basis(b1, b2)
            lhs = instance.coproduct(prod)
            rhs = instance.multiply_tensors(
                instance.coproduct_basis(b1), instance.coproduct_basis(b2)
            )
            if lhs != rhs:
                yield f"Delta is not an algebra morphism on ({b1}, {b2})"
            if instance.counit_lin(prod) != instance.counit(b1) * instance.counit(b2):
                yield f"counit is not multiplicative on ({b1}, {b2})"

    run("compatibility", compat_failures())

    # antipode law, both recursions, closed form
    def antipode_failures():
        for b in all_basis:
            x = lin(b)
            target = one.scale(instance.counit(b))
            cop = instance.coproduct(x)
            left = cop.fold(lambda l, r: instance.product(instance.antipode_basis(l), lin(r)))
            right = cop.fold(lambda l, r: instance.product(lin(l), instance.antipode_basis(r)))
            if left != target or right != target:
                yield f"antipode law fails on {b}"
            if instance.antipode_basis(b, "left") != instance.antipode_basis(b, "right"):
                yield f"left/right antipode recursions disagree on {b}"
            if instance.antipode_closed_basis is not None:
                if instance.antipode_closed(x) != instance.antipode(x):
                    yield f"closed-form antipode disagrees on {b}"

    run("antipode", antipode_failures())

    # randomized combinations
    def random_failures():
        pool = tuple(b for b in all_basis if b.grade <= max(1, max_grade // 2))
        for i in range(samples):
            x = random_lincomb(rng, pool)
            y = random_lincomb(rng, pool)
            z = random_lincomb(rng, pool)
            which = i % 3
            if which == 0:
                lhs = instance.product(instance.product(x, y), z)
                rhs = instance.product(x, instance.product(y, z))
                if lhs != rhs:
                    yield f"random associativity failure (sample {i})"
            elif which == 1:
                lhs = instance.coproduct(instance.product(x, y))
                rhs = instance.multiply_tensors(instance.coproduct(x), instance.coproduct(y))
                if lhs != rhs:
                    yield f"random compatibility failure (sample {i})"
            else:
                cop = instance.coproduct(x)
                left = cop.fold(
                    lambda l, r: instance.product(instance.antipode_basis(l), lin(r))
                )
                if left != one.scale(instance.counit_lin(x)):
                    yield f"random antipode failure (sample {i})"

    run("random-combinations", random_failures())
    return report


def _bounded_pairs(by_grade: dict, max_grade: int):
    for g1 in range(max_grade + 1):
        for g2 in range(max_grade + 1 - g1):
            for b1 in by_grade[g1]:
                for b2 in by_grade[g2]:
                    yield b1, b2


def _bounded_triples(by_grade: dict, max_grade: int):
    for g1 in range(max_grade + 1):
        for g2 in range(max_grade + 1 - g1):
            for g3 in range(max_grade + 1 - g1 - g2):
                for b1 in by_grade[g1]:
                    for b2 in by_grade[g2]:
                        for b3 in by_grade[g3]:
                            yield b1, b2, b3
