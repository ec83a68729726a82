"""Connes-Kreimer Hopf algebra on decorated forests and its Grossman-Larson dual.

The coproduct comes from the structural recursion; the admissible-cut and
split representations are independent code paths used to cross-check it and
the antipode.  The dual product is computed by grafting candidate forests and
reading exact multiplicities back from the coproduct.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .hopf_core import HopfInstance, shuffle_tuples, deconcat_tuples
from .linalg import LinComb, TensorComb
from .symbols import EMPTY_FOREST, Forest, Tree, Word, check_dimension, forests


# ---------------------------------------------------------------------------
# coproduct and cuts


def _tensor_mul_forests(a: TensorComb, b: TensorComb) -> TensorComb:
    acc: dict = {}
    for (l1, r1), c1 in a:
        for (l2, r2), c2 in b:
            key = (l1.mul(l2), r1.mul(r2))
            new = acc.get(key, 0) + c1 * c2
            if new:
                acc[key] = new
            else:
                acc.pop(key, None)
    return TensorComb(acc, _clean=True)


def _split_first_tree(f: Forest) -> tuple[Tree, Forest]:
    tree, mult = f.items[0]
    rest = list(f.items[1:])
    if mult > 1:
        rest.insert(0, (tree, mult - 1))
    return tree, Forest(tuple(rest))


@functools.lru_cache(maxsize=None)
def ck_coproduct(f: Forest) -> TensorComb:
    """Admissible-cut coproduct, by the defining recursion."""
    if f.is_empty():
        return TensorComb.term(EMPTY_FOREST, EMPTY_FOREST)
    if f.tree_count() == 1:
        tree = f.items[0][0]
        inner = ck_coproduct(tree.children)
        lifted = inner.map_right(lambda z: LinComb.term(z.graft(tree.label).as_forest()))
        return lifted + TensorComb.term(f, EMPTY_FOREST)
    tree, rest = _split_first_tree(f)
    return _tensor_mul_forests(ck_coproduct(tree.as_forest()), ck_coproduct(rest))


def ck_coproduct_lin(x: LinComb) -> TensorComb:
    acc = TensorComb.zero()
    for b, c in x:
        acc = acc + ck_coproduct(b).scale(c)
    return acc


def ck_reduced_coproduct(f: Forest) -> TensorComb:
    cop = ck_coproduct(f)
    cop = cop - TensorComb.term(EMPTY_FOREST, f)
    cop = cop - TensorComb.term(f, EMPTY_FOREST)
    return cop


@dataclass(frozen=True)
class Cut:
    crown: Forest
    trunk: Forest
    multiplicity: int


@functools.lru_cache(maxsize=None)
def _cuts_dict(f: Forest) -> tuple[tuple[tuple[Forest, Forest], int], ...]:
    """The cut family and multiplicities, by their own recursion (not Delta)."""
    if f.is_empty():
        return (((EMPTY_FOREST, EMPTY_FOREST), 1),)
    if f.tree_count() == 1:
        tree = f.items[0][0]
        acc: dict = {}
        for (c, t), m in _cuts_dict(tree.children):
            acc[(c, t.graft(tree.label).as_forest())] = m
        acc[(f, EMPTY_FOREST)] = acc.get((f, EMPTY_FOREST), 0) + 1
        return tuple(acc.items())
    tree, rest = _split_first_tree(f)
    acc = {}
    for (c1, t1), m1 in _cuts_dict(tree.as_forest()):
        for (c2, t2), m2 in _cuts_dict(rest):
            key = (c1.mul(c2), t1.mul(t2))
            acc[key] = acc.get(key, 0) + m1 * m2
    return tuple(acc.items())


def enumerate_cuts(f: Forest) -> list[Cut]:
    """All admissible cuts (crown, trunk) of f with planar multiplicities."""
    out = [Cut(c, t, m) for (c, t), m in _cuts_dict(f)]
    out.sort(key=lambda cut: (cut.crown.sort_key(), cut.trunk.sort_key()))
    return out


# ---------------------------------------------------------------------------
# antipode: recursion engine and split-representation engine


@functools.lru_cache(maxsize=None)
def _ck_antipode_tree(tree: Tree) -> LinComb:
    # S |z|_i = -m (S (x) |.|_i) Delta z
    acc = LinComb.zero()
    for (l, r), c in ck_coproduct(tree.children):
        grafted = r.graft(tree.label).as_forest()
        acc = acc + _ck_antipode_rec(l).map_basis(
            lambda z, g=grafted: LinComb.term(z.mul(g))
        ).scale(c)
    return -acc


@functools.lru_cache(maxsize=None)
def _ck_antipode_rec(f: Forest) -> LinComb:
    if f.is_empty():
        return LinComb.term(EMPTY_FOREST)
    acc = LinComb.term(EMPTY_FOREST)
    for tree in f.trees():
        part = _ck_antipode_tree(tree)
        acc = acc.map_basis(
            lambda z: part.map_basis(lambda w, z=z: LinComb.term(z.mul(w)))
        )
    return acc


@functools.lru_cache(maxsize=None)
def splits(f: Forest) -> tuple[tuple[Forest, int], ...]:
    """The split family with integer coefficients, by its own recursion."""
    if f.is_empty():
        return ((EMPTY_FOREST, 1),)
    if f.tree_count() == 1:
        acc: dict = {}
        for (c, t), m in _cuts_dict(f):
            if t == f:
                continue
            for s, e in splits(t):
                key = c.mul(s)
                acc[key] = acc.get(key, 0) - e * m
        return tuple(acc.items())
    tree, rest = _split_first_tree(f)
    acc = {}
    for s1, e1 in splits(tree.as_forest()):
        for s2, e2 in splits(rest):
            key = s1.mul(s2)
            acc[key] = acc.get(key, 0) + e1 * e2
    return tuple((k, v) for k, v in acc.items() if v)


def ck_antipode(f: Forest, engine: str = "recursion") -> LinComb:
    """Antipode of the cut coproduct; both engines agree."""
    if engine == "recursion":
        return _ck_antipode_rec(f)
    if engine == "splits":
        return LinComb({s: Fraction(e) for s, e in splits(f)})
    raise ValueError(f"unknown antipode engine {engine!r}")


def split_coefficient(f: Forest, s: Forest) -> int:
    for cand, e in splits(f):
        if cand == s:
            return e
    return 0


# ---------------------------------------------------------------------------
# Grossman-Larson product by grafting


def _attach_in_tree(host: Tree, tree: Tree) -> set[Tree]:
    out = {Tree(host.label, host.children.mul(tree.as_forest()))}
    for child, mult in host.children.items:
        rest = list(host.children.items)
        rest.remove((child, mult))
        if mult > 1:
            rest.append((child, mult - 1))
        rest_forest = Forest(tuple(rest))
        for new_child in _attach_in_tree(child, tree):
            out.add(Tree(host.label, rest_forest.mul(new_child.as_forest())))
    return out


def _attach_everywhere(base: Forest, tree: Tree) -> set[Forest]:
    out = {base.mul(tree.as_forest())}
    for host, mult in base.items:
        rest = list(base.items)
        rest.remove((host, mult))
        if mult > 1:
            rest.append((host, mult - 1))
        rest_forest = Forest(tuple(rest))
        for new_host in _attach_in_tree(host, tree):
            out.add(rest_forest.mul(new_host.as_forest()))
    return out


@functools.lru_cache(maxsize=None)
def _graft_candidates(crown: Forest, trunk: Forest) -> frozenset[Forest]:
    candidates = {trunk}
    for tree in crown.trees():
        candidates = {z for base in candidates for z in _attach_everywhere(base, tree)}
    return frozenset(candidates)


@functools.lru_cache(maxsize=None)
def gl_product(a: Forest, b: Forest) -> LinComb:
    """C * T = sum over forests z with (C, T) a cut of z, with multiplicities.

    Candidates z come from grafting C's trees onto T (or at root level); the
    exact multiplicity is read back from the coproduct.
    """
    terms = {}
    for z in _graft_candidates(a, b):
        m = ck_coproduct(z).coeff(a, b)
        if m:
            terms[z] = m
    return LinComb(terms)


def gl_product_lin(x: LinComb, y: LinComb) -> LinComb:
    acc = LinComb.zero()
    for b1, c1 in x:
        for b2, c2 in y:
            acc = acc + gl_product(b1, b2).scale(c1 * c2)
    return acc


@functools.lru_cache(maxsize=None)
def forest_deconcat(f: Forest) -> TensorComb:
    """Split a forest into ordered pairs of sub-multisets, each pair once."""
    acc = {}
    choices = [(tree, mult) for tree, mult in f.items]

    def build(idx: int, left: list, right: list):
        if idx == len(choices):
            acc[(Forest(tuple(left)), Forest(tuple(right)))] = Fraction(1)
            return
        tree, mult = choices[idx]
        for k in range(mult + 1):
            if k:
                left.append((tree, k))
            if mult - k:
                right.append((tree, mult - k))
            build(idx + 1, left, right)
            if k:
                left.pop()
            if mult - k:
                right.pop()

    build(0, [], [])
    return TensorComb(acc, _clean=True)


def _gl_antipode_factory(d: int):
    @functools.lru_cache(maxsize=None)
    def gl_antipode(f: Forest) -> LinComb:
        # dual of the cut antipode: <S* eta, z> = <eta, S z>
        terms = {}
        for z in forests(d, f.grade):
            c = ck_antipode(z, engine="splits").coeff(f)
            if c:
                terms[z] = c
        return LinComb(terms)

    return gl_antipode


@functools.lru_cache(maxsize=None)
def ck_instance(d: int) -> HopfInstance:
    """Forests with commutative juxtaposition and the cut coproduct."""
    check_dimension(d)
    return HopfInstance(
        name="ck",
        dim=d,
        unit=EMPTY_FOREST,
        product_basis=lambda a, b: LinComb.term(a.mul(b)),
        coproduct_basis=ck_coproduct,
        basis=lambda k: forests(d, k),
        antipode_closed_basis=lambda f: ck_antipode(f, engine="splits"),
    )


@functools.lru_cache(maxsize=None)
def gl_instance(d: int) -> HopfInstance:
    """Forests with the Grossman-Larson product and sub-multiset coproduct."""
    check_dimension(d)
    return HopfInstance(
        name="gl",
        dim=d,
        unit=EMPTY_FOREST,
        product_basis=gl_product,
        coproduct_basis=forest_deconcat,
        basis=lambda k: forests(d, k),
        antipode_closed_basis=_gl_antipode_factory(d),
    )


# ---------------------------------------------------------------------------
# words over the tree alphabet (codomain of psi)


class TreeWord:
    """A word whose letters are decorated trees."""

    __slots__ = ("letters", "_hash")

    def __init__(self, letters: Iterable[Tree] = ()):
        letters = tuple(letters)
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "_hash", hash(("tw", letters)))

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("TreeWord is immutable")

    @property
    def grade(self) -> int:
        return sum(t.grade for t in self.letters)

    def sort_key(self):
        return (self.grade, len(self.letters), tuple(t.sort_key() for t in self.letters))

    def concat(self, other: "TreeWord") -> "TreeWord":
        return TreeWord(self.letters + other.letters)

    def __eq__(self, other) -> bool:
        return isinstance(other, TreeWord) and self.letters == other.letters

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"TreeWord{self.letters!r}"

    def __str__(self) -> str:
        if not self.letters:
            return "ε"
        return "·".join(str(t) for t in self.letters)


EMPTY_TREEWORD = TreeWord()


def treeword_shuffle(u: TreeWord, v: TreeWord) -> LinComb:
    return LinComb(
        {TreeWord(w): Fraction(m) for w, m in shuffle_tuples(u.letters, v.letters).items()}
    )


def treeword_deconcat(w: TreeWord) -> TensorComb:
    return TensorComb(
        {(TreeWord(l), TreeWord(r)): Fraction(1) for l, r in deconcat_tuples(w.letters)},
        _clean=True,
    )


# ---------------------------------------------------------------------------
# morphisms between words and forests


@functools.lru_cache(maxsize=None)
def phi(f: Forest) -> LinComb:
    """Forest-to-word Hopf homomorphism: graft becomes append, product shuffle."""
    if f.is_empty():
        return LinComb.term(Word())
    if f.tree_count() == 1:
        tree = f.items[0][0]
        return phi(tree.children).map_basis(
            lambda w: LinComb.term(w.concat(Word((tree.label,))))
        )
    tree, rest = _split_first_tree(f)
    left, right = phi(tree.as_forest()), phi(rest)
    acc = LinComb.zero()
    for w1, c1 in left:
        for w2, c2 in right:
            acc = acc + LinComb(
                {
                    Word(w): Fraction(m)
                    for w, m in shuffle_tuples(w1.letters, w2.letters).items()
                }
            ).scale(c1 * c2)
    return acc


def phi_lin(x: LinComb) -> LinComb:
    return x.map_basis(phi)


def phi_hat(w: Word) -> Forest:
    """Ladder embedding of words into forests, inverse to phi on its image."""
    f = EMPTY_FOREST
    for letter in w.letters:
        f = f.graft(letter).as_forest()
    return f


def phi_hat_lin(x: LinComb) -> LinComb:
    return x.map_basis(lambda w: LinComb.term(phi_hat(w)))


@functools.lru_cache(maxsize=None)
def psi(f: Forest) -> LinComb:
    """Hopf monomorphism into shuffle words over the tree alphabet."""
    if f.is_empty():
        return LinComb.term(EMPTY_TREEWORD)
    if f.tree_count() == 1:
        tree = f.items[0][0]
        acc = LinComb.zero()
        for (l, r), c in ck_coproduct(tree.children):
            letter = r.graft(tree.label)
            acc = acc + psi(l).map_basis(
                lambda u, letter=letter: LinComb.term(u.concat(TreeWord((letter,))))
            ).scale(c)
        return acc
    tree, rest = _split_first_tree(f)
    left, right = psi(tree.as_forest()), psi(rest)
    acc = LinComb.zero()
    for u, c1 in left:
        for v, c2 in right:
            acc = acc + treeword_shuffle(u, v).scale(c1 * c2)
    return acc


def psi_lin(x: LinComb) -> LinComb:
    return x.map_basis(psi)


def phi_kernel_basis(d: int, max_grade: int) -> list[LinComb]:
    """Exact basis of ker(phi) on forests of each grade <= max_grade."""
    from .linalg import nullspace
    from .symbols import words as word_basis

    out: list[LinComb] = []
    for k in range(1, max_grade + 1):
        fs = forests(d, k)
        ws = word_basis(d, k)
        w_index = {w: i for i, w in enumerate(ws)}
        # rows indexed by words, columns by forests
        rows = [[Fraction(0)] * len(fs) for _ in ws]
        for j, f in enumerate(fs):
            for w, c in phi(f):
                rows[w_index[w]][j] = c
        for vec in nullspace(rows):
            out.append(LinComb({fs[j]: c for j, c in enumerate(vec) if c}))
    return out
