"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Exact identities are asserted with no tolerance; float comparisons use the
tolerances stated inline.  Run with `pytest -s tests/test_acceptance.py` to
see the per-criterion lines.
"""
import math
import random
import time
from fractions import Fraction

import pytest

from hopfpath.hopf_core import (
    check_axioms,
    concat_deshuffle_instance,
    deshuffle,
    poly_instance,
    shuffle,
    shuffle_deconcat_instance,
    shuffle_permutations,
)
from hopfpath.hopf_ck import (
    ck_antipode,
    ck_coproduct,
    ck_instance,
    gl_instance,
    gl_product,
    phi_hat,
    phi_kernel_basis,
)
from hopfpath.linalg import LinComb, TensorComb, pair, pair_tensor
from hopfpath.model_rde import VectorField, check_model, model_from_lift, picard_solve
from hopfpath.roughpath import (
    PiecewiseLinearPath,
    RoughPathConfig,
    branched_lift_fn,
    check_rough_axioms,
    kernel_condition_witness,
    q_gamma,
    signature_lift,
)
from hopfpath.series import (
    TruncatedElement,
    branched_norm_constants,
    dynkin,
    exp_trunc,
    geo_norm_constants,
    group_inverse,
    homog_norm,
    is_grouplike,
    is_primitive,
    log_trunc,
    primitive_basis,
    trunc_mul,
)
from hopfpath.symbols import (
    EMPTY_FOREST,
    Forest,
    MultiIndex,
    Tree,
    Word,
    forests,
    forests_up_to,
    multi_indices_up_to,
    words,
    words_up_to,
)

W = lambda *ls: Word(ls)


def t(label, *children):
    return Tree(label, Forest.of(*children))


def report(number: int, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    line = f"criterion {number}: {status}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


def random_lie(instance, level, rng, max_terms=2):
    acc = LinComb.zero()
    for k in range(1, level + 1):
        basis = primitive_basis(instance, k)
        for _ in range(min(max_terms, len(basis))):
            acc = acc + rng.choice(basis).scale(
                Fraction(rng.randint(-6, 6), rng.randint(1, 6))
            )
    return TruncatedElement.make(acc, level, instance)


class TestAcceptance:
    def test_criterion_1_hopf_axiom_suite(self):
        started = time.monotonic()
        instances = [
            poly_instance(3),
            shuffle_deconcat_instance(3),
            concat_deshuffle_instance(3),
            ck_instance(2),
            gl_instance(2),
        ]
        failures = []
        for inst in instances:
            rep = check_axioms(inst, max_grade=4, samples=500, seed=0)
            if not rep.passed:
                failures.append(rep.summary())
        elapsed = time.monotonic() - started
        report(
            1,
            not failures and elapsed < 60.0,
            f"5 instances, grade <= 4, 500 samples each, {elapsed:.1f}s",
        )

    def test_criterion_2_paper_printed_values(self):
        ok = True
        # the six (2,4)-shuffles
        ok &= shuffle_permutations(2, 4) == [
            (1, 2, 3, 4),
            (1, 3, 2, 4),
            (1, 4, 2, 3),
            (2, 3, 1, 4),
            (2, 4, 1, 3),
            (3, 4, 1, 2),
        ]
        # 16-term expansion for distinct letters
        cop = deshuffle(W(1, 2, 3, 4))
        ok &= len(cop) == 16 and all(c == 1 for _, c in cop)
        # grouped coefficients after identifying b=c, a=d
        grouped = deshuffle(W(1, 2, 2, 1))
        ok &= grouped.coeff(W(2), W(1, 2, 1)) == 2
        ok &= grouped.coeff(W(1, 2), W(2, 1)) == 2
        ok &= grouped.coeff(W(2, 1), W(1, 2)) == 2
        ok &= grouped.coeff(W(1, 2, 1), W(2)) == 2
        ok &= len(grouped) == 12
        ok &= sorted(int(c) for _, c in grouped) == [1] * 8 + [2] * 4
        # decorated cut-coproduct examples
        dot_i = t(3).as_forest()
        ok &= ck_coproduct(dot_i) == TensorComb(
            {(dot_i, EMPTY_FOREST): 1, (EMPTY_FOREST, dot_i): 1}
        )
        lad = t(2, t(3)).as_forest()
        ok &= ck_coproduct(lad) == TensorComb(
            {
                (lad, EMPTY_FOREST): 1,
                (t(3).as_forest(), t(2).as_forest()): 1,
                (EMPTY_FOREST, lad): 1,
            }
        )
        # fully decorated cherry-over-ladders: ten cuts, all with coefficient one
        lad_32, lad_23 = t(2, t(3)), t(3, t(2))
        T = t(1, lad_32, lad_23).as_forest()
        decorated = TensorComb(
            {
                (T, EMPTY_FOREST): 1,
                (Forest.of(lad_32, lad_23), t(1).as_forest()): 1,
                (Forest.of(t(3), lad_23), t(1, t(2)).as_forest()): 1,
                (lad_23.as_forest(), t(1, t(2, t(3))).as_forest()): 1,
                (Forest.of(t(2), lad_32), t(1, t(3)).as_forest()): 1,
                (Forest.of(t(2), t(3)), t(1, t(2), t(3)).as_forest()): 1,
                (t(2).as_forest(), t(1, t(3), t(2, t(3))).as_forest()): 1,
                (lad_32.as_forest(), t(1, t(3, t(2))).as_forest()): 1,
                (t(3).as_forest(), t(1, t(2), t(3, t(2))).as_forest()): 1,
                (EMPTY_FOREST, T): 1,
            }
        )
        ok &= ck_coproduct(T) == decorated
        # undecorated cherry-over-cherries expansion, coefficients (1,1,2,2,1,2,1)
        cc = t(1, t(1, t(1)), t(1, t(1))).as_forest()
        lad2 = t(1, t(1)).as_forest()
        expected = TensorComb(
            {
                (cc, EMPTY_FOREST): 1,
                (Forest.of(t(1, t(1)), t(1, t(1))), t(1).as_forest()): 1,
                (Forest.of(t(1), t(1, t(1))), lad2): 2,
                (lad2, t(1, t(1, t(1))).as_forest()): 2,
                (Forest.of(t(1), t(1)), t(1, t(1), t(1)).as_forest()): 1,
                (t(1).as_forest(), t(1, t(1), t(1, t(1))).as_forest()): 2,
                (EMPTY_FOREST, cc): 1,
            }
        )
        ok &= ck_coproduct(cc) == expected
        # binomial polynomial coproduct
        inst = poly_instance(3)
        for n in multi_indices_up_to(3, 3):
            cop = inst.coproduct_basis(n)
            for m in multi_indices_up_to(3, n.grade):
                if all(a <= b for a, b in zip(m.entries, n.entries)):
                    want = 1
                    for a, b in zip(n.entries, m.entries):
                        want *= math.comb(a, b)
                    ok &= cop.coeff(m, n - m) == want
        # antipode sign on monomials, grades <= 4
        for n in multi_indices_up_to(3, 4):
            want = LinComb.term(n, Fraction(-1) ** n.grade)
            ok &= inst.antipode_closed(LinComb.term(n)) == want
            ok &= inst.antipode(LinComb.term(n)) == want
        report(2, ok)

    def test_criterion_3_duality_suite(self):
        ok = True
        d = 2
        # shuffle <-> deconcatenation and concatenation <-> deshuffle
        sh, de = shuffle_deconcat_instance(d), concat_deshuffle_instance(d)
        for k in range(5):
            for w in words(d, k):
                desh = de.coproduct_basis(w)
                decon = sh.coproduct_basis(w)
                for i in range(k + 1):
                    for u in words(d, i):
                        for v in words(d, k - i):
                            uv = TensorComb.term(u, v)
                            ok &= pair(shuffle(u, v), LinComb.term(w)) == pair_tensor(
                                uv, desh
                            )
                            ok &= pair(
                                LinComb.term(u.concat(v)), LinComb.term(w)
                            ) == pair_tensor(uv, decon)
                assert ok
        # star <-> cut coproduct and juxtaposition <-> deconcatenation
        for k in range(5):
            for z in forests(d, k):
                cop_star = ck_coproduct(z)
                cop_mul = gl_instance(d).coproduct_basis(z)
                for i in range(k + 1):
                    for a in forests(d, i):
                        for b in forests(d, k - i):
                            ab = TensorComb.term(a, b)
                            ok &= pair(gl_product(a, b), LinComb.term(z)) == pair_tensor(
                                ab, cop_star
                            )
                            ok &= pair(
                                LinComb.term(a.mul(b)), LinComb.term(z)
                            ) == pair_tensor(ab, cop_mul)
                assert ok
        # antipode duality on both sides
        for k in range(5):
            for w in words(d, k):
                for v in words(d, k):
                    ok &= pair(
                        sh.antipode_closed(LinComb.term(w)), LinComb.term(v)
                    ) == pair(LinComb.term(w), de.antipode_closed(LinComb.term(v)))
            gl = gl_instance(d)
            for eta in forests(d, k):
                s_eta = gl.antipode_closed_basis(eta)
                for z in forests(d, k):
                    ok &= pair(s_eta, LinComb.term(z)) == pair(
                        LinComb.term(eta), ck_antipode(z)
                    )
            assert ok
        report(3, ok)

    def test_criterion_4_exp_log_prim_grouplike_dynkin(self):
        ok = True
        rng = random.Random(0)
        # exact round trip at level 5 on counit-free elements, per algebra
        pools = {
            concat_deshuffle_instance(2): [W(1), W(2), W(1, 2), W(2, 2, 1)],
            shuffle_deconcat_instance(2): [W(1), W(2), W(1, 2)],
            gl_instance(2): [
                t(1).as_forest(),
                t(2, t(1)).as_forest(),
                Forest.of(t(1), t(2)),
            ],
            ck_instance(2): [t(1).as_forest(), t(2, t(1)).as_forest()],
            poly_instance(3): [MultiIndex((1, 0, 0)), MultiIndex((0, 2, 1))],
        }
        for inst, pool in pools.items():
            for _ in range(10):
                x = TruncatedElement.make(
                    LinComb(
                        {
                            rng.choice(pool): Fraction(
                                rng.randint(-5, 5), rng.randint(1, 5)
                            )
                            for _ in range(2)
                        }
                    ),
                    5,
                    inst,
                )
                ok &= log_trunc(exp_trunc(x)) == x
        assert ok
        # exp(Prim) = GrLk and log(GrLk) in Prim, 200 seeded samples per algebra
        batteries = [
            (concat_deshuffle_instance(2), 4),
            (gl_instance(2), 3),
            (ck_instance(2), 3),
            (poly_instance(3), 4),
        ]
        for inst, level in batteries:
            for i in range(200):
                x = random_lie(inst, level, rng, max_terms=1)
                ok &= is_primitive(x)[0]
                g = exp_trunc(x)
                ok &= is_grouplike(g)[0]
                if i % 2:
                    h = trunc_mul(g, group_inverse(exp_trunc(random_lie(inst, level, rng, 1))))
                else:
                    h = trunc_mul(g, exp_trunc(random_lie(inst, level, rng, 1)))
                ok &= is_grouplike(h)[0]
                ok &= is_primitive(log_trunc(h))[0]
            assert ok, inst.name
        # Dynkin: direct bracketing equals the convolution route on all words
        for d in (2, 3):
            for w in words_up_to(d, 4):
                if w.grade == 0:
                    continue
                x = LinComb.term(w)
                ok &= dynkin(x) == dynkin(x, via_convolution=True, dim=d)
        # (D * S) acts as the grading derivation on primitives
        inst = concat_deshuffle_instance(2)
        for k in range(1, 5):
            for p in primitive_basis(inst, k):
                ok &= dynkin(p, via_convolution=True, dim=2) == p.scale(k)
        report(4, ok)

    def test_criterion_5_norm_equivalence(self):
        ok = True
        rel = 1e-9
        rng = random.Random(1)
        batteries = [
            (concat_deshuffle_instance(2), geo_norm_constants(2, 3)),
            (gl_instance(2), branched_norm_constants(2, 3)),
        ]
        for inst, constants in batteries:
            for _ in range(200):
                g = exp_trunc(random_lie(inst, 3, rng))
                norm = homog_norm(g)
                sup = 0.0
                for b, c in g.value:
                    if b.grade == 0:
                        continue
                    value = abs(float(c))
                    bound = constants.upper[b.grade] * norm**b.grade
                    ok &= value <= bound * (1 + rel) + 1e-30
                    sup = max(sup, value ** (1.0 / b.grade))
                ok &= norm <= constants.recovery * sup * (1 + rel) + 1e-30
            assert ok, inst.name
        report(5, ok)

    # five fixed test paths: rational knots in dimension 2
    PATHS = [
        PiecewiseLinearPath.from_knots([(0, (0, 0)), (1, (1, 1))]),
        PiecewiseLinearPath.from_knots(
            [(0, (0, 0)), (Fraction(1, 2), (1, Fraction(1, 3))), (1, (Fraction(1, 4), 1))]
        ),
        PiecewiseLinearPath.from_knots(
            [
                (0, (0, 0)),
                (Fraction(1, 4), (Fraction(-1, 2), 1)),
                (Fraction(3, 4), (1, Fraction(-1, 3))),
                (1, (2, 2)),
            ]
        ),
        PiecewiseLinearPath.from_knots(
            [(0, (1, -1)), (Fraction(1, 3), (1, 2)), (Fraction(2, 3), (0, 2)), (1, (0, 0))]
        ),
        PiecewiseLinearPath.from_knots(
            [
                (0, (0, 0)),
                (Fraction(1, 5), (Fraction(1, 5), Fraction(2, 5))),
                (Fraction(2, 5), (Fraction(3, 5), Fraction(1, 5))),
                (Fraction(4, 5), (Fraction(-1, 5), Fraction(-2, 5))),
                (1, (1, 1)),
            ]
        ),
    ]
    GRID9 = [Fraction(i, 8) for i in range(9)]

    def test_criterion_6_rough_path_lift_suite(self):
        ok = True
        kernel = phi_kernel_basis(2, 3)
        for path in self.PATHS:
            sig = signature_lift(path, 3)
            br = branched_lift_fn(path, 3)
            rep_g = check_rough_axioms(
                sig, RoughPathConfig.make(Fraction(1, 3), "geometric"), self.GRID9
            )
            rep_b = check_rough_axioms(
                br, RoughPathConfig.make(Fraction(1, 3), "branched"), self.GRID9
            )
            ok &= rep_g.passed and rep_b.passed
            # ladder restriction equals the signature, exactly, on the grid
            for s in self.GRID9[::2]:
                for u in self.GRID9[::2]:
                    for w in words_up_to(2, 3):
                        ok &= br.coeff(s, u, phi_hat(w)) == sig.coeff(s, u, w)
            # integration-by-parts kernel condition on ker(phi) up to grade 3
            ok &= kernel_condition_witness(br, self.GRID9) is None
            assert ok
        ok &= len(kernel) == (7 - 4) + (26 - 8)
        report(6, ok, "5 paths, 9-point grid, level 3")

    def test_criterion_7_q_gamma(self):
        ok = True
        gamma = Fraction(2, 5)
        for f in forests_up_to(2, 2):
            ok &= q_gamma(f, gamma) == 1.0
        lad3 = t(1, t(1, t(1))).as_forest()
        ok &= abs(q_gamma(lad3, gamma) - 2.0 / (2.0**1.2 - 2.0)) < 1e-9
        rng = random.Random(2)
        pool = forests(2, 2)
        for _ in range(30):
            a, b = rng.choice(pool), rng.choice(pool)
            lhs = q_gamma(a.mul(b), gamma)
            rhs = q_gamma(a, gamma) * q_gamma(b, gamma)
            ok &= math.isclose(lhs, rhs, rel_tol=1e-12)
        report(7, ok)

    def test_criterion_8_model_suite(self):
        ok = True
        grid = [Fraction(i, 4) for i in range(5)]
        for path in self.PATHS[:2]:
            lift = branched_lift_fn(path, 3)
            model = model_from_lift(lift, Fraction(1, 3), grid)
            rep = check_model(model, grid, 3)
            ok &= rep.passed
            # strict grade lowering on every basis element
            gm = model.gamma_st(grid[1], grid[3])
            for z in forests_up_to(2, 3):
                delta = gm(LinComb.term(z)) - LinComb.term(z)
                ok &= all(b.grade < z.grade for b in delta.support())
            assert ok
        report(8, ok, "grid triples, level 3")

    def test_criterion_9_rde_convergence(self):
        started = time.monotonic()
        line = PiecewiseLinearPath.from_knots([(0, (0,)), (1, (1,))])
        vf = VectorField.from_spec("linear", 1)

        def solve(h):
            sol = picard_solve(line, vf, Fraction(1), Fraction(3, 10), 4, h)
            assert sol[-1][0] == 1
            return abs(float(sol[-1][1]) - math.e) / math.e

        err_coarse = solve(Fraction(1, 100))
        err_fine = solve(Fraction(1, 200))
        ok = err_coarse < 1e-6
        ok &= err_coarse / err_fine >= 8

        # second benchmark: 100-knot interpolant of t^2
        knots = [(Fraction(i, 100), (Fraction(i, 100) ** 2,)) for i in range(101)]
        para = PiecewiseLinearPath.from_knots(knots)
        sol = picard_solve(para, vf, Fraction(1), Fraction(3, 10), 4, Fraction(1, 100))
        x_end = float(para.position(1)[0])
        err_para = abs(float(sol[-1][1]) - math.exp(x_end)) / math.exp(x_end)
        ok &= err_para < 1e-5
        elapsed = time.monotonic() - started
        ok &= elapsed < 30.0
        report(
            9,
            ok,
            f"err(h=1/100)={err_coarse:.2e}, ratio={err_coarse / err_fine:.1f}, "
            f"parabola err={err_para:.2e}, {elapsed:.1f}s",
        )
