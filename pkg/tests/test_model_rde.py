import math
from fractions import Fraction

import pytest

from hopfpath.hopf_ck import ck_coproduct
from hopfpath.linalg import LinComb, TensorComb
from hopfpath.model_rde import (
    Character,
    DottedForest,
    ModelError,
    SectorError,
    VectorField,
    abstract_integration,
    check_model,
    comodule_coproduct,
    compose_with_function,
    constant_field,
    derivative_map,
    homogeneity,
    identity_field,
    model_from_lift,
    picard_solve,
    polynomial_field,
    sine_field,
    struct_action,
    structure_map_witness,
)
from hopfpath.roughpath import PiecewiseLinearPath, branched_lift_fn
from hopfpath.symbols import EMPTY_FOREST, Forest, Tree, forests_up_to, trees


def t(label, *children):
    return Tree(label, Forest.of(*children))


dot1 = t(1).as_forest()
dot2 = t(2).as_forest()

PATH = PiecewiseLinearPath.from_knots(
    [(0, (0, 0)), (Fraction(1, 2), (1, Fraction(1, 3))), (1, (Fraction(1, 4), 1))]
)
GRID = [Fraction(i, 4) for i in range(5)]
LIFT = branched_lift_fn(PATH, 3)
MODEL = model_from_lift(LIFT, Fraction(3, 10), GRID)
LINE = PiecewiseLinearPath.from_knots([(0, (0,)), (1, (1,))])


class TestSymbols:
    def test_homogeneities(self):
        g = Fraction(3, 10)
        assert homogeneity(EMPTY_FOREST, g) == 0
        assert homogeneity(dot1, g) == g
        assert homogeneity(DottedForest(EMPTY_FOREST, 1), g) == g - 1
        assert homogeneity(DottedForest(dot1, 2), g) == 2 * g - 1

    def test_dotted_identity(self):
        assert DottedForest(dot1, 2) == DottedForest(dot1, 2)
        assert DottedForest(dot1, 2) != DottedForest(dot1, 1)
        assert str(DottedForest(EMPTY_FOREST, 1)) == "Xi_1"
        assert str(DottedForest(dot1, 2)) == "[]_1*Xi_2"


class TestIntegrationAndDerivative:
    def test_base(self):
        assert abstract_integration(LinComb.term(DottedForest(EMPTY_FOREST, 1))) == LinComb.term(
            dot1
        )

    def test_graft(self):
        x = LinComb.term(DottedForest(dot1, 2))
        assert abstract_integration(x) == LinComb.term(t(2, t(1)).as_forest())

    def test_homogeneity_shift_by_one(self):
        g = Fraction(3, 10)
        b = DottedForest(dot1, 2)
        out = abstract_integration(LinComb.term(b))
        assert homogeneity(next(iter(out.support())), g) == homogeneity(b, g) + 1

    def test_sector_enforced(self):
        with pytest.raises(SectorError):
            abstract_integration(LinComb.term(dot1))

    def test_derivative_base(self):
        assert derivative_map(LinComb.term(EMPTY_FOREST)).is_zero()
        assert derivative_map(LinComb.term(t(2, t(1)).as_forest())) == LinComb.term(
            DottedForest(dot1, 2)
        )

    def test_left_inverse_to_grade_4(self):
        for f in forests_up_to(2, 3):
            for i in (1, 2):
                x = LinComb.term(DottedForest(f, i))
                assert derivative_map(abstract_integration(x)) == x

    def test_derivative_commutes_with_translation(self):
        gm = MODEL.gamma_st_model(Fraction(1, 4), Fraction(3, 4))
        for k in range(1, 4):
            for tree in trees(2, k):
                x = LinComb.term(tree.as_forest())
                assert derivative_map(gm(x)) == gm(derivative_map(x))


class TestComodule:
    def test_noise_fixed(self):
        x = LinComb.term(DottedForest(EMPTY_FOREST, 1))
        assert comodule_coproduct(x) == TensorComb.term(
            EMPTY_FOREST, DottedForest(EMPTY_FOREST, 1)
        )

    def test_single_tree_with_noise(self):
        x = LinComb.term(DottedForest(dot1, 2))
        expected = TensorComb(
            {
                (EMPTY_FOREST, DottedForest(dot1, 2)): 1,
                (dot1, DottedForest(EMPTY_FOREST, 2)): 1,
            }
        )
        assert comodule_coproduct(x) == expected

    def test_restricts_to_coproduct_on_forests(self):
        for f in forests_up_to(2, 3):
            assert comodule_coproduct(LinComb.term(f)) == ck_coproduct(f)

    def test_comodule_axiom(self):
        # (Delta (x) id) after coaction equals (id (x) coaction) after coaction
        for f in forests_up_to(2, 2):
            for i in (1, 2):
                x = LinComb.term(DottedForest(f, i))
                first = comodule_coproduct(x)
                lhs = {}
                for (l, r), c in first:
                    for (l1, l2), c2 in ck_coproduct(l):
                        key = (l1, l2, r)
                        lhs[key] = lhs.get(key, 0) + c * c2
                rhs = {}
                for (l, r), c in first:
                    for (m, r2), c2 in comodule_coproduct(LinComb.term(r)):
                        key = (l, m, r2)
                        rhs[key] = rhs.get(key, 0) + c * c2
                assert {k: v for k, v in lhs.items() if v} == {
                    k: v for k, v in rhs.items() if v
                }

    def test_translation_fixes_noise(self):
        gm = MODEL.gamma_st_model(0, Fraction(1, 2))
        for i in (1, 2):
            x = LinComb.term(DottedForest(EMPTY_FOREST, i))
            assert gm(x) == x


class TestStructAction:
    def test_counit_character_is_identity(self):
        eps = Character.counit()
        for f in forests_up_to(2, 3):
            assert struct_action(eps, LinComb.term(f)) == LinComb.term(f)

    def test_unit_fixed(self):
        g = MODEL.character(0, 1)
        assert struct_action(g, LinComb.term(EMPTY_FOREST)) == LinComb.term(EMPTY_FOREST)

    def test_single_node_formula(self):
        g = MODEL.character(0, 1)
        out = struct_action(g, LinComb.term(dot1))
        assert out == LinComb.term(dot1) + LinComb.term(EMPTY_FOREST, g(dot1))

    def test_left_action_antimorphism(self):
        g = MODEL.character(0, Fraction(1, 2))
        h = MODEL.character(Fraction(1, 4), Fraction(3, 4))
        conv = Character(
            {
                f: ck_coproduct(f).fold(
                    lambda l, r: LinComb.term(EMPTY_FOREST, h(l) * g(r))
                ).coeff(EMPTY_FOREST)
                for f in forests_up_to(2, 3)
            },
            3,
        )
        for f in forests_up_to(2, 3):
            x = LinComb.term(f)
            lhs = struct_action(g, struct_action(h, x))
            rhs = struct_action(conv, x)
            assert lhs == rhs

    def test_right_action_flavor(self):
        g = MODEL.character(0, 1)
        out = struct_action(g, LinComb.term(dot1), flavor="right")
        assert out == LinComb.term(dot1, g(EMPTY_FOREST)) + LinComb.term(
            EMPTY_FOREST, g(dot1)
        )

    def test_multiplicativity_witness(self):
        g = MODEL.character(0, 1)
        assert g.multiplicativity_witness(2, 3) is None


class TestCharacterization:
    def test_model_translation_accepted(self):
        gm = MODEL.gamma_st_model(Fraction(1, 4), Fraction(3, 4))
        assert structure_map_witness(gm, 2, 3, Fraction(3, 10)) is None

    def test_product_violation_rejected(self):
        # identity plus a compensated bump: satisfies (i)-(iii), breaks only (iv)
        def corrupted(x: LinComb) -> LinComb:
            out = x
            for b, c in x:
                if isinstance(b, DottedForest) and b.forest == dot1:
                    out = out + LinComb.term(DottedForest(EMPTY_FOREST, b.letter), c)
                elif isinstance(b, Forest) and b.tree_count() == 1:
                    tree = b.items[0][0]
                    if tree.children == dot1:
                        out = out + LinComb.term(t(tree.label).as_forest(), c)
            return out

        witness = structure_map_witness(corrupted, 2, 3, Fraction(3, 10))
        assert witness is not None and "(iv)" in witness

    def test_integration_violation_rejected(self):
        gm = MODEL.gamma_st_model(Fraction(1, 4), Fraction(3, 4))

        def corrupted(x: LinComb) -> LinComb:
            out = gm(x)
            support = list(x.support())
            if support and isinstance(support[0], Forest) and support[0] == t(1, t(1)).as_forest():
                out = out + LinComb.term(dot1)
            return out

        witness = structure_map_witness(corrupted, 2, 2, Fraction(3, 10))
        assert witness is not None


class TestModel:
    def test_invariants_on_grid(self):
        report = check_model(MODEL, GRID[:4], 3)
        assert report.passed, report.summary()

    def test_gamma_tt_identity(self):
        gm = MODEL.gamma_st(Fraction(1, 4), Fraction(1, 4))
        for f in forests_up_to(2, 3):
            assert gm(LinComb.term(f)) == LinComb.term(f)

    def test_model_requires_branched(self):
        from hopfpath.roughpath import signature_lift

        with pytest.raises(ModelError):
            model_from_lift(signature_lift(PATH, 2), Fraction(3, 10))

    def test_axiom_failure_propagates(self):
        from hopfpath.roughpath import RoughLift

        base = branched_lift_fn(PATH, 2)

        def tampered(s, u):
            elt = base.eval(s, u)
            if (s, u) == (Fraction(0), Fraction(1, 2)):
                return type(elt).make(elt.value + LinComb.term(dot1), 2, base.algebra)
            return elt

        broken = RoughLift("branched", 2, 2, tampered)
        with pytest.raises(ModelError):
            model_from_lift(broken, Fraction(3, 10), GRID)


class TestCompose:
    def test_identity_returns_argument(self):
        Y = LinComb.term(EMPTY_FOREST, Fraction(5)) + LinComb.term(dot1, Fraction(2))
        out = compose_with_function(Y, identity_field(), Fraction(1), Fraction(1, 4))
        assert out == Y

    def test_constant(self):
        Y = LinComb.term(EMPTY_FOREST, Fraction(5)) + LinComb.term(dot1)
        out = compose_with_function(Y, constant_field(Fraction(7)), 1, Fraction(1, 4))
        assert out == LinComb.term(EMPTY_FOREST, Fraction(7))

    def test_square_binomial(self):
        y0 = Fraction(3)
        Y = LinComb.term(EMPTY_FOREST, y0) + LinComb.term(dot1)
        f = polynomial_field(0, 0, 1)
        out = compose_with_function(Y, f, Fraction(3), Fraction(1))
        expected = (
            LinComb.term(EMPTY_FOREST, y0 * y0)
            + LinComb.term(dot1, 2 * y0)
            + LinComb.term(Forest.of(t(1), t(1)))
        )
        assert out == expected

    def test_noise_suffix(self):
        Y = LinComb.term(EMPTY_FOREST, Fraction(1)) + LinComb.term(dot1)
        out = compose_with_function(Y, identity_field(), Fraction(2), Fraction(1), xi=2)
        assert out == LinComb.term(DottedForest(EMPTY_FOREST, 2)) + LinComb.term(
            DottedForest(dot1, 2)
        )

    def test_insufficient_derivatives(self):
        from hopfpath.model_rde import ScalarField

        f = ScalarField([lambda y: y * y, lambda y: 2 * y], name="f")
        Y = LinComb.term(EMPTY_FOREST, Fraction(1)) + LinComb.term(dot1)
        with pytest.raises(ModelError):
            compose_with_function(Y, f, Fraction(3), Fraction(1))

    def test_sector_enforced(self):
        with pytest.raises(SectorError):
            compose_with_function(
                LinComb.term(Forest.of(t(1), t(1))), identity_field(), 1, Fraction(1, 2)
            )


class TestPicard:
    def test_constant_field_exact(self):
        vf = VectorField.from_spec("const:1", 1)
        sol = picard_solve(LINE, vf, Fraction(2), Fraction(3, 10), 3, Fraction(1, 7))
        assert sol[-1] == (Fraction(1), Fraction(3))
        for tt, y in sol:
            assert y == 2 + tt

    def test_exponential_benchmark_coarse(self):
        vf = VectorField.from_spec("linear", 1)
        sol = picard_solve(LINE, vf, Fraction(1), Fraction(3, 10), 4, Fraction(1, 25))
        err = abs(float(sol[-1][1]) - math.e) / math.e
        assert err < 1e-6

    def test_error_halving_rate(self):
        vf = VectorField.from_spec("linear", 1)
        errs = []
        for h in (Fraction(1, 20), Fraction(1, 40)):
            sol = picard_solve(LINE, vf, Fraction(1), Fraction(3, 10), 4, h)
            errs.append(abs(float(sol[-1][1]) - math.e) / math.e)
        assert errs[0] / errs[1] >= 8

    def test_square_field_against_closed_form(self):
        # dy = y^2 dt, y0 = 1/2: y(t) = y0 / (1 - y0 t)
        vf = VectorField.from_spec("poly:0,0,1", 1)
        sol = picard_solve(LINE, vf, Fraction(1, 2), Fraction(3, 10), 4, Fraction(1, 50))
        want = 0.5 / (1 - 0.5)
        assert abs(float(sol[-1][1]) - want) / want < 1e-7

    def test_sine_field_runs_in_float(self):
        vf = VectorField.uniform(sine_field(), 1)
        sol = picard_solve(LINE, vf, 0.5, Fraction(3, 10), 3, Fraction(1, 20))
        # dy = sin(y) dt has solution 2*atan(exp(t) * tan(y0/2))
        want = 2 * math.atan(math.exp(1.0) * math.tan(0.25))
        assert abs(sol[-1][1] - want) < 1e-4

    def test_two_driver_components(self):
        path = PiecewiseLinearPath.from_knots([(0, (0, 0)), (1, (1, Fraction(1, 2)))])
        vf = VectorField.from_spec("const:1", 2)
        sol = picard_solve(path, vf, Fraction(0), Fraction(3, 10), 3, Fraction(1, 10))
        assert sol[-1][1] == Fraction(3, 2)

    def test_derivative_shortfall(self):
        from hopfpath.model_rde import ScalarField

        f = ScalarField([lambda y: y * y], name="f")
        with pytest.raises(ModelError):
            picard_solve(LINE, VectorField((f,)), Fraction(1), Fraction(3, 10), 4, Fraction(1, 10))

    def test_nonfinite_detected(self):
        vf = VectorField.from_spec("poly:0,0,1", 1)
        with pytest.raises(ModelError):
            picard_solve(LINE, vf, 1e200, Fraction(3, 10), 3, Fraction(1, 4))

    def test_step_greater_than_span(self):
        vf = VectorField.from_spec("const:1", 1)
        sol = picard_solve(LINE, vf, Fraction(0), Fraction(3, 10), 3, Fraction(5))
        assert sol == [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(1))]

    def test_spec_parsing(self):
        assert VectorField.from_spec("const:3", 2).components[0](10) == 3
        assert VectorField.from_spec("poly:1,2", 1).components[0](Fraction(1, 2)) == 2
        with pytest.raises(ValueError):
            VectorField.from_spec("cubic", 1)


class TestInvariantRates:
    def test_halving_meets_module_rate(self):
        # halving h must reduce the error by at least 2^(min(N,4) - 0.5)
        vf = VectorField.from_spec("linear", 1)
        errs = []
        for h in (Fraction(1, 50), Fraction(1, 100)):
            sol = picard_solve(LINE, vf, Fraction(1), Fraction(3, 10), 4, h)
            errs.append(abs(float(sol[-1][1]) - math.e) / math.e)
        assert errs[0] / errs[1] >= 2 ** (4 - 0.5)

    def test_comodule_alias(self):
        from hopfpath.model_rde import branched_comodule_coproduct

        x = LinComb.term(DottedForest(dot1, 2))
        assert branched_comodule_coproduct(x) == comodule_coproduct(x)
