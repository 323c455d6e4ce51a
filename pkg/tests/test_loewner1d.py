import numpy as np
import pytest

from freemono.freeexpr import catalog, function_from_expr
from freemono.kernels import Rng, hermitize, min_eig_h, op_norm
from freemono.loewner1d import (
    SCALAR_CATALOG_NAMES,
    amy_local_check,
    amy_margin,
    check_1d_monotone,
    cross_check,
    loewner_matrix,
    pick_matrix,
    scalar_catalog,
)
from freemono.opsys import builtin_system, pd_cone

DIAG2 = builtin_system("diagonal(2)")


class TestScalarCatalog:
    def test_names(self):
        assert set(SCALAR_CATALOG_NAMES) == {"x", "sqrt", "neg_inverse", "square", "cube"}

    def test_unknown(self):
        with pytest.raises(ValueError):
            scalar_catalog("log")

    @pytest.mark.parametrize("name", SCALAR_CATALOG_NAMES)
    def test_real_rule_is_halfplane_limit(self, name):
        f = scalar_catalog(name)
        gen = Rng(1).generator()
        lo = max(f.domain[0], 0.1)
        xs = lo + (10.0 - lo) * gen.random(100)
        limit = f.complex_rule(xs + 1e-12j)
        assert np.max(np.abs(limit - f.real_rule(xs))) <= 1e-9


class TestLoewnerMatrix:
    def test_linear_function_all_ones(self):
        mat = loewner_matrix(scalar_catalog("x"), [1.0, 2.0, 5.0])
        np.testing.assert_array_equal(mat, np.ones((3, 3)))
        assert min_eig_h(mat) >= -1e-14

    def test_square_two_nodes(self):
        mat = loewner_matrix(scalar_catalog("square"), [1.0, 2.0])
        np.testing.assert_array_equal(mat, [[2.0, 3.0], [3.0, 4.0]])
        assert np.linalg.det(mat) == pytest.approx(-1.0)

    def test_sqrt_exact_example(self):
        mat = loewner_matrix(scalar_catalog("sqrt"), [1.0, 4.0])
        np.testing.assert_array_equal(mat, np.array([[0.5, 1 / 3], [1 / 3, 0.25]]))
        assert np.linalg.det(mat) == pytest.approx(1 / 72)
        assert min_eig_h(mat) > 0

    def test_node_collision(self):
        with pytest.raises(ValueError):
            loewner_matrix(scalar_catalog("x"), [1.0, 1.0 + 1e-12])

    def test_node_outside_domain(self):
        with pytest.raises(ValueError):
            loewner_matrix(scalar_catalog("sqrt"), [-1.0, 1.0])

    def test_unsorted_nodes(self):
        with pytest.raises(ValueError):
            loewner_matrix(scalar_catalog("x"), [2.0, 1.0])

    def test_psd_verdict_permutation_invariant(self):
        gen = Rng(2).generator()
        f = scalar_catalog("sqrt")
        for _ in range(50):
            nodes = np.sort(0.1 + 9.9 * gen.random(5))
            mat = loewner_matrix(f, nodes)
            perm = gen.permutation(5)
            np.testing.assert_allclose(
                sorted(np.linalg.eigvalsh(mat)),
                sorted(np.linalg.eigvalsh(mat[np.ix_(perm, perm)])), atol=1e-12)


class TestPickMatrix:
    def test_identity_single_point(self):
        mat = pick_matrix(scalar_catalog("x"), [1j])
        np.testing.assert_allclose(mat, [[1.0]])

    def test_square_negative_diagonal(self):
        mat = pick_matrix(scalar_catalog("square"), [-1 + 1j, 2j])
        assert mat[0, 0].real == pytest.approx(-2.0)
        assert min_eig_h(hermitize(mat)) < 0

    def test_sqrt_always_psd(self):
        f = scalar_catalog("sqrt")
        rng = Rng(3)
        for t in range(100):
            gen = rng.split(t).generator()
            z = (-3 + 6 * gen.random(5)) + 1j * (0.1 + 2.9 * gen.random(5))
            mat = pick_matrix(f, z)
            assert min_eig_h(hermitize(mat)) >= -1e-8 * (1 + op_norm(mat))

    def test_hermitian_to_machine_precision(self):
        gen = Rng(4).generator()
        for name in SCALAR_CATALOG_NAMES:
            f = scalar_catalog(name)
            z = (-3 + 6 * gen.random(4)) + 1j * (0.1 + 2.9 * gen.random(4))
            mat = pick_matrix(f, z)
            assert op_norm(mat - mat.conj().T) <= 1e-14 * (1 + op_norm(mat))

    def test_coincident_points(self):
        with pytest.raises(ValueError):
            pick_matrix(scalar_catalog("x"), [1j, 1j])

    def test_lower_halfplane_rejected(self):
        with pytest.raises(ValueError):
            pick_matrix(scalar_catalog("x"), [-1j])


class TestMonotone1d:
    def test_linear_passes(self):
        rep = check_1d_monotone(scalar_catalog("x"), level=2, trials=100,
                                rng=Rng(5), interval=(0.1, 10.0))
        assert rep.failures == 0
        assert rep.worst_margin >= -1e-12

    def test_sqrt_passes_levels(self):
        f = scalar_catalog("sqrt")
        for level in (2, 3, 4):
            rep = check_1d_monotone(f, level=level, trials=100, rng=Rng(6))
            assert rep.failures == 0, level

    def test_square_witness_found(self):
        rep = check_1d_monotone(scalar_catalog("square"), level=2, trials=400,
                                rng=Rng(7), interval=(0.1, 10.0))
        assert rep.failures > 0
        assert rep.witness is not None


class TestCrossCheck:
    @pytest.mark.parametrize("name,expected", [
        ("x", "pass"), ("sqrt", "pass"), ("neg_inverse", "pass"),
        ("square", "fail"), ("cube", "fail"),
    ])
    def test_verdicts_agree(self, name, expected):
        cc = cross_check(scalar_catalog(name), rng=Rng(8))
        assert cc.consistent, cc.sides
        assert set(cc.sides.values()) == {expected}

    def test_report_shape(self):
        cc = cross_check(scalar_catalog("sqrt"), node_sets=20, pick_sets=20,
                         pairs=20, rng=Rng(9))
        assert [r.check for r in cc.reports] == ["loewner_psd", "pick_psd", "monotone_1d"]
        assert cc.reports[2].levels == (2, 3, 4)


class TestAmyLocal:
    BOX = ((0.0, 10.0), (0.0, 10.0))

    def test_geometric_mean_passes(self):
        rep = amy_local_check(catalog("geometric_mean"), self.BOX,
                              level=2, trials=200, rng=Rng(10))
        assert rep.failures == 0

    def test_coordinate_projection_positive(self):
        proj = function_from_expr("first_coordinate", "X1", DIAG2, domain=pd_cone(DIAG2))
        rep = amy_local_check(proj, self.BOX, level=2, trials=50, rng=Rng(11))
        assert rep.failures == 0
        assert rep.worst_margin > 0

    def test_product_fails(self):
        prod = function_from_expr("coordinate_product", "X1*X2", DIAG2,
                                  domain=pd_cone(DIAG2))
        rep = amy_local_check(prod, self.BOX, level=2, trials=300, rng=Rng(12))
        assert rep.failures > 0
        again = amy_margin(prod, rep.witness)
        assert abs(again - rep.witness["margin"]) <= 1e-10

    def test_box_arity_checked(self):
        with pytest.raises(ValueError):
            amy_local_check(catalog("geometric_mean"), ((0.0, 1.0),),
                            level=2, trials=1, rng=Rng(13))


class TestDimensionOneReduction:
    def test_verdicts_agree_on_shared_seeds(self):
        # at d = 1 the commuting-path check and the functional-calculus check
        # probe the same property; verdicts agree run by run
        sqrt_free = catalog("msqrt")
        sqrt_1d = scalar_catalog("sqrt")
        square_free = catalog("square")
        square_1d = scalar_catalog("square")
        box = ((0.1, 10.0),)
        interval = (0.1, 10.0)
        scalar_sys = builtin_system("scalar")
        assert sqrt_free.in_system.name == scalar_sys.name
        disagreements = 0
        for seed in range(100):
            rng = Rng(1000 + seed)
            a = amy_local_check(sqrt_free, box, level=2, trials=10, rng=rng)
            b = check_1d_monotone(sqrt_1d, level=2, trials=10, rng=rng, interval=interval)
            if a.verdict != b.verdict:
                disagreements += 1
            a = amy_local_check(square_free, box, level=2, trials=60, rng=rng)
            b = check_1d_monotone(square_1d, level=2, trials=150, rng=rng, interval=interval)
            if a.verdict != b.verdict:
                disagreements += 1
        assert disagreements == 0
