"""Differentiation engine: values, domains, gradients, oracle checks."""

import numpy as np
import pytest

from rgbe_advbench import diffmath as dm


def leafpair(a, b):
    rec = dm.Recording()
    return rec, rec.leaf(a), rec.leaf(b)


class TestValues:
    def test_mul(self):
        rec = dm.Recording()
        out = rec.leaf(3.0) * rec.leaf(4.0)
        assert out.value == 12.0

    def test_log_domain_error(self):
        rec = dm.Recording()
        with pytest.raises(dm.DomainError):
            dm.log(rec.leaf(0.0))

    def test_div_by_zero(self):
        rec, a, b = leafpair(1.0, 0.0)
        with pytest.raises(dm.DomainError):
            dm.div(a, b)

    def test_fractional_power_of_negative(self):
        rec = dm.Recording()
        with pytest.raises(dm.DomainError):
            dm.power(rec.leaf(-2.0), 0.5)

    def test_clamp_inside_passes_value_and_gradient(self):
        rec = dm.Recording()
        x = rec.leaf(5.0)
        y = dm.clamp(x, 0.0, 255.0)
        assert y.value == 5.0
        assert dm.backward(y)[x] == 1.0

    def test_clamp_outside_zero_gradient(self):
        rec = dm.Recording()
        x = rec.leaf(300.0)
        y = dm.clamp(x, 0.0, 255.0)
        assert y.value == 255.0
        assert dm.backward(y)[x] == 0.0

    def test_cross_recording_rejected(self):
        r1, r2 = dm.Recording(), dm.Recording()
        with pytest.raises(dm.UsageError):
            dm.add(r1.leaf(1.0), r2.leaf(2.0))

    def test_backward_requires_scalar(self):
        rec = dm.Recording()
        x = rec.leaf([1.0, 2.0])
        with pytest.raises(dm.UsageError):
            dm.backward(x)


class TestBackward:
    def test_product_gradients(self):
        rec, x, y = leafpair(2.0, 3.0)
        g = dm.backward(x * y)
        assert g[x] == 3.0 and g[y] == 2.0

    def test_sum_of_squares(self):
        rec = dm.Recording()
        x = rec.leaf([1.0, 2.0, 3.0])
        g = dm.backward((x * x).sum())[x]
        assert np.array_equal(g, [2.0, 4.0, 6.0])

    def test_unreached_leaf_zero(self):
        rec, x, y = leafpair(2.0, 3.0)
        g = dm.backward(x * x)
        assert g[y] == 0.0

    def test_linearity(self):
        rec = dm.Recording()
        x = rec.leaf([0.4, -1.3, 2.2])
        f = (x * x).sum()
        g = dm.exp(x).sum()
        combo = 2.0 * f + 3.0 * g
        gc = dm.backward(combo)[x]
        gf = dm.backward(f)[x]
        gg = dm.backward(g)[x]
        np.testing.assert_allclose(gc, 2.0 * gf + 3.0 * gg, rtol=1e-12)

    def test_max_tie_routes_to_first(self):
        rec, a, b = leafpair(1.5, 1.5)
        g = dm.backward(dm.maximum(a, b))
        assert g[a] == 1.0 and g[b] == 0.0

    def test_abs_at_zero(self):
        rec = dm.Recording()
        x = rec.leaf(0.0)
        assert dm.backward(dm.absolute(x))[x] == 0.0

    def test_select_gates_gradient(self):
        rec, a, b = leafpair([1.0, 2.0], [3.0, 4.0])
        mask = np.array([True, False])
        g = dm.backward(dm.select(mask, a, b).sum())
        assert np.array_equal(g[a], [1.0, 0.0])
        assert np.array_equal(g[b], [0.0, 1.0])


def _random_expression(consts, x):
    """Arbitrary smooth-ish composite touching most op kinds."""
    rec = x.rec
    c1 = rec.constant(consts[0])
    c2 = rec.constant(consts[1])
    t = dm.tanh(x * c2) + dm.sigmoid(x - c1)
    t = t * dm.exp(-dm.absolute(x) * 0.3)
    t = t + dm.clamp(x, -0.8, 0.8) * 0.5
    u = dm.log(dm.exp(x * 0.25) + c2 * c2)
    v = dm.maximum(t, u * 0.1) + dm.minimum(t * 0.5, u)
    return (v * v).sum() + dm.power(dm.sigmoid(v).sum(), 2.0)


class TestFiniteDifferences:
    def test_square(self):
        err = dm.finite_diff_check(lambda x: (x * x).sum(), np.array([1.0]))
        assert err <= 1e-6

    @pytest.mark.parametrize("seed", range(12))
    def test_random_expressions(self, seed):
        rng = np.random.default_rng(seed)
        point = rng.normal(size=17)
        consts = (rng.normal(size=17), rng.uniform(0.5, 2.0, size=17))
        err = dm.finite_diff_check(lambda x: _random_expression(consts, x), point)
        assert err <= 1e-4

    def test_matmul_and_patches(self):
        rng = np.random.default_rng(7)
        w = rng.normal(size=(4, 2 * 9))

        def f(x):
            cols = dm.extract_patches(x, 3, 2, 1)
            out = x.rec.constant(w) @ cols
            return dm.tanh(out).sum()

        err = dm.finite_diff_check(f, rng.normal(size=(2, 9, 9)),
                                   coords=range(0, 162, 17))
        assert err <= 1e-4


class TestSplat:
    def test_mass_conservation(self, rng):
        rec = dm.Recording()
        coords = rec.leaf(rng.uniform(0, 7, size=(40, 3)))
        feats = rec.leaf(rng.uniform(-3, 3, size=40))
        active = np.ones(40, dtype=bool)
        grid = dm.trilinear_splat(coords, feats, active, (8, 8, 8))
        assert grid.value.sum() == pytest.approx(feats.value.sum(), rel=1e-12)

    def test_exact_node_hit(self):
        rec = dm.Recording()
        coords = rec.leaf([[2.0, 3.0, 1.0]])
        feats = rec.leaf([5.0])
        grid = dm.trilinear_splat(coords, feats, np.array([True]), (4, 5, 6))
        assert grid.value[1, 3, 2] == 5.0
        assert grid.value.sum() == 5.0

    def test_halfway_split(self):
        rec = dm.Recording()
        coords = rec.leaf([[1.5, 2.0, 0.0]])
        feats = rec.leaf([1.0])
        grid = dm.trilinear_splat(coords, feats, np.array([True]), (4, 4, 4))
        assert grid.value[0, 2, 1] == pytest.approx(0.5)
        assert grid.value[0, 2, 2] == pytest.approx(0.5)

    def test_inactive_slots_no_mass_no_gradient(self, rng):
        rec = dm.Recording()
        coords = rec.leaf(rng.uniform(0, 3, size=(6, 3)))
        feats = rec.leaf(np.ones(6))
        active = np.array([True, True, False, False, True, False])
        grid = dm.trilinear_splat(coords, feats, active, (4, 4, 4))
        assert grid.value.sum() == pytest.approx(3.0)
        g = dm.backward(grid.sum())
        assert np.all(g[feats][~active] == 0.0)
        assert np.all(g[coords][~active] == 0.0)

    def test_coordinate_gradients_match_fd(self, rng):
        weights = rng.normal(size=(6, 7, 8))
        feat_values = rng.uniform(1, 2, size=9)

        def f(c):
            rec = c.rec
            feats = rec.constant(feat_values)
            grid = dm.trilinear_splat(c, feats, np.ones(9, dtype=bool), (6, 7, 8))
            return (grid * rec.constant(weights)).sum()

        point = rng.uniform(0.1, 5.5, size=(9, 3))
        err = dm.finite_diff_check(f, point)
        assert err <= 1e-4
