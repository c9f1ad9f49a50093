import numpy as np
import pytest

from evinc.errors import ContractViolation
from evinc.relations import (
    BallSaturation,
    DeviatoricSaturation,
    LinearRelation,
    NodewiseRelation,
    NormSubdifferential,
    SlotEmbedded,
    StructuredSum,
    YosidaRelation,
    ZeroRelation,
    lift,
    minty_scan,
    relation_from_config,
    resolvent,
    sum_with_lipschitz,
    yosida,
)
from evinc.signals import TimeGrid, WeightedSignal
from evinc.calculus import translate
from evinc.tensors import deviatoric_basis, mandel_dev, mandel_trace


def catalog(dim=1):
    return [
        ZeroRelation(dim),
        LinearRelation(np.eye(dim)),
        NormSubdifferential(dim, weight=1.0),
        BallSaturation(dim, radius=1.0),
    ]


class TestResolvent:
    def test_zero_relation_identity(self):
        a = ZeroRelation(3)
        y = np.array([1.0, -2.0, 0.5])
        assert np.array_equal(resolvent(a, 0.7, y), y)

    def test_identity_map(self):
        a = LinearRelation([[1.0]])
        assert resolvent(a, 1.0, np.array([4.0]))[0] == pytest.approx(2.0)

    def test_soft_threshold_branches(self):
        a = NormSubdifferential(1, weight=1.0)
        assert resolvent(a, 1.0, np.array([2.0]))[0] == pytest.approx(1.0)
        assert resolvent(a, 1.0, np.array([0.5]))[0] == 0.0
        assert resolvent(a, 1.0, np.array([-2.0]))[0] == pytest.approx(-1.0)

    def test_nonpositive_lambda_rejected(self):
        with pytest.raises(ContractViolation):
            resolvent(ZeroRelation(1), 0.0, np.array([1.0]))

    def test_ball_saturation_cases(self):
        a = BallSaturation(2, radius=1.0)
        inside = resolvent(a, 1.0, np.array([1.0, 0.0]))
        assert np.allclose(inside, [0.5, 0.0])
        far = resolvent(a, 1.0, np.array([5.0, 0.0]))
        assert np.allclose(far, [4.0, 0.0])  # |x| = |y| - lam*s on the saturated branch


class TestYosida:
    def test_identity_map(self):
        a = LinearRelation([[1.0]])
        assert yosida(a, 1.0, np.array([2.0]))[0] == pytest.approx(1.0)

    def test_sign(self):
        a = NormSubdifferential(1, weight=1.0)
        assert yosida(a, 1.0, np.array([2.0]))[0] == pytest.approx(1.0)
        assert yosida(a, 1.0, np.array([0.5]))[0] == pytest.approx(0.5)

    def test_fixed_point_at_origin(self):
        for a in catalog(2):
            out = yosida(a, 0.8, np.zeros(2))
            assert np.allclose(out, 0.0)

    def test_resolvent_identity_bitwise(self):
        # power-of-two parameters scale exactly, so the rearranged identity
        # lam * yosida == y - resolvent holds bit for bit
        rng = np.random.default_rng(9)
        for dim in (1, 3):
            for a in catalog(dim):
                for lam in (0.5, 1.0, 2.0):
                    for _ in range(200):
                        y = rng.standard_normal(dim) * 3.0
                        r = resolvent(a, lam, y)
                        z = yosida(a, lam, y)
                        assert np.array_equal(lam * z, y - r)

    def test_yosida_lipschitz_and_monotone(self):
        rng = np.random.default_rng(10)
        lam = 0.7
        for a in catalog(2):
            for _ in range(500):
                x = rng.standard_normal(2) * 4
                y = rng.standard_normal(2) * 4
                zx, zy = yosida(a, lam, x), yosida(a, lam, y)
                gap = np.linalg.norm(x - y)
                assert np.linalg.norm(zx - zy) <= gap / lam + 1e-9
                assert np.dot(zx - zy, x - y) >= -1e-12

    def test_yosida_relation_resolvent_identity(self):
        # resolvent of the surrogate agrees with direct fixed-point solving
        a = NormSubdifferential(1, weight=1.0)
        surrogate = YosidaRelation(a, lam=0.3)
        for y in (2.5, 0.2, -1.1):
            x = surrogate.resolve(0.9, np.array([y]))
            # verify x + gamma * A_lam(x) = y
            recon = x + 0.9 * surrogate.apply(x)
            assert recon[0] == pytest.approx(y, abs=1e-12)


class TestNonexpansiveness:
    def test_bulk_random_pairs(self):
        rng = np.random.default_rng(11)
        lam = 0.9
        for a in catalog(3):
            xs = rng.standard_normal((300, 3)) * 5
            ys = rng.standard_normal((300, 3)) * 5
            for x, y in zip(xs, ys):
                rx, ry = resolvent(a, lam, x), resolvent(a, lam, y)
                assert (
                    np.linalg.norm(rx - ry)
                    <= np.linalg.norm(x - y) + 1e-12
                )


class TestLift:
    def grid_signal(self, dim=1, n=16):
        rng = np.random.default_rng(12)
        grid = TimeGrid(0.0, 0.25, n)
        return WeightedSignal(grid, rng.standard_normal((n, dim)), 1.0)

    def test_zero_lift_is_identity(self):
        u = self.grid_signal()
        lifted = lift(ZeroRelation(1), u.grid, u.rho)
        assert np.array_equal(lifted.resolve_signal(0.5, u).values, u.values)

    def test_commutes_with_translate(self):
        u = self.grid_signal(dim=2)
        lifted = lift(BallSaturation(2, radius=0.8), u.grid, u.rho)
        a = lifted.resolve_signal(0.5, translate(u, 2))
        b = translate(lifted.resolve_signal(0.5, u), 2)
        # overlap excludes the nodes where the shift filled zeros
        assert np.array_equal(a.values[:-2], b.values[:-2])

    def test_nodewise_thresholding(self):
        u = self.grid_signal()
        lifted = lift(NormSubdifferential(1, weight=1.0), u.grid, u.rho)
        out = lifted.resolve_signal(0.5, u)
        base = NormSubdifferential(1, weight=1.0)
        for k in range(u.grid.n):
            expected = base.resolve(0.5, u.values[k])
            assert np.array_equal(out.values[k], expected)

    def test_yosida_of_lift_equals_lift_of_yosida(self):
        u = self.grid_signal(dim=2)
        base = BallSaturation(2, radius=0.5)
        lifted = lift(base, u.grid, u.rho)
        lam = 0.4
        a = lifted.yosida_signal(lam, u)
        nodewise = np.stack([(row - base.resolve(lam, row)) / lam for row in u.values])
        assert np.array_equal(a.values, nodewise)


class TestMintyScan:
    def test_zero_relation_all_pass(self):
        rep = minty_scan(ZeroRelation(2), 0.7, samples=100, radius=5.0, seed=1)
        assert rep.passed and rep.samples == 100

    def test_sign_full_pass(self):
        rep = minty_scan(NormSubdifferential(1, weight=1.0), 0.5, samples=1000, radius=10.0, seed=2)
        assert rep.passed
        assert rep.max_residual <= 1e-8

    def test_catalog_graph_residuals(self):
        for a in catalog(2):
            rep = minty_scan(a, 0.8, samples=300, radius=6.0, seed=3)
            assert rep.passed, repr(rep)

    def test_non_maximal_relation_flagged(self):
        class PuncturedSign(NormSubdifferential):
            # sign restricted to x != 0: the graph rejects the origin
            def graph_distance(self, x, v):
                if np.linalg.norm(x) == 0.0:
                    return float("inf")
                return super().graph_distance(x, v)

        bad = PuncturedSign(1, weight=1.0)
        rep = minty_scan(bad, 0.5, samples=500, radius=2.0, seed=4)
        assert rep.inclusion_failures > 0
        # failures are exactly the targets the missing point would have served
        good = minty_scan(NormSubdifferential(1, weight=1.0), 0.5, samples=500, radius=2.0, seed=4)
        assert good.passed


class TestSumWithLipschitz:
    def test_zero_perturbation_reduces_to_base(self):
        a = NormSubdifferential(1, weight=1.0)
        s = sum_with_lipschitz(a, lambda x: np.zeros_like(x), 0.0)
        y = np.array([3.3])
        assert s.resolve(0.5, y) == pytest.approx(a.resolve(0.5, y))

    def test_identity_perturbation_closed_form(self):
        s = sum_with_lipschitz(ZeroRelation(1), lambda x: x, 1.0)
        assert s.resolve(0.5, np.array([3.0]))[0] == pytest.approx(2.0, abs=1e-11)

    def test_contraction_precondition(self):
        s = sum_with_lipschitz(ZeroRelation(1), lambda x: 2.0 * x, 2.0)
        with pytest.raises(ContractViolation):
            s.resolve(0.6, np.array([1.0]))

    def test_sign_plus_identity_vs_grid_search(self):
        a = NormSubdifferential(1, weight=1.0)
        s = sum_with_lipschitz(a, lambda x: x, 1.0)
        lam, y = 0.5, 3.0
        x = s.resolve(lam, np.array([y]))[0]

        # independent dense grid search with progressive refinement
        def residual(u):
            if u > 0:
                return abs(u + lam * (u + 1.0) - y)
            if u < 0:
                return abs(u + lam * (u - 1.0) - y)
            return max(abs(y) - lam, 0.0)

        lo, hi = -5.0, 5.0
        for _ in range(4):
            grid = np.linspace(lo, hi, 10001)
            vals = [residual(u) for u in grid]
            best = grid[int(np.argmin(vals))]
            span = (hi - lo) / 10000
            lo, hi = best - 2 * span, best + 2 * span
        assert abs(x - best) <= 1e-8
        assert x == pytest.approx(5.0 / 3.0, abs=1e-9)


class TestStructuredAndEmbedded:
    def test_slot_embedding(self):
        base = BallSaturation(2, radius=1.0)
        emb = SlotEmbedded(base, start=1, total_dim=4)
        y = np.array([5.0, 3.0, 4.0, -2.0])
        out = emb.resolve(1.0, y)
        assert np.allclose(out[[0, 3]], y[[0, 3]])
        assert np.allclose(out[1:3], base.resolve(1.0, y[1:3]))

    def test_nodewise_blocks(self):
        base = NormSubdifferential(2, weight=1.0)
        node = NodewiseRelation(base, 3)
        y = np.arange(6.0)
        out = node.resolve(0.5, y)
        for i in range(3):
            blk = slice(2 * i, 2 * i + 2)
            assert np.array_equal(out[blk], base.resolve(0.5, y[blk]))

    def test_structured_sum_resolvent(self):
        # skew part plus saturation: verify the defining inclusion directly
        K = np.array([[0.0, 2.0], [-2.0, 0.0]])
        tail = BallSaturation(2, radius=0.7)
        rel = StructuredSum(K, tail)
        rng = np.random.default_rng(13)
        for _ in range(50):
            y = rng.standard_normal(2) * 4
            lam = float(rng.uniform(0.05, 2.0))
            x = rel.resolve(lam, y)
            recon = x + lam * (K @ x) + lam * tail.apply(x)
            assert np.allclose(recon, y, atol=1e-10)

    def test_structured_sum_rejects_nonmonotone_linear_part(self):
        with pytest.raises(ContractViolation):
            StructuredSum(-np.eye(2), BallSaturation(2, radius=1.0))


class TestDeviatoricSaturation:
    def test_outputs_trace_free(self):
        rng = np.random.default_rng(14)
        rel = DeviatoricSaturation(radius=1.3)
        for _ in range(100):
            x = rng.standard_normal(6) * 3
            assert abs(mandel_trace(rel.apply(x))) <= 1e-12

    def test_matches_ball_on_deviatoric_plane(self):
        # restricted to a 2-dim trace-free subspace the relation is a ball
        # projection of the plane coordinates
        rng = np.random.default_rng(15)
        basis = deviatoric_basis()[:, :2]
        dev = DeviatoricSaturation(radius=0.9)
        ball = BallSaturation(2, radius=0.9)
        for _ in range(100):
            c = rng.standard_normal(2) * 2
            x6 = basis @ c
            out6 = dev.apply(x6)
            assert np.allclose(basis.T @ out6, ball.apply(c), atol=1e-13)
            r6 = dev.resolve(0.8, x6)
            assert np.allclose(basis.T @ r6, ball.resolve(0.8, c), atol=1e-13)

    def test_spherical_part_passes_through_resolvent(self):
        rel = DeviatoricSaturation(radius=1.0)
        y = np.array([2.0, 2.0, 2.0, 0.0, 0.0, 0.0])  # purely spherical
        assert np.allclose(rel.resolve(0.5, y), y)
        assert np.allclose(mandel_dev(y), 0.0)


def test_relation_factory_names():
    assert isinstance(relation_from_config("zero", 3), ZeroRelation)
    assert isinstance(relation_from_config("soft_threshold", 2, weight=2.0), NormSubdifferential)
    assert isinstance(relation_from_config("ball_saturation", 2, radius=0.5), BallSaturation)
    assert isinstance(relation_from_config("deviatoric_saturation", 12), NodewiseRelation)
    lin = relation_from_config("linear", 2, gain=3.0)
    assert isinstance(lin, LinearRelation)
    with pytest.raises(ContractViolation):
        relation_from_config("nope", 2)


def test_minty_scan_degrades_without_eval():
    from evinc.relations import MonotoneRelation, minty_scan

    class ResolventOnly(MonotoneRelation):
        # nonexpansive resolvent, no graph evaluation
        def __init__(self):
            self.dim = 2

        def resolve(self, lam, y):
            return np.asarray(y, dtype=float) / (1.0 + lam)

    rep = minty_scan(ResolventOnly(), 0.5, samples=200, radius=3.0, seed=5)
    assert not rep.inclusion_checked
    assert rep.inclusion_failures == 0
    assert rep.nonexpansive_failures == 0
