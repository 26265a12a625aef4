import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from gbl import grassmann as gr
from gbl import shrinking as sh
from gbl.errors import PreconditionViolated
from gbl.rng import substream


def point_at_v(P1, target_v, rng):
    """Random plane with v(., P1) equal to target_v."""
    Z0 = rng.standard_normal((P1.n, P1.m))
    scale = brentq(lambda t: float(gr.chart_v(t * Z0)) - target_v, 0.0, 100.0)
    return gr.from_chart(scale * Z0, P1)


class TestParameters:
    def test_cosine_sum_identity(self):
        p = sh.ShrinkParameters(a=3.0, b=2.8, beta0=2.9)
        direct = 1.0 / math.cos(p.alpha - p.beta)
        assert p.c == pytest.approx(direct, abs=1e-12)

    def test_threshold_at_three(self):
        assert abs(sh.threshold(3.0) - math.sqrt(6.0) / 2.0) < 1e-12

    def test_ordering_validation(self):
        with pytest.raises(PreconditionViolated):
            sh.ShrinkParameters(a=3.0, b=2.95, beta0=2.9)
        with pytest.raises(PreconditionViolated):
            sh.ShrinkParameters(a=1.0, b=1.0, beta0=1.0)


class TestShrinkCenter:
    def test_identical_witness(self):
        P1 = gr.standard_plane(2, 2)
        res = sh.shrink_center(P1, P1, sh.ShrinkParameters(a=3.0, b=2.8, beta0=2.9))
        assert res.case in ("TrivialCenter", "CaseI")
        assert res.new_bound_on_q == 1.0

    def test_below_threshold_is_trivial(self):
        # b = 1.2 < sqrt(6)/2 ~ 1.2247
        rng = substream(30, 0)
        P1 = gr.standard_plane(2, 2)
        Q = point_at_v(P1, 1.15, rng)
        res = sh.shrink_center(P1, Q, sh.ShrinkParameters(a=3.0, b=1.2, beta0=2.9))
        assert res.case == "TrivialCenter"
        assert gr.distance(res.p2, Q) < 1e-12

    def test_case_two_lands_on_c(self):
        rng = substream(30, 1)
        P1 = gr.standard_plane(2, 2)
        params = sh.ShrinkParameters(a=3.0, b=2.8, beta0=2.9)
        for _ in range(10):
            Q = point_at_v(P1, 2.8, rng)
            res = sh.shrink_center(P1, Q, params)
            assert res.case == "CaseII"
            assert gr.v_value(res.p2, P1) == pytest.approx(params.c, abs=1e-9)
            assert gr.v_value(Q, res.p2) == pytest.approx(res.new_bound_on_q, abs=1e-9)

    def test_precondition(self):
        rng = substream(30, 2)
        P1 = gr.standard_plane(2, 2)
        Q = point_at_v(P1, 2.85, rng)
        with pytest.raises(PreconditionViolated):
            sh.shrink_center(P1, Q, sh.ShrinkParameters(a=3.0, b=2.0, beta0=2.9))

    def test_monotone_profile_function(self):
        # t -> prod sec(theta (1 - t/L)) strictly decreases on [0, L]
        rng = substream(30, 3)
        thetas = rng.uniform(0.1, 1.1, 3)
        L = float(np.linalg.norm(thetas))
        ts = np.linspace(0.0, L, 200)
        vals = [float(np.prod(1.0 / np.cos(thetas * (1 - t / L)))) for t in ts]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    @settings(max_examples=30, derandomize=True)
    @given(st.integers(0, 100_000))
    def test_monotone_profile_property(self, seed):
        rng = substream(31, seed)
        m = int(rng.integers(1, 5))
        thetas = rng.uniform(0.05, 1.2, m)
        L = float(np.linalg.norm(thetas))
        t1, t2 = sorted(rng.uniform(0.0, L, 2))
        if t2 - t1 < 1e-9:
            return
        v1 = float(np.prod(1.0 / np.cos(thetas * (1 - t1 / L))))
        v2 = float(np.prod(1.0 / np.cos(thetas * (1 - t2 / L))))
        assert v1 > v2


class TestContainment:
    def test_degenerate_center(self):
        P1 = gr.standard_plane(2, 2)
        params = sh.ShrinkParameters(a=3.0, b=2.0, beta0=2.9)
        margin = sh.containment_check(P1, P1, params, samples=2_000, seed=0)
        # the infimum over the full sublevel set is a - b; samples approach it from above
        assert params.a - params.b - 1e-12 <= margin <= params.a - params.b + 0.01

    def test_case_two_containment(self):
        rng = substream(32, 0)
        P1 = gr.standard_plane(2, 2)
        params = sh.ShrinkParameters(a=3.0, b=2.8, beta0=2.9)
        Q = point_at_v(P1, 2.8, rng)
        res = sh.shrink_center(P1, Q, params)
        assert sh.containment_check(P1, res.p2, params, samples=10_000, seed=1) >= -1e-9

    def test_margin_shrinks_towards_a(self):
        # one witness direction scaled to each b isolates the b-dependence
        rng = substream(32, 1)
        P1 = gr.standard_plane(2, 2)
        Z0 = rng.standard_normal((2, 2))
        margins = []
        for b in (2.0, 2.5, 2.9):
            params = sh.ShrinkParameters(a=3.0, b=b, beta0=2.9)
            scale = brentq(lambda t: float(gr.chart_v(t * Z0)) - b, 0.0, 100.0)
            Q = gr.from_chart(scale * Z0, P1)
            res = sh.shrink_center(P1, Q, params)
            margins.append(sh.containment_check(P1, res.p2, params, samples=20_000, seed=2))
        assert margins[0] > margins[1] > margins[2] >= -1e-9


class TestEpsilon1:
    def test_first_branch_at_three(self):
        res = sh.compute_epsilon1(3.0, 2.9, m=2, theta_steps=32)
        assert res.first_branch == pytest.approx(math.sqrt(6.0) / 2.0 - 1.0, abs=1e-12)

    def test_degenerate_slice(self):
        thr = sh.threshold(3.0)
        res = sh.compute_epsilon1(3.0, thr, m=2, theta_steps=32)
        assert res.epsilon1 > 0.0

    def test_below_threshold_only_first_branch(self):
        res = sh.compute_epsilon1(3.0, 1.1, m=2)
        assert res.epsilon1 == res.first_branch
        assert res.epsilon2 == math.inf

    def test_regression_baselines(self):
        # recorded from this tool (grid 64 + polish, slack 1e-3)
        res2 = sh.compute_epsilon1(3.0, 2.9, m=2)
        assert res2.epsilon1 == pytest.approx(0.06819684, abs=2e-4)
        res3 = sh.compute_epsilon1(3.0, 2.9, m=3)
        assert res3.epsilon1 == pytest.approx(0.06141896, abs=5e-4)
        assert res3.epsilon1 > 0.0

    def test_budget_flag(self):
        res = sh.compute_epsilon1(3.0, 2.9, m=3, budget=20_000, polish=False)
        assert res.budget_exhausted
        assert res.epsilon1 > 0.0

    def test_sampled_decrement_respects_epsilon1(self):
        rng = substream(33, 0)
        P1 = gr.standard_plane(2, 2)
        eps = sh.compute_epsilon1(3.0, 2.9, m=2)
        for b in (1.5, 2.0, 2.5, 2.8, 2.9):
            params = sh.ShrinkParameters(a=3.0, b=b, beta0=2.9)
            for _ in range(25):
                Q = point_at_v(P1, float(rng.uniform(1.0 + 1e-6, b)), rng)
                res = sh.shrink_center(P1, Q, params, eps.epsilon1)
                assert res.new_bound_on_q <= max(b - eps.epsilon1, 1.0 + 1e-9)


class TestSphericalLaw:
    def test_triangle_inequality_along_geodesics(self):
        rng = substream(34, 0)
        P0 = gr.standard_plane(2, 2)
        for _ in range(50):
            Q = gr.from_chart(rng.uniform(-1.0, 1.0, (2, 2)), P0)
            P1 = gr.from_chart(rng.uniform(-1.0, 1.0, (2, 2)), Q)
            dec = gr.jordan_decompose(Q, P1)
            L = float(np.linalg.norm(dec.pair_angles))
            if L < 1e-6:
                continue
            t = float(rng.uniform(0.1, 0.9)) * L
            G = gr.geodesic(Q, P1, t)
            r = lambda A, B: math.acos(min(1.0, gr.w_pairing(A, B)))
            assert r(Q, G) + r(G, P1) >= r(Q, P1) - 1e-9

    def test_equality_for_single_angle_pairs(self):
        # with one active principal angle the geodesic is an ambient great circle
        theta = 1.1
        Q = gr.make_point(np.array([[1.0, 0, 0], [0, 1, 0]]))
        P1 = gr.make_point(np.array([[math.cos(theta), 0, math.sin(theta)], [0, 1, 0]]))
        t = 0.4 * theta
        G = gr.geodesic(Q, P1, t)
        r = lambda A, B: math.acos(min(1.0, gr.w_pairing(A, B)))
        assert r(Q, G) + r(G, P1) == pytest.approx(r(Q, P1), abs=1e-9)


class TestIterate:
    def make_cloud(self, bound, count, seed, n=2, m=2):
        Zs = gr.sample_chart_sublevel(n, m, bound, count, substream(35, seed))
        P0 = gr.standard_plane(n, m)
        return [gr.from_chart(Z, P0) for Z in Zs]

    def test_zero_iterations_below_threshold(self):
        cloud = self.make_cloud(1.2, 16, 0)
        params = sh.ShrinkParameters(a=3.0, b=1.2, beta0=1.2)
        trace = sh.iterate(cloud, 1.2, params, epsilon1=0.2)
        assert trace.k_actual == 0
        assert trace.bounds == [1.2]

    def test_concentrated_cloud_jumps_to_one(self):
        # cloud sits near the old center while the certified bound is loose:
        # the witness lands inside the case-I radius, so the new center is the
        # cloud point itself and the bound collapses to 1
        rng = substream(35, 7)
        P0 = gr.standard_plane(2, 2)
        pt = point_at_v(P0, 1.01, rng)
        params = sh.ShrinkParameters(a=3.0, b=2.0, beta0=2.0)
        trace = sh.iterate([pt] * 8, 2.0, params, epsilon1=0.1)
        assert trace.k_actual == 1
        assert trace.cases == ["CaseI"]
        assert trace.bounds[-1] <= 1.0 + 1e-9

    def test_iteration_count_within_plan(self):
        eps = sh.compute_epsilon1(3.0, 2.9, m=2)
        cloud = self.make_cloud(2.9, 48, 1)
        params = sh.ShrinkParameters(a=3.0, b=2.9, beta0=2.9)
        trace = sh.iterate(cloud, 2.9, params, epsilon1=eps.epsilon1)
        k_formula = int((3.0 - math.sqrt(6.0) / 2.0) / eps.epsilon1) + 1
        assert trace.k_planned == k_formula
        assert 1 <= trace.k_actual <= trace.k_planned
        assert trace.bounds[-1] < sh.threshold(3.0)

    def test_bounds_decrease_by_epsilon1(self):
        eps = sh.compute_epsilon1(3.0, 2.9, m=2)
        cloud = self.make_cloud(2.9, 32, 2)
        params = sh.ShrinkParameters(a=3.0, b=2.9, beta0=2.9)
        trace = sh.iterate(cloud, 2.9, params, epsilon1=eps.epsilon1)
        for prev, new in zip(trace.bounds, trace.bounds[1:]):
            assert new <= max(prev - eps.epsilon1, 1.0 + 1e-9) + 1e-12

    def test_cloud_exceeding_bound_rejected(self):
        cloud = self.make_cloud(2.9, 16, 3)
        params = sh.ShrinkParameters(a=3.0, b=2.9, beta0=2.9)
        with pytest.raises(PreconditionViolated):
            sh.iterate(cloud, 1.5, params, epsilon1=0.1)
