import numpy as np
import pytest

from retina_codec.dynamics import (
    DEFAULT_DT,
    InnerParams,
    LutError,
    LutTable,
    Trajectory,
    bipolar_family,
    build_cg_lut,
    build_cg_luts,
    ganglionic_family,
    invert_lut,
    rectifier,
    simulate_bipolar,
    simulate_ganglionic,
)

P = InnerParams()
T_K = [5e-3 + k * 1e-3 for k in range(9)]


def _halving_error(fine, coarse):
    # fine has twice the samples; compare on the shared grid
    a = fine[..., ::2]
    return np.abs(a - coarse).max() / max(np.abs(a).max(), 1e-30)


class TestParams:
    def test_physiological_defaults(self):
        assert (P.g0_b, P.tau_b, P.lambda_b, P.c_b) == (8e-10, 12e-3, 9e-7, 1.5e-10)
        assert (P.v0_g, P.i0_g, P.w_g, P.tau_g, P.lambda_g) == (4e-3, 15e-12, 0.8, 16e-3, 12e-9)

    @pytest.mark.parametrize("name", ["c_b", "tau_g", "w_g"])
    def test_rejects_non_positive(self, name):
        with pytest.raises(ValueError, match=name):
            InnerParams(**{name: 0.0})

    def test_dt_bound(self):
        with pytest.raises(ValueError, match="tau_b"):
            simulate_bipolar(1e-10, 0.01, dt=2e-4)


class TestBipolar:
    def test_zero_input(self):
        tr = simulate_bipolar(0.0, 0.05)
        assert not tr.samples.any()

    def test_trajectory_lookup(self):
        tr = simulate_bipolar(1e-10, 0.02)
        assert tr.at(0.01) == tr.samples[1000]
        with pytest.raises(ValueError):
            tr.at(0.012345678)

    def test_negative_input_rejected(self):
        with pytest.raises(ValueError):
            bipolar_family([-1e-12], 0.01, DEFAULT_DT, P)

    @pytest.mark.parametrize("i_mag", np.linspace(0, 500e-12, 10))
    def test_dt_halving(self, i_mag):
        coarse = simulate_bipolar(i_mag, 0.05, 1e-5).samples
        fine = simulate_bipolar(i_mag, 0.05, 5e-6).samples
        assert _halving_error(fine, coarse) <= 1e-4

    def test_compressive(self):
        ibar = np.linspace(10e-12, 400e-12, 12)
        idx = [1000, 2000, 5000]  # 10, 20, 50 ms
        base = bipolar_family(ibar, 0.05, DEFAULT_DT, P)[:, idx]
        for a in (1.5, 2.0, 4.0, 10.0):
            scaled = bipolar_family(a * ibar, 0.05, DEFAULT_DT, P)[:, idx]
            assert np.all(scaled <= a * base * (1 + 1e-12))

    def test_early_charge_below_leak_free_ramp(self):
        i = 1e-15
        tr = simulate_bipolar(i, 0.002)
        ramp = i * tr.times / P.c_b
        assert np.all(tr.samples <= ramp + 1e-20)
        assert tr.samples[-1] > 0.5 * ramp[-1]


class TestRectifier:
    def test_junction(self):
        assert rectifier(4e-3) == pytest.approx(15e-12, rel=1e-12)

    def test_linear_branch(self):
        assert rectifier(5e-3) == pytest.approx(27e-12, rel=1e-12)

    def test_soft_floor(self):
        vals = rectifier(np.array([-1e-2, -1.0, -1e3, -1e6]))
        assert np.all(vals > 0)
        assert np.all(np.diff(vals) < 0)
        assert vals[-1] < 1e-16

    def test_continuity(self):
        eps = 1e-9
        assert abs(rectifier(P.v0_g - eps) - rectifier(P.v0_g + eps)) <= 1e-15

    def test_slope_matches_at_junction(self):
        h = 1e-9
        left = (rectifier(P.v0_g) - rectifier(P.v0_g - h)) / h
        right = (rectifier(P.v0_g + h) - rectifier(P.v0_g)) / h
        assert left == pytest.approx(P.lambda_g, rel=1e-5)
        assert right == pytest.approx(P.lambda_g, rel=1e-9)

    def test_monotone(self):
        v = np.linspace(-0.1, 0.1, 20001)
        assert np.all(np.diff(rectifier(v)) > 0)


class TestGanglionic:
    def test_zero_input_constant(self):
        ig = simulate_ganglionic(simulate_bipolar(0.0, 0.05))
        np.testing.assert_array_equal(ig.samples, rectifier(0.0))

    def test_no_transient_is_pointwise(self):
        tr = simulate_bipolar(2e-10, 0.05)
        p0 = InnerParams(w_g=1e-300)
        ig = simulate_ganglionic(tr, p0)
        np.testing.assert_allclose(ig.samples, rectifier(tr.samples, p0), rtol=1e-14, atol=0)

    def test_step_response_closed_form(self):
        # constant V = vs from t = 0; the filter's history before the first
        # sample is a one-step linear ramp up from zero, integrated exactly here
        vs = 6e-3
        dt = DEFAULT_DT
        tau = P.tau_g
        n = 8001
        out = ganglionic_family(np.full((1, n), vs), dt, P)[0]
        t = dt * np.arange(n)
        onset = 1 - (tau / dt) * (1 - np.exp(-dt / tau))
        y = vs * (1 - np.exp(-t / tau)) + vs * np.exp(-t / tau) * onset
        np.testing.assert_allclose(out, rectifier(vs - P.w_g * y, P), rtol=1e-5)
        late = rectifier((1 - P.w_g) * vs, P)
        assert out[0] > out[-1]
        assert out[-1] == pytest.approx(late, rel=1e-3)

    def test_overshoot_then_decay(self):
        tr = simulate_bipolar(3e-10, 0.08)
        ig = simulate_ganglionic(tr).samples
        peak = int(np.argmax(ig))
        assert 0 < peak < len(ig) - 1
        assert ig[-1] < ig[peak]

    @pytest.mark.parametrize("i_mag", np.linspace(0, 500e-12, 10))
    def test_dt_halving(self, i_mag):
        coarse = simulate_ganglionic(simulate_bipolar(i_mag, 0.05, 1e-5)).samples
        fine = simulate_ganglionic(simulate_bipolar(i_mag, 0.05, 5e-6)).samples
        assert _halving_error(fine, coarse) <= 1e-4


@pytest.fixture(scope="module")
def luts():
    return build_cg_luts(T_K, np.linspace(0, 500e-12, 1024), P)


class TestLut:
    def test_zero_knot(self, luts):
        for lut in luts:
            assert lut.xs[0] == 0.0
            assert lut.ys[0] == pytest.approx(rectifier(0.0), rel=1e-12)

    def test_monotone(self, luts):
        for lut in luts:
            assert np.all(np.diff(lut.ys) >= 0)

    def test_distinct_cuts(self, luts):
        for a, b in zip(luts, luts[1:]):
            assert np.abs(a.ys - b.ys).max() > 1e-14

    def test_matches_single_build(self, luts):
        one = build_cg_lut(T_K[3], luts[3].xs, P)
        np.testing.assert_array_equal(one.ys, luts[3].ys)

    def test_grid_refinement(self):
        coarse = build_cg_lut(0.013, np.linspace(0, 500e-12, 1024))
        fine = build_cg_lut(0.013, np.linspace(0, 500e-12, 2047))
        err = np.abs(coarse(fine.xs) - fine.ys).max() / np.abs(fine.ys).max()
        assert err <= 1e-3

    def test_high_magnitude_emphasis(self):
        for top in (500e-12, 1e-9):
            for lut in build_cg_luts(T_K, np.linspace(0, top, 1024), P):
                dec = len(lut.xs) // 10
                low = (lut.ys[dec] - lut.ys[0]) / (lut.xs[dec] - lut.xs[0])
                high = (lut.ys[-1] - lut.ys[-1 - dec]) / (lut.xs[-1] - lut.xs[-1 - dec])
                assert high > low, (top, lut.t)

    def test_grid_validation(self):
        with pytest.raises(LutError):
            build_cg_lut(0.005, np.linspace(0, 1e-10, 100))
        with pytest.raises(LutError):
            build_cg_lut(0.005, np.linspace(1e-10, 0, 300))

    def test_non_monotone_detected(self):
        with pytest.raises(LutError, match=r"decreases on \["):
            from retina_codec.dynamics import _assert_monotone

            _assert_monotone(np.array([0.0, 2.0, 1.0]), np.array([0.0, 1.0, 2.0]), 0.01)

    def test_invert_knots(self, luts):
        lut = luts[0]
        for m in (0, 17, 500, 1023):
            assert invert_lut(lut, lut.ys[m]) == pytest.approx(lut.xs[m], abs=1e-24)

    def test_invert_clamps(self, luts):
        lut = luts[2]
        assert invert_lut(lut, lut.ys[0] * 0.5) == lut.xs[0]
        assert invert_lut(lut, lut.ys[-1] * 2) == lut.xs[-1]

    def test_roundtrip_within_step(self, luts, rng):
        for lut in luts:
            x = rng.uniform(0, lut.xs[-1], 1000)
            assert np.abs(invert_lut(lut, lut(x)) - x).max() <= lut.step

    def test_invert_rejects_flat(self):
        flat = LutTable(t=0.0, xs=np.arange(4.0), ys=np.ones(4))
        with pytest.raises(LutError):
            invert_lut(flat, 1.0)

    def test_csv_roundtrip(self, luts):
        lut = luts[4]
        back = LutTable.from_csv(lut.to_csv())
        np.testing.assert_array_equal(back.xs, lut.xs)
        np.testing.assert_array_equal(back.ys, lut.ys)
        assert back.t == lut.t and back.label == "cg"
        assert back.meta["params"]["tau_g"] == P.tau_g
        assert back.to_csv() == lut.to_csv()


def test_trajectory_times():
    tr = Trajectory(1e-3, np.zeros(4), t0=0.5)
    np.testing.assert_allclose(tr.times, [0.5, 0.501, 0.502, 0.503])
