import numpy as np
import pytest
from hypothesis import given, strategies as st

from microlab.bicharacteristics import (PhasePoint, StepConfig, funnel, integrate, mechanical_symbol,
                                        null_project, power_solution_constant, ray_trace_wave,
                                        wave_null_start)
from microlab.grid import Grid, SampledField
from microlab.symbols import CoefficientSymbol, constant_field, principal_symbol, wave_symbol

G16 = Grid((16,))
FREE = principal_symbol(CoefficientSymbol(G16, {(2,): constant_field(G16, 1.0)}))


def sine_speed(n=256):
    return SampledField.from_function(Grid((n,)), lambda x: 2 + np.sin(x))


def const(value, n=64):
    return SampledField(Grid((n,)), np.full(n, float(value)))


class TestIntegrate:
    @given(x0=st.floats(-3, 3), xi0=st.floats(0.1, 3) | st.floats(-3, -0.1))
    def test_free_flow(self, x0, xi0):
        tr = integrate(FREE, PhasePoint([x0], [xi0]), 1.0, 1e-8)
        assert tr.status == "ok"
        assert abs(tr.x[-1, 0] - (x0 + 2 * xi0)) <= 1e-8
        assert abs(tr.xi[-1, 0] - xi0) <= 1e-8
        assert np.all(np.diff(tr.times) > 0)

    def test_steps_within_bounds(self):
        cfg = StepConfig()
        tr = integrate(wave_symbol(sine_speed()), wave_null_start(sine_speed(), 1.0, 1), 1.0)
        steps = np.diff(tr.times)
        assert np.all(steps <= cfg.max_step * (1 + 1e-12))
        assert np.all(steps[:-1] >= cfg.min_step)

    def test_unit_wave_speed(self):
        a = const(1.0)
        ph = wave_symbol(a)
        start = null_project(ph, PhasePoint([0.0, 1.0], [0.5, 0.5]))
        tr = integrate(ph, start, 1.0)
        dxdt = np.diff(tr.x[:, 1]) / np.diff(tr.x[:, 0])
        assert np.allclose(np.abs(dxdt), 1.0, atol=1e-10)

    def test_wave_conservation(self):
        a = sine_speed()
        tr = integrate(wave_symbol(a), wave_null_start(a, 1.0, 1), 1.0, 1e-8)
        assert tr.drift() <= 1e-6
        # step-halving oracle: a tighter tolerance lands on the same point
        tight = integrate(wave_symbol(a), wave_null_start(a, 1.0, 1), 1.0, 1e-11)
        assert np.max(np.abs(tr.states[-1] - tight.states[-1])) <= 1e-6

    @given(x0=st.floats(0, 2 * np.pi), sign=st.sampled_from([1, -1]), tol=st.sampled_from([1e-6, 1e-8, 1e-10]))
    def test_conservation_scales_with_tolerance(self, x0, sign, tol):
        a = sine_speed(64)
        start = wave_null_start(a, x0, sign)
        tr = integrate(wave_symbol(a), start, 1.0, tol)
        length = np.sum(np.linalg.norm(np.diff(tr.states, axis=0), axis=1))
        assert tr.drift() <= 100 * tol * max(length, 1.0)

    @given(x0=st.floats(0, 2 * np.pi), lam=st.floats(0.25, 4))
    def test_flow_homogeneity(self, x0, lam):
        # degree 2: scaling the fiber by lam traverses the same x-path lam times faster
        a = sine_speed(64)
        ph = wave_symbol(a)
        start = wave_null_start(a, x0, 1)
        base = integrate(ph, start, 1.0, 1e-10, t_eval=[1.0])
        scaled = integrate(ph, PhasePoint(start.x, np.array(start.xi) * lam), 1.0 / lam, 1e-10)
        assert np.allclose(scaled.x[-1], base.x[-1], atol=1e-7)
        assert np.allclose(scaled.xi[-1], lam * base.xi[-1], atol=1e-7 * lam)

    @given(x0=st.floats(0, 2 * np.pi), sign=st.sampled_from([1, -1]))
    def test_time_reversal(self, x0, sign):
        a = sine_speed(64)
        ph = wave_symbol(a)
        start = wave_null_start(a, x0, sign)
        fwd = integrate(ph, start, 1.0, 1e-8)
        back = integrate(ph, fwd.end(), (1.0, 0.0), 1e-8)
        assert np.max(np.abs(back.states[-1] - start.state())) <= 10 * 1e-8

    def test_zero_section_rejected(self):
        with pytest.raises(ValueError):
            integrate(FREE, PhasePoint([0.0], [0.0]), 1.0)

    def test_tolerance_range(self):
        with pytest.raises(ValueError):
            integrate(FREE, PhasePoint([0.0], [1.0]), 1.0, 1e-3)

    def test_csv(self, tmp_path):
        tr = integrate(FREE, PhasePoint([0.0], [1.0]), 0.5)
        tr.to_csv(tmp_path / "t.csv")
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == "t,x0,xi0,p_hat_value" and len(lines) == len(tr.times) + 1


class TestNullProject:
    def test_snaps_to_cone(self):
        a = sine_speed()
        ph = wave_symbol(a)
        x = 1.3
        av = 2 + np.sin(x)
        xi = 0.6
        pt = null_project(ph, PhasePoint([0.0, x], [np.sqrt(av) * xi * 1.02, xi]))
        tau, xi1 = pt.xi
        assert abs(tau ** 2 - av * xi1 ** 2) <= 1e-9
        assert np.hypot(tau, xi1) == pytest.approx(np.hypot(np.sqrt(av) * xi * 1.02, xi))

    def test_fixed_point(self):
        a = const(1.0)
        pt = PhasePoint([0.0, 1.0], [1.0, 1.0])
        assert null_project(wave_symbol(a), pt) == pt

    def test_elliptic_has_no_root(self):
        g = Grid((16, 16))
        ph = principal_symbol(CoefficientSymbol(g, {(2, 0): constant_field(g, 1), (0, 2): constant_field(g, 1)}))
        with pytest.raises(ValueError):
            null_project(ph, PhasePoint([0.0, 0.0], [1.0, 0.2]))


class TestFunnel:
    def test_lipschitz_flow_stays_thin(self):
        f = funnel(FREE, PhasePoint([0.0], [1.0]), 1.0, 16, 1e-6, n_times=17)
        assert f.width[0] <= 2e-6
        assert np.all(f.width <= 3e-6 * (1 + 2 * f.times))

    def test_validation(self):
        with pytest.raises(ValueError):
            funnel(FREE, PhasePoint([0.0], [1.0]), 1.0, 8)
        with pytest.raises(ValueError):
            funnel(FREE, PhasePoint([0.0], [1.0]), 1.0, 16, 0.0)

    def test_power_solution(self):
        K = power_solution_constant(0.5)
        assert K == pytest.approx(1 / 144)
        # x = K t^4 solves x'' = sqrt(x)
        t = 0.7
        assert 12 * K * t ** 2 == pytest.approx(np.sqrt(K * t ** 4))

    def test_mechanical_symbol_gradient(self):
        sym = mechanical_symbol(0.5)
        gx, gxi = sym.gradient([0.25], [0.3])
        assert gx[0] == pytest.approx(-0.5) and gxi[0] == pytest.approx(0.3)
        smooth = sym.mollified(4)
        h = 1e-6
        fd = (smooth.value([0.2 + h], [0.0]) - smooth.value([0.2 - h], [0.0])) / (2 * h)
        assert smooth.gradient([0.2], [0.0])[0][0] == pytest.approx(fd, rel=1e-6)

    def test_mollified_ladder_is_unique(self):
        f = funnel(mechanical_symbol(0.5), PhasePoint([0.0], [0.0]), 1.0, 16, 1e-6, (4,), n_times=9,
                   jitter_in=("xi",))
        assert f.ladder_widths[4][-1] < 1e-3 < f.width[-1]


class TestRays:
    @pytest.mark.parametrize("value,speed", [(1.0, 1.0), (4.0, 2.0)])
    def test_constant_speed(self, value, speed):
        for sign in (1, -1):
            t, x = ray_trace_wave(const(value), 2.0, sign, 1.0)[-1]
            assert t == pytest.approx(1.0) and x == pytest.approx(2.0 + sign * speed, abs=1e-10)

    @pytest.mark.parametrize("sign", [1, -1])
    def test_matches_phase_space_flow(self, sign):
        a = sine_speed()
        ray = ray_trace_wave(a, 1.0, sign, 1.0)
        full = integrate(wave_symbol(a), wave_null_start(a, 1.0, sign), 1.0, 1e-10, t_eval=[1.0])
        i = int(np.argmin(np.abs(full.x[:, 0] - 1.0)))
        assert full.x[i, 0] == pytest.approx(1.0, abs=1e-12)
        assert abs(ray[-1][1] - full.x[i, 1]) <= 1e-6

    def test_requires_positive_coefficient(self):
        with pytest.raises(ValueError):
            ray_trace_wave(const(-1.0), 0.0, 1)
        with pytest.raises(ValueError):
            ray_trace_wave(const(1.0), 0.0, 0)
