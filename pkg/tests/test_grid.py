import numpy as np
import pytest
from hypothesis import given, strategies as st

from microlab.grid import (Grid, SampledField, Spectrum, TrigInterpolant, bessel_weight, export_csv,
                           forward_transform, fourier_multiplier, inverse_transform, load_field,
                           parseval_sum, save_field, spectral_derivative)

sizes = st.sampled_from([16, 32, 64, 128, 256, 512, 1024, 2048, 4096])
seeds = st.integers(0, 2**31 - 1)


def random_field(grid, seed, complex_=False):
    r = np.random.default_rng(seed)
    vals = r.normal(size=grid.shape)
    if complex_:
        vals = vals + 1j * r.normal(size=grid.shape)
    return SampledField(grid, vals)


def rel(a, b):
    return np.linalg.norm(np.ravel(a - b)) / max(np.linalg.norm(np.ravel(b)), 1e-300)


class TestGrid:
    @pytest.mark.parametrize("n", [8, 15, 24, 100])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ValueError):
            Grid((n,))

    def test_rejects_three_dimensions(self):
        with pytest.raises(ValueError):
            Grid((16, 16, 16))

    def test_lattice_range(self):
        k = Grid((32,)).frequencies()[0]
        assert k.min() == -16 and k.max() == 15
        assert sorted(k.tolist()) == list(range(-16, 16))

    def test_real_flag_rejects_imaginary_part(self):
        g = Grid((16,))
        with pytest.raises(ValueError):
            SampledField(g, np.ones(16) + 1e-3j, real=True)
        assert SampledField(g, np.ones(16) + 1e-16j, real=True).real


class TestTransforms:
    def test_constant_maps_to_zero_frequency(self):
        for shape in [(64,), (16, 32)]:
            g = Grid(shape)
            F = forward_transform(SampledField(g, np.full(shape, 3.0)))
            expected = np.zeros(shape, complex)
            expected[(0,) * g.dim] = (2 * np.pi) ** g.dim * 3.0
            assert np.allclose(F.coefficients, expected, atol=1e-10)

    def test_pure_mode(self):
        g = Grid((64,))
        F = forward_transform(SampledField.from_function(g, lambda x: np.exp(3j * x)))
        assert abs(F.at(3) - 2 * np.pi) < 1e-12
        others = np.delete(F.coefficients, 3)
        assert np.max(np.abs(others)) < 1e-12

    def test_zero_spectrum(self):
        g = Grid((32,))
        f = inverse_transform(Spectrum(g, np.zeros(32, complex)))
        assert f.real and np.all(f.values == 0)

    def test_delta_inverse_is_constant(self):
        g = Grid((16, 16))
        c = np.zeros((16, 16), complex)
        c[0, 0] = (2 * np.pi) ** 2
        f = inverse_transform(Spectrum(g, c))
        assert np.allclose(f.values, 1.0, atol=1e-14)

    @given(n=sizes, seed=seeds)
    def test_round_trip(self, n, seed):
        g = Grid((n,))
        f = random_field(g, seed, complex_=True)
        assert rel(inverse_transform(forward_transform(f)).values, f.values) <= 1e-12
        F = forward_transform(random_field(g, seed + 1, complex_=True))
        assert rel(forward_transform(inverse_transform(F)).coefficients, F.coefficients) <= 1e-12

    @given(n=sizes, seed=seeds, dim=st.sampled_from([1, 2]))
    def test_parseval(self, n, seed, dim):
        # oracle: direct trapezoid quadrature of |f|^2
        g = Grid((min(n, 128),) * dim)
        f = random_field(g, seed)
        quad = float(np.sum(np.abs(f.values) ** 2) * g.cell_volume)
        assert abs(parseval_sum(forward_transform(f)) - quad) <= 1e-12 * quad

    def test_parseval_hundred_fields(self):
        g = Grid((256,))
        for seed in range(100):
            f = random_field(g, seed)
            quad = float(np.sum(f.values ** 2) * g.cell_volume)
            assert abs(parseval_sum(forward_transform(f)) - quad) <= 1e-12 * quad


class TestMultipliers:
    def test_identity_weight(self, rng):
        g = Grid((64,))
        f = SampledField(g, rng.normal(size=64))
        assert np.allclose(fourier_multiplier(lambda k: np.ones_like(k, float), f).values, f.values, atol=1e-14)

    def test_derivative_of_sine(self):
        g = Grid((64,))
        f = SampledField.from_function(g, np.sin)
        out = fourier_multiplier(lambda k: 1j * k, f)
        assert np.max(np.abs(out.values - np.cos(g.axes()[0]))) <= 1e-12

    def test_bessel_inverse_pair(self, rng):
        g = Grid((128,))
        f = SampledField(g, rng.normal(size=128))
        up = fourier_multiplier(bessel_weight(g, 1.7), f)
        back = fourier_multiplier(bessel_weight(g, -1.7), up)
        assert rel(back.values, f.values) <= 1e-12

    def test_nonfinite_weight_rejected(self):
        g = Grid((16,))
        with pytest.raises(ValueError):
            fourier_multiplier(np.full(16, np.inf), SampledField.zeros(g))

    @given(seed=seeds, s1=st.floats(-2, 2), s2=st.floats(-2, 2))
    def test_multiplicative_in_weight(self, seed, s1, s2):
        g = Grid((64,))
        f = random_field(g, seed)
        w1, w2 = bessel_weight(g, s1), bessel_weight(g, s2) * np.exp(0.1j * g.frequencies()[0])
        two = fourier_multiplier(w2, fourier_multiplier(w1, f))
        one = fourier_multiplier(w1 * w2, f)
        assert rel(two.values, one.values) <= 1e-12

    @given(seed=seeds, a=st.floats(-3, 3), b=st.floats(-3, 3))
    def test_linear_in_field(self, seed, a, b):
        g = Grid((64,))
        f, h = random_field(g, seed), random_field(g, seed + 7)
        w = bessel_weight(g, 0.5)
        lhs = fourier_multiplier(w, f * a + h * b)
        rhs = fourier_multiplier(w, f) * a + fourier_multiplier(w, h) * b
        assert np.max(np.abs(lhs.values - rhs.values)) <= 1e-12 * (1 + np.max(np.abs(rhs.values)))

    @given(seed=seeds, s=st.floats(-2, 2))
    def test_hermitian_weights_keep_real(self, seed, s):
        g = Grid((32, 32))
        f = random_field(g, seed)
        k1, k2 = g.frequencies()
        # Hermitian on the lattice: the Nyquist rows are their own partners, so keep them real
        odd = np.where((k1 == -16) | (k2 == -16), 0.0, 1j * k1)
        assert fourier_multiplier(bessel_weight(g, s) + odd, f).real


class TestDerivatives:
    def test_zero_order_is_identity(self, rng):
        g = Grid((32,))
        f = SampledField(g, rng.normal(size=32))
        assert np.allclose(spectral_derivative(f, 0).values, f.values, atol=1e-14)

    def test_cosine(self):
        g = Grid((64,))
        f = SampledField.from_function(g, lambda x: np.cos(2 * x))
        assert np.max(np.abs(spectral_derivative(f, 1).values + 2 * np.sin(2 * g.axes()[0]))) < 1e-12

    def test_second_derivative_matches_difference_quotient(self):
        # band-limited field: the centered second difference converges at O(h^2)
        errs = []
        for n in (128, 256, 512):
            g = Grid((n,))
            x = g.axes()[0]
            f = SampledField(g, np.sin(3 * x) + 0.5 * np.cos(5 * x + 1))
            h = g.spacing[0]
            fd = (np.roll(f.values, -1) - 2 * f.values + np.roll(f.values, 1)) / h ** 2
            errs.append(np.max(np.abs(spectral_derivative(f, (2,)).values - fd)))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)

    def test_mixed_derivative_2d(self):
        g = Grid((32, 32))
        f = SampledField.from_function(g, lambda x, y: np.sin(x) * np.cos(2 * y))
        x, y = g.points()
        assert np.allclose(spectral_derivative(f, (1, 1)).values, -2 * np.cos(x) * np.sin(2 * y), atol=1e-12)


class TestInterpolation:
    def test_reproduces_samples_and_off_grid_modes(self):
        g = Grid((32,))
        f = SampledField.from_function(g, lambda x: np.cos(3 * x) + np.sin(x))
        ip = TrigInterpolant(f)
        assert np.allclose(ip(g.axes()[0][:, None]), f.values, atol=1e-13)
        pts = np.array([[0.123], [2.5], [6.0]])
        assert np.allclose(ip(pts), np.cos(3 * pts[:, 0]) + np.sin(pts[:, 0]), atol=1e-13)
        assert np.allclose(ip.gradient(pts)[:, 0], -3 * np.sin(3 * pts[:, 0]) + np.cos(pts[:, 0]), atol=1e-12)

    def test_embedded_axis(self):
        g = Grid((16,))
        ip = TrigInterpolant(SampledField.from_function(g, np.sin), base_dim=2, axes=(1,))
        assert ip(np.array([9.0, 0.5])) == pytest.approx(np.sin(0.5))
        assert np.allclose(ip.gradient(np.array([9.0, 0.5])), [0.0, np.cos(0.5)])

    def test_refinement_is_exact_for_band_limited(self):
        g = Grid((32,))
        f = SampledField.from_function(g, lambda x: np.cos(5 * x))
        fine = f.refined()
        assert np.allclose(fine.values, np.cos(5 * fine.grid.axes()[0]), atol=1e-13)


class TestFiles:
    @pytest.mark.parametrize("complex_", [False, True])
    def test_round_trip(self, tmp_path, rng, complex_):
        g = Grid((16, 32))
        vals = rng.normal(size=g.shape) + (1j * rng.normal(size=g.shape) if complex_ else 0)
        f = SampledField(g, vals)
        save_field(tmp_path / "f.field", f)
        back = load_field(tmp_path / "f.field")
        assert back.grid == g and back.real == (not complex_)
        assert np.array_equal(back.values, f.values)

    def test_csv(self, tmp_path):
        g = Grid((16,))
        export_csv(tmp_path / "f.csv", SampledField.from_function(g, np.cos))
        lines = (tmp_path / "f.csv").read_text().splitlines()
        assert lines[0] == "index,x,value" and len(lines) == 17
