import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from spdelab.spectral import (AliasingWarning, PhysicalField, SpectralVector, apply_fractional_power,
                              apply_semigroup, eigenpair, eigenvalue, eigenvalues, grid_points,
                              smoothing_constant, sobolev_norm, to_physical, to_spectral)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
coeff_arrays = arrays(np.float64, st.integers(1, 40), elements=finite)

# <xi(1-xi), e_n> by adaptive quadrature (scipy.integrate.quad, 1e-14 tolerances), frozen
XI_ONE_MINUS_XI = {1: 0.18244222961109438, 2: 0.0, 3: 0.0067571196152257, 5: 0.0014595378368887392}


class TestEigenpairs:
    def test_first(self):
        lam, e = eigenpair(1)
        assert lam == pytest.approx(9.8696, abs=1e-4)
        assert e(0.5) == pytest.approx(math.sqrt(2))
        assert "sin" in str(e)

    def test_second(self):
        assert eigenvalue(2) == pytest.approx(4 * math.pi**2, rel=1e-15)

    def test_weyl_ratio(self):
        assert eigenvalue(10) / eigenvalue(1) == pytest.approx(100.0, rel=1e-14)

    @pytest.mark.parametrize("n", [0, -3])
    def test_domain(self, n):
        with pytest.raises(ValueError):
            eigenpair(n)

    def test_increasing_and_readonly(self):
        lam = eigenvalues(50)
        assert np.all(np.diff(lam) > 0)
        with pytest.raises(ValueError):
            lam[0] = 1.0


class TestSpectralVector:
    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            SpectralVector([1.0, np.nan])

    def test_immutable(self):
        v = SpectralVector([1.0, 2.0])
        with pytest.raises(ValueError):
            v.coeffs[0] = 3.0
        assert v.n_modes == 2 and len(v) == 2

    def test_unit(self):
        assert np.array_equal(SpectralVector.unit(2, 3, 0.5).coeffs, [0, 0.5, 0])
        with pytest.raises(ValueError):
            SpectralVector.unit(4, 3)


class TestSobolevNorm:
    def test_base(self):
        assert sobolev_norm(SpectralVector.unit(1, 5), 0) == 1.0

    def test_gamma_one(self):
        assert sobolev_norm(SpectralVector.unit(1, 5), 1) == pytest.approx(math.pi)

    def test_negative_gamma(self):
        v = SpectralVector([1.0, 1.0, 0, 0])
        expected = math.sqrt(1 / math.pi**4 + 1 / (16 * math.pi**4))
        assert sobolev_norm(v, -2) == pytest.approx(expected, rel=1e-14)

    def test_tail_diagnostic(self):
        v = SpectralVector([1.0, 2.0, 3.0])
        norm, tail = sobolev_norm(v, 0.5, return_tail=True)
        assert tail == pytest.approx(eigenvalue(3) ** 0.5 * 9)
        assert norm**2 == pytest.approx(sum(eigenvalue(n) ** 0.5 * c**2 for n, c in zip((1, 2, 3), (1, 2, 3))))

    def test_batched(self):
        X = np.arange(12.0).reshape(3, 4)
        out = sobolev_norm(X, 0.3)
        assert out.shape == (3,)
        assert out[1] == pytest.approx(sobolev_norm(SpectralVector(X[1]), 0.3))

    @given(coeff_arrays)
    def test_gamma_zero_is_euclidean(self, c):
        assert sobolev_norm(c, 0) == pytest.approx(float(np.linalg.norm(c)), rel=1e-12, abs=1e-300)

    @given(coeff_arrays, st.floats(-2, 2), st.floats(0, 2))
    def test_monotone_in_gamma(self, c, g, dg):
        assert sobolev_norm(c, g) <= sobolev_norm(c, g + dg) * (1 + 1e-12) + 1e-300


class TestSemigroup:
    def test_identity(self):
        v = SpectralVector.unit(1, 4)
        assert np.array_equal(apply_semigroup(v, 0).coeffs, v.coeffs)

    def test_scalar_decay(self):
        out = apply_semigroup(SpectralVector.unit(1, 3), 1.0)
        assert out.coeffs[0] == pytest.approx(math.exp(-math.pi**2), rel=1e-14)
        assert out.coeffs[1:].tolist() == [0, 0]

    def test_negative_time(self):
        with pytest.raises(ValueError):
            apply_semigroup(SpectralVector.unit(1, 3), -1e-9)

    def test_smoothing_example(self):
        # per-mode maximum of lambda^(1/2) e^{-lambda t} sits at lambda = 1/(2t)
        t = 1e-3
        lam = eigenvalues(400)
        v = np.ones(400) / 20.0
        lhs = sobolev_norm(apply_semigroup(v, t), 1)
        bound = np.max(np.sqrt(lam) * np.exp(-lam * t)) * np.linalg.norm(v)
        assert lhs <= bound
        assert np.max(np.sqrt(lam) * np.exp(-lam * t)) <= math.sqrt(1 / (2 * t)) * math.exp(-0.5)

    @given(coeff_arrays, st.floats(0, 0.5), st.floats(0, 0.5))
    def test_semigroup_law(self, c, t, s):
        a = apply_semigroup(apply_semigroup(c, t), s)
        b = apply_semigroup(c, t + s)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-290)

    @given(coeff_arrays, st.floats(0, 10))
    def test_contractive(self, c, t):
        assert np.linalg.norm(apply_semigroup(c, t)) <= np.linalg.norm(c) * (1 + 1e-15)

    @pytest.mark.parametrize("mu", [0.25, 0.5, 1.0])
    def test_smoothing_constant(self, mu):
        lam = eigenvalues(2000)
        ts = np.geomspace(1e-4, 1, 200)
        sup = max(t**mu * np.max(lam**mu * np.exp(-lam * t)) for t in ts)
        assert sup <= smoothing_constant(mu) + 1e-10
        assert smoothing_constant(mu) == pytest.approx((mu / math.e) ** mu)


class TestFractionalPower:
    def test_identity(self):
        c = np.array([1.0, -2.0, 3.0])
        assert np.array_equal(apply_fractional_power(c, 0), c)

    def test_mu_one(self):
        out = apply_fractional_power(SpectralVector.unit(1, 3), 1)
        assert out.coeffs[0] == pytest.approx(math.pi**2)

    def test_half_twice(self):
        c = np.array([1.0, 0.5, -0.25, 2.0])
        twice = apply_fractional_power(apply_fractional_power(c, 0.5), 0.5)
        np.testing.assert_allclose(twice, apply_fractional_power(c, 1.0), rtol=1e-14)

    @given(coeff_arrays, st.floats(-1, 1), st.floats(-1, 1))
    def test_composition(self, c, a, b):
        lhs = apply_fractional_power(apply_fractional_power(c, a), b)
        np.testing.assert_allclose(lhs, apply_fractional_power(c, a + b), rtol=1e-12, atol=1e-300)


class TestTransforms:
    def test_single_mode_synthesis(self):
        field = to_physical(SpectralVector.unit(1, 4), 15)
        assert isinstance(field, PhysicalField)
        np.testing.assert_allclose(field.values, math.sqrt(2) * np.sin(math.pi * field.points), atol=1e-15)
        assert field.grid_size == 15

    def test_round_trip_example(self):
        v = np.random.default_rng(3).standard_normal(8)
        back = to_spectral(PhysicalField(to_physical(v, 32)), 8)
        np.testing.assert_allclose(back.coeffs, v, atol=1e-12)

    @pytest.mark.parametrize("n", sorted(XI_ONE_MINUS_XI))
    def test_parabola_coefficients(self, n):
        xi = grid_points(512)
        c = to_spectral(xi * (1 - xi), 8)
        assert c[n - 1] == pytest.approx(XI_ONE_MINUS_XI[n], abs=1e-7)
        if n % 2:
            assert c[n - 1] == pytest.approx(4 * math.sqrt(2) / (n * math.pi) ** 3, rel=1e-5)

    def test_alias_warning(self):
        with pytest.warns(AliasingWarning):
            to_spectral(np.ones(4), 8)

    def test_no_warning_when_resolved(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            to_spectral(np.ones(16), 8)

    @given(st.integers(1, 256), st.integers(0, 64), st.integers(0, 2**31))
    def test_round_trip_property(self, N, extra, seed):
        v = np.random.default_rng(seed).standard_normal(N)
        back = to_spectral(to_physical(v, N + extra), N)
        assert np.max(np.abs(back - v)) <= 1e-10
