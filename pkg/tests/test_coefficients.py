import math
import pickle

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spdelab import quadrature
from spdelab.coefficients import (KernelFamily, PowerKernel, Regime, ScalarLipschitz, WhiteNoiseKernel,
                                  apply_F, apply_G_increment, builtin_kernels, verify_assumptions)
from spdelab.noise import NoiseSpec
from spdelab.spectral import AliasingWarning, SpectralVector, to_physical, to_spectral

# int_0^1 sin(sqrt2 sin(pi xi)) * 2 sin^2(pi xi) dxi by scipy.integrate.quad (abs tol 1e-14), frozen
G_SIN_E1 = 0.9066149347105688
# (int_0^1 t^-0.4 sum_n exp(-2 (n pi)^2 t) dt)^(1/2), mpmath theta function + tanh-sinh quadrature, frozen
WHITE_KG_ALPHA_02 = 1.179091979110649660


class TestScalarLipschitz:
    @pytest.mark.parametrize("base,lip", [("sin", 1.0), ("cos", 1.0), ("tanh", 1.0), ("identity", 1.0), ("one", 0.0)])
    def test_constants(self, base, lip):
        f = ScalarLipschitz.elementwise(base, scale=2.5)
        assert f.lipschitz_constant == pytest.approx(2.5 * lip)
        assert f.check_lipschitz()

    def test_zero_and_constant(self):
        assert ScalarLipschitz.zero().is_zero
        c = ScalarLipschitz.constant(0.7)
        assert c.constant_value == 0.7 and not c.is_zero
        assert not c.vanishes_at_zero
        assert ScalarLipschitz.linear(2).vanishes_at_zero

    def test_unknown_base(self):
        with pytest.raises(ValueError):
            ScalarLipschitz.elementwise("exp")

    def test_negative_constant(self):
        with pytest.raises(ValueError):
            ScalarLipschitz(np.sin, -1.0)

    def test_picklable(self):
        f = ScalarLipschitz.elementwise("cos", 0.5, 0.1)
        g = pickle.loads(pickle.dumps(f))
        assert g(np.array([0.3]))[0] == f(np.array([0.3]))[0]

    def test_wrong_constant_detected(self):
        assert not ScalarLipschitz(np.sin, 0.5).check_lipschitz()


class TestApplyF:
    def test_weak_derivative_of_first_mode(self):
        out = apply_F(np.array([1.0, 0, 0, 0]), ScalarLipschitz.linear(1.0), 64)
        # <d/dxi e_1, e_n> = 4n/(n^2-1) for even n
        np.testing.assert_allclose(out, [0, 8 / 3, 0, 16 / 15], atol=1e-12)

    def test_constant_shift_ignored(self):
        x = np.array([0.3, -0.2, 0.1])
        a = apply_F(x, ScalarLipschitz.elementwise("sin", 1.0, 0.0), 32)
        b = apply_F(x, ScalarLipschitz.elementwise("sin", 1.0, 5.0), 32)
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_constant_f(self):
        assert not np.any(apply_F(SpectralVector([1.0, 2.0]), ScalarLipschitz.constant(3.0), 8).coeffs)

    def test_alias_warning(self):
        with pytest.warns(AliasingWarning):
            apply_F(np.ones(8), ScalarLipschitz.linear(1.0), 10)

    def test_against_direct_quadrature(self):
        # f(u) = sin(u), x = 0.5 e_1: <d/dxi sin(x), e_n> = -int sin(x) e_n'
        from scipy.integrate import quad
        x = np.array([0.5, 0, 0])
        out = apply_F(x, ScalarLipschitz.elementwise("sin"), 256)
        u = lambda s: 0.5 * math.sqrt(2) * math.sin(math.pi * s)
        for n in (1, 2, 3):
            ref = -quad(lambda s: math.sin(u(s)) * math.sqrt(2) * n * math.pi * math.cos(n * math.pi * s), 0, 1)[0]
            assert out[n - 1] == pytest.approx(ref, abs=1e-6)

    @given(st.integers(0, 2**31), st.floats(-3, 3))
    def test_linear_is_exact_derivative(self, seed, a):
        x = np.random.default_rng(seed).standard_normal(6)
        out = apply_F(x, ScalarLipschitz.linear(a), 64)
        lam = (np.arange(1, 7) * math.pi) ** 2
        # the H^{-1} norm of d/dxi x is at most the H norm of x
        assert np.sqrt(np.sum(out**2 / lam)) <= abs(a) * np.linalg.norm(x) * (1 + 1e-9) + 1e-12


class TestApplyG:
    def test_trivial(self):
        x = np.array([0.3, -0.1, 0.2])
        assert not np.any(apply_G_increment(x, ScalarLipschitz.zero(), np.ones(3)))
        np.testing.assert_allclose(apply_G_increment(x, ScalarLipschitz.constant(1.0), [1.0, 0, 0]), [1, 0, 0])

    def test_identity_on_first_mode(self):
        out = apply_G_increment(np.array([1.0, 0, 0, 0]), ScalarLipschitz.linear(1.0), np.array([1.0, 0, 0, 0]),
                                grid_size=64)
        # 2 sqrt2 int sin^3(pi xi) = 8 sqrt2 / (3 pi); the e_2 coefficient vanishes by parity
        assert out[0] == pytest.approx(8 * math.sqrt(2) / (3 * math.pi), rel=1e-6)
        assert abs(out[1]) < 1e-12

    def test_example(self):
        out = apply_G_increment(np.array([1.0, 0, 0, 0]), ScalarLipschitz.elementwise("sin"), np.array([1.0, 0, 0, 0]),
                                grid_size=64)
        assert out[0] == pytest.approx(G_SIN_E1, abs=1e-6)
        assert abs(out[1]) < 1e-12

    def test_constant_g_is_scaled_increment(self):
        dw = np.array([0.1, -0.2, 0.3])
        out = apply_G_increment(np.zeros(3), ScalarLipschitz.constant(2.0), dw)
        np.testing.assert_allclose(out, 2 * dw)

    def test_mode_mismatch(self):
        with pytest.raises(ValueError):
            apply_G_increment(np.zeros(3), ScalarLipschitz.constant(1.0), np.zeros(4))
        with pytest.raises(ValueError):
            apply_G_increment(np.zeros(3), ScalarLipschitz.constant(1.0), np.zeros(3), spec=NoiseSpec.white(4))

    def test_batched(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((3, 5))
        dW = rng.standard_normal((3, 5))
        g = ScalarLipschitz.elementwise("cos", 0.5)
        batch = apply_G_increment(X, g, dW)
        for i in range(3):
            np.testing.assert_allclose(batch[i], apply_G_increment(X[i], g, dW[i]), atol=1e-14)

    @given(st.integers(0, 2**31))
    def test_linear_in_increment(self, seed):
        rng = np.random.default_rng(seed)
        x, a, b = rng.standard_normal((3, 4))
        g = ScalarLipschitz.elementwise("tanh")
        lhs = apply_G_increment(x, g, a + 2 * b)
        rhs = apply_G_increment(x, g, a) + 2 * apply_G_increment(x, g, b)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_matches_grid_product(self):
        x = np.array([0.4, 0.1])
        dw = np.array([0.3, -0.5])
        out = apply_G_increment(x, ScalarLipschitz.elementwise("sin"), dw, grid_size=128)
        ref = to_spectral(np.sin(to_physical(x, 128)) * to_physical(dw, 128), 2)
        np.testing.assert_allclose(out, ref, atol=1e-14)


class TestQuadrature:
    def test_inverse_sqrt(self):
        r = quadrature.dyadic_integral(lambda t: t**-0.5, 1.0)
        assert r.convergent and r.value == pytest.approx(2.0, rel=1e-12)

    def test_nonintegrable(self):
        assert not quadrature.dyadic_integral(lambda t: 1 / t, 1.0).convergent
        assert not quadrature.dyadic_integral(lambda t: t**-1.2, 1.0).convergent

    def test_nonfinite_away_from_zero(self):
        with pytest.raises(ValueError):
            quadrature.dyadic_integral(lambda t: np.where(t > 0.5, np.inf, 1.0), 1.0)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            quadrature.dyadic_integral(lambda t: -np.ones_like(t), 1.0)

    @given(st.floats(0.0, 0.95), st.floats(0.1, 10))
    def test_power_law_property(self, a, T):
        r = quadrature.dyadic_integral(lambda t: t**-a, T)
        exact = T ** (1 - a) / (1 - a)
        assert r.convergent
        assert r.value == pytest.approx(exact, rel=1e-6)


class TestKernels:
    def test_power_antiderivative(self):
        k = PowerKernel(2.0, 0.5)
        assert k.antiderivative(4.0) == pytest.approx(8.0)
        with pytest.raises(ValueError):
            PowerKernel(1.0, 1.0).antiderivative(1.0)

    def test_white_kernel_branches_agree(self):
        k = WhiteNoiseKernel()
        t = np.array([0.01, 0.049, 0.051, 0.3])
        n = np.arange(1, 5000)
        brute = np.exp(-2 * np.pi**2 * np.outer(t, n**2)).sum(axis=1)
        np.testing.assert_allclose(k.squared(t), brute, rtol=1e-12)

    def test_white_kernel_small_t(self):
        # leading behaviour (8 pi t)^(-1/2) - 1/2
        t = 1e-8
        assert WhiteNoiseKernel().squared(t)[0] == pytest.approx(1 / math.sqrt(8 * math.pi * t) - 0.5, rel=1e-12)

    def test_truncated_white(self):
        k = WhiteNoiseKernel(n_modes=3)
        t = 0.02
        assert k(t) == pytest.approx(math.sqrt(sum(math.exp(-2 * (n * math.pi) ** 2 * t) for n in (1, 2, 3))))

    def test_white_small_t_band(self):
        # Gaussian-sum comparison: K_G(t)^2 ~ (8 pi t)^(-1/2) - 1/2
        t = np.geomspace(1e-5, 1e-1, 60)
        sq = WhiteNoiseKernel().squared(t)
        scaled = sq * np.sqrt(t)
        assert np.all((scaled > 0.04) & (scaled < 1 / math.sqrt(8 * math.pi)))
        small = t <= 1e-2  # dual-series corrections are below e^-50 there
        np.testing.assert_allclose(sq[small], 1 / np.sqrt(8 * np.pi * t[small]) - 0.5, rtol=1e-12)

    def test_documented_forms(self):
        fam = builtin_kernels("colored_q0", 0.5)
        t = np.geomspace(1e-6, 1, 13)
        np.testing.assert_allclose(fam.K_G_gamma(t), t**-0.25, rtol=1e-14)
        np.testing.assert_allclose(fam.K_F(t) * np.sqrt(t), 1.0, rtol=1e-14)
        rep = verify_assumptions(builtin_kernels("white_d1"), 0.25, 1.0)
        assert rep.KFgammaAlpha.value == pytest.approx(4.0, rel=1e-9)

    @given(st.sampled_from(["white_d1", "colored_q0", "colored_qeps"]), st.floats(1e-6, 1.0), st.floats(1.0, 10.0))
    def test_nonnegative_nonincreasing(self, regime, t, scale):
        fam = builtin_kernels(regime, 0.3 if regime != "white_d1" else 0.0, eps=1.0)
        for K in (fam.K_F, fam.K_G, fam.K_F_gamma, fam.K_G_gamma):
            a, b = float(np.asarray(K(t))), float(np.asarray(K(min(t * scale, 1.0))))
            assert a >= 0 and b <= a * (1 + 1e-12)

    def test_builtin_domains(self):
        with pytest.raises(ValueError):
            builtin_kernels("white_d1", 0.1)
        with pytest.raises(ValueError):
            builtin_kernels("colored_q0", 1.0)
        with pytest.raises(ValueError):
            builtin_kernels("colored_qeps", 0.6, eps=0.5)
        with pytest.raises(ValueError):
            builtin_kernels("colored_qeps", 0.5, eps=1.0)
        with pytest.raises(ValueError):
            builtin_kernels("colored_qeps", 0.1)
        fam = builtin_kernels(Regime.COLORED_QEPS, 0.4, eps=1.0, q_eps=2.0)
        assert isinstance(fam, KernelFamily) and fam.K_G(0.3) == 2.0


class TestAssumptions:
    def test_white_alpha_02(self):
        rep = verify_assumptions(builtin_kernels("white_d1"), 0.2, 1.0)
        assert rep.all_convergent
        assert rep.KF0.value == pytest.approx(2.0)
        assert rep.KG0.value == pytest.approx(1 / math.sqrt(12), rel=1e-6)
        assert rep.KFgammaAlpha.value == pytest.approx(1 / 0.3, rel=1e-9)
        assert rep.KGgammaAlpha.value == pytest.approx(WHITE_KG_ALPHA_02, rel=1e-3)

    def test_white_alpha_03_diverges(self):
        rep = verify_assumptions(builtin_kernels("white_d1"), 0.3, 1.0)
        assert not rep.KGgammaAlpha.convergent and not rep.all_convergent
        assert rep.KF0.convergent and rep.KG0.convergent

    def test_colored_q0(self):
        rep = verify_assumptions(builtin_kernels("colored_q0", 0.5), 0.2, 1.0)
        # (int t^{-gamma - 2 alpha})^(1/2) = (1/(1 - 0.9))^(1/2)
        assert rep.KGgammaAlpha.value == pytest.approx(math.sqrt(10), rel=1e-6)
        assert not verify_assumptions(builtin_kernels("colored_q0", 0.5), 0.3, 1.0).KGgammaAlpha.convergent

    def test_colored_qeps(self):
        rep = verify_assumptions(builtin_kernels("colored_qeps", 0.4, eps=1.0), 0.4, 2.0)
        assert rep.all_convergent
        assert rep.KGgammaAlpha.value == pytest.approx(math.sqrt(2**0.2 / 0.2), rel=1e-6)

    @pytest.mark.parametrize("alpha", [0.0, 1.0])
    def test_alpha_domain(self, alpha):
        with pytest.raises(ValueError):
            verify_assumptions(builtin_kernels("white_d1"), alpha, 1.0)

    @given(st.floats(0.01, 0.24))
    def test_white_convergent_below_quarter(self, alpha):
        assert verify_assumptions(builtin_kernels("white_d1"), alpha, 1.0).KGgammaAlpha.convergent

    @given(st.floats(0.26, 0.9))
    def test_white_divergent_above_quarter(self, alpha):
        assert not verify_assumptions(builtin_kernels("white_d1"), alpha, 1.0).KGgammaAlpha.convergent
