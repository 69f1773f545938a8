import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochlogistic.model import (
    Band,
    ModelParams,
    Regime,
    band_endpoints,
    carrying_capacity,
    classify_regime,
    diffusion,
    drift,
    generator_Lv,
    generator_Lv_direct,
    generator_LV,
    khasminskii_generator,
    khasminskii_V,
    stationary_mean,
    volterra_v,
)

positive = st.floats(min_value=0.05, max_value=20.0)
noise = st.floats(min_value=-6.0, max_value=6.0)


def persistent_params():
    return st.tuples(positive, positive, st.floats(0.01, 0.99)).map(
        lambda t: ModelParams(t[0], t[1], t[2] * math.sqrt(2 * t[0]))
    )


class TestParams:
    @pytest.mark.parametrize("a, b", [(0, 1), (-1, 1), (1, 0), (1, -2)])
    def test_rejects_nonpositive(self, a, b):
        with pytest.raises(ValueError):
            ModelParams(a, b, 0.1)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            ModelParams(1.0, 1.0, float("nan"))

    def test_frozen(self):
        p = ModelParams(1.5, 1, 0.25)
        with pytest.raises(AttributeError):
            p.a = 2.0


def test_drift():
    p = ModelParams(1.5, 1, 0.25)
    assert drift(0.0, p) == 0.0
    assert drift(p.xstar, p) == 0.0
    assert drift(2.0, p) == pytest.approx(-1.0, abs=1e-15)


def test_diffusion():
    assert diffusion(0.0, ModelParams(1, 1, 3.0)) == 0.0
    assert diffusion(1.5, ModelParams(1, 1, 0.25)) == pytest.approx(0.375)
    np.testing.assert_array_equal(diffusion(np.linspace(0, 5, 11), ModelParams(1, 1, 0.0)), 0.0)


@pytest.mark.parametrize("a, b, expected", [(1.5, 1, 1.5), (2.5, 1, 2.5), (0.3, 0.3, 1.0), (7.0, 7.0, 1.0)])
def test_carrying_capacity(a, b, expected):
    assert carrying_capacity(ModelParams(a, b)) == pytest.approx(expected)


@pytest.mark.parametrize(
    "a, sigma, regime",
    [
        (1.5, 0.25, Regime.PERSISTENT_BAND),
        (1.0, 2.45, Regime.EXTINCTION),
        (1.5, 0.0, Regime.DETERMINISTIC),
        (2.0, 2.0, Regime.CRITICAL),
        (2.0, -2.0, Regime.CRITICAL),
        (1.0, -0.5, Regime.PERSISTENT_BAND),
    ],
)
def test_classify_regime(a, sigma, regime):
    assert classify_regime(ModelParams(a, 1.0, sigma)) is regime


@pytest.mark.parametrize(
    "a, b, sigma, x1, x2",
    [
        (1.5, 1, 0.25, 1.28, 1.72),
        (1.0, 1, 2.45, 0.00, 2.73),
        (1.5, 1, 0.5, 1.07, 1.93),
        (2.5, 1, 1.5, 0.82, 4.18),
    ],
)
def test_band_endpoints_caption_values(a, b, sigma, x1, x2):
    band = band_endpoints(ModelParams(a, b, sigma))
    assert round(band.x1, 2) == x1
    assert round(band.x2, 2) == x2


def test_band_deterministic_collapses_to_xstar():
    p = ModelParams(1.5, 1, 0.0)
    assert band_endpoints(p) == Band(1.5, 1.5)


def test_band_negative_sigma_same_as_positive():
    assert band_endpoints(ModelParams(1.5, 1, -0.25)) == band_endpoints(ModelParams(1.5, 1, 0.25))


def test_band_closed_interval():
    band = Band(1.0, 2.0)
    assert band.contains(1.0) and band.contains(2.0) and not band.contains(2.0000001)


class TestVolterra:
    def test_zero_at_xstar(self):
        assert volterra_v(1.5, 1.5) == 0.0

    def test_at_e_times_xstar(self):
        assert volterra_v(math.e * 2.0, 2.0) == pytest.approx(math.e - 2, rel=1e-14)

    def test_diverges_at_origin(self):
        xs = 1.5 / 2.0 ** np.arange(1, 40)
        v = volterra_v(xs, 1.5)
        assert np.all(np.diff(v) > 0)
        assert v[-1] > 25

    @pytest.mark.parametrize("x", [0.0, -1.0])
    def test_rejects_nonpositive(self, x):
        with pytest.raises(ValueError):
            volterra_v(x, 1.0)

    @given(positive)
    def test_monotone_branches(self, xstar):
        left = np.linspace(xstar * 1e-3, xstar * (1 - 1e-3), 500)
        right = np.linspace(xstar * (1 + 1e-3), xstar * 50, 500)
        assert np.all(np.diff(volterra_v(left, xstar)) < 0)
        assert np.all(np.diff(volterra_v(right, xstar)) > 0)

    @given(positive, st.floats(1e-4, 1e4))
    def test_nonnegative(self, xstar, x):
        assert volterra_v(x, xstar) >= 0


class TestGeneratorLv:
    def test_peak_value(self):
        p = ModelParams(1.5, 1, 0.25)
        assert generator_Lv(p.xstar, p) == pytest.approx(0.5 * 0.0625, rel=1e-12)

    @given(persistent_params())
    def test_zero_at_band_endpoints(self, p):
        band = band_endpoints(p)
        scale = 0.5 * p.sigma_sq
        assert abs(generator_Lv(band.x1, p)) <= 1e-12 * max(scale, p.b * p.xstar)
        assert abs(generator_Lv(band.x2, p)) <= 1e-12 * max(scale, p.b * p.xstar)

    def test_negative_without_noise(self):
        p = ModelParams(1.5, 1, 0.0)
        x = np.concatenate([np.linspace(0.01, 1.49, 100), np.linspace(1.51, 10, 100)])
        assert np.all(generator_Lv(x, p) < 0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            generator_Lv(0.0, ModelParams(1, 1, 0.1))

    @settings(max_examples=50)
    @given(positive, positive, noise)
    def test_matches_derivative_form(self, a, b, sigma):
        p = ModelParams(a, b, sigma)
        x = np.geomspace(1e-3 * p.xstar, 1e3 * p.xstar, 2000)
        simple, direct = generator_Lv(x, p), generator_Lv_direct(x, p)
        # compare against the size of the terms being summed
        scale = np.abs(p.b / p.xstar * (x - p.xstar) ** 2) + 0.5 * p.sigma_sq
        assert np.all(np.abs(simple - direct) <= 1e-12 * scale)

    @settings(max_examples=50)
    @given(persistent_params())
    def test_sign_structure(self, p):
        band = band_endpoints(p)
        d = 1e-6
        inside = np.linspace(band.x1 * (1 + d), band.x2 * (1 - d), 1000)
        below = np.linspace(1e-6, band.x1 * (1 - d), 1000)
        above = np.linspace(band.x2 * (1 + d), 10 * band.x2, 1000)
        assert np.all(generator_Lv(inside, p) > 0)
        assert np.all(generator_Lv(below, p) < 0)
        assert np.all(generator_Lv(above, p) < 0)

    @given(positive, positive, noise)
    def test_bounded_by_half_sigma_sq(self, a, b, sigma):
        p = ModelParams(a, b, sigma)
        x = np.geomspace(1e-3, 1e3, 1001) * p.xstar
        lv = generator_Lv(x, p)
        assert lv.max() <= 0.5 * p.sigma_sq
        assert lv[500] == pytest.approx(0.5 * p.sigma_sq, rel=1e-12, abs=1e-300)


@given(positive, positive, noise)
def test_band_and_regime_agree(a, b, sigma):
    p = ModelParams(a, b, sigma)
    band = band_endpoints(p)
    regime = classify_regime(p)
    assert (band.x1 == 0) == (regime in (Regime.CRITICAL, Regime.EXTINCTION))
    assert band.x1 <= p.xstar <= band.x2
    if regime is Regime.DETERMINISTIC:
        assert band.x1 == band.x2 == p.xstar
    elif abs(sigma) > 1e-6:
        assert band.x1 < band.x2


class TestKhasminskii:
    def test_unit_point(self):
        assert khasminskii_V(1.0, ModelParams(1, 1, 2.45)) == 1.0
        assert khasminskii_V(1.0, ModelParams(1.5, 1, 0.25)) == 1.0

    def test_square_root_case(self):
        assert khasminskii_V(4.0, ModelParams(1, 1, 2.0)) == pytest.approx(2.0)

    def test_critical_exponent_is_zero(self):
        np.testing.assert_array_equal(khasminskii_V(np.linspace(0.1, 9, 50), ModelParams(2, 1, 2)), 1.0)

    def test_rejects_zero_sigma(self):
        with pytest.raises(ValueError):
            khasminskii_V(1.0, ModelParams(1, 1, 0))
        with pytest.raises(ValueError):
            generator_LV(1.0, ModelParams(1, 1, 0))

    def test_rejects_origin_with_negative_exponent(self):
        with pytest.raises(ValueError):
            khasminskii_V(0.0, ModelParams(1.5, 1, 0.25))
        assert khasminskii_V(0.0, ModelParams(1, 1, 2.45)) == 0.0

    def test_LV_value(self):
        assert generator_LV(1.0, ModelParams(1, 1, 2.45)) == pytest.approx(-0.6668054977092879, rel=1e-12)

    def test_LV_vanishes(self):
        x = np.linspace(0.01, 10, 100)
        np.testing.assert_array_equal(generator_LV(x, ModelParams(2, 1, 2)), 0.0)
        np.testing.assert_array_equal(khasminskii_generator(x, 1.0, 0.0, 2.45), 0.0)

    def test_LV_matches_derivative_form(self):
        # V' f + V'' g^2 / 2 with V = x^q
        a, b, sigma = 1.0, 1.0, 2.45
        q = 1 - 2 * a / sigma**2
        x = np.geomspace(1e-3, 10, 500)
        direct = q * x ** (q - 1) * (a * x - b * x * x) + 0.5 * q * (q - 1) * x ** (q - 2) * (sigma * x) ** 2
        np.testing.assert_allclose(generator_LV(x, ModelParams(a, b, sigma)), direct, rtol=1e-10)

    @given(positive, positive, st.floats(1.01, 5.0))
    def test_LV_sign_above_threshold(self, a, b, ratio):
        p = ModelParams(a, b, math.sqrt(2 * a * ratio))
        assert np.all(generator_LV(np.geomspace(1e-4, 100, 300), p) <= 0)

    @given(positive, positive, st.floats(0.1, 0.99))
    def test_LV_sign_below_threshold(self, a, b, ratio):
        p = ModelParams(a, b, math.sqrt(2 * a * ratio))
        assert np.all(generator_LV(np.geomspace(1e-2, 100, 300), p) > 0)


class TestStationaryMean:
    def test_fig1_value(self):
        assert stationary_mean(ModelParams(1.5, 1, 0.25)) == pytest.approx(1.46875, rel=1e-15)

    def test_small_noise_limit(self):
        assert stationary_mean(ModelParams(1.5, 1, 1e-6)) == pytest.approx(1.5, rel=1e-9)

    @given(persistent_params())
    def test_inside_band(self, p):
        band = band_endpoints(p)
        m = stationary_mean(p)
        assert band.x1 < m < band.x2

    @pytest.mark.parametrize("sigma", [0.0, 2.45])
    def test_rejects_other_regimes(self, sigma):
        with pytest.raises(ValueError):
            stationary_mean(ModelParams(1, 1, sigma))

    @pytest.mark.parametrize("a, b, sigma", [(1.5, 1.0, 0.25), (2.5, 1.0, 1.5), (1.0, 2.0, 0.9)])
    def test_against_fokker_planck_quadrature(self, a, b, sigma):
        """Mean of the stationary density built from drift and diffusion by nested quadrature."""
        quad = pytest.importorskip("scipy.integrate").quad
        xs = a / b

        def density(x):
            inner, _ = quad(lambda y: 2 * (a * y - b * y * y) / (sigma * y) ** 2, xs, x)
            return math.exp(inner) / (sigma * x) ** 2

        hi = 40 * xs
        z = quad(density, 1e-12, xs, limit=200)[0] + quad(density, xs, hi, limit=200)[0]
        m = quad(lambda x: x * density(x), 1e-12, xs, limit=200)[0] + quad(lambda x: x * density(x), xs, hi, limit=200)[0]
        assert stationary_mean(ModelParams(a, b, sigma)) == pytest.approx(m / z, rel=1e-6)
