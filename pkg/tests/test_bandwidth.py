import numpy as np
import pytest

from semistart.bandwidth import (DegenerateRoughness, amise_h, bcv, h_oversmoothed,
                                 plugin_roughness, rule_delta, rule_gamma,
                                 rule_plugin, ucv)
from semistart.densities import marron_wand, mixture_sample
from semistart.hermite import HermiteCoeffs, roughness_from_coeffs
from semistart.kernels import kernel_props
from semistart.starts import FittedStart, fit_start

from conftest import phi, phi_scaled

G = kernel_props("gaussian")
RKPP = 3.0 / (8.0 * np.sqrt(np.pi))


def test_amise_h_normal_reference():
    # substitution oracle: with the normal's own curvature this is the
    # classic (4/3)^(1/5) sigma n^(-1/5) reference rule
    h, amise = amise_h(G, RKPP, 100)
    want = (4.0 / 3.0) ** 0.2 * 100 ** -0.2
    assert h == pytest.approx(want, rel=1e-12)
    assert h == pytest.approx(0.4216846, abs=5e-7)
    assert amise == pytest.approx(1.25 * G.rough_K**0.8 * RKPP**0.2 * 100**-0.8, rel=1e-12)


def test_amise_h_power_laws():
    h1, _ = amise_h(G, 1.0, 100)
    h2, _ = amise_h(G, 2.0, 100)
    assert h2 / h1 == pytest.approx(2.0 ** -0.2, rel=1e-12)
    h3, _ = amise_h(G, 1.0, 3200)
    assert h1 / h3 == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(DegenerateRoughness):
        amise_h(G, 0.0, 100)


def test_amise_h_minimises_the_curve():
    # grid search over the explicit bias^2 + variance target never beats it
    for r_new, n in [(0.3, 50), (2.0, 400)]:
        h, best = amise_h(G, r_new, n)
        hs = np.linspace(h / 4, 4 * h, 4001)
        curve = 0.25 * G.sigma2_K**2 * hs**4 * r_new + G.rough_K / (n * hs)
        assert np.min(curve) >= best - 1e-12


def test_rule_gamma_substitution():
    # pure-kurtosis coefficients, unit scale, n = 100
    cf = HermiteCoeffs("classic_gamma", [1, 0, 0, 0.0, 1.0, 0.0], 0.0, 1.0)
    h, _ = amise_h(G, roughness_from_coeffs(cf), 100)
    assert h == pytest.approx((4.0 / 3.0) ** 0.2 * 4.0**0.2 * 100**-0.2, rel=1e-12)
    assert h == pytest.approx(0.5564162, abs=5e-7)


def test_rule_delta_substitution():
    cf = HermiteCoeffs("robust_delta", [0.0, 0.0, 0.1, 0.0, 0.0, 0.0], 0.0, 1.0)
    h, _ = amise_h(G, roughness_from_coeffs(cf), 100)
    assert h == pytest.approx(0.25**0.2 * 0.01**-0.2 * 100**-0.2, rel=1e-12)
    assert h == pytest.approx(0.7578583, abs=5e-7)


def test_rules_clamp_on_normal_data():
    x = mixture_sample(marron_wand(1), 400, seed=4001)
    for rule in (rule_gamma, rule_delta):
        ch = rule(x, G)
        h_os = h_oversmoothed(float(np.std(x)), 400, G)
        assert 0.0 < ch.h <= h_os + 1e-15
        assert ch.diagnostics["clamped"]
        assert ch.h == pytest.approx(h_os, rel=1e-12)


@pytest.mark.parametrize("rule", [rule_gamma, rule_delta])
def test_moment_rules_scale_equivariant(rule, mw_sample=None):
    x = mixture_sample(marron_wand(8), 300, seed=77)
    base = rule(x, G).h
    for c in (0.2, 5.0):
        assert rule(c * x, G).h == pytest.approx(c * base, rel=1e-9)


def test_h_oversmoothed_constant():
    # gaussian-kernel constant is the familiar 1.144
    assert h_oversmoothed(1.0, 1, G) == pytest.approx(1.144, abs=1e-3)


def test_plugin_roughness_constant_start_recovers_curvature():
    # flat start turns the statistic into the classic curvature estimate;
    # its 20-seed average lands well within 50% of the normal's 3/(8 sqrt pi)
    vals = []
    for seed in range(20):
        x = mixture_sample(marron_wand(1), 500, seed=2000 + seed)
        _, deb = plugin_roughness(x, FittedStart("constant"), G, 0.3)
        vals.append(deb)
    assert abs(np.mean(vals) - RKPP) <= 0.5 * RKPP


def test_plugin_roughness_overshoot_size():
    # on normal truth the corrected-curvature target is 0, so the raw
    # statistic should average to the fixed overshoot R(K'')/(n h^5)
    n, h = 400, 0.3
    raws = []
    for seed in range(100):
        x = mixture_sample(marron_wand(1), n, seed=3000 + seed)
        raw, _ = plugin_roughness(x, fit_start("normal", x), G, h)
        raws.append(raw)
    raws = np.array(raws)
    target = G.rough_Kpp / (n * h**5)
    se = raws.std(ddof=1) / np.sqrt(raws.size)
    assert abs(raws.mean() - target) <= 3.0 * se


def test_plugin_roughness_brute_force_oracle():
    # 2000-point trapezoid of the squared curvature of the corrected fit
    x = mixture_sample(marron_wand(6), 20, seed=31)
    st = fit_start("normal", x)
    mu, sd = st.params["mu"], st.params["sd"]
    h = 0.45
    grid = np.linspace(x.min() - 8, x.max() + 8, 2000)
    den = phi_scaled(sd, x - mu)
    z = (grid[:, None] - x[None, :]) / h
    rpp = np.sum((z * z - 1.0) * phi(z) / den[None, :], axis=1) / (x.size * h**3)
    f0 = phi_scaled(sd, grid - mu)
    brute = np.trapezoid((f0 * rpp) ** 2, grid)
    raw, _ = plugin_roughness(x, st, G, h)
    assert raw == pytest.approx(float(brute), rel=1e-6)
    with pytest.raises(ValueError):
        plugin_roughness(x, st, kernel_props("epanechnikov"), h)


def test_bcv_compositional_identity():
    x = mixture_sample(marron_wand(2), 120, seed=32)
    st = fit_start("normal", x)
    grid = np.linspace(0.15, 0.8, 7)
    ch = bcv(x, st, G, grid)
    n = x.size
    for h, val in zip(ch.diagnostics["h_grid"], ch.diagnostics["curve"]):
        raw, _ = plugin_roughness(x, st, G, h)
        want = 0.25 * h**4 * (raw - G.rough_Kpp / (n * h**5)) + G.rough_K / (n * h)
        assert val == pytest.approx(want, rel=1e-12)
    # the variance leg of the curve decreases in h by construction
    assert np.all(np.diff(G.rough_K / (n * grid)) < 0)


def test_bcv_sane_selection_on_normal_data():
    hits = 0
    for seed in range(20):
        x = mixture_sample(marron_wand(1), 500, seed=5000 + seed)
        sd = float(np.std(x))
        h_os = h_oversmoothed(sd, 500, G)
        ch = bcv(x, fit_start("normal", x), G, np.linspace(0.05 * h_os, h_os, 24))
        ref = sd * 500**-0.2 * (4.0 / 3.0) ** 0.2
        hits += 0.3 * ref <= ch.h <= 1.3 * ref
    assert hits >= 16
    with pytest.raises(ValueError):
        bcv([1.0, 2.0], FittedStart("constant"), G, [])


def test_ucv_constant_start_is_textbook_lscv():
    x = mixture_sample(marron_wand(6), 15, seed=33)
    n = x.size
    grid = np.array([0.25, 0.4, 0.6])
    ch = ucv(x, FittedStart("constant"), G, grid)
    for h, val in zip(grid, ch.diagnostics["curve"]):
        # independent direct implementation
        term1 = 0.0
        term2 = 0.0
        for i in range(n):
            for j in range(n):
                term1 += float(phi_scaled(np.sqrt(2.0) * h, x[i] - x[j]))
                if i != j:
                    term2 += float(phi_scaled(h, x[i] - x[j]))
        want = term1 / n**2 - 2.0 * term2 / (n * (n - 1))
        assert val == pytest.approx(want, rel=1e-12)


def test_ucv_integral_term_vs_trapezoid():
    x = mixture_sample(marron_wand(1), 40, seed=34)
    st = fit_start("normal", x)
    mu, sd = st.params["mu"], st.params["sd"]
    h = 0.35
    grid = np.linspace(x.min() - 8, x.max() + 8, 2000)
    fh = np.zeros_like(grid)
    for xi in x:
        fh += phi_scaled(h, xi - grid) * float(phi_scaled(sd, xi - mu)) ** -1
    fh *= phi_scaled(sd, grid - mu) / x.size
    brute = float(np.trapezoid(fh**2, grid))
    from semistart.bandwidth import _ucv_integral_term
    assert _ucv_integral_term(x, st, h) == pytest.approx(brute, abs=1e-8)


def test_ucv_validation():
    with pytest.raises(ValueError):
        ucv([1.0, 2.0], FittedStart("constant"), G, [0.3])
    with pytest.raises(ValueError):
        ucv(np.arange(10.0), FittedStart("constant"), kernel_props("uniform"), [0.3])


def test_rule_plugin_runs_and_caps():
    x = mixture_sample(marron_wand(6), 400, seed=35)
    ch = rule_plugin(x, fit_start("normal", x), G)
    h_os = h_oversmoothed(float(np.std(x)), 400, G)
    assert 0.0 < ch.h <= h_os + 1e-15
    two = rule_plugin(x, fit_start("normal", x), G, iterations=2)
    assert 0.0 < two.h <= h_os + 1e-15


@pytest.mark.parametrize("method", ["plugin", "bcv", "ucv"])
def test_data_driven_rules_scale_equivariant(method):
    x = mixture_sample(marron_wand(6), 150, seed=36)
    c = 3.0

    def run(data):
        st = fit_start("normal", data)
        sd = float(np.std(data))
        grid = np.linspace(0.1 * sd, 1.1446 * sd * 150**-0.2, 16)
        if method == "plugin":
            return rule_plugin(data, st, G).h
        if method == "bcv":
            return bcv(data, st, G, grid).h
        return ucv(data, st, G, grid).h

    assert run(c * x) == pytest.approx(c * run(x), rel=1e-9)
