"""Bandwidth selection for the corrected estimator.

All rules share one skeleton: the mean-squared-error-optimal bandwidth is

    h* = {R(K)/sigma_K^4}^(1/5) * R^(-1/5) * n^(-1/5)

with R the curvature roughness of the correction factor, so each rule is a
different estimate of R.  The moment rules plug in the classic or robust
Hermite coefficients; the plug-in rule estimates R nonparametrically from a
pilot bandwidth with a fixed-overshoot correction; bcv minimises the
estimated mean-squared-error curve; ucv minimises a leave-one-out estimate
of the exact error.  Data-driven choices are capped at the oversmoothed
bandwidth h_os and are scale-equivariant by construction.

Squared coefficient estimates are plugged in as they stand; no small-sample
deduction of their own sampling variance is attempted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.integrate import quad

from . import hermite
from .kernels import KernelSpec, eval_scaled
from .starts import FittedStart, eval_start, fit_start

__all__ = [
    "BandwidthChoice",
    "DegenerateRoughness",
    "amise_h",
    "h_oversmoothed",
    "rule_gamma",
    "rule_delta",
    "plugin_roughness",
    "rule_plugin",
    "bcv",
    "ucv",
]

SQRT_2PI = np.sqrt(2.0 * np.pi)


class DegenerateRoughness(ValueError):
    """Estimated roughness is zero; the optimal-h formula degenerates."""


@dataclass(frozen=True, eq=False)
class BandwidthChoice:
    h: float
    method: str
    diagnostics: dict[str, Any] = field(default_factory=dict)


def amise_h(kernel: KernelSpec, r_new: float, n: int) -> tuple[float, float]:
    """Optimal h and the minimal approximate integrated squared error.

    Raises DegenerateRoughness when r_new is not positive; callers clamp to
    the oversmoothed bound in that case.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if r_new <= 0:
        raise DegenerateRoughness("roughness must be positive for the optimal-h formula")
    h = (kernel.rough_K / kernel.sigma2_K**2) ** 0.2 * r_new**-0.2 * n**-0.2
    amise = 1.25 * (np.sqrt(kernel.sigma2_K) * kernel.rough_K) ** 0.8 * r_new**0.2 * n**-0.8
    return float(h), float(amise)


def h_oversmoothed(sd: float, n: int, kernel: KernelSpec) -> float:
    """Upper bound 3 {R(K)/(35 sigma_K^4)}^(1/5) sd n^(-1/5) for the search.

    For the gaussian kernel the constant is 1.144.
    """
    if sd <= 0 or n < 1:
        raise ValueError("need positive scale and n >= 1")
    return 3.0 * (kernel.rough_K / (35.0 * kernel.sigma2_K**2)) ** 0.2 * sd * n**-0.2


def _moment_rule(data, kernel: KernelSpec, coeffs: hermite.HermiteCoeffs,
                 method: str) -> BandwidthChoice:
    n = np.asarray(data).size
    r_hat = hermite.roughness_from_coeffs(coeffs)
    h_os = h_oversmoothed(coeffs.scale, n, kernel)
    diag = {"roughness": r_hat, "h_os": h_os, "clamped": False}
    try:
        h, amise = amise_h(kernel, r_hat, n)
        diag["amise"] = amise
    except DegenerateRoughness:
        h = h_os
    if h >= h_os:
        h = h_os
        diag["clamped"] = True
    return BandwidthChoice(h, method, diag)


def rule_gamma(data, kernel: KernelSpec) -> BandwidthChoice:
    """Plug-in via classic moment coefficients (skewness/kurtosis/pentakosis)."""
    return _moment_rule(data, kernel, hermite.classic_coeffs(data), "rule_gamma")


def rule_delta(data, kernel: KernelSpec) -> BandwidthChoice:
    """Plug-in via the bounded robust coefficients (degrees 2..5)."""
    return _moment_rule(data, kernel, hermite.robust_coeffs(data, max_j=5), "rule_delta")


def _plugin_normal_closed(x: np.ndarray, mu: float, sd: float, h: float) -> float:
    """Closed-form double sum for a normal start and gaussian kernel.

    Each pair integral is the mass of the four-factor gaussian product times
    a quartic moment of the product gaussian (the two kernel curvatures are
    quadratics in x).  The start-ratio factors decay in the data for h < sd,
    so the exponents stay moderate and no log-sum-exp is needed.
    """
    n = x.size
    u = x - mu
    tau2 = 1.0 / (2.0 / sd**2 + 2.0 / h**2)
    # product-gaussian centre relative to mu, then offsets to the two data points
    mloc = tau2 * (u[:, None] + u[None, :]) / h**2
    a = mloc - u[:, None]
    b = mloc - u[None, :]
    poly = (3.0 * tau2**2 + tau2 * (a * a + b * b + 4.0 * a * b - 2.0 * h * h)
            + (a * a - h * h) * (b * b - h * h))
    log_rat = np.log(sd / h) - 0.5 * u * u * (1.0 / h**2 - 1.0 / sd**2)
    expo = (log_rat[:, None] + log_rat[None, :]
            + 0.5 * tau2 * ((u[:, None] + u[None, :]) / h**2) ** 2)
    total = float(np.sum(poly * np.exp(expo)))
    return np.sqrt(tau2) / (SQRT_2PI * sd * sd) * total / (n * n * h**8)


def _plugin_constant_closed(x: np.ndarray, h: float) -> float:
    """Curvature statistic for the flat start: pairwise phi_sqrt2 4th derivative."""
    n = x.size
    t = (x[:, None] - x[None, :]) / (h * np.sqrt(2.0))
    val = (t**4 - 6.0 * t**2 + 3.0) * np.exp(-0.5 * t * t) / SQRT_2PI
    return float(np.sum(val)) / (4.0 * np.sqrt(2.0) * n * n * h**5)


def plugin_roughness(data, start: FittedStart, kernel: KernelSpec,
                     h_pilot: float) -> tuple[float, float]:
    """Nonparametric curvature-roughness estimate and its debiased version.

    raw      = int {fbar(x) rhat''(x)}^2 dx  at the pilot bandwidth,
    debiased = n/(n-1) * {raw - R(K'')/(n h^5)}, floored at 0.

    Needs a smooth kernel: the statistic differentiates the kernel twice, so
    the epanechnikov/uniform shapes are not allowed here.  The start enters
    unclipped (the closed forms and the overshoot constant assume the pure
    parametric form).
    """
    if not kernel.is_smooth:
        raise ValueError(f"the {kernel.shape} kernel is not allowed in this operation")
    if h_pilot <= 0:
        raise ValueError("pilot bandwidth must be positive")
    x = np.asarray(data, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 observations")
    if start.family == "constant":
        raw = _plugin_constant_closed(x, h_pilot)
    elif start.family == "normal":
        raw = _plugin_normal_closed(x, start.params["mu"], start.params["sd"], h_pilot)
    else:
        raw = _plugin_quadrature(x, start, h_pilot)
    debiased = n / (n - 1.0) * (raw - kernel.rough_Kpp / (n * h_pilot**5))
    return raw, max(debiased, 0.0)


def _plugin_quadrature(x: np.ndarray, start: FittedStart, h: float) -> float:
    f0 = start.unclipped()
    den = np.atleast_1d(eval_start(f0, x))
    if np.any(den <= 0):
        raise ValueError("start density vanishes at a data point")

    def integrand(t):
        z = (t - x) / h
        rpp = np.sum((z * z - 1.0) * np.exp(-0.5 * z * z) / SQRT_2PI / den) / (x.size * h**3)
        return (float(np.atleast_1d(eval_start(f0, t))[0]) * rpp) ** 2

    lo = float(x.min()) - 10.0 * h
    hi = float(x.max()) + 10.0 * h
    val, _ = quad(integrand, lo, hi, limit=400)
    return float(val)


def _grid_pick(h_grid, values) -> tuple[float, int]:
    """Grid argmin with ties resolved toward the smaller bandwidth."""
    values = np.asarray(values)
    k = int(np.argmin(values))  # argmin returns the first (smallest-h) tie
    return float(h_grid[k]), k


def bcv(data, start: FittedStart, kernel: KernelSpec, h_grid) -> BandwidthChoice:
    """Estimated-amise curve (biased cross validation) and its grid minimiser."""
    x = np.asarray(data, dtype=float).ravel()
    h_grid = np.asarray(h_grid, dtype=float).ravel()
    if h_grid.size == 0:
        raise ValueError("bandwidth grid must be nonempty")
    if np.any(h_grid <= 0):
        raise ValueError("bandwidth grid must be positive")
    n = x.size
    curve = np.empty_like(h_grid)
    for i, h in enumerate(h_grid):
        raw, _ = plugin_roughness(x, start, kernel, h)
        curve[i] = (0.25 * kernel.sigma2_K**2 * h**4
                    * (raw - kernel.rough_Kpp / (n * h**5))
                    + kernel.rough_K / (n * h))
    h_best, k = _grid_pick(h_grid, curve)
    return BandwidthChoice(h_best, "bcv",
                           {"h_grid": h_grid, "curve": curve, "index": k})


def _loo_params(x: np.ndarray, family: str):
    """O(1)-per-point leave-one-out refits from downdated running sums."""
    n = x.size
    if family in ("normal", "constant"):
        base = x
    elif family == "lognormal":
        base = np.log(x)
    elif family == "gamma":
        base = x
    else:
        raise NotImplementedError(
            f"no O(1) leave-one-out refit for the {family!r} start")
    s1, s2 = base.sum(), np.square(base).sum()
    mu_i = (s1 - base) / (n - 1)
    var_i = (s2 - base * base) / (n - 1) - mu_i**2
    if np.any(var_i <= 0):
        raise ValueError("leave-one-out variance collapsed to zero")
    return mu_i, var_i


def _ucv_integral_term(x: np.ndarray, start: FittedStart, h: float) -> float:
    """int fhat_h^2 for the full-data fit (exact for normal/constant starts)."""
    n = x.size
    if start.family == "constant":
        # (1/n^2) sum_ij phi_{sqrt(2) h}(X_i - X_j)
        pair = np.exp(-0.25 * ((x[:, None] - x[None, :]) / h) ** 2)
        return float(pair.sum()) / (SQRT_2PI * np.sqrt(2.0) * h * n * n)
    if start.family == "normal":
        mu, sd = start.params["mu"], start.params["sd"]
        u = x - mu
        st2 = 0.5 * sd * sd * h * h / (sd * sd + h * h)
        log_rat = np.log(sd / h) - 0.5 * u * u * (1.0 / h**2 - 1.0 / sd**2)
        expo = (log_rat[:, None] + log_rat[None, :]
                + 0.5 * st2 * ((u[:, None] + u[None, :]) / h**2) ** 2)
        return float(np.sqrt(st2) / (SQRT_2PI * sd * sd) * np.sum(np.exp(expo))) / n**2
    # generic: numeric integral of the squared estimate with the raw start
    from .estimator import DensityEstimate, estimate_semiparametric
    from .kernels import kernel_props
    est = DensityEstimate(x, kernel_props("gaussian"), h, start.unclipped())
    lo, hi = float(x.min()) - 10 * h, float(x.max()) + 10 * h
    val, _ = quad(lambda t: estimate_semiparametric(est, t) ** 2, lo, hi, limit=400)
    return float(val)


def ucv(data, start: FittedStart, kernel: KernelSpec, h_grid) -> BandwidthChoice:
    """Leave-one-out least-squares cross validation curve and minimiser.

    ucv(h) = int fhat_h^2 - (2/n) sum_i fhat_{h,(i)}(X_i), the second sum
    refitting the start without X_i (constant-time downdates of the
    sufficient statistics).  Gaussian kernel only; start densities enter raw.
    """
    if kernel.shape != "gaussian":
        raise ValueError("ucv is implemented for the gaussian kernel")
    x = np.asarray(data, dtype=float).ravel()
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 observations for cross validation")
    h_grid = np.asarray(h_grid, dtype=float).ravel()
    if h_grid.size == 0:
        raise ValueError("bandwidth grid must be nonempty")
    if np.any(h_grid <= 0):
        raise ValueError("bandwidth grid must be positive")

    if start.family == "constant":
        log_ratio = np.zeros((n, n))
    else:
        mu_i, var_i = _loo_params(x, start.family)
        if start.family == "normal":
            log_num = -0.5 * (x - mu_i) ** 2 / var_i - 0.5 * np.log(var_i)
            log_den = -0.5 * (x[None, :] - mu_i[:, None]) ** 2 / var_i[:, None] \
                - 0.5 * np.log(var_i)[:, None]
        elif start.family == "lognormal":
            lx = np.log(x)
            log_num = -0.5 * (lx - mu_i) ** 2 / var_i - 0.5 * np.log(var_i) - lx
            log_den = (-0.5 * (lx[None, :] - mu_i[:, None]) ** 2 / var_i[:, None]
                       - 0.5 * np.log(var_i)[:, None] - lx[None, :])
        else:  # gamma by moments
            a_i = mu_i**2 / var_i
            b_i = mu_i / var_i
            from scipy.special import gammaln
            log_num = (a_i * np.log(b_i) + (a_i - 1.0) * np.log(x) - b_i * x
                       - gammaln(a_i))
            log_den = (a_i[:, None] * np.log(b_i)[:, None]
                       + (a_i[:, None] - 1.0) * np.log(x)[None, :]
                       - b_i[:, None] * x[None, :] - gammaln(a_i)[:, None])
        log_ratio = log_num[:, None] - log_den

    dist = x[None, :] - x[:, None]
    curve = np.empty_like(h_grid)
    for idx, h in enumerate(h_grid):
        K = eval_scaled(kernel, h, dist)
        W = K * np.exp(log_ratio)
        np.fill_diagonal(W, 0.0)
        loo = W.sum(axis=1) / (n - 1)
        curve[idx] = _ucv_integral_term(x, start, h) - 2.0 * float(loo.mean())
    h_best, k = _grid_pick(h_grid, curve)
    return BandwidthChoice(h_best, "ucv",
                           {"h_grid": h_grid, "curve": curve, "index": k})


def rule_plugin(data, start: FittedStart | None, kernel: KernelSpec,
                h_pilot: float | None = None, iterations: int = 1) -> BandwidthChoice:
    """Pilot-then-correct plug-in rule, optionally iterated.

    Starts from the robust moment rule, estimates the debiased roughness at
    the pilot, and inserts it into the optimal-h formula.  A nonpositive
    debiased estimate falls back to the moment rule (flagged).
    """
    x = np.asarray(data, dtype=float).ravel()
    n = x.size
    if start is None:
        start = fit_start("normal", x)
    delta_choice = rule_delta(x, kernel)
    h_os = delta_choice.diagnostics["h_os"]
    h_cur = h_pilot if h_pilot is not None else delta_choice.h
    diag: dict[str, Any] = {"h_pilot": h_cur, "h_os": h_os,
                            "clamped": False, "fallback": False}
    for _ in range(max(iterations, 1)):
        raw, debiased = plugin_roughness(x, start, kernel, h_cur)
        diag["roughness_raw"] = raw
        diag["roughness_debiased"] = debiased
        if debiased <= 0.0:
            diag["fallback"] = True
            return BandwidthChoice(delta_choice.h, "plugin", diag)
        h_cur, _ = amise_h(kernel, debiased, n)
        if h_cur >= h_os:
            h_cur = h_os
            diag["clamped"] = True
    return BandwidthChoice(float(h_cur), "plugin", diag)
