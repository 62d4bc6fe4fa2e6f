"""Parametric start densities: fitting, clipped evaluation, scores.

The corrected estimator divides by the start density at every data point, so
an evaluation that can dip arbitrarily close to zero makes lonely far-out
points wildly influential.  The clip rule replaces the density outside a
central region by its boundary value: for the normal family the region is
|x - mu| < c*sigma (default c = 2.5), and the other families use the
matching quantile region Phi(-c)..Phi(c) of the fitted distribution so the
normal case is reproduced exactly.  Clipped evaluation therefore equals the
raw density inside the region and is bounded below by a positive floor on
any compact set.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
from scipy import special, stats

from .densities import NormalMixture, mixture_pdf

__all__ = ["FittedStart", "fit_start", "em_fit_mixture", "eval_start", "score", "FAMILIES"]

SQRT_2PI = np.sqrt(2.0 * np.pi)
FAMILIES = ("constant", "normal", "lognormal", "gamma", "normal_mixture")


@dataclass(frozen=True, eq=False)
class FittedStart:
    """A start family with fitted parameters and an optional clip threshold.

    clip is in standard (quantile) units; None disables clipping entirely.
    """

    family: str
    params: dict[str, Any] = field(default_factory=dict)
    clip: float | None = 2.5

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unsupported start family: {self.family!r}")
        if self.clip is not None and self.clip <= 0:
            raise ValueError("clip threshold must be positive")

    def unclipped(self) -> "FittedStart":
        return replace(self, clip=None)

    def to_json_dict(self) -> dict:
        params = dict(self.params)
        if self.family == "normal_mixture":
            mx: NormalMixture = params.pop("mixture")
            params["mixture"] = {"components": [
                {"p": p, "mu": mu, "sd": sd}
                for p, mu, sd in zip(mx.weights, mx.means, mx.sds)]}
        return {"family": self.family, "params": params, "clip": self.clip}

    @staticmethod
    def from_json_dict(doc: dict) -> "FittedStart":
        params = dict(doc.get("params", {}))
        if doc["family"] == "normal_mixture":
            comps = params.pop("mixture")["components"]
            params["mixture"] = NormalMixture(
                weights=[c["p"] for c in comps],
                means=[c["mu"] for c in comps],
                sds=[c["sd"] for c in comps])
        return FittedStart(doc["family"], params, doc.get("clip"))


def _as_clean_sample(data, positive: bool = False) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("need at least 2 observations to fit a start")
    if positive and np.any(x <= 0):
        raise ValueError("this start family requires strictly positive data")
    return x


def fit_start(family: str, data) -> FittedStart:
    """Fit a start by the family's standard cheap estimator.

    normal and lognormal use mean / maximum-likelihood variance (n in the
    denominator, on the log scale for lognormal); gamma uses moment
    estimates alpha = m^2/v, beta = m/v; constant has no parameters.
    """
    if family == "constant":
        return FittedStart("constant")
    if family == "normal":
        x = _as_clean_sample(data)
        mu, sd = float(x.mean()), float(x.std())
        if sd == 0.0:
            raise ValueError("sample variance is zero")
        return FittedStart("normal", {"mu": mu, "sd": sd})
    if family == "lognormal":
        x = np.log(_as_clean_sample(data, positive=True))
        mu, sd = float(x.mean()), float(x.std())
        if sd == 0.0:
            raise ValueError("sample variance is zero")
        return FittedStart("lognormal", {"mu": mu, "sd": sd})
    if family == "gamma":
        x = _as_clean_sample(data, positive=True)
        m, v = float(x.mean()), float(x.var())
        if v == 0.0:
            raise ValueError("sample variance is zero")
        return FittedStart("gamma", {"alpha": m * m / v, "beta": m / v})
    if family == "normal_mixture":
        raise ValueError("use em_fit_mixture for the normal_mixture family")
    raise ValueError(f"unsupported start family: {family!r}")


def _em_once(x: np.ndarray, k: int, rng: np.random.Generator,
             max_iter: int, tol: float):
    n = x.size
    sd_all = x.std()
    # k-means++-style spread of initial centers
    centers = [x[rng.integers(n)]]
    for _ in range(k - 1):
        d2 = np.min((x[:, None] - np.asarray(centers)[None, :]) ** 2, axis=1)
        if d2.sum() <= 0:
            centers.append(x[rng.integers(n)])
        else:
            centers.append(x[rng.choice(n, p=d2 / d2.sum())])
    mu = np.asarray(centers, dtype=float)
    sd = np.full(k, max(sd_all / k, 1e-3 * sd_all))
    w = np.full(k, 1.0 / k)

    last_ll = -np.inf
    floor = 1e-6 * sd_all
    for _ in range(max_iter):
        logp = (np.log(w)[None, :] - np.log(sd)[None, :] - np.log(SQRT_2PI)
                - 0.5 * ((x[:, None] - mu[None, :]) / sd[None, :]) ** 2)
        m = logp.max(axis=1, keepdims=True)
        lse = m[:, 0] + np.log(np.exp(logp - m).sum(axis=1))
        ll = float(lse.sum())
        if ll + 1e-9 < last_ll:
            raise AssertionError("EM log-likelihood decreased")
        resp = np.exp(logp - lse[:, None])
        nk = resp.sum(axis=0)
        if np.any(nk <= 0):
            return None, ll
        w = nk / n
        mu = resp.T @ x / nk
        var = (resp * (x[:, None] - mu[None, :]) ** 2).sum(axis=0) / nk
        sd = np.sqrt(var)
        if np.any(sd < floor):
            return None, ll
        if ll - last_ll < tol and np.isfinite(last_ll):
            last_ll = ll
            break
        last_ll = ll
    mix = NormalMixture(weights=w / w.sum(), means=mu, sds=sd)
    return mix, last_ll


def em_fit_mixture(data, k: int, seed: int, *, max_iter: int = 200,
                   tol: float = 1e-8, restarts: int = 5) -> FittedStart:
    """Fit a k-component normal mixture start by EM.

    Deterministic for a fixed seed.  A run that collapses a component below
    1e-6 of the sample scale is restarted (fresh seeding) up to `restarts`
    times before giving up.
    """
    x = _as_clean_sample(data)
    if k < 1:
        raise ValueError("component count must be at least 1")
    if x.size < 10 * k:
        raise ValueError("need at least 10 observations per component")
    if x.std() == 0.0:
        raise ValueError("sample variance is zero")
    rng = np.random.Generator(np.random.Philox(seed))
    for _ in range(restarts):
        mix, _ = _em_once(x, k, rng, max_iter, tol)
        if mix is not None:
            return FittedStart("normal_mixture", {"mixture": mix})
    raise RuntimeError(f"EM produced a degenerate component in {restarts} restarts")


def _raw_pdf(s: FittedStart, x: np.ndarray) -> np.ndarray:
    if s.family == "constant":
        return np.ones_like(x)
    if s.family == "normal":
        mu, sd = s.params["mu"], s.params["sd"]
        return np.exp(-0.5 * ((x - mu) / sd) ** 2) / (SQRT_2PI * sd)
    if s.family == "lognormal":
        mu, sd = s.params["mu"], s.params["sd"]
        out = np.zeros_like(x)
        pos = x > 0
        xp = x[pos]
        out[pos] = np.exp(-0.5 * ((np.log(xp) - mu) / sd) ** 2) / (SQRT_2PI * sd * xp)
        return out
    if s.family == "gamma":
        a, b = s.params["alpha"], s.params["beta"]
        out = np.zeros_like(x)
        pos = x > 0
        xp = x[pos]
        out[pos] = np.exp(a * np.log(b) + (a - 1.0) * np.log(xp) - b * xp - special.gammaln(a))
        return out
    if s.family == "normal_mixture":
        return np.atleast_1d(mixture_pdf(s.params["mixture"], x))
    raise ValueError(f"unsupported start family: {s.family!r}")


def _clip_edges(s: FittedStart) -> tuple[float, float]:
    """Central-region edges matching the normal mu +/- c*sigma rule."""
    c = s.clip
    p_lo = stats.norm.cdf(-c)
    if s.family == "normal":
        mu, sd = s.params["mu"], s.params["sd"]
        return mu - c * sd, mu + c * sd
    if s.family == "lognormal":
        mu, sd = s.params["mu"], s.params["sd"]
        return float(np.exp(mu - c * sd)), float(np.exp(mu + c * sd))
    if s.family == "gamma":
        a, b = s.params["alpha"], s.params["beta"]
        return (float(stats.gamma.ppf(p_lo, a, scale=1.0 / b)),
                float(stats.gamma.ppf(1.0 - p_lo, a, scale=1.0 / b)))
    if s.family == "normal_mixture":
        mx: NormalMixture = s.params["mixture"]
        mu0 = float(np.sum(mx.weights * mx.means))
        sd0 = float(np.sqrt(np.sum(mx.weights * (mx.sds**2 + (mx.means - mu0) ** 2))))
        return mu0 - c * sd0, mu0 + c * sd0
    raise ValueError(f"clipping undefined for family {s.family!r}")


def eval_start(s: FittedStart, x):
    """Start density with the clip floor applied outside the central region.

    With clip=None the raw family density is returned; for the positive
    families that raw density is 0 at x <= 0, which the corrected estimator
    treats as a domain error.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = _raw_pdf(s, x)
    if s.clip is not None and s.family != "constant":
        lo, hi = _clip_edges(s)
        flo = float(_raw_pdf(s, np.array([lo]))[0])
        fhi = float(_raw_pdf(s, np.array([hi]))[0])
        out = np.where(x < lo, np.maximum(out, flo), out)
        out = np.where(x > hi, np.maximum(out, fhi), out)
    return float(out[0]) if scalar else out


def score(s: FittedStart, x):
    """Gradient of log density in the family's parameters.

    Orders: normal (mu, sd); lognormal (mu, sd); gamma (alpha, beta);
    normal_mixture (p_1.., mu_1.., sd_1..) via component responsibilities.
    Evaluated on the raw (unclipped) density.
    """
    x = np.asarray(x, dtype=float)
    if s.family == "constant":
        raise ValueError("the constant start has no parameters to score")
    if s.family == "normal":
        mu, sd = s.params["mu"], s.params["sd"]
        return np.stack([(x - mu) / sd**2, ((x - mu) ** 2 - sd**2) / sd**3], axis=-1)
    if s.family == "lognormal":
        mu, sd = s.params["mu"], s.params["sd"]
        lx = np.log(x)
        return np.stack([(lx - mu) / sd**2, ((lx - mu) ** 2 - sd**2) / sd**3], axis=-1)
    if s.family == "gamma":
        a, b = s.params["alpha"], s.params["beta"]
        return np.stack([np.log(b) + np.log(x) - special.digamma(a),
                         np.full_like(x, a / b) - x], axis=-1)
    if s.family == "normal_mixture":
        mx: NormalMixture = s.params["mixture"]
        z = (x[..., None] - mx.means) / mx.sds
        comp = np.exp(-0.5 * z * z) / (SQRT_2PI * mx.sds)
        f = np.sum(mx.weights * comp, axis=-1, keepdims=True)
        resp = mx.weights * comp / f
        d_p = comp / f
        d_mu = resp * z / mx.sds
        d_sd = resp * (z * z - 1.0) / mx.sds
        return np.concatenate([d_p, d_mu, d_sd], axis=-1)
    raise ValueError(f"unsupported start family: {s.family!r}")
