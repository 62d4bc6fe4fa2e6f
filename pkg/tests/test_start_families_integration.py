"""Cross-module checks for the non-normal start families."""

import numpy as np
import pytest
from scipy.integrate import quad

from semistart.bandwidth import ucv
from semistart.densities import NormalMixture, mixture_sample
from semistart.estimator import DensityEstimate, estimate_semiparametric
from semistart.kernels import kernel_props
from semistart.starts import FittedStart, em_fit_mixture, eval_start, fit_start

G = kernel_props("gaussian")


def positive_sample(seed, n=300):
    rng = np.random.Generator(np.random.Philox(seed))
    return rng.gamma(3.0, 1.5, n)


@pytest.mark.parametrize("family", ["lognormal", "gamma"])
def test_positive_family_estimate_is_a_near_density(family):
    x = positive_sample(50)
    st = fit_start(family, x)
    est = DensityEstimate(x, G, 0.6, st)
    grid = np.linspace(-2.0, 25.0, 64)
    vals = estimate_semiparametric(est, grid)
    assert np.all(vals >= 0.0)
    mass, _ = quad(lambda t: estimate_semiparametric(est, t), -3.0, 40.0, limit=400)
    assert mass == pytest.approx(1.0, abs=0.05)


def test_mixture_start_estimate_is_a_near_density():
    truth = NormalMixture(weights=[0.5, 0.5], means=[-3.0, 3.0], sds=[1.0, 1.0])
    x = mixture_sample(truth, 400, seed=51)
    st = em_fit_mixture(x, k=2, seed=1)
    est = DensityEstimate(x, G, 0.5, st)
    vals = estimate_semiparametric(est, np.linspace(-8, 8, 33))
    assert np.all(vals >= 0.0)
    mass, _ = quad(lambda t: estimate_semiparametric(est, t), -12.0, 12.0, limit=400)
    assert mass == pytest.approx(1.0, abs=0.05)
    # clipping keeps the start positive far outside the fitted bulk
    assert eval_start(st, 40.0) > 0.0


@pytest.mark.parametrize("family", ["lognormal", "gamma"])
def test_ucv_leave_one_out_against_brute_force(family):
    # O(1) downdated refits must equal literal refits on the reduced sample
    x = positive_sample(52, n=12)
    n = x.size
    h = 0.8
    got = ucv(x, fit_start(family, x), G, [h]).diagnostics["curve"][0]

    term2 = 0.0
    for i in range(n):
        rest = np.delete(x, i)
        st_i = fit_start(family, rest)
        st_i = FittedStart(st_i.family, st_i.params, clip=None)
        acc = 0.0
        for j in range(n):
            if j != i:
                z = (x[j] - x[i]) / h
                acc += np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi) / h \
                    / float(eval_start(st_i, x[j]))
        term2 += float(eval_start(st_i, x[i])) * acc / (n - 1)
    term2 *= 2.0 / n

    st_full = FittedStart(fit_start(family, x).family,
                          fit_start(family, x).params, clip=None)
    est = DensityEstimate(x, G, h, st_full)
    term1, _ = quad(lambda t: estimate_semiparametric(est, t) ** 2, -5.0, 60.0,
                    limit=600, epsabs=1e-12)
    assert got == pytest.approx(term1 - term2, abs=1e-7)


def test_ucv_mixture_start_unsupported():
    x = mixture_sample(NormalMixture(weights=[0.5, 0.5], means=[-3.0, 3.0],
                                     sds=[1.0, 1.0]), 100, seed=53)
    st = em_fit_mixture(x, k=2, seed=2)
    with pytest.raises(NotImplementedError):
        ucv(x, st, G, [0.4])
