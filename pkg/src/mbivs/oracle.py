"""Closed-form posterior for a single coefficient under an orthogonal design.

With x'x = n, a spike-and-slab prior (slab variance s2 * sigma_kk, prior
inclusion probability pi*), and known noise variance sigma_kk, the posterior
of one coefficient is a two-part mixture:

    l * N((1 - d_n) * beta_ls, (1 - d_n) * sigma_kk / n) + (1 - l) * delta_0

where d_n = 1 / (1 + n * s2) is the ridge shrinkage factor and l is the
posterior inclusion probability. Its log-odds against exclusion are

    logit(pi*) - (1/2) log(1 + n s2) + (1/2)(1 - d_n) n beta_ls^2 / sigma_kk.

The posterior median is then a soft-threshold rule: zero unless l > 1/2,
otherwise the shrunk estimate pulled toward zero by a quantile of the slab.
Two independent routes to that median live here: the analytic
:func:`threshold_estimate`, and :func:`numeric_median`, which bisects the
mixture CDF directly and serves as the cross-check oracle.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .rng import normal_cdf, normal_quantile

__all__ = [
    "shrinkage_factor",
    "inclusion_log_odds",
    "inclusion_probability",
    "threshold_estimate",
    "numeric_median",
]


def _check_params(n, s2, sigma_kk, prior_prob) -> None:
    if np.any(np.asarray(n) < 1):
        raise ValidationError("n must be >= 1")
    if np.any(np.asarray(s2) <= 0):
        raise ValidationError("s2 must be positive")
    if np.any(np.asarray(sigma_kk) <= 0):
        raise ValidationError("sigma_kk must be positive")
    pp = np.asarray(prior_prob)
    if np.any(pp < 0) or np.any(pp > 1):
        raise ValidationError("prior_prob must lie in [0, 1]")


def shrinkage_factor(n, s2):
    """Ridge shrinkage d_n = 1 / (1 + n * s2); the slab mean is (1 - d_n) * beta_ls."""
    n = np.asarray(n, dtype=np.float64)
    s2 = np.asarray(s2, dtype=np.float64)
    return 1.0 / (1.0 + n * s2)


def inclusion_log_odds(beta_ls, n, s2, prior_prob, sigma_kk=1.0):
    """Posterior log-odds of inclusion for one coefficient.

    Broadcasts over all arguments. ``prior_prob`` of exactly 0 or 1 gives
    -inf / +inf, which downstream handles exactly.
    """
    _check_params(n, s2, sigma_kk, prior_prob)
    beta_ls = np.asarray(beta_ls, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    s2 = np.asarray(s2, dtype=np.float64)
    sigma_kk = np.asarray(sigma_kk, dtype=np.float64)
    pp = np.asarray(prior_prob, dtype=np.float64)
    with np.errstate(divide="ignore"):
        prior_lo = np.log(pp) - np.log1p(-pp)
    d_n = shrinkage_factor(n, s2)
    return prior_lo - 0.5 * np.log1p(n * s2) + 0.5 * (1.0 - d_n) * n * beta_ls**2 / sigma_kk


def inclusion_probability(beta_ls, n, s2, prior_prob, sigma_kk=1.0):
    """Posterior inclusion probability l, monotone nondecreasing in |beta_ls|."""
    lo = inclusion_log_odds(beta_ls, n, s2, prior_prob, sigma_kk)
    scalar = np.ndim(lo) == 0
    lo_arr = np.atleast_1d(np.asarray(lo, dtype=np.float64))
    out = np.empty_like(lo_arr)
    nonneg = lo_arr >= 0
    out[nonneg] = 1.0 / (1.0 + np.exp(-lo_arr[nonneg]))
    e = np.exp(lo_arr[~nonneg])
    out[~nonneg] = e / (1.0 + e)
    if scalar:
        return float(out[0])
    return out


def threshold_estimate(beta_ls, n, s2, prior_prob, sigma_kk=1.0):
    """Posterior median of the coefficient: analytic soft-threshold form.

    sgn(beta_ls) * max(0, (1-d_n)|beta_ls| - sd * Phi^{-1}(1 / (2 max(l, 1/2))))
    with sd = sqrt((1-d_n) * sigma_kk / n). Exactly zero whenever l <= 1/2.
    """
    beta_ls = np.asarray(beta_ls, dtype=np.float64)
    l = np.asarray(inclusion_probability(beta_ls, n, s2, prior_prob, sigma_kk))
    d_n = shrinkage_factor(n, s2)
    sd = np.sqrt((1.0 - d_n) * np.asarray(sigma_kk, dtype=np.float64) / np.asarray(n, dtype=np.float64))
    shift = sd * normal_quantile(1.0 / (2.0 * np.maximum(l, 0.5)))
    # Phi^{-1}(1/(2l)) -> +inf as l -> 1/2+ handled by the clamp below;
    # at l <= 1/2 the quantile arg is 1, giving +inf shift, hence zero.
    with np.errstate(invalid="ignore"):
        mag = np.maximum(0.0, (1.0 - d_n) * np.abs(beta_ls) - shift)
    mag = np.where(l <= 0.5, 0.0, mag)
    out = np.sign(beta_ls) * mag
    if out.ndim == 0:
        return float(out)
    return out


def _mixture_cdf(t, l, mu, sd):
    """CDF of l * N(mu, sd^2) + (1 - l) * delta_0 at points t."""
    return l * normal_cdf((t - mu) / sd) + (1.0 - l) * (t >= 0.0)


def numeric_median(beta_ls, n, s2, prior_prob, sigma_kk=1.0, tol=1e-12):
    """Posterior median by bisection on the mixture CDF.

    Independent of :func:`threshold_estimate`: it never forms the threshold,
    only the mixture CDF, and solves F(m) = 1/2 directly (respecting the
    atom at zero). Broadcasts like the analytic route.
    """
    scalar = all(np.ndim(v) == 0 for v in (beta_ls, n, s2, prior_prob, sigma_kk))
    l_arr, beta_arr, d_arr, n_arr, skk_arr = (
        np.atleast_1d(a).astype(np.float64)
        for a in np.broadcast_arrays(
            np.asarray(inclusion_probability(beta_ls, n, s2, prior_prob, sigma_kk)),
            np.asarray(beta_ls, dtype=np.float64),
            shrinkage_factor(n, s2),
            np.asarray(n, dtype=np.float64),
            np.asarray(sigma_kk, dtype=np.float64),
        )
    )

    mu = (1.0 - d_arr) * beta_arr
    sd = np.sqrt((1.0 - d_arr) * skk_arr / n_arr)
    out = np.zeros(l_arr.shape)

    # The median is nonzero only if the CDF passes 1/2 strictly on one side
    # of the atom: F(0^-) > 1/2 (negative median) or F(0) < 1/2 (positive).
    f_left = l_arr * normal_cdf((0.0 - mu) / sd)
    f_at0 = f_left + (1.0 - l_arr)
    pos = f_at0 < 0.5
    neg = f_left > 0.5

    for mask, sign in ((pos, 1.0), (neg, -1.0)):
        if not np.any(mask):
            continue
        lm, mum, sdm = l_arr[mask], mu[mask], sd[mask]
        lo = np.zeros(lm.shape)
        hi = np.abs(mum) + 20.0 * sdm
        for _ in range(120):
            mid = 0.5 * (lo + hi)
            f = _mixture_cdf(sign * mid, lm, mum, sdm)
            if sign > 0:
                go_right = f < 0.5
                lo = np.where(go_right, mid, lo)
                hi = np.where(go_right, hi, mid)
            else:
                go_right = f > 0.5
                lo = np.where(go_right, mid, lo)
                hi = np.where(go_right, hi, mid)
            if np.max(hi - lo) < tol:
                break
        out[mask] = sign * 0.5 * (lo + hi)

    if scalar:
        return float(out[0])
    return out
