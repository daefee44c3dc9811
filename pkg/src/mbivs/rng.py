"""Random-number plumbing and model-specific samplers.

All stochastic code in the library draws through ``numpy.random.Generator``
objects derived from an explicit :class:`RngStream`, never through global
state. Streams are keyed by (seed, stream id) and substreams by a path of
small integers, so replicates, chains, and roles (data simulation vs.
sampling vs. permutation) never share or reuse a stream.

The samplers implement the exact parameterizations the model needs:
inverse-Wishart via the Bartlett decomposition, inverse-gamma in shape/rate
form, one-sided truncated normals with a tail-stable rejection sampler, and
Bernoulli draws from log-odds that tolerate infinite inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import NotPositiveDefinite, ValidationError

__all__ = [
    "RngStream",
    "substream",
    "normal_cdf",
    "normal_quantile",
    "sample_mvnormal",
    "sample_inverse_wishart",
    "sample_inverse_gamma",
    "sample_beta",
    "sample_truncated_normal",
    "sample_bernoulli_logodds",
]


@dataclass(frozen=True, slots=True)
class RngStream:
    """Identity of an independent random stream.

    Parameters
    ----------
    seed : int
        Master entropy for the whole run. Nonnegative.
    stream_id : int
        Index of this stream under the master seed. Streams with different
        ids are statistically independent.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if self.seed < 0:
            raise ValidationError(f"seed must be nonnegative, got {self.seed}")
        if self.stream_id < 0:
            raise ValidationError(f"stream_id must be nonnegative, got {self.stream_id}")

    def generator(self) -> np.random.Generator:
        """Build the generator for this stream."""
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,)))
        )


def substream(seed: int, *path: int) -> np.random.Generator:
    """Generator for a nested substream, keyed by a path of integers.

    ``substream(seed, r, role, c)`` is independent of any other path, which
    gives each (replicate, role, chain) its own stream without coordination.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(path))))


def normal_cdf(x):
    """Standard normal CDF (double-precision accurate)."""
    return special.ndtr(x)


def normal_quantile(p):
    """Standard normal quantile function, inverse of :func:`normal_cdf`."""
    return special.ndtri(p)


def cholesky_spd(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Lower Cholesky factor, raising :class:`NotPositiveDefinite` on failure."""
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"{what} is not positive definite") from exc


def sample_mvnormal(
    rng: np.random.Generator,
    mean: np.ndarray,
    cov: np.ndarray | None = None,
    *,
    chol: np.ndarray | None = None,
) -> np.ndarray:
    """Draw one vector from N(mean, cov).

    Pass ``chol`` (the lower Cholesky factor of the covariance) to skip the
    factorization when it is already available.
    """
    mean = np.asarray(mean, dtype=np.float64)
    if chol is None:
        if cov is None:
            raise ValidationError("sample_mvnormal needs cov or chol")
        chol = cholesky_spd(np.asarray(cov, dtype=np.float64), "covariance")
    z = rng.standard_normal(mean.shape[0])
    return mean + chol @ z


def sample_inverse_wishart(rng: np.random.Generator, df: float, scale: np.ndarray) -> np.ndarray:
    """Draw from the inverse-Wishart IW(df, scale).

    Parameterized so that E[X] = scale / (df - q - 1) for df > q + 1.
    Uses the Bartlett decomposition of the Wishart on scale^{-1}: if
    W ~ Wishart(df, scale^{-1}) then W^{-1} ~ IW(df, scale).
    """
    scale = np.asarray(scale, dtype=np.float64)
    q = scale.shape[0]
    if scale.shape != (q, q):
        raise ValidationError("scale must be square")
    if df <= q - 1:
        raise ValidationError(f"inverse-Wishart needs df > q-1, got df={df}, q={q}")
    l_scale = cholesky_spd(scale, "inverse-Wishart scale")
    # Bartlett factor of Wishart(df, I): lower triangle N(0,1), diag chi.
    a = np.zeros((q, q))
    for i in range(q):
        a[i, i] = np.sqrt(rng.chisquare(df - i))
        if i > 0:
            a[i, :i] = rng.standard_normal(i)
    # W = (L^{-T} A)(L^{-T} A)^T ~ Wishart(df, scale^{-1});  X = W^{-1}.
    # Solve instead of invert: X = L A^{-T} A^{-1} L^T.
    m = np.linalg.solve(a, l_scale.T)  # A^{-1} L^T
    return m.T @ m


def sample_inverse_gamma(
    rng: np.random.Generator, shape: float, rate: float, size: int | None = None
):
    """Draw from InvGamma(shape, rate), density ∝ x^{-shape-1} exp(-rate/x).

    E[X] = rate / (shape - 1) for shape > 1.
    """
    if shape <= 0 or rate <= 0:
        raise ValidationError(f"inverse-gamma needs shape, rate > 0, got {shape}, {rate}")
    return 1.0 / rng.gamma(shape, scale=1.0 / rate, size=size)


def sample_beta(rng: np.random.Generator, a: float, b: float, size: int | None = None):
    """Draw from Beta(a, b)."""
    if a <= 0 or b <= 0:
        raise ValidationError(f"beta needs a, b > 0, got {a}, {b}")
    return rng.beta(a, b, size=size)


def _trunc_std_normal_left(rng: np.random.Generator, a: np.ndarray) -> np.ndarray:
    """Standard normal conditioned on X >= a, elementwise over ``a``.

    Plain rejection when a <= 0 (acceptance >= 1/2); shifted-exponential
    rejection in the tail (a > 0), which stays efficient out to a ~ 30+.
    """
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    out = np.empty_like(a)
    easy = a <= 0.0
    if np.any(easy):
        ae = a[easy]
        vals = np.full(ae.shape, np.nan)
        todo = np.ones(ae.shape, dtype=bool)
        while np.any(todo):
            cand = rng.standard_normal(int(todo.sum()))
            ok = cand >= ae[todo]
            idx = np.flatnonzero(todo)[ok]
            vals[idx] = cand[ok]
            todo[idx] = False
        out[easy] = vals
    hard = ~easy
    if np.any(hard):
        ah = a[hard]
        lam = 0.5 * (ah + np.sqrt(ah * ah + 4.0))
        vals = np.full(ah.shape, np.nan)
        todo = np.ones(ah.shape, dtype=bool)
        while np.any(todo):
            k = int(todo.sum())
            lam_t = lam[todo]
            cand = ah[todo] + rng.exponential(size=k) / lam_t
            accept = rng.random(k) <= np.exp(-0.5 * (cand - lam_t) ** 2)
            idx = np.flatnonzero(todo)[accept]
            vals[idx] = cand[accept]
            todo[idx] = False
        out[hard] = vals
    return out


def sample_truncated_normal(
    rng: np.random.Generator,
    mean,
    sd,
    *,
    lower: float | np.ndarray = -np.inf,
    upper: float | np.ndarray = np.inf,
):
    """Draw from N(mean, sd^2) truncated to one side, elementwise.

    Exactly one of ``lower``/``upper`` must be finite. Stable far into the
    tail (|mean - bound| / sd of 30 and beyond).
    """
    scalar = np.ndim(mean) == 0 and np.ndim(sd) == 0
    mean, sd = np.atleast_1d(np.asarray(mean, dtype=np.float64)), np.atleast_1d(
        np.asarray(sd, dtype=np.float64)
    )
    mean, sd = np.broadcast_arrays(mean, sd)
    if np.any(sd <= 0):
        raise ValidationError("sd must be positive")
    lower_arr = np.broadcast_to(np.asarray(lower, dtype=np.float64), mean.shape)
    upper_arr = np.broadcast_to(np.asarray(upper, dtype=np.float64), mean.shape)
    lo_finite = np.isfinite(lower_arr)
    hi_finite = np.isfinite(upper_arr)
    if np.any(lo_finite & hi_finite) or np.any(~lo_finite & ~hi_finite):
        raise ValidationError("exactly one of lower/upper must be finite (one-sided truncation)")
    out = np.empty(mean.shape)
    if np.any(lo_finite):
        m = lo_finite
        a = (lower_arr[m] - mean[m]) / sd[m]
        out[m] = mean[m] + sd[m] * _trunc_std_normal_left(rng, a)
    if np.any(hi_finite):
        m = hi_finite
        a = (mean[m] - upper_arr[m]) / sd[m]
        out[m] = mean[m] - sd[m] * _trunc_std_normal_left(rng, a)
    if scalar:
        return float(out[0])
    return out


def sample_bernoulli_logodds(rng: np.random.Generator, logodds) -> np.ndarray | int:
    """Bernoulli draw(s) with success probability sigmoid(logodds).

    ``logodds`` may be any real value or +/-inf (certain inclusion/exclusion);
    NaN is rejected. Computed without overflow for any finite input.
    """
    scalar = np.ndim(logodds) == 0
    lo = np.atleast_1d(np.asarray(logodds, dtype=np.float64))
    if np.any(np.isnan(lo)):
        raise ValidationError("logodds must not be NaN")
    # sigmoid via the numerically safe branch split
    p = np.empty_like(lo)
    nonneg = lo >= 0
    p[nonneg] = 1.0 / (1.0 + np.exp(-lo[nonneg]))
    e = np.exp(lo[~nonneg])
    p[~nonneg] = e / (1.0 + e)
    draw = (rng.random(lo.shape) < p).astype(np.int8)
    if scalar:
        return int(draw[0])
    return draw
