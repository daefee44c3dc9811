"""Posterior summaries: PIPs, Bayesian FDR selection, and best response subsets.

Selection happens at the predictor level: a predictor's inclusion
probability is the fraction of retained draws in which it is active for at
least one response. The Bayesian FDR rule sorts posterior exclusion
probabilities and keeps the largest prefix whose running mean stays at or
below the target rate.

For each selected predictor, the best response subset maximizes a
permutation-calibrated Z-score computed on the support of the entrywise
posterior median matrix: the observed statistic for subset S is the
indicator that every entry of S survives median thresholding, and each
reference replicate recomputes that indicator after randomly permuting all
p*q cells of the median matrix. Because a size-k reference is Bernoulli
with success probability falling rapidly in k, the Z-score rises with
subset size among fully supported subsets, which offsets the size bias of
raw subset probabilities. Degenerate references (constant under
permutation) map an observed excess to a +inf sentinel; exact ties in Z
resolve by larger subset size, then larger observed subset probability,
then lexicographic order, so results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .model import PosteriorSamples

__all__ = [
    "posterior_median_matrix",
    "entry_pip",
    "predictor_pip",
    "bfdr_select",
    "subset_pip",
    "BestSubsetResult",
    "best_subsets",
    "InferenceReport",
    "build_report",
    "PERMUTATION_SCHEME",
]

PERMUTATION_SCHEME = "median-support-cell-permutation"

_MAX_RESPONSES = 15  # subset enumeration is 2^q


def posterior_median_matrix(samples: PosteriorSamples) -> np.ndarray:
    """Entrywise posterior median of the gated coefficient matrix."""
    return np.median(samples.coef, axis=0)


def entry_pip(samples: PosteriorSamples) -> np.ndarray:
    """Per-entry inclusion probability, shape (p, q)."""
    return samples.incl.mean(axis=0)


def predictor_pip(samples: PosteriorSamples) -> np.ndarray:
    """Per-predictor inclusion probability: active for any response."""
    return samples.incl.any(axis=2).mean(axis=0)


def bfdr_select(pips: np.ndarray, alpha: float) -> tuple[np.ndarray, float]:
    """Bayesian FDR selection at rate ``alpha``.

    Sorts exclusion probabilities u = 1 - PIP ascending and keeps the
    longest prefix with running mean <= alpha. Returns the selected indices
    (ascending) and the largest included u (0.0 when nothing qualifies).
    The running means of the sorted u are nondecreasing, so the prefix rule
    is exact, not greedy.
    """
    pips = np.asarray(pips, dtype=np.float64)
    if pips.ndim != 1:
        raise ValidationError("bfdr_select expects a 1-d PIP vector")
    if np.any(pips < 0) or np.any(pips > 1):
        raise ValidationError("PIPs must lie in [0, 1]")
    if not 0 < alpha < 1:
        raise ValidationError("alpha must lie in (0, 1)")
    u = 1.0 - pips
    order = np.argsort(u, kind="stable")
    running = np.cumsum(u[order]) / np.arange(1, u.size + 1)
    ok = np.flatnonzero(running <= alpha + 1e-12)
    if ok.size == 0:
        return np.empty(0, dtype=np.int64), 0.0
    k = int(ok[-1]) + 1
    return np.sort(order[:k]), float(u[order[k - 1]])


def subset_pip(samples: PosteriorSamples, predictor: int, subset) -> float:
    """Fraction of draws in which every response in ``subset`` is active for the predictor."""
    q = samples.incl.shape[2]
    sub = _check_subset(subset, q)
    block = samples.incl[:, predictor, sub]
    return float(block.all(axis=1).mean())


def _check_subset(subset, q: int) -> list[int]:
    sub = sorted(int(k) for k in subset)
    if not sub:
        raise ValidationError("subset must be nonempty")
    if sub[0] < 0 or sub[-1] >= q:
        raise ValidationError(f"subset entries must lie in 0..{q - 1}")
    if len(set(sub)) != len(sub):
        raise ValidationError("subset entries must be distinct")
    return sub


def _superset_counts(masks: np.ndarray, q: int) -> np.ndarray:
    """counts[S] = number of draws whose active mask contains subset S."""
    f = np.bincount(masks, minlength=1 << q).astype(np.int64)
    for b in range(q):
        bit = 1 << b
        idx = np.flatnonzero(np.arange(1 << q) & bit == 0)
        f[idx] += f[idx | bit]
    return f


def _mask_to_subset(mask: int) -> tuple[int, ...]:
    return tuple(k for k in range(mask.bit_length()) if mask >> k & 1)


@dataclass(frozen=True, slots=True)
class BestSubsetResult:
    """Best response subset per predictor, with the full score tables.

    ``best[j]`` is a sorted tuple of 0-based response indices; ``z[j]`` its
    Z-score (possibly +inf against a degenerate reference); ``pips[j]``
    holds the draw-based subset probabilities and ``zscores[j]`` the
    permutation Z-scores, both length-2^q arrays over subset bitmasks
    (index 0, the empty subset, is unused).
    """

    best: dict[int, tuple[int, ...]]
    z: dict[int, float]
    pips: dict[int, np.ndarray] = field(repr=False)
    zscores: dict[int, np.ndarray] = field(repr=False)


def best_subsets(
    samples: PosteriorSamples,
    predictors,
    rng: np.random.Generator,
    n_permutations: int = 1000,
) -> BestSubsetResult:
    """Permutation-calibrated best response subset for each given predictor.

    The test statistic for subset S of predictor j is the indicator that
    every median-matrix entry (j, k), k in S, is nonzero; references
    recompute it after shuffling all p*q median cells. Reported subset
    probabilities remain the draw-based joint inclusion frequencies.
    """
    if n_permutations < 100:
        raise ValidationError("n_permutations must be >= 100")
    t, p, q = samples.incl.shape
    if q > _MAX_RESPONSES:
        raise ValidationError(f"subset search supports at most {_MAX_RESPONSES} responses")
    predictors = [int(j) for j in predictors]
    if any(j < 0 or j >= p for j in predictors):
        raise ValidationError("predictor index out of range")
    if not predictors:
        return BestSubsetResult(best={}, z={}, pips={}, zscores={})

    pow2 = (1 << np.arange(q)).astype(np.int64)
    support = (posterior_median_matrix(samples) != 0).astype(np.int64)
    sup_flat = support.ravel()

    obs_counts = {
        j: _superset_counts(samples.incl[:, j, :].astype(np.int64) @ pow2, q) for j in predictors
    }
    obs_mask = {j: int(support[j] @ pow2) for j in predictors}
    r = n_permutations
    ref_masks = np.empty((r, len(predictors)), dtype=np.int64)
    for i in range(r):
        rows = sup_flat[rng.permutation(p * q)].reshape(p, q)
        ref_masks[i] = rows[predictors] @ pow2

    best: dict[int, tuple[int, ...]] = {}
    best_z: dict[int, float] = {}
    pips: dict[int, np.ndarray] = {}
    ztabs: dict[int, np.ndarray] = {}
    for i, j in enumerate(predictors):
        pip_tab = obs_counts[j] / t
        obs = _superset_counts(np.array([obs_mask[j]], dtype=np.int64), q)
        hits = _superset_counts(ref_masks[:, i], q)
        rate = hits / r
        sd = np.sqrt(rate * (1.0 - rate))
        degenerate = (hits == 0) | (hits == r)
        with np.errstate(divide="ignore", invalid="ignore"):
            ztab = (obs - rate) / sd
        same = obs * r == hits
        ztab = np.where(degenerate & same, 0.0, ztab)
        ztab = np.where(degenerate & ~same & (obs * r > hits), np.inf, ztab)
        ztab = np.where(degenerate & ~same & (obs * r < hits), -np.inf, ztab)
        pips[j] = pip_tab
        ztabs[j] = ztab
        chosen = _argmax_subset(ztab, pip_tab, q)
        best[j] = _mask_to_subset(chosen)
        best_z[j] = float(ztab[chosen])
    return BestSubsetResult(best=best, z=best_z, pips=pips, zscores=ztabs)


def _argmax_subset(ztab: np.ndarray, pip_tab: np.ndarray, q: int) -> int:
    """Argmax over nonempty subsets with deterministic tie-breaking.

    Order of preference: larger Z, then larger subset size, then larger
    observed subset probability, then lexicographically smaller index
    tuple. Size outranks probability so that exact Z ties (degenerate
    references under strong signals) resolve toward the fuller subset
    rather than toward the small subsets that raw probabilities favor.
    """
    best_mask = -1
    best_key = None
    for mask in range(1, 1 << q):
        key = (ztab[mask], bin(mask).count("1"), pip_tab[mask])
        if best_mask < 0:
            better = True
        elif key[0] != best_key[0]:
            better = key[0] > best_key[0]
        elif key[1] != best_key[1]:
            better = key[1] > best_key[1]
        elif key[2] != best_key[2]:
            better = key[2] > best_key[2]
        else:
            better = _mask_to_subset(mask) < _mask_to_subset(best_mask)
        if better:
            best_mask, best_key = mask, key
    return best_mask


@dataclass(frozen=True, slots=True)
class InferenceReport:
    """End-to-end selection summary for one posterior sample set."""

    alpha: float
    n_draws: int
    coef_median: np.ndarray  # (p, q)
    entry_pips: np.ndarray  # (p, q)
    predictor_pips: np.ndarray  # (p,)
    selected: np.ndarray  # ascending predictor indices
    exclusion_cutoff: float  # largest included u = 1 - PIP
    best: dict[int, tuple[int, ...]]
    best_z: dict[int, float]
    best_pip: dict[int, float]
    permutation_scheme: str = PERMUTATION_SCHEME

    def to_dict(self) -> dict:
        """JSON-ready representation (response/predictor indices 1-based)."""
        return {
            "alpha": self.alpha,
            "n_draws": self.n_draws,
            "permutation_scheme": self.permutation_scheme,
            "exclusion_cutoff": self.exclusion_cutoff,
            "coef_median": self.coef_median.tolist(),
            "entry_pips": self.entry_pips.tolist(),
            "predictor_pips": self.predictor_pips.tolist(),
            "selected": [int(j) + 1 for j in self.selected],
            "best_subsets": {
                str(int(j) + 1): {
                    "responses": [k + 1 for k in self.best[j]],
                    "z": _json_float(self.best_z[j]),
                    "subset_pip": self.best_pip[j],
                }
                for j in self.best
            },
        }


def _json_float(x: float):
    if np.isposinf(x):
        return "inf"
    if np.isneginf(x):
        return "-inf"
    return float(x)


def build_report(
    samples: PosteriorSamples,
    alpha: float,
    rng: np.random.Generator,
    n_permutations: int = 1000,
) -> InferenceReport:
    """PIPs, FDR selection, and best subsets in one pass."""
    pips = predictor_pip(samples)
    selected, cutoff = bfdr_select(pips, alpha)
    subset_res = best_subsets(samples, selected, rng, n_permutations=n_permutations)
    best_pip = {j: float(subset_res.pips[j][_subset_to_mask(s)]) for j, s in subset_res.best.items()}
    return InferenceReport(
        alpha=alpha,
        n_draws=samples.n_draws,
        coef_median=posterior_median_matrix(samples),
        entry_pips=entry_pip(samples),
        predictor_pips=pips,
        selected=selected,
        exclusion_cutoff=cutoff,
        best=subset_res.best,
        best_z=subset_res.z,
        best_pip=best_pip,
    )


def _subset_to_mask(subset: tuple[int, ...]) -> int:
    mask = 0
    for k in subset:
        mask |= 1 << k
    return mask
