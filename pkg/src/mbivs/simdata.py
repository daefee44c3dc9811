"""Synthetic genotype/phenotype generation for benchmarking.

Genotypes are built from a latent-Gaussian haplotype model: two independent
draws from N(0, C) per sample, where C has unit diagonal, a common
within-block correlation, and a common between-block correlation; each draw
is thresholded at the (1 - maf) normal quantile and the two binary
haplotypes sum to a 0/1/2 genotype. Blocks double as predictor groups.

Phenotypes are linear in a sparse coefficient matrix plus rows of
compound-symmetric Gaussian noise. Five named scenarios cover homogeneous
and heterogeneous effect patterns at two sparsity levels plus a p > n case.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import NotPositiveDefinite, ValidationError
from .model import GroupedDesign, ResponseMatrix
from .rng import normal_quantile

__all__ = [
    "GenotypeParams",
    "ScenarioSpec",
    "SimulatedData",
    "SCENARIO_NAMES",
    "cycle_group_sizes",
    "block_covariance",
    "simulate_genotypes",
    "scenario_spec",
    "causal_positions",
    "true_coefficients",
    "response_covariance",
    "simulate_phenotypes",
    "simulate_scenario",
]

SCENARIO_NAMES = ("I", "II", "III", "IV", "V")

_GROUP_CYCLE = (5, 10, 20)

# Heterogeneous response subsets: nested prefixes of decreasing size.
_STAIRCASE_SIZES = (6, 5, 4, 3, 2)


@dataclass(frozen=True, slots=True)
class GenotypeParams:
    """Latent-Gaussian genotype model parameters."""

    n: int
    p: int
    maf: float = 0.24
    rho_within: float = 0.6
    rho_between: float = 0.3

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValidationError("n and p must be positive")
        if not 0 < self.maf < 0.5:
            raise ValidationError("maf must lie in (0, 0.5)")
        for name, rho in (("rho_within", self.rho_within), ("rho_between", self.rho_between)):
            if not -1 < rho < 1:
                raise ValidationError(f"{name} must lie in (-1, 1)")


@dataclass(frozen=True, slots=True)
class ScenarioSpec:
    """One benchmark scenario.

    ``subsets`` lists, per causal predictor, the 0-based response indices
    that carry its effect; ``effect_sizes`` is aligned with it.
    """

    name: str
    n: int
    p: int
    q: int
    effect_sizes: tuple[float, ...]
    subsets: tuple[tuple[int, ...], ...]
    maf: float = 0.24
    rho_within: float = 0.6
    rho_between: float = 0.3
    response_rho: float = 0.66
    n_test: int | None = None

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValidationError("n and p must be positive")
        if self.q < 2:
            raise ValidationError("q must be at least 2")
        if len(self.effect_sizes) != len(self.subsets):
            raise ValidationError("effect_sizes and subsets must align")
        if not self.subsets:
            raise ValidationError("scenario needs at least one causal predictor")
        for sub in self.subsets:
            if not sub:
                raise ValidationError("every causal predictor needs a nonempty subset")
            if min(sub) < 0 or max(sub) >= self.q:
                raise ValidationError("subset indices must lie in 0..q-1")
        if len(self.effect_sizes) > self.p:
            raise ValidationError("more causal predictors than predictors")
        if not -1 / (self.q - 1) < self.response_rho < 1:
            raise ValidationError("response_rho outside the positive-definite range")

    @property
    def n_causal(self) -> int:
        return len(self.effect_sizes)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSpec":
        d = json.loads(text)
        d["effect_sizes"] = tuple(d["effect_sizes"])
        d["subsets"] = tuple(tuple(s) for s in d["subsets"])
        return cls(**d)


@dataclass(frozen=True, slots=True)
class SimulatedData:
    """One simulated dataset plus the ground truth and a held-out test split."""

    design: GroupedDesign
    responses: ResponseMatrix
    true_coef: np.ndarray
    causal: np.ndarray
    sigma_true: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    groups_test: np.ndarray
    spec: ScenarioSpec


def cycle_group_sizes(p: int) -> list[int]:
    """Group sizes cycling through (5, 10, 20), final group trimmed to fit."""
    if p < 1:
        raise ValidationError("p must be positive")
    sizes: list[int] = []
    remaining = p
    i = 0
    while remaining > 0:
        take = min(_GROUP_CYCLE[i % len(_GROUP_CYCLE)], remaining)
        sizes.append(take)
        remaining -= take
        i += 1
    return sizes


def block_covariance(sizes: list[int], rho_within: float, rho_between: float) -> np.ndarray:
    """Unit-diagonal covariance with block structure; must be positive definite."""
    p = int(sum(sizes))
    c = np.full((p, p), rho_between)
    start = 0
    for s in sizes:
        c[start : start + s, start : start + s] = rho_within
        start += s
    np.fill_diagonal(c, 1.0)
    if np.linalg.eigvalsh(c)[0] <= 1e-10:
        raise NotPositiveDefinite("block covariance is not positive definite")
    return c


def simulate_genotypes(
    params: GenotypeParams, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw an (X, groups) pair from the latent-Gaussian haplotype model."""
    sizes = cycle_group_sizes(params.p)
    cov = block_covariance(sizes, params.rho_within, params.rho_between)
    chol = np.linalg.cholesky(cov)
    thr = normal_quantile(1.0 - params.maf)
    hap1 = rng.standard_normal((params.n, params.p)) @ chol.T > thr
    hap2 = rng.standard_normal((params.n, params.p)) @ chol.T > thr
    x = (hap1.astype(np.float64) + hap2.astype(np.float64))
    groups = np.repeat(np.arange(1, len(sizes) + 1), sizes)
    return x, groups


def _staircase(q: int, count: int) -> tuple[tuple[int, ...], ...]:
    """Nested prefix subsets of sizes 6,5,4,3,2 cycled to the causal count."""
    sizes = [_STAIRCASE_SIZES[i % len(_STAIRCASE_SIZES)] for i in range(count)]
    return tuple(tuple(range(min(s, q))) for s in sizes)


def scenario_spec(name: str) -> ScenarioSpec:
    """Named benchmark scenarios.

    I: n=500, p=100, 5 causal, effect 1.0, all responses.
    II: as I with 10 causal.
    III: as I with effect 0.25 on staircase subsets (sizes 6..2).
    IV: as III with 10 causal (staircase repeated).
    V: n=300, p=500, 5 causal, effects (.5,.5,.25,.25,.25) on the staircase.
    """
    q = 6
    if name == "I":
        return ScenarioSpec("I", 500, 100, q, (1.0,) * 5, (tuple(range(q)),) * 5)
    if name == "II":
        return ScenarioSpec("II", 500, 100, q, (1.0,) * 10, (tuple(range(q)),) * 10)
    if name == "III":
        return ScenarioSpec("III", 500, 100, q, (0.25,) * 5, _staircase(q, 5))
    if name == "IV":
        return ScenarioSpec("IV", 500, 100, q, (0.25,) * 10, _staircase(q, 10))
    if name == "V":
        return ScenarioSpec("V", 300, 500, q, (0.5, 0.5, 0.25, 0.25, 0.25), _staircase(q, 5))
    raise ValidationError(f"unknown scenario {name!r}; expected one of {SCENARIO_NAMES}")


def causal_positions(p: int, count: int, groups: np.ndarray) -> np.ndarray:
    """Evenly spaced causal predictor positions, in distinct groups while possible.

    Walks forward from each evenly spaced anchor until landing in a group not
    used yet; once every group is taken the used set resets.
    """
    if count > p:
        raise ValidationError("more causal predictors than predictors")
    used_groups: set[int] = set()
    used_pos: set[int] = set()
    n_groups = int(groups.max())
    out = []
    for i in range(count):
        anchor = int(np.floor(i * p / count))
        for step in range(p):
            cand = (anchor + step) % p
            if cand in used_pos:
                continue
            g = int(groups[cand])
            if g not in used_groups:
                out.append(cand)
                used_pos.add(cand)
                used_groups.add(g)
                if len(used_groups) == n_groups:
                    used_groups.clear()
                break
        else:
            raise ValidationError("could not place causal predictors")
    return np.array(sorted(out), dtype=np.int64)


def true_coefficients(spec: ScenarioSpec, groups: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """True coefficient matrix and causal predictor indices for a scenario."""
    causal = causal_positions(spec.p, spec.n_causal, groups)
    coef = np.zeros((spec.p, spec.q))
    for idx, effect, subset in zip(causal, spec.effect_sizes, spec.subsets):
        coef[idx, list(subset)] = effect
    return coef, causal


def response_covariance(q: int, rho: float) -> np.ndarray:
    """Compound-symmetric unit-variance noise covariance."""
    if not -1 / (q - 1) < rho < 1:
        raise ValidationError("rho outside the positive-definite range")
    return (1.0 - rho) * np.eye(q) + rho * np.ones((q, q))


def simulate_phenotypes(
    x: np.ndarray, coef: np.ndarray, sigma: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Y = X B + noise with rows of N(0, sigma) noise."""
    n = x.shape[0]
    q = coef.shape[1]
    chol = np.linalg.cholesky(sigma)
    return x @ coef + rng.standard_normal((n, q)) @ chol.T


def simulate_scenario(spec: ScenarioSpec, rng: np.random.Generator) -> SimulatedData:
    """Full train/test dataset for one scenario draw."""
    params = GenotypeParams(
        n=spec.n, p=spec.p, maf=spec.maf, rho_within=spec.rho_within, rho_between=spec.rho_between
    )
    x, groups = simulate_genotypes(params, rng)
    coef, causal = true_coefficients(spec, groups)
    sigma = response_covariance(spec.q, spec.response_rho)
    y = simulate_phenotypes(x, coef, sigma, rng)
    n_test = spec.n if spec.n_test is None else spec.n_test
    test_params = GenotypeParams(
        n=n_test, p=spec.p, maf=spec.maf, rho_within=spec.rho_within, rho_between=spec.rho_between
    )
    x_test, groups_test = simulate_genotypes(test_params, rng)
    y_test = simulate_phenotypes(x_test, coef, sigma, rng)
    return SimulatedData(
        design=GroupedDesign(x, groups),
        responses=ResponseMatrix(y),
        true_coef=coef,
        causal=causal,
        sigma_true=sigma,
        x_test=x_test,
        y_test=y_test,
        groups_test=groups_test,
        spec=spec,
    )
