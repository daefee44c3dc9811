"""Core data types for the multi-response selection model.

The regression is Y = X B + E with n samples, p grouped predictors, and q
responses. Each coefficient B[j, k] is gated by a three-level binary
hierarchy: a group indicator (is any predictor in the group active?), a
predictor indicator (is predictor j active for any response?), and a
response indicator (is predictor j active for response k specifically?).
The dense coefficient matrix ``effects`` only enters the likelihood through
the gated product, which :func:`assemble_coefficients` materializes.

Validation is centralized in :func:`validate_dataset`, which reports every
violation it finds rather than stopping at the first.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    BadAnnotation,
    BadGroupIndex,
    DatasetValidationError,
    DimensionMismatch,
    NonFiniteValue,
    ValidationError,
)

__all__ = [
    "GroupedDesign",
    "ResponseMatrix",
    "AnnotationPriorConfig",
    "PriorConfig",
    "ChainState",
    "SampleMeta",
    "PosteriorSamples",
    "assemble_coefficients",
    "validate_dataset",
    "concat_samples",
]


@dataclass(frozen=True, slots=True)
class GroupedDesign:
    """Design matrix with a group label per predictor.

    Parameters
    ----------
    x : ndarray, shape (n, p)
        Predictor matrix, finite values.
    groups : ndarray, shape (p,)
        Integer group label for each predictor, a contiguous 1..G assignment
        in which every group is nonempty.
    annotations : ndarray or None, shape (p,)
        Optional binary (0/1) functional annotation per predictor.
    """

    x: np.ndarray
    groups: np.ndarray
    annotations: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.float64))
        object.__setattr__(self, "groups", np.asarray(self.groups, dtype=np.int64))
        if self.annotations is not None:
            object.__setattr__(self, "annotations", np.asarray(self.annotations, dtype=np.int64))

    @property
    def n_samples(self) -> int:
        return self.x.shape[0]

    @property
    def n_predictors(self) -> int:
        return self.x.shape[1]

    @property
    def n_groups(self) -> int:
        return int(self.groups.max()) if self.groups.size else 0

    def group_members(self) -> list[np.ndarray]:
        """Predictor indices of each group, 0-based, in group order 1..G."""
        return [np.flatnonzero(self.groups == g + 1) for g in range(self.n_groups)]

    def issues(self) -> list[ValidationError]:
        out: list[ValidationError] = []
        if self.x.ndim != 2:
            out.append(DimensionMismatch(f"x must be 2-d, got ndim={self.x.ndim}"))
            return out
        n, p = self.x.shape
        if n < 1 or p < 1:
            out.append(DimensionMismatch(f"x must be nonempty, got shape {self.x.shape}"))
        if not np.all(np.isfinite(self.x)):
            out.append(NonFiniteValue("x contains non-finite values"))
        if self.groups.shape != (p,):
            out.append(
                DimensionMismatch(
                    f"groups must have length p={p}, got shape {self.groups.shape}"
                )
            )
        elif p > 0:
            gmax = int(self.groups.max())
            gmin = int(self.groups.min())
            present = np.unique(self.groups)
            if gmin < 1 or present.size != gmax:
                out.append(
                    BadGroupIndex(
                        "groups must be a contiguous 1..G assignment with every group nonempty"
                    )
                )
        if self.annotations is not None:
            if self.annotations.shape != (p,):
                out.append(
                    BadAnnotation(
                        f"annotations must have length p={p}, got shape {self.annotations.shape}"
                    )
                )
            elif not np.all(np.isin(self.annotations, (0, 1))):
                out.append(BadAnnotation("annotations must be binary 0/1"))
        return out


@dataclass(frozen=True, slots=True)
class ResponseMatrix:
    """Response matrix, shape (n, q) with q >= 2 finite columns."""

    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=np.float64))

    @property
    def n_samples(self) -> int:
        return self.y.shape[0]

    @property
    def n_responses(self) -> int:
        return self.y.shape[1]

    def issues(self) -> list[ValidationError]:
        out: list[ValidationError] = []
        if self.y.ndim != 2:
            out.append(DimensionMismatch(f"y must be 2-d, got ndim={self.y.ndim}"))
            return out
        if self.y.shape[1] < 2:
            out.append(
                DimensionMismatch(
                    f"y must have at least 2 response columns, got {self.y.shape[1]}"
                )
            )
        if not np.all(np.isfinite(self.y)):
            out.append(NonFiniteValue("y contains non-finite values"))
        return out


@dataclass(frozen=True, slots=True)
class AnnotationPriorConfig:
    """Probit regression prior on the predictor-level inclusion probability.

    The predictor-level probability becomes Phi(d0 + d1 * a_j) with a_j the
    binary annotation; d0 ~ N(0, d0_var) and d1 ~ N(mu_d, d1_var).
    """

    mu_d: float = 0.0
    d0_var: float = 100.0
    d1_var: float = 100.0

    def __post_init__(self):
        if self.d0_var <= 0 or self.d1_var <= 0:
            raise ValidationError("annotation prior variances must be positive")


@dataclass(frozen=True, slots=True)
class PriorConfig:
    """Hyperpriors of the hierarchy.

    Defaults: inclusion probabilities Beta(1, 1) at every level, the common
    effect scale s2 ~ InvGamma(0.01, 0.01) (shape/rate), and the residual
    covariance Sigma ~ InvWishart(q, I_q). ``iw_df``/``iw_scale`` left as
    None resolve to those q-dependent defaults at fit time.
    """

    beta_a: float = 1.0
    beta_b: float = 1.0
    s2_shape: float = 0.01
    s2_rate: float = 0.01
    iw_df: float | None = None
    iw_scale: np.ndarray | None = None
    annotation: AnnotationPriorConfig | None = None

    def __post_init__(self):
        if self.beta_a <= 0 or self.beta_b <= 0:
            raise ValidationError("beta_a and beta_b must be positive")
        if self.s2_shape <= 0 or self.s2_rate <= 0:
            raise ValidationError("s2_shape and s2_rate must be positive")
        if self.iw_scale is not None:
            object.__setattr__(self, "iw_scale", np.asarray(self.iw_scale, dtype=np.float64))

    def resolved_iw(self, q: int) -> tuple[float, np.ndarray]:
        """Concrete inverse-Wishart (df, scale) for a given q."""
        df = float(q) if self.iw_df is None else float(self.iw_df)
        scale = np.eye(q) if self.iw_scale is None else self.iw_scale
        if df < q:
            raise ValidationError(f"iw_df must be >= q, got {df} < {q}")
        if scale.shape != (q, q):
            raise ValidationError(f"iw_scale must be ({q}, {q}), got {scale.shape}")
        return df, scale


@dataclass(slots=True)
class ChainState:
    """Full parameter state of one Gibbs chain.

    ``pred_prob`` has length G normally (one inclusion probability per group)
    and length p when the annotation prior drives it per predictor.
    ``probit_latent`` exists only in annotation mode.
    """

    effects: np.ndarray  # (p, q) dense coefficients
    group_incl: np.ndarray  # (G,) 0/1
    pred_incl: np.ndarray  # (p,) 0/1
    resp_incl: np.ndarray  # (p, q) 0/1
    sigma: np.ndarray  # (q, q) SPD residual covariance
    s2: float  # common effect-scale multiplier
    group_prob: float  # group-level inclusion probability
    pred_prob: np.ndarray  # (G,) or (p,) predictor-level probabilities
    resp_prob: np.ndarray  # (p,) response-level probabilities
    probit_d0: float = 0.0
    probit_d1: float = 0.0
    probit_latent: np.ndarray | None = None
    rng: np.random.Generator | None = None

    def issues(self, design: GroupedDesign, q: int) -> list[ValidationError]:
        """Invariant violations for this state under the given dimensions."""
        out: list[ValidationError] = []
        p, big_g = design.n_predictors, design.n_groups
        if self.effects.shape != (p, q):
            out.append(DimensionMismatch(f"effects must be ({p}, {q})"))
        if self.group_incl.shape != (big_g,) or self.pred_incl.shape != (p,):
            out.append(DimensionMismatch("indicator vectors have wrong shape"))
        if self.resp_incl.shape != (p, q):
            out.append(DimensionMismatch(f"resp_incl must be ({p}, {q})"))
        for name, arr in (
            ("group_incl", self.group_incl),
            ("pred_incl", self.pred_incl),
            ("resp_incl", self.resp_incl),
        ):
            if not np.all(np.isin(arr, (0, 1))):
                out.append(ValidationError(f"{name} must be binary 0/1"))
        if self.s2 <= 0:
            out.append(ValidationError("s2 must be positive"))
        if not np.all(np.isfinite(self.sigma)):
            out.append(NonFiniteValue("sigma contains non-finite values"))
        else:
            try:
                np.linalg.cholesky(self.sigma)
            except np.linalg.LinAlgError:
                out.append(ValidationError("sigma is not positive definite"))
        probs = np.concatenate(
            [[self.group_prob], np.ravel(self.pred_prob), np.ravel(self.resp_prob)]
        )
        if np.any(probs <= 0) or np.any(probs >= 1):
            out.append(ValidationError("inclusion probabilities must lie in (0, 1)"))
        return out


def assemble_coefficients(design: GroupedDesign, state: ChainState) -> np.ndarray:
    """Gated coefficient matrix B = (group * predictor * response gates) * effects."""
    row_gate = state.group_incl[design.groups - 1] * state.pred_incl
    return (row_gate[:, None] * state.resp_incl) * state.effects


@dataclass(frozen=True, slots=True)
class SampleMeta:
    """Provenance of a set of posterior draws."""

    n: int
    p: int
    q: int
    iterations: int
    burn_in: int
    thin: int
    seed: int
    stream_id: int
    annotation: bool = False

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "q": self.q,
            "iterations": self.iterations,
            "burn_in": self.burn_in,
            "thin": self.thin,
            "seed": self.seed,
            "stream_id": self.stream_id,
            "annotation": self.annotation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SampleMeta":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


@dataclass(slots=True)
class PosteriorSamples:
    """Retained draws from one or more chains.

    ``coef`` holds the gated coefficient matrix per draw, so coef[t][j, k]
    is exactly zero wherever incl[t][j, k] is zero. ``loglik`` and
    ``active`` trace the matrix-normal log-likelihood and the active-entry
    count at each retained draw.
    """

    incl: np.ndarray  # (T, p, q) uint8
    coef: np.ndarray  # (T, p, q) float64
    loglik: np.ndarray  # (T,)
    active: np.ndarray  # (T,)
    meta: SampleMeta
    sigma: np.ndarray | None = None  # (T, q, q)
    s2: np.ndarray | None = None  # (T,)
    d_trace: np.ndarray | None = None  # (T, 2) annotation intercept/slope

    @property
    def n_draws(self) -> int:
        return self.incl.shape[0]


def concat_samples(chains: list[PosteriorSamples]) -> PosteriorSamples:
    """Pool retained draws across chains (stream id of the pool is -1)."""
    if not chains:
        raise ValidationError("concat_samples needs at least one chain")
    if len(chains) == 1:
        return chains[0]
    first = chains[0]

    def _stack(attr):
        parts = [getattr(c, attr) for c in chains]
        if any(x is None for x in parts):
            return None
        return np.concatenate(parts, axis=0)

    return PosteriorSamples(
        incl=_stack("incl"),
        coef=_stack("coef"),
        loglik=_stack("loglik"),
        active=_stack("active"),
        meta=replace(first.meta, stream_id=-1),
        sigma=_stack("sigma"),
        s2=_stack("s2"),
        d_trace=_stack("d_trace"),
    )


def validate_dataset(design: GroupedDesign, responses: ResponseMatrix) -> None:
    """Check every dataset contract, raising with all violations found.

    A single violation raises its specific error type; multiple violations
    raise :class:`DatasetValidationError` carrying the full list.
    """
    issues = design.issues() + responses.issues()
    if (
        design.x.ndim == 2
        and responses.y.ndim == 2
        and design.x.shape[0] != responses.y.shape[0]
    ):
        issues.append(
            DimensionMismatch(
                f"x has {design.x.shape[0]} rows but y has {responses.y.shape[0]}"
            )
        )
    if not issues:
        return
    if len(issues) == 1:
        raise issues[0]
    raise DatasetValidationError(issues)
