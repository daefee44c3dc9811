"""Gibbs sampler for the three-level indicator selection model.

One sweep updates, in order: the dense coefficient rows, the indicator
hierarchy (group, then predictor, then response level, each group in
ascending order), the residual covariance, the common effect scale, and the
inclusion-probability hyperparameters (or the probit annotation regression
when it drives the predictor level).

The residual matrix E = Y - X B is maintained incrementally across every
update; nothing recomputes it from scratch inside a chain. All indicator
full conditionals are evaluated in log space, so saturated or empty
configurations cost no special cases.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import NumericalBreakdown, ValidationError
from .model import (
    ChainState,
    GroupedDesign,
    PosteriorSamples,
    PriorConfig,
    ResponseMatrix,
    SampleMeta,
    assemble_coefficients,
    validate_dataset,
)
from .rng import (
    RngStream,
    cholesky_spd,
    normal_cdf,
    sample_bernoulli_logodds,
    sample_inverse_gamma,
    sample_inverse_wishart,
    sample_truncated_normal,
)

__all__ = [
    "SamplerConfig",
    "GibbsKernel",
    "init_state",
    "draw_state_from_prior",
    "simulate_responses",
    "sigma_full_conditional",
    "s2_full_conditional",
    "run_chain",
    "run_chains",
]

logger = logging.getLogger(__name__)

_LOG2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, slots=True)
class SamplerConfig:
    """Chain length and switches for one sampling run.

    Retained draws number (iterations - burn_in + thin - 1) // thin. The
    ``sample_*`` switches exist for validation runs that hold a block fixed;
    production fits leave them all on.
    """

    iterations: int = 7500
    burn_in: int = 2500
    thin: int = 1
    chains: int = 1
    seed: int = 0
    sample_sigma: bool = True
    sample_s2: bool = True
    sample_probs: bool = True
    record_sigma: bool = True
    record_s2: bool = True
    progress_every: int = 0
    validate: bool = True

    def __post_init__(self):
        if self.iterations <= 0:
            raise ValidationError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValidationError("need 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ValidationError("thin must be >= 1")
        if self.chains < 1:
            raise ValidationError("chains must be >= 1")
        if self.seed < 0:
            raise ValidationError("seed must be nonnegative")

    @property
    def n_retained(self) -> int:
        return (self.iterations - self.burn_in + self.thin - 1) // self.thin


def _logit(p: float) -> float:
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return math.inf
    return math.log(p) - math.log1p(-p)


def _bern(rng: np.random.Generator, logodds: float) -> int:
    """Scalar Bernoulli(sigmoid(logodds)) draw; tolerates +/-inf."""
    if logodds >= 0.0:
        p = 1.0 / (1.0 + math.exp(-logodds))
    else:
        e = math.exp(logodds)
        p = e / (1.0 + e)
    return 1 if rng.random() < p else 0


def sigma_full_conditional(
    resid: np.ndarray,
    effects: np.ndarray,
    s2: float,
    iw_df: float,
    iw_scale: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Inverse-Wishart (df, scale) of the residual covariance given the rest.

    Every coefficient row contributes through its N(0, s2 * Sigma) prior, so
    df picks up n + p and the scale picks up E'E + b'b / s2. An empty
    coefficient matrix (p = 0) reduces to the pure covariance posterior.
    """
    n = resid.shape[0]
    p = effects.shape[0]
    scale = iw_scale + resid.T @ resid + (effects.T @ effects) / s2
    scale = 0.5 * (scale + scale.T)
    return iw_df + n + p, scale


def s2_full_conditional(
    effects: np.ndarray,
    sigma_inv: np.ndarray,
    shape0: float,
    rate0: float,
) -> tuple[float, float]:
    """Inverse-gamma (shape, rate) of the effect scale given the rest."""
    p, q = effects.shape
    quad = float(np.vdot(effects, effects @ sigma_inv))
    return shape0 + 0.5 * p * q, rate0 + 0.5 * quad


def init_state(
    design: GroupedDesign,
    responses: ResponseMatrix,
    priors: PriorConfig,
    rng: np.random.Generator,
) -> ChainState:
    """Deterministic starting point: all indicators on, zero effects.

    Sigma starts at the sample covariance of Y (jittered to SPD if needed),
    s2 at 1, every inclusion probability at 1/2. With the annotation prior
    the probit coefficients start at (0, mu_d).
    """
    y = responses.y
    n, q = y.shape
    p, big_g = design.n_predictors, design.n_groups
    if n >= 2:
        sigma = np.cov(y, rowvar=False, ddof=1)
        sigma = np.atleast_2d(sigma)
    else:
        sigma = np.eye(q)
    jitter = 1e-8 * max(float(np.trace(sigma)) / q, 1.0)
    for _ in range(40):
        try:
            np.linalg.cholesky(sigma)
            break
        except np.linalg.LinAlgError:
            sigma = sigma + jitter * np.eye(q)
            jitter *= 10.0
    annotation = priors.annotation is not None
    if annotation:
        if design.annotations is None:
            raise ValidationError("annotation prior configured but design has no annotations")
        d1 = priors.annotation.mu_d
        pred_prob = np.clip(normal_cdf(0.0 + d1 * design.annotations), 1e-12, 1.0 - 1e-12)
        latent = np.zeros(p)
    else:
        d1 = 0.0
        pred_prob = np.full(big_g, 0.5)
        latent = None
    return ChainState(
        effects=np.zeros((p, q)),
        group_incl=np.ones(big_g, dtype=np.int8),
        pred_incl=np.ones(p, dtype=np.int8),
        resp_incl=np.ones((p, q), dtype=np.int8),
        sigma=sigma,
        s2=1.0,
        group_prob=0.5,
        pred_prob=pred_prob,
        resp_prob=np.full(p, 0.5),
        probit_d0=0.0,
        probit_d1=d1,
        probit_latent=latent,
        rng=rng,
    )


def draw_state_from_prior(
    design: GroupedDesign,
    q: int,
    priors: PriorConfig,
    rng: np.random.Generator,
) -> ChainState:
    """Exact draw of the full parameter state from its prior."""
    p, big_g = design.n_predictors, design.n_groups
    iw_df, iw_scale = priors.resolved_iw(q)
    a, b = priors.beta_a, priors.beta_b
    group_prob = float(rng.beta(a, b))
    group_incl = (rng.random(big_g) < group_prob).astype(np.int8)
    annotation = priors.annotation is not None
    if annotation:
        if design.annotations is None:
            raise ValidationError("annotation prior configured but design has no annotations")
        ann = priors.annotation
        d0 = float(rng.normal(0.0, math.sqrt(ann.d0_var)))
        d1 = float(rng.normal(ann.mu_d, math.sqrt(ann.d1_var)))
        eta = d0 + d1 * design.annotations
        latent = eta + rng.standard_normal(p)
        pred_incl = (latent > 0.0).astype(np.int8)
        pred_prob = np.clip(normal_cdf(eta), 1e-300, 1.0 - 1e-16)
    else:
        d0, d1, latent = 0.0, 0.0, None
        pred_prob = rng.beta(a, b, size=big_g)
        pred_incl = (rng.random(p) < pred_prob[design.groups - 1]).astype(np.int8)
    resp_prob = rng.beta(a, b, size=p)
    resp_incl = (rng.random((p, q)) < resp_prob[:, None]).astype(np.int8)
    s2 = float(sample_inverse_gamma(rng, priors.s2_shape, priors.s2_rate))
    sigma = sample_inverse_wishart(rng, iw_df, iw_scale)
    l_eff = cholesky_spd(s2 * sigma, "prior effect covariance")
    effects = rng.standard_normal((p, q)) @ l_eff.T
    return ChainState(
        effects=effects,
        group_incl=group_incl,
        pred_incl=pred_incl,
        resp_incl=resp_incl,
        sigma=sigma,
        s2=s2,
        group_prob=group_prob,
        pred_prob=pred_prob,
        resp_prob=resp_prob,
        probit_d0=d0,
        probit_d1=d1,
        probit_latent=latent,
        rng=rng,
    )


def simulate_responses(
    design: GroupedDesign, state: ChainState, rng: np.random.Generator
) -> np.ndarray:
    """Draw Y | state: X B plus rows of N(0, Sigma) noise."""
    coef = assemble_coefficients(design, state)
    l_sig = cholesky_spd(state.sigma, "sigma")
    n = design.n_samples
    q = state.sigma.shape[0]
    return design.x @ coef + rng.standard_normal((n, q)) @ l_sig.T


class GibbsKernel:
    """One chain's update machinery.

    Owns the state, the incrementally maintained residual, and per-sweep
    Cholesky/inverse factors of Sigma. Construct directly only for tests
    that need to poke the state; normal use goes through :func:`run_chain`.
    """

    def __init__(
        self,
        design: GroupedDesign,
        responses: ResponseMatrix,
        priors: PriorConfig,
        config: SamplerConfig,
        *,
        stream: RngStream | None = None,
        rng: np.random.Generator | None = None,
        state: ChainState | None = None,
    ):
        self.design = design
        self.priors = priors
        self.config = config
        self.x = design.x
        self.y = responses.y if isinstance(responses, ResponseMatrix) else np.asarray(responses)
        self.n, self.p = self.x.shape
        self.q = self.y.shape[1]
        self.groups0 = design.groups - 1
        self.members = design.group_members()
        self.colsq = np.einsum("ij,ij->j", self.x, self.x)
        self.grams = [self.x[:, m].T @ self.x[:, m] for m in self.members]
        self.iw_df, self.iw_scale = priors.resolved_iw(self.q)
        self.annotation = priors.annotation is not None
        if rng is None:
            if state is not None and state.rng is not None:
                rng = state.rng
            elif stream is not None:
                rng = stream.generator()
            else:
                raise ValidationError("GibbsKernel needs a stream, rng, or state with rng")
        self.rng = rng
        self.state = state if state is not None else init_state(design, responses, priors, rng)
        self.resid = self.y - self.x @ assemble_coefficients(design, self.state)
        self._sweep_index = -1
        self._refresh_sigma_factors()

    # -- factor maintenance -------------------------------------------------

    def _refresh_sigma_factors(self) -> None:
        l_sig = cholesky_spd(self.state.sigma, "sigma")
        self._sig_chol = l_sig
        eye = np.eye(self.q)
        self._sig_inv = sla.cho_solve((l_sig, True), eye, check_finite=False)
        self._sig_logdet = 2.0 * float(np.sum(np.log(np.diag(l_sig))))

    def set_responses(self, y: np.ndarray) -> None:
        """Swap in a new response matrix, rebuilding the residual."""
        self.y = np.asarray(y, dtype=np.float64)
        self.resid = self.y - self.x @ assemble_coefficients(self.design, self.state)

    # -- block updates ------------------------------------------------------

    def update_effects(self) -> None:
        """Draw each dense coefficient row from its Gaussian full conditional.

        Rows whose gated entries are all off revert to the N(0, s2 * Sigma)
        prior; active rows mix the prior precision with the likelihood
        contribution of the row's predictor column.
        """
        st = self.state
        rng = self.rng
        sinv = self._sig_inv
        inv_s2 = 1.0 / st.s2
        row_gate = st.group_incl[self.groups0] * st.pred_incl
        sprior_chol = math.sqrt(st.s2) * self._sig_chol
        for j in range(self.p):
            old = st.effects[j]
            if row_gate[j] == 0 or not st.resp_incl[j].any():
                st.effects[j] = sprior_chol @ rng.standard_normal(self.q)
                continue
            z = st.resp_incl[j].astype(np.float64)
            xj = self.x[:, j]
            u = xj @ self.resid
            v = u + self.colsq[j] * (z * old)
            prec = inv_s2 * sinv + self.colsq[j] * (sinv * np.outer(z, z))
            l_prec = cholesky_spd(prec, "effect-row precision")
            eta = z * (sinv @ v)
            mean = sla.cho_solve((l_prec, True), eta, check_finite=False)
            draw = mean + sla.solve_triangular(
                l_prec.T, rng.standard_normal(self.q), lower=False, check_finite=False
            )
            dz = z * (draw - old)
            st.effects[j] = draw
            if np.any(dz):
                self.resid -= np.outer(xj, dz)

    def update_indicators(self) -> None:
        """Sweep the indicator hierarchy with coefficients held fixed.

        Groups ascend; within a group the predictor indicator follows the
        group draw and the response indicators follow the predictor draw, so
        every Bernoulli conditions on the freshest gates. Flipped entries
        adjust the residual in place.
        """
        st = self.state
        rng = self.rng
        sinv = self._sig_inv
        lo_group = _logit(st.group_prob)
        for g, mem in enumerate(self.members):
            xg = self.x[:, mem]
            v_mat = (st.pred_incl[mem, None] * st.resp_incl[mem]) * st.effects[mem]
            a_cur = int(st.group_incl[g])
            if np.any(v_mat):
                w_mat = self.grams[g] @ v_mat
                c_mat = xg.T @ self.resid + a_cur * w_mat
                dll = float(np.vdot(v_mat, c_mat @ sinv)) - 0.5 * float(
                    np.vdot(v_mat, w_mat @ sinv)
                )
            else:
                dll = 0.0
            a_new = _bern(rng, lo_group + dll)
            if a_new != a_cur:
                if np.any(v_mat):
                    self.resid += (a_cur - a_new) * (xg @ v_mat)
                st.group_incl[g] = a_new
            a_now = int(st.group_incl[g])
            for j in mem:
                prior_p = st.pred_prob[j] if self.annotation else st.pred_prob[g]
                lo_pred = _logit(float(prior_p))
                delta = (a_now * st.resp_incl[j]) * st.effects[j]
                g_cur = int(st.pred_incl[j])
                xj = self.x[:, j]
                if np.any(delta):
                    u = xj @ self.resid
                    c = u + (g_cur * self.colsq[j]) * delta
                    sd = sinv @ delta
                    dll = float(c @ sd) - 0.5 * self.colsq[j] * float(delta @ sd)
                else:
                    dll = 0.0
                g_new = _bern(rng, lo_pred + dll)
                if g_new != g_cur:
                    if np.any(delta):
                        self.resid += (g_cur - g_new) * np.outer(xj, delta)
                    st.pred_incl[j] = g_new
                self._update_response_row(j, a_now * int(st.pred_incl[j]))

    def _update_response_row(self, j: int, gate: int) -> None:
        """Response-level indicator draws for predictor j under the given gate."""
        st = self.state
        rng = self.rng
        sinv = self._sig_inv
        lo_resp = _logit(float(st.resp_prob[j]))
        if gate == 0:
            for k in range(self.q):
                st.resp_incl[j, k] = _bern(rng, lo_resp)
            return
        xj = self.x[:, j]
        csq = self.colsq[j]
        u = xj @ self.resid
        for k in range(self.q):
            bjk = float(st.effects[j, k])
            w_cur = int(st.resp_incl[j, k])
            if bjk == 0.0:
                st.resp_incl[j, k] = _bern(rng, lo_resp)
                continue
            a_k = float(u @ sinv[:, k]) + w_cur * bjk * csq * sinv[k, k]
            dll = bjk * a_k - 0.5 * bjk * bjk * csq * sinv[k, k]
            w_new = _bern(rng, lo_resp + dll)
            if w_new != w_cur:
                diff = (w_cur - w_new) * bjk
                self.resid[:, k] += diff * xj
                u[k] += diff * csq
                st.resp_incl[j, k] = w_new

    def update_sigma(self) -> None:
        df, scale = sigma_full_conditional(
            self.resid, self.state.effects, self.state.s2, self.iw_df, self.iw_scale
        )
        self.state.sigma = sample_inverse_wishart(self.rng, df, scale)
        self._refresh_sigma_factors()

    def update_s2(self) -> None:
        shape, rate = s2_full_conditional(
            self.state.effects, self._sig_inv, self.priors.s2_shape, self.priors.s2_rate
        )
        self.state.s2 = float(sample_inverse_gamma(self.rng, shape, rate))

    def update_probs(self) -> None:
        """Beta conjugate refresh of the inclusion probabilities.

        The predictor level is skipped when the annotation regression owns
        it (see :meth:`update_annotation`).
        """
        st = self.state
        rng = self.rng
        a, b = self.priors.beta_a, self.priors.beta_b
        big_g = len(self.members)
        s_alpha = int(st.group_incl.sum())
        st.group_prob = float(rng.beta(a + s_alpha, b + big_g - s_alpha))
        if not self.annotation:
            for g, mem in enumerate(self.members):
                cnt = int(st.pred_incl[mem].sum())
                st.pred_prob[g] = rng.beta(a + cnt, b + len(mem) - cnt)
        cnt = st.resp_incl.sum(axis=1)
        st.resp_prob = rng.beta(a + cnt, b + self.q - cnt)

    def update_annotation(self) -> None:
        """Probit regression block: latent scores, then (d0, d1), then probabilities."""
        st = self.state
        rng = self.rng
        ann = self.priors.annotation
        a_vec = self.design.annotations.astype(np.float64)
        eta = st.probit_d0 + st.probit_d1 * a_vec
        t = np.empty(self.p)
        on = st.pred_incl == 1
        if np.any(on):
            t[on] = sample_truncated_normal(rng, eta[on], 1.0, lower=0.0)
        if np.any(~on):
            t[~on] = sample_truncated_normal(rng, eta[~on], 1.0, upper=0.0)
        sum_a = float(a_vec.sum())
        prec = np.array(
            [
                [self.p + 1.0 / ann.d0_var, sum_a],
                [sum_a, float(a_vec @ a_vec) + 1.0 / ann.d1_var],
            ]
        )
        lin = np.array([float(t.sum()), float(a_vec @ t) + ann.mu_d / ann.d1_var])
        l_prec = cholesky_spd(prec, "annotation precision")
        mean = sla.cho_solve((l_prec, True), lin, check_finite=False)
        draw = mean + sla.solve_triangular(
            l_prec.T, rng.standard_normal(2), lower=False, check_finite=False
        )
        st.probit_d0, st.probit_d1 = float(draw[0]), float(draw[1])
        st.probit_latent = t
        st.pred_prob = np.clip(
            normal_cdf(st.probit_d0 + st.probit_d1 * a_vec), 1e-300, 1.0 - 1e-16
        )

    # -- sweep and run ------------------------------------------------------

    def sweep(self) -> None:
        """One full scan in the fixed block order."""
        self.update_effects()
        self.update_indicators()
        if self.config.sample_sigma:
            self.update_sigma()
        if self.config.sample_s2:
            self.update_s2()
        if self.config.sample_probs:
            self.update_probs()
            if self.annotation:
                self.update_annotation()

    def loglik(self) -> float:
        """Matrix-normal log-likelihood of Y at the current state."""
        quad = float(np.vdot(self.resid @ self._sig_inv, self.resid))
        return -0.5 * (self.n * self.q * _LOG2PI + self.n * self._sig_logdet + quad)

    def run(self, stream_id: int = 0) -> PosteriorSamples:
        """Burn, thin, and record the chain configured in ``self.config``."""
        cfg = self.config
        n_keep = cfg.n_retained
        incl = np.empty((n_keep, self.p, self.q), dtype=np.uint8)
        coef = np.empty((n_keep, self.p, self.q))
        ll = np.empty(n_keep)
        active = np.empty(n_keep, dtype=np.int64)
        sig_tr = np.empty((n_keep, self.q, self.q)) if cfg.record_sigma else None
        s2_tr = np.empty(n_keep) if cfg.record_s2 else None
        d_tr = np.empty((n_keep, 2)) if self.annotation else None
        kept = 0
        for it in range(cfg.iterations):
            self._sweep_index = it
            try:
                self.sweep()
            except NumericalBreakdown as exc:
                raise type(exc)(exc.args[0], sweep=it) from exc
            if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
                st = self.state
                row_gate = st.group_incl[self.groups0] * st.pred_incl
                z = (row_gate[:, None] * st.resp_incl).astype(np.uint8)
                incl[kept] = z
                coef[kept] = z * st.effects
                ll[kept] = self.loglik()
                active[kept] = int(z.sum())
                if sig_tr is not None:
                    sig_tr[kept] = st.sigma
                if s2_tr is not None:
                    s2_tr[kept] = st.s2
                if d_tr is not None:
                    d_tr[kept] = (st.probit_d0, st.probit_d1)
                kept += 1
            if cfg.progress_every and (it + 1) % cfg.progress_every == 0:
                logger.info(
                    "sweep %d/%d loglik=%.2f active=%d",
                    it + 1,
                    cfg.iterations,
                    self.loglik(),
                    int(assemble_coefficients(self.design, self.state).astype(bool).sum()),
                )
        meta = SampleMeta(
            n=self.n,
            p=self.p,
            q=self.q,
            iterations=cfg.iterations,
            burn_in=cfg.burn_in,
            thin=cfg.thin,
            seed=cfg.seed,
            stream_id=stream_id,
            annotation=self.annotation,
        )
        return PosteriorSamples(
            incl=incl,
            coef=coef,
            loglik=ll,
            active=active,
            meta=meta,
            sigma=sig_tr,
            s2=s2_tr,
            d_trace=d_tr,
        )


def run_chain(
    design: GroupedDesign,
    responses: ResponseMatrix | np.ndarray,
    priors: PriorConfig,
    config: SamplerConfig,
    stream_id: int = 0,
) -> PosteriorSamples:
    """Run one chain end to end and return its retained draws."""
    rm = responses if isinstance(responses, ResponseMatrix) else ResponseMatrix(responses)
    if config.validate:
        validate_dataset(design, rm)
    stream = RngStream(config.seed, stream_id)
    kernel = GibbsKernel(design, rm, priors, config, stream=stream)
    return kernel.run(stream_id=stream_id)


def run_chains(
    design: GroupedDesign,
    responses: ResponseMatrix | np.ndarray,
    priors: PriorConfig,
    config: SamplerConfig,
) -> list[PosteriorSamples]:
    """Run ``config.chains`` chains sequentially on distinct streams."""
    return [
        run_chain(design, responses, priors, config, stream_id=c) for c in range(config.chains)
    ]
