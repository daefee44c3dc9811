"""Sampler kernel unit checks: full conditionals, residual bookkeeping, runs."""

from __future__ import annotations

import numpy as np
import pytest

from mbivs.errors import BadGroupIndex, NumericalBreakdown, ValidationError
from mbivs.gibbs import (
    GibbsKernel,
    SamplerConfig,
    draw_state_from_prior,
    init_state,
    run_chain,
    run_chains,
    s2_full_conditional,
    sigma_full_conditional,
    simulate_responses,
)
from mbivs.model import (
    AnnotationPriorConfig,
    GroupedDesign,
    PriorConfig,
    ResponseMatrix,
    assemble_coefficients,
)
from mbivs.rng import RngStream, substream


def _toy(n=40, p=6, q=3, seed=0, annotations=None):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, p))
    groups = np.array([1, 1, 2, 2, 3, 3][:p])
    coef = np.zeros((p, q))
    coef[0] = 1.0
    coef[3, :2] = -0.8
    y = x @ coef + rng.normal(scale=0.7, size=(n, q))
    return GroupedDesign(x, groups, annotations=annotations), ResponseMatrix(y)


def test_sampler_config_validation_and_retained_count():
    with pytest.raises(ValidationError):
        SamplerConfig(iterations=0)
    with pytest.raises(ValidationError):
        SamplerConfig(iterations=10, burn_in=10)
    with pytest.raises(ValidationError):
        SamplerConfig(thin=0)
    assert SamplerConfig(iterations=10, burn_in=4, thin=1).n_retained == 6
    assert SamplerConfig(iterations=10, burn_in=4, thin=2).n_retained == 3
    assert SamplerConfig(iterations=11, burn_in=4, thin=3).n_retained == 3


def test_sigma_full_conditional_with_no_predictors():
    rng = np.random.default_rng(2)
    resid = rng.normal(size=(50, 2))
    effects = np.zeros((0, 2))
    df, scale = sigma_full_conditional(resid, effects, 1.0, 2.0, np.eye(2))
    assert df == 52.0
    assert np.allclose(scale, np.eye(2) + resid.T @ resid)
    assert np.array_equal(scale, scale.T)


def test_s2_full_conditional_worked_example():
    effects = np.array([[1.0, 1.0]])
    shape, rate = s2_full_conditional(effects, np.eye(2), 0.01, 0.01)
    assert shape == pytest.approx(0.01 + 1.0)
    assert rate == pytest.approx(0.01 + 1.0)
    # non-identity precision weighs the quadratic form
    sinv = np.array([[2.0, 0.0], [0.0, 0.5]])
    _, rate2 = s2_full_conditional(effects, sinv, 0.01, 0.01)
    assert rate2 == pytest.approx(0.01 + 0.5 * 2.5)


def test_init_state_shapes_and_defaults():
    design, responses = _toy()
    st = init_state(design, responses, PriorConfig(), substream(0, 0))
    assert np.all(st.group_incl == 1) and np.all(st.pred_incl == 1) and np.all(st.resp_incl == 1)
    assert np.all(st.effects == 0.0)
    assert st.s2 == 1.0 and st.group_prob == 0.5
    np.linalg.cholesky(st.sigma)
    assert st.issues(design, 3) == []


def test_init_state_annotation_mode_sets_per_predictor_probs():
    ann = np.array([1, 0, 1, 0, 0, 0])
    design, responses = _toy(annotations=ann)
    priors = PriorConfig(annotation=AnnotationPriorConfig(mu_d=1.0))
    st = init_state(design, responses, priors, substream(0, 0))
    assert st.pred_prob.shape == (6,)
    assert st.pred_prob[0] > st.pred_prob[1]
    plain_design, plain_responses = _toy()
    with pytest.raises(ValidationError):
        init_state(plain_design, plain_responses, priors, substream(0, 0))


def test_draw_state_from_prior_shapes():
    design, _ = _toy()
    st = draw_state_from_prior(design, 3, PriorConfig(), substream(1, 0))
    assert st.effects.shape == (6, 3)
    assert st.resp_incl.shape == (6, 3)
    assert 0 < st.group_prob < 1
    assert st.s2 > 0
    np.linalg.cholesky(st.sigma)
    y = simulate_responses(design, st, substream(1, 1))
    assert y.shape == (40, 3)


def test_kernel_requires_some_rng_source():
    design, responses = _toy()
    with pytest.raises(ValidationError):
        GibbsKernel(design, responses, PriorConfig(), SamplerConfig())


def test_update_effects_row_mean_matches_shrinkage():
    # one predictor, identity sigma, fixed gates: iid Gaussian conditional with
    # mean (1 - d_n) * beta_ls per response entry
    n, q = 200, 2
    rng = np.random.default_rng(3)
    x = rng.normal(size=(n, 1))
    x /= np.linalg.norm(x, axis=0) / np.sqrt(n)  # ||x||^2 = n
    beta_true = np.array([[0.9, -0.4]])
    y = x @ beta_true + rng.normal(scale=1.0, size=(n, q))
    design = GroupedDesign(x, np.array([1]))
    cfg = SamplerConfig(iterations=10, burn_in=1, sample_sigma=False, sample_s2=False)
    kernel = GibbsKernel(design, ResponseMatrix(y), PriorConfig(), cfg, rng=substream(4, 0))
    kernel.state.sigma = np.eye(q)
    kernel._refresh_sigma_factors()
    s2 = kernel.state.s2
    draws = np.empty((4000, q))
    for t in range(4000):
        kernel.update_effects()
        draws[t] = kernel.state.effects[0]
    beta_ls = (x.T @ y)[0] / n
    d_n = 1.0 / (1.0 + n * s2)
    want = (1.0 - d_n) * beta_ls
    sd = np.sqrt((1.0 - d_n) / n)
    assert np.allclose(draws.mean(axis=0), want, atol=4 * sd / np.sqrt(4000))
    assert abs(draws.std(axis=0)[0] - sd) < 0.1 * sd


def test_update_effects_prior_draw_when_row_gated_off():
    design, responses = _toy()
    cfg = SamplerConfig(iterations=10, burn_in=1)
    kernel = GibbsKernel(design, responses, PriorConfig(), cfg, rng=substream(5, 0))
    kernel.state.pred_incl[2] = 0
    kernel.update_effects()
    # gated-off row leaves the residual consistent despite its fresh prior draw
    direct = responses.y - design.x @ assemble_coefficients(design, kernel.state)
    assert np.max(np.abs(kernel.resid - direct)) < 1e-10
    assert not np.array_equal(kernel.state.effects[2], np.zeros(3))


def test_residual_consistency_after_many_sweeps():
    design, responses = _toy(n=60, p=6, q=3, seed=7)
    cfg = SamplerConfig(iterations=10, burn_in=1)
    kernel = GibbsKernel(design, responses, PriorConfig(), cfg, rng=substream(6, 0))
    for _ in range(100):
        kernel.sweep()
    direct = responses.y - design.x @ assemble_coefficients(design, kernel.state)
    assert np.max(np.abs(kernel.resid - direct)) < 1e-8


def test_chain_posterior_mean_matches_ridge_when_saturated():
    # all indicators forced on, sigma and s2 fixed: stationary mean of the
    # coefficient matrix is the ridge solution per response column
    n, p, q = 150, 3, 2
    rng = np.random.default_rng(8)
    x = rng.normal(size=(n, p))
    coef = np.array([[1.0, 0.5], [-0.7, 0.2], [0.0, -1.1]])
    y = x @ coef + rng.normal(scale=0.8, size=(n, q))
    design = GroupedDesign(x, np.array([1, 2, 3]))
    cfg = SamplerConfig(
        iterations=6000,
        burn_in=1000,
        sample_sigma=False,
        sample_s2=False,
        sample_probs=False,
        record_sigma=False,
        record_s2=False,
    )
    kernel = GibbsKernel(design, ResponseMatrix(y), PriorConfig(), cfg, rng=substream(7, 0))
    kernel.state.sigma = np.eye(q)
    kernel._refresh_sigma_factors()
    kernel.state.group_prob = 1.0
    kernel.state.pred_prob = np.ones(3)
    kernel.state.resp_prob = np.ones(3)
    samples = kernel.run()
    s2 = kernel.state.s2
    want = np.linalg.solve(x.T @ x + np.eye(p) / s2, x.T @ y)
    got = samples.coef.mean(axis=0)
    se = samples.coef.std(axis=0) / np.sqrt(samples.n_draws / 10.0)  # crude ESS discount
    assert np.all(np.abs(got - want) < np.maximum(4 * se, 0.02))


def test_forced_probabilities_pin_indicators():
    design, responses = _toy()
    cfg = SamplerConfig(iterations=30, burn_in=5, sample_probs=False)
    kernel = GibbsKernel(design, responses, PriorConfig(), cfg, rng=substream(9, 0))
    kernel.state.group_prob = 1.0
    kernel.state.pred_prob = np.ones(3)
    kernel.state.resp_prob = np.ones(6)
    samples = kernel.run()
    assert np.all(samples.incl == 1)


def test_run_chain_determinism_and_stream_separation():
    design, responses = _toy()
    cfg = SamplerConfig(iterations=40, burn_in=10, seed=11)
    a = run_chain(design, responses, PriorConfig(), cfg)
    b = run_chain(design, responses, PriorConfig(), cfg)
    c = run_chain(design, responses, PriorConfig(), cfg, stream_id=1)
    assert np.array_equal(a.coef, b.coef)
    assert not np.array_equal(a.coef, c.coef)
    assert a.meta.stream_id == 0 and c.meta.stream_id == 1


def test_run_chains_gives_distinct_streams():
    design, responses = _toy()
    cfg = SamplerConfig(iterations=30, burn_in=10, seed=2, chains=2)
    chains = run_chains(design, responses, PriorConfig(), cfg)
    assert len(chains) == 2
    assert not np.array_equal(chains[0].coef, chains[1].coef)


def test_recorded_draws_respect_gating_and_thin():
    design, responses = _toy()
    cfg = SamplerConfig(iterations=50, burn_in=10, thin=4, seed=3)
    samples = run_chain(design, responses, PriorConfig(), cfg)
    assert samples.n_draws == cfg.n_retained
    assert np.array_equal(samples.coef != 0.0, samples.incl.astype(bool) & (samples.coef != 0.0))
    assert np.all(samples.coef[samples.incl == 0] == 0.0)
    assert np.array_equal(samples.active, samples.incl.reshape(samples.n_draws, -1).sum(axis=1))


def test_run_chain_validates_dataset():
    design, responses = _toy()
    bad = GroupedDesign(design.x, np.array([1, 1, 2, 2, 4, 4]))
    with pytest.raises(BadGroupIndex):
        run_chain(bad, responses, PriorConfig(), SamplerConfig(iterations=5, burn_in=1))


def test_annotation_chain_records_probit_trace():
    ann = np.array([1, 0, 1, 0, 0, 0])
    design, responses = _toy(annotations=ann)
    priors = PriorConfig(annotation=AnnotationPriorConfig(mu_d=0.5))
    cfg = SamplerConfig(iterations=40, burn_in=10, seed=4)
    samples = run_chain(design, responses, priors, cfg)
    assert samples.meta.annotation
    assert samples.d_trace is not None and samples.d_trace.shape == (30, 2)
    assert np.all(np.isfinite(samples.d_trace))


def test_annotation_prior_without_annotations_raises():
    design, responses = _toy()
    priors = PriorConfig(annotation=AnnotationPriorConfig())
    with pytest.raises(ValidationError):
        run_chain(design, responses, priors, SamplerConfig(iterations=5, burn_in=1))


class _BrokenSigmaKernel(GibbsKernel):
    """Corrupts sigma at a fixed sweep to exercise breakdown reporting."""

    def update_sigma(self):
        if self._sweep_index == 3:
            self.state.sigma = np.array([[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
            self._refresh_sigma_factors()
        else:
            super().update_sigma()


def test_numerical_breakdown_carries_sweep_index():
    design, responses = _toy()
    cfg = SamplerConfig(iterations=10, burn_in=1)
    kernel = _BrokenSigmaKernel(design, responses, PriorConfig(), cfg, stream=RngStream(0, 0))
    with pytest.raises(NumericalBreakdown) as exc:
        kernel.run()
    assert exc.value.sweep == 3
    assert "(sweep 3)" in str(exc.value)
