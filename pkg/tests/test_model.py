"""Data type contracts: validation, gating, pooling."""

from __future__ import annotations

import numpy as np
import pytest

from mbivs.errors import (
    BadAnnotation,
    BadGroupIndex,
    DatasetValidationError,
    DimensionMismatch,
    NonFiniteValue,
    ValidationError,
)
from mbivs.model import (
    AnnotationPriorConfig,
    ChainState,
    GroupedDesign,
    PosteriorSamples,
    PriorConfig,
    ResponseMatrix,
    SampleMeta,
    assemble_coefficients,
    concat_samples,
    validate_dataset,
)


def _design(n=6, p=4, groups=(1, 1, 2, 2), seed=0, annotations=None):
    rng = np.random.default_rng(seed)
    return GroupedDesign(rng.normal(size=(n, p)), np.array(groups), annotations=annotations)


def _state(design, q=3, seed=1):
    rng = np.random.default_rng(seed)
    p, big_g = design.n_predictors, design.n_groups
    return ChainState(
        effects=rng.normal(size=(p, q)),
        group_incl=np.array([1] * big_g, dtype=np.int8),
        pred_incl=np.ones(p, dtype=np.int8),
        resp_incl=np.ones((p, q), dtype=np.int8),
        sigma=np.eye(q),
        s2=1.0,
        group_prob=0.5,
        pred_prob=np.full(big_g, 0.5),
        resp_prob=np.full(p, 0.5),
    )


def test_design_accessors_and_members():
    d = _design()
    assert d.n_samples == 6 and d.n_predictors == 4 and d.n_groups == 2
    members = d.group_members()
    assert [m.tolist() for m in members] == [[0, 1], [2, 3]]


def test_design_flags_noncontiguous_groups():
    d = _design(groups=(1, 1, 3, 3))
    assert any(isinstance(e, BadGroupIndex) for e in d.issues())
    d = _design(groups=(0, 0, 1, 1))
    assert any(isinstance(e, BadGroupIndex) for e in d.issues())


def test_design_flags_nonfinite_and_bad_annotations():
    x = np.ones((4, 3))
    x[2, 1] = np.nan
    d = GroupedDesign(x, np.array([1, 1, 2]), annotations=np.array([0, 2, 1]))
    issues = d.issues()
    assert any(isinstance(e, NonFiniteValue) for e in issues)
    assert any(isinstance(e, BadAnnotation) for e in issues)


def test_response_matrix_needs_two_columns():
    issues = ResponseMatrix(np.ones((5, 1))).issues()
    assert any(isinstance(e, DimensionMismatch) for e in issues)
    assert ResponseMatrix(np.ones((5, 2))).issues() == []


def test_validate_dataset_single_issue_keeps_specific_type():
    d = _design(groups=(1, 1, 3, 3))
    y = ResponseMatrix(np.zeros((6, 2)))
    with pytest.raises(BadGroupIndex):
        validate_dataset(d, y)


def test_validate_dataset_aggregates_multiple_issues():
    d = _design(groups=(1, 1, 3, 3))
    y = ResponseMatrix(np.zeros((5, 1)))  # wrong rows and too few columns
    with pytest.raises(DatasetValidationError) as exc:
        validate_dataset(d, y)
    assert len(exc.value.issues) == 3
    assert "3 dataset violations" in str(exc.value)


def test_assemble_coefficients_matches_explicit_gating():
    d = _design()
    st = _state(d)
    st.group_incl[1] = 0
    st.pred_incl[0] = 0
    st.resp_incl[1, 2] = 0
    got = assemble_coefficients(d, st)
    want = np.zeros_like(st.effects)
    for j in range(d.n_predictors):
        for k in range(3):
            g = d.groups[j] - 1
            gate = st.group_incl[g] * st.pred_incl[j] * st.resp_incl[j, k]
            want[j, k] = gate * st.effects[j, k]
    assert np.array_equal(got, want)
    assert np.all(got[2:] == 0)  # group 2 off kills both rows
    assert np.all(got[0] == 0)


def test_chain_state_issues_catch_violations():
    d = _design()
    st = _state(d)
    assert st.issues(d, 3) == []
    st.s2 = -1.0
    st.resp_incl[0, 0] = 2
    st.sigma = np.array([[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    msgs = [str(e) for e in st.issues(d, 3)]
    assert any("s2" in m for m in msgs)
    assert any("binary" in m for m in msgs)
    assert any("positive definite" in m for m in msgs)


def test_prior_config_validation_and_iw_resolution():
    with pytest.raises(ValidationError):
        PriorConfig(beta_a=0.0)
    with pytest.raises(ValidationError):
        PriorConfig(s2_rate=-1.0)
    with pytest.raises(ValidationError):
        AnnotationPriorConfig(d0_var=0.0)
    df, scale = PriorConfig().resolved_iw(4)
    assert df == 4.0 and np.array_equal(scale, np.eye(4))
    with pytest.raises(ValidationError):
        PriorConfig(iw_df=2.0).resolved_iw(4)
    with pytest.raises(ValidationError):
        PriorConfig(iw_scale=np.eye(3)).resolved_iw(4)


def test_sample_meta_round_trip():
    meta = SampleMeta(n=10, p=3, q=2, iterations=50, burn_in=10, thin=2, seed=7, stream_id=1)
    assert SampleMeta.from_dict(meta.to_dict()) == meta


def _samples(t, p, q, seed, with_sigma=True):
    rng = np.random.default_rng(seed)
    incl = (rng.random((t, p, q)) < 0.5).astype(np.uint8)
    coef = incl * rng.normal(size=(t, p, q))
    return PosteriorSamples(
        incl=incl,
        coef=coef,
        loglik=rng.normal(size=t),
        active=incl.reshape(t, -1).sum(axis=1),
        meta=SampleMeta(n=10, p=p, q=q, iterations=t, burn_in=0, thin=1, seed=seed, stream_id=0),
        sigma=np.stack([np.eye(q)] * t) if with_sigma else None,
        s2=np.ones(t),
    )


def test_concat_samples_pools_and_marks_stream():
    a = _samples(5, 3, 2, seed=0)
    b = _samples(7, 3, 2, seed=1)
    pooled = concat_samples([a, b])
    assert pooled.n_draws == 12
    assert np.array_equal(pooled.incl[:5], a.incl)
    assert np.array_equal(pooled.coef[5:], b.coef)
    assert pooled.meta.stream_id == -1
    assert concat_samples([a]) is a
    with pytest.raises(ValidationError):
        concat_samples([])


def test_concat_samples_drops_traces_missing_from_any_chain():
    a = _samples(5, 3, 2, seed=0, with_sigma=True)
    b = _samples(7, 3, 2, seed=1, with_sigma=False)
    pooled = concat_samples([a, b])
    assert pooled.sigma is None
    assert pooled.s2 is not None
