"""Persistence round-trips: matrices, datasets, chains, reports."""

from __future__ import annotations

import json

import numpy as np
import pytest

from mbivs.errors import ValidationError
from mbivs.gibbs import SamplerConfig, run_chain
from mbivs.inference import build_report
from mbivs.io import (
    load_dataset,
    load_samples,
    prior_config_from_json,
    prior_config_to_json,
    read_matrix_csv,
    read_vector_csv,
    save_dataset,
    save_report,
    save_samples,
    write_manifest,
    write_matrix_csv,
    write_vector_csv,
)
from mbivs.model import AnnotationPriorConfig, GroupedDesign, PriorConfig
from mbivs.rng import substream
from mbivs.simdata import ScenarioSpec, SimulatedData, simulate_scenario

TOY = ScenarioSpec("toy", 40, 6, 2, (1.0,), ((0, 1),), n_test=10)


def _toy_data(seed=0):
    return simulate_scenario(TOY, substream(seed, 0))


def _toy_samples(data, **cfg_kwargs):
    cfg = SamplerConfig(iterations=30, burn_in=10, seed=5, **cfg_kwargs)
    return run_chain(data.design, data.responses, PriorConfig(), cfg)


def test_matrix_round_trip_is_value_stable(tmp_path):
    rng = np.random.default_rng(0)
    mat = rng.normal(size=(7, 3)) * 10.0 ** rng.integers(-8, 8, size=(7, 3))
    path = tmp_path / "m.csv"
    write_matrix_csv(path, mat, "v")
    assert path.read_text().splitlines()[0] == "v1,v2,v3"
    back = read_matrix_csv(path)
    assert np.array_equal(back, mat)  # %.17g preserves doubles exactly
    # rewriting the read-back copy is byte-identical
    path2 = tmp_path / "m2.csv"
    write_matrix_csv(path2, back, "v")
    assert path.read_bytes() == path2.read_bytes()


def test_integer_matrix_uses_integer_format(tmp_path):
    path = tmp_path / "i.csv"
    write_matrix_csv(path, np.array([[1, 2], [3, 4]], dtype=np.int64), "g")
    assert path.read_text().splitlines()[1] == "1,2"


def test_vector_round_trip_handles_length_one(tmp_path):
    path = tmp_path / "v.csv"
    write_vector_csv(path, np.array([3.5]), "w")
    back = read_vector_csv(path)
    assert back.shape == (1,) and back[0] == 3.5
    write_vector_csv(path, np.arange(4), "w")
    assert read_vector_csv(path).tolist() == [0, 1, 2, 3]


def test_prior_config_json_round_trip():
    priors = PriorConfig(
        s2_shape=0.02,
        iw_df=5.0,
        iw_scale=np.diag([1.0, 2.0, 3.0]),
        annotation=AnnotationPriorConfig(mu_d=0.5, d1_var=4.0),
    )
    again = prior_config_from_json(prior_config_to_json(priors))
    assert again.s2_shape == priors.s2_shape
    assert again.iw_df == 5.0
    assert np.array_equal(again.iw_scale, priors.iw_scale)
    assert again.annotation == priors.annotation
    plain = prior_config_from_json(prior_config_to_json(PriorConfig()))
    assert plain == PriorConfig()
    with pytest.raises(ValidationError):
        prior_config_from_json("{not json")


def test_dataset_round_trip(tmp_path):
    data = _toy_data()
    files = save_dataset(tmp_path, data)
    assert set(files) == {
        "x.csv", "y.csv", "groups.csv", "true_coef.csv",
        "causal.csv", "x_test.csv", "y_test.csv", "scenario.json",
    }
    design, responses, extras = load_dataset(tmp_path)
    assert np.array_equal(design.x, data.design.x)
    assert np.array_equal(design.groups, data.design.groups)
    assert design.annotations is None
    assert np.array_equal(responses.y, data.responses.y)
    assert np.array_equal(extras["true_coef"], data.true_coef)
    assert np.array_equal(extras["causal"], data.causal)
    assert np.array_equal(extras["x_test"], data.x_test)
    assert np.array_equal(extras["y_test"], data.y_test)
    assert extras["spec"] == TOY
    # causal.csv itself is 1-based for human readers
    raw = read_vector_csv(tmp_path / "causal.csv").astype(int)
    assert np.array_equal(raw, data.causal + 1)


def test_dataset_annotations_and_override(tmp_path):
    base = _toy_data()
    ann = np.array([1, 0, 0, 1, 0, 0], dtype=np.int64)
    data = SimulatedData(
        design=GroupedDesign(base.design.x, base.design.groups, annotations=ann),
        responses=base.responses,
        true_coef=base.true_coef,
        causal=base.causal,
        sigma_true=base.sigma_true,
        x_test=base.x_test,
        y_test=base.y_test,
        groups_test=base.groups_test,
        spec=base.spec,
    )
    files = save_dataset(tmp_path / "d", data)
    assert "annotations.csv" in files
    design, _, _ = load_dataset(tmp_path / "d")
    assert np.array_equal(design.annotations, ann)
    override = np.array([0, 1, 1, 0, 1, 1], dtype=np.int64)
    write_vector_csv(tmp_path / "other.csv", override, "annotation")
    design, _, _ = load_dataset(tmp_path / "d", annotations_path=tmp_path / "other.csv")
    assert np.array_equal(design.annotations, override)


def test_samples_round_trip_with_all_traces(tmp_path):
    data = _toy_data()
    samples = _toy_samples(data)
    save_samples(tmp_path, samples)
    back = load_samples(tmp_path)
    assert np.array_equal(back.incl, samples.incl)
    assert np.array_equal(back.coef, samples.coef)
    assert np.array_equal(back.loglik, samples.loglik)
    assert np.array_equal(back.active, samples.active)
    assert np.array_equal(back.sigma, samples.sigma)
    assert np.array_equal(back.s2, samples.s2)
    assert back.d_trace is None
    assert back.meta == samples.meta


def test_samples_round_trip_without_optional_traces(tmp_path):
    data = _toy_data()
    samples = _toy_samples(data, record_sigma=False, record_s2=False)
    save_samples(tmp_path, samples)
    assert not (tmp_path / "covariance.csv").exists()
    assert not (tmp_path / "scale.csv").exists()
    back = load_samples(tmp_path)
    assert back.sigma is None and back.s2 is None
    assert np.array_equal(back.incl, samples.incl)


def test_load_samples_rejects_meta_mismatch(tmp_path):
    data = _toy_data()
    save_samples(tmp_path, _toy_samples(data))
    meta = json.loads((tmp_path / "meta.json").read_text())
    meta["p"] = meta["p"] + 1
    (tmp_path / "meta.json").write_text(json.dumps(meta))
    with pytest.raises(ValidationError):
        load_samples(tmp_path)


def test_report_files(tmp_path):
    data = _toy_data()
    samples = _toy_samples(data)
    report = build_report(samples, 0.1, substream(9, 0), n_permutations=100)
    save_report(tmp_path, report, groups=data.design.groups)
    loaded = json.loads((tmp_path / "report.json").read_text())
    assert loaded["alpha"] == 0.1
    pip_lines = (tmp_path / "pip_table.csv").read_text().splitlines()
    assert pip_lines[0] == "predictor,group,pip,selected"
    assert len(pip_lines) == 1 + data.design.n_predictors
    first = pip_lines[1].split(",")
    assert first[0] == "1" and first[1] == str(int(data.design.groups[0]))
    sub_lines = (tmp_path / "subsets.csv").read_text().splitlines()
    assert sub_lines[0] == "predictor,responses,z,subset_pip"
    assert len(sub_lines) == 1 + len(report.best)
    for line in sub_lines[1:]:
        pred, resp, z, spip = line.split(",")
        assert int(pred) >= 1
        assert all(1 <= int(k) <= data.responses.n_responses for k in resp.split("|"))
        assert z == "inf" or z == "-inf" or np.isfinite(float(z))
        assert 0.0 <= float(spip) <= 1.0


def test_manifest_contents(tmp_path):
    write_manifest(tmp_path, "simulate", {"seed": 3}, inputs=["a"], outputs=["b.csv"])
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["tool"] == "mbivs"
    assert m["command"] == "simulate"
    assert m["params"] == {"seed": 3}
    assert m["inputs"] == ["a"] and m["outputs"] == ["b.csv"]
    assert "T" in m["created"]  # ISO timestamp
    import mbivs

    assert m["version"] == mbivs.__version__
