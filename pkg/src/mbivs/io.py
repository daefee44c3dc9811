"""CSV and JSON persistence.

Matrices travel as headered CSV (full float precision, value-stable across
writes), configuration and reports as JSON, and posterior draws as one CSV
per quantity beside a JSON metadata sidecar. Every output directory written
by the CLI also carries a manifest.json recording the command, parameters,
and seed that produced it.
"""

from __future__ import annotations

import dataclasses
import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ValidationError
from .inference import InferenceReport
from .model import (
    AnnotationPriorConfig,
    GroupedDesign,
    PosteriorSamples,
    PriorConfig,
    ResponseMatrix,
    SampleMeta,
)
from .simdata import ScenarioSpec, SimulatedData

__all__ = [
    "write_matrix_csv",
    "read_matrix_csv",
    "write_vector_csv",
    "read_vector_csv",
    "prior_config_to_json",
    "prior_config_from_json",
    "save_dataset",
    "load_dataset",
    "save_samples",
    "load_samples",
    "save_report",
    "write_manifest",
]


def write_matrix_csv(path: Path | str, arr: np.ndarray, prefix: str = "c") -> None:
    """Write a 2-d array as CSV with a ``prefix1..prefixP`` header row."""
    arr = np.atleast_2d(np.asarray(arr))
    header = ",".join(f"{prefix}{j + 1}" for j in range(arr.shape[1]))
    fmt = "%d" if np.issubdtype(arr.dtype, np.integer) else "%.17g"
    np.savetxt(path, arr, fmt=fmt, delimiter=",", header=header, comments="")


def read_matrix_csv(path: Path | str) -> np.ndarray:
    """Read a headered CSV back into a 2-d float array."""
    out = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return out


def write_vector_csv(path: Path | str, vec: np.ndarray, name: str) -> None:
    """Write a 1-d array as a single named CSV column."""
    vec = np.asarray(vec)
    fmt = "%d" if np.issubdtype(vec.dtype, np.integer) else "%.17g"
    np.savetxt(path, vec.reshape(-1, 1), fmt=fmt, delimiter=",", header=name, comments="")


def read_vector_csv(path: Path | str) -> np.ndarray:
    out = np.loadtxt(path, delimiter=",", skiprows=1)
    return np.atleast_1d(out)


# -- configuration ------------------------------------------------------------


def prior_config_to_json(priors: PriorConfig) -> str:
    d = dataclasses.asdict(priors)
    if d["iw_scale"] is not None:
        d["iw_scale"] = np.asarray(d["iw_scale"]).tolist()
    return json.dumps(d, indent=2)


def prior_config_from_json(text: str) -> PriorConfig:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid prior config JSON: {exc}") from exc
    ann = d.pop("annotation", None)
    if d.get("iw_scale") is not None:
        d["iw_scale"] = np.asarray(d["iw_scale"], dtype=np.float64)
    annotation = AnnotationPriorConfig(**ann) if ann is not None else None
    return PriorConfig(annotation=annotation, **d)


# -- datasets -----------------------------------------------------------------


def save_dataset(out_dir: Path | str, data: SimulatedData) -> list[str]:
    """Write one simulated dataset (train, test, truth, spec) to a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(out / "x.csv", data.design.x, "x")
    write_matrix_csv(out / "y.csv", data.responses.y, "y")
    write_vector_csv(out / "groups.csv", data.design.groups, "group")
    write_matrix_csv(out / "true_coef.csv", data.true_coef, "b")
    write_vector_csv(out / "causal.csv", data.causal + 1, "predictor")
    write_matrix_csv(out / "x_test.csv", data.x_test, "x")
    write_matrix_csv(out / "y_test.csv", data.y_test, "y")
    (out / "scenario.json").write_text(data.spec.to_json())
    files = [
        "x.csv",
        "y.csv",
        "groups.csv",
        "true_coef.csv",
        "causal.csv",
        "x_test.csv",
        "y_test.csv",
        "scenario.json",
    ]
    if data.design.annotations is not None:
        write_vector_csv(out / "annotations.csv", data.design.annotations, "annotation")
        files.append("annotations.csv")
    return files


def load_dataset(
    data_dir: Path | str, annotations_path: Path | str | None = None
) -> tuple[GroupedDesign, ResponseMatrix, dict]:
    """Read a dataset directory; optional extras are returned in a dict.

    ``annotations_path`` overrides any annotations.csv inside the directory.
    """
    d = Path(data_dir)
    x = read_matrix_csv(d / "x.csv")
    y = read_matrix_csv(d / "y.csv")
    groups = read_vector_csv(d / "groups.csv").astype(np.int64)
    ann = None
    if annotations_path is not None:
        ann = read_vector_csv(annotations_path).astype(np.int64)
    elif (d / "annotations.csv").exists():
        ann = read_vector_csv(d / "annotations.csv").astype(np.int64)
    extras: dict = {}
    if (d / "true_coef.csv").exists():
        extras["true_coef"] = read_matrix_csv(d / "true_coef.csv")
    if (d / "causal.csv").exists():
        extras["causal"] = read_vector_csv(d / "causal.csv").astype(np.int64) - 1
    if (d / "x_test.csv").exists() and (d / "y_test.csv").exists():
        extras["x_test"] = read_matrix_csv(d / "x_test.csv")
        extras["y_test"] = read_matrix_csv(d / "y_test.csv")
    if (d / "scenario.json").exists():
        extras["spec"] = ScenarioSpec.from_json((d / "scenario.json").read_text())
    return GroupedDesign(x, groups, annotations=ann), ResponseMatrix(y), extras


# -- posterior samples --------------------------------------------------------


def _entry_header(prefix: str, p: int, q: int) -> str:
    return ",".join(f"{prefix}_{j + 1}_{k + 1}" for j in range(p) for k in range(q))


def save_samples(out_dir: Path | str, samples: PosteriorSamples) -> None:
    """Write one chain's draws: one CSV per quantity plus meta.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t, p, q = samples.incl.shape
    draw_col = np.arange(t, dtype=np.int64).reshape(-1, 1)

    incl_flat = samples.incl.reshape(t, p * q)
    np.savetxt(
        out / "incl.csv",
        np.hstack([draw_col, incl_flat]),
        fmt="%d",
        delimiter=",",
        header="draw," + _entry_header("z", p, q),
        comments="",
    )
    coef_flat = samples.coef.reshape(t, p * q)
    np.savetxt(
        out / "coef.csv",
        np.hstack([draw_col.astype(np.float64), coef_flat]),
        fmt=["%d"] + ["%.17g"] * (p * q),
        delimiter=",",
        header="draw," + _entry_header("b", p, q),
        comments="",
    )
    np.savetxt(
        out / "trace.csv",
        np.column_stack([draw_col.astype(np.float64), samples.loglik, samples.active]),
        fmt=["%d", "%.17g", "%d"],
        delimiter=",",
        header="draw,loglik,active",
        comments="",
    )
    if samples.sigma is not None:
        sig_flat = samples.sigma.reshape(t, q * q)
        np.savetxt(
            out / "covariance.csv",
            np.hstack([draw_col.astype(np.float64), sig_flat]),
            fmt=["%d"] + ["%.17g"] * (q * q),
            delimiter=",",
            header="draw," + _entry_header("sigma", q, q),
            comments="",
        )
    if samples.s2 is not None:
        np.savetxt(
            out / "scale.csv",
            np.column_stack([draw_col.astype(np.float64), samples.s2]),
            fmt=["%d", "%.17g"],
            delimiter=",",
            header="draw,s2",
            comments="",
        )
    if samples.d_trace is not None:
        np.savetxt(
            out / "annotation_coef.csv",
            np.hstack([draw_col.astype(np.float64), samples.d_trace]),
            fmt=["%d", "%.17g", "%.17g"],
            delimiter=",",
            header="draw,d0,d1",
            comments="",
        )
    (out / "meta.json").write_text(json.dumps(samples.meta.to_dict(), indent=2))


def load_samples(chain_dir: Path | str) -> PosteriorSamples:
    """Read back one chain directory written by :func:`save_samples`."""
    d = Path(chain_dir)
    meta = SampleMeta.from_dict(json.loads((d / "meta.json").read_text()))
    incl_flat = np.loadtxt(d / "incl.csv", delimiter=",", skiprows=1, ndmin=2)
    t = incl_flat.shape[0]
    pq = incl_flat.shape[1] - 1
    if pq != meta.p * meta.q:
        raise ValidationError(f"incl.csv has {pq} entry columns, meta says {meta.p * meta.q}")
    incl = incl_flat[:, 1:].reshape(t, meta.p, meta.q).astype(np.uint8)
    coef_flat = np.loadtxt(d / "coef.csv", delimiter=",", skiprows=1, ndmin=2)
    coef = coef_flat[:, 1:].reshape(t, meta.p, meta.q)
    trace = np.loadtxt(d / "trace.csv", delimiter=",", skiprows=1, ndmin=2)
    sigma = None
    if (d / "covariance.csv").exists():
        sig_flat = np.loadtxt(d / "covariance.csv", delimiter=",", skiprows=1, ndmin=2)
        sigma = sig_flat[:, 1:].reshape(t, meta.q, meta.q)
    s2 = None
    if (d / "scale.csv").exists():
        s2 = np.loadtxt(d / "scale.csv", delimiter=",", skiprows=1, ndmin=2)[:, 1]
    d_trace = None
    if (d / "annotation_coef.csv").exists():
        d_trace = np.loadtxt(d / "annotation_coef.csv", delimiter=",", skiprows=1, ndmin=2)[:, 1:]
    return PosteriorSamples(
        incl=incl,
        coef=coef,
        loglik=trace[:, 1],
        active=trace[:, 2].astype(np.int64),
        meta=meta,
        sigma=sigma,
        s2=s2,
        d_trace=d_trace,
    )


# -- reports and manifests ----------------------------------------------------


def save_report(out_dir: Path | str, report: InferenceReport, groups: np.ndarray | None = None) -> None:
    """Write report.json plus flat tables for plotting.

    pip_table.csv carries one row per predictor (position, group, PIP,
    selected flag); subsets.csv one row per selected predictor with its best
    response subset as pipe-joined 1-based indices.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2))
    p = report.predictor_pips.shape[0]
    sel = np.zeros(p, dtype=np.int64)
    sel[report.selected] = 1
    grp = groups if groups is not None else np.zeros(p, dtype=np.int64)
    lines = ["predictor,group,pip,selected"]
    for j in range(p):
        lines.append(f"{j + 1},{int(grp[j])},{report.predictor_pips[j]:.17g},{sel[j]}")
    (out / "pip_table.csv").write_text("\n".join(lines) + "\n")
    lines = ["predictor,responses,z,subset_pip"]
    for j in sorted(report.best):
        resp = "|".join(str(k + 1) for k in report.best[j])
        z = report.best_z[j]
        z_txt = "inf" if np.isinf(z) and z > 0 else ("-inf" if np.isinf(z) else f"{z:.17g}")
        lines.append(f"{j + 1},{resp},{z_txt},{report.best_pip[j]:.17g}")
    (out / "subsets.csv").write_text("\n".join(lines) + "\n")


def write_manifest(
    out_dir: Path | str,
    command: str,
    params: dict,
    inputs: list[str] | None = None,
    outputs: list[str] | None = None,
) -> None:
    """Record how a directory's contents were produced."""
    manifest = {
        "tool": "mbivs",
        "version": __version__,
        "command": command,
        "params": params,
        "inputs": inputs or [],
        "outputs": outputs or [],
        "created": datetime.now(timezone.utc).isoformat(),
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
