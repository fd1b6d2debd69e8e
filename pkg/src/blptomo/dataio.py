"""JSON documents for datasets, walk configurations and BLP results.

All documents carry ``format_version`` (currently 1) and a ``kind`` tag.
Complex numbers are written as ``[re, im]`` pairs; floats use Python's
shortest round-trip ``repr`` so reading a written document restores every
value bit for bit.  Labels are 1-based, ``{"kind": "x", "m": 2, "n": 1}``.

Dataset document::

    {"format_version": 1, "kind": "dynamics", "flavor": "prepared",
     "dimension": 2, "index_base": 1, "tolerance": 1e-10,
     "times": [0.0, 1.0, ...],
     "metadata": {"time_unit": "step", ...},
     "series": [{"label": {...}, "matrices": [[[[re, im], ...], ...], ...]}, ...]}
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict
from typing import Any

import numpy as np

from .errors import DatasetFormatError, ValidationError
from .measure import BLPResult, DistanceTrajectory, PairParams
from .tomography import DynamicsDataset, Label
from .walk import QWConfig

FORMAT_VERSION = 1
TIME_UNITS = ("step", "s")


def _compact(value) -> str:
    return json.dumps(value, allow_nan=False, separators=(", ", ": "))


def _dumps(doc: dict) -> bytes:
    # one top-level field per line, one series entry per line
    lines = []
    for key, value in doc.items():
        if key == "series":
            body = ",\n  ".join(_compact(entry) for entry in value)
            text = f"[\n  {body}\n ]" if value else "[]"
        else:
            text = _compact(value)
        lines.append(f" {json.dumps(key)}: {text}")
    return ("{\n" + ",\n".join(lines) + "\n}\n").encode("utf-8")


def _loads(data: bytes | str) -> dict:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DatasetFormatError(f"document is not UTF-8: {exc}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise DatasetFormatError("top-level document must be a JSON object")
    return doc


def _require(doc: dict, key: str, kind: str) -> Any:
    if key not in doc:
        raise DatasetFormatError(f"{kind} document is missing field {key!r}")
    return doc[key]


def _check_header(doc: dict, kind: str) -> None:
    version = _require(doc, "format_version", kind)
    if version != FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported format_version {version!r}; this reader understands {FORMAT_VERSION}")
    if doc.get("kind") != kind:
        raise DatasetFormatError(f"expected a {kind!r} document, got kind {doc.get('kind')!r}")


def _complex_to_json(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=np.complex128)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _complex_from_json(obj, where: str) -> np.ndarray:
    try:
        arr = np.array(obj, dtype=np.float64)
    except (TypeError, ValueError):
        raise DatasetFormatError(f"{where}: entries must be [re, im] number pairs") from None
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise DatasetFormatError(f"{where}: entries must be [re, im] number pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _label_to_json(lab: Label) -> dict:
    out = {"kind": lab.kind, "m": lab.m}
    if lab.n is not None:
        out["n"] = lab.n
    return out


def _label_from_json(obj) -> Label:
    if not isinstance(obj, dict) or "kind" not in obj or "m" not in obj:
        raise DatasetFormatError(f"bad label {obj!r}; expected {{'kind': ..., 'm': ..., 'n': ...}}")
    return Label(obj["kind"], obj["m"], obj.get("n"))


def dataset_to_doc(ds: DynamicsDataset) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "dynamics",
        "flavor": ds.flavor,
        "dimension": ds.dim,
        "index_base": 1,
        "tolerance": ds.tol,
        "times": ds.times.tolist(),
        "metadata": dict(ds.metadata),
        "series": [
            {"label": _label_to_json(lab), "matrices": _complex_to_json(mats)} for lab, mats in ds.series.items()
        ],
    }


def write_dataset(ds: DynamicsDataset) -> bytes:
    return _dumps(dataset_to_doc(ds))


def read_dataset(data: bytes | str, tol: float | None = None) -> DynamicsDataset:
    """Parse and validate a dataset document.

    ``tol`` overrides the tolerance stored in the document.
    """
    doc = _loads(data)
    _check_header(doc, "dynamics")
    if doc.get("index_base", 1) != 1:
        raise DatasetFormatError(f"index_base must be 1, got {doc['index_base']!r}")
    metadata = _require(doc, "metadata", "dynamics")
    if not isinstance(metadata, dict) or metadata.get("time_unit") not in TIME_UNITS:
        raise DatasetFormatError(f"metadata.time_unit must be one of {TIME_UNITS}")
    series = {}
    for i, entry in enumerate(_require(doc, "series", "dynamics")):
        lab = _label_from_json(entry.get("label"))
        if lab in series:
            raise DatasetFormatError(f"duplicate series label {lab}")
        series[lab] = _complex_from_json(entry.get("matrices"), f"series {lab}")
    return DynamicsDataset(
        flavor=_require(doc, "flavor", "dynamics"),
        dim=int(_require(doc, "dimension", "dynamics")),
        times=np.array(_require(doc, "times", "dynamics"), dtype=np.float64),
        series=series,
        metadata=metadata,
        tol=float(doc.get("tolerance", 1e-10)) if tol is None else tol,
    )


def config_to_doc(config: QWConfig) -> dict:
    doc = {"format_version": FORMAT_VERSION, "kind": "qwconfig"}
    for key, value in asdict(config).items():
        doc[key] = list(value) if isinstance(value, tuple) else value
    return doc


def write_config(config: QWConfig) -> bytes:
    return _dumps(config_to_doc(config))


def config_from_doc(doc: dict) -> QWConfig:
    _check_header(doc, "qwconfig")
    known = set(QWConfig.field_names())
    extra = set(doc) - known - {"format_version", "kind"}
    if extra:
        raise DatasetFormatError(f"unknown config fields: {', '.join(sorted(extra))}")
    kwargs = {k: v for k, v in doc.items() if k in known}
    if "env_weights" in kwargs:
        kwargs["env_weights"] = tuple(kwargs["env_weights"])
    return QWConfig(**kwargs)


def read_config(data: bytes | str) -> QWConfig:
    return config_from_doc(_loads(data))


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def result_to_doc(result: BLPResult, config: QWConfig | None = None, metadata: dict | None = None) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "blp_result",
        "value": result.value,
        "pair": {
            "mode": result.pair.mode,
            "raw1": result.pair.raw1.tolist(),
            "raw2": result.pair.raw2.tolist(),
            "rho1": _complex_to_json(result.rho1),
            "rho2": _complex_to_json(result.rho2),
        },
        "trajectory": {"times": result.trajectory.times.tolist(), "values": result.trajectory.values.tolist()},
        "diagnostics": _json_safe(result.diagnostics),
        "seed": _json_safe(result.diagnostics.get("seed")),
    }
    if config is not None:
        doc["config"] = config_to_doc(config)
    if metadata is not None:
        doc["input_metadata"] = dict(metadata)
    return doc


def write_result(
    result: BLPResult, config: QWConfig | None = None, metadata: dict | None = None
) -> tuple[bytes, str]:
    """Result document plus a two-column ``time distance`` table for plotting.

    ``config`` and ``metadata`` (the input dataset's provenance) are echoed
    into the document so a run can be repeated from it.
    """
    return _dumps(result_to_doc(result, config, metadata)), trajectory_table(result.trajectory)


def trajectory_table(traj: DistanceTrajectory) -> str:
    lines = ["# time trace_distance"]
    lines += [f"{t!r} {v!r}" for t, v in zip(traj.times.tolist(), traj.values.tolist())]
    return "\n".join(lines) + "\n"


def read_result(data: bytes | str) -> tuple[BLPResult, QWConfig | None]:
    doc = _loads(data)
    _check_header(doc, "blp_result")
    pair = _require(doc, "pair", "blp_result")
    traj = _require(doc, "trajectory", "blp_result")
    result = BLPResult(
        value=float(_require(doc, "value", "blp_result")),
        pair=PairParams(np.array(pair["raw1"], dtype=np.float64), np.array(pair["raw2"], dtype=np.float64), pair["mode"]),
        rho1=_complex_from_json(pair["rho1"], "pair.rho1"),
        rho2=_complex_from_json(pair["rho2"], "pair.rho2"),
        trajectory=DistanceTrajectory(np.array(traj["times"]), np.array(traj["values"])),
        diagnostics=doc.get("diagnostics", {}),
    )
    if abs(result.value - float(np.clip(np.diff(result.trajectory.values), 0, None).sum())) > 1e-12:
        raise ValidationError("result value is inconsistent with its trajectory")
    config = config_from_doc(doc["config"]) if "config" in doc else None
    return result, config
