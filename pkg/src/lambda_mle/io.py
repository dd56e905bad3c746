"""CSV datasets, JSON sidecars, fit reports and trace files.

Floats are written with ``repr``, the shortest string that round-trips a
double exactly, so reading a file back reproduces the in-memory values.
Every JSON document carries ``schema_version``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .dirichlet import dp_p_from_eta
from .errors import ParseError
from .family import FamilyModel
from .solver import FitResult, IterationRecord, SolverTrace

SCHEMA_VERSION = 1

__all__ = [
    "SCHEMA_VERSION",
    "sidecar_path",
    "write_samples",
    "read_samples",
    "write_json",
    "read_json",
    "trace_to_json",
    "trace_from_json",
    "fit_to_json",
]


def _num(x):
    x = float(x)
    return None if math.isnan(x) else x


def _vec(a):
    return [float(v) for v in np.asarray(a, dtype=float).reshape(-1)]


def sidecar_path(data_path) -> Path:
    return Path(data_path).with_suffix(".json")


def write_samples(path, family: str, samples: np.ndarray, meta: dict) -> None:
    """Write samples as CSV plus a JSON sidecar holding ``meta``."""
    path = Path(path)
    samples = np.asarray(samples, dtype=float)
    if family == "qgaussian":
        header, rows = ["x"], samples.reshape(-1, 1)
    else:
        header = [f"q{j}" for j in range(samples.shape[1])]
        rows = samples
    with path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    sidecar = {"schema_version": SCHEMA_VERSION, "artifact_version": __version__, **meta}
    write_json(sidecar_path(path), sidecar)


def read_samples(path, model: FamilyModel) -> np.ndarray:
    """Parse a sample CSV and check every row against the model's support.

    Raises
    ------
    ParseError
        Naming the 1-based data row that fails to parse or lies outside the
        support.
    """
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise ParseError(f"cannot open {path}: {exc}") from exc
    rows = []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(f"{path} is empty")
        width = len(header)
        for i, raw in enumerate(reader, start=1):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != width:
                raise ParseError(f"expected {width} columns, found {len(raw)}", row=i)
            try:
                vals = [float(c) for c in raw]
            except ValueError as exc:
                raise ParseError(str(exc), row=i) from exc
            x = vals[0] if model.state_space == "real_line" else vals
            if model.state_space == "simplex" and len(vals) != model.dim + 1:
                raise ParseError(f"expected {model.dim + 1} components, found {len(vals)}", row=i)
            if not model.in_support(x):
                raise ParseError(f"point {vals} is outside the {model.name} support", row=i)
            rows.append(x)
    if not rows:
        raise ParseError(f"{path} has no data rows")
    return np.asarray(rows, dtype=float)


def write_json(path, payload) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read JSON from {path}: {exc}") from exc


def trace_to_json(trace: SolverTrace, model: FamilyModel, init: Optional[dict] = None) -> dict:
    records = []
    for r in trace.records:
        rec = {
            "k": r.k,
            "eta": _vec(r.eta),
            "theta": _vec(r.theta),
            "loglik": _num(r.loglik),
            "loglik_increase": _num(r.loglik_increase),
            "kappa_ratio_excess": _num(r.kappa_ratio_excess),
            "step_norm": _num(r.step_norm),
        }
        if model.name == "dirichlet":
            rec["p"] = _vec(dp_p_from_eta(r.eta))
        records.append(rec)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "trace",
        "model": model.describe(),
        "init": init,
        "termination": trace.termination,
        "records": records,
    }


def trace_from_json(doc) -> SolverTrace:
    if not isinstance(doc, dict) or "records" not in doc:
        raise ParseError("trace document has no 'records'")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {doc.get('schema_version')!r}")
    records = []
    nan = float("nan")
    for i, rec in enumerate(doc["records"]):
        try:
            records.append(
                IterationRecord(
                    k=int(rec["k"]),
                    eta=np.asarray(rec["eta"], dtype=float),
                    theta=np.asarray(rec["theta"], dtype=float),
                    loglik=float(rec["loglik"]),
                    step_norm=float(rec["step_norm"]),
                    loglik_increase=nan if rec.get("loglik_increase") is None else float(rec["loglik_increase"]),
                    kappa_ratio_excess=nan if rec.get("kappa_ratio_excess") is None else float(rec["kappa_ratio_excess"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad trace record: {exc}", row=i) from exc
    return SolverTrace(records=records, termination=doc.get("termination"))


def fit_to_json(result: FitResult, model: FamilyModel) -> dict:
    out = {
        "theta_hat": _vec(result.theta_hat),
        "eta_hat": _vec(result.eta_hat),
        "loglik": _num(result.loglik),
        "iterations": result.iterations,
        "residual": _num(result.first_order_residual),
        "termination": result.termination,
    }
    if model.name == "dirichlet":
        out["p_hat"] = _vec(dp_p_from_eta(np.asarray(result.eta_hat)))
    return out

