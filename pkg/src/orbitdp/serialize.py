"""JSON file formats and deterministic serialization.

Matrix files:   {"dim": d, "re": [[...]], "im": [[...]]}
Dataset files:  {"dim": d, "points": [{"re": [...], "im": [...]}, ...]}

All writers emit keys in a fixed order and floats via repr, so identical
inputs and seeds produce byte-identical artifacts.
"""

from __future__ import annotations

import json

import numpy as np

from .geometry import BoundReport, PackingCertificate
from .linalg import Dataset, HermitianMatrix, OrbitPoint, ValidationError
from .mechanisms import MechanismTranscript
from .sampler import ChainDiagnostics


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def matrix_to_dict(m: HermitianMatrix) -> dict:
    return {
        "dim": m.dim,
        "re": m.entries.real.tolist(),
        "im": m.entries.imag.tolist(),
    }


def matrix_from_dict(data: dict) -> HermitianMatrix:
    try:
        dim = int(data["dim"])
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix file: {exc}") from exc
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise ValidationError(f"matrix blocks must be {dim}x{dim}")
    return HermitianMatrix(re + 1j * im)


def dataset_to_dict(ds: Dataset) -> dict:
    return {
        "dim": ds.dim,
        "points": [
            {"re": p.real.tolist(), "im": p.imag.tolist()} for p in ds.points
        ],
    }


def dataset_from_dict(data: dict) -> Dataset:
    try:
        dim = int(data["dim"])
        pts = [
            np.asarray(p["re"], dtype=float) + 1j * np.asarray(p["im"], dtype=float)
            for p in data["points"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed dataset file: {exc}") from exc
    if any(p.shape != (dim,) for p in pts):
        raise ValidationError(f"all points must have dimension {dim}")
    return Dataset(np.stack(pts) if pts else np.zeros((0, dim), dtype=complex))


def load_matrix_or_dataset(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if "points" in data:
        return dataset_from_dict(data)
    return matrix_from_dict(data)


def orbit_point_to_dict(point: OrbitPoint) -> dict:
    return {
        "dim": point.dim,
        "rank_k": point.spectrum.rank_k,
        "spectrum": point.spectrum.values.tolist(),
        "u_re": point.u.real.tolist(),
        "u_im": point.u.imag.tolist(),
    }


def diagnostics_to_dict(diag: ChainDiagnostics) -> dict:
    return {
        "acceptance_rate": diag.acceptance_rate,
        "split_rhat": diag.split_rhat,
        "warnings": list(diag.warnings),
        "utility_trace": diag.trace_for_serialization(),
    }


def transcript_to_dict(tr: MechanismTranscript) -> dict:
    return {
        "seed": tr.seed,
        "budget": {"epsilon": tr.budget.epsilon, "split": list(tr.budget.split)},
        "noisy_eigenvalues": None if tr.noisy_eigenvalues is None
        else [float(x) for x in tr.noisy_eigenvalues],
        "output": orbit_point_to_dict(tr.output),
        "utility": tr.utility,
        "frobenius_error": tr.frobenius_error,
        "flags": list(tr.flags),
        "diagnostics": None if tr.diagnostics is None else diagnostics_to_dict(tr.diagnostics),
    }


def certificate_to_dict(cert: PackingCertificate) -> dict:
    return {
        "target_separation": cert.target_separation,
        "radius": None if cert.radius == float("inf") else cert.radius,
        "min_pairwise_dist": None if cert.min_pairwise_dist == float("inf")
        else cert.min_pairwise_dist,
        "count": len(cert.points),
        "center": orbit_point_to_dict(cert.center),
        "points": [orbit_point_to_dict(p) for p in cert.points],
    }


def bound_report_to_dict(report: BoundReport) -> dict:
    return report.to_dict()
