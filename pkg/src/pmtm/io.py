"""CSV and JSON readers/writers for spikes, tapers and PSDs."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .exceptions import InputError
from .simulate import SpikeEnsemble
from .spectrum import PsdEstimate


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, default=_default) + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON from {path}: {exc}") from exc


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_spikes_csv(path, spikes: SpikeEnsemble) -> None:
    """Header-free CSV, one trial per row, 0/1 entries."""
    np.savetxt(path, spikes.trials, fmt="%d", delimiter=",")


def read_spikes_csv(path) -> SpikeEnsemble:
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read spike CSV {path}: {exc}") from exc
    return SpikeEnsemble(data)


def write_matrix_csv(path, matrix) -> None:
    np.savetxt(path, np.atleast_2d(matrix), fmt="%.17g", delimiter=",")


def write_series_csv(path, values) -> None:
    np.savetxt(path, np.asarray(values)[None, :], fmt="%.17g", delimiter=",")


def write_psd_csv(path, psd: PsdEstimate) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["freq", "power"])
        for f, p in zip(psd.freqs, psd.power):
            w.writerow([repr(float(f)), repr(float(p))])


def read_psd_csv(path, estimator: str = "") -> PsdEstimate:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read PSD CSV {path}: {exc}") from exc
    if not rows or [c.strip() for c in rows[0]] != ["freq", "power"]:
        raise InputError(f"{path}: expected header 'freq,power'")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    except ValueError as exc:
        raise InputError(f"{path}: malformed PSD row: {exc}") from exc
    if data.size == 0:
        raise InputError(f"{path}: no PSD rows")
    return PsdEstimate(data[:, 0], data[:, 1], estimator=estimator)


def write_rows_csv(path, rows: list[dict], columns: list[str] | None = None) -> None:
    columns = columns or (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)
