"""Binary snapshots and versioned CSV tables."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import Grid, RealField

MAGIC = b"QGMOCSNP"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<8sII3d")
CSV_VERSION = 1


@dataclass(frozen=True, eq=False)
class Snapshot:
    n: int
    s: float
    kappa: float
    t: float
    values: np.ndarray  # (n, n) float64

    def field(self) -> RealField:
        return RealField(Grid(self.n), self.values)


def save_snapshot(path, theta: RealField, s: float, kappa: float, t: float) -> None:
    n = theta.grid.n
    data = np.ascontiguousarray(theta.values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, SNAPSHOT_VERSION, n, s, kappa, t))
        fh.write(data.tobytes(order="C"))


def load_snapshot(path) -> Snapshot:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated snapshot header")
    magic, version, n, s, kappa, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a snapshot file")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * n * n:
        raise ValueError(f"{path}: expected {n * n} values, found {len(body) // 8}")
    values = np.frombuffer(body, dtype="<f8").reshape(n, n).astype(float)
    return Snapshot(n, s, kappa, t, values)


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, kind: str, columns, rows, meta: dict | None = None) -> None:
    """CSV preceded by ``# qgmoc-<kind> v<version>`` and optional ``# key=value`` lines."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# qgmoc-{kind} v{CSV_VERSION}\n")
        for k, v in (meta or {}).items():
            fh.write(f"# {k}={_cell(v)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def read_csv(path) -> tuple[str, dict, list[str], list[list[str]]]:
    """Returns ``(kind, meta, columns, rows)``."""
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# qgmoc-"):
        raise ValueError(f"{path}: missing version header")
    kind = lines[0][len("# qgmoc-"):].rsplit(" v", 1)[0]
    meta = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        k, _, v = lines[i][1:].strip().partition("=")
        meta[k] = v
        i += 1
    table = list(csv.reader(lines[i:]))
    return kind, meta, table[0] if table else [], table[1:]
