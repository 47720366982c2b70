"""On-disk formats: trajectory / ensemble / curve / bound / allocation CSVs
and JSON reports.

Floats are written with 17 significant digits so every file round-trips
bit-for-bit. All writes go through a temp file in the target directory
followed by an atomic rename.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .spectral import Trajectory

TRAJECTORY_HEADER = "t,re,im"


class FileFormatError(ValueError):
    """Raised for malformed data files."""


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def save_trajectory(path, traj: Trajectory) -> None:
    lines = [TRAJECTORY_HEADER]
    for k, s in enumerate(traj.samples):
        lines.append(f"{fmt(k * traj.dt)},{fmt(s.real)},{fmt(s.imag)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_trajectory(path) -> Trajectory:
    """Read a `t,re,im` CSV; dt is inferred from the time column.

    Requires at least two rows; times must advance by a constant step. The
    trajectory is flagged real_only when every im entry is zero.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != TRAJECTORY_HEADER:
        raise FileFormatError(f"{path}: expected header {TRAJECTORY_HEADER!r}")
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != 3:
            raise FileFormatError(f"{path}:{lineno}: expected 3 columns")
        try:
            rows.append(tuple(float(p) for p in parts))
        except ValueError as exc:
            raise FileFormatError(f"{path}:{lineno}: non-numeric value") from exc
    if len(rows) < 2:
        raise FileFormatError(f"{path}: need at least two samples to infer dt")
    t = np.array([r[0] for r in rows])
    dt = float(t[1] - t[0])
    if dt <= 0 or not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
        raise FileFormatError(f"{path}: time column must advance by a constant step")
    samples = np.array([complex(r[1], r[2]) for r in rows])
    real_only = bool(np.all(samples.imag == 0.0))
    return Trajectory(samples, dt, real_only)


def save_ensemble(path, raw: Trajectory | None, members, gammas) -> None:
    """Raw trajectory (optional) and denoised members, one re/im pair per gamma."""
    cols = []
    header = ["t"]
    if raw is not None:
        header += ["re_raw", "im_raw"]
        cols.append(raw)
    for g, m in zip(gammas, members):
        tag = fmt(g)
        header += [f"re_g{tag}", f"im_g{tag}"]
        cols.append(m)
    if not cols:
        raise FileFormatError("ensemble has no columns")
    n = len(cols[0])
    dt = cols[0].dt
    lines = [",".join(header)]
    for k in range(n):
        vals = [fmt(k * dt)]
        for c in cols:
            vals += [fmt(c.samples[k].real), fmt(c.samples[k].imag)]
        lines.append(",".join(vals))
    atomic_write_text(path, "\n".join(lines) + "\n")


def save_curve(path, curve) -> None:
    lines = ["k,abs_error,converged"]
    for p in curve.points:
        err = fmt(p.abs_error) if p.converged else "inf"
        lines.append(f"{p.k_len},{err},{int(p.converged)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_curve_rows(path) -> list[tuple[int, float, bool]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "k,abs_error,converged":
        raise FileFormatError(f"{path}: expected header 'k,abs_error,converged'")
    out = []
    for ln in lines[1:]:
        k, err, conv = ln.split(",")
        out.append((int(k), float(err), bool(int(conv))))
    return out


def save_bound(path, report) -> None:
    lines = ["tau,k,lhs_mean,lhs_std,rhs"]
    for r in report.rows:
        lines.append(
            f"{fmt(r.tau_r)},{r.k_len},{fmt(r.lhs_mean)},{fmt(r.lhs_std)},{fmt(r.rhs)}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def save_allocation(path, counts, uniform: int) -> None:
    lines = ["k,count,uniform"]
    for k, c in enumerate(np.asarray(counts)):
        lines.append(f"{k},{int(c)},{uniform}")
    atomic_write_text(path, "\n".join(lines) + "\n")
