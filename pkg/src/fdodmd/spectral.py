"""Spectra, affine energy rescaling, and noiseless signal generation.

A spectrum is a list of (eigenvalue, overlap) pairs. Every signal in this
package is a convex combination of complex exponentials

    s(t_k) = sum_n p_n * exp(-i * E_n * k * dt),

optionally damped by a global depolarizing factor exp(-theta * k * dt).
Eigenvalues are kept in "scaled" units: the affine map produced by
``rescale_spectrum`` places them inside [-pi/(4 dt), +pi/(4 dt)] so that
eigenvalue phases of the one-step propagator are far from the branch cut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_OVERLAP_SUM_TOL = 1e-12
_LOAD_RENORM_TOL = 1e-6


class SpectrumError(ValueError):
    """Raised for invalid spectra or malformed spectrum files."""


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (nondecreasing, scaled units) with squared overlaps p_n.

    Overlaps must be nonnegative and sum to 1 within 1e-12; both lists must
    have equal length.
    """

    eigenvalues: np.ndarray
    overlaps: np.ndarray

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        ov = np.asarray(self.overlaps, dtype=float)
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "overlaps", ov)
        if ev.ndim != 1 or ov.ndim != 1 or ev.size != ov.size:
            raise SpectrumError("eigenvalues and overlaps must be 1-D and of equal length")
        if ev.size == 0:
            raise SpectrumError("spectrum must contain at least one level")
        if not (np.all(np.isfinite(ev)) and np.all(np.isfinite(ov))):
            raise SpectrumError("spectrum values must be finite")
        if np.any(np.diff(ev) < 0):
            raise SpectrumError("eigenvalues must be nondecreasing")
        if np.any(ov < 0):
            raise SpectrumError("overlaps must be nonnegative")
        if abs(math.fsum(ov.tolist()) - 1.0) > _OVERLAP_SUM_TOL:
            raise SpectrumError("overlaps must sum to 1 within 1e-12")

    @property
    def n_levels(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])


@dataclass(frozen=True)
class RescaleParams:
    """Affine map E = beta0 + beta1 * E_raw and its inverse.

    beta1 > 0 always; alpha is the spectral padding that widened the raw
    extremes before the map was fit, dt the sampling step the map targets.
    """

    beta0: float
    beta1: float
    alpha: float
    dt: float

    def __post_init__(self):
        if not (self.beta1 > 0):
            raise SpectrumError("beta1 must be positive")
        if not (self.dt > 0):
            raise SpectrumError("dt must be positive")

    def apply(self, e_raw: float) -> float:
        return self.beta0 + self.beta1 * float(e_raw)


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled complex time series.

    ``samples[k]`` is the value at t_k = k * dt. When ``real_only`` is set,
    every imaginary part is exactly zero (the real-part-measurement mode used
    throughout the experiments; complex mode is kept for oracle work).
    """

    samples: np.ndarray
    dt: float
    real_only: bool = False

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=complex)
        object.__setattr__(self, "samples", arr)
        if arr.ndim != 1 or arr.size < 1:
            raise SpectrumError("trajectory needs at least one sample")
        if not (self.dt > 0):
            raise SpectrumError("dt must be positive")
        if self.real_only and np.any(arr.imag != 0.0):
            raise SpectrumError("real_only trajectory has nonzero imaginary parts")

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.dt

    def head(self, n_samples: int) -> "Trajectory":
        """First ``n_samples`` samples as a new trajectory."""
        if n_samples > self.samples.size:
            raise SpectrumError(
                f"trajectory has {self.samples.size} samples, {n_samples} requested"
            )
        return Trajectory(self.samples[:n_samples].copy(), self.dt, self.real_only)


def rescale_spectrum(
    raw_eigenvalues, dt: float, alpha: float
) -> tuple[RescaleParams, np.ndarray]:
    """Fit the affine map that sends raw eigenvalues into [-pi/(4 dt), pi/(4 dt)].

    With padded extremes lo = min - alpha and hi = max + alpha, the map is
    beta0 = -pi * mu / (2 dt * span), beta1 = pi / (2 dt * span), where
    mu = (hi + lo) / 2 and span = hi - lo. The padded midpoint maps to zero,
    so the scaled extremes are exact negatives of each other, and the scaled
    spectrum satisfies (E_last + E_1 - 2 E_0) * dt < 2 pi.

    Returns the parameters and the scaled eigenvalue array (input order).
    """
    raw = np.asarray(raw_eigenvalues, dtype=float)
    if raw.size == 0:
        raise SpectrumError("raw eigenvalue list is empty")
    if not np.all(np.isfinite(raw)):
        raise SpectrumError("raw eigenvalues must be finite")
    if not (alpha > 0):
        raise SpectrumError("alpha must be positive")
    if not (dt > 0):
        raise SpectrumError("dt must be positive")
    lo = float(raw.min()) - alpha
    hi = float(raw.max()) + alpha
    span = hi - lo
    if span <= 0:
        raise SpectrumError("degenerate spectrum: padded extremes coincide")
    mu = 0.5 * (hi + lo)
    beta1 = math.pi / (2.0 * dt * span)
    beta0 = -math.pi * mu / (2.0 * dt * span)
    params = RescaleParams(beta0=beta0, beta1=beta1, alpha=alpha, dt=dt)
    return params, beta0 + beta1 * raw


def unscale_energy(e: float, params: RescaleParams) -> float:
    """Invert the affine map: (e - beta0) / beta1."""
    return (float(e) - params.beta0) / params.beta1


def make_reference_overlaps(n_levels: int, p0: float) -> np.ndarray:
    """Reference-state overlaps {p0, (1-p0)/(N-1), ...}; always sums to 1."""
    if n_levels < 1:
        raise SpectrumError("n_levels must be >= 1")
    if not (0.0 < p0 <= 1.0):
        raise SpectrumError("p0 must lie in (0, 1]")
    if n_levels == 1:
        if p0 != 1.0:
            raise SpectrumError("single-level spectrum requires p0 = 1")
        return np.array([1.0])
    rest = (1.0 - p0) / (n_levels - 1)
    return np.concatenate([[p0], np.full(n_levels - 1, rest)])


def _signal_matrix(spec: Spectrum, dt: float, n_samples: int) -> np.ndarray:
    if n_samples < 1:
        raise SpectrumError("n_samples must be >= 1")
    k = np.arange(n_samples)
    # phases[k, n] = exp(-i E_n k dt); samples = phases @ p
    phases = np.exp(-1j * np.outer(k * dt, spec.eigenvalues))
    return phases @ spec.overlaps


def exact_signal(
    spec: Spectrum, dt: float, n_samples: int, real_only: bool = False
) -> Trajectory:
    """Noiseless signal s(t_k) = sum_n p_n exp(-i E_n k dt); s(0) = 1.

    With ``real_only`` the elementwise real part is taken and the flag set.
    """
    samples = _signal_matrix(spec, dt, n_samples)
    if real_only:
        samples = samples.real.astype(complex)
    return Trajectory(samples, dt, real_only)


def depolarized_signal(
    spec: Spectrum, theta: float, dt: float, n_samples: int, real_only: bool = False
) -> Trajectory:
    """Exponentially damped signal exp(-theta k dt) * s(t_k); theta >= 0."""
    if theta < 0:
        raise SpectrumError("theta must be nonnegative")
    samples = _signal_matrix(spec, dt, n_samples)
    damping = np.exp(-theta * np.arange(n_samples) * dt)
    samples = samples * damping
    if real_only:
        samples = samples.real.astype(complex)
    return Trajectory(samples, dt, real_only)


def load_spectrum(path) -> Spectrum:
    """Parse a spectrum file: one `eigenvalue,overlap` row per level.

    `#` starts a comment, blank lines are skipped, rows may come in any order
    (sorted on load). Overlaps are renormalized only when their sum is within
    1e-6 of 1; anything further off is rejected.
    """
    text = Path(path).read_text(encoding="utf-8")
    rows: list[tuple[float, float]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split(",")
        if len(parts) != 2:
            raise SpectrumError(f"{path}:{lineno}: expected `eigenvalue,overlap`, got {line!r}")
        try:
            e, p = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise SpectrumError(f"{path}:{lineno}: non-numeric row {line!r}") from exc
        if not (math.isfinite(e) and math.isfinite(p)):
            raise SpectrumError(f"{path}:{lineno}: non-finite value")
        if p < 0:
            raise SpectrumError(f"{path}:{lineno}: negative overlap {p}")
        rows.append((e, p))
    if not rows:
        raise SpectrumError(f"{path}: no spectrum rows found")
    rows.sort(key=lambda r: r[0])
    ev = np.array([r[0] for r in rows])
    ov = np.array([r[1] for r in rows])
    total = math.fsum(ov.tolist())
    if abs(total - 1.0) > _LOAD_RENORM_TOL:
        raise SpectrumError(f"{path}: overlaps sum to {total}, outside the 1e-6 tolerance")
    return Spectrum(ev, ov / total)
