"""DFT utilities, hard-threshold denoising, and zero-padded peak estimation.

Convention (matching numpy): forward x_hat[k] = sum_j x[j] exp(-2 pi i j k / K),
inverse carries the 1/K factor, so Plancherel reads ||x||^2 = ||x_hat||^2 / K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import Trajectory

# Reconstruction of a real-only trajectory must come back real to this level.
_REAL_RESIDUE_TOL = 1e-10


class FourierError(ValueError):
    """Raised for invalid threshold rules or denoising failures."""


def dft(x) -> np.ndarray:
    """Unnormalized forward DFT."""
    arr = np.asarray(x, dtype=complex)
    if arr.ndim != 1 or arr.size == 0:
        raise FourierError("dft expects a nonempty 1-D array")
    return np.fft.fft(arr)


def idft(xhat) -> np.ndarray:
    """Inverse DFT with the 1/K normalization."""
    arr = np.asarray(xhat, dtype=complex)
    if arr.ndim != 1 or arr.size == 0:
        raise FourierError("idft expects a nonempty 1-D array")
    return np.fft.ifft(arr)


@dataclass(frozen=True)
class SpectrumDFT:
    """DFT of a trajectory together with its bin frequencies 2 pi m / (L dt)."""

    coefficients: np.ndarray
    bin_frequencies: np.ndarray
    length: int
    dt: float

    @classmethod
    def from_trajectory(cls, traj: Trajectory) -> "SpectrumDFT":
        coeffs = dft(traj.samples)
        n = len(traj)
        bins = 2.0 * math.pi * np.arange(n) / (n * traj.dt)
        return cls(coefficients=coeffs, bin_frequencies=bins, length=n, dt=traj.dt)


@dataclass(frozen=True)
class ThresholdRule:
    """Hard-threshold spec: exactly one of ``gamma`` (relative) or ``tau`` (absolute).

    gamma scales the median of all coefficient magnitudes (DC included); tau
    is used as-is. Bins with |x_hat| >= threshold are kept, the rest zeroed.
    """

    gamma: float | None = None
    tau: float | None = None

    def __post_init__(self):
        if (self.gamma is None) == (self.tau is None):
            raise FourierError("set exactly one of gamma or tau")
        if self.gamma is not None and not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise FourierError("gamma must be finite and > 0")
        if self.tau is not None and not (self.tau >= 0 and math.isfinite(self.tau)):
            raise FourierError("tau must be finite and >= 0")

    def resolve(self, magnitudes: np.ndarray) -> float:
        if self.tau is not None:
            return float(self.tau)
        # even length: median is the mean of the two central order statistics
        return float(self.gamma) * float(np.median(magnitudes))


def _test_magnitudes(coeffs: np.ndarray, real_only: bool) -> np.ndarray:
    mags = np.abs(coeffs)
    if not real_only:
        return mags
    # Bins m and N-m of a real input carry one real mode between them; their
    # magnitudes agree only up to rounding, so a threshold landing inside
    # that gap (the median does exactly this at gamma = 1) would keep one
    # partner and zero the other, leaving a complex reconstruction. Average
    # the pair so both sides of the comparison move together.
    return 0.5 * (mags + mags[(-np.arange(mags.size)) % mags.size])


def _apply_threshold(coeffs: np.ndarray, tau_r: float, real_only: bool) -> np.ndarray:
    keep = _test_magnitudes(coeffs, real_only) >= tau_r
    return coeffs * keep


def _reconstruct(coeffs: np.ndarray, dt: float, real_only: bool) -> Trajectory:
    recon = idft(coeffs)
    if real_only:
        residue = float(np.max(np.abs(recon.imag)))
        if residue > _REAL_RESIDUE_TOL:
            raise FourierError(
                f"imaginary residue {residue:.3e} after denoising a real trajectory"
            )
        recon = recon.real.astype(complex)
    return Trajectory(recon, dt, real_only)


def threshold_denoise(traj: Trajectory, rule: ThresholdRule) -> Trajectory:
    """Hard-threshold the trajectory's DFT and transform back.

    Thresholding a conjugate-symmetric spectrum keeps the symmetry (equal
    magnitudes survive or vanish together), so real input reconstructs real
    up to rounding; the residue is checked and zeroed.
    """
    coeffs = dft(traj.samples)
    tau_r = rule.resolve(np.abs(coeffs))
    return _reconstruct(_apply_threshold(coeffs, tau_r, traj.real_only), traj.dt, traj.real_only)


def denoise_ensemble(traj: Trajectory, gammas) -> list[Trajectory]:
    """One denoised trajectory per gamma, all from a single DFT of the input."""
    gam = [float(g) for g in gammas]
    if not gam:
        raise FourierError("gammas must be nonempty")
    if any(not (g > 0 and math.isfinite(g)) for g in gam):
        raise FourierError("every gamma must be finite and > 0")
    coeffs = dft(traj.samples)
    med = float(np.median(np.abs(coeffs)))
    out = []
    for g in gam:
        out.append(
            _reconstruct(_apply_threshold(coeffs, g * med, traj.real_only), traj.dt, traj.real_only)
        )
    return out


@dataclass(frozen=True)
class PeakEstimate:
    """Result of a spectral peak search.

    ``energy`` is the signed estimate -f_peak. For real-only input only the
    magnitude of the dominant frequency is identifiable (the spectrum is
    conjugate-symmetric), so the search runs over the positive half-axis and
    ``sign_ambiguous`` is set; the reported sign is the negative candidate,
    which is the correct branch for scaled spectra whose ground energy is
    negative.
    """

    energy: float
    peak_bin: int
    frequency: float
    sign_ambiguous: bool


def zero_padded_peak_estimate(
    traj: Trajectory, pad_factor: int = 0, include_dc: bool = False
) -> PeakEstimate:
    """Locate the dominant DFT bin after appending pad_factor * L zeros.

    Padding refines the frequency grid to 2 pi m / ((1 + pad_factor) L dt)
    without adding information; pad_factor = 0 is the plain DFT peak. The DC
    bin is excluded unless ``include_dc`` (a constant offset otherwise wins).
    Frequencies above pi/dt are folded down by 2 pi/dt. For real-only input
    the sign pair +-f_peak is unresolvable from data alone; the negative
    candidate is returned because scaled ground energies sit below zero,
    inside [-pi/(4 dt), 0).
    """
    if int(pad_factor) != pad_factor or pad_factor < 0:
        raise FourierError("pad_factor must be an integer >= 0")
    n = len(traj)
    padded = np.concatenate([traj.samples, np.zeros(int(pad_factor) * n, dtype=complex)])
    total = padded.size
    coeffs = np.fft.fft(padded)
    freqs = 2.0 * math.pi * np.arange(total) / (total * traj.dt)
    folded = np.where(freqs > math.pi / traj.dt, freqs - 2.0 * math.pi / traj.dt, freqs)

    candidates = np.ones(total, dtype=bool)
    if not include_dc:
        candidates[0] = False
    if traj.real_only:
        candidates &= folded > 0
    idx = np.flatnonzero(candidates)
    if idx.size == 0:
        raise FourierError("no candidate bins to search")
    peak = int(idx[np.argmax(np.abs(coeffs[idx]))])
    f_peak = float(folded[peak])

    energy = -f_peak
    return PeakEstimate(
        energy=energy,
        peak_bin=peak,
        frequency=f_peak,
        sign_ambiguous=bool(traj.real_only),
    )
