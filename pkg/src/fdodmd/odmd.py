"""Hankel least-squares spectral estimation (observable DMD and its
Fourier-denoised ensemble variant).

From samples d(t_k) the method forms the Hankel pair

    X[i, j]  = d(t_{i+j})        X'[i, j] = d(t_{i+j+1})

with D delay rows and K+1 columns (K + D + 1 samples consumed), fits the
one-step propagator A = X' X^+ through a singular-value-truncated
pseudoinverse, and reads the ground-state energy off the eigenvalue whose
principal log has the largest imaginary part:

    E = -Im log(lambda) / dt        theta = -Re log(lambda) / dt.

Stacking several trajectories (raw plus denoised copies) interleaves one
block row per trajectory under each delay, giving a D(R+1) x (K+1) pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fourier import denoise_ensemble
from .spectral import Trajectory


class EstimationError(ValueError):
    """Raised when a fit cannot be produced from the given data."""


@dataclass(frozen=True)
class HankelPair:
    """Data matrices X, X' plus the geometry that built them."""

    x: np.ndarray
    xp: np.ndarray
    d_delay: int
    k_len: int
    n_aux: int  # R: stacked trajectories beyond the first
    dt: float


@dataclass(frozen=True)
class PropagatorFit:
    """Least-squares propagator, its eigenvalues, and the truncation used.

    ``eigenvalues`` lists the nonzero spectrum of A = X' X^+_delta followed
    by its exact zeros (A annihilates the truncated singular directions).
    The full operator matrix is assembled on first access; fits only read
    for eigenvalues never pay for the n_rows x n_rows product.
    """

    eigenvalues: np.ndarray
    delta: float
    rank_kept: int
    _xp: np.ndarray = None
    _pinv: np.ndarray = None
    _operator: np.ndarray = None

    @property
    def operator(self) -> np.ndarray:
        if self._operator is None:
            if self._xp is None or self._pinv is None:
                raise EstimationError("this fit carries no operator factors")
            object.__setattr__(self, "_operator", self._xp @ self._pinv)
        return self._operator


@dataclass(frozen=True)
class GseEstimate:
    """Ground-state energy readout from a propagator fit.

    ``energy`` = min over admitted eigenvalues of -Im log(lambda)/dt,
    ``theta`` the damping rate of the selected eigenvalue. ``all_energies``
    is sorted ascending. The remaining fields echo fit geometry for reports.
    """

    energy: float
    theta: float
    selected_eigenvalue: complex
    all_energies: np.ndarray
    rank_kept: int | None = None
    d_delay: int | None = None
    k_len: int | None = None
    delta: float | None = None


def default_delay(k_len: int) -> int:
    """Delay-embedding depth floor((K+1)/2) used when none is given."""
    return (k_len + 1) // 2


def max_k_len(n_samples: int, d_delay: int | None = None) -> int:
    """Largest K such that K + D + 1 samples fit; D defaults per-K."""
    if d_delay is not None:
        k = n_samples - d_delay - 1
    else:
        k = n_samples  # shrink until the window fits
        while k > 0 and k + default_delay(k) + 1 > n_samples:
            k -= 1
    if k < 1:
        raise EstimationError(f"{n_samples} samples cannot support any Hankel window")
    return k


def build_hankel(trajectories, d_delay: int, k_len: int) -> HankelPair:
    """Assemble the stacked Hankel pair from one or more trajectories.

    Row i*(R+1) + r holds delay i of trajectory r, so trajectories stay
    interleaved within each delay block. Every trajectory must provide at
    least K + D + 1 samples and share the same dt.
    """
    trajs = list(trajectories)
    if not trajs:
        raise EstimationError("need at least one trajectory")
    if int(d_delay) != d_delay or d_delay < 1:
        raise EstimationError("d_delay must be an integer >= 1")
    if int(k_len) != k_len or k_len < 1:
        raise EstimationError("k_len must be an integer >= 1")
    d_delay, k_len = int(d_delay), int(k_len)
    dt = trajs[0].dt
    need = k_len + d_delay + 1
    for r, t in enumerate(trajs):
        if t.dt != dt:
            raise EstimationError("stacked trajectories disagree on dt")
        if len(t) < need:
            raise EstimationError(
                f"trajectory {r} has {len(t)} samples, K+D+1 = {need} required"
            )
    real = all(t.real_only for t in trajs)
    n_rows = d_delay * len(trajs)
    x = np.empty((n_rows, k_len + 1), dtype=float if real else complex)
    xp = np.empty_like(x)
    for i in range(d_delay):
        for r, t in enumerate(trajs):
            data = t.samples.real if real else t.samples
            row = i * len(trajs) + r
            x[row] = data[i : i + k_len + 1]
            xp[row] = data[i + 1 : i + k_len + 2]
    return HankelPair(x=x, xp=xp, d_delay=d_delay, k_len=k_len, n_aux=len(trajs) - 1, dt=dt)


def solve_propagator(pair: HankelPair, delta: float) -> PropagatorFit:
    """Fit A = X' X^+_delta, truncating singular values below delta * sigma_max.

    delta in [0, 1); the top singular triplet always survives, so the fit is
    defined whenever X is nonzero.
    """
    if not (0.0 <= delta < 1.0):
        raise EstimationError("delta must lie in [0, 1)")
    try:
        u, sigma, vh = np.linalg.svd(pair.x, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise EstimationError(f"SVD failed: {exc}") from exc
    smax = float(sigma[0])
    if smax == 0.0:
        raise EstimationError("X is identically zero; no propagator exists")
    keep = sigma >= delta * smax
    rank = int(np.count_nonzero(keep))
    inv = vh[:rank].conj().T @ ((1.0 / sigma[:rank])[:, None] * u[:, :rank].conj().T)
    # nonzero spectrum of X' X^+ equals that of the rank-sized compression
    # U_r^* X' V_r Sigma_r^{-1}; the remaining n_rows - rank eigenvalues are 0
    compressed = (u[:, :rank].conj().T @ pair.xp @ vh[:rank].conj().T) / sigma[:rank]
    try:
        eig_small = np.linalg.eigvals(compressed)
    except np.linalg.LinAlgError as exc:
        raise EstimationError(f"eigen-decomposition failed: {exc}") from exc
    eigenvalues = np.concatenate(
        [eig_small, np.zeros(pair.x.shape[0] - rank, dtype=complex)]
    )
    return PropagatorFit(
        eigenvalues=eigenvalues, delta=float(delta), rank_kept=rank, _xp=pair.xp, _pinv=inv
    )


def extract_gse(
    fit: PropagatorFit, dt: float, magnitude_floor: float = 1e-12
) -> GseEstimate:
    """Ground-state energy from fit eigenvalues via the principal logarithm.

    Eigenvalues with |lambda| <= magnitude_floor are spurious (they come from
    the truncated null directions) and are dropped; the smallest energy,
    i.e. the largest Im log(lambda), is selected.
    """
    if not (dt > 0):
        raise EstimationError("dt must be positive")
    lam = np.asarray(fit.eigenvalues, dtype=complex)
    admitted = lam[np.abs(lam) > magnitude_floor]
    if admitted.size == 0:
        raise EstimationError("no eigenvalue above the magnitude floor")
    logs = np.log(admitted)
    energies = -logs.imag / dt
    sel = int(np.argmin(energies))
    return GseEstimate(
        energy=float(energies[sel]),
        theta=float(-logs.real[sel] / dt),
        selected_eigenvalue=complex(admitted[sel]),
        all_energies=np.sort(energies),
        rank_kept=fit.rank_kept,
        delta=fit.delta,
    )


def odmd_estimate(
    traj: Trajectory,
    k_len: int,
    delta: float,
    magnitude_floor: float = 1e-12,
    d_delay: int | None = None,
) -> GseEstimate:
    """Single-trajectory estimate from the first K + D + 1 samples."""
    d = default_delay(k_len) if d_delay is None else int(d_delay)
    window = traj.head(k_len + d + 1)
    pair = build_hankel([window], d, k_len)
    fit = solve_propagator(pair, delta)
    est = extract_gse(fit, traj.dt, magnitude_floor)
    return _with_geometry(est, d, k_len)


def fdodmd_estimate(
    traj: Trajectory,
    gammas,
    include_raw: bool,
    k_len: int,
    delta: float,
    magnitude_floor: float = 1e-12,
    d_delay: int | None = None,
) -> GseEstimate:
    """Ensemble estimate: raw window (optional) stacked with denoised copies.

    The window of K + D + 1 samples is cut first and denoised afterwards, so
    every ensemble member sees exactly the data the fit consumes. Members are
    ordered raw first, then ascending gamma. Empty gammas with include_raw
    reduces to the single-trajectory method (identical output).
    """
    gam = sorted(float(g) for g in gammas)
    if not gam and not include_raw:
        raise EstimationError("empty ensemble: no gammas and include_raw is false")
    d = default_delay(k_len) if d_delay is None else int(d_delay)
    window = traj.head(k_len + d + 1)
    members = denoise_ensemble(window, gam) if gam else []
    stack = ([window] + members) if include_raw else members
    pair = build_hankel(stack, d, k_len)
    fit = solve_propagator(pair, delta)
    est = extract_gse(fit, traj.dt, magnitude_floor)
    return _with_geometry(est, d, k_len)


def _with_geometry(est: GseEstimate, d_delay: int, k_len: int) -> GseEstimate:
    return GseEstimate(
        energy=est.energy,
        theta=est.theta,
        selected_eigenvalue=est.selected_eigenvalue,
        all_energies=est.all_energies,
        rank_kept=est.rank_kept,
        d_delay=d_delay,
        k_len=k_len,
        delta=est.delta,
    )
