"""Measurement-noise models: Gaussian surrogate and finite-shot sampling.

Reproducibility contract: all randomness is counter-based. Draw (k, j) for a
given (seed, tag) pair is word k * c + j of a Philox stream keyed by
SeedSequence((tag, seed)), where c is the number of draws consumed per sample
index. The value at an index therefore never depends on how many indices were
generated before it, so chunked generation is bitwise identical to one-call
generation. Uniforms map a 64-bit word w to ((w >> 11) + 0.5) * 2**-53, which
lies strictly inside (0, 1); normals go through the inverse CDF so each draw
consumes exactly one word.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import ndtri

from .spectral import SpectrumError, Trajectory

_TAG_GAUSSIAN = 0x67617573  # draws for gaussian_corrupt
_TAG_SHOT = 0x73686f74  # draws for shot_sample

# Indices are chunked so draw matrices stay under ~10^7 words at a time.
_CHUNK_WORDS = 10_000_000


class NoiseError(ValueError):
    """Raised for invalid noise parameters or inputs."""


def derive_seed(seed: int, *path: int) -> int:
    """Stable 64-bit child seed for (seed, *path); used for per-trial streams."""
    ss = np.random.SeedSequence(entropy=(int(seed),) + tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


def _index_uniforms(
    seed: int, tag: int, n_index: int, per_index: int, start_index: int = 0
) -> np.ndarray:
    """Uniform matrix u[k, j] in (0,1) for indices start_index..start_index+n_index-1."""
    key = np.random.SeedSequence(entropy=(tag, int(seed))).generate_state(2, np.uint64)
    bg = np.random.Philox(key=key)
    if start_index:
        skip = start_index * per_index
        # advance() moves the block counter: one tick = 4 output words
        bg.advance(skip // 4)
        if skip % 4:
            bg.random_raw(skip % 4)
    words = bg.random_raw(n_index * per_index).reshape(n_index, per_index)
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def gaussian_corrupt(traj: Trajectory, epsilon: float, seed: int) -> Trajectory:
    """Add i.i.d. N(0, epsilon^2) noise per sample.

    Real-only trajectories get one real draw per sample; complex ones get
    independent real and imaginary draws. epsilon = 0 returns the input
    values unchanged.
    """
    if not (epsilon >= 0) or not np.isfinite(epsilon):
        raise NoiseError("epsilon must be finite and >= 0")
    n = len(traj)
    if traj.real_only:
        u = _index_uniforms(seed, _TAG_GAUSSIAN, n, 1)
        noisy = traj.samples.real + epsilon * ndtri(u[:, 0])
        return Trajectory(noisy.astype(complex), traj.dt, True)
    u = _index_uniforms(seed, _TAG_GAUSSIAN, n, 2)
    noise = epsilon * (ndtri(u[:, 0]) + 1j * ndtri(u[:, 1]))
    return Trajectory(traj.samples + noise, traj.dt, False)


def shot_sample(traj: Trajectory, shots_per_step: int, seed: int) -> Trajectory:
    """Replace each sample with a mean of +-1 Bernoulli outcomes.

    Re s(t_k) must lie in [-1, 1]; outcome +1 has probability (1 + Re s)/2,
    and the estimate is the empirical mean over ``shots_per_step`` draws.
    Complex trajectories estimate the imaginary part the same way from an
    independent block of draws (draws for index k of the imaginary channel
    sit at index n + k of the stream).
    """
    if int(shots_per_step) != shots_per_step or shots_per_step < 1:
        raise NoiseError("shots_per_step must be an integer >= 1")
    shots = int(shots_per_step)
    n = len(traj)
    re = traj.samples.real
    if np.any(np.abs(re) > 1.0):
        raise NoiseError("Re s must lie in [-1, 1] for shot sampling")
    channels = [re]
    if not traj.real_only:
        im = traj.samples.imag
        if np.any(np.abs(im) > 1.0):
            raise NoiseError("Im s must lie in [-1, 1] for shot sampling")
        channels.append(im)

    means = []
    chunk = max(1, _CHUNK_WORDS // shots)
    for c, values in enumerate(channels):
        prob_plus = 0.5 * (1.0 + values)
        out = np.empty(n)
        for lo in range(0, n, chunk):
            hi = min(lo + chunk, n)
            u = _index_uniforms(seed, _TAG_SHOT, hi - lo, shots, start_index=c * n + lo)
            plus = u < prob_plus[lo:hi, None]
            out[lo:hi] = 2.0 * plus.mean(axis=1) - 1.0
        means.append(out)

    if traj.real_only:
        return Trajectory(means[0].astype(complex), traj.dt, True)
    return Trajectory(means[0] + 1j * means[1], traj.dt, False)


def variance_of_mean(s_re: float, n: int) -> float:
    """Variance of the n-shot mean of the +-1 estimator: (1 - s^2) / n."""
    if not (-1.0 <= s_re <= 1.0):
        raise NoiseError("s_re must lie in [-1, 1]")
    if int(n) != n or n < 1:
        raise NoiseError("n must be an integer >= 1")
    return (1.0 - float(s_re) ** 2) / int(n)


# Measured overlaps can spill a few ulp past +-1 through float summation of
# the level weights; reject only violations beyond this.
_DOMAIN_SPILL = 1e-9


@dataclass(frozen=True)
class ShotAllocation:
    """Per-step shot counts summing to at most the requested total."""

    counts: np.ndarray
    total: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 1 or counts.size == 0:
            raise NoiseError("counts must be a nonempty 1-D array")
        if np.any(counts < 0):
            raise NoiseError("counts must be nonnegative")
        if int(counts.sum()) > self.total:
            raise NoiseError("allocated shots exceed the total budget")


def optimal_shot_allocation(signal_re, total: int) -> ShotAllocation:
    """Split a shot budget across time steps to minimize the summed variance.

    Minimizes sum_k (1 - s_k^2) / n_k over integer counts with
    sum_k n_k = total. The continuous minimizer allocates proportionally to
    sqrt(1 - s_k^2); the integer optimum is reached by warm-starting just
    below that profile and spending the remaining shots one at a time on the
    step with the largest marginal variance reduction (the objective is
    separable and convex, so the greedy exchange argument is exact). Samples
    with s_k = +-1 get zero shots (their estimator is deterministic); if
    every sample is +-1 there is nothing to allocate and an error is raised.
    """
    s = np.asarray(signal_re, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise NoiseError("signal_re must be a nonempty 1-D array")
    if int(total) != total or total < 0:
        raise NoiseError("total must be an integer >= 0")
    if np.any(np.abs(s) > 1.0 + _DOMAIN_SPILL):
        raise NoiseError("signal values must lie in [-1, 1]")
    total = int(total)
    w = 1.0 - np.clip(s, -1.0, 1.0) ** 2
    active = np.flatnonzero(w > 0.0)
    if active.size == 0:
        raise NoiseError("all samples are exactly +-1; allocation is undefined")
    counts = np.zeros(s.size, dtype=np.int64)
    if total == 0:
        return ShotAllocation(counts=counts, total=total)

    if total <= active.size:
        # budget cannot cover every random step: highest variance first
        order = active[np.argsort(-w[active], kind="stable")]
        counts[order[:total]] = 1
        return ShotAllocation(counts=counts, total=total)

    root = np.sqrt(w[active])
    base = np.floor(total * root / root.sum()).astype(np.int64) - 2
    np.clip(base, 1, None, out=base)
    if int(base.sum()) > total:
        base[:] = 1
    counts[active] = base

    # marginal gain of the (n+1)-th shot at step k is w_k / (n (n+1))
    heap = [(-w[k] / (counts[k] * (counts[k] + 1)), k) for k in active.tolist()]
    heapq.heapify(heap)
    for _ in range(total - int(counts[active].sum())):
        _, k = heapq.heappop(heap)
        counts[k] += 1
        heapq.heappush(heap, (-w[k] / (counts[k] * (counts[k] + 1)), k))
    return ShotAllocation(counts=counts, total=total)


@dataclass(frozen=True)
class NoiseSpec:
    """Serializable description of a noise channel.

    kind "gaussian" uses ``epsilon``; kind "shot" uses ``shots``. ``seed``
    fixes the stream in both cases.
    """

    kind: Literal["gaussian", "shot"]
    seed: int
    epsilon: float = 0.0
    shots: int = 1

    def __post_init__(self):
        if self.kind not in ("gaussian", "shot"):
            raise NoiseError(f"unknown noise kind {self.kind!r}")
        if self.kind == "gaussian" and not (self.epsilon >= 0):
            raise NoiseError("epsilon must be >= 0")
        if self.kind == "shot" and (int(self.shots) != self.shots or self.shots < 1):
            raise NoiseError("shots must be an integer >= 1")

    def apply(self, traj: Trajectory) -> Trajectory:
        if self.kind == "gaussian":
            return gaussian_corrupt(traj, self.epsilon, self.seed)
        return shot_sample(traj, self.shots, self.seed)
