"""Request and response bodies for the estimation service."""

from __future__ import annotations

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from .config import ExperimentConfig
from .spectral import Trajectory


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TrajectoryPayload(_Model):
    """Wire form of a uniformly sampled series: parallel re/im lists plus dt."""

    dt: float
    re: list[float]
    im: list[float]
    real_only: bool = False

    @classmethod
    def from_trajectory(cls, traj: Trajectory) -> "TrajectoryPayload":
        return cls(
            dt=traj.dt,
            re=[float(v) for v in traj.samples.real],
            im=[float(v) for v in traj.samples.imag],
            real_only=traj.real_only,
        )

    def to_trajectory(self) -> Trajectory:
        if len(self.re) != len(self.im):
            raise ValueError("re and im must have equal length")
        samples = np.asarray(self.re, dtype=float) + 1j * np.asarray(self.im, dtype=float)
        return Trajectory(samples, self.dt, self.real_only)


class SimulateRequest(_Model):
    config: ExperimentConfig


class SimulateResponse(_Model):
    noiseless: TrajectoryPayload
    noisy: TrajectoryPayload
    ground_energy: float
    config: ExperimentConfig


class EstimateRequest(_Model):
    config: ExperimentConfig
    trajectory: Optional[TrajectoryPayload] = None  # None: simulate from config


class EstimateReport(_Model):
    energy: float
    energy_unscaled: Optional[float] = None
    theta: Optional[float] = None
    rank_kept: Optional[int] = None
    delta: Optional[float] = None
    d_delay: Optional[int] = None
    k_len: int
    gammas: Optional[list[float]] = None
    include_raw: Optional[bool] = None
    method: str
    sign_ambiguous: Optional[bool] = None


class EstimateResponse(_Model):
    report: EstimateReport
    config: ExperimentConfig


class SweepRequest(_Model):
    config: ExperimentConfig


class SweepPoint(_Model):
    k: int
    abs_error: Optional[float] = None  # None when diverged (inf in the CSV form)
    converged: bool


class SweepResponse(_Model):
    method: str
    target_energy: float
    points: list[SweepPoint]
    steps_to_stable: Optional[int] = None
    tol: float
    window: int
    config: ExperimentConfig


class BoundRequest(_Model):
    config: ExperimentConfig


class BoundRowPayload(_Model):
    tau: float
    k: int
    lhs_mean: float
    lhs_std: float
    rhs: float


class BoundResponse(_Model):
    rows: list[BoundRowPayload]
    epsilon: float
    trials: int
    config: ExperimentConfig


class AllocateRequest(_Model):
    config: ExperimentConfig


class AllocateResponse(_Model):
    counts: list[int]
    uniform: int
    total: int
    assigned: int
    config: ExperimentConfig
