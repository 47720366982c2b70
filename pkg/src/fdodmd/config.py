"""Experiment configuration: a single pydantic model shared by the CLI and
the service.

The resolved form embedded in every report inlines the spectrum (explicit
eigenvalue and overlap lists), so re-running from an embedded config never
needs the original spectrum file and reproduces the outputs bit-for-bit.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .spectral import (
    RescaleParams,
    Spectrum,
    load_spectrum,
    make_reference_overlaps,
    rescale_spectrum,
)

_LEVEL_TAG = 0x6c766c73  # synthetic raw-level draws


class ConfigError(ValueError):
    """Raised when a configuration cannot be resolved."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=False)


class SyntheticSpectrumConfig(_Model):
    """Reference spectrum: p0 on the ground state, the rest spread evenly.

    Raw eigenvalues are either given explicitly or drawn uniformly from
    [raw_min, raw_max] with ``level_seed``; they are then affinely rescaled
    into [-pi/(4 dt), pi/(4 dt)] with padding ``alpha``.
    """

    n_levels: int = Field(ge=1)
    p0: float = Field(gt=0.0, le=1.0)
    alpha: float = Field(default=0.2, gt=0.0)
    raw_eigenvalues: Optional[list[float]] = None
    level_seed: int = 0
    raw_min: float = -1.0
    raw_max: float = 1.0

    @model_validator(mode="after")
    def _check(self):
        if self.raw_eigenvalues is not None and len(self.raw_eigenvalues) != self.n_levels:
            raise ValueError("raw_eigenvalues length must equal n_levels")
        if self.raw_eigenvalues is None and not (self.raw_max > self.raw_min):
            raise ValueError("raw_max must exceed raw_min")
        return self


class SpectrumSourceConfig(_Model):
    """Exactly one of: a spectrum file path, a synthetic spec, or inline lists."""

    path: Optional[str] = None
    synthetic: Optional[SyntheticSpectrumConfig] = None
    eigenvalues: Optional[list[float]] = None
    overlaps: Optional[list[float]] = None

    @model_validator(mode="after")
    def _check(self):
        inline = self.eigenvalues is not None or self.overlaps is not None
        if inline and (self.eigenvalues is None or self.overlaps is None):
            raise ValueError("inline spectra need both eigenvalues and overlaps")
        chosen = sum([self.path is not None, self.synthetic is not None, inline])
        if chosen != 1:
            raise ValueError("set exactly one of path, synthetic, or inline lists")
        return self


class NoiseConfig(_Model):
    kind: Literal["none", "gaussian", "shot"] = "none"
    epsilon: float = Field(default=0.0, ge=0.0)
    shots: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "gaussian" and self.epsilon == 0.0:
            raise ValueError("gaussian noise needs epsilon > 0 (use kind 'none' instead)")
        return self


class MethodConfig(_Model):
    """Estimator selection; per-method fields may be set only for their method."""

    kind: Literal["odmd", "fdodmd", "dft", "zeropad"] = "odmd"
    gammas: Optional[list[float]] = None
    include_raw: bool = True
    pad_factor: Optional[int] = Field(default=None, ge=0)
    d_delay: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "fdodmd":
            if not self.gammas and not self.include_raw:
                raise ValueError("fdodmd needs gammas or include_raw")
        elif self.gammas is not None:
            raise ValueError("gammas apply only to the fdodmd method")
        if self.kind == "zeropad":
            if self.pad_factor is None:
                raise ValueError("zeropad needs pad_factor")
        elif self.pad_factor is not None:
            raise ValueError("pad_factor applies only to the zeropad method")
        if self.kind in ("dft", "zeropad") and self.d_delay is not None:
            raise ValueError("d_delay applies only to Hankel methods")
        return self


class SweepConfig(_Model):
    k_start: int = Field(default=5, ge=1)
    k_step: int = Field(default=5, ge=1)
    tol: float = Field(default=1e-3, gt=0.0)
    window: int = Field(default=10, ge=1)
    stop_early: bool = False


class BoundConfig(_Model):
    k_values: list[int] = Field(default=[100, 200, 400])
    trials: int = Field(default=100, ge=2)
    tau_points: int = Field(default=40, ge=2)

    @model_validator(mode="after")
    def _check(self):
        if not self.k_values or any(k < 2 for k in self.k_values):
            raise ValueError("k_values must be nonempty with every K >= 2")
        return self


class AllocateConfig(_Model):
    total_shots: int = Field(default=100_000, ge=0)


class ExperimentConfig(_Model):
    """Everything a run needs; the same object drives all five commands."""

    spectrum: SpectrumSourceConfig
    dt: float = Field(default=1.0, gt=0.0)
    k_max: int = Field(ge=1)
    k_len: Optional[int] = Field(default=None, ge=1)  # fit length; None = largest feasible
    theta: float = Field(default=0.0, ge=0.0)
    real_only: bool = True
    noise: NoiseConfig = NoiseConfig()
    method: MethodConfig = MethodConfig()
    delta: Optional[float] = None  # None defers to epsilon for gaussian noise
    magnitude_floor: float = Field(default=1e-12, gt=0.0)
    seed: int = 0
    out_dir: str = "results"
    sweep: SweepConfig = SweepConfig()
    bound: BoundConfig = BoundConfig()
    allocate: AllocateConfig = AllocateConfig()

    @model_validator(mode="after")
    def _check(self):
        if self.delta is not None and not (0.0 <= self.delta < 1.0):
            raise ValueError("delta must lie in [0, 1)")
        return self


def resolve_spectrum(cfg: ExperimentConfig) -> tuple[Spectrum, Optional[RescaleParams]]:
    """Materialize the spectrum; synthetic sources also return the affine map."""
    src = cfg.spectrum
    if src.path is not None:
        p = Path(src.path)
        if not p.exists():
            raise ConfigError(f"spectrum file not found: {p}")
        return load_spectrum(p), None
    if src.synthetic is not None:
        syn = src.synthetic
        if syn.raw_eigenvalues is not None:
            raw = np.asarray(syn.raw_eigenvalues, dtype=float)
        else:
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence((_LEVEL_TAG, syn.level_seed)))
            )
            raw = np.sort(rng.uniform(syn.raw_min, syn.raw_max, syn.n_levels))
        params, scaled = rescale_spectrum(raw, cfg.dt, syn.alpha)
        # p0 always attaches to the ground state, i.e. the smallest eigenvalue
        overlaps = make_reference_overlaps(syn.n_levels, syn.p0)
        return Spectrum(np.sort(scaled), overlaps), params
    return Spectrum(np.asarray(src.eigenvalues), np.asarray(src.overlaps)), None


def inline_spectrum(cfg: ExperimentConfig) -> ExperimentConfig:
    """Copy of cfg with the spectrum replaced by explicit inline lists.

    This is what gets embedded in reports and sent to a remote service; it
    strips any dependence on the local filesystem or on the synthetic
    generator.
    """
    spec, _ = resolve_spectrum(cfg)
    src = SpectrumSourceConfig(
        eigenvalues=[float(e) for e in spec.eigenvalues],
        overlaps=[float(p) for p in spec.overlaps],
    )
    return cfg.model_copy(update={"spectrum": src})


def resolve_delta(cfg: ExperimentConfig) -> float:
    """delta from the config, defaulting to epsilon under gaussian noise."""
    if cfg.delta is not None:
        return cfg.delta
    if cfg.noise.kind == "gaussian":
        eps = cfg.noise.epsilon
        if 0.0 < eps < 1.0:
            return eps
    raise ConfigError("delta is required when it cannot default to the noise level")
