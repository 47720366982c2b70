"""HTTP service exposing the estimation pipeline.

Five POST endpoints mirror the five CLI commands. The service is stateless:
every request carries a complete config (spectra inlined client-side when
they come from files), so the same request body always produces the same
response.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, HTTPException

from . import analysis, fourier, noise, odmd
from .config import (
    ConfigError,
    ExperimentConfig,
    inline_spectrum,
    resolve_delta,
    resolve_spectrum,
)
from .schemas import (
    AllocateRequest,
    AllocateResponse,
    BoundRequest,
    BoundResponse,
    BoundRowPayload,
    EstimateReport,
    EstimateRequest,
    EstimateResponse,
    SimulateRequest,
    SimulateResponse,
    SweepPoint,
    SweepRequest,
    SweepResponse,
    TrajectoryPayload,
)
from .spectral import SpectrumError, Trajectory, depolarized_signal, unscale_energy

_USER_ERRORS = (
    ConfigError,
    SpectrumError,
    noise.NoiseError,
    fourier.FourierError,
    odmd.EstimationError,
    analysis.AnalysisError,
    ValueError,
)

app = FastAPI(title="fdodmd service", version="0.1.0")


def _noise_spec(cfg: ExperimentConfig) -> noise.NoiseSpec | None:
    if cfg.noise.kind == "none":
        return None
    if cfg.noise.kind == "gaussian":
        return noise.NoiseSpec(kind="gaussian", epsilon=cfg.noise.epsilon, seed=cfg.seed)
    return noise.NoiseSpec(kind="shot", shots=cfg.noise.shots, seed=cfg.seed)


def _simulate(cfg: ExperimentConfig):
    spec, params = resolve_spectrum(cfg)
    clean = depolarized_signal(spec, cfg.theta, cfg.dt, cfg.k_max + 1, cfg.real_only)
    ns = _noise_spec(cfg)
    noisy = ns.apply(clean) if ns is not None else clean
    return clean, noisy, spec.ground_energy, params


def _estimator(cfg: ExperimentConfig):
    m = cfg.method
    if m.kind == "odmd":
        return analysis.OdmdMethod(
            delta=resolve_delta(cfg), magnitude_floor=cfg.magnitude_floor, d_delay=m.d_delay
        )
    if m.kind == "fdodmd":
        return analysis.FdodmdMethod(
            gammas=tuple(m.gammas or ()),
            include_raw=m.include_raw,
            delta=resolve_delta(cfg),
            magnitude_floor=cfg.magnitude_floor,
            d_delay=m.d_delay,
        )
    if m.kind == "dft":
        return analysis.DftPeakMethod(pad_factor=0)
    return analysis.DftPeakMethod(pad_factor=int(m.pad_factor))


def _fit_k_len(cfg: ExperimentConfig, n_samples: int) -> int:
    if cfg.k_len is not None:
        return cfg.k_len
    if cfg.method.kind in ("dft", "zeropad"):
        return n_samples - 1
    return odmd.max_k_len(n_samples, cfg.method.d_delay)


def run_simulate(cfg: ExperimentConfig) -> SimulateResponse:
    clean, noisy, e0, _ = _simulate(cfg)
    return SimulateResponse(
        noiseless=TrajectoryPayload.from_trajectory(clean),
        noisy=TrajectoryPayload.from_trajectory(noisy),
        ground_energy=e0,
        config=inline_spectrum(cfg),
    )


def run_estimate(cfg: ExperimentConfig, payload: TrajectoryPayload | None) -> EstimateResponse:
    if payload is not None:
        traj = payload.to_trajectory()
    else:
        _, traj, _, _ = _simulate(cfg)
    _, params = resolve_spectrum(cfg)
    k_len = _fit_k_len(cfg, len(traj))
    m = cfg.method
    if m.kind in ("odmd", "fdodmd"):
        delta = resolve_delta(cfg)
        if m.kind == "odmd":
            est = odmd.odmd_estimate(traj, k_len, delta, cfg.magnitude_floor, m.d_delay)
        else:
            est = odmd.fdodmd_estimate(
                traj, m.gammas or (), m.include_raw, k_len, delta,
                cfg.magnitude_floor, m.d_delay,
            )
        report = EstimateReport(
            energy=est.energy,
            energy_unscaled=None if params is None else unscale_energy(est.energy, params),
            theta=est.theta,
            rank_kept=est.rank_kept,
            delta=est.delta,
            d_delay=est.d_delay,
            k_len=k_len,
            gammas=None if m.kind == "odmd" else [float(g) for g in (m.gammas or [])],
            include_raw=None if m.kind == "odmd" else m.include_raw,
            method=m.kind,
        )
    else:
        pad = 0 if m.kind == "dft" else int(m.pad_factor)
        window = traj.head(k_len + 1)
        peak = fourier.zero_padded_peak_estimate(window, pad)
        report = EstimateReport(
            energy=peak.energy,
            energy_unscaled=None if params is None else unscale_energy(peak.energy, params),
            k_len=k_len,
            method=m.kind,
            sign_ambiguous=peak.sign_ambiguous,
        )
    return EstimateResponse(report=report, config=inline_spectrum(cfg))


def _k_grid(cfg: ExperimentConfig, estimator, n_samples: int) -> list[int]:
    ks = []
    k = cfg.sweep.k_start
    while estimator.window_len(k) <= n_samples:
        ks.append(k)
        k += cfg.sweep.k_step
    if not ks:
        raise ConfigError("no sweep point fits in k_max samples")
    return ks


def run_sweep(cfg: ExperimentConfig) -> SweepResponse:
    _, noisy, e0, params = _simulate(cfg)
    estimator = _estimator(cfg)
    ks = _k_grid(cfg, estimator, len(noisy))
    stop = (cfg.sweep.tol, cfg.sweep.window) if cfg.sweep.stop_early else None
    # accuracy targets are quoted in unscaled energy units
    scale = 1.0 if params is None else 1.0 / params.beta1
    curve = analysis.convergence_sweep(
        noisy, estimator, e0, ks, stop_when_stable=stop, error_scale=scale
    )
    steps = analysis.steps_to_stable_accuracy(curve, cfg.sweep.tol, cfg.sweep.window)
    return SweepResponse(
        method=curve.method,
        target_energy=e0,
        points=[
            SweepPoint(
                k=p.k_len,
                abs_error=p.abs_error if p.converged else None,
                converged=p.converged,
            )
            for p in curve.points
        ],
        steps_to_stable=steps,
        tol=cfg.sweep.tol,
        window=cfg.sweep.window,
        config=inline_spectrum(cfg),
    )


def run_bound(cfg: ExperimentConfig) -> BoundResponse:
    if cfg.noise.kind != "gaussian":
        raise ConfigError("the bound pipeline needs gaussian noise (set noise.kind)")
    spec, _ = resolve_spectrum(cfg)
    eps = cfg.noise.epsilon
    signals = [
        depolarized_signal(spec, cfg.theta, cfg.dt, k, real_only=False)
        for k in cfg.bound.k_values
    ]
    max_mag = max(float(abs(fourier.dft(s.samples)).max()) for s in signals)
    taus = analysis.default_tau_grid(max_mag, cfg.bound.tau_points)
    report = analysis.bound_report(signals, taus, eps, cfg.bound.trials, cfg.seed)
    return BoundResponse(
        rows=[
            BoundRowPayload(
                tau=r.tau_r, k=r.k_len, lhs_mean=r.lhs_mean, lhs_std=r.lhs_std, rhs=r.rhs
            )
            for r in report.rows
        ],
        epsilon=eps,
        trials=cfg.bound.trials,
        config=inline_spectrum(cfg),
    )


def run_allocate(cfg: ExperimentConfig) -> AllocateResponse:
    spec, _ = resolve_spectrum(cfg)
    clean = depolarized_signal(spec, cfg.theta, cfg.dt, cfg.k_max + 1, cfg.real_only)
    total = cfg.allocate.total_shots
    alloc = noise.optimal_shot_allocation(clean.samples.real, total)
    uniform = total // cfg.k_max if cfg.k_max else 0
    return AllocateResponse(
        counts=[int(c) for c in alloc.counts],
        uniform=uniform,
        total=total,
        assigned=int(alloc.counts.sum()),
        config=inline_spectrum(cfg),
    )


def _wrap(fn, *args):
    try:
        return fn(*args)
    except _USER_ERRORS as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.post("/simulate", response_model=SimulateResponse)
def simulate_endpoint(req: SimulateRequest) -> SimulateResponse:
    return _wrap(run_simulate, req.config)


@app.post("/estimate", response_model=EstimateResponse)
def estimate_endpoint(req: EstimateRequest) -> EstimateResponse:
    return _wrap(run_estimate, req.config, req.trajectory)


@app.post("/sweep", response_model=SweepResponse)
def sweep_endpoint(req: SweepRequest) -> SweepResponse:
    return _wrap(run_sweep, req.config)


@app.post("/bound", response_model=BoundResponse)
def bound_endpoint(req: BoundRequest) -> BoundResponse:
    return _wrap(run_bound, req.config)


@app.post("/allocate", response_model=AllocateResponse)
def allocate_endpoint(req: AllocateRequest) -> AllocateResponse:
    return _wrap(run_allocate, req.config)
