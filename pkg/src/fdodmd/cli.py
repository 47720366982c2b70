"""Command-line client for the estimation service.

Every subcommand builds an ExperimentConfig from a JSON config file plus
overrides, POSTs it to the service (in-process by default, remote with
--server), writes the response to files, and re-reads what it wrote before
reporting success. Exit status is 0 only when all outputs were written and
validated.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

from . import fileio
from .analysis import BoundReport, BoundRow, ConvergenceCurve, CurvePoint
from .config import ExperimentConfig
from .spectral import Trajectory


class CliError(Exception):
    pass


def _set_path(tree: dict, dotted: str, value):
    parts = dotted.split(".")
    node = tree
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise CliError(f"--set path {dotted!r} crosses a non-object value")
    node[parts[-1]] = value


def _parse_set(expr: str):
    if "=" not in expr:
        raise CliError(f"--set expects path=value, got {expr!r}")
    path, raw = expr.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw  # bare strings stay strings
    return path.strip(), value


def load_config(args) -> ExperimentConfig:
    tree = {}
    if args.config is not None:
        cfg_path = Path(args.config)
        if not cfg_path.exists():
            raise CliError(f"config file not found: {cfg_path}")
        tree = json.loads(cfg_path.read_text(encoding="utf-8"))
        if not isinstance(tree, dict):
            raise CliError("config file must hold a JSON object")
    for expr in args.set or []:
        path, value = _parse_set(expr)
        _set_path(tree, path, value)
    if args.seed is not None:
        tree["seed"] = args.seed
    if args.out is not None:
        tree["out_dir"] = args.out
    try:
        cfg = ExperimentConfig.model_validate(tree)
    except Exception as exc:
        raise CliError(f"invalid config: {exc}") from exc
    if cfg.spectrum.path is not None and not Path(cfg.spectrum.path).exists():
        raise CliError(f"spectrum file not found: {cfg.spectrum.path}")
    return cfg


def _post(server: str | None, route: str, payload: dict) -> dict:
    if server:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            resp = client.post(route, json=payload)
    else:
        from .service import app  # imported lazily; pulls in fastapi

        async def _call():
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://service", timeout=600.0
            ) as client:
                return await client.post(route, json=payload)

        resp = asyncio.run(_call())
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        raise CliError(f"{route} failed ({resp.status_code}): {detail}")
    return resp.json()


def _payload_to_trajectory(p: dict) -> Trajectory:
    import numpy as np

    samples = np.asarray(p["re"], dtype=float) + 1j * np.asarray(p["im"], dtype=float)
    return Trajectory(samples, p["dt"], p["real_only"])


def _write_and_check_trajectory(path: Path, payload: dict) -> None:
    traj = _payload_to_trajectory(payload)
    fileio.save_trajectory(path, traj)
    back = fileio.load_trajectory(path)
    if len(back) != len(traj):
        raise CliError(f"verification failed for {path}")


def _report_sidecar(path: Path, command: str, body: dict) -> None:
    fileio.write_json(path, {"command": command, **body})
    json.loads(path.read_text(encoding="utf-8"))  # verify parseable


def cmd_simulate(args) -> int:
    cfg = load_config(args)
    body = _post(args.server, "/simulate", {"config": _config_payload(cfg)})
    out = Path(cfg.out_dir)
    _write_and_check_trajectory(out / "noiseless.csv", body["noiseless"])
    _write_and_check_trajectory(out / "noisy.csv", body["noisy"])
    _report_sidecar(
        out / "simulate.json",
        "simulate",
        {
            "ground_energy": body["ground_energy"],
            "n_samples": len(body["noisy"]["re"]),
            "outputs": ["noiseless.csv", "noisy.csv"],
            "config": body["config"],
        },
    )
    print(f"simulate: wrote {out / 'noiseless.csv'}, {out / 'noisy.csv'}")
    return 0


def cmd_estimate(args) -> int:
    cfg = load_config(args)
    payload = {"config": _config_payload(cfg)}
    if args.trajectory is not None:
        traj = fileio.load_trajectory(args.trajectory)
        payload["trajectory"] = {
            "dt": traj.dt,
            "re": [float(v) for v in traj.samples.real],
            "im": [float(v) for v in traj.samples.imag],
            "real_only": traj.real_only,
        }
    body = _post(args.server, "/estimate", payload)
    out = Path(cfg.out_dir)
    _report_sidecar(
        out / "estimate.json",
        "estimate",
        {"report": body["report"], "config": body["config"]},
    )
    rep = body["report"]
    print(f"estimate: E = {rep['energy']:.6g} (method {rep['method']}, K = {rep['k_len']})")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args)
    body = _post(args.server, "/sweep", {"config": _config_payload(cfg)})
    out = Path(cfg.out_dir)
    curve = ConvergenceCurve(
        points=tuple(
            CurvePoint(
                k_len=p["k"],
                abs_error=p["abs_error"] if p["converged"] else float("inf"),
                converged=p["converged"],
            )
            for p in body["points"]
        ),
        method=body["method"],
        target_energy=body["target_energy"],
    )
    fileio.save_curve(out / "curve.csv", curve)
    fileio.load_curve_rows(out / "curve.csv")
    _report_sidecar(
        out / "sweep.json",
        "sweep",
        {
            "method": body["method"],
            "target_energy": body["target_energy"],
            "steps_to_stable": body["steps_to_stable"],
            "tol": body["tol"],
            "window": body["window"],
            "outputs": ["curve.csv"],
            "config": body["config"],
        },
    )
    stable = body["steps_to_stable"]
    print(f"sweep: {len(body['points'])} points, stable at K = {stable}")
    return 0


def cmd_bound(args) -> int:
    cfg = load_config(args)
    body = _post(args.server, "/bound", {"config": _config_payload(cfg)})
    out = Path(cfg.out_dir)
    report = BoundReport(
        rows=tuple(
            BoundRow(
                tau_r=r["tau"],
                k_len=r["k"],
                lhs_mean=r["lhs_mean"],
                lhs_std=r["lhs_std"],
                rhs=r["rhs"],
            )
            for r in body["rows"]
        ),
        epsilon=body["epsilon"],
        trials=body["trials"],
        seed=cfg.seed,
    )
    fileio.save_bound(out / "bound.csv", report)
    _report_sidecar(
        out / "bound.json",
        "bound",
        {
            "epsilon": body["epsilon"],
            "trials": body["trials"],
            "rows": len(body["rows"]),
            "outputs": ["bound.csv"],
            "config": body["config"],
        },
    )
    print(f"bound: {len(body['rows'])} rows across K = {sorted({r['k'] for r in body['rows']})}")
    return 0


def cmd_allocate(args) -> int:
    cfg = load_config(args)
    body = _post(args.server, "/allocate", {"config": _config_payload(cfg)})
    out = Path(cfg.out_dir)
    fileio.save_allocation(out / "allocation.csv", body["counts"], body["uniform"])
    _report_sidecar(
        out / "allocate.json",
        "allocate",
        {
            "total": body["total"],
            "assigned": body["assigned"],
            "uniform": body["uniform"],
            "outputs": ["allocation.csv"],
            "config": body["config"],
        },
    )
    print(f"allocate: {body['assigned']} of {body['total']} shots assigned")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _config_payload(cfg: ExperimentConfig) -> dict:
    from .config import inline_spectrum

    # inline file-based spectra so a remote server never reads client paths
    return json.loads(inline_spectrum(cfg).model_dump_json())


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="override config.seed")
    p.add_argument("--out", help="override config.out_dir")
    p.add_argument(
        "--set",
        action="append",
        metavar="PATH=VALUE",
        help="override a config entry via dotted path, e.g. --set noise.epsilon=0.1",
    )
    p.add_argument("--server", help="base URL of a running service (default: in-process)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdodmd",
        description="Ground-state-energy estimation from noisy exponential time series",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate noiseless and noisy trajectories")
    _add_common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("estimate", help="one energy estimate from data or simulation")
    p.add_argument("trajectory", nargs="?", help="trajectory CSV (default: simulate)")
    _add_common(p)
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("sweep", help="error vs fit length on one noisy dataset")
    _add_common(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("bound", help="denoising error bound: Monte-Carlo LHS vs closed form")
    _add_common(p)
    p.set_defaults(fn=cmd_bound)

    p = sub.add_parser("allocate", help="variance-optimal shot allocation")
    _add_common(p)
    p.set_defaults(fn=cmd_allocate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CliError, fileio.FileFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except httpx.HTTPError as exc:
        print(f"error: transport failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
