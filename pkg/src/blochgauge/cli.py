"""Command line interface.

Every command prints one JSON report (sorted keys) on stdout and writes its
artifacts into ``--out``.  Exit codes: 0 success, 1 error, 2 obstructed,
3 refinement needed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import BlochGaugeError, InvalidInput, ObstructionError, RefinementNeeded
from .fileio import read_family, scalar_field_columns, write_csv, write_family
from .frames import build_frame, check_frame, fourier_decay
from .invariants import z2_report
from .linalg import unitary_eig_batch
from .logsmith import beta_family, homotopy_from_beta, two_step_log
from .torus import (
    ProjectionFamily,
    SelfAdjointFamily,
    UnitaryFamily,
    validate_matching,
    validate_projections,
    validate_self_adjoint,
)
from .zoo import MATCHING_NAMES, PROJECTION_NAMES, make_matching, make_projections

EXIT_OK, EXIT_ERROR, EXIT_OBSTRUCTED, EXIT_REFINE = 0, 1, 2, 3
COMMANDS = ("validate", "invariants", "log", "frame", "homotopy", "zoo")
CLI_MODES = ("symmetric", "periodic-only")


@dataclass
class RunConfig:
    """Settings of one run; a JSON config file supplies defaults, flags override."""

    command: str
    input: str | None = None
    output: str = "."
    N: int | None = None
    tol: float = 1e-8
    mode: str = "symmetric"
    seed: int = 0
    s: float = 0.05
    retries: int = 8
    slices: int = 9
    name: str | None = None
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise InvalidInput("unknown command", command=self.command)
        if not self.tol > 0:
            raise InvalidInput("tolerance must be positive", tol=self.tol)
        if self.N is not None and (self.N < 2 or self.N % 2):
            raise InvalidInput("grid size must be even and at least 2", N=self.N)
        if self.mode not in CLI_MODES:
            raise InvalidInput("mode must be symmetric or periodic-only", mode=self.mode)
        if not 0.0 < self.s < 1.0:
            raise InvalidInput("budget must lie in (0, 1)", s=self.s)
        if self.retries < 1 or self.slices < 2:
            raise InvalidInput("retries >= 1 and slices >= 2 are required", retries=self.retries, slices=self.slices)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def dumps(report: dict[str, Any]) -> str:
    """Deterministic JSON text of a report."""
    return json.dumps(_jsonable(report), sort_keys=True, indent=2, allow_nan=True)


def _load(cfg: RunConfig):
    if not cfg.input:
        raise InvalidInput("an input family file is required", command=cfg.command)
    fam = read_family(cfg.input)
    if cfg.N is not None and fam.grid.N != cfg.N:
        raise InvalidInput("input grid differs from --grid", file_N=fam.grid.N, requested=cfg.N)
    return fam


def _out(cfg: RunConfig, name: str) -> Path:
    d = Path(cfg.output)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _validate(fam, tol: float):
    if isinstance(fam, UnitaryFamily) and not isinstance(fam, SelfAdjointFamily):
        return validate_matching(fam, tol)
    if isinstance(fam, SelfAdjointFamily):
        return validate_self_adjoint(fam, tol)
    if isinstance(fam, ProjectionFamily):
        return validate_projections(fam, tol)
    raise InvalidInput("frame files are checked by the frame command")


def _matching(cfg: RunConfig) -> UnitaryFamily:
    fam = _load(cfg)
    if not isinstance(fam, UnitaryFamily) or isinstance(fam, SelfAdjointFamily):
        raise InvalidInput("expected a unitary (matching) family")
    rep = validate_matching(fam, cfg.tol)
    if not rep.passed:
        raise InvalidInput("matching family is not valid", report=rep.to_dict())
    return fam


def cmd_validate(cfg: RunConfig) -> tuple[int, dict[str, Any]]:
    fam = _load(cfg)
    rep = _validate(fam, cfg.tol)
    out = {"command": "validate", "input": cfg.input, "report": rep.to_dict()}
    if not rep.passed:
        out["reason"] = "validation-failed"
        return EXIT_ERROR, out
    return EXIT_OK, out


def cmd_invariants(cfg: RunConfig) -> tuple[int, dict[str, Any]]:
    alpha = _matching(cfg)
    if alpha.grid.dim > 2:
        raise InvalidInput("indices are reported for families on T^1 and T^2", dim=alpha.grid.dim)
    rep = z2_report(alpha)
    phi = np.angle(np.linalg.det(alpha.samples))
    phases, _ = unitary_eig_batch(alpha.samples.reshape((-1, alpha.m, alpha.m)))
    cols = scalar_field_columns(alpha.grid, phi, "det_phase")
    cols.update({k: v for k, v in scalar_field_columns(alpha.grid, np.sort(phases, axis=-1), "eigenphase").items() if not k.startswith("k")})
    csv_path = _out(cfg, "tracks.csv")
    write_csv(csv_path, cols)
    return EXIT_OK, {"command": "invariants", "input": cfg.input, "report": rep.to_dict(), "csv": str(csv_path)}


def cmd_log(cfg: RunConfig) -> tuple[int, dict[str, Any]]:
    alpha = _matching(cfg)
    mode = "symmetric" if cfg.mode == "symmetric" and alpha.symmetry is not None else "trs-broken"
    log = two_step_log(alpha, cfg.s, mode, cfg.seed, cfg.retries)
    paths = []
    for i, h in enumerate(log.steps, start=1):
        p = _out(cfg, f"h{i}.fam")
        write_family(p, h)
        paths.append(str(p))
    table = {f"h{i}": r for i, r in enumerate(log.step_residuals(), start=1)}
    return EXIT_OK, {
        "command": "log",
        "input": cfg.input,
        "mode": mode,
        "manifest": {"files": paths, **log.to_dict()},
        "residuals": {"reconstruction": log.residual, "steps": table},
    }


def cmd_frame(cfg: RunConfig) -> tuple[int, dict[str, Any]]:
    P = _load(cfg)
    if not isinstance(P, ProjectionFamily):
        raise InvalidInput("expected a projection family")
    frame = build_frame(P, cfg.mode, cfg.s, cfg.seed)
    rep = check_frame(frame, P, tol=max(cfg.tol, 1e-7))
    decay = fourier_decay(frame)
    fpath, cpath = _out(cfg, "frame.fam"), _out(cfg, "fourier_decay.csv")
    write_family(fpath, frame)
    cpath.write_text(decay["csv"])
    out = {
        "command": "frame",
        "input": cfg.input,
        "mode": cfg.mode,
        "frame": str(fpath),
        "check": rep.to_dict(),
        "construction": frame.report,
        "fourier_decay": {"csv": str(cpath), "decay_exponent": decay["decay_exponent"]},
    }
    if not rep.passed:
        out["reason"] = "frame-check-failed"
        return EXIT_ERROR, out
    return EXIT_OK, out


def cmd_homotopy(cfg: RunConfig) -> tuple[int, dict[str, Any]]:
    alpha = _matching(cfg)
    mode = "symmetric" if cfg.mode == "symmetric" and alpha.symmetry is not None else "trs-broken"
    log = two_step_log(alpha, cfg.s, mode, cfg.seed, cfg.retries)
    beta = beta_family(log)
    ts = np.linspace(0.0, 1.0, cfg.slices)
    path = homotopy_from_beta(beta, ts)
    eye = np.eye(alpha.m)
    slices = []
    for i, (t, fam) in enumerate(zip(ts, path)):
        p = _out(cfg, f"slice_{i:03d}.fam")
        write_family(p, fam, extra={"t": float(t)})
        rep = validate_matching(fam, cfg.tol)
        slices.append({"t": float(t), "path": str(p), "passed": rep.passed, "residuals": rep.to_dict()["residuals"]})
    ends = {
        "start_minus_identity": float(np.max(np.linalg.norm(path[0].samples - eye, 2, axis=(-2, -1)))),
        "end_minus_alpha": float(np.max(np.linalg.norm(path[-1].samples - alpha.samples, 2, axis=(-2, -1)))),
    }
    out = {"command": "homotopy", "input": cfg.input, "mode": mode, "endpoints": ends, "slices": slices, "beta": beta.report()}
    if not all(s["passed"] for s in slices) or max(ends.values()) > cfg.tol:
        out["reason"] = "homotopy-check-failed"
        return EXIT_ERROR, out
    return EXIT_OK, out


def cmd_zoo(cfg: RunConfig) -> tuple[int, dict[str, Any]]:
    if not cfg.name or cfg.name == "list":
        return EXIT_OK, {"command": "zoo", "matching": list(MATCHING_NAMES), "projections": list(PROJECTION_NAMES)}
    params = dict(cfg.params)
    params.setdefault("seed", cfg.seed)
    if cfg.N is not None:
        params["N"] = cfg.N
    if cfg.name in MATCHING_NAMES:
        fam = make_matching(cfg.name, params)
    elif cfg.name in PROJECTION_NAMES:
        fam = make_projections(cfg.name, params)
    else:
        raise InvalidInput("unknown zoo family", name=cfg.name)
    path = _out(cfg, f"{cfg.name}.fam")
    write_family(path, fam, extra={"zoo": cfg.name, "params": _jsonable(params)})
    return EXIT_OK, {"command": "zoo", "name": cfg.name, "params": params, "path": str(path), "validation": _validate(fam, cfg.tol).to_dict()}


HANDLERS = {
    "validate": cmd_validate,
    "invariants": cmd_invariants,
    "log": cmd_log,
    "frame": cmd_frame,
    "homotopy": cmd_homotopy,
    "zoo": cmd_zoo,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blochgauge", description="Symmetric Bloch frames and matching-family invariants.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "zoo":
            p.add_argument("name", nargs="?", default="list", help="catalog family to emit, or 'list'")
            p.add_argument("--params", help="JSON object of family parameters")
        else:
            p.add_argument("input", help="family file")
        p.add_argument("--config", help="JSON file with RunConfig fields")
        p.add_argument("--out", dest="output", help="output directory")
        p.add_argument("--grid", dest="N", type=int, help="grid size N (even)")
        p.add_argument("--tol", type=float)
        p.add_argument("--mode", choices=CLI_MODES)
        p.add_argument("--seed", type=int)
        p.add_argument("--budget", dest="s", type=float, help="perturbation budget s")
        p.add_argument("--retries", type=int)
        if name == "homotopy":
            p.add_argument("--slices", type=int)
    return parser


def make_config(args: argparse.Namespace) -> RunConfig:
    values: dict[str, Any] = {}
    if args.config:
        loaded = json.loads(Path(args.config).read_text())
        if not isinstance(loaded, dict):
            raise InvalidInput("config file must hold a JSON object")
        known = {f.name for f in fields(RunConfig)}
        unknown = sorted(set(loaded) - known)
        if unknown:
            raise InvalidInput("unknown config keys", keys=unknown)
        values.update(loaded)
    for key, val in vars(args).items():
        if key in ("config",) or val is None:
            continue
        if key == "params":
            val = json.loads(val)
        values[key] = val
    values["command"] = args.command
    return RunConfig(**values)


def run(argv: Sequence[str] | None = None) -> tuple[int, dict[str, Any]]:
    """Parse arguments and execute; returns (exit code, report)."""
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
        code, report = HANDLERS[cfg.command](cfg)
        report["config"] = asdict(cfg)
    except ObstructionError as exc:
        return EXIT_OBSTRUCTED, {"command": args.command, **exc.to_dict()}
    except RefinementNeeded as exc:
        return EXIT_REFINE, {"command": args.command, **exc.to_dict()}
    except BlochGaugeError as exc:
        return EXIT_ERROR, {"command": args.command, **exc.to_dict()}
    except (OSError, ValueError) as exc:
        return EXIT_ERROR, {"command": args.command, "reason": "io-or-parse", "message": str(exc)}
    report.setdefault("reason", "ok")
    return code, report


def main(argv: Sequence[str] | None = None) -> int:
    code, report = run(argv)
    print(dumps(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
