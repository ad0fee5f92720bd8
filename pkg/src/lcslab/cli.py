"""Command-line harness.

Usage: ``lcslab <command> --config <path> [--out <path>] [--seed <u64>]``
with commands verify, betti, energy, intersections, psi, nonsqueeze, all.
Tables go out as CSV, reports as JSON.  Exit code 0 means every check
passed, 1 means some check failed, 2 means an inconclusive run (for
example a non-transverse intersection or a rejected candidate).

Each command checks exactly the configured instant and parameters;
sweeping over times or radii is a loop for the caller, not a claim made by
a single run.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import asymptotic, experiments, tamarkin
from .experiments import ExperimentConfig

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INCONCLUSIVE = 2


def _load_config(args, command: str) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_json(Path(args.config), experiment=command)
    else:
        cfg = _default_config(command)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.out = args.out
    return cfg


def _default_config(command: str) -> ExperimentConfig:
    if command in ("intersections", "psi"):
        return ExperimentConfig(
            experiment=command, model="s1_exact",
            hamiltonian={"name": "sin_perturbation", "epsilon": 0.1})
    if command == "nonsqueeze":
        return ExperimentConfig(
            experiment=command, model="r1_s1_dz",
            hamiltonian={"name": "nsq_identity"},
            knobs={"R1": 1.5, "R2": 0.6, "k": 2})
    if command == "betti":
        return ExperimentConfig(experiment=command, model="s1_dtheta",
                                hamiltonian={"name": "zero"}, knobs={"k_max": 5})
    return ExperimentConfig(experiment=command, hamiltonian={"name": "bump_cos"})


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_verify(cfg: ExperimentConfig) -> int:
    cfg.knobs.setdefault("rows", [
        "rho_factorization", "TcDc", "liouville_pullback", "dbeta_squared",
        "diagram_eq", "deck_equivariance_eq", "deck_nonequivariance_cl"])
    summary = experiments.cmd_run_all(cfg)
    _emit("\n".join(summary.to_csv_lines()), cfg.out)
    return EXIT_PASS if summary.all_pass else EXIT_FAIL


def _cmd_betti(cfg: ExperimentConfig) -> int:
    model = experiments.equivariant_model_for(cfg.model)
    est = asymptotic.estimate_cj(model, k_max=int(cfg.knob("k_max", 5)),
                                 field_name=str(cfg.knob("field", "F2")))
    lines = ["k,j,b_j,normalized"]
    for row in est.csv_rows():
        lines.append(",".join(str(v) for v in row))
    _emit("\n".join(lines), cfg.out)
    return EXIT_PASS


def _cmd_energy(cfg: ExperimentConfig) -> int:
    reports = {}
    ok = True
    for R in (0.5, 1.0, 2.0):
        rep = tamarkin.energy_fibered(tamarkin.ball_sheaf(2, R))
        expected = math.pi * R * R / 2.0
        ok &= abs(rep.energy - expected) < 1e-3
        reports[f"ball_R{R}"] = json.loads(rep.to_json())
        reports[f"ball_R{R}"]["expected"] = expected
    squeeze = tamarkin.verify_squeeze_bound(tamarkin.ball_sheaf(2, 1.0), 1.0)
    ok &= squeeze.satisfied and squeeze.margin > 0
    reports["squeeze"] = json.loads(squeeze.to_json())
    reports["config"] = cfg.resolved()
    _emit(json.dumps(reports, indent=2), cfg.out)
    return EXIT_PASS if ok else EXIT_FAIL


def _verdict_exit(verdict: str) -> int:
    if verdict in ("pass", "consistent"):
        return EXIT_PASS
    if verdict in ("inconclusive", "rejected", "suspect"):
        return EXIT_INCONCLUSIVE
    return EXIT_FAIL


def _cmd_intersections(cfg: ExperimentConfig) -> int:
    report = experiments.cmd_intersections(cfg)
    _emit(report.to_json(), cfg.out)
    return _verdict_exit(report.verdict)


def _cmd_psi(cfg: ExperimentConfig) -> int:
    report = experiments.cmd_psi_correspondence(cfg)
    _emit(report.to_json(), cfg.out)
    return _verdict_exit(report.verdict)


def _cmd_nonsqueeze(cfg: ExperimentConfig) -> int:
    report = experiments.cmd_nonsqueeze(cfg)
    _emit(report.to_json(), cfg.out)
    return _verdict_exit(report.verdict)


def _cmd_all(cfg: ExperimentConfig) -> int:
    summary = experiments.cmd_run_all(cfg)
    _emit("\n".join(summary.to_csv_lines()), cfg.out)
    return EXIT_PASS if summary.all_pass else EXIT_FAIL


COMMANDS = {
    "verify": _cmd_verify,
    "betti": _cmd_betti,
    "energy": _cmd_energy,
    "intersections": _cmd_intersections,
    "psi": _cmd_psi,
    "nonsqueeze": _cmd_nonsqueeze,
    "all": _cmd_all,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="lcslab",
        description="verification kernels for locally conformally symplectic rigidity")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON experiment config")
        p.add_argument("--out", default=None, help="output path (CSV or JSON)")
        p.add_argument("--seed", type=int, default=None, help="RNG seed override")
    args = parser.parse_args(argv)
    cfg = _load_config(args, args.command)
    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
