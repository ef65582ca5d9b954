"""Command-line front end.

    python -m famus run --config base.json --seed 7 --out results/
    python -m famus sweep --axis gamma --values 10,20,50,100 --seeds 20
    python -m famus validate --config base.json
    python -m famus validate-contract menu.json
    python -m famus oracle-check --trials 1000

Exit codes: 0 success, 1 a check failed (oracle mismatch, infeasible
menu), 2 usage or configuration error, 3 output or I/O error.  Errors are
also written to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .channel import pathloss, shannon_rate
from .config import POLICIES, ConfigError, SimConfig, load_config
from .contract import load_menu, menu_report
from .engine import World, axis_field, run, sweep
from .io import OutputExistsError, emit_run, emit_sweep
from .oracles import DEFAULT_TRIALS, oracle_check

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
OUT_ENV = "FAMUS_OUT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="famus", description="Wireless multi-server federated learning delegation simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out=True):
        sp.add_argument("--config", type=Path, help="JSON config file (defaults used if omitted)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--policy", choices=POLICIES, help="override the config policy")
        if out:
            sp.add_argument("--out", type=Path,
                            help=f"output directory (default ${OUT_ENV} or ./famus-out)")
            sp.add_argument("--force", action="store_true", help="overwrite existing output files")

    common(sub.add_parser("run", help="simulate one configuration"))
    sw = sub.add_parser("sweep", help="sweep one axis over several seeds")
    common(sw)
    sw.add_argument("--axis", required=True, help="one of M, N, gamma, V")
    sw.add_argument("--values", required=True, help="comma-separated axis values")
    sw.add_argument("--seeds", type=int, default=20, help="seeds 0..S-1 per value (default 20)")
    sw.add_argument("--workers", type=int, default=1, help="worker processes")
    common(sub.add_parser("validate", help="check a config and print link statistics"), out=False)
    vc = sub.add_parser("validate-contract", help="check a menu JSON for feasibility and IC/IR")
    vc.add_argument("menu", type=Path)
    oc = sub.add_parser("oracle-check", help="compare exact solvers with brute force")
    oc.add_argument("--trials", type=int, help="trials per oracle (default: per-oracle defaults)")
    oc.add_argument("--seed", type=int, default=0)
    return p


def _config(args) -> SimConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else SimConfig()
    over = {}
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "policy", None):
        over["policy"] = args.policy
    return replace(cfg, **over).validate()


def _out_dir(args) -> Path:
    if args.out is not None:
        return args.out
    return Path(os.environ.get(OUT_ENV, "famus-out"))


def _parse_values(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--values must be comma-separated numbers, got {text!r}") from None
    if not vals:
        raise UsageError("--values needs at least one value")
    return vals


def link_report(cfg: SimConfig) -> dict:
    """SNR, rate and type spread of the initial placement towards own servers."""
    world = World(cfg)
    link = cfg.link
    if not len(world.pos):
        return {"clients": 0}
    diff = world.pos - world.servers[world.cells]
    gain = pathloss(np.hypot(diff[:, 0], diff[:, 1]), link.pathloss_ref_gain, link.pathloss_exponent)
    share = link.bandwidth / np.bincount(world.cells, minlength=cfg.num_servers)[world.cells]
    snr_db = 10 * np.log10(link.tx_power * gain / (link.noise_psd * share))
    rate = shannon_rate(share, link.tx_power, gain, link.noise_psd) / 1e6
    gamma = world.channel()[np.arange(len(world.cells)), world.cells]
    q = [0.05, 0.5, 0.95]

    def spread(x):
        return dict(zip(("p5", "p50", "p95"), (float(v) for v in np.quantile(x, q))))

    return {"clients": int(len(world.pos)), "snr_db_no_fading": spread(snr_db), "rate_mbit_s": spread(rate),
            "rate_cost": spread(world.alpha * rate), "data_cost": spread(world.beta * world.data),
            "type": spread(gamma)}


def _print(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False, default=float))


def cmd_run(args) -> int:
    cfg = _config(args)
    result = run(cfg)
    paths = emit_run(result, _out_dir(args), args.force)
    s = result.summary
    _print({"policy": s.policy, "seed": s.seed, "slots": s.slots, "avg_cost": s.avg_cost,
            "avg_accuracy_loss": s.avg_accuracy_loss, "jfi": s.jfi, "files": [str(p) for p in paths]})
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    axis_field(args.axis)
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    rows = sweep(cfg, args.axis, _parse_values(args.values), seeds=args.seeds, workers=args.workers)
    paths = emit_sweep(rows, _out_dir(args), args.force)
    _print({"axis": args.axis, "rows": len(rows), "files": [str(p) for p in paths]})
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _config(args)
    _print({"valid": True, "grid": list(cfg.grid_shape()), "link": link_report(cfg)})
    return EXIT_OK


def cmd_validate_contract(args) -> int:
    try:
        menu, grid = load_menu(args.menu)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed menu file {args.menu}: {exc}") from exc
    report = menu_report(menu, grid)
    _print(report)
    return EXIT_OK if report["feasible"] and report["ir_ok"] and report["ic_ok"] else EXIT_FAIL


def cmd_oracle_check(args, overrides=None) -> int:
    trials = DEFAULT_TRIALS if args.trials is None else args.trials
    if isinstance(trials, int) and trials < 0:
        raise UsageError("--trials must be >= 0")
    results = oracle_check(trials, seed=args.seed, overrides=overrides)
    _print({"ok": all(r.ok for r in results), "oracles": [r.to_dict() for r in results]})
    return EXIT_OK if all(r.ok for r in results) else EXIT_FAIL


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "validate": cmd_validate,
            "validate-contract": cmd_validate_contract, "oracle-check": cmd_oracle_check}


def _fail(kind: str, problems, code: int) -> int:
    problems = problems if isinstance(problems, list) else [str(problems)]
    print(json.dumps({"error": kind, "problems": problems}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except ConfigError as exc:
        return _fail("config", exc.problems, EXIT_USAGE)
    except json.JSONDecodeError as exc:
        return _fail("config", f"invalid JSON: {exc}", EXIT_USAGE)
    except OutputExistsError as exc:
        return _fail("output-exists", str(exc), EXIT_IO)
    except OSError as exc:
        return _fail("io", f"{getattr(exc, 'filename', '') or ''} {exc}".strip(), EXIT_IO)


if __name__ == "__main__":
    sys.exit(main())
