"""Command-line runner.

Exit status: 0 for a clean run, 2 when the run finished but broke a
diagnostic threshold, 1 for any error (bad flags, bad config, I/O, a step
that failed after every dt halving).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, build_config, parse_entries
from .constitutive import InvalidStateError
from .diagnostics import check_thresholds
from .io import DiagnosticsWriter, emit_snapshot
from .scenarios import build_scenario
from .solver import StepFailure, run

logger = logging.getLogger("quasi_ch")

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2

# flag dest -> config key
_FLAG_KEYS = {
    "scenario": "scenario",
    "nx": "grid.nx",
    "ny": "grid.ny",
    "dt": "solver.dt",
    "t_end": "solver.t_end",
    "seed": "solver.rng_seed",
    "mode": "solver.coupling_mode",
    "out": "output_dir",
    "snapshot_every": "solver.snapshot_every",
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}\n{self.format_usage().strip()}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quasi-ch", description="Run a thermal Cahn-Hilliard mixture scenario.")
    p.add_argument("--config", metavar="PATH", help="flat key = value config file")
    p.add_argument("--scenario", metavar="NAME")
    p.add_argument("--nx", type=int, metavar="N")
    p.add_argument("--ny", type=int, metavar="N")
    p.add_argument("--dt", type=float, metavar="X")
    p.add_argument("--t-end", type=float, metavar="X")
    p.add_argument("--seed", type=int, metavar="N")
    p.add_argument("--mode", metavar="NAME", help="coupling mode")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--snapshot-every", type=int, metavar="N")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, overlaid by the config file, overlaid by flags."""
    entries = {}
    if args.config:
        path = Path(args.config)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
        try:
            entries = parse_entries(text)
        except ConfigError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    for dest, key in _FLAG_KEYS.items():
        value = getattr(args, dest)
        if value is not None:
            entries[key] = str(value)
    return build_config(entries)


def execute(cfg: RunConfig) -> list:
    """Run ``cfg``, writing outputs; return the threshold violations seen."""
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from None

    state0 = build_scenario(cfg)
    every = cfg.solver.snapshot_every
    violations = []
    last = {}

    def snapshot(index, state):
        emit_snapshot(state, cfg.material, out / f"snapshot_{index:06d}.vtk")

    def monitor(index, state, rec, report):
        found = check_thresholds(rec, cfg.policy)
        for v in found:
            logger.warning("step %d: %s", index, v)
        violations.extend(found)
        if cfg.snapshots and (index == 0 or (every and index % every == 0)):
            snapshot(index, state)
        last["index"], last["state"] = index, state

    csv_stream = open(out / "diagnostics.csv", "w", newline="") if cfg.csv_diagnostics else None
    try:
        sinks = [monitor]
        if csv_stream is not None:
            writer = DiagnosticsWriter(csv_stream)
            sinks.append(lambda index, state, rec, report: writer.write(index, rec))
        run(state0, cfg.material, cfg.solver, sinks)
    finally:
        if csv_stream is not None:
            csv_stream.close()

    # always keep the final state, even between snapshot intervals
    index = last["index"]
    if cfg.snapshots and index and not (every and index % every == 0):
        snapshot(index, last["state"])
    return violations


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")

    if not args.config and not args.scenario:
        print("quasi-ch: give --config PATH or --scenario NAME", file=sys.stderr)
        return EXIT_ERROR
    try:
        cfg = resolve_config(args)
        violations = execute(cfg)
    except (ConfigError, StepFailure, InvalidStateError, OSError) as exc:
        print(f"quasi-ch: error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    if violations:
        names = sorted({v.name for v in violations})
        print(f"quasi-ch: {len(violations)} threshold violation(s): {', '.join(names)}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
