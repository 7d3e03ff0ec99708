"""Command-line front end: ``steershare {analyze,sweep,simulate,tomo}``.

Exit codes: 0 success, 2 usage or parse error, 3 I/O error, 4 counts too
sparse for a stable estimate.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .entanglement import entanglement_report
from .linalg import StateError, as_density, fidelity, party_name, state_to_dict
from .measurement import (
    StatisticsError,
    all_settings,
    estimate_steering_matrix,
    format_uncertainty,
    simulate_counts,
    tomography_reconstruct,
)
from .states import StateSpecError, depolarize, parse_state
from .steering import classify_configuration, steering_matrix, sweep_region_map, write_sweep_csv

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_STATS = 0, 2, 3, 4


class OutputError(OSError):
    pass


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--state", help="w:a,b,g | wn:N | ghz:mu,nu | prep:t1,t2 | file:PATH")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None, help="default json; csv for sweep")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--shots", type=int, default=100_000, help="per setting; 0 = exact probabilities")
    common.add_argument("--resamples", type=int, default=200)
    common.add_argument("--epsilon", type=float, default=0.0)
    common.add_argument("--resolution", type=int, default=200)
    common.add_argument("--noise", type=float, default=0.0, help="depolarizing strength p")
    common.add_argument(
        "--sigma-k", type=float, default=3.0, help="stderr multiplier k: an arrow needs P + k*stderr < 2"
    )
    common.add_argument("--workers", type=int, default=1)

    parser = argparse.ArgumentParser(prog="steershare", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="exact steering matrix, witness and verdict")
    sub.add_parser("sweep", parents=[common], help="region map CSV over the W-like family")
    sub.add_parser("simulate", parents=[common], help="finite-count estimates with error bars")
    sub.add_parser("tomo", parents=[common], help="simulated tomography and fidelity")
    return parser


def _write(text: str, out: str | None, stdout) -> None:
    if out is None:
        stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {out!r}: {exc}") from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _state(args):
    if not args.state:
        raise StateSpecError("--state is required", "--state")
    state = parse_state(args.state)
    if not 0.0 <= args.noise <= 1.0:
        raise StateSpecError(f"--noise must be in [0, 1], got {args.noise}", str(args.noise))
    if args.noise > 0:
        return depolarize(state, args.noise)
    return state


def _matrix_rows(m, epsilon: float, sigma_k: float) -> list[dict]:
    rows = []
    for v in m.values:
        row = v.to_dict(epsilon, sigma_k)
        row["label"] = v.label
        rows.append(row)
    return rows


def _rows_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def cmd_analyze(args, stdout) -> int:
    state = _state(args)
    rho = as_density(state)
    m = steering_matrix(rho)
    config = classify_configuration(m, args.epsilon)
    rows = _matrix_rows(m, args.epsilon, 0.0)
    if args.format == "csv":
        _write(_rows_csv(rows, ["label", "steerer", "steered", "value", "threshold", "violated"]), args.out, stdout)
        return EXIT_OK
    report = {
        "command": "analyze",
        "state": args.state,
        "noise": args.noise,
        "qubit_count": rho.qubit_count,
        "steering": rows,
        "configuration": {
            "category": config.category,
            "arrows": config.arrow_labels(),
            "in_degree": {party_name(k): d for k, d in enumerate(config.in_degree)},
        },
    }
    if rho.qubit_count == 3:
        report.update(entanglement_report(rho, m, sigma_k=0.0, epsilon=args.epsilon))
    _write(_dump(report), args.out, stdout)
    return EXIT_OK


def cmd_sweep(args, stdout) -> int:
    if args.resolution < 2:
        raise StateSpecError(f"--resolution must be >= 2, got {args.resolution}", "--resolution")
    cells = sweep_region_map(args.resolution, epsilon=args.epsilon, workers=args.workers)
    if args.format == "json":
        text = _dump(
            [
                {
                    "alpha": c.alpha,
                    "beta": c.beta,
                    "gamma": c.gamma,
                    "values": None if c.values is None else list(c.values),
                    "category": c.category,
                }
                for c in cells
            ]
        )
    else:
        buf = io.StringIO()
        write_sweep_csv(cells, buf)
        text = buf.getvalue()
    _write(text, args.out, stdout)
    return EXIT_OK


def _counts(args, rho):
    exact = args.shots == 0
    if args.shots < 0:
        raise StateSpecError(f"--shots must be >= 0, got {args.shots}", "--shots")
    return simulate_counts(
        rho,
        all_settings(rho.qubit_count),
        args.shots,
        args.seed,
        mode="exact" if exact else "multinomial",
        workers=args.workers,
    )


def cmd_simulate(args, stdout) -> int:
    rho = as_density(_state(args))
    rec = _counts(args, rho)
    m = estimate_steering_matrix(rec, args.resamples, args.seed)
    config = classify_configuration(m, args.epsilon, args.sigma_k)
    rows = _matrix_rows(m, args.epsilon, args.sigma_k)
    for row, v in zip(rows, m.values):
        row["notation"] = format_uncertainty(v.value, v.stderr, decimals=2)
    if args.format == "csv":
        cols = ["label", "steerer", "steered", "value", "stderr", "notation", "threshold", "violated"]
        _write(_rows_csv(rows, cols), args.out, stdout)
        return EXIT_OK
    report = {
        "command": "simulate",
        "state": args.state,
        "noise": args.noise,
        "shots": args.shots,
        "seed": args.seed,
        "resamples": args.resamples,
        "sigma_k": args.sigma_k,
        "steering": rows,
        "configuration": {
            "category": config.category,
            "arrows": config.arrow_labels(),
            "in_degree": {party_name(k): d for k, d in enumerate(config.in_degree)},
        },
    }
    if rho.qubit_count == 3:
        report.update(entanglement_report(None, m, args.sigma_k, args.epsilon))
    _write(_dump(report), args.out, stdout)
    return EXIT_OK


def cmd_tomo(args, stdout) -> int:
    state = _state(args)
    target = parse_state(args.state)
    rho = as_density(state)
    rec = _counts(args, rho)
    est = tomography_reconstruct(rec)
    f = fidelity(as_density(target), est)
    report = {
        "command": "tomo",
        "state": args.state,
        "noise": args.noise,
        "shots": args.shots,
        "seed": args.seed,
        "fidelity": f,
        "fidelity_text": f"{f:.6f}",
    }
    if args.out:
        _write(_dump(state_to_dict(est)), args.out, stdout)
        report["state_file"] = args.out
    else:
        report["reconstruction"] = state_to_dict(est)
    if args.format == "csv":
        stdout.write(_rows_csv([report], ["state", "noise", "shots", "seed", "fidelity"]))
    else:
        stdout.write(_dump(report))
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "sweep": cmd_sweep, "simulate": cmd_simulate, "tomo": cmd_tomo}


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.format is None:
        args.format = "csv" if args.command == "sweep" else "json"
    try:
        return COMMANDS[args.command](args, stdout)
    except StateSpecError as exc:
        print(f"error: {exc} (offending token: {exc.token!r})", file=stderr)
        return EXIT_USAGE
    except OutputError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_IO
    except StatisticsError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_STATS
    except (StateError, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
