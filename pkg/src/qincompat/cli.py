"""Batch command-line front end.

Exit codes: 0 feasible/success, 1 infeasible (or failed verification row),
2 undecided, 64 usage or parse errors, 70 internal errors.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import compat, robustness, serialize, theorems
from .compat import FeasibilityReport, SolverConfig, Verdict
from .devices import ChannelChoi, Povm
from .errors import QincompatError

EXIT_USAGE = 64
EXIT_INTERNAL = 70

_VERDICT_EXIT = {Verdict.FEASIBLE: 0, Verdict.INFEASIBLE: 1, Verdict.UNDECIDED: 2}


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_device(path: str, kinds: tuple[type, ...], label: str):
    try:
        dev = serialize.load_device(path)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as ex:
        _fail(f"cannot parse {label} from {path}: {ex}", EXIT_USAGE)
    if not isinstance(dev, kinds):
        names = "/".join(k.__name__ for k in kinds)
        _fail(f"{label} in {path} is a {type(dev).__name__}, expected {names}", EXIT_USAGE)
    return dev


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    click.echo(text)


def _report_json(report: FeasibilityReport) -> dict:
    witness = None
    if report.witness is not None:
        if hasattr(report.witness, "grid"):
            witness = {
                "dim": report.witness.dim,
                "grid": [
                    [serialize.matrix_to_json(block) for block in row]
                    for row in report.witness.grid
                ],
            }
        else:
            witness = serialize.device_to_json(report.witness)
    return {
        "verdict": report.verdict.value,
        "residual": report.residual,
        "iterations": report.iterations,
        "gap": report.gap,
        "witness": witness,
    }


@click.group()
def main() -> None:
    """Compatibility checks and incompatibility-robustness estimates."""


@main.command()
@click.argument("kind", type=click.Choice(["jm", "chan", "obschan"]))
@click.argument("file_a", type=click.Path(exists=False))
@click.argument("file_b", type=click.Path(exists=False))
@click.option("--tol", type=float, default=1e-7, show_default=True, help="Feasibility residual tolerance.")
@click.option("--infeas-threshold", type=float, default=1e-4, show_default=True)
@click.option("--max-iters", type=int, default=20000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Also write the JSON report here.")
def check(kind, file_a, file_b, tol, infeas_threshold, max_iters, seed, out) -> None:
    """Decide compatibility of the device pair in FILE_A, FILE_B."""
    del seed  # deterministic solvers; accepted for interface uniformity
    try:
        cfg = SolverConfig(feas_tol=tol, infeas_threshold=infeas_threshold, max_iters=max_iters)
    except ValueError as ex:
        _fail(str(ex), EXIT_USAGE)
    if kind == "jm":
        a = _load_device(file_a, (Povm,), "first observable")
        b = _load_device(file_b, (Povm,), "second observable")
        solver = compat.jm_feasible
    elif kind == "chan":
        a = _load_device(file_a, (ChannelChoi,), "first channel")
        b = _load_device(file_b, (ChannelChoi,), "second channel")
        solver = compat.channel_compat_feasible
    else:
        a = _load_device(file_a, (Povm,), "observable")
        b = _load_device(file_b, (ChannelChoi,), "channel")
        solver = compat.obs_channel_feasible
    try:
        report = solver(a, b, cfg)
    except QincompatError as ex:
        _fail(str(ex), EXIT_USAGE)
    except Exception as ex:  # pragma: no cover - defensive
        _fail(f"internal error: {ex}", EXIT_INTERNAL)
    _emit(_report_json(report), out)
    sys.exit(_VERDICT_EXIT[report.verdict])


def _pair_kind(pair) -> str:
    first, second = pair
    if isinstance(first, Povm) and isinstance(second, Povm):
        return "jm"
    if isinstance(first, ChannelChoi) and isinstance(second, ChannelChoi):
        return "chan"
    if isinstance(first, Povm) and isinstance(second, ChannelChoi):
        return "obschan"
    raise ValueError("unsupported device pair combination")


_CLASSIFIERS = {
    "jm": compat.jm_classifier,
    "chan": compat.channel_classifier,
    "obschan": compat.obs_channel_classifier,
}


@main.command(name="robustness")
@click.argument("target_pair", type=click.Path(exists=False))
@click.option("--noise", "noise_files", type=click.Path(), multiple=True, help="Noise pair JSON file (repeatable).")
@click.option("--noise-dir", type=click.Path(), default=None, help="Directory of noise pair JSON files.")
@click.option("--bisect-tol", type=float, default=1e-3, show_default=True)
@click.option("--tol", type=float, default=1e-7, show_default=True)
@click.option("--infeas-threshold", type=float, default=1e-4, show_default=True)
@click.option("--max-iters", type=int, default=20000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def robustness_cmd(target_pair, noise_files, noise_dir, bisect_tol, tol, infeas_threshold, max_iters, seed, out) -> None:
    """Sampled lower bound on the robustness of the pair in TARGET_PAIR."""
    del seed
    try:
        cfg = SolverConfig(feas_tol=tol, infeas_threshold=infeas_threshold, max_iters=max_iters)
    except ValueError as ex:
        _fail(str(ex), EXIT_USAGE)
    paths = [Path(p) for p in noise_files]
    if noise_dir:
        paths.extend(sorted(Path(noise_dir).glob("*.json")))
    if not paths:
        _fail("no noise candidates given (use --noise or --noise-dir)", EXIT_USAGE)
    try:
        target = serialize.load_pair(target_pair)
    except Exception as ex:
        _fail(f"cannot parse target pair: {ex}", EXIT_USAGE)
    try:
        kind = _pair_kind(target)
    except ValueError as ex:
        _fail(str(ex), EXIT_USAGE)
    candidates = []
    for p in paths:
        try:
            cand = serialize.pair_from_json(json.loads(p.read_text()))
        except Exception as ex:
            _fail(f"cannot parse noise pair {p}: {ex}", EXIT_USAGE)
        if _pair_kind(cand) != kind:
            _fail(f"noise pair {p} does not match target kind '{kind}'", EXIT_USAGE)
        candidates.append((str(p), cand))
    oracle = _CLASSIFIERS[kind](cfg)
    best = None
    best_path = None
    for path, cand in candidates:
        est = robustness.relative_robustness(target, cand, oracle, bisect_tol=bisect_tol)
        if best is None or est.value > best.value:
            best, best_path = est, path
    payload = {
        "kind": kind,
        "value": best.value,
        "bracket": list(best.bracket),
        "mode": "K_absolute_sampled",
        "certified": "lower_bound",
        "witness_noise": best_path,
        "n_candidates": len(candidates),
    }
    _emit(payload, out)
    sys.exit(0)


@main.command(name="verify-theorems")
@click.option("--dims", default="2,3", show_default=True, help="Comma-separated dimensions in 2..5.")
@click.option("--tol", type=float, default=1e-7, show_default=True)
@click.option("--infeas-threshold", type=float, default=1e-4, show_default=True)
@click.option("--max-iters", type=int, default=20000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def verify_theorems(dims, tol, infeas_threshold, max_iters, seed, out) -> None:
    """Recompute the closed-form robustness values and validate witnesses."""
    try:
        dim_list = [int(x) for x in dims.split(",") if x.strip()]
    except ValueError:
        _fail(f"cannot parse --dims '{dims}'", EXIT_USAGE)
    if not dim_list or any(d < 2 or d > 5 for d in dim_list):
        _fail("dims must be within 2..5", EXIT_USAGE)
    try:
        cfg = SolverConfig(feas_tol=tol, infeas_threshold=infeas_threshold, max_iters=max_iters)
    except ValueError as ex:
        _fail(str(ex), EXIT_USAGE)
    try:
        reports = theorems.run_theorem_table(dim_list, cfg=cfg, seed=seed)
    except QincompatError as ex:
        _fail(str(ex), EXIT_USAGE)
    rows = []
    all_ok = True
    for r in reports:
        err = abs(r.numeric_estimate - r.closed_form)
        ok = r.witnesses_validated and err <= 2e-3
        all_ok &= ok
        rows.append((r.name, r.d, r.closed_form, r.numeric_estimate, err, ok))
    header = f"{'theorem':<22}{'d':>3}{'closed':>12}{'numeric':>12}{'|err|':>12}  status"
    click.echo(header)
    click.echo("-" * len(header))
    for name, d, closed, numeric, err, ok in rows:
        status = "pass" if ok else "FAIL"
        click.echo(f"{name:<22}{d:>3}{closed:>12.6f}{numeric:>12.6f}{err:>12.2e}  {status}")
    payload = json.loads(theorems.reports_to_json(reports))
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        click.echo(text)
    sys.exit(0 if all_ok else 1)


if __name__ == "__main__":
    main()
