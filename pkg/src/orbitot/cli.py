"""Batch command-line interface.

Reads a JSON job config describing a pair of distributions, runs the
requested pipeline (cost, map, certify, validate, or sample), and writes a
deterministic result document to stdout or --out.  Exit codes: 0 success,
1 input or numeric error, 2 validation-tolerance breach.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

from .distributions import sample_distribution
from .errors import InvalidParameterError, OrbitotError
from .oracle import halfvec, run_validation
from .orbit_transport import closed_form_cost, optimal_map
from .serialize import (
    JobConfig,
    certificate_to_dict,
    dumps_canonical,
    map_to_dict,
    oracle_to_dict,
    oracle_trial_rows,
    params_to_dict,
    parse_config,
    render_csv,
)

_SAMPLE_STREAM = 7


class _Parser(argparse.ArgumentParser):
    # Exit-code contract: usage errors (unknown flags, bad values) exit 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="orbitot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("run", "run the tasks listed in the config"),
        ("cost", "closed-form transport cost"),
        ("map", "cost and optimal map parameters"),
        ("certify", "cost, map, and optimality certificate"),
        ("validate", "full oracle validation against the closed form"),
        ("sample", "draw from a configured distribution"),
    ):
        p = sub.add_parser(name, help=doc, description=doc)
        p.add_argument("--config", required=True, help="path to a JSON job config")
        p.add_argument("--seed", type=int, default=None, help="override the base seed")
        p.add_argument("--out", default=None, help="write the result here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default=None, dest="fmt")
        p.add_argument("--quiet", action="store_true", help="suppress stderr diagnostics")
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InvalidParameterError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"config {path} is not valid JSON: {exc}") from exc


def _write_output(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out_path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp_path, out_path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def _sample_document(cfg: JobConfig, seed: int, fmt: str):
    if cfg.sample is None:
        raise InvalidParameterError(
            "config has no 'sample' section; add {\"sample\": {\"n\": ...}}"
        )
    params = cfg.params0 if cfg.sample.which == "params0" else cfg.params1
    draws = sample_distribution(params, cfg.sample.n, (seed, _SAMPLE_STREAM))
    if draws.ndim == 1:
        header = ["x"]
        rows = [[v] for v in draws]
    elif draws.ndim == 2:
        header = [f"x{i}" for i in range(draws.shape[1])]
        rows = draws.tolist()
    else:
        d = draws.shape[-1]
        flat = halfvec(draws)
        header = []
        k = 0
        for i in range(d):
            for j in range(i, d):
                weight = "" if i == j else "sqrt2_"
                header.append(f"{weight}m_{i}_{j}")
                k += 1
        rows = flat.tolist()
    if fmt == "json":
        return dumps_canonical(
            {"family": cfg.family, "which": cfg.sample.which, "seed": seed,
             "columns": header, "rows": rows}
        )
    return render_csv(header, rows)


def _stage(label: str):
    # Numeric failures must name the operation that failed.
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, OrbitotError):
                raise type(exc)(f"{label}: {exc}") from exc
            return False

    return _Ctx()


def run_job(cfg: JobConfig, tasks: tuple, seed: int, fmt: str, quiet: bool):
    """Execute tasks for a parsed config; returns (document_text, exit_code)."""
    from .certificates import certify_map

    doc = {"family": cfg.family, "tasks": list(tasks)}
    doc["params0"] = params_to_dict(cfg.family, cfg.params0)
    doc["params1"] = params_to_dict(cfg.family, cfg.params1)
    results: dict = {}
    exit_code = 0

    with _stage("cost"):
        results["cost"] = closed_form_cost(cfg.family, cfg.params0, cfg.params1)
    need_map = any(t in tasks for t in ("map", "certify", "validate"))
    mp = None
    if need_map:
        with _stage("map"):
            mp = optimal_map(cfg.family, cfg.params0, cfg.params1)
            results["map"] = map_to_dict(mp)
    if "certify" in tasks or "validate" in tasks:
        with _stage("certify"):
            cert = certify_map(mp, cfg.family, cfg.params0, cfg.params1)
            results["certificate"] = certificate_to_dict(cert)
    report = None
    if "validate" in tasks:
        v = cfg.validation
        with _stage("validate"):
            report = run_validation(
                cfg.family,
                cfg.params0,
                cfg.params1,
                n_samples=v.n_samples,
                n_trials=v.n_trials,
                base_seed=seed,
                mc_samples=v.mc_samples,
            )
        results["oracle"] = oracle_to_dict(report)
        failures = report.failures(v.kantorovich_rtol)
        results["validation"] = {
            "passed": not failures,
            "kantorovich_rtol": v.kantorovich_rtol,
            "failures": failures,
        }
        if failures:
            exit_code = 2
        if not quiet:
            for stage, secs in report.runtimes.items():
                print(f"[orbitot] {stage}: {secs:.3f}s", file=sys.stderr)
    doc["results"] = results

    if fmt == "csv":
        if report is None:
            raise InvalidParameterError(
                "csv output is defined for the validate and sample commands"
            )
        header, rows = oracle_trial_rows(report)
        return render_csv(header, rows), exit_code
    return dumps_canonical(doc), exit_code


def run(config_path: str, command: str = "run", seed: int | None = None,
        out: str | None = None, fmt: str | None = None, quiet: bool = False) -> int:
    """Programmatic entry point mirroring the CLI; returns the exit code."""
    cfg = parse_config(_load_config(config_path))
    base_seed = cfg.validation.base_seed if seed is None else seed
    if base_seed < 0:
        raise InvalidParameterError(f"seed must be non-negative, got {base_seed}")
    out_path = out if out is not None else cfg.output.path
    chosen_fmt = fmt if fmt is not None else cfg.output.format

    if command == "sample":
        # Samples default to CSV; the config output format governs documents.
        text = _sample_document(cfg, base_seed, fmt if fmt is not None else "csv")
        _write_output(text, out_path)
        return 0

    if command == "run":
        tasks = cfg.tasks
    else:
        tasks = (command,)
    text, code = run_job(cfg, tasks, base_seed, chosen_fmt, quiet)
    _write_output(text, out_path)
    if code == 2 and not quiet:
        print("[orbitot] validation tolerances breached (exit 2)", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return run(
            args.config,
            command=args.command,
            seed=args.seed,
            out=args.out,
            fmt=args.fmt,
            quiet=args.quiet,
        )
    except OrbitotError as exc:
        print(f"orbitot: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"orbitot: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
