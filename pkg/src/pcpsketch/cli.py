"""Command-line front end.

Exit status: 0 on success, 1 when a guarantee check fails, 2 on input or
parameter errors.
"""
from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import experiments as ex
from . import matio
from .errors import PCPError, ParameterError
from .sketching import apply_sketch, build_sampling_plan
from .synthetic import generate
from .verifier import verify_theorem

COMMANDS = ("sketch", "verify", "experiment", "kmeans-demo")
EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: Optional[str] = None
    generate: Optional[str] = None
    k: int = 3
    eps: float = 0.5
    delta: float = 0.1
    scheme: str = "leverage"
    s: Optional[int] = None
    s_grid: Optional[str] = None
    trials: int = 100
    x_samples: int = 50
    seed: int = 0
    threads: int = 1
    output: Optional[str] = None
    format: str = "json"

    def validate(self):
        if self.command not in COMMANDS:
            raise ParameterError(f"unknown command {self.command!r}")
        if not 0.0 < self.eps <= 1.0:
            raise ParameterError(f"--eps must lie in (0, 1], got {self.eps}")
        if not 0.0 < self.delta < 1.0:
            raise ParameterError(f"--delta must lie in (0, 1), got {self.delta}")
        if self.k < 1:
            raise ParameterError(f"--k must be >= 1, got {self.k}")
        if self.trials < 1:
            raise ParameterError(f"--trials must be >= 1, got {self.trials}")
        if self.x_samples < 0:
            raise ParameterError(f"--x-samples must be >= 0, got {self.x_samples}")
        if self.s is not None and self.s < 1:
            raise ParameterError(f"--s must be >= 1, got {self.s}")
        if self.threads < 1:
            raise ParameterError(f"--threads must be >= 1, got {self.threads}")
        if self.format not in ("json", "csv"):
            raise ParameterError(f"--format must be json or csv, got {self.format!r}")
        if (self.input is None) == (self.generate is None) and self.command != "kmeans-demo":
            raise ParameterError("give exactly one of --input or --generate")
        if self.input is not None and self.generate is not None:
            raise ParameterError("give exactly one of --input or --generate")


def load_matrix(cfg: RunConfig) -> np.ndarray:
    if cfg.input is not None:
        return matio.read_matrix(cfg.input)
    spec = cfg.generate or "mixture:50x400:clusters=3"
    return generate(spec, cfg.seed)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _header(cfg: RunConfig, s: int) -> dict:
    return {
        "command": cfg.command,
        "input": cfg.input if cfg.input is not None else (cfg.generate or "mixture:50x400:clusters=3"),
        "scheme": cfg.scheme,
        "k": cfg.k,
        "eps": cfg.eps,
        "delta": cfg.delta,
        "s": s,
        "seed": cfg.seed,
    }


def _cmd_sketch(cfg: RunConfig, a):
    setup = ex.prepare_scheme(a, cfg.k, cfg.scheme, cfg.eps, cfg.delta, s=cfg.s)
    plan = build_sampling_plan(setup.probs, setup.s, cfg.seed)
    if cfg.format == "csv":
        buf = io.StringIO()
        np.savetxt(buf, apply_sketch(plan, setup.a), delimiter=",", fmt="%.17g")
        return buf.getvalue(), EXIT_OK
    return _dumps(plan.to_dict()), EXIT_OK


def _cmd_verify(cfg: RunConfig, a):
    setup = ex.prepare_scheme(a, cfg.k, cfg.scheme, cfg.eps, cfg.delta, s=cfg.s)
    plan = build_sampling_plan(setup.probs, setup.s, cfg.seed)
    check = verify_theorem(
        setup.a, plan, setup.sigma_tilde, cfg.k,
        x_samples=cfg.x_samples, seed=cfg.seed, threads=cfg.threads, svd=setup.svd,
    )
    out = _header(cfg, setup.s)
    out["x_samples"] = cfg.x_samples
    out.update(check.to_dict())
    if cfg.format == "csv":
        text = _report_table(check.report, cfg.eps)
    else:
        text = _dumps(out)
    return text, EXIT_OK if check.holds else EXIT_FAILED


def _report_table(report, eps) -> str:
    labels = {"lhs1": "spectral Gram", "lhs2": "cross term", "lhs3": "residual Gram", "lhs4": "residual norm"}
    buf = io.StringIO()
    rows = [
        {"condition": key, "what": labels[key], "value": getattr(report, key), "target_eps": eps}
        for key in ("lhs1", "lhs2", "lhs3", "lhs4")
    ]
    rows.append({"condition": "eps_effective", "what": "normalized max", "value": report.eps_effective, "target_eps": eps})
    rows.append({"condition": "certified_error", "what": "bound", "value": report.certified_error, "target_eps": eps})
    ex.write_csv_rows(buf, rows)
    return buf.getvalue()


def _cmd_experiment(cfg: RunConfig, a):
    setup = ex.prepare_scheme(a, cfg.k, cfg.scheme, cfg.eps, cfg.delta, s=cfg.s)
    buf = io.StringIO()
    if cfg.format == "csv":
        grid = [int(v) for v in cfg.s_grid.split(",")] if cfg.s_grid else [setup.s]
        rows = ex.error_vs_s(setup, grid, cfg.trials, cfg.seed, cfg.eps, threads=cfg.threads)
        ex.write_csv_rows(buf, rows)
        failed = any(r["failure_rate"] > ex.binomial_band(cfg.delta, cfg.trials) for r in rows if r["s"] >= setup.s)
        return buf.getvalue(), EXIT_FAILED if failed else EXIT_OK
    records = ex.run_scheme_trials(setup, cfg.trials, cfg.seed, x_samples=cfg.x_samples, threads=cfg.threads)
    ex.write_jsonl(buf, records)
    rate = sum(r["eps_effective"] > cfg.eps for r in records) / len(records)
    return buf.getvalue(), EXIT_FAILED if rate > ex.binomial_band(cfg.delta, cfg.trials) else EXIT_OK


def _cmd_kmeans(cfg: RunConfig, a):
    records = ex.kmeans_demo(a, cfg.k, cfg.eps, cfg.delta, cfg.trials, cfg.seed, threads=cfg.threads)
    limit = 5.0 * cfg.eps
    worst = max(max(r["max_gap_random"], r["max_gap_lloyd"]) for r in records)
    buf = io.StringIO()
    if cfg.format == "csv":
        ex.write_csv_rows(buf, records)
    else:
        out = _header(cfg, records[0]["s"])
        out["scheme"] = "leverage"
        out["trials"] = cfg.trials
        out["max_gap"] = worst
        out["gap_limit"] = limit
        out["holds"] = worst <= limit
        out["records"] = records
        buf.write(_dumps(out))
    return buf.getvalue(), EXIT_OK if worst <= limit else EXIT_FAILED


_HANDLERS = {
    "sketch": _cmd_sketch,
    "verify": _cmd_verify,
    "experiment": _cmd_experiment,
    "kmeans-demo": _cmd_kmeans,
}


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    """Execute one command and write its report; returns the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        cfg.validate()
        a = load_matrix(cfg)
        text, status = _HANDLERS[cfg.command](cfg, a)
    except (PCPError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INPUT
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcpsketch", description="Projection-cost preserving row-sampling sketches.")
    parser.add_argument("command", choices=COMMANDS)
    src = parser.add_mutually_exclusive_group()
    src.add_argument("--input", help="matrix file (.csv or .mtx)")
    src.add_argument("--generate", help='generator spec, e.g. "powerlaw:300x40:alpha=1.0"')
    parser.add_argument("--k", type=int, default=3, help="target rank")
    parser.add_argument("--eps", type=float, default=0.5)
    parser.add_argument("--delta", type=float, default=0.1)
    parser.add_argument("--scheme", choices=("uniform", "leverage", "ridge"), default="leverage")
    parser.add_argument("--s", type=int, default=None, help="override the sample size")
    parser.add_argument("--s-grid", default=None, help="comma-separated sample sizes (experiment, csv)")
    parser.add_argument("--trials", type=int, default=100)
    parser.add_argument("--x-samples", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--output", default=None)
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(**{k.replace("-", "_"): v for k, v in vars(args).items()})
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
