"""Suite runner: fans (check, dim, index) jobs out and assembles reports in a fixed order."""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .checks import CHECK_PARAMS, P_DEPENDENT, REGISTRY, SUITES, GapReport
from .linalg import matrix_to_json
from .quadrature import DEFAULT_RULE
from .states import QuantumChannel

MAX_SUITE_DIM = 16
SLACK_REL = 1e-7


@dataclass
class SuiteConfig:
    checks: list = field(default_factory=lambda: list(REGISTRY))
    dims: list = field(default_factory=lambda: [2])
    instances_per_dim: int = 10
    seed: int = 0
    p_values: list = field(default_factory=lambda: [1.0, 2.0])
    output_path: str | None = None
    format: str = "json"
    timing: bool = False
    replay_dir: str | None = None

    def __post_init__(self):
        self.checks = resolve_checks(self.checks)
        if not self.dims or any(int(d) < 2 or int(d) > MAX_SUITE_DIM for d in self.dims):
            raise ValueError(f"dimensions must lie in 2..{MAX_SUITE_DIM}")
        if self.instances_per_dim < 1:
            raise ValueError("instances per dimension must be positive")
        if any(p < 1 for p in self.p_values):
            raise ValueError("p values must be at least 1")
        if self.format not in ("json", "csv"):
            raise ValueError(f"unknown format {self.format!r}")

    def to_json(self) -> dict:
        return {
            "checks": self.checks,
            "dims": [int(d) for d in self.dims],
            "instances_per_dim": self.instances_per_dim,
            "seed": self.seed,
            "p_values": [float(p) for p in self.p_values],
            "format": self.format,
        }


def resolve_checks(names) -> list[str]:
    if isinstance(names, str):
        names = [names]
    out = []
    for name in names:
        for part in str(name).split(","):
            part = part.strip().replace("-", "_")
            if not part:
                continue
            if part in SUITES:
                out.extend(SUITES[part])
            elif part in REGISTRY:
                out.append(part)
            else:
                raise ValueError(f"unknown check {part!r}; known: {', '.join(list(SUITES) + list(REGISTRY))}")
    return list(dict.fromkeys(out))


def _job(args) -> list[GapReport]:
    name, seed, dim, index, p_values = args
    return REGISTRY[name](seed, dim, index, p_values)


def pool_size() -> int:
    try:
        return max(1, int(os.environ.get("PETZLAB_THREADS", "1")))
    except ValueError:
        return 1


def run_check(name: str, config: SuiteConfig, executor=None) -> tuple[list[GapReport], float]:
    jobs = [(name, config.seed, int(d), i, tuple(config.p_values))
            for d in config.dims for i in range(config.instances_per_dim)]
    start = time.perf_counter()
    if executor is None:
        batches = [_job(j) for j in jobs]
    else:
        batches = list(executor.map(_job, jobs, chunksize=max(1, len(jobs) // 64)))
    elapsed = 1000.0 * (time.perf_counter() - start)
    return [r for batch in batches for r in batch], elapsed


def summarize(name: str, reports: list[GapReport], runtime_ms: float | None, p_values=()) -> dict:
    params = dict(CHECK_PARAMS.get(name, {}))
    if name in P_DEPENDENT:
        params["p"] = [float(p) for p in p_values]
    margins = np.array([r.margin for r in reports], dtype=float)
    finite = margins[np.isfinite(margins)]
    return {
        "check": name,
        "params": params,
        "instances": len(reports),
        "min_margin": float(finite.min()) if finite.size else None,
        "mean_margin": float(finite.mean()) if finite.size else None,
        "failures": [r.instance_id for r in reports if not r.passed],
        "slack_rel": SLACK_REL,
        "runtime_ms": runtime_ms,
        "results": [r.to_json() for r in reports],
    }


def run_suite(config: SuiteConfig, log=print) -> tuple[dict, dict[str, list[GapReport]]]:
    """Run every configured check; returns the report document and the raw reports."""
    workers = pool_size()
    executor = ProcessPoolExecutor(workers) if workers > 1 else None
    per_check, raw = [], {}
    try:
        for name in config.checks:
            reports, ms = run_check(name, config, executor)
            raw[name] = reports
            summary = summarize(name, reports, round(ms, 3) if config.timing else None, config.p_values)
            per_check.append(summary)
            if log is not None:
                mm = summary["min_margin"]
                log(f"{name}: {summary['instances']} instances, min margin "
                    f"{mm if mm is None else format(mm, '.3e')}, failures {len(summary['failures'])}")
    finally:
        if executor is not None:
            executor.shutdown()
    doc = {
        "version": __version__,
        "config": config.to_json(),
        "quadrature": DEFAULT_RULE.to_json(),
        "checks": per_check,
        "total_failures": sum(len(c["failures"]) for c in per_check),
    }
    return doc, raw


def write_report(doc: dict, path: str, fmt: str = "json") -> None:
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["check", "instance_id", "params", "lhs", "rhs", "margin", "slack", "pass"])
        for check in doc["checks"]:
            for r in check["results"]:
                writer.writerow([r["check"], r["instance_id"], json.dumps(r["params"], sort_keys=True),
                                 repr(r["lhs"]), repr(r["rhs"]), repr(r["margin"]), repr(r["slack"]), r["pass"]])


def _replay_value(v):
    if isinstance(v, QuantumChannel):
        return v.to_json()
    if isinstance(v, np.ndarray) and v.ndim == 2 and v.shape[0] == v.shape[1]:
        return matrix_to_json(v)
    if isinstance(v, (list, tuple)) and v and isinstance(v[0], np.ndarray):
        return [matrix_to_json(x) for x in v]
    return v


def write_replays(raw: dict[str, list[GapReport]], directory: str) -> int:
    """Dump the inputs of every failed report; returns the number written."""
    count = 0
    for name, reports in raw.items():
        for r in reports:
            if r.passed:
                continue
            target = os.path.join(directory, name, r.instance_id)
            os.makedirs(target, exist_ok=True)
            for key, value in (r.replay or {}).items():
                with open(os.path.join(target, f"{key}.json"), "w") as fh:
                    json.dump(_replay_value(value), fh)
            with open(os.path.join(target, "report.json"), "w") as fh:
                json.dump(r.to_json(), fh, indent=1, sort_keys=True)
            count += 1
    return count
