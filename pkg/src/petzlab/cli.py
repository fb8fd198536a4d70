"""``petz-lab`` command line: run check suites, compute single quantities, generate ensembles.

Exit codes: 0 success, 1 at least one check failed, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .checks import DELTA_REG, sufficient_instance
from .entropies import (
    alpha_z_renyi,
    measured_relative_entropy,
    p_fidelity,
    relative_entropy,
    weighted_p_norm,
)
from .linalg import load_matrix, matrix_to_json, save_matrix
from .recovery import petz_apply, universal_recovery_apply
from .states import (
    block_projectors,
    comparable_to,
    keyed_rng,
    load_channel,
    make_channel,
    random_isometry_channel,
    random_state,
    regularize,
    validate_channel,
)
from .suite import SuiteConfig, run_suite, write_replays, write_report

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

QUANTITIES = ("rel-entropy", "measured-rel-entropy", "alpha-z", "p-fidelity", "petz", "universal-recovery",
              "weighted-norm")


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="petz-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"petz-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    chk = sub.add_parser("check", help="run inequality checks on seeded ensembles")
    chk.add_argument("--suite", default="all", help="suite name or comma-separated check names")
    chk.add_argument("--dim", type=_ints, default=[2], help="comma-separated dimensions (2..16)")
    chk.add_argument("--instances", type=int, default=10, help="instances per dimension")
    chk.add_argument("--seed", type=int, default=0)
    chk.add_argument("--p", type=_floats, default=[1.0, 2.0], help="p values for the recovery bounds")
    chk.add_argument("--out", required=True, help="report file")
    chk.add_argument("--format", choices=("json", "csv"), default="json")
    chk.add_argument("--timing", action="store_true", help="record runtimes (reports then differ between runs)")
    chk.add_argument("--replay-dir", default=None, help="where failing instances are dumped")
    chk.add_argument("--quiet", action="store_true")

    cmp_ = sub.add_parser("compute", help="evaluate one quantity on matrices read from JSON files")
    cmp_.add_argument("quantity", choices=QUANTITIES + tuple(q.replace("-", "_") for q in QUANTITIES))
    cmp_.add_argument("--rho")
    cmp_.add_argument("--eta")
    cmp_.add_argument("--channel")
    cmp_.add_argument("--x", help="operand matrix for recovery maps and weighted norms")
    cmp_.add_argument("--alpha", type=float)
    cmp_.add_argument("--z", type=float)
    cmp_.add_argument("--unchecked", action="store_true", help="allow alpha-z values outside the default domain")
    cmp_.add_argument("--p", type=float, default=1.0)
    cmp_.add_argument("--w", type=float, default=0.5)
    cmp_.add_argument("--out", help="output file for matrix-valued quantities")

    gen = sub.add_parser("gen", help="write a deterministic ensemble of states and channels")
    gen.add_argument("--spec", required=True, help="ensemble descriptor JSON")
    gen.add_argument("--out", required=True, help="output directory")
    return parser


# ------------------------------------------------------------------ check


def cmd_check(args) -> int:
    try:
        config = SuiteConfig(checks=args.suite, dims=args.dim, instances_per_dim=args.instances, seed=args.seed,
                             p_values=args.p, output_path=args.out, format=args.format, timing=args.timing,
                             replay_dir=args.replay_dir)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    doc, raw = run_suite(config, log=None if args.quiet else print)
    write_report(doc, args.out, args.format)
    if doc["total_failures"]:
        replay_dir = args.replay_dir or os.path.splitext(args.out)[0] + "_failures"
        n = write_replays(raw, replay_dir)
        print(f"{doc['total_failures']} failures; {n} replay directories under {replay_dir}")
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------- compute


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join('--' + m for m in missing)}")


def _fmt(value: float) -> str:
    # twelve decimals for moderate magnitudes, scientific notation otherwise
    value = float(value)
    if value == np.inf:
        return "+inf"
    if value == 0.0 or 1e-4 <= abs(value) < 1e4:
        return f"{value:.12f}"
    return f"{value:.12e}"


def cmd_compute(args) -> int:
    q = args.quantity.replace("_", "-")
    if q in ("rel-entropy", "measured-rel-entropy", "alpha-z", "p-fidelity"):
        _need(args, "rho", "eta")
        rho, eta = load_matrix(args.rho), load_matrix(args.eta)
        if q == "rel-entropy":
            value = relative_entropy(rho, eta)
        elif q == "measured-rel-entropy":
            value = measured_relative_entropy(rho, eta)
        elif q == "alpha-z":
            _need(args, "alpha", "z")
            try:
                value = alpha_z_renyi(rho, eta, args.alpha, args.z, unchecked=args.unchecked)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
        else:
            value = p_fidelity(rho, eta, args.p)
        print(_fmt(value))
        return EXIT_OK
    if q == "weighted-norm":
        _need(args, "x", "rho")
        rho = load_matrix(args.rho)
        eta = load_matrix(args.eta) if args.eta else rho
        print(_fmt(weighted_p_norm(load_matrix(args.x), args.p, args.w, rho, eta)))
        return EXIT_OK
    _need(args, "eta", "channel")
    eta, channel = load_matrix(args.eta), load_channel(args.channel)
    x = load_matrix(args.x) if args.x else channel.apply(eta)
    out = petz_apply(eta, channel, x) if q == "petz" else universal_recovery_apply(eta, channel, x)
    out = 0.5 * (out + out.conj().T)
    if args.out:
        save_matrix(args.out, out)
    else:
        print(json.dumps(matrix_to_json(out)))
    return EXIT_OK


# -------------------------------------------------------------------- gen


def _ensemble_channel(kind: str, dim: int, params: dict, rng):
    if kind in ("random", "random_isometry"):
        return random_isometry_channel(dim, params.get("d_out", dim), params.get("d_env", dim), rng)
    if kind == "unitary":
        return make_channel("unitary", d=dim, seed=rng)
    if kind == "pinching":
        sizes = params.get("blocks")
        if sizes is None:
            cut = int(rng.integers(1, dim))
            sizes = [cut, dim - cut]
        return make_channel("pinching", projectors=block_projectors(sizes))
    if kind == "depolarizing":
        return make_channel("depolarizing", lam=params.get("lam", 0.5), d=dim)
    if kind == "identity":
        return make_channel("identity", d=dim)
    if kind == "partial_trace":
        return make_channel("partial_trace", dims=params["dims"], which=params.get("which", 1))
    if kind == "conditional_expectation":
        return make_channel("conditional_expectation", blocks=params["blocks"])
    if kind == "embedding":
        return make_channel("embedding", d_in=dim, d_out=params.get("d_out", dim + 1))
    raise ValueError(f"unknown channel kind {kind!r}")


def generate_ensemble(desc: dict) -> list[dict]:
    """Instances of an ensemble descriptor as JSON-ready dicts, in index order."""
    try:
        dim, count, seed = int(desc["dim"]), int(desc["count"]), int(desc["seed"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"ensemble descriptor needs integer dim, count and seed: {exc}") from exc
    state_kind = desc.get("state_kind", "mixed")
    channel_kind = desc.get("channel_kind", "random")
    params = desc.get("params", {}) or {}
    delta_reg = float(params.get("delta_reg", DELTA_REG))
    if not 2 <= dim <= 64 or count < 0:
        raise ValueError("dim must lie in 2..64 and count must be non-negative")
    out = []
    for i in range(count):
        rng = keyed_rng(seed, dim, i)
        if state_kind == "sufficient":
            inst = sufficient_instance(dim, rng, i)
            rho, eta, channel = inst.rho.matrix, inst.eta.matrix, inst.channel
        else:
            eta = random_state(dim, rng, "mixed")
            if state_kind == "comparable":
                rho = comparable_to(eta, float(params.get("delta", 0.1)), rng)
            else:
                rho = random_state(dim, rng, state_kind)
            rho, eta = rho.matrix, eta.matrix
            if delta_reg > 0:
                rho, eta = (m if np.linalg.eigvalsh(m)[0] > 1e-12 else regularize(m, delta_reg).matrix
                            for m in (rho, eta))
            channel = _ensemble_channel(channel_kind, dim, params, rng)
        if not validate_channel(channel).passed:
            raise ValueError(f"generated channel {i} failed validation")
        out.append({"rho": matrix_to_json(rho), "eta": matrix_to_json(eta), "channel": channel.to_json()})
    return out


def cmd_gen(args) -> int:
    try:
        with open(args.spec) as fh:
            desc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read ensemble descriptor: {exc}") from exc
    try:
        instances = generate_ensemble(desc)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    os.makedirs(args.out, exist_ok=True)
    seed = int(desc["seed"])
    for i, inst in enumerate(instances):
        for key, obj in inst.items():
            with open(os.path.join(args.out, f"s{seed}-i{i:05d}-{key}.json"), "w") as fh:
                json.dump(obj, fh, sort_keys=True)
    print(f"wrote {len(instances)} instances to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {"check": cmd_check, "compute": cmd_compute, "gen": cmd_gen}[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"petz-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"petz-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
