"""Command-line front end.

Every command prints one JSON document ``{"manifest": ..., "result": ...}`` on
stdout. Exit codes: 0 success or pass, 1 checker failure or ordering
violation, 2 usage, input or precondition errors.
"""
import argparse
import csv
import dataclasses
import datetime
import hashlib
import json
import logging
import os
import platform
import sys

import numpy as np

from . import __version__
from . import kernels as K
from .analysis import (LyapunovSpec, compare_mfpt_coupled, empirical_stationary,
                       estimate_mfpt, product_form_stationary, tv_distance, verify_drift,
                       DistributionTable)
from .bundles import BUILDERS, build
from .conditions import CHECKERS, GroupPartition, make_pair
from .coupling import CouplingConfig, default_seed, replicate_coupled, simulate_coupled
from .errors import CrnError
from .model import StateSet, load_model, network_to_dict, serialize_model
from .order import OrderSpec

log = logging.getLogger("crncompare")


class RunManifest:
    def __init__(self, command, config, seed=None, inputs=()):
        self.command = command
        self.config = config
        self.seed = seed
        self.inputs = {p: _digest(p) for p in inputs if p}

    def to_dict(self):
        import numba
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "versions": {"crncompare": __version__, "numpy": np.__version__,
                         "numba": numba.__version__, "python": platform.python_version(),
                         "backend": K.BACKEND},
            "inputs": self.inputs,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        }


def _digest(path):
    with open(path, "rb") as fh:
        return "sha256:" + hashlib.sha256(fh.read()).hexdigest()


def _emit(manifest, result):
    doc = {"manifest": manifest.to_dict(), "result": result}
    sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


# argument parsing helpers -------------------------------------------------------------

def _state(text):
    text = text.strip()
    vals = json.loads(text) if text.startswith("[") else text.split(",")
    return tuple(int(v) for v in vals)


def _caps(text):
    if text is None:
        return None
    text = text.strip()
    if text.startswith("["):
        return [None if v is None else int(v) for v in json.loads(text)]
    if "," in text:
        return [None if v.strip() in ("", "none", "None", "-") else int(v) for v in text.split(",")]
    return int(text)


def _gamma(text):
    if text is None:
        return None
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            return StateSet(states=json.load(fh))
    return StateSet(predicate=text)


def _groups(text):
    if text is None:
        return None
    blocks = [b for b in text.replace(" ", "").split(";") if b]
    return GroupPartition.from_one_based([[int(j) for j in b.split(",")] for b in blocks])


def _order(text):
    if text is None:
        return None
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            return OrderSpec.of(json.load(fh))
    return OrderSpec.of(json.loads(text))


def _kv(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise CrnError(f"expected name=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _seed(args):
    return default_seed() if args.seed is None else args.seed


def _config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "threads")}


# commands ---------------------------------------------------------------------------------

def cmd_check(args):
    a = load_model(args.model_a)
    b = load_model(args.model_b)
    pair = make_pair(a, b, _order(args.order))
    fn = CHECKERS[args.theorem]
    trunc = _caps(args.truncation)
    if args.theorem in ("3.3", "S.2"):
        gp = _groups(args.groups)
        rep = fn(pair, gp, truncation=trunc) if args.theorem == "3.3" else fn(pair, gp, trunc)
    else:
        rep = fn(pair, truncation=trunc)
    _emit(RunManifest("check", _config(args), None, [args.model_a, args.model_b]), rep.to_dict())
    return 0 if rep.passed else 1


def _coupling_cfg(args, **extra):
    return CouplingConfig(mode=args.mode, horizon=args.T, seed=_seed(args),
                          groups=_groups(args.groups), **extra)


def cmd_simulate(args):
    a = load_model(args.model_a)
    b = load_model(args.model_b)
    pair = make_pair(a, b, _order(args.order))
    x0 = _state(args.x0)
    x0b = _state(args.x0b) if args.x0b else x0
    gamma = _gamma(args.gamma)
    manifest = RunManifest("simulate", _config(args), _seed(args), [args.model_a, args.model_b])
    if args.csv:
        cfg = _coupling_cfg(args, record=args.record)
        runs = [simulate_coupled(pair, x0, x0b, cfg, gamma, replicate=r) for r in range(args.reps)]
        _write_paths(args.csv, runs, a.d)
        with open(args.csv + ".manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        summaries = [r.summary() for r in runs]
        ordered = [r.ordered_throughout for r in runs]
    else:
        cfg = _coupling_cfg(args, record="none")
        summ = replicate_coupled(pair, x0, x0b, cfg, args.reps, gamma, args.threads)
        summaries = [summ.run(r) for r in range(summ.n)]
        ordered = summ.ordered.tolist()
    result = {
        "n_replicates": args.reps,
        "ordered_fraction": float(np.mean(ordered)),
        "n_violations": int(len(ordered) - sum(ordered)),
        "runs": summaries if args.reps <= args.max_listed else summaries[:args.max_listed],
        "csv": args.csv,
    }
    _emit(manifest, result)
    return 0 if all(ordered) else 1


def _write_paths(path, runs, d):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["replicate", "chain", "time"] + [f"x{i + 1}" for i in range(d)])
        for r, run in enumerate(runs):
            for chain, p in (("x", run.path_x), ("xbreve", run.path_xbreve)):
                for t, s in zip(p.times, p.states):
                    w.writerow([r, chain, repr(float(t))] + [int(v) for v in s])


def cmd_mfpt(args):
    net = load_model(args.model)
    est = estimate_mfpt(net, _state(args.x0), _gamma(args.gamma), args.T, args.reps,
                        _seed(args), args.threads)
    _emit(RunManifest("mfpt", _config(args), _seed(args), [args.model]), est.to_dict())
    return 0


def cmd_mfpt_compare(args):
    a = load_model(args.model_a)
    b = load_model(args.model_b)
    pair = make_pair(a, b, _order(args.order))
    x0 = _state(args.x0)
    x0b = _state(args.x0b) if args.x0b else x0
    cfg = _coupling_cfg(args)
    rep = compare_mfpt_coupled(pair, x0, x0b, _gamma(args.gamma), cfg, args.reps,
                               _caps(args.truncation), args.threads)
    _emit(RunManifest("mfpt-compare", _config(args), _seed(args), [args.model_a, args.model_b]),
          rep.to_dict())
    return 0 if rep.pathwise_ok else 1


def cmd_stationary(args):
    net = load_model(args.model)
    if args.truncation:
        net = net.with_caps(_caps(args.truncation))
    dist = empirical_stationary(net, _state(args.x0), args.T, args.burn_in, _seed(args), args.batches)
    _emit(RunManifest("stationary", _config(args), _seed(args), [args.model]), dist.to_dict())
    return 0


def _load_dist(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    rows = doc.get("result", doc)["distribution"]
    return DistributionTable([r["state"] for r in rows], [r["mass"] for r in rows])


def cmd_stationary_oracle(args):
    dist = product_form_stationary(args.Etot, args.kappas, args.caps)
    result = dist.to_dict()
    if args.compare:
        result["tv_to_compare"] = tv_distance(dist, _load_dist(args.compare))
    _emit(RunManifest("stationary-oracle", _config(args), None, [args.compare]), result)
    return 0


def cmd_drift(args):
    if args.example:
        bundle = build(args.example, **_kv(args.param))
        net = load_model(args.model) if args.model else bundle.network
        spec = bundle.lyapunov
        if spec is None:
            raise CrnError(f"example {args.example!r} has no bundled Lyapunov function")
    else:
        if not (args.model and args.V):
            raise CrnError("give --model and --V, or --example")
        net = load_model(args.model)
        spec = LyapunovSpec(args.V, args.mode, c=args.c, d=args.d,
                            c_prime=args.c_prime, d_prime=args.d_prime)
    rep = verify_drift(net, spec, _caps(args.truncation))
    out = rep.to_dict()
    out["lyapunov"] = spec.to_dict()
    _emit(RunManifest("drift", _config(args), None, [args.model]), out)
    return 0 if rep.passed else 1


def cmd_demo(args):
    bundle = build(args.id, **_kv(args.param))
    net = bundle.network
    if args.variant is not None:
        over = _kv(args.variant) or bundle.default_variant(args.order)
        net = bundle.variant(**over)
    if args.order != "main":
        net = dataclasses.replace(net, order_matrix=bundle.order(args.order).A)
    if args.info:
        doc = {"bundle": bundle.to_dict(), "model": network_to_dict(net)}
        sys.stdout.write(json.dumps(doc, indent=2, default=_jsonable) + "\n")
    else:
        sys.stdout.write(serialize_model(net))
    return 0


# parser ----------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="crncompare", description=(
        "Compare stochastic reaction networks: check coupling conditions, run coupled "
        "simulations and estimate passage times, stationary laws and drift."))
    p.add_argument("--log-level", default="WARNING", help="logging level (default WARNING)")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    def common_seed(sp):
        sp.add_argument("--seed", type=int, default=None,
                        help="64-bit seed (default: $SCRN_SEED or built-in)")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads for replicates (results do not depend on this)")

    def pair_args(sp):
        sp.add_argument("--model-a", required=True, help="base model file (rates Upsilon)")
        sp.add_argument("--model-b", required=True, help="variant model file (rates Upsilon-breve)")
        sp.add_argument("--order", help="order matrix as JSON or a JSON file (default: from model-a)")

    def coupling_args(sp):
        sp.add_argument("--x0", required=True, help="initial base state, e.g. 3,0,2,0")
        sp.add_argument("--x0b", help="initial variant state (default: x0)")
        sp.add_argument("--T", type=float, default=10.0, help="horizon (default 10)")
        sp.add_argument("--reps", type=int, default=1, help="number of replicates")
        sp.add_argument("--mode", choices=["per-index", "grouped"], default="per-index")
        sp.add_argument("--groups", help="1-based blocks for grouped mode, e.g. '3,1;4,2;5'")
        common_seed(sp)

    sp = sub.add_parser("check", help="run a condition checker on a model pair")
    pair_args(sp)
    sp.add_argument("--theorem", required=True, choices=sorted(CHECKERS))
    sp.add_argument("--groups", help="1-based blocks, e.g. '1,3;2,4;5' (3.3 defaults to equal A v_j)")
    sp.add_argument("--truncation", help="cap M for every coordinate, or a list like 12,12,,")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("simulate", help="coupled simulation of a model pair")
    pair_args(sp)
    coupling_args(sp)
    sp.add_argument("--record", choices=["accepted", "potential"], default="accepted")
    sp.add_argument("--gamma", help="target set: predicate like 'x2>=3' or a JSON file of states")
    sp.add_argument("--csv", help="write paths as CSV (replicate,chain,time,x1..xd)")
    sp.add_argument("--max-listed", type=int, default=100, help="runs listed in the JSON report")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("mfpt", help="Monte Carlo mean first passage time (SSA)")
    sp.add_argument("--model", required=True)
    sp.add_argument("--x0", required=True)
    sp.add_argument("--gamma", required=True)
    sp.add_argument("--T", type=float, default=1000.0, help="censoring horizon")
    sp.add_argument("--reps", type=int, default=1000)
    common_seed(sp)
    sp.set_defaults(func=cmd_mfpt)

    sp = sub.add_parser("mfpt-compare", help="paired passage times from coupled runs")
    pair_args(sp)
    coupling_args(sp)
    sp.add_argument("--gamma", required=True)
    sp.add_argument("--truncation", help="box used to classify gamma on infinite spaces")
    sp.set_defaults(func=cmd_mfpt_compare)

    sp = sub.add_parser("stationary", help="occupation-time stationary estimate")
    sp.add_argument("--model", required=True)
    sp.add_argument("--x0", required=True)
    sp.add_argument("--T", type=float, default=1e5, help="total simulated time")
    sp.add_argument("--burn-in", type=float, default=None, help="default 10%% of T")
    sp.add_argument("--batches", type=int, default=20)
    sp.add_argument("--truncation", help="restrict the model to a cap box first")
    common_seed(sp)
    sp.set_defaults(func=cmd_stationary)

    sp = sub.add_parser("stationary-oracle", help="product-form law of the open enzyme network")
    sp.add_argument("--Etot", type=int, required=True)
    sp.add_argument("--kappas", type=float, nargs=6, required=True, metavar="K")
    sp.add_argument("--caps", type=int, nargs=2, required=True, metavar="C")
    sp.add_argument("--compare", help="stationary report (JSON) to compare against in TV")
    sp.set_defaults(func=cmd_stationary_oracle)

    sp = sub.add_parser("drift", help="verify a Foster-Lyapunov drift inequality")
    sp.add_argument("--model")
    sp.add_argument("--example", choices=sorted(BUILDERS), help="use a bundled Lyapunov function")
    sp.add_argument("--param", action="append", help="example parameter name=value")
    sp.add_argument("--V", help="Lyapunov function expression over x1..xd and parameters")
    sp.add_argument("--mode", choices=["negative-drift", "exponential"], default="negative-drift")
    sp.add_argument("--c", default="1")
    sp.add_argument("--d", default=None)
    sp.add_argument("--c-prime", default=None)
    sp.add_argument("--d-prime", default=None)
    sp.add_argument("--truncation")
    sp.set_defaults(func=cmd_drift)

    sp = sub.add_parser("demo", help="emit a bundled example as a model file")
    sp.add_argument("id", choices=sorted(BUILDERS))
    sp.add_argument("--param", action="append", help="parameter name=value")
    sp.add_argument("--variant", nargs="*", default=None,
                    help="emit the variant; name=value overrides or none for the default relation")
    sp.add_argument("--order", default="main", help="order matrix to embed (main, si1, si2)")
    sp.add_argument("--info", action="store_true", help="also print bundle metadata")
    sp.set_defaults(func=cmd_demo)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    if not getattr(args, "func", None):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except (CrnError, OSError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        sys.stdout.write(json.dumps({"error": type(e).__name__, "message": str(e)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
