"""Command-line interface: ``eightvertex <command> [options]``.

Every command prints a JSON report (or writes it to ``--out``).  Failures
print ``{"error": <code>, "message": ...}`` to stderr and exit with

    2 parse or usage error, 3 region, 4 infeasible, 5 budget, 1 other.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .amplifier import amplify, contraction_probe, growth_report
from .errors import EightVertexError, GraphError, NoNonnegativeSolution
from .exact import Region, compose_construction, stratum_masses
from .fpras import approximate_Z
from .graph import Graph, compile_graph, local_patterns
from .io import read_graph
from .mcmc import default_batch, default_burnin, initial_state, run_chain, sample_even_many, transition_matrix
from .model import PATTERN_CLASS, Params, region_classify, solve_congestion_weights, solve_weight_function

TIMESTAMP_KEY = "generated_at"


# ---------------------------------------------------------------------------
# argument helpers


def parse_params(text: str) -> Params:
    try:
        return Params.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_seeds(text: str) -> list[int]:
    """``N`` means seeds ``0..N-1``; a comma list (``7,`` for one seed) is literal."""
    text = text.strip()
    try:
        if "," not in text:
            n = int(text)
            if n < 1:
                raise ValueError
            return list(range(n))
        seeds = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("seed list is empty")
    return seeds


def parse_eps(text: str) -> float:
    try:
        eps = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad eps {text!r}") from None
    if not 0 < eps < 1:
        raise argparse.ArgumentTypeError("eps must lie in (0, 1)")
    return eps


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dump_report(report: dict, out: Optional[str]) -> str:
    report = dict(report)
    report[TIMESTAMP_KEY] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    text = json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def _load(args) -> Graph:
    if not args.input:
        raise GraphError("--input is required")
    g = read_graph(args.input)
    if getattr(args, "params", None) is not None:
        g = g.with_params(args.params)
        compile_graph(g)
    return g


def _params_arg(args) -> Params:
    if getattr(args, "values", None):
        if len(args.values) != 4:
            raise GraphError("expected four parameters a b c d")
        try:
            return Params(*(float(v) for v in args.values))
        except ValueError as exc:
            raise GraphError(str(exc)) from None
    if getattr(args, "params", None) is None:
        raise GraphError("parameters required (positional a b c d or --params)")
    return args.params


# ---------------------------------------------------------------------------
# commands


def cmd_exact(args) -> dict:
    g = _load(args)
    m = stratum_masses(g, cap=args.cap)
    return {
        "command": "exact",
        "Z0": m.z0,
        "Z2": m.z2,
        "Z4": m.z4,
        "ratio": m.ratio,
        "n_deg4": g.n_deg4,
        "n_links": len(g.links),
    }


def cmd_classify(args) -> dict:
    p = _params_arg(args)
    flags = region_classify(p)
    rep = {"command": "classify", "params": list(p.as_tuple()), **flags.as_dict()}
    try:
        rep["weights"] = list(solve_weight_function(p).values)
    except NoNonnegativeSolution:
        rep["weights"] = None
    try:
        rep["congestion_weights"] = list(solve_congestion_weights(p).values)
    except NoNonnegativeSolution:
        rep["congestion_weights"] = None
    return rep


def cmd_compose(args) -> dict:
    g = _load(args)
    composed = compose_construction(g)
    closure = {}
    for region in Region:
        if region is Region.PLANAR and not g.planar:
            continue
        if all(region.contains(g.nodes[i].params) for i in g.deg4_nodes):
            closure[region.value] = region.contains(composed)
    return {
        "command": "compose",
        "composed": list(composed.as_tuple()),
        "regions": region_classify(composed).as_dict(),
        "closure": closure,
    }


def cmd_sample(args) -> dict:
    g = _load(args)
    cg = compile_graph(g)
    burnin = default_burnin(g) if args.burnin is None else args.burnin
    batch = default_batch(g) if args.batch is None else args.batch
    runs = []
    for i, seed in enumerate(args.seeds):
        rng = np.random.default_rng(seed)
        states = sample_even_many(g, rng, args.samples, burnin=burnin, batch=batch, max_steps=args.max_steps)
        pats = local_patterns(cg, states)
        freqs = {}
        for row, v in enumerate(cg.deg4):
            counts = {"a": 0, "b": 0, "c": 0, "d": 0}
            for pat, n in zip(*np.unique(pats[:, row], return_counts=True)):
                counts["abcd"[PATTERN_CLASS[int(pat)]]] += int(n)
            freqs[g.nodes[v].id] = {k: c / len(states) for k, c in counts.items()}
        runs.append({"seed": seed, "class_frequencies": freqs})
        if args.trace and i == 0:
            tr = run_chain(g, args.trace_steps, np.random.default_rng(seed), initial_state(g),
                           trace_every=args.trace_every, trace_states=True)
            tr.trace.to_csv(args.trace)
    return {"command": "sample", "samples": args.samples, "burnin": burnin, "batch": batch,
            "seeds": args.seeds, "runs": runs}


def cmd_estimate(args) -> dict:
    g = _load(args)
    estimates = []
    for seed in args.seeds:
        est = approximate_Z(
            g, args.eps, np.random.default_rng(seed), mode=args.mode, c0=args.c0,
            samples=args.samples, burnin=args.burnin, stride=args.stride,
            replicas=args.replicas, seed=seed,
        )
        estimates.append(est.to_dict())
    rep = {"command": "estimate", "mode": args.mode, "eps": args.eps, "seeds": args.seeds,
           "estimates": estimates}
    if args.exact:
        z = stratum_masses(g).z0
        rep["Z_exact"] = z
        rep["within_eps"] = sum(abs(e["Z_hat"] - z) <= args.eps * z for e in estimates)
    return rep


def cmd_amplify(args) -> dict:
    p = _params_arg(args)
    amp = amplify(p, args.k)
    rep = {"command": "amplify", "params": list(p.as_tuple()), "k": args.k,
           "log_ratios": amp.log_ratios, "final_logs": list(amp.final.logs), "final_L": amp.final.L}
    a, b, c, d = p.as_tuple()
    if a > b + c + d and a > 0 and d > 0:
        try:
            rep["growth"] = growth_report(p, max(args.k, 12)).as_dict()
        except EightVertexError as exc:
            rep["growth"] = {"error": exc.code, "message": str(exc)}
        n, path = contraction_probe(p, args.eps)
        rep["contraction"] = {"eps": args.eps, "N": n, "s": path}
    if args.trace:
        amp.to_csv(args.trace)
    return rep


def cmd_mixing(args) -> dict:
    g = _load(args)
    rep = transition_matrix(g, max_states=args.max_states)
    return {"command": "mixing", **rep.as_dict()}


COMMANDS = {
    "exact": cmd_exact,
    "classify": cmd_classify,
    "compose": cmd_compose,
    "sample": cmd_sample,
    "estimate": cmd_estimate,
    "amplify": cmd_amplify,
    "mixing": cmd_mixing,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eightvertex", description="Zero-field eight-vertex model toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, graph=True):
        if graph:
            p.add_argument("--input", "-i", help="graph file")
        p.add_argument("--params", type=parse_params, help="a,b,c,d (overrides every deg4 node)")
        p.add_argument("--out", "-o", help="write the JSON report here instead of stdout")
        return p

    p = common(sub.add_parser("exact", help="exact stratum masses by enumeration"))
    p.add_argument("--cap", type=int, default=1 << 30, help="enumeration cap")

    p = common(sub.add_parser("classify", help="region flags and weight functions"), graph=False)
    p.add_argument("values", nargs="*", help="a b c d")

    common(sub.add_parser("compose", help="composed parameters of a 4-ary construction"))

    p = common(sub.add_parser("sample", help="even orientations from the chain"))
    p.add_argument("--seeds", type=parse_seeds, default=[0])
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--burnin", type=int)
    p.add_argument("--batch", type=int, help="thinning stride in steps")
    p.add_argument("--max-steps", type=int, help="step budget after burn-in (exit 5 when exceeded)")
    p.add_argument("--trace", help="CSV trace of the first seed's chain")
    p.add_argument("--trace-every", type=int, default=100)
    p.add_argument("--trace-steps", type=int, default=100_000)

    p = common(sub.add_parser("estimate", help="self-reduction estimate of Z"))
    p.add_argument("--mode", choices=("general", "planar"), default="general")
    p.add_argument("--eps", type=parse_eps, default=0.1)
    p.add_argument("--seeds", type=parse_seeds, default=[0])
    p.add_argument("--samples", type=int, help="samples per reduction step")
    p.add_argument("--c0", type=float, default=64.0)
    p.add_argument("--burnin", type=int)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--exact", action="store_true", help="also enumerate Z for comparison")

    p = common(sub.add_parser("amplify", help="iterate the amplifier map"), graph=False)
    p.add_argument("values", nargs="*", help="a b c d")
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--eps", type=parse_eps, default=1e-3)
    p.add_argument("--trace", help="CSV sweep (k, log_r, s)")

    p = common(sub.add_parser("mixing", help="exact kernel diagnostics on tiny instances"))
    p.add_argument("--max-states", type=int, default=10_000)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = COMMANDS[args.command](args)
    except EightVertexError as exc:
        err = {"error": exc.code, "message": str(exc)}
        if isinstance(exc, GraphError) and exc.line is not None:
            err["line"] = exc.line
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return exc.exit_code
    except (ValueError, OSError) as exc:
        code = "io" if isinstance(exc, OSError) else "value"
        sys.stderr.write(json.dumps({"error": code, "message": str(exc)}, sort_keys=True) + "\n")
        return 2
    dump_report(report, args.out)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
