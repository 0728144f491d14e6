"""Batch command-line front end.

Modes:
  sample  run weighted chains and emit estimator records (JSON)
  verify  compare Monte Carlo estimates against exact diagonalization (JSON)
  scan    sweep over beta/u/cutoff grids and emit a CSV matrix
  pd      stick-breaking partition statistics and the split-merge cross-check

Outputs embed the full run specification and contain no timestamps, so a
given spec and code version reproduce them byte for byte; wall-clock chatter
goes to stderr.
"""

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import observables as obs
from . import oracle, partitions
from .graph import far_pair, parse_graph_spec
from .sampler import (ModelParams, direct_weight_run, run_chains,
                      run_gillespie, run_chain)

__all__ = ["RunSpec", "run", "main"]


@dataclass
class RunSpec:
    """Fully serializable description of one CLI invocation."""

    mode: str
    graph: str = None
    u: list = None
    beta: list = None
    sweeps: int = 100_000
    burnin: int = None
    thin: int = 10
    chains: int = 1
    seed: int = 0
    out: str = None
    theta: float = None
    samples: int = 100_000
    cutoffs: list = None
    checkpoint: str = None
    extra: dict = field(default_factory=dict)

    def echo(self):
        d = asdict(self)
        d.pop("out")
        d.pop("extra")
        return d


def _parse_int(text):
    value = float(text)
    if value != int(value):
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer count")
    return int(value)


def _parse_float_list(text):
    return [float(tok) for tok in str(text).split(",") if tok.strip()]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="loopsoup",
        description="Monte Carlo laboratory for weighted random loop soups")
    parser.add_argument("--mode", required=True,
                        choices=("sample", "verify", "scan", "pd"))
    parser.add_argument("--graph", help="path:N | cycle:N | torus:AxBxC | complete:N")
    parser.add_argument("--u", type=_parse_float_list,
                        help="coupling in [-1,1]; comma list allowed in scan mode")
    parser.add_argument("--beta", type=_parse_float_list,
                        help="inverse temperature > 0; comma list allowed in scan mode")
    parser.add_argument("--sweeps", type=_parse_int, default=100_000,
                        help="chain sweeps (one sweep = beta*|E| steps); accepts 1e6")
    parser.add_argument("--burnin", type=_parse_int, default=None,
                        help="burn-in sweeps (default sweeps//10)")
    parser.add_argument("--thin", type=_parse_int, default=10)
    parser.add_argument("--chains", type=_parse_int, default=1)
    parser.add_argument("--seed", type=_parse_int, default=0)
    parser.add_argument("--out", default=None, help="output path (default stdout)")
    parser.add_argument("--theta", type=float, default=None,
                        help="stick-breaking parameter for pd mode")
    parser.add_argument("--samples", type=_parse_int, default=100_000,
                        help="direct-sampling / partition sample count; accepts 1e5")
    parser.add_argument("--cutoffs", type=_parse_float_list, default=None,
                        help="comma list of macroscopic length cutoffs")
    parser.add_argument("--checkpoint", default=None,
                        help="write the final chain state here (sample mode, 1 chain)")
    return parser


class UsageError(ValueError):
    pass


def _single(values, name):
    if values is None or len(values) != 1:
        raise UsageError(f"--{name} needs exactly one value in this mode")
    return values[0]


def _require_graph(spec):
    if not spec.graph:
        raise UsageError("--graph is required in this mode")
    return parse_graph_spec(spec.graph)


def _burnin(spec):
    return spec.sweeps // 10 if spec.burnin is None else spec.burnin


def _estimator_records(graph, params, runs, seed, cutoffs):
    x, y = far_pair(graph)
    results = [
        obs.same_loop_probability(runs, x, y),
        obs.direction_correlation(runs, x, y),
        obs.origin_loop_fraction(runs),
        obs.spatial_correlation_sum(runs),
    ]
    nu_results = []
    for cut in cutoffs:
        nu_results.append(obs.nu_estimate(runs, cut))
        nu_results.append(obs.pd_same_element_statistic(runs, cut))
    records = []
    for r in results + nu_results:
        r.params.setdefault("seed", seed)
        records.append(r.to_record())
    table = [obs.nu_relations_table(obs.same_loop_probability(runs, x, y),
                                    obs.nu_estimate(runs, cut), params.u)
             for cut in cutoffs]
    return records, table


def _mode_sample(spec):
    graph = _require_graph(spec)
    params = ModelParams(u=_single(spec.u, "u"), beta=_single(spec.beta, "beta"))
    cutoffs = spec.cutoffs or obs.default_cutoffs(params.beta, graph.n)
    if spec.checkpoint and spec.chains == 1:
        run, state = run_chain(graph, params, spec.sweeps, _burnin(spec),
                               spec.thin, seed=spec.seed, return_state=True)
        runs = [run]
        state.save(spec.checkpoint)
    else:
        runs = run_chains(graph, params, spec.sweeps, _burnin(spec), spec.thin,
                          seed=spec.seed, n_chains=spec.chains)
    records, table = _estimator_records(graph, params, runs, spec.seed, cutoffs)
    payload = {
        "runspec": spec.echo(),
        "acceptance_rate": float(np.mean([r.acceptance_rate() for r in runs])),
        "results": records,
        "nu_relations": table,
    }
    return 0, payload


def _mode_verify(spec):
    graph = _require_graph(spec)
    params = ModelParams(u=_single(spec.u, "u"), beta=_single(spec.beta, "beta"))
    direct, _, _ = direct_weight_run(
        graph, params, spec.samples, np.random.default_rng([spec.seed, 1]))
    runs = run_chains(graph, params, spec.sweeps, _burnin(spec), spec.thin,
                      seed=spec.seed, n_chains=spec.chains)
    x, y = far_pair(graph)
    mc = {
        "partition_weight": direct,
        "same_loop": obs.same_loop_probability(runs, x, y),
        "direction": obs.direction_correlation(runs, x, y),
        "origin_fraction": obs.origin_loop_fraction(runs),
        "spatial_sum": obs.spatial_correlation_sum(runs),
    }
    report = oracle.verify_identities(graph, params.u, params.beta, mc)
    for row in report["rows"]:
        status = "pass" if row["passed"] else "FAIL"
        print(f"[{status}] {row['identity']}: mc={row['mc_mean']} "
              f"oracle={row['oracle']} ({row['n_sigma']:.2f} sigma)",
              file=sys.stderr)
    payload = {"runspec": spec.echo(), "report": report}
    return (0 if report["all_passed"] else 2), payload


def _mode_scan(spec):
    graph = _require_graph(spec)
    if not spec.u or not spec.beta:
        raise UsageError("scan mode needs --u and --beta (comma lists allowed)")
    rows = []
    for u in spec.u:
        for beta in spec.beta:
            params = ModelParams(u=u, beta=beta)
            cutoffs = spec.cutoffs or obs.default_cutoffs(beta, graph.n)
            runs = run_chains(graph, params, spec.sweeps, _burnin(spec),
                              spec.thin, seed=spec.seed, n_chains=spec.chains)
            records, _ = _estimator_records(graph, params, runs, spec.seed,
                                            cutoffs)
            rows.extend(records)
    return 0, rows


def _mode_pd(spec):
    if spec.theta is None:
        raise UsageError("pd mode needs --theta")
    if spec.theta <= 0:
        raise UsageError("--theta must be positive")
    rng = np.random.default_rng([spec.seed, 2])
    n = spec.samples
    stats = np.empty(n)
    first = np.empty(n)
    residual_mean = 0.0
    for i in range(n):
        part = partitions.sample_gem(spec.theta, 400, rng)
        stats[i] = partitions.same_element_probability(part)
        first[i] = part.weights[0]
        residual_mean += part.residual
    sm_stats = {}
    for label, rates in (("2:1", (2.0, 1.0)), ("1:1", (1.0, 1.0))):
        chain_rng = np.random.default_rng([spec.seed, 3, int(rates[0])])
        burn = 20_000
        keep = []
        for step, w in enumerate(partitions.split_merge_reference_chain(
                np.array([1.0]), rates, burn + 200_000, chain_rng)):
            if step >= burn:
                keep.append(float(np.sum(w * w)))
        sm_stats[label] = float(np.mean(keep))
    payload = {
        "runspec": spec.echo(),
        "theta": spec.theta,
        "same_element_mc": float(stats.mean()),
        "same_element_stderr": float(stats.std(ddof=1) / np.sqrt(n)),
        "same_element_analytic": partitions.analytic_same_element(spec.theta),
        "first_weight_mean": float(first.mean()),
        "mean_residual": residual_mean / n,
        "split_merge_same_element": sm_stats,
    }
    return 0, payload


def run(spec):
    """Execute a RunSpec; returns (exit code, payload)."""
    handlers = {"sample": _mode_sample, "verify": _mode_verify,
                "scan": _mode_scan, "pd": _mode_pd}
    return handlers[spec.mode](spec)


def _emit(payload, out_path):
    if isinstance(payload, list):  # CSV rows
        buf = io.StringIO()
        writer = csv.writer(buf)
        cols = ["name", "graph", "u", "beta", "K", "mean", "stderr", "n", "seed"]
        writer.writerow(cols)
        for rec in payload:
            writer.writerow([rec.get(c, "") for c in cols])
        text = buf.getvalue()
    else:
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    spec = RunSpec(mode=args.mode, graph=args.graph, u=args.u, beta=args.beta,
                   sweeps=args.sweeps, burnin=args.burnin, thin=args.thin,
                   chains=args.chains, seed=args.seed, out=args.out,
                   theta=args.theta, samples=args.samples,
                   cutoffs=args.cutoffs, checkpoint=args.checkpoint)
    try:
        code, payload = run(spec)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(payload, spec.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
