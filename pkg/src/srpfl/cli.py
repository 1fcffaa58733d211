"""Command-line surface: run, compare, verify, gen.

Exit codes are a stable contract: 0 success, 1 configuration error,
2 non-convergence, 3 verification failure.  Trace CSVs use the frozen
schema ``stage,round,n,round_time,cumulative_time,dist`` with 12
significant digits and LF line endings so byte-level diffing detects
any nondeterminism.
"""

import argparse
import statistics
import sys
from pathlib import Path

import numpy as np

from . import engine, linalg, straggler, synthesis
from .config import load_config
from .engine import RoundRecord
from .errors import ConfigError, NonConvergence, SrpflError

CSV_HEADER = "stage,round,n,round_time,cumulative_time,dist"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NONCONVERGENCE = 2
EXIT_VERIFY = 3


def _fmt(x):
    return f"{float(x):.12g}"


def trace_to_csv(trace):
    lines = [CSV_HEADER]
    for r in trace.records:
        lines.append(
            f"{r.stage},{r.round_index},{r.n},{_fmt(r.round_time)},"
            f"{_fmt(r.cumulative_time)},{_fmt(r.dist)}"
        )
    return "\n".join(lines) + "\n"


def parse_trace_csv(text):
    lines = text.strip().split("\n")
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"bad trace header: {lines[0] if lines else '<empty>'!r}")
    records = []
    for line in lines[1:]:
        stage, rnd, n, rt, cum, dist = line.split(",")
        records.append(RoundRecord(
            stage=int(stage), round_index=int(rnd), n=int(n),
            round_time=float(rt), cumulative_time=float(cum), dist=float(dist),
        ))
    return records


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)


def summary_block(trace):
    lines = [
        f"rounds          = {len(trace.records)}",
        f"total_time      = {_fmt(trace.total_time())}",
        f"init_dist       = {_fmt(trace.init_dist)}",
        f"final_dist      = {_fmt(trace.final_dist)}",
        f"epsilon         = {_fmt(trace.epsilon)}",
        f"eta             = {_fmt(trace.eta)}",
        f"a               = {_fmt(trace.a)}",
        f"sigma_min_star  = {_fmt(trace.sigma_min_star)}",
        f"sigma_max_star  = {_fmt(trace.sigma_max_star)}",
        f"reached_target  = {'yes' if trace.reached_target else 'no'}",
        f"config_digest   = {trace.config_digest}",
    ]
    return "\n".join(lines) + "\n"


def cmd_run(args):
    config = load_config(args.config, args.override, args.seed)
    trace = engine.run(config)
    out = Path(args.out)
    _write(out / "trace.csv", trace_to_csv(trace))
    _write(out / "summary.txt", summary_block(trace))
    sys.stdout.write(summary_block(trace))
    return EXIT_OK


def cmd_compare(args):
    config = load_config(args.config, args.override, args.seed)
    seeds = [config.seed + i for i in range(config.sweep_seeds)]
    results = engine.run_sweep(config, seeds)
    rows = ["seed,algorithm,rounds,completion_time,final_dist,epsilon,a"]
    ratios, t_srpfl, t_base = [], [], []
    for i, seed in enumerate(seeds):
        srpfl_trace = results[engine.ALGO_SRPFL][i]
        base_trace = results[engine.ALGO_FEDREP_FULL][i]
        report = engine.speedup_report(srpfl_trace, base_trace, srpfl_trace.epsilon)
        ratios.append(report.ratio)
        t_srpfl.append(report.t_srpfl)
        t_base.append(report.t_baseline)
        for name, trace, t in (
            (engine.ALGO_SRPFL, srpfl_trace, report.t_srpfl),
            (engine.ALGO_FEDREP_FULL, base_trace, report.t_baseline),
        ):
            rows.append(
                f"{seed},{name},{len(trace.records)},{_fmt(t)},"
                f"{_fmt(trace.final_dist)},{_fmt(trace.epsilon)},{_fmt(trace.a)}"
            )
    mean_a = statistics.fmean(tr.a for tr in results[engine.ALGO_SRPFL])
    upper, lower, ratio_bound = engine.analytic_speedup_bound(
        config.n_total, config.n0, config.c_hat, mean_a, config.comm_cost * config.lam,
    )
    mean_s, mean_b = statistics.fmean(t_srpfl), statistics.fmean(t_base)
    block = [
        f"seeds                 = {len(seeds)}",
        f"mean_time_srpfl       = {_fmt(mean_s)}",
        f"mean_time_fedrep_full = {_fmt(mean_b)}",
        f"mean_ratio            = {_fmt(statistics.fmean(ratios))}",
        f"ratio_of_means        = {_fmt(mean_s / mean_b)}",
        f"mean_a                = {_fmt(mean_a)}",
        f"analytic_upper_srpfl  = {_fmt(upper / config.lam)}",
        f"analytic_lower_fedrep = {_fmt(lower / config.lam)}",
        f"analytic_ratio_bound  = {_fmt(ratio_bound)}",
    ]
    out = Path(args.out)
    _write(out / "compare.csv", "\n".join(rows) + "\n")
    _write(out / "compare_summary.txt", "\n".join(block) + "\n")
    sys.stdout.write("\n".join(block) + "\n")
    return EXIT_OK


def _check_order_stat_mc(trials=100_000, n=64, j=32, lam=1.0, tol=0.02, seed=123):
    rng = np.random.default_rng(seed)
    draws = rng.exponential(1.0 / lam, size=(trials, n))
    observed = float(np.mean(np.partition(draws, j - 1, axis=1)[:, j - 1]))
    expected = straggler.expected_order_stat(n, j, lam)
    err = abs(observed - expected) / expected
    return err <= tol, f"order statistic ({n},{j}): relative error {err:.4f} (tol {tol})"


def _check_kernel_invariants(seed=321):
    rng = np.random.default_rng(seed)
    for _ in range(25):
        d = int(rng.integers(2, 9))
        k = int(rng.integers(1, d + 1))
        a = rng.standard_normal((d, k))
        q, r = linalg.thin_qr(a)
        if np.linalg.norm(q @ r - a) > 1e-9 * max(1.0, np.linalg.norm(a)):
            return False, "QR reconstruction exceeded tolerance"
        if np.linalg.norm(q.T @ q - np.eye(k)) > 1e-10:
            return False, "QR output not orthonormal"
        if np.any(np.diag(r) <= 0):
            return False, "QR sign convention violated"
        b2, _ = linalg.thin_qr(rng.standard_normal((d, k)))
        dist = linalg.principal_angle_dist(q, b2)
        if not 0.0 <= dist <= 1.0:
            return False, "principal-angle distance left [0, 1]"
        if linalg.principal_angle_dist(q, q) > 1e-12:
            return False, "self distance not zero"
        if k > 1:
            qq, _ = linalg.thin_qr(rng.standard_normal((k, k)))
        else:
            qq = np.array([[-1.0]])
        if abs(linalg.principal_angle_dist(q @ qq, b2) - dist) > 1e-10:
            return False, "rotation invariance violated"
    return True, "QR + subspace invariants hold on 25 random instances"


def _check_contraction(config):
    trace = engine.run(config)
    gt = synthesis.gen_ground_truth(
        config.d, config.k, config.n_clients, config.sigma, config.seed
    )
    report = engine.verify_contraction(trace, gt, trace.eta, config.n0)
    ok = report.fraction_satisfied >= 0.95 and report.worst_violation <= 0.05
    return ok, (
        f"contraction: {report.n_satisfied}/{report.n_rounds} rounds satisfied "
        f"({report.fraction_satisfied:.3f}), worst violation {report.worst_violation:.4f}"
    )


def cmd_verify(args):
    config = load_config(args.config, args.override, args.seed)
    checks = [
        ("order_statistics_monte_carlo", lambda: _check_order_stat_mc()),
        ("kernel_invariants", lambda: _check_kernel_invariants()),
        ("contraction_inequality", lambda: _check_contraction(config)),
    ]
    failed = None
    for name, fn in checks:
        ok, detail = fn()
        sys.stdout.write(f"{'PASS' if ok else 'FAIL'} {name}: {detail}\n")
        if not ok and failed is None:
            failed = name
    if failed is not None:
        sys.stderr.write(f"verification failed: {failed}\n")
        return EXIT_VERIFY
    return EXIT_OK


def cmd_gen(args):
    config = load_config(args.config, args.override, args.seed)
    gt = synthesis.gen_ground_truth(
        config.d, config.k, config.n_clients, config.sigma, config.seed
    )
    out = Path(args.out)
    path = out / "model.txt" if out.suffix == "" else out
    path.parent.mkdir(parents=True, exist_ok=True)
    synthesis.save_model(path, gt)
    sys.stdout.write(f"wrote ground-truth model to {path}\n")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="srpfl",
        description="Simulation laboratory for straggler-resilient shared-representation learning",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("run", cmd_run), ("compare", cmd_compare), ("verify", cmd_verify), ("gen", cmd_gen),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a key=value config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=".", help="output directory (or file for gen)")
        p.add_argument(
            "--override", action="append", default=[], metavar="KEY=VALUE",
            help="override a config field; repeatable",
        )
        p.set_defaults(handler=fn)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except NonConvergence as exc:
        sys.stderr.write(f"non-convergence: {exc}\n")
        return EXIT_NONCONVERGENCE
    except SrpflError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


def console_main():
    raise SystemExit(main())
