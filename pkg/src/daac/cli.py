"""Command-line entry point: ``daac {fit,two-step,sweep,synth,hypothesis}``.

Exit codes: 0 success, 2 usage error or missing input file, 3 malformed or
inconsistent input data, 4 invalid solver or generator configuration,
5 numerical failure (all restarts diverged, degenerate variance).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import analysis, metrics, solver, stats, synth
from .errors import (
    ConfigurationError,
    ConsistencyError,
    DegenerateVarianceError,
    DomainError,
    ParseError,
)
from .ingest import LabeledDataset, load_dataset, load_truth_relations, write_dataset
from .matcore import SparseMatrix
from .report import RunReport, matrix_to_list, relations_to_list, render_table

log = logging.getLogger("daac")

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CONFIG = 4
EXIT_NUMERIC = 5

DEFAULT_LAMBDA_GRID = tuple(10.0**x for x in range(10))
SWEEP_HEADER = ["lambda", "nmi", "ari", "purity", "correct_relations", "total_relations"]


# -- argument parsing ------------------------------------------------------------


def _float_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("grid must not be empty")
    return values


def _add_data_args(p, truth_required=False):
    p.add_argument("--interactions", required=True, help="interactions TSV (src, dst, weight)")
    p.add_argument("--attitudes", required=True, help="mentions TSV (author, target, sentiment)")
    p.add_argument("--labels", required=truth_required, help="user<TAB>label file")
    p.add_argument("--truth-relations", required=truth_required,
                   help="labelA<TAB>labelB<TAB>relation file")
    p.add_argument("--symmetrize-attitudes", action="store_true",
                   help="split each attitude evenly over both directions")


def _add_solver_args(p):
    p.add_argument("--k", type=int, required=True, help="number of communities")
    p.add_argument("--lambda", dest="lam", type=float, default=1e6)
    p.add_argument("--alpha", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--tau", type=float, default=0.05, help="relative threshold for 'none'")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--u-rule", choices=solver.U_RULES, default="gradient")


def _add_output_args(p, formats=("json", "table")):
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("--timing", action="store_true", help="include wall time in the report")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="daac", description="Joint community and signed-relation detection."
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("fit", "detect communities and relations jointly"),
        ("two-step", "baseline: communities from interactions, then aggregate attitudes"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_data_args(p)
        _add_solver_args(p)
        _add_output_args(p)

    p = sub.add_parser("sweep", help="metrics over a grid of lambda values (CSV)")
    _add_data_args(p, truth_required=True)
    _add_solver_args(p)
    p.add_argument("--lambda-grid", type=_float_list, default=list(DEFAULT_LAMBDA_GRID))
    p.add_argument("--alpha-grid", type=_float_list, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="CSV output file (default stdout)")

    p = sub.add_parser("synth", help="write a planted instance in the ingest formats")
    p.add_argument("--preset", choices=["australia-like"])
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--p-in", type=float, default=0.2)
    p.add_argument("--p-out", type=float, default=0.01)
    p.add_argument("--p-att-in", type=float, default=0.1)
    p.add_argument("--p-att-out", type=float, default=0.05)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--relations", help="truth TSV over community names C0..C{k-1}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("hypothesis", help="matched-sampling t-tests on a labeled dataset")
    _add_data_args(p, truth_required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--equal-var", action="store_true", help="pooled-variance Student test")
    p.add_argument("--permutation", action="store_true",
                   help="fall back to an exact permutation test on degenerate variance")
    p.add_argument("--shuffle-relations", action="store_true",
                   help="negative control: randomly permute the truth relations first")
    _add_output_args(p)
    return parser


# -- pipeline pieces ---------------------------------------------------------------


def _load(args):
    return load_dataset(
        args.interactions,
        args.attitudes,
        args.labels,
        args.truth_relations,
        symmetrize_attitudes=args.symmetrize_attitudes,
    )


def _solver_config(args, **overrides):
    cfg = dict(
        k=args.k,
        lam=args.lam,
        alpha=args.alpha,
        tol=args.tol,
        max_iters=args.max_iters,
        restarts=args.restarts,
        seed=args.seed,
        u_rule=args.u_rule,
    )
    cfg.update(overrides)
    return solver.SolverConfig(**cfg)


def _config_echo(config, tau, extra=None):
    echo = {
        "k": config.k,
        "lambda": config.lam,
        "alpha": config.alpha,
        "tol": config.tol,
        "max_iters": config.max_iters,
        "restarts": config.restarts,
        "seed": config.seed,
        "u_rule": config.u_rule,
        "tau": tau,
    }
    echo.update(extra or {})
    return echo


def _evaluate(dataset, assignment, rel_report):
    """Metrics and relation scores when ground truth is available."""
    out = {"community_labels": {}, "metrics": None, "relation_accuracy": None,
           "correct_relations": None, "total_relations": None}
    if dataset.labels is None:
        return out
    truth_labels = dataset.label_list()
    majority = analysis.majority_label(assignment, truth_labels)
    out["community_labels"] = {str(c): lab for c, lab in majority.items()}
    out["metrics"] = metrics.score_all(assignment.tolist(), truth_labels)
    if dataset.truth_relations is not None:
        correct, total = analysis.count_correct_relations(
            rel_report, majority, dataset.truth_relations
        )
        out["correct_relations"], out["total_relations"] = correct, total
        out["relation_accuracy"] = 1.0 if total == 0 else correct / total
    return out


def run_pipeline(dataset, config, tau=0.05, method="daac", extra_config=None):
    """Fit, analyze and score one dataset; returns a :class:`RunReport`."""
    if method == "two-step":
        result = solver.fit(SparseMatrix.empty(dataset.n), dataset.R, config)
    else:
        result = solver.fit(dataset.S, dataset.R, config)
    assignment = analysis.assign(result.U)
    if method == "two-step":
        rel_report = analysis.extract_relations(
            analysis.aggregate_attitudes(dataset.S, assignment), tau
        )
    else:
        rel_report = analysis.extract_relations(result.H, tau)
    _, H_norm = solver.normalize_columns(result.U, result.H)
    scored = _evaluate(dataset, assignment, rel_report)
    labels = {int(c): v for c, v in scored["community_labels"].items()}
    return RunReport(
        method=method,
        config=_config_echo(config, tau, extra_config),
        n=dataset.n,
        k=config.k,
        users=list(dataset.users),
        converged=bool(result.converged),
        iterations=int(result.iterations_used),
        objective=float(result.objective),
        U=matrix_to_list(result.U),
        H=matrix_to_list(result.H),
        H_symmetric=matrix_to_list(rel_report.strength),
        H_normalized=matrix_to_list(H_norm),
        assignment=assignment.tolist(),
        relations=relations_to_list(rel_report, labels or None),
        **scored,
    )


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _render(report, args):
    if args.format == "json":
        return report.to_json()
    color = not args.out and sys.stdout.isatty()
    return render_table(report, color=color)


# -- commands ----------------------------------------------------------------------


def cmd_fit(args, method="daac"):
    start = time.perf_counter()
    dataset = _load(args)
    config = _solver_config(args)
    report = run_pipeline(dataset, config, args.tau, method,
                          {"symmetrize_attitudes": args.symmetrize_attitudes})
    if args.timing:
        report.timing = {"seconds": time.perf_counter() - start}
    _emit(_render(report, args), args.out)
    return report


def cmd_two_step(args):
    return cmd_fit(args, method="two-step")


def _sweep_point(payload):
    dataset, config, tau = payload
    try:
        report = run_pipeline(dataset, config, tau)
    except FloatingPointError as e:
        log.warning("lambda=%g diverged: %s", config.lam, e)
        return None
    return report


def cmd_sweep(args):
    dataset = _load(args)
    alphas = args.alpha_grid or [args.alpha]
    points = [(lam, a) for lam in args.lambda_grid for a in alphas]
    payloads = [
        (dataset, _solver_config(args, lam=lam, alpha=a, seed=args.seed + idx), args.tau)
        for idx, (lam, a) in enumerate(points)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_sweep_point, payloads))
    else:
        reports = [_sweep_point(p) for p in payloads]

    header = list(SWEEP_HEADER)
    if args.alpha_grid:
        header.insert(1, "alpha")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    best = None
    for (lam, a), rep in zip(points, reports):
        if rep is None:
            row = [repr(lam), "nan", "nan", "nan", "", ""]
        else:
            m = rep.metrics
            row = [repr(lam), repr(m["nmi"]), repr(m["ari"]), repr(m["purity"]),
                   rep.correct_relations, rep.total_relations]
            key = (m["nmi"], rep.correct_relations)
            if best is None or key > best[0]:
                best = (key, lam, a)
        if args.alpha_grid:
            row.insert(1, repr(a))
        writer.writerow(row)
    _emit(buf.getvalue(), args.out)
    if best is not None:
        (nmi_v, correct), lam, a = best
        print(f"best lambda={lam:g} alpha={a:g}: nmi={nmi_v:.4f}, "
              f"correct relations={correct}", file=sys.stderr)
    return reports


def _synth_spec(args):
    if args.preset == "australia-like":
        return synth.australia_like_spec(seed=args.seed, noise=args.noise)
    relations = None
    names = tuple(f"C{c}" for c in range(args.k)) if args.k >= 1 else None
    if args.relations:
        truth = load_truth_relations(args.relations)
        index = {name: c for c, name in enumerate(names)}
        unknown = sorted({a for a, _, _ in truth} - set(index))
        if unknown:
            raise ConfigurationError(f"relations file names unknown communities {unknown}")
        table = [list(row) for row in synth.relation_matrix(args.k)]
        for a, b, rel in truth:
            if a != b:
                table[index[a]][index[b]] = rel
        relations = tuple(tuple(row) for row in table)
    return synth.PlantedSpec(
        n=args.n, k=args.k, p_in=args.p_in, p_out=args.p_out, relations=relations,
        p_att_in=args.p_att_in, p_att_out=args.p_att_out, noise=args.noise,
        seed=args.seed, names=names,
    )


def cmd_synth(args):
    instance = synth.generate(_synth_spec(args))
    write_dataset(instance.dataset, args.out_dir)
    print(f"wrote {instance.dataset.n} users to {args.out_dir}", file=sys.stderr)
    return instance


def cmd_hypothesis(args):
    dataset = _load(args)
    if args.shuffle_relations:
        shuffled = synth.shuffle_relations(dataset.truth_relations,
                                           np.random.default_rng(args.seed))
        dataset = LabeledDataset(dataset.users, dataset.R, dataset.S, dataset.labels,
                                 shuffled, dataset.stats)
    stats._require_truth(dataset)
    payload = {
        "schema_version": 1,
        "seed": args.seed,
        "shuffled_relations": bool(args.shuffle_relations),
    }
    failed = False
    for offset, mode in enumerate(stats.MODES):
        try:
            samples, result = stats.run_mode(
                dataset, mode, args.seed + offset, args.equal_var, args.permutation
            )
        except DegenerateVarianceError as e:
            print(f"daac: {mode} mode: {e}", file=sys.stderr)
            payload[mode] = {"error": str(e)}
            failed = True
            continue
        payload[mode] = {
            "pairs": int(samples.T_p.size),
            "skipped": samples.skipped,
            "mean_treated": float(samples.T_p.mean()) if samples.T_p.size else None,
            "mean_control": float(samples.T_r.mean()) if samples.T_r.size else None,
            **result.to_dict(),
        }
    if args.format == "json":
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        lines = []
        for mode in stats.MODES:
            r = payload[mode]
            if "error" in r:
                lines.append(f"{mode:<9} error: {r['error']}")
                continue
            verdict = "rejected" if r["rejected"] else "not rejected"
            lines.append(
                f"{mode:<9} pairs={r['pairs']} t={r['t_statistic']:.4f} "
                f"df={r['degrees_of_freedom']:.4f} p={r['p_value']:.4g} "
                f"log_p={r['log_p_value']:.4f} null {verdict} at {r['reject_at']}"
            )
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    if failed:
        raise DegenerateVarianceError("at least one test could not be computed")
    return payload


COMMANDS = {
    "fit": cmd_fit,
    "two-step": cmd_two_step,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
    "hypothesis": cmd_hypothesis,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        COMMANDS[args.command](args)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as e:
        print(f"daac: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, DomainError, ConsistencyError) as e:
        print(f"daac: input error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ConfigurationError as e:
        print(f"daac: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, DegenerateVarianceError) as e:
        print(f"daac: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
