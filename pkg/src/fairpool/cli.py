"""Command-line entry point: ``fairpool validate | aggregate | predict | fairness-check``.

Exit codes: 0 success, 1 domain failure (invalid model, fairness violation),
2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .aggregation import AggregationConfig, Order, Rule, TieBreak, aggregate
from .distributions import Categorical
from .dsl import parse_model
from .errors import FairpoolError
from .formats import EncodingTable, parse_encoding, parse_evidence, parse_fairness_spec
from .graph import format_dag, parse_dag
from .montecarlo import (DEFAULT_ABS_TOL, DEFAULT_SAMPLES, FairFeatureSet,
                         check_counterfactual_fairness, fair_predict, kde,
                         predict_full_evidence, samples_csv)
from .pooling import PoolingKind, PoolingOperator, decision_report, report_json

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return value


def _tie_break(text: str) -> TieBreak:
    try:
        return TieBreak.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fairpool", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="parse model, spec, encoding and evidence files")
    p.add_argument("paths", nargs="+", type=Path)

    def pipeline(p, *, sampling: bool):
        p.add_argument("--models", nargs="+", type=Path, required=True)
        p.add_argument("--spec", type=Path, required=True)
        p.add_argument("--rule", choices=[r.value for r in Rule], default=Rule.STRICT_MAJORITY.value)
        p.add_argument("--order", choices=[o.value for o in Order],
                       default=Order.POOLING_REMOVAL.value)
        p.add_argument("--tie-break", type=_tie_break, default=TieBreak(),
                       help="'lexicographic' (default) or 'random:SEED'")
        p.add_argument("--no-prune", action="store_true",
                       help="keep vertices with no path to the predictor")
        p.add_argument("--samples", type=_positive_int, default=DEFAULT_SAMPLES)
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--out", type=Path, help="directory for output artifacts")
        if sampling:
            p.add_argument("--encoding", type=Path)
            p.add_argument("--evidence", type=Path, required=True)
            p.add_argument("--dag", type=Path, help="precomputed fair diagram (else aggregate)")
            p.add_argument("--mode", choices=["fair", "unfair"], default="fair")

    pipeline(sub.add_parser("aggregate", help="pool the expert graphs into a fair diagram"),
             sampling=False)
    p = sub.add_parser("predict", help="score candidates with each expert model")
    pipeline(p, sampling=True)
    p.add_argument("--pool", choices=[k.value for k in PoolingKind],
                   default=PoolingKind.MEAN_OF_EXPECTATIONS.value)
    p.add_argument("--weights", type=float, nargs="+")
    p = sub.add_parser("fairness-check", help="compare scores under two protected values")
    pipeline(p, sampling=True)
    p.add_argument("--protected", help="protected attribute (default: the only one listed in --spec)")
    p.add_argument("--values", nargs=2, metavar=("A", "A_PRIME"),
                   help="protected values or encoding tokens (default: the encoded pair)")
    p.add_argument("--tol", type=float, default=DEFAULT_ABS_TOL)
    return parser


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise FairpoolError(f"{path}: not UTF-8 ({exc.reason})") from None


def _located(path: Path, exc: FairpoolError) -> str:
    return f"{path}:{exc}" if exc.line is not None else f"{path}: {exc}"


def _load_models(paths):
    models = []
    for path in paths:
        try:
            models.append(parse_model(path.read_bytes()))
        except FairpoolError as exc:
            raise FairpoolError(_located(path, exc)) from None
    return models


def _warn_category_mismatch(models) -> None:
    seen: dict[str, tuple[str, int]] = {}
    for m in models:
        for name, dist in m.exogenous.items():
            if not isinstance(dist, Categorical):
                continue
            k = len(dist.weights)
            if name in seen and seen[name][1] != k:
                print(f"warning: {name} has {seen[name][1]} categories in {seen[name][0]!r} "
                      f"but {k} in {m.label!r}", file=sys.stderr)
            seen.setdefault(name, (m.label, k))


def _config(args) -> AggregationConfig:
    return AggregationConfig(Rule(args.rule), Order(args.order), args.tie_break,
                             prune_isolated=not args.no_prune)


def _metadata(args) -> dict[str, object]:
    return {"seed": args.seed, "n": args.samples, **_config(args).metadata()}


def _write(out: Path | None, name: str, text: str) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")


def cmd_validate(args) -> int:
    """Evidence files resolve their tokens against any encoding table listed
    alongside them; without one only their syntax is checked."""
    status = EXIT_OK
    encoding = None
    for path in sorted(args.paths, key=lambda p: p.suffix != ".enc"):
        if path.suffix == ".enc":
            try:
                encoding = parse_encoding(_read(path))
            except (OSError, FairpoolError):
                pass
    for path in args.paths:
        try:
            data = path.read_bytes()
        except OSError as exc:
            print(f"{path}: I/O error: {exc.strerror or exc}", file=sys.stderr)
            status = EXIT_USAGE
            continue
        try:
            suffix = path.suffix
            if suffix == ".fair":
                parse_fairness_spec(data.decode("utf-8"))
            elif suffix == ".enc":
                parse_encoding(data.decode("utf-8"))
            elif suffix == ".evd":
                parse_evidence(data.decode("utf-8"), encoding, resolve=encoding is not None)
            elif suffix == ".dag":
                parse_dag(data.decode("utf-8"))
            else:
                parse_model(data)
        except UnicodeDecodeError as exc:
            print(f"{path}: not UTF-8 ({exc.reason})")
            status = max(status, EXIT_DOMAIN)
        except FairpoolError as exc:
            print(_located(path, exc))
            status = max(status, EXIT_DOMAIN)
        else:
            print(f"{path}: OK")
    return status


def _setup(args):
    models = _load_models(args.models)
    _warn_category_mismatch(models)
    spec = parse_fairness_spec(_read(args.spec), models)
    return models, spec


def cmd_aggregate(args) -> int:
    models, spec = _setup(args)
    result = aggregate(models, spec, _config(args))
    dag = format_dag(result.diagram, _metadata(args))
    if args.out is None:
        sys.stdout.write(dag)
    _write(args.out, "fair.dag", dag)
    print(f"fair diagram: {len(result.diagram.vertices)} vertices, "
          f"{len(result.diagram.edges)} edges ({args.order}, {args.rule})")
    print(f"removed: {', '.join(sorted(result.removed)) or '-'}")
    if result.pruned:
        print(f"pruned (no path to {spec.predictor}): {', '.join(sorted(result.pruned))}")
    for d in result.rejected:
        a, b = d.edge
        print(f"rejected {a} -> {b}: {sum(d.judgment.votes)}/{len(d.judgment.votes)} votes, "
              f"{d.reason}")
    for depth, edges in result.pooling.tie_breaks:
        order = ", ".join(f"{a}->{b}" for a, b in edges)
        print(f"tie-break at depth {depth}: {order}")
    return EXIT_OK


def _evidence(args, models):
    encoding = parse_encoding(_read(args.encoding)) if args.encoding else EncodingTable()
    variables = frozenset().union(*(m.variables for m in models))
    return encoding, parse_evidence(_read(args.evidence), encoding, variables)


def _fair_diagram(args, models, spec):
    if args.dag is not None:
        return parse_dag(_read(args.dag))[0]
    return aggregate(models, spec, _config(args)).diagram


def cmd_predict(args) -> int:
    models, spec = _setup(args)
    _, records = _evidence(args, models)
    meta = _metadata(args)
    if args.mode == "unfair":
        scores = {}
        for rec in records:
            scores[rec.label] = {m.label: predict_full_evidence(m, rec.resolved) for m in models}
            line = ", ".join(f"{k}={v!r}" for k, v in scores[rec.label].items())
            print(f"{rec.label} (unfair): {line}")
        _write(args.out, "unfair_scores.json",
               json.dumps({"mode": "unfair", "scores": scores, "metadata": meta},
                          indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    diagram = _fair_diagram(args, models, spec)
    op = PoolingOperator(PoolingKind(args.pool), tuple(args.weights) if args.weights else None)
    op.resolve(len(models))
    stamp = " ".join(f"{k}={meta[k]}" for k in sorted(meta))
    for rec in records:
        dists = []
        for m in models:
            fair_set = FairFeatureSet.from_diagram(diagram, m)
            dist = fair_predict(m, fair_set, rec.resolved, args.samples, args.seed)
            dists.append(dist)
            tag = f"{m.label}_{rec.label}"
            _write(args.out, f"{tag}_samples.csv", samples_csv(dist, {**meta, "model": m.label,
                                                                        "candidate": rec.label}))
            if args.out is not None and dist.n >= 2 and dist.variance > 0:
                curve = kde(dist.samples)
                _write(args.out, f"{tag}_kde.csv",
                       curve.to_csv({**meta, "model": m.label, "candidate": rec.label,
                                     "bandwidth": repr(curve.bandwidth)}))
        report = decision_report(dists, op, rec.label, [m.label for m in models], meta)
        _write(args.out, f"{rec.label}_decision.json", report_json(report))
        per = ", ".join(f"{e['model']}={e['mean']:.4f}±{e['std_err']:.4f}"
                        for e in report["experts"])
        print(f"{rec.label} (fair): {per}; pooled {args.pool} = {report['pooled']!r}")
    print(f"# {stamp}")
    return EXIT_OK


def _protected_values(args, spec, encoding: EncodingTable):
    protected = args.protected
    if protected is None:
        if len(spec.protected) != 1:
            raise UsageError("--protected is required when --spec lists several attributes")
        (protected,) = spec.protected
    if args.values is not None:
        try:
            return protected, tuple(encoding.resolve(protected, v) for v in args.values)
        except FairpoolError as exc:
            raise UsageError(str(exc)) from None
    encoded = sorted(set(encoding.tables.get(protected, {}).values()), reverse=True)
    if len(encoded) != 2:
        raise UsageError(f"--values is required: the encoding gives {protected} "
                         f"{len(encoded)} values, not 2")
    return protected, tuple(encoded)


def cmd_fairness_check(args) -> int:
    models, spec = _setup(args)
    encoding, records = _evidence(args, models)
    protected, values = _protected_values(args, spec, encoding)
    meta = _metadata(args)
    diagram = _fair_diagram(args, models, spec) if args.mode == "fair" else None
    status = EXIT_OK
    for rec in records:
        for m in models:
            if diagram is not None:
                fair_set = FairFeatureSet.from_diagram(diagram, m)
            else:
                fair_set = FairFeatureSet.all_parents(m)
            report = check_counterfactual_fairness(m, fair_set, rec.resolved, protected, values,
                                                   args.samples, args.seed, args.tol)
            chosen = report.fair_verdict if args.mode == "fair" else report.unfair_verdict
            gap = report.fair_gap if args.mode == "fair" else report.unfair_gap
            _write(args.out, f"{m.label}_{rec.label}_fairness.json",
                   report.to_json(mode=args.mode, candidate=rec.label, metadata=meta))
            print(f"{m.label} {rec.label} ({args.mode}): gap={gap!r} verdict={chosen}")
            if chosen != "fair_within_tolerance":
                status = EXIT_DOMAIN
    return status


COMMANDS = {"validate": cmd_validate, "aggregate": cmd_aggregate, "predict": cmd_predict,
            "fairness-check": cmd_fairness_check}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        name = exc.filename if exc.filename is not None else ""
        print(f"fairpool: I/O error: {name}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE
    except FairpoolError as exc:
        print(f"fairpool: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
