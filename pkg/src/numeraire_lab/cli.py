"""Command-line entry point wiring the pipeline end to end.

Subcommands: ``ingest``, ``transform``, ``partial``, ``network``,
``similar``. Exit codes: 0 success, 2 input/usage problems, 3 numerical or
statistical problems. All outputs are deterministic: fixed ordering, fixed
formatting, no timestamps; report files carry a provenance header with the
input digest and the parameters used.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

from .analysis import (
    export_network,
    most_similar,
    significant_edges,
    threshold_components,
    transform_validation_r2,
)
from .errors import InputError, NumericalError
from .ingest import (
    align_and_fill,
    apply_exclusions,
    format_removal_report,
    parse_price_panel,
    write_price_panel,
)
from .partial import (
    DEFAULT_RIDGE,
    assemble_full_partial_matrix,
    format_partial_matrix,
)
from .returns import (
    correlation_from_cov,
    correlation_transform,
    covariance_transform,
    format_matrix,
    log_returns,
    mean_transform,
    mean_vector,
    sample_covariance,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _provenance(args, extra: str = "") -> str:
    digest = _sha256(Path(args.input))
    parts = [f"# input=sha256:{digest}", f"# base={args.base}"]
    if extra:
        parts.append("# " + extra)
    return "\n".join(parts) + "\n"


def _load_panel(args):
    with open(args.input, "r", encoding="utf-8") as fh:
        return parse_price_panel(fh, base=args.base)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _numeraires(args) -> list[str]:
    if not args.numeraire:
        raise InputError("at least one --numeraire is required")
    return list(args.numeraire)


def _ridge(args):
    if args.ridge is None:
        return None
    return DEFAULT_RIDGE if args.ridge == "default" else float(args.ridge)


def _format_mean(mv) -> str:
    lines = [f"# numeraire={mv.numeraire}"]
    lines += [
        f"{a}\t{format(v, '.17g')}" for a, v in zip(mv.assets, mv.values)
    ]
    return "\n".join(lines) + "\n"


def cmd_ingest(args) -> int:
    panel = _load_panel(args)
    cleaned, report = apply_exclusions(
        panel,
        max_missing=args.max_missing,
        constant_run=args.constant_run,
        keep=args.keep or (),
    )
    align_and_fill(cleaned)  # validate alignability before writing anything
    out = _outdir(args)
    (out / "panel_clean.csv").write_text(write_price_panel(cleaned), encoding="utf-8")
    (out / "removals.tsv").write_text(format_removal_report(report), encoding="utf-8")
    n_missing = int((~cleaned.present).sum())
    print(
        f"kept {len(cleaned.assets)} assets over {len(cleaned.dates)} dates "
        f"({n_missing} missing cells); removed {len({r.asset for r in report})}"
    )
    return EXIT_OK


def cmd_transform(args) -> int:
    panel = align_and_fill(_load_panel(args))
    numeraires = _numeraires(args)
    out = _outdir(args)
    prov = _provenance(args, f"numeraires={','.join(numeraires)}")
    direct = {}
    for u in numeraires:
        returns = log_returns(panel, u)
        cov = sample_covariance(returns)
        direct[u] = cov
        (out / f"mean_{u}.tsv").write_text(
            prov + _format_mean(mean_vector(returns)), encoding="utf-8"
        )
        (out / f"cov_{u}.tsv").write_text(prov + format_matrix(cov), encoding="utf-8")
        (out / f"corr_{u}.tsv").write_text(
            prov + format_matrix(correlation_from_cov(cov)), encoding="utf-8"
        )
    r2_lines = []
    for u in numeraires:
        returns_u = log_returns(panel, u)
        means_u = mean_vector(returns_u)
        for w in numeraires:
            if w == u:
                continue
            cov_t = covariance_transform(direct[u], w)
            corr_t = correlation_transform(direct[u], w)
            mean_t = mean_transform(means_u, w)
            (out / f"cov_{u}_to_{w}.tsv").write_text(
                prov + format_matrix(cov_t), encoding="utf-8"
            )
            (out / f"corr_{u}_to_{w}.tsv").write_text(
                prov + format_matrix(corr_t), encoding="utf-8"
            )
            (out / f"mean_{u}_to_{w}.tsv").write_text(
                prov + _format_mean(mean_t), encoding="utf-8"
            )
            r2 = transform_validation_r2(panel, u, w)
            r2_lines.append(f"{u}\t{w}\t{format(r2, '.17g')}")
            print(f"R2 {u}->{w}: {r2:.12f}")
    (out / "r2.tsv").write_text(prov + "\n".join(r2_lines) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_partial(args) -> int:
    panel = align_and_fill(_load_panel(args))
    numeraires = _numeraires(args)
    result = assemble_full_partial_matrix(panel, numeraires, ridge=_ridge(args))
    out = _outdir(args)
    prov = _provenance(args, f"numeraires={','.join(numeraires)}")
    (out / "partial_matrix.tsv").write_text(
        prov + format_partial_matrix(result.matrix), encoding="utf-8"
    )
    if args.invariance_audit:
        print(f"max cross-numeraire discrepancy: {result.max_discrepancy:.3e}")
    return EXIT_OK


def cmd_network(args) -> int:
    panel = align_and_fill(_load_panel(args))
    numeraires = _numeraires(args)
    result = assemble_full_partial_matrix(panel, numeraires, ridge=_ridge(args))
    matrix = result.matrix
    m = (
        len(matrix.assets) ** 2
        if args.tests == "square"
        else len(matrix.assets) * (len(matrix.assets) - 1) // 2
    )
    network = significant_edges(matrix, n=matrix.sample_size, alpha=args.alpha, m=m)
    out = _outdir(args)
    suffix = {"dot": "dot", "json": "json", "edgelist": "tsv"}[args.format]
    (out / f"network.{suffix}").write_text(
        export_network(network, args.format), encoding="utf-8"
    )
    print(
        f"{len(network.edges)} significant edges at level "
        f"{network.effective_level:.3e} ({network.method})"
    )
    return EXIT_OK


def cmd_similar(args) -> int:
    panel = align_and_fill(_load_panel(args))
    table = most_similar(panel)
    out = _outdir(args)
    prov = _provenance(args)
    lines = [
        f"{row.asset}\t{','.join(row.most_similar)}\t{row.occurrences}"
        for row in table.rows
    ]
    (out / "similar.tsv").write_text(prov + "\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote similarity table for {len(table.rows)} assets")
    return EXIT_OK


def cmd_clusters(args) -> int:
    panel = align_and_fill(_load_panel(args))
    u = _numeraires(args)[0]
    corr = correlation_from_cov(sample_covariance(log_returns(panel, u)))
    reports = threshold_components(corr, args.thresholds)
    out = _outdir(args)
    lines = []
    for rep in reports:
        for comp in rep.components:
            lines.append(f"{format(rep.threshold, 'g')}\t{','.join(comp)}")
    prov = _provenance(args, f"numeraire={u}")
    (out / "clusters.tsv").write_text(prov + "\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {sum(len(r.components) for r in reports)} components")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="numeraire-lab",
        description="FX log-return statistics under any numeraire.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--input", required=True, help="price panel file")
        p.add_argument("--base", required=True, help="base asset of the panel")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("ingest", help="clean a raw panel and report removals")
    common(p)
    p.add_argument("--max-missing", type=int, default=10)
    p.add_argument("--constant-run", type=int, default=5)
    p.add_argument("--keep", action="append", help="asset exempt from the missing rule")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("transform", help="direct and transformed moment matrices")
    common(p)
    p.add_argument("--numeraire", action="append", help="repeatable")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("partial", help="assembled partial-correlation matrix")
    common(p)
    p.add_argument("--numeraire", action="append", help="repeatable, priority order")
    p.add_argument("--ridge", nargs="?", const="default", default=None)
    p.add_argument("--invariance-audit", action="store_true")
    p.set_defaults(func=cmd_partial)

    p = sub.add_parser("network", help="significance-filtered network export")
    common(p)
    p.add_argument("--numeraire", action="append", help="repeatable, priority order")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--tests", choices=["square", "pairs"], default="square")
    p.add_argument("--ridge", nargs="?", const="default", default=None)
    p.add_argument("--format", choices=["dot", "json", "edgelist"], default="dot")
    p.set_defaults(func=cmd_network)

    p = sub.add_parser("similar", help="most-similar-asset robustness table")
    common(p)
    p.set_defaults(func=cmd_similar)

    p = sub.add_parser("clusters", help="threshold components of a correlation matrix")
    common(p)
    p.add_argument("--numeraire", action="append", help="numeraire for the matrix")
    p.add_argument("--thresholds", type=float, nargs="+", default=[0.9, 0.8, 0.6])
    p.set_defaults(func=cmd_clusters)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
