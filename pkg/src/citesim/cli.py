"""Command-line front end.

Subcommands: generate, measure, scenario, stats, regularities, regress.
Exit codes: 0 success, 1 validation/usage error, 2 I/O or file-format
error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (
    DegenerateSampleError,
    cd_distribution,
    ensemble_series,
    fit_extreme_value,
    fit_normal,
    series,
)
from .disruption import CensoringError, RecordTable, measure_all
from .generator import generate
from .netio import (
    ConfigError,
    ParseError,
    VersionError,
    _distribution_range,
    export_regularities,
    fmt,
    load_network,
    parse_config_file,
    read_records_csv,
    run_scenario,
    save_network,
    write_distribution_csv,
    write_fits_csv,
    write_records_csv,
    write_series_csv,
)
from .regress import CollinearityError, ObservationTable, ols_fixed_effects
from .scenarios import SCENARIOS


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage errors."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    p = _Parser(prog="citesim", description=__doc__)
    p.add_argument("--version", action="version", version=f"citesim {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="grow networks from a key=value config file")
    g.add_argument("--config", required=True, help="key=value config file")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--seed", type=int, default=None, help="override the config seed")
    g.add_argument("--threads", type=int, default=1)

    m = sub.add_parser("measure", help="disruption records for a saved network")
    m.add_argument("--network", required=True, help="directory with nodes/edges/meta")
    m.add_argument("--cw", type=int, required=True, help="citation window in periods")
    m.add_argument("--out", required=True, help="records CSV path")
    m.add_argument("--include-same-cohort", action="store_true")

    s = sub.add_parser("scenario", help="run one shipped scenario end to end")
    s.add_argument("id", type=int, choices=sorted(SCENARIOS))
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=None, help="ensemble base seed")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--periods", type=int, default=None,
                   help="shrink T for desk-scale runs (recorded in the manifest)")
    s.add_argument("--ensemble", type=int, default=None,
                   help="shrink the ensemble size (recorded in the manifest)")

    st = sub.add_parser("stats", help="series/distributions/fits from records CSVs")
    st.add_argument("--records", required=True, nargs="+", help="one or more records CSVs")
    st.add_argument("--out", required=True, help="output directory")
    st.add_argument("--interval", type=int, default=10)

    r = sub.add_parser("regularities", help="statistical-regularity CSVs for a network")
    r.add_argument("--network", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--horizon", type=int, default=None)

    rg = sub.add_parser("regress", help="OLS with period fixed effects on a CSV table")
    rg.add_argument("--table", required=True, help="CSV with header y,period,<covariate...>")
    rg.add_argument("--out", required=True, help="coefficients CSV path")
    rg.add_argument("--baseline", default=None, help="period level to drop as baseline")
    return p


def _cmd_generate(args) -> int:
    cfg, ensemble_size = parse_config_file(args.config)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    out = Path(args.out)
    for i in range(ensemble_size):
        from dataclasses import replace

        member = replace(cfg, seed=cfg.seed + i)
        net = generate(member, threads=args.threads)
        save_network(net, out / f"net{i}" if ensemble_size > 1 else out)
    return 0


def _cmd_measure(args) -> int:
    net = load_network(args.network)
    records = measure_all(net, args.cw, include_same_cohort=args.include_same_cohort)
    write_records_csv(records, args.out)
    return 0


def _cmd_scenario(args) -> int:
    run_scenario(
        args.id,
        args.out,
        base_seed=args.seed,
        threads=args.threads,
        t_max=args.periods,
        ensemble_size=args.ensemble,
    )
    return 0


def _cmd_stats(args) -> int:
    tables = [read_records_csv(p) for p in args.records]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    per_net = [series(t) for t in tables]
    if len(per_net) == 1:
        write_series_csv(per_net[0], out / "series.csv")
    else:
        write_series_csv(ensemble_series(per_net), out / "series.csv")
    pooled = RecordTable.concat(tables)
    lo = int(pooled.cohort.min())
    hi = int(pooled.cohort.max())
    lo, hi = _distribution_range(lo, hi, args.interval)
    fit_rows = []
    try:
        hists = cd_distribution(pooled, interval=args.interval, cohort_range=(lo, hi))
    except DegenerateSampleError:
        hists = []
    for h in hists:
        write_distribution_csv(h, out / f"dist_{h.start}.csv")
        vals = pooled.cd[
            (pooled.cohort >= h.start) & (pooled.cohort <= h.end) & pooled.defined_cd
        ]
        try:
            fit_rows.append((h.start, fit_extreme_value(vals)))
            fit_rows.append((h.start, fit_normal(vals)))
        except DegenerateSampleError:
            pass
    write_fits_csv(fit_rows, out / "fits.csv")
    return 0


def _cmd_regularities(args) -> int:
    net = load_network(args.network)
    export_regularities(net, args.out, horizon=args.horizon)
    return 0


def _read_table_csv(path: str) -> ObservationTable:
    p = Path(path)
    if not p.is_file():
        raise ParseError(f"{p}: missing file")
    with open(p, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n").split(",")
        if len(header) < 2 or header[0] != "y" or header[1] != "period":
            raise ParseError(f"{p}:1: header must start with y,period")
        cov_names = header[2:]
        ys, periods, covs = [], [], [[] for _ in cov_names]
        for lineno, line in enumerate(f, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != len(header):
                raise ParseError(f"{p}:{lineno}: expected {len(header)} fields")
            try:
                ys.append(float(parts[0]))
                periods.append(parts[1])
                for j, v in enumerate(parts[2:]):
                    covs[j].append(float(v))
            except ValueError:
                raise ParseError(f"{p}:{lineno}: malformed row {line.rstrip()!r}")
    return ObservationTable(
        y=np.array(ys),
        period=np.array(periods),
        covariates={nm: np.array(col) for nm, col in zip(cov_names, covs)},
    )


def _cmd_regress(args) -> int:
    table = _read_table_csv(args.table)
    model = ols_fixed_effects(table, baseline=args.baseline)
    lines = ["term,estimate,std_error"]
    lines += [f"{nm},{fmt(model.coef[nm])},{fmt(model.se[nm])}" for nm in model.terms]
    lines.append(f"# n={model.n} r2={fmt(model.r2)}")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "measure": _cmd_measure,
    "scenario": _cmd_scenario,
    "stats": _cmd_stats,
    "regularities": _cmd_regularities,
    "regress": _cmd_regress,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ParseError, VersionError, OSError) as e:
        print(f"citesim: {e}", file=sys.stderr)
        return 2
    except (ConfigError, CensoringError, CollinearityError, DegenerateSampleError,
            ValueError, KeyError) as e:
        print(f"citesim: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
