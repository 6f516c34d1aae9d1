"""Command-line driver: reports, sweeps, exports, and simulation runs.

Exit codes: 0 success, 2 config error, 3 validation error, 4 internal error.
All emissions are byte-deterministic given the config and seed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

from . import costs
from .builders import build_lookup
from .errors import ConfigError, QlutError
from .ir import export_gate_list
from .layout import build_schedule, classify_links, place_htree
from .params import (
    ArchParams, ErrorRates, Readout, arch_params_from_json, arch_params_to_json,
    error_rates_from_json, error_rates_to_json, specialization,
)
from .resources import count_resources
from .simulator import monte_carlo_infidelity, trial_outcome_ok

_K_RULES = {
    "Zero": 0.0,
    "QuarterDPrime": 0.25,
    "HalfDPrime": 0.5,
    "ThreeQuarterDPrime": 0.75,
    "FullDPrime": 1.0,
}

_METRICS = ("InfidelityExponent", "TCountExponent", "QubitExponent", "DepthExponent")

_SIM_VERDICT_CAP = 256  # exhaustive-address verdict only below this size


@dataclass
class SweepSpec:
    """Grid over (d/n, d'/n) fractions with a long-range budget rule."""
    n_range: list[int] = field(default_factory=lambda: [16, 24, 32, 40, 48])
    d_fractions: list[float] = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    d_prime_fractions: list[float] = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    k_rule: str = "Zero"
    rates: ErrorRates = field(default_factory=lambda: ErrorRates.uniform(1e-3))
    metric: str = "InfidelityExponent"

    def __post_init__(self) -> None:
        if self.k_rule not in _K_RULES:
            raise ConfigError(f"unknown kRule {self.k_rule!r}")
        if self.metric not in _METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}")
        if len(self.n_range) < 5:
            raise ConfigError("nRange needs at least 5 sizes for exponent fits")

    @classmethod
    def from_json(cls, obj: dict) -> "SweepSpec":
        kwargs = {}
        if "nRange" in obj:
            kwargs["n_range"] = [int(v) for v in obj["nRange"]]
        if "dFractions" in obj:
            kwargs["d_fractions"] = [float(v) for v in obj["dFractions"]]
        if "dPrimeFractions" in obj:
            kwargs["d_prime_fractions"] = [float(v) for v in obj["dPrimeFractions"]]
        if "kRule" in obj:
            kwargs["k_rule"] = obj["kRule"]
        if "metric" in obj:
            kwargs["metric"] = obj["metric"]
        if "rates" in obj:
            kwargs["rates"] = error_rates_from_json(obj["rates"])
        return cls(**kwargs)


def _cell_values(spec: SweepSpec, df: float, pf: float) -> list[float] | None:
    if df + pf > 1.0 + 1e-9:
        return None
    vals = []
    k_frac = _K_RULES[spec.k_rule]
    for n in spec.n_range:
        d = df * n
        dp = pf * n
        if spec.metric == "InfidelityExponent":
            terms = costs._general_terms(n, d, dp)
            del terms["eps_l"]
            terms.update(costs._budgeted_terms(n, d, dp, k_frac * dp))
            rates = spec.rates
            v = sum(coeff * (getattr(rates, key) if getattr(rates, key) is not None else 0.0)
                    for key, coeff in terms.items())
        elif spec.metric == "TCountExponent":
            v = costs._t_count_value(n, d, dp, 1.0, Readout.SINGLE_BIT)
        elif spec.metric == "QubitExponent":
            v = d + 2.0 ** (n - d)
        else:
            v = 2.0 ** d * n
        vals.append(v)
    return vals


def sweep_exponent_table(spec: SweepSpec) -> dict:
    """Fit the metric exponent for every (d/n, d'/n) grid cell."""
    cells = {}
    for df in spec.d_fractions:
        for pf in spec.d_prime_fractions:
            vals = _cell_values(spec, df, pf)
            if vals is None or any(v <= 0 for v in vals):
                cells[(df, pf)] = None
                continue
            fit = costs.fit_exponent([2 ** n for n in spec.n_range], vals)
            cells[(df, pf)] = fit.slope
    return {
        "kRule": spec.k_rule,
        "metric": spec.metric,
        "nRange": list(spec.n_range),
        "dFractions": list(spec.d_fractions),
        "dPrimeFractions": list(spec.d_prime_fractions),
        "cells": cells,
    }


def sweep_table_csv(table: dict) -> str:
    """Row-major matrix: rows = d/n, columns = d'/n, empty cell = null."""
    dps = table["dPrimeFractions"]
    lines = ["d_over_n," + ",".join(repr(float(p)) for p in dps)]
    for df in table["dFractions"]:
        row = [repr(float(df))]
        for pf in dps:
            cell = table["cells"][(df, pf)]
            row.append("" if cell is None else repr(float(cell)))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def parse_sweep_csv(text: str) -> dict:
    lines = [ln for ln in text.strip().split("\n") if ln]
    header = lines[0].split(",")
    dps = [float(v) for v in header[1:]]
    dfs = []
    cells = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        df = float(parts[0])
        dfs.append(df)
        for pf, raw in zip(dps, parts[1:]):
            cells[(df, pf)] = None if raw == "" else float(raw)
    return {"dFractions": dfs, "dPrimeFractions": dps, "cells": cells}


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON in {path} at line {exc.lineno}: {exc.msg}") from exc


def _instance_from_config(obj: dict) -> tuple[ArchParams, ErrorRates, "object"]:
    from .params import DataTable
    try:
        params = arch_params_from_json(obj["params"])
    except KeyError as exc:
        raise ConfigError(f"config missing key {exc}") from exc
    rates = error_rates_from_json(obj.get("rates", {}))
    if "table" in obj:
        table = DataTable(words=tuple(int(w) for w in obj["table"]), b=params.b)
    else:
        # deterministic default table so reports are reproducible
        words = tuple((a * 2654435761 >> 7) % (1 << params.b) for a in range(params.N))
        table = DataTable(words=words, b=params.b)
    return params, rates, table


def _emit(payload: dict, out_path: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_report(args) -> None:
    obj = _load_config(args.config)
    params, rates, table = _instance_from_config(obj)
    report: dict = {
        "params": arch_params_to_json(params),
        "rates": error_rates_to_json(rates),
        "specialization": specialization(params).value,
        "repetitions": params.repetitions,
        "formulas": {
            "tCount": costs.t_count_formula(params),
            "qubitCount": costs.qubit_count_formula(params),
            "queryDepth": costs.query_depth_formula(params),
        },
    }
    if params.b == 1:
        report["infidelity"] = costs.general_infidelity(params, rates).to_json()
    else:
        report["infidelity"] = costs.multi_bit_infidelity(params, rates).to_json()
    circuit = build_lookup(params, table)
    report["exactCounts"] = count_resources(circuit, args.decomposition).to_json()
    if circuit.meta.get("family") == "tree":
        placement = place_htree(circuit)
        links, by_gate = classify_links(circuit, placement)
        schedule = build_schedule(circuit, placement, by_gate,
                                  include_distillation_depth=args.include_distillation_depth)
        report["layout"] = {
            "bounds": list(placement.bounds),
            "area": placement.area,
            "longRangeLinks": len(links),
            "maxLinkLength": max((l.m for l in links), default=0),
            "scheduleDepth": schedule.total_depth,
        }
    if params.N <= _SIM_VERDICT_CAP:
        ok = all(trial_outcome_ok(circuit, a, None) for a in range(params.N))
        report["simulatedCorrect"] = bool(ok)
        if args.trials:
            mc = monte_carlo_infidelity(circuit, rates, args.trials, args.seed)
            report["monteCarlo"] = mc
    _emit(report, args.out)


def cmd_sweep(args) -> None:
    obj = _load_config(args.config)
    rules = obj.get("kRules", list(_K_RULES))
    os.makedirs(args.out, exist_ok=True)
    summary = {}
    for rule in rules:
        spec = SweepSpec.from_json({**obj, "kRule": rule})
        table = sweep_exponent_table(spec)
        name = f"sweep_{spec.metric}_{rule}"
        with open(os.path.join(args.out, name + ".csv"), "w", encoding="utf-8") as fh:
            fh.write(sweep_table_csv(table))
        summary[rule] = {
            f"{df}/{pf}": table["cells"][(df, pf)]
            for df in table["dFractions"] for pf in table["dPrimeFractions"]
        }
    _emit({"metric": obj.get("metric", "InfidelityExponent"), "tables": summary},
          os.path.join(args.out, "sweep_summary.json"))


def cmd_export_gates(args) -> None:
    obj = _load_config(args.config)
    params, rates, table = _instance_from_config(obj)
    circuit = build_lookup(params, table)
    by_gate = None
    if circuit.meta.get("family") == "tree":
        placement = place_htree(circuit)
        _, by_gate = classify_links(circuit, placement)
    text = export_gate_list(circuit, by_gate)
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {args.out}: {exc}") from exc


def cmd_export_layout(args) -> None:
    obj = _load_config(args.config)
    params, rates, table = _instance_from_config(obj)
    circuit = build_lookup(params, table)
    placement = place_htree(circuit)
    links, _ = classify_links(circuit, placement)
    base = args.out
    with open(base + ".json", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(placement.to_json(), sort_keys=True, indent=2) + "\n")
    with open(base + "_links.csv", "w", encoding="utf-8") as fh:
        fh.write("source,target,m,level,resource\n")
        for link in links:
            lvl = "" if link.level is None else str(link.level)
            fh.write(f"{link.source},{link.target},{link.m},{lvl},{link.resource}\n")
    width, height = placement.bounds
    grid = [["." for _ in range(width)] for _ in range(height)]
    for q, (r, c) in placement.coords.items():
        grid[r][c] = "o"
    for (r, c) in placement.reserved:
        grid[r][c] = "~"
    rows = ["".join(row) for row in reversed(grid)]
    with open(base + ".txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")


def cmd_simulate(args) -> None:
    obj = _load_config(args.config)
    params, rates, table = _instance_from_config(obj)
    circuit = build_lookup(params, table)
    by_gate = None
    if circuit.meta.get("family") == "tree":
        placement = place_htree(circuit)
        _, by_gate = classify_links(circuit, placement)
    result = monte_carlo_infidelity(circuit, rates, args.trials, args.seed,
                                    link_by_gate=by_gate)
    if args.log:
        from .simulator import build_location_table, inject_and_simulate
        locations = build_location_table(circuit, rates, by_gate)
        with open(args.log, "w", encoding="utf-8") as fh:
            for t in range(args.trials):
                r = inject_and_simulate(circuit, rates, args.seed, t,
                                        locations=locations)
                fh.write(json.dumps({
                    "trial": t, "address": r.address, "ok": r.ok,
                    "events": [e.to_json() for e in r.events]}, sort_keys=True) + "\n")
    _emit(result, args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlut", description="quantum lookup-table architecture toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None, help="output path (default stdout)")

    p = sub.add_parser("report", help="single-instance cost/infidelity report")
    common(p)
    p.add_argument("--decomposition", choices=("t7", "t4"), default="t7")
    p.add_argument("--include-distillation-depth", action="store_true")
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("sweep", help="exponent tables over the (d, d') grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("export-gates", help="write the gate-list format")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("export-layout", help="write grid map, JSON, link CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output path prefix")

    p = sub.add_parser("simulate", help="Monte Carlo infidelity estimate")
    common(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log", default=None, help="JSON-lines trial log path")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "report": cmd_report,
        "sweep": cmd_sweep,
        "export-gates": cmd_export_gates,
        "export-layout": cmd_export_layout,
        "simulate": cmd_simulate,
    }
    try:
        handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except QlutError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - internal invariant escape
        print(f"internal error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
