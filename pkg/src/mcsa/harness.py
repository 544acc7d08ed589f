"""Experiment harness: strategy comparison runs, sweeps, and CSV emission."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

from mcsa.baselines import capped_latency_split, device_only, edge_only, latency_only_split
from mcsa.costs import UserContext, UtilityBreakdown, utility
from mcsa.ligd import li_gd
from mcsa.mligd import MobilityContext, back_transfer_breakdown, frozen_branch_terms, mli_gd
from mcsa.scenario import ConfigError, Scenario, UserSpec
from mcsa.topology import HandoverEvent, UserAttachment, apply_handover

__all__ = [
    "ResultRow",
    "CSV_COLUMNS",
    "run_static",
    "run_mobility",
    "run_hop_sweep",
    "run_load_sweep",
    "emit",
    "parse_rows",
]

STRATEGIES = ("mcsa", "device_only", "edge_only", "latency_only", "capped")

CSV_COLUMNS = (
    "scenario_id", "user_id", "strategy", "split", "bandwidth", "compute", "decision",
    "delay_s", "energy_j", "cost", "utility",
    "delay_speedup", "energy_ratio", "cost_ratio", "iterations",
)


@dataclass
class ResultRow:
    """One (scenario, user, strategy) outcome, plus normalized columns.

    Normalized columns are baseline value / strategy value, computed within
    the same (scenario_id, user_id) group; ``decision`` is the post-handover
    branch choice and is empty outside mobility solves.
    """

    scenario_id: str
    user_id: str
    strategy: str
    split: int
    bandwidth: float
    compute: float
    decision: str
    delay_s: float
    energy_j: float
    cost: float
    utility: float
    delay_speedup: float = 0.0
    energy_ratio: float = 0.0
    cost_ratio: float = 0.0
    iterations: int = 0


def _ratio(baseline: float, value: float) -> float:
    if baseline == value:
        return 1.0
    if value == 0.0:
        return float("inf")
    return baseline / value


def _normalize(rows: list[ResultRow], baseline_strategy: str):
    by_group = {}
    for row in rows:
        by_group.setdefault((row.scenario_id, row.user_id), []).append(row)
    for group in by_group.values():
        base = next((r for r in group if r.strategy == baseline_strategy), None)
        if base is None:
            continue
        for row in group:
            row.delay_speedup = _ratio(base.delay_s, row.delay_s)
            row.energy_ratio = _ratio(base.energy_j, row.energy_j)
            row.cost_ratio = _ratio(base.cost, row.cost)


def _breakdown_row(scenario_id, user_id, strategy, split, b, r, bd: UtilityBreakdown,
                   decision: str = "", iterations: int = 0) -> ResultRow:
    return ResultRow(
        scenario_id=scenario_id, user_id=user_id, strategy=strategy,
        split=split, bandwidth=float(b), compute=float(r), decision=decision,
        delay_s=float(bd.delay_s), energy_j=float(bd.energy_j),
        cost=float(bd.cost_cbr), utility=float(bd.utility), iterations=iterations,
    )


def _strategy_rows(scenario: Scenario, scenario_id: str, spec: UserSpec, ctx: UserContext,
                   frozen: dict | None = None, mcsa_row: ResultRow | None = None) -> list[ResultRow]:
    """Rows for all strategies of one user under one context.

    ``frozen`` maps strategy name -> (split, b, r) to re-evaluate a
    previously chosen policy instead of re-selecting it (sweep semantics for
    the mobility-unaware baselines).  ``mcsa_row`` overrides the solver row.
    """
    frozen = frozen or {}
    uid = spec.user_id
    rows = []

    if mcsa_row is not None:
        rows.append(mcsa_row)
    else:
        report = li_gd(ctx, scenario.solver)
        best = report.best
        rows.append(_breakdown_row(
            scenario_id, uid, "mcsa", best.split, best.bandwidth, best.compute,
            utility(ctx, best.split, best.bandwidth, best.compute),
            iterations=report.total_iterations))

    rows.append(ResultRow(
        scenario_id=scenario_id, user_id=uid, strategy="device_only",
        split=ctx.model.num_layers, bandwidth=0.0, compute=0.0, decision="",
        **_breakdown_fields(device_only(ctx))))

    if "edge_only" in frozen:
        s, b, r = frozen["edge_only"]
        rows.append(_breakdown_row(scenario_id, uid, "edge_only", s, b, r, utility(ctx, s, b, r)))
    else:
        b, r = ctx.channel.bandwidth_max, ctx.server.compute_max
        rows.append(_breakdown_row(scenario_id, uid, "edge_only", 0, b, r, edge_only(ctx)))

    if "latency_only" in frozen:
        s, b, r = frozen["latency_only"]
        rows.append(_breakdown_row(scenario_id, uid, "latency_only", s, b, r,
                                   utility(ctx, s, b, r)))
    else:
        s, b, r, bd = latency_only_split(ctx)
        rows.append(_breakdown_row(scenario_id, uid, "latency_only", s, b, r, bd))

    if scenario.r_cap is not None:
        if "capped" in frozen:
            s, b, r = frozen["capped"]
            rows.append(_breakdown_row(scenario_id, uid, "capped", s, b, r,
                                       utility(ctx, s, b, r)))
        else:
            try:
                s, b, r, bd = capped_latency_split(ctx, scenario.r_cap)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            rows.append(_breakdown_row(scenario_id, uid, "capped", s, b, r, bd))
    return rows


def _breakdown_fields(bd: UtilityBreakdown) -> dict:
    return {"delay_s": float(bd.delay_s), "energy_j": float(bd.energy_j),
            "cost": float(bd.cost_cbr), "utility": float(bd.utility)}


def run_static(scenario: Scenario) -> list[ResultRow]:
    """One row per (user, strategy) in the motionless scenario."""
    rows = []
    for spec in scenario.users:
        ctx, _ = scenario.context(spec)
        rows.extend(_strategy_rows(scenario, scenario.scenario_id, spec, ctx))
    _normalize(rows, scenario.baseline_strategy)
    rows.sort(key=lambda r: (r.scenario_id, r.user_id, r.strategy))
    return rows


def run_mobility(scenario: Scenario, trace: list[HandoverEvent]) -> list[ResultRow]:
    """Replay handover events; each handover re-decides recompute-vs-back.

    The initial (pre-movement) rows equal the static run; each event then
    contributes one row group at the user's new AP, with the solver row
    carrying the rounded branch decision.
    """
    rows = run_static(scenario)

    state = {}
    for spec in scenario.users:
        ctx, server_id = scenario.context(spec)
        report = li_gd(ctx, scenario.solver)
        state[spec.user_id] = {
            "attachment": UserAttachment(user_id=spec.user_id, ap=spec.ap,
                                         serving_server=server_id),
            "ctx": ctx,
            "strategy": report.best,
            "server": server_id,
        }

    for event in sorted(trace, key=lambda e: e.time_index):
        if event.user_id not in state:
            raise ConfigError(f"trace references unknown user {event.user_id!r}")
        st = state[event.user_id]
        spec = scenario.user(event.user_id)
        apply_handover(scenario.graph, st["attachment"], event)
        new_ap = st["attachment"].ap
        new_ctx, new_server = scenario.context(spec, ap=new_ap)
        back_hops = scenario.graph.hop_count(new_ap, st["server"])

        u_id, u_ie = frozen_branch_terms(st["ctx"], st["strategy"])
        mctx = MobilityContext(
            base=new_ctx,
            original_strategy=st["strategy"],
            back_hops=back_hops,
            back_bandwidth_min=new_ctx.channel.bandwidth_min,
            back_bandwidth_max=new_ctx.channel.bandwidth_max,
            frozen_device_utility=u_id,
            frozen_server_utility=u_ie,
        )
        sol = mli_gd(mctx, scenario.solver)

        row_id = f"{scenario.scenario_id}@t{event.time_index:04d}"
        if sol.decision == 0:
            best = sol.recompute
            mcsa_row = _breakdown_row(
                row_id, spec.user_id, "mcsa", best.split, best.bandwidth, best.compute,
                utility(new_ctx, best.split, best.bandwidth, best.compute),
                decision="0", iterations=sol.recompute_report.total_iterations)
            st["ctx"], st["strategy"], st["server"] = new_ctx, best, new_server
        else:
            orig = st["strategy"]
            bd = back_transfer_breakdown(st["ctx"], new_ctx, orig, back_hops,
                                         sol.back_bandwidth)
            mcsa_row = _breakdown_row(
                row_id, spec.user_id, "mcsa", orig.split, sol.back_bandwidth, orig.compute,
                bd, decision="1", iterations=sol.recompute_report.total_iterations)

        group = _strategy_rows(scenario, row_id, spec, new_ctx, mcsa_row=mcsa_row)
        _normalize(group, scenario.baseline_strategy)
        group.sort(key=lambda r: (r.scenario_id, r.user_id, r.strategy))
        rows.extend(group)
    return rows


def run_hop_sweep(scenario: Scenario, hop_values: list[int] | None = None) -> list[ResultRow]:
    """Re-solve each user at a range of hop distances to the server.

    The solver re-optimizes at every hop count; the split-selection baselines
    keep the policy they chose at the scenario's base attachment and only get
    re-evaluated on the longer path (they are mobility-unaware).
    """
    hop_values = scenario.hop_values if hop_values is None else hop_values
    if not hop_values:
        raise ConfigError("hop sweep needs a nonempty hop_values list")
    rows = []
    for spec in scenario.users:
        base_ctx, _ = scenario.context(spec)
        s_lat, b_lat, r_lat, _ = latency_only_split(base_ctx)
        frozen = {
            "edge_only": (0, base_ctx.channel.bandwidth_max, base_ctx.server.compute_max),
            "latency_only": (s_lat, b_lat, r_lat),
        }
        if scenario.r_cap is not None:
            try:
                s_cap, b_cap, r_cap, _ = capped_latency_split(base_ctx, scenario.r_cap)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            frozen["capped"] = (s_cap, b_cap, r_cap)
        for hops in hop_values:
            if hops < 0:
                raise ConfigError("hop values must be nonnegative")
            ctx = replace(base_ctx, hops=hops)
            group = _strategy_rows(scenario, f"{scenario.scenario_id}:hops={hops:02d}",
                                   spec, ctx, frozen=frozen)
            _normalize(group, scenario.baseline_strategy)
            rows.extend(group)
    rows.sort(key=lambda r: (r.scenario_id, r.user_id, r.strategy))
    return rows


def run_load_sweep(scenario: Scenario, load_levels: list[int] | None = None) -> list[ResultRow]:
    """Re-solve under growing per-round load.

    The load level sets the round count k and shrinks the effective
    per-user bandwidth cap by 1 / (1 + k * contention_coeff), modelling
    communication-resource contention.  Baseline split choices are frozen at
    the base configuration, as in the hop sweep.
    """
    load_levels = scenario.load_levels if load_levels is None else load_levels
    if not load_levels or any(k < 1 for k in load_levels):
        raise ConfigError("load sweep needs a nonempty list of positive round counts")
    rows = []
    for spec in scenario.users:
        base_ctx, _ = scenario.context(spec)
        s_lat, b_lat0, r_lat, _ = latency_only_split(base_ctx)
        s_cap = r_cap = None
        if scenario.r_cap is not None:
            try:
                s_cap, _, r_cap, _ = capped_latency_split(base_ctx, scenario.r_cap)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        for k in load_levels:
            b_max_eff = base_ctx.channel.bandwidth_max / (1.0 + k * scenario.contention_coeff)
            b_max_eff = max(b_max_eff, base_ctx.channel.bandwidth_min)
            channel = replace(base_ctx.channel, bandwidth_max=b_max_eff)
            ctx = replace(base_ctx, channel=channel, rounds=k)
            frozen = {
                "edge_only": (0, b_max_eff, ctx.server.compute_max),
                "latency_only": (s_lat, b_max_eff, r_lat),
            }
            if s_cap is not None:
                frozen["capped"] = (s_cap, b_max_eff, r_cap)
            group = _strategy_rows(scenario, f"{scenario.scenario_id}:load={k:03d}",
                                   spec, ctx, frozen=frozen)
            _normalize(group, scenario.baseline_strategy)
            rows.extend(group)
    rows.sort(key=lambda r: (r.scenario_id, r.user_id, r.strategy))
    return rows


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit(rows: list[ResultRow], path, fmt: str = "csv"):
    """Write rows as CSV (fixed column order) or grouped plot data.

    The plot format writes the same columns but inserts a ``# <scenario_id>``
    comment line before each scenario group, ready for gnuplot-style tools.
    """
    if not rows:
        raise ValueError("no rows to emit")
    if fmt not in ("csv", "plot"):
        raise ValueError(f"unknown output format {fmt!r}")
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            current_group = None
            for row in rows:
                if fmt == "plot" and row.scenario_id != current_group:
                    current_group = row.scenario_id
                    fh.write(f"# {current_group}\n")
                writer.writerow([_format(getattr(row, col)) for col in CSV_COLUMNS])
    except OSError:
        raise


def parse_rows(path) -> list[ResultRow]:
    """Read back a CSV produced by emit(); exact round-trip of all fields."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        for rec in reader:
            vals = dict(zip(CSV_COLUMNS, rec))
            rows.append(ResultRow(
                scenario_id=vals["scenario_id"],
                user_id=vals["user_id"],
                strategy=vals["strategy"],
                split=int(vals["split"]),
                bandwidth=float(vals["bandwidth"]),
                compute=float(vals["compute"]),
                decision=vals["decision"],
                delay_s=float(vals["delay_s"]),
                energy_j=float(vals["energy_j"]),
                cost=float(vals["cost"]),
                utility=float(vals["utility"]),
                delay_speedup=float(vals["delay_speedup"]),
                energy_ratio=float(vals["energy_ratio"]),
                cost_ratio=float(vals["cost_ratio"]),
                iterations=int(vals["iterations"]),
            ))
    return rows
