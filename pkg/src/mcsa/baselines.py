"""Comparison strategies and brute-force oracles.

The brute-force minimizers provide independent ground truth on small
instances; the four fixed policies (device-only, edge-only, and the two
latency-minimizing split selectors) are the standard comparison points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mcsa.costs import UserContext, UtilityBreakdown, total_delay, utility, utility_value
from mcsa.mligd import MobilityContext, back_transfer_utility

__all__ = [
    "BruteForceResult",
    "MobilityBruteForceResult",
    "brute_force",
    "brute_force_mobility",
    "device_only",
    "edge_only",
    "latency_only_split",
    "capped_latency_split",
]


@dataclass(frozen=True)
class BruteForceResult:
    split: int
    bandwidth: float
    compute: float
    utility: float


@dataclass(frozen=True)
class MobilityBruteForceResult:
    decision: int
    split: int
    bandwidth: float
    compute: float
    back_bandwidth: float
    utility: float


def brute_force(ctx: UserContext, grid_b: int = 200, grid_r: int = 200) -> BruteForceResult:
    """Exhaustive minimum over splits and a uniform (b, r) grid.

    Ties resolve to the lexicographically smallest (split, b, r).
    """
    if grid_b < 2 or grid_r < 2:
        raise ValueError("grid sizes must be >= 2")
    bs = np.linspace(ctx.channel.bandwidth_min, ctx.channel.bandwidth_max, grid_b)
    rs = np.linspace(ctx.server.compute_min, ctx.server.compute_max, grid_r)
    bb, rr = np.meshgrid(bs, rs, indexing="ij")
    best = None
    for s in range(ctx.model.num_layers + 1):
        values = np.asarray(utility_value(ctx, s, bb, rr))
        flat = int(np.argmin(values))
        i, j = np.unravel_index(flat, values.shape)
        u = float(values[i, j])
        if best is None or u < best.utility:
            best = BruteForceResult(split=s, bandwidth=float(bs[i]), compute=float(rs[j]), utility=u)
    return best


def brute_force_mobility(mctx: MobilityContext, grid_b: int = 200, grid_r: int = 200,
                         grid_back: int = 200) -> MobilityBruteForceResult:
    """Exhaustive minimum over both post-handover branches.

    Branch 0 searches (split, b, r) at the new server; branch 1 searches the
    back-transfer bandwidth with the split frozen.  Ties prefer branch 0.
    """
    if grid_back < 2:
        raise ValueError("grid sizes must be >= 2")
    recompute = brute_force(mctx.base, grid_b, grid_r)
    backs = np.linspace(mctx.back_bandwidth_min, mctx.back_bandwidth_max, grid_back)
    back_values = np.asarray(back_transfer_utility(mctx, backs))
    if back_values.ndim == 0:
        back_values = np.full(backs.shape, float(back_values))
    k = int(np.argmin(back_values))
    u_back = float(back_values[k])
    if u_back < recompute.utility:
        orig = mctx.original_strategy
        return MobilityBruteForceResult(
            decision=1, split=orig.split, bandwidth=orig.bandwidth, compute=orig.compute,
            back_bandwidth=float(backs[k]), utility=u_back)
    return MobilityBruteForceResult(
        decision=0, split=recompute.split, bandwidth=recompute.bandwidth,
        compute=recompute.compute, back_bandwidth=float(backs[k]), utility=recompute.utility)


def device_only(ctx: UserContext) -> UtilityBreakdown:
    """Run all layers on the device: no transmission, no rental."""
    w_t, w_c, w_e = ctx.weights
    dev = ctx.device
    delay = ctx.model.total_flops / dev.compute_capability + ctx.strategy_calc_delay / ctx.rounds
    en = dev.switched_capacitance * dev.compute_capability ** 2 * dev.cycles_per_bit \
        * ctx.model.total_flops
    return UtilityBreakdown(delay_s=delay, energy_j=en, cost_cbr=0.0,
                            utility=w_t * delay + w_c * 0.0 + w_e * en)


def edge_only(ctx: UserContext) -> UtilityBreakdown:
    """Run all layers on the edge with maximal rental (b_max, r_max)."""
    return utility(ctx, 0, ctx.channel.bandwidth_max, ctx.server.compute_max)


def latency_only_split(ctx: UserContext):
    """Split chosen to minimize delay alone at maximal rental.

    Returns (split, b, r, breakdown); the split ignores energy and cost
    entirely, ties resolve to the smallest split.
    """
    b, r = ctx.channel.bandwidth_max, ctx.server.compute_max
    best_s = min(range(ctx.model.num_layers + 1),
                 key=lambda s: (total_delay(ctx, s, b, r), s))
    return best_s, b, r, utility(ctx, best_s, b, r)


def capped_latency_split(ctx: UserContext, r_cap: float):
    """Delay-minimizing split with the rented compute capped at ``r_cap``."""
    if not (ctx.server.compute_min <= r_cap <= ctx.server.compute_max):
        raise ValueError(f"r_cap {r_cap} outside "
                         f"[{ctx.server.compute_min}, {ctx.server.compute_max}]")
    b = ctx.channel.bandwidth_max
    best_s = min(range(ctx.model.num_layers + 1),
                 key=lambda s: (total_delay(ctx, s, b, r_cap), s))
    return best_s, b, r_cap, utility(ctx, best_s, b, r_cap)
