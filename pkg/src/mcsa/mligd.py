"""Mobility-aware solver: recompute at the new server vs transmit back.

After a handover the user either re-solves the joint split/allocation problem
at the new server (decision 0) or keeps the frozen strategy and relays the
intermediate data back to the original server over the new path (decision 1).
The relaxed decision variable is linear in the objective, so rounding it to
the cheaper branch is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mcsa.costs import (
    UserContext,
    compensation_lambda,
    transmission_rate,
)
from mcsa.ligd import LayerSolution, NumericalError, SolverConfig, SolverReport, li_gd

__all__ = [
    "MobilityContext",
    "MobilitySolution",
    "frozen_branch_terms",
    "back_transfer_utility",
    "grad_back_bandwidth",
    "optimize_back_transfer",
    "round_decision",
    "mli_gd",
]


@dataclass(frozen=True)
class MobilityContext:
    """Post-handover decision problem.

    ``base`` is the user context at the new AP (new hop count and channel,
    new serving server).  The original strategy and the device/server-side
    utility contributions it froze are inputs computed once at handover and
    never mutated.
    """

    base: UserContext
    original_strategy: LayerSolution
    back_hops: int
    back_bandwidth_min: float
    back_bandwidth_max: float
    frozen_device_utility: float
    frozen_server_utility: float

    def __post_init__(self):
        if self.back_hops < 0:
            raise ValueError("back_hops must be nonnegative")
        if self.back_bandwidth_min <= 0 or self.back_bandwidth_max < self.back_bandwidth_min:
            raise ValueError("need 0 < back_bandwidth_min <= back_bandwidth_max")


@dataclass(frozen=True)
class MobilitySolution:
    """Rounded branch decision with both optimized branches attached."""

    decision: int                  # 0 = recompute at new server, 1 = transmit back
    relaxed_decision: float
    recompute: LayerSolution       # meaningful when decision == 0
    recompute_report: SolverReport
    back_bandwidth: float          # meaningful when decision == 1
    back_utility: float
    utility: float


def frozen_branch_terms(original_ctx: UserContext, strategy: LayerSolution) -> tuple[float, float]:
    """Device-side and server-side utility contributions of a frozen strategy.

    Evaluated once at handover against the original server's profile; the
    transmission terms are excluded (they change with the new path).
    """
    w_t, w_c, w_e = original_ctx.weights
    model, dev, srv = original_ctx.model, original_ctx.device, original_ctx.server
    s = strategy.split
    f_l = model.on_device_flops(s)
    f_e = model.on_server_flops(s)
    device_part = w_t * f_l / dev.compute_capability \
        + w_e * dev.switched_capacitance * dev.compute_capability ** 2 * dev.cycles_per_bit * f_l
    lam = compensation_lambda(strategy.compute, srv.speedup_beta)
    server_part = w_t * f_e / (lam * srv.unit_capability) \
        + w_c * strategy.compute * srv.unit_price / original_ctx.rounds
    return device_part, server_part


def _back_payload(mctx: MobilityContext) -> float:
    model = mctx.base.model
    s = mctx.original_strategy.split
    if s == model.num_layers:
        return 0.0
    return model.split_output_bits(s) + model.final_result_bits


def back_transfer_utility(mctx: MobilityContext, b_back) -> float:
    """Utility of relaying the frozen split's payload back to the original
    server with first-hop bandwidth ``b_back`` rented at the new AP."""
    _check_back_bounds(mctx, b_back)
    frozen = mctx.frozen_device_utility + mctx.frozen_server_utility
    payload = _back_payload(mctx)
    if payload == 0.0:
        out = frozen + np.zeros_like(np.asarray(b_back, dtype=float))
        return float(out) if out.ndim == 0 else out
    ctx = mctx.base
    w_t, w_c, w_e = ctx.weights
    b_back = np.asarray(b_back, dtype=float)
    trans = payload / b_back + mctx.back_hops * payload / ctx.backhaul_bandwidth
    rate = transmission_rate(b_back, ctx.channel, ctx.device.tx_power)
    out = frozen \
        + w_t * trans \
        + w_e * ctx.device.tx_power * payload / rate \
        + w_c * ctx.server.bandwidth_price(b_back) / ctx.rounds
    return float(out) if out.ndim == 0 else out


def grad_back_bandwidth(mctx: MobilityContext, b_back) -> float:
    """Analytic derivative of the back-transfer utility in ``b_back``."""
    payload = _back_payload(mctx)
    b = np.asarray(b_back, dtype=float)
    if np.any(b <= 0):
        raise ValueError("bandwidth must be positive")
    if payload == 0.0:
        out = np.zeros_like(b)
        return float(out) if out.ndim == 0 else out
    ctx = mctx.base
    w_t, w_c, w_e = ctx.weights
    out = -w_t * payload / b ** 2 + w_c * ctx.server.bandwidth_price_deriv(b) / ctx.rounds
    a = ctx.snr_numerator / ctx.channel.noise_density
    if a > 0:
        rate = b * np.log2(1.0 + a / b)
        rate_deriv = np.log2(1.0 + a / b) - a / ((b + a) * np.log(2.0))
        out = out - w_e * ctx.device.tx_power * payload * rate_deriv / rate ** 2
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def optimize_back_transfer(mctx: MobilityContext, config: SolverConfig) -> tuple[float, float, int]:
    """Projected 1-D descent on the back-transfer bandwidth.

    Returns (optimal bandwidth, utility, iterations).
    """
    lo, hi = mctx.back_bandwidth_min, mctx.back_bandwidth_max
    b = 0.5 * (lo + hi)
    if _back_payload(mctx) == 0.0:
        return b, back_transfer_utility(mctx, b), 0
    eta = config.step_size
    if eta is None:
        rng = np.random.default_rng(config.seed)
        lip = 0.0
        for _ in range(max(10, config.lipschitz_samples // 4)):
            b1, b2 = rng.uniform(lo, hi, 2)
            if abs(b1 - b2) < 1e-12:
                continue
            lip = max(lip, abs(grad_back_bandwidth(mctx, b1) - grad_back_bandwidth(mctx, b2))
                      / abs(b1 - b2))
        eta = 1.0 if lip <= 0 else 1.0 / (config.lipschitz_margin * lip)
    eps = config.accuracy_eps
    u = back_transfer_utility(mctx, b)
    iters = 0
    while iters < config.max_inner_iters:
        g = grad_back_bandwidth(mctx, b)
        if not math.isfinite(g) or not math.isfinite(u):
            raise NumericalError(f"non-finite back-transfer term at bandwidth={b}")
        if abs(g) < eps:
            break
        nb = min(max(b - eta * g, lo), hi)
        nu = back_transfer_utility(mctx, nb)
        iters += 1
        du, db = abs(nu - u), abs(nb - b)
        b, u = nb, nu
        if du < eta * eps * eps or db < eta * eps:
            break
    return b, u, iters


def back_transfer_breakdown(original_ctx: UserContext, new_ctx: UserContext,
                            strategy: LayerSolution, back_hops: int, b_back: float):
    """Physical delay/energy/cost breakdown of the back-transfer branch.

    Device and server terms come from the frozen strategy at the original
    server; transmission and bandwidth rent use the new AP and path.  The
    weighted total matches back_transfer_utility for a context built from
    frozen_branch_terms on the same inputs.
    """
    from mcsa.costs import UtilityBreakdown  # local to avoid import cycle noise

    model, dev = original_ctx.model, original_ctx.device
    srv_orig = original_ctx.server
    s = strategy.split
    lam = compensation_lambda(strategy.compute, srv_orig.speedup_beta)
    delay = model.on_device_flops(s) / dev.compute_capability \
        + model.on_server_flops(s) / (lam * srv_orig.unit_capability)
    en = dev.switched_capacitance * dev.compute_capability ** 2 * dev.cycles_per_bit \
        * model.on_device_flops(s)
    cost = strategy.compute * srv_orig.unit_price / original_ctx.rounds
    if s < model.num_layers:
        payload = model.split_output_bits(s) + model.final_result_bits
        delay += payload / b_back + back_hops * payload / new_ctx.backhaul_bandwidth
        rate = transmission_rate(b_back, new_ctx.channel, new_ctx.device.tx_power)
        en += new_ctx.device.tx_power * payload / rate
        cost += new_ctx.server.bandwidth_price(b_back) / new_ctx.rounds
    w_t, w_c, w_e = original_ctx.weights
    return UtilityBreakdown(delay_s=delay, energy_j=en, cost_cbr=cost,
                            utility=w_t * delay + w_c * cost + w_e * en)


def round_decision(relaxed: float, recompute_utility: float, back_utility: float) -> int:
    """Round the relaxed branch variable: transmit back iff it is strictly
    cheaper (ties prefer recomputing).  Exact because the objective is linear
    in the relaxed variable."""
    if not (math.isfinite(recompute_utility) and math.isfinite(back_utility)):
        raise ValueError("branch utilities must be finite")
    return 1 if back_utility < recompute_utility else 0


def mli_gd(mctx: MobilityContext, config: SolverConfig = SolverConfig()) -> MobilitySolution:
    """Optimize both branches and pick the cheaper one.

    Branch 0 runs the layer-loop solver on the new-AP context; branch 1
    descends on the back-transfer bandwidth with the split frozen.  The
    relaxed decision has a constant gradient (the branch-utility gap), so its
    descent limit is the box corner of the cheaper branch.
    """
    report = li_gd(mctx.base, config)
    b_back, u_back, _ = optimize_back_transfer(mctx, config)
    u_re = report.best.utility
    if u_back < u_re:
        relaxed = 1.0
    elif u_back > u_re:
        relaxed = 0.0
    else:
        relaxed = 0.5
    decision = round_decision(relaxed, u_re, u_back)
    return MobilitySolution(
        decision=decision,
        relaxed_decision=relaxed,
        recompute=report.best,
        recompute_report=report,
        back_bandwidth=b_back,
        back_utility=u_back,
        utility=u_back if decision == 1 else u_re,
    )


def _check_back_bounds(mctx: MobilityContext, b_back):
    b = np.asarray(b_back, dtype=float)
    slack = 1e-9 * max(1.0, abs(mctx.back_bandwidth_max))
    if np.any(b < mctx.back_bandwidth_min - slack) or np.any(b > mctx.back_bandwidth_max + slack):
        raise ValueError(
            f"back-transfer bandwidth outside [{mctx.back_bandwidth_min}, {mctx.back_bandwidth_max}]")
