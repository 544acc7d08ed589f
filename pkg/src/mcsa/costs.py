"""Closed-form delay, energy, and renting-cost models plus analytic gradients.

All operations are pure functions and accept numpy arrays for the continuous
decision variables (bandwidth ``b`` and compute units ``r``), so grid oracles
can evaluate the whole decision box in one call.

Conventions:
  - split ``s`` counts device-side layers, s in {0, ..., M};
  - s = 0 transmits the raw input (all layers on the server);
  - s = M transmits nothing (all layers on the device): transmission delay
    and transmission energy are zero, while the renting cost of the allocated
    (b, r) still applies, keeping the objective and its gradients consistent
    over the whole decision box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mcsa.models import ModelProfile

__all__ = [
    "DeviceProfile",
    "ChannelParams",
    "ServerProfile",
    "UserContext",
    "UtilityBreakdown",
    "compensation_lambda",
    "compensation_lambda_deriv",
    "device_delay",
    "server_delay",
    "transmission_rate",
    "transmission_delay",
    "total_delay",
    "energy",
    "rent_cost_cbr",
    "utility",
    "utility_value",
    "grad_bandwidth",
    "grad_compute",
    "point_evaluator",
]

_WEIGHT_TOL = 1e-12
_BOUND_TOL = 1e-9


@dataclass(frozen=True)
class DeviceProfile:
    """Mobile device compute and radio characteristics."""

    compute_capability: float      # GFLOP/s
    switched_capacitance: float    # effective switched capacitance of the CPU
    cycles_per_bit: float
    tx_power: float                # W

    def __post_init__(self):
        for name in ("compute_capability", "switched_capacitance", "cycles_per_bit", "tx_power"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class ChannelParams:
    """Device-to-AP channel model and the bandwidth box."""

    large_scale_fading: float
    small_scale_fading: float
    noise_density: float
    bandwidth_min: float
    bandwidth_max: float

    def __post_init__(self):
        if self.large_scale_fading < 0 or self.small_scale_fading < 0:
            raise ValueError("fading components must be nonnegative")
        if self.noise_density <= 0:
            raise ValueError("noise_density must be positive")
        if self.bandwidth_min <= 0 or self.bandwidth_max < self.bandwidth_min:
            raise ValueError("need 0 < bandwidth_min <= bandwidth_max")


@dataclass(frozen=True)
class ServerProfile:
    """Edge server pricing, unit capability, and the compute box.

    ``speedup_beta`` parameterizes the multicore compensation
    lambda(r) = r + beta*ln(1 + r); beta = 0 recovers the single-core case.
    The bandwidth price is g(b) = gamma * b**delta with delta >= 1.
    """

    unit_capability: float
    unit_price: float
    compute_min: float
    compute_max: float
    speedup_beta: float = 0.0
    bandwidth_price_gamma: float = 0.0
    bandwidth_price_power: float = 1.0

    def __post_init__(self):
        if self.unit_capability <= 0:
            raise ValueError("unit_capability must be positive")
        if self.unit_price <= 0:
            raise ValueError("unit_price must be positive")
        if self.compute_min <= 0 or self.compute_max < self.compute_min:
            raise ValueError("need 0 < compute_min <= compute_max")
        if self.speedup_beta < 0:
            raise ValueError("speedup_beta must be nonnegative")
        if self.bandwidth_price_gamma < 0:
            raise ValueError("bandwidth_price_gamma must be nonnegative")
        if self.bandwidth_price_power < 1.0:
            raise ValueError("bandwidth_price_power must be >= 1 (convex price)")

    def bandwidth_price(self, b):
        return self.bandwidth_price_gamma * np.power(b, self.bandwidth_price_power)

    def bandwidth_price_deriv(self, b):
        p = self.bandwidth_price_power
        return self.bandwidth_price_gamma * p * np.power(b, p - 1.0)


@dataclass(frozen=True)
class UserContext:
    """Everything needed to evaluate one user's utility at a candidate point."""

    device: DeviceProfile
    channel: ChannelParams
    model: ModelProfile
    server: ServerProfile
    hops: int
    backhaul_bandwidth: float
    rounds: int
    strategy_calc_delay: float
    weights: tuple[float, float, float]  # (delay, cost, energy)

    def __post_init__(self):
        if self.hops < 0:
            raise ValueError("hops must be nonnegative")
        if self.backhaul_bandwidth <= 0:
            raise ValueError("backhaul_bandwidth must be positive")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.strategy_calc_delay < 0:
            raise ValueError("strategy_calc_delay must be nonnegative")
        w_t, w_c, w_e = self.weights
        if min(w_t, w_c, w_e) < 0 or abs(w_t + w_c + w_e - 1.0) > _WEIGHT_TOL:
            raise ValueError("weights must be nonnegative and sum to 1")

    @property
    def snr_numerator(self) -> float:
        ch = self.channel
        return self.device.tx_power * ch.large_scale_fading * ch.small_scale_fading


@dataclass(frozen=True)
class UtilityBreakdown:
    """Weighted objective and its three components."""

    delay_s: float
    energy_j: float
    cost_cbr: float
    utility: float


def compensation_lambda(r, beta: float):
    """Effective speedup of r rented compute units: r + beta*ln(1 + r)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("compute units must be positive")
    out = r + beta * np.log1p(r)
    return float(out) if out.ndim == 0 else out


def compensation_lambda_deriv(r, beta: float):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("compute units must be positive")
    out = 1.0 + beta / (1.0 + r)
    return float(out) if out.ndim == 0 else out


def device_delay(model: ModelProfile, s: int, device: DeviceProfile) -> float:
    """On-device inference time of the first s layers."""
    return model.on_device_flops(s) / device.compute_capability


def server_delay(model: ModelProfile, s: int, r, server: ServerProfile):
    """On-server inference time of layers s+1..M with r rented units."""
    _check_box(r, server.compute_min, server.compute_max, "compute units")
    lam = compensation_lambda(r, server.speedup_beta)
    return model.on_server_flops(s) / (lam * server.unit_capability)


def transmission_rate(b, channel: ChannelParams, tx_power: float):
    """Shannon-form uplink rate at bandwidth b."""
    b = np.asarray(b, dtype=float)
    if np.any(b <= 0):
        raise ValueError("bandwidth must be positive")
    snr = tx_power * channel.large_scale_fading * channel.small_scale_fading / (b * channel.noise_density)
    out = b * np.log2(1.0 + snr)
    return float(out) if out.ndim == 0 else out


def transmission_delay(model: ModelProfile, s: int, b, hops: int, backhaul_bandwidth: float):
    """First-hop plus relay transmission time of the split payload and result.

    Zero at s = M (nothing leaves the device).
    """
    if hops < 0:
        raise ValueError("hops must be nonnegative")
    b = np.asarray(b, dtype=float)
    if np.any(b <= 0):
        raise ValueError("bandwidth must be positive")
    if s == model.num_layers:
        out = np.zeros_like(b)
    else:
        payload = model.split_output_bits(s) + model.final_result_bits
        out = payload / b + hops * payload / backhaul_bandwidth
    return float(out) if out.ndim == 0 else out


def total_delay(ctx: UserContext, s: int, b, r):
    """Device + server + transmission delay plus the amortized
    strategy-calculation term (T_Ag / k)."""
    out = (
        device_delay(ctx.model, s, ctx.device)
        + server_delay(ctx.model, s, r, ctx.server)
        + transmission_delay(ctx.model, s, b, ctx.hops, ctx.backhaul_bandwidth)
        + ctx.strategy_calc_delay / ctx.rounds
    )
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def energy(ctx: UserContext, s: int, b):
    """Device energy: computation of the first s layers plus uplink
    transmission of the split payload (zero at s = M)."""
    dev = ctx.device
    comp = dev.switched_capacitance * dev.compute_capability ** 2 * dev.cycles_per_bit \
        * ctx.model.on_device_flops(s)
    b = np.asarray(b, dtype=float)
    if s == ctx.model.num_layers:
        out = comp + np.zeros_like(b)
    else:
        payload = ctx.model.split_output_bits(s) + ctx.model.final_result_bits
        rate = np.asarray(transmission_rate(b, ctx.channel, dev.tx_power))
        # a dead channel (zero rate) costs infinite transmission energy
        tx = np.where(rate > 0, dev.tx_power * payload / np.where(rate > 0, rate, 1.0), np.inf)
        out = comp + tx
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def rent_cost_cbr(ctx: UserContext, b, r):
    """Per-round renting cost (r*price + g(b)) / k."""
    _check_box(b, ctx.channel.bandwidth_min, ctx.channel.bandwidth_max, "bandwidth")
    _check_box(r, ctx.server.compute_min, ctx.server.compute_max, "compute units")
    out = (np.asarray(r, dtype=float) * ctx.server.unit_price + ctx.server.bandwidth_price(b)) \
        / ctx.rounds
    return float(out) if out.ndim == 0 else out


def utility(ctx: UserContext, s: int, b, r) -> UtilityBreakdown:
    """Weighted objective at (s, b, r), with per-component breakdown."""
    w_t, w_c, w_e = ctx.weights
    delay = total_delay(ctx, s, b, r)
    en = energy(ctx, s, b)
    cost = rent_cost_cbr(ctx, b, r)
    return UtilityBreakdown(
        delay_s=delay,
        energy_j=en,
        cost_cbr=cost,
        utility=w_t * delay + w_c * cost + w_e * en,
    )


def utility_value(ctx: UserContext, s: int, b, r):
    """Weighted objective only; broadcast-friendly for grid oracles."""
    return utility(ctx, s, b, r).utility


def grad_bandwidth(ctx: UserContext, s: int, b, r):
    """Analytic partial derivative of the utility with respect to bandwidth."""
    b = np.asarray(b, dtype=float)
    if np.any(b <= 0):
        raise ValueError("bandwidth must be positive")
    w_t, w_c, w_e = ctx.weights
    out = w_c * ctx.server.bandwidth_price_deriv(b) / ctx.rounds
    if s < ctx.model.num_layers:
        payload = ctx.model.split_output_bits(s) + ctx.model.final_result_bits
        out = out - w_t * payload / b ** 2
        a = ctx.snr_numerator / ctx.channel.noise_density
        if a > 0:
            rate = b * np.log2(1.0 + a / b)
            rate_deriv = np.log2(1.0 + a / b) - a / ((b + a) * np.log(2.0))
            out = out - w_e * ctx.device.tx_power * payload * rate_deriv / rate ** 2
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def grad_compute(ctx: UserContext, s: int, b, r):
    """Analytic partial derivative of the utility with respect to compute units."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("compute units must be positive")
    w_t, w_c, w_e = ctx.weights
    srv = ctx.server
    f_e = ctx.model.on_server_flops(s)
    lam = compensation_lambda(r, srv.speedup_beta)
    lam_d = compensation_lambda_deriv(r, srv.speedup_beta)
    out = -w_t * f_e * lam_d / (srv.unit_capability * lam ** 2) \
        + w_c * srv.unit_price / ctx.rounds
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def point_evaluator(ctx: UserContext, s: int):
    """Scalar fast path for descent loops: (utility, grad_b, grad_r) closures.

    Precomputes every split-dependent constant and evaluates with plain float
    math, skipping array conversion and box checks (callers keep iterates
    clamped).  Agrees with utility_value / grad_bandwidth / grad_compute to
    machine precision.
    """
    w_t, w_c, w_e = ctx.weights
    dev, srv, ch, model = ctx.device, ctx.server, ctx.channel, ctx.model
    f_e = model.on_server_flops(s)
    fixed_delay = model.on_device_flops(s) / dev.compute_capability \
        + ctx.strategy_calc_delay / ctx.rounds
    comp_energy = dev.switched_capacitance * dev.compute_capability ** 2 \
        * dev.cycles_per_bit * model.on_device_flops(s)
    if s == model.num_layers:
        payload = 0.0
    else:
        payload = model.split_output_bits(s) + model.final_result_bits
        fixed_delay += ctx.hops * payload / ctx.backhaul_bandwidth
    a = ctx.snr_numerator / ch.noise_density
    beta = srv.speedup_beta
    cap = srv.unit_capability
    price_r = srv.unit_price / ctx.rounds
    gamma_k = srv.bandwidth_price_gamma / ctx.rounds
    delta = srv.bandwidth_price_power
    ln2 = math.log(2.0)
    p = dev.tx_power

    def utility_at(b: float, r: float) -> float:
        lam = r + beta * math.log1p(r)
        delay = fixed_delay + f_e / (lam * cap)
        en = comp_energy
        if payload:
            delay += payload / b
            if a > 0:
                en += p * payload / (b * math.log2(1.0 + a / b))
            else:
                en = math.inf
        cost = r * price_r + gamma_k * b ** delta
        return w_t * delay + w_c * cost + w_e * en

    def grad_b_at(b: float, r: float) -> float:
        out = w_c * gamma_k * delta * b ** (delta - 1.0)
        if payload:
            out -= w_t * payload / (b * b)
            if a > 0:
                rate = b * math.log2(1.0 + a / b)
                rate_deriv = math.log2(1.0 + a / b) - a / ((b + a) * ln2)
                out -= w_e * p * payload * rate_deriv / (rate * rate)
        return out

    def grad_r_at(b: float, r: float) -> float:
        lam = r + beta * math.log1p(r)
        lam_d = 1.0 + beta / (1.0 + r)
        return -w_t * f_e * lam_d / (cap * lam * lam) + w_c * price_r

    return utility_at, grad_b_at, grad_r_at


def _check_box(x, lo: float, hi: float, what: str):
    x = np.asarray(x, dtype=float)
    slack = _BOUND_TOL * max(1.0, abs(hi))
    if np.any(x < lo - slack) or np.any(x > hi + slack):
        raise ValueError(f"{what} outside [{lo}, {hi}]")
