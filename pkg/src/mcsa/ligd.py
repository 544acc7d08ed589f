"""Layer-loop projected gradient descent over (bandwidth, compute).

For each candidate split s the continuous subproblem is solved by projected
gradient descent inside the box [b_min, b_max] x [r_min, r_max]; each layer's
descent is warm-started from the previous layer's optimum, and the final
strategy is the argmin over all M + 1 splits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mcsa.costs import UserContext, grad_bandwidth, grad_compute, point_evaluator

__all__ = [
    "NumericalError",
    "SolverConfig",
    "LayerSolution",
    "SolverReport",
    "estimate_lipschitz",
    "default_step_size",
    "inner_gd",
    "li_gd",
    "convergence_bound",
]


class NumericalError(RuntimeError):
    """Non-finite utility or gradient encountered during descent."""


@dataclass(frozen=True)
class SolverConfig:
    """Descent hyperparameters.

    ``step_size`` None means 1 / L, with L estimated by sampling gradient
    differences over random interior point pairs.  ``cold_start`` None means
    the midpoint of the decision box.
    """

    accuracy_eps: float = 1e-4
    step_size: float | None = None
    max_inner_iters: int = 50_000
    cold_start: tuple[float, float] | None = None
    lipschitz_samples: int = 100
    lipschitz_margin: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.accuracy_eps <= 0:
            raise ValueError("accuracy_eps must be positive")
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.max_inner_iters < 1:
            raise ValueError("max_inner_iters must be >= 1")
        if self.lipschitz_margin < 1.0:
            raise ValueError("lipschitz_margin must be >= 1")


@dataclass(frozen=True)
class LayerSolution:
    """Optimized (bandwidth, compute) point for one fixed split."""

    split: int
    bandwidth: float
    compute: float
    utility: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class SolverReport:
    """Per-split solutions plus the overall argmin strategy."""

    best: LayerSolution
    per_layer: tuple[LayerSolution, ...]
    total_iterations: int
    step_size: float


def estimate_lipschitz(ctx: UserContext, n_pairs: int = 100, rng=None) -> float:
    """Empirical gradient-Lipschitz constant from random interior point pairs."""
    rng = np.random.default_rng(rng)
    ch, srv = ctx.channel, ctx.server
    best = 0.0
    for _ in range(n_pairs):
        s = int(rng.integers(0, ctx.model.num_layers + 1))
        b1, b2 = rng.uniform(ch.bandwidth_min, ch.bandwidth_max, 2)
        r1, r2 = rng.uniform(srv.compute_min, srv.compute_max, 2)
        dist = math.hypot(b1 - b2, r1 - r2)
        if dist < 1e-12:
            continue
        dg_b = grad_bandwidth(ctx, s, b1, r1) - grad_bandwidth(ctx, s, b2, r2)
        dg_r = grad_compute(ctx, s, b1, r1) - grad_compute(ctx, s, b2, r2)
        best = max(best, math.hypot(dg_b, dg_r) / dist)
    return best


def default_step_size(ctx: UserContext, config: SolverConfig) -> float:
    """Step size 1 / (margin * L_hat), deterministic for a given config seed."""
    if config.step_size is not None:
        return config.step_size
    lip = estimate_lipschitz(ctx, config.lipschitz_samples, np.random.default_rng(config.seed))
    if lip <= 0:
        return 1.0
    return 1.0 / (config.lipschitz_margin * lip)


def inner_gd(ctx: UserContext, s: int, start_b: float, start_r: float,
             config: SolverConfig, step_size: float | None = None,
             history: list | None = None) -> LayerSolution:
    """Projected gradient descent over (b, r) at fixed split s.

    Stops when the gradient norm drops below the accuracy eps, when the
    utility change per step drops below eta * eps**2, when the iterate change
    drops below eta * eps (all three thresholds agree at gradient norm eps
    for an unconstrained step of size eta), or at the iteration cap.
    ``history`` collects the utility at every iterate when provided.
    """
    ch, srv = ctx.channel, ctx.server
    if not (ch.bandwidth_min <= start_b <= ch.bandwidth_max):
        raise ValueError("start bandwidth outside bounds")
    if not (srv.compute_min <= start_r <= srv.compute_max):
        raise ValueError("start compute outside bounds")
    eta = default_step_size(ctx, config) if step_size is None else step_size
    eps = config.accuracy_eps
    utility_at, grad_b_at, grad_r_at = point_evaluator(ctx, s)

    b, r = float(start_b), float(start_r)
    u = utility_at(b, r)
    _require_finite(u, "utility", s, b, r)
    if history is not None:
        history.append(u)
    iters = 0
    converged = False
    while iters < config.max_inner_iters:
        g_b = grad_b_at(b, r)
        g_r = grad_r_at(b, r)
        _require_finite(g_b, "bandwidth gradient", s, b, r)
        _require_finite(g_r, "compute gradient", s, b, r)
        if math.hypot(g_b, g_r) < eps:
            converged = True
            break
        nb = min(max(b - eta * g_b, ch.bandwidth_min), ch.bandwidth_max)
        nr = min(max(r - eta * g_r, srv.compute_min), srv.compute_max)
        nu = utility_at(nb, nr)
        _require_finite(nu, "utility", s, nb, nr)
        iters += 1
        if history is not None:
            history.append(nu)
        step_change = max(abs(nb - b), abs(nr - r))
        util_change = abs(nu - u)
        b, r, u = nb, nr, nu
        if util_change < eta * eps * eps or step_change < eta * eps:
            converged = True
            break
    return LayerSolution(split=s, bandwidth=b, compute=r, utility=u,
                         iterations=iters, converged=converged)


def li_gd(ctx: UserContext, config: SolverConfig = SolverConfig(),
          warm_start: bool = True) -> SolverReport:
    """Solve all M + 1 splits and return the argmin strategy.

    Each split's descent starts from the previous split's optimum (the layer
    loop); ``warm_start=False`` restarts every split from the cold start, for
    diagnostics and comparisons.
    """
    eta = default_step_size(ctx, config)
    cold = config.cold_start
    if cold is None:
        ch, srv = ctx.channel, ctx.server
        cold = (0.5 * (ch.bandwidth_min + ch.bandwidth_max),
                0.5 * (srv.compute_min + srv.compute_max))
    per_layer = []
    start_b, start_r = cold
    for s in range(ctx.model.num_layers + 1):
        if not warm_start:
            start_b, start_r = cold
        sol = inner_gd(ctx, s, start_b, start_r, config, step_size=eta)
        per_layer.append(sol)
        start_b, start_r = sol.bandwidth, sol.compute
    best = min(per_layer, key=lambda sol: (sol.utility, sol.split))
    return SolverReport(
        best=best,
        per_layer=tuple(per_layer),
        total_iterations=sum(sol.iterations for sol in per_layer),
        step_size=eta,
    )


def convergence_bound(start: tuple[float, float], optimum: tuple[float, float],
                      step_size: float, accuracy_eps: float) -> float:
    """Iteration-count bound ||x0 - x*||^2 / (2 * eta * eps); diagnostic only."""
    dist_sq = (start[0] - optimum[0]) ** 2 + (start[1] - optimum[1]) ** 2
    return dist_sq / (2.0 * step_size * accuracy_eps)


def _require_finite(value: float, what: str, s: int, b: float, r: float):
    if not math.isfinite(value):
        raise NumericalError(f"non-finite {what} at split={s}, bandwidth={b}, compute={r}")
