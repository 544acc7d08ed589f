"""Layer-loop projected gradient descent: convergence, oracles, determinism."""

import math

import numpy as np
import pytest

from mcsa.baselines import brute_force
from mcsa.costs import grad_bandwidth, grad_compute, utility_value
from mcsa.ligd import (
    NumericalError,
    SolverConfig,
    convergence_bound,
    default_step_size,
    estimate_lipschitz,
    inner_gd,
    li_gd,
)
from mcsa.models import LayerProfile, build_profile

from conftest import make_channel, make_context, make_server, random_context

TIGHT = SolverConfig(accuracy_eps=1e-7)


def test_inner_gd_stays_in_box():
    rng = np.random.default_rng(0)
    for _ in range(20):
        ctx = random_context(rng)
        s = int(rng.integers(0, ctx.model.num_layers + 1))
        sol = inner_gd(ctx, s,
                       ctx.channel.bandwidth_min, ctx.server.compute_max,
                       SolverConfig(accuracy_eps=1e-5))
        assert ctx.channel.bandwidth_min <= sol.bandwidth <= ctx.channel.bandwidth_max
        assert ctx.server.compute_min <= sol.compute <= ctx.server.compute_max


def test_inner_gd_immediate_exit_at_stationary_start():
    ctx = make_context()
    config = SolverConfig(accuracy_eps=1e-7)
    first = inner_gd(ctx, 1, 0.5 * 21.0, 8.5, config)
    g = math.hypot(grad_bandwidth(ctx, 1, first.bandwidth, first.compute),
                   grad_compute(ctx, 1, first.bandwidth, first.compute))
    if g < config.accuracy_eps:  # interior stationary point found
        again = inner_gd(ctx, 1, first.bandwidth, first.compute, config)
        assert again.iterations == 0
        assert again.bandwidth == first.bandwidth
        assert again.compute == first.compute


def test_inner_gd_full_device_split_drops_to_minimum_rent():
    ctx = make_context()
    sol = inner_gd(ctx, ctx.model.num_layers, 10.0, 8.0, TIGHT)
    assert sol.compute == pytest.approx(ctx.server.compute_min, abs=1e-3)


def test_inner_gd_matches_grid_oracle_per_split():
    rng = np.random.default_rng(1)
    config = SolverConfig(accuracy_eps=1e-5)
    for _ in range(10):
        ctx = random_context(rng, max_layers=6)
        oracle = brute_force(ctx, 200, 200)
        for s in range(ctx.model.num_layers + 1):
            start_b = 0.5 * (ctx.channel.bandwidth_min + ctx.channel.bandwidth_max)
            start_r = 0.5 * (ctx.server.compute_min + ctx.server.compute_max)
            sol = inner_gd(ctx, s, start_b, start_r, config)
            bs = np.linspace(ctx.channel.bandwidth_min, ctx.channel.bandwidth_max, 200)
            rs = np.linspace(ctx.server.compute_min, ctx.server.compute_max, 200)
            bb, rr = np.meshgrid(bs, rs, indexing="ij")
            grid_min = float(np.min(utility_value(ctx, s, bb, rr)))
            assert sol.utility <= grid_min + max(1e-4, 0.01 * abs(grid_min))


def test_monotone_descent_with_conservative_step():
    rng = np.random.default_rng(2)
    for _ in range(20):
        ctx = random_context(rng)
        s = int(rng.integers(0, ctx.model.num_layers + 1))
        lip = estimate_lipschitz(ctx, 100, np.random.default_rng(0))
        eta = 1.0 / lip if lip > 0 else 1.0
        history = []
        inner_gd(ctx, s,
                 0.5 * (ctx.channel.bandwidth_min + ctx.channel.bandwidth_max),
                 0.5 * (ctx.server.compute_min + ctx.server.compute_max),
                 SolverConfig(accuracy_eps=1e-5), step_size=eta, history=history)
        diffs = np.diff(history)
        assert np.all(diffs <= 1e-12)


def test_li_gd_best_is_argmin_with_smallest_split_tiebreak():
    ctx = make_context()
    report = li_gd(ctx, TIGHT)
    assert len(report.per_layer) == ctx.model.num_layers + 1
    best_u = min(sol.utility for sol in report.per_layer)
    assert report.best.utility == best_u
    assert report.best.split == min(s.split for s in report.per_layer
                                    if s.utility == best_u)
    assert report.total_iterations == sum(s.iterations for s in report.per_layer)


def test_li_gd_single_layer_model():
    m = build_profile([LayerProfile(1, 0, 1, 5.0, 2.0)],
                      final_result_bits=0.1, input_bits=8.0)
    ctx = make_context(model=m)
    report = li_gd(ctx, TIGHT)
    assert len(report.per_layer) == 2
    assert {sol.split for sol in report.per_layer} == {0, 1}
    assert report.best.utility == min(sol.utility for sol in report.per_layer)


def test_li_gd_pure_delay_with_powerful_server_prefers_full_offload():
    # huge effective server speed, nothing to transmit, delay-only weights:
    # putting every layer on the server is optimal
    m = build_profile(
        [LayerProfile(1, 0, 1, 5.0, 0.01) for _ in range(4)],
        final_result_bits=0.001, input_bits=0.01)
    srv = make_server(unit_capability=1e5, unit_price=0.01,
                      speedup_beta=0.0, bandwidth_price_gamma=0.0)
    ctx = make_context(model=m, server=srv, hops=0, weights=(1.0, 0.0, 0.0))
    report = li_gd(ctx, TIGHT)
    oracle = brute_force(ctx, 200, 200)
    assert report.best.split == 0
    assert oracle.split == 0
    assert report.best.utility <= oracle.utility + max(1e-4, 0.01 * abs(oracle.utility))


def test_li_gd_beats_grid_oracle_on_random_scenarios():
    rng = np.random.default_rng(3)
    for _ in range(10):
        ctx = random_context(rng)
        report = li_gd(ctx, SolverConfig(accuracy_eps=1e-5))
        oracle = brute_force(ctx, 200, 200)
        assert report.best.utility <= oracle.utility + max(1e-4, 0.01 * abs(oracle.utility))


def test_warm_start_saves_iterations_on_fixture():
    ctx = make_context()
    config = SolverConfig(accuracy_eps=1e-6)
    warm = li_gd(ctx, config, warm_start=True)
    cold = li_gd(ctx, config, warm_start=False)
    assert warm.best.utility == pytest.approx(cold.best.utility, rel=1e-3)
    assert warm.total_iterations < cold.total_iterations


def test_determinism_identical_reports():
    ctx = make_context()
    r1 = li_gd(ctx, TIGHT)
    r2 = li_gd(ctx, TIGHT)
    assert r1 == r2


def test_convergence_bound_values():
    assert convergence_bound((1.0, 1.0), (1.0, 1.0), 0.5, 1e-3) == 0.0
    # squared distance 8, step 1, accuracy 0.1 -> 40
    assert convergence_bound((0.0, 0.0), (2.0, 2.0), 1.0, 0.1) == pytest.approx(40.0)


def test_iterations_within_convergence_bound():
    rng = np.random.default_rng(4)
    for _ in range(20):
        ctx = random_context(rng)
        s = int(rng.integers(0, ctx.model.num_layers + 1))
        lip = estimate_lipschitz(ctx, 100, np.random.default_rng(1))
        if lip <= 0:
            continue
        eta = 1.0 / lip
        config = SolverConfig(accuracy_eps=1e-5)
        start = (0.5 * (ctx.channel.bandwidth_min + ctx.channel.bandwidth_max),
                 0.5 * (ctx.server.compute_min + ctx.server.compute_max))
        sol = inner_gd(ctx, s, start[0], start[1], config, step_size=eta)
        bound = convergence_bound(start, (sol.bandwidth, sol.compute),
                                  eta, config.accuracy_eps)
        assert sol.iterations <= max(bound, 1.0)


def test_default_step_size_uses_margin():
    ctx = make_context()
    config = SolverConfig(lipschitz_margin=2.0, seed=0)
    lip = estimate_lipschitz(ctx, config.lipschitz_samples, np.random.default_rng(0))
    assert default_step_size(ctx, config) == pytest.approx(1.0 / (2.0 * lip))
    fixed = SolverConfig(step_size=0.123)
    assert default_step_size(ctx, fixed) == 0.123


def test_start_outside_box_rejected():
    ctx = make_context()
    with pytest.raises(ValueError):
        inner_gd(ctx, 1, 1000.0, 4.0, TIGHT)
    with pytest.raises(ValueError):
        inner_gd(ctx, 1, 10.0, 0.5, TIGHT)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(accuracy_eps=0.0)
    with pytest.raises(ValueError):
        SolverConfig(step_size=-1.0)
    with pytest.raises(ValueError):
        SolverConfig(max_inner_iters=0)
    with pytest.raises(ValueError):
        SolverConfig(lipschitz_margin=0.5)


def test_nonfinite_step_size_surfaces_as_numerical_error():
    ctx = make_context(channel=make_channel(large_scale_fading=0.0))
    # zero signal makes the transmission rate 0 -> infinite energy at s < M
    with pytest.raises(NumericalError):
        inner_gd(ctx, 0, 10.0, 4.0, SolverConfig(accuracy_eps=1e-5, step_size=0.1))
