"""Shared builders for randomized and fixed test contexts."""

import numpy as np
import pytest

from mcsa.costs import ChannelParams, DeviceProfile, ServerProfile, UserContext
from mcsa.models import LayerProfile, build_profile, synthetic_catalog

SCENARIO_DIR = "scenarios"


def make_device(**overrides):
    kw = dict(compute_capability=1.2, switched_capacitance=0.02,
              cycles_per_bit=1.0, tx_power=0.5)
    kw.update(overrides)
    return DeviceProfile(**kw)


def make_channel(**overrides):
    kw = dict(large_scale_fading=8.0, small_scale_fading=1.0, noise_density=0.05,
              bandwidth_min=1.0, bandwidth_max=20.0)
    kw.update(overrides)
    return ChannelParams(**kw)


def make_server(**overrides):
    kw = dict(unit_capability=4.0, unit_price=0.08, compute_min=1.0, compute_max=16.0,
              speedup_beta=0.5, bandwidth_price_gamma=0.01)
    kw.update(overrides)
    return ServerProfile(**kw)


def make_context(model=None, device=None, channel=None, server=None, **overrides):
    kw = dict(hops=2, backhaul_bandwidth=40.0, rounds=1, strategy_calc_delay=0.0,
              weights=(0.5, 0.2, 0.3))
    kw.update(overrides)
    return UserContext(
        device=device or make_device(),
        channel=channel or make_channel(),
        model=model or synthetic_catalog("NiN"),
        server=server or make_server(),
        **kw,
    )


def random_model(rng, max_layers=9):
    """Random chain model: moderate work per layer, loosely decreasing
    intermediate sizes with a mid-network bulge."""
    m = int(rng.integers(3, max_layers + 1))
    layers = []
    for i in range(m):
        bulge = 1.0 + 0.8 * np.sin(np.pi * (i + 1) / (m + 1))
        layers.append(LayerProfile(
            conv_count=int(rng.integers(1, 4)),
            pool_count=int(rng.integers(0, 2)),
            relu_count=int(rng.integers(1, 4)),
            flops=float(rng.uniform(0.3, 1.5)),
            out_size_bits=float(rng.uniform(0.2, 6.0) * bulge * (1.0 - 0.7 * i / m)),
        ))
    return build_profile(layers, final_result_bits=float(rng.uniform(0.02, 0.1)),
                         input_bits=float(rng.uniform(10.0, 30.0)))


def random_weights(rng):
    w = rng.uniform(0.1, 1.0, 3)
    w = w / w.sum()
    return (float(w[0]), float(w[1]), float(w[2]))


def random_context(rng, max_layers=9, max_hops=4):
    """Random but well-conditioned user context for oracle comparisons."""
    return UserContext(
        device=DeviceProfile(
            compute_capability=float(rng.uniform(0.8, 4.0)),
            switched_capacitance=float(rng.uniform(0.005, 0.03)),
            cycles_per_bit=1.0,
            tx_power=float(rng.uniform(0.2, 1.0)),
        ),
        channel=ChannelParams(
            large_scale_fading=float(rng.uniform(4.0, 16.0)),
            small_scale_fading=float(rng.uniform(0.5, 1.5)),
            noise_density=float(rng.uniform(0.02, 0.1)),
            bandwidth_min=float(rng.uniform(0.5, 2.0)),
            bandwidth_max=float(rng.uniform(10.0, 30.0)),
        ),
        model=random_model(rng, max_layers),
        server=ServerProfile(
            unit_capability=float(rng.uniform(2.0, 10.0)),
            unit_price=float(rng.uniform(0.02, 0.15)),
            compute_min=1.0,
            compute_max=float(rng.uniform(8.0, 16.0)),
            speedup_beta=float(rng.uniform(0.0, 1.0)),
            bandwidth_price_gamma=float(rng.uniform(0.0, 0.02)),
            bandwidth_price_power=float(rng.uniform(1.0, 1.5)),
        ),
        hops=int(rng.integers(0, max_hops + 1)),
        backhaul_bandwidth=float(rng.uniform(20.0, 60.0)),
        rounds=int(rng.integers(1, 9)),
        strategy_calc_delay=float(rng.uniform(0.0, 0.5)),
        weights=random_weights(rng),
    )


def random_interior_point(rng, ctx, margin=0.05):
    """Uniform point strictly inside the (b, r) box, away from the walls."""
    ch, srv = ctx.channel, ctx.server
    db = ch.bandwidth_max - ch.bandwidth_min
    dr = srv.compute_max - srv.compute_min
    b = float(rng.uniform(ch.bandwidth_min + margin * db, ch.bandwidth_max - margin * db))
    r = float(rng.uniform(srv.compute_min + margin * dr, srv.compute_max - margin * dr))
    return b, r


@pytest.fixture
def nin_context():
    return make_context()
