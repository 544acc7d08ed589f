"""Scenario configuration: JSON schema, validation, and context assembly."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from mcsa.costs import ChannelParams, DeviceProfile, ServerProfile, UserContext
from mcsa.ligd import SolverConfig
from mcsa.models import CATALOG_NAMES, ModelProfile, profile_from_dict, synthetic_catalog
from mcsa.topology import ApGraph, graph_from_dict

__all__ = ["ConfigError", "UserSpec", "Scenario", "load_scenario", "scenario_from_dict"]


class ConfigError(ValueError):
    """Invalid or unresolvable scenario configuration."""


@dataclass(frozen=True)
class UserSpec:
    user_id: str
    ap: str
    model: ModelProfile
    device: DeviceProfile
    channel: ChannelParams
    weights: tuple[float, float, float]
    rounds: int
    strategy_calc_delay: float


@dataclass
class Scenario:
    scenario_id: str
    seed: int
    graph: ApGraph
    servers: dict                        # server id -> ServerProfile
    users: list[UserSpec]
    solver: SolverConfig
    baseline_strategy: str = "device_only"
    r_cap: float | None = None
    hop_values: list[int] = field(default_factory=list)
    load_levels: list[int] = field(default_factory=list)
    contention_coeff: float = 0.0

    def user(self, user_id: str) -> UserSpec:
        for u in self.users:
            if u.user_id == user_id:
                return u
        raise ConfigError(f"unknown user {user_id!r}")

    def context(self, spec: UserSpec, ap: str | None = None,
                server_id: str | None = None) -> tuple[UserContext, str]:
        """UserContext for a user attached at ``ap`` (default: its home AP),
        served by ``server_id`` (default: the nearest server).  Returns the
        context and the serving server id."""
        ap = spec.ap if ap is None else ap
        if ap not in self.graph.ap_ids:
            raise ConfigError(f"unknown AP {ap!r}")
        if server_id is None:
            server_id = self.graph.serving_server(ap)
        if server_id not in self.servers:
            raise ConfigError(f"no profile for server {server_id!r}")
        ctx = UserContext(
            device=spec.device,
            channel=spec.channel,
            model=spec.model,
            server=self.servers[server_id],
            hops=self.graph.hop_count(ap, server_id),
            backhaul_bandwidth=self.graph.backhaul_bandwidth,
            rounds=spec.rounds,
            strategy_calc_delay=spec.strategy_calc_delay,
            weights=spec.weights,
        )
        return ctx, server_id


def load_scenario(path) -> Scenario:
    """Load and validate a scenario JSON file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return scenario_from_dict(doc)


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        return _parse(doc)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def _parse(doc: dict) -> Scenario:
    graph = graph_from_dict(doc["graph"])
    servers = {
        sid: ServerProfile(
            unit_capability=float(rec["unit_capability"]),
            unit_price=float(rec["unit_price"]),
            compute_min=float(rec["compute_min"]),
            compute_max=float(rec["compute_max"]),
            speedup_beta=float(rec.get("speedup_beta", 0.0)),
            bandwidth_price_gamma=float(rec.get("bandwidth_price_gamma", 0.0)),
            bandwidth_price_power=float(rec.get("bandwidth_price_power", 1.0)),
        )
        for sid, rec in doc["servers"].items()
    }
    for srv in graph.server_ids:
        if srv not in servers:
            raise ConfigError(f"server {srv!r} placed in graph but has no profile")

    inline_models = {name: profile_from_dict(spec)
                     for name, spec in doc.get("models", {}).items()}

    def resolve_model(name):
        if name in inline_models:
            return inline_models[name]
        if name in CATALOG_NAMES:
            return synthetic_catalog(name)
        raise ConfigError(f"unknown model {name!r}")

    users = []
    for rec in doc["users"]:
        if rec["ap"] not in graph.ap_ids:
            raise ConfigError(f"user {rec['id']!r} attached to unknown AP {rec['ap']!r}")
        dev = rec["device"]
        ch = rec["channel"]
        users.append(UserSpec(
            user_id=rec["id"],
            ap=rec["ap"],
            model=resolve_model(rec["model"]),
            device=DeviceProfile(
                compute_capability=float(dev["compute_capability"]),
                switched_capacitance=float(dev["switched_capacitance"]),
                cycles_per_bit=float(dev["cycles_per_bit"]),
                tx_power=float(dev["tx_power"]),
            ),
            channel=ChannelParams(
                large_scale_fading=float(ch["large_scale_fading"]),
                small_scale_fading=float(ch["small_scale_fading"]),
                noise_density=float(ch["noise_density"]),
                bandwidth_min=float(ch["bandwidth_min"]),
                bandwidth_max=float(ch["bandwidth_max"]),
            ),
            weights=tuple(float(w) for w in rec["weights"]),
            rounds=int(rec.get("rounds", 1)),
            strategy_calc_delay=float(rec.get("strategy_calc_delay", 0.0)),
        ))
    if not users:
        raise ConfigError("scenario needs at least one user")

    solver_doc = doc.get("solver", {})
    solver = SolverConfig(
        accuracy_eps=float(solver_doc.get("accuracy_eps", 1e-4)),
        step_size=solver_doc.get("step_size"),
        max_inner_iters=int(solver_doc.get("max_inner_iters", 50_000)),
        cold_start=tuple(solver_doc["cold_start"]) if "cold_start" in solver_doc else None,
        seed=int(doc.get("seed", 0)),
    )

    sweeps = doc.get("sweeps", {})
    baseline = doc.get("baseline", "device_only")
    if baseline not in ("device_only", "edge_only", "latency_only", "capped", "mcsa"):
        raise ConfigError(f"unknown baseline strategy {baseline!r}")
    return Scenario(
        scenario_id=str(doc.get("id", "scenario")),
        seed=int(doc.get("seed", 0)),
        graph=graph,
        servers=servers,
        users=users,
        solver=solver,
        baseline_strategy=baseline,
        r_cap=float(doc["r_cap"]) if "r_cap" in doc else None,
        hop_values=[int(h) for h in sweeps.get("hop_values", [])],
        load_levels=[int(k) for k in sweeps.get("load_levels", [])],
        contention_coeff=float(sweeps.get("contention_coeff", 0.0)),
    )
