"""Joint DNN split-point and edge resource allocation toolkit.

Computes jointly optimal chain-model split points and communication/compute
resource allocations for mobile users at the network edge, minimizing a
weighted sum of inference delay, device energy, and resource-renting cost.
Includes a mobility-aware variant that decides, after a handover, between
re-solving at the new server and relaying intermediate data back to the
original one.
"""

from mcsa.models import LayerProfile, ModelProfile, build_profile, layer_flops, synthetic_catalog
from mcsa.costs import (
    ChannelParams,
    DeviceProfile,
    ServerProfile,
    UserContext,
    UtilityBreakdown,
    utility,
)
from mcsa.ligd import LayerSolution, SolverConfig, SolverReport, li_gd
from mcsa.mligd import MobilityContext, MobilitySolution, mli_gd

__all__ = [
    "LayerProfile",
    "ModelProfile",
    "build_profile",
    "layer_flops",
    "synthetic_catalog",
    "DeviceProfile",
    "ChannelParams",
    "ServerProfile",
    "UserContext",
    "UtilityBreakdown",
    "utility",
    "SolverConfig",
    "LayerSolution",
    "SolverReport",
    "li_gd",
    "MobilityContext",
    "MobilitySolution",
    "mli_gd",
]

__version__ = "0.1.0"
