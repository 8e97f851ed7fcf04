"""Robustness of GHZ-state nonlocality under local decoherence.

Quantifies how the Mermin-Klyshko Bell violation of n-qubit GHZ states
degrades under depolarization, dephasing and dissipation, evaluating every
quantity along two independent paths: closed-form correlations and dense
density-matrix simulation.

Modules:
    observables: Dichotomic qubit observables and per-party settings tables
    bell_operator: Mermin-Klyshko coefficient tables and the local bound
    channels_states: GHZ and decohered-GHZ density matrices
    correlations: Closed-form correlations of (decohered) GHZ states
    optimizer: Multistart see-saw maximization of the Bell value
    threshold: Largest noise still violating the inequality
    verification: Closed-form versus dense-path equivalence suite
    cli: Command-line front end

Example:
    Maximal violation of the three-qubit GHZ state::

        $ uv run ghz-robustness maxbell --n 3 --channel none

    Depolarizing threshold for two qubits::

        $ uv run ghz-robustness pmax --n 2 --channel depolarizing
"""

__version__ = "0.1.0"

from .bell_operator import BellExpansion, build_mk
from .channels_states import ChannelKind, NoiseSpec
from .config import OptimizerConfig, Settings, ThresholdConfig, get_settings
from .optimizer import OptimizationReport, max_bell
from .threshold import ThresholdResult, analytic_pmax, numeric_pmax

__all__ = [
    "BellExpansion",
    "ChannelKind",
    "NoiseSpec",
    "OptimizationReport",
    "OptimizerConfig",
    "Settings",
    "ThresholdConfig",
    "ThresholdResult",
    "__version__",
    "analytic_pmax",
    "build_mk",
    "get_settings",
    "max_bell",
    "numeric_pmax",
]
