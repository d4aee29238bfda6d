"""Multi-cell wideband downlink with switch-interconnected tunable surfaces.

A numpy/scipy library modeling an interference broadcast channel where each
base station owns one reconfigurable surface whose elements can be cross
routed by a switch network, plus a distributed pricing-based optimizer that
jointly tunes precoders, element capacitances and switch permutations to
maximize the network sum rate.
"""

from .channels import (NetworkChannels, NetworkTopology, composite_channel,
                       generate_channels, generate_link_taps, load_channels,
                       pathloss, save_channels, taps_to_frequency)
from .circuit import (ElementCircuit, SubcarrierGrid, build_phase_matrices,
                      characteristic_impedance, reflection_derivative,
                      reflection_direct, reflection_profile,
                      reflection_reformulated)
from .errors import ConfigError, DegenerateInputError, NumericalFailureError
from .rates import Iterate, mui, snapshot, sum_rate, user_rate
from .scenario import (ScenarioConfig, build_scenario, channels_for_trial,
                       dbm_to_watt, load_config, watt_to_dbm)
from .solver import SolverConfig, Trace, run
from .montecarlo import VARIANTS, run_sweep

__version__ = "0.1.0"
