"""Split-point selection and bandwidth allocation for split federated
learning over wireless networks, with latency simulation and a micro-scale
protocol trainer."""

__version__ = "0.1.0"

from .bandwidth import BandwidthAllocation, binary_search_allocation, ratio_for_tau
from .convergence import ConvergenceParams, bound_at, p_term, split_sensitivity
from .errors import ConfigError, InfeasibleError, NumericalError
from .microsfl import MicroNet, SplitFedNetClassifier, train
from .optimizer import JointLatencyOptimizer, JointSolution, alternating_optimize, expected_total_latency
from .profiler import (
    LayerSpec,
    NetworkArchitecture,
    NetworkProfile,
    builtin_architecture,
    intermediate_size_bits,
    layer_macs,
    load_architecture,
    parameter_bits,
    profile,
)
from .scenario import Scenario, generate_fleet, load_scenario, make_scenario
from .simulator import RoundOutcome, run_campaign, simulate_fedavg_round, simulate_sfl_round
from .splitting import (
    SplitPolicy,
    backward_induction,
    expected_latency_at_split,
    select_split,
    split_layer_cap,
    split_probabilities,
)
from .wireless import (
    ChannelRealization,
    DeviceProfile,
    SystemParams,
    comm_latency,
    compute_latency_cdf,
    expected_compute_latency,
    expected_channel,
    path_loss_db,
    sample_channel,
    sample_compute_latency,
    transmission_rate,
)
