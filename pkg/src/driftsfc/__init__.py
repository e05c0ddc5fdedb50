"""Online SFC placement on drifting networks with a lifelong MCTS planner."""

from .drift import DriftReport, DriftWeights, calibrate_lipschitz_c, graph_drift
from .harness import ScenarioSpec, load_config, percentile, run_episode, run_scenario
from .lifelong import KnowledgeBase, LisfcPlanner, TransferParams, auct_bound
from .mdp import Action, MdpState, RewardParams, SfcMdp
from .network import NetworkGraph, graph_family
from .search import UctParams, UctPlanner
from .workload import SfcRequest, WorkloadSpec, generate_workload

__version__ = "0.1.0"
