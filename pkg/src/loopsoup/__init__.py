"""loopsoup: Monte Carlo laboratory for random loop soups of interpolating
spin-1/2 Heisenberg-type models, with exact-diagonalization cross-checks and
Poisson-Dirichlet partition statistics."""

from ._kernels import HAS_NUMBA
from .config import BAR, CROSSING, Event, LoopConfig, dump_config, load_config
from .graph import (build_complete, build_cycle, build_path, build_torus,
                    far_pair, graph_distance, parse_graph_spec)
from .observables import EstimatorResult, LoopPartition
from .sampler import (ChainState, ModelParams, direct_weight_estimate,
                      run_chain, run_chains, run_gillespie, sample_poisson)
from .trace import delta_loops, loop_at, pair_event, trace_loops

__version__ = "0.1.0"

__all__ = [
    "HAS_NUMBA", "BAR", "CROSSING", "Event", "LoopConfig", "dump_config",
    "load_config", "build_complete", "build_cycle", "build_path",
    "build_torus", "far_pair", "graph_distance", "parse_graph_spec",
    "EstimatorResult", "LoopPartition", "ChainState", "ModelParams",
    "direct_weight_estimate", "run_chain", "run_chains", "run_gillespie",
    "sample_poisson", "delta_loops", "loop_at", "pair_event", "trace_loops",
    "__version__",
]
