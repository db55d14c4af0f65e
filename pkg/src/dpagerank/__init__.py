"""PageRank by D-Iteration (damped fluid diffusion) with baseline solvers."""

from .bench import compute_reference, generate_synthetic, run_benchmark
from .classic import (
    OpicState,
    dense_reference_solve,
    gauss_seidel,
    opic,
    power_iteration,
)
from .config import ConfigError, SolverConfig
from .diteration import (
    DiState,
    Scheduler,
    di_init,
    di_run,
    di_step,
    di_update,
    load_state,
    normalized_history,
    residual_bound,
    save_state,
    schedule_next,
)
from .graph import (
    DeltaError,
    Graph,
    GraphDelta,
    ParseError,
    apply_delta,
    load_delta,
    load_edge_list,
    transitions,
)
from .trace import ConvergenceTrace, TraceRow

__version__ = "0.1.0"
