"""Retrieval sequencing optimization and order-stream simulation for
automated drug dispensing racks."""

from .catalog import (Bin, GeneratorSpec, InfeasibleOrderError, Order,
                      SequencingInstance, TrailingState, build_instance,
                      generate_stream, load_dataset, write_dataset)
from .geometry import (GridPosition, RackConfig, dual_command_time, leg_time,
                       paper_rack)
from .lpexport import export_lp, parse_lp, solve_with_milp
from .sequencing import (Cycle, RetrievalPlan, brute_force_oracle, solve_dp,
                         solve_greedy, solve_optimal, solve_random,
                         validate_plan)
from .simulator import (ComparisonTable, SimReport, StreamConfig,
                        compare_layouts, compare_strategies,
                        replicate_stream_means, run_stream)
from .stochastics import SortingModel, expected_max, sample_sorting

__version__ = "0.1.0"
