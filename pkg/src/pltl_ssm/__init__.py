"""Past-time temporal logic with counting and MOD atoms, compiled into state space models."""
from .compiler import CompileError, compile, log_headroom
from .formula import (
    FormulaError, FormulaSyntaxError, CraspLoweringError, build_index, lower_to_crasp,
    nesting_depth, normalize_mod_lcm, parse, pretty, sequential_decomposition,
)
from .numerics import EXACT, Exact, Fixed, LogPrecision, Numeric, parse_mode
from .semantics import enumerate_language, eval, eval_at, parse_trace
from .ssm import GatePolicy, Ssm, accepts, from_json, run, run_layer, to_json
from .verify import aa_star_demo, check_equivalence, monotonicity_experiment

__all__ = [
    "CompileError", "compile", "log_headroom",
    "FormulaError", "FormulaSyntaxError", "CraspLoweringError", "build_index",
    "lower_to_crasp", "nesting_depth", "normalize_mod_lcm", "parse", "pretty",
    "sequential_decomposition",
    "EXACT", "Exact", "Fixed", "LogPrecision", "Numeric", "parse_mode",
    "enumerate_language", "eval", "eval_at", "parse_trace",
    "GatePolicy", "Ssm", "accepts", "from_json", "run", "run_layer", "to_json",
    "aa_star_demo", "check_equivalence", "monotonicity_experiment",
]
