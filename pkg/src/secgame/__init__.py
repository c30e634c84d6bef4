"""Attack/defense stochastic games for network security risk assessment."""

from .casestudy import builtin_case_study
from .errors import (
    ConvergenceError, GraphCycleError, ParseError, ScenarioError, SchemaError, SecGameError,
    SolverError,
)
from .model import (
    AclRule, AttackAction, AttackOption, DeceptionConfig, DefenseAction, GameParams,
    NetworkNode, NodeConfig, NodeStateLevel, Scenario, acl_permits, validate_scenario,
)
from .scenario_io import (
    export_graph, export_report, load_report, load_scenario, serialize_scenario,
)
from .solver import (
    EquilibriumResult, MatrixGameSolution, backward_induct, security_risk, shapley_iterate,
    solve_game, solve_matrix_game, solve_oracle, uniform_support,
)
from .states import GameGraph, GameState, generate_states, reachable_frontier
from .utility import (
    PayoffMatrix, TabularEngine, UtilityEngine, attack_utility, build_payoff_matrix,
    deception_expected_payoff, mitigated_loss, tracing_cost,
)

__version__ = "0.1.0"
