"""Exact solver for rendezvous search on the line with droppable gifts."""

from .rational import Rat, decimal_string, format_rational, parse_rational, rat
from .model import (AbsolutePath, GameInstance, GameKind, ModelError, Outcome,
                    PathPlan, PLAYER_I, SCENARIO_FRAMES, ScenarioFrame,
                    UNRESOLVED, agent_path, agent_position, frame,
                    gift_position, scenario_end_time)
from .bundles import (ConsistencyError, ConsistencyVerdict, PlanNode,
                      StrategyBundle, bundle_from_json, bundle_from_turn_lists,
                      bundle_sort_key, bundle_to_json, check_consistency,
                      evaluate_bundle, plan_from_path, realize_bundle)
from .solver import (HorizonError, SolveResult, SolverState, direction_branches,
                     initial_state, next_event_time, solve_fixed_drops)

__all__ = [
    "Rat", "rat", "parse_rational", "format_rational", "decimal_string",
    "GameKind", "GameInstance", "ScenarioFrame", "SCENARIO_FRAMES", "frame",
    "PathPlan", "AbsolutePath", "Outcome", "ModelError", "UNRESOLVED", "PLAYER_I",
    "agent_position", "agent_path", "gift_position", "scenario_end_time",
    "PlanNode", "StrategyBundle", "bundle_from_turn_lists", "plan_from_path",
    "evaluate_bundle", "realize_bundle", "check_consistency",
    "ConsistencyError", "ConsistencyVerdict",
    "bundle_to_json", "bundle_from_json", "bundle_sort_key",
    "solve_fixed_drops", "SolveResult", "SolverState",
    "initial_state", "next_event_time", "direction_branches", "HorizonError",
]
