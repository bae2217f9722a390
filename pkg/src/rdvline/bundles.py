"""Strategy bundles: adaptive decision trees and their evaluation.

A bundle holds one plan per player.  The general form is a decision tree
whose nodes are keyed by observation batches (time, own-frame position,
observation kinds) and carry a path segment: an initial direction plus
scheduled turning times, or explicit waypoints for sub-unit-speed motion.
A plain turning-point path is the single-node special case.  For testing
the information-consistency checker, a player may instead be given one
explicit path per scenario.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Union

from . import engine
from .engine import HistTable, batch_key, drive
from .model import (AbsolutePath, GameInstance, ModelError, Outcome, PathPlan,
                    UNRESOLVED)
from .rational import Rat, ZERO, format_rational, parse_rational, rat


class ConsistencyError(ModelError):
    """A player's paths differ between scenarios he cannot yet distinguish."""


_OBS_NAMES = (engine.MET, engine.FOUND, engine.ABSENT, engine.DROP)


class PlanNode:
    """A path segment adopted at an observation (or at the root).

    ``turns`` are scheduled direction flips at plan-determined times; they do
    not require an observation.  ``children`` map later observation batches
    to continuations; an observation with no matching child leaves the
    current segment in force.
    """

    __slots__ = ("t", "x", "obs_kinds", "dir", "turns", "waypoints", "children")

    def __init__(self, t=ZERO, x=ZERO, obs_kinds=(), direction=+1, turns=(),
                 waypoints=(), children=()):
        self.t = rat(t)
        self.x = rat(x)
        self.obs_kinds = tuple(obs_kinds)
        for k in self.obs_kinds:
            if k not in _OBS_NAMES:
                raise ModelError(f"unknown observation kind {k!r}")
        if direction not in (+1, -1):
            raise ModelError("direction must be +1 or -1")
        self.dir = direction
        self.turns = tuple(rat(u) for u in turns)
        if any(u1 <= u0 for u0, u1 in zip(self.turns, self.turns[1:])) or \
                any(u <= self.t for u in self.turns):
            raise ModelError("turn times must be strictly increasing and after the node time")
        self.waypoints = tuple((rat(u), rat(p)) for u, p in waypoints)
        if self.waypoints and self.turns:
            raise ModelError("give either turns or waypoints, not both")
        self.children = {}
        for child in children:
            self.add_child(child)

    @property
    def key(self):
        return batch_key(self.t, self.x, self.obs_kinds)

    def add_child(self, child: "PlanNode") -> "PlanNode":
        if not child.obs_kinds:
            raise ModelError("child nodes must carry an observation")
        if child.t < self.t:
            raise ModelError("child observation precedes its parent")
        if child.key in self.children:
            raise ModelError(f"duplicate child for batch {child.key}")
        self.children[child.key] = child
        return self

    def to_path(self) -> AbsolutePath:
        """The segment as a path from (t, x) onward, ignoring children."""
        pts = [(self.t, self.x)]
        if self.waypoints:
            prev_t, prev_x = self.t, self.x
            for u, p in self.waypoints:
                if u <= prev_t or abs(p - prev_x) > u - prev_t:
                    raise ModelError("waypoints must advance in time at unit speed or less")
                pts.append((u, p))
                prev_t, prev_x = u, p
            return AbsolutePath(pts, rat(self.dir))
        d = self.dir
        pos, prev = self.x, self.t
        for u in self.turns:
            pos += d * (u - prev)
            pts.append((u, pos))
            d = -d
            prev = u
        return AbsolutePath(pts, rat(d))


PlayerPlan = Union[PlanNode, dict]


@dataclass
class StrategyBundle:
    """Plans for both players plus the drop times they were built for."""

    player_i: PlayerPlan
    player_ii: PlayerPlan
    drop1: Optional[Rat] = None
    drop2: Optional[Rat] = None

    def __post_init__(self):
        self.drop1 = rat(self.drop1) if self.drop1 is not None else None
        self.drop2 = rat(self.drop2) if self.drop2 is not None else None
        for plan in (self.player_i, self.player_ii):
            if isinstance(plan, dict):
                if set(plan) != {1, 2, 3, 4}:
                    raise ModelError("scenario path maps need scenarios 1..4")
            elif not isinstance(plan, PlanNode):
                raise ModelError("a plan is a PlanNode tree or a scenario->path map")


def bundle_from_turn_lists(f_turns, g_turns, drop1=None, drop2=None) -> StrategyBundle:
    """Classic bracket-notation strategies: one turning-point list per player."""
    f = PathPlan.bang_bang(f_turns)
    g = PathPlan.bang_bang(g_turns)
    return StrategyBundle(plan_from_path(f), plan_from_path(g), drop1, drop2)


def plan_from_path(path: PathPlan) -> PlanNode:
    turns = path.turning_times()
    if turns is not None:
        direction = +1
        if turns and turns[0] == 0:
            direction = -1
            turns = turns[1:]
        return PlanNode(direction=direction, turns=turns)
    return PlanNode(direction=path.terminal_dir, waypoints=path.waypoints[1:])


def _tree_provider(tab: HistTable, root: PlanNode, hist_attr: str):
    node_of = {0: root}
    path_of = {}

    def node_for(hid: int) -> PlanNode:
        node = node_of.get(hid)
        if node is None:
            parent = node_for(tab.parent[hid])
            node = parent.children.get(tab.batch[hid], parent)
            node_of[hid] = node
        return node

    def futures(ctxs, attr=hist_attr):
        out = {}
        for c in ctxs:
            hid = getattr(c, attr)
            path = path_of.get(hid)
            if path is None:
                path = path_of[hid] = node_for(hid).to_path()
            out[c.sid] = path
        return out

    return futures


def _map_provider(paths: dict):
    fixed = {sid: AbsolutePath(p.waypoints, rat(p.terminal_dir)) for sid, p in paths.items()}

    def futures(ctxs):
        return {c.sid: fixed[c.sid] for c in ctxs}

    return futures


def _check_drops(instance, bundle):
    for name in ("drop1", "drop2"):
        ours = getattr(bundle, name)
        theirs = getattr(instance, name)
        if ours is not None and ours != theirs:
            raise ModelError(f"bundle {name}={ours} does not match the instance ({theirs})")


def realize_bundle(instance, bundle, verify=None):
    """Run the observation-model simulation for a bundle.

    Returns the raw DriveResult: exact per-scenario ends, any consistency
    violation, and the realized per-scenario waypoints of both players.
    Tree-driven plans are information-consistent by construction, so
    verification defaults to on only when explicit scenario paths are given.
    """
    _check_drops(instance, bundle)
    if verify is None:
        verify = isinstance(bundle.player_i, dict) or isinstance(bundle.player_ii, dict)
    tab_i, tab_ii = HistTable(), HistTable()
    if isinstance(bundle.player_i, PlanNode):
        fut_i = _tree_provider(tab_i, bundle.player_i, "hist_i")
    else:
        fut_i = _map_provider(bundle.player_i)
    if isinstance(bundle.player_ii, PlanNode):
        fut_g = _tree_provider(tab_ii, bundle.player_ii, "hist_ii")
    else:
        fut_g = _map_provider(bundle.player_ii)

    def provider(t, ctxs):
        return fut_i(ctxs), fut_g(ctxs)

    return drive(instance, provider, verify=verify, tab_i=tab_i, tab_ii=tab_ii)


def evaluate_bundle(instance: GameInstance, bundle: StrategyBundle) -> Outcome:
    """Exact four-scenario outcome of a bundle, honoring the observation model."""
    result = realize_bundle(instance, bundle)
    if result.violation is not None:
        player, a, b, when = result.violation
        raise ConsistencyError(
            f"player {player} acts differently in scenarios {a} and {b} from time {when} "
            "although their observation histories still agree")
    ends = tuple(result.ends.get(sid, UNRESOLVED) for sid in (1, 2, 3, 4))
    return Outcome(ends)


@dataclass(frozen=True)
class ConsistencyVerdict:
    ok: bool
    player: Optional[str] = None
    scenarios: Optional[tuple] = None
    time: Optional[Rat] = None


def check_consistency(instance: GameInstance, bundle: StrategyBundle) -> ConsistencyVerdict:
    """Verify that each player acts identically in scenarios he cannot
    distinguish yet; on failure, report the first diverging pair and time."""
    _check_drops(instance, bundle)
    result = realize_bundle(instance, bundle, verify=True)
    if result.violation is None:
        return ConsistencyVerdict(True)
    player, a, b, when = result.violation
    return ConsistencyVerdict(False, player, (a, b), when)


# ---------------------------------------------------------------------------
# serialization: rationals as "p/q" strings, trees as nested nodes

def _node_to_json(node: PlanNode) -> dict:
    obs = "+".join(node.obs_kinds) if node.obs_kinds else "ROOT"
    out = {
        "t": format_rational(node.t),
        "obs": obs,
        "x": format_rational(node.x),
        "dir": node.dir,
        "turns": [format_rational(u) for u in node.turns],
        "children": [_node_to_json(node.children[k]) for k in sorted(node.children)],
    }
    if node.waypoints:
        out["waypoints"] = [[format_rational(u), format_rational(p)] for u, p in node.waypoints]
    return out


def _node_from_json(data: dict) -> PlanNode:
    obs = data.get("obs", "ROOT")
    kinds = () if obs == "ROOT" else tuple(obs.split("+"))
    node = PlanNode(
        t=parse_rational(data["t"]),
        x=parse_rational(data["x"]),
        obs_kinds=kinds,
        direction=int(data["dir"]),
        turns=[parse_rational(u) for u in data.get("turns", ())],
        waypoints=[(parse_rational(u), parse_rational(p))
                   for u, p in data.get("waypoints", ())],
    )
    for child in data.get("children", ()):
        node.add_child(_node_from_json(child))
    return node


def _path_to_json(path: PathPlan) -> dict:
    return {
        "waypoints": [[format_rational(t), format_rational(x)] for t, x in path.waypoints],
        "terminal_dir": path.terminal_dir,
    }


def _path_from_json(data: dict) -> PathPlan:
    return PathPlan([(parse_rational(t), parse_rational(x)) for t, x in data["waypoints"]],
                    terminal_dir=int(data["terminal_dir"]))


def _plan_to_json(plan: PlayerPlan):
    if isinstance(plan, PlanNode):
        return _node_to_json(plan)
    return {"scenario_paths": {str(sid): _path_to_json(p) for sid, p in sorted(plan.items())}}


def _plan_from_json(data):
    if "scenario_paths" in data:
        return {int(sid): _path_from_json(p) for sid, p in data["scenario_paths"].items()}
    return _node_from_json(data)


def bundle_to_json(bundle: StrategyBundle) -> dict:
    return {
        "drop1": format_rational(bundle.drop1) if bundle.drop1 is not None else None,
        "drop2": format_rational(bundle.drop2) if bundle.drop2 is not None else None,
        "player_I": _plan_to_json(bundle.player_i),
        "player_II": _plan_to_json(bundle.player_ii),
    }


def bundle_from_json(data: dict) -> StrategyBundle:
    return StrategyBundle(
        player_i=_plan_from_json(data["player_I"]),
        player_ii=_plan_from_json(data["player_II"]),
        drop1=parse_rational(data["drop1"]) if data.get("drop1") is not None else None,
        drop2=parse_rational(data["drop2"]) if data.get("drop2") is not None else None,
    )


def bundle_sort_key(bundle: StrategyBundle) -> str:
    return json.dumps(bundle_to_json(bundle), sort_keys=True)
