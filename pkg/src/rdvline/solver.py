"""Exact optimum over admissible strategies when the drop times are fixed.

The search advances event by event.  Between events every player moves at
unit speed in a fixed direction; directions may change only when something
happens in a scenario still live: a meeting, a gift pickup, a scheduled
drop, or the informative absence of a gift.  Direction choices are made per
information group (one choice per observation history, never per scenario),
so every enumerated strategy is information-consistent by construction.
Branch-and-bound prunes against the best complete strategy found so far.
"""

from __future__ import annotations

import itertools
from typing import NamedTuple, Optional

from .bundles import PlanNode, StrategyBundle, bundle_sort_key
from .engine import Ctx, HistTable, fresh_contexts, process_instant
from .model import GameInstance, GameKind, ModelError
from .rational import Rat, ZERO, rat


class HorizonError(RuntimeError):
    """The optimal endings do not fit inside the instance horizon."""


class SolverState(NamedTuple):
    t: object
    ctxs: tuple
    dropped_i: bool
    dropped_ii: bool
    ends: tuple  # ((sid, end_time), ...) for resolved scenarios


class SolveResult(NamedTuple):
    value: object
    optimal_bundles: tuple
    node_count: int


def initial_state(instance: GameInstance, tab_i=None, tab_ii=None) -> SolverState:
    tab_i = tab_i if tab_i is not None else HistTable()
    tab_ii = tab_ii if tab_ii is not None else HistTable()
    ctxs, ends, di, dii = process_instant(
        instance, ZERO, fresh_contexts(), False, False, tab_i, tab_ii)
    return SolverState(ZERO, tuple(ctxs), di, dii, tuple(ends))


def next_event_time(instance: GameInstance, state: SolverState,
                    dirs_i, dirs_ii) -> Optional[Rat]:
    """Earliest future time at which anything happens in any live scenario
    under the given per-group directions; None if nothing ever will."""
    kind = instance.kind
    D = instance.distance
    t = state.t
    best = None
    if kind.player_one_drops and not state.dropped_i:
        best = instance.drop1
    if kind.player_two_drops and not state.dropped_ii:
        if best is None or instance.drop2 < best:
            best = instance.drop2
    for c in state.ctxs:
        vi = dirs_i[c.hist_i]
        va = c.eps * dirs_ii[c.hist_ii]
        apos = c.sigma * D + c.eps * c.g
        rel = vi - va
        if rel:
            s = (apos - c.x_i) / rel
            if s > 0 and (best is None or t + s < best):
                best = t + s
        if c.gift_ii is not None and not c.found_i:
            s = (c.gift_ii - c.x_i) * vi  # vi is +-1, so this is dx/vi
            if s > 0 and (best is None or t + s < best):
                best = t + s
        if c.gift_i is not None and not c.found_ii:
            s = (c.gift_i - apos) * va
            if s > 0 and (best is None or t + s < best):
                best = t + s
    return best


def _needed(kind, c, player_i: bool) -> bool:
    """Whether this scenario still requires the player's participation to end.

    A scenario can end without a player only through the other player's gift
    pickup: then drifting away merely forgoes a meeting, which is harmless,
    so such directions stay admissible (the classic strategies use them).
    """
    if player_i:
        if c.gift_i is None or c.found_ii:
            return True
        if kind is GameKind.TWO_GIFTS_OR:
            return False
        return not (kind is GameKind.TWO_GIFTS_AND and c.found_i)
    if c.gift_ii is None or c.found_i:
        return True
    if kind in (GameKind.ONE_GIFT, GameKind.TWO_GIFTS_OR):
        return False
    return not c.found_ii


def _dir_candidates(instance, state, members, player_i: bool):
    """Admissible directions for one information group, nearest trigger first.

    A direction is provably senseless, and dropped, when no live scenario of
    the group has the other player or a still-relevant gift on that side,
    every scenario of the group needs this player to end, and no drop whose
    location is still undetermined is pending.
    """
    pending = ((instance.kind.player_one_drops and not state.dropped_i)
               or (instance.kind.player_two_drops and not state.dropped_ii))
    prunable = (not pending
                and all(_needed(instance.kind, c, player_i) for c in members))
    D = instance.distance
    scored = []
    for d in (+1, -1):
        nearest = None
        for c in members:
            apos = c.sigma * D + c.eps * c.g
            if player_i:
                own = c.x_i
                targets = [apos]
                if c.gift_ii is not None and not c.found_i:
                    targets.append(c.gift_ii)
            else:
                own = c.g
                targets = [c.eps * (c.x_i - c.sigma * D)]
                if c.gift_i is not None and not c.found_ii:
                    targets.append(c.eps * (c.gift_i - c.sigma * D))
            for pos in targets:
                dx = (pos - own) * d
                if dx > 0 and (nearest is None or dx < nearest):
                    nearest = dx
        if nearest is not None:
            scored.append(((0, nearest, -d), d))
        elif not prunable:
            scored.append(((1, 0, -d), d))
    scored.sort(key=lambda item: item[0])
    return [d for _, d in scored]


def direction_branches(instance: GameInstance, state: SolverState,
                       symmetry_root: bool = False):
    """All admissible joint direction assignments at an event time: one
    choice per player-I history group and one per player-II history group."""
    groups_i, groups_ii = {}, {}
    for c in state.ctxs:
        groups_i.setdefault(c.hist_i, []).append(c)
        groups_ii.setdefault(c.hist_ii, []).append(c)
    ids_i = sorted(groups_i)
    ids_ii = sorted(groups_ii)
    options_i = []
    for h in ids_i:
        dirs = _dir_candidates(instance, state, groups_i[h], player_i=True)
        if symmetry_root:
            dirs = [d for d in dirs if d == +1] or dirs
        options_i.append(dirs)
    options_ii = [_dir_candidates(instance, state, groups_ii[h], player_i=False)
                  for h in ids_ii]
    out = []
    for combo_i in itertools.product(*options_i):
        base = dict(zip(ids_i, combo_i))
        for combo_ii in itertools.product(*options_ii):
            out.append((base, dict(zip(ids_ii, combo_ii))))
    return out


def _lower_bound(instance, state):
    """Valid lower bound on the final mean ending time from this state:
    meetings close at rate at most 2, gift pickups at rate at most 1."""
    kind = instance.kind
    D = instance.distance
    t = state.t
    total = ZERO
    for _, e in state.ends:
        total += e
    for c in state.ctxs:
        apos = c.sigma * D + c.eps * c.g
        meet = t + abs(apos - c.x_i) / 2
        if kind is GameKind.NO_GIFT:
            lb = meet
        else:
            if c.gift_ii is not None:
                i_find = t + abs(c.gift_ii - c.x_i)
            else:
                i_find = instance.drop2 if instance.drop2 > t else t
            if kind is GameKind.ONE_GIFT:
                lb = min(meet, i_find)
            else:
                if c.gift_i is not None:
                    ii_find = t + abs(c.gift_i - apos)
                else:
                    ii_find = instance.drop1 if instance.drop1 > t else t
                if kind is GameKind.TWO_GIFTS_OR:
                    lb = min(meet, i_find, ii_find)
                else:
                    a = t if c.found_i else i_find
                    b = t if c.found_ii else ii_find
                    lb = min(meet, a if a >= b else b)
        total += lb
    return total / 4


def _advance(instance, state, dirs_i, dirs_ii, t_next, tab_i, tab_ii):
    dt = t_next - state.t
    moved = [Ctx(c.sid, c.sigma, c.eps,
                 c.x_i + dirs_i[c.hist_i] * dt,
                 c.g + dirs_ii[c.hist_ii] * dt,
                 c.hist_i, c.hist_ii, c.gift_i, c.gift_ii, c.found_i, c.found_ii)
             for c in state.ctxs]
    ctxs, ends, di, dii = process_instant(
        instance, t_next, moved, state.dropped_i, state.dropped_ii, tab_i, tab_ii)
    return SolverState(t_next, tuple(ctxs), di, dii, state.ends + tuple(ends))


class _Search:
    def __init__(self, instance, collect, symmetry):
        self.instance = instance
        self.collect = collect
        self.symmetry = symmetry
        self.tab_i = HistTable()
        self.tab_ii = HistTable()
        self.log_i = {}
        self.log_ii = {}
        self.best = None
        self.best_leaves = []
        self.nodes = 0

    def run(self):
        state = initial_state(self.instance, self.tab_i, self.tab_ii)
        self._dfs(state, first=True)

    def _dfs(self, state, first=False):
        self.nodes += 1
        if not state.ctxs:
            self._leaf(state)
            return
        if self.best is not None:
            lb = _lower_bound(self.instance, state)
            if lb > self.best or (not self.collect and lb >= self.best):
                return
        branches = direction_branches(self.instance, state,
                                      symmetry_root=first and self.symmetry)
        for dirs_i, dirs_ii in branches:
            t_next = next_event_time(self.instance, state, dirs_i, dirs_ii)
            if t_next is None:
                continue  # never resolves: dominated by any complete strategy
            pushed = self._push(state.t, dirs_i, dirs_ii)
            self._dfs(_advance(self.instance, state, dirs_i, dirs_ii, t_next,
                               self.tab_i, self.tab_ii))
            self._pop(pushed)

    def _push(self, t, dirs_i, dirs_ii):
        for h, d in dirs_i.items():
            self.log_i.setdefault(h, []).append((t, d))
        for h, d in dirs_ii.items():
            self.log_ii.setdefault(h, []).append((t, d))
        return (tuple(dirs_i), tuple(dirs_ii))

    def _pop(self, pushed):
        for h in pushed[0]:
            self.log_i[h].pop()
        for h in pushed[1]:
            self.log_ii[h].pop()

    def _leaf(self, state):
        value = ZERO
        for _, e in state.ends:
            value += e
        value = value / 4
        if self.best is None or value < self.best:
            self.best = value
            self.best_leaves = []
        elif value > self.best or not self.collect:
            return
        snap_i = {h: tuple(v) for h, v in self.log_i.items() if v}
        snap_ii = {h: tuple(v) for h, v in self.log_ii.items() if v}
        self.best_leaves.append((state.ends, snap_i, snap_ii))


def _build_tree(tab, log):
    """Raw per-history tree from a leaf's choice log."""
    hist_ids = set(log) | {0}
    for h in list(hist_ids):
        cur = h
        while cur:
            cur = tab.parent[cur]
            hist_ids.add(cur)
    children_of = {}
    for h in sorted(hist_ids):
        if h:
            children_of.setdefault(tab.parent[h], []).append(h)

    def build(h):
        entries = log.get(h, ())
        sig = []
        for tc, d in entries:
            if not sig or sig[-1][1] != d:
                sig.append((tc, d))
        bt, bx, kinds = tab.batch[h] if h else (ZERO, ZERO, ())
        return {
            "t": bt, "x": bx, "kinds": kinds,
            "dir": sig[0][1] if sig else None,
            "turns": [tc for tc, _ in sig[1:]],
            "children": [build(ch) for ch in children_of.get(h, ())],
        }

    return build(0)


def _dir_in_effect(node, at):
    d = node["dir"]
    for u in node["turns"]:
        if u <= at:
            d = -d
    return d


def _fold(node):
    """Merge an only child into its parent: when every live scenario shared
    the same observation batch, the continuation is unconditional."""
    node["children"] = [_fold(ch) for ch in node["children"]]
    while len(node["children"]) == 1:
        ch = node["children"][0]
        if node["dir"] is None:
            node["dir"] = ch["dir"]
        elif ch["dir"] is not None and ch["dir"] != _dir_in_effect(node, ch["t"]):
            node["turns"].append(ch["t"])
        node["turns"].extend(ch["turns"])
        node["children"] = ch["children"]
    return node


def _prune(node):
    """Drop children that never deviate from the plan already in force."""
    kept = []
    for ch in node["children"]:
        _prune(ch)
        if ch["dir"] != _dir_in_effect(node, ch["t"]) or ch["turns"] or ch["children"]:
            kept.append(ch)
    node["children"] = kept
    return node


def _to_plan(node) -> PlanNode:
    return PlanNode(t=node["t"], x=node["x"], obs_kinds=node["kinds"],
                    direction=node["dir"] if node["dir"] is not None else +1,
                    turns=node["turns"],
                    children=[_to_plan(ch) for ch in node["children"]])


def _leaf_bundle(instance, tab_i, tab_ii, leaf) -> StrategyBundle:
    _, snap_i, snap_ii = leaf
    tree_i = _to_plan(_prune(_fold(_build_tree(tab_i, snap_i))))
    tree_ii = _to_plan(_prune(_fold(_build_tree(tab_ii, snap_ii))))
    return StrategyBundle(tree_i, tree_ii, instance.drop1, instance.drop2)


def solve_fixed_drops(instance: GameInstance, collect_bundles: bool = True,
                      symmetry_reduction: bool = False) -> SolveResult:
    """Exact optimal value (and, unless disabled, all optimal bundles) for a
    game instance with fixed drop times."""
    search = _Search(instance, collect_bundles, symmetry_reduction)
    search.run()
    if search.best is None:
        raise ModelError("no resolving strategy exists for this instance")
    bundles = ()
    if collect_bundles:
        by_key = {}
        for leaf in search.best_leaves:
            b = _leaf_bundle(instance, search.tab_i, search.tab_ii, leaf)
            by_key.setdefault(bundle_sort_key(b), b)
        bundles = tuple(by_key[k] for k in sorted(by_key))
    min_duration = min(max(e for _, e in ends) for ends, _, _ in search.best_leaves)
    if min_duration > instance.horizon:
        raise HorizonError(
            f"optimal play ends at time {min_duration}, beyond the horizon "
            f"{instance.horizon}; re-solve with a larger horizon")
    return SolveResult(search.best, bundles, search.nodes)
