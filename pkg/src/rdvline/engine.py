"""Joint information-state simulation across the four scenarios.

The simulation advances all surviving scenario contexts together, grouped by
each player's observation history.  This is what makes gift-absence
observations exact: whether "no gift here" is informative depends on what a
sibling scenario, still consistent with the observer's history, would show.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

from .model import (AbsolutePath, GameKind, GameInstance, ModelError,
                    SCENARIO_FRAMES, first_crossing)
from .rational import Rat, ZERO, rat

MET = "MET"
FOUND = "FOUND"
ABSENT = "ABSENT"
DROP = "DROP"
_KIND_ORDER = {MET: 0, FOUND: 1, ABSENT: 2, DROP: 3}


def batch_key(t, x, kinds) -> tuple:
    """Canonical key for the simultaneous observations of one player."""
    return (rat(t), rat(x), tuple(sorted(kinds, key=_KIND_ORDER.__getitem__)))


class HistTable:
    """Interned observation histories; id 0 is the empty history."""

    def __init__(self):
        self.parent = [None]
        self.batch = [None]
        self._index = {}

    def child(self, parent: int, batch: tuple) -> int:
        key = (parent, batch)
        hid = self._index.get(key)
        if hid is None:
            hid = len(self.parent)
            self.parent.append(parent)
            self.batch.append(batch)
            self._index[key] = hid
        return hid

    def lineage(self, hid: int):
        out = []
        while hid:
            out.append(self.batch[hid])
            hid = self.parent[hid]
        out.reverse()
        return out


class Ctx(NamedTuple):
    """One live scenario: positions, histories, gift bookkeeping."""

    sid: int
    sigma: int
    eps: int
    x_i: object    # player I's position on the line
    g: object      # player II's own-frame position
    hist_i: int
    hist_ii: int
    gift_i: object    # player I's gift position (line), None until dropped
    gift_ii: object   # the agent's gift position (line), None until dropped
    found_i: bool     # player I holds the agent's gift
    found_ii: bool    # the agent holds player I's gift


def fresh_contexts() -> list:
    return [Ctx(fr.scenario_id, fr.sigma, fr.eps, ZERO, ZERO, 0, 0, None, None, False, False)
            for fr in SCENARIO_FRAMES]


def process_instant(instance, t, ctxs, dropped_i, dropped_ii, tab_i, tab_ii):
    """Apply everything happening exactly at time t: scheduled drops, meetings,
    gift pickups, resolutions, and the resulting observation batches.

    Context positions must already be at time t.  Returns
    (surviving contexts, [(sid, end_time)...], dropped_i, dropped_ii).
    """
    kind = instance.kind
    D = instance.distance
    drop_i_now = kind.player_one_drops and not dropped_i and instance.drop1 == t
    drop_ii_now = kind.player_two_drops and not dropped_ii and instance.drop2 == t
    if drop_i_now or drop_ii_now:
        ctxs = [Ctx(c.sid, c.sigma, c.eps, c.x_i, c.g, c.hist_i, c.hist_ii,
                    c.x_i if drop_i_now else c.gift_i,
                    (c.sigma * D + c.eps * c.g) if drop_ii_now else c.gift_ii,
                    c.found_i, c.found_ii)
                for c in ctxs]

    two_way = kind in (GameKind.TWO_GIFTS_OR, GameKind.TWO_GIFTS_AND)
    rows = []
    ends = []
    for c in ctxs:
        apos = c.sigma * D + c.eps * c.g
        met = c.x_i == apos
        pick_i = (not c.found_i and c.gift_ii is not None and c.x_i == c.gift_ii)
        pick_ii = (two_way and not c.found_ii and c.gift_i is not None and apos == c.gift_i)
        found_i = c.found_i or pick_i
        found_ii = c.found_ii or pick_ii
        if met:
            resolved = True
        elif kind is GameKind.ONE_GIFT:
            resolved = pick_i
        elif kind is GameKind.TWO_GIFTS_OR:
            resolved = pick_i or pick_ii
        elif kind is GameKind.TWO_GIFTS_AND:
            resolved = found_i and found_ii
        else:
            resolved = False
        if resolved:
            ends.append((c.sid, t))
        rows.append((c, pick_i, pick_ii, found_i, found_ii, resolved))

    new_ctxs = []
    for c, pick_i, pick_ii, found_i, found_ii, resolved in rows:
        if resolved:
            continue
        kinds_i = []
        if pick_i:
            kinds_i.append(FOUND)
        elif not (c.gift_ii is not None and c.gift_ii == c.x_i):
            # absence is informative only if a same-history sibling scenario
            # would place the other player's gift right here
            for c2, _, _, _, _, _ in rows:
                if (c2 is not c and c2.hist_i == c.hist_i
                        and c2.gift_ii is not None and c2.gift_ii == c.x_i):
                    kinds_i.append(ABSENT)
                    break
        if drop_i_now:
            kinds_i.append(DROP)

        kinds_ii = []
        if pick_ii:
            kinds_ii.append(FOUND)
        elif not (c.gift_i is not None and c.eps * (c.gift_i - c.sigma * D) == c.g):
            for c2, _, _, _, _, _ in rows:
                if (c2 is not c and c2.hist_ii == c.hist_ii and c2.gift_i is not None
                        and c2.eps * (c2.gift_i - c2.sigma * D) == c.g):
                    kinds_ii.append(ABSENT)
                    break
        if drop_ii_now:
            kinds_ii.append(DROP)

        hist_i = (tab_i.child(c.hist_i, batch_key(t, c.x_i, kinds_i))
                  if kinds_i else c.hist_i)
        hist_ii = (tab_ii.child(c.hist_ii, batch_key(t, c.g, kinds_ii))
                   if kinds_ii else c.hist_ii)
        new_ctxs.append(Ctx(c.sid, c.sigma, c.eps, c.x_i, c.g, hist_i, hist_ii,
                            c.gift_i, c.gift_ii, found_i, found_ii))
    return new_ctxs, ends, dropped_i or drop_i_now, dropped_ii or drop_ii_now


def first_divergence(a: AbsolutePath, b: AbsolutePath, start, stop) -> Optional[Rat]:
    """Last time up to which a == b on [start, stop], if they separate there."""
    if a(start) != b(start):
        return rat(start)
    cuts = {rat(start), rat(stop)}
    for t in a.breakpoints() + b.breakpoints():
        if start < t < stop:
            cuts.add(t)
    ordered = sorted(cuts)
    for t0, t1 in zip(ordered, ordered[1:]):
        if a(t1) != b(t1):
            # both linear on [t0, t1] and equal at t0: they separate at t0
            return t0
    return None


def _next_event(instance, t, ctxs, fut_i, fut_g, dropped_i, dropped_ii, stop):
    kind = instance.kind
    D = instance.distance
    best = None
    if kind.player_one_drops and not dropped_i and t < instance.drop1 <= stop:
        best = instance.drop1
    if kind.player_two_drops and not dropped_ii and t < instance.drop2 <= stop:
        if best is None or instance.drop2 < best:
            best = instance.drop2
    for c in ctxs:
        path_i = fut_i[c.sid]
        agent = fut_g[c.sid].affine(c.eps, c.sigma * D)
        hi = stop if best is None else best
        cands = [first_crossing(path_i, agent, t, hi)]
        if c.gift_ii is not None and not c.found_i:
            cands.append(first_crossing(path_i, AbsolutePath([(t, c.gift_ii)], ZERO), t, hi))
        if c.gift_i is not None and not c.found_ii:
            cands.append(first_crossing(agent, AbsolutePath([(t, c.gift_i)], ZERO), t, hi))
        for s in cands:
            if s is not None:
                if s <= t:
                    raise ModelError(f"event stuck at time {t} in scenario {c.sid}")
                if best is None or s < best:
                    best = s
    return best


class DriveResult(NamedTuple):
    ends: dict          # sid -> exact ending time
    unresolved: tuple   # sids that did not end by the horizon
    violation: Optional[tuple]  # (player, sid_a, sid_b, divergence_time)
    paths_i: dict       # sid -> realized waypoints [(t, x), ...] of player I
    paths_g: dict       # sid -> realized waypoints of player II (own frame)


def _record(rec, t0, t1, fut):
    pts = rec
    for bt in fut.breakpoints():
        if t0 < bt < t1:
            pts.append((bt, fut(bt)))
    pts.append((t1, fut(t1)))


def drive(instance, provider, verify=False, tab_i=None, tab_ii=None) -> DriveResult:
    """Run the joint simulation from time 0 to the horizon.

    ``provider(t, ctxs)`` returns (fut_i, fut_g): dicts sid -> AbsolutePath
    giving each player's position from time t onward (own frame for II).
    With ``verify`` the realized futures of same-history contexts are checked
    for agreement; the first disagreement is reported instead of an outcome.
    History tables may be supplied so that providers can resolve the ids the
    simulation creates.
    """
    T = instance.horizon
    tab_i = HistTable() if tab_i is None else tab_i
    tab_ii = HistTable() if tab_ii is None else tab_ii
    ctxs = fresh_contexts()
    rec_i = {c.sid: [(ZERO, ZERO)] for c in ctxs}
    rec_g = {c.sid: [(ZERO, ZERO)] for c in ctxs}
    ends = {}
    dropped_i = dropped_ii = False
    t = ZERO
    ctxs, done, dropped_i, dropped_ii = process_instant(
        instance, t, ctxs, dropped_i, dropped_ii, tab_i, tab_ii)
    ends.update(done)

    while ctxs:
        fut_i, fut_g = provider(t, ctxs)
        t_next = _next_event(instance, t, ctxs, fut_i, fut_g, dropped_i, dropped_ii, T)
        window_end = T if t_next is None else t_next
        if verify:
            hit = _group_divergence(t, window_end, ctxs, fut_i, "hist_i", "I")
            hit2 = _group_divergence(t, window_end, ctxs, fut_g, "hist_ii", "II")
            if hit2 is not None and (hit is None or hit2[3] < hit[3]):
                hit = hit2
            if hit is not None:
                return DriveResult(ends, tuple(c.sid for c in ctxs), hit, rec_i, rec_g)
        if t_next is None:
            for c in ctxs:
                _record(rec_i[c.sid], t, T, fut_i[c.sid])
                _record(rec_g[c.sid], t, T, fut_g[c.sid])
            return DriveResult(ends, tuple(sorted(c.sid for c in ctxs)), None, rec_i, rec_g)
        moved = []
        for c in ctxs:
            _record(rec_i[c.sid], t, t_next, fut_i[c.sid])
            _record(rec_g[c.sid], t, t_next, fut_g[c.sid])
            moved.append(Ctx(c.sid, c.sigma, c.eps, fut_i[c.sid](t_next), fut_g[c.sid](t_next),
                             c.hist_i, c.hist_ii, c.gift_i, c.gift_ii, c.found_i, c.found_ii))
        ctxs, done, dropped_i, dropped_ii = process_instant(
            instance, t_next, moved, dropped_i, dropped_ii, tab_i, tab_ii)
        ends.update(done)
        t = t_next
    return DriveResult(ends, (), None, rec_i, rec_g)


def _group_divergence(t, stop, ctxs, futures, hist_attr, player):
    worst = None
    groups = {}
    for c in ctxs:
        groups.setdefault(getattr(c, hist_attr), []).append(c)
    for members in groups.values():
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                a, b = members[i], members[j]
                d = first_divergence(futures[a.sid], futures[b.sid], t, stop)
                if d is not None and d < stop and (worst is None or d < worst[3]):
                    worst = (player, min(a.sid, b.sid), max(a.sid, b.sid), d)
    return worst
