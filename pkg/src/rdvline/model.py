"""Game model for rendezvous-with-gifts search on the infinite line.

Player I starts at the origin of the line, facing the positive direction.
Nature places player II a known distance away in one of four equally likely
configurations; in player I's frame the corresponding "agent" of player II
moves along sigma*D + eps*g(t) where g is II's own-frame path.  A scenario
ends by a meeting, or through gift pickups according to the game kind.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .rational import Rat, ZERO, rat


class ModelError(ValueError):
    """Invalid instance, path, or bundle structure."""


class GameKind(enum.Enum):
    NO_GIFT = "g"
    ONE_GIFT = "g1"
    TWO_GIFTS_OR = "g2or"
    TWO_GIFTS_AND = "g2and"

    @property
    def player_one_drops(self) -> bool:
        return self in (GameKind.TWO_GIFTS_OR, GameKind.TWO_GIFTS_AND)

    @property
    def player_two_drops(self) -> bool:
        return self is not GameKind.NO_GIFT


@dataclass(frozen=True)
class ScenarioFrame:
    """One of nature's four placements of player II.

    The agent of scenario ``scenario_id`` sits at sigma*D + eps*g(t) in
    player I's frame; the meeting condition f(t) = agent(t) is equivalent to
    the classical four equations +-f +- g = D.
    """

    scenario_id: int
    sigma: int
    eps: int


SCENARIO_FRAMES = (
    ScenarioFrame(1, +1, -1),
    ScenarioFrame(2, -1, -1),
    ScenarioFrame(3, -1, +1),
    ScenarioFrame(4, +1, +1),
)


def frame(scenario_id: int) -> ScenarioFrame:
    if not 1 <= scenario_id <= 4:
        raise ModelError(f"scenario_id must be 1..4, got {scenario_id}")
    return SCENARIO_FRAMES[scenario_id - 1]


@dataclass(frozen=True)
class GameInstance:
    kind: GameKind
    distance: Rat
    drop1: Optional[Rat] = None  # player I's drop time
    drop2: Optional[Rat] = None  # player II's drop time
    horizon: Optional[Rat] = None  # defaults to 4*distance

    def __post_init__(self):
        d = rat(self.distance)
        if d <= 0:
            raise ModelError("initial distance must be positive")
        object.__setattr__(self, "distance", d)
        horizon = rat(self.horizon) if self.horizon is not None else 4 * d
        if horizon <= 0:
            raise ModelError("horizon must be positive")
        object.__setattr__(self, "horizon", horizon)
        for name, needed in (("drop1", self.kind.player_one_drops),
                             ("drop2", self.kind.player_two_drops)):
            value = getattr(self, name)
            if needed:
                if value is None:
                    raise ModelError(f"{self.kind.value} requires {name}")
                value = rat(value)
                if value < 0:
                    raise ModelError(f"{name} must be >= 0")
                if value > horizon:
                    raise ModelError(f"{name} exceeds the horizon")
                object.__setattr__(self, name, value)
            elif value is not None:
                raise ModelError(f"{self.kind.value} does not take {name}")


class PathPlan:
    """A Lipschitz-1 path from (0, 0), as waypoints plus a terminal direction.

    Between consecutive waypoints the path is linear with |slope| <= 1; after
    the last waypoint it continues at unit speed in ``terminal_dir`` forever.
    """

    __slots__ = ("waypoints", "terminal_dir")

    def __init__(self, waypoints: Sequence[tuple], terminal_dir: int = +1):
        pts = [(rat(t), rat(x)) for t, x in waypoints]
        if not pts or pts[0] != (ZERO, ZERO):
            pts.insert(0, (ZERO, ZERO))
        for (t0, x0), (t1, x1) in zip(pts, pts[1:]):
            if t1 <= t0:
                raise ModelError("waypoint times must be strictly increasing")
            if abs(x1 - x0) > t1 - t0:
                raise ModelError("path exceeds unit speed")
        if terminal_dir not in (+1, -1):
            raise ModelError("terminal_dir must be +1 or -1")
        self.waypoints = tuple(pts)
        self.terminal_dir = terminal_dir

    @classmethod
    def bang_bang(cls, turning_times: Sequence, start_dir: int = +1) -> "PathPlan":
        """Build the unit-speed path [t1, ..., tk] from its turning points.

        The path moves in ``start_dir`` until the first turning time, then
        alternates.  A leading turning time of 0 flips the starting direction.
        """
        times = [rat(t) for t in turning_times]
        direction = start_dir
        if times and times[0] == 0:
            direction = -direction
            times = times[1:]
        if any(t1 <= t0 for t0, t1 in zip(times, times[1:])) or any(t <= 0 for t in times):
            raise ModelError("turning times must be strictly increasing and positive")
        pts = [(ZERO, ZERO)]
        pos = ZERO
        prev = ZERO
        for t in times:
            pos += direction * (t - prev)
            pts.append((t, pos))
            direction = -direction
            prev = t
        return cls(pts, terminal_dir=direction)

    def value(self, t: Rat) -> Rat:
        t = rat(t)
        if t < 0:
            raise ModelError("path queried before time 0")
        pts = self.waypoints
        for (t0, x0), (t1, x1) in zip(pts, pts[1:]):
            if t <= t1:
                return x0 + (x1 - x0) * (t - t0) / (t1 - t0)
        t_last, x_last = pts[-1]
        return x_last + self.terminal_dir * (t - t_last)

    __call__ = value

    def pieces(self, until: Rat):
        """Yield (t0, x0, velocity, t1) linear pieces covering [0, until]."""
        pts = self.waypoints
        for (t0, x0), (t1, x1) in zip(pts, pts[1:]):
            if t0 >= until:
                return
            yield t0, x0, (x1 - x0) / (t1 - t0), min(t1, until)
        t_last, x_last = pts[-1]
        if t_last < until:
            yield t_last, x_last, rat(self.terminal_dir), until

    def turning_times(self):
        """Turning points of a bang-bang path (None for sub-unit-speed plans)."""
        times = []
        prev_v = None
        last = self.waypoints[-1][0]
        for t0, _x0, v, _t1 in self.pieces(last + 1):
            if v not in (1, -1):
                return None
            if prev_v is None:
                if v == -1:
                    times.append(ZERO)
            elif v != prev_v:
                times.append(t0)
            prev_v = v
        return times

    def __eq__(self, other):
        return (isinstance(other, PathPlan)
                and self.waypoints == other.waypoints
                and self.terminal_dir == other.terminal_dir)

    def __hash__(self):
        return hash((self.waypoints, self.terminal_dir))

    def __repr__(self):
        return f"PathPlan({list(self.waypoints)!r}, terminal_dir={self.terminal_dir})"


class AbsolutePath:
    """A piecewise-linear path on the line, not necessarily through (0, 0)."""

    __slots__ = ("points", "terminal_velocity")

    def __init__(self, points: Sequence[tuple], terminal_velocity: Rat):
        self.points = tuple((rat(t), rat(x)) for t, x in points)
        self.terminal_velocity = rat(terminal_velocity)

    @classmethod
    def affine_of(cls, plan: PathPlan, scale: Rat, offset: Rat) -> "AbsolutePath":
        """The path scale*plan(t) + offset (used for sigma*D + eps*g)."""
        scale, offset = rat(scale), rat(offset)
        pts = [(t, scale * x + offset) for t, x in plan.waypoints]
        return cls(pts, scale * plan.terminal_dir)

    def value(self, t: Rat) -> Rat:
        t = rat(t)
        pts = self.points
        for (t0, x0), (t1, x1) in zip(pts, pts[1:]):
            if t <= t1:
                return x0 + (x1 - x0) * (t - t0) / (t1 - t0)
        t_last, x_last = pts[-1]
        return x_last + self.terminal_velocity * (t - t_last)

    __call__ = value

    def affine(self, scale: Rat, offset: Rat) -> "AbsolutePath":
        """The path scale*self(t) + offset."""
        scale, offset = rat(scale), rat(offset)
        return AbsolutePath([(t, scale * x + offset) for t, x in self.points],
                            scale * self.terminal_velocity)

    def breakpoints(self):
        return [t for t, _ in self.points]


def _merged_breaks(a: AbsolutePath, b: AbsolutePath, start: Rat, stop: Rat):
    cuts = {start, stop}
    for t in a.breakpoints() + b.breakpoints():
        if start < t < stop:
            cuts.add(t)
    return sorted(cuts)


def first_crossing(a: AbsolutePath, b: AbsolutePath, start: Rat, stop: Rat) -> Optional[Rat]:
    """Earliest t in [start, stop] with a(t) == b(t), or None."""
    cuts = _merged_breaks(a, b, rat(start), rat(stop))
    for t0, t1 in zip(cuts, cuts[1:]):
        d0 = a(t0) - b(t0)
        if d0 == 0:
            return t0
        d1 = a(t1) - b(t1)
        if (d0 > 0) != (d1 > 0) or d1 == 0:
            # linear on [t0, t1]: exact root
            root = t0 + (t1 - t0) * d0 / (d0 - d1)
            return root
    if a(stop) == b(stop):
        return rat(stop)
    return None


def first_visit(path: AbsolutePath, position: Rat, start: Rat, stop: Rat) -> Optional[Rat]:
    """Earliest t in [start, stop] with path(t) == position, or None."""
    flat = AbsolutePath([(ZERO, position)], ZERO)
    return first_crossing(path, flat, start, stop)


PLAYER_I = "player_I"

UNRESOLVED = None  # sentinel for scenario end times past the horizon


def agent_position(scenario: ScenarioFrame, g: PathPlan, t: Rat, instance: GameInstance) -> Rat:
    """Agent position sigma*D + eps*g(t) in player I's frame."""
    t = rat(t)
    if t < 0 or t > instance.horizon:
        raise ModelError(f"time {t} outside [0, horizon]")
    return scenario.sigma * instance.distance + scenario.eps * g.value(t)


def agent_path(scenario: ScenarioFrame, g: PathPlan, instance: GameInstance) -> AbsolutePath:
    return AbsolutePath.affine_of(g, rat(scenario.eps), scenario.sigma * instance.distance)


def gift_position(owner, path: PathPlan, drop_time: Rat, instance: GameInstance) -> Rat:
    """Where a gift dropped at ``drop_time`` sits, on player I's line.

    ``owner`` is PLAYER_I (gift at f(drop_time)) or a ScenarioFrame (gift at
    that agent's position sigma*D + eps*g(drop_time)).  Gifts exist from the
    drop time onward, never move and are never consumed.
    """
    drop_time = rat(drop_time)
    if drop_time < 0 or drop_time > instance.horizon:
        raise ModelError("drop time outside the path domain")
    if owner == PLAYER_I:
        if not instance.kind.player_one_drops:
            raise ModelError(f"player I has no gift in {instance.kind.value}")
        return path.value(drop_time)
    if isinstance(owner, ScenarioFrame):
        if not instance.kind.player_two_drops:
            raise ModelError(f"player II has no gift in {instance.kind.value}")
        return owner.sigma * instance.distance + owner.eps * path.value(drop_time)
    raise ModelError(f"unknown gift owner {owner!r}")


def scenario_end_time(instance: GameInstance, scenario: ScenarioFrame,
                      f_realized: PathPlan, a_realized: AbsolutePath):
    """Exact ending time of one scenario for realized paths, or UNRESOLVED.

    ``a_realized`` is the agent's path on player I's line (build it with
    agent_path).  The ending rule depends on the game kind: meet only;
    meet or I finds the agent's gift; meet or either finds; meet or both find.
    """
    T = instance.horizon
    f_abs = AbsolutePath(f_realized.waypoints, rat(f_realized.terminal_dir))
    meet = first_crossing(f_abs, a_realized, ZERO, T)
    kind = instance.kind
    if kind is GameKind.NO_GIFT:
        return meet

    finds = []  # candidate gift-based ending times
    i_find = None
    if kind.player_two_drops:
        gift2 = a_realized.value(instance.drop2)
        i_find = first_visit(f_abs, gift2, instance.drop2, T)
    ii_find = None
    if kind.player_one_drops:
        gift1 = f_realized.value(instance.drop1)
        ii_find = first_visit(a_realized, gift1, instance.drop1, T)

    if kind is GameKind.ONE_GIFT:
        gift_end = i_find
    elif kind is GameKind.TWO_GIFTS_OR:
        finds = [t for t in (i_find, ii_find) if t is not None]
        gift_end = min(finds) if finds else None
    else:  # TWO_GIFTS_AND: both pickups required
        gift_end = max(i_find, ii_find) if (i_find is not None and ii_find is not None) else None

    ends = [t for t in (meet, gift_end) if t is not None]
    return min(ends) if ends else UNRESOLVED


@dataclass(frozen=True)
class Outcome:
    """The four scenario ending times and their mean."""

    end_times: tuple  # (t1, t2, t3, t4) indexed by scenario, UNRESOLVED for none

    @property
    def ordered_times(self) -> tuple:
        if any(t is UNRESOLVED for t in self.end_times):
            resolved = sorted(t for t in self.end_times if t is not UNRESOLVED)
            return tuple(resolved) + (UNRESOLVED,) * (4 - len(resolved))
        return tuple(sorted(self.end_times))

    @property
    def value(self):
        if any(t is UNRESOLVED for t in self.end_times):
            return UNRESOLVED
        return sum(self.end_times) / Rat(4)
