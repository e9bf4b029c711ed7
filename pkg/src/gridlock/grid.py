"""Power-grid scenario model and its compilation into a labeled CTMC.

A scenario bundles generator classes, a three-level demand process, an
optional load-spiking botnet and a greedy controller.  States use a
counting abstraction: units of a class are exchangeable, so a state
tracks per-class (available, serving, offline) counts and transition
rates scale with the source count.  That lumping is exact (the test
suite checks it against a per-unit construction) and keeps the state
space in the tens of thousands where a per-unit encoding explodes.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

from .ctmc import Ctmc, new_ctmc
from .errors import InsufficientCapacity, StateSpaceLimitExceeded

DEMAND_LEVELS = ("low", "normal", "high")

OVER_SUPPLY = "overSupply"
EQUILIBRIUM = "equilibrium"
OVER_DEMAND = "overDemand"
BLACKOUT = "blackout"


def _positive(name: str, value: float) -> None:
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class GeneratorClass:
    """One class of identical units; durations in minutes, None = never."""

    name: str
    capacity_mw: float
    count: int
    t_start: float
    t_stop: float
    t_trip: float
    t_recover: float | None = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("class name must be nonempty")
        _positive("capacity_mw", self.capacity_mw)
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        _positive("t_start", self.t_start)
        _positive("t_stop", self.t_stop)
        _positive("t_trip", self.t_trip)
        if self.t_recover is not None:
            _positive("t_recover", self.t_recover)


@dataclass(frozen=True)
class DemandProcess:
    """Hourly-mean demand wobbling between low/normal/high levels."""

    delta_fraction: float
    t_normal_to_low: float
    t_low_to_normal: float
    t_normal_to_high: float
    t_high_to_normal: float

    def __post_init__(self):
        if not 0 <= self.delta_fraction < 1:
            raise ValueError(
                f"delta_fraction must be in [0, 1), got {self.delta_fraction!r}"
            )
        _positive("t_normal_to_low", self.t_normal_to_low)
        _positive("t_low_to_normal", self.t_low_to_normal)
        _positive("t_normal_to_high", self.t_normal_to_high)
        _positive("t_high_to_normal", self.t_high_to_normal)


@dataclass(frozen=True)
class Botnet:
    spike_fraction: float
    t_off_to_on: float
    t_on_to_off: float
    enabled: bool

    def __post_init__(self):
        if not 0 <= self.spike_fraction <= 1:
            raise ValueError(
                f"spike_fraction must be in [0, 1], got {self.spike_fraction!r}"
            )
        _positive("t_off_to_on", self.t_off_to_on)
        _positive("t_on_to_off", self.t_on_to_off)


@dataclass(frozen=True)
class Controller:
    """Greedy dispatcher: turn on from the front of priority, off from the back."""

    priority: tuple[str, ...]
    tolerance: float

    def __post_init__(self):
        object.__setattr__(self, "priority", tuple(self.priority))
        if not 0 < self.tolerance < 1:
            raise ValueError(f"tolerance must be in (0, 1), got {self.tolerance!r}")


@dataclass(frozen=True)
class Scenario:
    classes: tuple[GeneratorClass, ...]
    demand: DemandProcess
    botnet: Botnet
    controller: Controller

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        names = [g.name for g in self.classes]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate class names in {names}")
        if sorted(self.controller.priority) != sorted(names):
            raise ValueError(
                f"priority {self.controller.priority} is not a permutation "
                f"of class names {names}"
            )

    def class_index(self, name: str) -> int:
        for i, g in enumerate(self.classes):
            if g.name == name:
                return i
        raise KeyError(name)

    @property
    def total_capacity_mw(self) -> float:
        return sum(g.capacity_mw * g.count for g in self.classes)


@dataclass(frozen=True)
class DemandProfile:
    """Mean demand in MW for each hour of the day."""

    mw_by_hour: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "mw_by_hour", tuple(self.mw_by_hour))
        if len(self.mw_by_hour) != 24:
            raise ValueError(f"expected 24 hourly values, got {len(self.mw_by_hour)}")
        for h, mw in enumerate(self.mw_by_hour):
            if not mw > 0:
                raise ValueError(f"hour {h}: demand must be > 0, got {mw!r}")


@dataclass(frozen=True)
class GridState:
    """Per-class (available, serving, offline) counts + demand level + botnet."""

    counts: tuple[tuple[int, int, int], ...]
    demand_level: str
    botnet_on: bool

    def __post_init__(self):
        object.__setattr__(
            self, "counts", tuple(tuple(c) for c in self.counts)
        )
        if self.demand_level not in DEMAND_LEVELS:
            raise ValueError(f"unknown demand level {self.demand_level!r}")
        for triple in self.counts:
            if len(triple) != 3 or any(c < 0 for c in triple):
                raise ValueError(f"bad count triple {triple!r}")

    @property
    def total_offline(self) -> int:
        return sum(o for _, _, o in self.counts)

    def _bump(self, k: int, d_avail: int, d_serv: int, d_off: int) -> "GridState":
        a, s, o = self.counts[k]
        new = self.counts[:k] + ((a + d_avail, s + d_serv, o + d_off),) + self.counts[k + 1 :]
        return GridState(new, self.demand_level, self.botnet_on)

    def describe(self, scenario: Scenario) -> str:
        parts = [
            f"{g.name}={a}a/{s}s/{o}o"
            for g, (a, s, o) in zip(scenario.classes, self.counts)
        ]
        parts.append(self.demand_level)
        parts.append("botnet-on" if self.botnet_on else "botnet-off")
        return " ".join(parts)


def supply(g: GridState, s: Scenario) -> float:
    """Generated power: serving units times their class capacity."""
    return sum(cls.capacity_mw * serv for cls, (_, serv, _) in zip(s.classes, g.counts))


def effective_demand(g: GridState, s: Scenario, base_mw: float) -> float:
    """Hourly mean shifted by the demand level, plus the botnet spike if on."""
    delta = {"low": -1.0, "normal": 0.0, "high": 1.0}[g.demand_level]
    demand = base_mw * (1.0 + delta * s.demand.delta_fraction)
    if g.botnet_on:
        demand += s.botnet.spike_fraction * base_mw
    return demand


def classify(g: GridState, s: Scenario, base_mw: float) -> str:
    """Band test against the controller tolerance; exactly one outcome."""
    sup = supply(g, s)
    dem = effective_demand(g, s, base_mw)
    if abs(sup - dem) <= s.controller.tolerance * dem:
        return EQUILIBRIUM
    return OVER_DEMAND if sup < dem else OVER_SUPPLY


def initial_state(s: Scenario, base_mw: float) -> GridState:
    """Whole units go serving in priority order until supply covers base_mw."""
    if base_mw > s.total_capacity_mw:
        raise InsufficientCapacity(
            f"base demand {base_mw} MW exceeds fleet capacity "
            f"{s.total_capacity_mw} MW"
        )
    serving = {name: 0 for name in s.controller.priority}
    acc = 0.0
    for name in s.controller.priority:
        cls = s.classes[s.class_index(name)]
        while acc < base_mw and serving[name] < cls.count:
            serving[name] += 1
            acc += cls.capacity_mw
        if acc >= base_mw:
            break
    counts = tuple(
        (g.count - serving[g.name], serving[g.name], 0) for g in s.classes
    )
    return GridState(counts, "normal", False)


def enabled_transitions(
    g: GridState, s: Scenario, base_mw: float
) -> list[tuple[GridState, float]]:
    """Successor states with rates, per the demand/botnet/controller rules."""
    out: list[tuple[GridState, float]] = []

    # (a) demand-level moves
    if g.demand_level == "normal":
        out.append((GridState(g.counts, "low", g.botnet_on), 1.0 / s.demand.t_normal_to_low))
        out.append((GridState(g.counts, "high", g.botnet_on), 1.0 / s.demand.t_normal_to_high))
    elif g.demand_level == "low":
        out.append((GridState(g.counts, "normal", g.botnet_on), 1.0 / s.demand.t_low_to_normal))
    else:
        out.append((GridState(g.counts, "normal", g.botnet_on), 1.0 / s.demand.t_high_to_normal))

    # (b) botnet toggle
    if s.botnet.enabled:
        if g.botnet_on:
            out.append((GridState(g.counts, g.demand_level, False), 1.0 / s.botnet.t_on_to_off))
        else:
            out.append((GridState(g.counts, g.demand_level, True), 1.0 / s.botnet.t_off_to_on))

    band = classify(g, s, base_mw)

    # (c) turn-on: highest-priority class with anything available
    if band == OVER_DEMAND:
        for name in s.controller.priority:
            k = s.class_index(name)
            avail = g.counts[k][0]
            if avail > 0:
                out.append((g._bump(k, -1, +1, 0), avail / s.classes[k].t_start))
                break

    # (d) turn-off: lowest-priority serving class whose shutdown keeps
    #     supply at or above demand
    if band == OVER_SUPPLY:
        sup = supply(g, s)
        dem = effective_demand(g, s, base_mw)
        for name in reversed(s.controller.priority):
            k = s.class_index(name)
            serv = g.counts[k][1]
            if serv > 0 and sup - s.classes[k].capacity_mw >= dem:
                out.append((g._bump(k, +1, -1, 0), serv / s.classes[k].t_stop))
                break

    # (e) trips: every serving class, only under attack pressure
    if band == OVER_DEMAND and g.botnet_on:
        for k, cls in enumerate(s.classes):
            serv = g.counts[k][1]
            if serv > 0:
                out.append((g._bump(k, 0, -1, +1), serv / cls.t_trip))

    # (f) recovery, where the class supports it
    for k, cls in enumerate(s.classes):
        off = g.counts[k][2]
        if off > 0 and cls.t_recover is not None:
            out.append((g._bump(k, +1, 0, -1), off / cls.t_recover))

    return out


def build_grid_ctmc(
    s: Scenario, base_mw: float, max_states: int = 5_000_000
) -> Ctmc:
    """Breadth-first compilation of a scenario at one hourly demand level.

    State indices follow discovery order, so two builds of the same
    inputs are identical.  Labels: the classification partition plus
    "blackout" for overDemand states with at least one unit offline.
    """
    start = initial_state(s, base_mw)
    index: dict[GridState, int] = {start: 0}
    order: list[GridState] = [start]
    transitions: list[tuple[int, int, float]] = []
    queue = deque([start])
    while queue:
        g = queue.popleft()
        i = index[g]
        for succ, rate in enabled_transitions(g, s, base_mw):
            j = index.get(succ)
            if j is None:
                if len(index) >= max_states:
                    raise StateSpaceLimitExceeded(
                        f"state space exceeds cap of {max_states} states"
                    )
                j = len(index)
                index[succ] = j
                order.append(succ)
                queue.append(succ)
            transitions.append((i, j, rate))

    labels: dict[str, set[int]] = {
        OVER_SUPPLY: set(),
        EQUILIBRIUM: set(),
        OVER_DEMAND: set(),
        BLACKOUT: set(),
    }
    for i, g in enumerate(order):
        band = classify(g, s, base_mw)
        labels[band].add(i)
        if band == OVER_DEMAND and g.total_offline >= 1:
            labels[BLACKOUT].add(i)

    return new_ctmc(
        n_states=len(order),
        transitions=transitions,
        initial=0,
        labels=labels,
        state_meta=tuple(g.describe(s) for g in order),
    )


class StateSpaceStats(NamedTuple):
    n_states: int
    n_transitions: int
    label_counts: dict[str, int]


def state_space_stats(c: Ctmc) -> StateSpaceStats:
    """Exact size counts of a built chain."""
    return StateSpaceStats(
        n_states=c.n_states,
        n_transitions=len(c.transitions),
        label_counts={name: len(states) for name, states in c.labels.items()},
    )
