"""Monte-Carlo path simulation over labeled CTMCs.

Randomness comes from a counter-based scheme: draw k of a stream is
splitmix64(key + (k+1) * golden), so any draw is addressable without
per-path generator state.  Trial i of an experiment runs on the stream
key derived from the master seed and i.  Aggregates are therefore
independent of execution order, and the vectorized batch runner below
reproduces the plain per-path loop bit for bit (both take their
logarithms through numpy; libm's log differs in the last ulp).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ctmc import Ctmc
from .errors import NegativeTime

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_TRIAL_STRIDE = np.uint64(0xD1342543DE82EF95)
_CHUNK = 16384


def _mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer on uint64 arrays (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def _draw(keys: np.ndarray, counter: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        return _mix64(keys + np.uint64(counter + 1) * _GOLDEN)


def _to_unit(bits: np.ndarray) -> np.ndarray:
    """Map uint64 draws to doubles strictly inside (0, 1)."""
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def derive_trial_seed(master: int, trial: int) -> int:
    """Stream key for one trial; simulate_path on it replays that trial."""
    with np.errstate(over="ignore"):
        key = _mix64(np.uint64(master & 0xFFFFFFFFFFFFFFFF) + np.uint64(trial) * _TRIAL_STRIDE)
    return int(key)


@dataclass(frozen=True)
class Path:
    """One sampled trajectory: (state, entry time) pairs up to a horizon."""

    entries: tuple[tuple[int, float], ...]
    horizon: float

    def __post_init__(self):
        if not self.entries or self.entries[0][1] != 0.0:
            raise ValueError("path must start at time 0")
        times = [t for _, t in self.entries]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("entry times must be strictly increasing")

    @property
    def final_state(self) -> int:
        return self.entries[-1][0]


@dataclass(frozen=True)
class LabelEstimate:
    """Monte-Carlo estimates for one label at a fixed horizon."""

    label: str
    point_probability: float
    point_standard_error: float
    occupancy: float
    occupancy_standard_error: float
    trials: int
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.point_probability <= 1.0:
            raise ValueError("point_probability outside [0, 1]")
        if not 0.0 <= self.occupancy <= 1.0 + 1e-12:
            raise ValueError("occupancy outside [0, 1]")
        if self.point_standard_error < 0 or self.occupancy_standard_error < 0:
            raise ValueError("standard errors must be nonnegative")


class _Compiled:
    """Per-chain tables the samplers index into.

    cum_rates rows hold the running sum of outgoing rates padded with
    +inf; the successor for unit draw v is the first column whose
    cumulative rate exceeds v * E(s), in both the scalar and the
    vectorized sampler.
    """

    def __init__(self, c: Ctmc):
        m = c.rate_matrix
        self.initial = c.initial
        self.exits = c.exit_rates
        degree = int(np.diff(m.indptr).max()) if c.n_states else 0
        width = max(degree, 1)
        self.cum_rates = np.full((c.n_states, width), np.inf)
        self.targets = np.full((c.n_states, width), -1, dtype=np.int64)
        for s in range(c.n_states):
            lo, hi = m.indptr[s], m.indptr[s + 1]
            if hi > lo:
                self.cum_rates[s, : hi - lo] = np.cumsum(m.data[lo:hi])
                self.targets[s, : hi - lo] = m.indices[lo:hi]


def simulate_path(c: Ctmc, horizon: float, seed: int) -> Path:
    """Sample one trajectory; deterministic in (chain, horizon, seed)."""
    if not horizon > 0:
        raise NegativeTime(f"horizon must be > 0, got {horizon}")
    comp = _Compiled(c)
    key = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)

    entries = [(c.initial, 0.0)]
    s = c.initial
    t = 0.0
    for j in range(1 << 62):
        e = comp.exits[s]
        if e == 0.0:
            break
        u = float(_to_unit(_draw(key, 2 * j)))
        end = t + float(-np.log(u)) / e
        if end > horizon:
            break
        v = float(_to_unit(_draw(key, 2 * j + 1)))
        row = comp.cum_rates[s]
        s = int(comp.targets[s, int(np.argmax(row > v * e))])
        t = end
        entries.append((s, t))
    return Path(tuple(entries), horizon)


def estimate_label_metrics(
    c: Ctmc, label: str, horizon: float, trials: int, seed: int
) -> LabelEstimate:
    """Estimate point probability and occupancy of a label by simulation.

    Runs `trials` paths on per-trial streams derived from the master
    seed, vectorized in fixed-size chunks; per-trial results land in
    index order, so the aggregate never depends on scheduling.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not horizon > 0:
        raise NegativeTime(f"horizon must be > 0, got {horizon}")
    in_label = np.zeros(c.n_states, dtype=bool)
    if c.label_states(label):
        in_label[np.fromiter(sorted(c.label_states(label)), dtype=np.int64)] = True

    comp = _Compiled(c)
    at_horizon = np.empty(trials, dtype=bool)
    occupancy = np.empty(trials, dtype=np.float64)
    master = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    for lo in range(0, trials, _CHUNK):
        hi = min(lo + _CHUNK, trials)
        with np.errstate(over="ignore"):
            keys = _mix64(master + np.arange(lo, hi, dtype=np.uint64) * _TRIAL_STRIDE)
        flags, occ = _run_chunk(comp, in_label, horizon, keys)
        at_horizon[lo:hi] = flags
        occupancy[lo:hi] = occ

    p = float(at_horizon.sum()) / trials
    point_se = math.sqrt(p * (1.0 - p) / trials)
    occ_mean = float(occupancy.sum()) / trials
    occ_se = (
        float(occupancy.std(ddof=1)) / math.sqrt(trials) if trials > 1 else 0.0
    )
    return LabelEstimate(
        label=label,
        point_probability=p,
        point_standard_error=point_se,
        occupancy=occ_mean,
        occupancy_standard_error=occ_se,
        trials=trials,
        seed=int(master),
    )


def _run_chunk(
    comp: _Compiled, in_label: np.ndarray, horizon: float, keys: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """All trials of one chunk, advanced one jump per round.

    Per trial this performs exactly the operations of simulate_path in
    the same order with the same draw counters, which is what makes the
    batch bitwise-comparable to the loop.
    """
    m = len(keys)
    state = np.full(m, comp.initial, dtype=np.int64)
    t = np.zeros(m)
    label_time = np.zeros(m)
    total_time = np.zeros(m)
    alive = np.arange(m)

    j = 0
    while alive.size:
        exits = comp.exits[state[alive]]
        absorbed = exits == 0.0
        if absorbed.any():
            idx = alive[absorbed]
            seg = horizon - t[idx]
            label_time[idx] += seg * in_label[state[idx]]
            total_time[idx] += seg
            alive = alive[~absorbed]
            exits = comp.exits[state[alive]]
        if not alive.size:
            break

        u = _to_unit(_draw(keys[alive], 2 * j))
        end = t[alive] + (-np.log(u)) / exits
        crossed = end > horizon
        seg = np.where(crossed, horizon, end) - t[alive]
        label_time[alive] += seg * in_label[state[alive]]
        total_time[alive] += seg

        movers = alive[~crossed]
        if movers.size:
            v = _to_unit(_draw(keys[movers], 2 * j + 1))
            src = state[movers]
            col = np.argmax(comp.cum_rates[src] > (v * comp.exits[src])[:, None], axis=1)
            state[movers] = comp.targets[src, col]
            t[movers] = end[~crossed]
        alive = movers
        j += 1

    return in_label[state], label_time / total_time
