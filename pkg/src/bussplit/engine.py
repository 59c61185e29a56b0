"""Event-driven simulation of a cyclic bus line.

Events are bus (or modular unit) arrivals at stops. Each arrival is fully
processed when it is popped: passengers are drawn, boarding and alighting are
resolved, the departure time follows from the dwell, and the next arrival of
the same vehicle is scheduled. Vehicles keep their order at every stop; a
vehicle that reaches a stop before its predecessor has been processed there
is parked until the predecessor departs.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import policies
from .domain import LineInstance, PolicyKind, PolicySpec, initial_conditions
from .policies import Action, SplitState
from .rng import AGGREGATE, LEADING, TRAILING

MAX_EXTRA_CYCLES = 200
UNIT_LABELS = {AGGREGATE: "A", LEADING: "L", TRAILING: "T"}


class SimulationError(RuntimeError):
    pass


class HorizonTooShortError(SimulationError):
    """The event queue ran dry before the evaluation window was covered."""


class InvariantViolation(SimulationError):
    pass


@dataclass(frozen=True, slots=True)
class EntityId:
    run: int
    unit: int = AGGREGATE

    @property
    def label(self) -> str:
        return UNIT_LABELS[self.unit]


@dataclass(slots=True)
class StopVisit:
    entity: EntityId
    bus: int
    stop: int
    cycle: int
    arrival: float
    departure: float
    headway_arr: float
    headway_dep: float
    load: int
    wish_alight: int
    alight: int
    wish_board: int
    board: int
    leftover: int
    dwell: float
    served: bool
    split_here: bool
    capacity: int


@dataclass(frozen=True, slots=True)
class Departure:
    """One departure per aggregate passage of a stop, used for headway statistics.

    While a run is split, the trailing unit represents it at the control stop
    and the recoupled bus at the following stop.
    """

    stop: int
    run: int
    bus: int
    time: float
    served: bool


@dataclass
class PassengerCurves:
    """Event times behind the cumulative passenger curves (one entry per passenger)."""

    arrivals: np.ndarray
    boardings: np.ndarray
    alightings: np.ndarray
    exits: np.ndarray
    initial_onboard: int = 0
    walk_starts: np.ndarray = field(default_factory=lambda: np.empty(0))
    walk_ends: np.ndarray = field(default_factory=lambda: np.empty(0))


@dataclass
class SimulationOutput:
    instance: LineInstance
    policy: PolicySpec
    visits: list[StopVisit]
    departures: list[Departure]
    curves: PassengerCurves
    eval_window: tuple[float, float]
    cycle_starts: dict[int, list[float]]
    control_actions: int = 0
    cap_bindings: int = 0
    status: str = "complete"


def run_to_bus(run: int, n_buses: int) -> int:
    return (run - 1) % n_buses + 1


def cruise_time(segment: int, instance: LineInstance, rng, run: int = 1,
                unit: int = AGGREGATE) -> float:
    """Cruise time from ``segment`` to the next stop: mean plus centred gamma noise."""
    params = instance.params
    mean = instance.spacing[segment] / params.cruise_speed
    scale = params.noise_scale_fraction * mean / params.noise_shape
    if scale <= 0:
        return max(mean, 1.0)
    noise = rng.gamma(run, unit, params.noise_shape, scale) - params.noise_shape * scale
    return max(mean + noise, 1.0)


def arrival_time(prev_departure: float, cruise: float, predecessor_departure: float) -> float:
    return max(prev_departure + cruise, predecessor_departure)


def draw_alight_wish(load: int, prob: float, rng, run: int = 1, unit: int = AGGREGATE,
                     residual: int = 0) -> int:
    """Binomial alighting wish among non-residual riders, plus carried residuals."""
    return rng.binomial(run, unit, load - residual, prob) + residual


def draw_wish_board(rate: float, elapsed: float, leftover: int, rng, run: int = 1,
                    unit: int = AGGREGATE) -> int:
    return rng.poisson(run, unit, rate * elapsed) + leftover


def board_count(wish_board: int, capacity: int, load: int, alight: int, served: bool) -> int:
    free = capacity - (load - alight)
    if free < 0 or load - alight < 0:
        raise InvariantViolation(
            f"load {load} minus alight {alight} is inconsistent with capacity {capacity}")
    return min(wish_board, free) if served else 0


def dwell_time(alight: int, board: int, served: bool, alight_time: float,
               board_time: float, fixed_loss: float) -> float:
    if not served:
        return 0.0
    return alight_time * alight + board_time * board + fixed_loss


@dataclass
class _Vehicle:
    bus: int
    run: int
    unit: int = AGGREGATE
    load: int = 0
    residual: int = 0
    skip_next: bool = False
    split: SplitState | None = None

    @property
    def key(self) -> tuple[int, int]:
        return (self.bus, self.unit)


class _Simulation:
    def __init__(self, instance: LineInstance, policy: PolicySpec, rng,
                 horizon_cycles: int | None):
        self.inst = instance
        self.p = instance.params
        self.policy = policy
        self.rng = rng
        self.horizon = horizon_cycles
        self.S = instance.stop_count
        self.N = instance.fleet_size
        self.H = instance.target_headway
        self.unit_cap = self.p.bus_capacity // 2

        S = self.S
        self.waiting = [0] * S
        self.enroute: list[deque] = [deque() for _ in range(S)]
        self.parked: list[dict] = [dict() for _ in range(S)]
        # serve decision of the last vehicle that left stop s, about stop s+1
        self.plan_next = [True] * S

        # a virtual run 0 on the deterministic schedule one headway ahead of run 1
        mean_dwell = self.p.fixed_stop_loss + (
            self.p.alight_time + self.p.board_time) * self.p.mean_rate * self.H
        t = 0.0
        self.last_arr = [0.0] * S
        self.last_dep = [0.0] * S
        for s in range(S):
            self.last_arr[s] = t - self.H
            self.last_dep[s] = t + mean_dwell - self.H
            t += mean_dwell + instance.expected_cruise[s]
        self.last_draw = list(self.last_arr)

        self.heap: list = []
        self.seq = 0
        self.visits: list[StopVisit] = []
        self.departures: list[Departure] = []
        self.arr_times: list[np.ndarray] = []
        self.board_times: list[np.ndarray] = []
        self.alight_times: list[np.ndarray] = []
        self.exit_times: list[np.ndarray] = []
        self.walk_start: list[np.ndarray] = []
        self.walk_end: list[np.ndarray] = []
        self.cycle_starts: dict[int, list[float]] = {n: [] for n in range(1, self.N + 1)}
        self.control_actions = 0
        self.cap_bindings = 0

        self.t0: float | None = 0.0 if self.p.warmup_cycles == 0 else None
        self.t1: float | None = None if self.t0 is None else self.t0 + self.p.eval_duration
        self._warm_deps: dict[int, float] = {}
        self.initial_onboard = 0

    # -- scheduling -----------------------------------------------------
    def _push(self, time: float, veh: _Vehicle, stop: int) -> None:
        self.seq += 1
        heapq.heappush(self.heap, (time, veh.run, veh.unit, stop, self.seq, veh))

    def _send(self, veh: _Vehicle, stop: int, time: float) -> None:
        self.enroute[stop].append(veh.key)
        self._push(time, veh, stop)

    def _release_next(self, stop: int) -> None:
        q = self.enroute[stop]
        if q and q[0] in self.parked[stop]:
            cand, veh = self.parked[stop].pop(q[0])
            self._push(max(cand, self.last_dep[stop]), veh, stop)

    def _next_stop(self, veh: _Vehicle, stop: int) -> int:
        nxt = (stop + 1) % self.S
        if nxt == 0:
            veh.run += self.N
        return nxt

    def _cruise(self, veh: _Vehicle, stop: int) -> float:
        return cruise_time(stop, self.inst, self.rng, veh.run, veh.unit)

    # -- main loop ------------------------------------------------------
    def run(self) -> SimulationOutput:
        loads, starts = initial_conditions(self.inst)
        for i in range(self.N):
            veh = _Vehicle(bus=i + 1, run=i + 1, load=int(loads[i]))
            self.initial_onboard += veh.load
            self._send(veh, 0, float(starts[i]))

        while self.heap:
            cand, _, _, stop, _, veh = heapq.heappop(self.heap)
            q = self.enroute[stop]
            if q[0] != veh.key:
                self.parked[stop][veh.key] = (cand, veh)
                continue
            q.popleft()
            arrival = max(cand, self.last_dep[stop])
            if stop == 0 and veh.unit != LEADING:
                self.cycle_starts[veh.bus].append(arrival)
            self._visit(veh, stop, arrival)
            self._release_next(stop)

        if not self._covered():
            raise HorizonTooShortError(
                "event queue exhausted before the evaluation window was covered")
        return self._output()

    def _should_retire(self, veh: _Vehicle, arrival: float) -> bool:
        cycle = (veh.run - 1) // self.N
        if self.horizon is not None:
            return cycle >= self.horizon
        if cycle >= self.p.warmup_cycles + MAX_EXTRA_CYCLES:
            raise HorizonTooShortError("evaluation window not covered within the cycle cap")
        return self._covered() and arrival > self.t1

    def _covered(self) -> bool:
        return self.t1 is not None and min(self.last_draw) >= self.t1

    # -- per-visit dynamics --------------------------------------------
    def _visit(self, veh: _Vehicle, stop: int, a: float) -> None:
        p = self.p
        inst = self.inst
        split = veh.split
        role = None
        if split is not None:
            role = "control" if stop == split.control_stop else "recouple"

        pred_arr = self.last_arr[stop]
        pred_dep = self.last_dep[stop]

        # passengers who reached the stop since the previous vehicle
        elapsed = a - self.last_draw[stop]
        new = self.rng.poisson(veh.run, veh.unit, inst.rates[stop] * max(elapsed, 0.0))
        if new:
            frac = (np.arange(new) + 0.5) / new
            self.arr_times.append(self.last_draw[stop] + frac * elapsed)
        self.last_draw[stop] = a
        self.waiting[stop] += new
        wish_board = self.waiting[stop]

        load = veh.load
        if veh.unit == AGGREGATE:
            served = not veh.skip_next
            capacity = p.bus_capacity
            wish_alight = draw_alight_wish(load, inst.alight_probs[stop], self.rng,
                                           veh.run, AGGREGATE, veh.residual)
        elif veh.unit == LEADING:
            capacity = self.unit_cap
            served = role == "recouple"
            wish_alight = split.leading_wish_recouple if served else 0
        else:
            capacity = self.unit_cap
            served = True
            if role == "control":
                wish_alight = split.trailing_wish_control
            else:
                wish_alight = policies.trailing_alight_wish(
                    split.trailing_board_control, inst.alight_probs[stop],
                    lambda n, q: self.rng.binomial(veh.run, TRAILING, n, q))

        alight = wish_alight if served else 0
        carried = veh.residual if (veh.unit == AGGREGATE and served) else 0
        board = board_count(wish_board, capacity, load, alight, served)
        if veh.unit == TRAILING and role == "recouple":
            board = 0
        self.waiting[stop] -= board
        dwell = dwell_time(alight, board, served, p.alight_time, p.board_time, p.fixed_stop_loss)
        d = a + dwell

        if alight:
            times = a + p.alight_time * np.arange(1, alight + 1)
            self.alight_times.append(times)
            self.exit_times.append(times[carried:])
            if carried:
                walk = inst.spacing[stop - 1] / p.walk_speed
                self.walk_start.append(times[:carried])
                self.walk_end.append(times[:carried] + walk)
                self.exit_times.append(times[:carried] + walk)
        if board:
            self.board_times.append(a + p.alight_time * alight + p.board_time * np.arange(1, board + 1))

        if veh.unit == AGGREGATE:
            veh.residual = wish_alight - alight
        new_load = load - alight + board
        if new_load > capacity or new_load < 0:
            raise InvariantViolation(f"load {new_load} outside [0, {capacity}]")

        self.visits.append(StopVisit(
            entity=EntityId(veh.run, veh.unit), bus=veh.bus, stop=stop + 1,
            cycle=(veh.run - 1) // self.N + 1, arrival=a, departure=d,
            headway_arr=a - pred_arr, headway_dep=d - pred_dep, load=load,
            wish_alight=wish_alight, alight=alight, wish_board=wish_board, board=board,
            leftover=self.waiting[stop], dwell=dwell, served=served,
            split_here=role == "control", capacity=capacity,
        ))
        self.last_arr[stop] = a
        self.last_dep[stop] = d
        veh.load = new_load

        if veh.unit == AGGREGATE:
            self._record_departure(stop, veh, d, served)
            if stop == 0 and self._should_retire(veh, a):
                return
            self._depart_aggregate(veh, stop, d, d - pred_dep, served)
        elif role == "control":
            if veh.unit == TRAILING:
                split.trailing_board_control = board
                self._record_departure(stop, veh, d, True)
            nxt = self._next_stop(veh, stop)
            self._send(veh, nxt, d + self._cruise(veh, stop))
        elif veh.unit == LEADING:
            split.leading_ready = d
            split.predecessor_departure = pred_dep
            split.leading_load = new_load
        else:
            split.trailing_ready = d
            split.trailing_load = new_load
            self._recouple(veh, stop)

    def _record_departure(self, stop: int, veh: _Vehicle, time: float, served: bool) -> None:
        self.departures.append(Departure(stop + 1, veh.run, veh.bus, time, served))
        if self.t0 is None and stop == self.S - 1:
            cycle = (veh.run - 1) // self.N + 1
            if cycle == self.p.warmup_cycles:
                self._warm_deps[veh.bus] = max(time, self._warm_deps.get(veh.bus, time))
                if len(self._warm_deps) == self.N:
                    self.t0 = max(self._warm_deps.values())
                    self.t1 = self.t0 + self.p.eval_duration

    def _recouple(self, trailing: _Vehicle, stop: int) -> None:
        split = trailing.split
        d = policies.recouple_departure(split.leading_ready, split.trailing_ready)
        self.last_dep[stop] = d
        veh = _Vehicle(bus=trailing.bus, run=trailing.run,
                       load=split.leading_load + split.trailing_load)
        self._record_departure(stop, veh, d, True)
        # a run split around stop 1 passes it without an aggregate arrival there
        if stop in (0, 1) and self._should_retire(veh, d):
            return
        self._depart_aggregate(veh, stop, d, d - split.predecessor_departure, True)

    def _depart_aggregate(self, veh: _Vehicle, stop: int, d: float, dep_headway: float,
                          served: bool) -> None:
        nxt_stop = (stop + 1) % self.S
        decision = policies.decide(
            self.policy, dep_headway, self.H,
            served_current=served, predecessor_served_next=self.plan_next[stop],
            split_at_current=False, next_stop=nxt_stop)
        self.plan_next[stop] = decision.action is not Action.SKIP_NEXT
        veh.skip_next = decision.action is Action.SKIP_NEXT
        if decision.action is not Action.NONE:
            self.control_actions += 1

        if decision.action is Action.SPLIT_FOR_NEXT:
            arrive = d + self._cruise(veh, stop)
            nxt = self._next_stop(veh, stop)
            self._split(veh, nxt, arrive)
            return
        arrive = d + self._cruise(veh, stop)
        nxt = self._next_stop(veh, stop)
        self._send(veh, nxt, arrive)

    def _split(self, veh: _Vehicle, control: int, arrive: float) -> None:
        inst = self.inst
        recouple = (control + 1) % self.S
        lead_load, trail_load = policies.split_loads(veh.load)
        trail_wish, lead_wish, binds = policies.split_alight_wishes(
            veh.load, inst.alight_probs[control], inst.alight_probs[recouple],
            lead_load, trail_load, lambda n, q: self.rng.binomial(veh.run, AGGREGATE, n, q))
        self.cap_bindings += binds
        state = SplitState(
            run=veh.run, control_stop=control, recouple_stop=recouple,
            pre_split_load=veh.load, leading_load=lead_load, trailing_load=trail_load,
            trailing_wish_control=trail_wish, leading_wish_recouple=lead_wish,
            cap_bindings=binds)
        lead = _Vehicle(bus=veh.bus, run=veh.run, unit=LEADING, load=lead_load, split=state)
        trail = _Vehicle(bus=veh.bus, run=veh.run, unit=TRAILING, load=trail_load, split=state)
        self._send(lead, control, arrive)
        self._send(trail, control, arrive)

    def _output(self) -> SimulationOutput:
        def cat(parts):
            return np.sort(np.concatenate(parts)) if parts else np.empty(0)

        curves = PassengerCurves(
            arrivals=cat(self.arr_times),
            boardings=cat(self.board_times),
            alightings=cat(self.alight_times),
            exits=cat(self.exit_times),
            initial_onboard=self.initial_onboard,
            walk_starts=cat(self.walk_start),
            walk_ends=cat(self.walk_end),
        )
        return SimulationOutput(
            instance=self.inst, policy=self.policy, visits=self.visits,
            departures=self.departures, curves=curves, eval_window=(self.t0, self.t1),
            cycle_starts=self.cycle_starts, control_actions=self.control_actions,
            cap_bindings=self.cap_bindings,
        )


def default_horizon(instance: LineInstance) -> int:
    p = instance.params
    return p.warmup_cycles + math.ceil(p.eval_duration / instance.cycle_time) + 2


def simulate(instance: LineInstance, policy: PolicySpec | None = None, rng=None,
             horizon_cycles: int | None = None) -> SimulationOutput:
    """Run one realization of the line under ``policy``.

    With ``horizon_cycles=None`` each bus stops once the evaluation window is
    fully covered; otherwise every bus runs exactly that many cycles and a
    :class:`HorizonTooShortError` is raised if that does not reach the end of
    the window.
    """
    from .rng import SubstreamRNG

    if policy is None:
        policy = instance.params.policy
    if rng is None:
        rng = SubstreamRNG(instance.params.master_seed)
    if policy.kind is PolicyKind.BUS_SPLITTING and instance.params.bus_capacity % 2:
        raise SimulationError("bus splitting needs an even capacity")
    return _Simulation(instance, policy, rng, horizon_cycles).run()
