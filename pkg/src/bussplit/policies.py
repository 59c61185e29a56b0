"""Stop-skipping and bus-splitting control laws.

Both laws are evaluated when an aggregate bus departs stop ``s`` and only
decide how the next stop (the control stop) is treated.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .domain import PolicyKind, PolicySpec


class Action(enum.Enum):
    NONE = "none"
    SKIP_NEXT = "skip_next"
    SPLIT_FOR_NEXT = "split_for_next"


@dataclass(frozen=True)
class ControlDecision:
    action: Action = Action.NONE
    control_stop: int | None = None


NO_ACTION = ControlDecision()


def skip_decision(departing_headway: float, target: float, eta: float,
                  served_current: bool, predecessor_served_next: bool,
                  next_stop: int | None = None) -> ControlDecision:
    """Skip the next stop when the bus runs late.

    A bus never skips two stops in a row and a stop is never skipped by two
    consecutive buses.
    """
    if departing_headway > eta * target and served_current and predecessor_served_next:
        return ControlDecision(Action.SKIP_NEXT, next_stop)
    return NO_ACTION


def split_decision(departing_headway: float, target: float, eta: float,
                   split_at_current: bool, is_unit: bool = False,
                   next_stop: int | None = None) -> ControlDecision:
    """Decouple en route to the next stop when the bus runs late."""
    if is_unit:
        raise ValueError("a decoupled modular unit cannot be split further")
    if departing_headway > eta * target and not split_at_current:
        return ControlDecision(Action.SPLIT_FOR_NEXT, next_stop)
    return NO_ACTION


def decide(policy: PolicySpec, departing_headway: float, target: float, *,
           served_current: bool = True, predecessor_served_next: bool = True,
           split_at_current: bool = False, next_stop: int | None = None) -> ControlDecision:
    if policy.kind is PolicyKind.STOP_SKIPPING:
        return skip_decision(departing_headway, target, policy.threshold,
                             served_current, predecessor_served_next, next_stop)
    if policy.kind is PolicyKind.BUS_SPLITTING:
        return split_decision(departing_headway, target, policy.threshold,
                              split_at_current, next_stop=next_stop)
    return NO_ACTION


def split_loads(load: int) -> tuple[int, int]:
    """Leading unit takes the odd passenger: ``(ceil(l/2), floor(l/2))``."""
    if load < 0:
        raise ValueError("negative load")
    return load - load // 2, load // 2


@dataclass
class SplitState:
    """Bookkeeping for one run while its units are decoupled."""

    run: int
    control_stop: int
    recouple_stop: int
    pre_split_load: int
    leading_load: int
    trailing_load: int
    trailing_wish_control: int
    leading_wish_recouple: int
    cap_bindings: int = 0
    trailing_board_control: int | None = None
    leading_ready: float | None = None
    trailing_ready: float | None = None
    predecessor_departure: float | None = None


def split_alight_wishes(pre_split_load: int, p_control: float, p_recouple: float,
                        leading_load: int, trailing_load: int, draw) -> tuple[int, int, int]:
    """Alight wishes fixed at the moment of decoupling.

    ``draw(n, p)`` returns a binomial sample. Returns the trailing unit's
    wish at the control stop, the leading unit's wish at the recoupling stop
    and the number of caps that bound (diagnostic). The leading unit's wish at
    the control stop is zero by construction.
    """
    raw = draw(pre_split_load, p_control)
    trailing_wish = min(raw, trailing_load)
    raw_next = draw(pre_split_load - trailing_wish, p_recouple)
    leading_wish = min(raw_next, leading_load)
    bindings = int(raw > trailing_load) + int(raw_next > leading_load)
    return trailing_wish, leading_wish, bindings


def trailing_alight_wish(trailing_boarded: int, p_recouple: float, draw) -> int:
    """Only the one-stop riders who boarded the trailing unit can leave it next."""
    return draw(trailing_boarded, p_recouple)


def trailing_wish_board(leading_wish_board: int) -> int:
    """Both units dock together, so the trailing unit sees the same queue."""
    return leading_wish_board


def recouple_departure(leading_ready: float, trailing_ready: float) -> float:
    return max(leading_ready, trailing_ready)


def residual_walk(residual_count: int, spacing: float, walk_speed: float) -> list[float]:
    """Walk-back durations for passengers carried past a skipped stop."""
    return [spacing / walk_speed] * residual_count
