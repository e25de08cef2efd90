"""Priority dispatching rule baselines and the scalar evaluation metrics."""

from __future__ import annotations

from enum import Enum

from .env import ScheduleState, reset
from .instance import Instance


class Rule(str, Enum):
    FIFO = "fifo"   # earliest job-ready time
    SPT = "spt"     # shortest processing time
    LPT = "lpt"     # longest processing time
    SRM = "srm"     # shortest remaining work on the op's machine
    SRPT = "srpt"   # shortest remaining work of the op's job
    MWKR = "mwkr"   # most work remaining for the op's job


def _priority(rule: Rule, st: ScheduleState, u: int) -> float:
    """Lower is better; argmax rules negate their score."""
    inst = st.inst
    j, k = divmod(u, inst.m)
    i, p = inst.ops[j][k]
    if rule is Rule.FIFO:
        return float(st.job_ready[j])
    if rule is Rule.SPT:
        return float(p)
    if rule is Rule.LPT:
        return -float(p)
    if rule is Rule.SRM:
        return float(st.machine_remaining[i])
    if rule is Rule.SRPT:
        return float(st.job_remaining[j])
    if rule is Rule.MWKR:
        return -float(st.job_remaining[j])
    raise ValueError(f"unknown rule {rule!r}")


def select(rule: Rule, st: ScheduleState) -> int:
    """Pick the next op non-delay style: restrict to available ops with the
    minimal earliest start time, apply the rule's priority among those, and
    break remaining ties by lowest job index, then lowest machine index."""
    best_u = -1
    best_key = None
    for u in st.available():
        j, k = divmod(u, st.inst.m)
        i = st.inst.machine(j, k)
        est = max(int(st.machine_ready[i]), int(st.job_ready[j]))
        key = (est, _priority(rule, st, u), j, i)
        if best_key is None or key < best_key:
            best_key = key
            best_u = u
    if best_u < 0:
        raise ValueError("no available operations")
    return best_u


def dispatch(inst: Instance, rule: Rule) -> tuple[ScheduleState, int]:
    """Run the rule to completion; returns the schedule and its makespan."""
    st = reset(inst)
    while not st.done:
        st.step(select(rule, st))
    return st, st.makespan()


def optimality_gap(c: float, ub: float) -> float:
    """Percentage deviation from the best-known makespan: 100*(c-ub)/ub."""
    if ub <= 0:
        raise ValueError(f"nonpositive best-known makespan {ub}")
    return 100.0 * (c - ub) / ub


def improvement_rate(c_base: float, c_prop: float) -> float:
    """100*(baseline - proposed)/baseline; negative when proposed is worse."""
    if c_base <= 0:
        raise ValueError(f"nonpositive baseline makespan {c_base}")
    return 100.0 * (c_base - c_prop) / c_base
