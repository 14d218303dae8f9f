"""State-flow augmentation: populations paired with per-link event counters.

Augmenting a population process with one counter per link makes cumulative
flows part of the state: a move along link (i, j) takes (x, f) to
(x - e_i + e_j, f + e_{i,j}) at the population rate, which depends on x
only. The per-node balance x_i - (inflow count) + (outflow count) is
preserved by every such move, so it is a path invariant.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Mapping, NamedTuple

from .model import Link, ModelError, NetworkSpec, State
from .rng import exponential, make_stream

__all__ = [
    "zero_flows",
    "balance_signature",
    "augment",
    "StateFlowRule",
    "StateFlowEvent",
    "StateFlowLog",
    "simulate_stateflow_path",
    "recover_flows",
    "FlowTrajectory",
]


def zero_flows(links) -> dict[Link, int]:
    return {tuple(link): 0 for link in links}


def balance_signature(x: State, flows: Mapping[Link, int]) -> tuple[int, ...]:
    """Per-node balance b_i = x_i - inflow_i + outflow_i.

    Constant along every state-flow path, equal to the initial population
    when counters start at zero.
    """
    b = [int(v) for v in x]
    for (i, j), count in flows.items():
        if i >= 1:
            b[i - 1] += int(count)
        if j >= 1:
            b[j - 1] -= int(count)
    return tuple(b)


class StateFlowRule:
    """Transition rule of the augmented chain for one NetworkSpec."""

    def __init__(self, spec: NetworkSpec):
        self.spec = spec

    def transitions(self, x: State, flows: Mapping[Link, int]):
        """Enabled moves from (x, flows): list of (link, rate, (x2, flows2)).

        Rates depend on x alone; the counters only record.
        """
        x = tuple(x)
        out = []
        for link in self.spec.links:
            rate = self.spec.rate_table(link)[x]
            if rate > 0.0:
                f2 = dict(flows)
                f2[link] = f2.get(link, 0) + 1
                out.append((link, rate, (self.spec.target(x, link), f2)))
        return out


def augment(spec: NetworkSpec) -> StateFlowRule:
    return StateFlowRule(spec)


class StateFlowEvent(NamedTuple):
    time: float
    link: Link
    state: State  # after the move
    flows: tuple[int, ...]  # after the move, aligned with the link order


@dataclass
class StateFlowLog:
    initial_state: State
    initial_flows: tuple[int, ...]
    links: tuple[Link, ...]
    events: list[StateFlowEvent]
    horizon: float
    absorbed: bool

    def final_flows(self) -> dict[Link, int]:
        flows = self.events[-1].flows if self.events else self.initial_flows
        return dict(zip(self.links, flows))


def simulate_stateflow_path(
    spec: NetworkSpec, init, horizon: float, seed: int, flows0=None
) -> StateFlowLog:
    """Simulate the augmented chain directly.

    Uses the same stream discipline as simulate_path, so the population
    projection of this log and a plain population path with the same seed
    coincide event for event.
    """
    init = tuple(int(v) for v in init)
    if init not in spec.state_index:
        raise ModelError(f"initial state {init} not in the state space")
    links = spec.links
    if flows0 is None:
        start_flows = tuple(0 for _ in links)
    else:
        start_flows = tuple(int(flows0.get(link, 0)) for link in links)
    flows = start_flows
    rng = make_stream(seed)
    tables = [spec.rate_table(link) for link in links]
    events: list[StateFlowEvent] = []
    x = init
    t = 0.0
    absorbed = False
    while True:
        rates = [table[x] for table in tables]
        total = 0.0
        for r in rates:
            total += r
        if total <= 0.0:
            absorbed = True
            break
        t_next = t + exponential(rng, total)
        if t_next > horizon:
            break
        target_mass = rng.random() * total
        chosen = -1
        acc = 0.0
        for idx, r in enumerate(rates):
            acc += r
            if target_mass < acc:
                chosen = idx
                break
        if chosen < 0:
            chosen = max(i for i, r in enumerate(rates) if r > 0.0)
        link = links[chosen]
        x = spec.target(x, link)
        flows = flows[:chosen] + (flows[chosen] + 1,) + flows[chosen + 1 :]
        events.append(StateFlowEvent(t_next, link, x, flows))
        t = t_next
    return StateFlowLog(
        initial_state=init,
        initial_flows=start_flows,
        links=links,
        events=events,
        horizon=float(horizon),
        absorbed=absorbed,
    )


class FlowTrajectory:
    """Right-continuous step functions, one counter per link."""

    def __init__(self, links, initial: Mapping[Link, int], jumps: Mapping[Link, list]):
        self.links = tuple(links)
        self.initial = {link: int(initial.get(link, 0)) for link in self.links}
        self._jumps = {link: sorted(jumps.get(link, [])) for link in self.links}

    def value(self, link: Link, t: float) -> int:
        return self.initial[link] + bisect_right(self._jumps[link], t)

    def counters_at(self, t: float) -> dict[Link, int]:
        return {link: self.value(link, t) for link in self.links}

    def final(self) -> dict[Link, int]:
        return {
            link: self.initial[link] + len(self._jumps[link]) for link in self.links
        }

    def rows(self):
        """(time, link, counter) for every jump, in time order."""
        order = {link: k for k, link in enumerate(self.links)}
        merged = []
        for link in self.links:
            running = self.initial[link]
            for t in self._jumps[link]:
                running += 1
                merged.append((t, order[link], link, running))
        merged.sort(key=lambda row: (row[0], row[1]))
        return [(t, link, count) for t, _, link, count in merged]

    def to_csv(self) -> str:
        lines = ["time,link,counter"]
        for t, link, count in self.rows():
            lines.append(f"{float(t)!r},{link[0]}->{link[1]},{count}")
        return "\n".join(lines) + "\n"


def recover_flows(log, flows0: Mapping[Link, int] | None = None) -> FlowTrajectory:
    """Rebuild cumulative per-link flows from a population event log.

    The counter of link l at time t is its start value plus the number of
    events on l with time <= t.
    """
    initial = dict(flows0) if flows0 is not None else zero_flows(log.links)
    jumps: dict[Link, list] = {link: [] for link in log.links}
    for ev in log.events:
        jumps[ev.link].append(ev.time)
    return FlowTrajectory(log.links, initial, jumps)
