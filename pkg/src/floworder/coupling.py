"""Marching-soldiers couplings of two population processes.

Two chains A and B over the same link family move together as much as
their rates allow: on each link with component rates a and b, the pair
takes a joint step at min(a, b), B alone at max(b - a, 0) and A alone at
max(a - b, 0). Each marginal therefore sees exactly its own rates, and
whenever one rate dominates the other, only the dominant side can step
ahead. The coupling exists in a population form, tracking (x, x'), and a
state-flow form that also carries per-link counters for both sides.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .ctmc import Event, EventLog
from .model import Link, ModelError, NetworkSpec, State
from .rng import exponential, make_stream

__all__ = [
    "marching_rates",
    "CoupledSpec",
    "build_population_coupling",
    "build_stateflow_coupling",
    "CoupledEvent",
    "PairedEventLog",
    "simulate_coupled",
    "paired_log_csv",
]

JOINT = "joint"
B_ONLY = "b_only"
A_ONLY = "a_only"


def marching_rates(a: float, a_prime: float) -> tuple[float, float, float]:
    """(joint, b_only, a_only) rates for component rates a and a_prime.

    Marginality holds by construction: joint + a_only equals a, and
    joint + b_only equals a_prime.
    """
    if a < 0 or a_prime < 0:
        raise ValueError("component rates must be nonnegative")
    joint = a if a <= a_prime else a_prime
    return (joint, max(a_prime - a, 0.0), max(a - a_prime, 0.0))


@dataclass
class CoupledSpec:
    """A pair of specs over one link family, coupled link by link.

    The coupled generator is never materialized; rates are produced on
    demand from the component rate tables, so the reachable pair space
    stays implicit.
    """

    spec_a: NetworkSpec
    spec_b: NetworkSpec
    with_flows: bool

    def __post_init__(self):
        if self.spec_a.n != self.spec_b.n:
            raise ModelError("coupled specs must have the same number of nodes")
        if self.spec_a.links != self.spec_b.links:
            raise ModelError("coupled specs must share the link family")

    @property
    def links(self) -> tuple[Link, ...]:
        return self.spec_a.links

    @property
    def n(self) -> int:
        return self.spec_a.n

    def transition_rates(self, xa: State, xb: State):
        """Per-link triples at the pair (xa, xb): (link, joint, b_only, a_only)."""
        out = []
        for link in self.links:
            a = self.spec_a.rate_table(link)[tuple(xa)]
            b = self.spec_b.rate_table(link)[tuple(xb)]
            joint, b_only, a_only = marching_rates(a, b)
            out.append((link, joint, b_only, a_only))
        return out


def build_population_coupling(spec_a: NetworkSpec, spec_b: NetworkSpec) -> CoupledSpec:
    return CoupledSpec(spec_a=spec_a, spec_b=spec_b, with_flows=False)


def build_stateflow_coupling(spec_a: NetworkSpec, spec_b: NetworkSpec) -> CoupledSpec:
    return CoupledSpec(spec_a=spec_a, spec_b=spec_b, with_flows=True)


class CoupledEvent(NamedTuple):
    time: float
    link: Link
    kind: str  # "joint", "b_only" or "a_only"
    state_a: State
    state_b: State
    flows_a: tuple[int, ...] | None
    flows_b: tuple[int, ...] | None


@dataclass
class PairedEventLog:
    initial_a: State
    initial_b: State
    initial_flows_a: tuple[int, ...] | None
    initial_flows_b: tuple[int, ...] | None
    links: tuple[Link, ...]
    events: list[CoupledEvent]
    horizon: float
    absorbed: bool
    with_flows: bool

    def project(self, side: str) -> EventLog:
        """Component event log of side 'a' or 'b' (joint plus one-sided moves)."""
        if side not in ("a", "b"):
            raise ValueError("side must be 'a' or 'b'")
        keep = A_ONLY if side == "a" else B_ONLY
        x = self.initial_a if side == "a" else self.initial_b
        events = []
        for ev in self.events:
            if ev.kind == JOINT or ev.kind == keep:
                post = ev.state_a if side == "a" else ev.state_b
                events.append(Event(ev.time, ev.link, x, post))
                x = post
        return EventLog(
            initial=self.initial_a if side == "a" else self.initial_b,
            events=events,
            horizon=self.horizon,
            absorbed=False,
            links=self.links,
        )


def simulate_coupled(
    coupled: CoupledSpec,
    init_a,
    init_b,
    horizon: float,
    seed: int,
) -> PairedEventLog:
    """Simulate the coupled chain; counters (state-flow form) start at zero.

    Candidate events are ordered (joint, B-only, A-only) within each link
    and links keep their declared order, so a seed fixes the path exactly.
    """
    xa = tuple(int(v) for v in init_a)
    xb = tuple(int(v) for v in init_b)
    if xa not in coupled.spec_a.state_index:
        raise ModelError(f"initial state {xa} not in the first state space")
    if xb not in coupled.spec_b.state_index:
        raise ModelError(f"initial state {xb} not in the second state space")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    links = coupled.links
    tables_a = [coupled.spec_a.rate_table(link) for link in links]
    tables_b = [coupled.spec_b.rate_table(link) for link in links]
    with_flows = coupled.with_flows
    fa = tuple(0 for _ in links) if with_flows else None
    fb = tuple(0 for _ in links) if with_flows else None
    rng = make_stream(seed)
    events: list[CoupledEvent] = []
    t = 0.0
    absorbed = False
    while True:
        triples = []
        total = 0.0
        for k in range(len(links)):
            a = tables_a[k][xa]
            b = tables_b[k][xb]
            joint = a if a <= b else b
            b_only = max(b - a, 0.0)
            a_only = max(a - b, 0.0)
            triples.append((joint, b_only, a_only))
            total += joint + b_only + a_only
        if total <= 0.0:
            absorbed = True
            break
        t_next = t + exponential(rng, total)
        if t_next > horizon:
            break
        target_mass = rng.random() * total
        chosen_link = -1
        chosen_kind = None
        acc = 0.0
        for k, (joint, b_only, a_only) in enumerate(triples):
            acc += joint
            if target_mass < acc:
                chosen_link, chosen_kind = k, JOINT
                break
            acc += b_only
            if target_mass < acc:
                chosen_link, chosen_kind = k, B_ONLY
                break
            acc += a_only
            if target_mass < acc:
                chosen_link, chosen_kind = k, A_ONLY
                break
        if chosen_link < 0:
            for k in range(len(links) - 1, -1, -1):
                joint, b_only, a_only = triples[k]
                if a_only > 0.0:
                    chosen_link, chosen_kind = k, A_ONLY
                    break
                if b_only > 0.0:
                    chosen_link, chosen_kind = k, B_ONLY
                    break
                if joint > 0.0:
                    chosen_link, chosen_kind = k, JOINT
                    break
        link = links[chosen_link]
        if chosen_kind != B_ONLY:
            xa = coupled.spec_a.target(xa, link)
            if with_flows:
                fa = fa[:chosen_link] + (fa[chosen_link] + 1,) + fa[chosen_link + 1 :]
        if chosen_kind != A_ONLY:
            xb = coupled.spec_b.target(xb, link)
            if with_flows:
                fb = fb[:chosen_link] + (fb[chosen_link] + 1,) + fb[chosen_link + 1 :]
        events.append(CoupledEvent(t_next, link, chosen_kind, xa, xb, fa, fb))
        t = t_next
    return PairedEventLog(
        initial_a=tuple(int(v) for v in init_a),
        initial_b=tuple(int(v) for v in init_b),
        initial_flows_a=tuple(0 for _ in links) if with_flows else None,
        initial_flows_b=tuple(0 for _ in links) if with_flows else None,
        links=links,
        events=events,
        horizon=float(horizon),
        absorbed=absorbed,
        with_flows=with_flows,
    )


def paired_log_csv(log: PairedEventLog) -> str:
    """CSV rows: time,link_from,link_to,which,stateA,stateB,flowA,flowB."""
    lines = ["time,link_from,link_to,which,stateA,stateB,flowA,flowB"]
    for ev in log.events:
        sa = ";".join(str(v) for v in ev.state_a)
        sb = ";".join(str(v) for v in ev.state_b)
        fa = ";".join(str(v) for v in ev.flows_a) if ev.flows_a is not None else ""
        fb = ";".join(str(v) for v in ev.flows_b) if ev.flows_b is not None else ""
        lines.append(
            f"{float(ev.time)!r},{ev.link[0]},{ev.link[1]},{ev.kind},{sa},{sb},{fa},{fb}"
        )
    return "\n".join(lines) + "\n"
