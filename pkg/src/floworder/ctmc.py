"""Generator construction, simulation and distribution solvers.

The continuous-time chain lives on the finite state set of a NetworkSpec.
Its generator is assembled link by link, keeping one labeled entry per
(state, link) so that flows stay attributable to links even when the
matrix itself sums parallel contributions.

Solvers:

  * stationary_distribution: power iteration on the uniformized kernel,
    with a dense null-space fallback for up to 2000 states. The chain may
    have transient states, but exactly one recurrent class.
  * transient_distribution: uniformization with Poisson tail truncation.
  * transient_mean_flow: quadrature of the instantaneous mean rate of one
    link over a uniform grid, refined (with Richardson extrapolation)
    until successive estimates agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .model import Link, ModelError, NetworkSpec, State
from .rng import exponential, make_stream

__all__ = [
    "SolverError",
    "ReducibleChainError",
    "ConvergenceError",
    "ToleranceError",
    "Event",
    "EventLog",
    "Generator",
    "build_generator",
    "simulate_path",
    "stationary_distribution",
    "transient_distribution",
    "transient_mean_flow",
    "throughput",
    "distribution_vector",
    "event_log_csv",
    "distribution_csv",
]


class SolverError(RuntimeError):
    pass


class ReducibleChainError(SolverError):
    """More than one recurrent class; no unique stationary distribution."""

    def __init__(self, classes):
        self.classes = classes
        preview = "; ".join(str(list(c)) for c in classes)
        super().__init__(f"chain has {len(classes)} recurrent classes: {preview}")


class ConvergenceError(SolverError):
    def __init__(self, residual):
        self.residual = residual
        super().__init__(f"stationary solve did not converge, residual {residual:g}")


class ToleranceError(SolverError):
    """Requested tolerance is below what floating point terms can resolve."""


class Event(NamedTuple):
    time: float
    link: Link
    pre: State
    post: State


@dataclass
class EventLog:
    """One simulated path: the jump times, links and states visited."""

    initial: State
    events: list[Event]
    horizon: float
    absorbed: bool
    links: tuple[Link, ...]

    def state_at(self, t: float) -> State:
        x = self.initial
        for ev in self.events:
            if ev.time > t:
                break
            x = ev.post
        return x


@dataclass
class Generator:
    states: tuple[State, ...]
    index: dict
    entries: tuple  # (src_index, dst_index, rate, link), rate > 0
    matrix: sp.csr_matrix  # includes the diagonal
    exit_rates: np.ndarray
    unif_rate: float
    _kernel: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    def uniformized_kernel(self) -> sp.csr_matrix:
        """I + Q / unif_rate; requires unif_rate > 0."""
        if self._kernel is None:
            m = len(self.states)
            self._kernel = (sp.identity(m, format="csr") + self.matrix / self.unif_rate).tocsr()
        return self._kernel


def build_generator(spec: NetworkSpec) -> Generator:
    states = spec.states
    index = spec.state_index
    entries = []
    m = len(states)
    exit_rates = np.zeros(m)
    rows, cols, vals = [], [], []
    for link in spec.links:
        table = spec.rate_table(link)
        for i, x in enumerate(states):
            r = table[x]
            if r > 0.0:
                y = spec.target(x, link)
                j = index[y]  # guaranteed by validation
                entries.append((i, j, r, link))
                rows.append(i)
                cols.append(j)
                vals.append(r)
                exit_rates[i] += r
    for i in range(m):
        if exit_rates[i] > 0.0:
            rows.append(i)
            cols.append(i)
            vals.append(-exit_rates[i])
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(m, m))
    unif = float(exit_rates.max()) if m else 0.0
    return Generator(
        states=states,
        index=index,
        entries=tuple(entries),
        matrix=matrix,
        exit_rates=exit_rates,
        unif_rate=unif,
    )


def simulate_path(spec: NetworkSpec, init, horizon: float, seed: int) -> EventLog:
    """Gillespie path up to `horizon`.

    The path stops at the first event time past the horizon (that event is
    not recorded) or when the total exit rate hits zero, which sets the
    absorbed flag. Ties in link selection resolve in declared link order.
    """
    init = tuple(int(v) for v in init)
    if init not in spec.state_index:
        raise ModelError(f"initial state {init} not in the state space")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    rng = make_stream(seed)
    links = spec.links
    tables = [spec.rate_table(link) for link in links]
    events: list[Event] = []
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
        if chosen < 0:  # rounding pushed the draw past the last bin
            chosen = max(i for i, r in enumerate(rates) if r > 0.0)
        link = links[chosen]
        post = spec.target(x, link)
        events.append(Event(t_next, link, x, post))
        x = post
        t = t_next
    return EventLog(
        initial=init, events=events, horizon=float(horizon), absorbed=absorbed, links=links
    )


def _recurrent_class(gen: Generator):
    """Indices of the unique recurrent class, or raise ReducibleChainError."""
    m = len(gen.states)
    if m == 1:
        return [0]
    rows = [e[0] for e in gen.entries]
    cols = [e[1] for e in gen.entries]
    adj = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, m))
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    has_exit = np.zeros(n_comp, dtype=bool)
    for i, j, _, _ in gen.entries:
        if labels[i] != labels[j]:
            has_exit[labels[i]] = True
    recurrent = [c for c in range(n_comp) if not has_exit[c]]
    if len(recurrent) > 1:
        classes = [
            [gen.states[i] for i in range(m) if labels[i] == c] for c in recurrent
        ]
        raise ReducibleChainError(classes)
    c = recurrent[0]
    return [i for i in range(m) if labels[i] == c]


def stationary_distribution(gen: Generator, tol: float = 1e-12) -> np.ndarray:
    """Stationary distribution with residual norm below `tol`.

    Transient states (outside the unique recurrent class) get mass zero.
    """
    m = len(gen.states)
    members = _recurrent_class(gen)
    k = len(members)
    pi_full = np.zeros(m)
    if k == 1:
        pi_full[members[0]] = 1.0
        return pi_full
    sub = gen.matrix[np.ix_(members, members)].tocsr()
    max_exit = float(-sub.diagonal().min())
    # inflate the uniformization constant so the kernel keeps self loops
    lam = 1.25 * max_exit
    kernel = (sp.identity(k, format="csr") + sub / lam).tocsr()
    pi = np.full(k, 1.0 / k)
    converged = False
    for it in range(50_000):
        pi = pi @ kernel
        np.clip(pi, 0.0, None, out=pi)
        pi /= pi.sum()
        if it % 64 == 63:
            if float(np.abs(pi @ sub).max()) < tol:
                converged = True
                break
    if not converged and k <= 2000:
        # dense null-space fallback: replace one balance row by normalization
        a = sub.toarray().T
        a[-1, :] = 1.0
        b = np.zeros(k)
        b[-1] = 1.0
        try:
            pi = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            pi = np.linalg.lstsq(a, b, rcond=None)[0]
        np.clip(pi, 0.0, None, out=pi)
        pi /= pi.sum()
    residual = float(np.abs(pi @ sub).max())
    if residual >= tol:
        raise ConvergenceError(residual)
    pi_full[members] = pi
    return pi_full


def distribution_vector(gen: Generator, p0) -> np.ndarray:
    """Normalize a distribution argument.

    A tuple is a state (point mass), a mapping is a sparse distribution
    keyed by state, anything else is a dense vector over the enumeration.
    """
    m = len(gen.states)
    if isinstance(p0, tuple):
        x = tuple(int(v) for v in p0)
        if x not in gen.index:
            raise ModelError(f"state {x} not in the state space")
        vec = np.zeros(m)
        vec[gen.index[x]] = 1.0
        return vec
    if isinstance(p0, dict):
        vec = np.zeros(m)
        for state, mass in p0.items():
            x = tuple(int(v) for v in state)
            if x not in gen.index:
                raise ModelError(f"state {x} not in the state space")
            vec[gen.index[x]] = float(mass)
    else:
        vec = np.asarray(p0, dtype=float).copy()
        if vec.shape != (m,):
            raise ValueError(f"distribution must have length {m}")
    if vec.min() < -1e-12:
        raise ValueError("distribution has negative mass")
    s = vec.sum()
    if abs(s - 1.0) > 1e-9:
        raise ValueError(f"distribution sums to {s}, not 1")
    return np.clip(vec, 0.0, None) / np.clip(vec, 0.0, None).sum()


def transient_distribution(gen: Generator, p0, t: float, tol: float = 1e-12) -> np.ndarray:
    """Distribution at time t by uniformization.

    The Poisson tail is truncated once the kept weights cover 1 - tol, and
    the result is renormalized. Large unif_rate * t is split into pieces to
    keep the leading Poisson weight representable.
    """
    vec = distribution_vector(gen, p0)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0.0 or gen.unif_rate == 0.0:
        return vec
    q = gen.unif_rate * t
    if q > 500.0:
        pieces = int(math.ceil(q / 500.0))
        p = vec
        for _ in range(pieces):
            p = transient_distribution(gen, p, t / pieces, tol / pieces)
        return p
    kernel = gen.uniformized_kernel()
    w = math.exp(-q)
    acc = w * vec
    v = vec
    cum = w
    k = 0
    k_cap = int(q + 40.0 * math.sqrt(q) + 200.0)
    while cum < 1.0 - tol:
        k += 1
        if k > k_cap:
            raise ToleranceError(
                f"tolerance {tol:g} is below what representable Poisson terms reach"
            )
        v = v @ kernel
        w *= q / k
        acc = acc + w * v
        cum += w
    np.clip(acc, 0.0, None, out=acc)
    return acc / acc.sum()


def transient_mean_flow(
    spec: NetworkSpec, p0, link: Link, t: float, tol: float = 1e-10
) -> float:
    """Expected number of moves along `link` in (0, t], counters starting at zero.

    Integrates the instantaneous mean rate sum_x p_s(x) rate(x) over a
    uniform grid that is halved (with Richardson extrapolation on the
    trapezoid sums) until successive estimates differ by less than tol.
    """
    if link not in spec.rates:
        raise ModelError(f"unknown link {link}")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0.0:
        return 0.0
    gen = build_generator(spec)
    rate_vec = spec.rate_vector(link)
    p_start = distribution_vector(gen, p0)
    if gen.unif_rate == 0.0:
        return float(p_start @ rate_vec) * t
    step_tol = 1e-14

    ps = [p_start, transient_distribution(gen, p_start, t, step_tol)]
    values = [float(p @ rate_vec) for p in ps]
    rows = [[t * (values[0] + values[1]) / 2.0]]
    for level in range(1, 19):
        h = t / (2**level)
        new_ps = []
        for j in range(len(ps) - 1):
            new_ps.append(ps[j])
            new_ps.append(transient_distribution(gen, ps[j], h, step_tol))
        new_ps.append(ps[-1])
        ps = new_ps
        values = [float(p @ rate_vec) for p in ps]
        trap = h * (values[0] / 2.0 + sum(values[1:-1]) + values[-1] / 2.0)
        row = [trap]
        for j in range(1, level + 1):
            prev = rows[-1][j - 1] if j - 1 < len(rows[-1]) else row[-1]
            row.append(row[-1] + (row[-1] - prev) / (4.0**j - 1.0))
        diff = abs(row[-1] - rows[-1][-1])
        rows.append(row)
        if level >= 3 and diff < tol / 2.0:
            return max(0.0, row[-1])
    raise ToleranceError(f"mean flow quadrature did not reach tolerance {tol:g}")


def throughput(spec: NetworkSpec, pi, link: Link) -> float:
    """Stationary rate of moves along `link`: sum_x pi(x) rate(x)."""
    if link not in spec.rates:
        raise ModelError(f"unknown link {link}")
    vec = np.asarray(pi, dtype=float)
    if vec.shape != (len(spec.states),):
        raise ValueError(
            f"distribution has length {vec.shape}, expected {len(spec.states)}"
        )
    return float(vec @ spec.rate_vector(link))


def _fmt(value: float) -> str:
    return repr(float(value))


def event_log_csv(log: EventLog) -> str:
    """CSV rows time,link_from,link_to,state_after; states joined by ';'."""
    lines = ["time,link_from,link_to,state_after"]
    for ev in log.events:
        state = ";".join(str(v) for v in ev.post)
        lines.append(f"{_fmt(ev.time)},{ev.link[0]},{ev.link[1]},{state}")
    return "\n".join(lines) + "\n"


def distribution_csv(states, probs) -> str:
    lines = ["state,probability"]
    for x, p in zip(states, probs):
        lines.append(";".join(str(v) for v in x) + "," + _fmt(p))
    return "\n".join(lines) + "\n"
