"""Shared builders and independent oracles for the test suite.

The oracles deliberately avoid the package's own solvers: stationary
vectors come from a dense null-space computation, transients from a
fixed-step Runge-Kutta integration, and distribution comparisons from a
plain chi-square statistic. Tests freeze or recompute these values and
compare the implementation against them.
"""

from __future__ import annotations

import json
import math

import numpy as np
from scipy.linalg import null_space
from scipy.stats import chi2

from floworder.model import NetworkSpec, linear_links, parse_model

# ---------------------------------------------------------------- documents


def single_node_doc(arrival: str, service: str, cap: int, params=None, clamp=False):
    return {
        "n": 1,
        "space": {"box": [cap]},
        "params": params or {},
        "rates": {"0->1": arrival, "1->0": service},
        "clamp": clamp,
    }


def two_state_chain() -> NetworkSpec:
    """Single node holding 0 or 1 job, unit rates both ways."""
    return parse_model(single_node_doc("ind(x1 < 1)", "x1", 1))


def mm1c_chain(lam: float, mu: float, cap: int) -> NetworkSpec:
    """Constant arrivals at rate lam, single server at rate mu."""
    return parse_model(
        single_node_doc(
            "lam * ind(x1 < cap)",
            "mu * min(x1, 1)",
            cap,
            params={"lam": lam, "mu": mu, "cap": cap},
        )
    )


def tandem_doc_text(s1=2, s2=2, beta=1.0) -> str:
    """A plain JSON document for the unmodified tandem with unit-linear service."""
    d1 = " + ".join(f"{k} * ind(x1 = {k})" for k in range(1, s1 + 1))
    d2 = " + ".join(f"{k} * ind(x2 = {k})" for k in range(1, s2 + 1))
    return json.dumps(
        {
            "n": 2,
            "space": {"box": [s1, s2]},
            "params": {"beta": beta, "s1": s1, "s2": s2},
            "rates": {
                "0->1": "beta * ind(x1 < s1)",
                "1->2": f"({d1}) * ind(x2 < s2)",
                "2->0": d2,
            },
        }
    )


# ------------------------------------------------------------------ oracles


def dense_q(spec: NetworkSpec) -> np.ndarray:
    """Dense generator assembled directly from rate tables, no ctmc module."""
    states = spec.states
    index = {x: i for i, x in enumerate(states)}
    m = len(states)
    q = np.zeros((m, m))
    for link in spec.links:
        table = spec.rate_table(link)
        for x in states:
            r = table[x]
            if r > 0.0:
                q[index[x], index[spec.target(x, link)]] += r
                q[index[x], index[x]] -= r
    return q


def nullspace_stationary(q: np.ndarray) -> np.ndarray:
    """Stationary vector via an orthonormal null-space basis of Q^T."""
    basis = null_space(q.T)
    assert basis.shape[1] == 1, "oracle expects a one-dimensional null space"
    v = basis[:, 0]
    if v.sum() < 0:
        v = -v
    assert (v > -1e-12).all()
    return np.clip(v, 0.0, None) / np.clip(v, 0.0, None).sum()


def rk4_transient(q: np.ndarray, p0: np.ndarray, t: float, h: float = 1e-4):
    """Fixed-step fourth-order Runge-Kutta on p' = p Q."""
    steps = int(round(t / h))
    assert abs(steps * h - t) < 1e-9
    p = np.array(p0, dtype=float)
    for _ in range(steps):
        k1 = p @ q
        k2 = (p + 0.5 * h * k1) @ q
        k3 = (p + 0.5 * h * k2) @ q
        k4 = (p + h * k3) @ q
        p = p + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return p


def chi_square_pvalue(counts_a: dict, counts_b: dict) -> float:
    """Homogeneity test of two integer-valued samples given as count maps.

    Bins with pooled expected count below five are merged into their right
    neighbor before the statistic is formed.
    """
    keys = sorted(set(counts_a) | set(counts_b))
    a = np.array([counts_a.get(k, 0) for k in keys], dtype=float)
    b = np.array([counts_b.get(k, 0) for k in keys], dtype=float)
    na, nb = a.sum(), b.sum()
    merged = []
    acc_a = acc_b = 0.0
    for va, vb in zip(a, b):
        acc_a += va
        acc_b += vb
        expected = (acc_a + acc_b) * min(na, nb) / (na + nb)
        if expected >= 5.0:
            merged.append((acc_a, acc_b))
            acc_a = acc_b = 0.0
    if acc_a or acc_b:
        if merged:
            la, lb = merged[-1]
            merged[-1] = (la + acc_a, lb + acc_b)
        else:
            merged.append((acc_a, acc_b))
    stat = 0.0
    for va, vb in merged:
        pooled = (va + vb) / (na + nb)
        ea, eb = pooled * na, pooled * nb
        if ea > 0:
            stat += (va - ea) ** 2 / ea
        if eb > 0:
            stat += (vb - eb) ** 2 / eb
    df = max(len(merged) - 1, 1)
    return float(chi2.sf(stat, df))


# --------------------------------------------------- randomized instances


def dyadic(rng: np.random.Generator, hi: int = 32) -> float:
    """A random multiple of 1/8 in [0, hi/8); exactly representable."""
    return float(rng.integers(0, hi)) / 8.0


def _state_term(value: float, x) -> str:
    tests = ", ".join(f"x{i + 1} = {v}" for i, v in enumerate(x))
    return f"{value!r} * ind({tests})"


def table_to_expression(table: dict) -> str:
    terms = [_state_term(v, x) for x, v in sorted(table.items()) if v != 0.0]
    return " + ".join(terms) if terms else "0"


def random_table_instance(rng: np.random.Generator, c1: int, c2: int):
    """A 2-node spec with arbitrary dyadic rate tables (boundary respecting).

    Returns (spec, {link: {state: rate}}). The raw tables feed exactness
    oracles without a round trip through the expression evaluator.
    """
    links = linear_links(2)
    states = [(i, j) for i in range(c1 + 1) for j in range(c2 + 1)]
    caps = (c1, c2)
    tables = {}
    for link in links:
        table = {}
        for x in states:
            i, j = link
            y = list(x)
            if i > 0:
                y[i - 1] -= 1
            if j > 0:
                y[j - 1] += 1
            inside = all(0 <= v <= c for v, c in zip(y, caps))
            table[x] = dyadic(rng) if inside else 0.0
        tables[link] = table
    doc = {
        "n": 2,
        "space": {"box": [c1, c2]},
        "rates": {
            f"{i}->{j}": table_to_expression(tables[(i, j)]) for (i, j) in links
        },
    }
    return parse_model(doc), tables


def _running_max(values):
    out = []
    best = 0.0
    for v in values:
        best = max(best, v)
        out.append(best)
    return out


def _coord_expr(coord: int, table) -> str:
    terms = [
        f"{table[k]!r} * ind(x{coord} = {k})" for k in range(len(table)) if table[k] != 0.0
    ]
    return " + ".join(terms) if terms else "0"


def random_certified_pair(rng: np.random.Generator, c1: int, c2: int):
    """Two specs on one box built so the flow conditions hold by construction.

    Rates are separable in the moved coordinate. The arrival profile of A
    is dominated above every state B could sit at with a smaller first
    coordinate, and each service profile of B dominates the running
    maximum of A's, which is exactly what the per-link implications ask
    for once the box-edge indicators are taken into account.
    """
    arr_a = [dyadic(rng) for _ in range(c1)] + [0.0]
    # condition k=0 needs rate_A at x1=u below rate_B at x1=v for all u >= v
    suffix_max = [max(arr_a[v:]) for v in range(c1)] + [0.0]
    arr_b = [m + dyadic(rng) for m in suffix_max[:-1]] + [0.0]
    svc1_a = [0.0] + [dyadic(rng) for _ in range(c1)]
    svc1_b = [0.0] + [
        m + dyadic(rng) for m in _running_max(svc1_a[1:])
    ]
    svc2_a = [0.0] + [dyadic(rng) for _ in range(c2)]
    svc2_b = [0.0] + [
        m + dyadic(rng) for m in _running_max(svc2_a[1:])
    ]

    def doc(arr, svc1, svc2):
        return {
            "n": 2,
            "space": {"box": [c1, c2]},
            "rates": {
                "0->1": _coord_expr(1, arr),
                "1->2": f"({_coord_expr(1, svc1)}) * ind(x2 < {c2})",
                "2->0": _coord_expr(2, svc2),
            },
        }

    spec_a = parse_model(doc(arr_a, svc1_a, svc2_a))
    spec_b = parse_model(doc(arr_b, svc1_b, svc2_b))
    return spec_a, spec_b


def poisson_tail_bound(q: float, k: int) -> float:
    """Crude upper bound on P(Poisson(q) > k) for truncation sanity checks."""
    term = math.exp(-q)
    total = 0.0
    for i in range(k + 1):
        total += term
        term *= q / (i + 1)
    return max(0.0, 1.0 - total)
