"""Network model documents and their in-memory form.

A model describes a Markov population process on a finite set of states:
jobs move along directed links (i, j) over nodes 1..n, with node 0 standing
for the outside world. A move along (i, j) takes the state from x to
x - e_i + e_j and occurs at a state-dependent rate given by a rate
expression. Rates whose target would leave the state space must be zero;
by default that is enforced as a load error, and the `clamp` flag instead
multiplies every rate by the in-space indicator of its target.

Documents are JSON objects:

    {
      "n": 2,
      "space": {"box": [2, 2], "exclude": [[2, 2]]},   # or {"list": [[..], ..]}
      "links": [[0, 1], [1, 2], [2, 0]],               # optional, default linear
      "params": {"beta": 1.0, "s1": 2, "s2": 2},
      "rates": {"0->1": "beta * ind(x1 < s1)", ...},
      "clamp": false
    }

States are enumerated in lexicographic order, which fixes the index map
used by every solver and report in the package.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import re
from dataclasses import dataclass, field

import numpy as np

from .expr import ExpressionError, RateExpr, evaluate, parse_expression

__all__ = [
    "Link",
    "State",
    "ModelError",
    "NetworkSpec",
    "ValidationIssue",
    "ValidationReport",
    "linear_links",
    "is_linear_family",
    "parse_model",
    "load_model",
    "serialize_model",
    "model_digest",
    "enumerate_states",
    "eval_rate",
    "validate_spec",
]

Link = tuple[int, int]
State = tuple[int, ...]


class ModelError(ValueError):
    """Malformed model document or invalid specification."""


@dataclass(frozen=True)
class ValidationIssue:
    state: State
    link: Link
    rate: float


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...]

    @property
    def valid(self) -> bool:
        return not self.issues


def linear_links(n: int) -> tuple[Link, ...]:
    """The open linear link family 0 -> 1 -> ... -> n -> 0."""
    if n < 1:
        raise ModelError("a network needs at least one node")
    return tuple((i, i + 1) for i in range(n)) + ((n, 0),)


@dataclass(eq=True)
class NetworkSpec:
    """Immutable description of one population process.

    Treat instances as frozen after construction; the rate tables and the
    state index are cached on first use.
    """

    n: int
    links: tuple[Link, ...]
    states: tuple[State, ...]
    rates: dict[Link, RateExpr]
    params: dict[str, float]
    clamp: bool = False
    _index: dict | None = field(default=None, init=False, repr=False, compare=False)
    _tables: dict | None = field(default=None, init=False, repr=False, compare=False)
    _vectors: dict | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def state_index(self) -> dict[State, int]:
        if self._index is None:
            self._index = {x: i for i, x in enumerate(self.states)}
        return self._index

    def index_of(self, x: State) -> int:
        try:
            return self.state_index[tuple(x)]
        except KeyError:
            raise ModelError(f"state {tuple(x)} not in the state space") from None

    def target(self, x: State, link: Link) -> State:
        i, j = link
        y = list(x)
        if i > 0:
            y[i - 1] -= 1
        if j > 0:
            y[j - 1] += 1
        return tuple(y)

    def rate_table(self, link: Link) -> dict[State, float]:
        """Effective rate of `link` at every state, clamp applied."""
        if self._tables is None:
            self._tables = {}
        table = self._tables.get(link)
        if table is None:
            expr = self.rates[link]
            index = self.state_index
            table = {}
            for x in self.states:
                r = evaluate(expr.root, x, self.params)
                if self.clamp and self.target(x, link) not in index:
                    r = 0.0
                table[x] = r
            self._tables[link] = table
        return table

    def rate_vector(self, link: Link) -> np.ndarray:
        """Effective rates of `link` aligned with the state enumeration."""
        if self._vectors is None:
            self._vectors = {}
        vec = self._vectors.get(link)
        if vec is None:
            table = self.rate_table(link)
            vec = np.array([table[x] for x in self.states], dtype=float)
            self._vectors[link] = vec
        return vec

    def link_rate(self, link: Link, x: State) -> float:
        return self.rate_table(link)[tuple(x)]


def is_linear_family(spec: NetworkSpec) -> bool:
    return spec.links == linear_links(spec.n)


def enumerate_states(spec: NetworkSpec) -> tuple[State, ...]:
    """All states in lexicographic order; the position is the solver index."""
    return spec.states


def eval_rate(expr: RateExpr, x, params) -> float:
    """Evaluate a compiled rate expression. Pure, total and side-effect free."""
    return evaluate(expr.root, tuple(x), params)


def _parse_space(space, n: int) -> tuple[State, ...]:
    if not isinstance(space, dict):
        raise ModelError("space must be an object with 'box' or 'list'")
    keys = set(space)
    if "box" in keys:
        if not keys <= {"box", "exclude"}:
            raise ModelError(f"unknown space keys {sorted(keys - {'box', 'exclude'})}")
        caps = space["box"]
        if len(caps) != n or any(int(c) != c or c < 0 for c in caps):
            raise ModelError("box needs one nonnegative capacity per node")
        caps = [int(c) for c in caps]
        excluded = set()
        for raw in space.get("exclude", []):
            x = tuple(int(v) for v in raw)
            if len(x) != n:
                raise ModelError(f"excluded state {x} has wrong dimension")
            if any(v < 0 or v > c for v, c in zip(x, caps)):
                raise ModelError(f"excluded state {x} lies outside the box")
            excluded.add(x)
        states = [
            x
            for x in itertools.product(*(range(c + 1) for c in caps))
            if x not in excluded
        ]
    elif "list" in keys:
        if keys != {"list"}:
            raise ModelError(f"unknown space keys {sorted(keys - {'list'})}")
        states = []
        seen = set()
        for raw in space["list"]:
            x = tuple(int(v) for v in raw)
            if len(x) != n:
                raise ModelError(f"state {x} has wrong dimension")
            if any(v < 0 for v in x):
                raise ModelError(f"state {x} has a negative coordinate")
            if x in seen:
                raise ModelError(f"duplicate state {x}")
            seen.add(x)
            states.append(x)
    else:
        raise ModelError("space must contain 'box' or 'list'")
    if not states:
        raise ModelError("empty state space")
    return tuple(sorted(states))


def _parse_link_key(key: str) -> Link:
    parts = key.split("->")
    if len(parts) != 2:
        raise ModelError(f"rate key {key!r} must look like 'i->j'")
    try:
        return (int(parts[0]), int(parts[1]))
    except ValueError:
        raise ModelError(f"rate key {key!r} must use integer endpoints") from None


def parse_model(document) -> NetworkSpec:
    """Build a NetworkSpec from a JSON document (text or parsed object).

    The whole document is validated here: schema, expression identifiers,
    nonnegativity of every rate on every state, and the requirement that
    rates vanish whenever their target leaves the state space (unless the
    clamp flag asks for automatic clamping).
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise ModelError(f"not valid JSON: {e}") from None
    if not isinstance(document, dict):
        raise ModelError("model document must be a JSON object")

    allowed = {"n", "space", "links", "params", "rates", "clamp"}
    unknown = set(document) - allowed
    if unknown:
        raise ModelError(f"unknown document keys {sorted(unknown)}")
    for key in ("n", "space", "rates"):
        if key not in document:
            raise ModelError(f"missing document key {key!r}")

    n = document["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ModelError("n must be a positive integer")

    states = _parse_space(document["space"], n)

    if "links" in document:
        links = []
        for raw in document["links"]:
            link = (int(raw[0]), int(raw[1]))
            if not (0 <= link[0] <= n and 0 <= link[1] <= n):
                raise ModelError(f"link {link} uses a node outside 0..{n}")
            if link[0] == link[1]:
                raise ModelError(f"link {link} must connect distinct endpoints")
            if link in links:
                raise ModelError(f"duplicate link {link}")
            links.append(link)
        links = tuple(links)
    else:
        links = linear_links(n)

    params = {}
    for name, value in document.get("params", {}).items():
        if not isinstance(name, str) or not name.isidentifier():
            raise ModelError(f"parameter name {name!r} is not an identifier")
        if name in ("min", "max", "ind"):
            raise ModelError(f"parameter name {name!r} is reserved")
        if re.fullmatch(r"x[1-9]\d*", name):
            raise ModelError(f"parameter name {name!r} shadows a coordinate")
        params[name] = float(value)

    clamp = bool(document.get("clamp", False))

    raw_rates = document["rates"]
    rate_links = set()
    rates: dict[Link, RateExpr] = {}
    for key, source in raw_rates.items():
        link = _parse_link_key(key)
        if link not in links:
            raise ModelError(f"rate given for undeclared link {link}")
        if link in rate_links:
            raise ModelError(f"duplicate rate for link {link}")
        rate_links.add(link)
        try:
            rates[link] = parse_expression(str(source), n, params)
        except ExpressionError as e:
            raise ModelError(f"rate for link {link[0]}->{link[1]}: {e}") from None
    missing = [l for l in links if l not in rate_links]
    if missing:
        raise ModelError(f"missing rate for link {missing[0]}")
    rates = {link: rates[link] for link in links}

    spec = NetworkSpec(
        n=n, links=links, states=states, rates=rates, params=params, clamp=clamp
    )

    index = spec.state_index
    for link in links:
        expr = rates[link]
        for x in states:
            r = evaluate(expr.root, x, params)
            if not np.isfinite(r):
                raise ModelError(
                    f"rate for link {link[0]}->{link[1]} is not finite at state {x}"
                )
            if r < 0:
                raise ModelError(
                    f"rate for link {link[0]}->{link[1]} is negative at state {x}: {r}"
                )
            if not clamp and r > 0 and spec.target(x, link) not in index:
                raise ModelError(
                    f"rate for link {link[0]}->{link[1]} is positive at state {x} "
                    f"but the move leaves the state space; set clamp to allow this"
                )
    return spec


def load_model(path) -> NetworkSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())


def serialize_model(spec: NetworkSpec) -> dict:
    """Canonical document form; parsing it back yields an equal NetworkSpec."""
    return {
        "n": spec.n,
        "space": {"list": [list(x) for x in spec.states]},
        "links": [list(link) for link in spec.links],
        "params": {k: spec.params[k] for k in sorted(spec.params)},
        "rates": {f"{i}->{j}": spec.rates[(i, j)].source for (i, j) in spec.links},
        "clamp": spec.clamp,
    }


def model_digest(spec: NetworkSpec) -> str:
    """Stable content hash used in report headers."""
    text = json.dumps(serialize_model(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def validate_spec(spec: NetworkSpec) -> ValidationReport:
    """List every (state, link) whose effective rate escapes the state space."""
    issues = []
    index = spec.state_index
    for link in spec.links:
        table = spec.rate_table(link)
        for x in spec.states:
            r = table[x]
            if r > 0 and spec.target(x, link) not in index:
                issues.append(ValidationIssue(state=x, link=link, rate=r))
    return ValidationReport(issues=tuple(issues))
