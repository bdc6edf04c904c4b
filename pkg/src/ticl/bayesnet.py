"""Discrete Bayesian networks: representation, BIF/JSON I/O, interventions,
ancestral sampling and CPT estimation.

CPTs are dense arrays of shape ``(n_parent_configs, cardinality)``. Parent
configurations are indexed in mixed radix over the node's parent tuple with the
last parent varying fastest (C order, as :func:`numpy.ravel_multi_index`).
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-9
REPAIR_TOL = 1e-6
PROB_FLOOR = 1e-12
DEFAULT_DIRICHLET_RANGE = (0.2, 1.0)
REGIME_COLUMN = "__regime"
NETWORK_DIR = Path(__file__).parent / "networks"


class BIFParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class NetworkValidationError(ValueError):
    pass


def topological_order(parents: Sequence[Sequence[int]]) -> list[int]:
    """Kahn's algorithm with lowest-index-first tie break; raises on cycles."""
    n = len(parents)
    indeg = [len(set(p)) for p in parents]
    children: list[list[int]] = [[] for _ in range(n)]
    for v, ps in enumerate(parents):
        for p in set(ps):
            children[p].append(v)
    ready = sorted(v for v in range(n) if indeg[v] == 0)
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
        ready.sort()
    if len(order) != n:
        raise NetworkValidationError("graph contains a directed cycle")
    return order


def parents_from_adjacency(adj: np.ndarray) -> tuple[tuple[int, ...], ...]:
    adj = np.asarray(adj, dtype=bool)
    return tuple(tuple(int(p) for p in np.flatnonzero(adj[:, v])) for v in range(adj.shape[0]))


def adjacency_from_parents(parents: Sequence[Sequence[int]]) -> np.ndarray:
    n = len(parents)
    adj = np.zeros((n, n), dtype=bool)
    for v, ps in enumerate(parents):
        for p in ps:
            adj[p, v] = True
    return adj


@dataclass(frozen=True)
class DiscreteBayesNet:
    """A DAG with one categorical CPT per node."""

    nodes: tuple[str, ...]
    cardinalities: tuple[int, ...]
    parents: tuple[tuple[int, ...], ...]
    cpts: tuple[np.ndarray, ...]
    states: tuple[tuple[str, ...], ...] | None = None

    def __post_init__(self):
        d = len(self.nodes)
        if not (len(self.cardinalities) == len(self.parents) == len(self.cpts) == d):
            raise NetworkValidationError("nodes, cardinalities, parents and cpts differ in length")
        if len(set(self.nodes)) != d:
            raise NetworkValidationError("duplicate node names")
        for v in range(d):
            if self.cardinalities[v] < 2:
                raise NetworkValidationError(f"node {self.nodes[v]!r} has cardinality < 2")
            for p in self.parents[v]:
                if not 0 <= p < d or p == v:
                    raise NetworkValidationError(f"bad parent index {p} for node {self.nodes[v]!r}")
            table = self.cpts[v]
            rows = int(np.prod([self.cardinalities[p] for p in self.parents[v]], dtype=np.int64))
            if table.shape != (rows, self.cardinalities[v]):
                raise NetworkValidationError(
                    f"CPT of {self.nodes[v]!r} has shape {table.shape}, expected {(rows, self.cardinalities[v])}"
                )
            if np.any(table < 0) or np.any(table > 1):
                raise NetworkValidationError(f"CPT of {self.nodes[v]!r} has entries outside [0, 1]")
            if np.any(np.abs(table.sum(axis=1) - 1.0) > NORMALIZATION_TOL):
                raise NetworkValidationError(f"CPT rows of {self.nodes[v]!r} do not sum to 1")
            table.setflags(write=False)
        topological_order(self.parents)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return sum(len(p) for p in self.parents)

    @property
    def dag(self) -> np.ndarray:
        return adjacency_from_parents(self.parents)

    def index(self, name: str) -> int:
        return self.nodes.index(name)

    def topological_order(self) -> list[int]:
        return topological_order(self.parents)

    def replace(self, **changes) -> "DiscreteBayesNet":
        fields = dict(nodes=self.nodes, cardinalities=self.cardinalities, parents=self.parents,
                      cpts=self.cpts, states=self.states)
        fields.update(changes)
        return DiscreteBayesNet(**fields)


def reorder(net: DiscreteBayesNet, order: Sequence[int]) -> DiscreteBayesNet:
    """Relabel nodes so that new node ``k`` is old node ``order[k]``."""
    pos = {old: new for new, old in enumerate(order)}
    parents = tuple(tuple(pos[p] for p in net.parents[old]) for old in order)
    return DiscreteBayesNet(
        nodes=tuple(net.nodes[o] for o in order),
        cardinalities=tuple(net.cardinalities[o] for o in order),
        parents=parents,
        cpts=tuple(net.cpts[o] for o in order),
        states=None if net.states is None else tuple(net.states[o] for o in order),
    )


@dataclass(frozen=True)
class InterventionSpec:
    targets: frozenset[int] = frozenset()
    kind: str = "soft"
    soft_params: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", frozenset(int(t) for t in self.targets))
        if self.kind not in ("hard", "soft"):
            raise ValueError(f"unknown intervention kind {self.kind!r}")
        if self.kind == "hard" and self.soft_params is not None:
            raise ValueError("hard interventions carry no soft_params")


@dataclass(frozen=True)
class InterventionFamily:
    regimes: tuple[InterventionSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "regimes", tuple(self.regimes))
        if not self.regimes or self.regimes[0].targets:
            raise ValueError("regime 0 must be observational (empty target set)")
        for r in self.regimes[1:]:
            if not r.targets:
                raise ValueError("interventional regimes need a nonempty target set")

    @classmethod
    def from_targets(cls, targets: Iterable[Iterable[int]], kind: str = "soft") -> "InterventionFamily":
        """Build ``{∅, I_1, ..., I_K}`` from the interventional target sets."""
        specs = [InterventionSpec(frozenset(), kind="soft")]
        specs += [InterventionSpec(frozenset(t), kind=kind) for t in targets]
        return cls(tuple(specs))

    @property
    def k(self) -> int:
        return len(self.regimes) - 1

    @property
    def target_sets(self) -> list[frozenset[int]]:
        return [r.targets for r in self.regimes[1:]]


@dataclass(frozen=True)
class DataTable:
    """N x d matrix of category codes; ``regime_id`` optionally tags each row."""

    columns: tuple[str, ...]
    values: np.ndarray
    cardinalities: tuple[int, ...]
    regime_id: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "cardinalities", tuple(int(c) for c in self.cardinalities))
        values = np.asarray(self.values)
        if values.ndim != 2 or values.shape[1] != len(self.columns):
            raise ValueError("values must be an N x d matrix matching columns")
        if values.shape[0] < 1:
            raise ValueError("a data table needs at least one row")
        if len(self.cardinalities) != len(self.columns):
            raise ValueError("cardinalities must match columns")
        values = values.astype(np.int32, copy=False)
        if np.any(values < 0) or np.any(values >= np.asarray(self.cardinalities)):
            raise ValueError("category code outside its column's cardinality")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.regime_id is not None:
            rid = np.asarray(self.regime_id, dtype=np.int32)
            if rid.shape != (values.shape[0],):
                raise ValueError("regime_id must have one entry per row")
            rid.setflags(write=False)
            object.__setattr__(self, "regime_id", rid)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]


# ---------------------------------------------------------------------------
# BIF


_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<comment>//[^\n]*|/\*.*?\*/)|(?P<punct>[{}()\[\];,|])"
    r"|(?P<word>[^\s{}()\[\];,|]+)",
    re.S,
)


def _tokenize(text: str) -> list[tuple[str, int, int]]:
    tokens = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # pragma: no cover - the word class matches anything else
            raise BIFParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind in ("punct", "word"):
            tokens.append((m.group(), line, pos - line_start + 1))
        chunk = m.group()
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    return tokens


class _BIFParser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.eof = (len(text.splitlines()) + 1, 1)

    def peek(self) -> str | None:
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def error(self, message: str) -> BIFParseError:
        line, col = self.tokens[self.i][1:] if self.i < len(self.tokens) else self.eof
        return BIFParseError(message, line, col)

    def next(self) -> str:
        if self.i >= len(self.tokens):
            raise self.error("unexpected end of input")
        tok = self.tokens[self.i][0]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        tok = self.peek()
        if tok != value:
            raise self.error(f"expected {value!r}, found {tok!r}")
        self.i += 1

    def skip_block(self) -> None:
        self.expect("{")
        depth = 1
        while depth:
            tok = self.next()
            depth += tok == "{"
            depth -= tok == "}"

    def number(self) -> float:
        tok = self.peek()
        try:
            value = float(tok)
        except (TypeError, ValueError):
            raise self.error(f"expected a number, found {tok!r}") from None
        self.i += 1
        return value

    def name_list(self, close: str) -> list[str]:
        names = []
        while True:
            tok = self.next()
            if tok in "{}()[];|":
                self.i -= 1
                raise self.error(f"expected a name, found {tok!r}")
            names.append(tok)
            sep = self.next()
            if sep == close:
                return names
            if sep != ",":
                self.i -= 1
                raise self.error(f"expected ',' or {close!r}")


def parse_bif(text: str) -> DiscreteBayesNet:
    """Parse the discrete subset of the BIF format.

    Supports ``network``, ``variable`` (``type discrete``) and ``probability``
    blocks with either ``table`` entries or per-configuration rows. For a
    ``table`` under parents, parent configurations follow the network's row
    order (last parent fastest) and each contributes one distribution.
    Rows off by at most 1e-6 are renormalized; worse rows are rejected.
    """
    p = _BIFParser(text)
    variables: dict[str, list[str]] = {}
    var_pos: dict[str, tuple[int, int]] = {}
    prob_blocks = []
    while p.peek() is not None:
        kw = p.next()
        if kw == "network":
            while p.peek() != "{":
                p.next()
            p.skip_block()
        elif kw == "variable":
            name = p.next()
            var_pos[name] = p.tokens[p.i - 1][1:]
            if name in variables:
                raise p.error(f"duplicate variable {name!r}")
            p.expect("{")
            states = None
            while p.peek() != "}":
                tok = p.next()
                if tok == "type":
                    if p.next() != "discrete":
                        p.i -= 1
                        raise p.error("only discrete variables are supported")
                    p.expect("[")
                    count = int(p.number())
                    p.expect("]")
                    p.expect("{")
                    states = p.name_list("}")
                    p.expect(";")
                    if len(states) != count:
                        raise p.error(f"variable {name!r} declares {count} states but lists {len(states)}")
                else:  # property lines
                    while p.next() != ";":
                        pass
            p.expect("}")
            if states is None:
                raise p.error(f"variable {name!r} has no type declaration")
            variables[name] = states
        elif kw == "probability":
            where = p.tokens[p.i - 1][1:]
            p.expect("(")
            child = p.next()
            parents: list[str] = []
            tok = p.next()
            if tok == "|":
                parents = p.name_list(")")
            elif tok != ")":
                p.i -= 1
                raise p.error("expected '|' or ')'")
            p.expect("{")
            table = None
            rows = []
            while p.peek() != "}":
                tok = p.peek()
                if tok == "table":
                    p.next()
                    table = [p.number()]
                    while p.peek() == ",":
                        p.next()
                        table.append(p.number())
                    p.expect(";")
                elif tok == "(":
                    p.next()
                    config = p.name_list(")")
                    probs = [p.number()]
                    while p.peek() == ",":
                        p.next()
                        probs.append(p.number())
                    p.expect(";")
                    rows.append((config, probs))
                elif tok == "default":
                    raise p.error("'default' entries are not supported")
                else:
                    while p.next() != ";":
                        pass
            p.expect("}")
            prob_blocks.append((child, parents, table, rows, where))
        else:
            p.i -= 1
            raise p.error(f"unexpected keyword {kw!r}")

    names = list(variables)
    index = {n: i for i, n in enumerate(names)}
    cards = [len(variables[n]) for n in names]
    parent_sets: list[tuple[int, ...] | None] = [None] * len(names)
    cpts: list[np.ndarray | None] = [None] * len(names)
    for child, parents, table, rows, (line, col) in prob_blocks:
        for n in [child, *parents]:
            if n not in index:
                raise BIFParseError(f"unknown variable {n!r}", line, col)
        v = index[child]
        if cpts[v] is not None:
            raise BIFParseError(f"duplicate probability block for {child!r}", line, col)
        pidx = tuple(index[n] for n in parents)
        pcards = [cards[q] for q in pidx]
        n_rows = int(np.prod(pcards, dtype=np.int64))
        cpt = np.full((n_rows, cards[v]), np.nan)
        if table is not None:
            if len(table) != n_rows * cards[v]:
                raise BIFParseError(f"table for {child!r} has {len(table)} entries, expected "
                                    f"{n_rows * cards[v]}", line, col)
            cpt[:] = np.asarray(table).reshape(n_rows, cards[v])
        for config, probs in rows:
            if len(config) != len(pidx):
                raise BIFParseError(f"bad parent configuration {config} for {child!r}", line, col)
            try:
                coords = [variables[parents[k]].index(s) for k, s in enumerate(config)]
            except ValueError:
                raise BIFParseError(f"unknown state in configuration {config} for {child!r}", line, col) from None
            if len(probs) != cards[v]:
                raise BIFParseError(f"row {config} of {child!r} has {len(probs)} entries", line, col)
            r = int(np.ravel_multi_index(coords, pcards)) if pidx else 0
            cpt[r] = probs
        if np.isnan(cpt).any():
            raise BIFParseError(f"probability block for {child!r} does not cover every configuration", line, col)
        cpts[v] = _repair_rows(cpt, child)
        parent_sets[v] = pidx
    for v, n in enumerate(names):
        if cpts[v] is None:
            line, col = var_pos[n]
            raise BIFParseError(f"variable {n!r} has no probability block", line, col)
    return DiscreteBayesNet(
        nodes=tuple(names),
        cardinalities=tuple(cards),
        parents=tuple(parent_sets),  # type: ignore[arg-type]
        cpts=tuple(cpts),  # type: ignore[arg-type]
        states=tuple(tuple(variables[n]) for n in names),
    )


def _repair_rows(cpt: np.ndarray, name: str) -> np.ndarray:
    if np.any(cpt < 0) or np.any(cpt > 1):
        raise NetworkValidationError(f"CPT of {name!r} has entries outside [0, 1]")
    sums = cpt.sum(axis=1)
    off = np.abs(sums - 1.0)
    if np.any(off > REPAIR_TOL):
        bad = int(np.argmax(off))
        raise NetworkValidationError(f"CPT row {bad} of {name!r} sums to {sums[bad]:.9g}")
    if np.any(off > NORMALIZATION_TOL):
        log.info("renormalised CPT rows of %r (max deviation %.2g)", name, off.max())
    if np.any(off > 0):
        cpt = cpt / sums[:, None]
    return cpt


def load_network(name_or_path: str | Path) -> DiscreteBayesNet:
    """Load a bundled network by name (``"asia"``) or any BIF/JSON file path."""
    path = Path(name_or_path)
    if not path.exists():
        candidate = NETWORK_DIR / f"{str(name_or_path).lower()}.bif"
        if not candidate.exists():
            raise FileNotFoundError(name_or_path)
        path = candidate
    text = path.read_text()
    if path.suffix == ".json":
        return network_from_json(text)
    return parse_bif(text)


def bundled_networks() -> list[str]:
    return sorted(p.stem for p in NETWORK_DIR.glob("*.bif"))


def _state_names(net: DiscreteBayesNet, v: int) -> tuple[str, ...]:
    if net.states is not None:
        return net.states[v]
    return tuple(f"s{k}" for k in range(net.cardinalities[v]))


def to_bif(net: DiscreteBayesNet) -> str:
    def fmt(row):
        return ", ".join(repr(float(x)) for x in row)

    out = ["network unknown {", "}"]
    for v, name in enumerate(net.nodes):
        states = _state_names(net, v)
        out += [f"variable {name} {{",
                f"  type discrete [ {len(states)} ] {{ {', '.join(states)} }};", "}"]
    for v, name in enumerate(net.nodes):
        ps = net.parents[v]
        if not ps:
            out += [f"probability ( {name} ) {{", f"  table {fmt(net.cpts[v][0])};", "}"]
            continue
        out.append(f"probability ( {name} | {', '.join(net.nodes[p] for p in ps)} ) {{")
        pcards = [net.cardinalities[p] for p in ps]
        for r, coords in enumerate(np.ndindex(*pcards)):
            labels = ", ".join(_state_names(net, p)[c] for p, c in zip(ps, coords))
            out.append(f"  ({labels}) {fmt(net.cpts[v][r])};")
        out.append("}")
    return "\n".join(out) + "\n"


def network_to_json(net: DiscreteBayesNet) -> str:
    doc = {
        "format": "ticl-bn/1",
        "nodes": [
            {
                "name": name,
                "states": list(_state_names(net, v)),
                "parents": [net.nodes[p] for p in net.parents[v]],
                "cpt": net.cpts[v].tolist(),
            }
            for v, name in enumerate(net.nodes)
        ],
    }
    return json.dumps(doc, indent=1)


def network_from_json(text: str) -> DiscreteBayesNet:
    doc = json.loads(text)
    entries = doc["nodes"]
    index = {e["name"]: i for i, e in enumerate(entries)}
    return DiscreteBayesNet(
        nodes=tuple(e["name"] for e in entries),
        cardinalities=tuple(len(e["states"]) for e in entries),
        parents=tuple(tuple(index[p] for p in e["parents"]) for e in entries),
        cpts=tuple(np.asarray(e["cpt"], dtype=float) for e in entries),
        states=tuple(tuple(e["states"]) for e in entries),
    )


# ---------------------------------------------------------------------------
# interventions, sampling, estimation


def apply_intervention(net: DiscreteBayesNet, spec: InterventionSpec,
                       rng: np.random.Generator) -> DiscreteBayesNet:
    """Replace the mechanisms of ``spec.targets`` with Dirichlet-drawn CPTs.

    One concentration ``alpha ~ U[low, high]`` is drawn per target; hard
    interventions also drop every incoming edge of the target.
    """
    for t in spec.targets:
        if not 0 <= t < net.n_nodes:
            raise ValueError(f"unknown intervention target {t}")
    if not spec.targets:
        return net
    low, high = spec.soft_params or DEFAULT_DIRICHLET_RANGE
    parents = list(net.parents)
    cpts = list(net.cpts)
    for t in sorted(spec.targets):
        alpha = rng.uniform(low, high)
        card = net.cardinalities[t]
        if spec.kind == "hard":
            parents[t] = ()
            rows = 1
        else:
            rows = cpts[t].shape[0]
        cpts[t] = _dirichlet_rows(rng, np.full(card, alpha), rows)
    return net.replace(parents=tuple(parents), cpts=tuple(cpts))


def _dirichlet_rows(rng: np.random.Generator, alpha: np.ndarray, rows: int) -> np.ndarray:
    draw = rng.dirichlet(alpha, size=rows)
    # tiny concentrations can underflow every gamma draw of a row to zero
    bad = ~np.isfinite(draw).all(axis=1) | (draw.sum(axis=1) <= 0)
    if bad.any():
        draw[bad] = np.eye(len(alpha))[rng.integers(len(alpha), size=int(bad.sum()))]
    return draw / draw.sum(axis=1, keepdims=True)


def config_index(values: np.ndarray, cols: Sequence[int], cards: Sequence[int]) -> np.ndarray:
    """Mixed-radix index of the joint configuration of ``cols`` for each row."""
    idx = np.zeros(values.shape[0], dtype=np.int64)
    for c in cols:
        idx *= cards[c]
        idx += values[:, c]
    return idx


def forward_sample(net: DiscreteBayesNet, n: int, rng: np.random.Generator,
                   regime: int | None = None, clamp: dict[int, np.ndarray] | None = None) -> DataTable:
    """Ancestral sampling; ``clamp`` supplies fixed values for root columns."""
    if n < 1:
        raise ValueError("n must be >= 1")
    d = net.n_nodes
    out = np.zeros((n, d), dtype=np.int32)
    clamp = clamp or {}
    for v, values in clamp.items():
        if net.parents[v]:
            raise ValueError(f"only root nodes can be clamped, {net.nodes[v]!r} has parents")
        out[:, v] = values
    for v in net.topological_order():
        if v in clamp:
            continue
        cfg = config_index(out, net.parents[v], net.cardinalities)
        cdf = np.cumsum(net.cpts[v], axis=1)
        cdf[:, -1] = 1.0
        u = rng.random(n)
        out[:, v] = (u[:, None] >= cdf[cfg]).sum(axis=1)
    np.minimum(out, np.asarray(net.cardinalities) - 1, out=out)
    rid = None if regime is None else np.full(n, regime, dtype=np.int32)
    return DataTable(net.nodes, out, net.cardinalities, rid)


def family_counts(values: np.ndarray, cards: Sequence[int], v: int,
                  parents: Sequence[int]) -> np.ndarray:
    """Counts table of shape ``(n_parent_configs, cards[v])``."""
    n_cfg = int(np.prod([cards[p] for p in parents], dtype=np.int64))
    idx = config_index(values, parents, cards) * cards[v] + values[:, v]
    return np.bincount(idx, minlength=n_cfg * cards[v]).reshape(n_cfg, cards[v]).astype(float)


def mle_row(counts: np.ndarray, pseudocount: float) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    total = counts.sum(axis=-1, keepdims=True)
    card = counts.shape[-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        rows = (counts + pseudocount) / (total + pseudocount * card)
    empty = (total[..., 0] + pseudocount * card) <= 0
    rows[empty] = 1.0 / card
    return rows


def mle_cpts(dag: np.ndarray | Sequence[Sequence[int]], data: DataTable,
             pseudocount: float = 1.0) -> tuple[np.ndarray, ...]:
    """Smoothed maximum-likelihood CPTs for every node of ``dag``.

    ``dag`` is an adjacency matrix or a parent list over the table's columns.
    Rows without observations (and zero pseudocount) fall back to uniform.
    """
    parents = parents_from_adjacency(dag) if isinstance(dag, np.ndarray) else dag
    return tuple(
        mle_row(family_counts(data.values, data.cardinalities, v, parents[v]), pseudocount)
        for v in range(len(parents))
    )


def fit_network(dag: np.ndarray, data: DataTable, pseudocount: float = 1.0) -> DiscreteBayesNet:
    parents = parents_from_adjacency(dag)
    return DiscreteBayesNet(tuple(data.columns), tuple(data.cardinalities), parents,
                            mle_cpts(parents, data, pseudocount))


def log_likelihood(net: DiscreteBayesNet, data: DataTable) -> float:
    cols = [data.columns.index(n) for n in net.nodes]
    values = data.values[:, cols]
    total = 0.0
    for v in range(net.n_nodes):
        cfg = config_index(values, net.parents[v], net.cardinalities)
        probs = net.cpts[v][cfg, values[:, v]]
        total += float(np.log(np.maximum(probs, PROB_FLOOR)).sum())
    return total


# ---------------------------------------------------------------------------
# CSV tables


def write_table_csv(table: DataTable, path: str | Path) -> None:
    header = list(table.columns)
    body = table.values
    if table.regime_id is not None:
        header.append(REGIME_COLUMN)
        body = np.column_stack([body, table.regime_id])
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerow(header)
        np.savetxt(fh, body, fmt="%d", delimiter=",")


def read_table_csv(path: str | Path, cardinalities: Sequence[int] | None = None) -> DataTable:
    """Read integer-coded CSV; cardinalities default to ``max code + 1``."""
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
        rows = np.loadtxt(fh, dtype=np.int32, delimiter=",", ndmin=2)
    rid = None
    if REGIME_COLUMN in header:
        k = header.index(REGIME_COLUMN)
        rid = rows[:, k]
        rows = np.delete(rows, k, axis=1)
        header = header[:k] + header[k + 1:]
    if cardinalities is None:
        cardinalities = [max(2, int(rows[:, c].max()) + 1) for c in range(rows.shape[1])]
    return DataTable(tuple(header), rows, tuple(cardinalities), rid)
