"""Mixed-graph algebra for DAGs, PDAGs, CPDAGs and I-CPDAGs.

DAGs are boolean adjacency matrices with ``adj[i, j]`` meaning ``i -> j``.
Partially directed graphs are immutable :class:`PDAG` values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .bayesnet import InterventionFamily, topological_order
from .jci import augment_graph


class CycleError(ValueError):
    pass


class ExtensionError(ValueError):
    pass


@dataclass(frozen=True)
class PDAG:
    n: int
    directed: frozenset[tuple[int, int]] = frozenset()
    undirected: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        directed = frozenset((int(a), int(b)) for a, b in self.directed)
        undirected = frozenset((min(a, b), max(a, b)) for a, b in self.undirected)
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected)
        for a, b in directed | undirected:
            if a == b:
                raise ValueError("self-loops are not allowed")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge ({a}, {b}) outside {self.n} nodes")
        pairs = [(min(a, b), max(a, b)) for a, b in directed]
        if len(set(pairs)) != len(pairs):
            raise ValueError("an edge is directed both ways")
        if set(pairs) & undirected:
            raise ValueError("an edge is both directed and undirected")

    @cached_property
    def _nbrs(self) -> tuple[frozenset[int], ...]:
        nb: list[set[int]] = [set() for _ in range(self.n)]
        for a, b in self.directed | self.undirected:
            nb[a].add(b)
            nb[b].add(a)
        return tuple(frozenset(s) for s in nb)

    def neighbors(self, v: int) -> frozenset[int]:
        return self._nbrs[v]

    def adjacent(self, a: int, b: int) -> bool:
        return b in self._nbrs[a]

    def parents(self, v: int) -> set[int]:
        return {a for a, b in self.directed if b == v}

    def children(self, v: int) -> set[int]:
        return {b for a, b in self.directed if a == v}

    def undirected_neighbors(self, v: int) -> set[int]:
        return {b if a == v else a for a, b in self.undirected if v in (a, b)}

    def skeleton_pairs(self) -> frozenset[tuple[int, int]]:
        return frozenset((min(a, b), max(a, b)) for a, b in self.directed) | self.undirected

    def edge_type(self, a: int, b: int) -> str:
        """``'->'``, ``'<-'``, ``'--'`` or ``''`` for the pair ``(a, b)``."""
        if (a, b) in self.directed:
            return "->"
        if (b, a) in self.directed:
            return "<-"
        if (min(a, b), max(a, b)) in self.undirected:
            return "--"
        return ""

    def restrict(self, nodes: Sequence[int]) -> "PDAG":
        pos = {v: i for i, v in enumerate(nodes)}
        return PDAG(
            len(nodes),
            frozenset((pos[a], pos[b]) for a, b in self.directed if a in pos and b in pos),
            frozenset((pos[a], pos[b]) for a, b in self.undirected if a in pos and b in pos),
        )

    def to_matrix(self) -> np.ndarray:
        """Entries 0 none, 1 ``i -> j``, 2 undirected (stored symmetric)."""
        m = np.zeros((self.n, self.n), dtype=np.int8)
        for a, b in self.directed:
            m[a, b] = 1
        for a, b in self.undirected:
            m[a, b] = m[b, a] = 2
        return m

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "PDAG":
        m = np.asarray(m)
        n = m.shape[0]
        directed = {(int(a), int(b)) for a, b in zip(*np.nonzero(m == 1))}
        undirected = {(int(a), int(b)) for a, b in zip(*np.nonzero(m == 2)) if a < b}
        return cls(n, frozenset(directed), frozenset(undirected))

    @classmethod
    def from_dag(cls, adj: np.ndarray) -> "PDAG":
        adj = np.asarray(adj, dtype=bool)
        return cls(adj.shape[0], frozenset((int(a), int(b)) for a, b in zip(*np.nonzero(adj))))

    def directed_adjacency(self) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=bool)
        for a, b in self.directed:
            m[a, b] = True
        return m

    def to_edge_list(self, names: Sequence[str] | None = None) -> str:
        label = (lambda v: names[v]) if names is not None else str
        lines = [f"{label(a)} -> {label(b)}" for a, b in sorted(self.directed)]
        lines += [f"{label(a)} -- {label(b)}" for a, b in sorted(self.undirected)]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_edge_list(cls, text: str, names: Sequence[str] | None = None, n: int | None = None) -> "PDAG":
        index = (lambda s: names.index(s)) if names is not None else int
        directed, undirected = set(), set()
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            for op, bucket in (("->", directed), ("--", undirected)):
                if op in line:
                    a, b = (s.strip() for s in line.split(op))
                    bucket.add((index(a), index(b)))
                    break
            else:
                raise ValueError(f"cannot parse edge line {raw!r}")
        if n is None:
            n = len(names) if names is not None else 1 + max(
                [max(e) for e in directed | undirected], default=-1)
        return cls(n, frozenset(directed), frozenset(undirected))


def write_pdag_csv(g: PDAG, path: str | Path) -> None:
    np.savetxt(path, g.to_matrix(), fmt="%d", delimiter=",")


def read_pdag_csv(path: str | Path) -> PDAG:
    return PDAG.from_matrix(np.loadtxt(path, dtype=int, delimiter=",", ndmin=2))


# ---------------------------------------------------------------------------
# DAG queries


def is_acyclic(adj: np.ndarray) -> bool:
    try:
        topological_order([np.flatnonzero(adj[:, v]) for v in range(adj.shape[0])])
    except ValueError:
        return False
    return True


def skeleton_of(adj: np.ndarray) -> PDAG:
    adj = np.asarray(adj, dtype=bool)
    und = adj | adj.T
    return PDAG(adj.shape[0], undirected=frozenset(
        (int(a), int(b)) for a, b in zip(*np.nonzero(np.triu(und, 1)))))


def v_structures_of(adj: np.ndarray) -> set[tuple[int, int, int]]:
    """Triples ``(a, c, b)`` with ``a -> c <- b``, ``a < b`` and ``a, b`` non-adjacent."""
    adj = np.asarray(adj, dtype=bool)
    und = adj | adj.T
    out = set()
    for c in range(adj.shape[0]):
        pa = np.flatnonzero(adj[:, c])
        for a, b in itertools.combinations(pa, 2):
            if not und[a, b]:
                out.add((int(a), c, int(b)))
    return out


def unshielded_triples(g: PDAG) -> list[tuple[int, int, int]]:
    """All ``(a, c, b)`` with ``a - c - b`` adjacent, ``a < b`` non-adjacent."""
    out = []
    for c in range(g.n):
        for a, b in itertools.combinations(sorted(g.neighbors(c)), 2):
            if not g.adjacent(a, b):
                out.append((a, c, b))
    return out


def enumerate_dags(n: int):
    """Yield every labelled DAG on ``n`` nodes as a boolean adjacency matrix."""
    pairs = list(itertools.combinations(range(n), 2))
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        adj = np.zeros((n, n), dtype=bool)
        for (a, b), s in zip(pairs, states):
            if s == 1:
                adj[a, b] = True
            elif s == 2:
                adj[b, a] = True
        if is_acyclic(adj):
            yield adj


def _ancestors(adj: np.ndarray, nodes: Iterable[int]) -> set[int]:
    seen = set(nodes)
    stack = list(seen)
    while stack:
        v = stack.pop()
        for p in np.flatnonzero(adj[:, v]):
            if p not in seen:
                seen.add(int(p))
                stack.append(int(p))
    return seen


def descendants(adj: np.ndarray, v: int) -> set[int]:
    """Proper descendants of ``v``."""
    seen: set[int] = set()
    stack = [v]
    while stack:
        u = stack.pop()
        for c in np.flatnonzero(adj[u]):
            if c not in seen:
                seen.add(int(c))
                stack.append(int(c))
    return seen


def d_separated(adj: np.ndarray, x: int, y: int, cond: Iterable[int]) -> bool:
    """Moralized ancestral graph test of ``x _||_ y | cond``."""
    cond = set(cond)
    if x in cond or y in cond:
        raise ValueError("x and y must not be in the conditioning set")
    keep = sorted(_ancestors(adj, {x, y} | cond))
    sub = adj[np.ix_(keep, keep)]
    moral = sub | sub.T
    for c in range(len(keep)):
        pa = np.flatnonzero(sub[:, c])
        for a, b in itertools.combinations(pa, 2):
            moral[a, b] = moral[b, a] = True
    pos = {v: i for i, v in enumerate(keep)}
    blocked = {pos[c] for c in cond}
    target = pos[y]
    seen = {pos[x]}
    stack = [pos[x]]
    while stack:
        u = stack.pop()
        for w in np.flatnonzero(moral[u]):
            w = int(w)
            if w == target:
                return False
            if w not in seen and w not in blocked:
                seen.add(w)
                stack.append(w)
    return True


# ---------------------------------------------------------------------------
# Meek closure and equivalence-class representatives


def _has_directed_cycle(n: int, directed: Iterable[tuple[int, int]]) -> bool:
    parents: list[list[int]] = [[] for _ in range(n)]
    for a, b in directed:
        parents[b].append(a)
    try:
        topological_order(parents)
    except ValueError:
        return True
    return False


def meek_closure(g: PDAG, rng: np.random.Generator | None = None) -> PDAG:
    """Apply Meek rules R1-R3 to a fixed point.

    With ``rng`` the candidate edges are visited in random order, which must not
    change the result (used by the confluence tests).
    """
    if _has_directed_cycle(g.n, g.directed):
        raise CycleError("directed part of the input contains a cycle")
    n = g.n
    directed = set(g.directed)
    undirected = set(g.undirected)
    adjm = np.zeros((n, n), dtype=bool)
    for a, b in directed | undirected:
        adjm[a, b] = adjm[b, a] = True

    def is_dir(a, b):
        return (a, b) in directed

    def is_und(a, b):
        return (min(a, b), max(a, b)) in undirected

    def fires(x, y):
        # R1: a -> x - y, a and y non-adjacent
        for a in range(n):
            if is_dir(a, x) and not adjm[a, y] and a != y:
                return True
        # R2: x -> c -> y with x - y
        for c in range(n):
            if is_dir(x, c) and is_dir(c, y):
                return True
        # R3: x - c1 -> y, x - c2 -> y, c1 and c2 non-adjacent
        cs = [c for c in range(n) if is_und(x, c) and is_dir(c, y)]
        for c1, c2 in itertools.combinations(cs, 2):
            if not adjm[c1, c2]:
                return True
        return False

    changed = True
    while changed:
        changed = False
        cand = sorted(undirected)
        if rng is not None:
            cand = [cand[i] for i in rng.permutation(len(cand))]
        for a, b in cand:
            if (a, b) not in undirected:
                continue
            ends = [(a, b), (b, a)]
            if rng is not None and rng.random() < 0.5:
                ends.reverse()
            for x, y in ends:
                if fires(x, y):
                    undirected.discard((a, b))
                    directed.add((x, y))
                    changed = True
                    break
    return PDAG(n, frozenset(directed), frozenset(undirected))


def _pattern(skeleton: PDAG, vstructs: Iterable[tuple[int, int, int]]) -> PDAG:
    directed = set()
    for a, c, b in vstructs:
        directed.add((a, c))
        directed.add((b, c))
    undirected = {e for e in skeleton.undirected
                  if (e[0], e[1]) not in directed and (e[1], e[0]) not in directed}
    return PDAG(skeleton.n, frozenset(directed), frozenset(undirected))


def cpdag_of(adj: np.ndarray) -> PDAG:
    return meek_closure(_pattern(skeleton_of(adj), v_structures_of(adj)))


def orient_edges(g: PDAG, edges: Iterable[tuple[int, int]]) -> PDAG:
    """Turn undirected or reversed edges into the given orientations."""
    directed = set(g.directed)
    undirected = set(g.undirected)
    for a, b in edges:
        undirected.discard((min(a, b), max(a, b)))
        directed.discard((b, a))
        directed.add((a, b))
    return PDAG(g.n, frozenset(directed), frozenset(undirected))


def icpdag_of(adj: np.ndarray, fam: InterventionFamily, view: str = "augmented") -> PDAG:
    """I-CPDAG via the JCI-augmented DAG with environment edges held fixed.

    ``view="system"`` restricts the result to the system nodes.
    """
    adj = np.asarray(adj, dtype=bool)
    d = adj.shape[0]
    aug = augment_graph(adj, fam)
    base = _pattern(skeleton_of(aug), v_structures_of(aug))
    env_edges = [(int(a), int(b)) for a, b in zip(*np.nonzero(aug)) if a >= d]
    g = meek_closure(orient_edges(base, env_edges))
    if view == "system":
        return g.restrict(range(d))
    if view != "augmented":
        raise ValueError(f"unknown view {view!r}")
    return g


def interventional_graph(adj: np.ndarray, targets: Iterable[int]) -> np.ndarray:
    """Remove every edge into the targets (the hard-intervention graph)."""
    out = np.array(adj, dtype=bool)
    for t in targets:
        out[:, t] = False
    return out


def consistent_extension(g: PDAG) -> np.ndarray:
    """Dor-Tarsi extension of a PDAG to a DAG, lowest node index first.

    Raises :class:`ExtensionError` when no extension without new v-structures
    or cycles exists.
    """
    n = g.n
    directed = set(g.directed)
    undirected = set(g.undirected)
    alive = set(range(n))
    out = np.zeros((n, n), dtype=bool)
    for a, b in directed:
        out[a, b] = True
    adj_sets = [set(g.neighbors(v)) for v in range(n)]
    while alive:
        for x in sorted(alive):
            if any((x, y) in directed for y in adj_sets[x]):
                continue
            und = [y for y in adj_sets[x] if (min(x, y), max(x, y)) in undirected]
            ok = all(adj_sets[x] - {y} <= adj_sets[y] for y in und)
            if ok:
                break
        else:
            raise ExtensionError("PDAG admits no consistent DAG extension")
        for y in und:
            out[y, x] = True
            undirected.discard((min(x, y), max(x, y)))
        for y in adj_sets[x]:
            adj_sets[y].discard(x)
            directed.discard((y, x))
        alive.discard(x)
        adj_sets[x] = set()
    return out


def same_mec(a: np.ndarray, b: np.ndarray) -> bool:
    return skeleton_of(a) == skeleton_of(b) and v_structures_of(a) == v_structures_of(b)
