"""Fixed-length feature vectors for edge candidates and unshielded triples.

Every function takes a CI object exposing ``dep(i, j, cond)`` and
``p_value(i, j, cond)`` (see :mod:`ticl.citest`), and an undirected working
graph given as a list of neighbour sets.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .graphlib import PDAG

SUBSET_CAP = 64
SEPSET_CAP = 16
MEMBER_PAIR_CAP = 16
SEPSET_ALPHA = 0.01
FEATURE_SCHEMA = "ticl-features/1"
N_STATS = 5
N_VICINITY = 24
N_OVERLAP = 7
N_SCALING = 5
ORIENTATION_DIM = N_VICINITY + N_OVERLAP + N_SCALING


@dataclass(frozen=True)
class EmbeddingBasis:
    """Random Fourier basis for embedding sets of scalar dependence scores."""

    w: np.ndarray
    b: np.ndarray
    seed: int = 0

    @classmethod
    def make(cls, m: int = 15, seed: int = 0) -> "EmbeddingBasis":
        rng = np.random.default_rng(seed)
        return cls(rng.standard_normal(m), rng.uniform(0.0, 2 * np.pi, m), seed)

    @property
    def m(self) -> int:
        return len(self.w)

    def to_dict(self) -> dict:
        return {"w": self.w.tolist(), "b": self.b.tolist(), "seed": self.seed}

    @classmethod
    def from_dict(cls, doc: dict) -> "EmbeddingBasis":
        return cls(np.asarray(doc["w"], dtype=float), np.asarray(doc["b"], dtype=float), doc.get("seed", 0))


def skeleton_dim(m: int) -> int:
    return 2 * (m + N_STATS) + 6


def embed(scores: Sequence[float], basis: EmbeddingBasis) -> np.ndarray:
    """Mean cosine embedding followed by ``[max, min, mean, std, size]``."""
    out = np.zeros(basis.m + N_STATS)
    if len(scores) == 0:
        return out
    z = np.sort(np.asarray(scores, dtype=float))  # sorting makes the sums order-free
    out[:basis.m] = np.cos(np.outer(z, basis.w) + basis.b).mean(axis=0)
    out[basis.m:] = (z[-1], z[0], z.mean(), z.std(), len(z))
    return out


def overlap(a: set | frozenset, b: set | frozenset) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / min(len(a), len(b))


def adjacency_sets(g: PDAG | np.ndarray) -> list[set[int]]:
    if isinstance(g, PDAG):
        return [set(g.neighbors(v)) for v in range(g.n)]
    m = np.asarray(g, dtype=bool)
    m = m | m.T
    return [set(np.flatnonzero(m[v]).tolist()) for v in range(m.shape[0])]


def conditioning_sets(pool: Sequence[int], k: int, cap: int = SUBSET_CAP, seed: int = 0) -> list[tuple[int, ...]]:
    """Size-``k`` subsets of ``pool``; a seeded uniform sample of ``cap`` when there are more."""
    pool = sorted(pool)
    if k > len(pool):
        return []
    total = math.comb(len(pool), k)
    if total <= cap:
        return list(itertools.combinations(pool, k))
    rng = np.random.default_rng(seed)
    picks = set()
    while len(picks) < cap:
        picks.add(tuple(sorted(rng.choice(pool, size=k, replace=False).tolist())))
    return sorted(picks)


def _pair_seed(i: int, j: int, k: int) -> int:
    return (min(i, j) * 1_000_003 + max(i, j)) * 31 + k


def side_subsets(adj: Sequence[set[int]], i: int, j: int, k: int, cap: int = SUBSET_CAP) -> list[tuple[int, ...]]:
    """Size-``k`` subsets of ``adj(i) - {j}`` and of ``adj(j) - {i}``, deduplicated."""
    seed = _pair_seed(i, j, k)
    left = conditioning_sets(adj[i] - {j}, k, cap, seed)
    right = conditioning_sets(adj[j] - {i}, k, cap, seed + 1)
    return sorted(set(left) | set(right))


# ---------------------------------------------------------------------------
# Skeleton features


@dataclass(frozen=True)
class SkeletonFeature:
    pair: tuple[int, int]
    order: int
    vector: np.ndarray
    sepset: tuple[int, ...] | None
    label: bool | None = None


def k_order_scores(ci, adj: Sequence[set[int]], i: int, j: int, k: int,
                   cap: int = SUBSET_CAP) -> tuple[list[float], list[tuple[int, ...]]]:
    sets = side_subsets(adj, i, j, k, cap)
    return [ci.dep(i, j, s) for s in sets], sets


def residual_scores(ci, adj: Sequence[set[int]], i: int, j: int, k: int, cap: int = SUBSET_CAP) -> list[float]:
    """``dep(S) - min_q dep(S + q)`` over size-``k-1`` sets, ``q`` from the same side."""
    if k < 1:
        return []
    out = []
    seed = _pair_seed(i, j, k) + 7
    for side, pool in enumerate((adj[i] - {j}, adj[j] - {i})):
        for s in conditioning_sets(pool, k - 1, cap, seed + side):
            rest = pool.difference(s)
            if not rest:
                continue
            base = ci.dep(i, j, s)
            out.append(base - min(ci.dep(i, j, s + (q,)) for q in sorted(rest)))
    return out


def structural_block(adj: Sequence[set[int]], conf: np.ndarray, i: int, j: int) -> np.ndarray:
    """Competitiveness (3), degrees (2) and neighbourhood density (1)."""
    ni, nj = adj[i] - {j}, adj[j] - {i}
    c = conf[i, j]
    comp_i = sum(c > conf[i, q] for q in ni) / max(1, len(ni))
    comp_j = sum(c > conf[j, q] for q in nj) / max(1, len(nj))
    return np.array([comp_i, comp_j, c, len(ni), len(nj), overlap(ni, nj)], dtype=float)


def skeleton_features(ci, adj: Sequence[set[int]], conf_prev: np.ndarray, pair: tuple[int, int], k: int,
                      basis: EmbeddingBasis, cap: int = SUBSET_CAP) -> SkeletonFeature:
    """Feature vector of length ``2 * (m + 5) + 6`` for the edge ``pair`` at order ``k``.

    ``sepset`` is the conditioning set with the weakest dependence, or ``None``
    when there is no size-``k`` conditioning set.
    """
    i, j = pair
    scores, sets = k_order_scores(ci, adj, i, j, k, cap)
    resid = residual_scores(ci, adj, i, j, k, cap)
    vec = np.concatenate([embed(scores, basis), embed(resid, basis), structural_block(adj, conf_prev, i, j)])
    sepset = sets[int(np.argmin(scores))] if scores else None
    return SkeletonFeature((i, j), k, vec, sepset)


# ---------------------------------------------------------------------------
# Orientation features


@dataclass(frozen=True)
class OrientationFeature:
    triple: tuple[int, int, int]
    vector: np.ndarray
    label: bool | None = None


def find_sepsets(ci, adj: Sequence[set[int]], a: int, b: int, alpha: float = SEPSET_ALPHA,
                 max_size: int = 4, cap: int = SUBSET_CAP) -> list[tuple[int, ...]]:
    """Separating sets of ``a`` and ``b`` drawn from either endpoint's neighbours."""
    found = []
    for k in range(max_size + 1):
        for s in side_subsets(adj, a, b, k, cap):
            if ci.p_value(a, b, s) > alpha:
                found.append(s)
    return sorted(set(found), key=lambda s: (len(s), s))


def _cell(ci, xs: Sequence[int], ys: Sequence[int], conds: Sequence[frozenset[int]]) -> float:
    pairs = [(x, y) for x in xs for y in ys if x != y][:MEMBER_PAIR_CAP]
    vals = [ci.dep(x, y, tuple(sorted(cond - {x, y}))) for x, y in pairs for cond in conds]
    return float(np.mean(vals)) if vals else 0.0


def orientation_features(ci, adj: Sequence[set[int]], sepsets: Sequence[Sequence[int]],
                         triple: tuple[int, int, int], max_sepsets: int = SEPSET_CAP) -> OrientationFeature:
    """Vicinity dependence (24), overlaps (7) and scaling (5) for ``a - c - b``."""
    a, c, b = triple
    pc_a = sorted(adj[a] - {c})
    pc_b = sorted(adj[b] - {c})
    pc_c = sorted(adj[c] - {a, b})
    ss = [frozenset(s) for s in sepsets]
    ss_used = ss[:max_sepsets] or [frozenset()]
    cset, pcc = frozenset({c}), frozenset(pc_c)
    conditions = (
        [frozenset()],
        ss_used,
        [cset],
        [cset | s for s in ss_used],
        [pcc],
        [pcc | s for s in ss_used],
    )
    variables = (([a], [b]), ([a], pc_b), (pc_a, [b]), (pc_a, pc_b))
    vicinity = [_cell(ci, xs, ys, conds) for xs, ys in variables for conds in conditions]
    union = frozenset().union(*ss) if ss else frozenset()
    sets = (set(pc_a), set(pc_b), set(pc_c), set(union))
    overlaps = [overlap(x, y) for x, y in itertools.combinations(sets, 2)]
    overlaps.append(overlap({c}, set(union)))
    scaling = [len(pc_a), len(pc_b), len(pc_c), len(ss), float(np.mean([len(s) for s in ss])) if ss else 0.0]
    return OrientationFeature(triple, np.array(vicinity + overlaps + scaling, dtype=float))


OLP_CENTER_INDEX = N_VICINITY + N_OVERLAP - 1


# ---------------------------------------------------------------------------
# Labels and export


def skeleton_label(truth: np.ndarray, i: int, j: int) -> bool:
    return bool(truth[i, j] or truth[j, i])


def orientation_label(truth: np.ndarray, triple: tuple[int, int, int]) -> bool:
    a, c, b = triple
    return bool(truth[a, c] and truth[b, c] and not (truth[a, b] or truth[b, a]))


def write_features_csv(X: np.ndarray, y: np.ndarray | None, path: str | Path, kind: str) -> None:
    X = np.atleast_2d(X)
    cols = [f"f{i}" for i in range(X.shape[1])] + (["label"] if y is not None else [])
    body = X if y is None else np.column_stack([X, y])
    with open(path, "w") as fh:
        fh.write(f"# {FEATURE_SCHEMA} kind={kind}\n")
        fh.write(",".join(cols) + "\n")
        np.savetxt(fh, body, delimiter=",", fmt="%.17g")


def read_features_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray | None, str]:
    with open(path) as fh:
        header = fh.readline()
        if FEATURE_SCHEMA not in header:
            raise ValueError(f"unsupported feature file header {header.strip()!r}")
        kind = header.split("kind=")[1].strip()
        cols = fh.readline().strip().split(",")
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    if cols[-1] == "label":
        return body[:, :-1], body[:, -1].astype(bool), kind
    return body, None, kind
