"""G-squared conditional independence scores for categorical data.

The dependence measure used throughout featurization is
``z = erfcinv(p)``: 0 for p = 1, growing as the p-value shrinks, capped at
``erfcinv(P_FLOOR)`` (about 26.2).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import special, stats

from .bayesnet import DataTable

P_FLOOR = 1e-300
Z_SCALES = ("erfc", "normal-two-sided")


@dataclass(frozen=True)
class DependenceScore:
    g2: float
    dof: int
    p_value: float
    z: float


def z_of_p(p: float, z_scale: str = "erfc") -> float:
    """Inverse complementary error function of a p-value, floored at ``P_FLOOR``.

    ``z_scale="normal-two-sided"`` multiplies by sqrt(2), i.e. the two-sided
    standard-normal quantile.
    """
    p = min(max(float(p), P_FLOOR), 1.0)
    z = float(special.erfcinv(p))
    if z_scale == "normal-two-sided":
        return z * np.sqrt(2.0)
    if z_scale != "erfc":
        raise ValueError(f"unknown z_scale {z_scale!r}")
    return z


Z_MAX = z_of_p(P_FLOOR)


def _stratified_counts(values: np.ndarray, cards: Sequence[int], i: int, j: int,
                       cond: Sequence[int]) -> np.ndarray:
    """Counts of shape (observed strata, |i|, |j|); empty strata never appear."""
    ci, cj = cards[i], cards[j]
    n = values.shape[0]
    if cond:
        key = np.zeros(n, dtype=np.int64)
        space = 1
        for c in cond:
            key *= cards[c]
            key += values[:, c]
            space *= cards[c]
        if space * ci * cj > 4 * n + 1024:
            _, key = np.unique(key, return_inverse=True)
            space = int(key.max()) + 1
        cell = (key * ci + values[:, i]) * cj + values[:, j]
    else:
        space = 1
        cell = values[:, i].astype(np.int64) * cj + values[:, j]
    counts = np.bincount(cell, minlength=space * ci * cj).reshape(space, ci, cj)
    return counts[counts.sum(axis=(1, 2)) > 0]


def g2_from_counts(counts: np.ndarray) -> tuple[float, int]:
    """G-squared statistic and adjusted degrees of freedom of a stratified table.

    Each stratum contributes ``(nonzero rows - 1) * (nonzero cols - 1)`` degrees
    of freedom, so empty strata and empty margins are dropped.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.ndim == 2:
        counts = counts[None]
    rows = counts.sum(axis=2)
    cols = counts.sum(axis=1)
    tot = rows.sum(axis=1)
    keep = tot > 0
    counts, rows, cols, tot = counts[keep], rows[keep], cols[keep], tot[keep]
    expected = rows[:, :, None] * cols[:, None, :] / tot[:, None, None]
    mask = counts > 0
    g2 = 2.0 * float(np.sum(counts[mask] * np.log(counts[mask] / expected[mask])))
    dof = int(np.sum(np.maximum((rows > 0).sum(axis=1) - 1, 0) * np.maximum((cols > 0).sum(axis=1) - 1, 0)))
    return max(g2, 0.0), dof


def g2_test(data: DataTable, i: int, j: int, cond: Iterable[int] = (), z_scale: str = "erfc") -> DependenceScore:
    cond = tuple(sorted(cond))
    if i == j or i in cond or j in cond:
        raise ValueError("i, j must differ and lie outside the conditioning set")
    a, b = min(i, j), max(i, j)
    counts = _stratified_counts(data.values, data.cardinalities, a, b, cond)
    g2, dof = g2_from_counts(counts)
    if dof == 0:
        return DependenceScore(0.0, 0, 1.0, 0.0)
    p = float(stats.chi2.sf(g2, dof))
    return DependenceScore(g2, dof, p, z_of_p(p, z_scale))


def dep(data: DataTable, i: int, j: int, cond: Iterable[int] = (), z_scale: str = "erfc") -> float:
    return g2_test(data, i, j, cond, z_scale).z


class CITester:
    """Cached G-squared scores over one data table.

    ``dep``/``p_value`` are keyed by the unordered pair and the sorted
    conditioning set, so symmetric queries hit the same entry.

    ``reference_rows`` rescales G-squared by ``reference_rows / n_rows`` when
    the table is larger, putting scores on the scale of a smaller sample
    (the statistic grows linearly with n for a fixed effect size).
    """

    def __init__(self, data: DataTable, z_scale: str = "erfc", reference_rows: int | None = None):
        if reference_rows is not None and reference_rows < 1:
            raise ValueError("reference_rows must be positive")
        self.data = data
        n = data.values.shape[0]
        self.g2_factor = min(1.0, reference_rows / n) if reference_rows and n else 1.0
        self.values = np.ascontiguousarray(data.values)
        self.cards = data.cardinalities
        self.z_scale = z_scale
        self.cache: dict[tuple, DependenceScore] = {}
        self.n_tests = 0

    @property
    def n_vars(self) -> int:
        return len(self.cards)

    def score(self, i: int, j: int, cond: Iterable[int] = ()) -> DependenceScore:
        cond = tuple(sorted(cond))
        key = (min(i, j), max(i, j), cond)
        hit = self.cache.get(key)
        if hit is None:
            if i == j or i in cond or j in cond:
                raise ValueError("i, j must differ and lie outside the conditioning set")
            counts = _stratified_counts(self.values, self.cards, key[0], key[1], cond)
            g2, dof = g2_from_counts(counts)
            g2 *= self.g2_factor
            if dof == 0:
                hit = DependenceScore(0.0, 0, 1.0, 0.0)
            else:
                p = float(stats.chi2.sf(g2, dof))
                hit = DependenceScore(g2, dof, p, z_of_p(p, self.z_scale))
            self.cache[key] = hit
            self.n_tests += 1
        return hit

    def dep(self, i: int, j: int, cond: Iterable[int] = ()) -> float:
        return self.score(i, j, cond).z

    def p_value(self, i: int, j: int, cond: Iterable[int] = ()) -> float:
        return self.score(i, j, cond).p_value

    def fingerprint(self) -> str:
        """Digest of the data and scoring options; names the on-disk cache."""
        h = hashlib.sha256()
        h.update(self.values.tobytes())
        h.update(json.dumps([list(self.values.shape), list(self.cards), self.z_scale, self.g2_factor]).encode())
        return h.hexdigest()[:24]

    def load_cache(self, directory: str | Path) -> int:
        """Merge a previously saved cache; returns the number of entries read."""
        path = Path(directory) / f"ci_{self.fingerprint()}.json"
        if not path.exists():
            return 0
        rows = json.loads(path.read_text())
        for a, b, cond, g2, dof, p, z in rows:
            self.cache.setdefault((a, b, tuple(cond)), DependenceScore(g2, dof, p, z))
        return len(rows)

    def save_cache(self, directory: str | Path) -> Path:
        root = Path(directory)
        root.mkdir(parents=True, exist_ok=True)
        path = root / f"ci_{self.fingerprint()}.json"
        rows = [[a, b, list(cond), s.g2, s.dof, s.p_value, s.z] for (a, b, cond), s in self.cache.items()]
        path.write_text(json.dumps(rows))
        return path


class OracleCI:
    """d-separation oracle with the :class:`CITester` interface.

    Independent pairs score p = 1 (z = 0); dependent pairs p = 0 (z = ``Z_MAX``).
    Uses a bitmask reachability search over active trails.
    """

    def __init__(self, adj: np.ndarray):
        self.adj = np.asarray(adj, dtype=bool)
        n = self.adj.shape[0]
        self._parents = [sum(1 << int(p) for p in np.flatnonzero(self.adj[:, v])) for v in range(n)]
        self._children = [sum(1 << int(c) for c in np.flatnonzero(self.adj[v])) for v in range(n)]
        self.cache: dict[tuple, bool] = {}

    @property
    def n_vars(self) -> int:
        return self.adj.shape[0]

    def _ancestors(self, mask: int) -> int:
        out, frontier = mask, mask
        while frontier:
            nxt = 0
            while frontier:
                low = frontier & -frontier
                nxt |= self._parents[low.bit_length() - 1]
                frontier ^= low
            frontier = nxt & ~out
            out |= frontier
        return out

    def _reachable(self, x: int, zmask: int) -> int:
        anc = self._ancestors(zmask)
        up, down = 0, 0  # visited when arriving from a child / from a parent
        stack = [(x, True)]
        reach = 0
        while stack:
            v, from_child = stack.pop()
            bit = 1 << v
            if from_child:
                if up & bit:
                    continue
                up |= bit
            else:
                if down & bit:
                    continue
                down |= bit
            in_z = zmask & bit
            if not in_z:
                reach |= bit
            if from_child and not in_z:
                m = self._parents[v]
                while m:
                    low = m & -m
                    stack.append((low.bit_length() - 1, True))
                    m ^= low
                m = self._children[v]
                while m:
                    low = m & -m
                    stack.append((low.bit_length() - 1, False))
                    m ^= low
            elif not from_child:
                if not in_z:
                    m = self._children[v]
                    while m:
                        low = m & -m
                        stack.append((low.bit_length() - 1, False))
                        m ^= low
                if anc & bit:
                    m = self._parents[v]
                    while m:
                        low = m & -m
                        stack.append((low.bit_length() - 1, True))
                        m ^= low
        return reach

    def independent(self, i: int, j: int, cond: Iterable[int] = ()) -> bool:
        cond = tuple(sorted(cond))
        key = (min(i, j), max(i, j), cond)
        hit = self.cache.get(key)
        if hit is None:
            if i == j or i in cond or j in cond:
                raise ValueError("i, j must differ and lie outside the conditioning set")
            zmask = 0
            for c in cond:
                zmask |= 1 << c
            hit = self.cache[key] = not (self._reachable(i, zmask) >> j) & 1
        return hit

    def dep(self, i: int, j: int, cond: Iterable[int] = ()) -> float:
        return 0.0 if self.independent(i, j, cond) else Z_MAX

    def p_value(self, i: int, j: int, cond: Iterable[int] = ()) -> float:
        return 1.0 if self.independent(i, j, cond) else 0.0


def contingency_csv(data: DataTable, i: int, j: int, cond: Sequence[int] = ()) -> str:
    """Debug dump: one line per (stratum, i-state, j-state) with its count."""
    counts = _stratified_counts(data.values, data.cardinalities, i, j, tuple(sorted(cond)))
    lines = ["stratum,i,j,count"]
    for s, a, b in np.ndindex(*counts.shape):
        lines.append(f"{s},{a},{b},{int(counts[s, a, b])}")
    return "\n".join(lines) + "\n"
