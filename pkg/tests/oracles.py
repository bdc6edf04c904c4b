"""Independent reference computations shared by the test modules."""

from __future__ import annotations

import itertools

import numpy as np


def random_dag(n: int, rng: np.random.Generator, p: float = 0.5) -> np.ndarray:
    order = rng.permutation(n)
    m = np.zeros((n, n), dtype=bool)
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < p:
                m[order[a], order[b]] = True
    return m


def _joint(adj: np.ndarray, cpts: list[dict], clamp: dict[int, int] | None = None) -> np.ndarray:
    """Joint table over binary nodes by truncated factorisation; clamped nodes drop their factor."""
    n = adj.shape[0]
    clamp = clamp or {}
    joint = np.zeros((2,) * n)
    for x in itertools.product((0, 1), repeat=n):
        if any(x[v] != val for v, val in clamp.items()):
            continue
        p = 1.0
        for v in range(n):
            if v in clamp:
                continue
            pa = tuple(x[u] for u in np.flatnonzero(adj[:, v]))
            p *= cpts[v][pa] if x[v] else 1.0 - cpts[v][pa]
        joint[x] = p
    return joint


def _generic_cpts(adj: np.ndarray, rng: np.random.Generator) -> list[dict]:
    n = adj.shape[0]
    out = []
    for v in range(n):
        k = int(adj[:, v].sum())
        out.append({pa: rng.uniform(0.1, 0.9) for pa in itertools.product((0, 1), repeat=k)})
    return out


def _marginal(joint: np.ndarray, keep: list[int]) -> np.ndarray:
    drop = tuple(v for v in range(joint.ndim) if v not in keep)
    return joint.sum(axis=drop)


def interventional_sid(truth: np.ndarray, pred: np.ndarray, rng: np.random.Generator, draws: int = 2) -> int:
    """Count ordered pairs (i, j) whose P(x_j | do(x_i)) the prediction gets wrong.

    The prediction adjusts for its parent set of ``i`` (or claims no effect when
    ``j`` is one of those parents). Truth comes from the truncated factorisation
    under generic random CPTs; a pair counts as correct only if the two agree
    under every draw.
    """
    n = truth.shape[0]
    wrong = set()
    for _ in range(draws):
        cpts = _generic_cpts(truth, rng)
        joint = _joint(truth, cpts)
        for i in range(n):
            pa = [int(u) for u in np.flatnonzero(pred[:, i])]
            for j in range(n):
                if i == j:
                    continue
                for xi in (0, 1):
                    true = _marginal(_joint(truth, cpts, {i: xi}), [j])
                    if j in pa:
                        est = _marginal(joint, [j])
                    else:
                        est = np.zeros(2)
                        for z in itertools.product((0, 1), repeat=len(pa)):
                            keep = sorted(pa + [i, j])
                            m = _marginal(joint, keep)
                            idx_z = {v: z[k] for k, v in enumerate(pa)}
                            pz = _marginal(joint, sorted(pa))[tuple(idx_z[v] for v in sorted(pa))] if pa else 1.0
                            for xj in (0, 1):
                                vals = {**idx_z, i: xi, j: xj}
                                num = m[tuple(vals[v] for v in keep)]
                                den = m.sum(axis=keep.index(j))[tuple(vals[v] for v in keep if v != j)]
                                est[xj] += num / den * pz
                    if not np.allclose(est, true, atol=1e-9):
                        wrong.add((i, j))
    return len(wrong)


def legal_augmented_dags(system_dags, system_count: int, env_count: int):
    """Every augmented DAG: a system DAG plus any set of env -> system edges."""
    n = system_count + env_count
    slots = [(e, v) for e in range(system_count, n) for v in range(system_count)]
    for g in system_dags:
        for bits in itertools.product((0, 1), repeat=len(slots)):
            a = np.zeros((n, n), dtype=bool)
            a[:system_count, :system_count] = g
            for (e, v), on in zip(slots, bits):
                a[e, v] = bool(on)
            yield a


def exact_posterior(graphs: list[np.ndarray], score) -> np.ndarray:
    s = np.array([score(g) for g in graphs])
    p = np.exp(s - s.max())
    return p / p.sum()


def grid_argmax(objective, start: np.ndarray, span: float = 1.0, points: int = 11,
                min_span: float = 1e-8) -> np.ndarray:
    """Coordinate grid search on a log scale; the span halves once no coordinate moves."""
    x = np.log(np.asarray(start, dtype=float))
    best = objective(np.exp(x))
    while span > min_span:
        moved = False
        for k in range(len(x)):
            for g in x[k] + np.linspace(-span, span, points):
                trial = x.copy()
                trial[k] = g
                val = objective(np.exp(trial))
                if val > best:
                    best, x, moved = val, trial, True
        if not moved:
            span /= 2
    return np.exp(x)
