"""Structure MCMC over JCI-legal augmented graphs, used to manufacture
(graph, data) training pairs from a single test dataset."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import special

from .bayesnet import (
    DataTable,
    DiscreteBayesNet,
    family_counts,
    forward_sample,
    mle_row,
    parents_from_adjacency,
    read_table_csv,
    write_table_csv,
)
from .graphlib import PDAG
from .jci import AugmentedDataset, JciConstraints

log = logging.getLogger(__name__)

EULER_GAMMA = 0.5772156649015329
MAX_IN_DEGREE = 6
BOOTSTRAP_DRAWS = 20
FIXED_POINT_MAX_ITER = 1000


@dataclass(frozen=True)
class McmcConfig:
    n_pairs: int = 400
    samples_per_pair: int = 10000
    burn_in: int | None = None  # None -> 500 * (d + K)
    thin: int = 50
    n_chains: int = 4
    score: str = "bic"
    seed_mode: str = "proxy"
    dirichlet_beta: float = 0.25
    acceptance: str = "mh"
    max_in_degree: int = MAX_IN_DEGREE
    track_cpts: bool = True
    env_sampling: str = "regime"  # "regime": one-hot draw of the regime; "bernoulli": independent
    proxy_restarts: int = 8  # hill climbs behind the proxy seed: one from empty, the rest from random graphs
    jobs: int = 1

    def __post_init__(self):
        if (self.n_pairs < 0 or self.samples_per_pair < 1 or self.thin < 1 or self.n_chains < 1
                or self.proxy_restarts < 1):
            raise ValueError("McmcConfig counts must be positive")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        if self.dirichlet_beta <= 0:
            raise ValueError("dirichlet_beta must be positive")
        if self.score not in ("bic", "loglik"):
            raise ValueError(f"unknown score {self.score!r}")
        if self.seed_mode not in ("proxy", "random"):
            raise ValueError(f"unknown seed_mode {self.seed_mode!r}")
        if self.acceptance not in ("mh", "score-ratio"):
            raise ValueError(f"unknown acceptance {self.acceptance!r}")
        if self.env_sampling not in ("regime", "bernoulli"):
            raise ValueError(f"unknown env_sampling {self.env_sampling!r}")

    def burn_in_for(self, n_nodes: int) -> int:
        return 500 * n_nodes if self.burn_in is None else self.burn_in


@dataclass
class ChainState:
    graph: np.ndarray
    cpts: list[np.ndarray] | None
    score: float
    step: int = 0


@dataclass(frozen=True)
class TrainingPair:
    graph: np.ndarray
    data: DataTable
    chain: int = 0
    step: int = 0


# ---------------------------------------------------------------------------
# Scoring


class FamilyScorer:
    """Decomposable BIC or log-likelihood with a per-(node, parent set) cache."""

    def __init__(self, data: DataTable, kind: str = "bic"):
        if kind not in ("bic", "loglik"):
            raise ValueError(f"unknown score {kind!r}")
        self.values = data.values
        self.cards = data.cardinalities
        self.kind = kind
        self.penalty = 0.5 * math.log(data.n_rows) if kind == "bic" else 0.0
        self.cache: dict[tuple[int, tuple[int, ...]], float] = {}

    def local(self, v: int, parents: Sequence[int]) -> float:
        key = (v, tuple(sorted(parents)))
        hit = self.cache.get(key)
        if hit is None:
            counts = family_counts(self.values, self.cards, v, key[1])
            totals = counts.sum(axis=1, keepdims=True)
            nz = counts > 0
            ll = float(np.sum(counts[nz] * np.log((counts / np.where(totals > 0, totals, 1))[nz])))
            hit = ll - self.penalty * (self.cards[v] - 1) * counts.shape[0]
            self.cache[key] = hit
        return hit

    def total(self, adj: np.ndarray) -> float:
        return sum(self.local(v, np.flatnonzero(adj[:, v])) for v in range(adj.shape[0]))


# ---------------------------------------------------------------------------
# Move sets


def _descendant_masks(adj: np.ndarray) -> list[int]:
    """Bitmask of proper descendants per node."""
    n = adj.shape[0]
    children = [np.flatnonzero(adj[v]).tolist() for v in range(n)]
    indeg = adj.sum(axis=0).tolist()
    order, stack = [], [v for v in range(n) if indeg[v] == 0]
    while stack:
        v = stack.pop()
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                stack.append(c)
    if len(order) != n:
        raise ValueError("graph has a cycle")
    desc = [0] * n
    for v in reversed(order):
        m = 0
        for c in children[v]:
            m |= (1 << c) | desc[c]
        desc[v] = m
    return desc


def legal_moves(adj: np.ndarray, legal: np.ndarray, max_in_degree: int = MAX_IN_DEGREE) -> list[tuple[str, int, int]]:
    """Every single add/delete/reverse that keeps the graph acyclic and legal."""
    adj = np.ascontiguousarray(adj, dtype=bool)
    legal = np.ascontiguousarray(legal, dtype=bool)
    return list(_cached_moves(adj.tobytes(), legal.tobytes(), adj.shape[0], max_in_degree))


@lru_cache(maxsize=1 << 16)
def _cached_moves(adj_bytes: bytes, legal_bytes: bytes, n: int, max_in_degree: int) -> tuple:
    # chains revisit graphs constantly; the move set depends only on these arguments
    adj = np.frombuffer(adj_bytes, dtype=bool).reshape(n, n)
    legal = np.frombuffer(legal_bytes, dtype=bool).reshape(n, n)
    return tuple(_enumerate_moves(adj, legal, max_in_degree))


def _enumerate_moves(adj: np.ndarray, legal: np.ndarray, max_in_degree: int) -> list[tuple[str, int, int]]:
    n = adj.shape[0]
    desc = _descendant_masks(adj)
    indeg = adj.sum(axis=0)
    moves = []
    for i in range(n):
        for j in range(n):
            if adj[i, j]:
                moves.append(("delete", i, j))
                if legal[j, i] and indeg[i] < max_in_degree:
                    # reversal is cyclic iff another i ~> j path exists
                    other = 0
                    for c in np.flatnonzero(adj[i]):
                        if c != j:
                            other |= (1 << int(c)) | desc[c]
                    if not (other >> j) & 1:
                        moves.append(("reverse", i, j))
            elif legal[i, j] and not adj[j, i] and indeg[j] < max_in_degree and not (desc[j] >> i) & 1:
                moves.append(("add", i, j))
    return moves


def apply_move(adj: np.ndarray, move: tuple[str, int, int]) -> np.ndarray:
    kind, i, j = move
    out = adj.copy()
    if kind == "add":
        out[i, j] = True
    elif kind == "delete":
        out[i, j] = False
    else:
        out[i, j] = False
        out[j, i] = True
    return out


def propose(state: ChainState, c: JciConstraints, rng: np.random.Generator,
            max_in_degree: int = MAX_IN_DEGREE) -> tuple[np.ndarray, str | None, float]:
    legal = c.legal_mask()
    moves = legal_moves(state.graph, legal, max_in_degree)
    if not moves:
        return state.graph.copy(), None, 1.0
    move = moves[rng.integers(len(moves))]
    cand = apply_move(state.graph, move)
    back = legal_moves(cand, legal, max_in_degree)
    return cand, move[0], len(moves) / len(back)


# ---------------------------------------------------------------------------
# Dirichlet fitting and CPT re-estimation


def digamma_inverse(y):
    """Solve ``digamma(x) = y`` with Minka's initialisation and Newton steps."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        x = np.where(y >= -2.22, np.exp(y) + 0.5, -1.0 / (y + EULER_GAMMA))
    for _ in range(10):
        step = (special.digamma(x) - y) / special.polygamma(1, x)
        x = x - step
        if np.all(np.abs(step) <= 1e-14 * np.abs(x)):
            break
    return x if x.ndim else float(x)


def dirichlet_loglik(alpha: np.ndarray, mean_log_p: np.ndarray, n: int = 1) -> float:
    """Log-likelihood of ``n`` Dirichlet draws summarised by their mean log-probabilities."""
    alpha = np.asarray(alpha, dtype=float)
    return n * float(special.gammaln(alpha.sum()) - special.gammaln(alpha).sum()
                     + np.dot(alpha - 1.0, mean_log_p))


def dirichlet_mle(samples: np.ndarray, max_iter: int = FIXED_POINT_MAX_ITER,
                  tol: float = 1e-10) -> tuple[np.ndarray, bool]:
    """Maximum-likelihood Dirichlet fit to rows of probability vectors.

    Iterates ``alpha <- digamma_inverse(digamma(sum(alpha)) + mean log p)``,
    with SQUAREM extrapolation between plain steps (kept only when it raises
    the likelihood). Returns ``(alpha, converged)``.
    """
    samples = np.asarray(samples, dtype=float)
    mean_log_p = np.log(samples).mean(axis=0)
    mean = samples.mean(axis=0)
    second = (samples ** 2).mean(axis=0)
    # moment-matching start, precision averaged over components
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.median((mean - second) / (second - mean ** 2))
    alpha = mean * precision if np.isfinite(precision) and precision > 0 else np.ones_like(mean)

    def step(a):
        return digamma_inverse(special.digamma(a.sum()) + mean_log_p)

    def loglik(a):
        return dirichlet_loglik(a, mean_log_p)

    for _ in range(max_iter):
        a1 = step(alpha)
        a2 = step(a1)
        if not (np.all(np.isfinite(a2)) and np.all(a2 > 0)):
            return alpha, False
        r = a1 - alpha
        v = a2 - a1 - r
        nv = np.linalg.norm(v)
        new = a2
        if nv > 0:
            t = -np.linalg.norm(r) / nv
            jump = alpha - 2 * t * r + t * t * v
            if np.all(jump > 0) and np.all(np.isfinite(jump)):
                jump = step(jump)
                if np.all(jump > 0) and loglik(jump) >= loglik(a2):
                    new = jump
        if np.max(np.abs(new - alpha) / alpha) < tol:
            return new, True
        alpha = new
    return alpha, False


def _gained_parent_rows(values: np.ndarray, cards: Sequence[int], v: int, parents: Sequence[int],
                        prev_rows: np.ndarray, prev_parents: Sequence[int], beta: float,
                        rng: np.random.Generator) -> np.ndarray:
    counts = family_counts(values, cards, v, parents)
    # parent configs of the new layout, mapped onto the old layout's rows
    keep = [parents.index(p) for p in prev_parents]
    grid = np.indices([cards[p] for p in parents]).reshape(len(parents), -1).T
    old_idx = np.zeros(len(grid), dtype=np.int64)
    for k, p in zip(keep, prev_parents):
        old_idx = old_idx * cards[p] + grid[:, k]
    rows = np.empty_like(counts)
    for r in range(counts.shape[0]):
        n = counts[r].sum()
        if n == 0:
            rows[r] = prev_rows[old_idx[r]]
            continue
        boot = rng.multinomial(int(n), counts[r] / n, size=BOOTSTRAP_DRAWS)
        p_hat = mle_row(boot, 1.0)
        if np.ptp(p_hat, axis=0).max() == 0:
            rows[r] = p_hat[0]
            continue
        alpha, ok = dirichlet_mle(p_hat)
        if not ok:
            log.debug("Dirichlet fixed point did not converge for node %d; using MLE row", v)
            rows[r] = mle_row(counts[r], 1.0)
            continue
        rows[r] = rng.dirichlet(beta * alpha)
        s = rows[r].sum()
        rows[r] = rows[r] / s if s > 0 and np.all(np.isfinite(rows[r])) else mle_row(counts[r], 1.0)
    return rows


def _lost_parent_rows(values: np.ndarray, cards: Sequence[int], prev_rows: np.ndarray,
                      prev_parents: Sequence[int], lost: int) -> np.ndarray:
    """Marginalise ``lost`` out of a CPT, weighting by empirical P(lost | other parents)."""
    rest = [p for p in prev_parents if p != lost]
    shape = [cards[p] for p in prev_parents] + [prev_rows.shape[1]]
    table = prev_rows.reshape(shape)
    axis = prev_parents.index(lost)
    weights = family_counts(values, cards, lost, rest).reshape([cards[p] for p in rest] + [cards[lost]])
    weights = mle_row(weights, 0.0)  # empty strata -> uniform
    weights = np.moveaxis(weights, -1, axis)
    out = (table * weights[..., None]).sum(axis=axis).reshape(-1, prev_rows.shape[1])
    return out / out.sum(axis=1, keepdims=True)


def reestimate_cpts(prev: ChainState, candidate: np.ndarray, data: DataTable | AugmentedDataset,
                    beta: float, rng: np.random.Generator) -> list[np.ndarray]:
    """CPTs for ``candidate`` that reuse ``prev.cpts`` wherever parent sets are unchanged."""
    table = data.table if isinstance(data, AugmentedDataset) else data
    values, cards = table.values, table.cardinalities
    out = list(prev.cpts)
    for v in range(candidate.shape[0]):
        old = [int(p) for p in np.flatnonzero(prev.graph[:, v])]
        new = [int(p) for p in np.flatnonzero(candidate[:, v])]
        if old == new:
            continue
        rows, cur = prev.cpts[v], old
        for p in set(old) - set(new):
            rows = _lost_parent_rows(values, cards, rows, cur, p)
            cur = [q for q in cur if q != p]
        for p in sorted(set(new) - set(old)):
            nxt = sorted(cur + [p])
            rows = _gained_parent_rows(values, cards, v, nxt, rows, cur, beta, rng)
            cur = nxt
        out[v] = rows
    return out


# ---------------------------------------------------------------------------
# Chains


def mh_step(state: ChainState, scorer: FamilyScorer, data: DataTable | AugmentedDataset,
            c: JciConstraints, cfg: McmcConfig, rng: np.random.Generator) -> ChainState:
    cand, move, q_ratio = propose(state, c, rng, cfg.max_in_degree)
    step = state.step + 1
    if move is None:
        return replace(state, step=step)
    cand_score = sum(scorer.local(v, np.flatnonzero(cand[:, v]))
                     for v in np.flatnonzero((cand != state.graph).any(axis=0)))
    old_part = sum(scorer.local(v, np.flatnonzero(state.graph[:, v]))
                   for v in np.flatnonzero((cand != state.graph).any(axis=0)))
    new_score = state.score - old_part + cand_score
    if cfg.acceptance == "mh":
        log_acc = math.log(q_ratio) + new_score - state.score
        accept = log_acc >= 0 or rng.random() < math.exp(log_acc)
    else:
        # ratio of negative log-scores: lower magnitude wins
        ratio = state.score / new_score if new_score != 0 else 1.0
        accept = rng.random() < min(1.0, ratio)
    if not math.isfinite(new_score):
        accept = False
    if not accept:
        return replace(state, step=step)
    cpts = (reestimate_cpts(state, cand, data, cfg.dirichlet_beta, rng)
            if cfg.track_cpts and state.cpts is not None else state.cpts)
    return ChainState(cand, cpts, new_score, step)


def hill_climb(data: DataTable, c: JciConstraints, rng: np.random.Generator,
               max_in_degree: int = MAX_IN_DEGREE, scorer: FamilyScorer | None = None,
               max_iter: int = 10000, start: np.ndarray | None = None) -> np.ndarray:
    """Greedy BIC hill climbing over legal add/delete/reverse moves, from ``start`` or the empty graph."""
    scorer = scorer or FamilyScorer(data, "bic")
    legal = c.legal_mask()
    adj = np.zeros((c.n, c.n), dtype=bool) if start is None else np.asarray(start, dtype=bool).copy()
    local = [scorer.local(v, np.flatnonzero(adj[:, v])) for v in range(c.n)]
    for _ in range(max_iter):
        best, best_gain = [], 1e-9
        for move in legal_moves(adj, legal, max_in_degree):
            kind, i, j = move
            pa_j = set(np.flatnonzero(adj[:, j]).tolist())
            if kind == "add":
                gain = scorer.local(j, pa_j | {i}) - local[j]
            elif kind == "delete":
                gain = scorer.local(j, pa_j - {i}) - local[j]
            else:
                pa_i = set(np.flatnonzero(adj[:, i]).tolist())
                gain = (scorer.local(j, pa_j - {i}) - local[j]
                        + scorer.local(i, pa_i | {j}) - local[i])
            if gain > best_gain + 1e-9:
                best, best_gain = [move], gain
            elif abs(gain - best_gain) <= 1e-9:
                best.append(move)
        if not best:
            break
        adj = apply_move(adj, best[rng.integers(len(best))] if len(best) > 1 else best[0])
        local = [scorer.local(v, np.flatnonzero(adj[:, v])) for v in range(c.n)]
    return adj


def proxy_seed(aug: AugmentedDataset, rng: np.random.Generator, max_in_degree: int = MAX_IN_DEGREE,
               restarts: int = 1, scorer: FamilyScorer | None = None) -> np.ndarray:
    """Best-scoring local optimum over ``restarts`` hill climbs (the first starts empty)."""
    c = aug.constraints
    scorer = scorer or FamilyScorer(aug.table, "bic")
    best, best_score = None, -np.inf
    for r in range(restarts):
        start = None if r == 0 else random_legal_dag(c, rng, max_in_degree=max_in_degree)
        adj = hill_climb(aug.table, c, rng, max_in_degree, scorer, start=start)
        score = scorer.total(adj)
        if score > best_score + 1e-9:
            best, best_score = adj, score
    return best


def random_legal_dag(c: JciConstraints, rng: np.random.Generator, edge_prob: float | None = None,
                     max_in_degree: int = MAX_IN_DEGREE) -> np.ndarray:
    """Random acyclic legal graph: random system order, independent edges."""
    n, d = c.n, c.system_count
    p = edge_prob if edge_prob is not None else min(1.0, 2.0 / max(n - 1, 1))
    rank = np.empty(n, dtype=int)
    rank[:d] = rng.permutation(d)
    rank[d:] = -1  # environment nodes precede every system node
    legal = c.legal_mask()
    adj = np.zeros((n, n), dtype=bool)
    for j in rng.permutation(n):
        cands = [i for i in range(n) if legal[i, j] and rank[i] < rank[j]]
        chosen = [i for i in cands if rng.random() < p]
        if len(chosen) > max_in_degree:
            chosen = list(rng.choice(chosen, size=max_in_degree, replace=False))
        adj[chosen, j] = True
    return adj


def _network(adj: np.ndarray, cpts: Sequence[np.ndarray], table: DataTable) -> DiscreteBayesNet:
    return DiscreteBayesNet(tuple(table.columns), tuple(table.cardinalities),
                            parents_from_adjacency(adj), tuple(np.asarray(t) for t in cpts))


def regime_weights(aug: AugmentedDataset) -> np.ndarray:
    """Empirical regime proportions ``[observational, regime 1, ..., regime K]``."""
    return np.bincount(aug.regime_of_rows(), minlength=aug.k + 1) / aug.table.n_rows


def _env_clamp(system_count: int, weights: np.ndarray | None, m: int,
               rng: np.random.Generator) -> dict[int, np.ndarray] | None:
    if weights is None or len(weights) < 2:
        return None
    regime = rng.choice(len(weights), size=m, p=weights)
    return {system_count + r - 1: (regime == r).astype(np.int32) for r in range(1, len(weights))}


def _sample_pair(adj: np.ndarray, cpts: Sequence[np.ndarray], table: DataTable, m: int,
                 rng: np.random.Generator, system_count: int | None = None,
                 weights: np.ndarray | None = None) -> DataTable:
    """Forward-sample ``m`` rows; environment roots come from one regime draw per row
    when ``weights`` is given, else from their own fitted Bernoulli CPTs."""
    net = _network(adj, cpts, table)
    clamp = _env_clamp(system_count, weights, m, rng) if system_count is not None else None
    return forward_sample(net, m, rng, clamp=clamp)


def _run_chain(args) -> tuple[list[TrainingPair], list[float]]:
    aug, cfg, n_emit, chain_id, seed, start = args
    rng = np.random.default_rng(seed)
    c = aug.constraints
    table = aug.table
    scorer = FamilyScorer(table, cfg.score)
    if start is None:
        start = random_legal_dag(c, rng, max_in_degree=cfg.max_in_degree)
    cpts = [mle_row(family_counts(table.values, table.cardinalities, v, np.flatnonzero(start[:, v])), 1.0)
            for v in range(c.n)]
    weights = regime_weights(aug) if cfg.env_sampling == "regime" else None
    state = ChainState(start, cpts, scorer.total(start))
    trace = [state.score]
    pairs = []
    burn = cfg.burn_in_for(c.n)
    for _ in range(burn):
        state = mh_step(state, scorer, table, c, cfg, rng)
        trace.append(state.score)
    for _ in range(n_emit):
        for _ in range(cfg.thin):
            state = mh_step(state, scorer, table, c, cfg, rng)
            trace.append(state.score)
        data = _sample_pair(state.graph, state.cpts, table, cfg.samples_per_pair, rng,
                            c.system_count, weights)
        pairs.append(TrainingPair(state.graph.copy(), data, chain_id, state.step))
    return pairs, trace


def run_self_augmentation(aug: AugmentedDataset, cfg: McmcConfig, rng: np.random.Generator,
                          return_traces: bool = False):
    """Emit ``cfg.n_pairs`` training pairs from ``cfg.n_chains`` independent chains.

    Environment nodes have no parents in legal graphs, so their fitted CPTs are
    Bernoulli marginals and forward sampling treats them as roots.
    """
    if cfg.n_pairs == 0:
        return ([], []) if return_traces else []
    base, extra = divmod(cfg.n_pairs, cfg.n_chains)
    counts = [base + (i < extra) for i in range(cfg.n_chains)]
    seeds = np.random.SeedSequence(int(rng.integers(2**63))).spawn(cfg.n_chains + 1)
    start = None
    if cfg.seed_mode == "proxy":  # shared by every chain
        start = proxy_seed(aug, np.random.default_rng(seeds[-1]), cfg.max_in_degree, cfg.proxy_restarts,
                           FamilyScorer(aug.table, "bic"))
    jobs = [(aug, cfg, counts[i], i, seeds[i], start) for i in range(cfg.n_chains) if counts[i]]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            results = list(ex.map(_run_chain, jobs))
    else:
        results = [_run_chain(j) for j in jobs]
    pairs = [p for r in results for p in r[0]]
    traces = [r[1] for r in results]
    return (pairs, traces) if return_traces else pairs


def random_graph_pairs(c: JciConstraints, cards: Sequence[int], columns: Sequence[str], n_pairs: int,
                       samples_per_pair: int, rng: np.random.Generator,
                       alpha_range: tuple[float, float] = (0.2, 1.0),
                       weights: np.ndarray | None = None) -> list[TrainingPair]:
    """Training pairs from random legal graphs with Dirichlet-random CPTs (no data fitting)."""
    table_stub = DataTable(tuple(columns), np.zeros((1, len(columns)), dtype=np.int32), tuple(cards))
    pairs = []
    for i in range(n_pairs):
        adj = random_legal_dag(c, rng)
        cpts = []
        for v in range(c.n):
            rows = int(np.prod([cards[p] for p in np.flatnonzero(adj[:, v])], dtype=np.int64))
            a = rng.uniform(*alpha_range)
            draw = rng.dirichlet(np.full(cards[v], a), size=rows)
            draw = np.where(np.isfinite(draw), draw, 0.0) + 1e-12
            cpts.append(draw / draw.sum(axis=1, keepdims=True))
        data = _sample_pair(adj, cpts, table_stub, samples_per_pair, rng, c.system_count, weights)
        pairs.append(TrainingPair(adj, data, i, 0))
    return pairs


# ---------------------------------------------------------------------------
# Archive


def write_pairs(pairs: Sequence[TrainingPair], directory: str | Path, system_count: int | None = None) -> None:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    for k, pair in enumerate(pairs):
        stem = root / f"pair_{k:05d}"
        (stem.with_suffix(".edges")).write_text(PDAG.from_dag(pair.graph).to_edge_list())
        write_table_csv(pair.data, stem.with_suffix(".csv"))
        (stem.with_suffix(".json")).write_text(json.dumps(
            {"chain": pair.chain, "step": pair.step, "n_nodes": int(pair.graph.shape[0]),
             "system_count": system_count, "cardinalities": list(pair.data.cardinalities)}))


def read_pairs(directory: str | Path) -> list[TrainingPair]:
    out = []
    for meta_path in sorted(Path(directory).glob("pair_*.json")):
        meta = json.loads(meta_path.read_text())
        g = PDAG.from_edge_list(meta_path.with_suffix(".edges").read_text(), n=meta["n_nodes"])
        data = read_table_csv(meta_path.with_suffix(".csv"), meta["cardinalities"])
        out.append(TrainingPair(g.directed_adjacency(), data, meta["chain"], meta["step"]))
    return out


def pairs_system_count(directory: str | Path) -> int | None:
    """System-node count recorded next to the pairs, if any."""
    first = next(iter(sorted(Path(directory).glob("pair_*.json"))), None)
    return None if first is None else json.loads(first.read_text()).get("system_count")


def write_traces(traces: Sequence[Sequence[float]], path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write("chain,step,score\n")
        for c, tr in enumerate(traces):
            for s, v in enumerate(tr):
                fh.write(f"{c},{s},{v:.6f}\n")
