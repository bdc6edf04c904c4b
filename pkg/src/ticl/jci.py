"""Joint Causal Inference pooling: stack regime datasets with binary
environment indicators, and build/constrain augmented graphs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .bayesnet import DataTable, InterventionFamily, InterventionSpec, read_table_csv, write_table_csv

ENV_PREFIX = "__env_"


@dataclass(frozen=True)
class JciConstraints:
    """Structural constants of the augmented graph: nodes ``0..d-1`` are
    system variables, ``d..d+K-1`` environment indicators."""

    system_count: int
    env_count: int
    allow_env_env: bool = False
    allow_sys_to_env: bool = False

    @property
    def n(self) -> int:
        return self.system_count + self.env_count

    def is_env(self, v: int) -> bool:
        return v >= self.system_count

    def legal_mask(self) -> np.ndarray:
        """Boolean matrix ``M[i, j]`` = edge ``i -> j`` is allowed."""
        n, d = self.n, self.system_count
        m = np.ones((n, n), dtype=bool)
        np.fill_diagonal(m, False)
        if not self.allow_sys_to_env:
            m[:d, d:] = False
        if not self.allow_env_env:
            m[d:, d:] = False
        return m


def edge_is_legal(c: JciConstraints, src: int, dst: int) -> bool:
    if src == dst:
        return False
    if c.is_env(dst):
        if c.is_env(src):
            return c.allow_env_env
        return c.allow_sys_to_env
    return True


@dataclass(frozen=True)
class AugmentedDataset:
    table: DataTable
    k: int
    system_count: int

    def __post_init__(self):
        d = self.system_count
        if self.table.values.shape[1] != d + self.k:
            raise ValueError("table width must be system_count + k")
        env = self.table.values[:, d:]
        if self.k and (env.max() > 1 or env.sum(axis=1).max() > 1):
            raise ValueError("environment columns must be one-hot or all-zero per row")

    @property
    def constraints(self) -> JciConstraints:
        return JciConstraints(self.system_count, self.k)

    @property
    def n(self) -> int:
        return self.system_count + self.k

    def regime_of_rows(self) -> np.ndarray:
        env = self.table.values[:, self.system_count:]
        if self.k == 0:
            return np.zeros(self.table.n_rows, dtype=np.int32)
        return np.where(env.any(axis=1), env.argmax(axis=1) + 1, 0).astype(np.int32)


def env_column_names(k: int) -> list[str]:
    return [f"{ENV_PREFIX}{i}" for i in range(1, k + 1)]


def pool(datasets: Sequence[DataTable], fam: InterventionFamily) -> AugmentedDataset:
    """Stack regime datasets by rows and append one indicator per interventional regime."""
    if len(datasets) != len(fam.regimes):
        raise ValueError(f"{len(datasets)} datasets for {len(fam.regimes)} regimes")
    first = datasets[0]
    for ds in datasets[1:]:
        if ds.columns != first.columns or ds.cardinalities != first.cardinalities:
            raise ValueError("all datasets must share the same column schema")
    k = len(datasets) - 1
    blocks = []
    regime = []
    for r, ds in enumerate(datasets):
        env = np.zeros((ds.n_rows, k), dtype=np.int32)
        if r:
            env[:, r - 1] = 1
        blocks.append(np.hstack([ds.values, env]))
        regime.append(np.full(ds.n_rows, r, dtype=np.int32))
    table = DataTable(
        columns=tuple(first.columns) + tuple(env_column_names(k)),
        values=np.vstack(blocks),
        cardinalities=tuple(first.cardinalities) + (2,) * k,
        regime_id=np.concatenate(regime),
    )
    return AugmentedDataset(table, k, len(first.columns))


def split(aug: AugmentedDataset) -> list[DataTable]:
    """Inverse of :func:`pool`: one system-column table per regime."""
    d = aug.system_count
    regime = aug.regime_of_rows()
    cols = aug.table.columns[:d]
    cards = aug.table.cardinalities[:d]
    return [DataTable(cols, aug.table.values[regime == r, :d], cards) for r in range(aug.k + 1)]


def augment_graph(dag: np.ndarray, fam: InterventionFamily) -> np.ndarray:
    """Add one environment node per interventional regime with edges to its targets."""
    dag = np.asarray(dag, dtype=bool)
    d = dag.shape[0]
    k = fam.k
    out = np.zeros((d + k, d + k), dtype=bool)
    out[:d, :d] = dag
    for r, targets in enumerate(fam.target_sets):
        for t in targets:
            if not 0 <= t < d:
                raise ValueError(f"intervention target {t} outside the {d} system nodes")
            out[d + r, t] = True
    return out


def targets_from_augmented(adj: np.ndarray, system_count: int) -> dict[int, frozenset[int]]:
    d = system_count
    return {r + 1: frozenset(int(t) for t in np.flatnonzero(adj[d + r, :d]))
            for r in range(adj.shape[0] - d)}


def write_regime_manifest(fam: InterventionFamily, path: str | Path, known: bool = True) -> None:
    regimes = []
    for r, spec in enumerate(fam.regimes):
        entry: dict = {"regime": r, "kind": "observational" if r == 0 else spec.kind}
        if known or r == 0:
            entry["targets"] = sorted(spec.targets)
        regimes.append(entry)
    Path(path).write_text(json.dumps({"regimes": regimes}, indent=1))


def read_regime_manifest(path: str | Path) -> tuple[int, dict[int, frozenset[int]] | None]:
    """Returns the number of interventional regimes and the known targets, if listed."""
    doc = json.loads(Path(path).read_text())
    regimes = doc["regimes"]
    known = {}
    for entry in regimes[1:]:
        if "targets" not in entry:
            return len(regimes) - 1, None
        known[entry["regime"]] = frozenset(entry["targets"])
    return len(regimes) - 1, known


def family_from_manifest(path: str | Path) -> InterventionFamily:
    doc = json.loads(Path(path).read_text())
    specs = [InterventionSpec(frozenset())]
    for entry in doc["regimes"][1:]:
        specs.append(InterventionSpec(frozenset(entry["targets"]), kind=entry.get("kind", "soft")))
    return InterventionFamily(tuple(specs))


def write_augmented(aug: AugmentedDataset, directory: str | Path) -> Path:
    """Pooled table as ``pooled.csv`` plus a ``pooled.json`` header."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    write_table_csv(aug.table, root / "pooled.csv")
    (root / "pooled.json").write_text(json.dumps(
        {"k": aug.k, "system_count": aug.system_count, "cardinalities": list(aug.table.cardinalities)}))
    return root


def read_augmented(directory: str | Path) -> AugmentedDataset:
    root = Path(directory)
    meta = json.loads((root / "pooled.json").read_text())
    table = read_table_csv(root / "pooled.csv", meta["cardinalities"])
    return AugmentedDataset(table, meta["k"], meta["system_count"])
