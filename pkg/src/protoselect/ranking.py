"""Cross-dataset representation ranking.

For k datasets over a shared feature space, each dataset selects its own
prototypes; those prototypes are then scored against every other dataset
by the selection objective, giving a directed "who represents whom"
structure exportable as a DOT graph with a JSON mirror.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .kernel import Dataset, KernelSpec, kernel_matrix, mean_map
from .nnqp import SolverConfig, objective, solve_restricted
from .selectors import SelectionConfig, proto_dash


@dataclass(frozen=True)
class RankMatrix:
    """Pairwise representation scores and their per-target ranks.

    objective[i, j] is the objective value of dataset j's prototypes
    evaluated against target dataset i; the diagonal holds each dataset's
    self-fit, which never participates in ranking. rank[i, j] ranks j among
    the representers of i (1 is best); the diagonal is 0.
    """

    names: tuple[str, ...]
    objective: np.ndarray
    rank: np.ndarray

    def __post_init__(self):
        k = len(self.names)
        obj = np.asarray(self.objective, dtype=float)
        rnk = np.asarray(self.rank, dtype=int)
        if obj.shape != (k, k) or rnk.shape != (k, k):
            raise InputError("objective and rank must be k x k")
        for i in range(k):
            row = sorted(rnk[i, j] for j in range(k) if j != i)
            if row != list(range(1, k)):
                raise InputError(f"rank row {i} is not a permutation of 1..{k - 1}")
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "rank", rnk)

    @property
    def k(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class AverageRanks:
    """Per-dataset mean rank (diagonal excluded), sorted ascending."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.names),):
            raise InputError("values must align with names")
        if np.any(np.diff(vals) < 0):
            raise InputError("values must be sorted ascending")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class GraphExport:
    """DOT text plus the equivalent JSON structure."""

    dot: str
    data: dict


def rank_sources(datasets: list[Dataset], m: int, spec: KernelSpec,
                 names: list[str] | None = None,
                 solver: SolverConfig | None = None,
                 reweight: bool = True,
                 threads: int = 1) -> RankMatrix:
    """Score how well each dataset's prototypes represent every other one.

    Each dataset j selects its own m prototypes (gradient-driven, against
    itself). For every target i != j the fixed support is scored against
    target i's mean map; by default the weights are re-solved for that
    target, `reweight=False` keeps the self-fit weights frozen instead.
    Ranks within each target row break ties by dataset order.
    """
    k = len(datasets)
    if k < 2:
        raise InputError("ranking needs at least two datasets")
    dims = {ds.d for ds in datasets}
    if len(dims) != 1:
        raise InputError("datasets must share a feature dimension")
    if names is None:
        names = [f"dataset_{i}" for i in range(k)]
    if len(names) != k or len(set(names)) != k:
        raise InputError("names must be unique and align with datasets")
    solver = solver or SolverConfig()

    def self_select(j: int):
        K = kernel_matrix(datasets[j], spec)
        mu_self = mean_map(datasets[j], datasets[j], spec)
        res = proto_dash(K, mu_self, SelectionConfig(m=min(m, datasets[j].n), solver=solver))
        return K, res

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            selections = list(pool.map(self_select, range(k)))
    else:
        selections = [self_select(j) for j in range(k)]

    obj = np.zeros((k, k))

    def cross_eval(pair):
        i, j = pair
        K, res = selections[j]
        mu_i = mean_map(datasets[i], datasets[j], spec)
        if reweight:
            w = solve_restricted(K, mu_i, res.indices, solver)
        else:
            w = res.weights
        return i, j, objective(w, K, mu_i)

    jobs = [(i, j) for i in range(k) for j in range(k) if i != j]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            evaluated = list(pool.map(cross_eval, jobs))
    else:
        evaluated = [cross_eval(p) for p in jobs]
    for i, j, value in evaluated:
        obj[i, j] = value
    for j in range(k):
        obj[j, j] = selections[j][1].final_objective

    rank = np.zeros((k, k), dtype=int)
    for i in range(k):
        others = [j for j in range(k) if j != i]
        ordered = sorted(others, key=lambda j: (-obj[i, j], j))
        for pos, j in enumerate(ordered, start=1):
            rank[i, j] = pos
    return RankMatrix(names=tuple(names), objective=obj, rank=rank)


def average_ranks(rm: RankMatrix) -> AverageRanks:
    """Column means of the rank matrix, diagonal excluded, sorted ascending.

    Ties keep dataset input order.
    """
    k = rm.k
    means = np.array(
        [sum(rm.rank[i, j] for i in range(k) if i != j) / (k - 1) for j in range(k)]
    )
    order = np.argsort(means, kind="stable")
    return AverageRanks(
        names=tuple(rm.names[j] for j in order),
        values=means[order],
    )


def _dot_quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_graph(rm: RankMatrix, top_t: int) -> GraphExport:
    """Directed graph of the top-t representers of every dataset.

    Emits an edge j -> i whenever dataset j ranks within the top t
    representers of target i, labeled with the rank. Node and edge order
    is deterministic, so repeated exports are byte-identical.
    """
    k = rm.k
    if not 1 <= top_t <= k - 1:
        raise InputError(f"top_t must be in [1, {k - 1}]")
    edges = []
    for i in range(k):
        row = sorted(
            (int(rm.rank[i, j]), j) for j in range(k) if j != i and rm.rank[i, j] <= top_t
        )
        for rank_value, j in row:
            edges.append(
                {
                    "from": rm.names[j],
                    "to": rm.names[i],
                    "rank": rank_value,
                    "objective": float(rm.objective[i, j]),
                }
            )
    lines = ["digraph ranking {"]
    for name in rm.names:
        lines.append(f"  {_dot_quote(name)} [label={_dot_quote(name)}];")
    for e in edges:
        lines.append(
            f"  {_dot_quote(e['from'])} -> {_dot_quote(e['to'])} [label=\"{e['rank']}\"];"
        )
    lines.append("}")
    return GraphExport(
        dot="\n".join(lines) + "\n",
        data={"nodes": list(rm.names), "edges": edges},
    )
