"""Prototype selectors: gradient-driven, greedy, baselines, and criticisms.

All selectors consume a precomputed Gram matrix and mean map and return a
SelectionResult whose traces record the objective and the selected
coordinate's gradient after each step. Argmax ties always break toward the
lowest index so runs are reproducible.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InputError, SolverError
from .kernel import KernelMatrix, MeanMap
from .nnqp import SolverConfig, SupportSet, WeightVector, objective, solve_restricted

PROTODASH = "protodash"
PROTOGREEDY = "protogreedy"
L2C_EQUAL = "l2c_equal"
L2C_ADAPTED = "l2c_adapted"
RANDOM_W = "random_w"


@dataclass(frozen=True)
class SelectionConfig:
    """Termination rule and knobs shared by the selectors.

    Exactly one of `m` (sparsity level) and `epsilon` (minimal objective
    increase) must be set. `seed` is only consulted by random_w;
    `oversample_factor` > 1 selects factor*m prototypes and keeps the m of
    largest weight, which requires m-termination and a weight-learning
    method.
    """

    m: int | None = None
    epsilon: float | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: int | None = None
    oversample_factor: int = 1

    def __post_init__(self):
        if (self.m is None) == (self.epsilon is None):
            raise InputError("set exactly one of m and epsilon")
        if self.m is not None and self.m < 0:
            raise InputError("m must be non-negative")
        if self.epsilon is not None and (not np.isfinite(self.epsilon) or self.epsilon <= 0):
            raise InputError("epsilon must be positive")
        if self.oversample_factor < 1:
            raise InputError("oversample_factor must be at least 1")
        if self.oversample_factor > 1 and self.m is None:
            raise InputError("oversampling requires m-termination")


@dataclass(frozen=True)
class SelectionResult:
    """Ordered prototype indices with weights, traces, and per-step timings."""

    method: str
    indices: SupportSet
    weights: WeightVector
    objective_trace: np.ndarray
    gradient_trace: np.ndarray
    wall_times: np.ndarray
    early_stopped: bool = False

    def __post_init__(self):
        t = len(self.indices)
        for name in ("objective_trace", "gradient_trace", "wall_times"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (t,):
                raise InputError(f"{name} must have one entry per selected index")
            object.__setattr__(self, name, arr)

    @property
    def final_objective(self) -> float:
        return float(self.objective_trace[-1]) if len(self.indices) else 0.0


@dataclass(frozen=True)
class CriticismResult:
    """Worst-represented non-prototypes, scores sorted non-increasing."""

    indices: tuple[int, ...]
    scores: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        if scores.shape != (len(self.indices),):
            raise InputError("scores must align with indices")
        if np.any(np.diff(scores) > 0):
            raise InputError("scores must be non-increasing")
        object.__setattr__(self, "scores", scores)


def _check_instance(K: KernelMatrix, mu: MeanMap, cfg: SelectionConfig):
    if mu.n2 != K.n2:
        raise InputError("kernel matrix and mean map sizes disagree")
    if cfg.m is not None and cfg.m > K.n2:
        raise InputError(f"m={cfg.m} exceeds the number of source rows {K.n2}")


def _result(method, sel, weights, obj, grad, times, early) -> SelectionResult:
    return SelectionResult(
        method=method,
        indices=SupportSet(tuple(sel)),
        weights=weights,
        objective_trace=np.asarray(obj, dtype=float),
        gradient_trace=np.asarray(grad, dtype=float),
        wall_times=np.asarray(times, dtype=float),
        early_stopped=early,
    )


def _attach_partial(err: SolverError, method, sel, weights, obj, grad, times) -> SolverError:
    err.partial = _result(method, sel, weights, obj, grad, times, early=False)
    return err


def _with_oversampling(select_impl, K, mu, cfg: SelectionConfig) -> SelectionResult:
    if cfg.oversample_factor == 1:
        return select_impl(K, mu, cfg)
    wide = replace(cfg, m=min(cfg.m * cfg.oversample_factor, K.n2), oversample_factor=1)
    full = select_impl(K, mu, wide)
    keep = min(cfg.m, len(full.indices))
    if keep == len(full.indices):
        return full
    return top_m_by_weight(full, keep, K, mu, cfg.solver)


def proto_dash(K: KernelMatrix, mu: MeanMap, cfg: SelectionConfig,
               threads: int = 1) -> SelectionResult:
    """Select prototypes by repeatedly taking the largest-gradient candidate.

    Each step appends the index maximizing the current gradient of the
    objective, then re-solves the non-negative weights on the grown
    support. Stops at the sparsity level, when the realized objective
    increase falls below epsilon, or early once no remaining gradient is
    positive (further additions cannot change the objective).
    """
    return _with_oversampling(_dash_impl, K, mu, cfg)


def _dash_impl(K, mu, cfg) -> SelectionResult:
    _check_instance(K, mu, cfg)
    n2 = K.n2
    target = cfg.m if cfg.m is not None else n2
    entries, mu_entries = K.entries, mu.entries
    sel: list[int] = []
    obj, grad, times = [], [], []
    weights = WeightVector.zeros(n2)
    f_cur = 0.0
    g = mu_entries.copy()
    early = False
    while len(sel) < target:
        start = time.perf_counter()
        masked = g.copy()
        masked[sel] = -np.inf
        j0 = int(np.argmax(masked))
        if masked[j0] <= 0.0:
            early = True
            break
        try:
            solved = solve_restricted(K, mu, weights.support.extended(j0), cfg.solver,
                                      warm_start=weights)
        except SolverError as err:
            raise _attach_partial(err, PROTODASH, sel, weights, obj, grad, times)
        f_new = objective(solved, K, mu)
        if cfg.epsilon is not None and f_new - f_cur < cfg.epsilon:
            break
        sel.append(j0)
        weights = solved
        f_cur = f_new
        g = mu_entries - entries[:, weights.support.as_array()] @ weights.weights
        obj.append(f_new)
        grad.append(masked[j0])
        times.append(time.perf_counter() - start)
    return _result(PROTODASH, sel, weights, obj, grad, times, early)


def proto_greedy(K: KernelMatrix, mu: MeanMap, cfg: SelectionConfig,
                 threads: int = 1) -> SelectionResult:
    """Select prototypes by exhaustively scoring every candidate's gain.

    Each step solves the restricted weights for every candidate extension
    and appends the index with the largest realized objective increase.
    Candidates whose gradient is non-positive are known to leave the
    objective unchanged and are scored zero without a solve. Termination
    matches proto_dash.
    """
    return _with_oversampling(
        lambda K_, mu_, cfg_: _greedy_impl(K_, mu_, cfg_, threads), K, mu, cfg
    )


def _greedy_impl(K, mu, cfg, threads=1) -> SelectionResult:
    _check_instance(K, mu, cfg)
    n2 = K.n2
    target = cfg.m if cfg.m is not None else n2
    entries, mu_entries = K.entries, mu.entries
    sel: list[int] = []
    obj, grad, times = [], [], []
    weights = WeightVector.zeros(n2)
    f_cur = 0.0
    early = False
    while len(sel) < target:
        start = time.perf_counter()
        if sel:
            g = mu_entries - entries[:, weights.support.as_array()] @ weights.weights
        else:
            g = mu_entries.copy()
        candidate = np.ones(n2, dtype=bool)
        candidate[sel] = False
        masked = np.where(candidate, g, -np.inf)
        if masked.max() <= 0.0:
            early = True
            break
        gains = np.full(n2, -np.inf)
        gains[candidate & (g <= 0.0)] = 0.0
        to_solve = np.flatnonzero(candidate & (g > 0.0))

        def realized_gain(j: int) -> float:
            solved = solve_restricted(K, mu, weights.support.extended(int(j)),
                                      cfg.solver, warm_start=weights)
            return objective(solved, K, mu) - f_cur

        try:
            if threads > 1 and to_solve.size > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    values = list(pool.map(realized_gain, to_solve))
            else:
                values = [realized_gain(j) for j in to_solve]
        except SolverError as err:
            raise _attach_partial(err, PROTOGREEDY, sel, weights, obj, grad, times)
        gains[to_solve] = values
        j0 = int(np.argmax(gains))
        if cfg.epsilon is not None and gains[j0] < cfg.epsilon:
            break
        if g[j0] > 0.0:
            weights = solve_restricted(K, mu, weights.support.extended(j0), cfg.solver,
                                       warm_start=weights)
            f_cur = objective(weights, K, mu)
        else:
            # inert addition: the optimum is unchanged, the new coordinate stays 0
            weights = WeightVector(weights.support.extended(j0),
                                   np.append(weights.weights, 0.0), n2)
        sel.append(j0)
        obj.append(f_cur)
        grad.append(g[j0])
        times.append(time.perf_counter() - start)
    return _result(PROTOGREEDY, sel, weights, obj, grad, times, early)


def l2c_equal(K: KernelMatrix, mu: MeanMap, cfg: SelectionConfig) -> SelectionResult:
    """Greedy baseline with fixed uniform weights instead of learned ones.

    Every selected index carries weight 1/|L|; each step adds the candidate
    maximizing the objective at the uniform weight vector. Only
    m-termination is supported.
    """
    return _l2c_impl(K, mu, cfg, L2C_EQUAL)


def l2c_adapted(K: KernelMatrix, mu: MeanMap, cfg: SelectionConfig) -> SelectionResult:
    """Uniform-weight baseline driven by a cross-dataset mean map.

    Identical to l2c_equal; the caller supplies a mean map computed against
    a different target population.
    """
    return _l2c_impl(K, mu, cfg, L2C_ADAPTED)


def _l2c_impl(K, mu, cfg, method) -> SelectionResult:
    _check_instance(K, mu, cfg)
    if cfg.m is None:
        raise InputError("uniform-weight baseline supports m-termination only")
    if cfg.oversample_factor != 1:
        raise InputError("oversampling is meaningless with uniform weights")
    n2 = K.n2
    entries, mu_entries = K.entries, mu.entries
    sel: list[int] = []
    obj, grad, times = [], [], []
    col_sum = np.zeros(n2)  # sum of K columns over the selected set
    mu_sum = 0.0
    quad_sum = 0.0  # sum of K over all selected pairs
    for step in range(cfg.m):
        start = time.perf_counter()
        t = step + 1
        vals = (mu_sum + mu_entries) / t - (
            quad_sum + 2.0 * col_sum + np.diagonal(entries)
        ) / (2.0 * t * t)
        vals[sel] = -np.inf
        j0 = int(np.argmax(vals))
        grad.append(mu_entries[j0] - (col_sum[j0] / step if step else 0.0))
        sel.append(j0)
        mu_sum += mu_entries[j0]
        quad_sum += 2.0 * col_sum[j0] + entries[j0, j0]
        col_sum += entries[:, j0]
        obj.append(float(vals[j0]))
        times.append(time.perf_counter() - start)
    m = len(sel)
    weights = WeightVector(SupportSet(tuple(sel)), np.full(m, 1.0 / m) if m else np.zeros(0), n2)
    return _result(method, sel, weights, obj, grad, times, early=False)


def random_w(K: KernelMatrix, mu: MeanMap, cfg: SelectionConfig) -> SelectionResult:
    """Uniformly sample m distinct prototypes, then learn their weights."""
    _check_instance(K, mu, cfg)
    if cfg.m is None:
        raise InputError("random_w supports m-termination only")
    if cfg.seed is None:
        raise InputError("random_w needs a seed")
    if cfg.oversample_factor != 1:
        return _with_oversampling(lambda K_, mu_, c_: random_w(K_, mu_, c_), K, mu, cfg)
    n2 = K.n2
    rng = np.random.default_rng(cfg.seed)
    order = [int(j) for j in rng.choice(n2, size=cfg.m, replace=False)]
    entries, mu_entries = K.entries, mu.entries
    sel: list[int] = []
    obj, grad, times = [], [], []
    weights = WeightVector.zeros(n2)
    for j in order:
        start = time.perf_counter()
        if sel:
            g_j = float(mu_entries[j] - entries[j, weights.support.as_array()] @ weights.weights)
        else:
            g_j = float(mu_entries[j])
        try:
            weights = solve_restricted(K, mu, weights.support.extended(j), cfg.solver,
                                       warm_start=weights)
        except SolverError as err:
            raise _attach_partial(err, RANDOM_W, sel, weights, obj, grad, times)
        sel.append(j)
        obj.append(objective(weights, K, mu))
        grad.append(g_j)
        times.append(time.perf_counter() - start)
    return _result(RANDOM_W, sel, weights, obj, grad, times, early=False)


def top_m_by_weight(result: SelectionResult, m: int, K: KernelMatrix, mu: MeanMap,
                    solver: SolverConfig | None = None) -> SelectionResult:
    """Keep the m largest-weight prototypes and re-solve on the kept support.

    Ties break toward the earlier-selected index. The kept indices retain
    their selection order and the objective trace is recomputed over the
    kept prefixes.
    """
    t = len(result.indices)
    if m > t:
        raise InputError(f"cannot keep {m} of {t} prototypes")
    order = sorted(range(t), key=lambda p: (-result.weights.weights[p], p))[:m]
    kept = sorted(order)
    idx = tuple(result.indices.indices[p] for p in kept)
    solver = solver or SolverConfig()
    sel: list[int] = []
    obj, grad, times = [], [], []
    weights = WeightVector.zeros(result.weights.dimension)
    entries, mu_entries = K.entries, mu.entries
    for j in idx:
        start = time.perf_counter()
        if sel:
            g_j = float(mu_entries[j] - entries[j, weights.support.as_array()] @ weights.weights)
        else:
            g_j = float(mu_entries[j])
        weights = solve_restricted(K, mu, weights.support.extended(j), solver,
                                   warm_start=weights)
        sel.append(j)
        obj.append(objective(weights, K, mu))
        grad.append(g_j)
        times.append(time.perf_counter() - start)
    return _result(result.method, sel, weights, obj, grad, times, result.early_stopped)


def criticisms(result: SelectionResult, K: KernelMatrix, mu: MeanMap,
               c: int) -> CriticismResult:
    """Rank non-prototypes by witness deviation |mu_j - K_j.w|.

    The deviation is the gradient magnitude of the objective at the final
    weights; large values mark points the weighted prototypes represent
    poorly. Returns the c largest, descending, ties toward the lower index.
    """
    n2 = K.n2
    available = n2 - len(result.indices)
    if c < 1 or c > available:
        raise InputError(f"c must be in [1, {available}]")
    if len(result.weights.support):
        s = result.weights.support.as_array()
        g = mu.entries - K.entries[:, s] @ result.weights.weights
    else:
        g = mu.entries.copy()
    mask = np.ones(n2, dtype=bool)
    mask[list(result.indices)] = False
    pool = np.flatnonzero(mask)
    scores = np.abs(g[pool])
    order = np.argsort(-scores, kind="stable")[:c]
    return CriticismResult(
        indices=tuple(int(pool[i]) for i in order),
        scores=scores[order],
    )
