"""Brute-force and spectral checks of the selection guarantees.

Everything here is deliberately exhaustive: optimal subsets come from full
enumeration, curvature constants from principal-minor spectra, and the
submodularity ratio from enumerating candidate sets. The guards keep all
of it at desk scale, where exactness is the point.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, GuardError, InputError
from .kernel import Dataset, KernelMatrix, KernelSpec, MeanMap, kernel_matrix, mean_map
from .nnqp import SolverConfig, SupportSet, WeightVector, gradient, objective, solve_restricted
from .selectors import SelectionConfig, proto_dash, proto_greedy

ENUMERATION_CAP = 1_000_000
MAX_ENUMERABLE_ROWS = 20
_SLACK = 1e-9


@dataclass(frozen=True)
class GuaranteeReport:
    """Outcome of checking the selection guarantee on one instance.

    `bound` is (1 - exp(-3*c*gamma / (4*C_tilde))) * f_opt and `satisfied`
    records whether the gradient-driven selector's value clears it within
    numerical slack.
    """

    f_dash: float
    f_opt: float
    gamma: float
    c: float
    C_tilde: float
    bound: float
    satisfied: bool

    def __post_init__(self):
        if not (0 < self.c <= self.C_tilde):
            raise InputError("curvature constants must satisfy 0 < c <= C_tilde")
        if self.gamma <= 0:
            raise InputError("submodularity ratio must be positive")
        if self.satisfied != (self.f_dash >= self.bound - _SLACK):
            raise InputError("satisfied flag is inconsistent with the bound")

    def to_dict(self) -> dict:
        return {
            "f_dash": self.f_dash,
            "f_opt": self.f_opt,
            "gamma": self.gamma,
            "c": self.c,
            "C_tilde": self.C_tilde,
            "bound": self.bound,
            "satisfied": self.satisfied,
        }


def _guard_subsets(n2: int, m: int):
    if n2 > MAX_ENUMERABLE_ROWS:
        raise GuardError(f"instance too large to enumerate: n2={n2} > {MAX_ENUMERABLE_ROWS}")
    if math.comb(n2, m) > ENUMERATION_CAP:
        raise GuardError(f"too many subsets to enumerate: C({n2},{m}) > {ENUMERATION_CAP}")


class _SetFunction:
    """Memoized evaluation of the restricted-optimum set function."""

    def __init__(self, K: KernelMatrix, mu: MeanMap, solver: SolverConfig | None):
        self.K = K
        self.mu = mu
        self.solver = solver or SolverConfig()
        self._cache: dict[tuple[int, ...], float] = {(): 0.0}

    def value(self, subset) -> float:
        key = tuple(sorted(int(j) for j in subset))
        got = self._cache.get(key)
        if got is None:
            w = solve_restricted(self.K, self.mu, SupportSet(key), self.solver)
            got = objective(w, self.K, self.mu)
            self._cache[key] = got
        return got


def exhaustive_optimal(K: KernelMatrix, mu: MeanMap, m: int,
                       solver: SolverConfig | None = None,
                       _fn: _SetFunction | None = None) -> tuple[SupportSet, float]:
    """Best support of size at most m by full enumeration.

    Ties keep the smaller, lexicographically earlier subset. Guarded to
    n2 <= 20 and at most one million subsets.
    """
    n2 = K.n2
    if not 1 <= m <= n2:
        raise InputError(f"m must be in [1, {n2}]")
    _guard_subsets(n2, m)
    fn = _fn or _SetFunction(K, mu, solver)
    best_set: tuple[int, ...] = ()
    best_val = 0.0
    for size in range(1, m + 1):
        for combo in itertools.combinations(range(n2), size):
            val = fn.value(combo)
            if val > best_val:
                best_set, best_val = combo, val
    return SupportSet(best_set), best_val


def submodularity_ratio(K: KernelMatrix, mu: MeanMap, L: SupportSet, r: int,
                        solver: SolverConfig | None = None,
                        _fn: _SetFunction | None = None) -> float:
    """Minimum over disjoint candidate sets S, |S| <= r, of the ratio of
    summed singleton gains over the joint gain at L.

    Candidate sets whose joint gain is at most 1e-12 are skipped; the
    ratio is only defined under a strict objective increase.
    """
    n2 = K.n2
    if r < 1:
        raise InputError("r must be positive")
    rest = [j for j in range(n2) if j not in L]
    if n2 > MAX_ENUMERABLE_ROWS or sum(
        math.comb(len(rest), s) for s in range(1, min(r, len(rest)) + 1)
    ) > ENUMERATION_CAP:
        raise GuardError("instance too large to enumerate candidate sets")
    fn = _fn or _SetFunction(K, mu, solver)
    base = fn.value(L)
    single_gain = {j: fn.value(tuple(L) + (j,)) - base for j in rest}
    best = None
    for size in range(1, min(r, len(rest)) + 1):
        for S in itertools.combinations(rest, size):
            denom = fn.value(tuple(L) + S) - base
            if denom <= 1e-12:
                continue
            ratio = sum(single_gain[j] for j in S) / denom
            if best is None or ratio < best:
                best = ratio
    if best is None:
        raise DegenerateDataError("no candidate set strictly increases the objective at L")
    return float(best)


def gamma_over_prefixes(K: KernelMatrix, mu: MeanMap, selection: SupportSet, r: int,
                        solver: SolverConfig | None = None,
                        _fn: _SetFunction | None = None) -> float:
    """Submodularity ratio minimized over all prefixes of a selection order.

    This is the quantity the selection guarantee consumes: the greedy
    recursion only ever conditions on the prefixes actually visited.
    Prefixes at which nothing can strictly increase the objective are
    skipped.
    """
    fn = _fn or _SetFunction(K, mu, solver)
    order = tuple(selection)
    best = None
    for cut in range(len(order) + 1):
        prefix = SupportSet(order[:cut])
        try:
            ratio = submodularity_ratio(K, mu, prefix, r, solver, _fn=fn)
        except DegenerateDataError:
            continue
        if best is None or ratio < best:
            best = ratio
    if best is None:
        raise DegenerateDataError("objective cannot be increased from any prefix")
    return float(best)


def rsc_rsm_bounds(K: KernelMatrix, k: int) -> tuple[float, float]:
    """Extreme eigenvalues over all size-k principal submatrices.

    Returns (c, C) where c is the smallest eigenvalue over the minors and C
    the largest; these bound the curvature of the objective between
    k-sparse vectors. k = n2 uses the full spectrum directly.
    """
    n2 = K.n2
    if not 1 <= k <= n2:
        raise InputError(f"k must be in [1, {n2}]")
    if k == n2:
        eig = np.linalg.eigvalsh(K.entries)
        return float(eig[0]), float(eig[-1])
    if n2 > MAX_ENUMERABLE_ROWS:
        raise GuardError(f"principal-minor enumeration capped at n2={MAX_ENUMERABLE_ROWS}")
    if k == 1:
        diag = np.diagonal(K.entries)
        return float(diag.min()), float(diag.max())
    c = np.inf
    C = -np.inf
    for combo in itertools.combinations(range(n2), k):
        eig = np.linalg.eigvalsh(K.entries[np.ix_(combo, combo)])
        c = min(c, float(eig[0]))
        C = max(C, float(eig[-1]))
    return c, C


def _verify_core(K: KernelMatrix, mu: MeanMap, m: int,
                 solver: SolverConfig | None, include_greedy: bool) -> dict:
    fn = _SetFunction(K, mu, solver)
    dash = proto_dash(K, mu, SelectionConfig(m=m, solver=solver or SolverConfig()))
    f_dash = dash.final_objective
    _, f_opt = exhaustive_optimal(K, mu, m, solver, _fn=fn)
    gamma = gamma_over_prefixes(K, mu, dash.indices, m, solver, _fn=fn)
    c_m, _ = rsc_rsm_bounds(K, m)
    _, C_tilde = rsc_rsm_bounds(K, 1)
    bound = (1.0 - math.exp(-3.0 * c_m * gamma / (4.0 * C_tilde))) * f_opt
    out = {
        "m": m,
        "f_dash": f_dash,
        "f_opt": f_opt,
        "gamma": gamma,
        "c": c_m,
        "C_tilde": C_tilde,
        "bound": bound,
        "satisfied": bool(f_dash >= bound - _SLACK),
    }
    if include_greedy:
        greedy = proto_greedy(K, mu, SelectionConfig(m=m, solver=solver or SolverConfig()))
        f_greedy = greedy.final_objective
        gamma_g = gamma_over_prefixes(K, mu, greedy.indices, m, solver, _fn=fn)
        bound_g = (1.0 - math.exp(-gamma_g)) * f_opt
        out.update(
            {
                "f_greedy": f_greedy,
                "gamma_greedy": gamma_g,
                "greedy_bound": bound_g,
                "greedy_satisfied": bool(f_greedy >= bound_g - _SLACK),
            }
        )
    return out


def verify_guarantee(K: KernelMatrix, mu: MeanMap, m: int,
                     solver: SolverConfig | None = None) -> GuaranteeReport:
    """Check the gradient-selection guarantee on one enumerable instance."""
    core = _verify_core(K, mu, m, solver, include_greedy=False)
    return GuaranteeReport(
        f_dash=core["f_dash"],
        f_opt=core["f_opt"],
        gamma=core["gamma"],
        c=core["c"],
        C_tilde=core["C_tilde"],
        bound=core["bound"],
        satisfied=core["satisfied"],
    )


def verify_instance(K: KernelMatrix, mu: MeanMap, m: int,
                    solver: SolverConfig | None = None) -> dict:
    """Per-instance verdict covering both selectors; used by sweeps."""
    return _verify_core(K, mu, m, solver, include_greedy=True)


def finite_difference_check(K: KernelMatrix, mu: MeanMap, w: WeightVector,
                            step: float) -> float:
    """Largest disagreement between the gradient and central differences.

    Checks the support coordinates, or every coordinate when the support
    is empty. Coordinates whose gradient is within 1e-6 of zero report the
    absolute error; the rest report relative error.
    """
    if step <= 0:
        raise InputError("step must be positive")
    coords = list(w.support) if len(w.support) else list(range(K.n2))
    dense = w.dense()
    entries, mu_entries = K.entries, mu.entries

    def value(v: np.ndarray) -> float:
        return float(v @ mu_entries - 0.5 * v @ (entries @ v))

    g = gradient(w, K, mu)
    worst = 0.0
    for j in coords:
        hi, lo = dense.copy(), dense.copy()
        hi[j] += step
        lo[j] -= step
        fd = (value(hi) - value(lo)) / (2.0 * step)
        err = abs(fd - g[j])
        if abs(g[j]) >= 1e-6:
            err /= abs(g[j])
        worst = max(worst, err)
    return worst


def random_gaussian_instance(rng: np.random.Generator,
                             max_n1: int = 15, max_n2: int = 10, max_m: int = 3,
                             sigma_range: tuple[float, float] = (0.5, 2.0),
                             dims: tuple[int, ...] = (2, 3)) -> tuple[KernelMatrix, MeanMap, int, dict]:
    """Seeded random instance for verification sweeps.

    Draws sizes, a bandwidth, standard-normal data, and builds the Gram
    matrix plus mean map; returns them with the drawn sparsity level and a
    metadata dict describing the draw.
    """
    d = int(rng.choice(dims))
    n1 = int(rng.integers(2, max_n1 + 1))
    n2 = int(rng.integers(2, max_n2 + 1))
    m = int(rng.integers(1, min(max_m, n2) + 1))
    sigma = float(rng.uniform(*sigma_range))
    spec = KernelSpec("gaussian", bandwidth=sigma)
    source = Dataset(rng.normal(size=(n2, d)))
    target = Dataset(rng.normal(size=(n1, d)))
    K = kernel_matrix(source, spec)
    mu = mean_map(target, source, spec)
    return K, mu, m, {"n1": n1, "n2": n2, "d": d, "m": m, "sigma": sigma}


def identity_kernel_instance(rng: np.random.Generator, max_n2: int = 10,
                             max_m: int = 3) -> tuple[KernelMatrix, MeanMap, int, dict]:
    """Modular test instance: identity Gram matrix, positive mean map."""
    n2 = int(rng.integers(2, max_n2 + 1))
    m = int(rng.integers(1, min(max_m, n2) + 1))
    K = KernelMatrix(entries=np.eye(n2), spec=KernelSpec("linear", jitter=0.0))
    mu = MeanMap(entries=rng.uniform(0.2, 1.0, size=n2), n1=1)
    return K, mu, m, {"n1": 1, "n2": n2, "m": m, "kernel": "identity"}
