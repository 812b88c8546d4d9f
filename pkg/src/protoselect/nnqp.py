"""Non-negative maximization of l(w) = w'mu - w'Kw/2 on a restricted support.

The solver is an active-set method in the Lawson-Hanson style: it grows a
passive (free) set one coordinate at a time, solves the unconstrained
subproblem on the passive set through a Cholesky factorization, and steps
back to the feasible region whenever a passive weight would turn negative.
On a positive definite Gram matrix it terminates finitely with an exact
support, which the downstream KKT-based checks rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import InputError, SolverError
from .kernel import KernelMatrix, MeanMap


@dataclass(frozen=True)
class SupportSet:
    """Ordered set of distinct source indices; iteration follows insertion order."""

    indices: tuple[int, ...] = ()

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(i < 0 for i in idx):
            raise InputError("support indices must be non-negative")
        if len(set(idx)) != len(idx):
            raise InputError("support indices must be distinct")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, j) -> bool:
        return j in self.indices

    def extended(self, j: int) -> "SupportSet":
        return SupportSet(self.indices + (int(j),))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)


@dataclass(frozen=True)
class WeightVector:
    """Non-negative weights aligned to an ordered support; zero elsewhere."""

    support: SupportSet
    weights: np.ndarray
    dimension: int

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.shape[0] != len(self.support):
            raise InputError("weights must be 1-D and aligned to the support")
        if not np.all(np.isfinite(w)):
            raise InputError("weights contain non-finite entries")
        if np.any(w < 0):
            raise InputError("weights must be non-negative")
        if any(i >= self.dimension for i in self.support):
            raise InputError("support index out of range")
        object.__setattr__(self, "weights", w)

    @classmethod
    def zeros(cls, dimension: int) -> "WeightVector":
        return cls(support=SupportSet(), weights=np.zeros(0), dimension=dimension)

    def dense(self) -> np.ndarray:
        out = np.zeros(self.dimension)
        if len(self.support):
            out[self.support.as_array()] = self.weights
        return out

    def positive_support(self) -> SupportSet:
        kept = tuple(j for j, w in zip(self.support, self.weights) if w > 0)
        return SupportSet(kept)


@dataclass(frozen=True)
class SolverConfig:
    kkt_tolerance: float = 1e-8
    max_iterations: int | None = None

    def __post_init__(self):
        if not np.isfinite(self.kkt_tolerance) or self.kkt_tolerance <= 0:
            raise InputError("kkt_tolerance must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise InputError("max_iterations must be positive")

    def iteration_cap(self, support_size: int) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return 10 * support_size + 100


def objective(w: WeightVector, K: KernelMatrix, mu: MeanMap) -> float:
    """Value of w'mu - w'Kw/2 using only the support coordinates."""
    if len(w.support) == 0:
        return 0.0
    s = w.support.as_array()
    ws = w.weights
    return float(ws @ mu.entries[s] - 0.5 * ws @ (K.entries[np.ix_(s, s)] @ ws))


def gradient(w: WeightVector, K: KernelMatrix, mu: MeanMap) -> np.ndarray:
    """Full-length gradient mu - Kw."""
    if len(w.support) == 0:
        return mu.entries.copy()
    s = w.support.as_array()
    return mu.entries - K.entries[:, s] @ w.weights


def kkt_residual(w: WeightVector, K: KernelMatrix, mu: MeanMap, L: SupportSet) -> float:
    """Largest first-order optimality violation of w on the support L.

    Per coordinate j in L this is |grad_j| where w_j > 0 and max(grad_j, 0)
    where w_j = 0, plus any negative-weight violation.
    """
    if not set(w.positive_support()).issubset(set(L)):
        raise InputError("weight support must lie inside L")
    if len(L) == 0:
        return 0.0
    idx = L.as_array()
    wl = w.dense()[idx]
    g = mu.entries[idx] - K.entries[np.ix_(idx, idx)] @ wl
    per_coord = np.where(wl > 0, np.abs(g), np.maximum(g, 0.0))
    return float(per_coord.max() + max(0.0, -wl.min()))


class _ActiveSetFailure(Exception):
    def __init__(self, weights: np.ndarray, residual: float):
        self.weights = weights
        self.residual = residual


def _subproblem(A: np.ndarray, b: np.ndarray, passive: np.ndarray) -> np.ndarray:
    """Unconstrained maximizer restricted to the passive coordinates.

    One or two refinement passes keep the stationarity residual of the
    passive block near roundoff even for ill-conditioned Gram blocks.
    """
    z = np.zeros_like(b)
    if not passive.any():
        return z
    sub = A[np.ix_(passive, passive)]
    rhs = b[passive]
    factor = cho_factor(sub, lower=True, check_finite=False)
    x = cho_solve(factor, rhs, check_finite=False)
    for _ in range(2):
        r = rhs - sub @ x
        if np.max(np.abs(r)) <= 1e-13 * max(1.0, np.max(np.abs(rhs))):
            break
        x = x + cho_solve(factor, r, check_finite=False)
    z[passive] = x
    return z


def _residual_of(A: np.ndarray, b: np.ndarray, w: np.ndarray) -> float:
    g = b - A @ w
    per_coord = np.where(w > 0, np.abs(g), np.maximum(g, 0.0))
    return float(per_coord.max()) if per_coord.size else 0.0


def _active_set_max(A: np.ndarray, b: np.ndarray, w0: np.ndarray | None,
                    tol: float, max_iter: int) -> np.ndarray:
    p = b.shape[0]
    if w0 is None or not np.any(w0 > 0):
        w = np.zeros(p)
        passive = np.zeros(p, dtype=bool)
    else:
        w = np.maximum(w0, 0.0)
        passive = w > 0
    iters = 0
    while True:
        # Restore subproblem optimality on the current passive set; this also
        # absorbs warm starts that are feasible but not yet stationary.
        while True:
            try:
                z = _subproblem(A, b, passive)
            except LinAlgError:
                raise _ActiveSetFailure(w, _residual_of(A, b, w)) from None
            negative = passive & (z < 0.0)
            if not negative.any():
                w = z
                break
            iters += 1
            if iters > max_iter:
                raise _ActiveSetFailure(w, _residual_of(A, b, w))
            ratios = np.full(p, np.inf)
            ratios[negative] = w[negative] / (w[negative] - z[negative])
            step = float(ratios.min())
            w = w + min(max(step, 0.0), 1.0) * (z - w)
            w[int(np.argmin(ratios))] = 0.0
            np.maximum(w, 0.0, out=w)
            passive = w > 0
        g = b - A @ w
        masked = np.where(passive, -np.inf, g)
        entering = int(np.argmax(masked))
        if not np.isfinite(masked[entering]) or masked[entering] <= 0.5 * tol:
            return w
        passive[entering] = True
        iters += 1
        if iters > max_iter:
            raise _ActiveSetFailure(w, _residual_of(A, b, w))


def solve_restricted(K: KernelMatrix, mu: MeanMap, L: SupportSet,
                     cfg: SolverConfig | None = None,
                     warm_start: WeightVector | None = None) -> WeightVector:
    """Maximize l over non-negative weights supported on L.

    Args:
        K: Gram matrix over the source rows.
        mu: target mean map.
        L: allowed support; an empty L returns the zero vector.
        cfg: solver tolerances; defaults to SolverConfig().
        warm_start: previous solution whose positive support lies in L, used
            to seed the passive set. The returned objective is never below
            the warm start's.

    Raises:
        SolverError: no convergence within the iteration cap; the error
            carries the best iterate and its KKT residual.
    """
    cfg = cfg or SolverConfig()
    n2 = K.n2
    if mu.n2 != n2:
        raise InputError("kernel matrix and mean map sizes disagree")
    if len(L) == 0:
        return WeightVector.zeros(n2)
    idx = L.as_array()
    if idx.max() >= n2:
        raise InputError("support index out of range")
    KL = K.entries[np.ix_(idx, idx)]
    muL = mu.entries[idx]
    w0 = None
    if warm_start is not None:
        if not set(warm_start.positive_support()).issubset(set(L)):
            raise InputError("warm start support must lie inside L")
        w0 = warm_start.dense()[idx]
    try:
        weights = _active_set_max(KL, muL, w0, cfg.kkt_tolerance, cfg.iteration_cap(len(L)))
    except _ActiveSetFailure as fail:
        best = WeightVector(support=L, weights=np.maximum(fail.weights, 0.0), dimension=n2)
        raise SolverError(
            f"weight solver did not converge on a support of size {len(L)} "
            f"(residual {fail.residual:.3e})",
            best_iterate=best, residual=fail.residual,
        ) from None
    return WeightVector(support=L, weights=weights, dimension=n2)
