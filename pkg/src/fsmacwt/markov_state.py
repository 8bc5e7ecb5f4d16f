"""Finite-state Markov channel-state process.

Transition matrices are stored column-stochastic: ``K[l, j]`` is the
probability of moving *from* state ``j`` *to* state ``l``.  A d-step
matrix ``K^d`` therefore maps a column distribution to the distribution
``d`` steps later, and ``K @ pi == pi`` at stationarity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import gcd

import numpy as np

from .errors import DelayOrderError, DomainError, StructureError, UnsupportedError

__all__ = [
    "MarkovChain",
    "DelayedJointLaw",
    "GilbertElliottParams",
    "build_gilbert_elliott",
    "gilbert_elliott_from_memory",
    "steady_state",
    "d_step_matrix",
    "stationary_matrix",
    "joint_delayed_pmf",
    "joint_pmf_from_factors",
    "memory_params",
]

STOCHASTIC_TOL = 1e-12


def _period(adj: np.ndarray) -> int:
    """Period of a strongly connected digraph given as a boolean adjacency.

    ``adj[i, j]`` means an edge i -> j.  Uses BFS levels from node 0: the
    period is the gcd of ``level[i] + 1 - level[j]`` over all edges.
    """
    k = adj.shape[0]
    level = [-1] * k
    level[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for j in np.flatnonzero(adj[i]):
                if level[j] < 0:
                    level[j] = level[i] + 1
                    nxt.append(int(j))
        frontier = nxt
    p = 0
    for i, j in zip(*np.nonzero(adj)):
        p = gcd(p, abs(level[i] + 1 - level[j]))
    return p


def _reachable(adj: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(adj[i] & ~seen):
            seen[j] = True
            stack.append(int(j))
    return seen


@dataclass(frozen=True)
class MarkovChain:
    """Irreducible, aperiodic finite-state Markov chain.

    Parameters
    ----------
    states : tuple of str
        State labels, in matrix order.
    transition : np.ndarray
        k x k column-stochastic matrix, ``transition[l, j] = Pr{next=l | cur=j}``.
    """

    states: tuple
    transition: np.ndarray = field(repr=False)

    def __post_init__(self):
        K = np.array(self.transition, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise StructureError(f"transition must be square, got shape {K.shape}")
        k = K.shape[0]
        states = tuple(str(s) for s in self.states)
        if len(states) != k:
            raise StructureError(f"{len(states)} state labels for a {k}x{k} matrix")
        if len(set(states)) != k:
            raise StructureError("state labels must be unique")
        if not np.all(np.isfinite(K)) or K.min() < 0.0 or K.max() > 1.0:
            raise StructureError("transition entries must lie in [0, 1]")
        colsum = K.sum(axis=0)
        if np.max(np.abs(colsum - 1.0)) > STOCHASTIC_TOL:
            raise StructureError(f"columns must sum to 1, got {colsum}")
        # edge i -> j when K[j, i] > 0
        adj = (K > 0).T
        for i in range(k):
            if not _reachable(adj, i).all():
                raise StructureError("chain is reducible")
        if _period(adj) != 1:
            raise StructureError("chain is periodic")
        K.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "transition", K)

    @property
    def k(self) -> int:
        return len(self.states)

    @cached_property
    def pi(self) -> np.ndarray:
        return steady_state(self)

    def index(self, label) -> int:
        return self.states.index(str(label))


def build_gilbert_elliott(g: float, b: float) -> MarkovChain:
    """Two-state Good/Bad chain with ``P(B|G) = b`` and ``P(G|B) = g``.

    States are ordered ``("G", "B")``.
    """
    for name, v in (("g", g), ("b", b)):
        if not (0.0 < v < 1.0):
            raise DomainError(f"{name} must lie in (0, 1), got {v}")
    K = np.array([[1.0 - b, g], [b, 1.0 - g]])
    return MarkovChain(("G", "B"), K)


def gilbert_elliott_from_memory(u: float, c: float) -> MarkovChain:
    """Gilbert-Elliott chain from memory ``u = 1 - g - b`` and ratio ``c = g / b``."""
    if not (-1.0 < u < 1.0) or c <= 0.0:
        raise DomainError(f"need -1 < u < 1 and c > 0, got u={u}, c={c}")
    b = (1.0 - u) / (1.0 + c)
    return build_gilbert_elliott(c * b, b)


@dataclass(frozen=True)
class GilbertElliottParams:
    g: float
    b: float

    @property
    def u(self) -> float:
        return 1.0 - self.g - self.b

    @property
    def c(self) -> float:
        return self.g / self.b


def steady_state(chain: MarkovChain) -> np.ndarray:
    """Stationary distribution from ``(K - I) pi = 0`` with ``sum(pi) = 1``."""
    K = chain.transition
    k = K.shape[0]
    A = np.vstack([K - np.eye(k), np.ones((1, k))])
    rhs = np.zeros(k + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    if np.max(np.abs(K @ pi - pi)) > 1e-10:
        raise StructureError("no unique stationary distribution")
    return pi


def d_step_matrix(chain: MarkovChain, d: int) -> np.ndarray:
    """``K^d`` by repeated squaring; ``K^0`` is the identity."""
    if d < 0 or int(d) != d:
        raise DomainError(f"d must be a nonnegative integer, got {d}")
    return np.linalg.matrix_power(chain.transition, int(d))


def stationary_matrix(chain: MarkovChain) -> np.ndarray:
    """Rank-one limit ``lim K^d``: every column equals ``pi``."""
    return np.outer(chain.pi, np.ones(chain.k))


@dataclass(frozen=True)
class DelayedJointLaw:
    """Joint pmf of (S~1, S~2, S) = (S_{i-d1}, S_{i-d2}, S_i), axes in that order."""

    d1: int
    d2: int
    pmf: np.ndarray = field(repr=False)

    @property
    def gap_conditional(self) -> np.ndarray:
        """``P(s~2 | s~1)`` as a column-stochastic matrix ``[s~2, s~1]``."""
        m = self.pmf.sum(axis=2)
        marg = m.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(marg[None, :] > 0, m.T / marg[None, :], 0.0)
        return out


def joint_pmf_from_factors(pi, gap, recent, d1=None, d2=None) -> DelayedJointLaw:
    """``pmf[a, v, l] = pi[a] * gap[v, a] * recent[l, v]``."""
    pmf = np.einsum("a,va,lv->avl", np.asarray(pi), np.asarray(gap), np.asarray(recent))
    pmf.setflags(write=False)
    return DelayedJointLaw(d1, d2, pmf)


def joint_delayed_pmf(chain: MarkovChain, d1: int, d2: int) -> DelayedJointLaw:
    """Joint law of the two delayed states and the current state.

    ``pmf(s~1, s~2, s) = pi(s~1) K^{d1-d2}(s~2, s~1) K^{d2}(s, s~2)``.
    Requires ``d1 >= d2 >= 0``; callers relabel the transmitters otherwise.
    """
    if d2 < 0:
        raise DomainError(f"delays must be nonnegative, got d2={d2}")
    if d1 < d2:
        raise DelayOrderError(f"need d1 >= d2, got d1={d1}, d2={d2}")
    return joint_pmf_from_factors(
        chain.pi, d_step_matrix(chain, d1 - d2), d_step_matrix(chain, d2), d1, d2
    )


def memory_params(chain: MarkovChain) -> GilbertElliottParams:
    if chain.k != 2:
        raise UnsupportedError(f"memory parameters need a 2-state chain, got k={chain.k}")
    K = chain.transition
    return GilbertElliottParams(g=float(K[0, 1]), b=float(K[1, 0]))
