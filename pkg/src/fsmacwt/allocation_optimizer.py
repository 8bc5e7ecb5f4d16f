"""Search over per-delayed-state power allocations.

Allocations are parameterized by how each user's budget is split across
the delayed-state cells. With cell weights ``w1[s~1] = pi(s~1)`` and
``w2[s~1, s~2] = pi(s~1) K^{d1-d2}(s~2, s~1)``, a fraction vector ``f`` on
the simplex maps to ``P(cell) = budget * f(cell) / w(cell)``, which spends
exactly ``budget * sum(f)``. Cells of zero weight get zero power.

The search is a simplex grid followed by pairwise mass-moving coordinate
ascent with a shrinking step. For the secrecy bound kinds the grid also
contains scaled-down (interior) copies of every boundary point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .channel_models import GaussianFadingChannel, PowerBudget
from .errors import ShapeError
from .gaussian_bounds import BoundKind, PowerAllocation, expected_bounds_batch
from .markov_state import DelayedJointLaw, MarkovChain, joint_delayed_pmf
from .region_geometry import RegionBounds

__all__ = [
    "PowerAllocation",
    "OptimizerOptions",
    "Feasibility",
    "feasible",
    "uniform_allocation",
    "maximize_sum_rate",
    "frontier_allocations",
    "achievable_sum",
]

FEAS_TOL = 1e-9


@dataclass(frozen=True)
class OptimizerOptions:
    grid_levels: int = 11
    refine_iters: int = 60
    tol: float = 1e-9
    seed: int = 0
    interior_scales: tuple = (0.75, 0.5, 0.25)
    max_candidates: int = 400_000

    def __post_init__(self):
        if self.grid_levels < 2:
            raise ValueError("grid_levels must be >= 2")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be >= 0")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")


class Feasibility(NamedTuple):
    ok: bool
    slack1: float
    slack2: float


def _cell_weights(law: DelayedJointLaw):
    w2 = law.pmf.sum(axis=2)
    return w2.sum(axis=1), w2


def feasible(alloc: PowerAllocation, budget: PowerBudget, chain: MarkovChain, d1: int, d2: int,
             law: DelayedJointLaw | None = None) -> Feasibility:
    """Check the average power constraints; slack is ``budget - spent``."""
    law = law if law is not None else joint_delayed_pmf(chain, d1, d2)
    if alloc.k != chain.k:
        raise ShapeError(f"allocation has {alloc.k} states, chain has {chain.k}")
    w1, w2 = _cell_weights(law)
    slack1 = float(budget.p1 - np.dot(w1, alloc.p1))
    slack2 = float(budget.p2 - np.sum(w2 * alloc.p2))
    return Feasibility(slack1 >= -FEAS_TOL and slack2 >= -FEAS_TOL, slack1, slack2)


def uniform_allocation(budget: PowerBudget, chain: MarkovChain) -> PowerAllocation:
    k = chain.k
    return PowerAllocation(np.full(k, float(budget.p1)), np.full((k, k), float(budget.p2)))


def achievable_sum(abc: np.ndarray) -> np.ndarray:
    """Largest ``R1 + R2`` inside each pentagon: ``min(c, a + b)``."""
    abc = np.asarray(abc)
    return np.minimum(abc[..., 2], abc[..., 0] + abc[..., 1])


def _support(abc: np.ndarray, mu: float) -> np.ndarray:
    """``max mu*R1 + (1-mu)*R2`` over each pentagon (attained at a corner)."""
    a, b, c = abc[..., 0], abc[..., 1], abc[..., 2]
    x1 = np.minimum(a, c)
    y1 = np.clip(np.minimum(b, c - x1), 0.0, None)
    y2 = np.minimum(b, c)
    x2 = np.clip(np.minimum(a, c - y2), 0.0, None)
    return np.maximum(mu * x1 + (1 - mu) * y1, mu * x2 + (1 - mu) * y2)


def _compositions(n: int, m: int) -> np.ndarray:
    """All nonnegative integer m-vectors summing to n, as fractions of n."""
    if m == 1:
        return np.ones((1, 1))
    rows = []
    for bars in itertools.combinations(range(n + m - 1), m - 1):
        prev = -1
        parts = []
        for bpos in bars:
            parts.append(bpos - prev - 1)
            prev = bpos
        parts.append(n + m - 1 - prev - 1)
        rows.append(parts)
    return np.array(rows, dtype=float) / n


class _Problem:
    """Fractions <-> allocations for one (chain, delays, budget) setting."""

    def __init__(self, channel, law, budget, kind):
        self.channel = channel
        self.law = law
        self.kind = BoundKind(kind)
        self.budget = budget
        self.k = law.pmf.shape[0]
        w1, w2 = _cell_weights(law)
        self.w1 = w1
        self.w2 = w2
        self.cells1 = np.flatnonzero(w1 > 0)
        self.cells2 = np.flatnonzero(w2.ravel() > 0)

    def allocations(self, f1: np.ndarray, f2: np.ndarray):
        """Batch of fraction vectors (extra trailing entries are unused power) to P1, P2."""
        n = f1.shape[0]
        P1 = np.zeros((n, self.k))
        P1[:, self.cells1] = self.budget.p1 * f1[:, : len(self.cells1)] / self.w1[self.cells1]
        P2 = np.zeros((n, self.k * self.k))
        P2[:, self.cells2] = self.budget.p2 * f2[:, : len(self.cells2)] / self.w2.ravel()[self.cells2]
        return P1, P2.reshape(n, self.k, self.k)

    def evaluate(self, f1, f2):
        P1, P2 = self.allocations(f1, f2)
        return expected_bounds_batch(self.channel, self.law, P1, P2, self.kind)

    def to_alloc(self, f1, f2) -> PowerAllocation:
        P1, P2 = self.allocations(f1[None], f2[None])
        return PowerAllocation(P1[0], P2[0])


def _grid(problem: _Problem, opts: OptimizerOptions):
    n = opts.grid_levels - 1
    g1 = _compositions(n, len(problem.cells1))
    g2 = _compositions(n, len(problem.cells2))
    scales = [1.0]
    if problem.kind is not BoundKind.CAP_NO_EVE:
        scales += [s for s in opts.interior_scales if 0 <= s < 1]
    i1, i2 = np.meshgrid(np.arange(len(g1)), np.arange(len(g2)), indexing="ij")
    i1, i2 = i1.ravel(), i2.ravel()
    if len(i1) * len(scales) ** 2 > opts.max_candidates:
        rng = np.random.default_rng(opts.seed)
        keep = max(1, opts.max_candidates // len(scales) ** 2)
        pick = np.sort(rng.choice(len(i1), size=keep, replace=False))
        i1, i2 = i1[pick], i2[pick]
    f1s, f2s = [], []
    for s1 in scales:
        for s2 in scales:
            f1s.append(np.column_stack([g1[i1] * s1, np.full(len(i1), 1 - s1)]))
            f2s.append(np.column_stack([g2[i2] * s2, np.full(len(i2), 1 - s2)]))
    return np.vstack(f1s), np.vstack(f2s)


def _pick(values: np.ndarray, f1: np.ndarray, f2: np.ndarray, problem: _Problem, tol: float,
          secondary: np.ndarray | None = None) -> int:
    """Best value; ties within ``tol`` go to the largest ``secondary`` value (within ``tol``),
    then the smallest allocation norm, then lexicographic order."""
    best = values.max()
    near = np.flatnonzero(values >= best - tol)
    if secondary is not None and len(near) > 1:
        sec = secondary[near]
        near = near[sec >= sec.max() - tol]
    if len(near) == 1:
        return int(near[0])
    P1, P2 = problem.allocations(f1[near], f2[near])
    flat = np.concatenate([P1, P2.reshape(len(near), -1)], axis=1)
    norms = np.linalg.norm(flat, axis=1)
    keys = [flat[:, j] for j in range(flat.shape[1] - 1, -1, -1)] + [norms]
    order = np.lexsort(keys)
    return int(near[order[0]])


def _moves(f: np.ndarray, step: float, free: bool):
    """All single mass moves of size <= step between coordinates of f."""
    m = len(f) if free else len(f) - 1
    out = []
    for i in range(len(f) if free else m):
        if f[i] <= 0:
            continue
        for j in range(len(f) if free else m):
            if i == j:
                continue
            g = f.copy()
            delta = min(step, g[i])
            g[i] -= delta
            g[j] += delta
            out.append(g)
    return out


def _refine(problem: _Problem, f1, f2, score: Callable, opts: OptimizerOptions):
    free = problem.kind is not BoundKind.CAP_NO_EVE
    step = 1.0 / (opts.grid_levels - 1)
    cur = float(score(problem.evaluate(f1[None], f2[None]))[0])
    for _ in range(opts.refine_iters):
        cand1 = [(g, f2) for g in _moves(f1, step, free)]
        cand2 = [(f1, g) for g in _moves(f2, step, free)]
        cands = cand1 + cand2
        if not cands:
            break
        F1 = np.array([c[0] for c in cands])
        F2 = np.array([c[1] for c in cands])
        vals = score(problem.evaluate(F1, F2))
        j = int(np.argmax(vals))
        if vals[j] > cur + opts.tol:
            cur = float(vals[j])
            f1, f2 = F1[j], F2[j]
        else:
            step *= 0.5
            if step < 1e-7:
                break
    return f1, f2, cur


def _normalize_law(chain, d1, d2, law):
    return law if law is not None else joint_delayed_pmf(chain, d1, d2)


def _search(problem: _Problem, scores, opts: OptimizerOptions):
    f1g, f2g = _grid(problem, opts)
    abc = problem.evaluate(f1g, f2g)
    results = []
    total = achievable_sum(abc)
    for score in scores:
        vals = score(abc)
        # flat directions of a weighted score (e.g. mu = 0) are resolved toward the larger sum rate
        i = _pick(vals, f1g, f2g, problem, opts.tol, total)
        f1, f2, v = _refine(problem, f1g[i].copy(), f2g[i].copy(), score, opts)
        results.append((f1, f2, v))
    return results


def maximize_sum_rate(channel: GaussianFadingChannel, chain: MarkovChain, d1: int, d2: int,
                      kind: BoundKind, budget: PowerBudget, opts: OptimizerOptions | None = None,
                      law: DelayedJointLaw | None = None):
    """Best achievable sum rate ``min(c, a + b)`` over feasible allocations.

    Returns ``(allocation, bits)``. The result is never worse than the
    uniform allocation.
    """
    opts = opts or OptimizerOptions()
    law = _normalize_law(chain, d1, d2, law)
    problem = _Problem(channel, law, budget, kind)
    (f1, f2, v), = _search(problem, [achievable_sum], opts)
    alloc = problem.to_alloc(f1, f2)
    uni = uniform_allocation(budget, chain)
    uni_v = float(achievable_sum(expected_bounds_batch(channel, law, uni.p1[None], uni.p2[None], kind))[0])
    if uni_v > v:
        return uni, uni_v
    return alloc, float(v)


def frontier_allocations(channel, chain, d1, d2, kind, budget, weight_count: int,
                         opts: OptimizerOptions | None = None, law: DelayedJointLaw | None = None):
    """Supporting allocations of the union region for weights ``mu`` on a uniform grid.

    For each ``mu`` the allocation maximizing the pentagon's support value
    ``max mu R1 + (1 - mu) R2`` is found. ``weight_count == 1`` uses
    ``mu = 1/2``, i.e. the sum-rate optimum. Returns a list of
    ``(PowerAllocation, RegionBounds)``.
    """
    if weight_count < 1:
        raise ValueError("weight_count must be >= 1")
    opts = opts or OptimizerOptions()
    law = _normalize_law(chain, d1, d2, law)
    problem = _Problem(channel, law, budget, kind)
    mus = [0.5] if weight_count == 1 else list(np.linspace(0.0, 1.0, weight_count))
    scores = [(lambda abc, mu=mu: _support(abc, mu)) for mu in mus]
    out = []
    for f1, f2, _ in _search(problem, scores, opts):
        alloc = problem.to_alloc(f1, f2)
        a, b, c = problem.evaluate(f1[None], f2[None])[0]
        out.append((alloc, RegionBounds(float(a), float(b), float(c))))
    return out
