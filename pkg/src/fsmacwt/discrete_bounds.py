"""Inner and outer region bounds for finite-alphabet channels.

The full joint is a dense array with axes
``(q, s~1, s~2, s, x1, x2, y, z)`` built from

    P(q|s~1) P(x1|s~1,q) P(x2|s~1,s~2,q) * law(s~1,s~2,s) * P(y,z|x1,x2,s).

Information quantities are in bits with ``0 log 0 = 0``. Each is a single
sum of log ratios over the marginal it needs, so a deterministic output
gives exact zero entropies; mutual informations are clamped at 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channel_models import DiscreteChannelSpec, degraded_kernel, validate_discrete
from .errors import CardinalityError, GuardError, ShapeError, ValidationError
from .markov_state import DelayedJointLaw, MarkovChain, joint_delayed_pmf
from .region_geometry import RegionBounds

__all__ = [
    "InputPolicy",
    "FullJoint",
    "AXES",
    "TERMS",
    "assemble_joint",
    "entropy",
    "info_terms",
    "inner_region_s",
    "inner_region_sf",
    "degraded_outer_s",
    "relaxed_outer_sf",
    "optimize_policy",
    "SearchOptions",
    "MAX_CELLS",
]

AXES = ("q", "s1", "s2", "s", "x1", "x2", "y", "z")
_AX = {name: i for i, name in enumerate(AXES)}
PROB_FLOOR = 1e-15
MAX_CELLS = 1_000_000
Q_CAP_S = 6
Q_CAP_SF = 2

# name -> (A, B, conditioning) for I(A;B|C); for entropies B is None
_STATE = ("s", "s1", "s2")
TERMS = {
    "I(X1;Y|X2,S,S1,S2,Q)": (("x1",), ("y",), ("x2",) + _STATE + ("q",)),
    "I(X2;Y|X1,S,S1,S2,Q)": (("x2",), ("y",), ("x1",) + _STATE + ("q",)),
    "I(X1,X2;Y|S,S1,S2,Q)": (("x1", "x2"), ("y",), _STATE + ("q",)),
    "I(X1;Y|S,S1,S2,Q)": (("x1",), ("y",), _STATE + ("q",)),
    "I(X1;Z|S,S1,S2,Q)": (("x1",), ("z",), _STATE + ("q",)),
    "I(X2;Z|S,S1,S2,Q)": (("x2",), ("z",), _STATE + ("q",)),
    "I(X1,X2;Z|S,S1,S2,Q)": (("x1", "x2"), ("z",), _STATE + ("q",)),
    "I(X1,X2;Z|S,S1,S2)": (("x1", "x2"), ("z",), _STATE),
    "I(X1,X2;Y|S,S1,S2)": (("x1", "x2"), ("y",), _STATE),
    "H(Y|Z,X1,X2,S,S1,S2)": (("y",), None, ("z", "x1", "x2") + _STATE),
    "H(Y|Z,S,S1,S2)": (("y",), None, ("z",) + _STATE),
    "H(Y|S,S1,S2)": (("y",), None, _STATE),
}


def _check_cond(arr, axes_sum, name):
    s = arr.sum(axis=axes_sum)
    if np.any(arr < 0) or np.max(np.abs(s - 1.0)) > 1e-12:
        raise ValidationError([f"{name} rows must be probability vectors"])


@dataclass(frozen=True)
class InputPolicy:
    """Time-sharing and input distributions.

    Attributes
    ----------
    q_given : (k, nq) array, ``P(q | s~1)``
    x1_given : (k, nq, |X1|) array, ``P(x1 | s~1, q)``
    x2_given : (k, k, nq, |X2|) array, ``P(x2 | s~1, s~2, q)``
    """

    q_given: np.ndarray = field(repr=False)
    x1_given: np.ndarray = field(repr=False)
    x2_given: np.ndarray = field(repr=False)

    def __post_init__(self):
        q = np.array(self.q_given, dtype=float)
        x1 = np.array(self.x1_given, dtype=float)
        x2 = np.array(self.x2_given, dtype=float)
        if q.ndim != 2 or x1.ndim != 3 or x2.ndim != 4:
            raise ShapeError("policy arrays must have 2, 3 and 4 axes")
        k, nq = q.shape
        if x1.shape[:2] != (k, nq) or x2.shape[:3] != (k, k, nq):
            raise ShapeError(f"inconsistent policy shapes {q.shape}, {x1.shape}, {x2.shape}")
        _check_cond(q, 1, "P(q|s1)")
        _check_cond(x1, 2, "P(x1|s1,q)")
        _check_cond(x2, 3, "P(x2|s1,s2,q)")
        for name, arr in (("q_given", q), ("x1_given", x1), ("x2_given", x2)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def q_size(self) -> int:
        return self.q_given.shape[1]

    @property
    def k(self) -> int:
        return self.q_given.shape[0]

    @classmethod
    def uniform(cls, k, nq, nx1, nx2) -> "InputPolicy":
        return cls(
            np.full((k, nq), 1.0 / nq),
            np.full((k, nq, nx1), 1.0 / nx1),
            np.full((k, k, nq, nx2), 1.0 / nx2),
        )

    def flat(self) -> np.ndarray:
        return np.concatenate([self.q_given.ravel(), self.x1_given.ravel(), self.x2_given.ravel()])


@dataclass(frozen=True)
class FullJoint:
    """Dense joint pmf with axes :data:`AXES`."""

    p: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return self.p.shape

    def marginal(self, keep) -> np.ndarray:
        drop = tuple(i for i, a in enumerate(AXES) if a not in keep)
        return self.p.sum(axis=drop)


def _cells(spec: DiscreteChannelSpec, nq: int) -> int:
    ns, nx1, nx2, ny, nz = spec.shape
    return nq * ns**3 * nx1 * nx2 * ny * nz


def assemble_joint(spec: DiscreteChannelSpec, policy: InputPolicy, law: DelayedJointLaw) -> FullJoint:
    ns, nx1, nx2, ny, nz = spec.shape
    k = law.pmf.shape[0]
    if k != ns or policy.k != ns:
        raise ShapeError(f"state counts differ: kernel {ns}, law {k}, policy {policy.k}")
    if policy.x1_given.shape[2] != nx1 or policy.x2_given.shape[3] != nx2:
        raise ShapeError("policy input alphabets do not match the kernel")
    if _cells(spec, policy.q_size) > MAX_CELLS:
        raise GuardError(f"joint would have {_cells(spec, policy.q_size)} cells (limit {MAX_CELLS})")
    p = np.einsum(
        "abl,aq,aqx,abqv,lxvyz->qablxvyz",
        law.pmf, policy.q_given, policy.x1_given, policy.x2_given, spec.kernel,
        optimize=True,
    )
    return FullJoint(p)


def entropy(p: np.ndarray) -> float:
    """Shannon entropy in bits of a pmf of any shape."""
    v = p[p > PROB_FLOOR]
    return float(-np.sum(v * np.log2(v)))


def _log_ratio_sum(weights: np.ndarray, num: np.ndarray, den: np.ndarray) -> float:
    """``sum w * log2(num / den)`` over cells with ``w`` above the probability floor."""
    w, num, den = np.broadcast_arrays(weights, num, den)
    m = w > PROB_FLOOR
    return float(np.sum(w[m] * np.log2(num[m] / den[m])))


def info_terms(joint: FullJoint) -> dict[str, float]:
    """All information quantities used by the region bounds, keyed as in :data:`TERMS`.

    Each term is a single sum of ``p log(ratio)`` over the joint marginal,
    so structural zeros (a deterministic output) come out exact and an
    independent eavesdropper leaves only rounding residue (about 1e-16)
    rather than a difference of entropies. Mutual informations that round
    below zero are clamped at 0.
    """
    cache: dict[frozenset, np.ndarray] = {}

    def P(names):
        key = frozenset(names)
        if key not in cache:
            drop = tuple(i for i, a in enumerate(AXES) if a not in key)
            cache[key] = joint.p.sum(axis=drop, keepdims=True)
        return cache[key]

    out = {}
    for name, (A, B, C) in TERMS.items():
        if B is None:
            pac = P(A + C)
            out[name] = max(-_log_ratio_sum(pac, pac, P(C)), 0.0)
        else:
            pabc = P(A + B + C)
            val = _log_ratio_sum(pabc, pabc * P(C), P(A + C) * P(B + C))
            out[name] = max(val, 0.0)
    return out


def _law_for(spec, chain, d1, d2):
    law = joint_delayed_pmf(chain, d1, d2)
    if law.pmf.shape[0] != spec.shape[0]:
        raise ShapeError("chain and kernel have different state counts")
    return law


def _clamp(a, b, c) -> RegionBounds:
    return RegionBounds(max(float(a), 0.0), max(float(b), 0.0), max(float(c), 0.0))


def _s_bounds(t: dict) -> RegionBounds:
    return _clamp(
        t["I(X1;Y|X2,S,S1,S2,Q)"] - t["I(X1;Z|S,S1,S2,Q)"],
        t["I(X2;Y|X1,S,S1,S2,Q)"] - t["I(X2;Z|S,S1,S2,Q)"],
        t["I(X1,X2;Y|S,S1,S2,Q)"] - t["I(X1,X2;Z|S,S1,S2,Q)"],
    )


def _sf_bounds(t: dict) -> RegionBounds:
    i1, i2 = t["I(X1;Y|X2,S,S1,S2,Q)"], t["I(X2;Y|X1,S,S1,S2,Q)"]
    iz = t["I(X1,X2;Z|S,S1,S2)"]
    total = min(i1 + i2, t["I(X1,X2;Y|S,S1,S2)"]) - iz + min(iz, t["H(Y|Z,X1,X2,S,S1,S2)"])
    return _clamp(i1, i2, total)


def _relaxed_sf(t: dict) -> RegionBounds:
    i = t["I(X1,X2;Y|S,S1,S2)"]
    return _clamp(i, i, min(i, t["H(Y|Z,S,S1,S2)"]))


def inner_region_s(spec, chain, d1, d2, policy: InputPolicy) -> RegionBounds:
    """Wiretap inner bound with delayed state feedback only (|Q| <= 6)."""
    if policy.q_size > Q_CAP_S:
        raise CardinalityError(f"|Q| = {policy.q_size} exceeds {Q_CAP_S}")
    return _s_bounds(info_terms(assemble_joint(spec, policy, _law_for(spec, chain, d1, d2))))


def inner_region_sf(spec, chain, d1, d2, policy: InputPolicy) -> RegionBounds:
    """Inner bound with state and channel-output feedback (|Q| <= 2)."""
    if policy.q_size > Q_CAP_SF:
        raise CardinalityError(f"|Q| = {policy.q_size} exceeds {Q_CAP_SF}")
    return _sf_bounds(info_terms(assemble_joint(spec, policy, _law_for(spec, chain, d1, d2))))


def degraded_outer_s(spec, chain, d1, d2, policy: InputPolicy) -> RegionBounds:
    """Outer bound for degraded channels, evaluated with Z regenerated from Y through P(z|y)."""
    if not spec.degraded:
        raise ValidationError(["degraded_outer_s needs a spec flagged degraded"])
    checked = spec if spec.z_given_y is not None else validate_discrete(spec)
    rebuilt = DiscreteChannelSpec(degraded_kernel(checked.y_kernel, checked.z_given_y), True, checked.z_given_y)
    return _s_bounds(info_terms(assemble_joint(rebuilt, policy, _law_for(spec, chain, d1, d2))))


def relaxed_outer_sf(spec, chain, d1, d2, policy: InputPolicy) -> RegionBounds:
    """Computable relaxation of the feedback outer bound.

    ``R1, R2 <= I(X1,X2;Y|S,S~1,S~2)`` and
    ``R1 + R2 <= min{I(X1,X2;Y|S,S~1,S~2), H(Y|Z,S,S~1,S~2)}``.
    """
    return _relaxed_sf(info_terms(assemble_joint(spec, policy, _law_for(spec, chain, d1, d2))))


BOUND_OPS: dict[str, Callable] = {
    "inner_s": inner_region_s,
    "inner_sf": inner_region_sf,
    "degraded_outer_s": degraded_outer_s,
    "relaxed_outer_sf": relaxed_outer_sf,
}

_FROM_TERMS = {
    inner_region_s: _s_bounds,
    inner_region_sf: _sf_bounds,
    relaxed_outer_sf: _relaxed_sf,
}


@dataclass(frozen=True)
class SearchOptions:
    q_size: int = 1
    starts: int = 8
    refine_iters: int = 40
    step0: float = 0.25
    tol: float = 1e-12
    seed: int = 0
    scalarize: Callable[[RegionBounds], float] = field(default=lambda rb: rb.c, compare=False)


def _rows(policy: InputPolicy):
    """Views of every conditional distribution row (as (array-name, index) pairs)."""
    rows = []
    for name in ("q_given", "x1_given", "x2_given"):
        arr = getattr(policy, name)
        for idx in np.ndindex(arr.shape[:-1]):
            if arr.shape[-1] > 1:
                rows.append((name, idx))
    return rows


def _random_policy(rng, k, nq, nx1, nx2) -> InputPolicy:
    return InputPolicy(
        rng.dirichlet(np.ones(nq), size=k),
        rng.dirichlet(np.ones(nx1), size=(k, nq)),
        rng.dirichlet(np.ones(nx2), size=(k, k, nq)),
    )


def optimize_policy(spec: DiscreteChannelSpec, chain: MarkovChain, d1: int, d2: int,
                    bound_op: Callable = inner_region_s, opts: SearchOptions | None = None):
    """Multi-start random search plus per-row simplex refinement.

    Each start draws every conditional from a flat Dirichlet (per-start
    generators spawned from ``opts.seed``). Refinement moves probability
    mass between pairs of entries within a single row, halving the step
    when no move improves the scalarized bound. Returns
    ``(InputPolicy, RegionBounds)``.
    """
    opts = opts or SearchOptions()
    if isinstance(bound_op, str):
        bound_op = BOUND_OPS[bound_op]
    ns, nx1, nx2, ny, nz = spec.shape
    nq = opts.q_size
    if _cells(spec, nq) > MAX_CELLS:
        raise GuardError(f"joint would have {_cells(spec, nq)} cells (limit {MAX_CELLS})")
    cap = {inner_region_s: Q_CAP_S, inner_region_sf: Q_CAP_SF}.get(bound_op)
    if cap is not None and nq > cap:
        raise CardinalityError(f"|Q| = {nq} exceeds the cap {cap} for this bound")
    law = _law_for(spec, chain, d1, d2)
    if bound_op is degraded_outer_s:
        checked = spec if spec.z_given_y is not None else validate_discrete(spec)
        spec = DiscreteChannelSpec(degraded_kernel(checked.y_kernel, checked.z_given_y), True, checked.z_given_y)
        from_terms = _s_bounds
    else:
        from_terms = _FROM_TERMS.get(bound_op)

    def evaluate(pol):
        if from_terms is None:
            return bound_op(spec, chain, d1, d2, pol)
        return from_terms(info_terms(assemble_joint(spec, pol, law)))

    seeds = np.random.SeedSequence(opts.seed).spawn(opts.starts)
    best = None
    for i, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        pol = InputPolicy.uniform(ns, nq, nx1, nx2) if i == 0 else _random_policy(rng, ns, nq, nx1, nx2)
        rb = evaluate(pol)
        val = opts.scalarize(rb)
        step = opts.step0
        arrays = {n: np.array(getattr(pol, n)) for n in ("q_given", "x1_given", "x2_given")}
        rows = _rows(pol)
        for _ in range(opts.refine_iters):
            improved = False
            for name, idx in rows:
                row = arrays[name][idx]
                m = row.shape[0]
                for a in range(m):
                    for b in range(m):
                        if a == b or row[a] <= 0:
                            continue
                        delta = min(step, row[a])
                        trial = {n: v for n, v in arrays.items()}
                        t = arrays[name].copy()
                        t[idx + (a,)] -= delta
                        t[idx + (b,)] += delta
                        trial[name] = t
                        cand = InputPolicy(**trial)
                        crb = evaluate(cand)
                        cval = opts.scalarize(crb)
                        if cval > val + opts.tol:
                            arrays, pol, rb, val = trial, cand, crb, cval
                            row = arrays[name][idx]
                            improved = True
            if not improved:
                step *= 0.5
                if step < 1e-6:
                    break
        if best is None or val > best[2] + opts.tol:
            best = (pol, rb, val)
    return best[0], best[1]
