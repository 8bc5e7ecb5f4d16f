"""Simulation oracle for the state process and discrete channels.

Random numbers come from numpy's ``default_rng`` (PCG64) seeded with the
caller's integer seed, so every result is reproducible from
``(PCG64, seed)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel_models import DiscreteChannelSpec
from .discrete_bounds import AXES, FullJoint, InputPolicy, info_terms
from .errors import DomainError
from .markov_state import MarkovChain, joint_delayed_pmf

__all__ = [
    "RNG_ALGORITHM",
    "SmallSampleWarning",
    "SimulationRun",
    "sample_state_path",
    "empirical_delayed_joint",
    "simulate_discrete",
    "empirical_joint",
    "empirical_info_terms",
]

RNG_ALGORITHM = "PCG64"
RECORD_FIELDS = ("s1", "s2", "s", "q", "x1", "x2", "y", "z")


class SmallSampleWarning(UserWarning):
    """Sample size below ten observations per joint cell."""


@dataclass(frozen=True)
class SimulationRun:
    """Sampled tuples ``(s~1, s~2, s, q, x1, x2, y, z)``, one row per sample.

    ``alphabet`` holds the size of each column, in the same order.
    """

    seed: int
    records: np.ndarray = field(repr=False)
    alphabet: tuple

    def __post_init__(self):
        rec = np.asarray(self.records, dtype=np.int64)
        if rec.ndim != 2 or rec.shape[1] != len(RECORD_FIELDS):
            raise ValueError(f"records must have shape (n, {len(RECORD_FIELDS)})")
        if len(self.alphabet) != len(RECORD_FIELDS):
            raise ValueError("alphabet must list one size per record field")
        if rec.size and (rec.min() < 0 or np.any(rec.max(axis=0) >= np.asarray(self.alphabet))):
            raise ValueError("record symbols outside the declared alphabets")
        rec.setflags(write=False)
        object.__setattr__(self, "records", rec)

    @property
    def length(self) -> int:
        return self.records.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.records[:, RECORD_FIELDS.index(name)]


def sample_state_path(chain: MarkovChain, n: int, seed: int) -> np.ndarray:
    """State indices ``S_1..S_n`` with ``S_1 ~ pi`` and ``S_i ~ K[:, S_{i-1}]``."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    k = chain.k
    cum = np.cumsum(chain.transition, axis=0)
    cum[-1, :] = 1.0
    cols = [cum[:, j].tolist() for j in range(k)]
    pi_cum = np.cumsum(chain.pi)
    pi_cum[-1] = 1.0
    path = [0] * n
    s = int(np.searchsorted(pi_cum, u[0], side="right"))
    path[0] = s
    ul = u.tolist()
    for i in range(1, n):
        col = cols[s]
        x = ul[i]
        s = 0
        while x >= col[s]:
            s += 1
        path[i] = s
    return np.asarray(path, dtype=np.int64)


def empirical_delayed_joint(chain: MarkovChain, d1: int, d2: int, n: int, seed: int) -> np.ndarray:
    """Normalized counts of ``(S_{i-d1}, S_{i-d2}, S_i)`` along one sampled path."""
    if d1 < 0 or d2 < 0:
        raise DomainError("delays must be >= 0")
    if n < d1 + 1:
        raise DomainError(f"n = {n} is too small for delay {d1}")
    path = sample_state_path(chain, n, seed)
    k = chain.k
    a = path[: n - d1]
    v = path[d1 - d2: n - d2]
    cur = path[d1:]
    counts = np.bincount((a * k + v) * k + cur, minlength=k**3).astype(float)
    return counts.reshape(k, k, k) / counts.sum()


def _draw(rng, cum_rows: np.ndarray) -> np.ndarray:
    """One categorical draw per row of cumulative probabilities."""
    u = rng.random(cum_rows.shape[0])
    idx = (u[:, None] >= cum_rows[:, :-1]).sum(axis=1)
    return idx.astype(np.int64)


def _cum(p: np.ndarray) -> np.ndarray:
    c = np.cumsum(p, axis=-1)
    c[..., -1] = 1.0
    return c


def simulate_discrete(spec: DiscreteChannelSpec, policy: InputPolicy, chain: MarkovChain,
                      d1: int, d2: int, n: int, seed: int) -> SimulationRun:
    """I.i.d. samples from the full joint, drawing each factor in sequence."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    law = joint_delayed_pmf(chain, d1, d2)
    k = chain.k
    ns, nx1, nx2, ny, nz = spec.shape
    nq = policy.q_size
    triple = _draw(rng, np.broadcast_to(_cum(law.pmf.ravel()), (n, k**3)))
    s1, rest = np.divmod(triple, k * k)
    s2, s = np.divmod(rest, k)
    q = _draw(rng, _cum(policy.q_given)[s1])
    x1 = _draw(rng, _cum(policy.x1_given)[s1, q])
    x2 = _draw(rng, _cum(policy.x2_given)[s1, s2, q])
    yz = _draw(rng, _cum(spec.kernel.reshape(ns, nx1, nx2, ny * nz))[s, x1, x2])
    y, z = np.divmod(yz, nz)
    rec = np.column_stack([s1, s2, s, q, x1, x2, y, z])
    return SimulationRun(int(seed), rec, (k, k, k, nq, nx1, nx2, ny, nz))


def empirical_joint(run: SimulationRun) -> FullJoint:
    """Plug-in joint pmf with the axis order of :class:`FullJoint`."""
    order = [RECORD_FIELDS.index(a) for a in AXES]
    dims = tuple(run.alphabet[i] for i in order)
    flat = np.ravel_multi_index(tuple(run.records[:, i] for i in order), dims)
    counts = np.bincount(flat, minlength=int(np.prod(dims))).astype(float)
    return FullJoint(counts.reshape(dims) / max(run.length, 1))


def empirical_info_terms(run: SimulationRun) -> dict[str, float]:
    """Plug-in estimates of every :func:`info_terms` quantity (no bias correction)."""
    cells = int(np.prod(run.alphabet[:3])) * int(np.prod(run.alphabet[3:]))
    if run.length < 10 * cells:
        warnings.warn(
            f"{run.length} samples for {cells} joint cells; plug-in estimates will be biased",
            SmallSampleWarning,
            stacklevel=2,
        )
    return info_terms(empirical_joint(run))
