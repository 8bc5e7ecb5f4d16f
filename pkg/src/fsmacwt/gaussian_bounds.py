"""Rate bounds for the degraded Gaussian fading MAC wiretap channel.

All rates are in bits (base-2 logarithms), including the differential
entropy term ``0.5*log2(2*pi*e*sigma_w2)`` of the feedback bounds.

The four bound kinds and their per-state integrands, with
``A1 = h1^2 P1(s~1)``, ``A2 = h2^2 P2(s~1, s~2)``, ``e = h3^2``, noise
``n = sigma_s^2`` and ``w = sigma_w^2``:

* ``SIn`` (state feedback, inner): each single-user or joint rate minus
  the matching eavesdropper leakage.
* ``SOut`` (state feedback, outer): like ``SIn`` but with the looser
  individual penalties ``0.5*log2((A1 + n + w) / (e A2 + e n + w))``.
* ``SfIn`` (state and output feedback, inner): no penalty on the
  individual rates; the sum gains the secret-key term
  ``min{leakage, 0.5*log2(2 pi e w) + 0.5*log2(n / (e n + w))}``.
* ``SfOut`` (state and output feedback, outer): individual caps equal the
  joint rate; the sum cap is ``min{E[joint rate], E[key bound]}`` with both
  expectations taken before the minimum.
* ``CapNoEve``: every eavesdropper term removed. Used as a stand-in for the
  MAC capacity region with delayed state feedback only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channel_models import GaussianFadingChannel
from .errors import ShapeError
from .markov_state import DelayedJointLaw, MarkovChain, joint_delayed_pmf
from .region_geometry import RegionBounds

__all__ = [
    "BoundKind",
    "RateTriple",
    "PowerAllocation",
    "per_state_terms",
    "expected_bounds",
    "expected_bounds_batch",
    "sum_rate_components",
]

LOG2_2PIE = np.log2(2.0 * np.pi * np.e)


class BoundKind(str, enum.Enum):
    S_IN = "SIn"
    S_OUT = "SOut"
    SF_IN = "SfIn"
    SF_OUT = "SfOut"
    CAP_NO_EVE = "CapNoEve"

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, text: str) -> "BoundKind":
        t = str(text).strip()
        for k in cls:
            if t.lower() in (k.value.lower(), k.name.lower()):
                return k
        raise ValueError(f"unknown bound kind {text!r}; expected one of {[k.value for k in cls]}")


class RateTriple(NamedTuple):
    r1: float
    r2: float
    total: float


@dataclass(frozen=True)
class PowerAllocation:
    """Per-delayed-state powers ``P1[s~1]`` and ``P2[s~1, s~2]``."""

    p1: np.ndarray = field()
    p2: np.ndarray = field()

    def __post_init__(self):
        p1 = np.atleast_1d(np.asarray(self.p1, dtype=float)).copy()
        p2 = np.atleast_2d(np.asarray(self.p2, dtype=float)).copy()
        k = p1.shape[0]
        if p1.ndim != 1 or p2.shape != (k, k):
            raise ShapeError(f"need p1 shape (k,) and p2 shape (k, k); got {p1.shape}, {p2.shape}")
        if not (np.all(np.isfinite(p1)) and np.all(np.isfinite(p2))):
            raise ValueError("allocation entries must be finite")
        if p1.min() < 0 or p2.min() < 0:
            raise ValueError("allocation entries must be >= 0")
        p1.setflags(write=False)
        p2.setflags(write=False)
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p2", p2)

    @property
    def k(self) -> int:
        return self.p1.shape[0]

    def flat(self) -> np.ndarray:
        return np.concatenate([self.p1, self.p2.ravel()])

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat()))

    def swapped(self) -> "PowerAllocation":
        """Exchange the user roles (only meaningful when d1 == d2)."""
        return PowerAllocation(np.diag(self.p2).copy(), np.diag(self.p1))

    def __eq__(self, other):
        if not isinstance(other, PowerAllocation):
            return NotImplemented
        return np.array_equal(self.p1, other.p1) and np.array_equal(self.p2, other.p2)

    __hash__ = None


def _log2_half(x):
    return 0.5 * np.log2(x)


def _integrands(channel: GaussianFadingChannel, P1: np.ndarray, P2: np.ndarray, kind: BoundKind):
    """Per-state integrands on the (n, s~1, s~2, s) grid.

    Returns ``(r1, r2, total, total_alt)``; ``total_alt`` is the second
    argument of the SfOut minimum (``None`` for other kinds).
    """
    P1 = P1[:, :, None, None]
    P2 = P2[:, :, :, None]
    h1s = channel.h1**2
    h2s = channel.h2**2
    e = channel.h3**2
    n = channel.sigma_s2
    w = float(channel.sigma_w2)
    A1 = h1s * P1
    A2 = h2s * P2
    r1_main = _log2_half(1.0 + A1 / n)
    r2_main = _log2_half(1.0 + A2 / n)
    sum_main = _log2_half(1.0 + (A1 + A2) / n)
    shape = np.broadcast_shapes(A1.shape, A2.shape)
    r1_main, r2_main, sum_main = (np.broadcast_to(v, shape) for v in (r1_main, r2_main, sum_main))
    alt = None
    if kind is BoundKind.CAP_NO_EVE:
        return r1_main, r2_main, sum_main, alt
    eve_noise = e * n + w
    leak = _log2_half(1.0 + e * (A1 + A2) / eve_noise)
    if kind is BoundKind.S_IN:
        both = e * A1 + e * A2 + eve_noise
        r1 = r1_main - _log2_half(both / (e * A2 + eve_noise))
        r2 = r2_main - _log2_half(both / (e * A1 + eve_noise))
        total = sum_main - leak
    elif kind is BoundKind.S_OUT:
        r1 = r1_main - _log2_half((A1 + n + w) / (e * A2 + eve_noise))
        r2 = r2_main - _log2_half((A2 + n + w) / (e * A1 + eve_noise))
        total = sum_main - leak
    elif kind is BoundKind.SF_IN:
        key = 0.5 * LOG2_2PIE + 0.5 * np.log2(w) + _log2_half(n / eve_noise)
        r1, r2 = r1_main, r2_main
        total = sum_main - leak + np.minimum(leak, key)
    elif kind is BoundKind.SF_OUT:
        rx = A1 + A2 + n
        r1 = r2 = sum_main
        total = sum_main
        alt = 0.5 * LOG2_2PIE + 0.5 * np.log2(w) + _log2_half(rx / (e * rx + w))
    else:  # pragma: no cover
        raise ValueError(kind)
    return r1, r2, total, alt


def per_state_terms(channel, alloc: PowerAllocation, s1: int, s2: int, s: int, kind: BoundKind) -> RateTriple:
    """Unclamped integrand of the selected bound at one state triple.

    States are integer indices. For ``SfOut`` the returned total is the
    pointwise minimum of the two sum-rate integrands; the expected bound
    instead takes the minimum after averaging (see :func:`expected_bounds`).
    """
    kind = BoundKind(kind)
    k = channel.k
    if alloc.k != k:
        raise ShapeError(f"allocation has {alloc.k} states, channel has {k}")
    r1, r2, total, alt = _integrands(channel, alloc.p1[None], alloc.p2[None], kind)
    idx = (0, s1, s2, s)
    t = total[idx] if alt is None else min(total[idx], alt[idx])
    return RateTriple(float(r1[idx]), float(r2[idx]), float(t))


def _law(chain, d1, d2, law):
    return law if law is not None else joint_delayed_pmf(chain, d1, d2)


def expected_bounds_batch(channel, law: DelayedJointLaw, P1, P2, kind: BoundKind, chunk: int = 65536) -> np.ndarray:
    """Clamped ``(a, b, c)`` for many allocations at once.

    ``P1`` has shape (n, k) and ``P2`` shape (n, k, k). Returns (n, 3).
    """
    kind = BoundKind(kind)
    P1 = np.asarray(P1, dtype=float)
    P2 = np.asarray(P2, dtype=float)
    w = law.pmf
    out = np.empty((P1.shape[0], 3))
    for lo in range(0, P1.shape[0], chunk):
        hi = min(lo + chunk, P1.shape[0])
        r1, r2, total, alt = _integrands(channel, P1[lo:hi], P2[lo:hi], kind)
        e1 = np.einsum("nabc,abc->n", r1, w)
        e2 = np.einsum("nabc,abc->n", r2, w)
        et = np.einsum("nabc,abc->n", total, w)
        if alt is not None:
            et = np.minimum(et, np.einsum("nabc,abc->n", alt, w))
        out[lo:hi, 0] = e1
        out[lo:hi, 1] = e2
        out[lo:hi, 2] = et
    return np.maximum(out, 0.0)


def expected_bounds(channel, chain: MarkovChain, d1: int, d2: int, alloc: PowerAllocation,
                    kind: BoundKind, law: DelayedJointLaw | None = None) -> RegionBounds:
    """Average the per-state integrands over the delayed-state law and clamp at 0.

    ``law`` overrides the joint law of ``(s~1, s~2, s)``; by default it is
    :func:`joint_delayed_pmf` of ``chain`` with delays ``d1 >= d2``.
    """
    law = _law(chain, d1, d2, law)
    if alloc.k != law.pmf.shape[0] or channel.k != law.pmf.shape[0]:
        raise ShapeError("allocation / channel / chain state counts differ")
    a, b, c = expected_bounds_batch(channel, law, alloc.p1[None], alloc.p2[None], kind)[0]
    return RegionBounds(float(a), float(b), float(c))


def sum_rate_components(channel, chain, d1, d2, alloc: PowerAllocation, law=None) -> dict:
    """Unclamped expected sum-rate pieces of the feedback inner bound.

    Keys: ``without_key`` (the state-feedback inner sum), ``key_term``
    (the averaged secret-key minimum, may be negative) and ``with_key``.
    """
    law = _law(chain, d1, d2, law)
    r1, r2, total_s, _ = _integrands(channel, alloc.p1[None], alloc.p2[None], BoundKind.S_IN)
    _, _, total_sf, _ = _integrands(channel, alloc.p1[None], alloc.p2[None], BoundKind.SF_IN)
    no_key = float(np.einsum("nabc,abc->", total_s, law.pmf))
    with_key = float(np.einsum("nabc,abc->", total_sf, law.pmf))
    return {"without_key": no_key, "key_term": with_key - no_key, "with_key": with_key}
