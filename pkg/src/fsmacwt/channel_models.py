"""Channel parameterizations: degraded Gaussian fading and finite-alphabet kernels."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .markov_state import MarkovChain

__all__ = [
    "GaussianFadingChannel",
    "PowerBudget",
    "DiscreteChannelSpec",
    "validate_gaussian",
    "validate_discrete",
    "fit_degrading_channel",
    "degraded_kernel",
]

NORMALIZATION_TOL = 1e-12
DEGRADED_TOL = 1e-9


@dataclass(frozen=True)
class GaussianFadingChannel:
    """Per-state gains and noise of ``Y = h1 X1 + h2 X2 + N_s``, ``Z = h3 Y + N_w``.

    Arrays are indexed in the order of ``states``. ``sigma_w2`` is a single
    state-independent variance.
    """

    states: tuple
    h1: np.ndarray
    h2: np.ndarray
    h3: np.ndarray
    sigma_s2: np.ndarray
    sigma_w2: float

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))
        for name in ("h1", "h2", "h3", "sigma_s2"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float)).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def k(self) -> int:
        return len(self.states)

    def swapped(self) -> "GaussianFadingChannel":
        """Same channel with the transmitter labels exchanged."""
        return GaussianFadingChannel(
            self.states, self.h2, self.h1, self.h3, self.sigma_s2, self.sigma_w2
        )


@dataclass(frozen=True)
class PowerBudget:
    p1: float
    p2: float

    def __post_init__(self):
        if not (self.p1 >= 0 and self.p2 >= 0):
            raise ValidationError([f"power budgets must be >= 0, got ({self.p1}, {self.p2})"])


def validate_gaussian(channel: GaussianFadingChannel, chain: MarkovChain) -> GaussianFadingChannel:
    """Check a Gaussian channel against its state chain.

    Returns the channel unchanged, or raises :class:`ValidationError`
    listing every violated invariant.
    """
    problems = []
    if tuple(channel.states) != tuple(chain.states):
        problems.append(f"channel states {channel.states} != chain states {chain.states}")
    k = len(channel.states)
    for name in ("h1", "h2", "h3", "sigma_s2"):
        arr = getattr(channel, name)
        if arr.shape != (k,):
            problems.append(f"{name} has shape {arr.shape}, expected ({k},)")
        elif not np.all(np.isfinite(arr)):
            problems.append(f"{name} has non-finite entries")
    if channel.sigma_s2.shape == (k,) and np.any(channel.sigma_s2 <= 0):
        bad = [channel.states[i] for i in np.flatnonzero(channel.sigma_s2 <= 0)]
        problems.append(f"sigma_s2 must be > 0 in every state, violated in {bad}")
    w = np.asarray(channel.sigma_w2)
    if w.ndim != 0:
        problems.append("sigma_w2 must be a single state-independent value")
    elif not (np.isfinite(w) and w > 0):
        problems.append(f"sigma_w2 must be > 0, got {channel.sigma_w2}")
    if problems:
        raise ValidationError(problems)
    return channel


@dataclass(frozen=True)
class DiscreteChannelSpec:
    """State-dependent discrete kernel ``P(y, z | x1, x2, s)``.

    ``kernel`` has axes ``(s, x1, x2, y, z)``. ``z_given_y`` is filled in by
    :func:`validate_discrete` for degraded specs (axes ``(y, z)``).
    """

    kernel: np.ndarray = field(repr=False)
    degraded: bool = False
    z_given_y: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        K = np.array(self.kernel, dtype=float)
        if K.ndim != 5:
            raise ValidationError([f"kernel must have 5 axes (s,x1,x2,y,z), got {K.ndim}"])
        K.setflags(write=False)
        object.__setattr__(self, "kernel", K)

    @property
    def shape(self):
        """``(|S|, |X1|, |X2|, |Y|, |Z|)``"""
        return self.kernel.shape

    @property
    def y_kernel(self) -> np.ndarray:
        """``P(y | x1, x2, s)`` with axes ``(s, x1, x2, y)``."""
        return self.kernel.sum(axis=4)

    def swapped(self) -> "DiscreteChannelSpec":
        return DiscreteChannelSpec(
            np.swapaxes(self.kernel, 1, 2), self.degraded, self.z_given_y
        )


def fit_degrading_channel(kernel: np.ndarray):
    """Least-squares ``P(z|y)`` for ``P(y,z|c) ~ P(y|c) P(z|y)``.

    Returns ``(z_given_y, max_abs_residual)``. Outputs never produced get a
    uniform row.
    """
    K = np.asarray(kernel, dtype=float)
    ny, nz = K.shape[-2:]
    flat = K.reshape(-1, ny, nz)
    py = flat.sum(axis=2)
    num = np.einsum("cy,cyz->yz", py, flat)
    den = (py**2).sum(axis=0)
    w = np.full((ny, nz), 1.0 / nz)
    used = den > 0
    w[used] = num[used] / den[used, None]
    resid = np.abs(flat - py[:, :, None] * w[None, :, :]).max() if flat.size else 0.0
    return w, float(resid)


def validate_discrete(spec: DiscreteChannelSpec) -> DiscreteChannelSpec:
    """Check normalization and, when flagged, degradedness.

    Returns a spec with ``z_given_y`` populated for degraded kernels.
    """
    K = spec.kernel
    problems = []
    if min(K.shape) < 1:
        problems.append(f"all alphabets must be nonempty, got shape {K.shape}")
    if not np.all(np.isfinite(K)) or (K.size and K.min() < 0):
        problems.append("kernel entries must be finite and nonnegative")
    sums = K.sum(axis=(3, 4))
    bad = np.argwhere(np.abs(sums - 1.0) > NORMALIZATION_TOL)
    for idx in bad[:5]:
        s, x1, x2 = (int(v) for v in idx)
        problems.append(f"slice (s={s}, x1={x1}, x2={x2}) sums to {sums[s, x1, x2]!r}")
    if len(bad) > 5:
        problems.append(f"... {len(bad) - 5} more unnormalized slices")
    if problems:
        raise ValidationError(problems)
    if not spec.degraded:
        return spec
    w, resid = fit_degrading_channel(K)
    if resid > DEGRADED_TOL:
        raise ValidationError([f"kernel flagged degraded but no P(z|y) fits (residual {resid:.3g})"])
    return DiscreteChannelSpec(K, True, w)


def degraded_kernel(y_kernel, z_given_y) -> np.ndarray:
    """Compose ``P(y|x1,x2,s)`` (axes s,x1,x2,y) with ``P(z|y)`` into a full kernel."""
    return np.einsum("abcy,yz->abcyz", np.asarray(y_kernel, float), np.asarray(z_given_y, float))
