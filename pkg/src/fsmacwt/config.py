"""Experiment configuration files.

One experiment per file, in INI syntax (``configparser``). List values are
comma separated; matrix rows are separated by ``;``. Example::

    [chain]
    model = gilbert_elliott
    g = 0.05
    b = 0.05

    [channel]
    h1 = 1, 0.5
    h2 = 1, 0.7
    h3 = 1, 0.9
    sigma_s2 = 1, 2
    sigma_w2 = 400

    [delays]
    d1 = 100
    d2 = 10

    [budget]
    p1_power = 100
    p2_power = 100

Task sections (``[sweep]``, ``[region]``, ``[discrete]``, ``[validate]``)
are optional and only read by the matching subcommand.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .channel_models import DiscreteChannelSpec, GaussianFadingChannel, PowerBudget, validate_gaussian
from .errors import ConfigError
from .gaussian_bounds import BoundKind
from .markov_state import MarkovChain, build_gilbert_elliott, gilbert_elliott_from_memory

__all__ = [
    "ChainConfig",
    "ChannelConfig",
    "OptimizerConfig",
    "SweepConfig",
    "RegionConfig",
    "DiscreteConfig",
    "ValidateConfig",
    "ExperimentConfig",
    "parse_config",
    "serialize_config",
    "load_config",
    "DISCRETE_KINDS",
]

DISCRETE_KINDS = ("inner_s", "inner_sf", "degraded_outer_s", "relaxed_outer_sf")


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _ints(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from exc


def _words(text: str) -> tuple:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def _join(values) -> str:
    return ", ".join(_fmt(v) for v in values)


@dataclass(frozen=True)
class ChainConfig:
    """``model`` is ``gilbert_elliott`` (g, b), ``memory`` (u, c) or ``matrix``."""

    model: str = "gilbert_elliott"
    g: float | None = None
    b: float | None = None
    u: float | None = None
    c: float | None = None
    states: tuple = ()
    transition: tuple = ()

    def build(self) -> MarkovChain:
        if self.model == "gilbert_elliott":
            return build_gilbert_elliott(self.g, self.b)
        if self.model == "memory":
            return gilbert_elliott_from_memory(self.u, self.c)
        return MarkovChain(self.states, np.array(self.transition, dtype=float))

    def asymmetry(self) -> float:
        """``c = g / b`` of a two-state chain."""
        if self.model == "memory":
            return float(self.c)
        chain = self.build()
        if chain.k != 2:
            raise ConfigError("u sweeps need a two-state chain")
        return float(chain.transition[0, 1] / chain.transition[1, 0])


@dataclass(frozen=True)
class ChannelConfig:
    h1: tuple
    h2: tuple
    h3: tuple
    sigma_s2: tuple
    sigma_w2: float


@dataclass(frozen=True)
class OptimizerConfig:
    grid_levels: int = 11
    refine_iters: int = 60
    tol: float = 1e-9
    seed: int = 0


@dataclass(frozen=True)
class SweepConfig:
    delays: tuple = (0, 1, 2, 5, 10, 20, 50, 100)
    mode: str = "equal"  # equal: d1 = d2 = d; d2_zero: d1 = d, d2 = 0
    kinds: tuple = ("SfIn",)
    u_values: tuple = ()
    noise_state: str = ""
    noise_values: tuple = ()


@dataclass(frozen=True)
class RegionConfig:
    kinds: tuple = ("SIn", "SOut", "SfIn", "SfOut", "CapNoEve")
    weight_count: int = 21
    angle_samples: int = 181
    variant: str = "hull"


@dataclass(frozen=True)
class DiscreteConfig:
    """Kernel ``P(y,z|x1,x2,s)`` flattened in C order over ``shape = (|S|,|X1|,|X2|,|Y|,|Z|)``."""

    shape: tuple = ()
    kernel: tuple = ()
    degraded: bool = False
    q_size: int = 1
    kinds: tuple = ("inner_s", "inner_sf", "relaxed_outer_sf")
    starts: int = 8
    refine_iters: int = 40
    seed: int = 0
    # optional fixed policy (used by validate); flattened like InputPolicy
    q_given: tuple = ()
    x1_given: tuple = ()
    x2_given: tuple = ()

    def spec(self) -> DiscreteChannelSpec:
        if not self.shape or len(self.shape) != 5:
            raise ConfigError("[discrete] shape must list 5 sizes (s, x1, x2, y, z)")
        if len(self.kernel) != int(np.prod(self.shape)):
            raise ConfigError(f"[discrete] kernel has {len(self.kernel)} entries, shape needs {int(np.prod(self.shape))}")
        return DiscreteChannelSpec(np.array(self.kernel).reshape(self.shape), self.degraded)


@dataclass(frozen=True)
class ValidateConfig:
    n: int = 1_000_000
    seeds: tuple = (42,)
    tolerance: float = 0.01


@dataclass(frozen=True)
class ExperimentConfig:
    chain: ChainConfig | None = None
    channel: ChannelConfig | None = None
    d1: int = 0
    d2: int = 0
    p1: float = 0.0
    p2: float = 0.0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    sweep: SweepConfig | None = None
    region: RegionConfig | None = None
    discrete: DiscreteConfig | None = None
    validate: ValidateConfig | None = None

    def build_chain(self) -> MarkovChain:
        if self.chain is None:
            raise ConfigError("missing [chain] section")
        return self.chain.build()

    def build_channel(self, chain: MarkovChain) -> GaussianFadingChannel:
        if self.channel is None:
            raise ConfigError("missing [channel] section")
        ch = self.channel
        return validate_gaussian(
            GaussianFadingChannel(chain.states, ch.h1, ch.h2, ch.h3, ch.sigma_s2, ch.sigma_w2), chain
        )

    def budget(self) -> PowerBudget:
        return PowerBudget(self.p1, self.p2)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        out = replace(self, optimizer=replace(self.optimizer, seed=seed))
        if out.discrete is not None:
            out = replace(out, discrete=replace(out.discrete, seed=seed))
        if out.validate is not None:
            out = replace(out, validate=replace(out.validate, seeds=(seed,)))
        return out


def _get(sec, key, conv, default=None, required=False):
    if key not in sec:
        if required:
            raise ConfigError(f"[{sec.name}] is missing {key!r}")
        return default
    raw = sec[key]
    try:
        return conv(raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{sec.name}] {key} = {raw!r}: {exc}") from exc


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _matrix(text: str) -> tuple:
    rows = tuple(_floats(r) for r in text.split(";") if r.strip())
    if len({len(r) for r in rows}) > 1:
        raise ConfigError("transition rows have different lengths")
    return rows


def _check_keys(sec, allowed):
    extra = set(sec.keys()) - set(allowed)
    if extra:
        raise ConfigError(f"[{sec.name}] has unknown keys {sorted(extra)}")


_SECTIONS = ("chain", "channel", "delays", "budget", "optimizer", "sweep", "region", "discrete", "validate")


def parse_config(text: str) -> ExperimentConfig:
    """Parse configuration text; raises :class:`ConfigError` on any problem."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    unknown = set(cp.sections()) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    kw = {}
    if cp.has_section("chain"):
        s = cp["chain"]
        _check_keys(s, ("model", "g", "b", "u", "c", "states", "transition"))
        model = _get(s, "model", str.strip, "gilbert_elliott")
        if model == "gilbert_elliott":
            chain = ChainConfig(model, g=_get(s, "g", float, required=True), b=_get(s, "b", float, required=True))
        elif model == "memory":
            chain = ChainConfig(model, u=_get(s, "u", float, required=True), c=_get(s, "c", float, required=True))
        elif model == "matrix":
            chain = ChainConfig(model, states=_get(s, "states", _words, required=True),
                                transition=_get(s, "transition", _matrix, required=True))
        else:
            raise ConfigError(f"[chain] model must be gilbert_elliott, memory or matrix, got {model!r}")
        kw["chain"] = chain
    if cp.has_section("channel"):
        s = cp["channel"]
        _check_keys(s, ("h1", "h2", "h3", "sigma_s2", "sigma_w2"))
        kw["channel"] = ChannelConfig(
            *(_get(s, k, _floats, required=True) for k in ("h1", "h2", "h3", "sigma_s2")),
            sigma_w2=_get(s, "sigma_w2", float, required=True),
        )
    if cp.has_section("delays"):
        s = cp["delays"]
        _check_keys(s, ("d1", "d2"))
        kw["d1"] = _get(s, "d1", int, 0)
        kw["d2"] = _get(s, "d2", int, 0)
    if cp.has_section("budget"):
        s = cp["budget"]
        _check_keys(s, ("p1_power", "p2_power"))
        kw["p1"] = _get(s, "p1_power", float, 0.0)
        kw["p2"] = _get(s, "p2_power", float, 0.0)
    if cp.has_section("optimizer"):
        s = cp["optimizer"]
        d = OptimizerConfig()
        _check_keys(s, ("grid_levels", "refine_iters", "tol", "seed"))
        kw["optimizer"] = OptimizerConfig(
            _get(s, "grid_levels", int, d.grid_levels),
            _get(s, "refine_iters", int, d.refine_iters),
            _get(s, "tol", float, d.tol),
            _get(s, "seed", int, d.seed),
        )
    if cp.has_section("sweep"):
        s = cp["sweep"]
        d = SweepConfig()
        _check_keys(s, ("delays", "mode", "kinds", "u_values", "noise_state", "noise_values"))
        kw["sweep"] = SweepConfig(
            _get(s, "delays", _ints, d.delays),
            _get(s, "mode", str.strip, d.mode),
            _get(s, "kinds", _words, d.kinds),
            _get(s, "u_values", _floats, ()),
            _get(s, "noise_state", str.strip, ""),
            _get(s, "noise_values", _floats, ()),
        )
    if cp.has_section("region"):
        s = cp["region"]
        d = RegionConfig()
        _check_keys(s, ("kinds", "weight_count", "angle_samples", "variant"))
        kw["region"] = RegionConfig(
            _get(s, "kinds", _words, d.kinds),
            _get(s, "weight_count", int, d.weight_count),
            _get(s, "angle_samples", int, d.angle_samples),
            _get(s, "variant", str.strip, d.variant),
        )
    if cp.has_section("discrete"):
        s = cp["discrete"]
        d = DiscreteConfig()
        _check_keys(s, ("shape", "kernel", "degraded", "q_size", "kinds", "starts", "refine_iters", "seed",
                        "q_given", "x1_given", "x2_given"))
        kw["discrete"] = DiscreteConfig(
            _get(s, "shape", _ints, required=True),
            _get(s, "kernel", _floats, required=True),
            _get(s, "degraded", _bool, False),
            _get(s, "q_size", int, d.q_size),
            _get(s, "kinds", _words, d.kinds),
            _get(s, "starts", int, d.starts),
            _get(s, "refine_iters", int, d.refine_iters),
            _get(s, "seed", int, d.seed),
            _get(s, "q_given", _floats, ()),
            _get(s, "x1_given", _floats, ()),
            _get(s, "x2_given", _floats, ()),
        )
    if cp.has_section("validate"):
        s = cp["validate"]
        d = ValidateConfig()
        _check_keys(s, ("n", "seeds", "tolerance"))
        kw["validate"] = ValidateConfig(
            _get(s, "n", int, d.n), _get(s, "seeds", _ints, d.seeds), _get(s, "tolerance", float, d.tolerance)
        )
    cfg = ExperimentConfig(**kw)
    _check(cfg)
    return cfg


def _check(cfg: ExperimentConfig):
    """Cheap consistency checks that do not need the numerical modules."""
    if cfg.d1 < 0 or cfg.d2 < 0:
        raise ConfigError("delays must be >= 0")
    if cfg.sweep is not None:
        if not cfg.sweep.delays:
            raise ConfigError("[sweep] delays must not be empty")
        if min(cfg.sweep.delays) < 0:
            raise ConfigError("[sweep] delays must be >= 0")
        if cfg.sweep.mode not in ("equal", "d2_zero"):
            raise ConfigError(f"[sweep] mode must be equal or d2_zero, got {cfg.sweep.mode!r}")
        if cfg.sweep.noise_values and not cfg.sweep.noise_state:
            raise ConfigError("[sweep] noise_values needs noise_state")
        _kinds(cfg.sweep.kinds)
    if cfg.region is not None:
        if not cfg.region.kinds:
            raise ConfigError("[region] needs at least one bound kind")
        _kinds(cfg.region.kinds)
        if cfg.region.variant not in ("hull", "raw"):
            raise ConfigError(f"[region] variant must be hull or raw, got {cfg.region.variant!r}")
        if cfg.region.weight_count < 1 or cfg.region.angle_samples < 2:
            raise ConfigError("[region] weight_count must be >= 1 and angle_samples >= 2")
    if cfg.discrete is not None:
        bad = set(cfg.discrete.kinds) - set(DISCRETE_KINDS)
        if bad:
            raise ConfigError(f"[discrete] unknown kinds {sorted(bad)}; expected {list(DISCRETE_KINDS)}")
    o = cfg.optimizer
    if o.grid_levels < 2 or not o.tol > 0 or o.refine_iters < 0:
        raise ConfigError("[optimizer] needs grid_levels >= 2, refine_iters >= 0 and tol > 0")
    if cfg.validate is not None and (cfg.validate.n < 1 or not cfg.validate.seeds):
        raise ConfigError("[validate] needs n >= 1 and at least one seed")


def _kinds(names):
    try:
        return [BoundKind.parse(k) for k in names]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def serialize_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config` (up to comments and key order)."""
    cp = configparser.ConfigParser(interpolation=None)
    if cfg.chain is not None:
        c = cfg.chain
        sec = {"model": c.model}
        if c.model == "gilbert_elliott":
            sec.update(g=_fmt(c.g), b=_fmt(c.b))
        elif c.model == "memory":
            sec.update(u=_fmt(c.u), c=_fmt(c.c))
        else:
            sec.update(states=", ".join(c.states), transition="; ".join(_join(r) for r in c.transition))
        cp["chain"] = sec
    if cfg.channel is not None:
        ch = cfg.channel
        cp["channel"] = {"h1": _join(ch.h1), "h2": _join(ch.h2), "h3": _join(ch.h3),
                         "sigma_s2": _join(ch.sigma_s2), "sigma_w2": _fmt(ch.sigma_w2)}
    cp["delays"] = {"d1": str(cfg.d1), "d2": str(cfg.d2)}
    cp["budget"] = {"p1_power": _fmt(cfg.p1), "p2_power": _fmt(cfg.p2)}
    o = cfg.optimizer
    cp["optimizer"] = {"grid_levels": str(o.grid_levels), "refine_iters": str(o.refine_iters),
                       "tol": _fmt(o.tol), "seed": str(o.seed)}
    if cfg.sweep is not None:
        s = cfg.sweep
        sec = {"delays": _join(s.delays), "mode": s.mode, "kinds": ", ".join(s.kinds)}
        if s.u_values:
            sec["u_values"] = _join(s.u_values)
        if s.noise_state:
            sec["noise_state"] = s.noise_state
        if s.noise_values:
            sec["noise_values"] = _join(s.noise_values)
        cp["sweep"] = sec
    if cfg.region is not None:
        r = cfg.region
        cp["region"] = {"kinds": ", ".join(r.kinds), "weight_count": str(r.weight_count),
                        "angle_samples": str(r.angle_samples), "variant": r.variant}
    if cfg.discrete is not None:
        d = cfg.discrete
        sec = {"shape": _join(d.shape), "kernel": _join(d.kernel), "degraded": str(d.degraded).lower(),
               "q_size": str(d.q_size), "kinds": ", ".join(d.kinds), "starts": str(d.starts),
               "refine_iters": str(d.refine_iters), "seed": str(d.seed)}
        for name in ("q_given", "x1_given", "x2_given"):
            if getattr(d, name):
                sec[name] = _join(getattr(d, name))
        cp["discrete"] = sec
    if cfg.validate is not None:
        v = cfg.validate
        cp["validate"] = {"n": str(v.n), "seeds": _join(v.seeds), "tolerance": _fmt(v.tolerance)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
