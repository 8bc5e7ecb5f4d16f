"""Command line front end: ``fsmacwt {sweep-delay,region,discrete,validate}``.

Every subcommand writes CSV (12 significant digits, ``\\n`` line endings)
to ``--out`` or stdout. Exit codes: 0 success, 2 configuration error,
3 numeric guard violation, 1 failed checks under ``validate --strict``.
"""

from __future__ import annotations

import argparse
import io
import logging
import sys
from dataclasses import replace

import numpy as np

from .allocation_optimizer import OptimizerOptions, frontier_allocations, maximize_sum_rate
from .channel_models import validate_discrete
from .config import ChainConfig, DiscreteConfig, ExperimentConfig, ValidateConfig, load_config
from .discrete_bounds import (
    BOUND_OPS,
    InputPolicy,
    SearchOptions,
    assemble_joint,
    info_terms,
    optimize_policy,
)
from .errors import CardinalityError, ConfigError, FsmacError, GuardError
from .gaussian_bounds import BoundKind
from .markov_state import (
    d_step_matrix,
    gilbert_elliott_from_memory,
    joint_delayed_pmf,
    joint_pmf_from_factors,
    stationary_matrix,
)
from .monte_carlo import empirical_info_terms, simulate_discrete
from .region_geometry import convex_hull_frontier, format_number, union_frontier

__all__ = [
    "run_sweep_delay",
    "run_region",
    "run_discrete",
    "run_validate",
    "default_validate_config",
    "main",
]

log = logging.getLogger("fsmacwt")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_GUARD = 0, 1, 2, 3


def _row(*fields) -> str:
    return ",".join(format_number(f) if isinstance(f, (float, np.floating)) else str(f) for f in fields) + "\n"


def _opts(cfg: ExperimentConfig) -> OptimizerOptions:
    o = cfg.optimizer
    return OptimizerOptions(grid_levels=o.grid_levels, refine_iters=o.refine_iters, tol=o.tol, seed=o.seed)


def _relabel(cfg: ExperimentConfig) -> tuple[ExperimentConfig, bool]:
    """Swap transmitter labels when ``d1 < d2`` so that the bounds see ``d1 >= d2``."""
    if cfg.d1 >= cfg.d2:
        return cfg, False
    log.warning("d1=%d < d2=%d: relabeling transmitters (user 1 <-> user 2) for the computation",
                cfg.d1, cfg.d2)
    ch = cfg.channel
    if ch is not None:
        ch = replace(ch, h1=ch.h2, h2=ch.h1)
    return replace(cfg, channel=ch, d1=cfg.d2, d2=cfg.d1, p1=cfg.p2, p2=cfg.p1), True


def _limit_law(chain, mode: str):
    """Delayed law with every ``K^d`` of a growing delay replaced by its rank-one limit."""
    pi = chain.pi
    if mode == "equal":
        return joint_pmf_from_factors(pi, d_step_matrix(chain, 0), stationary_matrix(chain))
    return joint_pmf_from_factors(pi, stationary_matrix(chain), d_step_matrix(chain, 0))


def run_sweep_delay(cfg: ExperimentConfig) -> str:
    """Maximum sum rate against delay, with its infinite-delay asymptote.

    Rows ``d,bound_kind,sum_rate_bits,asymptote_bits``, preceded by ``u``
    and/or ``sigma_s2`` columns when those sweeps are configured. In
    ``equal`` mode ``d1 = d2 = d``; in ``d2_zero`` mode ``d1 = d, d2 = 0``.
    """
    if cfg.sweep is None:
        raise ConfigError("sweep-delay needs a [sweep] section")
    sw = cfg.sweep
    base_chain = cfg.build_chain()
    budget = cfg.budget()
    opts = _opts(cfg)
    kinds = [BoundKind.parse(k) for k in sw.kinds]
    chains = [(None, base_chain)]
    if sw.u_values:
        c = cfg.chain.asymmetry()
        chains = [(u, gilbert_elliott_from_memory(u, c)) for u in sw.u_values]
    noises = [(None, None)]
    if sw.noise_values:
        if sw.noise_state not in base_chain.states:
            raise ConfigError(f"[sweep] noise_state {sw.noise_state!r} is not a chain state")
        noises = [(sw.noise_state, v) for v in sw.noise_values]

    header = (["u"] if sw.u_values else []) + (["sigma_s2"] if sw.noise_values else [])
    out = io.StringIO()
    out.write(",".join(header + ["d", "bound_kind", "sum_rate_bits", "asymptote_bits"]) + "\n")
    for u, chain in chains:
        for state, value in noises:
            sub = cfg
            if state is not None:
                s2 = list(cfg.channel.sigma_s2)
                s2[base_chain.index(state)] = value
                sub = replace(cfg, channel=replace(cfg.channel, sigma_s2=tuple(s2)))
            channel = sub.build_channel(chain)
            lead = ([float(u)] if u is not None else []) + ([float(value)] if value is not None else [])
            for kind in kinds:
                _, limit = maximize_sum_rate(channel, chain, 0, 0, kind, budget, opts,
                                             law=_limit_law(chain, sw.mode))
                for d in sw.delays:
                    d1, d2 = (d, d) if sw.mode == "equal" else (d, 0)
                    _, rate = maximize_sum_rate(channel, chain, d1, d2, kind, budget, opts,
                                                law=joint_delayed_pmf(chain, d1, d2))
                    out.write(_row(*lead, d, kind.value, rate, limit))
    return out.getvalue()


def run_region(cfg: ExperimentConfig, variant: str | None = None) -> str:
    """Frontier points ``bound_kind,R1,R2`` of each requested bound (hull or raw union)."""
    if cfg.region is None:
        raise ConfigError("region needs a [region] section")
    rc = cfg.region
    variant = variant or rc.variant
    cfg, swapped = _relabel(cfg)
    chain = cfg.build_chain()
    channel = cfg.build_channel(chain)
    budget = cfg.budget()
    opts = _opts(cfg)
    law = joint_delayed_pmf(chain, cfg.d1, cfg.d2)
    out = io.StringIO()
    out.write("bound_kind,R1,R2\n")
    for name in rc.kinds:
        kind = BoundKind.parse(name)
        res = frontier_allocations(channel, chain, cfg.d1, cfg.d2, kind, budget, rc.weight_count, opts, law=law)
        f = union_frontier([rb for _, rb in res], rc.angle_samples)
        if variant == "hull":
            f = convex_hull_frontier(f)
        if swapped:
            f = f.swapped()
        for r1, r2 in f.points:
            out.write(_row(kind.value, float(r1), float(r2)))
    return out.getvalue()


def _policy_from_config(dc: DiscreteConfig, k: int) -> InputPolicy:
    _, nx1, nx2, _, _ = dc.shape
    nq = dc.q_size
    try:
        return InputPolicy(
            np.array(dc.q_given).reshape(k, nq),
            np.array(dc.x1_given).reshape(k, nq, nx1),
            np.array(dc.x2_given).reshape(k, k, nq, nx2),
        )
    except ValueError as exc:
        raise ConfigError(f"[discrete] fixed policy does not match shape {dc.shape}: {exc}") from exc


def _flat(arr) -> str:
    return " ".join(format_number(v) for v in np.ravel(arr))


def run_discrete(cfg: ExperimentConfig) -> str:
    """Optimized discrete bounds: rows ``bound_kind,a,b,c,q_given,x1_given,x2_given``.

    Caps are reported in reduced form (``a, b <= c``), which describes the
    same pentagon. Policy columns hold the optimizing conditionals flattened
    in C order and separated by spaces. After a relabel (``d1 < d2``) the
    policy columns stay in the relabeled frame, where user 1 has the longer delay.
    """
    if cfg.discrete is None:
        raise ConfigError("discrete needs a [discrete] section")
    dc = cfg.discrete
    cfg, swapped = _relabel(cfg)
    chain = cfg.build_chain()
    spec = validate_discrete(dc.spec())
    if swapped:
        spec = validate_discrete(spec.swapped())
    opts = SearchOptions(q_size=dc.q_size, starts=dc.starts, refine_iters=dc.refine_iters, seed=dc.seed)
    out = io.StringIO()
    out.write("bound_kind,a,b,c,q_given,x1_given,x2_given\n")
    for name in dc.kinds:
        policy, rb = optimize_policy(spec, chain, cfg.d1, cfg.d2, BOUND_OPS[name], opts)
        rb = rb.reduced()
        if swapped:
            rb = rb.swapped()
        out.write(_row(name, rb.a, rb.b, rb.c, _flat(policy.q_given), _flat(policy.x1_given),
                       _flat(policy.x2_given)))
    return out.getvalue()


def default_validate_config() -> ExperimentConfig:
    """Binary two-state instance used by ``validate`` without a config.

    ``Y = X1 xor X2`` through a state-dependent binary symmetric channel
    (crossover 0.05 in G, 0.3 in B); ``Z`` is ``Y`` through a BSC(0.2).
    Delays ``(2, 1)``, two time-sharing symbols and a fixed asymmetric
    input policy.
    """
    flip = {0: 0.05, 1: 0.3}
    kern = np.zeros((2, 2, 2, 2, 2))
    for s in range(2):
        for x1 in range(2):
            for x2 in range(2):
                for y in range(2):
                    py = 1 - flip[s] if y == x1 ^ x2 else flip[s]
                    for z in range(2):
                        kern[s, x1, x2, y, z] = py * (0.8 if z == y else 0.2)
    q = np.array([[0.6, 0.4], [0.3, 0.7]])
    x1 = np.array([[[0.7, 0.3], [0.2, 0.8]], [[0.5, 0.5], [0.9, 0.1]]])
    x2 = np.array([
        [[[0.4, 0.6], [0.75, 0.25]], [[0.15, 0.85], [0.5, 0.5]]],
        [[[0.65, 0.35], [0.3, 0.7]], [[0.55, 0.45], [0.1, 0.9]]],
    ])
    dc = DiscreteConfig(
        shape=(2, 2, 2, 2, 2), kernel=tuple(kern.ravel().tolist()), degraded=True, q_size=2,
        q_given=tuple(q.ravel().tolist()), x1_given=tuple(x1.ravel().tolist()),
        x2_given=tuple(x2.ravel().tolist()),
    )
    return ExperimentConfig(
        chain=ChainConfig("gilbert_elliott", g=0.1, b=0.2), d1=2, d2=1,
        discrete=dc, validate=ValidateConfig(n=1_000_000, seeds=(42,), tolerance=0.01),
    )


def run_validate(cfg: ExperimentConfig | None = None) -> tuple[str, bool]:
    """Monte Carlo plug-in estimates against the analytic information terms.

    Rows ``seed,term,analytic,empirical,abs_error,tolerance,status``.
    Returns ``(csv, all_passed)``. Small sample sizes only emit a warning.
    """
    cfg = cfg or default_validate_config()
    if cfg.discrete is None:
        raise ConfigError("validate needs a [discrete] section (or no config for the default instance)")
    vc = cfg.validate or ValidateConfig()
    dc = cfg.discrete
    cfg, swapped = _relabel(cfg)
    chain = cfg.build_chain()
    spec = validate_discrete(dc.spec())
    if swapped:
        raise ConfigError("validate needs d1 >= d2 (a fixed policy cannot be relabeled)")
    policy = _policy_from_config(dc, chain.k) if dc.q_given else InputPolicy.uniform(
        chain.k, dc.q_size, dc.shape[1], dc.shape[2])
    analytic = info_terms(assemble_joint(spec, policy, joint_delayed_pmf(chain, cfg.d1, cfg.d2)))
    out = io.StringIO()
    out.write("seed,term,analytic,empirical,abs_error,tolerance,status\n")
    ok = True
    for seed in vc.seeds:
        run = simulate_discrete(spec, policy, chain, cfg.d1, cfg.d2, vc.n, seed)
        est = empirical_info_terms(run)
        for term, value in analytic.items():
            err = abs(est[term] - value)
            passed = err < vc.tolerance
            ok &= passed
            out.write(_row(seed, f'"{term}"', float(value), float(est[term]), float(err),
                           float(vc.tolerance), "pass" if passed else "FAIL"))
    return out.getvalue(), ok


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fsmacwt", description="Secrecy-region bounds for the finite-state "
                                "MAC wiretap channel with delayed feedback.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="experiment config (INI)")
        sp.add_argument("--out", help="write CSV here instead of stdout")
        sp.add_argument("--seed", type=int, help="override every seed in the config")

    common(sub.add_parser("sweep-delay", help="maximum sum rate against delay"))
    rp = sub.add_parser("region", help="frontiers of the Gaussian region bounds")
    common(rp)
    g = rp.add_mutually_exclusive_group()
    g.add_argument("--hull", dest="variant", action="store_const", const="hull", help="convex hull (default)")
    g.add_argument("--raw", dest="variant", action="store_const", const="raw", help="raw sampled union")
    common(sub.add_parser("discrete", help="optimized finite-alphabet bounds"))
    vp = sub.add_parser("validate", help="Monte Carlo check of the discrete information terms")
    common(vp, config_required=False)
    vp.add_argument("--n", type=int, help="override the sample size")
    vp.add_argument("--strict", action="store_true", help="exit 1 when any term misses its tolerance")
    return p


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)
    try:
        cfg = load_config(args.config) if args.config else None
        if cfg is not None and args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        status = EXIT_OK
        if args.command == "sweep-delay":
            text = run_sweep_delay(cfg)
        elif args.command == "region":
            text = run_region(cfg, args.variant)
        elif args.command == "discrete":
            text = run_discrete(cfg)
        else:
            if cfg is None:
                cfg = default_validate_config()
                if args.seed is not None:
                    cfg = cfg.with_seed(args.seed)
            if args.n is not None:
                cfg = replace(cfg, validate=replace(cfg.validate or ValidateConfig(), n=args.n))
            text, ok = run_validate(cfg)
            if args.strict and not ok:
                status = EXIT_FAILED
        _emit(text, args.out)
        return status
    except (GuardError, CardinalityError) as exc:
        log.error("%s", exc)
        return EXIT_GUARD
    except (FsmacError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    finally:
        logging.captureWarnings(False)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
