import itertools

import numpy as np
import pytest

from fsmacwt.channel_models import DiscreteChannelSpec, degraded_kernel
from fsmacwt.discrete_bounds import (
    InputPolicy,
    SearchOptions,
    assemble_joint,
    degraded_outer_s,
    info_terms,
    inner_region_s,
    inner_region_sf,
    optimize_policy,
    relaxed_outer_sf,
)
from fsmacwt.errors import CardinalityError, GuardError, ShapeError, ValidationError
from fsmacwt.markov_state import MarkovChain, build_gilbert_elliott, joint_delayed_pmf

from oracles import blahut_arimoto, enumerate_joint, oracle_terms

ONE = MarkovChain(("s",), np.array([[1.0]]))
Z_TERMS = ["I(X1;Z|S,S1,S2,Q)", "I(X2;Z|S,S1,S2,Q)", "I(X1,X2;Z|S,S1,S2,Q)", "I(X1,X2;Z|S,S1,S2)"]


def random_kernel(rng, shape):
    ns, nx1, nx2, ny, nz = shape
    return rng.dirichlet(np.ones(ny * nz), size=(ns, nx1, nx2)).reshape(shape)


def random_policy(rng, k, nq, nx1, nx2):
    return InputPolicy(rng.dirichlet(np.ones(nq), size=k), rng.dirichlet(np.ones(nx1), size=(k, nq)),
                       rng.dirichlet(np.ones(nx2), size=(k, k, nq)))


def with_eavesdropper(y_kernel, mode, nz=2):
    """Full kernel from P(y|x1,x2,s): Z = Y, or Z independent uniform noise."""
    ns, nx1, nx2, ny = y_kernel.shape
    if mode == "copy":
        return degraded_kernel(y_kernel, np.eye(ny))
    return np.einsum("abcy,z->abcyz", y_kernel, np.full(nz, 1.0 / nz))


def adder_erasure(eps):
    """Y = X1 + X2 (ternary), Z = Y erased with probability eps (symbol 3)."""
    K = np.zeros((1, 2, 2, 3, 4))
    for a, b in itertools.product(range(2), repeat=2):
        K[0, a, b, a + b, a + b] = 1 - eps
        K[0, a, b, a + b, 3] = eps
    return K


def test_deterministic_policy_single_state():
    rng = np.random.default_rng(0)
    K = random_kernel(rng, (1, 2, 3, 2, 2))
    pol = InputPolicy([[1.0]], [[[0.0, 1.0]]], [[[[0.0, 0.0, 1.0]]]])
    j = assemble_joint(DiscreteChannelSpec(K), pol, joint_delayed_pmf(ONE, 0, 0))
    expected = np.zeros((1, 1, 1, 1, 2, 3, 2, 2))
    expected[0, 0, 0, 0, 1, 2] = K[0, 1, 2]
    np.testing.assert_allclose(j.p, expected, atol=1e-15)


def test_uniform_binary_cells():
    rng = np.random.default_rng(1)
    chain = build_gilbert_elliott(0.2, 0.3)
    K = random_kernel(rng, (2, 2, 2, 2, 2))
    law = joint_delayed_pmf(chain, 1, 0)
    j = assemble_joint(DiscreteChannelSpec(K), InputPolicy.uniform(2, 1, 2, 2), law)
    expected = 0.25 * np.einsum("avl,lxwyz->avlxwyz", law.pmf, K)
    np.testing.assert_allclose(j.p[0], expected, atol=1e-15)


def test_marginal_recovers_law():
    rng = np.random.default_rng(2)
    chain = build_gilbert_elliott(0.1, 0.4)
    law = joint_delayed_pmf(chain, 3, 1)
    K = random_kernel(rng, (2, 2, 3, 2, 3))
    j = assemble_joint(DiscreteChannelSpec(K), random_policy(rng, 2, 3, 2, 3), law)
    assert abs(j.p.sum() - 1) < 1e-10
    np.testing.assert_allclose(j.marginal({"s1", "s2", "s"}), law.pmf, atol=1e-12)


def test_shape_mismatch():
    rng = np.random.default_rng(3)
    chain = build_gilbert_elliott(0.1, 0.4)
    K = random_kernel(rng, (2, 2, 2, 2, 2))
    with pytest.raises(ShapeError):
        assemble_joint(DiscreteChannelSpec(K), InputPolicy.uniform(2, 1, 3, 2), joint_delayed_pmf(chain, 0, 0))


def test_policy_normalization():
    with pytest.raises(ValidationError):
        InputPolicy([[0.5, 0.4]], [[[1.0], [1.0]]], [[[[1.0], [1.0]]]])


def test_independent_eavesdropper_terms_zero():
    rng = np.random.default_rng(4)
    chain = build_gilbert_elliott(0.3, 0.3)
    yk = rng.dirichlet(np.ones(3), size=(2, 2, 2))
    K = with_eavesdropper(yk, "indep")
    t = info_terms(assemble_joint(DiscreteChannelSpec(K), random_policy(rng, 2, 2, 2, 2),
                                  joint_delayed_pmf(chain, 2, 1)))
    for name in Z_TERMS:
        assert t[name] < 1e-14


def test_noiseless_identity():
    # Y = X1, X2 constant
    K = np.zeros((2, 2, 1, 2, 1))
    for s, x in itertools.product(range(2), range(2)):
        K[s, x, 0, x, 0] = 1.0
    rng = np.random.default_rng(5)
    chain = build_gilbert_elliott(0.2, 0.1)
    pol = random_policy(rng, 2, 2, 2, 1)
    j = assemble_joint(DiscreteChannelSpec(K), pol, joint_delayed_pmf(chain, 1, 1))
    t = info_terms(j)
    # H(X1 | S~1, Q)
    pq = chain.pi[:, None] * pol.q_given
    h = -np.sum(pq[:, :, None] * pol.x1_given * np.log2(pol.x1_given))
    assert t["I(X1;Y|X2,S,S1,S2,Q)"] == pytest.approx(h, abs=1e-12)


@pytest.mark.parametrize("seed", range(100))
def test_definition_oracle(seed):
    rng = np.random.default_rng(seed)
    chain = build_gilbert_elliott(*rng.uniform(0.05, 0.95, 2))
    d2 = int(rng.integers(0, 3))
    d1 = d2 + int(rng.integers(0, 3))
    K = random_kernel(rng, (2, 2, 2, 2, 2))
    pol = random_policy(rng, 2, 2, 2, 2)
    law = joint_delayed_pmf(chain, d1, d2)
    got = info_terms(assemble_joint(DiscreteChannelSpec(K), pol, law))
    ref = oracle_terms(enumerate_joint(K, pol.q_given, pol.x1_given, pol.x2_given, law.pmf))
    for name, value in ref.items():
        assert abs(got[name] - value) < 1e-10, name
    # invariants
    assert all(v >= 0 for v in got.values())
    assert got["H(Y|Z,S,S1,S2)"] <= got["H(Y|S,S1,S2)"] + 1e-12
    chain_rule = got["I(X1;Y|S,S1,S2,Q)"] + got["I(X2;Y|X1,S,S1,S2,Q)"]
    assert abs(got["I(X1,X2;Y|S,S1,S2,Q)"] - chain_rule) < 1e-10
    # the feedback inner sum re-evaluated from the oracle terms
    sf = inner_region_sf(DiscreteChannelSpec(K), chain, d1, d2, pol)
    i1, i2 = ref["I(X1;Y|X2,S,S1,S2,Q)"], ref["I(X2;Y|X1,S,S1,S2,Q)"]
    iz = ref["I(X1,X2;Z|S,S1,S2)"]
    total = min(i1 + i2, ref["I(X1,X2;Y|S,S1,S2)"]) - iz + min(iz, ref["H(Y|Z,X1,X2,S,S1,S2)"])
    np.testing.assert_allclose(sf.as_tuple(), np.maximum([i1, i2, total], 0), atol=1e-10)
    # relaxed outer bound dominates the feedback inner bound
    out = relaxed_outer_sf(DiscreteChannelSpec(K), chain, d1, d2, pol)
    assert all(o >= i - 1e-12 for o, i in zip(out.as_tuple(), sf.as_tuple()))


def test_copy_eavesdropper_zero_secrecy():
    rng = np.random.default_rng(6)
    chain = build_gilbert_elliott(0.3, 0.2)
    yk = rng.dirichlet(np.ones(2), size=(2, 2, 2))
    spec = DiscreteChannelSpec(with_eavesdropper(yk, "copy"), degraded=True)
    for _ in range(5):
        pol = random_policy(rng, 2, 3, 2, 2)
        # individual caps may stay positive, the sum cap closes the region
        assert inner_region_s(spec, chain, 2, 1, pol).c == 0.0
        assert degraded_outer_s(spec, chain, 2, 1, pol).c == 0.0
        assert relaxed_outer_sf(spec, chain, 2, 1, pol).c == 0.0


def test_independent_eavesdropper_non_secret():
    rng = np.random.default_rng(7)
    chain = build_gilbert_elliott(0.3, 0.2)
    yk = rng.dirichlet(np.ones(3), size=(2, 2, 2))
    spec = DiscreteChannelSpec(with_eavesdropper(yk, "indep"))
    pol = random_policy(rng, 2, 2, 2, 2)
    t = info_terms(assemble_joint(spec, pol, joint_delayed_pmf(chain, 2, 1)))
    rb = inner_region_s(spec, chain, 2, 1, pol)
    expected = (t["I(X1;Y|X2,S,S1,S2,Q)"], t["I(X2;Y|X1,S,S1,S2,Q)"], t["I(X1,X2;Y|S,S1,S2,Q)"])
    np.testing.assert_allclose(rb.as_tuple(), expected, atol=1e-14)
    sf = inner_region_sf(spec, chain, 2, 1, pol)
    expected = min(t["I(X1;Y|X2,S,S1,S2,Q)"] + t["I(X2;Y|X1,S,S1,S2,Q)"], t["I(X1,X2;Y|S,S1,S2)"])
    assert sf.c == pytest.approx(expected, abs=1e-12)
    out = relaxed_outer_sf(spec, chain, 2, 1, pol)
    assert out.c == pytest.approx(t["I(X1,X2;Y|S,S1,S2)"], abs=1e-12)


def test_deterministic_output_no_key():
    K = adder_erasure(0.4)
    spec = DiscreteChannelSpec(K)
    pol = InputPolicy([[1.0]], [[[0.3, 0.7]]], [[[[0.6, 0.4]]]])
    t = info_terms(assemble_joint(spec, pol, joint_delayed_pmf(ONE, 0, 0)))
    assert t["H(Y|Z,X1,X2,S,S1,S2)"] == 0.0
    sf = inner_region_sf(spec, ONE, 0, 0, pol)
    i1, i2 = t["I(X1;Y|X2,S,S1,S2,Q)"], t["I(X2;Y|X1,S,S1,S2,Q)"]
    assert sf.c == pytest.approx(min(i1 + i2, t["I(X1,X2;Y|S,S1,S2)"]) - t["I(X1,X2;Z|S,S1,S2)"], abs=1e-12)


def test_cardinality_caps():
    rng = np.random.default_rng(8)
    spec = DiscreteChannelSpec(random_kernel(rng, (1, 2, 2, 2, 2)))
    with pytest.raises(CardinalityError):
        inner_region_s(spec, ONE, 0, 0, InputPolicy.uniform(1, 7, 2, 2))
    with pytest.raises(CardinalityError):
        inner_region_sf(spec, ONE, 0, 0, InputPolicy.uniform(1, 3, 2, 2))
    inner_region_s(spec, ONE, 0, 0, InputPolicy.uniform(1, 6, 2, 2))


def test_degraded_outer_needs_flag():
    rng = np.random.default_rng(9)
    spec = DiscreteChannelSpec(random_kernel(rng, (1, 2, 2, 2, 2)))
    with pytest.raises(ValidationError):
        degraded_outer_s(spec, ONE, 0, 0, InputPolicy.uniform(1, 1, 2, 2))


def test_degraded_outer_equals_inner_on_degraded():
    rng = np.random.default_rng(10)
    chain = build_gilbert_elliott(0.25, 0.15)
    for _ in range(10):
        yk = rng.dirichlet(np.ones(3), size=(2, 2, 2))
        spec = DiscreteChannelSpec(degraded_kernel(yk, rng.dirichlet(np.ones(2), size=3)), degraded=True)
        pol = random_policy(rng, 2, 2, 2, 2)
        a = degraded_outer_s(spec, chain, 3, 1, pol).as_tuple()
        b = inner_region_s(spec, chain, 3, 1, pol).as_tuple()
        np.testing.assert_allclose(a, b, atol=1e-12)
        t = info_terms(assemble_joint(spec, pol, joint_delayed_pmf(chain, 3, 1)))
        assert t["I(X1,X2;Z|S,S1,S2)"] <= t["I(X1,X2;Y|S,S1,S2)"] + 1e-12


def test_full_erasure_gives_non_secret():
    spec = DiscreteChannelSpec(adder_erasure(1.0), degraded=True)
    pol = InputPolicy([[1.0]], [[[0.5, 0.5]]], [[[[0.5, 0.5]]]])
    rb = degraded_outer_s(spec, ONE, 0, 0, pol)
    assert rb.as_tuple() == pytest.approx((1.0, 1.0, 1.5), abs=1e-12)


def _policy_grid(step=0.1):
    vals = np.round(np.arange(0, 1 + 1e-9, step), 10)
    for p, r in itertools.product(vals, vals):
        yield InputPolicy([[1.0]], [[[p, 1 - p]]], [[[[r, 1 - r]]]])


def _noisy_adder():
    # adder output through a ternary symmetric channel, eavesdropper erases w.p. 0.6
    T = np.array([[0.8, 0.15, 0.05], [0.1, 0.8, 0.1], [0.05, 0.15, 0.8]])
    yk = np.zeros((1, 2, 2, 3))
    for a, b in itertools.product(range(2), repeat=2):
        yk[0, a, b] = T[a + b]
    w = np.zeros((3, 4))
    w[:, 3] = 0.6
    w[np.arange(3), np.arange(3)] = 0.4
    return DiscreteChannelSpec(degraded_kernel(yk, w), degraded=True)


def test_grid_oracle_adder_erasure():
    spec = _noisy_adder()
    best = max(inner_region_s(spec, ONE, 0, 0, p).c for p in _policy_grid())
    _, rb = optimize_policy(spec, ONE, 0, 0, inner_region_s, SearchOptions(starts=4, seed=3))
    assert rb.c >= best - 0.01
    # every policy is evaluated by the same function, so the optimizer cannot beat the true maximum by much
    fine = max(inner_region_s(spec, ONE, 0, 0, p).c for p in _policy_grid(0.02))
    assert rb.c <= fine + 0.01


def test_degraded_outer_grid_ge_inner():
    spec = _noisy_adder()
    outer = max(degraded_outer_s(spec, ONE, 0, 0, p).c for p in _policy_grid(0.25))
    inner = max(inner_region_s(spec, ONE, 0, 0, p).c for p in _policy_grid(0.25))
    assert outer >= inner - 1e-12


def test_time_sharing_helps():
    spec = _noisy_adder()
    vals = [0.0, 0.5, 1.0]
    single = [inner_region_s(spec, ONE, 0, 0, p).as_tuple() for p in _policy_grid(0.5)]
    pair = []
    for q, p1, p2, r1, r2 in itertools.product(vals, repeat=5):
        pol = InputPolicy([[q, 1 - q]], [[[p1, 1 - p1], [p2, 1 - p2]]], [[[[r1, 1 - r1], [r2, 1 - r2]]]])
        pair.append(inner_region_s(spec, ONE, 0, 0, pol).as_tuple())
    assert np.all(np.max(pair, axis=0) >= np.max(single, axis=0) - 1e-12)


def test_capacity_oracle():
    # single user (|X2| = 1) Z-channels with the state known at the transmitter (zero delays)
    chain = build_gilbert_elliott(0.3, 0.2)
    flips = [0.1, 0.45]
    K = np.zeros((2, 2, 1, 2, 1))
    for s, f in enumerate(flips):
        K[s, 0, 0, 0, 0] = 1.0
        K[s, 1, 0, :, 0] = [f, 1 - f]
    spec = DiscreteChannelSpec(K)
    _, rb = optimize_policy(spec, chain, 0, 0, inner_region_s, SearchOptions(starts=3, seed=0))
    cap = sum(chain.pi[s] * blahut_arimoto(K[s, :, 0, :, 0])[0] for s in range(2))
    assert abs(rb.c - cap) < 0.005


def test_bsc_uniform_optimum():
    chain = build_gilbert_elliott(0.3, 0.2)
    K = np.zeros((2, 2, 2, 2, 1))
    for s, p in enumerate([0.05, 0.2]):
        for a, b in itertools.product(range(2), repeat=2):
            K[s, a, b, a ^ b, 0] = 1 - p
            K[s, a, b, 1 - (a ^ b), 0] = p
    pol, rb = optimize_policy(DiscreteChannelSpec(K), chain, 1, 0, inner_region_s, SearchOptions(starts=2))
    W = np.zeros((4, 2))
    cap = 0.0
    for s, p in enumerate([0.05, 0.2]):
        for a, b in itertools.product(range(2), repeat=2):
            W[2 * a + b] = K[s, a, b, :, 0]
        cap += chain.pi[s] * blahut_arimoto(W)[0]
    assert abs(rb.c - cap) < 0.005


def test_single_letter_alphabets():
    K = np.ones((1, 1, 1, 1, 1))
    pol, rb = optimize_policy(DiscreteChannelSpec(K), ONE, 0, 0, inner_region_s)
    assert rb.as_tuple() == (0.0, 0.0, 0.0)
    assert pol.flat().tolist() == [1.0, 1.0, 1.0]


def test_seed_reproducible():
    spec = _noisy_adder()
    opts = SearchOptions(starts=3, refine_iters=5, seed=17)
    p1, r1 = optimize_policy(spec, ONE, 0, 0, inner_region_sf, opts)
    p2, r2 = optimize_policy(spec, ONE, 0, 0, inner_region_sf, opts)
    assert np.array_equal(p1.flat(), p2.flat()) and r1 == r2


def test_guard():
    # 6 * 2**3 * 8 * 8 * 32 * 32 cells, above the limit
    K = np.full((2, 8, 8, 32, 32), 1.0 / 1024)
    chain = build_gilbert_elliott(0.3, 0.2)
    with pytest.raises(GuardError):
        optimize_policy(DiscreteChannelSpec(K), chain, 1, 0, inner_region_s, SearchOptions(q_size=6))
    with pytest.raises(GuardError):
        assemble_joint(DiscreteChannelSpec(K), InputPolicy.uniform(2, 6, 8, 8), joint_delayed_pmf(chain, 1, 0))


def test_optimizer_respects_cardinality():
    spec = _noisy_adder()
    with pytest.raises(CardinalityError):
        optimize_policy(spec, ONE, 0, 0, inner_region_sf, SearchOptions(q_size=3))
    with pytest.raises(CardinalityError):
        optimize_policy(spec, ONE, 0, 0, inner_region_s, SearchOptions(q_size=7))
