"""Independent reference implementations used only by the tests."""

import itertools
import math
from collections import defaultdict

import numpy as np

AXES = ("q", "s1", "s2", "s", "x1", "x2", "y", "z")


def enumerate_joint(spec_kernel, q_given, x1_given, x2_given, law):
    """Dict from full outcome tuples to probabilities, built with explicit loops."""
    k = law.shape[0]
    ns, nx1, nx2, ny, nz = spec_kernel.shape
    nq = q_given.shape[1]
    out = {}
    for q, a, v, l, x1, x2, y, z in itertools.product(range(nq), range(k), range(k), range(k),
                                                      range(nx1), range(nx2), range(ny), range(nz)):
        p = (law[a, v, l] * q_given[a, q] * x1_given[a, q, x1] * x2_given[a, v, q, x2]
             * spec_kernel[l, x1, x2, y, z])
        if p > 0:
            out[(q, a, v, l, x1, x2, y, z)] = p
    return out


def _marg(joint, names):
    idx = [AXES.index(n) for n in names]
    m = defaultdict(float)
    for key, p in joint.items():
        m[tuple(key[i] for i in idx)] += p
    return m


def cond_entropy(joint, A, C):
    """H(A|C) = -sum p(a,c) log2 p(a|c)."""
    pac = _marg(joint, list(A) + list(C))
    pc = _marg(joint, list(C))
    h = 0.0
    for key, p in pac.items():
        if p > 0:
            h -= p * math.log2(p / pc[key[len(A):]])
    return h


def cond_mi(joint, A, B, C):
    """I(A;B|C) = H(A|C) - H(A|B,C)."""
    return cond_entropy(joint, A, C) - cond_entropy(joint, A, list(B) + list(C))


ST = ["s", "s1", "s2"]


def oracle_terms(joint):
    return {
        "I(X1;Y|X2,S,S1,S2,Q)": cond_mi(joint, ["x1"], ["y"], ["x2"] + ST + ["q"]),
        "I(X2;Y|X1,S,S1,S2,Q)": cond_mi(joint, ["x2"], ["y"], ["x1"] + ST + ["q"]),
        "I(X1,X2;Y|S,S1,S2,Q)": cond_mi(joint, ["x1", "x2"], ["y"], ST + ["q"]),
        "I(X1;Y|S,S1,S2,Q)": cond_mi(joint, ["x1"], ["y"], ST + ["q"]),
        "I(X1;Z|S,S1,S2,Q)": cond_mi(joint, ["x1"], ["z"], ST + ["q"]),
        "I(X2;Z|S,S1,S2,Q)": cond_mi(joint, ["x2"], ["z"], ST + ["q"]),
        "I(X1,X2;Z|S,S1,S2,Q)": cond_mi(joint, ["x1", "x2"], ["z"], ST + ["q"]),
        "I(X1,X2;Z|S,S1,S2)": cond_mi(joint, ["x1", "x2"], ["z"], ST),
        "I(X1,X2;Y|S,S1,S2)": cond_mi(joint, ["x1", "x2"], ["y"], ST),
        "H(Y|Z,X1,X2,S,S1,S2)": cond_entropy(joint, ["y"], ["z", "x1", "x2"] + ST),
        "H(Y|Z,S,S1,S2)": cond_entropy(joint, ["y"], ["z"] + ST),
        "H(Y|S,S1,S2)": cond_entropy(joint, ["y"], ST),
    }


def blahut_arimoto(W, iters=5000, tol=1e-13):
    """Capacity in bits of a DMC with rows W[x, y] by alternating maximization."""
    W = np.asarray(W, dtype=float)
    nx = W.shape[0]
    p = np.full(nx, 1.0 / nx)
    for _ in range(iters):
        qy = p @ W
        with np.errstate(divide="ignore", invalid="ignore"):
            logr = np.where(W > 0, np.log(W / qy[None, :]), 0.0)
        D = np.exp((W * logr).sum(axis=1))
        new = p * D
        new /= new.sum()
        if np.max(np.abs(new - p)) < tol:
            p = new
            break
        p = new
    qy = p @ W
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(W > 0, W * np.log2(W / qy[None, :]), 0.0)
    return float(p @ terms.sum(axis=1)), p
