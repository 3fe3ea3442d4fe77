"""Independent reference computations used by the tests.

None of these share code paths with the package: they use plain loops,
classical Jacobi rotations, finite differences or brute-force enumeration.
"""

import itertools
import math

import numpy as np


def jacobi_eigenvalues(A, sweeps=100, tol=1e-15):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    for _ in range(sweeps):
        off = math.sqrt(sum(A[i, j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off <= tol * max(1.0, np.abs(A).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                J = np.eye(n)
                J[p, p] = c
                J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
    return np.diag(A).copy()


def brute_sigma_max(M):
    M = np.asarray(M, dtype=float)
    eig = jacobi_eigenvalues(M @ M.T)
    return math.sqrt(max(0.0, eig.max()))


def lrp_beta_column(w, z, beta):
    """One column of an LRP-beta transition by explicit loops."""
    c = [wi * zi for wi, zi in zip(w, z)]
    P = sum(v for v in c if v > 0)
    N = sum(v for v in c if v < 0)
    out = []
    for v in c:
        pos = max(v, 0.0) / P if P > 0 else 0.0
        neg = min(v, 0.0) / N if N < 0 else 0.0
        if P > 0 and N < 0:
            out.append((1 + beta) * pos - beta * neg)
        else:
            out.append(pos + neg)
    return out


def lrp_gamma_column(w, z, gamma):
    c = [wi * zi for wi, zi in zip(w, z)]
    num = [v + gamma * max(v, 0.0) for v in c]
    D = sum(num)
    return [v / D for v in num]


def central_difference_gradient(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def signed_rank_p_enumerated(d, alternative="greater"):
    """Exact one-sided Wilcoxon p by listing every sign pattern."""
    d = [v for v in d if v != 0]
    absd = [abs(v) for v in d]
    order = sorted(absd)
    ranks = [(2 * order.index(a) + 1 + order.count(a)) / 2 for a in absd]
    w_obs = sum(r for r, v in zip(ranks, d) if v > 0)
    hits = 0
    for signs in itertools.product((0, 1), repeat=len(d)):
        w = sum(r for r, s in zip(ranks, signs) if s)
        if (w >= w_obs - 1e-9) if alternative == "greater" else (w <= w_obs + 1e-9):
            hits += 1
    return hits / 2 ** len(d)


def signed_rank_p_permutation(d, resamples=1_000_000, seed=0, chunk=100_000):
    """Monte-Carlo sign-flip p-value (greater) and its standard error."""
    d = np.asarray([v for v in d if v != 0], dtype=float)
    absd = np.abs(d)
    ranks = np.array([(np.sum(absd < a) + 1 + np.sum(absd <= a)) / 2 for a in absd])
    w_obs = ranks[d > 0].sum()
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < resamples:
        k = min(chunk, resamples - done)
        signs = rng.integers(0, 2, size=(k, len(d)), dtype=np.int8)
        w = signs @ ranks
        hits += int(np.count_nonzero(w >= w_obs - 1e-9))
        done += k
    p = hits / resamples
    return p, math.sqrt(max(p * (1 - p), 1e-300) / resamples)
