"""Shared test utilities: finite-difference gradients, value iteration for
small MDPs, and a dense reference solver for label spreading.

These are deliberately independent re-derivations: they share no code with
the package beyond numpy, so agreement is evidence rather than tautology.
"""

import numpy as np
import pytest


def fd_gradients(params: dict, loss_fn, h: float = 1e-5) -> dict:
    """Central-difference gradient of loss_fn() w.r.t. every entry of params.

    loss_fn takes no arguments and reads params by reference, so perturbing
    in place and restoring exercises exactly the analytic code path.
    """
    grads = {}
    for name, arr in params.items():
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            plus = loss_fn()
            flat[i] = orig - h
            minus = loss_fn()
            flat[i] = orig
            gflat[i] = (plus - minus) / (2.0 * h)
        grads[name] = g
    return grads


def max_rel_error(analytic: dict, numeric: dict, floor: float = 1e-6) -> float:
    worst = 0.0
    for name in analytic:
        a = analytic[name].reshape(-1)
        n = numeric[name].reshape(-1)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def random_mdp(rng: np.random.Generator, n_states: int = 6, n_actions: int = 2):
    """Random ergodic MDP: dense transitions (rows sum to 1) and rewards in [-1, 1]."""
    P = rng.uniform(0.05, 1.0, size=(n_states, n_actions, n_states))
    P /= P.sum(axis=2, keepdims=True)
    R = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
    return P, R


def value_iteration(P: np.ndarray, R: np.ndarray, gamma: float,
                    iters: int = 10_000, tol: float = 1e-13) -> np.ndarray:
    """Optimal Q for expected-reward MDP: Q(s,a) = R(s,a) + gamma * sum P V."""
    n_states, n_actions, _ = P.shape
    Q = np.zeros((n_states, n_actions))
    for _ in range(iters):
        V = Q.max(axis=1)
        Q_new = R + gamma * P @ V
        if np.max(np.abs(Q_new - Q)) < tol:
            return Q_new
        Q = Q_new
    return Q


def harmonic_propagation(features: np.ndarray, seed_labels: dict, sigma: float) -> np.ndarray:
    """Closed-form label spread: F_U = (I - P_UU)^{-1} P_UL F_L.

    Returns an (n, 2) score matrix with labeled rows one-hot.
    """
    X = np.asarray(features, dtype=np.float64)
    n = X.shape[0]
    d2 = np.maximum(
        (X * X).sum(1)[:, None] + (X * X).sum(1)[None, :] - 2.0 * X @ X.T, 0.0
    )
    W = np.exp(-d2 / (2.0 * sigma * sigma))
    np.fill_diagonal(W, 0.0)
    P = W / W.sum(axis=1, keepdims=True)
    labeled = sorted(seed_labels)
    unlabeled = [i for i in range(n) if i not in seed_labels]
    F = np.zeros((n, 2))
    for i in labeled:
        F[i, seed_labels[i]] = 1.0
    if unlabeled:
        P_UU = P[np.ix_(unlabeled, unlabeled)]
        P_UL = P[np.ix_(unlabeled, labeled)]
        F_U = np.linalg.solve(np.eye(len(unlabeled)) - P_UU, P_UL @ F[labeled])
        F[unlabeled] = F_U
    return F


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
