"""Brute-force stationary distribution of the reply-back backoff chain.

Builds the full transition matrix state by state and solves pi P = pi. Used as
an independent check on the closed forms in :mod:`ibfd_dcf.ibfd`.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InvalidParameterError, ModelInconsistencyError
from .ibfd import ChainParams

MAX_STATES = 10_000


def state_index(windows) -> dict[tuple[int, int], int]:
    index = {}
    for i, w in enumerate(windows):
        for k in range(w):
            index[(i, k)] = len(index)
    return index


def transition_matrix(chain: ChainParams) -> tuple[np.ndarray, dict[tuple[int, int], int]]:
    windows = chain.backoff.windows
    m = len(windows) - 1
    idx = state_index(windows)
    size = len(idx)
    if size > MAX_STATES:
        raise InvalidParameterError(f"{size} states exceeds the dense limit of {MAX_STATES}")
    p, alpha, beta = chain.p, chain.alpha, chain.beta
    w0 = windows[0]
    P = np.zeros((size, size))
    for (i, k), s in idx.items():
        if k == 0:
            if i < m:
                for k0 in range(w0):
                    P[s, idx[(0, k0)]] += (1.0 - p) / w0
                for kn in range(windows[i + 1]):
                    P[s, idx[(i + 1, kn)]] += p / windows[i + 1]
            else:
                for k0 in range(w0):
                    P[s, idx[(0, k0)]] += 1.0 / w0
        else:
            P[s, idx[(i, k - 1)]] += alpha
            for k0 in range(w0):
                P[s, idx[(0, k0)]] += beta / w0
    return P, idx


def _check_ergodic(P):
    """Require exactly one closed communicating class (others are transient) and
    that class to be aperiodic, so the stationary distribution is unique."""
    support = csr_matrix(P > 0)
    ncomp, labels = connected_components(support, directed=True, connection="strong")
    rows, cols = np.nonzero(P)
    leaves = np.zeros(ncomp, bool)
    leaves[labels[rows][labels[rows] != labels[cols]]] = True
    closed = np.flatnonzero(~leaves)
    if len(closed) != 1:
        raise ModelInconsistencyError(f"chain has {len(closed)} closed classes; need exactly one")
    members = np.flatnonzero(labels == closed[0])
    if np.any(np.diag(P)[members] > 0):
        return
    # period = gcd over in-class edges (u, v) of level[u] + 1 - level[v], BFS levels from one member
    level = np.full(P.shape[0], -1)
    level[members[0]] = 0
    frontier = [members[0]]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.nonzero(P[u])[0]:
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(v)
        frontier = nxt
    inside = labels == closed[0]
    g = 0
    for u, v in zip(rows, cols):
        if inside[u] and inside[v]:
            g = np.gcd(g, abs(level[u] + 1 - level[v]))
    if g != 1:
        raise ModelInconsistencyError(f"chain is periodic with period {g}")


def stationary_oracle(chain: ChainParams) -> dict[tuple[int, int], float]:
    """Stationary probability of every (stage, counter) state."""
    P, idx = transition_matrix(chain)
    _check_ergodic(P)
    size = P.shape[0]
    A = P.T - np.eye(size)
    A[-1, :] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    pi = np.linalg.solve(A, rhs)
    if np.any(pi < -1e-12):
        raise ModelInconsistencyError("stationary solve produced negative mass")
    pi = np.clip(pi, 0.0, None)
    return {state: float(pi[s]) for state, s in idx.items()}


def oracle_tau(pi: dict[tuple[int, int], float]) -> float:
    return sum(v for (i, k), v in pi.items() if k == 0)
