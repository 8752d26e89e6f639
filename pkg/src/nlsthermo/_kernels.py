"""Hot numeric kernels, each with a numba-compiled lane and a pure-numpy lane.

The environment variable ``NLSTHERMO_BACKEND`` selects the lane at import
time:

* ``auto`` (default): compile the loop kernels with numba when it is
  importable, otherwise fall back to numpy.
* ``numpy``: always use the pure-numpy implementations.
* ``numba``: require numba and fail loudly if it is missing.

The dispatched names (``expectation_sum`` and friends) are what the rest of
the package imports.  The ``*_np`` twins stay importable regardless of the
active lane so the two can be benchmarked and cross-checked in one process
(see ``benchmarks/bench_backends.py`` and ``tests/test_backends.py``).

Both lanes accumulate in double precision; their results differ only by
summation order, orders of magnitude below every tolerance used upstream.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_VAR = "NLSTHERMO_BACKEND"
_MAX_SERIES_TERMS = 10_000_000


def _resolve_backend():
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise RuntimeError(
            f"{_ENV_VAR} must be 'auto', 'numba' or 'numpy', got {choice!r}"
        )
    if choice == "numpy":
        return "numpy", None
    try:
        from numba import njit
    except ImportError:
        if choice == "numba":
            raise RuntimeError(f"{_ENV_VAR}=numba but numba is not importable")
        return "numpy", None
    return "numba", njit


BACKEND, _njit = _resolve_backend()


# ---------------------------------------------------------------------------
# pure-numpy lane
# ---------------------------------------------------------------------------

def expectation_sum_np(joint, values):
    """sum of joint[m,n] * values[m,n] over pairs with joint > 0."""
    return float(np.sum(joint * np.where(joint > 0.0, values, 0.0)))


def entropy_sum_np(p, d):
    """-sum of p_n log(p_n / d_n) with the 0 log 0 = 0 convention."""
    mask = p > 0.0
    pm = p[mask]
    return float(-np.sum(pm * np.log(pm / d[mask])))


def kl_sum_np(q, p):
    """sum of q_n log(q_n / p_n); +inf when q puts mass where p has none."""
    mask = q > 0.0
    if np.any(p[mask] == 0.0):
        return float("inf")
    qm = q[mask]
    return float(np.sum(qm * np.log(qm / p[mask])))


def j_heat_sum_np(t_entries, log_p, energies, dbeta):
    """sum of exp(log T[m,n] + log p_n - dbeta (E_m - E_n)) over T[m,n] > 0.

    Per-term evaluation in log space: large exponents always pair with
    exponentially small probability weight, so no global shift is needed.
    """
    rows, cols = np.nonzero(t_entries > 0.0)
    log_terms = (np.log(t_entries[rows, cols]) + log_p[cols]
                 - dbeta * (energies[rows] - energies[cols]))
    return float(np.sum(np.exp(log_terms)))


def general_j_sum_np(t_entries, p, p0, ptilde, q0):
    """Expectation of p0_i ptilde_j / (q0_j p_i) under P(i,j) = T[j,i] p_i."""
    rows, cols = np.nonzero(t_entries > 0.0)
    terms = ((t_entries[rows, cols] * p[cols])
             * (p0[cols] * ptilde[rows]) / (q0[rows] * p[cols]))
    return float(np.sum(terms))


def slope_direct_sum_np(t_entries, p0, energies):
    """sum over (n, m) of T[n,m] p0_m E_m (E_m - E_n)."""
    gap = energies[None, :] - energies[:, None]
    return float(np.sum(t_entries * (p0 * energies)[None, :] * gap))


def slope_symmetrized_sum_np(t_entries, p0, energies):
    """(1/4) sum over (n, m) of (T[n,m] p0_m + T[m,n] p0_n) (E_m - E_n)^2."""
    flow = t_entries * p0[None, :]
    gap2 = (energies[None, :] - energies[:, None]) ** 2
    return float(0.25 * np.sum((flow + flow.T) * gap2))


def projector_mixture_np(eigenvectors):
    """M[j,i] = sum_k V[i,k]^2 V[j,k]^2 for an orthonormal eigenvector matrix.

    This is the transition kernel of time-averaged unitary dynamics restricted
    to one invariant block with a non-degenerate spectrum.
    """
    w = eigenvectors * eigenvectors
    return w @ w.T


def lerch_series_np(z, s, a):
    """Partial sums of sum_k z^k / (k + a)^s.

    Stops once the latest term drops below 1e-16 of the running sum (after at
    least 10 terms); returns nan if the guard iteration count is exhausted.
    """
    acc = 0.0
    zk = 1.0
    for k in range(_MAX_SERIES_TERMS):
        term = zk / (k + a) ** s
        acc += term
        if k >= 10 and abs(term) <= 1e-16 * abs(acc):
            return acc
        zk *= z
    return float("nan")


# ---------------------------------------------------------------------------
# numba lane: explicit-loop twins of the kernels above
# ---------------------------------------------------------------------------

def _expectation_sum_loop(joint, values):
    acc = 0.0
    for m in range(joint.shape[0]):
        for n in range(joint.shape[1]):
            w = joint[m, n]
            if w > 0.0:
                acc += w * values[m, n]
    return acc


def _entropy_sum_loop(p, d):
    acc = 0.0
    for n in range(p.shape[0]):
        if p[n] > 0.0:
            acc -= p[n] * np.log(p[n] / d[n])
    return acc


def _kl_sum_loop(q, p):
    acc = 0.0
    for n in range(q.shape[0]):
        if q[n] > 0.0:
            if p[n] == 0.0:
                return np.inf
            acc += q[n] * np.log(q[n] / p[n])
    return acc


def _j_heat_sum_loop(t_entries, log_p, energies, dbeta):
    acc = 0.0
    for m in range(t_entries.shape[0]):
        for n in range(t_entries.shape[1]):
            w = t_entries[m, n]
            if w > 0.0:
                acc += np.exp(np.log(w) + log_p[n]
                              - dbeta * (energies[m] - energies[n]))
    return acc


def _general_j_sum_loop(t_entries, p, p0, ptilde, q0):
    acc = 0.0
    for j in range(t_entries.shape[0]):
        for i in range(t_entries.shape[1]):
            w = t_entries[j, i]
            if w > 0.0:
                acc += (w * p[i]) * (p0[i] * ptilde[j]) / (q0[j] * p[i])
    return acc


def _slope_direct_sum_loop(t_entries, p0, energies):
    acc = 0.0
    for n in range(t_entries.shape[0]):
        for m in range(t_entries.shape[1]):
            acc += t_entries[n, m] * p0[m] * energies[m] * (energies[m] - energies[n])
    return acc


def _slope_symmetrized_sum_loop(t_entries, p0, energies):
    acc = 0.0
    for n in range(t_entries.shape[0]):
        for m in range(t_entries.shape[1]):
            gap = energies[m] - energies[n]
            acc += 0.25 * (t_entries[n, m] * p0[m] + t_entries[m, n] * p0[n]) * gap * gap
    return acc


def _projector_mixture_loop(eigenvectors):
    k = eigenvectors.shape[0]
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            acc = 0.0
            for r in range(k):
                acc += (eigenvectors[i, r] * eigenvectors[i, r]
                        * eigenvectors[j, r] * eigenvectors[j, r])
            out[j, i] = acc
    return out


def _lerch_series_loop(z, s, a):
    acc = 0.0
    zk = 1.0
    for k in range(_MAX_SERIES_TERMS):
        term = zk / (k + a) ** s
        acc += term
        if k >= 10 and abs(term) <= 1e-16 * abs(acc):
            return acc
        zk *= z
    return np.nan


if BACKEND == "numba":
    _jit = _njit(cache=True)
    expectation_sum = _jit(_expectation_sum_loop)
    entropy_sum = _jit(_entropy_sum_loop)
    kl_sum = _jit(_kl_sum_loop)
    j_heat_sum = _jit(_j_heat_sum_loop)
    general_j_sum = _jit(_general_j_sum_loop)
    slope_direct_sum = _jit(_slope_direct_sum_loop)
    slope_symmetrized_sum = _jit(_slope_symmetrized_sum_loop)
    projector_mixture = _jit(_projector_mixture_loop)
    lerch_series = _jit(_lerch_series_loop)
else:
    expectation_sum = expectation_sum_np
    entropy_sum = entropy_sum_np
    kl_sum = kl_sum_np
    j_heat_sum = j_heat_sum_np
    general_j_sum = general_j_sum_np
    slope_direct_sum = slope_direct_sum_np
    slope_symmetrized_sum = slope_symmetrized_sum_np
    projector_mixture = projector_mixture_np
    lerch_series = lerch_series_np


def warmup():
    """Force compilation of every dispatched kernel (no-op on the numpy lane).

    Call this once before timing anything; JIT compilation otherwise lands on
    the first real invocation.
    """
    t = np.array([[0.75, 0.5], [0.25, 0.5]])
    p = np.array([0.5, 0.5])
    d = np.array([1.0, 1.0])
    e = np.array([0.0, 1.0])
    v = np.array([[1.0, 0.0], [0.0, 1.0]])
    joint = t * p[None, :]
    expectation_sum(joint, t)
    entropy_sum(p, d)
    kl_sum(p, p)
    j_heat_sum(t, np.log(p), e, 0.5)
    general_j_sum(t, p, p, p, t @ p)
    slope_direct_sum(t, p, e)
    slope_symmetrized_sum(t, p, e)
    projector_mixture(v)
    lerch_series(0.5, 2.0, 1.5)
