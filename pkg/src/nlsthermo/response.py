"""Linear response around the bath temperature.

At beta = beta0 both beta <dQ> and <dS> vanish and share a tangent line; its
slope ``a`` is computed here along four independent routes:

* ``slope_direct``: the double sum beta0 sum_{nm} T[n,m] p0_m E_m (E_m - E_n);
* ``slope_symmetrized``: the manifestly nonnegative quadratic form
  (beta0/4) sum_{nm} (T[n,m] p0_m + T[m,n] p0_n)(E_m - E_n)^2;
* ``slope_fluctuation``: (beta0/2) Var(dQ) at the fixed point;
* ``slope_numeric``: a central finite difference of beta <dQ> (beta).

The agreement of the four routes, their nonnegativity, the second-order
truncation of the cumulant expansion, the Newton-cooling linearization
<dQ> = -a beta0 (tau - tau0) + O(tau - tau0)^2, and the weak-coupling
Clausius equality <dS> = beta <dE> + O(eps^2) are all exposed as measurable
quantities so tests and verification reports can pin them down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import expectation_sum, slope_direct_sum, slope_symmetrized_sum
from .core import (
    EvaluationError,
    GibbsMatrix,
    InvalidInputError,
    LevelSystem,
    TransitionMatrix,
    delta_q_table,
    entropy,
    make_gibbs_state,
    mean_energy,
    propagate,
)
from .fluctuation import heat_and_entropy_change

__all__ = [
    "SlopeBundle",
    "PerturbationGenerator",
    "WeakCouplingFit",
    "slope_direct",
    "slope_symmetrized",
    "slope_fluctuation",
    "slope_numeric",
    "entropy_slope_numeric",
    "slope_bundle",
    "default_fd_step",
    "cumulant_deviation",
    "cumulant_check",
    "newton_cooling_coefficient",
    "random_perturbation",
    "perturbed_matrix",
    "clausius_equality_residual",
    "weak_coupling_residual",
]

#: closed-form slope routes must agree to this relative tolerance
CLOSED_FORM_RTOL = 1e-9
#: the finite-difference route must agree to this relative tolerance
NUMERIC_RTOL = 1e-4
#: slopes may undershoot zero by at most this much
NONNEG_TOL = 1e-10


@dataclass(frozen=True)
class SlopeBundle:
    """The tangent slope computed four ways.

    Construction enforces internal agreement (closed forms pairwise within
    ``CLOSED_FORM_RTOL`` relative, the finite difference within
    ``NUMERIC_RTOL``) and nonnegativity down to ``-NONNEG_TOL``; a violation
    means the inputs were not a certified Gibbs matrix or carry pathological
    scales, and raises :class:`EvaluationError`.
    """

    direct: float
    symmetrized: float
    fluctuation: float
    numeric: float

    def __post_init__(self):
        scale = max(1.0, abs(self.direct))
        if min(self.direct, self.symmetrized, self.fluctuation, self.numeric) < -NONNEG_TOL:
            raise EvaluationError("tangent slope came out negative")
        if abs(self.direct - self.symmetrized) > CLOSED_FORM_RTOL * scale or \
                abs(self.direct - self.fluctuation) > CLOSED_FORM_RTOL * scale:
            raise EvaluationError("closed-form slope routes disagree")
        if abs(self.direct - self.numeric) > NUMERIC_RTOL * scale:
            raise EvaluationError("finite-difference slope disagrees with the closed forms")


def slope_direct(G: GibbsMatrix) -> float:
    """Tangent slope as the double sum over the stationary flow."""
    return G.beta0 * float(slope_direct_sum(
        G.matrix.entries, G.fixed_point.weights, G.system.energies))


def slope_symmetrized(G: GibbsMatrix) -> float:
    """Tangent slope as a sum of nonnegative terms (hence >= 0 exactly)."""
    return G.beta0 * float(slope_symmetrized_sum(
        G.matrix.entries, G.fixed_point.weights, G.system.energies))


def slope_fluctuation(G: GibbsMatrix) -> float:
    """Tangent slope as (beta0 / 2) Var(dQ) at the fixed point.

    The mean heat vanishes at beta0 up to rounding, so this is essentially
    (beta0 / 2) <dQ^2>.
    """
    joint = G.matrix.entries * G.fixed_point.weights[None, :]
    dq = delta_q_table(G.system)
    k1 = float(expectation_sum(joint, dq))
    k2 = float(expectation_sum(joint, dq * dq)) - k1 * k1
    return 0.5 * G.beta0 * k2


def default_fd_step(beta0: float) -> float:
    """Central-difference step balancing truncation against rounding."""
    return 1e-4 * max(1.0, abs(beta0))


def _beta_heat(G: GibbsMatrix, beta: float) -> float:
    dq, _ = heat_and_entropy_change(G, beta)
    return beta * dq


def slope_numeric(G: GibbsMatrix, h: float | None = None) -> float:
    """Tangent slope by central finite difference of beta <dQ> at beta0."""
    scale = max(1.0, abs(G.beta0))
    if h is None:
        h = default_fd_step(G.beta0)
    h = float(h)
    if not (1e-6 * scale <= h <= 1e-2 * scale):
        raise InvalidInputError(
            f"step must lie in [1e-6, 1e-2] * max(1, |beta0|), got {h!r}")
    return (_beta_heat(G, G.beta0 + h) - _beta_heat(G, G.beta0 - h)) / (2.0 * h)


def entropy_slope_numeric(G: GibbsMatrix, h: float | None = None) -> float:
    """Central finite difference of <dS>(beta) at beta0.

    Shares the tangent of beta <dQ> at beta0, so it must match
    :func:`slope_numeric` to finite-difference accuracy.
    """
    scale = max(1.0, abs(G.beta0))
    if h is None:
        h = default_fd_step(G.beta0)
    h = float(h)
    if not (1e-6 * scale <= h <= 1e-2 * scale):
        raise InvalidInputError(
            f"step must lie in [1e-6, 1e-2] * max(1, |beta0|), got {h!r}")
    _, ds_plus = heat_and_entropy_change(G, G.beta0 + h)
    _, ds_minus = heat_and_entropy_change(G, G.beta0 - h)
    return (ds_plus - ds_minus) / (2.0 * h)


def slope_bundle(G: GibbsMatrix, h: float | None = None) -> SlopeBundle:
    """All four slope routes, cross-validated on construction."""
    return SlopeBundle(
        direct=slope_direct(G),
        symmetrized=slope_symmetrized(G),
        fluctuation=slope_fluctuation(G),
        numeric=slope_numeric(G, h),
    )


# ---------------------------------------------------------------------------
# cumulant expansion of the heat at the fixed point
# ---------------------------------------------------------------------------

def cumulant_deviation(G: GibbsMatrix, t: float) -> float:
    """|log <exp(t dQ)> - (k1 t + k2 t^2 / 2)| at beta = beta0.

    The remainder is third order in t, and k1 vanishes at the fixed point up
    to rounding.
    """
    t = float(t)
    if abs(t) > 0.1:
        raise InvalidInputError("cumulant check is meant for |t| <= 0.1")
    joint = G.matrix.entries * G.fixed_point.weights[None, :]
    dq = delta_q_table(G.system)
    k1 = float(expectation_sum(joint, dq))
    k2 = float(expectation_sum(joint, dq * dq)) - k1 * k1
    generating = math.log(float(expectation_sum(joint, np.exp(t * dq))))
    return abs(generating - (k1 * t + 0.5 * k2 * t * t))


def cumulant_check(G: GibbsMatrix, t_values) -> float:
    """Max truncation deviation of the second-order cumulant expansion over
    the given t grid."""
    return max(cumulant_deviation(G, t) for t in t_values)


def newton_cooling_coefficient(G: GibbsMatrix) -> float:
    """Heat conduction coefficient a beta0 in
    <dQ> = -a beta0 (tau - tau0) + O(tau - tau0)^2."""
    if G.beta0 <= 0.0:
        raise InvalidInputError("Newton-cooling linearization requires beta0 > 0")
    return G.beta0 * slope_direct(G)


# ---------------------------------------------------------------------------
# weak-coupling Clausius equality
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PerturbationGenerator:
    """Direction ``t`` of a near-identity family T = 1 + eps t.

    Column sums must vanish so that every T in the family keeps unit column
    sums; entrywise validity of 1 + eps t is checked per eps when the family
    is materialized.
    """

    t_matrix: np.ndarray

    def __post_init__(self):
        t = np.array(self.t_matrix, dtype=float, order="C")
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise InvalidInputError("generator must be square")
        if not np.all(np.isfinite(t)):
            raise InvalidInputError("generator entries must be finite")
        col = np.abs(t.sum(axis=0)).max()
        if col > 1e-12:
            raise InvalidInputError(
                f"generator column sums must vanish, worst deviation {col:.3e}")
        object.__setattr__(self, "t_matrix", t)
        self.t_matrix.setflags(write=False)

    @property
    def size(self) -> int:
        return self.t_matrix.shape[0]


def random_perturbation(n: int, seed) -> PerturbationGenerator:
    """Sample a generator as (random column-stochastic matrix - identity).

    Then 1 + eps t = (1 - eps) 1 + eps M is a valid transition matrix for
    every eps in [0, 1], so the whole tested range is admissible by
    construction.
    """
    if n < 2:
        raise InvalidInputError("need n >= 2")
    rng = np.random.default_rng(seed)
    m = rng.uniform(size=(n, n))
    m /= m.sum(axis=0)
    return PerturbationGenerator(m - np.eye(n))


def perturbed_matrix(gen: PerturbationGenerator, eps: float) -> TransitionMatrix:
    """Materialize T = 1 + eps t; raises when some entry turns negative."""
    entries = np.eye(gen.size) + float(eps) * gen.t_matrix
    if np.any(entries < 0.0):
        raise InvalidInputError(
            f"1 + eps t has a negative entry at eps={float(eps)!r}")
    return TransitionMatrix(entries)


def clausius_equality_residual(gen: PerturbationGenerator, system: LevelSystem,
                               beta: float, eps: float) -> float:
    """|<dS> - beta <dE>| for T = 1 + eps t and a Gibbs initial state.

    Vanishes at eps = 0 and shrinks as eps^2: to first order in the coupling
    the Clausius bound is an equality.
    """
    if gen.size != system.size:
        raise InvalidInputError("generator and level system sizes differ")
    beta = float(beta)
    T = perturbed_matrix(gen, eps)
    p = make_gibbs_state(system, beta).probabilities
    q = propagate(T, p)
    ds = entropy(system, q) - entropy(system, p)
    de = mean_energy(system, q) - mean_energy(system, p)
    return abs(ds - beta * de)


@dataclass(frozen=True)
class WeakCouplingFit:
    """Residual table and fitted scaling exponent of the weak-coupling
    Clausius equality.  ``exponent`` is ``inf`` when every residual is zero
    (for example for the zero generator)."""

    eps: tuple[float, ...]
    residuals: tuple[float, ...]
    exponent: float


def weak_coupling_residual(gen: PerturbationGenerator, system: LevelSystem,
                           beta: float, eps_list) -> WeakCouplingFit:
    """Fit log |<dS> - beta <dE>| against log eps over the given couplings.

    The exponent must come out close to 2.  Any eps whose matrix leaves the
    stochastic simplex is rejected with an error naming it.
    """
    eps = tuple(float(e) for e in eps_list)
    if len(eps) < 2:
        raise InvalidInputError("need at least two eps values for the fit")
    if any(e <= 0.0 for e in eps):
        raise InvalidInputError("eps values must be positive for the log-log fit")
    residuals = tuple(clausius_equality_residual(gen, system, beta, e) for e in eps)
    if all(r == 0.0 for r in residuals):
        return WeakCouplingFit(eps=eps, residuals=residuals, exponent=float("inf"))
    if any(r == 0.0 for r in residuals):
        raise EvaluationError("mixed zero and nonzero residuals; cannot fit an exponent")
    slope = float(np.polyfit(np.log(eps), np.log(residuals), 1)[0])
    return WeakCouplingFit(eps=eps, residuals=residuals, exponent=slope)
