"""Closed-form decay-error bound for entangling two Rydberg atoms.

The central objects are the minimal Rydberg population per unit of
min-entropy rate, G(s), its companion optimal entropy rate, and their
integrals: integrating G over one unit of entropy gives the minimal
scaled Rydberg dwell time eta_min = 1 + pi/2, while integrating 1/Sdot
gives the (divergent) duration of the ideal protocol.

A derivative-free multi-start oracle re-derives G(s) by direct
minimization of P_r/|dS/dt| over all states with fixed min-entropy, and a
weaker historical bound based on the von Neumann entropy rate is provided
for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize, minimize_scalar

from .core import (
    LN2,
    BipartiteState,
    DegeneracyError,
    min_entropy_rate,
    rydberg_population,
    schmidt_decompose,
    von_neumann_entropy,
)


class OracleFailure(RuntimeError):
    """All oracle restarts failed to produce a valid evaluation."""


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def g_of_s(s: float) -> float:
    """Minimal P_r/|dS/dt| over states with min-entropy s, in units 1/B.

    G(s) = ln2 * (1 + sqrt(2^s - 1))^2 / (2^s * sqrt(2^s - 1)) on (0, 1];
    diverges like sqrt(ln2/s) as s -> 0+.
    """
    if not 0.0 < s <= 1.0:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    root = np.sqrt(2.0**s - 1.0)
    return float(LN2 * (1.0 + root) ** 2 / (2.0**s * root))


def sdot_optimal(s: float) -> float:
    """Entropy rate of the ratio-minimizing state at min-entropy s (units B).

    Sdot(s) = (2/ln2) * (2^s - 1) / (1 + sqrt(2^s - 1))^2; vanishes at s = 0.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    root = np.sqrt(2.0**s - 1.0)
    return float((2.0 / LN2) * (2.0**s - 1.0) / (1.0 + root) ** 2)


def eta_min() -> tuple[float, float]:
    """Minimal scaled Rydberg dwell time (closed form, quadrature).

    The closed form is 1 + pi/2.  The quadrature integrates G over (0, 1]
    after substituting s = u^2, which removes the integrable 1/sqrt(s)
    singularity at the origin; the two agree to better than 1e-9.
    """
    closed = 1.0 + np.pi / 2.0
    value, _ = quad(lambda u: 2.0 * u * g_of_s(u * u), 0.0, 1.0, epsabs=1e-12, epsrel=1e-12)
    return closed, float(value)


def optimal_duration(s0: float) -> float:
    """Duration of the ideal protocol from min-entropy s0 up to 1 (units 1/B).

    T(s0) = integral of ds/Sdot(s) over [s0, 1]; diverges logarithmically as
    s0 -> 0, which is why the bound is saturated only for BT -> infinity.
    """
    if not 0.0 < s0 < 1.0:
        raise ValueError(f"s0 must lie strictly in (0, 1), got {s0}")
    value, _ = quad(lambda s: 1.0 / sdot_optimal(s), s0, 1.0, epsabs=1e-12, epsrel=1e-12)
    return float(value)


# ---------------------------------------------------------------------------
# numerical oracle: minimize P_r/|Sdot| over states of fixed min-entropy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleArgmin:
    """State parameters at the oracle's minimum."""

    coeffs: np.ndarray  # Schmidt coefficients, descending
    r_overlap_a: np.ndarray  # |<r|u_i>|
    r_overlap_b: np.ndarray  # |<r|v_i>|
    w: np.ndarray  # (|<r|u_i>|^2 + |<r|v_i>|^2) / 2
    rel_phases: np.ndarray  # arg<rr|u_i v_i> - arg<rr|u_1 v_1>


@dataclass(frozen=True)
class OracleResult:
    s: float
    ratio_min: float
    argmin: OracleArgmin
    restarts_used: int


def _unitary_from_params(params: np.ndarray, d: int) -> np.ndarray:
    """exp(i A) with A Hermitian assembled from d*d real parameters."""
    a = np.zeros((d, d), dtype=complex)
    idx = 0
    for i in range(d):
        a[i, i] = params[idx]
        idx += 1
    for i in range(d):
        for j in range(i + 1, d):
            a[i, j] = params[idx] + 1j * params[idx + 1]
            a[j, i] = np.conj(a[i, j])
            idx += 2
    evals, vecs = np.linalg.eigh(a)
    return (vecs * np.exp(1j * evals)) @ vecs.conj().T


def _oracle_state(params: np.ndarray, s: float, d: int) -> BipartiteState:
    """Build the trial state: fixed c1 = 2^(-s/2), free remainder and bases."""
    c1 = 2.0 ** (-s / 2.0)
    rest = np.sqrt(1.0 - c1 * c1)
    if d == 2:
        coeffs = np.array([c1, rest])
        n_c = 0
    elif d == 3:
        phi = params[0]
        coeffs = np.array([c1, rest * abs(np.cos(phi)), rest * abs(np.sin(phi))])
        n_c = 1
    else:
        raise ValueError("oracle supports local dimensions 2 and 3")
    u_a = _unitary_from_params(params[n_c : n_c + d * d], d)
    u_b = _unitary_from_params(params[n_c + d * d :], d)
    amps = (u_a * coeffs) @ u_b.T  # sum_i c_i u_i (x) v_i
    return BipartiteState(amps, rydberg_index=d - 1)


def _oracle_objective(params: np.ndarray, s: float, d: int) -> float:
    state = _oracle_state(params, s, d)
    try:
        rate = min_entropy_rate(state)
    except DegeneracyError:
        return np.inf
    if abs(rate) < 1e-12:
        return np.inf
    return rydberg_population(state) / abs(rate)


def _argmin_summary(params: np.ndarray, s: float, d: int) -> OracleArgmin:
    state = _oracle_state(params, s, d)
    schmidt = schmidt_decompose(state)
    r = state.rydberg_index
    a = schmidt.basis_a[:, r]
    b = schmidt.basis_b[:, r]
    products = a * b
    phases = np.angle(products) - np.angle(products[0])
    phases = (phases + np.pi) % (2.0 * np.pi) - np.pi
    return OracleArgmin(
        coeffs=schmidt.coeffs,
        r_overlap_a=np.abs(a),
        r_overlap_b=np.abs(b),
        w=(np.abs(a) ** 2 + np.abs(b) ** 2) / 2.0,
        rel_phases=phases,
    )


def minimize_ratio_numeric(
    s: float,
    d: int = 2,
    restarts: int = 32,
    seed: int = 0,
    stall_limit: int = 12,
) -> OracleResult:
    """Minimize P_r/|dS/dt| over all states with min-entropy s.

    Multi-start Nelder-Mead over the remaining Schmidt coefficients and two
    local-basis unitaries (c1 is pinned to 2^(-s/2)).  Restarts draw
    independent random starting points from `seed`; the search stops early
    once `stall_limit` consecutive restarts fail to improve the best ratio
    by more than one part in 1e6.  Raises :class:`OracleFailure` if no
    restart produces a finite ratio.
    """
    if not 0.0 < s <= 1.0:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    if restarts < 1:
        raise ValueError("need at least one restart")
    n_params = (1 if d == 3 else 0) + 2 * d * d
    rng = np.random.default_rng(seed)

    best_value = np.inf
    best_params = None
    since_improvement = 0
    used = 0
    for _ in range(restarts):
        used += 1
        x0 = rng.uniform(-np.pi, np.pi, size=n_params)
        res = minimize(
            _oracle_objective,
            x0,
            args=(s, d),
            method="Nelder-Mead",
            options={
                "maxfev": 220 * n_params,
                "xatol": 1e-6,
                "fatol": 1e-10,
                "adaptive": d == 3,
            },
        )
        if np.isfinite(res.fun) and res.fun < best_value * (1.0 - 1e-6):
            best_value = res.fun
            best_params = res.x
            since_improvement = 0
        else:
            since_improvement += 1
            if since_improvement >= stall_limit and best_params is not None:
                break
    if best_params is None:
        raise OracleFailure(f"no valid oracle evaluation at s = {s}, d = {d}")

    # polish the winner from a fresh simplex
    res = minimize(
        _oracle_objective,
        best_params,
        args=(s, d),
        method="Nelder-Mead",
        options={"maxfev": 400 * n_params, "xatol": 1e-10, "fatol": 1e-14},
    )
    if np.isfinite(res.fun) and res.fun < best_value:
        best_value = res.fun
        best_params = res.x

    return OracleResult(
        s=s,
        ratio_min=float(best_value),
        argmin=_argmin_summary(best_params, s, d),
        restarts_used=used,
    )


# ---------------------------------------------------------------------------
# weak bound from the von Neumann entropy rate
# ---------------------------------------------------------------------------


def weak_bound_f(theta: float) -> float:
    """f(theta) = sin(theta) cos(theta) |log2(tan(theta))| on (0, pi/2)."""
    if not 0.0 < theta < np.pi / 2.0:
        raise ValueError(f"theta must lie strictly in (0, pi/2), got {theta}")
    return float(np.sin(theta) * np.cos(theta) * abs(np.log2(np.tan(theta))))


def max_weak_bound_f() -> float:
    """max_theta f(theta), about 0.478 (attained near theta = 0.2926)."""
    res = minimize_scalar(
        lambda t: -weak_bound_f(t),
        bounds=(1e-9, np.pi / 4.0),
        method="bounded",
        options={"xatol": 1e-13},
    )
    return float(-res.fun)


def weak_bound_constants() -> tuple[float, float]:
    """(rate_constant, eta_weak) of the von-Neumann-rate chain.

    The entropy rate satisfies |dS_vN/dt| <= rate_constant * P_r * B with
    rate_constant = 2 max f ~ 0.956, which integrates to the weaker error
    bound E >= eta_weak * Gamma/B with eta_weak = 1/rate_constant ~ 1.05.
    """
    rate_constant = 2.0 * max_weak_bound_f()
    return rate_constant, 1.0 / rate_constant


@dataclass(frozen=True)
class VnRateCheck:
    lhs: float  # |dS_vN/dt|
    rhs: float  # rate_constant * P_r (B = 1)
    satisfied: bool


def vn_rate_bound(state: BipartiteState, fd_step: float | None = None) -> float:
    """von Neumann entropy rate under the interaction |rr><rr| (B = 1).

    Uses the analytic Schmidt-data expression; for a degenerate nonzero
    Schmidt spectrum the analytic form is refused and, when `fd_step` is
    given, a centered finite difference of the entropy under pure
    interaction evolution is returned instead.
    """
    schmidt = schmidt_decompose(state)
    c = schmidt.coeffs
    live = c > 1e-8
    gaps = np.diff(c[live])
    if gaps.size and np.any(np.abs(gaps) < 1e-10):
        if fd_step is None:
            raise DegeneracyError(
                "degenerate Schmidt spectrum; pass fd_step for a finite-"
                "difference entropy rate"
            )
        return _vn_rate_finite_difference(state, fd_step)

    r = state.rydberg_index
    a = schmidt.basis_a[:, r]
    b = schmidt.basis_b[:, r]
    overlap = a * b  # <rr|u_i v_i>
    elements = np.outer(np.conj(overlap), overlap)  # <u_i v_i|rr><rr|u_j v_j>
    with np.errstate(divide="ignore", invalid="ignore"):
        logratio = np.log2(np.outer(1.0 / c, c))
    logratio[~np.isfinite(logratio)] = 0.0  # zero-coefficient terms vanish
    weights = np.outer(c, c) * logratio
    return float(2.0 * np.sum(weights * np.imag(elements)))


def _vn_rate_finite_difference(state: BipartiteState, fd_step: float) -> float:
    r = state.rydberg_index
    phases = np.ones_like(state.amps)

    def entropy_at(h: float) -> float:
        p = phases.copy()
        p[r, r] = np.exp(-1j * h)  # exp(-i H_int h) is diagonal
        m = state.amps * p
        return von_neumann_entropy(schmidt_decompose(BipartiteState(m, r)))

    return (entropy_at(fd_step) - entropy_at(-fd_step)) / (2.0 * fd_step)


def vn_rate_bound_check(state: BipartiteState, fd_step: float | None = None) -> VnRateCheck:
    """Check |dS_vN/dt| <= rate_constant * P_r for one state."""
    rate_constant, _ = weak_bound_constants()
    lhs = abs(vn_rate_bound(state, fd_step=fd_step))
    rhs = rate_constant * rydberg_population(state)
    return VnRateCheck(lhs=lhs, rhs=rhs, satisfied=bool(lhs <= rhs + 1e-9))
