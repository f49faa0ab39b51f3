"""Water-filling levels and capacity bounds for the interval ISI channel.

Two water levels drive everything:

* ``theta1`` spends the full power budget ``P`` against the inverse centre
  spectrum (the classical water-filling level);
* ``theta2`` is the level at which the radius-driven penalty terms stop
  rewarding extra power (the saturation level); it exists only when the tap
  radii are non-zero and the implied per-dimension power stays positive.

From a level we get the capacity-style integral, the additive penalty for
tap uncertainty (``delta``), and the per-power bound report that the CLI
serializes.  A finite-blocklength variant replaces the integral with the
eigenvalues of the centre Gram matrix.

All rates are in bits (logs base 2); powers are in watts, with dBW helpers
for the CLI surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .errors import BoundInapplicable, NoConvergence
from .spectrum import (
    DEFAULT_GRID,
    ChannelSpec,
    SpectrumProfile,
    compute_profile,
    f_sq_table,
    gram_eigenvalues,
    simpson_mean,
)

__all__ = [
    "WaterfillSolution",
    "BoundReport",
    "FiniteNBound",
    "watts_to_dbw",
    "dbw_to_watts",
    "g_integral",
    "solve_theta1",
    "solve_theta2",
    "capacity_C0",
    "cap_integral",
    "delta_i",
    "phi_terms",
    "delta_from_phi",
    "saturation_power",
    "bound_report",
    "pillow_terms",
    "pillow_bound",
    "waterfill_powers",
    "finite_n_bound",
]

LN2 = math.log(2.0)
SOLVER_MAX_STEPS = 200
SOLVER_REL_TOL = 1e-10
POWER_FLOOR = 1e-12


def watts_to_dbw(p_watts: float) -> float:
    return 10.0 * math.log10(p_watts)


def dbw_to_watts(p_dbw: float) -> float:
    return 10.0 ** (p_dbw / 10.0)


@dataclass(frozen=True)
class WaterfillSolution:
    """A water level ``theta`` with its derived per-dimension quantities:
    total water ``I``, and the water depths over the spectral peak
    (``d_max``) and the spectral valley (``d_min``)."""

    theta: float
    I: float
    d_min: float
    d_max: float
    level: Literal["theta1", "theta2"]


@dataclass(frozen=True)
class BoundReport:
    """All per-power scalar outputs.  Fields are ``None`` when the quantity
    does not exist at this operating point (no radii, missing saturation
    level, or a failed bound hypothesis)."""

    P: float
    C0: float
    C_LB1: float
    delta1: float
    gap_cor1: float
    C_LB2: Optional[float]
    delta2: Optional[float]
    P_sat: Optional[float]
    gap_cor2: Optional[float]


@dataclass(frozen=True)
class FiniteNBound:
    """Finite-blocklength achievable rate built on the Gram eigenvalues.

    ``d`` is the per-eigenvalue power allocation (ascending alongside the
    ascending eigenvalues), ``first_term`` the rate before penalties.
    """

    n: int
    theta: float
    d: np.ndarray
    first_term: float
    delta_n: float
    value: float


def g_integral(
    profile: SpectrumProfile,
    spec: ChannelSpec,
    theta: float,
    grid_size: int = DEFAULT_GRID,
) -> float:
    """Total water at level ``theta``: the circle mean of
    ``max(theta - 1/|f|^2, 0)``.

    Evaluated on the same cached grid as every other spectral mean, so for
    ``theta`` above the largest inverse-spectrum value the identity
    ``g(theta) = theta - J`` holds to machine precision.
    """
    table = f_sq_table(spec, grid_size)
    return simpson_mean(np.maximum(theta - 1.0 / table, 0.0))


def _solution(theta: float, I: float, profile: SpectrumProfile, level) -> WaterfillSolution:
    d_min = max(theta - 1.0 / profile.alpha ** 2, 0.0)
    d_max = max(theta - 1.0 / profile.beta ** 2, 0.0)
    return WaterfillSolution(theta=theta, I=I, d_min=d_min, d_max=d_max, level=level)


def solve_theta1(
    profile: SpectrumProfile,
    spec: ChannelSpec,
    P: float,
    grid_size: int = DEFAULT_GRID,
) -> WaterfillSolution:
    """Water level spending total power ``P``: solves ``g(theta) = P``.

    Uses the closed form ``theta = P + J`` when the level tops the whole
    inverse spectrum, otherwise bisection on the bracket between the
    inverse-spectrum floor and ceiling.
    """
    if P <= 0.0:
        raise ValueError("need P > 0")
    ceiling = 1.0 / profile.alpha ** 2
    if P >= ceiling - profile.J:
        theta = P + profile.J
    else:
        lo = 1.0 / profile.beta ** 2
        hi = ceiling
        theta = None
        tol = SOLVER_REL_TOL * max(1.0, P)
        for _ in range(SOLVER_MAX_STEPS):
            mid = 0.5 * (lo + hi)
            resid = g_integral(profile, spec, mid, grid_size) - P
            if abs(resid) <= tol:
                theta = mid
                break
            if resid < 0.0:
                lo = mid
            else:
                hi = mid
        if theta is None:
            raise NoConvergence(
                f"water level for P={P} not found in {SOLVER_MAX_STEPS} bisection steps"
            )
    return _solution(theta, g_integral(profile, spec, theta, grid_size), profile, "theta1")


def solve_theta2(
    profile: SpectrumProfile,
    spec: ChannelSpec,
    grid_size: int = DEFAULT_GRID,
) -> Optional[WaterfillSolution]:
    """Saturation water level: solves ``g(theta) = 2*theta - b`` with
    ``b = (2/(k+1)) / |r|^2``.

    Returns ``None`` when the level would sit at or below the spectral floor
    (no water anywhere), i.e. when saturation never bites.  Raises
    ``ValueError`` when all radii are zero (then no saturation mechanism
    exists at all).
    """
    if spec.norm_r_sq == 0.0:
        raise ValueError("saturation level undefined for zero tap radii")
    b = (2.0 / (spec.k + 1)) / spec.norm_r_sq
    if b >= 1.0 / profile.alpha ** 2 + profile.J:
        theta = b - profile.J
        return _solution(theta, 2.0 * theta - b, profile, "theta2")
    lo = 1.0 / profile.beta ** 2
    if b - 2.0 * lo <= 0.0:
        return None
    hi = b  # g(b) <= b, so the decreasing residual is non-positive there
    theta = None
    tol = SOLVER_REL_TOL * max(1.0, b)
    for _ in range(SOLVER_MAX_STEPS):
        mid = 0.5 * (lo + hi)
        resid = g_integral(profile, spec, mid, grid_size) - (2.0 * mid - b)
        if abs(resid) <= tol:
            theta = mid
            break
        if resid > 0.0:
            lo = mid
        else:
            hi = mid
    if theta is None:
        raise NoConvergence(
            f"saturation level for b={b} not found in {SOLVER_MAX_STEPS} bisection steps"
        )
    I = 2.0 * theta - b
    if I <= 0.0:
        return None
    return _solution(theta, I, profile, "theta2")


def cap_integral(spec: ChannelSpec, theta: float, grid_size: int = DEFAULT_GRID) -> float:
    """Rate integral at water level ``theta``:
    half the circle mean of ``log2(max(theta * |f|^2, 1))``."""
    table = f_sq_table(spec, grid_size)
    return 0.5 * simpson_mean(np.log2(np.maximum(theta * table, 1.0)))


def capacity_C0(
    profile: SpectrumProfile,
    spec: ChannelSpec,
    P: float,
    grid_size: int = DEFAULT_GRID,
) -> float:
    """Water-filling capacity of the centre channel at power ``P`` (bits)."""
    sol = solve_theta1(profile, spec, P, grid_size)
    return cap_integral(spec, sol.theta, grid_size)


def delta_i(profile: SpectrumProfile, sol: WaterfillSolution) -> float:
    """Additive rate penalty charged for the tap intervals at a water level.

    Written out directly from the spectral quantities; the finite-blocklength
    code path recomputes the same functional form from matrix data via
    ``phi_terms``/``delta_from_phi``, and tests cross-check the two.
    """
    s = profile.r_s * (profile.r_s + 2.0 * profile.beta)
    ratio = s * sol.d_max / (1.0 + profile.alpha ** 2 * sol.d_min)
    if ratio >= 1.0:
        raise BoundInapplicable(
            f"radius term {ratio:.3g} >= 1 at theta={sol.theta:.6g}; penalty undefined"
        )
    first = -0.5 * math.log2(1.0 - ratio)
    second = (0.5 / LN2) * (
        1.0 - max(1.0 - s * sol.I, 0.0) / (1.0 + s * sol.d_max)
    )
    return first + second


def phi_terms(
    profile: SpectrumProfile,
    lam_min: float,
    lam_max: float,
    trace: float,
    m: int,
) -> tuple[float, float, float]:
    """The three spectral ratios controlling the finite-blocklength penalty,
    from the extreme eigenvalues and trace of the input covariance."""
    s = profile.r_s * (profile.r_s + 2.0 * profile.beta)
    phi1 = s * lam_max / (1.0 + profile.alpha ** 2 * lam_min)
    phi2 = s * trace / m
    phi3 = 1.0 / (1.0 + s * lam_max)
    return phi1, phi2, phi3


def delta_from_phi(phi1: float, phi2: float, phi3: float) -> float:
    """Penalty in terms of the three ratios; requires ``phi1 < 1``."""
    if phi1 >= 1.0:
        raise BoundInapplicable(f"phi1 = {phi1:.3g} >= 1; penalty undefined")
    return -0.5 * math.log2(1.0 - phi1) + (0.5 / LN2) * (
        1.0 - max(1.0 - phi2, 0.0) * phi3
    )


def saturation_power(spec: ChannelSpec, profile: SpectrumProfile) -> Optional[float]:
    """Power (watts) beyond which the radius penalty eats all water-filling
    gains; ``None`` when all radii are zero.  May be non-positive for very
    large radii (saturation from zero power up)."""
    if spec.norm_r_sq == 0.0:
        return None
    return (2.0 / (spec.k + 1)) / spec.norm_r_sq - 2.0 * profile.J


def bound_report(spec: ChannelSpec, P: float, grid_size: int = DEFAULT_GRID) -> BoundReport:
    """All scalar bounds at power ``P`` (watts).

    Optional fields are populated when their defining conditions hold: the
    saturation route needs non-zero radii, a saturation level above the
    spectral floor, and a power budget at least as large as the saturation
    water; the radius-only gap needs the saturation level's closed form to
    apply and its log argument to stay positive.
    """
    profile = compute_profile(spec, grid_size)
    sol1 = solve_theta1(profile, spec, P, grid_size)
    delta1 = delta_i(profile, sol1)
    C0 = cap_integral(spec, sol1.theta, grid_size)
    half_k1_rsq = 0.5 * (spec.k + 1) * spec.norm_r_sq
    C_LB1 = C0 - math.log2(1.0 + half_k1_rsq * sol1.I) - delta1
    gap_cor1 = math.log2(1.0 + half_k1_rsq * P) + delta1

    C_LB2 = delta2 = P_sat = gap_cor2 = None
    if spec.norm_r_sq > 0.0:
        P_sat = saturation_power(spec, profile)
        sol2 = solve_theta2(profile, spec, grid_size)
        if sol2 is not None and sol1.I >= sol2.I - 1e-12 * max(1.0, abs(sol2.I)):
            try:
                delta2 = delta_i(profile, sol2)
                C_LB2 = (
                    cap_integral(spec, sol2.theta, grid_size)
                    - math.log2(1.0 + half_k1_rsq * sol2.I)
                    - delta2
                )
            except BoundInapplicable:
                C_LB2 = delta2 = None
        b = (2.0 / (spec.k + 1)) / spec.norm_r_sq
        s = profile.r_s * (profile.r_s + 2.0 * profile.beta)
        if b >= 1.0 / profile.alpha ** 2 + profile.J and s < profile.alpha ** 2:
            gap_cor2 = (
                1.0
                + 0.5 / LN2
                - 0.5 * math.log2(1.0 - s / profile.alpha ** 2)
            )
    return BoundReport(
        P=P,
        C0=C0,
        C_LB1=C_LB1,
        delta1=delta1,
        gap_cor1=gap_cor1,
        C_LB2=C_LB2,
        delta2=delta2,
        P_sat=P_sat,
        gap_cor2=gap_cor2,
    )


def pillow_terms(
    profile: SpectrumProfile,
    spec: ChannelSpec,
    P: float,
    r_s: Optional[float] = None,
    grid_size: int = DEFAULT_GRID,
) -> tuple[float, float, float]:
    """The three addends of the radius-sum-only gap bound at power ``P``.

    ``r_s`` overrides the profile's radius sum so a sweep can vary the
    uncertainty scale without touching the centre channel or water level.
    The last addend caps at ``1/(2*ln 2)`` exactly once
    ``r_s*(r_s + 2*beta)*P >= 1``.
    """
    rs = profile.r_s if r_s is None else float(r_s)
    if rs < 0.0:
        raise ValueError("radius sum must be non-negative")
    sol = solve_theta1(profile, spec, P, grid_size)
    s = rs * (rs + 2.0 * profile.beta)
    ratio = s * sol.d_max / (1.0 + profile.alpha ** 2 * sol.d_min)
    if ratio >= 1.0:
        raise BoundInapplicable(
            f"radius term {ratio:.3g} >= 1 at P={P}; gap bound undefined"
        )
    t1 = math.log2(1.0 + 0.5 * (spec.k + 1) * rs * rs * P)
    t2 = -0.5 * math.log2(1.0 - ratio)
    t3 = (0.5 / LN2) * (1.0 - max(1.0 - s * P, 0.0) / (1.0 + s * sol.d_max))
    return t1, t2, t3


def pillow_bound(
    profile: SpectrumProfile,
    spec: ChannelSpec,
    P: float,
    r_s: Optional[float] = None,
    grid_size: int = DEFAULT_GRID,
) -> float:
    t1, t2, t3 = pillow_terms(profile, spec, P, r_s, grid_size)
    return t1 + t2 + t3


def waterfill_powers(
    lam: np.ndarray, total: float, eps: float = POWER_FLOOR
) -> tuple[np.ndarray, float]:
    """Allocate ``total`` power over channels with gains ``lam`` subject to a
    per-channel floor ``eps``: returns ``(d, theta)`` with
    ``d_i = max(theta - 1/lam_i, eps)`` and ``sum(d) = total``.

    Bisection brackets the level, then Newton steps on the active set (the
    allocation is piecewise linear in ``theta``) sharpen the power budget to
    relative 1e-12.  Ascending ``lam`` yields ascending ``d``.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or len(lam) == 0:
        raise ValueError("need a 1-d non-empty gain vector")
    if np.any(lam <= 0.0):
        raise ValueError("gains must be positive")
    if total <= len(lam) * eps:
        raise ValueError("total power does not clear the per-channel floor")
    inv = 1.0 / lam
    lo, hi = 0.0, total / len(lam) + float(inv.max())
    for _ in range(SOLVER_MAX_STEPS):
        mid = 0.5 * (lo + hi)
        if np.maximum(mid - inv, eps).sum() < total:
            lo = mid
        else:
            hi = mid
    theta = 0.5 * (lo + hi)
    for _ in range(8):
        d = np.maximum(theta - inv, eps)
        resid = float(d.sum()) - total
        if abs(resid) <= 1e-12 * max(1.0, total):
            break
        active = int(np.count_nonzero(theta - inv > eps))
        if active == 0:
            break
        theta -= resid / active
    d = np.maximum(theta - inv, eps)
    return d, theta


def finite_n_bound(
    spec: ChannelSpec,
    n: int,
    P: float,
    eps: float = POWER_FLOOR,
    grid_size: int = DEFAULT_GRID,
) -> FiniteNBound:
    """Achievable rate at blocklength ``n``: water-fill ``n*P`` over the
    Gram eigenvalues of the centre matrix, then subtract the trace penalty
    and the radius penalty computed from the allocation itself.

    Requires ``n >= k + 1`` (shorter blocks do not exercise the full band).
    Raises BoundInapplicable when the leading penalty ratio reaches 1.
    """
    if n < spec.k + 1:
        raise ValueError(f"need n >= k + 1 = {spec.k + 1}, got {n}")
    if P <= 0.0:
        raise ValueError("need P > 0")
    profile = compute_profile(spec, grid_size)
    lam = gram_eigenvalues(spec, n)
    d, theta = waterfill_powers(lam, n * P, eps)
    first = float(np.log2(1.0 + lam * d).sum()) / (2.0 * n)
    m = n + spec.k
    trace = float(d.sum())
    phi1, phi2, phi3 = phi_terms(profile, float(d[0]), float(d[-1]), trace, m)
    delta_n = delta_from_phi(phi1, phi2, phi3)
    value = (
        first
        - math.log2(1.0 + (spec.k + 1) * spec.norm_r_sq * trace / (m + n))
        - delta_n
    )
    d.setflags(write=False)
    return FiniteNBound(
        n=n, theta=float(theta), d=d, first_term=first, delta_n=delta_n, value=value
    )
