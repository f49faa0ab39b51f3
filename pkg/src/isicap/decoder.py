"""Joint-typicality decoding and error-rate experiments.

A candidate message passes when its codeword looks typical under the input
covariance and the stacked (input, output) vector looks typical under the
joint covariance of the centre channel.  Decoding succeeds when exactly one
candidate passes; otherwise the failure records whether nothing passed or
several did.

The joint covariance has a closed-form inverse and determinant, and the
stacked quadratic form splits into the input form plus a centre-channel
residual; the decode path exploits the split so each trial costs one
residual computation per codeword.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np
from scipy.linalg import cho_factor, solve_triangular

from .errors import DimensionMismatch, NotPositiveDefinite
from .spectrum import (
    DEFAULT_GRID,
    BandedChannelMatrix,
    ChannelSpec,
    SpectrumProfile,
    build_Hc,
    compute_profile,
)
from .waterfill import delta_from_phi, phi_terms
from .channel_sim import (
    STREAM_MESSAGE,
    ChannelLaw,
    Codebook,
    CovarianceSpec,
    build_sigma,
    gen_codebook,
    rng_stream,
    sample_H,
    transmit,
)

__all__ = [
    "TypicalParams",
    "ThresholdReport",
    "JointCovariance",
    "DecodeFailure",
    "ExperimentResult",
    "thresholds",
    "default_params",
    "build_joint",
    "is_typical",
    "decode",
    "prepare_context",
    "wilson_interval",
    "run_error_experiment",
]

DEFAULT_EPSILON = 0.1
_MASK_CHUNK = 1 << 14


@dataclass(frozen=True)
class TypicalParams:
    """Decoder thresholds: ``epsilon`` for the input test, ``eta`` for the
    joint test.  ``eta_prime`` is carried along for the analysis-side
    quantities and does not affect decoding."""

    epsilon: float
    eta: float
    eta_prime: float

    def __post_init__(self) -> None:
        if min(self.epsilon, self.eta, self.eta_prime) <= 0.0:
            raise ValueError("typicality thresholds must be positive")


@dataclass(frozen=True)
class ThresholdReport:
    """Blocklength-dependent analysis constants for a covariance/power pair:
    the natural typicality scales (eta_n, eta_prime_n), the penalty ratios
    (phi1..phi3) with their penalty delta_n, and the trace budgets
    (C_n, C_prime_n) used by the verification suites."""

    n: int
    m: int
    eta_n: float
    eta_prime_n: float
    C_n: float
    C_prime_n: float
    phi1_n: float
    phi2_n: float
    phi3_n: float
    delta_n: float


def trace_budgets(
    spec: ChannelSpec,
    profile: SpectrumProfile,
    cov: CovarianceSpec,
    P: float,
) -> tuple[float, float]:
    """Budgets bounding twice the squared Frobenius norms of the stacked
    deviation block matrix and of the whitened-output block matrix; both are
    valid for any radii (no small-radius hypothesis)."""
    n = cov.n
    m = n + spec.k
    rs = profile.r_s
    bs = profile.beta + rs
    C_n = (
        2.0 * m
        + 2.0 * n
        + 8.0 * (spec.k + 1) * n * P * spec.norm_r_sq
        + 2.0 * n * P * rs ** 4 * cov.lam_max
    )
    C_prime_n = 2.0 * m + 4.0 * bs ** 2 * n * P + 2.0 * n * P * bs ** 4 * cov.lam_max
    return C_n, C_prime_n


def thresholds(
    spec: ChannelSpec,
    profile: SpectrumProfile,
    cov: CovarianceSpec,
    P: float,
) -> ThresholdReport:
    n = cov.n
    m = n + spec.k
    phi1, phi2, phi3 = phi_terms(profile, cov.lam_min, cov.lam_max, cov.trace, m)
    delta_n = delta_from_phi(phi1, phi2, phi3)
    eta_n = (spec.k + 1) * spec.norm_r_sq * cov.trace / (m + n)
    C_n, C_prime_n = trace_budgets(spec, profile, cov, P)
    return ThresholdReport(
        n=n,
        m=m,
        eta_n=eta_n,
        eta_prime_n=phi2,
        C_n=C_n,
        C_prime_n=C_prime_n,
        phi1_n=phi1,
        phi2_n=phi2,
        phi3_n=phi3,
        delta_n=delta_n,
    )


def default_params(report: ThresholdReport) -> TypicalParams:
    """Decoder thresholds sized from the analysis scales, with headroom so
    the typical sets have probability bounded away from zero at moderate
    blocklengths."""
    return TypicalParams(
        epsilon=DEFAULT_EPSILON,
        eta=1.5 * report.eta_n + 0.05,
        eta_prime=1.5 * report.eta_prime_n + 0.05,
    )


@dataclass(frozen=True)
class JointCovariance:
    """Joint covariance of ``(x, y)`` under the centre channel, with its
    closed-form inverse.  ``hc`` is kept for the residual-based decode
    path."""

    n: int
    m: int
    xi: np.ndarray
    xi_inv: np.ndarray
    hc: np.ndarray
    cov: CovarianceSpec


def build_joint(cov: CovarianceSpec, Hc: Union[BandedChannelMatrix, np.ndarray]) -> JointCovariance:
    """Assemble the joint covariance and verify the closed-form inverse and
    determinant identities; failures indicate ill-conditioning."""
    G = Hc.entries if isinstance(Hc, BandedChannelMatrix) else np.asarray(Hc, float)
    n = cov.n
    m = G.shape[0]
    if G.shape[1] != n:
        raise DimensionMismatch(
            f"channel matrix shape {G.shape} incompatible with n={n}"
        )
    sigma = cov.dense()
    cross = sigma @ G.T
    xi = np.block([[sigma, cross], [cross.T, np.eye(m) + G @ cross]])
    xi_inv = np.block(
        [[cov.inverse_dense() + G.T @ G, -G.T], [-G, np.eye(m)]]
    )
    scale = max(1.0, float(np.abs(xi).max()) * float(np.abs(xi_inv).max()))
    defect = float(np.abs(xi @ xi_inv - np.eye(n + m)).max())
    if not np.isfinite(defect) or defect > 1e-8 * scale:
        raise NotPositiveDefinite(
            f"joint covariance inverse defect {defect:.2e} exceeds tolerance"
        )
    sign, logdet = np.linalg.slogdet(xi)
    logdet_sigma = float(np.log(cov.d).sum())
    if sign <= 0 or abs(logdet - logdet_sigma) > 1e-6 * max(1.0, abs(logdet_sigma)):
        raise NotPositiveDefinite(
            "joint covariance determinant does not match the input covariance"
        )
    xi.setflags(write=False)
    xi_inv.setflags(write=False)
    return JointCovariance(n=n, m=m, xi=xi, xi_inv=xi_inv, hc=G, cov=cov)


def is_typical(a: np.ndarray, M: np.ndarray, eta: float) -> bool:
    """Whether ``|a' M^{-1} a / len(a) - 1| < eta`` (strict)."""
    a = np.asarray(a, dtype=float)
    try:
        c, lower = cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    u = solve_triangular(c, a, lower=lower, check_finite=False)
    q = float(u @ u)
    return abs(q / len(a) - 1.0) < eta


@dataclass(frozen=True)
class DecodeFailure:
    """Decode outcome when no unique candidate passes: ``kind`` is ``"none"``
    (empty candidate set) or ``"ambiguous"`` (``count >= 2`` candidates)."""

    kind: Literal["none", "ambiguous"]
    count: int = 0


@dataclass(frozen=True)
class DecodeContext:
    """Per-(codebook, channel) precomputation: input quadratic forms and the
    centre-channel images of every codeword."""

    q_sigma: np.ndarray
    images: np.ndarray


def prepare_context(book: Codebook, joint: JointCovariance) -> DecodeContext:
    q = joint.cov.inv_quad_rows(book.codewords)
    images = book.codewords @ joint.hc.T
    q.setflags(write=False)
    images.setflags(write=False)
    return DecodeContext(q_sigma=q, images=images)


def _pass_mask(
    y: np.ndarray,
    joint: JointCovariance,
    params: TypicalParams,
    ctx: DecodeContext,
) -> np.ndarray:
    """Boolean pass/fail of the two typicality tests for every codeword.

    Uses the split of the stacked quadratic form into the input form plus
    the squared centre-channel residual.
    """
    n, m = joint.n, joint.m
    size = ctx.q_sigma.shape[0]
    x_ok = np.abs(ctx.q_sigma / n - 1.0) < params.epsilon
    out = np.zeros(size, dtype=bool)
    for lo in range(0, size, _MASK_CHUNK):
        hi = min(lo + _MASK_CHUNK, size)
        diff = ctx.images[lo:hi] - y
        resid = np.einsum("ij,ij->i", diff, diff)
        w_form = (ctx.q_sigma[lo:hi] + resid) / (n + m)
        out[lo:hi] = x_ok[lo:hi] & (np.abs(w_form - 1.0) < params.eta)
    return out


def decode(
    y: np.ndarray,
    book: Codebook,
    joint: JointCovariance,
    params: TypicalParams,
    ctx: Optional[DecodeContext] = None,
) -> Union[int, DecodeFailure]:
    """Exhaustive joint-typicality decoding of one received vector: returns
    the unique passing message index, or a DecodeFailure value."""
    if ctx is None:
        ctx = prepare_context(book, joint)
    mask = _pass_mask(np.asarray(y, dtype=float), joint, params, ctx)
    hits = np.flatnonzero(mask)
    if len(hits) == 1:
        return int(hits[0])
    if len(hits) == 0:
        return DecodeFailure(kind="none")
    return DecodeFailure(kind="ambiguous", count=len(hits))


def wilson_interval(events: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("need trials > 0")
    if not 0 <= events <= trials:
        raise ValueError("events outside [0, trials]")
    p = events / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class ExperimentResult:
    """Counts from an error experiment.  A trial is type1 when the
    transmitted codeword itself fails a typicality test, type2 when it
    passes but is not the unique candidate; the Wilson interval covers the
    total error probability."""

    n: int
    R: float
    P: float
    trials: int
    type1: int
    type2: int
    success: int
    wilson_lo: float
    wilson_hi: float

    @property
    def errors(self) -> int:
        return self.type1 + self.type2

    @property
    def error_rate(self) -> float:
        return self.errors / self.trials


def run_error_experiment(
    spec: ChannelSpec,
    n: int,
    R: float,
    P: float,
    trials: int,
    master_seed: int = 0,
    law: ChannelLaw = ChannelLaw(kind="iid_uniform"),
    params: Optional[TypicalParams] = None,
    policy: str = "waterfill_gram",
    threads: int = 1,
    grid_size: int = DEFAULT_GRID,
) -> ExperimentResult:
    """Monte Carlo error rates of the joint-typicality decoder.

    Each trial draws its own channel, noise, and message from per-trial
    streams, so the counts are independent of ``threads``.
    """
    if trials <= 0:
        raise ValueError("need trials > 0")
    profile = compute_profile(spec, grid_size)
    cov = build_sigma(spec, n, P, policy)  # type: ignore[arg-type]
    report = thresholds(spec, profile, cov, P)
    if params is None:
        params = default_params(report)
    book = gen_codebook(cov, R, master_seed)
    joint = build_joint(cov, build_Hc(spec, n))
    ctx = prepare_context(book, joint)

    def run_range(lo: int, hi: int) -> tuple[int, int, int]:
        t1 = t2 = ok = 0
        for t in range(lo, hi):
            msg = int(rng_stream(master_seed, STREAM_MESSAGE, t).integers(book.size))
            H = sample_H(spec, n, law, master_seed, t)
            y = transmit(H, book.codewords[msg], master_seed, t)
            mask = _pass_mask(y, joint, params, ctx)
            if not mask[msg]:
                t1 += 1
            elif int(mask.sum()) > 1:
                t2 += 1
            else:
                ok += 1
        return t1, t2, ok

    if threads <= 1:
        parts = [run_range(0, trials)]
    else:
        step = math.ceil(trials / threads)
        spans = [(lo, min(lo + step, trials)) for lo in range(0, trials, step)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda s: run_range(*s), spans))
    type1 = sum(p[0] for p in parts)
    type2 = sum(p[1] for p in parts)
    success = sum(p[2] for p in parts)
    lo, hi = wilson_interval(type1 + type2, trials)
    return ExperimentResult(
        n=n,
        R=R,
        P=P,
        trials=trials,
        type1=type1,
        type2=type2,
        success=success,
        wilson_lo=lo,
        wilson_hi=hi,
    )
