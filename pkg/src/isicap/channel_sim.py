"""Channel realizations, input covariances, codebooks, and trial I/O.

Randomness is organized around one master seed and fixed stream ids, so a
trial is reproducible in isolation: stream CHANNEL drives tap draws, NOISE
the additive noise, CODEBOOK the codeword Gaussians, MESSAGE the message
picks.  Each (stream, trial_index) pair gets its own counter-based generator,
which makes multi-threaded experiments independent of scheduling order.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import BinaryIO, Literal, Optional, Union

import numpy as np
from scipy.linalg import eigh

from .errors import CodebookTooLarge, DimensionMismatch
from .spectrum import BandedChannelMatrix, ChannelSpec, banded_from_taps, gram_matrix
from .waterfill import POWER_FLOOR, waterfill_powers

__all__ = [
    "STREAM_CHANNEL",
    "STREAM_NOISE",
    "STREAM_CODEBOOK",
    "STREAM_MESSAGE",
    "MAX_CODEBOOK_BITS",
    "rng_stream",
    "ChannelLaw",
    "sample_taps",
    "sample_H",
    "CovarianceSpec",
    "build_sigma",
    "Codebook",
    "gen_codebook",
    "transmit",
    "dump_trial",
    "load_trial",
]

STREAM_CHANNEL = 0
STREAM_NOISE = 1
STREAM_CODEBOOK = 2
STREAM_MESSAGE = 3

MAX_CODEBOOK_BITS = 24
TRIAL_MAGIC = b"ISICHTRL"
_HEADER = struct.Struct("<QQQ")


def rng_stream(master_seed: int, stream: int, index: int) -> np.random.Generator:
    """Counter-based generator for one (stream, index) cell under a master
    seed.  Distinct cells are statistically independent."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(stream, index))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ChannelLaw:
    """How tap realizations move inside their intervals.

    iid_uniform -- every output draws its taps uniformly and independently
    constant    -- taps frozen at ``c + offset * r`` (offset entries in [-1, 1])
    block_hold  -- uniform draws held constant over ``block_len`` consecutive
                   outputs
    """

    kind: Literal["iid_uniform", "constant", "block_hold"]
    offset: Optional[tuple[float, ...]] = None
    block_len: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("iid_uniform", "constant", "block_hold"):
            raise ValueError(f"unknown channel law {self.kind!r}")
        if self.kind == "constant":
            if self.offset is None:
                raise ValueError("constant law needs an offset tuple")
            object.__setattr__(
                self, "offset", tuple(float(v) for v in self.offset)
            )
            if any(abs(v) > 1.0 for v in self.offset):
                raise ValueError("offsets are fractions of the radius, in [-1, 1]")
        if self.kind == "block_hold" and self.block_len < 1:
            raise ValueError("block_len must be >= 1")


def sample_taps(
    spec: ChannelSpec,
    m: int,
    law: ChannelLaw,
    master_seed: int,
    trial_index: int,
) -> np.ndarray:
    """Tap matrix of shape ``(m, k + 1)``; row ``i`` holds output ``i``'s
    taps, each inside its interval."""
    c = np.asarray(spec.c)
    r = np.asarray(spec.r)
    if law.kind == "constant":
        off = np.asarray(law.offset)
        if off.shape != c.shape:
            raise DimensionMismatch(
                f"offset has {off.size} entries, channel has {c.size} taps"
            )
        return np.tile(c + off * r, (m, 1))
    rng = rng_stream(master_seed, STREAM_CHANNEL, trial_index)
    if law.kind == "iid_uniform":
        u = rng.uniform(-1.0, 1.0, size=(m, spec.k + 1))
    else:
        blocks = math.ceil(m / law.block_len)
        u = np.repeat(
            rng.uniform(-1.0, 1.0, size=(blocks, spec.k + 1)),
            law.block_len,
            axis=0,
        )[:m]
    return c + u * r


def sample_H(
    spec: ChannelSpec,
    n: int,
    law: ChannelLaw,
    master_seed: int,
    trial_index: int,
) -> BandedChannelMatrix:
    taps = sample_taps(spec, n + spec.k, law, master_seed, trial_index)
    return banded_from_taps(taps, n, spec.k)


@dataclass(frozen=True)
class CovarianceSpec:
    """Input covariance in spectral form ``Sigma = U diag(d) U'``.

    ``basis`` is ``None`` for the standard basis (diagonal covariance).
    Arrays are frozen read-only at construction; all derived matrices are
    recomputed on demand so instances stay cheap to share across threads.
    """

    n: int
    d: np.ndarray
    basis: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        d = np.ascontiguousarray(np.asarray(self.d, dtype=float))
        object.__setattr__(self, "d", d)
        if d.shape != (self.n,):
            raise ValueError(f"d has shape {d.shape}, expected ({self.n},)")
        if np.any(d <= 0.0):
            raise ValueError("covariance spectrum must be positive")
        d.setflags(write=False)
        if self.basis is not None:
            U = np.ascontiguousarray(np.asarray(self.basis, dtype=float))
            object.__setattr__(self, "basis", U)
            if U.shape != (self.n, self.n):
                raise ValueError(f"basis has shape {U.shape}, expected square")
            err = np.abs(U.T @ U - np.eye(self.n)).max()
            if err > 1e-8:
                raise ValueError(f"basis is not orthonormal (defect {err:.2e})")
            U.setflags(write=False)

    @property
    def trace(self) -> float:
        return float(self.d.sum())

    @property
    def lam_min(self) -> float:
        return float(self.d.min())

    @property
    def lam_max(self) -> float:
        return float(self.d.max())

    @property
    def peak_fraction(self) -> float:
        """Largest eigenvalue over blocklength; small values indicate no
        single direction hogs the power budget."""
        return float(self.d.max()) / self.n

    def dense(self) -> np.ndarray:
        if self.basis is None:
            return np.diag(self.d)
        return (self.basis * self.d) @ self.basis.T

    def inverse_dense(self) -> np.ndarray:
        if self.basis is None:
            return np.diag(1.0 / self.d)
        return (self.basis / self.d) @ self.basis.T

    def sqrt_matrix(self) -> np.ndarray:
        """Symmetric positive square root."""
        if self.basis is None:
            return np.diag(np.sqrt(self.d))
        return (self.basis * np.sqrt(self.d)) @ self.basis.T

    def factor(self) -> np.ndarray:
        """A (generally non-symmetric) factor ``F`` with ``F F' = Sigma``;
        codewords are ``F g`` for standard Gaussian ``g``."""
        if self.basis is None:
            return np.diag(np.sqrt(self.d))
        return self.basis * np.sqrt(self.d)

    def inv_quad_rows(self, X: np.ndarray) -> np.ndarray:
        """Per-row quadratic forms ``x' Sigma^{-1} x`` for rows of ``X``."""
        if X.ndim != 2 or X.shape[1] != self.n:
            raise DimensionMismatch(f"rows must have length {self.n}")
        W = X if self.basis is None else X @ self.basis
        return (W * W) @ (1.0 / self.d)


def build_sigma(
    spec: ChannelSpec,
    n: int,
    P: float,
    policy: Literal["white_iso", "waterfill_gram"] = "waterfill_gram",
) -> CovarianceSpec:
    """Input covariance with power budget ``trace <= n * P``.

    white_iso      -- ``P`` per dimension in the standard basis
    waterfill_gram -- eigenbasis of the centre Gram matrix, with the budget
                      water-filled over its eigenvalues
    """
    if P <= 0.0:
        raise ValueError("need P > 0")
    if policy == "white_iso":
        return CovarianceSpec(n=n, d=np.full(n, float(P)))
    if policy == "waterfill_gram":
        lam, U = eigh(gram_matrix(spec, n))
        d, _ = waterfill_powers(lam, n * P, POWER_FLOOR)
        return CovarianceSpec(n=n, d=d, basis=U)
    raise ValueError(f"unknown covariance policy {policy!r}")


@dataclass(frozen=True)
class Codebook:
    """Exhaustively decodable Gaussian codebook: ``size = 2**ceil(n * R)``
    rows drawn once from the input covariance."""

    n: int
    R: float
    size: int
    codewords: np.ndarray

    def __post_init__(self) -> None:
        if self.codewords.shape != (self.size, self.n):
            raise ValueError("codeword array shape mismatch")


def gen_codebook(cov: CovarianceSpec, R: float, master_seed: int) -> Codebook:
    if R < 0.0:
        raise ValueError("rate must be non-negative")
    bits = math.ceil(cov.n * R - 1e-12)
    if bits > MAX_CODEBOOK_BITS:
        raise CodebookTooLarge(
            f"2**{bits} codewords exceed the exhaustive-decoding cap 2**{MAX_CODEBOOK_BITS}"
        )
    size = 1 << max(bits, 0)
    g = rng_stream(master_seed, STREAM_CODEBOOK, 0).standard_normal((size, cov.n))
    if cov.basis is None:
        X = g * np.sqrt(cov.d)
    else:
        X = (g * np.sqrt(cov.d)) @ cov.basis.T
    X.setflags(write=False)
    return Codebook(n=cov.n, R=float(R), size=size, codewords=X)


def transmit(
    H: BandedChannelMatrix,
    x: np.ndarray,
    master_seed: int,
    trial_index: int,
    noise_std: float = 1.0,
) -> np.ndarray:
    """One channel use: ``y = H x + z`` with iid Gaussian ``z``.

    ``noise_std`` exists for debugging only; every bound in the package
    assumes unit noise."""
    x = np.asarray(x, dtype=float)
    if x.shape != (H.n,):
        raise DimensionMismatch(f"x has shape {x.shape}, channel expects ({H.n},)")
    z = rng_stream(master_seed, STREAM_NOISE, trial_index).standard_normal(H.m)
    return H.entries @ x + noise_std * z


def dump_trial(
    dst: Union[str, BinaryIO],
    H: BandedChannelMatrix,
    x: np.ndarray,
    y: np.ndarray,
    trial_index: int,
) -> None:
    """Binary trial record: 32-byte header (8-byte magic, then n, k, trial as
    little-endian uint64) followed by little-endian float64 payloads in
    row-major order: the dense channel matrix, then ``x``, then ``y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (H.n,) or y.shape != (H.m,):
        raise DimensionMismatch("x/y lengths do not match the channel")
    fh: BinaryIO
    own = isinstance(dst, (str, bytes))
    fh = open(dst, "wb") if own else dst  # type: ignore[arg-type]
    try:
        fh.write(TRIAL_MAGIC)
        fh.write(_HEADER.pack(H.n, H.k, trial_index))
        fh.write(np.ascontiguousarray(H.entries, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(x, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(y, dtype="<f8").tobytes())
    finally:
        if own:
            fh.close()


def load_trial(
    src: Union[str, BinaryIO],
) -> tuple[BandedChannelMatrix, np.ndarray, np.ndarray, int]:
    own = isinstance(src, (str, bytes))
    fh = open(src, "rb") if own else src  # type: ignore[arg-type]
    try:
        magic = fh.read(len(TRIAL_MAGIC))
        if magic != TRIAL_MAGIC:
            raise ValueError(f"bad trial magic {magic!r}")
        n, k, trial = _HEADER.unpack(fh.read(_HEADER.size))
        n, k = int(n), int(k)
        m = n + k
        buf = fh.read(8 * (m * n + n + m))
        if len(buf) != 8 * (m * n + n + m):
            raise ValueError("truncated trial record")
        flat = np.frombuffer(buf, dtype="<f8")
        entries = flat[: m * n].reshape(m, n).copy()
        x = flat[m * n : m * n + n].copy()
        y = flat[m * n + n :].copy()
        entries.setflags(write=False)
        return BandedChannelMatrix(m=m, n=n, k=k, entries=entries), x, y, int(trial)
    finally:
        if own:
            fh.close()
