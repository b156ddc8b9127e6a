"""Gaussian measurement ensembles: sampling, persistence, invariants.

An ensemble holds m i.i.d. standard Gaussian rows a_j, a planted unit
signal x, and the squared measurements y_j^2 = <a_j, x>^2.  Ensembles are
immutable after construction and safe to share across threads; parallelism
happens across trials with distinct TrialSeeds.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, IntegrityError, InvalidSignalError, NormalizationError
from .rng import as_trial_seed, generator

MAGIC = b"PRLE"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQQ")  # magic, version u32, n u64, m u64, seed u64

SIGNAL_UNIT_TOL = 1e-12
Y2_CONSISTENCY_TOL = 1e-12


def _check_consistency(rows, signal, y_squared):
    t = rows @ signal
    t2 = t * t
    scale = np.maximum(1.0, t2)
    if not np.all(np.abs(y_squared - t2) <= Y2_CONSISTENCY_TOL * scale):
        worst = float(np.max(np.abs(y_squared - t2) / scale))
        raise IntegrityError(
            f"y_squared inconsistent with <rows, signal>^2 (worst rel dev {worst:.3e})"
        )


@dataclass(frozen=True)
class MeasurementEnsemble:
    """m Gaussian rows, the planted unit signal, and squared measurements."""

    rows: np.ndarray
    signal: np.ndarray
    y_squared: np.ndarray
    seed: int
    m: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise IntegrityError(f"require m >= 1 and n >= 1, got m={self.m}, n={self.n}")
        if self.rows.shape != (self.m, self.n):
            raise IntegrityError(f"rows shape {self.rows.shape} != ({self.m}, {self.n})")
        if self.signal.shape != (self.n,) or self.y_squared.shape != (self.m,):
            raise IntegrityError("signal / y_squared shapes do not match (n,) / (m,)")
        if not (
            np.all(np.isfinite(self.rows))
            and np.all(np.isfinite(self.signal))
            and np.all(np.isfinite(self.y_squared))
        ):
            raise IntegrityError("ensemble contains non-finite entries")
        if abs(np.linalg.norm(self.signal) - 1.0) > SIGNAL_UNIT_TOL:
            raise IntegrityError("signal is not a unit vector")
        _check_consistency(self.rows, self.signal, self.y_squared)
        for arr in (self.rows, self.signal, self.y_squared):
            arr.setflags(write=False)

    @classmethod
    def create(cls, rows, signal, y_squared=None, seed: int = 0) -> "MeasurementEnsemble":
        """Build an ensemble from explicit arrays, computing y^2 if omitted."""
        rows = np.ascontiguousarray(rows, dtype=np.float64)
        signal = np.ascontiguousarray(signal, dtype=np.float64)
        if y_squared is None:
            t = rows @ signal
            y_squared = t * t
        y_squared = np.ascontiguousarray(y_squared, dtype=np.float64)
        m, n = rows.shape
        return cls(rows=rows, signal=signal, y_squared=y_squared, seed=int(seed), m=m, n=n)


def sample_ensemble(n: int, m: int, signal="random", seed=0) -> MeasurementEnsemble:
    """Sample m i.i.d. N(0, I_n) rows and measure the planted signal.

    ``signal`` is either the string "random" (a uniform unit vector drawn
    from the same stream, before the rows) or an explicit unit vector
    (norm within 1e-9 of 1, else NormalizationError).  ``seed`` is a raw
    int or a TrialSeed; identical (n, m, signal, seed) give bit-identical
    ensembles on one platform.
    """
    if n < 1 or m < 1:
        raise IntegrityError(f"require n >= 1 and m >= 1, got n={n}, m={m}")
    ts = as_trial_seed(seed)
    g = generator(ts)

    if isinstance(signal, str):
        if signal != "random":
            raise InvalidSignalError(f"unknown signal spec {signal!r}")
        x = g.standard_normal(n)
        nrm = np.linalg.norm(x)
        while nrm == 0.0:  # pragma: no cover - probability zero
            x = g.standard_normal(n)
            nrm = np.linalg.norm(x)
        x = x / nrm
    else:
        x = np.ascontiguousarray(signal, dtype=np.float64)
        if x.shape != (n,):
            raise InvalidSignalError(f"signal shape {x.shape} != ({n},)")
        nrm = float(np.linalg.norm(x))
        if nrm == 0.0 or not np.isfinite(nrm):
            raise InvalidSignalError("signal must be a nonzero finite vector")
        if abs(nrm - 1.0) > 1e-9:
            raise NormalizationError(
                f"signal norm {nrm!r} is not 1 within 1e-9; pass signal/||signal||"
            )
        x = x / nrm  # tighten to the 1e-12 invariant

    rows = g.standard_normal((m, n))
    t = rows @ x
    return MeasurementEnsemble(
        rows=rows,
        signal=x,
        y_squared=t * t,
        seed=ts.derived,
        m=m,
        n=n,
    )


def save_ensemble(e: MeasurementEnsemble, path) -> None:
    """Write the self-describing binary layout; round-trips bit-exactly."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, e.n, e.m, e.seed))
        fh.write(np.ascontiguousarray(e.rows, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(e.signal, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(e.y_squared, dtype="<f8").tobytes())


def _read_exact(fh, count: int, offset: int, what: str) -> bytes:
    buf = fh.read(count)
    if len(buf) != count:
        raise FormatError(f"truncated file while reading {what}", offset + len(buf))
    return buf


def load_ensemble(path) -> MeasurementEnsemble:
    """Read an ensemble file, validating format and invariants."""
    with open(path, "rb") as fh:
        header = _read_exact(fh, _HEADER.size, 0, "header")
        magic, version, n, m, seed = _HEADER.unpack(header)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", 0)
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported format version {version}", 4)
        if n < 1 or m < 1:
            raise IntegrityError(f"header declares m={m}, n={n}; both must be >= 1")
        offset = _HEADER.size
        raw = _read_exact(fh, 8 * m * n, offset, "rows")
        rows = np.frombuffer(raw, dtype="<f8").reshape(m, n).astype(np.float64)
        offset += 8 * m * n
        raw = _read_exact(fh, 8 * n, offset, "signal")
        signal = np.frombuffer(raw, dtype="<f8").astype(np.float64)
        offset += 8 * n
        raw = _read_exact(fh, 8 * m, offset, "y_squared")
        y_squared = np.frombuffer(raw, dtype="<f8").astype(np.float64)
        offset += 8 * m
        if fh.read(1):
            raise FormatError("trailing bytes after y_squared block", offset)
    return MeasurementEnsemble(
        rows=np.ascontiguousarray(rows),
        signal=np.ascontiguousarray(signal),
        y_squared=np.ascontiguousarray(y_squared),
        seed=seed,
        m=m,
        n=n,
    )
