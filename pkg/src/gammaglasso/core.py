"""Dense matrix types and Gaussian density primitives.

Everything downstream (the penalized solvers, the bootstrap samplers, the
Gibbs baselines) goes through the three domain types defined here:
observation matrices, precision matrices, and sample covariances.  All
instances are immutable after construction; the operations are pure
functions, so values can be shared freely across threads.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

# Cholesky pivot must exceed this times the largest diagonal entry for a
# matrix to count as positive definite (scale-aware, avoids false rejections
# near machine epsilon).
PD_PIVOT_RTOL = 1e-12

LOG_2PI = float(np.log(2.0 * np.pi))


class NotPositiveDefiniteError(ValueError):
    """Raised when a matrix fails the positive-definiteness check."""


class CsvFormatError(ValueError):
    """Raised on malformed CSV input (non-numeric cells, ragged rows)."""


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return (A + A.T)/2; removes drift from asymmetric coordinate updates."""
    return (a + a.T) / 2.0


def cholesky_pd(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of `a`, or NotPositiveDefiniteError.

    On top of LAPACK succeeding, every pivot (squared factor diagonal) must
    exceed PD_PIVOT_RTOL times the largest diagonal entry of `a`.
    """
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as err:
        raise NotPositiveDefiniteError("Cholesky factorization failed") from err
    pivots = np.diag(chol) ** 2
    if not np.all(pivots > PD_PIVOT_RTOL * np.max(np.diag(a))):
        raise NotPositiveDefiniteError("Cholesky pivot below scale-aware tolerance")
    return chol


@dataclass(frozen=True)
class DataMatrix:
    """n x p observation matrix; row i is one observation vector."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("data matrix must be two-dimensional")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError("data matrix needs at least one row and one column")
        if not np.all(np.isfinite(values)):
            raise ValueError("data matrix entries must be finite")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_csv(cls, path, *, column_names: bool = False):
        """Load observations from CSV (comma-separated, one row per observation).

        Leading '#' comment lines are skipped.  A header row is detected
        automatically: if any cell of the first row fails to parse as a
        number the row is treated as column names.  Every other non-numeric
        cell is a hard error.  Returns (DataMatrix, names or None).
        """
        with open(path, "r", newline="") as fh:
            return cls.from_csv_text(fh.read())

    @classmethod
    def from_csv_text(cls, text: str):
        lines = [ln for ln in text.splitlines() if not ln.lstrip().startswith("#")]
        rows = [row for row in csv.reader(lines) if row]
        if not rows:
            raise CsvFormatError("empty CSV input")
        names = None
        first = rows[0]
        try:
            [float(cell) for cell in first]
        except ValueError:
            names = [cell.strip() for cell in first]
            rows = rows[1:]
            if not rows:
                raise CsvFormatError("CSV has a header but no data rows")
        width = len(rows[0])
        data = np.empty((len(rows), width))
        for i, row in enumerate(rows):
            if len(row) != width:
                raise CsvFormatError(f"row {i + 1} has {len(row)} cells, expected {width}")
            for j, cell in enumerate(row):
                try:
                    data[i, j] = float(cell)
                except ValueError:
                    raise CsvFormatError(f"non-numeric cell {cell!r} at row {i + 1}, column {j + 1}")
        if names is not None and len(names) != width:
            raise CsvFormatError("header width does not match data width")
        return cls(data), names


@dataclass(frozen=True)
class PrecisionMatrix:
    """Symmetric positive-definite p x p precision matrix.

    Construction symmetrizes the input, verifies positive definiteness via
    Cholesky, and freezes the result; the Cholesky factor is kept for
    determinant and density evaluations.
    """

    values: np.ndarray
    chol: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        values = symmetrize(np.asarray(self.values, dtype=np.float64))
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError("precision matrix must be square")
        if not np.all(np.isfinite(values)):
            raise ValueError("precision matrix entries must be finite")
        chol = cholesky_pd(values)
        values.flags.writeable = False
        chol.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "chol", chol)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SampleCov:
    """Symmetric positive-semidefinite p x p covariance matrix."""

    values: np.ndarray

    def __post_init__(self):
        values = symmetrize(np.asarray(self.values, dtype=np.float64))
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError("covariance matrix must be square")
        if not np.all(np.isfinite(values)):
            raise ValueError("covariance matrix entries must be finite")
        eigvals = np.linalg.eigvalsh(values)
        top = max(eigvals[-1], 0.0)
        if eigvals[0] < -1e-10 * max(top, 1e-300):
            raise ValueError("covariance matrix is not numerically PSD")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def sample_covariance(data: DataMatrix) -> SampleCov:
    """S = Y'Y / n, the (uncentered) sample covariance of the rows."""
    values = data.values
    return SampleCov(values.T @ values / data.n)


def log_det(omega: PrecisionMatrix) -> float:
    """log|Omega| via the Cholesky factor diagonal."""
    return 2.0 * float(np.sum(np.log(np.diag(omega.chol))))


def gaussian_log_density(y: np.ndarray, omega: PrecisionMatrix) -> float:
    """log N(y | 0, Omega^-1) = -(p/2) log 2pi + (1/2) log|Omega| - y'Omega y / 2."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (omega.dim,):
        raise ValueError(f"observation has length {y.shape}, expected ({omega.dim},)")
    quad = float(y @ omega.values @ y)
    return -0.5 * omega.dim * LOG_2PI + 0.5 * log_det(omega) - 0.5 * quad
