"""Dense complex linear algebra helpers: Haar unitaries, unitarity checks, polynomial fits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_ATOL = 1e-10


class InvalidDimensionError(ValueError):
    pass


class NotUnitaryError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


def unitarity_error(matrix) -> float:
    """Max-norm of ``U^dagger U - I``."""
    u = np.asarray(matrix)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return np.inf
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def is_unitary(matrix, atol: float = DEFAULT_ATOL) -> bool:
    return unitarity_error(matrix) < atol


def as_unitary(matrix, atol: float = DEFAULT_ATOL) -> np.ndarray:
    """Validate ``matrix`` and return it as a read-only complex array.

    This is the checked constructor for unitary matrices; every other function
    in the package that is documented as returning a unitary returns a plain
    ``complex128`` ndarray.
    """
    u = np.array(matrix, dtype=complex)
    err = unitarity_error(u)
    if not err < atol:
        raise NotUnitaryError(f"matrix is not unitary: max|U^dag U - I| = {err:.3e}")
    u.setflags(write=False)
    return u


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a ``dim x dim`` unitary from the Haar measure.

    Ginibre matrix -> QR, then the columns of Q are rephased by the phases of
    diag(R) so the result is exactly Haar distributed (plain QR is not).
    """
    if dim < 1:
        raise InvalidDimensionError(f"dimension must be >= 1, got {dim}")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    ph = d / np.abs(d)
    return q * ph[np.newaxis, :]


@dataclass(frozen=True)
class PolyFitResult:
    """Least-squares polynomial fit, coefficients lowest degree first."""

    coefficients: tuple[float, ...]
    r_squared: float

    @property
    def residual_error(self) -> float:
        return 1.0 - self.r_squared

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.coefficients)


def r_squared(y, y_model) -> float:
    """Coefficient of determination against the mean-model baseline, clipped to [0, 1]."""
    y = np.asarray(y, dtype=float)
    ss_res = float(np.sum((y - np.asarray(y_model, dtype=float)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        # constant data: only a model that reproduces it up to rounding counts as perfect
        return 1.0 if ss_res <= DEFAULT_ATOL**2 * max(1.0, float(y @ y)) else 0.0
    return float(min(1.0, max(0.0, 1.0 - ss_res / ss_tot)))


def polyfit(x, y, degree: int) -> PolyFitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D sequences of equal length")
    if len(x) < degree + 1 or len(np.unique(x)) < degree + 1:
        raise InsufficientDataError(
            f"degree-{degree} fit needs at least {degree + 1} distinct x values, "
            f"got {len(np.unique(x))}"
        )
    vander = np.vander(x, degree + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(vander, y, rcond=None)
    return PolyFitResult(tuple(float(c) for c in coef), r_squared(y, vander @ coef))
