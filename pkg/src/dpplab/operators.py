"""Nystrom discretization of kernel operators and spectral transforms.

A kernel T restricted to a window is represented by the symmetrized
matrix M[i, j] = sqrt(w_i) T(z_i, z_j) sqrt(w_j) over a tensor
Gauss-Legendre rule, so the matrix spectrum approximates the operator
spectrum and determinant formulas carry over verbatim.

Local interaction values J_[Lambda](x, y) at arbitrary points come from
the resolvent identity

    J(x, y) = K(x, y) + s_x . (I - M)^{-1} s_y,
    s_x[i] = sqrt(w_i) K(z_i, x),

equivalent to appending x and y as zero-weight quadrature nodes.  Both
summands are positive-semidefinite kernels, so every configuration
matrix assembled this way is PSD and the determinant inequalities under
test are exact matrix facts, independent of discretization error.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DomainError,
    NoClosedForm,
    NumericalBreakdown,
    QuadratureMismatch,
    SingularOperator,
    SpectrumAtOne,
)
from .geometry import Window
from .kernels import Kernel
from .quadrature import Quadrature, tensor_gauss_legendre

# (H) gate: refuse spectral transforms when the top eigenvalue reaches 1
SPECTRUM_GATE = 1.0 - 1e-8
# eigenvalue dust threshold, relative to the top eigenvalue
DUST_RELATIVE = 1e-12
# genuine negative eigenvalues beyond this are a breakdown, not dust
NEGATIVE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues (descending) and matching orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def top(self) -> float:
        return float(self.eigenvalues[0]) if self.eigenvalues.size else 0.0


class DiscretizedOperator:
    """A kernel operator pinned to one quadrature rule.

    `kind` is "K" (correlation), "J" (global interaction), or "J_local"
    (local interaction obtained by a spectral transform or restriction).
    """

    __slots__ = ("quad", "matrix", "spec", "kind", "_cache")

    def __init__(self, quad: Quadrature, matrix: np.ndarray, spec: Kernel | None, kind: str):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (quad.size, quad.size):
            raise DomainError("matrix shape does not match quadrature size")
        matrix = 0.5 * (matrix + matrix.T)
        matrix.flags.writeable = False
        self.quad = quad
        self.matrix = matrix
        self.spec = spec
        self.kind = kind
        self._cache: dict = {}

    @property
    def size(self) -> int:
        return self.quad.size

    def spectral(self) -> SpectralData:
        if "spectral" not in self._cache:
            vals, vecs = np.linalg.eigh(self.matrix)
            order = np.argsort(vals)[::-1]
            self._cache["spectral"] = SpectralData(vals[order], vecs[:, order])
        return self._cache["spectral"]

    def clipped_eigenvalues(self) -> np.ndarray:
        """Spectrum with roundoff dust clipped to zero (descending)."""
        vals = self.spectral().eigenvalues.copy()
        if vals.size == 0:
            return vals
        top = max(vals.max(), 0.0)
        floor = DUST_RELATIVE * top
        scale = max(top, 1.0)
        if vals.min() < -NEGATIVE_TOLERANCE * scale:
            raise NumericalBreakdown(
                f"{self.kind} discretization has eigenvalue {vals.min():.3e} < 0"
            )
        vals[np.abs(vals) < floor] = 0.0
        return np.clip(vals, 0.0, None)


def discretize(
    spec: Kernel,
    which: str,
    window: Window,
    n: int,
    panels: int | None = None,
) -> DiscretizedOperator:
    """Symmetrized Nystrom matrix of K or J on `window` with n nodes per axis.

    For derived-correlation families, `which='K'` first pins the kernel's
    padded evaluation context to this window so repeated calls reuse it.
    """
    if which not in ("K", "J"):
        raise DomainError(f"which must be 'K' or 'J', got {which!r}")
    if window.dimension != spec.dimension:
        raise DomainError(
            f"window dimension {window.dimension} vs kernel dimension {spec.dimension}"
        )
    if n < 2:
        raise DomainError("need n >= 2 nodes per axis")
    quad = tensor_gauss_legendre(window, n, panels=panels)
    return discretize_on(spec, which, quad)


def discretize_on(spec: Kernel, which: str, quad: Quadrature) -> DiscretizedOperator:
    """Discretize on an explicit rule (e.g. a union of disjoint windows)."""
    if which == "K":
        values = spec.k_values(quad.nodes, quad.nodes)
        kind = "K"
    elif which == "J":
        if not spec.has_closed_form_J:
            raise NoClosedForm(f"{spec.label} has no directly evaluable interaction kernel")
        values = spec.j_values(quad.nodes, quad.nodes)
        kind = "J"
    else:
        raise DomainError(f"which must be 'K' or 'J', got {which!r}")
    sw = quad.sqrt_weights
    return DiscretizedOperator(quad, values * np.outer(sw, sw), spec, kind)


def operator_trace(op: DiscretizedOperator) -> float:
    """Trace of the operator: sum_i w_i T(z_i, z_i) = tr of the matrix."""
    return float(np.trace(op.matrix))


def _gate(op: DiscretizedOperator) -> np.ndarray:
    if op.kind != "K":
        raise DomainError(f"spectral transform needs a correlation operator, got {op.kind}")
    vals = op.clipped_eigenvalues()
    if vals.size and vals[0] >= SPECTRUM_GATE:
        raise SpectrumAtOne(
            f"top eigenvalue {vals[0]:.12f} >= {SPECTRUM_GATE}; hypothesis violated"
        )
    return vals


def local_interaction(op: DiscretizedOperator) -> DiscretizedOperator:
    """Local interaction J_[Lambda] = K_Lambda (I - K_Lambda)^{-1}.

    Same eigenvectors, eigenvalues mapped lambda -> lambda / (1 - lambda).
    """
    vals = _gate(op)
    spect = op.spectral()
    mapped = vals / (1.0 - vals)
    U = spect.eigenvectors
    matrix = (U * mapped[None, :]) @ U.T
    out = DiscretizedOperator(op.quad, matrix, op.spec, "J_local")
    out._cache["spectral"] = SpectralData(mapped, U)
    return out


def fredholm_det_I_minus(op: DiscretizedOperator) -> float:
    """det(I - K_Lambda): the vacuum probability, in (0, 1]."""
    vals = _gate(op)
    return float(np.exp(np.sum(np.log1p(-vals))))


def det_I_plus(op: DiscretizedOperator) -> float:
    """det(I + T) for a nonnegative (interaction-type) operator."""
    if op.kind == "K":
        raise DomainError("det_I_plus expects an interaction-type operator")
    vals = op.clipped_eigenvalues()
    return float(np.exp(np.sum(np.log1p(vals))))


def operator_leq(a: DiscretizedOperator, b: DiscretizedOperator, tol: float = 1e-9) -> bool:
    """Loewner order check: smallest eigenvalue of B - A >= -tol."""
    if not a.quad.same_rule(b.quad):
        raise QuadratureMismatch("operators live on different quadrature rules")
    gap = np.linalg.eigvalsh(b.matrix - a.matrix)[0]
    return bool(gap >= -tol)


def loewner_gap(a: DiscretizedOperator, b: DiscretizedOperator) -> float:
    """Smallest eigenvalue of B - A (negative means the order fails)."""
    if not a.quad.same_rule(b.quad):
        raise QuadratureMismatch("operators live on different quadrature rules")
    return float(np.linalg.eigvalsh(b.matrix - a.matrix)[0])


def projection_inversion_gap(T, mask) -> float:
    """Smallest eigenvalue of P T^{-1} P - P (P T P)^{-1} P on the mask block.

    Nonnegative in exact arithmetic for positive T.  `T` may be a
    DiscretizedOperator or a plain symmetric positive matrix.
    """
    matrix = T.matrix if isinstance(T, DiscretizedOperator) else np.asarray(T, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (matrix.shape[0],):
        raise DomainError("mask length does not match operator size")
    if not np.any(mask):
        raise DomainError("mask selects no indices")
    vals = np.linalg.eigvalsh(matrix)
    if vals[0] <= 1e-8:
        raise SingularOperator(f"smallest eigenvalue {vals[0]:.3e} <= 1e-8")
    full_inv_block = np.linalg.inv(matrix)[np.ix_(mask, mask)]
    block_inv = np.linalg.inv(matrix[np.ix_(mask, mask)])
    return float(np.linalg.eigvalsh(full_inv_block - block_inv)[0])


# ---------------------------------------------------------------------------
# off-node interaction values (resolvent extension)


def _resolvent_factor(op: DiscretizedOperator):
    """Cached Cholesky factor of I - M for a correlation operator."""
    if op.kind != "K":
        raise DomainError("resolvent extension needs a correlation operator")
    if "cho" not in op._cache:
        _gate(op)  # enforces the spectrum-below-one hypothesis
        eye = np.eye(op.size)
        op._cache["cho"] = scipy.linalg.cho_factor(eye - op.matrix, lower=True)
    return op._cache["cho"]


def _weighted_columns(op: DiscretizedOperator, X: np.ndarray) -> np.ndarray:
    # s_x[i] = sqrt(w_i) K(z_i, x); columns indexed by the points
    vals = op.spec.k_values(op.quad.nodes, X)
    return vals * op.quad.sqrt_weights[:, None]


def interaction_values(op: DiscretizedOperator, X, Y=None) -> np.ndarray:
    """J_[Lambda](x_i, y_j) for arbitrary points, via the resolvent identity."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    SX = _weighted_columns(op, X)
    cho = _resolvent_factor(op)
    if Y is None or Y is X:
        solved = scipy.linalg.cho_solve(cho, SX)
        out = op.spec.k_values(X, X) + SX.T @ solved
        return 0.5 * (out + out.T)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    SY = _weighted_columns(op, Y)
    return op.spec.k_values(X, Y) + SX.T @ scipy.linalg.cho_solve(cho, SY)


def interaction_diagonal(op: DiscretizedOperator, X) -> np.ndarray:
    """J_[Lambda](x, x) for each row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    SX = _weighted_columns(op, X)
    cho = _resolvent_factor(op)
    solved = scipy.linalg.cho_solve(cho, SX)
    kxx = np.array([float(op.spec.k_values(row[None, :], row[None, :])[0, 0]) for row in X])
    return kxx + np.einsum("ip,ip->p", SX, solved)


def restrict_interaction(op: DiscretizedOperator, quad: Quadrature) -> DiscretizedOperator:
    """P J_[Delta] P on a sub-window's rule: extension values re-weighted."""
    vals = interaction_values(op, quad.nodes)
    sw = quad.sqrt_weights
    return DiscretizedOperator(quad, vals * np.outer(sw, sw), op.spec, "J_local")
