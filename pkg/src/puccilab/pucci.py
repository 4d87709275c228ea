"""Pucci extremal operators on symmetric matrices and in radial form.

The operators weight the positive and negative eigenvalues of a symmetric
matrix by the two ellipticity constants.  Everything here is exact small
dense linear algebra; the eigensolver is a cyclic Jacobi sweep so results
are deterministic and dependency-free.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

# Eigenvalues with |e| below this times max(1, ||M||_F) count as zero and
# contribute nothing to either weighted sum.
ZERO_EIG_REL_TOL = 1e-13

# Jacobi convergence: off-diagonal Frobenius norm <= this times ||M||_F.
JACOBI_REL_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100

MAX_DIM = 64


class OperatorSign(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"

    @classmethod
    def parse(cls, text: str) -> "OperatorSign":
        try:
            return cls(text.lower())
        except ValueError:
            raise InvalidInputError(f"operator sign must be 'plus' or 'minus', got {text!r}") from None


@dataclass(frozen=True)
class Ellipticity:
    """Ellipticity constants 0 < lam <= Lam and the space dimension n >= 2."""

    lam: float
    Lam: float
    n: int

    def __post_init__(self):
        if not (0.0 < self.lam <= self.Lam):
            raise InvalidInputError(f"need 0 < lambda <= Lambda, got ({self.lam}, {self.Lam})")
        if not (isinstance(self.n, int) and self.n >= 2):
            raise InvalidInputError(f"dimension n must be an integer >= 2, got {self.n!r}")


class SymMatrix:
    """Symmetric dim x dim matrix stored as the row-major upper triangle."""

    __slots__ = ("dim", "upper")

    def __init__(self, dim: int, upper):
        if not (isinstance(dim, int) and dim >= 1):
            raise InvalidInputError(f"matrix dimension must be a positive integer, got {dim!r}")
        if dim > MAX_DIM:
            raise InvalidInputError(f"matrix dimension {dim} exceeds supported maximum {MAX_DIM}")
        upper = np.asarray(upper, dtype=float).ravel()
        want = dim * (dim + 1) // 2
        if upper.size != want:
            raise InvalidInputError(f"upper triangle of a {dim}x{dim} matrix needs {want} entries, got {upper.size}")
        self.dim = dim
        self.upper = upper

    @classmethod
    def from_full(cls, a) -> "SymMatrix":
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(a).max(initial=0.0)))):
            raise InvalidInputError("matrix is not symmetric")
        n = a.shape[0]
        sym = 0.5 * (a + a.T)
        iu = np.triu_indices(n)
        return cls(n, sym[iu])

    def to_full(self) -> np.ndarray:
        n = self.dim
        full = np.zeros((n, n))
        iu = np.triu_indices(n)
        full[iu] = self.upper
        full.T[iu] = self.upper
        return full

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.to_full()))

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        if self.dim != other.dim:
            raise InvalidInputError("dimension mismatch in matrix addition")
        return SymMatrix(self.dim, self.upper + other.upper)

    def __mul__(self, scalar: float) -> "SymMatrix":
        return SymMatrix(self.dim, self.upper * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "SymMatrix":
        return SymMatrix(self.dim, -self.upper)


def symmatrix_from_json(obj: dict) -> SymMatrix:
    """Read {"dim": k, "upper": [row-major upper-triangle reals]}."""
    if not isinstance(obj, dict):
        raise InvalidInputError("matrix JSON must be an object")
    extra = set(obj) - {"dim", "upper"}
    if extra:
        raise InvalidInputError(f"unknown matrix JSON keys: {sorted(extra)}")
    try:
        dim = obj["dim"]
        upper = obj["upper"]
    except KeyError as exc:
        raise InvalidInputError(f"matrix JSON missing key {exc.args[0]!r}") from None
    if not isinstance(dim, int):
        raise InvalidInputError("matrix JSON 'dim' must be an integer")
    return SymMatrix(dim, upper)


def symmatrix_to_json(m: SymMatrix) -> dict:
    return {"dim": m.dim, "upper": [float(x) for x in m.upper]}


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted ascending plus an orthogonality residual of the
    internal rotation accumulator (Frobenius norm of V^T V - I)."""

    eigenvalues: tuple
    ortho_residual: float


def _jacobi(a: list, n: int, thresh: float):
    """Cyclic Jacobi on a full matrix given as nested lists. Returns (diag, V).

    Plain Python floats: for the dims this package targets (<= 64, usually
    <= 6) this beats vectorized rotations on array-call overhead.
    """
    v = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    # skip threshold for individual rotations within a sweep
    skip = thresh / max(1, n)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = 0.0
        for i in range(n - 1):
            ai = a[i]
            for j in range(i + 1, n):
                off += ai[j] * ai[j]
        if math.sqrt(2.0 * off) <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if abs(apq) <= skip:
                    continue
                app = a[p][p]
                aqq = a[q][q]
                theta = 0.5 * (aqq - app) / apq
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                a[p][p] = app - t * apq
                a[q][q] = aqq + t * apq
                a[p][q] = 0.0
                a[q][p] = 0.0
                for k in range(n):
                    if k != p and k != q:
                        akp = a[k][p]
                        akq = a[k][q]
                        a[k][p] = c * akp - s * akq
                        a[p][k] = a[k][p]
                        a[k][q] = s * akp + c * akq
                        a[q][k] = a[k][q]
                for k in range(n):
                    vkp = v[k][p]
                    vkq = v[k][q]
                    v[k][p] = c * vkp - s * vkq
                    v[k][q] = s * vkp + c * vkq
    return [a[i][i] for i in range(n)], v


def jacobi_eigh(matrix) -> tuple:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (w, V, ortho_residual) with eigenvalues w ascending and V's
    columns the matching eigenvectors.
    """
    full = np.asarray(matrix, dtype=float)
    n = full.shape[0]
    if n == 0:
        raise InvalidInputError("cannot decompose a 0-dimensional matrix")
    fro = float(np.linalg.norm(full))
    a = [[float(full[i, j]) for j in range(n)] for i in range(n)]
    diag, v = _jacobi(a, n, JACOBI_REL_TOL * fro)
    order = sorted(range(n), key=lambda i: diag[i])
    w = np.array([diag[i] for i in order])
    vmat = np.array(v)[:, order]
    ortho = float(np.linalg.norm(vmat.T @ vmat - np.eye(n)))
    return w, vmat, ortho


def eigenvalues_sym(m: SymMatrix) -> Spectrum:
    """Sorted eigenvalues of a SymMatrix (dim <= 64)."""
    w, _v, ortho = jacobi_eigh(m.to_full())
    return Spectrum(tuple(float(x) for x in w), ortho)


def pucci_eval(m: SymMatrix, ell: Ellipticity, sign: OperatorSign) -> float:
    """Weighted eigenvalue sum: Lam over the positive part and lam over the
    negative part for PLUS, swapped for MINUS. Near-zero eigenvalues
    (relative to the Frobenius scale) contribute nothing."""
    if m.dim != ell.n:
        raise InvalidInputError(f"matrix dim {m.dim} does not match ellipticity dimension {ell.n}")
    spec = eigenvalues_sym(m)
    cut = ZERO_EIG_REL_TOL * max(1.0, m.frobenius())
    pos = sum(e for e in spec.eigenvalues if e > cut)
    neg = sum(e for e in spec.eigenvalues if e < -cut)
    if sign is OperatorSign.PLUS:
        return ell.Lam * pos + ell.lam * neg
    return ell.lam * pos + ell.Lam * neg


def outer(xi) -> SymMatrix:
    """Rank-one matrix xi xi^T; spectrum is {|xi|^2, 0 x (dim-1)}."""
    xi = np.asarray(xi, dtype=float).ravel()
    if xi.size < 1:
        raise InvalidInputError("outer product needs a vector of length >= 1")
    return SymMatrix.from_full(np.outer(xi, xi))


def weight_1d(x: float, ell: Ellipticity, sign: OperatorSign) -> float:
    """One-eigenvalue weighting: Lam*x^+ + lam*x^- for PLUS, swapped for MINUS."""
    if sign is OperatorSign.PLUS:
        return ell.Lam * x if x >= 0.0 else ell.lam * x
    return ell.lam * x if x >= 0.0 else ell.Lam * x


def invert_pucci_1d(target: float, ell: Ellipticity, sign: OperatorSign) -> float:
    """Inverse of weight_1d; the weighting is a bijection of the reals."""
    if sign is OperatorSign.PLUS:
        return target / ell.Lam if target >= 0.0 else target / ell.lam
    return target / ell.lam if target >= 0.0 else target / ell.Lam


def pucci_radial_eval(up: float, upp: float, r: float, ell: Ellipticity, sign: OperatorSign) -> float:
    """Operator value on the Hessian of a radial function.

    For radial u the Hessian spectrum is {u''(r), u'(r)/r with multiplicity
    n-1}, so the operator reduces to a two-term weighted sum.
    """
    if r <= 0.0:
        raise InvalidInputError(f"radius must be positive, got {r}")
    return weight_1d(upp, ell, sign) + (ell.n - 1) * weight_1d(up / r, ell, sign)
