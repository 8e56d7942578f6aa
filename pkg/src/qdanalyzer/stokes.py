"""Stokes representations of two-component fields and 2x2 Hermitian matrices.

All functions broadcast over numpy arrays, so the dataclasses below may hold
either Python floats or equally-shaped arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RESIDUAL_TOL = 1e-10


class DegenerateMatrixError(ValueError):
    """Raised for a = d, h = 0: the matrix Stokes direction is undefined."""


@dataclass(frozen=True)
class SpinorParams:
    amplitude_x: float
    amplitude_y: float
    beta: float
    alpha_x: float
    delta: float

    def components(self):
        """Return (psi_x, psi_y) as complex values."""
        psi_x = self.amplitude_x * np.cos(self.beta) * np.exp(1j * self.alpha_x)
        psi_y = self.amplitude_y * np.sin(self.beta) * np.exp(1j * (self.alpha_x + self.delta))
        return psi_x, psi_y


@dataclass(frozen=True)
class StokesField:
    s0: float
    s1: float
    s2: float
    s3: float

    def vector(self) -> np.ndarray:
        return np.stack(np.broadcast_arrays(self.s1, self.s2, self.s3), axis=-1)


@dataclass(frozen=True)
class HermitianParams:
    a: float
    d: float
    h: float
    phi: float

    def matrix(self) -> np.ndarray:
        """Explicit matrix; shape (..., 2, 2)."""
        a, d, h, phi = np.broadcast_arrays(
            *(np.asarray(x, dtype=float) for x in (self.a, self.d, self.h, self.phi))
        )
        m = np.empty(a.shape + (2, 2), dtype=complex)
        m[..., 0, 0] = a
        m[..., 1, 1] = d
        m[..., 0, 1] = h * np.exp(-1j * phi)
        m[..., 1, 0] = h * np.exp(1j * phi)
        return m


@dataclass(frozen=True)
class MatrixStokes:
    p0: float
    p1: float
    p2: float
    p3: float
    two_alpha: float
    phi: float

    def vector(self) -> np.ndarray:
        return np.stack(np.broadcast_arrays(self.p1, self.p2, self.p3), axis=-1)


@dataclass(frozen=True)
class EigenPair:
    lambda_plus: float
    lambda_minus: float


def stokes_from_spinor(params: SpinorParams, normalize: bool = True) -> StokesField:
    """Stokes set of a spinor.

    With ``normalize`` (the default) s0 is 1; otherwise s0 = psi^dagger psi.
    """
    if normalize:
        s0 = np.ones_like(np.asarray(params.beta, dtype=float))
    else:
        s0 = (params.amplitude_x * np.cos(params.beta)) ** 2 + (
            params.amplitude_y * np.sin(params.beta)
        ) ** 2
    two_beta = 2.0 * np.asarray(params.beta, dtype=float)
    s1 = s0 * np.cos(two_beta)
    s2 = s0 * np.sin(two_beta) * np.cos(params.delta)
    s3 = s0 * np.sin(two_beta) * np.sin(params.delta)
    if np.ndim(s0) == 0:
        return StokesField(float(s0), float(s1), float(s2), float(s3))
    return StokesField(s0, s1, s2, s3)


def spinor_from_stokes(field: StokesField) -> SpinorParams:
    """Inverse of :func:`stokes_from_spinor` for unit amplitudes.

    The representative returned has 2*beta in [0, pi] and delta in [0, 2*pi);
    (2*beta, delta) and (-2*beta, delta + pi) describe the same state.
    """
    transverse = np.hypot(field.s2, field.s3)
    two_beta = np.arctan2(transverse, field.s1)
    delta = np.mod(np.arctan2(field.s3, field.s2), 2.0 * np.pi)
    return SpinorParams(1.0, 1.0, two_beta / 2.0, 0.0, delta)


def spinor_from_vector(psi_x, psi_y) -> SpinorParams:
    """Spinor parameters of an explicit (psi_x, psi_y) pair with unit amplitudes."""
    psi_x = np.asarray(psi_x)
    psi_y = np.asarray(psi_y)
    beta = np.arctan2(np.abs(psi_y), np.abs(psi_x))
    alpha_x = np.angle(psi_x)
    delta = np.angle(psi_y) - alpha_x
    return SpinorParams(1.0, 1.0, beta, alpha_x, delta)


def matrix_stokes(params: HermitianParams) -> tuple[MatrixStokes, EigenPair]:
    a, d, h, phi = (np.asarray(x, dtype=float) for x in (params.a, params.d, params.h, params.phi))
    if np.any((a == d) & (h == 0)):
        raise DegenerateMatrixError("a == d and h == 0: matrix Stokes direction undefined")
    if np.any(h < 0):
        raise ValueError("h must be non-negative")
    p0 = np.sqrt((a - d) ** 2 + 4.0 * h**2)
    two_alpha = np.arctan2(2.0 * h, a - d)
    p1 = p0 * np.cos(two_alpha)
    p2 = p0 * np.sin(two_alpha) * np.cos(phi)
    p3 = p0 * np.sin(two_alpha) * np.sin(phi)
    lam_plus = (a + d + p0) / 2.0
    lam_minus = (a + d - p0) / 2.0
    if p0.ndim == 0:
        return (
            MatrixStokes(float(p0), float(p1), float(p2), float(p3), float(two_alpha), float(phi)),
            EigenPair(float(lam_plus), float(lam_minus)),
        )
    return MatrixStokes(p0, p1, p2, p3, two_alpha, phi), EigenPair(lam_plus, lam_minus)


def hermitian_from_stokes(matrix: MatrixStokes, trace: float) -> HermitianParams:
    """Rebuild (a, d, h, phi) from the matrix Stokes set and the trace a + d."""
    diff = matrix.p0 * np.cos(matrix.two_alpha)
    h = matrix.p0 * np.sin(matrix.two_alpha) / 2.0
    return HermitianParams((trace + diff) / 2.0, (trace - diff) / 2.0, h, matrix.phi)


def eigencondition_residuals(field: StokesField, matrix: MatrixStokes, branch: int = 1):
    """Residuals of the three eigenstate relations on the given branch (+1 or -1).

    Returns ``(|P.S - b P0 S0|, |S3 P2 - S2 P3|, |S1 P1 - b P1^2 S0 / P0|)``.
    All three vanish iff ``field`` is an eigenstate of ``matrix`` on ``branch``.
    """
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    if np.any(np.asarray(matrix.p0) == 0):
        raise DegenerateMatrixError("p0 == 0")
    dot = field.s1 * matrix.p1 + field.s2 * matrix.p2 + field.s3 * matrix.p3
    r1 = np.abs(dot - branch * matrix.p0 * field.s0)
    r2 = np.abs(field.s3 * matrix.p2 - field.s2 * matrix.p3)
    r3 = np.abs(field.s1 * matrix.p1 - branch * matrix.p1**2 * field.s0 / matrix.p0)
    return r1, r2, r3


def random_hermitian(n: int, seed: int = 0) -> HermitianParams:
    """Random parameters: a, d in [-5, 5], h in [0, 5], phi in [0, 2 pi)."""
    rng = np.random.default_rng(seed)
    return HermitianParams(
        rng.uniform(-5.0, 5.0, n),
        rng.uniform(-5.0, 5.0, n),
        rng.uniform(0.0, 5.0, n),
        rng.uniform(0.0, 2.0 * np.pi, n),
    )


def eigencheck(n: int = 10_000, seed: int = 0) -> dict[str, float]:
    """Maximum residuals of the eigenstate relations over ``n`` random matrices.

    Eigenvectors come from ``numpy.linalg.eigh`` on the explicit matrices, which
    is independent of the Stokes formulas under test.
    """
    params = random_hermitian(n, seed)
    stokes, eig = matrix_stokes(params)
    values, vectors = np.linalg.eigh(params.matrix())
    fields, spinors = {}, {}
    for branch, col in ((1, 1), (-1, 0)):
        spinors[branch] = spinor_from_vector(vectors[:, 0, col], vectors[:, 1, col])
        fields[branch] = stokes_from_spinor(spinors[branch])
    out = {}
    for branch, name in ((1, "plus"), (-1, "minus")):
        r1, r2, r3 = eigencondition_residuals(fields[branch], stokes, branch)
        out[f"eq1_{name}"] = float(r1.max())
        out[f"eq2_{name}"] = float(r2.max())
        out[f"eq3_{name}"] = float(r3.max())
        out[f"sin_delta_phi_{name}"] = float(
            np.max(np.abs(np.sin(spinors[branch].delta - params.phi)))
        )
    out["splitting"] = float(np.max(np.abs((eig.lambda_plus - eig.lambda_minus) - stokes.p0)))
    out["eigh_plus"] = float(np.max(np.abs(values[:, 1] - eig.lambda_plus)))
    out["eigh_minus"] = float(np.max(np.abs(values[:, 0] - eig.lambda_minus)))
    rebuilt = hermitian_from_stokes(stokes, params.a + params.d)
    values2 = np.linalg.eigvalsh(rebuilt.matrix())
    out["rebuild"] = float(
        max(np.abs(values2[:, 1] - eig.lambda_plus).max(), np.abs(values2[:, 0] - eig.lambda_minus).max())
    )
    sp, sm = fields[1], fields[-1]
    antipodal = sp.s1 * sm.s1 + sp.s2 * sm.s2 + sp.s3 * sm.s3 + sp.s0 * sm.s0
    out["antipodal"] = float(np.max(np.abs(antipodal)))
    return out
