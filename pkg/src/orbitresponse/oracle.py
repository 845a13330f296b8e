"""Fourier-Galerkin transfer operators, used only to cross-check the periodic-orbit pipeline.

The operator ``(L_{u,t} φ)(x) = Σ_{f_t(y)=x} e^{-u g(y)} φ(y) / f_t'(y)`` has
Fourier matrix

    L[m', m] = ∫_0^1 e^{2πi m y} e^{-u g(y)} e^{-2πi m' F_t(y)} dy

(the change of variables absorbs the branch sum and the ``1/f'`` weight),
evaluated here by the trapezoid rule, which is spectrally accurate for
periodic analytic integrands.  Nothing in this module touches periodic
points.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .model import CircleMapFamily, TrigPoly

DEFAULT_M = 64
DEFAULT_K = 4096
POWER_MAX_ITER = 10_000
POWER_TOL = 1e-15


class UnderresolvedError(ValueError):
    pass


class SpectralGapError(RuntimeError):
    pass


@dataclass(frozen=True)
class GalerkinOperator:
    M: int
    matrix: np.ndarray = field(repr=False)
    u: float
    t: float
    g: TrigPoly = field(repr=False)

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    def entry(self, m_out: int, m_in: int) -> complex:
        return self.matrix[m_out + self.M, m_in + self.M]


def assemble(fam: CircleMapFamily, g: TrigPoly, u: float = 0.0, t: float = 0.0,
             M: int = DEFAULT_M, K: int = DEFAULT_K) -> GalerkinOperator:
    fam.check_t(t)
    if K < 8 * M:
        raise UnderresolvedError(f"quadrature underresolved: K = {K} < 8M = {8 * M}")
    y = np.arange(K) / K
    modes = np.arange(-M, M + 1)
    weight = np.exp(-u * g(y)) if u else np.ones(K)
    F = fam.lift(y, t)
    # reduce phases mod 1 before exponentiating so large m'F keep full accuracy
    out_phase = np.mod(np.outer(modes, F), 1.0)
    in_phase = np.mod(np.outer(modes, y), 1.0)
    E_out = np.exp(-2j * np.pi * out_phase) * weight
    E_in = np.exp(2j * np.pi * in_phase)
    return GalerkinOperator(M, (E_out @ E_in.T) / K, u, t, g)


def fourier_vector(p: TrigPoly, M: int) -> np.ndarray:
    v = np.zeros(2 * M + 1, dtype=complex)
    for m, c in p.fourier().items():
        if abs(m) <= M:
            v[m + M] = c
    return v


def pair(p: TrigPoly, phi: np.ndarray, M: int) -> complex:
    """``∫ p φ dx`` for ``φ`` given by Fourier coefficients on ``|m| <= M``."""
    pc = fourier_vector(p, M)
    # ∫ p φ = Σ_m p̂(-m) φ̂(m)
    return complex(np.dot(pc[::-1], phi))


@dataclass(frozen=True)
class Density:
    eigenvalue: float
    mean_g: float
    coeffs: np.ndarray = field(repr=False)
    iterations: int = 0


def invariant_density(op: GalerkinOperator) -> Density:
    """Leading eigenpair by power iteration, normalised to unit integral.

    Falls back to a dense eigensolver when power iteration stalls.
    """
    M = op.M
    L = op.matrix
    v = np.zeros(2 * M + 1, dtype=complex)
    v[M] = 1.0
    for it in range(1, POWER_MAX_ITER + 1):
        w = L @ v
        lam = w[M] / v[M]
        w = w / w[M]
        # at u = 0 the eigenvalue estimate is exact from the start; converge on the vector
        delta = np.max(np.abs(w - v))
        v = w
        if delta <= POWER_TOL:
            break
    else:
        vals, vecs = scipy.linalg.eig(L)
        order = np.argsort(-np.abs(vals))
        if len(vals) > 1 and abs(vals[order[1]]) >= abs(vals[order[0]]) * (1 - 1e-8):
            raise SpectralGapError("no spectral gap at this resolution")
        lam = vals[order[0]]
        v = vecs[:, order[0]] / vecs[M, order[0]]
    # one more application polishes the eigenvector to the converged eigenvalue
    v = (L @ v) / lam
    v = v / v[M]
    mean = pair(op.g, v, M)
    return Density(float(lam.real), float(mean.real), v, it)


def eigenvalues(op: GalerkinOperator) -> np.ndarray:
    vals = scipy.linalg.eigvals(op.matrix)
    return vals[np.argsort(-np.abs(vals), kind="stable")]


def matrix_trace_power(op: GalerkinOperator, n: int) -> float:
    return float(np.trace(np.linalg.matrix_power(op.matrix, n)).real)


def determinant_product(op: GalerkinOperator, z: float, vals: np.ndarray | None = None) -> float:
    """``∏ (1 - z λ_i)`` over the Galerkin eigenvalues."""
    vals = eigenvalues(op) if vals is None else vals
    return float(np.prod(1 - z * vals).real)


def _multiply(p: TrigPoly, phi: np.ndarray, M: int) -> np.ndarray:
    """Fourier coefficients of ``p φ`` truncated to ``|m| <= M``."""
    out = np.zeros_like(phi)
    for m, c in p.fourier().items():
        if c == 0:
            continue
        if m >= 0:
            out[m:] += c * phi[: len(phi) - m]
        else:
            out[:m] += c * phi[-m:]
    return out


def susceptibility_response(fam: CircleMapFamily, g: TrigPoly, M: int = DEFAULT_M,
                            N_terms: int = 200, K: int = DEFAULT_K, tol: float = 1e-13) -> float:
    """Response as ``Σ_{n>=0} <g, L^n s>`` with source ``s = -(L[X ρ])'``.

    For the family ``F_t = F_0 + t X`` one has ``∫ψ ∂_t L_t φ = ∫ ψ'(F_0) X φ``,
    i.e. ``∂_t L φ = -(L[X φ])'``.  The series is summed until a term drops
    below ``tol``.
    """
    if fam.direction.is_zero:
        return 0.0
    op = assemble(fam, g, 0.0, 0.0, M, K)
    rho = invariant_density(op).coeffs
    modes = op.modes
    source = -(2j * np.pi * modes) * (op.matrix @ _multiply(fam.direction, rho, M))
    total = 0.0
    phi = source
    for _ in range(N_terms + 1):
        term = pair(g, phi, M).real
        total += term
        if abs(term) < tol:
            break
        phi = op.matrix @ phi
    return float(total)


def mean_at(fam: CircleMapFamily, g: TrigPoly, t: float, M: int = DEFAULT_M, K: int = DEFAULT_K) -> float:
    return invariant_density(assemble(fam, g, 0.0, t, M, K)).mean_g


def finite_difference_response(fam: CircleMapFamily, g: TrigPoly, M: int = DEFAULT_M,
                               h: float = 1e-3, K: int = DEFAULT_K) -> float:
    """Richardson-extrapolated central difference of the Galerkin mean over ``t ∈ {±h, ±2h}``."""
    if h > fam.t_max / 4:
        raise ValueError(f"h = {h} exceeds t_max/4 = {fam.t_max / 4}")
    m = {s: mean_at(fam, g, s * h, M, K) for s in (-2, -1, 1, 2)}
    return (8 * (m[1] - m[-1]) - (m[2] - m[-2])) / (12 * h)
