"""Perturbed hyperbolic toral automorphisms ``f_t(x) = A x + t P(x) mod Z^2``.

Fixed points of ``A^n`` are enumerated exactly from a Smith normal form of
``A^n - I`` and then followed to ``t != 0`` by predictor-corrector Newton;
structural stability keeps their number fixed.  The traces

    b_n(u, t) = Σ_{Fix f_t^n} exp(-u g_{t,n}(x)) / |det(D f_t^n(x) - I)|

feed the same determinant recursions as the circle case.  The weight is
``e^{-u g}`` as on the circle; the torus series is often written with
``e^{+v g}``, which is the same thing with ``u = -v``, so the circle response
formulas apply unchanged.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .determinant import DetCoeffs, coefficients
from .numerics import wrap
from .response import ResponseReport, mean_observable, report_from_coefficients
from .traces import TraceSet

EPS_GUARD = 1e-9
NEWTON_MAX_ITER = 50
DISTINCT_TOL = 1e-8
MAX_HALVINGS = 10


class HyperbolicityLost(RuntimeError):
    pass


@dataclass(frozen=True)
class TrigPoly2:
    """Real trigonometric polynomial on R^2/Z^2.

    ``terms`` holds rows ``(k1, k2, a, b)`` meaning ``a cos 2π(k·x) + b sin 2π(k·x)``.
    """

    constant: float = 0.0
    terms: tuple[tuple[int, int, float, float], ...] = ()

    def __post_init__(self):
        rows = []
        for row in self.terms:
            k1, k2, a, b = row
            if int(k1) != k1 or int(k2) != k2:
                raise ValueError(f"wave vector must be integer, got ({k1}, {k2})")
            rows.append((int(k1), int(k2), float(a), float(b)))
        object.__setattr__(self, "terms", tuple(rows))
        object.__setattr__(self, "constant", float(self.constant))

    @property
    def is_zero(self) -> bool:
        return self.constant == 0.0 and all(a == 0 and b == 0 for _, _, a, b in self.terms)

    def as_array(self) -> np.ndarray:
        return np.array(self.terms, dtype=float).reshape(-1, 4)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape[:-1], self.constant)
        for k1, k2, a, b in self.terms:
            arg = 2 * np.pi * (k1 * x[..., 0] + k2 * x[..., 1])
            out = out + a * np.cos(arg) + b * np.sin(arg)
        return out

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for k1, k2, a, b in self.terms:
            arg = 2 * np.pi * (k1 * x[..., 0] + k2 * x[..., 1])
            d = 2 * np.pi * (b * np.cos(arg) - a * np.sin(arg))
            out[..., 0] += k1 * d
            out[..., 1] += k2 * d
        return out


def _int_matrix(A) -> np.ndarray:
    A = np.asarray(A)
    if A.shape != (2, 2) or not np.all(np.asarray(A, dtype=float) == np.round(np.asarray(A, dtype=float))):
        raise ValueError("A must be a 2x2 integer matrix")
    return np.array([[int(A[0, 0]), int(A[0, 1])], [int(A[1, 0]), int(A[1, 1])]], dtype=object)


@dataclass(frozen=True)
class TorusMapFamily:
    A: np.ndarray
    P: tuple[TrigPoly2, TrigPoly2] = field(default_factory=lambda: (TrigPoly2(), TrigPoly2()))
    t_max: float = 0.05

    def __post_init__(self):
        A = _int_matrix(self.A)
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        tr = A[0, 0] + A[1, 1]
        if abs(det) != 1 or abs(tr) <= 2:
            raise ValueError(f"A must satisfy |det A| = 1 and |tr A| > 2 (got det {det}, tr {tr})")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "P", tuple(self.P))
        if len(self.P) != 2:
            raise ValueError("P must be a pair of TrigPoly2")

    @property
    def A_float(self) -> np.ndarray:
        return np.array(self.A, dtype=float)

    @property
    def unperturbed(self) -> bool:
        return self.P[0].is_zero and self.P[1].is_zero

    def check_t(self, t: float) -> None:
        if abs(t) > self.t_max:
            raise ValueError(f"|t| = {abs(t)} exceeds t_max = {self.t_max}")

    def lift(self, x: np.ndarray, t: float) -> np.ndarray:
        y = x @ self.A_float.T
        if t:
            y = y + t * np.stack([self.P[0](x), self.P[1](x)], axis=-1)
        return y

    def jacobian(self, x: np.ndarray, t: float) -> np.ndarray:
        J = np.broadcast_to(self.A_float, x.shape[:-1] + (2, 2)).copy()
        if t:
            J[..., 0, :] += t * self.P[0].gradient(x)
            J[..., 1, :] += t * self.P[1].gradient(x)
        return J

    def perturbation(self, x: np.ndarray) -> np.ndarray:
        return np.stack([self.P[0](x), self.P[1](x)], axis=-1)


@dataclass(frozen=True)
class TorusFixedPointSet:
    """Fixed points of ``f_t^n`` with orbits and return-map Jacobians."""

    n: int
    t: float
    x: np.ndarray
    orbit: np.ndarray
    jacobian: np.ndarray
    det_shift: np.ndarray

    def __len__(self) -> int:
        return len(self.x)

    def gsum(self, g: TrigPoly2) -> np.ndarray:
        return g(self.orbit).sum(axis=1)


def _matpow(A, n):
    out = np.array([[1, 0], [0, 1]], dtype=object)
    for _ in range(n):
        out = out.dot(A)
    return out


def smith_normal_form(B) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Smith normal form of a nonsingular 2x2 integer matrix.

    Returns ``(D, U, V)`` with ``U B V = D`` diagonal, ``U``, ``V`` unimodular
    and ``D[0,0] | D[1,1]``, both positive.
    """
    S = np.array(B, dtype=object)
    U = np.array([[1, 0], [0, 1]], dtype=object)
    V = np.array([[1, 0], [0, 1]], dtype=object)
    if S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0] == 0:
        raise ValueError("matrix is singular")

    def swap_rows():
        S[[0, 1]] = S[[1, 0]]
        U[[0, 1]] = U[[1, 0]]

    def swap_cols():
        S[:, [0, 1]] = S[:, [1, 0]]
        V[:, [0, 1]] = V[:, [1, 0]]

    while True:
        # move the smallest nonzero entry to the pivot
        entries = [(abs(S[i, j]), i, j) for i in range(2) for j in range(2) if S[i, j] != 0]
        _, i, j = min(entries)
        if i:
            swap_rows()
        if j:
            swap_cols()
        p = S[0, 0]
        q = S[1, 0] // p
        S[1] -= q * S[0]
        U[1] -= q * U[0]
        q = S[0, 1] // p
        S[:, 1] -= q * S[:, 0]
        V[:, 1] -= q * V[:, 0]
        if S[1, 0] != 0 or S[0, 1] != 0:
            continue
        if S[1, 1] % S[0, 0] != 0:
            # fold the second diagonal entry into the first row and repeat
            S[0] += S[1]
            U[0] += U[1]
            continue
        break
    for k in range(2):
        if S[k, k] < 0:
            S[k] = -S[k]
            U[k] = -U[k]
    return S, U, V


def _inverse_unimodular(U):
    det = U[0, 0] * U[1, 1] - U[0, 1] * U[1, 0]
    return np.array([[U[1, 1], -U[0, 1]], [-U[1, 0], U[0, 0]]], dtype=object) * det


def lattice_fixed_points(fam: TorusMapFamily | np.ndarray, n: int) -> TorusFixedPointSet:
    """Exact fixed points of ``A^n`` on the torus (``t = 0``).

    Coset representatives ``m`` of ``Z^2 / (A^n - I) Z^2`` come from the Smith
    form; each gives ``x = (A^n - I)^{-1} m mod 1``.  Coordinates and orbits
    are computed as integer numerators over ``|det(A^n - I)|``.
    """
    A = fam.A if isinstance(fam, TorusMapFamily) else _int_matrix(fam)
    if n < 1:
        raise ValueError("n must be >= 1")
    An = _matpow(A, n)
    if max(abs(int(v)) for v in An.ravel()) > 2**52:
        raise OverflowError(f"A^{n} entries exceed exact binary64 range")
    B = An - np.array([[1, 0], [0, 1]], dtype=object)
    det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    N = abs(det)
    D, U, _ = smith_normal_form(B)
    Uinv = _inverse_unimodular(U)
    adj = np.array([[B[1, 1], -B[0, 1]], [-B[1, 0], B[0, 0]]], dtype=object)
    sign = 1 if det > 0 else -1
    d1, d2 = int(D[0, 0]), int(D[1, 1])
    reps = [Uinv.dot(np.array([i, j], dtype=object)) for i in range(d1) for j in range(d2)]
    # x = adj(B) m / det  (mod 1), kept as numerators r with x = r / N
    nums = np.array([(sign * adj.dot(m)) % N for m in reps], dtype=object).reshape(-1, 2)
    orbit_nums = np.empty((len(nums), n, 2), dtype=object)
    cur = nums
    for j in range(n):
        orbit_nums[:, j] = cur
        cur = (cur.dot(A.T)) % N
    if not np.all(cur == nums):
        raise ArithmeticError("lattice points are not fixed by A^n")
    x = (nums.astype(np.int64) / N).astype(float)
    orbit = orbit_nums.astype(np.int64) / N
    order = np.lexsort((x[:, 1], x[:, 0]))
    J = np.broadcast_to(np.array(An, dtype=float), (len(x), 2, 2)).copy()
    det_shift = np.full(len(x), float(det))
    return TorusFixedPointSet(n, 0.0, x[order], orbit[order], J, det_shift)


def _orbit_and_derivatives(fam: TorusMapFamily, x: np.ndarray, n: int, t: float):
    """Iterate ``n`` steps (mod 1); return final point, orbit, ``Df^n`` and ``∂_t F^n``."""
    npts = len(x)
    orbit = np.empty((npts, n, 2))
    J = np.broadcast_to(np.eye(2), (npts, 2, 2)).copy()
    Y = np.zeros((npts, 2))
    y = x
    for k in range(n):
        orbit[:, k] = y
        Dk = fam.jacobian(y, t)
        Y = fam.perturbation(y) + np.einsum("pij,pj->pi", Dk, Y)
        J = np.einsum("pij,pjk->pik", Dk, J)
        y = fam.lift(y, t)
        y = y - np.floor(y)
    return y, orbit, J, Y


def _check_hyperbolic(J: np.ndarray, t: float) -> np.ndarray:
    det_shift = (J[:, 0, 0] - 1) * (J[:, 1, 1] - 1) - J[:, 0, 1] * J[:, 1, 0]
    tr = J[:, 0, 0] + J[:, 1, 1]
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    disc = tr**2 - 4 * det
    ok = disc > 0
    root = np.sqrt(np.where(ok, disc, 0.0))
    lam_small = np.minimum(np.abs((tr - root) / 2), np.abs((tr + root) / 2))
    lam_big = np.maximum(np.abs((tr - root) / 2), np.abs((tr + root) / 2))
    ok &= (lam_small < 1) & (lam_big > 1) & (np.abs(det_shift) > EPS_GUARD)
    if not ok.all():
        raise HyperbolicityLost(f"hyperbolicity margin lost at t = {t:g}")
    return det_shift


def _newton_torus(fam: TorusMapFamily, x: np.ndarray, n: int, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Newton on the wrapped residual; returns corrected points and a per-point success mask.

    A point fails when it does not converge or when the total correction
    leaves a trust radius of ``0.25 / sqrt|det(Df^n - I)|``, which is below the
    spacing of neighbouring fixed points and so rules out silent jumps.
    """
    x0 = x.copy()
    x = x.copy()
    ok = np.zeros(len(x), dtype=bool)
    for _ in range(NEWTON_MAX_ITER):
        y, _, J, _ = _orbit_and_derivatives(fam, x, n, t)
        r = wrap(y - x)
        M = J - np.eye(2)
        dets = np.linalg.det(M)
        singular = np.abs(dets) <= EPS_GUARD
        M[singular] = np.eye(2)
        step = np.linalg.solve(M, r[..., None])[..., 0]
        step[singular] = 0.0
        x = x - step
        x = x - np.floor(x)
        size = np.max(np.abs(step), axis=1)
        ok = ~singular & ((size <= 1e-15) | (np.max(np.abs(r), axis=1) <= 1e-15))
        if ok.all():
            break
    y, _, J, _ = _orbit_and_derivatives(fam, x, n, t)
    resid = np.max(np.abs(wrap(y - x)), axis=1)
    trust = 0.25 / np.sqrt(np.maximum(np.abs(np.linalg.det(J - np.eye(2))), 1.0))
    moved = np.max(np.abs(wrap(x - x0)), axis=1)
    return x, (resid <= 1e-10) & (moved <= trust)


def _advance(fam: TorusMapFamily, x: np.ndarray, n: int, t0: float, t1: float, depth: int) -> np.ndarray:
    """Predictor-corrector step ``t0 -> t1``; failing points are retried on halved increments."""
    _, _, J, Y = _orbit_and_derivatives(fam, x, n, t0)
    dc = np.linalg.solve(np.eye(2) - J, Y[..., None])[..., 0]
    guess = x + (t1 - t0) * dc
    new, ok = _newton_torus(fam, guess - np.floor(guess), n, t1)
    if not ok.all():
        if depth >= MAX_HALVINGS:
            raise HyperbolicityLost(
                f"hyperbolicity margin lost at t = {t1:g}: Newton failed for {int((~ok).sum())} points"
            )
        tm = 0.5 * (t0 + t1)
        mid = _advance(fam, x[~ok], n, t0, tm, depth + 1)
        new[~ok] = _advance(fam, mid, n, tm, t1, depth + 1)
    return new


def _check_distinct(x: np.ndarray, t: float) -> None:
    if len(x) < 2:
        return
    tree = cKDTree(np.mod(x, 1.0), boxsize=1.0)
    if tree.query_pairs(DISTINCT_TOL):
        raise HyperbolicityLost(f"hyperbolicity margin lost at t = {t:g}: periodic points collided")


def continue_orbits(fam: TorusMapFamily, fps0: TorusFixedPointSet, t_target: float,
                    steps: int = 4) -> TorusFixedPointSet:
    """Follow every fixed point of ``f_{t0}^n`` to ``t_target``.

    Each increment predicts with ``dc/dt = (I - Df^n)^{-1} ∂_t F^n`` and
    corrects by Newton on ``f_t^n(x) - x ≡ 0 mod Z^2``.  Increments on which
    a point fails are halved, up to ``MAX_HALVINGS`` times.
    """
    fam.check_t(t_target)
    n = fps0.n
    x = fps0.x.copy()
    ts = np.linspace(fps0.t, t_target, steps + 1)
    if not fam.unperturbed:
        for t0, t1 in zip(ts[:-1], ts[1:]):
            x = _advance(fam, x, n, float(t0), float(t1), 0)
    _, orbit, J, _ = _orbit_and_derivatives(fam, x, n, t_target)
    det_shift = _check_hyperbolic(J, t_target)
    _check_distinct(x, t_target)
    return TorusFixedPointSet(n, float(t_target), x, orbit, J, det_shift)


def trace_b_anosov(fps: TorusFixedPointSet, g: TrigPoly2, v: float = 0.0) -> float:
    """``Σ exp(v g_n(x)) / |det(D f^n(x) - I)|`` with the ``e^{+v g}`` weight."""
    den = np.abs(fps.det_shift)
    if len(den) and den.min() <= EPS_GUARD:
        raise HyperbolicityLost(f"|det(Df^n - I)| within {EPS_GUARD:g} of 0")
    if v == 0:
        return math.fsum(1 / den)
    return math.fsum(np.exp(v * fps.gsum(g)) / den)


def _traces_at(fps: TorusFixedPointSet, g: TrigPoly2) -> tuple[float, float]:
    """``b_n`` and ``∂_u b_n`` at ``u = 0`` in the ``e^{-u g}`` convention."""
    den = np.abs(fps.det_shift)
    return math.fsum(1 / den), -math.fsum(fps.gsum(g) / den)


def _richardson(f: dict, h: float) -> float:
    return (8 * (f[1] - f[-1]) - (f[2] - f[-2])) / (12 * h)


def anosov_traces(fam: TorusMapFamily, g: TrigPoly2, n_max: int, h: float = 1e-3,
                  steps: int = 4) -> TraceSet:
    """Traces at the origin; t-derivatives by Richardson differences over continued orbits."""
    if abs(2 * h) > fam.t_max:
        raise ValueError(f"2h = {2 * h} exceeds t_max = {fam.t_max}")
    cols = {"b": [0.0], "bu": [0.0], "bt": [0.0], "but": [0.0]}
    for n in range(1, n_max + 1):
        fps0 = lattice_fixed_points(fam, n)
        b0, bu0 = _traces_at(fps0, g)
        if fam.unperturbed:
            bt = but = 0.0
        else:
            vals = {s: _traces_at(continue_orbits(fam, fps0, s * h, steps), g) for s in (-2, -1, 1, 2)}
            bt = _richardson({s: v[0] for s, v in vals.items()}, h)
            but = _richardson({s: v[1] for s, v in vals.items()}, h)
        cols["b"].append(b0)
        cols["bu"].append(bu0)
        cols["bt"].append(bt)
        cols["but"].append(but)
    return TraceSet(*(np.array(cols[k]) for k in ("b", "bu", "bt", "but")))


def anosov_coefficients(fam: TorusMapFamily, g: TrigPoly2, n_max: int, h: float = 1e-3,
                        steps: int = 4) -> DetCoeffs:
    return coefficients(anosov_traces(fam, g, n_max, h, steps))


def anosov_response(fam: TorusMapFamily, g: TrigPoly2, n_max: int = 8, h: float = 1e-3,
                    steps: int = 4) -> tuple[ResponseReport, TraceSet]:
    traces = anosov_traces(fam, g, n_max, h, steps)
    return report_from_coefficients(coefficients(traces)), traces


def coefficients_at(fam: TorusMapFamily, g: TrigPoly2, n_max: int, t: float, steps: int = 4) -> DetCoeffs:
    """Coefficients of ``z ↦ d(z, 0, t)`` and of its u-derivative, from orbits continued to ``t``.

    The t-derivative columns are left at zero.
    """
    b, bu = [0.0], [0.0]
    for n in range(1, n_max + 1):
        fps = continue_orbits(fam, lattice_fixed_points(fam, n), t, steps)
        bn, bun = _traces_at(fps, g)
        b.append(bn)
        bu.append(bun)
    zeros = np.zeros(n_max + 1)
    return coefficients(TraceSet(np.array(b), np.array(bu), zeros, zeros.copy()))


def anosov_mean(fam: TorusMapFamily, g: TrigPoly2, n_max: int, t: float, steps: int = 4) -> float:
    """``∫ g dμ_t`` for the physical measure, from determinant coefficients built at ``t``."""
    return float(mean_observable(coefficients_at(fam, g, n_max, t, steps)))


@dataclass(frozen=True)
class BirkhoffResult:
    mean: float
    stderr: float
    n_iter: int
    n_chains: int
    backend: str


def birkhoff_oracle(fam: TorusMapFamily, g: TrigPoly2, t: float, n_iter: int = 10**8,
                    burn_in: int = 1000, seed: int = 0, n_chains: int = 64,
                    threads: int = 1) -> BirkhoffResult:
    """Time average of ``g`` over ``n_chains`` independent orbits totalling ``n_iter`` iterates.

    The standard error comes from the spread of the per-chain means (batch
    means with one batch per chain).  Chains are split across ``threads``
    workers; every chain is computed identically whatever the split.
    """
    fam.check_t(t)
    if n_chains < 2:
        raise ValueError("need at least two chains for an error estimate")
    steps = -(-n_iter // n_chains)
    rng = np.random.default_rng(seed)
    x0 = np.ascontiguousarray(rng.random((n_chains, 2)))
    A = np.ascontiguousarray(fam.A_float)
    args = (
        A,
        np.ascontiguousarray(fam.P[0].as_array()), fam.P[0].constant,
        np.ascontiguousarray(fam.P[1].as_array()), fam.P[1].constant,
        np.ascontiguousarray(g.as_array()), g.constant,
        float(t),
    )

    def run(block):
        return kernels.birkhoff_chains(*args, np.ascontiguousarray(x0[block]), steps, burn_in)

    blocks = np.array_split(np.arange(n_chains), max(1, min(threads, n_chains)))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sums = list(pool.map(run, blocks))
    else:
        sums = [run(b) for b in blocks]
    chain_means = np.concatenate(sums) / steps
    mean = math.fsum(chain_means) / n_chains
    stderr = float(np.std(chain_means, ddof=1) / math.sqrt(n_chains))
    return BirkhoffResult(mean, stderr, steps * n_chains, n_chains, kernels.BACKEND)


def cat_map(P: Sequence[TrigPoly2] | None = None, t_max: float = 0.05) -> TorusMapFamily:
    return TorusMapFamily(np.array([[2, 1], [1, 1]]), tuple(P) if P else (TrigPoly2(), TrigPoly2()), t_max)
