"""Periodic points of expanding circle maps and the derivative data along their orbits."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CircleMapFamily, TrigPoly
from .numerics import BINARY64, Scalar, wrap

NEWTON_TOL = 1e-14
NEWTON_MAX_ITER = 50
#: Largest fixed-point set we agree to materialise.
MAX_POINTS = 1 << 26


class OrbitError(RuntimeError):
    """Root isolation or polishing failed."""


@dataclass(frozen=True)
class OrbitPointData:
    """Derivative data along the orbit of one fixed point of ``f^n``."""

    x: float
    iterates: np.ndarray
    multiplier: float
    curvature: float
    xn: float
    xn_prime: float
    xn_at: np.ndarray
    multiplier_at: np.ndarray
    gsum: float


@dataclass(frozen=True)
class FixedPointSet:
    """All ``D^n - 1`` fixed points of ``f_t^n``, sorted by position.

    Arrays are indexed by point; ``iterates``, ``xn_at``, ``multiplier_at``
    and ``gprime_at`` have a second axis running along the orbit.
    """

    n: int
    t: float
    x: np.ndarray
    branch: np.ndarray
    iterates: np.ndarray
    multiplier: np.ndarray
    curvature: np.ndarray
    xn: np.ndarray
    xn_prime: np.ndarray
    xn_at: np.ndarray
    multiplier_at: np.ndarray
    gsum: np.ndarray
    gprime_at: np.ndarray
    scalar: Scalar = BINARY64

    def __len__(self) -> int:
        return len(self.x)

    def point(self, i: int) -> OrbitPointData:
        return OrbitPointData(
            x=self.x[i],
            iterates=self.iterates[i],
            multiplier=self.multiplier[i],
            curvature=self.curvature[i],
            xn=self.xn[i],
            xn_prime=self.xn_prime[i],
            xn_at=self.xn_at[i],
            multiplier_at=self.multiplier_at[i],
            gsum=self.gsum[i],
        )

    @property
    def points(self) -> list[OrbitPointData]:
        return [self.point(i) for i in range(len(self))]


def _count(fam: CircleMapFamily, n: int) -> int:
    if n < 1:
        raise ValueError(f"period must be >= 1, got {n}")
    count = fam.degree**n - 1
    if count > MAX_POINTS or count > np.iinfo(np.int64).max:
        raise OverflowError(f"D^n - 1 = {fam.degree}^{n} - 1 fixed points exceed the supported {MAX_POINTS}")
    return count


def _lift_power(fam: CircleMapFamily, x: np.ndarray, n: int, t: float) -> np.ndarray:
    y = x
    for _ in range(n):
        y = fam.lift(y, t)
    return y


def _newton(fam, x, n, t, scalar, tol, max_iter, lo=None, hi=None):
    """Newton on ``f_t^n(x) - x = 0 (mod 1)``, vectorised over points.

    The residual is accumulated with reduction mod 1 after every step, so its
    size reflects the distance to the root rather than the size of the lift.
    """
    x = x.copy()
    active = np.ones(len(x), dtype=bool)
    for _ in range(max_iter):
        y, lam = x, scalar.one()
        for _ in range(n):
            lam = lam * fam.dlift(y, t, 1, scalar)
            y = fam.step(y, t, scalar)
        r = wrap(y - x, scalar)
        step = r / (lam - 1)
        # the attainable residual grows like ulp * multiplier; a sub-ulp step also ends the iteration
        lam_f = np.asarray(lam, dtype=float)
        done = (np.abs(np.asarray(r, dtype=float)) <= tol * np.maximum(1.0, lam_f / 8)) | (
            np.abs(np.asarray(step, dtype=float)) <= 2.0 ** (1 - scalar.bits)
        )
        active &= ~done
        if not active.any():
            return x
        x = np.where(active, x - step, x)
        if lo is not None:
            x = np.where(active, np.clip(x, lo, hi), x)
    bad = np.flatnonzero(active)
    raise OrbitError(f"Newton did not converge in {max_iter} iterations for branch index {int(bad[0])}")


def _find_roots(fam: CircleMapFamily, n: int, t: float) -> tuple[np.ndarray, np.ndarray]:
    count = _count(fam, n)
    phi0 = float(_lift_power(fam, np.zeros(1), n, t)[0])
    k = math.ceil(phi0) + np.arange(count, dtype=float)
    lo = np.zeros(count)
    hi = np.ones(count)
    lam_max = fam.degree + fam.base.coefficient_bound() + abs(t) * fam.direction.coefficient_bound()
    width = 1e-3 / lam_max**n
    # x -> F^n(x) - x is strictly increasing, so each k has exactly one root in [0, 1)
    while hi[0] - lo[0] > width:
        mid = 0.5 * (lo + hi)
        below = _lift_power(fam, mid, n, t) - mid < k
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    x = _newton(fam, 0.5 * (lo + hi), n, t, BINARY64, NEWTON_TOL, NEWTON_MAX_ITER, lo, hi)
    return np.mod(x, 1.0), k


def _orbit_data(fam: CircleMapFamily, g: TrigPoly, x, n: int, t: float, scalar: Scalar):
    """Forward recursions along the orbit, vectorised over starting points."""
    one, zero = scalar.one(), scalar.zero()
    npts = len(x)
    iterates = np.empty((npts, n), dtype=x.dtype)
    lam = np.full(npts, one, dtype=x.dtype)
    curv = np.full(npts, zero, dtype=x.dtype)
    xn = np.full(npts, zero, dtype=x.dtype)
    xnp = np.full(npts, zero, dtype=x.dtype)
    y = x
    for k in range(n):
        iterates[:, k] = y
        d1 = fam.dlift(y, t, 1, scalar)
        d2 = fam.dlift(y, t, 2, scalar)
        X = fam.direction(y, scalar)
        dX = fam.direction.deriv(y, 1, scalar)
        # order matters: each update reads the previous-step values
        xnp = dX * lam + d2 * lam * xn + d1 * xnp
        xn = X + d1 * xn
        curv = d2 * lam**2 + d1 * curv
        lam = d1 * lam
        y = fam.step(y, t, scalar)

    # per-step data on the stored iterates, then cyclic re-runs from each x_k
    d1_at = fam.dlift(iterates, t, 1, scalar)
    X_at = fam.direction(iterates, scalar)
    xn_at = np.empty_like(iterates)
    lam_at = np.empty_like(iterates)
    for k in range(n):
        acc_x = np.full(npts, zero, dtype=x.dtype)
        acc_l = np.full(npts, one, dtype=x.dtype)
        for j in range(n):
            idx = (k + j) % n
            acc_x = X_at[:, idx] + d1_at[:, idx] * acc_x
            acc_l = d1_at[:, idx] * acc_l
        xn_at[:, k] = acc_x
        lam_at[:, k] = acc_l
    g_at = g(iterates, scalar)
    gsum = np.array([scalar.fsum(row) for row in g_at], dtype=x.dtype) if npts else np.empty(0, dtype=x.dtype)
    gprime_at = g.deriv(iterates, 1, scalar)
    return iterates, lam, curv, xn, xnp, xn_at, lam_at, gsum, gprime_at


def _assemble(fam, g, x, branch, n, t, scalar) -> FixedPointSet:
    iterates, lam, curv, xn, xnp, xn_at, lam_at, gsum, gprime_at = _orbit_data(fam, g, x, n, t, scalar)
    lam_f = np.asarray(lam, dtype=float)
    spread = np.abs(np.asarray(lam_at, dtype=float) - lam_f[:, None]) / lam_f[:, None]
    if spread.size and spread.max() > 1e-10:
        raise OrbitError(f"multiplier not constant along an orbit (relative spread {spread.max():.3g})")
    return FixedPointSet(
        n=n,
        t=t,
        x=x,
        branch=branch,
        iterates=iterates,
        multiplier=lam,
        curvature=curv,
        xn=xn,
        xn_prime=xnp,
        xn_at=xn_at,
        multiplier_at=lam_at,
        gsum=gsum,
        gprime_at=gprime_at,
        scalar=scalar,
    )


def _check_distinct(x: np.ndarray, tol: float = 1e-12) -> None:
    if len(x) < 2:
        return
    gaps = np.diff(np.append(x, x[0] + 1.0))
    if gaps.min() <= tol:
        i = int(np.argmin(gaps))
        raise OrbitError(f"duplicate fixed points within {tol:g} near x = {x[i]:.17g}")


def enumerate_fixed_points(
    fam: CircleMapFamily,
    n: int,
    g: TrigPoly | None = None,
    t: float = 0.0,
    scalar: Scalar = BINARY64,
) -> FixedPointSet:
    """All fixed points of ``f_t^n`` with their orbit data.

    Roots are isolated per branch index by bisection on the monotone lift
    ``F_t^n(x) - x`` and polished by Newton.  With an extended ``scalar`` the
    binary64 roots are re-polished and all orbit data recomputed in that
    precision.
    """
    fam.check_t(t)
    g = g if g is not None else TrigPoly()
    x, k = _find_roots(fam, n, t)
    order = np.argsort(x, kind="stable")
    x, k = x[order], k[order]
    _check_distinct(x)
    if not scalar.is_binary64:
        with scalar.context():
            xm = scalar.asarray(x)
            tol = 2.0 ** (8 - scalar.bits)
            xm = _newton(fam, xm, n, t, scalar, tol, NEWTON_MAX_ITER)
            xm = xm - scalar.floor(xm)
            return _assemble(fam, g, xm, k.astype(np.int64), n, t, scalar)
    return _assemble(fam, g, x, k.astype(np.int64), n, t, scalar)


def continue_fixed_points(fam: CircleMapFamily, fps: FixedPointSet, t: float, g: TrigPoly | None = None,
                          steps: int = 4) -> FixedPointSet:
    """Follow every point of ``fps`` from ``fps.t`` to ``t`` by predictor-corrector Newton.

    The predictor is the implicit-function derivative ``-X_n / (Λ - 1)``.
    """
    fam.check_t(t)
    if not fps.scalar.is_binary64:
        raise NotImplementedError("continuation runs in binary64 only")
    g = g if g is not None else TrigPoly()
    x = np.asarray(fps.x, dtype=float)
    ts = np.linspace(fps.t, t, steps + 1)
    cur = fps
    for t0, t1 in zip(ts[:-1], ts[1:]):
        pred = x - (t1 - t0) * np.asarray(cur.xn) / (np.asarray(cur.multiplier) - 1)
        x = _newton(fam, pred, fps.n, t1, BINARY64, NEWTON_TOL, NEWTON_MAX_ITER)
        x = np.mod(x, 1.0)
        cur = _assemble(fam, g, x, fps.branch, fps.n, t1, BINARY64)
    order = np.argsort(x, kind="stable")
    _check_distinct(x[order])
    return _assemble(fam, g, x[order], fps.branch[order], fps.n, t, BINARY64)


def orbit_bundle(fam: CircleMapFamily, g: TrigPoly, x: float, n: int, t: float = 0.0,
                 tol: float = 1e-10) -> OrbitPointData:
    """Orbit data for a single fixed point ``x`` of ``f_t^n``."""
    xa = np.array([float(x)])
    y = xa
    for _ in range(n):
        y = fam.step(y, t)
    if abs(wrap(y - xa)[0]) > tol:
        raise ValueError(f"x = {x!r} is not a fixed point of f^{n} (residual {abs(wrap(y - xa)[0]):.3g})")
    fps = _assemble(fam, g, xa, np.zeros(1, dtype=np.int64), n, t, BINARY64)
    return fps.point(0)

