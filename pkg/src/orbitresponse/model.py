"""Analytic circle-map families and observables.

Every function on the circle is a finite trigonometric polynomial

    p(x) = c0 + sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x),

which is closed under differentiation and exactly 1-periodic.  A family is
the lift ``F_t(x) = D x + p0(x) + t X(x)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .numerics import BINARY64, Scalar


class ExpansionError(ValueError):
    """The family is not certifiably uniformly expanding."""


class DomainError(ValueError):
    """Parameter outside the certified range of the family."""


def _as_tuple(coeffs: Sequence[float]) -> tuple[float, ...]:
    return tuple(float(c) for c in coeffs)


@dataclass(frozen=True)
class TrigPoly:
    """Real trigonometric polynomial on R/Z.

    ``cos_coeffs[k-1]`` and ``sin_coeffs[k-1]`` multiply ``cos 2πkx`` and
    ``sin 2πkx``; the two lists are padded to a common order ``K``.
    """

    constant: float = 0.0
    cos_coeffs: tuple[float, ...] = ()
    sin_coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        cos_c = _as_tuple(self.cos_coeffs)
        sin_c = _as_tuple(self.sin_coeffs)
        K = max(len(cos_c), len(sin_c))
        cos_c += (0.0,) * (K - len(cos_c))
        sin_c += (0.0,) * (K - len(sin_c))
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "cos_coeffs", cos_c)
        object.__setattr__(self, "sin_coeffs", sin_c)
        if not all(np.isfinite(c) for c in (self.constant, *cos_c, *sin_c)):
            raise ValueError("trigonometric coefficients must be finite")

    @property
    def order(self) -> int:
        return len(self.cos_coeffs)

    @property
    def is_zero(self) -> bool:
        return self.constant == 0.0 and not any(self.cos_coeffs) and not any(self.sin_coeffs)

    def __call__(self, x, scalar: Scalar = BINARY64):
        return self.deriv(x, 0, scalar)

    def deriv(self, x, order: int = 1, scalar: Scalar = BINARY64):
        """Value of the ``order``-th derivative at ``x``.

        The factors ``(2πk)^order`` are formed in the scalar's own precision,
        so extended-precision evaluation is not limited by binary64 rounding
        of the derivative coefficients.
        """
        if order == 0:
            out = scalar.zero() + self.constant + 0 * x
        else:
            out = scalar.zero() + 0 * x
        two_pi = 2 * scalar.pi
        for k, (a, b) in enumerate(zip(self.cos_coeffs, self.sin_coeffs), start=1):
            if a == 0.0 and b == 0.0:
                continue
            w = two_pi * k
            arg = w * x
            c, s = scalar.cos(arg), scalar.sin(arg)
            # d/dx (a cos + b sin) rotates (a, b) -> (b w, -a w)
            ca, cb = a, b
            for _ in range(order % 4):
                ca, cb = cb, -ca
            scale = w**order if order else 1
            out = out + scale * (ca * c + cb * s)
        return out

    def derivative(self) -> "TrigPoly":
        """Derivative as a new polynomial of the same order (binary64 coefficients)."""
        k = 2 * np.pi * np.arange(1, self.order + 1)
        return TrigPoly(0.0, k * np.asarray(self.sin_coeffs), -k * np.asarray(self.cos_coeffs))

    def coefficient_bound(self) -> float:
        """Upper bound sum_k 2πk(|a_k| + |b_k|) on sup |p'|."""
        k = 2 * np.pi * np.arange(1, self.order + 1)
        return float(np.sum(k * (np.abs(self.cos_coeffs) + np.abs(self.sin_coeffs))))

    def fourier(self) -> dict[int, complex]:
        """Complex Fourier coefficients ``p̂(m)`` with p = Σ p̂(m) e^{2πimx}."""
        out = {0: complex(self.constant)}
        for k, (a, b) in enumerate(zip(self.cos_coeffs, self.sin_coeffs), start=1):
            out[k] = complex(a / 2, -b / 2)
            out[-k] = complex(a / 2, b / 2)
        return out

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        K = max(self.order, other.order)
        pad = lambda c: np.pad(np.asarray(c, dtype=float), (0, K - len(c)))  # noqa: E731
        return TrigPoly(
            self.constant + other.constant,
            pad(self.cos_coeffs) + pad(other.cos_coeffs),
            pad(self.sin_coeffs) + pad(other.sin_coeffs),
        )

    def __mul__(self, alpha: float) -> "TrigPoly":
        return TrigPoly(
            alpha * self.constant,
            [alpha * c for c in self.cos_coeffs],
            [alpha * c for c in self.sin_coeffs],
        )

    __rmul__ = __mul__

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        return self + (-1.0) * other


#: Observables are plain trigonometric polynomials.
Observable = TrigPoly


class EvalBundle(NamedTuple):
    F: float
    dF: float
    d2F: float
    dtF: float
    dtdxF: float


@dataclass(frozen=True)
class CircleMapFamily:
    """Affine-in-t family of expanding circle maps, lift ``D x + p0(x) + t X(x)``.

    Construction certifies uniform expansion on ``|t| <= t_max`` and stores
    the certified lower bound on ``F_t'`` as ``expansion``.
    """

    degree: int
    base: TrigPoly = field(default_factory=TrigPoly)
    direction: TrigPoly = field(default_factory=TrigPoly)
    t_max: float = 0.1
    expansion: float = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 2:
            raise ValueError(f"degree must be an integer >= 2, got {self.degree}")
        object.__setattr__(self, "degree", int(self.degree))
        if not (self.t_max > 0 and np.isfinite(self.t_max)):
            raise ValueError(f"t_max must be positive and finite, got {self.t_max}")
        object.__setattr__(self, "expansion", certify_expansion(self))

    def check_t(self, t: float) -> None:
        if abs(t) > self.t_max:
            raise DomainError(f"|t| = {abs(t)} exceeds t_max = {self.t_max}; expansion certificate void")

    def lift(self, x, t: float = 0.0, scalar: Scalar = BINARY64):
        y = self.degree * x + self.base(x, scalar)
        if t:
            y = y + t * self.direction(x, scalar)
        return y

    def dlift(self, x, t: float = 0.0, order: int = 1, scalar: Scalar = BINARY64):
        y = self.base.deriv(x, order, scalar)
        if order == 1:
            y = y + self.degree
        if t:
            y = y + t * self.direction.deriv(x, order, scalar)
        return y

    def step(self, x, t: float = 0.0, scalar: Scalar = BINARY64):
        """Circle map ``f_t`` with values reduced to [0, 1)."""
        y = self.lift(x, t, scalar)
        return y - scalar.floor(y)


def eval_bundle(fam: CircleMapFamily, t: float, x) -> EvalBundle:
    """Lift value and the derivatives used by the trace formulas."""
    fam.check_t(t)
    return EvalBundle(
        F=fam.lift(x, t),
        dF=fam.dlift(x, t, 1),
        d2F=fam.dlift(x, t, 2),
        dtF=fam.direction(x),
        dtdxF=fam.direction.deriv(x, 1),
    )


def certify_expansion(fam: CircleMapFamily) -> float:
    """Lower bound ``D - S`` on ``F_t'`` over the circle and ``|t| <= t_max``."""
    lam = fam.degree - fam.base.coefficient_bound() - fam.t_max * fam.direction.coefficient_bound()
    if not lam > 1:
        raise ExpansionError(
            f"not uniformly expanding on |t| <= t_max (certified bound {lam:.6g} <= 1)"
        )
    return lam


def doubling(direction: TrigPoly | None = None, t_max: float = 0.1) -> CircleMapFamily:
    return CircleMapFamily(2, TrigPoly(), direction or TrigPoly(), t_max)


def sin_poly(amplitude: float = 1.0, k: int = 1) -> TrigPoly:
    return TrigPoly(0.0, [0.0] * k, [0.0] * (k - 1) + [amplitude])


def cos_poly(amplitude: float = 1.0, k: int = 1) -> TrigPoly:
    return TrigPoly(0.0, [0.0] * (k - 1) + [amplitude], [0.0] * k)
