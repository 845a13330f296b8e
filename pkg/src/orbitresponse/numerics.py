"""Scalar backends and deterministic summation.

Coefficient arithmetic in this package only needs ``+``, ``*``, ``/``,
``exp``, ``log`` and comparisons, so it runs unchanged on binary64 floats
or on :mod:`mpmath` multiprecision numbers.  A :class:`Scalar` bundles the
elementwise functions, the exactly-rounded sum and the precision floor for
one of those choices.
"""
from __future__ import annotations

import contextlib
import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import mpmath
import numpy as np

#: Magnitude below which binary64 coefficients are treated as rounding noise.
BINARY64_FLOOR = 1e-14


@dataclass(frozen=True)
class Scalar:
    """A real-scalar backend.

    ``bits`` is the significand precision.  ``precision_floor`` is the
    magnitude below which a computed coefficient carries no information.
    """

    name: str
    bits: int
    precision_floor: float
    cos: Callable[[Any], Any] = field(repr=False, compare=False)
    sin: Callable[[Any], Any] = field(repr=False, compare=False)
    exp: Callable[[Any], Any] = field(repr=False, compare=False)
    floor: Callable[[Any], Any] = field(repr=False, compare=False)

    @property
    def is_binary64(self) -> bool:
        return self.bits == 53

    @property
    def pi(self):
        return np.pi if self.is_binary64 else mpmath.mpf(mpmath.pi)

    def asarray(self, values) -> np.ndarray:
        if self.is_binary64:
            return np.asarray(values, dtype=float)
        arr = np.asarray(values, dtype=object)
        return np.frompyfunc(mpmath.mpf, 1, 1)(arr) if arr.size else arr

    def fsum(self, values: Iterable) -> Any:
        """Exactly-rounded sum; the result does not depend on input order."""
        if self.is_binary64:
            return math.fsum(np.asarray(values, dtype=float).ravel())
        return mpmath.fsum(np.asarray(values, dtype=object).ravel())

    def one(self):
        return 1.0 if self.is_binary64 else mpmath.mpf(1)

    def zero(self):
        return 0.0 if self.is_binary64 else mpmath.mpf(0)

    def context(self):
        """Context manager setting the working precision for mpmath."""
        if self.is_binary64:
            return contextlib.nullcontext()
        return mpmath.workprec(self.bits)


BINARY64 = Scalar("binary64", 53, BINARY64_FLOOR, np.cos, np.sin, np.exp, np.floor)


def extended(bits: int) -> Scalar:
    """Multiprecision scalar with ``bits`` significand bits (mpmath)."""
    if bits <= 53:
        raise ValueError(f"extended precision needs more than 53 bits, got {bits}")
    # same headroom over unit roundoff as the binary64 floor (about 45 ulp)
    return Scalar(
        f"extended({bits})",
        bits,
        45.0 * 2.0 ** (-bits),
        np.frompyfunc(mpmath.cos, 1, 1),
        np.frompyfunc(mpmath.sin, 1, 1),
        np.frompyfunc(mpmath.exp, 1, 1),
        np.frompyfunc(mpmath.floor, 1, 1),
    )


def parse_scalar(spec: str) -> Scalar:
    """Parse ``"binary64"`` or ``"extended(p)"``."""
    spec = spec.strip()
    if spec == "binary64":
        return BINARY64
    m = re.fullmatch(r"extended\((\d+)\)", spec)
    if m is None:
        raise ValueError(f"unknown scalar {spec!r}; expected 'binary64' or 'extended(p)'")
    return extended(int(m.group(1)))


def wrap(d, scalar: Scalar = BINARY64):
    """Signed representative of ``d`` modulo 1 in [-1/2, 1/2)."""
    return d - scalar.floor(d + 0.5)
