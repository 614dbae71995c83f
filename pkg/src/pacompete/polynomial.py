"""Small power-basis polynomial type that works over floats or Fractions.

Coefficients are stored lowest degree first.  Arithmetic stays exact when
every coefficient is an ``int`` or :class:`fractions.Fraction`, which is how
the linear (identically zero) case is recognised without tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable

import numpy as np


def is_exact(value) -> bool:
    return isinstance(value, Rational) and not isinstance(value, bool)


@dataclass(frozen=True)
class PolyCoeffs:
    coeffs: tuple

    def __init__(self, coeffs: Iterable = (0,)):
        c = tuple(coeffs) or (0,)
        # trim trailing exact zeros only; float zeros are kept as computed
        while len(c) > 1 and is_exact(c[-1]) and c[-1] == 0:
            c = c[:-1]
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def constant(cls, value) -> "PolyCoeffs":
        return cls((value,))

    @classmethod
    def linear(cls, c0, c1) -> "PolyCoeffs":
        return cls((c0, c1))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def exact(self) -> bool:
        return all(is_exact(c) for c in self.coeffs)

    def __len__(self) -> int:
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    def __getitem__(self, i):
        return self.coeffs[i]

    def __call__(self, x):
        """Horner evaluation; accepts scalars, Fractions or numpy arrays."""
        acc = self.coeffs[-1] + 0 * x
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc

    def direct(self, x):
        """Evaluate as an explicit sum of monomials (for cross-checking Horner)."""
        return sum(c * x**k for k, c in enumerate(self.coeffs)) + 0 * x

    def __add__(self, other: "PolyCoeffs") -> "PolyCoeffs":
        n = max(len(self), len(other))
        a = self.coeffs + (0,) * (n - len(self))
        b = other.coeffs + (0,) * (n - len(other))
        return PolyCoeffs(x + y for x, y in zip(a, b))

    def __neg__(self) -> "PolyCoeffs":
        return PolyCoeffs(-c for c in self.coeffs)

    def __sub__(self, other: "PolyCoeffs") -> "PolyCoeffs":
        return self + (-other)

    def __mul__(self, other) -> "PolyCoeffs":
        if not isinstance(other, PolyCoeffs):
            return PolyCoeffs(c * other for c in self.coeffs)
        out = [0] * (len(self) + len(other) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return PolyCoeffs(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "PolyCoeffs":
        out = PolyCoeffs((1,))
        for _ in range(k):
            out = out * self
        return out

    def deriv(self) -> "PolyCoeffs":
        if len(self) == 1:
            return PolyCoeffs((0,))
        return PolyCoeffs(k * c for k, c in enumerate(self.coeffs) if k > 0)

    def integ(self) -> "PolyCoeffs":
        """Antiderivative vanishing at 0."""
        return PolyCoeffs(
            (0,) + tuple(_div(c, k + 1) for k, c in enumerate(self.coeffs))
        )

    def divmod_linear(self, root):
        """Synthetic division by ``(x - root)``; returns (quotient, remainder)."""
        c = self.coeffs
        if len(c) == 1:
            return PolyCoeffs((0,)), c[0]
        q = [0] * (len(c) - 1)
        acc = c[-1]
        for k in range(len(c) - 2, -1, -1):
            q[k] = acc
            acc = acc * root + c[k]
        return PolyCoeffs(q), acc

    def is_zero(self, atol: float = 1e-14) -> bool:
        if self.exact:
            return all(c == 0 for c in self.coeffs)
        return all(abs(float(c)) < atol for c in self.coeffs)

    def to_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs], dtype=float)

    def scale(self) -> float:
        return float(max(abs(float(c)) for c in self.coeffs))

    def rounding_bound(self, x) -> float:
        """Bound on the float rounding error of Horner evaluation at ``x``."""
        ax = np.abs(x)
        mag = sum(abs(float(c)) * ax**k for k, c in enumerate(self.coeffs))
        return 4.0 * len(self.coeffs) * np.finfo(float).eps * mag


def _div(a, b):
    if is_exact(a) and is_exact(b):
        return Fraction(a) / b
    return a / b
