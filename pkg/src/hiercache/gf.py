"""Arithmetic in the prime field GF(p).

Scalars are wrapped in :class:`FieldElement`; payloads (vectors of symbols)
are plain ``numpy`` integer arrays and go through the vector helpers on
:class:`GF`, which keep every entry reduced into ``[0, p)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    i = 3
    while i * i <= n:
        if n % i == 0:
            return False
        i += 2
    return True


def choose_prime(K: int, N: int) -> int:
    """Smallest prime ``p >= max(K - N + 2, 2)``.

    The demand counts used as coefficients can reach ``K - N + 1`` and
    must stay invertible, which is where the bound comes from.
    """
    p = max(K - N + 2, 2)
    while not is_prime(p):
        p += 1
    return p


@dataclass(frozen=True)
class GF:
    """Field context. Elements and vectors are only meaningful relative to it."""

    p: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise ConfigurationError(f"field modulus {self.p} is not prime")

    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(int(value) % self.p, self)

    # scalar ops on plain ints
    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def neg(self, a: int) -> int:
        return (-a) % self.p

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroDivisionError(f"0 has no inverse in GF({self.p})")
        return pow(a, self.p - 2, self.p)

    # vector ops on payloads
    def zeros(self, length: int) -> np.ndarray:
        return np.zeros(length, dtype=np.int64)

    def vadd(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return (u + v) % self.p

    def vsub(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return (u - v) % self.p

    def scale(self, c: int, v: np.ndarray) -> np.ndarray:
        return (c % self.p) * v % self.p

    def axpy(self, c: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """``y + c*x``."""
        return (y + (c % self.p) * x) % self.p


@dataclass(frozen=True)
class FieldElement:
    value: int
    field: GF

    def _check(self, other: "FieldElement") -> None:
        if not isinstance(other, FieldElement):
            raise TypeError(f"expected FieldElement, got {type(other).__name__}")
        if other.field.p != self.field.p:
            raise ConfigurationError(
                f"mixed field contexts GF({self.field.p}) and GF({other.field.p})"
            )

    def __add__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return self.field(self.value + other.value)

    def __sub__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return self.field(self.value - other.value)

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return self.field(self.value * other.value)

    def __truediv__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return self * other.inv()

    def __neg__(self) -> "FieldElement":
        return self.field(-self.value)

    def inv(self) -> "FieldElement":
        return self.field(self.field.inv(self.value))

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"{self.value} (mod {self.field.p})"


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def sub(a: FieldElement, b: FieldElement) -> FieldElement:
    return a - b


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def neg(a: FieldElement) -> FieldElement:
    return -a


def inv(a: FieldElement) -> FieldElement:
    return a.inv()
