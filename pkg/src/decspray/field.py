"""Arithmetic in GF(2^u) for u in {4, 8, 16}.

Elements are plain ints (or integer numpy arrays) in ``[0, 2^u)``.  Scalar
operations go through Python lists; the array operations use numpy
log/antilog tables.  Both agree bit-exactly with :func:`clmul_reduce`, the
carry-less multiply-and-reduce reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from decspray.errors import InvalidField, ZeroInverse

SUPPORTED_DEGREES = (4, 8, 16)

DEFAULT_POLYS = {
    4: 0b10011,  # x^4 + x + 1
    8: 0x11D,  # x^8 + x^4 + x^3 + x^2 + 1
    16: 0x1100B,  # x^16 + x^12 + x^3 + x + 1
}

FIELD_NAMES = {"gf16": 4, "gf256": 8, "gf65536": 16}


def clmul(a: int, b: int) -> int:
    """Carry-less (GF(2)[x]) product of two bit-polynomials."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def poly_mod(a: int, m: int) -> int:
    dm = m.bit_length() - 1
    while a and a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def clmul_reduce(a: int, b: int, poly: int) -> int:
    """Reference multiplication: carry-less product reduced modulo ``poly``."""
    return poly_mod(clmul(a, b), poly)


def is_irreducible(poly: int) -> bool:
    """Exhaustive trial division by every polynomial of degree 1..deg/2."""
    deg = poly.bit_length() - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for cand in range(1 << d, 1 << (d + 1)):
            if poly_mod(poly, cand) == 0:
                return False
    return True


@lru_cache(maxsize=None)
def _tables(u: int, poly: int):
    q = 1 << u
    order = q - 1
    exp = [0] * (2 * order)
    log = [0] * q
    # find a primitive element by brute force; x itself is not primitive for
    # every irreducible polynomial
    for g in range(2, q):
        x = 1
        seen = 0
        for i in range(order):
            exp[i] = x
            log[x] = i
            x = clmul_reduce(x, g, poly)
            seen += 1
            if x == 1:
                break
        if seen == order:
            break
    else:  # pragma: no cover - only reachable for a reducible poly
        raise InvalidField(f"no primitive element modulo {poly:#x}")
    for i in range(order, 2 * order):
        exp[i] = exp[i - order]

    # array tables: log(0) points into a zero-filled tail so that
    # exp[log a + log b] is 0 whenever a or b is 0
    log0 = 2 * order
    np_log = np.array(log, dtype=np.int64)
    np_log[0] = log0
    np_exp = np.zeros(4 * order + 1, dtype=np.int64)
    np_exp[: 2 * order] = exp
    inv = [0] * q
    for a in range(1, q):
        inv[a] = exp[(order - log[a]) % order]
    return exp, log, inv, np_exp, np_log, np.array(inv, dtype=np.int64), g


@dataclass(frozen=True)
class FieldSpec:
    """GF(2^u) described by its degree and reduction polynomial.

    ``reduction_poly`` includes the leading x^u bit.
    """

    degree_u: int
    reduction_poly: int = 0

    def __post_init__(self):
        if self.degree_u not in SUPPORTED_DEGREES:
            raise InvalidField(f"unsupported degree {self.degree_u}; use one of {SUPPORTED_DEGREES}")
        if self.reduction_poly == 0:
            object.__setattr__(self, "reduction_poly", DEFAULT_POLYS[self.degree_u])
        if self.reduction_poly.bit_length() - 1 != self.degree_u:
            raise InvalidField(f"polynomial {self.reduction_poly:#x} is not of degree {self.degree_u}")
        if not is_irreducible(self.reduction_poly):
            raise InvalidField(f"polynomial {self.reduction_poly:#x} is reducible over GF(2)")

    @classmethod
    def from_name(cls, name: str) -> "FieldSpec":
        try:
            return cls(FIELD_NAMES[name.lower()])
        except KeyError:
            raise InvalidField(f"unknown field {name!r}; expected one of {sorted(FIELD_NAMES)}") from None

    @property
    def name(self) -> str:
        return f"gf{self.order}"

    @property
    def order(self) -> int:
        return 1 << self.degree_u

    @property
    def symbol_bytes(self) -> int:
        return (self.degree_u + 7) // 8

    @cached_property
    def _t(self):
        return _tables(self.degree_u, self.reduction_poly)

    @property
    def generator(self) -> int:
        """A primitive element of the multiplicative group."""
        return self._t[6]

    def __repr__(self) -> str:
        return f"FieldSpec(degree_u={self.degree_u}, reduction_poly={self.reduction_poly:#x})"

    def __getstate__(self):
        return {"degree_u": self.degree_u, "reduction_poly": self.reduction_poly}

    def __setstate__(self, state):
        for key, val in state.items():
            object.__setattr__(self, key, val)

    # -- scalar ops -------------------------------------------------------

    def check(self, a: int) -> int:
        if not 0 <= a < self.order:
            raise InvalidField(f"{a} is not an element of {self.name}")
        return a

    @staticmethod
    def add(a: int, b: int) -> int:
        return a ^ b

    sub = add

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        exp, log = self._t[0], self._t[1]
        return exp[log[a] + log[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroInverse(f"0 has no inverse in {self.name}")
        return self._t[2][a]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        if e == 0:
            return 1
        if a == 0:
            return 0
        order = self.order - 1
        return self._t[0][(self._t[1][a] * e) % order]

    # -- array ops --------------------------------------------------------

    def mul_array(self, a, b) -> np.ndarray:
        """Elementwise (broadcasting) product of integer arrays."""
        np_exp, np_log = self._t[3], self._t[4]
        return np_exp[np_log[a] + np_log[b]]

    def scale(self, vec, s: int) -> np.ndarray:
        vec = np.asarray(vec, dtype=np.int64)
        if s == 0:
            return np.zeros_like(vec)
        np_exp, np_log = self._t[3], self._t[4]
        return np_exp[np_log[vec] + self._t[1][s]]

    def inv_array(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroInverse(f"0 has no inverse in {self.name}")
        return self._t[5][a]

    def matmul(self, a, b) -> np.ndarray:
        """Matrix product over the field for 2-D integer arrays."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
        np_exp, np_log = self._t[3], self._t[4]
        la, lb = np_log[a], np_log[b]
        for t in range(a.shape[1]):
            out ^= np_exp[la[:, t, None] + lb[None, t, :]]
        return out

    def random(self, rng: np.random.Generator, size, nonzero: bool = False) -> np.ndarray:
        low = 1 if nonzero else 0
        return rng.integers(low, self.order, size=size, dtype=np.int64)

    def element(self, value: int) -> "FieldElement":
        return FieldElement(self, self.check(int(value)))


@dataclass(frozen=True)
class FieldElement:
    """A value tagged with its field; supports ``+ - * /`` and ``**``."""

    field: FieldSpec
    value: int

    def __post_init__(self):
        self.field.check(self.value)

    def _other(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise InvalidField("operands belong to different fields")
            return other.value
        return self.field.check(int(other))

    def __add__(self, other):
        return FieldElement(self.field, self.value ^ self._other(other))

    __radd__ = __add__
    __sub__ = __add__
    __rsub__ = __add__

    def __mul__(self, other):
        return FieldElement(self.field, self.field.mul(self.value, self._other(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return FieldElement(self.field, self.field.div(self.value, self._other(other)))

    def __pow__(self, e: int):
        if e < 0:
            return FieldElement(self.field, self.field.pow(self.field.inv(self.value), -e))
        return FieldElement(self.field, self.field.pow(self.value, e))

    def inverse(self) -> "FieldElement":
        return FieldElement(self.field, self.field.inv(self.value))

    def __int__(self) -> int:
        return self.value

    def __bool__(self) -> bool:
        return self.value != 0


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def inv(a: FieldElement) -> FieldElement:
    return a.inverse()


def get_field(field: "FieldSpec | str | int") -> FieldSpec:
    """Accept a FieldSpec, a config name like ``"gf256"``, or a degree."""
    if isinstance(field, FieldSpec):
        return field
    if isinstance(field, str):
        return FieldSpec.from_name(field)
    return FieldSpec(int(field))
