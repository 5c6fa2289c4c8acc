# isometry_systems/core/scalar.py
"""Exact scalars: rationals, optionally adjoined with sqrt(d).

Every length and distance in the package is a ``Scalar``. Floating point is
never used for decisions; ``float()`` exists only for display.
"""
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering

from isometry_systems.core.errors import FieldMismatch

_TERM_RE = re.compile(r"[+-]?[^+-]+")
_RATIONAL_RE = re.compile(r"^[+-]?\d+(?:/\d+)?$")
_RADICAL_RE = re.compile(r"^(?P<sign>[+-]?)(?P<coeff>\d+(?:/\d+)?)?\*?sqrt\((?P<d>\d+)\)$")


def is_squarefree(d: int) -> bool:
    if d < 2:
        return False
    k = 2
    while k * k <= d:
        if d % (k * k) == 0:
            return False
        k += 1
    return True


def _sign(value: Fraction) -> int:
    return (value > 0) - (value < 0)


@total_ordering
@dataclass(frozen=True)
class Scalar:
    """``rational + irrational * sqrt(radicand)``; radicand is 0 for plain rationals."""

    rational: Fraction = Fraction(0)
    irrational: Fraction = Fraction(0)
    radicand: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rational", Fraction(self.rational))
        object.__setattr__(self, "irrational", Fraction(self.irrational))
        if self.irrational == 0:
            object.__setattr__(self, "radicand", 0)
        elif not is_squarefree(self.radicand):
            raise ValueError(f"radicand must be a square-free integer > 1, got {self.radicand}")

    # --- Coercion ---

    @staticmethod
    def coerce(value) -> "Scalar":
        if isinstance(value, Scalar):
            return value
        if isinstance(value, (int, Fraction)):
            return Scalar(Fraction(value))
        raise TypeError(f"cannot use {type(value).__name__} as an exact scalar")

    def _common_radicand(self, other: "Scalar") -> int:
        if self.radicand and other.radicand and self.radicand != other.radicand:
            raise FieldMismatch(f"sqrt({self.radicand}) and sqrt({other.radicand}) do not mix")
        return self.radicand or other.radicand

    @property
    def is_rational(self) -> bool:
        return self.irrational == 0

    # --- Arithmetic ---

    def __add__(self, other):
        if not isinstance(other, (Scalar, int, Fraction)):
            return NotImplemented
        other = Scalar.coerce(other)
        d = self._common_radicand(other)
        return Scalar(self.rational + other.rational, self.irrational + other.irrational, d)

    __radd__ = __add__

    def __neg__(self):
        return Scalar(-self.rational, -self.irrational, self.radicand)

    def __sub__(self, other):
        if not isinstance(other, (Scalar, int, Fraction)):
            return NotImplemented
        return self + (-Scalar.coerce(other))

    def __rsub__(self, other):
        return Scalar.coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, (Scalar, int, Fraction)):
            return NotImplemented
        other = Scalar.coerce(other)
        d = self._common_radicand(other)
        a, b, c, e = self.rational, self.irrational, other.rational, other.irrational
        return Scalar(a * c + b * e * d, a * e + b * c, d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, (Scalar, int, Fraction)):
            return NotImplemented
        other = Scalar.coerce(other)
        if not other:
            raise ZeroDivisionError("division of a scalar by zero")
        d = self._common_radicand(other)
        a, b, c, e = self.rational, self.irrational, other.rational, other.irrational
        norm = c * c - e * e * d
        return Scalar((a * c - b * e * d) / norm, (b * c - a * e) / norm, d)

    def __rtruediv__(self, other):
        return Scalar.coerce(other) / self

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # --- Order ---

    def sign(self) -> int:
        a, b = self.rational, self.irrational
        if b == 0:
            return _sign(a)
        if a >= 0 and b > 0:
            return 1
        if a <= 0 and b < 0:
            return -1
        # opposite signs; a*a == b*b*d is impossible for square-free d
        if a > 0:
            return 1 if a * a > b * b * self.radicand else -1
        return 1 if b * b * self.radicand > a * a else -1

    def __bool__(self):
        return self.rational != 0 or self.irrational != 0

    def __eq__(self, other):
        if not isinstance(other, (Scalar, int, Fraction)):
            return NotImplemented
        other = Scalar.coerce(other)
        if self.irrational == 0 and other.irrational == 0:
            return self.rational == other.rational
        return (self.rational, self.irrational, self.radicand) == (
            other.rational,
            other.irrational,
            other.radicand,
        )

    def __lt__(self, other):
        if not isinstance(other, (Scalar, int, Fraction)):
            return NotImplemented
        return (self - Scalar.coerce(other)).sign() < 0

    def __hash__(self):
        if self.irrational == 0:
            return hash(self.rational)
        return hash((self.rational, self.irrational, self.radicand))

    # --- Text ---

    def __float__(self):
        return float(self.rational) + float(self.irrational) * self.radicand ** 0.5

    def __str__(self):
        if self.irrational == 0:
            return str(self.rational)
        radical = f"{abs(self.irrational)}*sqrt({self.radicand})"
        if self.rational == 0:
            return f"-{radical}" if self.irrational < 0 else radical
        joiner = "-" if self.irrational < 0 else "+"
        return f"{self.rational}{joiner}{radical}"

    def __repr__(self):
        return f"Scalar({self})"

    @classmethod
    def parse(cls, text: str, radicand: int | None = None) -> "Scalar":
        """Parses ``p/q``, ``p/q + r/s*sqrt(d)`` and the ``√``/``·`` spellings."""
        compact = re.sub(r"\s+", "", text).replace("√", "sqrt").replace("·", "*")
        compact = re.sub(r"sqrt(\d+)", r"sqrt(\1)", compact)
        if not compact:
            raise ValueError("empty scalar")
        rational, irrational, d = Fraction(0), Fraction(0), 0
        try:
            for term in _TERM_RE.findall(compact):
                if _RATIONAL_RE.match(term):
                    rational += Fraction(term)
                    continue
                match = _RADICAL_RE.match(term)
                if not match:
                    raise ValueError(f"malformed scalar term '{term}'")
                coeff = Fraction(match.group("coeff") or 1)
                if match.group("sign") == "-":
                    coeff = -coeff
                term_d = int(match.group("d"))
                if d and term_d != d:
                    raise FieldMismatch(f"mixed radicands {d} and {term_d} in '{text}'")
                d = term_d
                irrational += coeff
        except ZeroDivisionError as e:
            raise ValueError(f"zero denominator in scalar '{text}'") from e
        if "".join(_TERM_RE.findall(compact)) != compact:
            raise ValueError(f"malformed scalar '{text}'")
        if radicand and d and d != radicand:
            raise FieldMismatch(f"scalar '{text}' uses sqrt({d}) but the field is sqrt({radicand})")
        return cls(rational, irrational, d)


ZERO = Scalar()
ONE = Scalar(Fraction(1))


def sqrt(d: int) -> Scalar:
    return Scalar(Fraction(0), Fraction(1), d)


def golden_ratio() -> Scalar:
    return (1 + sqrt(5)) / 2
