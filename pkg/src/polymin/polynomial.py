"""Integer polynomials and exact sign-change certificates for their roots."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from importlib import resources


class NoSignChange(ValueError):
    """The polynomial does not change sign over the requested bracket."""


@dataclass(frozen=True)
class IntPolynomial:
    """Dense polynomial with integer coefficients, lowest degree first."""

    coeffs: tuple
    name: str = ""

    def __post_init__(self):
        c = tuple(int(a) for a in self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c = c[:-1]
        if not c:
            c = (0,)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def from_text(cls, text: str, name: str = "") -> "IntPolynomial":
        return cls(tuple(int(line) for line in text.split() if line.strip()), name)

    @classmethod
    def load(cls, name: str) -> "IntPolynomial":
        """One of the shipped polynomials, e.g. ``n8_w`` or ``n10_q6``."""
        text = resources.files("polymin").joinpath("data").joinpath(f"{name}.txt").read_text()
        return cls.from_text(text, name)

    def to_text(self) -> str:
        return "\n".join(str(a) for a in self.coeffs) + "\n"

    def __call__(self, t: float) -> float:
        acc = 0.0
        for a in reversed(self.coeffs):
            acc = acc * t + a
        return acc

    def scaled_value(self, p: int, q: int) -> int:
        """q**degree * P(p/q), exactly, for q > 0."""
        acc = 0
        qpow = 1
        # Horner in p with the powers of q carried on the coefficients
        for i, a in enumerate(reversed(self.coeffs)):
            acc = acc * p + a * qpow
            qpow *= q
        # acc = sum_k a_k p^k q^(d-k) after the loop
        return acc

    def eval_exact(self, t) -> Fraction:
        t = Fraction(t)
        return Fraction(self.scaled_value(t.numerator, t.denominator), t.denominator ** self.degree)

    def sign_at(self, t) -> int:
        t = Fraction(t)
        v = self.scaled_value(t.numerator, t.denominator)
        return (v > 0) - (v < 0)


@dataclass(frozen=True)
class RootCertificate:
    polynomial: str
    lo: Fraction
    hi: Fraction
    sign_lo: int
    sign_hi: int
    value: float

    @property
    def width(self) -> float:
        return float(self.hi - self.lo)

    def check(self, poly: IntPolynomial) -> bool:
        return (poly.sign_at(self.lo) == self.sign_lo
                and poly.sign_at(self.hi) == self.sign_hi
                and self.sign_lo * self.sign_hi < 0)

    def as_dict(self) -> dict:
        return {
            "polynomial": self.polynomial,
            "lo": f"{self.lo.numerator}/{self.lo.denominator}",
            "hi": f"{self.hi.numerator}/{self.hi.denominator}",
            "lo_float": float(self.lo),
            "hi_float": float(self.hi),
            "sign_lo": self.sign_lo,
            "sign_hi": self.sign_hi,
            "width": self.width,
            "value": self.value,
        }


def verify_minpoly(poly: IntPolynomial, value: float, tol: float) -> RootCertificate:
    """Certify a sign change of ``poly`` on [value - tol, value + tol].

    Endpoints are the exact binary rationals of the floats ``value`` and
    ``tol``; both signs are evaluated in integer arithmetic.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    v, d = Fraction(value), Fraction(tol)
    lo, hi = v - d, v + d
    slo, shi = poly.sign_at(lo), poly.sign_at(hi)
    if slo * shi >= 0:
        raise NoSignChange(
            f"{poly.name or 'polynomial'} has signs ({slo}, {shi}) at {float(lo)!r}, {float(hi)!r}"
        )
    return RootCertificate(poly.name, lo, hi, slo, shi, float(value))


def root_near(poly: IntPolynomial, guess: float, rel: float = 1e-6, steps: int = 80) -> float:
    """Real root of ``poly`` bracketed around ``guess``, bisected exactly.

    The bracket starts at guess * (1 +- rel) and doubles until the sign
    changes; bisection uses exact rational signs.
    """
    g = Fraction(guess)
    d = abs(g) * Fraction(rel) or Fraction(rel)
    for _ in range(60):
        lo, hi = g - d, g + d
        slo, shi = poly.sign_at(lo), poly.sign_at(hi)
        if slo == 0:
            return float(lo)
        if shi == 0:
            return float(hi)
        if slo != shi:
            break
        d *= 2
    else:
        raise NoSignChange(f"no root of {poly.name or 'polynomial'} found near {guess!r}")
    for _ in range(steps):
        mid = (lo + hi) / 2
        # keep the denominators small by rounding the midpoint to a float
        mid = Fraction(float(mid))
        if mid <= lo or mid >= hi:
            break
        s = poly.sign_at(mid)
        if s == 0:
            return float(mid)
        if s == slo:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2)
