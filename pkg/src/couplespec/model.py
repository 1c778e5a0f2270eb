"""Operator families, coefficient rules and pointwise diagnostics.

Two families are covered.  ``CylinderL`` lives on R x S^1 with modes
n in Z and essential spectrum [0, inf); ``StripM`` lives on R x (0, pi)
with sine modes n >= 1 and essential spectrum [1, inf).  Both couple the
modes only through the jump of the normal derivative at x = 0, whose
strength is ``alpha``.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

TOL_SL = 1e-9


class DomainError(ValueError):
    """Argument lies outside the region where a formula is defined."""


class Kind(enum.Enum):
    CylinderL = "L"
    StripM = "M"

    @classmethod
    def parse(cls, value: "Kind | str") -> "Kind":
        if isinstance(value, cls):
            return value
        key = str(value).strip()
        for member in cls:
            if key in (member.value, member.name):
                return member
        raise ValueError(f"unknown model kind {value!r}; expected 'L' or 'M'")


@dataclass(frozen=True)
class ModelSpec:
    kind: Kind
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind.parse(self.kind))
        alpha = float(self.alpha)
        if not math.isfinite(alpha) or alpha < 0:
            # negative alpha maps to -alpha under y -> y + pi
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha!r}")
        object.__setattr__(self, "alpha", alpha)

    @property
    def threshold(self) -> float:
        """Bottom of the essential spectrum of the decoupled operator."""
        return 0.0 if self.kind is Kind.CylinderL else 1.0

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "alpha": self.alpha}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(Kind.parse(d["kind"]), float(d["alpha"]))


def L(alpha: float) -> ModelSpec:
    return ModelSpec(Kind.CylinderL, alpha)


def M(alpha: float) -> ModelSpec:
    return ModelSpec(Kind.StripM, alpha)


@dataclass(frozen=True)
class CharacteristicRoots:
    """Leading ratios w_{n+1}/w_n of recurrence solutions as n -> +inf
    (``plus_*``) and w_{n+1}/w_n as n -> -inf (``minus_*``)."""

    lambda_plus_plus: complex
    lambda_plus_minus: complex
    lambda_minus_plus: complex
    lambda_minus_minus: complex

    def as_tuple(self) -> tuple[complex, complex, complex, complex]:
        return (self.lambda_plus_plus, self.lambda_plus_minus,
                self.lambda_minus_plus, self.lambda_minus_minus)


@dataclass(frozen=True)
class RegularityVerdict:
    point_y: float
    regular: bool
    degeneracy_value: float


class SingularPoints(tuple):
    """Sorted angles y_j; ``boundary_case`` is set for the merged alpha = 1 set."""

    boundary_case: bool

    def __new__(cls, points, boundary_case: bool = False):
        obj = super().__new__(cls, sorted(float(p) for p in points))
        obj.boundary_case = boundary_case
        return obj


def ac_multiplicity(model: ModelSpec, lam: float) -> int:
    """Multiplicity of the a.c. spectrum of the decoupled operator at ``lam``.

    2 + 4*floor(lam) for the cylinder, 2*floor(lam) for the strip.
    """
    lam = float(lam)
    if lam < model.threshold or not math.isfinite(lam):
        raise DomainError(
            f"lambda={lam} lies below the essential spectrum [{model.threshold}, inf)")
    k = math.floor(lam)
    if model.kind is Kind.CylinderL:
        return 2 + 4 * k
    return 2 * k


def characteristic_roots(alpha: float) -> CharacteristicRoots:
    """Roots of z^2 -/+ 2 z / alpha + 1 = 0 governing |n| -> inf behaviour."""
    alpha = float(alpha)
    if not alpha > 0:
        raise DomainError("characteristic roots need alpha > 0")
    inv = 1.0 / alpha
    big = inv + cmath.sqrt(inv * inv - 1.0)
    small = 1.0 / big  # inv - sqrt(...) without cancellation
    return CharacteristicRoots(big, small, -small, -big)


def _canonical_y(model: ModelSpec, y: float) -> float:
    y = float(y)
    if model.kind is Kind.CylinderL:
        y = math.fmod(y, 2 * math.pi)
        if y < 0:
            y += 2 * math.pi
        return y
    if not 0.0 < y < math.pi:
        raise DomainError(f"strip angle must lie in (0, pi), got {y}")
    return y


def sl_regularity(model: ModelSpec, y: float, tol: float = TOL_SL) -> RegularityVerdict:
    """Shapiro-Lopatinsky test at the interface point (0, y).

    The model problem -phi'' + phi = 0 with jump +-2 alpha cos(y) phi(0)
    (sin for the strip) has the bounded solution exp(-|t|) exactly when
    the degeneracy value has modulus one.
    """
    y = _canonical_y(model, y)
    trig = math.cos(y) if model.kind is Kind.CylinderL else math.sin(y)
    value = model.alpha * trig
    return RegularityVerdict(y, abs(abs(value) - 1.0) > tol, value)


def singular_points(model: ModelSpec) -> SingularPoints:
    alpha = model.alpha
    if alpha < 1.0:
        raise DomainError("no singular points for alpha < 1")
    if alpha == 1.0:
        if model.kind is Kind.CylinderL:
            return SingularPoints([0.0, math.pi], boundary_case=True)
        return SingularPoints([math.pi / 2], boundary_case=True)
    if model.kind is Kind.CylinderL:
        y = math.acos(1.0 / alpha)
        return SingularPoints([y, math.pi - y, math.pi + y, 2 * math.pi - y])
    y = math.asin(1.0 / alpha)
    return SingularPoints([y, math.pi - y])
