"""Parametric families F_r(x | theta) and the built-in fixtures.

Every family is immutable and evaluates vectorially: ``cdf(x, theta)``
broadcasts its arguments like a numpy ufunc. Unbounded domains carry a finite
*window* (``x_window``, ``theta_window``) inside which the base distribution is
resolved to within ``EPS_TAIL``; default grids are laid out over the windows.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, NamedTuple

import numpy as np
from scipy import special

from .errors import DomainError, SpecError, UnsupportedDomainError

EPS_TAIL = 1e-6

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class Interval(NamedTuple):
    lo: float
    hi: float

    def contains(self, v, atol: float = 0.0) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(np.all((v >= self.lo - atol) & (v <= self.hi + atol)))

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def swap_sign(self) -> "Interval":
        return Interval(-self.hi, -self.lo)


REAL_LINE = Interval(-math.inf, math.inf)


class Direction(str, enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"
    UNKNOWN = "unknown"


# ---------------------------------------------------------------------------
# Base distributions for translation families
# ---------------------------------------------------------------------------


class _Base:
    name: str
    median: float

    def cdf(self, u):
        raise NotImplementedError

    def sf(self, u):
        raise NotImplementedError

    def pdf(self, u):
        raise NotImplementedError

    def tail_bounds(self, eps: float = EPS_TAIL) -> tuple[float, float]:
        raise NotImplementedError

    def interval_mass(self, lo, hi):
        """P(lo < U <= hi), computed from the tail nearer to the interval."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        upper = lo >= self.median
        with np.errstate(invalid="ignore"):
            return np.where(upper, self.sf(lo) - self.sf(hi), self.cdf(hi) - self.cdf(lo))

    def spec(self) -> Any:
        return self.name


class EVDBase(_Base):
    """F(u) = 1 - exp(-exp(u))."""

    name = "evd"
    median = math.log(math.log(2.0))

    def cdf(self, u):
        return -np.expm1(-np.exp(np.asarray(u, dtype=float)))

    def sf(self, u):
        return np.exp(-np.exp(np.asarray(u, dtype=float)))

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        return np.exp(u - np.exp(u))

    def tail_bounds(self, eps: float = EPS_TAIL) -> tuple[float, float]:
        return math.log(-math.log1p(-eps)), math.log(-math.log(eps))


class NormalBase(_Base):
    name = "normal"
    median = 0.0

    def cdf(self, u):
        return special.ndtr(np.asarray(u, dtype=float))

    def sf(self, u):
        return special.ndtr(-np.asarray(u, dtype=float))

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        return np.exp(-0.5 * u * u) / _SQRT_2PI

    def tail_bounds(self, eps: float = EPS_TAIL) -> tuple[float, float]:
        lo = float(special.ndtri(eps))
        return lo, -lo


class GappedNormalBase(_Base):
    """Symmetric density that is zero on (-a, a).

    The standard normal mass removed from the gap is redistributed
    proportionally over the two tails, i.e. the tails are renormalized by
    1 / (2 N(-a)).
    """

    median = 0.0

    def __init__(self, a: float):
        a = float(a)
        if not a > 0.0:
            raise DomainError(f"gap half-width must be positive, got {a}")
        self.a = a
        self.name = f"gapped({a:g})"
        self._mass = 2.0 * float(special.ndtr(-a))

    def cdf(self, u):
        u = np.asarray(u, dtype=float)
        lower = special.ndtr(u) / self._mass
        upper = 1.0 - special.ndtr(-u) / self._mass
        return np.where(u <= -self.a, lower, np.where(u >= self.a, upper, 0.5))

    def sf(self, u):
        return self.cdf(-np.asarray(u, dtype=float))

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        dens = np.exp(-0.5 * u * u) / _SQRT_2PI / self._mass
        return np.where(np.abs(u) >= self.a, dens, 0.0)

    def tail_bounds(self, eps: float = EPS_TAIL) -> tuple[float, float]:
        lo = float(special.ndtri(eps * self._mass))
        return lo, -lo

    def spec(self) -> Any:
        return {"gapped": self.a}


def make_base(spec: Any) -> _Base:
    if spec == "evd":
        return EVDBase()
    if spec == "normal":
        return NormalBase()
    if isinstance(spec, dict) and set(spec) == {"gapped"}:
        try:
            return GappedNormalBase(float(spec["gapped"]))
        except (TypeError, ValueError) as exc:
            raise SpecError(str(exc), field="base.gapped") from exc
    raise SpecError(f"unknown base distribution {spec!r}", field="base")


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


class ParametricFamily:
    """Evaluation contract for a family of random distributions F_r(x | theta).

    Subclasses implement :meth:`cdf`; :meth:`density` (d/dx) and
    :meth:`theta_derivative` (d/dtheta) are optional and advertised through
    ``has_density`` / ``has_theta_derivative``.
    """

    x_domain: Interval = REAL_LINE
    theta_domain: Interval = REAL_LINE
    x_window: Interval
    theta_window: Interval
    direction: Direction = Direction.UNKNOWN
    is_translation_pivot: bool = False
    has_density: bool = False
    has_theta_derivative: bool = False
    truncation_eps: float = EPS_TAIL

    def cdf(self, x, theta):
        raise NotImplementedError

    def density(self, x, theta):
        raise NotImplementedError(f"{type(self).__name__} provides no density")

    def theta_derivative(self, x, theta):
        raise NotImplementedError(f"{type(self).__name__} provides no theta-derivative")

    def cdf_diff(self, x_hi, x_lo, theta):
        """cdf(x_hi, theta) - cdf(x_lo, theta); overridden where a tail-aware form exists."""
        return self.cdf(x_hi, theta) - self.cdf(x_lo, theta)

    def theta_increment(self, x, theta_lo, theta_hi):
        """cdf(x, theta_hi) - cdf(x, theta_lo); overridden where a tail-aware form exists."""
        return self.cdf(x, theta_hi) - self.cdf(x, theta_lo)

    def to_spec(self) -> dict:
        raise NotImplementedError

    def __repr__(self) -> str:
        try:
            return f"{type(self).__name__}({json.dumps(self.to_spec())})"
        except NotImplementedError:
            return f"{type(self).__name__}()"


def eval_cdf(family: ParametricFamily, x: float, theta: float) -> float:
    """F_r(x | theta) with domain checking."""
    if not family.x_domain.contains(x):
        raise DomainError(f"x={x} outside x-domain {tuple(family.x_domain)}")
    if not family.theta_domain.contains(theta):
        raise DomainError(f"theta={theta} outside theta-domain {tuple(family.theta_domain)}")
    return float(family.cdf(x, theta))


class JoinedUniform(ParametricFamily):
    """Two uniform families joined through a linear transition interval.

    The semirange is ``b`` for theta < -theta_T, ``a`` for theta > theta_T and
    varies linearly in between; theta is a decreasing parameter.
    """

    direction = Direction.DECREASING
    has_density = True
    has_theta_derivative = True

    def __init__(self, a: float, b: float, theta_T: float):
        a, b, theta_T = float(a), float(b), float(theta_T)
        if not a > 0.0:
            raise DomainError(f"semirange a must be positive, got {a}")
        if not b > a:
            raise DomainError(f"semirange b must exceed a, got a={a}, b={b}")
        if theta_T == 0.0:
            raise DomainError(
                "theta_T = 0 gives the discontinuous joining whose transition RD is only "
                "defined through a limiting transition protocol; use theta_T > 0"
            )
        if not theta_T > 0.0:
            raise DomainError(f"theta_T must be positive, got {theta_T}")
        self.a, self.b, self.theta_T = a, b, theta_T
        half = 2.0 * b
        self.x_window = Interval(-half, half)
        # Exactly one saturated column at each end of the default grid.
        self.theta_window = Interval(-half - b, half + a)

    def semirange(self, theta):
        theta = np.asarray(theta, dtype=float)
        a, b, t = self.a, self.b, self.theta_T
        trans = b * (1.0 - theta / t) / 2.0 + a * (1.0 + theta / t) / 2.0
        return np.where(theta < -t, b, np.where(theta > t, a, trans))

    def transition_semirange(self, theta: float) -> float:
        if not -self.theta_T <= theta <= self.theta_T:
            raise DomainError(
                f"theta={theta} outside transition interval [{-self.theta_T}, {self.theta_T}]"
            )
        return float(self.semirange(theta))

    def intersection_vertex(self) -> tuple[float, float]:
        """Common point (x_T, F_T) of all transition RDs."""
        a, b, t = self.a, self.b, self.theta_T
        return (b + a) / (b - a) * t, 0.5 + t / (b - a)

    def cdf(self, x, theta):
        x = np.asarray(x, dtype=float)
        theta = np.asarray(theta, dtype=float)
        s = self.semirange(theta)
        return np.clip(0.5 + (x - theta) / (2.0 * s), 0.0, 1.0)

    def density(self, x, theta):
        x = np.asarray(x, dtype=float)
        s = self.semirange(theta)
        inside = np.abs(x - theta) <= s
        return np.where(inside, 1.0 / (2.0 * s), 0.0)

    def theta_derivative(self, x, theta):
        x = np.asarray(x, dtype=float)
        theta = np.asarray(theta, dtype=float)
        s = self.semirange(theta)
        in_trans = np.abs(theta) <= self.theta_T
        ds = np.where(in_trans, (self.a - self.b) / (2.0 * self.theta_T), 0.0)
        d = (-s - (x - theta) * ds) / (2.0 * s * s)
        inside = np.abs(x - theta) < s
        return np.where(inside, d, 0.0)

    def to_spec(self) -> dict:
        return {"kind": "joined_uniform", "a": self.a, "b": self.b, "theta_T": self.theta_T}


def transition_semirange(family: JoinedUniform, theta: float) -> float:
    return family.transition_semirange(theta)


def intersection_vertex(family: JoinedUniform) -> tuple[float, float]:
    return family.intersection_vertex()


class TranslationFamily(ParametricFamily):
    """cdf(x, theta) = F*(x + theta); theta is an increasing translation parameter."""

    direction = Direction.INCREASING
    is_translation_pivot = True
    has_density = True
    has_theta_derivative = True

    def __init__(self, base: _Base | str | dict):
        self.base = base if isinstance(base, _Base) else make_base(base)
        lo, hi = self.base.tail_bounds(EPS_TAIL)
        self.x_window = Interval(lo, hi)
        self.theta_window = Interval(lo - hi, hi - lo)

    def cdf(self, x, theta):
        return self.base.cdf(np.add(x, theta))

    def cdf_diff(self, x_hi, x_lo, theta):
        return self.base.interval_mass(np.add(x_lo, theta), np.add(x_hi, theta))

    def theta_increment(self, x, theta_lo, theta_hi):
        return self.base.interval_mass(np.add(x, theta_lo), np.add(x, theta_hi))

    def density(self, x, theta):
        return self.base.pdf(np.add(x, theta))

    def theta_derivative(self, x, theta):
        return self.base.pdf(np.add(x, theta))

    def base_density(self, u):
        return self.base.pdf(u)

    def to_spec(self) -> dict:
        return {"kind": "translation", "base": self.base.spec()}


def evd_translation() -> TranslationFamily:
    return TranslationFamily(EVDBase())


def normal_translation() -> TranslationFamily:
    return TranslationFamily(NormalBase())


def gapped_translation(a: float) -> TranslationFamily:
    return TranslationFamily(GappedNormalBase(a))


class AbsComposite(ParametricFamily):
    """Distribution of y = |x|: cdf*(y, theta) = cdf(y, theta) - cdf(-y, theta)."""

    def __init__(self, of: ParametricFamily):
        dom = of.x_domain
        symmetric = (math.isinf(dom.lo) and math.isinf(dom.hi)) or dom.lo == -dom.hi
        if not symmetric:
            raise UnsupportedDomainError(
                f"|x| composite needs an x-domain symmetric about 0, got {tuple(dom)}"
            )
        self.of = of
        self.x_domain = Interval(0.0, dom.hi)
        self.theta_domain = of.theta_domain
        self.x_window = Interval(0.0, max(abs(of.x_window.lo), abs(of.x_window.hi)))
        self.theta_window = of.theta_window
        self.has_density = of.has_density
        self.has_theta_derivative = of.has_theta_derivative

    def cdf(self, x, theta):
        x = np.asarray(x, dtype=float)
        return self.of.cdf_diff(x, -x, theta)

    def density(self, x, theta):
        x = np.asarray(x, dtype=float)
        return self.of.density(x, theta) + self.of.density(-x, theta)

    def theta_derivative(self, x, theta):
        x = np.asarray(x, dtype=float)
        return self.of.theta_derivative(x, theta) - self.of.theta_derivative(-x, theta)

    def to_spec(self) -> dict:
        return {"kind": "abs_x", "of": self.of.to_spec()}


def composite_abs_x(family: ParametricFamily) -> AbsComposite:
    return AbsComposite(family)


class ReciprocalFamily(ParametricFamily):
    """Roles of x and theta interchanged: cdf'(x, theta) = cdf(theta, x)."""

    def __init__(self, of: ParametricFamily):
        self.of = of
        self.x_domain, self.theta_domain = of.theta_domain, of.x_domain
        self.x_window, self.theta_window = of.theta_window, of.x_window
        self.is_translation_pivot = of.is_translation_pivot
        self.has_density = of.has_theta_derivative
        self.has_theta_derivative = of.has_density

    def cdf(self, x, theta):
        return self.of.cdf(theta, x)

    def density(self, x, theta):
        return self.of.theta_derivative(theta, x)

    def theta_derivative(self, x, theta):
        return self.of.density(theta, x)

    def to_spec(self) -> dict:
        return {"kind": "reciprocal", "of": self.of.to_spec()}


def reciprocal_family(family: ParametricFamily) -> ParametricFamily:
    if isinstance(family, ReciprocalFamily):
        return family.of
    return ReciprocalFamily(family)


class ReducedComposite(ParametricFamily):
    """Composite RDs re-indexed by phi = |theta| >= 0 (their +theta branch).

    phi is a decreasing parameter; the family is non-intersecting but its
    phi = 0 member is the envelope, not the unit step, so it is incomplete.
    """

    direction = Direction.DECREASING

    def __init__(self, of: ParametricFamily):
        self.of = of
        self.x_domain = of.x_domain
        self.theta_domain = Interval(0.0, of.theta_domain.hi)
        self.x_window = of.x_window
        self.theta_window = Interval(0.0, of.theta_window.hi)
        self.has_density = of.has_density
        self.has_theta_derivative = of.has_theta_derivative

    def cdf(self, x, theta):
        return self.of.cdf(x, theta)

    def density(self, x, theta):
        return self.of.density(x, theta)

    def theta_derivative(self, x, theta):
        return self.of.theta_derivative(x, theta)

    def to_spec(self) -> dict:
        return {"kind": "composite_reduced", "of": self.of.to_spec()}


class FlattenedNormal(ParametricFamily):
    """Normal translation family that touches at one x.

    cdf(x, theta) = N(x + psi(x, theta)); at x = anchor, psi is held at
    theta_lo for theta in [theta_lo, theta_hi], so the RDs for that theta
    interval share a single point and lie on the same side of each other
    elsewhere. Away from the anchor psi is strictly increasing in theta.
    """

    direction = Direction.INCREASING

    def __init__(self, theta_lo: float = 0.2, theta_hi: float = 0.4, anchor: float = 0.0):
        if not theta_hi > theta_lo:
            raise DomainError("theta_hi must exceed theta_lo")
        self.theta_lo, self.theta_hi, self.anchor = float(theta_lo), float(theta_hi), float(anchor)
        lo, hi = NormalBase().tail_bounds(EPS_TAIL)
        self.x_window = Interval(lo, hi)
        self.theta_window = Interval(lo - hi, hi - lo)

    def _psi(self, x, theta):
        x = np.asarray(x, dtype=float)
        theta = np.asarray(theta, dtype=float)
        w = np.minimum(1.0, np.abs(x - self.anchor))
        width = self.theta_hi - self.theta_lo
        mid = self.theta_lo + w * (theta - self.theta_lo)
        return np.where(
            theta < self.theta_lo, theta, np.where(theta > self.theta_hi, theta - (1.0 - w) * width, mid)
        )

    def cdf(self, x, theta):
        return special.ndtr(np.asarray(x, dtype=float) + self._psi(x, theta))

    def to_spec(self) -> dict:
        return {
            "kind": "flattened_normal",
            "theta_lo": self.theta_lo,
            "theta_hi": self.theta_hi,
            "anchor": self.anchor,
        }


class CallableFamily(ParametricFamily):
    """Wraps an arbitrary vectorized cdf; used for ad-hoc fixtures."""

    def __init__(
        self,
        cdf: Callable,
        x_window: tuple[float, float],
        theta_window: tuple[float, float],
        *,
        direction: Direction = Direction.UNKNOWN,
        name: str = "callable",
        x_domain: tuple[float, float] | None = None,
        theta_domain: tuple[float, float] | None = None,
    ):
        self._cdf = cdf
        self.x_window = Interval(*map(float, x_window))
        self.theta_window = Interval(*map(float, theta_window))
        if x_domain is not None:
            self.x_domain = Interval(*map(float, x_domain))
        if theta_domain is not None:
            self.theta_domain = Interval(*map(float, theta_domain))
        self.direction = direction
        self.name = name

    def cdf(self, x, theta):
        x, theta = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(theta, dtype=float))
        return np.asarray(self._cdf(x, theta), dtype=float) + 0.0 * x

    def to_spec(self) -> dict:
        return {"kind": "callable", "name": self.name}


# ---------------------------------------------------------------------------
# JSON family specifications
# ---------------------------------------------------------------------------


def _number(spec: dict, key: str, path: str) -> float:
    if key not in spec:
        raise SpecError("missing required key", field=f"{path}{key}")
    val = spec[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise SpecError(f"expected a number, got {val!r}", field=f"{path}{key}")
    return float(val)


def family_from_spec(spec: Any, _path: str = "") -> ParametricFamily:
    """Build a family from its JSON-compatible description."""
    if not isinstance(spec, dict):
        raise SpecError(f"expected an object, got {type(spec).__name__}", field=_path.rstrip(".") or None)
    kind = spec.get("kind")
    try:
        if kind == "joined_uniform":
            return JoinedUniform(
                _number(spec, "a", _path), _number(spec, "b", _path), _number(spec, "theta_T", _path)
            )
        if kind == "translation":
            if "base" not in spec:
                raise SpecError("missing required key", field=f"{_path}base")
            return TranslationFamily(make_base(spec["base"]))
        if kind in ("abs_x", "reciprocal", "composite_reduced"):
            if "of" not in spec:
                raise SpecError("missing required key", field=f"{_path}of")
            inner = family_from_spec(spec["of"], f"{_path}of.")
            if kind == "abs_x":
                return AbsComposite(inner)
            if kind == "reciprocal":
                return reciprocal_family(inner)
            return ReducedComposite(inner)
        if kind == "flattened_normal":
            return FlattenedNormal(
                spec.get("theta_lo", 0.2), spec.get("theta_hi", 0.4), spec.get("anchor", 0.0)
            )
    except DomainError as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(str(exc), field=f"{_path}kind") from exc
    raise SpecError(f"unknown family kind {kind!r}", field=f"{_path}kind")


def load_family(path: str | Path) -> ParametricFamily:
    return family_from_text(Path(path).read_text(encoding="utf-8"))


def family_from_text(text: str) -> ParametricFamily:
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(exc.msg, line=exc.lineno) from exc
    return family_from_spec(spec)


@dataclass(frozen=True)
class Fixture:
    name: str
    family: ParametricFamily
    symmetric_theta: bool = False


def builtin_fixtures() -> list[Fixture]:
    """The families exercised by the monotone-sections vs non-intersection grid checks."""
    normal = normal_translation()
    return [
        Fixture("joined_uniform", JoinedUniform(1.0, 4.0, 0.5)),
        Fixture("evd", evd_translation()),
        Fixture("normal", normal),
        Fixture("gapped", gapped_translation(1.0)),
        Fixture("flattened_normal", FlattenedNormal()),
        Fixture("abs_x_normal", AbsComposite(normal), symmetric_theta=True),
        Fixture("abs_x_evd", AbsComposite(evd_translation()), symmetric_theta=True),
        Fixture("composite_reduced_normal", ReducedComposite(AbsComposite(normal))),
    ]
