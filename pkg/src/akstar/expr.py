"""Signomial scalar fields with classical and Caputo-type differentiation.

A signomial is a finite sum ``sum_k c_k * u^(p_k)`` over the ``2n``
coordinates ``u = (x^1..x^n, y^1..y^n)``, with complex coefficients and
real (possibly negative, possibly irrational) exponent vectors.  The class
is closed under addition, multiplication, classical partial derivatives
and the order-``alpha`` left Caputo derivative at base point 0, which acts
term-wise through the generalized power rule

    u^p  ->  Gamma(p+1) / Gamma(p+1-alpha) * u^(p-alpha)       (p != 0)
    const -> 0.

For ``p > 0`` the rule agrees with the defining singular-kernel integral
(see :mod:`akstar.caputo_quad` for the independent quadrature evaluation);
for non-integer ``p < 0`` it is the analytic continuation, which the
geometry layer needs because connection and curvature fields of x-coupled
configurations carry negative exponents.  A negative *integer* exponent
puts the numerator Gamma at a pole and raises
:class:`~akstar.errors.FractionalDomainError`; a pole in the denominator
makes the term vanish instead.

Evaluation is defined only at points with strictly positive coordinates.
Values are immutable after construction and every operation is pure, so
instances are safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from scipy.special import gammaln, gammasgn

from .errors import (
    EvaluationDomainError,
    ExpressionClassError,
    FractionalDomainError,
    MalformedInputError,
)

# Exponents are snapped to this decimal grid so that merging by exact key
# equality survives ulp-level drift when exponents are reached through
# different additive paths (e.g. (2 - a) - a versus 2 - 2a).
EXPONENT_DECIMALS = 12
# Relative magnitude below which a coefficient counts as cancellation debris.
DEAD_ZONE = 1e-13

ExponentVector = tuple[float, ...]


def _snap(value: float) -> float:
    # + 0.0 turns -0.0 into 0.0 so serialized keys are canonical
    return round(float(value), EXPONENT_DECIMALS) + 0.0


def _is_nonpositive_integer(value: float) -> bool:
    return value < 0.5 and abs(value - round(value)) <= 1e-12


@lru_cache(maxsize=None)
def power_rule_factor(p: float, alpha: float) -> float:
    """Gamma(p+1)/Gamma(p+1-alpha) via log-gamma with sign tracking.

    Returns 0.0 when the denominator sits at a pole; raises
    :class:`FractionalDomainError` when the numerator does (negative
    integer ``p``).
    """
    a = p + 1.0
    b = p + 1.0 - alpha
    if _is_nonpositive_integer(a):
        raise FractionalDomainError(
            f"Gamma({a}) pole: exponent {p} is a negative integer"
        )
    if _is_nonpositive_integer(b):
        return 0.0
    sign = float(gammasgn(a)) * float(gammasgn(b))
    return sign * math.exp(float(gammaln(a)) - float(gammaln(b)))


def _canonical(dim: int, items: Iterable[tuple[complex, Sequence[float]]]) -> dict:
    merged: dict[ExponentVector, complex] = {}
    for coef, exps in items:
        c = complex(coef)
        if not (math.isfinite(c.real) and math.isfinite(c.imag)):
            raise MalformedInputError(f"non-finite coefficient {coef!r}")
        if len(exps) != dim:
            raise MalformedInputError(
                f"exponent vector {list(exps)} has length {len(exps)}, expected {dim}"
            )
        key = []
        for e in exps:
            e = float(e)
            if not math.isfinite(e):
                raise MalformedInputError(f"non-finite exponent {e!r}")
            key.append(_snap(e))
        key = tuple(key)
        merged[key] = merged.get(key, 0j) + c
    if not merged:
        return {}
    top = max(abs(c) for c in merged.values())
    if top == 0.0:
        return {}
    floor = DEAD_ZONE * top
    return {k: c for k, c in merged.items() if abs(c) > floor}


class Signomial:
    """Canonical-form signomial over ``dim`` coordinates.

    ``terms`` maps exponent vectors to complex coefficients; the empty map
    is zero.  Use :meth:`from_terms` (or the convenience constructors) —
    they normalize: like terms merge by exact exponent equality and
    dead-zone debris is dropped.
    """

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, _terms: dict | None = None):
        if dim < 1:
            raise MalformedInputError(f"dimension must be >= 1, got {dim}")
        self.dim = int(dim)
        self.terms = {} if _terms is None else _terms

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_terms(cls, dim: int, raw: Iterable[tuple[complex, Sequence[float]]]) -> "Signomial":
        return cls(dim, _canonical(dim, raw))

    @classmethod
    def zero(cls, dim: int) -> "Signomial":
        return cls(dim, {})

    @classmethod
    def constant(cls, dim: int, value: complex) -> "Signomial":
        return cls.from_terms(dim, [(value, (0.0,) * dim)])

    @classmethod
    def coordinate(cls, dim: int, index: int) -> "Signomial":
        if not 0 <= index < dim:
            raise MalformedInputError(f"coordinate index {index} out of range for dim {dim}")
        exps = [0.0] * dim
        exps[index] = 1.0
        return cls.from_terms(dim, [(1.0, exps)])

    @classmethod
    def monomial(cls, dim: int, coef: complex, exps: Sequence[float]) -> "Signomial":
        return cls.from_terms(dim, [(coef, exps)])

    # -- ring operations ---------------------------------------------------

    def _require_same_dim(self, other: "Signomial") -> None:
        if self.dim != other.dim:
            raise MalformedInputError(
                f"dimension mismatch: {self.dim} vs {other.dim}"
            )

    def __add__(self, other: "Signomial") -> "Signomial":
        self._require_same_dim(other)
        items = [(c, k) for k, c in self.terms.items()]
        items += [(c, k) for k, c in other.terms.items()]
        return Signomial(self.dim, _canonical(self.dim, items))

    def __sub__(self, other: "Signomial") -> "Signomial":
        return self + (-other)

    def __neg__(self) -> "Signomial":
        return Signomial(self.dim, {k: -c for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, Signomial):
            self._require_same_dim(other)
            items = []
            for k1, c1 in self.terms.items():
                for k2, c2 in other.terms.items():
                    items.append((c1 * c2, [a + b for a, b in zip(k1, k2)]))
            return Signomial(self.dim, _canonical(self.dim, items))
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, factor: complex) -> "Signomial":
        c = complex(factor)
        if not (math.isfinite(c.real) and math.isfinite(c.imag)):
            raise MalformedInputError(f"non-finite scale factor {factor!r}")
        if c == 0:
            return Signomial.zero(self.dim)
        return Signomial(self.dim, {k: v * c for k, v in self.terms.items()})

    # -- differentiation ---------------------------------------------------

    def partial(self, coord: int) -> "Signomial":
        """Classical partial derivative (the alpha = 1 backend)."""
        items = []
        for exps, c in self.terms.items():
            p = exps[coord]
            if p == 0.0:
                continue
            key = list(exps)
            key[coord] = p - 1.0
            items.append((c * p, key))
        return Signomial(self.dim, _canonical(self.dim, items))

    def caputo(self, coord: int, ctx: "AlphaContext") -> "Signomial":
        """Left Caputo derivative of order ``ctx.alpha`` in ``coord``.

        Term-wise generalized power rule; other factors of each monomial
        pass through unchanged.  Delegates to :meth:`partial` at alpha = 1.
        """
        if ctx.alpha == 1.0:
            return self.partial(coord)
        items = []
        for exps, c in self.terms.items():
            p = exps[coord]
            if p == 0.0:
                continue
            try:
                fac = power_rule_factor(p, ctx.alpha)
            except FractionalDomainError as err:
                raise FractionalDomainError(
                    f"coordinate {coord}, term with exponents {list(exps)}: {err}"
                ) from None
            if fac == 0.0:
                continue
            key = list(exps)
            key[coord] = p - ctx.alpha
            items.append((c * fac, key))
        return Signomial(self.dim, _canonical(self.dim, items))

    # -- inversion and evaluation -------------------------------------------

    def reciprocal(self) -> "Signomial":
        """Exact inverse of a single-term signomial.

        Multi-term inputs are outside the invertible class and raise
        :class:`ExpressionClassError`.
        """
        if len(self.terms) != 1:
            raise ExpressionClassError(
                f"reciprocal needs exactly one term, got {len(self.terms)}"
            )
        (exps, c), = self.terms.items()
        return Signomial.from_terms(self.dim, [(1.0 / c, [-e for e in exps])])

    def eval_at(self, point: Sequence[float]) -> complex:
        if len(point) != self.dim:
            raise EvaluationDomainError(
                f"point has {len(point)} coordinates, expected {self.dim}"
            )
        for i, u in enumerate(point):
            if not (u > 0.0):
                raise EvaluationDomainError(
                    f"coordinate {i} = {u!r} is not strictly positive"
                )
        total = 0j
        for exps, c in self.terms.items():
            prod = 1.0
            for u, p in zip(point, exps):
                if p != 0.0:
                    prod *= float(u) ** p
            total += c * prod
        return total

    # -- inspection ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def sorted_terms(self) -> list[tuple[ExponentVector, complex]]:
        return sorted(self.terms.items(), key=lambda kv: kv[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Signomial):
            return NotImplemented
        return self.dim == other.dim and self.terms == other.terms

    __hash__ = None

    def __repr__(self) -> str:
        if not self.terms:
            return "<signomial 0>"
        bits = []
        for exps, c in self.sorted_terms():
            mono = "*".join(
                f"u{i}^{e:g}" for i, e in enumerate(exps) if e != 0.0
            )
            bits.append(f"({c:g})" + ("*" + mono if mono else ""))
        return "<signomial " + " + ".join(bits) + ">"


def coeff_distance(a: Signomial, b: Signomial) -> float:
    """Largest coefficient magnitude of a - b (0.0 when identical)."""
    return (a - b).max_abs_coeff()


@dataclass(frozen=True)
class AlphaContext:
    """Differentiation context: order ``alpha`` in (0, 1] and base dimension.

    The derivative order is fixed at one single Caputo step (higher orders
    are composed single-order applications) and the base points of the
    defining integrals are pinned at 0, so only ``alpha`` and ``n`` (number
    of x coordinates; the y block has the same size) vary.  ``alpha = 1``
    selects the classical-derivative backend.
    """

    alpha: float
    n: int

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise MalformedInputError(f"alpha must be in (0, 1], got {self.alpha}")
        if not (isinstance(self.n, int) and self.n >= 1):
            raise MalformedInputError(f"n must be a positive integer, got {self.n!r}")

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def classical(self) -> bool:
        return self.alpha == 1.0

    def deriv(self, f: Signomial, coord: int) -> Signomial:
        """Coordinate derivative in the configured backend."""
        if self.classical:
            return f.partial(coord)
        return f.caputo(coord, self)
