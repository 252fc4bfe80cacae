"""Characteristic forms from the curvature and torsion traces.

The curvature-trace 2-form

    gamma = -(1/4) J^a'_t R^t_{a' a b} e^a ^ e^b

is assembled directly from the constant almost-complex matrix and the
frame curvature (the holomorphic-projector trace collapses to exactly this
contraction, so projectors never materialize).  Alongside it the auxiliary
forms

    mu    = (1/6) J^a'_t T^t_{a' b} e^b
    lam   = d mu
    kappa = -(i/8) J^g'_t R^t_{g' g b} e^g ^ e^b - i lam

satisfy kappa + i lam = (i/2) gamma identically, and the zero-degree
class datum is the representative -(1/(2i)) gamma.  Only the representative
is computed; no cohomology machinery exists at this scale.

The exterior derivative on the nonholonomic co-frame uses the anholonomy
realization d e^g = -(1/2) w^g_{ab} e^a ^ e^b, so d^2 = 0 is assertable at
alpha = 1 only and measured otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import MalformedInputError
from .expr import Signomial
from .geometry import GeometryBundle
from .wick import sort_word


@dataclass(frozen=True)
class AdaptedForm:
    """Differential form with signomial components on the adapted co-frame.

    ``components`` maps strictly increasing index tuples of length
    ``degree`` to coefficients; missing keys are zero.
    """

    degree: int
    dim: int
    components: dict

    def __post_init__(self):
        for key in self.components:
            if len(key) != self.degree or list(key) != sorted(set(key)):
                raise MalformedInputError(f"bad form key {key} for degree {self.degree}")

    @classmethod
    def zero(cls, degree: int, dim: int) -> "AdaptedForm":
        return cls(degree, dim, {})

    @classmethod
    def build(cls, degree: int, dim: int, entries) -> "AdaptedForm":
        """Accumulate (index word, coefficient) pairs with sign tracking."""
        comps: dict = {}
        for word, coeff in entries:
            if coeff.is_zero:
                continue
            srt = sort_word(tuple(word))
            if srt is None:
                continue
            sign, key = srt
            c = coeff.scale(sign) if sign < 0 else coeff
            if key in comps:
                s = comps[key] + c
                if s.is_zero:
                    del comps[key]
                else:
                    comps[key] = s
            else:
                comps[key] = c
        return cls(degree, dim, comps)

    def __add__(self, other: "AdaptedForm") -> "AdaptedForm":
        if self.degree != other.degree or self.dim != other.dim:
            raise MalformedInputError("form shape mismatch")
        comps = dict(self.components)
        for key, c in other.components.items():
            if key in comps:
                s = comps[key] + c
                if s.is_zero:
                    del comps[key]
                else:
                    comps[key] = s
            else:
                comps[key] = c
        return AdaptedForm(self.degree, self.dim, comps)

    def __sub__(self, other: "AdaptedForm") -> "AdaptedForm":
        return self + other.scale(-1.0)

    def scale(self, factor: complex) -> "AdaptedForm":
        if factor == 0:
            return AdaptedForm.zero(self.degree, self.dim)
        return AdaptedForm(
            self.degree, self.dim, {k: c.scale(factor) for k, c in self.components.items()}
        )

    @property
    def is_zero(self) -> bool:
        return not self.components

    def coeff_norm(self) -> float:
        return max((c.max_abs_coeff() for c in self.components.values()), default=0.0)

    def sample_norm(self, points) -> float:
        worst = 0.0
        for c in self.components.values():
            for p in points:
                worst = max(worst, abs(c.eval_at(p)))
        return worst


def exterior_derivative(form: AdaptedForm, bundle: GeometryBundle) -> AdaptedForm:
    """d on the adapted co-frame: frame gradient plus structure-function part."""
    dim = bundle.ctx.dim
    entries = []
    for key, coeff in form.components.items():
        for al in range(dim):
            d = bundle.e(coeff, al)
            if not d.is_zero:
                entries.append(((al,) + key, d))
        for m, g in enumerate(key):
            rest = key[:m] + key[m + 1:]
            msign = -1.0 if m % 2 else 1.0
            for a in range(dim):
                for b in range(a + 1, dim):
                    w = bundle.anholonomy[g][a][b]
                    if w.is_zero:
                        continue
                    entries.append(((a, b) + rest, (w * coeff).scale(-msign)))
    return AdaptedForm.build(form.degree + 1, dim, entries)


def chern_weyl(bundle: GeometryBundle) -> AdaptedForm:
    """Curvature-trace 2-form gamma."""
    dim = bundle.ctx.dim
    J = bundle.symp.J
    entries = []
    for a in range(dim):
        for b in range(a + 1, dim):
            acc = Signomial.zero(dim)
            for t in range(dim):
                for ap in range(dim):
                    if J[ap][t] == 0.0:
                        continue
                    r = bundle.curvature.full[t][ap][a][b]
                    if not r.is_zero:
                        acc = acc + r.scale(J[ap][t])
            if not acc.is_zero:
                entries.append(((a, b), acc.scale(-0.25)))
    return AdaptedForm.build(2, dim, entries)


def lemma_forms(bundle: GeometryBundle):
    """The (mu, lam, kappa) triple built from torsion and curvature traces."""
    dim = bundle.ctx.dim
    J = bundle.symp.J
    mu_entries = []
    for b in range(dim):
        acc = Signomial.zero(dim)
        for t in range(dim):
            for ap in range(dim):
                if J[ap][t] == 0.0:
                    continue
                tt = bundle.torsion.full[t][ap][b]
                if not tt.is_zero:
                    acc = acc + tt.scale(J[ap][t])
        if not acc.is_zero:
            mu_entries.append(((b,), acc.scale(1.0 / 6.0)))
    mu = AdaptedForm.build(1, dim, mu_entries)
    lam = exterior_derivative(mu, bundle)

    kappa_entries = []
    for g in range(dim):
        for b in range(g + 1, dim):
            acc = Signomial.zero(dim)
            for t in range(dim):
                for gp in range(dim):
                    if J[gp][t] == 0.0:
                        continue
                    r = bundle.curvature.full[t][gp][g][b]
                    if not r.is_zero:
                        acc = acc + r.scale(J[gp][t])
            if not acc.is_zero:
                kappa_entries.append(((g, b), acc.scale(-0.125j)))
    kappa = AdaptedForm.build(2, dim, kappa_entries) - lam.scale(1j)
    return mu, lam, kappa


def c0_representative(gamma: AdaptedForm) -> AdaptedForm:
    """Representative 2-form of the zero-degree class datum: -(1/(2i)) gamma.

    Only the representative is emitted; extracting the de Rham class is out
    of reach (and out of scope) for this engine.
    """
    return gamma.scale(0.5j)
