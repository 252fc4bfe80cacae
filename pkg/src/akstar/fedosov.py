"""Flat-connection recursion and the star product.

The graded operators on Wick-algebra-valued forms:

* ``delta``      : e^a wedge d/dz^a           (deg_s -> deg_s - 1, deg_a + 1)
* ``delta_inv``  : (p+q)^{-1} z^a i(e_a)      on (p, q)-bihomogeneous terms
* ``sigma``      : projection on deg_s = deg_a = 0 (the v-series part)
* ``dconn_apply``: lift of the canonical d-connection — frame derivative on
  coefficients, linear transport on fiber variables, anholonomic exterior
  action on the form factor.

``delta_inv`` uses the interior product and carries no imaginary unit: that
is the unique normalization under which
``a = (delta delta_inv + delta_inv delta + sigma)(a)`` holds identically,
and that identity is what the recursion rests on.

From the frame torsion and curvature the machine builds the quadratic
elements T-hat and R-hat, solves

    delta r = T-hat + R-hat + D-check r - (i/v) r o r

degree by degree in Deg = 2 deg_v + deg_s (gauge: delta_inv r = 0, deg_a
r = 1), records the per-degree defect of that equation, and exposes the
flat connection D-hat = -delta + D-check - (i/v) ad(r), the recursive lift
tau inverting sigma on flat sections, and the star product
f * g = sigma(tau(f) o tau(g)) with coefficients per power of v.

For alpha = 1 the recursion closes to round-off; for alpha < 1 the frame
operators are not derivations, the closure argument is unavailable, and
the residuals are the measurement of that obstruction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FlatnessObstructionError, MalformedInputError
from .expr import Signomial
from .geometry import GeometryBundle
from .wick import WickAlgebra, WickElement, sort_word, wedge_merge


# ---------------------------------------------------------------------------
# grading-shift operators (geometry-free)
# ---------------------------------------------------------------------------


def delta(w: WickElement) -> WickElement:
    out = WickElement.zero(w.dim)
    for (v, z, forms), c in w.terms.items():
        for g in range(w.dim):
            if z[g] == 0:
                continue
            merged = wedge_merge((g,), forms)
            if merged is None:
                continue
            sign, nf = merged
            nz = list(z)
            nz[g] -= 1
            out = out + WickElement.from_term(
                w.dim, v, tuple(nz), nf, c.scale(sign * z[g])
            )
    return out


def delta_inv(w: WickElement) -> WickElement:
    out = WickElement.zero(w.dim)
    for (v, z, forms), c in w.terms.items():
        p = sum(z)
        q = len(forms)
        if p + q == 0:
            continue
        for m, g in enumerate(forms):
            sign = -1.0 if m % 2 else 1.0
            nz = list(z)
            nz[g] += 1
            nf = forms[:m] + forms[m + 1:]
            out = out + WickElement.from_term(
                w.dim, v, tuple(nz), nf, c.scale(sign / (p + q))
            )
    return out


def sigma(w: WickElement) -> WickElement:
    """deg_s = deg_a = 0 part; the v-series of scalar coefficients."""
    zero_z = (0,) * w.dim
    return WickElement(
        w.dim,
        {k: c for k, c in w.terms.items() if k[1] == zero_z and k[2] == ()},
    )


def sigma_series(w: WickElement) -> dict:
    """v-power -> signomial coefficient of the scalar part."""
    out = {}
    for (v, z, forms), c in sigma(w).terms.items():
        out[v] = out.get(v, Signomial.zero(w.dim)) + c
    return out


# ---------------------------------------------------------------------------
# machine bound to one geometry
# ---------------------------------------------------------------------------


class FedosovMachine:
    """Operator package for one configuration.

    Precomputes the Wick algebra, the nonzero connection/anholonomy entries
    used by the connection lift, and the torsion/curvature elements.
    """

    def __init__(self, bundle: GeometryBundle):
        self.bundle = bundle
        self.dim = bundle.ctx.dim
        self.algebra = WickAlgebra(bundle.symp.lam)
        # nonzero Gamma entries grouped by wedge direction:
        # transport term  - Gamma(tgt, dir, src) z^src d/dz^tgt
        self.gamma_by_dir = []
        for al in range(self.dim):
            entries = []
            for tgt in range(self.dim):
                for src in range(self.dim):
                    gam = bundle.gamma(tgt, al, src)
                    if not gam.is_zero:
                        entries.append((tgt, src, gam))
            self.gamma_by_dir.append(entries)
        # nonzero anholonomy entries with ordered index pairs
        self.w_entries = []
        for g in range(self.dim):
            for a in range(self.dim):
                for b in range(a + 1, self.dim):
                    wgab = bundle.anholonomy[g][a][b]
                    if not wgab.is_zero:
                        self.w_entries.append((g, a, b, wgab))
        self.t_hat = self._torsion_element()
        self.r_hat = self._curvature_element()

    # -- quadratic elements --------------------------------------------------

    def _torsion_element(self) -> WickElement:
        bundle = self.bundle
        dim = self.dim
        out = WickElement.zero(dim)
        for a in range(dim):
            for b in range(a + 1, dim):
                for g in range(dim):
                    coeff = Signomial.zero(dim)
                    for t in range(dim):
                        th = bundle.symp.theta_lower[g][t]
                        tt = bundle.torsion.full[t][a][b]
                        if th.is_zero or tt.is_zero:
                            continue
                        coeff = coeff + th * tt
                    if coeff.is_zero:
                        continue
                    z = [0] * dim
                    z[g] = 1
                    out = out + WickElement.from_term(dim, 0, tuple(z), (a, b), coeff)
        return out

    def _curvature_element(self) -> WickElement:
        bundle = self.bundle
        dim = self.dim
        out = WickElement.zero(dim)
        for a in range(dim):
            for b in range(a + 1, dim):
                for g in range(dim):
                    for f in range(dim):
                        coeff = Signomial.zero(dim)
                        for t in range(dim):
                            th = bundle.symp.theta_lower[g][t]
                            rr = bundle.curvature.full[t][f][a][b]
                            if th.is_zero or rr.is_zero:
                                continue
                            coeff = coeff + th * rr
                        if coeff.is_zero:
                            continue
                        z = [0] * dim
                        z[g] += 1
                        z[f] += 1
                        out = out + WickElement.from_term(
                            dim, 0, tuple(z), (a, b), coeff.scale(0.5)
                        )
        return out

    # -- connection lift -------------------------------------------------------

    def dconn_apply(self, w: WickElement) -> WickElement:
        """D-check: raises deg_a by one, preserves the total degree."""
        bundle = self.bundle
        dim = self.dim
        out = WickElement.zero(dim)
        for (v, z, forms), c in w.terms.items():
            for al in range(dim):
                merged = wedge_merge((al,), forms)
                if merged is None:
                    continue
                sign, nf = merged
                base = bundle.e(c, al)
                if not base.is_zero:
                    out = out + WickElement.from_term(
                        dim, v, z, nf, base.scale(sign)
                    )
                for tgt, src, gam in self.gamma_by_dir[al]:
                    if z[tgt] == 0:
                        continue
                    coeff = (gam * c).scale(-sign * z[tgt])
                    nz = list(z)
                    nz[tgt] -= 1
                    nz[src] += 1
                    out = out + WickElement.from_term(dim, v, tuple(nz), nf, coeff)
            if forms:
                for m, g in enumerate(forms):
                    rest = forms[:m] + forms[m + 1:]
                    msign = -1.0 if m % 2 else 1.0
                    for gg, a, b, wgab in self.w_entries:
                        if gg != g:
                            continue
                        srt = sort_word((a, b) + rest)
                        if srt is None:
                            continue
                        ssign, nf = srt
                        out = out + WickElement.from_term(
                            dim, v, z, nf, (wgab * c).scale(-msign * ssign)
                        )
        return out

    # -- operator-identity residuals -------------------------------------------

    def _ad(self, x: WickElement, y: WickElement) -> WickElement:
        return self.algebra.commutator(x, y)

    def comf_delta_residual(self, probe: WickElement, points=None) -> float:
        """[D-check, delta] - (i/v) ad(T-hat) on a probe."""
        lhs = self.dconn_apply(delta(probe)) + delta(self.dconn_apply(probe))
        comm = self._ad(self.t_hat, probe)
        scale = self.t_hat.coeff_norm() * probe.coeff_norm()
        rhs = comm.scale(1j).div_v(scale) if not comm.is_zero else comm
        return _norm(lhs - rhs, points)

    def comf_dsq_residual(self, probe: WickElement, points=None) -> float:
        """D-check^2 + (i/v) ad(R-hat) on a probe."""
        lhs = self.dconn_apply(self.dconn_apply(probe))
        comm = self._ad(self.r_hat, probe)
        scale = self.r_hat.coeff_norm() * probe.coeff_norm()
        rhs = comm.scale(-1j).div_v(scale) if not comm.is_zero else comm
        return _norm(lhs - rhs, points)

    def delta_torsion_residual(self, points=None) -> float:
        return _norm(delta(self.t_hat), points)

    def delta_curvature_residual(self, points=None) -> float:
        return _norm(delta(self.r_hat) - self.dconn_apply(self.t_hat), points)

    # -- recursion ---------------------------------------------------------------

    def solve_r(self, K: int, strict: bool | None = None, residual_tol: float = 1e-9):
        """Solve the flatness equation degree by degree up to Deg K + 2.

        ``strict`` defaults to alpha = 1 (where the defect must vanish);
        fractional runs record the per-degree residuals instead.
        """
        if K < 2:
            raise MalformedInputError(f"truncation order must be >= 2, got {K}")
        if strict is None:
            strict = self.bundle.ctx.classical
        dim = self.dim
        r_comp: dict[int, WickElement] = {}
        rhs_store: dict[int, WickElement] = {}

        def rhs_at(m: int) -> WickElement:
            rhs = self.t_hat.component(m) + self.r_hat.component(m)
            prev = r_comp.get(m)
            if prev is not None and not prev.is_zero:
                rhs = rhs + self.dconn_apply(prev)
            conv = WickElement.zero(dim)
            pair_scale = 0.0
            for j in range(2, m + 1):
                k = m + 2 - j
                if k < 2:
                    continue
                rj = r_comp.get(j)
                rk = r_comp.get(k)
                if rj is None or rk is None or rj.is_zero or rk.is_zero:
                    continue
                pair_scale = max(pair_scale, rj.coeff_norm() * rk.coeff_norm())
                conv = conv + self.algebra.product(rj, rk)
            if not conv.is_zero:
                rhs = rhs + conv.scale(-1j).div_v(pair_scale)
            return rhs

        for m in range(1, K + 2):
            rhs = rhs_at(m)
            rhs_store[m] = rhs
            r_comp[m + 1] = delta_inv(rhs)

        residuals: dict[int, float] = {}
        for m in range(1, K + 2):
            res = (delta(r_comp[m + 1]) - rhs_store[m]).coeff_norm()
            residuals[m] = res
            if strict and res > residual_tol:
                raise FlatnessObstructionError(
                    f"flatness defect {res:.3e} at total degree {m} exceeds "
                    f"{residual_tol:.1e}",
                    degree=m,
                    residual=res,
                )
        return FedosovState(
            machine=self,
            K=K,
            r_components={d: r_comp[d] for d in range(2, K + 3)},
            residuals=residuals,
        )


def _norm(w: WickElement, points=None) -> float:
    return w.coeff_norm() if points is None else w.sample_norm(points)


def torsion_element(bundle: GeometryBundle) -> WickElement:
    """(deg_s, deg_a) = (1, 2) element pairing torsion against theta."""
    return FedosovMachine(bundle).t_hat


def curvature_element(bundle: GeometryBundle) -> WickElement:
    """(deg_s, deg_a) = (2, 2) element pairing curvature against theta."""
    return FedosovMachine(bundle).r_hat


@dataclass
class FedosovState:
    """Solved recursion data: r per total degree plus equation defects.

    Safe to share once solved; the only mutation is an idempotent memo of
    the summed element.
    """

    machine: FedosovMachine
    K: int
    r_components: dict
    residuals: dict
    _r_total: WickElement | None = field(default=None, repr=False)

    @property
    def bundle(self) -> GeometryBundle:
        return self.machine.bundle

    def r_total(self) -> WickElement:
        if self._r_total is None:
            total = WickElement.zero(self.machine.dim)
            for d in sorted(self.r_components):
                total = total + self.r_components[d]
            self._r_total = total
        return self._r_total

    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def gauge_residual(self) -> float:
        """delta_inv r = 0 normalization, checked component-wise."""
        return max(
            (delta_inv(c).coeff_norm() for c in self.r_components.values()),
            default=0.0,
        )


# ---------------------------------------------------------------------------
# flat connection, lift, star product
# ---------------------------------------------------------------------------


def flat_d(w: WickElement, state: FedosovState) -> WickElement:
    """D-hat = -delta + D-check - (i/v) ad(r)."""
    machine = state.machine
    out = -delta(w) + machine.dconn_apply(w)
    r = state.r_total()
    if not r.is_zero and not w.is_zero:
        comm = machine.algebra.commutator(r, w)
        if not comm.is_zero:
            out = out - comm.scale(1j).div_v(r.coeff_norm() * w.coeff_norm())
    return out


def flat_d_squared_residual(probe: WickElement, state: FedosovState, points=None) -> float:
    """Defect of D-hat^2 = 0 on a probe, on degrees the truncation covers.

    With r solved through Deg K + 2, the Deg-m component of D-hat^2 a is
    complete only for m <= Deg(a) + K - 1; higher components would need
    deeper recursion data and are excluded rather than misreported.  The
    intermediate result is truncated before the second application so that
    the excluded degrees are never differentiated (for fractional alpha
    they can carry exponents outside the differentiable class).
    """
    degs = probe.total_degrees()
    if not degs:
        return 0.0
    bound = max(degs) + state.K - 1
    first = flat_d(probe, state).truncate(bound + 1)
    # of the top slice only -delta reaches the reported window; applying
    # the full operator there would differentiate coefficients whose fate
    # is to be discarded
    top = first.component(bound + 1)
    val = flat_d(first.truncate(bound), state) - delta(top)
    return _norm(val.truncate(bound), points)


def tau_components(f: Signomial, state: FedosovState, order: int) -> dict:
    """Deg-homogeneous components of the lift, 0 through ``order``."""
    if order > state.K + 1:
        raise MalformedInputError(
            f"lift order {order} needs the recursion solved past Deg {order + 1}; "
            f"have K = {state.K}"
        )
    machine = state.machine
    comps = {0: WickElement.from_signomial(f)}
    for k in range(order):
        rhs = machine.dconn_apply(comps[k])
        for l in range(0, k + 1):
            rl = state.r_components.get(l + 2)
            tk = comps.get(k - l)
            if rl is None or rl.is_zero or tk is None or tk.is_zero:
                continue
            comm = machine.algebra.commutator(rl, tk)
            if not comm.is_zero:
                rhs = rhs - comm.scale(1j).div_v(rl.coeff_norm() * tk.coeff_norm())
        comps[k + 1] = delta_inv(rhs)
    return comps


def tau_lift(f: Signomial, state: FedosovState, order: int) -> WickElement:
    comps = tau_components(f, state, order)
    out = WickElement.zero(state.machine.dim)
    for k in sorted(comps):
        out = out + comps[k]
    return out


def flat_section_residual(f: Signomial, state: FedosovState, order: int, points=None) -> float:
    """Defect of D-hat tau(f) = 0 through Deg ``order - 1``."""
    lift = tau_lift(f, state, order)
    return _norm(flat_d(lift, state).truncate(order - 1), points)


@dataclass(frozen=True)
class StarCoefficients:
    """Bilinear star-product data: f * g = sum_r C_r(f, g) v^r."""

    f: Signomial
    g: Signomial
    coeffs: tuple

    def order(self) -> int:
        return len(self.coeffs) - 1

    def series_eval(self, point, v: complex) -> complex:
        return sum(c.eval_at(point) * v ** r for r, c in enumerate(self.coeffs))


def star(f: Signomial, g: Signomial, state: FedosovState, order: int) -> StarCoefficients:
    """Star product through v^order: sigma(tau(f) o tau(g)).

    Exactness through the requested order needs lifts through Deg 2*order,
    hence a state solved with K >= 2*order - 1.
    """
    if order < 0:
        raise MalformedInputError("order must be nonnegative")
    lift_deg = 2 * order
    if lift_deg > 0 and state.K < lift_deg - 1:
        raise MalformedInputError(
            f"star order {order} needs lifts through Deg {lift_deg}; "
            f"solve with K >= {lift_deg - 1} (have {state.K})"
        )
    tf = tau_lift(f, state, lift_deg) if lift_deg else WickElement.from_signomial(f)
    tg = tau_lift(g, state, lift_deg) if lift_deg else WickElement.from_signomial(g)
    series = sigma_series(state.machine.algebra.product(tf, tg))
    dim = state.machine.dim
    coeffs = tuple(series.get(r, Signomial.zero(dim)) for r in range(order + 1))
    return StarCoefficients(f=f, g=g, coeffs=coeffs)


def star_series(series_a: tuple, g: Signomial, state: FedosovState, order: int) -> tuple:
    """Multiply a v-series of signomials by g on the right, v-bilinearly."""
    dim = state.machine.dim
    out = [Signomial.zero(dim) for _ in range(order + 1)]
    for shift, coeff in enumerate(series_a[: order + 1]):
        if coeff.is_zero:
            continue
        inner = star(coeff, g, state, order - shift)
        for r, c in enumerate(inner.coeffs):
            out[shift + r] = out[shift + r] + c
    return tuple(out)


def make_probes(bundle: GeometryBundle, seed: int, count: int = 10, max_s: int = 3):
    """Seeded monomial probes with deg_s <= max_s and deg_a <= 1.

    Coefficients are drawn from the coordinate observables, matching the
    fields the star product is exercised on.
    """
    dim = bundle.ctx.dim
    rng = np.random.default_rng(seed)
    pool = [Signomial.constant(dim, 1.0)] + [
        Signomial.coordinate(dim, i) for i in range(dim)
    ]
    probes = []
    for _ in range(count):
        z = [0] * dim
        for _ in range(int(rng.integers(0, max_s + 1))):
            z[int(rng.integers(dim))] += 1
        forms = ()
        if rng.integers(2):
            forms = (int(rng.integers(dim)),)
        coeff = pool[int(rng.integers(len(pool)))]
        probe = WickElement.from_term(dim, 0, tuple(z), forms, coeff)
        if probe.is_zero:
            probe = WickElement.unit(dim)
        probes.append(probe)
    return probes
