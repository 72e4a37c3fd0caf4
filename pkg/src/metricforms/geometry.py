"""Geometric objects along two analytical routes.

The classical route is the textbook pipeline g -> Christoffel -> Riemann
-> Ricci -> Einstein and serves as the verification oracle throughout.
The factored route rebuilds the same objects from a form set A with
A (.) A = g and its derived objects:

    F_Iab = d A_I            (antisymmetrized coordinate derivative)
    S_Iab = sym cov. deriv.  (symmetric part of nabla A, F-determined)
    J_Iabc = nabla_a F_Ibc   (pre-current)
    J_Ib   = nabla^a F_Iab   (current, trace of the raised pre-current)

and the three-part curvature split R = R(c) + R(f) + R(s) built from
currents, F squares, and S squares respectively.  Every covariant
derivative on the factored route uses the classical connection, so a
discrepancy between routes is attributable to the factored formulas and
not to compounded connection error.

Index layout of component arrays (set axis first where present):
Gamma[c,a,b], F[I,a,b], S[I,a,b], J_pre[I,a,b,c] = nabla_a F_Ibc,
J[I,b], Riemann[a,b,c,d].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .chart import Chart
from .errors import NumericFaultError, TensorError
from . import expr as ex
from .expr import Differentiator, Evaluator, Expr
from .factorization import FormSet
from .tensor import MetricField, Tensor, max_abs

#: residual tolerances by derivative depth of the identity being checked
TOL_FIRST_DERIV = 1e-9
TOL_SECOND_DERIV = 1e-8
TOL_THIRD_DERIV = 1e-7
TOL_EXACT_CONSTRUCTION = 1e-12
TOL_IMAG_RESIDUE = 1e-10
TOL_GEODESIC = 1e-6


@dataclass
class Connection:
    """Levi-Civita connection components, all-lower and mixed."""

    chart: Chart
    lower: Tensor    # Gamma_cab
    mixed: Tensor    # Gamma^c_ab
    route: str       # "classical" | "factored"


def _partials(chart: Chart, comps: np.ndarray) -> list[np.ndarray]:
    """d[a][idx] = d/dx_a comps[idx], one shared-cache differentiator per a."""
    out = []
    for coord in chart.coords:
        d = Differentiator(coord)
        arr = np.empty(comps.shape, dtype=object)
        for idx in np.ndindex(comps.shape):
            arr[idx] = d(comps[idx])
        out.append(arr)
    return out


def _mixed_from_lower(lower: np.ndarray, g_inv: Tensor, n: int) -> np.ndarray:
    mixed = np.empty((n, n, n), dtype=object)
    for a in range(n):
        for b in range(a, n):
            for c in range(n):
                mixed[c, a, b] = ex.simplify(ex.add(
                    *[ex.mul(g_inv.comps[c, d], lower[d, a, b])
                      for d in range(n)]))
                mixed[c, b, a] = mixed[c, a, b]
    return mixed


def christoffel_classical(g: MetricField, g_inv: Tensor) -> Connection:
    """Gamma_cab = (d_a g_cb + d_b g_ca - d_c g_ab) / 2."""
    chart = g.chart
    n = chart.dim
    dg = _partials(chart, g.comps)
    lower = np.empty((n, n, n), dtype=object)
    for a in range(n):
        for b in range(a, n):
            for c in range(n):
                lower[c, a, b] = ex.simplify(ex.mul(ex.HALF, ex.add(
                    dg[a][c, b], dg[b][c, a], ex.neg(dg[c][a, b]))))
                lower[c, b, a] = lower[c, a, b]
    mixed = _mixed_from_lower(lower, g_inv, n)
    return Connection(chart, Tensor(chart, lower, ("l", "l", "l")),
                      Tensor(chart, mixed, ("u", "l", "l")), "classical")


def sym_partial(forms: FormSet) -> Tensor:
    """P[I,a,b] = symmetrized coordinate derivative of the forms."""
    a_comps = forms.as_tensor().comps
    chart = forms.chart
    n = chart.dim
    m = a_comps.shape[0]
    da = _partials(chart, a_comps)
    p = np.empty((m, n, n), dtype=object)
    for i in range(m):
        for a in range(n):
            for b in range(a, n):
                p[i, a, b] = ex.mul(ex.HALF, ex.add(da[a][i, b], da[b][i, a]))
                p[i, b, a] = p[i, a, b]
    return Tensor(chart, p, ("l", "l"), set_indexed=True)


def christoffel_factored(forms: FormSet, f: Tensor, g_inv: Tensor) -> Connection:
    """Connection rebuilt from the form set:

    Gamma_cab = A_c (.) sym dA_ab + [A_a (.) F_bc + A_b (.) F_ac] / 2
    """
    chart = forms.chart
    n = chart.dim
    a_comps = forms.as_tensor().comps
    m = a_comps.shape[0]
    p = sym_partial(forms).comps
    fc = f.comps
    lower = np.empty((n, n, n), dtype=object)
    for a in range(n):
        for b in range(a, n):
            for c in range(n):
                terms = [ex.mul(a_comps[i, c], p[i, a, b]) for i in range(m)]
                cross = [ex.mul(a_comps[i, a], fc[i, b, c]) for i in range(m)]
                cross += [ex.mul(a_comps[i, b], fc[i, a, c]) for i in range(m)]
                lower[c, a, b] = ex.simplify(ex.add(
                    *terms, ex.mul(ex.HALF, ex.add(*cross))))
                lower[c, b, a] = lower[c, a, b]
    mixed = _mixed_from_lower(lower, g_inv, n)
    return Connection(chart, Tensor(chart, lower, ("l", "l", "l")),
                      Tensor(chart, mixed, ("u", "l", "l")), "factored")


def exterior_derivative(forms: FormSet) -> Tensor:
    """F[I,a,b] = d_a A_Ib - d_b A_Ia; antisymmetric by construction."""
    chart = forms.chart
    n = chart.dim
    a_comps = forms.as_tensor().comps
    m = a_comps.shape[0]
    da = _partials(chart, a_comps)
    f = np.empty((m, n, n), dtype=object)
    for i in range(m):
        for a in range(n):
            f[i, a, a] = ex.ZERO
            for b in range(a + 1, n):
                f[i, a, b] = ex.simplify(ex.sub(da[a][i, b], da[b][i, a]))
                f[i, b, a] = ex.neg(f[i, a, b])
    return Tensor(chart, f, ("l", "l"), set_indexed=True)


def sym_covariant_derivative(forms: FormSet, conn: Connection) -> Tensor:
    """S[I,a,b] = sym part of nabla_a A_Ib, via the classical connection."""
    if conn.route != "classical":
        raise TensorError("the direct symmetric derivative is defined "
                          "against the classical connection")
    chart = forms.chart
    n = chart.dim
    a_comps = forms.as_tensor().comps
    m = a_comps.shape[0]
    p = sym_partial(forms).comps
    gm = conn.mixed.comps
    s = np.empty((m, n, n), dtype=object)
    for i in range(m):
        for a in range(n):
            for b in range(a, n):
                s[i, a, b] = ex.simplify(ex.sub(p[i, a, b], ex.add(
                    *[ex.mul(gm[c, a, b], a_comps[i, c]) for c in range(n)])))
                s[i, b, a] = s[i, a, b]
    return Tensor(chart, s, ("l", "l"), set_indexed=True)


def sym_derivative_via_factors(forms: FormSet, f: Tensor,
                               g_inv: Tensor) -> Tensor:
    """S rebuilt from F alone:

    S[J,a,b] = -A_J^c [A_a (.) F_bc + A_b (.) F_ac] / 2

    Valid because the form rows are orthonormal against the inverse
    metric (A_Ic A_J^c = delta_IJ).
    """
    chart = forms.chart
    n = chart.dim
    a_comps = forms.as_tensor().comps
    m = a_comps.shape[0]
    fc = f.comps
    a_up = _raise_set_vector(a_comps, g_inv, n, m)
    s = np.empty((m, n, n), dtype=object)
    for j in range(m):
        for a in range(n):
            for b in range(a, n):
                terms = []
                for c in range(n):
                    inner = [ex.mul(a_comps[i, a], fc[i, b, c])
                             for i in range(m)]
                    inner += [ex.mul(a_comps[i, b], fc[i, a, c])
                              for i in range(m)]
                    terms.append(ex.mul(a_up[j, c], ex.add(*inner)))
                s[j, a, b] = ex.simplify(
                    ex.mul(ex.Const(-0.5), ex.add(*terms)))
                s[j, b, a] = s[j, a, b]
    return Tensor(chart, s, ("l", "l"), set_indexed=True)


def _raise_set_vector(a_comps: np.ndarray, g_inv: Tensor, n: int,
                      m: int) -> np.ndarray:
    out = np.empty((m, n), dtype=object)
    for i in range(m):
        for c in range(n):
            out[i, c] = ex.add(*[ex.mul(g_inv.comps[c, d], a_comps[i, d])
                                 for d in range(n)])
    return out


def sym_trace(s: Tensor, g_inv: Tensor) -> Tensor:
    """Scalar trace S_I = g^{ab} S_Iab per form (unnormalized gauge)."""
    n = s.chart.dim
    m = s.set_extent
    out = np.empty((m,), dtype=object)
    for i in range(m):
        out[i] = ex.simplify(ex.add(
            *[ex.mul(g_inv.comps[a, b], s.comps[i, a, b])
              for a in range(n) for b in range(n)]))
    return Tensor(s.chart, out, (), set_indexed=True)


def precurrents(f: Tensor, conn: Connection) -> Tensor:
    """J[I,a,b,c] = nabla_a F_Ibc with the classical connection.

    Pair antisymmetry in (b,c) is structural; the cyclic identity over
    (a,b,c) holds because F is exact (dF = ddA = 0) and is checked
    numerically downstream.
    """
    if conn.route != "classical":
        raise TensorError("pre-currents use the classical connection")
    chart = f.chart
    n = chart.dim
    m = f.set_extent
    fc = f.comps
    gm = conn.mixed.comps
    df = _partials(chart, fc)
    jp = np.empty((m, n, n, n), dtype=object)
    for i in range(m):
        for a in range(n):
            for b in range(n):
                jp[i, a, b, b] = ex.ZERO
                for c in range(b + 1, n):
                    corr = [ex.mul(gm[e, a, b], fc[i, e, c]) for e in range(n)]
                    corr += [ex.mul(gm[e, a, c], fc[i, b, e]) for e in range(n)]
                    jp[i, a, b, c] = ex.simplify(
                        ex.sub(df[a][i, b, c], ex.add(*corr)))
                    jp[i, a, c, b] = ex.neg(jp[i, a, b, c])
    return Tensor(chart, jp, ("l", "l", "l"), set_indexed=True)


def currents(j_pre: Tensor, g_inv: Tensor) -> Tensor:
    """J[I,b] = nabla^a F_Iab: trace of the pre-current with its derivative
    slot raised against the first form slot."""
    n = j_pre.chart.dim
    m = j_pre.set_extent
    jp = j_pre.comps
    out = np.empty((m, n), dtype=object)
    for i in range(m):
        for b in range(n):
            out[i, b] = ex.simplify(ex.add(
                *[ex.mul(g_inv.comps[a, d], jp[i, d, a, b])
                  for a in range(n) for d in range(n)]))
    return Tensor(j_pre.chart, out, ("l",), set_indexed=True)


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------

def riemann_classical(conn: Connection, g: MetricField) -> tuple[Tensor, Tensor]:
    """R^a_bcd = d_c G^a_bd - d_d G^a_bc + G^a_ec G^e_bd - G^a_ed G^e_bc,
    returned mixed and all-lower.  This is the oracle route."""
    chart = conn.chart
    n = chart.dim
    gm = conn.mixed.comps
    dgm = _partials(chart, gm)
    mixed = np.empty((n, n, n, n), dtype=object)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                mixed[a, b, c, c] = ex.ZERO
                for d in range(c + 1, n):
                    quad = [ex.mul(gm[a, e, c], gm[e, b, d]) for e in range(n)]
                    quad += [ex.neg(ex.mul(gm[a, e, d], gm[e, b, c]))
                             for e in range(n)]
                    mixed[a, b, c, d] = ex.simplify(ex.add(
                        dgm[c][a, b, d], ex.neg(dgm[d][a, b, c]), *quad))
                    mixed[a, b, d, c] = ex.neg(mixed[a, b, c, d])
    lower = np.empty((n, n, n, n), dtype=object)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    lower[a, b, c, d] = ex.add(
                        *[ex.mul(g.comps[a, e], mixed[e, b, c, d])
                          for e in range(n)])
    return (Tensor(chart, mixed, ("u", "l", "l", "l")),
            Tensor(chart, lower, ("l", "l", "l", "l")))


@dataclass
class RiemannParts:
    """Three-part split of the all-lower Riemann tensor."""

    current_part: Tensor   # built from A and pre-currents
    form_part: Tensor      # built from F (.) F squares
    sym_part: Tensor       # built from S (.) S squares

    @cached_property
    def total(self) -> Tensor:
        return self.current_part + self.form_part + self.sym_part


def riemann_decomposed(forms: FormSet, f: Tensor, s: Tensor,
                       j_pre: Tensor) -> RiemannParts:
    """R(c) = (A_a.J_bcd - A_b.J_acd + A_c.J_dab - A_d.J_cab) / 2
    R(f) = (F_ad.F_bc - F_ac.F_bd - 2 F_ab.F_cd) / 4
    R(s) = S_ac.S_bd - S_ad.S_bc

    with (.) contracting the set axis.  All inputs must come from one
    form set and the classical connection.
    """
    chart = forms.chart
    n = chart.dim
    ac = forms.as_tensor().comps
    m = ac.shape[0]
    fc, sc, jp = f.comps, s.comps, j_pre.comps

    rc = np.empty((n, n, n, n), dtype=object)
    rf = np.empty((n, n, n, n), dtype=object)
    rs = np.empty((n, n, n, n), dtype=object)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                rc[a, b, c, c] = rf[a, b, c, c] = rs[a, b, c, c] = ex.ZERO
                for d in range(c + 1, n):
                    terms = []
                    for i in range(m):
                        terms.append(ex.mul(ac[i, a], jp[i, b, c, d]))
                        terms.append(ex.neg(ex.mul(ac[i, b], jp[i, a, c, d])))
                        terms.append(ex.mul(ac[i, c], jp[i, d, a, b]))
                        terms.append(ex.neg(ex.mul(ac[i, d], jp[i, c, a, b])))
                    rc[a, b, c, d] = ex.mul(ex.HALF, ex.add(*terms))
                    rc[a, b, d, c] = ex.neg(rc[a, b, c, d])

                    terms = []
                    for i in range(m):
                        terms.append(ex.mul(fc[i, a, d], fc[i, b, c]))
                        terms.append(ex.neg(ex.mul(fc[i, a, c], fc[i, b, d])))
                        terms.append(ex.mul(ex.Const(-2), fc[i, a, b],
                                            fc[i, c, d]))
                    rf[a, b, c, d] = ex.mul(ex.Const(0.25), ex.add(*terms))
                    rf[a, b, d, c] = ex.neg(rf[a, b, c, d])

                    terms = []
                    for i in range(m):
                        terms.append(ex.mul(sc[i, a, c], sc[i, b, d]))
                        terms.append(ex.neg(ex.mul(sc[i, a, d], sc[i, b, c])))
                    rs[a, b, c, d] = ex.add(*terms)
                    rs[a, b, d, c] = ex.neg(rs[a, b, c, d])

    variance = ("l", "l", "l", "l")
    return RiemannParts(Tensor(chart, rc, variance),
                        Tensor(chart, rf, variance),
                        Tensor(chart, rs, variance))


def ricci_from_mixed(riemann_mixed: Tensor) -> Tensor:
    """Ric[a,b] = R^c_{acb}; mirrored since Ricci is symmetric."""
    chart = riemann_mixed.chart
    n = chart.dim
    rm = riemann_mixed.comps
    out = np.empty((n, n), dtype=object)
    for a in range(n):
        for b in range(a, n):
            out[a, b] = ex.simplify(
                ex.add(*[rm[c, a, c, b] for c in range(n)]))
            out[b, a] = out[a, b]
    return Tensor(chart, out, ("l", "l"))


def ricci_from_lower(riemann_lower_vals: np.ndarray,
                     g_inv_vals: np.ndarray) -> np.ndarray:
    """Numeric contraction Ric[a,b] = g^{cd} R[c,a,d,b]."""
    return np.einsum("cd,cadb->ab", g_inv_vals, riemann_lower_vals)


def scalar_curvature(ricci: Tensor, g_inv: Tensor) -> Expr:
    n = ricci.chart.dim
    return ex.simplify(ex.add(
        *[ex.mul(g_inv.comps[a, b], ricci.comps[a, b])
          for a in range(n) for b in range(n)]))


def einstein_tensor(ricci: Tensor, scalar: Expr, g: MetricField) -> Tensor:
    """G[a,b] = Ric[a,b] - g[a,b] R / 2 (exact identity of this route)."""
    n = g.chart.dim
    out = np.empty((n, n), dtype=object)
    for a in range(n):
        for b in range(a, n):
            out[a, b] = ex.sub(ricci.comps[a, b],
                               ex.mul(ex.HALF, g.comps[a, b], scalar))
            out[b, a] = out[a, b]
    return Tensor(g.chart, out, ("l", "l"))


@dataclass
class FactoredCurvature:
    """Ricci, scalar curvature and the Einstein split of the factored route."""

    ricci: Tensor
    scalar: Expr
    stress_form: Tensor      # -3/4 (F.F - g F.F / 2)
    stress_current: Tensor   # current-built part plus its trace term
    stress_sym: Tensor       # S-built part plus its trace terms

    @cached_property
    def einstein(self) -> Tensor:
        return self.stress_form + self.stress_current + self.stress_sym


def ricci_einstein_factored(forms: FormSet, f: Tensor, s: Tensor,
                            s_trace: Tensor, j_pre: Tensor, j: Tensor,
                            g: MetricField, g_inv: Tensor) -> FactoredCurvature:
    """Ricci and scalar curvature from the factored objects:

    Ric_ab = (-A_a.J_b + A^c.J_acb - A_b.J_a + A^c.J_bca) / 2
             - 3/4 F_ac.F_b^c + S.S_ab - S_ac.S_b^c
    R = -2 A_a.J^a - 3/4 F_ab.F^ab + S.S - S_ab.S^ab

    plus the Einstein split G = T(f) + T(c) + T(s), whose sum equals
    Ric - g R / 2 of this route by construction.
    """
    chart = forms.chart
    n = chart.dim
    ac = forms.as_tensor().comps
    m = ac.shape[0]
    fc, sc, st, jp, jc = f.comps, s.comps, s_trace.comps, j_pre.comps, j.comps
    ginv = g_inv.comps

    a_up = _raise_set_vector(ac, g_inv, n, m)
    j_up = _raise_set_vector(jc, g_inv, n, m)

    def raised2(t):  # t[I,a,b] -> t[I,a,^b]
        out = np.empty((m, n, n), dtype=object)
        for i in range(m):
            for a in range(n):
                for b in range(n):
                    out[i, a, b] = ex.add(*[ex.mul(ginv[b, d], t[i, a, d])
                                            for d in range(n)])
        return out

    f_mix = raised2(fc)   # F_Ia^b
    s_mix = raised2(sc)   # S_Ia^b

    # shared scalars
    a_dot_j = ex.simplify(ex.add(*[ex.mul(ac[i, c], j_up[i, c])
                                   for i in range(m) for c in range(n)]))
    f_dot_f = ex.simplify(ex.add(*[ex.mul(fc[i, a, b], _raise_first(
        f_mix, ginv, i, a, b, n)) for i in range(m)
        for a in range(n) for b in range(n)]))
    s_dot_s = ex.simplify(ex.add(*[ex.mul(sc[i, a, b], _raise_first(
        s_mix, ginv, i, a, b, n)) for i in range(m)
        for a in range(n) for b in range(n)]))
    trace_sq = ex.add(*[ex.mul(st[i], st[i]) for i in range(m)])

    ricci = np.empty((n, n), dtype=object)
    t_form = np.empty((n, n), dtype=object)
    t_current = np.empty((n, n), dtype=object)
    t_sym = np.empty((n, n), dtype=object)
    for a in range(n):
        for b in range(a, n):
            cur = []
            for i in range(m):
                cur.append(ex.neg(ex.mul(ac[i, a], jc[i, b])))
                cur.append(ex.neg(ex.mul(ac[i, b], jc[i, a])))
                for c in range(n):
                    cur.append(ex.mul(a_up[i, c], jp[i, a, c, b]))
                    cur.append(ex.mul(a_up[i, c], jp[i, b, c, a]))
            current_half = ex.mul(ex.HALF, ex.add(*cur))

            ff = ex.add(*[ex.mul(fc[i, a, c], f_mix[i, b, c])
                          for i in range(m) for c in range(n)])
            ss = ex.add(*[ex.mul(sc[i, a, c], s_mix[i, b, c])
                          for i in range(m) for c in range(n)])
            s_tr = ex.add(*[ex.mul(st[i], sc[i, a, b]) for i in range(m)])

            ricci[a, b] = ex.add(current_half,
                                 ex.mul(ex.Const(-0.75), ff),
                                 s_tr, ex.neg(ss))
            t_form[a, b] = ex.mul(ex.Const(-0.75), ex.add(
                ff, ex.mul(ex.Const(-0.5), g.comps[a, b], f_dot_f)))
            t_current[a, b] = ex.add(current_half,
                                     ex.mul(g.comps[a, b], a_dot_j))
            t_sym[a, b] = ex.add(
                s_tr, ex.neg(ss),
                ex.mul(ex.Const(-0.5), g.comps[a, b], trace_sq),
                ex.mul(ex.HALF, g.comps[a, b], s_dot_s))
            for arr in (ricci, t_form, t_current, t_sym):
                arr[b, a] = arr[a, b]

    scalar = ex.add(ex.mul(ex.Const(-2), a_dot_j),
                    ex.mul(ex.Const(-0.75), f_dot_f),
                    trace_sq, ex.neg(s_dot_s))
    ll = ("l", "l")
    return FactoredCurvature(Tensor(chart, ricci, ll), scalar,
                             Tensor(chart, t_form, ll),
                             Tensor(chart, t_current, ll),
                             Tensor(chart, t_sym, ll))


def _raise_first(t_mix: np.ndarray, ginv: np.ndarray, i: int, a: int,
                 b: int, n: int) -> Expr:
    """t[I,^a,^b] from t[I,a,^b]."""
    return ex.add(*[ex.mul(ginv[a, c], t_mix[i, c, b]) for c in range(n)])


def covariant_divergence_sym2(t: Tensor, conn: Connection,
                              g_inv: Tensor) -> Tensor:
    """div[a] = nabla^b t_ab for a symmetric rank-2 lower tensor."""
    chart = t.chart
    n = chart.dim
    tc = t.comps
    gm = conn.mixed.comps
    dt = _partials(chart, tc)
    out = np.empty((n,), dtype=object)
    for a in range(n):
        terms = []
        for b in range(n):
            for c in range(n):
                cov = [dt[c][a, b]]
                cov += [ex.neg(ex.mul(gm[e, c, a], tc[e, b])) for e in range(n)]
                cov += [ex.neg(ex.mul(gm[e, c, b], tc[a, e])) for e in range(n)]
                terms.append(ex.mul(g_inv.comps[b, c], ex.add(*cov)))
        out[a] = ex.add(*terms)
    return Tensor(chart, out, ("l",))


def metric_compatibility(g: MetricField, conn: Connection) -> Tensor:
    """nabla_c g_ab, identically zero for a Levi-Civita connection."""
    chart = g.chart
    n = chart.dim
    dg = _partials(chart, g.comps)
    gm = conn.mixed.comps
    out = np.empty((n, n, n), dtype=object)
    for c in range(n):
        for a in range(n):
            for b in range(a, n):
                terms = [dg[c][a, b]]
                terms += [ex.neg(ex.mul(gm[e, c, a], g.comps[e, b]))
                          for e in range(n)]
                terms += [ex.neg(ex.mul(gm[e, c, b], g.comps[a, e]))
                          for e in range(n)]
                out[c, a, b] = ex.add(*terms)
                out[c, b, a] = out[c, a, b]
    return Tensor(chart, out, ("l", "l", "l"))


# ---------------------------------------------------------------------------
# Killing fields and flatness
# ---------------------------------------------------------------------------

def lie_derivative_metric(forms: FormSet, g: MetricField,
                          g_inv: Tensor) -> Tensor:
    """(L_{A_I} g)_ab = A^c d_c g_ab + g_cb d_a A^c + g_ac d_b A^c,
    computed from coordinate derivatives only (no connection)."""
    chart = forms.chart
    n = chart.dim
    ac = forms.as_tensor().comps
    m = ac.shape[0]
    x = _raise_set_vector(ac, g_inv, n, m)
    dg = _partials(chart, g.comps)
    dx = _partials(chart, x)
    out = np.empty((m, n, n), dtype=object)
    for i in range(m):
        for a in range(n):
            for b in range(a, n):
                terms = [ex.mul(x[i, c], dg[c][a, b]) for c in range(n)]
                terms += [ex.mul(g.comps[c, b], dx[a][i, c]) for c in range(n)]
                terms += [ex.mul(g.comps[a, c], dx[b][i, c]) for c in range(n)]
                out[i, a, b] = ex.add(*terms)
                out[i, b, a] = out[i, a, b]
    return Tensor(chart, out, ("l", "l"), set_indexed=True)


@dataclass
class KillingReport:
    """Killing diagnostics for a form set.

    When the whole set is closed (every dA_I vanishes), each member is a
    Killing field: its symmetric derivative and the Lie derivative of
    the metric along it vanish.  A single closed member of a non-closed
    set need not be Killing, because S is determined by the exterior
    derivatives of the full set.  The identity (L_A g) = 2 S holds for
    every form regardless and cross-checks the covariant machinery
    against an independent coordinate-derivative formula.
    """

    f_max: list[float]
    s_max: list[float]
    lie_max: list[float]
    lie_vs_2s: float
    closed_tol: float = TOL_SECOND_DERIV
    killing_tol: float = TOL_FIRST_DERIV

    @property
    def set_closed(self) -> bool:
        return max(self.f_max) <= self.closed_tol

    @property
    def killing_residual(self) -> float:
        """Worst S / Lie-derivative magnitude, asserted only for closed sets."""
        if not self.set_closed:
            return 0.0
        return max(max(self.s_max), max(self.lie_max))

    @property
    def passed(self) -> bool:
        return (self.killing_residual <= self.killing_tol
                and self.lie_vs_2s <= self.killing_tol)


def killing_check(forms: FormSet, f: Tensor, s: Tensor, g: MetricField,
                  g_inv: Tensor,
                  points: list[dict[str, float]]) -> KillingReport:
    lie = lie_derivative_metric(forms, g, g_inv)
    m = forms.set_extent
    f_max = [0.0] * m
    s_max = [0.0] * m
    lie_max = [0.0] * m
    worst_identity = 0.0
    for point in points:
        evaluator = Evaluator(point)
        fv = f.evaluate(point, evaluator)
        sv = s.evaluate(point, evaluator)
        lv = lie.evaluate(point, evaluator)
        for i in range(m):
            f_max[i] = max(f_max[i], max_abs(fv[i]))
            s_max[i] = max(s_max[i], max_abs(sv[i]))
            lie_max[i] = max(lie_max[i], max_abs(lv[i]))
        worst_identity = max(worst_identity, max_abs(lv - 2.0 * sv))
    return KillingReport(f_max, s_max, lie_max, worst_identity)


VERDICT_CURVED = "CURVED"
VERDICT_CLOSED_FLAT = "CLOSED_FLAT"
VERDICT_INCONSISTENT = "INCONSISTENT"


@dataclass
class FlatnessReport:
    """Classification by closedness of the forms, with the curvature status
    carried alongside: closedness is sufficient for flatness but not
    necessary, so a curvilinear chart of a flat space may read CURVED by
    the form criterion while the curvature vanishes."""

    verdict: str
    f_max: float
    r_max: float
    f_tol: float
    r_tol: float
    note: str = ""

    def line(self, name: str) -> str:
        return (f"{name}: {self.verdict} "
                f"(max|dA| = {self.f_max:.3e} vs {self.f_tol:.1e}, "
                f"max|Riemann| = {self.r_max:.3e} vs {self.r_tol:.1e})"
                + (f" -- {self.note}" if self.note else ""))


def classify_flatness(f: Tensor, riemann_lower: Tensor,
                      points: list[dict[str, float]],
                      f_tol: float = TOL_SECOND_DERIV,
                      r_tol: float = TOL_SECOND_DERIV) -> FlatnessReport:
    f_max = 0.0
    r_max = 0.0
    for point in points:
        evaluator = Evaluator(point)
        f_max = max(f_max, max_abs(f.evaluate(point, evaluator)))
        r_max = max(r_max, max_abs(riemann_lower.evaluate(point, evaluator)))
    if f_max > f_tol:
        note = ("curvature vanishes: the forms are not closed, which the "
                "form criterion cannot distinguish from genuine curvature"
                if r_max <= r_tol else "")
        return FlatnessReport(VERDICT_CURVED, f_max, r_max, f_tol, r_tol, note)
    if r_max <= r_tol:
        return FlatnessReport(VERDICT_CLOSED_FLAT, f_max, r_max, f_tol, r_tol,
                              "forms closed; exactness undetermined")
    return FlatnessReport(VERDICT_INCONSISTENT, f_max, r_max, f_tol, r_tol,
                          "closed forms with nonvanishing curvature signal a "
                          "factorization or numerical fault")


# ---------------------------------------------------------------------------
# geodesics
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    s: np.ndarray          # parameter values, (k+1,)
    x: np.ndarray          # positions, (k+1, n)
    u: np.ndarray          # velocities, (k+1, n)
    exited_domain: bool


@dataclass
class GeodesicComparison:
    classical: Trajectory
    factored: Trajectory
    divergence: float      # max pointwise gap between the two routes
    norm_drift: float      # relative drift of g(u, u) along the way
    max_imag: float        # imaginary residue of the factored right side


def _rk4(rhs, chart: Chart, start: np.ndarray, velocity: np.ndarray,
         steps: int, h: float) -> Trajectory:
    n = chart.dim
    xs = [start.astype(float)]
    us = [velocity.astype(float)]
    ss = [0.0]
    exited = False

    def deriv(state):
        x, u = state[:n], state[n:]
        return np.concatenate([u, rhs(x, u)])

    state = np.concatenate([xs[0], us[0]])
    for k in range(steps):
        k1 = deriv(state)
        k2 = deriv(state + 0.5 * h * k1)
        k3 = deriv(state + 0.5 * h * k2)
        k4 = deriv(state + h * k3)
        state = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not chart.contains(state[:n]):
            exited = True
            break
        xs.append(state[:n].copy())
        us.append(state[n:].copy())
        ss.append((k + 1) * h)
    return Trajectory(np.array(ss), np.array(xs), np.array(us), exited)


def _env(chart: Chart, x: np.ndarray) -> dict[str, float]:
    return dict(zip(chart.coords, (float(v) for v in x)))


def classical_rhs(conn: Connection):
    """du^c/ds = -Gamma^c_ab u^a u^b."""
    chart = conn.chart
    mixed = conn.mixed

    def rhs(x, u):
        gv = mixed.evaluate(_env(chart, x)).real
        return -np.einsum("cab,a,b->c", gv, u, u)

    return rhs


def factored_rhs(forms: FormSet, f: Tensor, g_inv: Tensor):
    """du^c/ds = -A^c (.) [sym dA_ab u^a u^b] + (A_a u^a) (.) F^c_b u^b.

    Tracks the largest imaginary residue seen, which must stay at
    rounding level since the true right side is real.
    """
    chart = forms.chart
    n = chart.dim
    a_t = forms.as_tensor()
    m = a_t.comps.shape[0]
    p_t = sym_partial(forms)
    a_up = Tensor(chart, _raise_set_vector(a_t.comps, g_inv, n, m), ("u",),
                  set_indexed=True)
    f_mixed_comps = np.empty((m, n, n), dtype=object)
    for i in range(m):
        for c in range(n):
            for b in range(n):
                f_mixed_comps[i, c, b] = ex.add(
                    *[ex.mul(g_inv.comps[c, d], f.comps[i, d, b])
                      for d in range(n)])
    f_mixed = Tensor(chart, f_mixed_comps, ("u", "l"), set_indexed=True)
    imag_seen = [0.0]

    def rhs(x, u):
        env = _env(chart, x)
        evaluator = Evaluator(env)
        av = a_t.evaluate(env, evaluator)
        pv = p_t.evaluate(env, evaluator)
        auv = a_up.evaluate(env, evaluator)
        fmv = f_mixed.evaluate(env, evaluator)
        quad = np.einsum("iab,a,b->i", pv, u, u)
        du = -np.einsum("ic,i->c", auv, quad)
        a_dot_u = av @ u
        du = du + np.einsum("i,icb,b->c", a_dot_u, fmv, u)
        imag_seen[0] = max(imag_seen[0], float(np.max(np.abs(du.imag))))
        return du.real

    rhs.imag_seen = imag_seen
    return rhs


def integrate_geodesic(g: MetricField, g_inv: Tensor, conn: Connection,
                       forms: FormSet, f: Tensor,
                       start: np.ndarray, velocity: np.ndarray,
                       steps: int, h: float) -> GeodesicComparison:
    """Integrate both right-hand-side forms with fixed-step RK4 and
    compare them pointwise; also monitor conservation of g(u, u)."""
    chart = g.chart
    start = np.asarray(start, dtype=float)
    velocity = np.asarray(velocity, dtype=float)
    if not chart.contains(start):
        raise NumericFaultError(f"start point {start.tolist()} is outside "
                                "the chart domain")
    rhs_f = factored_rhs(forms, f, g_inv)
    traj_c = _rk4(classical_rhs(conn), chart, start, velocity, steps, h)
    traj_f = _rk4(rhs_f, chart, start, velocity, steps, h)

    k = min(len(traj_c.s), len(traj_f.s))
    divergence = max(
        float(np.max(np.abs(traj_c.x[:k] - traj_f.x[:k]))) if k else 0.0,
        float(np.max(np.abs(traj_c.u[:k] - traj_f.u[:k]))) if k else 0.0)

    norms = []
    for x, u in zip(traj_c.x, traj_c.u):
        gv = g.evaluate(_env(chart, x))
        norms.append(float(u @ gv @ u))
    norms = np.array(norms)
    denom = max(1e-12, abs(norms[0]))
    norm_drift = float(np.max(np.abs(norms - norms[0])) / denom)

    return GeodesicComparison(traj_c, traj_f, divergence, norm_drift,
                              rhs_f.imag_seen[0])
