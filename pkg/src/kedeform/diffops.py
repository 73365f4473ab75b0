"""First- and second-order differential operators on chart tensor fields.

All second-order operators are composed from first-order passes (no fused
stencils), so identity tests genuinely cross-check independent code paths.
Halos accumulate by order//2 per finite-difference pass on ball charts and
stay zero on tori.

Sign and convention anchors:

* divergence is ``delta = -sum_i e_i . nabla_{e_i}``;
* ``delta*`` is the symmetric part of ``nabla`` on one-forms, adjoint to the
  divergence on symmetric 2-tensors;
* two-forms are raised to skew endomorphisms via ``g(beta# X, Y) = beta(X, Y)``;
* the curvature action is ``(Rh)X = sum_i R(e_i, X) h e_i`` with the stored
  curvature convention (see charts module), so R(id) is the Ricci endomorphism.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .charts import ChartError, Geometry
from .fields import (
    BUNDLE_VARIANCE, FieldError, PairingEngine, TensorField,
    commutator, compose, project, trace,
)


class HypothesisError(RuntimeError):
    """An operator or identity was asked to run outside its hypotheses."""


# ---------------------------------------------------------------------------
# covariant derivative
# ---------------------------------------------------------------------------

def nabla(f: TensorField) -> np.ndarray:
    """Covariant derivative; returns components with the new (covariant)
    derivative index first after the grid axes.  Halo grows by one FD pass
    plus the Christoffel halo; track via `nabla_halo`.

    Christoffel corrections are expressed as batched matrix products
    (broadcasting over the derivative slot) so they dispatch to BLAS.
    """
    geo = f.geometry
    n = geo.n
    variance = BUNDLE_VARIANCE[f.bundle]
    grid = geo.grid_shape
    out = np.zeros(grid + (n,) + f.data.shape[len(grid):])
    for a in range(n):
        out[(Ellipsis, a) + (slice(None),) * len(variance)] = geo.deriv(f.data, a)
    if geo.is_flat or variance == ():
        return out
    T = f.data
    # G2[..., a, p, q] = Gamma^p_{a q}
    G2 = np.moveaxis(geo.gamma, -3, -2)
    if variance == (1,):
        out += np.matmul(G2, T[..., None, :, None])[..., 0]
    elif variance == (-1,):
        out -= np.matmul(np.swapaxes(G2, -1, -2), T[..., None, :, None])[..., 0]
    elif variance == (1, -1):
        out += np.matmul(G2, T[..., None, :, :])
        out -= np.matmul(T[..., None, :, :], G2)
    elif variance == (1, -1, -1):
        out += np.matmul(G2, T.reshape(grid + (1, n, n * n))
                         ).reshape(grid + (n, n, n, n))
        G3 = np.swapaxes(G2, -1, -2)  # (..., a, j, m) = Gamma^m_{a j}
        t2 = np.matmul(G3, np.moveaxis(T, -2, -3).reshape(grid + (1, n, n * n))
                       ).reshape(grid + (n, n, n, n))
        out -= np.moveaxis(t2, -3, -2)  # (a, j, i, k) -> (a, i, j, k)
        out -= np.matmul(T.reshape(grid + (1, n * n, n)), G2
                         ).reshape(grid + (n, n, n, n))
    elif variance == (-1, -1):
        G3 = np.swapaxes(G2, -1, -2)
        out -= np.matmul(G3, T[..., None, :, :])
        out -= np.matmul(T[..., None, :, :], G2)
    elif variance == (-1, -1, -1):
        G3 = np.swapaxes(G2, -1, -2)
        t1 = np.matmul(G3, T.reshape(grid + (1, n, n * n))
                       ).reshape(grid + (n, n, n, n))
        out -= t1
        t2 = np.matmul(G3, np.moveaxis(T, -2, -3).reshape(grid + (1, n, n * n))
                       ).reshape(grid + (n, n, n, n))
        out -= np.moveaxis(t2, -3, -2)
        out -= np.matmul(T.reshape(grid + (1, n * n, n)), G2
                         ).reshape(grid + (n, n, n, n))
    else:
        raise FieldError(f"no covariant derivative for bundle {f.bundle}")
    return out


def nabla_halo(f: TensorField) -> int:
    geo = f.geometry
    return max(f.halo + geo.deriv_halo, geo.halo_gamma)


def directional_nabla(x: TensorField, f: TensorField) -> TensorField:
    """nabla_X f for a vector field X."""
    nab = nabla(f)
    nvar = len(BUNDLE_VARIANCE[f.bundle])
    letters = "ijk"[:nvar]
    data = np.einsum(f"...a{letters},...a->...{letters}", nab, x.data)
    from .fields import _merge_support
    return TensorField(f.geometry, f.bundle, data,
                       halo=max(nabla_halo(f), x.halo),
                       compact_support=_merge_support(x, f))


def second_nabla(f: TensorField) -> tuple:
    """Tensorial second covariant derivative (nabla^2_{a,b} f) and its halo."""
    geo = f.geometry
    nab1 = nabla(f)
    h1 = nabla_halo(f)
    tmp = TensorField(geo, _prepend_form_bundle(f.bundle), nab1, halo=h1)
    nab2 = nabla(tmp)
    return nab2, nabla_halo(tmp)


def _prepend_form_bundle(bundle: str) -> str:
    """Bundle name whose variance is (-1,) + variance(bundle)."""
    table = {"Scalar": "OneForm", "Vector": "End", "OneForm": "TwoForm_ns",
             "End": "TwoFormTM_ns", "Sym2": "TwoFormTM_ns"}
    name = table.get(bundle)
    if name is None:
        raise FieldError(f"second derivative not supported on {bundle}")
    return name


# ---------------------------------------------------------------------------
# flats, sharps, conversions
# ---------------------------------------------------------------------------

def lower_vector(x: TensorField) -> TensorField:
    if x.bundle == "OneForm":
        return x
    data = np.einsum("...ja,...a->...j", x.geometry.g, x.data)
    return x.with_data(data, bundle="OneForm")


def raise_oneform(a: TensorField) -> TensorField:
    if a.bundle == "Vector":
        return a
    data = np.einsum("...ja,...a->...j", a.geometry.ginv, a.data)
    return a.with_data(data, bundle="Vector")


def raise_twoform(beta: TensorField) -> TensorField:
    """Skew endomorphism beta# with g(beta# X, Y) = beta(X, Y)."""
    if beta.bundle != "TwoForm":
        raise FieldError("raise_twoform needs a TwoForm")
    data = np.einsum("...il,...jl->...ij", beta.geometry.ginv, beta.data)
    return beta.with_data(data, bundle="End")


def lower_endo(a: TensorField) -> TensorField:
    """Bilinear form beta(X, Y) = g(A X, Y) of an endomorphism (as TwoForm
    when A is skew; the caller is responsible for skewness)."""
    data = np.einsum("...qi,...qj->...ij", a.data, a.geometry.g)
    return a.with_data(data, bundle="TwoForm")


# ---------------------------------------------------------------------------
# exterior calculus on scalar-valued forms
# ---------------------------------------------------------------------------

def exterior_d(f: TensorField) -> TensorField:
    geo = f.geometry
    n = geo.n
    if f.bundle == "Scalar":
        data = np.stack([geo.deriv(f.data, a) for a in range(n)], axis=-1)
        return f.with_data(data, extra_halo=geo.deriv_halo, bundle="OneForm")
    if f.bundle == "OneForm":
        d = np.zeros(geo.grid_shape + (n, n))
        for i in range(n):
            d[..., i, :] = geo.deriv(f.data, i)
        return f.with_data(d - np.swapaxes(d, -1, -2),
                           extra_halo=geo.deriv_halo, bundle="TwoForm")
    if f.bundle == "TwoForm":
        d = np.zeros(geo.grid_shape + (n, n, n))
        for i in range(n):
            d[..., i, :, :] = geo.deriv(f.data, i)
        data = (d + np.einsum("...ijk->...jki", d) + np.einsum("...ijk->...kij", d))
        return f.with_data(data, extra_halo=geo.deriv_halo, bundle="ThreeForm")
    raise FieldError(f"exterior derivative not defined on {f.bundle}")


def codifferential(f: TensorField) -> TensorField:
    """d* on scalar-valued forms: (d* w)_{...} = -g^{ab} nabla_a w_{b...}."""
    geo = f.geometry
    if f.bundle == "OneForm":
        nab = nabla(f)
        data = -np.einsum("...ab,...ab->...", geo.ginv, nab)
        return f.with_data(data, bundle="Scalar",
                           extra_halo=nabla_halo(f) - f.halo)
    if f.bundle == "TwoForm":
        nab = nabla(f)
        data = -np.einsum("...ab,...abk->...k", geo.ginv, nab)
        return f.with_data(data, bundle="OneForm",
                           extra_halo=nabla_halo(f) - f.halo)
    if f.bundle == "ThreeForm":
        nab = nabla(f)
        data = -np.einsum("...ab,...abjk->...jk", geo.ginv, nab)
        return f.with_data(data, bundle="TwoForm",
                           extra_halo=nabla_halo(f) - f.halo)
    raise FieldError(f"codifferential not defined on {f.bundle}")


def pullback_j_twoform(beta: TensorField) -> TensorField:
    """beta(J ., J .) for a scalar 2-form."""
    J = beta.geometry.J
    data = np.einsum("pi,qj,...pq->...ij", J, J, beta.data, optimize=True)
    return beta.with_data(data)


def d_plus(alpha: TensorField) -> TensorField:
    """2 d+ a = d a + d a(J., J.), the (1,1) part of the differential."""
    da = exterior_d(alpha)
    return da.with_data(0.5 * (da.data + pullback_j_twoform(da).data))


def d_minus(alpha: TensorField) -> TensorField:
    da = exterior_d(alpha)
    return da.with_data(0.5 * (da.data - pullback_j_twoform(da).data))


def hodge_laplacian(f: TensorField) -> TensorField:
    """dd* + d*d on scalars, one-forms and two-forms (positive spectrum)."""
    if f.bundle == "Scalar":
        return codifferential(exterior_d(f))
    if f.bundle == "OneForm":
        a = exterior_d(codifferential(f))
        b = codifferential(exterior_d(f))
        return a + b
    if f.bundle == "TwoForm":
        a = exterior_d(codifferential(f))
        b = codifferential(exterior_d(f))
        return a + b
    raise FieldError(f"Hodge Laplacian not defined on {f.bundle}")


# ---------------------------------------------------------------------------
# TM-valued exterior calculus
# ---------------------------------------------------------------------------

def d_nabla(f: TensorField) -> TensorField:
    """Coupled exterior differential on vectors and endomorphisms."""
    geo = f.geometry
    if f.bundle == "Vector":
        nab = nabla(f)  # [..., a, i] = nabla_a V^i
        data = np.einsum("...ai->...ia", nab)
        return f.with_data(data, bundle="End",
                           extra_halo=nabla_halo(f) - f.halo)
    if f.bundle in ("End", "Sym2"):
        nab = nabla(f)  # [..., a, i, j]
        data = (np.einsum("...jik->...ijk", nab)
                - np.einsum("...kij->...ijk", nab))
        return f.with_data(data, bundle="TwoFormTM",
                           extra_halo=nabla_halo(f) - f.halo)
    raise FieldError(f"d_nabla not defined on {f.bundle}")


def pullback_j_twoformtm(alpha: TensorField) -> TensorField:
    """alpha(J ., J .) for a TM-valued 2-form (value slot untouched)."""
    J = alpha.geometry.J
    data = np.einsum("...ipq,pj,qk->...ijk", alpha.data, J, J, optimize=True)
    return alpha.with_data(data)


def partial_g(h: TensorField) -> TensorField:
    """(1,1) component of d_nabla h."""
    dh = d_nabla(h)
    out = dh.with_data(0.5 * (dh.data + pullback_j_twoformtm(dh).data))
    return TensorField(out.geometry, "TwoFormTM", out.data, halo=out.halo,
                       flags=("Form11",), compact_support=out.compact_support)


def dbar(h: TensorField) -> TensorField:
    """dbar h = (d_nabla h - d_nabla h(J., J.)) / 2, for J-anti-invariant h
    a section of lambda^2_-(M, TM)."""
    dh = d_nabla(h)
    data = 0.5 * (dh.data - pullback_j_twoformtm(dh).data)
    return TensorField(dh.geometry, "TwoFormTM", data, halo=dh.halo,
                       flags=("Lambda2",), compact_support=dh.compact_support)


def d_nabla_plus(h: TensorField) -> TensorField:
    """For J-invariant H this is the Omega^{1,1}(M,TM) part of d_nabla H."""
    return partial_g(h)


def d_nabla_minus(h: TensorField) -> TensorField:
    return dbar(h)


def divergence(f: TensorField) -> TensorField:
    """delta = -sum_i e_i . nabla_{e_i} on TM-valued forms; on scalar-valued
    one-forms it reduces to the codifferential."""
    geo = f.geometry
    if f.bundle in ("End", "Sym2"):
        nab = nabla(f)
        data = -np.einsum("...ab,...aib->...i", geo.ginv, nab)
        return f.with_data(data, bundle="Vector",
                           extra_halo=nabla_halo(f) - f.halo)
    if f.bundle == "TwoFormTM":
        nab = nabla(f)
        data = -np.einsum("...ab,...aibj->...ij", geo.ginv, nab)
        return f.with_data(data, bundle="End",
                           extra_halo=nabla_halo(f) - f.halo)
    if f.bundle == "OneForm":
        return codifferential(f)
    raise FieldError(f"divergence not defined on {f.bundle}")


def delta_star(x: TensorField) -> TensorField:
    """Symmetric part of nabla on one-forms, raised: delta* a = 1/2 L_{a#} g."""
    alpha = lower_vector(x)
    nab = nabla(alpha)  # [..., a, j] = nabla_a alpha_j
    sym = 0.5 * (nab + np.swapaxes(nab, -1, -2))
    data = np.einsum("...ik,...kj->...ij", x.geometry.ginv, sym)
    return TensorField(x.geometry, "Sym2", data,
                       halo=max(nabla_halo(alpha), x.halo),
                       compact_support=x.compact_support)


def delta_star_plus(x: TensorField) -> TensorField:
    return project(delta_star(x), "SymPlus")


def delta_star_minus(x: TensorField) -> TensorField:
    return project(delta_star(x), "SymMinus")


def lie_derivative(x: TensorField, target) -> TensorField:
    """Lie derivative along X via the flow-free formula
    L_X T = nabla_X T - (nabla X) . T  (torsion-free connection)."""
    geo = x.geometry
    if isinstance(target, str):
        if target == "g":
            out = delta_star(x)
            return out.with_data(2.0 * out.data, bundle="Sym2")
        if target == "J":
            from .fields import j_field
            target = j_field(geo)
        else:
            raise FieldError(f"unknown Lie-derivative target {target!r}")
    f = target
    xv = raise_oneform(x)
    gradx = d_nabla(xv)  # (nabla X)^i_j = nabla_j X^i
    if f.bundle in ("End", "Sym2"):
        nxf = directional_nabla(xv, f)
        br = commutator(gradx, f)
        data = nxf.data - br.data
        return TensorField(geo, "End", data, halo=max(nxf.halo, br.halo),
                           compact_support=nxf.compact_support)
    if f.bundle == "TwoFormTM":
        nxf = directional_nabla(xv, f)
        data = nxf.data.copy()
        data -= np.einsum("...ia,...ajk->...ijk", gradx.data, f.data)
        data += np.einsum("...aj,...iak->...ijk", gradx.data, f.data)
        data += np.einsum("...ak,...ija->...ijk", gradx.data, f.data)
        return TensorField(geo, "TwoFormTM", data,
                           halo=max(nxf.halo, gradx.halo),
                           compact_support=nxf.compact_support)
    raise FieldError(f"Lie derivative not implemented on {f.bundle}")


# ---------------------------------------------------------------------------
# curvature action and Laplacians
# ---------------------------------------------------------------------------

def curvature_action(h: TensorField) -> TensorField:
    """(R h) X = sum_i R(e_i, X) h e_i; symmetric, R(id) = Ricci endo."""
    geo = h.geometry
    if geo.is_flat:
        return h.with_data(np.zeros_like(h.data), bundle="Sym2"
                           if h.bundle == "Sym2" else "End")
    if geo.riem is None:
        raise HypothesisError(
            "curvature action needs the cached Riemann tensor; rebuild the "
            "chart with with_riemann=True (memory permitting)")
    data = np.einsum("...ab,...mb,...lakm->...lk", geo.ginv, h.data, geo.riem,
                     optimize=True)
    return TensorField(h.geometry, h.bundle if h.bundle == "Sym2" else "End",
                       data, halo=max(h.halo, geo.halo_riem),
                       compact_support=h.compact_support)


def rough_laplacian(f: TensorField) -> TensorField:
    """nabla* nabla = -g^{ab} nabla^2_{a,b}."""
    geo = f.geometry
    nab2, halo = second_nabla(f)
    nvar = len(BUNDLE_VARIANCE[f.bundle])
    letters = "ijk"[:nvar]
    data = -np.einsum(f"...ab,...ab{letters}->...{letters}", geo.ginv, nab2)
    return TensorField(geo, f.bundle, data, halo=halo,
                       compact_support=f.compact_support)


def require_einstein(geo: Geometry) -> float:
    if geo.einstein_constant is None:
        raise HypothesisError("operator requires an Einstein testbed")
    return geo.einstein_constant


def einstein_operator(h: TensorField) -> TensorField:
    """Delta_E = nabla* nabla - 2 R(.) on symmetric 2-tensors."""
    require_einstein(h.geometry)
    rl = rough_laplacian(h)
    ra = curvature_action(h)
    out = rl + (-2.0) * ra
    return TensorField(h.geometry, "Sym2", out.data, halo=out.halo,
                       compact_support=h.compact_support)


def bianchi_operator(h: TensorField) -> TensorField:
    """D^g h = 2 (delta h)_flat + d tr h, a one-form."""
    dv = lower_vector(divergence(h))
    dt = exterior_d(trace(h))
    out = 2.0 * dv + dt
    return TensorField(h.geometry, "OneForm", out.data, halo=out.halo,
                       compact_support=h.compact_support)


def delta_e_tilde(h: TensorField) -> TensorField:
    """Perturbed Einstein operator Delta_E - delta* o D^g."""
    de = einstein_operator(h)
    corr = delta_star(bianchi_operator(h))
    out = de - corr
    return TensorField(h.geometry, "Sym2", out.data, halo=out.halo,
                       compact_support=h.compact_support)


def delta_e_tilde_minus(h: TensorField) -> TensorField:
    """Delta_E h - 2 delta*- delta h on J-anti-invariant h."""
    if "JAntiInvariant" not in h.flags:
        raise FieldError("delta_e_tilde_minus needs a SymMinus-flagged field")
    de = einstein_operator(h)
    corr = delta_star_minus(divergence(h))
    out = de + (-2.0) * corr
    return TensorField(h.geometry, "Sym2", out.data, halo=out.halo,
                       compact_support=h.compact_support)


def einstein_ops(h: TensorField, which: str) -> TensorField:
    table = {"DeltaE": einstein_operator, "DeltaETilde": delta_e_tilde,
             "DeltaETildeMinus": delta_e_tilde_minus}
    if which not in table:
        raise FieldError(f"unknown Einstein operator {which!r}")
    return table[which](h)


def hodge_ops(f: TensorField, which: str) -> TensorField:
    table = {"Laplacian": hodge_laplacian, "dPlus": d_plus,
             "dMinus": d_minus, "dStar": codifferential}
    if which not in table:
        raise FieldError(f"unknown Hodge operator {which!r}")
    return table[which](f)


# ---------------------------------------------------------------------------
# quadratic operators of the deformation calculus
# ---------------------------------------------------------------------------

def l_operator(h: TensorField) -> TensorField:
    """L(h) = sum_i nabla_{e_i} h o nabla_{e_i} h, a symmetric operator."""
    geo = h.geometry
    nab = nabla(h)
    data = np.einsum("...ab,...aim,...bmj->...ij", geo.ginv, nab, nab,
                     optimize=True)
    return TensorField(geo, "Sym2", data, halo=nabla_halo(h),
                       compact_support=h.compact_support)


def d_minus_div_sharp(h: TensorField) -> TensorField:
    """(d- delta h)# raised to a skew endomorphism."""
    return raise_twoform(d_minus(lower_vector(divergence(h))))


def h_times_div(h: TensorField) -> TensorField:
    """Vector field h(delta h)."""
    dv = divergence(h)
    data = np.einsum("...ia,...a->...i", h.data, dv.data)
    return TensorField(h.geometry, "Vector", data, halo=max(h.halo, dv.halo),
                       compact_support=h.compact_support)


def d_big(h: TensorField) -> TensorField:
    """The Sym^{2,+}-valued operator D of the type-I pairing identity:

    D h = {R h + delta*- delta h, h} - (1/2 Delta_E - R) h^2
          + delta*+ ((2 delta h^2 + 1/2 d tr h^2) - 2 h delta h)
          + 1/2 [h, (d- delta h)#].
    """
    from .fields import anticommutator, square
    if "JAntiInvariant" not in h.flags:
        raise FieldError("D operator needs a SymMinus-flagged field")
    geo = h.geometry
    h2 = square(h)
    rh = curvature_action(h)
    dsm = delta_star_minus(divergence(h))
    term1 = anticommutator(rh + dsm, h)
    de_h2 = einstein_operator(TensorField(geo, "Sym2", h2.data, halo=h2.halo,
                                          compact_support=h2.compact_support))
    rh2 = curvature_action(h2)
    term2 = (-0.5) * de_h2 + rh2
    arg = (2.0 * lower_vector(divergence(h2))
           + 0.5 * exterior_d(trace(h2))
           - 2.0 * lower_vector(h_times_div(h)))
    term3 = delta_star_plus(TensorField(geo, "OneForm", arg.data, halo=arg.halo,
                                        compact_support=h.compact_support))
    term4 = 0.5 * commutator(h, d_minus_div_sharp(h))
    out = term1 + term2 + term3 + term4
    return TensorField(geo, "End", out.data, halo=out.halo,
                       compact_support=h.compact_support)


def d_big_1(h: TensorField) -> TensorField:
    """Divergence-free part D_1 of the split D = D_1 + div_1."""
    from .fields import anticommutator, square
    geo = h.geometry
    h2 = square(h)
    term1 = anticommutator(curvature_action(h), h)
    term2 = (-0.5) * einstein_operator(
        TensorField(geo, "Sym2", h2.data, halo=h2.halo,
                    compact_support=h2.compact_support)) + curvature_action(h2)
    arg = (2.0 * lower_vector(divergence(h2)) + 0.5 * exterior_d(trace(h2)))
    term3 = delta_star_plus(TensorField(geo, "OneForm", arg.data, halo=arg.halo,
                                        compact_support=h.compact_support))
    out = term1 + term2 + term3
    return TensorField(geo, "End", out.data, halo=out.halo,
                       compact_support=h.compact_support)


def div_1(h: TensorField) -> TensorField:
    """Terms of D carrying delta h."""
    from .fields import anticommutator
    geo = h.geometry
    term1 = anticommutator(delta_star_minus(divergence(h)), h)
    term2 = (-2.0) * delta_star_plus(lower_vector(h_times_div(h)))
    term3 = 0.5 * commutator(h, d_minus_div_sharp(h))
    out = term1 + term2 + term3
    return TensorField(geo, "End", out.data, halo=out.halo,
                       compact_support=h.compact_support)


def l_and_d(h: TensorField, which: str) -> TensorField:
    table = {"L": l_operator, "Dbig": d_big, "D1": d_big_1, "div1": div_1}
    if which not in table:
        raise FieldError(f"unknown operator {which!r}")
    return table[which](h)


# ---------------------------------------------------------------------------
# operator registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorHandle:
    name: str
    in_bundle: str
    out_bundle: str
    adjoint: Optional[str] = None
    tags: tuple = ("AnyRiemannian",)

    def to_dict(self) -> dict:
        return {"name": self.name, "in": self.in_bundle, "out": self.out_bundle,
                "adjoint": self.adjoint, "tags": list(self.tags)}


OPERATOR_REGISTRY = {
    op.name: op for op in [
        OperatorHandle("nabla", "any", "any+1", adjoint="nablaStar"),
        OperatorHandle("dNabla", "End", "TwoFormTM", adjoint="divergence"),
        OperatorHandle("dNablaPlus", "Sym2", "TwoFormTM", tags=("Kahler",)),
        OperatorHandle("dNablaMinus", "Sym2", "TwoFormTM", tags=("Kahler",)),
        OperatorHandle("partialG", "Sym2", "TwoFormTM", tags=("Kahler",)),
        OperatorHandle("dbar", "Sym2", "TwoFormTM", tags=("Kahler",)),
        OperatorHandle("divergence", "TwoFormTM", "End", adjoint="dNabla"),
        OperatorHandle("deltaStar", "OneForm", "Sym2", adjoint="divergenceSym"),
        OperatorHandle("deltaStarPlus", "OneForm", "Sym2", tags=("Kahler",)),
        OperatorHandle("deltaStarMinus", "OneForm", "Sym2", tags=("Kahler",)),
        OperatorHandle("lieDerivative", "any", "any"),
        OperatorHandle("curvatureAction", "Sym2", "Sym2"),
        OperatorHandle("DeltaE", "Sym2", "Sym2", tags=("Einstein",)),
        OperatorHandle("DeltaETilde", "Sym2", "Sym2", tags=("Einstein",)),
        OperatorHandle("DeltaETildeMinus", "Sym2", "Sym2",
                       tags=("Einstein", "Kahler")),
        OperatorHandle("Laplacian", "OneForm", "OneForm", adjoint="Laplacian"),
        OperatorHandle("dPlus", "OneForm", "TwoForm", tags=("Kahler",)),
        OperatorHandle("dMinus", "OneForm", "TwoForm", tags=("Kahler",)),
        OperatorHandle("dStar", "OneForm", "Scalar", adjoint="d"),
        OperatorHandle("bianchi", "Sym2", "OneForm"),
        OperatorHandle("L", "Sym2", "Sym2"),
        OperatorHandle("Dbig", "Sym2", "Sym2", tags=("Einstein", "Kahler")),
        OperatorHandle("D1", "Sym2", "Sym2", tags=("Einstein", "Kahler")),
        OperatorHandle("div1", "Sym2", "Sym2", tags=("Einstein", "Kahler")),
    ]
}


def registry_json() -> list:
    return [OPERATOR_REGISTRY[k].to_dict() for k in sorted(OPERATOR_REGISTRY)]
