"""Frolicher-Nijenhuis and Kodaira-Spencer brackets, the weak operator v,
and the cubic obstruction density.

Every bracket exposes at least two independent computation paths; their
agreement is itself a registered identity test.  The concise reformulation
``-h # d_nabla h + d_nabla h^2`` is implemented with the Leibniz-expanded
derivative of h^2, which makes it agree with the connection path to rounding
(the two are the same pointwise algebra in nabla h); differentiating the
product field instead gives yet another, FD-order, comparison and is what
`d_nabla` of the squared field produces in the identity suite.

The operator v exists only weakly: numbers obtained from L2 pairings with
test tensors, never a pointwise field.
"""

from __future__ import annotations

import numpy as np

from .fields import (
    FieldError, PairingEngine, TensorField,
    anticommutator, apply_j, compose, sharp_action, square, trace,
    _merge_support,
)
from .diffops import (
    curvature_action, d_nabla, dbar, divergence, exterior_d, lower_vector,
    nabla, nabla_halo, partial_g, second_nabla,
)
from .fields import project

FN_PATHS = ("CommutatorDef", "NablaDef", "Concise")
KS_PATHS = ("TypeProjection", "DirectFormula")


def _sigma(h: TensorField) -> tuple:
    """Covariant derivative sigma[..., a, i, j] = (nabla_a h)^i_j and halo."""
    return nabla(h), nabla_halo(h)


def fn_bracket(h: TensorField, path: str = "NablaDef") -> TensorField:
    """[h, h]^FN of an endomorphism field, as a TM-valued 2-form.

    CommutatorDef evaluates raw Lie brackets of the frame images (no
    Christoffels); NablaDef uses the Levi-Civita connection; Concise is the
    algebraically equivalent reformulation -h # d_nabla h + d_nabla h^2.
    """
    geo = h.geometry
    if path == "CommutatorDef":
        n = geo.n
        dh = np.zeros(geo.grid_shape + (n, n, n))  # dh[..., a, i, j] = d_a h^i_j
        for a in range(n):
            dh[..., a, :, :] = geo.deriv(h.data, a)
        # [h dj, dk] + [dj, h dk] = d_j h(col k) - d_k h(col j) (raw partials)
        data = np.einsum("...im,...jmk->...ijk", h.data, dh)
        data -= np.einsum("...im,...kmj->...ijk", h.data, dh)
        data -= np.einsum("...aj,...aik->...ijk", h.data, dh)
        data += np.einsum("...ak,...aij->...ijk", h.data, dh)
        halo = h.halo + geo.deriv_halo
        return TensorField(geo, "TwoFormTM", data, halo=halo,
                           compact_support=h.compact_support)
    if path in ("NablaDef", "Concise"):
        sig, halo = _sigma(h)
        # -(nabla_{hX} h)Y + (nabla_{hY} h)X
        data = -np.einsum("...aj,...aik->...ijk", h.data, sig)
        data += np.einsum("...ak,...aij->...ijk", h.data, sig)
        # + (h o d_nabla h)(X, Y)
        data += np.einsum("...im,...jmk->...ijk", h.data, sig)
        data -= np.einsum("...im,...kmj->...ijk", h.data, sig)
        return TensorField(geo, "TwoFormTM", data, halo=halo,
                           compact_support=h.compact_support)
    raise FieldError(f"unknown FN bracket path {path!r}")


def fn_bracket_sym(h1: TensorField, h2: TensorField) -> TensorField:
    """Symmetric FN bracket on Sym2 fields:
    2 [h1, h2] = -(h1 # d_nabla h2 + h2 # d_nabla h1) + d_nabla {h1, h2},
    with the Leibniz-expanded derivative of the anticommutator."""
    h1.same_chart(h2)
    geo = h1.geometry
    s1, hal1 = _sigma(h1)
    s2, hal2 = _sigma(h2)

    def sharp(h, sig):
        # h # d_nabla(k) with d_nabla(k)^i_{jk} = sig_{j i k} - sig_{k i j}
        d = np.einsum("...aj,...aik->...ijk", h.data, sig)
        d -= np.einsum("...aj,...kia->...ijk", h.data, sig)
        d += np.einsum("...ak,...jia->...ijk", h.data, sig)
        d -= np.einsum("...ak,...aij->...ijk", h.data, sig)
        return d

    # nabla_a {h1,h2} expanded by Leibniz
    sig12 = (np.einsum("...aim,...mj->...aij", s1, h2.data)
             + np.einsum("...im,...amj->...aij", h1.data, s2)
             + np.einsum("...aim,...mj->...aij", s2, h1.data)
             + np.einsum("...im,...amj->...aij", h2.data, s1))
    d12 = (np.einsum("...jik->...ijk", sig12)
           - np.einsum("...kij->...ijk", sig12))
    data = 0.5 * (-(sharp(h1, s2) + sharp(h2, s1)) + d12)
    return TensorField(geo, "TwoFormTM", data, halo=max(hal1, hal2),
                       compact_support=_merge_support(h1, h2))


def ks_bracket(h: TensorField, path: str = "DirectFormula") -> TensorField:
    """Kodaira-Spencer bracket [h, h]^c in lambda^2_-(M, TM) for SymMinus h.

    DirectFormula: -1/2 (h # partial h - Jh # partial(Jh)).
    TypeProjection: the Lambda2Minus projection of [h, h]^FN.
    Identically zero in complex dimension one, where lambda^2(M,TM) = 0.
    """
    if "JAntiInvariant" not in h.flags:
        raise FieldError("Kodaira-Spencer bracket needs a SymMinus-flagged field")
    geo = h.geometry
    if path == "TypeProjection":
        out = project(fn_bracket(h, "NablaDef"), "Lambda2Minus")
        return out
    if path == "DirectFormula":
        jh = TensorField(geo, "Sym2", apply_j(h).data, halo=h.halo,
                         flags=("JAntiInvariant",),
                         compact_support=h.compact_support)
        t1 = sharp_action(h, partial_g(h))
        t2 = sharp_action(jh, partial_g(jh))
        data = -0.5 * (t1.data - t2.data)
        return TensorField(geo, "TwoFormTM", data, halo=max(t1.halo, t2.halo),
                           flags=("Lambda2Minus",),
                           compact_support=h.compact_support)
    raise FieldError(f"unknown KS bracket path {path!r}")


def ks_bracket_sym(h1: TensorField, h2: TensorField) -> TensorField:
    """Polarized Kodaira-Spencer bracket via the type projection."""
    out = project(fn_bracket_sym(h1, h2), "Lambda2Minus")
    return out


def ks_bracket_tt(h: TensorField) -> TensorField:
    """Perturbed bracket [h,h]^c + 1/2 (delta h ^ h - delta(Jh) ^ Jh)."""
    from .fields import wedge_vector
    if "JAntiInvariant" not in h.flags:
        raise FieldError("perturbed KS bracket needs a SymMinus-flagged field")
    geo = h.geometry
    base = ks_bracket(h, "DirectFormula")
    jh = TensorField(geo, "Sym2", apply_j(h).data, halo=h.halo,
                     flags=("JAntiInvariant",), compact_support=h.compact_support)
    w1 = wedge_vector(divergence(h), h)
    w2 = wedge_vector(divergence(jh), jh)
    data = base.data + 0.5 * (w1.data - w2.data)
    return TensorField(geo, "TwoFormTM", data,
                       halo=max(base.halo, w1.halo, w2.halo),
                       flags=("Lambda2Minus",), compact_support=h.compact_support)


# ---------------------------------------------------------------------------
# the weak operator v
# ---------------------------------------------------------------------------

def _as_sym2(f: TensorField) -> TensorField:
    return TensorField(f.geometry, "Sym2", f.data, halo=f.halo,
                       flags=f.flags, compact_support=f.compact_support)


def v_triple(engine: PairingEngine, h1: TensorField, h2: TensorField,
             h3: TensorField) -> float:
    """Cyclic sum of <delta [h_a, h_b]^FN, h_c>_{L2}; the primitive
    definition of the symmetric operator v."""
    total = 0.0
    for (a, b, c) in ((h1, h2, h3), (h2, h3, h1), (h3, h1, h2)):
        br = divergence(fn_bracket_sym(a, b))
        total += engine.l2(_as_sym2(br), c)
    return total


def v_weak(engine: PairingEngine, h1: TensorField, h2: TensorField,
           H: TensorField) -> float:
    """<v(h1, h2), H>_{L2} through the integrated-by-parts formula:

    2 <[h1,h2]^FN, d_nabla H> - <H # d_nabla h1, d_nabla h2>
      + 1/2 <{h1, delta d_nabla h2} + {h2, delta d_nabla h1}
             - delta d_nabla {h1, h2}, H>.
    """
    br = fn_bracket_sym(h1, h2)
    t1 = 2.0 * engine.l2(br, d_nabla(H))
    t2 = engine.l2(sharp_action(H, d_nabla(h1)), d_nabla(h2))
    dd1 = divergence(d_nabla(h1))
    dd2 = divergence(d_nabla(h2))
    mid = (anticommutator(h1, dd2) + anticommutator(h2, dd1)
           - divergence(d_nabla(anticommutator(h1, h2))))
    t3 = 0.5 * engine.l2(_as_sym2(mid), H)
    return t1 - t2 + t3


# ---------------------------------------------------------------------------
# cubic obstruction density
# ---------------------------------------------------------------------------

def koiso_density(h: TensorField) -> TensorField:
    """P(h) with 2 P(h) = 3 g(nabla^2_{e_i, h e_i} h, h)
    - 6 g((nabla^2_{e_i, e_j} h) h e_i, h e_j) + 2 E tr(h^3)."""
    geo = h.geometry
    from .diffops import require_einstein
    E = require_einstein(geo)
    nab2, halo = second_nabla(h)
    T = np.einsum("...ac,...bc->...ab", geo.ginv, h.data)  # e_i (x) h e_i
    term1 = 3.0 * np.einsum("...ab,...pq,...mn,...abpm,...qn->...",
                            T, geo.g, geo.ginv, nab2, h.data, optimize=True)
    term2 = -6.0 * np.einsum("...ac,...bd,...pq,...abpm,...mc,...qd->...",
                             geo.ginv, geo.ginv, geo.g, nab2, h.data, h.data,
                             optimize=True)
    h3 = compose(square(h), h)
    term3 = 2.0 * E * np.einsum("...ii->...", h3.data)
    return TensorField(geo, "Scalar", 0.5 * (term1 + term2 + term3),
                       halo=halo, compact_support=h.compact_support)


def koiso_obstruction(engine: PairingEngine, h: TensorField) -> float:
    """Integral of the cubic density; requires compact support on ball charts."""
    geo = engine.geometry
    if not geo.is_torus and h.compact_support is None:
        raise FieldError("obstruction integral needs a compactly supported field")
    dens = koiso_density(h)
    return geo.integrate(dens.data, check_support=not geo.is_torus)


def koiso_first_term_ibp(engine: PairingEngine, h: TensorField) -> float:
    """Independent evaluation of int 3 g(nabla^2_{e_i, h e_i} h, h) vol after
    one integration by parts:

    int [ (delta h)^b g(nabla_b h, h) - T^{ab} g(nabla_b h, nabla_a h) ] vol
    with T^{ab} = g^{ac} h^b_c.
    """
    geo = engine.geometry
    sig = nabla(h)
    T = np.einsum("...ac,...bc->...ab", geo.ginv, h.data)
    dv = divergence(h)
    p1 = np.einsum("...b,...pq,...mn,...bpm,...qn->...",
                   dv.data, geo.g, geo.ginv, sig, h.data, optimize=True)
    p2 = np.einsum("...ab,...pq,...mn,...bpm,...aqn->...",
                   T, geo.g, geo.ginv, sig, sig, optimize=True)
    return 3.0 * geo.integrate(p1 - p2, check_support=not geo.is_torus)


def koiso_first_term_direct(engine: PairingEngine, h: TensorField) -> float:
    geo = engine.geometry
    nab2, _ = second_nabla(h)
    T = np.einsum("...ac,...bc->...ab", geo.ginv, h.data)
    val = np.einsum("...ab,...pq,...mn,...abpm,...qn->...",
                    T, geo.g, geo.ginv, nab2, h.data, optimize=True)
    return 3.0 * geo.integrate(val, check_support=not geo.is_torus)
