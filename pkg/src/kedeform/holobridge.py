"""Bridge between the real tensor formalism and the Dolbeault/Beltrami picture.

Provides local infinitesimal-deformation samples from holomorphic quadratic
differentials on the disk chart, the linear identification between
J-anti-invariant symmetric tensors and Beltrami fields, the coordinate
Dolbeault operator, the classical bracket on Beltrami fields, and the
deformed-complex-structure / Nijenhuis checks.

Complex dimension one is degenerate for everything bracket-valued: both
lambda^2_-(M, TM) and Omega^{0,2}(T^{1,0}) vanish identically on a surface,
so the bracket correspondence carries content only on m = 2 testbeds; the
m = 1 entry points return exact zeros and the calibration reports the
degeneracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .charts import Geometry
from .fields import FieldError, TensorField, project


@dataclass(frozen=True)
class BeltramiField:
    """T^{1,0}-valued (0, q)-form in chart coordinates, q in {0, 1, 2}.

    data layout: q=0 -> (..., m) complex; q=1 -> (..., m, m) complex with
    [a, b] = mu^a_{bbar}; q=2 -> (..., m, m, m) antisymmetric in the two
    (0,1) slots.
    """

    geometry: Geometry
    degree: int
    data: np.ndarray
    halo: int = 0

    @property
    def m(self) -> int:
        return self.geometry.m


def _complex_coords(geo: Geometry) -> list:
    coords = geo.coordinates()
    return [coords[2 * a] + 1j * coords[2 * a + 1] for a in range(geo.m)]


def _d_z(geo: Geometry, arr: np.ndarray, a: int) -> np.ndarray:
    """Holomorphic coordinate derivative d/dz^a on a complex array."""
    dx = geo.deriv(arr.real, 2 * a) + 1j * geo.deriv(arr.imag, 2 * a)
    dy = geo.deriv(arr.real, 2 * a + 1) + 1j * geo.deriv(arr.imag, 2 * a + 1)
    return 0.5 * (dx - 1j * dy)


def _d_zbar(geo: Geometry, arr: np.ndarray, a: int) -> np.ndarray:
    dx = geo.deriv(arr.real, 2 * a) + 1j * geo.deriv(arr.imag, 2 * a)
    dy = geo.deriv(arr.real, 2 * a + 1) + 1j * geo.deriv(arr.imag, 2 * a + 1)
    return 0.5 * (dx + 1j * dy)


# ---------------------------------------------------------------------------
# quadratic differential samples (m = 1)
# ---------------------------------------------------------------------------

def quad_diff_sample(geo: Geometry, q_coeffs) -> TensorField:
    """h = g^{-1} Re(q dz^2) on the disk chart for polynomial q.

    For holomorphic q this produces (numerically verifiable) trace-free,
    J-anti-invariant, divergence-free tensors: local members of the
    infinitesimal-deformation space.
    """
    if geo.m != 1:
        raise FieldError("quadratic differential samples exist for m = 1 only")
    z = _complex_coords(geo)[0]
    q = np.zeros_like(z)
    for k, c in enumerate(q_coeffs):
        q = q + complex(c) * z ** k
    u, v = q.real, q.imag
    # Re(q dz^2) has component matrix [[u, -v], [-v, -u]]
    b = np.zeros(geo.grid_shape + (2, 2))
    b[..., 0, 0] = u
    b[..., 0, 1] = -v
    b[..., 1, 0] = -v
    b[..., 1, 1] = -u
    data = np.einsum("...ik,...kj->...ij", geo.ginv, b)
    return TensorField(geo, "Sym2", data, flags=("JAntiInvariant",))


# ---------------------------------------------------------------------------
# linear identification h <-> mu
# ---------------------------------------------------------------------------

def sym_to_beltrami(h: TensorField) -> BeltramiField:
    """mu^a_b = [h d/dzbar^b]^{z^a} for a J-anti-invariant endomorphism."""
    if "JAntiInvariant" not in h.flags:
        raise FieldError("Beltrami identification needs a SymMinus-flagged field")
    geo = h.geometry
    m = geo.m
    d = h.data
    mu = np.zeros(geo.grid_shape + (m, m), dtype=complex)
    for a in range(m):
        for b in range(m):
            xa, ya, xb, yb = 2 * a, 2 * a + 1, 2 * b, 2 * b + 1
            mu[..., a, b] = 0.5 * ((d[..., xa, xb] - d[..., ya, yb])
                                   + 1j * (d[..., ya, xb] + d[..., xa, yb]))
    return BeltramiField(geo, 1, mu, halo=h.halo)


def beltrami_to_sym(mu: BeltramiField) -> TensorField:
    """Inverse of sym_to_beltrami on its image."""
    if mu.degree != 1:
        raise FieldError("beltrami_to_sym expects a degree-1 field")
    geo = mu.geometry
    m = geo.m
    n = geo.n
    d = np.zeros(geo.grid_shape + (n, n))
    for a in range(m):
        for b in range(m):
            xa, ya, xb, yb = 2 * a, 2 * a + 1, 2 * b, 2 * b + 1
            re, im = mu.data[..., a, b].real, mu.data[..., a, b].imag
            d[..., xa, xb] = re
            d[..., ya, xb] = im
            d[..., xa, yb] = im
            d[..., ya, yb] = -re
    return TensorField(geo, "Sym2", d, halo=mu.halo, flags=("JAntiInvariant",))


def twoform_tm_to_beltrami(alpha: TensorField) -> BeltramiField:
    """(0,2)-component of a lambda^2_- valued form:
    B^a_{bc} = [alpha(d/dzbar^b, d/dzbar^c)]^{z^a}."""
    geo = alpha.geometry
    m = geo.m
    d = alpha.data
    out = np.zeros(geo.grid_shape + (m, m, m), dtype=complex)
    for b in range(m):
        for c in range(m):
            xb, yb, xc, yc = 2 * b, 2 * b + 1, 2 * c, 2 * c + 1
            # alpha(dzbar^b, dzbar^c) = 1/4 [a(xb,xc) - a(yb,yc)
            #                               + i a(yb,xc) + i a(xb,yc)]
            vec = 0.25 * (d[..., :, xb, xc] - d[..., :, yb, yc]
                          + 1j * d[..., :, yb, xc] + 1j * d[..., :, xb, yc])
            for a in range(m):
                out[..., a, b, c] = vec[..., 2 * a] + 1j * vec[..., 2 * a + 1]
    return BeltramiField(geo, 2, out, halo=alpha.halo)


# ---------------------------------------------------------------------------
# Dolbeault operator and the classical bracket
# ---------------------------------------------------------------------------

def dolbeault_dbar(f: BeltramiField) -> BeltramiField:
    """Coordinate Dolbeault operator on Omega^{0,q}(T^{1,0}), q in {0, 1}."""
    geo = f.geometry
    m = geo.m
    if f.degree == 0:
        out = np.zeros(geo.grid_shape + (m, m), dtype=complex)
        for a in range(m):
            for b in range(m):
                out[..., a, b] = _d_zbar(geo, f.data[..., a], b)
        return BeltramiField(geo, 1, out, halo=f.halo + geo.deriv_halo)
    if f.degree == 1:
        out = np.zeros(geo.grid_shape + (m, m, m), dtype=complex)
        for a in range(m):
            for b in range(m):
                for c in range(m):
                    out[..., a, b, c] = (_d_zbar(geo, f.data[..., a, c], b)
                                         - _d_zbar(geo, f.data[..., a, b], c))
        return BeltramiField(geo, 2, out, halo=f.halo + geo.deriv_halo)
    raise FieldError("dolbeault_dbar implemented for degrees 0 and 1")


def beltrami_bracket(mu: BeltramiField, nu: BeltramiField) -> BeltramiField:
    """Classical symmetric bracket on Omega^{0,1}(T^{1,0}):

    [mu, nu]^a_{bc} = mu^d_b d_{z^d} nu^a_c + nu^d_b d_{z^d} mu^a_c
                      - (b <-> c).
    Identically zero for m = 1 (no (0,2)-forms on a surface).
    """
    if mu.degree != 1 or nu.degree != 1:
        raise FieldError("bracket needs degree-1 Beltrami fields")
    geo = mu.geometry
    m = geo.m
    dz_nu = np.zeros(geo.grid_shape + (m, m, m), dtype=complex)
    dz_mu = np.zeros(geo.grid_shape + (m, m, m), dtype=complex)
    for d_ in range(m):
        for a in range(m):
            for c in range(m):
                dz_nu[..., d_, a, c] = _d_z(geo, nu.data[..., a, c], d_)
                dz_mu[..., d_, a, c] = _d_z(geo, mu.data[..., a, c], d_)
    out = (np.einsum("...db,...dac->...abc", mu.data, dz_nu)
           + np.einsum("...db,...dac->...abc", nu.data, dz_mu))
    out = out - np.swapaxes(out, -1, -2)
    return BeltramiField(geo, 2, out,
                         halo=max(mu.halo, nu.halo) + geo.deriv_halo)


# ---------------------------------------------------------------------------
# deformed complex structures
# ---------------------------------------------------------------------------

def deformed_j(h: TensorField, t: float) -> TensorField:
    """J_{th} = (1 - t h)^{-1} J (1 - t h); needs |t| sup|h| < 1."""
    geo = h.geometry
    n = geo.n
    eye = np.eye(n)
    a = eye - t * h.data
    try:
        a_inv = np.linalg.inv(a)
    except np.linalg.LinAlgError:
        raise FieldError("1 - t h is singular; reduce t") from None
    data = np.einsum("...ij,jk,...kl->...il", a_inv, geo.J, a, optimize=True)
    return TensorField(geo, "End", data, halo=h.halo,
                       compact_support=h.compact_support)


def nijenhuis(jf: TensorField) -> TensorField:
    """Nijenhuis tensor of an almost complex structure field by raw
    differentiation:
    N^i_{jk} = J^a_j (d_a J^i_k - d_k J^i_a) - J^a_k (d_a J^i_j - d_j J^i_a).
    """
    geo = jf.geometry
    n = geo.n
    dJ = np.zeros(geo.grid_shape + (n, n, n))
    for a in range(n):
        dJ[..., a, :, :] = geo.deriv(jf.data, a)
    t = (np.einsum("...aj,...aik->...ijk", jf.data, dJ)
         - np.einsum("...aj,...kia->...ijk", jf.data, dJ))
    data = t - np.swapaxes(t, -1, -2)
    return TensorField(geo, "TwoFormTM", data,
                       halo=jf.halo + geo.deriv_halo,
                       compact_support=jf.compact_support)


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

def conformal_factor_exponent(geo: Geometry, q_coeffs=(1.0,)) -> dict:
    """Golden identification mu = conj(q) / lambda^2 on the disk.

    Returns the measured multiplicative field ratio against conj(q) and the
    fitted power p in mu = conj(q) * (lambda^2)^p; the calibrated value is
    p = -1 on the conformal factor lambda^2 = 4 (1-|z|^2)^{-2}.
    """
    if geo.m != 1:
        raise FieldError("conformal calibration is an m = 1 procedure")
    h = quad_diff_sample(geo, q_coeffs)
    mu = sym_to_beltrami(h).data[..., 0, 0]
    z = _complex_coords(geo)[0]
    q = sum(complex(c) * z ** k for k, c in enumerate(q_coeffs))
    lam2 = geo.g[..., 0, 0]
    mask = (np.abs(q) > 1e-6) & geo.active_mask()
    ratio = (mu[mask] / np.conj(q[mask]))
    p_fit = np.log(np.abs(ratio)) / np.log(lam2[mask])
    return {
        "exponent_fit": float(np.median(p_fit)),
        "exponent_spread": float(p_fit.max() - p_fit.min()),
        "phase_residual": float(np.abs(np.angle(ratio)).max()),
    }


def calibrate_bracket_constant(geo: Geometry, seeds=(17, 18, 19)) -> dict:
    """Least-squares constant kappa with
    twoform_tm_to_beltrami(ks_bracket(h)) = kappa * beltrami_bracket(mu, mu).

    Degenerate (both sides identically zero) for m = 1; the real content
    lives on m = 2 testbeds.
    """
    from .brackets import ks_bracket
    from .fields import sample_field

    results = []
    for seed in seeds:
        h = sample_field(geo, "Sym2", "RandomGlobal"
                         if geo.is_torus else "RandomBump",
                         seed=seed, flags=("JAntiInvariant",))
        ks = ks_bracket(h, "DirectFormula")
        lhs = twoform_tm_to_beltrami(ks).data
        mu = sym_to_beltrami(h)
        rhs = beltrami_bracket(mu, mu).data
        mask = geo.active_mask()
        lhs_m = lhs[mask].ravel()
        rhs_m = rhs[mask].ravel()
        denom = float(np.vdot(rhs_m, rhs_m).real)
        if denom < 1e-28:
            results.append({"seed": seed, "kappa": 0.0, "residual": 0.0,
                            "degenerate": True})
            continue
        kappa = complex(np.vdot(rhs_m, lhs_m) / denom)
        resid = float(np.linalg.norm(lhs_m - kappa * rhs_m)
                      / max(np.linalg.norm(lhs_m), 1e-300))
        results.append({"seed": seed, "kappa_real": kappa.real,
                        "kappa_imag": kappa.imag, "residual": resid,
                        "degenerate": False})
    out = {"samples": results}
    nondeg = [r for r in results if not r.get("degenerate")]
    if nondeg:
        out["kappa"] = float(np.mean([r["kappa_real"] for r in nondeg]))
        out["kappa_spread"] = float(np.ptp([r["kappa_real"] for r in nondeg]))
        out["max_residual"] = float(max(r["residual"] for r in nondeg))
    else:
        out["kappa"] = 0.0
        out["kappa_spread"] = 0.0
        out["max_residual"] = 0.0
        out["degenerate"] = True
    return out
