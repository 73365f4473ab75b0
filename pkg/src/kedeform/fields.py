"""Typed tensor fields on a chart, pointwise algebra, complex-type projections,
and the L2 pairing engine.

Bundles and their component layouts (grid axes first):

* ``Scalar``      f                    (...,)
* ``Vector``      V^i                  (..., n)
* ``OneForm``     a_i                  (..., n)
* ``End``         h^i_j                (..., n, n)
* ``Sym2``        g-symmetric h^i_j    (..., n, n)
* ``TwoFormTM``   a^i_{jk}, jk antisym (..., n, n, n)
* ``TwoForm``     b_{ij}  antisym      (..., n, n)
* ``ThreeForm``   t_{ijk} antisym      (..., n, n, n)

The inner product on TwoFormTM carries the factor 1/2 (sum over unordered
frame pairs); scalar-valued k-forms carry 1/k!.  These normalizations are
what make the declared (d_nabla, divergence) and (d, d*) adjoint pairs pass
the integration-by-parts calibration tests.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .charts import ChartError, Geometry

VALID_BUNDLES = ("Scalar", "Vector", "OneForm", "End", "Sym2",
                 "TwoFormTM", "TwoForm", "ThreeForm",
                 # internal bundles without index symmetries, used to carry
                 # first covariant derivatives through a second pass
                 "TwoForm_ns", "TwoFormTM_ns")

# covariant-derivative variance signature per bundle: +1 upper, -1 lower index
BUNDLE_VARIANCE = {
    "Scalar": (),
    "Vector": (1,),
    "OneForm": (-1,),
    "End": (1, -1),
    "Sym2": (1, -1),
    "TwoFormTM": (1, -1, -1),
    "TwoForm": (-1, -1),
    "ThreeForm": (-1, -1, -1),
    "TwoForm_ns": (-1, -1),
    "TwoFormTM_ns": (1, -1, -1),
}

VALID_FLAGS = ("JInvariant", "JAntiInvariant", "Form11", "Lambda2",
               "Lambda2Plus", "Lambda2Minus")


class FieldError(ValueError):
    """Raised on bundle/flag/support violations."""


@dataclass(frozen=True)
class TensorField:
    """A grid-sampled section of one tensor bundle over a Geometry."""

    geometry: Geometry
    bundle: str
    data: np.ndarray
    halo: int = 0  # invalid boundary layers (ball charts only)
    flags: tuple = ()
    compact_support: Optional[float] = None  # support radius, if compact

    def __post_init__(self):
        if self.bundle not in VALID_BUNDLES:
            raise FieldError(f"unknown bundle {self.bundle!r}")
        expected = self.geometry.grid_shape + (self.geometry.n,) * len(
            BUNDLE_VARIANCE[self.bundle])
        if self.data.shape != expected:
            raise FieldError(
                f"component array shape {self.data.shape} does not match "
                f"bundle {self.bundle} on this chart (expected {expected})")

    @property
    def n(self) -> int:
        return self.geometry.n

    def with_data(self, data: np.ndarray, extra_halo: int = 0,
                  bundle: Optional[str] = None, flags: tuple = ()) -> "TensorField":
        return TensorField(self.geometry, bundle or self.bundle, data,
                           halo=self.halo + extra_halo, flags=flags,
                           compact_support=self.compact_support)

    def same_chart(self, other: "TensorField") -> None:
        if self.geometry is not other.geometry:
            raise FieldError("fields live on different geometries")

    def __add__(self, other):
        self.same_chart(other)
        if other.bundle != self.bundle and {self.bundle, other.bundle} != {"End", "Sym2"}:
            raise FieldError(f"cannot add {self.bundle} and {other.bundle}")
        bundle = "End" if self.bundle != other.bundle else self.bundle
        return TensorField(self.geometry, bundle, self.data + other.data,
                           halo=max(self.halo, other.halo),
                           compact_support=_merge_support(self, other))

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, scalar: float):
        return TensorField(self.geometry, self.bundle, scalar * self.data,
                           halo=self.halo, flags=self.flags,
                           compact_support=self.compact_support)


def _merge_support(a: TensorField, b: TensorField) -> Optional[float]:
    if a.compact_support is None and b.compact_support is None:
        return None
    if a.compact_support is None:
        return b.compact_support
    if b.compact_support is None:
        return a.compact_support
    return max(a.compact_support, b.compact_support)


# ---------------------------------------------------------------------------
# field sampling
# ---------------------------------------------------------------------------

def plateau_profile(s2: np.ndarray, k: int = 10) -> np.ndarray:
    """Compactly supported C^{k-1} plateau (1 - s^2)^k for s^2 < 1.

    Chosen over the classical exp(-1/(1-s^2)) bump because the latter has an
    edge boundary layer whose high derivatives are unresolvable at the grid
    resolutions and FD orders used here.
    """
    return np.where(s2 < 1.0, np.maximum(1.0 - s2, 0.0) ** k, 0.0)


def _scaled_radius2(geo: Geometry, support: float, center: np.ndarray) -> np.ndarray:
    """Smooth squared radius / support^2 centered near the chart origin."""
    coords = geo.coordinates()
    if geo.is_torus:
        # sin-based periodic distance keeps the profile C-infinity
        L = geo.spec.period
        s2 = sum(((L / np.pi) * np.sin(np.pi * (c - c0) / L)) ** 2
                 for c, c0 in zip(coords, center))
    else:
        s2 = sum((c - c0) ** 2 for c, c0 in zip(coords, center))
    return s2 / support ** 2


def _random_wave(geo: Geometry, rng: np.random.Generator, degree: int = 3) -> np.ndarray:
    """Smooth global scalar: low-degree trig (torus) or polynomial x trig (ball)."""
    coords = geo.coordinates()
    n = geo.n
    out = np.zeros(geo.grid_shape)
    if geo.is_torus:
        freq = 2.0 * np.pi / geo.spec.period
        for _ in range(3):
            ks = rng.integers(-degree, degree + 1, size=n)
            phase = rng.uniform(0, 2 * np.pi)
            amp = rng.uniform(0.3, 1.0)
            arg = phase + freq * sum(int(k) * c for k, c in zip(ks, coords))
            out += amp * np.cos(arg)
    else:
        scale = 1.0 / geo.spec.radius
        for _ in range(3):
            amp = rng.uniform(0.3, 1.0)
            ks = rng.uniform(-2.0, 2.0, size=n)
            powers = rng.integers(0, degree + 1, size=n)
            term = amp * np.cos(sum(k * c * scale for k, c in zip(ks, coords))
                                + rng.uniform(0, 2 * np.pi))
            for c, pw in zip(coords, powers):
                if pw:
                    term = term * (c * scale) ** int(pw)
            out += term
    return out


def sample_field(geo: Geometry, bundle: str, recipe: str = "RandomBump",
                 seed: int = 0, support: Optional[float] = None,
                 components: Optional[np.ndarray] = None,
                 flags: tuple = (), degree: int = 3,
                 plateau_power: int = 10) -> TensorField:
    """Deterministic test-field generator.

    recipe:
      * ``RandomBump``  plateau profile times smooth seeded waves; forced to
        compact support on ball charts.
      * ``RandomGlobal`` smooth seeded waves without the plateau (for
        pointwise identities that never integrate).
      * ``Constant``    constant components (must satisfy bundle invariants).

    Sym2 samples are built as g^{-1} (symmetrized bilinear form) so the
    g-symmetry invariant holds to rounding.  Requested complex-type flags are
    imposed with the corresponding projector.
    """
    n = geo.n
    rng = np.random.default_rng(seed)
    grid = geo.grid_shape

    if recipe == "Constant":
        if components is None:
            raise FieldError("Constant recipe needs components")
        mat = np.asarray(components, dtype=float)
        data = np.empty(grid + mat.shape)
        data[...] = mat
        f = TensorField(geo, bundle, data, flags=())
        _check_bundle_invariants(f)
        return replace(f, flags=tuple(flags))

    if recipe not in ("RandomBump", "RandomGlobal"):
        raise FieldError(f"unknown recipe {recipe!r}")

    window = None
    if recipe == "RandomBump":
        if support is None:
            # leave stencil-spill margin inside the active region
            support = 0.45 * geo.spec.period if geo.is_torus else 0.8 * geo.spec.active_radius
        if geo.is_torus:
            center = rng.uniform(0, geo.spec.period, size=n)
        else:
            center = rng.uniform(-0.05, 0.05, size=n) * geo.spec.active_radius
        s2 = _scaled_radius2(geo, support, center)
        window = plateau_profile(s2, plateau_power)

    def scalar():
        w = _random_wave(geo, rng, degree)
        return w * window if window is not None else w

    comp_shape = (n,) * len(BUNDLE_VARIANCE[bundle])
    data = np.zeros(grid + comp_shape)
    flat_comps = int(np.prod(comp_shape)) if comp_shape else 1
    raw = np.stack([scalar() for _ in range(flat_comps)], axis=-1)
    data = raw.reshape(grid + comp_shape) if comp_shape else raw[..., 0]

    if bundle in ("Sym2",):
        # build from a bilinear form: h^i_j = g^{ik} sym(B)_{kj}
        B = data
        Bs = 0.5 * (B + np.swapaxes(B, -1, -2))
        data = np.einsum("...ik,...kj->...ij", geo.ginv, Bs)
    elif bundle == "TwoFormTM":
        data = 0.5 * (data - np.swapaxes(data, -1, -2))
    elif bundle in ("TwoForm",):
        data = 0.5 * (data - np.swapaxes(data, -1, -2))
    elif bundle == "ThreeForm":
        data = _antisymmetrize3(data)

    f = TensorField(geo, bundle, data,
                    compact_support=(support if recipe == "RandomBump" else None))
    for flag in flags:
        f = project(f, _flag_to_target(flag))
    _check_bundle_invariants(f)
    return f


def _flag_to_target(flag: str) -> str:
    return {
        "JInvariant": "SymPlus", "JAntiInvariant": "SymMinus",
        "Form11": "Form11", "Lambda2": "Lambda2",
        "Lambda2Plus": "Lambda2Plus", "Lambda2Minus": "Lambda2Minus",
    }[flag]


def _antisymmetrize3(t: np.ndarray) -> np.ndarray:
    perms = [((-3, -2, -1), 1), ((-2, -1, -3), 1), ((-1, -3, -2), 1),
             ((-2, -3, -1), -1), ((-3, -1, -2), -1), ((-1, -2, -3), -1)]
    out = np.zeros_like(t)
    base = list(range(t.ndim - 3))
    for axes, sign in perms:
        order = base + [t.ndim + a for a in axes]
        out += sign * np.transpose(t, order)
    return out / 6.0


def _check_bundle_invariants(f: TensorField, tol: float = 1e-12) -> None:
    geo = f.geometry
    if f.bundle == "Sym2":
        low = np.einsum("...ik,...kj->...ij", geo.g, f.data)
        resid = np.abs(low - np.swapaxes(low, -1, -2)).max()
        scale = max(np.abs(low).max(), 1.0)
        if resid > tol * scale * 10:
            raise FieldError(f"Sym2 field is not g-symmetric (residual {resid:.3e})")
    elif f.bundle in ("TwoFormTM", "TwoForm"):
        resid = np.abs(f.data + np.swapaxes(f.data, -1, -2)).max()
        if resid > tol * max(np.abs(f.data).max(), 1.0) * 10:
            raise FieldError(f"{f.bundle} field is not antisymmetric")
    if f.compact_support is not None and not geo.is_torus:
        mask = geo.radius2() > min(1.05 * f.compact_support,
                                   geo.spec.active_radius * 0.999 + 1e-12) ** 2
        if mask.any():
            tail = np.abs(f.data[mask]).max() if f.data[mask].size else 0.0
            if tail > 1e-11 * max(np.abs(f.data).max(), 1e-30):
                raise FieldError("compact field leaks outside its support")


# ---------------------------------------------------------------------------
# pointwise endomorphism algebra
# ---------------------------------------------------------------------------

def compose(a: TensorField, b: TensorField) -> TensorField:
    """Pointwise composition a o b of endomorphism-type fields."""
    a.same_chart(b)
    if a.bundle not in ("End", "Sym2") or b.bundle not in ("End", "Sym2"):
        raise FieldError("compose needs End/Sym2 operands")
    data = np.einsum("...ij,...jk->...ik", a.data, b.data)
    return TensorField(a.geometry, "End", data, halo=max(a.halo, b.halo),
                       compact_support=_merge_support(a, b))


def anticommutator(a: TensorField, b: TensorField) -> TensorField:
    ab, ba = compose(a, b), compose(b, a)
    out = ab + ba
    if a.bundle == "Sym2" and b.bundle == "Sym2":
        out = replace(out, bundle="Sym2")
    return out


def commutator(a: TensorField, b: TensorField) -> TensorField:
    return compose(a, b) - compose(b, a)


def square(a: TensorField) -> TensorField:
    out = compose(a, a)
    if a.bundle == "Sym2":
        out = replace(out, bundle="Sym2")
    return out


def trace(a: TensorField) -> TensorField:
    if a.bundle not in ("End", "Sym2"):
        raise FieldError("trace needs an End/Sym2 field")
    return TensorField(a.geometry, "Scalar", np.einsum("...ii->...", a.data),
                       halo=a.halo, compact_support=a.compact_support)


def g_transpose(a: TensorField) -> TensorField:
    """Transpose with respect to the metric: (h^T)^i_j = g^{ia} g_{jb} h^b_a."""
    geo = a.geometry
    data = np.einsum("...ia,...jb,...ba->...ij", geo.ginv, geo.g, a.data,
                     optimize=True)
    return a.with_data(data, bundle="End")


def identity_field(geo: Geometry) -> TensorField:
    data = np.empty(geo.grid_shape + (geo.n, geo.n))
    data[...] = np.eye(geo.n)
    return TensorField(geo, "Sym2", data, flags=("JInvariant",))


def j_field(geo: Geometry) -> TensorField:
    data = np.empty(geo.grid_shape + (geo.n, geo.n))
    data[...] = geo.J
    return TensorField(geo, "End", data)


def apply_j(a: TensorField) -> TensorField:
    """Left composition J o h (e.g. Jh for Sym2 h)."""
    data = np.einsum("im,...mj->...ij", a.geometry.J, a.data)
    return a.with_data(data, bundle="End" if a.bundle in ("End", "Sym2") else a.bundle)


def compose_j(a: TensorField) -> TensorField:
    """Right composition h o J."""
    data = np.einsum("...im,mj->...ij", a.data, a.geometry.J)
    return a.with_data(data, bundle="End")


def end_algebra(op: str, a: TensorField, b: Optional[TensorField] = None) -> TensorField:
    ops1 = {"square": square, "trace": trace, "transpose": g_transpose}
    ops2 = {"compose": compose, "anticommutator": anticommutator,
            "commutator": commutator}
    if op in ops1:
        return ops1[op](a)
    if op in ops2:
        if b is None:
            raise FieldError(f"{op} needs two operands")
        return ops2[op](a, b)
    raise FieldError(f"unknown endomorphism operation {op!r}")


# ---------------------------------------------------------------------------
# TM-valued form actions
# ---------------------------------------------------------------------------

def sharp_action(h: TensorField, alpha: TensorField) -> TensorField:
    """(h # alpha)(X, Y) = alpha(hX, Y) + alpha(X, hY)."""
    h.same_chart(alpha)
    if alpha.bundle != "TwoFormTM":
        raise FieldError("sharp action needs a TwoFormTM")
    data = (np.einsum("...iak,...aj->...ijk", alpha.data, h.data)
            + np.einsum("...ija,...ak->...ijk", alpha.data, h.data))
    return TensorField(h.geometry, "TwoFormTM", data,
                       halo=max(h.halo, alpha.halo),
                       compact_support=_merge_support(h, alpha))


def circ_action(h: TensorField, alpha: TensorField) -> TensorField:
    """(h o alpha)(X, Y) = h(alpha(X, Y))."""
    h.same_chart(alpha)
    if alpha.bundle != "TwoFormTM":
        raise FieldError("circ action needs a TwoFormTM")
    data = np.einsum("...ia,...ajk->...ijk", h.data, alpha.data)
    return TensorField(h.geometry, "TwoFormTM", data,
                       halo=max(h.halo, alpha.halo),
                       compact_support=_merge_support(h, alpha))


def wedge_vector(x: TensorField, h: TensorField) -> TensorField:
    """(X ^ h)(Y, Z) = g(X, Y) h Z - g(X, Z) h Y, a TwoFormTM."""
    x.same_chart(h)
    if x.bundle not in ("Vector", "OneForm"):
        raise FieldError("wedge needs a vector or one-form first argument")
    geo = x.geometry
    xlow = x.data if x.bundle == "OneForm" else np.einsum(
        "...ja,...a->...j", geo.g, x.data)
    data = (np.einsum("...j,...ik->...ijk", xlow, h.data)
            - np.einsum("...k,...ij->...ijk", xlow, h.data))
    return TensorField(geo, "TwoFormTM", data, halo=max(x.halo, h.halo),
                       compact_support=_merge_support(x, h))


def antisymmetrize_to_3form(alpha: TensorField) -> TensorField:
    """a(alpha)(X,Y,Z) = cyclic sum of g(alpha(X,Y), Z), a 3-form."""
    geo = alpha.geometry
    if alpha.bundle != "TwoFormTM":
        raise FieldError("antisymmetrization needs a TwoFormTM")
    low = np.einsum("...il,...ijk->...jkl", geo.g, alpha.data)
    data = (low + np.einsum("...jkl->...klj", low)
            + np.einsum("...jkl->...ljk", low))
    return TensorField(geo, "ThreeForm", data, halo=alpha.halo,
                       compact_support=alpha.compact_support)


def form_actions(op: str, *args: TensorField) -> TensorField:
    table = {"sharp": sharp_action, "circ": circ_action,
             "wedge": wedge_vector, "antisymmetrize": antisymmetrize_to_3form}
    if op not in table:
        raise FieldError(f"unknown form action {op!r}")
    return table[op](*args)


# ---------------------------------------------------------------------------
# complex-type projections
# ---------------------------------------------------------------------------

def project(f: TensorField, target: str) -> TensorField:
    """Idempotent complex-type projections.

    Sym2: SymPlus / SymMinus.  TwoFormTM: Form11, Lambda2 (the J-anti-
    invariant 2-form part), Lambda2Plus / Lambda2Minus (its refinement).
    """
    geo = f.geometry
    J = geo.J
    if target in ("SymPlus", "SymMinus"):
        if f.bundle not in ("End", "Sym2"):
            raise FieldError(f"{target} projection needs End/Sym2")
        JhJ = np.einsum("ia,...ab,bj->...ij", J, f.data, J, optimize=True)
        sign = -1.0 if target == "SymPlus" else 1.0
        data = 0.5 * (f.data + sign * JhJ)
        flag = "JInvariant" if target == "SymPlus" else "JAntiInvariant"
        return TensorField(geo, f.bundle, data, halo=f.halo, flags=(flag,),
                           compact_support=f.compact_support)
    if target in ("Form11", "Lambda2", "Lambda2Plus", "Lambda2Minus"):
        if f.bundle != "TwoFormTM":
            raise FieldError(f"{target} projection needs TwoFormTM")
        aJJ = np.einsum("...ipq,pj,qk->...ijk", f.data, J, J, optimize=True)
        if target == "Form11":
            return TensorField(geo, "TwoFormTM", 0.5 * (f.data + aJJ),
                               halo=f.halo, flags=("Form11",),
                               compact_support=f.compact_support)
        lam = 0.5 * (f.data - aJJ)
        if target == "Lambda2":
            return TensorField(geo, "TwoFormTM", lam, halo=f.halo,
                               flags=("Lambda2",), compact_support=f.compact_support)
        # within lambda^2: 2 gamma_-(X,Y) = gamma(X,Y) + J gamma(X, JY)
        JgJ = np.einsum("im,...mjp,pk->...ijk", J, lam, J, optimize=True)
        sign = 1.0 if target == "Lambda2Minus" else -1.0
        data = 0.5 * (lam + sign * JgJ)
        return TensorField(geo, "TwoFormTM", data, halo=f.halo, flags=(target,),
                           compact_support=f.compact_support)
    raise FieldError(f"unknown projection target {target!r}")


def flag_residual(f: TensorField, flag: str) -> float:
    """Projector-idempotence check: |P(f) - f| relative sup norm."""
    p = project(f, _flag_to_target(flag))
    scale = max(float(np.abs(f.data).max()), 1e-30)
    return float(np.abs(p.data - f.data).max() / scale)


# ---------------------------------------------------------------------------
# pairing engine
# ---------------------------------------------------------------------------

@dataclass
class PairingEngine:
    """Pointwise inner products and L2 pairings with frame conventions.

    Frame sums over the orthonormalized coordinate frame reduce to metric
    contractions, which is how all products below are implemented; the
    explicit frame is kept only for its orthonormality self-test.
    """

    geometry: Geometry

    def frame(self) -> np.ndarray:
        """Per-node orthonormal frame e_i = B^a_i d_a via Cholesky of g."""
        L = np.linalg.cholesky(self.geometry.g)
        return np.swapaxes(np.linalg.inv(L), -1, -2)

    def pointwise(self, a: TensorField, b: TensorField) -> np.ndarray:
        a.same_chart(b)
        geo = self.geometry
        ba, bb = a.bundle, b.bundle
        if {ba, bb} <= {"End", "Sym2"}:
            return np.einsum("...pq,...ab,...pa,...qb->...", geo.g, geo.ginv,
                             a.data, b.data, optimize=True)
        if ba != bb:
            raise FieldError(f"cannot pair {ba} with {bb}")
        if ba == "Scalar":
            return a.data * b.data
        if ba == "Vector":
            return np.einsum("...ab,...a,...b->...", geo.g, a.data, b.data)
        if ba == "OneForm":
            return np.einsum("...ab,...a,...b->...", geo.ginv, a.data, b.data)
        if ba == "TwoFormTM":
            return 0.5 * np.einsum("...pq,...ac,...bd,...pab,...qcd->...",
                                   geo.g, geo.ginv, geo.ginv, a.data, b.data,
                                   optimize=True)
        if ba == "TwoForm":
            return 0.5 * np.einsum("...ac,...bd,...ab,...cd->...",
                                   geo.ginv, geo.ginv, a.data, b.data,
                                   optimize=True)
        if ba == "ThreeForm":
            return (1.0 / 6.0) * np.einsum(
                "...ad,...be,...cf,...abc,...def->...",
                geo.ginv, geo.ginv, geo.ginv, a.data, b.data, optimize=True)
        raise FieldError(f"no inner product for bundle {ba}")

    def norm_pointwise(self, a: TensorField) -> np.ndarray:
        return np.sqrt(np.maximum(self.pointwise(a, a), 0.0))

    def l2(self, a: TensorField, b: TensorField,
           require_compact: bool = True) -> float:
        """L2 pairing; on ball charts one argument must be compact unless the
        caller explicitly waives the requirement."""
        geo = self.geometry
        if (not geo.is_torus and require_compact
                and a.compact_support is None and b.compact_support is None):
            raise FieldError(
                "L2 pairing on a ball chart needs a compactly supported argument")
        integrand = self.pointwise(a, b)
        return geo.integrate(integrand,
                             check_support=require_compact and not geo.is_torus)

    def sup_norm(self, a: TensorField, extra_halo: int = 0) -> float:
        """Sup over trusted nodes of the pointwise frame norm."""
        geo = self.geometry
        halo = a.halo + extra_halo
        geo.check_margin(halo)
        mask = geo.active_mask()
        vals = self.norm_pointwise(a)
        return float(vals[mask].max())


def residual_norm(engine: PairingEngine, resid: TensorField,
                  inputs: list) -> float:
    """Scale-free residual: sup frame-norm over active nodes divided by
    (1 + sup frame-norm of the inputs)."""
    scale = 1.0
    for f in inputs:
        scale = max(scale, engine.sup_norm(f))
    return engine.sup_norm(resid) / scale


def l2_pair(engine: PairingEngine, a: TensorField, b: TensorField) -> float:
    return engine.l2(a, b)
