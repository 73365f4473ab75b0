"""Discretized Kahler testbeds: flat/perturbed tori and complex-hyperbolic ball charts.

A chart is a uniform grid in real coordinates (x1, y1, ..., xm, ym) carrying a
Kahler metric, the standard constant complex structure J, and numerically
derived Christoffel symbols and curvature.  Two derivative backends are
provided: Fourier pseudospectral differentiation on periodic tori and
high-order central finite differences on ball charts.

Index conventions used throughout the package:

* grid axes come first, component indices last;
* endomorphisms are stored as ``h[..., i, j] = h^i_j`` so that matrix
  multiplication along the last two axes is composition;
* the curvature tensor is stored mixed, ``riem[..., l, i, j, k]`` meaning
  ``R(e_i, e_j) e_k = riem^l_{ijk} e_l`` with the sign convention
  ``R(X, Y) = nabla^2_{Y,X} - nabla^2_{X,Y}``.  With this convention the
  frame contraction ``sum_i R(e_i, X) e_i`` is the Ricci endomorphism, so
  the Poincare disk has ``ric = -g``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# Central finite-difference coefficients for the first derivative,
# indexed by approximation order; stencil offsets are -p..p with p = order//2.
_FD_COEFFS = {
    2: np.array([-0.5, 0.0, 0.5]),
    4: np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12]),
    6: np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60]),
    8: np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280]),
}


class ChartError(ValueError):
    """Raised when a chart specification or construction is invalid."""


@dataclass(frozen=True)
class ChartSpec:
    """Static description of a discretized chart."""

    kind: str  # "PeriodicTorus" | "BallChart"
    m: int  # complex dimension; real dimension is n = 2m
    resolution: int  # nodes per axis
    period: float = 2.0 * np.pi  # torus only
    radius: float = 0.5  # ball only: coordinate half-width of the grid box
    active_radius: float = 0.35  # ball only: |x| <= active_radius is trusted
    deriv_order: int = 6  # ball only; torus differentiates spectrally

    def __post_init__(self):
        if self.kind not in ("PeriodicTorus", "BallChart"):
            raise ChartError(f"unknown chart kind {self.kind!r}")
        if self.m not in (1, 2):
            raise ChartError("complex dimension m must be 1 or 2")
        if self.resolution < 16:
            raise ChartError("resolution must be at least 16 per axis")
        if self.kind == "BallChart":
            if self.deriv_order not in _FD_COEFFS or self.deriv_order < 4:
                raise ChartError("deriv_order must be one of 4, 6, 8")
            if not self.active_radius < self.radius:
                raise ChartError("active_radius must be smaller than radius")
            margin = (self.deriv_order // 2) * self.spacing
            if self.active_radius + margin >= self.radius:
                raise ChartError(
                    "stencil margin violated: active_radius + "
                    f"{self.deriv_order // 2}*spacing = "
                    f"{self.active_radius + margin:.4f} >= radius {self.radius}"
                )

    @property
    def n(self) -> int:
        return 2 * self.m

    @property
    def spacing(self) -> float:
        if self.kind == "PeriodicTorus":
            return self.period / self.resolution
        return 2.0 * self.radius / (self.resolution - 1)

    def axis_coords(self) -> np.ndarray:
        if self.kind == "PeriodicTorus":
            return np.arange(self.resolution) * self.spacing
        return np.linspace(-self.radius, self.radius, self.resolution)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "m": self.m, "resolution": self.resolution}
        if self.kind == "PeriodicTorus":
            d["period"] = self.period
        else:
            d.update(radius=self.radius, active_radius=self.active_radius,
                     deriv_order=self.deriv_order)
        return d


def standard_complex_structure(m: int) -> np.ndarray:
    """Constant block-diagonal J with J(d/dx_a) = d/dy_a."""
    n = 2 * m
    J = np.zeros((n, n))
    for a in range(m):
        J[2 * a + 1, 2 * a] = 1.0
        J[2 * a, 2 * a + 1] = -1.0
    return J


_SPECTRAL_D_CACHE: dict = {}


def _fft_derivative(arr: np.ndarray, axis: int, period: float,
                    resolution: int) -> np.ndarray:
    k = np.fft.fftfreq(resolution, d=period / (2.0 * np.pi * resolution))
    if resolution % 2 == 0:
        k[resolution // 2] = 0.0
    shape = [1] * arr.ndim
    shape[axis] = resolution
    spec = np.fft.fft(arr, axis=axis)
    spec *= 1j * k.reshape(shape)
    return np.fft.ifft(spec, axis=axis).real


def spectral_derivative(arr: np.ndarray, axis: int, period: float,
                        resolution: int) -> np.ndarray:
    """Fourier pseudospectral partial derivative along a periodic grid axis.

    The Nyquist mode is zeroed so the derivative of a real field stays real
    and discrete integration by parts is exact to rounding.  For the small
    grids used here the transform is applied as a dense differentiation
    matrix (built once from the FFT route, so the two are identical to
    rounding); large grids fall back to the FFT.
    """
    if resolution > 96:
        return _fft_derivative(arr, axis, period, resolution)
    key = (resolution, period)
    mat = _SPECTRAL_D_CACHE.get(key)
    if mat is None:
        mat = _fft_derivative(np.eye(resolution), 0, period, resolution)
        _SPECTRAL_D_CACHE[key] = mat
    moved = np.moveaxis(arr, axis, -1)
    out = np.matmul(moved, mat.T)
    return np.ascontiguousarray(np.moveaxis(out, -1, axis))


def fd_derivative(arr: np.ndarray, axis: int, spacing: float, order: int) -> np.ndarray:
    """Central finite difference of the given order along one grid axis.

    Nodes within order//2 of the box boundary are left as zero; the caller
    tracks that invalid halo explicitly.
    """
    coeffs = _FD_COEFFS[order]
    p = order // 2
    out = np.zeros_like(arr)
    size = arr.shape[axis]
    core = [slice(None)] * arr.ndim
    core[axis] = slice(p, size - p)
    acc = out[tuple(core)]  # view into the core region of the output
    scratch = np.empty_like(acc)
    for off, c in zip(range(-p, p + 1), coeffs):
        if c == 0.0:
            continue
        sl = [slice(None)] * arr.ndim
        sl[axis] = slice(p + off, size - p + off)
        np.multiply(arr[tuple(sl)], c / spacing, out=scratch)
        acc += scratch
    return out


@dataclass
class Geometry:
    """Immutable discretized Kahler chart with cached metric data.

    ``halo_gamma`` / ``halo_riem`` give the number of invalid grid layers at
    the box boundary for the cached Christoffels / curvature; both are zero
    on tori.
    """

    spec: ChartSpec
    g: np.ndarray  # (..., n, n)
    ginv: np.ndarray  # (..., n, n)
    J: np.ndarray  # constant (n, n)
    gamma: np.ndarray  # (..., k, i, j) = Gamma^k_{ij}
    ric: np.ndarray  # (..., n, n) lowered Ricci
    einstein_constant: Optional[float]  # present only when ric = E g holds
    sqrt_det_g: np.ndarray  # (...,)
    halo_gamma: int
    halo_riem: int
    riem: Optional[np.ndarray] = None  # (..., l, i, j, k) mixed components
    tolerance_report: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def m(self) -> int:
        return self.spec.m

    @property
    def grid_shape(self) -> tuple:
        return self.g.shape[:-2]

    @property
    def is_torus(self) -> bool:
        return self.spec.kind == "PeriodicTorus"

    @property
    def is_flat(self) -> bool:
        return bool(self.tolerance_report.get("flat", False))

    @property
    def has_curvature_action(self) -> bool:
        return self.riem is not None or self.is_flat

    def deriv(self, arr: np.ndarray, axis: int) -> np.ndarray:
        """Partial derivative of a component array along grid axis `axis`."""
        if self.is_torus:
            return spectral_derivative(arr, axis, self.spec.period, self.spec.resolution)
        return fd_derivative(arr, axis, self.spec.spacing, self.spec.deriv_order)

    @property
    def deriv_halo(self) -> int:
        return 0 if self.is_torus else self.spec.deriv_order // 2

    @property
    def backend_order(self) -> Optional[int]:
        """FD convergence order, or None for the spectral backend."""
        return None if self.is_torus else self.spec.deriv_order

    def coordinates(self) -> list:
        """Meshgrid coordinate arrays, one per real axis."""
        axes = [self.spec.axis_coords() for _ in range(self.n)]
        return list(np.meshgrid(*axes, indexing="ij"))

    def radius2(self) -> np.ndarray:
        """Squared coordinate distance from the chart center."""
        coords = self.coordinates()
        return sum(c ** 2 for c in coords)

    def active_mask(self) -> np.ndarray:
        """Boolean mask of trusted nodes (full grid on tori)."""
        if self.is_torus:
            return np.ones(self.grid_shape, dtype=bool)
        return self.radius2() <= self.spec.active_radius ** 2

    def check_margin(self, halo: int) -> None:
        """Verify a field with the given halo is valid on the active ball."""
        if self.is_torus:
            return
        limit = self.spec.radius - halo * self.spec.spacing
        if self.spec.active_radius > limit + 1e-12:
            raise ChartError(
                f"operator chain needs {halo} halo layers; active radius "
                f"{self.spec.active_radius} exceeds valid box {limit:.4f}"
            )

    def quadrature_weights(self) -> np.ndarray:
        """Riemannian volume weights per node (uniform product measure)."""
        return self.sqrt_det_g * self.spec.spacing ** self.n

    def integrate(self, f: np.ndarray, check_support: bool = True) -> float:
        """Riemannian integral of a scalar field sampled on the grid.

        On ball charts the integrand must vanish outside the active region;
        otherwise integration by parts on the chart would be invalid.
        """
        if not self.is_torus and check_support:
            outside = ~self.active_mask()
            tail = float(np.max(np.abs(f[outside]))) if outside.any() else 0.0
            scale = max(float(np.max(np.abs(f))), 1e-300)
            if tail > 1e-7 * scale:
                raise ChartError(
                    "integrand not compactly supported in the active region "
                    f"(boundary magnitude {tail:.3e} vs scale {scale:.3e})"
                )
        return float(np.sum(f * self.quadrature_weights()))

    def to_container(self) -> dict:
        """Self-describing JSON-compatible dump (row-major component arrays)."""
        return {
            "spec": self.spec.to_dict(),
            "einstein_constant": self.einstein_constant,
            "tolerance_report": self.tolerance_report,
            "g": self.g.tolist(),
            "J": self.J.tolist(),
        }


# ---------------------------------------------------------------------------
# curvature assembly
# ---------------------------------------------------------------------------

def _christoffel(g: np.ndarray, ginv: np.ndarray, deriv: Callable, n: int) -> np.ndarray:
    """Gamma^k_{ij} = 1/2 g^{kl} (d_i g_{lj} + d_j g_{li} - d_l g_{ij})."""
    grid = g.shape[:-2]
    dg = np.zeros(grid + (n, n, n))  # dg[..., a, i, j] = d_a g_{ij}
    for a in range(n):
        dg[..., a, :, :] = deriv(g, a)
    t = (np.einsum("...ilj->...lij", dg) + np.einsum("...jli->...lij", dg) - dg)
    return 0.5 * np.einsum("...kl,...lij->...kij", ginv, t)


def _ricci_from_gamma(gamma: np.ndarray, ginv: np.ndarray, g: np.ndarray,
                      deriv: Callable, n: int) -> np.ndarray:
    """Lowered Ricci tensor ric_{ik} = g_{il} g^{ab} riem^l_{akb}.

    The curvature components in the package convention are
    riem^l_{ijk} = -( d_i G^l_{jk} - d_j G^l_{ik}
                      + G^l_{im} G^m_{jk} - G^l_{jm} G^m_{ik} ).
    Assembled axis by axis so the full four-index tensor never has to be
    materialized (matters for m=2 grids).
    """
    grid = gamma.shape[:-3]
    ric_endo = np.zeros(grid + (n, n))
    for d_axis in range(n):
        dgam = deriv(gamma, d_axis)  # d_{d_axis} Gamma^l_{ij}
        # -g^{ab} d_a G^l_{kb}, with d_axis in the role of a
        ric_endo -= np.einsum("...b,...lkb->...lk", ginv[..., d_axis, :], dgam)
        # +g^{ab} d_k G^l_{ab}, with d_axis in the role of k
        ric_endo[..., :, d_axis] += np.einsum("...ab,...lab->...l", ginv, dgam)
    ric_endo -= np.einsum("...ab,...lam,...mkb->...lk", ginv, gamma, gamma, optimize=True)
    ric_endo += np.einsum("...ab,...lkm,...mab->...lk", ginv, gamma, gamma, optimize=True)
    return np.einsum("...il,...lk->...ik", g, ric_endo)


def _riemann_mixed(gamma: np.ndarray, deriv: Callable, n: int) -> np.ndarray:
    """Full mixed curvature riem[..., l, i, j, k], paper sign convention."""
    grid = gamma.shape[:-3]
    riem = np.zeros(grid + (n, n, n, n))
    for d_axis in range(n):
        dgam = deriv(gamma, d_axis)  # [..., l, a, b] = d_{d_axis} G^l_{ab}
        # -d_i G^l_{jk} at slots [l, i=d_axis, j, k]
        riem[..., :, d_axis, :, :] -= dgam
        # +d_j G^l_{ik} at slots [l, i, j=d_axis, k]
        riem[..., :, :, d_axis, :] += dgam
    riem -= np.einsum("...lim,...mjk->...lijk", gamma, gamma)
    riem += np.einsum("...ljm,...mik->...lijk", gamma, gamma)
    return riem


# ---------------------------------------------------------------------------
# chart builders
# ---------------------------------------------------------------------------

def _broadcast_const(mat: np.ndarray, grid_shape: tuple) -> np.ndarray:
    out = np.empty(grid_shape + mat.shape)
    out[...] = mat
    return out


def _finalize_geometry(spec: ChartSpec, g: np.ndarray, flat: bool,
                       with_riemann: Optional[bool] = None,
                       einstein_expected: Optional[float] = None,
                       riemann_budget_bytes: int = 400 * 1024 ** 2) -> Geometry:
    n = spec.n
    grid_shape = g.shape[:-2]
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        evals = np.linalg.eigvalsh(g)
        node_min = evals.min(axis=-1)
        idx = np.unravel_index(np.argmin(node_min), grid_shape)
        raise ChartError(
            "metric not positive definite (min eigenvalue "
            f"{float(node_min.min()):.3e} at node {idx})"
        ) from None
    ginv = np.linalg.inv(g)
    is_torus = spec.kind == "PeriodicTorus"

    def deriv(arr, axis):
        if is_torus:
            return spectral_derivative(arr, axis, spec.period, spec.resolution)
        return fd_derivative(arr, axis, spec.spacing, spec.deriv_order)

    p = 0 if is_torus else spec.deriv_order // 2

    if flat:
        gamma = np.zeros(grid_shape + (n, n, n))
        ric = np.zeros(grid_shape + (n, n))
        riem = np.zeros(grid_shape + (n, n, n, n))
        halo_g, halo_r = 0, 0
    else:
        gamma = _christoffel(g, ginv, deriv, n)
        ric = _ricci_from_gamma(gamma, ginv, g, deriv, n)
        halo_g, halo_r = p, 2 * p
        riem = None
        want_riemann = with_riemann
        if want_riemann is None:
            nodes = int(np.prod(grid_shape))
            want_riemann = nodes * n ** 4 * 8 <= riemann_budget_bytes
        if want_riemann:
            riem = _riemann_mixed(gamma, deriv, n)

    geo = Geometry(
        spec=spec, g=g, ginv=ginv, J=standard_complex_structure(spec.m),
        gamma=gamma, ric=ric, einstein_constant=None,
        sqrt_det_g=np.sqrt(np.linalg.det(g)),
        halo_gamma=halo_g, halo_riem=halo_r, riem=riem,
    )
    geo.tolerance_report["flat"] = flat

    # Einstein verification on trusted nodes where ric is valid
    mask = geo.active_mask()
    if not is_torus:
        lim = spec.radius - (2 * p + 1) * spec.spacing
        mask = geo.radius2() <= min(spec.active_radius, lim) ** 2
        if not mask.any():
            if einstein_expected is not None:
                raise ChartError(
                    "grid too coarse to verify the Einstein property "
                    f"(curvature valid only outside radius {lim:.3f})"
                )
            geo.tolerance_report["einstein_residual"] = float("nan")
            return geo
    gm = float(np.abs(g[mask]).max())
    if flat:
        geo.einstein_constant = 0.0
        geo.tolerance_report["einstein_residual"] = 0.0
    else:
        gm_mask = np.abs(g[mask]) > 1e-8 * gm
        ratios = ric[mask][gm_mask] / g[mask][gm_mask]
        e_est = float(np.median(ratios)) if ratios.size else np.nan
        resid = float(np.abs(ric[mask] - e_est * g[mask]).max() / gm)
        geo.tolerance_report["einstein_residual"] = resid
        geo.tolerance_report["einstein_estimate"] = e_est
        if einstein_expected is not None:
            if not np.isfinite(e_est) or resid > 1e-4:
                raise ChartError(
                    f"ric/g ratio non-constant (residual {resid:.3e}); "
                    "differentiation backend inconsistent with Einstein metric"
                )
            geo.einstein_constant = e_est
        elif np.isfinite(e_est) and resid < 1e-6:
            geo.einstein_constant = e_est
    return geo


def _exterior_d_oneform(deriv: Callable, alpha: np.ndarray, n: int) -> np.ndarray:
    """(d alpha)_{ij} = d_i alpha_j - d_j alpha_i componentwise."""
    grid = alpha.shape[:-1]
    d = np.zeros(grid + (n, n))
    for i in range(n):
        d[..., i, :] = deriv(alpha, i)
    return d - np.swapaxes(d, -1, -2)


def build_torus_chart(m: int, resolution: int, period: float = 2.0 * np.pi,
                      potential_seed: Optional[int] = None,
                      potential_amplitude: float = 0.0) -> Geometry:
    """Flat torus (default) or Kahler-potential-perturbed periodic chart.

    A nonzero ``potential_amplitude`` adds eps/2 * dd^c(psi)(., J .) to the
    flat metric for a seeded periodic potential psi, giving a non-Einstein
    Kahler testbed.  The perturbation must keep g positive definite; if it
    does not, construction fails with the worst node in the diagnostic.
    """
    spec = ChartSpec(kind="PeriodicTorus", m=m, resolution=resolution, period=period)
    n = spec.n
    axes = [spec.axis_coords() for _ in range(n)]
    coords = np.meshgrid(*axes, indexing="ij")
    grid_shape = coords[0].shape

    if potential_amplitude == 0.0:
        g = _broadcast_const(np.eye(n), grid_shape)
        return _finalize_geometry(spec, g, flat=True)

    J = standard_complex_structure(m)
    rng = np.random.default_rng(0 if potential_seed is None else potential_seed)
    freq = 2.0 * np.pi / period
    psi = np.zeros(grid_shape)
    for _ in range(3):
        ks = rng.integers(1, 3, size=n)
        phases = rng.uniform(0, 2 * np.pi, size=n)
        amp = rng.uniform(0.5, 1.0)
        term = np.ones(grid_shape)
        for a in range(n):
            term = term * np.cos(ks[a] * freq * coords[a] + phases[a])
        psi += amp * term

    def deriv(arr, axis):
        return spectral_derivative(arr, axis, period, resolution)

    dpsi = np.stack([deriv(psi, a) for a in range(n)], axis=-1)
    dcpsi = -np.einsum("...a,ai->...i", dpsi, J)  # d^c psi = -d psi o J
    ddc = _exterior_d_oneform(deriv, dcpsi, n)
    delta_g = 0.5 * potential_amplitude * np.einsum("...ia,aj->...ij", ddc, J)
    g = _broadcast_const(np.eye(n), grid_shape) + delta_g
    try:
        return _finalize_geometry(spec, g, flat=False)
    except ChartError as exc:
        raise ChartError(f"potential perturbation rejected: {exc}") from exc


def build_ball_chart(m: int, resolution: int, deriv_order: int = 6,
                     radius: Optional[float] = None,
                     active_radius: Optional[float] = None,
                     with_riemann: Optional[bool] = None) -> Geometry:
    """Complex-hyperbolic ball chart.

    m=1: Poincare metric g = 4 (1-|z|^2)^{-2} delta on a sub-square of the
    unit disk, Einstein constant E = -1.  m=2: Bergman-type metric from the
    potential -log(1-|z|^2), Einstein constant E = -3.  The constant is
    stored only after numerical verification of ric = E g.
    """
    if radius is None:
        radius = 0.5 if m == 1 else 0.4
    if active_radius is None:
        active_radius = 0.7 * radius if m == 1 else 0.55 * radius
    spec = ChartSpec(kind="BallChart", m=m, resolution=resolution,
                     radius=radius, active_radius=active_radius,
                     deriv_order=deriv_order)
    n = spec.n
    axes = [spec.axis_coords() for _ in range(n)]
    coords = np.meshgrid(*axes, indexing="ij")
    s = sum(c ** 2 for c in coords)  # |z|^2
    if s.max() >= 1.0:
        raise ChartError("chart box leaves the unit ball; reduce radius")
    grid_shape = coords[0].shape

    if m == 1:
        lam2 = 4.0 / (1.0 - s) ** 2
        g = np.zeros(grid_shape + (2, 2))
        g[..., 0, 0] = lam2
        g[..., 1, 1] = lam2
        e_expected = -1.0
    else:
        # Hermitian g_{a bbar} = delta_ab/(1-s) + zbar_a z_b/(1-s)^2 for the
        # potential -log(1-|z|^2); real metric ds^2 = 2 Re(g_{a bbar} dz^a dzbar^b).
        z = [coords[0] + 1j * coords[1], coords[2] + 1j * coords[3]]
        u = 1.0 - s
        g = np.zeros(grid_shape + (4, 4))
        for a in range(2):
            for b in range(2):
                hab = (1.0 if a == b else 0.0) / u + np.conj(z[a]) * z[b] / u ** 2
                # ds^2 = 2 Re(g_{a bbar} dz^a dzbar^b) componentwise
                A, B = 2.0 * hab.real, 2.0 * hab.imag
                ia, ja = 2 * a, 2 * a + 1
                ib, jb = 2 * b, 2 * b + 1
                g[..., ia, ib] += A
                g[..., ja, jb] += A
                g[..., ia, jb] += B
                g[..., ja, ib] += -B
        g = 0.5 * (g + np.swapaxes(g, -1, -2))
        e_expected = -3.0

    return _finalize_geometry(spec, g, flat=False, with_riemann=with_riemann,
                              einstein_expected=e_expected)


# ---------------------------------------------------------------------------
# structural self-checks
# ---------------------------------------------------------------------------

def geometry_self_check(geo: Geometry) -> dict:
    """Evaluate the structural invariants and return their residuals.

    Each residual is measured on the intersection of the active region with
    the nodes where its operator chain is valid (halo accounting); the
    radius of the deepest such region is reported as ``check_radius``.
    """
    rep = dict(geo.tolerance_report)
    g, J, n = geo.g, geo.J, geo.n

    def region(halo: int) -> np.ndarray:
        if geo.is_torus:
            return np.ones(geo.grid_shape, dtype=bool)
        lim = geo.spec.radius - halo * geo.spec.spacing
        r = min(geo.spec.active_radius, lim)
        mask = geo.radius2() <= r ** 2
        if not mask.any():
            raise ChartError(
                f"no valid nodes for a self-check needing {halo} halo layers")
        return mask

    mask0 = region(0)
    gm = float(np.abs(g[mask0]).max())
    rep["J_squared"] = float(np.abs(J @ J + np.eye(n)).max())
    gJJ = np.einsum("ai,...ab,bj->...ij", J, g, J, optimize=True)
    rep["g_J_invariance"] = float(np.abs((gJJ - g)[mask0]).max() / gm)

    # Kahler form closedness
    mask1 = region(geo.deriv_halo)
    omega = np.einsum("ki,...kj->...ij", J, g)
    dom = np.zeros(geo.grid_shape + (n, n, n))
    for i in range(n):
        dom[..., i, :, :] = geo.deriv(omega, i)
    domega = dom + np.einsum("...ijk->...jki", dom) + np.einsum("...ijk->...kij", dom)
    rep["d_omega"] = float(np.abs(domega[mask1]).max() / gm)

    # metric compatibility nabla g = 0
    mask2 = region(geo.halo_gamma + geo.deriv_halo)
    nabg = np.zeros(geo.grid_shape + (n, n, n))
    for a in range(n):
        slice_a = geo.gamma[..., :, a, :]  # Gamma^m_{a j} as [..., m, j]
        corr = np.einsum("...mi,...mj->...ij", slice_a, g)
        corr += np.einsum("...mj,...im->...ij", slice_a, g)
        nabg[..., a, :, :] = geo.deriv(g, a) - corr
    rep["nabla_g"] = float(np.abs(nabg[mask2]).max() / gm)

    # Kahler compatibility nabla J = 0 (J constant, so residual is [Gamma, J])
    maskg = region(geo.halo_gamma)
    nabJ = (np.einsum("...kam,mi->...aki", geo.gamma, J)
            - np.einsum("...mai,km->...aki", geo.gamma, J))
    rep["nabla_J"] = float(np.abs(nabJ[maskg]).max())

    deepest = geo.halo_gamma + geo.deriv_halo
    if geo.riem is not None and not geo.is_flat:
        maskr = region(geo.halo_riem)
        deepest = max(deepest, geo.halo_riem)
        low = np.einsum("...lm,...mijk->...ijkl", g, geo.riem)
        scale = max(float(np.abs(low[maskr]).max()), 1e-30)
        rep["riem_antisym_12"] = float(
            np.abs((low + np.einsum("...ijkl->...jikl", low))[maskr]).max() / scale)
        rep["riem_antisym_34"] = float(
            np.abs((low + np.einsum("...ijkl->...ijlk", low))[maskr]).max() / scale)
        rep["riem_pair_sym"] = float(
            np.abs((low - np.einsum("...ijkl->...klij", low))[maskr]).max() / scale)
        bianchi = (low + np.einsum("...ijkl->...jkil", low)
                   + np.einsum("...ijkl->...kijl", low))
        rep["riem_bianchi1"] = float(np.abs(bianchi[maskr]).max() / scale)
    if not geo.is_torus:
        rep["check_radius"] = min(geo.spec.active_radius,
                                  geo.spec.radius - deepest * geo.spec.spacing)
    return rep
