"""Elliptic solves and the second-order deformation pipeline.

The linear solver is a matrix-free conjugate gradient over the trusted node
set (full grid on tori, the active ball with zero Dirichlet extension on
ball charts), with explicit kernel policies applied to the right-hand side
and to every iterate.  The second-order pipeline assembles

    h2 = h1^2 + bold_h2 - 1/2 L_{J grad f} J

from the two linear solves

    (Delta - 2E) f = -1/2 tr(h1^2)
    Delta_E bold_h2 = -2 delta [h1, h1]^c

and reports the equation residuals, the trace/divergence postconditions, the
harmonicity residual of dbar(bold_h2) + [h1,h1]^c, and a weak cross-check of
the assembled second-order equation against the divergence-of-bracket form.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .charts import ChartError, Geometry
from .fields import PairingEngine, TensorField, project, square, trace
from .brackets import ks_bracket
from .diffops import (
    HypothesisError, dbar, delta_star_minus, divergence, einstein_operator,
    exterior_d, hodge_laplacian, lie_derivative, lower_vector, raise_oneform,
    require_einstein,
)


class SolverError(RuntimeError):
    """Raised on kernel incompatibility or non-convergence."""


@dataclass
class LinearProblem:
    operator_id: str  # DeltaMinus2E-on-functions | DeltaE-on-SymMinus | Delta-on-functions
    rhs: TensorField
    boundary: str = "Periodic"  # Periodic | DirichletZero
    kernel_policy: str = "None"  # None | ProjectOutParallel | ProjectOutConstants
    tolerance: float = 1e-10
    max_iterations: int = 20000


@dataclass
class SolveRecord:
    operator_id: str
    iterations: int
    relative_residual: float
    residual_history: list = dc_field(default_factory=list)
    converged: bool = False

    def to_dict(self) -> dict:
        return {"operator": self.operator_id, "iterations": self.iterations,
                "relative_residual": self.relative_residual,
                "converged": self.converged,
                "residual_history_tail": self.residual_history[-5:]}


VALID_OPERATORS = ("DeltaMinus2E-on-functions", "DeltaE-on-SymMinus",
                   "Delta-on-functions")


def _domain_mask(geo: Geometry, boundary: str) -> np.ndarray:
    if boundary == "Periodic":
        if not geo.is_torus:
            raise SolverError("periodic boundary needs a torus chart")
        return np.ones(geo.grid_shape, dtype=bool)
    if boundary == "DirichletZero":
        if geo.is_torus:
            raise SolverError("Dirichlet boundary applies to ball charts")
        return geo.active_mask()
    raise SolverError(f"unknown boundary {boundary!r}")


def _make_operator(geo: Geometry, operator_id: str) -> Callable:
    if operator_id == "Delta-on-functions":
        def apply_op(arr):
            return hodge_laplacian(TensorField(geo, "Scalar", arr)).data
        return apply_op
    if operator_id == "DeltaMinus2E-on-functions":
        E = require_einstein(geo)

        def apply_op(arr):
            f = TensorField(geo, "Scalar", arr)
            return hodge_laplacian(f).data - 2.0 * E * arr
        return apply_op
    if operator_id == "DeltaE-on-SymMinus":
        require_einstein(geo)

        def apply_op(arr):
            h = TensorField(geo, "Sym2", arr, flags=("JAntiInvariant",))
            out = einstein_operator(h)
            return project(out, "SymMinus").data
        return apply_op
    raise SolverError(f"unknown operator id {operator_id!r}")


def _kernel_projector(geo: Geometry, policy: str, bundle: str) -> Callable:
    w = geo.quadrature_weights()
    total = float(w.sum())
    if policy == "None":
        return lambda arr: arr
    if policy == "ProjectOutConstants":
        if bundle != "Scalar":
            raise SolverError("constant-kernel policy applies to scalars")

        def proj(arr):
            return arr - (arr * w).sum() / total
        return proj
    if policy == "ProjectOutParallel":
        if not (geo.is_torus and geo.is_flat):
            raise SolverError("parallel-kernel policy applies to the flat torus")
        axes = tuple(range(len(geo.grid_shape)))

        def proj(arr):
            return arr - arr.mean(axis=axes, keepdims=True)
        return proj
    raise SolverError(f"unknown kernel policy {policy!r}")


def _weighted_dot(geo: Geometry, eng: PairingEngine, bundle: str,
                  a: np.ndarray, b: np.ndarray) -> float:
    fa = TensorField(geo, bundle, a)
    fb = TensorField(geo, bundle, b)
    return float(np.sum(eng.pointwise(fa, fb) * geo.quadrature_weights()))


def linear_solve(problem: LinearProblem) -> tuple:
    """Conjugate gradients with kernel projection; returns (field, record)."""
    geo = problem.rhs.geometry
    bundle = problem.rhs.bundle
    if problem.operator_id not in VALID_OPERATORS:
        raise SolverError(f"unknown operator id {problem.operator_id!r}")
    expected_bundle = "Sym2" if "SymMinus" in problem.operator_id else "Scalar"
    if bundle != expected_bundle:
        raise SolverError(
            f"operator {problem.operator_id} needs a {expected_bundle} rhs")
    eng = PairingEngine(geo)
    mask = _domain_mask(geo, problem.boundary)
    maskf = mask.astype(float)
    if bundle != "Scalar":
        maskf = maskf[(Ellipsis,) + (None,) * (problem.rhs.data.ndim - mask.ndim)]
    apply_raw = _make_operator(geo, problem.operator_id)
    kproj = _kernel_projector(geo, problem.kernel_policy, bundle)
    symminus = "SymMinus" in problem.operator_id

    def restrict(arr):
        out = arr * maskf
        if symminus:
            out = project(TensorField(geo, "Sym2", out), "SymMinus").data
        return kproj(out)

    def apply_op(arr):
        return restrict(apply_raw(restrict(arr)))

    b = restrict(problem.rhs.data.copy())
    # kernel-compatibility check: the removed component must be negligible
    removed = problem.rhs.data * maskf - b
    rhs_norm = np.sqrt(_weighted_dot(geo, eng, bundle,
                                     problem.rhs.data * maskf,
                                     problem.rhs.data * maskf))
    removed_norm = np.sqrt(_weighted_dot(geo, eng, bundle, removed, removed))
    if problem.kernel_policy != "None" and removed_norm > 1e-8 * max(rhs_norm, 1e-300):
        raise SolverError(
            "right-hand side has a component in the declared kernel "
            f"(relative size {removed_norm / max(rhs_norm, 1e-300):.3e})")

    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rr = _weighted_dot(geo, eng, bundle, r, r)
    b_norm = np.sqrt(max(rr, 0.0))
    record = SolveRecord(problem.operator_id, 0, 1.0)
    if b_norm == 0.0:
        record.converged = True
        record.relative_residual = 0.0
        return TensorField(geo, bundle, x,
                           flags=("JAntiInvariant",) if symminus else ()), record
    for it in range(problem.max_iterations):
        ap = apply_op(p)
        pap = _weighted_dot(geo, eng, bundle, p, ap)
        if pap <= 0.0:
            raise SolverError(
                f"operator lost positivity at iteration {it} (pAp = {pap:.3e})")
        alpha = rr / pap
        x += alpha * p
        r -= alpha * ap
        rr_new = _weighted_dot(geo, eng, bundle, r, r)
        rel = np.sqrt(max(rr_new, 0.0)) / b_norm
        record.residual_history.append(rel)
        record.iterations = it + 1
        record.relative_residual = rel
        if rel <= problem.tolerance:
            record.converged = True
            break
        beta = rr_new / rr
        p = r + beta * p
        rr = rr_new
    if not record.converged:
        raise SolverError(
            f"CG did not reach tolerance {problem.tolerance:.1e} in "
            f"{problem.max_iterations} iterations "
            f"(residual {record.relative_residual:.3e})")
    sol_flags = ("JAntiInvariant",) if symminus else ()
    return TensorField(geo, bundle, x, flags=sol_flags), record


# ---------------------------------------------------------------------------
# spectral York split and gauge construction (flat torus)
# ---------------------------------------------------------------------------

def _torus_wavenumbers(geo: Geometry) -> list:
    N = geo.spec.resolution
    k1 = np.fft.fftfreq(N, d=geo.spec.period / (2.0 * np.pi * N))
    if N % 2 == 0:
        k1[N // 2] = 0.0
    return [k1] * geo.n


def york_split(geo: Geometry, H: TensorField) -> tuple:
    """Split H = Q + delta* X + f id on the flat torus with tr Q = 0,
    delta Q = 0, and X normalized to zero mean; exact in Fourier space."""
    if not (geo.is_torus and geo.is_flat):
        raise SolverError("York split is implemented on the flat torus")
    n = geo.n
    Hd = H.data
    axes = tuple(range(len(geo.grid_shape)))
    Hhat = np.fft.fftn(Hd, axes=axes)
    ks = _torus_wavenumbers(geo)
    kgrid = np.meshgrid(*ks, indexing="ij")
    kvec = np.stack(kgrid, axis=-1)  # (..., n)
    k2 = np.sum(kvec ** 2, axis=-1)
    trH = np.einsum("...ii->...", Hhat)

    # per-mode SPD system: (1/2 |k|^2 I + (1/2 - 1/n) k k^T) X = b
    A = 0.5 * k2[..., None, None] * np.eye(n) + (0.5 - 1.0 / n) * (
        kvec[..., :, None] * kvec[..., None, :])
    b = (-1j * np.einsum("...i,...ij->...j", kvec, Hhat)
         + (1j / n) * kvec * trH[..., None])
    zero = k2 == 0.0
    A[zero] = np.eye(n)
    b[zero] = 0.0
    Xhat = np.linalg.solve(A, b[..., None])[..., 0]
    X = np.real(np.fft.ifftn(Xhat, axes=axes))
    Xf = TensorField(geo, "Vector", X)

    from .diffops import delta_star
    dsX = delta_star(Xf)
    divX = -np.real(np.fft.ifftn(
        1j * np.einsum("...i,...i->...", kvec, Xhat), axes=axes))  # d* X_flat
    f = (trace(H).data + divX) / n
    Q = TensorField(geo, "Sym2", Hd - dsX.data - f[..., None, None] * np.eye(n))
    return Q, Xf, TensorField(geo, "Scalar", f)


def exact_div_gauge(geo: Geometry, H: TensorField) -> TensorField:
    """Divergence-free X0 with delta(H + delta* X0) an exact one-form.

    Uses the York split followed by a spectral Hodge decomposition of the
    vector part; the returned field has zero mean.
    """
    _, X, _ = york_split(geo, H)
    axes = tuple(range(len(geo.grid_shape)))
    Xhat = np.fft.fftn(X.data, axes=axes)
    ks = _torus_wavenumbers(geo)
    kvec = np.stack(np.meshgrid(*ks, indexing="ij"), axis=-1)
    k2 = np.sum(kvec ** 2, axis=-1)
    k2safe = np.where(k2 == 0.0, 1.0, k2)
    kdotX = np.einsum("...i,...i->...", kvec, Xhat)
    grad_part = kvec * (kdotX / k2safe)[..., None]
    div_free = Xhat - grad_part
    div_free[k2 == 0.0] = 0.0
    X0 = -np.real(np.fft.ifftn(div_free, axes=axes))
    return TensorField(geo, "Vector", X0)


def hodge_components_oneform(geo: Geometry, alpha: TensorField) -> dict:
    """Spectral Hodge decomposition norms of a one-form on the flat torus."""
    axes = tuple(range(len(geo.grid_shape)))
    ahat = np.fft.fftn(alpha.data, axes=axes)
    ks = _torus_wavenumbers(geo)
    kvec = np.stack(np.meshgrid(*ks, indexing="ij"), axis=-1)
    k2 = np.sum(kvec ** 2, axis=-1)
    k2safe = np.where(k2 == 0.0, 1.0, k2)
    kdota = np.einsum("...i,...i->...", kvec, ahat)
    exact = kvec * (kdota / k2safe)[..., None]
    exact[k2 == 0.0] = 0.0
    harmonic = np.zeros_like(ahat)
    harmonic[k2 == 0.0] = ahat[k2 == 0.0]
    coexact = ahat - exact - harmonic
    nodes = np.prod([geo.spec.resolution] * geo.n)
    return {
        "exact": float(np.linalg.norm(exact) / np.sqrt(nodes)),
        "coexact": float(np.linalg.norm(coexact) / np.sqrt(nodes)),
        "harmonic": float(np.linalg.norm(harmonic) / np.sqrt(nodes)),
    }


# ---------------------------------------------------------------------------
# second-order deformation pipeline
# ---------------------------------------------------------------------------

@dataclass
class PipelineResult:
    h1: TensorField
    f: Optional[TensorField]
    bold_h2: Optional[TensorField]
    h2: Optional[TensorField]
    f_record: Optional[SolveRecord]
    h2_record: Optional[SolveRecord]
    residuals: dict = dc_field(default_factory=dict)
    diagnostics: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "residuals": self.residuals,
            "diagnostics": self.diagnostics,
            "f_solve": self.f_record.to_dict() if self.f_record else None,
            "h2_solve": self.h2_record.to_dict() if self.h2_record else None,
        }


def membership_check(h1: TensorField, tol: float = 1e-6) -> dict:
    """Residuals of the infinitesimal-deformation conditions for h1."""
    geo = h1.geometry
    eng = PairingEngine(geo)
    scale = 1.0 + eng.sup_norm(h1)
    dv = divergence(h1)
    db = dbar(h1)
    tr = trace(h1)
    rep = {
        "divergence": eng.sup_norm(dv) / scale,
        "dbar": eng.sup_norm(db) / scale,
        "trace": eng.sup_norm(tr) / scale,
        "antiinvariance": _antiinv_residual(h1),
    }
    rep["pass"] = bool(max(rep["divergence"], rep["dbar"], rep["trace"],
                           rep["antiinvariance"]) < tol)
    return rep


def _antiinv_residual(h: TensorField) -> float:
    geo = h.geometry
    anti = np.einsum("im,...mj->...ij", geo.J, h.data) + np.einsum(
        "...im,mj->...ij", h.data, geo.J)
    return float(np.abs(anti).max() / max(np.abs(h.data).max(), 1e-30))


def solve_second_order(geo: Geometry, h1: TensorField,
                       boundary: str = "DirichletZero",
                       tolerance: float = 1e-10,
                       membership_tol: float = 1e-6,
                       n_checks: int = 12) -> PipelineResult:
    """Solve the gauge-normalized second-order deformation system.

    Ball charts run in Dirichlet mode.  On the flat torus only the parallel
    smoke mode is supported: the scalar equation Delta f = -1/2 tr(h1^2)
    with E = 0 has constant right-hand side, which is kernel-incompatible;
    the documented degeneracy diagnostic is returned instead of a solution.
    """
    eng = PairingEngine(geo)
    result = PipelineResult(h1, None, None, None, None, None)

    if float(np.abs(h1.data).max()) == 0.0:
        zero_s = TensorField(geo, "Scalar", np.zeros(geo.grid_shape))
        zero_h = TensorField(geo, "Sym2", np.zeros_like(h1.data),
                             flags=("JAntiInvariant",))
        result.f, result.bold_h2, result.h2 = zero_s, zero_h, zero_h
        result.residuals = {"f_equation": 0.0, "h2_equation": 0.0,
                            "trace_postcondition": 0.0}
        result.diagnostics["trivial"] = True
        return result

    mem = membership_check(h1, membership_tol)
    result.diagnostics["membership"] = mem
    if not mem["pass"]:
        raise SolverError(
            "h1 fails the infinitesimal-deformation membership check: "
            + ", ".join(f"{k}={v:.2e}" for k, v in mem.items() if k != "pass"))

    h1sq = square(h1)
    tr_h1sq = trace(h1sq)

    if geo.is_torus:
        # smoke mode: constant rhs is in the kernel of Delta; report it
        E = geo.einstein_constant or 0.0
        if E == 0.0:
            rhs = -0.5 * tr_h1sq.data
            w = geo.quadrature_weights()
            mean = float((rhs * w).sum() / w.sum())
            result.diagnostics["degenerate_smoke_mode"] = {
                "reason": "E = 0 on the torus: Delta f = -1/2 tr(h1^2) has a "
                          "constant-kernel incompatibility",
                "rhs_mean": mean,
            }
            bracket = ks_bracket(h1, "DirectFormula")
            dv_br = divergence(bracket)
            result.residuals["h2_equation_rhs"] = eng.sup_norm(
                TensorField(geo, "End", dv_br.data, halo=dv_br.halo))
            result.bold_h2 = TensorField(geo, "Sym2", np.zeros_like(h1.data),
                                         flags=("JAntiInvariant",))
            result.h2 = square(h1)
            result.residuals["trace_postcondition"] = float(
                np.abs(trace(result.h2 - square(h1)).data).max())
            return result
        raise SolverError("torus pipeline supports only the E = 0 smoke mode")

    E = require_einstein(geo)

    # (Delta - 2E) f = -1/2 tr(h1^2)
    rhs_f = TensorField(geo, "Scalar", -0.5 * tr_h1sq.data)
    prob_f = LinearProblem("DeltaMinus2E-on-functions", rhs_f,
                           boundary=boundary, tolerance=tolerance)
    f, rec_f = linear_solve(prob_f)
    result.f, result.f_record = f, rec_f

    # Delta_E bold_h2 = -2 delta [h1, h1]^c
    bracket = ks_bracket(h1, "DirectFormula")
    dv_br = divergence(bracket)
    rhs_h = TensorField(geo, "Sym2",
                        project(TensorField(geo, "End", -2.0 * dv_br.data,
                                            halo=dv_br.halo),
                                "SymMinus").data,
                        halo=dv_br.halo, flags=("JAntiInvariant",))
    prob_h = LinearProblem("DeltaE-on-SymMinus", rhs_h, boundary=boundary,
                           tolerance=tolerance)
    bold_h2, rec_h = linear_solve(prob_h)
    result.bold_h2, result.h2_record = bold_h2, rec_h

    # h2 = h1^2 + bold_h2 - 1/2 L_{J grad f} J
    gradf = raise_oneform(exterior_d(f))
    jgradf = TensorField(geo, "Vector",
                         np.einsum("im,...m->...i", geo.J, gradf.data),
                         halo=gradf.halo)
    lieJ = lie_derivative(jgradf, "J")
    gauge = TensorField(geo, "Sym2", -0.5 * lieJ.data, halo=lieJ.halo)
    h2 = TensorField(geo, "Sym2", h1sq.data + bold_h2.data + gauge.data,
                     halo=max(h1sq.halo, gauge.halo))
    result.h2 = h2

    _pipeline_residuals(result, geo, eng, E, f, bold_h2, h2, h1, h1sq,
                        bracket, boundary, n_checks)
    return result


def _pipeline_residuals(result, geo, eng, E, f, bold_h2, h2, h1, h1sq,
                        bracket, boundary, n_checks):
    from .brackets import v_weak
    from .fields import sample_field
    from .diffops import delta_e_tilde

    mask = _domain_mask(geo, boundary)
    interior = geo.radius2() <= (0.85 * geo.spec.active_radius) ** 2

    # (a) equation residuals measured well inside the Dirichlet domain
    lapf = hodge_laplacian(f)
    res_f = lapf.data - 2.0 * E * f.data + 0.5 * trace(h1sq).data
    scale_f = 1.0 + float(np.abs(trace(h1sq).data[mask]).max())
    result.residuals["f_equation"] = float(
        np.abs(res_f[interior]).max() / scale_f)

    de_h2 = einstein_operator(bold_h2)
    dv_br = divergence(bracket)
    res_h = de_h2.data + 2.0 * dv_br.data
    scale_h = 1.0 + eng.sup_norm(TensorField(geo, "End", dv_br.data,
                                             halo=dv_br.halo))
    result.residuals["h2_equation"] = float(
        np.abs(res_h[interior]).max() / scale_h)

    # (b) postconditions of the normalized system
    diff = TensorField(geo, "Sym2", h2.data - h1sq.data, halo=h2.halo)
    tr_post = float(np.abs(trace(diff).data[interior]).max())
    result.residuals["trace_postcondition"] = tr_post
    dv_diff = lower_vector(divergence(diff))
    target = -0.25 * exterior_d(trace(h1sq)).data
    scale_d = 1.0 + float(np.abs(target[interior]).max())
    result.residuals["divergence_postcondition_informational"] = float(
        np.abs((dv_diff.data - target)[interior]).max() / scale_d)
    result.residuals["anti_invariance_h2_minus_h1sq"] = _antiinv_residual(diff)

    # dbar(h2 - h1^2) = dbar(bold_h2): residual of dbar of the gauge term
    db_diff = dbar(TensorField(geo, "Sym2", diff.data, halo=diff.halo,
                               flags=("JAntiInvariant",)))
    db_bold = dbar(bold_h2)
    sc = 1.0 + float(np.abs(db_bold.data[interior]).max())
    result.residuals["dbar_gauge_annihilation"] = float(
        np.abs((db_diff.data - db_bold.data)[interior]).max() / sc)

    # (c) harmonicity of dbar(bold_h2) + [h1, h1]^c
    harm = dbar(bold_h2).data + bracket.data
    dv_harm = divergence(TensorField(geo, "TwoFormTM", harm, halo=h2.halo))
    lhs = float(np.abs(dv_harm.data[interior]).max())
    rhs_bound = 0.5 * float(np.abs(res_h[interior]).max())
    result.residuals["harmonicity_lhs"] = lhs
    result.residuals["harmonicity_rhs_half_equation_residual"] = rhs_bound

    # (d) weak cross-check: Delta_E(h2 - h1^2) vs
    #     1/2 DeltaTilde_E h1^2 + E h1^2 - v(h1, h1)
    lhs_field = einstein_operator(diff)
    dte = delta_e_tilde(TensorField(geo, "Sym2", h1sq.data, halo=h1sq.halo))
    checks = []
    for k in range(n_checks):
        Hc = sample_field(geo, "Sym2", "RandomBump", seed=9000 + k,
                          support=0.8 * geo.spec.active_radius)
        lhs_val = eng.l2(TensorField(geo, "Sym2", lhs_field.data,
                                     halo=lhs_field.halo), Hc)
        rhs_val = (0.5 * eng.l2(dte, Hc) + E * eng.l2(h1sq, Hc)
                   - v_weak(eng, h1, h1, Hc))
        scale = abs(lhs_val) + abs(rhs_val) + 1.0
        checks.append(abs(lhs_val - rhs_val) / scale)
    result.residuals["weak_equation_crosscheck"] = float(max(checks))
    result.diagnostics["weak_checks"] = checks


def taylor_checks(h1: TensorField, h2: TensorField) -> dict:
    """Volume-normalization invariants: tr(h1) and tr(h2 - h1^2) sup norms."""
    geo = h1.geometry
    mask = geo.active_mask()
    tr1 = np.abs(trace(h1).data[mask]).max()
    diff = h2.data - square(h1).data
    tr2 = np.abs(np.einsum("...ii->...", diff)[mask]).max()
    return {"trace_h1": float(tr1), "trace_h2_minus_h1sq": float(tr2)}
