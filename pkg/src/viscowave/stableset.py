"""Potential-well constants and stable-set monitoring.

The well is governed by the potential F(x) = x^2/2 - (B^k/k) x^k, whose
single positive critical point lambda1 = B^(-k/(k-2)) and depth
d1 = F(lambda1) = ((k-2)/(2k)) B^(-2k/(k-2)) depend on an embedding-type
constant B over the Dirichlet-constrained space:

  B = sup ||u||_k / sqrt( l |grad u|^2 + b/(kappa+1) |grad u|^(2(kappa+1)) ).

For kappa > 0 the supremum is attained only in the vanishing-amplitude
limit, where the quotient reduces to S_k / sqrt(l) with S_k the plain
embedding constant sup ||u||_k / ||grad u||_2; for kappa = 0 the reduction
is S_k / sqrt(l + b).  The plain constants are estimated by projected
gradient ascent on the discrete quotient (normalized to ||grad u||_2 = 1
each iteration, seeded multi-starts), and the amplitude-limit reduction is
verified against a direct finite-amplitude search.

Initial data with E(0) < d1 and gamma_fn(0) < lambda1 stay in the well:
every later record must keep gamma_fn(t) < lambda1 and E(t) < d1, which
``verify_invariance`` checks on recorded trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assembly import (
    DiscreteOperators,
    PhysicalParams,
    boundary_quadratic,
    grad_norm_sq,
    l2_norm_sq,
    lk_norm_pow,
    source_vector,
)
from .geometry import Mesh
from .kernels import RelaxationKernel
from .stepper import Trajectory


def potential_F(x, B: float, k_exp: float):
    """F(x) = x^2/2 - (B^k/k) x^k (vectorized in x)."""
    x = np.asarray(x, dtype=float)
    val = 0.5 * x**2 - (B**k_exp / k_exp) * x**k_exp
    return float(val) if val.ndim == 0 else val


def well_constants_from_B(B: float, k_exp: float) -> tuple[float, float]:
    """(lambda1, d1): critical point and depth of the well potential."""
    if B <= 0:
        raise ValueError(f"B must be positive, got {B}")
    if k_exp <= 2:
        raise ValueError(f"k must exceed 2, got {k_exp}")
    lambda1 = B ** (-k_exp / (k_exp - 2.0))
    d1 = (k_exp - 2.0) / (2.0 * k_exp) * B ** (-2.0 * k_exp / (k_exp - 2.0))
    return lambda1, d1


@dataclass(frozen=True)
class AscentDiagnostics:
    value: float
    start_values: tuple[float, ...]
    iterations: tuple[int, ...]
    converged: tuple[bool, ...]

    @property
    def spread(self) -> float:
        return max(self.start_values) - min(self.start_values)

    @property
    def all_converged(self) -> bool:
        return all(self.converged)


def _ascend(ops: DiscreteOperators, log_num_grad, seed: int, n_starts: int,
            max_iter: int = 2000, stall_window: int = 50, stall_tol: float = 1e-10):
    """Projected gradient ascent of a homogeneous quotient on the K-sphere.

    ``log_num_grad(u)`` returns (ln numerator, gradient of ln numerator);
    iterates are renormalized to u^T K u = 1, so the quotient equals the
    numerator.  The ascent direction is the gradient in the inner product
    induced by K (Riesz representative via a sparse factorization), which
    makes the convergence rate mesh-independent; the direction is projected
    onto the tangent space of the constraint sphere before stepping.
    Returns the best iterate and per-start diagnostics.
    """
    from scipy.sparse.linalg import splu

    mesh = ops.mesh
    K = ops.stiffness
    free = mesh.free_nodes
    lu = splu(K[np.ix_(free, free)].tocsc())
    rng = np.random.default_rng(seed)

    best_u = None
    best_val = -math.inf
    finals, iters, convs = [], [], []

    for _ in range(n_starts):
        u = np.zeros(ops.n_nodes)
        u[free] = rng.standard_normal(len(free))
        u /= math.sqrt(max(u @ (K @ u), 1e-300))
        ln_val, _ = log_num_grad(u)
        eta = 1.0
        history = [ln_val]
        converged = False
        it = 0
        for it in range(1, max_iter + 1):
            _, grad_n = log_num_grad(u)
            d = np.zeros(ops.n_nodes)
            d[free] = lu.solve(grad_n[free])  # K-metric gradient of ln numerator
            d -= u  # minus the constraint part: K^{-1} K u = u at u^T K u = 1
            d -= float(d @ (K @ u)) * u  # K-orthogonal tangent projection

            accepted = False
            while eta > 1e-14:
                trial = u + eta * d
                nrm = math.sqrt(max(trial @ (K @ trial), 1e-300))
                trial /= nrm
                ln_trial, _ = log_num_grad(trial)
                if ln_trial > ln_val:
                    u, ln_val = trial, ln_trial
                    eta = min(eta * 1.3, 10.0)
                    accepted = True
                    break
                eta *= 0.5
            history.append(ln_val)
            if not accepted:
                converged = True
                break
            if (
                len(history) > stall_window
                and history[-1] - history[-1 - stall_window]
                < stall_tol * max(1.0, abs(history[-1]))
            ):
                converged = True
                break

        val = math.exp(ln_val)
        finals.append(val)
        iters.append(it)
        convs.append(converged)
        if val > best_val:
            best_val = val
            best_u = u

    diag = AscentDiagnostics(
        value=best_val,
        start_values=tuple(finals),
        iterations=tuple(iters),
        converged=tuple(convs),
    )
    return best_u, diag


def _embedding_objective(ops: DiscreteOperators, k_exp: float):
    def log_num_grad(u):
        lk = max(lk_norm_pow(ops, u, k_exp), 1e-300)
        grad = source_vector(ops, u, k_exp) / lk
        return math.log(lk) / k_exp, grad

    return log_num_grad


def _trace_objective(ops: DiscreteOperators):
    g1 = ops.mesh.gamma1_nodes
    w = ops.mesh.gamma1_weights

    def log_num_grad(u):
        num = max(float(w @ (u[g1] * u[g1])), 1e-300)
        grad = np.zeros(len(u))
        grad[g1] = w * u[g1] / num
        return 0.5 * math.log(num), grad

    return log_num_grad


def estimate_embedding_constant(
    mesh: Mesh,
    ops: DiscreteOperators,
    k_exp: float,
    seed: int = 2024,
    n_starts: int = 8,
    max_iter: int = 2000,
) -> float:
    """Discrete sup ||u||_k / ||grad u||_2 (a lower bound of the continuum
    constant, nondecreasing under uniform refinement)."""
    if k_exp < 2:
        raise ValueError(f"k must be >= 2, got {k_exp}")
    _, diag = _ascend(ops, _embedding_objective(ops, k_exp), seed, n_starts, max_iter)
    return diag.value


def estimate_trace_constant(
    mesh: Mesh,
    ops: DiscreteOperators,
    seed: int = 2024,
    n_starts: int = 8,
    max_iter: int = 2000,
) -> float:
    """Discrete sup ||u||_{2,Gamma_1} / ||grad u||_2."""
    if len(mesh.gamma1_nodes) == 0:
        raise ValueError("trace constant needs a nonempty acoustic boundary")
    _, diag = _ascend(ops, _trace_objective(ops), seed, n_starts, max_iter)
    return diag.value


def estimate_B_Omega(
    mesh: Mesh,
    ops: DiscreteOperators,
    params: PhysicalParams,
    l_value: float,
    s_k: float | None = None,
    seed: int = 2024,
    verify_tol: float = 1e-6,
) -> tuple[float, dict]:
    """Well constant B via the amplitude-limit reduction, plus verification.

    Returns (value, info); info["verified"] reports whether a direct
    finite-amplitude search stayed below the limit value, and a failure
    raises since lambda1 and d1 would be wrong.
    """
    if l_value <= 0:
        raise ValueError(f"needs l > 0, got {l_value}")
    k = params.k_exp
    if s_k is None:
        u_star, diag = _ascend(ops, _embedding_objective(ops, k), seed, 8)
        s_k = diag.value
    else:
        u_star, _ = _ascend(ops, _embedding_objective(ops, k), seed, 2)

    if params.kappa == 0.0:
        limit = s_k / math.sqrt(l_value + params.b)
    else:
        limit = s_k / math.sqrt(l_value)

    # verification: the finite-amplitude quotient must never beat the limit
    c_b = params.b / (params.kappa + 1.0)

    def quotient(u):
        gns = grad_norm_sq(ops, u)
        if gns == 0.0:
            return 0.0
        den = l_value * gns + c_b * gns ** (params.kappa + 1.0)
        return lk_norm_pow(ops, u, k) ** (1.0 / k) / math.sqrt(den)

    rng = np.random.default_rng(seed + 1)
    candidates = [u_star]
    for _ in range(3):
        v = np.zeros(ops.n_nodes)
        v[mesh.free_nodes] = rng.standard_normal(len(mesh.free_nodes))
        v /= math.sqrt(grad_norm_sq(ops, v))
        candidates.append(v)
    worst = 0.0
    for cand in candidates:
        for amp in np.geomspace(1e-8, 10.0, 40):
            worst = max(worst, quotient(amp * cand))

    verified = worst <= limit * (1.0 + verify_tol)
    info = {"verified": verified, "finite_amplitude_max": worst, "s_k": s_k}
    if not verified:
        raise RuntimeError(
            f"B_Omega verification failed: finite-amplitude quotient {worst:.12g} "
            f"exceeds the amplitude-limit value {limit:.12g}"
        )
    return limit, info


@dataclass(frozen=True)
class WellConstants:
    """Well constants on a fixed mesh, with optimizer diagnostics."""

    c_star: float
    c_bar_star: float
    b_omega: float
    lambda1: float
    d1: float
    k_exp: float
    dimension: int
    resolution: tuple[int, ...]
    diagnostics: dict

    def to_dict(self) -> dict:
        return {
            "c_star": self.c_star,
            "c_bar_star": self.c_bar_star,
            "b_omega": self.b_omega,
            "lambda1": self.lambda1,
            "d1": self.d1,
            "k_exp": self.k_exp,
            "dimension": self.dimension,
            "resolution": list(self.resolution),
            "diagnostics": self.diagnostics,
        }


def compute_well_constants(
    mesh: Mesh,
    ops: DiscreteOperators,
    params: PhysicalParams,
    kernel: RelaxationKernel | None,
    seed: int = 2024,
) -> WellConstants:
    """Embedding/trace constants, B, lambda1 and d1 for one configuration."""
    l_value = kernel.l_value if kernel is not None else params.a
    _, emb_diag = _ascend(ops, _embedding_objective(ops, params.k_exp), seed, 8)
    s_k = emb_diag.value
    _, tr_diag = _ascend(ops, _trace_objective(ops), seed, 8)
    b_omega, info = estimate_B_Omega(mesh, ops, params, l_value, s_k=s_k, seed=seed)
    lambda1, d1 = well_constants_from_B(b_omega, params.k_exp)
    return WellConstants(
        c_star=s_k,
        c_bar_star=tr_diag.value,
        b_omega=b_omega,
        lambda1=lambda1,
        d1=d1,
        k_exp=params.k_exp,
        dimension=mesh.dimension,
        resolution=mesh.spec.resolution,
        diagnostics={
            "embedding": {
                "start_values": list(emb_diag.start_values),
                "iterations": list(emb_diag.iterations),
                "spread": emb_diag.spread,
                "all_converged": emb_diag.all_converged,
            },
            "trace": {
                "start_values": list(tr_diag.start_values),
                "iterations": list(tr_diag.iterations),
                "spread": tr_diag.spread,
                "all_converged": tr_diag.all_converged,
            },
            "b_omega_verification": info,
            "seed": seed,
        },
    )


@dataclass(frozen=True)
class StableSetReport:
    """Initial-data membership check against the well constants."""

    E0: float
    gamma0: float
    lambda1: float
    d1: float
    in_well: bool
    energy_ratio: float
    gamma_ratio: float

    def to_dict(self) -> dict:
        return {
            "E0": self.E0,
            "gamma0": self.gamma0,
            "lambda1": self.lambda1,
            "d1": self.d1,
            "in_well": self.in_well,
            "energy_ratio": self.energy_ratio,
            "gamma_ratio": self.gamma_ratio,
        }


def check_initial_membership(
    u0: np.ndarray,
    u1: np.ndarray,
    y0: np.ndarray,
    constants: WellConstants,
    ops: DiscreteOperators,
    params: PhysicalParams,
    kernel: RelaxationKernel | None,
) -> StableSetReport:
    """Strict inequalities E(0) < d1 and gamma_fn(0) < lambda1.

    gamma_fn(0) has no memory term; the energy at t = 0 has no accumulated
    kernel mass.
    """
    l_value = kernel.l_value if kernel is not None else params.a
    y0 = np.broadcast_to(np.asarray(y0, dtype=float), (len(ops.mesh.gamma1_nodes),))
    gns = grad_norm_sq(ops, u0)
    boundary = boundary_quadratic(ops, y0, params.q_c)
    gamma0 = math.sqrt(
        l_value * gns
        + params.b / (params.kappa + 1.0) * gns ** (params.kappa + 1.0)
        + boundary
    )
    E0 = (
        0.5 * l2_norm_sq(ops, u1)
        + 0.5 * params.a * gns
        + params.b / (2.0 * (params.kappa + 1.0)) * gns ** (params.kappa + 1.0)
        + 0.5 * boundary
    )
    if params.source_enabled:
        E0 -= lk_norm_pow(ops, u0, params.k_exp) / params.k_exp
    in_well = (E0 < constants.d1) and (gamma0 < constants.lambda1)
    return StableSetReport(
        E0=E0,
        gamma0=gamma0,
        lambda1=constants.lambda1,
        d1=constants.d1,
        in_well=in_well,
        energy_ratio=E0 / constants.d1,
        gamma_ratio=gamma0 / constants.lambda1,
    )


@dataclass(frozen=True)
class InvarianceVerdict:
    passed: bool
    n_checked: int
    max_gamma_ratio: float
    max_energy_ratio: float
    first_violation_time: float | None = None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "n_checked": self.n_checked,
            "max_gamma_ratio": self.max_gamma_ratio,
            "max_energy_ratio": self.max_energy_ratio,
            "first_violation_time": self.first_violation_time,
        }


def verify_invariance(trajectory: Trajectory, constants: WellConstants) -> InvarianceVerdict:
    """Check gamma_fn(t) < lambda1 and E(t) < d1 at every recorded state."""
    max_g = 0.0
    max_e = -math.inf
    first_bad = None
    for rep in trajectory.reports:
        max_g = max(max_g, rep.gamma_fn / constants.lambda1)
        max_e = max(max_e, rep.total / constants.d1)
        bad = rep.gamma_fn >= constants.lambda1 or rep.total >= constants.d1
        if bad and first_bad is None:
            first_bad = rep.t
    return InvarianceVerdict(
        passed=first_bad is None,
        n_checked=len(trajectory.reports),
        max_gamma_ratio=max_g,
        max_energy_ratio=max_e,
        first_violation_time=first_bad,
    )
