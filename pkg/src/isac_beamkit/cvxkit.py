"""Small dense convex-optimization kit.

Three pieces, all deterministic and dependency-free beyond numpy/scipy:

  * a top generalized-eigenpair solver (the rank-1 sensing optimum);
  * a log-barrier interior-point solver for convex QCQPs with linear
    objective (hosts the slack-penalized analog-beamforming subproblems);
  * the rate-constrained trace-maximization solver for the transmit digital
    covariance, via Lagrange duality with two scalar multipliers: an inner
    closed-form water-filling and nested root-finding on the power and rate
    complementarity conditions. The same routine covers the per-subcarrier
    case (one covariance per carrier, average-rate constraint).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.optimize import brentq


class SolverError(RuntimeError):
    """Internal solver failure (distinct from problem infeasibility)."""


class RateInfeasibleError(ValueError):
    """Requested rate exceeds what full power can support."""

    def __init__(self, rate_target: float, max_rate: float, message: str = ""):
        self.rate_target = rate_target
        self.max_rate = max_rate
        super().__init__(
            message
            or f"rate target {rate_target:.6g} nats exceeds achievable {max_rate:.6g} nats"
        )


# ---------------------------------------------------------------------------
# generalized eigenpair
# ---------------------------------------------------------------------------

def top_generalized_eig(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray]:
    """Largest generalized eigenpair of (A, B), A Hermitian PSD, B Hermitian PD.

    Returns (lam, x) with A x = lam B x and x^H B x = 1. Ties are broken
    deterministically (largest leading entry magnitude, then lowest index)
    and the global phase is fixed so the largest-magnitude entry is real
    positive.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    try:
        scipy.linalg.cholesky(b, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise SolverError("B is not positive definite") from exc
    lam, vec = scipy.linalg.eigh(a, b)
    top = lam[-1]
    tied = np.where(lam >= top - 1e-12 * max(abs(top), 1.0))[0]
    if tied.size > 1:
        lead = np.abs(vec[0, tied])
        tied = tied[lead >= lead.max() - 1e-12]
        best = tied[0]
    else:
        best = tied[0]
    x = vec[:, best]
    k = int(np.argmax(np.abs(x)))
    ph = x[k] / abs(x[k]) if abs(x[k]) > 0 else 1.0
    x = x / ph
    return float(top), x


# ---------------------------------------------------------------------------
# convex QCQP via log barrier
# ---------------------------------------------------------------------------

@dataclass
class QuadConstraint:
    """x^T Q x + a^T x + b <= 0 with Q symmetric PSD (None means linear)."""

    quad: Optional[np.ndarray]
    lin: np.ndarray
    offset: float


@dataclass
class ConvexQcqp:
    """minimize c^T x subject to convex quadratic/linear <= constraints."""

    objective: np.ndarray
    constraints: list[QuadConstraint]
    nonneg: Optional[np.ndarray] = None  # boolean mask of coordinates kept >= 0

    @property
    def dim(self) -> int:
        return self.objective.size


@dataclass
class SolverReport:
    x: np.ndarray
    objective: float
    max_violation: float
    kkt_residual: float
    iterations: int
    success: bool
    message: str = ""


class _Constraints:
    """Split constraint set with vectorized value/gradient/Hessian pieces."""

    def __init__(self, problem: ConvexQcqp):
        n = problem.dim
        quads = [c for c in problem.constraints if c.quad is not None]
        lins = [c for c in problem.constraints if c.quad is None]
        if problem.nonneg is not None:
            for i in np.where(problem.nonneg)[0]:
                a = np.zeros(n)
                a[i] = -1.0
                lins.append(QuadConstraint(None, a, 0.0))
        self.n = n
        self.qmats = np.array([c.quad for c in quads]) if quads else np.zeros((0, n, n))
        self.qlin = np.array([c.lin for c in quads]) if quads else np.zeros((0, n))
        self.qoff = np.array([c.offset for c in quads])
        self.alin = np.array([c.lin for c in lins]) if lins else np.zeros((0, n))
        self.aoff = np.array([c.offset for c in lins])
        self.m = self.qoff.size + self.aoff.size

    def values(self, x: np.ndarray) -> np.ndarray:
        vq = (
            np.einsum("qij,i,j->q", self.qmats, x, x, optimize=True)
            + self.qlin @ x
            + self.qoff
            if self.qoff.size
            else np.zeros(0)
        )
        vl = self.alin @ x + self.aoff if self.aoff.size else np.zeros(0)
        return np.concatenate([vq, vl])

    def values_and_gradients(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.qoff.size:
            qx = np.einsum("qij,j->qi", self.qmats, x, optimize=True)
            vq = (qx * x).sum(axis=1) + self.qlin @ x + self.qoff
            gq = 2.0 * qx + self.qlin
        else:
            vq, gq = np.zeros(0), np.zeros((0, self.n))
        if self.aoff.size:
            vl = self.alin @ x + self.aoff
            return np.concatenate([vq, vl]), np.vstack([gq, self.alin])
        return vq, gq

    def gradients(self, x: np.ndarray) -> np.ndarray:
        return self.values_and_gradients(x)[1]

    def ray_coefficients(self, x: np.ndarray, dx: np.ndarray, vals, grads):
        """(v0, v1, v2) with q_i(x + s*dx) = v0 + s*v1 + s^2*v2."""
        v1 = grads @ dx
        v2 = np.zeros(self.m)
        if self.qoff.size:
            v2[: self.qoff.size] = np.einsum("qij,i,j->q", self.qmats, dx, dx, optimize=True)
        return vals, v1, v2

    def barrier_hessian(self, x: np.ndarray, vals: np.ndarray, grads: np.ndarray) -> np.ndarray:
        inv = 1.0 / vals  # vals < 0 in the domain
        h = (grads * (inv**2)[:, None]).T @ grads
        if self.qoff.size:
            h += np.einsum("q,qij->ij", -2.0 * inv[: self.qoff.size], self.qmats, optimize=True)
        return h


def _newton_barrier(
    cons: _Constraints,
    c: np.ndarray,
    x: np.ndarray,
    t_bar: float,
    max_iter: int,
    stop_fn=None,
) -> tuple[np.ndarray, int, str]:
    """Damped Newton on t*c^T x - sum log(-q_i(x)); x must be strictly feasible.

    Returns (x, iterations, reason) with reason one of "conv" (decrement
    small), "cap" (iteration limit), "stall" (line search cannot certify
    progress at this t in float64), "stop" (caller's early-exit test).
    """
    n = x.size
    for it in range(max_iter):
        vals, grads = cons.values_and_gradients(x)
        g = t_bar * c - grads.T @ (1.0 / vals)
        h = cons.barrier_hessian(x, vals, grads)
        try:
            l_chol = scipy.linalg.cho_factor(h, lower=True)
            dx = -scipy.linalg.cho_solve(l_chol, g)
        except scipy.linalg.LinAlgError:
            h = h + (1e-10 * max(np.trace(h) / n, 1.0)) * np.eye(n)
            dx = -np.linalg.solve(h, g)
        lam2 = float(-g @ dx)
        if lam2 / 2.0 <= 1e-11:
            return x, it, "conv"
        # backtracking line search on the ray, with constraint values along
        # the ray evaluated from their exact quadratic coefficients
        v0, v1, v2 = cons.ray_coefficients(x, dx, vals, grads)
        f0 = t_bar * (c @ x) - np.log(-vals).sum()
        c_dx = float(c @ dx)
        g_dx = float(g @ dx)
        step = 1.0
        for _ in range(80):
            vn = v0 + step * v1 + step * step * v2
            if np.all(vn < 0):
                fn = t_bar * (c @ x + step * c_dx) - np.log(-vn).sum()
                if fn <= f0 + 0.25 * step * g_dx:
                    break
            step *= 0.5
        else:
            return x, it, "stall"
        x = x + step * dx
        if stop_fn is not None and stop_fn(x):
            return x, it + 1, "stop"
    return x, max_iter, "cap"


def _phase_one(cons_problem: ConvexQcqp, x0: np.ndarray) -> tuple[np.ndarray, bool]:
    """Find a strictly feasible point by minimizing the worst violation.

    A generous ball around x0 bounds the search: the pure feasibility
    objective says nothing about coordinates the constraints reward pushing
    to infinity (slack variables), and the barrier would chase them.
    """
    n = cons_problem.dim
    aug_cons = []
    for con in cons_problem.constraints:
        lin = np.append(con.lin, -1.0)
        quad = None
        if con.quad is not None:
            quad = np.zeros((n + 1, n + 1))
            quad[:n, :n] = con.quad
        aug_cons.append(QuadConstraint(quad, lin, con.offset))
    if cons_problem.nonneg is not None:
        for i in np.where(cons_problem.nonneg)[0]:
            a = np.zeros(n + 1)
            a[i] = -1.0
            a[-1] = -1.0
            aug_cons.append(QuadConstraint(None, a, 0.0))
    radius2 = 1e4 * n * max(1.0, float(x0 @ x0))
    ball = np.zeros((n + 1, n + 1))
    ball[:n, :n] = np.eye(n)
    aug_cons.append(QuadConstraint(ball, np.zeros(n + 1), -radius2))
    aug = ConvexQcqp(np.append(np.zeros(n), 1.0), aug_cons, None)
    cons = _Constraints(aug)
    s0 = float(cons.values(np.append(x0, 0.0)).max()) if cons.m else -1.0
    x = np.append(x0, s0 + 1.0)
    c = aug.objective
    t_bar = 1.0
    for _ in range(40):
        x, _, reason = _newton_barrier(cons, c, x, t_bar, 60, stop_fn=lambda z: z[-1] < -1e-9)
        if x[-1] < -1e-9:
            return x[:n], True
        if cons.m / t_bar < 1e-10 or reason == "stall":
            break
        t_bar *= 20.0
    return x[:n], bool(x[-1] < 0)


def solve_convex_qcqp(
    problem: ConvexQcqp,
    tol: float = 1e-8,
    x0: Optional[np.ndarray] = None,
    max_stages: int = 60,
) -> SolverReport:
    """Log-barrier interior-point solve of a convex QCQP.

    If x0 is strictly feasible it is used directly, otherwise a phase-I
    barrier run locates an interior point first. The returned violation and
    KKT residual are recomputed from the final iterate.
    """
    cons = _Constraints(problem)
    n = problem.dim
    c = problem.objective
    if x0 is None:
        x0 = np.zeros(n)
    x0 = np.asarray(x0, dtype=float)
    vals0 = cons.values(x0)
    if vals0.size and vals0.max() >= -1e-12:
        x0, ok = _phase_one(problem, x0)
        if not ok:
            vals = cons.values(x0)
            return SolverReport(
                x=x0,
                objective=float(c @ x0),
                max_violation=float(vals.max()) if vals.size else 0.0,
                kkt_residual=float("inf"),
                iterations=0,
                success=False,
                message="no strictly feasible point found",
            )
    x = x0
    # duality-gap target frozen at the starting objective scale; tying it to
    # the current iterate would let a wild |f| value self-certify
    gap_target = tol * max(1.0, abs(float(c @ x0)))
    t_bar = max(1.0, cons.m)
    total_newton = 0
    for _ in range(max_stages):
        f_before = float(c @ x)
        x, its, reason = _newton_barrier(cons, c, x, t_bar, 60)
        total_newton += its
        if cons.m / t_bar < gap_target:
            break
        if reason in ("stall", "cap") and abs(float(c @ x) - f_before) <= 1e-12 * max(
            1.0, abs(f_before)
        ):
            # float64 cannot certify further progress at this barrier weight
            break
        t_bar *= 20.0
    vals = cons.values(x)
    grads = cons.gradients(x)
    duals = 1.0 / (-vals * t_bar)
    kkt = float(np.abs(c + grads.T @ duals).max())
    return SolverReport(
        x=x,
        objective=float(c @ x),
        max_violation=float(vals.max()) if vals.size else 0.0,
        kkt_residual=kkt,
        iterations=total_newton,
        success=bool(vals.max() < tol if vals.size else True),
        message="",
    )


# ---------------------------------------------------------------------------
# water-filling and the rate-constrained trace maximization
# ---------------------------------------------------------------------------

def waterfill(gains: np.ndarray, budget: float, noise: float) -> tuple[np.ndarray, float]:
    """maximize sum log(1 + p_i g_i / noise) s.t. sum p <= budget, p >= 0.

    Returns (p, level) with p_i = (level - noise/g_i)^+. Exact via sorting.
    """
    gains = np.asarray(gains, dtype=float)
    pos = gains > 0
    if budget <= 0 or not pos.any():
        return np.zeros_like(gains), 0.0
    inv = noise / gains[pos]
    order = np.argsort(inv)
    inv_sorted = inv[order]
    # water level if the first j+1 channels are active
    csum = np.cumsum(inv_sorted)
    levels = (budget + csum) / (np.arange(inv_sorted.size) + 1)
    active = levels > inv_sorted
    j = int(np.nonzero(active)[0][-1])
    level = float(levels[j])
    p_pos = np.maximum(level - inv, 0.0)
    p = np.zeros_like(gains)
    p[pos] = p_pos
    return p, level


def _inv_sqrt_psd(m: np.ndarray, floor: float = 1e-300) -> np.ndarray:
    lam, vec = np.linalg.eigh(0.5 * (m + m.conj().T))
    lam = np.maximum(lam, floor)
    return (vec / np.sqrt(lam)) @ vec.conj().T


def mimo_capacity(
    h_list: list[np.ndarray], g_eff: np.ndarray, power: float, noise: float
) -> float:
    """Maximum average rate over the sub-carriers at total power `power`.

    Joint water-filling across all (carrier, eigenmode) pairs of the
    whitened channels H_k G^{-1/2}. g_eff must be positive definite (an
    analog matrix with dependent columns has no well-defined per-chain
    power accounting).
    """
    try:
        scipy.linalg.cholesky(g_eff, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise SolverError("power Gram matrix is not positive definite") from exc
    g_inv_half = _inv_sqrt_psd(g_eff)
    gains = np.concatenate(
        [scipy.linalg.svdvals(h @ g_inv_half) ** 2 for h in h_list]
    )
    p, _ = waterfill(gains, power, noise)
    return float(np.log1p(p * gains / noise).sum() / len(h_list))


@dataclass
class TraceMaxResult:
    """Solution of the rate-constrained trace maximization."""

    r_bb: list[np.ndarray]
    objective: float
    rate: float
    power: float
    beta: float          # dual of the rate constraint
    mu: float            # dual of the power constraint
    branch: str          # "sensing" | "capacity" | "dual"

    @property
    def r_single(self) -> np.ndarray:
        return self.r_bb[0]


def _exact_rate(h_list: list[np.ndarray], r_list: list[np.ndarray], noise: float) -> float:
    """Average log-det rate of explicit covariances (no eigen shortcuts)."""
    total = 0.0
    for h, r in zip(h_list, r_list):
        n_u = h.shape[0]
        g = np.eye(n_u) + h @ r @ h.conj().T / noise
        total += float(np.linalg.slogdet(g)[1])
    return total / len(h_list)


def _dual_point(
    a_eff: np.ndarray,
    g_eff: np.ndarray,
    h_list: list[np.ndarray],
    noise: float,
    mu: float,
    beta: float,
) -> tuple[list[np.ndarray], float, float, float]:
    """Inner maximizer of the Lagrangian at duals (mu, beta).

    Q = mu*G - A must be PD; the solution is per-carrier water-filling on the
    Q-whitened channels with water level beta/K. Returns (R_k, power, rate,
    objective)."""
    k_sub = len(h_list)
    q = mu * g_eff - a_eff
    q_inv_half = _inv_sqrt_psd(q)
    r_list, power, rate, objective = [], 0.0, 0.0, 0.0
    for h in h_list:
        u, s, vh = np.linalg.svd(h @ q_inv_half, full_matrices=False)
        gains = s**2
        alloc = np.maximum(beta / k_sub - noise / np.maximum(gains, 1e-300), 0.0)
        alloc[gains <= 0] = 0.0
        basis = q_inv_half @ vh.conj().T
        r = (basis * alloc) @ basis.conj().T
        r = 0.5 * (r + r.conj().T)
        r_list.append(r)
        power += float(np.trace(g_eff @ r).real)
        rate += float(np.log1p(alloc * gains / noise).sum()) / k_sub
        objective += float(np.trace(a_eff @ r).real)
    return r_list, power, rate, objective


def rate_constrained_trace_max_multi(
    a_eff: np.ndarray,
    g_eff: np.ndarray,
    h_list: list[np.ndarray],
    power: float,
    rate_target: float,
    noise: float,
) -> TraceMaxResult:
    """maximize sum_k tr(A R_k) s.t. average rate >= target, total power <= P.

    A = a_eff (PSD), Gram G = g_eff (PD), per-carrier channels h_list. Strong
    duality holds (convex, Slater point from the capacity solution), so the
    optimum is recovered from two scalar duals: mu (power) found by
    root-finding at every beta (rate), and beta found by root-finding on the
    achieved rate.
    """
    a_eff = 0.5 * (np.asarray(a_eff) + np.asarray(a_eff).conj().T)
    g_eff = 0.5 * (np.asarray(g_eff) + np.asarray(g_eff).conj().T)
    k_sub = len(h_list)
    if power <= 0:
        raise ValueError("power budget must be positive")

    scale_a = float(np.linalg.norm(a_eff))
    scale_g = float(np.linalg.norm(g_eff))
    if scale_a <= 1e-16 * max(scale_g, 1.0):
        # sensing term vanishes: return the capacity water-filling point
        g_inv_half = _inv_sqrt_psd(g_eff)
        r_list = []
        gains_all = [scipy.linalg.svdvals(h @ g_inv_half) ** 2 for h in h_list]
        p_all, _ = waterfill(np.concatenate(gains_all), power, noise)
        rate = float(np.log1p(p_all * np.concatenate(gains_all) / noise).sum() / k_sub)
        ofs = 0
        for h, gains in zip(h_list, gains_all):
            _, s, vh = np.linalg.svd(h @ g_inv_half, full_matrices=False)
            alloc = p_all[ofs : ofs + gains.size]
            ofs += gains.size
            basis = g_inv_half @ vh.conj().T
            r = (basis * alloc) @ basis.conj().T
            r_list.append(0.5 * (r + r.conj().T))
        if rate < rate_target - 1e-9:
            raise RateInfeasibleError(rate_target, rate)
        used = sum(float(np.trace(g_eff @ r).real) for r in r_list)
        return TraceMaxResult(r_list, 0.0, rate, used, 0.0, 0.0, "capacity")

    lam_top, x_top = top_generalized_eig(a_eff, g_eff)

    # branch 1: unconstrained sensing optimum (rank one, full power)
    r_sense = [np.zeros_like(a_eff) for _ in range(k_sub)]
    r_sense[0] = power * np.outer(x_top, x_top.conj())
    gain_s = float(np.real(x_top.conj() @ (h_list[0].conj().T @ h_list[0]) @ x_top))
    rate_sense = math.log1p(power * gain_s / noise) / k_sub
    if rate_sense >= rate_target - 1e-12:
        return TraceMaxResult(
            r_sense, power * lam_top, rate_sense, power, 0.0, lam_top, "sensing"
        )

    c_max = mimo_capacity(h_list, g_eff, power, noise)
    if rate_target > c_max + 1e-12:
        raise RateInfeasibleError(rate_target, c_max)

    mu_floor = lam_top + max(1e-12 * max(lam_top, 1.0), 1e-300)

    def solve_mu(beta: float):
        """Power complementarity: find mu with total power == budget."""
        def pow_gap(mu):
            _, p, _, _ = _dual_point(a_eff, g_eff, h_list, noise, mu, beta)
            return p - power

        lo = mu_floor
        gap_lo = pow_gap(lo)
        if gap_lo <= 0.0:
            # power cannot be exhausted by the water-filling part; park the
            # deficit on the top sensing direction (zero reduced cost there)
            r_list, p, _, obj = _dual_point(a_eff, g_eff, h_list, noise, lo, beta)
            deficit = power - p
            r_list[0] = r_list[0] + deficit * np.outer(x_top, x_top.conj())
            rate_new = _exact_rate(h_list, r_list, noise)
            return r_list, power, rate_new, obj + deficit * lam_top, lo
        hi = max(2.0 * lam_top, lam_top + 1.0, scale_a / max(scale_g, 1e-300))
        for _ in range(300):
            if pow_gap(hi) < 0:
                break
            hi *= 4.0
        else:
            raise SolverError("power bracket not found")
        mu = brentq(pow_gap, lo, hi, xtol=1e-300, rtol=1e-14, maxiter=300)
        r_list, p, rate, obj = _dual_point(a_eff, g_eff, h_list, noise, mu, beta)
        return r_list, p, rate, obj, mu

    # scale for beta: water levels live around K * noise / typical gain
    probe = _inv_sqrt_psd(2.0 * max(lam_top, 1e-300) * g_eff - a_eff + 1e-30 * np.eye(a_eff.shape[0]))
    h_ref = max(
        float(scipy.linalg.svdvals(h @ probe).max()) ** 2 for h in h_list
    )
    beta_scale = k_sub * noise / max(h_ref, 1e-300)

    def rate_at(beta):
        return solve_mu(beta)[2]

    b_lo, b_hi = beta_scale * 1e-8, beta_scale
    for _ in range(300):
        if rate_at(b_hi) >= rate_target:
            break
        b_hi *= 4.0
    else:
        raise SolverError("rate bracket not found")
    for _ in range(300):
        if rate_at(b_lo) < rate_target:
            break
        b_hi = b_lo
        b_lo *= 0.25
    beta = brentq(
        lambda b: rate_at(b) - rate_target, b_lo, b_hi, xtol=1e-300, rtol=1e-14, maxiter=300
    )
    r_list, used, rate, obj, mu = solve_mu(beta)
    # land on the feasible side of the rate constraint
    for _ in range(60):
        if rate >= rate_target - 1e-9:
            break
        beta *= 1.0 + 1e-12
        r_list, used, rate, obj, mu = solve_mu(beta)
    return TraceMaxResult(r_list, obj, rate, used, beta, mu, "dual")


def rate_constrained_trace_max(
    a_eff: np.ndarray,
    g_eff: np.ndarray,
    h_eff: np.ndarray,
    power: float,
    rate_target: float,
    noise: float,
) -> TraceMaxResult:
    """Narrowband digital-beamforming solver (single carrier)."""
    return rate_constrained_trace_max_multi(
        a_eff, g_eff, [np.asarray(h_eff)], power, rate_target, noise
    )
