"""Benchmark schemes, parameter sweeps, Monte-Carlo aggregation, power patterns.

Scheme catalogue (sensing-only when the scenario's rate target is zero):

  fully_digital     both ends fully digital; convex, solved exactly
  fd_receive        fully-digital receiver, hybrid transmitter optimized
  fd_transmit       fully-digital transmitter, receive side + digital optimized
  random_phase:N    best of N uniform-phase analog draws, exact digital stage
  direction_align   analog columns steer at the user and the most probable
                    target angles; receive/digital optimized
  partial_prior     optimizes the point CRB at the most probable angle but is
                    scored by the true PCRB
  proposed          the alternating optimizer of this package
"""

from __future__ import annotations

import enum
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .cvxkit import RateInfeasibleError, rate_constrained_trace_max_multi
from .designs import (
    AoReport,
    HybridDesign,
    RxIdentity,
    achieved_rate,
    default_rx,
)
from .isac_opt import ao_isac, ao_p1, init_random_phase
from .model import (
    ArrayConfig,
    ModelError,
    RicianChannelSpec,
    RxArchitecture,
    Scenario,
    realize_channel,
    steering_derivative,
    steering_vector,
)
from .ofdm_opt import ao_p2
from .pcrb import PcrbEngine
from .sensing_opt import ao_p0, ao_sensing
from .scenarios import dbm_to_watt


class SchemeError(ValueError):
    """Scheme/scenario mismatch (missing channel recipe, bad RF counts, ...)."""


class SchemeKind(enum.Enum):
    FULLY_DIGITAL = "fully_digital"
    FD_RECEIVE = "fd_receive"
    FD_TRANSMIT = "fd_transmit"
    RANDOM_PHASE = "random_phase"
    DIRECTION_ALIGN = "direction_align"
    PARTIAL_PRIOR = "partial_prior"
    PROPOSED = "proposed"


@dataclass(frozen=True)
class Scheme:
    kind: SchemeKind
    n_rand: int = 100

    @classmethod
    def parse(cls, text: str) -> "Scheme":
        name, _, arg = text.partition(":")
        kind = SchemeKind(name)
        if kind is SchemeKind.RANDOM_PHASE and arg:
            return cls(kind, int(arg))
        return cls(kind)

    def label(self) -> str:
        if self.kind is SchemeKind.RANDOM_PHASE:
            return f"random_phase:{self.n_rand}"
        return self.kind.value


class PointAngleObjective:
    """Point-evaluated surrogates of the prior-weighted integrals.

    Replaces the integral over the angle density by the integrand at one
    angle (the density's mode), i.e. the classical CRB objective at the most
    probable target position.
    """

    def __init__(self, scenario: Scenario, theta: float):
        arrays = scenario.arrays
        a = steering_vector(arrays.n_tx, theta)
        da = steering_derivative(arrays.n_tx, theta)
        b = steering_vector(arrays.n_rx, theta)
        db = steering_derivative(arrays.n_rx, theta)
        # Mdot = db a^H + b da^H at the chosen angle
        self.m_dot = np.outer(db, a.conj()) + np.outer(b, da.conj())

    def a1(self, w: np.ndarray) -> np.ndarray:
        g = w @ w.conj().T
        out = self.m_dot.conj().T @ g @ self.m_dot
        return 0.5 * (out + out.conj().T)

    def b_tilde(self, tx_cov: np.ndarray) -> np.ndarray:
        out = self.m_dot @ tx_cov @ self.m_dot.conj().T
        return 0.5 * (out + out.conj().T)


def _fully_digital_scenario(scenario: Scenario) -> Scenario:
    arrays = scenario.arrays
    fd = ArrayConfig(
        arrays.n_tx,
        arrays.n_rx,
        arrays.n_user,
        arrays.n_tx,
        arrays.n_rx,
        RxArchitecture.FULLY_DIGITAL,
    )
    return scenario.replace(arrays=fd)


def _fd_receive_scenario(scenario: Scenario) -> Scenario:
    arrays = scenario.arrays
    fd = ArrayConfig(
        arrays.n_tx,
        arrays.n_rx,
        arrays.n_user,
        arrays.n_rf_tx,
        arrays.n_rx,
        RxArchitecture.FULLY_DIGITAL,
    )
    return scenario.replace(arrays=fd)


def _convex_exact(scenario: Scenario, engine: PcrbEngine, t_start: float) -> AoReport:
    """Fully-digital transceiver: one exact convex solve, no AO loop."""
    arrays = scenario.arrays
    a_fd = engine.a1(np.eye(arrays.n_rx))
    h_list = scenario.channel.per_subcarrier()
    res = rate_constrained_trace_max_multi(
        a_fd,
        np.eye(arrays.n_tx),
        h_list,
        scenario.power,
        scenario.rate_target,
        scenario.noise_comm,
    )
    design = HybridDesign(None, tuple(res.r_bb), RxIdentity())
    pcrb = engine.pcrb(design)
    return AoReport(
        trace=[pcrb],
        design=design,
        converged=True,
        wall_time=time.perf_counter() - t_start,
        final_pcrb=pcrb,
        final_rate=res.rate,
        power_used=design.total_power(),
        feasible=True,
    )


def _alignment_matrix(scenario: Scenario) -> np.ndarray:
    spec = scenario.channel_spec
    if not isinstance(spec, RicianChannelSpec):
        raise SchemeError(
            "direction_align needs a narrowband channel recipe with a known user angle"
        )
    arrays = scenario.arrays
    prior = scenario.angle_prior
    order = np.argsort(-prior.weights, kind="stable")
    cols = [steering_vector(arrays.n_tx, spec.theta_user)]
    for j in range(1, arrays.n_rf_tx):
        if j - 1 < order.size:
            cols.append(steering_vector(arrays.n_tx, float(prior.means[order[j - 1]])))
        else:
            cols.append(steering_vector(arrays.n_tx, spec.theta_user))
    return np.stack(cols, axis=1)


def _dispatch_ao(scenario: Scenario, engine: PcrbEngine, ao_options: dict) -> AoReport:
    if scenario.rate_target <= 0:
        keys = {k: v for k, v in ao_options.items() if k in ("max_outer", "tol", "restarts")}
        return ao_p0(scenario, engine, **keys)
    if scenario.subcarriers > 1:
        return ao_p2(scenario, engine, **ao_options)
    return ao_p1(scenario, engine, **ao_options)


def _run_constrained_ao(
    scenario: Scenario,
    engine: PcrbEngine,
    *,
    init_design: Optional[HybridDesign] = None,
    fixed_v: bool = False,
    a1_fn=None,
    btilde_fn=None,
    ao_options: Optional[dict] = None,
) -> AoReport:
    """AO with the appropriate driver for scheme variants."""
    ao_options = dict(ao_options or {})
    if scenario.rate_target <= 0:
        keys = {k: v for k, v in ao_options.items() if k in ("max_outer", "tol")}
        return ao_sensing(
            scenario,
            engine,
            init_design=init_design,
            fixed_v=fixed_v,
            a1_fn=a1_fn,
            btilde_fn=btilde_fn,
            **keys,
        )
    driver = ao_p2 if scenario.subcarriers > 1 else ao_isac
    return driver(
        scenario,
        engine,
        init_design=init_design,
        fixed_v=fixed_v,
        a1_fn=a1_fn,
        btilde_fn=btilde_fn,
        **ao_options,
    )


def run_scheme(
    scheme: Scheme,
    scenario: Scenario,
    engine: Optional[PcrbEngine] = None,
    ao_options: Optional[dict] = None,
) -> AoReport:
    """Evaluate one benchmark scheme on a scenario.

    For surrogate-objective schemes the report's trace logs the scheme's own
    objective while final_pcrb is always the true posterior bound of the
    returned design.
    """
    t_start = time.perf_counter()
    ao_options = dict(ao_options or {})

    if scheme.kind is SchemeKind.FULLY_DIGITAL:
        sc = _fully_digital_scenario(scenario)
        return _convex_exact(sc, PcrbEngine(sc), t_start)

    if scheme.kind is SchemeKind.FD_RECEIVE:
        sc = _fd_receive_scenario(scenario)
        return _dispatch_ao(sc, PcrbEngine(sc), ao_options)

    if engine is None:
        engine = PcrbEngine(scenario)

    if scheme.kind is SchemeKind.PROPOSED:
        return _dispatch_ao(scenario, engine, ao_options)

    if scheme.kind is SchemeKind.RANDOM_PHASE:
        design = init_random_phase(scenario, scheme.n_rand, scenario.seed, engine)
        pcrb = engine.pcrb(design)
        return AoReport(
            trace=[pcrb],
            design=design,
            converged=True,
            wall_time=time.perf_counter() - t_start,
            final_pcrb=pcrb,
            final_rate=achieved_rate(scenario, design),
            power_used=design.total_power(),
            feasible=True,
        )

    if scheme.kind is SchemeKind.FD_TRANSMIT:
        arrays = scenario.arrays
        fd_tx = ArrayConfig(
            arrays.n_tx,
            arrays.n_rx,
            arrays.n_user,
            arrays.n_tx,
            arrays.n_rf_rx,
            arrays.rx_architecture,
        )
        sc = scenario.replace(arrays=fd_tx)
        eng = PcrbEngine(sc)
        k = sc.subcarriers
        r0 = [np.eye(arrays.n_tx, dtype=complex) * (sc.power / arrays.n_tx / k)] * k
        init = HybridDesign(None, tuple(r0), default_rx(fd_tx))
        return _run_constrained_ao(sc, eng, init_design=init, ao_options=ao_options)

    if scheme.kind is SchemeKind.DIRECTION_ALIGN:
        v_align = _alignment_matrix(scenario)
        k = scenario.subcarriers
        arrays = scenario.arrays
        scale = scenario.power / (arrays.n_tx * arrays.n_rf_tx * k)
        r0 = [np.eye(arrays.n_rf_tx, dtype=complex) * scale] * k
        init = HybridDesign(v_align, tuple(r0), default_rx(arrays))
        return _run_constrained_ao(
            scenario, engine, init_design=init, fixed_v=True, ao_options=ao_options
        )

    if scheme.kind is SchemeKind.PARTIAL_PRIOR:
        theta_max = scenario.angle_prior.most_probable_angle()
        point = PointAngleObjective(scenario, theta_max)
        return _run_constrained_ao(
            scenario,
            engine,
            a1_fn=point.a1,
            btilde_fn=point.b_tilde,
            ao_options=ao_options,
        )

    raise SchemeError(f"unknown scheme {scheme!r}")


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

SWEEP_VARIABLES = ("power_dbm", "rate_target_bits", "n_rf_tx")


@dataclass(frozen=True)
class SweepSpec:
    """One experiment family: a scenario template, a swept variable, schemes."""

    scenario: Scenario
    variable: str
    values: tuple
    schemes: tuple
    trials: int = 1
    seed: int = 0
    rf_budget: int = 0            # used by the n_rf_tx sweep
    record_timings: bool = False
    ao_options: Optional[tuple] = None   # (key, value) pairs, picklable

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable {self.variable!r}")
        if len(self.values) == 0:
            raise ValueError("sweep needs at least one value")
        if list(self.values) != sorted(self.values):
            raise ValueError("sweep values must be sorted ascending")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.variable == "n_rf_tx" and self.rf_budget <= 0:
            raise ValueError("n_rf_tx sweep needs a positive rf_budget")


@dataclass
class SweepRow:
    sweep_var: str
    value: float
    scheme: str
    trial: int
    pcrb_theta: float
    rate_nats: float
    rate_bits: float
    iterations: int
    feasible: bool
    wall_ms: float


def _scenario_for_value(spec: SweepSpec, value) -> Scenario:
    sc = spec.scenario
    if spec.variable == "power_dbm":
        return sc.replace(power=dbm_to_watt(float(value)))
    if spec.variable == "rate_target_bits":
        return sc.replace(rate_target=float(value) * math.log(2.0))
    n_rf_tx = int(value)
    n_rf_rx = spec.rf_budget - n_rf_tx
    arrays = sc.arrays
    new_arrays = ArrayConfig(
        arrays.n_tx,
        arrays.n_rx,
        arrays.n_user,
        n_rf_tx,
        n_rf_rx,
        arrays.rx_architecture,
    )
    return sc.replace(arrays=new_arrays)


def _run_cell(args) -> SweepRow:
    spec, vi, si, trial = args
    value = spec.values[vi]
    scheme = spec.schemes[si]
    label = scheme.label()
    try:
        sc = _scenario_for_value(spec, value)
    except ModelError as exc:
        return SweepRow(
            spec.variable, float(value), label, trial,
            float("nan"), float("nan"), float("nan"), 0, False, 0.0,
        )
    # one channel realization per trial: every scheme and every swept value
    # sees the same channel draw (cells are paired); scheme randomness is
    # seeded separately below
    if sc.channel_spec is not None and spec.trials > 1:
        chan_seed = np.random.SeedSequence(spec.seed, spawn_key=(trial,))
        sc = sc.replace(channel=realize_channel(sc.arrays, sc.channel_spec, sc.subcarriers, chan_seed))
    run_seed = int(
        np.random.SeedSequence(spec.seed, spawn_key=(vi, trial, si)).generate_state(1)[0]
    )
    sc = sc.replace(seed=run_seed)
    ao_options = dict(spec.ao_options) if spec.ao_options else {}
    t0 = time.perf_counter()
    try:
        rep = run_scheme(scheme, sc, ao_options=ao_options)
        wall = (time.perf_counter() - t0) * 1e3 if spec.record_timings else 0.0
        return SweepRow(
            spec.variable, float(value), label, trial,
            float(rep.final_pcrb), float(rep.final_rate),
            float(rep.final_rate) / math.log(2.0),
            int(rep.iterations), bool(rep.feasible), wall,
        )
    except RateInfeasibleError as exc:
        wall = (time.perf_counter() - t0) * 1e3 if spec.record_timings else 0.0
        return SweepRow(
            spec.variable, float(value), label, trial,
            float("nan"), exc.max_rate, exc.max_rate / math.log(2.0),
            0, False, wall,
        )


def _max_workers() -> int:
    env = os.environ.get("ISAC_BEAMKIT_THREADS", "0")
    try:
        n = int(env)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def sweep(spec: SweepSpec) -> list[SweepRow]:
    """Run every (value, scheme, trial) cell; deterministic under the seed.

    Infeasible cells are explicit rows (feasible=False) carrying the best
    achievable rate. Cells are independent and may run in parallel
    (ISAC_BEAMKIT_THREADS caps the pool; results are ordered regardless).
    """
    cells = [
        (spec, vi, si, trial)
        for vi in range(len(spec.values))
        for si in range(len(spec.schemes))
        for trial in range(spec.trials)
    ]
    workers = min(_max_workers(), len(cells))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_cell, cells))
    return [_run_cell(c) for c in cells]


@dataclass
class AggregateRow:
    sweep_var: str
    value: float
    scheme: str
    n_trials: int
    n_feasible: int
    pcrb_mean: float
    pcrb_stderr: float
    rate_mean: float
    rate_stderr: float


def mc_average(spec: SweepSpec, n_trials: Optional[int] = None) -> list[AggregateRow]:
    """Sweep with per-(value, scheme) means and standard errors over trials."""
    if n_trials is not None:
        spec = replace(spec, trials=n_trials)
    rows = sweep(spec)
    out = []
    for vi, value in enumerate(spec.values):
        for scheme in spec.schemes:
            label = scheme.label()
            cell = [r for r in rows if r.value == float(value) and r.scheme == label]
            ok = [r for r in cell if r.feasible and np.isfinite(r.pcrb_theta)]
            def stats(xs):
                if not xs:
                    return float("nan"), float("nan")
                arr = np.array(xs)
                se = arr.std(ddof=1) / math.sqrt(arr.size) if arr.size > 1 else 0.0
                return float(arr.mean()), float(se)
            p_mean, p_se = stats([r.pcrb_theta for r in ok])
            r_mean, r_se = stats([r.rate_nats for r in ok])
            out.append(
                AggregateRow(
                    spec.variable, float(value), label, len(cell), len(ok),
                    p_mean, p_se, r_mean, r_se,
                )
            )
    return out


# ---------------------------------------------------------------------------
# power patterns
# ---------------------------------------------------------------------------

PATTERN_POINTS = 721


def power_pattern(
    scenario: Scenario,
    design: HybridDesign,
    thetas: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Mean received echo power versus angle after analog combining.

    P(theta) = gamma * sum_k ||W^H b(theta) a(theta)^H V V_bb,k||_F^2, which
    factorizes as gamma * ||W^H b||^2 * sum_k ||V_bb,k^H V^H a||^2.
    """
    arrays = scenario.arrays
    if thetas is None:
        thetas = np.linspace(-math.pi / 2, math.pi / 2, PATTERN_POINTS)
    from .designs import digital_factor
    from .model import steering_block

    w = design.rx.matrix(arrays)
    a_all, _ = steering_block(arrays.n_tx, thetas)
    b_all, _ = steering_block(arrays.n_rx, thetas)
    p_gain = np.abs(b_all @ w.conj()) ** 2  # (n_theta, n_rf_rx)
    p_gain = p_gain.sum(axis=1)
    v = np.eye(arrays.n_tx) if design.v_rf is None else design.v_rf
    q_gain = np.zeros_like(p_gain)
    for r in design.r_bb:
        vv = v @ digital_factor(r)
        q_gain += (np.abs(a_all.conj() @ vv) ** 2).sum(axis=1)
    return thetas, scenario.reflection.gamma * p_gain * q_gain


def pattern_mass_near_prior(
    thetas: np.ndarray,
    power: np.ndarray,
    prior,
    width_sigmas: float = 3.0,
) -> float:
    """Fraction of the trapezoid-integrated pattern inside the union of
    [mean - k*sigma, mean + k*sigma] windows of the prior components."""
    total = np.trapezoid(power, thetas)
    if total <= 0:
        return 0.0
    mask = np.zeros_like(thetas, dtype=bool)
    for mu, var in zip(prior.means, prior.variances):
        s = math.sqrt(var)
        mask |= (thetas >= mu - width_sigmas * s) & (thetas <= mu + width_sigmas * s)
    inside = np.trapezoid(np.where(mask, power, 0.0), thetas)
    return float(inside / total)
