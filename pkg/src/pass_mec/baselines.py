"""Comparison schemes: a conventional co-located MIMO array with analog
beamforming at the waveguide feed location, and an FDMA variant of the
pinching-antenna system with orthogonal per-user sub-bands.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from .lp import LpProblem, LpStatus, solve_lp
from .model import (
    Allocation,
    DecodingOrder,
    PaLayout,
    Scenario,
    derive_constants,
)
from .optimizer import (
    CONSTRAINT_RTOL,
    MAX_RATE_EXPONENT,
    PassPositionState,
    SolveReport,
    SolverSettings,
    _beta_lower_bounds,
    _noma_ao,
    _power_caps,
    _rel_change,
    _sic_order_mask,
    bisection_minimize,
    global_optimize_over_orders,
    uniform_layout,
)

STEERING_GRID_SIZE = 721  # quarter-degree steps over [-90, 90]


def mimo_steering_gains(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Combined per-user gains |w^H h_k|^2 for every steering candidate.

    The array is a half-wavelength uniform linear array centered at x = 0 at
    the waveguide height; the combiner is a single unit-modulus vector with
    1/sqrt(N) scaling. Returns (steering angles in degrees, gain matrix of
    shape (angles, K)).
    """
    params = scenario.params
    consts = derive_constants(params)
    n = params.num_antennas
    xs = (np.arange(n) - (n - 1) / 2.0) * consts.wavelength_m / 2.0
    ux = np.array([u.x_m for u in scenario.users])[:, None]
    uy = np.array([u.y_m for u in scenario.users])[:, None]
    r = np.sqrt((ux - xs[None, :]) ** 2 + uy ** 2 + params.antenna_height_m ** 2)
    h = (consts.eta_m / r) * np.exp(-1j * (2.0 * math.pi / consts.wavelength_m) * r)

    thetas = np.linspace(-90.0, 90.0, STEERING_GRID_SIZE)
    # conj(w_n) = (1/sqrt(N)) exp(-j pi n sin(theta))
    w_conj = np.exp(-1j * math.pi * np.outer(np.sin(np.radians(thetas)),
                                             np.arange(n))) / math.sqrt(n)
    combined = w_conj @ h.T  # (angles, K)
    return thetas, np.abs(combined) ** 2


class MimoSteeringState:
    """Steering-angle choice as the AO position block for the MIMO baseline."""

    def __init__(self, scenario: Scenario, gain_matrix: np.ndarray,
                 idx: Optional[int] = None) -> None:
        self.gain_matrix = gain_matrix
        if idx is None:
            p0 = np.full(scenario.num_users, scenario.params.max_transmit_power_w)
            idx = int(np.argmax(gain_matrix @ p0))
        self.idx = idx

    def gains(self, scenario: Scenario) -> np.ndarray:
        return self.gain_matrix[self.idx]

    def positions(self) -> np.ndarray:
        return np.array([float(self.idx)])

    def sweep(self, scenario: Scenario, powers: Sequence[float],
              order: DecodingOrder, settings: SolverSettings) -> "MimoSteeringState":
        obj = self.gain_matrix @ np.asarray(powers, dtype=float)
        mask = _sic_order_mask(self.gain_matrix.T, order)
        cands = np.flatnonzero(mask) if mask.any() else np.arange(obj.size)
        best = int(cands[int(np.argmax(obj[cands]))])
        if obj[best] <= obj[self.idx] and (not mask.any() or mask[self.idx]):
            best = self.idx  # keep the incumbent on ties
        return MimoSteeringState(scenario, self.gain_matrix, best)

    def is_valid(self, scenario: Scenario) -> bool:
        return True

    def report_layout(self) -> Optional[PaLayout]:
        return None


def mimo_baseline_delay(scenario: Scenario, settings: SolverSettings) -> SolveReport:
    """Delay of the fixed co-located array: same NOMA bisection + AO, with
    the position sweep replaced by a steering-angle grid search."""
    _, gmat = mimo_steering_gains(scenario)

    def factory(order: DecodingOrder):
        cell = {"idx": None}

        def feasibility(d_t: float, warm: Optional[Allocation]):
            state = MimoSteeringState(scenario, gmat, cell["idx"])
            ok, betas, powers, state, diag = _noma_ao(
                scenario, order, d_t, state, settings)
            cell["idx"] = state.idx
            allocation = None
            if ok:
                allocation = Allocation(
                    beta=tuple(np.clip(betas, 0.0, 1.0)),
                    power_w=tuple(np.clip(powers, 0.0, None)),
                    layout=None, order=order, delay_s=d_t)
            return ok, allocation, diag

        return feasibility

    report = global_optimize_over_orders(scenario, settings,
                                         feasibility_factory=factory)
    return replace(report, meta={"scheme": "mimo"})


def pass_fixed_layout_delay(scenario: Scenario, settings: SolverSettings,
                            layout: PaLayout) -> SolveReport:
    """Pinching-antenna solve with the PA positions pinned (no sweep)."""

    def factory(order: DecodingOrder):
        def feasibility(d_t: float, warm: Optional[Allocation]):
            state = PassPositionState(layout, frozen=True)
            ok, betas, powers, state, diag = _noma_ao(
                scenario, order, d_t, state, settings)
            allocation = None
            if ok:
                allocation = Allocation(
                    beta=tuple(np.clip(betas, 0.0, 1.0)),
                    power_w=tuple(np.clip(powers, 0.0, None)),
                    layout=layout, order=order, delay_s=d_t)
            return ok, allocation, diag

        return feasibility

    return global_optimize_over_orders(scenario, settings,
                                       feasibility_factory=factory)


def _fdma_noise_w(scenario: Scenario) -> float:
    """Aggregate noise over one B/K sub-band (PSD scales with bandwidth)."""
    params = scenario.params
    psd_w = 10.0 ** ((params.noise_psd_dbm_per_hz - 30.0) / 10.0)
    return params.num_antennas * psd_w * params.bandwidth_hz / len(scenario.users)


def fdma_user_rate(scenario: Scenario, gain: float, power_w: float) -> float:
    """Interference-free rate over a B/K sub-band."""
    sub_band = scenario.params.bandwidth_hz / scenario.num_users
    return sub_band * math.log2(1.0 + power_w * gain / _fdma_noise_w(scenario))


def _fdma_beta_lp(scenario: Scenario, k: int, rate: float, lb: float,
                  d_t: float) -> Optional[float]:
    if lb > 1.0 + 1e-9:
        return None
    outcome = solve_lp(LpProblem(
        c=(1.0,), sense="max",
        a_ub=((1.0,),), b_ub=(d_t * rate / scenario.users[k].task_size_bits,),
        lower=(min(lb, 1.0),), upper=(1.0,)))
    return None if outcome.status is not LpStatus.OPTIMAL else outcome.x[0]


def _fdma_power_lp(scenario: Scenario, k: int, gain: float, beta: float,
                   cap: float, d_t: float) -> Optional[float]:
    sub_band = scenario.params.bandwidth_hz / scenario.num_users
    exponent = beta * scenario.users[k].task_size_bits / (sub_band * d_t)
    if exponent > MAX_RATE_EXPONENT:
        return None
    required = _fdma_noise_w(scenario) * (2.0 ** exponent - 1.0)
    if required <= 0.0:
        return 0.0
    # Row normalized by the requirement; raw received powers are ~1e-15 W.
    outcome = solve_lp(LpProblem(
        c=(1.0,), sense="min",
        a_ub=((-gain / required,),), b_ub=(-1.0,),
        lower=(0.0,), upper=(cap,)))
    return None if outcome.status is not LpStatus.OPTIMAL else outcome.x[0]


def _fdma_validate(scenario: Scenario, d_t: float, betas: np.ndarray,
                   powers: np.ndarray, gains: np.ndarray,
                   state: PassPositionState) -> bool:
    params = scenario.params
    rtol = CONSTRAINT_RTOL
    if not state.is_valid(scenario):
        return False
    if np.any(betas < -1e-9) or np.any(betas > 1 + 1e-9):
        return False
    if np.any(powers < -1e-12) or np.any(powers > params.max_transmit_power_w * (1 + rtol)):
        return False
    for k, u in enumerate(scenario.users):
        if betas[k] > 0:
            rate = fdma_user_rate(scenario, float(gains[k]), float(powers[k]))
            if rate <= 0 or betas[k] * u.task_size_bits / rate > d_t * (1 + rtol):
                return False
        cycles = (1.0 - betas[k]) * u.task_size_bits * u.cycles_per_bit
        if cycles / u.local_cpu_hz > d_t * (1 + rtol):
            return False
        e_loc = u.capacitance_coeff * cycles * u.local_cpu_hz ** 2
        if e_loc + d_t * powers[k] > params.energy_budget_j * (1 + rtol):
            return False
    return True


def _fdma_resolve(scenario: Scenario, d_t: float, gains: np.ndarray,
                  powers: np.ndarray, lbs: np.ndarray
                  ) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """One decoupled beta + power LP pass at fixed gains."""
    new_betas = np.empty(scenario.num_users)
    for k in range(scenario.num_users):
        rate = fdma_user_rate(scenario, float(gains[k]), float(powers[k]))
        b = _fdma_beta_lp(scenario, k, rate, float(lbs[k]), d_t)
        if b is None:
            return None
        new_betas[k] = b
    caps = _power_caps(scenario, new_betas, d_t)
    if caps is None:
        return None
    new_powers = np.empty(scenario.num_users)
    for k in range(scenario.num_users):
        p = _fdma_power_lp(scenario, k, float(gains[k]), float(new_betas[k]),
                           float(caps[k]), d_t)
        if p is None:
            return None
        new_powers[k] = p
    return new_betas, new_powers


def _fdma_feasibility(scenario: Scenario, settings: SolverSettings):
    params = scenario.params

    def feasibility(d_t: float, warm: Optional[Allocation]):
        # Layout carries across outer iterations; powers restart at P_max.
        if warm is not None and warm.layout is not None:
            state = PassPositionState(warm.layout)
        else:
            state = PassPositionState(uniform_layout(scenario))
        powers = np.full(scenario.num_users, params.max_transmit_power_w)
        betas = np.minimum(_beta_lower_bounds(scenario, powers, d_t), 1.0)

        order = DecodingOrder.identity(scenario.num_users)  # layout sweep only
        reason = None
        inner = 0
        # Last iterate validated against the gains its LPs were solved at;
        # a later round can fail after the sweep moves the gains away from
        # what the stale minimized powers support.
        witness = None
        for i in range(settings.max_inner_iters):
            inner = i + 1
            gains = state.gains(scenario)
            lbs = _beta_lower_bounds(scenario, powers, d_t)
            new_betas = np.empty_like(betas)
            for k in range(scenario.num_users):
                rate = fdma_user_rate(scenario, float(gains[k]), float(powers[k]))
                b = _fdma_beta_lp(scenario, k, rate, float(lbs[k]), d_t)
                if b is None:
                    reason = "beta-lp"
                    break
                new_betas[k] = b
            new_powers = np.empty_like(powers)
            if not reason:
                caps = _power_caps(scenario, new_betas, d_t)
                if caps is None:
                    reason = "power-lp"
            if not reason:
                for k in range(scenario.num_users):
                    p = _fdma_power_lp(scenario, k, float(gains[k]),
                                       float(new_betas[k]), float(caps[k]), d_t)
                    if p is None:
                        reason = "power-lp"
                        break
                    new_powers[k] = p
            if reason:
                # No per-user solution at the current gains; move the
                # antennas at the current powers and retry before giving
                # up on this delay.
                moved = state.sweep(scenario, powers, order, settings)
                if _rel_change(moved.positions(), state.positions()) < settings.epsilon:
                    break
                state = moved
                reason = None
                continue
            if _fdma_validate(scenario, d_t, new_betas, new_powers, gains, state):
                witness = (new_betas.copy(), new_powers.copy(), state)
            new_state = state.sweep(scenario, new_powers, order, settings)

            converged = (
                _rel_change(new_betas, betas) < settings.epsilon
                and _rel_change(new_powers, powers) < settings.epsilon
                and _rel_change(new_state.positions(), state.positions()) < settings.epsilon
            )
            betas, powers, state = new_betas, new_powers, new_state
            if converged:
                break

        if reason not in ("beta-lp", "power-lp"):
            # Re-solve the per-user LPs at the final positions so the rate
            # constraints are evaluated against the gains they were built on.
            gains = state.gains(scenario)
            lbs = _beta_lower_bounds(scenario, powers, d_t)
            final = _fdma_resolve(scenario, d_t, gains, powers, lbs)
            if final is not None:
                betas, powers = final

        feasible = _fdma_validate(scenario, d_t, betas, powers,
                                  state.gains(scenario), state)
        if not feasible and witness is not None:
            betas, powers, state = witness
            feasible, reason = True, None
        diag = {"inner_iters": inner, "reason": reason if not feasible else None}
        allocation = None
        if feasible:
            allocation = Allocation(
                beta=tuple(np.clip(betas, 0.0, 1.0)),
                power_w=tuple(np.clip(powers, 0.0, None)),
                layout=state.report_layout(),
                order=order, delay_s=d_t)
        return feasible, allocation, diag

    return feasibility


def fdma_baseline_delay(scenario: Scenario, settings: SolverSettings) -> SolveReport:
    """Delay of the FDMA pinching-antenna system: orthogonal B/K sub-bands,
    decoupled per-user beta/power subproblems, shared PA-position sweep."""
    order = DecodingOrder.identity(scenario.num_users)
    report = bisection_minimize(scenario, order, settings,
                                feasibility=_fdma_feasibility(scenario, settings))
    return replace(report, meta={"scheme": "fdma"})
