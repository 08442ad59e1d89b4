"""Min-max delay solver: outer bisection on the common task delay, inner
alternating optimization over offload ratios (LP), transmit powers (LP) and
pinching-antenna positions (element-wise grid search), plus exhaustive
enumeration of SIC decoding orders.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .lp import LpProblem, LpStatus, solve_lp
from .model import (
    Allocation,
    DecodingOrder,
    PaLayout,
    Scenario,
    derive_constants,
    effective_gains,
    gains_ordered,
)

CONSTRAINT_RTOL = 1e-6
MAX_RATE_EXPONENT = 600.0  # 2^x overflows well before this matters physically


class NoFeasibleDelayError(RuntimeError):
    """No task delay is feasible even after expanding the search bracket."""


class OrderEnumerationError(ValueError):
    """K! decoding orders are too many to enumerate."""


class LayoutCorruptionError(RuntimeError):
    """An element-wise position interval is empty; spacing invariants broke."""


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances and search controls for the bisection + AO solver."""

    epsilon: float = 1e-4
    epsilon_x: float = 1e-4
    max_inner_iters: int = 20
    coarse_grid_step_m: Optional[float] = None  # default: wavelength / 8
    refine_factor: float = 10.0
    dt_min_s: float = 1e-6
    dt_max_expansion_factor: float = 2.0
    max_bracket_expansions: int = 20

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon < 1.0 and 0.0 < self.epsilon_x < 1.0):
            raise ValueError("epsilon and epsilon_x must lie in (0, 1)")
        if self.max_inner_iters < 1:
            raise ValueError("max_inner_iters must be >= 1")
        if self.coarse_grid_step_m is not None and self.coarse_grid_step_m <= 0:
            raise ValueError("coarse grid step must be positive")


@dataclass(frozen=True)
class TraceEntry:
    index: int
    phase: str  # "bracket" | "bisect"
    d_t_s: float
    feasible: bool
    inner_iters: int
    reason: Optional[str]
    bracket_lo_s: float
    bracket_hi_s: float


@dataclass(frozen=True)
class SolveReport:
    allocation: Optional[Allocation]
    delay_s: float
    order: DecodingOrder
    trace: tuple[TraceEntry, ...]
    outer_iters: int
    wall_s: float
    meta: dict = field(default_factory=dict)


def _noise_w(scenario: Scenario) -> float:
    """Aggregate noise power N * sigma^2 seen by the SIC receiver."""
    return scenario.params.num_antennas * derive_constants(scenario.params).noise_power_w


def _coarse_step(scenario: Scenario, settings: SolverSettings) -> float:
    if settings.coarse_grid_step_m is not None:
        return settings.coarse_grid_step_m
    # The position objective oscillates roughly at the guided wavelength;
    # an eighth of the carrier wavelength samples every lobe.
    return derive_constants(scenario.params).wavelength_m / 8.0


def _by_rank(order: DecodingOrder) -> list[int]:
    """User indices sorted by rank ascending (last decoded first)."""
    return sorted(range(order.num_users), key=lambda k: order.rank[k])


def _prefix_bits(scenario: Scenario, betas: Sequence[float],
                 order: DecodingOrder) -> np.ndarray:
    """Cumulative offloaded bits over users by ascending rank, shape (K,)."""
    idx = _by_rank(order)
    per_user = np.array([betas[k] * scenario.users[k].task_size_bits for k in idx])
    return np.cumsum(per_user)


def _prefix_rates(scenario: Scenario, gains: np.ndarray, powers: Sequence[float],
                  order: DecodingOrder) -> np.ndarray:
    """Cumulative sum rates B log2(1 + prefix received power / noise), (K,)."""
    idx = _by_rank(order)
    received = np.cumsum(np.array([powers[k] * gains[k] for k in idx]))
    noise = _noise_w(scenario)
    return scenario.params.bandwidth_hz * np.log2(1.0 + received / noise)


def _beta_lower_bounds(scenario: Scenario, powers: Sequence[float],
                       d_t: float) -> np.ndarray:
    """Per-user lower bounds on beta from local-time and energy budgets."""
    e_max = scenario.params.energy_budget_j
    out = np.zeros(scenario.num_users)
    for k, u in enumerate(scenario.users):
        cycles = u.task_size_bits * u.cycles_per_bit
        time_floor = 1.0 - d_t * u.local_cpu_hz / cycles
        energy_full = u.capacitance_coeff * cycles * u.local_cpu_hz ** 2
        energy_floor = 1.0 - (e_max - d_t * powers[k]) / energy_full
        out[k] = max(0.0, time_floor, energy_floor)
    return out


def solve_beta_subproblem(scenario: Scenario, layout: PaLayout,
                          powers: Sequence[float], order: DecodingOrder,
                          d_t: float) -> Optional[tuple[float, ...]]:
    """Maximize the total offloaded fraction at fixed powers and layout.

    Returns None when the cumulative-rate rows and the per-user lower
    bounds cannot be met together, which marks d_t infeasible.
    """
    gains = effective_gains(scenario, layout)
    betas = _beta_lp(scenario, gains, powers, order, d_t)
    return None if betas is None else tuple(float(b) for b in betas)


def _beta_lp(scenario: Scenario, gains: np.ndarray, powers: Sequence[float],
             order: DecodingOrder, d_t: float) -> Optional[np.ndarray]:
    k_users = scenario.num_users
    lb = _beta_lower_bounds(scenario, powers, d_t)
    if np.any(lb > 1.0 + 1e-9):
        return None
    lb = np.minimum(lb, 1.0)

    rates = _prefix_rates(scenario, gains, powers, order)
    idx = _by_rank(order)
    rows = []
    rhs = []
    for m in range(1, k_users + 1):
        # Rows are normalized by the largest task size so the LP tolerances
        # act at unit scale rather than at ~1e6 bits.
        scale = max(scenario.users[k].task_size_bits for k in idx[:m])
        row = [0.0] * k_users
        for k in idx[:m]:
            row[k] = scenario.users[k].task_size_bits / scale
        rows.append(tuple(row))
        rhs.append(d_t * rates[m - 1] / scale)

    outcome = solve_lp(LpProblem(
        c=tuple([1.0] * k_users), sense="max",
        a_ub=tuple(rows), b_ub=tuple(rhs),
        lower=tuple(lb), upper=tuple([1.0] * k_users)))
    if outcome.status is not LpStatus.OPTIMAL:
        return None
    return np.asarray(outcome.x)


def solve_power_subproblem(scenario: Scenario, layout: PaLayout,
                           betas: Sequence[float], order: DecodingOrder,
                           d_t: float) -> Optional[tuple[float, ...]]:
    """Minimize total transmit power at fixed offload fractions and layout."""
    gains = effective_gains(scenario, layout)
    powers = _power_lp(scenario, gains, betas, order, d_t)
    return None if powers is None else tuple(float(p) for p in powers)


def _power_requirements(scenario: Scenario, betas: Sequence[float],
                        order: DecodingOrder, d_t: float) -> Optional[np.ndarray]:
    """Required cumulative received powers per prefix; None on overflow."""
    bits = _prefix_bits(scenario, betas, order)
    exponents = bits / (scenario.params.bandwidth_hz * d_t)
    if np.any(exponents > MAX_RATE_EXPONENT):
        return None
    return _noise_w(scenario) * (np.exp2(exponents) - 1.0)


def _power_caps(scenario: Scenario, betas: Sequence[float],
                d_t: float) -> Optional[np.ndarray]:
    e_max = scenario.params.energy_budget_j
    caps = np.empty(scenario.num_users)
    for k, u in enumerate(scenario.users):
        cycles = (1.0 - betas[k]) * u.task_size_bits * u.cycles_per_bit
        e_loc = u.capacitance_coeff * cycles * u.local_cpu_hz ** 2
        cap = (e_max - e_loc) / d_t
        if cap < -1e-12:
            return None
        caps[k] = min(scenario.params.max_transmit_power_w, max(cap, 0.0))
    return caps


def _power_lp(scenario: Scenario, gains: np.ndarray, betas: Sequence[float],
              order: DecodingOrder, d_t: float) -> Optional[np.ndarray]:
    k_users = scenario.num_users
    caps = _power_caps(scenario, betas, d_t)
    if caps is None:
        return None
    required = _power_requirements(scenario, betas, order, d_t)
    if required is None:
        return None

    idx = _by_rank(order)
    rows = []
    rhs = []
    for m in range(1, k_users + 1):
        req = float(required[m - 1])
        if req <= 0.0:
            continue  # zero offloaded bits in this prefix: row is vacuous
        # Normalize each row by its requirement so the LP's absolute
        # feasibility tolerance acts relative to the rate target; raw
        # received powers sit around 1e-15 W and would drown in it.
        row = [0.0] * k_users
        for k in idx[:m]:
            row[k] = -float(gains[k]) / req
        rows.append(tuple(row))
        rhs.append(-1.0)

    outcome = solve_lp(LpProblem(
        c=tuple([1.0] * k_users), sense="min",
        a_ub=tuple(rows), b_ub=tuple(rhs),
        lower=tuple([0.0] * k_users), upper=tuple(float(c) for c in caps)))
    if outcome.status is not LpStatus.OPTIMAL:
        return None
    return np.asarray(outcome.x)


def _candidate_user_gains(scenario: Scenario, fixed_sums: np.ndarray,
                          candidates: np.ndarray) -> np.ndarray:
    """Per-user effective gains |v_k|^2, shape (K, C), with one PA swept
    over candidate positions and the others held fixed."""
    consts = derive_constants(scenario.params)
    d = scenario.params.antenna_height_m
    ux = np.array([u.x_m for u in scenario.users])[:, None]
    uy = np.array([u.y_m for u in scenario.users])[:, None]
    r = np.sqrt((ux - candidates[None, :]) ** 2 + uy ** 2 + d * d)
    phase = (2.0 * math.pi / consts.wavelength_m) * r \
        + (2.0 * math.pi / consts.guided_wavelength_m) * candidates[None, :]
    phase = np.mod(phase, 2.0 * math.pi)  # keep trig args small (exact fmod)
    v = fixed_sums[:, None] + (consts.eta_m / r) * np.exp(-1j * phase)
    return np.abs(v) ** 2


def _sic_order_mask(gains_kc: np.ndarray, order: DecodingOrder) -> np.ndarray:
    """Boolean mask over candidates whose per-user gains keep the SIC
    decoding-order constraint (earlier-decoded gains >= later-decoded)."""
    by_rank_desc = sorted(range(gains_kc.shape[0]), key=lambda k: -order.rank[k])
    g = gains_kc[by_rank_desc]
    if g.shape[0] < 2:
        return np.ones(g.shape[1], dtype=bool)
    return np.all(g[:-1] >= g[1:] * (1.0 - 1e-12), axis=0)


def _best_candidate(cands: np.ndarray, vals: np.ndarray,
                    mask: np.ndarray) -> float:
    """Objective argmax restricted to SIC-admissible candidates, falling
    back to the unconstrained argmax when none are admissible.  Ties
    resolve to the earliest candidate (the incumbent comes first)."""
    if mask.any():
        idx = np.flatnonzero(mask)
        return float(cands[idx[int(np.argmax(vals[idx]))]])
    return float(cands[int(np.argmax(vals))])


def _fixed_sums_without(scenario: Scenario, layout: PaLayout, slot: int) -> np.ndarray:
    """Complex channel sums over all PAs except the swept one."""
    consts = derive_constants(scenario.params)
    d = scenario.params.antenna_height_m
    xs = np.asarray(layout.x_positions_m)
    keep = np.ones(len(xs), dtype=bool)
    keep[slot] = False
    xs = xs[keep]
    if xs.size == 0:
        return np.zeros(scenario.num_users, dtype=complex)
    ux = np.array([u.x_m for u in scenario.users])[:, None]
    uy = np.array([u.y_m for u in scenario.users])[:, None]
    r = np.sqrt((ux - xs[None, :]) ** 2 + uy ** 2 + d * d)
    phase = (2.0 * math.pi / consts.wavelength_m) * r \
        + (2.0 * math.pi / consts.guided_wavelength_m) * xs[None, :]
    phase = np.mod(phase, 2.0 * math.pi)  # keep trig args small (exact fmod)
    return np.sum((consts.eta_m / r) * np.exp(-1j * phase), axis=1)


def optimize_pa_position_elementwise(scenario: Scenario, layout: PaLayout,
                                     powers: Sequence[float], order: DecodingOrder,
                                     n: int, settings: SolverSettings) -> float:
    """Best position for PA ``n`` (0-based) with all other PAs fixed.

    Two-stage bounded grid search: a coarse sweep of the whole admissible
    interval followed by iterated refinement around the best point down to
    ``epsilon_x``. Candidates that break the SIC gain-ordering constraint
    for ``order`` are skipped while any admissible candidate exists. The
    incumbent position is always a candidate, so the weighted-gain
    objective never degrades from an admissible incumbent.
    """
    params = scenario.params
    xs = layout.x_positions_m
    lo = 0.0 if n == 0 else xs[n - 1] + params.min_antenna_spacing_m
    hi = params.waveguide_length_m if n == len(xs) - 1 \
        else xs[n + 1] - params.min_antenna_spacing_m
    lo = max(lo, 0.0)
    hi = min(hi, params.waveguide_length_m)
    if hi < lo - 1e-12:
        raise LayoutCorruptionError(
            f"empty position interval for antenna {n}: [{lo}, {hi}]")
    hi = max(hi, lo)

    pw = np.asarray(powers, dtype=float)
    fixed = _fixed_sums_without(scenario, layout, n)
    incumbent = min(max(xs[n], lo), hi)

    step = _coarse_step(scenario, settings)
    grid = np.arange(lo, hi, step)
    cands = np.concatenate(([incumbent], grid, [hi]))
    gains = _candidate_user_gains(scenario, fixed, cands)
    best = _best_candidate(cands, pw @ gains, _sic_order_mask(gains, order))

    while step > settings.epsilon_x:
        window = step
        step = step / settings.refine_factor
        grid = np.arange(max(lo, best - window), min(hi, best + window), step)
        cands = np.concatenate(([incumbent, best], grid, [min(hi, best + window)]))
        gains = _candidate_user_gains(scenario, fixed, cands)
        best = _best_candidate(cands, pw @ gains, _sic_order_mask(gains, order))
    return best


class PassPositionState:
    """Pinching-antenna positions as the AO position block."""

    def __init__(self, layout: PaLayout, frozen: bool = False) -> None:
        self.layout = layout
        self.frozen = frozen

    def gains(self, scenario: Scenario) -> np.ndarray:
        return effective_gains(scenario, self.layout)

    def positions(self) -> np.ndarray:
        return np.asarray(self.layout.x_positions_m)

    def sweep(self, scenario: Scenario, powers: Sequence[float],
              order: DecodingOrder, settings: SolverSettings) -> "PassPositionState":
        if self.frozen:
            return self
        xs = list(self.layout.x_positions_m)
        for n in range(len(xs)):
            xs[n] = optimize_pa_position_elementwise(
                scenario, PaLayout(tuple(xs)), powers, order, n, settings)
        return PassPositionState(PaLayout(tuple(xs)))

    def is_valid(self, scenario: Scenario) -> bool:
        return self.layout.validate(scenario.params)

    def report_layout(self) -> Optional[PaLayout]:
        return self.layout


def uniform_layout(scenario: Scenario) -> PaLayout:
    """Uniform spread L*(n+1/2)/N projected onto the feasible spacing set."""
    params = scenario.params
    n = params.num_antennas
    xs = [params.waveguide_length_m * (i + 0.5) / n for i in range(n)]
    return PaLayout(tuple(project_spacing(xs, params.min_antenna_spacing_m,
                                          params.waveguide_length_m)))


def project_spacing(xs: Sequence[float], delta: float, length: float) -> list[float]:
    """Project sorted positions onto {0 <= x_1, x_{n+1}-x_n >= delta, x_N <= L}."""
    out = list(xs)
    for i in range(len(out)):
        lo = 0.0 if i == 0 else out[i - 1] + delta
        out[i] = max(out[i], lo)
    for i in reversed(range(len(out))):
        hi = length if i == len(out) - 1 else out[i + 1] - delta
        out[i] = min(out[i], hi)
    return out


def _rel_change(new: np.ndarray, old: np.ndarray) -> float:
    denom = float(np.linalg.norm(old))
    if denom == 0.0:
        return 0.0 if float(np.linalg.norm(new)) == 0.0 else math.inf
    return float(np.linalg.norm(new - old)) / denom


def validate_allocation(scenario: Scenario, order: DecodingOrder, d_t: float,
                        betas: np.ndarray, powers: np.ndarray,
                        gains: np.ndarray, state=None,
                        rtol: float = CONSTRAINT_RTOL) -> tuple[bool, Optional[str]]:
    """Check every constraint of the fixed-delay feasibility problem."""
    params = scenario.params
    if np.any(betas < -1e-9) or np.any(betas > 1.0 + 1e-9):
        return False, "beta-box"
    if np.any(powers < -1e-12) or np.any(powers > params.max_transmit_power_w * (1 + rtol)):
        return False, "power-box"
    if state is not None and not state.is_valid(scenario):
        return False, "layout"
    if not gains_ordered(gains, order):
        return False, "sic-order"

    bits = _prefix_bits(scenario, betas, order)
    rates = _prefix_rates(scenario, gains, powers, order)
    for m in range(scenario.num_users):
        if bits[m] <= 0.0:
            continue
        if rates[m] <= 0.0 or bits[m] / rates[m] > d_t * (1 + rtol):
            return False, "offload-time"

    e_max = params.energy_budget_j
    for k, u in enumerate(scenario.users):
        cycles = (1.0 - betas[k]) * u.task_size_bits * u.cycles_per_bit
        if cycles / u.local_cpu_hz > d_t * (1 + rtol):
            return False, "local-time"
        e_loc = u.capacitance_coeff * cycles * u.local_cpu_hz ** 2
        if e_loc + d_t * powers[k] > e_max * (1 + rtol):
            return False, "energy"
    return True, None


def _noma_ao(scenario: Scenario, order: DecodingOrder, d_t: float,
             state, settings: SolverSettings,
             betas0: Optional[np.ndarray] = None,
             powers0: Optional[np.ndarray] = None):
    """Inner AO loop shared by the pinching-antenna solver and the MIMO
    baseline; ``state`` supplies the gains and the position-block sweep.

    Returns (feasible, betas, powers, state, diagnostics).
    """
    params = scenario.params
    powers = powers0 if powers0 is not None else \
        np.full(scenario.num_users, params.max_transmit_power_w)
    betas = betas0 if betas0 is not None else \
        np.minimum(_beta_lower_bounds(scenario, powers, d_t), 1.0)

    reason = None
    inner = 0
    # Last iterate whose offload splits and powers were solved at the very
    # gains they are validated against.  The sweep that follows each LP pair
    # can push the gains somewhere the stale powers no longer support, so a
    # later round may fail its LPs even though this round's iterate is a
    # perfectly good witness of feasibility.
    witness = None
    for i in range(settings.max_inner_iters):
        inner = i + 1
        gains = state.gains(scenario)
        new_betas = _beta_lp(scenario, gains, powers, order, d_t)
        if new_betas is None:
            reason = "beta-lp"
        else:
            new_powers = _power_lp(scenario, gains, new_betas, order, d_t)
            if new_powers is None:
                reason = "power-lp"
        if reason is not None:
            # The split/power subproblem has no solution at the current
            # gains; move the antennas toward the users at the current
            # powers and retry before giving up on this delay.
            moved = state.sweep(scenario, powers, order, settings)
            if _rel_change(moved.positions(), state.positions()) < settings.epsilon:
                break
            state = moved
            reason = None
            continue
        ok, _ = validate_allocation(scenario, order, d_t, new_betas,
                                    new_powers, gains, state)
        if ok:
            witness = (new_betas.copy(), new_powers.copy(), state)
        new_state = state.sweep(scenario, new_powers, order, settings)

        converged = (
            _rel_change(new_betas, betas) < settings.epsilon
            and _rel_change(new_powers, powers) < settings.epsilon
            and _rel_change(new_state.positions(), state.positions()) < settings.epsilon
        )
        betas, powers, state = new_betas, new_powers, new_state
        if not gains_ordered(state.gains(scenario), order):
            # The sweep could not keep the SIC gain ordering for this
            # decoding order; a different order covers this layout region.
            reason = "position-validation"
            break
        if converged:
            break

    if reason not in ("beta-lp", "power-lp"):
        # The sweep moved the gains after the LPs were solved, so the rate
        # rows at the final iterate are stale; one more pair of LP solves at
        # the final positions makes the iterate self-consistent.
        gains = state.gains(scenario)
        final_betas = _beta_lp(scenario, gains, powers, order, d_t)
        if final_betas is None:
            reason = "beta-lp"
        else:
            final_powers = _power_lp(scenario, gains, final_betas, order, d_t)
            if final_powers is None:
                reason = "power-lp"
            else:
                betas, powers = final_betas, final_powers

    feasible, fail = validate_allocation(
        scenario, order, d_t, np.asarray(betas), np.asarray(powers),
        state.gains(scenario), state)
    if not feasible and witness is not None:
        betas, powers, state = witness
        feasible, fail, reason = True, None, None
    diag = {"inner_iters": inner, "reason": reason if not feasible else None}
    if not feasible and diag["reason"] is None:
        diag["reason"] = fail
    return feasible, np.asarray(betas), np.asarray(powers), state, diag


def _prefix_received(gains: np.ndarray, powers: np.ndarray,
                     order: DecodingOrder) -> np.ndarray:
    idx = _by_rank(order)
    return np.cumsum(np.array([powers[k] * gains[k] for k in idx]))


def ao_feasibility_check(scenario: Scenario, order: DecodingOrder, d_t: float,
                         warm_start: Optional[Allocation],
                         settings: SolverSettings,
                         ) -> tuple[bool, Optional[Allocation], dict]:
    """Feasibility of one delay candidate for the pinching-antenna system."""
    # Only the layout is carried across outer iterations: powers restart at
    # P_max (minimized powers from a larger delay would starve the rate rows
    # of the first beta LP) and betas at their budget floors.
    if warm_start is not None and warm_start.layout is not None:
        state = PassPositionState(warm_start.layout)
    else:
        state = PassPositionState(uniform_layout(scenario))
    feasible, betas, powers, state, diag = _noma_ao(
        scenario, order, d_t, state, settings)
    allocation = None
    if feasible:
        allocation = Allocation(
            beta=tuple(np.clip(betas, 0.0, 1.0)),
            power_w=tuple(np.clip(powers, 0.0, None)),
            layout=state.report_layout(), order=order, delay_s=d_t)
    return feasible, allocation, diag


FeasibilityFn = Callable[[float, Optional[Allocation]],
                         tuple[bool, Optional[Allocation], dict]]


def bisection_minimize(scenario: Scenario, order: DecodingOrder,
                       settings: SolverSettings,
                       feasibility: Optional[FeasibilityFn] = None,
                       bracket: Optional[tuple[float, float]] = None,
                       ) -> SolveReport:
    """Binary-search the smallest feasible common delay.

    A feasible probe tightens the upper end of the bracket and stores its
    allocation; an infeasible probe raises the lower end. The last stored
    feasible probe is returned.
    """
    t0 = time.perf_counter()
    if feasibility is None:
        feasibility = lambda d_t, warm: ao_feasibility_check(
            scenario, order, d_t, warm, settings)

    trace: list[TraceEntry] = []

    def probe(d_t: float, warm, phase: str, lo: float, hi: float):
        feas, alloc, diag = feasibility(d_t, warm)
        trace.append(TraceEntry(
            index=len(trace), phase=phase, d_t_s=d_t, feasible=feas,
            inner_iters=int(diag.get("inner_iters", 0)),
            reason=diag.get("reason"), bracket_lo_s=lo, bracket_hi_s=hi))
        return feas, alloc

    if bracket is not None:
        lo, hi = bracket
        feas, alloc = probe(hi, None, "bracket", lo, hi)
        if not feas:
            raise NoFeasibleDelayError("no feasible delay at the bracket top")
    else:
        lo = settings.dt_min_s
        hi = max(u.full_local_time_s() for u in scenario.users)
        feas, alloc = probe(hi, None, "bracket", lo, hi)
        expansions = 0
        while not feas:
            if expansions >= settings.max_bracket_expansions:
                raise NoFeasibleDelayError(
                    "no feasible delay within the expanded bracket")
            lo = hi
            hi *= settings.dt_max_expansion_factor
            expansions += 1
            feas, alloc = probe(hi, None, "bracket", lo, hi)

    best_alloc = alloc
    best_dt = hi
    warm = alloc
    while (hi - lo) / hi > settings.epsilon:
        mid = 0.5 * (lo + hi)
        feas, alloc = probe(mid, warm, "bisect", lo, hi)
        if feas:
            hi = mid
            best_alloc, best_dt, warm = alloc, mid, alloc
        else:
            lo = mid

    return SolveReport(
        allocation=best_alloc, delay_s=best_dt, order=order,
        trace=tuple(trace), outer_iters=len(trace),
        wall_s=time.perf_counter() - t0)


def global_optimize_over_orders(scenario: Scenario, settings: SolverSettings,
                                feasibility_factory: Optional[
                                    Callable[[DecodingOrder], FeasibilityFn]] = None,
                                ) -> SolveReport:
    """Run the bisection per SIC decoding order and keep the smallest delay.

    Ties break toward the lexicographically-first rank permutation.
    """
    k = scenario.num_users
    if k > 6:
        raise OrderEnumerationError(
            f"order enumeration too large for K={k}; pass an explicit order")
    best: Optional[SolveReport] = None
    t0 = time.perf_counter()
    for perm in itertools.permutations(range(1, k + 1)):
        order = DecodingOrder(tuple(perm))
        feas = feasibility_factory(order) if feasibility_factory else None
        try:
            report = bisection_minimize(scenario, order, settings, feasibility=feas)
        except NoFeasibleDelayError:
            continue
        if best is None or report.delay_s < best.delay_s:
            best = report
    if best is None:
        raise NoFeasibleDelayError("no feasible delay under any decoding order")
    return replace(best, wall_s=time.perf_counter() - t0)
