"""Physical, communication and computation model of the pinching-antenna
NOMA-MEC uplink.

Everything here is a pure function of immutable value objects: a waveguide
with N movable pinching antennas (PAs) serves K single-antenna users; each
user offloads a fraction of its task over an uplink NOMA channel with
successive interference cancellation (SIC) and computes the rest locally.

Units are SI throughout (meters, watts, bits, seconds). dB/dBm conversions
happen at the config/CLI boundary, never inside this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

SPEED_OF_LIGHT_M_PER_S = 299792458.0


class ZeroRateOffloadError(ValueError):
    """A positive task fraction is offloaded over a zero-rate link."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class SystemParams:
    """Physical and budget constants shared by every user in a scenario."""

    carrier_frequency_hz: float
    bandwidth_hz: float
    noise_psd_dbm_per_hz: float
    antenna_height_m: float
    waveguide_length_m: float
    num_antennas: int
    min_antenna_spacing_m: float
    max_transmit_power_w: float
    energy_budget_j: float
    effective_refractive_index: float = 1.4
    speed_of_light_m_per_s: float = SPEED_OF_LIGHT_M_PER_S

    def __post_init__(self) -> None:
        _require(self.carrier_frequency_hz > 0, "carrier frequency must be positive")
        _require(self.bandwidth_hz > 0, "bandwidth must be positive")
        _require(self.antenna_height_m > 0, "antenna height must be positive")
        _require(self.waveguide_length_m > 0, "waveguide length must be positive")
        _require(self.num_antennas >= 1, "need at least one antenna")
        _require(self.min_antenna_spacing_m >= 0, "spacing must be nonnegative")
        _require(self.max_transmit_power_w > 0, "max power must be positive")
        _require(self.energy_budget_j > 0, "energy budget must be positive")
        _require(self.effective_refractive_index > 0, "n_eff must be positive")
        _require(
            self.min_antenna_spacing_m * (self.num_antennas - 1)
            <= self.waveguide_length_m,
            "antenna layout infeasible: spacing * (N-1) exceeds waveguide length",
        )


@dataclass(frozen=True)
class DerivedConstants:
    """Constants derived from :class:`SystemParams` (free-space amplitude
    factor, wavelengths, integrated noise power)."""

    eta_m: float
    wavelength_m: float
    guided_wavelength_m: float
    noise_power_w: float


def derive_constants(params: SystemParams) -> DerivedConstants:
    """Compute eta = c/(4 pi f_c), the carrier and guided wavelengths, and
    the noise power integrated over the full bandwidth."""
    c = params.speed_of_light_m_per_s
    wavelength = c / params.carrier_frequency_hz
    return DerivedConstants(
        eta_m=c / (4.0 * math.pi * params.carrier_frequency_hz),
        wavelength_m=wavelength,
        guided_wavelength_m=wavelength / params.effective_refractive_index,
        noise_power_w=10.0 ** ((params.noise_psd_dbm_per_hz - 30.0) / 10.0)
        * params.bandwidth_hz,
    )


@dataclass(frozen=True)
class UserTerminal:
    """One single-antenna user: planar position plus compute profile."""

    x_m: float
    y_m: float
    task_size_bits: float
    cycles_per_bit: float
    local_cpu_hz: float
    capacitance_coeff: float

    def __post_init__(self) -> None:
        _require(self.task_size_bits > 0, "task size must be positive")
        _require(self.cycles_per_bit > 0, "cycles per bit must be positive")
        _require(self.local_cpu_hz > 0, "local CPU frequency must be positive")
        _require(self.capacitance_coeff > 0, "capacitance coefficient must be positive")

    def full_local_time_s(self) -> float:
        return self.task_size_bits * self.cycles_per_bit / self.local_cpu_hz


@dataclass(frozen=True)
class Scenario:
    """A solvable problem instance: system constants plus K users."""

    params: SystemParams
    users: tuple[UserTerminal, ...]

    def __post_init__(self) -> None:
        _require(len(self.users) >= 1, "need at least one user")
        side = self.params.waveguide_length_m
        for u in self.users:
            _require(0.0 <= u.x_m <= side and 0.0 <= u.y_m <= side,
                     "user outside the service region")

    @property
    def num_users(self) -> int:
        return len(self.users)


@dataclass(frozen=True)
class PaLayout:
    """Ordered PA x-coordinates along the waveguide (feed point at x = 0)."""

    x_positions_m: tuple[float, ...]

    def __post_init__(self) -> None:
        xs = self.x_positions_m
        _require(len(xs) >= 1, "layout needs at least one antenna")

    def validate(self, params: SystemParams, tol: float = 1e-9) -> bool:
        """True iff the layout lies in the feasible set: inside [0, L] with
        pairwise spacing >= Delta."""
        xs = self.x_positions_m
        if len(xs) != params.num_antennas:
            return False
        if xs[0] < -tol or xs[-1] > params.waveguide_length_m + tol:
            return False
        return all(b - a >= params.min_antenna_spacing_m - tol
                   for a, b in zip(xs, xs[1:]))


@dataclass(frozen=True)
class DecodingOrder:
    """SIC decoding permutation.

    ``rank[k]`` is pi(k) for 0-based user index k; decoding proceeds from
    rank K down to rank 1, so a user with a larger rank is decoded earlier
    and users j with rank[j] < rank[k] remain as interference for user k.
    """

    rank: tuple[int, ...]

    def __post_init__(self) -> None:
        k = len(self.rank)
        _require(sorted(self.rank) == list(range(1, k + 1)),
                 "rank must be a permutation of 1..K")

    @property
    def num_users(self) -> int:
        return len(self.rank)

    def prefix_users(self, m: int) -> list[int]:
        """User indices with rank <= m (the m last-decoded users)."""
        return [k for k, r in enumerate(self.rank) if r <= m]

    @staticmethod
    def identity(k: int) -> "DecodingOrder":
        return DecodingOrder(tuple(range(1, k + 1)))


@dataclass(frozen=True)
class Allocation:
    """Joint decision variables plus the delay they achieve."""

    beta: tuple[float, ...]
    power_w: tuple[float, ...]
    layout: Optional[PaLayout]
    order: DecodingOrder
    delay_s: float

    def __post_init__(self) -> None:
        tol = 1e-9
        _require(all(-tol <= b <= 1.0 + tol for b in self.beta),
                 "offload fractions must lie in [0, 1]")
        _require(all(p >= -tol for p in self.power_w), "powers must be nonnegative")
        _require(self.delay_s > 0, "delay must be positive")


def user_pa_distance(user: UserTerminal, pa_x_m: float, antenna_height_m: float) -> float:
    """Euclidean distance from a user at (x_u, y_u, 0) to a PA at (pa_x, 0, d)."""
    return math.sqrt((user.x_m - pa_x_m) ** 2 + user.y_m ** 2 + antenna_height_m ** 2)


def channel_amplitudes(scenario: Scenario, layout: PaLayout) -> np.ndarray:
    """Complex per-user channel sums v_k: coherent sum over PAs of the
    free-space amplitude with free-space plus in-waveguide phase.

    Returns a complex array of shape (K,).
    """
    consts = derive_constants(scenario.params)
    d = scenario.params.antenna_height_m
    xs = np.asarray(layout.x_positions_m)                      # (N,)
    ux = np.array([u.x_m for u in scenario.users])             # (K,)
    uy = np.array([u.y_m for u in scenario.users])
    r = np.sqrt((ux[:, None] - xs[None, :]) ** 2 + uy[:, None] ** 2 + d * d)
    phase = (2.0 * math.pi / consts.wavelength_m) * r \
        + (2.0 * math.pi / consts.guided_wavelength_m) * xs[None, :]
    # phases run to thousands of radians; trig there is only accurate to an
    # ulp of the argument (~1e-12 rad) and varies across SIMD paths, which
    # near-cancelling sums amplify. fmod is exact, so reducing first keeps
    # the trig at small arguments where it is reproducible and sub-ulp.
    phase = np.mod(phase, 2.0 * math.pi)
    return np.sum((consts.eta_m / r) * np.exp(-1j * phase), axis=1)


def effective_gains(scenario: Scenario, layout: PaLayout) -> np.ndarray:
    """Per-user effective channel power gains |v_k|^2, shape (K,)."""
    return np.abs(channel_amplitudes(scenario, layout)) ** 2


def effective_gain(scenario: Scenario, layout: PaLayout, user_index: int) -> float:
    """Effective channel power gain |v_k|^2 for one user."""
    return float(effective_gains(scenario, layout)[user_index])


def _prefix_received_power(gains: np.ndarray, powers: Sequence[float],
                           order: DecodingOrder, m: int) -> float:
    """Sum of P_i |v_i|^2 over users with rank <= m."""
    return float(sum(powers[i] * gains[i] for i in order.prefix_users(m)))


def sinr(scenario: Scenario, layout: PaLayout, powers: Sequence[float],
         order: DecodingOrder, k: int) -> float:
    """SINR of user k under SIC: interference comes from users decoded later
    (smaller rank); noise is aggregated over the N PAs.

    Kept for reporting; rate computations use the ratio-of-sums form to
    avoid cancellation.
    """
    gains = effective_gains(scenario, layout)
    noise = scenario.params.num_antennas * derive_constants(scenario.params).noise_power_w
    interference = _prefix_received_power(gains, powers, order, order.rank[k] - 1)
    return powers[k] * gains[k] / (interference + noise)


def achievable_rate(scenario: Scenario, layout: PaLayout, powers: Sequence[float],
                    order: DecodingOrder, k: int) -> float:
    """Uplink NOMA rate of user k in bits/s, ratio-of-sums form."""
    gains = effective_gains(scenario, layout)
    noise = scenario.params.num_antennas * derive_constants(scenario.params).noise_power_w
    num = _prefix_received_power(gains, powers, order, order.rank[k]) + noise
    den = _prefix_received_power(gains, powers, order, order.rank[k] - 1) + noise
    return scenario.params.bandwidth_hz * math.log2(num / den)


def prefix_sum_rate(scenario: Scenario, layout: PaLayout, powers: Sequence[float],
                    order: DecodingOrder, m: int) -> float:
    """Sum rate of the m last-decoded users (rank <= m); telescopes to a
    single log of the cumulative received power over noise."""
    gains = effective_gains(scenario, layout)
    noise = scenario.params.num_antennas * derive_constants(scenario.params).noise_power_w
    total = _prefix_received_power(gains, powers, order, m)
    return scenario.params.bandwidth_hz * math.log2((total + noise) / noise)


def offload_delay_energy(user: UserTerminal, beta: float, rate_bps: float,
                         power_w: float) -> tuple[float, float]:
    """Offloading delay T = beta*L/R and transmit energy E = T*P."""
    if beta <= 0.0:
        return 0.0, 0.0
    if rate_bps <= 0.0:
        raise ZeroRateOffloadError(
            f"cannot offload beta={beta} of the task at zero rate")
    t = beta * user.task_size_bits / rate_bps
    return t, t * power_w


def local_delay_energy(user: UserTerminal, beta: float) -> tuple[float, float]:
    """Local-compute delay and energy for the (1-beta) remainder of the task."""
    remaining_cycles = (1.0 - beta) * user.task_size_bits * user.cycles_per_bit
    t = remaining_cycles / user.local_cpu_hz
    e = user.capacitance_coeff * remaining_cycles * user.local_cpu_hz ** 2
    return t, e


def task_time(user: UserTerminal, beta: float, rate_bps: float,
              power_w: float) -> float:
    """Completion time: max of offload and local-compute delays."""
    t_off, _ = offload_delay_energy(user, beta, rate_bps, power_w)
    t_loc, _ = local_delay_energy(user, beta)
    return max(t_off, t_loc)


def equivalent_offload_time(scenario: Scenario, allocation: Allocation, m: int) -> float:
    """Common offload time of the m last-decoded users: cumulative offloaded
    bits over the telescoped prefix sum rate.

    Equals each individual offload time when per-user offload times are
    equalized.
    """
    order = allocation.order
    bits = sum(allocation.beta[i] * scenario.users[i].task_size_bits
               for i in order.prefix_users(m))
    if bits <= 0.0:
        return 0.0
    rate = prefix_sum_rate(scenario, allocation.layout, allocation.power_w, order, m)
    if rate <= 0.0:
        raise ZeroRateOffloadError("nonzero offloaded bits over a zero prefix rate")
    return bits / rate


def gains_ordered(gains: Sequence[float], order: DecodingOrder) -> bool:
    """True iff earlier-decoded users (larger rank) have gains >= those of
    later-decoded users, ties allowed."""
    by_rank_desc = sorted(range(len(gains)), key=lambda k: -order.rank[k])
    seq = [gains[k] for k in by_rank_desc]
    return all(a >= b for a, b in zip(seq, seq[1:]))


def sic_order_satisfied(scenario: Scenario, layout: PaLayout,
                        order: DecodingOrder) -> bool:
    """Check the SIC gain-ordering constraint for the given decoding order."""
    return gains_ordered(effective_gains(scenario, layout), order)
