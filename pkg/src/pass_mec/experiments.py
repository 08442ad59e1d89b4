"""Scenario generation, Monte Carlo sweeps and result emission.

Configs are pydantic models (also used as the service wire format). Power
enters and leaves in dBm; everything handed to the solver is watts. User
placements come from a counter-based Philox stream keyed by the experiment
seed with the trial index in the counter word, so any trial is reproducible
independently and in parallel.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .baselines import fdma_baseline_delay, mimo_baseline_delay
from .model import Scenario, SystemParams, UserTerminal, derive_constants
from .optimizer import (
    NoFeasibleDelayError,
    SolveReport,
    SolverSettings,
    global_optimize_over_orders,
)

SCHEMES = ("noma_pass", "mimo", "fdma")
SWEEP_VARIABLES = ("num_antennas", "max_power_dbm", "task_size_bits")

RESULTS_CSV_HEADER = "seed,trial,scheme,swept_var,swept_value,delay_s,converged,outer_iters,wall_s"


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return -math.inf if watts <= 0.0 else 10.0 * math.log10(watts) + 30.0


class SystemConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    carrier_frequency_hz: float = 28e9
    effective_refractive_index: float = 1.4
    bandwidth_hz: float = 1e6
    noise_psd_dbm_per_hz: float = -174.0
    antenna_height_m: float = 3.0
    waveguide_length_m: float = 15.0
    num_antennas: int = Field(default=4, ge=1)
    min_antenna_spacing_m: Optional[float] = None  # None: half a wavelength
    max_power_dbm: float = 10.0
    energy_budget_j: float = Field(default=0.2, gt=0)


class UserProfileConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    task_size_bits: float = Field(default=1e6, gt=0)
    cycles_per_bit: float = Field(default=1e3, gt=0)
    local_cpu_hz: float = Field(default=1e9, gt=0)
    capacitance_coeff: float = Field(default=1e-27, gt=0)


class SolverConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    epsilon: float = Field(default=1e-4, gt=0, lt=1)
    epsilon_x: float = Field(default=1e-4, gt=0, lt=1)
    max_inner_iters: int = Field(default=20, ge=1)

    def to_settings(self) -> SolverSettings:
        return SolverSettings(epsilon=self.epsilon, epsilon_x=self.epsilon_x,
                              max_inner_iters=self.max_inner_iters)


class SweepSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    variable: Literal["num_antennas", "max_power_dbm", "task_size_bits"]
    values: list[float] = Field(min_length=1)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    system: SystemConfig = Field(default_factory=SystemConfig)
    profile: UserProfileConfig = Field(default_factory=UserProfileConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    num_users: int = Field(default=2, ge=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    num_trials: int = Field(default=30, ge=1)
    sweep: Optional[SweepSpec] = None
    schemes: list[Literal["noma_pass", "mimo", "fdma"]] = Field(
        default=["noma_pass", "mimo", "fdma"], min_length=1)

    @field_validator("schemes")
    @classmethod
    def _unique_schemes(cls, v: list[str]) -> list[str]:
        if len(set(v)) != len(v):
            raise ValueError("schemes must be unique")
        return v


class TrialRecord(BaseModel):
    seed: int
    trial: int
    scheme: str
    swept_var: str
    swept_value: float
    delay_s: Optional[float] = None
    converged: bool
    outer_iters: int
    wall_s: float
    beta: list[float] = []
    power_dbm: list[float] = []
    x_p: list[float] = []
    order: list[int] = []


def system_params(config: ExperimentConfig,
                  num_antennas: Optional[int] = None,
                  max_power_dbm: Optional[float] = None) -> SystemParams:
    sysc = config.system
    n = num_antennas if num_antennas is not None else sysc.num_antennas
    pmax_dbm = max_power_dbm if max_power_dbm is not None else sysc.max_power_dbm
    spacing = sysc.min_antenna_spacing_m
    if spacing is None:
        spacing = SystemParams(
            carrier_frequency_hz=sysc.carrier_frequency_hz,
            bandwidth_hz=sysc.bandwidth_hz,
            noise_psd_dbm_per_hz=sysc.noise_psd_dbm_per_hz,
            antenna_height_m=sysc.antenna_height_m,
            waveguide_length_m=sysc.waveguide_length_m,
            num_antennas=1, min_antenna_spacing_m=0.0,
            max_transmit_power_w=1.0, energy_budget_j=sysc.energy_budget_j,
            effective_refractive_index=sysc.effective_refractive_index,
        )
        spacing = derive_constants(spacing).wavelength_m / 2.0
    return SystemParams(
        carrier_frequency_hz=sysc.carrier_frequency_hz,
        bandwidth_hz=sysc.bandwidth_hz,
        noise_psd_dbm_per_hz=sysc.noise_psd_dbm_per_hz,
        antenna_height_m=sysc.antenna_height_m,
        waveguide_length_m=sysc.waveguide_length_m,
        num_antennas=n,
        min_antenna_spacing_m=spacing,
        max_transmit_power_w=dbm_to_watts(pmax_dbm),
        energy_budget_j=sysc.energy_budget_j,
        effective_refractive_index=sysc.effective_refractive_index,
    )


def generate_scenario(config: ExperimentConfig, trial_index: int,
                      num_antennas: Optional[int] = None,
                      max_power_dbm: Optional[float] = None,
                      task_size_bits: Optional[float] = None) -> Scenario:
    """Draw the trial's user placements: i.i.d. uniform over the square
    region, from a Philox stream keyed (seed; counter = trial index)."""
    params = system_params(config, num_antennas, max_power_dbm)
    rng = np.random.Generator(
        np.random.Philox(key=config.seed, counter=[0, 0, 0, trial_index]))
    xy = rng.random((config.num_users, 2)) * params.waveguide_length_m
    prof = config.profile
    users = tuple(
        UserTerminal(
            x_m=float(x), y_m=float(y),
            task_size_bits=task_size_bits if task_size_bits is not None
            else prof.task_size_bits,
            cycles_per_bit=prof.cycles_per_bit,
            local_cpu_hz=prof.local_cpu_hz,
            capacitance_coeff=prof.capacitance_coeff,
        )
        for x, y in xy)
    return Scenario(params=params, users=users)


def solve_scheme(scheme: str, scenario: Scenario,
                 settings: SolverSettings) -> SolveReport:
    if scheme == "noma_pass":
        return global_optimize_over_orders(scenario, settings)
    if scheme == "mimo":
        return mimo_baseline_delay(scenario, settings)
    if scheme == "fdma":
        return fdma_baseline_delay(scenario, settings)
    raise ValueError(f"unknown scheme {scheme!r}")


def _record_from_report(config: ExperimentConfig, trial: int, scheme: str,
                        swept_var: str, swept_value: float,
                        report: SolveReport) -> TrialRecord:
    alloc = report.allocation
    return TrialRecord(
        seed=config.seed, trial=trial, scheme=scheme,
        swept_var=swept_var, swept_value=swept_value,
        delay_s=report.delay_s, converged=True,
        outer_iters=report.outer_iters, wall_s=report.wall_s,
        beta=[float(b) for b in alloc.beta],
        power_dbm=[watts_to_dbm(p) for p in alloc.power_w],
        x_p=[] if alloc.layout is None else list(alloc.layout.x_positions_m),
        order=list(alloc.order.rank),
    )


def _failed_record(config: ExperimentConfig, trial: int, scheme: str,
                   swept_var: str, swept_value: float) -> TrialRecord:
    return TrialRecord(
        seed=config.seed, trial=trial, scheme=scheme,
        swept_var=swept_var, swept_value=swept_value,
        delay_s=None, converged=False, outer_iters=0, wall_s=0.0)


def run_solve(config: ExperimentConfig, trial_index: int = 0,
              scheme: Optional[str] = None) -> tuple[TrialRecord, SolveReport]:
    """Solve one generated scenario with one scheme (first configured one
    by default)."""
    scheme = scheme or config.schemes[0]
    scenario = generate_scenario(config, trial_index)
    report = solve_scheme(scheme, scenario, config.solver.to_settings())
    record = _record_from_report(config, trial_index, scheme, "none", 0.0, report)
    return record, report


def run_convergence_trace(config: ExperimentConfig,
                          trial_index: int = 0) -> tuple[TrialRecord, SolveReport]:
    """One solve of the proposed scheme, keeping the bisection trace."""
    scenario = generate_scenario(config, trial_index)
    report = global_optimize_over_orders(scenario, config.solver.to_settings())
    record = _record_from_report(config, trial_index, "noma_pass", "none", 0.0,
                                 report)
    return record, report


def run_sweep(config: ExperimentConfig) -> list[TrialRecord]:
    """Solve every (swept value, trial, scheme) combination.

    Per-trial solver failures are recorded with converged=False and the
    sweep continues.
    """
    if config.sweep is None:
        raise ValueError("config has no sweep specification")
    var = config.sweep.variable
    records: list[TrialRecord] = []
    for value in config.sweep.values:
        overrides = {
            "num_antennas": int(value) if var == "num_antennas" else None,
            "max_power_dbm": value if var == "max_power_dbm" else None,
            "task_size_bits": value if var == "task_size_bits" else None,
        }
        settings = config.solver.to_settings()
        for trial in range(config.num_trials):
            scenario = generate_scenario(
                config, trial,
                num_antennas=overrides["num_antennas"],
                max_power_dbm=overrides["max_power_dbm"],
                task_size_bits=overrides["task_size_bits"])
            for scheme in config.schemes:
                try:
                    report = solve_scheme(scheme, scenario, settings)
                    records.append(_record_from_report(
                        config, trial, scheme, var, float(value), report))
                except NoFeasibleDelayError:
                    records.append(_failed_record(
                        config, trial, scheme, var, float(value)))
    return records


def summarize(records: Sequence[TrialRecord]) -> list[dict]:
    """Per (scheme, swept value) mean delay over converged trials."""
    keys: list[tuple[str, float]] = []
    for r in records:
        key = (r.scheme, r.swept_value)
        if key not in keys:
            keys.append(key)
    out = []
    for scheme, value in keys:
        delays = [r.delay_s for r in records
                  if r.scheme == scheme and r.swept_value == value and r.converged]
        total = sum(1 for r in records
                    if r.scheme == scheme and r.swept_value == value)
        out.append({
            "scheme": scheme,
            "swept_value": value,
            "num_trials": total,
            "num_converged": len(delays),
            "mean_delay_s": (sum(delays) / len(delays)) if delays else None,
        })
    return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def results_csv(records: Sequence[TrialRecord]) -> str:
    lines = [RESULTS_CSV_HEADER]
    for r in records:
        lines.append(",".join(_fmt(v) for v in (
            r.seed, r.trial, r.scheme, r.swept_var, r.swept_value,
            r.delay_s, r.converged, r.outer_iters, r.wall_s)))
    return "\n".join(lines) + "\n"


def emit_results(records: Sequence[TrialRecord], out_dir: str | Path) -> list[Path]:
    """Write results.csv plus a companion JSON with full allocations."""
    if not records:
        raise ValueError("no records to emit")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "results.csv"
        csv_path.write_text(results_csv(records))
        json_path = out / "allocations.json"
        payload = {
            "records": [r.model_dump() for r in records],
            "summary": summarize(records),
        }
        json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results under {out}: {exc}") from exc
    return [csv_path, json_path]


def trace_csv(report: SolveReport) -> str:
    lines = ["iteration,phase,d_t_s,feasible,inner_iters,reason"]
    for e in report.trace:
        lines.append(",".join(_fmt(v) for v in (
            e.index, e.phase, e.d_t_s, e.feasible, e.inner_iters,
            e.reason or "")))
    return "\n".join(lines) + "\n"


def emit_trace(report: SolveReport, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        path = out / "trace.csv"
        path.write_text(trace_csv(report))
    except OSError as exc:
        raise OSError(f"cannot write trace under {out}: {exc}") from exc
    return path
