"""Minimal dense linear-program solver.

Bounded-variable two-phase simplex with Bland's anti-cycling rule. Sized
for the offload-ratio and power subproblems (a handful of variables, a few
dozen rows), so everything is dense and the basis is refactorized from
scratch every pivot. Deterministic: identical inputs give identical
outcomes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

FEAS_TOL = 1e-9
RC_TOL = 1e-9
ZERO_ROW_TOL = 1e-12


class LpNumericalError(RuntimeError):
    """Pivoting failed to make progress within the iteration cap."""


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpProblem:
    """min/max c.x subject to A x <= b and per-variable box bounds."""

    c: tuple[float, ...]
    sense: str  # "min" | "max"
    a_ub: tuple[tuple[float, ...], ...]
    b_ub: tuple[float, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self) -> None:
        n = len(self.c)
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        if any(len(row) != n for row in self.a_ub):
            raise ValueError("constraint row length mismatch")
        if len(self.b_ub) != len(self.a_ub):
            raise ValueError("b_ub length mismatch")
        if len(self.lower) != n or len(self.upper) != n:
            raise ValueError("bound length mismatch")
        if any(not math.isfinite(v) for v in self.c):
            raise ValueError("objective coefficients must be finite")
        if any(not math.isfinite(v) for row in self.a_ub for v in row):
            raise ValueError("constraint coefficients must be finite")
        if any(not math.isfinite(v) for v in self.b_ub):
            raise ValueError("constraint bounds must be finite")
        if any(l > u for l, u in zip(self.lower, self.upper)):
            raise ValueError("lower bound exceeds upper bound")


@dataclass(frozen=True)
class LpOutcome:
    status: LpStatus
    x: Optional[tuple[float, ...]]
    objective: Optional[float]


def _simplex_core(a: np.ndarray, b: np.ndarray, c: np.ndarray, u: np.ndarray,
                  basis: list[int], at_upper: np.ndarray,
                  budget: list[int]) -> str:
    """Maximize c.z over {A z = b, 0 <= z <= u} starting from the given basis.

    Mutates basis/at_upper in place; returns "optimal" or "unbounded".
    """
    m, ntot = a.shape
    while True:
        if budget[0] <= 0:
            raise LpNumericalError("simplex iteration cap exceeded")
        budget[0] -= 1

        in_basis = np.zeros(ntot, dtype=bool)
        in_basis[basis] = True
        nb_vals = np.where(at_upper & ~in_basis & np.isfinite(u), u, 0.0)
        nb_vals[in_basis] = 0.0

        if m > 0:
            bmat = a[:, basis]
            xb = np.linalg.solve(bmat, b - a @ nb_vals)
            y = np.linalg.solve(bmat.T, c[basis])
            rc = c - y @ a
        else:
            xb = np.zeros(0)
            rc = c.copy()

        entering = -1
        for j in range(ntot):
            if in_basis[j]:
                continue
            if not at_upper[j] and rc[j] > RC_TOL:
                entering = j
                break
            if at_upper[j] and rc[j] < -RC_TOL:
                entering = j
                break
        if entering < 0:
            return "optimal"

        s = -1.0 if at_upper[entering] else 1.0  # direction of the entering value
        d = np.linalg.solve(bmat, a[:, entering]) if m > 0 else np.zeros(0)

        # Ratio test: basic variables hitting 0 or their upper bound, and a
        # bound flip of the entering variable itself.
        t_best = math.inf
        leave_row = -1
        leave_to_upper = False
        for i in range(m):
            rate = s * d[i]  # xB[i] decreases at this rate per unit step
            if rate > FEAS_TOL:
                t = max(xb[i], 0.0) / rate
                if t < t_best - 1e-12 or (abs(t - t_best) <= 1e-12 and
                                          (leave_row < 0 or basis[i] < basis[leave_row])):
                    t_best, leave_row, leave_to_upper = t, i, False
            elif rate < -FEAS_TOL and math.isfinite(u[basis[i]]):
                t = max(u[basis[i]] - xb[i], 0.0) / (-rate)
                if t < t_best - 1e-12 or (abs(t - t_best) <= 1e-12 and
                                          (leave_row < 0 or basis[i] < basis[leave_row])):
                    t_best, leave_row, leave_to_upper = t, i, True

        flip = False
        if math.isfinite(u[entering]) and u[entering] <= t_best + 1e-12:
            if u[entering] < t_best - 1e-12 or leave_row < 0 or entering < basis[leave_row]:
                flip = True
                t_best = u[entering]

        if not flip and leave_row < 0:
            return "unbounded"

        if flip:
            at_upper[entering] = not at_upper[entering]
            continue

        leaving = basis[leave_row]
        basis[leave_row] = entering
        at_upper[entering] = False
        at_upper[leaving] = leave_to_upper


def solve_lp(problem: LpProblem) -> LpOutcome:
    """Solve a small dense LP; returns status, point and objective value."""
    n = len(problem.c)
    sense_sign = 1.0 if problem.sense == "max" else -1.0
    c_orig = np.asarray(problem.c, dtype=float)
    a = np.asarray(problem.a_ub, dtype=float).reshape(len(problem.a_ub), n)
    b = np.asarray(problem.b_ub, dtype=float)
    lower = np.asarray(problem.lower, dtype=float)
    upper = np.asarray(problem.upper, dtype=float)

    # Shift/flip/split so every working variable lives in [0, u].
    cols: list[np.ndarray] = []
    cw: list[float] = []
    uw: list[float] = []
    backmap: list[tuple[str, int, float]] = []  # (kind, var index, offset/sign)
    b_work = b.copy()
    cmax = sense_sign * c_orig
    for j in range(n):
        l, uj = lower[j], upper[j]
        if math.isfinite(l):
            b_work -= a[:, j] * l
            cols.append(a[:, j].copy())
            cw.append(cmax[j])
            uw.append(uj - l)
            backmap.append(("shift", j, l))
        elif math.isfinite(uj):
            b_work -= a[:, j] * uj
            cols.append(-a[:, j])
            cw.append(-cmax[j])
            uw.append(math.inf)
            backmap.append(("flip", j, uj))
        else:
            cols.append(a[:, j].copy())
            cw.append(cmax[j])
            uw.append(math.inf)
            backmap.append(("pos", j, 0.0))
            cols.append(-a[:, j])
            cw.append(-cmax[j])
            uw.append(math.inf)
            backmap.append(("neg", j, 0.0))

    a_work = np.column_stack(cols) if cols else np.zeros((len(b_work), 0))
    keep = []
    for i in range(a_work.shape[0]):
        if np.max(np.abs(a_work[i])) <= ZERO_ROW_TOL:
            if b_work[i] < -ZERO_ROW_TOL:
                return LpOutcome(LpStatus.INFEASIBLE, None, None)
        else:
            keep.append(i)
    a_work = a_work[keep]
    b_work = b_work[keep]
    m = a_work.shape[0]
    nstruct = a_work.shape[1]

    # Slacks for every row; artificials where the slack start is infeasible.
    neg = b_work < 0
    a_full = np.hstack([a_work, np.eye(m)])
    a_full[neg] *= -1.0
    b_full = np.where(neg, -b_work, b_work)
    u_full = list(uw) + [math.inf] * m
    art_rows = np.flatnonzero(neg)
    basis = [nstruct + i for i in range(m)]
    for i in art_rows:
        a_full = np.hstack([a_full, np.zeros((m, 1))])
        a_full[i, -1] = 1.0
        u_full.append(math.inf)
        basis[i] = a_full.shape[1] - 1
    u_arr = np.asarray(u_full, dtype=float)
    ntot = a_full.shape[1]
    at_upper = np.zeros(ntot, dtype=bool)
    budget = [50 * (ntot + m) + 50]

    if len(art_rows) > 0:
        c_phase1 = np.zeros(ntot)
        c_phase1[nstruct + m:] = -1.0
        status = _simplex_core(a_full, b_full, c_phase1, u_arr, basis, at_upper, budget)
        if status != "optimal":
            raise LpNumericalError("phase-1 simplex did not terminate at an optimum")
        val = _point(a_full, b_full, u_arr, basis, at_upper)
        if float(np.sum(val[nstruct + m:])) > 1e-7:
            return LpOutcome(LpStatus.INFEASIBLE, None, None)
        u_arr[nstruct + m:] = 0.0  # pin artificials at zero for phase 2

    c_phase2 = np.zeros(ntot)
    c_phase2[:nstruct] = cw
    status = _simplex_core(a_full, b_full, c_phase2, u_arr, basis, at_upper, budget)
    if status == "unbounded":
        return LpOutcome(LpStatus.UNBOUNDED, None, None)

    z = _point(a_full, b_full, u_arr, basis, at_upper)
    x = np.zeros(n)
    for val, (kind, j, off) in zip(z[:nstruct], backmap):
        if kind == "shift":
            x[j] = off + val
        elif kind == "flip":
            x[j] = off - val
        elif kind == "pos":
            x[j] += val
        else:
            x[j] -= val
    x = np.clip(x, lower, upper)
    return LpOutcome(LpStatus.OPTIMAL, tuple(float(v) for v in x),
                     float(c_orig @ x))


def _point(a: np.ndarray, b: np.ndarray, u: np.ndarray, basis: list[int],
           at_upper: np.ndarray) -> np.ndarray:
    """Full working-variable vector for the current basis."""
    m, ntot = a.shape
    vals = np.where(at_upper & np.isfinite(u), u, 0.0)
    vals[basis] = 0.0
    if m > 0:
        xb = np.linalg.solve(a[:, basis], b - a @ vals)
        vals[basis] = np.maximum(xb, 0.0)
    return vals
