"""Steady-state operating point of the droop-regulated bus."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import (BatteryOverload, ConvergenceFailure, DegenerateDroop,
                     NoPhysicalRoot)
from .model import MicrogridParams, StateVector, eval_rhs, to_per_unit

log = logging.getLogger(__name__)

RESIDUAL_LIMIT = 1e-9
POLISH_TRIGGER = 1e-10
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50


@dataclass(frozen=True)
class Equilibrium:
    state: StateVector
    residual_norm: float
    i_dc: np.ndarray

    @property
    def v(self) -> float:
        return self.state.v


def bus_voltage(n: int, p_net: float, v_0: float, i_0: float, droop: float) -> float:
    """Bus voltage where the droop law meets the power balance.

    Solves ``n * v * ((v_0 - v) / droop + i_0) = p_net`` and returns the root
    closest to ``v_0``.
    """
    if droop == 0.0:
        return v_0
    # (n/D) v^2 - n (v_0/D + i_0) v + p_net = 0
    a = n / droop
    b = -n * (v_0 / droop + i_0)
    c = p_net
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        raise NoPhysicalRoot(
            f"droop characteristic cannot deliver P_net={p_net:g} p.u. "
            f"(voltage quadratic discriminant {disc:.6g} < 0)")
    sq = math.sqrt(disc)
    # cancellation-free pair of roots
    q = -0.5 * (b - sq) if b < 0 else -0.5 * (b + sq)
    roots = [q / a, c / q] if q != 0.0 else [0.0, -b / a]
    positive = [r for r in roots if r > 0.0]
    if not positive:
        raise NoPhysicalRoot(f"voltage quadratic has no positive root for P_net={p_net:g}")
    return min(positive, key=lambda r: abs(r - v_0))


def branch_current(e_b: float, r_b: float, v: float, i_dc: float) -> float:
    """Battery current of one branch delivering ``v * i_dc`` to the bus.

    Root of ``r_b i^2 - e_b i + v i_dc = 0`` on the low-loss branch, i.e. the
    one that tends to ``v i_dc / e_b`` as ``r_b`` goes to zero.
    """
    power = v * i_dc
    if r_b == 0.0:
        return power / e_b
    disc = e_b * e_b - 4.0 * r_b * power
    if disc < 0.0:
        raise BatteryOverload(
            f"branch with e_B={e_b:g}, R_B={r_b:g} cannot deliver {power:g} p.u. "
            f"(discriminant {disc:.6g} < 0)")
    return 2.0 * power / (e_b + math.sqrt(disc))


def solve_equilibrium(params: MicrogridParams) -> Equilibrium:
    pu = to_per_unit(params)
    n = pu.n
    p_net = pu.p_net
    if pu.droop == 0.0:
        if n > 1:
            raise DegenerateDroop(
                "zero droop gain with several ESSs: current sharing is undetermined")
        v = pu.v_0
        i_dc = p_net / (n * v)
    else:
        v = bus_voltage(n, p_net, pu.v_0, pu.i_0, pu.droop)
        i_dc = (pu.v_0 - v) / pu.droop + pu.i_0

    i_b = np.array([branch_current(e, r, v, i_dc) for e, r in zip(pu.e_b, pu.r_b)])
    battery_voltage = pu.e_b - pu.r_b * i_b
    if np.any(battery_voltage <= 0.0):
        raise BatteryOverload("battery terminal voltage collapses at this operating point")
    alpha = v / battery_voltage
    x = np.concatenate([i_b, alpha, alpha, [v]])

    residual = float(np.max(np.abs(eval_rhs(pu, x))))
    if residual > POLISH_TRIGGER:
        log.debug("closed-form residual %.3g, polishing with Newton", residual)
        x = _newton_polish(pu, x)
        residual = float(np.max(np.abs(eval_rhs(pu, x))))
    if not residual < RESIDUAL_LIMIT:
        raise ConvergenceFailure(f"equilibrium residual {residual:.3g} exceeds {RESIDUAL_LIMIT}")

    state = StateVector.from_array(x)
    i_dc_arr = state.i_b / state.alpha
    return Equilibrium(state=state, residual_norm=residual, i_dc=i_dc_arr)


def _newton_polish(pu, x: np.ndarray) -> np.ndarray:
    from .linearization import jacobian_at

    x = x.copy()
    for _ in range(NEWTON_MAX_ITER):
        f = eval_rhs(pu, x)
        if np.max(np.abs(f)) < NEWTON_TOL:
            return x
        try:
            dx = np.linalg.solve(jacobian_at(pu, x), -f)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceFailure(f"singular Jacobian while polishing: {exc}") from exc
        x = x + dx
    return x
