"""Nonlinear time-domain integration and trajectory-based stability verdicts."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .equilibrium import solve_equilibrium
from .model import MicrogridParams, StateVector, pack, state_labels

_STATUS_TEXT = {
    _kernels.OK: "ok",
    _kernels.SINGULAR: "alpha or v reached zero",
    _kernels.BLOWUP: "state magnitude exceeded the blow-up bound",
    _kernels.STEP_UNDERFLOW: "step size underflow",
}


@dataclass(frozen=True)
class SimControls:
    """Integrator settings.

    ``max_step=None`` caps the step at 0.1 ms, well below the period of the
    fastest oscillatory modes of practical designs. The converter lag needs no
    separate cap: when it is fast the error control shortens the step itself.
    """

    rtol: float = 1e-7
    atol: float = 1e-9
    max_step: float | None = None
    sample_dt: float = 1e-4
    blowup: float = 1e6
    method: str = "dopri"
    fixed_step: float = 1e-5

    def step_cap(self) -> float:
        return self.max_step if self.max_step is not None else 1e-4


@dataclass(frozen=True)
class ClassifyControls:
    perturbation: float = 1e-2
    t_end: float = 40.0
    decay_factor: float = 1e-3
    growth_factor: float = 10.0
    sim: SimControls = SimControls(sample_dt=1e-2)
    # an undecided run is continued, doubling the elapsed time, up to this limit
    max_t_end: float = 640.0


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    params: MicrogridParams
    diverged: bool = False
    message: str = "ok"
    n_steps: int = 0

    @property
    def final_state(self) -> StateVector:
        return StateVector.from_array(self.states[-1])

    def to_csv(self, path: str | Path) -> None:
        n = self.params.n
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t"] + state_labels(n))
            for t, row in zip(self.times, self.states):
                writer.writerow([format(float(t), ".17e")]
                                + [format(float(a), ".17e") for a in row])


class Classification(enum.Enum):
    ASYMPTOTICALLY_STABLE = "AsymptoticallyStable"
    UNSTABLE = "Unstable"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class SimVerdict:
    classification: Classification
    final_deviation: float
    peak_deviation: float
    initial_deviation: float
    t_final: float

    @property
    def stable(self) -> bool:
        return self.classification is Classification.ASYMPTOTICALLY_STABLE


def simulate(params: MicrogridParams, x0, t_end: float,
             controls: SimControls = SimControls(), t0: float = 0.0) -> Trajectory:
    y0 = x0.to_array() if isinstance(x0, StateVector) else np.asarray(x0, dtype=float)
    y0 = np.ascontiguousarray(y0, dtype=float)
    if y0.shape[0] != params.dim:
        raise ValueError(f"initial state has length {y0.shape[0]}, expected {params.dim}")
    n = params.n
    if np.any(y0[n:2 * n] <= 0) or y0[-1] <= 0:
        raise ValueError("initial state needs positive alpha and v")
    if not t_end > t0:
        raise ValueError("t_end must be after t0")
    p = pack(params)
    if controls.method == "rk4":
        y, status = _kernels.rk4(_kernels.GRID, p, t0, y0, t_end,
                                 controls.fixed_step, controls.blowup)
        times = np.array([t0, t_end])
        states = np.vstack([y0, y])
        steps = int(np.ceil((t_end - t0) / controls.fixed_step - 1e-9))
    elif controls.method == "dopri":
        times, states, status, steps, _ = _kernels.dopri(
            _kernels.GRID, p, t0, y0, t_end, controls.rtol, controls.atol,
            controls.step_cap(), controls.sample_dt,
            controls.blowup)
    else:
        raise ValueError(f"unknown integration method {controls.method!r}")
    return Trajectory(times=times, states=states, params=params,
                      diverged=status != _kernels.OK,
                      message=_STATUS_TEXT[status], n_steps=int(steps))


def perturbed_start(params: MicrogridParams, perturbation: float = 1e-2):
    """Equilibrium and the start state with the bus voltage scaled by ``1 + perturbation``."""
    eq = solve_equilibrium(params)
    x_bar = eq.state.to_array()
    x0 = x_bar.copy()
    x0[-1] *= 1.0 + perturbation
    return eq, x0


def verdict_from_trajectory(traj: Trajectory, x_bar: np.ndarray,
                            decay_factor: float = 1e-3,
                            growth_factor: float = 10.0,
                            initial: float | None = None) -> SimVerdict:
    """Classify a trajectory started near ``x_bar`` by its end-of-horizon deviation.

    ``initial`` overrides the reference deviation, which otherwise is the one
    at the first sample.
    """
    dev = np.max(np.abs(traj.states - x_bar), axis=1)
    initial = float(dev[0]) if initial is None else float(initial)
    final = float(dev[-1])
    peak = float(dev.max())
    if traj.diverged or final > growth_factor * initial:
        verdict = Classification.UNSTABLE
    elif final < decay_factor * initial:
        verdict = Classification.ASYMPTOTICALLY_STABLE
    else:
        verdict = Classification.INCONCLUSIVE
    return SimVerdict(classification=verdict, final_deviation=final,
                      peak_deviation=peak, initial_deviation=initial,
                      t_final=float(traj.times[-1]))


def classify(params: MicrogridParams,
             controls: ClassifyControls = ClassifyControls()) -> SimVerdict:
    """Perturb the equilibrium, integrate over the horizon and classify the outcome.

    Stable when the final max-abs deviation has shrunk below ``decay_factor``
    times the initial one; unstable on blow-up or growth beyond
    ``growth_factor``. A run that is neither is continued from its last state
    (each extension doubles the elapsed time) until it is decided or
    ``max_t_end`` is reached, after which it is reported inconclusive.
    """
    eq, x0 = perturbed_start(params, controls.perturbation)
    x_bar = eq.state.to_array()
    initial = float(np.max(np.abs(x0 - x_bar)))
    peak = initial
    t0, t1, y = 0.0, controls.t_end, x0
    while True:
        traj = simulate(params, y, t1, controls.sim, t0=t0)
        v = verdict_from_trajectory(traj, x_bar, controls.decay_factor,
                                    controls.growth_factor, initial=initial)
        peak = max(peak, v.peak_deviation)
        if v.classification is not Classification.INCONCLUSIVE or t1 >= controls.max_t_end:
            return replace(v, peak_deviation=peak)
        t0, t1, y = t1, min(2.0 * t1, controls.max_t_end), traj.states[-1]


def step_load(params: MicrogridParams, delta_p: float, t_step: float, t_end: float,
              controls: SimControls = SimControls()) -> Trajectory:
    """Start at the pre-step equilibrium and switch the load by ``delta_p`` at ``t_step``."""
    if not 0.0 <= t_step < t_end:
        raise ValueError("need 0 <= t_step < t_end")
    after = replace(params, p_load=params.p_load + delta_p)
    solve_equilibrium(after)
    x_bar = solve_equilibrium(params).state.to_array()
    if t_step > 0.0:
        first = simulate(params, x_bar, t_step, controls)
        if first.diverged:
            return first
        second = simulate(after, first.states[-1], t_end, controls, t0=t_step)
        times = np.concatenate([first.times, second.times[1:]])
        states = np.vstack([first.states, second.states[1:]])
        return Trajectory(times=times, states=states, params=params,
                          diverged=second.diverged, message=second.message,
                          n_steps=first.n_steps + second.n_steps)
    return simulate(after, x_bar, t_end, controls)


def integrate_harness(system: str, y0, t_end: float, rate: float = 1.0,
                      controls: SimControls = SimControls(max_step=1e-2)):
    """Run the integrator on a closed-form test system.

    ``system`` is ``"decay"`` (dx/dt = -rate x) or ``"rotation"``
    (the undamped oscillator with angular rate ``rate``). Returns
    ``(times, states, status)``.
    """
    code = {"decay": _kernels.DECAY, "rotation": _kernels.ROTATION}[system]
    p = np.array([rate], dtype=float)
    y0 = np.ascontiguousarray(y0, dtype=float)
    if controls.method == "rk4":
        y, status = _kernels.rk4(code, p, 0.0, y0, t_end, controls.fixed_step,
                                 controls.blowup)
        return np.array([0.0, t_end]), np.vstack([y0, y]), status
    h_max = controls.max_step if controls.max_step is not None else t_end
    times, states, status, _, _ = _kernels.dopri(
        code, p, 0.0, y0, t_end, controls.rtol, controls.atol, h_max,
        controls.sample_dt, controls.blowup)
    return times, states, status


def linear_response(A: np.ndarray, dx0: np.ndarray, times: np.ndarray) -> np.ndarray:
    """``expm(A t) dx0`` at each time, via the dense matrix exponential."""
    from scipy.linalg import expm

    return np.array([expm(A * t) @ dx0 for t in times])
