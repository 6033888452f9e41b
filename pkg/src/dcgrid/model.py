"""Parameter and state types for the single-bus dc grid and its vector field.

Electrical quantities are per unit on ``(s_base, v_nom)``; time is in
seconds. Physical inductances and the bus capacitance are turned into time
constants through the impedance base, so that::

    L_pu = L_B / z_base        C_pu = C * z_base        z_base = v_nom**2 / s_base
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import SingularState


@dataclass(frozen=True)
class EssParams:
    """One battery branch: open-circuit voltage, branch resistance, filter inductance.

    ``e_b`` and ``r_b`` are per unit, ``l_b`` is in henry.
    """

    e_b: float
    r_b: float
    l_b: float

    def __post_init__(self):
        if not self.e_b > 0:
            raise ValueError(f"e_b must be positive, got {self.e_b}")
        if not self.r_b >= 0:
            raise ValueError(f"r_b must be non-negative, got {self.r_b}")
        if not self.l_b > 0:
            raise ValueError(f"l_b must be positive, got {self.l_b}")


@dataclass(frozen=True)
class ControlParams:
    """PI gains, droop law and converter lag shared by every ESS converter.

    ``tau`` is in seconds; the rest are per unit.
    """

    k_p: float
    k_i: float
    droop: float
    v_0: float = 1.0
    i_0: float = 0.0
    tau: float = 0.9e-3

    def __post_init__(self):
        if not self.k_p >= 0:
            raise ValueError(f"k_p must be non-negative, got {self.k_p}")
        if not self.k_i > 0:
            raise ValueError(f"k_i must be positive, got {self.k_i}")
        if not self.droop >= 0:
            raise ValueError(f"droop must be non-negative, got {self.droop}")
        if not self.v_0 > 0:
            raise ValueError(f"v_0 must be positive, got {self.v_0}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")


@dataclass(frozen=True)
class MicrogridParams:
    ess: tuple[EssParams, ...]
    control: ControlParams
    p_fc: tuple[float, ...]
    p_load: float
    c: float
    s_base: float = 1e6
    v_nom: float = 750.0

    def __post_init__(self):
        object.__setattr__(self, "ess", tuple(self.ess))
        object.__setattr__(self, "p_fc", tuple(float(p) for p in self.p_fc))
        if len(self.ess) < 1:
            raise ValueError("at least one ESS branch is required")
        if not self.p_load >= 0:
            raise ValueError(f"p_load must be non-negative, got {self.p_load}")
        if any(not p >= 0 for p in self.p_fc):
            raise ValueError(f"fuel-cell powers must be non-negative, got {self.p_fc}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not self.s_base > 0 or not self.v_nom > 0:
            raise ValueError("s_base and v_nom must be positive")

    @property
    def n(self) -> int:
        return len(self.ess)

    @property
    def dim(self) -> int:
        return 3 * len(self.ess) + 1

    @property
    def p_net(self) -> float:
        """Power the batteries must deliver: load minus fuel-cell injection."""
        return self.p_load - sum(self.p_fc)

    def with_design(self, *, c=None, l_b=None, droop=None, tau=None,
                    p_load=None) -> MicrogridParams:
        """Copy with the swept design quantities replaced (``l_b`` applies to all ESSs)."""
        params = self
        if l_b is not None:
            params = replace(params, ess=tuple(replace(e, l_b=l_b) for e in params.ess))
        control = params.control
        if droop is not None:
            control = replace(control, droop=droop)
        if tau is not None:
            control = replace(control, tau=tau)
        params = replace(params, control=control)
        if c is not None:
            params = replace(params, c=c)
        if p_load is not None:
            params = replace(params, p_load=p_load)
        return params


@dataclass(frozen=True)
class PerUnitScaling:
    s_base: float
    v_nom: float

    @property
    def z_base(self) -> float:
        return self.v_nom**2 / self.s_base

    def l_pu(self, l_henry: float) -> float:
        return l_henry / self.z_base

    def c_pu(self, c_farad: float) -> float:
        return c_farad * self.z_base

    def l_henry(self, l_pu: float) -> float:
        return l_pu * self.z_base

    def c_farad(self, c_pu: float) -> float:
        return c_pu / self.z_base


@dataclass(frozen=True)
class PerUnitParams:
    """Internal parameter set with L and C expressed as time constants."""

    e_b: np.ndarray
    r_b: np.ndarray
    l_pu: np.ndarray
    c_pu: float
    k_p: float
    k_i: float
    droop: float
    v_0: float
    i_0: float
    tau: float
    p_fc_total: float
    p_load: float
    z_base: float

    @property
    def n(self) -> int:
        return self.e_b.shape[0]

    @property
    def p_net(self) -> float:
        return self.p_load - self.p_fc_total


def to_per_unit(params: MicrogridParams) -> PerUnitParams:
    scaling = PerUnitScaling(params.s_base, params.v_nom)
    ctl = params.control
    return PerUnitParams(
        e_b=np.array([e.e_b for e in params.ess], dtype=float),
        r_b=np.array([e.r_b for e in params.ess], dtype=float),
        l_pu=np.array([scaling.l_pu(e.l_b) for e in params.ess], dtype=float),
        c_pu=scaling.c_pu(params.c),
        k_p=ctl.k_p,
        k_i=ctl.k_i,
        droop=ctl.droop,
        v_0=ctl.v_0,
        i_0=ctl.i_0,
        tau=ctl.tau,
        p_fc_total=float(sum(params.p_fc)),
        p_load=params.p_load,
        z_base=scaling.z_base,
    )


def pack(params: MicrogridParams | PerUnitParams) -> np.ndarray:
    """Flatten parameters into the vector layout the compiled kernels expect."""
    pu = params if isinstance(params, PerUnitParams) else to_per_unit(params)
    head = [pu.n, pu.tau, pu.k_p, pu.k_i, pu.droop, pu.v_0, pu.i_0, pu.c_pu,
            pu.p_fc_total, pu.p_load]
    return np.concatenate([np.array(head, dtype=float), pu.e_b, pu.r_b, pu.l_pu])


@dataclass(frozen=True)
class StateVector:
    """Dynamic state ``[i_B | alpha | alpha_ref | v]`` of an n-ESS grid."""

    i_b: np.ndarray
    alpha: np.ndarray
    alpha_ref: np.ndarray
    v: float

    def __post_init__(self):
        for name in ("i_b", "alpha", "alpha_ref"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.i_b.shape == self.alpha.shape == self.alpha_ref.shape):
            raise ValueError("i_b, alpha and alpha_ref must have the same length")
        object.__setattr__(self, "v", float(self.v))

    @property
    def n(self) -> int:
        return self.i_b.shape[0]

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.i_b, self.alpha, self.alpha_ref, [self.v]])

    @classmethod
    def from_array(cls, x: Sequence[float]) -> StateVector:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or (x.shape[0] - 1) % 3:
            raise ValueError(f"state length must be 3n+1, got shape {x.shape}")
        n = (x.shape[0] - 1) // 3
        return cls(x[:n], x[n:2 * n], x[2 * n:3 * n], x[3 * n])

    def with_v(self, v: float) -> StateVector:
        return replace(self, v=v)


def state_labels(n: int) -> list[str]:
    return ([f"i_B_{j + 1}" for j in range(n)]
            + [f"alpha_{j + 1}" for j in range(n)]
            + [f"alpha_ref_{j + 1}" for j in range(n)]
            + ["v"])


def _as_array(x) -> np.ndarray:
    if isinstance(x, StateVector):
        return x.to_array()
    return np.ascontiguousarray(x, dtype=float)


def eval_rhs(params: MicrogridParams | PerUnitParams, x) -> np.ndarray:
    """Time derivative of the grid state, in per unit per second.

    ``x`` may be a :class:`StateVector` or a flat array in the same layout.
    Raises :class:`SingularState` if any modulation index or the bus voltage
    is not strictly positive.
    """
    y = _as_array(x)
    p = pack(params)
    if y.shape[0] != 3 * int(p[0]) + 1:
        raise ValueError(f"state has length {y.shape[0]}, expected {3 * int(p[0]) + 1}")
    out, status = _kernels.rhs_grid(p, y)
    if status != _kernels.OK:
        raise SingularState(f"alpha and v must be positive, got state {y.tolist()}")
    return out


def battery_side_power(x) -> np.ndarray:
    """Power at each converter's battery terminal, ``(v / alpha) * i_B``."""
    s = x if isinstance(x, StateVector) else StateVector.from_array(x)
    return (s.v / s.alpha) * s.i_b


def bus_side_power(x) -> np.ndarray:
    """Power each converter injects into the bus, ``v * (i_B / alpha)``."""
    s = x if isinstance(x, StateVector) else StateVector.from_array(x)
    return s.v * (s.i_b / s.alpha)
