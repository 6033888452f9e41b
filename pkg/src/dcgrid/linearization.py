"""Jacobian of the grid vector field, in closed form and by finite differences."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .equilibrium import RESIDUAL_LIMIT, Equilibrium
from .errors import NotAtEquilibrium
from .model import MicrogridParams, PerUnitParams, eval_rhs, to_per_unit

DEFAULT_STEP = 1e-6


@dataclass(frozen=True)
class JacobianMatrix:
    entries: np.ndarray

    @property
    def n(self) -> int:
        return (self.entries.shape[0] - 1) // 3

    @property
    def block_layout(self) -> dict[str, slice]:
        n = self.n
        return {
            "i": slice(0, n),
            "alpha": slice(n, 2 * n),
            "alpha_ref": slice(2 * n, 3 * n),
            "v": slice(3 * n, 3 * n + 1),
        }

    def block(self, row: str, col: str) -> np.ndarray:
        lay = self.block_layout
        return self.entries[lay[row], lay[col]]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            for row in self.entries:
                writer.writerow([format(float(a), ".17e") for a in row])


def jacobian_at(pu: PerUnitParams, x: np.ndarray) -> np.ndarray:
    """Closed-form partial derivatives of ``eval_rhs`` at an arbitrary state.

    Every ``alpha_ref`` row sees every branch current and modulation index
    through the ``-k_p * dv/dt`` term, so blocks (3,1) and (3,2) are dense.
    """
    n = pu.n
    i_b = x[:n]
    a = x[n:2 * n]
    a_ref = x[2 * n:3 * n]
    v = x[3 * n]
    e, r, l, tau, droop = pu.e_b, pu.r_b, pu.l_pu, pu.tau, pu.droop

    f_i = (e - r * i_b - v / a) / l

    # current equations
    di_di = -r / l
    di_da = v / (l * a**2)
    di_dv = -1.0 / (l * a)

    # bus equation
    dv_di = 1.0 / (pu.c_pu * a)
    dv_da = -i_b / (pu.c_pu * a**2)
    dv_dv = pu.p_net / (pu.c_pu * v**2)

    # g_j = d/dt (i_B/alpha)
    dg_di = di_di / a + 1.0 / (tau * a) - a_ref / (tau * a**2)
    dg_da = (di_da / a - f_i / a**2 - i_b / (tau * a**2)
             + 2.0 * i_b * a_ref / (tau * a**3))
    dg_dar = -i_b / (tau * a**2)
    dg_dv = di_dv / a

    # integral term v_0 - v - D (i_B/alpha - i_0)
    dh_di = -droop / a
    dh_da = droop * i_b / a**2

    k_p, k_i = pu.k_p, pu.k_i
    idx_i = np.arange(n)
    idx_a = n + idx_i
    idx_ar = 2 * n + idx_i
    iv = 3 * n

    A = np.zeros((3 * n + 1, 3 * n + 1))
    A[idx_i, idx_i] = di_di
    A[idx_i, idx_a] = di_da
    A[idx_i, iv] = di_dv

    A[idx_a, idx_a] = -1.0 / tau
    A[idx_a, idx_ar] = 1.0 / tau

    A[2 * n:3 * n, 0:n] = -k_p * np.broadcast_to(dv_di, (n, n))
    A[2 * n:3 * n, n:2 * n] = -k_p * np.broadcast_to(dv_da, (n, n))
    A[idx_ar, idx_i] += -k_p * droop * dg_di + k_i * dh_di
    A[idx_ar, idx_a] += -k_p * droop * dg_da + k_i * dh_da
    A[idx_ar, idx_ar] = -k_p * droop * dg_dar
    A[idx_ar, iv] = -k_p * (dv_dv + droop * dg_dv) - k_i

    A[iv, 0:n] = dv_di
    A[iv, n:2 * n] = dv_da
    A[iv, iv] = dv_dv
    return A


def paper_structure(A: np.ndarray) -> np.ndarray:
    """Zero the couplings the published block layout omits.

    Blocks (3,1) and (3,2) are reduced to their diagonals and block (3,3) is
    cleared, reproducing the literal structure of the published matrix.
    """
    n = (A.shape[0] - 1) // 3
    out = A.copy()
    ar = slice(2 * n, 3 * n)
    for cols in (slice(0, n), slice(n, 2 * n)):
        blk = out[ar, cols]
        out[ar, cols] = np.diag(np.diag(blk))
    out[ar, ar] = 0.0
    return out


def analytic_jacobian(params: MicrogridParams, eq: Equilibrium,
                      paper_layout: bool = False) -> JacobianMatrix:
    if not eq.residual_norm < RESIDUAL_LIMIT:
        raise NotAtEquilibrium(
            f"residual {eq.residual_norm:.3g} is not below {RESIDUAL_LIMIT}")
    pu = to_per_unit(params)
    A = jacobian_at(pu, eq.state.to_array())
    if paper_layout:
        A = paper_structure(A)
    return JacobianMatrix(A)


def numeric_jacobian(params: MicrogridParams | PerUnitParams, x,
                     h: float = DEFAULT_STEP) -> JacobianMatrix:
    """Central differences, one column per state, step ``h * max(|x_k|, 1)``."""
    pu = params if isinstance(params, PerUnitParams) else to_per_unit(params)
    x0 = x.to_array() if hasattr(x, "to_array") else np.asarray(x, dtype=float)
    dim = x0.shape[0]
    A = np.empty((dim, dim))
    for k in range(dim):
        step = h * max(abs(x0[k]), 1.0)
        xp = x0.copy()
        xm = x0.copy()
        xp[k] += step
        xm[k] -= step
        A[:, k] = (eval_rhs(pu, xp) - eval_rhs(pu, xm)) / (2.0 * step)
    return JacobianMatrix(A)


def max_relative_error(A: np.ndarray, B: np.ndarray) -> float:
    """``max |A - B| / max(1, |A|)`` over all entries."""
    return float(np.max(np.abs(A - B) / np.maximum(1.0, np.abs(A))))
