"""Eigenvalue spectrum of the linearized grid and the strict left-half-plane test."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .equilibrium import Equilibrium, solve_equilibrium
from .errors import ConvergenceFailure
from .linearization import JacobianMatrix, analytic_jacobian
from .model import MicrogridParams

MARGINAL_BAND = 1e-9


def eigenvalues(A: JacobianMatrix | np.ndarray) -> np.ndarray:
    """Full spectrum of a real square matrix, sorted by (Re desc, Im desc).

    Uses LAPACK's Hessenberg/real-Schur QR iteration; complex eigenvalues of
    the real matrix come out in exact conjugate pairs.
    """
    M = A.entries if isinstance(A, JacobianMatrix) else np.asarray(A, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    try:
        lam = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"eigenvalue iteration failed: {exc}") from exc
    lam = np.asarray(lam, dtype=complex)
    order = np.lexsort((-lam.imag, -lam.real))
    return lam[order]


@dataclass(frozen=True)
class StabilityReport:
    eigenvalues: np.ndarray
    r_max: float
    ssasc: bool
    marginal: bool
    equilibrium: Equilibrium | None = None

    @property
    def margin(self) -> float:
        return abs(self.r_max) if self.ssasc else 0.0

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["kind", "re", "im", "ssasc", "marginal"])
            for lam in self.eigenvalues:
                writer.writerow(["eig", format(lam.real, ".17e"), format(lam.imag, ".17e"), "", ""])
            writer.writerow(["r_max", format(self.r_max, ".17e"), "",
                             int(self.ssasc), int(self.marginal)])


def report_from_matrix(A: JacobianMatrix | np.ndarray,
                       equilibrium: Equilibrium | None = None) -> StabilityReport:
    lam = eigenvalues(A)
    r_max = float(lam.real.max())
    return StabilityReport(
        eigenvalues=lam,
        r_max=r_max,
        ssasc=r_max < 0.0,
        marginal=abs(r_max) < MARGINAL_BAND,
        equilibrium=equilibrium,
    )


def assess(params: MicrogridParams, paper_layout: bool = False) -> StabilityReport:
    eq = solve_equilibrium(params)
    A = analytic_jacobian(params, eq, paper_layout=paper_layout)
    return report_from_matrix(A, equilibrium=eq)
