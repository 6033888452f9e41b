"""Parameter studies over bus capacitance, branch inductance, droop gain and delay.

Every grid cell is an independent evaluation. Cells are farmed out to a
process pool when ``jobs > 1``, and results always come back in input order,
so CSV output does not depend on the worker count.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DcGridError, NoFeasibleTau
from .model import MicrogridParams
from .simulator import ClassifyControls, SimVerdict, classify
from .stability import assess

log = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 0.2e-3
DEFAULT_C_RANGE = (0.1e-3, 10e-3)
DEFAULT_L_RANGE = (0.1e-3, 5e-3)


def _fmt(x: float | None) -> str:
    if x is None:
        return ""
    return format(float(x), ".17e")


class Criterion(enum.Enum):
    SSASC = "ssasc"
    SIMULATION = "sim"

    @classmethod
    def parse(cls, text: str) -> Criterion:
        for c in cls:
            if c.value == text.lower() or c.name.lower() == text.lower():
                return c
        raise ValueError(f"unknown criterion {text!r}; use 'ssasc' or 'sim'")


def _strictly_increasing(values: Sequence[float]) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


@dataclass(frozen=True)
class SweepGrid:
    c_values: tuple[float, ...]
    l_values: tuple[float, ...]
    d_values: tuple[float, ...]
    criterion: Criterion = Criterion.SSASC

    def __post_init__(self):
        for name in ("c_values", "l_values", "d_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must not be empty")
            if any(not v > 0 for v in vals):
                raise ValueError(f"{name} must be positive")
            if not _strictly_increasing(vals):
                raise ValueError(f"{name} must be strictly increasing")
            object.__setattr__(self, name, vals)

    def triples(self) -> list[tuple[float, float, float]]:
        """All (D, L, C) cells in lexicographic order."""
        return [(d, l, c) for d in self.d_values for l in self.l_values
                for c in self.c_values]

    def __len__(self) -> int:
        return len(self.c_values) * len(self.l_values) * len(self.d_values)


def parallel_map(fn: Callable, items: Iterable, jobs: int = 1) -> list:
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def scan_values(lo: float, hi: float, resolution: float) -> np.ndarray:
    """``lo, lo + res, ...`` up to ``hi`` inclusive, built from integer multiples."""
    if not lo > 0 or not resolution > 0 or hi < lo:
        raise ValueError("need 0 < lo <= hi and resolution > 0")
    count = int(math.floor((hi - lo) / resolution + 1e-9)) + 1
    return lo + resolution * np.arange(count)


# -- per-cell evaluation -------------------------------------------------------

def satisfies(params: MicrogridParams, criterion: Criterion,
              classify_controls: ClassifyControls = ClassifyControls(),
              paper_layout: bool = False) -> bool:
    """Whether one parameter set meets the criterion; infeasible points do not."""
    try:
        if criterion is Criterion.SSASC:
            return assess(params, paper_layout=paper_layout).ssasc
        return classify(params, classify_controls).stable
    except DcGridError as exc:
        log.debug("cell counted as not satisfying: %s", exc)
        return False


@dataclass(frozen=True)
class MinCapResult:
    l_b: float
    droop: float
    c_min: float | None
    resolution: float
    criterion: Criterion
    below_satisfies: bool | None = None

    @property
    def found(self) -> bool:
        return self.c_min is not None


def min_capacitance(base: MicrogridParams, l_b: float, droop: float,
                    c_range: tuple[float, float] = DEFAULT_C_RANGE,
                    resolution: float = DEFAULT_RESOLUTION,
                    criterion: Criterion = Criterion.SSASC,
                    bisect: bool = False,
                    classify_controls: ClassifyControls = ClassifyControls(),
                    paper_layout: bool = False) -> MinCapResult:
    """Smallest C on the scan ``c_range[0] + k * resolution`` meeting the criterion.

    The default is a linear ascending scan, which makes no assumption about how
    stability depends on C. With ``bisect=True`` the criterion is assumed
    monotone in C (unstable below some threshold, stable above it); the result
    then matches the linear scan only when that assumption holds.
    """
    values = scan_values(c_range[0], c_range[1], resolution)
    cell = base.with_design(l_b=l_b, droop=droop)

    def ok(k: int) -> bool:
        return satisfies(cell.with_design(c=float(values[k])), criterion,
                         classify_controls, paper_layout)

    hit = None
    if bisect:
        if ok(len(values) - 1):
            lo, hi = -1, len(values) - 1
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if ok(mid):
                    hi = mid
                else:
                    lo = mid
            hit = hi
    else:
        for k in range(len(values)):
            if ok(k):
                hit = k
                break

    if hit is None:
        return MinCapResult(l_b, droop, None, resolution, criterion)
    below = ok(hit - 1) if hit > 0 else None
    return MinCapResult(l_b, droop, float(values[hit]), resolution, criterion,
                        below_satisfies=below)


@dataclass(frozen=True)
class _MinCapTask:
    base: MicrogridParams
    l_b: float
    droop: float
    c_range: tuple[float, float]
    resolution: float
    criterion: Criterion
    bisect: bool
    classify_controls: ClassifyControls
    paper_layout: bool


def _run_min_cap(task: _MinCapTask) -> MinCapResult:
    return min_capacitance(task.base, task.l_b, task.droop, task.c_range,
                           task.resolution, task.criterion, task.bisect,
                           task.classify_controls, task.paper_layout)


def min_cap_curves(base: MicrogridParams, l_values: Sequence[float],
                   d_values: Sequence[float],
                   c_range: tuple[float, float] = DEFAULT_C_RANGE,
                   resolution: float = DEFAULT_RESOLUTION,
                   criterion: Criterion = Criterion.SSASC, jobs: int = 1,
                   bisect: bool = False,
                   classify_controls: ClassifyControls = ClassifyControls(),
                   paper_layout: bool = False) -> list[MinCapResult]:
    """One minimum-capacitance result per (D, L), ordered by D then L."""
    tasks = [_MinCapTask(base, float(l), float(d), tuple(c_range), resolution,
                         criterion, bisect, classify_controls, paper_layout)
             for d in d_values for l in l_values]
    return parallel_map(_run_min_cap, tasks, jobs)


def write_minc_csv(results: Sequence[MinCapResult], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["D", "L_H", "C_min_F", "criterion", "found"])
        for r in results:
            writer.writerow([_fmt(r.droop), _fmt(r.l_b), _fmt(r.c_min),
                             r.criterion.value, int(r.found)])


# -- r_max maps ------------------------------------------------------------------

@dataclass(frozen=True)
class RmaxRow:
    op: str
    droop: float
    l_b: float
    c: float
    r_max: float
    error: str = ""


def _rmax_cell(task) -> RmaxRow:
    op, base, d, l, c, paper_layout = task
    try:
        r = assess(base.with_design(c=c, l_b=l, droop=d), paper_layout=paper_layout).r_max
        return RmaxRow(op, d, l, c, r)
    except DcGridError as exc:
        return RmaxRow(op, d, l, c, math.nan, f"{type(exc).__name__}: {exc}")


def rmax_map(bases: Mapping[str, MicrogridParams], grid: SweepGrid, jobs: int = 1,
             paper_layout: bool = False) -> list[RmaxRow]:
    """Spectral abscissa on every grid cell for each operating point.

    Rows are ordered by operating point (in mapping order), then D, L, C.
    Cells whose equilibrium or spectrum fails carry the error text instead of
    aborting the sweep.
    """
    tasks = [(op, base, d, l, c, paper_layout)
             for op, base in bases.items() for d, l, c in grid.triples()]
    return parallel_map(_rmax_cell, tasks, jobs)


def write_rmax_csv(rows: Sequence[RmaxRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["op", "D", "L_H", "C_F", "r_max", "error"])
        for r in rows:
            r_text = "" if math.isnan(r.r_max) else _fmt(r.r_max)
            writer.writerow([r.op, _fmt(r.droop), _fmt(r.l_b), _fmt(r.c), r_text, r.error])


# -- sufficiency and tau tuning ----------------------------------------------------

@dataclass(frozen=True)
class SufficiencyCell:
    droop: float
    l_b: float
    c: float
    ssasc: bool
    verdict: SimVerdict | None

    @property
    def counterexample(self) -> bool:
        return self.ssasc and (self.verdict is None or not self.verdict.stable)


def _sufficiency_cell(task) -> SufficiencyCell:
    base, d, l, c, controls, paper_layout, simulate_all = task
    params = base.with_design(c=c, l_b=l, droop=d)
    try:
        ssasc = assess(params, paper_layout=paper_layout).ssasc
    except DcGridError:
        return SufficiencyCell(d, l, c, False, None)
    verdict = None
    if ssasc or simulate_all:
        try:
            verdict = classify(params, controls)
        except DcGridError:
            verdict = None
    return SufficiencyCell(d, l, c, ssasc, verdict)


def sufficiency_check(base: MicrogridParams, grid: SweepGrid, jobs: int = 1,
                      classify_controls: ClassifyControls = ClassifyControls(),
                      paper_layout: bool = False,
                      simulate_all: bool = False) -> list[SufficiencyCell]:
    """Evaluate ``ssasc => simulation stable`` on every (D, L, C) cell.

    Only cells satisfying the eigenvalue test need a simulation for the
    implication; ``simulate_all=True`` simulates every cell anyway.
    """
    tasks = [(base, d, l, c, classify_controls, paper_layout, simulate_all)
             for d, l, c in grid.triples()]
    return parallel_map(_sufficiency_cell, tasks, jobs)


@dataclass(frozen=True)
class TauResult:
    tau_star: float
    table: tuple[tuple[float, int], ...]


def tune_tau(base: MicrogridParams, grid: SweepGrid, tau_candidates: Sequence[float],
             jobs: int = 1, classify_controls: ClassifyControls = ClassifyControls(),
             paper_layout: bool = False, stop_at_first: bool = True) -> TauResult:
    """Smallest delay for which the eigenvalue test is sufficient on the whole grid.

    Candidates are tried in ascending order; the counterexample count of each
    tried candidate is kept in ``table``. With ``stop_at_first=False`` every
    candidate is evaluated.
    """
    taus = [float(t) for t in tau_candidates]
    if not taus:
        raise ValueError("no tau candidates")
    if not _strictly_increasing(taus):
        raise ValueError("tau candidates must be strictly increasing")
    if any(not 0 < t <= 1e-3 for t in taus):
        raise ValueError("tau candidates must lie in (0, 1 ms]")
    table = []
    tau_star = None
    for tau in taus:
        cells = sufficiency_check(base.with_design(tau=tau), grid, jobs,
                                  classify_controls, paper_layout)
        count = sum(c.counterexample for c in cells)
        log.info("tau=%.3g s: %d counterexamples", tau, count)
        table.append((tau, count))
        if count == 0 and tau_star is None:
            tau_star = tau
            if stop_at_first:
                break
    if tau_star is None:
        raise NoFeasibleTau("no candidate delay makes the eigenvalue test sufficient",
                            TauResult(tau_star=math.nan, table=tuple(table)))
    return TauResult(tau_star=tau_star, table=tuple(table))


def write_tau_csv(result: TauResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tau_s", "counterexamples"])
        for tau, count in result.table:
            writer.writerow([_fmt(tau), count])
