"""Noise-robustness benchmark: variance force on versus off.

Every cell of the grid builds a phantom, corrupts it with one noise draw,
computes one shared initialization, and then runs the solver twice with
configurations that are identical except for the variance force weight.
Sharing the initialization and the noise keeps the comparison a controlled
experiment in the single parameter.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ContractError
from .image import Partition
from .initialization import IglimConfig, multi_iglim
from .metrics import MetricsReport, score
from .phantoms import PHASES_BY_KIND, Phantom, add_gaussian_noise, make_phantom
from .solver import EnergyTrace, SolverConfig, solve

THREADS_ENV_VAR = "ICTMSEG_THREADS"

BENCH_CSV_HEADER = "case,variance,p,accuracy,iters,seconds"


@dataclass(frozen=True)
class ComparisonResult:
    """Outcome of one plain-versus-variance-force cell."""

    init: Partition
    report_plain: MetricsReport
    report_lvf: MetricsReport
    trace_plain: EnergyTrace
    trace_lvf: EnergyTrace
    partition_plain: Partition
    partition_lvf: Partition
    seconds_plain: float
    seconds_lvf: float


def compare_lvf(
    phantom: Phantom,
    variance: float,
    scfg_plain: SolverConfig,
    scfg_lvf: SolverConfig,
    iglim: IglimConfig,
    seed: int,
) -> ComparisonResult:
    """Run both solver configurations on one noisy instance.

    The two configurations must agree everywhere except the variance force
    weight, with the plain one at exactly 0. The second weight is normally
    positive, but 0 is allowed so identical-configuration sanity checks can
    confirm the harness adds no nondeterminism of its own.
    """
    if scfg_plain.model.lvf_weight != 0.0:
        raise ContractError("plain configuration must have variance force weight 0")
    if replace(scfg_plain, model=replace(scfg_plain.model, lvf_weight=0.0)) != replace(
        scfg_lvf, model=replace(scfg_lvf.model, lvf_weight=0.0)
    ):
        raise ContractError(
            "comparison configurations must be identical except the force weight"
        )

    noisy = add_gaussian_noise(phantom.image, variance, seed)
    init = multi_iglim(noisy, iglim, seed)

    res_plain = solve(noisy, init, scfg_plain)
    res_lvf = solve(noisy, init, scfg_lvf)
    return ComparisonResult(
        init=init,
        report_plain=score(res_plain.partition, phantom.truth),
        report_lvf=score(res_lvf.partition, phantom.truth),
        trace_plain=res_plain.trace,
        trace_lvf=res_lvf.trace,
        partition_plain=res_plain.partition,
        partition_lvf=res_lvf.partition,
        seconds_plain=sum(r.seconds for r in res_plain.trace.rows),
        seconds_lvf=sum(r.seconds for r in res_lvf.trace.rows),
    )


@dataclass(frozen=True)
class BenchRow:
    case: str
    variance: float
    p: float
    accuracy: float
    iters: int
    seconds: float

    def csv_line(self) -> str:
        return (
            f"{self.case},{self.variance:g},{self.p:g},"
            f"{self.accuracy:.6f},{self.iters},{self.seconds:.6f}"
        )


@dataclass(frozen=True)
class BenchCell:
    """One grid cell: all rows plus artifacts, or the failure message."""

    case: str
    variance: float
    rows: tuple[BenchRow, ...] = ()
    comparison: ComparisonResult | None = None
    error: str | None = None


def worker_count() -> int:
    """Parallelism cap from the environment, default 1."""
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_grid(
    cases: list[str],
    variances: list[float],
    size: int,
    scfg_plain: SolverConfig,
    scfg_lvf: SolverConfig,
    iglim_lam: float,
    iglim_alpha: float,
    iglim_rounds: int,
    seed: int,
    rgb: bool = False,
) -> list[BenchCell]:
    """Evaluate every (case, variance) cell; failures are recorded, not raised.

    Cells are independent, so they may run on a small thread pool (size from
    ICTMSEG_THREADS); results always come back in grid order.
    """
    jobs = [
        (case, variance, index)
        for index, (case, variance) in enumerate(
            (c, v) for c in cases for v in variances
        )
    ]

    def run_cell(job) -> BenchCell:
        case, variance, index = job
        try:
            phantom = make_phantom(case, size, seed=seed, rgb=rgb)
            iglim = IglimConfig(
                phases=PHASES_BY_KIND[case],
                lam=iglim_lam,
                alpha=iglim_alpha,
                denoise_rounds=iglim_rounds,
            )
            cmp = compare_lvf(phantom, variance, scfg_plain, scfg_lvf, iglim, seed + index)
            rows = (
                BenchRow(
                    case,
                    variance,
                    0.0,
                    cmp.report_plain.accuracy,
                    cmp.trace_plain.iterations,
                    cmp.seconds_plain,
                ),
                BenchRow(
                    case,
                    variance,
                    scfg_lvf.model.lvf_weight,
                    cmp.report_lvf.accuracy,
                    cmp.trace_lvf.iterations,
                    cmp.seconds_lvf,
                ),
            )
            return BenchCell(case, variance, rows=rows, comparison=cmp)
        except Exception as exc:  # noqa: BLE001 - cell failures become rows
            return BenchCell(case, variance, error=f"{type(exc).__name__}: {exc}")

    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_cell, jobs))
    return [run_cell(job) for job in jobs]


def write_bench_csv(cells: list[BenchCell], path) -> None:
    lines = [BENCH_CSV_HEADER]
    for cell in cells:
        for row in cell.rows:
            lines.append(row.csv_line())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
