"""
Benchmark problems, method comparisons and CSV output.

A comparison runs the reference method first and then every requested method on the same phase-space grid,
and reports per time step the relative 2-norm differences of the low-order phi_bar and phi_hat against the
reference, iteration counts, balance residuals and the largest |lambda|.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional
import logging

import numpy as np
import pandas as pd

from .approximations import MethodKind
from .driver import IterationControl, TimeStepper, persisted_bytes, angular_values
from .errors import ConfigurationError, NonConvergenceError, SingularSystemError
from .grid import BoundaryAndInitial, MaterialField, build_double_gauss_quadrature, build_uniform_mesh

logger = logging.getLogger(__name__)

NS_PER_S = 1e9
FLOAT_FORMAT = "%.17g"
SNAPSHOT_COLUMNS = ["step", "time", "cell", "x", "phi_bar", "phi_hat", "j_bar", "j_hat", "lambda"]


@dataclass(frozen=True)
class ProblemSpec:
    """
    Parameters of a slab problem with constant data.

    Lengths are in cm, cross sections in 1/cm, times in ns and the particle speed in cm/s.
    """
    name: str = "custom"
    domain_length: float = 5.0
    cell_count: int = 100
    points_per_half: int = 4
    sigma_t: float = 0.1
    sigma_s: float = 0.05
    source: float = 0.0
    inflow_left: float = 0.0
    inflow_right: float = 0.0
    initial_flux: float = 0.0
    speed: float = 3e10
    t_end: float = 1.0
    dt: float = 0.02
    tolerance: float = 1e-8
    tolerance_mode: str = "relative"
    max_iterations: int = 200
    method: str = "reference"
    output: str = "output"

    def __post_init__(self):
        physical = ("domain_length", "sigma_t", "sigma_s", "source", "inflow_left", "inflow_right",
                    "initial_flux", "speed", "t_end", "dt", "tolerance")
        negative = [name for name in physical if getattr(self, name) < 0]
        if negative:
            raise ConfigurationError(f"Parameters must be non-negative: {', '.join(negative)}")
        if self.sigma_s > self.sigma_t:
            raise ConfigurationError(f"sigma_s = {self.sigma_s} exceeds sigma_t = {self.sigma_t}.")
        if self.cell_count < 1 or self.points_per_half < 1 or self.max_iterations < 1:
            raise ConfigurationError("Cell count, points per half-range and max_iterations must be at least 1.")
        if self.dt <= 0 or self.speed <= 0:
            raise ConfigurationError("Time step and particle speed must be positive.")
        if self.tolerance_mode not in ("relative", "absolute"):
            raise ConfigurationError(f"Unknown tolerance mode '{self.tolerance_mode}'.")
        steps = round(self.t_end / self.dt)
        if steps < 1 or abs(steps * self.dt - self.t_end) > 1e-12 * max(1.0, self.t_end):
            raise ConfigurationError(f"Time step {self.dt} does not divide the end time {self.t_end}.")

    @property
    def step_count(self) -> int:
        return round(self.t_end / self.dt)

    @property
    def speed_cm_per_ns(self) -> float:
        return self.speed / NS_PER_S

    @property
    def sigma_a(self) -> float:
        return self.sigma_t - self.sigma_s

    def stepper(self, method: MethodKind, threads: int = 1) -> TimeStepper:
        """Builds the grid, data and time stepper of this problem for one method."""
        mesh = build_uniform_mesh(self.domain_length, self.cell_count)
        quadrature = build_double_gauss_quadrature(self.points_per_half)
        materials = MaterialField.uniform(mesh, self.sigma_t, self.sigma_s, self.source)
        boundary = BoundaryAndInitial.isotropic(quadrature, mesh, self.inflow_left, self.inflow_right,
                                                self.initial_flux)
        control = IterationControl(self.tolerance, self.max_iterations, self.tolerance_mode == "relative")
        return TimeStepper(mesh, quadrature, materials, boundary, method, self.speed_cm_per_ns, control, threads)


BUILTIN_PROBLEMS = {
    # high-energy photons, fast change rates
    "test-a": ProblemSpec(name="test-a", domain_length=5.0, cell_count=100, points_per_half=4, sigma_t=0.1,
                          sigma_s=0.05, source=0.0, inflow_left=100.0, inflow_right=0.0, initial_flux=1e-3,
                          speed=3e10, t_end=1.0, dt=0.02, tolerance=1e-8, tolerance_mode="absolute"),
    # optically thick, highly diffusive
    "test-b": ProblemSpec(name="test-b", domain_length=5.0, cell_count=25, points_per_half=4, sigma_t=100.0,
                          sigma_s=100.0 - 1e-2, source=1e-2, inflow_left=0.0, inflow_right=0.0,
                          initial_flux=1e-3, speed=3e10, t_end=0.4, dt=0.02, tolerance=1e-8,
                          tolerance_mode="absolute"),
}


def builtin_problem(name: str) -> ProblemSpec:
    """
    Returns a built-in benchmark problem ("test-a" or "test-b").

    Raises
    ------
    ConfigurationError
        For an unknown name.
    """
    try:
        return BUILTIN_PROBLEMS[name]
    except KeyError:
        raise ConfigurationError(f"Unknown problem '{name}', expected one of: {', '.join(BUILTIN_PROBLEMS)}") from None


class L2Error(NamedTuple):
    value: float
    relative: bool


def relative_l2_error(candidate, reference) -> L2Error:
    """
    ||candidate - reference||_2 / ||reference||_2.

    When the reference norm is zero the absolute norm ||candidate||_2 is returned with ``relative`` False.
    """
    candidate = np.asarray(candidate, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if candidate.shape != reference.shape:
        raise ConfigurationError("Compared sequences must have the same length.")
    norm = float(np.linalg.norm(reference))
    if norm == 0.0:
        return L2Error(float(np.linalg.norm(candidate)), False)
    return L2Error(float(np.linalg.norm(candidate - reference)) / norm, True)


@dataclass
class MethodRun:
    """Outcome of one method on one problem."""
    method: MethodKind
    snapshots: pd.DataFrame
    steps: pd.DataFrame
    persisted_bytes: int
    angular_values: int
    failure: Optional[str] = None


@dataclass
class ErrorReport:
    """Per-step comparison table plus per-method summary."""
    comparison: pd.DataFrame
    summary: pd.DataFrame
    failures: Dict[str, str] = field(default_factory=dict)

    def final_error(self, method: str, quantity: str = "phi_bar") -> float:
        return float(self.comparison[f"{method}_{quantity}_error"].iloc[-1])


def run_method(problem: ProblemSpec, method: MethodKind, threads: int = 1) -> MethodRun:
    """
    Runs one method over the whole time interval.

    A nonconvergence or singular system stops the run; the steps completed so far are kept and the failure
    message is recorded.
    """
    stepper = problem.stepper(method, threads)
    centers = stepper.mesh.centers
    cells = np.arange(1, stepper.mesh.cell_count + 1)
    snapshots, steps = [], []
    failure = None
    logger.info(f"Running {problem.name} with method {method.value} ({problem.step_count} steps)")
    try:
        for result in stepper.run(problem.dt, problem.step_count):
            low_order = result.low_order
            snapshots.append(pd.DataFrame({
                "step": result.step_index, "time": result.time, "cell": cells, "x": centers,
                "phi_bar": low_order.scalar_mean, "phi_hat": low_order.scalar_slope,
                "j_bar": low_order.current_mean, "j_hat": low_order.current_slope, "lambda": result.rate,
            }))
            steps.append({
                "step": result.step_index, "time": result.time, "iterations": result.iterations,
                "balance": result.balance_residual, "max_lambda": float(np.max(np.abs(result.rate))),
            })
    except (NonConvergenceError, SingularSystemError) as error:
        failure = str(error)
        logger.error(f"Method {method.value} aborted: {failure}")
    frame = pd.concat(snapshots, ignore_index=True) if snapshots else pd.DataFrame(columns=SNAPSHOT_COLUMNS)
    return MethodRun(
        method=method,
        snapshots=frame,
        steps=pd.DataFrame(steps, columns=["step", "time", "iterations", "balance", "max_lambda"]),
        persisted_bytes=persisted_bytes(method, stepper.mesh.cell_count, stepper.quadrature.count),
        angular_values=angular_values(method, stepper.mesh.cell_count, stepper.quadrature.count),
        failure=failure,
    )


def write_run(run: MethodRun, output_dir) -> None:
    """Writes the snapshot file and the per-step file of a run."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    run.snapshots.to_csv(output_dir / f"{run.method.value}.csv", index=False, float_format=FLOAT_FORMAT)
    run.steps.to_csv(output_dir / f"{run.method.value}_steps.csv", index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {run.method.value} results to {output_dir}")


def _step_errors(snapshots: pd.DataFrame, reference: pd.DataFrame, step_count: int, method: str) -> pd.DataFrame:
    rows = []
    by_step = dict(tuple(snapshots.groupby("step"))) if len(snapshots) else {}
    reference_by_step = dict(tuple(reference.groupby("step")))
    for step in range(1, step_count + 1):
        row = {"step": step}
        if step in by_step and step in reference_by_step:
            candidate, target = by_step[step], reference_by_step[step]
            row[f"{method}_phi_bar_error"] = relative_l2_error(candidate["phi_bar"], target["phi_bar"]).value
            row[f"{method}_phi_hat_error"] = relative_l2_error(candidate["phi_hat"], target["phi_hat"]).value
        else:
            row[f"{method}_phi_bar_error"] = np.nan
            row[f"{method}_phi_hat_error"] = np.nan
        rows.append(row)
    return pd.DataFrame(rows)


def run_comparison(problem: ProblemSpec, methods: List[MethodKind], output_dir=None, threads: int = 1,
                   jobs: int = 1) -> ErrorReport:
    """
    Compares methods against the reference method on the same grid.

    Parameters
    ----------
    problem : ProblemSpec
    methods : list of MethodKind
        Methods to run. Without the reference method, ``reference.csv`` must already exist in ``output_dir``.
    output_dir : str or Path, optional
        Where to write per-method files, ``comparison.csv`` and ``summary.csv``; nothing is written when None.
    threads : int
        Worker threads for the transport sweep.
    jobs : int
        Methods other than the reference run as this many concurrent jobs. Each job owns its stepper, and
        files are written once all jobs are done.

    Returns
    -------
    ErrorReport
    """
    ordered = sorted(set(methods), key=lambda kind: list(MethodKind).index(kind))
    runs = {}
    if MethodKind.REFERENCE in ordered:
        reference_run = run_method(problem, MethodKind.REFERENCE, threads)
        if reference_run.failure is not None:
            raise NonConvergenceError(f"Reference run failed: {reference_run.failure}", 0, [])
        runs[MethodKind.REFERENCE] = reference_run
        reference = reference_run.snapshots
    else:
        cached = Path(output_dir or ".") / "reference.csv"
        if not cached.exists():
            raise ConfigurationError(f"No reference method requested and no cached reference at {cached}")
        logger.info(f"Using cached reference solution {cached}")
        reference = pd.read_csv(cached, float_precision="round_trip")

    others = [method for method in ordered if method is not MethodKind.REFERENCE]
    if jobs > 1 and len(others) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            futures = {method: executor.submit(run_method, problem, method, threads) for method in others}
            for method in others:
                runs[method] = futures[method].result()
    else:
        for method in others:
            runs[method] = run_method(problem, method, threads)

    times = pd.DataFrame({"step": np.arange(1, problem.step_count + 1)})
    times["time"] = times["step"] * problem.dt
    comparison = times
    summary_rows = []
    failures = {}
    for method, run in runs.items():
        name = method.value
        errors = _step_errors(run.snapshots, reference, problem.step_count, name)
        steps = run.steps.drop(columns=["time"]).rename(columns={
            "iterations": f"{name}_iterations", "balance": f"{name}_balance", "max_lambda": f"{name}_max_lambda"})
        comparison = comparison.merge(errors, on="step", how="left").merge(steps, on="step", how="left")
        if run.failure is not None:
            failures[name] = run.failure
        summary_rows.append({
            "method": name,
            "status": "failed" if run.failure else "converged",
            "angular_values": run.angular_values,
            "persisted_bytes": run.persisted_bytes,
            "final_phi_bar_error": errors[f"{name}_phi_bar_error"].iloc[-1],
            "final_phi_hat_error": errors[f"{name}_phi_hat_error"].iloc[-1],
            "mean_iterations": float(run.steps["iterations"].mean()) if len(run.steps) else np.nan,
        })
    report = ErrorReport(comparison, pd.DataFrame(summary_rows), failures)

    if output_dir is not None:
        for run in runs.values():
            write_run(run, output_dir)
        report.comparison.to_csv(Path(output_dir) / "comparison.csv", index=False, float_format=FLOAT_FORMAT)
        report.summary.to_csv(Path(output_dir) / "summary.csv", index=False, float_format=FLOAT_FORMAT)
        logger.info(f"Wrote comparison of {len(runs)} methods to {output_dir}")
    return report


def with_overrides(problem: ProblemSpec, **overrides) -> ProblemSpec:
    """Copy of a problem with some fields replaced; None values are ignored."""
    values = {key: value for key, value in overrides.items() if value is not None}
    return replace(problem, **values)
