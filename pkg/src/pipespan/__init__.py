"""Makespan models, waiting-time statistics, and desk-scale pipelined solvers.

The package answers one question from several angles: how much faster does
a step-synchronized parallel computation get when the per-step barriers are
removed, given that stage times fluctuate?

- :mod:`pipespan.makespan` evaluates both schedules on concrete stage-time
  grids.
- :mod:`pipespan.distributions` gives the analytic answer for uniform,
  exponential and log-normal stage-time noise, plus seeded Monte Carlo.
- :mod:`pipespan.statfit` fits observed run times to those candidate laws
  and tests the fits.
- :mod:`pipespan.krylov` holds desk-scale plain and pipelined solvers whose
  reduction structure is what the model is about, with instrumentation.
- :mod:`pipespan.cli` ties it together on the command line.
"""

from .makespan import (
    MakespanReport,
    StepTimeMatrix,
    asynchronous_makespan,
    deterministic_speedup,
    makespan_report,
    synchronized_makespan,
)
from .quadrature import QuadratureError, integrate
from .distributions import (
    Exponential,
    LogNormal,
    SpeedupEstimate,
    Uniform,
    WaitingDistribution,
    analytic_speedup,
    expected_max,
    format_distribution,
    harmonic_number,
    monte_carlo_speedup,
    parse_distribution,
    replicate_makespans,
    sample_step_times,
    speedup_from_makespans,
)
from .statfit import (
    CandidateFit,
    DegenerateFitError,
    FitReport,
    SampleSet,
    SummaryStats,
    TestResult,
    classify,
    cramer_von_mises,
    empirical_cdf,
    fit_exponential_mle,
    fit_uniform,
    lilliefors_lognormal,
    load_samples,
    summary_stats,
)
from .krylov import (
    BreakdownError,
    KrylovWorkspace,
    SolveReport,
    SparseMatrix,
    cg,
    diagonal,
    gmres,
    laplacian_1d,
    load_csr_text,
    pgmres,
    pipecg,
    save_csr_text,
    spmv,
)

__version__ = "0.1.0"
