"""renewalab: renewal measures of transient Markov chains on the line.

Exact windowed iteration for lattice chains, reproducible Monte Carlo for
everything else, domination certificates, certified visit bounds, and limit
verdicts, behind a compiled core with a pure-numpy fallback.
"""

from ._kernels import active_backend, get_backend
from .chains import (
    BUILTIN_NAMES,
    ChainSpec,
    ChainError,
    EscapeCertificate,
    InitialLaw,
    MarkovKernel,
    build_chain,
    homogeneity_gap,
    limit_statistics,
    load_spec,
    mean_jump,
    sample_step,
    save_spec,
)
from .laws import ContinuousLaw, JumpLaw, LatticeLaw, LawError, TailBound, point_mass, uniform_law
from .exact import (
    AccuracyError,
    GreenFunction,
    MeasureVector,
    RenewalMeasure,
    StateWindow,
    WindowError,
    default_window,
    green_function,
    iterate_distribution,
    positive_probability_bounds,
    renewal_measure,
)
from .montecarlo import (
    HorizonError,
    HorizonWarning,
    MCEstimate,
    PositiveProbEstimate,
    estimate_positive_prob,
    estimate_renewal,
    estimate_stay_above,
    write_mc_csv,
)
from .bounds import (
    BoundInputError,
    BoundReport,
    CertificateError,
    DominationCertificate,
    VerificationTable,
    VisitBoundInputs,
    check_domination,
    exceedance_floor,
    stay_above_exact_nn,
    truncated_drift_floor,
    verify_bound,
    visit_bound,
)
from .limits import (
    CounterexampleReport,
    LimitReport,
    counterexample_growth,
    flatness_check,
    harmonic_ratio,
    limit_report,
    spike_reference,
    write_counterexample_csv,
    write_limit_csv,
)

__version__ = "0.1.0"
