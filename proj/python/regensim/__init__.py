"""Regenerative simulation for Harris-recurrent Markov processes."""

from _regensim import (  # noqa: F401
    FnParams,
    LyapunovV,
    Minorization,
    Model,
    NumericalError,
    PhiSpec,
    ValidationError,
    __version__,
    compute_minorization,
    fn_bound_explicit,
    fn_bound_explicit_raw,
    fn_statement_bound,
    generator_value,
    h_phi,
    h_phi_inv,
    make_model,
    rate,
    rate_integral,
    regen_stats,
    resolvent_density,
    sample_path,
    sample_skeleton,
    transition_density,
    verify_drift,
)
