"""Two-party correlation and pointwise density estimation under bit budgets."""

from ._fewbits import (
    BudgetTooSmallError,
    DegenerateScheduleError,
    MalformedTranscriptError,
    ParameterDomainError,
    Schedule,
    SupportOverflowError,
    bernoulli_trial,
    chi2_sstar_bound,
    density_trial,
    elias_gamma_decode,
    elias_gamma_encode,
    family_matrix,
    fit_exponent,
    iproject,
    kernel_coeffs,
    kernel_moment,
    maximal_correlation,
    one_way_schedule,
    phi_psi_ratio,
    predicted_bounds,
    score_normalizers,
    selftest,
    sstar1_grid,
    tetration_schedule,
)

__all__ = [
    "BudgetTooSmallError",
    "DegenerateScheduleError",
    "MalformedTranscriptError",
    "ParameterDomainError",
    "Schedule",
    "SupportOverflowError",
    "bernoulli_trial",
    "chi2_sstar_bound",
    "density_trial",
    "elias_gamma_decode",
    "elias_gamma_encode",
    "family_matrix",
    "fit_exponent",
    "iproject",
    "kernel_coeffs",
    "kernel_moment",
    "maximal_correlation",
    "one_way_schedule",
    "phi_psi_ratio",
    "predicted_bounds",
    "score_normalizers",
    "selftest",
    "sstar1_grid",
    "tetration_schedule",
]
