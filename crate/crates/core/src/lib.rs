//! Reversible birth–death chains on `{0, 1, 2, ...}`: recurrence and
//! spectral-gap classification, the H_{-1} certificate for the central limit
//! theorem of additive functionals, and Monte Carlo validation.

pub mod chain;
pub mod error;
pub mod measure;
pub mod observable;
pub mod simulate;
pub mod spectral;
pub mod sum;
pub mod tridiag;

pub use chain::{build_chain, classify, BirthDeathChain, ChainSpec, Regime};
pub use error::{Error, Result};
pub use measure::{detailed_balance_residual, normalized_measure, stationary_weights, StationaryMeasure};
pub use spectral::{
    chen_delta, gap_verdict, jacobi_matrix, spectral_report, top_eigenvalue, witness_rayleigh,
    GapThresholds, GapVerdict, JacobiMatrix, SpectralReport,
};
pub use observable::{
    center, dirichlet_form, e0_form, euler_lagrange_gradient, grad, grad_dual, observable_from_cumulative,
    phi_star, sigma2_resolvent, H1MinusReport, Observable, ObservableSpec, SeriesVerdict, Sigma2Estimate,
};
pub use simulate::{partial_sum, sample_path, sample_stationary_start, variance_growth, CltReport, SimConfig, Start};
