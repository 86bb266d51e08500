//! Steklov spectra, zeta functions and zeta-invariants of positive weights
//! on the unit circle.
//!
//! A positive smooth `a` defines the weighted Dirichlet-to-Neumann operator
//! `Λ_a = a^{1/2} Λ a^{1/2}` on the circle; its spectrum is the Steklov
//! spectrum of the planar domain with boundary density `a^{-1}`.

pub mod conformal;
pub mod error;
pub mod fourier;
pub mod invariants;
pub mod operators;
pub mod random;
pub mod riemann;
pub mod spectrum;
pub mod sum;
pub mod zeta;

pub use conformal::{gallery, moebius_pullback, weight_from_map, DomainMap, Gallery, MoebiusMap, Orientation};
pub use error::{Error, Result};
pub use fourier::{boundary_length, normalize, FourierSeries, GridSampling, WeightFunction};
pub use invariants::{edward_z1, estimate_residuals, n_coefficient, zeta_invariant, IndexTuple, InvariantReport};
pub use operators::{assemble_fourier, assemble_phi, Basis, FourierOperator, OperatorMatrix};
pub use random::{random_moebius, random_weight};
pub use riemann::riemann_zeta;
pub use spectrum::{
    asymptotic_residuals, classical_inequality_report, rayleigh_quotient, steklov_spectrum, SteklovSpectrum,
};
pub use zeta::{
    conformal_defect, growth_certificate, psi_curve, sandwich_check, trace_r, zeta_a, Estimator,
    GrowthCertificate, ZetaCurve, ZetaEngine,
};
