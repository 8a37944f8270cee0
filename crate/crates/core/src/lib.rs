//! Bracket flows on solvable Lie algebras: curvature of left-invariant
//! metrics, real/imaginary type, the stratification by the energy of the
//! moment map, scal*-normalized gauged flows, soliton certificates and the
//! linearization at solitons.
//!
//! Everything is generic over the scalar through [`scalar::Real`]; the
//! aliases at the crate root fix `f64`.

// `!(x > 0)` rejects NaN on purpose; index loops mirror the tensor formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bracket;
pub mod catalog;
pub mod curvature;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod io;
pub mod linalg;
pub mod linearization;
pub mod ode;
pub mod samples;
pub mod scalar;
pub mod soliton;
pub mod spectral;
pub mod stratification;

pub use bracket::{act, derivation_space, is_nilpotent, is_solvable, jacobi_residual, nilradical, pi_action};
pub use curvature::{curvature_pack, moment_map, oracle_ricci};
pub use error::{Error, Result};
pub use flow::{detect_soliton_convergence, integrate, recover_gauge, Termination, Variant};
pub use linearization::{l_operator, p_operator, LinearizationReport};
pub use scalar::Real;
pub use soliton::{construct_critical, fingerprint, normalize_soliton, same_orbit_on, soliton_residual, SolitonKind};
pub use spectral::{classify_type, is_flat_bracket, TypeKind, TypeReport};
pub use stratification::{beta_decomposition, check_gauged, project_qbeta, stratum_label};

pub type BracketTensor = bracket::BracketTensor<f64>;
pub type Endomorphism = linalg::Endomorphism<f64>;
pub type CurvaturePack = curvature::CurvaturePack<f64>;
pub type StratumLabel = stratification::StratumLabel<f64>;
pub type BetaDecomposition = stratification::BetaDecomposition<f64>;
pub type FlowSpec = flow::FlowSpec<f64>;
pub type FlowTrajectory = flow::FlowTrajectory<f64>;
pub type GaugePath = flow::GaugePath<f64>;
pub type SolitonCertificate = soliton::SolitonCertificate<f64>;
pub type NormalizedSoliton = soliton::NormalizedSoliton<f64>;
pub type CatalogEntry = catalog::CatalogEntry<f64>;
