//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All of the linear algebra goes through `nalgebra`, so the bound is
//! `RealField`; conversions from literal constants go through `num-traits`.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Floating point scalar usable by the bracket machinery (`f32` or `f64`).
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal must be representable")
    }

    /// Lossy conversion used for reporting.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the type.
    fn machine_eps() -> Self;

    /// Maps a tolerance tuned for `f64` onto this type.
    ///
    /// Tolerances in this crate are stated for double precision. For a
    /// coarser type they are inflated by the square root of the epsilon
    /// ratio, and never allowed below a small multiple of epsilon.
    fn tol(base: f64) -> Self {
        let ratio = Self::machine_eps().to_f64_lossy() / f64::EPSILON;
        if ratio <= 1.0 {
            return Self::of(base);
        }
        let scaled = base * ratio.sqrt();
        Self::of(scaled.max(64.0 * Self::machine_eps().to_f64_lossy()))
    }
}

impl Real for f32 {
    fn machine_eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn machine_eps() -> Self {
        f64::EPSILON
    }
}

/// Default numerical thresholds (stated for `f64`, see [`Real::tol`]).
pub mod tolerances {
    /// Jacobi residual threshold, relative to `1 + |mu|^2`.
    pub const JACOBI: f64 = 1e-10;
    /// Singular values below this fraction of the largest one count as zero.
    pub const RANK: f64 = 1e-8;
    /// `|(ad X)^n| <= NILP * |ad X|^n` decides nilpotency.
    pub const NILP: f64 = 1e-6;
    /// `|det h| <= SINGULAR * |h|^n` rejects a gauge as singular.
    pub const SINGULAR: f64 = 1e-12;
    /// Symmetry check for endomorphisms.
    pub const SYM: f64 = 1e-10;
    /// Spectral real parts below this are treated as zero.
    pub const SIGMA_THRESHOLD: f64 = 1e-7;
    /// Criticality residual for the moment-map energy gradient flow.
    pub const CRIT: f64 = 1e-9;
    /// Eigenvalue clustering for gradings.
    pub const EIG: f64 = 1e-6;
    /// Negative-component threshold for the gauge check, relative to `|mu|`.
    pub const GAUGE: f64 = 1e-8;
    /// Componentwise agreement of stratum labels.
    pub const LABEL: f64 = 1e-5;
    /// Ricci-flatness threshold, relative to `1 + |mu|^2`.
    pub const FLAT: f64 = 1e-9;
    /// Soliton residual threshold, relative to `1 + |Ric|`.
    pub const SOLITON: f64 = 1e-8;
    /// Einstein threshold on the fitted derivation, relative to `1 + |Ric|`.
    pub const EINSTEIN: f64 = 1e-8;
    /// Allowed drift of `scal*` away from `-1` on the normalized flow.
    pub const DRIFT: f64 = 1e-7;
    /// Tail threshold for the rigidity function.
    pub const RIGIDITY: f64 = 1e-8;
    /// Fingerprint agreement.
    pub const FINGERPRINT: f64 = 1e-6;
    /// Spurious imaginary parts of the linearization spectrum.
    pub const IMAG: f64 = 1e-8;
}
