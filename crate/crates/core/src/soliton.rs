//! Solvsoliton certificates, scal*-normalization with its structural
//! identities, the critical point attached to a soliton, and orbit
//! fingerprints for comparing flow limits.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bracket::{self, act, ad_map, pi_action, BracketTensor};
use crate::curvature::{curvature_pack, curvature_pack_unchecked, moment_map};
use crate::error::{Error, Result};
use crate::linalg::{self, Endomorphism};
use crate::scalar::{tolerances, Real};
use crate::stratification::{label_from_beta, StratumLabel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolitonKind {
    Einstein,
    NontrivialSoliton,
    NotSoliton,
}

/// Best fit `Ric = c Id + D` with `D` a derivation.
#[derive(Clone, Debug)]
pub struct SolitonCertificate<T: Real> {
    pub c: T,
    pub derivation: Endomorphism<T>,
    /// `|Ric - c Id - D|`.
    pub residual: T,
    pub kind: SolitonKind,
    /// Whether `scal* = -1` already holds.
    pub normalized: bool,
}

impl<T: Real> SolitonCertificate<T> {
    pub fn summary(&self) -> CertificateSummary {
        let n = self.derivation.nrows();
        CertificateSummary {
            c: self.c.to_f64_lossy(),
            derivation: (0..n)
                .map(|i| (0..n).map(|j| self.derivation[(i, j)].to_f64_lossy()).collect())
                .collect(),
            residual: self.residual.to_f64_lossy(),
            kind: self.kind,
            normalized: self.normalized,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateSummary {
    pub c: f64,
    pub derivation: Vec<Vec<f64>>,
    pub residual: f64,
    pub kind: SolitonKind,
    pub normalized: bool,
}

/// Residual threshold for a soliton, relative to `1 + |Ric|`.
pub const SOL_TOL: f64 = 1e-8;
/// Threshold on `|D|` for the Einstein case, relative to `1 + |Ric|`.
pub const EINS_TOL: f64 = 1e-8;

/// Least-squares projection of `Ric` onto `span(Id) + Der(mu)`.
pub fn soliton_residual<T: Real>(mu: &BracketTensor<T>) -> Result<SolitonCertificate<T>> {
    if mu.is_zero() {
        return Err(Error::ZeroBracket);
    }
    let pack = curvature_pack(mu)?;
    let n = mu.dim();
    let ders = bracket::derivation_space(mu);
    let mut cols = vec![linalg::flatten(&DMatrix::<T>::identity(n, n))];
    cols.extend(ders.iter().map(linalg::flatten));
    let g = DMatrix::from_columns(&cols);
    let target = linalg::flatten(&pack.ricci);
    let coef = g
        .clone()
        .svd(true, true)
        .solve(&target, T::tol(tolerances::RANK))
        .map_err(|e| Error::Unsupported(format!("least squares failed: {e}")))?;
    let c = coef[0];
    let mut derivation = DMatrix::zeros(n, n);
    for (k, d) in ders.iter().enumerate() {
        derivation += d * coef[k + 1];
    }
    let residual = (&pack.ricci - DMatrix::identity(n, n) * c - &derivation).norm();
    let scale = T::one() + pack.ricci.norm();
    let kind = if residual > T::tol(SOL_TOL) * scale {
        SolitonKind::NotSoliton
    } else if derivation.norm() <= T::tol(EINS_TOL) * scale {
        SolitonKind::Einstein
    } else {
        SolitonKind::NontrivialSoliton
    };
    Ok(SolitonCertificate {
        c,
        derivation,
        residual,
        kind,
        normalized: (pack.scal_star + T::one()).abs() <= T::tol(tolerances::CRIT),
    })
}

/// A soliton rescaled to `scal* = -1` with `beta+ = Ric* + |Ric*|^2 Id`.
#[derive(Clone, Debug)]
pub struct NormalizedSoliton<T: Real> {
    pub mu: BracketTensor<T>,
    /// Factor applied to the input.
    pub scale: T,
    pub ricci_star: Endomorphism<T>,
    pub beta_plus: Endomorphism<T>,
    /// `|pi(beta+) mu|`.
    pub derivation_residual: T,
    /// Smallest eigenvalue of `beta+`.
    pub min_eigenvalue: T,
    /// Distance between `image(beta+)` and the nilradical.
    pub image_residual: T,
}

/// Rescales a certified soliton to `scal* = -1` and checks that
/// `beta+ = Ric* + |Ric*|^2 Id` is a positive semidefinite derivation whose
/// image is the nilradical.
pub fn normalize_soliton<T: Real>(
    mu: &BracketTensor<T>,
    cert: &SolitonCertificate<T>,
) -> Result<NormalizedSoliton<T>> {
    if cert.kind == SolitonKind::NotSoliton {
        return Err(Error::IdentityViolation("input is not a soliton".into()));
    }
    let s = curvature_pack(mu)?.scal_star;
    if s >= T::zero() {
        return Err(Error::IdentityViolation(format!(
            "scal* = {} is not negative",
            s.to_f64_lossy()
        )));
    }
    let scale = if cert.normalized { T::one() } else { (-s).sqrt().recip() };
    let nu = mu.scaled(scale);
    let pack = curvature_pack_unchecked(&nu);
    let n = nu.dim();
    let rs = pack.ricci_star.clone();
    let beta_plus = &rs + DMatrix::identity(n, n) * rs.norm_squared();
    let tol = T::tol(1e-8);
    let derivation_residual = pi_action(&beta_plus, &nu).norm();
    if derivation_residual > tol {
        return Err(Error::IdentityViolation(format!(
            "beta+ is not a derivation: |pi(beta+) mu| = {:e}",
            derivation_residual.to_f64_lossy()
        )));
    }
    let (vals, vecs) = linalg::sym_eigen_sorted(&beta_plus);
    let min_eigenvalue = vals[0];
    if min_eigenvalue < -tol {
        return Err(Error::IdentityViolation(format!(
            "beta+ has negative eigenvalue {:e}",
            min_eigenvalue.to_f64_lossy()
        )));
    }
    let image_cols: Vec<DVector<T>> = vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > T::tol(tolerances::EIG))
        .map(|(i, _)| vecs.column(i).into_owned())
        .collect();
    let nil = bracket::nilradical(&nu)?;
    let image_residual = if image_cols.len() != nil.basis.ncols() {
        T::of(f64::INFINITY)
    } else if image_cols.is_empty() {
        T::zero()
    } else {
        let image = DMatrix::from_columns(&image_cols);
        linalg::span_residual(&image, &nil.basis).max(linalg::span_residual(&nil.basis, &image))
    };
    if image_residual > T::tol(1e-6) {
        return Err(Error::IdentityViolation(format!(
            "image of beta+ ({}-dim) differs from the nilradical ({}-dim)",
            image_cols.len(),
            nil.basis.ncols()
        )));
    }
    Ok(NormalizedSoliton {
        mu: nu,
        scale,
        ricci_star: rs,
        beta_plus,
        derivation_residual,
        min_eigenvalue,
        image_residual,
    })
}

impl<T: Real> NormalizedSoliton<T> {
    /// Rotates the soliton so that `Ric*` is diagonal with ascending
    /// entries and returns the rotation `k`, the rotated bracket and its
    /// stratum label (with the critical point from [`construct_critical`]).
    pub fn diagonalized(&self) -> Result<(Endomorphism<T>, BracketTensor<T>, StratumLabel<T>)> {
        let (vals, vecs) = linalg::sym_eigen_sorted(&self.ricci_star);
        let k = vecs.transpose();
        let rotated = act(&k, &self.mu)?;
        let critical = construct_critical(&rotated)?;
        let label = label_from_beta(&vals, critical.mu.clone())?;
        Ok((k, rotated, label))
    }
}

/// Output of [`construct_critical`].
#[derive(Clone, Debug)]
pub struct CriticalConstruction<T: Real> {
    /// `h = h_a + Id` on `a + n`.
    pub h: Endomorphism<T>,
    pub mu: BracketTensor<T>,
    /// `|m(h.mu) - Ric*(mu)|`.
    pub moment_residual: T,
    /// `|M(h.mu) - h^{-t} M(mu) h^{-1}|`.
    pub m_part_transform_residual: T,
    /// `|Ric*(h.mu) - h^{-t} Ric*(mu) h^{-1}|`.
    pub ricci_star_transform_residual: T,
}

/// Moves a normalized soliton with `Ric* = beta` along the `a`-block to a
/// critical point of the energy with `m = beta`: `h^t h = Id - K / (2 |beta|^2)`.
pub fn construct_critical<T: Real>(mu: &BracketTensor<T>) -> Result<CriticalConstruction<T>> {
    let pack = curvature_pack(mu)?;
    let beta = pack.ricci_star.clone();
    let beta_sq = beta.norm_squared();
    if beta_sq == T::zero() {
        return Err(Error::ZeroBracket);
    }
    let nil = bracket::nilradical(mu)?;
    let a = &nil.complement;
    let k_a = a.transpose() * &pack.killing * a;
    let r = a.ncols();
    let rhs = DMatrix::<T>::identity(r, r) - k_a * (T::of(0.5) / beta_sq);
    let h_a = if r == 0 {
        rhs.clone()
    } else {
        let (vals, _) = linalg::sym_eigen_sorted(&rhs);
        if vals[0] <= T::zero() {
            return Err(Error::NotPositiveDefinite(format!(
                "Id - K / (2 |beta|^2) has eigenvalue {:e} on the complement of the nilradical",
                vals[0].to_f64_lossy()
            )));
        }
        linalg::spd_sqrt(&rhs).ok_or_else(|| Error::NotPositiveDefinite("square root failed".into()))?
    };
    let h = a * h_a * a.transpose() + &nil.basis * nil.basis.transpose();
    let moved = act(&h, mu)?;
    let m = moment_map(&moved)?;
    let h_inv = h.clone().try_inverse().ok_or(Error::SingularGauge { det: 0.0 })?;
    let moved_pack = curvature_pack_unchecked(&moved);
    let conj = |x: &Endomorphism<T>| h_inv.transpose() * x * &h_inv;
    Ok(CriticalConstruction {
        moment_residual: (&m - &beta).norm(),
        m_part_transform_residual: (&moved_pack.m_part - conj(&pack.m_part)).norm(),
        ricci_star_transform_residual: (&moved_pack.ricci_star - conj(&pack.ricci_star)).norm(),
        h,
        mu: moved,
    })
}

/// Residuals of the structural identities of a soliton with nilradical `n`
/// and complement `a`, maximized over basis vectors.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StructuralChecks {
    /// `|[ad Y, (ad Y)^t]|` for `Y` in `a`.
    pub normal_operator: f64,
    /// `|tr(ad Y (ad X)^t)|` for `Y` in `a`, `X` in `n`.
    pub orthogonality: f64,
    /// `|<M Y, Y> + |ad Y|^2 / 2|`.
    pub m_on_a: f64,
    /// `|<M Y, X>|`.
    pub m_mixed: f64,
}

impl StructuralChecks {
    pub fn max(&self) -> f64 {
        self.normal_operator
            .max(self.orthogonality)
            .max(self.m_on_a)
            .max(self.m_mixed)
    }
}

pub fn structural_checks<T: Real>(mu: &BracketTensor<T>) -> Result<StructuralChecks> {
    let nil = bracket::nilradical(mu)?;
    let m = curvature_pack(mu)?.m_part;
    let mut out = StructuralChecks {
        normal_operator: 0.0,
        orthogonality: 0.0,
        m_on_a: 0.0,
        m_mixed: 0.0,
    };
    for ya in nil.complement.column_iter() {
        let y = ya.into_owned();
        let ad_y = ad_map(mu, &y);
        let normal = linalg::commutator(&ad_y, &ad_y.transpose()).norm();
        out.normal_operator = out.normal_operator.max(normal.to_f64_lossy());
        let my = &m * &y;
        let on_a = my.dot(&y) + ad_y.norm_squared() * T::of(0.5);
        out.m_on_a = out.m_on_a.max(on_a.abs().to_f64_lossy());
        for xa in nil.basis.column_iter() {
            let x = xa.into_owned();
            let ad_x = ad_map(mu, &x);
            out.orthogonality = out
                .orthogonality
                .max(linalg::frob_dot(&ad_y, &ad_x).abs().to_f64_lossy());
            out.m_mixed = out.m_mixed.max(my.dot(&x).abs().to_f64_lossy());
        }
    }
    Ok(out)
}

/// `O(n)`-invariant data of a bracket.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitFingerprint {
    pub ricci_eigenvalues: Vec<f64>,
    pub ricci_star_eigenvalues: Vec<f64>,
    pub moment_eigenvalues: Vec<f64>,
    pub scal: f64,
    pub scal_star: f64,
    pub norm: f64,
    pub nilradical_dim: Option<usize>,
    pub derived_series: Vec<usize>,
}

/// Default agreement tolerance for fingerprints.
pub const FP_TOL: f64 = 1e-4;

pub fn fingerprint<T: Real>(mu: &BracketTensor<T>) -> Result<OrbitFingerprint> {
    let pack = curvature_pack(mu)?;
    let eig = |a: &Endomorphism<T>| -> Vec<f64> {
        linalg::sym_eigen_sorted(a).0.iter().map(|v| v.to_f64_lossy()).collect()
    };
    let m = if mu.is_zero() {
        vec![0.0; mu.dim()]
    } else {
        eig(&moment_map(mu)?)
    };
    Ok(OrbitFingerprint {
        ricci_eigenvalues: eig(&pack.ricci),
        ricci_star_eigenvalues: eig(&pack.ricci_star),
        moment_eigenvalues: m,
        scal: pack.scal.to_f64_lossy(),
        scal_star: pack.scal_star.to_f64_lossy(),
        norm: mu.norm().to_f64_lossy(),
        nilradical_dim: bracket::nilradical(mu).ok().map(|n| n.dim()),
        derived_series: bracket::derived_series(mu)?,
    })
}

impl OrbitFingerprint {
    /// Largest difference over the real entries, or infinity when the
    /// discrete data differ.
    pub fn distance(&self, other: &Self) -> f64 {
        if self.nilradical_dim != other.nilradical_dim
            || self.derived_series != other.derived_series
            || self.ricci_eigenvalues.len() != other.ricci_eigenvalues.len()
        {
            return f64::INFINITY;
        }
        let pairs = self
            .ricci_eigenvalues
            .iter()
            .zip(&other.ricci_eigenvalues)
            .chain(self.ricci_star_eigenvalues.iter().zip(&other.ricci_star_eigenvalues))
            .chain(self.moment_eigenvalues.iter().zip(&other.moment_eigenvalues))
            .chain([
                (&self.scal, &other.scal),
                (&self.scal_star, &other.scal_star),
                (&self.norm, &other.norm),
            ]);
        pairs.fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// Agreement of all fingerprint entries within `tol`. Necessary for two
/// brackets to lie in one `O(n)`-orbit, not sufficient.
pub fn same_orbit_on(a: &OrbitFingerprint, b: &OrbitFingerprint, tol: f64) -> bool {
    a.distance(b) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::samples;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn heisenberg_certificate() {
        let cert = soliton_residual(&catalog::heisenberg3::<f64>()).unwrap();
        assert!((cert.c + 1.5).abs() < 1e-12);
        assert!((&cert.derivation - diag(&[1.0, 1.0, 2.0])).norm() < 1e-12);
        assert!(cert.residual < 1e-12);
        assert_eq!(cert.kind, SolitonKind::NontrivialSoliton);
    }

    #[test]
    fn hyperbolic_is_einstein_and_s3_is_not_a_soliton() {
        let cert = soliton_residual(&catalog::s3_lambda(1.0_f64).unwrap()).unwrap();
        assert!((cert.c + 2.0).abs() < 1e-12);
        assert!(cert.derivation.norm() < 1e-10);
        assert_eq!(cert.kind, SolitonKind::Einstein);
        let cert = soliton_residual(&catalog::s3::<f64>()).unwrap();
        assert_eq!(cert.kind, SolitonKind::NotSoliton);
        assert!(cert.residual > 1e-3);
        assert_eq!(
            soliton_residual(&BracketTensor::<f64>::zeros(3).unwrap()).unwrap_err(),
            Error::ZeroBracket
        );
    }

    #[test]
    fn residual_is_rotation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for mu in [catalog::s3::<f64>(), catalog::s3_lambda(0.3).unwrap()] {
            let k = samples::random_orthogonal::<f64, _>(&mut rng, 3);
            let a = soliton_residual(&mu).unwrap().residual;
            let b = soliton_residual(&act(&k, &mu).unwrap()).unwrap().residual;
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn normalization_identities() {
        let h3 = catalog::heisenberg3::<f64>();
        let ns = normalize_soliton(&h3, &soliton_residual(&h3).unwrap()).unwrap();
        assert!((ns.scale - 2.0_f64.sqrt()).abs() < 1e-12);
        assert!((&ns.ricci_star - diag(&[-1.0, -1.0, 1.0])).norm() < 1e-12);
        assert!((&ns.beta_plus - diag(&[2.0, 2.0, 4.0])).norm() < 1e-12);

        let s31 = catalog::s3_lambda(1.0_f64).unwrap();
        let ns = normalize_soliton(&s31, &soliton_residual(&s31).unwrap()).unwrap();
        assert!((&ns.ricci_star - diag(&[-1.0, 0.0, 0.0])).norm() < 1e-12);
        assert!((&ns.beta_plus - diag(&[0.0, 1.0, 1.0])).norm() < 1e-12);
        assert!(ns.image_residual < 1e-10);

        // idempotent on normalized input
        let again = normalize_soliton(&ns.mu, &soliton_residual(&ns.mu).unwrap()).unwrap();
        assert_eq!(again.mu, ns.mu);

        let s3 = catalog::s3::<f64>();
        assert!(matches!(
            normalize_soliton(&s3, &soliton_residual(&s3).unwrap()),
            Err(Error::IdentityViolation(_))
        ));
    }

    #[test]
    fn critical_point_of_hyperbolic_soliton() {
        let mu = catalog::s3_lambda(1.0_f64).unwrap().scaled(0.5_f64.sqrt());
        let cc = construct_critical(&mu).unwrap();
        assert!((&cc.h - diag(&[0.5_f64.sqrt(), 1.0, 1.0])).norm() < 1e-12);
        assert!(cc.moment_residual < 1e-12);
        assert!(cc.m_part_transform_residual < 1e-12);
        assert!(cc.ricci_star_transform_residual < 1e-12);
        let h3 = catalog::heisenberg3::<f64>().scaled(2.0_f64.sqrt());
        let cc = construct_critical(&h3).unwrap();
        assert!((&cc.h - DMatrix::identity(3, 3)).norm() < 1e-12);
        assert_eq!(cc.mu, h3);
    }

    #[test]
    fn critical_construction_commutes_with_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mu = catalog::s3_lambda(0.5_f64).unwrap();
        let ns = normalize_soliton(&mu, &soliton_residual(&mu).unwrap()).unwrap();
        let k = samples::random_orthogonal::<f64, _>(&mut rng, 3);
        let a = construct_critical(&ns.mu).unwrap();
        let b = construct_critical(&act(&k, &ns.mu).unwrap()).unwrap();
        assert!(act(&k, &a.mu).unwrap().sub(&b.mu).norm() < 1e-10);
    }

    #[test]
    fn structural_identities_on_solitons() {
        for mu in [
            catalog::s3_lambda(1.0_f64).unwrap(),
            catalog::s3_lambda(-0.5).unwrap(),
            catalog::heisenberg3(),
        ] {
            assert!(structural_checks(&mu).unwrap().max() < 1e-10);
        }
        assert!(structural_checks(&catalog::s3::<f64>()).unwrap().normal_operator > 0.1);
    }

    #[test]
    fn fingerprints() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mu = catalog::s3::<f64>();
        let k = samples::random_orthogonal::<f64, _>(&mut rng, 3);
        let a = fingerprint(&mu).unwrap();
        assert!(same_orbit_on(&a, &fingerprint(&act(&k, &mu).unwrap()).unwrap(), 1e-10));
        let h3 = fingerprint(&catalog::heisenberg3::<f64>().scaled(2.0_f64.sqrt())).unwrap();
        let s31 = fingerprint(&catalog::s3_lambda(1.0_f64).unwrap().scaled(0.5_f64.sqrt())).unwrap();
        assert!(!same_orbit_on(&h3, &s31, FP_TOL));
    }
}
