//! Linearization of the scal*-normalized gauged flow at a soliton: the maps
//! `A -> -pi(A) mu` and its adjoint, the operator `P` on `sl_beta`, and the
//! spectrum of the linearized flow on the tangent space of `Sl_beta . mu`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bracket::{self, pi_action, pi_matrix, BracketTensor};
use crate::curvature::{curvature_pack, ricci_star};
use crate::error::{Error, Result};
use crate::flow::{flow_field, Variant};
use crate::linalg::{self, Endomorphism};
use crate::scalar::{tolerances, Real};
use crate::stratification::{project_qbeta, BetaDecomposition};

/// Matrix of `A -> -pi(A) mu` from flattened `gl(n)` to full coefficient
/// vectors.
pub fn delta<T: Real>(mu: &BracketTensor<T>) -> DMatrix<T> {
    -pi_matrix(mu)
}

/// Adjoint of [`delta`] for the Frobenius product on `gl(n)` and the
/// ordered-pair product on brackets.
pub fn delta_adjoint<T: Real>(mu: &BracketTensor<T>) -> DMatrix<T> {
    delta(mu).transpose()
}

fn apply_delta_t_delta<T: Real>(d: &DMatrix<T>, a: &Endomorphism<T>) -> Endomorphism<T> {
    let n = a.nrows();
    linalg::unflatten(&(d.transpose() * (d * linalg::flatten(a))), n)
}

/// `P` evaluated by the closed formulas: on `h_beta` the Killing term is
/// included, on `u_beta` only the `delta^t delta` term.
fn p_closed<T: Real>(d: &DMatrix<T>, killing: &Endomorphism<T>, a: &Endomorphism<T>, in_h: bool) -> Endomorphism<T> {
    let half = T::of(0.5);
    let dtd = apply_delta_t_delta(d, a);
    if in_h {
        (linalg::sym_part(&dtd) + a.transpose() * killing + killing * a) * half
    } else {
        dtd * half
    }
}

/// `P(A) = (d Ric*|_mu (pi(A) mu))_q` by central differences.
fn p_finite_difference<T: Real>(
    mu: &BracketTensor<T>,
    dec: &BetaDecomposition<T>,
    a: &Endomorphism<T>,
    step: T,
) -> Endomorphism<T> {
    let dir = pi_action(a, mu);
    let plus = ricci_star(&mu.axpy(step, &dir));
    let minus = ricci_star(&mu.axpy(-step, &dir));
    project_qbeta(&((plus - minus) / (step * T::of(2.0))), dec)
}

/// Matrix of `P` on `sl_beta` with diagnostics.
#[derive(Clone, Debug)]
pub struct POperator<T: Real> {
    /// `P[(i, j)] = <E_i, P(E_j)>` in the orthonormal basis `dec.sl_beta`.
    pub matrix: DMatrix<T>,
    /// Same, assembled from the finite-difference definition.
    pub matrix_fd: DMatrix<T>,
    /// `|P_closed - P_fd|` (Frobenius, over the basis).
    pub fd_discrepancy: T,
    /// Largest part of some `P(E_j)` outside `sl_beta`.
    pub leakage: T,
    /// `|P - P^t|`.
    pub asymmetry: T,
    /// Matrix of `ad beta+` on `sl_beta`.
    pub ad_beta_plus: DMatrix<T>,
    /// `|[P, ad beta+]|`.
    pub commutator_norm: T,
}

fn ensure_gauged<T: Real>(mu: &BracketTensor<T>, dec: &BetaDecomposition<T>) -> Result<()> {
    let off = mu.sub(&dec.component(mu, T::zero())).norm();
    if off > T::tol(1e-8) * mu.norm() {
        return Err(Error::GaugeMismatch(format!(
            "bracket has components of norm {:e} outside V_0",
            off.to_f64_lossy()
        )));
    }
    Ok(())
}

/// Finite-difference step for the definition of `P`.
pub const FD_STEP: f64 = 1e-5;

pub fn p_operator<T: Real>(mu: &BracketTensor<T>, dec: &BetaDecomposition<T>) -> Result<POperator<T>> {
    ensure_gauged(mu, dec)?;
    let n = mu.dim();
    let d = delta(mu);
    let killing = curvature_pack(mu)?.killing;
    let basis = &dec.sl_beta;
    let h_count = dec.h_beta.len();
    let m = basis.len();
    let cols = linalg::columns_of(basis, n);
    let beta_plus = DMatrix::from_diagonal(&DVector::from_column_slice(&dec.beta_plus));
    let mut matrix = DMatrix::zeros(m, m);
    let mut matrix_fd = DMatrix::zeros(m, m);
    let mut ad = DMatrix::zeros(m, m);
    let mut leakage = T::zero();
    for (j, e) in basis.iter().enumerate() {
        let p = p_closed(&d, &killing, e, j < h_count);
        let flat = linalg::flatten(&p);
        let coords = cols.transpose() * &flat;
        leakage = leakage.max((&flat - &cols * &coords).norm());
        matrix.set_column(j, &coords);
        let fd = p_finite_difference(mu, dec, e, T::tol(FD_STEP));
        matrix_fd.set_column(j, &(cols.transpose() * linalg::flatten(&fd)));
        let c = linalg::commutator(&beta_plus, e);
        ad.set_column(j, &(cols.transpose() * linalg::flatten(&c)));
    }
    let commutator_norm = (&matrix * &ad - &ad * &matrix).norm();
    Ok(POperator {
        fd_discrepancy: (&matrix - &matrix_fd).norm(),
        asymmetry: (&matrix - matrix.transpose()).norm(),
        matrix,
        matrix_fd,
        leakage,
        ad_beta_plus: ad,
        commutator_norm,
    })
}

/// Spectral data of the linearized flow at a soliton.
#[derive(Clone, Debug, Serialize)]
pub struct LinearizationReport {
    /// `dim T(Sl_beta . mu)`.
    pub tangent_dim: usize,
    /// Real parts of the eigenvalues of `L` on the tangent space, ascending.
    pub eigenvalues: Vec<f64>,
    /// Largest imaginary part discarded.
    pub max_imaginary: f64,
    pub kernel_dim: usize,
    /// `dim pi(k_beta) mu`.
    pub k_beta_orbit_dim: usize,
    pub kernel_matches_k_beta_orbit: bool,
    /// Largest nonzero eigenvalue (most negative if all are negative).
    pub max_nonzero_eigenvalue: Option<f64>,
    /// Eigenvalues of the symmetric part of `P`, ascending.
    pub p_spectrum: Vec<f64>,
    pub p_kernel_dim: usize,
    /// `dim (Der + k_beta) ∩ sl_beta`.
    pub expected_p_kernel_dim: usize,
    /// Mutual containment residual of `ker P` and `(Der + k_beta) ∩ sl_beta`.
    pub p_kernel_residual: f64,
    pub p_asymmetry: f64,
    pub p_leakage: f64,
    pub p_fd_discrepancy: f64,
    pub commutator_norm: f64,
    /// `|J - L|` on the tangent space, `J` the central-difference Jacobian
    /// of the flow field.
    pub fd_linearization_discrepancy: f64,
    /// Largest `|L v + (p + r) v| / |v|` over joint eigenvectors of `P`
    /// and `ad beta+`, with `v = pi(A) mu`.
    pub eigenvector_transport_residual: f64,
    /// Largest part of `pi(E_ij) mu` outside its grading component.
    pub grading_residual: f64,
    /// Smallest singular value kept in the tangent basis, relative to the
    /// largest.
    pub tangent_conditioning: f64,
    /// Condition number of the Killing form on the complement of the
    /// nilradical (1 when that complement is trivial).
    pub killing_condition: f64,
}

/// Zero threshold for eigenvalues of `L` and `P`.
pub const SPECTRAL_ZERO: f64 = 1e-8;
/// Imaginary parts below this are discarded.
pub const IMAG_TOL: f64 = 1e-8;

pub fn l_operator<T: Real>(mu: &BracketTensor<T>, dec: &BetaDecomposition<T>) -> Result<LinearizationReport> {
    let pop = p_operator(mu, dec)?;
    let n = mu.dim();
    let basis = &dec.sl_beta;
    let m = basis.len();
    let zero = T::tol(SPECTRAL_ZERO);

    // tangent space T = pi(sl_beta) mu
    let pi_cols: Vec<DVector<T>> = basis.iter().map(|e| pi_action(e, mu).to_vector()).collect();
    let big_delta = DMatrix::from_columns(&pi_cols);
    let (u, sigma, v) = linalg::svd_sorted(&big_delta);
    let smax = sigma.first().copied().unwrap_or_else(T::zero);
    let r = sigma
        .iter()
        .filter(|&&s| s > T::tol(tolerances::RANK) * smax.max(T::one()))
        .count();
    let q = u.columns(0, r).into_owned();
    // coefficients c_k in sl_beta with pi(c_k) mu = q_k
    let mut c = DMatrix::zeros(m, r);
    for k in 0..r {
        c.set_column(k, &(v.column(k) / sigma[k]));
    }
    let gen = -(&pop.matrix + &pop.ad_beta_plus);
    let l = q.transpose() * &big_delta * &gen * &c;

    let eig = linalg::eigenvalues(&l);
    let max_imaginary = eig.iter().fold(T::zero(), |a, z| a.max(z.im.abs()));
    let mut eigenvalues: Vec<f64> = eig.iter().map(|z| z.re.to_f64_lossy()).collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let scale = T::one().max(l.norm()).to_f64_lossy();
    let zero_f = SPECTRAL_ZERO * scale;
    let kernel_dim = eigenvalues.iter().filter(|x| x.abs() <= zero_f).count();
    let max_nonzero_eigenvalue = eigenvalues
        .iter()
        .copied()
        .filter(|x| x.abs() > zero_f)
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))));

    let k_cols: Vec<DVector<T>> = dec.k_beta.iter().map(|k| pi_action(k, mu).to_vector()).collect();
    let k_beta_orbit_dim = if k_cols.is_empty() {
        0
    } else {
        linalg::rank(&DMatrix::from_columns(&k_cols), T::tol(tolerances::RANK))
    };
    let k_beta_orbit_dim = if k_cols.iter().all(|c| c.norm() <= zero * mu.norm()) { 0 } else { k_beta_orbit_dim };

    // P spectrum and kernel
    let p_sym = linalg::sym_part(&pop.matrix);
    let (p_vals, p_vecs) = linalg::sym_eigen_sorted(&p_sym);
    let p_scale = T::one().max(p_vals.last().copied().unwrap_or_else(T::zero));
    let sl_cols = linalg::columns_of(basis, n);
    let ker_cols: Vec<DVector<T>> = p_vals
        .iter()
        .enumerate()
        .filter(|(_, &x)| x.abs() <= zero * p_scale)
        .map(|(i, _)| &sl_cols * p_vecs.column(i))
        .collect();
    let p_kernel_dim = ker_cols.len();
    let mut span: Vec<Endomorphism<T>> = bracket::derivation_space(mu);
    span.extend(dec.k_beta.iter().cloned());
    let expected = if span.is_empty() {
        DMatrix::zeros(n * n, 0)
    } else {
        linalg::intersection(
            &linalg::orth_range(&linalg::columns_of(&span, n), T::tol(tolerances::RANK)),
            &sl_cols,
            T::tol(tolerances::RANK),
        )
    };
    let expected_p_kernel_dim = expected.ncols();
    let p_kernel_residual = if p_kernel_dim == 0 && expected_p_kernel_dim == 0 {
        T::zero()
    } else if p_kernel_dim == 0 || expected_p_kernel_dim == 0 {
        T::of(f64::INFINITY)
    } else {
        let ker = DMatrix::from_columns(&ker_cols);
        linalg::span_residual(&ker, &expected).max(linalg::span_residual(&expected, &ker))
    };

    // finite-difference Jacobian of the flow field on T
    let h = T::tol(FD_STEP);
    let mut j = DMatrix::zeros(r, r);
    for k in 0..r {
        let dir = BracketTensor::from_vector(n, &q.column(k).into_owned())?;
        let fp = flow_field(Variant::ScalStarNormalized, &mu.axpy(h, &dir), Some(dec))?;
        let fm = flow_field(Variant::ScalStarNormalized, &mu.axpy(-h, &dir), Some(dec))?;
        let col = fp.sub(&fm).to_vector() / (h * T::of(2.0));
        j.set_column(k, &(q.transpose() * col));
    }
    let fd_linearization_discrepancy = (&j - &l).norm();

    // joint eigenvectors of P and ad beta+ (both symmetric, commuting)
    let ad_sym = linalg::sym_part(&pop.ad_beta_plus);
    let (ad_vals, ad_vecs) = linalg::sym_eigen_sorted(&ad_sym);
    let mut transport = T::zero();
    for (weight, count) in linalg::cluster_sorted(&ad_vals, T::tol(tolerances::EIG)) {
        let start = ad_vals
            .iter()
            .position(|&x| (x - weight).abs() <= T::tol(tolerances::EIG))
            .unwrap_or(0);
        let block = ad_vecs.columns(start, count).into_owned();
        let p_block = linalg::sym_part(&(block.transpose() * &p_sym * &block));
        let (pv, pw) = linalg::sym_eigen_sorted(&p_block);
        for (i, &p) in pv.iter().enumerate() {
            if p + weight <= zero * p_scale {
                continue;
            }
            let coeff = &block * pw.column(i);
            let a = linalg::unflatten(&(&sl_cols * &coeff), n);
            let vecv = pi_action(&a, mu);
            let vn = vecv.norm();
            if vn <= zero {
                continue;
            }
            let fp = flow_field(Variant::ScalStarNormalized, &mu.axpy(h, &vecv), Some(dec))?;
            let fm = flow_field(Variant::ScalStarNormalized, &mu.axpy(-h, &vecv), Some(dec))?;
            let jv = fp.sub(&fm).scaled((h * T::of(2.0)).recip());
            let res = jv.axpy(p + weight, &vecv).norm() / vn;
            transport = transport.max(res);
        }
    }

    // grading of pi(E_ij) mu
    let mut grading = T::zero();
    for a in 0..n {
        for b in 0..n {
            let w = pi_action(&linalg::unit(n, a, b), mu);
            let comp = dec.component(&w, dec.gl_weight(a, b));
            grading = grading.max(w.sub(&comp).norm());
        }
    }

    let killing_condition = {
        let nil = bracket::nilradical(mu)?;
        let ka = nil.complement.transpose() * curvature_pack(mu)?.killing * &nil.complement;
        if ka.nrows() == 0 {
            1.0
        } else {
            let (vals, _) = linalg::sym_eigen_sorted(&ka);
            let lo = vals[0].abs().to_f64_lossy();
            let hi = vals.last().unwrap().abs().to_f64_lossy();
            if lo == 0.0 {
                f64::INFINITY
            } else {
                hi / lo
            }
        }
    };

    Ok(LinearizationReport {
        tangent_dim: r,
        eigenvalues,
        max_imaginary: max_imaginary.to_f64_lossy(),
        kernel_dim,
        k_beta_orbit_dim,
        kernel_matches_k_beta_orbit: kernel_dim == k_beta_orbit_dim,
        max_nonzero_eigenvalue,
        p_spectrum: p_vals.iter().map(|x| x.to_f64_lossy()).collect(),
        p_kernel_dim,
        expected_p_kernel_dim,
        p_kernel_residual: p_kernel_residual.to_f64_lossy(),
        p_asymmetry: pop.asymmetry.to_f64_lossy(),
        p_leakage: pop.leakage.to_f64_lossy(),
        p_fd_discrepancy: pop.fd_discrepancy.to_f64_lossy(),
        commutator_norm: pop.commutator_norm.to_f64_lossy(),
        fd_linearization_discrepancy: fd_linearization_discrepancy.to_f64_lossy(),
        eigenvector_transport_residual: transport.to_f64_lossy(),
        grading_residual: grading.to_f64_lossy(),
        tangent_conditioning: if r == 0 || smax == T::zero() {
            1.0
        } else {
            (sigma[r - 1] / smax).to_f64_lossy()
        },
        killing_condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::samples;
    use crate::soliton::{normalize_soliton, soliton_residual};
    use crate::stratification::beta_decomposition;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn normalized(mu: BracketTensor<f64>) -> (BracketTensor<f64>, BetaDecomposition<f64>) {
        let ns = normalize_soliton(&mu, &soliton_residual(&mu).unwrap()).unwrap();
        let (_, rotated, label) = ns.diagonalized().unwrap();
        let dec = beta_decomposition(&label).unwrap();
        (rotated, dec)
    }

    #[test]
    fn delta_examples_and_adjointness() {
        let h3 = catalog::heisenberg3::<f64>();
        let d = delta(&h3);
        let id = linalg::flatten(&DMatrix::<f64>::identity(3, 3));
        assert!((&d * id - h3.to_vector()).norm() < 1e-14);
        let der = linalg::flatten(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 2.0])));
        assert!((&d * der).norm() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mu = samples::random_solvable::<f64, _>(&mut rng, 4);
        let d = delta(&mu);
        let dt = delta_adjoint(&mu);
        for _ in 0..50 {
            let a = samples::random_matrix::<f64, _>(&mut rng, 4, 4);
            let v = samples::random_bracket::<f64, _>(&mut rng, 4).to_vector();
            let lhs = (&d * linalg::flatten(&a)).dot(&v);
            let rhs = linalg::flatten(&a).dot(&(&dt * &v));
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn p_on_symmetric_complement_block() {
        let (mu, dec) = normalized(catalog::s3_lambda(0.5).unwrap());
        let pop = p_operator(&mu, &dec).unwrap();
        assert!(pop.fd_discrepancy < 1e-6);
        assert!(pop.asymmetry < 1e-9);
        assert!(pop.commutator_norm < 1e-9);
        let killing = curvature_pack(&mu).unwrap().killing;
        let d = delta(&mu);
        // A_a = E_11 is an eigenvector with eigenvalue 2 |beta|^2
        let a = linalg::unit::<f64>(3, 0, 0);
        let beta_sq: f64 = dec.beta.iter().map(|b| b * b).sum();
        let p = p_closed(&d, &killing, &a, true);
        assert!((p - &a * (2.0 * beta_sq)).norm() < 1e-12);
        for k in &dec.k_beta {
            assert!(p_closed(&d, &killing, k, true).norm() < 1e-12);
        }
    }

    #[test]
    fn spectra_at_solitons() {
        for mu in [
            catalog::s3_lambda(1.0_f64).unwrap(),
            catalog::s3_lambda(0.5).unwrap(),
            catalog::s3_lambda(-0.3).unwrap(),
            catalog::heisenberg3(),
            catalog::heisenberg(5).unwrap(),
        ] {
            let (nu, dec) = normalized(mu);
            let rep = l_operator(&nu, &dec).unwrap();
            if let Some(x) = rep.max_nonzero_eigenvalue {
                assert!(x <= -1e-6, "{rep:?}");
            }
            assert!(rep.kernel_matches_k_beta_orbit, "{rep:?}");
            assert!(rep.p_spectrum[0] >= -1e-10);
            assert_eq!(rep.p_kernel_dim, rep.expected_p_kernel_dim, "{rep:?}");
            assert!(rep.p_kernel_residual <= 1e-8);
            assert!(rep.fd_linearization_discrepancy <= 1e-6, "{rep:?}");
            assert!(rep.eigenvector_transport_residual <= 1e-6, "{rep:?}");
            assert!(rep.grading_residual <= 1e-12);
            assert!(rep.max_imaginary <= IMAG_TOL);
        }
    }

    #[test]
    fn rejects_ungauged_input() {
        let (mu, dec) = normalized(catalog::s3_lambda(0.5).unwrap());
        let bad = mu.axpy(0.1, &BracketTensor::from_entries(3, &[(1, 2, 0, 1.0)]).unwrap());
        assert!(matches!(p_operator(&bad, &dec), Err(Error::GaugeMismatch(_))));
    }
}
