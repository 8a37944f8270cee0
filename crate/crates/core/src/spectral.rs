//! Spectral type of a solvable bracket: real parts and moduli of the
//! eigenvalues of `ad X`, their minimum over the unit sphere of the
//! complement of the nilradical, and flatness.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bracket::{ad_map, nilradical, BracketTensor};
use crate::curvature::curvature_pack;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{tolerances, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TypeKind {
    RealType,
    ImaginaryType,
    MixedNonReal,
    Nilpotent,
    Abelian,
}

/// How a verdict was reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    /// Decided from the nilradical alone.
    Structural,
    /// Grid search followed by local refinement.
    Refined,
    /// Only sampled directions were checked.
    Sampled,
}

#[derive(Clone, Debug, Serialize)]
pub struct TypeReport {
    pub kind: TypeKind,
    /// Minimum of `phi` over the unit sphere of the nilradical complement.
    pub sigma_a: f64,
    /// Minimizing direction in the ambient basis.
    pub witness: Vec<f64>,
    /// Dimension of the nilradical complement.
    pub rank: usize,
    pub confidence: Confidence,
}

/// Largest `|Re lambda|` over the spectrum of `ad X`.
pub fn phi<T: Real>(mu: &BracketTensor<T>, x: &DVector<T>) -> T {
    linalg::eigenvalues(&ad_map(mu, x))
        .iter()
        .fold(T::zero(), |acc, z| acc.max(z.re.abs()))
}

/// Largest `|lambda|` over the spectrum of `ad X`.
pub fn psi<T: Real>(mu: &BracketTensor<T>, x: &DVector<T>) -> T {
    linalg::eigenvalues(&ad_map(mu, x))
        .iter()
        .fold(T::zero(), |acc, z| acc.max(z.norm_sqr().sqrt()))
}

/// `sigma_threshold` scaled with the bracket, so the verdict is scale invariant.
fn threshold<T: Real>(mu: &BracketTensor<T>) -> T {
    T::tol(tolerances::SIGMA_THRESHOLD) * mu.norm()
}

/// Unit directions on the sphere of dimension `k - 1`, seeded and
/// deterministic; the coordinate axes come first.
fn sphere_directions<T: Real>(k: usize, count: usize, seed: u64) -> Vec<DVector<T>> {
    let mut out: Vec<DVector<T>> = (0..k)
        .map(|i| {
            let mut v = DVector::zeros(k);
            v[i] = T::one();
            v
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count.max(k) {
        let v: DVector<f64> = DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            out.push(v.map(|c| T::of(c / n)));
        }
    }
    out
}

/// Minimizes `f` from `start` with the Nelder-Mead simplex method.
/// Stops when the spread of simplex values falls below `tol`.
pub fn nelder_mead<T: Real>(
    f: impl Fn(&DVector<T>) -> T,
    start: &DVector<T>,
    step: T,
    tol: T,
    max_iter: usize,
) -> (DVector<T>, T) {
    let k = start.len();
    let mut simplex: Vec<(DVector<T>, T)> = Vec::with_capacity(k + 1);
    simplex.push((start.clone(), f(start)));
    for i in 0..k {
        let mut p = start.clone();
        p[i] += step;
        let v = f(&p);
        simplex.push((p, v));
    }
    let (alpha, gamma, rho, sigma) = (T::one(), T::of(2.0), T::of(0.5), T::of(0.5));
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[k].1;
        if (worst - best).abs() <= tol {
            break;
        }
        let centroid = simplex[..k]
            .iter()
            .fold(DVector::zeros(k), |acc, (p, _)| acc + p)
            / T::of(k as f64);
        let reflected = &centroid + (&centroid - &simplex[k].0) * alpha;
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = &centroid + (&reflected - &centroid) * gamma;
            let fe = f(&expanded);
            simplex[k] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[k - 1].1 {
            simplex[k] = (reflected, fr);
        } else {
            let contracted = &centroid + (&simplex[k].0 - &centroid) * rho;
            let fc = f(&contracted);
            if fc < simplex[k].1 {
                simplex[k] = (contracted, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let p = &anchor + (&item.0 - &anchor) * sigma;
                    let v = f(&p);
                    *item = (p, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    simplex.swap_remove(0)
}

/// Approximate minimum of `phi` over the unit sphere of `a = n^perp`,
/// with the minimizing direction.
pub fn sigma_a<T: Real>(mu: &BracketTensor<T>) -> Result<(T, DVector<T>)> {
    let nil = nilradical(mu)?;
    if nil.rank == 0 {
        return Err(Error::NilpotentInput);
    }
    Ok(minimize_phi_on(mu, &nil.complement))
}

fn minimize_phi_on<T: Real>(mu: &BracketTensor<T>, basis: &DMatrix<T>) -> (T, DVector<T>) {
    let k = basis.ncols();
    let embed = |y: &DVector<T>| -> DVector<T> {
        let n = y.norm();
        if n == T::zero() {
            return basis.column(0).into_owned();
        }
        basis * (y / n)
    };
    let objective = |y: &DVector<T>| phi(mu, &embed(y));
    let count = 64usize << k.min(12);
    let mut best: Option<(DVector<T>, T)> = None;
    for y in sphere_directions::<T>(k, count, 0x5eed ^ k as u64) {
        let v = objective(&y);
        if best.as_ref().is_none_or(|b| v < b.1) {
            best = Some((y, v));
        }
    }
    let (mut y, mut v) = best.expect("at least one direction");
    if k > 1 {
        let (ry, rv) = nelder_mead(objective, &y, T::of(0.05), T::tol(1e-9), 2000);
        if rv < v {
            y = ry;
            v = rv;
        }
    }
    (v, embed(&y))
}

/// Type of a solvable Lie bracket.
pub fn classify_type<T: Real>(mu: &BracketTensor<T>) -> Result<TypeReport> {
    let n = mu.dim();
    if mu.is_zero() {
        return Ok(TypeReport {
            kind: TypeKind::Abelian,
            sigma_a: 0.0,
            witness: Vec::new(),
            rank: 0,
            confidence: Confidence::Structural,
        });
    }
    let nil = nilradical(mu)?;
    if nil.rank == 0 {
        return Ok(TypeReport {
            kind: TypeKind::Nilpotent,
            sigma_a: 0.0,
            witness: Vec::new(),
            rank: 0,
            confidence: Confidence::Structural,
        });
    }
    let (sigma, witness) = minimize_phi_on(mu, &nil.complement);
    let thr = threshold(mu);
    let witness_f64: Vec<f64> = witness.iter().map(|c| c.to_f64_lossy()).collect();
    let report = |kind, confidence| TypeReport {
        kind,
        sigma_a: sigma.to_f64_lossy(),
        witness: witness_f64.clone(),
        rank: nil.rank,
        confidence,
    };
    if sigma > thr {
        return Ok(report(TypeKind::RealType, Confidence::Refined));
    }
    let count = (64usize << n.min(6)).max(256);
    let imaginary = sphere_directions::<T>(n, count, 0x1a6 ^ n as u64)
        .iter()
        .all(|x| phi(mu, x) <= thr);
    if imaginary {
        Ok(report(TypeKind::ImaginaryType, Confidence::Sampled))
    } else {
        Ok(report(TypeKind::MixedNonReal, Confidence::Refined))
    }
}

/// `|Ric| <= flat_tol (1 + |mu|^2)` on a solvable Lie bracket.
pub fn is_flat_bracket<T: Real>(mu: &BracketTensor<T>) -> Result<bool> {
    if !crate::bracket::is_solvable(mu)? {
        return Err(Error::NotSolvable);
    }
    let pack = curvature_pack(mu)?;
    Ok(pack.ricci.norm() <= T::tol(tolerances::FLAT) * (T::one() + pack.norm_sq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::act;
    use crate::catalog;
    use crate::samples;

    fn e(i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(3);
        v[i] = 1.0;
        v
    }

    #[test]
    fn phi_psi_examples() {
        let s3 = catalog::s3::<f64>();
        assert!((phi(&s3, &e(0)) - 1.0).abs() < 1e-7);
        assert!((psi(&s3, &e(0)) - 1.0).abs() < 1e-7);
        let e2 = catalog::e2::<f64>();
        assert!(phi(&e2, &e(0)) < 1e-12);
        assert!((psi(&e2, &e(0)) - 1.0).abs() < 1e-12);
        assert_eq!(phi(&s3, &DVector::zeros(3)), 0.0);
    }

    #[test]
    fn sigma_examples() {
        let (v, w) = sigma_a(&catalog::s3_lambda(1.0_f64).unwrap()).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        assert!((w[0].abs() - 1.0).abs() < 1e-9);
        let (v, _) = sigma_a(&catalog::e2::<f64>()).unwrap();
        assert!(v < 1e-12);
        let (v, _) = sigma_a(&catalog::s3_prime(0.3_f64).unwrap()).unwrap();
        assert!((v - 0.3).abs() < 1e-9);
        assert_eq!(sigma_a(&catalog::heisenberg3::<f64>()).unwrap_err(), Error::NilpotentInput);
    }

    #[test]
    fn classification_matches_catalog() {
        for entry in catalog::standard_entries::<f64>() {
            let r = classify_type(&entry.bracket).unwrap();
            let real = matches!(r.kind, TypeKind::RealType | TypeKind::Nilpotent | TypeKind::Abelian);
            assert_eq!(real, entry.expected.real_type, "{}", entry.name);
            assert_eq!(is_flat_bracket(&entry.bracket).unwrap(), entry.expected.flat, "{}", entry.name);
        }
        assert_eq!(classify_type(&catalog::e2::<f64>()).unwrap().kind, TypeKind::ImaginaryType);
        assert_eq!(classify_type(&catalog::e2::<f64>()).unwrap().confidence, Confidence::Sampled);
        assert_eq!(classify_type(&catalog::heisenberg3::<f64>()).unwrap().kind, TypeKind::Nilpotent);
        assert_eq!(classify_type(&catalog::s3::<f64>()).unwrap().kind, TypeKind::RealType);
    }

    #[test]
    fn mixed_type_in_dimension_five() {
        // e(2) x R^2 acting with one real and one rotating direction
        let mut mu = BracketTensor::<f64>::zeros(5).unwrap();
        mu.set(0, 2, 3, -1.0);
        mu.set(0, 3, 2, 1.0);
        mu.set(1, 4, 4, 1.0);
        let r = classify_type(&mu).unwrap();
        assert_eq!(r.rank, 2);
        assert_eq!(r.kind, TypeKind::MixedNonReal);
    }

    #[test]
    fn gauge_law() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mu = catalog::s3::<f64>();
        let nil = nilradical(&mu).unwrap();
        for _ in 0..10 {
            let h = samples::random_gl::<f64, _>(&mut rng, 3);
            let x = samples::random_vector::<f64, _>(&mut rng, 3);
            let hmu = act(&h, &mu).unwrap();
            let y = nil.project_complement(&(h.clone().try_inverse().unwrap() * &x));
            assert!((phi(&hmu, &x) - phi(&mu, &y)).abs() < 1e-7);
            assert!((psi(&hmu, &x) - psi(&mu, &y)).abs() < 1e-7);
        }
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |y: &DVector<f64>| (y[0] - 1.0).powi(2) + 2.0 * (y[1] + 0.5).powi(2);
        let (y, v) = nelder_mead(f, &DVector::zeros(2), 0.1, 1e-14, 5000);
        assert!(v < 1e-10);
        assert!((y[0] - 1.0).abs() < 1e-4 && (y[1] + 0.5).abs() < 1e-4);
    }
}
