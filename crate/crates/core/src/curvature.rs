//! Ricci-level curvature of the left-invariant metric attached to a bracket.
//!
//! The background metric is the standard one, so `e_1, ..., e_n` is
//! orthonormal and every quantity below is a plain matrix in that basis.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bracket::{ad_map, ensure_lie, pi_action, BracketTensor};
use crate::error::{Error, Result};
use crate::linalg::{self, Endomorphism};
use crate::scalar::Real;

/// Curvature data of one bracket.
#[derive(Clone, Debug)]
pub struct CurvaturePack<T: Real> {
    /// Moment-map part `M`.
    pub m_part: Endomorphism<T>,
    /// Killing form as a symmetric endomorphism.
    pub killing: Endomorphism<T>,
    /// Mean curvature vector, `<H, X> = tr ad X`.
    pub mean_curvature: DVector<T>,
    pub ricci: Endomorphism<T>,
    /// `M - K / 2`.
    pub ricci_star: Endomorphism<T>,
    pub scal: T,
    pub scal_star: T,
    pub norm_sq: T,
}

/// JSON-friendly copy of a [`CurvaturePack`] in `f64`.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureSummary {
    pub m_part: Vec<Vec<f64>>,
    pub killing: Vec<Vec<f64>>,
    pub mean_curvature: Vec<f64>,
    pub ricci: Vec<Vec<f64>>,
    pub ricci_star: Vec<Vec<f64>>,
    pub scal: f64,
    pub scal_star: f64,
    pub norm_sq: f64,
}

pub(crate) fn rows<T: Real>(a: &DMatrix<T>) -> Vec<Vec<f64>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].to_f64_lossy()).collect())
        .collect()
}

impl<T: Real> CurvaturePack<T> {
    pub fn summary(&self) -> CurvatureSummary {
        CurvatureSummary {
            m_part: rows(&self.m_part),
            killing: rows(&self.killing),
            mean_curvature: self.mean_curvature.iter().map(|v| v.to_f64_lossy()).collect(),
            ricci: rows(&self.ricci),
            ricci_star: rows(&self.ricci_star),
            scal: self.scal.to_f64_lossy(),
            scal_star: self.scal_star.to_f64_lossy(),
            norm_sq: self.norm_sq.to_f64_lossy(),
        }
    }

    fn zero(n: usize) -> Self {
        Self {
            m_part: DMatrix::zeros(n, n),
            killing: DMatrix::zeros(n, n),
            mean_curvature: DVector::zeros(n),
            ricci: DMatrix::zeros(n, n),
            ricci_star: DMatrix::zeros(n, n),
            scal: T::zero(),
            scal_star: T::zero(),
            norm_sq: T::zero(),
        }
    }
}

/// `M_ab = -1/2 sum_{i,k} c_aik c_bik + 1/4 sum_{i,j} c_ija c_ijb`.
pub fn moment_part<T: Real>(mu: &BracketTensor<T>) -> Endomorphism<T> {
    let n = mu.dim();
    let half = T::of(0.5);
    let quarter = T::of(0.25);
    let mut out = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let mut first = T::zero();
            let mut second = T::zero();
            for i in 0..n {
                for k in 0..n {
                    first += mu.get(a, i, k) * mu.get(b, i, k);
                    second += mu.get(i, k, a) * mu.get(i, k, b);
                }
            }
            let v = second * quarter - first * half;
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    out
}

/// `K_ab = tr(ad e_a ad e_b)`.
pub fn killing_form<T: Real>(mu: &BracketTensor<T>) -> Endomorphism<T> {
    let n = mu.dim();
    let ads: Vec<_> = (0..n).map(|a| mu.ad_basis(a)).collect();
    let mut out = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = (&ads[a] * &ads[b]).trace();
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    out
}

/// `H_a = tr ad e_a`.
pub fn mean_curvature<T: Real>(mu: &BracketTensor<T>) -> DVector<T> {
    let n = mu.dim();
    DVector::from_fn(n, |a, _| {
        (0..n).fold(T::zero(), |acc, i| acc + mu.get(a, i, i))
    })
}

/// Moment map `m(mu)`, assembled from `<pi(E_ab + E_ba) mu, mu> / (2 |mu|^2)`.
pub fn moment_map<T: Real>(mu: &BracketTensor<T>) -> Result<Endomorphism<T>> {
    let norm_sq = mu.norm_sq();
    if norm_sq == T::zero() {
        return Err(Error::ZeroBracket);
    }
    let n = mu.dim();
    let denom = norm_sq * T::of(2.0);
    let mut out = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let alpha = linalg::unit::<T>(n, a, b) + linalg::unit::<T>(n, b, a);
            let v = pi_action(&alpha, mu).dot(mu) / denom;
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    Ok(out)
}

/// Moment map from the closed form `m = 4 M / |mu|^2`.
pub fn moment_map_fast<T: Real>(mu: &BracketTensor<T>) -> Result<Endomorphism<T>> {
    let norm_sq = mu.norm_sq();
    if norm_sq == T::zero() {
        return Err(Error::ZeroBracket);
    }
    Ok(moment_part(mu) * (T::of(4.0) / norm_sq))
}

/// Full curvature pack of a Lie bracket.
pub fn curvature_pack<T: Real>(mu: &BracketTensor<T>) -> Result<CurvaturePack<T>> {
    ensure_lie(mu)?;
    Ok(curvature_pack_unchecked(mu))
}

/// [`curvature_pack`] without the Jacobi check, for use inside integrators
/// that monitor the residual themselves.
pub fn curvature_pack_unchecked<T: Real>(mu: &BracketTensor<T>) -> CurvaturePack<T> {
    let n = mu.dim();
    if mu.is_zero() {
        return CurvaturePack::zero(n);
    }
    let m_part = moment_part(mu);
    let killing = killing_form(mu);
    let h = mean_curvature(mu);
    let ad_h = ad_map(mu, &h);
    let half = T::of(0.5);
    let ricci_star = &m_part - &killing * half;
    let ricci = &ricci_star - (&ad_h + ad_h.transpose()) * half;
    CurvaturePack {
        scal: ricci.trace(),
        scal_star: ricci_star.trace(),
        norm_sq: mu.norm_sq(),
        m_part,
        killing,
        mean_curvature: h,
        ricci,
        ricci_star,
    }
}

/// `Ric*` only.
pub fn ricci_star<T: Real>(mu: &BracketTensor<T>) -> Endomorphism<T> {
    moment_part(mu) - killing_form(mu) * T::of(0.5)
}

/// `Ric` only (no Jacobi check).
pub fn ricci<T: Real>(mu: &BracketTensor<T>) -> Endomorphism<T> {
    curvature_pack_unchecked(mu).ricci
}

/// Ricci endomorphism from the Levi-Civita connection of the orthonormal
/// frame: Koszul formula for the Christoffel symbols, then the curvature
/// operator and its trace. Independent of the closed formula in
/// [`curvature_pack`] and meant as a cross-check.
pub fn oracle_ricci<T: Real>(mu: &BracketTensor<T>) -> Result<Endomorphism<T>> {
    ensure_lie(mu)?;
    let n = mu.dim();
    let half = T::of(0.5);
    // nabla[i][(k, j)] = <nabla_{e_i} e_j, e_k>
    let nabla: Vec<DMatrix<T>> = (0..n)
        .map(|i| {
            DMatrix::from_fn(n, n, |k, j| {
                (mu.get(i, j, k) - mu.get(j, k, i) + mu.get(k, i, j)) * half
            })
        })
        .collect();
    let mut ric = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            // R(e_a, e_b) = [nabla_a, nabla_b] - nabla_{[e_a, e_b]}
            let mut r = &nabla[a] * &nabla[b] - &nabla[b] * &nabla[a];
            for l in 0..n {
                let c = mu.get(a, b, l);
                if c != T::zero() {
                    r -= &nabla[l] * c;
                }
            }
            // Ric(e_b, e_c) = sum_a <R(e_a, e_b) e_c, e_a>
            for c in 0..n {
                ric[(b, c)] += r[(a, c)];
            }
        }
    }
    Ok(ric)
}

/// `d scal*|_mu (pi(A) mu) = -2 <Ric*_mu, A>`.
pub fn scalstar_first_variation<T: Real>(mu: &BracketTensor<T>, a: &Endomorphism<T>) -> T {
    -linalg::frob_dot(&ricci_star(mu), a) * T::of(2.0)
}
