//! Brackets on a fixed Euclidean vector space, the change-of-basis action of
//! `GL(n)`, its infinitesimal representation, and structure queries.
//!
//! Coefficients are stored densely: `c[i][j][k]` is the `e_k` component of
//! `mu(e_i, e_j)`. The inner product on brackets sums over all *ordered*
//! pairs `(i, j)`, so the Heisenberg bracket `mu(e1, e2) = e3` has
//! squared norm 2 and every nonzero bracket has `tr m(mu) = -1`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, Endomorphism};
use crate::scalar::{tolerances, Real};

/// Largest supported dimension.
pub const MAX_DIM: usize = 16;

/// Antisymmetric structure constants of a (candidate) Lie bracket.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketTensor<T> {
    dim: usize,
    coeffs: Vec<T>,
}

impl<T: Real> BracketTensor<T> {
    /// The zero (abelian) bracket.
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(Self {
            dim,
            coeffs: vec![T::zero(); dim * dim * dim],
        })
    }

    /// Builds a bracket from `(i, j, k, v)` entries (0-based) meaning
    /// `c[i][j][k] = v`; the `(j, i)` slot is filled by antisymmetry.
    pub fn from_entries(dim: usize, entries: &[(usize, usize, usize, T)]) -> Result<Self> {
        let mut b = Self::zeros(dim)?;
        for &(i, j, k, v) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::OutOfRange(format!(
                    "entry ({i}, {j}, {k}) in dimension {dim}"
                )));
            }
            if i == j {
                if v != T::zero() {
                    return Err(Error::Parse(format!("diagonal entry ({i}, {i}, {k}) must vanish")));
                }
                continue;
            }
            b.set(i, j, k, v);
        }
        Ok(b)
    }

    /// Builds a bracket from a dense coefficient array, antisymmetrizing it.
    pub fn from_coeffs(dim: usize, coeffs: Vec<T>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if coeffs.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim * dim,
                got: coeffs.len(),
            });
        }
        let mut b = Self { dim, coeffs };
        b.antisymmetrize();
        Ok(b)
    }

    /// Bracket from a vector in `V = R^{n^3}` (antisymmetrized).
    pub fn from_vector(dim: usize, v: &DVector<T>) -> Result<Self> {
        Self::from_coeffs(dim, v.iter().copied().collect())
    }

    fn antisymmetrize(&mut self) {
        let n = self.dim;
        let half = T::of(0.5);
        for i in 0..n {
            for k in 0..n {
                self.coeffs[(i * n + i) * n + k] = T::zero();
            }
            for j in (i + 1)..n {
                for k in 0..n {
                    let a = self.coeffs[(i * n + j) * n + k];
                    let b = self.coeffs[(j * n + i) * n + k];
                    let v = (a - b) * half;
                    self.coeffs[(i * n + j) * n + k] = v;
                    self.coeffs[(j * n + i) * n + k] = -v;
                }
            }
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.coeffs[(i * self.dim + j) * self.dim + k]
    }

    /// Sets `c[i][j][k] = v` and `c[j][i][k] = -v`.
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: T) {
        let n = self.dim;
        self.coeffs[(i * n + j) * n + k] = v;
        self.coeffs[(j * n + i) * n + k] = -v;
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn to_vector(&self) -> DVector<T> {
        DVector::from_column_slice(&self.coeffs)
    }

    /// Inner product summing over ordered pairs.
    pub fn dot(&self, other: &Self) -> T {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == T::zero())
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: T, other: &Self) -> Self {
        Self {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| a + s * b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-T::one(), other)
    }

    pub fn max_abs(&self) -> T {
        self.coeffs
            .iter()
            .fold(T::zero(), |acc, &c| if c.abs() > acc { c.abs() } else { acc })
    }

    /// Evaluates `mu(x, y)`.
    pub fn apply(&self, x: &DVector<T>, y: &DVector<T>) -> DVector<T> {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            if x[i] == T::zero() {
                continue;
            }
            for j in 0..n {
                let w = x[i] * y[j];
                if w == T::zero() {
                    continue;
                }
                for k in 0..n {
                    out[k] += w * self.get(i, j, k);
                }
            }
        }
        out
    }

    /// Adjoint map of a basis vector: `(ad e_i)_{k j} = c[i][j][k]`.
    pub fn ad_basis(&self, i: usize) -> Endomorphism<T> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |k, j| self.get(i, j, k))
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim != other {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other,
            });
        }
        Ok(())
    }
}

/// `ad_mu(X): Y -> mu(X, Y)`.
pub fn ad_map<T: Real>(mu: &BracketTensor<T>, x: &DVector<T>) -> Endomorphism<T> {
    let n = mu.dim();
    let mut out = DMatrix::zeros(n, n);
    for (i, &xi) in x.iter().enumerate() {
        if xi != T::zero() {
            out += mu.ad_basis(i) * xi;
        }
    }
    out
}

/// Norm of the cyclic Jacobi sum over all basis triples `i < j < k`.
pub fn jacobi_residual<T: Real>(mu: &BracketTensor<T>) -> T {
    let n = mu.dim();
    // column j of ad_i is mu(e_i, e_j)
    let ads: Vec<Endomorphism<T>> = (0..n).map(|i| mu.ad_basis(i)).collect();
    let mut total = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let mut cyc = DVector::zeros(n);
                let ij = ads[i].column(j).into_owned();
                let jk = ads[j].column(k).into_owned();
                let ki = ads[k].column(i).into_owned();
                cyc += -(&ads[k] * ij);
                cyc += -(&ads[i] * jk);
                cyc += -(&ads[j] * ki);
                total += cyc.norm_squared();
            }
        }
    }
    total.sqrt()
}

/// Default Jacobi threshold for a bracket of this size.
pub fn jacobi_tol<T: Real>(mu: &BracketTensor<T>) -> T {
    T::tol(tolerances::JACOBI) * (T::one() + mu.norm_sq())
}

/// Fails with `NotALieBracket` unless the Jacobi residual is within tolerance.
pub fn ensure_lie<T: Real>(mu: &BracketTensor<T>) -> Result<()> {
    let r = jacobi_residual(mu);
    if r > jacobi_tol(mu) {
        return Err(Error::NotALieBracket {
            residual: r.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Change of basis `(h . mu)(x, y) = h mu(h^{-1} x, h^{-1} y)`.
pub fn act<T: Real>(h: &Endomorphism<T>, mu: &BracketTensor<T>) -> Result<BracketTensor<T>> {
    let n = mu.dim();
    mu.check_dim(h.nrows())?;
    mu.check_dim(h.ncols())?;
    let det = h.determinant();
    let scale = h.norm().powi(n as i32);
    if det.abs() <= T::tol(tolerances::SINGULAR) * scale || det == T::zero() {
        return Err(Error::SingularGauge {
            det: det.to_f64_lossy(),
        });
    }
    let g = h
        .clone()
        .try_inverse()
        .ok_or(Error::SingularGauge { det: det.to_f64_lossy() })?;
    Ok(act_with_inverse(h, &g, mu))
}

/// Same as [`act`] with a precomputed inverse and no singularity check.
pub fn act_with_inverse<T: Real>(
    h: &Endomorphism<T>,
    g: &Endomorphism<T>,
    mu: &BracketTensor<T>,
) -> BracketTensor<T> {
    let n = mu.dim();
    let idx = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
    // x[a][b][k] = sum_c h[k][c] c[a][b][c]
    let mut x = vec![T::zero(); n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let v = mu.get(a, b, c);
                if v == T::zero() {
                    continue;
                }
                for k in 0..n {
                    x[idx(a, b, k)] += h[(k, c)] * v;
                }
            }
        }
    }
    // y[a][j][k] = sum_b g[b][j] x[a][b][k]
    let mut y = vec![T::zero(); n * n * n];
    for a in 0..n {
        for b in 0..n {
            for j in 0..n {
                let w = g[(b, j)];
                if w == T::zero() {
                    continue;
                }
                for k in 0..n {
                    y[idx(a, j, k)] += w * x[idx(a, b, k)];
                }
            }
        }
    }
    // z[i][j][k] = sum_a g[a][i] y[a][j][k]
    let mut z = vec![T::zero(); n * n * n];
    for a in 0..n {
        for i in 0..n {
            let w = g[(a, i)];
            if w == T::zero() {
                continue;
            }
            for j in 0..n {
                for k in 0..n {
                    z[idx(i, j, k)] += w * y[idx(a, j, k)];
                }
            }
        }
    }
    let mut out = BracketTensor { dim: n, coeffs: z };
    out.antisymmetrize();
    out
}

/// Infinitesimal action `(pi(A) mu)(x, y) = A mu(x, y) - mu(Ax, y) - mu(x, Ay)`.
pub fn pi_action<T: Real>(a: &Endomorphism<T>, mu: &BracketTensor<T>) -> BracketTensor<T> {
    let n = mu.dim();
    let mut out = vec![T::zero(); n * n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                let mut v = T::zero();
                for l in 0..n {
                    v += a[(k, l)] * mu.get(i, j, l);
                    v -= a[(l, i)] * mu.get(l, j, k);
                    v -= a[(l, j)] * mu.get(i, l, k);
                }
                out[(i * n + j) * n + k] = v;
                out[(j * n + i) * n + k] = -v;
            }
        }
    }
    BracketTensor { dim: n, coeffs: out }
}

/// Matrix of `A -> pi(A) mu` from `gl(n)` (row-major `E_ab` basis) into `V`.
pub fn pi_matrix<T: Real>(mu: &BracketTensor<T>) -> DMatrix<T> {
    let n = mu.dim();
    let mut out = DMatrix::zeros(n * n * n, n * n);
    for a in 0..n {
        for b in 0..n {
            let col = pi_action(&linalg::unit(n, a, b), mu);
            out.set_column(a * n + b, &col.to_vector());
        }
    }
    out
}

/// Orthonormal basis (as columns) of `span{ mu(x, y) : x in X, y in Y }`.
fn bracket_span<T: Real>(mu: &BracketTensor<T>, xs: &DMatrix<T>, ys: &DMatrix<T>) -> DMatrix<T> {
    let n = mu.dim();
    if xs.ncols() == 0 || ys.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let mut vecs = DMatrix::zeros(n, xs.ncols() * ys.ncols());
    let mut c = 0;
    for a in 0..xs.ncols() {
        let x = xs.column(a).into_owned();
        for b in 0..ys.ncols() {
            let y = ys.column(b).into_owned();
            vecs.set_column(c, &mu.apply(&x, &y));
            c += 1;
        }
    }
    // inputs are orthonormal, so |mu| bounds every product
    linalg::orth_range_abs(&vecs, T::tol(tolerances::RANK) * mu.norm())
}

/// Dimensions of the derived series `s, [s,s], [[s,s],[s,s]], ...`,
/// stopping at 0 or when the dimension stabilizes.
pub fn derived_series<T: Real>(mu: &BracketTensor<T>) -> Result<Vec<usize>> {
    ensure_lie(mu)?;
    Ok(series(mu, false))
}

/// Dimensions of the lower central series `s, [s,s], [s,[s,s]], ...`.
pub fn lower_central_series<T: Real>(mu: &BracketTensor<T>) -> Result<Vec<usize>> {
    ensure_lie(mu)?;
    Ok(series(mu, true))
}

fn series<T: Real>(mu: &BracketTensor<T>, central: bool) -> Vec<usize> {
    let n = mu.dim();
    let full = DMatrix::<T>::identity(n, n);
    let mut current = full.clone();
    let mut dims = vec![n];
    loop {
        let next = if central {
            bracket_span(mu, &full, &current)
        } else {
            bracket_span(mu, &current, &current)
        };
        let d = next.ncols();
        if d == *dims.last().unwrap() {
            break;
        }
        dims.push(d);
        if d == 0 {
            break;
        }
        current = next;
    }
    dims
}

pub fn is_solvable<T: Real>(mu: &BracketTensor<T>) -> Result<bool> {
    Ok(*derived_series(mu)?.last().unwrap() == 0)
}

pub fn is_nilpotent<T: Real>(mu: &BracketTensor<T>) -> Result<bool> {
    Ok(*lower_central_series(mu)?.last().unwrap() == 0)
}

/// `|(ad X)^n| <= nilp_tol * |ad X|^n`.
pub fn is_nilpotent_endomorphism<T: Real>(a: &Endomorphism<T>) -> bool {
    let n = a.nrows();
    let norm = a.norm();
    if norm == T::zero() {
        return true;
    }
    let unit = a / norm;
    let mut p = unit.clone();
    for _ in 1..n {
        p = &p * &unit;
    }
    p.norm() <= T::tol(tolerances::NILP)
}

/// Nilradical of a solvable bracket together with its orthogonal complement.
#[derive(Clone, Debug)]
pub struct Nilradical<T: Real> {
    /// Orthonormal basis of `n` as columns.
    pub basis: DMatrix<T>,
    /// Orthonormal basis of `a = n^perp` as columns.
    pub complement: DMatrix<T>,
    /// `dim a`.
    pub rank: usize,
    /// `|mu(s, n) - proj_n mu(s, n)|`, zero for an ideal.
    pub ideal_residual: T,
}

impl<T: Real> Nilradical<T> {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthogonal projection onto the complement `a`.
    pub fn project_complement(&self, x: &DVector<T>) -> DVector<T> {
        &self.complement * (self.complement.transpose() * x)
    }
}

/// Sum of squared moduli of the eigenvalues of `ad X`.
///
/// For a solvable algebra the eigenvalues of `ad X` are (complex) linear
/// functionals of `X`, so this is a positive semidefinite quadratic form
/// whose kernel is exactly the nilradical.
fn root_form_value<T: Real>(mu: &BracketTensor<T>, x: &DVector<T>) -> T {
    linalg::eigenvalues(&ad_map(mu, x))
        .iter()
        .fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Nilradical `n = { X : ad X nilpotent }` of a solvable bracket.
pub fn nilradical<T: Real>(mu: &BracketTensor<T>) -> Result<Nilradical<T>> {
    if !is_solvable(mu)? {
        return Err(Error::NotSolvable);
    }
    let n = mu.dim();
    let e = |i: usize| {
        let mut v = DVector::zeros(n);
        v[i] = T::one();
        v
    };
    let mut q = DMatrix::zeros(n, n);
    for a in 0..n {
        q[(a, a)] = root_form_value(mu, &e(a));
        for b in (a + 1)..n {
            let plus = root_form_value(mu, &(e(a) + e(b)));
            let minus = root_form_value(mu, &(e(a) - e(b)));
            let v = (plus - minus) * T::of(0.25);
            q[(a, b)] = v;
            q[(b, a)] = v;
        }
    }
    let (vals, vecs) = linalg::sym_eigen_sorted(&q);
    let scale = mu.norm_sq().max(vals.last().copied().unwrap_or_else(T::zero));
    let threshold = T::tol(1e-6) * scale;
    let mut kernel_cols = Vec::new();
    let mut comp_cols = Vec::new();
    for (idx, &v) in vals.iter().enumerate() {
        let col = vecs.column(idx).into_owned();
        if v <= threshold && is_nilpotent_endomorphism(&ad_map(mu, &col)) {
            kernel_cols.push(col);
        } else {
            comp_cols.push(col);
        }
    }
    let basis = if kernel_cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&kernel_cols)
    };
    let complement = if comp_cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&comp_cols)
    };
    let ideal_residual = if basis.ncols() == 0 {
        T::zero()
    } else {
        let image = {
            let mut cols = Vec::new();
            for i in 0..n {
                for c in 0..basis.ncols() {
                    cols.push(mu.apply(&e(i), &basis.column(c).into_owned()));
                }
            }
            DMatrix::from_columns(&cols)
        };
        linalg::span_residual(&image, &basis)
    };
    let rank = complement.ncols();
    Ok(Nilradical {
        basis,
        complement,
        rank,
        ideal_residual,
    })
}

/// Orthonormal basis of `Der(mu) = { A : pi(A) mu = 0 }` inside `gl(n)`.
pub fn derivation_space<T: Real>(mu: &BracketTensor<T>) -> Vec<Endomorphism<T>> {
    let n = mu.dim();
    let kernel = linalg::null_space(&pi_matrix(mu), T::tol(tolerances::RANK));
    (0..kernel.ncols())
        .map(|c| linalg::unflatten(&kernel.column(c).into_owned(), n))
        .collect()
}

/// `|pi(A) mu|`, zero iff `A` is a derivation.
pub fn derivation_defect<T: Real>(mu: &BracketTensor<T>, a: &Endomorphism<T>) -> T {
    pi_action(a, mu).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn h3() -> BracketTensor<f64> {
        catalog::heisenberg3()
    }

    /// Brute-force cyclic sum over every ordered triple, scaled to the
    /// `i < j < k` convention (each unordered triple appears 6 times).
    fn jacobi_oracle(mu: &BracketTensor<f64>) -> f64 {
        let n = mu.dim();
        let br = |x: &[f64], y: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        out[k] += x[i] * y[j] * mu.get(i, j, k);
                    }
                }
            }
            out
        };
        let e = |i: usize| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v
        };
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = br(&br(&e(i), &e(j)), &e(k));
                    let b = br(&br(&e(j), &e(k)), &e(i));
                    let c = br(&br(&e(k), &e(i)), &e(j));
                    total += (0..n).map(|m| (a[m] + b[m] + c[m]).powi(2)).sum::<f64>();
                }
            }
        }
        (total / 6.0).sqrt()
    }

    #[test]
    fn jacobi_of_catalog_is_zero() {
        assert_eq!(jacobi_residual(&h3()), 0.0);
        assert_eq!(jacobi_residual(&BracketTensor::<f64>::zeros(3).unwrap()), 0.0);
    }

    #[test]
    fn jacobi_of_perturbed_bracket_matches_brute_force() {
        // mu(e1,e2)=e3, mu(e1,e3)=e1, then c[2][3][2] += 1 (1-based)
        let mu = BracketTensor::from_entries(
            3,
            &[(0, 1, 2, 1.0), (0, 2, 0, 1.0), (1, 2, 1, 1.0)],
        )
        .unwrap();
        let r = jacobi_residual(&mu);
        let oracle = jacobi_oracle(&mu);
        assert!(r > 0.1);
        assert!((r - oracle).abs() < 1e-12, "{r} vs {oracle}");
    }

    #[test]
    fn act_identity_and_diagonal() {
        let mu = h3();
        let id = DMatrix::identity(3, 3);
        assert_eq!(act(&id, &mu).unwrap(), mu);
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 1.0]));
        let out = act(&h, &mu).unwrap();
        assert!((out.get(0, 1, 2) - 0.5).abs() < 1e-15);
        assert!((out.norm_sq() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn act_rejects_singular_gauge() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 1.0]));
        assert!(matches!(act(&h, &h3()), Err(Error::SingularGauge { .. })));
    }

    #[test]
    fn orthogonal_swap_preserves_jacobi() {
        let k = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        let out = act(&k, &h3()).unwrap();
        assert_eq!(jacobi_residual(&out), 0.0);
        assert!((out.norm_sq() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn pi_action_examples() {
        let mu = h3();
        let id = DMatrix::identity(3, 3);
        assert!(pi_action(&id, &mu).axpy(1.0, &mu).norm() < 1e-15);
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -1.0, 1.0]));
        assert!(pi_action(&a, &mu).axpy(-3.0, &mu).norm() < 1e-15);
        let zero = BracketTensor::zeros(3).unwrap();
        assert!(pi_action(&a, &zero).is_zero());
    }

    #[test]
    fn ad_map_examples() {
        let s31 = catalog::s3_lambda(1.0).unwrap();
        let ad = ad_map(&s31, &DVector::from_vec(vec![1.0, 0.0, 0.0]));
        let want = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 1.0]));
        assert!((ad - want).norm() < 1e-15);
        let ad3 = ad_map(&h3(), &DVector::from_vec(vec![0.0, 0.0, 1.0]));
        assert_eq!(ad3.norm(), 0.0);
    }

    #[test]
    fn series_examples() {
        assert_eq!(derived_series(&h3()).unwrap(), vec![3, 1, 0]);
        assert!(is_nilpotent(&h3()).unwrap());
        let s31 = catalog::s3_lambda(1.0).unwrap();
        assert_eq!(derived_series(&s31).unwrap(), vec![3, 2, 0]);
        assert!(is_solvable(&s31).unwrap());
        assert!(!is_nilpotent(&s31).unwrap());
        let zero = BracketTensor::<f64>::zeros(3).unwrap();
        assert_eq!(derived_series(&zero).unwrap(), vec![3, 0]);
        assert!(is_nilpotent(&zero).unwrap());
    }

    #[test]
    fn series_rejects_non_lie() {
        let mu = BracketTensor::from_entries(3, &[(0, 1, 2, 1.0), (0, 2, 0, 1.0)]).unwrap();
        assert!(matches!(derived_series(&mu), Err(Error::NotALieBracket { .. })));
    }

    #[test]
    fn nilradical_examples() {
        let n = nilradical(&h3()).unwrap();
        assert_eq!((n.dim(), n.rank), (3, 0));
        for mu in [catalog::s3_lambda(1.0_f64).unwrap(), catalog::e2()] {
            let n = nilradical(&mu).unwrap();
            assert_eq!((n.dim(), n.rank), (2, 1));
            // complement is spanned by e1
            assert!((n.complement[(0, 0)].abs() - 1.0).abs() < 1e-12);
            assert!(n.ideal_residual < 1e-10);
        }
    }

    #[test]
    fn nilradical_rejects_non_solvable() {
        // so(3)
        let mu = BracketTensor::from_entries(
            3,
            &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)],
        )
        .unwrap();
        assert_eq!(nilradical(&mu).unwrap_err(), Error::NotSolvable);
    }

    #[test]
    fn derivation_space_examples() {
        let zero = BracketTensor::<f64>::zeros(3).unwrap();
        assert_eq!(derivation_space(&zero).len(), 9);
        let der = derivation_space(&h3());
        assert_eq!(der.len(), 6);
        for d in &der {
            assert!(derivation_defect(&h3(), d) < 1e-8);
        }
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 2.0]));
        assert!(derivation_defect(&h3(), &d) < 1e-15);
    }
}
