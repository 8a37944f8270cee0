//! Small dense linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex;

use crate::scalar::Real;

/// Endomorphism of the underlying `n`-dimensional Euclidean space.
pub type Endomorphism<T> = DMatrix<T>;

/// Frobenius inner product `tr(A B^t)`.
pub fn frob_dot<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    a.dot(b)
}

/// Symmetric part `(A + A^t) / 2`.
pub fn sym_part<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    (a + a.transpose()) * T::of(0.5)
}

/// Commutator `[A, B] = AB - BA`.
pub fn commutator<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    a * b - b * a
}

/// `|A - A^t|` (Frobenius).
pub fn asymmetry<T: Real>(a: &DMatrix<T>) -> T {
    (a - a.transpose()).norm()
}

/// Row-major flattening, matching the basis `E_ab -> a * n + b`.
pub fn flatten<T: Real>(a: &DMatrix<T>) -> DVector<T> {
    let (r, c) = a.shape();
    DVector::from_fn(r * c, |idx, _| a[(idx / c, idx % c)])
}

/// Inverse of [`flatten`] for square matrices.
pub fn unflatten<T: Real>(v: &DVector<T>, n: usize) -> DMatrix<T> {
    DMatrix::from_fn(n, n, |i, j| v[i * n + j])
}

/// The matrix unit `E_ab` (one in row `a`, column `b`).
pub fn unit<T: Real>(n: usize, a: usize, b: usize) -> DMatrix<T> {
    let mut m = DMatrix::zeros(n, n);
    m[(a, b)] = T::one();
    m
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
/// Columns of the returned matrix are the matching unit eigenvectors.
pub fn sym_eigen_sorted<T: Real>(a: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let n = a.nrows();
    let sym = sym_part(a);
    let cap = iteration_cap(n);
    let eig = SymmetricEigen::try_new(sym.clone(), T::machine_eps(), cap)
        .or_else(|| SymmetricEigen::try_new(sym, T::machine_eps() * T::of(64.0), 10 * cap))
        .expect("symmetric eigensolver failed to converge");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues of a general real square matrix.
///
/// The unshifted Schur iteration can stall on some exactly structured
/// inputs (nilpotent blocks, exact rotations), so failed attempts are
/// retried on the transpose and on a shifted copy.
pub fn eigenvalues<T: Real>(a: &DMatrix<T>) -> Vec<Complex<T>> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    let eps = T::machine_eps();
    let max_iter = 2000 * n;
    if let Some(s) = Schur::try_new(a.clone(), eps, max_iter) {
        return quasi_triangular_eigenvalues(&s.unpack().1);
    }
    if let Some(s) = Schur::try_new(a.transpose(), eps, max_iter) {
        return quasi_triangular_eigenvalues(&s.unpack().1);
    }
    let scale = a.norm().max(T::one());
    for k in 1..8 {
        let shift = scale * T::of(0.0173 * k as f64);
        let shifted = a + DMatrix::identity(n, n) * shift;
        if let Some(s) = Schur::try_new(shifted, eps, max_iter) {
            return s
                .complex_eigenvalues()
                .iter()
                .map(|z| Complex::new(z.re - shift, z.im))
                .collect();
        }
    }
    panic!("Schur iteration failed to converge on a {n}x{n} matrix");
}

/// Eigenvalues of a real Schur form. nalgebra's own extraction returns NaN
/// for nearly defective 2x2 blocks.
fn quasi_triangular_eigenvalues<T: Real>(t: &DMatrix<T>) -> Vec<Complex<T>> {
    let n = t.nrows();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != T::zero() {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let mean = (a + d) * T::of(0.5);
            let half = (a - d) * T::of(0.5);
            let disc = half * half + b * c;
            if disc >= T::zero() {
                let r = disc.sqrt();
                out.push(Complex::new(mean + r, T::zero()));
                out.push(Complex::new(mean - r, T::zero()));
            } else {
                let r = (-disc).sqrt();
                out.push(Complex::new(mean, r));
                out.push(Complex::new(mean, -r));
            }
            i += 2;
        } else {
            out.push(Complex::new(t[(i, i)], T::zero()));
            i += 1;
        }
    }
    out
}

/// Iteration cap for the bounded decompositions; nalgebra's default
/// constructors iterate without limit and can stall on exactly
/// structured inputs.
fn iteration_cap(n: usize) -> usize {
    5000 * n.max(1)
}

fn bounded_svd<T: Real>(a: &DMatrix<T>) -> (DMatrix<T>, DVector<T>, DMatrix<T>) {
    let cap = iteration_cap(a.nrows().max(a.ncols()));
    let eps = T::machine_eps();
    if let Some(svd) = a.clone().try_svd(true, true, eps, cap) {
        return (svd.u.unwrap(), svd.singular_values, svd.v_t.unwrap());
    }
    // a^t = V S U^t
    if let Some(svd) = a.transpose().try_svd(true, true, eps, cap) {
        return (
            svd.v_t.unwrap().transpose(),
            svd.singular_values,
            svd.u.unwrap().transpose(),
        );
    }
    // loosen the convergence threshold as a last resort
    let svd = a
        .clone()
        .try_svd(true, true, eps * T::of(64.0), 10 * cap)
        .expect("SVD failed to converge");
    (svd.u.unwrap(), svd.singular_values, svd.v_t.unwrap())
}

/// Thin SVD of `a`, singular values sorted descending.
/// Returns `(U, sigma, V)` with `a = U diag(sigma) V^t`.
pub fn svd_sorted<T: Real>(a: &DMatrix<T>) -> (DMatrix<T>, Vec<T>, DMatrix<T>) {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return (DMatrix::zeros(m, 0), Vec::new(), DMatrix::zeros(n, 0));
    }
    let (u, singular_values, vt) = bounded_svd(a);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        singular_values[j]
            .partial_cmp(&singular_values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let sigma = order.iter().map(|&i| singular_values[i]).collect();
    let u_sorted = DMatrix::from_fn(m, k, |r, c| u[(r, order[c])]);
    let v_sorted = DMatrix::from_fn(n, k, |r, c| vt[(order[c], r)]);
    (u_sorted, sigma, v_sorted)
}

/// Number of singular values above `rel_tol * sigma_max`.
fn numerical_rank<T: Real>(sigma: &[T], rel_tol: T) -> usize {
    let smax = sigma.first().copied().unwrap_or_else(T::zero);
    if smax <= T::zero() {
        return 0;
    }
    sigma.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Orthonormal basis (as columns) of the column space of `a`.
pub fn orth_range<T: Real>(a: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    let (u, sigma, _) = svd_sorted(a);
    let r = numerical_rank(&sigma, rel_tol);
    u.columns(0, r).into_owned()
}

/// Orthonormal basis of the column space, keeping singular values above
/// the absolute threshold `abs_tol`.
pub fn orth_range_abs<T: Real>(a: &DMatrix<T>, abs_tol: T) -> DMatrix<T> {
    let (u, sigma, _) = svd_sorted(a);
    let r = sigma.iter().filter(|&&s| s > abs_tol).count();
    u.columns(0, r).into_owned()
}

/// Orthonormal basis (as columns) of the null space of `a`.
///
/// A wide input is padded with zero rows so the SVD delivers a full `V`.
pub fn null_space<T: Real>(a: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    let (m, n) = a.shape();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let (_, sigma, v) = svd_sorted(&padded);
    let r = numerical_rank(&sigma, rel_tol);
    v.columns(r, n - r).into_owned()
}

/// Dimension of the span of the columns of `a`.
pub fn rank<T: Real>(a: &DMatrix<T>, rel_tol: T) -> usize {
    let (_, sigma, _) = svd_sorted(a);
    numerical_rank(&sigma, rel_tol)
}

/// Orthonormal basis of the intersection of two column spans (both given
/// with orthonormal columns).
pub fn intersection<T: Real>(u: &DMatrix<T>, w: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    let dim = u.nrows();
    if u.ncols() == 0 || w.ncols() == 0 {
        return DMatrix::zeros(dim, 0);
    }
    let mut stacked = DMatrix::zeros(dim, u.ncols() + w.ncols());
    stacked.view_mut((0, 0), (dim, u.ncols())).copy_from(u);
    stacked
        .view_mut((0, u.ncols()), (dim, w.ncols()))
        .copy_from(&(-w));
    let kernel = null_space(&stacked, rel_tol);
    if kernel.ncols() == 0 {
        return DMatrix::zeros(dim, 0);
    }
    let coeffs = kernel.rows(0, u.ncols()).into_owned();
    orth_range(&(u * coeffs), rel_tol)
}

/// Distance of the columns of `a` from the column span of the orthonormal `basis`.
pub fn span_residual<T: Real>(a: &DMatrix<T>, basis: &DMatrix<T>) -> T {
    if a.ncols() == 0 {
        return T::zero();
    }
    if basis.ncols() == 0 {
        return a.norm();
    }
    (a - basis * (basis.transpose() * a)).norm()
}

/// Symmetric positive definite square root.
pub fn spd_sqrt<T: Real>(a: &DMatrix<T>) -> Option<DMatrix<T>> {
    let (vals, vecs) = sym_eigen_sorted(a);
    if vals.iter().any(|&v| v <= T::zero()) {
        return None;
    }
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|v| v.sqrt()),
    ));
    Some(&vecs * d * vecs.transpose())
}

/// Stack a list of equally sized matrices as flattened columns.
pub fn columns_of<T: Real>(mats: &[DMatrix<T>], n: usize) -> DMatrix<T> {
    let mut out = DMatrix::zeros(n * n, mats.len());
    for (c, m) in mats.iter().enumerate() {
        out.set_column(c, &flatten(m));
    }
    out
}

/// Cluster sorted values into groups whose neighbours differ by at most `tol`.
/// Returns `(representative, multiplicity)` pairs.
pub fn cluster_sorted<T: Real>(values: &[T], tol: T) -> Vec<(T, usize)> {
    let mut out: Vec<(T, usize, T)> = Vec::new();
    for &v in values {
        match out.last_mut() {
            Some((_, count, last)) if (v - *last).abs() <= tol => {
                *count += 1;
                *last = v;
            }
            _ => out.push((v, 1, v)),
        }
    }
    out.into_iter()
        .map(|(first, count, last)| ((first + last) * T::of(0.5), count))
        .collect()
}
