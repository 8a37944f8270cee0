//! Stratum labels from the negative gradient flow of the moment-map
//! energy, and the gradings of `gl(n)` and of the bracket space attached
//! to a label.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::bracket::{act, pi_action, pi_matrix, BracketTensor};
use crate::curvature::moment_map_fast;
use crate::error::{Error, Result};
use crate::linalg::{self, Endomorphism};
use crate::samples;
use crate::scalar::{tolerances, Real};

/// Options for [`energy_gradient_flow`].
#[derive(Clone, Copy, Debug)]
pub struct GradientOptions {
    /// Stop once the relative criticality residual is below this.
    pub crit_tol: f64,
    pub max_steps: usize,
}

impl Default for GradientOptions {
    fn default() -> Self {
        Self {
            crit_tol: tolerances::CRIT,
            max_steps: 1_000_000,
        }
    }
}

/// Outcome of the energy gradient flow.
#[derive(Clone, Debug)]
pub struct GradientFlowResult<T: Real> {
    pub critical: BracketTensor<T>,
    /// `|pi(m) mu - |m|^2 mu| / |mu|` at the end.
    pub residual: T,
    pub steps: usize,
    /// Largest energy increase seen across one accepted step.
    pub max_energy_increase: T,
    /// Descent stopped at round-off above `crit_tol` but below [`STALL_TOL`].
    pub stalled: bool,
}

/// Largest relative residual accepted when descent can no longer resolve
/// the energy. A leftover off-critical component of size `r` moves the
/// moment map only by `O(r^2)`, so the label is still determined.
pub const STALL_TOL: f64 = 1e-6;

/// `|m(mu)|^2`.
pub fn energy<T: Real>(mu: &BracketTensor<T>) -> Result<T> {
    let m = moment_map_fast(mu)?;
    Ok(m.norm_squared())
}

/// `pi(m) mu - |m|^2 mu`; the energy gradient is `4 / |mu|^2` times this.
pub fn criticality_field<T: Real>(mu: &BracketTensor<T>) -> Result<BracketTensor<T>> {
    let m = moment_map_fast(mu)?;
    Ok(pi_action(&m, mu).axpy(-m.norm_squared(), mu))
}

/// Relative criticality residual.
pub fn criticality_residual<T: Real>(mu: &BracketTensor<T>) -> Result<T> {
    Ok(criticality_field(mu)?.norm() / mu.norm())
}

/// Energy changes below this are round-off.
fn energy_floor<T: Real>(e: T) -> T {
    e * T::machine_eps() * T::of(64.0)
}

/// Minimal-norm `A` with `pi(A) mu = field`. Derivation and scalar
/// components of the moment map act trivially on `mu` up to scale but
/// amplify round-off off the Lie variety, so they are dropped.
fn minimal_generator<T: Real>(mu: &BracketTensor<T>, field: &BracketTensor<T>) -> Endomorphism<T> {
    let p = pi_matrix(mu);
    let (u, sigma, v) = linalg::svd_sorted(&p);
    let cutoff = sigma.first().copied().unwrap_or(T::zero()) * T::tol(tolerances::RANK);
    let rhs = field.to_vector();
    let mut a = DVector::zeros(p.ncols());
    for (i, &sv) in sigma.iter().enumerate() {
        if sv > cutoff {
            a += v.column(i) * (u.column(i).dot(&rhs) / sv);
        }
    }
    linalg::unflatten(&a, mu.dim())
}

/// Damped Gauss-Newton step on the criticality field along the orbit
/// directions `exp(S) . mu`, `S` symmetric. Returns the new bracket and its
/// energy when the residual improves and the energy does not increase.
fn orbit_newton_step<T: Real>(
    mu: &BracketTensor<T>,
    radius: T,
    energy_now: T,
    residual_now: T,
) -> Result<Option<(BracketTensor<T>, T)>> {
    let n = mu.dim();
    let f0 = criticality_field(mu)?;
    let eps = T::of(1e-6);
    let mut dirs = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n {
        for b in a..n {
            let mut s = linalg::unit::<T>(n, a, b);
            if a != b {
                s += linalg::unit::<T>(n, b, a);
            }
            dirs.push(s);
        }
    }
    let moved = |g: &Endomorphism<T>| -> Result<BracketTensor<T>> {
        let out = act(&g.clone().exp(), mu)?;
        let norm = out.norm();
        if !norm.is_finite() || out.is_zero() {
            return Err(Error::SingularGauge { det: 0.0 });
        }
        Ok(out.scaled(radius / norm))
    };
    let mut jac = DMatrix::zeros(f0.coeffs().len(), dirs.len());
    for (c, s) in dirs.iter().enumerate() {
        let plus = criticality_field(&moved(&(s * eps))?)?;
        let minus = criticality_field(&moved(&(s * -eps))?)?;
        jac.set_column(c, &((plus.to_vector() - minus.to_vector()) / (eps * T::of(2.0))));
    }
    let (u, sigma, v) = linalg::svd_sorted(&jac);
    let top = sigma.first().copied().unwrap_or(T::zero());
    let projections: Vec<T> = (0..sigma.len()).map(|i| u.column(i).dot(&f0.to_vector())).collect();
    // Levenberg-Marquardt ladder: the plain Gauss-Newton step overshoots
    // along nearly flat orbit directions of a degenerate critical set.
    for lambda in [0.0, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
        let lambda = T::of(lambda) * top;
        let mut coef = DVector::zeros(dirs.len());
        for (i, &sv) in sigma.iter().enumerate() {
            let denom = sv * sv + lambda * lambda;
            if sv > top * T::of(1e-12) && denom > T::zero() {
                coef -= v.column(i) * (projections[i] * sv / denom);
            }
        }
        let mut gen = DMatrix::zeros(n, n);
        for (s, &c) in dirs.iter().zip(coef.iter()) {
            gen += s * c;
        }
        let Ok(trial) = moved(&gen) else { continue };
        let te = energy(&trial)?;
        let tr = criticality_residual(&trial)?;
        if te <= energy_now + energy_floor(energy_now) && tr < residual_now * T::of(0.95) {
            return Ok(Some((trial, te)));
        }
    }
    Ok(None)
}

/// Negative gradient flow of the energy on the sphere `|mu| = |mu0|`,
/// discretized as descent steps `exp(-s A) . mu` with Armijo backtracking,
/// where `pi(A) mu` is the energy gradient. Near a degenerate critical
/// point the descent is interleaved with Gauss-Newton steps inside the
/// orbit. Every accepted step lowers the energy.
pub fn energy_gradient_flow<T: Real>(
    mu0: &BracketTensor<T>,
    opts: GradientOptions,
) -> Result<GradientFlowResult<T>> {
    if mu0.is_zero() {
        return Err(Error::ZeroBracket);
    }
    let radius = mu0.norm();
    let mut mu = mu0.clone();
    let mut e = energy(&mu)?;
    let mut step = T::of(0.1) / mu.norm_sq();
    let armijo = T::of(1e-4);
    let crit_tol = T::tol(opts.crit_tol);
    let mut max_increase = T::zero();
    let mut newton_wait = 50usize;
    let mut since_newton = 0usize;
    let done = |mu, residual, steps, max_energy_increase| GradientFlowResult {
        critical: mu,
        residual,
        steps,
        max_energy_increase,
        stalled: false,
    };
    for steps in 0..opts.max_steps {
        let field = criticality_field(&mu)?;
        let fnorm_sq = field.norm_sq();
        let residual = fnorm_sq.sqrt() / mu.norm();
        if residual <= crit_tol {
            return Ok(done(mu, residual, steps, max_increase));
        }
        if since_newton >= newton_wait {
            since_newton = 0;
            match orbit_newton_step(&mu, radius, e, residual)? {
                Some((next, te)) => {
                    max_increase = max_increase.max(te - e);
                    mu = next;
                    e = te;
                    newton_wait = 1;
                    continue;
                }
                None => newton_wait = (newton_wait * 2).min(5000),
            }
        }
        since_newton += 1;
        // directional derivative of the energy along -field
        let slope = fnorm_sq * T::of(4.0) / mu.norm_sq();
        let gen = minimal_generator(&mu, &field);
        let mut accepted = false;
        let gen_norm = gen.norm();
        if step * gen_norm > T::one() {
            step = T::one() / gen_norm;
        }
        for _ in 0..60 {
            let trial = match act(&(&gen * -step).exp(), &mu) {
                Ok(t) if t.norm().is_finite() && !t.is_zero() => t,
                _ => {
                    step *= T::of(0.5);
                    continue;
                }
            };
            let trial = trial.scaled(radius / trial.norm());
            let te = energy(&trial)?;
            let resolved = armijo * step * slope > energy_floor(e);
            let ok = if resolved {
                te <= e - armijo * step * slope
            } else {
                te <= e + energy_floor(e) && criticality_residual(&trial)? < residual
            };
            if ok {
                max_increase = max_increase.max(te - e);
                mu = trial;
                e = te;
                accepted = true;
                step *= T::of(2.0);
                break;
            }
            step *= T::of(0.5);
        }
        if !accepted {
            // round-off floor: the energy no longer resolves the decrease
            if let Some((next, te)) = orbit_newton_step(&mu, radius, e, residual)? {
                max_increase = max_increase.max(te - e);
                mu = next;
                e = te;
                step = T::of(0.1) / mu.norm_sq();
                continue;
            }
            if residual <= T::tol(STALL_TOL) {
                let mut out = done(mu, residual, steps, max_increase);
                out.stalled = true;
                return Ok(out);
            }
            return Err(Error::MaxStepsExceeded {
                steps,
                residual: residual.to_f64_lossy(),
            });
        }
    }
    let residual = criticality_residual(&mu)?;
    if residual <= crit_tol {
        return Ok(done(mu, residual, opts.max_steps, max_increase));
    }
    Err(Error::MaxStepsExceeded {
        steps: opts.max_steps,
        residual: residual.to_f64_lossy(),
    })
}

/// Canonical stratum label.
#[derive(Clone, Debug)]
pub struct StratumLabel<T: Real> {
    /// Diagonal, nondecreasing, trace `-1`.
    pub beta: Endomorphism<T>,
    /// `beta + |beta|^2 Id`.
    pub beta_plus: Endomorphism<T>,
    /// Clustered eigenvalues of `ad beta+` on `gl(n)` with multiplicities.
    pub gl_eigen: Vec<(T, usize)>,
    /// Clustered eigenvalues of `pi(beta+)` on brackets with multiplicities.
    pub v_eigen: Vec<(T, usize)>,
    /// Critical bracket, conjugated so that `m(critical) = beta`.
    pub critical: BracketTensor<T>,
    /// Orthogonal `k` with `critical = k . (flow limit)`.
    pub frame: Endomorphism<T>,
    pub residual: T,
    /// True when the eigenvalues were rounded to nearby rationals.
    pub snapped: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LabelSummary {
    pub beta: Vec<f64>,
    pub beta_norm_sq: f64,
    pub beta_plus: Vec<f64>,
    pub residual: f64,
    pub snapped: bool,
    pub label_tol: f64,
}

impl<T: Real> StratumLabel<T> {
    pub fn dim(&self) -> usize {
        self.beta.nrows()
    }

    pub fn beta_diag(&self) -> Vec<T> {
        (0..self.dim()).map(|i| self.beta[(i, i)]).collect()
    }

    pub fn beta_norm_sq(&self) -> T {
        self.beta.norm_squared()
    }

    /// Equal labels: sorted eigenvalues agree within `label_tol`.
    pub fn same_as(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self
                .beta_diag()
                .iter()
                .zip(other.beta_diag())
                .all(|(a, b)| (*a - b).abs() <= T::tol(tolerances::LABEL))
    }

    pub fn summary(&self) -> LabelSummary {
        LabelSummary {
            beta: self.beta_diag().iter().map(|v| v.to_f64_lossy()).collect(),
            beta_norm_sq: self.beta_norm_sq().to_f64_lossy(),
            beta_plus: (0..self.dim()).map(|i| self.beta_plus[(i, i)].to_f64_lossy()).collect(),
            residual: self.residual.to_f64_lossy(),
            snapped: self.snapped,
            label_tol: tolerances::LABEL,
        }
    }
}

/// Rounds `x` to the nearest fraction with denominator at most `max_den`
/// if it is within `tol` of it.
fn snap_rational(x: f64, max_den: u32, tol: f64) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for q in 1..=max_den {
        let p = (x * q as f64).round();
        let r = p / q as f64;
        let err = (x - r).abs();
        if err <= tol && best.is_none_or(|(_, e)| err < e - 1e-15) {
            best = Some((r, err));
        }
    }
    best.map(|(r, _)| r + 0.0)
}

/// Snaps sorted eigenvalues to rationals when every one of them is close
/// to one and the trace stays `-1`.
fn snap_eigenvalues<T: Real>(vals: &[T]) -> Option<Vec<T>> {
    let tol = tolerances::LABEL;
    let snapped: Option<Vec<f64>> = vals
        .iter()
        .map(|v| snap_rational(v.to_f64_lossy(), 60, tol))
        .collect();
    let snapped = snapped?;
    let trace: f64 = snapped.iter().sum();
    if (trace + 1.0).abs() > 1e-12 {
        return None;
    }
    Some(snapped.into_iter().map(T::of).collect())
}

/// Label built directly from the diagonal of a canonical `beta`.
pub fn label_from_beta<T: Real>(beta: &[T], critical: BracketTensor<T>) -> Result<StratumLabel<T>> {
    let n = beta.len();
    if critical.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: critical.dim(),
        });
    }
    if beta.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::NonCanonicalBeta);
    }
    let trace = beta.iter().fold(T::zero(), |a, &b| a + b);
    if (trace + T::one()).abs() > T::tol(1e-8) {
        return Err(Error::NonCanonicalBeta);
    }
    let beta_m = DMatrix::from_diagonal(&DVector::from_column_slice(beta));
    let norm_sq = beta_m.norm_squared();
    let beta_plus = &beta_m + DMatrix::identity(n, n) * norm_sq;
    let bp: Vec<T> = (0..n).map(|i| beta_plus[(i, i)]).collect();
    let tol = T::tol(tolerances::EIG) * T::one().max(beta_plus.norm());
    let mut gl: Vec<T> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            gl.push(bp[i] - bp[j]);
        }
    }
    let mut vv: Vec<T> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                vv.push(bp[k] - bp[i] - bp[j]);
            }
        }
    }
    let sort = |v: &mut Vec<T>| v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    sort(&mut gl);
    sort(&mut vv);
    Ok(StratumLabel {
        beta: beta_m,
        beta_plus,
        gl_eigen: linalg::cluster_sorted(&gl, tol),
        v_eigen: linalg::cluster_sorted(&vv, tol),
        critical,
        frame: DMatrix::identity(n, n),
        residual: T::zero(),
        snapped: false,
    })
}

/// Stratum label of a nonzero bracket.
pub fn stratum_label<T: Real>(mu0: &BracketTensor<T>) -> Result<StratumLabel<T>> {
    stratum_label_with(mu0, GradientOptions::default())
}

pub fn stratum_label_with<T: Real>(
    mu0: &BracketTensor<T>,
    opts: GradientOptions,
) -> Result<StratumLabel<T>> {
    let flow = energy_gradient_flow(mu0, opts)?;
    let m = moment_map_fast(&flow.critical)?;
    let (vals, vecs) = linalg::sym_eigen_sorted(&m);
    // m(k . mu) = k m k^t, so k = vecs^t diagonalizes
    let frame = vecs.transpose();
    let critical = act(&frame, &flow.critical)?;
    let (beta, snapped) = match snap_eigenvalues(&vals) {
        Some(s) => (s, true),
        None => (vals, false),
    };
    let mut label = label_from_beta(&beta, critical)?;
    label.frame = frame;
    label.residual = flow.residual;
    label.snapped = snapped;
    Ok(label)
}

/// Index triple `(i, j, k)` with `i < j`, standing for the unit bracket
/// `(e^{ij} - e^{ji}) e_k / sqrt 2`.
pub type VIndex = (usize, usize, usize);

/// The subspaces of `gl(n)` and of the bracket space attached to a label.
#[derive(Clone, Debug)]
pub struct BetaDecomposition<T: Real> {
    pub beta: Vec<T>,
    pub beta_plus: Vec<T>,
    /// Orthonormal bases (Frobenius) of the named subspaces.
    pub g_beta: Vec<Endomorphism<T>>,
    pub u_beta: Vec<Endomorphism<T>>,
    pub k_u_beta: Vec<Endomorphism<T>>,
    /// Skew-symmetric part of `g_beta`.
    pub k_beta: Vec<Endomorphism<T>>,
    /// `{A in g_beta : <A, beta> = 0}`.
    pub h_beta: Vec<Endomorphism<T>>,
    /// `h_beta` followed by `u_beta`.
    pub sl_beta: Vec<Endomorphism<T>>,
    /// Eigenspaces of `pi(beta+)`: eigenvalue and the unit brackets spanning it.
    pub v_grading: Vec<(T, Vec<VIndex>)>,
    tol: T,
}

impl<T: Real> BetaDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    /// `ad beta+` eigenvalue of `E_ij`.
    pub fn gl_weight(&self, i: usize, j: usize) -> T {
        self.beta_plus[i] - self.beta_plus[j]
    }

    /// Norms of the components of `mu` in each `pi(beta+)` eigenspace.
    pub fn grading_norms(&self, mu: &BracketTensor<T>) -> Vec<(T, T)> {
        let two = T::of(2.0);
        self.v_grading
            .iter()
            .map(|(r, idx)| {
                let sq = idx
                    .iter()
                    .fold(T::zero(), |acc, &(i, j, k)| acc + two * mu.get(i, j, k).powi(2));
                (*r, sq.sqrt())
            })
            .collect()
    }

    /// Component of `mu` in the eigenspace with eigenvalue `r`.
    pub fn component(&self, mu: &BracketTensor<T>, r: T) -> BracketTensor<T> {
        let mut out = BracketTensor::zeros(mu.dim()).expect("same dimension");
        for (val, idx) in &self.v_grading {
            if (*val - r).abs() <= self.tol {
                for &(i, j, k) in idx {
                    out.set(i, j, k, mu.get(i, j, k));
                }
            }
        }
        out
    }
}

/// Builds the decomposition for a canonical label.
pub fn beta_decomposition<T: Real>(label: &StratumLabel<T>) -> Result<BetaDecomposition<T>> {
    let n = label.dim();
    let off = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j)
        .fold(T::zero(), |acc, (i, j)| acc + label.beta[(i, j)].abs());
    if off > T::tol(tolerances::SYM) {
        return Err(Error::NonCanonicalBeta);
    }
    let beta = label.beta_diag();
    if beta.windows(2).any(|w| w[1] < w[0] - T::tol(tolerances::SYM)) {
        return Err(Error::NonCanonicalBeta);
    }
    let beta_plus: Vec<T> = (0..n).map(|i| label.beta_plus[(i, i)]).collect();
    let tol = T::tol(tolerances::EIG) * T::one().max(label.beta_plus.norm());
    let inv_sqrt2 = T::one() / T::of(2.0).sqrt();
    let mut g_beta = Vec::new();
    let mut u_beta = Vec::new();
    let mut k_u_beta = Vec::new();
    let mut k_beta = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let w = beta[i] - beta[j];
            if w.abs() <= tol {
                g_beta.push(linalg::unit(n, i, j));
                if i < j {
                    k_beta.push((linalg::unit::<T>(n, i, j) - linalg::unit::<T>(n, j, i)) * inv_sqrt2);
                }
            } else if w > T::zero() {
                u_beta.push(linalg::unit(n, i, j));
                k_u_beta.push((linalg::unit::<T>(n, i, j) - linalg::unit::<T>(n, j, i)) * inv_sqrt2);
            }
        }
    }
    // h_beta: orthogonal complement of beta inside g_beta
    let beta_m = &label.beta;
    let beta_unit = beta_m / beta_m.norm();
    let projected: Vec<DMatrix<T>> = g_beta
        .iter()
        .map(|a| a - &beta_unit * linalg::frob_dot(a, &beta_unit))
        .collect();
    let basis = linalg::orth_range(&linalg::columns_of(&projected, n), T::tol(tolerances::RANK));
    let h_beta: Vec<DMatrix<T>> = (0..basis.ncols())
        .map(|c| linalg::unflatten(&basis.column(c).into_owned(), n))
        .collect();
    let mut sl_beta = h_beta.clone();
    sl_beta.extend(u_beta.iter().cloned());

    let mut weights: Vec<(T, VIndex)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                weights.push((beta_plus[k] - beta_plus[i] - beta_plus[j], (i, j, k)));
            }
        }
    }
    weights.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut v_grading: Vec<(T, Vec<VIndex>)> = Vec::new();
    for (w, idx) in weights {
        match v_grading.last_mut() {
            Some((r, list)) if (w - *r).abs() <= tol => list.push(idx),
            _ => v_grading.push((w, vec![idx])),
        }
    }
    Ok(BetaDecomposition {
        beta,
        beta_plus,
        g_beta,
        u_beta,
        k_u_beta,
        k_beta,
        h_beta,
        sl_beta,
        v_grading,
        tol,
    })
}

/// Projection onto `q_beta = g_beta + u_beta` along `k_u_beta`.
pub fn project_qbeta<T: Real>(a: &Endomorphism<T>, dec: &BetaDecomposition<T>) -> Endomorphism<T> {
    let n = dec.dim();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if dec.beta[i] - dec.beta[j] >= -dec.tol {
                out[(i, j)] += a[(i, j)];
            } else {
                // the u_beta^t entry (i, j) moves to (j, i)
                out[(j, i)] += a[(i, j)];
            }
        }
    }
    out
}

/// Result of [`check_gauged`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GaugeCheck {
    pub in_v_geq0: bool,
    pub v0_component_norm: f64,
    pub neg_component_norm: f64,
}

/// Tests whether `mu` lies in the sum of the nonnegative eigenspaces of
/// `pi(beta+)`. Semistability of the zero component is not decided.
pub fn check_gauged<T: Real>(mu: &BracketTensor<T>, label: &StratumLabel<T>) -> Result<GaugeCheck> {
    let dec = beta_decomposition(label)?;
    Ok(check_gauged_with(mu, &dec))
}

pub fn check_gauged_with<T: Real>(mu: &BracketTensor<T>, dec: &BetaDecomposition<T>) -> GaugeCheck {
    let mut neg = T::zero();
    let mut zero = T::zero();
    for (r, norm) in dec.grading_norms(mu) {
        if r < -dec.tol {
            neg += norm * norm;
        } else if r.abs() <= dec.tol {
            zero += norm * norm;
        }
    }
    let neg = neg.sqrt();
    GaugeCheck {
        in_v_geq0: neg <= T::tol(tolerances::GAUGE) * mu.norm(),
        v0_component_norm: zero.sqrt().to_f64_lossy(),
        neg_component_norm: neg.to_f64_lossy(),
    }
}

/// Random element `exp(G)(Id + U)` of `Q_beta` with `G in g_beta` and
/// `U in u_beta`, entries of size `scale`.
pub fn random_qbeta_gauge<T: Real, R: Rng>(
    rng: &mut R,
    dec: &BetaDecomposition<T>,
    scale: T,
) -> Endomorphism<T> {
    let n = dec.dim();
    let mut g = DMatrix::zeros(n, n);
    for b in &dec.g_beta {
        g += b * (T::of(rng.gen_range(-1.0..1.0)) * scale);
    }
    let mut u = DMatrix::identity(n, n);
    for b in &dec.u_beta {
        u += b * (T::of(rng.gen_range(-1.0..1.0)) * scale);
    }
    g.exp() * u
}

/// Splits `h = k q` with `k` orthogonal and `q` lower triangular, hence in
/// `Q_beta` for a sorted `beta`.
pub fn gauge_into_qbeta<T: Real>(h: &Endomorphism<T>) -> (Endomorphism<T>, Endomorphism<T>) {
    let n = h.nrows();
    let rev = DMatrix::from_fn(n, n, |i, j| if i + j + 1 == n { T::one() } else { T::zero() });
    let qr = (&rev * h * &rev).qr();
    let (q, r) = (qr.q(), qr.r());
    (&rev * q * &rev, &rev * r * &rev)
}

/// Whether `h` lies in `Q_beta` (no entries in the `u_beta^t` block).
pub fn in_qbeta<T: Real>(h: &Endomorphism<T>, dec: &BetaDecomposition<T>) -> bool {
    let n = dec.dim();
    let mut off = T::zero();
    for i in 0..n {
        for j in 0..n {
            if dec.beta[i] - dec.beta[j] < -dec.tol {
                off += h[(i, j)].abs();
            }
        }
    }
    off <= T::tol(tolerances::GAUGE) * (T::one() + h.norm())
}

/// Random orthogonal `k` in `K_beta` (block diagonal for the `beta` blocks).
pub fn random_kbeta<T: Real, R: Rng>(rng: &mut R, dec: &BetaDecomposition<T>) -> Endomorphism<T> {
    let n = dec.dim();
    let mut k = DMatrix::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (dec.beta[end] - dec.beta[start]).abs() <= dec.tol {
            end += 1;
        }
        let block = samples::random_orthogonal::<T, R>(rng, end - start);
        k.view_mut((start, start), (end - start, end - start)).copy_from(&block);
        start = end;
    }
    k
}
