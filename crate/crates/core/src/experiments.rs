//! Experiment drivers: uniqueness of flow limits across random initial
//! metrics, and the collapse / non-collapse dichotomy of the raw flow.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bracket::{act, BracketTensor};
use crate::error::{Error, Result};
use crate::flow::{detect_soliton_convergence, integrate, FlowSpec, Variant};
use crate::linalg;
use crate::samples;
use crate::scalar::Real;
use crate::soliton::{fingerprint, OrbitFingerprint};
use crate::stratification::{beta_decomposition, check_gauged_with, random_qbeta_gauge, stratum_label};

#[derive(Clone, Debug)]
pub struct UniquenessOptions {
    pub seeds: usize,
    pub base_seed: u64,
    pub t_end: f64,
    /// Size of the random `Q_beta` perturbation.
    pub gauge_scale: f64,
    pub record_every: f64,
}

impl Default for UniquenessOptions {
    fn default() -> Self {
        Self {
            seeds: 5,
            base_seed: 0,
            t_end: 100.0,
            gauge_scale: 0.5,
            record_every: 0.1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub converged: bool,
    pub f_tail: f64,
    pub cauchy: f64,
    /// Largest minus smallest Ricci eigenvalue of the final bracket.
    pub ricci_spread: f64,
    pub fingerprint: OrbitFingerprint,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessReport {
    pub beta: Vec<f64>,
    pub outcomes: Vec<SeedOutcome>,
    pub max_pairwise_distance: f64,
    pub failing_seeds: Vec<u64>,
}

/// Flows `seeds` random `Q_beta`-gauges of `mu` with the scal*-normalized
/// gauged flow and compares the limits. Trajectories run in parallel; the
/// report lists them in seed order.
pub fn run_uniqueness_experiment<T: Real>(
    mu: &BracketTensor<T>,
    opts: &UniquenessOptions,
) -> Result<UniquenessReport> {
    let label = stratum_label(mu)?;
    let dec = beta_decomposition(&label)?;
    let check = check_gauged_with(mu, &dec);
    if !check.in_v_geq0 {
        return Err(Error::GaugeMismatch(format!(
            "bracket has negative components of norm {:e} for its own label",
            check.neg_component_norm
        )));
    }
    let outcomes: Vec<Result<SeedOutcome>> = (0..opts.seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = opts.base_seed + i;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_qbeta_gauge::<T, _>(&mut rng, &dec, T::of(opts.gauge_scale));
            let mu0 = act(&h, mu)?;
            let spec = FlowSpec::new(Variant::ScalStarNormalized, T::of(opts.t_end))
                .with_label(label.clone())
                .with_record_every(T::of(opts.record_every));
            let traj = integrate(&mu0, &spec)?;
            let conv = detect_soliton_convergence(&traj)?;
            let ric = &traj.last().curvature.ricci;
            let (vals, _) = linalg::sym_eigen_sorted(ric);
            Ok(SeedOutcome {
                seed,
                converged: conv.converged,
                f_tail: conv.f_tail,
                cauchy: conv.cauchy,
                ricci_spread: (*vals.last().unwrap() - vals[0]).to_f64_lossy(),
                fingerprint: fingerprint(&conv.limit)?,
            })
        })
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let mut max_pairwise_distance = 0.0f64;
    for (i, a) in outcomes.iter().enumerate() {
        for b in &outcomes[i + 1..] {
            max_pairwise_distance = max_pairwise_distance.max(a.fingerprint.distance(&b.fingerprint));
        }
    }
    Ok(UniquenessReport {
        beta: label.beta_diag().iter().map(|b| b.to_f64_lossy()).collect(),
        failing_seeds: outcomes.iter().filter(|o| !o.converged).map(|o| o.seed).collect(),
        outcomes,
        max_pairwise_distance,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollapseVerdict {
    NonCollapsed,
    Collapsed,
    /// The bracket is zero or flat from the start, so nothing moves.
    Trivial,
}

#[derive(Clone, Debug, Serialize)]
pub struct CollapseReport {
    pub t_end: f64,
    /// `[inf, sup]` of `t |mu|^2` over `[1, t_end]`.
    pub type_iii_window: (f64, f64),
    /// `[inf, sup]` of `t |Ric|` over `[1, t_end]`.
    pub ric_bound_window: (f64, f64),
    pub final_ric_bound: f64,
    pub verdict: CollapseVerdict,
}

/// Below this final `t |Ric|` the run counts as collapsed.
pub const COLLAPSE_FLOOR: f64 = 1e-3;

/// Raw flow of `mu`, optionally moved first by a seeded random metric
/// change, recording the Type-III quantities on `[1, t_end]`.
pub fn run_collapse_experiment<T: Real>(
    mu: &BracketTensor<T>,
    t_end: f64,
    gauge_seed: Option<u64>,
) -> Result<CollapseReport> {
    if t_end < 1.0 {
        return Err(Error::OutOfRange(format!("t_end = {t_end} must be at least 1")));
    }
    let mu0 = match gauge_seed {
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            act(&samples::random_gl::<T, _>(&mut rng, mu.dim()), mu)?
        }
        None => mu.clone(),
    };
    let spec = FlowSpec::new(Variant::Raw, T::of(t_end)).with_record_every(T::of(0.5));
    let traj = integrate(&mu0, &spec)?;
    let type_iii_window = traj.type_iii_window(1.0).unwrap_or((0.0, 0.0));
    let ric_bound_window = traj.ric_bound_window(1.0).unwrap_or((0.0, 0.0));
    let final_ric_bound = traj.last().monitors.ric_bound;
    let initial_ric = traj.samples[0].curvature.ricci.norm();
    let verdict = if mu0.is_zero() || initial_ric == T::zero() {
        CollapseVerdict::Trivial
    } else if final_ric_bound < COLLAPSE_FLOOR {
        CollapseVerdict::Collapsed
    } else {
        CollapseVerdict::NonCollapsed
    };
    Ok(CollapseReport {
        t_end,
        type_iii_window,
        ric_bound_window,
        final_ric_bound,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn hyperbolic_uniqueness_is_fast_and_tight() {
        let mu = catalog::s3_lambda(1.0_f64).unwrap();
        let opts = UniquenessOptions {
            seeds: 3,
            t_end: 40.0,
            ..Default::default()
        };
        let rep = run_uniqueness_experiment(&mu, &opts).unwrap();
        assert!(rep.failing_seeds.is_empty(), "{rep:?}");
        assert!(rep.max_pairwise_distance < 1e-6);
        assert!(rep.outcomes.iter().all(|o| o.ricci_spread < 1e-6));
        let seeds: Vec<u64> = rep.outcomes.iter().map(|o| o.seed).collect();
        assert_eq!(seeds, vec![0, 1, 2]);
    }

    #[test]
    fn single_seed_is_trivially_consistent() {
        let mu = catalog::heisenberg3::<f64>();
        let opts = UniquenessOptions {
            seeds: 1,
            t_end: 5.0,
            ..Default::default()
        };
        assert_eq!(run_uniqueness_experiment(&mu, &opts).unwrap().max_pairwise_distance, 0.0);
    }

    #[test]
    fn collapse_verdicts() {
        let rep = run_collapse_experiment(&catalog::heisenberg3::<f64>(), 50.0, None).unwrap();
        assert_eq!(rep.verdict, CollapseVerdict::NonCollapsed);
        assert!(rep.type_iii_window.0 > 0.0);
        let rep = run_collapse_experiment(&catalog::abelian::<f64>(3).unwrap(), 5.0, None).unwrap();
        assert_eq!(rep.verdict, CollapseVerdict::Trivial);
        let rep = run_collapse_experiment(&catalog::e2::<f64>(), 200.0, Some(1)).unwrap();
        assert_eq!(rep.verdict, CollapseVerdict::Collapsed, "{rep:?}");
    }
}
