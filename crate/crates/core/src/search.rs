//! Optimal witness constants.
//!
//! For `W_sigma` the maximum of `f` over states with a product eigenbasis is
//! attained on the family `tau = |s><s| (x) rho_B`, where it reduces to the
//! one-dimensional problem solved by [`closed_form_c_opt`]. For arbitrary
//! factors, [`monte_carlo_search`] samples random product-eigenbasis states
//! and polishes the best one with [`refine`].

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::cmatrix::{exp_i_hermitian, random_hermitian, CMatrix, C64};
use crate::error::{Error, Result};
use crate::json::real17;
use crate::rng::stream_rng;
use crate::states::{check_tau_ab, sample_pcc, EigMode, PccSample, TauParameters};
use crate::witness::{f_value_raw, validate_factors};

/// Substream reserved for refinement; sample `k` uses substream `k`.
const REFINE_STREAM: u64 = u64::MAX;

/// `f(tau) = a (1 + 2 Re b) / 8` for `W_sigma`, independent of `theta`.
pub fn tau_f(a: f64, b: C64) -> Result<f64> {
    check_tau_ab(a, b)?;
    Ok(a * (1.0 + 2.0 * b.re) / 8.0)
}

/// `g(a) = a (1 + 2 sqrt(a(1-a))) / 8`: `tau_f` with the optimal `b`.
pub fn tau_profile(a: f64) -> f64 {
    a * (1.0 + 2.0 * (a * (1.0 - a)).max(0.0).sqrt()) / 8.0
}

/// Maximizes [`tau_profile`] on `[0, 1]` by golden-section search down to an
/// interval of width `1e-12`. Returns `(c_opt, a_hat)`.
pub fn closed_form_c_opt() -> (f64, f64) {
    let a_hat = golden_section_max(tau_profile, 0.0, 1.0, 1e-12);
    (tau_profile(a_hat), a_hat)
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > width {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// The `tau` state of `params` in generating form: `|u_0> = |s>`, the B-side
/// basis diagonalizes `rho_B`, and the `i = 1` row of the grid is zero.
pub fn tau_sample(params: &TauParameters) -> Result<PccSample> {
    params.validate()?;
    let s = params.s_vector();
    // |s_perp> = (|0> - e^{i theta}|1>)/sqrt(2)
    let basis_a = CMatrix::from_vec(2, 2, vec![s[0], s[0], s[1], -s[1]])?;
    let eig = crate::cmatrix::hermitian_eig(&params.rho_b())?;
    let eigenvalues = vec![eig.values[0].max(0.0), eig.values[1].max(0.0), 0.0, 0.0];
    let total: f64 = eigenvalues.iter().sum();
    Ok(PccSample {
        dim_a: 2,
        dim_b: 2,
        eigenvalues: eigenvalues.into_iter().map(|e| e / total).collect(),
        basis_a,
        basis_b: eig.vectors,
    })
}

/// Hill-climb step schedule: step `k` has size `initial_step * decay^k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HillClimbSchedule {
    pub steps: usize,
    pub initial_step: f64,
    pub decay: f64,
}

impl Default for HillClimbSchedule {
    fn default() -> Self {
        Self {
            steps: 2000,
            initial_step: 0.3,
            decay: 0.995,
        }
    }
}

impl HillClimbSchedule {
    pub fn step_sizes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.steps).map(move |k| self.initial_step * self.decay.powi(k as i32))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub shards: usize,
    pub eig_mode: EigMode,
    pub refine_steps: usize,
    pub refine_initial_step: f64,
    pub refine_decay: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        let schedule = HillClimbSchedule::default();
        Self {
            n_samples: 100_000,
            seed: 0,
            shards: 1,
            eig_mode: EigMode::DirichletUniform,
            refine_steps: schedule.steps,
            refine_initial_step: schedule.initial_step,
            refine_decay: schedule.decay,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
        }
        if self.shards == 0 {
            return Err(Error::InvalidParameter("shards must be >= 1".into()));
        }
        if !(self.refine_decay > 0.0 && self.refine_decay < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "refine_decay {} must lie in (0, 1)",
                self.refine_decay
            )));
        }
        if self.refine_initial_step.is_nan() || self.refine_initial_step < 0.0 {
            return Err(Error::InvalidParameter(
                "refine_initial_step must be >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn schedule(&self) -> HillClimbSchedule {
        HillClimbSchedule {
            steps: self.refine_steps,
            initial_step: self.refine_initial_step,
            decay: self.refine_decay,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchReport {
    /// Maximum of `f` after refinement.
    #[serde(serialize_with = "real17")]
    pub max_f: f64,
    /// Maximum of `f` over the random samples alone.
    #[serde(serialize_with = "real17")]
    pub sampled_max_f: f64,
    /// Index of the best random sample (its substream).
    pub best_index: u64,
    pub best_sample: PccSample,
    #[serde(serialize_with = "real17")]
    pub best_purity: f64,
    pub distinct_nonzero_eigenvalues: usize,
    pub samples_evaluated: u64,
    #[serde(serialize_with = "real17")]
    pub refine_improvement: f64,
    pub config: SearchConfig,
}

/// Eigenvalues at or below this are not counted in the report.
pub const REPORT_ZERO_EIGENVALUE: f64 = 1e-9;
/// Eigenvalues closer than this are reported as one.
pub const REPORT_EIGENVALUE_GAP: f64 = 1e-9;

/// Random search for `max f` over product-eigenbasis states, then
/// refinement from the best sample.
///
/// Sample `k` is drawn from substream `k` of `config.seed`, so the outcome
/// depends only on `(seed, n_samples, eig_mode)` and the refine schedule,
/// never on `shards`. Ties go to the lowest index.
pub fn monte_carlo_search(
    factors: &[CMatrix],
    dim_a: usize,
    dim_b: usize,
    config: &SearchConfig,
) -> Result<SearchReport> {
    config.validate()?;
    validate_factors(factors, dim_a * dim_b)?;
    config.eig_mode.validate(dim_a, dim_b)?;

    let n = config.n_samples;
    let shards = config.shards as u64;
    let (sampled_max_f, best_index) = (0..shards)
        .into_par_iter()
        .map(|s| {
            let lo = n * s / shards;
            let hi = n * (s + 1) / shards;
            let mut best = (f64::NEG_INFINITY, u64::MAX);
            for k in lo..hi {
                let f = sample_value(factors, dim_a, dim_b, config, k);
                if f > best.0 {
                    best = (f, k);
                }
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, u64::MAX), better_of);

    let start = draw_sample(dim_a, dim_b, config, best_index);
    let (best_sample, max_f) = refine(factors, &start, config)?;

    Ok(SearchReport {
        max_f,
        sampled_max_f,
        best_index,
        best_purity: best_sample.purity(),
        distinct_nonzero_eigenvalues: best_sample
            .distinct_nonzero_eigenvalues(REPORT_ZERO_EIGENVALUE, REPORT_EIGENVALUE_GAP),
        best_sample,
        samples_evaluated: n,
        refine_improvement: max_f - sampled_max_f,
        config: config.clone(),
    })
}

fn better_of(x: (f64, u64), y: (f64, u64)) -> (f64, u64) {
    if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
        y
    } else {
        x
    }
}

fn draw_sample(dim_a: usize, dim_b: usize, config: &SearchConfig, k: u64) -> PccSample {
    let mut rng = stream_rng(config.seed, k);
    sample_pcc(dim_a, dim_b, &config.eig_mode, &mut rng)
}

fn sample_value(
    factors: &[CMatrix],
    dim_a: usize,
    dim_b: usize,
    config: &SearchConfig,
    k: u64,
) -> f64 {
    f_value_raw(&draw_sample(dim_a, dim_b, config, k).assemble(), factors)
}

/// `f` evaluated on a sample.
pub fn sample_f(factors: &[CMatrix], sample: &PccSample) -> f64 {
    f_value_raw(&sample.assemble(), factors)
}

/// Hill-climbs from `start`, accepting only strict improvements. Uses the
/// refinement substream of `config.seed`.
pub fn refine(
    factors: &[CMatrix],
    start: &PccSample,
    config: &SearchConfig,
) -> Result<(PccSample, f64)> {
    let (sample, f, _) = refine_traced(factors, start, config)?;
    Ok((sample, f))
}

/// As [`refine`], also returning the value of `f` after every step.
pub fn refine_traced(
    factors: &[CMatrix],
    start: &PccSample,
    config: &SearchConfig,
) -> Result<(PccSample, f64, Vec<f64>)> {
    config.validate()?;
    start.validate()?;
    validate_factors(factors, start.dim_a * start.dim_b)?;
    let mut rng = stream_rng(config.seed, REFINE_STREAM);
    let perturb_eigs = !config.eig_mode.is_fixed();

    let mut current = start.clone();
    let mut best = sample_f(factors, &current);
    let mut history = Vec::with_capacity(config.refine_steps);
    for step in config.schedule().step_sizes() {
        let candidate = PccSample {
            basis_a: perturb_unitary(&current.basis_a, step, &mut rng),
            ..current.clone()
        };
        try_accept(factors, candidate, &mut current, &mut best);

        let candidate = PccSample {
            basis_b: perturb_unitary(&current.basis_b, step, &mut rng),
            ..current.clone()
        };
        try_accept(factors, candidate, &mut current, &mut best);

        if perturb_eigs {
            let candidate = PccSample {
                eigenvalues: perturb_simplex(&current.eigenvalues, step, &mut rng),
                ..current.clone()
            };
            try_accept(factors, candidate, &mut current, &mut best);
        }
        history.push(best);
    }
    Ok((current, best, history))
}

fn try_accept(factors: &[CMatrix], candidate: PccSample, current: &mut PccSample, best: &mut f64) {
    let f = sample_f(factors, &candidate);
    if f > *best {
        *best = f;
        *current = candidate;
    }
}

/// `exp(i step H) U` with `H` a random Hermitian direction of unit
/// Frobenius norm.
pub(crate) fn perturb_unitary<R: Rng + ?Sized>(u: &CMatrix, step: f64, rng: &mut R) -> CMatrix {
    let h = random_hermitian(u.rows(), rng);
    let norm = h.frobenius_norm().max(f64::MIN_POSITIVE);
    exp_i_hermitian(&h, step / norm).matmul(u)
}

/// Gaussian move on the simplex, clipped at zero and renormalized.
fn perturb_simplex<R: Rng + ?Sized>(e: &[f64], step: f64, rng: &mut R) -> Vec<f64> {
    let moved: Vec<f64> = e
        .iter()
        .map(|&x| (x + step * rng.sample::<f64, _>(StandardNormal)).max(0.0))
        .collect();
    let total: f64 = moved.iter().sum();
    if total <= 0.0 {
        return e.to_vec();
    }
    moved.into_iter().map(|x| x / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{canonical_state, sigma_factors, CanonicalState};
    use crate::witness::f_value;
    use proptest::prelude::*;

    fn two_qutrit_rank_two_sample() -> PccSample {
        let (c, s) = (
            std::f64::consts::FRAC_PI_8.cos(),
            std::f64::consts::FRAC_PI_8.sin(),
        );
        #[rustfmt::skip]
        let basis_a = CMatrix::from_real(3, 3, &[
            c, -s, 0.0,
            s, c, 0.0,
            0.0, 0.0, 1.0,
        ])
        .unwrap();
        let b1 = [0.6605596119587385, -0.1559369709723404, -0.7344008851661962];
        let b0 = [
            -0.5046226359716189,
            -0.8164965827985552,
            -0.28051617697262743,
        ];
        let b2 = [
            b1[1] * b0[2] - b1[2] * b0[1],
            b1[2] * b0[0] - b1[0] * b0[2],
            b1[0] * b0[1] - b1[1] * b0[0],
        ];
        let mut rows = Vec::new();
        for r in 0..3 {
            rows.extend([b1[r], b0[r], b2[r]]);
        }
        let mut eigenvalues = vec![0.0; 9];
        eigenvalues[0] = 2.0 / 3.0;
        eigenvalues[2 * 3 + 1] = 1.0 / 3.0;
        PccSample {
            dim_a: 3,
            dim_b: 3,
            eigenvalues,
            basis_a,
            basis_b: CMatrix::from_real(3, 3, &rows).unwrap(),
        }
    }

    #[test]
    fn two_qutrit_product_maximum_exceeds_002() {
        // optimum of the rank-two family 2/3 |a b1><a b1| + 1/3 |2 b0><2 b0|
        let sample = two_qutrit_rank_two_sample();
        sample.validate().unwrap();
        let w = crate::witness::w_02plus();
        let f = sample_f(w.factors(), &sample);
        assert!((f - 0.0221667514808623).abs() < 1e-9, "{f}");
        assert!(crate::witness::evaluate(&w, &sample.to_state()).unwrap() < 0.0);
        let r = crate::deficit::has_product_eigenbasis(
            &sample.to_state(),
            1e-7,
            &mut crate::rng::stream_rng(0, 0),
        )
        .unwrap();
        assert_eq!(r.verdict, crate::deficit::ProductVerdict::Yes);
    }

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn a_hat_exact() -> f64 {
        (2.0 + SQRT2) / 4.0
    }

    #[test]
    fn tau_f_examples() {
        let v = tau_f(a_hat_exact(), C64::new((1.0f64 / 8.0).sqrt(), 0.0)).unwrap();
        assert!((v - 0.18213835).abs() < 1e-8, "{v}");
        assert_eq!(tau_f(1.0, C64::new(0.0, 0.0)).unwrap(), 0.125);
        assert_eq!(tau_f(0.0, C64::new(0.0, 0.0)).unwrap(), 0.0);
        assert!(tau_f(0.5, C64::new(0.6, 0.0)).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let (c, a) = closed_form_c_opt();
        assert!((c - 0.182138).abs() < 1e-6);
        assert!((a - 0.8535534).abs() < 1e-6);
        assert!((a - a_hat_exact()).abs() < 1e-6);
        assert_eq!(tau_profile(0.5), 0.125);
        assert!(tau_profile(a + 0.01) < c);
        assert!(tau_profile(a - 0.01) < c);
    }

    #[test]
    fn profile_is_unimodal_on_grid() {
        // rises then falls: no interior local maximum other than a_hat
        let (_, a_hat) = closed_form_c_opt();
        let n = 10_000;
        let vals: Vec<(f64, f64)> = (0..=n)
            .map(|k| {
                let a = k as f64 / n as f64;
                (a, tau_profile(a))
            })
            .collect();
        for w in vals.windows(2) {
            let (a0, g0) = w[0];
            let (a1, g1) = w[1];
            if a1 <= a_hat {
                assert!(g1 >= g0, "not rising at {a0}");
            } else if a0 >= a_hat {
                assert!(g1 <= g0, "not falling at {a0}");
            }
        }
    }

    #[test]
    fn tau_sample_matches_canonical_tau() {
        let p = TauParameters::new(0.4, 0.7, C64::new(0.3, -0.1)).unwrap();
        let s = tau_sample(&p).unwrap();
        let direct = canonical_state(&CanonicalState::Tau(p)).unwrap();
        assert!(s.assemble().max_abs_diff(direct.matrix()) < 1e-12);
    }

    #[test]
    fn refine_keeps_tau_optimum() {
        let b = C64::new((1.0f64 / 8.0).sqrt(), 0.0);
        let start = tau_sample(&TauParameters::new(0.0, a_hat_exact(), b).unwrap()).unwrap();
        let factors = sigma_factors();
        let f0 = sample_f(&factors, &start);
        let (_, f1) = refine(&factors, &start, &SearchConfig::default()).unwrap();
        assert!(f1 >= f0);
        assert!(f1 - f0 <= 1e-9, "moved from {f0} to {f1}");
    }

    #[test]
    fn refine_history_is_monotone() {
        let cfg = SearchConfig {
            seed: 3,
            ..SearchConfig::default()
        };
        let start = draw_sample(2, 2, &cfg, 0);
        let factors = sigma_factors();
        let f0 = sample_f(&factors, &start);
        let (_, f1, history) = refine_traced(&factors, &start, &cfg).unwrap();
        assert_eq!(history.len(), cfg.refine_steps);
        assert!(history.windows(2).all(|w| w[1] >= w[0]));
        assert!(f1 >= f0);
        assert_eq!(*history.last().unwrap(), f1);
    }

    #[test]
    fn search_never_exceeds_closed_form() {
        let (c_opt, _) = closed_form_c_opt();
        let cfg = SearchConfig {
            n_samples: 20_000,
            seed: 11,
            ..SearchConfig::default()
        };
        let report = monte_carlo_search(&sigma_factors(), 2, 2, &cfg).unwrap();
        assert!(report.max_f <= c_opt + 1e-8);
        assert!(report.max_f >= 0.17, "{}", report.max_f);
        assert!(report.sampled_max_f <= report.max_f);
        assert_eq!(report.samples_evaluated, 20_000);
        // the reported sample reproduces the reported value
        let rho = report.best_sample.to_state();
        let f = f_value(&rho, &sigma_factors()).unwrap();
        assert!((f - report.max_f).abs() < 1e-12);
    }

    #[test]
    fn search_is_shard_independent() {
        let base = SearchConfig {
            n_samples: 5_000,
            seed: 99,
            refine_steps: 300,
            ..SearchConfig::default()
        };
        let results: Vec<SearchReport> = [1usize, 4, 16]
            .iter()
            .map(|&shards| {
                let cfg = SearchConfig {
                    shards,
                    ..base.clone()
                };
                monte_carlo_search(&sigma_factors(), 2, 2, &cfg).unwrap()
            })
            .collect();
        for r in &results[1..] {
            assert_eq!(r.max_f.to_bits(), results[0].max_f.to_bits());
            assert_eq!(r.best_index, results[0].best_index);
            assert_eq!(r.best_sample, results[0].best_sample);
        }
    }

    #[test]
    fn fixed_profile_respects_case_ii_bound() {
        let third = 1.0 / 3.0;
        let cfg = SearchConfig {
            n_samples: 20_000,
            seed: 5,
            eig_mode: EigMode::Fixed(vec![third, third, third, 0.0]),
            ..SearchConfig::default()
        };
        let report = monte_carlo_search(&sigma_factors(), 2, 2, &cfg).unwrap();
        assert!(report.max_f <= 1.0 / 6.0 + 1e-9, "{}", report.max_f);
        // the grid is never perturbed in fixed mode
        assert_eq!(
            report.best_sample.eigenvalues,
            vec![third, third, third, 0.0]
        );
    }

    #[test]
    fn config_validation() {
        let bad = [
            SearchConfig {
                n_samples: 0,
                ..SearchConfig::default()
            },
            SearchConfig {
                shards: 0,
                ..SearchConfig::default()
            },
            SearchConfig {
                refine_decay: 1.0,
                ..SearchConfig::default()
            },
            SearchConfig {
                refine_decay: 0.0,
                ..SearchConfig::default()
            },
        ];
        for cfg in bad {
            assert!(monte_carlo_search(&sigma_factors(), 2, 2, &cfg).is_err());
        }
        let wrong_dims = monte_carlo_search(&sigma_factors(), 3, 3, &SearchConfig::default());
        assert!(wrong_dims.is_err());
    }

    proptest! {
        #[test]
        fn tau_family_matches_closed_form(theta in -10.0f64..10.0, a in 0.0f64..=1.0, r in 0.0f64..=1.0, phi in 0.0f64..6.3) {
            let radius = r * (a * (1.0 - a)).sqrt();
            let b = C64::from_polar(radius, phi);
            let p = TauParameters::new(theta, a, b).unwrap();
            let rho = canonical_state(&CanonicalState::Tau(p)).unwrap();
            let f = f_value(&rho, &sigma_factors()).unwrap();
            prop_assert!((f - tau_f(a, b).unwrap()).abs() <= 1e-12);
        }
    }
}
