//! Product-form witness maps `W(rho) = c - prod_i Tr(rho A_i)`.
//!
//! A witness map is admissible when it is nonnegative on every state with a
//! product eigenbasis; a negative value then certifies nonclassical
//! correlation. With a single factor the map is linear in `rho`, and the
//! optimal constant reduces to a maximum over product pure states
//! ([`linear_optimal_c`]).

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cmatrix::{jacobi, top_eigenvector, trace_product_raw, CMatrix, C64, CHECK_TOL, ZERO};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::states::{bell_phi_plus, rho_02plus_factors, sigma_factors, DensityMatrix, PSD_TOL};

/// Default detection tolerance: values in `[-tol, 0)` are not detections.
pub const DEFAULT_TOL: f64 = 1e-9;

/// The ceiling used for the two-qutrit witness.
pub const W02PLUS_C: f64 = 0.02;

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessMap {
    c: f64,
    factors: Vec<CMatrix>,
    dim_a: usize,
    dim_b: usize,
}

impl WitnessMap {
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn factors(&self) -> &[CMatrix] {
        &self.factors
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    /// Same factors, different constant.
    pub fn with_c(&self, c: f64) -> Result<Self> {
        make_witness(c, self.factors.clone(), self.dim_a, self.dim_b)
    }
}

/// Validates `c >= 0` and that every factor is a positive Hermitian matrix
/// of size `dim_a * dim_b`.
pub fn make_witness(
    c: f64,
    factors: Vec<CMatrix>,
    dim_a: usize,
    dim_b: usize,
) -> Result<WitnessMap> {
    if !c.is_finite() || c < 0.0 {
        return Err(Error::NegativeConstant(c));
    }
    validate_factors(&factors, dim_a * dim_b)?;
    Ok(WitnessMap {
        c,
        factors,
        dim_a,
        dim_b,
    })
}

pub(crate) fn validate_factors(factors: &[CMatrix], dim: usize) -> Result<()> {
    if factors.is_empty() {
        return Err(Error::NoFactors);
    }
    for (index, a) in factors.iter().enumerate() {
        if a.rows() != dim || a.cols() != dim {
            return Err(Error::FactorDimension {
                index,
                expected: dim,
                actual: a.rows().max(a.cols()),
            });
        }
        let asymmetry = a.hermitian_deviation();
        if asymmetry > CHECK_TOL {
            return Err(Error::FactorNotHermitian { index, asymmetry });
        }
        let min_eigenvalue = jacobi(a).min_value();
        if min_eigenvalue < -PSD_TOL {
            return Err(Error::FactorNotPositive {
                index,
                min_eigenvalue,
            });
        }
    }
    Ok(())
}

/// `W_sigma` with constant `c`: factors `|00><00|` and `|1+><1+|`.
pub fn w_sigma(c: f64) -> Result<WitnessMap> {
    make_witness(c, sigma_factors(), 2, 2)
}

/// `W_sigma` at its optimal constant.
pub fn w_sigma_optimal() -> WitnessMap {
    let (c_opt, _) = crate::search::closed_form_c_opt();
    w_sigma(c_opt).expect("static witness is valid")
}

/// `1/2 - Tr(rho |Phi+><Phi+|)`.
pub fn w_bell() -> WitnessMap {
    make_witness(0.5, vec![CMatrix::projector(&bell_phi_plus())], 2, 2)
        .expect("static witness is valid")
}

/// The two-qutrit witness with factors `|02>`, `|+0>`, `|2+>` and `c = 0.02`.
pub fn w_02plus() -> WitnessMap {
    make_witness(W02PLUS_C, rho_02plus_factors(), 3, 3).expect("static witness is valid")
}

/// `Tr(rho A_i)` for each factor, clamped at zero after checking that no
/// pairing is below `-1e-10`.
pub fn factor_traces(rho: &DensityMatrix, factors: &[CMatrix]) -> Result<Vec<f64>> {
    factors
        .iter()
        .enumerate()
        .map(|(index, a)| {
            if a.rows() != rho.dim() || a.cols() != rho.dim() {
                return Err(Error::FactorDimension {
                    index,
                    expected: rho.dim(),
                    actual: a.rows(),
                });
            }
            let t = trace_product_raw(rho.matrix(), a);
            if t.im.abs() > CHECK_TOL {
                return Err(Error::ComplexTrace { imag: t.im });
            }
            if t.re < -CHECK_TOL {
                return Err(Error::NegativePairing { index, value: t.re });
            }
            Ok(t.re.max(0.0))
        })
        .collect()
}

/// `f(rho) = prod_i Tr(rho A_i)`.
///
/// The pairings are multiplied in ascending order, so the result does not
/// depend on the order of `factors`, bit for bit.
pub fn f_value(rho: &DensityMatrix, factors: &[CMatrix]) -> Result<f64> {
    let mut traces = factor_traces(rho, factors)?;
    traces.sort_by(f64::total_cmp);
    Ok(traces.into_iter().product())
}

/// `f` on a raw matrix, skipping validation. Used in the search hot loop.
pub(crate) fn f_value_raw(rho: &CMatrix, factors: &[CMatrix]) -> f64 {
    factors
        .iter()
        .map(|a| trace_product_raw(rho, a).re.max(0.0))
        .product()
}

fn check_dims(w: &WitnessMap, rho: &DensityMatrix) -> Result<()> {
    if (w.dim_a, w.dim_b) != (rho.dim_a(), rho.dim_b()) {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{} state", w.dim_a, w.dim_b),
            actual: format!("{}x{}", rho.dim_a(), rho.dim_b()),
        });
    }
    Ok(())
}

/// `W(rho) = c - f(rho)`.
pub fn evaluate(w: &WitnessMap, rho: &DensityMatrix) -> Result<f64> {
    check_dims(w, rho)?;
    Ok(w.c - f_value(rho, &w.factors)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub value: f64,
    pub detected: bool,
    pub tolerance: f64,
}

/// Evaluates and flags detection when the value is below `-tol`.
pub fn verdict(w: &WitnessMap, rho: &DensityMatrix, tol: f64) -> Result<Verdict> {
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} must be >= 0"
        )));
    }
    let value = evaluate(w, rho)?;
    Ok(verdict_from_value(value, tol))
}

pub fn verdict_from_value(value: f64, tol: f64) -> Verdict {
    Verdict {
        value,
        detected: value < -tol,
        tolerance: tol,
    }
}

/// Options for [`linear_optimal_c`].
#[derive(Clone, Copy, Debug)]
pub struct AlternationConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for AlternationConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iterations: 500,
            tolerance: 1e-12,
        }
    }
}

/// Optimal constant for the linear witness `c - Tr(rho A)`: the maximum of
/// `<a b| A |a b>` over product unit vectors.
///
/// Mixtures of product pure states cover every separable state, so this is
/// also the maximum of `Tr(rho A)` over all separable states. Found by
/// alternating top-eigenvector steps on each side from Haar-random starts.
pub fn linear_optimal_c<R: Rng + ?Sized>(
    a: &CMatrix,
    dim_a: usize,
    dim_b: usize,
    config: AlternationConfig,
    rng: &mut R,
) -> Result<f64> {
    validate_factors(std::slice::from_ref(a), dim_a * dim_b)?;
    if config.restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be >= 1".into()));
    }
    let base: u64 = rng.random();
    let best = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut local = stream_rng(base, r as u64);
            let b0 = crate::cmatrix::random_unit_vector(dim_b, &mut local);
            alternate(a, dim_a, dim_b, b0, &config).0
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(best)
}

/// One alternation run from a starting B-side vector. Returns the value and
/// the maximizing pair.
pub(crate) fn alternate(
    a: &CMatrix,
    dim_a: usize,
    dim_b: usize,
    mut vb: Vec<C64>,
    config: &AlternationConfig,
) -> (f64, Vec<C64>, Vec<C64>) {
    let mut value = f64::NEG_INFINITY;
    let mut va = vec![ZERO; dim_a];
    for _ in 0..config.max_iterations {
        let (_, new_a) = top_eigenvector(&reduce_b(a, dim_a, dim_b, &vb));
        va = new_a;
        let (v, new_b) = top_eigenvector(&reduce_a(a, dim_a, dim_b, &va));
        vb = new_b;
        let improved = v - value;
        value = v;
        if improved < config.tolerance {
            break;
        }
    }
    (value, va, vb)
}

/// `(I (x) <b|) A (I (x) |b>)`, a `dim_a x dim_a` matrix.
fn reduce_b(a: &CMatrix, dim_a: usize, dim_b: usize, b: &[C64]) -> CMatrix {
    let mut m = CMatrix::zeros(dim_a, dim_a);
    for i in 0..dim_a {
        for k in 0..dim_a {
            let mut acc = ZERO;
            for j in 0..dim_b {
                for l in 0..dim_b {
                    acc += b[j].conj() * a[(i * dim_b + j, k * dim_b + l)] * b[l];
                }
            }
            m[(i, k)] = acc;
        }
    }
    m.hermitize()
}

/// `(<a| (x) I) A (|a> (x) I)`, a `dim_b x dim_b` matrix.
fn reduce_a(a: &CMatrix, dim_a: usize, dim_b: usize, va: &[C64]) -> CMatrix {
    let mut m = CMatrix::zeros(dim_b, dim_b);
    for j in 0..dim_b {
        for l in 0..dim_b {
            let mut acc = ZERO;
            for i in 0..dim_a {
                for k in 0..dim_a {
                    acc += va[i].conj() * a[(i * dim_b + j, k * dim_b + l)] * va[k];
                }
            }
            m[(j, l)] = acc;
        }
    }
    m.hermitize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmatrix::{haar_unitary, kron, kron_vec, ops};
    use crate::rng::stream_rng;
    use crate::states::{canonical_state, random_density, random_pcc, CanonicalState, EigMode};
    use proptest::prelude::*;

    fn sigma() -> DensityMatrix {
        canonical_state(&CanonicalState::Sigma).unwrap()
    }

    fn max_mixed() -> DensityMatrix {
        canonical_state(&CanonicalState::MaxMixed { dim_a: 2, dim_b: 2 }).unwrap()
    }

    #[test]
    fn make_witness_examples() {
        let w = w_sigma_optimal();
        assert_eq!(w.factors().len(), 2);
        assert!((w.c() - 0.182138).abs() < 1e-6);
        let b = w_bell();
        assert_eq!(b.c(), 0.5);
        assert!(matches!(
            make_witness(-0.1, sigma_factors(), 2, 2),
            Err(Error::NegativeConstant(_))
        ));
    }

    #[test]
    fn make_witness_reports_offending_factor() {
        let mut f = sigma_factors();
        f.push(ops::pauli_z());
        assert!(matches!(
            make_witness(0.1, f, 2, 2),
            Err(Error::FactorDimension { index: 2, .. })
        ));

        let mut f = sigma_factors();
        f.push(kron(&ops::pauli_z(), &CMatrix::identity(2)));
        match make_witness(0.1, f, 2, 2) {
            Err(Error::FactorNotPositive {
                index,
                min_eigenvalue,
            }) => {
                assert_eq!(index, 2);
                assert!((min_eigenvalue + 1.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }

        let skew = CMatrix::from_real(
            4,
            4,
            &[
                1.0, 1.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ],
        )
        .unwrap();
        assert!(matches!(
            make_witness(0.1, vec![skew], 2, 2),
            Err(Error::FactorNotHermitian { index: 0, .. })
        ));
        assert!(matches!(
            make_witness(0.1, vec![], 2, 2),
            Err(Error::NoFactors)
        ));
    }

    #[test]
    fn f_value_examples() {
        let fs = sigma_factors();
        assert!((f_value(&sigma(), &fs).unwrap() - 0.25).abs() < 1e-15);
        assert!((f_value(&max_mixed(), &fs).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        let rho = canonical_state(&CanonicalState::Rho02Plus).unwrap();
        assert!((f_value(&rho, &rho_02plus_factors()).unwrap() - 1.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn f_value_dimension_mismatch() {
        let rho = canonical_state(&CanonicalState::Rho02Plus).unwrap();
        assert!(f_value(&rho, &sigma_factors()).is_err());
        assert!(evaluate(&w_sigma_optimal(), &rho).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let v = evaluate(&w_sigma_optimal(), &sigma()).unwrap();
        assert!((v - (0.182138 - 0.25)).abs() < 1e-6);
        let bell = canonical_state(&CanonicalState::BellPhiPlus).unwrap();
        assert!((evaluate(&w_bell(), &bell).unwrap() + 0.5).abs() < 1e-15);
        let rho = canonical_state(&CanonicalState::Rho02Plus).unwrap();
        let v = evaluate(&w_02plus(), &rho).unwrap();
        assert!((v - (0.02 - 1.0 / 27.0)).abs() < 1e-15);
        assert!((v + 0.017037).abs() < 1e-6);
    }

    #[test]
    fn verdict_examples() {
        let w = w_sigma_optimal();
        assert!(verdict(&w, &sigma(), DEFAULT_TOL).unwrap().detected);
        let v = verdict(&w, &max_mixed(), DEFAULT_TOL).unwrap();
        assert!(!v.detected && v.value > 0.0);
        assert!((v.value - (w.c() - 0.0625)).abs() < 1e-15);
        let tie = verdict_from_value(-DEFAULT_TOL / 2.0, DEFAULT_TOL);
        assert!(!tie.detected);
        assert!(verdict(&w, &sigma(), -1.0).is_err());
    }

    /// Brute-force maximum of `<ab|A|ab>` over a Bloch-sphere grid on both
    /// sides, with `step_deg` resolution in both polar and azimuthal angles.
    fn grid_oracle(a: &CMatrix, step_deg: f64) -> f64 {
        let to_rad = std::f64::consts::PI / 180.0;
        let n_theta = (180.0 / step_deg).round() as usize;
        let n_phi = (360.0 / step_deg).round() as usize;
        let mut points = Vec::new();
        for t in 0..=n_theta {
            let theta = t as f64 * step_deg * to_rad;
            for p in 0..n_phi {
                let phi = p as f64 * step_deg * to_rad;
                points.push([
                    C64::new((theta / 2.0).cos(), 0.0),
                    C64::from_polar((theta / 2.0).sin(), phi),
                ]);
            }
        }
        let mut best = f64::NEG_INFINITY;
        for va in &points {
            for vb in &points {
                let v = kron_vec(va, vb);
                let mut acc = ZERO;
                for i in 0..4 {
                    for j in 0..4 {
                        acc += v[i].conj() * a[(i, j)] * v[j];
                    }
                }
                best = best.max(acc.re);
            }
        }
        best
    }

    #[test]
    fn bell_grid_oracle_at_four_degrees() {
        let a = CMatrix::projector(&bell_phi_plus());
        let g = grid_oracle(&a, 4.0);
        assert!((0.5 - 1e-3..=0.5 + 1e-12).contains(&g), "grid max {g}");
    }

    #[test]
    #[ignore = "1-degree grid over both Bloch spheres takes minutes"]
    fn bell_grid_oracle_at_one_degree() {
        let a = CMatrix::projector(&bell_phi_plus());
        let g = grid_oracle(&a, 1.0);
        assert!((g - 0.5).abs() < 1e-6, "grid max {g}");
    }

    #[test]
    fn linear_optimal_c_examples() {
        let cfg = AlternationConfig::default();
        let mut rng = stream_rng(12, 0);
        let bell = CMatrix::projector(&bell_phi_plus());
        // frozen from the grid oracle above
        let c = linear_optimal_c(&bell, 2, 2, cfg, &mut rng).unwrap();
        assert!((c - 0.5).abs() < 1e-6, "{c}");
        let p00 = CMatrix::projector(&ops::basis_vec(4, 0));
        assert!((linear_optimal_c(&p00, 2, 2, cfg, &mut rng).unwrap() - 1.0).abs() < 1e-12);
        let id = CMatrix::identity(4);
        assert!((linear_optimal_c(&id, 2, 2, cfg, &mut rng).unwrap() - 1.0).abs() < 1e-12);
        let z_i = kron(&ops::pauli_z(), &CMatrix::identity(2));
        assert!(matches!(
            linear_optimal_c(&z_i, 2, 2, cfg, &mut rng),
            Err(Error::FactorNotPositive { .. })
        ));
    }

    #[test]
    fn linear_optimal_c_matches_grid_on_random_factor() {
        let mut rng = stream_rng(31, 0);
        let a = random_density(2, 2, 2, &mut rng).unwrap().into_matrix();
        let c = linear_optimal_c(&a, 2, 2, AlternationConfig::default(), &mut rng).unwrap();
        let g = grid_oracle(&a, 4.0);
        assert!(c >= g - 1e-12, "alternation {c} below grid {g}");
        assert!(c - g < 5e-3, "alternation {c} far above grid {g}");
    }

    #[test]
    fn optimal_w_sigma_nonnegative_on_pcc_states() {
        let w = w_sigma_optimal();
        let mut rng = stream_rng(100, 0);
        for _ in 0..10_000 {
            let (rho, _) = random_pcc(2, 2, &EigMode::DirichletUniform, &mut rng).unwrap();
            assert!(evaluate(&w, &rho).unwrap() >= -1e-9);
        }
    }

    proptest! {
        #[test]
        fn f_value_is_permutation_invariant(seed in any::<u64>()) {
            let mut rng = stream_rng(seed, 0);
            let rho = random_density(2, 2, 4, &mut rng).unwrap();
            let mut fs: Vec<CMatrix> = (0..3)
                .map(|k| random_density(2, 2, 1 + k, &mut rng).unwrap().into_matrix())
                .collect();
            let f1 = f_value(&rho, &fs).unwrap();
            fs.reverse();
            let f2 = f_value(&rho, &fs).unwrap();
            fs.swap(0, 1);
            let f3 = f_value(&rho, &fs).unwrap();
            prop_assert_eq!(f1.to_bits(), f2.to_bits());
            prop_assert_eq!(f1.to_bits(), f3.to_bits());
        }

        #[test]
        fn evaluate_is_unitarily_invariant(seed in any::<u64>()) {
            let mut rng = stream_rng(seed, 1);
            let rho = random_density(2, 2, 3, &mut rng).unwrap();
            let u = haar_unitary(4, &mut rng);
            let w = w_sigma_optimal();
            let rotated: Vec<CMatrix> = w
                .factors()
                .iter()
                .map(|a| crate::cmatrix::conjugate(a, &u).unwrap().hermitize())
                .collect();
            let w_rot = make_witness(w.c(), rotated, 2, 2).unwrap();
            let rho_rot = DensityMatrix::new(
                2,
                2,
                crate::cmatrix::conjugate(rho.matrix(), &u).unwrap().hermitize(),
            )
            .unwrap();
            let v1 = evaluate(&w, &rho).unwrap();
            let v2 = evaluate(&w_rot, &rho_rot).unwrap();
            prop_assert!((v1 - v2).abs() <= 1e-10);
        }
    }
}
