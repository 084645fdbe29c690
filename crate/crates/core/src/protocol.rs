//! Single-run ensemble measurement.
//!
//! An ensemble readout returns the polarization `<Z_q> = Tr(rho Z_q)` of one
//! qubit without disturbing the state, and global unitaries may be applied
//! between readouts. Any product-form witness on qubits can be evaluated
//! that way: each factor is diagonalized by a unitary, the diagonal is
//! expanded in Z-strings, and each Z-string is folded onto one qubit by a
//! CNOT parity network.
//!
//! Qubits are numbered from 1, left to right; qubit 1 is the most
//! significant bit of the basis index.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::cmatrix::{conjugate_unchecked, hermitian_eig, CMatrix, C64, CHECK_TOL};
use crate::error::{Error, Result};
use crate::json::real17;
use crate::states::DensityMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub label: String,
    unitary: CMatrix,
}

impl Gate {
    /// Rejects matrices that are not unitary within `1e-12`.
    pub fn new(label: impl Into<String>, unitary: CMatrix) -> Result<Self> {
        let deviation = unitary.unitary_deviation();
        if deviation > 1e-12 {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self {
            label: label.into(),
            unitary,
        })
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    /// `U rho U^dagger`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if self.unitary.rows() != rho.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("{}-dimensional state", self.unitary.rows()),
                actual: format!("{}", rho.dim()),
            });
        }
        let out = conjugate_unchecked(rho.matrix(), &self.unitary).hermitize();
        Ok(DensityMatrix::new_unchecked(rho.dim_a(), rho.dim_b(), out))
    }
}

/// Controlled-Hadamard (control qubit 1, target qubit 2) and CNOT (control
/// qubit 1, target qubit 2) on two qubits.
pub fn standard_gates() -> (Gate, Gate) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let ch = CMatrix::from_real(4, 4, &[
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, h, h,
        0.0, 0.0, h, -h,
    ])
    .expect("static matrix");
    let cnot = cnot_gate(2, 1, 2).expect("static gate");
    (Gate::new("controlled-H", ch).expect("unitary"), cnot)
}

/// CNOT on `n_qubits` qubits.
pub fn cnot_gate(n_qubits: usize, control: usize, target: usize) -> Result<Gate> {
    let perm = cnot_permutation(n_qubits, control, target)?;
    let d = perm.len();
    let mut m = CMatrix::zeros(d, d);
    for (x, &y) in perm.iter().enumerate() {
        m[(y, x)] = C64::new(1.0, 0.0);
    }
    Gate::new(format!("CNOT({control}->{target})"), m)
}

/// Basis permutation `|x> -> |CNOT x>`.
pub fn cnot_permutation(n_qubits: usize, control: usize, target: usize) -> Result<Vec<usize>> {
    for q in [control, target] {
        if q == 0 || q > n_qubits {
            return Err(Error::QubitOutOfRange { qubit: q, n_qubits });
        }
    }
    if control == target {
        return Err(Error::InvalidParameter("CNOT control equals target".into()));
    }
    let cbit = 1usize << (n_qubits - control);
    let tbit = 1usize << (n_qubits - target);
    Ok((0..1usize << n_qubits)
        .map(|x| if x & cbit != 0 { x ^ tbit } else { x })
        .collect())
}

/// Number of qubits in a `2^n`-dimensional space.
pub fn qubit_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotQubits(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

fn state_qubits(rho: &DensityMatrix) -> Result<usize> {
    qubit_count(rho.dim_a())?;
    qubit_count(rho.dim_b())?;
    qubit_count(rho.dim())
}

/// `Tr(rho Z_qubit)` from the diagonal, clamped to `[-1, 1]`.
fn z_expectation(rho: &CMatrix, n_qubits: usize, qubit: usize) -> f64 {
    let bit = 1usize << (n_qubits - qubit);
    let v: f64 = (0..rho.rows())
        .map(|x| {
            let p = rho[(x, x)].re;
            if x & bit == 0 {
                p
            } else {
                -p
            }
        })
        .sum();
    v.clamp(-1.0, 1.0)
}

fn add_noise<R: Rng + ?Sized>(value: f64, noise_sigma: f64, rng: &mut R) -> Result<f64> {
    if noise_sigma == 0.0 {
        return Ok(value);
    }
    let normal = Normal::new(0.0, noise_sigma)
        .map_err(|e| Error::InvalidParameter(format!("noise sigma: {e}")))?;
    Ok(value + normal.sample(rng))
}

/// Nondestructive polarization readout of qubit `qubit` (1-based), with
/// optional additive Gaussian readout noise.
pub fn polarization<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    qubit: usize,
    noise_sigma: f64,
    rng: &mut R,
) -> Result<f64> {
    if noise_sigma.is_nan() || noise_sigma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise sigma {noise_sigma} must be >= 0"
        )));
    }
    let n = state_qubits(rho)?;
    if qubit == 0 || qubit > n {
        return Err(Error::QubitOutOfRange { qubit, n_qubits: n });
    }
    add_noise(z_expectation(rho.matrix(), n, qubit), noise_sigma, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProtocolResult {
    /// `<Z_1>` after controlled-H.
    #[serde(serialize_with = "real17")]
    pub z1_ii: f64,
    /// `<Z_2>` after controlled-H.
    #[serde(serialize_with = "real17")]
    pub z2_ii: f64,
    /// `<Z_2>` after the subsequent CNOT.
    #[serde(serialize_with = "real17")]
    pub z2_iv: f64,
    #[serde(serialize_with = "real17")]
    pub w_value: f64,
    #[serde(serialize_with = "real17")]
    pub c_used: f64,
}

/// Combines the three readings into `W_sigma(rho)`:
/// `c - (1 + z1 + z2 + z2') (1 - z1 + z2 - z2') / 16`.
pub fn combine_sigma_readings(c: f64, z1_ii: f64, z2_ii: f64, z2_iv: f64) -> f64 {
    c - (1.0 + z1_ii + z2_ii + z2_iv) * (1.0 - z1_ii + z2_ii - z2_iv) / 16.0
}

/// Evaluates `W_sigma` on a two-qubit state with three readouts: apply
/// controlled-H, read qubits 1 and 2, apply CNOT, read qubit 2.
pub fn run_sigma_protocol<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    c: f64,
    noise_sigma: f64,
    rng: &mut R,
) -> Result<ProtocolResult> {
    if (rho.dim_a(), rho.dim_b()) != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: "2x2 qubit state".into(),
            actual: format!("{}x{}", rho.dim_a(), rho.dim_b()),
        });
    }
    let (ch, cnot) = standard_gates();
    let step_ii = ch.apply(rho)?;
    let z1_ii = polarization(&step_ii, 1, noise_sigma, rng)?;
    let z2_ii = polarization(&step_ii, 2, noise_sigma, rng)?;
    let step_iv = cnot.apply(&step_ii)?;
    let z2_iv = polarization(&step_iv, 2, noise_sigma, rng)?;
    Ok(ProtocolResult {
        z1_ii,
        z2_ii,
        z2_iv,
        w_value: combine_sigma_readings(c, z1_ii, z2_ii, z2_iv),
        c_used: c,
    })
}

/// One weighted Z-string of a measurement plan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanTerm {
    #[serde(serialize_with = "real17")]
    pub coefficient: f64,
    /// Bit `q - 1` set when qubit `q` carries a Z.
    pub z_mask: u32,
    /// `"ZI"`, `"IZ"`, ... with qubit 1 first.
    pub label: String,
    /// CNOTs `(control, target)`, applied in order before the readout.
    pub network: Vec<(usize, usize)>,
    /// Qubit whose polarization is read; `None` for the identity term.
    pub readout: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurementPlan {
    pub n_qubits: usize,
    /// `U` with `U A U^dagger` diagonal.
    pub diagonalizer: CMatrix,
    /// Sorted by `z_mask`.
    pub terms: Vec<PlanTerm>,
}

/// Coefficients smaller than this are dropped from a plan.
pub const PLAN_COEFFICIENT_CUTOFF: f64 = 1e-14;

pub fn z_label(n_qubits: usize, z_mask: u32) -> String {
    (1..=n_qubits)
        .map(|q| {
            if z_mask & (1 << (q - 1)) != 0 {
                'Z'
            } else {
                'I'
            }
        })
        .collect()
}

/// CNOT chain folding the parity of the active qubits onto the lowest one:
/// `(q_k -> q_{k-1}), ..., (q_2 -> q_1)`.
pub fn reduction_network(z_mask: u32, n_qubits: usize) -> (Vec<(usize, usize)>, Option<usize>) {
    let active: Vec<usize> = (1..=n_qubits)
        .filter(|&q| z_mask & (1 << (q - 1)) != 0)
        .collect();
    let network = active.windows(2).rev().map(|w| (w[1], w[0])).collect();
    (network, active.first().copied())
}

/// Diagonal of the Z-string `z_mask` in the computational basis.
pub fn z_string_diagonal(n_qubits: usize, z_mask: u32) -> Vec<f64> {
    (0..1usize << n_qubits)
        .map(|x| {
            let parity = (1..=n_qubits)
                .filter(|&q| z_mask & (1 << (q - 1)) != 0)
                .filter(|&q| x & (1 << (n_qubits - q)) != 0)
                .count();
            if parity % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

/// In-place fast Walsh-Hadamard transform (unnormalized).
fn walsh_hadamard(v: &mut [f64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (x, y) = (v[j], v[j + h]);
                v[j] = x + y;
                v[j + h] = x - y;
            }
        }
        h *= 2;
    }
}

/// Compiles `Tr(rho A)` into a diagonalizing unitary plus Z-string readouts.
///
/// Eigenvectors are matched to computational basis states by largest
/// overlap, so an already diagonal `A` gets the identity as diagonalizer.
pub fn compile_measurement_plan(a: &CMatrix) -> Result<MeasurementPlan> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = qubit_count(a.rows())?;
    let d = a.rows();
    let eig = hermitian_eig(a)?;

    let assignment = match_to_basis(&eig.vectors);
    // column x of v is the eigenvector placed on |x>, phase-fixed so that
    // its x-th component is real and nonnegative
    let mut v = CMatrix::zeros(d, d);
    let mut diag = vec![0.0; d];
    for (k, &x) in assignment.iter().enumerate() {
        let col = eig.vector(k);
        let phase = if col[x].norm() > 0.0 {
            col[x].conj() / col[x].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for r in 0..d {
            v[(r, x)] = col[r] * phase;
        }
        diag[x] = eig.values[k];
    }
    let diagonalizer = v.adjoint();

    let mut coeffs = diag;
    walsh_hadamard(&mut coeffs);
    let mut terms = Vec::new();
    for (y, c) in coeffs.into_iter().enumerate() {
        let c = c / d as f64;
        if c.abs() <= PLAN_COEFFICIENT_CUTOFF {
            continue;
        }
        // index bit (n - q) belongs to qubit q
        let z_mask = (1..=n)
            .filter(|&q| y & (1 << (n - q)) != 0)
            .fold(0u32, |m, q| m | (1 << (q - 1)));
        let (network, readout) = reduction_network(z_mask, n);
        terms.push(PlanTerm {
            coefficient: c,
            z_mask,
            label: z_label(n, z_mask),
            network,
            readout,
        });
    }
    terms.sort_by_key(|t| t.z_mask);
    Ok(MeasurementPlan {
        n_qubits: n,
        diagonalizer,
        terms,
    })
}

/// Greedy assignment of eigenvector columns to basis indices, strongest
/// overlap first.
fn match_to_basis(vectors: &CMatrix) -> Vec<usize> {
    let d = vectors.rows();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(d * d);
    for k in 0..d {
        for x in 0..d {
            pairs.push((vectors[(x, k)].norm_sqr(), k, x));
        }
    }
    pairs.sort_by(|p, q| q.0.total_cmp(&p.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let mut assignment = vec![usize::MAX; d];
    let mut used = vec![false; d];
    for (_, k, x) in pairs {
        if assignment[k] == usize::MAX && !used[x] {
            assignment[k] = x;
            used[x] = true;
        }
    }
    assignment
}

impl MeasurementPlan {
    /// `sum_terms c * Z_mask` as a diagonal matrix.
    pub fn diagonal_observable(&self) -> CMatrix {
        let d = 1usize << self.n_qubits;
        let mut diag = vec![0.0; d];
        for t in &self.terms {
            for (acc, z) in diag
                .iter_mut()
                .zip(z_string_diagonal(self.n_qubits, t.z_mask))
            {
                *acc += t.coefficient * z;
            }
        }
        CMatrix::from_real_diagonal(&diag)
    }

    /// `U^dagger D U`, the observable the plan measures.
    pub fn observable(&self) -> CMatrix {
        let u = &self.diagonalizer;
        u.adjoint().matmul(&self.diagonal_observable()).matmul(u)
    }
}

/// Runs a plan on `rho`: rotate by the diagonalizer, then for each term
/// apply its CNOT network, read one polarization and undo the network.
/// Returns `sum c * reading`, which equals `Tr(rho A)` without noise.
pub fn execute_plan<R: Rng + ?Sized>(
    plan: &MeasurementPlan,
    rho: &DensityMatrix,
    noise_sigma: f64,
    rng: &mut R,
) -> Result<f64> {
    let readings = execute_plan_readings(plan, rho, noise_sigma, rng)?;
    Ok(plan
        .terms
        .iter()
        .zip(readings)
        .map(|(t, r)| t.coefficient * r)
        .sum())
}

/// Per-term readings of [`execute_plan`], in plan order. The identity term
/// reads the trace, exactly 1.
pub fn execute_plan_readings<R: Rng + ?Sized>(
    plan: &MeasurementPlan,
    rho: &DensityMatrix,
    noise_sigma: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = state_qubits(rho)?;
    if n != plan.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: format!("{}-qubit state", plan.n_qubits),
            actual: format!("{n} qubits"),
        });
    }
    if plan.diagonalizer.unitary_deviation() > CHECK_TOL {
        return Err(Error::NotUnitary {
            deviation: plan.diagonalizer.unitary_deviation(),
        });
    }
    let rotated = conjugate_unchecked(rho.matrix(), &plan.diagonalizer).hermitize();
    let mut state = DensityMatrix::new_unchecked(rho.dim_a(), rho.dim_b(), rotated);

    let mut readings = Vec::with_capacity(plan.terms.len());
    for term in &plan.terms {
        let Some(q) = term.readout else {
            readings.push(1.0);
            continue;
        };
        let perms = term
            .network
            .iter()
            .map(|&(c, t)| cnot_permutation(n, c, t))
            .collect::<Result<Vec<_>>>()?;
        state = permute_state(state, perms.iter());
        readings.push(polarization(&state, q, noise_sigma, rng)?);
        state = permute_state(state, perms.iter().rev());
    }
    Ok(readings)
}

fn permute_state<'a>(
    state: DensityMatrix,
    perms: impl Iterator<Item = &'a Vec<usize>>,
) -> DensityMatrix {
    let (da, db) = (state.dim_a(), state.dim_b());
    let m = perms.fold(state.into_matrix(), |m, p| m.permute_basis(p));
    DensityMatrix::new_unchecked(da, db, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmatrix::{kron, ops, random_hermitian, trace_product};
    use crate::rng::stream_rng;
    use crate::states::{canonical_state, random_density, CanonicalState};
    use crate::witness::{evaluate, w_sigma, w_sigma_optimal};
    use proptest::prelude::*;

    fn sigma() -> DensityMatrix {
        canonical_state(&CanonicalState::Sigma).unwrap()
    }

    #[test]
    fn controlled_h_matches_printed_matrix() {
        let (ch, cnot) = standard_gates();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, h, h],
            [0.0, 0.0, h, -h],
        ];
        for (i, row) in expect.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert_eq!(ch.unitary()[(i, j)], C64::new(x, 0.0));
            }
        }
        let sq = ch.unitary().matmul(ch.unitary());
        assert!(sq.max_abs_diff(&CMatrix::identity(4)) < 1e-15);
        assert_eq!(cnot.label, "CNOT(1->2)");
    }

    #[test]
    fn cnot_maps_iz_to_zz() {
        let (_, cnot) = standard_gates();
        let u = cnot.unitary();
        let iz = kron(&CMatrix::identity(2), &ops::pauli_z());
        let zz = kron(&ops::pauli_z(), &ops::pauli_z());
        assert_eq!(u.matmul(&iz).matmul(u), zz);
    }

    #[test]
    fn polarization_examples() {
        let mut rng = stream_rng(0, 0);
        let p00 = DensityMatrix::basis(2, 2, 0, 0).unwrap();
        assert_eq!(polarization(&p00, 1, 0.0, &mut rng).unwrap(), 1.0);
        let (ch, _) = standard_gates();
        let hat = ch.apply(&sigma()).unwrap();
        assert!(polarization(&hat, 1, 0.0, &mut rng).unwrap().abs() < 1e-15);
        assert!((polarization(&hat, 2, 0.0, &mut rng).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            polarization(&hat, 3, 0.0, &mut rng),
            Err(Error::QubitOutOfRange { .. })
        ));
        let qutrit = canonical_state(&CanonicalState::Rho02Plus).unwrap();
        assert!(matches!(
            polarization(&qutrit, 1, 0.0, &mut rng),
            Err(Error::NotQubits(3))
        ));
    }

    #[test]
    fn polarization_is_nondestructive() {
        let rho = random_density(2, 2, 3, &mut stream_rng(4, 0)).unwrap();
        let before = rho.clone();
        let _ = polarization(&rho, 2, 0.0, &mut stream_rng(4, 1)).unwrap();
        assert_eq!(rho, before);
    }

    #[test]
    fn noisy_polarization_is_reproducible() {
        let rho = sigma();
        let a = polarization(&rho, 1, 0.01, &mut stream_rng(3, 0)).unwrap();
        let b = polarization(&rho, 1, 0.01, &mut stream_rng(3, 0)).unwrap();
        assert_eq!(a, b);
        assert!(a.abs() < 0.1);
        assert!(polarization(&rho, 1, -0.1, &mut stream_rng(3, 0)).is_err());
    }

    #[test]
    fn sigma_protocol_readings() {
        let w = w_sigma_optimal();
        let r = run_sigma_protocol(&sigma(), w.c(), 0.0, &mut stream_rng(0, 0)).unwrap();
        assert!(r.z1_ii.abs() < 1e-15);
        assert!((r.z2_ii - 1.0).abs() < 1e-15);
        assert!(r.z2_iv.abs() < 1e-15);
        assert!((r.w_value - (w.c() - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn protocol_on_00_returns_c() {
        let p00 = DensityMatrix::basis(2, 2, 0, 0).unwrap();
        let r = run_sigma_protocol(&p00, 0.3, 0.0, &mut stream_rng(0, 0)).unwrap();
        assert_eq!((r.z1_ii, r.z2_ii, r.z2_iv), (1.0, 1.0, 1.0));
        assert_eq!(r.w_value, 0.3);
    }

    #[test]
    fn protocol_rejects_qutrits() {
        let rho = canonical_state(&CanonicalState::Rho02Plus).unwrap();
        assert!(run_sigma_protocol(&rho, 0.1, 0.0, &mut stream_rng(0, 0)).is_err());
    }

    #[test]
    fn protocol_matches_direct_evaluation() {
        let mut rng = stream_rng(8, 0);
        let w = w_sigma(0.15).unwrap();
        for k in 0..1000 {
            let rho = random_density(2, 2, 1 + k % 4, &mut rng).unwrap();
            let r = run_sigma_protocol(&rho, 0.15, 0.0, &mut rng).unwrap();
            let direct = evaluate(&w, &rho).unwrap();
            assert!((r.w_value - direct).abs() <= 1e-10);
        }
    }

    fn masks(plan: &MeasurementPlan) -> Vec<(String, f64)> {
        plan.terms
            .iter()
            .map(|t| (t.label.clone(), t.coefficient))
            .collect()
    }

    #[test]
    fn plan_for_00_projector() {
        let a = CMatrix::projector(&ops::basis_vec(4, 0));
        let plan = compile_measurement_plan(&a).unwrap();
        assert_eq!(plan.diagonalizer, CMatrix::identity(4));
        assert_eq!(
            masks(&plan),
            vec![
                ("II".into(), 0.25),
                ("ZI".into(), 0.25),
                ("IZ".into(), 0.25),
                ("ZZ".into(), 0.25)
            ]
        );
    }

    #[test]
    fn plan_for_10_projector() {
        let a = CMatrix::projector(&ops::basis_vec(4, 2));
        let plan = compile_measurement_plan(&a).unwrap();
        assert_eq!(plan.diagonalizer, CMatrix::identity(4));
        assert_eq!(
            masks(&plan),
            vec![
                ("II".into(), 0.25),
                ("ZI".into(), -0.25),
                ("IZ".into(), 0.25),
                ("ZZ".into(), -0.25)
            ]
        );
    }

    #[test]
    fn plan_for_identity() {
        for n in 1..=3 {
            let plan = compile_measurement_plan(&CMatrix::identity(1 << n)).unwrap();
            assert_eq!(plan.terms.len(), 1);
            assert_eq!(plan.terms[0].z_mask, 0);
            assert_eq!(plan.terms[0].coefficient, 1.0);
            let rho = random_density(2, 1 << (n - 1), 1, &mut stream_rng(n as u64, 0)).unwrap();
            assert_eq!(
                execute_plan(&plan, &rho, 0.0, &mut stream_rng(0, 0)).unwrap(),
                1.0
            );
        }
    }

    #[test]
    fn plan_rejects_qutrit_dimension() {
        assert!(matches!(
            compile_measurement_plan(&CMatrix::identity(9)),
            Err(Error::NotQubits(9))
        ));
    }

    #[test]
    fn reduction_network_shapes() {
        assert_eq!(reduction_network(0b011, 3), (vec![(2, 1)], Some(1)));
        assert_eq!(reduction_network(0b111, 3), (vec![(3, 2), (2, 1)], Some(1)));
        assert_eq!(reduction_network(0b110, 3), (vec![(3, 2)], Some(2)));
        assert_eq!(reduction_network(0, 3), (vec![], None));
    }

    #[test]
    fn network_folds_parity_onto_readout_qubit() {
        let n = 3;
        for mask in 1u32..8 {
            let (network, readout) = reduction_network(mask, n);
            let q = readout.unwrap();
            // C^dagger Z_q C for C = network applied in order
            let mut m = CMatrix::from_real_diagonal(&z_string_diagonal(n, 1 << (q - 1)));
            for &(c, t) in network.iter().rev() {
                let g = cnot_gate(n, c, t).unwrap();
                m = g.unitary().adjoint().matmul(&m).matmul(g.unitary());
            }
            let want = CMatrix::from_real_diagonal(&z_string_diagonal(n, mask));
            assert_eq!(m, want, "mask {mask:03b}");
        }
    }

    #[test]
    fn plan_on_sigma() {
        let plan = compile_measurement_plan(&CMatrix::projector(&ops::basis_vec(4, 0))).unwrap();
        let v = execute_plan(&plan, &sigma(), 0.0, &mut stream_rng(0, 0)).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn plan_matches_trace_product_on_random_pairs() {
        let mut rng = stream_rng(21, 0);
        for k in 0..300 {
            let n = 1 + k % 3;
            let d = 1usize << n;
            let a = random_hermitian(d, &mut rng);
            let rho = random_density(2, d / 2, 1 + k % d, &mut rng).unwrap();
            let plan = compile_measurement_plan(&a).unwrap();
            let got = execute_plan(&plan, &rho, 0.0, &mut rng).unwrap();
            let want = trace_product(rho.matrix(), &a).unwrap();
            assert!((got - want).abs() <= 1e-10, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn execute_restores_state_between_terms() {
        // reading each Z-string separately on fresh copies gives the same
        // numbers as the sequential run
        let mut rng = stream_rng(2, 0);
        let a = random_hermitian(8, &mut rng);
        let rho = random_density(2, 4, 8, &mut rng).unwrap();
        let plan = compile_measurement_plan(&a).unwrap();
        let seq = execute_plan_readings(&plan, &rho, 0.0, &mut rng).unwrap();
        let rotated = conjugate_unchecked(rho.matrix(), &plan.diagonalizer);
        for (t, r) in plan.terms.iter().zip(seq) {
            let z = CMatrix::from_real_diagonal(&z_string_diagonal(3, t.z_mask));
            let direct = crate::cmatrix::trace_product_raw(&rotated, &z).re;
            assert!((r - direct).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn plan_reconstructs_observable(seed in any::<u64>(), n in 1usize..=3) {
            let d = 1usize << n;
            let a = random_hermitian(d, &mut stream_rng(seed, 0));
            let plan = compile_measurement_plan(&a).unwrap();
            let rotated = conjugate_unchecked(&a, &plan.diagonalizer);
            prop_assert!(plan.diagonal_observable().max_abs_diff(&rotated) <= 1e-10);
            prop_assert!(plan.observable().max_abs_diff(&a) <= 1e-10);
            prop_assert!(plan.terms.windows(2).all(|w| w[0].z_mask < w[1].z_mask));
        }

        #[test]
        fn noiseless_readings_are_bounded(seed in any::<u64>()) {
            let mut rng = stream_rng(seed, 0);
            let rho = random_density(2, 2, 1, &mut rng).unwrap();
            for q in 1..=2 {
                let z = polarization(&rho, q, 0.0, &mut rng).unwrap();
                prop_assert!((-1.0..=1.0).contains(&z));
            }
        }
    }
}
