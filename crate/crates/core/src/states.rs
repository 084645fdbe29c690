//! Bipartite density matrices: validation, the named states, random
//! generators and entropy/purity.
//!
//! Subsystem A is always the left tensor factor.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cmatrix::{
    ginibre, haar_unitary, jacobi, kron, kron_vec, ops, random_unit_vector, CMatrix, C64,
    CHECK_TOL, ZERO,
};
use crate::error::{Error, Result};
use crate::rng::dirichlet_uniform;

/// Smallest eigenvalue a valid state may have.
pub const PSD_TOL: f64 = 1e-9;

/// Eigenvalues at or below this count as exactly zero (entropy, rank).
pub const ZERO_EIGENVALUE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dim_a: usize,
    dim_b: usize,
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(dim_a: usize, dim_b: usize, mat: CMatrix) -> Result<Self> {
        let d = dim_a * dim_b;
        if dim_a == 0 || dim_b == 0 || mat.rows() != d || mat.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: format!("{d}x{d} for dims {dim_a}x{dim_b}"),
                actual: format!("{}x{}", mat.rows(), mat.cols()),
            });
        }
        let asymmetry = mat.hermitian_deviation();
        if asymmetry > CHECK_TOL {
            return Err(Error::NotHermitian { asymmetry });
        }
        let tr = mat.trace().re;
        if (tr - 1.0).abs() > CHECK_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = jacobi(&mat).min_value();
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "smallest eigenvalue {min:e} is negative"
            )));
        }
        Ok(Self { dim_a, dim_b, mat })
    }

    /// For generators whose output is valid by construction.
    pub(crate) fn new_unchecked(dim_a: usize, dim_b: usize, mat: CMatrix) -> Self {
        debug_assert_eq!(mat.rows(), dim_a * dim_b);
        Self { dim_a, dim_b, mat }
    }

    /// `|psi><psi|` for a normalized vector of length `dim_a * dim_b`.
    pub fn from_pure(dim_a: usize, dim_b: usize, psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > CHECK_TOL {
            return Err(Error::InvalidState(format!("vector norm^2 is {norm}")));
        }
        Self::new(dim_a, dim_b, CMatrix::projector(psi))
    }

    /// Computational product basis state `|i>|j>`.
    pub fn basis(dim_a: usize, dim_b: usize, i: usize, j: usize) -> Result<Self> {
        if i >= dim_a || j >= dim_b {
            return Err(Error::InvalidParameter(format!(
                "basis index ({i}, {j}) out of range for {dim_a}x{dim_b}"
            )));
        }
        Self::from_pure(dim_a, dim_b, &ops::basis_vec(dim_a * dim_b, i * dim_b + j))
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Eigenvalues, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        jacobi(&self.mat).values
    }

    pub fn purity(&self) -> f64 {
        crate::cmatrix::trace_product_raw(&self.mat, &self.mat).re
    }

    /// Number of eigenvalues above the zero threshold.
    pub fn rank(&self) -> usize {
        self.spectrum()
            .into_iter()
            .filter(|&x| x > ZERO_EIGENVALUE)
            .count()
    }
}

/// Parameters of `tau = |s><s| (x) rho_B` with
/// `|s> = (|0> + e^{i theta}|1>)/sqrt(2)` and `rho_B = [[a, b], [b*, 1-a]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauParameters {
    pub theta: f64,
    pub a: f64,
    pub b_re: f64,
    pub b_im: f64,
}

impl TauParameters {
    pub fn new(theta: f64, a: f64, b: C64) -> Result<Self> {
        let p = Self {
            theta,
            a,
            b_re: b.re,
            b_im: b.im,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn b(&self) -> C64 {
        C64::new(self.b_re, self.b_im)
    }

    /// `0 <= a <= 1` and `|b| <= sqrt(a(1-a))`, the positivity of `rho_B`.
    pub fn validate(&self) -> Result<()> {
        check_tau_ab(self.a, self.b())?;
        if !self.theta.is_finite() {
            return Err(Error::InvalidParameter("theta must be finite".into()));
        }
        Ok(())
    }

    /// The single-qubit state `rho_B`.
    pub fn rho_b(&self) -> CMatrix {
        let b = self.b();
        CMatrix::from_vec(
            2,
            2,
            vec![
                C64::new(self.a, 0.0),
                b,
                b.conj(),
                C64::new(1.0 - self.a, 0.0),
            ],
        )
        .expect("finite entries")
    }

    /// `|s>` for this `theta`.
    pub fn s_vector(&self) -> [C64; 2] {
        [
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::from_polar(FRAC_1_SQRT_2, self.theta),
        ]
    }
}

pub(crate) fn check_tau_ab(a: f64, b: C64) -> Result<()> {
    if !(0.0..=1.0).contains(&a) || !b.re.is_finite() || !b.im.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "a = {a} must lie in [0, 1]"
        )));
    }
    let bound = (a * (1.0 - a)).sqrt();
    if b.norm() > bound + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "|b| = {} exceeds sqrt(a(1-a)) = {bound}; rho_B would not be positive",
            b.norm()
        )));
    }
    Ok(())
}

/// The states that can be built by name.
#[derive(Clone, Debug, PartialEq)]
pub enum CanonicalState {
    /// `(|00><00| + |1+><1+|)/2`.
    Sigma,
    /// `|Phi+> = (|00> + |11>)/sqrt(2)`.
    BellPhiPlus,
    /// Two-qutrit `(|02><02| + |+0><+0| + |2+><2+|)/3`.
    Rho02Plus,
    MaxMixed {
        dim_a: usize,
        dim_b: usize,
    },
    Tau(TauParameters),
}

pub fn canonical_state(name: &CanonicalState) -> Result<DensityMatrix> {
    match name {
        CanonicalState::Sigma => {
            let p = sigma_factors();
            DensityMatrix::new(2, 2, (&p[0] + &p[1]).scale_real(0.5))
        }
        CanonicalState::BellPhiPlus => DensityMatrix::from_pure(2, 2, &bell_phi_plus()),
        CanonicalState::Rho02Plus => {
            let p = rho_02plus_factors();
            let sum = &(&p[0] + &p[1]) + &p[2];
            DensityMatrix::new(3, 3, sum.scale_real(1.0 / 3.0))
        }
        &CanonicalState::MaxMixed { dim_a, dim_b } => {
            let d = dim_a * dim_b;
            if d == 0 {
                return Err(Error::InvalidParameter(
                    "dimensions must be positive".into(),
                ));
            }
            DensityMatrix::new(
                dim_a,
                dim_b,
                CMatrix::identity(d).scale_real(1.0 / d as f64),
            )
        }
        CanonicalState::Tau(params) => {
            params.validate()?;
            let s = params.s_vector();
            let mat = kron(&CMatrix::projector(&s), &params.rho_b());
            DensityMatrix::new(2, 2, mat)
        }
    }
}

/// `(|00> + |11>)/sqrt(2)`.
pub fn bell_phi_plus() -> Vec<C64> {
    let mut v = vec![ZERO; 4];
    v[0] = C64::new(FRAC_1_SQRT_2, 0.0);
    v[3] = C64::new(FRAC_1_SQRT_2, 0.0);
    v
}

/// `[|00><00|, |1+><1+|]` on two qubits.
pub fn sigma_factors() -> Vec<CMatrix> {
    let zero = ops::basis_vec(2, 0);
    let one = ops::basis_vec(2, 1);
    let plus = ops::plus_vec(2);
    vec![
        CMatrix::projector(&kron_vec(&zero, &zero)),
        CMatrix::projector(&kron_vec(&one, &plus)),
    ]
}

/// `[|02><02|, |+0><+0|, |2+><2+|]` on two qutrits, `|+> = (|0>+|1>)/sqrt(2)`.
pub fn rho_02plus_factors() -> Vec<CMatrix> {
    let k = |i| ops::basis_vec(3, i);
    let plus = ops::plus_vec(3);
    vec![
        CMatrix::projector(&kron_vec(&k(0), &k(2))),
        CMatrix::projector(&kron_vec(&plus, &k(0))),
        CMatrix::projector(&kron_vec(&k(2), &plus)),
    ]
}

/// How a random product-eigenbasis state picks its eigenvalues.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "values")]
pub enum EigMode {
    /// Uniform on the probability simplex.
    DirichletUniform,
    /// A fixed grid, row-major over `(i, j)`.
    Fixed(Vec<f64>),
}

impl EigMode {
    pub fn validate(&self, dim_a: usize, dim_b: usize) -> Result<()> {
        if let EigMode::Fixed(v) = self {
            let n = dim_a * dim_b;
            if v.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "fixed eigenvalue grid has {} entries, expected {n}",
                    v.len()
                )));
            }
            if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "fixed eigenvalue {x} is negative or not finite"
                )));
            }
            let total: f64 = v.iter().sum();
            if (total - 1.0).abs() > CHECK_TOL {
                return Err(Error::InvalidParameter(format!(
                    "fixed eigenvalues sum to {total}, expected 1"
                )));
            }
        }
        Ok(())
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, EigMode::Fixed(_))
    }
}

/// A state with a product eigenbasis, kept in generating form:
/// `sum_ij e_ij |u_i><u_i| (x) |v_j><v_j|`.
#[derive(Clone, Debug, PartialEq)]
pub struct PccSample {
    pub dim_a: usize,
    pub dim_b: usize,
    /// `e_ij` at index `i * dim_b + j`.
    pub eigenvalues: Vec<f64>,
    /// Columns are `|u_i>`.
    pub basis_a: CMatrix,
    /// Columns are `|v_j>`.
    pub basis_b: CMatrix,
}

impl PccSample {
    pub fn eigenvalue(&self, i: usize, j: usize) -> f64 {
        self.eigenvalues[i * self.dim_b + j]
    }

    /// `|u_i> (x) |v_j>`.
    pub fn product_vector(&self, i: usize, j: usize) -> Vec<C64> {
        kron_vec(&self.basis_a.col(i), &self.basis_b.col(j))
    }

    /// `p = |<0|u_0>|^2`.
    pub fn p(&self) -> f64 {
        self.basis_a[(0, 0)].norm_sqr()
    }

    /// The density matrix, `W diag(e) W^dagger` with `W = U_A (x) U_B`.
    pub fn assemble(&self) -> CMatrix {
        let w = kron(&self.basis_a, &self.basis_b);
        let n = w.rows();
        let mut out = CMatrix::zeros(n, n);
        for (k, &e) in self.eigenvalues.iter().enumerate() {
            if e == 0.0 {
                continue;
            }
            for r in 0..n {
                let wr = w[(r, k)] * e;
                for c in 0..n {
                    out[(r, c)] += wr * w[(c, k)].conj();
                }
            }
        }
        out
    }

    pub fn to_state(&self) -> DensityMatrix {
        DensityMatrix::new_unchecked(self.dim_a, self.dim_b, self.assemble().hermitize())
    }

    pub fn purity(&self) -> f64 {
        self.eigenvalues.iter().map(|e| e * e).sum()
    }

    /// Number of distinct eigenvalues above `zero_tol`, where values closer
    /// than `gap_tol` are merged.
    pub fn distinct_nonzero_eigenvalues(&self, zero_tol: f64, gap_tol: f64) -> usize {
        let mut v: Vec<f64> = self
            .eigenvalues
            .iter()
            .copied()
            .filter(|&x| x > zero_tol)
            .collect();
        v.sort_by(f64::total_cmp);
        let mut count = 0;
        let mut last = f64::NEG_INFINITY;
        for x in v {
            if x - last > gap_tol {
                count += 1;
                last = x;
            }
        }
        count
    }

    /// Checks both bases are unitary and the grid is a probability vector.
    pub fn validate(&self) -> Result<()> {
        if self.basis_a.rows() != self.dim_a || self.basis_b.rows() != self.dim_b {
            return Err(Error::DimensionMismatch {
                expected: format!("bases of size {} and {}", self.dim_a, self.dim_b),
                actual: format!("{} and {}", self.basis_a.rows(), self.basis_b.rows()),
            });
        }
        for basis in [&self.basis_a, &self.basis_b] {
            let deviation = basis.unitary_deviation();
            if deviation > CHECK_TOL {
                return Err(Error::NotUnitary { deviation });
            }
        }
        EigMode::Fixed(self.eigenvalues.clone()).validate(self.dim_a, self.dim_b)
    }
}

/// Draws a product-eigenbasis sample without assembling the matrix.
pub fn sample_pcc<R: Rng + ?Sized>(
    dim_a: usize,
    dim_b: usize,
    eig_mode: &EigMode,
    rng: &mut R,
) -> PccSample {
    let basis_a = haar_unitary(dim_a, rng);
    let basis_b = haar_unitary(dim_b, rng);
    let eigenvalues = match eig_mode {
        EigMode::DirichletUniform => dirichlet_uniform(dim_a * dim_b, rng),
        EigMode::Fixed(v) => v.clone(),
    };
    PccSample {
        dim_a,
        dim_b,
        eigenvalues,
        basis_a,
        basis_b,
    }
}

/// Random state with a product eigenbasis: Haar-random local bases and a
/// Dirichlet or fixed eigenvalue grid.
pub fn random_pcc<R: Rng + ?Sized>(
    dim_a: usize,
    dim_b: usize,
    eig_mode: &EigMode,
    rng: &mut R,
) -> Result<(DensityMatrix, PccSample)> {
    if dim_a == 0 || dim_b == 0 {
        return Err(Error::InvalidParameter(
            "dimensions must be positive".into(),
        ));
    }
    eig_mode.validate(dim_a, dim_b)?;
    let sample = sample_pcc(dim_a, dim_b, eig_mode, rng);
    Ok((sample.to_state(), sample))
}

/// Mixture of `k` Haar-random product pure states with Dirichlet weights.
pub fn random_separable<R: Rng + ?Sized>(
    dim_a: usize,
    dim_b: usize,
    k: usize,
    rng: &mut R,
) -> Result<DensityMatrix> {
    if k == 0 || dim_a == 0 || dim_b == 0 {
        return Err(Error::InvalidParameter(
            "need k >= 1 and positive dimensions".into(),
        ));
    }
    let weights = dirichlet_uniform(k, rng);
    let d = dim_a * dim_b;
    let mut mat = CMatrix::zeros(d, d);
    for w in weights {
        let a = random_unit_vector(dim_a, rng);
        let b = random_unit_vector(dim_b, rng);
        mat = &mat + &CMatrix::projector(&kron_vec(&a, &b)).scale_real(w);
    }
    Ok(DensityMatrix::new_unchecked(dim_a, dim_b, mat.hermitize()))
}

/// `G G^dagger / Tr(G G^dagger)` with `G` a `d x rank` Ginibre sample.
pub fn random_density<R: Rng + ?Sized>(
    dim_a: usize,
    dim_b: usize,
    rank: usize,
    rng: &mut R,
) -> Result<DensityMatrix> {
    let d = dim_a * dim_b;
    if rank == 0 || rank > d {
        return Err(Error::InvalidParameter(format!(
            "rank {rank} must lie in 1..={d}"
        )));
    }
    let g = ginibre(d, rank, rng);
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    Ok(DensityMatrix::new_unchecked(
        dim_a,
        dim_b,
        m.scale_real(1.0 / tr).hermitize(),
    ))
}

/// Shannon entropy in bits of a probability vector, skipping entries at or
/// below the zero threshold.
pub fn shannon_bits(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > ZERO_EIGENVALUE)
        .map(|&x| -x * x.log2())
        .sum()
}

/// Von Neumann entropy in bits and purity `Tr rho^2`.
pub fn entropy_purity(rho: &DensityMatrix) -> (f64, f64) {
    (shannon_bits(&rho.spectrum()), rho.purity())
}
