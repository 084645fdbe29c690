//! Product-eigenbasis classifier.
//!
//! The zero-way deficit is the entropy increase under complete local
//! dephasing, minimized over local bases. It vanishes exactly on states with
//! a product eigenbasis. Here it is estimated numerically by restarted hill
//! climbing over `U_A x U_B`, and combined with an exact test on
//! eigenvectors when the spectrum is nondegenerate.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cmatrix::{
    haar_unitary, hermitian_eig, kron, orthonormalize_columns, top_eigenvector, CMatrix, C64,
};
use crate::error::{Error, Result};
use crate::json::real17;
use crate::rng::stream_rng;
use crate::search::{perturb_unitary, HillClimbSchedule};
use crate::states::{shannon_bits, DensityMatrix};

pub const DEFAULT_RESTARTS: usize = 64;
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-7;
/// Spectra with every adjacent gap above this take the exact path.
pub const DEGENERACY_GAP: f64 = 1e-8;

/// Local unitaries; dephasing happens in the computational basis after
/// `rho -> (U_A x U_B) rho (U_A x U_B)^dagger`, so the rows of `u_a` are the
/// conjugated local basis vectors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalBasisPair {
    pub u_a: CMatrix,
    pub u_b: CMatrix,
}

impl LocalBasisPair {
    pub fn identity(dim_a: usize, dim_b: usize) -> Self {
        Self {
            u_a: CMatrix::identity(dim_a),
            u_b: CMatrix::identity(dim_b),
        }
    }

    pub fn joint(&self) -> CMatrix {
        kron(&self.u_a, &self.u_b)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        let u = self.joint();
        let m = u.matmul(rho.matrix()).matmul(&u.adjoint()).hermitize();
        DensityMatrix::new_unchecked(rho.dim_a(), rho.dim_b(), m)
    }
}

/// Drops every off-diagonal entry in the computational product basis.
pub fn dephase(rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::new_unchecked(rho.dim_a(), rho.dim_b(), rho.matrix().diagonal_part())
}

/// `diag(U rho U^dagger)` without forming the product.
fn rotated_diagonal(rho: &CMatrix, u: &CMatrix) -> Vec<f64> {
    let d = rho.rows();
    (0..d)
        .map(|x| {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..d {
                let uxj = u[(x, j)];
                if uxj == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut row = C64::new(0.0, 0.0);
                for k in 0..d {
                    row += rho[(j, k)] * u[(x, k)].conj();
                }
                acc += uxj * row;
            }
            acc.re.max(0.0)
        })
        .collect()
}

fn dephased_entropy(rho: &CMatrix, basis: &LocalBasisPair) -> f64 {
    shannon_bits(&rotated_diagonal(rho, &basis.joint()))
}

/// Estimated zero-way deficit in bits and the local basis achieving it.
///
/// Restart 0 starts from the eigenbases of the two reduced states, restart 1
/// from the computational basis, the rest from Haar-random pairs. Each is
/// hill-climbed with the default [`HillClimbSchedule`].
pub fn zero_way_deficit<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    restarts: usize,
    rng: &mut R,
) -> Result<(f64, LocalBasisPair)> {
    zero_way_deficit_with(rho, restarts, &HillClimbSchedule::default(), rng)
}

pub fn zero_way_deficit_with<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    restarts: usize,
    schedule: &HillClimbSchedule,
    rng: &mut R,
) -> Result<(f64, LocalBasisPair)> {
    if restarts == 0 {
        return Err(Error::InvalidParameter(
            "restarts must be at least 1".into(),
        ));
    }
    let (da, db) = (rho.dim_a(), rho.dim_b());
    let s_rho = shannon_bits(&rho.spectrum());
    let base: u64 = rng.random();

    let (best, basis) = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut r = stream_rng(base, k as u64);
            let start = match k {
                0 => reduced_eigenbases(rho),
                1 => LocalBasisPair::identity(da, db),
                _ => LocalBasisPair {
                    u_a: haar_unitary(da, &mut r),
                    u_b: haar_unitary(db, &mut r),
                },
            };
            let (h, b) = hill_climb(rho.matrix(), start, schedule, &mut r);
            (h, k, b)
        })
        .reduce_with(|x, y| if (y.0, y.1) < (x.0, x.1) { y } else { x })
        .map(|(h, _, b)| (h, b))
        .expect("at least one restart");

    let deficit = best - s_rho;
    debug_assert!(deficit > -1e-9, "deficit {deficit} below zero");
    Ok((deficit.max(0.0), basis))
}

fn hill_climb<R: Rng + ?Sized>(
    rho: &CMatrix,
    mut basis: LocalBasisPair,
    schedule: &HillClimbSchedule,
    rng: &mut R,
) -> (f64, LocalBasisPair) {
    let mut best = dephased_entropy(rho, &basis);
    for step in schedule.step_sizes() {
        let cand = LocalBasisPair {
            u_a: perturb_unitary(&basis.u_a, step, rng),
            u_b: basis.u_b.clone(),
        };
        let h = dephased_entropy(rho, &cand);
        if h < best {
            best = h;
            basis = cand;
        }
        let cand = LocalBasisPair {
            u_a: basis.u_a.clone(),
            u_b: perturb_unitary(&basis.u_b, step, rng),
        };
        let h = dephased_entropy(rho, &cand);
        if h < best {
            best = h;
            basis = cand;
        }
    }
    (best, basis)
}

/// Partial traces of `rho`.
pub fn reduced_states(rho: &DensityMatrix) -> (CMatrix, CMatrix) {
    let (da, db) = (rho.dim_a(), rho.dim_b());
    let m = rho.matrix();
    let mut ra = CMatrix::zeros(da, da);
    let mut rb = CMatrix::zeros(db, db);
    for i in 0..da {
        for k in 0..da {
            for j in 0..db {
                ra[(i, k)] += m[(i * db + j, k * db + j)];
            }
        }
    }
    for j in 0..db {
        for l in 0..db {
            for i in 0..da {
                rb[(j, l)] += m[(i * db + j, i * db + l)];
            }
        }
    }
    (ra, rb)
}

fn reduced_eigenbases(rho: &DensityMatrix) -> LocalBasisPair {
    let (ra, rb) = reduced_states(rho);
    let va = hermitian_eig(&ra.hermitize()).expect("hermitian").vectors;
    let vb = hermitian_eig(&rb.hermitize()).expect("hermitian").vectors;
    LocalBasisPair {
        u_a: va.adjoint(),
        u_b: vb.adjoint(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProductVerdict {
    Yes,
    No,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassificationPath {
    ExactNondegenerate,
    DeficitMinimization,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationResult {
    pub verdict: ProductVerdict,
    #[serde(serialize_with = "real17")]
    pub residual: f64,
    pub witness_basis: Option<LocalBasisPair>,
    pub path: ClassificationPath,
}

/// Decides whether `rho` has a product eigenbasis.
///
/// Nondegenerate spectra are decided exactly from the eigenvectors. Otherwise
/// the deficit is estimated with [`DEFAULT_RESTARTS`] restarts: `Yes` at or
/// below `tol`, `No` at or above `100 tol`, `Indeterminate` in between.
pub fn has_product_eigenbasis<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    tol: f64,
    rng: &mut R,
) -> Result<ClassificationResult> {
    has_product_eigenbasis_with(rho, tol, DEFAULT_RESTARTS, rng)
}

pub fn has_product_eigenbasis_with<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    tol: f64,
    restarts: usize,
    rng: &mut R,
) -> Result<ClassificationResult> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} must be > 0"
        )));
    }
    let eig = hermitian_eig(rho.matrix())?;
    let nondegenerate = eig.values.windows(2).all(|w| w[1] - w[0] > DEGENERACY_GAP);
    if nondegenerate {
        return Ok(exact_classification(rho, &eig.vectors, tol));
    }

    let (deficit, basis) = zero_way_deficit(rho, restarts, rng)?;
    let verdict = if deficit <= tol {
        ProductVerdict::Yes
    } else if deficit >= 100.0 * tol {
        ProductVerdict::No
    } else {
        ProductVerdict::Indeterminate
    };
    Ok(ClassificationResult {
        verdict,
        residual: deficit,
        witness_basis: (verdict == ProductVerdict::Yes).then_some(basis),
        path: ClassificationPath::DeficitMinimization,
    })
}

/// Schmidt factors of a `dim_a x dim_b` reshaped vector: `(a, b, residual)`
/// with `residual = |M - a (M^dagger a)^dagger|_F`, the weight outside the
/// leading Schmidt term.
fn leading_schmidt(v: &[C64], dim_a: usize, dim_b: usize) -> (Vec<C64>, Vec<C64>, f64) {
    let m = CMatrix::from_vec(dim_a, dim_b, v.to_vec()).expect("reshape");
    let (_, a) = top_eigenvector(&m.matmul(&m.adjoint()));
    let mut b = vec![C64::new(0.0, 0.0); dim_b];
    for (j, bj) in b.iter_mut().enumerate() {
        for (i, ai) in a.iter().enumerate() {
            *bj += ai.conj() * m[(i, j)];
        }
    }
    let mut residual = 0.0;
    for i in 0..dim_a {
        for j in 0..dim_b {
            residual += (m[(i, j)] - a[i] * b[j]).norm_sqr();
        }
    }
    let norm = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for x in b.iter_mut() {
        *x /= norm;
    }
    (a, b, residual.sqrt())
}

fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Norm of the part of unit vector `v` orthogonal to unit vector `r`.
fn orthogonal_part(r: &[C64], v: &[C64]) -> f64 {
    let ov = inner(r, v);
    r.iter()
        .zip(v)
        .map(|(x, y)| (y - x * ov).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Groups vectors that agree up to phase. Returns the group index of each
/// vector, one representative per group, and the worst deviation: the sine
/// of the angle to the representative inside a group, the overlap modulus
/// between groups.
fn cluster(vectors: &[Vec<C64>]) -> (Vec<usize>, Vec<Vec<C64>>, f64) {
    let mut reps: Vec<Vec<C64>> = Vec::new();
    let mut labels = Vec::with_capacity(vectors.len());
    let mut worst: f64 = 0.0;
    for v in vectors {
        let best = reps
            .iter()
            .enumerate()
            .map(|(g, r)| (g, inner(r, v).norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1));
        match best {
            Some((g, ov)) if ov * ov > 0.5 => {
                worst = worst.max(orthogonal_part(&reps[g], v));
                labels.push(g);
            }
            _ => {
                labels.push(reps.len());
                reps.push(v.clone());
            }
        }
    }
    for (g, r) in reps.iter().enumerate() {
        for s in &reps[..g] {
            worst = worst.max(inner(s, r).norm());
        }
    }
    (labels, reps, worst)
}

fn exact_classification(rho: &DensityMatrix, vectors: &CMatrix, tol: f64) -> ClassificationResult {
    let (da, db) = (rho.dim_a(), rho.dim_b());
    let d = da * db;
    let mut residual: f64 = 0.0;
    let mut fa = Vec::with_capacity(d);
    let mut fb = Vec::with_capacity(d);
    for k in 0..d {
        let (a, b, r) = leading_schmidt(&vectors.col(k), da, db);
        residual = residual.max(r);
        fa.push(a);
        fb.push(b);
    }
    let (la, reps_a, wa) = cluster(&fa);
    let (lb, reps_b, wb) = cluster(&fb);
    residual = residual.max(wa).max(wb);

    let mut filled = vec![false; d];
    let mut grid_ok = reps_a.len() == da && reps_b.len() == db;
    if grid_ok {
        for (&i, &j) in la.iter().zip(&lb) {
            if std::mem::replace(&mut filled[i * db + j], true) {
                grid_ok = false;
            }
        }
    }
    if !grid_ok {
        residual = residual.max(1.0);
    }

    let verdict = if residual <= tol {
        ProductVerdict::Yes
    } else {
        ProductVerdict::No
    };
    let witness_basis = (verdict == ProductVerdict::Yes).then(|| LocalBasisPair {
        u_a: orthonormalize_columns(reps_a).adjoint(),
        u_b: orthonormalize_columns(reps_b).adjoint(),
    });
    ClassificationResult {
        verdict,
        residual,
        witness_basis,
        path: ClassificationPath::ExactNondegenerate,
    }
}
