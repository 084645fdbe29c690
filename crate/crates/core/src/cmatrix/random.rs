use rand::Rng;
use rand_distr::StandardNormal;

use super::{jacobi, CMatrix, C64};

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `rows x cols` matrix of i.i.d. standard complex Gaussians (E|z|^2 = 1).
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let data = (0..rows * cols).map(|_| complex_normal(rng)).collect();
    CMatrix::from_vec(rows, cols, data).expect("gaussian samples are finite")
}

/// Haar-distributed `d x d` unitary.
///
/// QR of a Ginibre sample by modified Gram-Schmidt. The triangular factor
/// then has a positive real diagonal, which makes the law of Q exactly Haar.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    assert!(d >= 1, "unitary dimension must be at least 1");
    let g = ginibre(d, d, rng);
    orthonormalize_columns((0..d).map(|j| g.col(j)).collect())
}

/// Modified Gram-Schmidt, two passes per column; columns must be linearly
/// independent.
pub(crate) fn orthonormalize_columns(mut q: Vec<Vec<C64>>) -> CMatrix {
    let d = q.first().map_or(0, Vec::len);
    let n = q.len();
    for j in 0..n {
        for _pass in 0..2 {
            for k in 0..j {
                let proj: C64 = q[k].iter().zip(&q[j]).map(|(a, b)| a.conj() * b).sum();
                let (done, rest) = q.split_at_mut(j);
                for (x, y) in rest[0].iter_mut().zip(&done[k]) {
                    *x -= proj * y;
                }
            }
        }
        let norm = q[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in q[j].iter_mut() {
            *x /= norm;
        }
    }
    let mut u = CMatrix::zeros(d, n);
    for (j, col) in q.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            u[(i, j)] = x;
        }
    }
    u
}

/// Haar-random unit vector in dimension `d` (first column of a Haar unitary
/// has this law; sampling a normalized Gaussian vector is equivalent and
/// cheaper).
pub fn random_unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..d).map(|_| complex_normal(rng)).collect();
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-300 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

/// GUE-style random Hermitian matrix `(G + G^dagger)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    ginibre(d, d, rng).hermitize()
}

/// `exp(i t H)` for Hermitian `H`, via its eigendecomposition.
pub fn exp_i_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let e = jacobi(h);
    let phases: Vec<C64> = e
        .values
        .iter()
        .map(|&lambda| C64::from_polar(1.0, t * lambda))
        .collect();
    e.vectors
        .matmul(&CMatrix::from_diagonal(&phases))
        .matmul(&e.vectors.adjoint())
}
