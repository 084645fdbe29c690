//! Linear witnesses c - Tr(rho A): the optimal c is the largest value of
//! <ab|A|ab> over product vectors.

use ncwitness::cmatrix::{ginibre, CMatrix};
use ncwitness::rng::stream_rng;
use ncwitness::states::{bell_phi_plus, random_separable};
use ncwitness::witness::{evaluate, linear_optimal_c, make_witness, AlternationConfig};

fn main() -> ncwitness::error::Result<()> {
    let mut rng = stream_rng(5, 0);
    let bell = CMatrix::projector(&bell_phi_plus());
    let c = linear_optimal_c(&bell, 2, 2, AlternationConfig::default(), &mut rng)?;
    println!("|Phi+><Phi+|: c = {c:.12}");

    let g = ginibre(4, 4, &mut rng);
    let a = g.matmul(&g.adjoint());
    let c = linear_optimal_c(&a, 2, 2, AlternationConfig::default(), &mut rng)?;
    let w = make_witness(c, vec![a], 2, 2)?;
    let mut min = f64::INFINITY;
    for k in 0..10_000 {
        let rho = random_separable(2, 2, 1 + k % 6, &mut rng)?;
        min = min.min(evaluate(&w, &rho)?);
    }
    println!("random positive A: c = {c:.9}, min W over 10^4 separable states = {min:.3e}");
    Ok(())
}
