//! Product-eigenbasis classification: exact eigenvector test for
//! nondegenerate spectra, zero-way deficit minimization otherwise.

use ncwitness::deficit::{has_product_eigenbasis, zero_way_deficit, DEFAULT_CLASSIFY_TOL};
use ncwitness::rng::stream_rng;
use ncwitness::states::{
    canonical_state, entropy_purity, random_pcc, CanonicalState, DensityMatrix, EigMode,
};

fn report(name: &str, rho: &DensityMatrix, seed: u64) -> ncwitness::error::Result<()> {
    let mut rng = stream_rng(seed, 0);
    let c = has_product_eigenbasis(rho, DEFAULT_CLASSIFY_TOL, &mut rng)?;
    let (deficit, _) = zero_way_deficit(rho, 64, &mut rng)?;
    let (s, purity) = entropy_purity(rho);
    println!(
        "{name:<12} {:?} via {:?}, residual {:.2e}; deficit {deficit:.6} bits, S = {s:.4}, purity {purity:.4}",
        c.verdict, c.path, c.residual
    );
    Ok(())
}

fn main() -> ncwitness::error::Result<()> {
    report("sigma", &canonical_state(&CanonicalState::Sigma)?, 1)?;
    report("rho_02+", &canonical_state(&CanonicalState::Rho02Plus)?, 2)?;
    report(
        "I/4",
        &canonical_state(&CanonicalState::MaxMixed { dim_a: 2, dim_b: 2 })?,
        3,
    )?;
    let (pcc, _) = random_pcc(2, 3, &EigMode::DirichletUniform, &mut stream_rng(4, 0))?;
    report("random pcc", &pcc, 4)?;
    Ok(())
}
