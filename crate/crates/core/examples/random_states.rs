//! Random generators: Haar unitaries, product-eigenbasis states, separable
//! mixtures and Ginibre mixed states.

use ncwitness::cmatrix::haar_unitary;
use ncwitness::rng::stream_rng;
use ncwitness::states::{entropy_purity, random_density, random_pcc, random_separable, EigMode};

fn main() -> ncwitness::error::Result<()> {
    let mut rng = stream_rng(2024, 0);
    let u = haar_unitary(3, &mut rng);
    println!(
        "Haar 3x3: unitarity deviation {:.1e}",
        u.unitary_deviation()
    );

    let (pcc, sample) = random_pcc(2, 2, &EigMode::DirichletUniform, &mut rng)?;
    println!("pcc eigenvalue grid {:.4?}", sample.eigenvalues);
    let (s, p) = entropy_purity(&pcc);
    println!("pcc: S = {s:.4} bits, purity {p:.4}");

    let sep = random_separable(2, 2, 4, &mut rng)?;
    let (s, p) = entropy_purity(&sep);
    println!(
        "separable (4 terms): S = {s:.4} bits, purity {p:.4}, rank {}",
        sep.rank()
    );

    for rank in [1, 2, 4] {
        let rho = random_density(2, 2, rank, &mut rng)?;
        let (s, p) = entropy_purity(&rho);
        println!("ginibre rank {rank}: S = {s:.4} bits, purity {p:.4}");
    }
    Ok(())
}
