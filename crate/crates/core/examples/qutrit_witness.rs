//! Three-factor witness on two qutrits. Random sampling stays well below
//! 0.02, but refinement finds a rank-two product-eigenbasis state with
//! f = 0.02217, so c = 0.02 is not a valid constant for this witness.

use ncwitness::deficit::has_product_eigenbasis;
use ncwitness::rng::stream_rng;
use ncwitness::search::{monte_carlo_search, SearchConfig};
use ncwitness::states::{canonical_state, CanonicalState};
use ncwitness::witness::{evaluate, f_value, w_02plus};

fn main() -> ncwitness::error::Result<()> {
    let w = w_02plus();
    let rho = canonical_state(&CanonicalState::Rho02Plus)?;
    println!(
        "f(rho_02+) = {:.12} (1/27 = {:.12})",
        f_value(&rho, w.factors())?,
        1.0 / 27.0
    );
    println!("W(rho_02+) = {:+.9}", evaluate(&w, &rho)?);

    let n_samples = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1_000_000);
    let config = SearchConfig {
        n_samples,
        seed: 7,
        shards: rayon::current_num_threads(),
        ..Default::default()
    };
    let r = monte_carlo_search(w.factors(), 3, 3, &config)?;
    println!("\n{n_samples} samples: max f = {:.6}", r.sampled_max_f);
    println!("after refinement: max f = {:.6}", r.max_f);
    println!(
        "  purity {:.5}, {} distinct nonzero eigenvalues",
        r.best_purity, r.distinct_nonzero_eigenvalues
    );

    let best = r.best_sample.to_state();
    let class = has_product_eigenbasis(&best, 1e-7, &mut stream_rng(0, 0))?;
    println!(
        "  product eigenbasis: {:?}; W = {:+.6}",
        class.verdict,
        evaluate(&w, &best)?
    );
    Ok(())
}
