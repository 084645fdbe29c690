//! Random search over product-eigenbasis states for the largest value of
//! Tr(rho A1) Tr(rho A2), followed by hill-climb refinement.

use ncwitness::search::{closed_form_c_opt, monte_carlo_search, SearchConfig};
use ncwitness::states::EigMode;
use ncwitness::witness::w_sigma_optimal;

fn main() -> ncwitness::error::Result<()> {
    let w = w_sigma_optimal();
    let (c_opt, _) = closed_form_c_opt();
    let shards = rayon::current_num_threads();

    let config = SearchConfig {
        n_samples: 100_000,
        seed: 7,
        shards,
        ..Default::default()
    };
    let r = monte_carlo_search(w.factors(), 2, 2, &config)?;
    println!(
        "sampled max  {:.9} (sample #{})",
        r.sampled_max_f, r.best_index
    );
    println!("refined max  {:.9}", r.max_f);
    println!("closed form  {c_opt:.9}");
    println!(
        "best state: purity {:.5}, {} distinct nonzero eigenvalues",
        r.best_purity, r.distinct_nonzero_eigenvalues
    );

    let third = 1.0 / 3.0;
    let fixed = SearchConfig {
        eig_mode: EigMode::Fixed(vec![third, third, third, 0.0]),
        ..config
    };
    let r = monte_carlo_search(w.factors(), 2, 2, &fixed)?;
    println!("\nspectrum (1/3, 1/3, 1/3, 0): max {:.9} (<= 1/6)", r.max_f);
    Ok(())
}
