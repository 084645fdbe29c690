//! The separable state sigma has no product eigenbasis and is detected by
//! W_sigma; the maximally mixed state is not.

use ncwitness::states::{canonical_state, CanonicalState};
use ncwitness::witness::{factor_traces, verdict, w_bell, w_sigma_optimal, DEFAULT_TOL};

fn main() -> ncwitness::error::Result<()> {
    let w = w_sigma_optimal();
    println!("W_sigma with c = {:.9}", w.c());

    for (name, state) in [
        ("sigma", CanonicalState::Sigma),
        ("bell", CanonicalState::BellPhiPlus),
        ("I/4", CanonicalState::MaxMixed { dim_a: 2, dim_b: 2 }),
    ] {
        let rho = canonical_state(&state)?;
        let traces = factor_traces(&rho, w.factors())?;
        let v = verdict(&w, &rho, DEFAULT_TOL)?;
        println!(
            "{name:>6}: traces {:.4} {:.4}  W = {:+.9}  detected = {}",
            traces[0], traces[1], v.value, v.detected
        );
    }

    let bell = canonical_state(&CanonicalState::BellPhiPlus)?;
    let v = verdict(&w_bell(), &bell, DEFAULT_TOL)?;
    println!(
        "\nW_Bell on |Phi+>: {:+.3} detected = {}",
        v.value, v.detected
    );
    Ok(())
}
