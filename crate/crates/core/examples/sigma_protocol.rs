//! Three nondestructive polarization readouts evaluate W_sigma in a single
//! run: controlled-H, read <Z1> and <Z2>, CNOT, read <Z2> again.

use ncwitness::protocol::run_sigma_protocol;
use ncwitness::rng::stream_rng;
use ncwitness::search::closed_form_c_opt;
use ncwitness::states::{canonical_state, random_density, CanonicalState};
use ncwitness::witness::{evaluate, w_sigma};

fn main() -> ncwitness::error::Result<()> {
    let (c, _) = closed_form_c_opt();
    let w = w_sigma(c)?;
    let sigma = canonical_state(&CanonicalState::Sigma)?;
    let mut rng = stream_rng(3, 0);

    let r = run_sigma_protocol(&sigma, c, 0.0, &mut rng)?;
    println!(
        "sigma: <Z1> = {:+.3}  <Z2> = {:+.3}  <Z2'> = {:+.3}  W = {:+.9}",
        r.z1_ii, r.z2_ii, r.z2_iv, r.w_value
    );

    for noise in [0.001, 0.01, 0.05] {
        let r = run_sigma_protocol(&sigma, c, noise, &mut rng)?;
        println!("noise {noise:<5}: W = {:+.6}", r.w_value);
    }

    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let rho = random_density(2, 2, 1 + k % 4, &mut rng)?;
        let r = run_sigma_protocol(&rho, c, 0.0, &mut rng)?;
        worst = worst.max((r.w_value - evaluate(&w, &rho)?).abs());
    }
    println!("1000 random states: max |protocol - direct| = {worst:.2e}");
    Ok(())
}
