//! Optimal constant of the two-qubit witness from the one-parameter family
//! |s><s| (x) rho_B.

use ncwitness::search::{closed_form_c_opt, tau_profile};

fn main() {
    let (c_opt, a_hat) = closed_form_c_opt();
    println!("c_opt = {c_opt:.12}");
    println!(
        "a_hat = {a_hat:.12}  ((2 + sqrt 2) / 4 = {:.12})",
        (2.0 + 2f64.sqrt()) / 4.0
    );

    println!("\n   a      max_b f");
    for k in 0..=10 {
        let a = k as f64 / 10.0;
        println!("{a:5.2}  {:.9}", tau_profile(a));
    }
}
