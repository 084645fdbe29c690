//! JSON state and witness files as read by the command-line tool.

use ncwitness::json::{state_from_json, state_to_json, witness_from_json, witness_to_json};
use ncwitness::rng::stream_rng;
use ncwitness::states::{random_pcc, EigMode};
use ncwitness::witness::{evaluate, w_sigma};

fn main() -> ncwitness::error::Result<()> {
    let dir = std::env::temp_dir().join("ncwitness-example");
    std::fs::create_dir_all(&dir)?;

    let (rho, _) = random_pcc(2, 2, &EigMode::DirichletUniform, &mut stream_rng(1, 0))?;
    let state_path = dir.join("pcc.json");
    std::fs::write(&state_path, state_to_json(&rho)?)?;

    let w = w_sigma(0.19)?;
    let witness_path = dir.join("w.json");
    std::fs::write(&witness_path, witness_to_json(&w)?)?;

    let rho_back = state_from_json(&std::fs::read_to_string(&state_path)?)?;
    let w_back = witness_from_json(&std::fs::read_to_string(&witness_path)?)?;
    assert_eq!(rho_back, rho);
    println!(
        "wrote {} and {}",
        state_path.display(),
        witness_path.display()
    );
    println!("W = {:+.9}", evaluate(&w_back, &rho_back)?);
    println!("try: ncwitness classify --state {}", state_path.display());
    Ok(())
}
