//! Compile Tr(rho A) into a diagonalizing unitary, Z-strings and CNOT parity
//! networks, then run the plan with single-qubit readouts.

use ncwitness::cmatrix::{ops, random_hermitian, trace_product, CMatrix};
use ncwitness::protocol::{compile_measurement_plan, execute_plan, MeasurementPlan};
use ncwitness::rng::stream_rng;
use ncwitness::states::random_density;

fn show(plan: &MeasurementPlan) {
    for t in &plan.terms {
        let net: Vec<String> = t
            .network
            .iter()
            .map(|(c, t)| format!("CNOT({c}->{t})"))
            .collect();
        let readout = t.readout.map_or("trace".to_string(), |q| format!("<Z{q}>"));
        println!(
            "  {:+.6} {}  via [{}] then {readout}",
            t.coefficient,
            t.label,
            net.join(", ")
        );
    }
}

fn main() -> ncwitness::error::Result<()> {
    for (name, k) in [("|00><00|", 0), ("|10><10|", 2)] {
        println!("{name}");
        show(&compile_measurement_plan(&CMatrix::projector(
            &ops::basis_vec(4, k),
        ))?);
    }

    let mut rng = stream_rng(1, 0);
    let a = random_hermitian(8, &mut rng);
    let plan = compile_measurement_plan(&a)?;
    println!("\nrandom 3-qubit observable: {} terms", plan.terms.len());
    show(&plan);

    let rho = random_density(2, 4, 3, &mut rng)?;
    let measured = execute_plan(&plan, &rho, 0.0, &mut rng)?;
    let direct = trace_product(rho.matrix(), &a)?;
    println!("plan {measured:+.12}  direct {direct:+.12}");
    println!(
        "plan json: {}",
        serde_json::to_string(&plan.terms[0]).expect("serializable")
    );
    Ok(())
}
