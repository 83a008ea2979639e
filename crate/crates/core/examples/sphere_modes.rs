//! Characteristic modes of the 942-unknown sphere (radius 0.75λ): the
//! degenerate groups from MLFMA + IRA next to the dense reference.
//! Takes a few minutes in release mode.

use charmode::cm::group_degenerate;
use charmode::config::{Backend, RunConfig};
use charmode::driver::{load_problem, solve_frequency};

const CONFIG: &str = r#"
backend = "mlfma-ira"
[mesh]
fixture = "reference_sphere"
[frequency]
hz = 299792458.0
[eigen]
nev = 10
ncv = 120
"#;

fn main() -> charmode::Result<()> {
    env_logger::init();
    let mut cfg = RunConfig::from_toml(CONFIG, ".")?;
    let (mesh, basis) = load_problem(&cfg)?;
    let f = cfg.frequency.single()?;
    let fast = solve_frequency(&cfg, &mesh, &basis, f)?;
    cfg.backend = Backend::DenseQz;
    let dense = solve_frequency(&cfg, &mesh, &basis, f)?;
    let t = &fast.telemetry;
    println!("N = {}, levels {}, nii {}, {:.0} s", t.unknowns, t.nlv, t.nii, t.solve_seconds);
    for (a, b) in fast.solution.modes.iter().zip(&dense.solution.modes) {
        println!("λ fast {:+.5}  dense {:+.5}", a.lambda, b.lambda);
    }
    let lambdas: Vec<f64> = fast.solution.modes.iter().map(|m| m.lambda).collect();
    for g in group_degenerate(&lambdas, 0.01) {
        println!("group of {}: {:?}", g.len(), g.iter().map(|&i| lambdas[i]).collect::<Vec<_>>());
    }
    Ok(())
}
