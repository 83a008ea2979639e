//! Reference plate at 300 MHz: MLFMA + IRA against the dense reference,
//! at inner tolerances 1e-3 and 1e-2.

use charmode::cm::magnitude_discrepancy;
use charmode::config::{Backend, RunConfig};
use charmode::driver::{load_problem, solve_frequency};

const CONFIG: &str = r#"
backend = "mlfma-ira"
[mesh]
fixture = "reference_plate"
[frequency]
hz = 300e6
[eigen]
nev = 5
ncv = 20
[sai]
preset = "plate"
"#;

fn main() -> charmode::Result<()> {
    env_logger::init();
    let mut cfg = RunConfig::from_toml(CONFIG, ".")?;
    let (mesh, basis) = load_problem(&cfg)?;
    let f = cfg.frequency.single()?;
    cfg.backend = Backend::DenseQz;
    let dense = solve_frequency(&cfg, &mesh, &basis, f)?;
    cfg.backend = Backend::MlfmaIra;
    for tol in [1e-3, 1e-2] {
        cfg.solver.tol = tol;
        let fast = solve_frequency(&cfg, &mesh, &basis, f)?;
        let t = &fast.telemetry;
        println!(
            "inner tol {tol:e}: {} outer iterations, {} applications, nii {}, {:.1} s",
            t.outer_iterations, t.applications, t.nii, t.solve_seconds
        );
        for (i, (a, b)) in fast.solution.modes.iter().zip(&dense.solution.modes).enumerate().take(4) {
            println!(
                "  J{}: λ fast {:+.5} dense {:+.5}  |J| discrepancy {:.3}%  realness {:.1e}",
                i + 1,
                a.lambda,
                b.lambda,
                100.0 * magnitude_discrepancy(&a.current, &b.current),
                a.realness
            );
        }
    }
    Ok(())
}
