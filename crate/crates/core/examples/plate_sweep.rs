//! Tracked eigenvalue curves of the reference plate from 220 to 380 MHz.

use charmode::config::RunConfig;
use charmode::driver::{load_problem, sweep};

const CONFIG: &str = r#"
backend = "mlfma-ira"
tracked_modes = 4
[mesh]
fixture = "reference_plate"
[frequency]
start_hz = 220e6
stop_hz = 380e6
step_hz = 20e6
[eigen]
nev = 5
ncv = 20
[sai]
preset = "plate"
"#;

fn main() -> charmode::Result<()> {
    env_logger::init();
    let cfg = RunConfig::from_toml(CONFIG, ".")?;
    let (mesh, basis) = load_problem(&cfg)?;
    let res = sweep(&cfg, &mesh, &basis)?;
    print!("{:>8}", "MHz");
    for c in 1..=res.curves.len() {
        print!(" {:>16}", format!("curve {c} (corr)"));
    }
    println!();
    for step in 0..res.curves[0].len() {
        print!("{:8.0}", res.curves[0][step].freq_hz / 1e6);
        for c in &res.curves {
            print!(" {:+9.4} ({:.3})", c[step].lambda, c[step].correlation);
        }
        println!();
    }
    println!("minimum correlation {:.3}", res.min_confidence());
    Ok(())
}
