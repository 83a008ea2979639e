//! MLFMA against dense Z, R and X products on the reference plate for a few
//! accuracy settings.

use charmode::driver::matvec_check;
use charmode::fmm::MlfmaOptions;
use charmode::mesh::{build_rwg, fixtures};

fn main() -> charmode::Result<()> {
    let mesh = fixtures::reference_plate();
    let basis = build_rwg(&mesh)?;
    for d0 in [2.0, 3.0, 4.0] {
        let opts = MlfmaOptions { d0, ..Default::default() };
        let rows = matvec_check(&mesh, &basis, 300e6, &opts, 3, 7, 4000)?;
        for op in ["Z", "R", "X"] {
            let worst = rows.iter().filter(|r| r.operator == op).map(|r| r.relative_error).fold(0.0, f64::max);
            println!("d0 = {d0}: {op} worst relative error {worst:.2e}");
        }
    }
    Ok(())
}
