//! GMRES on the reference plate at 300 MHz with and without the SAI
//! preconditioner built from the near block.

use std::sync::Arc;
use std::time::Instant;

use charmode::fmm::{FmmContext, MlfmaOptions, OperatorKind};
use charmode::krylov::{gmres, SaiPreconditioner, SaiThresholds, SolverOptions};
use charmode::mesh::{build_rwg, fixtures};
use charmode::{wavelength, C64};

fn main() -> charmode::Result<()> {
    let mesh = fixtures::reference_plate();
    let basis = build_rwg(&mesh)?;
    let ctx = Arc::new(FmmContext::build(&mesh, &basis, wavelength(300e6), MlfmaOptions::default())?);
    let z = ctx.operator(OperatorKind::Z)?;
    println!("N = {}, near density {:.3}", ctx.len(), ctx.near.density());

    let t = Instant::now();
    let sai = SaiPreconditioner::build(&ctx.near.matrix, SaiThresholds::PLATE)?;
    println!("SAI build {:.2?}, nnz {} ({} Jacobi columns)", t.elapsed(), sai.nnz(), sai.jacobi_columns);

    let b: Vec<C64> = (0..ctx.len()).map(|i| C64::new(1.0 + (i % 7) as f64, (i % 3) as f64 - 1.0)).collect();
    let opts = SolverOptions::default();
    let (_, plain) = gmres(&z, &b, None, &opts, None)?;
    let (_, pre) = gmres(&z, &b, None, &opts, Some(&sai))?;
    println!("no preconditioner: {} iterations, residual {:.2e}", plain.iterations, plain.residual);
    println!("SAI:               {} iterations, residual {:.2e}", pre.iterations, pre.residual);
    Ok(())
}
