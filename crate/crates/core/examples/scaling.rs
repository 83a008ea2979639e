//! MLFMA and dense matvec times on spheres of about 1k, 4k and 16k unknowns.

use charmode::driver::scaling_point;

fn main() -> charmode::Result<()> {
    println!("{:>7} {:>9} {:>12} {:>12}", "N", "setup s", "mlfma s", "dense s");
    for points in [336, 1336, 5336] {
        let r = scaling_point(points, 3, 256, 1)?;
        println!("{:7} {:9.2} {:12.4} {:12.4}", r.unknowns, r.setup_seconds, r.mlfma_seconds, r.dense_seconds);
    }
    Ok(())
}
