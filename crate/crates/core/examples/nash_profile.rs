//! Small-time decay of ||g(t)||_2 from a point mass, for the heat equation
//! and for the assembled Kraichnan tensor.
//!
//! cargo run --release --example nash_profile

use kraichnan::correlation::{log_log_slope, nash_profile};
use kraichnan::tensor::{assemble_tensor, TensorField};
use kraichnan::{Grid, SpectrumConfig, SymMatrix};

fn main() -> kraichnan::Result<()> {
    let n = 64;
    let heat = TensorField::constant(Grid::square(n), SymMatrix::identity(2))?;
    let kraichnan = assemble_tensor(&SpectrumConfig::new(2, 0.5, 0.0, 31)?, 1e-4, n)?;
    for (name, a) in [("heat", heat), ("kraichnan", kraichnan)] {
        let trace = nash_profile(&a, 1e-3, 0.3)?;
        let slope = log_log_slope(&trace, 0.03, 0.3)?;
        println!("{name}: log-log slope of ||g(t)||_2 on [0.03, 0.3] = {slope:.3}");
    }
    println!("reference slopes: heat -0.5, Nash envelope with beta = 0.5: -1");
    Ok(())
}
