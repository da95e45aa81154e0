//! Solves the correlation equation from g0 = cos(x_1)/2 and fits the
//! exponential decay of g(t, 0) for two diffusivities.
//!
//! cargo run --release --example correlation_decay

use kraichnan::correlation::{fit_decay_window, solve};
use kraichnan::experiments::initial_correlation;
use kraichnan::tensor::assemble_tensor;
use kraichnan::{Grid, SpectrumConfig};

fn main() -> kraichnan::Result<()> {
    let n = 64;
    let cfg = SpectrumConfig::new(2, 0.5, 0.0, (n - 1) / 2)?;
    let g0 = initial_correlation(Grid::square(n));
    for kappa in [1e-2, 1e-4] {
        let a = assemble_tensor(&cfg, kappa, n)?;
        let run = solve(&g0, &a, 8.0, 1e-2, &[])?;
        let fit = fit_decay_window(&run.g_at_origin(), 2.0, 8.0)?;
        println!(
            "kappa = {kappa:e}: g(8, 0) = {:.3e}, rate {:.4}, CG iterations {}",
            run.g_at(8.0).unwrap_or(f64::NAN),
            fit.rate,
            run.total_iterations
        );
    }
    Ok(())
}
