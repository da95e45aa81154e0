//! Transports cos(x_1) by a small ensemble of oriented shears and prints the
//! mean energy with its standard error.
//!
//! cargo run --release --example transport_ensemble

use kraichnan::experiments::initial_scalar;
use kraichnan::flows::{FlowModel, FlowParams};
use kraichnan::transport::{mc_energy, McSpec};

fn main() -> kraichnan::Result<()> {
    let n = 32;
    let spec = McSpec {
        model: FlowModel::OrientedShear,
        params: FlowParams::new(0.5, 10, n),
        eps: 0.1,
        kappa: 1e-2,
        t_end: 2.0,
        dt: 0.01,
        realizations: 8,
    };
    let theta0 = initial_scalar(spec.params.grid());
    let stats = mc_energy(&spec, &theta0, 3)?;
    for t in [0.5, 1.0, 1.5, 2.0] {
        let (m, se) = stats.at(t).expect("inside the run");
        println!(
            "t = {t}: mean ||theta||^2 = {m:.4} +- {se:.4} (initial {:.4})",
            stats.initial_energy
        );
    }
    Ok(())
}
