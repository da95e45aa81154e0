//! Builds every random flow model and reports the size of its segments.
//!
//! cargo run --release --example flow_models

use kraichnan::flows::{build_piecewise_flow, FlowModel, FlowParams};
use kraichnan::spectrum::spectral_divergence;

fn main() -> kraichnan::Result<()> {
    let params = FlowParams::new(0.5, 10, 32);
    for model in FlowModel::ALL_RANDOM {
        let params = FlowParams {
            alpha: model.default_alpha(),
            ..params
        };
        let eps = if model.is_white() { 0.01 } else { 0.1 };
        let flow = build_piecewise_flow(model, &params, eps, 1.0, 42)?;
        let u = flow.velocity_at(0.35)?;
        println!(
            "{model:>20}: {} segments, segment {} active at t = 0.35, max |u| {:.2}, divergence {:.1e}",
            flow.segment_count(),
            flow.segment_index(0.35),
            u.max_speed(),
            spectral_divergence(&u)
        );
    }
    Ok(())
}
