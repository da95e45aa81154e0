//! Runs a subcommand from a flat config text, exactly as the binary does,
//! and lists the artifacts it wrote.
//!
//! cargo run --release --example run_from_config

use kraichnan::config::ExperimentConfig;
use kraichnan::experiments;

fn main() -> kraichnan::Result<()> {
    let text = "\
# point-mass profile of the heat equation on a small grid
tensor = identity
grid = 32
dt = 1e-3
tmax = 0.2
";
    let dir = std::env::temp_dir().join("kraichnan-example");
    let mut cfg = ExperimentConfig::parse(text)?;
    cfg.out_dir = Some(dir.clone());
    let out = experiments::run("nash-profile", &cfg, 0)?.into_result()?;
    println!("slope: {}", out.summary["slope"]);
    for f in &out.outputs {
        println!("wrote {}", dir.join(f).display());
    }
    Ok(())
}
