//! Monte Carlo against the correlation equation in a regime that both
//! solvers resolve: a smooth white-in-time drift and a diffusivity large
//! enough for the scalar to stay well inside the dealiased band.

use kraichnan::config::ExperimentConfig;
use kraichnan::experiments::{cross_check, initial_scalar, McParams};
use kraichnan::transport::mc_energy;

#[test]
fn white_ensemble_matches_the_correlation_equation() {
    let cfg = ExperimentConfig::parse(
        "model = white_kraichnan\ngrid = 64\nkmax = 4\nkappa = 0.05\ntmax = 1\ndt = 0.004\nrealizations = 24",
    )
    .unwrap();
    let seed = 2024;
    let p = McParams::resolve(&cfg, seed, &[]).unwrap();
    let theta0 = initial_scalar(p.spec.params.grid());
    let stats = mc_energy(&p.spec, &theta0, seed).unwrap();
    let a = p.limit_tensor(p.spec.kappa).unwrap().unwrap();
    let rows = cross_check(&stats, &a, p.spec.t_end, 1e-3, &[0.25, 0.5, 1.0]).unwrap();
    for r in &rows {
        assert!(r.z.abs() < 3.0, "{r:?}");
    }
}

#[test]
fn white_shear_matches_its_diagonal_tensor() {
    let cfg = ExperimentConfig::parse(
        "model = white_shear\ngrid = 32\nkmax = 4\nkappa = 0.05\ntmax = 1\ndt = 0.004\nrealizations = 24",
    )
    .unwrap();
    let seed = 99;
    let p = McParams::resolve(&cfg, seed, &[]).unwrap();
    let theta0 = initial_scalar(p.spec.params.grid());
    let stats = mc_energy(&p.spec, &theta0, seed).unwrap();
    let a = p.limit_tensor(p.spec.kappa).unwrap().unwrap();
    let rows = cross_check(&stats, &a, p.spec.t_end, 1e-3, &[0.25, 0.5, 1.0]).unwrap();
    for r in &rows {
        assert!(r.z.abs() < 3.0, "{r:?}");
    }
}
