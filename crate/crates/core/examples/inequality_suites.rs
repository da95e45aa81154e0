//! Empirical ratios of the weighted Poincare and Nash type inequalities on
//! random mean-zero trigonometric polynomials.
//!
//! cargo run --release --example inequality_suites

use kraichnan::inequalities::{check_nonradial, run_suite, Suite, TestFunction};

fn main() -> kraichnan::Result<()> {
    for id in Suite::IDS {
        let suite = Suite::parse(id, 0.5, 0.5)?;
        let r = run_suite(suite, 50, 6, 1, None)?;
        println!(
            "{id:>18}: max {:.4}, median {:.4}, change under quadrature doubling {:.1e}",
            r.max_ratio, r.median_ratio, r.refinement_delta
        );
    }
    let g = TestFunction::cosine([1, 0]);
    println!(
        "cos(x_1), unweighted Poincare ratio: {:.4}",
        check_nonradial(&g, 0.0, false, 32)?
    );
    Ok(())
}
