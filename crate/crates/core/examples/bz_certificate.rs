//! Convergence certificate for the GFc polymer expansion at several fugacities.

use latgas::coverings::perfect_coverings;
use latgas::enumeration::Budget;
use latgas::gfc::{bz_certificate, BzParams};
use latgas::lattice::ModelSpec;
use latgas::ratio::parse_rational;

fn main() -> Result<(), latgas::Error> {
    let model = ModelSpec::builtin("hyperdiamond-2d")?;
    let family = perfect_coverings(&model, 4)?;
    let huge = format!("1{}", "0".repeat(80));
    for z in ["1", "1000000", huge.as_str()] {
        let report = bz_certificate(&model, &family, 0, &parse_rational(z)?, BzParams::default(), 16, &Budget::default())?;
        let label = if z.len() > 10 { "1e80" } else { z };
        println!("z = {label}: alpha {:.4e}, delta {:.4e}, passed {}: {}", report.alpha, report.delta, report.passed, report.reason);
    }
    Ok(())
}
