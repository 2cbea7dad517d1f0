//! Certified partition function zeros and the identities linking them to c_k.

use latgas::enumeration::{canonical_counts, defect_counts, Budget};
use latgas::lattice::ModelSpec;
use latgas::leeyang::{annulus_summary, find_zeros, verify_zero_identities};
use latgas::region::Region;
use latgas::series::{region_series, SeriesKind};

fn main() -> Result<(), latgas::Error> {
    let model = ModelSpec::builtin("hyperdiamond-2d")?;
    let region = Region::torus(&[6, 6])?;
    let p = canonical_counts(&model, &region)?;
    let zeros = find_zeros(&p, 30)?;
    let annulus = annulus_summary(&zeros)?;
    println!("{} zeros in {:.6} <= |xi| <= {:.6}", zeros.degree(), annulus.r_min, annulus.r_max);
    let c = region_series(&model, &region, SeriesKind::GauntFisherC, p.n_max(), 2, &Budget::default())?;
    let report = verify_zero_identities(&zeros, &defect_counts(&p)[0], &c, 1e-9)?;
    println!("product residual {:.2e}", report.product_relative_residual);
    for check in &report.power_sums {
        println!("  k={}: c_k = {:.6}, from zeros {:.6}", check.k, check.c_k, check.from_zeros);
    }
    println!("passed: {}", report.passed);
    Ok(())
}
