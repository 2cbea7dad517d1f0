//! Enumerates GFcs of a window and checks the polymer expansion exactly.

use latgas::coverings::perfect_coverings;
use latgas::enumeration::{Budget, FugacityMap};
use latgas::gfc::{enumerate_gfcs, size_histogram, verify_gfc_identity, HoleCache};
use latgas::lattice::ModelSpec;
use latgas::ratio::parse_rational;
use latgas::region::Window;

fn main() -> Result<(), latgas::Error> {
    let model = ModelSpec::builtin("hyperdiamond-2d")?;
    let family = perfect_coverings(&model, 4)?;
    let window = Window::tiled_box(&model, &family, 0, &[10, 10], Some(0))?;
    let budget = Budget::default();
    let catalog = enumerate_gfcs(&model, &family, &window, None, &budget)?;
    println!("{} configurations, {} GFcs, sizes {:?}", catalog.configurations, catalog.gfcs.len(), size_histogram(&catalog.gfcs));
    for gfc in catalog.gfcs.iter().take(3) {
        println!("  {}", gfc.to_json(2));
    }
    let cache = HoleCache::new();
    for z in ["3", "7/2", "100"] {
        let fug = FugacityMap::uniform(parse_rational(z)?);
        let check = verify_gfc_identity(&model, &family, &window, &catalog, &fug, &cache, &budget)?;
        println!("z = {z}: {} (lhs {})", if check.exact_match { "exact match" } else { "mismatch" }, check.lhs);
    }
    Ok(())
}
