//! Truncated cluster expansion on a window and bulk c_k from pinned clusters.

use latgas::coverings::perfect_coverings;
use latgas::enumeration::Budget;
use latgas::gfc::{bulk_c_k, truncated_cluster_log};
use latgas::lattice::ModelSpec;
use latgas::ratio::parse_rational;
use latgas::region::Window;

fn main() -> Result<(), latgas::Error> {
    let model = ModelSpec::builtin("hyperdiamond-2d")?;
    let family = perfect_coverings(&model, 4)?;
    let budget = Budget::default();
    let window = Window::tiled_box(&model, &family, 0, &[10, 10], Some(0))?;
    let log = truncated_cluster_log(&model, &family, &window, &parse_rational("100")?, 4, &budget)?;
    println!("exact log ratio {:.12}", log.exact);
    for order in &log.orders {
        println!("  clusters <= {}: {:.12} (error {:.2e})", order.max_cluster, order.approx, order.error);
    }
    let bulk = bulk_c_k(&model, &family, 0, 2, &budget)?;
    println!("bulk c_k = {} ({} clusters)", bulk.coefficients.join(", "), bulk.clusters);
    Ok(())
}
