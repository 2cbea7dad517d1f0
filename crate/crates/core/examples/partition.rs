//! Exact partition functions on tori and on a boundary-conditioned window.

use latgas::coverings::perfect_coverings;
use latgas::enumeration::{canonical_counts, defect_counts, density, partition_function, FugacityMap};
use latgas::lattice::{ModelSpec, Site};
use latgas::ratio::{parse_rational, rational_string};
use latgas::region::{Region, Window};

fn main() -> Result<(), latgas::Error> {
    let dimers = ModelSpec::builtin("monomer-dimer")?;
    let ring = canonical_counts(&dimers, &Region::torus(&[8])?)?;
    println!("ring 8: Z(N) = {:?}", ring.coefficients());
    println!("ring 8: Q(k) = {:?}", defect_counts(&ring));

    let diamond = ModelSpec::builtin("hyperdiamond-2d")?;
    let torus = canonical_counts(&diamond, &Region::torus(&[6, 6])?)?;
    println!("6x6 torus: N_max = {}, Xi(1) = {}", torus.n_max(), torus.total());

    let family = perfect_coverings(&diamond, 4)?;
    let window = Region::Window(Window::tiled_box(&diamond, &family, 0, &[6, 6], Some(0))?);
    let z = FugacityMap::uniform(parse_rational("10")?).with_override(Site::xy(2, 2), parse_rational("1/2")?);
    println!("6x6 window: Xi = {}", rational_string(&partition_function(&diamond, &window, &z)?));
    println!("density at (2,2): {}", rational_string(&density(&diamond, &window, &z, Site::xy(2, 2))?));
    Ok(())
}
