//! Perfect covering families of the built-in models.

use latgas::coverings::perfect_coverings;
use latgas::lattice::ModelSpec;

fn main() -> Result<(), latgas::Error> {
    for (name, bound) in [("hyperdiamond-2d", 4), ("hexagon", 6), ("cross", 10), ("poly-a", 10), ("hyperdiamond-3d", 4)] {
        let model = ModelSpec::builtin(name)?;
        let family = perfect_coverings(&model, bound)?;
        println!("{name}: tau = {} (period bound {bound})", family.tau());
        let first = family.get(0);
        println!("  first covering: det {} basis {:?}", first.determinant(), first.basis());
    }
    let domino = ModelSpec::builtin("domino")?;
    match perfect_coverings(&domino, 8) {
        Ok(f) => println!("domino: tau = {}", f.tau()),
        Err(e) => println!("domino: {e}"),
    }
    Ok(())
}
