//! Mayer and Gaunt-Fisher coefficients with stabilization over growing tori.

use latgas::coverings::perfect_coverings;
use latgas::enumeration::Budget;
use latgas::lattice::ModelSpec;
use latgas::ratio::rational_string;
use latgas::region::Region;
use latgas::series::{stabilization_report, SeriesKind, Verdict};

fn main() -> Result<(), latgas::Error> {
    let model = ModelSpec::builtin("hyperdiamond-2d")?;
    let tau = perfect_coverings(&model, 4)?.tau();
    let tori: Vec<Region> = [4, 6, 8].iter().map(|&l| Region::torus(&[l, l])).collect::<Result<_, _>>()?;
    for kind in [SeriesKind::MayerB, SeriesKind::GauntFisherC] {
        let report = stabilization_report(&model, &tori, kind, 2, tau, &Budget::default())?;
        println!("{kind:?}");
        for s in &report.series {
            let values: Vec<String> = s.values.iter().map(rational_string).collect();
            println!("  {}: {}", s.region, values.join(", "));
        }
        for (k, v) in report.verdicts.iter().enumerate() {
            match v {
                Verdict::Stable { value, first_volume } => {
                    println!("  order {}: stable at {} from volume {first_volume}", k + 1, rational_string(value))
                }
                Verdict::Diverging { exponent } => println!("  order {}: diverging, exponent {exponent:?}", k + 1),
            }
        }
    }
    Ok(())
}
