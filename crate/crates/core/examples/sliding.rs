//! Non-sliding certificate and isolating completions for the cross.

use latgas::coverings::{certify_non_sliding, isolating_completions, perfect_coverings};
use latgas::lattice::{ModelSpec, Site};

fn main() -> Result<(), latgas::Error> {
    let model = ModelSpec::builtin("cross")?;
    let family = perfect_coverings(&model, 10)?;
    for seed in [vec![Site::ORIGIN], vec![Site::ORIGIN, Site::xy(3, 0)], vec![Site::ORIGIN, Site::xy(1, 2)]] {
        let completions = isolating_completions(&model, &seed)?;
        println!("seed {seed:?}: {} completions", completions.len());
    }
    let cert = certify_non_sliding(&model, &family, 3)?;
    println!("{} classes checked: {}", cert.classes_checked, cert.verdict);
    for class in cert.classes.iter().take(5) {
        println!("  {:?} -> phases {:?}", class.representative, class.phases);
    }
    Ok(())
}
