//! Trains 1-NN and ELM on clean and on noisy labels and scores both on the
//! held-out pixels.

use rlpa::classify::{Classifier, ClassifierKind, ElmParams};
use rlpa::datacube::{synth_cube, to_onehot, train_test_split, SplitScheme, SynthSpec};
use rlpa::eval::confusion;
use rlpa::noise::{apply_label_noise, NoiseSpec};

fn main() -> rlpa::Result<()> {
    let spec = SynthSpec::graded(60, 60, 20, 6, 3, 3, 0.5, 0.05, 11);
    let (cube, truth) = synth_cube(&spec, 11)?;
    let split = train_test_split(&truth, SplitScheme::PerClass(100), 1)?;
    let train_x = cube.samples(&split.train)?.spectra;
    let test_x = cube.samples(&split.test)?.spectra;
    let test_y: Vec<u32> = split.test.iter().map(|&p| truth.get(p)).collect();

    let clean = to_onehot(&truth, &split.train)?;
    let noisy = apply_label_noise(&clean, &NoiseSpec::new(0.3, 2)?)?;

    println!("classifier  labels    OA      AA      kappa");
    for kind in [ClassifierKind::Nn, ClassifierKind::Elm] {
        for (name, labels) in [("clean", &clean), ("noisy", &noisy)] {
            let model = Classifier::fit(
                kind,
                &train_x,
                &labels.argmax_labels(),
                &ElmParams::default(),
            )?;
            let cm = confusion(&test_y, &model.predict(&test_x)?, truth.classes() as usize)?;
            println!(
                "{:<11} {:<8} {:.4}  {:.4}  {:.4}",
                kind.name(),
                name,
                cm.oa()?,
                cm.aa()?,
                cm.kappa()?
            );
        }
    }
    Ok(())
}
