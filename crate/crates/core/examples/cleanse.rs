//! Cleanses a noisy training set and prints the number of wrong labels after
//! each round.

use rlpa::cleansing::{rlpa_cleanse, RlpaConfig};
use rlpa::datacube::{synth_cube, to_onehot, train_test_split, SplitScheme, SynthSpec};
use rlpa::graph::{build_affinity, build_transition};
use rlpa::noise::{apply_label_noise, NoiseSpec};
use rlpa::segmentation::{segment_cube, SegmentationParams};

fn main() -> rlpa::Result<()> {
    let spec = SynthSpec::graded(60, 60, 20, 6, 3, 3, 0.5, 0.05, 11);
    let (cube, truth) = synth_cube(&spec, 11)?;
    let split = train_test_split(&truth, SplitScheme::PerClass(100), 1)?;
    let clean = to_onehot(&truth, &split.train)?;
    let noisy = apply_label_noise(&clean, &NoiseSpec::new(0.3, 2)?)?;

    let seg = segment_cube(
        &cube,
        &SegmentationParams {
            fixed_count: Some(36),
            ..Default::default()
        },
    )?;
    let t = build_transition(&build_affinity(&cube.samples(&split.train)?, &seg.map)?);
    let cfg = RlpaConfig {
        rounds: 30,
        ..Default::default()
    };
    let out = rlpa_cleanse(&t, &noisy, &cfg, Some(&clean))?;

    let d = &out.diagnostics;
    println!(
        "{} training samples, {} noisy before cleansing",
        clean.rows(),
        d.initial_noisy.unwrap()
    );
    for r in d.rounds.iter().filter(|r| r.round <= 5 || r.round % 5 == 0) {
        println!(
            "round {:>3}: {:>3} wrong in this round's labels, {:>3} after voting",
            r.round, r.round_noisy, r.cumulative_noisy
        );
    }
    Ok(())
}
