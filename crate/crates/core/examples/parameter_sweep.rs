//! Grid search over the cleansing parameters eta and alpha on a synthetic
//! scene at 30% label noise, printed as a table of mean overall accuracy.
//!
//! Run with `cargo run --release --example parameter_sweep [superpixels] [seeds]`.

use rlpa::classify::ClassifierKind;
use rlpa::eval::config::SynthSource;
use rlpa::eval::{parameter_sweep, ExperimentConfig, Source};
use rlpa::segmentation::SegmentationParams;

fn main() -> rlpa::Result<()> {
    let mut args = std::env::args().skip(1);
    let superpixels: usize = args
        .next()
        .map_or(144, |s| s.parse().expect("superpixel count"));
    let seeds: u64 = args.next().map_or(3, |s| s.parse().expect("seed count"));

    let cfg = ExperimentConfig {
        source: Source::Synth(SynthSource::default()),
        rhos: vec![0.3],
        seeds: (0..seeds).collect(),
        classifiers: vec![ClassifierKind::Nn],
        segmentation: SegmentationParams {
            fixed_count: Some(superpixels),
            ..Default::default()
        },
        ..Default::default()
    };
    let grid = [0.1, 0.3, 0.5, 0.7, 0.9, 0.975];
    let report = parameter_sweep(&cfg, &grid, &grid)?;

    print!("eta\\alpha");
    for a in grid {
        print!("{a:>8}");
    }
    println!();
    for e in grid {
        print!("{e:>9}");
        for a in grid {
            print!("{:>8.2}", 100.0 * report.get(e, a).unwrap());
        }
        println!();
    }
    Ok(())
}
