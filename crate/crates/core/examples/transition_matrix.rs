//! Compares the superpixel-constrained transition matrix with the purely
//! spectral kNN variant on the same training samples.

use rlpa::datacube::{synth_cube, train_test_split, SplitScheme, SynthSpec};
use rlpa::graph::{
    build_affinity, build_affinity_spectral_only, build_transition, TransitionMatrix,
};
use rlpa::segmentation::{segment_cube, SegmentationParams};

fn describe(name: &str, t: &TransitionMatrix, classes: &[u32]) {
    let mut cross = 0.0;
    let mut total = 0.0;
    for (i, j, v) in t.matrix().triplets() {
        total += v;
        if classes[i] != classes[j] {
            cross += v;
        }
    }
    let largest = t.blocks().iter().map(|b| b.nodes.len()).max().unwrap_or(0);
    println!(
        "{name:<11} blocks {:>4}  largest {:>4}  nnz {:>7}  column defect {:.1e}  cross-class mass {:.4}",
        t.blocks().len(),
        largest,
        t.matrix().nnz(),
        t.max_column_defect(),
        cross / total
    );
}

fn main() -> rlpa::Result<()> {
    let spec = SynthSpec::graded(60, 60, 20, 6, 3, 3, 0.5, 0.05, 11);
    let (cube, truth) = synth_cube(&spec, 11)?;
    let split = train_test_split(&truth, SplitScheme::PerClass(100), 1)?;
    let samples = cube.samples(&split.train)?;
    let classes: Vec<u32> = split.train.iter().map(|&p| truth.get(p)).collect();

    let seg = segment_cube(
        &cube,
        &SegmentationParams {
            fixed_count: Some(36),
            ..Default::default()
        },
    )?;
    describe(
        "superpixel",
        &build_transition(&build_affinity(&samples, &seg.map)?),
        &classes,
    );
    for k in [5, 20] {
        let w = build_affinity_spectral_only(&samples.spectra, k)?;
        describe(&format!("knn k={k}"), &build_transition(&w), &classes);
    }
    Ok(())
}
