use proptest::prelude::*;
use rlpa::datacube::{
    load_cube, load_labels, save_cube, save_labels, synth_cube, to_onehot, train_test_split,
    CubeFormat, LabelField, LabelMatrix, SplitScheme, SynthSpec,
};
use rlpa::noise::{apply_label_noise, count_flips, NoiseSpec};
use rlpa_oracle::mc_flip_stats;

fn spec() -> SynthSpec {
    SynthSpec::graded(12, 15, 5, 4, 2, 3, 0.5, 0.05, 3)
}

#[test]
fn cube_files_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let (cube, labels) = synth_cube(&spec(), 1).unwrap();
    for name in ["c.raw", "c.csv"] {
        let path = dir.path().join(name);
        let format = CubeFormat::from_path(&path);
        save_cube(&path, &cube, format).unwrap();
        assert_eq!(load_cube(&path, format).unwrap(), cube);
    }
    let path = dir.path().join("labels.txt");
    save_labels(&path, &labels).unwrap();
    assert_eq!(load_labels(&path).unwrap(), labels);
}

#[test]
fn raw_header_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    let (cube, _) = synth_cube(&SynthSpec::graded(2, 3, 4, 2, 1, 2, 0.5, 0.0, 0), 0).unwrap();
    let path = dir.path().join("c.raw");
    save_cube(&path, &cube, CubeFormat::RawF32).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert!(bytes.starts_with(b"2 3 4\n"));
    assert_eq!(bytes.len(), 6 + 2 * 3 * 4 * 4);
    // band-interleaved-by-pixel: second float is band 1 of pixel (0, 0)
    let v = f32::from_le_bytes(bytes[10..14].try_into().unwrap());
    assert_eq!(v, cube.pixel(0, 0)[1]);
}

#[test]
fn truncated_raw_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.raw");
    std::fs::write(&path, b"2 2 1\n\0\0\0\0").unwrap();
    assert!(load_cube(&path, CubeFormat::RawF32).is_err());
    assert!(load_cube(dir.path().join("missing.raw"), CubeFormat::RawF32).is_err());
}

#[test]
fn noise_matches_oracle_distribution() {
    for &(classes, rho) in &[(9usize, 0.3), (16, 0.5)] {
        let n = 100_000;
        let clean =
            LabelMatrix::new(classes, (0..n).map(|i| (i % classes) as u32 + 1).collect()).unwrap();
        let noisy = apply_label_noise(&clean, &NoiseSpec::new(rho, 5).unwrap()).unwrap();
        let mut per_offset = vec![0usize; classes - 1];
        for i in 0..n {
            let (t, p) = (clean.label(i) as usize, noisy.label(i) as usize);
            if t != p {
                per_offset[(p + classes - t) % classes - 1] += 1;
            }
        }
        let oracle = mc_flip_stats(classes, rho, n, 6);
        let rate = count_flips(&clean, &noisy).unwrap() as f64 / n as f64;
        assert!(
            (rate - oracle.rho_hat).abs() < 0.01,
            "{rate} vs {}",
            oracle.rho_hat
        );
        for (k, &c) in per_offset.iter().enumerate() {
            assert!((c as f64 / n as f64 - oracle.per_target[k]).abs() < 0.004);
        }
    }
}

#[test]
fn noise_keeps_background() {
    let field = LabelField::new(2, 3, vec![0, 1, 2, 0, 2, 1]).unwrap();
    let idx = field.labeled_indices();
    let clean = to_onehot(&field, &idx).unwrap();
    let noisy = apply_label_noise(&clean, &NoiseSpec::new(1.0, 2).unwrap()).unwrap();
    let out = field.with_labels(&idx, &noisy.argmax_labels()).unwrap();
    assert_eq!(out.labels(), &[0, 2, 1, 0, 1, 2]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_partition(seed_value in any::<u64>(), per_class in 1usize..40, frac in 0.01f64..1.0, use_frac in any::<bool>()) {
        let (_, labels) = synth_cube(&spec(), 0).unwrap();
        let scheme = if use_frac { SplitScheme::Fraction(frac) } else { SplitScheme::PerClass(per_class) };
        let split = train_test_split(&labels, scheme, seed_value).unwrap();
        let mut all: Vec<usize> = split.train.iter().chain(&split.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, labels.labeled_indices());
        prop_assert!(split.train.windows(2).all(|w| w[0] < w[1]));
        for (&class, &count) in &split.per_class_counts {
            let in_train = split.train.iter().filter(|&&i| labels.get(i) == class).count();
            prop_assert_eq!(in_train, count);
            prop_assert!(count >= 1);
        }
        prop_assert_eq!(&train_test_split(&labels, scheme, seed_value).unwrap(), &split);
    }

    #[test]
    fn noise_never_produces_invalid_labels(seed_value in any::<u64>(), rho in 0.0f64..=1.0, classes in 2usize..12) {
        let clean = LabelMatrix::new(classes, (0..200).map(|i| (i % classes) as u32 + 1).collect()).unwrap();
        let noisy = apply_label_noise(&clean, &NoiseSpec::new(rho, seed_value).unwrap()).unwrap();
        prop_assert!((0..200).all(|i| (1..=classes as u32).contains(&noisy.label(i))));
    }
}
