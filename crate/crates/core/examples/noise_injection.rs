//! Injects symmetric label noise at several rates and reports the realised
//! flip fraction and where the flipped labels went.

use rlpa::datacube::LabelMatrix;
use rlpa::noise::{apply_label_noise, count_flips, NoiseSpec};

fn main() -> rlpa::Result<()> {
    let classes = 6;
    let n = 60_000;
    let clean = LabelMatrix::new(classes, (0..n).map(|i| (i % classes) as u32 + 1).collect())?;

    println!("rho   flipped  per-target share (offset 1..C-1)");
    for rho in [0.0, 0.1, 0.3, 0.5, 1.0] {
        let noisy = apply_label_noise(&clean, &NoiseSpec::new(rho, 1)?)?;
        let flips = count_flips(&clean, &noisy)?;
        let mut per_offset = vec![0usize; classes - 1];
        for i in 0..n {
            let (t, p) = (clean.label(i) as usize, noisy.label(i) as usize);
            if t != p {
                per_offset[(p + classes - t) % classes - 1] += 1;
            }
        }
        let shares: Vec<String> = per_offset
            .iter()
            .map(|&c| format!("{:.3}", c as f64 / flips.max(1) as f64))
            .collect();
        println!(
            "{rho:<5} {:.4}   {}",
            flips as f64 / n as f64,
            shares.join(" ")
        );
    }
    Ok(())
}
