//! Generates a synthetic scene, writes it in both cube formats and reads it
//! back.
//!
//! Run with `cargo run --example synth_and_io [out_dir]`.

use rlpa::datacube::{
    load_cube, load_labels, save_cube, save_labels, synth_cube, CubeFormat, SynthSpec,
};

fn main() -> rlpa::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().display().to_string());
    let dir = std::path::Path::new(&dir);

    let spec = SynthSpec::graded(40, 50, 16, 5, 2, 5, 0.5, 0.05, 7);
    let (cube, labels) = synth_cube(&spec, 7)?;
    println!(
        "cube {}x{}x{}, {} labeled pixels in {} classes",
        cube.height(),
        cube.width(),
        cube.bands(),
        labels.labeled_indices().len(),
        labels.classes()
    );

    for name in ["scene.raw", "scene.csv"] {
        let path = dir.join(name);
        let format = CubeFormat::from_path(&path);
        save_cube(&path, &cube, format)?;
        let back = load_cube(&path, format)?;
        let bytes = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
        println!(
            "{:<10} {:>8} bytes, identical: {}",
            name,
            bytes,
            back == cube
        );
    }
    let path = dir.join("scene_labels.txt");
    save_labels(&path, &labels)?;
    println!("labels round-trip: {}", load_labels(&path)? == labels);
    Ok(())
}
