//! Segments a synthetic cube into superpixels, first with the LoG-derived
//! budget and then with a fixed count, and writes the maps as PPM images.
//!
//! Run with `cargo run --example superpixels [out_dir]`.

use rlpa::datacube::{synth_cube, LabelField, SynthSpec};
use rlpa::eval::{render_map, write_ppm, Palette};
use rlpa::segmentation::{segment_cube, SegmentationParams};

fn main() -> rlpa::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().display().to_string());
    let dir = std::path::Path::new(&dir);
    let spec = SynthSpec::graded(60, 60, 20, 6, 3, 3, 0.5, 0.02, 2);
    let (cube, truth) = synth_cube(&spec, 2)?;

    for (name, fixed) in [("log_budget", None), ("fixed_36", Some(36))] {
        let params = SegmentationParams {
            fixed_count: fixed,
            ..Default::default()
        };
        let seg = segment_cube(&cube, &params)?;
        let sizes = seg.map.sizes();
        let mixed = (0..seg.map.count())
            .filter(|&s| {
                let mut classes: Vec<u32> = (0..truth.len())
                    .filter(|&p| seg.map.segment(p) == s)
                    .map(|p| truth.get(p))
                    .collect();
                classes.dedup();
                classes.len() > 1
            })
            .count();
        if let Some(e) = &seg.edges {
            println!(
                "{name}: {} of {} pixels on edges",
                e.edge_pixels, e.total_pixels
            );
        }
        println!(
            "{name}: budget {}, {} superpixels, sizes {}..{}, {} mix classes",
            seg.budget,
            seg.map.count(),
            sizes.iter().min().unwrap(),
            sizes.iter().max().unwrap(),
            mixed
        );

        // segment ids shifted to 1.. so that every superpixel gets a colour
        let ids: Vec<u32> = seg.map.segments().iter().map(|&s| s as u32 + 1).collect();
        let field = LabelField::new(seg.map.height(), seg.map.width(), ids)?;
        let img = render_map(&field, &Palette::for_classes(seg.map.count()))?;
        let path = dir.join(format!("superpixels_{name}.ppm"));
        write_ppm(&path, &img)?;
        println!("  wrote {}", path.display());
    }
    Ok(())
}
