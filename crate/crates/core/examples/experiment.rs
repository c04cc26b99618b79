//! Runs a small experiment from configuration text and prints the result
//! table.

use rlpa::eval::{run_experiment, ExperimentConfig};

const CONFIG: &str = "\
# synthetic 60x60 scene, 6 classes
source = synth
split = per_class:100
superpixels = 36
rho = 0.1
rho = 0.3
rho = 0.5
seed = 0
seed = 1
seed = 2
method = nla
method = rlpa
method = oracle-clean
classifier = nn
classifier = elm
rounds = 30
";

fn main() -> rlpa::Result<()> {
    let cfg = ExperimentConfig::parse(CONFIG)?;
    let report = run_experiment(&cfg)?;
    print!("{}", report.to_csv());
    eprintln!("{}", report.metadata());
    Ok(())
}
