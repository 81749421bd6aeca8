// A JSON experiment config run end to end: seeded trials in parallel,
// summary against the bound, CSV/JSON reports, and the optional-stopping
// self-test.
//
// cargo run --release --example experiment_harness

use earlystop::harness::report::{self, Format};
use earlystop::harness::{optional_stopping_selftest, Experiment, ExperimentConfig};
use earlystop::Result;

const CONFIG: &str = r#"{
    "algorithm": "sgd",
    "problem": { "kind": "tanh_composite" },
    "data": { "mu": { "points": [[0.5, 0.0], [-0.5, 0.0], [0.0, 0.5], [0.0, -0.5]] } },
    "n_T": 100, "n_V": 100,
    "sgd": { "epsilon": 0.05, "m": 10, "c": 0.5 },
    "trials": 50, "master_seed": 7
}"#;

pub fn run_example() -> Result<()> {
    let exp = Experiment::new(ExperimentConfig::from_json(CONFIG)?)?;
    println!("constants: {:?}", exp.constants);
    for b in &exp.bounds {
        println!("  {}: {:?} (valid: {})", b.name, b.value, b.valid);
    }

    let results = exp.run_trials()?;
    let summary = exp.summarize(&results);
    print!("{}", report::report(std::slice::from_ref(&summary), Format::Csv)?);
    assert!(summary.pass);

    // same seed, same bytes
    let again = exp.run_trials()?;
    assert_eq!(report::trials_csv(&results)?, report::trials_csv(&again)?);
    print!("{}", report::trials_csv(&results[..3])?);

    let st = optional_stopping_selftest(20_000, 7)?;
    println!("stopped martingale: mean {:.4} +- {:.4} (pass: {})", st.mean, st.ci, st.pass);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
