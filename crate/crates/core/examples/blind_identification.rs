//! A small blind-identification sweep: SUT estimates of a noisy mixing
//! matrix averaged column-wise by the Karcher mean and by the Euclidean mean.
//!
//! Run with `--release`; pass a trial count as the first argument (default 10).

use grassmann_karcher::blindid::{run_experiment, MixingExperiment, Sweep};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(10);
    let cfg = MixingExperiment {
        trials,
        samples_per_trial: 5000,
        ..MixingExperiment::default()
    };
    let sweep = Sweep::NoiseLevels(vec![1.0, 0.5, 0.1, 0.01]);
    let table = run_experiment(&cfg, &sweep)?;

    println!("{:>6} {:>14} {:>14}", "eps", "karcher", "euclid");
    for eps in table.sweep_values() {
        if let Some((k, e)) = table.medians(eps) {
            println!("{eps:>6} {k:>14.5e} {e:>14.5e}");
        }
    }
    println!("skipped trials: {}", table.skipped());
    Ok(())
}
