//! On projective space the line search can be replaced by a Newton step on
//! the cost restricted to the search geodesic.

use grassmann_karcher::karcher::{karcher_mean, CGConfig, Init, KarcherProblem, StepRule};
use grassmann_karcher::random::{random_point, random_point_near};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    println!("{:>7} {:>10} {:>7} {:>12}", "problem", "backtrack", "newton", "dist apart");
    for k in 0..8 {
        let center = random_point(5, 1, &mut rng);
        let data: Vec<_> = (0..8).map(|_| random_point_near(&center, 0.5, &mut rng)).collect();
        let problem = KarcherProblem::new(data)?;

        let bt = karcher_mean(&problem, Init::Auto, &CGConfig::default())?;
        let nt = karcher_mean(
            &problem,
            Init::Auto,
            &CGConfig {
                step_rule: StepRule::NewtonCp,
                ..CGConfig::default()
            },
        )?;
        println!(
            "{k:>7} {:>10} {:>7} {:>12.1e}",
            bt.trace.iterations(),
            nt.trace.iterations(),
            bt.mean.distance(&nt.mean)?
        );
        if k == 0 {
            let kinds: Vec<&str> = nt.trace.records[1..].iter().map(|r| r.step_kind.as_str()).collect();
            println!("        newton step kinds: {kinds:?}");
        }
    }
    Ok(())
}
