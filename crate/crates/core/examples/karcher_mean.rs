//! Karcher mean of a cloud of subspaces with each conjugate-direction rule.

use grassmann_karcher::karcher::{karcher_mean, CGConfig, DirectionRule, Init, KarcherProblem};
use grassmann_karcher::random::{random_point, random_point_near};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let center = random_point(5, 2, &mut rng);
    let data: Vec<_> = (0..10).map(|_| random_point_near(&center, 0.3, &mut rng)).collect();
    let problem = KarcherProblem::new(data)?;

    for rule in DirectionRule::ALL {
        let config = CGConfig {
            direction_rule: rule,
            ..CGConfig::default()
        };
        let out = karcher_mean(&problem, Init::Auto, &config)?;
        println!(
            "{:>4}: {:3} iterations, cost {:.10}, |grad| {:.1e}, residual {:.1e}, dist to center {:.4}",
            rule,
            out.trace.iterations(),
            problem.cost(&out.mean)?,
            out.trace.final_grad_norm().unwrap_or(f64::NAN),
            problem.critical_point_residual(&out.mean)?,
            out.mean.distance(&center)?,
        );
    }
    Ok(())
}
