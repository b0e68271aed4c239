//! Walk along a geodesic and check that parallel transport is an isometry.

use grassmann_karcher::random::{random_point, random_tangent};
use grassmann_karcher::Geodesic;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> grassmann_karcher::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_point(5, 2, &mut rng);
    let h = random_tangent(&p, 0.8, &mut rng);
    let u = random_tangent(&p, 1.0, &mut rng);
    let v = random_tangent(&p, 1.0, &mut rng);
    let geo = Geodesic::new(&p, &h)?;

    println!("{:>5} {:>12} {:>12} {:>14}", "t", "dist(P,P(t))", "|P^2-P|", "<u,v>(t)");
    for k in 0..=5 {
        let t = k as f64 * 0.2;
        let pt = geo.point(t);
        let ut = geo.transport(&u, t)?;
        let vt = geo.transport(&v, t)?;
        println!(
            "{t:5.1} {:12.8} {:12.2e} {:14.10}",
            p.distance(&pt)?,
            pt.idempotency_defect(),
            ut.metric(&vt)?
        );
    }

    // exp and log undo each other below the cut locus.
    let q = p.exp(&h)?;
    let back = p.log(&q)?;
    println!("|log_P(exp_P(H)) - H| = {:.2e}", back.sub(&h)?.norm());
    Ok(())
}
