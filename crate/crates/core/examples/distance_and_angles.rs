//! Principal angles and geodesic distance between random subspaces of C^6.

use grassmann_karcher::random::random_point;
use grassmann_karcher::GrassmannPoint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> grassmann_karcher::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = random_point(6, 2, &mut rng);
    let q = random_point(6, 2, &mut rng);

    let angles = p.principal_angles(&q)?;
    println!("principal angles: {angles:.6?}");
    println!("distance:         {:.12}", p.distance(&q)?);

    // The norm of the logarithm is the same distance.
    let xi = p.log(&q)?;
    println!("|log_P(Q)|:       {:.12}", xi.norm());

    // Orthogonal lines in C^2 sit at the cut locus: distance sqrt(2) * pi/2, no log.
    let e1 = GrassmannPoint::standard(2, 1)?;
    let e2 = e1.rotate(&grassmann_karcher::ComplexMatrix::from_row_slice(
        2,
        2,
        &[0.0, 1.0, 1.0, 0.0].map(|x| grassmann_karcher::C64::new(x, 0.0)),
    ));
    println!("orthogonal lines: {:.12}", e1.distance(&e2)?);
    match e1.log(&e2) {
        Ok(_) => println!("unexpected: log exists"),
        Err(e) => println!("log at the cut locus: {e}"),
    }
    Ok(())
}
