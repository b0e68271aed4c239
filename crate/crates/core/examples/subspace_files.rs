//! Write a subspace file, read it back, and run the CLI entry point on it.

use grassmann_karcher::cli::{main_with_args, read_subspace_file, write_subspace_file};
use grassmann_karcher::random::random_stiefel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("grassmann-karcher-example");
    std::fs::create_dir_all(&dir)?;
    let input = dir.join("pair.json");

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let bases = vec![random_stiefel(4, 2, &mut rng), random_stiefel(4, 2, &mut rng)];
    write_subspace_file(&input, &bases)?;
    let back = read_subspace_file(&input, false)?;
    assert_eq!(back[0].as_matrix(), bases[0].as_matrix());

    let mut out = Vec::new();
    let code = main_with_args(
        ["grassmann-karcher", "distance", input.to_str().unwrap()],
        &mut out,
        &mut std::io::stderr(),
    );
    print!("{}", String::from_utf8(out)?);
    println!("exit code {code}");

    let mean = dir.join("mean.json");
    let code = main_with_args(
        [
            "grassmann-karcher",
            "karcher-mean",
            input.to_str().unwrap(),
            "--out",
            mean.to_str().unwrap(),
        ],
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    println!("karcher-mean exit code {code}; wrote {}", mean.display());
    println!("{}", std::fs::read_to_string(dir.join("mean.json.trace.csv"))?);
    Ok(())
}
