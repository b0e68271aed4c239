use grassmann_karcher::blindid::amari_error;
use grassmann_karcher::cli::SubspaceFile;
use grassmann_karcher::random::{random_complex, random_point, random_stiefel, random_tangent, random_unitary};
use grassmann_karcher::Geodesic;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shape() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=7).prop_flat_map(|n| (Just(n), 1..n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn geodesics_stay_on_the_manifold((n, m) in shape(), seed in any::<u64>(), t in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_point(n, m, &mut rng);
        let h = random_tangent(&p, 1.0, &mut rng);
        let q = Geodesic::new(&p, &h).unwrap().point(t);
        prop_assert!(q.idempotency_defect() < 1e-10);
        prop_assert!((q.projector().trace() - m as f64).abs() < 1e-10);
    }

    #[test]
    fn log_inverts_exp((n, m) in shape(), seed in any::<u64>(), r in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_point(n, m, &mut rng);
        let xi = random_tangent(&p, r, &mut rng);
        let back = p.log(&p.exp(&xi).unwrap()).unwrap();
        prop_assert!(back.sub(&xi).unwrap().norm() < 1e-9 * r.max(1e-3) * 1e3);
        prop_assert!((p.distance(&p.exp(&xi).unwrap()).unwrap() - r).abs() < 1e-9);
    }

    #[test]
    fn distance_is_a_symmetric_unitary_invariant((n, m) in shape(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_point(n, m, &mut rng);
        let q = random_point(n, m, &mut rng);
        let u = random_unitary(n, &mut rng);
        let d = p.distance(&q).unwrap();
        prop_assert!((d - q.distance(&p).unwrap()).abs() < 1e-9);
        prop_assert!((d - p.rotate(&u).distance(&q.rotate(&u)).unwrap()).abs() < 1e-9);
        prop_assert!(d <= (m as f64 * 2.0).sqrt() * std::f64::consts::FRAC_PI_2 + 1e-12);
    }

    #[test]
    fn amari_ignores_column_order_and_vanishes_on_scaled_permutations(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_complex(n, n, &mut rng);
        let a_hat = random_complex(n, n, &mut rng);
        let base = amari_error(&a_hat, &a).unwrap();
        let mut permuted = a_hat.clone();
        permuted.swap_columns(0, n - 1);
        prop_assert!((amari_error(&permuted, &a).unwrap() - base).abs() < 1e-9 * base.max(1.0));
        prop_assert!(base >= 0.0);

        let mut scaled = a.clone();
        scaled.swap_columns(0, n - 1);
        scaled.column_mut(0).iter_mut().for_each(|z| *z *= grassmann_karcher::C64::new(-2.0, 0.5));
        prop_assert!(amari_error(&scaled, &a).unwrap() < 1e-9);
    }

    #[test]
    fn subspace_files_roundtrip_bit_exactly((n, m) in shape(), seed in any::<u64>(), count in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bases: Vec<_> = (0..count).map(|_| random_stiefel(n, m, &mut rng)).collect();
        let text = SubspaceFile::from_bases(&bases).unwrap().to_json();
        let back = SubspaceFile::from_json(&text).unwrap().to_bases(false).unwrap();
        for (a, b) in bases.iter().zip(&back) {
            prop_assert_eq!(a.as_matrix(), b.as_matrix());
        }
    }
}
