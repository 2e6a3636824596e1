//! Property-based invariants of the model algebra and the distribution
//! layer: encodings are bijective, design vectors are exactly subset
//! products, the saturated model degenerates to DINA, point-mass
//! populations collapse the marginal likelihood onto the conditional one,
//! sampled simplexes are simplexes, and everything is deterministic in its
//! seed.

use cdm_core::distributions::rng::RngStream;
use cdm_core::distributions::{
    beta_sample, dirichlet_sample, trunc_normal_sample, Interval,
};
use cdm_core::model::{
    class_index, conditional_loglik, design_vector, dina_as_gdina, dina_response_prob,
    gdina_linear, gdina_response_prob, marginal_loglik, profile_bits, profile_mask,
    reduce_profile, t0_t1_decompose, term_masks, term_value, DinaParams, ItemParams,
    PopulationDist, QMatrix, ResponseMatrix,
};
use proptest::prelude::*;

#[test]
fn class_encoding_is_a_bijection_for_k_up_to_16() {
    for k in 1..=16usize {
        let step = if k <= 12 { 1u32 } else { 127 }; // sample large spaces
        let mut mask = 0u32;
        while (mask as usize) < 1 << k {
            let bits = profile_bits(mask, k);
            assert_eq!(bits.len(), k);
            assert_eq!(profile_mask(&bits).unwrap(), mask);
            assert_eq!(class_index(mask), mask as usize);
            mask += step;
        }
    }
}

#[test]
fn design_vector_entries_are_subset_products_up_to_k4() {
    for k_star in 1..=4usize {
        let terms = term_masks(k_star);
        for reduced in 0..1u32 << k_star {
            let bits = profile_bits(reduced, k_star);
            let x = design_vector(&bits).unwrap();
            assert_eq!(x.len(), 1 << k_star);
            assert_eq!(x[0], 1.0, "intercept is the empty product");
            for (entry, &tm) in x.iter().zip(&terms) {
                let product: f64 = (0..k_star)
                    .filter(|kk| tm >> kk & 1 == 1)
                    .map(|kk| f64::from(bits[kk]))
                    .product();
                assert_eq!(*entry, product);
                assert_eq!(*entry, term_value(reduced, tm));
            }
        }
        // Canonical order: interaction order ascending, lexicographic ties.
        for w in terms.windows(2) {
            let (a, b) = (w[0], w[1]);
            assert!((a.count_ones(), a) < (b.count_ones(), b));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gdina_degenerates_to_dina(
        mask in 1u32..16,
        profile in 0u32..16,
        guess in 0.001f64..0.999,
        slip in 0.001f64..0.999,
    ) {
        let equivalent = dina_as_gdina(mask, guess, slip).unwrap();
        let dina = dina_response_prob(profile, mask, guess, slip);
        let gdina = gdina_response_prob(profile, mask, &equivalent).unwrap();
        prop_assert!((dina - gdina).abs() <= 1e-10, "{dina} vs {gdina}");
    }

    #[test]
    fn t0_t1_split_reproduces_the_linear_predictor(
        seed in any::<u64>(),
        k_star in 1usize..=4,
    ) {
        let mut rng = RngStream::from_u64(seed);
        let terms = term_masks(k_star);
        let coef: Vec<f64> = (0..1usize << k_star)
            .map(|_| trunc_normal_sample(&mut rng, 0.0, 1.0, Interval::unbounded()).unwrap())
            .collect();
        for reduced in 0..1u32 << k_star {
            for kk in 0..k_star {
                let (t0, t1) = t0_t1_decompose(&coef, &terms, reduced, kk);
                for bit in [0u32, 1] {
                    let with_bit = (reduced & !(1 << kk)) | bit << kk;
                    let lin = gdina_linear(&coef, with_bit, &terms);
                    prop_assert!(
                        (t0 + bit as f64 * t1 - lin).abs() <= 1e-12,
                        "k={kk} bit={bit}: {} vs {lin}",
                        t0 + bit as f64 * t1
                    );
                }
            }
        }
    }

    #[test]
    fn point_mass_population_collapses_marginal_to_conditional(
        seed in any::<u64>(),
        k in 1usize..=3,
        n_items in 1usize..=5,
        n in 1usize..=6,
        class in 0u32..8,
    ) {
        let class = class & ((1 << k) - 1);
        let mut rng = RngStream::from_u64(seed);
        let masks: Vec<u32> = (0..n_items).map(|_| rng.random_range(1..1u32 << k)).collect();
        let q = QMatrix::from_masks(masks, k).unwrap();
        let params = ItemParams::Dina(DinaParams {
            guess: (0..n_items).map(|_| rng.random_range(0.05..0.45)).collect(),
            slip: (0..n_items).map(|_| rng.random_range(0.05..0.45)).collect(),
        });
        let rows: Vec<Vec<u8>> = (0..n)
            .map(|_| (0..n_items).map(|_| u8::from(rng.random::<bool>())).collect())
            .collect();
        let y = ResponseMatrix::new(&rows).unwrap();
        let mut probs = vec![0.0; 1 << k];
        probs[class as usize] = 1.0;
        let pi = PopulationDist::new(probs).unwrap();
        for i in 0..n {
            let marginal = marginal_loglik(y.row(i), &pi, &q, &params).unwrap();
            let conditional = conditional_loglik(y.row(i), class, &q, &params).unwrap();
            prop_assert!(
                (marginal - conditional).abs() <= 1e-10,
                "{marginal} vs {conditional}"
            );
        }
    }

    #[test]
    fn sampled_dirichlet_vectors_live_on_the_simplex(
        seed in any::<u64>(),
        len in 2usize..=16,
        scale in 0.2f64..8.0,
    ) {
        let mut rng = RngStream::from_u64(seed);
        let delta: Vec<f64> = (0..len).map(|i| scale * (1.0 + i as f64 / 4.0)).collect();
        let p = dirichlet_sample(&mut rng, &delta).unwrap();
        prop_assert_eq!(p.len(), len);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        let total: f64 = p.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12, "sum {total}");
        prop_assert!(PopulationDist::new(p).is_ok() || len.count_ones() != 1);
    }

    #[test]
    fn truncated_draws_never_escape_their_interval(
        seed in any::<u64>(),
        mu in -5.0f64..5.0,
        sigma in 0.1f64..3.0,
        shape in 0usize..5,
    ) {
        let mut rng = RngStream::from_u64(seed);
        let itv = match shape {
            0 => Interval::unbounded(),
            1 => Interval::nonnegative(),
            2 => Interval::nonpositive(),
            3 => Interval::new(mu + 6.0 * sigma, f64::INFINITY).unwrap(),
            _ => Interval::new(mu - 0.5, mu + 0.5).unwrap(),
        };
        for _ in 0..64 {
            let x = trunc_normal_sample(&mut rng, mu, sigma, itv).unwrap();
            prop_assert!(x.is_finite() && itv.contains(x), "{x} escapes");
        }
    }

    #[test]
    fn reduction_keeps_required_attribute_order(
        profile in 0u32..256,
        mask in 1u32..256,
    ) {
        let reduced = reduce_profile(profile, mask);
        // Bit t of the reduced profile is the t-th required attribute.
        let mut t = 0usize;
        for k in 0..8 {
            if mask >> k & 1 == 1 {
                prop_assert_eq!(reduced >> t & 1, profile >> k & 1);
                t += 1;
            }
        }
        prop_assert_eq!(reduced >> t, 0, "no stray high bits");
    }

    #[test]
    fn draw_sequences_are_pure_functions_of_the_seed(seed in any::<u64>()) {
        let run = |seed: u64| -> (Vec<f64>, Vec<f64>, f64) {
            let mut rng = RngStream::from_u64(seed);
            let d = dirichlet_sample(&mut rng, &[1.0, 2.0, 0.5]).unwrap();
            let t: Vec<f64> = (0..4)
                .map(|_| {
                    trunc_normal_sample(&mut rng, 1.0, 2.0, Interval::nonnegative()).unwrap()
                })
                .collect();
            let b = beta_sample(&mut rng, 2.0, 3.0).unwrap();
            (d, t, b)
        };
        let a = run(seed);
        let b = run(seed);
        prop_assert!(a.0 == b.0 && a.1 == b.1 && a.2 == b.2);
        // Child streams differ from the parent and from each other.
        let root = RngStream::from_u64(seed);
        let mut c0 = root.split(0);
        let mut c1 = root.split(1);
        let x0: f64 = c0.random();
        let x1: f64 = c1.random();
        prop_assert!(x0 != x1);
    }
}
