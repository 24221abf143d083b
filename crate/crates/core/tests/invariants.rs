//! Property tests for the divergence, quantum and extraction invariants.

use geotax_core::divergence::{natural_chart, score_moment_tensor};
use geotax_core::extraction::{
    compare_cubic_with_oracle, extract_cubic, extract_metric, family_asymmetry_probe, ExtractOptions,
    BREGMAN_ASYMMETRY_RATIO,
};
use geotax_core::quantum::{
    bargmann_phase, quantum_relative_entropy, veronese_embed, DensityMatrix, PureState,
};
use geotax_core::{Direction, Divergence, Family};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn families() -> Vec<Family> {
    vec![
        Family::gaussian_fixed(1.3),
        Family::exponential(),
        Family::bernoulli(),
        Family::categorical(3),
        Family::gaussian(),
    ]
}

fn random_point<R: Rng>(f: &Family, rng: &mut R) -> Vec<f64> {
    match f.to_string().as_str() {
        s if s.starts_with("gaussian-fixed") => vec![rng.random_range(-5.0..5.0)],
        "exponential" => vec![rng.random_range(0.2..5.0)],
        "bernoulli" => vec![rng.random_range(0.02..0.98)],
        "gaussian" => vec![rng.random_range(-3.0..3.0), rng.random_range(0.3..3.0)],
        s if s.starts_with("categorical") => {
            let u: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..1.0)).collect();
            let t: f64 = u.iter().sum();
            vec![u[0] / t, u[1] / t]
        }
        other => panic!("no sampler for {other}"),
    }
}

#[test]
fn divergence_is_nonnegative_and_vanishes_only_on_the_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for f in families() {
        for _ in 0..10_000 {
            let p = random_point(&f, &mut rng);
            let q = random_point(&f, &mut rng);
            let d = f.divergence(&p, &q).unwrap();
            assert!(d >= 0.0, "{f}: D({p:?}‖{q:?}) = {d}");
            if p != q {
                assert!(d > 0.0, "{f}: distinct points with D = 0");
            }
            assert_eq!(f.divergence(&p, &p).unwrap(), 0.0);
        }
    }
}

#[test]
fn fixed_sigma_gaussian_is_exactly_symmetric() {
    let f = Family::gaussian_fixed(0.7);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10_000 {
        let p = random_point(&f, &mut rng);
        let q = random_point(&f, &mut rng);
        assert_eq!(f.divergence(&p, &q).unwrap(), f.divergence(&q, &p).unwrap());
    }
}

/// The Bregman form subtracts terms of size |ψ|, so it cannot resolve D
/// better than a few ulps of those terms. The comparison allows 1e-12
/// relative plus that cancellation floor.
#[test]
fn kl_matches_bregman_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for f in families() {
        let nat = natural_chart(&f).unwrap();
        let mut worst = 0.0_f64;
        for _ in 0..2_000 {
            let p = random_point(&f, &mut rng);
            let q = random_point(&f, &mut rng);
            let d = f.divergence(&p, &q).unwrap();
            let b = nat.bregman(&p, &q);
            let (ep, eq) = (nat.to_natural(&p), nat.to_natural(&q));
            let lin: f64 = eq
                .iter()
                .zip(&ep)
                .zip(nat.log_partition_grad(&ep))
                .map(|((a, b), g)| ((a - b) * g).abs())
                .sum();
            let terms = nat.log_partition(&eq).abs() + nat.log_partition(&ep).abs() + lin;
            let excess = (d - b).abs() / (1e-12 * d + 8.0 * f64::EPSILON * terms);
            worst = worst.max(excess);
        }
        assert!(worst <= 1.0, "{f}: gap is {worst:.2} times the allowance");
    }
}

fn qubit() -> impl Strategy<Value = PureState> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-zero", |(a, b, c, d)| a * a + b * b + c * c + d * d > 1e-3)
        .prop_map(|(a, b, c, d)| {
            PureState::new(vec![Complex64::new(a, b), Complex64::new(c, d)]).unwrap()
        })
}

fn probabilities(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, k).prop_map(|u| {
        let t: f64 = u.iter().sum();
        u.into_iter().map(|x| x / t).collect()
    })
}

fn categorical_kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| a * (a / b).ln()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn veronese_squares_overlaps(p in qubit(), q in qubit()) {
        let lhs = veronese_embed(&p).unwrap().inner(&veronese_embed(&q).unwrap()).unwrap().norm();
        let rhs = p.inner(&q).unwrap().norm_sqr();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn veronese_is_injective_on_rays(p in qubit(), q in qubit(), lambda in 0.0..6.3f64) {
        let vp = veronese_embed(&p).unwrap();
        prop_assert!(vp == veronese_embed(&p.rephased(lambda)).unwrap());
        if !p.same_ray(&q, 1e-6) {
            prop_assert!(vp != veronese_embed(&q).unwrap());
        }
    }

    #[test]
    fn bargmann_phase_ignores_rephasing(
        states in prop::collection::vec(qubit(), 3..7),
        phases in prop::collection::vec(0.0..6.3f64, 7),
    ) {
        let links_ok = (0..states.len()).all(|k| {
            states[k].inner(&states[(k + 1) % states.len()]).unwrap().norm() > 1e-3
        });
        prop_assume!(links_ok);
        let base = bargmann_phase(&states).unwrap();
        // Keep clear of the branch cut at ±π.
        prop_assume!(std::f64::consts::PI - base.abs() > 1e-9);
        let moved: Vec<PureState> = states.iter().zip(&phases).map(|(s, l)| s.rephased(*l)).collect();
        prop_assert!((bargmann_phase(&moved).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn commuting_qre_is_smoothed_categorical_kl(
        p in probabilities(3), q in probabilities(3), eps in 1e-6..0.5f64,
    ) {
        let rho = DensityMatrix::from_diagonal(&p).unwrap();
        let sigma = DensityMatrix::from_diagonal(&q).unwrap();
        let smooth = |v: &[f64]| v.iter().map(|x| (1.0 - eps) * x + eps / 3.0).collect::<Vec<_>>();
        let want = categorical_kl(&smooth(&p), &smooth(&q));
        let got = quantum_relative_entropy(&rho, &sigma, eps).unwrap();
        prop_assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn score_moment_tensor_is_permutation_symmetric(p in probabilities(4)) {
        let f = Family::categorical(4);
        let t = score_moment_tensor(&f, &f.point(p[..3].to_vec()).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let v = t.get(i, j, k);
                    for w in [t.get(i, k, j), t.get(j, i, k), t.get(j, k, i), t.get(k, i, j), t.get(k, j, i)] {
                        prop_assert_eq!(v, w);
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn extracted_tensors_are_symmetric_and_psd(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for f in [Family::categorical(3), Family::gaussian()] {
            let p = random_point(&f, &mut rng);
            let scale = f.local_scale(&p);
            let opts = ExtractOptions::metric();
            let g = match extract_metric(&f, &p, opts.with_step(opts.h * scale)) {
                Ok(g) => g,
                Err(_) => continue,
            };
            prop_assert!(g.symmetry_residual < 1e-6, "{}", g.symmetry_residual);
            prop_assert!(g.is_psd(1e-8), "{:?} at {p:?}", g.eigenvalues());
            let opts = ExtractOptions::cubic();
            if let Ok(t) = extract_cubic(&f, &p, opts.with_step(opts.h * scale)) {
                prop_assert!(t.symmetry_residual < 1e-4, "{}", t.symmetry_residual);
            }
        }
    }

    #[test]
    fn extraction_agrees_with_oracle_at_random_points(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let opts = ExtractOptions::cubic().with_richardson(true);
        for f in [Family::exponential(), Family::bernoulli(), Family::categorical(3)] {
            let p = f.point(random_point(&f, &mut rng)).unwrap();
            let cmp = compare_cubic_with_oracle(&f, &p, opts).unwrap();
            prop_assert!(cmp.relative_error < 1e-3, "{f} at {:?}: {}", p.coords, cmp.relative_error);
        }
    }

    #[test]
    fn default_and_natural_chart_extractions_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let opts = ExtractOptions::cubic().with_richardson(true);
        for f in [Family::exponential(), Family::bernoulli(), Family::gaussian()] {
            let y = random_point(&f, &mut rng);
            let nat = natural_chart(&f).unwrap();
            let eta = nat.to_natural(&y);
            let (sy, se) = (f.local_scale(&y), nat.local_scale(&eta));
            let metric = ExtractOptions::metric().with_richardson(true);
            let (direct, a_nat, g_nat) = match (
                extract_cubic(&f, &y, opts.with_step(opts.h * sy)),
                extract_cubic(&nat, &eta, opts.with_step(opts.h * se)),
                extract_metric(&nat, &eta, metric.with_step(metric.h * se)),
            ) {
                (Ok(a), Ok(b), Ok(c)) => (a, b, c),
                _ => continue,
            };
            let moved = nat.pull_expansion_cubic(&a_nat, &g_nat, &y);
            let scale = direct.max_abs();
            let err = direct
                .components
                .iter()
                .zip(&moved.components)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs() / scale));
            prop_assert!(err < 1e-3, "{f} at {y:?}: {err}");
        }
    }

    #[test]
    fn asymmetry_ratio_is_the_bregman_constant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let steps = [0.04, 0.02, 0.01, 0.005];
        let opts = ExtractOptions::cubic().with_richardson(true);
        for f in [Family::exponential(), Family::bernoulli(), Family::categorical(3), Family::gaussian()] {
            let p = f.point(random_point(&f, &mut rng)).unwrap();
            let v: Vec<f64> = (0..f.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let scale = f.local_scale(&p.coords);
            let ladder: Vec<f64> = steps.iter().map(|h| h * scale).collect();
            let probe = match family_asymmetry_probe(&f, &p, &Direction::new(v).unwrap(), &ladder, opts) {
                Ok(pr) => pr,
                Err(_) => continue,
            };
            // Directions nearly orthogonal to the cubic carry no usable ratio.
            if probe.reference_contraction.abs() < 1e-3 {
                continue;
            }
            let dev = probe.ratio_deviation(BREGMAN_ASYMMETRY_RATIO).unwrap();
            prop_assert!(dev < 0.05, "{f} at {:?}: ratio {:?}", p.coords, probe.ratio);
        }
    }
}
