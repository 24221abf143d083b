//! Statistical and structural properties of the round-trip engines.

use geotax_core::extraction::ExtractOptions;
use geotax_core::roundtrip::{
    demon_work, triangle_simulate, work_surcharge, CubicField, LegDistribution, PathSpec, StepEvaluation,
};
use geotax_core::{Execution, Family};
use proptest::prelude::*;

const SAMPLES: u64 = 1_000_000;

#[test]
fn symmetric_legs_have_no_cubic_drift() {
    let leg = LegDistribution::Gaussian { location: 0.0, scale: 0.01 };
    let r = triangle_simulate(&[leg; 3], SAMPLES, 101, Execution::Parallel).unwrap();
    let c = r.cubic_contribution;
    assert!(c.mean.abs() < 3.0 * c.std_error, "{c:?}");
}

#[test]
fn negative_skew_costs_on_average() {
    for shape in [-4.0, -1.5] {
        let leg = LegDistribution::centered_skew_normal(0.01, shape);
        let r = triangle_simulate(&[leg; 3], SAMPLES, 102, Execution::Parallel).unwrap();
        let c = r.cubic_contribution;
        assert!(c.mean < -3.0 * c.std_error, "shape {shape}: {c:?}");
        // The sample mean of the statistic and the analytic moments agree.
        assert!(c.z_score(leg.raw_third_moment()) < 4.0);
    }
}

#[test]
fn cubic_truncation_beats_quadratic() {
    for scale in [0.005, 0.01, 0.02, 0.05] {
        for leg in [
            LegDistribution::Gaussian { location: 0.0, scale },
            LegDistribution::centered_skew_normal(scale, -4.0),
            LegDistribution::ShiftedLognormal { location: 0.0, scale, shape: 0.5 },
        ] {
            let r = triangle_simulate(&[leg; 3], 200_000, 103, Execution::Parallel).unwrap();
            let (q, c) = (r.quadratic_remainder, r.cubic_remainder);
            assert!(
                c.mean.abs() <= q.mean.abs() + 3.0 * (q.std_error + c.std_error),
                "{leg}: cubic {c:?} quadratic {q:?}"
            );
            assert_eq!(r.identity_violations, 0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn triangle_report_is_schedule_independent(seed in any::<u64>(), shape in -5.0..5.0f64) {
        let legs = [
            LegDistribution::centered_skew_normal(0.02, shape),
            LegDistribution::Gaussian { location: 0.001, scale: 0.01 },
            LegDistribution::ShiftedLognormal { location: 0.0, scale: 0.01, shape: 0.3 },
        ];
        let a = triangle_simulate(&legs, 20_000, seed, Execution::Parallel).unwrap();
        let b = triangle_simulate(&legs, 20_000, seed, Execution::Sequential).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn surcharge_is_odd(theta in 0.3..4.0f64, step in 0.001..0.08f64) {
        let f = Family::exponential();
        let field = CubicField::Extracted { divergence: &f, options: ExtractOptions::cubic().with_step(0.05 * theta.min(1.0)) };
        let up = work_surcharge(&field, &[theta], &[step]).unwrap();
        let down = work_surcharge(&field, &[theta], &[-step]).unwrap();
        prop_assert_eq!(up, -down);
        prop_assert!(up < 0.0);
    }

    #[test]
    fn reversed_paths_cancel_to_leading_order(
        start in 0.5..3.0f64,
        steps in prop::collection::vec(-0.08..0.08f64, 1..8),
    ) {
        let f = Family::exponential();
        let mut pts = vec![vec![start]];
        for s in &steps {
            let last = pts.last().unwrap()[0];
            pts.push(vec![(last + s).max(0.3)]);
        }
        let path = PathSpec::new(&f, pts).unwrap();
        let r = demon_work(&CubicField::Oracle(&f), &path, StepEvaluation::Start).unwrap();
        prop_assert!(r.within_bound, "{} > {}", r.round_trip.abs(), r.cancellation_bound);
    }
}
