use proptest::prelude::*;

use svyalign::alignment::{align, gamma_hat, CalibrationSpec};
use svyalign::design::{SampleDraw, TwoStageDesign};
use svyalign::pooling::{combine, pool, CombineMode, WeightMode};
use svyalign::variance::{deville_variance_block, deville_variance_naive};
use svyalign::{IndicatorKind, PersonRecord, PopulationFrame};

/// A population of `sizes.len()` households with the given incomes, and the
/// sample made of its first `n` households.
fn frame_and_sample(sizes: &[usize], incomes: &[f64], n: usize) -> (PopulationFrame, SampleDraw) {
    let mut records = Vec::new();
    let mut k = 0;
    for (h, &s) in sizes.iter().enumerate() {
        for _ in 0..s {
            let y = incomes[k % incomes.len()];
            records.push(PersonRecord {
                person_id: k.to_string(),
                household_id: h.to_string(),
                eq_income: y,
                aux: 0.5 * y + 100.0 * ((k * 7919) % 13) as f64,
            });
            k += 1;
        }
    }
    let frame = PopulationFrame::from_records(records).unwrap();
    let design = TwoStageDesign::for_frame(&frame, n).unwrap();
    let households: Vec<usize> = (0..n).collect();
    let sample = SampleDraw::from_households(&frame, &design, &households);
    (frame, sample)
}

fn sample_strategy() -> impl Strategy<Value = (Vec<usize>, Vec<f64>, usize)> {
    (3usize..12).prop_flat_map(|h| {
        (
            prop::collection::vec(1usize..5, h),
            prop::collection::vec(-50.0f64..50.0, 1..40),
            2..=h,
        )
    })
}

fn income_strategy() -> impl Strategy<Value = (Vec<usize>, Vec<f64>, usize)> {
    (12usize..30).prop_flat_map(|h| {
        (
            prop::collection::vec(1usize..4, h),
            prop::collection::vec(1_000.0f64..60_000.0, 20..60),
            8..=h - 2,
        )
    })
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-9 * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn block_variance_equals_the_double_sum((sizes, z, n) in sample_strategy()) {
        let (_, sample) = frame_and_sample(&sizes, &[1.0], n);
        let z: Vec<f64> = (0..sample.len()).map(|k| z[k % z.len()]).collect();
        let block = deville_variance_block(&z, &sample).unwrap();
        let naive = deville_variance_naive(&z, &sample).unwrap();
        prop_assert!(close(block.value, naive.value, naive.scale), "{} vs {}", block.value, naive.value);
        prop_assert!(block.value >= -1e-9 * naive.scale.max(1.0));
    }

    #[test]
    fn variance_scales_quadratically((sizes, z, n) in sample_strategy(), c in -20.0f64..20.0) {
        let (_, sample) = frame_and_sample(&sizes, &[1.0], n);
        let z: Vec<f64> = (0..sample.len()).map(|k| z[k % z.len()]).collect();
        let cz: Vec<f64> = z.iter().map(|v| c * v).collect();
        let v = deville_variance_block(&z, &sample).unwrap();
        let vc = deville_variance_block(&cz, &sample).unwrap();
        prop_assert!(close(vc.value, c * c * v.value, c * c * v.scale));
    }

    #[test]
    fn optimal_combination_never_loses_to_simple(
        t1 in -100.0f64..100.0, v1 in 0.0f64..50.0, t2 in -100.0f64..100.0, v2 in 0.0f64..50.0,
    ) {
        let opt = combine(t1, v1, t2, v2, CombineMode::Optimal).unwrap();
        let simple = combine(t1, v1, t2, v2, CombineMode::Simple).unwrap();
        prop_assert!(opt.combined_var <= simple.combined_var * (1.0 + 1e-12) + 1e-300);
        prop_assert!(opt.combined_var <= v1.min(v2) * (1.0 + 1e-12) + 1e-300);
        prop_assert!((0.0..=1.0).contains(&opt.delta));
        prop_assert!(opt.combined >= t1.min(t2) - 1e-9 && opt.combined <= t1.max(t2) + 1e-9);
    }

    #[test]
    fn combination_is_swap_equivariant(
        t1 in -100.0f64..100.0, v1 in 0.0f64..50.0, t2 in -100.0f64..100.0, v2 in 0.0f64..50.0,
    ) {
        for mode in CombineMode::ALL {
            let a = combine(t1, v1, t2, v2, mode).unwrap();
            let b = combine(t2, v2, t1, v1, mode).unwrap();
            prop_assert!((a.delta + b.delta - 1.0).abs() < 1e-12);
            prop_assert!((a.combined - b.combined).abs() <= 1e-12 * (t1.abs() + t2.abs() + 1.0));
            prop_assert!((a.combined_var - b.combined_var).abs() <= 1e-12 * (v1 + v2 + 1.0));
        }
    }

    #[test]
    fn gamma_is_a_proportion((sizes, y, n) in income_strategy(), d1 in 0.5f64..2.0, d2 in 0.5f64..2.0) {
        let (frame, s1) = frame_and_sample(&sizes, &y, n);
        let design = TwoStageDesign::for_frame(&frame, 2).unwrap();
        let tail: Vec<usize> = (sizes.len() - 2..sizes.len()).collect();
        let s2 = SampleDraw::from_households(&frame, &design, &tail);
        let spec = |s: &SampleDraw, d: f64| {
            CalibrationSpec::intercept_only(s.len(), frame.len() as f64).unwrap().with_design_effect(d).unwrap()
        };
        let (c1, c2) = (spec(&s1, d1), spec(&s2, d2));
        let g = gamma_hat(&c1, &s1.weights, &s1.income, &c2, &s2.weights, &s2.income);
        let g = g.unwrap();
        prop_assert!((0.0..=1.0).contains(&g), "gamma {g}");
    }

    #[test]
    fn alignment_meets_every_constraint((sizes, y, n) in income_strategy()) {
        let (frame, s1) = frame_and_sample(&sizes, &y, n);
        let design = TwoStageDesign::for_frame(&frame, sizes.len() - n).unwrap();
        let rest: Vec<usize> = (n..sizes.len()).collect();
        let s2 = SampleDraw::from_households(&frame, &design, &rest);
        let spec = |s: &SampleDraw| CalibrationSpec::intercept_and(&s.aux, frame.len() as f64, frame.aux_total());
        let (c1, c2) = (spec(&s1).unwrap(), spec(&s2).unwrap());
        let z1: Vec<f64> = s1.income.iter().map(|v| v / 1000.0).collect();
        let z2: Vec<f64> = s2.income.iter().map(|v| v / 1000.0).collect();
        let r = align(&c1, &s1.weights, &z1, &c2, &s2.weights, &z2).unwrap();
        prop_assert!(r.constraint_residuals.calibration < 1e-9);
        prop_assert!(r.constraint_residuals.alignment < 1e-9);
        prop_assert!((0.0..=1.0).contains(&r.gamma));
        let t1: f64 = z1.iter().zip(&r.a1).map(|(z, a)| z * a).sum();
        prop_assert!((t1 - r.aligned_total).abs() <= 1e-9 * t1.abs().max(1.0));
    }

    #[test]
    fn duplicated_samples_pool_to_themselves((sizes, y, n) in income_strategy()) {
        let (frame, s) = frame_and_sample(&sizes, &y, n);
        let spec = CalibrationSpec::intercept_and(&s.aux, frame.len() as f64, frame.aux_total());
        let spec = spec.unwrap();
        for kind in [IndicatorKind::Median, IndicatorKind::Gini] {
            for wm in [WeightMode::Sampling, WeightMode::OwnAlignment] {
                for cm in CombineMode::ALL {
                    let p = pool([&s, &s], [&spec, &spec], kind, wm, cm).unwrap();
                    let tol = 1e-9 * p.theta1.abs().max(1.0);
                    prop_assert!((p.theta1 - p.theta2).abs() <= tol);
                    prop_assert!((p.combined - p.theta1).abs() <= tol);
                }
            }
        }
    }
}
