//! One SGD step equals `−α ∇½(y − g)²` group by group, checked against
//! central differences on random small networks.

use meanfield_core::finite_net::{
    forward_three_layer, forward_two_layer, scaled_rates_for_depth, sgd_step_three_layer, sgd_step_two_layer, GroupRates,
    LearningRateSchedule, ThreeLayerParams, TwoLayerParams,
};
use meanfield_core::Activation;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FD_STEP: f64 = 1e-5;
const REL_TOL: f64 = 1e-5;
const ABS_FLOOR: f64 = 1e-11;

fn fill<'a>(rng: &mut ChaCha8Rng, groups: impl Iterator<Item = &'a mut f64>) {
    for v in groups {
        *v = rng.random_range(-1.5..1.5);
    }
}

fn act(tanh: bool) -> Activation {
    if tanh {
        Activation::tanh()
    } else {
        Activation::sigmoid()
    }
}

fn check<P: Clone>(
    p: &P,
    groups: &[(f64, fn(&mut P) -> &mut Vec<f64>)],
    loss: impl Fn(&P) -> f64,
    step: impl Fn(&mut P),
) -> Result<(), TestCaseError> {
    let mut stepped = p.clone();
    step(&mut stepped);
    for (alpha, field) in groups {
        let n = field(&mut p.clone()).len();
        for k in 0..n {
            let mut plus = p.clone();
            field(&mut plus)[k] += FD_STEP;
            let mut minus = p.clone();
            field(&mut minus)[k] -= FD_STEP;
            let expected = -alpha * (loss(&plus) - loss(&minus)) / (2.0 * FD_STEP);
            let update = field(&mut stepped.clone())[k] - field(&mut p.clone())[k];
            let allowance = REL_TOL * update.abs().max(expected.abs()) + ABS_FLOOR;
            prop_assert!((update - expected).abs() <= allowance, "coordinate {k}: {update:e} vs {expected:e}");
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn two_layer_step_is_scaled_negative_gradient(
        n1 in 1usize..=4, n2 in 1usize..=4, d in 1usize..=3, seed: u64, tanh: bool,
        y in -1.0f64..1.0, ac in 0.1f64..2.0, a1 in 0.1f64..2.0, a2 in 0.1f64..2.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = TwoLayerParams::zeros(n1, n2, d);
        fill(&mut rng, p.c.iter_mut().chain(&mut p.w1).chain(&mut p.w2));
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let act = act(tanh);
        let rates = GroupRates { c: ac, w1: a1, w2: a2, w3: 0.0 };
        let groups: [(f64, fn(&mut TwoLayerParams) -> &mut Vec<f64>); 3] =
            [(ac, |p| &mut p.c), (a1, |p| &mut p.w1), (a2, |p| &mut p.w2)];
        check(
            &p,
            &groups,
            |q| 0.5 * (y - forward_two_layer(q, &act, &x).unwrap().g).powi(2),
            |q| { sgd_step_two_layer(q, &act, &x, y, &rates).unwrap(); },
        )?;
    }

    #[test]
    fn three_layer_step_is_scaled_negative_gradient(
        n1 in 1usize..=4, n2 in 1usize..=4, n3 in 1usize..=4, d in 1usize..=3, seed: u64, tanh: bool,
        y in -1.0f64..1.0, ac in 0.1f64..2.0, a1 in 0.1f64..2.0, a2 in 0.1f64..2.0, a3 in 0.1f64..2.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ThreeLayerParams::zeros(n1, n2, n3, d);
        fill(&mut rng, p.c.iter_mut().chain(&mut p.w1).chain(&mut p.w2).chain(&mut p.w3));
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let act = act(tanh);
        let rates = GroupRates { c: ac, w1: a1, w2: a2, w3: a3 };
        let groups: [(f64, fn(&mut ThreeLayerParams) -> &mut Vec<f64>); 4] =
            [(ac, |p| &mut p.c), (a1, |p| &mut p.w1), (a2, |p| &mut p.w2), (a3, |p| &mut p.w3)];
        check(
            &p,
            &groups,
            |q| 0.5 * (y - forward_three_layer(q, &act, &x).unwrap().g).powi(2),
            |q| { sgd_step_three_layer(q, &act, &x, y, &rates).unwrap(); },
        )?;
    }

    #[test]
    fn scaled_rates_match_width_formula(n1 in 1usize..4096, n2 in 1usize..4096, n3 in 1usize..4096) {
        let (f1, f2, f3) = (n1 as f64, n2 as f64, n3 as f64);
        let r2 = LearningRateSchedule::scaled(2).learning_rates(&[n1, n2]).unwrap();
        prop_assert_eq!((r2.c, r2.w1, r2.w2), (f2 / f1, 1.0, f2));
        let r3 = LearningRateSchedule::scaled(3).learning_rates(&[n1, n2, n3]).unwrap();
        prop_assert_eq!((r3.c, r3.w1, r3.w2, r3.w3), (f3 / f1, 1.0, f2, f2 * f3 / f1));
        prop_assert_eq!(scaled_rates_for_depth(&[n1, n2, n3]), vec![f3 / f1, 1.0, f2, f2 * f3 / f1]);
    }
}
