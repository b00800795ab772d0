use proptest::prelude::*;
use rffnet::network::{argmax_rows, ArchSpec, LossKind, Network};
use rffnet::numerics::{gaussian_matrix, DenseMatrix, Rng};

fn rel_err(a: f64, n: f64) -> f64 {
    let d = (a - n).abs();
    if d <= 1e-8 {
        0.0
    } else {
        d / a.abs().max(n.abs())
    }
}

fn objective(net: &Network, x: &DenseMatrix, y: &[usize], lambda: f64) -> f64 {
    let trace = net.forward_full(x, true).unwrap();
    net.compute_loss(&trace.logits, y, lambda).unwrap().0.total
}

/// Largest relative error between the analytic gradient and central
/// differences over every parameter of `net`.
fn worst_gradient_error(net: &Network, x: &DenseMatrix, y: &[usize], lambda: f64) -> f64 {
    let h = 1e-6;
    let trace = net.forward_full(x, true).unwrap();
    let (_, g_logits) = net.compute_loss(&trace.logits, y, lambda).unwrap();
    let grads = net.backward_full(&trace, &g_logits, lambda).unwrap();
    let analytic: Vec<Vec<f64>> = grads.blocks().iter().map(|b| b.to_vec()).collect();

    let mut worst = 0.0f64;
    for (b, block) in analytic.iter().enumerate() {
        for (i, &a) in block.iter().enumerate() {
            let mut plus = net.clone();
            plus.params_mut()[b][i] += h;
            let mut minus = net.clone();
            minus.params_mut()[b][i] -= h;
            let num =
                (objective(&plus, x, y, lambda) - objective(&minus, x, y, lambda)) / (2.0 * h);
            worst = worst.max(rel_err(a, num));
        }
    }
    worst
}

#[test]
fn full_network_matches_finite_differences() {
    let losses = [
        LossKind::Squared,
        LossKind::SquaredHinge,
        LossKind::CrossEntropy,
    ];
    let mut checked = 0;
    for case in 0..24u64 {
        let mut rng = Rng::new(1000 + case);
        let d_in = 1 + rng.below(4);
        let classes = 2 + rng.below(3);
        let layers = 1 + rng.below(3);
        let features: Vec<usize> = (0..layers).map(|_| 2 + rng.below(4)).collect();
        let loss = losses[case as usize % 3];
        let bn = case % 2 == 1;
        let lambda = if case % 4 < 2 { 0.0 } else { 1e-2 };
        let mut spec = ArchSpec::new(d_in, classes, features, loss).with_batchnorm(bn);
        spec.init_stddev = 0.7;
        let mut net = Network::build(&spec, &mut rng).unwrap();
        if bn {
            for layer in net.layers_mut() {
                let bn = layer.batchnorm_mut().unwrap();
                for (g, b) in bn.gamma.iter_mut().zip(bn.beta.iter_mut()) {
                    *g = 1.0 + 0.3 * rng.standard_normal();
                    *b = 0.2 * rng.standard_normal();
                }
            }
        }
        let batch = 5;
        let x = gaussian_matrix(batch, d_in, 0.0, 1.0, &mut rng).unwrap();
        let y: Vec<usize> = (0..batch).map(|_| rng.below(classes)).collect();
        let worst = worst_gradient_error(&net, &x, &y, lambda);
        assert!(
            worst < 1e-5,
            "case {case} ({loss}, bn={bn}, layers={layers}): relative error {worst:e}"
        );
        checked += 1;
    }
    assert!(checked >= 20);
}

#[test]
fn logits_are_finite_for_random_nets() {
    for seed in 0..1000u64 {
        let mut rng = Rng::new(seed);
        let spec = ArchSpec::new(3, 2 + rng.below(3), vec![4, 3], LossKind::CrossEntropy)
            .with_batchnorm(seed % 2 == 0);
        let net = Network::build(&spec, &mut rng).unwrap();
        let x = gaussian_matrix(3, 3, 0.0, 10.0, &mut rng).unwrap();
        assert!(net.logits(&x).unwrap().is_finite(), "seed {seed}");
    }
}

#[test]
fn untrained_net_is_at_chance_on_random_labels() {
    let mut rng = Rng::new(77);
    let net = Network::build(
        &ArchSpec::new(4, 2, vec![16], LossKind::SquaredHinge),
        &mut rng,
    )
    .unwrap();
    let n = 20_000;
    let x = gaussian_matrix(n, 4, 0.0, 1.0, &mut rng).unwrap();
    let y: Vec<usize> = (0..n).map(|_| rng.below(2)).collect();
    let pred = net.predict(&x).unwrap();
    let acc = pred.iter().zip(&y).filter(|(p, t)| p == t).count() as f64 / n as f64;
    assert!((acc - 0.5).abs() < 0.05, "{acc}");
}

#[test]
fn full_batch_objective_decreases_on_separable_toy() {
    let mut decreasing = 0;
    let seeds = 40;
    for seed in 0..seeds {
        let mut rng = Rng::new(500 + seed);
        let n = 100;
        let x = DenseMatrix::from_fn(n, 2, |i, _| {
            rng.normal(if i % 2 == 0 { -1.5 } else { 1.5 }, 0.5)
        });
        let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let mut net = Network::build(
            &ArchSpec::new(2, 2, vec![8], LossKind::SquaredHinge),
            &mut rng,
        )
        .unwrap();
        let mut state = rffnet::optimizer::AdamState::new(
            &net.params().iter().map(|b| b.len()).collect::<Vec<_>>(),
            1e-3,
            Default::default(),
        )
        .unwrap();
        let start = objective(&net, &x, &y, 1e-4);
        for _ in 0..10 {
            let trace = net.forward_full(&x, true).unwrap();
            let (_, g) = net.compute_loss(&trace.logits, &y, 1e-4).unwrap();
            let grads = net.backward_full(&trace, &g, 1e-4).unwrap();
            let gb = grads.blocks();
            rffnet::optimizer::adam_step(&mut net.params_mut(), &gb, &mut state).unwrap();
        }
        if objective(&net, &x, &y, 1e-4) < start {
            decreasing += 1;
        }
    }
    assert!(
        decreasing as f64 >= 0.95 * seeds as f64,
        "{decreasing}/{seeds}"
    );
}

proptest! {
    #[test]
    fn argmax_ignores_per_row_shift(
        rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..8),
        shift in -100.0f64..100.0,
    ) {
        let m = DenseMatrix::from_rows(&rows).unwrap();
        let shifted = m.map(|v| v + shift);
        // Shifting can merge nearly equal entries through rounding; only
        // compare rows whose top two logits are clearly apart.
        for (i, (a, b)) in argmax_rows(&m).into_iter().zip(argmax_rows(&shifted)).enumerate() {
            let mut r = rows[i].clone();
            r.sort_by(|p, q| q.total_cmp(p));
            if r[0] - r[1] > 1e-9 {
                prop_assert_eq!(a, b);
            }
        }
    }
}
