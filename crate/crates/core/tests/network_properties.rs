use gauss_core::network::{init_model, loss_and_gradients, mean_loss, AdamState};
use gauss_core::{Matrix, MlpConfig, MlpModel};
use proptest::prelude::*;

fn problem() -> impl Strategy<Value = (MlpConfig, Matrix, Vec<usize>)> {
    (
        1usize..6,
        prop::collection::vec(1usize..7, 1..3),
        2usize..5,
        1usize..9,
        any::<u64>(),
    )
        .prop_flat_map(|(input, hidden, classes, n, seed)| {
            (
                Just(MlpConfig::new(input, &hidden, classes, seed)),
                prop::collection::vec(-2.0f64..2.0, n * input)
                    .prop_map(move |data| Matrix::from_vec(n, input, data)),
                prop::collection::vec(0..classes, n),
            )
        })
}

fn perturbed(model: &MlpModel, layer: usize, slot: Option<(usize, usize)>, col: usize, delta: f64) -> MlpModel {
    let mut m = model.clone();
    let l = &mut m.layers_mut()[layer];
    match slot {
        Some((r, c)) => l.weights.set(r, c, l.weights.get(r, c) + delta),
        None => l.bias[col] += delta,
    }
    m
}

/// Smallest |pre-activation| of any hidden unit; central differences are
/// only meaningful away from the ReLU kink.
fn kink_distance(model: &MlpModel, rows: &Matrix) -> f64 {
    let mut input = rows.clone();
    let mut closest = f64::INFINITY;
    let hidden = model.layers().len() - 1;
    for layer in &model.layers()[..hidden] {
        let mut z = input.matmul(&layer.weights);
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                *v += b;
                closest = closest.min(v.abs());
                *v = v.max(0.0);
            }
        }
        input = z;
    }
    closest
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradients_match_central_differences((config, rows, labels) in problem()) {
        let model = init_model(&config).unwrap();
        prop_assume!(kink_distance(&model, &rows) > 1e-4);
        let (loss, grads) = loss_and_gradients(&model, &rows, &labels).unwrap();
        prop_assert!((loss - mean_loss(&model, &rows, &labels).unwrap()).abs() < 1e-12);
        let h = 1e-6;
        for (l, layer) in model.layers().iter().enumerate() {
            let mut slots: Vec<(Option<(usize, usize)>, usize)> = (0..layer.weights.rows())
                .flat_map(|r| (0..layer.weights.cols()).map(move |c| (Some((r, c)), 0)))
                .collect();
            slots.extend((0..layer.bias.len()).map(|c| (None, c)));
            for (slot, col) in slots {
                let up = mean_loss(&perturbed(&model, l, slot, col, h), &rows, &labels).unwrap();
                let down = mean_loss(&perturbed(&model, l, slot, col, -h), &rows, &labels).unwrap();
                let numeric = (up - down) / (2.0 * h);
                let analytic = match slot {
                    Some((r, c)) => grads[l].weights.get(r, c),
                    None => grads[l].bias[col],
                };
                let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-6);
                prop_assert!(rel < 1e-4, "layer {l} {slot:?}/{col}: {analytic} vs {numeric}");
            }
        }
    }

    #[test]
    fn small_steps_do_not_increase_loss((config, rows, labels) in problem()) {
        let mut model = init_model(&config).unwrap();
        let mut adam = AdamState::new(&model, 1e-5);
        let steps = 100;
        let mut increases = 0;
        let mut before = mean_loss(&model, &rows, &labels).unwrap();
        for _ in 0..steps {
            let (_, grads) = loss_and_gradients(&model, &rows, &labels).unwrap();
            adam.update(&mut model, &grads);
            let after = mean_loss(&model, &rows, &labels).unwrap();
            if after > before {
                increases += 1;
            }
            before = after;
        }
        prop_assert!(increases <= steps / 100, "{increases} of {steps} steps increased the loss");
    }
}
