use pcg_nn::gradcheck::random_tensor;
use pcg_nn::{xavier_init, Adam, ModelPreset, PresetConfig, Tensor};

fn memorization_data() -> (Tensor, Vec<usize>) {
    let x = random_tensor(&[32, 4, 128], 77);
    let labels = (0..32).map(|i| i % 3).collect();
    (x, labels)
}

/// Train the CNN1D preset full-batch until the loss drops below `target`;
/// returns (steps taken, final loss).
fn memorize(seed: u64, target: f64, max_steps: usize) -> (usize, f64, Vec<f64>) {
    let (x, labels) = memorization_data();
    let spec = ModelPreset::Cnn1d.build([4, 128], 3, &PresetConfig::default()).unwrap();
    let mut model = xavier_init(&spec, seed).unwrap();
    let mut adam = Adam::new(1e-3);
    let mut losses = Vec::new();
    for step in 1..=max_steps {
        model.forward(&x, true).unwrap();
        let loss = model.backward_cross_entropy(&labels).unwrap();
        adam.step(model.params_mut());
        losses.push(loss);
        if loss < target {
            return (step, loss, losses);
        }
    }
    let last = *losses.last().unwrap();
    (max_steps, last, losses)
}

#[test]
fn cnn1d_memorizes_32_samples() {
    let (steps, loss, _) = memorize(5, 0.01, 500);
    assert!(loss < 0.01, "loss {loss} after {steps} steps");
}

#[test]
fn identical_runs_identical_trajectories() {
    let (_, _, a) = memorize(8, 0.0, 5);
    let (_, _, b) = memorize(8, 0.0, 5);
    assert_eq!(a, b);
}
