use pcg_nn::gradcheck::random_tensor;
use pcg_nn::layers::Conv1d;
use pcg_nn::{Layer, Rng};
use proptest::prelude::*;
use rand::SeedableRng;

fn naive(x: &[f64], w: &[f64], b: &[f64], dims: (usize, usize, usize, usize, usize, usize, usize)) -> Vec<f64> {
    let (batch, cin, len, cout, k, stride, pad) = dims;
    let lo = (len + 2 * pad - k) / stride + 1;
    let mut y = vec![0.0; batch * cout * lo];
    for n in 0..batch {
        for o in 0..cout {
            for t in 0..lo {
                let mut acc = b[o];
                for c in 0..cin {
                    for kk in 0..k {
                        let pos = (t * stride + kk) as isize - pad as isize;
                        if pos >= 0 && (pos as usize) < len {
                            acc += w[(o * cin + c) * k + kk] * x[(n * cin + c) * len + pos as usize];
                        }
                    }
                }
                y[(n * cout + o) * lo + t] = acc;
            }
        }
    }
    y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn matches_direct_convolution(
        batch in 1usize..3,
        cin in 1usize..4,
        cout in 1usize..4,
        k in 1usize..7,
        stride in 1usize..4,
        pad in 0usize..5,
        extra in 0usize..20,
        seed in any::<u64>(),
    ) {
        let len = (k + extra).saturating_sub(2 * pad).max(1);
        prop_assume!(len + 2 * pad >= k);
        let mut conv = Conv1d::new(cin, cout, k, stride, pad, &mut Rng::seed_from_u64(seed));
        conv.bias.data.iter_mut().enumerate().for_each(|(i, b)| *b = 0.1 * i as f64 - 0.05);
        let x = random_tensor(&[batch, cin, len], seed ^ 1);
        let layer = Layer::Conv1d(conv.clone());
        let y = layer.infer(&x).unwrap();
        let expected_len = (len + 2 * pad - k) / stride + 1;
        prop_assert_eq!(&y.shape, &vec![batch, cout, expected_len]);
        let oracle = naive(&x.data, &conv.weight.data, &conv.bias.data, (batch, cin, len, cout, k, stride, pad));
        for (a, b) in y.data.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
