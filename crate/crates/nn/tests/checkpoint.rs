use pcg_nn::checkpoint::{decode_checkpoint, encode_checkpoint};
use pcg_nn::gradcheck::random_tensor;
use pcg_nn::{load_checkpoint, save_checkpoint, xavier_init, Adam, ModelPreset, NnError, PresetConfig};

#[test]
fn round_trip_preserves_predictions_and_optimizer() {
    let spec = ModelPreset::Cnn1d.build([2, 96], 3, &PresetConfig::default()).unwrap();
    let mut model = xavier_init(&spec, 1).unwrap();
    let mut adam = Adam::new(1e-3);
    let x = random_tensor(&[4, 2, 96], 2);
    for _ in 0..3 {
        model.forward(&x, true).unwrap();
        model.backward_cross_entropy(&[0, 1, 2, 0]).unwrap();
        adam.step(model.params_mut());
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    save_checkpoint(&path, &model, Some(&adam)).unwrap();
    let (loaded, opt) = load_checkpoint(&path).unwrap();
    assert_eq!(loaded.predict(&x).unwrap(), model.predict(&x).unwrap());
    assert_eq!(opt.unwrap(), adam);
    assert_eq!(loaded.spec(), model.spec());
}

#[test]
fn corrupt_checkpoints_are_rejected() {
    let spec = ModelPreset::LstmRnn.build([3, 5], 2, &PresetConfig { lstm_hidden: 4, ..Default::default() }).unwrap();
    let model = xavier_init(&spec, 1).unwrap();
    let bytes = encode_checkpoint(&model, None);
    assert!(decode_checkpoint(&bytes).unwrap().1.is_none());
    assert!(matches!(decode_checkpoint(&bytes[..bytes.len() - 3]), Err(NnError::Checkpoint(_))));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(decode_checkpoint(&bad), Err(NnError::Checkpoint(_))));
}
