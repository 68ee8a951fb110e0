use std::path::PathBuf;

use fairrep_core::dataset::{encode, load_csv, EncodedDataset, Schema};
use fairrep_core::linalg::Matrix;
use fairrep_core::mixed_encoder::{embed, train_mixed, training_pairs, MixedEncoderConfig};
use fairrep_core::neuralnet::TrainOptions;

fn german() -> EncodedDataset {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let schema = Schema::load(&root.join("configs/german.schema")).unwrap();
    encode(&load_csv(&root.join("data/german.csv"), &schema).unwrap(), &schema).unwrap()
}

fn config(epochs: usize, seed: u64) -> MixedEncoderConfig {
    let train = TrainOptions { epochs, seed, ..TrainOptions::default() };
    MixedEncoderConfig::with_total_dim(3, 3, 100, train).unwrap()
}

#[test]
fn german_training_beats_trivial_predictors() {
    let data = german();
    let models = train_mixed(&data, &config(10, 0)).unwrap();
    let bce = *models.history_num_cat.train_loss.last().unwrap();
    let mse = *models.history_cat_num.train_loss.last().unwrap();
    // A constant 0.5 output costs ln 2; predicting the (zero) mean costs 1.
    assert!(bce < std::f64::consts::LN_2, "bce {bce}");
    assert!(mse < 1.0, "mse {mse}");
    assert!(bce < models.history_num_cat.train_loss[0]);
    assert!(models.history_cat_num.val_loss.iter().all(|v| v.is_finite()));

    let z = embed(&data, &models).unwrap();
    assert_eq!(z.z.shape(), (1000, 100));
    assert_eq!((z.latent_num, z.latent_cat), (50, 50));
    assert!(z.z.as_slice().iter().all(|v| *v >= 0.0 && v.is_finite()));
    let spread = (0..z.p()).filter(|&c| {
        let col = z.z.column(c);
        col.iter().any(|v| *v != col[0])
    });
    assert!(spread.count() >= 10, "latent is almost constant");
}

#[test]
fn sensitive_matrix_does_not_touch_the_networks() {
    let data = german();
    for (x, y) in training_pairs(&data) {
        assert!(std::ptr::eq(x, &data.x_num) || std::ptr::eq(x, &data.x_cat));
        assert!(std::ptr::eq(y, &data.x_num) || std::ptr::eq(y, &data.x_cat));
    }
    let mut altered = data.clone();
    altered.s = Matrix::from_fn(data.n(), 1, |r, _| f64::from(u8::from(r % 3 == 0)));
    let cfg = config(2, 5);
    let a = embed(&data, &train_mixed(&data, &cfg).unwrap()).unwrap();
    let b = embed(&altered, &train_mixed(&altered, &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn training_is_seed_deterministic() {
    let data = german();
    let a = train_mixed(&data, &config(2, 11)).unwrap();
    let b = train_mixed(&data, &config(2, 11)).unwrap();
    let c = train_mixed(&data, &config(2, 12)).unwrap();
    assert_eq!(a.num_cat, b.num_cat);
    assert_eq!(a.cat_num, b.cat_num);
    assert_eq!(a.history_num_cat, b.history_num_cat);
    assert_ne!(a.num_cat, c.num_cat);
    // The two networks draw from different seeds.
    assert_ne!(a.history_num_cat.train_loss, a.history_cat_num.train_loss);
}
