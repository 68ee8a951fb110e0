use std::io::BufReader;
use std::path::PathBuf;

use fairrep_core::dataset::{
    discretize_german_age, encode, load_csv, load_encoded, read_csv, save_encoded, stratified_split, DatasetError,
    EncodedDataset, LevelMap, Schema, SplitIndices,
};
use proptest::prelude::*;

fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn load(name: &str) -> (EncodedDataset, fairrep_core::dataset::RawTable, Schema) {
    let schema = Schema::load(&repo_path(&format!("configs/{name}.schema"))).unwrap();
    let raw = load_csv(&repo_path(&format!("data/{name}.csv")), &schema).unwrap();
    (encode(&raw, &schema).unwrap(), raw, schema)
}

/// Header-indexed cells of a quote-free CSV, read without the csv crate.
fn naive_column(name: &str, column: &str) -> Vec<String> {
    let text = std::fs::read_to_string(repo_path(&format!("data/{name}.csv"))).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == column).unwrap();
    lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::trim).collect::<Vec<_>>())
        .filter(|cells| cells.iter().all(|c| !c.is_empty()))
        .map(|cells| cells[idx].to_string())
        .collect()
}

fn assert_standardized(d: &EncodedDataset) {
    let n = d.n() as f64;
    for j in 0..d.d1() {
        let col = d.x_num.column(j);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-12, "column {j} mean {mean}");
        assert!((var - 1.0).abs() < 1e-12, "column {j} variance {var}");
    }
}

fn assert_one_hot(d: &EncodedDataset) {
    let blocks = d.categorical_blocks();
    assert_eq!(blocks.iter().map(|b| b.2).sum::<usize>(), d.d2());
    for r in 0..d.n() {
        let row = d.x_cat.row(r);
        assert!(row.iter().all(|v| *v == 0.0 || *v == 1.0));
        for (_, start, width) in &blocks {
            assert_eq!(row[*start..start + width].iter().sum::<f64>(), 1.0, "row {r}");
        }
    }
}

#[test]
fn german_credit_shape_and_age_indicator() {
    let (d, _, _) = load("german");
    assert_eq!(d.n(), 1000);
    assert_eq!(d.d1(), 6);
    assert_eq!(d.sensitive_names(), ["age"]);
    let ages = naive_column("german", "age");
    for (i, a) in ages.iter().enumerate() {
        let a: f64 = a.parse().unwrap();
        assert_eq!(d.s[(i, 0)], f64::from(u8::from((25.0..=60.0).contains(&a))));
    }
    let good = naive_column("german", "class").iter().filter(|c| *c == "good").count();
    assert_eq!(d.y.iter().filter(|&&v| v == 1).count(), good);
    assert_standardized(&d);
    assert_one_hot(&d);
}

#[test]
fn adult_shape_and_sensitive_indicators() {
    let (d, raw, _) = load("adult");
    assert_eq!(d.n(), 45_222);
    assert_eq!((d.d1(), d.d2()), (6, 91));
    assert_eq!(d.sensitive_names(), ["sex", "race"]);
    assert_eq!(raw.dropped, 48_842 - 45_222);
    for (j, (attr, privileged)) in [("sex", "Male"), ("race", "White")].into_iter().enumerate() {
        let cells = naive_column("adult", attr);
        assert_eq!(cells.len(), d.n());
        for (i, c) in cells.iter().enumerate() {
            assert_eq!(d.s[(i, j)], f64::from(u8::from(c == privileged)));
        }
    }
    assert_standardized(&d);
    assert_one_hot(&d);
}

#[test]
fn sensitive_columns_never_feed_the_features() {
    for name in ["german", "adult"] {
        let (d, _, schema) = load(name);
        let features: Vec<&str> = d
            .level_map
            .numerical
            .iter()
            .map(|s| s.column.as_str())
            .chain(d.level_map.categorical.iter().map(|c| c.column.as_str()))
            .collect();
        for s in schema.sensitive() {
            assert!(!features.contains(&s), "{name}: {s} leaks into the features");
        }
        assert!(!features.contains(&d.level_map.label_column.as_str()));
    }
}

#[test]
fn level_map_round_trip_reproduces_the_encoding() {
    let (d, raw, _) = load("german");
    let mut buf = Vec::new();
    d.level_map.write(&mut buf).unwrap();
    let back = LevelMap::read(BufReader::new(buf.as_slice())).unwrap();
    assert_eq!(back, d.level_map);
    assert_eq!(back.apply(&raw).unwrap(), d);
}

#[test]
fn saved_dataset_loads_bit_exact() {
    let (d, _, _) = load("german");
    let dir = tempfile::tempdir().unwrap();
    save_encoded(&d, dir.path()).unwrap();
    assert_eq!(load_encoded(dir.path()).unwrap(), d);
}

#[test]
fn split_is_stratified_disjoint_and_deterministic() {
    let (d, _, _) = load("german");
    let a = stratified_split(&d.y, 0.5, 7).unwrap();
    assert_eq!(a, stratified_split(&d.y, 0.5, 7).unwrap());
    assert_ne!(a.test, stratified_split(&d.y, 0.5, 8).unwrap().test);
    let mut all: Vec<usize> = a.train.iter().chain(&a.test).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..d.n()).collect::<Vec<_>>());
    let pos = |idx: &[usize]| idx.iter().filter(|&&i| d.y[i] == 1).count();
    let total_pos = pos(&(0..d.n()).collect::<Vec<_>>());
    assert_eq!(pos(&a.test), (total_pos as f64 * 0.5).round() as usize);
    assert_eq!(a.test.len(), 500);

    let mut buf = Vec::new();
    a.write(&mut buf).unwrap();
    assert_eq!(SplitIndices::read(buf.as_slice()).unwrap(), a);
}

#[test]
fn age_band_examples() {
    assert_eq!(discretize_german_age(24.0).unwrap(), 0);
    assert_eq!(discretize_german_age(25.0).unwrap(), 1);
    assert_eq!(discretize_german_age(60.0).unwrap(), 1);
    assert_eq!(discretize_german_age(61.0).unwrap(), 0);
    assert!(matches!(discretize_german_age(0.0), Err(DatasetError::InvalidBandValue(_))));
    assert!(discretize_german_age(f64::NAN).is_err());
}

const TOY_SCHEMA: &str = "schema-format = 1\nx = numerical\nc = categorical\ng = sensitive; privileged = a\ny = label; positive = 1\n";

#[test]
fn standardization_example() {
    let schema = Schema::parse(TOY_SCHEMA).unwrap();
    let raw = read_csv("x,c,g,y\n1,p,a,1\n2,q,b,0\n3,p,a,0\n".as_bytes(), &schema).unwrap();
    let d = encode(&raw, &schema).unwrap();
    let z = 1.5f64.sqrt();
    for (got, want) in d.x_num.column(0).iter().zip([-z, 0.0, z]) {
        assert!((got - want).abs() < 1e-15);
    }
    assert_eq!(d.x_cat.row(1), [0.0, 1.0]);
    assert_eq!(d.s.column(0), [1.0, 0.0, 1.0]);
    assert_eq!(d.y, [1, 0, 0]);
}

#[test]
fn data_errors_are_specific() {
    let schema = Schema::parse(TOY_SCHEMA).unwrap();
    let constant = read_csv("x,c,g,y\n1,p,a,1\n1,q,b,0\n".as_bytes(), &schema).unwrap();
    assert!(matches!(encode(&constant, &schema), Err(DatasetError::ConstantColumn(_))));
    let text = read_csv("x,c,g,y\n1,p,a,1\nabc,q,b,0\n".as_bytes(), &schema).unwrap();
    assert!(matches!(encode(&text, &schema), Err(DatasetError::ParseNumber { row: 1, .. })));
    let one = read_csv("x,c,g,y\n1,p,a,1\n".as_bytes(), &schema).unwrap();
    assert!(matches!(encode(&one, &schema), Err(DatasetError::TooFewRows(1))));
    let fitted = encode(&read_csv("x,c,g,y\n1,p,a,1\n2,q,b,0\n".as_bytes(), &schema).unwrap(), &schema).unwrap();
    let unseen = read_csv("x,c,g,y\n1,r,a,1\n2,q,b,0\n".as_bytes(), &schema).unwrap();
    assert!(matches!(fitted.level_map.apply(&unseen), Err(DatasetError::UnknownLevel { .. })));
    assert!(stratified_split(&[0, 1, 1], 0.5, 0).is_err());
    assert!(stratified_split(&[0, 0, 1, 1], 1.0, 0).is_err());
}

proptest! {
    #[test]
    fn encoding_invariants_hold_on_random_tables(
        rows in prop::collection::vec((-1e3f64..1e3, 0usize..4, any::<bool>(), any::<bool>()), 3..40),
    ) {
        let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
        prop_assume!(xs.iter().any(|&v| v != xs[0]));
        let mut csv = String::from("x,c,g,y\n");
        for (x, c, g, y) in &rows {
            csv += &format!("{x},l{c},{},{}\n", if *g { "a" } else { "b" }, u8::from(*y));
        }
        let schema = Schema::parse(TOY_SCHEMA).unwrap();
        let d = encode(&read_csv(csv.as_bytes(), &schema).unwrap(), &schema).unwrap();
        let n = d.n() as f64;
        let mean = d.x_num.column(0).iter().sum::<f64>() / n;
        let var = d.x_num.column(0).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        prop_assert!(mean.abs() < 1e-9);
        prop_assert!((var - 1.0).abs() < 1e-9);
        for r in 0..d.n() {
            prop_assert_eq!(d.x_cat.row(r).iter().sum::<f64>(), 1.0);
            prop_assert_eq!(d.s[(r, 0)], f64::from(u8::from(rows[r].2)));
            prop_assert_eq!(d.y[r], u8::from(rows[r].3));
        }
    }
}
