use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::DatasetError;

pub const SPLIT_FORMAT_VERSION: u32 = 1;

/// Disjoint train/test row indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub test_fraction: f64,
    pub seed: u64,
}

/// Class-stratified split: each class is shuffled with `seed` and
/// `round(test_fraction * n_class)` of its rows go to the test side
/// (at least one row per class on each side).
pub fn stratified_split(y: &[u8], test_fraction: f64, seed: u64) -> Result<SplitIndices, DatasetError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::Split(format!("test fraction {test_fraction} not in (0, 1)")));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..=1u8 {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if idx.len() < 2 {
            return Err(DatasetError::Split(format!(
                "class {class} has {} rows; stratification needs at least 2",
                idx.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(class));
        idx.shuffle(&mut rng);
        let n_test = ((idx.len() as f64 * test_fraction).round() as usize).clamp(1, idx.len() - 1);
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    if let Some(bad) = y.iter().find(|&&v| v > 1) {
        return Err(DatasetError::Split(format!("label value {bad} is not binary")));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test, test_fraction, seed })
}

impl SplitIndices {
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        writeln!(w, "split-format {SPLIT_FORMAT_VERSION}")?;
        writeln!(w, "seed {}", self.seed)?;
        writeln!(w, "test-fraction {:.16e}", self.test_fraction)?;
        writeln!(w, "train {}", join(&self.train))?;
        writeln!(w, "test {}", join(&self.test))?;
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, DatasetError> {
        let bad = |msg: String| DatasetError::Format(format!("split file: {msg}"));
        let lines: Vec<String> =
            r.lines().collect::<Result<_, _>>().map_err(|e| bad(e.to_string()))?;
        let field = |i: usize, key: &str| -> Result<&str, DatasetError> {
            let line = lines.get(i).ok_or_else(|| bad(format!("missing `{key}` line")))?;
            if line == key {
                return Ok("");
            }
            line.strip_prefix(key)
                .and_then(|s| s.strip_prefix(' '))
                .ok_or_else(|| bad(format!("line {}: expected `{key}`", i + 1)))
        };
        if field(0, "split-format")? != SPLIT_FORMAT_VERSION.to_string() {
            return Err(bad("unsupported format version".into()));
        }
        let seed = field(1, "seed")?.parse().map_err(|_| bad("bad seed".into()))?;
        let test_fraction =
            field(2, "test-fraction")?.parse().map_err(|_| bad("bad test fraction".into()))?;
        let list = |s: &str| -> Result<Vec<usize>, DatasetError> {
            s.split_whitespace().map(|t| t.parse().map_err(|_| bad(format!("bad index {t:?}")))).collect()
        };
        let train = list(field(3, "train")?)?;
        let test = list(field(4, "test")?)?;
        Ok(Self { train, test, test_fraction, seed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_rows_half_split() {
        let s = stratified_split(&[0, 0, 1, 1], 0.5, 3).unwrap();
        assert_eq!(s.test.len(), 2);
        assert_eq!(s.test.iter().filter(|&&i| i < 2).count(), 1);
        assert_eq!(s.train.len(), 2);
    }

    #[test]
    fn deterministic_for_same_seed() {
        let y: Vec<u8> = (0..100).map(|i| u8::from(i % 3 == 0)).collect();
        assert_eq!(stratified_split(&y, 0.5, 9).unwrap(), stratified_split(&y, 0.5, 9).unwrap());
        assert_ne!(stratified_split(&y, 0.5, 9).unwrap(), stratified_split(&y, 0.5, 10).unwrap());
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(stratified_split(&[0, 0, 1], 0.5, 0).is_err());
        assert!(stratified_split(&[0, 0, 1, 1], 0.0, 0).is_err());
        assert!(stratified_split(&[0, 0, 1, 1], 1.0, 0).is_err());
    }

    #[test]
    fn text_round_trip() {
        let s = stratified_split(&[0, 1, 0, 1, 1, 0, 0], 0.4, 77).unwrap();
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        assert_eq!(SplitIndices::read(&buf[..]).unwrap(), s);
    }
}
