use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use super::{ColumnKind, DatasetError, RawTable, Schema, SensitiveEncoding};
use crate::linalg::Matrix;

pub const LEVEL_MAP_FORMAT_VERSION: u32 = 1;

/// Standardization statistics of one numerical column.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericStat {
    pub column: String,
    pub mean: f64,
    /// Population (1/n) standard deviation.
    pub stdev: f64,
}

/// Source of one indicator column of `X_cat`.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryColumn {
    pub column: String,
    pub level: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SensitiveRule {
    /// 1 iff the cell equals the level.
    Equals(String),
    /// 1 iff the numeric cell lies in `[lo, hi]`.
    Band { lo: f64, hi: f64 },
}

/// Source of one column of `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitiveColumn {
    /// Column label in reports, e.g. `sex` or `race=Black`.
    pub name: String,
    /// Schema column the indicator is derived from.
    pub attribute: String,
    pub rule: SensitiveRule,
}

/// Everything needed to re-encode a raw table the same way.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMap {
    pub label_column: String,
    pub label_positive: String,
    pub numerical: Vec<NumericStat>,
    pub categorical: Vec<CategoryColumn>,
    pub sensitive: Vec<SensitiveColumn>,
}

/// Mixed-type data ready for the encoders.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    /// `n x d1`, z-scored per column.
    pub x_num: Matrix,
    /// `n x d2` one-hot indicators, one block per categorical column.
    pub x_cat: Matrix,
    /// `n x s` sensitive indicators; never part of `x_num` or `x_cat`.
    pub s: Matrix,
    pub y: Vec<u8>,
    pub level_map: LevelMap,
}

impl EncodedDataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d1(&self) -> usize {
        self.x_num.cols()
    }

    pub fn d2(&self) -> usize {
        self.x_cat.cols()
    }

    pub fn n_sensitive(&self) -> usize {
        self.s.cols()
    }

    pub fn sensitive_names(&self) -> Vec<&str> {
        self.level_map.sensitive.iter().map(|c| c.name.as_str()).collect()
    }

    /// `(column, start, width)` of each categorical block in `x_cat`.
    pub fn categorical_blocks(&self) -> Vec<(String, usize, usize)> {
        self.level_map.categorical_blocks()
    }
}

/// 1 (privileged) iff `lo <= value <= hi`. Values must be positive: bands
/// describe quantities such as age.
pub fn discretize_band(value: f64, lo: f64, hi: f64) -> Result<u8, DatasetError> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(DatasetError::InvalidBandValue(value));
    }
    Ok(u8::from(lo <= value && value <= hi))
}

/// German credit age grouping: 25 through 60 inclusive is privileged.
pub fn discretize_german_age(age: f64) -> Result<u8, DatasetError> {
    discretize_band(age, 25.0, 60.0)
}

/// Fits the level map on `raw` and encodes it.
///
/// Standardization uses full-table statistics with the population standard
/// deviation. Categorical levels are either the declared list or the sorted
/// set of observed values.
pub fn encode(raw: &RawTable, schema: &Schema) -> Result<EncodedDataset, DatasetError> {
    let level_map = LevelMap::fit(raw, schema)?;
    level_map.apply(raw)
}

impl LevelMap {
    pub fn fit(raw: &RawTable, schema: &Schema) -> Result<Self, DatasetError> {
        let n = raw.n_rows();
        if n < 2 {
            return Err(DatasetError::TooFewRows(n));
        }
        let mut numerical = Vec::new();
        let mut categorical = Vec::new();
        let mut sensitive = Vec::new();
        let mut label = None;
        for col in &schema.columns {
            match &col.kind {
                ColumnKind::Numerical => {
                    let values = parse_numeric(raw, &col.name)?;
                    let mean = values.iter().sum::<f64>() / n as f64;
                    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                    let stdev = var.sqrt();
                    if !(stdev > 0.0) {
                        return Err(DatasetError::ConstantColumn(col.name.clone()));
                    }
                    numerical.push(NumericStat { column: col.name.clone(), mean, stdev });
                }
                ColumnKind::Categorical { levels } => {
                    let levels = match levels {
                        Some(l) => l.clone(),
                        None => observed_levels(raw, &col.name)?,
                    };
                    categorical.extend(
                        levels.into_iter().map(|level| CategoryColumn { column: col.name.clone(), level }),
                    );
                }
                ColumnKind::Sensitive(enc) => {
                    let attribute = col.name.clone();
                    match enc {
                        SensitiveEncoding::Privileged(level) => sensitive.push(SensitiveColumn {
                            name: attribute.clone(),
                            attribute,
                            rule: SensitiveRule::Equals(level.clone()),
                        }),
                        SensitiveEncoding::Band { lo, hi } => sensitive.push(SensitiveColumn {
                            name: attribute.clone(),
                            attribute,
                            rule: SensitiveRule::Band { lo: *lo, hi: *hi },
                        }),
                        SensitiveEncoding::Levels => {
                            let levels = observed_levels(raw, &col.name)?;
                            if levels.len() < 2 {
                                return Err(DatasetError::ConstantColumn(col.name.clone()));
                            }
                            let binary = levels.len() == 2;
                            for level in levels.into_iter().skip(1) {
                                let name =
                                    if binary { attribute.clone() } else { format!("{attribute}={level}") };
                                sensitive.push(SensitiveColumn {
                                    name,
                                    attribute: attribute.clone(),
                                    rule: SensitiveRule::Equals(level),
                                });
                            }
                        }
                    }
                }
                ColumnKind::Label { positive } => {
                    let levels = observed_levels(raw, &col.name)?;
                    if levels.len() > 2 {
                        return Err(DatasetError::NonBinaryLabel { column: col.name.clone(), levels });
                    }
                    let positive = match positive {
                        Some(p) => p.clone(),
                        None if levels.iter().all(|l| l == "0" || l == "1") => "1".to_string(),
                        None => {
                            return Err(DatasetError::SchemaInvariant(format!(
                                "label {:?} has levels {levels:?}; declare `positive = ...`",
                                col.name
                            )))
                        }
                    };
                    label = Some((col.name.clone(), positive));
                }
                ColumnKind::Ignored => {}
            }
        }
        let (label_column, label_positive) = label.expect("schema has one label");
        Ok(Self { label_column, label_positive, numerical, categorical, sensitive })
    }

    pub fn categorical_blocks(&self) -> Vec<(String, usize, usize)> {
        let mut blocks: Vec<(String, usize, usize)> = Vec::new();
        for (i, c) in self.categorical.iter().enumerate() {
            match blocks.last_mut() {
                Some((name, _, width)) if *name == c.column => *width += 1,
                _ => blocks.push((c.column.clone(), i, 1)),
            }
        }
        blocks
    }

    /// Encodes `raw` with this map. Applying a map to the table it was
    /// fitted on reproduces [`encode`] exactly.
    pub fn apply(&self, raw: &RawTable) -> Result<EncodedDataset, DatasetError> {
        let n = raw.n_rows();
        if n < 2 {
            return Err(DatasetError::TooFewRows(n));
        }
        let mut x_num = Matrix::zeros(n, self.numerical.len());
        for (j, stat) in self.numerical.iter().enumerate() {
            for (i, v) in parse_numeric(raw, &stat.column)?.into_iter().enumerate() {
                x_num[(i, j)] = (v - stat.mean) / stat.stdev;
            }
        }

        let mut x_cat = Matrix::zeros(n, self.categorical.len());
        for (name, start, width) in self.categorical_blocks() {
            let cells = raw.column(&name)?;
            let levels = &self.categorical[start..start + width];
            for (i, cell) in cells.iter().enumerate() {
                let k = levels.iter().position(|l| l.level == *cell).ok_or_else(|| {
                    DatasetError::UnknownLevel { column: name.clone(), level: cell.to_string() }
                })?;
                x_cat[(i, start + k)] = 1.0;
            }
        }

        let mut s = Matrix::zeros(n, self.sensitive.len());
        for (j, col) in self.sensitive.iter().enumerate() {
            let cells = raw.column(&col.attribute)?;
            for (i, cell) in cells.iter().enumerate() {
                s[(i, j)] = match &col.rule {
                    SensitiveRule::Equals(level) => f64::from(u8::from(cell == level)),
                    SensitiveRule::Band { lo, hi } => {
                        let v = parse_cell(cell, &col.attribute, i)?;
                        f64::from(discretize_band(v, *lo, *hi)?)
                    }
                };
            }
        }

        let y = raw
            .column(&self.label_column)?
            .into_iter()
            .map(|c| u8::from(c == self.label_positive))
            .collect();

        Ok(EncodedDataset { x_num, x_cat, s, y, level_map: self.clone() })
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "level-map-format {LEVEL_MAP_FORMAT_VERSION}")?;
        writeln!(w, "label\t{}\t{}", self.label_column, self.label_positive)?;
        for s in &self.numerical {
            writeln!(w, "numerical\t{}\t{:.16e}\t{:.16e}", s.column, s.mean, s.stdev)?;
        }
        for c in &self.categorical {
            writeln!(w, "categorical\t{}\t{}", c.column, c.level)?;
        }
        for c in &self.sensitive {
            match &c.rule {
                SensitiveRule::Equals(level) => {
                    writeln!(w, "sensitive\t{}\t{}\tequals\t{level}", c.name, c.attribute)?
                }
                SensitiveRule::Band { lo, hi } => {
                    writeln!(w, "sensitive\t{}\t{}\tband\t{lo:.16e}\t{hi:.16e}", c.name, c.attribute)?
                }
            }
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, DatasetError> {
        let bad = |line: usize, msg: &str| DatasetError::Format(format!("level map line {line}: {msg}"));
        let mut map = Self {
            label_column: String::new(),
            label_positive: String::new(),
            numerical: Vec::new(),
            categorical: Vec::new(),
            sensitive: Vec::new(),
        };
        let mut header = false;
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| DatasetError::Format(e.to_string()))?;
            let n = i + 1;
            if i == 0 {
                if line != format!("level-map-format {LEVEL_MAP_FORMAT_VERSION}") {
                    return Err(bad(n, "missing format header"));
                }
                header = true;
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n, "bad number"));
            match f.as_slice() {
                ["label", col, pos] => {
                    map.label_column = col.to_string();
                    map.label_positive = pos.to_string();
                }
                ["numerical", col, mean, sd] => map.numerical.push(NumericStat {
                    column: col.to_string(),
                    mean: num(mean)?,
                    stdev: num(sd)?,
                }),
                ["categorical", col, level] => {
                    map.categorical.push(CategoryColumn { column: col.to_string(), level: level.to_string() })
                }
                ["sensitive", name, attr, "equals", level] => map.sensitive.push(SensitiveColumn {
                    name: name.to_string(),
                    attribute: attr.to_string(),
                    rule: SensitiveRule::Equals(level.to_string()),
                }),
                ["sensitive", name, attr, "band", lo, hi] => map.sensitive.push(SensitiveColumn {
                    name: name.to_string(),
                    attribute: attr.to_string(),
                    rule: SensitiveRule::Band { lo: num(lo)?, hi: num(hi)? },
                }),
                _ => return Err(bad(n, &format!("unrecognised entry {line:?}"))),
            }
        }
        if !header || map.label_column.is_empty() {
            return Err(DatasetError::Format("level map: missing header or label entry".into()));
        }
        Ok(map)
    }
}

fn observed_levels(raw: &RawTable, column: &str) -> Result<Vec<String>, DatasetError> {
    let set: BTreeSet<&str> = raw.column(column)?.into_iter().collect();
    Ok(set.into_iter().map(str::to_string).collect())
}

fn parse_cell(cell: &str, column: &str, row: usize) -> Result<f64, DatasetError> {
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| DatasetError::ParseNumber { column: column.to_string(), row, value: cell.to_string() })
}

fn parse_numeric(raw: &RawTable, column: &str) -> Result<Vec<f64>, DatasetError> {
    raw.column(column)?
        .into_iter()
        .enumerate()
        .map(|(i, c)| parse_cell(c, column, i))
        .collect()
}
