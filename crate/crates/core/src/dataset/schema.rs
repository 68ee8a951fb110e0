//! Column schema and its plain-text file format.
//!
//! One declaration per line, `#` starts a comment:
//!
//! ```text
//! schema-format = 1
//! duration        = numerical
//! checking_status = categorical
//! purpose         = categorical; levels = A40|A41|A42
//! age             = sensitive; band = 25..60
//! sex             = sensitive; privileged = Male
//! race            = sensitive
//! class           = label; positive = good
//! comment         = ignored
//! ```
//!
//! Sensitive columns are encoded as one 0/1 column: `privileged = L` marks
//! rows equal to `L` as 1, `band = lo..hi` marks numeric values in the closed
//! interval as 1. Without either, the column gets one indicator per level
//! except the first (sorted) reference level.

use std::path::Path;

use super::DatasetError;

pub const SCHEMA_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum SensitiveEncoding {
    Privileged(String),
    Band { lo: f64, hi: f64 },
    Levels,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnKind {
    Numerical,
    Categorical { levels: Option<Vec<String>> },
    Sensitive(SensitiveEncoding),
    Label { positive: Option<String> },
    Ignored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub columns: Vec<ColumnSchema>,
}

impl Schema {
    /// Checks the structural invariants: unique names, exactly one label,
    /// at least one numerical and one categorical feature column.
    pub fn new(columns: Vec<ColumnSchema>) -> Result<Self, DatasetError> {
        let schema = Self { columns };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<(), DatasetError> {
        let mut names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(DatasetError::SchemaInvariant(format!("column {:?} declared twice", w[0])));
        }
        let count = |f: fn(&ColumnKind) -> bool| self.columns.iter().filter(|c| f(&c.kind)).count();
        let labels = count(|k| matches!(k, ColumnKind::Label { .. }));
        if labels != 1 {
            return Err(DatasetError::SchemaInvariant(format!(
                "exactly one label column required, found {labels}"
            )));
        }
        if count(|k| matches!(k, ColumnKind::Numerical)) == 0 {
            return Err(DatasetError::SchemaInvariant("no numerical column".into()));
        }
        if count(|k| matches!(k, ColumnKind::Categorical { .. })) == 0 {
            return Err(DatasetError::SchemaInvariant("no categorical column".into()));
        }
        for c in &self.columns {
            if let ColumnKind::Sensitive(SensitiveEncoding::Band { lo, hi }) = c.kind {
                if !(lo <= hi) {
                    return Err(DatasetError::SchemaInvariant(format!(
                        "{}: empty band {lo}..{hi}",
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ColumnSchema> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn names_of(&self, pred: impl Fn(&ColumnKind) -> bool) -> Vec<&str> {
        self.columns.iter().filter(|c| pred(&c.kind)).map(|c| c.name.as_str()).collect()
    }

    pub fn numerical(&self) -> Vec<&str> {
        self.names_of(|k| matches!(k, ColumnKind::Numerical))
    }

    pub fn categorical(&self) -> Vec<&str> {
        self.names_of(|k| matches!(k, ColumnKind::Categorical { .. }))
    }

    pub fn sensitive(&self) -> Vec<&str> {
        self.names_of(|k| matches!(k, ColumnKind::Sensitive(_)))
    }

    pub fn label(&self) -> &ColumnSchema {
        self.columns
            .iter()
            .find(|c| matches!(c.kind, ColumnKind::Label { .. }))
            .expect("validated: one label")
    }

    /// Columns whose values feed the encoded dataset.
    pub fn used(&self) -> Vec<&str> {
        self.names_of(|k| !matches!(k, ColumnKind::Ignored))
    }

    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let err = |line: usize, msg: String| DatasetError::Schema { line, msg };
        let mut columns = Vec::new();
        let mut version_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(';').map(str::trim);
            let head = parts.next().unwrap_or("");
            let (name, kind) = head
                .split_once('=')
                .map(|(a, b)| (a.trim(), b.trim()))
                .ok_or_else(|| err(line_no, format!("expected `name = kind`, got {line:?}")))?;
            if name == "schema-format" {
                if kind != SCHEMA_FORMAT_VERSION.to_string() {
                    return Err(err(line_no, format!("unsupported schema format {kind:?}")));
                }
                version_seen = true;
                continue;
            }
            if name.is_empty() {
                return Err(err(line_no, "empty column name".into()));
            }
            let mut opts = Vec::new();
            for opt in parts {
                let (k, v) = opt
                    .split_once('=')
                    .map(|(a, b)| (a.trim(), b.trim()))
                    .ok_or_else(|| err(line_no, format!("expected `key = value`, got {opt:?}")))?;
                opts.push((k, v));
            }
            let take = |key: &str| opts.iter().find(|(k, _)| *k == key).map(|(_, v)| v.to_string());
            let allowed: &[&str] = match kind {
                "categorical" => &["levels"],
                "sensitive" => &["privileged", "band"],
                "label" => &["positive"],
                _ => &[],
            };
            if let Some((k, _)) = opts.iter().find(|(k, _)| !allowed.contains(k)) {
                return Err(err(line_no, format!("option {k:?} not valid for {kind}")));
            }
            let kind = match kind {
                "numerical" => ColumnKind::Numerical,
                "categorical" => ColumnKind::Categorical {
                    levels: take("levels").map(|v| v.split('|').map(|s| s.trim().to_string()).collect()),
                },
                "sensitive" => match (take("privileged"), take("band")) {
                    (Some(_), Some(_)) => {
                        return Err(err(line_no, "use either `privileged` or `band`, not both".into()))
                    }
                    (Some(level), None) => ColumnKind::Sensitive(SensitiveEncoding::Privileged(level)),
                    (None, Some(band)) => {
                        let (lo, hi) = band
                            .split_once("..")
                            .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                            .ok_or_else(|| err(line_no, format!("bad band {band:?}, expected lo..hi")))?;
                        ColumnKind::Sensitive(SensitiveEncoding::Band { lo, hi })
                    }
                    (None, None) => ColumnKind::Sensitive(SensitiveEncoding::Levels),
                },
                "label" => ColumnKind::Label { positive: take("positive") },
                "ignored" => ColumnKind::Ignored,
                other => return Err(err(line_no, format!("unknown column kind {other:?}"))),
            };
            columns.push(ColumnSchema { name: name.to_string(), kind });
        }
        if !version_seen {
            return Err(err(0, "missing `schema-format = 1` line".into()));
        }
        Self::new(columns)
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|e| DatasetError::open(path, e))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
schema-format = 1
# a comment
x = numerical
c = categorical ; levels = b|a
s = sensitive; privileged = M
a = sensitive; band = 25..60
r = sensitive
y = label; positive = yes
junk = ignored
";

    #[test]
    fn parses_all_kinds() {
        let s = Schema::parse(GOOD).unwrap();
        assert_eq!(s.numerical(), ["x"]);
        assert_eq!(s.categorical(), ["c"]);
        assert_eq!(s.sensitive(), ["s", "a", "r"]);
        assert_eq!(s.label().name, "y");
        assert_eq!(
            s.get("c").unwrap().kind,
            ColumnKind::Categorical { levels: Some(vec!["b".into(), "a".into()]) }
        );
        assert_eq!(
            s.get("a").unwrap().kind,
            ColumnKind::Sensitive(SensitiveEncoding::Band { lo: 25.0, hi: 60.0 })
        );
        assert_eq!(s.get("r").unwrap().kind, ColumnKind::Sensitive(SensitiveEncoding::Levels));
        assert_eq!(s.used().len(), 6);
    }

    #[test]
    fn invariants_are_enforced() {
        let no_label = "schema-format = 1\nx = numerical\nc = categorical\n";
        assert!(matches!(Schema::parse(no_label), Err(DatasetError::SchemaInvariant(_))));
        let two_labels = "schema-format = 1\nx = numerical\nc = categorical\ny = label\nz = label\n";
        assert!(matches!(Schema::parse(two_labels), Err(DatasetError::SchemaInvariant(_))));
        let no_cat = "schema-format = 1\nx = numerical\ny = label\n";
        assert!(matches!(Schema::parse(no_cat), Err(DatasetError::SchemaInvariant(_))));
        // A sensitive column cannot also be a feature: a name is declared once.
        let dup = "schema-format = 1\nx = numerical\nc = categorical\nc = sensitive\ny = label\n";
        assert!(matches!(Schema::parse(dup), Err(DatasetError::SchemaInvariant(_))));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let bad = "schema-format = 1\nx = numerical\nc = bogus\n";
        assert!(matches!(Schema::parse(bad), Err(DatasetError::Schema { line: 3, .. })));
        let bad_opt = "schema-format = 1\nx = numerical; levels = a\n";
        assert!(matches!(Schema::parse(bad_opt), Err(DatasetError::Schema { line: 2, .. })));
        assert!(Schema::parse("x = numerical\n").is_err());
    }
}
