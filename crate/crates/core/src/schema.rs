//! Delimited CTR datasets: column schema, schema files and record parsing.
//!
//! A schema file is plain `key = value` text, one entry per line, `#` starts
//! a comment. Fields are listed in column order (the label column is skipped
//! when numbering fields):
//!
//! ```text
//! delimiter = tab        # or comma, or a single character
//! header = false
//! label = 0              # column index of the 0/1 label
//! field = I1, integer
//! field = C1, categorical
//! ignore = id            # a column that is read past and never encoded
//! ```

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use crate::error::{ElmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Categorical,
    Integer,
}

impl FieldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldKind::Categorical => "categorical",
            FieldKind::Integer => "integer",
        }
    }
}

impl std::str::FromStr for FieldKind {
    type Err = ElmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "categorical" | "cat" => Ok(FieldKind::Categorical),
            "integer" | "int" => Ok(FieldKind::Integer),
            other => Err(ElmError::Schema(format!("unknown field kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub kind: FieldKind,
}

/// Column layout of a delimited dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    fields: Vec<Field>,
    label_column: usize,
    delimiter: char,
    has_header: bool,
    /// Ignored columns, as `(slot, name)` where slot counts non-label columns.
    ignored: Vec<(usize, String)>,
}

impl FeatureSchema {
    pub fn new(
        fields: Vec<Field>,
        label_column: usize,
        delimiter: char,
        has_header: bool,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &fields {
            if f.name.is_empty() {
                return Err(ElmError::Schema("empty field name".into()));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(ElmError::Schema(format!("duplicate field name {:?}", f.name)));
            }
        }
        if label_column > fields.len() {
            return Err(ElmError::Schema(format!(
                "label column {label_column} outside {} columns",
                fields.len() + 1
            )));
        }
        Ok(FeatureSchema {
            fields,
            label_column,
            delimiter,
            has_header,
            ignored: Vec::new(),
        })
    }

    /// Adds ignored columns; `slot` counts non-label columns in file order.
    pub fn with_ignored(mut self, mut ignored: Vec<(usize, String)>) -> Result<Self> {
        ignored.sort();
        let total = self.fields.len() + ignored.len();
        for (i, (slot, name)) in ignored.iter().enumerate() {
            if *slot >= total || (i > 0 && ignored[i - 1].0 == *slot) {
                return Err(ElmError::Schema(format!("bad position for ignored column {name:?}")));
            }
            if name.is_empty() || self.fields.iter().any(|f| &f.name == name) {
                return Err(ElmError::Schema(format!("bad name for ignored column {name:?}")));
            }
        }
        if self.label_column > total {
            return Err(ElmError::Schema(format!(
                "label column {} outside {} columns",
                self.label_column,
                total + 1
            )));
        }
        self.ignored = ignored;
        Ok(self)
    }

    /// Label in column 0, then the given fields, tab separated, no header.
    pub fn tab_separated(fields: Vec<Field>) -> Result<Self> {
        Self::new(fields, 0, '\t', false)
    }

    /// Criteo layout: label, 13 integer columns, 26 categorical columns.
    pub fn criteo() -> Self {
        let fields = (1..=13)
            .map(|i| Field {
                name: format!("I{i}"),
                kind: FieldKind::Integer,
            })
            .chain((1..=26).map(|i| Field {
                name: format!("C{i}"),
                kind: FieldKind::Categorical,
            }))
            .collect();
        Self::tab_separated(fields).expect("static schema")
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn field_count(&self) -> usize {
        self.fields.len()
    }

    pub fn column_count(&self) -> usize {
        self.fields.len() + self.ignored.len() + 1
    }

    pub fn ignored_columns(&self) -> impl Iterator<Item = &str> {
        self.ignored.iter().map(|(_, n)| n.as_str())
    }

    fn is_ignored(&self, slot: usize) -> bool {
        self.ignored.iter().any(|(s, _)| *s == slot)
    }

    pub fn label_column(&self) -> usize {
        self.label_column
    }

    pub fn delimiter(&self) -> char {
        self.delimiter
    }

    pub fn has_header(&self) -> bool {
        self.has_header
    }

    pub fn parse_config(text: &str) -> Result<Self> {
        let mut fields = Vec::new();
        let mut label = 0usize;
        let mut delimiter = '\t';
        let mut header = false;
        let mut ignored = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| ElmError::Schema(format!("line {}: {msg}", n + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key = value, got {line:?}")))?;
            let value = value.trim();
            match key.trim() {
                "delimiter" => {
                    delimiter = match value {
                        "tab" | "\\t" => '\t',
                        "comma" => ',',
                        _ => {
                            let mut chars = value.chars();
                            match (chars.next(), chars.next()) {
                                (Some(c), None) => c,
                                _ => return Err(bad(format!("bad delimiter {value:?}"))),
                            }
                        }
                    }
                }
                "header" => {
                    header = value
                        .parse()
                        .map_err(|_| bad(format!("header must be true or false, got {value:?}")))?
                }
                "label" => {
                    label = value
                        .parse()
                        .map_err(|_| bad(format!("bad label column {value:?}")))?
                }
                "field" => {
                    let (name, kind) = value
                        .split_once(',')
                        .ok_or_else(|| bad(format!("field needs `name, kind`, got {value:?}")))?;
                    fields.push(Field {
                        name: name.trim().to_string(),
                        kind: kind.parse()?,
                    });
                }
                "ignore" => ignored.push((fields.len() + ignored.len(), value.to_string())),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        if fields.is_empty() {
            return Err(ElmError::Schema("no fields declared".into()));
        }
        if label > fields.len() + ignored.len() {
            return Err(ElmError::Schema(format!(
                "label column {label} outside {} columns",
                fields.len() + ignored.len() + 1
            )));
        }
        let label_for_fields = label.min(fields.len());
        Self::new(fields, label_for_fields, delimiter, header)?
            .with_ignored(ignored)
            .map(|s| FeatureSchema { label_column: label, ..s })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ElmError::io(path, e))?;
        Self::parse_config(&text)
    }

    pub fn to_config(&self) -> String {
        let delimiter = match self.delimiter {
            '\t' => "tab".to_string(),
            ',' => "comma".to_string(),
            c => c.to_string(),
        };
        let mut out = format!(
            "delimiter = {delimiter}\nheader = {}\nlabel = {}\n",
            self.has_header, self.label_column
        );
        let mut fields = self.fields.iter();
        for slot in 0..self.fields.len() + self.ignored.len() {
            match self.ignored.iter().find(|(s, _)| *s == slot) {
                Some((_, name)) => out.push_str(&format!("ignore = {name}\n")),
                None => {
                    let f = fields.next().expect("slot count matches");
                    out.push_str(&format!("field = {}, {}\n", f.name, f.kind.as_str()));
                }
            }
        }
        out
    }
}

/// One parsed line: a cell per schema field (`None` when empty) and the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub values: Vec<Option<String>>,
    pub label: u8,
}

/// Parses one data line. `line_no` is only used in error messages.
pub fn parse_record(line: &str, line_no: usize, schema: &FeatureSchema) -> Result<RawRecord> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    let columns = line.split(schema.delimiter);
    let mut values = Vec::with_capacity(schema.field_count());
    let mut label = None;
    let mut count = 0;
    let mut slot = 0;
    for (col, cell) in columns.enumerate() {
        count += 1;
        if col >= schema.column_count() {
            continue;
        }
        if col != schema.label_column {
            slot += 1;
            if schema.is_ignored(slot - 1) {
                continue;
            }
        }
        if col == schema.label_column {
            label = Some(match cell.trim() {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(ElmError::Label {
                        line: line_no,
                        value: other.to_string(),
                    })
                }
            });
        } else if cell.is_empty() {
            values.push(None);
        } else {
            values.push(Some(cell.to_string()));
        }
    }
    if count != schema.column_count() {
        return Err(ElmError::Parse {
            line: line_no,
            message: format!("expected {} columns, found {count}", schema.column_count()),
        });
    }
    Ok(RawRecord {
        values,
        label: label.expect("label column is within column count"),
    })
}

/// Iterates the records of a delimited stream, skipping the header line if
/// the schema has one. Line numbers in errors are 1-based file lines.
pub struct RecordReader<'s, R> {
    lines: std::io::Lines<R>,
    schema: &'s FeatureSchema,
    line_no: usize,
}

impl<'s, R: BufRead> RecordReader<'s, R> {
    pub fn new(reader: R, schema: &'s FeatureSchema) -> Self {
        RecordReader {
            lines: reader.lines(),
            schema,
            line_no: 0,
        }
    }
}

impl<R: BufRead> Iterator for RecordReader<'_, R> {
    type Item = Result<RawRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    return Some(Err(ElmError::Parse {
                        line: self.line_no,
                        message: e.to_string(),
                    }))
                }
            };
            if self.line_no == 1 && self.schema.has_header {
                continue;
            }
            return Some(parse_record(&line, self.line_no, self.schema));
        }
    }
}
