use super::{Dataset, DatasetError, Provenance, Role};
use std::collections::BTreeSet;
use std::path::Path;

/// How a raw CSV is tokenised.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub delimiter: u8,
    pub has_header: bool,
    /// Cell contents treated as missing, compared after trimming.
    pub missing_tokens: Vec<String>,
    /// Columns read as categorical even when every value parses as a number.
    pub categorical: Vec<String>,
    /// Columns dropped on load.
    pub drop: Vec<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            delimiter: b',',
            has_header: true,
            missing_tokens: vec![String::new(), "NA".into(), "?".into()],
            categorical: Vec::new(),
            drop: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawColumn {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl RawColumn {
    fn len(&self) -> usize {
        match self {
            RawColumn::Numeric(v) => v.len(),
            RawColumn::Categorical(v) => v.len(),
        }
    }
}

/// A loaded table before preprocessing: cells may be missing and columns may
/// be categorical.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    names: Vec<String>,
    columns: Vec<RawColumn>,
}

impl RawTable {
    pub fn new(names: Vec<String>, columns: Vec<RawColumn>) -> Self {
        assert_eq!(names.len(), columns.len());
        RawTable { names, columns }
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Option<&RawColumn> {
        self.index_of(name).map(|j| &self.columns[j])
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, RawColumn::len)
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn missing_count(&self) -> usize {
        self.columns
            .iter()
            .map(|c| match c {
                RawColumn::Numeric(v) => v.iter().filter(|x| x.is_none()).count(),
                RawColumn::Categorical(v) => v.iter().filter(|x| x.is_none()).count(),
            })
            .sum()
    }

    pub fn categorical_columns(&self) -> Vec<String> {
        self.names
            .iter()
            .zip(&self.columns)
            .filter(|(_, c)| matches!(c, RawColumn::Categorical(_)))
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// Splits the table into inputs and the `target` column. Every column must
    /// be numeric and complete by now.
    pub fn into_dataset(
        self,
        name: &str,
        target: &str,
        provenance: Provenance,
    ) -> Result<Dataset, DatasetError> {
        let t = self
            .index_of(target)
            .ok_or_else(|| DatasetError::MissingTarget(target.to_owned()))?;
        if self.columns.len() < 2 {
            return Err(DatasetError::NoFeatures(name.to_owned()));
        }
        let mut inputs = Vec::with_capacity(self.columns.len() - 1);
        let mut names = Vec::with_capacity(self.columns.len() - 1);
        let mut y = Vec::new();
        for (j, (col_name, col)) in self.names.into_iter().zip(self.columns).enumerate() {
            let values = match col {
                RawColumn::Numeric(v) => v
                    .into_iter()
                    .enumerate()
                    .map(|(row, x)| {
                        x.ok_or_else(|| DatasetError::NonFinite {
                            name: name.to_owned(),
                            row,
                            column: col_name.clone(),
                        })
                    })
                    .collect::<Result<Vec<f64>, _>>()?,
                RawColumn::Categorical(_) => return Err(DatasetError::Unencoded(col_name)),
            };
            if j == t {
                y = values;
            } else {
                inputs.push(values);
                names.push(col_name);
            }
        }
        Dataset::with_feature_names(name, inputs, names, y, provenance, Role::Full)
    }
}

/// Reads a delimited file into a [`RawTable`]. A column is numeric when every
/// present cell parses as a float, categorical otherwise.
pub fn load_table(path: &Path, opts: &LoadOptions) -> Result<RawTable, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() == 1 && rec.get(0).is_some_and(str::is_empty) {
            continue;
        }
        rows.push(rec);
    }
    let header: Vec<String> = if opts.has_header {
        if rows.is_empty() {
            return Err(DatasetError::EmptyFile(path.display().to_string()));
        }
        rows.remove(0).iter().map(str::to_owned).collect()
    } else {
        let width = rows.first().map_or(0, csv::StringRecord::len);
        (1..=width).map(|j| format!("c{j}")).collect()
    };
    if rows.is_empty() || header.is_empty() {
        return Err(DatasetError::EmptyFile(path.display().to_string()));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != header.len() {
            return Err(DatasetError::NonRectangular {
                row: i + 1,
                got: r.len(),
                expected: header.len(),
            });
        }
    }

    let is_missing = |s: &str| opts.missing_tokens.iter().any(|m| m == s);
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for (j, col_name) in header.iter().enumerate() {
        if opts.drop.contains(col_name) {
            continue;
        }
        let cells: Vec<Option<&str>> = rows
            .iter()
            .map(|r| {
                let s = &r[j];
                (!is_missing(s)).then_some(s)
            })
            .collect();
        let forced = opts.categorical.contains(col_name);
        let parsed: Option<Vec<Option<f64>>> = if forced {
            None
        } else {
            cells
                .iter()
                .map(|c| match c {
                    None => Some(None),
                    Some(s) => s.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some),
                })
                .collect()
        };
        let column = match parsed {
            Some(values) => RawColumn::Numeric(values),
            None => RawColumn::Categorical(cells.iter().map(|c| c.map(str::to_owned)).collect()),
        };
        names.push(col_name.clone());
        columns.push(column);
    }
    for name in opts.categorical.iter().chain(&opts.drop) {
        if !header.contains(name) {
            return Err(DatasetError::UnknownColumn(name.clone()));
        }
    }
    Ok(RawTable { names, columns })
}

/// Replaces every missing numeric cell by the mean of the present values of
/// its column.
pub fn impute_mean(mut table: RawTable) -> Result<RawTable, DatasetError> {
    for (name, col) in table.names.iter().zip(table.columns.iter_mut()) {
        let RawColumn::Numeric(values) = col else {
            continue;
        };
        if values.iter().all(Option::is_some) {
            continue;
        }
        let present: Vec<f64> = values.iter().flatten().copied().collect();
        if present.is_empty() {
            return Err(DatasetError::AllMissing(name.clone()));
        }
        let mean = present.iter().sum::<f64>() / present.len() as f64;
        for v in values.iter_mut() {
            v.get_or_insert(mean);
        }
    }
    Ok(table)
}

/// Replaces a categorical column by one 0/1 indicator column per level.
/// Levels are emitted in sorted order as `<column>=<level>`.
pub fn dummy_encode(mut table: RawTable, column: &str) -> Result<RawTable, DatasetError> {
    let j = table
        .index_of(column)
        .ok_or_else(|| DatasetError::UnknownColumn(column.to_owned()))?;
    let RawColumn::Categorical(values) = &table.columns[j] else {
        return Err(DatasetError::NotCategorical(column.to_owned()));
    };
    let mut present = Vec::with_capacity(values.len());
    for (row, v) in values.iter().enumerate() {
        match v {
            Some(s) => present.push(s.as_str()),
            None => {
                return Err(DatasetError::MissingCategory {
                    column: column.to_owned(),
                    row,
                })
            }
        }
    }
    let levels: BTreeSet<&str> = present.iter().copied().collect();
    if levels.len() < 2 {
        return Err(DatasetError::SingleLevel(column.to_owned()));
    }
    let (names, cols): (Vec<String>, Vec<RawColumn>) = levels
        .iter()
        .map(|level| {
            let indicator = present
                .iter()
                .map(|v| Some(if v == level { 1.0 } else { 0.0 }))
                .collect();
            (format!("{column}={level}"), RawColumn::Numeric(indicator))
        })
        .unzip();
    table.names.splice(j..=j, names);
    table.columns.splice(j..=j, cols);
    Ok(table)
}

/// Loads a CSV with default options: missing numeric cells are mean-imputed and
/// every categorical input column is dummy-encoded.
pub fn load_csv(path: &Path, target: &str) -> Result<Dataset, DatasetError> {
    let table = load_table(path, &LoadOptions::default())?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    preprocess(table, &name, target, Provenance::Real)
}

pub(crate) fn preprocess(
    table: RawTable,
    name: &str,
    target: &str,
    provenance: Provenance,
) -> Result<Dataset, DatasetError> {
    if table.index_of(target).is_none() {
        return Err(DatasetError::MissingTarget(target.to_owned()));
    }
    let mut table = impute_mean(table)?;
    for col in table.categorical_columns() {
        if col != target {
            table = dummy_encode(table, &col)?;
        }
    }
    table.into_dataset(name, target, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn impute_replaces_with_present_mean() {
        let t = RawTable::new(
            vec!["a".into()],
            vec![RawColumn::Numeric(vec![Some(1.0), None, Some(3.0)])],
        );
        let t = impute_mean(t).unwrap();
        assert_eq!(
            t.column("a"),
            Some(&RawColumn::Numeric(vec![Some(1.0), Some(2.0), Some(3.0)]))
        );
        assert_eq!(t.missing_count(), 0);
    }

    #[test]
    fn impute_is_identity_without_missing() {
        let t = RawTable::new(
            vec!["a".into(), "b".into()],
            vec![
                RawColumn::Numeric(vec![Some(1.0), Some(5.0)]),
                RawColumn::Categorical(vec![Some("u".into()), Some("v".into())]),
            ],
        );
        assert_eq!(impute_mean(t.clone()).unwrap(), t);
    }

    #[test]
    fn impute_rejects_all_missing() {
        let t = RawTable::new(vec!["a".into()], vec![RawColumn::Numeric(vec![None, None])]);
        assert!(matches!(impute_mean(t), Err(DatasetError::AllMissing(_))));
    }

    #[test]
    fn dummy_three_levels() {
        let sex = ["M", "F", "I", "M"].iter().map(|s| Some(s.to_string())).collect();
        let t = RawTable::new(
            vec!["sex".into(), "len".into()],
            vec![
                RawColumn::Categorical(sex),
                RawColumn::Numeric(vec![Some(0.1), Some(0.2), Some(0.3), Some(0.4)]),
            ],
        );
        let t = dummy_encode(t, "sex").unwrap();
        assert_eq!(t.column_names(), &["sex=F", "sex=I", "sex=M", "len"]);
        assert_eq!(t.n_rows(), 4);
        assert_eq!(
            t.column("sex=M"),
            Some(&RawColumn::Numeric(vec![Some(1.0), Some(0.0), Some(0.0), Some(1.0)]))
        );
    }

    #[test]
    fn dummy_binary_sums_to_one() {
        let v = ["A", "B", "B", "A", "B"].iter().map(|s| Some(s.to_string())).collect();
        let t = dummy_encode(
            RawTable::new(vec!["c".into()], vec![RawColumn::Categorical(v)]),
            "c",
        )
        .unwrap();
        let (Some(RawColumn::Numeric(a)), Some(RawColumn::Numeric(b))) = (t.column("c=A"), t.column("c=B"))
        else {
            panic!("indicator columns missing");
        };
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.unwrap() + y.unwrap(), 1.0);
        }
    }

    #[test]
    fn dummy_rejects_numeric_and_single_level() {
        let t = RawTable::new(vec!["n".into()], vec![RawColumn::Numeric(vec![Some(1.0), Some(2.0)])]);
        assert!(matches!(dummy_encode(t, "n"), Err(DatasetError::NotCategorical(_))));
        let t = RawTable::new(
            vec!["c".into()],
            vec![RawColumn::Categorical(vec![Some("a".into()), Some("a".into())])],
        );
        assert!(matches!(dummy_encode(t, "c"), Err(DatasetError::SingleLevel(_))));
    }

    #[test]
    fn load_csv_handles_missing_and_categories() {
        let f = write("sex,len,rings\nM,0.5,10\nF,?,7\nI,0.3,NA\nM,0.4,9\n");
        let err = load_csv(f.path(), "rings");
        // missing target cell is imputed like any numeric column
        let ds = err.unwrap();
        assert_eq!(ds.n_rows(), 4);
        assert_eq!(ds.n_features(), 4);
        assert_eq!(ds.feature_names(), &["sex=F", "sex=I", "sex=M", "len"]);
        assert!((ds.column(3)[1] - 0.4).abs() < 1e-15);
        assert!((ds.target()[2] - 26.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn load_csv_errors() {
        let one_col = write("y\n1\n2\n3\n");
        assert!(matches!(load_csv(one_col.path(), "y"), Err(DatasetError::NoFeatures(_))));
        let ragged = write("a,y\n1,2\n3\n");
        assert!(matches!(
            load_csv(ragged.path(), "y"),
            Err(DatasetError::NonRectangular { row: 2, .. })
        ));
        let empty = write("");
        assert!(matches!(load_csv(empty.path(), "y"), Err(DatasetError::EmptyFile(_))));
        let no_target = write("a,b\n1,2\n3,4\n");
        assert!(matches!(load_csv(no_target.path(), "y"), Err(DatasetError::MissingTarget(_))));
    }
}
