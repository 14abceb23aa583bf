//! Tabular input: CSV loading, one-hot encoding, min-max scaling into
//! [-1, 1], label balancing, and the fixed gerrymandering fixture.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::regression::LinearThreshold;
use crate::scalar::Scalar;

/// Cell spellings treated as missing. Rows containing one are dropped.
const MISSING: &[&str] = &["", "?", "NA", "N/A", "NaN", "nan", "null"];

/// Header plus string cells, exactly as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let columns: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != columns.len() {
                return Err(Error::RaggedRow {
                    row: i + 1,
                    found: rec.len(),
                    expected: columns.len(),
                });
            }
            rows.push(rec.iter().map(|c| c.trim().to_string()).collect());
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self { columns, rows })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingMode {
    /// Map each numeric column affinely onto [-1, 1].
    #[default]
    MinMax,
    /// Leave numeric values untouched. Protected columns must already lie in [-1, 1].
    None,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    /// Source column names whose encoded columns form the protected attributes.
    pub protected: Vec<String>,
    /// Source column names to one-hot encode.
    pub categorical: Vec<String>,
    /// Label column; the last column when absent.
    pub label: Option<String>,
    /// Label spelling that means 1, for labels that are not 0/1, true/false or yes/no.
    pub positive_label: Option<String>,
    pub balance: bool,
    pub seed: u64,
    pub scaling: ScalingMode,
}

impl PreprocessConfig {
    /// Reads a TOML key-value file.
    pub fn from_toml_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Affine map `v -> (v - center) / half_range`; a zero half-range maps everything to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnScaling<T> {
    pub center: T,
    pub half_range: T,
}

impl<T: Scalar> ColumnScaling<T> {
    pub fn identity() -> Self {
        Self {
            center: T::zero(),
            half_range: T::one(),
        }
    }

    /// Min-max scaling fitted to the given values.
    pub fn fit(values: &[T]) -> Self {
        let (lo, hi) = values.iter().fold((values[0], values[0]), |(lo, hi), &v| {
            (lo.min_of(v), hi.max_of(v))
        });
        let two = T::one() + T::one();
        Self {
            center: (lo + hi) / two,
            half_range: (hi - lo) / two,
        }
    }

    pub fn apply(&self, v: T) -> T {
        if self.half_range.is_zero() {
            T::zero()
        } else {
            (v - self.center) / self.half_range
        }
    }
}

/// Immutable labelled data split into protected attributes `x` and
/// unprotected attributes `x'`.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    protected: Matrix<T>,
    unprotected: Matrix<T>,
    features: Matrix<T>,
    labels: Vec<bool>,
    protected_names: Vec<String>,
    unprotected_names: Vec<String>,
    protected_scaling: Vec<ColumnScaling<T>>,
    unprotected_scaling: Vec<ColumnScaling<T>>,
    negatives: usize,
}

impl<T: Scalar> Dataset<T> {
    /// Assembles a dataset with identity scaling metadata.
    pub fn new(
        protected: Matrix<T>,
        unprotected: Matrix<T>,
        labels: Vec<bool>,
        protected_names: Vec<String>,
        unprotected_names: Vec<String>,
    ) -> Result<Self> {
        let ps = vec![ColumnScaling::identity(); protected.cols()];
        let us = vec![ColumnScaling::identity(); unprotected.cols()];
        Self::with_scaling(
            protected,
            unprotected,
            labels,
            protected_names,
            unprotected_names,
            ps,
            us,
        )
    }

    pub fn with_scaling(
        protected: Matrix<T>,
        unprotected: Matrix<T>,
        labels: Vec<bool>,
        protected_names: Vec<String>,
        unprotected_names: Vec<String>,
        protected_scaling: Vec<ColumnScaling<T>>,
        unprotected_scaling: Vec<ColumnScaling<T>>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if protected.rows() != n || unprotected.rows() != n {
            return Err(Error::Dimension(format!(
                "{} labels but {} protected and {} unprotected rows",
                n,
                protected.rows(),
                unprotected.rows()
            )));
        }
        if protected_names.len() != protected.cols()
            || unprotected_names.len() != unprotected.cols()
        {
            return Err(Error::Dimension(
                "column names do not match matrix widths".into(),
            ));
        }
        if protected_scaling.len() != protected.cols()
            || unprotected_scaling.len() != unprotected.cols()
        {
            return Err(Error::Dimension(
                "scaling metadata does not match matrix widths".into(),
            ));
        }
        if protected
            .iter_rows()
            .chain(unprotected.iter_rows())
            .flatten()
            .any(|v| !v.is_finite_value())
        {
            return Err(Error::NonFinite("features"));
        }
        let negatives = labels.iter().filter(|&&y| !y).count();
        if negatives == 0 {
            return Err(Error::NoNegatives);
        }
        let features = protected.hstack(&unprotected);
        Ok(Self {
            protected,
            unprotected,
            features,
            labels,
            protected_names,
            unprotected_names,
            protected_scaling,
            unprotected_scaling,
            negatives,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Protected attributes `x`, one row per example.
    pub fn protected(&self) -> &Matrix<T> {
        &self.protected
    }

    pub fn unprotected(&self) -> &Matrix<T> {
        &self.unprotected
    }

    /// Full feature rows `X = (x, x')`.
    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn protected_names(&self) -> &[String] {
        &self.protected_names
    }

    pub fn unprotected_names(&self) -> &[String] {
        &self.unprotected_names
    }

    pub fn protected_scaling(&self) -> &[ColumnScaling<T>] {
        &self.protected_scaling
    }

    pub fn unprotected_scaling(&self) -> &[ColumnScaling<T>] {
        &self.unprotected_scaling
    }

    /// Number of rows with label 0.
    pub fn negatives(&self) -> usize {
        self.negatives
    }

    pub fn protected_index(&self, name: &str) -> Option<usize> {
        self.protected_names.iter().position(|n| n == name)
    }

    fn select_rows(&self, keep: &[usize]) -> Result<Self> {
        Self::with_scaling(
            self.protected.select_rows(keep),
            self.unprotected.select_rows(keep),
            keep.iter().map(|&i| self.labels[i]).collect(),
            self.protected_names.clone(),
            self.unprotected_names.clone(),
            self.protected_scaling.clone(),
            self.unprotected_scaling.clone(),
        )
    }

    /// Writes the encoded table as CSV: protected columns, unprotected
    /// columns, then a `y` label column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.protected_names.iter().map(String::as_str).collect();
        header.extend(self.unprotected_names.iter().map(String::as_str));
        header.push("y");
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self
                .protected
                .row(i)
                .iter()
                .map(|v| v.to_f64_lossy().to_string())
                .collect();
            rec.extend(
                self.unprotected
                    .row(i)
                    .iter()
                    .map(|v| v.to_f64_lossy().to_string()),
            );
            rec.push(if self.labels[i] { "1" } else { "0" }.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

/// Reads and preprocesses a CSV file.
pub fn load_csv<T: Scalar>(
    path: impl AsRef<Path>,
    config: &PreprocessConfig,
) -> Result<Dataset<T>> {
    let table = RawTable::from_path(path)?;
    preprocess(&table, config)
}

/// Encodes a raw table: drops rows with missing cells, one-hot encodes the
/// categorical columns, scales numeric columns, splits protected from
/// unprotected, and optionally balances labels.
pub fn preprocess<T: Scalar>(table: &RawTable, config: &PreprocessConfig) -> Result<Dataset<T>> {
    let label_col = match &config.label {
        Some(name) => table.column_index(name)?,
        None => table
            .columns
            .len()
            .checked_sub(1)
            .ok_or(Error::EmptyDataset)?,
    };
    let protected: BTreeSet<usize> = config
        .protected
        .iter()
        .map(|n| table.column_index(n))
        .collect::<Result<_>>()?;
    let categorical: BTreeSet<usize> = config
        .categorical
        .iter()
        .map(|n| table.column_index(n))
        .collect::<Result<_>>()?;
    if protected.contains(&label_col) || categorical.contains(&label_col) {
        return Err(Error::Config(
            "the label column cannot be protected or categorical".into(),
        ));
    }

    let rows: Vec<&Vec<String>> = table
        .rows
        .iter()
        .filter(|r| !r.iter().any(|c| MISSING.contains(&c.as_str())))
        .collect();
    let dropped = table.rows.len() - rows.len();
    if dropped > 0 {
        log::warn!("dropped {dropped} rows with missing values");
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let labels = parse_labels(
        &table.columns[label_col],
        rows.iter().map(|r| r[label_col].as_str()),
        config,
    )?;

    let mut pcols: Vec<(String, Vec<T>, ColumnScaling<T>)> = Vec::new();
    let mut ucols: Vec<(String, Vec<T>, ColumnScaling<T>)> = Vec::new();
    for (j, name) in table.columns.iter().enumerate() {
        if j == label_col {
            continue;
        }
        let encoded = if categorical.contains(&j) {
            one_hot(name, rows.iter().map(|r| r[j].as_str()))
        } else {
            vec![numeric_column(name, j, &rows, config.scaling)?]
        };
        if protected.contains(&j) {
            pcols.extend(encoded);
        } else {
            ucols.extend(encoded);
        }
    }
    for (name, values, _) in &pcols {
        if let Some(v) = values.iter().find(|v| v.abs() > T::one()) {
            return Err(Error::UnscaledColumn {
                column: name.clone(),
                value: v.to_f64_lossy(),
            });
        }
    }

    let (pn, pm, ps) = assemble(pcols, rows.len());
    let (un, um, us) = assemble(ucols, rows.len());
    let data = Dataset::with_scaling(pm, um, labels, pn, un, ps, us)?;
    if config.balance {
        balance_labels(&data, config.seed)
    } else {
        Ok(data)
    }
}

fn parse_labels<'a>(
    column: &str,
    cells: impl Iterator<Item = &'a str>,
    config: &PreprocessConfig,
) -> Result<Vec<bool>> {
    let cells: Vec<&str> = cells.collect();
    let distinct: BTreeSet<&str> = cells.iter().copied().collect();
    let not_binary = || Error::LabelNotBinary {
        column: column.to_string(),
        values: distinct.iter().take(8).map(|s| s.to_string()).collect(),
    };
    if distinct.len() > 2 {
        return Err(not_binary());
    }
    if let Some(pos) = &config.positive_label {
        return Ok(cells.iter().map(|c| c == pos).collect());
    }
    cells
        .iter()
        .map(|c| match c.to_ascii_lowercase().as_str() {
            "1" | "1.0" | "true" | "yes" => Ok(true),
            "0" | "0.0" | "false" | "no" => Ok(false),
            _ => Err(not_binary()),
        })
        .collect()
}

fn one_hot<'a, T: Scalar>(
    name: &str,
    cells: impl Iterator<Item = &'a str> + Clone,
) -> Vec<(String, Vec<T>, ColumnScaling<T>)> {
    let categories: BTreeSet<&str> = cells.clone().collect();
    categories
        .into_iter()
        .map(|cat| {
            let values = cells
                .clone()
                .map(|c| if c == cat { T::one() } else { T::zero() })
                .collect();
            (format!("{name}={cat}"), values, ColumnScaling::identity())
        })
        .collect()
}

fn numeric_column<T: Scalar>(
    name: &str,
    j: usize,
    rows: &[&Vec<String>],
    mode: ScalingMode,
) -> Result<(String, Vec<T>, ColumnScaling<T>)> {
    let raw: Vec<T> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r[j].parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .and_then(T::from_f64)
                .ok_or_else(|| Error::Parse {
                    row: i + 1,
                    column: name.to_string(),
                    value: r[j].clone(),
                })
        })
        .collect::<Result<_>>()?;
    let scaling = match mode {
        ScalingMode::MinMax => ColumnScaling::fit(&raw),
        ScalingMode::None => ColumnScaling::identity(),
    };
    if scaling.half_range.is_zero() {
        log::warn!("column `{name}` is constant; scaled to 0");
    }
    let values = raw.into_iter().map(|v| scaling.apply(v)).collect();
    Ok((name.to_string(), values, scaling))
}

type Assembled<T> = (Vec<String>, Matrix<T>, Vec<ColumnScaling<T>>);

fn assemble<T: Scalar>(cols: Vec<(String, Vec<T>, ColumnScaling<T>)>, n: usize) -> Assembled<T> {
    let mut m = Matrix::zeros(n, cols.len());
    let mut names = Vec::with_capacity(cols.len());
    let mut scaling = Vec::with_capacity(cols.len());
    for (j, (name, values, s)) in cols.into_iter().enumerate() {
        for (i, v) in values.into_iter().enumerate() {
            m.set(i, j, v);
        }
        names.push(name);
        scaling.push(s);
    }
    (names, m, scaling)
}

/// Downsamples the majority label uniformly without replacement to the
/// minority count. Surviving rows keep their original order.
pub fn balance_labels<T: Scalar>(data: &Dataset<T>, seed: u64) -> Result<Dataset<T>> {
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| data.labels[i]);
    if pos.is_empty() {
        return Err(Error::LabelClassAbsent(1));
    }
    if neg.is_empty() {
        return Err(Error::LabelClassAbsent(0));
    }
    if pos.len() == neg.len() {
        return Ok(data.clone());
    }
    let (majority, minority) = if pos.len() > neg.len() {
        (pos, neg)
    } else {
        (neg, pos)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, majority.len(), minority.len());
    let mut keep: Vec<usize> = picked
        .into_iter()
        .map(|k| majority[k])
        .chain(minority)
        .collect();
    keep.sort_unstable();
    data.select_rows(&keep)
}

/// The two-attribute toy population: race (blue = +1, green = -1) and gender
/// (man = +1, woman = -1), both protected, with one example per
/// (race, gender, label) cell. The single unprotected column is the product
/// race·gender, which makes "positive iff blue man or green woman" a linear
/// threshold: see [`gerrymandering_classifier`].
pub fn make_gerrymander_fixture<T: Scalar>() -> Dataset<T> {
    let mut protected = Vec::with_capacity(8);
    let mut unprotected = Vec::with_capacity(8);
    let mut labels = Vec::with_capacity(8);
    for race in [1i32, -1] {
        for gender in [1i32, -1] {
            for y in [false, true] {
                protected.push(vec![
                    T::from_i32(race).unwrap(),
                    T::from_i32(gender).unwrap(),
                ]);
                unprotected.push(vec![T::from_i32(race * gender).unwrap()]);
                labels.push(y);
            }
        }
    }
    Dataset::new(
        Matrix::from_rows(&protected, 2),
        Matrix::from_rows(&unprotected, 1),
        labels,
        vec!["race".into(), "gender".into()],
        vec!["race_x_gender".into()],
    )
    .expect("fixture is well formed")
}

/// The classifier that labels exactly blue men and green women positive,
/// over the fixture's full feature rows `(race, gender, race·gender)`. It
/// equalizes false-positive rates across the four marginal groups while
/// every two-attribute intersection is maximally unfair.
pub fn gerrymandering_classifier<T: Scalar>() -> LinearThreshold<T> {
    LinearThreshold::new(vec![T::zero(), T::zero(), T::one()], T::zero())
}

/// Counts of rows per distinct protected row, keyed by the row's bit pattern
/// as rendered text. Used by tests and diagnostics.
pub fn protected_cells<T: Scalar>(data: &Dataset<T>) -> BTreeMap<String, usize> {
    let mut cells = BTreeMap::new();
    for row in data.protected().iter_rows() {
        *cells.entry(format!("{row:?}")).or_insert(0) += 1;
    }
    cells
}
