//! Dataset container, delimited-file loading, and nominal category handling.
//!
//! Covariates are held column-major as `f64`. Nominal covariates enter as
//! integer category codes `1..=n_cat` plus the original category names; before
//! training they must be rank-encoded with [`encode_dataset`], which orders
//! the categories of each nominal covariate by the first principal component
//! of their per-category class-frequency profiles and replaces codes by ranks.
//! Class labels are `1..=n_classes` with the original label spellings kept
//! alongside.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// How a covariate's values are interpreted.
///
/// `Continuous` and `OrderedCategorical` are used numerically as-is; the
/// distinction matters only for importance eligibility. `Nominal` columns
/// hold unordered category codes and must be rank-encoded before training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateKind {
    Continuous,
    OrderedCategorical,
    Nominal,
}

impl CovariateKind {
    pub fn is_categorical(self) -> bool {
        !matches!(self, CovariateKind::Continuous)
    }
}

impl fmt::Display for CovariateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CovariateKind::Continuous => "continuous",
            CovariateKind::OrderedCategorical => "ordered_categorical",
            CovariateKind::Nominal => "nominal",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for CovariateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(CovariateKind::Continuous),
            "ordered_categorical" => Ok(CovariateKind::OrderedCategorical),
            "nominal" => Ok(CovariateKind::Nominal),
            other => Err(Error::data(format!(
                "unknown covariate kind {other:?} (expected continuous, ordered_categorical, or nominal)"
            ))),
        }
    }
}

/// Explicit kind declarations for named columns; columns not listed are
/// inferred (numeric means continuous, anything else nominal).
#[derive(Debug, Clone, Default)]
pub struct Schema {
    kinds: HashMap<String, CovariateKind>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(mut self, column: impl Into<String>, kind: CovariateKind) -> Self {
        self.kinds.insert(column.into(), kind);
        self
    }

    pub fn kind_of(&self, column: &str) -> Option<CovariateKind> {
        self.kinds.get(column).copied()
    }

    /// Reads `column: kind` lines; `#` starts a comment, blank lines ignored.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut schema = Schema::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, kind) = line.split_once(':').ok_or_else(|| {
                Error::data(format!(
                    "schema line {}: expected \"column: kind\", got {raw:?}",
                    lineno + 1
                ))
            })?;
            let kind: CovariateKind = kind.trim().parse()?;
            schema.kinds.insert(name.trim().to_string(), kind);
        }
        Ok(schema)
    }
}

/// A labeled dataset: covariate columns plus outcome classes `1..=n_classes`.
#[derive(Debug, Clone)]
pub struct Dataset {
    names: Vec<String>,
    kinds: Vec<CovariateKind>,
    columns: Vec<Vec<f64>>,
    /// Original category names by original code, for covariates of nominal origin.
    categories: Vec<Option<Vec<String>>>,
    /// `rank_of_code` for columns that have been rank-encoded.
    encodings: Vec<Option<Vec<usize>>>,
    labels: Vec<u32>,
    n_classes: usize,
    class_names: Vec<String>,
}

impl Dataset {
    /// Full constructor; validates every stored invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        names: Vec<String>,
        kinds: Vec<CovariateKind>,
        columns: Vec<Vec<f64>>,
        categories: Vec<Option<Vec<String>>>,
        encodings: Vec<Option<Vec<usize>>>,
        labels: Vec<u32>,
        n_classes: usize,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let p = names.len();
        if kinds.len() != p || columns.len() != p || categories.len() != p || encodings.len() != p {
            return Err(Error::data("covariate metadata lengths disagree"));
        }
        if labels.is_empty() {
            return Err(Error::data("dataset has no observations"));
        }
        if n_classes < 3 {
            return Err(Error::data(format!(
                "a multi-class outcome needs at least 3 classes, got {n_classes}"
            )));
        }
        if class_names.len() != n_classes {
            return Err(Error::data("class name count disagrees with n_classes"));
        }
        {
            let mut seen = std::collections::HashSet::new();
            for name in &names {
                if name.is_empty() {
                    return Err(Error::data("empty covariate name"));
                }
                if !seen.insert(name.as_str()) {
                    return Err(Error::data(format!("duplicate covariate name {name:?}")));
                }
            }
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != labels.len() {
                return Err(Error::data(format!(
                    "column {:?} has {} values for {} observations",
                    names[j],
                    col.len(),
                    labels.len()
                )));
            }
            for (i, &v) in col.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::data(format!(
                        "non-finite value in column {:?}, data row {}",
                        names[j],
                        i + 1
                    )));
                }
            }
            if kinds[j] == CovariateKind::Nominal {
                let cats = categories[j].as_ref().ok_or_else(|| {
                    Error::data(format!(
                        "nominal column {:?} lacks category names",
                        names[j]
                    ))
                })?;
                let n_cat = cats.len() as f64;
                for (i, &v) in col.iter().enumerate() {
                    if v.fract() != 0.0 || v < 1.0 || v > n_cat {
                        return Err(Error::data(format!(
                            "nominal column {:?}, data row {}: code {} outside 1..={}",
                            names[j],
                            i + 1,
                            v,
                            cats.len()
                        )));
                    }
                }
            }
        }
        for (i, &y) in labels.iter().enumerate() {
            if y < 1 || y as usize > n_classes {
                return Err(Error::data(format!(
                    "label {} at data row {} outside 1..={n_classes}",
                    y,
                    i + 1
                )));
            }
        }
        Ok(Self {
            names,
            kinds,
            columns,
            categories,
            encodings,
            labels,
            n_classes,
            class_names,
        })
    }

    /// All-continuous dataset with generated names; labels in `1..=n_classes`.
    pub fn continuous(columns: Vec<Vec<f64>>, labels: Vec<u32>, n_classes: usize) -> Result<Self> {
        let p = columns.len();
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        let class_names = (1..=n_classes).map(|c| c.to_string()).collect();
        Dataset::new(
            names,
            vec![CovariateKind::Continuous; p],
            columns,
            vec![None; p],
            vec![None; p],
            labels,
            n_classes,
            class_names,
        )
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn p(&self) -> usize {
        self.names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kinds(&self) -> &[CovariateKind] {
        &self.kinds
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Class labels, `1..=n_classes`.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn categories(&self, j: usize) -> Option<&[String]> {
        self.categories[j].as_deref()
    }

    pub fn encoding(&self, j: usize) -> Option<&[usize]> {
        self.encodings[j].as_deref()
    }

    pub fn has_nominal(&self) -> bool {
        self.kinds.contains(&CovariateKind::Nominal)
    }

    pub fn distinct_count(&self, j: usize) -> usize {
        let mut vals: Vec<f64> = self.columns[j].clone();
        vals.sort_unstable_by(f64::total_cmp);
        vals.dedup();
        vals.len()
    }

    /// Row subset in the given order; all metadata carries over.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|col| rows.iter().map(|&i| col[i]).collect())
            .collect();
        Dataset {
            names: self.names.clone(),
            kinds: self.kinds.clone(),
            columns,
            categories: self.categories.clone(),
            encodings: self.encodings.clone(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
            class_names: self.class_names.clone(),
        }
    }
}

/// An untyped delimited table: header names plus string cells, row-major.
/// Prediction inputs are read into this and interpreted against a model's
/// stored covariate schema.
#[derive(Debug, Clone)]
pub struct DataTable {
    pub names: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl DataTable {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_str_content(&text)
    }

    /// Parses delimited text; the delimiter is a tab if the header line
    /// contains one, otherwise a comma.
    pub fn from_str_content(text: &str) -> Result<Self> {
        let header = text.lines().next().unwrap_or("");
        let delim = if header.contains('\t') { b'\t' } else { b',' };
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delim)
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(false)
            .from_reader(text.as_bytes());
        let names: Vec<String> = reader
            .headers()
            .map_err(|e| Error::data(format!("bad header row: {e}")))?
            .iter()
            .map(|s| s.to_string())
            .collect();
        if names.is_empty() {
            return Err(Error::data("empty header row"));
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::data(format!("data row {}: {e}", i + 1)))?;
            rows.push(record.iter().map(|s| s.to_string()).collect());
        }
        if rows.is_empty() {
            return Err(Error::data("no data rows"));
        }
        Ok(DataTable { names, rows })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Loads a labeled dataset. The column named `outcome` becomes the class
/// label; remaining columns become covariates, typed by `schema` where
/// declared and inferred otherwise. Distinct outcome values are mapped to
/// `1..=n_classes` in sorted order (numeric when all parse as numbers),
/// distinct nominal categories to codes `1..=n_cat` likewise.
pub fn load_dataset(
    path: impl AsRef<Path>,
    outcome: &str,
    schema: Option<&Schema>,
) -> Result<Dataset> {
    let table = DataTable::from_file(path)?;
    dataset_from_table(&table, outcome, schema)
}

pub fn dataset_from_table(
    table: &DataTable,
    outcome: &str,
    schema: Option<&Schema>,
) -> Result<Dataset> {
    let outcome_idx = table
        .column_index(outcome)
        .ok_or_else(|| Error::data(format!("outcome column {outcome:?} not found in header")))?;
    if let Some(schema) = schema {
        for name in schema.kinds.keys() {
            if name != outcome && table.column_index(name).is_none() {
                return Err(Error::data(format!(
                    "schema declares unknown column {name:?}"
                )));
            }
        }
    }

    for (i, row) in table.rows.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::data(format!(
                    "missing value at data row {}, column {:?}",
                    i + 1,
                    table.names[j]
                )));
            }
        }
    }

    let raw_labels: Vec<&str> = table.rows.iter().map(|r| r[outcome_idx].as_str()).collect();
    let (class_names, label_code) = index_categories(&raw_labels);
    let n_classes = class_names.len();
    if n_classes < 3 {
        return Err(Error::data(format!(
            "outcome column {outcome:?} has {n_classes} distinct values; need at least 3"
        )));
    }
    let labels: Vec<u32> = raw_labels
        .iter()
        .map(|s| label_code[*s] as u32 + 1)
        .collect();

    let mut names = Vec::new();
    let mut kinds = Vec::new();
    let mut columns = Vec::new();
    let mut categories = Vec::new();
    for (j, name) in table.names.iter().enumerate() {
        if j == outcome_idx {
            continue;
        }
        let cells: Vec<&str> = table.rows.iter().map(|r| r[j].as_str()).collect();
        let declared = schema.and_then(|s| s.kind_of(name));
        let numeric: Option<Vec<f64>> = parse_all_numeric(&cells);
        let kind = declared.unwrap_or(if numeric.is_some() {
            CovariateKind::Continuous
        } else {
            CovariateKind::Nominal
        });
        match kind {
            CovariateKind::Continuous | CovariateKind::OrderedCategorical => {
                let values = numeric.ok_or_else(|| {
                    let bad = cells
                        .iter()
                        .position(|c| c.parse::<f64>().is_err())
                        .unwrap_or(0);
                    Error::data(format!(
                        "column {name:?} is declared {kind} but data row {} holds {:?}",
                        bad + 1,
                        cells[bad]
                    ))
                })?;
                if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::data(format!(
                        "non-finite value in column {name:?}, data row {}",
                        i + 1
                    )));
                }
                columns.push(values);
                categories.push(None);
            }
            CovariateKind::Nominal => {
                let (cats, code_of) = index_categories(&cells);
                let values = cells.iter().map(|c| code_of[*c] as f64 + 1.0).collect();
                columns.push(values);
                categories.push(Some(cats));
            }
        }
        names.push(name.clone());
        kinds.push(kind);
    }

    let p = names.len();
    Dataset::new(
        names,
        kinds,
        columns,
        categories,
        vec![None; p],
        labels,
        n_classes,
        class_names,
    )
}

fn parse_all_numeric(cells: &[&str]) -> Option<Vec<f64>> {
    cells.iter().map(|c| c.parse::<f64>().ok()).collect()
}

/// Distinct values in sorted order (numeric when all parse, ties and
/// non-numeric sets lexicographic), plus the value-to-index map.
fn index_categories<'a>(cells: &[&'a str]) -> (Vec<String>, HashMap<&'a str, usize>) {
    let mut distinct: Vec<&str> = Vec::new();
    {
        let mut seen = std::collections::HashSet::new();
        for &c in cells {
            if seen.insert(c) {
                distinct.push(c);
            }
        }
    }
    let all_numeric = distinct.iter().all(|s| s.parse::<f64>().is_ok());
    if all_numeric {
        distinct.sort_by(|a, b| {
            let (x, y) = (a.parse::<f64>().unwrap(), b.parse::<f64>().unwrap());
            x.total_cmp(&y).then_with(|| a.cmp(b))
        });
    } else {
        distinct.sort_unstable();
    }
    let map = distinct.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    (distinct.into_iter().map(String::from).collect(), map)
}

/// Rank positions for the categories of one nominal covariate.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CategoryEncoding {
    pub covariate: usize,
    /// `rank_of_code[code - 1]` is the category's position `1..=n_cat` in the
    /// derived order.
    pub rank_of_code: Vec<usize>,
}

/// Middle rank used for categories never seen in training.
pub(crate) fn middle_rank(n_cat: usize) -> usize {
    (n_cat + 1).div_ceil(2)
}

/// Orders the categories of a nominal covariate so that categories with
/// similar class-frequency profiles sit next to each other: each category's
/// class proportions are projected onto the first principal component of the
/// count-weighted proportion matrix, and categories are ranked by score.
///
/// The projection sign is fixed so that the first category scores
/// non-positive; exact score ties fall back to larger count first, then lower
/// original code. Categories absent from the data sit at the weighted mean
/// (score zero). A single-category covariate yields the identity encoding.
pub fn order_nominal_categories(data: &Dataset, covariate: usize) -> Result<CategoryEncoding> {
    if data.kinds()[covariate] != CovariateKind::Nominal {
        return Err(Error::data(format!(
            "covariate {:?} is {}, not nominal",
            data.names()[covariate],
            data.kinds()[covariate]
        )));
    }
    let n_cat = data
        .categories(covariate)
        .map(|c| c.len())
        .ok_or_else(|| Error::internal("nominal column without categories"))?;
    if n_cat == 1 {
        log::warn!(
            "covariate {:?} has a single category; identity encoding",
            data.names()[covariate]
        );
        return Ok(CategoryEncoding {
            covariate,
            rank_of_code: vec![1],
        });
    }

    let c = data.n_classes();
    let mut counts = vec![0f64; n_cat * c];
    for (i, &v) in data.column(covariate).iter().enumerate() {
        let code = v as usize - 1;
        let class = data.labels()[i] as usize - 1;
        counts[code * c + class] += 1.0;
    }
    let cat_total: Vec<f64> = (0..n_cat)
        .map(|i| counts[i * c..(i + 1) * c].iter().sum())
        .collect();
    let total: f64 = cat_total.iter().sum();

    // Row-normalized proportions, centered at the count-weighted mean; empty
    // categories sit exactly at the mean.
    let mut centered = vec![0f64; n_cat * c];
    let mut mean = vec![0f64; c];
    for i in 0..n_cat {
        for k in 0..c {
            mean[k] += counts[i * c + k] / total;
        }
    }
    for i in 0..n_cat {
        if cat_total[i] > 0.0 {
            for k in 0..c {
                centered[i * c + k] = counts[i * c + k] / cat_total[i] - mean[k];
            }
        }
    }

    let mut cov = DMatrix::zeros(c, c);
    for i in 0..n_cat {
        let w = cat_total[i] / total;
        for a in 0..c {
            for b in 0..c {
                cov[(a, b)] += w * centered[i * c + a] * centered[i * c + b];
            }
        }
    }
    let eig = cov.symmetric_eigen();
    let mut lead = 0usize;
    for i in 1..c {
        if eig.eigenvalues[i] > eig.eigenvalues[lead] {
            lead = i;
        }
    }
    let axis: DVector<f64> = eig.eigenvectors.column(lead).into();

    let mut scores: Vec<f64> = (0..n_cat)
        .map(|i| (0..c).map(|k| centered[i * c + k] * axis[k]).sum())
        .collect();
    if scores[0] > 0.0 {
        for s in &mut scores {
            *s = -*s;
        }
    }

    let mut order: Vec<usize> = (0..n_cat).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .total_cmp(&scores[b])
            .then_with(|| cat_total[b].total_cmp(&cat_total[a]))
            .then_with(|| a.cmp(&b))
    });
    let mut rank_of_code = vec![0usize; n_cat];
    for (rank, &code) in order.iter().enumerate() {
        rank_of_code[code] = rank + 1;
    }
    Ok(CategoryEncoding {
        covariate,
        rank_of_code,
    })
}

/// Rank-encodes every nominal covariate, turning the dataset into a purely
/// numeric one ready for training. Returns the encoded dataset and the
/// encodings that were applied (also remembered by the dataset itself).
pub fn encode_dataset(data: &Dataset) -> Result<(Dataset, Vec<CategoryEncoding>)> {
    let mut out = data.clone();
    let mut applied = Vec::new();
    for j in 0..data.p() {
        if data.kinds()[j] != CovariateKind::Nominal {
            continue;
        }
        let enc = order_nominal_categories(data, j)?;
        for v in &mut out.columns[j] {
            *v = enc.rank_of_code[*v as usize - 1] as f64;
        }
        out.kinds[j] = CovariateKind::OrderedCategorical;
        out.encodings[j] = Some(enc.rank_of_code.clone());
        applied.push(enc);
    }
    Ok((out, applied))
}
