//! Paired and surrogate-only datasets, plus CSV / JSON-lines ingestion.
//!
//! Columns follow a fixed convention: `scenario_id`, `F`, `G_1..G_d`,
//! `PHI_1..PHI_m`. A [`Schema`] may rename file columns onto these canonical
//! names. JSON-lines files use the keys `scenario_id`, `f`, `g`, `phi`.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ID_COLUMN: &str = "scenario_id";
pub const TARGET_COLUMN: &str = "F";
pub const SURROGATE_PREFIX: &str = "G_";
pub const FEATURE_PREFIX: &str = "PHI_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub scenario_id: String,
    pub f: f64,
    pub g: Vec<f64>,
    #[serde(default)]
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSample {
    pub scenario_id: String,
    pub g: Vec<f64>,
    #[serde(default)]
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Continuous,
    Binary,
}

impl MetricKind {
    pub fn check(self, f: &[f64]) -> Result<()> {
        match self {
            MetricKind::Continuous => Ok(()),
            MetricKind::Binary => match f.iter().position(|&v| v != 0.0 && v != 1.0) {
                None => Ok(()),
                Some(i) => Err(Error::InvalidArgument(format!(
                    "binary metric requires F in {{0, 1}}; sample {i} has {}",
                    f[i]
                ))),
            },
        }
    }
}

fn check_dims(len: usize, rows: usize, width: usize, context: &'static str) -> Result<()> {
    if len != rows * width {
        return Err(Error::DimensionMismatch {
            context,
            expected: rows * width,
            got: len,
        });
    }
    Ok(())
}

fn check_width(values: &[f64], width: usize, context: &'static str) -> Result<()> {
    if values.len() != width {
        return Err(Error::DimensionMismatch {
            context,
            expected: width,
            got: values.len(),
        });
    }
    Ok(())
}

fn check_finite(values: &[f64], width: usize, what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::InvalidArgument(format!(
            "sample {} has a non-finite {what} value",
            i.checked_div(width).unwrap_or(0)
        ))),
    }
}

fn row(values: &[f64], width: usize, i: usize) -> &[f64] {
    &values[i * width..(i + 1) * width]
}

fn scenario_id(ids: &Option<Vec<String>>, i: usize) -> Cow<'_, str> {
    match ids {
        Some(ids) => Cow::Borrowed(ids[i].as_str()),
        None => Cow::Owned(i.to_string()),
    }
}

fn select_ids(ids: &Option<Vec<String>>, indices: &[usize]) -> Option<Vec<String>> {
    ids.as_ref()
        .map(|ids| indices.iter().map(|&i| ids[i].clone()).collect())
}

fn select_rows(values: &[f64], width: usize, indices: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(indices.len() * width);
    for &i in indices {
        out.extend_from_slice(row(values, width, i));
    }
    out
}

fn concat_ids(
    a: &Option<Vec<String>>,
    a_len: usize,
    b: &Option<Vec<String>>,
    b_len: usize,
) -> Option<Vec<String>> {
    if a.is_none() && b.is_none() {
        return None;
    }
    let mut ids: Vec<String> = (0..a_len).map(|i| scenario_id(a, i).into_owned()).collect();
    ids.extend((0..b_len).map(|i| scenario_id(b, i).into_owned()));
    Some(ids)
}

/// `n` samples of the target metric paired with surrogate and feature vectors.
///
/// Stored column-wise: `g` and `phi` are row-major `n x d` and `n x m`.
/// Scenario ids are informational; `None` means positional ids `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    ids: Option<Vec<String>>,
    f: Vec<f64>,
    g: Vec<f64>,
    phi: Vec<f64>,
    d: usize,
    m: usize,
}

impl PairedDataset {
    pub fn from_parts(
        ids: Option<Vec<String>>,
        f: Vec<f64>,
        g: Vec<f64>,
        phi: Vec<f64>,
        d: usize,
        m: usize,
    ) -> Result<Self> {
        let n = f.len();
        if let Some(ids) = &ids {
            check_dims(ids.len(), n, 1, "scenario ids")?;
        }
        check_dims(g.len(), n, d, "surrogate matrix")?;
        check_dims(phi.len(), n, m, "feature matrix")?;
        check_finite(&f, 1, "target")?;
        check_finite(&g, d, "surrogate")?;
        check_finite(&phi, m, "feature")?;
        Ok(Self {
            ids,
            f,
            g,
            phi,
            d,
            m,
        })
    }

    /// Builds a feature-less dataset from a target column and a row-major
    /// `n x d` surrogate matrix.
    pub fn from_columns(f: Vec<f64>, g: Vec<f64>, d: usize) -> Result<Self> {
        Self::from_parts(None, f, g, Vec::new(), d, 0)
    }

    pub fn from_samples(samples: Vec<PairedSample>, d: usize, m: usize) -> Result<Self> {
        let n = samples.len();
        let mut ids = Vec::with_capacity(n);
        let mut f = Vec::with_capacity(n);
        let mut g = Vec::with_capacity(n * d);
        let mut phi = Vec::with_capacity(n * m);
        for s in samples {
            check_width(&s.g, d, "surrogate vector")?;
            check_width(&s.phi, m, "feature vector")?;
            ids.push(s.scenario_id);
            f.push(s.f);
            g.extend(s.g);
            phi.extend(s.phi);
        }
        Self::from_parts(Some(ids), f, g, phi, d, m)
    }

    pub fn empty(d: usize, m: usize) -> Self {
        Self {
            ids: None,
            f: Vec::new(),
            g: Vec::new(),
            phi: Vec::new(),
            d,
            m,
        }
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    /// Row-major `n x d` surrogate matrix.
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    /// Row-major `n x m` feature matrix.
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn g_row(&self, i: usize) -> &[f64] {
        row(&self.g, self.d, i)
    }

    pub fn phi_row(&self, i: usize) -> &[f64] {
        row(&self.phi, self.m, i)
    }

    pub fn scenario_id(&self, i: usize) -> Cow<'_, str> {
        scenario_id(&self.ids, i)
    }

    pub fn sample(&self, i: usize) -> PairedSample {
        PairedSample {
            scenario_id: self.scenario_id(i).into_owned(),
            f: self.f[i],
            g: self.g_row(i).to_vec(),
            phi: self.phi_row(i).to_vec(),
        }
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            ids: select_ids(&self.ids, indices),
            f: indices.iter().map(|&i| self.f[i]).collect(),
            g: select_rows(&self.g, self.d, indices),
            phi: select_rows(&self.phi, self.m, indices),
            d: self.d,
            m: self.m,
        }
    }

    /// Drops the target column.
    pub fn to_surrogate(&self) -> SurrogateDataset {
        SurrogateDataset {
            ids: self.ids.clone(),
            k: self.len(),
            g: self.g.clone(),
            phi: self.phi.clone(),
            d: self.d,
            m: self.m,
        }
    }

    /// Same rows with the surrogate matrix replaced by a `n x d` matrix.
    pub fn with_surrogates(&self, g: Vec<f64>, d: usize) -> Result<Self> {
        check_dims(g.len(), self.len(), d, "surrogate matrix")?;
        check_finite(&g, d, "surrogate")?;
        Ok(Self {
            g,
            d,
            ..self.clone()
        })
    }

    /// Concatenates two datasets with equal dimensions.
    pub fn concat(&self, other: &PairedDataset) -> Result<PairedDataset> {
        if other.d != self.d {
            return Err(Error::DimensionMismatch {
                context: "surrogate dimension",
                expected: self.d,
                got: other.d,
            });
        }
        if other.m != self.m {
            return Err(Error::DimensionMismatch {
                context: "feature dimension",
                expected: self.m,
                got: other.m,
            });
        }
        let mut f = self.f.clone();
        f.extend_from_slice(&other.f);
        let mut g = self.g.clone();
        g.extend_from_slice(&other.g);
        let mut phi = self.phi.clone();
        phi.extend_from_slice(&other.phi);
        Ok(PairedDataset {
            ids: concat_ids(&self.ids, self.len(), &other.ids, other.len()),
            f,
            g,
            phi,
            d: self.d,
            m: self.m,
        })
    }
}

/// `k` surrogate-only samples, stored like [`PairedDataset`] without `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateDataset {
    ids: Option<Vec<String>>,
    k: usize,
    g: Vec<f64>,
    phi: Vec<f64>,
    d: usize,
    m: usize,
}

impl SurrogateDataset {
    pub fn from_parts(
        ids: Option<Vec<String>>,
        k: usize,
        g: Vec<f64>,
        phi: Vec<f64>,
        d: usize,
        m: usize,
    ) -> Result<Self> {
        if let Some(ids) = &ids {
            check_dims(ids.len(), k, 1, "scenario ids")?;
        }
        check_dims(g.len(), k, d, "surrogate matrix")?;
        check_dims(phi.len(), k, m, "feature matrix")?;
        check_finite(&g, d, "surrogate")?;
        check_finite(&phi, m, "feature")?;
        Ok(Self {
            ids,
            k,
            g,
            phi,
            d,
            m,
        })
    }

    /// Builds a feature-less pool from a row-major `k x d` surrogate matrix.
    pub fn from_columns(g: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument(
                "cannot infer pool size from a zero-width matrix".into(),
            ));
        }
        Self::from_parts(None, g.len() / d, g, Vec::new(), d, 0)
    }

    pub fn from_samples(samples: Vec<SurrogateSample>, d: usize, m: usize) -> Result<Self> {
        let mut ids = Vec::with_capacity(samples.len());
        let mut g = Vec::with_capacity(samples.len() * d);
        let mut phi = Vec::with_capacity(samples.len() * m);
        for s in samples {
            check_width(&s.g, d, "surrogate vector")?;
            check_width(&s.phi, m, "feature vector")?;
            ids.push(s.scenario_id);
            g.extend(s.g);
            phi.extend(s.phi);
        }
        Self::from_parts(Some(ids.clone()), ids.len(), g, phi, d, m)
    }

    pub fn empty(d: usize, m: usize) -> Self {
        Self {
            ids: None,
            k: 0,
            g: Vec::new(),
            phi: Vec::new(),
            d,
            m,
        }
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn g_row(&self, i: usize) -> &[f64] {
        row(&self.g, self.d, i)
    }

    pub fn phi_row(&self, i: usize) -> &[f64] {
        row(&self.phi, self.m, i)
    }

    pub fn scenario_id(&self, i: usize) -> Cow<'_, str> {
        scenario_id(&self.ids, i)
    }

    pub fn sample(&self, i: usize) -> SurrogateSample {
        SurrogateSample {
            scenario_id: self.scenario_id(i).into_owned(),
            g: self.g_row(i).to_vec(),
            phi: self.phi_row(i).to_vec(),
        }
    }

    /// Same rows with the surrogate matrix replaced by a `k x d` matrix.
    pub fn with_surrogates(&self, g: Vec<f64>, d: usize) -> Result<Self> {
        check_dims(g.len(), self.k, d, "surrogate matrix")?;
        check_finite(&g, d, "surrogate")?;
        Ok(Self {
            g,
            d,
            ..self.clone()
        })
    }
}

/// Checks that a surrogate pool can be used with a paired dataset.
///
/// `d` must always agree. `m` must agree only when features feed an MCF.
/// An empty JSON-lines pool carries no dimension information and is accepted.
pub fn check_compatibility(
    paired: &PairedDataset,
    surrogate: &SurrogateDataset,
    features_used: bool,
) -> Result<()> {
    let unknown_dims = surrogate.is_empty() && surrogate.d == 0 && surrogate.m == 0;
    if unknown_dims {
        return Ok(());
    }
    if paired.d != surrogate.d {
        return Err(Error::DimensionMismatch {
            context: "surrogate dimension",
            expected: paired.d,
            got: surrogate.d,
        });
    }
    if features_used && paired.m != surrogate.m {
        return Err(Error::DimensionMismatch {
            context: "feature dimension",
            expected: paired.m,
            got: surrogate.m,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Csv,
    JsonLines,
}

impl FileFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("csv") => Ok(FileFormat::Csv),
            Some("jsonl") | Some("ndjson") => Ok(FileFormat::JsonLines),
            _ => Err(Error::Schema(format!(
                "{}: unsupported extension (expected .csv, .jsonl or .ndjson)",
                path.display()
            ))),
        }
    }
}

/// Column naming for CSV files.
///
/// `renames` maps a header name found in the file onto a canonical name
/// (`scenario_id`, `F`, `G_i`, `PHI_i`). `expected_d` / `expected_m`, when
/// set, pin the dimensions the file must declare.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default)]
    pub renames: BTreeMap<String, String>,
    #[serde(default)]
    pub expected_d: Option<usize>,
    #[serde(default)]
    pub expected_m: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    Id,
    Target,
    Surrogate(usize),
    Feature(usize),
}

#[derive(Debug)]
struct Layout {
    columns: Vec<Column>,
    d: usize,
    m: usize,
}

fn indexed(name: &str, prefix: &str) -> Option<usize> {
    let idx: usize = name.strip_prefix(prefix)?.parse().ok()?;
    (idx >= 1).then_some(idx - 1)
}

fn contiguous(indices: &mut [usize], what: &str) -> Result<usize> {
    indices.sort_unstable();
    for (expect, &got) in indices.iter().enumerate() {
        if got != expect {
            return Err(Error::Schema(format!(
                "{what} columns must be numbered 1..{} without gaps or repeats",
                indices.len()
            )));
        }
    }
    Ok(indices.len())
}

impl Schema {
    fn layout(&self, header: &csv::StringRecord, want_target: bool) -> Result<Layout> {
        let mut columns = Vec::with_capacity(header.len());
        let mut g_idx = Vec::new();
        let mut phi_idx = Vec::new();
        let mut has_target = false;
        let mut has_id = false;
        for raw in header.iter() {
            let name = self
                .renames
                .get(raw)
                .map(String::as_str)
                .unwrap_or(raw)
                .trim();
            let col = if name == ID_COLUMN {
                if has_id {
                    return Err(Error::Schema(format!("duplicate column `{ID_COLUMN}`")));
                }
                has_id = true;
                Column::Id
            } else if name == TARGET_COLUMN {
                if has_target {
                    return Err(Error::Schema(format!("duplicate column `{TARGET_COLUMN}`")));
                }
                has_target = true;
                Column::Target
            } else if let Some(i) = indexed(name, SURROGATE_PREFIX) {
                g_idx.push(i);
                Column::Surrogate(i)
            } else if let Some(i) = indexed(name, FEATURE_PREFIX) {
                phi_idx.push(i);
                Column::Feature(i)
            } else {
                return Err(Error::Schema(format!("unrecognized column `{raw}`")));
            };
            columns.push(col);
        }
        if want_target && !has_target {
            return Err(Error::Schema(format!(
                "missing required column `{TARGET_COLUMN}`"
            )));
        }
        let d = contiguous(&mut g_idx, "surrogate")?;
        let m = contiguous(&mut phi_idx, "feature")?;
        if let Some(expected) = self.expected_d {
            if expected != d {
                return Err(Error::Schema(format!(
                    "declared {expected} surrogate columns, file has {d}"
                )));
            }
        }
        if let Some(expected) = self.expected_m {
            if expected != m {
                return Err(Error::Schema(format!(
                    "declared {expected} feature columns, file has {m}"
                )));
            }
        }
        Ok(Layout { columns, d, m })
    }
}

struct Row {
    id: Option<String>,
    f: Option<f64>,
    g: Vec<f64>,
    phi: Vec<f64>,
}

fn parse_value(path: &Path, line: usize, column: &str, text: &str) -> Result<f64> {
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::parse(path, line, format!("missing value in `{column}`")));
    }
    let v: f64 = text
        .parse()
        .map_err(|_| Error::parse(path, line, format!("invalid number `{text}` in `{column}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, line, format!("non-finite value `{text}` in `{column}`")));
    }
    Ok(v)
}

/// Rows tagged with their 1-based file line, plus the inferred `d` and `m`.
type RowsWithDims = (Vec<(usize, Row)>, usize, usize);

fn read_csv_rows(
    path: &Path,
    schema: &Schema,
    want_target: bool,
) -> Result<RowsWithDims> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(BufReader::new(file));
    let header = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Schema(format!("{}: missing header row", path.display())));
    }
    let layout = schema.layout(&header, want_target)?;
    let mut rows = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = reader.read_record(&mut record).map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            let message = match e.kind() {
                csv::ErrorKind::UnequalLengths {
                    expected_len, len, ..
                } => format!("expected {expected_len} fields, found {len}"),
                _ => e.to_string(),
            };
            Error::parse(path, line, message)
        })?;
        if !more {
            break;
        }
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let mut row = Row {
            id: None,
            f: None,
            g: vec![0.0; layout.d],
            phi: vec![0.0; layout.m],
        };
        for (text, (col, name)) in record.iter().zip(layout.columns.iter().zip(header.iter())) {
            match *col {
                Column::Id => row.id = Some(text.to_string()),
                Column::Target if want_target => {
                    row.f = Some(parse_value(path, line, name, text)?)
                }
                Column::Target => {}
                Column::Surrogate(i) => row.g[i] = parse_value(path, line, name, text)?,
                Column::Feature(i) => row.phi[i] = parse_value(path, line, name, text)?,
            }
        }
        rows.push((line, row));
    }
    Ok((rows, layout.d, layout.m))
}

#[derive(Deserialize)]
struct JsonRecord {
    #[serde(default)]
    scenario_id: Option<serde_json::Value>,
    #[serde(default)]
    f: Option<f64>,
    g: Vec<f64>,
    #[serde(default)]
    phi: Vec<f64>,
}

fn read_jsonl_rows(
    path: &Path,
    want_target: bool,
) -> Result<RowsWithDims> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    let mut dims: Option<(usize, usize)> = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        if want_target && rec.f.is_none() {
            return Err(Error::parse(path, line_no, "missing key `f`"));
        }
        let (d, m) = *dims.get_or_insert((rec.g.len(), rec.phi.len()));
        if rec.g.len() != d || rec.phi.len() != m {
            return Err(Error::parse(
                path,
                line_no,
                format!(
                    "dimension change: expected g[{d}], phi[{m}], found g[{}], phi[{}]",
                    rec.g.len(),
                    rec.phi.len()
                ),
            ));
        }
        let f = if want_target { rec.f } else { None };
        if f.iter().chain(&rec.g).chain(&rec.phi).any(|v| !v.is_finite()) {
            return Err(Error::parse(path, line_no, "non-finite value"));
        }
        let id = rec.scenario_id.map(|v| match v {
            serde_json::Value::String(s) => s,
            other => other.to_string(),
        });
        rows.push((
            line_no,
            Row {
                id,
                f,
                g: rec.g,
                phi: rec.phi,
            },
        ));
    }
    let (d, m) = dims.unwrap_or((0, 0));
    Ok((rows, d, m))
}

fn read_rows(
    path: &Path,
    schema: &Schema,
    want_target: bool,
) -> Result<RowsWithDims> {
    match FileFormat::from_path(path)? {
        FileFormat::Csv => read_csv_rows(path, schema, want_target),
        FileFormat::JsonLines => {
            let (rows, d, m) = read_jsonl_rows(path, want_target)?;
            if !rows.is_empty() {
                if let Some(expected) = schema.expected_d.filter(|&e| e != d) {
                    return Err(Error::Schema(format!(
                        "declared {expected} surrogate values, file has {d}"
                    )));
                }
                if let Some(expected) = schema.expected_m.filter(|&e| e != m) {
                    return Err(Error::Schema(format!(
                        "declared {expected} feature values, file has {m}"
                    )));
                }
            }
            Ok((rows, d, m))
        }
    }
}

fn ids_of(rows: &[(usize, Row)]) -> Option<Vec<String>> {
    if rows.iter().all(|(_, r)| r.id.is_none()) {
        return None;
    }
    Some(
        rows.iter()
            .enumerate()
            .map(|(i, (_, r))| r.id.clone().unwrap_or_else(|| i.to_string()))
            .collect(),
    )
}

/// Loads a paired dataset. Requires at least two rows.
pub fn load_paired(path: impl AsRef<Path>, schema: &Schema) -> Result<PairedDataset> {
    let path = path.as_ref();
    let (rows, d, m) = read_rows(path, schema, true)?;
    if rows.len() < 2 {
        return Err(Error::EmptyDataset {
            required: 2,
            got: rows.len(),
        });
    }
    let ids = ids_of(&rows);
    let mut f = Vec::with_capacity(rows.len());
    let mut g = Vec::with_capacity(rows.len() * d);
    let mut phi = Vec::with_capacity(rows.len() * m);
    for (line, row) in rows {
        f.push(
            row.f
                .ok_or_else(|| Error::parse(path, line, "missing target value"))?,
        );
        g.extend(row.g);
        phi.extend(row.phi);
    }
    PairedDataset::from_parts(ids, f, g, phi, d, m)
}

/// Loads a surrogate-only pool. Zero rows is a valid (empty) pool. A target
/// column, if present, is ignored.
pub fn load_surrogate(path: impl AsRef<Path>, schema: &Schema) -> Result<SurrogateDataset> {
    let (rows, d, m) = read_rows(path.as_ref(), schema, false)?;
    let ids = ids_of(&rows);
    let k = rows.len();
    let mut g = Vec::with_capacity(k * d);
    let mut phi = Vec::with_capacity(k * m);
    for (_, row) in rows {
        g.extend(row.g);
        phi.extend(row.phi);
    }
    SurrogateDataset::from_parts(ids, k, g, phi, d, m)
}

fn csv_header(target: bool, d: usize, m: usize) -> Vec<String> {
    let mut header = vec![ID_COLUMN.to_string()];
    if target {
        header.push(TARGET_COLUMN.to_string());
    }
    header.extend((1..=d).map(|i| format!("{SURROGATE_PREFIX}{i}")));
    header.extend((1..=m).map(|i| format!("{FEATURE_PREFIX}{i}")));
    header
}

// `Display` for f64 prints the shortest string that parses back to the same
// value, which keeps writes bit-exact.
fn write_records<'a>(
    path: &Path,
    header: Vec<String>,
    rows: impl Iterator<Item = (Cow<'a, str>, Option<f64>, &'a [f64], &'a [f64])>,
) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    match FileFormat::from_path(path)? {
        FileFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&header).map_err(csv_io)?;
            for (id, f, g, phi) in rows {
                let mut rec = vec![id.to_string()];
                rec.extend(f.map(|v| v.to_string()));
                rec.extend(g.iter().chain(phi).map(|v| v.to_string()));
                w.write_record(&rec).map_err(csv_io)?;
            }
            w.flush()?;
        }
        FileFormat::JsonLines => {
            let mut out = out;
            for (id, f, g, phi) in rows {
                let mut obj = serde_json::Map::new();
                obj.insert("scenario_id".into(), id.into_owned().into());
                if let Some(f) = f {
                    obj.insert("f".into(), f.into());
                }
                obj.insert("g".into(), g.to_vec().into());
                if !phi.is_empty() {
                    obj.insert("phi".into(), phi.to_vec().into());
                }
                serde_json::to_writer(&mut out, &obj)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn write_paired(path: impl AsRef<Path>, data: &PairedDataset) -> Result<()> {
    let rows = (0..data.len()).map(|i| {
        (
            data.scenario_id(i),
            Some(data.f[i]),
            data.g_row(i),
            data.phi_row(i),
        )
    });
    write_records(path.as_ref(), csv_header(true, data.d, data.m), rows)
}

pub fn write_surrogate(path: impl AsRef<Path>, data: &SurrogateDataset) -> Result<()> {
    let rows = (0..data.len()).map(|i| (data.scenario_id(i), None, data.g_row(i), data.phi_row(i)));
    write_records(path.as_ref(), csv_header(false, data.d, data.m), rows)
}
