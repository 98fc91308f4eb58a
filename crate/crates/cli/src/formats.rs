//! On-disk formats: sequence CSV, path JSON and result records.

use std::fs;
use std::io::Write;
use std::path::Path;

use lsdtw_core::ctw::CtwModel;
use lsdtw_core::lsdtw::AlignmentResult;
use lsdtw_core::lsmi::{CvReport, KernelParams};
use lsdtw_core::{AlignmentPath, Sequence};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Context};

/// Parses a sequence from CSV text. A first row with any non-numeric field
/// is treated as a header.
pub fn parse_sequence_csv(text: &str, source: &str) -> CliResult<Sequence> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut dim: Option<usize> = None;
    let mut rows = 0;
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("{source}: {e}")))?;
        let line = record.position().map_or(k as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if k == 0 => continue,
            Err(_) => {
                let bad = record.iter().find(|f| f.parse::<f64>().is_err()).unwrap_or("");
                return Err(CliError::Data(format!("{source}: line {line}: cannot parse {bad:?} as a number")));
            }
        };
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Data(format!("{source}: line {line}: non-finite value {v}")));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(CliError::Data(format!(
                    "{source}: line {line}: expected {d} column(s), found {}",
                    values.len()
                )))
            }
            _ => {}
        }
        data.extend(values);
        rows += 1;
    }
    let Some(d) = dim else {
        return Err(CliError::Data(format!("{source}: no data rows")));
    };
    Sequence::new(data, rows, d).context(source.to_string())
}

pub fn read_sequence(path: &Path) -> CliResult<Sequence> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let seq = parse_sequence_csv(&text, &path.display().to_string())?;
    Ok(match path.file_stem().and_then(|s| s.to_str()) {
        Some(stem) => seq.with_id(stem),
        None => seq,
    })
}

/// CSV text with a `d1,…,dk` header. Values use the shortest representation
/// that parses back to the same `f64`.
pub fn sequence_to_csv(seq: &Sequence) -> String {
    let mut out = String::new();
    let header: Vec<String> = (1..=seq.dim()).map(|c| format!("d{c}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in seq.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathJson {
    pub pi_x: Vec<usize>,
    pub pi_y: Vec<usize>,
    pub m: usize,
}

impl From<&AlignmentPath> for PathJson {
    fn from(path: &AlignmentPath) -> Self {
        let (pi_x, pi_y) = path.to_one_based();
        PathJson {
            m: pi_x.len(),
            pi_x,
            pi_y,
        }
    }
}

impl PathJson {
    pub fn to_path(&self, source: &str) -> CliResult<AlignmentPath> {
        if self.m != self.pi_x.len() || self.m != self.pi_y.len() {
            return Err(CliError::Data(format!(
                "{source}: m = {} but pi_x has {} and pi_y has {} entries",
                self.m,
                self.pi_x.len(),
                self.pi_y.len()
            )));
        }
        let path = AlignmentPath::from_one_based(&self.pi_x, &self.pi_y)
            .map_err(|v| CliError::Data(format!("{source}: invalid alignment path: {v}")))?;
        let (n_x, n_y) = path.grid().expect("m > 0 after validation");
        lsdtw_core::seqcore::validate_path(&path, n_x, n_y)
            .map_err(|v| CliError::Data(format!("{source}: invalid alignment path: {v}")))?;
        Ok(path)
    }
}

pub fn parse_path_json(text: &str, source: &str) -> CliResult<AlignmentPath> {
    let json: PathJson =
        serde_json::from_str(text).map_err(|e| CliError::Data(format!("{source}: malformed path JSON: {e}")))?;
    json.to_path(source)
}

pub fn read_path(path: &Path) -> CliResult<AlignmentPath> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_path_json(&text, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsJson {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub lambda: f64,
}

impl From<&KernelParams> for ParamsJson {
    fn from(p: &KernelParams) -> Self {
        ParamsJson {
            sigma_x: p.sigma_x,
            sigma_y: p.sigma_y,
            lambda: p.lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCandidateJson {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub lambda: f64,
    pub j_kcv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReportJson {
    pub folds: usize,
    pub grid: Vec<CvCandidateJson>,
    pub selected: CvCandidateJson,
}

impl From<&CvReport> for CvReportJson {
    fn from(r: &CvReport) -> Self {
        let cand = |c: &lsdtw_core::lsmi::CvCandidate| CvCandidateJson {
            sigma_x: c.params.sigma_x,
            sigma_y: c.params.sigma_y,
            lambda: c.params.lambda,
            j_kcv: c.score,
        };
        CvReportJson {
            folds: r.folds,
            grid: r.grid.iter().map(cand).collect(),
            selected: cand(r.selected()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwJson {
    pub method: String,
    pub path: PathJson,
    pub cost: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsdtwJson {
    pub method: String,
    pub path: PathJson,
    pub smi_trace: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    pub selected_params: ParamsJson,
    pub init_label: String,
    pub ctw_failed: bool,
    pub wall_ms: f64,
}

impl LsdtwJson {
    pub fn new(r: &AlignmentResult, wall_ms: f64) -> Self {
        LsdtwJson {
            method: "lsdtw".into(),
            path: (&r.path).into(),
            smi_trace: r.smi_trace.clone(),
            iterations_run: r.iterations_run,
            converged: r.converged,
            selected_params: (&r.selected_params).into(),
            init_label: r.init_label.as_str().into(),
            ctw_failed: r.ctw_failed,
            wall_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtwJson {
    pub method: String,
    pub path: PathJson,
    pub iterations_run: usize,
    pub converged: bool,
    pub b: usize,
    pub epsilon: f64,
    pub objective_trace: Vec<f64>,
    pub correlations: Vec<f64>,
    /// Row-major `d_x × b`.
    pub v_x: Vec<Vec<f64>>,
    /// Row-major `d_y × b`.
    pub v_y: Vec<Vec<f64>>,
    pub wall_ms: f64,
}

impl CtwJson {
    pub fn new(m: &CtwModel, wall_ms: f64) -> Self {
        let rows = |v: &lsdtw_core::ctw::Matrix| -> Vec<Vec<f64>> {
            (0..v.nrows()).map(|r| v.row(r).iter().copied().collect()).collect()
        };
        CtwJson {
            method: "ctw".into(),
            path: (&m.path).into(),
            iterations_run: m.iterations_run,
            converged: m.converged,
            b: m.b,
            epsilon: m.epsilon,
            objective_trace: m.objective_trace.clone(),
            correlations: m.correlations.clone(),
            v_x: rows(&m.vx),
            v_y: rows(&m.vy),
            wall_ms,
        }
    }
}

/// Pretty JSON followed by a newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("records serialize");
    s.push('\n');
    s
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}
