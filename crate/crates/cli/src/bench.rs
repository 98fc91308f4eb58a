//! Benchmark suites: (method × setting × seed) grids with ordered output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use lsdtw_core::evalbench::synth::eta_grid;
use lsdtw_core::evalbench::{
    alignment_error, align, gen_retrieval_split, generate, retrieval_benchmark, LabeledSequence, Method,
    MethodConfig, SynthSpec,
};
use lsdtw_core::lsdtw::{InitStrategy, LsdtwConfig};
use serde::Serialize;

use crate::cli::{BenchArgs, BenchInit, MethodArg, Suite};
use crate::commands::{ensure_dir, Globals};
use crate::error::{CliError, CliResult};
use crate::formats::{read_sequence, PathJson};

/// One unit of work.
#[derive(Debug, Clone)]
enum Task {
    Align {
        method: Method,
        setting: String,
        seed: u64,
        spec: SynthSpec,
        init: BenchInit,
    },
    Retrieve {
        method: Method,
        setting: String,
        seed: u64,
        n: usize,
        dataset: Dataset,
    },
}

#[derive(Debug, Clone)]
enum Dataset {
    Synthetic { classes: usize, per_class: usize, len: usize, eta: f64 },
    Files { queries: PathBuf, database: PathBuf },
}

/// A finished run, one JSON line.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub suite: &'static str,
    pub method: &'static str,
    pub eta_or_dataset: String,
    pub seed: u64,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<PathJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub wall_ms: f64,
}

impl RunRecord {
    fn value(&self) -> Option<f64> {
        self.error.or(self.accuracy)
    }
}

fn method_of(m: MethodArg) -> Method {
    match m {
        MethodArg::Dtw => Method::Dtw,
        MethodArg::Ctw => Method::Ctw,
        MethodArg::Lsdtw => Method::Lsdtw,
    }
}

/// `start:step:stop` inclusive, or a single value.
pub fn parse_eta(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("--eta: cannot parse {s:?} as a number")))
    };
    match parts.as_slice() {
        [v] => {
            let v = num(v)?;
            if !(v >= 0.0) {
                return Err(CliError::Usage(format!("--eta must be >= 0, got {v}")));
            }
            Ok(vec![v])
        }
        [a, b, c] => eta_grid(num(a)?, num(b)?, num(c)?).map_err(|e| CliError::Usage(format!("--eta: {e}"))),
        _ => Err(CliError::Usage(format!("--eta expects start:step:stop or a value, got {text:?}"))),
    }
}

fn plan(args: &BenchArgs, g: &Globals) -> CliResult<Vec<Task>> {
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let mut methods: Vec<Method> = args.methods.iter().copied().map(method_of).collect();
    methods.dedup();
    let seeds: Vec<u64> = (0..args.runs as u64).map(|r| g.seed.wrapping_add(r)).collect();
    let mut tasks = Vec::new();
    match args.suite {
        Suite::Multimodal => {
            let ny = args.ny.unwrap_or(100);
            let nx = args.nx.unwrap_or(2 * ny);
            for &method in &methods {
                for &seed in &seeds {
                    let spec = SynthSpec {
                        n_x: nx,
                        ..SynthSpec::multimodal(ny, seed)
                    };
                    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                    tasks.push(Task::Align {
                        method,
                        setting: format!("multimodal-{nx}x{ny}"),
                        seed,
                        spec,
                        init: args.lsdtw_init.unwrap_or(BenchInit::Truth),
                    });
                }
            }
        }
        Suite::NongaussianSweep => {
            let etas = parse_eta(args.eta.as_deref().unwrap_or("0:0.6:3.0"))?;
            let (nx, ny) = (args.nx.unwrap_or(100), args.ny.unwrap_or(100));
            for &eta in &etas {
                for &method in &methods {
                    for &seed in &seeds {
                        let spec = SynthSpec::nongaussian(nx, ny, eta, seed);
                        spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                        tasks.push(Task::Align {
                            method,
                            setting: format_eta(eta),
                            seed,
                            spec,
                            init: args.lsdtw_init.unwrap_or(BenchInit::Auto),
                        });
                    }
                }
            }
        }
        Suite::Retrieval => {
            let datasets: Vec<(String, Dataset)> = match (&args.queries, &args.database) {
                (Some(q), Some(d)) => vec![(
                    "files".into(),
                    Dataset::Files {
                        queries: q.clone(),
                        database: d.clone(),
                    },
                )],
                _ => parse_eta(args.eta.as_deref().unwrap_or("1.0"))?
                    .into_iter()
                    .map(|eta| {
                        (
                            format!("synthetic-eta{}", format_eta(eta)),
                            Dataset::Synthetic {
                                classes: args.classes,
                                per_class: args.per_class,
                                len: args.len,
                                eta,
                            },
                        )
                    })
                    .collect(),
            };
            if args.retrieve == 0 {
                return Err(CliError::Usage("--N must be at least 1".into()));
            }
            if let Dataset::Synthetic { classes, per_class, .. } = datasets[0].1 {
                if args.retrieve > classes * per_class {
                    return Err(CliError::Usage(format!(
                        "--N {} exceeds the database size {}",
                        args.retrieve,
                        classes * per_class
                    )));
                }
            }
            for (setting, dataset) in &datasets {
                for &method in &methods {
                    for &seed in &seeds {
                        tasks.push(Task::Retrieve {
                            method,
                            setting: setting.clone(),
                            seed,
                            n: args.retrieve,
                            dataset: dataset.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(tasks)
}

fn format_eta(eta: f64) -> String {
    let s = format!("{eta:.6}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s).to_string()
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Multimodal => "multimodal",
        Suite::NongaussianSweep => "nongaussian-sweep",
        Suite::Retrieval => "retrieval",
    }
}

/// `<dir>/<label>/*.csv`, sorted by label then file name.
pub fn read_labeled_dir(dir: &Path) -> CliResult<Vec<LabeledSequence>> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    entries.sort();
    let mut out = Vec::new();
    for class_dir in entries {
        let label = class_dir.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let mut files: Vec<PathBuf> = fs::read_dir(&class_dir)
            .map_err(|e| CliError::io(&class_dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        for f in files {
            out.push(LabeledSequence {
                label: label.clone(),
                sequence: read_sequence(&f)?,
            });
        }
    }
    if out.is_empty() {
        return Err(CliError::Data(format!("{}: no labeled sequences found", dir.display())));
    }
    Ok(out)
}

fn run_task(task: &Task, suite: &'static str) -> RunRecord {
    let start = Instant::now();
    let rec = |method: Method, setting: &str, seed: u64| RunRecord {
        suite,
        method: method.as_str(),
        eta_or_dataset: setting.to_string(),
        seed,
        status: "ok",
        error: None,
        accuracy: None,
        truth: None,
        estimate: None,
        failed_pairs: None,
        message: None,
        wall_ms: 0.0,
    };
    let mut out = match task {
        Task::Align {
            method,
            setting,
            seed,
            spec,
            init,
        } => {
            let mut r = rec(*method, setting, *seed);
            let outcome = generate(spec).and_then(|data| {
                let lsdtw = LsdtwConfig {
                    seed: *seed,
                    init: match init {
                        BenchInit::Auto => InitStrategy::Auto,
                        BenchInit::Uniform => InitStrategy::Uniform,
                        BenchInit::Ctw => InitStrategy::Ctw,
                        BenchInit::Truth => InitStrategy::Given(data.truth.clone()),
                    },
                    ..LsdtwConfig::default()
                };
                let config = MethodConfig {
                    lsdtw,
                    ..MethodConfig::default()
                };
                let path = align(&data.x, &data.y, *method, &config)?;
                let err = alignment_error(&data.truth, &path)?;
                Ok((data.truth, path, err))
            });
            match outcome {
                Ok((truth, path, err)) => {
                    r.error = Some(err);
                    r.truth = Some((&truth).into());
                    r.estimate = Some((&path).into());
                }
                Err(e) => {
                    r.status = "failed";
                    r.message = Some(e.to_string());
                }
            }
            r
        }
        Task::Retrieve {
            method,
            setting,
            seed,
            n,
            dataset,
        } => {
            let mut r = rec(*method, setting, *seed);
            let split = match dataset {
                Dataset::Synthetic {
                    classes,
                    per_class,
                    len,
                    eta,
                } => gen_retrieval_split(*classes, *per_class, *per_class, *len, *eta, *seed).map_err(|e| e.to_string()),
                Dataset::Files { queries, database } => read_labeled_dir(queries)
                    .and_then(|q| Ok((q, read_labeled_dir(database)?)))
                    .map_err(|e| e.to_string()),
            };
            let config = MethodConfig {
                lsdtw: LsdtwConfig {
                    seed: *seed,
                    ..LsdtwConfig::default()
                },
                ..MethodConfig::default()
            };
            let outcome = split.and_then(|(q, d)| {
                if *n > d.len() {
                    return Err(format!("N = {n} exceeds the database size {}", d.len()));
                }
                retrieval_benchmark(&q, &d, *method, &config).map_err(|e| e.to_string())
            });
            match outcome {
                Ok(report) => {
                    for f in &report.failures {
                        log::warn!(
                            "{} failed on query {} vs item {}: {}",
                            method.as_str(),
                            f.query,
                            f.item,
                            f.error
                        );
                    }
                    r.accuracy = Some(report.at(*n));
                    r.failed_pairs = Some(report.failures.len());
                }
                Err(msg) => {
                    r.status = "failed";
                    r.message = Some(msg);
                }
            }
            r
        }
    };
    out.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    out
}

/// Runs every task on up to `jobs` threads; results come back in task order.
fn execute(tasks: &[Task], suite: &'static str, jobs: usize, quiet: bool) -> Vec<RunRecord> {
    let next = AtomicUsize::new(0);
    let done = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; tasks.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, tasks.len().max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(task) = tasks.get(k) else { break };
                let rec = run_task(task, suite);
                slots.lock().expect("no worker panics while holding the lock")[k] = Some(rec);
                let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
                if !quiet {
                    eprint!("\r{finished}/{} runs", tasks.len());
                }
            });
        }
    });
    if !quiet && !tasks.is_empty() {
        eprintln!();
    }
    slots
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every task ran"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: &'static str,
    pub setting: String,
    pub runs: usize,
    pub failed: usize,
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation per (setting, method), failed runs
/// excluded and counted.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut cells: BTreeMap<(usize, usize), (&'static str, String, Vec<f64>, usize)> = BTreeMap::new();
    let mut setting_order: Vec<String> = Vec::new();
    for r in records {
        let s = match setting_order.iter().position(|s| *s == r.eta_or_dataset) {
            Some(s) => s,
            None => {
                setting_order.push(r.eta_or_dataset.clone());
                setting_order.len() - 1
            }
        };
        let m = Method::parse(r.method).map(|m| m as usize).unwrap_or(usize::MAX);
        let cell = cells
            .entry((s, m))
            .or_insert_with(|| (r.method, r.eta_or_dataset.clone(), Vec::new(), 0));
        match r.value() {
            Some(v) if r.status == "ok" => cell.2.push(v),
            _ => cell.3 += 1,
        }
    }
    cells
        .into_values()
        .map(|(method, setting, values, failed)| {
            let n = values.len();
            let mean = if n > 0 { values.iter().sum::<f64>() / n as f64 } else { f64::NAN };
            let std = if n > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                method,
                setting,
                runs: n,
                failed,
                mean,
                std,
            }
        })
        .collect()
}

fn write_csv<F>(path: &Path, header: &[&str], rows: usize, mut row: F) -> CliResult<()>
where
    F: FnMut(usize) -> Vec<String>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let io_err = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(io_err)?;
    for k in 0..rows {
        w.write_record(row(k)).map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn bench(args: &BenchArgs, g: &Globals) -> CliResult<()> {
    let tasks = plan(args, g)?;
    let suite = suite_name(args.suite);
    let records = execute(&tasks, suite, args.jobs, g.quiet);
    let dir = g.output.clone().unwrap_or_else(|| PathBuf::from("bench-results"));
    ensure_dir(&dir)?;

    let jsonl = dir.join("runs.jsonl");
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r).expect("records serialize"));
        text.push('\n');
    }
    fs::write(&jsonl, text).map_err(|e| CliError::io(&jsonl, e))?;

    let metric = if args.suite == Suite::Retrieval { "accuracy" } else { "error" };
    let runs_csv = dir.join("runs.csv");
    write_csv(&runs_csv, &["method", "eta_or_dataset", "seed", metric, "wall_ms"], records.len(), |k| {
        let r = &records[k];
        vec![
            r.method.to_string(),
            r.eta_or_dataset.clone(),
            r.seed.to_string(),
            r.value().map(|v| format!("{v:?}")).unwrap_or_default(),
            format!("{:.3}", r.wall_ms),
        ]
    })?;

    let summary = summarize(&records);
    let summary_csv = dir.join("summary.csv");
    let mean_col = format!("mean_{metric}");
    let std_col = format!("std_{metric}");
    write_csv(
        &summary_csv,
        &["method", "eta_or_dataset", "runs", "failed", &mean_col, &std_col],
        summary.len(),
        |k| {
            let s = &summary[k];
            vec![
                s.method.to_string(),
                s.setting.clone(),
                s.runs.to_string(),
                s.failed.to_string(),
                format!("{:?}", s.mean),
                format!("{:?}", s.std),
            ]
        },
    )?;
    let failed = records.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        log::warn!("{failed} run(s) failed; see {}", jsonl.display());
    }
    for p in [&jsonl, &runs_csv, &summary_csv] {
        println!("{}", p.display());
    }
    Ok(())
}
