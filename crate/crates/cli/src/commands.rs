use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lsdtw_core::ctw::ctw_align;
use lsdtw_core::evalbench::{alignment_error, generate, SynthKind, SynthSpec};
use lsdtw_core::lsdtw::{select_params, InitStrategy, LsdtwConfig};
use lsdtw_core::lsmi::{cross_validate, default_grid, fit_ratio, KernelParams};
use lsdtw_core::seqcore::{gather_pairs, uniform_init, validate_path};
use lsdtw_core::warp::dtw_align;
use lsdtw_core::AlignmentPath;
use serde::Serialize;

use crate::cli::{AlignArgs, EvalArgs, Format, InitArg, LsdtwOpts, MethodArg, SmiArgs, SynthArgs, SynthKindArg};
use crate::error::{CliError, CliResult, Context};
use crate::formats::{
    emit, read_path, read_sequence, sequence_to_csv, to_json, CtwJson, CvReportJson, DtwJson, LsdtwJson, ParamsJson,
    PathJson,
};

pub struct Globals {
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub quiet: bool,
}

pub fn synth(args: &SynthArgs, g: &Globals) -> CliResult<()> {
    if !(args.eta >= 0.0) {
        return Err(CliError::Usage(format!("--eta must be >= 0, got {}", args.eta)));
    }
    let spec = match args.kind {
        SynthKindArg::Multimodal => SynthSpec {
            n_x: args.nx,
            ..SynthSpec::multimodal(args.ny, g.seed)
        },
        SynthKindArg::Nongaussian => SynthSpec {
            latent_len: args.latent_len.unwrap_or(args.nx.max(args.ny)),
            ..SynthSpec::nongaussian(args.nx, args.ny, args.eta, g.seed)
        },
    };
    let data = generate(&spec).context("generating data")?;
    let dir = g.output.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let files = [
        (dir.join("x.csv"), sequence_to_csv(&data.x)),
        (dir.join("y.csv"), sequence_to_csv(&data.y)),
        (dir.join("truth.json"), to_json(&PathJson::from(&data.truth))),
    ];
    for (path, text) in &files {
        fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    }
    let kind = match spec.kind {
        SynthKind::Multimodal => "multimodal",
        SynthKind::NonGaussian => "nongaussian",
    };
    log::info!("generated {kind} pair ({} x {})", spec.n_x, spec.n_y);
    for (path, _) in &files {
        println!("{}", path.display());
    }
    Ok(())
}

fn lsdtw_config(opts: &LsdtwOpts, seed: u64, n: (usize, usize), ctw: (f64, usize)) -> CliResult<LsdtwConfig> {
    let init = match (&opts.init_path, opts.init) {
        (Some(p), _) => {
            let path = read_path(p)?;
            validate_path(&path, n.0, n.1)
                .map_err(|v| CliError::Data(format!("{}: path does not fit the sequences: {v}", p.display())))?;
            InitStrategy::Given(path)
        }
        (None, InitArg::Auto) => InitStrategy::Auto,
        (None, InitArg::Uniform) => InitStrategy::Uniform,
        (None, InitArg::Ctw) => InitStrategy::Ctw,
    };
    let config = LsdtwConfig {
        max_iterations: opts.max_iter,
        cv_folds: opts.cv_folds,
        seed,
        refit_cv_each_iteration: opts.refit_cv,
        center_cap: opts.center_cap,
        init,
        ctw_epsilon: ctw.0,
        ctw_max_iterations: ctw.1,
        ..LsdtwConfig::default()
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

fn path_csv(path: &AlignmentPath) -> String {
    let (px, py) = path.to_one_based();
    let mut out = String::from("pi_x,pi_y\n");
    for (a, b) in px.iter().zip(&py) {
        out.push_str(&format!("{a},{b}\n"));
    }
    out
}

fn render<T: Serialize>(g: &Globals, record: &T, path: &AlignmentPath) -> String {
    match g.format {
        Format::Json => to_json(record),
        Format::Csv => path_csv(path),
    }
}

pub fn align(args: &AlignArgs, g: &Globals) -> CliResult<()> {
    let x = read_sequence(&args.x)?;
    let y = read_sequence(&args.y)?;
    let start = Instant::now();
    let ms = |s: Instant| s.elapsed().as_secs_f64() * 1e3;
    let text = match args.method {
        MethodArg::Dtw => {
            let (path, cost) = dtw_align(&x, &y).context("dtw")?;
            let rec = DtwJson {
                method: "dtw".into(),
                path: (&path).into(),
                cost,
                wall_ms: ms(start),
            };
            render(g, &rec, &path)
        }
        MethodArg::Ctw => {
            let model = ctw_align(&x, &y, args.ctw.epsilon, args.ctw.ctw_max_iter).context("ctw")?;
            render(g, &CtwJson::new(&model, ms(start)), &model.path)
        }
        MethodArg::Lsdtw => {
            let config = lsdtw_config(
                &args.lsdtw,
                g.seed,
                (x.len(), y.len()),
                (args.ctw.epsilon, args.ctw.ctw_max_iter),
            )?;
            let res = lsdtw_core::lsdtw::lsdtw_align(&x, &y, &config).context("lsdtw")?;
            if res.ctw_failed && !g.quiet {
                log::warn!("CTW initialization failed; started from the uniform path");
            }
            render(g, &LsdtwJson::new(&res, ms(start)), &res.path)
        }
    };
    emit(g.output.as_deref(), &text)
}

#[derive(Serialize)]
struct SmiJson {
    smi: f64,
    m: usize,
    params: ParamsJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    cv: Option<CvReportJson>,
}

pub fn smi(args: &SmiArgs, g: &Globals) -> CliResult<()> {
    let x = read_sequence(&args.x)?;
    let y = read_sequence(&args.y)?;
    let path = match &args.path {
        Some(p) => {
            let path = read_path(p)?;
            validate_path(&path, x.len(), y.len())
                .map_err(|v| CliError::Data(format!("{}: path does not fit the sequences: {v}", p.display())))?;
            path
        }
        None => uniform_init(x.len(), y.len()),
    };
    let pairs = gather_pairs(&x, &y, &path).context("gathering pairs")?;
    let (params, cv) = match (args.sigma_x, args.sigma_y, args.lambda) {
        (Some(sx), Some(sy), Some(l)) => (KernelParams::new(sx, sy, l).map_err(|e| CliError::Usage(e.to_string()))?, None),
        _ => {
            let grid = default_grid(&x, &y).context("kernel grid")?;
            let folds = args.cv_folds.min(pairs.len());
            if folds >= 2 {
                let rep = cross_validate(&pairs, &grid, folds, g.seed, args.center_cap).context("cross-validation")?;
                (rep.selected().params, Some(CvReportJson::from(&rep)))
            } else {
                let config = LsdtwConfig {
                    seed: g.seed,
                    ..LsdtwConfig::default()
                };
                (select_params(&pairs, &grid, &config).context("parameter selection")?, None)
            }
        }
    };
    let fitted = fit_ratio(&pairs, &params, args.center_cap).context("fitting ratio model")?;
    let rec = SmiJson {
        smi: fitted.smi.value,
        m: fitted.smi.m,
        params: (&fitted.model.params).into(),
        cv,
    };
    let text = match g.format {
        Format::Json => to_json(&rec),
        Format::Csv => format!(
            "smi,m,sigma_x,sigma_y,lambda\n{:?},{},{:?},{:?},{:?}\n",
            rec.smi, rec.m, rec.params.sigma_x, rec.params.sigma_y, rec.params.lambda
        ),
    };
    emit(g.output.as_deref(), &text)
}

/// At least six significant digits, and never fewer than six decimals.
pub fn format_error(err: f64) -> String {
    let decimals = if err > 0.0 && err < 1.0 {
        (5 - err.log10().floor() as i64).max(6) as usize
    } else {
        6
    };
    format!("{err:.decimals$}")
}

pub fn eval(args: &EvalArgs, g: &Globals) -> CliResult<()> {
    let truth = read_path(&args.truth)?;
    let estimate = read_path(&args.estimate)?;
    let err = alignment_error(&truth, &estimate).context("alignment error")?;
    let text = match g.format {
        Format::Csv => format!("error\n{}\n", format_error(err)),
        Format::Json => format!("{}\n", format_error(err)),
    };
    emit(g.output.as_deref(), &text)
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
