//! Command-line front end: each subcommand loads LIBSVM data, runs one
//! operation of the `subopt` library and writes a JSON report, plus an
//! optional plot-ready CSV.
//!
//! Exit codes: 0 success, 1 I/O or data error, 2 usage error, 3 solver did
//! not converge.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use subopt::bounds::{ball_from_suboptimal, validation_bounds, BoundSource};
use subopt::dataset::{parse_libsvm, Dataset, KernelSpec, LabelMode};
use subopt::lasso::{lambda_max, lasso_dual_ball, safe_screen};
use subopt::loss::{EvalSet, LossKind, Problem};
use subopt::selection::{
    epsilon_path, fast_loocv, lr_inference_from_svm, select_model, CandidateGrid,
};
use subopt::trainer::{lasso_epochs, train, ModelRecord, SolverConfig, TrainedModel};

pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "subopt",
    version,
    about = "Certified bounds from suboptimal models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one model and write it as JSON.
    Train(TrainArgs),
    /// Bound validation decision values and error at C from a saved model.
    Bounds(BoundsArgs),
    /// Pruned grid search over C.
    ModelSelect(SelectArgs),
    /// ε-approximate validation-error path over a range of C.
    Path(PathArgs),
    /// Leave-one-out error with certified skips.
    Loocv(LoocvArgs),
    /// Safe feature screening for the Lasso.
    LassoScreen(LassoArgs),
    /// Bound logistic-regression coefficients from a linear SVM.
    LrFromSvm(LrArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LossArg {
    Logistic,
    Hinge,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelArg {
    Linear,
    Rbf,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Training data in LIBSVM format.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "logistic")]
    loss: LossArg,
    #[arg(long, value_enum, default_value = "linear")]
    kernel: KernelArg,
    /// RBF width; defaults to 1/d.
    #[arg(long, value_parser = positive)]
    gamma: Option<f64>,
    /// Solver tolerance on the optimality certificate.
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
}

#[derive(Debug, Args)]
struct ValArgs {
    /// Validation data; without it the training file is split in half.
    #[arg(long)]
    val: Option<PathBuf>,
    /// Seed for the train/validation split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// JSON report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "c", value_parser = positive)]
    c: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    val: ValArgs,
    /// Saved model used as the reference point.
    #[arg(long = "model")]
    model_path: PathBuf,
    /// Regularization value to bound.
    #[arg(long = "c", value_parser = positive)]
    c: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = 0.01, value_parser = positive)]
    c_min: f64,
    #[arg(long, default_value_t = 10000.0, value_parser = positive)]
    c_max: f64,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    val: ValArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 501)]
    c_count: usize,
    /// Per-candidate bounds as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct PathArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    val: ValArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Path segments as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct LoocvArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "c", value_parser = positive)]
    c: f64,
    /// Per-instance outcomes as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct LassoArgs {
    /// Regression data in LIBSVM format.
    #[arg(long)]
    data: PathBuf,
    /// Penalty; overrides --lambda-ratio.
    #[arg(long, value_parser = positive)]
    lambda: Option<f64>,
    /// Penalty as a fraction of λ_max.
    #[arg(long, default_value_t = 0.5, value_parser = positive)]
    lambda_ratio: f64,
    /// Coordinate-descent sweeps used to build the reference dual point.
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct LrArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "c", value_parser = positive)]
    c: f64,
    /// Coefficients to bound (0-based); all features when absent.
    #[arg(long = "coef", value_delimiter = ',')]
    coef: Vec<usize>,
    /// Inputs whose log-odds are bounded.
    #[arg(long)]
    new_data: Option<PathBuf>,
    /// Per-coefficient intervals as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a positive finite number, got {s}"))
    }
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    err: anyhow::Error,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            err: anyhow::anyhow!(msg.into()),
        }
    }
}

impl From<subopt::Error> for Failure {
    fn from(e: subopt::Error) -> Self {
        use subopt::Error as E;
        let code = match &e {
            E::InvalidArgument(_) => EXIT_USAGE,
            E::NotConverged { .. } => EXIT_NOT_CONVERGED,
            _ => EXIT_IO,
        };
        Self {
            code,
            err: e.into(),
        }
    }
}

fn io_failure(e: impl Into<anyhow::Error>, context: String) -> Failure {
    Failure {
        code: EXIT_IO,
        err: e.into().context(context),
    }
}

type Outcome<T> = Result<T, Failure>;

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::ModelSelect(a) => cmd_model_select(a),
        Command::Path(a) => cmd_path(a),
        Command::Loocv(a) => cmd_loocv(a),
        Command::LassoScreen(a) => cmd_lasso_screen(a),
        Command::LrFromSvm(a) => cmd_lr_from_svm(a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            f.code
        }
    }
}

fn load(path: &Path, mode: LabelMode) -> Outcome<Dataset> {
    let file =
        File::open(path).map_err(|e| io_failure(e, format!("reading {}", path.display())))?;
    parse_libsvm(BufReader::new(file), mode)
        .map_err(|e| io_failure(e, format!("parsing {}", path.display())))
}

fn problem(args: &ModelArgs, data: Dataset) -> Outcome<Problem> {
    let kernel = match (args.kernel, args.gamma) {
        (KernelArg::Linear, None) => KernelSpec::Linear,
        (KernelArg::Linear, Some(_)) => return Err(Failure::usage("--gamma needs --kernel rbf")),
        (KernelArg::Rbf, Some(gamma)) => KernelSpec::Rbf { gamma },
        (KernelArg::Rbf, None) => KernelSpec::rbf_default(data.dim()),
    };
    let loss = match args.loss {
        LossArg::Logistic => LossKind::Logistic,
        LossArg::Hinge => LossKind::Hinge,
    };
    data.check_classification()?;
    Ok(Problem::new(data, kernel, loss)?)
}

fn solver(args: &ModelArgs) -> Outcome<SolverConfig> {
    let cfg = SolverConfig {
        tolerance: args.tol,
        max_iters: args.max_iters,
        warm_start: None,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn train_val(model: &ModelArgs, val: &ValArgs) -> Outcome<(Problem, Dataset)> {
    let data = load(&model.data, LabelMode::Classification)?;
    let (train_set, val_set) = match &val.val {
        Some(p) => (data, load(p, LabelMode::Classification)?),
        None => data.split(0.5, val.seed)?,
    };
    val_set.check_classification()?;
    Ok((problem(model, train_set)?, val_set))
}

/// JSON formatter writing every float with 17 significant digits.
struct Fixed;

impl serde_json::ser::Formatter for Fixed {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{}", num(v))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write!(w, "{}", num(v as f64))
    }
}

/// `v` with 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed);
    value.serialize(&mut ser).expect("reports serialize");
    buf.push(b'\n');
    buf
}

fn write_report<T: Serialize>(out: &OutArgs, value: &T) -> Outcome<()> {
    let bytes = to_json(value);
    match &out.out {
        Some(p) => {
            std::fs::write(p, bytes).map_err(|e| io_failure(e, format!("writing {}", p.display())))
        }
        None => io::stdout()
            .write_all(&bytes)
            .map_err(|e| io_failure(e, "writing stdout".into())),
    }
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Outcome<()> {
    let fail = |e: csv::Error| io_failure(e, format!("writing {}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    w.flush()
        .map_err(|e| io_failure(e, format!("writing {}", path.display())))
}

fn cmd_train(a: TrainArgs) -> Outcome<()> {
    let p = problem(&a.model, load(&a.model.data, LabelMode::Classification)?)?;
    let model = train(&p, a.c, &solver(&a.model)?)?;
    write_report(&a.out, &model.to_record(*p.kernel()))
}

#[derive(Serialize)]
struct BoundsReport {
    c: f64,
    reference_c: f64,
    radius: f64,
    error_lo: f64,
    error_hi: f64,
    /// Path bounds from the reference model, when its loss matches.
    curve_error_lo: Option<f64>,
    curve_error_hi: Option<f64>,
    intervals: Vec<subopt::geometry::Interval>,
}

fn cmd_bounds(a: BoundsArgs) -> Outcome<()> {
    let (p, val) = train_val(&a.model, &a.val)?;
    let file = File::open(&a.model_path)
        .map_err(|e| io_failure(e, format!("reading {}", a.model_path.display())))?;
    let record: ModelRecord = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| io_failure(e, format!("parsing {}", a.model_path.display())))?;
    let reference = TrainedModel::from_record(&record, &p)?;
    let eval = EvalSet::new(&p, &val)?;
    let ball = ball_from_suboptimal(&p, &reference.w, a.c)?;
    let single = validation_bounds(BoundSource::Ball(&ball), &eval)?;
    let curve = if reference.loss == p.loss() {
        Some(validation_bounds(
            BoundSource::Curve {
                model: &reference,
                c: a.c,
            },
            &eval,
        )?)
    } else {
        None
    };
    write_report(
        &a.out,
        &BoundsReport {
            c: a.c,
            reference_c: reference.c,
            radius: ball.radius,
            error_lo: single.error_lo,
            error_hi: single.error_hi,
            curve_error_lo: curve.as_ref().map(|v| v.error_lo),
            curve_error_hi: curve.as_ref().map(|v| v.error_hi),
            intervals: single.intervals,
        },
    )
}

#[derive(Serialize)]
struct Candidate {
    c: f64,
    err_lo: f64,
    err_hi: f64,
    solved: bool,
}

#[derive(Serialize)]
struct SelectReport {
    best_index: usize,
    best_c: f64,
    best_error: f64,
    trained_count: usize,
    candidate_count: usize,
    candidates: Vec<Candidate>,
    steps: Vec<subopt::selection::TrainingStep>,
}

fn cmd_model_select(a: SelectArgs) -> Outcome<()> {
    if a.c_count == 0 {
        return Err(Failure::usage("--c-count must be at least 1"));
    }
    if a.c_count > 1 && a.grid.c_min >= a.grid.c_max {
        return Err(Failure::usage("--c-min must be below --c-max"));
    }
    let (p, val) = train_val(&a.model, &a.val)?;
    let grid = CandidateGrid::from_log_range(a.grid.c_min, a.grid.c_max, a.c_count)?;
    let report = select_model(&p, &val, grid, &solver(&a.model)?).map_err(|f| {
        let partial = f.trained_count;
        let mut failure = Failure::from(f.source);
        failure.err = failure.err.context(format!(
            "model selection stopped after {partial} trained models"
        ));
        failure
    })?;
    let g = &report.grid;
    let candidates: Vec<Candidate> = (0..g.len())
        .map(|t| Candidate {
            c: g.values()[t],
            err_lo: g.lower()[t],
            err_hi: g.upper()[t],
            solved: g.trained()[t],
        })
        .collect();
    if let Some(path) = &a.csv {
        let rows = candidates
            .iter()
            .map(|c| {
                vec![
                    num(c.c),
                    num(c.err_lo),
                    num(c.err_hi),
                    (c.solved as u8).to_string(),
                ]
            })
            .collect();
        write_csv(path, &["C", "err_lo", "err_hi", "solved_flag"], rows)?;
    }
    write_report(
        &a.out,
        &SelectReport {
            best_index: report.best_index,
            best_c: report.best_c,
            best_error: report.best_error,
            trained_count: report.trained_count,
            candidate_count: g.len(),
            candidates,
            steps: report.steps,
        },
    )
}

fn cmd_path(a: PathArgs) -> Outcome<()> {
    if !(0.0..=1.0).contains(&a.epsilon) {
        return Err(Failure::usage(format!(
            "--epsilon must lie in [0, 1], got {}",
            a.epsilon
        )));
    }
    if a.grid.c_min > a.grid.c_max {
        return Err(Failure::usage("--c-min must not exceed --c-max"));
    }
    let (p, val) = train_val(&a.model, &a.val)?;
    let report = epsilon_path(
        &p,
        &val,
        a.grid.c_min,
        a.grid.c_max,
        a.epsilon,
        &solver(&a.model)?,
    )?;
    if let Some(path) = &a.csv {
        let rows = report
            .segments
            .iter()
            .map(|s| {
                vec![
                    num(s.c_start),
                    num(s.c_end),
                    num(s.error),
                    (s.certified as u8).to_string(),
                ]
            })
            .collect();
        write_csv(path, &["c_start", "c_end", "error", "certified"], rows)?;
    }
    write_report(&a.out, &report)
}

fn cmd_loocv(a: LoocvArgs) -> Outcome<()> {
    let p = problem(&a.model, load(&a.model.data, LabelMode::Classification)?)?;
    let report = fast_loocv(&p, a.c, &solver(&a.model)?)?;
    if let Some(path) = &a.csv {
        let rows = report
            .instances
            .iter()
            .enumerate()
            .map(|(i, r)| {
                vec![
                    i.to_string(),
                    num(r.interval.lo),
                    num(r.interval.hi),
                    (r.skipped as u8).to_string(),
                    (r.wrong as u8).to_string(),
                ]
            })
            .collect();
        write_csv(path, &["index", "lo", "hi", "skipped", "wrong"], rows)?;
    }
    write_report(&a.out, &report)
}

#[derive(Serialize)]
struct LassoReport {
    lambda: f64,
    lambda_max: f64,
    feature_count: usize,
    screened_indices: Vec<usize>,
    ball_radius: f64,
}

fn cmd_lasso_screen(a: LassoArgs) -> Outcome<()> {
    let data = load(&a.data, LabelMode::Regression)?;
    let x = data.dense_matrix();
    let y = data.label_vector();
    let lmax = lambda_max(&x, &y);
    let lambda = a.lambda.unwrap_or(a.lambda_ratio * lmax);
    let rough = lasso_epochs(&x, &y, lambda, None, a.epochs)?;
    let ball = lasso_dual_ball(&rough.alpha, &y, lambda)?;
    let screened = safe_screen(&x, &ball)?;
    write_report(
        &a.out,
        &LassoReport {
            lambda,
            lambda_max: lmax,
            feature_count: x.ncols(),
            screened_indices: screened,
            ball_radius: ball.radius,
        },
    )
}

#[derive(Serialize)]
struct LrReport {
    svm: ModelRecord,
    inference: subopt::selection::LrInference,
}

fn cmd_lr_from_svm(a: LrArgs) -> Outcome<()> {
    let p = problem(&a.model, load(&a.model.data, LabelMode::Classification)?)?;
    let new_inputs = match &a.new_data {
        Some(path) => load(path, LabelMode::Regression)?.instances().to_vec(),
        None => Vec::new(),
    };
    let coefs: Vec<usize> = if a.coef.is_empty() {
        (0..p.data().dim()).collect()
    } else {
        a.coef.clone()
    };
    let (svm, inference) = lr_inference_from_svm(&p, a.c, &coefs, &new_inputs, &solver(&a.model)?)?;
    if let Some(path) = &a.csv {
        let rows = inference
            .coefficients
            .iter()
            .map(|(j, b)| {
                vec![
                    j.to_string(),
                    num(b.single.lo),
                    num(b.single.hi),
                    num(b.refined.lo),
                    num(b.refined.hi),
                ]
            })
            .collect();
        write_csv(
            path,
            &[
                "coefficient",
                "single_lo",
                "single_hi",
                "refined_lo",
                "refined_hi",
            ],
            rows,
        )?;
    }
    write_report(
        &a.out,
        &LrReport {
            svm: svm.to_record(*p.kernel()),
            inference,
        },
    )
}
