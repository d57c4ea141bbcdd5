//! `sl2kms`: batch checks for KMS states of the extended sl(2) algebra.
//!
//! Exit codes: 0 success, 1 failed check, 2 invalid input, 3 parse error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use sl2kms::parse::{parse_element, parse_function};
use sl2kms::recovery::{chi_fit, ladder_peel, RecoveryError, RecoveryResult};
use sl2kms::repr::{relation_residuals, represent, RelationResiduals, TruncatedRep};
use sl2kms::states::{
    cartan_restriction, chi_closed_form, eval_kms_recursion, eval_trace, ladder_depth_for_tail, uniform_grid,
    CartanMeasure, StateFile, StateSpec,
};
use sl2kms::verify::{gram_psd_check, kms_check_with, support_positivity_check, Dynamics, GramReport, SupportReport};
use sl2kms::{AlgebraElement, FunctionExpr};

#[derive(Parser)]
#[command(name = "sl2kms", version, about = "Normal ordering, representations and KMS states of extended sl(2)")]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Residuals of the defining relations in truncated lowest-weight modules.
    Relations(RelationsArgs),
    /// Evaluate a state on an algebra expression.
    Eval(EvalArgs),
    /// Characteristic function of a state on a uniform t grid (CSV).
    Chi(ChiArgs),
    /// Randomized KMS boundary check.
    KmsCheck(KmsArgs),
    /// Recover (m1, sigma) from a Cartan measure or chi samples.
    #[command(group = clap::ArgGroup::new("source").required(true).multiple(false))]
    Recover(RecoverArgs),
    /// Export the Cartan restriction of a state (JSON).
    Cartan(CartanArgs),
    /// Matrix of an expression in a truncated module (sparse CSV).
    Represent(RepresentArgs),
    /// Gram-matrix and spectrum positivity checks.
    Positivity(PositivityArgs),
}

#[derive(Args)]
struct RelationsArgs {
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Cartan labels F to test; repeatable.
    #[arg(long = "function", default_values_t = ["x".to_string(), "x^2".to_string(), "exp(0.7)".to_string()])]
    functions: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Trace,
    Recursion,
    Both,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    expr: String,
    #[arg(long, value_enum, default_value_t = Method::Trace)]
    method: Method,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args)]
struct ChiArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    t_min: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    t_max: f64,
    #[arg(long, default_value_t = 101)]
    steps: usize,
    /// Add truncated-trace columns and fail if they differ by more than 1e-8.
    #[arg(long)]
    cross_check: bool,
}

#[derive(Args)]
struct KmsArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long, default_value_t = 4)]
    degree: u32,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, env = "SWN_KMS_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Negative control: continue the dynamics with the wrong rate.
    #[arg(long)]
    sabotage_dynamics: bool,
}

#[derive(Args)]
struct RecoverArgs {
    /// Cartan measure JSON (`{"m0"?, "atoms": [{"x", "mass"}]}`).
    #[arg(long, group = "source")]
    cartan: Option<PathBuf>,
    /// CSV with columns t, re_chi, im_chi.
    #[arg(long, group = "source")]
    chi: Option<PathBuf>,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 5)]
    max_atoms: usize,
    /// Defaults to 1e-10 for peeling and 1e-8 for fitting.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct CartanArgs {
    #[arg(long)]
    state: PathBuf,
    /// Cut each ladder once its remaining tail is below this.
    #[arg(long, default_value_t = 1e-16)]
    tail: f64,
}

#[derive(Args)]
struct RepresentArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, allow_hyphen_values = true)]
    expr: String,
}

#[derive(Args)]
struct PositivityArgs {
    #[arg(long)]
    state: PathBuf,
    /// Words for the Gram matrix, separated by ';'.
    #[arg(long, value_delimiter = ';', default_value = "1;X;Y;X Y;Y X;N[x];X N[x]")]
    words: Vec<String>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

/// Why a command stopped early, with its exit code.
enum Failure {
    Invalid(String),
    Parse(String),
    Check(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Parse(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Parse(m) | Failure::Check(m) => m,
        }
    }
}

type Outcome = Result<(), Failure>;

fn invalid(e: impl ToString) -> Failure {
    Failure::Invalid(e.to_string())
}

fn emit(output: Option<&Path>, text: &str) -> Outcome {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| invalid(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))
}

fn load_state(path: &Path) -> Result<StateSpec, Failure> {
    StateSpec::from_json(&read(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn parse_expr(src: &str) -> Result<AlgebraElement, Failure> {
    parse_element(src).map_err(|e| Failure::Parse(e.diagnostic(src)))
}

fn parse_fn(src: &str) -> Result<FunctionExpr, Failure> {
    parse_function(src).map_err(|e| Failure::Parse(e.diagnostic(src)))
}

fn check_positive(name: &str, v: f64) -> Outcome {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive (got {v})")))
    }
}

fn fmt_complex(z: Complex64) -> String {
    format!("{:.12} {:+.12}i", z.re, z.im)
}

#[derive(Serialize)]
struct RelationRow {
    lambda: f64,
    function: String,
    #[serde(flatten)]
    residuals: RelationResiduals,
}

#[derive(Serialize)]
struct RelationsReport {
    dim: usize,
    tol: f64,
    pass: bool,
    max_relation: f64,
    max_adjointness: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
    results: Vec<RelationRow>,
}

fn cmd_relations(args: &RelationsArgs, output: Option<&Path>) -> Outcome {
    for &l in &args.lambda {
        if !(l > 0.0 && l.is_finite()) {
            return Err(invalid(format!("lambda must be positive (got {l})")));
        }
    }
    check_positive("tol", args.tol)?;
    let functions: Vec<FunctionExpr> = args.functions.iter().map(|f| parse_fn(f)).collect::<Result<_, _>>()?;
    let mut warnings = Vec::new();
    if args.dim < 8 {
        let w = format!("safe subspace nearly empty: dim {} leaves {} checked vectors", args.dim, args.dim.saturating_sub(1));
        eprintln!("warning: {w}");
        warnings.push(w);
    }
    let mut results = Vec::new();
    for &lambda in &args.lambda {
        let rep = TruncatedRep::new(lambda, args.dim).map_err(invalid)?;
        for f in &functions {
            results.push(RelationRow { lambda, function: f.to_string(), residuals: relation_residuals(&rep, f) });
        }
    }
    let max_relation = results.iter().map(|r| r.residuals.max_relation()).fold(0.0, f64::max);
    let max_adjointness = results.iter().map(|r| r.residuals.adjointness).fold(0.0, f64::max);
    let pass = max_relation <= args.tol && max_adjointness == 0.0;
    let report = RelationsReport { dim: args.dim, tol: args.tol, pass, max_relation, max_adjointness, warnings, results };
    emit(output, &to_json(&report))?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check(format!("relation residual {max_relation:e} exceeds {:e}", args.tol)))
    }
}

fn cmd_eval(args: &EvalArgs, output: Option<&Path>) -> Outcome {
    check_positive("tol", args.tol)?;
    let state = load_state(&args.state)?;
    let a = parse_expr(&args.expr)?;
    let trace = || eval_trace(&state, &a, args.tol).map_err(invalid);
    let recursion = || eval_kms_recursion(&state.measure(), state.beta(), &a, args.tol).map_err(invalid);
    let text = match args.method {
        Method::Trace => format!("{}\n", fmt_complex(trace()?)),
        Method::Recursion => format!("{}\n", fmt_complex(recursion()?)),
        Method::Both => {
            let (t, r) = (trace()?, recursion()?);
            format!(
                "trace      {}\nrecursion  {}\ndifference {:.3e}\n",
                fmt_complex(t),
                fmt_complex(r),
                (t - r).norm()
            )
        }
    };
    emit(output, &text)
}

fn cmd_chi(args: &ChiArgs, output: Option<&Path>) -> Outcome {
    if args.steps < 2 {
        return Err(invalid(format!("steps must be at least 2 (got {})", args.steps)));
    }
    if args.t_min.partial_cmp(&args.t_max) != Some(std::cmp::Ordering::Less) {
        return Err(invalid("t-min must be below t-max"));
    }
    let state = load_state(&args.state)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| invalid(e);
    if args.cross_check {
        w.write_record(["t", "re_chi", "im_chi", "re_trace", "im_trace", "abs_diff"]).map_err(csv_err)?;
    } else {
        w.write_record(["t", "re_chi", "im_chi"]).map_err(csv_err)?;
    }
    let mut worst = 0.0f64;
    for t in uniform_grid(args.t_min, args.t_max, args.steps) {
        let chi = chi_closed_form(&state, t);
        let mut row = vec![t.to_string(), chi.re.to_string(), chi.im.to_string()];
        if args.cross_check {
            let direct = eval_trace(&state, &AlgebraElement::cartan(FunctionExpr::exp_i(t)), 1e-12).map_err(invalid)?;
            let d = (direct - chi).norm();
            worst = worst.max(d);
            row.extend([direct.re.to_string(), direct.im.to_string(), d.to_string()]);
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| invalid(e.to_string()))?;
    emit(output, &String::from_utf8(bytes).expect("csv is utf-8"))?;
    if args.cross_check {
        eprintln!("max discrepancy: {worst:e}");
        if worst > 1e-8 {
            return Err(Failure::Check(format!("closed form and trace differ by {worst:e}")));
        }
    }
    Ok(())
}

fn cmd_kms_check(args: &KmsArgs, output: Option<&Path>) -> Outcome {
    if args.trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    check_positive("tol", args.tol)?;
    let state = load_state(&args.state)?;
    let dynamics = if args.sabotage_dynamics { Dynamics::Sabotaged } else { Dynamics::Exact };
    let report =
        kms_check_with(&state, args.degree, args.trials, args.seed, args.tol, dynamics).map_err(invalid)?;
    emit(output, &to_json(&report))?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "KMS residual {:e} exceeds {:e}",
            report.max_residual, report.tolerance
        )))
    }
}

#[derive(Deserialize)]
struct ChiRow {
    t: f64,
    re_chi: f64,
    im_chi: f64,
}

fn read_chi(path: &Path) -> Result<Vec<(f64, Complex64)>, Failure> {
    let text = read(path)?;
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
        .into_deserialize::<ChiRow>()
        .map(|row| row.map(|c| (c.t, Complex64::new(c.re_chi, c.im_chi))))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    r.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(r)
}

fn cmd_recover(args: &RecoverArgs, output: Option<&Path>) -> Outcome {
    check_positive("beta", args.beta)?;
    if let Some(tol) = args.tol {
        check_positive("tol", tol)?;
    }
    let result: Result<RecoveryResult, RecoveryError> = if let Some(path) = &args.cartan {
        let cartan = CartanMeasure::from_json_unnormalized(&read(path)?)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        ladder_peel(&cartan, args.beta, args.tol.unwrap_or(1e-10))
    } else {
        let path = args.chi.as_ref().expect("clap requires a source");
        let samples = read_chi(path)?;
        chi_fit(&samples, args.beta, args.max_atoms, args.tol.unwrap_or(1e-8))
    };
    let result = result.map_err(|e| match e {
        RecoveryError::InvalidInput(m) => invalid(m),
        other => Failure::Check(other.to_string()),
    })?;
    let state = StateSpec::mixture(args.beta, result.measure).map_err(invalid)?;
    let mut file = StateFile::from_spec(&state);
    file.residual = Some(result.residual);
    emit(output, &to_json(&file))
}

fn cmd_cartan(args: &CartanArgs, output: Option<&Path>) -> Outcome {
    if !(args.tail > 0.0 && args.tail < 1.0) {
        return Err(invalid(format!("tail must lie in (0, 1) (got {})", args.tail)));
    }
    let state = load_state(&args.state)?;
    let r = cartan_restriction(&state, ladder_depth_for_tail(state.beta(), args.tail));
    emit(output, &to_json(&r.measure))
}

fn cmd_represent(args: &RepresentArgs, output: Option<&Path>) -> Outcome {
    let a = parse_expr(&args.expr)?;
    let rep = TruncatedRep::new(args.lambda, args.dim).map_err(invalid)?;
    let m = represent(&a, &rep);
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| invalid(e);
    w.write_record(["row", "col", "re", "im"]).map_err(csv_err)?;
    for col in 0..m.ncols() {
        for row in 0..m.nrows() {
            let v = m[(row, col)];
            if v != Complex64::new(0.0, 0.0) {
                w.write_record([row.to_string(), col.to_string(), v.re.to_string(), v.im.to_string()])
                    .map_err(csv_err)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| invalid(e.to_string()))?;
    emit(output, &String::from_utf8(bytes).expect("csv is utf-8"))
}

#[derive(Serialize)]
struct PositivityReport {
    words: Vec<String>,
    gram: GramReport,
    support: SupportReport,
    pass: bool,
}

fn cmd_positivity(args: &PositivityArgs, output: Option<&Path>) -> Outcome {
    check_positive("tol", args.tol)?;
    let state = load_state(&args.state)?;
    let words: Vec<AlgebraElement> = args.words.iter().map(|w| parse_expr(w)).collect::<Result<_, _>>()?;
    let gram = gram_psd_check(&state, &words, args.tol).map_err(invalid)?;
    let support = support_positivity_check(&state);
    let pass = gram.pass && support.pass;
    let report = PositivityReport { words: args.words.clone(), gram, support, pass };
    emit(output, &to_json(&report))?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check("positivity check failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = cli.output.as_deref();
    let outcome = match &cli.command {
        Command::Relations(a) => cmd_relations(a, output),
        Command::Eval(a) => cmd_eval(a, output),
        Command::Chi(a) => cmd_chi(a, output),
        Command::KmsCheck(a) => cmd_kms_check(a, output),
        Command::Recover(a) => cmd_recover(a, output),
        Command::Cartan(a) => cmd_cartan(a, output),
        Command::Represent(a) => cmd_represent(a, output),
        Command::Positivity(a) => cmd_positivity(a, output),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message());
            ExitCode::from(f.code())
        }
    }
}
