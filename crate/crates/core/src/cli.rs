//! Command-line front end: `flatdec analyze|decompose|verify <file.fds>`.
//!
//! Every command prints a plain-text summary and, with `--report`, writes a
//! JSON report with sorted keys. Reports contain no timings unless
//! `--timings` is given, so identical invocations produce identical bytes.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::decompose::{run_decomposition, AnsatzConfig, DecompositionResult, Status};
use crate::pfaffian::{Distribution, PfaffianSystem};
use crate::symexpr::{Expr, ZeroTest};
use crate::sysdsl::{parse_expr, parse_system_with, ControlSystem};
use crate::triangular::{
    extract_flat_output, verify_flatness_numeric, FlatnessCertificate, TrialOutcome, TriangularDecomposition, Verdict, VerifyOptions,
};

pub const SCHEMA: &str = "flatdec/1";

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    ParseError = 1,
    Internal = 2,
    Inconclusive = 3,
    VerifyFailed = 4,
}

#[derive(Parser, Debug)]
#[command(name = "flatdec", version, about = "Implicit triangular decomposition and flat outputs of control systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Pfaffian basis, derived flag and vertical annihilator.
    Analyze(CommonArgs),
    /// Search for a triangular decomposition and extract flat outputs.
    Decompose(DecomposeArgs),
    /// Validate a certificate and check flatness numerically.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// System description in `.fds` syntax.
    pub file: PathBuf,
    /// Seed of the zero test and of the numeric verification.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sample points of the probabilistic zero test.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Maximal degree of ansatz monomials.
    #[arg(long, default_value_t = 2)]
    pub max_degree: u32,
    /// Maximal number of splittings.
    #[arg(long, default_value_t = 8)]
    pub max_depth: usize,
    /// Maximal number of splittings explored per level.
    #[arg(long, default_value_t = 8)]
    pub branch_width: usize,
    /// Write the JSON report to this path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args, Debug, Clone)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Run the numeric flatness check on the certificate.
    #[arg(long)]
    pub verify: bool,
    /// Trials of the numeric flatness check.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Certificate JSON, or a report of `decompose` containing one.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
    /// Claimed flat outputs, comma separated, e.g. `x3,x2`.
    #[arg(long)]
    pub outputs: Option<String>,
    /// Trials of the numeric flatness check.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
}

/// Result of one command: exit code, JSON report and text summary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: ExitCode,
    pub report: Value,
    pub summary: String,
}

struct Failure {
    code: ExitCode,
    message: String,
}

fn fail(code: ExitCode, message: impl ToString) -> Failure {
    Failure { code, message: message.to_string() }
}

fn internal(e: impl ToString) -> Failure {
    fail(ExitCode::Internal, e)
}

/// Parses arguments, runs the command, writes the report and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::ParseError as i32 } else { ExitCode::Ok as i32 };
        }
    };
    let outcome = run(&cli.command);
    print!("{}", outcome.summary);
    let common = match &cli.command {
        Command::Analyze(c) => c,
        Command::Decompose(d) => &d.common,
        Command::Verify(v) => &v.common,
    };
    if let Some(path) = &common.report {
        if let Err(e) = std::fs::write(path, render_report(&outcome.report)) {
            eprintln!("error: cannot write report {}: {e}", path.display());
            return ExitCode::Internal as i32;
        }
    }
    outcome.code as i32
}

/// Serializes a report with sorted keys and two-space indentation.
pub fn render_report(report: &Value) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report values serialize");
    text.push('\n');
    text
}

/// Runs a command without touching the file system except for reading inputs.
pub fn run(command: &Command) -> Outcome {
    let (name, common) = match command {
        Command::Analyze(c) => ("analyze", c),
        Command::Decompose(d) => ("decompose", &d.common),
        Command::Verify(v) => ("verify", &v.common),
    };
    let mut report = Map::new();
    report.insert("schema".into(), json!(SCHEMA));
    report.insert("command".into(), json!(name));
    report.insert("config".into(), config_echo(command));
    let mut summary = String::new();
    let mut clock = Clock::new(common.timings);
    let result = load(common, &mut report).and_then(|cs| match command {
        Command::Analyze(c) => analyze(&cs, &zero_test(c), &mut report, &mut summary, &mut clock),
        Command::Decompose(d) => decompose(&cs, d, &mut report, &mut summary, &mut clock),
        Command::Verify(v) => verify(&cs, v, &mut report, &mut summary, &mut clock),
    });
    if let Some(t) = clock.finish() {
        report.insert("timings_ms".into(), t);
    }
    let code = match result {
        Ok(code) => code,
        Err(f) => {
            report.insert("error".into(), json!(f.message));
            let _ = writeln!(summary, "error: {}", f.message);
            f.code
        }
    };
    report.insert("exit_code".into(), json!(code as i32));
    Outcome { code, report: Value::Object(report), summary }
}

struct Clock {
    enabled: bool,
    start: Instant,
    stages: Map<String, Value>,
}

impl Clock {
    fn new(enabled: bool) -> Clock {
        Clock { enabled, start: Instant::now(), stages: Map::new() }
    }

    fn lap(&mut self, stage: &str) {
        if self.enabled {
            let ms = self.start.elapsed().as_secs_f64() * 1e3;
            self.stages.insert(stage.into(), json!(ms));
        }
    }

    fn finish(mut self) -> Option<Value> {
        self.lap("total");
        self.enabled.then_some(Value::Object(self.stages))
    }
}

fn zero_test(c: &CommonArgs) -> ZeroTest {
    ZeroTest::new(c.samples, c.seed)
}

fn ansatz(c: &CommonArgs) -> AnsatzConfig {
    AnsatzConfig {
        max_degree: c.max_degree,
        max_depth: c.max_depth,
        branch_width: c.branch_width,
        zero_test: zero_test(c),
        ..AnsatzConfig::default()
    }
}

fn config_echo(command: &Command) -> Value {
    let (c, trials) = match command {
        Command::Analyze(c) => (c, None),
        Command::Decompose(d) => (&d.common, d.verify.then_some(d.trials)),
        Command::Verify(v) => (&v.common, Some(v.trials)),
    };
    let mut m = Map::new();
    m.insert("seed".into(), json!(c.seed));
    m.insert("samples".into(), json!(c.samples));
    m.insert("max_degree".into(), json!(c.max_degree));
    m.insert("max_depth".into(), json!(c.max_depth));
    m.insert("branch_width".into(), json!(c.branch_width));
    if let Some(t) = trials {
        m.insert("trials".into(), json!(t));
    }
    Value::Object(m)
}

fn load(c: &CommonArgs, report: &mut Map<String, Value>) -> Result<ControlSystem, Failure> {
    let bytes = std::fs::read(&c.file).map_err(|e| fail(ExitCode::ParseError, format!("cannot read {}: {e}", c.file.display())))?;
    let digest = format!("{:x}", Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|_| fail(ExitCode::ParseError, "input is not UTF-8"))?;
    report.insert("input".into(), json!({ "sha256": digest }));
    let cs = parse_system_with(&text, &zero_test(c)).map_err(|e| fail(ExitCode::ParseError, e))?;
    report.insert(
        "system".into(),
        json!({
            "name": cs.name,
            "states": names(&cs.states),
            "inputs": names(&cs.inputs),
            "dynamics": cs.dynamics.iter().map(Expr::to_string).collect::<Vec<_>>(),
        }),
    );
    Ok(cs)
}

fn names(symbols: &[crate::symexpr::Symbol]) -> Vec<String> {
    symbols.iter().map(|s| s.name().to_string()).collect()
}

fn forms(s: &PfaffianSystem) -> Value {
    json!(s.generators().iter().map(ToString::to_string).collect::<Vec<_>>())
}

fn fields(d: &Distribution) -> Value {
    json!(d.generators().iter().map(ToString::to_string).collect::<Vec<_>>())
}

fn analyze(
    cs: &ControlSystem,
    zt: &ZeroTest,
    report: &mut Map<String, Value>,
    summary: &mut String,
    clock: &mut Clock,
) -> Result<ExitCode, Failure> {
    let s0 = PfaffianSystem::from_control_system(cs);
    let flag = s0.derived_flag(zt).map_err(internal)?;
    let vertical = s0.vertical_annihilator(zt).map_err(internal)?;
    let mut shortcut = true;
    for s in &flag[1..] {
        shortcut &= s.is_integrable_with_dt(zt).map_err(internal)?;
    }
    clock.lap("analyze");
    report.insert(
        "analysis".into(),
        json!({
            "pfaffian_basis": forms(&s0),
            "derived_flag": flag.iter().map(forms).collect::<Vec<_>>(),
            "derived_flag_dimensions": flag.iter().map(PfaffianSystem::dim).collect::<Vec<_>>(),
            "vertical_annihilator": fields(&vertical),
            "static_feedback_linearizable_shortcut": shortcut,
        }),
    );
    let _ = writeln!(summary, "system {}: {} states, {} inputs", cs.name, cs.n_states(), cs.n_inputs());
    let _ = writeln!(summary, "Pfaffian basis: {s0}");
    let dims: Vec<String> = flag.iter().map(|s| s.dim().to_string()).collect();
    let _ = writeln!(summary, "derived flag dimensions: {}", dims.join(" > "));
    let _ = writeln!(summary, "vertical annihilator: {vertical}");
    if shortcut {
        let _ = writeln!(summary, "static-feedback-linearizable shortcut applicable");
    }
    Ok(ExitCode::Ok)
}

fn decomposition_json(res: &DecompositionResult, zt: &ZeroTest) -> Result<Value, Failure> {
    let mut levels = Vec::with_capacity(res.sequence.len());
    for sp in &res.sequence {
        let vertical = sp.system.vertical_annihilator(zt).map_err(internal)?;
        let t = &sp.transform;
        let forward: Map<String, Value> =
            t.target().coords().iter().zip(t.forward()).map(|(s, e)| (s.name().to_string(), json!(e.to_string()))).collect();
        levels.push(json!({
            "level": sp.level,
            "source": sp.source,
            "system": forms(&sp.system),
            "vertical_annihilator": fields(&vertical),
            "distribution": fields(&sp.f),
            "s_next": forms(&sp.s_next),
            "s_complement": forms(&sp.s_comp),
            "flow_parameters": names(&sp.nondrv),
            "transform": { "coordinates": names(t.source().coords()), "forward": forward },
            "reduced": forms(&sp.reduced),
            "shortcut": sp.shortcut,
        }));
    }
    Ok(json!({
        "status": res.status,
        "levels": levels,
        "branch_log": res.branch_log,
    }))
}

fn triangular_json(td: &TriangularDecomposition, zt: &ZeroTest) -> Result<Value, Failure> {
    let validation = td.validate(zt).map_err(internal)?;
    let blocks: Vec<Value> = td.blocks().iter().map(|b| json!({ "y": names(&b.y), "zhat": names(&b.zhat) })).collect();
    let equations: Vec<Value> =
        td.all_equations().iter().map(|g| json!(g.iter().map(ToString::to_string).collect::<Vec<_>>())).collect();
    Ok(json!({ "blocks": blocks, "equations": equations, "validation": validation }))
}

fn certified(
    cs: &ControlSystem,
    c: &CommonArgs,
    report: &mut Map<String, Value>,
    summary: &mut String,
    clock: &mut Clock,
) -> Result<Option<FlatnessCertificate>, Failure> {
    let zt = zero_test(c);
    let res = run_decomposition(cs, &ansatz(c)).map_err(internal)?;
    clock.lap("decompose");
    report.insert("decomposition".into(), decomposition_json(&res, &zt)?);
    let dead = res.branch_log.iter().filter(|b| b.outcome == crate::decompose::BranchOutcome::DeadEnd).count();
    let _ = writeln!(summary, "status: {}", status_name(res.status));
    let _ = writeln!(summary, "splittings: {}, dead ends: {dead}", res.sequence.len());
    if res.status != Status::Triangularized {
        return Ok(None);
    }
    let td = TriangularDecomposition::from_sequence(&res.sequence, &zt).map_err(internal)?;
    report.insert("triangular".into(), triangular_json(&td, &zt)?);
    let cert = extract_flat_output(&td, cs, &zt).map_err(internal)?;
    clock.lap("triangular");
    Ok(Some(cert))
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Triangularized => "triangularized",
        Status::Inconclusive => "inconclusive",
        Status::NotReducible => "not reducible",
    }
}

fn record_certificate(cert: &FlatnessCertificate, report: &mut Map<String, Value>, summary: &mut String) {
    let outputs: Vec<String> = cert.outputs.iter().map(Expr::to_string).collect();
    report.insert("flat_outputs".into(), json!(outputs));
    report.insert("flatness".into(), json!(cert.order));
    report.insert("certificate".into(), serde_json::to_value(cert.to_data()).expect("certificate serializes"));
    let _ = writeln!(summary, "flat outputs ({}): {}", cert.order, outputs.join(", "));
}

fn record_verdict(verdict: &Verdict, report: &mut Map<String, Value>, summary: &mut String) {
    report.insert("verification".into(), serde_json::to_value(verdict).expect("verdict serializes"));
    let _ = writeln!(
        summary,
        "numeric verification: {} (max deviation {:.3e}, regular trials {:.0}%)",
        if verdict.passed { "pass" } else { "fail" },
        verdict.max_deviation,
        verdict.regular_fraction * 100.0
    );
    let reason = verdict.trials.iter().find_map(|t| match t {
        TrialOutcome::Failed { reason, .. } => Some(reason),
        _ => None,
    });
    if let Some(reason) = reason {
        let _ = writeln!(summary, "first failing trial: {reason}");
    }
}

fn decompose(
    cs: &ControlSystem,
    d: &DecomposeArgs,
    report: &mut Map<String, Value>,
    summary: &mut String,
    clock: &mut Clock,
) -> Result<ExitCode, Failure> {
    let Some(cert) = certified(cs, &d.common, report, summary, clock)? else {
        return Ok(ExitCode::Inconclusive);
    };
    record_certificate(&cert, report, summary);
    if d.verify {
        let opts = VerifyOptions { trials: d.trials, seed: d.common.seed, ..VerifyOptions::default() };
        let verdict = verify_flatness_numeric(&cert, &opts).map_err(internal)?;
        clock.lap("verify");
        record_verdict(&verdict, report, summary);
        if !verdict.passed {
            return Ok(ExitCode::VerifyFailed);
        }
    }
    Ok(ExitCode::Ok)
}

fn read_certificate(path: &Path, cs: &ControlSystem) -> Result<FlatnessCertificate, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(ExitCode::ParseError, format!("cannot read certificate {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| fail(ExitCode::ParseError, format!("certificate: {e}")))?;
    let data = value.get("certificate").cloned().unwrap_or(value);
    let data = serde_json::from_value(data).map_err(|e| fail(ExitCode::ParseError, format!("certificate: {e}")))?;
    let cert = FlatnessCertificate::from_data(&data).map_err(|e| fail(ExitCode::ParseError, e))?;
    if cert.system.to_fds() != cs.to_fds() {
        return Err(fail(ExitCode::ParseError, "certificate belongs to a different system"));
    }
    Ok(cert)
}

fn parse_outputs(text: &str, cs: &ControlSystem) -> Result<Vec<Expr>, Failure> {
    let coords = cs.coordinates();
    text.split(',')
        .map(|part| parse_expr(part.trim(), &coords).map_err(|e| fail(ExitCode::ParseError, format!("output {part:?}: {e}"))))
        .collect()
}

fn verify(
    cs: &ControlSystem,
    v: &VerifyArgs,
    report: &mut Map<String, Value>,
    summary: &mut String,
    clock: &mut Clock,
) -> Result<ExitCode, Failure> {
    let claimed = v.outputs.as_deref().map(|o| parse_outputs(o, cs)).transpose()?;
    let cert = match &v.certificate {
        Some(path) => read_certificate(path, cs)?,
        None => match certified(cs, &v.common, report, summary, clock)? {
            Some(cert) => cert,
            None => return Ok(ExitCode::Inconclusive),
        },
    };
    record_certificate(&cert, report, summary);
    let zt = zero_test(&v.common);
    let validation = cert.decomposition.validate(&zt).map_err(internal)?;
    report.insert("validation".into(), serde_json::to_value(&validation).expect("validation serializes"));
    let _ = writeln!(summary, "structural validation: {}", if validation.passed() { "pass" } else { "fail" });
    if let Some(claimed) = &claimed {
        report.insert("claimed_outputs".into(), json!(claimed.iter().map(Expr::to_string).collect::<Vec<_>>()));
    }
    let opts = VerifyOptions { trials: v.trials, seed: v.common.seed, claimed, ..VerifyOptions::default() };
    let verdict = verify_flatness_numeric(&cert, &opts).map_err(internal)?;
    clock.lap("verify");
    record_verdict(&verdict, report, summary);
    Ok(if validation.passed() && verdict.passed { ExitCode::Ok } else { ExitCode::VerifyFailed })
}
