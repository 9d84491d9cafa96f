//! The `markov-dilation` command-line tool.
//!
//! Exit status is 0 when every check passes, 1 when a check fails and 2 on
//! any error. Verification commands always write a JSON report (to `--out`,
//! or standard output); a failed run writes the error in the same place.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::chain::{marginal_consistency, simulate, verify_markov};
use crate::decompose::{decompose_full, decompose_greedy};
use crate::dilation::{build_dilation, induced_transition, verify_dynamics, AlphabetMode, DilationSpec, Symbol};
use crate::io::{read_input, DecompositionDoc, DilationDoc, Input};
use crate::model::MatrixSequence;
use crate::quantum::{
    build_env_vector, build_unitary, check_cqd1, check_cqd2, davis_channel, flow, kraus_channel, random_matrix,
    verify_cms_extension, verify_davis_equivalence, DiagonalObservable, Polynomial, DEFAULT_DENSE_CAP,
};
use crate::report::VerificationReport;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "markov-dilation", version, about = "Classical and quantum dilations of finite Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a convex decomposition of each input matrix.
    Decompose {
        #[command(flatten)]
        config: RunConfig,
        /// Weights for all N^N deterministic maps.
        #[arg(long, conflicts_with = "greedy")]
        full: bool,
        /// Sparse greedy decomposition (the default).
        #[arg(long)]
        greedy: bool,
    },
    /// Write the dilation document of a matrix or sequence.
    Dilate(RunConfig),
    /// Simulate trajectories as JSON lines.
    Simulate {
        #[command(flatten)]
        config: RunConfig,
        /// Initial state.
        #[arg(long, default_value_t = 0)]
        start: usize,
    },
    /// Markov property, marginals and exact dynamics checks.
    VerifyClassical(RunConfig),
    /// Channel extension, dilation identities and classical/quantum agreement.
    VerifyQuantum(RunConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Universal,
    Minimal,
}

impl From<Mode> for AlphabetMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Universal => AlphabetMode::Universal,
            Mode::Minimal => AlphabetMode::Minimal,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct RunConfig {
    /// Matrix, sequence or dilation JSON document.
    #[arg(long)]
    input: PathBuf,
    /// Environment alphabet; defaults to minimal for verify-quantum and
    /// universal otherwise.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, default_value_t = 3)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trajectories: usize,
    /// Tolerance for exact identities; flow checks use ten times this.
    #[arg(long, default_value_t = 1e-10, value_parser = positive_f64)]
    tol: f64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Human-readable summary instead of JSON on standard output.
    #[arg(long)]
    #[serde(skip)]
    pretty: bool,
}

fn positive_f64(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("{s} is not a positive number")),
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match cli.command {
        Command::Decompose { config, full, .. } => artifact(&config, "decompose", || decompose_cmd(&config, full)),
        Command::Dilate(config) => artifact(&config, "dilate", || dilate_cmd(&config)),
        Command::Simulate { config, start } => match simulate_cmd(&config, start) {
            Ok(()) => 0,
            Err(e) => fail(&config, "simulate", &e),
        },
        Command::VerifyClassical(config) => verification(&config, "verify-classical", verify_classical),
        Command::VerifyQuantum(config) => verification(&config, "verify-quantum", verify_quantum),
    }
}

/// Seconds since the Unix epoch; the only field allowed to differ between
/// identical runs.
fn timestamp() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Removes the `timestamp` field so two reports can be compared byte for byte.
pub fn strip_timestamp(report: &mut Value) {
    if let Some(obj) = report.as_object_mut() {
        obj.remove("timestamp");
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::BadInput(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Error::BadInput(format!("stdout: {e}")))
        }
    }
}

fn to_json(v: &impl Serialize, pretty: bool) -> String {
    let mut s = if pretty { serde_json::to_string_pretty(v) } else { serde_json::to_string(v) }.expect("serializable");
    s.push('\n');
    s
}

fn fail(config: &RunConfig, command: &str, e: &Error) -> i32 {
    eprintln!("error: {e}");
    let doc = json!({ "command": command, "timestamp": timestamp(), "config": config, "error": e.to_string() });
    if let Some(out) = &config.out {
        let _ = write_output(Some(out), &to_json(&doc, true));
    }
    2
}

fn artifact(config: &RunConfig, command: &str, body: impl FnOnce() -> Result<Value>) -> i32 {
    match body().and_then(|v| write_output(config.out.as_deref(), &to_json(&v, config.pretty))) {
        Ok(()) => 0,
        Err(e) => fail(config, command, &e),
    }
}

fn verification(
    config: &RunConfig,
    command: &str,
    body: impl FnOnce(&RunConfig) -> Result<VerificationReport>,
) -> i32 {
    let report = match body(config) {
        Ok(r) => r,
        Err(e) => return fail(config, command, &e),
    };
    let doc = json!({
        "command": command,
        "timestamp": timestamp(),
        "config": config,
        "passed": report.passed(),
        "checks": report.checks,
        "notes": report.notes,
    });
    let written = match (&config.out, config.pretty) {
        (Some(out), pretty) => {
            if pretty {
                print!("{}", summary(&report));
            }
            write_output(Some(out), &to_json(&doc, true))
        }
        (None, true) => write_output(None, &summary(&report)),
        (None, false) => write_output(None, &to_json(&doc, false)),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return 2;
    }
    if report.passed() {
        0
    } else {
        1
    }
}

fn summary(report: &VerificationReport) -> String {
    let mut s = String::new();
    for c in &report.checks {
        let t = c.t.map(|t| format!(" t={t}")).unwrap_or_default();
        let status = if c.pass { "PASS" } else { "FAIL" };
        s.push_str(&format!("{status} {}{t}: max deviation {:.3e} (tol {:.1e})", c.name, c.max_abs_deviation, c.tolerance));
        if let Some(loc) = &c.location {
            s.push_str(&format!(" at {loc}"));
        }
        s.push('\n');
    }
    for n in &report.notes {
        s.push_str(&format!("note {}: {}\n", n.name, n.value));
    }
    s.push_str(if report.passed() { "all checks passed\n" } else { "some checks failed\n" });
    s
}

fn sequence_of(input: &Input, horizon: usize) -> Result<MatrixSequence> {
    input.target(horizon).ok_or_else(|| Error::BadInput("input carries no matrix or sequence".into()))
}

fn decompose_cmd(config: &RunConfig, full: bool) -> Result<Value> {
    let seq = sequence_of(&read_input(&config.input)?, 1)?;
    let used = if seq.is_homogeneous() { &seq.matrices()[..1] } else { seq.matrices() };
    let docs = used
        .iter()
        .map(|p| {
            let dec = if full { decompose_full(p)? } else { decompose_greedy(p)? };
            Ok(serde_json::to_value(DecompositionDoc::from(&dec)).expect("serializable"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(if docs.len() == 1 { docs.into_iter().next().unwrap() } else { Value::Array(docs) })
}

fn default_mode(config: &RunConfig, fallback: Mode) -> AlphabetMode {
    config.mode.unwrap_or(fallback).into()
}

/// The dilation to work with and the sequence it should reproduce.
fn load_dilation(config: &RunConfig, fallback: Mode) -> Result<(DilationSpec, MatrixSequence)> {
    match read_input(&config.input)? {
        Input::Dilation(spec, target) => {
            let target = match target {
                Some(t) => t,
                None => {
                    let available = spec.horizon().unwrap_or(config.horizon).max(1);
                    let induced = (1..=available)
                        .map(|t| induced_transition(&spec.coupling, spec.q(t)?))
                        .collect::<Result<Vec<_>>>()?;
                    MatrixSequence::new(induced)?
                }
            };
            Ok((*spec, target))
        }
        other => {
            let seq = sequence_of(&other, config.horizon)?;
            let (spec, _) = build_dilation(&seq, default_mode(config, fallback))?;
            Ok((spec, seq))
        }
    }
}

fn dilate_cmd(config: &RunConfig) -> Result<Value> {
    let input = read_input(&config.input)?;
    let seq = sequence_of(&input, config.horizon)?;
    let (spec, _) = build_dilation(&seq, default_mode(config, Mode::Universal))?;
    Ok(serde_json::to_value(DilationDoc::new(&spec, Some(&seq))).expect("serializable"))
}

fn simulate_cmd(config: &RunConfig, start: usize) -> Result<()> {
    let (spec, _) = load_dilation(config, Mode::Universal)?;
    let records = simulate(&spec, start, config.horizon, config.seed, config.trajectories)?;
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r).expect("serializable"));
        text.push('\n');
    }
    write_output(config.out.as_deref(), &text)
}

fn verify_classical(config: &RunConfig) -> Result<VerificationReport> {
    let (spec, target) = load_dilation(config, Mode::Universal)?;
    let horizon = config.horizon.min(target.len());
    let mut report = verify_markov(&spec, &target, horizon, config.tol)?;

    let n = spec.n();
    for t in 1..=horizon {
        let mut worst = crate::report::MaxTracker::default();
        for k in 0..n {
            for j in 0..n {
                let mut f = vec![Complex64::new(0.0, 0.0); n];
                f[j] = Complex64::new(1.0, 0.0);
                let (_, _, dev) = marginal_consistency(&spec, &target, &f, t, k)?;
                worst.observe(dev, || format!("k={k}, f=e{j}"));
            }
        }
        report.check("marginal_consistency", Some(t), config.tol, worst.value, worst.location);
    }

    // sampled global states with enough coordinates for every step
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let steps = horizon.clamp(1, 2);
    let reach = 2 * steps as i64 + 1;
    let iid = spec.iid();
    let states = (0..200)
        .map(|s| iid.sample_state(s % n, -reach, reach, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    report.extend(verify_dynamics(&spec.coupling, &states, steps, -(steps as i64)..=steps as i64));
    Ok(report)
}

fn verify_quantum(config: &RunConfig) -> Result<VerificationReport> {
    let (spec, target) = load_dilation(config, Mode::Minimal)?;
    if !spec.is_homogeneous() || !target.is_homogeneous() {
        return Err(Error::NotHomogeneous);
    }
    let tol = config.tol;
    let cap = DEFAULT_DENSE_CAP;
    let p = &target.matrices()[0];
    let q = spec.q(1)?;
    let v = build_unitary(&spec.coupling);
    let upsilon = build_env_vector(q);
    let channel = kraus_channel(&v, &upsilon)?;
    let mut report = verify_cms_extension(&channel, p, tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = spec.n();
    let g = spec.alphabet.size();

    let mut one_step: f64 = 0.0;
    for s in 0..20 {
        let a = random_matrix(n, s % 2 == 0, &mut rng);
        one_step = one_step.max(flow(&v, &upsilon, &a, 1, cap)?.deviation);
    }
    report.check("one_step_dilation", Some(1), tol, one_step, None);

    let mut flow_steps = 0;
    for t in 2..=config.horizon {
        let a = random_matrix(n, true, &mut rng);
        match flow(&v, &upsilon, &a, t, cap) {
            Ok(out) => {
                report.check("flow", Some(t), 10.0 * tol, out.deviation, None);
                flow_steps = t;
            }
            Err(Error::DimensionTooLarge { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    report.note("flow_steps_checked", flow_steps as f64);

    for t in 1..=config.horizon.min(2) {
        let mut cqd1 = VerificationReport::new();
        let mut skipped = false;
        'outer: for i in 0..n {
            for s in 0..g {
                let f = DiagonalObservable::indicator(n, g, 0, i, &[Symbol(s)])?;
                match check_cqd1(&spec.coupling, &v, &f, t, tol, cap) {
                    Ok(r) => cqd1.extend(r),
                    Err(Error::DimensionTooLarge { .. }) => {
                        skipped = true;
                        break 'outer;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        if skipped {
            report.note(format!("cqd1_t{t}_skipped"), 1.0);
        } else {
            let worst = cqd1.failures().next().and_then(|c| c.location.clone());
            report.check("cqd1", Some(t), tol, cqd1.max_deviation(), worst);
        }
    }

    // Some(deviation), or None once the joint window exceeds the dense cap
    let cqd2_case = |fs: &[DiagonalObservable], eta: &Polynomial, k: usize| -> Result<Option<f64>> {
        match check_cqd2(q, &upsilon, k, fs, eta, tol, cap) {
            Ok((r, _, _)) => Ok(Some(r.max_deviation())),
            Err(Error::WindowTooLarge { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut cqd2: Option<f64> = None;
    let product = Polynomial::new(2, vec![(Complex64::new(1.0, 0.0), vec![1, 1])])?;
    'cases: for k in 0..n {
        for a in 0..g {
            for b in 0..g {
                let f1 = DiagonalObservable::indicator(n, g, -1, k, &[Symbol(a)])?;
                let f2 = DiagonalObservable::indicator(n, g, 1, k, &[Symbol(b)])?;
                match cqd2_case(&[f1, f2], &product, k)? {
                    Some(d) => cqd2 = Some(cqd2.unwrap_or(0.0).max(d)),
                    None => break 'cases,
                }
            }
        }
        for _ in 0..5 {
            let fs = (0..2)
                .map(|m| {
                    DiagonalObservable::from_fn(n, g, m - 1, 2, |_, _| Complex64::new(rng.random_range(-1.0..1.0), 0.0))
                })
                .collect::<Result<Vec<_>>>()?;
            let eta = Polynomial::random(2, 3, &mut rng);
            match cqd2_case(&fs, &eta, k)? {
                Some(d) => cqd2 = Some(cqd2.unwrap_or(0.0).max(d)),
                None => break 'cases,
            }
        }
    }
    match cqd2 {
        Some(d) => {
            report.check("cqd2", None, tol, d, None);
        }
        None => report.note("cqd2_skipped", 1.0),
    }

    match spec.stratum_decomposition(1)? {
        Some(dec) => report.extend(verify_davis_equivalence(&davis_channel(&dec)?, &channel, tol)?),
        None => report.note("davis_equivalence_skipped", 1.0),
    }
    report.note("symbol_count", g as f64);
    Ok(report)
}
