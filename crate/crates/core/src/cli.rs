//! The `fma` command-line front end.
//!
//! Exit codes: 0 when an analysis completed (whatever its verdict), 1 when a
//! built-in self-check failed, 2 on usage or input errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{
    designated_pair, even_restriction_equal, expectation, hermitian_spectrum, is_uncorrelated,
    majorana_projection, odd_odd_witness, product_expectation, product_functional_consistency,
    projection_meet, separable_fit, Consistency, Verdict, WitnessReport,
};
use crate::bipartition::Bipartition;
use crate::car_ops::{poly_to_matrix, verify_car};
use crate::fock::{max_dense_modes, two_branch_mixture, two_branch_state, DensityOperator, State};
use crate::opalg::{parse, OperatorPoly, Parity, ParseError};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SELF_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Residual above which the demo calls a fit floor "coherence".
const COHERENCE_FLOOR: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(
    name = "fma",
    version,
    about = "Fermionic mode algebra and mode-entanglement analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the anticommutation relations on the sparse ladder matrices.
    CarCheck(CarCheckArgs),
    /// Run every analysis on the two-branch state (|N;0> + |0;N>)/sqrt(2).
    DemoPsi(DemoArgs),
    /// Print the expectation of an operator expression.
    Expect(ExpectArgs),
    /// Analyze a state file over a bipartition.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CarCheckArgs {
    #[arg(long)]
    pub modes: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Particle number; the system has 2n modes.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub degree: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub dict_size: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ExpectArgs {
    #[arg(long)]
    pub expr: String,
    /// State file (pure or density format).
    #[arg(long, conflicts_with = "n")]
    pub input: Option<PathBuf>,
    /// Use the two-branch preset with n particles instead of a file.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `1,2|3,4` or `m:2/4`.
    #[arg(long)]
    pub bipartition: String,
    #[arg(long, default_value_t = 4)]
    pub degree: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub dict_size: usize,
    /// Two projection expressions for the uncorrelatedness test.
    #[arg(long, num_args = 2, value_names = ["P", "Q"])]
    pub projections: Option<Vec<String>>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<&ComplexValue> for Complex64 {
    fn from(v: &ComplexValue) -> Self {
        Complex64::new(v.re, v.im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessJson {
    #[serde(rename = "A1")]
    pub a1: String,
    #[serde(rename = "A2")]
    pub a2: String,
    pub value: ComplexValue,
}

/// Machine-readable report emitted with `--format json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub analysis: String,
    pub modes: usize,
    pub bipartition: Option<String>,
    pub verdict: String,
    pub witness: Option<WitnessJson>,
    pub details: Value,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Outcome {
    report: Report,
    text: Vec<String>,
    exit: i32,
}

enum Failure {
    Usage(String),
    SelfCheck(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::MeetDisagreement { .. } => Failure::SelfCheck(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn parse_diagnostic(expr: &str, e: &ParseError) -> String {
    format!("{e}\n  {expr}\n  {}^", " ".repeat(e.position))
}

fn parse_expr(expr: &str) -> Result<OperatorPoly, Failure> {
    parse(expr).map_err(|e| Failure::Usage(parse_diagnostic(expr, &e)))
}

fn cval(z: Complex64) -> Value {
    json!({"re": z.re, "im": z.im})
}

fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!(
            "{} {} {}i",
            z.re,
            if z.im < 0.0 { '-' } else { '+' },
            z.im.abs()
        )
    }
}

fn witness_json(r: &WitnessReport) -> Option<WitnessJson> {
    r.witness_pair.as_ref().map(|(p, q)| WitnessJson {
        a1: p.to_string(),
        a2: q.to_string(),
        value: r.value.into(),
    })
}

fn read_state(path: &PathBuf) -> Result<State, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let state = State::from_json(&text)?;
    if let State::Pure(v) = &state {
        if !v.is_normalized() {
            return Err(Failure::Usage(format!(
                "state in {} is not normalized (norm {})",
                path.display(),
                v.norm()
            )));
        }
    }
    Ok(state)
}

fn guard(modes: usize) -> Result<(), Failure> {
    let limit = max_dense_modes();
    if modes > limit {
        return Err(Failure::Usage(format!(
            "refusing to build {modes}-mode matrices: memory guard allows at most {limit} modes \
             (set FMA_MAX_MODES to override)"
        )));
    }
    Ok(())
}

fn car_check(args: &CarCheckArgs) -> Result<Outcome, Failure> {
    if args.modes == 0 {
        return Err(Failure::Usage("--modes must be at least 1".into()));
    }
    guard(args.modes)?;
    let deviation = verify_car(args.modes)?;
    let exact = deviation == 0.0;
    let mut text = vec![
        format!("modes {}", args.modes),
        format!("max deviation {deviation:.1e}"),
    ];
    if exact {
        text.push("{a_i, a_j†} = δ_ij·1 and {a_i, a_j} = {a_i†, a_j†} = 0 hold exactly; identity anticommutator confirmed".into());
    }
    Ok(Outcome {
        report: Report {
            analysis: "car-check".into(),
            modes: args.modes,
            bipartition: None,
            verdict: if exact { "exact" } else { "deviation" }.into(),
            witness: None,
            details: json!({ "max_deviation": deviation }),
        },
        text,
        exit: if exact { EXIT_OK } else { EXIT_SELF_CHECK },
    })
}

fn distinct_nonzero(spectrum: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &l in spectrum {
        if l.abs() > 1e-10 && out.last().is_none_or(|&p| (l - p).abs() > 1e-9) {
            out.push(l);
        }
    }
    out
}

fn demo_psi(args: &DemoArgs) -> Result<Outcome, Failure> {
    let n = args.n;
    if n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    if args.degree == 0 {
        return Err(Failure::Usage("--degree must be at least 1".into()));
    }
    guard(2 * n)?;
    let psi = two_branch_state(n)?;
    let rho_sep = two_branch_mixture(n)?;
    let b = Bipartition::contiguous(n, 2 * n)?;
    let odd_n = n % 2 == 1;

    let witness = odd_odd_witness(&psi, &b, args.degree)?;
    let (d1, d2) = designated_pair(&b);
    let designated_value = product_expectation(&psi, &d1, &d2)?;
    let designated_parity = d1.parity();

    let even = even_restriction_equal(&psi, &rho_sep, &b, args.degree)?;

    let p1 = majorana_projection(1);
    let p2 = majorana_projection(n + 1);
    let p1m = poly_to_matrix(&p1, 2 * n)?;
    let p2m = poly_to_matrix(&p2, 2 * n)?;
    let pqp = p1m.matmul(&p2m)?.matmul(&p1m)?;
    let pqp_spectrum = distinct_nonzero(&hermitian_spectrum(&pqp)?);
    let meet = projection_meet(&p1m, &p2m, 1e-12, 64)?;
    let meet_norm = meet.meet.max_abs();
    let unc = is_uncorrelated(&psi, &p1, &p2, args.tol)?;

    let fit = separable_fit(
        &DensityOperator::from_pure(&psi)?,
        &b,
        args.dict_size,
        args.seed,
    )?;

    let mut checks: Vec<(&str, bool)> = vec![
        (
            "meet_is_zero",
            meet.rank == 0 && meet_norm < 1e-10 && meet.converged,
        ),
        (
            "pqp_nonzero_eigenvalue_half",
            pqp_spectrum.len() == 1 && (pqp_spectrum[0] - 0.5).abs() < 1e-10,
        ),
        (
            "correlated",
            !unc.uncorrelated && unc.lhs.abs() < 1e-10 && unc.rhs > 0.0,
        ),
    ];
    if odd_n {
        checks.push((
            "odd_odd_witness_half",
            witness.verdict == Verdict::EntangledCertified
                && (witness.value.norm() - 0.5).abs() < 1e-12,
        ));
        checks.push(("even_restriction_equal", even.equal));
    } else {
        checks.push(("even_restriction_differs", !even.equal));
    }
    let passed = checks.iter().all(|(_, ok)| *ok);

    let verdict = if witness.verdict == Verdict::EntangledCertified {
        "entangled-certified"
    } else if fit.residual > COHERENCE_FLOOR {
        "entangled-by-coherence"
    } else {
        "no-certificate"
    };

    let mut notes = Vec::new();
    if designated_parity != Parity::Odd {
        notes.push(format!(
            "designated pair ({d1}, {d2}) has {designated_parity} parity and is rejected as an odd-odd witness"
        ));
    }
    if !odd_n {
        notes.push(
            "n is even: the even sectors distinguish the state from its incoherent mixture"
                .to_string(),
        );
        if verdict == "entangled-by-coherence" {
            notes.push(format!(
                "verdict rests on the separable-fit residual {:.6} (heuristic, not a proof)",
                fit.residual
            ));
        }
    }

    let details = json!({
        "n": n,
        "degree": args.degree,
        "witness_verdict": witness.verdict.as_str(),
        "witness_value": cval(witness.value),
        "witness_magnitude": witness.value.norm(),
        "witness_candidates_checked": witness.candidates_checked,
        "designated_pair": {
            "A1": d1.to_string(),
            "A2": d2.to_string(),
            "parity": designated_parity.to_string(),
            "value": cval(designated_value),
            "accepted": designated_parity == Parity::Odd,
        },
        "even_restriction_equal": even.equal,
        "even_restriction_max_diff": even.max_diff,
        "even_restriction_pairs": even.pairs_compared,
        "even_restriction_worst_pair": even.worst_pair.as_ref().map(|(l, r)| json!({"A1": l.to_string(), "A2": r.to_string()})),
        "pqp_nonzero_eigenvalues": pqp_spectrum,
        "meet_norm": meet_norm,
        "meet_rank": meet.rank,
        "meet_method_residual": meet.residual,
        "meet_converged": meet.converged,
        "meet_iterations": meet.iterations,
        "p1_expectation": unc.first_value,
        "p2_expectation": unc.second_value,
        "meet_expectation": unc.lhs,
        "product_of_expectations": unc.rhs,
        "uncorrelated": unc.uncorrelated,
        "separable_fit_residual": fit.residual,
        "separable_fit_atoms": fit.dictionary.len(),
        "checks": checks.iter().map(|(k, v)| ((*k).to_string(), Value::Bool(*v))).collect::<serde_json::Map<_, _>>(),
        "self_check_passed": passed,
        "notes": notes,
    });

    let mut text = vec![
        format!(
            "two-branch state, n = {n}, {} modes, bipartition {b}",
            2 * n
        ),
        format!(
            "odd-odd witness: {} (|value| = {}, value = {})",
            witness.verdict.as_str(),
            witness.value.norm(),
            fmt_complex(witness.value)
        ),
    ];
    if let Some((p, q)) = &witness.witness_pair {
        text.push(format!("  A1 = {p}\n  A2 = {q}"));
    }
    text.push(format!(
        "even restriction equals incoherent mixture: {} (max diff {:e} over {} pairs)",
        even.equal, even.max_diff, even.pairs_compared
    ));
    text.push(format!(
        "P1 P2 P1 nonzero eigenvalues: {:?}; meet norm {meet_norm:e} (rank {})",
        pqp_spectrum, meet.rank
    ));
    text.push(format!(
        "<P1> = {}, <P2> = {}, <P1 ^ P2> = {}, <P1><P2> = {} => uncorrelated: {}",
        unc.first_value, unc.second_value, unc.lhs, unc.rhs, unc.uncorrelated
    ));
    text.push(format!("separable-fit residual: {}", fit.residual));
    text.extend(notes.iter().map(|n| format!("note: {n}")));
    text.push(format!("verdict: {verdict}"));
    for (name, ok) in &checks {
        if !ok {
            text.push(format!("SELF-CHECK FAILED: {name}"));
        }
    }

    Ok(Outcome {
        report: Report {
            analysis: "demo-psi".into(),
            modes: 2 * n,
            bipartition: Some(b.to_string()),
            verdict: verdict.into(),
            witness: witness_json(&witness),
            details,
        },
        text,
        exit: if passed { EXIT_OK } else { EXIT_SELF_CHECK },
    })
}

fn expect_cmd(args: &ExpectArgs) -> Result<Outcome, Failure> {
    let poly = parse_expr(&args.expr)?;
    let state = match (&args.input, args.n) {
        (Some(path), _) => read_state(path)?,
        (None, Some(n)) => {
            if n == 0 {
                return Err(Failure::Usage("--n must be at least 1".into()));
            }
            State::Pure(two_branch_state(n)?)
        }
        (None, None) => return Err(Failure::Usage("one of --input or --n is required".into())),
    };
    let value = expectation(&state, &poly)?;
    Ok(Outcome {
        report: Report {
            analysis: "expect".into(),
            modes: state.modes(),
            bipartition: None,
            verdict: "ok".into(),
            witness: None,
            details: json!({
                "expr": args.expr,
                "normal_ordered": poly.to_string(),
                "value": cval(value),
            }),
        },
        text: vec![format!("<{}> = {}", args.expr, fmt_complex(value))],
        exit: EXIT_OK,
    })
}

fn analyze(args: &AnalyzeArgs) -> Result<Outcome, Failure> {
    let state = read_state(&args.input)?;
    let b: Bipartition = args.bipartition.parse()?;
    if b.modes() != state.modes() {
        return Err(Failure::Usage(format!(
            "bipartition {b} covers {} modes but the state has {}",
            b.modes(),
            state.modes()
        )));
    }
    if args.degree == 0 {
        return Err(Failure::Usage("--degree must be at least 1".into()));
    }
    guard(state.modes())?;
    let projections = match &args.projections {
        Some(v) => Some((parse_expr(&v[0])?, parse_expr(&v[1])?)),
        None => None,
    };

    let witness = odd_odd_witness(&state, &b, args.degree)?;
    let consistency = product_functional_consistency(&state, &state, &b, args.degree.min(3))?;
    let rho = state.to_density()?;
    let fit = separable_fit(&rho, &b, args.dict_size, args.seed)?;
    let unc = match &projections {
        Some((p, q)) => Some(is_uncorrelated(&state, p, q, args.tol)?),
        None => None,
    };

    let consistency_json = match &consistency {
        Consistency::Consistent => json!({"verdict": "consistent"}),
        Consistency::Inconsistent {
            first,
            second,
            first_value,
            second_value,
        } => json!({
            "verdict": "inconsistent",
            "first": first.to_string(),
            "second": second.to_string(),
            "first_value": first_value,
            "second_value": second_value,
        }),
    };
    let support: Vec<Value> = fit
        .support()
        .iter()
        .take(8)
        .map(|(w, atom)| {
            let amps: Vec<Value> = atom
                .product
                .iter()
                .map(|(k, z)| {
                    json!({
                        "bits": crate::fock::OccupationState::from_index(k, state.modes())
                            .map(|s| s.to_bit_string())
                            .unwrap_or_default(),
                        "re": z.re,
                        "im": z.im,
                    })
                })
                .collect();
            json!({"weight": w, "amplitudes": amps})
        })
        .collect();
    let mut details = json!({
        "degree": args.degree,
        "witness_candidates_checked": witness.candidates_checked,
        "consistency": consistency_json,
        "separable_fit_residual": fit.residual,
        "separable_fit_atoms": fit.dictionary.len(),
        "separable_fit_support": support,
    });
    if let Some(u) = &unc {
        details["uncorrelated"] = json!({
            "uncorrelated": u.uncorrelated,
            "lhs": u.lhs,
            "rhs": u.rhs,
            "p_expectation": u.first_value,
            "q_expectation": u.second_value,
            "meet_rank": u.meet.rank,
        });
    }

    let mut text = vec![
        format!("{} modes, bipartition {b}", state.modes()),
        format!("odd-odd witness: {}", witness.verdict.as_str()),
    ];
    if let Some((p, q)) = &witness.witness_pair {
        text.push(format!(
            "  A1 = {p}\n  A2 = {q}\n  value = {}",
            fmt_complex(witness.value)
        ));
    }
    text.push(match &consistency {
        Consistency::Consistent => "product-functional consistency: consistent".into(),
        Consistency::Inconsistent { first, second, .. } => {
            format!("product-functional consistency: inconsistent (witness {first} / {second})")
        }
    });
    text.push(format!(
        "separable-fit residual: {} over {} atoms (heuristic)",
        fit.residual,
        fit.dictionary.len()
    ));
    if let Some(u) = &unc {
        text.push(format!(
            "<P ^ Q> = {}, <P><Q> = {} => uncorrelated: {}",
            u.lhs, u.rhs, u.uncorrelated
        ));
    }
    text.push(format!("verdict: {}", witness.verdict.as_str()));

    Ok(Outcome {
        report: Report {
            analysis: "analyze".into(),
            modes: state.modes(),
            bipartition: Some(b.to_string()),
            verdict: witness.verdict.as_str().into(),
            witness: witness_json(&witness),
            details,
        },
        text,
        exit: EXIT_OK,
    })
}

fn emit(outcome: &Outcome, common: &Common, out: &mut dyn Write) -> Result<(), Failure> {
    let body = match common.format {
        Format::Json => outcome.report.to_json() + "\n",
        Format::Text => outcome.text.join("\n") + "\n",
    };
    match &common.output {
        Some(path) => fs::write(path, body)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => out
            .write_all(body.as_bytes())
            .map_err(|e| Failure::Usage(e.to_string())),
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{rendered}");
            return EXIT_OK;
        }
    };
    let (result, common) = match &cli.command {
        Command::CarCheck(a) => (car_check(a), &a.common),
        Command::DemoPsi(a) => (demo_psi(a), &a.common),
        Command::Expect(a) => (expect_cmd(a), &a.common),
        Command::Analyze(a) => (analyze(a), &a.common),
    };
    let outcome = result.and_then(|o| emit(&o, common, out).map(|_| o.exit));
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::SelfCheck(msg)) => {
            let _ = writeln!(err, "self-check failed: {msg}");
            EXIT_SELF_CHECK
        }
    }
}
