//! Command-line front end. Every command writes a header record with the
//! full configuration followed by one record per verification; the exit
//! status is 0 when every record passed, 1 when one failed and 2 for
//! invalid configurations.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::constants::{beta_recursion_im, classical_anchors, gamma_product_im, hilbert_shapes, reconcile};
use crate::error::{Error, Result};
use crate::hgroup::{axiom_reports, ball_volume_constant, GroupParams, HPoint};
use crate::morrey::{morrey_norm, sharpness_ratio, verify_dilations, BallGrid, MorreyEstimate, MorreySpaceSpec};
use crate::operators::extremizer_profile;
use crate::params::ParamSet;
use crate::profile::RadialProfile;
use crate::quad::{mc_ball_integral, McSpec, QuadratureSpec};
use crate::report::VerificationReport;
use crate::OperatorKind;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const CSV_HEADER: &str = "r_min,r_max,ratio,constant,ratio_over_constant";

/// Tolerance of the `constant` command (closed form vs oracle).
pub const CONSTANT_TOL: f64 = 1e-8;
/// Tolerance of the randomized reconciliation in `oracle-compare`.
pub const RECONCILE_TOL: f64 = 1e-6;
/// Beta recursion against the Γ product.
pub const RECURSION_TOL: f64 = 1e-12;
/// Random triples drawn by `group-check`.
pub const GROUP_SAMPLES: usize = 10_000;
/// Radii of the Monte Carlo ball-volume checks.
pub const VOLUME_RADII: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Constant,
    VerifyDilation,
    VerifySharpness,
    GroupCheck,
    MorreyNorm,
    OracleCompare,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Hlp,
    Hilbert,
}

impl From<KindArg> for OperatorKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Hlp => OperatorKind::Hlp,
            KindArg::Hilbert => OperatorKind::Hilbert,
        }
    }
}

/// Sharp constants, Morrey norms and sharpness checks on the Heisenberg group.
///
/// Lists are comma separated; a single entry is repeated m times. Without
/// --lambdaj the sharp choice λ_j = qλ/q_j is used, and without --q the
/// Hölder exponent 1/q = Σ 1/q_j.
#[derive(Debug, Parser)]
#[command(name = "hsharp", version, allow_negative_numbers = true)]
pub struct Args {
    #[arg(long, value_enum)]
    command: Command,
    /// Linearity; defaults to the length of --qj.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    qj: Vec<f64>,
    #[arg(long, default_value_t = -0.25)]
    lambda: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambdaj: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    gammaj: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Parameter set as a JSON object; replaces the individual flags.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "hlp")]
    kind: KindArg,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    panels: Option<usize>,
    #[arg(long)]
    rel_target: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Truncation windows `r_min:r_max`, comma separated.
    #[arg(long, default_value = "1e-2:1e2,1e-3:1e3", allow_hyphen_values = true)]
    widths: String,
    /// Dilation factors for verify-dilation.
    #[arg(long, value_delimiter = ',', default_value = "0.5,2,10")]
    t: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub kind: OperatorKind,
    pub params: ParamSet,
    pub quad: QuadratureSpec,
    pub mc: McSpec,
    pub grid: BallGrid,
    pub widths: Vec<(f64, f64)>,
    pub dilations: Vec<f64>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub r_min: f64,
    pub r_max: f64,
    pub ratio: f64,
    pub constant: f64,
    pub ratio_over_constant: f64,
}

/// Values of a `morrey-norm` run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormRecord {
    pub label: String,
    pub space: MorreySpaceSpec,
    #[serde(flatten)]
    pub estimate: MorreyEstimate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Header(RunConfig),
    Report(VerificationReport),
    Norm(NormRecord),
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<Record>,
    pub rows: Vec<ConvergenceRow>,
    pub passed: bool,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }
}

fn broadcast(name: &str, v: &[f64], m: usize) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; m]),
        k if k == m => Ok(v.to_vec()),
        k => Err(Error::InvalidInput(format!("--{name} has {k} entries but m = {m}"))),
    }
}

fn parse_widths(s: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let bad = || Error::InvalidInput(format!("width '{item}' is not of the form r_min:r_max"));
        let (a, b) = item.split_once(':').ok_or_else(bad)?;
        let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(Error::InvalidInput(format!("width '{item}' needs 0 < r_min < r_max < inf")));
        }
        out.push((a, b));
    }
    Ok(out)
}

impl RunConfig {
    pub fn from_args(args: &Args) -> Result<Self> {
        let params = match &args.params {
            Some(path) => serde_json::from_reader(File::open(path)?)?,
            None => params_from_flags(args)?,
        };
        let mut quad = QuadratureSpec::default();
        if let Some(p) = args.panels {
            quad.panels = p;
        }
        if let Some(t) = args.rel_target {
            quad.rel_target = t;
        }
        let mut mc = McSpec::default();
        if let Some(s) = args.seed {
            mc.seed = s;
        }
        if let Some(s) = args.samples {
            mc.samples = s;
        }
        let config = Self {
            command: args.command,
            kind: args.kind.into(),
            grid: BallGrid::default_for(params.n.max(1))?,
            params,
            quad,
            mc,
            widths: parse_widths(&args.widths)?,
            dilations: args.t.clone(),
            output_path: args.out.clone(),
            format: args.format,
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks everything that does not need a computation.
    pub fn validate(&self) -> Result<()> {
        self.quad.validate()?;
        self.mc.validate()?;
        if self.format == Format::Csv && self.command != Command::VerifySharpness {
            return Err(Error::InvalidInput("--format csv is only available for verify-sharpness".into()));
        }
        if self.dilations.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidInput("dilation factors must be positive and finite".into()));
        }
        match self.command {
            Command::GroupCheck => {
                if self.params.n == 0 {
                    return Err(Error::InvalidInput("n must be at least 1".into()));
                }
            }
            Command::VerifySharpness => self.params.validate(true)?,
            _ => self.params.validate(false)?,
        }
        Ok(())
    }
}

fn params_from_flags(args: &Args) -> Result<ParamSet> {
    let m = args.m.unwrap_or(args.qj.len().max(1));
    if m == 0 {
        return Err(Error::InvalidInput("m must be at least 1".into()));
    }
    let q_list = if args.qj.is_empty() {
        let q = args.q.unwrap_or(2.0);
        vec![q * m as f64; m]
    } else {
        broadcast("qj", &args.qj, m)?
    };
    let q = args.q.unwrap_or_else(|| 1.0 / q_list.iter().map(|x| 1.0 / x).sum::<f64>());
    let lambda_list =
        if args.lambdaj.is_empty() { q_list.iter().map(|qj| q * args.lambda / qj).collect() } else { broadcast("lambdaj", &args.lambdaj, m)? };
    let gamma_list = if args.gammaj.is_empty() { vec![0.0; m] } else { broadcast("gammaj", &args.gammaj, m)? };
    Ok(ParamSet { m, n: args.n, q, q_list, lambda: args.lambda, lambda_list, gamma_list, alpha: args.alpha })
}

/// One row per truncation window of `‖T(f_1,…,f_m)‖ / ∏‖f_j‖` for the
/// truncated extremizers.
pub fn emit_convergence_table(
    kind: OperatorKind,
    p: &ParamSet,
    widths: &[(f64, f64)],
    grid: &BallGrid,
    gp: &GroupParams,
    spec: &QuadratureSpec,
    mc: &McSpec,
) -> Result<Vec<ConvergenceRow>> {
    p.validate(true)?;
    sharpness_outcomes(kind, p, widths, grid, gp, spec, mc).map(|v| v.into_iter().map(|(row, _)| row).collect())
}

fn sharpness_outcomes(
    kind: OperatorKind,
    p: &ParamSet,
    widths: &[(f64, f64)],
    grid: &BallGrid,
    gp: &GroupParams,
    spec: &QuadratureSpec,
    mc: &McSpec,
) -> Result<Vec<(ConvergenceRow, VerificationReport)>> {
    widths
        .iter()
        .map(|&(lo, hi)| {
            let o = sharpness_ratio(kind, p, (lo, hi), grid, gp, spec, mc)?;
            let row = ConvergenceRow {
                r_min: lo,
                r_max: hi,
                ratio: o.ratio,
                constant: o.constant,
                ratio_over_constant: o.ratio_over_constant(),
            };
            Ok((row, o.report))
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[ConvergenceRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{:e},{:e},{},{},{}", r.r_min, r.r_max, r.ratio, r.constant, r.ratio_over_constant)?;
    }
    w.flush()
}

pub fn write_json_lines<W: Write>(records: &[Record], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Monte Carlo volume of `B(0, r)` against `Ω_Q r^Q`, passing within three
/// standard errors.
pub fn ball_volume_report(gp: &GroupParams, r: f64, mc: &McSpec) -> Result<VerificationReport> {
    let start = Instant::now();
    let est = mc_ball_integral(&|_: &HPoint| 1.0, &HPoint::origin(gp.n), r, gp, mc)?;
    let exact = gp.ball_measure(r);
    let tol = 3.0 * est.stderr / est.estimate;
    Ok(VerificationReport::compare(format!("H^{} ball volume r={r}", gp.n), exact, est.estimate, tol)
        .with_note("tolerance is three Monte Carlo standard errors")
        .with_seed(mc.seed)
        .timed(start))
}

/// Power exponent whose `q`-th power is integrable at the origin against
/// `|x|^{γ_w}` with room to spare.
pub fn dilation_test_exponent(space: &MorreySpaceSpec, gp: &GroupParams) -> f64 {
    -(gp.q() + space.gamma_w) / (2.0 * space.q)
}

/// Runs a validated configuration. Nothing is written here.
pub fn execute(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let p = &config.params;
    let gp = ball_volume_constant(p.n)?;
    let mut reports = Vec::new();
    let mut norms = Vec::new();
    let mut rows = Vec::new();
    match config.command {
        Command::Constant => {
            reports.push(reconcile(config.kind, &p.derive_exponents(), &gp, &config.quad, CONSTANT_TOL)?.with_seed(config.mc.seed));
        }
        Command::OracleCompare => {
            let e = p.derive_exponents();
            for kind in [OperatorKind::Hlp, OperatorKind::Hilbert] {
                reports.push(reconcile(kind, &e, &gp, &config.quad, RECONCILE_TOL)?);
            }
            let start = Instant::now();
            let shapes = hilbert_shapes(&e);
            let outer = shapes.iter().sum::<f64>() - e.sigma / e.q();
            let rec = beta_recursion_im(&shapes, outer)?;
            let prod = gamma_product_im(&shapes, outer)?;
            reports.push(
                VerificationReport::compare("beta recursion vs gamma product", rec, prod, RECURSION_TOL).timed(start),
            );
            let classical = p.m == 1 && p.alpha == 0.0 && p.gamma_list[0] == 0.0 && (p.lambda * p.q + 1.0).abs() < 1e-12;
            if classical && p.q > 1.0 {
                let (a, b) = classical_anchors(p.q)?;
                let e1 = p.derive_exponents();
                let ca = crate::constants::hlp_closed_form(&e1, &gp)?.value;
                let cb = crate::constants::hilbert_closed_form(&e1, &gp)?.value;
                reports.push(VerificationReport::compare("hlp classical anchor", ca, gp.ball_volume * a, 1e-10));
                reports.push(VerificationReport::compare("hilbert classical anchor", cb, gp.ball_volume * b, 1e-10));
            }
        }
        Command::GroupCheck => {
            reports.extend(axiom_reports(p.n, GROUP_SAMPLES, config.mc.seed)?);
            for r in VOLUME_RADII {
                reports.push(ball_volume_report(&gp, r, &config.mc)?);
            }
        }
        Command::VerifyDilation => {
            let space = MorreySpaceSpec::target(p);
            let f = RadialProfile::power(dilation_test_exponent(&space, &gp));
            reports.extend(verify_dilations(&f, &config.dilations, &space, &config.grid, &gp, &config.mc)?);
        }
        Command::MorreyNorm => {
            let e = p.derive_exponents();
            let window = config.widths.first().copied();
            for j in 0..p.m {
                let f = extremizer_profile(&e, j + 1, window)?;
                let space = MorreySpaceSpec::source(p, j);
                let estimate = morrey_norm(&f, &space, &config.grid, &gp, &config.mc)?;
                norms.push(NormRecord { label: format!("extremizer f_{}", j + 1), space, estimate });
            }
        }
        Command::VerifySharpness => {
            let out = sharpness_outcomes(config.kind, p, &config.widths, &config.grid, &gp, &config.quad, &config.mc)?;
            for (row, rep) in out {
                rows.push(row);
                reports.push(rep);
            }
            if rows.len() > 1 {
                let increasing = rows.windows(2).all(|w| w[1].ratio > w[0].ratio);
                reports.push(VerificationReport::flag("ratio increases as the truncation widens", increasing, 0.0));
            }
        }
    }
    let passed = reports.iter().all(|r| r.passed);
    let mut records = vec![Record::Header(config.clone())];
    records.extend(norms.into_iter().map(Record::Norm));
    records.extend(reports.into_iter().map(Record::Report));
    Ok(RunOutcome { records, rows, passed })
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Validates, runs and writes the report; returns the exit status.
pub fn run(config: &RunConfig) -> Result<i32> {
    config.validate()?;
    let out = open_output(&config.output_path)?;
    let outcome = execute(config)?;
    match config.format {
        Format::Json => write_json_lines(&outcome.records, out)?,
        Format::Csv => write_csv(&outcome.rows, out)?,
    }
    Ok(outcome.exit_code())
}

fn is_usage(e: &Error) -> bool {
    matches!(e, Error::InvalidInput(_) | Error::Validation(_) | Error::Io(_) | Error::Json(_))
}

/// Caps the global rayon pool at `HLP_SHARP_THREADS` when it is set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HLP_SHARP_THREADS") {
        let k: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|k| *k > 0)
            .ok_or_else(|| Error::InvalidInput(format!("HLP_SHARP_THREADS must be a positive integer, got '{v}'")))?;
        // a second initialisation in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    Ok(())
}

/// Full command-line entry point.
pub fn main_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let result = init_threads().and_then(|_| RunConfig::from_args(&args)).and_then(|c| run(&c));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hsharp: {e}");
            if is_usage(&e) {
                EXIT_USAGE
            } else {
                EXIT_FAIL
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(argv: &[&str]) -> Result<RunConfig> {
        let mut v = vec!["hsharp"];
        v.extend_from_slice(argv);
        RunConfig::from_args(&Args::try_parse_from(v).unwrap())
    }

    #[test]
    fn flags_build_sharp_params() {
        let c = cfg(&["--command", "constant", "--qj", "4,4", "--lambda", "-0.25"]).unwrap();
        assert_eq!(c.params.m, 2);
        assert!((c.params.q - 2.0).abs() < 1e-15);
        assert_eq!(c.params.lambda_list, vec![-0.125, -0.125]);
        let c = cfg(&["--command", "constant", "--m", "3", "--qj", "6"]).unwrap();
        assert_eq!(c.params.q_list, vec![6.0; 3]);
        let c = cfg(&["--command", "constant", "--q", "2", "--lambda", "-0.5"]).unwrap();
        assert_eq!(c.params.q_list, vec![2.0]);
    }

    #[test]
    fn usage_errors() {
        match cfg(&["--command", "constant", "--lambda", "0"]) {
            Err(Error::Validation(v)) => assert!(v.iter().any(|x| x.to_string().contains("λ must be negative"))),
            other => panic!("{other:?}"),
        }
        assert!(cfg(&["--command", "constant", "--format", "csv"]).is_err());
        assert!(cfg(&["--command", "constant", "--qj", "4,4,4", "--m", "2"]).is_err());
        assert!(cfg(&["--command", "verify-sharpness", "--widths", "1:0.5"]).is_err());
        assert!(parse_widths("").unwrap().is_empty());
    }

    #[test]
    fn constant_record() {
        let c = cfg(&["--command", "constant", "--q", "2", "--lambda", "-0.5"]).unwrap();
        let out = execute(&c).unwrap();
        assert!(out.passed);
        match &out.records[1] {
            Record::Report(r) => {
                let w = 2.0 * std::f64::consts::PI.powi(2);
                assert!((r.closed_form - w).abs() < 1e-10 * w);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        let row = ConvergenceRow { r_min: 0.01, r_max: 100.0, ratio: 1.5, constant: 2.0, ratio_over_constant: 0.75 };
        write_csv(&[row], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(s.lines().nth(1).unwrap(), "1e-2,1e2,1.5,2,0.75");
    }
}
