//! Batch front end: `derive-akns`, `zc-check`, `solve`, `verify` and `reduce`.

mod render;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use slnt_core::config::FrameSpec;
use slnt_core::hierarchy::{akns_reduce, symbolic_dressing, CommutativeFrame, Deformation, FrameKind, HierarchyKind};
use slnt_core::solver::{
    build_wave_pair, extract_solution, fd_verify, reduce_subhierarchy, source_loop, Check, FdProblem,
    HierarchySolution, ResidualReport, WaveMatrixPair,
};
use slnt_core::{DerivationSymbol, Error, LoopSeries, Scalar, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_BIG_CELL: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "slnt",
    version,
    about = "Loop-series hierarchies: symbolic derivation and Birkhoff-factorization solutions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reduce the first zero-curvature relation for n = 2 to the AKNS system.
    DeriveAkns(Output),
    /// Zero-curvature residuals of a deformation, with Lax-defined derivatives.
    ZcCheck(ZcArgs),
    /// Factor the dressed loop and print the combined solution.
    Solve(SolveArgs),
    /// Finite-difference verification of Lax and zero-curvature relations.
    Verify(VerifyArgs),
    /// Restrict a solution to the standard or strict hierarchy.
    Reduce(ReduceArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FrameArg {
    Diagonal,
    Unipotent,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Standard,
    Strict,
    Combined,
}

impl From<KindArg> for HierarchyKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Standard => HierarchyKind::Standard,
            KindArg::Strict => HierarchyKind::Strict,
            KindArg::Combined => HierarchyKind::Combined,
        }
    }
}

#[derive(Args, Debug)]
struct Output {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

/// Config file and the flags that override it.
#[derive(Args, Debug)]
struct Setup {
    /// Solver config, or the JSON printed by `solve`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum)]
    frame: Option<FrameArg>,
    #[arg(long = "depth-N")]
    depth_n: Option<usize>,
    #[arg(long = "depth-M")]
    depth_m: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    tol_fact: Option<f64>,
    #[arg(long)]
    fd_step: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct ZcArgs {
    #[command(flatten)]
    setup: Setup,
    /// Use a seeded symbolic dressing of this kind instead of the solver.
    #[arg(long, value_enum)]
    symbolic: Option<KindArg>,
    /// Window depth of the symbolic dressing.
    #[arg(long, default_value_t = 4)]
    depth: i32,
    /// Relations `zc:m1,a1:m2,a2`; all pairs of the default flows when omitted.
    #[arg(long, num_args = 1..)]
    checks: Vec<String>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    setup: Setup,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    setup: Setup,
    #[arg(long, value_enum, default_value = "combined")]
    kind: KindArg,
    /// Relations `lax:m,a` or `zc:m1,a1:m2,a2`.
    #[arg(long, num_args = 1..)]
    checks: Vec<String>,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[command(flatten)]
    setup: Setup,
    #[arg(long, value_enum, default_value = "standard")]
    kind: KindArg,
}

/// Failure of a command, with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BigCellViolation(_) => EXIT_BIG_CELL,
            Error::ResourceExceeded { .. } => EXIT_RESOURCE,
            _ => EXIT_VALIDATION,
        };
        Failure { code, message: e.to_string() }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_VALIDATION, message: message.into() }
}

impl Setup {
    fn load(&self) -> Result<SolverConfig, Failure> {
        let mut cfg = match &self.config {
            None => SolverConfig::default(),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
                let value: Value =
                    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
                // Output of `solve` carries its config.
                let value = match value {
                    Value::Object(mut m) if m.contains_key("provenance") && m.contains_key("config") => {
                        m.remove("config").unwrap_or_default()
                    }
                    v => v,
                };
                SolverConfig::from_json(&value.to_string())?
            }
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(f) = self.frame {
            let kind = match f {
                FrameArg::Diagonal => FrameKind::Diagonal,
                FrameArg::Unipotent => FrameKind::Unipotent,
            };
            cfg.frame = FrameSpec { kind, basis: None };
        }
        if let Some(v) = self.depth_n {
            cfg.n_bound = v;
        }
        if let Some(v) = self.depth_m {
            cfg.m_depth = v;
        }
        if let Some(v) = self.grid {
            cfg.grid = v;
        }
        if let Some(v) = self.tol_fact {
            cfg.tolerances.fact = v;
        }
        if let Some(v) = self.fd_step {
            cfg.tolerances.fd_step = v;
        }
        Ok(SolverConfig::from_json(&cfg.canonical_json())?)
    }
}

struct Solved {
    cfg: SolverConfig,
    frame: CommutativeFrame,
    pair: WaveMatrixPair,
}

fn solve_config(cfg: SolverConfig) -> Result<Solved, Failure> {
    let frame = cfg.frame()?;
    let params = cfg.params();
    let g = source_loop(&cfg.g, cfg.n, cfg.seed, &params)?;
    let pair = build_wave_pair(&g, &cfg.exponent()?, &cfg.flow_record(), &frame, &params)?;
    Ok(Solved { cfg, frame, pair })
}

#[derive(Serialize)]
struct FactorizationStats {
    residual: f64,
    truncation: f64,
    reconstruction: f64,
    truncation_flagged: bool,
}

#[derive(Serialize)]
struct SolutionOutput<'a> {
    provenance: String,
    config: Value,
    factorization: FactorizationStats,
    solution: &'a HierarchySolution,
}

impl Solved {
    fn output<'a>(&self, solution: &'a HierarchySolution) -> SolutionOutput<'a> {
        let p = &self.pair;
        SolutionOutput {
            provenance: self.cfg.provenance(),
            config: serde_json::from_str(&self.cfg.canonical_json()).expect("canonical config is JSON"),
            factorization: FactorizationStats {
                residual: p.residual,
                truncation: p.truncation,
                reconstruction: p.reconstruction,
                truncation_flagged: p.truncation_flagged,
            },
            solution,
        }
    }
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    provenance: String,
    kind: HierarchyKind,
    tolerance: f64,
    passed: bool,
    max_residual: f64,
    checks: &'a ResidualReport,
}

#[derive(Serialize)]
pub(crate) struct ZcEntry {
    pub(crate) zero_curvature: f64,
    pub(crate) terms: usize,
}

#[derive(Serialize)]
pub(crate) struct ZcOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub(crate) provenance: Option<String>,
    pub(crate) kind: HierarchyKind,
    pub(crate) symbolic: bool,
    pub(crate) checks: std::collections::BTreeMap<String, ZcEntry>,
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

fn default_flows(kind: HierarchyKind, rank: usize) -> Vec<DerivationSymbol> {
    let ms: &[i32] = match kind {
        HierarchyKind::Standard => &[0, 1, 2],
        HierarchyKind::Strict => &[1, 2],
        HierarchyKind::Combined => &[-1, 0, 1, 2],
    };
    ms.iter().flat_map(|&m| (1..=rank).map(move |a| DerivationSymbol::new(m, a))).collect()
}

fn parse_checks(items: &[String]) -> Result<Vec<Check>, Failure> {
    let mut out = Vec::new();
    for item in items.iter().flat_map(|s| s.split(|c: char| c.is_whitespace() || c == ';')).filter(|s| !s.is_empty()) {
        out.push(item.parse::<Check>()?);
    }
    Ok(out)
}

fn zc_pairs(
    checks: &[Check],
    kind: HierarchyKind,
    rank: usize,
) -> Result<Vec<(DerivationSymbol, DerivationSymbol)>, Failure> {
    if checks.is_empty() {
        let fl = default_flows(kind, rank);
        return Ok(fl.iter().enumerate().flat_map(|(i, a)| fl[i + 1..].iter().map(move |b| (*a, *b))).collect());
    }
    checks
        .iter()
        .map(|c| match c {
            Check::Zc(a, b) => Ok((*a, *b)),
            Check::Lax(_) => Err(invalid(format!("{c}: zc-check evaluates zero-curvature relations only"))),
        })
        .collect()
}

fn zc_entries<S: Scalar>(
    d: &Deformation<S>,
    pairs: &[(DerivationSymbol, DerivationSymbol)],
) -> Result<ZcOutput, Failure> {
    let mut checks = std::collections::BTreeMap::new();
    for &(a, b) in pairs {
        let r: LoopSeries<S> = d.zc_residual_lax(a, b)?;
        checks.insert(Check::Zc(a, b).to_string(), ZcEntry { zero_curvature: r.max_norm(), terms: r.terms().count() });
    }
    Ok(ZcOutput { provenance: None, kind: d.kind(), symbolic: false, checks })
}

fn zc_check(args: &ZcArgs) -> Result<(String, i32), Failure> {
    let checks = parse_checks(&args.checks)?;
    let cfg = args.setup.load()?;
    // Symbolic residuals must cancel exactly.
    let (out, tol) = match args.symbolic {
        Some(kind) => {
            let frame = cfg.frame()?;
            let kind = kind.into();
            let d = symbolic_dressing(cfg.seed, kind, &frame, args.depth)?;
            let mut out = zc_entries(&d, &zc_pairs(&checks, kind, frame.rank())?)?;
            out.symbolic = true;
            (out, 0.0)
        }
        None => {
            let tol = 10.0 * cfg.tolerances.fact;
            let s = solve_config(cfg)?;
            let sol = extract_solution(&s.pair, &s.frame)?;
            let d = sol.deformation(&s.frame)?;
            let mut out = zc_entries(&d, &zc_pairs(&checks, sol.kind, s.frame.rank())?)?;
            out.provenance = Some(s.cfg.provenance());
            (out, tol)
        }
    };
    let ok = out.checks.values().all(|e| e.zero_curvature <= tol);
    let text = match args.setup.output.format {
        Format::Json => json(&out),
        Format::Text => render::zc_text(&out),
    };
    Ok((text, if ok { EXIT_OK } else { EXIT_CHECKS_FAILED }))
}

fn solve(args: &SolveArgs) -> Result<(String, i32), Failure> {
    let s = solve_config(args.setup.load()?)?;
    let sol = extract_solution(&s.pair, &s.frame)?;
    Ok((emit(&s, &sol, args.setup.output.format), EXIT_OK))
}

fn reduce(args: &ReduceArgs) -> Result<(String, i32), Failure> {
    let s = solve_config(args.setup.load()?)?;
    let sol = reduce_subhierarchy(&s.pair, args.kind.into(), &s.frame)?;
    Ok((emit(&s, &sol, args.setup.output.format), EXIT_OK))
}

fn emit(s: &Solved, sol: &HierarchySolution, format: Format) -> String {
    let out = s.output(sol);
    match format {
        Format::Json => json(&out),
        Format::Text => render::solution_text(&out.provenance, &s.pair, sol),
    }
}

fn verify(args: &VerifyArgs) -> Result<(String, i32), Failure> {
    let cfg = args.setup.load()?;
    let frame = cfg.frame()?;
    let kind: HierarchyKind = args.kind.into();
    let params = cfg.params();
    let g = source_loop(&cfg.g, cfg.n, cfg.seed, &params)?;
    let (l, flows) = (cfg.exponent()?, cfg.flow_record());
    let mut checks = parse_checks(&args.checks)?;
    if checks.is_empty() {
        let lax = match kind {
            HierarchyKind::Strict => &[1, 2][..],
            _ => &[0, 1, 2][..],
        };
        checks = lax
            .iter()
            .flat_map(|&m| (1..=frame.rank()).map(move |a| Check::Lax(DerivationSymbol::new(m, a))))
            .collect();
        if kind == HierarchyKind::Combined {
            checks.push(Check::Zc(DerivationSymbol::new(-1, 1), DerivationSymbol::new(1, 1)));
        }
    }
    let problem = FdProblem { g: &g, l: &l, frame: &frame, flows: &flows, kind, params };
    let report = fd_verify(&problem, &checks)?;
    let tolerance = params.tol.residual;
    let passed = report.passes(tolerance);
    let out = CheckOutput {
        provenance: cfg.provenance(),
        kind,
        tolerance,
        passed,
        max_residual: report.max_residual(),
        checks: &report,
    };
    let text = match args.setup.output.format {
        Format::Json => json(&out),
        Format::Text => render::report_text(&out.provenance, kind, tolerance, passed, &report),
    };
    Ok((text, if passed { EXIT_OK } else { EXIT_CHECKS_FAILED }))
}

fn derive_akns(args: &Output) -> Result<(String, i32), Failure> {
    let report = akns_reduce()?;
    let text = match args.format {
        Format::Json => json(&report),
        Format::Text => report.render_text(),
    };
    Ok((text, EXIT_OK))
}

/// Parses `argv` (program name first), runs one command and returns its exit code.
pub fn run<I, T>(argv: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ =
                if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::DeriveAkns(a) => derive_akns(a),
        Command::ZcCheck(a) => zc_check(a),
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::Reduce(a) => reduce(a),
    };
    match result {
        Ok((text, code)) => {
            let _ = out.write_all(text.as_bytes());
            code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
