//! Command-line front end: solves relaxations, sweeps rotation angles, runs
//! segment-count studies and dumps envelope data.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use opfrelax::netmodel::{canonical_case_name, parse_matpower_case, reference_gap, NetworkCase, ReferenceObjectives};
use opfrelax::prodenv::{
    arc_extreme_points, lift_by_voltage_box, sincos_envelope_metrics, write_polytope_csv, HullMetrics, VoltageBox,
};
use opfrelax::relax::{
    build_lrqc, build_qc, build_rqc, solve_relaxation, BuildOptions, ClarabelAdapter, RelaxModel, RelaxationKind,
    SolveStatus,
};
use opfrelax::rotation::{fixed_psi, select_bus_rotation_angles_cached, PsiAssignment, SweepResult, VolumeCache};
use opfrelax::trigenv::{build_tangent_envelope, write_envelope_csv, TrigKind};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input, or an invalid argument combination.
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Build(String),
    #[error("{0}")]
    NonOptimal(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Build(_) => 3,
            CliError::NonOptimal(_) => 4,
            CliError::Output(_) => 1,
        }
    }
}

impl From<opfrelax::Error> for CliError {
    fn from(e: opfrelax::Error) -> Self {
        use opfrelax::Error as E;
        match e {
            E::Parse { .. } | E::Validation(_) | E::InvalidArgument(_) | E::Json(_) => CliError::Input(e.to_string()),
            E::Build(_) | E::Numerical(_) => CliError::Build(e.to_string()),
            E::Solver(_) => CliError::NonOptimal(e.to_string()),
            E::Io(_) => CliError::Output(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "opfrelax", version, about = "QC, RQC and LRQC relaxations of AC optimal power flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and solve a relaxation, reporting the bound and optimality gap.
    Solve(SolveArgs),
    /// Sweep the rotation angle per bus and report the hull volumes.
    SweepPsi(SweepArgs),
    /// Solve LRQC for several segment counts.
    NsegStudy(NsegArgs),
    /// Write tangent-envelope and arc-polytope CSV files for one interval.
    EnvelopeDump(DumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Relaxation {
    Qc,
    Rqc,
    Lrqc,
}

impl From<Relaxation> for RelaxationKind {
    fn from(r: Relaxation) -> Self {
        match r {
            Relaxation::Qc => RelaxationKind::Qc,
            Relaxation::Rqc => RelaxationKind::Rqc,
            Relaxation::Lrqc => RelaxationKind::Lrqc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Clarabel,
}

/// `zero`, `value:<deg>` or `per-bus`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiSpec {
    Zero,
    Value(f64),
    PerBus,
}

impl FromStr for PsiSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "zero" => Ok(PsiSpec::Zero),
            "per-bus" => Ok(PsiSpec::PerBus),
            _ => {
                let deg = s
                    .strip_prefix("value:")
                    .ok_or_else(|| format!("expected zero, value:<deg> or per-bus, got {s:?}"))?;
                let v: f64 = deg.parse().map_err(|_| format!("bad angle {deg:?}"))?;
                if !v.is_finite() {
                    return Err(format!("bad angle {deg:?}"));
                }
                Ok(PsiSpec::Value(v))
            }
        }
    }
}

impl PsiSpec {
    fn label(&self) -> String {
        match self {
            PsiSpec::Zero => "zero".into(),
            PsiSpec::Value(v) => format!("value:{v}"),
            PsiSpec::PerBus => "per-bus".into(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// MATPOWER case file.
    #[arg(long)]
    pub case: PathBuf,
    /// JSON object of case name to AC objective, overriding the embedded values.
    #[arg(long)]
    pub reference_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for the per-branch hull-volume cache.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Omit wall-clock times so output is identical across reruns.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "lrqc")]
    pub relaxation: Relaxation,
    #[arg(long, default_value = "per-bus")]
    pub psi: PsiSpec,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub nseg: u32,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub ntan: u32,
    /// Sweep step in degrees for per-bus rotation angles.
    #[arg(long, default_value_t = 1.0)]
    pub step_deg: f64,
    #[arg(long, value_enum, default_value = "clarabel")]
    pub solver: Solver,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 1.0)]
    pub step_deg: f64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub nseg: u32,
}

#[derive(Debug, Clone, Args)]
pub struct NsegArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated segment counts.
    #[arg(long, value_delimiter = ',', default_value = "3,5,10,20")]
    pub nseg: Vec<u32>,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub ntan: u32,
    #[arg(long, default_value = "value:-85")]
    pub psi: PsiSpec,
    #[arg(long, default_value_t = 1.0)]
    pub step_deg: f64,
}

#[derive(Debug, Clone, Args)]
pub struct DumpArgs {
    #[arg(long, value_enum, default_value = "both")]
    pub kind: DumpKind,
    /// Lower end of the unshifted angle interval, degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub theta_lo_deg: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_hi_deg: f64,
    /// Argument shift `a`, degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub shift_deg: f64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub nseg: u32,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub ntan: u32,
    /// Voltage bounds used to lift the polytope.
    #[arg(long, default_value_t = 1.0)]
    pub vmin: f64,
    #[arg(long, default_value_t = 1.0)]
    pub vmax: f64,
    /// Output directory for `envelope.csv` and `polytope.csv`.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpKind {
    Cos,
    Sin,
    Both,
}

/// One relaxation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub case: String,
    pub relaxation: String,
    pub psi: String,
    pub n_seg: Option<u32>,
    pub n_tan: Option<u32>,
    pub status: String,
    /// Reference AC objective, $/h.
    pub reference: Option<f64>,
    /// Relaxation objective, $/h.
    pub bound: Option<f64>,
    pub gap_percent: Option<f64>,
    pub build_time_s: Option<f64>,
    pub solve_time_s: Option<f64>,
}

/// One row of a segment-count study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NsegRow {
    #[serde(flatten)]
    pub report: GapReport,
    /// Branch-averaged envelope metrics at this segment count.
    pub area_2d: f64,
    pub area_2d_normalized: f64,
    pub volume_3d: f64,
}

pub fn load_case(path: &Path) -> Result<NetworkCase> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut case = parse_matpower_case(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if case.name.is_empty() {
        case.name = canonical_case_name(&path.to_string_lossy());
    }
    Ok(case)
}

fn references(file: Option<&Path>) -> Result<ReferenceObjectives> {
    let embedded = ReferenceObjectives::embedded();
    match file {
        None => Ok(embedded),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            Ok(embedded.merged_with(&ReferenceObjectives::from_json(&text)?))
        }
    }
}

fn case_key(path: &Path) -> String {
    canonical_case_name(&path.to_string_lossy())
}

fn load_cache(dir: Option<&Path>, key: &str) -> Result<(VolumeCache, Option<PathBuf>)> {
    let Some(dir) = dir else {
        return Ok((VolumeCache::default(), None));
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
    let path = dir.join(format!("volumes_{key}.json"));
    let cache = if path.exists() { VolumeCache::load(&path)? } else { VolumeCache::default() };
    Ok((cache, Some(path)))
}

fn step_radians(step_deg: f64) -> Result<f64> {
    if !(step_deg > 0.0 && step_deg <= 180.0) {
        return Err(CliError::Input(format!("--step-deg must be in (0, 180], got {step_deg}")));
    }
    Ok(step_deg.to_radians())
}

fn psi_assignment(
    spec: PsiSpec,
    case: &NetworkCase,
    step_deg: f64,
    n_seg: usize,
    cache_dir: Option<&Path>,
    key: &str,
) -> Result<PsiAssignment> {
    Ok(match spec {
        PsiSpec::Zero => PsiAssignment::zero(case),
        PsiSpec::Value(deg) => fixed_psi(deg.to_radians(), case),
        PsiSpec::PerBus => {
            let (mut cache, path) = load_cache(cache_dir, key)?;
            let (psi, _) = select_bus_rotation_angles_cached(case, step_radians(step_deg)?, n_seg, &mut cache)?;
            if let Some(p) = path {
                cache.save(&p)?;
            }
            psi
        }
    })
}

fn secs(d: Duration, enabled: bool) -> Option<f64> {
    enabled.then(|| d.as_secs_f64())
}

fn run_model(
    model: &RelaxModel,
    case: &NetworkCase,
    key: &str,
    refs: &ReferenceObjectives,
    psi: String,
    sizes: (Option<u32>, Option<u32>),
    timing: bool,
) -> Result<GapReport> {
    let sol = solve_relaxation(model, &ClarabelAdapter::default())?;
    let reference = refs.get(key).or_else(|| refs.get(&case.name));
    let gap = match (sol.bound, reference) {
        (Some(b), Some(r)) => Some(reference_gap(b, r)?),
        _ => None,
    };
    Ok(GapReport {
        case: key.to_string(),
        relaxation: model.kind.name().to_string(),
        psi,
        n_seg: sizes.0,
        n_tan: sizes.1,
        status: match sol.status {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Numerical => "numerical",
        }
        .to_string(),
        reference,
        bound: sol.bound,
        gap_percent: gap,
        build_time_s: secs(model.build_time, timing),
        solve_time_s: secs(sol.solve_time, timing),
    })
}

/// Builds and solves the configured relaxation.
pub fn cmd_solve(args: &SolveArgs) -> Result<GapReport> {
    let c = &args.common;
    let case = load_case(&c.case)?;
    let key = case_key(&c.case);
    let refs = references(c.reference_file.as_deref())?;
    let options = BuildOptions { n_tan: args.ntan as usize, n_seg: args.nseg as usize, ..Default::default() };
    let (model, psi_label, sizes) = match args.relaxation {
        Relaxation::Qc => (build_qc(&case, &options), "zero".to_string(), (None, None)),
        Relaxation::Rqc => {
            let psi = match args.psi {
                PsiSpec::Zero => 0.0,
                PsiSpec::Value(deg) => deg.to_radians(),
                PsiSpec::PerBus => return Err(CliError::Input("rqc needs a single angle: --psi zero or value:<deg>".into())),
            };
            (build_rqc(&case, psi, &options), args.psi.label(), (None, Some(args.ntan)))
        }
        Relaxation::Lrqc => {
            let psi = psi_assignment(args.psi, &case, args.step_deg, options.n_seg, c.cache_dir.as_deref(), &key)?;
            (
                build_lrqc(&case, &psi, options.n_seg, options.n_tan, &options),
                args.psi.label(),
                (Some(args.nseg), Some(args.ntan)),
            )
        }
    };
    let model = model.map_err(|e| match e {
        opfrelax::Error::InvalidArgument(m) | opfrelax::Error::Validation(m) => CliError::Build(m),
        other => other.into(),
    })?;
    run_model(&model, &case, &key, &refs, psi_label, sizes, !c.no_timing)
}

pub fn cmd_sweep_psi(args: &SweepArgs) -> Result<Vec<SweepResult>> {
    let c = &args.common;
    let case = load_case(&c.case)?;
    let key = case_key(&c.case);
    let (mut cache, path) = load_cache(c.cache_dir.as_deref(), &key)?;
    let (_, sweeps) = select_bus_rotation_angles_cached(&case, step_radians(args.step_deg)?, args.nseg as usize, &mut cache)?;
    if let Some(p) = path {
        cache.save(&p)?;
    }
    Ok(sweeps)
}

/// Mean envelope metrics over the branches of a case at `n_seg`.
fn branch_metrics(case: &NetworkCase, psi: &PsiAssignment, n_seg: usize) -> Result<HullMetrics> {
    let mut sum = HullMetrics { area_2d: 0.0, area_2d_normalized: 0.0, volume_3d: 0.0 };
    for br in &case.branches {
        let a = opfrelax::netmodel::effective_argument_shift(br, psi.psi(br.from_bus))?;
        let m = sincos_envelope_metrics(a, br.theta_min - a, br.theta_max - a, n_seg)?;
        sum.area_2d += m.area_2d;
        sum.area_2d_normalized += m.area_2d_normalized;
        sum.volume_3d += m.volume_3d;
    }
    let n = case.branches.len().max(1) as f64;
    Ok(HullMetrics { area_2d: sum.area_2d / n, area_2d_normalized: sum.area_2d_normalized / n, volume_3d: sum.volume_3d / n })
}

pub fn cmd_nseg_study(args: &NsegArgs) -> Result<Vec<NsegRow>> {
    let c = &args.common;
    if args.nseg.is_empty() || args.nseg.contains(&0) {
        return Err(CliError::Input("--nseg needs a list of positive counts".into()));
    }
    let case = load_case(&c.case)?;
    let key = case_key(&c.case);
    let refs = references(c.reference_file.as_deref())?;
    let mut rows = Vec::with_capacity(args.nseg.len());
    for &n in &args.nseg {
        let psi = psi_assignment(args.psi, &case, args.step_deg, n as usize, c.cache_dir.as_deref(), &key)?;
        let options = BuildOptions { n_tan: args.ntan as usize, n_seg: n as usize, ..Default::default() };
        let model = build_lrqc(&case, &psi, n as usize, args.ntan as usize, &options)?;
        let report = run_model(&model, &case, &key, &refs, args.psi.label(), (Some(n), Some(args.ntan)), !c.no_timing)?;
        let m = branch_metrics(&case, &psi, n as usize)?;
        rows.push(NsegRow { report, area_2d: m.area_2d, area_2d_normalized: m.area_2d_normalized, volume_3d: m.volume_3d });
    }
    Ok(rows)
}

/// Writes `envelope.csv` and `polytope.csv`; returns their paths.
pub fn cmd_envelope_dump(args: &DumpArgs) -> Result<Vec<PathBuf>> {
    let a = args.shift_deg.to_radians();
    let (lo, hi) = (args.theta_lo_deg.to_radians() - a, args.theta_hi_deg.to_radians() - a);
    if !(lo < hi) {
        return Err(CliError::Input(format!("empty interval [{}, {}]", args.theta_lo_deg, args.theta_hi_deg)));
    }
    let kinds: &[TrigKind] = match args.kind {
        DumpKind::Cos => &[TrigKind::Cos],
        DumpKind::Sin => &[TrigKind::Sin],
        DumpKind::Both => &[TrigKind::Cos, TrigKind::Sin],
    };
    let envs = kinds
        .iter()
        .map(|&k| build_tangent_envelope(k, a, lo, hi, args.ntan as usize))
        .collect::<opfrelax::Result<Vec<_>>>()?;
    let poly = arc_extreme_points(a, lo, hi, args.nseg as usize)?;
    let vbox = VoltageBox { from_lo: args.vmin, from_hi: args.vmax, to_lo: args.vmin, to_hi: args.vmax };
    let lifted = lift_by_voltage_box(&poly, &vbox)?;

    let io = |p: &Path, e: std::io::Error| CliError::Output(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(&args.out).map_err(|e| io(&args.out, e))?;
    let env_path = args.out.join("envelope.csv");
    let poly_path = args.out.join("polytope.csv");
    let mut buf = Vec::new();
    write_envelope_csv(&envs, &mut buf).map_err(|e| io(&env_path, e))?;
    std::fs::write(&env_path, buf).map_err(|e| io(&env_path, e))?;
    let mut buf = Vec::new();
    write_polytope_csv(&[("dump".to_string(), lifted)], &mut buf).map_err(|e| io(&poly_path, e))?;
    std::fs::write(&poly_path, buf).map_err(|e| io(&poly_path, e))?;
    Ok(vec![env_path, poly_path])
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_u(v: Option<u32>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

const REPORT_HEADER: &str = "case,relaxation,psi,n_seg,n_tan,status,reference,bound,gap_percent,build_time_s,solve_time_s";

fn report_csv(r: &GapReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.case,
        r.relaxation,
        r.psi,
        opt_u(r.n_seg),
        opt_u(r.n_tan),
        r.status,
        opt(r.reference),
        opt(r.bound),
        opt(r.gap_percent),
        opt(r.build_time_s),
        opt(r.solve_time_s)
    )
}

pub fn render_report(r: &GapReport, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => json(r)?,
        Format::Csv => format!("{REPORT_HEADER}\n{}\n", report_csv(r)),
    })
}

pub fn render_sweep(sweeps: &[SweepResult], format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                bus: usize,
                psi_deg: Vec<f64>,
                volume: &'a [f64],
                selected_deg: f64,
            }
            let rows: Vec<Row> = sweeps
                .iter()
                .map(|s| Row {
                    bus: s.bus,
                    psi_deg: s.grid.iter().map(|g| round_deg(*g)).collect(),
                    volume: &s.volumes,
                    selected_deg: round_deg(s.argmin),
                })
                .collect();
            json(&rows)?
        }
        Format::Csv => {
            let mut out = String::from("bus,psi_deg,volume,selected\n");
            for s in sweeps {
                for (k, g) in s.grid.iter().enumerate() {
                    let vol = s.volumes.get(k).map(|v| v.to_string()).unwrap_or_default();
                    let sel = u8::from(*g == s.argmin);
                    writeln!(out, "{},{},{vol},{sel}", s.bus, round_deg(*g)).unwrap();
                }
            }
            out
        }
    })
}

pub fn render_nseg(rows: &[NsegRow], format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => json(&rows)?,
        Format::Csv => {
            let mut out = format!("{REPORT_HEADER},area_2d,area_2d_normalized,volume_3d\n");
            for r in rows {
                writeln!(out, "{},{},{},{}", report_csv(&r.report), r.area_2d, r.area_2d_normalized, r.volume_3d).unwrap();
            }
            out
        }
    })
}

/// Degrees with float noise from the radian round trip removed.
fn round_deg(rad: f64) -> f64 {
    (rad.to_degrees() * 1e9).round() / 1e9
}

fn json<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Output(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Output(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Runs one command, writing its output. Non-optimal solves still write
/// their report before returning the error.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Solve(args) => {
            let report = cmd_solve(args)?;
            emit(&render_report(&report, args.common.format)?, args.common.out.as_deref())?;
            if report.status != "optimal" {
                return Err(CliError::NonOptimal(format!("{}: solver ended with status {}", report.case, report.status)));
            }
            Ok(())
        }
        Command::SweepPsi(args) => {
            let sweeps = cmd_sweep_psi(args)?;
            emit(&render_sweep(&sweeps, args.common.format)?, args.common.out.as_deref())
        }
        Command::NsegStudy(args) => {
            let rows = cmd_nseg_study(args)?;
            emit(&render_nseg(&rows, args.common.format)?, args.common.out.as_deref())?;
            match rows.iter().find(|r| r.report.status != "optimal") {
                Some(r) => Err(CliError::NonOptimal(format!("n_seg {:?}: status {}", r.report.n_seg, r.report.status))),
                None => Ok(()),
            }
        }
        Command::EnvelopeDump(args) => {
            for p in cmd_envelope_dump(args)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}
