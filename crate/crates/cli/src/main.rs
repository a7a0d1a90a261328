//! Command-line driver unifying the sp4-core modules: algebra verification
//! reports, Higgs invariants, PDE solves, harmonic-map diagnostics,
//! rigidity kernels, and moduli tables.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, bad config, invalid
//! parameters), 2 non-convergence / failed verification.
//!
//! Output formats: structured text (`key: value` lines, records separated
//! by blank lines) or CSV (RFC-4180-style quoting). All floating-point
//! values are printed with 17 significant digits. Output goes to stdout
//! unless an output directory is selected (`--out-dir`, overridden by the
//! `SP4_OUT_DIR` environment variable — the only env override).

mod config;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sp4_core::cyclic::{rigidity_nullspace, CyclicFrame};
use sp4_core::grid::TorusDomain;
use sp4_core::harmonic::{energy, holonomy, hopf, immersion_check};
use sp4_core::higgs::{
    build_sl4, cayley_partner, hitchin_invariants, stability_flag, zeta4_fixed_point_check,
    HiggsData, MatField2,
};
use sp4_core::liealg::{dump_table, invariant_suite, ALPHA1, ALPHA2};
use sp4_core::moduli::{component_census, dimension_check, fiber_model, rr_dims, ADim};
use sp4_core::solver::{solve, Background, Init, MetricField, Mode, SolveOptions};
use sp4_core::C64;

use config::ConfigFile;
use output::{fmt_c, fmt_f, Record, Sink};

/// Exit-status carrying error.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config, or parameter values (exit 1).
    Usage(String),
    /// Non-convergence or failed verification (exit 2).
    NoConvergence(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::NoConvergence(_) => 2,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::NoConvergence(m) => m,
        }
    }
}

impl From<sp4_core::Error> for CliError {
    fn from(e: sp4_core::Error) -> Self {
        match e {
            sp4_core::Error::NoConvergence(m) => CliError::NoConvergence(m),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o error: {e}"))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Parser)]
#[command(
    name = "sp4",
    version,
    about = "Cyclic-surface toolkit: sp(4) algebra checks, Higgs-bundle normal forms, \
             self-duality solves, harmonic diagnostics, rigidity kernels, moduli tables",
    disable_help_subcommand = true
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write artifacts into this directory instead of stdout
    /// (`SP4_OUT_DIR` overrides).
    #[arg(long, global = true)]
    out_dir: Option<String>,
    /// Flat key=value config file supplying defaults for any long flag
    /// (strict: unknown keys are rejected).
    #[arg(long, global = true)]
    config: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lie-algebra tables and invariant verification.
    Algebra {
        #[command(subcommand)]
        action: AlgebraAction,
    },
    /// Higgs-bundle normal-form reports.
    Higgs {
        #[command(subcommand)]
        action: HiggsAction,
    },
    /// Solve the self-duality system on the torus desk model.
    Solve(SolveArgs),
    /// Hopf differential of the data (metric-independent).
    Hopf(SolveArgs),
    /// Harmonic-map energy at the solved metric.
    Energy(SolveArgs),
    /// Holonomy of the associated connection at the solved metric.
    Holonomy(SolveArgs),
    /// Rigidity nullspace of a cyclic frame.
    Rigidity(RigidityArgs),
    /// Moduli census and dimension counts.
    Moduli(ModuliArgs),
}

#[derive(Subcommand)]
enum AlgebraAction {
    /// Run the full invariant suite and report each check.
    Check {
        /// Seed for the randomized checks.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Dump the structure-constant and basis tables.
    Dump,
}

#[derive(Subcommand)]
enum HiggsAction {
    /// Invariants and classification of constant-coefficient data.
    Invariants(DataArgs),
}

/// Constant Higgs data shared by several subcommands.
#[derive(Args, Clone)]
struct DataArgs {
    /// mu as `re` or `re,im`.
    #[arg(long)]
    mu: Option<String>,
    /// nu as `re` or `re,im`.
    #[arg(long)]
    nu: Option<String>,
    /// q2 as `re` or `re,im`.
    #[arg(long)]
    q2: Option<String>,
    /// Genus of the modeled surface (>= 2).
    #[arg(long)]
    genus: Option<usize>,
    /// Line-bundle degree (g-1 <= d <= 3g-3).
    #[arg(long)]
    degree: Option<i64>,
}

#[derive(Args, Clone)]
struct SolveArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Grid resolution (even, >= 8).
    #[arg(long)]
    n: Option<usize>,
    /// Torus modulus as `re,im` with im > 0.
    #[arg(long)]
    tau: Option<String>,
    /// Torus area.
    #[arg(long)]
    area: Option<f64>,
    /// Full Hermitian-metric mode (default: diagonal).
    #[arg(long)]
    full: bool,
    /// Residual sup-norm target.
    #[arg(long)]
    tol: Option<f64>,
    /// Maximum outer iterations.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Seed for a random initial metric (omit for the flat start).
    #[arg(long)]
    seed: Option<u64>,
    /// Background override `k1,k2` (default: automatic for the data).
    #[arg(long)]
    background: Option<String>,
    /// Also emit the solved metric field nodewise.
    #[arg(long)]
    dump_fields: bool,
}

#[derive(Args, Clone)]
struct RigidityArgs {
    /// Frame component on the first negative simple root, `re` or `re,im`.
    #[arg(long)]
    phi1: Option<String>,
    /// Frame component on the second negative simple root.
    #[arg(long)]
    phi2: Option<String>,
    /// Frame component on the highest-root line.
    #[arg(long)]
    phi_mu: Option<String>,
    /// Which frame root to zero in the constraint system: `a1` or `a2`.
    #[arg(long)]
    zero_root: Option<String>,
}

#[derive(Args, Clone)]
struct ModuliArgs {
    /// Genus (>= 2).
    #[arg(long)]
    genus: Option<i64>,
    /// Optional degree for section counts and the fiber model.
    #[arg(long)]
    degree: Option<i64>,
}

fn parse_c64(label: &str, s: &str) -> Result<C64, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = || CliError::Usage(format!("--{label}: expected `re` or `re,im`, got `{s}`"));
    match parts.as_slice() {
        [re] => Ok(C64::new(re.trim().parse().map_err(|_| bad())?, 0.0)),
        [re, im] => Ok(C64::new(
            re.trim().parse().map_err(|_| bad())?,
            im.trim().parse().map_err(|_| bad())?,
        )),
        _ => Err(bad()),
    }
}

/// Resolved data parameters (flag, else config, else default).
struct DataParams {
    mu: C64,
    nu: C64,
    q2: C64,
    genus: usize,
    degree: i64,
}

impl DataArgs {
    fn resolve(&self, cfg: &ConfigFile) -> Result<DataParams, CliError> {
        let pick = |flag: &Option<String>, key: &str| -> Option<String> {
            flag.clone().or_else(|| cfg.get(key))
        };
        let mu = parse_c64("mu", &pick(&self.mu, "mu").unwrap_or_else(|| "1".into()))?;
        let nu = parse_c64("nu", &pick(&self.nu, "nu").unwrap_or_else(|| "0".into()))?;
        let q2 = parse_c64("q2", &pick(&self.q2, "q2").unwrap_or_else(|| "0".into()))?;
        let genus = match self.genus.or(cfg.get_parsed("genus")?) {
            Some(g) => g,
            None => 2,
        };
        let degree = match self.degree.or(cfg.get_parsed("degree")?) {
            Some(d) => d,
            None => 2,
        };
        Ok(DataParams { mu, nu, q2, genus, degree })
    }
}

struct SolveParams {
    data: DataParams,
    n: usize,
    dom: TorusDomain,
    mode: Mode,
    init: Init,
    opts: SolveOptions,
    dump_fields: bool,
}

impl SolveArgs {
    fn resolve(&self, cfg: &ConfigFile) -> Result<SolveParams, CliError> {
        let data = self.data.resolve(cfg)?;
        let n = self.n.or(cfg.get_parsed("n")?).unwrap_or(16);
        if n < 8 || n % 2 != 0 {
            return Err(CliError::Usage(format!("--n must be even and >= 8, got {n}")));
        }
        let tau_s = self.tau.clone().or_else(|| cfg.get("tau")).unwrap_or_else(|| "0,1".into());
        let tau = parse_c64("tau", &tau_s)?;
        let area = self.area.or(cfg.get_parsed("area")?).unwrap_or(1.0);
        let dom = TorusDomain::new(tau, n, area).map_err(CliError::from)?;
        let full = self.full || cfg.get_parsed::<bool>("full")?.unwrap_or(false);
        let mode = if full { Mode::Full } else { Mode::Diagonal };
        let seed = self.seed.or(cfg.get_parsed("seed")?);
        let init = match seed {
            Some(s) => Init::Random(s),
            None => Init::Flat,
        };
        let tol = self.tol.or(cfg.get_parsed("tol")?);
        if let Some(t) = tol {
            if t <= 0.0 {
                return Err(CliError::Usage(format!("--tol must be positive, got {t}")));
            }
        }
        let max_iter = self.max_iter.or(cfg.get_parsed("max_iter")?);
        let background = match self.background.clone().or_else(|| cfg.get("background")) {
            Some(s) => {
                let z = parse_c64("background", &s)?;
                Some(Background::new(z.re, z.im))
            }
            None => None,
        };
        let mut opts = SolveOptions::default();
        if let Some(t) = tol {
            opts.tol = t;
        }
        if let Some(m) = max_iter {
            opts.max_iter = m;
        }
        opts.background = background;
        let dump_fields =
            self.dump_fields || cfg.get_parsed::<bool>("dump_fields")?.unwrap_or(false);
        Ok(SolveParams { data, n, dom, mode, init, opts, dump_fields })
    }
}

fn higgs_data(p: &DataParams) -> Result<HiggsData, CliError> {
    HiggsData::constants(p.genus, p.degree, p.mu, p.nu, p.q2).map_err(CliError::from)
}

fn solve_report_record(rep: &sp4_core::solver::SolveReport, mode: Mode) -> Record {
    vec![
        ("mode".into(), match mode {
            Mode::Diagonal => "diagonal".into(),
            Mode::Full => "full".into(),
        }),
        ("iterations".into(), rep.iterations.to_string()),
        ("residual_sup".into(), fmt_f(rep.residual_sup)),
        ("residual_l2".into(), fmt_f(rep.residual_l2)),
        ("offdiag_sup".into(), fmt_f(rep.offdiag_sup)),
        ("converged".into(), rep.converged.to_string()),
    ]
}

fn run_solve_family(
    args: &SolveArgs,
    cfg: &ConfigFile,
) -> Result<(SolveParams, HiggsData, MetricField, sp4_core::solver::SolveReport), CliError> {
    let p = args.resolve(cfg)?;
    let h = higgs_data(&p.data)?;
    let (m, rep) = solve(&h, &p.dom, p.mode, p.init.clone(), &p.opts)?;
    Ok((p, h, m, rep))
}

fn metric_field_records(m: &MetricField) -> Vec<Record> {
    let n = m.n();
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let b = m.h2(i, j);
            out.push(vec![
                ("i".into(), i.to_string()),
                ("j".into(), j.to_string()),
                ("h11".into(), fmt_f(b[(0, 0)].re)),
                ("h22".into(), fmt_f(b[(1, 1)].re)),
                ("h12".into(), fmt_c(b[(0, 1)])),
            ]);
        }
    }
    out
}

fn data_record(p: &DataParams) -> Record {
    vec![
        ("mu".into(), fmt_c(p.mu)),
        ("nu".into(), fmt_c(p.nu)),
        ("q2".into(), fmt_c(p.q2)),
        ("genus".into(), p.genus.to_string()),
        ("degree".into(), p.degree.to_string()),
    ]
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::empty(),
    };
    let format = cli
        .format
        .or(match cfg.get("format").as_deref() {
            Some("text") => Some(Format::Text),
            Some("csv") => Some(Format::Csv),
            Some(other) => {
                return Err(CliError::Usage(format!("config format: unknown value `{other}`")))
            }
            None => None,
        })
        .unwrap_or(Format::Text);
    // Env var override applies to the output directory only.
    let out_dir = std::env::var("SP4_OUT_DIR")
        .ok()
        .or(cli.out_dir.clone())
        .or_else(|| cfg.get("out_dir"));
    let sink = Sink::new(format, out_dir);

    match &cli.command {
        Command::Algebra { action } => match action {
            AlgebraAction::Check { seed } => {
                let seed = seed.or(cfg.get_parsed("seed")?).unwrap_or(0);
                let items = invariant_suite(seed);
                let all = items.iter().all(|i| i.passed);
                let records: Vec<Record> = items
                    .iter()
                    .map(|i| {
                        vec![
                            ("check".into(), i.name.clone()),
                            ("passed".into(), i.passed.to_string()),
                            ("detail".into(), i.detail.clone()),
                        ]
                    })
                    .collect();
                sink.emit("algebra-check", &records)?;
                if !all {
                    return Err(CliError::NoConvergence("invariant suite failed".into()));
                }
            }
            AlgebraAction::Dump => {
                sink.emit_raw("algebra-dump", &dump_table())?;
            }
        },
        Command::Higgs { action } => {
            let HiggsAction::Invariants(data) = action;
            let p = data.resolve(&cfg)?;
            let h = higgs_data(&p)?;
            let s = build_sl4(&h);
            let (p2, p4) = hitchin_invariants(&s);
            let cay = cayley_partner(&h);
            let psi = match &cay.psi {
                MatField2::Const(m) => *m,
                MatField2::Grid(g) => *g.at(0, 0),
            };
            let zeta4 = if p.q2.norm() == 0.0 {
                zeta4_fixed_point_check(&h)?.to_string()
            } else {
                "n/a (q2 != 0)".into()
            };
            let mut rec = data_record(&p);
            rec.extend([
                ("tr_phi2".into(), fmt_c(p2.at(0, 0))),
                ("tr_phi4".into(), fmt_c(p4.at(0, 0))),
                ("stability".into(), format!("{:?}", stability_flag(&h))),
                ("zeta4_fixed_point".into(), zeta4),
                ("immersion".into(), immersion_check(&s).to_string()),
                ("psi11".into(), fmt_c(psi[(0, 0)])),
                ("psi12".into(), fmt_c(psi[(0, 1)])),
                ("psi21".into(), fmt_c(psi[(1, 0)])),
                ("psi22".into(), fmt_c(psi[(1, 1)])),
            ]);
            sink.emit("higgs-invariants", &[rec])?;
        }
        Command::Solve(args) => {
            let (p, _h, m, rep) = run_solve_family(args, &cfg)?;
            let mut rec = data_record(&p.data);
            rec.push(("n".into(), p.n.to_string()));
            rec.extend(solve_report_record(&rep, p.mode));
            sink.emit("solve", &[rec])?;
            if p.dump_fields {
                sink.emit("solve-metric", &metric_field_records(&m))?;
            }
        }
        Command::Hopf(args) => {
            // Metric-independent: no solve needed.
            let p = args.resolve(&cfg)?;
            let h = higgs_data(&p.data)?;
            let m = MetricField::flat(Mode::Diagonal, p.n);
            let hp = hopf(&h, &m);
            let mut rec = data_record(&p.data);
            rec.extend([
                ("hopf".into(), fmt_c(hp.at(0, 0))),
                ("hopf_sup".into(), fmt_f(hp.sup())),
                ("minimal_immersion".into(), (hp.sup() == 0.0).to_string()),
            ]);
            sink.emit("hopf", &[rec])?;
        }
        Command::Energy(args) => {
            let (p, h, m, rep) = run_solve_family(args, &cfg)?;
            let e = energy(&h, &m, &p.dom)?;
            let mut rec = data_record(&p.data);
            rec.push(("n".into(), p.n.to_string()));
            rec.push(("energy".into(), fmt_f(e)));
            rec.extend(solve_report_record(&rep, p.mode));
            sink.emit("energy", &[rec])?;
        }
        Command::Holonomy(args) => {
            let (p, h, m, rep) = run_solve_family(args, &cfg)?;
            let bg = p.opts.background.unwrap_or_else(|| Background::auto(&h));
            let res = holonomy(&h, &m, &p.dom, &bg)?;
            let mut rec = data_record(&p.data);
            rec.push(("n".into(), p.n.to_string()));
            rec.extend([
                ("commutator_defect".into(), fmt_f(res.commutator_defect)),
                ("symplectic_defect".into(), fmt_f(res.symplectic_defect)),
                ("det_defect".into(), fmt_f(res.det_defect)),
                ("reality_defect".into(), fmt_f(res.reality_defect)),
            ]);
            for (name, mat) in [("ma", &res.ma), ("mb", &res.mb)] {
                for r in 0..4 {
                    for c in 0..4 {
                        rec.push((format!("{name}{}{}", r + 1, c + 1), fmt_c(mat[(r, c)])));
                    }
                }
            }
            rec.extend(solve_report_record(&rep, p.mode));
            sink.emit("holonomy", &[rec])?;
        }
        Command::Rigidity(args) => {
            let pick = |flag: &Option<String>, key: &str, dflt: &str| -> String {
                flag.clone().or_else(|| cfg.get(key)).unwrap_or_else(|| dflt.into())
            };
            let phi1 = parse_c64("phi1", &pick(&args.phi1, "phi1", "1"))?;
            let phi2 = parse_c64("phi2", &pick(&args.phi2, "phi2", "1"))?;
            let phi_mu = parse_c64("phi-mu", &pick(&args.phi_mu, "phi_mu", "0"))?;
            let zr = pick(&args.zero_root, "zero_root", "a2");
            let root = match zr.as_str() {
                "a1" => ALPHA1.neg(),
                "a2" => ALPHA2.neg(),
                other => {
                    return Err(CliError::Usage(format!(
                        "--zero-root must be `a1` or `a2`, got `{other}`"
                    )))
                }
            };
            let frame = CyclicFrame::new(phi1, phi2, phi_mu);
            let res = rigidity_nullspace(&frame, root)?;
            let svs =
                res.singular_values.iter().map(|s| fmt_f(*s)).collect::<Vec<_>>().join(" ");
            let rec: Record = vec![
                ("phi1".into(), fmt_c(phi1)),
                ("phi2".into(), fmt_c(phi2)),
                ("phi_mu".into(), fmt_c(phi_mu)),
                ("zero_root".into(), zr),
                ("hypothesis_met".into(), res.hypothesis_met.to_string()),
                ("dimension".into(), res.dimension.to_string()),
                ("singular_values".into(), svs),
            ];
            sink.emit("rigidity", &[rec])?;
        }
        Command::Moduli(args) => {
            let genus = args
                .genus
                .or(cfg.get_parsed("genus")?)
                .ok_or_else(|| CliError::Usage("--genus is required".into()))?;
            let census = component_census(genus)?;
            let mut rec: Record = vec![
                ("genus".into(), census.genus.to_string()),
                ("maximal_components".into(), census.maximal_count.to_string()),
                ("smooth_components".into(), census.smooth_count.to_string()),
                ("hitchin_components".into(), census.hitchin_count.to_string()),
                ("w1_nonzero_components".into(), census.w1_nonzero_count.to_string()),
                (
                    "toledo_range".into(),
                    format!("{}..{}", census.toledo_range.0, census.toledo_range.1),
                ),
                (
                    "exceptional_degrees".into(),
                    format!("{}..{}", census.gothen_degrees.0, census.gothen_degrees.1),
                ),
            ];
            if let Some(d) = args.degree.or(cfg.get_parsed("degree")?) {
                let (a, b) = rr_dims(genus, d)?;
                rec.push(("degree".into(), d.to_string()));
                rec.push(("b_sections".into(), b.to_string()));
                match a {
                    ADim::Count(a) => {
                        rec.push(("a_sections".into(), a.to_string()));
                        let fm = fiber_model(a, b)?;
                        rec.push(("fiber".into(), fm.description));
                        rec.push(("fiber_dimension".into(), fm.dimension.to_string()));
                        if d > genus - 1 && d < 2 * genus - 2 {
                            rec.push((
                                "dimension_identity".into(),
                                dimension_check(genus, d)?.to_string(),
                            ));
                        }
                    }
                    ADim::NDependent => {
                        rec.push(("a_sections".into(), "line-bundle dependent".into()));
                    }
                }
            }
            sink.emit("moduli", &[rec])?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help/version requests are success; everything else is usage.
            use clap::error::ErrorKind;
            let kind = e.kind();
            let _ = e.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
