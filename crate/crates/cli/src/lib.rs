//! Command implementations behind the `tha` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tha_core::components::{ComponentManifest, ManifestLegs};
use tha_core::format::write_atomic;
use tha_core::planner::{load_countermeasure_catalog, search_min_stack, verify_plan, Plan, PlanReport, SearchResult};
use tha_core::scheme::{composite_transmittance, load_scheme, Scheme};
use tha_core::security::{evaluate, InfoBoundReport, PhotonEnergyMode, ProbeBudget, SecurityThresholds};
use tha_core::spectrum::{read_raw_scan_csv, reduce_raw_scan, spectrum_to_csv, TransmittanceSpectrum, WavelengthGrid};
use tha_core::{load_catalog, Leg, PlanConstraints, Provenance, SearchStrategy, SynthModel};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
/// Loopholes found (`evaluate`), no feasible or failing plan (`plan`).
pub const EXIT_FINDING: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "tha", version, about = "Trojan-horse leakage analysis for QKD optical modules")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Analysis grid as `lo:hi:step` in nm.
    #[arg(long, global = true, value_parser = parse_grid, default_value = "1500:2100:1")]
    pub grid: GridSpec,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Holevo threshold separating secure from loophole wavelengths.
    #[arg(long, global = true)]
    pub chi_max: Option<f64>,
    /// Replaces every flat reflection point with this value (dB).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub ref_db: Option<f64>,
    /// Use the 1550 nm photon energy at every wavelength.
    #[arg(long = "fixed-1550", global = true)]
    pub fixed_1550: bool,
    /// Probe budget JSON (`input_power_w`, `sideband_ratio`, `rep_rate_hz`, `photon_energy_mode`).
    #[arg(long, global = true)]
    pub budget: Option<PathBuf>,
    /// Threshold JSON (`chi_max`, `t_secure_db`).
    #[arg(long, global = true)]
    pub thresholds: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<WavelengthGrid> {
        Ok(WavelengthGrid::uniform(self.lo, self.hi, self.step)?)
    }
}

pub fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(format!("expected lo:hi:step, got '{s}'"));
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}"));
    Ok(GridSpec {
        lo: num(lo)?,
        hi: num(hi)?,
        step: num(step)?,
    })
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce a raw intensity scan to a transmittance spectrum.
    Reduce(ReduceArgs),
    /// Write a synthetic component (manifest plus leg CSVs).
    Synth(SynthArgs),
    /// Compute the composite double-pass transmittance of a scheme.
    Compose(SchemeArgs),
    /// Evaluate the Holevo bound of a scheme across the grid.
    Evaluate(SchemeArgs),
    /// Search or verify a countermeasure stack.
    Plan(PlanArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ReduceArgs {
    /// Raw-scan CSV (`wavelength_nm,i_ref,i_mes[,t_f]`).
    pub raw: PathBuf,
    /// Filter transmittance in dB, replacing the `t_f` column.
    #[arg(long, allow_hyphen_values = true)]
    pub filter_db: Option<f64>,
    /// Output file name inside `--out` (default `<stem>_spectrum.csv`).
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// attenuator, isolator, wdm or bend-filter.
    pub model: String,
    /// Component id; also the output file stem.
    #[arg(long)]
    pub id: String,
    /// Model parameters as JSON, or `@file.json`.
    #[arg(long, default_value = "{}")]
    pub params: String,
}

#[derive(Debug, Clone, Args)]
pub struct SchemeArgs {
    /// Scheme JSON.
    pub scheme: PathBuf,
    /// Component catalog manifest, overriding the scheme's own.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Auto,
    Exhaustive,
    Greedy,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Countermeasure catalog manifest.
    #[arg(long)]
    pub countermeasures: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub strategy: StrategyArg,
    /// Verify this plan instead of searching.
    #[arg(long)]
    pub verify: Option<PathBuf>,
    /// Operating wavelength for the insertion-loss budget (nm).
    #[arg(long)]
    pub lambda_op: Option<f64>,
    /// Forward insertion-loss budget at the operating wavelength (dB).
    #[arg(long)]
    pub loss_budget: Option<f64>,
}

/// Everything a command needs besides its own arguments.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: WavelengthGrid,
    pub out: PathBuf,
    pub budget: ProbeBudget,
    pub thresholds: SecurityThresholds,
    pub ref_db: Option<f64>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl RunConfig {
    pub fn from_global(g: &Global) -> Result<Self> {
        let mut budget: ProbeBudget = match &g.budget {
            Some(p) => read_json(p)?,
            None => ProbeBudget::default(),
        };
        if g.fixed_1550 {
            budget.photon_energy_mode = PhotonEnergyMode::Fixed1550;
        }
        budget.validate()?;
        let mut thresholds: SecurityThresholds = match &g.thresholds {
            Some(p) => read_json(p)?,
            None => SecurityThresholds::default(),
        };
        if let Some(c) = g.chi_max {
            thresholds.chi_max = c;
        }
        thresholds.validate()?;
        Ok(Self {
            grid: g.grid.build()?,
            out: g.out.clone(),
            budget,
            thresholds,
            ref_db: g.ref_db,
        })
    }

    fn output(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(self.out.join(name))
    }

    fn load_scheme(&self, args: &SchemeArgs) -> Result<Scheme> {
        let catalog = args.catalog.as_deref().map(|p| load_catalog(p, &self.grid)).transpose()?;
        let mut scheme = load_scheme(&args.scheme, catalog, &self.grid)?;
        if let Some(r) = self.ref_db {
            scheme = scheme.with_flat_reflection(r)?;
        }
        Ok(scheme)
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

pub struct ReduceOutcome {
    pub spectrum: TransmittanceSpectrum,
    pub path: PathBuf,
}

pub fn cmd_reduce(cfg: &RunConfig, args: &ReduceArgs) -> Result<ReduceOutcome> {
    let t_f = args.filter_db.map(tha_core::db_to_linear);
    let raw = read_raw_scan_csv(&args.raw, t_f)?;
    let spectrum = reduce_raw_scan(&raw)?;
    let name = match &args.output {
        Some(n) => n.clone(),
        None => {
            let stem = args.raw.file_stem().and_then(|s| s.to_str()).unwrap_or("scan");
            format!("{stem}_spectrum.csv")
        }
    };
    let path = cfg.output(&name)?;
    write_atomic(&path, spectrum_to_csv(&spectrum).as_bytes())?;
    Ok(ReduceOutcome { spectrum, path })
}

pub struct SynthOutcome {
    pub manifest: PathBuf,
    pub legs: Vec<PathBuf>,
}

pub fn cmd_synth(cfg: &RunConfig, args: &SynthArgs) -> Result<SynthOutcome> {
    let text = match args.params.strip_prefix('@') {
        Some(file) => fs::read_to_string(file).with_context(|| format!("reading {file}"))?,
        None => args.params.clone(),
    };
    let params: serde_json::Value = serde_json::from_str(&text).context("parsing --params")?;
    let model = SynthModel::from_parts(&args.model, params)?;
    let component = model.build(&args.id, &cfg.grid)?;

    let mut legs = Vec::new();
    let mut names = Vec::new();
    for leg in [Leg::Forward, Leg::Backward] {
        let name = format!("{}_{leg}.csv", args.id);
        let path = cfg.output(&name)?;
        write_atomic(&path, spectrum_to_csv(component.leg(leg)?).as_bytes())?;
        legs.push(path);
        names.push(PathBuf::from(name));
    }
    let [forward, backward] = <[PathBuf; 2]>::try_from(names).expect("two legs");
    let manifest = ComponentManifest {
        id: args.id.clone(),
        kind: component.kind(),
        legs: Some(ManifestLegs::Directional {
            forward: Some(forward),
            backward: Some(backward),
        }),
        provenance: Some(Provenance::Synthetic(model)),
        model: None,
        gain_allowed: false,
    };
    let path = cfg.output(&format!("{}.json", args.id))?;
    write_atomic(&path, &to_json(&manifest)?)?;
    Ok(SynthOutcome { manifest: path, legs })
}

pub struct ComposeOutcome {
    pub scheme: String,
    pub composite: TransmittanceSpectrum,
    pub path: PathBuf,
}

pub fn cmd_compose(cfg: &RunConfig, args: &SchemeArgs) -> Result<ComposeOutcome> {
    let scheme = cfg.load_scheme(args)?;
    let composite = composite_transmittance(&scheme, &cfg.grid)?;
    let path = cfg.output(&format!("{}_composite.csv", scheme.name()))?;
    write_atomic(&path, spectrum_to_csv(&composite).as_bytes())?;
    Ok(ComposeOutcome {
        scheme: scheme.name().to_string(),
        composite,
        path,
    })
}

pub struct EvaluateOutcome {
    pub report: InfoBoundReport,
    pub report_path: PathBuf,
    pub curve_path: PathBuf,
}

impl EvaluateOutcome {
    pub fn exit_code(&self) -> u8 {
        if self.report.secure {
            EXIT_OK
        } else {
            EXIT_FINDING
        }
    }
}

pub fn cmd_evaluate(cfg: &RunConfig, args: &SchemeArgs) -> Result<EvaluateOutcome> {
    let scheme = cfg.load_scheme(args)?;
    let composite = composite_transmittance(&scheme, &cfg.grid)?;
    let curve = evaluate(&composite, &cfg.budget, &cfg.thresholds)?;
    let report = InfoBoundReport::new(scheme.name(), &curve, &cfg.budget, &cfg.thresholds);
    let curve_path = cfg.output(&format!("{}_curve.csv", scheme.name()))?;
    let report_path = cfg.output(&format!("{}_report.json", scheme.name()))?;
    write_atomic(&curve_path, curve.to_csv().as_bytes())?;
    write_atomic(&report_path, &to_json(&report)?)?;
    Ok(EvaluateOutcome {
        report,
        report_path,
        curve_path,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PlanResult {
    Search(SearchResult),
    Verify(VerifyResult),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyResult {
    pub plan: Plan,
    pub report: PlanReport,
}

pub struct PlanOutcome {
    pub result: PlanResult,
    pub path: PathBuf,
}

impl PlanOutcome {
    pub fn exit_code(&self) -> u8 {
        let ok = match &self.result {
            PlanResult::Search(r) => r.is_feasible(),
            PlanResult::Verify(v) => v.report.pass,
        };
        if ok {
            EXIT_OK
        } else {
            EXIT_FINDING
        }
    }
}

pub fn cmd_plan(cfg: &RunConfig, args: &PlanArgs) -> Result<PlanOutcome> {
    let scheme = cfg.load_scheme(&args.scheme)?;
    let catalog = load_countermeasure_catalog(&args.countermeasures, &cfg.grid)?;
    let mut constraints = PlanConstraints {
        chi_max: cfg.thresholds.chi_max,
        ..Default::default()
    };
    if let Some(l) = args.lambda_op {
        constraints.lambda_op_nm = l;
    }
    if let Some(b) = args.loss_budget {
        constraints.op_loss_budget_db = b;
    }
    let result = match &args.verify {
        Some(p) => {
            let plan: Plan = read_json(p)?;
            let report = verify_plan(&plan, &catalog, &scheme, &cfg.budget, &constraints, &cfg.grid)?;
            PlanResult::Verify(VerifyResult { plan, report })
        }
        None => {
            let strategy = match args.strategy {
                StrategyArg::Auto => None,
                StrategyArg::Exhaustive => Some(SearchStrategy::Exhaustive),
                StrategyArg::Greedy => Some(SearchStrategy::Greedy),
            };
            PlanResult::Search(search_min_stack(
                &catalog,
                &scheme,
                &cfg.budget,
                &constraints,
                &cfg.grid,
                strategy,
            )?)
        }
    };
    let name = match result {
        PlanResult::Search(_) => format!("{}_plan.json", scheme.name()),
        PlanResult::Verify(_) => format!("{}_plan_check.json", scheme.name()),
    };
    let path = cfg.output(&name)?;
    write_atomic(&path, &to_json(&result)?)?;
    Ok(PlanOutcome { result, path })
}

fn fmt(x: f64) -> String {
    tha_core::format::format_sig(x)
}

/// Runs one parsed command line, printing a short summary to stdout.
pub fn run(cli: &Cli) -> Result<u8> {
    let cfg = RunConfig::from_global(&cli.global)?;
    match &cli.command {
        Command::Reduce(a) => {
            let o = cmd_reduce(&cfg, a)?;
            println!("wrote {} ({} points)", o.path.display(), o.spectrum.len());
            Ok(EXIT_OK)
        }
        Command::Synth(a) => {
            let o = cmd_synth(&cfg, a)?;
            println!("wrote {}", o.manifest.display());
            for l in &o.legs {
                println!("wrote {}", l.display());
            }
            Ok(EXIT_OK)
        }
        Command::Compose(a) => {
            let o = cmd_compose(&cfg, a)?;
            let pts = o.composite.grid().points();
            let (imax, vmax) = o.composite.max();
            let (imin, vmin) = o.composite.min();
            println!(
                "{}: max {} dB @ {} nm, min {} dB @ {} nm",
                o.scheme,
                fmt(vmax),
                fmt(pts[imax]),
                fmt(vmin),
                fmt(pts[imin])
            );
            println!("wrote {}", o.path.display());
            Ok(EXIT_OK)
        }
        Command::Evaluate(a) => {
            let o = cmd_evaluate(&cfg, a)?;
            let r = &o.report;
            let w = &r.worst;
            println!(
                "{}: {} (worst chi {} at {} nm, T {} dB, mu {})",
                r.scheme,
                if r.secure { "secure" } else { "LOOPHOLES" },
                fmt(w.chi),
                fmt(w.wavelength_nm),
                fmt(w.t_db),
                fmt(w.mu_p)
            );
            for i in &r.loopholes {
                println!("  loophole {}..{} nm", fmt(i.lo_nm), fmt(i.hi_nm));
            }
            if r.fiber_fuse_cap_exceeded {
                println!("  note: probe power exceeds the fiber-fuse cap");
            }
            println!("wrote {}", o.report_path.display());
            println!("wrote {}", o.curve_path.display());
            Ok(o.exit_code())
        }
        Command::Plan(a) => {
            let o = cmd_plan(&cfg, a)?;
            match &o.result {
                PlanResult::Search(r) => {
                    let p = r.plan();
                    let picks: Vec<String> = p.picks.iter().map(|(k, n)| format!("{k}x{n}")).collect();
                    println!(
                        "{} ({:?}, {} plans): [{}] worst chi {}, operating loss {} dB",
                        if r.is_feasible() { "feasible" } else { "no feasible plan" },
                        r.strategy,
                        r.plans_evaluated,
                        picks.join(", "),
                        fmt(p.achieved_worst_chi),
                        fmt(p.achieved_operating_loss_db)
                    );
                }
                PlanResult::Verify(v) => {
                    let r = &v.report;
                    println!(
                        "{}: chi {} (worst {} at {} nm), loss {} ({} / {} dB), counts {}",
                        if r.pass { "pass" } else { "fail" },
                        pass_word(r.chi_pass),
                        fmt(r.worst.chi),
                        fmt(r.worst.wavelength_nm),
                        pass_word(r.op_loss_pass),
                        fmt(r.operating_loss_db),
                        fmt(r.op_loss_budget_db),
                        pass_word(r.counts_pass)
                    );
                }
            }
            println!("wrote {}", o.path.display());
            Ok(o.exit_code())
        }
    }
}

fn pass_word(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

/// Parses `args` and runs, mapping every failure to exit code 1.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

