use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chemostat_core::config::{InitState, PerVessel, RunConfig};
use chemostat_core::crosscheck::{run_check, CheckReport, CHECK_COUNT};
use chemostat_core::datasets::Figure;
use chemostat_core::gradostat::{
    classify_gradostat, curve_table, gamma0, invasion_gamma, simulate_gradostat_full, write_curves_csv,
    GradostatVerdict, GAMMA_ZERO_BAND,
};
use chemostat_core::invasion::{
    classify_switching, lambda0, lambda0_limits, lambda_two_species, lambda_two_species_limits, Support,
    SwitchVerdict, TwoSpeciesIntegrand, ZERO_BAND_DEFAULT,
};
use chemostat_core::pdmp::{simulate_pdmp, simulate_simple_chemostat, PdmpState, SimOptions};
use chemostat_core::rng::parse_seed;
use chemostat_core::sweep::{one_species_verdict, sign_map, FigureBundle, SweepGrid, SweepMode};
use chemostat_core::trajectory::{fmt_num, write_gradostat_csv, write_jumps_csv, write_trajectory_csv};
use chemostat_core::{DuoConfig, Error, Species};
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::{RateMode, RatesArgs, SimKind, SimulateArgs, SweepArgs, VerifyArgs, OUT_DIR_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{op}: {source}")]
    Numeric { op: String, source: Error },
    #[error("{op}: {source}")]
    Io { op: String, source: io::Error },
}

impl CliError {
    /// 2 for bad input, 3 for numerical failure, 1 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }
}

fn core_err(op: &str) -> impl FnOnce(Error) -> CliError + '_ {
    move |e| match e {
        Error::Config(_)
        | Error::InvalidParameter { .. }
        | Error::UnknownFigure(_)
        | Error::UnequalInputs { .. } => CliError::Config(format!("{op}: {e}")),
        other => CliError::Numeric {
            op: op.to_string(),
            source: other,
        },
    }
}

fn io_err(op: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let op = op.into();
    move |source| CliError::Io { op, source }
}

type CliResult<T> = Result<T, CliError>;

fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    RunConfig::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn out_dir(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("chemostat-out"))
}

fn create_csv(path: &Path) -> CliResult<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(io_err(format!("create {}", path.display())))
}

// ---------------------------------------------------------------------------
// simulate

const DEFAULT_HORIZON: f64 = 1e3;
const DEFAULT_DENSITY: f64 = 0.1;

/// Applies flags over the config, then fills every remaining run setting with
/// its default so that the canonical text describes the run completely.
fn resolve_run(rc: &mut RunConfig, args: &SimulateArgs) -> CliResult<()> {
    if let Some(s) = &args.seed {
        rc.seed = Some(parse_seed(s).map_err(core_err("--seed"))?);
    }
    rc.horizon = args.horizon.or(rc.horizon).or(Some(DEFAULT_HORIZON));
    rc.tol = args.tol.or(rc.tol).or(Some(1e-9));
    rc.record_every = args.every.or(rc.record_every).or(Some(1));
    rc.seed = rc.seed.or(Some(0));
    let horizon = rc.horizon.unwrap_or(DEFAULT_HORIZON);
    rc.burn_in = rc.burn_in.or(Some(0.1 * horizon));
    let inputs = rc.model.inputs();
    let init = rc.init.get_or_insert(InitState {
        r: None,
        u: PerVessel::Same(DEFAULT_DENSITY),
        v: PerVessel::Same(DEFAULT_DENSITY),
        regime: None,
    });
    match args.kind {
        SimKind::Pdmp => {
            let regime = *init.regime.get_or_insert(1);
            init.r.get_or_insert(PerVessel::Same(inputs[(regime - 1) as usize]));
        }
        SimKind::Gradostat => {
            init.r.get_or_insert(PerVessel::Each(inputs));
        }
        SimKind::Simple => {
            init.r.get_or_insert(PerVessel::Same(inputs[(args.vessel - 1) as usize]));
        }
    }
    rc.validate().map_err(core_err("config"))
}

const CURVE_ROWS: usize = 401;

fn run_spec(header: &str, rc: &RunConfig) -> String {
    format!("{header}\n{}", rc.to_canonical())
}

pub fn simulate(args: &SimulateArgs) -> CliResult<ExitCode> {
    let mut rc = load_config(&args.config)?;
    resolve_run(&mut rc, args)?;
    let init = rc.init.expect("resolved");
    let r = init.r.expect("resolved");
    let (horizon, tol, every, seed) = (
        rc.horizon.expect("resolved"),
        rc.tol.expect("resolved"),
        rc.record_every.expect("resolved"),
        rc.seed.expect("resolved"),
    );
    let kind = match args.kind {
        SimKind::Pdmp => "pdmp",
        SimKind::Gradostat => "gradostat",
        SimKind::Simple => "simple",
    };
    let mut header = format!("command = \"simulate {kind}\"");
    if args.kind == SimKind::Simple {
        write!(header, "\nvessel = {}", args.vessel).expect("string write");
    }
    let manifest = RunManifest::begin(run_spec(&header, &rc), Some(seed));
    let dir = out_dir(&args.out);
    fs::create_dir_all(&dir).map_err(io_err(format!("create {}", dir.display())))?;
    let stem = args.name.clone().unwrap_or_else(|| kind.to_string());
    let traj = dir.join(format!("{stem}.csv"));
    let mut files = vec![traj.clone()];
    let op = format!("simulate {kind}");
    match args.kind {
        SimKind::Pdmp => {
            let opts = SimOptions {
                horizon,
                burn_in: rc.burn_in.expect("resolved"),
                tol,
                seed,
                record_every: every,
            };
            let state = PdmpState::new(r.first(), init.u.first(), init.v.first(), init.regime.unwrap_or(1));
            let run = simulate_pdmp(&rc.model, state, &opts).map_err(core_err(&op))?;
            write_trajectory_csv(create_csv(&traj)?, &run.samples).map_err(io_err("write trajectory"))?;
            let jumps = dir.join(format!("{stem}_jumps.csv"));
            write_jumps_csv(create_csv(&jumps)?, &run.jumps).map_err(io_err("write jumps"))?;
            files.push(jumps);
        }
        SimKind::Gradostat => {
            let run = simulate_gradostat_full(&rc.model, (r.pair(), init.u.pair(), init.v.pair()), horizon, tol, every)
                .map_err(core_err(&op))?;
            write_gradostat_csv(create_csv(&traj)?, &run.samples).map_err(io_err("write trajectory"))?;
            // Survival curves exist only for a common input.
            if rc.model.common_input().is_ok() {
                let rows = curve_table(&rc.model, CURVE_ROWS).map_err(core_err("curve table"))?;
                let path = dir.join(format!("{stem}_curves.csv"));
                write_curves_csv(create_csv(&path)?, &rows).map_err(io_err("write curves"))?;
                files.push(path);
            }
        }
        SimKind::Simple => {
            let v = rc.model.vessel((args.vessel - 1) as usize);
            let samples = simulate_simple_chemostat(v, (r.first(), init.u.first(), init.v.first()), horizon, tol, every)
                .map_err(core_err(&op))?;
            write_trajectory_csv(create_csv(&traj)?, &samples).map_err(io_err("write trajectory"))?;
        }
    }
    let manifest_path = dir.join(format!("{stem}_manifest.json"));
    manifest
        .finish(&files, &manifest_path)
        .map_err(io_err("write manifest"))?;
    for f in files.iter().chain([&manifest_path]) {
        println!("{}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// rates

#[derive(Debug, Serialize)]
struct OneSpeciesRates {
    lambda0: f64,
    gamma0: f64,
    /// `Λ⁰` as `λ → 0` and `λ → ∞`.
    lambda0_limits: [f64; 2],
    verdict_prob: String,
    verdict_det: String,
}

#[derive(Debug, Serialize)]
struct TwoSpeciesRates {
    lambda: Option<f64>,
    gamma: Option<f64>,
    lambda_limits: Option<[f64; 2]>,
}

#[derive(Debug, Serialize)]
struct TwoSpeciesReport {
    u: TwoSpeciesRates,
    v: TwoSpeciesRates,
    verdict_prob: SwitchVerdict,
    verdict_det: GradostatVerdict,
}

#[derive(Debug, Serialize)]
struct RatesReport {
    config_hash: String,
    s: f64,
    lambda: f64,
    one_species: Option<[OneSpeciesRates; 2]>,
    two_species: Option<TwoSpeciesReport>,
    warnings: Vec<String>,
}

fn one_species_rates(c: &DuoConfig, w: Species) -> CliResult<OneSpeciesRates> {
    let l0 = lambda0(c, w).map_err(core_err("lambda0"))?;
    let g0 = gamma0(c, w).map_err(core_err("gamma0"))?;
    let (a, b) = lambda0_limits(c, w).map_err(core_err("lambda0 limits"))?;
    Ok(OneSpeciesRates {
        lambda0: l0,
        gamma0: g0,
        lambda0_limits: [a, b],
        verdict_prob: one_species_verdict(l0, ZERO_BAND_DEFAULT),
        verdict_det: one_species_verdict(g0, GAMMA_ZERO_BAND),
    })
}

/// Rates that are undefined for this configuration (a resident that cannot
/// live) become `null` with a warning; other failures abort.
fn optional(op: &str, r: chemostat_core::Result<f64>, warnings: &mut Vec<String>) -> CliResult<Option<f64>> {
    match r {
        Ok(x) => Ok(Some(x)),
        Err(e @ (Error::ResidentCannotPersist(_) | Error::MissingEquilibrium(_))) => {
            warnings.push(format!("{op}: {e}"));
            Ok(None)
        }
        Err(e) => Err(core_err(op)(e)),
    }
}

fn two_species_rates(c: &DuoConfig, w: Species, warnings: &mut Vec<String>) -> CliResult<TwoSpeciesRates> {
    let lambda = optional(&format!("lambda_{w}"), lambda_two_species(c, w), warnings)?;
    let gamma = optional(&format!("gamma_{w}"), invasion_gamma(c, w), warnings)?;
    let lambda_limits = match lambda_two_species_limits(c, w) {
        Ok((a, b)) => Some([a, b]),
        Err(Error::ResidentCannotPersist(_)) => None,
        Err(e) => return Err(core_err("lambda limits")(e)),
    };
    if c.lambda > 0.0 {
        if let Ok(Support::Point(x)) = TwoSpeciesIntegrand::new(c, w) {
            warnings.push(format!(
                "the resident of invader {w} has one equilibrium density {x} in both vessels: point support"
            ));
        }
    }
    Ok(TwoSpeciesRates {
        lambda,
        gamma,
        lambda_limits,
    })
}

pub fn rates(args: &RatesArgs) -> CliResult<ExitCode> {
    let rc = load_config(&args.config)?;
    let c = rc.model;
    let mode = args
        .mode
        .unwrap_or(if c.equal_inputs() { RateMode::Both } else { RateMode::One });
    if mode != RateMode::One {
        c.common_input().map_err(core_err("rates"))?;
    }
    let mut warnings = Vec::new();
    if c.vessel1 == c.vessel2 {
        warnings.push("identical vessels: no rate depends on s or lambda".to_string());
    } else if c.equal_inputs() {
        warnings.push("equal inputs: the species-free resource is constant, so lambda0 does not depend on lambda".into());
    }
    let one_species = match mode {
        RateMode::Two => None,
        _ => Some([one_species_rates(&c, Species::U)?, one_species_rates(&c, Species::V)?]),
    };
    let zero_band = rc.zero_band.unwrap_or(ZERO_BAND_DEFAULT);
    let two_species = match mode {
        RateMode::One => None,
        _ => Some(TwoSpeciesReport {
            u: two_species_rates(&c, Species::U, &mut warnings)?,
            v: two_species_rates(&c, Species::V, &mut warnings)?,
            verdict_prob: classify_switching(&c, zero_band).map_err(core_err("classify_switching"))?,
            verdict_det: classify_gradostat(&c, GAMMA_ZERO_BAND).map_err(core_err("classify_gradostat"))?,
        }),
    };
    let report = RatesReport {
        config_hash: crate::manifest::sha256_hex(rc.to_canonical().as_bytes()),
        s: c.s,
        lambda: c.lambda,
        one_species,
        two_species,
        warnings,
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if let Some(path) = &args.output {
        fs::write(path, &text).map_err(io_err(format!("write {}", path.display())))?;
    }
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// sweep

fn axis(values: &Option<Vec<f64>>, default: (f64, f64, usize), name: &str) -> CliResult<(f64, f64, usize)> {
    match values.as_deref() {
        None => Ok(default),
        Some([a, b, n]) if *n >= 2.0 && n.fract() == 0.0 => Ok((*a, *b, *n as usize)),
        Some(_) => Err(CliError::Config(format!("--{name} expects min,max,count with an integer count >= 2"))),
    }
}

pub fn sweep(args: &SweepArgs) -> CliResult<ExitCode> {
    let (template, default_mode, label) = match (&args.figure, &args.config) {
        (Some(name), _) => {
            let fig: Figure = name.parse().map_err(core_err("sweep"))?;
            let mode = if fig.one_species() {
                SweepMode::OneSpecies
            } else {
                SweepMode::TwoSpecies
            };
            (fig.config(0.5, 1.0), mode, fig.name().to_string())
        }
        (None, Some(path)) => {
            let c = load_config(path)?.model;
            let mode = if c.equal_inputs() {
                SweepMode::TwoSpecies
            } else {
                SweepMode::OneSpecies
            };
            let stem = path.file_stem().map_or("sweep".into(), |s| s.to_string_lossy().into_owned());
            (c.with_coupling(0.5, 1.0), mode, stem)
        }
        (None, None) => return Err(CliError::Config("sweep needs --figure or --config".into())),
    };
    let mode = match args.mode {
        None => default_mode,
        Some(RateMode::One) => SweepMode::OneSpecies,
        Some(RateMode::Two) => SweepMode::TwoSpecies,
        Some(RateMode::Both) => return Err(CliError::Config("--mode for sweep is one or two".into())),
    };
    let name = args.name.clone().unwrap_or(label);
    let s_axis = axis(&args.s, (0.015, 0.985, 63), "s")?;
    let l_axis = axis(&args.lambda, (1e-2, 1e3, 64), "lambda")?;
    let grid = SweepGrid::new(name.clone(), s_axis, l_axis).map_err(core_err("sweep grid"))?;

    let mut spec = format!(
        "command = \"sweep\"\nmode = \"{}\"\ngrid.s = [{}, {}, {}]\ngrid.lambda = [{}, {}, {}]\n",
        match mode {
            SweepMode::OneSpecies => "one",
            SweepMode::TwoSpecies => "two",
        },
        fmt_num(s_axis.0),
        fmt_num(s_axis.1),
        s_axis.2,
        fmt_num(l_axis.0),
        fmt_num(l_axis.1),
        l_axis.2
    );
    spec.push_str(&RunConfig::from_model(template).to_canonical());
    let manifest = RunManifest::begin(spec, None);
    let map = sign_map(&template, &grid, mode, args.jobs).map_err(core_err("sweep"))?;
    let failed = map.cells.iter().filter(|c| !c.errors.is_empty()).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} cells recorded numerical errors", map.cells.len());
    }
    let bundle = FigureBundle::from_map(name.clone(), map);
    let dir = out_dir(&args.out);
    let files = bundle.write_to(&dir).map_err(io_err(format!("write into {}", dir.display())))?;
    let manifest_path = dir.join(format!("{name}_manifest.json"));
    manifest
        .finish(&files, &manifest_path)
        .map_err(io_err("write manifest"))?;
    for f in files.iter().chain([&manifest_path]) {
        println!("{}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// verify

pub fn verify(args: &VerifyArgs) -> CliResult<ExitCode> {
    let ids: Vec<u8> = args.only.clone().unwrap_or_else(|| (1..=CHECK_COUNT).collect());
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > CHECK_COUNT) {
        return Err(CliError::Config(format!("no check numbered {bad} (1 to {CHECK_COUNT})")));
    }
    let mut reports: Vec<CheckReport> = Vec::new();
    for id in ids {
        let r = run_check(id);
        if !args.json {
            println!("{r}");
        }
        reports.push(r);
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    if args.json {
        println!("{}", serde_json::to_string_pretty(&reports).expect("reports serialize"));
    } else {
        println!("{} passed, {failed} failed", reports.len() - failed);
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
