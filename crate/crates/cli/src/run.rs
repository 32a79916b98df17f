//! Command execution: resolves flags against the config file, runs the computation and
//! writes the result.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use spinwave::correlations::{constant_field, correlation_field, le_lower_bound, FieldGrid, Observable};
use spinwave::io::{render_dispersion, render_field, render_report, write_atomic, OutputFormat};
use spinwave::model::sample_dispersion;
use spinwave::oracle::oracle_compare;
use spinwave::protocols::{averaged_hamiltonian_field, default_step, ramp_field, ParameterSchedule, ScheduleKind};
use spinwave::{CorrelationField, Error, Quadrature, XyParams};

use crate::args::{
    Cli, Command, DispersionArgs, EvolveArgs, FormatArg, Grid, OracleArgs, Params, QuenchArgs, RampArgs, SuiteArg,
    TwoPoint, ValidateArgs,
};
use crate::config::{pick, FileConfig};
use crate::suites;

pub const THREADS_ENV: &str = "SPINWAVE_THREADS";

/// Why a run stopped; each variant has its own exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Usage(String),
    Validation(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Validation(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::GaplessMode { .. } | Error::NonFinite(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Outcome<T> {
    flag.or(file)
        .ok_or_else(|| usage(format!("missing --{} (or `{}` in the config file)", name, name.replace('-', "_"))))
}

pub fn run(cli: Cli) -> Outcome<()> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(Failure::Usage)?,
        None => FileConfig::default(),
    };
    init_threads(cli.threads, cfg.threads)?;
    let sink = Sink::resolve(&cli, &cfg)?;
    match &cli.command {
        Command::Dispersion(a) => dispersion(a, &cfg, &sink),
        Command::Evolve(a) => evolve(a, &cfg, &sink),
        Command::Quench(a) => quench(a, &cfg, &sink),
        Command::Ramp(a) => ramp(a, &cfg, &sink),
        Command::Oracle(a) => oracle(a, &cfg, &sink),
        Command::Validate(a) => validate(a, &cfg),
    }
}

fn init_threads(flag: Option<usize>, file: Option<usize>) -> Outcome<()> {
    let env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| usage(format!("{THREADS_ENV}={v:?} is not a count")))?),
        Err(_) => None,
    };
    let Some(n) = flag.or(file).or(env) else { return Ok(()) };
    if n == 0 {
        return Err(usage("thread count must be positive"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(format!("cannot start thread pool: {e}")))
}

/// Where and how results are written.
struct Sink {
    path: Option<PathBuf>,
    format: OutputFormat,
}

impl Sink {
    fn resolve(cli: &Cli, cfg: &FileConfig) -> Outcome<Self> {
        let path = cli.output.clone().or_else(|| cfg.output.clone());
        let explicit = cli.format.or(cfg.format().map_err(Failure::Usage)?);
        let format = match explicit {
            Some(FormatArg::Csv) => OutputFormat::Csv,
            Some(FormatArg::Json) => OutputFormat::Json,
            None => path.as_deref().and_then(OutputFormat::from_path).unwrap_or(OutputFormat::Csv),
        };
        Ok(Self { path, format })
    }

    fn emit(&self, text: &str) -> Outcome<()> {
        match &self.path {
            Some(p) => write_atomic(p, text.as_bytes())
                .map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
            None => std::io::stdout()
                .lock()
                .write_all(text.as_bytes())
                .map_err(|e| usage(format!("cannot write to stdout: {e}"))),
        }
    }
}

fn params(a: &Params, cfg: &FileConfig) -> Outcome<XyParams> {
    Ok(XyParams::new(required(a.gamma, cfg.gamma, "gamma")?, required(a.lambda, cfg.lambda, "lambda")?)?)
}

fn two_point(a: &TwoPoint, cfg: &FileConfig) -> Outcome<(XyParams, XyParams)> {
    let p0 = XyParams::new(required(a.gamma0, cfg.gamma0, "gamma0")?, required(a.lambda0, cfg.lambda0, "lambda0")?)?;
    let p1 = XyParams::new(required(a.gamma1, cfg.gamma1, "gamma1")?, required(a.lambda1, cfg.lambda1, "lambda1")?)?;
    Ok((p0, p1))
}

fn read_schedule(path: &Path) -> Outcome<ParameterSchedule> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read schedule {}: {e}", path.display())))?;
    ParameterSchedule::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn observable(g: &Grid, cfg: &FileConfig) -> Outcome<Observable> {
    let tag = g.observable.clone().or_else(|| cfg.observable.clone()).unwrap_or_else(|| "zz".into());
    Ok(tag.parse::<Observable>()?)
}

/// Grid with per-command defaults for the final time and largest separation.
fn grid(g: &Grid, cfg: &FileConfig, x_max: usize, t_max: f64) -> Outcome<FieldGrid> {
    Ok(FieldGrid::new(
        pick(g.xmax, cfg.xmax, x_max),
        pick(g.tmax, cfg.tmax, t_max),
        pick(g.dt, cfg.dt, 0.25),
    )?)
}

fn quadrature(g: &Grid, cfg: &FileConfig, sched: &ParameterSchedule, grid: &FieldGrid) -> Outcome<Quadrature> {
    match g.quadrature.or(cfg.quadrature) {
        Some(m) => Ok(Quadrature::new(m)?),
        None => Ok(Quadrature::default_for(sched.max_speed(), grid.t_max, grid.x_max)),
    }
}

/// Held parameters, and whatever holds after the schedule ends, must keep a gap.
fn require_gapped(sched: &ParameterSchedule) -> Outcome<()> {
    let segs = sched.segments();
    let held = segs
        .iter()
        .filter(|s| s.interpolation == spinwave::protocols::Interpolation::Hold)
        .map(|s| s.start)
        .chain(segs.last().map(|s| s.end));
    for p in held {
        if p.is_gapless() {
            return Err(Failure::Numerical(format!(
                "gapless parameters (gamma = {}, lambda = {}): mode functions are undefined, aborting",
                p.gamma, p.lambda
            )));
        }
    }
    Ok(())
}

fn dispersion(a: &DispersionArgs, cfg: &FileConfig, sink: &Sink) -> Outcome<()> {
    let p = params(&a.params, cfg)?;
    let table = sample_dispersion(&p, pick(a.samples, cfg.samples, 1024))?;
    sink.emit(&render_dispersion(&table, sink.format))
}

fn evolve(a: &EvolveArgs, cfg: &FileConfig, sink: &Sink) -> Outcome<()> {
    let p = params(&a.params, cfg)?;
    let obs = observable(&a.grid, cfg)?;
    let grid = grid(&a.grid, cfg, 60, 25.0)?;
    let sched = ParameterSchedule::constant(p, grid.t_max)?;
    require_gapped(&sched)?;
    let q = quadrature(&a.grid, cfg, &sched, &grid)?;
    let field = constant_field(obs, &p, &grid, &q)?;
    sink.emit(&render_field(&field, sink.format))
}

fn quench(a: &QuenchArgs, cfg: &FileConfig, sink: &Sink) -> Outcome<()> {
    let obs = observable(&a.grid, cfg)?;
    let (sched, grid) = match a.schedule.clone().or_else(|| cfg.schedule.clone()) {
        Some(path) => {
            let sched = read_schedule(&path)?;
            if sched.kind() == ScheduleKind::Ramp {
                return Err(usage(format!("{} is not a quench (two hold segments)", path.display())));
            }
            let grid = grid(&a.grid, cfg, 60, sched.t_end())?;
            (sched, grid)
        }
        None => {
            let (p0, p1) = two_point(&a.ends, cfg)?;
            let t1 = required(a.t1, cfg.t1, "t1")?;
            let grid = grid(&a.grid, cfg, 60, 2.0 * t1)?;
            (ParameterSchedule::quench(p0, p1, t1, grid.t_max.max(t1))?, grid)
        }
    };
    require_gapped(&sched)?;
    let q = quadrature(&a.grid, cfg, &sched, &grid)?;
    let field = correlation_field(&sched, obs, &grid, &q)?;
    sink.emit(&render_field(&field, sink.format))
}

fn ramp(a: &RampArgs, cfg: &FileConfig, sink: &Sink) -> Outcome<()> {
    let obs = observable(&a.grid, cfg)?;
    let sched = match a.schedule.clone().or_else(|| cfg.schedule.clone()) {
        Some(path) => read_schedule(&path)?,
        None => {
            let (p0, p1) = two_point(&a.ends, cfg)?;
            let start = required(a.ramp_start, cfg.ramp_start, "ramp-start")?;
            let end = required(a.ramp_end, cfg.ramp_end, "ramp-end")?;
            let t_end = a.grid.tmax.or(cfg.tmax).unwrap_or(end).max(end);
            ParameterSchedule::linear_ramp(p0, p1, start, end, t_end)?
        }
    };
    require_gapped(&sched)?;
    let grid = grid(&a.grid, cfg, 60, sched.t_end())?;
    let q = quadrature(&a.grid, cfg, &sched, &grid)?;
    let field = if a.averaged || cfg.averaged == Some(true) {
        averaged(&sched, obs, &grid, &q)?
    } else {
        let h = pick(a.step, cfg.step, default_step(&sched, &grid));
        ramp_field(&sched, obs, &grid, h, &q)?
    };
    sink.emit(&render_field(&field, sink.format))
}

fn averaged(sched: &ParameterSchedule, obs: Observable, grid: &FieldGrid, q: &Quadrature) -> Outcome<CorrelationField> {
    let zz = averaged_hamiltonian_field(sched, grid, q)?;
    match obs {
        Observable::Zz => Ok(zz),
        Observable::LeBound => Ok(le_lower_bound(&zz)?),
        other => Err(usage(format!("--averaged supports zz and le-bound, not {other}"))),
    }
}

fn oracle(a: &OracleArgs, cfg: &FileConfig, sink: &Sink) -> Outcome<()> {
    let obs = observable(&a.grid, cfg)?;
    let n = pick(a.sites, cfg.sites, 12);
    let tol = pick(a.tolerance, cfg.tolerance, 1e-8);
    let grid = grid(&a.grid, cfg, n.saturating_sub(1).max(1), 2.0)?;
    let sched = match a.schedule.clone().or_else(|| cfg.schedule.clone()) {
        Some(path) => read_schedule(&path)?,
        None => ParameterSchedule::constant(params(&a.params, cfg)?, grid.t_max)?,
    };
    require_gapped(&sched)?;
    let q = quadrature(&a.grid, cfg, &sched, &grid)?;
    let report = oracle_compare(&sched, obs, n, &grid, &q)?;
    sink.emit(&render_report(&report, sink.format))?;
    let summary = format!(
        "max error {:e} over {} in-window points (tolerance {:e})",
        report.max_abs_error,
        report.window_points(),
        tol
    );
    if report.max_abs_error <= tol {
        eprintln!("{summary}");
        Ok(())
    } else {
        Err(Failure::Validation(summary))
    }
}

fn validate(a: &ValidateArgs, cfg: &FileConfig) -> Outcome<()> {
    let suite = a.suite.or(cfg.suite().map_err(Failure::Usage)?).unwrap_or(SuiteArg::All);
    let mut checks = Vec::new();
    if matches!(suite, SuiteArg::Invariants | SuiteArg::All) {
        checks.extend(suites::invariants());
    }
    if matches!(suite, SuiteArg::Oracle | SuiteArg::All) {
        checks.extend(suites::oracle());
    }
    let mut out = std::io::stdout().lock();
    for c in &checks {
        writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)
            .map_err(|e| usage(format!("cannot write to stdout: {e}")))?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Validation(format!("{failed} of {} checks failed", checks.len())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes() {
        assert_eq!(Failure::from(Error::GaplessMode { phi: 0.0, epsilon: 0.0 }).exit_code(), 3);
        assert_eq!(Failure::from(Error::NonFinite("x")).exit_code(), 3);
        assert_eq!(Failure::from(Error::InvalidArgument("x".into())).exit_code(), 1);
        assert_eq!(Failure::Validation("x".into()).exit_code(), 2);
    }

    #[test]
    fn gapless_holds_abort() {
        let crit = XyParams::new(1.0, 1.0).unwrap();
        let ok = XyParams::new(1.1, 2.0).unwrap();
        let hold = ParameterSchedule::constant(crit, 1.0).unwrap();
        assert_eq!(require_gapped(&hold).unwrap_err().exit_code(), 3);
        let through = ParameterSchedule::linear_ramp(ok, XyParams::new(1.1, 0.5).unwrap(), 0.0, 1.0, 2.0).unwrap();
        assert!(require_gapped(&through).is_ok());
        let onto = ParameterSchedule::linear_ramp(ok, crit, 0.0, 1.0, 1.0).unwrap();
        assert!(require_gapped(&onto).is_err());
    }
}
