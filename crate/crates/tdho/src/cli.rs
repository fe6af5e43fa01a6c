//! Command-line front end: configure a profile, run evolutions and scans,
//! emit tabular results and plot-ready data.
//!
//! All commands read an optional JSON config document (`--config`); every
//! flag overrides its config field. Outputs are CSV or `"schema": 1` JSON
//! and are byte-deterministic for a given binary and input. Exit codes:
//! 0 ok, 2 configuration error, 3 numerical-invariant failure (stderr
//! names the offending quantity).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use crate::cyclic::{self, CyclicVerdict};
use crate::model::{
    family_profile, profile_samples_from_csv, regime, tabulated_profile, Family, FamilySpec,
    ModelError, PhaseFn, Profile, RegimeLabel,
};
use crate::oracles;
use crate::propagate::{integrate, uniform_grid, IntegrateOptions, PropagateError, Trajectory};
use crate::so21::{param_to_vec, HVec3, HyperParam};
use crate::wavepacket::{variances, MomentState};

/// Exit code for configuration/usage errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for numerical-invariant failures.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug)]
pub enum CmdError {
    Config(String),
    Numerical(String),
}

impl CmdError {
    fn exit_code(&self) -> i32 {
        match self {
            CmdError::Config(_) => EXIT_CONFIG,
            CmdError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CmdError::Config(m) | CmdError::Numerical(m) => m,
        }
    }
}

impl From<ModelError> for CmdError {
    fn from(e: ModelError) -> Self {
        CmdError::Config(e.to_string())
    }
}

impl From<PropagateError> for CmdError {
    fn from(e: PropagateError) -> Self {
        match e {
            PropagateError::DriftExceeded { .. }
            | PropagateError::GroupViolation { .. }
            | PropagateError::StepBudgetExceeded { .. } => CmdError::Numerical(e.to_string()),
            _ => CmdError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Config(format!("io: {e}"))
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// JSON config document. Flags override individual fields.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub schema: Option<u32>,
    #[serde(default)]
    pub profile: Option<ProfileConfig>,
    #[serde(default)]
    pub tmax: Option<f64>,
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub e0: Option<E0Config>,
    #[serde(default)]
    pub u0: Option<f64>,
    #[serde(default)]
    pub state: Option<StateConfig>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub summary_out: Option<PathBuf>,
    #[serde(default)]
    pub state_out: Option<PathBuf>,
    #[serde(default)]
    pub tol: Option<TolConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ProfileConfig {
    Family {
        family: String,
        n1: f64,
        n3: f64,
        lambda: f64,
        #[serde(default = "default_rate")]
        rate: f64,
    },
    Csv {
        csv: PathBuf,
    },
}

fn default_rate() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct E0Config {
    pub xi: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct StateConfig {
    pub xbar: f64,
    pub pbar: f64,
    pub u: [f64; 3],
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
pub struct TolConfig {
    #[serde(default)]
    pub step_target: Option<f64>,
    #[serde(default)]
    pub drift: Option<f64>,
    #[serde(default)]
    pub group: Option<f64>,
}

/// Fully resolved run inputs.
pub struct Resolved {
    pub profile: Profile,
    pub spec: Option<FamilySpec>,
    pub tmax: f64,
    pub nodes: usize,
    pub e0: HVec3,
    pub u0: f64,
    pub state: Option<MomentState>,
    pub out: Option<PathBuf>,
    pub summary_out: Option<PathBuf>,
    pub state_out: Option<PathBuf>,
    pub opts: IntegrateOptions,
}

#[derive(Debug, Args, Default, Clone)]
pub struct CommonArgs {
    /// JSON config document; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Profile: a `.csv`/`.json` path or `FAMILY,n1,n3,lambda[,rate]`
    #[arg(long)]
    profile: Option<String>,
    /// End of the integration window
    #[arg(long)]
    tmax: Option<f64>,
    /// Number of stored grid nodes (including t = 0)
    #[arg(long)]
    nodes: Option<usize>,
    /// Initial rapidity of e0
    #[arg(long = "e0-xi")]
    e0_xi: Option<f64>,
    /// Initial azimuth of e0
    #[arg(long = "e0-phi")]
    e0_phi: Option<f64>,
    /// Scale of u(0) along e0 (>= 1/2)
    #[arg(long)]
    u0: Option<f64>,
    /// Primary output path (CSV or JSON depending on the command)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scales the drift/group invariant tolerances
    #[arg(long)]
    tol: Option<f64>,
}

fn parse_profile_literal(text: &str) -> Result<ProfileConfig, CmdError> {
    let t = text.trim();
    if t.ends_with(".csv") || t.ends_with(".json") {
        return Ok(ProfileConfig::Csv {
            csv: PathBuf::from(t),
        });
    }
    let parts: Vec<&str> = t.split(',').collect();
    if parts.len() < 4 || parts.len() > 5 {
        return Err(CmdError::Config(format!(
            "profile '{t}': expected FAMILY,n1,n3,lambda[,rate] or a .csv path"
        )));
    }
    let num = |s: &str, what: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| CmdError::Config(format!("profile {what}: {e}")))
    };
    Ok(ProfileConfig::Family {
        family: parts[0].trim().to_string(),
        n1: num(parts[1], "n1")?,
        n3: num(parts[2], "n3")?,
        lambda: num(parts[3], "lambda")?,
        rate: if parts.len() == 5 {
            num(parts[4], "rate")?
        } else {
            1.0
        },
    })
}

/// Loads the config document, applies flag overrides and builds the
/// profile and integration inputs.
pub fn resolve(args: &CommonArgs) -> Result<Resolved, CmdError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CmdError::Config(format!("config {}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| CmdError::Config(format!("config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = cfg.schema {
        if s != 1 {
            return Err(CmdError::Config(format!("unsupported config schema {s}")));
        }
    }
    if let Some(p) = &args.profile {
        cfg.profile = Some(parse_profile_literal(p)?);
    }
    if args.tmax.is_some() {
        cfg.tmax = args.tmax;
    }
    if args.nodes.is_some() {
        cfg.nodes = args.nodes;
    }
    if args.u0.is_some() {
        cfg.u0 = args.u0;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    let e0_cfg = {
        let base = cfg.e0.unwrap_or(E0Config { xi: 0.0, phi: 0.0 });
        E0Config {
            xi: args.e0_xi.unwrap_or(base.xi),
            phi: args.e0_phi.unwrap_or(base.phi),
        }
    };

    let profile_cfg = cfg.profile.unwrap_or(ProfileConfig::Family {
        family: "A".into(),
        n1: 0.0,
        n3: 1.0,
        lambda: 1.0,
        rate: 1.0,
    });
    let (profile, spec, data_tmax) = match &profile_cfg {
        ProfileConfig::Family {
            family,
            n1,
            n3,
            lambda,
            rate,
        } => {
            let fam: Family = family.parse()?;
            let tmax = cfg.tmax.unwrap_or(2.0 * std::f64::consts::PI);
            let spec = FamilySpec::new(fam, *n1, *n3, *lambda, PhaseFn::linear(*rate), tmax);
            (family_profile(spec.clone())?, Some(spec), tmax)
        }
        ProfileConfig::Csv { csv } => {
            let text = std::fs::read_to_string(csv)
                .map_err(|e| CmdError::Config(format!("profile {}: {e}", csv.display())))?;
            let samples = profile_samples_from_csv(&text)?;
            let profile = tabulated_profile(&samples)?;
            let tmax = cfg.tmax.unwrap_or(profile.t_max());
            (profile, None, tmax)
        }
    };

    let mut opts = IntegrateOptions::default();
    if let Some(t) = cfg.tol {
        if let Some(v) = t.step_target {
            opts.step_target = v;
        }
        if let Some(v) = t.drift {
            opts.drift_tol = v;
        }
        if let Some(v) = t.group {
            opts.group_tol = v;
        }
    }
    if let Some(scale) = args.tol {
        if scale.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(CmdError::Config(format!(
                "--tol must be positive, got {scale}"
            )));
        }
        opts.drift_tol *= scale;
        opts.group_tol *= scale;
    }

    let u0 = cfg.u0.unwrap_or(0.5);
    let state = match cfg.state {
        None => None,
        Some(s) => Some(
            MomentState::new(s.xbar, s.pbar, HVec3::new(s.u[0], s.u[1], s.u[2]))
                .map_err(|e| CmdError::Config(e.to_string()))?,
        ),
    };
    Ok(Resolved {
        profile,
        spec,
        tmax: data_tmax,
        nodes: cfg.nodes.unwrap_or(201).max(2),
        e0: param_to_vec(HyperParam::new(e0_cfg.xi, e0_cfg.phi)),
        u0,
        state,
        out: cfg.out,
        summary_out: cfg.summary_out,
        state_out: cfg.state_out,
        opts,
    })
}

fn write_output(path: Option<&Path>, contents: &str) -> Result<(), CmdError> {
    match path {
        Some(p) => {
            std::fs::write(p, contents)
                .map_err(|e| CmdError::Config(format!("write {}: {e}", p.display())))?;
        }
        None => {
            print!("{contents}");
            std::io::stdout().flush().ok();
        }
    }
    Ok(())
}

fn vec_json(v: HVec3) -> serde_json::Value {
    json!([v.a1, v.a2, v.a3])
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

/// Runs one evolution; returns the trajectory plus the summary document.
pub fn cmd_evolve(r: &Resolved) -> Result<(Trajectory, serde_json::Value), CmdError> {
    let grid = uniform_grid(r.tmax, r.nodes);
    let traj = integrate(&r.profile, r.e0, &grid, &r.opts)?;
    let last = traj.len() - 1;
    let phases = traj.phases(r.u0, last)?;
    let summary = json!({
        "schema": 1,
        "drift_max": traj.drift_max(),
        "group_violation_max": traj.group_defect_max(),
        "final_e": vec_json(traj.e(last)),
        "final_phases": {
            "alpha_tau": phases.alpha_tau,
            "hannay": phases.hannay,
            "dynamical": phases.dynamical,
            "total": phases.total,
            "geometric": phases.geometric,
            "u0": phases.u0,
        },
    });
    Ok((traj, summary))
}

fn moment_csv(traj: &Trajectory, state: &MomentState) -> Result<String, CmdError> {
    let mut out = String::from("t,xbar,pbar,dx,dp,cov\n");
    for i in 0..traj.len() {
        let s = crate::wavepacket::evolve_state(state, traj.e_mat(i), traj.q_mat(i))
            .map_err(|e| CmdError::Numerical(e.to_string()))?;
        let (dx, dp, cov) = variances(&s).map_err(|e| CmdError::Numerical(e.to_string()))?;
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            traj.time(i),
            s.xbar,
            s.pbar,
            dx,
            dp,
            cov
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// cyclic-scan
// ---------------------------------------------------------------------------

/// One record of the cyclic scan.
pub struct ScanRecord {
    pub tau: f64,
    pub verdict: CyclicVerdict,
}

/// Runs the verdict over every positive node of the trajectory grid.
/// `alpha(tau)` is recomputed by re-integration from the fixed vector for
/// denumerable windows (and from the apex in the special windows, where it
/// is initial-condition independent).
pub fn cyclic_scan(
    profile: &Profile,
    tmax: f64,
    taus: usize,
    opts: &IntegrateOptions,
) -> Result<Vec<ScanRecord>, CmdError> {
    let grid = uniform_grid(tmax, taus);
    let traj = integrate(profile, HVec3::APEX, &grid, opts)?;
    let mut records = vec![];
    for i in 1..traj.len() {
        let tau = traj.time(i);
        let nodes = (i + 1).max(9);
        let alpha_fn = |e0: HVec3| -> Result<f64, PropagateError> {
            let sub = integrate(profile, e0, &uniform_grid(tau, nodes), opts)?;
            let last = sub.len() - 1;
            Ok(sub.a1(last) - sub.a2(last))
        };
        let verdict = cyclic::verdict(traj.e_mat(i), traj.q_mat(i), alpha_fn)
            .map_err(|e| CmdError::Numerical(e.to_string()))?;
        records.push(ScanRecord { tau, verdict });
    }
    Ok(records)
}

pub fn scan_records_json(records: &[ScanRecord]) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = records
        .iter()
        .map(|r| {
            json!({
                "tau": r.tau,
                "kind": r.verdict.kind.to_string(),
                "alpha_tau": r.verdict.alpha_tau,
                "eta": vec_json(r.verdict.fixed.eta),
                "eta_sq": r.verdict.fixed.eta_sq,
                "N": r.verdict.n_special,
                "boundary": r.verdict.boundary,
            })
        })
        .collect();
    json!({ "schema": 1, "verdicts": rows })
}

// ---------------------------------------------------------------------------
// regime-scan
// ---------------------------------------------------------------------------

/// One row of the coupling scan.
pub struct RegimeRow {
    pub lambda: f64,
    pub label: RegimeLabel,
    pub measured_exponent: f64,
    pub agrees: bool,
}

/// Default fitting window of `log ||E_q||` against the phase. The
/// boost-modulated families grow too fast for long horizons, so their
/// window sits at small phase.
pub fn default_fit_window(family: Family) -> (f64, f64) {
    match family {
        Family::A | Family::B => (10.0, 90.0),
        Family::C | Family::D => (2.0, 4.5),
    }
}

/// Measures the growth exponent of `||E_q||` over the fit window by least
/// squares on the numerically integrated flow, and checks it against the
/// classified regime.
pub fn regime_row(
    family: Family,
    n1: f64,
    n3: f64,
    lambda: f64,
    rate: f64,
    window: (f64, f64),
    opts: &IntegrateOptions,
) -> Result<RegimeRow, CmdError> {
    let (lo, hi) = window;
    let spec = FamilySpec::new(family, n1, n3, lambda, PhaseFn::linear(rate), hi / rate);
    let label = regime(&spec)?;
    let profile = family_profile(spec)?;
    let nodes = ((hi - lo) / 0.25).ceil() as usize * 4 + 9;
    let traj = integrate(&profile, HVec3::APEX, &uniform_grid(hi / rate, nodes), opts)?;
    let mut lin = vec![];
    let mut loglog = vec![];
    for i in 0..traj.len() {
        let phi = traj.time(i) * rate;
        if phi < lo || phi > hi {
            continue;
        }
        let norm = traj.q_mat(i).frobenius();
        lin.push((phi, norm.ln()));
        loglog.push((phi.ln(), norm.ln()));
    }
    let (measured, agrees) = classify_growth(&label, &lin, &loglog);
    Ok(RegimeRow {
        lambda,
        label,
        measured_exponent: measured,
        agrees,
    })
}

fn classify_growth(label: &RegimeLabel, lin: &[(f64, f64)], loglog: &[(f64, f64)]) -> (f64, bool) {
    let pure_poly = label.polynomial_envelope && label.growth_rate == 0.0;
    if pure_poly {
        let slope = least_squares_slope(loglog);
        (slope, (slope - 1.0).abs() <= 0.1)
    } else {
        let slope = least_squares_slope(lin);
        let target = label.growth_rate;
        if target == 0.0 {
            (slope, slope.abs() <= 0.05)
        } else {
            (slope, (slope - target).abs() <= 0.1 * target)
        }
    }
}

/// Least-squares slope of `y` against `x`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    num / den
}

pub fn regime_rows_csv(rows: &[RegimeRow]) -> String {
    let mut out = String::from("lambda,regime,Lambda,growth_exponent\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.lambda, r.label.kind, r.label.lambda_cap, r.measured_exponent
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

/// Max-norm discrepancies of a numerical run against the closed forms.
pub struct VerifyReport {
    pub e_defect: f64,
    pub q_defect: f64,
    pub eta_sq_defect: f64,
    pub phase_defect: f64,
}

impl VerifyReport {
    pub const TOL_MATRIX: f64 = 1e-8;
    pub const TOL_ETA: f64 = 1e-7;
    pub const TOL_PHASE: f64 = 1e-7;

    pub fn pass(&self) -> bool {
        self.first_failure().is_none()
    }

    pub fn first_failure(&self) -> Option<String> {
        if self.e_defect > Self::TOL_MATRIX {
            return Some(format!(
                "E defect {:.3e} > {:.1e}",
                self.e_defect,
                Self::TOL_MATRIX
            ));
        }
        if self.q_defect > Self::TOL_MATRIX {
            return Some(format!(
                "Eq defect {:.3e} > {:.1e}",
                self.q_defect,
                Self::TOL_MATRIX
            ));
        }
        if self.eta_sq_defect > Self::TOL_ETA {
            return Some(format!(
                "eta_sq defect {:.3e} > {:.1e}",
                self.eta_sq_defect,
                Self::TOL_ETA
            ));
        }
        if self.phase_defect > Self::TOL_PHASE {
            return Some(format!(
                "phase defect {:.3e} > {:.1e}",
                self.phase_defect,
                Self::TOL_PHASE
            ));
        }
        None
    }
}

/// Default verification horizon in phase units; the boost-modulated
/// families are capped because their generator grows exponentially with
/// the phase (the step count needed past a few pi exceeds any sensible
/// runtime budget).
pub fn default_phi_max(family: Family) -> f64 {
    match family {
        Family::A | Family::B => 4.0 * std::f64::consts::PI,
        Family::C | Family::D => std::f64::consts::PI,
    }
}

/// Integrates a family spec and reports scale-normalized max-norm
/// discrepancies of `E`, `E_q`, the fixed-vector square, and the
/// operator-decomposition reconstruction against the closed forms.
pub fn verify_family(
    spec: &FamilySpec,
    nodes: usize,
    opts: &IntegrateOptions,
) -> Result<VerifyReport, CmdError> {
    let profile = family_profile(spec.clone())?;
    let rate = match &spec.phase {
        PhaseFn::Linear { rate } => *rate,
        PhaseFn::Tabulated { .. } => 1.0,
    };
    let traj = integrate(
        &profile,
        HVec3::APEX,
        &uniform_grid(spec.t_max, nodes),
        opts,
    )?;
    let mut rep = VerifyReport {
        e_defect: 0.0,
        q_defect: 0.0,
        eta_sq_defect: 0.0,
        phase_defect: 0.0,
    };
    for i in 0..traj.len() {
        let phi = traj.time(i) * rate;
        let eo = oracles::oracle_e(spec, phi)?;
        let qo = oracles::oracle_eq(spec, phi)?;
        rep.e_defect = rep
            .e_defect
            .max(traj.e_mat(i).sub(&eo).max_abs() / eo.max_abs().max(1.0));
        rep.q_defect = rep
            .q_defect
            .max(traj.q_mat(i).sub(&qo).max_abs() / qo.max_abs().max(1.0));
        if i > 0 {
            if let Ok(fixed) = cyclic::fixed_vector(traj.e_mat(i)) {
                // Only simple eigendirections compare meaningfully; skip
                // identity-like nodes where the direction is free.
                if fixed.multiplicity == 1 {
                    let (eta_o, _) = oracles::oracle_eta(spec, phi)?;
                    let unit = eta_o.scale(1.0 / eta_o.norm_euclid());
                    let sq_o = crate::so21::mdot(unit, unit);
                    rep.eta_sq_defect = rep.eta_sq_defect.max((fixed.eta_sq - sq_o).abs());
                }
            }
            let dec = traj.u_decomposition(i)?;
            let rebuilt = dec.reconstructed_quad();
            rep.phase_defect = rep
                .phase_defect
                .max(rebuilt.sub(traj.q_mat(i)).max_abs() / traj.q_mat(i).max_abs().max(1.0));
        }
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// clap wiring
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "tdho",
    version,
    about = "Time-dependent oscillator flows on the SO(2,1) hyperboloid"
)]
pub struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a profile: trajectory CSV plus a summary document
    Evolve(EvolveArgs),
    /// Decide cyclic-solution existence over a grid of windows
    CyclicScan(CyclicScanArgs),
    /// Classify motion patterns over a coupling range
    RegimeScan(RegimeScanArgs),
    /// Phase functionals of one window
    Phases(PhasesArgs),
    /// Check a family run against its closed forms
    Verify(VerifyArgs),
    /// Sample the classical action ellipse of a direction
    Orbit(OrbitArgs),
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Where to write the summary JSON (stdout if omitted)
    #[arg(long = "summary-out")]
    summary_out: Option<PathBuf>,
    /// Where to write the moment-state CSV (needs a `state` in the config)
    #[arg(long = "state-out")]
    state_out: Option<PathBuf>,
}

#[derive(Args)]
struct CyclicScanArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of scanned windows (defaults to `nodes`)
    #[arg(long = "tau-count")]
    tau_count: Option<usize>,
}

#[derive(Args)]
struct RegimeScanArgs {
    /// Family letter (A, B, C or D)
    #[arg(long)]
    family: String,
    #[arg(long)]
    n1: f64,
    #[arg(long)]
    n3: f64,
    #[arg(long = "lambda-min")]
    lambda_min: f64,
    #[arg(long = "lambda-max")]
    lambda_max: f64,
    /// Number of scan points (endpoints included)
    #[arg(long, default_value_t = 61)]
    steps: usize,
    /// Phase rate of the linear modulation
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Fit window start (phase units; family-dependent default)
    #[arg(long = "fit-lo")]
    fit_lo: Option<f64>,
    /// Fit window end (phase units; family-dependent default)
    #[arg(long = "fit-hi")]
    fit_hi: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PhasesArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Window end (defaults to tmax)
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Family letter (A, B, C or D)
    #[arg(long)]
    family: String,
    #[arg(long)]
    n1: f64,
    #[arg(long)]
    n3: f64,
    #[arg(long)]
    lambda: f64,
    /// Verification horizon in phase units (family-dependent default)
    #[arg(long = "phi-max")]
    phi_max: Option<f64>,
    #[arg(long, default_value_t = 161)]
    nodes: usize,
    /// Deliberately under-resolve the integration (negative control)
    #[arg(long, default_value_t = false)]
    coarse: bool,
}

#[derive(Args)]
struct OrbitArgs {
    /// Rapidity of the direction vector
    #[arg(long = "e-xi")]
    e_xi: f64,
    /// Azimuth of the direction vector
    #[arg(long = "e-phi")]
    e_phi: f64,
    /// Action (area / 2 pi) of the orbit
    #[arg(long = "i-action", default_value_t = 1.0)]
    i_action: f64,
    /// Number of sampled angles
    #[arg(long, default_value_t = 256)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            e.print().ok();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CmdError> {
    match cli.cmd {
        Command::Evolve(a) => {
            let mut r = resolve(&a.common)?;
            if a.summary_out.is_some() {
                r.summary_out = a.summary_out.clone();
            }
            if a.state_out.is_some() {
                r.state_out = a.state_out.clone();
            }
            let (traj, summary) = cmd_evolve(&r)?;
            if let Some(out) = &r.out {
                let mut buf = Vec::new();
                traj.write_csv(&mut buf)?;
                std::fs::write(out, buf)
                    .map_err(|e| CmdError::Config(format!("write {}: {e}", out.display())))?;
            }
            if let Some(state) = &r.state {
                if let Some(path) = &r.state_out {
                    write_output(Some(path), &moment_csv(&traj, state)?)?;
                }
            }
            let text = serde_json::to_string_pretty(&summary).unwrap() + "\n";
            write_output(r.summary_out.as_deref(), &text)?;
            Ok(())
        }
        Command::CyclicScan(a) => {
            let r = resolve(&a.common)?;
            let taus = a.tau_count.unwrap_or(r.nodes);
            let records = cyclic_scan(&r.profile, r.tmax, taus, &r.opts)?;
            let text = serde_json::to_string_pretty(&scan_records_json(&records)).unwrap() + "\n";
            write_output(r.out.as_deref(), &text)?;
            Ok(())
        }
        Command::RegimeScan(a) => {
            let family: Family = a.family.parse()?;
            let window = (
                a.fit_lo.unwrap_or_else(|| default_fit_window(family).0),
                a.fit_hi.unwrap_or_else(|| default_fit_window(family).1),
            );
            if !(window.1 > window.0 && window.0 > 0.0) {
                return Err(CmdError::Config(format!("bad fit window {:?}", window)));
            }
            let steps = a.steps.max(2);
            let mut rows = Vec::with_capacity(steps);
            for k in 0..steps {
                let lambda =
                    a.lambda_min + (a.lambda_max - a.lambda_min) * k as f64 / (steps - 1) as f64;
                rows.push(regime_row(
                    family,
                    a.n1,
                    a.n3,
                    lambda,
                    a.rate,
                    window,
                    &IntegrateOptions::default(),
                )?);
            }
            write_output(a.out.as_deref(), &regime_rows_csv(&rows))?;
            if let Some(bad) = rows.iter().find(|r| !r.agrees) {
                return Err(CmdError::Numerical(format!(
                    "growth exponent {:.4} disagrees with regime {} at lambda = {}",
                    bad.measured_exponent, bad.label.kind, bad.lambda
                )));
            }
            Ok(())
        }
        Command::Phases(a) => {
            let r = resolve(&a.common)?;
            let tau = a.tau.unwrap_or(r.tmax);
            if !(tau > 0.0 && tau <= r.tmax) {
                return Err(CmdError::Config(format!(
                    "tau {tau} outside (0, {}]",
                    r.tmax
                )));
            }
            let grid = uniform_grid(tau, r.nodes);
            let traj = integrate(&r.profile, r.e0, &grid, &r.opts)?;
            let ph = traj.phases(r.u0, traj.len() - 1)?;
            let doc = json!({
                "schema": 1,
                "tau": tau,
                "alpha_tau": ph.alpha_tau,
                "hannay": ph.hannay,
                "dynamical": ph.dynamical,
                "total": ph.total,
                "geometric": ph.geometric,
                "u0": ph.u0,
            });
            write_output(
                r.out.as_deref(),
                &(serde_json::to_string_pretty(&doc).unwrap() + "\n"),
            )
        }
        Command::Verify(a) => {
            let family: Family = a.family.parse()?;
            let phi_max = a.phi_max.unwrap_or_else(|| default_phi_max(family));
            let spec = FamilySpec::new(family, a.n1, a.n3, a.lambda, PhaseFn::linear(1.0), phi_max);
            let mut opts = IntegrateOptions {
                step_target: 0.002,
                ..Default::default()
            };
            if a.coarse {
                opts.step_target *= 100.0;
                opts.drift_tol = 1.0;
                opts.group_tol = 1.0;
            }
            let rep = verify_family(&spec, a.nodes.max(2), &opts)?;
            println!(
                "E    max defect {:.3e} (tol {:.1e})",
                rep.e_defect,
                VerifyReport::TOL_MATRIX
            );
            println!(
                "Eq   max defect {:.3e} (tol {:.1e})",
                rep.q_defect,
                VerifyReport::TOL_MATRIX
            );
            println!(
                "eta2 max defect {:.3e} (tol {:.1e})",
                rep.eta_sq_defect,
                VerifyReport::TOL_ETA
            );
            println!(
                "phase max defect {:.3e} (tol {:.1e})",
                rep.phase_defect,
                VerifyReport::TOL_PHASE
            );
            match rep.first_failure() {
                None => Ok(()),
                Some(what) => Err(CmdError::Numerical(what)),
            }
        }
        Command::Orbit(a) => {
            let e = param_to_vec(HyperParam::new(a.e_xi, a.e_phi));
            let coeffs = crate::wavepacket::classical_ellipse(e, a.i_action)
                .map_err(|e| CmdError::Config(e.to_string()))?;
            let thetas: Vec<f64> = (0..a.samples.max(3))
                .map(|k| 2.0 * std::f64::consts::PI * k as f64 / a.samples.max(3) as f64)
                .collect();
            let pts = crate::wavepacket::sample_orbit(&coeffs, &thetas);
            let mut csv = String::from("theta,q,p\n");
            for (th, (q, p)) in thetas.iter().zip(&pts) {
                csv.push_str(&format!("{th},{q},{p}\n"));
            }
            write_output(a.out.as_deref(), &csv)?;
            let area = crate::wavepacket::shoelace_area(&pts).abs();
            eprintln!(
                "orbit: area {} (2 pi I = {})",
                area,
                2.0 * std::f64::consts::PI * a.i_action
            );
            Ok(())
        }
    }
}
