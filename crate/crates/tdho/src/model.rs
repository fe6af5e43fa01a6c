//! Time-dependent Hamiltonian profiles `H(t) = omega(t) K . n^g(t)`.
//!
//! A profile is either one of the four analytic families (constant
//! generator direction, or a phase-modulated one: rotating, boost-rotated,
//! or boost-translated) or user-supplied tabulated data. The families
//! admit closed-form flows (see [`crate::oracles`]); tabulated profiles
//! are interpolated with shape-preserving cubics.

use crate::so21::HVec3;
use thiserror::Error;

/// Tolerance for the structural parameter checks (`n^2` membership in
/// `{1, -1, 0}`, critical-regime radicands).
pub const PARAM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("AmbiguousNature: |n^2| = {square_abs:.3e} lies in the undecidable band ({tol:.1e}, {band:.1e})")]
    AmbiguousNature {
        square_abs: f64,
        tol: f64,
        band: f64,
    },
    #[error("InvalidFamilyParams: {0}")]
    InvalidFamilyParams(String),
    #[error("NonMonotoneTime: sample {index} has t = {t} not greater than {prev}")]
    NonMonotoneTime { index: usize, t: f64, prev: f64 },
    #[error("InconsistentNature: n^2 varies across samples (range {min:.6e} .. {max:.6e})")]
    InconsistentNature { min: f64, max: f64 },
    #[error("CsvFormat: row {line}: {message}")]
    CsvFormat { line: usize, message: String },
}

/// Class of the Hamiltonian by the sign of `n^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nature {
    Elliptic,
    Hyperbolic,
    Critical,
}

impl std::fmt::Display for Nature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Nature::Elliptic => write!(f, "elliptic"),
            Nature::Hyperbolic => write!(f, "hyperbolic"),
            Nature::Critical => write!(f, "critical"),
        }
    }
}

/// Sign of `n^2` within `tol` decides the nature; the band up to
/// `10 * tol` is reported as too close to call.
pub fn classify(n: HVec3, tol: f64) -> Result<Nature, ModelError> {
    let square = n.msq();
    if square.abs() <= tol {
        Ok(Nature::Critical)
    } else if square.abs() < 10.0 * tol {
        Err(ModelError::AmbiguousNature {
            square_abs: square.abs(),
            tol,
            band: 10.0 * tol,
        })
    } else if square > 0.0 {
        Ok(Nature::Elliptic)
    } else {
        Ok(Nature::Hyperbolic)
    }
}

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

/// The four analytic families of generator direction `n(t)`, with
/// `phi = phase(t)` and `omega(t) = lambda * phase'(t)`:
///
/// - `A`: `n = (n1, 0, n3)` constant;
/// - `B`: `n = (n1 cos 2phi, n1 sin 2phi, n3)`;
/// - `C`: `n = (n1, n3 sinh 2phi, n3 cosh 2phi)`;
/// - `D`: `n = (n1, n3 cosh 2phi, n3 sinh 2phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    A,
    B,
    C,
    D,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::A => write!(f, "A"),
            Family::B => write!(f, "B"),
            Family::C => write!(f, "C"),
            Family::D => write!(f, "D"),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Family::A),
            "B" | "b" => Ok(Family::B),
            "C" | "c" => Ok(Family::C),
            "D" | "d" => Ok(Family::D),
            other => Err(ModelError::InvalidFamilyParams(format!(
                "unknown family '{other}'"
            ))),
        }
    }
}

/// Monotone increasing modulation phase with `phi(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseFn {
    Linear { rate: f64 },
    Tabulated { t: Vec<f64>, phi: Vec<f64> },
}

impl PhaseFn {
    pub fn linear(rate: f64) -> Self {
        PhaseFn::Linear { rate }
    }

    pub fn validate(&self, t_max: f64) -> Result<(), ModelError> {
        match self {
            PhaseFn::Linear { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(ModelError::InvalidFamilyParams(format!(
                        "phase rate must be positive and finite, got {rate}"
                    )));
                }
            }
            PhaseFn::Tabulated { t, phi } => {
                if t.len() < 2 || t.len() != phi.len() {
                    return Err(ModelError::InvalidFamilyParams(
                        "tabulated phase needs >= 2 matched samples".into(),
                    ));
                }
                if t[0] != 0.0 || phi[0] != 0.0 {
                    return Err(ModelError::InvalidFamilyParams(
                        "tabulated phase must start at (0, 0)".into(),
                    ));
                }
                for i in 1..t.len() {
                    if t[i] <= t[i - 1] || phi[i] <= phi[i - 1] {
                        return Err(ModelError::InvalidFamilyParams(format!(
                            "phase samples must increase strictly (sample {i})"
                        )));
                    }
                }
                if *t.last().unwrap() < t_max {
                    return Err(ModelError::InvalidFamilyParams(
                        "tabulated phase does not cover [0, t_max]".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// One-shot evaluation; rebuilds the interpolant for tabulated
    /// phases, so hot paths should go through a [`Profile`], which caches
    /// it.
    pub fn value(&self, time: f64) -> f64 {
        match self {
            PhaseFn::Linear { rate } => rate * time,
            PhaseFn::Tabulated { t, phi } => Pchip::borrowed(t, phi).eval(time),
        }
    }

    /// One-shot derivative; see [`PhaseFn::value`].
    pub fn rate(&self, time: f64) -> f64 {
        match self {
            PhaseFn::Linear { rate } => *rate,
            PhaseFn::Tabulated { t, phi } => Pchip::borrowed(t, phi).deriv(time),
        }
    }

    fn build_interp(&self) -> Option<Pchip> {
        match self {
            PhaseFn::Linear { .. } => None,
            PhaseFn::Tabulated { t, phi } => Some(Pchip::new(t.clone(), phi.clone())),
        }
    }
}

/// Parameters of one analytic family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub family: Family,
    pub n1: f64,
    pub n3: f64,
    /// Dimensionless coupling; `omega(t) = lambda * phase'(t)`.
    pub lambda: f64,
    pub phase: PhaseFn,
    pub t_max: f64,
}

impl FamilySpec {
    pub fn new(family: Family, n1: f64, n3: f64, lambda: f64, phase: PhaseFn, t_max: f64) -> Self {
        FamilySpec {
            family,
            n1,
            n3,
            lambda,
            phase,
            t_max,
        }
    }

    /// Structural `n^2` for the family (constant in time by construction).
    pub fn n_square(&self) -> f64 {
        match self.family {
            Family::A | Family::B | Family::C => self.n3 * self.n3 - self.n1 * self.n1,
            Family::D => -self.n3 * self.n3 - self.n1 * self.n1,
        }
    }

    pub fn validate(&self) -> Result<Nature, ModelError> {
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(ModelError::InvalidFamilyParams(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if !self.lambda.is_finite() || !self.n1.is_finite() || !self.n3.is_finite() {
            return Err(ModelError::InvalidFamilyParams(
                "non-finite parameter".into(),
            ));
        }
        self.phase.validate(self.t_max)?;
        let sq = self.n_square();
        let nature = if (sq - 1.0).abs() <= PARAM_TOL {
            Nature::Elliptic
        } else if (sq + 1.0).abs() <= PARAM_TOL {
            Nature::Hyperbolic
        } else if sq.abs() <= PARAM_TOL {
            Nature::Critical
        } else {
            return Err(ModelError::InvalidFamilyParams(format!(
                "n^2 = {sq} must be 1, -1 or 0"
            )));
        };
        if self.family == Family::A {
            // The closed forms pin the constant-direction charts: the
            // elliptic chart sits on the upper hyperboloid, the critical
            // direction is scaled so that n3 = 1.
            match nature {
                Nature::Elliptic if self.n3 <= 0.0 => {
                    return Err(ModelError::InvalidFamilyParams(
                        "family A elliptic requires n3 > 0".into(),
                    ));
                }
                Nature::Critical if (self.n3 - 1.0).abs() > PARAM_TOL => {
                    return Err(ModelError::InvalidFamilyParams(
                        "family A critical requires the normalization n3 = 1".into(),
                    ));
                }
                _ => {}
            }
        }
        Ok(nature)
    }

    /// Generator direction as a function of the modulation phase.
    pub fn n_at_phase(&self, phi: f64) -> HVec3 {
        match self.family {
            Family::A => HVec3::new(self.n1, 0.0, self.n3),
            Family::B => HVec3::new(
                self.n1 * (2.0 * phi).cos(),
                self.n1 * (2.0 * phi).sin(),
                self.n3,
            ),
            Family::C => HVec3::new(
                self.n1,
                self.n3 * (2.0 * phi).sinh(),
                self.n3 * (2.0 * phi).cosh(),
            ),
            Family::D => HVec3::new(
                self.n1,
                self.n3 * (2.0 * phi).cosh(),
                self.n3 * (2.0 * phi).sinh(),
            ),
        }
    }
}

// ---------------------------------------------------------------------------
// Regimes
// ---------------------------------------------------------------------------

/// Qualitative growth pattern of the quadrature flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    /// Bounded motion.
    Finite,
    /// Oscillation with exponentially increasing amplitude.
    ExpOscillating,
    /// Oscillation with polynomially increasing amplitude (critical
    /// coupling), or pure polynomial growth.
    PolyOscillating,
    /// Exponential runaway.
    ExpInfinite,
}

impl std::fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegimeKind::Finite => write!(f, "finite"),
            RegimeKind::ExpOscillating => write!(f, "exp-oscillating"),
            RegimeKind::PolyOscillating => write!(f, "poly-oscillating"),
            RegimeKind::ExpInfinite => write!(f, "exp-infinite"),
        }
    }
}

/// Regime classification of a family spec, with the derived flow
/// constants.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeLabel {
    pub kind: RegimeKind,
    /// The reduced-flow frequency/rate `Lambda >= 0`.
    pub lambda_cap: f64,
    /// Rapidity of the reduced-flow axis.
    pub xi_n: f64,
    /// Branch sign (+1 or -1).
    pub epsilon: f64,
    /// Couplings at which the kind changes.
    pub boundary_lambdas: Vec<f64>,
    /// Expected asymptotic slope of `log ||E_q||` against the phase.
    pub growth_rate: f64,
    /// Whether a polynomial envelope rides on top of the exponential one.
    pub polynomial_envelope: bool,
}

fn sign_or_one(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Classifies the motion pattern of a family spec by exact parameter
/// comparisons (radicand tolerance [`PARAM_TOL`]), not trajectory fitting.
pub fn regime(spec: &FamilySpec) -> Result<RegimeLabel, ModelError> {
    let nature = spec.validate()?;
    let l = spec.lambda;
    let (n1, n3) = (spec.n1, spec.n3);
    let label = match spec.family {
        Family::A => {
            let lam = l.abs();
            match nature {
                Nature::Elliptic => RegimeLabel {
                    kind: RegimeKind::Finite,
                    lambda_cap: lam,
                    xi_n: n1.abs().asinh(),
                    epsilon: 1.0,
                    boundary_lambdas: vec![],
                    growth_rate: 0.0,
                    polynomial_envelope: false,
                },
                Nature::Hyperbolic => RegimeLabel {
                    kind: RegimeKind::ExpInfinite,
                    lambda_cap: lam,
                    xi_n: n3.asinh(),
                    epsilon: 1.0,
                    boundary_lambdas: vec![],
                    growth_rate: lam,
                    polynomial_envelope: false,
                },
                Nature::Critical => RegimeLabel {
                    kind: RegimeKind::PolyOscillating,
                    lambda_cap: 0.0,
                    xi_n: 0.0,
                    epsilon: sign_or_one(n1),
                    boundary_lambdas: vec![],
                    growth_rate: 0.0,
                    polynomial_envelope: true,
                },
            }
        }
        Family::B => {
            let a = l * n3 - 1.0;
            let b = l * n1;
            let d = a * a - b * b;
            let boundaries = boundary_couplings(n3, n1);
            if d.abs() <= PARAM_TOL {
                RegimeLabel {
                    kind: RegimeKind::PolyOscillating,
                    lambda_cap: 0.0,
                    xi_n: 0.0,
                    epsilon: if b == 0.0 { 1.0 } else { sign_or_one(a * b) },
                    boundary_lambdas: boundaries,
                    growth_rate: 0.0,
                    polynomial_envelope: true,
                }
            } else if d > 0.0 {
                let cap = d.sqrt();
                RegimeLabel {
                    kind: RegimeKind::Finite,
                    lambda_cap: cap,
                    xi_n: (b / cap).asinh(),
                    epsilon: sign_or_one(a),
                    boundary_lambdas: boundaries,
                    growth_rate: 0.0,
                    polynomial_envelope: false,
                }
            } else {
                let cap = (-d).sqrt();
                RegimeLabel {
                    kind: RegimeKind::ExpOscillating,
                    lambda_cap: cap,
                    xi_n: (a / cap).asinh(),
                    epsilon: sign_or_one(b),
                    boundary_lambdas: boundaries,
                    growth_rate: cap,
                    polynomial_envelope: false,
                }
            }
        }
        Family::C => {
            let a = l * n3;
            let b = l * n1 + 1.0;
            let d = a * a - b * b;
            let boundaries = boundary_couplings_c(n3, n1);
            if d.abs() <= PARAM_TOL {
                RegimeLabel {
                    kind: RegimeKind::ExpInfinite,
                    lambda_cap: 0.0,
                    xi_n: 0.0,
                    epsilon: if a == 0.0 { 1.0 } else { sign_or_one(a * b) },
                    boundary_lambdas: boundaries,
                    growth_rate: 1.0,
                    polynomial_envelope: true,
                }
            } else if d > 0.0 {
                let cap = d.sqrt();
                RegimeLabel {
                    kind: RegimeKind::ExpOscillating,
                    lambda_cap: cap,
                    xi_n: (b / cap).asinh(),
                    epsilon: sign_or_one(a),
                    boundary_lambdas: boundaries,
                    growth_rate: 1.0,
                    polynomial_envelope: false,
                }
            } else {
                let cap = (-d).sqrt();
                RegimeLabel {
                    kind: RegimeKind::ExpInfinite,
                    lambda_cap: cap,
                    xi_n: (a / cap).asinh(),
                    epsilon: sign_or_one(b),
                    boundary_lambdas: boundaries,
                    growth_rate: 1.0 + cap,
                    polynomial_envelope: false,
                }
            }
        }
        Family::D => {
            let b1 = l * n1 + 1.0;
            let b2 = l * n3;
            let cap = (b1 * b1 + b2 * b2).sqrt();
            RegimeLabel {
                kind: RegimeKind::ExpInfinite,
                lambda_cap: cap,
                xi_n: 0.0,
                epsilon: 1.0,
                boundary_lambdas: vec![],
                growth_rate: 1.0 + cap,
                polynomial_envelope: false,
            }
        }
    };
    Ok(label)
}

/// Roots of `(lambda n3 - 1)^2 = (lambda n1)^2`.
fn boundary_couplings(n3: f64, n1: f64) -> Vec<f64> {
    let mut out = vec![];
    for denom in [n3 - n1, n3 + n1] {
        if denom.abs() > 1e-300 {
            out.push(1.0 / denom);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() <= PARAM_TOL);
    out
}

/// Roots of `(lambda n3)^2 = (lambda n1 + 1)^2`.
fn boundary_couplings_c(n3: f64, n1: f64) -> Vec<f64> {
    let mut out = vec![];
    if (n3 - n1).abs() > 1e-300 {
        out.push(1.0 / (n3 - n1));
    }
    if (n3 + n1).abs() > 1e-300 {
        out.push(-1.0 / (n3 + n1));
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() <= PARAM_TOL);
    out
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

/// One tabulated sample of the Hamiltonian data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub t: f64,
    pub omega: f64,
    pub n: HVec3,
}

#[derive(Debug, Clone)]
struct TabulatedData {
    omega: Pchip,
    n1: Pchip,
    n2: Pchip,
    n3: Pchip,
}

#[derive(Debug, Clone)]
struct FamilyData {
    spec: FamilySpec,
    /// Cached interpolant of a tabulated modulation phase.
    phase_interp: Option<Pchip>,
}

impl FamilyData {
    fn phase_value(&self, t: f64) -> f64 {
        match &self.phase_interp {
            Some(p) => p.eval(t),
            None => self.spec.phase.value(t),
        }
    }

    fn phase_rate(&self, t: f64) -> f64 {
        match &self.phase_interp {
            Some(p) => p.deriv(t),
            None => self.spec.phase.rate(t),
        }
    }
}

#[derive(Debug, Clone)]
enum ProfileKind {
    Family(FamilyData),
    Tabulated(TabulatedData),
}

/// The Hamiltonian data `omega(t)`, `n(t)` ready for integration.
/// Immutable after construction; evaluation is pure.
#[derive(Debug, Clone)]
pub struct Profile {
    kind: ProfileKind,
    nature: Nature,
    t_max: f64,
}

impl Profile {
    pub fn nature(&self) -> Nature {
        self.nature
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn omega(&self, t: f64) -> f64 {
        match &self.kind {
            ProfileKind::Family(data) => data.spec.lambda * data.phase_rate(t),
            ProfileKind::Tabulated(data) => data.omega.eval(t),
        }
    }

    pub fn n(&self, t: f64) -> HVec3 {
        match &self.kind {
            ProfileKind::Family(data) => data.spec.n_at_phase(data.phase_value(t)),
            ProfileKind::Tabulated(data) => {
                HVec3::new(data.n1.eval(t), data.n2.eval(t), data.n3.eval(t))
            }
        }
    }

    /// Modulation phase at `t` (family profiles only).
    pub fn phase(&self, t: f64) -> Option<f64> {
        match &self.kind {
            ProfileKind::Family(data) => Some(data.phase_value(t)),
            ProfileKind::Tabulated(_) => None,
        }
    }

    pub fn family_spec(&self) -> Option<&FamilySpec> {
        match &self.kind {
            ProfileKind::Family(data) => Some(&data.spec),
            ProfileKind::Tabulated(_) => None,
        }
    }
}

/// Builds the profile of an analytic family.
pub fn family_profile(spec: FamilySpec) -> Result<Profile, ModelError> {
    let nature = spec.validate()?;
    let t_max = spec.t_max;
    let phase_interp = spec.phase.build_interp();
    Ok(Profile {
        kind: ProfileKind::Family(FamilyData { spec, phase_interp }),
        nature,
        t_max,
    })
}

/// Builds a profile from ordered samples. Interpolation is
/// shape-preserving cubic (Fritsch-Carlson) for `omega` and componentwise
/// cubic for `n`; the constant-`n^2` invariant is checked on the samples,
/// never enforced by renormalization.
pub fn tabulated_profile(samples: &[ProfileSample]) -> Result<Profile, ModelError> {
    if samples.len() < 2 {
        return Err(ModelError::InvalidFamilyParams(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    for i in 1..samples.len() {
        if samples[i].t <= samples[i - 1].t {
            return Err(ModelError::NonMonotoneTime {
                index: i,
                t: samples[i].t,
                prev: samples[i - 1].t,
            });
        }
    }
    let squares: Vec<f64> = samples.iter().map(|s| s.n.msq()).collect();
    let min = squares.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = squares.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max - min > 10.0 * PARAM_TOL {
        return Err(ModelError::InconsistentNature { min, max });
    }
    let mean = squares.iter().sum::<f64>() / squares.len() as f64;
    let nature = if mean.abs() <= PARAM_TOL {
        Nature::Critical
    } else if mean > 0.0 {
        Nature::Elliptic
    } else {
        Nature::Hyperbolic
    };
    let t: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let data = TabulatedData {
        omega: Pchip::new(t.clone(), samples.iter().map(|s| s.omega).collect()),
        n1: Pchip::new(t.clone(), samples.iter().map(|s| s.n.a1).collect()),
        n2: Pchip::new(t.clone(), samples.iter().map(|s| s.n.a2).collect()),
        n3: Pchip::new(t.clone(), samples.iter().map(|s| s.n.a3).collect()),
    };
    let t_max = *t.last().unwrap();
    Ok(Profile {
        kind: ProfileKind::Tabulated(data),
        nature,
        t_max,
    })
}

/// Parses the tabulated-profile CSV (`t,omega,n1,n2,n3`, UTF-8, rows in
/// time order).
pub fn profile_samples_from_csv(text: &str) -> Result<Vec<ProfileSample>, ModelError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(ModelError::CsvFormat {
        line: 1,
        message: "empty file".into(),
    })?;
    if header.trim() != "t,omega,n1,n2,n3" {
        return Err(ModelError::CsvFormat {
            line: 1,
            message: format!(
                "expected header 't,omega,n1,n2,n3', got '{}'",
                header.trim()
            ),
        });
    }
    let mut out = vec![];
    for (idx, line) in lines {
        let row = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 5 {
            return Err(ModelError::CsvFormat {
                line: row,
                message: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let mut vals = [0.0f64; 5];
        for (k, f) in fields.iter().enumerate() {
            vals[k] = f.trim().parse::<f64>().map_err(|e| ModelError::CsvFormat {
                line: row,
                message: format!("field {}: {e}", k + 1),
            })?;
        }
        out.push(ProfileSample {
            t: vals[0],
            omega: vals[1],
            n: HVec3::new(vals[2], vals[3], vals[4]),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Shape-preserving cubic interpolation (Fritsch-Carlson)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub(crate) struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub(crate) fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let d = Self::slopes(&x, &y);
        Pchip { x, y, d }
    }

    /// One-shot evaluation helper for borrowed data (recomputes slopes;
    /// only used on short tables).
    pub(crate) fn borrowed(x: &[f64], y: &[f64]) -> Self {
        Pchip::new(x.to_vec(), y.to_vec())
    }

    fn slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n == 2 {
            let s = (y[1] - y[0]) / (x[1] - x[0]);
            return vec![s, s];
        }
        let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                d[i] = 0.0;
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        d[0] = Self::edge_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = Self::edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        d
    }

    fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
        let mut s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            s = 0.0;
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            s = 3.0 * d0;
        }
        s
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        let k = self.x.partition_point(|&xi| xi <= t);
        k.clamp(1, n - 1) - 1
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    pub(crate) fn deriv(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let dh00 = 6.0 * s2 - 6.0 * s;
        let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
        let dh01 = -6.0 * s2 + 6.0 * s;
        let dh11 = 3.0 * s2 - 2.0 * s;
        (dh00 * self.y[i] + dh01 * self.y[i + 1]) / h + dh10 * self.d[i] + dh11 * self.d[i + 1]
    }
}
