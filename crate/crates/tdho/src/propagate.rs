//! Fixed-step RK4 integration of the invariant-vector equation
//! `e' = -2 omega n^g x e^g`, simultaneous assembly of the 3x3 evolution
//! matrix `E(t)` (by propagating the three basis vectors) and of the 2x2
//! quadrature flow `E_q(t)`, and accumulation of the two phase integrals
//!
//! - `A1(t) = (1/2) int (e1 e2' - e1' e2) / (e3 + 1) dt` — the geometric
//!   accumulator, written in the azimuth-free form so that it stays
//!   regular when the trajectory passes near the apex;
//! - `A2(t) = int omega (e, n) dt` — the frequency/energy accumulator.
//!
//! The phase functional is `alpha(t) = A1 - A2`, the Hannay angle is
//! `-A1(tau)` and the dynamical phase of a state with `u(0) = u0 e0` is
//! `-u0 A2(tau)`.
//!
//! The integrator never renormalizes `e(t)` onto the hyperboloid: metric
//! drift is monitored and turns into an error past tolerance. Substeps are
//! chosen so that `2 |omega| max(1, |n|) h <= step_target`; the `|n|`
//! factor matters for the boost-modulated families whose direction vector
//! grows exponentially with the phase.

use crate::model::Profile;
use crate::so21::{mdot, quad_rep, wrap_angle, HVec3, QuadMatrix, SO21Matrix, PHI_UNDEFINED_XI};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagateError {
    #[error("DriftExceeded at t = {t}: |e^2 - e0^2| = {defect:.3e} exceeds {allowed:.3e}")]
    DriftExceeded { t: f64, defect: f64, allowed: f64 },
    #[error("GroupViolation at t = {t}: defect {defect:.3e} exceeds {allowed:.3e}")]
    GroupViolation { t: f64, defect: f64, allowed: f64 },
    #[error("InvalidGrid: {0}")]
    InvalidGrid(String),
    #[error("NonUnitInitialVector: e0^2 = {square}, e03 = {a3}")]
    NonUnitInitialVector { square: f64, a3: f64 },
    #[error("InvalidU0: u0 = {0} violates the Schwarz bound u0 >= 1/2")]
    InvalidU0(f64),
    #[error("StepBudgetExceeded: interval needs {required} substeps, budget {budget}")]
    StepBudgetExceeded { required: u64, budget: u64 },
}

/// Integration controls. `step_target` bounds `2 |omega| max(1,|n|) h`;
/// the tolerances are per accumulated unit of `int |omega| dt` and apply
/// to scale-normalized defects.
#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub step_target: f64,
    pub drift_tol: f64,
    pub group_tol: f64,
    pub step_budget: u64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            step_target: 0.01,
            drift_tol: 1e-9,
            group_tol: 1e-9,
            step_budget: 400_000_000,
        }
    }
}

/// Right-hand side of the invariant-vector equation,
/// `-2 omega (n^g x e^g)`.
pub fn rhs(e: HVec3, omega: f64, n: HVec3) -> HVec3 {
    HVec3::new(
        -2.0 * omega * (n.a3 * e.a2 - n.a2 * e.a3),
        -2.0 * omega * (n.a1 * e.a3 - n.a3 * e.a1),
        -2.0 * omega * (n.a1 * e.a2 - n.a2 * e.a1),
    )
}

// State layout for the coupled linear system:
// [0..3)   e
// [3..12)  columns of E (three basis solutions)
// [12..16) columns of E_q
// [16]     A1
// [17]     A2
// [18]     int |omega| dt  (phase scale for the invariant gates)
const DIM: usize = 19;

fn deriv(t: f64, s: &[f64; DIM], profile: &Profile, raw: bool) -> [f64; DIM] {
    let omega = profile.omega(t);
    let n = profile.n(t);
    let mut d = [0.0; DIM];
    let apply = |v1: f64, v2: f64, v3: f64| {
        (
            -2.0 * omega * (n.a3 * v2 - n.a2 * v3),
            -2.0 * omega * (n.a1 * v3 - n.a3 * v1),
            -2.0 * omega * (n.a1 * v2 - n.a2 * v1),
        )
    };
    for base in [0usize, 3, 6, 9] {
        let (d1, d2, d3) = apply(s[base], s[base + 1], s[base + 2]);
        d[base] = d1;
        d[base + 1] = d2;
        d[base + 2] = d3;
    }
    // Quadrature columns: (x, p)' = omega [[n2, n1+n3], [n1-n3, -n2]] (x, p).
    for base in [12usize, 14] {
        let (x, p) = (s[base], s[base + 1]);
        d[base] = omega * (n.a2 * x + (n.a1 + n.a3) * p);
        d[base + 1] = omega * ((n.a1 - n.a3) * x - n.a2 * p);
    }
    if !raw {
        let e = HVec3::new(s[0], s[1], s[2]);
        let f = rhs(e, omega, n);
        d[16] = 0.5 * (e.a1 * f.a2 - f.a1 * e.a2) / (e.a3 + 1.0);
    }
    d[17] = omega * (e_dot_ng(s, n));
    d[18] = omega.abs();
    d
}

fn e_dot_ng(s: &[f64; DIM], n: HVec3) -> f64 {
    s[2] * n.a3 - s[0] * n.a1 - s[1] * n.a2
}

fn rk4_step(t: f64, h: f64, s: &mut [f64; DIM], profile: &Profile, raw: bool) {
    let k1 = deriv(t, s, profile, raw);
    let mut s2 = *s;
    for i in 0..DIM {
        s2[i] = s[i] + 0.5 * h * k1[i];
    }
    let k2 = deriv(t + 0.5 * h, &s2, profile, raw);
    for i in 0..DIM {
        s2[i] = s[i] + 0.5 * h * k2[i];
    }
    let k3 = deriv(t + 0.5 * h, &s2, profile, raw);
    for i in 0..DIM {
        s2[i] = s[i] + h * k3[i];
    }
    let k4 = deriv(t + h, &s2, profile, raw);
    for i in 0..DIM {
        s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// One stored node of a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryNode {
    pub t: f64,
    pub e: HVec3,
    pub e_mat: SO21Matrix,
    pub q_mat: QuadMatrix,
    pub a1: f64,
    pub a2: f64,
}

/// Total, dynamical and geometric phases over a window, together with the
/// raw functionals they came from. `total` carries the eigen-branch value
/// `u0 * alpha(tau)` — it is the total phase only once cyclicity with
/// `u(0) = u0 e0` has been established (the cyclic module decides that).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseReport {
    pub alpha_tau: f64,
    /// Classical Hannay angle `-A1(tau)` (unwrapped).
    pub hannay: f64,
    pub dynamical: f64,
    /// `u0 * alpha(tau)` reduced into `(-pi, pi]`.
    pub total: f64,
    /// `total - dynamical` reduced into `(-pi, pi]`.
    pub geometric: f64,
    pub u0: f64,
}

/// Three-factor decomposition data of the evolution operator at a node:
/// the boost-to-`e(t)` factor, the accumulated internal rotation, and the
/// inverse boost at the initial node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UDecomposition {
    pub xi_t: f64,
    pub phi_t: f64,
    pub alpha_t: f64,
    pub xi_0: f64,
    pub phi_0: f64,
}

fn azimuth_generator(phi: f64) -> HVec3 {
    HVec3::new(-phi.sin(), phi.cos(), 0.0)
}

impl UDecomposition {
    /// Quadrature matrix induced by the three factors; reproduces the
    /// trajectory's `E_q(t)`.
    pub fn reconstructed_quad(&self) -> QuadMatrix {
        let outer = quad_rep(self.xi_t, azimuth_generator(self.phi_t), 1e-9).unwrap();
        let inner = quad_rep(-2.0 * self.alpha_t, HVec3::APEX, 1e-9).unwrap();
        let undo = quad_rep(-self.xi_0, azimuth_generator(self.phi_0), 1e-9).unwrap();
        outer * inner * undo
    }
}

/// Integrated flow data on a caller-supplied grid. Immutable once built.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Vec<f64>,
    e: Vec<HVec3>,
    e_mat: Vec<SO21Matrix>,
    q_mat: Vec<QuadMatrix>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    phase_abs: Vec<f64>,
    xi: Vec<f64>,
    phi_unwrapped: Vec<f64>,
    e0: HVec3,
    raw: bool,
    drift_max: f64,
    group_defect_max: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.grid[i]
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn e(&self, i: usize) -> HVec3 {
        self.e[i]
    }

    pub fn e_mat(&self, i: usize) -> &SO21Matrix {
        &self.e_mat[i]
    }

    pub fn q_mat(&self, i: usize) -> &QuadMatrix {
        &self.q_mat[i]
    }

    pub fn a1(&self, i: usize) -> f64 {
        self.a1[i]
    }

    pub fn a2(&self, i: usize) -> f64 {
        self.a2[i]
    }

    /// Accumulated `int |omega| dt` up to node `i`.
    pub fn phase_abs(&self, i: usize) -> f64 {
        self.phase_abs[i]
    }

    pub fn e0(&self) -> HVec3 {
        self.e0
    }

    pub fn is_raw(&self) -> bool {
        self.raw
    }

    /// Largest scale-normalized Casimir drift seen at any node.
    pub fn drift_max(&self) -> f64 {
        self.drift_max
    }

    /// Largest scale-normalized metric defect of `E` (or unit-determinant
    /// defect of `E_q`) seen at any node.
    pub fn group_defect_max(&self) -> f64 {
        self.group_defect_max
    }

    pub fn node(&self, i: usize) -> TrajectoryNode {
        TrajectoryNode {
            t: self.grid[i],
            e: self.e[i],
            e_mat: self.e_mat[i],
            q_mat: self.q_mat[i],
            a1: self.a1[i],
            a2: self.a2[i],
        }
    }

    /// Phase functionals at node `tau_index` for a state with
    /// `u(0) = u0 e0`.
    pub fn phases(&self, u0: f64, tau_index: usize) -> Result<PhaseReport, PropagateError> {
        if self.raw {
            return Err(PropagateError::NonUnitInitialVector {
                square: self.e0.msq(),
                a3: self.e0.a3,
            });
        }
        if u0 < 0.5 - 1e-12 {
            return Err(PropagateError::InvalidU0(u0));
        }
        let alpha_tau = self.a1[tau_index] - self.a2[tau_index];
        let hannay = -self.a1[tau_index];
        let dynamical = -u0 * self.a2[tau_index];
        let total = wrap_angle(u0 * alpha_tau);
        let geometric = wrap_angle(total - dynamical);
        Ok(PhaseReport {
            alpha_tau,
            hannay,
            dynamical,
            total,
            geometric,
            u0,
        })
    }

    /// Factorization data of the evolution operator at node `i`.
    pub fn u_decomposition(&self, i: usize) -> Result<UDecomposition, PropagateError> {
        if self.raw {
            return Err(PropagateError::NonUnitInitialVector {
                square: self.e0.msq(),
                a3: self.e0.a3,
            });
        }
        Ok(UDecomposition {
            xi_t: self.xi[i],
            phi_t: self.phi_unwrapped[i],
            alpha_t: self.a1[i] - self.a2[i],
            xi_0: self.xi[0],
            phi_0: self.phi_unwrapped[0],
        })
    }

    /// Writes the trajectory CSV
    /// (`t,e1,e2,e3,E11..E33,Q11..Q22,A1,A2`, row-major).
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "t,e1,e2,e3,E11,E12,E13,E21,E22,E23,E31,E32,E33,Q11,Q12,Q21,Q22,A1,A2"
        )?;
        for i in 0..self.len() {
            let e = self.e[i];
            write!(w, "{},{},{},{}", self.grid[i], e.a1, e.a2, e.a3)?;
            for v in self.e_mat[i].0 {
                write!(w, ",{v}")?;
            }
            for v in self.q_mat[i].0 {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{},{}", self.a1[i], self.a2[i])?;
        }
        Ok(())
    }
}

/// Integrates the flow from a unit timelike upper `e0`, with phase
/// accumulators.
pub fn integrate(
    profile: &Profile,
    e0: HVec3,
    grid: &[f64],
    opts: &IntegrateOptions,
) -> Result<Trajectory, PropagateError> {
    e0.check_unit_timelike_upper(1e-9)
        .map_err(|_| PropagateError::NonUnitInitialVector {
            square: e0.msq(),
            a3: e0.a3,
        })?;
    integrate_impl(profile, e0, grid, opts, false)
}

/// Integrates the flow from an arbitrary initial vector (raw matrix
/// assembly; phase accumulators are not formed).
pub fn integrate_raw(
    profile: &Profile,
    e0: HVec3,
    grid: &[f64],
    opts: &IntegrateOptions,
) -> Result<Trajectory, PropagateError> {
    integrate_impl(profile, e0, grid, opts, true)
}

/// Uniform grid over `[0, t_end]` with `nodes` points.
pub fn uniform_grid(t_end: f64, nodes: usize) -> Vec<f64> {
    let n = nodes.max(2);
    (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect()
}

fn integrate_impl(
    profile: &Profile,
    e0: HVec3,
    grid: &[f64],
    opts: &IntegrateOptions,
    raw: bool,
) -> Result<Trajectory, PropagateError> {
    if grid.len() < 2 {
        return Err(PropagateError::InvalidGrid(
            "need at least two grid nodes".into(),
        ));
    }
    if grid[0] != 0.0 {
        return Err(PropagateError::InvalidGrid(format!(
            "grid must start at 0, got {}",
            grid[0]
        )));
    }
    for i in 1..grid.len() {
        if grid[i] <= grid[i - 1] {
            return Err(PropagateError::InvalidGrid(format!(
                "grid must increase strictly at index {i}"
            )));
        }
    }
    if *grid.last().unwrap() > profile.t_max() * (1.0 + 1e-12) + 1e-300 {
        return Err(PropagateError::InvalidGrid(format!(
            "grid end {} exceeds profile t_max {}",
            grid.last().unwrap(),
            profile.t_max()
        )));
    }

    let mut s = [0.0f64; DIM];
    s[0] = e0.a1;
    s[1] = e0.a2;
    s[2] = e0.a3;
    s[3] = 1.0; // E columns start as the identity basis
    s[7] = 1.0;
    s[11] = 1.0;
    s[12] = 1.0; // E_q columns
    s[15] = 1.0;

    let n_nodes = grid.len();
    let mut traj = Trajectory {
        grid: grid.to_vec(),
        e: Vec::with_capacity(n_nodes),
        e_mat: Vec::with_capacity(n_nodes),
        q_mat: Vec::with_capacity(n_nodes),
        a1: Vec::with_capacity(n_nodes),
        a2: Vec::with_capacity(n_nodes),
        phase_abs: Vec::with_capacity(n_nodes),
        xi: Vec::with_capacity(n_nodes),
        phi_unwrapped: Vec::with_capacity(n_nodes),
        e0,
        raw,
        drift_max: 0.0,
        group_defect_max: 0.0,
    };

    let e0_square = e0.msq();
    let mut phi_run = initial_azimuth(e0);
    let mut steps_used: u64 = 0;

    record_node(&mut traj, &s, phi_run);
    check_node(&mut traj, &s, grid[0], e0_square, opts)?;

    for w in grid.windows(2) {
        let (t_a, t_b) = (w[0], w[1]);
        let dt = t_b - t_a;
        let rate = interval_rate(profile, t_a, t_b);
        let m = ((rate * dt / opts.step_target).ceil() as u64).max(1);
        steps_used = steps_used.saturating_add(m);
        if steps_used > opts.step_budget {
            return Err(PropagateError::StepBudgetExceeded {
                required: steps_used,
                budget: opts.step_budget,
            });
        }
        let h = dt / m as f64;
        for k in 0..m {
            let t = t_a + k as f64 * h;
            rk4_step(t, h, &mut s, profile, raw);
            phi_run = unwrap_azimuth(phi_run, &s);
        }
        record_node(&mut traj, &s, phi_run);
        check_node(&mut traj, &s, t_b, e0_square, opts)?;
    }
    Ok(traj)
}

fn initial_azimuth(e0: HVec3) -> f64 {
    let r = (e0.a1 * e0.a1 + e0.a2 * e0.a2).sqrt();
    if r.asinh() < PHI_UNDEFINED_XI {
        0.0
    } else {
        e0.a2.atan2(e0.a1)
    }
}

fn unwrap_azimuth(prev: f64, s: &[f64; DIM]) -> f64 {
    let r = (s[0] * s[0] + s[1] * s[1]).sqrt();
    if r.asinh() < PHI_UNDEFINED_XI {
        return prev;
    }
    let raw = s[1].atan2(s[0]);
    let two_pi = 2.0 * std::f64::consts::PI;
    raw + two_pi * ((prev - raw) / two_pi).round()
}

/// Local stiffness bound: the solution rotates at `2 |omega| |n|`, and the
/// coefficient matrix itself varies at `|dn/dt|` (a rotating direction
/// modulates the flow even at tiny coupling), so both bound the step.
fn interval_rate(profile: &Profile, t_a: f64, t_b: f64) -> f64 {
    let mut rate = 0.0f64;
    let mut prev: Option<HVec3> = None;
    let dt = (t_b - t_a) / 4.0;
    for k in 0..=4 {
        let t = t_a + dt * k as f64;
        let n = profile.n(t);
        let local = 2.0 * profile.omega(t).abs() * n.norm_euclid().max(1.0);
        rate = rate.max(local);
        if let Some(p) = prev {
            let dn = (n - p).norm_euclid() / dt;
            rate = rate.max(dn / n.norm_euclid().max(1.0));
        }
        prev = Some(n);
    }
    rate
}

fn record_node(traj: &mut Trajectory, s: &[f64; DIM], phi_run: f64) {
    let e = HVec3::new(s[0], s[1], s[2]);
    traj.e.push(e);
    traj.e_mat.push(SO21Matrix::from_columns(
        HVec3::new(s[3], s[4], s[5]),
        HVec3::new(s[6], s[7], s[8]),
        HVec3::new(s[9], s[10], s[11]),
    ));
    traj.q_mat.push(QuadMatrix([s[12], s[14], s[13], s[15]]));
    traj.a1.push(s[16]);
    traj.a2.push(s[17]);
    traj.phase_abs.push(s[18]);
    traj.xi.push((e.a1 * e.a1 + e.a2 * e.a2).sqrt().asinh());
    traj.phi_unwrapped.push(phi_run);
}

fn check_node(
    traj: &mut Trajectory,
    s: &[f64; DIM],
    t: f64,
    e0_square: f64,
    opts: &IntegrateOptions,
) -> Result<(), PropagateError> {
    let idx = traj.e.len() - 1;
    let e = traj.e[idx];
    let allowed_scale = s[18].max(1.0);
    let drift = (mdot(e, e) - e0_square).abs() / e.norm_euclid().powi(2).max(1.0);
    traj.drift_max = traj.drift_max.max(drift);
    if drift > opts.drift_tol * allowed_scale {
        return Err(PropagateError::DriftExceeded {
            t,
            defect: drift,
            allowed: opts.drift_tol * allowed_scale,
        });
    }
    let em = &traj.e_mat[idx];
    let scale = em.max_abs().powi(2).max(1.0);
    let group = em.metric_defect() / scale;
    let qm = &traj.q_mat[idx];
    let qdefect = (qm.det() - 1.0).abs() / qm.max_abs().powi(2).max(1.0);
    let worst = group.max(qdefect);
    traj.group_defect_max = traj.group_defect_max.max(worst);
    if worst > opts.group_tol * allowed_scale {
        return Err(PropagateError::GroupViolation {
            t,
            defect: worst,
            allowed: opts.group_tol * allowed_scale,
        });
    }
    Ok(())
}
