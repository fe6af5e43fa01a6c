//! Shared fixtures for the integration suites: the eleven regime-branch
//! parameter sets, the brute-force timelike-fixed-vector search, and small
//! fitting helpers.
//!
//! Each test target uses its own subset.
#![allow(dead_code)]

use tdho::model::{Family, FamilySpec, PhaseFn};
use tdho::propagate::IntegrateOptions;
use tdho::so21::{param_to_vec, HVec3, HyperParam, SO21Matrix};

/// One acceptance parameter set: a regime branch plus its integration
/// horizon (in phase units; the boost-modulated families are capped
/// because their generator grows like `exp(2 phi)`).
pub struct BranchSet {
    pub name: &'static str,
    pub spec: FamilySpec,
}

pub fn phi_max_for(family: Family) -> f64 {
    match family {
        Family::A | Family::B => 4.0 * std::f64::consts::PI,
        Family::C | Family::D => std::f64::consts::PI,
    }
}

/// The eleven branch sets: three constant-direction charts, four
/// rotating-family regimes (one with a hyperbolic Hamiltonian), three
/// boost-rotated regimes, and the boost-translated family.
pub fn branch_sets() -> Vec<BranchSet> {
    let lin = PhaseFn::linear(1.0);
    let mk = |name, family, n1: f64, n3: f64, lambda: f64| BranchSet {
        name,
        spec: FamilySpec::new(family, n1, n3, lambda, lin.clone(), phi_max_for(family)),
    };
    vec![
        mk("A elliptic", Family::A, 0.8f64.sinh(), 0.8f64.cosh(), 1.0),
        mk("A hyperbolic", Family::A, 0.5f64.cosh(), 0.5f64.sinh(), 1.0),
        mk("A critical", Family::A, 1.0, 1.0, 1.0),
        mk("B finite", Family::B, 0.75, 1.25, 0.2),
        mk("B exp-oscillating", Family::B, 0.75, 1.25, 1.0),
        mk("B poly (boundary)", Family::B, 0.75, 1.25, 0.5),
        mk("B hyperbolic finite", Family::B, 1.25, 0.75, 0.2),
        mk("C oscillating boost", Family::C, 0.75, 1.25, 2.5),
        mk("C runaway", Family::C, 0.75, 1.25, 1.0),
        mk("C poly boost (boundary)", Family::C, 0.75, 1.25, 2.0),
        mk("D runaway", Family::D, 0.0, 1.0, 0.7),
    ]
}

/// Step policy used by the acceptance runs; tight enough that the
/// 1e-8-scale oracle comparisons hold over the full horizons.
pub fn acceptance_opts() -> IntegrateOptions {
    IntegrateOptions {
        step_target: 0.002,
        ..Default::default()
    }
}

/// Scale-normalized max-norm distance between matrices.
pub fn rel_defect3(a: &SO21Matrix, b: &SO21Matrix) -> f64 {
    a.sub(b).max_abs() / b.max_abs().max(1.0)
}

pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    num / den
}

// ---------------------------------------------------------------------------
// Brute-force fixed-vector search
// ---------------------------------------------------------------------------

/// Residual at the unit timelike vector with transverse coordinates
/// `(y1, y2)`, i.e. `v = (y1, y2, sqrt(1 + y1^2 + y2^2))`.
fn residual_y(e_tau: &SO21Matrix, y1: f64, y2: f64) -> f64 {
    let v = HVec3::new(y1, y2, (1.0 + y1 * y1 + y2 * y2).sqrt());
    let d = e_tau.apply(v) - v;
    (d.a1 * d.a1 + d.a2 * d.a2 + d.a3 * d.a3).sqrt()
}

/// Gauss-Newton polish of `|(E - 1) v(y)|` in the transverse coordinates
/// (regular at the apex, unlike the chart azimuth). The residual is linear
/// in `v`, so the basin of attraction is wide; the radius cap keeps the
/// iteration away from the light cone, where a null fixed direction would
/// fake a match.
fn polish(e_tau: &SO21Matrix, start: (f64, f64), y_cap: f64) -> f64 {
    let a = {
        let mut m = *e_tau;
        m.set(0, 0, m.get(0, 0) - 1.0);
        m.set(1, 1, m.get(1, 1) - 1.0);
        m.set(2, 2, m.get(2, 2) - 1.0);
        m
    };
    let (mut y1, mut y2) = start;
    let mut best = residual_y(e_tau, y1, y2);
    for _ in 0..25 {
        let v3 = (1.0 + y1 * y1 + y2 * y2).sqrt();
        let r = a.apply(HVec3::new(y1, y2, v3));
        let j1 = HVec3::new(
            a.get(0, 0) + a.get(0, 2) * y1 / v3,
            a.get(1, 0) + a.get(1, 2) * y1 / v3,
            a.get(2, 0) + a.get(2, 2) * y1 / v3,
        );
        let j2 = HVec3::new(
            a.get(0, 1) + a.get(0, 2) * y2 / v3,
            a.get(1, 1) + a.get(1, 2) * y2 / v3,
            a.get(2, 1) + a.get(2, 2) * y2 / v3,
        );
        // Normal equations of the 3x2 least-squares step.
        let (g11, g12, g22) = (dot3(j1, j1), dot3(j1, j2), dot3(j2, j2));
        let det = g11 * g22 - g12 * g12;
        if det.abs() <= 1e-300 {
            break;
        }
        let (b1, b2) = (-dot3(j1, r), -dot3(j2, r));
        let d1 = (g22 * b1 - g12 * b2) / det;
        let d2 = (g11 * b2 - g12 * b1) / det;
        y1 += d1;
        y2 += d2;
        let norm = (y1 * y1 + y2 * y2).sqrt();
        if norm > y_cap {
            y1 *= y_cap / norm;
            y2 *= y_cap / norm;
        }
        let res = residual_y(e_tau, y1, y2);
        if res < best {
            best = res;
        }
        if d1.abs() + d2.abs() <= 1e-14 * (1.0 + norm) {
            break;
        }
    }
    best
}

fn dot3(a: HVec3, b: HVec3) -> f64 {
    a.a1 * b.a1 + a.a2 * b.a2 + a.a3 * b.a3
}

/// Exhaustive search for a unit timelike vector fixed by `E(tau)`: a
/// 100 x 100 chart mesh (1e4 unit vectors), then a Gauss-Newton polish
/// from the best cell of every rapidity-band/azimuth-sector stratum (so a
/// narrow basin cannot be shadowed by a broad low-residual region
/// elsewhere). Returns the smallest polished residual.
pub fn brute_force_min_residual(e_tau: &SO21Matrix) -> f64 {
    const XI_MESH: usize = 100;
    const PHI_MESH: usize = 100;
    const XI_MAX: f64 = 8.0;
    const XI_BANDS: usize = 5;
    const PHI_SECTORS: usize = 8;
    let y_cap = 12.0f64.sinh();
    let mut strata = [[(f64::INFINITY, 0.0f64, 0.0f64); PHI_SECTORS]; XI_BANDS];
    let mut global = (residual_y(e_tau, 0.0, 0.0), 0.0, 0.0);
    for i in 0..XI_MESH {
        let xi = XI_MAX * (i as f64 + 1.0) / XI_MESH as f64;
        for j in 0..PHI_MESH {
            let phi =
                -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / PHI_MESH as f64;
            let v = param_to_vec(HyperParam { xi, phi });
            let r = residual_y(e_tau, v.a1, v.a2);
            let slot = &mut strata[i * XI_BANDS / XI_MESH][j * PHI_SECTORS / PHI_MESH];
            if r < slot.0 {
                *slot = (r, v.a1, v.a2);
            }
            if r < global.0 {
                global = (r, v.a1, v.a2);
            }
        }
    }
    let mut min = global.0;
    min = min.min(polish(e_tau, (0.0, 0.0), y_cap));
    min = min.min(polish(e_tau, (global.1, global.2), y_cap));
    for band in &strata {
        for &(r0, y1, y2) in band {
            if r0.is_finite() {
                min = min.min(polish(e_tau, (y1, y2), y_cap));
            }
        }
    }
    min
}

/// Match threshold of the brute-force search.
pub const BRUTE_FORCE_THRESHOLD: f64 = 1e-6;

pub fn apex() -> HVec3 {
    HVec3::APEX
}
