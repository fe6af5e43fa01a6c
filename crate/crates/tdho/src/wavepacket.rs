//! Moment-level representation of normalizable states: first moments
//! `(xbar, pbar)`, the second-moment vector `u = <K>`, widths, and the
//! classical action ellipse.
//!
//! A state is carried only as `(xbar, pbar, u)`; that is sufficient for
//! every phase and width quantity computed here. The means propagate by
//! the quadrature flow and `u` by the 3x3 flow, so all evolution is
//! matrix application.

use crate::so21::{mdot, HVec3, QuadMatrix, SO21Matrix};
use thiserror::Error;

/// Slack allowed on the Schwarz bound and the variance positivity checks.
pub const MOMENT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WavepacketError {
    #[error("NotOnHyperboloid: e^2 = {square}, e3 = {a3}")]
    NotOnHyperboloid { square: f64, a3: f64 },
    #[error("UncertaintyViolated: u^2 = {square} < 1/4 (u3 = {u3})")]
    UncertaintyViolated { square: f64, u3: f64 },
    #[error("NegativeVariance: w = ({w1}, {w2}, {w3}) gives a negative squared width")]
    NegativeVariance { w1: f64, w2: f64, w3: f64 },
    #[error("NonpositiveAction: I = {0}")]
    NonpositiveAction(f64),
}

/// The centered second-moment vector `w = u - v(xbar, pbar)`, where `v`
/// is the lightlike vector built from the means.
fn centered_vector(xbar: f64, pbar: f64, u: HVec3) -> HVec3 {
    let v = HVec3::new(
        0.5 * (xbar * xbar - pbar * pbar),
        -xbar * pbar,
        0.5 * (xbar * xbar + pbar * pbar),
    );
    u - v
}

/// A normalizable state reduced to its first moments and second-moment
/// vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentState {
    pub xbar: f64,
    pub pbar: f64,
    pub u: HVec3,
}

impl MomentState {
    /// Validates the Schwarz bound `u^2 >= 1/4`, `u3 > 0`, and
    /// non-negative variances. The bound slack scales with the vector
    /// magnitude: `u^2` is a difference of squares, so for a grown state
    /// its f64 cancellation noise is `~eps * |u|^2`.
    pub fn new(xbar: f64, pbar: f64, u: HVec3) -> Result<Self, WavepacketError> {
        let square = mdot(u, u);
        let scale = u.norm_euclid().powi(2).max(1.0);
        if square < 0.25 - MOMENT_TOL * scale || u.a3 <= 0.0 {
            return Err(WavepacketError::UncertaintyViolated { square, u3: u.a3 });
        }
        let w = centered_vector(xbar, pbar, u);
        let wscale = w.norm_euclid().max(1.0);
        if w.a3 < w.a1.abs() - MOMENT_TOL * wscale {
            return Err(WavepacketError::NegativeVariance {
                w1: w.a1,
                w2: w.a2,
                w3: w.a3,
            });
        }
        Ok(MomentState { xbar, pbar, u })
    }

    pub fn u_square(&self) -> f64 {
        mdot(self.u, self.u)
    }
}

/// Moment data of the `n`-th eigenstate of `K . e0^g`: centered, with
/// `u = (n + 1/2) e0`.
pub fn eigenstate_moments(n_index: u32, e0: HVec3) -> Result<MomentState, WavepacketError> {
    e0.check_unit_timelike_upper(1e-9)
        .map_err(|_| WavepacketError::NotOnHyperboloid {
            square: e0.msq(),
            a3: e0.a3,
        })?;
    let k = n_index as f64 + 0.5;
    MomentState::new(0.0, 0.0, e0.scale(k))
}

/// Propagates a state across a window: means by the quadrature flow,
/// `u` by the 3x3 flow. Fails when the output violates the moment
/// invariants, which signals matrices from inconsistent sources.
pub fn evolve_state(
    s: &MomentState,
    e_mat: &SO21Matrix,
    q_mat: &QuadMatrix,
) -> Result<MomentState, WavepacketError> {
    let (x, p) = q_mat.apply(s.xbar, s.pbar);
    MomentState::new(x, p, e_mat.apply(s.u))
}

/// Widths and covariance: `dx = sqrt(w3 + w1)`, `dp = sqrt(w3 - w1)`,
/// `cov = -w2`.
pub fn variances(s: &MomentState) -> Result<(f64, f64, f64), WavepacketError> {
    let w = centered_vector(s.xbar, s.pbar, s.u);
    let dx2 = w.a3 + w.a1;
    let dp2 = w.a3 - w.a1;
    if dx2 < -MOMENT_TOL || dp2 < -MOMENT_TOL {
        return Err(WavepacketError::NegativeVariance {
            w1: w.a1,
            w2: w.a2,
            w3: w.a3,
        });
    }
    Ok((dx2.max(0.0).sqrt(), dp2.max(0.0).sqrt(), -w.a2))
}

/// Coefficients of the invariant ellipse
/// `(e3 + e1) p^2 + 2 e2 q p + (e3 - e1) q^2 = 2 I` traced by the
/// classical motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseCoeffs {
    pub a_pp: f64,
    pub a_qp: f64,
    pub a_qq: f64,
    pub i_action: f64,
}

impl EllipseCoeffs {
    /// Discriminant of the quadratic form; equals 1 on the unit
    /// hyperboloid (an ellipse, never a hyperbola).
    pub fn discriminant(&self) -> f64 {
        self.a_pp * self.a_qq - 0.25 * self.a_qp * self.a_qp
    }
}

/// Builds the action ellipse of a unit timelike direction.
pub fn classical_ellipse(e: HVec3, i_action: f64) -> Result<EllipseCoeffs, WavepacketError> {
    e.check_unit_timelike_upper(1e-9)
        .map_err(|_| WavepacketError::NotOnHyperboloid {
            square: e.msq(),
            a3: e.a3,
        })?;
    if i_action.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(WavepacketError::NonpositiveAction(i_action));
    }
    Ok(EllipseCoeffs {
        a_pp: e.a3 + e.a1,
        a_qp: 2.0 * e.a2,
        a_qq: e.a3 - e.a1,
        i_action,
    })
}

/// Samples the ellipse at the given angle variables:
/// `q = sqrt(2 I (e3 + e1)) cos theta`,
/// `p = -sqrt(2 I / (e3 + e1)) (e2 cos theta + sin theta)`.
pub fn sample_orbit(coeffs: &EllipseCoeffs, theta_grid: &[f64]) -> Vec<(f64, f64)> {
    let i2 = 2.0 * coeffs.i_action;
    let e1 = 0.5 * (coeffs.a_pp - coeffs.a_qq);
    let e2 = 0.5 * coeffs.a_qp;
    let e3 = 0.5 * (coeffs.a_pp + coeffs.a_qq);
    let plus = e3 + e1;
    theta_grid
        .iter()
        .map(|&th| {
            let q = (i2 * plus).sqrt() * th.cos();
            let p = -(i2 / plus).sqrt() * (e2 * th.cos() + th.sin());
            (q, p)
        })
        .collect()
}

/// Signed shoelace area of a closed polygon (last point joins the first).
pub fn shoelace_area(points: &[(f64, f64)]) -> f64 {
    let n = points.len();
    let mut acc = 0.0;
    for i in 0..n {
        let (x0, y0) = points[i];
        let (x1, y1) = points[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    0.5 * acc
}

/// Hannay angle of a closed loop of unit timelike vectors, recomputed
/// from the projected loop alone: the enclosed-surface form reduces on
/// the hyperboloid to `-(1/2) * closed-integral (e3 - 1) d(azimuth)` with
/// `e3 = sqrt(1 + e1^2 + e2^2)`, evaluated here with the trapezoid rule.
pub fn hannay_from_loop(points: &[HVec3]) -> f64 {
    let mut acc = 0.0;
    let mut prev_theta: Option<f64> = None;
    let mut prev_height = 0.0;
    let two_pi = 2.0 * std::f64::consts::PI;
    let n = points.len();
    for k in 0..=n {
        let p = points[k % n];
        let height = (1.0 + p.a1 * p.a1 + p.a2 * p.a2).sqrt() - 1.0;
        let raw = p.a2.atan2(p.a1);
        let theta = match prev_theta {
            None => raw,
            Some(prev) => raw + two_pi * ((prev - raw) / two_pi).round(),
        };
        if let Some(prev) = prev_theta {
            acc += 0.5 * (height + prev_height) * (theta - prev);
        }
        prev_theta = Some(theta);
        prev_height = height;
    }
    -0.5 * acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so21::{param_to_vec, HyperParam};
    use std::f64::consts::PI;

    #[test]
    fn ground_state_at_apex() {
        let s = eigenstate_moments(0, HVec3::APEX).unwrap();
        assert_eq!(s.u, HVec3::new(0.0, 0.0, 0.5));
        let (dx, dp, cov) = variances(&s).unwrap();
        assert!((dx - 0.5f64.sqrt()).abs() <= 1e-15);
        assert!((dp - 0.5f64.sqrt()).abs() <= 1e-15);
        assert_eq!(cov, 0.0);
    }

    #[test]
    fn excited_state_scaling() {
        let e0 = HVec3::new(1.0f64.sinh(), 0.0, 1.0f64.cosh());
        let s = eigenstate_moments(2, e0).unwrap();
        assert!((s.u - e0.scale(2.5)).max_abs() <= 1e-15);
        assert!((s.u_square() - 6.25).abs() <= 1e-12);
        assert_eq!((s.xbar, s.pbar), (0.0, 0.0));
    }

    #[test]
    fn displaced_state_widths() {
        // The lightlike mean vector drops out of the widths.
        let s = MomentState::new(1.0, 0.0, HVec3::new(0.5, 0.0, 1.0)).unwrap();
        assert!((s.u_square() - 0.75).abs() <= 1e-15);
        let (dx, dp, cov) = variances(&s).unwrap();
        assert!((dx - 0.5f64.sqrt()).abs() <= 1e-15);
        assert!((dp - 0.5f64.sqrt()).abs() <= 1e-15);
        assert_eq!(cov, 0.0);
    }

    #[test]
    fn squeezed_state_widths() {
        let s = MomentState::new(
            0.0,
            0.0,
            HVec3::new(0.5 * 1.0f64.sinh(), 0.0, 0.5 * 1.0f64.cosh()),
        )
        .unwrap();
        let (dx, dp, _) = variances(&s).unwrap();
        assert!((dx * dx - 0.5 * 1.0f64.exp()).abs() <= 1e-12);
        assert!((dp * dp - 0.5 * (-1.0f64).exp()).abs() <= 1e-12);
    }

    #[test]
    fn schwarz_bound_is_enforced() {
        assert!(matches!(
            MomentState::new(0.0, 0.0, HVec3::new(0.0, 0.0, 0.4)),
            Err(WavepacketError::UncertaintyViolated { .. })
        ));
        // Means cannot fake second moments: u below the lightlike mean
        // vector trips the variance check.
        assert!(matches!(
            MomentState::new(3.0, 0.0, HVec3::new(-4.0, 0.0, 4.05)),
            Err(WavepacketError::NegativeVariance { .. })
        ));
    }

    #[test]
    fn evolve_by_identity_is_identity() {
        let s = eigenstate_moments(1, HVec3::APEX).unwrap();
        let out = evolve_state(&s, &SO21Matrix::IDENTITY, &QuadMatrix::IDENTITY).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn axis_flow_rotates_means_at_half_the_moment_rate() {
        // Constant axis direction: u3 stays put, (u1, u2) turns by 2 phi
        // while the means turn by phi.
        use crate::so21::{adjoint_rep, quad_rep};
        let phi = 0.83f64;
        let e_mat = adjoint_rep(2.0 * phi, HVec3::APEX, 1e-9).unwrap();
        let q_mat = quad_rep(2.0 * phi, HVec3::APEX, 1e-9).unwrap();
        let s = MomentState::new(0.7, -0.1, HVec3::new(0.2, 0.1, 0.8)).unwrap();
        let out = evolve_state(&s, &e_mat, &q_mat).unwrap();
        assert!((out.u.a3 - s.u.a3).abs() <= 1e-15);
        let (c2, s2) = ((2.0 * phi).cos(), (2.0 * phi).sin());
        assert!((out.u.a1 - (c2 * s.u.a1 - s2 * s.u.a2)).abs() <= 1e-15);
        assert!((out.u.a2 - (s2 * s.u.a1 + c2 * s.u.a2)).abs() <= 1e-15);
        let (c1, s1) = (phi.cos(), phi.sin());
        assert!((out.xbar - (c1 * s.xbar + s1 * s.pbar)).abs() <= 1e-15);
        assert!((out.pbar - (-s1 * s.xbar + c1 * s.pbar)).abs() <= 1e-15);
    }

    #[test]
    fn apex_circle_and_boosted_ellipse_area() {
        let c = classical_ellipse(HVec3::APEX, 1.0).unwrap();
        assert_eq!((c.a_pp, c.a_qp, c.a_qq), (1.0, 0.0, 1.0));
        assert!((c.discriminant() - 1.0).abs() <= 1e-15);
        let thetas: Vec<f64> = (0..20000).map(|k| 2.0 * PI * k as f64 / 20000.0).collect();
        let pts = sample_orbit(&c, &thetas);
        // Circle q^2 + p^2 = 2, area 2 pi.
        for &(q, p) in &pts[..100] {
            assert!((q * q + p * p - 2.0).abs() <= 1e-12);
        }
        assert!((shoelace_area(&pts).abs() - 2.0 * PI).abs() <= 1e-5);

        let boosted = param_to_vec(HyperParam { xi: 1.0, phi: 0.0 });
        let c2 = classical_ellipse(boosted, 1.0).unwrap();
        let pts2 = sample_orbit(&c2, &thetas);
        assert!((shoelace_area(&pts2).abs() - 2.0 * PI).abs() / (2.0 * PI) <= 1e-6);
        // Tilted ellipse samples still satisfy the quadratic form.
        let tilted = param_to_vec(HyperParam { xi: 0.8, phi: 1.1 });
        let c3 = classical_ellipse(tilted, 0.7).unwrap();
        for &(q, p) in sample_orbit(&c3, &thetas[..64]).iter() {
            let lhs = c3.a_pp * p * p + c3.a_qp * q * p + c3.a_qq * q * q;
            assert!((lhs - 2.0 * c3.i_action).abs() <= 1e-12);
        }
    }

    #[test]
    fn ellipse_rejects_bad_inputs() {
        assert!(matches!(
            classical_ellipse(HVec3::new(1.0, 0.0, 1.0), 1.0),
            Err(WavepacketError::NotOnHyperboloid { .. })
        ));
        assert!(matches!(
            classical_ellipse(HVec3::APEX, 0.0),
            Err(WavepacketError::NonpositiveAction(_))
        ));
    }

    #[test]
    fn loop_integral_matches_closed_form_on_circles() {
        // One anticlockwise sweep at constant rapidity encloses a cap of
        // the hyperboloid: the angle is -pi (cosh xi - 1); the traversal
        // direction carries the sign.
        let xi = 1.0f64;
        let n = 4000;
        let loop_pts: Vec<HVec3> = (0..n)
            .map(|k| {
                param_to_vec(HyperParam {
                    xi,
                    phi: 2.0 * PI * k as f64 / n as f64,
                })
            })
            .collect();
        let got = hannay_from_loop(&loop_pts);
        let expect = -PI * (xi.cosh() - 1.0);
        assert!((got - expect).abs() <= 1e-6, "got {got}, expected {expect}");
        // Reversed traversal flips the sign.
        let rev: Vec<HVec3> = loop_pts.iter().rev().cloned().collect();
        assert!((hannay_from_loop(&rev) + got).abs() <= 1e-9);
    }
}
