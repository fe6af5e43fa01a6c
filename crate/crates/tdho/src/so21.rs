//! Minkowski-metric vector algebra and the finite representations of the
//! one-parameter unitary flows generated by the SO(2,1) algebra.
//!
//! Conventions: metric `g = diag(-1, -1, 1)`, pairing
//! `(a, b) = a3*b3 - a1*b1 - a2*b2`, and `a^g = (-a1, -a2, a3)`.
//! All quantities are dimensionless (hbar = 1).
//!
//! Orientation of the representations: both [`adjoint_rep`] and
//! [`quad_rep`] return the *forward propagation* matrix of the unitary
//! `Q(xi, b) = exp(-(i/2) xi K.b^g)`, i.e. the matrix that maps mean
//! values before the flow to mean values after it. This is the same
//! orientation as the evolution matrices `E(t)` and `E_q(t)` assembled by
//! the integrator, so `trace_map(quad_rep(xi, b)) == adjoint_rep(xi, b)`
//! and `quad_rep(2*pi*(2N+1), (0,0,1)) == -I` (the parity flip of the
//! quadratures over an odd half-revolution).

use thiserror::Error;

/// Default tolerance for constructor invariants and representation
/// cross-checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Below this rapidity the azimuth of a hyperboloid point is numerically
/// meaningless and is reported as undefined.
pub const PHI_UNDEFINED_XI: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum So21Error {
    #[error("NotOnHyperboloid: square = {square}, a3 = {a3} (need square = 1, a3 > 0)")]
    NotOnHyperboloid { square: f64, a3: f64 },
    #[error("UnnormalizedGenerator: b^2 = {square} is not 1, -1 or 0 within {tol}")]
    UnnormalizedGenerator { square: f64, tol: f64 },
}

/// Reduce an angle mod 2*pi into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

// ---------------------------------------------------------------------------
// Vectors
// ---------------------------------------------------------------------------

/// A 3-vector on/inside the SO(2,1) cone. Houses the invariant vector
/// `e(t)`, moment vectors `u`, `v`, `w`, fixed vectors `eta` and flow
/// generators `b`. No constraint is imposed at construction; see
/// [`HVec3::check_unit_timelike_upper`] for the unit-hyperboloid check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HVec3 {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl HVec3 {
    pub const ZERO: HVec3 = HVec3 {
        a1: 0.0,
        a2: 0.0,
        a3: 0.0,
    };
    /// Apex of the upper hyperboloid.
    pub const APEX: HVec3 = HVec3 {
        a1: 0.0,
        a2: 0.0,
        a3: 1.0,
    };

    pub fn new(a1: f64, a2: f64, a3: f64) -> Self {
        HVec3 { a1, a2, a3 }
    }

    /// The metric flip `a^g = (-a1, -a2, a3)`.
    pub fn gflip(self) -> Self {
        HVec3::new(-self.a1, -self.a2, self.a3)
    }

    /// Minkowski square `(a, a) = a3^2 - a1^2 - a2^2`.
    pub fn msq(self) -> f64 {
        mdot(self, self)
    }

    /// Euclidean norm, used only for numerical scaling decisions.
    pub fn norm_euclid(self) -> f64 {
        (self.a1 * self.a1 + self.a2 * self.a2 + self.a3 * self.a3).sqrt()
    }

    pub fn scale(self, c: f64) -> Self {
        HVec3::new(c * self.a1, c * self.a2, c * self.a3)
    }

    pub fn max_abs(self) -> f64 {
        self.a1.abs().max(self.a2.abs()).max(self.a3.abs())
    }

    /// Errors unless `|a^2 - 1| <= tol` and `a3 > 0`.
    pub fn check_unit_timelike_upper(self, tol: f64) -> Result<(), So21Error> {
        let square = self.msq();
        if (square - 1.0).abs() > tol || self.a3 <= 0.0 {
            return Err(So21Error::NotOnHyperboloid {
                square,
                a3: self.a3,
            });
        }
        Ok(())
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.a1, self.a2, self.a3]
    }
}

impl std::ops::Add for HVec3 {
    type Output = HVec3;
    fn add(self, o: HVec3) -> HVec3 {
        HVec3::new(self.a1 + o.a1, self.a2 + o.a2, self.a3 + o.a3)
    }
}

impl std::ops::Sub for HVec3 {
    type Output = HVec3;
    fn sub(self, o: HVec3) -> HVec3 {
        HVec3::new(self.a1 - o.a1, self.a2 - o.a2, self.a3 - o.a3)
    }
}

impl std::ops::Mul<f64> for HVec3 {
    type Output = HVec3;
    fn mul(self, c: f64) -> HVec3 {
        self.scale(c)
    }
}

impl std::ops::Neg for HVec3 {
    type Output = HVec3;
    fn neg(self) -> HVec3 {
        self.scale(-1.0)
    }
}

/// Minkowski pairing `(a, b) = a3 b3 - a1 b1 - a2 b2`.
pub fn mdot(a: HVec3, b: HVec3) -> f64 {
    a.a3 * b.a3 - a.a1 * b.a1 - a.a2 * b.a2
}

// ---------------------------------------------------------------------------
// Hyperboloid chart
// ---------------------------------------------------------------------------

/// Chart `(xi, phi)` of the unit upper hyperboloid:
/// `vec = (sinh xi cos phi, sinh xi sin phi, cosh xi)`.
/// `xi >= 0` by convention (a negative rapidity is absorbed into `phi`);
/// `phi` is kept continuous/unwrapped, reduction is the caller's business.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParam {
    pub xi: f64,
    pub phi: f64,
}

impl HyperParam {
    pub fn new(xi: f64, phi: f64) -> Self {
        if xi < 0.0 {
            HyperParam {
                xi: -xi,
                phi: phi + std::f64::consts::PI,
            }
        } else {
            HyperParam { xi, phi }
        }
    }
}

/// Result of [`vec_to_param`]. `phi_defined` is false at the apex, where the
/// azimuth is indeterminate and reported as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamFromVec {
    pub param: HyperParam,
    pub phi_defined: bool,
}

pub fn param_to_vec(p: HyperParam) -> HVec3 {
    let p = HyperParam::new(p.xi, p.phi);
    HVec3::new(
        p.xi.sinh() * p.phi.cos(),
        p.xi.sinh() * p.phi.sin(),
        p.xi.cosh(),
    )
}

/// Inverts [`param_to_vec`] on unit timelike upper vectors; `phi` is
/// returned in `(-pi, pi]`.
pub fn vec_to_param(v: HVec3, tol: f64) -> Result<ParamFromVec, So21Error> {
    v.check_unit_timelike_upper(tol)?;
    let r = (v.a1 * v.a1 + v.a2 * v.a2).sqrt();
    // asinh is better conditioned than acosh(v3) near the apex.
    let xi = r.asinh();
    if xi < PHI_UNDEFINED_XI {
        return Ok(ParamFromVec {
            param: HyperParam { xi, phi: 0.0 },
            phi_defined: false,
        });
    }
    let mut phi = v.a2.atan2(v.a1);
    if phi <= -std::f64::consts::PI {
        phi += 2.0 * std::f64::consts::PI;
    }
    Ok(ParamFromVec {
        param: HyperParam { xi, phi },
        phi_defined: true,
    })
}

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

/// A real 3x3 matrix, row-major. The group invariants `E^t g E = g`,
/// `det E = 1` are checked, not enforced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SO21Matrix(pub [f64; 9]);

impl SO21Matrix {
    pub const IDENTITY: SO21Matrix = SO21Matrix([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[3 * i + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.0[3 * i + j] = v;
    }

    pub fn from_columns(c1: HVec3, c2: HVec3, c3: HVec3) -> Self {
        SO21Matrix([
            c1.a1, c2.a1, c3.a1, c1.a2, c2.a2, c3.a2, c1.a3, c2.a3, c3.a3,
        ])
    }

    pub fn column(&self, j: usize) -> HVec3 {
        HVec3::new(self.get(0, j), self.get(1, j), self.get(2, j))
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        SO21Matrix([m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]])
    }

    pub fn matmul(&self, o: &SO21Matrix) -> SO21Matrix {
        let mut r = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += self.get(i, k) * o.get(k, j);
                }
                r[3 * i + j] = s;
            }
        }
        SO21Matrix(r)
    }

    pub fn apply(&self, v: HVec3) -> HVec3 {
        HVec3::new(
            self.get(0, 0) * v.a1 + self.get(0, 1) * v.a2 + self.get(0, 2) * v.a3,
            self.get(1, 0) * v.a1 + self.get(1, 1) * v.a2 + self.get(1, 2) * v.a3,
            self.get(2, 0) * v.a1 + self.get(2, 1) * v.a2 + self.get(2, 2) * v.a3,
        )
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6])
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[4] + self.0[8]
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn sub(&self, o: &SO21Matrix) -> SO21Matrix {
        let mut r = [0.0; 9];
        for (dst, (a, b)) in r.iter_mut().zip(self.0.iter().zip(&o.0)) {
            *dst = a - b;
        }
        SO21Matrix(r)
    }

    /// `max |(E^t g E - g)_{ij}|`; zero for exact group elements.
    pub fn metric_defect(&self) -> f64 {
        const G: [f64; 3] = [-1.0, -1.0, 1.0];
        let mut worst = 0.0f64;
        for (i, &gi) in G.iter().enumerate() {
            for j in 0..3 {
                let mut s = 0.0;
                for (k, &gk) in G.iter().enumerate() {
                    s += self.get(k, i) * gk * self.get(k, j);
                }
                let target = if i == j { gi } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    pub fn is_in_group(&self, tol: f64) -> bool {
        self.metric_defect() <= tol && (self.det() - 1.0).abs() <= tol
    }
}

impl std::ops::Mul for SO21Matrix {
    type Output = SO21Matrix;
    fn mul(self, o: SO21Matrix) -> SO21Matrix {
        self.matmul(&o)
    }
}

/// A real 2x2 matrix, row-major, acting on the column `(xbar, pbar)^t`.
/// The area-preservation invariant `det = 1` is checked, not enforced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadMatrix(pub [f64; 4]);

impl QuadMatrix {
    pub const IDENTITY: QuadMatrix = QuadMatrix([1.0, 0.0, 0.0, 1.0]);

    pub fn matmul(&self, o: &QuadMatrix) -> QuadMatrix {
        let a = &self.0;
        let b = &o.0;
        QuadMatrix([
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ])
    }

    pub fn apply(&self, x: f64, p: f64) -> (f64, f64) {
        (self.0[0] * x + self.0[1] * p, self.0[2] * x + self.0[3] * p)
    }

    pub fn det(&self) -> f64 {
        self.0[0] * self.0[3] - self.0[1] * self.0[2]
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn sub(&self, o: &QuadMatrix) -> QuadMatrix {
        QuadMatrix([
            self.0[0] - o.0[0],
            self.0[1] - o.0[1],
            self.0[2] - o.0[2],
            self.0[3] - o.0[3],
        ])
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Inverse assuming `det = 1`.
    pub fn inverse_unit_det(&self) -> QuadMatrix {
        QuadMatrix([self.0[3], -self.0[1], -self.0[2], self.0[0]])
    }
}

impl std::ops::Mul for QuadMatrix {
    type Output = QuadMatrix;
    fn mul(self, o: QuadMatrix) -> QuadMatrix {
        self.matmul(&o)
    }
}

// ---------------------------------------------------------------------------
// Flow representations
// ---------------------------------------------------------------------------

/// Class of a flow generator by the sign of its Minkowski square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorClass {
    /// `b^2 = 1`: trigonometric flow.
    Timelike,
    /// `b^2 = -1`: hyperbolic flow.
    Spacelike,
    /// `b^2 = 0`: polynomial flow.
    Lightlike,
}

pub fn classify_generator(b: HVec3, tol: f64) -> Result<GeneratorClass, So21Error> {
    let square = b.msq();
    if (square - 1.0).abs() <= tol {
        Ok(GeneratorClass::Timelike)
    } else if (square + 1.0).abs() <= tol {
        Ok(GeneratorClass::Spacelike)
    } else if square.abs() <= tol {
        Ok(GeneratorClass::Lightlike)
    } else {
        Err(So21Error::UnnormalizedGenerator { square, tol })
    }
}

/// Rank-one piece `P_{ij} = b_i (g b)_j` of the flow generator.
fn outer_gflip(b: HVec3) -> SO21Matrix {
    let gb = b.gflip();
    let mut m = [0.0; 9];
    let bv = b.as_array();
    let gv = gb.as_array();
    for i in 0..3 {
        for j in 0..3 {
            m[3 * i + j] = bv[i] * gv[j];
        }
    }
    SO21Matrix(m)
}

/// Cross-product piece `X a = b^g x a^g`.
fn cross_gflip(b: HVec3) -> SO21Matrix {
    SO21Matrix([
        0.0, b.a3, -b.a2, //
        -b.a3, 0.0, b.a1, //
        -b.a2, b.a1, 0.0,
    ])
}

/// `m = diag * I + w_p * P - w_x * X` componentwise.
fn fill_flow(m: &mut [f64; 9], p: &SO21Matrix, x: &SO21Matrix, diag: f64, w_p: f64, w_x: f64) {
    for (dst, (pk, xk)) in m.iter_mut().zip(p.0.iter().zip(&x.0)) {
        *dst = w_p * pk - w_x * xk;
    }
    m[0] += diag;
    m[4] += diag;
    m[8] += diag;
}

/// Forward 3x3 flow of `Q(xi, b)`: the matrix propagating mean-value
/// vectors (and the invariant vector `e`) across the flow. Branches on the
/// generator class: trigonometric, hyperbolic or polynomial.
pub fn adjoint_rep(xi: f64, b: HVec3, tol: f64) -> Result<SO21Matrix, So21Error> {
    let class = classify_generator(b, tol)?;
    let p = outer_gflip(b);
    let x = cross_gflip(b);
    let mut m = [0.0; 9];
    match class {
        GeneratorClass::Timelike => {
            let (c, s) = (xi.cos(), xi.sin());
            fill_flow(&mut m, &p, &x, c, 1.0 - c, s);
        }
        GeneratorClass::Spacelike => {
            let (ch, sh) = (xi.cosh(), xi.sinh());
            fill_flow(&mut m, &p, &x, ch, ch - 1.0, sh);
        }
        GeneratorClass::Lightlike => {
            fill_flow(&mut m, &p, &x, 1.0, 0.5 * xi * xi, xi);
        }
    }
    Ok(SO21Matrix(m))
}

/// Forward 2x2 quadrature flow of `Q(xi, b)`: the matrix propagating the
/// means `(xbar, pbar)`. Unit determinant; the double-cover branch is
/// pinned by `quad_rep(2*pi, (0,0,1)) = -I`.
pub fn quad_rep(xi: f64, b: HVec3, tol: f64) -> Result<QuadMatrix, So21Error> {
    let class = classify_generator(b, tol)?;
    let h = 0.5 * xi;
    let (c, s) = match class {
        GeneratorClass::Timelike => (h.cos(), h.sin()),
        GeneratorClass::Spacelike => (h.cosh(), h.sinh()),
        GeneratorClass::Lightlike => (1.0, h),
    };
    Ok(QuadMatrix([
        c + b.a2 * s,
        (b.a1 + b.a3) * s,
        (b.a1 - b.a3) * s,
        c - b.a2 * s,
    ]))
}

/// Trace map from the quadrature flow to the vector flow:
/// `E_{ij} = (1/2) tr(E_q^t J_i E_q J_j)` with `J = (sigma_z, -sigma_x, 1)`.
pub fn trace_map(eq: &QuadMatrix) -> SO21Matrix {
    const J: [[f64; 4]; 3] = [
        [1.0, 0.0, 0.0, -1.0],
        [0.0, -1.0, -1.0, 0.0],
        [1.0, 0.0, 0.0, 1.0],
    ];
    let mut e = [0.0; 9];
    for (i, ji) in J.iter().enumerate() {
        // T = Eq^t (J_i Eq); symmetric.
        let jq = QuadMatrix(*ji).matmul(eq);
        let a = &eq.0;
        let t11 = a[0] * jq.0[0] + a[2] * jq.0[2];
        let t12 = a[0] * jq.0[1] + a[2] * jq.0[3];
        let t22 = a[1] * jq.0[1] + a[3] * jq.0[3];
        e[3 * i] = 0.5 * (t11 - t22);
        e[3 * i + 1] = -t12;
        e[3 * i + 2] = 0.5 * (t11 + t22);
    }
    SO21Matrix(e)
}
