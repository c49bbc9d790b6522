//! Parallel propagators along the Killing torus and the transport unitaries
//! `V^theta_r`.
//!
//! The psi-circle generator is constant along its curve, so that propagator
//! is a closed-form exponential; the phi-circle propagator is path-ordered
//! and integrated by RK4 with step halving until the unitarity defect meets
//! tolerance.  Both have jet variants carrying sensitivities to the base
//! point, which make transported fields derivative-exact.

use crate::errors::NcehError;
use crate::fields::SpinorField;
use crate::geometry::{aux_scalars, ManifoldParams, Point};
use crate::jet::CJet1;
use crate::linalg::{c, matmul4, matvec4, unitarity_defect, zero4, C4, M4, ZC};
use crate::modealg::Mode;
use crate::Result;
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::Mutex;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TorusDirection {
    Phi,
    Psi,
}

#[derive(Clone, Debug)]
pub struct PropagatorMatrix {
    pub u: M4,
    pub direction: TorusDirection,
    pub start: Point,
    pub dt: f64,
}

/// Transport generator `A(c(t))` for the Killing circles.
pub fn a_matrix(params: ManifoldParams, pt: &Point, dir: TorusDirection) -> Result<M4> {
    let aux = aux_scalars(params, pt.r, pt.theta);
    if aux.delta <= 0.0 {
        return Err(NcehError::DegenerateMetric { r: pt.r, a: params.a, what: "transport generator" });
    }
    let mut m = zero4();
    match dir {
        TorusDirection::Phi => {
            let sq = aux.delta.sqrt();
            let (st, ct) = pt.theta.sin_cos();
            let e = Complex64::from_polar(1.0, pt.phi);
            let half_i = c(0.0, 0.5);
            m[0][0] = half_i;
            m[1][1] = -half_i;
            m[2][2] = -half_i * (1.0 + aux.delta_plus * ct);
            m[2][3] = c(-0.5 * sq * st, 0.0) * e;
            m[3][2] = c(0.5 * sq * st, 0.0) * e.conj();
            m[3][3] = half_i * (1.0 + aux.delta_plus * ct);
        }
        TorusDirection::Psi => {
            let beta = params.a.powi(4) / pt.r.powi(4);
            let half_i = c(0.0, 0.5);
            m[0][0] = -half_i;
            m[1][1] = half_i;
            m[2][2] = -half_i * beta;
            m[3][3] = half_i * beta;
        }
    }
    Ok(m)
}

/// Closed-form propagator along the psi circle: `exp(dt A_psi)`.
pub fn transport_psi(params: ManifoldParams, pt: &Point, dt: f64) -> Result<PropagatorMatrix> {
    let aux = aux_scalars(params, pt.r, pt.theta);
    if aux.delta <= 0.0 {
        return Err(NcehError::DegenerateMetric { r: pt.r, a: params.a, what: "psi transport" });
    }
    let beta = params.a.powi(4) / pt.r.powi(4);
    let mut u = zero4();
    u[0][0] = Complex64::from_polar(1.0, -0.5 * dt);
    u[1][1] = Complex64::from_polar(1.0, 0.5 * dt);
    u[2][2] = Complex64::from_polar(1.0, -0.5 * dt * beta);
    u[3][3] = Complex64::from_polar(1.0, 0.5 * dt * beta);
    Ok(PropagatorMatrix { u, direction: TorusDirection::Psi, start: *pt, dt })
}

fn rk4_step<T, F>(u: &mut [[T; 4]; 4], t: f64, h: f64, a_of: &F)
where
    T: Copy,
    F: Fn(f64) -> [[T; 4]; 4],
    [[T; 4]; 4]: MatOps<T>,
{
    let k1 = a_of(t).mul(u);
    let k2 = a_of(t + 0.5 * h).mul(&u.add_scaled(&k1, 0.5 * h));
    let k3 = a_of(t + 0.5 * h).mul(&u.add_scaled(&k2, 0.5 * h));
    let k4 = a_of(t + h).mul(&u.add_scaled(&k3, h));
    let mut s = k1;
    s = s.add_scaled(&k2, 2.0);
    s = s.add_scaled(&k3, 2.0);
    s = s.add_scaled(&k4, 1.0);
    *u = u.add_scaled(&s, h / 6.0);
}

/// One RK4 step on the plain complex matrices; exposed for oracle tables.
pub fn rk4_step_pub<F: Fn(f64) -> M4>(u: &mut M4, t: f64, h: f64, a_of: &F) {
    rk4_step(u, t, h, a_of);
}

/// Minimal matrix-ring operations shared by plain and jet scalars.
pub trait MatOps<T> {
    fn mul(&self, other: &[[T; 4]; 4]) -> [[T; 4]; 4];
    fn add_scaled(&self, other: &[[T; 4]; 4], s: f64) -> [[T; 4]; 4];
}

impl MatOps<Complex64> for M4 {
    fn mul(&self, other: &M4) -> M4 {
        matmul4(self, other)
    }
    fn add_scaled(&self, other: &M4, s: f64) -> M4 {
        let mut r = *self;
        for i in 0..4 {
            for j in 0..4 {
                r[i][j] += other[i][j] * s;
            }
        }
        r
    }
}

impl MatOps<CJet1> for [[CJet1; 4]; 4] {
    fn mul(&self, other: &[[CJet1; 4]; 4]) -> [[CJet1; 4]; 4] {
        let mut r = [[CJet1::zero(); 4]; 4];
        for i in 0..4 {
            for k in 0..4 {
                for j in 0..4 {
                    r[i][j] = r[i][j] + (self[i][k] * other[k][j]);
                }
            }
        }
        r
    }
    fn add_scaled(&self, other: &[[CJet1; 4]; 4], s: f64) -> [[CJet1; 4]; 4] {
        let mut r = *self;
        let sc = c(s, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                r[i][j] = r[i][j] + other[i][j].scale(sc);
            }
        }
        r
    }
}

const DEFAULT_TOL_ODE: f64 = 1e-8;
const INITIAL_STEP: f64 = TAU / 256.0;

/// Path-ordered propagator along the phi circle starting at `pt`.
pub fn transport_phi(params: ManifoldParams, pt: &Point, dt: f64) -> Result<PropagatorMatrix> {
    transport_phi_tol(params, pt, dt, DEFAULT_TOL_ODE)
}

pub fn transport_phi_tol(
    params: ManifoldParams,
    pt: &Point,
    dt: f64,
    tol: f64,
) -> Result<PropagatorMatrix> {
    if pt.theta <= 0.0 || pt.theta >= std::f64::consts::PI {
        return Err(NcehError::PoleSingularity { theta: pt.theta, chart: "phi transport" });
    }
    let a_of = |t: f64| -> M4 {
        let q = pt.shifted(t, 0.0);
        a_matrix(params, &q, TorusDirection::Phi).expect("interior point")
    };
    let mut n = ((dt.abs() / INITIAL_STEP).ceil() as usize).max(8);
    let mut best = f64::INFINITY;
    for _ in 0..8 {
        let mut u = crate::linalg::eye4();
        let h = dt / n as f64;
        for k in 0..n {
            rk4_step(&mut u, k as f64 * h, h, &a_of);
        }
        let defect = unitarity_defect(&u);
        if defect <= tol {
            return Ok(PropagatorMatrix { u, direction: TorusDirection::Phi, start: *pt, dt });
        }
        best = best.min(defect);
        n *= 2;
    }
    Err(NcehError::OdeStepFailure { target: tol, best })
}

/// Jet variant of `transport_phi`: entries carry sensitivities to the start
/// point coordinates.
fn transport_phi_jet(params: ManifoldParams, pt: &Point, dt: f64) -> [[CJet1; 4]; 4] {
    let a_of = |t: f64| -> [[CJet1; 4]; 4] {
        let aux_r = crate::jet::Jet2::var(pt.r, 0);
        let th = crate::jet::Jet2::var(pt.theta, 1);
        let ph = crate::jet::Jet2::var(pt.phi + t, 2);
        let a4 = crate::jet::Jet2::c(params.a.powi(4));
        let one = crate::jet::Jet2::c(1.0);
        let r4 = aux_r * aux_r * aux_r * aux_r;
        let delta = one - a4 / r4;
        let dplus = one + a4 / r4;
        let sq = delta.sqrt();
        let st = th.sin();
        let ct = th.cos();
        let j = |x: crate::jet::Jet2| CJet1::from_jet(x);
        let i_half = c(0.0, 0.5);
        let mut m = [[CJet1::zero(); 4]; 4];
        m[0][0] = CJet1::c(i_half);
        m[1][1] = CJet1::c(-i_half);
        let diag = j(one + dplus * ct);
        m[2][2] = diag.scale(-i_half);
        m[3][3] = diag.scale(i_half);
        // e^{+i phi} as a complex jet
        let e_re = ph.cos();
        let e_im = ph.sin();
        let e = CJet1 {
            v: c(e_re.v, e_im.v),
            d: [
                c(e_re.g[0], e_im.g[0]),
                c(e_re.g[1], e_im.g[1]),
                c(e_re.g[2], e_im.g[2]),
                c(e_re.g[3], e_im.g[3]),
            ],
        };
        let ebar = CJet1 {
            v: e.v.conj(),
            d: [e.d[0].conj(), e.d[1].conj(), e.d[2].conj(), e.d[3].conj()],
        };
        let amp = j(sq * st).scale(c(0.5, 0.0));
        m[2][3] = (amp * e).scale(c(-1.0, 0.0));
        m[3][2] = amp * ebar;
        m
    };
    let n = ((dt.abs() / INITIAL_STEP).ceil() as usize).max(8) * 2;
    let mut u = [[CJet1::zero(); 4]; 4];
    for (k, row) in u.iter_mut().enumerate() {
        row[k] = CJet1::c(c(1.0, 0.0));
    }
    let h = dt / n as f64;
    for k in 0..n {
        rk4_step(&mut u, k as f64 * h, h, &a_of);
    }
    u
}

fn transport_psi_jet(params: ManifoldParams, pt: &Point, dt: f64) -> [[CJet1; 4]; 4] {
    let mut u = [[CJet1::zero(); 4]; 4];
    let beta = params.a.powi(4) / pt.r.powi(4);
    let dbeta = -4.0 * params.a.powi(4) / pt.r.powi(5);
    let phase = |sign: f64, b: f64| Complex64::from_polar(1.0, sign * 0.5 * dt * b);
    u[0][0] = CJet1::c(phase(-1.0, 1.0));
    u[1][1] = CJet1::c(phase(1.0, 1.0));
    for (k, sign) in [(2usize, -1.0), (3usize, 1.0)] {
        let v = phase(sign, beta);
        let mut d = [ZC; 4];
        d[0] = v * c(0.0, sign * 0.5 * dt * dbeta);
        u[k][k] = CJet1 { v, d };
    }
    u
}

/// The transported field `V^theta_r psi`.
///
/// Pointwise action: pull back along the torus by `(+2 pi theta r4,
/// -2 pi theta r3)` and transport back through the psi then phi circles, a
/// convention fixed by requiring `V_r M_{h_s} = sigma(r, s) M_{h_s} V_r`.
pub struct TransportedField<'a> {
    pub params: ManifoldParams,
    pub theta: f64,
    pub mode: Mode,
    pub inner: &'a dyn SpinorField,
    cache: Mutex<HashMap<[u64; 4], (M4, M4)>>,
    jet_cache: Mutex<HashMap<[u64; 4], ([[CJet1; 4]; 4], [[CJet1; 4]; 4])>>,
}

impl<'a> TransportedField<'a> {
    pub fn new(
        params: ManifoldParams,
        theta: f64,
        mode: Mode,
        inner: &'a dyn SpinorField,
    ) -> Self {
        TransportedField {
            params,
            theta,
            mode,
            inner,
            cache: Mutex::new(HashMap::new()),
            jet_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn shifts(&self) -> (f64, f64) {
        (TAU * self.theta * self.mode.n(), -TAU * self.theta * self.mode.m())
    }

    fn key(pt: &Point) -> [u64; 4] {
        [pt.r.to_bits(), pt.theta.to_bits(), pt.phi.to_bits(), pt.psi.to_bits()]
    }

    fn propagators(&self, pt: &Point) -> (M4, M4) {
        let key = Self::key(pt);
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let (dphi, dpsi) = self.shifts();
        let y = pt.shifted(dphi, dpsi);
        let y_mid = pt.shifted(dphi, 0.0);
        let u_psi = transport_psi(self.params, &y, -dpsi).expect("interior").u;
        let u_phi = transport_phi(self.params, &y_mid, -dphi).expect("interior").u;
        self.cache.lock().unwrap().insert(key, (u_phi, u_psi));
        (u_phi, u_psi)
    }

    fn propagators_jet(&self, pt: &Point) -> ([[CJet1; 4]; 4], [[CJet1; 4]; 4]) {
        let key = Self::key(pt);
        if let Some(hit) = self.jet_cache.lock().unwrap().get(&key) {
            return *hit;
        }
        let (dphi, dpsi) = self.shifts();
        let y = pt.shifted(dphi, dpsi);
        let y_mid = pt.shifted(dphi, 0.0);
        let u_psi = transport_psi_jet(self.params, &y, -dpsi);
        let u_phi = transport_phi_jet(self.params, &y_mid, -dphi);
        self.jet_cache.lock().unwrap().insert(key, (u_phi, u_psi));
        (u_phi, u_psi)
    }

    fn pullback(&self, pt: &Point) -> Point {
        let (dphi, dpsi) = self.shifts();
        pt.shifted(dphi, dpsi)
    }
}

impl SpinorField for TransportedField<'_> {
    fn eval(&self, pt: &Point) -> C4 {
        let (u_phi, u_psi) = self.propagators(pt);
        let v = self.inner.eval(&self.pullback(pt));
        matvec4(&u_phi, &matvec4(&u_psi, &v))
    }

    fn d(&self, pt: &Point, i: usize) -> C4 {
        let (u_phi, u_psi) = self.propagators_jet(pt);
        let y = self.pullback(pt);
        let v = self.inner.eval(&y);
        let dv = self.inner.d(&y, i);
        // d_i [U_phi U_psi psi(y)] with dy/dx = identity on all coordinates
        let mut out = [ZC; 4];
        for a in 0..4 {
            let mut acc = ZC;
            for b in 0..4 {
                for g in 0..4 {
                    let u1 = u_phi[a][b];
                    let u2 = u_psi[b][g];
                    acc += u1.d[i] * u2.v * v[g] + u1.v * u2.d[i] * v[g] + u1.v * u2.v * dv[g];
                }
            }
            out[a] = acc;
        }
        out
    }

    fn dd(&self, pt: &Point, i: usize, j: usize) -> C4 {
        // Richardson central difference of the jet-exact first derivative.
        let h = 1e-4;
        let shift = |k: usize, s: f64| -> Point {
            let mut cmp = [pt.r, pt.theta, pt.phi, pt.psi];
            cmp[k] += s;
            Point { chart: pt.chart, r: cmp[0], theta: cmp[1], phi: cmp[2], psi: cmp[3] }
        };
        let d1 = |hh: f64| -> C4 {
            let up = self.d(&shift(j, hh), i);
            let dn = self.d(&shift(j, -hh), i);
            [
                (up[0] - dn[0]) / (2.0 * hh),
                (up[1] - dn[1]) / (2.0 * hh),
                (up[2] - dn[2]) / (2.0 * hh),
                (up[3] - dn[3]) / (2.0 * hh),
            ]
        };
        let a = d1(h);
        let b = d1(0.5 * h);
        let mut out = [ZC; 4];
        for k in 0..4 {
            out[k] = (b[k] * 4.0 - a[k]) / 3.0;
        }
        out
    }
}

/// `V^theta_r` as a field transform.
pub fn v_operator<'a>(
    params: ManifoldParams,
    theta: f64,
    mode: Mode,
    field: &'a dyn SpinorField,
) -> TransportedField<'a> {
    TransportedField::new(params, theta, mode, field)
}

/// Pullback without the transport factor; the negative control for the
/// equivariance checks.
pub struct PullbackOnlyField<'a> {
    pub params: ManifoldParams,
    pub theta: f64,
    pub mode: Mode,
    pub inner: &'a dyn SpinorField,
}

impl SpinorField for PullbackOnlyField<'_> {
    fn eval(&self, pt: &Point) -> C4 {
        let dphi = TAU * self.theta * self.mode.n();
        let dpsi = -TAU * self.theta * self.mode.m();
        self.inner.eval(&pt.shifted(dphi, dpsi))
    }
    fn d(&self, pt: &Point, i: usize) -> C4 {
        let dphi = TAU * self.theta * self.mode.n();
        let dpsi = -TAU * self.theta * self.mode.m();
        self.inner.d(&pt.shifted(dphi, dpsi), i)
    }
    fn dd(&self, pt: &Point, i: usize, j: usize) -> C4 {
        let dphi = TAU * self.theta * self.mode.n();
        let dpsi = -TAU * self.theta * self.mode.m();
        self.inner.dd(&pt.shifted(dphi, dpsi), i, j)
    }
}
