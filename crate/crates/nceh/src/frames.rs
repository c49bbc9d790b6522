//! Stereographic charts, orthonormal coframes and the SO(4) cotangent
//! transition functions.
//!
//! Both chart coframes are generated from the same complex null-frame
//! construction (`l`, `m` and conjugates) rather than typed in, so the
//! chart-S matrix is derived, not transcribed.

use crate::errors::NcehError;
use crate::geometry::{aux_scalars, Chart, ManifoldParams, Point};
use crate::jet::{Cx, Jet2};
use crate::Result;
use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct CoframeMatrix {
    /// `vartheta^alpha = h[alpha][i] dx^i`.
    pub h: [[f64; 4]; 4],
    pub hinv: [[f64; 4]; 4],
}

#[derive(Clone, Debug)]
pub struct TransitionSO4 {
    pub f_sn: [[f64; 4]; 4],
    pub f_ns: [[f64; 4]; 4],
}

/// Stereographic coordinate of the base-sphere factor: `z` on chart N,
/// `w = 1/z` on chart S.
pub fn stereo(pt: &Point) -> Result<Complex64> {
    let half = 0.5 * pt.theta;
    match pt.chart {
        Chart::N => {
            if half.tan() == 0.0 || pt.theta >= std::f64::consts::PI {
                return Err(NcehError::PoleSingularity { theta: pt.theta, chart: "N" });
            }
            let m = 1.0 / half.tan();
            Ok(Complex64::from_polar(m, -pt.phi))
        }
        Chart::S => {
            if pt.theta <= 0.0 {
                return Err(NcehError::PoleSingularity { theta: pt.theta, chart: "S" });
            }
            Ok(Complex64::from_polar(half.tan(), pt.phi))
        }
    }
}

type CJet = Cx<Jet2>;
type CVec = [CJet; 4];

fn czero() -> CJet {
    Cx::new(Jet2::c(0.0), Jet2::c(0.0))
}

fn cvec_add(a: &CVec, b: &CVec) -> CVec {
    [a[0].add(b[0]), a[1].add(b[1]), a[2].add(b[2]), a[3].add(b[3])]
}

fn cvec_sub(a: &CVec, b: &CVec) -> CVec {
    [a[0].sub(b[0]), a[1].sub(b[1]), a[2].sub(b[2]), a[3].sub(b[3])]
}

fn cvec_scale(a: &CVec, s: CJet) -> CVec {
    [s.mul(a[0]), s.mul(a[1]), s.mul(a[2]), s.mul(a[3])]
}

fn cvec_conj(a: &CVec) -> CVec {
    [a[0].conj(), a[1].conj(), a[2].conj(), a[3].conj()]
}

/// Coframe rows as jets in `(r, theta, phi, psi)`; rows are real, the
/// imaginary parts of the construction cancel identically.
pub fn coframe_jet(params: ManifoldParams, pt: &Point) -> Result<[[Jet2; 4]; 4]> {
    let aux = aux_scalars(params, pt.r, pt.theta);
    if aux.delta <= 0.0 {
        return Err(NcehError::DegenerateMetric { r: pt.r, a: params.a, what: "Delta^{1/2} in the coframe" });
    }
    match pt.chart {
        Chart::N if pt.theta >= std::f64::consts::PI => {
            return Err(NcehError::PoleSingularity { theta: pt.theta, chart: "N" })
        }
        Chart::S if pt.theta <= 0.0 => {
            return Err(NcehError::PoleSingularity { theta: pt.theta, chart: "S" })
        }
        _ => {}
    }

    let r = Jet2::var(pt.r, 0);
    let th = Jet2::var(pt.theta, 1);
    let ph = Jet2::var(pt.phi, 2);
    let half = th * 0.5;
    let sin_th = th.sin();
    let one = Jet2::c(1.0);
    let a4 = Jet2::c(params.a.powi(4));
    let delta = one - a4 / (r * r * r * r);
    let sqrt_delta = delta.sqrt();
    let sqrt2 = std::f64::consts::SQRT_2;

    // zeta = cot(theta/2) e^{-i phi} on N, tan(theta/2) e^{i phi} on S
    let (modulus, phase_sign, dtheta_sign) = match pt.chart {
        Chart::N => (half.cos() / half.sin(), -1.0, -1.0),
        Chart::S => (half.sin() / half.cos(), 1.0, 1.0),
    };
    let phase = Cx::new(ph.cos(), ph.sin() * phase_sign);
    let zeta = phase.scale(modulus);
    let zz = Jet2::c(1.0) + modulus * modulus;

    // d zeta / zeta in the coordinate cobasis
    let mut dlog: CVec = [czero(), czero(), czero(), czero()];
    dlog[1] = Cx::new(sin_th.recip() * dtheta_sign, Jet2::c(0.0));
    dlog[2] = Cx::new(Jet2::c(0.0), Jet2::c(phase_sign));
    let dzeta = cvec_scale(&dlog, zeta);

    // l = r / (sqrt2 (1+|zeta|^2)) d zeta
    let lpref = Cx::new(r / (zz * sqrt2), Jet2::c(0.0));
    let l = cvec_scale(&dzeta, lpref);

    // m = Delta^{-1/2}/sqrt2 dr + (r Delta^{1/2}/(4 sqrt2)) [ (dz/z - dzbar/zbar)(1-|z|^2)/(1+|z|^2) + 2 i dpsi ]
    let mut m: CVec = [czero(), czero(), czero(), czero()];
    m[0] = Cx::new((sqrt_delta * sqrt2).recip(), Jet2::c(0.0));
    let anis = (one - modulus * modulus) / zz;
    let osc = cvec_sub(&dlog, &cvec_conj(&dlog));
    let mut bracket = cvec_scale(&osc, Cx::new(anis, Jet2::c(0.0)));
    bracket[3] = bracket[3].add(Cx::new(Jet2::c(0.0), Jet2::c(2.0)));
    let mpref = Cx::new(r * sqrt_delta * (1.0 / (4.0 * sqrt2)), Jet2::c(0.0));
    m = cvec_add(&m, &cvec_scale(&bracket, mpref));

    let lbar = cvec_conj(&l);
    let mbar = cvec_conj(&m);
    let i_unit = Cx::new(Jet2::c(0.0), Jet2::c(1.0));
    let th1 = cvec_scale(&cvec_add(&l, &lbar), Cx::new(Jet2::c(1.0 / sqrt2), Jet2::c(0.0)));
    let th2 = cvec_scale(&cvec_sub(&l, &lbar), i_unit.scale(Jet2::c(-1.0 / sqrt2)));
    let th3 = cvec_scale(&cvec_sub(&m, &mbar), i_unit.scale(Jet2::c(-1.0 / sqrt2)));
    let th4 = cvec_scale(&cvec_add(&m, &mbar), Cx::new(Jet2::c(1.0 / sqrt2), Jet2::c(0.0)));

    let rows = [th1, th2, th3, th4];
    let mut h = [[Jet2::c(0.0); 4]; 4];
    for (alpha, row) in rows.iter().enumerate() {
        for i in 0..4 {
            debug_assert!(row[i].im.v.abs() < 1e-12, "coframe row not real");
            h[alpha][i] = row[i].re;
        }
    }
    Ok(h)
}

fn invert_real4(m: &[[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
    let mc: crate::linalg::M4 = {
        let mut t = crate::linalg::zero4();
        for i in 0..4 {
            for j in 0..4 {
                t[i][j] = Complex64::new(m[i][j], 0.0);
            }
        }
        t
    };
    let inv = crate::linalg::inverse4(&mc)?;
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = inv[i][j].re;
        }
    }
    Some(out)
}

pub fn coframe(params: ManifoldParams, pt: &Point) -> Result<CoframeMatrix> {
    let hj = coframe_jet(params, pt)?;
    let mut h = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            h[i][j] = hj[i][j].v;
        }
    }
    let hinv = invert_real4(&h).ok_or(NcehError::DegenerateMetric {
        r: pt.r,
        a: params.a,
        what: "coframe not invertible",
    })?;
    Ok(CoframeMatrix { h, hinv })
}

/// Printed closed form of the chart-N inverse coframe; kept as a cross-check
/// against the numerically inverted construction.
pub fn hinv_closed_n(params: ManifoldParams, pt: &Point) -> [[f64; 4]; 4] {
    let aux = aux_scalars(params, pt.r, pt.theta);
    let sq = aux.delta.sqrt();
    let (s, c) = pt.theta.sin_cos();
    let (sp, cp) = pt.phi.sin_cos();
    let r = pt.r;
    [
        [0.0, 0.0, 0.0, sq],
        [-2.0 * cp / r, 2.0 * sp / r, 0.0, 0.0],
        [-2.0 * sp / (r * s), -2.0 * cp / (r * s), 0.0, 0.0],
        [2.0 * c * sp / (r * s), 2.0 * c * cp / (r * s), 2.0 / (r * sq), 0.0],
    ]
}

/// Cotangent transition on the chart overlap: the upper block rotates the
/// `(vartheta^1, vartheta^2)` plane by `2 phi + pi`.
pub fn cotangent_transition(pt: &Point) -> Result<TransitionSO4> {
    if pt.theta <= 0.0 || pt.theta >= std::f64::consts::PI {
        return Err(NcehError::PoleSingularity { theta: pt.theta, chart: "overlap" });
    }
    let (s2, c2) = (2.0 * pt.phi).sin_cos();
    let mut f_sn = [[0.0; 4]; 4];
    f_sn[0][0] = -c2;
    f_sn[0][1] = s2;
    f_sn[1][0] = -s2;
    f_sn[1][1] = -c2;
    f_sn[2][2] = 1.0;
    f_sn[3][3] = 1.0;
    let mut f_ns = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            f_ns[i][j] = f_sn[j][i];
        }
    }
    Ok(TransitionSO4 { f_sn, f_ns })
}

pub fn matmul_real4(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut r = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            for j in 0..4 {
                r[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    r
}

pub fn max_abs_real4(m: &[[f64; 4]; 4]) -> f64 {
    m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

pub fn sub_real4(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut r = *a;
    for i in 0..4 {
        for j in 0..4 {
            r[i][j] -= b[i][j];
        }
    }
    r
}

pub fn det_real4(m: &[[f64; 4]; 4]) -> f64 {
    let mut a = *m;
    let mut det = 1.0;
    for col in 0..4 {
        let mut piv = col;
        for row in col + 1..4 {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(col, piv);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for j in col..4 {
                a[row][j] -= f * a[col][j];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{metric, SamplingBox};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> ManifoldParams {
        ManifoldParams::new(1.0).unwrap()
    }

    #[test]
    fn stereo_examples() {
        let pt = Point::n(2.0, std::f64::consts::FRAC_PI_2, 0.0, 0.0);
        let z = stereo(&pt).unwrap();
        assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let pt2 = Point::n(2.0, std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, 0.0);
        let z2 = stereo(&pt2).unwrap();
        assert!((z2 - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        // w = 1/z on the overlap
        let mut s = pt2;
        s.chart = Chart::S;
        let w = stereo(&s).unwrap();
        assert!((w - 1.0 / z2).norm() < 1e-15);
    }

    #[test]
    fn coframe_squares_to_metric() {
        let p = params();
        let bx = SamplingBox::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let pt = bx.sample(p, &mut rng);
            let cf = coframe(p, &pt).unwrap();
            let g = metric(p, &pt).unwrap().g;
            let mut ht = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    ht[i][j] = cf.h[j][i];
                }
            }
            let htt = matmul_real4(&ht, &cf.h);
            assert!(max_abs_real4(&sub_real4(&htt, &g)) <= 1e-10);
            let prod = matmul_real4(&cf.h, &cf.hinv);
            let mut eye = [[0.0; 4]; 4];
            for i in 0..4 {
                eye[i][i] = 1.0;
            }
            assert!(max_abs_real4(&sub_real4(&prod, &eye)) <= 1e-12);
        }
    }

    #[test]
    fn coframe_matches_printed_entry() {
        // a=1, r=2, phi=0, theta=pi/2: h^1_2 = -r cos(phi)/2 = -1
        let pt = Point::n(2.0, std::f64::consts::FRAC_PI_2, 0.0, 0.7);
        let cf = coframe(params(), &pt).unwrap();
        assert!((cf.h[0][1] + 1.0).abs() < 1e-14);
        // and the printed inverse matches the numerically inverted one
        let printed = hinv_closed_n(params(), &pt);
        assert!(max_abs_real4(&sub_real4(&printed, &cf.hinv)) <= 1e-12);
    }

    #[test]
    fn printed_inverse_matches_at_random_points() {
        let p = params();
        let bx = SamplingBox::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..30 {
            let pt = bx.sample(p, &mut rng);
            let cf = coframe(p, &pt).unwrap();
            let printed = hinv_closed_n(p, &pt);
            assert!(max_abs_real4(&sub_real4(&printed, &cf.hinv)) <= 1e-11);
        }
    }

    #[test]
    fn transition_rotates_chart_s_coframe_onto_chart_n() {
        let p = params();
        let bx = SamplingBox::default();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let pt = bx.sample(p, &mut rng);
            let mut pts = pt;
            pts.chart = Chart::S;
            let hn = coframe(p, &pt).unwrap().h;
            let hs = coframe(p, &pts).unwrap().h;
            let f = cotangent_transition(&pt).unwrap();
            // vartheta'^beta = f^beta_alpha vartheta^alpha
            let mapped = matmul_real4(&f.f_sn, &hn);
            assert!(max_abs_real4(&sub_real4(&mapped, &hs)) <= 1e-12);
            // scalar invariants agree between charts
            assert!((det_real4(&hn).abs() - det_real4(&hs).abs()).abs() <= 1e-12 * det_real4(&hn).abs());
        }
    }

    #[test]
    fn transition_cocycle_and_orthogonality() {
        let pt = Point::n(2.0, 1.1, 0.0, 0.0);
        let f = cotangent_transition(&pt).unwrap();
        // phi = 0 block is diag(-1,-1,1,1)
        assert!((f.f_sn[0][0] + 1.0).abs() < 1e-15);
        assert!((f.f_sn[1][1] + 1.0).abs() < 1e-15);
        let prod = matmul_real4(&f.f_sn, &f.f_ns);
        let mut eye = [[0.0; 4]; 4];
        for i in 0..4 {
            eye[i][i] = 1.0;
        }
        assert!(max_abs_real4(&sub_real4(&prod, &eye)) <= 1e-14);
        assert!((det_real4(&f.f_sn) - 1.0).abs() <= 1e-14);
        let pt2 = Point::n(2.0, 0.77, 2.1, 0.4);
        let f2 = cotangent_transition(&pt2).unwrap();
        let mut ft = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                ft[i][j] = f2.f_sn[j][i];
            }
        }
        let ortho = matmul_real4(&ft, &f2.f_sn);
        assert!(max_abs_real4(&sub_real4(&ortho, &eye)) <= 1e-14);
    }

    #[test]
    fn pole_errors() {
        let pt = Point { chart: Chart::N, r: 2.0, theta: 0.0, phi: 0.0, psi: 0.0 };
        assert!(cotangent_transition(&pt).is_err());
        let pts = Point { chart: Chart::S, r: 2.0, theta: 0.0, phi: 0.0, psi: 0.0 };
        assert!(stereo(&pts).is_err());
    }
}
