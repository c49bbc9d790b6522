//! Application of the Dirac operator to analytic spinor fields, its
//! commutators, and principal symbols.

use crate::fields::{ConjugatedField, MultipliedField, SpinorField};
use crate::frames::coframe;
use crate::geometry::{ManifoldParams, Point};
use crate::linalg::{c, matmul4, matvec4, scale4, vec_add, vec_norm, vec_scale, vec_sub, zero4, C4, M4, ZC};
use crate::modealg::{Mode, ModeFunction};
use crate::spinbundle::{charge_conjugation, gamma_set, omega};
use crate::transport::{v_operator, TorusDirection};
use crate::Result;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Coordinate gamma matrices `gamma^j(x) = ht^j_beta gamma^beta`.
pub fn coordinate_gammas(params: ManifoldParams, pt: &Point) -> Result<[M4; 4]> {
    let cf = coframe(params, pt)?;
    let gs = gamma_set();
    let mut out = [zero4(); 4];
    for j in 0..4 {
        for beta in 0..4 {
            let w = cf.hinv[j][beta];
            if w != 0.0 {
                for a in 0..4 {
                    for b in 0..4 {
                        out[j][a][b] += gs.g[beta][a][b] * c(w, 0.0);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `D psi = -i gamma^j (d_j psi - omega_j psi)`.
pub fn apply_dirac(params: ManifoldParams, field: &dyn SpinorField, pt: &Point) -> Result<C4> {
    let gammas = coordinate_gammas(params, pt)?;
    let psi = field.eval(pt);
    let minus_i = c(0.0, -1.0);
    let mut acc = [ZC; 4];
    for j in 0..4 {
        let mut cov = field.d(pt, j);
        let w = omega(params, pt, j)?;
        let wpsi = matvec4(&w, &psi);
        cov = vec_sub(&cov, &wpsi);
        acc = vec_add(&acc, &matvec4(&gammas[j], &cov));
    }
    Ok(vec_scale(&acc, minus_i))
}

/// Finite-difference oracle: same contraction, but all field derivatives come
/// from Richardson-extrapolated five-point stencils on plain evaluations.
pub fn apply_dirac_fd(params: ManifoldParams, field: &dyn SpinorField, pt: &Point) -> Result<C4> {
    let gammas = coordinate_gammas(params, pt)?;
    let psi = field.eval(pt);
    let minus_i = c(0.0, -1.0);
    let shift = |k: usize, s: f64| -> Point {
        let mut q = [pt.r, pt.theta, pt.phi, pt.psi];
        q[k] += s;
        Point { chart: pt.chart, r: q[0], theta: q[1], phi: q[2], psi: q[3] }
    };
    let stencil = |k: usize, h: f64| -> C4 {
        let f2p = field.eval(&shift(k, 2.0 * h));
        let f1p = field.eval(&shift(k, h));
        let f1m = field.eval(&shift(k, -h));
        let f2m = field.eval(&shift(k, -2.0 * h));
        let mut out = [ZC; 4];
        for a in 0..4 {
            out[a] = (-f2p[a] + f1p[a] * 8.0 - f1m[a] * 8.0 + f2m[a]) / (12.0 * h);
        }
        out
    };
    let mut acc = [ZC; 4];
    for j in 0..4 {
        let h = 1e-2;
        let d_h = stencil(j, h);
        let d_h2 = stencil(j, 0.5 * h);
        let mut cov = [ZC; 4];
        for a in 0..4 {
            cov[a] = (d_h2[a] * 16.0 - d_h[a]) / 15.0;
        }
        let w = omega(params, pt, j)?;
        cov = vec_sub(&cov, &matvec4(&w, &psi));
        acc = vec_add(&acc, &matvec4(&gammas[j], &cov));
    }
    Ok(vec_scale(&acc, minus_i))
}

/// `|| (D J - J D) psi ||` at a point.
pub fn dirac_j_commutator(
    params: ManifoldParams,
    field: &dyn SpinorField,
    pt: &Point,
) -> Result<f64> {
    let jpsi = ConjugatedField(field);
    let lhs = apply_dirac(params, &jpsi, pt)?;
    let rhs = charge_conjugation(&apply_dirac(params, field, pt)?);
    Ok(vec_norm(&vec_sub(&lhs, &rhs)))
}

/// `[D, M_f] psi` evaluated directly.
pub fn multiplier_commutator(
    params: ManifoldParams,
    f: &ModeFunction,
    field: &dyn SpinorField,
    pt: &Point,
) -> Result<C4> {
    let fpsi = MultipliedField { params, factor: f, inner: field };
    let lhs = apply_dirac(params, &fpsi, pt)?;
    let fval = f.value(params, pt);
    let rhs = vec_scale(&apply_dirac(params, field, pt)?, fval);
    Ok(vec_sub(&lhs, &rhs))
}

/// `-i c(df) psi`, the closed form of the multiplier commutator.
pub fn clifford_of_df(
    params: ManifoldParams,
    f: &ModeFunction,
    field: &dyn SpinorField,
    pt: &Point,
) -> Result<C4> {
    let gammas = coordinate_gammas(params, pt)?;
    let (_, df, _) = f.jet4(params, pt);
    let psi = field.eval(pt);
    let mut acc = [ZC; 4];
    for j in 0..4 {
        acc = vec_add(&acc, &vec_scale(&matvec4(&gammas[j], &psi), df[j]));
    }
    Ok(vec_scale(&acc, c(0.0, -1.0)))
}

/// Operator-norm bound of `-i c(df)` at a point (exact 2-norm of the 4x4).
pub fn clifford_df_norm(params: ManifoldParams, f: &ModeFunction, pt: &Point) -> Result<f64> {
    let gammas = coordinate_gammas(params, pt)?;
    let (_, df, _) = f.jet4(params, pt);
    let mut m = zero4();
    for j in 0..4 {
        m = crate::linalg::add4(&m, &scale4(&gammas[j], df[j]));
    }
    // power iteration on m* m
    let mm = matmul4(&crate::linalg::adjoint4(&m), &m);
    let mut v = [c(1.0, 0.0), c(0.5, 0.2), c(-0.3, 0.1), c(0.2, -0.7)];
    let mut lam = 0.0;
    for _ in 0..200 {
        let w = matvec4(&mm, &v);
        let n = vec_norm(&w);
        if n == 0.0 {
            return Ok(0.0);
        }
        lam = n;
        v = vec_scale(&w, c(1.0 / n, 0.0));
    }
    Ok(lam.sqrt())
}

/// Principal symbol of `D^2`: `(gamma^j xi_j)^2 = -g(xi, xi) 1`.
pub fn symbol_d_squared(params: ManifoldParams, pt: &Point, xi: &[f64; 4]) -> Result<M4> {
    let gammas = coordinate_gammas(params, pt)?;
    let mut cxi = zero4();
    for j in 0..4 {
        cxi = crate::linalg::add4(&cxi, &scale4(&gammas[j], c(xi[j], 0.0)));
    }
    Ok(matmul4(&cxi, &cxi))
}

/// Principal symbol of the deformed left multiplier: each mode contributes
/// its multiplier value, the transport factor of `V_r` ending at the point,
/// and the phase `e(theta (r4 xi3 - r3 xi4))`.
pub fn symbol_l(
    params: ManifoldParams,
    f: &ModeFunction,
    theta: f64,
    pt: &Point,
    xi: &[f64; 4],
) -> Result<M4> {
    let mut acc = zero4();
    let zero = crate::fields::ZeroField;
    for t in &f.terms {
        let single = ModeFunction { terms: vec![t.clone()] };
        let fval = single.value(params, pt);
        let v = v_operator(params, theta, t.mode, &zero);
        let (dphi, dpsi) = v.shifts();
        let y = pt.shifted(dphi, dpsi);
        let y_mid = pt.shifted(dphi, 0.0);
        let u_psi = crate::transport::transport_psi(params, &y, -dpsi)?.u;
        let u_phi = crate::transport::transport_phi(params, &y_mid, -dphi)?.u;
        let u = matmul4(&u_phi, &u_psi);
        let phase = Complex64::from_polar(1.0, TAU * theta * (t.mode.n() * xi[2] - t.mode.m() * xi[3]));
        acc = crate::linalg::add4(&acc, &scale4(&u, fval * phase));
    }
    Ok(acc)
}

/// `|| (D V_r - V_r D) psi ||` at a point.
pub fn dirac_v_commutator(
    params: ManifoldParams,
    theta: f64,
    mode: Mode,
    field: &dyn SpinorField,
    pt: &Point,
) -> Result<f64> {
    let v = v_operator(params, theta, mode, field);
    let lhs = apply_dirac(params, &v, pt)?;
    // V_r (D psi)(x): transport the pointwise value of D psi from the pullback
    let (dphi, dpsi) = v.shifts();
    let y = pt.shifted(dphi, dpsi);
    let y_mid = pt.shifted(dphi, 0.0);
    let dpsi_at_y = apply_dirac(params, field, &y)?;
    let u_psi = crate::transport::transport_psi(params, &y, -dpsi)?.u;
    let u_phi = crate::transport::transport_phi(params, &y_mid, -dphi)?.u;
    let rhs = matvec4(&u_phi, &matvec4(&u_psi, &dpsi_at_y));
    Ok(vec_norm(&vec_sub(&lhs, &rhs)))
}

/// Direction selector re-exported for table building.
pub fn torus_direction(name: &str) -> Option<TorusDirection> {
    match name {
        "phi" => Some(TorusDirection::Phi),
        "psi" => Some(TorusDirection::Psi),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{corpus, SpinorModeField, ZeroField};
    use crate::geometry::SamplingBox;
    use crate::linalg::max_abs4;
    use crate::modealg::Profile;
    use crate::spinbundle::chirality;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> ManifoldParams {
        ManifoldParams::new(1.0).unwrap()
    }

    fn field_norm_scale(f: &SpinorModeField, pt: &Point) -> f64 {
        1.0 + vec_norm(&f.eval(pt))
    }

    #[test]
    fn dirac_of_zero_field() {
        let p = params();
        let pt = Point::n(2.0, 1.0, 0.2, 0.4);
        let out = apply_dirac(p, &ZeroField, &pt).unwrap();
        assert!(vec_norm(&out) == 0.0);
    }

    #[test]
    fn dirac_matches_fd_oracle() {
        let p = params();
        let fields = corpus(p, 42, 10);
        let bx = SamplingBox::default();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for f in fields.iter().take(4) {
            for _ in 0..4 {
                let pt = bx.sample(p, &mut rng);
                let exact = apply_dirac(p, f, &pt).unwrap();
                let fd = apply_dirac_fd(p, f, &pt).unwrap();
                let resid = vec_norm(&vec_sub(&exact, &fd)) / field_norm_scale(f, &pt);
                assert!(resid <= 1e-6, "FD oracle residual {resid}");
            }
        }
    }

    #[test]
    fn chirality_anticommutes() {
        let p = params();
        let fields = corpus(p, 42, 10);
        let bx = SamplingBox::default();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let chi = chirality();
        for f in &fields {
            let pt = bx.sample(p, &mut rng);
            // (chi D + D chi) psi
            let dpsi = apply_dirac(p, f, &pt).unwrap();
            let chi_dpsi = matvec4(&chi, &dpsi);
            let chif = ChiField(f);
            let d_chipsi = apply_dirac(p, &chif, &pt).unwrap();
            let total = vec_add(&chi_dpsi, &d_chipsi);
            assert!(vec_norm(&total) <= 1e-8 * field_norm_scale(f, &pt));
        }
    }

    struct ChiField<'a>(&'a SpinorModeField);
    impl SpinorField for ChiField<'_> {
        fn eval(&self, pt: &Point) -> C4 {
            matvec4(&chirality(), &self.0.eval(pt))
        }
        fn d(&self, pt: &Point, i: usize) -> C4 {
            matvec4(&chirality(), &self.0.d(pt, i))
        }
        fn dd(&self, pt: &Point, i: usize, j: usize) -> C4 {
            matvec4(&chirality(), &self.0.dd(pt, i, j))
        }
    }

    #[test]
    fn j_commutes_with_dirac() {
        let p = params();
        let fields = corpus(p, 42, 10);
        let bx = SamplingBox::default();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for f in &fields {
            let pt = bx.sample(p, &mut rng);
            let resid = dirac_j_commutator(p, f, &pt).unwrap();
            assert!(resid <= 1e-8 * field_norm_scale(f, &pt), "J residual {resid}");
        }
        // negative control: plain conjugation does not commute
        struct PlainConj<'a>(&'a SpinorModeField);
        impl SpinorField for PlainConj<'_> {
            fn eval(&self, pt: &Point) -> C4 {
                self.0.eval(pt).map(|v| v.conj())
            }
            fn d(&self, pt: &Point, i: usize) -> C4 {
                self.0.d(pt, i).map(|v| v.conj())
            }
            fn dd(&self, pt: &Point, i: usize, j: usize) -> C4 {
                self.0.dd(pt, i, j).map(|v| v.conj())
            }
        }
        let f = &fields[1];
        let pt = bx.sample(p, &mut rng);
        let pc = PlainConj(f);
        let lhs = apply_dirac(p, &pc, &pt).unwrap();
        let rhs: C4 = apply_dirac(p, f, &pt).unwrap().map(|v| v.conj());
        assert!(vec_norm(&vec_sub(&lhs, &rhs)) > 1e-4);
    }

    #[test]
    fn multiplier_commutator_is_clifford_action() {
        let p = params();
        let fields = corpus(p, 42, 4);
        let bx = SamplingBox::default();
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        // f == 1 commutes
        let one = ModeFunction::one();
        let pt = bx.sample(p, &mut rng);
        let comm = multiplier_commutator(p, &one, &fields[0], &pt).unwrap();
        assert!(vec_norm(&comm) <= 1e-12);
        // f = e^{i psi} matches -i c(df)
        let f = ModeFunction::phase(0, 1);
        for fld in fields.iter().take(3) {
            let pt = bx.sample(p, &mut rng);
            let comm = multiplier_commutator(p, &f, fld, &pt).unwrap();
            let cdf = clifford_of_df(p, &f, fld, &pt).unwrap();
            let resid = vec_norm(&vec_sub(&comm, &cdf)) / field_norm_scale(fld, &pt);
            assert!(resid <= 1e-8, "clifford residual {resid}");
        }
        // Leibniz: [D, M_{fg}] = [D, M_f] M_g + M_f [D, M_g]
        let g = ModeFunction::single(Mode::new_int(1, 0), c(0.4, 0.1), Profile::rtrig(-1, 0, 1, 0));
        let fg = f.mul_pointwise(&g);
        let fld = &fields[0];
        let pt = bx.sample(p, &mut rng);
        let lhs = multiplier_commutator(p, &fg, fld, &pt).unwrap();
        let gpsi = MultipliedField { params: p, factor: &g, inner: fld };
        let t1 = multiplier_commutator(p, &f, &gpsi, &pt).unwrap();
        let t2 = vec_scale(&multiplier_commutator(p, &g, fld, &pt).unwrap(), f.value(p, &pt));
        let rhs = vec_add(&t1, &t2);
        assert!(vec_norm(&vec_sub(&lhs, &rhs)) <= 1e-8 * field_norm_scale(fld, &pt));
        // boundedness probe for a compactly supported function
        let bump = ModeFunction::single(
            Mode::new_int(1, 0),
            c(1.0, 0.0),
            Profile::from_atoms(&[(
                crate::modealg::Atom::Bump(
                    crate::modealg::F64Key::new(1.5),
                    crate::modealg::F64Key::new(4.0),
                ),
                2,
            )]),
        );
        let mut sup = 0.0f64;
        for _ in 0..30 {
            let pt = bx.sample(p, &mut rng);
            sup = sup.max(clifford_df_norm(p, &bump, &pt).unwrap());
        }
        assert!(sup.is_finite() && sup < 1e3, "bounded commutator probe {sup}");
    }

    #[test]
    fn symbol_of_d_squared() {
        let p = params();
        // xi = 0
        let pt = Point::n(2.0, std::f64::consts::FRAC_PI_2, 0.3, 0.8);
        let s0 = symbol_d_squared(p, &pt, &[0.0; 4]).unwrap();
        assert!(max_abs4(&s0) == 0.0);
        // xi = dr: modulus g^{11} = 15/16 at a=1, r=2
        let s = symbol_d_squared(p, &pt, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((s[0][0].norm() - 15.0 / 16.0).abs() < 1e-12);
        // scalar multiple of the identity and central for random xi
        let gs = gamma_set();
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let bx = SamplingBox::default();
        for _ in 0..100 {
            let pt = bx.sample(p, &mut rng);
            let xi = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let s = symbol_d_squared(p, &pt, &xi).unwrap();
            let lam = s[0][0];
            let diag = scale4(&crate::linalg::eye4(), lam);
            assert!(max_abs4(&crate::linalg::sub4(&s, &diag)) <= 1e-12 * (1.0 + lam.norm()));
            // the claimed modulus is g^{ij} xi_i xi_j
            let ginv = crate::geometry::metric_inverse(p, &pt).unwrap();
            let mut q = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    q += ginv[i][j] * xi[i] * xi[j];
                }
            }
            assert!((lam.norm() - q).abs() <= 1e-11 * (1.0 + q));
            for g in &gs.g {
                let comm = crate::linalg::sub4(&matmul4(&s, g), &matmul4(g, &s));
                assert!(max_abs4(&comm) <= 1e-12 * (1.0 + lam.norm()));
            }
        }
    }

    #[test]
    fn symbol_of_deformed_multiplier() {
        let p = params();
        let pt = Point::n(2.0, 1.1, 0.5, 0.9);
        let f = ModeFunction::phase(1, 0)
            .scale(c(0.7, 0.2))
            .add(&ModeFunction::constant(c(0.3, 0.0)));
        // theta = 0 collapses to diag(f)
        let s = symbol_l(p, &f, 0.0, &pt, &[0.4, -0.2, 0.9, 0.1]).unwrap();
        let fv = f.value(p, &pt);
        let diag = scale4(&crate::linalg::eye4(), fv);
        assert!(max_abs4(&crate::linalg::sub4(&s, &diag)) <= 1e-10);
        // a (0,0) mode alone is xi-independent
        let inv = ModeFunction::constant(c(0.5, -0.1));
        let s1 = symbol_l(p, &inv, 0.3, &pt, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let s2 = symbol_l(p, &inv, 0.3, &pt, &[0.0, 0.7, -2.0, 1.4]).unwrap();
        assert!(max_abs4(&crate::linalg::sub4(&s1, &s2)) <= 1e-12);
        // degree-0 bound: entries bounded by sum of |f_r(x)|
        let theta = 0.3;
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let mut bound = 0.0;
        for t in &f.terms {
            let single = ModeFunction { terms: vec![t.clone()] };
            bound += single.value(p, &pt).norm();
        }
        for _ in 0..20 {
            let xi = [
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            ];
            let s = symbol_l(p, &f, theta, &pt, &xi).unwrap();
            assert!(max_abs4(&s) <= bound + 1e-9);
        }
    }

    #[test]
    fn dirac_commutes_with_transport() {
        let p = params();
        let fields = corpus(p, 42, 3);
        let pt = Point::n(2.3, 1.0, 0.8, 0.5);
        // r = 0 is exact
        let r0 = dirac_v_commutator(p, 0.3, Mode::zero(), &fields[0], &pt).unwrap();
        assert!(r0 <= 1e-10);
        for f in fields.iter().take(2) {
            let resid = dirac_v_commutator(p, 0.3, Mode::new_int(1, 0), f, &pt).unwrap();
            assert!(resid <= 1e-6, "D-V residual {resid}");
        }
        // negative control: dropping the transport factor breaks equivariance
        let f = &fields[0];
        let naked = crate::transport::PullbackOnlyField {
            params: p,
            theta: 0.3,
            mode: Mode::new_int(1, 0),
            inner: f,
        };
        let lhs = apply_dirac(p, &naked, &pt).unwrap();
        let (dphi, dpsi) = (TAU * 0.3 * 0.0, -TAU * 0.3);
        let y = pt.shifted(dphi, dpsi);
        let rhs = apply_dirac(p, f, &y).unwrap();
        assert!(vec_norm(&vec_sub(&lhs, &rhs)) > 1e-3);
    }
}
