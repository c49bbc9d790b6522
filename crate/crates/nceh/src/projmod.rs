//! Patch functions, the 8x8 spinor-bundle projection and the module/section
//! round trip.

use crate::errors::NcehError;
use crate::geometry::{ManifoldParams, Point};
use crate::linalg::{c, matmul8, max_abs8, sub8, zero8, C4, M8, ZC};
use crate::modealg::{Atom, Mode, ModeFunction, Profile};
use crate::spinbundle::spin_transition;
use crate::Result;

/// Partition pair `h_N = cos^2(theta/2)`, `h_S = sin^2(theta/2)`.
pub fn patch_h(theta: f64) -> (f64, f64) {
    let half = 0.5 * theta;
    (half.cos().powi(2), half.sin().powi(2))
}

/// Faster-decaying pair `k_N = cos^2((pi/2) sin^2(theta/2))`, `k_S` its
/// complement; `k_N` vanishes to higher order than `h_N` at `theta = pi`.
pub fn patch_k(theta: f64) -> (f64, f64) {
    let alpha = std::f64::consts::FRAC_PI_2 * (0.5 * theta).sin().powi(2);
    (alpha.cos().powi(2), alpha.sin().powi(2))
}

fn transition_diag(pt: &Point) -> (C4, C4) {
    // P, Q extended by zero at the poles via the vanishing k factors
    match spin_transition(pt) {
        Ok(st) => {
            let p = [st.p[0][0], st.p[1][1], st.p[2][2], st.p[3][3]];
            let q = [st.q[0][0], st.q[1][1], st.q[2][2], st.q[3][3]];
            (p, q)
        }
        Err(_) => ([ZC; 4], [ZC; 4]),
    }
}

/// Hermitian idempotent realizing the spinor bundle inside the free module
/// of rank 8: `[[k_N 1, w P], [w Q, k_S 1]]` with `w = sqrt(k_N k_S)`.
pub fn projection_matrix(pt: &Point) -> M8 {
    let (kn, ks) = patch_k(pt.theta);
    let w = (kn * ks).max(0.0).sqrt();
    let (p, q) = transition_diag(pt);
    let mut m = zero8();
    for i in 0..4 {
        m[i][i] = c(kn, 0.0);
        m[i + 4][i + 4] = c(ks, 0.0);
        if w > 0.0 {
            m[i][i + 4] = p[i] * w;
            m[i + 4][i] = q[i] * w;
        }
    }
    m
}

/// The block form with bare `k_N P` / `k_S Q` off-diagonals; idempotent but
/// not self-adjoint, kept as a documented cross-check.
pub fn projection_matrix_plain_blocks(pt: &Point) -> M8 {
    let (kn, ks) = patch_k(pt.theta);
    let (p, q) = transition_diag(pt);
    let mut m = zero8();
    for i in 0..4 {
        m[i][i] = c(kn, 0.0);
        m[i + 4][i + 4] = c(ks, 0.0);
        m[i][i + 4] = p[i] * kn;
        m[i + 4][i] = q[i] * ks;
    }
    m
}

/// Idempotency, Hermiticity and trace residuals of the projection.
pub fn projection_residuals(pt: &Point) -> (f64, f64, f64) {
    let p = projection_matrix(pt);
    let idem = max_abs8(&sub8(&matmul8(&p, &p), &p));
    let herm = max_abs8(&sub8(&crate::linalg::adjoint8(&p), &p));
    let trace = (crate::linalg::trace8(&p) - c(4.0, 0.0)).norm();
    (idem, herm, trace)
}

pub fn projection_rank(pt: &Point) -> usize {
    crate::linalg::rank8(&projection_matrix(pt), 1e-9)
}

/// The projection entries as mode functions (`P`, `Q` entries are single
/// `(±1, 0)` modes, the patch weights are `(0, 0)` modes).
pub fn projection_mode_matrix() -> [[ModeFunction; 8]; 8] {
    let kn = ModeFunction::single(Mode::zero(), c(1.0, 0.0), Profile::from_atoms(&[(Atom::PatchKN, 2)]));
    let ks = ModeFunction::single(Mode::zero(), c(1.0, 0.0), Profile::from_atoms(&[(Atom::PatchKS, 2)]));
    let w = ModeFunction::single(
        Mode::zero(),
        c(1.0, 0.0),
        Profile::from_atoms(&[(Atom::PatchKN, 1), (Atom::PatchKS, 1)]),
    );
    let i = c(0.0, 1.0);
    let p_entry = |k: usize| -> ModeFunction {
        // diag(-i e^{i phi}, i e^{-i phi}, i e^{-i phi}, -i e^{i phi})
        match k {
            0 | 3 => ModeFunction::single(Mode::new_int(1, 0), -i, Profile::one()),
            _ => ModeFunction::single(Mode::new_int(-1, 0), i, Profile::one()),
        }
    };
    let q_entry = |k: usize| -> ModeFunction {
        match k {
            0 | 3 => ModeFunction::single(Mode::new_int(-1, 0), i, Profile::one()),
            _ => ModeFunction::single(Mode::new_int(1, 0), -i, Profile::one()),
        }
    };
    let mut m: [[ModeFunction; 8]; 8] =
        std::array::from_fn(|_| std::array::from_fn(|_| ModeFunction::zero()));
    for k in 0..4 {
        m[k][k] = kn.clone();
        m[k + 4][k + 4] = ks.clone();
        m[k][k + 4] = w.mul_pointwise(&p_entry(k));
        m[k + 4][k] = w.mul_pointwise(&q_entry(k));
    }
    m
}

/// Star-matrix product of 8x8 mode-function matrices.
pub fn star_matmul8(
    a: &[[ModeFunction; 8]; 8],
    b: &[[ModeFunction; 8]; 8],
    theta: f64,
) -> [[ModeFunction; 8]; 8] {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut acc = ModeFunction::zero();
            for k in 0..8 {
                if !a[i][k].is_zero() && !b[k][j].is_zero() {
                    acc = acc.add(&a[i][k].star(&b[k][j], theta));
                }
            }
            acc
        })
    })
}

/// Section data on both charts at a point.
#[derive(Clone, Copy, Debug)]
pub struct SectionPair {
    pub on_n: C4,
    pub on_s: C4,
}

/// Reconstruct the section from its patch-weighted coefficients and report
/// the worst deviation; errors when the chart components are inconsistent.
pub fn module_roundtrip(pair: &SectionPair, pt: &Point, tol: f64) -> Result<f64> {
    let st = spin_transition(pt)?;
    // consistency on the overlap: psi_S = Q psi_N
    let mapped: C4 = std::array::from_fn(|k| st.q[k][k] * pair.on_n[k]);
    let mut inconsistency = 0.0f64;
    for k in 0..4 {
        inconsistency = inconsistency.max((mapped[k] - pair.on_s[k]).norm());
    }
    if inconsistency > tol {
        return Err(NcehError::InconsistentSection { residual: inconsistency });
    }
    let (kn, ks) = patch_k(pt.theta);
    // coefficients A = k_N psi_N, B = k_S psi_S; reconstruction on each chart
    let mut worst = 0.0f64;
    for k in 0..4 {
        let a = pair.on_n[k] * kn;
        let b = pair.on_s[k] * ks;
        // chart N: A + P B
        let recon_n = a + st.p[k][k] * b;
        worst = worst.max((recon_n - pair.on_n[k]).norm());
        // chart S: B + Q A
        let recon_s = b + st.q[k][k] * a;
        worst = worst.max((recon_s - pair.on_s[k]).norm());
    }
    Ok(worst)
}

/// Build a consistent section pair from chart-N components.
pub fn section_from_n(pt: &Point, on_n: C4) -> Result<SectionPair> {
    let st = spin_transition(pt)?;
    let on_s: C4 = std::array::from_fn(|k| st.q[k][k] * on_n[k]);
    Ok(SectionPair { on_n, on_s })
}

/// Worst residual of `p *_theta p = p` over a `(theta_coord, phi)` grid.
pub fn star_idempotency_residual(params: ManifoldParams, theta_def: f64, ngrid: usize) -> f64 {
    let p = projection_mode_matrix();
    let pp = star_matmul8(&p, &p, theta_def);
    let mut worst = 0.0f64;
    for i in 0..ngrid {
        let th = 0.05 + (std::f64::consts::PI - 0.1) * i as f64 / (ngrid - 1) as f64;
        for j in 0..ngrid {
            let phi = std::f64::consts::TAU * j as f64 / ngrid as f64;
            let pt = Point { chart: crate::geometry::Chart::N, r: 2.0, theta: th, phi, psi: 0.0 };
            for a in 0..8 {
                for b in 0..8 {
                    let d = (pp[a][b].value(params, &pt) - p[a][b].value(params, &pt)).norm();
                    worst = worst.max(d);
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::corpus;
    use crate::fields::SpinorField;
    use crate::geometry::SamplingBox;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> ManifoldParams {
        ManifoldParams::new(1.0).unwrap()
    }

    #[test]
    fn patch_functions_partition() {
        for i in 0..=20 {
            let th = std::f64::consts::PI * i as f64 / 20.0;
            let (hn, hs) = patch_h(th);
            let (kn, ks) = patch_k(th);
            assert!((hn + hs - 1.0).abs() < 1e-15);
            assert!((kn + ks - 1.0).abs() < 1e-15);
        }
        // k_N vanishes to higher order than h_N at theta = pi
        let eps = 1e-3;
        let (hn, _) = patch_h(std::f64::consts::PI - eps);
        let (kn, _) = patch_k(std::f64::consts::PI - eps);
        assert!(kn < hn * hn * 10.0);
    }

    #[test]
    fn projection_idempotent_hermitian_trace() {
        let p = params();
        let bx = SamplingBox::default();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..100 {
            let pt = bx.sample(p, &mut rng);
            let (idem, herm, tr) = projection_residuals(&pt);
            assert!(idem <= 1e-12, "idempotency {idem}");
            assert!(herm <= 1e-12, "hermiticity {herm}");
            assert!(tr <= 1e-12, "trace {tr}");
            assert_eq!(projection_rank(&pt), 4);
        }
        // near-pole continuity: k factors extend the P/Q blocks by zero
        for th in [1e-9, std::f64::consts::PI - 1e-9] {
            let pt = Point { chart: crate::geometry::Chart::N, r: 2.0, theta: th, phi: 0.3, psi: 0.0 };
            let (idem, herm, tr) = projection_residuals(&pt);
            assert!(idem <= 1e-12 && herm <= 1e-12 && tr <= 1e-12);
        }
        // exact pole: p = diag(1_4, 0)
        let pole = Point { chart: crate::geometry::Chart::N, r: 2.0, theta: 0.0, phi: 0.0, psi: 0.0 };
        let m = projection_matrix(&pole);
        for i in 0..4 {
            assert_eq!(m[i][i], c(1.0, 0.0));
            assert_eq!(m[i + 4][i + 4], ZC);
            assert_eq!(m[i][i + 4], ZC);
        }
    }

    #[test]
    fn plain_block_variant_is_idempotent_but_not_hermitian() {
        let pt = Point::n(2.0, 1.1, 0.7, 0.0);
        let m = projection_matrix_plain_blocks(&pt);
        let idem = max_abs8(&sub8(&matmul8(&m, &m), &m));
        assert!(idem <= 1e-14);
        let herm = max_abs8(&sub8(&crate::linalg::adjoint8(&m), &m));
        assert!(herm > 1e-2);
        let tr = (crate::linalg::trace8(&m) - c(4.0, 0.0)).norm();
        assert!(tr <= 1e-14);
    }

    #[test]
    fn roundtrip_residual_vanishes() {
        let p = params();
        let fields = corpus(p, 42, 3);
        let bx = SamplingBox::default();
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        for f in &fields {
            for _ in 0..10 {
                let pt = bx.sample(p, &mut rng);
                let pair = section_from_n(&pt, f.eval(&pt)).unwrap();
                let resid = module_roundtrip(&pair, &pt, 1e-9).unwrap();
                assert!(resid <= 1e-10, "roundtrip {resid}");
            }
        }
        // zero section
        let pt = Point::n(2.0, 1.0, 0.1, 0.0);
        let pair = SectionPair { on_n: [ZC; 4], on_s: [ZC; 4] };
        assert_eq!(module_roundtrip(&pair, &pt, 1e-9).unwrap(), 0.0);
        // inconsistent components are rejected
        let bad = SectionPair { on_n: [c(1.0, 0.0); 4], on_s: [c(1.0, 0.0); 4] };
        assert!(matches!(
            module_roundtrip(&bad, &pt, 1e-9),
            Err(NcehError::InconsistentSection { .. })
        ));
    }

    #[test]
    fn s_supported_section_has_vanishing_n_weight_at_south_pole() {
        // near theta = 0, k_S = 0: the chart-S coefficients vanish there
        let pt = Point::n(2.0, 1e-6, 0.4, 0.0);
        let (_, ks) = patch_k(pt.theta);
        assert!(ks < 1e-12);
    }

    #[test]
    fn deformed_projection_idempotent_and_central_for_invariant_functions() {
        let p = params();
        for theta in [0.0, 0.25, std::f64::consts::FRAC_1_SQRT_2] {
            let resid = star_idempotency_residual(p, theta, 9);
            assert!(resid <= 1e-12, "star idempotency {resid} at theta {theta}");
        }
        // (0,0)-mode functions commute with every entry exactly
        let f = ModeFunction::single(Mode::zero(), c(0.3, 0.8), Profile::rtrig(-1, 0, 1, 0));
        let pm = projection_mode_matrix();
        for row in &pm {
            for entry in row {
                let lhs = f.star(entry, 0.37);
                let rhs = entry.star(&f, 0.37);
                assert!(lhs.sub(&rhs).max_coeff_abs() == 0.0);
            }
        }
    }
}
