//! Gamma matrices, chirality, charge conjugation, spin transition functions
//! and the spin connection in both closed and frame-derived form.

use crate::errors::NcehError;
use crate::frames::{coframe, coframe_jet};
use crate::geometry::{aux_scalars, christoffel_closed, ManifoldParams, Point};
use crate::linalg::{c, matmul4, zero4, C4, M4, ZC};
use crate::Result;

/// The four constant anti-Hermitian gamma matrices; `(gamma^a)^2 = -1`.
#[derive(Clone, Debug)]
pub struct GammaSet {
    pub g: [M4; 4],
}

pub fn gamma_set() -> GammaSet {
    let o = ZC;
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let g1 = [
        [o, o, -one, o],
        [o, o, o, one],
        [one, o, o, o],
        [o, -one, o, o],
    ];
    let g2 = [
        [o, o, -i, o],
        [o, o, o, -i],
        [-i, o, o, o],
        [o, -i, o, o],
    ];
    let g3 = [
        [o, o, o, -one],
        [o, o, -one, o],
        [o, one, o, o],
        [one, o, o, o],
    ];
    let g4 = [
        [o, o, o, -i],
        [o, o, i, o],
        [o, i, o, o],
        [-i, o, o, o],
    ];
    GammaSet { g: [g1, g2, g3, g4] }
}

/// Chirality `chi = gamma^1 gamma^2 gamma^3 gamma^4 = diag(-1,-1,1,1)`.
pub fn chirality() -> M4 {
    let mut m = zero4();
    m[0][0] = c(-1.0, 0.0);
    m[1][1] = c(-1.0, 0.0);
    m[2][2] = c(1.0, 0.0);
    m[3][3] = c(1.0, 0.0);
    m
}

/// Charge conjugation: the antilinear pairing `(a, b) -> (-conj b, conj a)`
/// applied inside each chirality block, i.e. `J = gamma^1 gamma^3 . conj`.
/// Satisfies `J^2 = -1`, `J chi = chi J` and `J gamma^a J^-1 = -gamma^a`.
pub fn charge_conjugation(s: &C4) -> C4 {
    [-s[1].conj(), s[0].conj(), -s[3].conj(), s[2].conj()]
}

/// The constant matrix `B` with `J = B . conj`.
pub fn charge_conjugation_matrix() -> M4 {
    let gs = gamma_set();
    matmul4(&gs.g[0], &gs.g[2])
}

#[derive(Clone, Debug)]
pub struct SpinTransition {
    pub p: M4,
    pub q: M4,
}

/// Diagonal spin transition functions on the overlap.
pub fn spin_transition(pt: &Point) -> Result<SpinTransition> {
    if pt.theta <= 0.0 || pt.theta >= std::f64::consts::PI {
        return Err(NcehError::PoleSingularity { theta: pt.theta, chart: "overlap" });
    }
    let e = num_complex::Complex64::from_polar(1.0, pt.phi);
    let i = c(0.0, 1.0);
    let mut p = zero4();
    p[0][0] = -i * e;
    p[1][1] = i * e.conj();
    p[2][2] = i * e.conj();
    p[3][3] = -i * e;
    let mut q = zero4();
    for k in 0..4 {
        q[k][k] = p[k][k].conj(); // unitary diagonal
    }
    Ok(SpinTransition { p, q })
}

/// Spin connection coefficients `Gt^beta_{i alpha}`, indexed `[i][alpha][beta]`.
pub type SpinConnectionTable = [[[f64; 4]; 4]; 4];

/// Closed coefficient list, antisymmetrized in `(alpha, beta)`.
pub fn spin_connection_closed(params: ManifoldParams, pt: &Point) -> Result<SpinConnectionTable> {
    let aux = aux_scalars(params, pt.r, pt.theta);
    if aux.delta <= 0.0 {
        return Err(NcehError::DegenerateMetric { r: pt.r, a: params.a, what: "Delta^{1/2} in the spin connection" });
    }
    let sq = aux.delta.sqrt();
    let dp = aux.delta_plus;
    let (st, ct) = pt.theta.sin_cos();
    let (sp, cp) = pt.phi.sin_cos();
    let mut t = [[[0.0f64; 4]; 4]; 4];
    // set Gt^beta_{i alpha} together with the antisymmetric partner
    let mut set = |i: usize, alpha: usize, beta: usize, v: f64| {
        t[i][alpha][beta] = v;
        t[i][beta][alpha] = -v;
    };
    set(1, 2, 0, 0.5 * sq * sp);
    set(1, 3, 0, -0.5 * sq * cp);
    set(1, 1, 2, -0.5 * sq * cp);
    set(1, 1, 3, -0.5 * sq * sp);
    set(2, 2, 0, -0.5 * sq * st * cp);
    set(2, 3, 0, -0.5 * sq * st * sp);
    set(2, 1, 0, -1.0 - 0.5 * dp * ct);
    set(2, 1, 2, -0.5 * sq * st * sp);
    set(2, 1, 3, 0.5 * sq * st * cp);
    set(2, 2, 3, -0.5 * dp * ct);
    set(3, 1, 0, 0.5 * aux.delta);
    set(3, 2, 3, -0.5 * dp);
    Ok(t)
}

/// Frame-derived spin connection
/// `Gt^beta_{i alpha} = ht^j_alpha (h^beta_k Gamma^k_{ij} - d_i h^beta_j)`;
/// the oracle for the closed list.
pub fn spin_connection_from_frame(
    params: ManifoldParams,
    pt: &Point,
) -> Result<SpinConnectionTable> {
    let hj = coframe_jet(params, pt)?;
    let cf = coframe(params, pt)?;
    let gamma = christoffel_closed(params, pt)?;
    let mut t = [[[0.0f64; 4]; 4]; 4];
    for i in 0..4 {
        for alpha in 0..4 {
            for beta in 0..4 {
                let mut v = 0.0;
                for j in 0..4 {
                    let mut inner = -hj[beta][j].g[i];
                    for k in 0..4 {
                        inner += hj[beta][k].v * gamma[k][i][j];
                    }
                    v += cf.hinv[j][alpha] * inner;
                }
                t[i][alpha][beta] = v;
            }
        }
    }
    Ok(t)
}

/// `omega_i = 1/4 Gt^beta_{i alpha} gamma^alpha gamma_beta`.
pub fn omega(params: ManifoldParams, pt: &Point, i: usize) -> Result<M4> {
    let t = spin_connection_closed(params, pt)?;
    Ok(omega_from_table(&t, i))
}

pub fn omega_from_table(t: &SpinConnectionTable, i: usize) -> M4 {
    let gs = gamma_set();
    let mut w = zero4();
    for alpha in 0..4 {
        for beta in 0..4 {
            let coeff = t[i][alpha][beta];
            if coeff != 0.0 {
                let prod = matmul4(&gs.g[alpha], &gs.g[beta]);
                for a in 0..4 {
                    for b in 0..4 {
                        w[a][b] += prod[a][b] * c(0.25 * coeff, 0.0);
                    }
                }
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::cotangent_transition;
    use crate::geometry::SamplingBox;
    use crate::linalg::{add4, eye4, max_abs4, scale4, sub4, trace4, vec_norm, vec_sub};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> ManifoldParams {
        ManifoldParams::new(1.0).unwrap()
    }

    fn rand_spinor<R: Rng>(rng: &mut R) -> C4 {
        let mut s = [ZC; 4];
        for e in &mut s {
            *e = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        s
    }

    #[test]
    fn clifford_relations_exact() {
        let gs = gamma_set();
        for a in 0..4 {
            for b in 0..4 {
                let anti = add4(&matmul4(&gs.g[a], &gs.g[b]), &matmul4(&gs.g[b], &gs.g[a]));
                let expected = if a == b { scale4(&eye4(), c(-2.0, 0.0)) } else { zero4() };
                assert!(max_abs4(&sub4(&anti, &expected)) == 0.0);
            }
        }
        // each gamma is anti-Hermitian
        for a in 0..4 {
            let dagger = crate::linalg::adjoint4(&gs.g[a]);
            assert!(max_abs4(&add4(&dagger, &gs.g[a])) == 0.0);
        }
    }

    #[test]
    fn chirality_identities() {
        let gs = gamma_set();
        let prod = matmul4(&matmul4(&gs.g[0], &gs.g[1]), &matmul4(&gs.g[2], &gs.g[3]));
        assert!(max_abs4(&sub4(&prod, &chirality())) == 0.0);
        let chi2 = matmul4(&chirality(), &chirality());
        assert!(max_abs4(&sub4(&chi2, &eye4())) == 0.0);
        for a in 0..4 {
            let lhs = matmul4(&chirality(), &gs.g[a]);
            let rhs = scale4(&matmul4(&gs.g[a], &chirality()), c(-1.0, 0.0));
            assert!(max_abs4(&sub4(&lhs, &rhs)) == 0.0);
        }
    }

    #[test]
    fn spin_transition_values_and_cocycle() {
        let pt = Point::n(2.0, 1.2, 0.0, 0.3);
        let st = spin_transition(&pt).unwrap();
        // phi = 0: P = diag(-i, i, i, -i)
        for (k, sign) in [(0, -1.0), (1, 1.0), (2, 1.0), (3, -1.0)] {
            assert!((st.p[k][k] - c(0.0, sign)).norm() < 1e-15);
        }
        let prod = matmul4(&st.p, &st.q);
        assert!(max_abs4(&sub4(&prod, &eye4())) < 1e-15);
        // double cover: P(phi + pi) = -P(phi)
        let pt2 = pt.shifted(std::f64::consts::PI, 0.0);
        let st2 = spin_transition(&pt2).unwrap();
        assert!(max_abs4(&add4(&st2.p, &st.p)) < 1e-12);
    }

    #[test]
    fn conjugation_by_q_implements_cotangent_transition() {
        let gs = gamma_set();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let pt = Point::n(2.0, 1.0, rng.gen_range(0.0..std::f64::consts::TAU), 0.0);
            let st = spin_transition(&pt).unwrap();
            let f = cotangent_transition(&pt).unwrap();
            for alpha in 0..4 {
                let lhs = matmul4(&matmul4(&st.q, &gs.g[alpha]), &st.p);
                let mut rhs = zero4();
                for beta in 0..4 {
                    if f.f_sn[alpha][beta] != 0.0 {
                        rhs = add4(&rhs, &scale4(&gs.g[beta], c(f.f_sn[alpha][beta], 0.0)));
                    }
                }
                assert!(max_abs4(&sub4(&lhs, &rhs)) <= 1e-14);
            }
        }
    }

    #[test]
    fn charge_conjugation_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let chi = chirality();
        for _ in 0..20 {
            let s = rand_spinor(&mut rng);
            let jj = charge_conjugation(&charge_conjugation(&s));
            let minus = [-s[0], -s[1], -s[2], -s[3]];
            assert!(vec_norm(&vec_sub(&jj, &minus)) < 1e-15);
            // antilinearity
            let i = c(0.0, 1.0);
            let jis = charge_conjugation(&[s[0] * i, s[1] * i, s[2] * i, s[3] * i]);
            let ijs: C4 = charge_conjugation(&s).map(|v| v * (-i));
            assert!(vec_norm(&vec_sub(&jis, &ijs)) < 1e-15);
            // J chi = chi J
            let chis = crate::linalg::matvec4(&chi, &s);
            let jchi = charge_conjugation(&chis);
            let chij = crate::linalg::matvec4(&chi, &charge_conjugation(&s));
            assert!(vec_norm(&vec_sub(&jchi, &chij)) < 1e-15);
        }
    }

    #[test]
    fn conjugation_matrix_flips_gammas() {
        let gs = gamma_set();
        let b = charge_conjugation_matrix();
        let binv = crate::linalg::inverse4(&b).unwrap();
        for a in 0..4 {
            let mut gbar = zero4();
            for i in 0..4 {
                for j in 0..4 {
                    gbar[i][j] = gs.g[a][i][j].conj();
                }
            }
            let lhs = matmul4(&matmul4(&b, &gbar), &binv);
            assert!(max_abs4(&add4(&lhs, &gs.g[a])) < 1e-15);
        }
    }

    #[test]
    fn spin_connection_examples() {
        let p = params();
        // a=1, r=2, phi=pi/2: Gt^1_{2,3} = 1/2 sqrt(15/16)
        let pt = Point::n(2.0, 0.9, std::f64::consts::FRAC_PI_2, 0.0);
        let t = spin_connection_closed(p, &pt).unwrap();
        assert!((t[1][2][0] - 0.5 * (15.0f64 / 16.0).sqrt()).abs() < 1e-13);
        assert!((t[3][1][0] - 15.0 / 32.0).abs() < 1e-15);
        // antisymmetry pairs
        assert!((t[1][2][0] + t[1][0][2]).abs() == 0.0);
    }

    #[test]
    fn frame_oracle_matches_closed_list() {
        let p = params();
        let bx = SamplingBox::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let pt = bx.sample(p, &mut rng);
            let closed = spin_connection_closed(p, &pt).unwrap();
            let derived = spin_connection_from_frame(p, &pt).unwrap();
            for i in 0..4 {
                for alpha in 0..4 {
                    for beta in 0..4 {
                        assert!(
                            (closed[i][alpha][beta] - derived[i][alpha][beta]).abs() <= 1e-9,
                            "Gt^{}_{},{} closed {} derived {}",
                            beta + 1,
                            i + 1,
                            alpha + 1,
                            closed[i][alpha][beta],
                            derived[i][alpha][beta]
                        );
                        assert!(
                            (derived[i][alpha][beta] + derived[i][beta][alpha]).abs() <= 1e-9
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn conifold_limit_keeps_angular_coefficients() {
        // a -> 0: Delta -> 1 and the purely angular entries survive
        let p = ManifoldParams::new(1e-6).unwrap();
        let pt = Point::n(1.5, 0.8, 0.3, 0.0);
        let t = spin_connection_closed(p, &pt).unwrap();
        let (st, ct) = pt.theta.sin_cos();
        let (sp, cp) = pt.phi.sin_cos();
        assert!((t[1][2][0] - 0.5 * sp).abs() < 1e-12);
        assert!((t[2][1][0] + 1.0 + 0.5 * ct).abs() < 1e-12);
        assert!((t[2][2][0] + 0.5 * st * cp).abs() < 1e-12);
        let derived = spin_connection_from_frame(p, &pt).unwrap();
        assert!((derived[1][2][0] - t[1][2][0]).abs() < 1e-9);
    }

    #[test]
    fn omega_properties() {
        let p = params();
        let bx = SamplingBox::default();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let pt = bx.sample(p, &mut rng);
            let w1 = omega(p, &pt, 0).unwrap();
            assert!(max_abs4(&w1) == 0.0, "omega_r vanishes");
            for i in 1..4 {
                let w = omega(p, &pt, i).unwrap();
                assert!(trace4(&w).norm() <= 1e-13);
                let dagger = crate::linalg::adjoint4(&w);
                assert!(max_abs4(&add4(&dagger, &w)) <= 1e-13, "omega anti-Hermitian");
            }
        }
    }
}
