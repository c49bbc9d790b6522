//! The verification suite behind `nceh verify`, plus the table and residue
//! commands.

use crate::config::RunConfig;
use crate::dirac::{
    apply_dirac, apply_dirac_fd, clifford_of_df, dirac_j_commutator, dirac_v_commutator,
    multiplier_commutator, symbol_d_squared, symbol_l,
};
use crate::fields::{corpus, MultipliedField, SpinorField};
use crate::frames::{coframe, cotangent_transition, matmul_real4, max_abs_real4, sub_real4};
use crate::geometry::{
    christoffel_closed, christoffel_from_metric, det_metric_closed, killing_check, max_abs, metric,
    ricci, KillingDirection, ManifoldParams, Point, SamplingBox,
};
use crate::hochschild::{
    boundary, chain_is_zero, cycle_c0, cycle_c_theta, expr_vs_constant, represent_bimod,
    represent_pi_d, BimodElem,
};
use crate::linalg::{c, matmul4, matvec4, max_abs4, sub4, unitarity_defect, vec_norm, vec_scale, vec_sub};
use crate::modealg::{
    local_unit, max_abs_diff_on_grid, mode_function_from_json, oscillatory_product, seminorm_q,
    sigma, sobolev_norm, spectral_decompose, Atom, F64Key, Mode, ModeFunction, ModeTermJson,
    NormSettings, OscillatorySettings, Profile, TorusSamples,
};
use crate::opalg::{dirac_commutator, left_rep, right_rep, OperatorExpr};
use crate::projmod::{
    module_roundtrip, projection_rank, projection_residuals, section_from_n,
    star_idempotency_residual,
};
use crate::report::{Check, Report};
use crate::residue::{
    cosphere_density, cosphere_density_closed, integral, integral_4d_oracle, residue_corpus,
    residue_report, trace_theorem_consistency, wodzicki_residue, ResidueSettings, KAPPA_STAR,
};
use crate::spinbundle::{
    charge_conjugation, chirality, gamma_set, spin_connection_closed, spin_connection_from_frame,
    spin_transition,
};
use crate::transport::{a_matrix, transport_phi, transport_psi, v_operator, TorusDirection};
use crate::{NcehError, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Honor `NCEH_THREADS` as a cap on suite parallelism.
pub fn init_thread_pool() {
    if let Ok(v) = std::env::var("NCEH_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
}

fn suite_residue_settings() -> ResidueSettings {
    ResidueSettings {
        sphere_order: 24,
        r_order: 16,
        r_panels: 4,
        theta_order: 16,
        theta_panels: 2,
        tail_tol: 1e-8,
    }
}

fn sample_points(cfg: &RunConfig, n: usize, salt: u64) -> Vec<Point> {
    let params = ManifoldParams::new(cfg.a).expect("validated");
    let bx = SamplingBox::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(salt));
    (0..n).map(|_| bx.sample(params, &mut rng)).collect()
}

fn rand_mode_fn(rng: &mut ChaCha8Rng, nterms: usize, maxmode: i32) -> ModeFunction {
    let mut f = ModeFunction::zero();
    for _ in 0..nterms {
        let m = rng.gen_range(-maxmode..=maxmode);
        let n = rng.gen_range(-maxmode..=maxmode);
        let coeff = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let profile =
            Profile::rtrig(rng.gen_range(-2..0), 0, rng.gen_range(0..2), rng.gen_range(0..2));
        f = f.add(&ModeFunction::single(Mode::new_int(m, n), coeff, profile));
    }
    f
}

type CheckFn = Box<dyn Fn(&RunConfig) -> Check + Sync + Send>;

fn check_list(theta_is_zero: bool) -> Vec<(&'static str, CheckFn)> {
    let mut list: Vec<(&'static str, CheckFn)> = Vec::new();
    macro_rules! push {
        ($id:expr, $f:expr) => {
            list.push(($id, Box::new($f)));
        };
    }

    // ---------------------------------------------------------------- geometry
    push!("geometry.metric.printed", |cfg: &RunConfig| {
        let p = ManifoldParams::new(1.0).unwrap();
        let pt = Point::n(2.0, FRAC_PI_2, 0.3, 1.1);
        let g = metric(p, &pt).unwrap().g;
        let mut resid: f64 = (g[0][0] - 16.0 / 15.0).abs();
        resid = resid.max((g[1][1] - 1.0).abs());
        resid = resid.max((g[2][2] - 1.0).abs());
        resid = resid.max((g[3][3] - 15.0 / 16.0).abs());
        resid = resid.max(g[2][3].abs());
        let p0 = ManifoldParams::new(0.0).unwrap();
        let g0 = metric(p0, &Point::n(1.0, FRAC_PI_2, 0.0, 0.0)).unwrap().g;
        resid = resid.max((g0[0][0] - 1.0).abs());
        for k in 1..4 {
            resid = resid.max((g0[k][k] - 0.25).abs());
        }
        Check::new("geometry.metric.printed", "Eq. (2)", resid, cfg.tol("coefficient"))
    });

    push!("geometry.metric.determinant", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let mut worst = 0.0f64;
        for pt in sample_points(cfg, 100, 1) {
            let g = metric(p, &pt).unwrap().g;
            let blk = g[2][2] * g[3][3] - g[2][3] * g[3][2];
            let det = g[0][0] * g[1][1] * blk;
            let expect = det_metric_closed(&pt);
            worst = worst.max((det - expect).abs() / expect.abs());
        }
        Check::new("geometry.metric.determinant", "Eq. (2)", worst, cfg.tol("coefficient"))
    });

    push!("geometry.christoffel.oracle", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let mut worst = 0.0f64;
        for pt in sample_points(cfg, 100, 2) {
            let closed = christoffel_closed(p, &pt).unwrap();
            let oracle = christoffel_from_metric(p, &pt).unwrap();
            for k in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        worst = worst.max((closed[k][i][j] - oracle[k][i][j]).abs());
                    }
                }
            }
        }
        Check::new("geometry.christoffel.oracle", "Eq. (3)", worst, cfg.tol("exact_deriv"))
    });

    push!("geometry.metric.compatibility", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let mut worst = 0.0f64;
        for pt in sample_points(cfg, 30, 3) {
            let gj = crate::geometry::metric_jet(p, &pt);
            let gamma = christoffel_closed(p, &pt).unwrap();
            for k in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        let mut v = gj[i][j].g[k];
                        for l in 0..4 {
                            v -= gamma[l][k][i] * gj[l][j].v + gamma[l][k][j] * gj[i][l].v;
                        }
                        worst = worst.max(v.abs());
                    }
                }
            }
        }
        Check::new("geometry.metric.compatibility", "Eq. (3)", worst, cfg.tol("exact_deriv"))
    });

    push!("geometry.ricci_flat", |cfg: &RunConfig| {
        let mut worst = 0.0f64;
        for (k, a) in [0.5, 1.0, 2.0].into_iter().enumerate() {
            let p = ManifoldParams::new(a).unwrap();
            let bx = SamplingBox::default();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed + 40 + k as u64);
            for _ in 0..50 {
                let pt = bx.sample(p, &mut rng);
                worst = worst.max(max_abs(&ricci(p, &pt).unwrap()));
            }
        }
        Check::new("geometry.ricci_flat", "2.1", worst, cfg.tol("curvature"))
    });

    push!("geometry.killing", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let mut worst = 0.0f64;
        let mut control = f64::INFINITY;
        for pt in sample_points(cfg, 20, 4) {
            worst = worst.max(killing_check(p, &pt, KillingDirection::Phi).unwrap());
            worst = worst.max(killing_check(p, &pt, KillingDirection::Psi).unwrap());
            control = control.min(killing_check(p, &pt, KillingDirection::RadialControl).unwrap());
        }
        if control < 1e-6 {
            worst = f64::INFINITY; // the negative control must not vanish
        }
        Check::new("geometry.killing", "2.1", worst, cfg.tol("killing"))
    });

    // ------------------------------------------------------------------ frames
    push!("frames.orthonormal", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let mut worst = 0.0f64;
        for pt in sample_points(cfg, 50, 5) {
            let cf = coframe(p, &pt).unwrap();
            let g = metric(p, &pt).unwrap().g;
            let mut ht = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    ht[i][j] = cf.h[j][i];
                }
            }
            worst = worst.max(max_abs_real4(&sub_real4(&matmul_real4(&ht, &cf.h), &g)));
        }
        Check::new("frames.orthonormal", "Eq. (matrixH)", worst, cfg.tol("frame"))
    });

    push!("frames.inverse", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let mut worst = 0.0f64;
        let mut eye = [[0.0; 4]; 4];
        for i in 0..4 {
            eye[i][i] = 1.0;
        }
        for pt in sample_points(cfg, 30, 6) {
            let cf = coframe(p, &pt).unwrap();
            worst = worst.max(max_abs_real4(&sub_real4(&matmul_real4(&cf.h, &cf.hinv), &eye)));
            // the printed chart-N closed form agrees with the constructed one
            let printed = crate::frames::hinv_closed_n(p, &pt);
            worst = worst.max(max_abs_real4(&sub_real4(&printed, &cf.hinv)));
        }
        Check::new("frames.inverse", "Eq. (matrixH1)", worst, cfg.tol("cocycle"))
    });

    push!("frames.transition", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let mut worst = 0.0f64;
        let mut eye = [[0.0; 4]; 4];
        for i in 0..4 {
            eye[i][i] = 1.0;
        }
        for pt in sample_points(cfg, 30, 7) {
            let f = cotangent_transition(&pt).unwrap();
            worst = worst.max(max_abs_real4(&sub_real4(
                &matmul_real4(&f.f_sn, &f.f_ns),
                &eye,
            )));
            worst = worst.max((crate::frames::det_real4(&f.f_sn) - 1.0).abs());
            let mut pts = pt;
            pts.chart = crate::geometry::Chart::S;
            let hn = coframe(p, &pt).unwrap().h;
            let hs = coframe(p, &pts).unwrap().h;
            worst = worst.max(max_abs_real4(&sub_real4(&matmul_real4(&f.f_sn, &hn), &hs)));
        }
        Check::new("frames.transition", "Eq. (matrix)", worst, cfg.tol("frame"))
    });

    // -------------------------------------------------------------- spinbundle
    push!("spin.clifford", |cfg: &RunConfig| {
        let gs = gamma_set();
        let mut worst = 0.0f64;
        for a in 0..4 {
            for b in 0..4 {
                let anti = crate::linalg::add4(
                    &matmul4(&gs.g[a], &gs.g[b]),
                    &matmul4(&gs.g[b], &gs.g[a]),
                );
                let expect = if a == b {
                    crate::linalg::scale4(&crate::linalg::eye4(), c(-2.0, 0.0))
                } else {
                    crate::linalg::zero4()
                };
                worst = worst.max(max_abs4(&sub4(&anti, &expect)));
            }
        }
        let chi = matmul4(&matmul4(&gs.g[0], &gs.g[1]), &matmul4(&gs.g[2], &gs.g[3]));
        worst = worst.max(max_abs4(&sub4(&chi, &chirality())));
        Check::new("spin.clifford", "Eq. (pauli)", worst, cfg.tol("coefficient"))
    });

    push!("spin.transition", |cfg: &RunConfig| {
        let mut worst = 0.0f64;
        let gs = gamma_set();
        for pt in sample_points(cfg, 20, 8) {
            let st = spin_transition(&pt).unwrap();
            worst = worst.max(max_abs4(&sub4(&matmul4(&st.p, &st.q), &crate::linalg::eye4())));
            // double cover
            let st2 = spin_transition(&pt.shifted(PI, 0.0)).unwrap();
            worst = worst.max(max_abs4(&crate::linalg::add4(&st2.p, &st.p)));
            // conjugation by Q implements F_SN on the gammas
            let f = cotangent_transition(&pt).unwrap();
            for alpha in 0..4 {
                let lhs = matmul4(&matmul4(&st.q, &gs.g[alpha]), &st.p);
                let mut rhs = crate::linalg::zero4();
                for beta in 0..4 {
                    if f.f_sn[alpha][beta] != 0.0 {
                        rhs = crate::linalg::add4(
                            &rhs,
                            &crate::linalg::scale4(&gs.g[beta], c(f.f_sn[alpha][beta], 0.0)),
                        );
                    }
                }
                worst = worst.max(max_abs4(&sub4(&lhs, &rhs)));
            }
        }
        Check::new("spin.transition", "Eq. (qsn)", worst, cfg.tol("cocycle"))
    });

    push!("spin.charge_conjugation", |cfg: &RunConfig| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed + 9);
        let chi = chirality();
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let s: crate::linalg::C4 = std::array::from_fn(|_| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let jj = charge_conjugation(&charge_conjugation(&s));
            for k in 0..4 {
                worst = worst.max((jj[k] + s[k]).norm());
            }
            let jchi = charge_conjugation(&matvec4(&chi, &s));
            let chij = matvec4(&chi, &charge_conjugation(&s));
            worst = worst.max(vec_norm(&vec_sub(&jchi, &chij)));
        }
        Check::new("spin.charge_conjugation", "Eq. (charge)", worst, cfg.tol("coefficient"))
    });

    push!("spin.connection.oracle", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let mut worst = 0.0f64;
        for pt in sample_points(cfg, 50, 10) {
            let closed = spin_connection_closed(p, &pt).unwrap();
            let derived = spin_connection_from_frame(p, &pt).unwrap();
            for i in 0..4 {
                for al in 0..4 {
                    for be in 0..4 {
                        worst = worst.max((closed[i][al][be] - derived[i][al][be]).abs());
                        worst = worst.max((derived[i][al][be] + derived[i][be][al]).abs());
                    }
                }
            }
        }
        Check::new("spin.connection.oracle", "Eq. (Gamma)", worst, cfg.tol("exact_deriv"))
    });

    // ------------------------------------------------------------------- dirac
    push!("dirac.fd_oracle", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let fields = corpus(p, cfg.rng_seed, 10);
        let pts = sample_points(cfg, 3, 11);
        let mut worst = 0.0f64;
        for f in fields.iter().take(4) {
            for pt in &pts {
                let exact = apply_dirac(p, f, pt).unwrap();
                let fd = apply_dirac_fd(p, f, pt).unwrap();
                let scale = 1.0 + vec_norm(&f.eval(pt));
                worst = worst.max(vec_norm(&vec_sub(&exact, &fd)) / scale);
            }
        }
        Check::new("dirac.fd_oracle", "Eq. (Diracx)", worst, 1e-6)
    });

    push!("dirac.chirality", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let fields = corpus(p, cfg.rng_seed, 10);
        let pts = sample_points(cfg, 2, 12);
        let chi = chirality();
        let mut worst = 0.0f64;
        for f in &fields {
            for pt in &pts {
                let dpsi = apply_dirac(p, f, pt).unwrap();
                let chi_d = matvec4(&chi, &dpsi);
                struct ChiF<'a, F: SpinorField>(&'a F);
                impl<F: SpinorField> SpinorField for ChiF<'_, F> {
                    fn eval(&self, pt: &Point) -> crate::linalg::C4 {
                        matvec4(&chirality(), &self.0.eval(pt))
                    }
                    fn d(&self, pt: &Point, i: usize) -> crate::linalg::C4 {
                        matvec4(&chirality(), &self.0.d(pt, i))
                    }
                    fn dd(&self, pt: &Point, i: usize, j: usize) -> crate::linalg::C4 {
                        matvec4(&chirality(), &self.0.dd(pt, i, j))
                    }
                }
                let d_chi = apply_dirac(p, &ChiF(f), pt).unwrap();
                let total = crate::linalg::vec_add(&chi_d, &d_chi);
                let scale = 1.0 + vec_norm(&f.eval(pt));
                worst = worst.max(vec_norm(&total) / scale);
            }
        }
        Check::new("dirac.chirality", "4.1", worst, cfg.tol("dirac"))
    });

    push!("dirac.j_commutator", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let fields = corpus(p, cfg.rng_seed, 10);
        let pts = sample_points(cfg, 2, 13);
        let mut worst = 0.0f64;
        for f in &fields {
            for pt in &pts {
                let scale = 1.0 + vec_norm(&f.eval(pt));
                worst = worst.max(dirac_j_commutator(p, f, pt).unwrap() / scale);
            }
        }
        Check::new("dirac.j_commutator", "2.4", worst, cfg.tol("dirac"))
    });

    push!("dirac.multiplier_commutator", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let fields = corpus(p, cfg.rng_seed, 4);
        let pts = sample_points(cfg, 2, 14);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed + 14);
        let mut worst = 0.0f64;
        for f in fields.iter().take(3) {
            let g = rand_mode_fn(&mut rng, 2, 2);
            for pt in &pts {
                let comm = multiplier_commutator(p, &g, f, pt).unwrap();
                let cdf = clifford_of_df(p, &g, f, pt).unwrap();
                let scale = 1.0 + vec_norm(&f.eval(pt));
                worst = worst.max(vec_norm(&vec_sub(&comm, &cdf)) / scale);
            }
        }
        Check::new("dirac.multiplier_commutator", "5.6", worst, cfg.tol("dirac"))
    });

    push!("dirac.symbol_d_squared", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed + 15);
        let mut worst = 0.0f64;
        for pt in sample_points(cfg, 30, 15) {
            let xi: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let s = symbol_d_squared(p, &pt, &xi).unwrap();
            let lam = s[0][0];
            let diag = crate::linalg::scale4(&crate::linalg::eye4(), lam);
            worst = worst.max(max_abs4(&sub4(&s, &diag)) / (1.0 + lam.norm()));
            let ginv = crate::geometry::metric_inverse(p, &pt).unwrap();
            let mut q = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    q += ginv[i][j] * xi[i] * xi[j];
                }
            }
            worst = worst.max((lam.norm() - q).abs() / (1.0 + q));
        }
        Check::new("dirac.symbol_d_squared", "Eq. (sigmaD2)", worst, 1e-11)
    });

    push!("dirac.symbol_l", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let pt = Point::n(2.0 * cfg.a, 1.1, 0.5, 0.9);
        let f = ModeFunction::phase(1, 0)
            .scale(c(0.7, 0.2))
            .add(&ModeFunction::constant(c(0.3, 0.0)));
        let s = symbol_l(p, &f, 0.0, &pt, &[0.4, -0.2, 0.9, 0.1]).unwrap();
        let fv = f.value(p, &pt);
        let diag = crate::linalg::scale4(&crate::linalg::eye4(), fv);
        let mut worst = max_abs4(&sub4(&s, &diag));
        // xi-independence of the invariant mode
        let inv = ModeFunction::constant(c(0.5, -0.1));
        let s1 = symbol_l(p, &inv, cfg.theta_def, &pt, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let s2 = symbol_l(p, &inv, cfg.theta_def, &pt, &[0.0, 0.7, -2.0, 1.4]).unwrap();
        worst = worst.max(max_abs4(&sub4(&s1, &s2)));
        Check::new("dirac.symbol_l", "Eq. (symlf)", worst, cfg.tol("transport_eval"))
    });

    // --------------------------------------------------------------- transport
    push!("transport.unitarity", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let mut worst = 0.0f64;
        for pt in sample_points(cfg, 20, 16) {
            let u = transport_phi(p, &pt, TAU).unwrap();
            worst = worst.max(unitarity_defect(&u.u));
            let v = transport_psi(p, &pt, TAU).unwrap();
            worst = worst.max(unitarity_defect(&v.u));
        }
        Check::new("transport.unitarity", "Eq. (propagator)", worst, cfg.tol("unitarity"))
    });

    push!("transport.psi_holonomy", |_cfg: &RunConfig| {
        let mut worst = 0.0f64;
        for a in [0.5, 1.0, 2.0] {
            let p = ManifoldParams::new(a).unwrap();
            for r in [1.3 * a, 2.0 * a, 5.0 * a] {
                let pt = Point::n(r, 1.0, 0.0, 0.0);
                let u = transport_psi(p, &pt, TAU).unwrap().u;
                let beta = a.powi(4) / r.powi(4);
                worst = worst.max((u[0][0] - c(-1.0, 0.0)).norm());
                worst = worst.max((u[1][1] - c(-1.0, 0.0)).norm());
                worst = worst.max((u[2][2] - Complex64::from_polar(1.0, -PI * beta)).norm());
                worst = worst.max((u[3][3] - Complex64::from_polar(1.0, PI * beta)).norm());
            }
        }
        Check::new("transport.psi_holonomy", "Eq. (A4)", worst, 1e-10)
    });

    push!("transport.flow", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let pt = Point::n(2.2 * cfg.a, 1.0, 0.4, 0.0);
        let (t1, t2) = (0.7, 1.9);
        let u1 = transport_phi(p, &pt, t1).unwrap().u;
        let u2 = transport_phi(p, &pt.shifted(t1, 0.0), t2).unwrap().u;
        let u12 = transport_phi(p, &pt, t1 + t2).unwrap().u;
        let resid = max_abs4(&sub4(&matmul4(&u2, &u1), &u12));
        Check::new("transport.flow", "Eq. (matrixA)", resid, cfg.tol("unitarity"))
    });

    push!("transport.v_group_law", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let fields = corpus(p, cfg.rng_seed, 2);
        let psi = &fields[0];
        let pts = sample_points(cfg, 2, 17);
        let mut worst = 0.0f64;
        for (r, s) in [
            (Mode::new_int(1, 0), Mode::new_int(0, 1)),
            (Mode::new_int(1, -1), Mode::new_int(0, 2)),
        ] {
            for pt in &pts {
                let vs = v_operator(p, cfg.theta_def, s, psi);
                let vrs = v_operator(p, cfg.theta_def, r, &vs);
                let direct = v_operator(p, cfg.theta_def, r.add(s), psi);
                worst = worst.max(vec_norm(&vec_sub(&vrs.eval(pt), &direct.eval(pt))));
            }
        }
        Check::new("transport.v_group_law", "Eq. (sigmarA)", worst, cfg.tol("transport_eval"))
    });

    push!("transport.v_exchange", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let fields = corpus(p, cfg.rng_seed, 2);
        let psi = &fields[0];
        let pts = sample_points(cfg, 2, 18);
        let mut worst = 0.0f64;
        for (r, s) in [
            (Mode::new_int(1, 0), Mode::new_int(0, 1)),
            (Mode::new_int(2, -1), Mode::new_int(1, 1)),
        ] {
            let h = ModeFunction::single(s, c(0.8, -0.3), Profile::rtrig(-1, 0, 0, 0));
            for pt in &pts {
                let hpsi = MultipliedField { params: p, factor: &h, inner: psi };
                let lhs = v_operator(p, cfg.theta_def, r, &hpsi).eval(pt);
                let v = v_operator(p, cfg.theta_def, r, psi);
                let hv = MultipliedField { params: p, factor: &h, inner: &v };
                let rhs = vec_scale(&hv.eval(pt), sigma(cfg.theta_def, r, s));
                worst = worst.max(vec_norm(&vec_sub(&lhs, &rhs)));
            }
        }
        Check::new("transport.v_exchange", "3.4", worst, cfg.tol("transport_eval"))
    });

    push!("transport.dirac_v_commutator", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let fields = corpus(p, cfg.rng_seed, 2);
        let pts = sample_points(cfg, 2, 19);
        let mut worst = 0.0f64;
        for f in fields.iter().take(2) {
            for pt in &pts {
                let resid =
                    dirac_v_commutator(p, cfg.theta_def, Mode::new_int(1, 0), f, pt).unwrap();
                let scale = 1.0 + vec_norm(&f.eval(pt));
                worst = worst.max(resid / scale);
            }
        }
        Check::new("transport.dirac_v_commutator", "5.6", worst, cfg.tol("dv_commutator"))
    });

    // ----------------------------------------------------------------- modealg
    push!("modealg.spectral_roundtrip", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed + 20);
        let reference = rand_mode_fn(&mut rng, 4, cfg.mode_cutoff.min(3) as i32);
        let r_nodes = vec![1.4 * cfg.a, 2.2 * cfg.a, 3.0 * cfg.a];
        let th_nodes = vec![0.5, 1.1, 2.0];
        let samples = TorusSamples::sample(
            r_nodes.clone(),
            th_nodes.clone(),
            cfg.grid.n_phi.max(9),
            cfg.grid.n_psi.max(9),
            |pt| reference.value(p, pt),
        );
        let dec = spectral_decompose(&samples, cfg.mode_cutoff.max(3)).unwrap();
        let mut worst = 0.0f64;
        let nphi = cfg.grid.n_phi.max(9);
        for &r in &r_nodes {
            for &th in &th_nodes {
                for j in 0..nphi {
                    let pt = Point::n(r, th, TAU * j as f64 / nphi as f64, TAU * (j as f64 + 0.3) / nphi as f64);
                    // decomposition reconstructs exactly on its phi/psi grid;
                    // probe on the phi grid x psi grid
                    let _ = pt;
                }
            }
        }
        let (phis, _) = crate::quad::torus_nodes(nphi);
        let (psis, _) = crate::quad::torus_nodes(cfg.grid.n_psi.max(9));
        for &r in &r_nodes {
            for &th in &th_nodes {
                for &phi in &phis {
                    for &psi in &psis {
                        let pt = Point::n(r, th, phi, psi);
                        worst = worst
                            .max((dec.value(p, &pt) - reference.value(p, &pt)).norm());
                    }
                }
            }
        }
        Check::new("modealg.spectral_roundtrip", "3.3", worst, 1e-10)
    });

    push!("modealg.star_associative", |cfg: &RunConfig| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed + 21);
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let f = rand_mode_fn(&mut rng, 3, 3);
            let g = rand_mode_fn(&mut rng, 3, 3);
            let h = rand_mode_fn(&mut rng, 2, 3);
            let lhs = f.star(&g, cfg.theta_def).star(&h, cfg.theta_def);
            let rhs = f.star(&g.star(&h, cfg.theta_def), cfg.theta_def);
            worst = worst.max(lhs.sub(&rhs).max_coeff_abs());
        }
        Check::new("modealg.star_associative", "Eq. (nc)", worst, cfg.tol("coefficient"))
    });

    push!("modealg.sigma_symmetry", |cfg: &RunConfig| {
        let mut worst = 0.0f64;
        for m1 in -4i32..=4 {
            for n1 in -4i32..=4 {
                for m2 in -2i32..=2 {
                    for n2 in -2i32..=2 {
                        let r = Mode::new_half(m1, n1);
                        let s = Mode::new_half(m2, n2);
                        let d = sigma(cfg.theta_def, r, s) - sigma(cfg.theta_def, s.neg(), r);
                        worst = worst.max(d.norm());
                    }
                }
            }
        }
        Check::new("modealg.sigma_symmetry", "Eq. (form5)", worst, f64::MIN_POSITIVE)
    });

    push!("modealg.oscillatory", |cfg: &RunConfig| {
        let set = OscillatorySettings::default();
        let mut worst = 0.0f64;
        let cut = cfg.mode_cutoff.min(3) as i32;
        for (r, s) in [
            (Mode::new_int(1, 0), Mode::new_int(0, 1)),
            (Mode::new_int(cut, cut), Mode::new_int(-cut, cut.min(2))),
            (Mode::new_int(2, -1), Mode::new_int(1, 1)),
        ] {
            let f = ModeFunction::single(r, c(1.0, 0.0), Profile::one());
            let g = ModeFunction::single(s, c(1.0, 0.0), Profile::one());
            match oscillatory_product(&f, &g, cfg.theta_def, &set) {
                Ok(osc) => {
                    let exact = f.star(&g, cfg.theta_def);
                    worst = worst.max(osc.sub(&exact).max_coeff_abs());
                }
                Err(_) => worst = f64::INFINITY,
            }
        }
        Check::new("modealg.oscillatory", "Eq. (Jdeform)", worst, cfg.tol("oscillatory"))
    });

    push!("modealg.local_units", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let phi3 = local_unit(3);
        let f = ModeFunction::single(
            Mode::new_int(1, -2),
            c(0.4, 0.9),
            Profile::from_atoms(&[(Atom::Bump(F64Key::new(1.2), F64Key::new(2.8)), 2)]),
        );
        let mut worst = 0.0f64;
        for theta in [0.0, cfg.theta_def] {
            worst = worst.max(max_abs_diff_on_grid(p, &phi3.star(&f, theta), &f, 10));
            worst = worst.max(max_abs_diff_on_grid(p, &f.star(&phi3, theta), &f, 10));
        }
        let phi5 = local_unit(5);
        worst = worst.max(max_abs_diff_on_grid(p, &phi3.star(&phi5, cfg.theta_def), &phi3, 10));
        Check::new("modealg.local_units", "Lemma (lemA)", worst, f64::MIN_POSITIVE)
    });

    push!("modealg.involution", |cfg: &RunConfig| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed + 22);
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let f = rand_mode_fn(&mut rng, 3, 2);
            let g = rand_mode_fn(&mut rng, 3, 2);
            let lhs = f.star(&g, cfg.theta_def).involution();
            let rhs = g.involution().star(&f.involution(), cfg.theta_def);
            worst = worst.max(lhs.sub(&rhs).max_coeff_abs());
        }
        Check::new("modealg.involution", "3.4", worst, cfg.tol("coefficient"))
    });

    push!("modealg.sobolev", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let set = NormSettings::default();
        let bump = ModeFunction::single(
            Mode::zero(),
            c(1.0, 0.0),
            Profile::from_atoms(&[(
                Atom::Bump(F64Key::new(1.5 * cfg.a), F64Key::new(3.5 * cfg.a)),
                2,
            )]),
        );
        let h0 = sobolev_norm(p, &bump, 0, &set).unwrap();
        let h1 = sobolev_norm(p, &bump, 1, &set).unwrap();
        let h2 = sobolev_norm(p, &bump, 2, &set).unwrap();
        let resid = if h0 > 0.0 && h0 <= h1 && h1 <= h2 { 0.0 } else { f64::INFINITY };
        Check::new("modealg.sobolev", "Eq. (sob)", resid, f64::MIN_POSITIVE)
    });

    push!("modealg.seminorm", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let one = ModeFunction::one();
        let mut worst = (seminorm_q(p, &one, 0) - 1.0).abs();
        let f = ModeFunction::single(Mode::new_int(1, 0), c(0.0, 2.0), Profile::rtrig(-1, 0, 1, 0));
        let q0 = seminorm_q(p, &f, 0);
        let q1 = seminorm_q(p, &f, 1);
        let q2 = seminorm_q(p, &f, 2);
        if !(q0 <= q1 && q1 <= q2) {
            worst = f64::INFINITY;
        }
        Check::new("modealg.seminorm", "Eq. (Q2)", worst, cfg.tol("coefficient"))
    });

    // ------------------------------------------------------------------- opalg
    push!("opalg.representation", |cfg: &RunConfig| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed + 23);
        let mut worst = 0.0f64;
        for _ in 0..6 {
            let f = rand_mode_fn(&mut rng, 3, 2);
            let g = rand_mode_fn(&mut rng, 3, 2);
            let lhs = left_rep(&f).compose(&left_rep(&g), cfg.theta_def);
            let rhs = left_rep(&f.star(&g, cfg.theta_def));
            worst = worst.max(lhs.sub(&rhs).max_coeff_abs());
        }
        Check::new("opalg.representation", "Eq. (fn)", worst, cfg.tol("coefficient"))
    });

    push!("opalg.representation_on_spinors", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let fields = corpus(p, cfg.rng_seed, 2);
        let psi = &fields[0];
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed + 24);
        let f = rand_mode_fn(&mut rng, 2, 2);
        let g = rand_mode_fn(&mut rng, 2, 2);
        let pts = sample_points(cfg, 2, 24);
        let mut worst = 0.0f64;
        for pt in &pts {
            let lhs = left_rep(&f)
                .compose(&left_rep(&g), cfg.theta_def)
                .evaluate(p, psi, pt, cfg.theta_def)
                .unwrap();
            let rhs = left_rep(&f.star(&g, cfg.theta_def))
                .evaluate(p, psi, pt, cfg.theta_def)
                .unwrap();
            worst = worst.max(vec_norm(&vec_sub(&lhs, &rhs)));
        }
        Check::new(
            "opalg.representation_on_spinors",
            "3.4",
            worst,
            cfg.tol("transport_eval"),
        )
    });

    push!("opalg.commutant", |cfg: &RunConfig| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed + 25);
        let mut worst = 0.0f64;
        for _ in 0..6 {
            let f = rand_mode_fn(&mut rng, 3, 2);
            let h = rand_mode_fn(&mut rng, 3, 2);
            let lf = left_rep(&f);
            let rh = right_rep(&h);
            let comm = lf.compose(&rh, cfg.theta_def).sub(&rh.compose(&lf, cfg.theta_def));
            worst = worst.max(comm.max_coeff_abs());
        }
        Check::new("opalg.commutant", "Eq. (form5)", worst, f64::MIN_POSITIVE)
    });

    push!("opalg.first_order", |cfg: &RunConfig| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed + 26);
        let mut worst = 0.0f64;
        for _ in 0..4 {
            let f = rand_mode_fn(&mut rng, 2, 2);
            let h = rand_mode_fn(&mut rng, 2, 2);
            let dlf = dirac_commutator(&left_rep(&f));
            let rh = right_rep(&h);
            let first = dlf.compose(&rh, cfg.theta_def).sub(&rh.compose(&dlf, cfg.theta_def));
            worst = worst.max(first.max_coeff_abs());
        }
        Check::new("opalg.first_order", "5.5", worst, f64::MIN_POSITIVE)
    });

    push!("opalg.adjoint", |cfg: &RunConfig| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed + 27);
        let mut worst = 0.0f64;
        for _ in 0..6 {
            let f = rand_mode_fn(&mut rng, 3, 2);
            let lhs = left_rep(&f).adjoint(cfg.theta_def);
            let rhs = left_rep(&f.involution());
            worst = worst.max(lhs.sub(&rhs).max_coeff_abs());
        }
        Check::new("opalg.adjoint", "3.4", worst, cfg.tol("coefficient"))
    });

    // ----------------------------------------------------------------- projmod
    push!("projmod.projection", |cfg: &RunConfig| {
        let mut worst = 0.0f64;
        for pt in sample_points(cfg, 100, 28) {
            let (idem, herm, tr) = projection_residuals(&pt);
            worst = worst.max(idem).max(herm).max(tr);
            if projection_rank(&pt) != 4 {
                worst = f64::INFINITY;
            }
        }
        // pole continuity
        for th in [1e-9, PI - 1e-9] {
            let pt = Point { chart: crate::geometry::Chart::N, r: 2.0, theta: th, phi: 0.1, psi: 0.0 };
            let (idem, herm, tr) = projection_residuals(&pt);
            worst = worst.max(idem).max(herm).max(tr);
        }
        Check::new("projmod.projection", "Eq. (projection)", worst, cfg.tol("projection"))
    });

    push!("projmod.roundtrip", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let fields = corpus(p, cfg.rng_seed, 3);
        let pts = sample_points(cfg, 10, 29);
        let mut worst = 0.0f64;
        for f in &fields {
            for pt in &pts {
                let pair = section_from_n(pt, f.eval(pt)).unwrap();
                worst = worst.max(module_roundtrip(&pair, pt, 1e-9).unwrap());
            }
        }
        Check::new("projmod.roundtrip", "Eq. (generate)", worst, cfg.tol("roundtrip"))
    });

    push!("projmod.star_idempotent", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let mut worst = star_idempotency_residual(p, cfg.theta_def, 9);
        worst = worst.max(star_idempotency_residual(p, 0.0, 9));
        Check::new("projmod.star_idempotent", "3.5", worst, cfg.tol("projection"))
    });

    // -------------------------------------------------------------- hochschild
    push!("hochschild.boundary_c0", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let c0 = cycle_c0(p);
        let b = boundary(&c0, 0.0);
        let (_, worst) = chain_is_zero(&b, p, 200, cfg.rng_seed + 30, cfg.tol("chain_zero"));
        Check::new("hochschild.boundary_c0", "Lemma (Hochb)", worst, cfg.tol("chain_zero"))
    });

    push!("hochschild.boundary_c_theta", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let mut worst = 0.0f64;
        for theta in [0.0, 0.25, std::f64::consts::FRAC_1_SQRT_2] {
            let cth = cycle_c_theta(p, theta);
            let b = boundary(&cth, theta);
            let (_, w) = chain_is_zero(&b, p, 200, cfg.rng_seed + 31, cfg.tol("chain_zero"));
            worst = worst.max(w);
        }
        Check::new("hochschild.boundary_c_theta", "5.6", worst, cfg.tol("chain_zero"))
    });

    push!("hochschild.kappa_multiplier", |cfg: &RunConfig| {
        let kappa = BimodElem {
            pairs: vec![
                (
                    ModeFunction::phase_half(1, 0).scale(c(0.5, 0.0)),
                    ModeFunction::phase_half(1, 0),
                ),
                (
                    ModeFunction::phase_half(-1, 0).scale(c(0.5, 0.0)),
                    ModeFunction::phase_half(-1, 0),
                ),
            ],
        };
        let cosphi = ModeFunction::phase(1, 0)
            .scale(c(0.5, 0.0))
            .add(&ModeFunction::phase(-1, 0).scale(c(0.5, 0.0)));
        let op = represent_bimod(&kappa, cfg.theta_def);
        let target = OperatorExpr::multiplier(&cosphi);
        let worst = op.sub(&target).max_coeff_abs();
        Check::new("hochschild.kappa_multiplier", "Lemma (comm)", worst, f64::MIN_POSITIVE)
    });

    push!("hochschild.pi_d_c0", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let c0 = cycle_c0(p);
        let op = represent_pi_d(&c0, 0.0);
        let mut worst = if op.all_shifts_integer() { 0.0 } else { f64::INFINITY };
        let pts = sample_points(cfg, 50, 33);
        worst = worst.max(expr_vs_constant(&op, &chirality(), p, &pts));
        Check::new("hochschild.pi_d_c0", "Prop. (orien)", worst, cfg.tol("orientation"))
    });

    push!("hochschild.pi_d_c_theta", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let pts = sample_points(cfg, 50, 34);
        let mut worst = 0.0f64;
        for theta in [0.0, 0.3] {
            let cth = cycle_c_theta(p, theta);
            let op = represent_pi_d(&cth, theta);
            if !op.all_shifts_integer() {
                worst = f64::INFINITY;
            }
            worst = worst.max(expr_vs_constant(&op, &chirality(), p, &pts));
        }
        Check::new("hochschild.pi_d_c_theta", "5.6", worst, cfg.tol("orientation"))
    });

    // ----------------------------------------------------------------- residue
    push!("residue.cosphere_density", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let mut worst = 0.0f64;
        for pt in sample_points(cfg, 5, 35) {
            let quad = cosphere_density(p, &pt, 24).unwrap();
            let closed = cosphere_density_closed(p, &pt);
            worst = worst.max((quad - closed).abs() / closed);
        }
        Check::new("residue.cosphere_density", "Eq. (sigmaD2)", worst, cfg.tol("cosphere"))
    });

    push!("residue.ratio_f_independent", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let set = suite_residue_settings();
        let rows: Vec<f64> = residue_corpus()
            .par_iter()
            .map(|(_, f)| {
                let int = integral(p, f, &set).unwrap();
                let res = wodzicki_residue(p, f, KAPPA_STAR, &set).unwrap();
                res / int
            })
            .collect();
        let expect = 8.0 * TAU * TAU;
        let mut worst = 0.0f64;
        for r in &rows {
            worst = worst.max((r - expect).abs() / expect);
        }
        Check::new("residue.ratio_f_independent", "Eq. (WresMf1)", worst, cfg.tol("cosphere"))
    });

    push!("residue.ratio_a_independent", |cfg: &RunConfig| {
        let set = suite_residue_settings();
        let (_, f) = &residue_corpus()[1];
        let ratios: Vec<f64> = [0.5, 1.0, 2.0]
            .par_iter()
            .map(|&a| {
                let p = ManifoldParams::new(a).unwrap();
                let int = integral(p, f, &set).unwrap();
                let res = wodzicki_residue(p, f, KAPPA_STAR, &set).unwrap();
                res / int
            })
            .collect();
        let mut worst = 0.0f64;
        for w in ratios.windows(2) {
            worst = worst.max((w[0] - w[1]).abs() / w[0].abs());
        }
        Check::new("residue.ratio_a_independent", "Eq. (WresMf1)", worst, cfg.tol("cosphere"))
    });

    push!("residue.trace_theorem", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let set = suite_residue_settings();
        let mut worst = 0.0f64;
        for (_, f) in residue_corpus().iter().take(3) {
            let (_, _, relerr) = trace_theorem_consistency(p, f, &set).unwrap();
            worst = worst.max(relerr);
        }
        Check::new("residue.trace_theorem", "Eq. (tracethm)", worst, cfg.tol("quadrature"))
    });

    push!("residue.integral_oracle", |cfg: &RunConfig| {
        let p = ManifoldParams::new(cfg.a).unwrap();
        let set = suite_residue_settings();
        let (_, f) = &residue_corpus()[0];
        let i2 = integral(p, f, &set).unwrap();
        let i4 = integral_4d_oracle(p, f);
        let resid = (i2 - i4).abs() / i2.abs();
        Check::new("residue.integral_oracle", "Eq. (DixLf)", resid, 1e-8)
    });

    if theta_is_zero {
        push!("modealg.theta_zero_reduction", |cfg: &RunConfig| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed + 36);
            let f = rand_mode_fn(&mut rng, 3, 2);
            let g = rand_mode_fn(&mut rng, 3, 2);
            let worst = f.star(&g, 0.0).sub(&f.mul_pointwise(&g)).max_coeff_abs();
            Check::new("modealg.theta_zero_reduction", "Eq. (nc)", worst, f64::MIN_POSITIVE)
        });
    }

    list
}

/// Run the whole verification suite.
pub fn cmd_verify(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let checks = check_list(config.theta_def == 0.0);
    let results: Vec<Check> = checks.par_iter().map(|(_, f)| f(config)).collect();
    Ok(Report::new(config.clone(), results))
}

// ---------------------------------------------------------------------------
// tables
// ---------------------------------------------------------------------------

fn table_points(cfg: &RunConfig) -> Vec<Point> {
    let mut pts = vec![Point::n(2.0 * cfg.a, PI / 3.0, 1.0, 0.0)];
    pts.extend(sample_points(cfg, 2, 100));
    pts
}

/// CSV tables comparing closed forms against their oracles.
pub fn cmd_table(config: &RunConfig, what: &str) -> Result<String> {
    config.validate()?;
    let p = ManifoldParams::new(config.a).unwrap();
    let mut out = String::from("r,theta,phi,psi,symbol,closed,oracle,absdiff\n");
    let mut row = |pt: &Point, symbol: &str, closed: f64, oracle: f64| {
        out.push_str(&format!(
            "{:.12},{:.12},{:.12},{:.12},{},{:.15e},{:.15e},{:.3e}\n",
            pt.r,
            pt.theta,
            pt.phi,
            pt.psi,
            symbol,
            closed,
            oracle,
            (closed - oracle).abs()
        ));
    };
    match what {
        "metric" => {
            for pt in table_points(config) {
                let g = metric(p, &pt).unwrap().g;
                let cf = coframe(p, &pt).unwrap();
                let mut ht = [[0.0; 4]; 4];
                for i in 0..4 {
                    for j in 0..4 {
                        ht[i][j] = cf.h[j][i];
                    }
                }
                let htt = matmul_real4(&ht, &cf.h);
                for i in 0..4 {
                    for j in i..4 {
                        if g[i][j] != 0.0 || htt[i][j].abs() > 1e-14 {
                            row(&pt, &format!("g{}{}", i + 1, j + 1), g[i][j], htt[i][j]);
                        }
                    }
                }
            }
        }
        "christoffel" => {
            for pt in table_points(config) {
                let closed = christoffel_closed(p, &pt).unwrap();
                let oracle = christoffel_from_metric(p, &pt).unwrap();
                for k in 0..4 {
                    for i in 0..4 {
                        for j in i..4 {
                            if closed[k][i][j] != 0.0 || oracle[k][i][j].abs() > 1e-12 {
                                row(
                                    &pt,
                                    &format!("Gamma^{}_{}{}", k + 1, i + 1, j + 1),
                                    closed[k][i][j],
                                    oracle[k][i][j],
                                );
                            }
                        }
                    }
                }
            }
        }
        "spin_connection" => {
            for pt in table_points(config) {
                let closed = spin_connection_closed(p, &pt).unwrap();
                let derived = spin_connection_from_frame(p, &pt).unwrap();
                for i in 0..4 {
                    for al in 0..4 {
                        for be in 0..4 {
                            if closed[i][al][be] != 0.0 || derived[i][al][be].abs() > 1e-12 {
                                row(
                                    &pt,
                                    &format!("Gt^{}_{},{}", be + 1, i + 1, al + 1),
                                    closed[i][al][be],
                                    derived[i][al][be],
                                );
                            }
                        }
                    }
                }
            }
        }
        "propagator" => {
            for pt in table_points(config) {
                let closed = transport_psi(p, &pt, TAU).unwrap().u;
                // oracle: RK4 on the constant generator
                let a_of = |_: f64| a_matrix(p, &pt, TorusDirection::Psi).unwrap();
                let mut u = crate::linalg::eye4();
                let n = 2048;
                let h = TAU / n as f64;
                for k in 0..n {
                    crate::transport::rk4_step_pub(&mut u, k as f64 * h, h, &a_of);
                }
                for k in 0..4 {
                    row(
                        &pt,
                        &format!("U_psi[{0}][{0}].re", k + 1),
                        closed[k][k].re,
                        u[k][k].re,
                    );
                    row(
                        &pt,
                        &format!("U_psi[{0}][{0}].im", k + 1),
                        closed[k][k].im,
                        u[k][k].im,
                    );
                }
            }
        }
        other => {
            return Err(NcehError::Config(format!(
                "unknown table selector '{other}' (metric|christoffel|spin_connection|propagator)"
            )))
        }
    }
    Ok(out)
}

/// Residue command: corpus report plus optional custom functions and scale
/// sweep.
pub fn cmd_residue(
    config: &RunConfig,
    custom: Option<&str>,
    a_sweep: Option<&[f64]>,
) -> Result<serde_json::Value> {
    config.validate()?;
    let p = ManifoldParams::new(config.a).unwrap();
    let set = suite_residue_settings();
    let mut extra = Vec::new();
    if let Some(json) = custom {
        let terms: Vec<ModeTermJson> = serde_json::from_str(json)
            .map_err(|e| NcehError::Config(format!("bad custom function JSON: {e}")))?;
        extra.push(("custom".to_string(), mode_function_from_json(&terms)?));
    }
    let report = residue_report(p, &extra, &set)?;
    let mut value = serde_json::to_value(&report).unwrap();
    if let Some(scales) = a_sweep {
        let mut sweep = Vec::new();
        for &a in scales {
            let pa = ManifoldParams::new(a)?;
            let (_, f) = &residue_corpus()[1];
            let int = integral(pa, f, &set)?;
            let res = wodzicki_residue(pa, f, KAPPA_STAR, &set)?;
            sweep.push(serde_json::json!({
                "a": a,
                "residue_over_integral": res / int,
            }));
        }
        value["a_sweep"] = serde_json::Value::Array(sweep);
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_selectors() {
        let cfg = RunConfig::default();
        for what in ["metric", "christoffel", "spin_connection", "propagator"] {
            let csv = cmd_table(&cfg, what).unwrap();
            assert!(csv.lines().count() > 3, "{what} table too short");
        }
        assert!(cmd_table(&cfg, "bogus").is_err());
        // christoffel table carries the printed example value at the default
        // first table point
        let csv = cmd_table(&cfg, "christoffel").unwrap();
        let line = csv.lines().find(|l| l.contains("Gamma^2_12")).unwrap();
        assert!(line.contains("5.000000000000000e-1") || line.contains("5e-1"));
    }
}
