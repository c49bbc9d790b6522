//! Cosphere quadrature of the order `-4` symbol density and the
//! residue/trace consistency checks.

use crate::errors::NcehError;
use crate::geometry::{metric_inverse, volume_density, ManifoldParams, Point, SamplingBox};
use crate::modealg::{Atom, F64Key, Mode, ModeFunction, Profile};
use crate::quad::{composite_gl, gl_on, torus_nodes};
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

#[derive(Clone, Debug, Serialize)]
pub struct ResidueReport {
    pub kappa: f64,
    pub functions: Vec<FunctionRow>,
    pub density_check: DensityCheck,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FunctionRow {
    pub label: String,
    pub integral: f64,
    pub raw_residue: f64,
    pub normalized_residue: f64,
    pub residue_over_integral: f64,
    pub dixmier_value: f64,
    pub trace_lhs: f64,
    pub trace_rhs: f64,
    pub trace_relerr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityCheck {
    pub point: [f64; 4],
    pub quadrature: f64,
    pub closed_form: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug)]
pub struct ResidueSettings {
    pub sphere_order: usize,
    pub r_order: usize,
    pub r_panels: usize,
    pub theta_order: usize,
    pub theta_panels: usize,
    pub tail_tol: f64,
}

impl Default for ResidueSettings {
    fn default() -> Self {
        ResidueSettings {
            sphere_order: 24,
            r_order: 20,
            r_panels: 5,
            theta_order: 20,
            theta_panels: 3,
            tail_tol: 1e-8,
        }
    }
}

fn integration_box(params: ManifoldParams, f: &ModeFunction) -> (f64, f64) {
    let bx = SamplingBox::default();
    let (rlo, rhi) = bx.r_range(params);
    match f.radial_support_hint() {
        Some(h) => ((params.a + 1e-3).min(rlo), h),
        None => (rlo, rhi),
    }
}

/// `int f dVol`: only the `(0,0)` mode survives the torus average, so the
/// quadrature is two-dimensional times `(2 pi)^2`.
pub fn integral(params: ManifoldParams, f: &ModeFunction, set: &ResidueSettings) -> Result<f64> {
    let inv = f.invariant_part();
    if inv.is_zero() {
        return Ok(0.0);
    }
    let (rlo, rhi) = integration_box(params, f);
    let (rs, rw) = composite_gl(set.r_order, rlo, rhi, set.r_panels);
    let (ts, tw) = composite_gl(set.theta_order, 1e-9, PI - 1e-9, set.theta_panels);
    let mut acc = 0.0;
    let mut tail = 0.0;
    let tail_lo = rhi - (rhi - rlo) / set.r_panels as f64;
    for (&r, &wr) in rs.iter().zip(&rw) {
        for (&th, &wt) in ts.iter().zip(&tw) {
            let pt = Point { chart: crate::geometry::Chart::N, r, theta: th, phi: 0.0, psi: 0.0 };
            let v = inv.value(params, &pt).re * volume_density(params, &pt);
            acc += wr * wt * v;
            if r >= tail_lo {
                tail += wr * wt * v.abs();
            }
        }
    }
    if f.radial_support_hint().is_none() && tail > set.tail_tol * (acc.abs() + 1.0) {
        return Err(NcehError::NonIntegrable { tail, tol: set.tail_tol });
    }
    Ok(acc * TAU * TAU)
}

/// Direct 4-d tensor quadrature oracle for the integral.
pub fn integral_4d_oracle(params: ManifoldParams, f: &ModeFunction) -> f64 {
    let (rlo, rhi) = integration_box(params, f);
    let (rs, rw) = composite_gl(16, rlo, rhi, 6);
    let (ts, tw) = composite_gl(16, 1e-9, PI - 1e-9, 3);
    let nang = (f.max_mode() as usize + 2).max(4);
    let (phis, wphi) = torus_nodes(nang);
    let (psis, wpsi) = torus_nodes(nang);
    let mut acc = 0.0;
    for (&r, &wr) in rs.iter().zip(&rw) {
        for (&th, &wt) in ts.iter().zip(&tw) {
            for &phi in &phis {
                for &psi in &psis {
                    let pt = Point { chart: crate::geometry::Chart::N, r, theta: th, phi, psi };
                    acc += wr * wt * wphi * wpsi * f.value(params, &pt).re
                        * volume_density(params, &pt);
                }
            }
        }
    }
    acc
}

/// Cosphere integral `int_{|xi|=1} tr[(g^{ij} xi_i xi_j)^{-2} 1_4] dS` by a
/// product Gauss-Legendre rule on the Euclidean 3-sphere.
pub fn cosphere_density(params: ManifoldParams, pt: &Point, order: usize) -> Result<f64> {
    let ginv = metric_inverse(params, pt)?;
    let (x1, w1) = gl_on(order, 0.0, PI);
    let (x2, w2) = gl_on(order, 0.0, PI);
    let (x3, w3) = gl_on(order, 0.0, TAU);
    let mut acc = 0.0;
    for (&c1, &wa) in x1.iter().zip(&w1) {
        let (s1, co1) = c1.sin_cos();
        for (&c2, &wb) in x2.iter().zip(&w2) {
            let (s2, co2) = c2.sin_cos();
            for (&c3, &wc) in x3.iter().zip(&w3) {
                let (s3, co3) = c3.sin_cos();
                let xi = [co1, s1 * co2, s1 * s2 * co3, s1 * s2 * s3];
                let mut q = 0.0;
                for i in 0..4 {
                    for j in 0..4 {
                        q += ginv[i][j] * xi[i] * xi[j];
                    }
                }
                acc += wa * wb * wc * (s1 * s1 * s2) * 4.0 / (q * q);
            }
        }
    }
    if !acc.is_finite() {
        return Err(NcehError::QuadratureDivergence { what: "cosphere integrand blew up".into() });
    }
    Ok(acc)
}

/// Closed form of the same density: `8 pi^2 sqrt(det G)`.
pub fn cosphere_density_closed(params: ManifoldParams, pt: &Point) -> f64 {
    8.0 * PI * PI * volume_density(params, pt)
}

/// Monte-Carlo validation of the cosphere quadrature.
pub fn cosphere_density_mc(
    params: ManifoldParams,
    pt: &Point,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let ginv = metric_inverse(params, pt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    let mut gauss = move || -> f64 {
        // Box-Muller
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    };
    for _ in 0..samples {
        let mut xi = [gauss(), gauss(), gauss(), gauss()];
        let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut xi {
            *x /= norm;
        }
        let mut q = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                q += ginv[i][j] * xi[i] * xi[j];
            }
        }
        acc += 4.0 / (q * q);
    }
    // surface area of S^3 is 2 pi^2
    Ok(acc / samples as f64 * 2.0 * PI * PI)
}

/// The paper-convention calibration: the raw cosphere computation yields
/// `8 pi^2 int f dVol`; the quoted residue is `8 (2 pi)^2 int f dVol`.
pub const KAPPA_STAR: f64 = 4.0;

/// `kappa * int cosphere_density(x) f(x) d^4x` over the coordinate volume.
pub fn wodzicki_residue(
    params: ManifoldParams,
    f: &ModeFunction,
    kappa: f64,
    set: &ResidueSettings,
) -> Result<f64> {
    let inv = f.invariant_part();
    if inv.is_zero() {
        return Ok(0.0);
    }
    let (rlo, rhi) = integration_box(params, f);
    let (rs, rw) = composite_gl(set.r_order, rlo, rhi, set.r_panels);
    let (ts, tw) = composite_gl(set.theta_order, 1e-6, PI - 1e-6, set.theta_panels);
    let mut acc = 0.0;
    for (&r, &wr) in rs.iter().zip(&rw) {
        for (&th, &wt) in ts.iter().zip(&tw) {
            let pt = Point { chart: crate::geometry::Chart::N, r, theta: th, phi: 0.0, psi: 0.0 };
            let dens = cosphere_density(params, &pt, set.sphere_order)?;
            acc += wr * wt * dens * inv.value(params, &pt).re;
        }
    }
    Ok(kappa * acc * TAU * TAU)
}

/// Connes trace-theorem consistency: `Wres / (4 (2 pi)^4)` against
/// `(2/(2 pi)^2) int f dVol`; returns `(lhs, rhs, relerr)`.
pub fn trace_theorem_consistency(
    params: ManifoldParams,
    f: &ModeFunction,
    set: &ResidueSettings,
) -> Result<(f64, f64, f64)> {
    let wres = wodzicki_residue(params, f, KAPPA_STAR, set)?;
    let lhs = wres / (4.0 * TAU.powi(4));
    let rhs = 2.0 / (TAU * TAU) * integral(params, f, set)?;
    let denom = rhs.abs().max(1e-30);
    Ok((lhs, rhs, (lhs - rhs).abs() / denom))
}

/// Torus-invariant compactly supported test functions.
pub fn residue_corpus() -> Vec<(String, ModeFunction)> {
    let bump = |lo: f64, hi: f64| -> Profile {
        Profile::from_atoms(&[(Atom::Bump(F64Key::new(lo), F64Key::new(hi)), 2)])
    };
    let mk = |label: &str, profile: Profile| {
        (label.to_string(), ModeFunction::single(Mode::zero(), crate::linalg::c(1.0, 0.0), profile))
    };
    vec![
        mk("bump_wide", bump(1.2, 6.0)),
        mk("bump_narrow", bump(2.0, 4.0)),
        mk(
            "bump_sin2",
            bump(1.5, 5.0).product(&Profile::from_atoms(&[(Atom::SinTheta, 4)])),
        ),
        mk(
            "bump_r2",
            bump(1.3, 5.5).product(&Profile::from_atoms(&[(Atom::R, 4)])),
        ),
        mk(
            "bump_shell",
            bump(3.0, 7.0).product(&Profile::from_atoms(&[(Atom::CosTheta, 4)])),
        ),
    ]
}

/// Assemble the residue report for the given scale and corpus.
pub fn residue_report(
    params: ManifoldParams,
    extra: &[(String, ModeFunction)],
    set: &ResidueSettings,
) -> Result<ResidueReport> {
    let probe = Point::n(2.0, std::f64::consts::FRAC_PI_2, 0.0, 0.0);
    let quad = cosphere_density(params, &probe, set.sphere_order)?;
    let closed = cosphere_density_closed(params, &probe);
    let density_check = DensityCheck {
        point: probe.coords(),
        quadrature: quad,
        closed_form: closed,
        relative_error: (quad - closed).abs() / closed,
    };
    let mut functions = Vec::new();
    let mut corpus = residue_corpus();
    corpus.extend(extra.iter().cloned());
    for (label, f) in &corpus {
        let int = integral(params, f, set)?;
        let raw = wodzicki_residue(params, f, 1.0, set)?;
        let norm = raw * KAPPA_STAR;
        let (lhs, rhs, relerr) = trace_theorem_consistency(params, f, set)?;
        functions.push(FunctionRow {
            label: label.clone(),
            integral: int,
            raw_residue: raw,
            normalized_residue: norm,
            residue_over_integral: if int.abs() > 1e-30 { norm / int } else { 0.0 },
            dixmier_value: rhs,
            trace_lhs: lhs,
            trace_rhs: rhs,
            trace_relerr: relerr,
        });
    }
    Ok(ResidueReport {
        kappa: KAPPA_STAR,
        functions,
        density_check,
        notes: vec![
            "raw cosphere residue integrates to 8 pi^2 int f dVol; kappa=4 matches the 8 (2 pi)^2 convention".into(),
            "no eigenvalue-based Dixmier trace is computed; the Dixmier value is reproduced through the trace-theorem identity".into(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ManifoldParams {
        ManifoldParams::new(1.0).unwrap()
    }

    #[test]
    fn pure_mode_integrates_to_zero() {
        let set = ResidueSettings::default();
        let f = ModeFunction::single(
            Mode::new_int(1, 0),
            crate::linalg::c(1.0, 0.0),
            Profile::from_atoms(&[(Atom::Bump(F64Key::new(1.5), F64Key::new(3.0)), 2)]),
        );
        assert_eq!(integral(params(), &f, &set).unwrap(), 0.0);
    }

    #[test]
    fn integral_matches_4d_oracle_and_is_linear() {
        let set = ResidueSettings::default();
        let (_, f) = &residue_corpus()[0];
        let i2 = integral(params(), f, &set).unwrap();
        let i4 = integral_4d_oracle(params(), f);
        assert!((i2 - i4).abs() <= 1e-8 * i2.abs(), "2d {i2} vs 4d {i4}");
        let doubled = integral(params(), &f.scale(crate::linalg::c(2.0, 0.0)), &set).unwrap();
        assert!((doubled - 2.0 * i2).abs() <= 1e-12 * i2.abs());
    }

    #[test]
    fn nonintegrable_constant_rejected() {
        let set = ResidueSettings::default();
        assert!(matches!(
            integral(params(), &ModeFunction::one(), &set),
            Err(NcehError::NonIntegrable { .. })
        ));
    }

    #[test]
    fn cosphere_density_matches_closed_form_and_mc() {
        let p = params();
        let pt = Point::n(2.0, std::f64::consts::FRAC_PI_2, 0.3, 0.0);
        let quad = cosphere_density(p, &pt, 24).unwrap();
        // sqrt(det G) = 1 here, so the density is 8 pi^2
        assert!((quad - 8.0 * PI * PI).abs() <= 1e-6 * quad);
        let closed = cosphere_density_closed(p, &pt);
        assert!((quad - closed).abs() <= 1e-6 * closed);
        let mc = cosphere_density_mc(p, &pt, 1_000_000, 99).unwrap();
        assert!((mc - closed).abs() <= 5e-3 * closed, "MC {mc} vs closed {closed}");
        // Euclidean control: flat metric gives exactly 8 pi^2 (diag metric
        // with unit entries appears at a = 0, r = 2 rescaled): use closed form
        let flat = cosphere_quadric_flat();
        assert!((flat - 8.0 * PI * PI).abs() <= 1e-8 * flat);
    }

    fn cosphere_quadric_flat() -> f64 {
        // unit quadric: integrate 4 (|xi|^2)^{-2} = 4 over the sphere
        let (x1, w1) = gl_on(24, 0.0, PI);
        let (x2, w2) = gl_on(24, 0.0, PI);
        let (x3, w3) = gl_on(24, 0.0, TAU);
        let mut acc = 0.0;
        for (&c1, &wa) in x1.iter().zip(&w1) {
            for (&c2, &wb) in x2.iter().zip(&w2) {
                for (&_c3, &wc) in x3.iter().zip(&w3) {
                    acc += wa * wb * wc * (c1.sin().powi(2) * c2.sin()) * 4.0;
                }
            }
        }
        acc
    }

    #[test]
    fn density_ratio_constant_over_points_and_scales() {
        let set = ResidueSettings::default();
        for &a in &[0.5, 1.0, 2.0] {
            let p = ManifoldParams::new(a).unwrap();
            for (r, th) in [(2.0 * a, 1.0), (3.5 * a, 0.6), (5.0 * a, 2.2)] {
                let pt = Point::n(r, th, 0.4, 1.0);
                let quad = cosphere_density(p, &pt, set.sphere_order).unwrap();
                let ratio = quad / volume_density(p, &pt);
                assert!((ratio - 8.0 * PI * PI).abs() <= 1e-6 * ratio);
            }
        }
    }

    #[test]
    fn residue_proportional_to_integral() {
        let set = ResidueSettings::default();
        let p = params();
        let mut ratios = Vec::new();
        for (label, f) in residue_corpus().iter().take(3) {
            let int = integral(p, f, &set).unwrap();
            let res = wodzicki_residue(p, f, KAPPA_STAR, &set).unwrap();
            let expected = 8.0 * TAU * TAU * int;
            assert!(
                (res - expected).abs() <= 1e-6 * expected.abs(),
                "{label}: res {res} vs 8 (2pi)^2 int {expected}"
            );
            ratios.push(res / int);
        }
        for w in ratios.windows(2) {
            assert!((w[0] - w[1]).abs() <= 1e-6 * w[0].abs());
        }
        // zero function
        assert_eq!(
            wodzicki_residue(p, &ModeFunction::zero(), KAPPA_STAR, &set).unwrap(),
            0.0
        );
    }

    #[test]
    fn trace_theorem_holds() {
        let set = ResidueSettings::default();
        let p = params();
        // constants identity: (1/(4 (2pi)^4)) 8 (2pi)^2 = 2/(2pi)^2
        let lhs_const = 8.0 * TAU * TAU / (4.0 * TAU.powi(4));
        let rhs_const = 2.0 / (TAU * TAU);
        assert!((lhs_const - rhs_const).abs() < 1e-18);
        let (_, f) = &residue_corpus()[1];
        let (lhs, rhs, relerr) = trace_theorem_consistency(p, f, &set).unwrap();
        assert!(relerr <= 1e-5, "lhs {lhs} rhs {rhs} relerr {relerr}");
        // scaling f by 2 scales both sides by 2
        let (l2, r2, _) = trace_theorem_consistency(
            p,
            &f.scale(crate::linalg::c(2.0, 0.0)),
            &set,
        )
        .unwrap();
        assert!((l2 - 2.0 * lhs).abs() <= 1e-9 * l2.abs());
        assert!((r2 - 2.0 * rhs).abs() <= 1e-12 * r2.abs());
    }
}
