//! Closed-form Riemannian data of the Eguchi-Hanson family with
//! derivative-exact oracles: metric, Christoffel symbols, curvature,
//! volume density and Killing checks.

use crate::errors::NcehError;
use crate::jet::Jet2;
use crate::Result;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ManifoldParams {
    /// Instanton scale; positive except in explicitly flagged conifold-limit
    /// evaluations.
    pub a: f64,
}

impl ManifoldParams {
    pub fn new(a: f64) -> Result<Self> {
        if a < 0.0 || !a.is_finite() {
            return Err(NcehError::Config(format!("instanton scale must be >= 0, got {a}")));
        }
        Ok(ManifoldParams { a })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    N,
    S,
}

/// Chart-tagged point in the angular coordinates `(r, theta, phi, psi)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Point {
    pub chart: Chart,
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub psi: f64,
}

fn wrap_angle(x: f64) -> f64 {
    let mut y = x % TAU;
    if y < 0.0 {
        y += TAU;
    }
    y
}

impl Point {
    pub fn new(chart: Chart, r: f64, theta: f64, phi: f64, psi: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(NcehError::Config(format!("theta = {theta} outside [0, pi]")));
        }
        match chart {
            Chart::N if theta >= std::f64::consts::PI => {
                return Err(NcehError::PoleSingularity { theta, chart: "N" })
            }
            Chart::S if theta <= 0.0 => {
                return Err(NcehError::PoleSingularity { theta, chart: "S" })
            }
            _ => {}
        }
        Ok(Point { chart, r, theta, phi: wrap_angle(phi), psi: wrap_angle(psi) })
    }

    pub fn n(r: f64, theta: f64, phi: f64, psi: f64) -> Self {
        Point::new(Chart::N, r, theta, phi, psi).expect("valid chart-N point")
    }

    /// Same geometric point shifted along the torus directions.
    pub fn shifted(&self, dphi: f64, dpsi: f64) -> Self {
        Point {
            chart: self.chart,
            r: self.r,
            theta: self.theta,
            phi: wrap_angle(self.phi + dphi),
            psi: wrap_angle(self.psi + dpsi),
        }
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.r, self.theta, self.phi, self.psi]
    }
}

/// Interior sampling box used by the verification suites.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SamplingBox {
    pub eps_r_factor: f64,
    pub eps_theta: f64,
    pub r_max_factor: f64,
}

impl Default for SamplingBox {
    fn default() -> Self {
        SamplingBox { eps_r_factor: 0.05, eps_theta: 0.05, r_max_factor: 10.0 }
    }
}

impl SamplingBox {
    pub fn r_range(&self, params: ManifoldParams) -> (f64, f64) {
        let a = if params.a > 0.0 { params.a } else { 1.0 };
        (params.a + self.eps_r_factor * a, self.r_max_factor * a)
    }

    pub fn contains(&self, params: ManifoldParams, pt: &Point) -> bool {
        let (rlo, rhi) = self.r_range(params);
        pt.r >= rlo
            && pt.r <= rhi
            && pt.theta >= self.eps_theta
            && pt.theta <= std::f64::consts::PI - self.eps_theta
    }

    pub fn sample<R: Rng>(&self, params: ManifoldParams, rng: &mut R) -> Point {
        let (rlo, rhi) = self.r_range(params);
        let r = rng.gen_range(rlo..rhi);
        let theta = rng.gen_range(self.eps_theta..std::f64::consts::PI - self.eps_theta);
        let phi = rng.gen_range(0.0..TAU);
        let psi = rng.gen_range(0.0..TAU);
        Point { chart: Chart::N, r, theta, phi, psi }
    }
}

/// Auxiliary radial/angular scalars of the metric.
#[derive(Clone, Copy, Debug)]
pub struct AuxScalars {
    pub delta: f64,
    pub delta_plus: f64,
    pub delta_prime: f64,
    pub rho: f64,
    pub rho_plus: f64,
}

pub fn aux_scalars(params: ManifoldParams, r: f64, theta: f64) -> AuxScalars {
    let a4 = params.a.powi(4);
    let r4 = r.powi(4);
    let c2 = theta.cos().powi(2);
    AuxScalars {
        delta: 1.0 - a4 / r4,
        delta_plus: 1.0 + a4 / r4,
        delta_prime: 4.0 * a4 / r.powi(5),
        rho: (r4 - a4 * c2) / (r * r),
        rho_plus: (r4 + a4 * c2) / (r * r),
    }
}

#[derive(Clone, Debug)]
pub struct MetricTensor {
    /// Coordinate-basis components, ordered `(r, theta, phi, psi)`.
    pub g: [[f64; 4]; 4],
    pub aux: AuxScalars,
}

fn check_nondegenerate(params: ManifoldParams, pt: &Point) -> Result<AuxScalars> {
    let aux = aux_scalars(params, pt.r, pt.theta);
    if pt.r < params.a || aux.delta <= 0.0 {
        return Err(NcehError::DegenerateMetric {
            r: pt.r,
            a: params.a,
            what: "Delta <= 0 makes g_44 degenerate and g_11 singular",
        });
    }
    Ok(aux)
}

/// Metric matrix in jet scalars; slots 0..3 seed `(r, theta, phi, psi)`.
pub fn metric_jet(params: ManifoldParams, pt: &Point) -> [[Jet2; 4]; 4] {
    let a4 = Jet2::c(params.a.powi(4));
    let r = Jet2::var(pt.r, 0);
    let th = Jet2::var(pt.theta, 1);
    let one = Jet2::c(1.0);
    let quarter = Jet2::c(0.25);
    let r2 = r * r;
    let r4 = r2 * r2;
    let delta = one - a4 / r4;
    let cos = th.cos();
    let rho = (r4 - a4 * cos * cos) / r2;
    let z = Jet2::c(0.0);
    let g11 = one / delta;
    let g22 = quarter * r2;
    let g33 = quarter * rho;
    let g34 = quarter * r2 * delta * cos;
    let g44 = quarter * r2 * delta;
    [
        [g11, z, z, z],
        [z, g22, z, z],
        [z, z, g33, g34],
        [z, z, g34, g44],
    ]
}

pub fn metric(params: ManifoldParams, pt: &Point) -> Result<MetricTensor> {
    let aux = check_nondegenerate(params, pt)?;
    let gj = metric_jet(params, pt);
    let mut g = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            g[i][j] = gj[i][j].v;
        }
    }
    Ok(MetricTensor { g, aux })
}

/// Closed-form inverse metric.
pub fn metric_inverse(params: ManifoldParams, pt: &Point) -> Result<[[f64; 4]; 4]> {
    let aux = check_nondegenerate(params, pt)?;
    let r2 = pt.r * pt.r;
    let s2 = pt.theta.sin().powi(2);
    if s2 == 0.0 {
        return Err(NcehError::PoleSingularity { theta: pt.theta, chart: "N" });
    }
    let mut inv = [[0.0; 4]; 4];
    inv[0][0] = aux.delta;
    inv[1][1] = 4.0 / r2;
    inv[2][2] = 4.0 / (r2 * s2);
    inv[2][3] = -4.0 * pt.theta.cos() / (r2 * s2);
    inv[3][2] = inv[2][3];
    inv[3][3] = 4.0 * aux.rho / (aux.delta * r2 * r2 * s2);
    Ok(inv)
}

pub type ChristoffelTable = [[[f64; 4]; 4]; 4];

/// Closed-form Christoffel symbols `Gamma^k_{ij}`, indexed `[k][i][j]`.
pub fn christoffel_closed(params: ManifoldParams, pt: &Point) -> Result<ChristoffelTable> {
    let aux = check_nondegenerate(params, pt)?;
    let AuxScalars { delta, delta_plus, delta_prime, rho_plus, .. } = aux;
    let a4 = params.a.powi(4);
    let r = pt.r;
    let (sin, cos) = pt.theta.sin_cos();
    let mut t = [[[0.0f64; 4]; 4]; 4];
    let mut set = |k: usize, i: usize, j: usize, v: f64| {
        t[k][i][j] = v;
        t[k][j][i] = v;
    };
    set(0, 0, 0, -delta_prime / (2.0 * delta));
    set(0, 1, 1, -r * delta / 4.0);
    set(0, 2, 2, -delta * rho_plus / (4.0 * r));
    set(0, 2, 3, -r * delta_plus * delta * cos / 4.0);
    set(0, 3, 3, -r * delta_plus * delta / 4.0);
    set(1, 0, 1, 1.0 / r);
    set(1, 2, 2, -a4 * (2.0 * theta_sin_cos(sin, cos)) / (2.0 * r.powi(4)));
    set(1, 2, 3, delta * sin / 2.0);
    set(2, 0, 2, 1.0 / r);
    set(2, 1, 2, (cos / sin) * delta_plus / 2.0);
    set(2, 1, 3, -delta / (2.0 * sin));
    set(3, 0, 2, 2.0 * a4 * cos / (r * (r.powi(4) - a4)));
    set(3, 0, 3, delta_plus / (r * delta));
    set(3, 1, 2, -rho_plus / (2.0 * r * r * sin));
    set(3, 1, 3, (cos / sin) * delta / 2.0);
    Ok(t)
}

fn theta_sin_cos(sin: f64, cos: f64) -> f64 {
    sin * cos
}

/// Levi-Civita symbols assembled from exact derivatives of the closed-form
/// metric; the oracle for the closed table.
pub fn christoffel_from_metric(params: ManifoldParams, pt: &Point) -> Result<ChristoffelTable> {
    check_nondegenerate(params, pt)?;
    let gj = metric_jet(params, pt);
    let ginv = metric_inverse(params, pt)?;
    let mut t = [[[0.0f64; 4]; 4]; 4];
    for k in 0..4 {
        for i in 0..4 {
            for j in i..4 {
                let mut s = 0.0;
                for l in 0..4 {
                    let d = gj[j][l].g[i] + gj[i][l].g[j] - gj[i][j].g[l];
                    s += ginv[k][l] * d;
                }
                t[k][i][j] = 0.5 * s;
                t[k][j][i] = t[k][i][j];
            }
        }
    }
    Ok(t)
}

/// `d_m Gamma^k_{ij}` assembled from first and second metric derivatives.
fn christoffel_derivatives(
    params: ManifoldParams,
    pt: &Point,
) -> Result<[[[[f64; 4]; 4]; 4]; 4]> {
    let gj = metric_jet(params, pt);
    let ginv = metric_inverse(params, pt)?;
    // d_m g^{kl} = -g^{ka} (d_m g_{ab}) g^{bl}
    let mut dginv = [[[0.0f64; 4]; 4]; 4]; // [m][k][l]
    for m in 0..4 {
        for k in 0..4 {
            for l in 0..4 {
                let mut s = 0.0;
                for aa in 0..4 {
                    for bb in 0..4 {
                        s -= ginv[k][aa] * gj[aa][bb].g[m] * ginv[bb][l];
                    }
                }
                dginv[m][k][l] = s;
            }
        }
    }
    let mut dg = [[[[0.0f64; 4]; 4]; 4]; 4]; // [m][k][i][j]
    for m in 0..4 {
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let mut s = 0.0;
                    for l in 0..4 {
                        let d1 = gj[j][l].g[i] + gj[i][l].g[j] - gj[i][j].g[l];
                        let d2 = gj[j][l].h[i][m] + gj[i][l].h[j][m] - gj[i][j].h[l][m];
                        s += dginv[m][k][l] * d1 + ginv[k][l] * d2;
                    }
                    dg[m][k][i][j] = 0.5 * s;
                }
            }
        }
    }
    Ok(dg)
}

/// Ricci tensor from the Riemann contraction; vanishes for the family.
pub fn ricci(params: ManifoldParams, pt: &Point) -> Result<[[f64; 4]; 4]> {
    let gamma = christoffel_from_metric(params, pt)?;
    let dgamma = christoffel_derivatives(params, pt)?;
    let mut ric = [[0.0f64; 4]; 4];
    for s in 0..4 {
        for n in 0..4 {
            let mut v = 0.0;
            for m in 0..4 {
                // R^m_{s m n} with R^r_{s m n} = d_m G^r_{ns} - d_n G^r_{ms} + G G - G G
                v += dgamma[m][m][n][s] - dgamma[n][m][m][s];
                for l in 0..4 {
                    v += gamma[m][m][l] * gamma[l][n][s] - gamma[m][n][l] * gamma[l][m][s];
                }
            }
            ric[s][n] = v;
        }
    }
    Ok(ric)
}

pub fn scalar_curvature(params: ManifoldParams, pt: &Point) -> Result<f64> {
    let ric = ricci(params, pt)?;
    let ginv = metric_inverse(params, pt)?;
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            s += ginv[i][j] * ric[i][j];
        }
    }
    Ok(s)
}

/// `sqrt(det G) = r^3 sin(theta) / 8`.
pub fn volume_density(_params: ManifoldParams, pt: &Point) -> f64 {
    pt.r.powi(3) * pt.theta.sin() / 8.0
}

pub fn det_metric_closed(pt: &Point) -> f64 {
    pt.r.powi(6) * pt.theta.sin().powi(2) / 64.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KillingDirection {
    Phi,
    Psi,
    /// Negative control: `d_r` is not Killing.
    RadialControl,
}

/// Max-norm of the Lie derivative of the metric along a coordinate field.
pub fn killing_check(params: ManifoldParams, pt: &Point, dir: KillingDirection) -> Result<f64> {
    check_nondegenerate(params, pt)?;
    let gj = metric_jet(params, pt);
    let slot = match dir {
        KillingDirection::RadialControl => 0,
        KillingDirection::Phi => 2,
        KillingDirection::Psi => 3,
    };
    let mut m = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            m = m.max(gj[i][j].g[slot].abs());
        }
    }
    Ok(m)
}

pub fn max_abs(m: &[[f64; 4]; 4]) -> f64 {
    m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(a: f64) -> ManifoldParams {
        ManifoldParams::new(a).unwrap()
    }

    #[test]
    fn metric_matches_printed_values() {
        // a=1, r=2, theta=pi/2 -> diag(16/15, 1, 1, 15/16), g34 = 0
        let pt = Point::n(2.0, std::f64::consts::FRAC_PI_2, 0.3, 1.1);
        let g = metric(params(1.0), &pt).unwrap().g;
        assert!((g[0][0] - 16.0 / 15.0).abs() < 1e-14);
        assert!((g[1][1] - 1.0).abs() < 1e-14);
        assert!((g[2][2] - 1.0).abs() < 1e-14);
        assert!((g[3][3] - 15.0 / 16.0).abs() < 1e-14);
        assert!(g[2][3].abs() < 1e-14);
        // conifold limit a=0, r=1 -> diag(1, 1/4, 1/4, 1/4)
        let pt0 = Point::n(1.0, std::f64::consts::FRAC_PI_2, 0.0, 0.0);
        let g0 = metric(params(0.0), &pt0).unwrap().g;
        assert!((g0[0][0] - 1.0).abs() < 1e-15);
        for k in 1..4 {
            assert!((g0[k][k] - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn determinant_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &a in &[0.5, 1.0, 2.0] {
            let p = params(a);
            let bx = SamplingBox::default();
            for _ in 0..100 {
                let pt = bx.sample(p, &mut rng);
                let g = metric(p, &pt).unwrap().g;
                let det = det4_real(&g);
                let expected = det_metric_closed(&pt);
                assert!((det - expected).abs() <= 1e-12 * expected.abs());
            }
        }
    }

    fn det4_real(g: &[[f64; 4]; 4]) -> f64 {
        // block diagonal: (r,theta) x (phi,psi)
        let blk = g[2][2] * g[3][3] - g[2][3] * g[3][2];
        g[0][0] * g[1][1] * blk
    }

    #[test]
    fn christoffel_printed_examples() {
        let p = params(1.0);
        let pt = Point::n(2.0, 1.0, 0.4, 0.9);
        let t = christoffel_closed(p, &pt).unwrap();
        assert!((t[1][0][1] - 0.5).abs() < 1e-15);
        assert!((t[0][1][1] + 0.46875).abs() < 1e-15);
        // theta -> 0 limit of Gamma^4_13 = 2 a^4 cos/(r (r^4-a^4)) = 1/15
        let pt0 = Point::n(2.0, 1e-9, 0.0, 0.0);
        let t0 = christoffel_closed(p, &pt0).unwrap();
        assert!((t0[3][0][2] - 1.0 / 15.0).abs() < 1e-9);
    }

    #[test]
    fn closed_table_matches_levi_civita_oracle() {
        let p = params(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bx = SamplingBox::default();
        for _ in 0..50 {
            let pt = bx.sample(p, &mut rng);
            let closed = christoffel_closed(p, &pt).unwrap();
            let oracle = christoffel_from_metric(p, &pt).unwrap();
            for k in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        assert!(
                            (closed[k][i][j] - oracle[k][i][j]).abs() <= 1e-9,
                            "Gamma^{}_{}{} closed {} oracle {} at {:?}",
                            k + 1,
                            i + 1,
                            j + 1,
                            closed[k][i][j],
                            oracle[k][i][j],
                            pt
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn conifold_symbols_lose_a_dependence() {
        let p = params(0.0);
        let pt = Point::n(1.3, 0.8, 0.2, 0.1);
        let t = christoffel_closed(p, &pt).unwrap();
        // a-dependent symbols vanish; polar-coordinate ones survive
        assert!(t[0][0][0].abs() < 1e-15);
        assert!(t[3][0][2].abs() < 1e-15);
        assert!((t[1][0][1] - 1.0 / pt.r).abs() < 1e-15);
        let oracle = christoffel_from_metric(p, &pt).unwrap();
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    assert!((t[k][i][j] - oracle[k][i][j]).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn metric_compatibility() {
        // nabla_k g_{ij} = d_k g_{ij} - G^l_{ki} g_{lj} - G^l_{kj} g_{il} = 0
        let p = params(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bx = SamplingBox::default();
        for _ in 0..20 {
            let pt = bx.sample(p, &mut rng);
            let gj = metric_jet(p, &pt);
            let gamma = christoffel_closed(p, &pt).unwrap();
            for k in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        let mut v = gj[i][j].g[k];
                        for l in 0..4 {
                            v -= gamma[l][k][i] * gj[l][j].v + gamma[l][k][j] * gj[i][l].v;
                        }
                        assert!(v.abs() <= 1e-9, "nabla g residual {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn ricci_flat_for_scale_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &a in &[0.5, 1.0, 2.0] {
            let p = params(a);
            let bx = SamplingBox::default();
            for _ in 0..20 {
                let pt = bx.sample(p, &mut rng);
                let ric = ricci(p, &pt).unwrap();
                assert!(max_abs(&ric) <= 1e-6, "Ricci {} at {:?}", max_abs(&ric), pt);
                let sc = scalar_curvature(p, &pt).unwrap();
                assert!(sc.abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn degenerate_at_bolt() {
        let p = params(1.0);
        let pt = Point { chart: Chart::N, r: 1.0, theta: 1.0, phi: 0.0, psi: 0.0 };
        assert!(matches!(metric(p, &pt), Err(NcehError::DegenerateMetric { .. })));
        assert!(matches!(christoffel_closed(p, &pt), Err(NcehError::DegenerateMetric { .. })));
    }

    #[test]
    fn volume_density_examples() {
        let p = params(1.7);
        let pt = Point::n(2.0, std::f64::consts::FRAC_PI_2, 0.0, 0.0);
        assert!((volume_density(p, &pt) - 1.0).abs() < 1e-15);
        let pt2 = Point::n(2.0, 1e-12, 0.0, 0.0);
        assert!(volume_density(p, &pt2) < 1e-11);
    }

    #[test]
    fn killing_directions() {
        let p = params(1.0);
        let pt = Point::n(2.4, 0.9, 0.3, 4.4);
        assert!(killing_check(p, &pt, KillingDirection::Phi).unwrap() <= 1e-12);
        assert!(killing_check(p, &pt, KillingDirection::Psi).unwrap() <= 1e-12);
        assert!(killing_check(p, &pt, KillingDirection::RadialControl).unwrap() > 1e-3);
    }
}
