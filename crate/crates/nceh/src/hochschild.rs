//! Hochschild chains over the deformed algebra with bimodule coefficients,
//! the boundary operator, the volume cycles and their Dirac representation.

use crate::geometry::{ManifoldParams, Point, SamplingBox};
use crate::linalg::{c, C, M4, ZC};
use crate::modealg::{Atom, Mode, ModeFunction, Profile};
use crate::opalg::{dirac_commutator, left_rep, right_rep, OperatorExpr};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// Element of `A (x) A^op`: a finite sum of `left (x) right` pairs.
#[derive(Clone, Debug, Default)]
pub struct BimodElem {
    pub pairs: Vec<(ModeFunction, ModeFunction)>,
}

impl BimodElem {
    pub fn unit() -> Self {
        BimodElem { pairs: vec![(ModeFunction::one(), ModeFunction::one())] }
    }

    pub fn from_left(f: ModeFunction) -> Self {
        BimodElem { pairs: vec![(f, ModeFunction::one())] }
    }

    pub fn scale(&self, s: C) -> Self {
        BimodElem {
            pairs: self.pairs.iter().map(|(l, r)| (l.scale(s), r.clone())).collect(),
        }
    }

    /// Algebra product: `(a (x) b°)(c (x) d°) = (a x c) (x) (d x b)°`.
    pub fn mul(&self, other: &BimodElem, theta: f64) -> Self {
        let mut pairs = Vec::new();
        for (a, b) in &self.pairs {
            for (cc, d) in &other.pairs {
                pairs.push((a.star(cc, theta), d.star(b, theta)));
            }
        }
        BimodElem { pairs }
    }

    /// Left module action `a' (a (x) b°) = (a' x a) (x) b°`.
    pub fn act_left(&self, f: &ModeFunction, theta: f64) -> Self {
        BimodElem {
            pairs: self.pairs.iter().map(|(l, r)| (f.star(l, theta), r.clone())).collect(),
        }
    }

    /// Right module action `(a (x) b°) a'' = (a x a'') (x) b°`.
    pub fn act_right(&self, f: &ModeFunction, theta: f64) -> Self {
        BimodElem {
            pairs: self.pairs.iter().map(|(l, r)| (l.star(f, theta), r.clone())).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ChainTerm {
    pub coeff: BimodElem,
    pub legs: Vec<ModeFunction>,
}

/// Finite Hochschild chain with `A (x) A^op` coefficients.
#[derive(Clone, Debug, Default)]
pub struct HochschildChain {
    pub degree: usize,
    pub terms: Vec<ChainTerm>,
}

impl HochschildChain {
    pub fn zero(degree: usize) -> Self {
        HochschildChain { degree, terms: Vec::new() }
    }
}

/// Hochschild boundary with the deformed product between adjacent legs and
/// the one-sided bimodule action.
pub fn boundary(chain: &HochschildChain, theta: f64) -> HochschildChain {
    assert!(chain.degree >= 1);
    let n = chain.degree;
    let mut terms = Vec::new();
    for t in &chain.terms {
        // (a0 (x) b0°) a1 (x) a2 ... an
        terms.push(ChainTerm {
            coeff: t.coeff.act_right(&t.legs[0], theta),
            legs: t.legs[1..].to_vec(),
        });
        // interior contractions
        for j in 1..n {
            let sign = if j % 2 == 1 { c(-1.0, 0.0) } else { c(1.0, 0.0) };
            let mut legs = Vec::with_capacity(n - 1);
            legs.extend_from_slice(&t.legs[..j - 1]);
            legs.push(t.legs[j - 1].star(&t.legs[j], theta));
            legs.extend_from_slice(&t.legs[j + 1..]);
            terms.push(ChainTerm { coeff: t.coeff.scale(sign), legs });
        }
        // (-1)^n a_n (a0 (x) b0°) (x) a1 ... a_{n-1}
        let sign = if n % 2 == 1 { c(-1.0, 0.0) } else { c(1.0, 0.0) };
        terms.push(ChainTerm {
            coeff: t.coeff.act_left(&t.legs[n - 1], theta).scale(sign),
            legs: t.legs[..n - 1].to_vec(),
        });
    }
    HochschildChain { degree: n - 1, terms }
}

/// Multilinear evaluation at independent random point tuples; the chain is
/// zero when the worst residual stays at or below the tolerance.  The test is
/// probabilistically sound: a nonzero multilinear form vanishes on a random
/// tuple set with probability zero.
pub fn chain_is_zero(
    chain: &HochschildChain,
    params: ManifoldParams,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> (bool, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bx = SamplingBox { eps_r_factor: 0.05, eps_theta: 0.05, r_max_factor: 3.0 };
    let mut worst = 0.0f64;
    for _ in 0..n_samples {
        let x0 = bx.sample(params, &mut rng);
        let y0 = bx.sample(params, &mut rng);
        let legs: Vec<Point> = (0..chain.degree).map(|_| bx.sample(params, &mut rng)).collect();
        let mut acc = ZC;
        for t in &chain.terms {
            let mut coeff = ZC;
            for (l, r) in &t.coeff.pairs {
                coeff += l.value(params, &x0) * r.value(params, &y0);
            }
            let mut prod = coeff;
            for (k, leg) in t.legs.iter().enumerate() {
                prod *= leg.value(params, &legs[k]);
            }
            acc += prod;
        }
        worst = worst.max(acc.norm());
    }
    (worst <= tol, worst)
}

fn mf_cos_phi() -> ModeFunction {
    ModeFunction::phase(1, 0).scale(c(0.5, 0.0)).add(&ModeFunction::phase(-1, 0).scale(c(0.5, 0.0)))
}

fn mf_sin_phi() -> ModeFunction {
    ModeFunction::phase(1, 0)
        .scale(c(0.0, -0.5))
        .add(&ModeFunction::phase(-1, 0).scale(c(0.0, 0.5)))
}

fn mf_profile(pairs: &[(Atom, i32)], coeff: C) -> ModeFunction {
    ModeFunction::single(Mode::zero(), coeff, Profile::from_atoms(pairs))
}

/// `-i / u_3 = -i e^{-i phi}` and `-i / u_4`.
fn mf_inv_u3() -> ModeFunction {
    ModeFunction::single(Mode::new_int(-1, 0), c(0.0, -1.0), Profile::one())
}

fn mf_inv_u4() -> ModeFunction {
    ModeFunction::single(Mode::new_int(0, -1), c(0.0, -1.0), Profile::one())
}

/// Legs `u_1 = r, u_2 = theta, u_3 = e^{i phi}, u_4 = e^{i psi}`.
pub fn leg_functions() -> [ModeFunction; 4] {
    [
        mf_profile(&[(Atom::R, 2)], c(1.0, 0.0)),
        mf_profile(&[(Atom::Theta, 2)], c(1.0, 0.0)),
        ModeFunction::phase(1, 0),
        ModeFunction::phase(0, 1),
    ]
}

/// Commutative coefficient functions `k^alpha_i` of `K = H V`; indexed
/// `[alpha][i]`, zero where the coframe vanishes.
pub fn k_functions() -> [[ModeFunction; 4]; 4] {
    let half_r = (Atom::R, 2);
    let sin = (Atom::SinTheta, 2);
    let cos = (Atom::CosTheta, 2);
    let sqrt_delta = (Atom::Delta, 1);
    let mut k: [[ModeFunction; 4]; 4] =
        std::array::from_fn(|_| std::array::from_fn(|_| ModeFunction::zero()));
    // h^1_2 = -(r/2) cos phi ; h^1_3 = -(r/2) sin theta sin phi
    k[0][1] = mf_profile(&[half_r.clone()], c(-0.5, 0.0)).mul_pointwise(&mf_cos_phi());
    k[0][2] = mf_profile(&[half_r.clone(), sin.clone()], c(-0.5, 0.0))
        .mul_pointwise(&mf_sin_phi())
        .mul_pointwise(&mf_inv_u3());
    // h^2_2 = (r/2) sin phi ; h^2_3 = -(r/2) sin theta cos phi
    k[1][1] = mf_profile(&[half_r.clone()], c(0.5, 0.0)).mul_pointwise(&mf_sin_phi());
    k[1][2] = mf_profile(&[half_r.clone(), sin.clone()], c(-0.5, 0.0))
        .mul_pointwise(&mf_cos_phi())
        .mul_pointwise(&mf_inv_u3());
    // h^3_3 = (r/2) Delta^{1/2} cos theta ; h^3_4 = (r/2) Delta^{1/2}
    k[2][2] = mf_profile(&[half_r.clone(), sqrt_delta.clone(), cos], c(0.5, 0.0))
        .mul_pointwise(&mf_inv_u3());
    k[2][3] = mf_profile(&[half_r, sqrt_delta], c(0.5, 0.0)).mul_pointwise(&mf_inv_u4());
    // h^4_1 = Delta^{-1/2}
    k[3][0] = mf_profile(&[(Atom::Delta, -1)], c(1.0, 0.0));
    k
}

/// Bimodule coefficients `K^alpha_i` of the deformed cycle: the `u_3`-valued
/// factors are commutatized through half-mode pairs.
pub fn k_bimodule() -> [[Option<BimodElem>; 4]; 4] {
    let kappa = BimodElem {
        pairs: vec![
            (ModeFunction::phase_half(1, 0).scale(c(0.5, 0.0)), ModeFunction::phase_half(1, 0)),
            (ModeFunction::phase_half(-1, 0).scale(c(0.5, 0.0)), ModeFunction::phase_half(-1, 0)),
        ],
    };
    let rho = BimodElem {
        pairs: vec![
            (ModeFunction::phase_half(1, 0).scale(c(0.0, -0.5)), ModeFunction::phase_half(1, 0)),
            (ModeFunction::phase_half(-1, 0).scale(c(0.0, 0.5)), ModeFunction::phase_half(-1, 0)),
        ],
    };
    let lift = |f: ModeFunction| BimodElem::from_left(f);
    let mut k: [[Option<BimodElem>; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| None));
    let theta = 0.0; // products below touch only (0,0)-mode left factors
    k[3][0] = Some(lift(mf_profile(&[(Atom::Delta, -1)], c(1.0, 0.0))));
    k[0][1] = Some(lift(mf_profile(&[(Atom::R, 2)], c(-0.5, 0.0))).mul(&kappa, theta));
    k[1][1] = Some(lift(mf_profile(&[(Atom::R, 2)], c(0.5, 0.0))).mul(&rho, theta));
    k[0][2] = Some(
        lift(mf_profile(&[(Atom::R, 2), (Atom::SinTheta, 2)], c(-0.5, 0.0)))
            .mul(&rho, theta)
            .mul(&lift(mf_inv_u3()), theta),
    );
    k[1][2] = Some(
        lift(mf_profile(&[(Atom::R, 2), (Atom::SinTheta, 2)], c(-0.5, 0.0)))
            .mul(&kappa, theta)
            .mul(&lift(mf_inv_u3()), theta),
    );
    k[2][2] = Some(
        lift(mf_profile(&[(Atom::R, 2), (Atom::Delta, 1), (Atom::CosTheta, 2)], c(0.5, 0.0)))
            .mul(&lift(mf_inv_u3()), theta),
    );
    k[2][3] = Some(
        lift(mf_profile(&[(Atom::R, 2), (Atom::Delta, 1)], c(0.5, 0.0)))
            .mul(&lift(mf_inv_u4()), theta),
    );
    k
}

fn permutations4() -> Vec<([usize; 4], f64)> {
    let mut out = Vec::with_capacity(24);
    let idx = [0usize, 1, 2, 3];
    fn heap(arr: &mut [usize; 4], k: usize, out: &mut Vec<[usize; 4]>) {
        if k == 1 {
            out.push(*arr);
            return;
        }
        for i in 0..k {
            heap(arr, k - 1, out);
            if k % 2 == 0 {
                arr.swap(i, k - 1);
            } else {
                arr.swap(0, k - 1);
            }
        }
    }
    let mut perms = Vec::new();
    let mut arr = idx;
    heap(&mut arr, 4, &mut perms);
    for p in perms {
        // parity by counting inversions
        let mut inv = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                if p[i] > p[j] {
                    inv += 1;
                }
            }
        }
        out.push((p, if inv % 2 == 0 { 1.0 } else { -1.0 }));
    }
    out
}

/// The commutative volume cycle: the antisymmetrized sum over `S_4` of the
/// coefficient products `k^{sigma(4)}_{j4} ... k^{sigma(1)}_{j1}` against the
/// legs `u^{j1} (x) ... (x) u^{j4}`.
pub fn cycle_c0(_params: ManifoldParams) -> HochschildChain {
    let k = k_functions();
    let legs = leg_functions();
    let mut terms = Vec::new();
    for (perm, sign) in permutations4() {
        let pref = sign / 24.0;
        // j_m ranges over the nonzero columns of row perm[m]
        let cols: Vec<Vec<usize>> = (0..4)
            .map(|m| (0..4).filter(|&i| !k[perm[m]][i].is_zero()).collect())
            .collect();
        for &j1 in &cols[0] {
            for &j2 in &cols[1] {
                for &j3 in &cols[2] {
                    for &j4 in &cols[3] {
                        let mut coeff = k[perm[3]][j4].clone();
                        coeff = coeff.mul_pointwise(&k[perm[2]][j3]);
                        coeff = coeff.mul_pointwise(&k[perm[1]][j2]);
                        coeff = coeff.mul_pointwise(&k[perm[0]][j1]);
                        coeff = coeff.scale(c(pref, 0.0));
                        terms.push(ChainTerm {
                            coeff: BimodElem::from_left(coeff),
                            legs: vec![
                                legs[j1].clone(),
                                legs[j2].clone(),
                                legs[j3].clone(),
                                legs[j4].clone(),
                            ],
                        });
                    }
                }
            }
        }
    }
    HochschildChain { degree: 4, terms }
}

/// The deformed volume cycle with half-mode bimodule coefficients.
pub fn cycle_c_theta(_params: ManifoldParams, theta: f64) -> HochschildChain {
    let k = k_bimodule();
    let legs = leg_functions();
    let mut terms = Vec::new();
    for (perm, sign) in permutations4() {
        let pref = sign / 24.0;
        let cols: Vec<Vec<usize>> = (0..4)
            .map(|m| (0..4).filter(|&i| k[perm[m]][i].is_some()).collect())
            .collect();
        for &j1 in &cols[0] {
            for &j2 in &cols[1] {
                for &j3 in &cols[2] {
                    for &j4 in &cols[3] {
                        let mut coeff = k[perm[3]][j4].clone().unwrap();
                        coeff = coeff.mul(k[perm[2]][j3].as_ref().unwrap(), theta);
                        coeff = coeff.mul(k[perm[1]][j2].as_ref().unwrap(), theta);
                        coeff = coeff.mul(k[perm[0]][j1].as_ref().unwrap(), theta);
                        coeff = coeff.scale(c(pref, 0.0));
                        terms.push(ChainTerm {
                            coeff,
                            legs: vec![
                                legs[j1].clone(),
                                legs[j2].clone(),
                                legs[j3].clone(),
                                legs[j4].clone(),
                            ],
                        });
                    }
                }
            }
        }
    }
    HochschildChain { degree: 4, terms }
}

/// Dirac representation of a bimodule element: `sum L_left R_right`.
pub fn represent_bimod(e: &BimodElem, theta: f64) -> OperatorExpr {
    let mut out = OperatorExpr::zero();
    for (l, r) in &e.pairs {
        out = out.add(&left_rep(l).compose(&right_rep(r), theta));
    }
    out
}

/// `pi_D(chain) = sum L_{a0} R_{b0} [D, L_{a1}] ... [D, L_{an}]`.
pub fn represent_pi_d(chain: &HochschildChain, theta: f64) -> OperatorExpr {
    let mut total = OperatorExpr::zero();
    for t in &chain.terms {
        let mut op = represent_bimod(&t.coeff, theta);
        for leg in &t.legs {
            let dl = dirac_commutator(&left_rep(leg));
            op = op.compose(&dl, theta);
        }
        total = total.add(&op);
    }
    total
}

/// Worst deviation of an operator expression from a constant matrix over the
/// given sample points: the zero-shift coefficient is compared to the matrix,
/// every other shift must evaluate to zero.
pub fn expr_vs_constant(
    expr: &OperatorExpr,
    m: &M4,
    params: ManifoldParams,
    pts: &[Point],
) -> f64 {
    let mut worst = 0.0f64;
    for pt in pts {
        for t in &expr.terms {
            let val = expr.coeff_value(params, pt, t.shift);
            if t.shift == Mode::zero() {
                let mut d = 0.0f64;
                for i in 0..4 {
                    for j in 0..4 {
                        d = d.max((val[i][j] - m[i][j]).norm());
                    }
                }
                worst = worst.max(d);
            } else {
                worst = worst.max(crate::linalg::max_abs4(&val));
            }
        }
    }
    worst
}

impl Serialize for HochschildChain {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct TermOut<'a> {
            left: Vec<&'a ModeFunction>,
            right: Vec<&'a ModeFunction>,
            legs: &'a [ModeFunction],
        }
        let mut st = ser.serialize_struct("HochschildChain", 2)?;
        st.serialize_field("degree", &self.degree)?;
        let terms: Vec<TermOut> = self
            .terms
            .iter()
            .map(|t| TermOut {
                left: t.coeff.pairs.iter().map(|(l, _)| l).collect(),
                right: t.coeff.pairs.iter().map(|(_, r)| r).collect(),
                legs: &t.legs,
            })
            .collect();
        st.serialize_field("terms", &terms)?;
        st.end()
    }
}
