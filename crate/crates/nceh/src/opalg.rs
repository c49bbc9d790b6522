//! Finite operator algebra generated by multipliers and transport unitaries.
//!
//! An `OperatorExpr` is a finite sum of terms `M_C . V_r` with `C` a 4x4
//! matrix of mode functions and `r` a (half-integer) lattice shift.  The
//! exchange rule `V_r M_{h_s} = sigma(r, s) M_{h_s} V_r` makes composition,
//! adjoints and Dirac commutators exact at the coefficient level: identities
//! like `[L_f, R_h] = 0` cancel bit-for-bit.

use crate::fields::SpinorField;
use crate::geometry::{ManifoldParams, Point};
use crate::linalg::{c, matvec4, vec_add, C4, M4, ZC};
use crate::modealg::{sigma, Atom, Mode, ModeFunction, Profile};
use crate::spinbundle::gamma_set;
use crate::transport::v_operator;
use crate::Result;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

pub type CoeffMatrix = [[ModeFunction; 4]; 4];

fn zero_coeff() -> CoeffMatrix {
    std::array::from_fn(|_| std::array::from_fn(|_| ModeFunction::zero()))
}

#[derive(Clone, Debug)]
pub struct OpTerm {
    pub coeff: CoeffMatrix,
    pub shift: Mode,
}

/// Finite sum of `M_C V_r` terms, canonicalized by shift.
#[derive(Clone, Debug, Default)]
pub struct OperatorExpr {
    pub terms: Vec<OpTerm>,
}

impl OperatorExpr {
    pub fn zero() -> Self {
        OperatorExpr { terms: Vec::new() }
    }

    pub fn identity() -> Self {
        OperatorExpr::multiplier(&ModeFunction::one())
    }

    /// Plain multiplier `M_f` (zero shift, scalar matrix).
    pub fn multiplier(f: &ModeFunction) -> Self {
        let mut coeff = zero_coeff();
        for (k, row) in coeff.iter_mut().enumerate() {
            row[k] = f.clone();
        }
        OperatorExpr { terms: vec![OpTerm { coeff, shift: Mode::zero() }] }.canonical()
    }

    /// Matrix multiplier with zero shift.
    pub fn matrix_multiplier(m: &CoeffMatrix) -> Self {
        OperatorExpr { terms: vec![OpTerm { coeff: m.clone(), shift: Mode::zero() }] }.canonical()
    }

    /// Constant complex matrix as a multiplier.
    pub fn constant_matrix(m: &M4) -> Self {
        let mut coeff = zero_coeff();
        for i in 0..4 {
            for j in 0..4 {
                if m[i][j] != ZC {
                    coeff[i][j] = ModeFunction::constant(m[i][j]);
                }
            }
        }
        OperatorExpr::matrix_multiplier(&coeff)
    }

    pub fn canonical(mut self) -> Self {
        use std::collections::BTreeMap;
        let mut map: BTreeMap<Mode, CoeffMatrix> = BTreeMap::new();
        for t in self.terms.drain(..) {
            let e = map.entry(t.shift).or_insert_with(zero_coeff);
            for i in 0..4 {
                for j in 0..4 {
                    e[i][j] = e[i][j].add(&t.coeff[i][j]);
                }
            }
        }
        let terms = map
            .into_iter()
            .filter(|(_, m)| m.iter().flatten().any(|f| !f.is_zero()))
            .map(|(shift, coeff)| OpTerm { coeff, shift })
            .collect();
        OperatorExpr { terms }
    }

    pub fn add(&self, other: &OperatorExpr) -> OperatorExpr {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.clone());
        OperatorExpr { terms }.canonical()
    }

    pub fn scale(&self, s: crate::linalg::C) -> OperatorExpr {
        let mut terms = self.terms.clone();
        for t in &mut terms {
            for row in &mut t.coeff {
                for f in row {
                    *f = f.scale(s);
                }
            }
        }
        OperatorExpr { terms }.canonical()
    }

    pub fn sub(&self, other: &OperatorExpr) -> OperatorExpr {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    /// `(M_A V_r)(M_B V_s) = M_{A . (B twisted by sigma(r, .))} V_{r+s}`.
    ///
    /// The twist phase multiplies the formed coefficient product, so the two
    /// orderings of a commutant pair cancel bit-for-bit.
    pub fn compose(&self, other: &OperatorExpr, theta: f64) -> OperatorExpr {
        let mut terms = Vec::new();
        for t1 in &self.terms {
            for t2 in &other.terms {
                let mut coeff = zero_coeff();
                for i in 0..4 {
                    for k in 0..4 {
                        if t1.coeff[i][k].is_zero() {
                            continue;
                        }
                        for j in 0..4 {
                            if t2.coeff[k][j].is_zero() {
                                continue;
                            }
                            let prod = mul_twisted(&t1.coeff[i][k], &t2.coeff[k][j], theta, t1.shift);
                            coeff[i][j] = coeff[i][j].add(&prod);
                        }
                    }
                }
                terms.push(OpTerm { coeff, shift: t1.shift.add(t2.shift) });
            }
        }
        OperatorExpr { terms }.canonical()
    }

    /// `(M_C V_r)^* = V_{-r} M_{C^dagger} = M_{C^dagger twisted} V_{-r}`.
    pub fn adjoint(&self, theta: f64) -> OperatorExpr {
        let mut terms = Vec::new();
        for t in &self.terms {
            let neg = t.shift.neg();
            let mut coeff = zero_coeff();
            for i in 0..4 {
                for j in 0..4 {
                    let mut f = t.coeff[j][i].involution();
                    for term in &mut f.terms {
                        term.coeff *= sigma(theta, neg, term.mode);
                    }
                    coeff[i][j] = f;
                }
            }
            terms.push(OpTerm { coeff, shift: neg });
        }
        OperatorExpr { terms }.canonical()
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.terms
            .iter()
            .flat_map(|t| t.coeff.iter().flatten())
            .fold(0.0f64, |m, f| m.max(f.max_coeff_abs()))
    }

    /// Largest coefficient after removing the given constant-matrix operator.
    pub fn residual_vs_constant(&self, m: &M4) -> f64 {
        self.sub(&OperatorExpr::constant_matrix(m)).max_coeff_abs()
    }

    pub fn all_shifts_integer(&self) -> bool {
        self.terms.iter().all(|t| t.shift.is_algebra_valued())
    }

    /// Coefficient matrix of the given shift, evaluated at a point.
    pub fn coeff_value(&self, params: ManifoldParams, pt: &Point, shift: Mode) -> M4 {
        let mut m = crate::linalg::zero4();
        for t in &self.terms {
            if t.shift == shift {
                for i in 0..4 {
                    for j in 0..4 {
                        m[i][j] += t.coeff[i][j].value(params, pt);
                    }
                }
            }
        }
        m
    }

    /// Apply the expression to a spinor field at a point through transports.
    pub fn evaluate(
        &self,
        params: ManifoldParams,
        field: &dyn SpinorField,
        pt: &Point,
        theta: f64,
    ) -> Result<C4> {
        let mut out = [ZC; 4];
        for t in &self.terms {
            let v = v_operator(params, theta, t.shift, field);
            let transported = v.eval(pt);
            let mut m = crate::linalg::zero4();
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] = t.coeff[i][j].value(params, pt);
                }
            }
            out = vec_add(&out, &matvec4(&m, &transported));
        }
        Ok(out)
    }
}

/// Pointwise product with the exchange phase of `V_rshift` applied to the
/// formed coefficient product: `(c_a c_b) sigma(rshift, mode_b)`.
fn mul_twisted(a: &ModeFunction, b: &ModeFunction, theta: f64, rshift: Mode) -> ModeFunction {
    let mut terms = Vec::new();
    for ta in &a.terms {
        for tb in &b.terms {
            terms.push(crate::modealg::Term {
                mode: ta.mode.add(tb.mode),
                coeff: (ta.coeff * tb.coeff) * sigma(theta, rshift, tb.mode),
                profile: ta.profile.product(&tb.profile),
            });
        }
    }
    ModeFunction { terms }.canonical()
}

/// Left representation `L_f = sum_r M_{f_r} V_r`.
pub fn left_rep(f: &ModeFunction) -> OperatorExpr {
    let mut terms = Vec::new();
    for t in &f.terms {
        let single = ModeFunction { terms: vec![t.clone()] };
        let mut coeff = zero_coeff();
        for (k, row) in coeff.iter_mut().enumerate().take(4) {
            row[k] = single.clone();
        }
        terms.push(OpTerm { coeff, shift: t.mode });
    }
    OperatorExpr { terms }.canonical()
}

/// Right representation `R_h = sum_s M_{h_s} V_{-s}`.
pub fn right_rep(h: &ModeFunction) -> OperatorExpr {
    let mut terms = Vec::new();
    for t in &h.terms {
        let single = ModeFunction { terms: vec![t.clone()] };
        let mut coeff = zero_coeff();
        for (k, row) in coeff.iter_mut().enumerate().take(4) {
            row[k] = single.clone();
        }
        terms.push(OpTerm { coeff, shift: t.mode.neg() });
    }
    OperatorExpr { terms }.canonical()
}

/// Inverse coframe entries as mode functions; the symbolic coordinate gammas
/// `gamma^j = ht^j_beta gamma^beta`.
pub fn coordinate_gamma_symbols() -> [CoeffMatrix; 4] {
    let i = c(0.0, 1.0);
    let one = c(1.0, 0.0);
    // ht^j_beta as mode functions
    let mut ht: [[ModeFunction; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| ModeFunction::zero()));
    let pr = |pows: &[(Atom, i32)]| Profile::from_atoms(pows);
    let inv_r = (Atom::R, -2);
    let inv_sin = (Atom::SinTheta, -2);
    let cos = (Atom::CosTheta, 2);
    // ht^1_4 = sqrt(Delta)
    ht[0][3] = ModeFunction::single(Mode::zero(), one, pr(&[(Atom::Delta, 1)]));
    // ht^2_1 = -2 cos(phi)/r
    ht[1][0] = ModeFunction::single(Mode::new_int(1, 0), -one, pr(&[inv_r.clone()]))
        .add(&ModeFunction::single(Mode::new_int(-1, 0), -one, pr(&[inv_r.clone()])));
    // ht^2_2 = 2 sin(phi)/r
    ht[1][1] = ModeFunction::single(Mode::new_int(1, 0), -i, pr(&[inv_r.clone()]))
        .add(&ModeFunction::single(Mode::new_int(-1, 0), i, pr(&[inv_r.clone()])));
    // ht^3_1 = -2 sin(phi)/(r sin theta)
    ht[2][0] = ModeFunction::single(Mode::new_int(1, 0), i, pr(&[inv_r.clone(), inv_sin.clone()]))
        .add(&ModeFunction::single(Mode::new_int(-1, 0), -i, pr(&[inv_r.clone(), inv_sin.clone()])));
    // ht^3_2 = -2 cos(phi)/(r sin theta)
    ht[2][1] = ModeFunction::single(Mode::new_int(1, 0), -one, pr(&[inv_r.clone(), inv_sin.clone()]))
        .add(&ModeFunction::single(Mode::new_int(-1, 0), -one, pr(&[inv_r.clone(), inv_sin.clone()])));
    // ht^4_1 = 2 cos theta sin(phi)/(r sin theta)
    ht[3][0] = ModeFunction::single(
        Mode::new_int(1, 0),
        -i,
        pr(&[inv_r.clone(), inv_sin.clone(), cos.clone()]),
    )
    .add(&ModeFunction::single(
        Mode::new_int(-1, 0),
        i,
        pr(&[inv_r.clone(), inv_sin.clone(), cos.clone()]),
    ));
    // ht^4_2 = 2 cos theta cos(phi)/(r sin theta)
    ht[3][1] = ModeFunction::single(
        Mode::new_int(1, 0),
        one,
        pr(&[inv_r.clone(), inv_sin.clone(), cos.clone()]),
    )
    .add(&ModeFunction::single(
        Mode::new_int(-1, 0),
        one,
        pr(&[inv_r.clone(), inv_sin.clone(), cos]),
    ));
    // ht^4_3 = 2/(r sqrt(Delta))
    ht[3][2] = ModeFunction::single(Mode::zero(), c(2.0, 0.0), pr(&[inv_r, (Atom::Delta, -1)]));

    let gs = gamma_set();
    std::array::from_fn(|j| {
        let mut m = zero_coeff();
        for beta in 0..4 {
            if ht[j][beta].is_zero() {
                continue;
            }
            for a in 0..4 {
                for b in 0..4 {
                    if gs.g[beta][a][b] != ZC {
                        m[a][b] = m[a][b].add(&ht[j][beta].scale(gs.g[beta][a][b]));
                    }
                }
            }
        }
        m
    })
}

fn scalar_part(coeff: &CoeffMatrix) -> Option<ModeFunction> {
    for i in 0..4 {
        for j in 0..4 {
            if i != j && !coeff[i][j].is_zero() {
                return None;
            }
        }
    }
    let f = coeff[0][0].clone();
    for k in 1..4 {
        if f.sub(&coeff[k][k]).max_coeff_abs() != 0.0 {
            return None;
        }
    }
    Some(f)
}

/// `[D, M_f V_r] = (-i c(df)) V_r` for scalar multiplier terms; the
/// commutator of the Dirac operator with the expression.
pub fn dirac_commutator(a: &OperatorExpr) -> OperatorExpr {
    let gammas = coordinate_gamma_symbols();
    let minus_i = c(0.0, -1.0);
    let mut terms = Vec::new();
    for t in &a.terms {
        let f = scalar_part(&t.coeff)
            .expect("dirac_commutator needs scalar multiplier coefficients");
        if f.is_zero() {
            continue;
        }
        let mut coeff = zero_coeff();
        for j in 0..4 {
            let df = f.deriv(j);
            if df.is_zero() {
                continue;
            }
            for x in 0..4 {
                for y in 0..4 {
                    if gammas[j][x][y].is_zero() {
                        continue;
                    }
                    let prod = gammas[j][x][y].mul_pointwise(&df).scale(minus_i);
                    coeff[x][y] = coeff[x][y].add(&prod);
                }
            }
        }
        terms.push(OpTerm { coeff, shift: t.shift });
    }
    OperatorExpr { terms }.canonical()
}

impl Serialize for OperatorExpr {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct TermOut<'a> {
            shift_m: f64,
            shift_n: f64,
            coeff: Vec<Vec<&'a ModeFunction>>,
        }
        let mut st = ser.serialize_struct("OperatorExpr", 1)?;
        let terms: Vec<TermOut> = self
            .terms
            .iter()
            .map(|t| TermOut {
                shift_m: t.shift.m(),
                shift_n: t.shift.n(),
                coeff: t.coeff.iter().map(|row| row.iter().collect()).collect(),
            })
            .collect();
        st.serialize_field("terms", &terms)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::corpus;
    use crate::geometry::SamplingBox;
    use crate::linalg::{vec_norm, vec_sub};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> ManifoldParams {
        ManifoldParams::new(1.0).unwrap()
    }

    fn rand_fn<R: Rng>(rng: &mut R, nterms: usize) -> ModeFunction {
        let mut f = ModeFunction::zero();
        for _ in 0..nterms {
            let m = rng.gen_range(-2..=2);
            let n = rng.gen_range(-2..=2);
            let coeff = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let profile = Profile::rtrig(rng.gen_range(-2..0), 0, rng.gen_range(0..2), rng.gen_range(0..2));
            f = f.add(&ModeFunction::single(Mode::new_int(m, n), coeff, profile));
        }
        f
    }

    #[test]
    fn left_rep_structure() {
        // torus-invariant function is a pure multiplier
        let f = ModeFunction::single(Mode::zero(), c(0.7, 0.0), Profile::rtrig(-1, 0, 0, 0));
        let l = left_rep(&f);
        assert_eq!(l.terms.len(), 1);
        assert_eq!(l.terms[0].shift, Mode::zero());
        // e^{i phi} is M_{e^{i phi}} V_{(1,0)}
        let g = ModeFunction::phase(1, 0);
        let lg = left_rep(&g);
        assert_eq!(lg.terms.len(), 1);
        assert_eq!(lg.terms[0].shift, Mode::new_int(1, 0));
        // right rep negates shifts
        let rg = right_rep(&ModeFunction::phase(0, 1));
        assert_eq!(rg.terms[0].shift, Mode::new_int(0, -1));
    }

    #[test]
    fn composition_realizes_star_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..10 {
            let f = rand_fn(&mut rng, 3);
            let g = rand_fn(&mut rng, 3);
            let theta = rng.gen_range(-0.8..0.8);
            let lhs = left_rep(&f).compose(&left_rep(&g), theta);
            let rhs = left_rep(&f.star(&g, theta));
            assert!(lhs.sub(&rhs).max_coeff_abs() <= 1e-12);
        }
    }

    #[test]
    fn commutant_and_first_order_vanish_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for _ in 0..10 {
            let f = rand_fn(&mut rng, 3);
            let h = rand_fn(&mut rng, 3);
            let theta = rng.gen_range(-0.8..0.8);
            let lf = left_rep(&f);
            let rh = right_rep(&h);
            let comm = lf.compose(&rh, theta).sub(&rh.compose(&lf, theta));
            assert!(comm.max_coeff_abs() == 0.0, "commutant not exact: {}", comm.max_coeff_abs());
            let dlf = dirac_commutator(&lf);
            let first = dlf.compose(&rh, theta).sub(&rh.compose(&dlf, theta));
            assert!(first.max_coeff_abs() == 0.0, "first order not exact: {}", first.max_coeff_abs());
        }
    }

    #[test]
    fn adjoint_matches_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..10 {
            let f = rand_fn(&mut rng, 3);
            let theta = rng.gen_range(-0.8..0.8);
            let lhs = left_rep(&f).adjoint(theta);
            let rhs = left_rep(&f.involution());
            assert!(lhs.sub(&rhs).max_coeff_abs() <= 1e-12);
        }
    }

    #[test]
    fn identity_is_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let f = rand_fn(&mut rng, 4);
        let a = left_rep(&f);
        let e = OperatorExpr::identity();
        for theta in [0.0, 0.3] {
            assert!(a.compose(&e, theta).sub(&a).max_coeff_abs() == 0.0);
            assert!(e.compose(&a, theta).sub(&a).max_coeff_abs() == 0.0);
        }
    }

    #[test]
    fn dirac_commutator_of_constant_vanishes() {
        let a = OperatorExpr::multiplier(&ModeFunction::constant(c(1.3, -0.4)));
        let d = dirac_commutator(&a);
        assert!(d.max_coeff_abs() == 0.0);
    }

    #[test]
    fn coordinate_gamma_symbols_match_pointwise() {
        let p = params();
        let bx = SamplingBox::default();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let sym = coordinate_gamma_symbols();
        for _ in 0..20 {
            let pt = bx.sample(p, &mut rng);
            let exact = crate::dirac::coordinate_gammas(p, &pt).unwrap();
            for j in 0..4 {
                for a in 0..4 {
                    for b in 0..4 {
                        let v = sym[j][a][b].value(p, &pt);
                        assert!(
                            (v - exact[j][a][b]).norm() <= 1e-11 * (1.0 + exact[j][a][b].norm()),
                            "gamma^{j} entry ({a},{b})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn evaluate_matches_transport_route() {
        let p = params();
        let fields = corpus(p, 42, 2);
        let psi = &fields[0];
        let pt = Point::n(2.2, 1.1, 0.7, 0.2);
        let theta = 0.25;
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let f = rand_fn(&mut rng, 2);
        // direct: sum over modes of M_{f_r} (V_r psi)
        let mut direct = [ZC; 4];
        for t in &f.terms {
            let single = ModeFunction { terms: vec![t.clone()] };
            let v = v_operator(p, theta, t.mode, psi);
            let tv = v.eval(&pt);
            let fv = single.value(p, &pt);
            for k in 0..4 {
                direct[k] += fv * tv[k];
            }
        }
        let viaexpr = left_rep(&f).evaluate(p, psi, &pt, theta).unwrap();
        assert!(vec_norm(&vec_sub(&viaexpr, &direct)) <= 1e-7);
        // homomorphism on spinors
        let g = rand_fn(&mut rng, 2);
        let composed = left_rep(&f).compose(&left_rep(&g), theta);
        let prod = left_rep(&f.star(&g, theta));
        let lhs = composed.evaluate(p, psi, &pt, theta).unwrap();
        let rhs = prod.evaluate(p, psi, &pt, theta).unwrap();
        assert!(vec_norm(&vec_sub(&lhs, &rhs)) <= 1e-7);
        // zero expression evaluates to zero
        let z = OperatorExpr::zero().evaluate(p, psi, &pt, theta).unwrap();
        assert!(vec_norm(&z) == 0.0);
    }

    #[test]
    fn dirac_commutator_cross_checked_on_spinors() {
        let p = params();
        let fields = corpus(p, 42, 2);
        let psi = &fields[0];
        let pt = Point::n(2.4, 1.0, 0.9, 0.35);
        let theta = 0.3;
        let f = ModeFunction::single(Mode::new_int(1, 0), c(0.8, 0.0), Profile::rtrig(-1, 0, 0, 0));
        let lf = left_rep(&f);
        let sym = dirac_commutator(&lf).evaluate(p, psi, &pt, theta).unwrap();
        // direct: D(L_f psi) - L_f(D psi)
        struct ExprField<'a> {
            params: ManifoldParams,
            expr: &'a OperatorExpr,
            theta: f64,
            inner: &'a dyn SpinorField,
        }
        impl SpinorField for ExprField<'_> {
            fn eval(&self, pt: &Point) -> C4 {
                self.expr.evaluate(self.params, self.inner, pt, self.theta).unwrap()
            }
            fn d(&self, pt: &Point, i: usize) -> C4 {
                // transported fields are derivative-exact; assemble the same
                // sum term by term
                let mut out = [ZC; 4];
                for t in &self.expr.terms {
                    let v = v_operator(self.params, self.theta, t.shift, self.inner);
                    let tv = v.eval(pt);
                    let dv = v.d(pt, i);
                    for x in 0..4 {
                        for y in 0..4 {
                            let (fval, dfabove) = {
                                let (val, grad, _) = t.coeff[x][y].jet4(self.params, pt);
                                (val, grad[i])
                            };
                            out[x] += dfabove_mul(fval, dfabove, tv[y], dv[y]);
                        }
                    }
                }
                out
            }
            fn dd(&self, _: &Point, _: usize, _: usize) -> C4 {
                unimplemented!("not needed")
            }
        }
        fn dfabove_mul(
            f: crate::linalg::C,
            df: crate::linalg::C,
            v: crate::linalg::C,
            dv: crate::linalg::C,
        ) -> crate::linalg::C {
            df * v + f * dv
        }
        let lf_field = ExprField { params: p, expr: &lf, theta, inner: psi };
        let d_lf = crate::dirac::apply_dirac(p, &lf_field, &pt).unwrap();
        let dpsi_field = corpus_dirac_field(p, psi);
        let lf_d = lf.evaluate(p, &dpsi_field, &pt, theta).unwrap();
        let direct = vec_sub(&d_lf, &lf_d);
        assert!(vec_norm(&vec_sub(&sym, &direct)) <= 1e-6, "cross-check {}", vec_norm(&vec_sub(&sym, &direct)));
    }

    /// Wrap `D psi` of an analytic field as a field (values only needed).
    struct DiracOf<'a> {
        params: ManifoldParams,
        inner: &'a dyn SpinorField,
    }
    impl SpinorField for DiracOf<'_> {
        fn eval(&self, pt: &Point) -> C4 {
            crate::dirac::apply_dirac(self.params, self.inner, pt).unwrap()
        }
        fn d(&self, pt: &Point, i: usize) -> C4 {
            // five-point stencil on values; adequate for cross-check use
            let h = 1e-3;
            let shift = |k: usize, s: f64| {
                let mut q = [pt.r, pt.theta, pt.phi, pt.psi];
                q[k] += s;
                Point { chart: pt.chart, r: q[0], theta: q[1], phi: q[2], psi: q[3] }
            };
            let f2p = self.eval(&shift(i, 2.0 * h));
            let f1p = self.eval(&shift(i, h));
            let f1m = self.eval(&shift(i, -h));
            let f2m = self.eval(&shift(i, -2.0 * h));
            let mut out = [ZC; 4];
            for a in 0..4 {
                out[a] = (-f2p[a] + f1p[a] * 8.0 - f1m[a] * 8.0 + f2m[a]) / (12.0 * h);
            }
            out
        }
        fn dd(&self, _: &Point, _: usize, _: usize) -> C4 {
            unimplemented!()
        }
    }

    fn corpus_dirac_field<'a>(
        params: ManifoldParams,
        inner: &'a dyn SpinorField,
    ) -> DiracOf<'a> {
        DiracOf { params, inner }
    }

    #[test]
    fn operator_norm_bound_probe() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(58);
        let f = rand_fn(&mut rng, 3);
        let fields = corpus(p, 42, 2);
        let psi = &fields[0];
        let bx = SamplingBox::default();
        let mut bound = 0.0;
        for t in &f.terms {
            let single = ModeFunction { terms: vec![t.clone()] };
            bound += single.sup_abs_on_box(p, &bx, 12);
        }
        let mut psi_sup = 0.0f64;
        let mut lf_sup = 0.0f64;
        let lf = left_rep(&f);
        for _ in 0..10 {
            let pt = bx.sample(p, &mut rng);
            psi_sup = psi_sup.max(vec_norm(&psi.eval(&pt)));
            lf_sup = lf_sup.max(vec_norm(&lf.evaluate(p, psi, &pt, 0.3).unwrap()));
        }
        assert!(lf_sup <= bound * (psi_sup + 1e-9) + 1e-9);
    }
}
