//! Spinor field evaluators with exact derivative queries, and the seeded
//! analytic test corpus.

use crate::geometry::{ManifoldParams, Point};
use crate::linalg::{c, C4, ZC};
use crate::modealg::{Atom, F64Key, Mode, ModeFunction, Profile};
use crate::spinbundle::charge_conjugation_matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A C^4-valued field with first and second coordinate-derivative queries.
pub trait SpinorField: Sync {
    fn eval(&self, pt: &Point) -> C4;
    fn d(&self, pt: &Point, i: usize) -> C4;
    fn dd(&self, pt: &Point, i: usize, j: usize) -> C4;
}

impl<F: SpinorField + ?Sized> SpinorField for &F {
    fn eval(&self, pt: &Point) -> C4 {
        (**self).eval(pt)
    }
    fn d(&self, pt: &Point, i: usize) -> C4 {
        (**self).d(pt, i)
    }
    fn dd(&self, pt: &Point, i: usize, j: usize) -> C4 {
        (**self).dd(pt, i, j)
    }
}

/// Field whose components are closed-form mode functions; all derivatives
/// are jet-exact.
#[derive(Clone)]
pub struct SpinorModeField {
    pub params: ManifoldParams,
    pub comps: [ModeFunction; 4],
}

impl SpinorField for SpinorModeField {
    fn eval(&self, pt: &Point) -> C4 {
        let mut out = [ZC; 4];
        for (k, f) in self.comps.iter().enumerate() {
            out[k] = f.value(self.params, pt);
        }
        out
    }
    fn d(&self, pt: &Point, i: usize) -> C4 {
        let mut out = [ZC; 4];
        for (k, f) in self.comps.iter().enumerate() {
            let (_, g, _) = f.jet4(self.params, pt);
            out[k] = g[i];
        }
        out
    }
    fn dd(&self, pt: &Point, i: usize, j: usize) -> C4 {
        let mut out = [ZC; 4];
        for (k, f) in self.comps.iter().enumerate() {
            let (_, _, h) = f.jet4(self.params, pt);
            out[k] = h[i][j];
        }
        out
    }
}

/// Charge-conjugated field `(J psi)(x) = B conj(psi(x))`.
pub struct ConjugatedField<'a, F: SpinorField + ?Sized>(pub &'a F);

impl<F: SpinorField + ?Sized> SpinorField for ConjugatedField<'_, F> {
    fn eval(&self, pt: &Point) -> C4 {
        apply_b(&self.0.eval(pt))
    }
    fn d(&self, pt: &Point, i: usize) -> C4 {
        apply_b(&self.0.d(pt, i))
    }
    fn dd(&self, pt: &Point, i: usize, j: usize) -> C4 {
        apply_b(&self.0.dd(pt, i, j))
    }
}

fn apply_b(s: &C4) -> C4 {
    let b = charge_conjugation_matrix();
    let conj = [s[0].conj(), s[1].conj(), s[2].conj(), s[3].conj()];
    crate::linalg::matvec4(&b, &conj)
}

/// Pointwise multiplier `psi -> f psi` with product-rule derivatives.
pub struct MultipliedField<'a, F: SpinorField + ?Sized> {
    pub params: ManifoldParams,
    pub factor: &'a ModeFunction,
    pub inner: &'a F,
}

impl<F: SpinorField + ?Sized> SpinorField for MultipliedField<'_, F> {
    fn eval(&self, pt: &Point) -> C4 {
        let f = self.factor.value(self.params, pt);
        self.inner.eval(pt).map(|v| v * f)
    }
    fn d(&self, pt: &Point, i: usize) -> C4 {
        let (f, g, _) = self.factor.jet4(self.params, pt);
        let v = self.inner.eval(pt);
        let dv = self.inner.d(pt, i);
        let mut out = [ZC; 4];
        for k in 0..4 {
            out[k] = g[i] * v[k] + f * dv[k];
        }
        out
    }
    fn dd(&self, pt: &Point, i: usize, j: usize) -> C4 {
        let (f, g, h) = self.factor.jet4(self.params, pt);
        let v = self.inner.eval(pt);
        let di = self.inner.d(pt, i);
        let dj = self.inner.d(pt, j);
        let dij = self.inner.dd(pt, i, j);
        let mut out = [ZC; 4];
        for k in 0..4 {
            out[k] = h[i][j] * v[k] + g[i] * dj[k] + g[j] * di[k] + f * dij[k];
        }
        out
    }
}

/// Zero field.
pub struct ZeroField;

impl SpinorField for ZeroField {
    fn eval(&self, _: &Point) -> C4 {
        [ZC; 4]
    }
    fn d(&self, _: &Point, _: usize) -> C4 {
        [ZC; 4]
    }
    fn dd(&self, _: &Point, _: usize, _: usize) -> C4 {
        [ZC; 4]
    }
}

/// Seeded corpus: components are sums of `p(1/r) t(theta) e^{i(m phi+n psi)}`
/// with `deg p <= 3`, `t in {1, sin, cos}`, `|m|,|n| <= 2`, plus one field
/// with a compactly supported radial bump.
pub fn corpus(params: ManifoldParams, seed: u64, count: usize) -> Vec<SpinorModeField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fields = Vec::with_capacity(count);
    for idx in 0..count {
        let mut comps: [ModeFunction; 4] =
            [ModeFunction::zero(), ModeFunction::zero(), ModeFunction::zero(), ModeFunction::zero()];
        for comp in &mut comps {
            let nterms = rng.gen_range(1..=2);
            let mut f = ModeFunction::zero();
            for _ in 0..nterms {
                let coeff = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let inv_r_pow = rng.gen_range(0..=3);
                let trig = rng.gen_range(0..3);
                let (ps, pc) = match trig {
                    0 => (0, 0),
                    1 => (1, 0),
                    _ => (0, 1),
                };
                let m = rng.gen_range(-2..=2);
                let n = rng.gen_range(-2..=2);
                let profile = if idx == count - 1 {
                    // bump-field member of the corpus
                    Profile::from_atoms(&[
                        (Atom::Bump(F64Key::new(1.3), F64Key::new(4.0)), 2),
                        (Atom::SinTheta, 2 * ps),
                        (Atom::CosTheta, 2 * pc),
                    ])
                } else {
                    Profile::from_atoms(&[
                        (Atom::R, -2 * inv_r_pow),
                        (Atom::SinTheta, 2 * ps),
                        (Atom::CosTheta, 2 * pc),
                    ])
                };
                f = f.add(&ModeFunction::single(Mode::new_int(m, n), coeff, profile));
            }
            *comp = f;
        }
        fields.push(SpinorModeField { params, comps });
    }
    fields
}
