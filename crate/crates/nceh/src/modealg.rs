//! Torus-equivariant mode functions and their deformed algebra.
//!
//! A `ModeFunction` is a finite sum of terms `coeff * profile(r, theta) *
//! exp(i (m phi + n psi))` with `(m, n)` on the half-integer lattice.  The
//! twisted product multiplies term pairs with the phase
//! `sigma(r, s) = e(theta (r4 s3 - r3 s4))`, `e(t) = exp(2 pi i t)`; the
//! oscillatory-integral route evaluates the same product through a
//! Gaussian-damped Fresnel quadrature and Richardson extrapolation.

use crate::errors::NcehError;
use crate::geometry::{ManifoldParams, Point, SamplingBox};
use crate::jet::{Cx, Jet2};
use crate::linalg::{c, C, ZC};
use crate::quad::{composite_gl, torus_nodes};
use crate::Result;
use num_complex::Complex64;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// Lattice mode stored in half-units: the physical mode is `(m2/2, n2/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub m2: i32,
    pub n2: i32,
}

impl Mode {
    pub fn new_int(m: i32, n: i32) -> Self {
        Mode { m2: 2 * m, n2: 2 * n }
    }
    pub fn new_half(m2: i32, n2: i32) -> Self {
        Mode { m2, n2 }
    }
    pub fn zero() -> Self {
        Mode { m2: 0, n2: 0 }
    }
    pub fn add(self, o: Mode) -> Mode {
        Mode { m2: self.m2 + o.m2, n2: self.n2 + o.n2 }
    }
    pub fn neg(self) -> Mode {
        Mode { m2: -self.m2, n2: -self.n2 }
    }
    pub fn m(self) -> f64 {
        0.5 * f64::from(self.m2)
    }
    pub fn n(self) -> f64 {
        0.5 * f64::from(self.n2)
    }
    /// On the integer sublattice (algebra-valued) rather than the double cover.
    pub fn is_algebra_valued(self) -> bool {
        self.m2 % 2 == 0 && self.n2 % 2 == 0
    }
}

/// Twist phase `sigma(r, s) = e(theta (r4 s3 - r3 s4))`.
///
/// The quarter-integer exponent is accumulated in exact integer arithmetic so
/// equal lattice crossings produce bit-identical phases.
pub fn sigma(theta: f64, r: Mode, s: Mode) -> C {
    let q4 = i64::from(r.n2) * i64::from(s.m2) - i64::from(r.m2) * i64::from(s.n2);
    if q4 == 0 || theta == 0.0 {
        return c(1.0, 0.0);
    }
    Complex64::from_polar(1.0, TAU * theta * (q4 as f64) / 4.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct F64Key(u64);

impl F64Key {
    pub fn new(x: f64) -> Self {
        F64Key((x + 0.0).to_bits())
    }
    pub fn get(self) -> f64 {
        f64::from_bits(self.0)
    }
}

static GRID_IDS: AtomicU64 = AtomicU64::new(1);

/// Tabulated profile produced by spectral decomposition; exact on its own
/// nodes, bilinear off them, no derivative queries.
#[derive(Debug)]
pub struct GridData {
    pub id: u64,
    pub r_nodes: Vec<f64>,
    pub theta_nodes: Vec<f64>,
    pub vals: Vec<C>,
}

#[derive(Clone, Debug)]
pub struct GridAtom(pub Arc<GridData>);

impl PartialEq for GridAtom {
    fn eq(&self, o: &Self) -> bool {
        self.0.id == o.0.id
    }
}
impl Eq for GridAtom {}
impl PartialOrd for GridAtom {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for GridAtom {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.id.cmp(&o.0.id)
    }
}
impl std::hash::Hash for GridAtom {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.0.id.hash(h)
    }
}

/// Closed-form profile factors; all real-valued except `Grid`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    R,
    Theta,
    SinTheta,
    CosTheta,
    /// `1 - a^4/r^4`
    Delta,
    /// `1 + a^4/r^4`
    DeltaPlus,
    /// 1 on `r <= n`, smooth decay to 0 across `[n, n+1]`
    Plateau(u32),
    /// Smooth bump supported on `[lo, hi]`
    Bump(F64Key, F64Key),
    /// `cos^2((pi/2) sin^2(theta/2))`: the faster-decaying patch weight at
    /// the north pole
    PatchKN,
    /// `sin^2((pi/2) sin^2(theta/2))`
    PatchKS,
    Grid(GridAtom),
    GridConj(GridAtom),
}

fn smoothstep_down(t: f64) -> (f64, f64, f64) {
    // 1 for t <= 0, 0 for t >= 1, exp-joined in between; returns (s, s', s'').
    if t <= 0.0 {
        return (1.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let sig = |x: f64| (-1.0 / x).exp();
    let sig1 = |x: f64| sig(x) / (x * x);
    let sig2 = |x: f64| sig(x) * (1.0 / x.powi(4) - 2.0 / x.powi(3));
    let a = sig(1.0 - t);
    let a1 = -sig1(1.0 - t);
    let a2 = sig2(1.0 - t);
    let b = sig(t);
    let b1 = sig1(t);
    let b2 = sig2(t);
    let d = a + b;
    let d1 = a1 + b1;
    let d2 = a2 + b2;
    let s = a / d;
    let s1 = a1 / d - a * d1 / (d * d);
    let s2 = a2 / d - 2.0 * a1 * d1 / (d * d) - a * d2 / (d * d) + 2.0 * a * d1 * d1 / (d * d * d);
    (s, s1, s2)
}

fn bump_value(r: f64, lo: f64, hi: f64) -> (f64, f64, f64) {
    let scale = 2.0 / (hi - lo);
    let x = (2.0 * r - (lo + hi)) / (hi - lo);
    if x.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let u = 1.0 - x * x;
    let b = (1.0 - 1.0 / u).exp();
    let bx = b * (-2.0 * x / (u * u));
    let bxx = b * (4.0 * x * x / u.powi(4) - 2.0 / (u * u) - 8.0 * x * x / u.powi(3));
    (b, bx * scale, bxx * scale * scale)
}

impl Atom {
    fn eval(&self, params: ManifoldParams, rj: Jet2, thj: Jet2) -> Cx<Jet2> {
        let re = |j: Jet2| Cx::new(j, Jet2::c(0.0));
        match self {
            Atom::R => re(rj),
            Atom::Theta => re(thj),
            Atom::SinTheta => re(thj.sin()),
            Atom::CosTheta => re(thj.cos()),
            Atom::Delta => {
                let r4 = rj * rj * rj * rj;
                re(Jet2::c(1.0) - Jet2::c(params.a.powi(4)) / r4)
            }
            Atom::DeltaPlus => {
                let r4 = rj * rj * rj * rj;
                re(Jet2::c(1.0) + Jet2::c(params.a.powi(4)) / r4)
            }
            Atom::Plateau(n) => {
                let (s, s1, s2) = smoothstep_down(rj.v - f64::from(*n));
                re(rj.chain(s, s1, s2))
            }
            Atom::Bump(lo, hi) => {
                let (b, b1, b2) = bump_value(rj.v, lo.get(), hi.get());
                re(rj.chain(b, b1, b2))
            }
            Atom::PatchKN => {
                let alpha = (Jet2::c(1.0) - thj.cos()) * std::f64::consts::FRAC_PI_4;
                let ca = alpha.cos();
                re(ca * ca)
            }
            Atom::PatchKS => {
                let alpha = (Jet2::c(1.0) - thj.cos()) * std::f64::consts::FRAC_PI_4;
                let sa = alpha.sin();
                re(sa * sa)
            }
            Atom::Grid(g) => grid_eval(&g.0, rj.v, thj.v, false),
            Atom::GridConj(g) => grid_eval(&g.0, rj.v, thj.v, true),
        }
    }

    fn allows_jets(&self) -> bool {
        !matches!(self, Atom::Grid(_) | Atom::GridConj(_))
    }
}

fn grid_eval(g: &GridData, r: f64, th: f64, conj: bool) -> Cx<Jet2> {
    let locate = |nodes: &[f64], x: f64| -> (usize, usize, f64) {
        if nodes.len() == 1 {
            return (0, 0, 0.0);
        }
        let mut i = 0;
        while i + 2 < nodes.len() && nodes[i + 1] <= x {
            i += 1;
        }
        let t = ((x - nodes[i]) / (nodes[i + 1] - nodes[i])).clamp(0.0, 1.0);
        (i, i + 1, t)
    };
    let (i0, i1, tr) = locate(&g.r_nodes, r);
    let (j0, j1, tt) = locate(&g.theta_nodes, th);
    let nt = g.theta_nodes.len();
    let at = |i: usize, j: usize| g.vals[i * nt + j];
    let v = at(i0, j0) * ((1.0 - tr) * (1.0 - tt))
        + at(i1, j0) * (tr * (1.0 - tt))
        + at(i0, j1) * ((1.0 - tr) * tt)
        + at(i1, j1) * (tr * tt);
    let v = if conj { v.conj() } else { v };
    Cx::new(Jet2::c(v.re), Jet2::c(v.im))
}

/// One multiplicative block: a product of atom powers, optionally carrying
/// symbolic derivative counts `(d/dr)^dr (d/dtheta)^dth`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Block {
    /// Sorted `(atom, power in half-units)` pairs.
    pub pows: Vec<(Atom, i32)>,
    pub dr: u8,
    pub dth: u8,
}

impl Block {
    fn product_jet(&self, params: ManifoldParams, rj: Jet2, thj: Jet2) -> Cx<Jet2> {
        let mut acc = Cx::new(Jet2::c(1.0), Jet2::c(0.0));
        for (atom, half) in &self.pows {
            let base = atom.eval(params, rj, thj);
            let factor = if atom.allows_jets() {
                Cx::new(base.re.pow_half(*half), Jet2::c(0.0))
            } else {
                assert!(*half == 2, "grid profiles admit only power 1");
                base
            };
            acc = acc.mul(factor);
        }
        acc
    }

    fn eval_value(&self, params: ManifoldParams, rj: Jet2, thj: Jet2) -> C {
        let j = self.product_jet(params, rj, thj);
        let pick = |j: Jet2| match (self.dr, self.dth) {
            (0, 0) => j.v,
            (1, 0) => j.g[0],
            (0, 1) => j.g[1],
            (2, 0) => j.h[0][0],
            (1, 1) => j.h[0][1],
            (0, 2) => j.h[1][1],
            _ => panic!("symbolic derivative order above 2 is not supported"),
        };
        c(pick(j.re), pick(j.im))
    }
}

/// Product of blocks; the profile factor of one mode term.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Profile {
    pub blocks: Vec<Block>,
}

impl Profile {
    pub fn one() -> Self {
        Profile { blocks: Vec::new() }
    }

    pub fn from_atoms(pairs: &[(Atom, i32)]) -> Self {
        let mut map: BTreeMap<Atom, i32> = BTreeMap::new();
        for (a, p) in pairs {
            *map.entry(a.clone()).or_insert(0) += p;
        }
        map.retain(|_, p| *p != 0);
        if map.is_empty() {
            return Profile::one();
        }
        Profile { blocks: vec![Block { pows: map.into_iter().collect(), dr: 0, dth: 0 }] }
    }

    /// Convenience: integer powers `r^pr theta^pt sin^ps cos^pc`.
    pub fn rtrig(pr: i32, pt: i32, ps: i32, pc: i32) -> Self {
        Profile::from_atoms(&[
            (Atom::R, 2 * pr),
            (Atom::Theta, 2 * pt),
            (Atom::SinTheta, 2 * ps),
            (Atom::CosTheta, 2 * pc),
        ])
    }

    pub fn product(&self, other: &Profile) -> Profile {
        let mut plain: BTreeMap<Atom, i32> = BTreeMap::new();
        let mut derived = Vec::new();
        for b in self.blocks.iter().chain(other.blocks.iter()) {
            if b.dr == 0 && b.dth == 0 {
                for (a, p) in &b.pows {
                    *plain.entry(a.clone()).or_insert(0) += p;
                }
            } else {
                derived.push(b.clone());
            }
        }
        plain.retain(|_, p| *p != 0);
        let mut blocks = Vec::new();
        if !plain.is_empty() {
            blocks.push(Block { pows: plain.into_iter().collect(), dr: 0, dth: 0 });
        }
        blocks.extend(derived);
        blocks.sort();
        Profile { blocks }
    }

    /// Product-rule pieces of `d/d coord` (coord 0 = r, 1 = theta).
    fn deriv_pieces(&self, coord: usize) -> Vec<Profile> {
        let mut out = Vec::new();
        for (k, _) in self.blocks.iter().enumerate() {
            let mut blocks = self.blocks.clone();
            if coord == 0 {
                blocks[k].dr += 1;
            } else {
                blocks[k].dth += 1;
            }
            blocks.sort();
            out.push(Profile { blocks });
        }
        out
    }

    pub fn value(&self, params: ManifoldParams, r: f64, th: f64) -> C {
        let rj = Jet2::var(r, 0);
        let thj = Jet2::var(th, 1);
        let mut acc = c(1.0, 0.0);
        for b in &self.blocks {
            acc *= b.eval_value(params, rj, thj);
        }
        acc
    }

    /// Full second-order jet in `(r, theta)`; requires a derivative-free,
    /// grid-free profile.
    pub fn jet(&self, params: ManifoldParams, r: f64, th: f64) -> Cx<Jet2> {
        let rj = Jet2::var(r, 0);
        let thj = Jet2::var(th, 1);
        let mut acc = Cx::new(Jet2::c(1.0), Jet2::c(0.0));
        for b in &self.blocks {
            assert!(
                b.dr == 0 && b.dth == 0 && b.pows.iter().all(|(a, _)| a.allows_jets()),
                "jets requested for a symbolic-derivative or tabulated profile"
            );
            acc = acc.mul(b.product_jet(params, rj, thj));
        }
        acc
    }

    pub fn supports_jets(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.dr == 0 && b.dth == 0 && b.pows.iter().all(|(a, _)| a.allows_jets()))
    }

    /// Upper end of the radial support when a compactly supported atom is
    /// present.
    pub fn radial_support_hint(&self) -> Option<f64> {
        let mut hint: Option<f64> = None;
        for b in &self.blocks {
            for (a, _) in &b.pows {
                let h = match a {
                    Atom::Plateau(n) => Some(f64::from(*n) + 1.0),
                    Atom::Bump(_, hi) => Some(hi.get()),
                    _ => None,
                };
                if let Some(h) = h {
                    hint = Some(hint.map_or(h, |x: f64| x.min(h)));
                }
            }
        }
        hint
    }

    fn conj(&self) -> Profile {
        let mut blocks = self.blocks.clone();
        for b in &mut blocks {
            for (a, _) in &mut b.pows {
                *a = match a.clone() {
                    Atom::Grid(g) => Atom::GridConj(g),
                    Atom::GridConj(g) => Atom::Grid(g),
                    other => other,
                };
            }
            b.pows.sort();
        }
        blocks.sort();
        Profile { blocks }
    }

    pub fn id_string(&self) -> String {
        if self.blocks.is_empty() {
            return "one".into();
        }
        let mut parts = Vec::new();
        for b in &self.blocks {
            let mut s = String::new();
            for (a, p) in &b.pows {
                let name = match a {
                    Atom::R => "r".into(),
                    Atom::Theta => "theta".into(),
                    Atom::SinTheta => "sin".into(),
                    Atom::CosTheta => "cos".into(),
                    Atom::Delta => "Delta".into(),
                    Atom::DeltaPlus => "DeltaPlus".into(),
                    Atom::Plateau(n) => format!("plateau[{n}]"),
                    Atom::Bump(lo, hi) => format!("bump[{},{}]", lo.get(), hi.get()),
                    Atom::PatchKN => "kN".into(),
                    Atom::PatchKS => "kS".into(),
                    Atom::Grid(g) => format!("grid[{}]", g.0.id),
                    Atom::GridConj(g) => format!("gridconj[{}]", g.0.id),
                };
                if !s.is_empty() {
                    s.push('*');
                }
                if *p == 2 {
                    s.push_str(&name);
                } else {
                    s.push_str(&format!("{name}^{}", 0.5 * f64::from(*p)));
                }
            }
            if b.dr > 0 || b.dth > 0 {
                s = format!("d_r^{}d_th^{}({s})", b.dr, b.dth);
            }
            parts.push(s);
        }
        parts.join("|")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub mode: Mode,
    pub coeff: C,
    pub profile: Profile,
}

/// Finite sum of torus-equivariant terms; the carrier of the deformed algebra.
#[derive(Clone, Debug, Default)]
pub struct ModeFunction {
    pub terms: Vec<Term>,
}

#[derive(Clone, Copy, Debug)]
pub struct DeformationParams {
    pub theta: f64,
}

impl ModeFunction {
    pub fn zero() -> Self {
        ModeFunction { terms: Vec::new() }
    }

    pub fn constant(v: C) -> Self {
        ModeFunction::single(Mode::zero(), v, Profile::one())
    }

    pub fn one() -> Self {
        ModeFunction::constant(c(1.0, 0.0))
    }

    pub fn single(mode: Mode, coeff: C, profile: Profile) -> Self {
        ModeFunction { terms: vec![Term { mode, coeff, profile }] }.canonical()
    }

    /// `e^{i m phi} e^{i n psi}` for integer `(m, n)`.
    pub fn phase(m: i32, n: i32) -> Self {
        ModeFunction::single(Mode::new_int(m, n), c(1.0, 0.0), Profile::one())
    }

    /// Half-integer phase on the double cover, in half-units.
    pub fn phase_half(m2: i32, n2: i32) -> Self {
        ModeFunction::single(Mode::new_half(m2, n2), c(1.0, 0.0), Profile::one())
    }

    pub fn canonical(mut self) -> Self {
        let mut map: BTreeMap<(Mode, Profile), C> = BTreeMap::new();
        for t in self.terms.drain(..) {
            let e = map.entry((t.mode, t.profile)).or_insert(ZC);
            *e += t.coeff;
        }
        let terms = map
            .into_iter()
            .filter(|(_, v)| *v != ZC)
            .map(|((mode, profile), coeff)| Term { mode, coeff, profile })
            .collect();
        ModeFunction { terms }
    }

    pub fn add(&self, other: &ModeFunction) -> ModeFunction {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.clone());
        ModeFunction { terms }.canonical()
    }

    pub fn scale(&self, s: C) -> ModeFunction {
        if s == ZC {
            return ModeFunction::zero();
        }
        let mut terms = self.terms.clone();
        for t in &mut terms {
            t.coeff *= s;
        }
        ModeFunction { terms }
    }

    pub fn sub(&self, other: &ModeFunction) -> ModeFunction {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    /// Pointwise product (no twist phase).
    pub fn mul_pointwise(&self, other: &ModeFunction) -> ModeFunction {
        let mut terms = Vec::new();
        for t1 in &self.terms {
            for t2 in &other.terms {
                terms.push(Term {
                    mode: t1.mode.add(t2.mode),
                    coeff: t1.coeff * t2.coeff,
                    profile: t1.profile.product(&t2.profile),
                });
            }
        }
        ModeFunction { terms }.canonical()
    }

    /// Twisted product: term-pairwise with `sigma(r, s)`.
    pub fn star(&self, other: &ModeFunction, theta: f64) -> ModeFunction {
        let mut terms = Vec::new();
        for t1 in &self.terms {
            for t2 in &other.terms {
                terms.push(Term {
                    mode: t1.mode.add(t2.mode),
                    coeff: t1.coeff * t2.coeff * sigma(theta, t1.mode, t2.mode),
                    profile: t1.profile.product(&t2.profile),
                });
            }
        }
        ModeFunction { terms }.canonical()
    }

    /// Involution `(f^*)_r = conj(f_{-r})`.
    pub fn involution(&self) -> ModeFunction {
        let terms = self
            .terms
            .iter()
            .map(|t| Term { mode: t.mode.neg(), coeff: t.coeff.conj(), profile: t.profile.conj() })
            .collect();
        ModeFunction { terms }.canonical()
    }

    /// Coordinate derivative: 0 = r, 1 = theta, 2 = phi, 3 = psi.
    pub fn deriv(&self, coord: usize) -> ModeFunction {
        let mut terms = Vec::new();
        for t in &self.terms {
            match coord {
                0 | 1 => {
                    for p in t.profile.deriv_pieces(coord) {
                        terms.push(Term { mode: t.mode, coeff: t.coeff, profile: p });
                    }
                }
                2 => terms.push(Term {
                    mode: t.mode,
                    coeff: t.coeff * c(0.0, t.mode.m()),
                    profile: t.profile.clone(),
                }),
                3 => terms.push(Term {
                    mode: t.mode,
                    coeff: t.coeff * c(0.0, t.mode.n()),
                    profile: t.profile.clone(),
                }),
                _ => unreachable!(),
            }
        }
        ModeFunction { terms }.canonical()
    }

    pub fn value(&self, params: ManifoldParams, pt: &Point) -> C {
        let mut acc = ZC;
        for t in &self.terms {
            let phase = Complex64::from_polar(1.0, t.mode.m() * pt.phi + t.mode.n() * pt.psi);
            acc += t.coeff * t.profile.value(params, pt.r, pt.theta) * phase;
        }
        acc
    }

    /// Value, gradient and Hessian in `(r, theta, phi, psi)`.
    pub fn jet4(&self, params: ManifoldParams, pt: &Point) -> (C, [C; 4], [[C; 4]; 4]) {
        let mut v = ZC;
        let mut g = [ZC; 4];
        let mut h = [[ZC; 4]; 4];
        for t in &self.terms {
            let pj = t.profile.jet(params, pt.r, pt.theta);
            let phase = Complex64::from_polar(1.0, t.mode.m() * pt.phi + t.mode.n() * pt.psi);
            let cc = t.coeff * phase;
            let p = c(pj.re.v, pj.im.v);
            let pr = c(pj.re.g[0], pj.im.g[0]);
            let pt_ = c(pj.re.g[1], pj.im.g[1]);
            let prr = c(pj.re.h[0][0], pj.im.h[0][0]);
            let prt = c(pj.re.h[0][1], pj.im.h[0][1]);
            let ptt = c(pj.re.h[1][1], pj.im.h[1][1]);
            let im = c(0.0, t.mode.m());
            let in_ = c(0.0, t.mode.n());
            v += cc * p;
            g[0] += cc * pr;
            g[1] += cc * pt_;
            g[2] += cc * p * im;
            g[3] += cc * p * in_;
            h[0][0] += cc * prr;
            h[0][1] += cc * prt;
            h[1][1] += cc * ptt;
            h[0][2] += cc * pr * im;
            h[0][3] += cc * pr * in_;
            h[1][2] += cc * pt_ * im;
            h[1][3] += cc * pt_ * in_;
            h[2][2] += cc * p * im * im;
            h[2][3] += cc * p * im * in_;
            h[3][3] += cc * p * in_ * in_;
        }
        for i in 0..4 {
            for j in 0..i {
                h[i][j] = h[j][i];
            }
        }
        (v, g, h)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.terms.iter().fold(0.0f64, |m, t| m.max(t.coeff.norm()))
    }

    /// Drop terms with coefficient modulus at or below `eps`.
    pub fn prune(&self, eps: f64) -> ModeFunction {
        ModeFunction {
            terms: self.terms.iter().filter(|t| t.coeff.norm() > eps).cloned().collect(),
        }
    }

    pub fn max_mode(&self) -> i32 {
        self.terms.iter().map(|t| t.mode.m2.abs().max(t.mode.n2.abs())).max().unwrap_or(0)
    }

    pub fn radial_support_hint(&self) -> Option<f64> {
        let mut hint = None;
        for t in &self.terms {
            match t.profile.radial_support_hint() {
                Some(h) => hint = Some(f64::max(hint.unwrap_or(0.0), h)),
                None => return None,
            }
        }
        hint
    }

    pub fn supports_jets(&self) -> bool {
        self.terms.iter().all(|t| t.profile.supports_jets())
    }

    /// The `(0,0)`-mode part.
    pub fn invariant_part(&self) -> ModeFunction {
        ModeFunction {
            terms: self.terms.iter().filter(|t| t.mode == Mode::zero()).cloned().collect(),
        }
    }

    pub fn sup_abs_on_box(&self, params: ManifoldParams, bx: &SamplingBox, n: usize) -> f64 {
        let (rlo, rhi) = bx.r_range(params);
        let mut sup = 0.0f64;
        for i in 0..n {
            let r = rlo + (rhi - rlo) * (i as f64 + 0.5) / n as f64;
            for j in 0..n {
                let th = bx.eps_theta
                    + (std::f64::consts::PI - 2.0 * bx.eps_theta) * (j as f64 + 0.5) / n as f64;
                for k in 0..8 {
                    let phi = TAU * k as f64 / 8.0;
                    for l in 0..8 {
                        let psi = TAU * l as f64 / 8.0;
                        let pt = Point { chart: crate::geometry::Chart::N, r, theta: th, phi, psi };
                        sup = sup.max(self.value(params, &pt).norm());
                    }
                }
            }
        }
        sup
    }
}

/// `cos^2(theta/2)` and `sin^2(theta/2)` as mode functions: the subordinate
/// partition of unity.
pub fn partition_h() -> (ModeFunction, ModeFunction) {
    // cos^2(theta/2) = (1 + cos theta)/2
    let half = c(0.5, 0.0);
    let h_n = ModeFunction::constant(half)
        .add(&ModeFunction::single(Mode::zero(), half, Profile::from_atoms(&[(Atom::CosTheta, 2)])));
    let h_s = ModeFunction::constant(half)
        .add(&ModeFunction::single(Mode::zero(), -half, Profile::from_atoms(&[(Atom::CosTheta, 2)])));
    (h_n, h_s)
}

/// Local unit: torus-invariant, exactly 1 on `K_n = {r <= n}`, supported in
/// `K_{n+1}`.
pub fn local_unit(n: u32) -> ModeFunction {
    assert!(n >= 1);
    ModeFunction::single(Mode::zero(), c(1.0, 0.0), Profile::from_atoms(&[(Atom::Plateau(n), 2)]))
}

// ---------------------------------------------------------------------------
// spectral decomposition
// ---------------------------------------------------------------------------

/// Function samples on a `(phi, psi)` torus grid for each `(r, theta)` node.
pub struct TorusSamples {
    pub r_nodes: Vec<f64>,
    pub theta_nodes: Vec<f64>,
    pub n_phi: usize,
    pub n_psi: usize,
    /// `values[(ir * n_theta + it) * n_phi * n_psi + j * n_psi + k]`
    pub values: Vec<C>,
}

impl TorusSamples {
    pub fn sample<F: Fn(&Point) -> C>(
        r_nodes: Vec<f64>,
        theta_nodes: Vec<f64>,
        n_phi: usize,
        n_psi: usize,
        f: F,
    ) -> Self {
        let (phis, _) = torus_nodes(n_phi);
        let (psis, _) = torus_nodes(n_psi);
        let mut values = Vec::with_capacity(r_nodes.len() * theta_nodes.len() * n_phi * n_psi);
        for &r in &r_nodes {
            for &th in &theta_nodes {
                for &phi in &phis {
                    for &psi in &psis {
                        values.push(f(&Point {
                            chart: crate::geometry::Chart::N,
                            r,
                            theta: th,
                            phi,
                            psi,
                        }));
                    }
                }
            }
        }
        TorusSamples { r_nodes, theta_nodes, n_phi, n_psi, values }
    }
}

/// Discrete Fourier analysis of the torus grid into integer modes
/// `|m|, |n| <= cutoff`.
pub fn spectral_decompose(samples: &TorusSamples, cutoff: u32) -> Result<ModeFunction> {
    let nyquist = ((samples.n_phi.min(samples.n_psi) - 1) / 2) as u32;
    if cutoff > nyquist {
        return Err(NcehError::AliasError { cutoff, nyquist });
    }
    let nr = samples.r_nodes.len();
    let nt = samples.theta_nodes.len();
    let (nphi, npsi) = (samples.n_phi, samples.n_psi);
    let mut terms = Vec::new();
    let cut = cutoff as i32;
    for m in -cut..=cut {
        for n in -cut..=cut {
            let mut vals = vec![ZC; nr * nt];
            let mut maxabs = 0.0f64;
            for ir in 0..nr {
                for it in 0..nt {
                    let mut acc = ZC;
                    for j in 0..nphi {
                        for k in 0..npsi {
                            let idx = ((ir * nt + it) * nphi + j) * npsi + k;
                            let phi = TAU * j as f64 / nphi as f64;
                            let psi = TAU * k as f64 / npsi as f64;
                            let ph = Complex64::from_polar(
                                1.0,
                                -(f64::from(m) * phi + f64::from(n) * psi),
                            );
                            acc += samples.values[idx] * ph;
                        }
                    }
                    acc /= (nphi * npsi) as f64;
                    maxabs = maxabs.max(acc.norm());
                    vals[ir * nt + it] = acc;
                }
            }
            if maxabs > 1e-13 {
                let data = GridData {
                    id: GRID_IDS.fetch_add(1, Ordering::Relaxed),
                    r_nodes: samples.r_nodes.clone(),
                    theta_nodes: samples.theta_nodes.clone(),
                    vals,
                };
                terms.push(Term {
                    mode: Mode::new_int(m, n),
                    coeff: c(1.0, 0.0),
                    profile: Profile::from_atoms(&[(Atom::Grid(GridAtom(Arc::new(data))), 2)]),
                });
            }
        }
    }
    Ok(ModeFunction { terms })
}

// ---------------------------------------------------------------------------
// oscillatory product
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct OscillatorySettings {
    /// Gaussian damping strengths; extrapolated to zero.
    pub eps_schedule: [f64; 3],
    /// Integration half-width `L = box_factor / sqrt(eps)`.
    pub box_factor: f64,
    /// Stabilization threshold for the Richardson step.
    pub stabilization: f64,
}

impl Default for OscillatorySettings {
    fn default() -> Self {
        OscillatorySettings { eps_schedule: [0.02, 0.01, 0.005], box_factor: 6.0, stabilization: 0.05 }
    }
}

/// `int_{-L}^{L} exp(sign i pi p^2 + 2 pi i x p - eps p^2) dp` by composite
/// Gauss-Legendre panels sized to the local oscillation.
fn fresnel_line(sign: f64, x: f64, eps: f64, l: f64) -> C {
    let fmax = l + x.abs() + 1.0;
    let panels = (2.0 * l * fmax / 3.0).ceil() as usize + 8;
    let (ps, ws) = composite_gl(16, -l, l, panels);
    let mut acc = ZC;
    for (p, w) in ps.iter().zip(&ws) {
        let phase = sign * std::f64::consts::PI * p * p + TAU * x * p;
        acc += Complex64::from_polar(*w, phase) * (-eps * p * p).exp();
    }
    acc
}

/// Damped oscillatory pairing `int e(alpha u + beta v + u v) exp(-eps(u^2+v^2))`
/// via the exact 45-degree rotation into two Fresnel lines.
fn damped_pair(alpha: f64, beta: f64, eps: f64, l: f64) -> C {
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    let a = (alpha + beta) * inv;
    let b = (alpha - beta) * inv;
    fresnel_line(1.0, a, eps, l) * fresnel_line(-1.0, b, eps, l)
}

/// Oscillatory-integral phase for the mode pair `(r, s)`; converges to
/// `sigma(r, s)` as the damping is removed.
fn oscillatory_phase(theta: f64, r: Mode, s: Mode, set: &OscillatorySettings) -> Result<C> {
    let mut vals = [ZC; 3];
    for (k, eps) in set.eps_schedule.iter().enumerate() {
        let l = set.box_factor / eps.sqrt();
        // axis 1 couples (u1, v1) with linear phases theta*r4 and -s3;
        // axis 2 couples (u2, v2) with -theta*r3 and -s4.
        let a1 = damped_pair(theta * r.n(), -s.m(), *eps, l);
        let a2 = damped_pair(-theta * r.m(), -s.n(), *eps, l);
        vals[k] = a1 * a2;
    }
    let r1 = vals[1] * 2.0 - vals[0];
    let r2 = vals[2] * 2.0 - vals[1];
    let ext = (r2 * 4.0 - r1) / 3.0;
    if (r2 - r1).norm() > set.stabilization {
        return Err(NcehError::QuadratureDivergence {
            what: format!(
                "oscillatory phase for modes ({},{})x({},{}) moved {:.2e} between Richardson levels",
                r.m(), r.n(), s.m(), s.n(), (r2 - r1).norm()
            ),
        });
    }
    Ok(ext)
}

/// Deformed product through the regularized oscillatory integral; converges
/// to `star` as the damping is removed.
pub fn oscillatory_product(
    f: &ModeFunction,
    g: &ModeFunction,
    theta: f64,
    set: &OscillatorySettings,
) -> Result<ModeFunction> {
    let mut cache: BTreeMap<(Mode, Mode), C> = BTreeMap::new();
    let mut terms = Vec::new();
    for t1 in &f.terms {
        for t2 in &g.terms {
            let key = (t1.mode, t2.mode);
            let phase = match cache.get(&key) {
                Some(p) => *p,
                None => {
                    let p = oscillatory_phase(theta, t1.mode, t2.mode, set)?;
                    cache.insert(key, p);
                    p
                }
            };
            terms.push(Term {
                mode: t1.mode.add(t2.mode),
                coeff: t1.coeff * t2.coeff * phase,
                profile: t1.profile.product(&t2.profile),
            });
        }
    }
    Ok(ModeFunction { terms }.canonical())
}

// ---------------------------------------------------------------------------
// norms
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct NormSettings {
    pub r_order: usize,
    pub r_panels: usize,
    pub theta_order: usize,
    pub theta_panels: usize,
    /// Fractional tolerance for the radial tail test.
    pub tail_tol: f64,
}

impl Default for NormSettings {
    fn default() -> Self {
        NormSettings { r_order: 24, r_panels: 8, theta_order: 24, theta_panels: 4, tail_tol: 1e-8 }
    }
}

fn radial_box(params: ManifoldParams, f: &ModeFunction, bx: &SamplingBox) -> (f64, f64) {
    let (rlo, rhi) = bx.r_range(params);
    match f.radial_support_hint() {
        Some(h) => (rlo.min(params.a + 1e-3), h.max(rlo + 0.1)),
        None => (rlo, rhi),
    }
}

/// `(k, 2)-th` Sobolev norm: `sum_{m<=k} (int |nabla^m f|^2 dVol)^{1/2}`.
///
/// Torus orthogonality reduces the angular integrals per mode, so only a 2-d
/// `(r, theta)` quadrature is performed.
pub fn sobolev_norm(
    params: ManifoldParams,
    f: &ModeFunction,
    k: usize,
    set: &NormSettings,
) -> Result<f64> {
    assert!(k <= 2, "Sobolev evaluator implemented for k <= 2");
    let bx = SamplingBox::default();
    let (rlo, rhi) = radial_box(params, f, &bx);
    let (rs, rw) = composite_gl(set.r_order, rlo, rhi, set.r_panels);
    let (ts, tw) = composite_gl(
        set.theta_order,
        bx.eps_theta,
        std::f64::consts::PI - bx.eps_theta,
        set.theta_panels,
    );

    // per-mode densities |nabla^m f_s|^2 are torus invariant
    let mut integrals = vec![0.0f64; k + 1];
    let mut tail = vec![0.0f64; k + 1];
    let tail_lo = rhi - (rhi - rlo) / set.r_panels as f64;
    for t in &f.terms {
        let single = ModeFunction { terms: vec![t.clone()] };
        for (&r, &wr) in rs.iter().zip(&rw) {
            for (&th, &wt) in ts.iter().zip(&tw) {
                let pt = Point { chart: crate::geometry::Chart::N, r, theta: th, phi: 0.0, psi: 0.0 };
                let vol = crate::geometry::volume_density(params, &pt);
                let (v, g, h) = single.jet4(params, &pt);
                let ginv = crate::geometry::metric_inverse(params, &pt)?;
                let w = wr * wt * vol;
                let d0 = v.norm_sqr();
                integrals[0] += w * d0;
                if r >= tail_lo {
                    tail[0] += w * d0;
                }
                if k >= 1 {
                    let mut d1 = 0.0;
                    for i in 0..4 {
                        for j in 0..4 {
                            d1 += ginv[i][j] * (g[i] * g[j].conj()).re;
                        }
                    }
                    integrals[1] += w * d1;
                    if r >= tail_lo {
                        tail[1] += w * d1;
                    }
                }
                if k >= 2 {
                    let gamma = crate::geometry::christoffel_closed(params, &pt)?;
                    let mut hess = [[ZC; 4]; 4];
                    for i in 0..4 {
                        for j in 0..4 {
                            let mut v2 = h[i][j];
                            for l in 0..4 {
                                v2 -= c(gamma[l][i][j], 0.0) * g[l];
                            }
                            hess[i][j] = v2;
                        }
                    }
                    let mut d2 = 0.0;
                    for i in 0..4 {
                        for j in 0..4 {
                            for aa in 0..4 {
                                for bb in 0..4 {
                                    d2 += ginv[i][aa]
                                        * ginv[j][bb]
                                        * (hess[i][j] * hess[aa][bb].conj()).re;
                                }
                            }
                        }
                    }
                    integrals[2] += w * d2;
                    if r >= tail_lo {
                        tail[2] += w * d2;
                    }
                }
            }
        }
    }
    let torus = TAU * TAU;
    let mut norm = 0.0;
    for m in 0..=k {
        let total = integrals[m] * torus;
        let tl = tail[m] * torus;
        if f.radial_support_hint().is_none() && tl > set.tail_tol * (total.abs() + 1e-30) && tl > set.tail_tol {
            return Err(NcehError::NonIntegrable { tail: tl, tol: set.tail_tol });
        }
        norm += total.max(0.0).sqrt();
    }
    Ok(norm)
}

/// Partition-weighted seminorm `q_m`: sup over the sampling grid of
/// `sum_charts h_chart |d^alpha f|`, `|alpha| <= m <= 2`.
pub fn seminorm_q(params: ManifoldParams, f: &ModeFunction, m: usize) -> f64 {
    assert!(m <= 2);
    let bx = SamplingBox::default();
    let (rlo, rhi) = radial_box(params, f, &bx);
    let mut sup = 0.0f64;
    let nr = 24;
    let nt = 24;
    for i in 0..nr {
        let r = rlo + (rhi - rlo) * (i as f64) / (nr - 1) as f64;
        for j in 0..=nt {
            let th = bx.eps_theta
                + (std::f64::consts::PI - 2.0 * bx.eps_theta) * (j as f64) / nt as f64;
            for kphi in 0..12 {
                let phi = TAU * kphi as f64 / 12.0;
                for kpsi in 0..8 {
                    let psi = TAU * kpsi as f64 / 8.0;
                    let pt = Point { chart: crate::geometry::Chart::N, r, theta: th, phi, psi };
                    // h_N + h_S = 1 pointwise, so the partition sum weights
                    // each derivative by one.
                    let (v, g, h) = f.jet4(params, &pt);
                    let mut best = v.norm();
                    if m >= 1 {
                        for gi in &g {
                            best = best.max(gi.norm());
                        }
                    }
                    if m >= 2 {
                        for row in &h {
                            for e in row {
                                best = best.max(e.norm());
                            }
                        }
                    }
                    sup = sup.max(best);
                }
            }
        }
    }
    sup
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub struct ModeTermJson {
    pub m: f64,
    pub n: f64,
    pub coeff_re: f64,
    pub coeff_im: f64,
    pub profile_id: String,
    pub profile_params: Vec<f64>,
}

impl Serialize for ModeFunction {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = ser.serialize_seq(Some(self.terms.len()))?;
        for t in &self.terms {
            let mut params = Vec::new();
            for b in &t.profile.blocks {
                for (a, p) in &b.pows {
                    match a {
                        Atom::Plateau(n) => params.push(f64::from(*n)),
                        Atom::Bump(lo, hi) => {
                            params.push(lo.get());
                            params.push(hi.get());
                        }
                        _ => params.push(0.5 * f64::from(*p)),
                    }
                }
            }
            seq.serialize_element(&ModeTermJson {
                m: t.mode.m(),
                n: t.mode.n(),
                coeff_re: t.coeff.re,
                coeff_im: t.coeff.im,
                profile_id: t.profile.id_string(),
                profile_params: params,
            })?;
        }
        seq.end()
    }
}

/// Parse the restricted term schema used for custom CLI inputs.
pub fn mode_function_from_json(terms: &[ModeTermJson]) -> Result<ModeFunction> {
    let mut out = Vec::new();
    for t in terms {
        let mode = Mode::new_half((2.0 * t.m).round() as i32, (2.0 * t.n).round() as i32);
        let profile = match t.profile_id.as_str() {
            "one" => Profile::one(),
            "bump" => {
                if t.profile_params.len() != 2 {
                    return Err(NcehError::Config("bump profile needs [lo, hi]".into()));
                }
                Profile::from_atoms(&[(
                    Atom::Bump(F64Key::new(t.profile_params[0]), F64Key::new(t.profile_params[1])),
                    2,
                )])
            }
            "plateau" => {
                if t.profile_params.len() != 1 {
                    return Err(NcehError::Config("plateau profile needs [n]".into()));
                }
                Profile::from_atoms(&[(Atom::Plateau(t.profile_params[0] as u32), 2)])
            }
            "rtrig" => {
                if t.profile_params.len() != 4 {
                    return Err(NcehError::Config(
                        "rtrig profile needs [pow_r, pow_theta, pow_sin, pow_cos]".into(),
                    ));
                }
                Profile::rtrig(
                    t.profile_params[0] as i32,
                    t.profile_params[1] as i32,
                    t.profile_params[2] as i32,
                    t.profile_params[3] as i32,
                )
            }
            other => {
                return Err(NcehError::Config(format!("unknown profile id '{other}'")));
            }
        };
        out.push(Term { mode, coeff: c(t.coeff_re, t.coeff_im), profile });
    }
    Ok(ModeFunction { terms: out }.canonical())
}

/// Equality on a deterministic grid; used for the exact absorption checks.
pub fn max_abs_diff_on_grid(
    params: ManifoldParams,
    f: &ModeFunction,
    g: &ModeFunction,
    n: usize,
) -> f64 {
    let bx = SamplingBox::default();
    let (rlo, rhi) = bx.r_range(params);
    let mut worst = 0.0f64;
    for i in 0..n {
        let r = rlo + (rhi - rlo) * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let th = bx.eps_theta
                + (std::f64::consts::PI - 2.0 * bx.eps_theta) * j as f64 / (n - 1) as f64;
            for kphi in 0..6 {
                for kpsi in 0..6 {
                    let pt = Point {
                        chart: crate::geometry::Chart::N,
                        r,
                        theta: th,
                        phi: TAU * kphi as f64 / 6.0,
                        psi: TAU * kpsi as f64 / 6.0,
                    };
                    worst = worst.max((f.value(params, &pt) - g.value(params, &pt)).norm());
                }
            }
        }
    }
    worst
}
