//! The ⋆-algebra generated by `X`, `Y` and `N_F` as a normal-ordering
//! rewriting system.
//!
//! Every element is stored in canonical form `Σ X^m Y^n N_{F_{mn}}`, keyed by
//! `(m, n)`. Products are reduced with
//!
//! ```text
//! [X, Y] = N_x,   X N_F = N_{T₂F} X,   Y N_F = N_{T₋₂F} Y
//! ```
//!
//! (equivalently `N_F X = X N_{T₋₂F}` and `N_F Y = Y N_{T₂F}`), where
//! `(T_a F)(x) = F(x − a)`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::funcspace::{fmt_scalar, FunctionExpr};

/// Shift applied to `F` when `X` moves across `N_F`.
pub const LADDER_SHIFT: f64 = 2.0;

/// Canonical monomial `X^m Y^n N_F`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub x_power: u32,
    pub y_power: u32,
    pub cartan: FunctionExpr,
}

impl Monomial {
    pub fn new(x_power: u32, y_power: u32, cartan: FunctionExpr) -> Self {
        Monomial { x_power, y_power, cartan }
    }

    /// Grading `m − n`; `U_t` multiplies the monomial by `e^{it(m−n)}`.
    pub fn weight(&self) -> i64 {
        i64::from(self.x_power) - i64::from(self.y_power)
    }
}

/// Element of the algebra in normal-ordered form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlgebraElement {
    terms: BTreeMap<(u32, u32), FunctionExpr>,
}

impl AlgebraElement {
    pub fn zero() -> Self {
        AlgebraElement { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::scalar(Complex64::new(1.0, 0.0))
    }

    pub fn scalar(c: Complex64) -> Self {
        Self::monomial(0, 0, FunctionExpr::constant(c))
    }

    pub fn x() -> Self {
        Self::monomial(1, 0, FunctionExpr::one())
    }

    pub fn y() -> Self {
        Self::monomial(0, 1, FunctionExpr::one())
    }

    /// `N_F`.
    pub fn cartan(f: FunctionExpr) -> Self {
        Self::monomial(0, 0, f)
    }

    /// `H = N_x`.
    pub fn h() -> Self {
        Self::cartan(FunctionExpr::x())
    }

    /// `X^m Y^n N_F`.
    pub fn monomial(m: u32, n: u32, f: FunctionExpr) -> Self {
        let mut out = Self::zero();
        out.accumulate(m, n, f);
        out
    }

    pub fn from_monomials<I: IntoIterator<Item = Monomial>>(monomials: I) -> Self {
        let mut out = Self::zero();
        for mono in monomials {
            out.accumulate(mono.x_power, mono.y_power, mono.cartan);
        }
        out
    }

    fn accumulate(&mut self, m: u32, n: u32, f: FunctionExpr) {
        if f.is_zero() {
            return;
        }
        let key = (m, n);
        let updated = match self.terms.get(&key) {
            Some(existing) => existing + &f,
            None => f,
        };
        if updated.is_zero() {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, updated);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Cartan coefficient of `X^m Y^n`, if present.
    pub fn get(&self, m: u32, n: u32) -> Option<&FunctionExpr> {
        self.terms.get(&(m, n))
    }

    /// Iterates `((m, n), F)` in key order.
    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), &FunctionExpr)> {
        self.terms.iter().map(|(k, f)| (*k, f))
    }

    pub fn monomials(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.terms.iter().map(|(&(m, n), f)| Monomial::new(m, n, f.clone()))
    }

    /// Maximum `m + n` over the terms.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|&(m, n)| m + n).max().unwrap_or(0)
    }

    /// Maximum polynomial degree over the Cartan coefficients.
    pub fn cartan_degree(&self) -> u32 {
        self.terms.values().map(FunctionExpr::degree).max().unwrap_or(0)
    }

    /// The weight-zero part (`m = n` terms).
    pub fn weight_zero_part(&self) -> AlgebraElement {
        AlgebraElement {
            terms: self
                .terms
                .iter()
                .filter(|(&(m, n), _)| m == n)
                .map(|(k, f)| (*k, f.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero();
        for (&(m, n), f) in &self.terms {
            out.accumulate(m, n, f.scale(c));
        }
        out
    }

    /// Product in canonical form.
    pub fn multiply(&self, other: &AlgebraElement) -> AlgebraElement {
        let mut out = Self::zero();
        let mut ordered = YxTable::default();
        for (&(a, b), f) in &self.terms {
            for (&(c, d), g) in &other.terms {
                multiply_monomials(&mut out, &mut ordered, (a, b, f), (c, d, g));
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> AlgebraElement {
        (0..k).fold(Self::one(), |acc, _| acc.multiply(self))
    }

    /// `[a, b] = ab − ba`.
    pub fn commutator(&self, other: &AlgebraElement) -> AlgebraElement {
        &self.multiply(other) - &other.multiply(self)
    }

    /// The antilinear antihomomorphism with `X⋆ = −Y`, `N_F⋆ = N_{F⋆}`.
    ///
    /// `(X^m Y^n N_F)⋆ = N_{F⋆} (−X)^n (−Y)^m = (−1)^{m+n} X^n Y^m N_{T_{2(m−n)} F⋆}`.
    pub fn involution(&self) -> AlgebraElement {
        let mut out = Self::zero();
        for (&(m, n), f) in &self.terms {
            let sign = if (m + n) % 2 == 0 { 1.0 } else { -1.0 };
            let shift = LADDER_SHIFT * (f64::from(m) - f64::from(n));
            let g = f.conjugate().shift(shift).scale(Complex64::new(sign, 0.0));
            out.accumulate(n, m, g);
        }
        out
    }

    /// `U_z`: scales each `(m, n)` term by `e^{iz(m−n)}`. Real `z` gives the
    /// dynamics, `z = iβ` its analytic continuation.
    pub fn apply_automorphism(&self, z: Complex64) -> AlgebraElement {
        let i = Complex64::new(0.0, 1.0);
        let mut out = Self::zero();
        for (&(m, n), f) in &self.terms {
            let w = f64::from(m) - f64::from(n);
            out.accumulate(m, n, f.scale((i * z * w).exp()));
        }
        out
    }

    /// Coefficient-wise comparison of canonical forms.
    pub fn approx_eq(&self, other: &AlgebraElement, tol: f64) -> bool {
        let keys: std::collections::BTreeSet<_> =
            self.terms.keys().chain(other.terms.keys()).collect();
        let zero = FunctionExpr::zero();
        keys.into_iter().all(|k| {
            let a = self.terms.get(k).unwrap_or(&zero);
            let b = other.terms.get(k).unwrap_or(&zero);
            a.approx_eq(b, tol)
        })
    }
}

/// Memo of the normal-ordered forms of `Y^b X^c`, each a list of
/// `(i, j, H)` meaning `X^i Y^j N_H`.
type OrderedTerms = Vec<(u32, u32, FunctionExpr)>;

#[derive(Default)]
struct YxTable {
    cache: BTreeMap<(u32, u32), OrderedTerms>,
}

impl YxTable {
    fn get(&mut self, b: u32, c: u32) -> &[(u32, u32, FunctionExpr)] {
        if !self.cache.contains_key(&(b, c)) {
            let value = self.compute(b, c);
            self.cache.insert((b, c), value);
        }
        &self.cache[&(b, c)]
    }

    fn compute(&mut self, b: u32, c: u32) -> Vec<(u32, u32, FunctionExpr)> {
        if b == 0 || c == 0 {
            return vec![(c, b, FunctionExpr::one())];
        }
        // Y^b X^c = Y · (Y^{b−1} X^c); then
        // Y X^i = X^i Y − X^{i−1} N_{i·x + i(i−1)}.
        let inner = self.get(b - 1, c).to_vec();
        let mut acc: BTreeMap<(u32, u32), FunctionExpr> = BTreeMap::new();
        let mut push = |i: u32, j: u32, h: FunctionExpr| {
            let entry = acc.entry((i, j)).or_insert_with(FunctionExpr::zero);
            *entry = &*entry + &h;
        };
        for (i, j, h) in inner {
            push(i, j + 1, h.clone());
            if i > 0 {
                let fi = f64::from(i);
                // X^{i−1} N_G Y^j = X^{i−1} Y^j N_{T_{2j} G}
                let g = &FunctionExpr::x().scale(Complex64::new(-fi, 0.0))
                    - &FunctionExpr::from(fi * (fi - 1.0));
                let g = g.shift(LADDER_SHIFT * f64::from(j));
                push(i - 1, j, &g * &h);
            }
        }
        acc.into_iter()
            .filter(|(_, h)| !h.is_zero())
            .map(|((i, j), h)| (i, j, h))
            .collect()
    }
}

/// `(X^a Y^b N_F)(X^c Y^d N_G) = X^a (Y^b X^c) Y^d N_{T_{2(d−c)}F · G}`,
/// with `Y^b X^c = Σ X^i Y^j N_H` and `N_H Y^d = Y^d N_{T_{2d} H}`.
fn multiply_monomials(
    out: &mut AlgebraElement,
    ordered: &mut YxTable,
    (a, b, f): (u32, u32, &FunctionExpr),
    (c, d, g): (u32, u32, &FunctionExpr),
) {
    let moved_f = f.shift(LADDER_SHIFT * (f64::from(d) - f64::from(c)));
    let tail = &moved_f * g;
    for (i, j, h) in ordered.get(b, c).to_vec() {
        let h = h.shift(LADDER_SHIFT * f64::from(d));
        out.accumulate(a + i, j + d, &h * &tail);
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        let mut out = self.clone();
        for (&(m, n), f) in &rhs.terms {
            out.accumulate(m, n, f.clone());
        }
        out
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        let mut out = self.clone();
        for (&(m, n), f) in &rhs.terms {
            out.accumulate(m, n, -f);
        }
        out
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Neg for AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        -&self
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.multiply(rhs)
    }
}

impl Add for AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: AlgebraElement) -> AlgebraElement {
        &self + &rhs
    }
}

impl Sub for AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: AlgebraElement) -> AlgebraElement {
        &self - &rhs
    }
}

impl Mul for AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: AlgebraElement) -> AlgebraElement {
        &self * &rhs
    }
}

fn fmt_power(symbol: &str, k: u32) -> Option<String> {
    match k {
        0 => None,
        1 => Some(symbol.to_string()),
        k => Some(format!("{symbol}^{k}")),
    }
}

fn fmt_monomial(f: &mut fmt::Formatter<'_>, x_sym: &str, y_sym: &str, cartan: &str, key: (u32, u32), g: &FunctionExpr) -> fmt::Result {
    let mut factors: Vec<String> = Vec::new();
    if let Some(c) = g.as_constant() {
        if c != Complex64::new(1.0, 0.0) || key == (0, 0) {
            factors.push(fmt_scalar(c));
        }
    }
    factors.extend(fmt_power(x_sym, key.0));
    factors.extend(fmt_power(y_sym, key.1));
    if g.as_constant().is_none() {
        if cartan == "N" && *g == FunctionExpr::x() {
            factors.push("N".to_string());
        } else {
            factors.push(format!("N[{g}]"));
        }
    }
    write!(f, "{}", factors.join(" "))
}

impl fmt::Display for AlgebraElement {
    /// Output is accepted by [`crate::parse::parse_element`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (&key, g)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            fmt_monomial(f, "X", "Y", "N[x]", key, g)?;
        }
        Ok(())
    }
}

/// An element rewritten in square-of-white-noise notation:
/// `Y = B/√2`, `X = −B⁺/√2`, `N_x = N`.
///
/// Term `(m, n) ↦ F` stands for `(B⁺)^m B^n N_F`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwnElement {
    terms: BTreeMap<(u32, u32), FunctionExpr>,
}

fn swn_factor(m: u32, n: u32) -> f64 {
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * std::f64::consts::FRAC_1_SQRT_2.powi((m + n) as i32)
}

impl SwnElement {
    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), &FunctionExpr)> {
        self.terms.iter().map(|(k, f)| (*k, f))
    }

    /// Inverse relabeling back to `X`, `Y`, `N_F`.
    pub fn to_algebra(&self) -> AlgebraElement {
        let mut out = AlgebraElement::zero();
        for (&(m, n), f) in &self.terms {
            out.accumulate(m, n, f.scale(Complex64::new(1.0 / swn_factor(m, n), 0.0)));
        }
        out
    }
}

/// `X^m Y^n N_F = (−1)^m 2^{−(m+n)/2} (B⁺)^m B^n N_F`.
pub fn swn_basis(a: &AlgebraElement) -> SwnElement {
    SwnElement {
        terms: a
            .terms
            .iter()
            .map(|(&(m, n), f)| ((m, n), f.scale(Complex64::new(swn_factor(m, n), 0.0))))
            .collect(),
    }
}

impl fmt::Display for SwnElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (&key, g)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            fmt_monomial(f, "B+", "B", "N", key, g)?;
        }
        Ok(())
    }
}
