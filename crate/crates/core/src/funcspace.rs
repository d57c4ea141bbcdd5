//! Symbolic functions of the form `Σ c · xⁿ · e^{itx}`.
//!
//! This is the function class that labels the Cartan generators `N_F`. It is
//! closed under sums, pointwise products, the shifts `(T_a F)(x) = F(x − a)`
//! and complex conjugation, and it contains both `x` (so `H = N_x`) and the
//! characters `e^{itx}` used by characteristic functionals.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Coefficients smaller than this fraction of the largest coefficient are
/// dropped when a function is canonicalized.
pub const RELATIVE_DROP: f64 = 1e-14;

/// Frequencies that differ by less than this (relative) are one key, so that
/// sums of frequencies accumulated in different orders still merge.
pub const FREQ_TOL: f64 = 1e-12;

/// One `coeff · x^power · e^{i·freq·x}` summand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub power: u32,
    pub freq: f64,
}

impl Term {
    pub fn new(coeff: Complex64, power: u32, freq: f64) -> Self {
        Term { coeff, power, freq }
    }

    fn key_cmp(&self, other: &Term) -> Ordering {
        self.power
            .cmp(&other.power)
            .then_with(|| self.freq.total_cmp(&other.freq))
    }

    fn same_key(&self, other: &Term) -> bool {
        self.power == other.power && (self.freq - other.freq).abs() <= FREQ_TOL * self.freq.abs().max(1.0)
    }

    fn evaluate(&self, x: f64) -> Complex64 {
        let phase = if self.freq == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            let (hi, lo) = dd::two_prod(self.freq, x);
            dd::cis(dd::Dd { hi, lo })
        };
        self.coeff * x.powi(self.power as i32) * phase
    }
}

/// A finite sum of `c · xⁿ · e^{itx}` terms in canonical form: sorted by
/// `(n, t)`, with unique keys and no (numerically) zero coefficients.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FunctionExpr {
    terms: Vec<Term>,
}

impl FunctionExpr {
    pub fn zero() -> Self {
        FunctionExpr { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_terms([Term::new(c, 0, 0.0)])
    }

    /// The coordinate function `x`.
    pub fn x() -> Self {
        Self::monomial(Complex64::new(1.0, 0.0), 1, 0.0)
    }

    /// `x^n`.
    pub fn power(n: u32) -> Self {
        Self::monomial(Complex64::new(1.0, 0.0), n, 0.0)
    }

    /// The character `e^{itx}`.
    pub fn exp_i(t: f64) -> Self {
        Self::monomial(Complex64::new(1.0, 0.0), 0, t)
    }

    pub fn monomial(coeff: Complex64, power: u32, freq: f64) -> Self {
        Self::from_terms([Term::new(coeff, power, freq)])
    }

    /// Builds the canonical form of an arbitrary list of terms.
    pub fn from_terms<I: IntoIterator<Item = Term>>(terms: I) -> Self {
        let mut raw: Vec<Term> = terms
            .into_iter()
            .map(|mut t| {
                // -0.0 and 0.0 must share a key
                if t.freq == 0.0 {
                    t.freq = 0.0;
                }
                t
            })
            .collect();
        raw.sort_by(Term::key_cmp);

        let mut merged: Vec<Term> = Vec::with_capacity(raw.len());
        for t in raw {
            match merged.last_mut() {
                Some(last) if last.same_key(&t) => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }

        let scale = merged.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max);
        let cutoff = scale * RELATIVE_DROP;
        merged.retain(|t| t.coeff.norm() > cutoff && t.coeff.norm() != 0.0);
        FunctionExpr { terms: merged }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest power of `x` present; this is the polynomial growth order.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.power).max().unwrap_or(0)
    }

    /// Sum of coefficient magnitudes; `|F(x)| ≤ coeff_l1 · max(1, |x|)^degree`.
    pub fn coeff_l1(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }

    /// Returns the value if the function is a constant.
    pub fn as_constant(&self) -> Option<Complex64> {
        match self.terms.as_slice() {
            [] => Some(Complex64::new(0.0, 0.0)),
            [t] if t.power == 0 && t.freq == 0.0 => Some(t.coeff),
            _ => None,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_terms(self.terms.iter().map(|t| Term::new(t.coeff * c, t.power, t.freq)))
    }

    /// `(T_a F)(x) = F(x − a)`.
    pub fn shift(&self, a: f64) -> Self {
        if a == 0.0 {
            return self.clone();
        }
        let mut out = Vec::new();
        for t in &self.terms {
            let phase = Complex64::new(0.0, -t.freq * a).exp();
            let n = t.power;
            // (x − a)^n = Σ_k C(n,k) (−a)^{n−k} x^k
            let mut binom = 1.0_f64;
            for k in 0..=n {
                let c = binom * (-a).powi((n - k) as i32);
                out.push(Term::new(t.coeff * phase * c, k, t.freq));
                binom = binom * f64::from(n - k) / f64::from(k + 1);
            }
        }
        Self::from_terms(out)
    }

    /// Pointwise product.
    pub fn multiply(&self, other: &FunctionExpr) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                out.push(Term::new(a.coeff * b.coeff, a.power + b.power, a.freq + b.freq));
            }
        }
        Self::from_terms(out)
    }

    /// Complex conjugation `F⋆(x) = conj(F(x))` for real `x`.
    pub fn conjugate(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|t| Term::new(t.coeff.conj(), t.power, -t.freq)))
    }

    pub fn evaluate(&self, x0: f64) -> Complex64 {
        self.terms.iter().map(|t| t.evaluate(x0)).sum()
    }

    /// `F(base + offset)` with the argument and the polynomial parts carried
    /// in double-double arithmetic, so that `T_a F` at `base + offset + a`
    /// rounds to the same value as `F` at `base + offset` whenever the shifted
    /// coefficients are exact.
    pub fn evaluate_shifted(&self, base: f64, offset: f64) -> Complex64 {
        let x = dd::two_sum(base, offset);
        let mut re = dd::Dd::ZERO;
        let mut im = dd::Dd::ZERO;
        let mut tail = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let mut xn = dd::Dd::ONE;
            for _ in 0..t.power {
                xn = xn.mul(x);
            }
            if t.freq == 0.0 {
                re = re.add(xn.mul_f64(t.coeff.re));
                im = im.add(xn.mul_f64(t.coeff.im));
            } else {
                tail += t.coeff * xn.to_f64() * dd::cis(x.mul_f64(t.freq));
            }
        }
        Complex64::new(re.to_f64(), im.to_f64()) + tail
    }

    /// Coefficient-wise comparison; keys must coincide exactly and
    /// coefficients agree to `tol · (1 + scale)`.
    pub fn approx_eq(&self, other: &FunctionExpr, tol: f64) -> bool {
        let scale = self
            .terms
            .iter()
            .chain(other.terms.iter())
            .map(|t| t.coeff.norm())
            .fold(0.0, f64::max);
        let bound = tol * (1.0 + scale);
        let diff = self - other;
        diff.terms.iter().all(|t| t.coeff.norm() <= bound)
    }
}

impl From<f64> for FunctionExpr {
    fn from(c: f64) -> Self {
        FunctionExpr::constant(Complex64::new(c, 0.0))
    }
}

impl From<Complex64> for FunctionExpr {
    fn from(c: Complex64) -> Self {
        FunctionExpr::constant(c)
    }
}

impl Add for &FunctionExpr {
    type Output = FunctionExpr;
    fn add(self, rhs: &FunctionExpr) -> FunctionExpr {
        FunctionExpr::from_terms(self.terms.iter().chain(rhs.terms.iter()).copied())
    }
}

impl Sub for &FunctionExpr {
    type Output = FunctionExpr;
    fn sub(self, rhs: &FunctionExpr) -> FunctionExpr {
        FunctionExpr::from_terms(
            self.terms
                .iter()
                .copied()
                .chain(rhs.terms.iter().map(|t| Term::new(-t.coeff, t.power, t.freq))),
        )
    }
}

impl Neg for &FunctionExpr {
    type Output = FunctionExpr;
    fn neg(self) -> FunctionExpr {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &FunctionExpr {
    type Output = FunctionExpr;
    fn mul(self, rhs: &FunctionExpr) -> FunctionExpr {
        self.multiply(rhs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for FunctionExpr {
            type Output = FunctionExpr;
            fn $method(self, rhs: FunctionExpr) -> FunctionExpr {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for FunctionExpr {
    type Output = FunctionExpr;
    fn neg(self) -> FunctionExpr {
        -&self
    }
}

mod dd {
    //! Minimal double-double arithmetic (Dekker/Knuth error-free transforms).

    use num_complex::Complex64;

    const TWO_PI: Dd = Dd { hi: std::f64::consts::TAU, lo: 2.4492935982947064e-16 };

    #[derive(Debug, Clone, Copy)]
    pub struct Dd {
        pub hi: f64,
        pub lo: f64,
    }

    pub fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    impl Dd {
        pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
        pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

        pub fn add(self, o: Dd) -> Dd {
            let s = two_sum(self.hi, o.hi);
            let lo = s.lo + self.lo + o.lo;
            let hi = s.hi + lo;
            Dd { hi, lo: lo - (hi - s.hi) }
        }

        pub fn mul(self, o: Dd) -> Dd {
            let (p, e) = two_prod(self.hi, o.hi);
            let e = e + (self.hi * o.lo + self.lo * o.hi);
            let hi = p + e;
            Dd { hi, lo: e - (hi - p) }
        }

        pub fn mul_f64(self, b: f64) -> Dd {
            self.mul(Dd { hi: b, lo: 0.0 })
        }

        pub fn to_f64(self) -> f64 {
            self.hi + self.lo
        }
    }

    /// `e^{iθ}` with `θ` reduced modulo `2π` before rounding, so large
    /// arguments keep full relative accuracy in the phase.
    pub fn cis(theta: Dd) -> Complex64 {
        let k = (theta.hi / TWO_PI.hi).round();
        let r = theta.add(TWO_PI.mul_f64(-k));
        let (s, c) = r.hi.sin_cos();
        // e^{i(hi+lo)} ≈ e^{i hi}(1 + i lo)
        Complex64::new(c, s) * Complex64::new(1.0, r.lo)
    }
}

/// Formats a complex scalar so that the expression parser reads it back.
pub(crate) fn fmt_scalar(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else if c.im < 0.0 {
        format!("({}-{}i)", c.re, -c.im)
    } else {
        format!("({}+{}i)", c.re, c.im)
    }
}

impl fmt::Display for FunctionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let mut coeff = t.coeff;
            if i > 0 {
                if coeff.im == 0.0 && coeff.re < 0.0 {
                    write!(f, " - ")?;
                    coeff = -coeff;
                } else {
                    write!(f, " + ")?;
                }
            }
            let mut factors = Vec::new();
            let unit = coeff == Complex64::new(1.0, 0.0);
            if !unit || (t.power == 0 && t.freq == 0.0) {
                factors.push(fmt_scalar(coeff));
            }
            match t.power {
                0 => {}
                1 => factors.push("x".to_string()),
                n => factors.push(format!("x^{n}")),
            }
            if t.freq != 0.0 {
                factors.push(format!("exp({})", t.freq));
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn shift_of_x() {
        let shifted = FunctionExpr::x().shift(2.0);
        let expected = &FunctionExpr::x() - &FunctionExpr::from(2.0);
        assert_eq!(shifted, expected);
    }

    #[test]
    fn shift_of_square_evaluated() {
        let f = FunctionExpr::power(2).shift(-2.0);
        assert!((f.evaluate(1.0) - c(9.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn shift_of_character_picks_up_phase() {
        let t = 0.7;
        let a = 1.3;
        let shifted = FunctionExpr::exp_i(t).shift(a);
        let expected = FunctionExpr::monomial(Complex64::new(0.0, -t * a).exp(), 0, t);
        assert!(shifted.approx_eq(&expected, 1e-15));
    }

    #[test]
    fn products() {
        let xe = &FunctionExpr::x() * &FunctionExpr::exp_i(0.3);
        assert_eq!(xe, FunctionExpr::monomial(c(1.0, 0.0), 1, 0.3));

        let one = FunctionExpr::from(1.0);
        let p = &(&FunctionExpr::x() + &one) * &(&FunctionExpr::x() - &one);
        assert_eq!(p, &FunctionExpr::power(2) - &one);

        let e = &FunctionExpr::exp_i(0.5) * &FunctionExpr::exp_i(0.5);
        assert_eq!(e, FunctionExpr::exp_i(1.0));
    }

    #[test]
    fn conjugation() {
        let ix = FunctionExpr::monomial(c(0.0, 1.0), 1, 0.0);
        assert_eq!(ix.conjugate(), FunctionExpr::monomial(c(0.0, -1.0), 1, 0.0));
        assert_eq!(FunctionExpr::exp_i(1.5).conjugate(), FunctionExpr::exp_i(-1.5));
        assert_eq!(FunctionExpr::power(2).conjugate(), FunctionExpr::power(2));
    }

    #[test]
    fn evaluation() {
        assert_eq!(FunctionExpr::power(2).evaluate(3.0), c(9.0, 0.0));
        assert!((FunctionExpr::exp_i(PI).evaluate(1.0) - c(-1.0, 0.0)).norm() < 1e-15);
        let f = &FunctionExpr::x() + &FunctionExpr::exp_i(0.0);
        assert_eq!(f.evaluate(0.0), c(1.0, 0.0));
    }

    #[test]
    fn shifted_evaluation_is_consistent() {
        let f = FunctionExpr::power(2);
        let g = f.shift(2.0);
        for p in 0..200 {
            let a = f.evaluate_shifted(1.7, 2.0 * p as f64);
            let b = g.evaluate_shifted(1.7, 2.0 * (p + 1) as f64);
            assert_eq!(a, b);
            assert!((a - f.evaluate(1.7 + 2.0 * p as f64)).norm() <= 1e-15 * a.norm());
        }
        let e = FunctionExpr::exp_i(0.7);
        assert!((e.evaluate_shifted(0.3, 4.0) - e.evaluate(4.3)).norm() < 1e-14);
    }

    #[test]
    fn canonical_form_drops_cancellations() {
        let f = &FunctionExpr::x() - &FunctionExpr::x();
        assert!(f.is_zero());
        let g = FunctionExpr::from_terms([
            Term::new(c(1.0, 0.0), 2, 0.0),
            Term::new(c(1e-16, 0.0), 1, 0.0),
        ]);
        assert_eq!(g.terms().len(), 1);
    }

    #[test]
    fn negative_zero_frequency_merges() {
        let f = FunctionExpr::from_terms([
            Term::new(c(1.0, 0.0), 0, 0.0),
            Term::new(c(1.0, 0.0), 0, -0.0),
        ]);
        assert_eq!(f, FunctionExpr::from(2.0));
    }

    #[test]
    fn display_is_readable() {
        let f = FunctionExpr::from_terms([
            Term::new(c(1.0, 0.0), 2, 0.0),
            Term::new(c(2.0, 0.0), 0, 0.5),
            Term::new(c(0.0, -3.0), 1, -1.0),
        ]);
        assert_eq!(f.to_string(), "2*exp(0.5) + -3i*x*exp(-1) + x^2");
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn large_phases_keep_relative_accuracy() {
        let f = FunctionExpr::exp_i(1.7131593646617955);
        let want = c(-0.22474841824560429199, -0.97441682482195417179);
        assert!((f.evaluate(61.3) - want).norm() < 3e-16);
        // 1.3 + 60 carried exactly, not rounded to the double 61.3
        let exact = c(-0.22474841824559947333, -0.97441682482195528321);
        assert!((f.evaluate_shifted(1.3, 60.0) - exact).norm() < 3e-16);
        // e^{ix} at the double nearest 2000π
        let g = FunctionExpr::exp_i(1.0).evaluate(6283.185307179586);
        assert!((g.im + 6.4283329185512673953e-13).abs() < 1e-20, "{g}");
    }
}
