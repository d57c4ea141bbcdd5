//! Executable checks of the state properties: the KMS boundary identity
//! `ρ(AB) = ρ(B U_{iβ}(A))`, positivity of Gram matrices `ρ(wᵢ⋆ wⱼ)`, and
//! non-negativity of the Cartan spectrum.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::AlgebraElement;
use crate::funcspace::{FunctionExpr, Term};
use crate::states::{cartan_restriction, eval_trace, ladder_depth_for_tail, CartanAtom, CartanMeasure, StateError, StateSpec};

/// Absolute truncation tolerance handed to the trace evaluator by the checks.
pub const EVAL_TOL: f64 = 1e-13;

/// Outcome of [`kms_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmsReport {
    pub pairs_tested: usize,
    /// `max |ρ(AB) − ρ(B U_{iβ}(A))| / (1 + |ρ(AB)|)`
    pub max_residual: f64,
    pub worst_pair: (String, String),
    pub tolerance: f64,
    pub seed: u64,
}

impl KmsReport {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

/// The imaginary-time dynamics used on the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dynamics {
    /// `U_{iβ}(X^m Y^n N_F) = e^{−β(m−n)} X^m Y^n N_F`
    #[default]
    Exact,
    /// Negative control: `e^{−2β(m−n)}` in place of `e^{−β(m−n)}`.
    Sabotaged,
}

impl Dynamics {
    fn continue_to_imaginary(self, a: &AlgebraElement, beta: f64) -> AlgebraElement {
        let scale = match self {
            Dynamics::Exact => 1.0,
            Dynamics::Sabotaged => 2.0,
        };
        a.apply_automorphism(Complex64::new(0.0, scale * beta))
    }
}

/// Relative KMS residual of a single pair.
pub fn kms_residual(
    state: &StateSpec,
    a: &AlgebraElement,
    b: &AlgebraElement,
    dynamics: Dynamics,
) -> Result<f64, StateError> {
    let lhs = eval_trace(state, &(a * b), EVAL_TOL)?;
    let rotated = dynamics.continue_to_imaginary(a, state.beta());
    let rhs = eval_trace(state, &(b * &rotated), EVAL_TOL)?;
    Ok((lhs - rhs).norm() / (1.0 + lhs.norm()))
}

fn uniform_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
}

/// Random Cartan coefficient: one or two terms `c xⁿ e^{itx}` with
/// `n ≤ 2`, and `t = 0` or uniform in `[−1, 1]`.
pub fn random_function(rng: &mut ChaCha8Rng) -> FunctionExpr {
    let count = rng.random_range(1..=2);
    FunctionExpr::from_terms((0..count).map(|_| {
        let power = rng.random_range(0..=2);
        let freq = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(-1.0..=1.0) };
        Term::new(uniform_complex(rng), power, freq)
    }))
}

fn random_key(rng: &mut ChaCha8Rng, max_degree: u32) -> (u32, u32) {
    let total = rng.random_range(0..=max_degree);
    let m = rng.random_range(0..=total);
    (m, total - m)
}

/// Random canonical element: one to three monomials `X^m Y^n N_F` with
/// `m + n ≤ max_degree`. When `partner_weights` is non-empty, each monomial
/// takes the opposite of one of those weights with probability 1/2, so that
/// products with the partner have weight-zero parts.
pub fn random_element(rng: &mut ChaCha8Rng, max_degree: u32, partner_weights: &[i64]) -> AlgebraElement {
    let count = rng.random_range(1..=3);
    let mut out = AlgebraElement::zero();
    for _ in 0..count {
        let mut key = random_key(rng, max_degree);
        if !partner_weights.is_empty() && rng.random_bool(0.5) {
            let target = -partner_weights[rng.random_range(0..partner_weights.len())];
            // smallest-degree key of the target weight, padded with X Y pairs
            let base = if target >= 0 { (target as u32, 0) } else { (0, (-target) as u32) };
            if base.0 + base.1 <= max_degree {
                let pairs = rng.random_range(0..=(max_degree - base.0 - base.1) / 2);
                key = (base.0 + pairs, base.1 + pairs);
            }
        }
        out = &out + &AlgebraElement::monomial(key.0, key.1, random_function(rng));
    }
    out
}

fn weights(a: &AlgebraElement) -> Vec<i64> {
    a.terms().map(|((m, n), _)| i64::from(m) - i64::from(n)).collect()
}

/// The generator for trial `index`: ChaCha8 seeded with `seed`, stream `index`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws `trials` random pairs `(A, B)` and records the worst relative KMS
/// residual. Deterministic in `seed`.
pub fn kms_check(
    state: &StateSpec,
    max_degree: u32,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<KmsReport, StateError> {
    kms_check_with(state, max_degree, trials, seed, tol, Dynamics::Exact)
}

pub fn kms_check_with(
    state: &StateSpec,
    max_degree: u32,
    trials: usize,
    seed: u64,
    tol: f64,
    dynamics: Dynamics,
) -> Result<KmsReport, StateError> {
    if !(tol > 0.0) {
        return Err(StateError::NonPositiveTolerance(tol));
    }
    let mut report = KmsReport {
        pairs_tested: 0,
        max_residual: 0.0,
        worst_pair: (String::new(), String::new()),
        tolerance: tol,
        seed,
    };
    for index in 0..trials {
        let mut rng = trial_rng(seed, index as u64);
        let a = random_element(&mut rng, max_degree, &[]);
        let b = random_element(&mut rng, max_degree, &weights(&a));
        let r = kms_residual(state, &a, &b, dynamics)?;
        report.pairs_tested += 1;
        if r > report.max_residual || report.worst_pair.0.is_empty() {
            report.max_residual = report.max_residual.max(r);
            report.worst_pair = (a.to_string(), b.to_string());
        }
    }
    Ok(report)
}

/// Gram matrix positivity summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramReport {
    pub min_eigenvalue: f64,
    /// Spectral norm of `G`.
    pub norm: f64,
    /// `max |G − G†|`.
    pub hermitian_defect: f64,
    pub pass: bool,
}

/// Builds `G_ij = ρ(wᵢ⋆ wⱼ)` and checks it is Hermitian (to `1e−10`
/// relative) with smallest eigenvalue `≥ −tol (1 + ‖G‖)`.
pub fn gram_psd_check(state: &StateSpec, words: &[AlgebraElement], tol: f64) -> Result<GramReport, StateError> {
    let k = words.len();
    let stars: Vec<AlgebraElement> = words.iter().map(AlgebraElement::involution).collect();
    let mut g = DMatrix::<Complex64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            g[(i, j)] = eval_trace(state, &(&stars[i] * &words[j]), EVAL_TOL)?;
        }
    }
    let defect = (&g - g.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let hermitian = (&g + g.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::new(hermitian).eigenvalues;
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let norm = eig.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let pass = defect <= 1e-10 * (1.0 + norm) && min >= -tol * (1.0 + norm);
    Ok(GramReport { min_eigenvalue: min, norm, hermitian_defect: defect, pass })
}

/// Result of a spectrum-support check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportReport {
    pub pass: bool,
    pub smallest_atom: Option<f64>,
    pub offending_atom: Option<CartanAtom>,
}

/// Every atom carrying more than `1e−12` mass must sit at `x ≥ −1e−12`.
pub fn support_positivity_of(measure: &CartanMeasure) -> SupportReport {
    let smallest = measure.atoms().iter().map(|a| a.x).reduce(f64::min);
    let offending = measure.atoms().iter().find(|a| a.x < -1e-12 && a.mass > 1e-12).copied();
    SupportReport { pass: offending.is_none(), smallest_atom: smallest, offending_atom: offending }
}

/// Support check on the Cartan restriction of a state.
pub fn support_positivity_check(state: &StateSpec) -> SupportReport {
    let depth = ladder_depth_for_tail(state.beta(), 1e-16);
    support_positivity_of(&cartan_restriction(state, depth).measure)
}
