//! KMS states: vacuum, Gibbs states on `V_λ`, and their mixtures.
//!
//! Two independent evaluators are provided. [`eval_trace`] takes the
//! truncated trace `tr(â W)/tr(W)` with `W = diag(e^{−β(λ+2p)/2})` in the
//! matrix module. [`eval_kms_recursion`] never touches matrices: it iterates
//! the identity `ρ(X A N_F) = Σ_{j≥1} e^{−βj} ρ([A, X] N_{T₋₂ⱼF})` down to
//! Cartan moments of the state's restriction to the `N_F`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraElement, LADDER_SHIFT};
use crate::funcspace::FunctionExpr;
use crate::repr::{self, TruncatedRep};

/// Probability masses must sum to one within this tolerance.
pub const MASS_TOL: f64 = 1e-12;

/// Default cap on trace dimensions and recursion depths.
pub const DEFAULT_DEPTH_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("beta must be positive (got {0})")]
    NonPositiveBeta(f64),
    #[error("lambda must be positive (got {0})")]
    NonPositiveLambda(f64),
    #[error("tolerance must be positive (got {0})")]
    NonPositiveTolerance(f64),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("truncation depth {required} needed for the requested tolerance exceeds the cap {cap}")]
    NonConvergence { required: String, cap: usize },
}

/// One atom `w · δ_λ` of the measure `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralAtom {
    pub lambda: f64,
    #[serde(rename = "w")]
    pub weight: f64,
}

/// `m₁ δ₀ + Σ w_k δ_{λ_k}` with `λ_k > 0` distinct and total mass one.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    m1: f64,
    atoms: Vec<SpectralAtom>,
}

impl SpectralMeasure {
    /// Validates and canonicalizes: atoms sorted by `λ`, duplicates merged,
    /// zero weights dropped.
    pub fn new(m1: f64, atoms: impl IntoIterator<Item = SpectralAtom>) -> Result<Self, StateError> {
        if !(0.0..=1.0 + MASS_TOL).contains(&m1) {
            return Err(StateError::InvalidMeasure(format!("m1 = {m1} is outside [0, 1]")));
        }
        let mut atoms: Vec<SpectralAtom> = atoms.into_iter().collect();
        for a in &atoms {
            if !(a.lambda > 0.0) || !a.lambda.is_finite() {
                return Err(StateError::InvalidMeasure(format!(
                    "atom location {} is not strictly positive",
                    a.lambda
                )));
            }
            if !(a.weight >= 0.0) || !a.weight.is_finite() {
                return Err(StateError::InvalidMeasure(format!("atom weight {} is negative", a.weight)));
            }
        }
        atoms.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        let mut merged: Vec<SpectralAtom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if (last.lambda - a.lambda).abs() <= MASS_TOL * last.lambda.max(1.0) => {
                    last.weight += a.weight
                }
                _ => merged.push(a),
            }
        }
        merged.retain(|a| a.weight > 0.0);
        let total = m1 + merged.iter().map(|a| a.weight).sum::<f64>();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(StateError::InvalidMeasure(format!("total mass is {total}, expected 1")));
        }
        Ok(SpectralMeasure { m1: m1.min(1.0), atoms: merged })
    }

    pub fn vacuum() -> Self {
        SpectralMeasure { m1: 1.0, atoms: Vec::new() }
    }

    pub fn gibbs(lambda: f64) -> Result<Self, StateError> {
        Self::new(0.0, [SpectralAtom { lambda, weight: 1.0 }])
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn atoms(&self) -> &[SpectralAtom] {
        &self.atoms
    }

    /// `m₂ = Σ w_k`.
    pub fn m2(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateKind {
    Vacuum,
    Gibbs { lambda: f64 },
    Mixture(SpectralMeasure),
}

/// A covariant KMS state at inverse temperature `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpec {
    beta: f64,
    kind: StateKind,
}

impl StateSpec {
    pub fn new(beta: f64, kind: StateKind) -> Result<Self, StateError> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(StateError::NonPositiveBeta(beta));
        }
        if let StateKind::Gibbs { lambda } = kind {
            if !(lambda > 0.0) || !lambda.is_finite() {
                return Err(StateError::NonPositiveLambda(lambda));
            }
        }
        Ok(StateSpec { beta, kind })
    }

    pub fn vacuum(beta: f64) -> Result<Self, StateError> {
        Self::new(beta, StateKind::Vacuum)
    }

    pub fn gibbs(beta: f64, lambda: f64) -> Result<Self, StateError> {
        Self::new(beta, StateKind::Gibbs { lambda })
    }

    pub fn mixture(beta: f64, measure: SpectralMeasure) -> Result<Self, StateError> {
        Self::new(beta, StateKind::Mixture(measure))
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kind(&self) -> &StateKind {
        &self.kind
    }

    /// The `(m₁, σ)` data of the state.
    pub fn measure(&self) -> SpectralMeasure {
        match &self.kind {
            StateKind::Vacuum => SpectralMeasure::vacuum(),
            StateKind::Gibbs { lambda } => SpectralMeasure {
                m1: 0.0,
                atoms: vec![SpectralAtom { lambda: *lambda, weight: 1.0 }],
            },
            StateKind::Mixture(m) => m.clone(),
        }
    }

    /// `e^{−β}`, the ratio between successive Gibbs weights.
    pub fn ladder_ratio(&self) -> f64 {
        (-self.beta).exp()
    }
}

// ---------------------------------------------------------------------------
// state files

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum KindFile {
    Vacuum,
    Gibbs { lambda: f64 },
    Mixture { m1: f64, atoms: Vec<SpectralAtom> },
}

/// On-disk JSON form of a state, optionally carrying a fit residual.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    beta: f64,
    #[serde(flatten)]
    kind: KindFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

impl StateFile {
    pub fn from_spec(state: &StateSpec) -> Self {
        let kind = match &state.kind {
            StateKind::Vacuum => KindFile::Vacuum,
            StateKind::Gibbs { lambda } => KindFile::Gibbs { lambda: *lambda },
            StateKind::Mixture(m) => KindFile::Mixture { m1: m.m1, atoms: m.atoms.clone() },
        };
        StateFile { beta: state.beta, kind, residual: None }
    }

    pub fn to_spec(&self) -> Result<StateSpec, StateError> {
        let kind = match &self.kind {
            KindFile::Vacuum => StateKind::Vacuum,
            KindFile::Gibbs { lambda } => StateKind::Gibbs { lambda: *lambda },
            KindFile::Mixture { m1, atoms } => StateKind::Mixture(SpectralMeasure::new(*m1, atoms.iter().copied())?),
        };
        StateSpec::new(self.beta, kind)
    }
}

impl StateSpec {
    pub fn from_json(text: &str) -> Result<Self, StateError> {
        let file: StateFile =
            serde_json::from_str(text).map_err(|e| StateError::InvalidMeasure(format!("state file: {e}")))?;
        file.to_spec()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&StateFile::from_spec(self)).expect("state serializes")
    }
}

// ---------------------------------------------------------------------------
// Cartan measures

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartanAtom {
    pub x: f64,
    pub mass: f64,
}

/// A finitely supported probability measure on the real line: the
/// restriction of a state to the commutative subalgebra of the `N_F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CartanFile", into = "CartanFile")]
pub struct CartanMeasure {
    atoms: Vec<CartanAtom>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CartanFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m0: Option<f64>,
    atoms: Vec<CartanAtom>,
}

impl TryFrom<CartanFile> for CartanMeasure {
    type Error = StateError;
    fn try_from(file: CartanFile) -> Result<Self, StateError> {
        let zero = file.m0.map(|mass| CartanAtom { x: 0.0, mass });
        CartanMeasure::new(file.atoms.into_iter().chain(zero))
    }
}

impl From<CartanMeasure> for CartanFile {
    fn from(m: CartanMeasure) -> Self {
        CartanFile { m0: None, atoms: m.atoms }
    }
}

/// Locations closer than this (relative) are the same atom.
const LOCATION_TOL: f64 = 1e-12;

fn same_location(a: f64, b: f64) -> bool {
    (a - b).abs() <= LOCATION_TOL * a.abs().max(b.abs()).max(1.0)
}

impl CartanMeasure {
    /// Sorts, merges coincident locations and checks total mass one.
    pub fn new(atoms: impl IntoIterator<Item = CartanAtom>) -> Result<Self, StateError> {
        let m = Self::unnormalized(atoms)?;
        let total = m.total_mass();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(StateError::InvalidMeasure(format!("total mass is {total}, expected 1")));
        }
        Ok(m)
    }

    /// Like [`CartanMeasure::new`] without the normalization check.
    pub fn unnormalized(atoms: impl IntoIterator<Item = CartanAtom>) -> Result<Self, StateError> {
        let mut atoms: Vec<CartanAtom> = atoms.into_iter().collect();
        for a in &atoms {
            if !a.x.is_finite() || !a.mass.is_finite() || a.mass < 0.0 {
                return Err(StateError::InvalidMeasure(format!("bad atom {} at x = {}", a.mass, a.x)));
            }
        }
        atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
        let mut merged: Vec<CartanAtom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if same_location(last.x, a.x) => last.mass += a.mass,
                _ => merged.push(a),
            }
        }
        merged.retain(|a| a.mass > 0.0);
        Ok(CartanMeasure { atoms: merged })
    }

    /// Reads the JSON form `{"m0"?, "atoms": [{"x", "mass"}]}` without the
    /// total-mass check, so that damaged or truncated data can be inspected.
    pub fn from_json_unnormalized(text: &str) -> Result<Self, StateError> {
        let file: CartanFile =
            serde_json::from_str(text).map_err(|e| StateError::InvalidMeasure(format!("cartan file: {e}")))?;
        let zero = file.m0.map(|mass| CartanAtom { x: 0.0, mass });
        Self::unnormalized(file.atoms.into_iter().chain(zero))
    }

    pub fn dirac(x: f64) -> Self {
        CartanMeasure { atoms: vec![CartanAtom { x, mass: 1.0 }] }
    }

    pub fn atoms(&self) -> &[CartanAtom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn mass_at_zero(&self) -> f64 {
        self.atoms.iter().filter(|a| same_location(a.x, 0.0)).map(|a| a.mass).sum()
    }
}

/// `∫ F dμ = Σ mass_k F(x_k)`.
pub fn cartan_moment(measure: &CartanMeasure, f: &FunctionExpr) -> Complex64 {
    measure.atoms.iter().map(|a| f.evaluate(a.x) * a.mass).sum()
}

/// A truncated Cartan restriction together with the ladder mass that was cut.
#[derive(Debug, Clone, PartialEq)]
pub struct Restriction {
    /// Renormalized to total mass one.
    pub measure: CartanMeasure,
    /// Mass beyond `max_p` before renormalization, `m₂ e^{−β(max_p+1)}`.
    pub dropped_mass: f64,
}

/// Smallest `max_p` with ladder tail `e^{−β(max_p+1)} < tail`.
pub fn ladder_depth_for_tail(beta: f64, tail: f64) -> usize {
    let p = (-tail.ln() / beta).ceil() as usize;
    p.max(1)
}

/// Restriction of the state to the Cartan subalgebra:
/// `m₁ δ₀ + Σ_k w_k Σ_{p ≤ max_p} (1−e^{−β}) e^{−βp} δ_{λ_k+2p}`, renormalized
/// after truncating each geometric ladder at `max_p`.
pub fn cartan_restriction(state: &StateSpec, max_p: usize) -> Restriction {
    let measure = state.measure();
    let q = state.ladder_ratio();
    let mut atoms = Vec::new();
    if measure.m1 > 0.0 {
        atoms.push(CartanAtom { x: 0.0, mass: measure.m1 });
    }
    let mut kept = measure.m1;
    for a in &measure.atoms {
        let mut mass = a.weight * (1.0 - q);
        for p in 0..=max_p {
            atoms.push(CartanAtom { x: a.lambda + LADDER_SHIFT * p as f64, mass });
            kept += mass;
            mass *= q;
        }
    }
    let dropped = measure.m2() * q.powi(max_p as i32 + 1);
    let norm = kept;
    for a in &mut atoms {
        a.mass /= norm;
    }
    let measure = CartanMeasure::unnormalized(atoms).expect("ladder atoms are valid");
    Restriction { measure, dropped_mass: dropped }
}

// ---------------------------------------------------------------------------
// evaluators

fn check_tol(tol: f64) -> Result<(), StateError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(StateError::NonPositiveTolerance(tol))
    }
}

/// `Σ δ_{m,0} δ_{n,0} F(0)`.
fn eval_vacuum(a: &AlgebraElement) -> Complex64 {
    a.get(0, 0).map_or(Complex64::new(0.0, 0.0), |f| f.evaluate(0.0))
}

/// Polynomial growth order of the diagonal entries of `â` and a coefficient scale.
fn trace_growth(a: &AlgebraElement) -> (u32, f64) {
    let mut growth = 0;
    let mut scale = 0.0;
    for ((m, n), f) in a.terms() {
        if m == n {
            growth = growth.max(2 * m + f.degree());
            scale += f.coeff_l1();
        }
    }
    (growth, scale.max(1.0) * 2f64.powi(growth as i32))
}

fn eval_gibbs(beta: f64, lambda: f64, a: &AlgebraElement, tol: f64) -> Result<Complex64, StateError> {
    if !(lambda > 0.0) {
        return Err(StateError::NonPositiveLambda(lambda));
    }
    let weight_zero = a.weight_zero_part();
    if weight_zero.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (growth, scale) = trace_growth(&weight_zero);
    let dim = repr::trace_dimension(lambda, beta, growth, scale, tol, DEFAULT_DEPTH_CAP).ok_or(
        StateError::NonConvergence { required: format!("> {DEFAULT_DEPTH_CAP}"), cap: DEFAULT_DEPTH_CAP },
    )?;
    let rep = TruncatedRep::new(lambda, dim).map_err(|_| StateError::NonPositiveLambda(lambda))?;
    let diag = rep.diagonal(&weight_zero);
    // W_p ∝ e^{−β(λ+2p)/2}; the common factor e^{−βλ/2} cancels in the ratio
    let q = (-beta).exp();
    let mut w = 1.0;
    let mut num = Complex64::new(0.0, 0.0);
    let mut z = 0.0;
    for d in diag {
        num += d * w;
        z += w;
        w *= q;
    }
    Ok(num / z)
}

/// `ρ(a)` by truncated traces on `V_λ` (and `F(0)` for the vacuum part),
/// with the truncation chosen so the neglected tail is below `tol`.
pub fn eval_trace(state: &StateSpec, a: &AlgebraElement, tol: f64) -> Result<Complex64, StateError> {
    check_tol(tol)?;
    let beta = state.beta;
    match &state.kind {
        StateKind::Vacuum => Ok(eval_vacuum(a)),
        StateKind::Gibbs { lambda } => eval_gibbs(beta, *lambda, a, tol),
        StateKind::Mixture(m) => {
            let mut acc = eval_vacuum(a) * m.m1;
            for atom in &m.atoms {
                acc += eval_gibbs(beta, atom.lambda, a, tol)? * atom.weight;
            }
            Ok(acc)
        }
    }
}

/// Closed form of `χ(t) = ρ(N_{e^{itx}})`:
/// `m₁ + Σ w_k e^{itλ_k} (1−e^{−β})/(1−e^{−β+2it})`.
pub fn chi_closed_form(state: &StateSpec, t: f64) -> Complex64 {
    let m = state.measure();
    chi_of_measure(&m, state.beta, t)
}

pub(crate) fn ladder_factor(beta: f64, t: f64) -> Complex64 {
    let q = (-beta).exp();
    let denom = Complex64::new(1.0, 0.0) - Complex64::new(-beta, 2.0 * t).exp();
    Complex64::new(1.0 - q, 0.0) / denom
}

pub fn chi_of_measure(m: &SpectralMeasure, beta: f64, t: f64) -> Complex64 {
    let g = ladder_factor(beta, t);
    let sum: Complex64 = m
        .atoms
        .iter()
        .map(|a| Complex64::new(0.0, t * a.lambda).exp() * a.weight)
        .sum();
    Complex64::new(m.m1, 0.0) + g * sum
}

/// Options for [`eval_kms_recursion_with`].
#[derive(Debug, Clone, Copy)]
pub struct RecursionConfig {
    /// Largest admissible number of `j` terms per level.
    pub max_depth: usize,
}

impl Default for RecursionConfig {
    fn default() -> Self {
        RecursionConfig { max_depth: DEFAULT_DEPTH_CAP }
    }
}

/// The KMS extension of the Cartan data `(m₁, σ)` evaluated on `a` without
/// any matrix representation.
pub fn eval_kms_recursion(
    measure: &SpectralMeasure,
    beta: f64,
    a: &AlgebraElement,
    tol: f64,
) -> Result<Complex64, StateError> {
    eval_kms_recursion_with(measure, beta, a, tol, &RecursionConfig::default())
}

/// Functional `F ↦ ρ(X^m Y^m N_F)` stored as masses on ladders
/// `y₀ + 2p`, `p = 0..len`.
struct LadderFunctional {
    chains: Vec<(f64, Vec<f64>)>,
}

impl LadderFunctional {
    fn apply(&self, f: &FunctionExpr) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (base, masses) in &self.chains {
            for (p, &c) in masses.iter().enumerate() {
                if c != 0.0 {
                    acc += f.evaluate_shifted(*base, LADDER_SHIFT * p as f64) * c;
                }
            }
        }
        acc
    }
}

/// Groups atoms into chains spaced by 2 and pads each chain by `depth`.
fn chains_of(measure: &CartanMeasure, depth: usize) -> Vec<(f64, Vec<f64>)> {
    let atoms = measure.atoms();
    // chain id and index for each atom
    let mut position: Vec<(usize, usize)> = Vec::with_capacity(atoms.len());
    let mut chains: Vec<(f64, Vec<f64>)> = Vec::new();
    for (i, a) in atoms.iter().enumerate() {
        let target = a.x - LADDER_SHIFT;
        let prev = atoms[..i]
            .binary_search_by(|b| b.x.total_cmp(&target))
            .ok()
            .or_else(|| {
                // tolerant lookup among neighbours of the insertion point
                let k = atoms[..i].partition_point(|b| b.x < target);
                [k.wrapping_sub(1), k]
                    .into_iter()
                    .find(|&j| j < i && same_location(atoms[j].x, target))
            });
        match prev {
            Some(j) => {
                let (chain, idx) = position[j];
                chains[chain].1.push(a.mass);
                position.push((chain, idx + 1));
            }
            None => {
                chains.push((a.x, vec![a.mass]));
                position.push((chains.len() - 1, 0));
            }
        }
    }
    for (_, masses) in &mut chains {
        masses.resize(masses.len() + depth, 0.0);
    }
    chains
}

/// Growth order used to size the recursion depth for `X^m Y^m N_F`.
fn recursion_growth(m: u32, f: &FunctionExpr) -> u32 {
    3 * m + f.degree()
}

/// Like [`eval_kms_recursion`] with an explicit depth cap.
pub fn eval_kms_recursion_with(
    measure: &SpectralMeasure,
    beta: f64,
    a: &AlgebraElement,
    tol: f64,
    config: &RecursionConfig,
) -> Result<Complex64, StateError> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(StateError::NonPositiveBeta(beta));
    }
    check_tol(tol)?;
    let q = (-beta).exp();

    // Covariance: only weight-zero monomials survive.
    let terms: Vec<(u32, &FunctionExpr)> =
        a.terms().filter(|((m, n), _)| m == n).map(|((m, _), f)| (m, f)).collect();
    if terms.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let top = terms.iter().map(|(m, _)| *m).max().unwrap_or(0);
    let lambda_max = measure.atoms.iter().map(|a| a.lambda).fold(0.0, f64::max);

    // Depth P: e^{−βP} (1 + λ_max + 2P)^G · scale / (1 − q)^{top+1} < tol.
    let mut depth = 0usize;
    for &(m, f) in &terms {
        let growth = recursion_growth(m, f);
        let scale = f.coeff_l1().max(1.0) * 4f64.powi(growth as i32);
        let d = repr::trace_dimension(lambda_max, beta, growth, scale, tol * (1.0 - q).powi(top as i32), config.max_depth)
            .ok_or(StateError::NonConvergence {
                required: format!("> {}", config.max_depth),
                cap: config.max_depth,
            })?;
        depth = depth.max(d);
    }
    if depth > config.max_depth {
        return Err(StateError::NonConvergence { required: depth.to_string(), cap: config.max_depth });
    }

    let state = StateSpec { beta, kind: StateKind::Mixture(measure.clone()) };
    let base = cartan_restriction(&state, depth).measure;
    let mut levels: Vec<LadderFunctional> = vec![LadderFunctional { chains: chains_of(&base, depth) }];

    // [X^{m−1} Y^m, X] = Σ_k X^k Y^k N_{H_k}, k < m
    let x = AlgebraElement::x();
    for m in 1..=top {
        let inner = AlgebraElement::monomial(m - 1, m, FunctionExpr::one());
        let bracket = inner.commutator(&x);
        let parts: Vec<(usize, &FunctionExpr)> = bracket
            .terms()
            .filter(|((i, j), _)| i == j)
            .map(|((i, _), h)| (i as usize, h))
            .collect();
        debug_assert!(bracket.terms().all(|((i, j), _)| i == j && i < m));

        let chains = levels[0]
            .chains
            .iter()
            .enumerate()
            .map(|(c, (y0, masses))| {
                // g(p) = Σ_k c_k(p) H_k(y_p); c_m(p) = q (c_m(p−1) + g(p−1))
                let mut out = vec![0.0; masses.len()];
                let mut carry = Complex64::new(0.0, 0.0);
                for (p, slot) in out.iter_mut().enumerate() {
                    *slot = carry.re;
                    let offset = LADDER_SHIFT * p as f64;
                    let g: Complex64 = parts
                        .iter()
                        .map(|&(k, h)| h.evaluate_shifted(*y0, offset) * levels[k].chains[c].1[p])
                        .sum();
                    carry = (carry + g) * q;
                }
                (*y0, out)
            })
            .collect();
        levels.push(LadderFunctional { chains });
    }

    Ok(terms.iter().map(|&(m, f)| levels[m as usize].apply(f)).sum())
}

/// `t_k = t_min + k (t_max − t_min)/(steps − 1)`, `k = 0..steps`.
pub fn uniform_grid(t_min: f64, t_max: f64, steps: usize) -> Vec<f64> {
    if steps < 2 {
        return vec![t_min];
    }
    let h = (t_max - t_min) / (steps as f64 - 1.0);
    (0..steps).map(|k| t_min + h * k as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    fn f(s: &str) -> FunctionExpr {
        crate::parse::parse_function(s).unwrap()
    }

    fn el(s: &str) -> AlgebraElement {
        crate::parse::parse_element(s).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn gibbs_trace_examples() {
        let s = StateSpec::gibbs(LN_2, 1.0).unwrap();
        let h = eval_trace(&s, &el("H"), 1e-13).unwrap();
        assert!(close(h, Complex64::new(3.0, 0.0), 1e-12), "{h}");
        let xy = eval_trace(&s, &el("X Y"), 1e-13).unwrap();
        assert!(close(xy, Complex64::new(-3.0, 0.0), 1e-12), "{xy}");
    }

    #[test]
    fn vacuum_examples() {
        let s = StateSpec::vacuum(1.0).unwrap();
        assert_eq!(eval_trace(&s, &el("N[x^2+1]"), 1e-12).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(eval_trace(&s, &el("X Y"), 1e-12).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(chi_closed_form(&s, 2.5), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn rejects_bad_arguments() {
        let s = StateSpec::gibbs(1.0, 1.0).unwrap();
        assert_eq!(eval_trace(&s, &el("H"), 0.0), Err(StateError::NonPositiveTolerance(0.0)));
        assert_eq!(StateSpec::gibbs(1.0, -1.0), Err(StateError::NonPositiveLambda(-1.0)));
        assert_eq!(StateSpec::vacuum(0.0), Err(StateError::NonPositiveBeta(0.0)));
    }

    #[test]
    fn chi_examples() {
        let s = StateSpec::gibbs(0.7, 1.0).unwrap();
        assert!(close(chi_closed_form(&s, 0.0), Complex64::new(1.0, 0.0), 1e-15));
        assert!(close(chi_closed_form(&s, PI), Complex64::new(-1.0, 0.0), 1e-14));

        let m = SpectralMeasure::new(0.5, [SpectralAtom { lambda: 2.0, weight: 0.5 }]).unwrap();
        let s = StateSpec::mixture(1.0, m).unwrap();
        let t = 0.9;
        let via_trace = eval_trace(&s, &AlgebraElement::cartan(FunctionExpr::exp_i(t)), 1e-14).unwrap();
        assert!(close(chi_closed_form(&s, t), via_trace, 1e-12));
    }

    #[test]
    fn cartan_moment_examples() {
        assert_eq!(cartan_moment(&CartanMeasure::dirac(0.0), &f("x^2+1")), Complex64::new(1.0, 0.0));
        let uniform = CartanMeasure::new([CartanAtom { x: 1.0, mass: 0.5 }, CartanAtom { x: 3.0, mass: 0.5 }]).unwrap();
        assert_eq!(cartan_moment(&uniform, &f("x")), Complex64::new(2.0, 0.0));
        let s = StateSpec::gibbs(LN_2, 1.0).unwrap();
        let ladder = cartan_restriction(&s, 60).measure;
        let v = cartan_moment(&ladder, &FunctionExpr::exp_i(PI));
        assert!(close(v, Complex64::new(-1.0, 0.0), 1e-14), "{v}");
    }

    #[test]
    fn restriction_examples() {
        let vac = cartan_restriction(&StateSpec::vacuum(1.0).unwrap(), 10).measure;
        assert_eq!(vac, CartanMeasure::dirac(0.0));

        let beta = 0.8;
        let r = cartan_restriction(&StateSpec::gibbs(beta, 2.5).unwrap(), 80);
        let first = r.measure.atoms()[0];
        assert_eq!(first.x, 2.5);
        assert!((first.mass - (1.0 - (-beta).exp())).abs() < 1e-14);

        let r = cartan_restriction(&StateSpec::gibbs(LN_2, 1.0).unwrap(), 60);
        for (p, a) in r.measure.atoms().iter().take(10).enumerate() {
            assert_eq!(a.x, 1.0 + 2.0 * p as f64);
            assert!((a.mass - 0.5f64.powi(p as i32 + 1)).abs() < 1e-15);
        }
        assert!(r.dropped_mass < 1e-18);
    }

    #[test]
    fn overlapping_ladders_merge() {
        let m = SpectralMeasure::new(
            0.0,
            [SpectralAtom { lambda: 1.0, weight: 0.5 }, SpectralAtom { lambda: 3.0, weight: 0.5 }],
        )
        .unwrap();
        let r = cartan_restriction(&StateSpec::mixture(1.0, m).unwrap(), 40);
        let at3 = r.measure.atoms().iter().find(|a| a.x == 3.0).unwrap();
        let q = (-1.0f64).exp();
        assert!((at3.mass - (0.5 * (1.0 - q) * q + 0.5 * (1.0 - q))).abs() < 1e-15);
    }

    #[test]
    fn recursion_examples() {
        let m = SpectralMeasure::gibbs(1.0).unwrap();
        let xy = eval_kms_recursion(&m, LN_2, &el("X Y"), 1e-13).unwrap();
        assert!(close(xy, Complex64::new(-3.0, 0.0), 1e-12), "{xy}");

        let mixed = SpectralMeasure::new(0.3, [SpectralAtom { lambda: 1.2, weight: 0.7 }]).unwrap();
        assert_eq!(eval_kms_recursion(&mixed, 1.0, &el("X"), 1e-12).unwrap(), Complex64::new(0.0, 0.0));

        let nf = el("N[x^2 + exp(0.4)]");
        let direct = cartan_moment(
            &cartan_restriction(&StateSpec::mixture(1.0, mixed.clone()).unwrap(), 60).measure,
            nf.get(0, 0).unwrap(),
        );
        let rec = eval_kms_recursion(&mixed, 1.0, &nf, 1e-13).unwrap();
        assert!(close(rec, direct, 1e-12));
    }

    #[test]
    fn recursion_depth_cap() {
        let m = SpectralMeasure::gibbs(1.0).unwrap();
        let err = eval_kms_recursion_with(&m, 1e-3, &el("X^2 Y^2"), 1e-12, &RecursionConfig { max_depth: 500 });
        assert!(matches!(err, Err(StateError::NonConvergence { .. })));
    }

    #[test]
    fn measure_validation() {
        assert!(SpectralMeasure::new(0.5, [SpectralAtom { lambda: 1.0, weight: 0.4 }]).is_err());
        assert!(SpectralMeasure::new(0.0, [SpectralAtom { lambda: 0.0, weight: 1.0 }]).is_err());
        let merged = SpectralMeasure::new(
            0.0,
            [SpectralAtom { lambda: 2.0, weight: 0.25 }, SpectralAtom { lambda: 2.0, weight: 0.75 }],
        )
        .unwrap();
        assert_eq!(merged.atoms(), &[SpectralAtom { lambda: 2.0, weight: 1.0 }]);
    }

    #[test]
    fn state_file_format() {
        let text = r#"{"beta": 1.0, "kind": "mixture", "m1": 0.5, "atoms": [{"lambda": 2.0, "w": 0.5}]}"#;
        let s = StateSpec::from_json(text).unwrap();
        assert_eq!(s.beta(), 1.0);
        assert_eq!(s.measure().m1(), 0.5);
        let back = StateSpec::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        let g = StateSpec::from_json(r#"{"beta": 0.5, "kind": "gibbs", "lambda": 1.5}"#).unwrap();
        assert_eq!(g.kind(), &StateKind::Gibbs { lambda: 1.5 });
        assert!(StateSpec::from_json(r#"{"beta": 0.5, "kind": "gibbs", "lambda": -1}"#).is_err());
    }
}
