//! Recovering `(m₁, σ)` from Cartan data.
//!
//! A state of the extended algebra is KMS at `β` exactly when its Cartan
//! restriction is `m₁ δ₀ + Σ_k w_k Ladder(λ_k)`, where
//! `Ladder(λ) = Σ_p (1−q) q^p δ_{λ+2p}` and `q = e^{−β}`. Two independent
//! routes are provided: [`ladder_peel`] deconvolves the atoms directly and
//! [`chi_fit`] fits the characteristic function
//! `χ(t) = m₁ + Σ w_k e^{itλ_k} (1−q)/(1−q e^{2it})`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::LADDER_SHIFT;
use crate::states::{chi_of_measure, ladder_factor, CartanAtom, CartanMeasure, SpectralAtom, SpectralMeasure};

/// Recovered atoms closer than this are reported as [`RecoveryError::IllPosed`].
pub const ATOM_SEPARATION: f64 = 1e-6;

/// Fitted weights below this are dropped.
const WEIGHT_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecoveryError {
    #[error("NotExtendable: {0}")]
    NotExtendable(String),
    #[error("IllPosed: {0}")]
    IllPosed(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecoveryMethod {
    LadderPeel,
    ChiFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub measure: SpectralMeasure,
    /// Leftover mass after peeling, or RMS misfit of the χ fit.
    pub residual: f64,
    pub method: RecoveryMethod,
}

fn check_beta(beta: f64) -> Result<f64, RecoveryError> {
    if beta > 0.0 && beta.is_finite() {
        Ok((-beta).exp())
    } else {
        Err(RecoveryError::InvalidInput(format!("beta must be positive (got {beta})")))
    }
}

fn check_tol(tol: f64) -> Result<(), RecoveryError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(RecoveryError::InvalidInput(format!("tolerance must be positive (got {tol})")))
    }
}

fn normalized(m1: f64, atoms: Vec<SpectralAtom>) -> Result<SpectralMeasure, RecoveryError> {
    let total = m1 + atoms.iter().map(|a| a.weight).sum::<f64>();
    if !(total > 0.0) {
        return Err(RecoveryError::NotExtendable("no mass left to normalize".into()));
    }
    let atoms: Vec<SpectralAtom> =
        atoms.into_iter().map(|a| SpectralAtom { lambda: a.lambda, weight: a.weight / total }).collect();
    let m1 = (1.0 - atoms.iter().map(|a| a.weight).sum::<f64>()).max(0.0);
    SpectralMeasure::new(m1, atoms).map_err(|e| RecoveryError::InvalidInput(e.to_string()))
}

// ---------------------------------------------------------------------------
// ladder peeling

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Deconvolves `cartan` into `m₁ δ₀ + Σ w_k Ladder(λ_k)`.
///
/// The smallest positive atom always starts a ladder, so it is peeled
/// first and the process repeats. Ladders are assumed cut off at the
/// largest input location. The measure may be unnormalized; the result
/// is rescaled to total mass one.
pub fn ladder_peel(cartan: &CartanMeasure, beta: f64, tol: f64) -> Result<RecoveryResult, RecoveryError> {
    let q = check_beta(beta)?;
    check_tol(tol)?;
    let mut atoms: Vec<CartanAtom> = cartan.atoms().to_vec();
    if let Some(a) = atoms.iter().find(|a| a.x < 0.0 && !close(a.x, 0.0) && a.mass > tol) {
        return Err(RecoveryError::NotExtendable(format!("mass {} at negative x={}", a.mass, a.x)));
    }
    let m1 = cartan.mass_at_zero();
    let top = atoms.iter().map(|a| a.x).fold(f64::NEG_INFINITY, f64::max);
    let mut found = Vec::new();
    loop {
        let next = atoms.iter().position(|a| a.x > 0.0 && !close(a.x, 0.0) && a.mass > tol);
        let Some(start) = next else { break };
        let lambda = atoms[start].x;
        let weight = atoms[start].mass / (1.0 - q);
        let mut mass = atoms[start].mass;
        let mut p = 0usize;
        loop {
            let x = lambda + LADDER_SHIFT * p as f64;
            if x > top && !close(x, top) {
                break;
            }
            match atoms.iter_mut().find(|a| close(a.x, x)) {
                Some(a) => {
                    a.mass -= mass;
                    if a.mass < -tol {
                        return Err(RecoveryError::NotExtendable(format!(
                            "negative residual mass at x={x} ({})",
                            a.mass
                        )));
                    }
                }
                None if mass > tol => {
                    return Err(RecoveryError::NotExtendable(format!(
                        "negative residual mass at x={x} (-{mass})"
                    )));
                }
                None => {}
            }
            mass *= q;
            p += 1;
        }
        atoms[start].mass = 0.0;
        found.push(SpectralAtom { lambda, weight });
    }
    let leftover: f64 = atoms.iter().filter(|a| !close(a.x, 0.0)).map(|a| a.mass.abs()).sum();
    if leftover > tol {
        return Err(RecoveryError::NotExtendable(format!("leftover mass {leftover} outside any ladder")));
    }
    Ok(RecoveryResult { measure: normalized(m1, found)?, residual: leftover, method: RecoveryMethod::LadderPeel })
}

// ---------------------------------------------------------------------------
// χ fitting

/// Lawson–Hanson non-negative least squares.
fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let scale = a.abs().max() * b.abs().max().max(1.0);
    let eps = 1e-13 * scale.max(1e-300);
    for _ in 0..3 * n + 3 {
        let grad = a.transpose() * (b - a * &x);
        let candidate = (0..n).filter(|&j| !passive[j] && grad[j] > eps).max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        for _ in 0..3 * n + 3 {
            let cols: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = DMatrix::from_fn(a.nrows(), cols.len(), |r, c| a[(r, cols[c])]);
            let z_sub = sub.svd(true, true).solve(b, 1e-15).expect("svd with vectors");
            let mut z = DVector::zeros(n);
            for (c, &k) in cols.iter().enumerate() {
                z[k] = z_sub[c];
            }
            if cols.iter().all(|&k| z[k] > 0.0) {
                x = z;
                break;
            }
            let alpha = cols
                .iter()
                .filter(|&&k| z[k] <= 0.0)
                .map(|&k| x[k] / (x[k] - z[k]))
                .fold(f64::INFINITY, f64::min);
            x += (z - &x) * alpha;
            for &k in &cols {
                if x[k] <= 0.0 {
                    x[k] = 0.0;
                    passive[k] = false;
                }
            }
        }
    }
    x
}

struct Problem<'a> {
    samples: &'a [(f64, Complex64)],
    beta: f64,
    g: Vec<Complex64>,
}

impl<'a> Problem<'a> {
    fn new(samples: &'a [(f64, Complex64)], beta: f64) -> Self {
        let g = samples.iter().map(|&(t, _)| ladder_factor(beta, t)).collect();
        Problem { samples, beta, g }
    }

    fn basis(&self, i: usize, lambda: f64) -> Complex64 {
        Complex64::new(0.0, self.samples[i].0 * lambda).exp() * self.g[i]
    }

    /// Optimal `(m₁, w)` for fixed locations: NNLS with the sum-to-one
    /// condition as a heavily weighted extra row.
    fn weights(&self, lambdas: &[f64]) -> Vec<f64> {
        let n = self.samples.len();
        let k = lambdas.len() + 1;
        let penalty = 1e3 * (n as f64).sqrt();
        let mut a = DMatrix::zeros(2 * n + 1, k);
        let mut b = DVector::zeros(2 * n + 1);
        for i in 0..n {
            let chi = self.samples[i].1;
            a[(2 * i, 0)] = 1.0;
            for (j, &l) in lambdas.iter().enumerate() {
                let v = self.basis(i, l);
                a[(2 * i, j + 1)] = v.re;
                a[(2 * i + 1, j + 1)] = v.im;
            }
            b[2 * i] = chi.re;
            b[2 * i + 1] = chi.im;
        }
        for j in 0..k {
            a[(2 * n, j)] = penalty;
        }
        b[2 * n] = penalty;
        nnls(&a, &b).iter().copied().collect()
    }

    fn rms(&self, c: &[f64], lambdas: &[f64]) -> f64 {
        let sum: f64 = (0..self.samples.len())
            .map(|i| {
                let mut model = Complex64::new(c[0], 0.0);
                for (j, &l) in lambdas.iter().enumerate() {
                    model += self.basis(i, l) * c[j + 1];
                }
                (model - self.samples[i].1).norm_sqr()
            })
            .sum();
        (sum / self.samples.len() as f64).sqrt()
    }

    /// Levenberg–Marquardt on all of `(m₁, w, λ)` jointly, followed by a
    /// projection of the weights back onto the constraint set.
    fn refine(&self, mut c: Vec<f64>, mut lambdas: Vec<f64>) -> (Vec<f64>, Vec<f64>, f64) {
        let n = self.samples.len();
        let k = lambdas.len();
        let np = 2 * k + 1;
        let penalty = (n as f64).sqrt();
        let residuals = |c: &[f64], l: &[f64]| -> DVector<f64> {
            let mut r = DVector::zeros(2 * n + 1);
            for i in 0..n {
                let mut model = Complex64::new(c[0], 0.0);
                for j in 0..k {
                    model += self.basis(i, l[j]) * c[j + 1];
                }
                let d = model - self.samples[i].1;
                r[2 * i] = d.re;
                r[2 * i + 1] = d.im;
            }
            r[2 * n] = penalty * (c.iter().sum::<f64>() - 1.0);
            r
        };
        let mut r = residuals(&c, &lambdas);
        let mut cost = r.norm_squared();
        let mut mu = 1e-3;
        for _ in 0..200 {
            let mut jac = DMatrix::zeros(2 * n + 1, np);
            for i in 0..n {
                let t = self.samples[i].0;
                jac[(2 * i, 0)] = 1.0;
                for j in 0..k {
                    let v = self.basis(i, lambdas[j]);
                    jac[(2 * i, j + 1)] = v.re;
                    jac[(2 * i + 1, j + 1)] = v.im;
                    let dv = v * Complex64::new(0.0, t) * c[j + 1];
                    jac[(2 * i, k + 1 + j)] = dv.re;
                    jac[(2 * i + 1, k + 1 + j)] = dv.im;
                }
            }
            for j in 0..=k {
                jac[(2 * n, j)] = penalty;
            }
            let jtj = jac.transpose() * &jac;
            let jtr = jac.transpose() * &r;
            let mut improved = false;
            for _ in 0..30 {
                let mut damped = jtj.clone();
                for d in 0..np {
                    damped[(d, d)] += mu * jtj[(d, d)].max(1e-12);
                }
                let Some(step) = damped.cholesky().map(|ch| ch.solve(&(-&jtr))) else {
                    mu *= 10.0;
                    continue;
                };
                let c_new: Vec<f64> = (0..=k).map(|j| c[j] + step[j]).collect();
                let l_new: Vec<f64> = (0..k).map(|j| (lambdas[j] + step[k + 1 + j]).max(1e-9)).collect();
                let r_new = residuals(&c_new, &l_new);
                let cost_new = r_new.norm_squared();
                if cost_new < cost {
                    let gain = cost - cost_new;
                    c = c_new;
                    lambdas = l_new;
                    r = r_new;
                    cost = cost_new;
                    mu = (mu / 3.0).max(1e-15);
                    improved = gain > 1e-30 + 1e-16 * cost;
                    break;
                }
                mu *= 4.0;
            }
            if !improved {
                break;
            }
        }
        let c = self.weights(&lambdas);
        let rms = self.rms(&c, &lambdas);
        (c, lambdas, rms)
    }
}

/// Frequencies of `ψ(t) = χ(t)(1−q e^{2it})/(1−q)` on a uniform grid by the
/// matrix pencil method. `None` when the grid is not uniform.
fn pencil_frequencies(samples: &[(f64, Complex64)], beta: f64, max_poles: usize) -> Option<Vec<f64>> {
    let n = samples.len();
    if n < 4 {
        return None;
    }
    let dt = samples[1].0 - samples[0].0;
    if !(dt > 0.0) || samples.windows(2).any(|w| ((w[1].0 - w[0].0) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return None;
    }
    let psi: Vec<Complex64> = samples.iter().map(|&(t, chi)| chi / ladder_factor(beta, t)).collect();
    let pencil = n / 3;
    let rows = n - pencil;
    let y = DMatrix::from_fn(rows, pencil + 1, |r, c| psi[r + c]);
    let svd = y.svd(false, true);
    let v_t = svd.v_t.as_ref()?;
    let s = &svd.singular_values;
    let smax = s.max();
    if !(smax > 0.0) {
        return Some(Vec::new());
    }
    let order = s.iter().filter(|&&v| v > 1e-10 * smax).count().min(max_poles).max(1);
    // rows of Vᴴ span the row space of the Hankel matrix, whose columns
    // shift by one pole power: use their plain transpose, not the adjoint
    let v = v_t.rows(0, order).transpose();
    let v1 = v.rows(0, pencil).into_owned();
    let v2 = v.rows(1, pencil).into_owned();
    let pinv = v1.pseudo_inverse(1e-14).ok()?;
    let m = pinv * v2;
    let eig = m.schur().eigenvalues()?;
    Some(eig.iter().map(|z| z.arg() / dt).collect())
}

fn fit_from(problem: &Problem, candidates: &[f64], max_atoms: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let mut lambdas: Vec<f64> = candidates.iter().copied().filter(|&l| l > ATOM_SEPARATION).collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup_by(|a, b| (*a - *b).abs() <= ATOM_SEPARATION);
    let mut c = problem.weights(&lambdas);
    // keep at most `max_atoms` of the heaviest supported locations
    let mut order: Vec<usize> = (0..lambdas.len()).filter(|&j| c[j + 1] > WEIGHT_FLOOR).collect();
    order.sort_by(|&i, &j| c[j + 1].total_cmp(&c[i + 1]));
    order.truncate(max_atoms);
    order.sort_unstable();
    lambdas = order.iter().map(|&j| lambdas[j]).collect();
    c = problem.weights(&lambdas);
    let (mut c, mut lambdas, mut rms) = problem.refine(c, lambdas);
    for _ in 0..3 {
        let keep: Vec<usize> = (0..lambdas.len()).filter(|&j| c[j + 1] > WEIGHT_FLOOR).collect();
        if keep.len() == lambdas.len() {
            break;
        }
        let l: Vec<f64> = keep.iter().map(|&j| lambdas[j]).collect();
        let w = problem.weights(&l);
        (c, lambdas, rms) = problem.refine(w, l);
    }
    (c, lambdas, rms)
}

/// Greedy multi-start: add one location at a time from a grid, refitting
/// after each addition.
fn grid_fit(problem: &Problem, max_atoms: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let t_max = problem.samples.iter().map(|s| s.0.abs()).fold(0.0, f64::max).max(1.0);
    let step = (std::f64::consts::PI / (4.0 * t_max)).min(0.05);
    let grid: Vec<f64> = (1..).map(|i| i as f64 * step).take_while(|&l| l <= 12.0).collect();
    let mut best = (problem.weights(&[]), Vec::new(), f64::INFINITY);
    best.2 = problem.rms(&best.0, &best.1);
    for _ in 0..max_atoms {
        let mut trial_best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        for &l in &grid {
            let mut lambdas = best.1.clone();
            lambdas.push(l);
            let c = problem.weights(&lambdas);
            let rms = problem.rms(&c, &lambdas);
            if trial_best.as_ref().is_none_or(|b| rms < b.2) {
                trial_best = Some((c, lambdas, rms));
            }
        }
        let Some((c, l, _)) = trial_best else { break };
        let refined = problem.refine(c, l);
        if refined.2 < best.2 {
            best = refined;
        } else {
            break;
        }
    }
    best
}

/// Fits `χ(t) = m₁ + Σ_{k ≤ max_atoms} w_k e^{itλ_k} (1−q)/(1−q e^{2it})`
/// to the samples with `m₁, w_k ≥ 0`, `λ_k > 0` and `m₁ + Σ w_k = 1`.
///
/// Uniform grids are initialized by the matrix pencil method; otherwise
/// locations are added greedily from a grid. Fails with `NotExtendable`
/// when the RMS misfit exceeds `tol`.
pub fn chi_fit(
    samples: &[(f64, Complex64)],
    beta: f64,
    max_atoms: usize,
    tol: f64,
) -> Result<RecoveryResult, RecoveryError> {
    check_beta(beta)?;
    check_tol(tol)?;
    if samples.len() < 2 * max_atoms + 1 {
        return Err(RecoveryError::InvalidInput(format!(
            "{} samples are too few for {max_atoms} atoms (need {})",
            samples.len(),
            2 * max_atoms + 1
        )));
    }
    if samples.iter().any(|(t, c)| !t.is_finite() || !c.re.is_finite() || !c.im.is_finite()) {
        return Err(RecoveryError::InvalidInput("non-finite sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let problem = Problem::new(&sorted, beta);

    let c = problem.weights(&[]);
    let rms = problem.rms(&c, &[]);
    let mut best = (c, Vec::new(), rms);
    if best.2 > tol {
        if let Some(freqs) = pencil_frequencies(&sorted, beta, max_atoms + 2) {
            let fit = fit_from(&problem, &freqs, max_atoms);
            if fit.2 < best.2 {
                best = fit;
            }
        }
    }
    if best.2 > tol {
        let fit = grid_fit(&problem, max_atoms);
        if fit.2 < best.2 {
            best = fit;
        }
    }
    let (best, best_l, best_rms) = best;
    if best_rms > tol {
        return Err(RecoveryError::NotExtendable(format!(
            "best fit with at most {max_atoms} atoms leaves RMS residual {best_rms:.3e} > {tol:.3e}"
        )));
    }

    let mut atoms: Vec<SpectralAtom> = best_l
        .iter()
        .zip(&best[1..])
        .filter(|(_, &w)| w > WEIGHT_FLOOR)
        .map(|(&lambda, &weight)| SpectralAtom { lambda, weight })
        .collect();
    atoms.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    if let Some(pair) = atoms.windows(2).find(|w| w[1].lambda - w[0].lambda <= ATOM_SEPARATION) {
        return Err(RecoveryError::IllPosed(format!(
            "atoms at {} and {} are closer than {ATOM_SEPARATION}",
            pair[0].lambda, pair[1].lambda
        )));
    }
    let measure = normalized(best[0], atoms)?;
    let residual = {
        let sum: f64 = sorted.iter().map(|&(t, c)| (chi_of_measure(&measure, problem.beta, t) - c).norm_sqr()).sum();
        (sum / sorted.len() as f64).sqrt()
    };
    Ok(RecoveryResult { measure, residual, method: RecoveryMethod::ChiFit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{cartan_restriction, chi_closed_form, ladder_depth_for_tail, uniform_grid, StateSpec};

    fn restriction(state: &StateSpec) -> CartanMeasure {
        cartan_restriction(state, ladder_depth_for_tail(state.beta(), 1e-16)).measure
    }

    fn samples(state: &StateSpec) -> Vec<(f64, Complex64)> {
        uniform_grid(-10.0, 10.0, 101).into_iter().map(|t| (t, chi_closed_form(state, t))).collect()
    }

    #[test]
    fn peel_gibbs() {
        let s = StateSpec::gibbs(1.0, 1.5).unwrap();
        let r = ladder_peel(&restriction(&s), 1.0, 1e-12).unwrap();
        assert_eq!(r.measure.m1(), 0.0);
        assert_eq!(r.measure.atoms().len(), 1);
        assert!((r.measure.atoms()[0].lambda - 1.5).abs() < 1e-10);
        assert!((r.measure.atoms()[0].weight - 1.0).abs() < 1e-10);
        assert!(r.residual <= 1e-10);
    }

    #[test]
    fn peel_vacuum() {
        let r = ladder_peel(&CartanMeasure::dirac(0.0), 1.0, 1e-12).unwrap();
        assert_eq!(r.measure.m1(), 1.0);
        assert!(r.measure.atoms().is_empty());
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn peel_overlapping_ladders() {
        let m = SpectralMeasure::new(
            0.0,
            [SpectralAtom { lambda: 1.0, weight: 0.5 }, SpectralAtom { lambda: 3.0, weight: 0.5 }],
        )
        .unwrap();
        let s = StateSpec::mixture(0.7, m).unwrap();
        let r = ladder_peel(&restriction(&s), 0.7, 1e-12).unwrap();
        let atoms = r.measure.atoms();
        assert_eq!(atoms.len(), 2);
        for (a, l) in atoms.iter().zip([1.0, 3.0]) {
            assert!((a.lambda - l).abs() < 1e-10 && (a.weight - 0.5).abs() < 1e-10, "{atoms:?}");
        }
    }

    #[test]
    fn peel_rejects_tampered_ladder() {
        let s = StateSpec::gibbs(1.0, 1.5).unwrap();
        let mut atoms = restriction(&s).atoms().to_vec();
        atoms[1].mass -= 0.05;
        let tampered = CartanMeasure::unnormalized(atoms).unwrap();
        let err = ladder_peel(&tampered, 1.0, 1e-12).unwrap_err();
        assert!(err.to_string().starts_with("NotExtendable: negative residual mass at x=3.5"), "{err}");
    }

    #[test]
    fn peel_rejects_negative_support() {
        let m = CartanMeasure::new([CartanAtom { x: -1.0, mass: 0.5 }, CartanAtom { x: 1.0, mass: 0.5 }]).unwrap();
        assert!(matches!(ladder_peel(&m, 1.0, 1e-12), Err(RecoveryError::NotExtendable(_))));
    }

    #[test]
    fn fit_gibbs() {
        let s = StateSpec::gibbs(1.0, 2.0).unwrap();
        let r = chi_fit(&samples(&s), 1.0, 3, 1e-8).unwrap();
        assert!(r.measure.m1() < 1e-6);
        let a = r.measure.atoms();
        assert_eq!(a.len(), 1, "{a:?}");
        assert!((a[0].lambda - 2.0).abs() < 1e-6 && (a[0].weight - 1.0).abs() < 1e-6);
        assert!(r.residual <= 1e-8);
    }

    #[test]
    fn fit_constant_is_vacuum() {
        let s: Vec<_> = uniform_grid(-10.0, 10.0, 101).into_iter().map(|t| (t, Complex64::new(1.0, 0.0))).collect();
        let r = chi_fit(&s, 1.0, 3, 1e-8).unwrap();
        assert_eq!(r.measure.m1(), 1.0);
        assert!(r.measure.atoms().is_empty());
        assert!(r.residual < 1e-14);
    }

    #[test]
    fn fit_rejects_gaussian() {
        let s: Vec<_> =
            uniform_grid(-10.0, 10.0, 101).into_iter().map(|t| (t, Complex64::new((-t * t).exp(), 0.0))).collect();
        for atoms in 1..=5 {
            assert!(matches!(chi_fit(&s, 1.0, atoms, 1e-6), Err(RecoveryError::NotExtendable(_))));
        }
    }

    #[test]
    fn fit_mixture_with_vacuum_part() {
        let m = SpectralMeasure::new(
            0.3,
            [SpectralAtom { lambda: 2.0, weight: 0.4 }, SpectralAtom { lambda: 4.7, weight: 0.3 }],
        )
        .unwrap();
        let s = StateSpec::mixture(0.5, m.clone()).unwrap();
        let r = chi_fit(&samples(&s), 0.5, 5, 1e-8).unwrap();
        assert!((r.measure.m1() - 0.3).abs() < 1e-6, "{:?}", r.measure);
        for (a, b) in r.measure.atoms().iter().zip(m.atoms()) {
            assert!((a.lambda - b.lambda).abs() < 1e-6 && (a.weight - b.weight).abs() < 1e-6);
        }
    }

    #[test]
    fn pencil_recovers_positive_frequencies() {
        let m = SpectralMeasure::new(
            0.0,
            [SpectralAtom { lambda: 2.03, weight: 0.4 }, SpectralAtom { lambda: 6.4, weight: 0.6 }],
        )
        .unwrap();
        let s = StateSpec::mixture(2.0, m).unwrap();
        let mut f = pencil_frequencies(&samples(&s), 2.0, 7).unwrap();
        f.sort_by(f64::total_cmp);
        assert_eq!(f.len(), 2);
        assert!((f[0] - 2.03).abs() < 1e-8 && (f[1] - 6.4).abs() < 1e-8, "{f:?}");
    }

    #[test]
    fn irregular_grid_uses_fallback() {
        let s = StateSpec::gibbs(1.0, 1.3).unwrap();
        let pts: Vec<_> = (0..80)
            .map(|i| {
                let t = -8.0 + 0.2 * i as f64 + 0.05 * ((i * 7) % 3) as f64;
                (t, chi_closed_form(&s, t))
            })
            .collect();
        assert!(pencil_frequencies(&pts, 1.0, 4).is_none());
        let r = chi_fit(&pts, 1.0, 2, 1e-8).unwrap();
        let a = r.measure.atoms();
        assert_eq!(a.len(), 1, "{a:?}");
        assert!((a[0].lambda - 1.3).abs() < 1e-6 && (a[0].weight - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fit_requires_enough_samples() {
        let s = vec![(0.0, Complex64::new(1.0, 0.0)); 4];
        assert!(matches!(chi_fit(&s, 1.0, 2, 1e-8), Err(RecoveryError::InvalidInput(_))));
    }
}
