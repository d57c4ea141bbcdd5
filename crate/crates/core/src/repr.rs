//! Truncated matrix realizations of the lowest-weight modules `V_λ`.
//!
//! In the raw basis `|λ,p⟩` the generators act as
//! `X̂|p⟩ = (p+1)|p+1⟩`, `Ŷ|p+1⟩ = −(λ+p)|p⟩`, `N̂_F|p⟩ = F(λ+2p)|p⟩`.
//! The inner product making `X̂ = −Ŷ†` has norms `n₀ = 1`,
//! `n_{p+1} = n_p (λ+p)/(p+1)`. We work in the orthonormal basis
//! `e_p = |p⟩/√n_p`, where both ladder operators carry `√((p+1)(λ+p))`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{AlgebraElement, LADDER_SHIFT};
use crate::funcspace::FunctionExpr;

/// Smallest truncation used by the automatic dimension choice.
pub const MIN_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReprError {
    #[error("lambda must be positive (got {0})")]
    NonPositiveLambda(f64),
    #[error("dimension must be at least 2 (got {0})")]
    DimensionTooSmall(usize),
}

/// Norms `n_p`, `p = 0..count`, of the raw basis vectors.
pub fn lowest_weight_norms(lambda: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut n = 1.0;
    for p in 0..count {
        out.push(n);
        n *= (lambda + p as f64) / (p as f64 + 1.0);
    }
    out
}

/// `V_λ` cut to its first `dim` basis vectors.
#[derive(Debug, Clone)]
pub struct TruncatedRep {
    lambda: f64,
    dim: usize,
    /// `ladder[p] = √((p+1)(λ+p))`, the `e_p → e_{p+1}` amplitude of `X̂`.
    ladder: Vec<f64>,
    mat_x: DMatrix<Complex64>,
    mat_y: DMatrix<Complex64>,
    cartan_eigens: Vec<f64>,
}

impl TruncatedRep {
    pub fn new(lambda: f64, dim: usize) -> Result<Self, ReprError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(ReprError::NonPositiveLambda(lambda));
        }
        if dim < 2 {
            return Err(ReprError::DimensionTooSmall(dim));
        }
        // Raw amplitude (p+1) rescaled by √(n_{p+1}/n_p) = √((λ+p)/(p+1)).
        let ladder: Vec<f64> = (0..dim - 1)
            .map(|p| {
                let p = p as f64;
                (p + 1.0) * ((lambda + p) / (p + 1.0)).sqrt()
            })
            .collect();
        let mut mat_x = DMatrix::zeros(dim, dim);
        let mut mat_y = DMatrix::zeros(dim, dim);
        for (p, &a) in ladder.iter().enumerate() {
            mat_x[(p + 1, p)] = Complex64::new(a, 0.0);
            mat_y[(p, p + 1)] = Complex64::new(-a, 0.0);
        }
        let cartan_eigens = (0..dim).map(|p| lambda + LADDER_SHIFT * p as f64).collect();
        Ok(TruncatedRep { lambda, dim, ladder, mat_x, mat_y, cartan_eigens })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mat_x(&self) -> &DMatrix<Complex64> {
        &self.mat_x
    }

    pub fn mat_y(&self) -> &DMatrix<Complex64> {
        &self.mat_y
    }

    /// Eigenvalues `λ + 2p` of `N̂_x`.
    pub fn cartan_eigens(&self) -> &[f64] {
        &self.cartan_eigens
    }

    /// `N̂_F = diag(F(λ+2p))`.
    pub fn cartan_matrix(&self, f: &FunctionExpr) -> DMatrix<Complex64> {
        let diag: Vec<Complex64> = (0..self.dim).map(|p| self.cartan_value(f, p)).collect();
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
    }

    /// `F(λ + 2p)`, evaluated so that `T₂F` at `p + 1` reproduces it exactly.
    pub fn cartan_value(&self, f: &FunctionExpr, p: usize) -> Complex64 {
        f.evaluate_shifted(self.lambda, LADDER_SHIFT * p as f64)
    }

    /// Image of `e_p` under `X^m Y^n N_F`: `Some((q, amplitude))` with the
    /// result `amplitude · e_q`, or `None` if it vanishes or leaves the
    /// truncation.
    fn monomial_on_basis(&self, m: u32, n: u32, f: &FunctionExpr, p: usize) -> Option<(usize, Complex64)> {
        let n = n as usize;
        let m = m as usize;
        if n > p {
            return None;
        }
        let mut amp = self.cartan_value(f, p);
        // Ŷ e_{k+1} = −ladder[k] e_k
        for k in (p - n..p).rev() {
            amp *= -self.ladder[k];
        }
        let low = p - n;
        if low + m >= self.dim {
            return None;
        }
        for k in low..low + m {
            amp *= self.ladder[k];
        }
        Some((low + m, amp))
    }

    /// Column `p` of the matrix of `a`, as sparse `(row, value)` pairs.
    pub fn apply_to_basis(&self, a: &AlgebraElement, p: usize) -> Vec<(usize, Complex64)> {
        let mut out: Vec<(usize, Complex64)> = Vec::new();
        for ((m, n), f) in a.terms() {
            if let Some((q, amp)) = self.monomial_on_basis(m, n, f, p) {
                match out.iter_mut().find(|(row, _)| *row == q) {
                    Some(entry) => entry.1 += amp,
                    None => out.push((q, amp)),
                }
            }
        }
        out.sort_by_key(|(row, _)| *row);
        out
    }

    /// Diagonal of the matrix of `a`; only weight-zero terms contribute.
    pub fn diagonal(&self, a: &AlgebraElement) -> Vec<Complex64> {
        let zero_weight = a.weight_zero_part();
        (0..self.dim)
            .map(|p| {
                self.apply_to_basis(&zero_weight, p)
                    .into_iter()
                    .filter(|(q, _)| *q == p)
                    .map(|(_, v)| v)
                    .sum()
            })
            .collect()
    }
}

/// `Σ X̂^m Ŷ^n N̂_F` over the terms of `a`.
pub fn represent(a: &AlgebraElement, rep: &TruncatedRep) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(rep.dim, rep.dim);
    for p in 0..rep.dim {
        for (q, v) in rep.apply_to_basis(a, p) {
            out[(q, p)] += v;
        }
    }
    out
}

/// Maximum residual norms of the defining relations on basis vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelationResiduals {
    /// `‖([X̂,Ŷ] − N̂_x) e_p‖`
    pub commutator: f64,
    /// `‖(X̂ N̂_F − N̂_{T₂F} X̂) e_p‖`
    pub x_shift: f64,
    /// `‖(Ŷ N̂_F − N̂_{T₋₂F} Ŷ) e_p‖`
    pub y_shift: f64,
    /// `max |X̂ + Ŷ†|` over all entries (no edge exclusion).
    pub adjointness: f64,
}

impl RelationResiduals {
    pub fn max_relation(&self) -> f64 {
        self.commutator.max(self.x_shift).max(self.y_shift)
    }
}

fn max_column_norm(m: &DMatrix<Complex64>, columns: usize) -> f64 {
    (0..columns)
        .map(|p| m.column(p).norm())
        .fold(0.0, f64::max)
}

fn residuals(rep: &TruncatedRep, f: &FunctionExpr, columns: usize) -> RelationResiduals {
    let x = &rep.mat_x;
    let y = &rep.mat_y;
    let comm = x * y - y * x - rep.cartan_matrix(&FunctionExpr::x());
    let nf = rep.cartan_matrix(f);
    let xs = x * &nf - rep.cartan_matrix(&f.shift(LADDER_SHIFT)) * x;
    let ys = y * &nf - rep.cartan_matrix(&f.shift(-LADDER_SHIFT)) * y;
    let adj = x + y.adjoint();
    RelationResiduals {
        commutator: max_column_norm(&comm, columns),
        x_shift: max_column_norm(&xs, columns),
        y_shift: max_column_norm(&ys, columns),
        adjointness: adj.iter().map(|v| v.norm()).fold(0.0, f64::max),
    }
}

/// Relation residuals over the truncation-safe vectors `e_p`, `p < D − 1`.
pub fn relation_residuals(rep: &TruncatedRep, f: &FunctionExpr) -> RelationResiduals {
    residuals(rep, f, rep.dim - 1)
}

/// Same as [`relation_residuals`] but including the top vector `e_{D−1}`,
/// where the truncation breaks `[X̂, Ŷ] = N̂_x`.
pub fn relation_residuals_with_edge(rep: &TruncatedRep, f: &FunctionExpr) -> RelationResiduals {
    residuals(rep, f, rep.dim)
}

/// Smallest `D ≥ MIN_DIM` such that the geometric trace tail
/// `scale · e^{−βD} (1 + λ + 2D)^growth / (1 − e^{−β})²` is below `tol`.
/// Returns `None` if no `D ≤ cap` qualifies.
pub fn trace_dimension(lambda: f64, beta: f64, growth: u32, scale: f64, tol: f64, cap: usize) -> Option<usize> {
    let q_log = -beta;
    let denom = -2.0 * (-(-beta).exp_m1()).ln();
    let log_scale = scale.max(1e-300).ln();
    let bound = |d: usize| {
        let d = d as f64;
        log_scale + q_log * d + f64::from(growth) * (1.0 + lambda + 2.0 * d).ln() + denom
    };
    let target = tol.ln();
    let mut d = MIN_DIM;
    // the bound is eventually decreasing; walk in growing steps then refine
    let mut step = 16usize;
    while bound(d) >= target {
        if d >= cap {
            return None;
        }
        d = (d + step).min(cap);
        step = (step * 2).min(4096);
    }
    while d > MIN_DIM && bound(d - 1) < target {
        d -= 1;
    }
    Some(d)
}
