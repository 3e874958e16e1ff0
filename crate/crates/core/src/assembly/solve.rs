use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use super::SparseSystem;
use crate::error::{CdgError, Result};

/// Relative residual demanded of the saddle-point solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
const MAX_REFINEMENTS: usize = 5;

/// Solution `(u, lambda)` of `[[A, m], [m^T, 0]] [u; lambda] = [b; 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: Vec<f64>,
    pub lambda: f64,
    /// `||A u + lambda m - b|| / ||b||` (absolute when `b = 0`).
    pub residual: f64,
    /// `|m^T u| / (||m|| ||u||)`.
    pub constraint: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Compensated accumulator: error-free `a*b` and `a+b` transformations keep
/// the sum as accurate as if it were computed in twice the working precision.
#[derive(Default)]
struct Dot2 {
    sum: f64,
    err: f64,
}

impl Dot2 {
    fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let pe = a.mul_add(b, -p);
        let s = self.sum + p;
        let z = s - self.sum;
        let se = (self.sum - (s - z)) + (p - z);
        self.sum = s;
        self.err += pe + se;
    }

    fn value(&self) -> f64 {
        self.sum + self.err
    }
}

/// Solves the constrained system.
///
/// Because `A 1 = 0`, the multiplier is fixed by `1^T (b - lambda m) = 0`.
/// The remaining singular but consistent system `A u = b - lambda m` is solved
/// with a sparse Cholesky factorization of `A + gamma e_0 e_0^T`, and the
/// constant shift that enforces `m^T u = 0` is applied afterwards. A few
/// steps of iterative refinement on the full saddle residual follow.
///
/// A failed factorization means `A` is not positive semidefinite with a
/// one-dimensional kernel (penalty too small or a degenerate mesh).
pub fn solve(system: &SparseSystem, b: &[f64]) -> Result<Solution> {
    let a = &system.matrix;
    let m = &system.mass;
    let n = a.nrows;
    if b.len() != n {
        return Err(CdgError::InvalidInput(format!("right-hand side has length {}, expected {n}", b.len())));
    }
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(Solution { u: vec![0.0; n], lambda: 0.0, residual: 0.0, constraint: 0.0 });
    }
    let m_total: f64 = m.iter().sum();

    let pin = (0..n).map(|i| a.get(i, i)).fold(0.0, f64::max);
    let mut triplets = Vec::with_capacity(a.nnz() / 2 + n);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j >= i {
                let v = if i == 0 && j == 0 { v + pin } else { v };
                // row i of the upper triangle is column i of the lower one
                triplets.push(Triplet::new(j, i, v));
            }
        }
    }
    let lower = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| CdgError::SolverBreakdown { reason: format!("matrix construction failed: {e:?}") })?;
    let llt = lower
        .sp_cholesky(Side::Lower)
        .map_err(|e| CdgError::SolverBreakdown { reason: format!("Cholesky factorization failed: {e}") })?;

    // solves A x = r - (1^T r / 1^T m) m and returns (x - mean shift, multiplier)
    let project_solve = |r: &[f64]| -> (Vec<f64>, f64) {
        let lambda = r.iter().sum::<f64>() / m_total;
        let mut rhs = Mat::<f64>::from_fn(n, 1, |i, _| r[i] - lambda * m[i]);
        llt.solve_in_place(rhs.as_mut());
        let mut x: Vec<f64> = (0..n).map(|i| rhs[(i, 0)]).collect();
        let shift = dot(m, &x) / m_total;
        x.iter_mut().for_each(|v| *v -= shift);
        (x, lambda)
    };

    let (mut u, mut lambda) = project_solve(b);
    // the cancellation in b - A u grows like the condition number, so the
    // residual is accumulated in compensated arithmetic
    let residual_of = |u: &[f64], lambda: f64| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut acc = Dot2 { sum: b[i], err: 0.0 };
                acc.add_product(-lambda, m[i]);
                let (cols, vals) = a.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    acc.add_product(-v, u[j]);
                }
                acc.value()
            })
            .collect()
    };
    let mut r = residual_of(&u, lambda);
    let mut rel = norm(&r) / b_norm;
    for _ in 0..MAX_REFINEMENTS {
        if rel <= 1e-3 * RESIDUAL_TOLERANCE {
            break;
        }
        let (du, dl) = project_solve(&r);
        let cand: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + b).collect();
        let cand_r = residual_of(&cand, lambda + dl);
        let cand_rel = norm(&cand_r) / b_norm;
        if cand_rel >= rel {
            break;
        }
        u = cand;
        lambda += dl;
        r = cand_r;
        rel = cand_rel;
    }
    if !(rel <= RESIDUAL_TOLERANCE) {
        return Err(CdgError::SolverBreakdown {
            reason: format!("relative residual {rel:e} exceeds {RESIDUAL_TOLERANCE:e}"),
        });
    }
    let constraint = dot(m, &u).abs() / (norm(m) * norm(&u)).max(f64::MIN_POSITIVE);
    Ok(Solution { u, lambda, residual: rel, constraint })
}
