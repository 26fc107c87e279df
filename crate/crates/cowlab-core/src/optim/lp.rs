//! Dense revised simplex for small linear programs.
//!
//! Problems are brought to standard form `min c'z, Az = b, z >= 0` by shifting
//! lower bounds to zero and adding a slack row per finite upper bound. Phase
//! one drives artificial variables out; phase two optimizes the real costs.
//! Pricing is Dantzig's rule, switching to Bland's rule after a run of
//! degenerate pivots so the method cannot cycle.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 20;
const MAX_PIVOTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    /// Equality rows, each of length `objective.len()`.
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    /// Per-variable `(lo, hi)`; `lo` must be finite, `hi` may be infinite.
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// A program with all variables in `[0, inf)` and no constraints yet.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = bounds;
        self
    }

    fn check(&self) -> Result<()> {
        let n = self.objective.len();
        let bad = |m: &str| Err(Error::InvalidParams(format!("linear program: {m}")));
        if n == 0 {
            return bad("no variables");
        }
        if self.bounds.len() != n {
            return bad("bounds length mismatch");
        }
        if self.eq_rows.len() != self.eq_rhs.len() {
            return bad("rhs length mismatch");
        }
        if self.eq_rows.iter().any(|r| r.len() != n) {
            return bad("row length mismatch");
        }
        if self.bounds.iter().any(|&(lo, hi)| !lo.is_finite() || lo > hi || hi.is_nan()) {
            return bad("bounds must satisfy finite lo <= hi");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Objective of the dual certificate built from the optimal basis.
    pub dual_objective: f64,
    pub pivots: usize,
}

struct Standard {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    /// Number of structural columns (original variables plus bound slacks).
    n: usize,
}

fn to_standard(lp: &LinearProgram) -> (Standard, f64) {
    let n0 = lp.objective.len();
    let upper: Vec<usize> = (0..n0).filter(|&i| lp.bounds[i].1.is_finite()).collect();
    let m = lp.eq_rows.len() + upper.len();
    let n = n0 + upper.len();
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    let mut a = DMatrix::zeros(m, n);
    let mut b = DVector::zeros(m);
    let mut c = DVector::zeros(n);
    let mut shift = 0.0;
    for j in 0..n0 {
        c[j] = sign * lp.objective[j];
        shift += lp.objective[j] * lp.bounds[j].0;
    }
    for (i, row) in lp.eq_rows.iter().enumerate() {
        let mut rhs = lp.eq_rhs[i];
        for j in 0..n0 {
            a[(i, j)] = row[j];
            rhs -= row[j] * lp.bounds[j].0;
        }
        b[i] = rhs;
    }
    let base = lp.eq_rows.len();
    for (k, &j) in upper.iter().enumerate() {
        a[(base + k, j)] = 1.0;
        a[(base + k, n0 + k)] = 1.0;
        b[base + k] = lp.bounds[j].1 - lp.bounds[j].0;
    }
    for i in 0..m {
        if b[i] < 0.0 {
            b[i] = -b[i];
            for j in 0..n {
                a[(i, j)] = -a[(i, j)];
            }
        }
    }
    (Standard { a, b, c, n }, shift)
}

struct Simplex {
    a: DMatrix<f64>,
    b: DVector<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Simplex {
    fn basis_inverse(&self) -> Result<DMatrix<f64>> {
        let m = self.basis.len();
        let mut bm = DMatrix::zeros(m, m);
        for (k, &j) in self.basis.iter().enumerate() {
            bm.set_column(k, &self.a.column(j));
        }
        bm.try_inverse().ok_or(Error::InvalidParams("singular simplex basis".into()))
    }

    /// Runs simplex iterations with cost vector `c` over the columns marked
    /// eligible. Returns the final basis inverse.
    fn optimize(&mut self, c: &DVector<f64>, eligible: &[bool]) -> Result<DMatrix<f64>> {
        let mut degenerate = 0;
        loop {
            let binv = self.basis_inverse()?;
            let xb = &binv * &self.b;
            let cb = DVector::from_iterator(self.basis.len(), self.basis.iter().map(|&j| c[j]));
            let y = binv.transpose() * cb;

            let bland = degenerate >= DEGENERATE_RUN;
            let mut entering = None;
            let mut best = -PIVOT_TOL;
            for j in 0..self.a.ncols() {
                if !eligible[j] || self.basis.contains(&j) {
                    continue;
                }
                let d = c[j] - self.a.column(j).dot(&y);
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = entering else {
                return Ok(binv);
            };

            let u = &binv * self.a.column(q);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..u.len() {
                if u[i] > PIVOT_TOL {
                    let ratio = xb[i].max(0.0) / u[i];
                    let better = match leave {
                        None => true,
                        Some((r, t)) => {
                            ratio < t - 1e-14
                                || (ratio <= t + 1e-14 && self.basis[i] < self.basis[r])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, step)) = leave else {
                return Err(Error::Unbounded);
            };
            degenerate = if step <= 1e-14 { degenerate + 1 } else { 0 };
            self.basis[r] = q;
            self.pivots += 1;
            if self.pivots > MAX_PIVOTS {
                return Err(Error::NotConverged {
                    iterations: self.pivots,
                    primal_residual: f64::NAN,
                    dual_residual: f64::NAN,
                    gap: f64::NAN,
                });
            }
        }
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.check()?;
    let (std, shift) = to_standard(lp);
    let m = std.a.nrows();
    let n = std.n;
    let n0 = lp.objective.len();
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    if m == 0 {
        // Only lower bounds: optimum sits at the bounds unless unbounded.
        if std.c.iter().any(|&cj| cj < 0.0) {
            return Err(Error::Unbounded);
        }
        let x: Vec<f64> = lp.bounds.iter().map(|&(lo, _)| lo).collect();
        return Ok(LpSolution { x, objective: shift, dual_objective: shift, pivots: 0 });
    }

    // Phase one: artificial identity block.
    let mut a = DMatrix::zeros(m, n + m);
    a.view_mut((0, 0), (m, n)).copy_from(&std.a);
    for i in 0..m {
        a[(i, n + i)] = 1.0;
    }
    let mut sx = Simplex { a, b: std.b.clone(), basis: (n..n + m).collect(), pivots: 0 };
    let mut c1 = DVector::zeros(n + m);
    for i in 0..m {
        c1[n + i] = 1.0;
    }
    let all = vec![true; n + m];
    let binv = sx.optimize(&c1, &all)?;
    let xb = &binv * &sx.b;
    let infeas: f64 = sx
        .basis
        .iter()
        .zip(xb.iter())
        .filter(|(&j, _)| j >= n)
        .map(|(_, &v)| v)
        .sum();
    if infeas > FEAS_TOL * (1.0 + std.b.amax()) {
        return Err(Error::Infeasible);
    }

    // Pivot remaining artificials out, or drop their rows as redundant.
    let mut r = 0;
    while r < sx.basis.len() {
        if sx.basis[r] < n {
            r += 1;
            continue;
        }
        let binv = sx.basis_inverse()?;
        let row = binv.row(r) * &sx.a;
        let candidate = (0..n).find(|&j| !sx.basis.contains(&j) && row[j].abs() > 1e-9);
        match candidate {
            Some(j) => {
                sx.basis[r] = j;
                r += 1;
            }
            None => {
                sx.a = sx.a.clone().remove_row(r);
                sx.b = sx.b.clone().remove_row(r);
                sx.basis.remove(r);
            }
        }
    }

    // Phase two over structural columns only.
    let mut c2 = DVector::zeros(n + m);
    c2.rows_mut(0, n).copy_from(&std.c);
    let mut eligible = vec![true; n + m];
    for e in eligible.iter_mut().skip(n) {
        *e = false;
    }
    let binv = if sx.basis.is_empty() { DMatrix::zeros(0, 0) } else { sx.optimize(&c2, &eligible)? };
    if sx.basis.is_empty() && std.c.iter().any(|&cj| cj < 0.0) {
        return Err(Error::Unbounded);
    }

    let mut z = vec![0.0; n + m];
    if !sx.basis.is_empty() {
        let xb = &binv * &sx.b;
        for (k, &j) in sx.basis.iter().enumerate() {
            z[j] = xb[k].max(0.0);
        }
    }
    let x: Vec<f64> = (0..n0).map(|j| lp.bounds[j].0 + z[j]).collect();
    let objective: f64 = x.iter().zip(&lp.objective).map(|(xi, ci)| xi * ci).sum();

    let dual_std = if sx.basis.is_empty() {
        0.0
    } else {
        let cb = DVector::from_iterator(sx.basis.len(), sx.basis.iter().map(|&j| c2[j]));
        let y = binv.transpose() * cb;
        y.dot(&sx.b)
    };
    let dual_objective = sign * dual_std + shift;

    Ok(LpSolution { x, objective, dual_objective, pivots: sx.pivots })
}
