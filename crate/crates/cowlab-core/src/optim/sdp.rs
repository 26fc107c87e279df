//! Primal-dual interior-point method for small block-diagonal SDPs.
//!
//! Solves
//!
//! ```text
//! minimize   sum_b <C_b, X_b>
//! subject to sum_b <A_ib, X_b> = b_i,   X_b PSD
//! ```
//!
//! together with its dual `max b'y, sum_i y_i A_i + Z = C, Z PSD`. Search
//! directions use Nesterov-Todd scaling with a Mehrotra predictor-corrector.
//! The start point is the infeasible `X = Z = I`, `y = 0`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SdpConstraint {
    /// One coefficient matrix per block (zero matrices for unused blocks).
    pub matrices: Vec<DMatrix<f64>>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    /// Objective matrices to be minimized, one per block.
    pub objective: Vec<DMatrix<f64>>,
    pub constraints: Vec<SdpConstraint>,
}

impl SdpProblem {
    pub fn new(blocks: Vec<usize>) -> Self {
        let objective = blocks.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        Self { blocks, objective, constraints: Vec::new() }
    }

    pub fn zero_blocks(&self) -> Vec<DMatrix<f64>> {
        self.blocks.iter().map(|&n| DMatrix::zeros(n, n)).collect()
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(format!("sdp: {m}")));
        let shapes_ok = |mats: &[DMatrix<f64>]| {
            mats.len() == self.blocks.len()
                && mats.iter().zip(&self.blocks).all(|(m, &n)| m.nrows() == n && m.ncols() == n)
        };
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return bad("blocks must be nonempty".into());
        }
        if !shapes_ok(&self.objective) {
            return bad("objective block shapes".into());
        }
        for (i, con) in self.constraints.iter().enumerate() {
            if !shapes_ok(&con.matrices) {
                return bad(format!("constraint {i} block shapes"));
            }
        }
        let all = self
            .objective
            .iter()
            .chain(self.constraints.iter().flat_map(|c| c.matrices.iter()));
        for m in all {
            if (m - m.transpose()).amax() > 1e-14 * (1.0 + m.amax()) {
                return bad("coefficient matrices must be symmetric".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpSettings {
    pub max_iterations: usize,
    /// Bound on the relative primal and dual residual norms.
    pub feasibility_tol: f64,
    /// Bound on `|pobj - dobj|`.
    pub gap_abs_tol: f64,
    /// Bound on `|pobj - dobj|` relative to the larger objective magnitude.
    pub gap_rel_tol: f64,
    /// When the iteration breaks down or runs out, the best iterate is still
    /// returned if its residuals and relative gap are below this.
    pub acceptable_tol: f64,
    pub step_fraction: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            feasibility_tol: 1e-10,
            gap_abs_tol: 1e-9,
            gap_rel_tol: 1e-8,
            acceptable_tol: 1e-7,
            step_fraction: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub x: Vec<DMatrix<f64>>,
    pub y: DVector<f64>,
    pub z: Vec<DMatrix<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl SdpSolution {
    /// `|pobj - dobj|` relative to the larger objective magnitude.
    pub fn rel_gap(&self) -> f64 {
        rel_gap(self.primal_objective, self.dual_objective)
    }
}

fn rel_gap(p: f64, d: f64) -> f64 {
    let scale = p.abs().max(d.abs());
    if scale == 0.0 {
        0.0
    } else {
        (p - d).abs() / scale
    }
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

struct Scaling {
    r: DMatrix<f64>,
    r_inv: DMatrix<f64>,
    w: DMatrix<f64>,
    lambda: DVector<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Scaling> {
    let l1 = x.clone().cholesky()?.l();
    let l2 = z.clone().cholesky()?.l();
    let svd = (l2.transpose() * &l1).svd(true, true);
    let v = svd.v_t?.transpose();
    let lambda = svd.singular_values;
    if lambda.iter().any(|&l| !(l > 0.0)) {
        return None;
    }
    let inv_sqrt = DMatrix::from_diagonal(&lambda.map(|l| 1.0 / l.sqrt()));
    let sqrt = DMatrix::from_diagonal(&lambda.map(f64::sqrt));
    let r = &l1 * &v * inv_sqrt;
    let l1_inv = l1.solve_lower_triangular(&DMatrix::identity(x.nrows(), x.nrows()))?;
    let r_inv = sqrt * v.transpose() * l1_inv;
    let w = &r * r.transpose();
    Some(Scaling { r, r_inv, w, lambda })
}

/// Largest `alpha` with `diag(lambda) + alpha * d` PSD.
fn max_step(lambda: &DVector<f64>, d: &DMatrix<f64>) -> f64 {
    let n = lambda.len();
    let mut s = d.clone();
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] /= (lambda[i] * lambda[j]).sqrt();
        }
    }
    symmetrize(&mut s);
    let min_eig = SymmetricEigen::new(s).eigenvalues.min();
    if min_eig >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min_eig
    }
}

struct Iterate<'a> {
    p: &'a SdpProblem,
    x: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    z: Vec<DMatrix<f64>>,
}

impl Iterate<'_> {
    fn primal_residual(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.p.constraints.len(),
            self.p.constraints.iter().map(|c| {
                c.rhs - c.matrices.iter().zip(&self.x).map(|(a, x)| inner(a, x)).sum::<f64>()
            }),
        )
    }

    fn dual_residual(&self) -> Vec<DMatrix<f64>> {
        let mut rd: Vec<DMatrix<f64>> =
            self.p.objective.iter().zip(&self.z).map(|(c, z)| c - z).collect();
        for (i, con) in self.p.constraints.iter().enumerate() {
            for (b, a) in con.matrices.iter().enumerate() {
                rd[b] -= a * self.y[i];
            }
        }
        rd
    }
}

pub fn solve_sdp(problem: &SdpProblem, settings: &SdpSettings) -> Result<SdpSolution> {
    problem.check()?;
    let m = problem.constraints.len();
    let nb = problem.blocks.len();
    let n_total: usize = problem.blocks.iter().sum();
    let b = DVector::from_iterator(m, problem.constraints.iter().map(|c| c.rhs));
    let c_norm: f64 = problem.objective.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();

    let mut it = Iterate {
        p: problem,
        x: problem.blocks.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        y: DVector::zeros(m),
        z: problem.blocks.iter().map(|&n| DMatrix::identity(n, n)).collect(),
    };

    let mut best: Option<(f64, SdpSolution)> = None;
    let give_up = |best: Option<(f64, SdpSolution)>, iter: usize, last: (f64, f64, f64)| match best {
        Some((merit, sol)) if merit <= settings.acceptable_tol => Ok(sol),
        _ => Err(Error::NotConverged {
            iterations: iter,
            primal_residual: last.0,
            dual_residual: last.1,
            gap: last.2,
        }),
    };
    let mut last = (f64::NAN, f64::NAN, f64::NAN);
    for iter in 0..settings.max_iterations {
        let rp = it.primal_residual();
        let rd = it.dual_residual();
        let pobj: f64 = problem.objective.iter().zip(&it.x).map(|(c, x)| inner(c, x)).sum();
        let dobj = b.dot(&it.y);
        let gap: f64 = it.x.iter().zip(&it.z).map(|(x, z)| inner(x, z)).sum();
        let pres = rp.norm() / (1.0 + b.norm());
        let dres = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt() / (1.0 + c_norm);
        let obj_gap = (pobj - dobj).abs();
        last = (pres, dres, obj_gap);
        let merit = pres.max(dres).max(rel_gap(pobj, dobj));
        if merit.is_finite() && best.as_ref().is_none_or(|b| merit < b.0) {
            let sol = SdpSolution {
                x: it.x.clone(),
                y: it.y.clone(),
                z: it.z.clone(),
                primal_objective: pobj,
                dual_objective: dobj,
                primal_residual: pres,
                dual_residual: dres,
                iterations: iter,
            };
            best = Some((merit, sol));
        }

        if pres <= settings.feasibility_tol
            && dres <= settings.feasibility_tol
            && obj_gap <= settings.gap_abs_tol
            && rel_gap(pobj, dobj) <= settings.gap_rel_tol
        {
            return Ok(SdpSolution {
                x: it.x,
                y: it.y,
                z: it.z,
                primal_objective: pobj,
                dual_objective: dobj,
                primal_residual: pres,
                dual_residual: dres,
                iterations: iter,
            });
        }

        let mu = gap / n_total as f64;
        let mut scal = Vec::with_capacity(nb);
        for (x, z) in it.x.iter().zip(&it.z) {
            match nt_scaling(x, z) {
                Some(s) => scal.push(s),
                None => return give_up(best, iter, last),
            }
        }

        // W A_j W for every constraint and block.
        let wa: Vec<Vec<DMatrix<f64>>> = problem
            .constraints
            .iter()
            .map(|con| {
                con.matrices
                    .iter()
                    .zip(&scal)
                    .map(|(a, s)| &s.w * a * &s.w)
                    .collect()
            })
            .collect();
        let mut schur = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v: f64 = problem.constraints[i]
                    .matrices
                    .iter()
                    .zip(&wa[j])
                    .map(|(a, w)| inner(a, w))
                    .sum();
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let chol = match schur.clone().cholesky() {
            Some(c) => c,
            None => {
                let reg = 1e-14 * (1.0 + schur.diagonal().amax());
                let mut shifted = schur.clone();
                for i in 0..m {
                    shifted[(i, i)] += reg;
                }
                match shifted.cholesky() {
                    Some(c) => c,
                    None => return give_up(best, iter, last),
                }
            }
        };
        let wrdw: Vec<DMatrix<f64>> = rd.iter().zip(&scal).map(|(r, s)| &s.w * r * &s.w).collect();

        // Solves the Newton system for a scaled complementarity target.
        let direction = |targets: &[DMatrix<f64>]| {
            let rc: Vec<DMatrix<f64>> = targets
                .iter()
                .zip(&scal)
                .map(|(t, s)| {
                    let n = t.nrows();
                    let mut sm = DMatrix::zeros(n, n);
                    for i in 0..n {
                        for j in 0..n {
                            sm[(i, j)] = 2.0 * t[(i, j)] / (s.lambda[i] + s.lambda[j]);
                        }
                    }
                    &s.r * sm * s.r.transpose()
                })
                .collect();
            let rhs = DVector::from_iterator(
                m,
                problem.constraints.iter().enumerate().map(|(i, con)| {
                    rp[i]
                        - con
                            .matrices
                            .iter()
                            .zip(rc.iter().zip(&wrdw))
                            .map(|(a, (rc, wrw))| inner(a, &(rc - wrw)))
                            .sum::<f64>()
                }),
            );
            let dy = chol.solve(&rhs);
            let mut dz = rd.clone();
            for (i, con) in problem.constraints.iter().enumerate() {
                for (bk, a) in con.matrices.iter().enumerate() {
                    dz[bk] -= a * dy[i];
                }
            }
            let dx: Vec<DMatrix<f64>> = rc
                .iter()
                .zip(dz.iter().zip(&scal))
                .map(|(rc, (dz, s))| {
                    let mut d = rc - &s.w * dz * &s.w;
                    symmetrize(&mut d);
                    d
                })
                .collect();
            (dx, dy, dz)
        };
        let scaled = |dx: &[DMatrix<f64>], dz: &[DMatrix<f64>]| {
            let sx: Vec<DMatrix<f64>> =
                dx.iter().zip(&scal).map(|(d, s)| &s.r_inv * d * s.r_inv.transpose()).collect();
            let sz: Vec<DMatrix<f64>> =
                dz.iter().zip(&scal).map(|(d, s)| s.r.transpose() * d * &s.r).collect();
            (sx, sz)
        };
        let steps = |sx: &[DMatrix<f64>], sz: &[DMatrix<f64>]| {
            let mut ap = f64::INFINITY;
            let mut ad = f64::INFINITY;
            for (k, s) in scal.iter().enumerate() {
                ap = ap.min(max_step(&s.lambda, &sx[k]));
                ad = ad.min(max_step(&s.lambda, &sz[k]));
            }
            (ap, ad)
        };

        // Predictor.
        let pred_targets: Vec<DMatrix<f64>> = scal
            .iter()
            .map(|s| DMatrix::from_diagonal(&s.lambda.map(|l| -l * l)))
            .collect();
        let (dx_a, _, dz_a) = direction(&pred_targets);
        let (sx_a, sz_a) = scaled(&dx_a, &dz_a);
        let (ap, ad) = steps(&sx_a, &sz_a);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let gap_a: f64 = it
            .x
            .iter()
            .zip(&dx_a)
            .zip(it.z.iter().zip(&dz_a))
            .map(|((x, dx), (z, dz))| inner(&(x + dx * ap), &(z + dz * ad)))
            .sum();
        let sigma = if gap > 0.0 { (gap_a / gap).clamp(0.0, 1.0).powi(3) } else { 0.0 };

        // Corrector.
        let corr_targets: Vec<DMatrix<f64>> = scal
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let n = s.lambda.len();
                let mut t = DMatrix::identity(n, n) * (sigma * mu);
                for i in 0..n {
                    t[(i, i)] -= s.lambda[i] * s.lambda[i];
                }
                let mut prod = &sx_a[k] * &sz_a[k];
                symmetrize(&mut prod);
                t - prod
            })
            .collect();
        let (dx, dy, dz) = direction(&corr_targets);
        let (sx, sz) = scaled(&dx, &dz);
        let (ap, ad) = steps(&sx, &sz);
        let ap = (settings.step_fraction * ap).min(1.0);
        let ad = (settings.step_fraction * ad).min(1.0);

        for k in 0..nb {
            it.x[k] += &dx[k] * ap;
            it.z[k] += &dz[k] * ad;
            symmetrize(&mut it.x[k]);
            symmetrize(&mut it.z[k]);
        }
        it.y += dy * ad;
    }

    give_up(best, settings.max_iterations, last)
}
