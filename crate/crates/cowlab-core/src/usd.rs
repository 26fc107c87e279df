//! Unambiguous state discrimination of the COW signals.
//!
//! Signals are indexed `0` and `1` for the two key states, `2` for the decoy
//! (both pulses non-vacuum) and `3` for the all-vacuum signal of the
//! four-state protocol.

use nalgebra::{DMatrix, Matrix4, Vector4};
use num_complex::Complex64;
use serde::Serialize;

use crate::optim::{solve_sdp, SdpConstraint, SdpProblem, SdpSettings};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UsdSolution {
    /// Conclusive probability for either key signal.
    pub q_s: f64,
    /// Conclusive probability for the decoy signal.
    pub q_s_d: f64,
    /// Conclusive probability for the vacuum signal (four-state only).
    pub q_s_v: f64,
    pub p_c: f64,
    /// `p(j|c)` for `j = 0..4`.
    pub p_given_c: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sdp: Option<SdpReport>,
}

impl UsdSolution {
    fn from_conclusive(priors: [f64; 4], q: [f64; 4]) -> Self {
        let p_c: f64 = priors.iter().zip(&q).map(|(p, q)| p * q).sum();
        let mut p_given_c = [0.5, 0.5, 0.0, 0.0];
        if p_c > 0.0 {
            for j in 0..4 {
                p_given_c[j] = priors[j] * q[j] / p_c;
            }
        }
        Self { q_s: q[0], q_s_d: q[2], q_s_v: q[3], p_c, p_given_c, sdp: None }
    }
}

/// Solver diagnostics and the optimal measurement of [`four_state_usd`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdpReport {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub rel_gap: f64,
    pub iterations: usize,
    /// Smallest eigenvalue over all POVM elements.
    pub min_eigenvalue: f64,
    /// Frobenius norm of `sum_j E_j - I`.
    pub completeness_residual: f64,
    /// Largest `<phi_i|E_j|phi_i>` with `i != j`.
    pub max_cross_probability: f64,
    /// POVM elements `E_0..E_4`, row-major.
    pub povm: Vec<[[f64; 4]; 4]>,
    /// Generalized Gell-Mann coefficients of each POVM element.
    pub gell_mann: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TunableBranch {
    /// Decoys are never identified.
    KeyOnly,
    Mixed,
    /// Key signals are never identified.
    DecoyOnly,
}

/// Conclusive probabilities `(q_s, q_s_d)` of the USD measurement that
/// maximizes `(1 - zeta) q_s + zeta q_s_d`.
pub fn tunable_conclusive(mu: f64, zeta: f64) -> (f64, f64, TunableBranch) {
    if zeta >= 1.0 {
        return (0.0, (mu / 2.0).tanh(), TunableBranch::DecoyOnly);
    }
    let xi = zeta / (2.0 * (1.0 - zeta));
    let sx = xi.sqrt();
    let half = (-mu / 2.0).exp();
    if sx <= half {
        (-(-mu).exp_m1(), 0.0, TunableBranch::KeyOnly)
    } else if (mu / 2.0).cosh() >= sx {
        let q_s = 1.0 + (-mu).exp() - half * (2.0 * zeta / (1.0 - zeta)).sqrt();
        let q_d = 1.0 - half / sx;
        (q_s.max(0.0), q_d, TunableBranch::Mixed)
    } else {
        (0.0, (mu / 2.0).tanh(), TunableBranch::DecoyOnly)
    }
}

/// Weight beyond which the tunable measurement stops identifying key
/// signals.
pub fn key_cutoff_zeta(mu: f64) -> f64 {
    let c = (mu / 2.0).cosh();
    2.0 * c * c / (1.0 + 2.0 * c * c)
}

/// Weight at which the tunable measurement starts identifying decoys.
pub fn decoy_onset_zeta(mu: f64) -> f64 {
    let e = (-mu).exp();
    2.0 * e / (1.0 + 2.0 * e)
}

pub fn tunable_usd(mu: f64, f: f64, zeta: f64) -> Result<UsdSolution> {
    if !(mu > 0.0) || !(f > 0.0 && f < 1.0) {
        return Err(Error::InvalidParams(format!("need mu > 0 and f in (0,1), got {mu}, {f}")));
    }
    if !(zeta >= f && zeta <= 1.0) {
        return Err(Error::InvalidParams(format!("zeta = {zeta} outside [{f}, 1]")));
    }
    let (q_s, q_d, _) = tunable_conclusive(mu, zeta);
    let key = (1.0 - f) / 2.0;
    Ok(UsdSolution::from_conclusive([key, key, f, 0.0], [q_s, q_s, q_d, 0.0]))
}

/// Optimal three-signal USD, which in the usual regime ignores decoys.
pub fn three_state_usd(mu: f64, f: f64) -> Result<UsdSolution> {
    if !(mu > 0.0) || !(f > 0.0 && f < 1.0) {
        return Err(Error::InvalidParams(format!("need mu > 0 and f in (0,1), got {mu}, {f}")));
    }
    if (f / (2.0 * (1.0 - f))).sqrt() > (-mu / 2.0).exp() {
        return tunable_usd(mu, f, f);
    }
    let q_s = -(-mu).exp_m1();
    let key = (1.0 - f) / 2.0;
    Ok(UsdSolution::from_conclusive([key, key, f, 0.0], [q_s, q_s, 0.0, 0.0]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVectors4 {
    pub phi: [Vector4<f64>; 4],
}

impl StateVectors4 {
    pub fn gram(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.phi[i].dot(&self.phi[j]))
    }
}

/// The four signals as real vectors in an orthonormal basis of their span.
pub fn build_four_state_vectors(mu: f64) -> StateVectors4 {
    let e = (-mu).exp();
    let h = (-mu / 2.0).exp();
    let s = -(-2.0 * mu).exp_m1();
    let s = s.sqrt();
    let r = -(-mu).exp_m1() / s;
    StateVectors4 {
        phi: [
            Vector4::new(1.0, 0.0, 0.0, 0.0),
            Vector4::new(e, s, 0.0, 0.0),
            Vector4::new(h, h * r, r, 0.0),
            Vector4::new(h, h * r, -e * r, -(-mu).exp_m1()),
        ],
    }
}

/// Generalized Gell-Mann matrices: identity, symmetric, antisymmetric,
/// then diagonal, each normalized to `Tr(s_k s_l) = n delta_kl`.
pub fn gell_mann_basis(n: usize) -> Vec<DMatrix<Complex64>> {
    assert!(n >= 2, "Gell-Mann basis needs n >= 2");
    let zero = Complex64::new(0.0, 0.0);
    let scale = (n as f64 / 2.0).sqrt();
    let mut out = vec![DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            zero
        }
    })];
    for p in 0..n {
        for q in p + 1..n {
            let mut m = DMatrix::from_element(n, n, zero);
            m[(p, q)] = Complex64::new(scale, 0.0);
            m[(q, p)] = Complex64::new(scale, 0.0);
            out.push(m);
        }
    }
    for p in 0..n {
        for q in p + 1..n {
            let mut m = DMatrix::from_element(n, n, zero);
            m[(p, q)] = Complex64::new(0.0, -scale);
            m[(q, p)] = Complex64::new(0.0, scale);
            out.push(m);
        }
    }
    for d in 1..n {
        let pairs = (d * (d + 1) / 2) as f64;
        let c = (n as f64 / (2.0 * pairs)).sqrt();
        let mut m = DMatrix::from_element(n, n, zero);
        for i in 0..d {
            m[(i, i)] = Complex64::new(c, 0.0);
        }
        m[(d, d)] = Complex64::new(-(d as f64) * c, 0.0);
        out.push(m);
    }
    out
}

/// Coefficients `e_k = Tr(E s_k) / n` of a real symmetric matrix.
pub fn gell_mann_coefficients(e: &DMatrix<f64>, basis: &[DMatrix<Complex64>]) -> Vec<f64> {
    let n = e.nrows();
    basis
        .iter()
        .map(|s| {
            let mut tr = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    tr += e[(i, j)] * s[(j, i)];
                }
            }
            tr.re / n as f64
        })
        .collect()
}

/// Optimal four-signal USD measurement.
///
/// Unambiguity forces `E_j` (for `j < 4`) to annihilate the other three
/// signals, so each is a nonnegative multiple `c_j` of the projector onto the
/// normalized dual vector of signal `j`. The SDP keeps `c_0..c_3` as 1x1
/// blocks and the inconclusive element `E_4 = I - sum_j c_j d_j d_j'` as a
/// 4x4 block.
pub fn four_state_usd(mu: f64, f_d: f64, f_v: f64) -> Result<UsdSolution> {
    four_state_usd_with(mu, f_d, f_v, &SdpSettings::default())
}

pub fn four_state_usd_with(mu: f64, f_d: f64, f_v: f64, settings: &SdpSettings) -> Result<UsdSolution> {
    if !(mu > 0.0) || !(f_d > 0.0 && f_v > 0.0 && f_d + f_v < 1.0) {
        return Err(Error::InvalidParams(format!(
            "need mu > 0 and positive f_d, f_v with f_d + f_v < 1, got {mu}, {f_d}, {f_v}"
        )));
    }
    let key = (1.0 - f_d - f_v) / 2.0;
    let priors = [key, key, f_d, f_v];
    let states = build_four_state_vectors(mu);
    let v = Matrix4::from_rows(&[
        states.phi[0].transpose(),
        states.phi[1].transpose(),
        states.phi[2].transpose(),
        states.phi[3].transpose(),
    ]);
    let v_inv = v
        .try_inverse()
        .ok_or_else(|| Error::InvalidParams("signal vectors are linearly dependent".into()))?;
    let duals: Vec<Vector4<f64>> = (0..4)
        .map(|j| {
            let d: Vector4<f64> = v_inv.column(j).into_owned();
            d / d.norm()
        })
        .collect();
    let overlap: Vec<f64> = (0..4).map(|j| duals[j].dot(&states.phi[j]).powi(2)).collect();

    // Overlaps shrink like powers of mu, so the objective is normalized.
    let scale = (0..4).map(|j| priors[j] * overlap[j]).fold(f64::MIN_POSITIVE, f64::max);
    let mut problem = SdpProblem::new(vec![1, 1, 1, 1, 4]);
    for j in 0..4 {
        problem.objective[j][(0, 0)] = -priors[j] * overlap[j] / scale;
    }
    for p in 0..4 {
        for q in p..4 {
            let mut mats = problem.zero_blocks();
            for j in 0..4 {
                mats[j][(0, 0)] = duals[j][p] * duals[j][q];
            }
            if p == q {
                mats[4][(p, p)] = 1.0;
            } else {
                mats[4][(p, q)] = 0.5;
                mats[4][(q, p)] = 0.5;
            }
            let rhs = if p == q { 1.0 } else { 0.0 };
            problem.constraints.push(SdpConstraint { matrices: mats, rhs });
        }
    }
    let mut sym = problem.zero_blocks();
    sym[0][(0, 0)] = overlap[0];
    sym[1][(0, 0)] = -overlap[1];
    problem.constraints.push(SdpConstraint { matrices: sym, rhs: 0.0 });

    let sol = solve_sdp(&problem, settings)?;

    let weights: Vec<f64> = (0..4).map(|j| sol.x[j][(0, 0)]).collect();
    let mut povm: Vec<Matrix4<f64>> =
        (0..4).map(|j| duals[j] * duals[j].transpose() * weights[j]).collect();
    povm.push(Matrix4::from_fn(|i, j| sol.x[4][(i, j)]));

    let q: [f64; 4] = std::array::from_fn(|j| states.phi[j].dot(&(povm[j] * states.phi[j])));
    let mut solution = UsdSolution::from_conclusive(priors, q);

    let completeness = povm.iter().fold(-Matrix4::identity(), |acc, e| acc + e);
    let mut min_eigenvalue = f64::INFINITY;
    for e in &povm {
        min_eigenvalue = min_eigenvalue.min(e.symmetric_eigenvalues().min());
    }
    let mut max_cross: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                max_cross = max_cross.max(states.phi[i].dot(&(povm[j] * states.phi[i])).abs());
            }
        }
    }
    let basis = gell_mann_basis(4);
    solution.sdp = Some(SdpReport {
        primal_objective: -sol.primal_objective * scale,
        dual_objective: -sol.dual_objective * scale,
        rel_gap: sol.rel_gap(),
        iterations: sol.iterations,
        min_eigenvalue,
        completeness_residual: completeness.norm(),
        max_cross_probability: max_cross,
        povm: povm
            .iter()
            .map(|e| std::array::from_fn(|i| std::array::from_fn(|j| e[(i, j)])))
            .collect(),
        gell_mann: povm
            .iter()
            .map(|e| {
                let d = DMatrix::from_fn(4, 4, |i, j| e[(i, j)]);
                gell_mann_coefficients(&d, &basis)
            })
            .collect(),
    });
    Ok(solution)
}
