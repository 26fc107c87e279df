//! Zero-error intercept-resend attack: block statistics, total gains and the
//! optimizers Eve runs against the coincidence and detection-rate checks.
//!
//! Eve measures each signal with USD and resends runs of `k` consecutive
//! conclusive results bounded by vacuum pulses. Per-block functions give the
//! average number of data-line events in a length-`k` block; [`gain_zero`]
//! averages them over the block-length distribution.

use serde::Serialize;

use crate::fock::{closed_double, closed_individual, PhotonDistribution, DEFAULT_CUTOFF};
use crate::optim::{maximize_1d, solve_lp, LinearProgram, Sense};
use crate::params::ExperimentalParams;
use crate::usd::{four_state_usd, key_cutoff_zeta, three_state_usd, tunable_usd};
use crate::{Error, Result};

/// Number of points in the coarse `zeta` grid of [`maximize_decoy_rate`].
pub const ZETA_GRID: usize = 200;
/// Golden-section steps after the coarse `zeta` grid.
pub const ZETA_REFINE: usize = 60;

/// Average numbers of individual and double non-vacuum pulses in a block of
/// type `ij` (last signal `i`, first signal `j`), indexed `[i][j]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockCounts {
    pub k: usize,
    pub n_ind: [[f64; 2]; 2],
    pub n_double: [[f64; 2]; 2],
}

impl BlockCounts {
    /// Counts averaged over the four equally likely block types.
    pub fn mean(&self) -> (f64, f64) {
        let sum = |m: &[[f64; 2]; 2]| m.iter().flatten().sum::<f64>() / 4.0;
        (sum(&self.n_ind), sum(&self.n_double))
    }
}

pub fn block_counts(k: usize) -> Result<BlockCounts> {
    if k < 2 {
        return Err(Error::InvalidParams(format!("block length must be at least 2, got {k}")));
    }
    if k == 2 {
        return Ok(BlockCounts {
            k,
            n_ind: [[1.0, 0.0], [0.0, 1.0]],
            n_double: [[0.0, 1.0], [0.0, 0.0]],
        });
    }
    let kf = k as f64;
    let ind = (kf - 1.0) / 2.0;
    Ok(BlockCounts {
        k,
        n_ind: [[ind; 2]; 2],
        n_double: [
            [(kf - 1.0) / 4.0, (kf + 1.0) / 4.0],
            [(kf - 3.0) / 4.0, (kf - 1.0) / 4.0],
        ],
    })
}

/// Average data-line clicks of a length-`k` block when the key signals are
/// identified with probability `p0` each and the rest are decoys.
pub fn p_click_three_state(k: usize, p0: f64) -> f64 {
    if p0 == 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    let r = 1.0 - 2.0 * p0;
    (-1.0 + (kf + 1.0) * p0 + r.powi(k as i32) * (1.0 + (kf - 1.0) * p0)) / p0
}

/// Weights `w_k`, `k = 2..=m_max`, of the block-length distribution, so that
/// a gain is `sum_k w_k * per_block(k)`.
pub fn block_weights(p_c: f64, m_max: usize) -> Vec<(usize, f64)> {
    let norm = (1.0 - p_c) / (1.0 - p_c.powi(m_max as i32 + 1));
    (2..=m_max)
        .map(|k| {
            let w = if k < m_max {
                p_c.powi(k as i32) * (1.0 - p_c)
            } else {
                p_c.powi(m_max as i32)
            };
            (k, norm * w)
        })
        .collect()
}

pub fn gain_zero<F>(p_c: f64, m_max: usize, per_block: F) -> f64
where
    F: Fn(usize) -> f64,
{
    block_weights(p_c, m_max).into_iter().map(|(k, w)| w * per_block(k)).sum()
}

/// How Eve prepares her resent pulses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Resend {
    /// Pulses bright enough that every non-vacuum pulse clicks.
    HighIntensity,
    /// Photon-number distributions of individual (`q`) and double (`p`)
    /// pulses.
    Distributions { q: PhotonDistribution, p: PhotonDistribution },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Protocol {
    ThreeState,
    /// Three-state protocol with Eve's `zeta`-tunable measurement.
    ThreeStateTunable,
    FourState,
}

/// The strategy behind an [`AttackResult`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackConfig {
    pub protocol: Protocol,
    pub resend: Resend,
    /// Forwarding probabilities for `k = 2..=m_max`.
    pub gammas: Vec<f64>,
    pub zeta: Option<f64>,
    pub p_c: f64,
    pub p_given_c: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackResult {
    pub g_zero: f64,
    pub g_zero_coin: Option<f64>,
    pub g_zero_decoy: Option<f64>,
    pub witness: AttackConfig,
}

/// Unconstrained attack on the three-state protocol with bright resent pulses.
pub fn baseline_gain_zero(params: &ExperimentalParams) -> Result<AttackResult> {
    params.validate()?;
    let usd = three_state_usd(params.mu, params.f)?;
    let p0 = usd.p_given_c[0];
    let g = gain_zero(usd.p_c, params.m_max, |k| p_click_three_state(k, p0));
    Ok(AttackResult {
        g_zero: g,
        g_zero_coin: None,
        g_zero_decoy: None,
        witness: AttackConfig {
            protocol: Protocol::ThreeState,
            resend: Resend::HighIntensity,
            gammas: vec![1.0; params.m_max - 1],
            zeta: None,
            p_c: usd.p_c,
            p_given_c: usd.p_given_c,
        },
    })
}

/// `(p_click(k), p_coin(k))` for a block resent with the given pulses.
pub fn coin_attack_stats(
    k: usize,
    q: &PhotonDistribution,
    p: &PhotonDistribution,
    t_b: f64,
    eta_det: f64,
) -> (f64, f64) {
    let ind = closed_individual(q, t_b, eta_det);
    let dbl = closed_double(p, t_b, eta_det);
    let c = (k as f64 - 1.0) / 2.0;
    (c * (ind.p_click + dbl.p_click / 2.0), c * (ind.p_coin + dbl.p_coin / 2.0))
}

/// Minimal coincidence gain over resent photon-number distributions with at
/// most `n_cut` photons, subject to the total gain equalling `g_target`.
pub fn minimize_coincidences(
    params: &ExperimentalParams,
    g_target: f64,
    n_cut: usize,
) -> Result<AttackResult> {
    params.validate()?;
    if !(g_target >= 0.0) {
        return Err(Error::InvalidParams(format!("target gain must be nonnegative, got {g_target}")));
    }
    let usd = three_state_usd(params.mu, params.f)?;
    let scale: f64 = block_weights(usd.p_c, params.m_max)
        .iter()
        .map(|&(k, w)| w * (k as f64 - 1.0) / 2.0)
        .sum();
    let n = n_cut + 1;
    let (t_b, eta) = (params.t_b, params.eta_det);
    let mut click = Vec::with_capacity(2 * n);
    let mut coin = Vec::with_capacity(2 * n);
    for m in 0..n {
        let s = closed_individual(&PhotonDistribution::number(m), t_b, eta);
        click.push(scale * s.p_click);
        coin.push(scale * s.p_coin);
    }
    for m in 0..n {
        let s = closed_double(&PhotonDistribution::number(m), t_b, eta);
        click.push(scale * s.p_click / 2.0);
        coin.push(scale * s.p_coin / 2.0);
    }

    let mut simplex_q = vec![0.0; 2 * n];
    let mut simplex_p = vec![0.0; 2 * n];
    simplex_q[..n].fill(1.0);
    simplex_p[n..].fill(1.0);
    let x = if g_target == 0.0 {
        let mut x = vec![0.0; 2 * n];
        x[0] = 1.0;
        x[n] = 1.0;
        x
    } else {
        // Rows are normalized by the target so the simplex sees O(1) data.
        let lp = LinearProgram::new(Sense::Minimize, coin.iter().map(|c| c / g_target).collect())
            .eq(click.iter().map(|c| c / g_target).collect(), 1.0)
            .eq(simplex_q, 1.0)
            .eq(simplex_p, 1.0);
        solve_lp(&lp)?.x
    };
    let dist = |xs: &[f64]| {
        let total: f64 = xs.iter().sum();
        PhotonDistribution::new(xs.iter().map(|v| v / total).collect())
    };
    let q = dist(&x[..n])?;
    let p = dist(&x[n..])?;
    let g_zero = click.iter().zip(&x).map(|(c, v)| c * v).sum();
    let g_zero_coin = coin.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(AttackResult {
        g_zero,
        g_zero_coin: Some(g_zero_coin),
        g_zero_decoy: None,
        witness: AttackConfig {
            protocol: Protocol::ThreeState,
            resend: Resend::Distributions { q, p },
            gammas: vec![1.0; params.m_max - 1],
            zeta: None,
            p_c: usd.p_c,
            p_given_c: usd.p_given_c,
        },
    })
}

/// [`minimize_coincidences`] with the default photon cutoff.
pub fn minimize_coincidences_default(params: &ExperimentalParams, g_target: f64) -> Result<AttackResult> {
    minimize_coincidences(params, g_target, DEFAULT_CUTOFF)
}

/// Average decoy-signal clicks of a length-`k` block, closed form.
pub fn p_click_decoy(k: usize, p2: f64) -> f64 {
    if p2 == 0.0 || k < 2 {
        return 0.0;
    }
    let kf = k as f64;
    let a = 1.0 - p2;
    p2 / a * (a * kf - 2.0 + (a * kf + 2.0 * p2) * p2.powi(k as i32 - 1))
}

/// [`p_click_decoy`] by iterating its recursion from `k = 1`.
pub fn p_click_decoy_recursive(k: usize, p2: f64) -> f64 {
    let mut v = 0.0;
    for j in 2..=k {
        let jf = j as f64;
        v = ((1.0 - p2) * jf + p2 - 2.0 + v) * p2 + p2.powi(j as i32);
    }
    v
}

struct DecoyBlocks {
    p_c: f64,
    p_given_c: [f64; 4],
    /// `(w_k * clicks(k), w_k * decoy_clicks(k))` for `k = 2..=m_max`.
    terms: Vec<(f64, f64)>,
}

fn decoy_blocks(params: &ExperimentalParams, zeta: f64) -> Result<Option<DecoyBlocks>> {
    let usd = tunable_usd(params.mu, params.f, zeta)?;
    if !(usd.q_s > 0.0 && usd.p_c > 0.0) {
        return Ok(None);
    }
    let p0 = usd.p_given_c[0];
    let p2 = usd.p_given_c[2];
    let terms = block_weights(usd.p_c, params.m_max)
        .into_iter()
        .map(|(k, w)| (w * p_click_three_state(k, p0), w * p_click_decoy(k, p2)))
        .collect();
    Ok(Some(DecoyBlocks { p_c: usd.p_c, p_given_c: usd.p_given_c, terms }))
}

/// `(G_zero, G_zero_decoy)` when Eve uses the `zeta`-tunable measurement and
/// forwards a length-`k` block with probability `gammas[k - 2]`.
pub fn decoy_attack_gains(params: &ExperimentalParams, zeta: f64, gammas: &[f64]) -> Result<(f64, f64)> {
    params.validate()?;
    if gammas.len() != params.m_max - 1 {
        return Err(Error::InvalidParams(format!(
            "expected {} forwarding probabilities, got {}",
            params.m_max - 1,
            gammas.len()
        )));
    }
    if gammas.iter().any(|g| !(0.0..=1.0).contains(g)) {
        return Err(Error::InvalidParams("forwarding probabilities must lie in [0, 1]".into()));
    }
    let Some(blocks) = decoy_blocks(params, zeta)? else {
        return Ok((0.0, 0.0));
    };
    Ok(blocks
        .terms
        .iter()
        .zip(gammas)
        .fold((0.0, 0.0), |(g, d), (&(a, b), &y)| (g + y * a, d + y * b)))
}

/// Best decoy-to-total gain ratio at fixed `zeta`, with the forwarding
/// probabilities chosen by LP. `None` if `g_target` is out of reach.
fn best_gammas(blocks: &DecoyBlocks, g_target: f64) -> Result<Option<(f64, Vec<f64>)>> {
    let reach: f64 = blocks.terms.iter().map(|t| t.0).sum();
    if reach < g_target {
        return Ok(None);
    }
    let n = blocks.terms.len();
    let lp = LinearProgram::new(Sense::Maximize, blocks.terms.iter().map(|t| t.1 / g_target).collect())
        .eq(blocks.terms.iter().map(|t| t.0 / g_target).collect(), 1.0)
        .bounds(vec![(0.0, 1.0); n]);
    match solve_lp(&lp) {
        Ok(sol) => Ok(Some((sol.objective, sol.x))),
        Err(Error::Infeasible) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Largest `G_zero_decoy / G_zero` Eve can reach with `G_zero = g_target`.
///
/// `zeta` is searched over `[f, zeta_max]`; beyond `zeta_max` key signals are
/// never identified and no target gain is reachable.
pub fn maximize_decoy_rate(params: &ExperimentalParams, g_target: f64) -> Result<AttackResult> {
    params.validate()?;
    if !(g_target > 0.0) {
        return Err(Error::InvalidParams(format!("target gain must be positive, got {g_target}")));
    }
    let lo = params.f;
    let hi = key_cutoff_zeta(params.mu);
    let ratio_at = |zeta: f64| -> f64 {
        match decoy_blocks(params, zeta) {
            Ok(Some(b)) => match best_gammas(&b, g_target) {
                Ok(Some((r, _))) => r,
                _ => f64::NEG_INFINITY,
            },
            _ => f64::NEG_INFINITY,
        }
    };
    let (zeta, best) = if hi > lo {
        maximize_1d(ratio_at, lo, hi, ZETA_GRID, ZETA_REFINE)
    } else {
        (lo, ratio_at(lo))
    };
    if best == f64::NEG_INFINITY {
        return Err(Error::Infeasible);
    }
    let blocks = decoy_blocks(params, zeta)?.ok_or(Error::Infeasible)?;
    let (ratio, gammas) = best_gammas(&blocks, g_target)?.ok_or(Error::Infeasible)?;
    Ok(AttackResult {
        g_zero: g_target,
        g_zero_coin: None,
        g_zero_decoy: Some(ratio * g_target),
        witness: AttackConfig {
            protocol: Protocol::ThreeStateTunable,
            resend: Resend::HighIntensity,
            gammas,
            zeta: Some(zeta),
            p_c: blocks.p_c,
            p_given_c: blocks.p_given_c,
        },
    })
}

/// Per-block clicks at one `zeta` under two models: the three-signal
/// formula used by [`decoy_attack_gains`] and the four-signal formula with
/// no vacuum signals. Rows are `(k, three_signal, four_signal)`.
pub fn decoy_click_model_gap(params: &ExperimentalParams, zeta: f64) -> Result<Vec<(usize, f64, f64)>> {
    let usd = tunable_usd(params.mu, params.f, zeta)?;
    let pg = usd.p_given_c;
    (2..=params.m_max)
        .map(|k| Ok((k, p_click_three_state(k, pg[0]), p_click_four_state(k, pg)?)))
        .collect()
}

fn check_four(p: [f64; 4]) -> Result<()> {
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 || p.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidParams(format!("p(j|c) must be a probability vector, got {p:?}")));
    }
    if (p[0] - p[1]).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "p(0|c) and p(1|c) must agree, got {} and {}",
            p[0], p[1]
        )));
    }
    Ok(())
}

/// Average data-line clicks of a length-`k` block in the four-state
/// protocol, by recursion over `k`.
pub fn p_click_four_state(k: usize, p_given_c: [f64; 4]) -> Result<f64> {
    check_four(p_given_c)?;
    if k < 2 {
        return Err(Error::InvalidParams(format!("block length must be at least 2, got {k}")));
    }
    let [p0, _, p2, p3] = p_given_c;
    let pcc = 1.0 - p3;
    let mut v = 2.0 * p0 * (1.0 - p2);
    for j in 3..=k {
        let jf = j as f64;
        let pj = p2.powi(j as i32 - 1);
        v = 2.0 * p0 * (1.0 - pj) + (jf - 2.0 + (1.0 - jf) * p2 + pj) * pcc + p2 * v;
    }
    Ok(v)
}

/// Closed form of [`p_click_four_state`]. Singular at `p(2|c) = 0`.
pub fn p_click_four_state_closed(k: usize, p_given_c: [f64; 4]) -> Result<f64> {
    check_four(p_given_c)?;
    let [p0, _, p2, p3] = p_given_c;
    if !(p2 > 0.0 && p2 < 1.0) {
        return Err(Error::InvalidParams(format!("closed form needs 0 < p(2|c) < 1, got {p2}")));
    }
    let kf = k as f64;
    let pcc = 1.0 - p3;
    let pk = p2.powi(k as i32);
    Ok((-2.0 * p0 * p2
        + pk * (2.0 * p2 * (p0 - pcc) - kf * (p2 - 1.0) * (2.0 * p0 - pcc))
        + (2.0 + kf * (p2 - 1.0)) * p2 * pcc)
        / (p2 * (p2 - 1.0)))
}

/// Unconstrained attack on the four-state protocol.
pub fn four_state_gain_zero(params: &ExperimentalParams) -> Result<AttackResult> {
    params.validate()?;
    let (fd, fv) = params.four_state_priors()?;
    let usd = four_state_usd(params.mu, fd, fv)?;
    let pg = usd.p_given_c;
    // Solver noise can leave p(0|c) and p(1|c) a hair apart.
    let key = (pg[0] + pg[1]) / 2.0;
    let total = 2.0 * key + pg[2] + pg[3];
    let pg = [key / total, key / total, pg[2] / total, pg[3] / total];
    let mut per_block = Vec::with_capacity(params.m_max - 1);
    for k in 2..=params.m_max {
        per_block.push(p_click_four_state(k, pg)?);
    }
    let g = gain_zero(usd.p_c, params.m_max, |k| per_block[k - 2]);
    Ok(AttackResult {
        g_zero: g,
        g_zero_coin: None,
        g_zero_decoy: None,
        witness: AttackConfig {
            protocol: Protocol::FourState,
            resend: Resend::HighIntensity,
            gammas: vec![1.0; params.m_max - 1],
            zeta: None,
            p_c: usd.p_c,
            p_given_c: pg,
        },
    })
}
