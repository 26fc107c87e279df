//! Where the attack statistics meet the honest ones: crossing points, the
//! distance `L_zero`, and the upper bound on the key rate.

use serde::Serialize;

use crate::attack::{
    baseline_gain_zero, four_state_gain_zero, maximize_decoy_rate, minimize_coincidences_default,
    AttackResult,
};
use crate::optim::find_root;
use crate::params::{
    channel_point, distance_for_gain, expected_coincidence_rate, expected_decoy_gain, expected_gain,
    expected_gain_four_state, ExperimentalParams,
};
use crate::{Error, Result};

/// `log10 G` range scanned for crossings.
pub const CROSSING_LOG10_RANGE: (f64, f64) = (-10.0, -1.0);
pub const CROSSING_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingResult {
    pub g_zero: f64,
    pub log10_g_zero: f64,
    pub attenuation_db: f64,
    pub l_zero_km: f64,
    pub eta_channel: f64,
    /// The attack-side statistic at the crossing.
    pub attack_value: f64,
    /// The honest-side statistic at the crossing.
    pub honest_value: f64,
    pub witness: AttackResult,
}

fn locate<G>(params: &ExperimentalParams, g: f64, honest_gain: G) -> Result<(f64, f64, f64)>
where
    G: Fn(f64) -> f64,
{
    let l = distance_for_gain(params, g, honest_gain)?;
    let cp = channel_point(params, l)?;
    Ok((l, cp.eta_channel, cp.eta_sys))
}

/// Honest gain as a function of `eta_sys` for either protocol.
fn honest_gain(params: &ExperimentalParams) -> impl Fn(f64) -> f64 + '_ {
    move |eta| {
        if params.is_four_state() {
            expected_gain_four_state(params, eta).unwrap_or(f64::NAN)
        } else {
            expected_gain(params, eta)
        }
    }
}

/// Largest `log10 G` in the scan range at which `diff` changes from
/// nonpositive (attack works) to positive (attack fails).
fn largest_crossing<D>(params: &ExperimentalParams, diff: D) -> Result<f64>
where
    D: Fn(f64) -> f64,
{
    let g_max = expected_gain(params, params.eta_det);
    let (lo, hi) = CROSSING_LOG10_RANGE;
    let step = (hi - lo) / (CROSSING_SAMPLES - 1) as f64;
    let grid: Vec<f64> = (0..CROSSING_SAMPLES)
        .map(|i| lo + step * i as f64)
        .filter(|&lg| 10f64.powf(lg) < g_max)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&lg| diff(lg)).collect();
    for i in (0..grid.len().saturating_sub(1)).rev() {
        if values[i] <= 0.0 && values[i + 1] > 0.0 {
            return Ok(find_root(&diff, grid[i], grid[i + 1], 1e-10)?.x);
        }
    }
    Err(Error::NoCrossing(format!(
        "attack and honest statistics do not cross for log10 G in [{lo}, {hi}]"
    )))
}

/// Attack-side and honest-side statistic at one total gain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub attack: f64,
    pub honest: f64,
    pub witness: AttackResult,
}

/// Minimal attack coincidence gain against the honest coincidence gain at
/// the distance where the honest gain equals `g`.
pub fn compare_coincidence(params: &ExperimentalParams, g: f64) -> Result<Comparison> {
    let (_, _, eta_sys) = locate(params, g, |eta| expected_gain(params, eta))?;
    let witness = minimize_coincidences_default(params, g)?;
    Ok(Comparison {
        attack: witness.g_zero_coin.unwrap_or(f64::NAN),
        honest: expected_coincidence_rate(params, eta_sys),
        witness,
    })
}

/// Largest attack ratio `G_zero_decoy / G_zero` against the honest
/// `G_decoy / G` at the distance where the honest gain equals `g`.
pub fn compare_decoy(params: &ExperimentalParams, g: f64) -> Result<Comparison> {
    let (_, _, eta_sys) = locate(params, g, |eta| expected_gain(params, eta))?;
    let witness = maximize_decoy_rate(params, g)?;
    Ok(Comparison {
        attack: witness.g_zero_decoy.unwrap_or(f64::NAN) / g,
        honest: expected_decoy_gain(params, eta_sys) / g,
        witness,
    })
}

/// Crossing of the minimal attack coincidence rate with the honest one.
pub fn crossing_coincidence(params: &ExperimentalParams) -> Result<CrossingResult> {
    params.validate()?;
    let diff = |lg: f64| match compare_coincidence(params, 10f64.powf(lg)) {
        Ok(c) => c.attack - c.honest,
        Err(_) => 1.0,
    };
    let lg = largest_crossing(params, diff)?;
    finish(params, lg, compare_coincidence(params, 10f64.powf(lg))?)
}

/// Crossing of the largest attack decoy ratio `G_zero_decoy / G_zero` with
/// the honest `G_decoy / G`.
pub fn crossing_decoy(params: &ExperimentalParams) -> Result<CrossingResult> {
    params.validate()?;
    let diff = |lg: f64| match compare_decoy(params, 10f64.powf(lg)) {
        Ok(c) => c.honest - c.attack,
        Err(_) => 1.0,
    };
    let lg = largest_crossing(params, diff)?;
    finish(params, lg, compare_decoy(params, 10f64.powf(lg))?)
}

fn finish(params: &ExperimentalParams, lg: f64, at: Comparison) -> Result<CrossingResult> {
    let g = 10f64.powf(lg);
    let (l, eta_channel, _) = locate(params, g, |eta| expected_gain(params, eta))?;
    Ok(CrossingResult {
        g_zero: g,
        log10_g_zero: lg,
        attenuation_db: -10.0 * eta_channel.log10(),
        l_zero_km: l,
        eta_channel,
        attack_value: at.attack,
        honest_value: at.honest,
        witness: at.witness,
    })
}

fn reach(params: &ExperimentalParams, witness: AttackResult) -> Result<CrossingResult> {
    let g = witness.g_zero;
    let gain = honest_gain(params);
    let (l, eta_channel, eta_sys) = locate(params, g, &gain)?;
    Ok(CrossingResult {
        g_zero: g,
        log10_g_zero: g.log10(),
        attenuation_db: -10.0 * eta_channel.log10(),
        l_zero_km: l,
        eta_channel,
        attack_value: g,
        honest_value: gain(eta_sys),
        witness,
    })
}

/// Distance at which the honest gain drops to the unconstrained
/// three-state attack gain.
pub fn baseline_reach(params: &ExperimentalParams) -> Result<CrossingResult> {
    reach(params, baseline_gain_zero(params)?)
}

/// Distance at which the honest four-state gain drops to the attack gain.
pub fn four_state_reach(params: &ExperimentalParams) -> Result<CrossingResult> {
    params.four_state_priors()?;
    reach(params, four_state_gain_zero(params)?)
}

/// Countermeasure assumed when bounding the key rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variant {
    /// Three-state protocol with decoy detection-rate monitoring.
    DecoyRate,
    FourState,
}

pub const MU_SEARCH_START: f64 = 1e-6;
pub const MU_SEARCH_CAP: f64 = 20.0;
const MU_SCAN_FACTOR: f64 = 1.5;
const MU_BISECTIONS: usize = 40;

/// Whether the honest statistics at intensity `mu` and channel
/// transmittance `eta` rule out the zero-error attack. Detectors are ideal.
pub fn attack_excluded(f_params: &ExperimentalParams, mu: f64, eta: f64, variant: Variant) -> Result<bool> {
    let p = ExperimentalParams { mu, eta_det: 1.0, ..*f_params };
    match variant {
        Variant::DecoyRate => {
            let g = expected_gain(&p, eta);
            let honest = expected_decoy_gain(&p, eta) / g;
            match maximize_decoy_rate(&p, g) {
                Ok(a) => Ok(a.g_zero_decoy.unwrap_or(0.0) / g < honest),
                Err(Error::Infeasible) => Ok(true),
                Err(e) => Err(e),
            }
        }
        Variant::FourState => {
            let g = expected_gain_four_state(&p, eta)?;
            Ok(g > four_state_gain_zero(&p)?.g_zero)
        }
    }
}

/// Largest intensity at which the attack is excluded.
pub fn mu_max(f_params: &ExperimentalParams, eta_channel: f64, variant: Variant) -> Result<f64> {
    if !(eta_channel > 0.0 && eta_channel <= 1.0) {
        return Err(Error::InvalidParams(format!("eta_channel must lie in (0, 1], got {eta_channel}")));
    }
    let safe = |mu: f64| attack_excluded(f_params, mu, eta_channel, variant);
    if !safe(MU_SEARCH_START)? {
        return Err(Error::NoCrossing(format!(
            "attack not excluded even at mu = {MU_SEARCH_START}"
        )));
    }
    let mut a = MU_SEARCH_START;
    loop {
        let next = a * MU_SCAN_FACTOR;
        if next > MU_SEARCH_CAP {
            return if safe(MU_SEARCH_CAP)? { Ok(MU_SEARCH_CAP) } else { bisect(a, MU_SEARCH_CAP, safe) };
        }
        if !safe(next)? {
            return bisect(a, next, safe);
        }
        a = next;
    }
}

fn bisect<S>(mut a: f64, mut b: f64, safe: S) -> Result<f64>
where
    S: Fn(f64) -> Result<bool>,
{
    for _ in 0..MU_BISECTIONS {
        let m = (a * b).sqrt();
        if safe(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub eta_channel: f64,
    pub mu_max: f64,
    pub r_upp: f64,
    /// Linear scaling through the anchor point.
    pub linear_reference: f64,
    /// Quadratic scaling through the anchor point.
    pub quadratic_reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCurve {
    pub variant: Variant,
    /// Sorted by increasing `eta_channel`.
    pub points: Vec<RatePoint>,
    /// Least-squares slope of `log10 r_upp` against `log10 eta_channel`.
    pub exponent: f64,
    /// Inclusive index range of `points` used for the fit.
    pub fit_window: (usize, usize),
}

impl RateCurve {
    /// Whether every fitted point other than the anchor lies strictly between
    /// the quadratic and linear references.
    pub fn between_references(&self) -> bool {
        let (lo, hi) = self.fit_window;
        let anchor = self.points.len() - 1;
        self.points[lo..=hi]
            .iter()
            .enumerate()
            .filter(|(i, _)| lo + i != anchor)
            .all(|(_, p)| p.quadratic_reference < p.r_upp && p.r_upp < p.linear_reference)
    }
}

/// `n` points with `log10 eta` evenly spaced on `[lo, hi]`.
pub fn log_eta_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![10f64.powf(lo)];
    }
    (0..n).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
}

/// Grid used for the scaling fit: 11 points over `log10 eta` in `[-7, -3]`.
pub fn default_eta_grid() -> Vec<f64> {
    log_eta_grid(-7.0, -3.0, 11)
}

/// Indices of the central 60% of `n` sorted grid points.
pub fn fit_window(n: usize) -> (usize, usize) {
    let span = (n.max(1) - 1) as f64;
    ((0.2 * span).round() as usize, (0.8 * span).round() as usize)
}

/// Key-rate prefactor `(1 - f)` or `(1 - f_d - f_v)`.
pub fn key_prior(f_params: &ExperimentalParams, variant: Variant) -> Result<f64> {
    match variant {
        Variant::DecoyRate => Ok(1.0 - f_params.f),
        Variant::FourState => {
            let (fd, fv) = f_params.four_state_priors()?;
            Ok(1.0 - fd - fv)
        }
    }
}

/// Assembles a curve from precomputed `(eta_channel, mu_max)` pairs.
pub fn rate_curve_from(f_params: &ExperimentalParams, mut mus: Vec<(f64, f64)>, variant: Variant) -> Result<RateCurve> {
    if mus.len() < 2 {
        return Err(Error::InvalidParams("rate curve needs at least two grid points".into()));
    }
    let prior = key_prior(f_params, variant)?;
    mus.sort_by(|a, b| a.0.total_cmp(&b.0));
    let &(eta_a, mu_a) = mus.last().expect("nonempty");
    let r_a = prior * eta_a * mu_a;
    let points: Vec<RatePoint> = mus
        .iter()
        .map(|&(eta, mu)| {
            let s = eta / eta_a;
            RatePoint {
                eta_channel: eta,
                mu_max: mu,
                r_upp: prior * eta * mu,
                linear_reference: r_a * s,
                quadratic_reference: r_a * s * s,
            }
        })
        .collect();
    let (lo, hi) = fit_window(points.len());
    let xs: Vec<f64> = points[lo..=hi].iter().map(|p| p.eta_channel.log10()).collect();
    let ys: Vec<f64> = points[lo..=hi].iter().map(|p| p.r_upp.log10()).collect();
    let exponent = slope(&xs, &ys);
    Ok(RateCurve { variant, points, exponent, fit_window: (lo, hi) })
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Upper bound `R_upp = prior * eta * mu_max(eta)` over a grid, with the
/// scaling exponent fitted on the central part of the grid.
pub fn upper_bound_curve(f_params: &ExperimentalParams, eta_grid: &[f64], variant: Variant) -> Result<RateCurve> {
    let mus = eta_grid
        .iter()
        .map(|&eta| Ok((eta, mu_max(f_params, eta, variant)?)))
        .collect::<Result<Vec<_>>>()?;
    rate_curve_from(f_params, mus, variant)
}
