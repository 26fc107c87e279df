//! Experiment constants, the loss channel and honest-party statistics.
//!
//! All honest statistics take the system transmittance `eta_sys` explicitly.
//! Callers choose whether it includes the detector efficiency
//! (`eta_channel * eta_det`) or not (upper bounds assume ideal detectors).

use serde::{Deserialize, Serialize};

use crate::optim::find_root;
use crate::{Error, Result};

pub const DEFAULT_M_MAX: usize = 10;

/// Tolerance used when checking `f_d + f_v == f`.
const PRIOR_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentalParams {
    /// Mean photon number of a non-vacuum pulse, `|alpha|^2`.
    pub mu: f64,
    /// Probability of emitting a decoy signal. In the four-state protocol
    /// this is the total of `f_d` and `f_v`.
    pub f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_v: Option<f64>,
    #[serde(rename = "t_B")]
    pub t_b: f64,
    pub eta_det: f64,
    #[serde(rename = "alpha_channel_db_per_km")]
    pub alpha_channel: f64,
    #[serde(default = "default_m_max")]
    pub m_max: usize,
}

fn default_m_max() -> usize {
    DEFAULT_M_MAX
}

impl ExperimentalParams {
    pub fn three_state(mu: f64, f: f64, t_b: f64, eta_det: f64, alpha_channel: f64) -> Result<Self> {
        let p = Self {
            mu,
            f,
            f_d: None,
            f_v: None,
            t_b,
            eta_det,
            alpha_channel,
            m_max: DEFAULT_M_MAX,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn four_state(
        mu: f64,
        f_d: f64,
        f_v: f64,
        t_b: f64,
        eta_det: f64,
        alpha_channel: f64,
    ) -> Result<Self> {
        let p = Self {
            mu,
            f: f_d + f_v,
            f_d: Some(f_d),
            f_v: Some(f_v),
            t_b,
            eta_det,
            alpha_channel,
            m_max: DEFAULT_M_MAX,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_m_max(mut self, m_max: usize) -> Result<Self> {
        self.m_max = m_max;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.f > 0.0 && self.f < 1.0) {
            return bad(format!("f must lie in (0, 1), got {}", self.f));
        }
        if !(self.t_b > 0.0 && self.t_b <= 1.0) {
            return bad(format!("t_B must lie in (0, 1], got {}", self.t_b));
        }
        if !(self.eta_det > 0.0 && self.eta_det <= 1.0) {
            return bad(format!("eta_det must lie in (0, 1], got {}", self.eta_det));
        }
        if !(self.alpha_channel >= 0.0 && self.alpha_channel.is_finite()) {
            return bad(format!(
                "alpha_channel_db_per_km must be nonnegative, got {}",
                self.alpha_channel
            ));
        }
        if self.m_max < 2 {
            return bad(format!("m_max must be at least 2, got {}", self.m_max));
        }
        match (self.f_d, self.f_v) {
            (None, None) => Ok(()),
            (Some(fd), Some(fv)) => {
                if !(fd > 0.0 && fv > 0.0) {
                    return bad(format!("f_d and f_v must be positive, got {fd} and {fv}"));
                }
                if (fd + fv - self.f).abs() > PRIOR_SUM_TOL {
                    return bad(format!("f_d + f_v = {} does not match f = {}", fd + fv, self.f));
                }
                Ok(())
            }
            _ => bad("f_d and f_v must be given together".into()),
        }
    }

    pub fn is_four_state(&self) -> bool {
        self.f_d.is_some() && self.f_v.is_some()
    }

    /// `(f_d, f_v)` for the four-state protocol.
    pub fn four_state_priors(&self) -> Result<(f64, f64)> {
        match (self.f_d, self.f_v) {
            (Some(fd), Some(fv)) => Ok((fd, fv)),
            _ => Err(Error::InvalidParams(
                "four-state priors f_d and f_v are not set".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelPoint {
    pub length_km: f64,
    pub eta_channel: f64,
    pub eta_sys: f64,
}

impl ChannelPoint {
    pub fn attenuation_db(&self) -> f64 {
        -10.0 * self.eta_channel.log10()
    }
}

pub fn channel_point(params: &ExperimentalParams, length_km: f64) -> Result<ChannelPoint> {
    if !(length_km >= 0.0 && length_km.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "length must be nonnegative, got {length_km}"
        )));
    }
    let eta_channel = 10f64.powf(-params.alpha_channel * length_km / 10.0);
    Ok(ChannelPoint {
        length_km,
        eta_channel,
        eta_sys: eta_channel * params.eta_det,
    })
}

/// `1 - exp(-x)` without cancellation for small `x`.
pub(crate) fn one_minus_exp(x: f64) -> f64 {
    -(-x).exp_m1()
}

fn check_eta(eta_sys: f64) {
    debug_assert!((0.0..=1.0).contains(&eta_sys), "eta_sys out of range: {eta_sys}");
}

pub fn expected_gain(params: &ExperimentalParams, eta_sys: f64) -> f64 {
    check_eta(eta_sys);
    let x = eta_sys * params.t_b * params.mu;
    (1.0 - params.f) * one_minus_exp(x) + params.f * one_minus_exp(2.0 * x)
}

pub fn expected_coincidence_rate(params: &ExperimentalParams, eta_sys: f64) -> f64 {
    check_eta(eta_sys);
    let f = params.f;
    let data = one_minus_exp(eta_sys * params.t_b * params.mu);
    let mon = eta_sys * (1.0 - params.t_b) * params.mu;
    data / 4.0
        * ((1.0 - f) * (3.0 + f) * one_minus_exp(mon / 2.0)
            + (1.0 + 6.0 * f + f * f) * one_minus_exp(mon))
}

pub fn expected_decoy_gain(params: &ExperimentalParams, eta_sys: f64) -> f64 {
    check_eta(eta_sys);
    params.f * one_minus_exp(2.0 * eta_sys * params.t_b * params.mu)
}

pub fn expected_gain_four_state(params: &ExperimentalParams, eta_sys: f64) -> Result<f64> {
    check_eta(eta_sys);
    let (fd, fv) = params.four_state_priors()?;
    let x = params.mu * params.t_b * eta_sys;
    Ok((1.0 - fd - fv) * one_minus_exp(x) + fd * one_minus_exp(2.0 * x))
}

/// Fiber length at which `gain_fn(eta_sys)` drops to `g_target`.
///
/// `gain_fn` must be increasing in `eta_sys`. The search runs on
/// `log10(eta_channel)` so that targets spanning many decades converge in a
/// fixed number of bisection steps.
pub fn distance_for_gain<F>(params: &ExperimentalParams, g_target: f64, gain_fn: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let g0 = gain_fn(params.eta_det);
    if !(g_target > 0.0 && g_target <= g0) {
        return Err(Error::OutOfRange { target: g_target, lo: 0.0, hi: g0 });
    }
    if g_target == g0 {
        return Ok(0.0);
    }
    if params.alpha_channel <= 0.0 {
        return Err(Error::InvalidParams(
            "a lossless channel has no distance scale".into(),
        ));
    }
    let gain_at = |log_eta: f64| gain_fn(params.eta_det * 10f64.powf(log_eta)) - g_target;
    let mut lo = -10.0;
    while gain_at(lo) > 0.0 {
        lo *= 2.0;
        if lo < -300.0 {
            return Err(Error::OutOfRange { target: g_target, lo: 0.0, hi: g0 });
        }
    }
    let root = find_root(gain_at, lo, 0.0, 1e-14)?;
    Ok((-10.0 * root.x / params.alpha_channel).max(0.0))
}

/// `distance_for_gain` with the three-state honest gain.
pub fn distance_for_three_state_gain(params: &ExperimentalParams, g_target: f64) -> Result<f64> {
    distance_for_gain(params, g_target, |eta| expected_gain(params, eta))
}
