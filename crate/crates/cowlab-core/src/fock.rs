//! Bob's receiver in the Fock basis.
//!
//! [`FockSimulator`] propagates Eve's resent pulses through the receiver
//! optics photon by photon and reads off threshold-detector statistics. It is
//! the brute-force reference for the closed forms in [`closed_individual`]
//! and [`closed_double`], which the attack optimizers use.
//!
//! Receiver layout, per input time bin `i`:
//! 1. loss splitter `eta_det` from `b_i` into the loss mode `e_i`
//! 2. data/monitor splitter `t_B`: `b_i` keeps the data-line part, the
//!    monitor part goes to `c_i`
//! 3. first 50/50 splitter of the delay-line interferometer; the long arm of
//!    bin 1 is the mode `d2` and the long arm of bin 2 is `m3`
//! 4. second 50/50 splitter mixing the short arm of bin `j` with the long
//!    arm of bin `j-1`, giving the output ports `c_j` (dark for equal-phase
//!    neighbours) and `d_j`
//!
//! With this convention two adjacent pulses of equal amplitude never reach
//! `c2`: their monitor light lands in `c1`, `d1`, `d2` and `m3` only.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::{Error, Result};

pub const DEFAULT_CUTOFF: usize = 5;

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
}

impl PhotonDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParams("empty photon distribution".into()));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParams("photon probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParams(format!(
                "photon probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    /// All weight on `n` photons.
    pub fn number(n: usize) -> Self {
        let mut probs = vec![0.0; n + 1];
        probs[n] = 1.0;
        Self { probs }
    }

    pub fn vacuum() -> Self {
        Self::number(0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Largest photon number carrying nonzero weight.
    pub fn max_photons(&self) -> usize {
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    /// `sum_n p_n * base^n`.
    pub fn moment(&self, base: f64) -> f64 {
        self.probs.iter().enumerate().map(|(n, p)| p * base.powi(n as i32)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamsplitterConvention {
    /// `a -> sqrt(t) a + sqrt(r) b`, `b -> -sqrt(r) a + sqrt(t) b`.
    Real,
    /// `a -> sqrt(t) a + i sqrt(r) b`, `b -> i sqrt(r) a + sqrt(t) b`.
    Symmetric,
}

/// Pure state over labelled bosonic modes, stored sparsely by occupation.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    modes: Vec<String>,
    cutoff: usize,
    amplitudes: BTreeMap<Vec<u8>, Complex64>,
}

impl FockState {
    pub fn vacuum(modes: &[&str], cutoff: usize) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(vec![0; modes.len()], Complex64::new(1.0, 0.0));
        Self { modes: modes.iter().map(|m| m.to_string()).collect(), cutoff, amplitudes }
    }

    /// `sum_n amps[n] |n>` in `mode`, vacuum elsewhere.
    pub fn number_superposition(
        modes: &[&str],
        cutoff: usize,
        mode: &str,
        amps: &[Complex64],
    ) -> Result<Self> {
        let mut s = Self::vacuum(modes, cutoff);
        let k = s.mode_index(mode)?;
        s.amplitudes.clear();
        for (n, &a) in amps.iter().enumerate() {
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            if n > cutoff {
                return Err(Error::CutoffExceeded { photons: n, cutoff });
            }
            let mut occ = vec![0u8; modes.len()];
            occ[k] = n as u8;
            s.amplitudes.insert(occ, a);
        }
        Ok(s)
    }

    /// State with the given occupation amplitudes. Repeated occupations add.
    pub fn from_amplitudes(
        modes: &[&str],
        cutoff: usize,
        terms: &[(Vec<u8>, Complex64)],
    ) -> Result<Self> {
        let mut amplitudes: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        for (occ, a) in terms {
            if occ.len() != modes.len() {
                return Err(Error::InvalidParams(format!(
                    "occupation {occ:?} does not match {} modes",
                    modes.len()
                )));
            }
            let photons: usize = occ.iter().map(|&n| n as usize).sum();
            if photons > cutoff {
                return Err(Error::CutoffExceeded { photons, cutoff });
            }
            *amplitudes.entry(occ.clone()).or_default() += a;
        }
        Ok(Self { modes: modes.iter().map(|m| m.to_string()).collect(), cutoff, amplitudes })
    }

    pub fn modes(&self) -> &[String] {
        &self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn mode_index(&self, label: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = (&[u8], Complex64)> {
        self.amplitudes.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn amplitude(&self, occupation: &[u8]) -> Complex64 {
        self.amplitudes.get(occupation).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Total probability of the basis states selected by `event`.
    pub fn probability<F>(&self, event: F) -> f64
    where
        F: Fn(&[u8]) -> bool,
    {
        self.amplitudes
            .iter()
            .filter(|(occ, _)| event(occ))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Mixes `mode_a` and `mode_b`; `transmittance` is the probability that
    /// a photon in `mode_a` stays there.
    pub fn apply_beamsplitter(
        &self,
        mode_a: &str,
        mode_b: &str,
        transmittance: f64,
        convention: BeamsplitterConvention,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmittance) {
            return Err(Error::InvalidParams(format!(
                "transmittance must lie in [0, 1], got {transmittance}"
            )));
        }
        let ia = self.mode_index(mode_a)?;
        let ib = self.mode_index(mode_b)?;
        if ia == ib {
            return Err(Error::InvalidParams("beamsplitter needs two distinct modes".into()));
        }
        let st = Complex64::new(transmittance.sqrt(), 0.0);
        let sr = (1.0 - transmittance).sqrt();
        let (u01, u10) = match convention {
            BeamsplitterConvention::Real => (Complex64::new(sr, 0.0), Complex64::new(-sr, 0.0)),
            BeamsplitterConvention::Symmetric => {
                (Complex64::new(0.0, sr), Complex64::new(0.0, sr))
            }
        };
        let (u00, u11) = (st, st);

        let mut out: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        for (occ, &amp) in &self.amplitudes {
            let na = occ[ia] as usize;
            let nb = occ[ib] as usize;
            let total = na + nb;
            if total > self.cutoff {
                return Err(Error::CutoffExceeded { photons: total, cutoff: self.cutoff });
            }
            let norm = (factorial(na) * factorial(nb)).sqrt();
            for k in 0..=na {
                let ca = binom(na, k) * u00.powu(k as u32) * u01.powu((na - k) as u32);
                if ca == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for l in 0..=nb {
                    let cb = binom(nb, l) * u10.powu(l as u32) * u11.powu((nb - l) as u32);
                    if cb == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let out_a = k + l;
                    let out_b = total - out_a;
                    let weight = (factorial(out_a) * factorial(out_b)).sqrt() / norm;
                    let mut key = occ.clone();
                    key[ia] = out_a as u8;
                    key[ib] = out_b as u8;
                    *out.entry(key).or_default() += amp * ca * cb * weight;
                }
            }
        }
        out.retain(|_, a| a.norm_sqr() > 0.0);
        Ok(Self { modes: self.modes.clone(), cutoff: self.cutoff, amplitudes: out })
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binom(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Detection statistics of one resent pulse (or pulse pair).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseStats {
    /// Average number of data-line clicks.
    pub p_click: f64,
    /// Average number of data/monitor coincidences.
    pub p_coin: f64,
    /// Pattern breakdown, present for double pulses only.
    pub double: Option<DoubleBreakdown>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoubleBreakdown {
    pub single_click: f64,
    pub double_click: f64,
    pub single_coin: f64,
    pub double_coin: f64,
    /// Probabilities of the six patterns with a coincidence in exactly one
    /// bin, ordered as `(b1 M1 !b2 !M2)`, `(b1 M1 b2 !M2)`, `(b1 M1 !b2 M2)`,
    /// `(!b1 !M1 b2 M2)`, `(b1 !M1 b2 M2)`, `(!b1 M1 b2 M2)`. `M_i` is a click
    /// on either monitor detector in bin `i`.
    pub coin_patterns: [f64; 6],
}

const MODES: [&str; 9] = ["b1", "b2", "e1", "e2", "c1", "c2", "d1", "d2", "m3"];
const B1: usize = 0;
const B2: usize = 1;
const C1: usize = 4;
const C2: usize = 5;
const D1: usize = 6;
const D2: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSimulator {
    pub cutoff: usize,
}

impl Default for FockSimulator {
    fn default() -> Self {
        Self { cutoff: DEFAULT_CUTOFF }
    }
}

impl FockSimulator {
    pub fn new(cutoff: usize) -> Self {
        Self { cutoff }
    }

    pub fn mode_labels() -> &'static [&'static str] {
        &MODES
    }

    fn input(&self, dist: &PhotonDistribution) -> Result<FockState> {
        if dist.max_photons() > self.cutoff {
            return Err(Error::CutoffExceeded { photons: dist.max_photons(), cutoff: self.cutoff });
        }
        let amps: Vec<Complex64> =
            dist.probs().iter().map(|&p| Complex64::new(p.sqrt(), 0.0)).collect();
        FockState::number_superposition(&MODES, self.cutoff, "b1", &amps)
    }

    /// Runs the receiver optics on a state over [`Self::mode_labels`] whose
    /// input light sits in `b1` and `b2`.
    pub fn receiver(&self, state: &FockState, t_b: f64, eta_det: f64) -> Result<FockState> {
        use BeamsplitterConvention::Real;
        let mut s = state.clone();
        for (b, e) in [("b1", "e1"), ("b2", "e2")] {
            s = s.apply_beamsplitter(b, e, eta_det, Real)?;
        }
        for (b, c) in [("b1", "c1"), ("b2", "c2")] {
            s = s.apply_beamsplitter(b, c, t_b, Real)?;
        }
        s = s.apply_beamsplitter("c1", "d2", 0.5, Real)?;
        s = s.apply_beamsplitter("c2", "m3", 0.5, Real)?;
        s = s.apply_beamsplitter("c1", "d1", 0.5, Real)?;
        s = s.apply_beamsplitter("c2", "d2", 0.5, Real)?;
        Ok(s)
    }

    pub fn individual(&self, dist: &PhotonDistribution, t_b: f64, eta_det: f64) -> Result<PulseStats> {
        check_optics(t_b, eta_det)?;
        let out = self.receiver(&self.input(dist)?, t_b, eta_det)?;
        let ev = Events::new(&out);
        Ok(PulseStats {
            p_click: ev.prob(|o| o.b1) + ev.prob(|o| o.b2),
            p_coin: ev.prob(|o| o.b1 && o.m1) + ev.prob(|o| o.b2 && o.m2),
            double: None,
        })
    }

    pub fn double(&self, dist: &PhotonDistribution, t_b: f64, eta_det: f64) -> Result<PulseStats> {
        check_optics(t_b, eta_det)?;
        // A 50/50 split of b1 into b2 prepares (b1 + b2)^n / sqrt(2^n n!).
        let input = self.input(dist)?.apply_beamsplitter(
            "b1",
            "b2",
            0.5,
            BeamsplitterConvention::Real,
        )?;
        let out = self.receiver(&input, t_b, eta_det)?;
        let ev = Events::new(&out);

        let single_click = ev.prob(|o| o.b1 != o.b2);
        let double_click = ev.prob(|o| o.b1 && o.b2);
        let coin1 = |o: &Outcome| o.b1 && o.m1;
        let coin2 = |o: &Outcome| o.b2 && o.m2;
        let single_coin = ev.prob(|o| coin1(o) != coin2(o));
        let double_coin = ev.prob(|o| coin1(o) && coin2(o));
        let coin_patterns = [
            ev.prob(|o| o.b1 && o.m1 && !o.b2 && !o.m2),
            ev.prob(|o| o.b1 && o.m1 && o.b2 && !o.m2),
            ev.prob(|o| o.b1 && o.m1 && !o.b2 && o.m2),
            ev.prob(|o| !o.b1 && !o.m1 && o.b2 && o.m2),
            ev.prob(|o| o.b1 && !o.m1 && o.b2 && o.m2),
            ev.prob(|o| !o.b1 && o.m1 && o.b2 && o.m2),
        ];
        Ok(PulseStats {
            p_click: single_click + 2.0 * double_click,
            p_coin: single_coin + 2.0 * double_coin,
            double: Some(DoubleBreakdown {
                single_click,
                double_click,
                single_coin,
                double_coin,
                coin_patterns,
            }),
        })
    }
}

fn check_optics(t_b: f64, eta_det: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t_b) || !(0.0..=1.0).contains(&eta_det) {
        return Err(Error::InvalidParams(format!(
            "t_B and eta_det must lie in [0, 1], got {t_b} and {eta_det}"
        )));
    }
    Ok(())
}

/// Threshold-detector outcome for the two relevant time bins.
struct Outcome {
    b1: bool,
    b2: bool,
    m1: bool,
    m2: bool,
}

struct Events(Vec<(Outcome, f64)>);

impl Events {
    fn new(state: &FockState) -> Self {
        Self(
            state
                .amplitudes()
                .map(|(o, a)| {
                    let out = Outcome {
                        b1: o[B1] > 0,
                        b2: o[B2] > 0,
                        m1: o[C1] + o[D1] > 0,
                        m2: o[C2] + o[D2] > 0,
                    };
                    (out, a.norm_sqr())
                })
                .collect(),
        )
    }

    fn prob<F: Fn(&Outcome) -> bool>(&self, event: F) -> f64 {
        self.0.iter().filter(|(o, _)| event(o)).map(|(_, p)| p).sum()
    }
}

pub fn simulate_individual(dist: &PhotonDistribution, t_b: f64, eta_det: f64) -> Result<PulseStats> {
    FockSimulator::default().individual(dist, t_b, eta_det)
}

pub fn simulate_double(dist: &PhotonDistribution, t_b: f64, eta_det: f64) -> Result<PulseStats> {
    FockSimulator::default().double(dist, t_b, eta_det)
}

pub fn closed_individual(dist: &PhotonDistribution, t_b: f64, eta_det: f64) -> PulseStats {
    let e = eta_det;
    let g = |x: f64| dist.moment(1.0 - x);
    let p_click = 1.0 - g(t_b * e);
    let p_coin = 1.0 - (g((1.0 - t_b) * e / 2.0) + g(e * t_b) - g((1.0 + t_b) * e / 2.0));
    PulseStats { p_click, p_coin, double: None }
}

pub fn closed_double(dist: &PhotonDistribution, t_b: f64, eta_det: f64) -> PulseStats {
    let (e, t) = (eta_det, t_b);
    // Each term is sum_n p_n (1 - x)^n for the loss fraction x.
    let g = |x: f64| dist.moment(1.0 - x);
    let half = g(e / 2.0);
    let data_half = g(t * e / 2.0);
    let data = g(t * e);
    let a = g((3.0 - t) * e / 4.0);
    let bq = g((1.0 + t) * e / 2.0);
    let cq = g((3.0 + t) * e / 4.0);
    let dq = g((1.0 + t) * e / 4.0);
    let eq = g((1.0 + 3.0 * t) * e / 4.0);
    let fq = g((1.0 - t) * e / 2.0);
    let hq = g(3.0 * (1.0 - t) * e / 4.0);
    let iq = g((1.0 - t) * e / 4.0);

    let single_click = 2.0 * (data_half - data);
    let double_click = 1.0 - (2.0 * data_half - data);
    let p_click = 2.0 * (1.0 - data_half);

    let coin_patterns = [
        half - a - bq + cq,
        fq - 2.0 * half - hq + 2.0 * a + bq - cq,
        data_half - half - dq + a - data + bq + eq - cq,
        dq - a - eq + cq,
        iq - hq - 2.0 * dq + 2.0 * a + eq - cq,
        data_half - half - dq + a - data + bq + eq - cq,
    ];
    let single_coin = -3.0 * half + 4.0 * a + 2.0 * bq - 2.0 * cq - 3.0 * dq + 2.0 * eq + fq
        - 2.0 * hq
        + 2.0 * data_half
        - 2.0 * data
        + iq;
    let double_coin = 1.0 + 2.0 * half - 2.0 * a - bq + cq + 2.0 * dq - eq - fq + hq
        - 2.0 * data_half
        + data
        - iq;
    let p_coin = 2.0 + half - 2.0 * data_half + dq - fq - iq;

    PulseStats {
        p_click,
        p_coin,
        double: Some(DoubleBreakdown {
            single_click,
            double_click,
            single_coin,
            double_coin,
            coin_patterns,
        }),
    }
}
