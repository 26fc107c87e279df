#![allow(dead_code)]

use cowlab_core::params::ExperimentalParams;

/// The two experimental rows: `(mu, alpha_channel, eta_det)`.
pub const ROWS: [(f64, f64, f64); 2] = [(0.06, 0.1625, 0.22), (0.1, 0.168, 0.27)];
pub const F: f64 = 0.155;
pub const T_B: f64 = 0.9;
pub const F_D: f64 = 0.1;
pub const F_V: f64 = 0.055;

pub fn three_state(row: usize) -> ExperimentalParams {
    let (mu, a, e) = ROWS[row];
    ExperimentalParams::three_state(mu, F, T_B, e, a).unwrap()
}

pub fn four_state(row: usize) -> ExperimentalParams {
    let (mu, a, e) = ROWS[row];
    ExperimentalParams::four_state(mu, F_D, F_V, T_B, e, a).unwrap()
}

/// Exhaustive enumeration of resent blocks.
///
/// Signals in time order: 0 = (a, 0), 1 = (0, a), 2 = (a, a), 3 = (0, 0).
/// Eve resends every pulse from the first vacuum pulse of the block to the
/// last one and replaces the rest by vacuum.
pub mod blocks {
    pub fn pulses(s: usize) -> [bool; 2] {
        match s {
            0 => [true, false],
            1 => [false, true],
            2 => [true, true],
            3 => [false, false],
            _ => unreachable!(),
        }
    }

    #[derive(Debug, Default, Clone, Copy)]
    pub struct Tally {
        /// Signals with at least one resent non-vacuum pulse.
        pub clicks: f64,
        /// Decoy signals resent in full.
        pub decoy_clicks: f64,
        /// Resent non-vacuum runs of length one.
        pub individual: f64,
        /// Resent non-vacuum runs of length two.
        pub double: f64,
    }

    impl Tally {
        fn add(&mut self, o: &Tally, w: f64) {
            self.clicks += w * o.clicks;
            self.decoy_clicks += w * o.decoy_clicks;
            self.individual += w * o.individual;
            self.double += w * o.double;
        }
    }

    pub fn tally(seq: &[usize]) -> Tally {
        let light: Vec<bool> = seq.iter().flat_map(|&s| pulses(s)).collect();
        let mut t = Tally::default();
        let (Some(first), Some(last)) = (light.iter().position(|&l| !l), light.iter().rposition(|&l| !l))
        else {
            return t;
        };
        let resent: Vec<bool> = (0..light.len()).map(|i| i >= first && i <= last && light[i]).collect();
        for (j, &s) in seq.iter().enumerate() {
            let (a, b) = (resent[2 * j], resent[2 * j + 1]);
            if a || b {
                t.clicks += 1.0;
            }
            if s == 2 && a && b {
                t.decoy_clicks += 1.0;
            }
        }
        let mut run = 0;
        for &r in resent.iter().chain(std::iter::once(&false)) {
            if r {
                run += 1;
            } else {
                match run {
                    0 => {}
                    1 => t.individual += 1.0,
                    2 => t.double += 1.0,
                    // Longer runs need a resent decoy.
                    _ => {}
                }
                run = 0;
            }
        }
        t
    }

    /// Every length-`k` sequence over the signals with nonzero weight, with
    /// its probability.
    pub fn sequences(k: usize, probs: [f64; 4]) -> Vec<(Vec<usize>, f64)> {
        let mut out = vec![(Vec::new(), 1.0)];
        for _ in 0..k {
            let mut next = Vec::new();
            for (seq, w) in &out {
                for s in 0..4 {
                    if probs[s] > 0.0 {
                        let mut v = seq.clone();
                        v.push(s);
                        next.push((v, w * probs[s]));
                    }
                }
            }
            out = next;
        }
        out
    }

    pub fn expect(k: usize, probs: [f64; 4]) -> Tally {
        let mut t = Tally::default();
        for (seq, w) in sequences(k, probs) {
            t.add(&tally(&seq), w);
        }
        t
    }

    /// Average run counts over key-only blocks whose last signal is `i` and
    /// first signal is `j`.
    pub fn type_average(k: usize, i: usize, j: usize) -> (f64, f64) {
        let all = sequences(k, [0.5, 0.5, 0.0, 0.0]);
        let picked: Vec<_> = all.iter().filter(|(s, _)| s[k - 1] == i && s[0] == j).collect();
        let n = picked.len() as f64;
        let ind = picked.iter().map(|(s, _)| tally(s).individual).sum::<f64>() / n;
        let dbl = picked.iter().map(|(s, _)| tally(s).double).sum::<f64>() / n;
        (ind, dbl)
    }
}
