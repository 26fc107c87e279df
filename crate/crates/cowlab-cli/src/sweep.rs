use std::path::Path;
use std::time::Instant;

use clap::ValueEnum;
use cowlab_core::bounds::{compare_coincidence, compare_decoy, mu_max, rate_curve_from, Variant};
use rayon::prelude::*;
use serde_json::json;

use crate::config;
use crate::output::{emit, log10_or_nan, num, Run, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    Fig6,
    Fig8,
    Fig9,
    Fig11,
}

impl FigureId {
    fn key(self) -> &'static str {
        match self {
            FigureId::Fig6 => "fig6",
            FigureId::Fig8 => "fig8",
            FigureId::Fig9 => "fig9",
            FigureId::Fig11 => "fig11",
        }
    }
}

/// Evenly spaced points from `lo:hi:n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::Config(format!("grid '{spec}': {why}; expected lo:hi:n"));
        let parts: Vec<&str> = spec.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else {
            return Err(bad("need three fields"));
        };
        let lo: f64 = lo.trim().parse().map_err(|_| bad("lo is not a number"))?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad("hi is not a number"))?;
        let n: usize = n.trim().parse().map_err(|_| bad("n is not a count"))?;
        if n == 0 {
            return Err(bad("empty grid"));
        }
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(bad("need finite lo <= hi"));
        }
        if n == 1 && lo != hi {
            return Err(bad("a single point needs lo == hi"));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.lo + step * i as f64).collect()
    }
}

pub fn run(figure: FigureId, config_path: &Path, grid: &Grid, out: Option<&Path>) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = config::load(config_path)?;
    let params = *cfg.single()?;
    cfg.require_protocol(figure == FigureId::Fig11)?;
    let xs = grid.points();
    let command = format!("sweep {}", figure.key());
    let mut metadata = json!({ "figure": figure.key(), "grid": { "lo": grid.lo, "hi": grid.hi, "n": grid.n } });

    let table = match figure {
        FigureId::Fig6 | FigureId::Fig8 => {
            let compare = if figure == FigureId::Fig6 { compare_coincidence } else { compare_decoy };
            let rows = xs
                .par_iter()
                .map(|&lg| {
                    let (a, h) = match compare(&params, 10f64.powf(lg)) {
                        Ok(c) => (log10_or_nan(c.attack), log10_or_nan(c.honest)),
                        Err(_) => (f64::NAN, f64::NAN),
                    };
                    vec![num(lg), num(a), num(h)]
                })
                .collect();
            let header = if figure == FigureId::Fig6 {
                vec!["log10_g_zero", "log10_min_g_coin", "log10_honest_g_coin"]
            } else {
                vec!["log10_g_zero", "log10_max_ratio", "log10_honest_ratio"]
            };
            Table { header, rows }
        }
        FigureId::Fig9 | FigureId::Fig11 => {
            let variant = if figure == FigureId::Fig9 { Variant::DecoyRate } else { Variant::FourState };
            let mus = xs
                .par_iter()
                .map(|&le| {
                    let eta = 10f64.powf(le);
                    mu_max(&params, eta, variant).map(|m| (eta, m))
                })
                .collect::<cowlab_core::Result<Vec<_>>>()
                .map_err(|e| CliError::Failure(e.to_string()))?;
            if mus.len() < 2 {
                return Err(CliError::Config("fig9 and fig11 need at least two grid points".into()));
            }
            let curve = rate_curve_from(&params, mus, variant).map_err(|e| CliError::Failure(e.to_string()))?;
            eprintln!(
                "fitted exponent {:.4} over grid indices {}..={}",
                curve.exponent, curve.fit_window.0, curve.fit_window.1
            );
            metadata["exponent"] = json!(curve.exponent);
            metadata["fit_window"] = json!([curve.fit_window.0, curve.fit_window.1]);
            metadata["between_references"] = json!(curve.between_references());
            let rows = curve
                .points
                .iter()
                .map(|p| {
                    vec![
                        num(p.eta_channel.log10()),
                        num(log10_or_nan(p.r_upp)),
                        num(log10_or_nan(p.linear_reference)),
                        num(log10_or_nan(p.quadratic_reference)),
                    ]
                })
                .collect();
            Table { header: vec!["log10_eta", "log10_r_upp", "log10_linear_reference", "log10_quadratic_reference"], rows }
        }
    };
    emit(&table, out, Run { command: &command, config_digest: &cfg.digest, metadata, started })
}
