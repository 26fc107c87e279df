use clap::ValueEnum;
use cowlab_core::attack::{
    p_click_decoy, p_click_decoy_recursive, p_click_four_state, p_click_four_state_closed, p_click_three_state,
};
use cowlab_core::fock::{closed_double, closed_individual, simulate_double, simulate_individual, PhotonDistribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::CliError;

pub const TOLERANCE: f64 = 1e-10;
const FAULT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    FockIndividual,
    FockDouble,
    FourStateRecursion,
    DecoyRecursion,
    ThreeStateLimit,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::FockIndividual => "fock_individual",
            Family::FockDouble => "fock_double",
            Family::FourStateRecursion => "four_state_recursion",
            Family::DecoyRecursion => "decoy_recursion",
            Family::ThreeStateLimit => "three_state_limit",
        }
    }
}

const FAMILIES: [Family; 5] = [
    Family::FockIndividual,
    Family::FockDouble,
    Family::FourStateRecursion,
    Family::DecoyRecursion,
    Family::ThreeStateLimit,
];

struct Worst {
    deviation: f64,
    case: Value,
}

fn random_distribution(rng: &mut ChaCha8Rng) -> PhotonDistribution {
    let support = rng.random_range(1..=5usize);
    let w: Vec<f64> = (0..=support).map(|_| rng.random::<f64>()).collect();
    let s: f64 = w.iter().sum();
    PhotonDistribution::new(w.iter().map(|x| x / s).collect()).expect("normalized weights")
}

fn random_given_c(rng: &mut ChaCha8Rng) -> [f64; 4] {
    let key: f64 = rng.random_range(0.05..1.0);
    let dec: f64 = rng.random_range(0.01..1.0);
    let vac: f64 = rng.random_range(0.0..1.0);
    let t = 2.0 * key + dec + vac;
    [key / t, key / t, dec / t, vac / t]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Largest deviation of one case and its description.
fn case(family: Family, rng: &mut ChaCha8Rng, fault: f64) -> Result<(f64, Value), CliError> {
    let sim_err = |e: cowlab_core::Error| CliError::Failure(e.to_string());
    Ok(match family {
        Family::FockIndividual | Family::FockDouble => {
            let d = random_distribution(rng);
            let t_b = rng.random_range(0.05..=1.0);
            let eta = rng.random_range(0.05..=1.0);
            let (mut closed, simulated) = if family == Family::FockIndividual {
                (closed_individual(&d, t_b, eta), simulate_individual(&d, t_b, eta).map_err(sim_err)?)
            } else {
                (closed_double(&d, t_b, eta), simulate_double(&d, t_b, eta).map_err(sim_err)?)
            };
            closed.p_click += fault;
            let mut dev = (closed.p_click - simulated.p_click).abs().max((closed.p_coin - simulated.p_coin).abs());
            if let (Some(a), Some(b)) = (closed.double, simulated.double) {
                let parts = [
                    (a.single_click, b.single_click),
                    (a.double_click, b.double_click),
                    (a.single_coin, b.single_coin),
                    (a.double_coin, b.double_coin),
                ];
                for (x, y) in parts.into_iter().chain(a.coin_patterns.into_iter().zip(b.coin_patterns)) {
                    dev = dev.max((x - y).abs());
                }
            }
            let c = json!({ "distribution": d.probs(), "t_B": t_b, "eta_det": eta,
                            "closed": closed.p_click, "simulated": simulated.p_click });
            (dev, c)
        }
        Family::FourStateRecursion => {
            let p = random_given_c(rng);
            let k = rng.random_range(2..=20usize);
            let r = p_click_four_state(k, p).map_err(sim_err)?;
            let c = p_click_four_state_closed(k, p).map_err(sim_err)? + fault;
            (rel(c, r), json!({ "k": k, "p_given_c": p, "closed": c, "recursion": r }))
        }
        Family::DecoyRecursion => {
            let p2 = rng.random_range(0.0..1.0);
            let k = rng.random_range(2..=20usize);
            let r = p_click_decoy_recursive(k, p2);
            let c = p_click_decoy(k, p2) + fault;
            (rel(c, r), json!({ "k": k, "p2": p2, "closed": c, "recursion": r }))
        }
        Family::ThreeStateLimit => {
            let p0 = rng.random_range(0.01..0.5);
            let k = rng.random_range(2..=20usize);
            let r = p_click_four_state(k, [p0, p0, 1.0 - 2.0 * p0, 0.0]).map_err(sim_err)?;
            let c = p_click_three_state(k, p0) + fault;
            (rel(c, r), json!({ "k": k, "p0": p0, "closed": c, "recursion": r }))
        }
    })
}

/// Runs every family; returns the report text and whether all passed.
pub fn run(seed: u64, cases: usize, inject: Option<Family>) -> Result<(String, bool), CliError> {
    if cases == 0 {
        return Err(CliError::Config("--cases must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = String::from("family,cases,max_deviation,status\n");
    let mut all_ok = true;
    let mut offending = Vec::new();
    for family in FAMILIES {
        let fault = if inject == Some(family) { FAULT } else { 0.0 };
        let mut worst = Worst { deviation: 0.0, case: Value::Null };
        for i in 0..cases {
            let (dev, mut c) = case(family, &mut rng, fault)?;
            if !(dev <= worst.deviation) {
                c["case"] = json!(i);
                worst = Worst { deviation: dev, case: c };
            }
        }
        let ok = worst.deviation <= TOLERANCE;
        all_ok &= ok;
        let status = if ok { "ok" } else { "FAIL" };
        report.push_str(&format!("{},{cases},{:.3e},{status}\n", family.name(), worst.deviation));
        if !ok {
            offending.push(json!({ "family": family.name(), "deviation": worst.deviation, "worst_case": worst.case }));
        }
    }
    for o in offending {
        eprintln!("{o}");
    }
    Ok((report, all_ok))
}
