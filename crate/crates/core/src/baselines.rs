//! Reference strategies: everything on the device, everything on the edge,
//! and a per-user split that only minimizes latency under fixed rates.

use std::f64::consts::LN_2;

use crate::cost::{CostBreakdown, Problem};
use crate::radio::{Allocation, UserAlloc};
use crate::scenario::{Link, Scenario};

/// Whole model on the device: `s = F`, no transfers, no edge work.
pub fn device_only(problem: &Problem) -> Vec<CostBreakdown> {
    let f = problem.num_layers();
    let idle = UserAlloc {
        beta_up: Vec::new(),
        beta_down: Vec::new(),
        p_up: 0.0,
        p_down: 0.0,
        r: problem.params.r_max,
        split: f,
    };
    (0..problem.num_users())
        .map(|i| problem.cost_at_rates(i, f, &idle, 0.0, 0.0))
        .collect()
}

/// Whole model on the edge (`s = 0`) with the radio and compute variables of
/// `alloc_radio`.
pub fn edge_only(problem: &Problem, alloc_radio: &Allocation) -> Vec<CostBreakdown> {
    problem.system_breakdowns(alloc_radio, 0)
}

/// Rates when every user gets an equal, interference-free share of its AP's
/// band at maximum power: `1/K_n` of each subchannel for the `K_n` users of
/// AP `n`.
pub fn equal_share_rates(scenario: &Scenario) -> (Vec<f64>, Vec<f64>) {
    let radio = &scenario.radio;
    let rate = |link: Link, i: usize| {
        let ap = scenario.serving_ap(i);
        let share = 1.0 / scenario.users_of(ap).len() as f64;
        let c = radio.subchannel_bandwidth(link);
        let noise = radio.noise_power(link);
        let p = radio.power_box(link).1;
        (0..scenario.num_subchannels())
            .map(|m| {
                let g = scenario.gain(link, i, ap, m);
                share * c * (p * g / noise).ln_1p() / LN_2
            })
            .sum::<f64>()
    };
    let n = scenario.num_users();
    (
        (0..n).map(|i| rate(Link::Up, i)).collect(),
        (0..n).map(|i| rate(Link::Down, i)).collect(),
    )
}

/// Latency-minimizing split per user with the given rates and `r = r_max`.
/// Energy plays no part. Ties go to the smaller split.
pub fn latency_min_split(problem: &Problem, rate_up: &[f64], rate_down: &[f64]) -> Vec<usize> {
    (0..problem.num_users())
        .map(|i| {
            let ua = max_resources(problem, 0);
            (0..=problem.num_layers())
                .map(|s| (s, problem.cost_at_rates(i, s, &ua, rate_up[i], rate_down[i]).total_t))
                .fold((0, f64::INFINITY), |best, (s, t)| if t < best.1 { (s, t) } else { best })
                .0
        })
        .collect()
}

/// Costs of [`latency_min_split`] evaluated under the same rates at full power.
pub fn latency_min(problem: &Problem) -> (Vec<usize>, Vec<CostBreakdown>) {
    let (up, down) = equal_share_rates(&problem.scenario);
    let splits = latency_min_split(problem, &up, &down);
    let costs = splits
        .iter()
        .enumerate()
        .map(|(i, &s)| problem.cost_at_rates(i, s, &max_resources(problem, s), up[i], down[i]))
        .collect();
    (splits, costs)
}

fn max_resources(problem: &Problem, split: usize) -> UserAlloc {
    let radio = &problem.scenario.radio;
    UserAlloc {
        beta_up: Vec::new(),
        beta_down: Vec::new(),
        p_up: radio.p_max,
        p_down: radio.pd_max,
        r: problem.params.r_max,
        split,
    }
}
