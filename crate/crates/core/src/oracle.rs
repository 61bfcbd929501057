//! Exhaustive search over a discretized problem, for tiny instances.
//!
//! Every one-hot subchannel assignment (uplink and downlink), every grid
//! power and compute level per user, and every shared split is evaluated.
//! The result is the exact optimum over the grid and serves as ground truth
//! for judging Li-GD and its rounding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::Problem;
use crate::error::{Error, Result};
use crate::ligd::{round_and_repair, Rounding};
use crate::radio::{Allocation, UserAlloc};

/// Largest number of candidates [`brute_force`] will evaluate.
pub const MAX_CANDIDATES: u128 = 100_000_000;
/// Deepest model the oracle accepts.
pub const MAX_LAYERS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleGrid {
    /// Grid points per power box, log-spaced.
    pub power_levels: usize,
    /// Grid points in the compute-unit box, linearly spaced.
    pub r_levels: usize,
    pub max_users: usize,
    pub max_subchannels: usize,
}

impl Default for OracleGrid {
    fn default() -> Self {
        OracleGrid {
            power_levels: 5,
            r_levels: 3,
            max_users: 3,
            max_subchannels: 3,
        }
    }
}

impl OracleGrid {
    pub fn validate(&self) -> Result<()> {
        if self.power_levels < 2 || self.r_levels < 2 {
            return Err(Error::invalid("oracle grid", "need at least 2 levels per variable"));
        }
        Ok(())
    }

    /// Number of candidates for `users` users, `m` subchannels and `f` layers.
    pub fn candidate_count(&self, users: usize, m: usize, f: usize) -> u128 {
        let per_user = (m as u128).pow(2) * (self.power_levels as u128).pow(2) * self.r_levels as u128;
        (0..users)
            .try_fold(f as u128 + 1, |acc, _| acc.checked_mul(per_user))
            .unwrap_or(u128::MAX)
    }
}

/// Log-spaced levels over `[lo, hi]`; linear if `lo` is not positive.
pub fn power_levels(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            if k == n - 1 {
                hi
            } else if lo > 0.0 {
                lo * (hi / lo).powf(t)
            } else {
                lo + (hi - lo) * t
            }
        })
        .collect()
}

pub fn linear_levels(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub split: usize,
    /// One-hot allocation at the optimum.
    pub alloc: Allocation,
    /// `Γ*`
    pub utility: f64,
    /// Candidates enumerated, including cap-infeasible ones that were skipped.
    pub candidates: u128,
}

struct Levels {
    p_up: Vec<f64>,
    p_down: Vec<f64>,
    r: Vec<f64>,
}

impl Levels {
    fn new(problem: &Problem, grid: &OracleGrid) -> Self {
        let radio = &problem.scenario.radio;
        Levels {
            p_up: power_levels(radio.p_min, radio.p_max, grid.power_levels),
            p_down: power_levels(radio.pd_min, radio.pd_max, grid.power_levels),
            r: linear_levels(problem.params.r_min, problem.params.r_max, grid.r_levels),
        }
    }
}

/// Per-user choice encoded as mixed-radix digits.
#[derive(Clone, Copy)]
struct Choice {
    m_up: usize,
    m_down: usize,
    p_up: usize,
    p_down: usize,
    r: usize,
}

fn decode(mut code: u128, m: usize, grid: &OracleGrid) -> Choice {
    let mut digit = |base: usize| {
        let d = (code % base as u128) as usize;
        code /= base as u128;
        d
    };
    Choice {
        m_up: digit(m),
        m_down: digit(m),
        p_up: digit(grid.power_levels),
        p_down: digit(grid.power_levels),
        r: digit(grid.r_levels),
    }
}

fn within_caps(problem: &Problem, choices: &[Choice]) -> bool {
    let sc = &problem.scenario;
    let (m, cap) = (sc.num_subchannels(), sc.radio.max_users_per_subchannel);
    let mut up = vec![0usize; sc.num_aps() * m];
    let mut down = up.clone();
    for (i, c) in choices.iter().enumerate() {
        let ap = sc.serving_ap(i);
        up[ap * m + c.m_up] += 1;
        down[ap * m + c.m_down] += 1;
    }
    up.iter().chain(&down).all(|&n| n <= cap)
}

fn one_hot(m: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[k] = 1.0;
    v
}

fn build(choices: &[Choice], levels: &Levels, m: usize, split: usize) -> Allocation {
    Allocation {
        users: choices
            .iter()
            .map(|c| UserAlloc {
                beta_up: one_hot(m, c.m_up),
                beta_down: one_hot(m, c.m_down),
                p_up: levels.p_up[c.p_up],
                p_down: levels.p_down[c.p_down],
                r: levels.r[c.r],
                split,
            })
            .collect(),
    }
}

/// Exact minimum of `Γ` over the grid.
pub fn brute_force(problem: &Problem, grid: &OracleGrid) -> Result<OracleResult> {
    grid.validate()?;
    let (u, m, f) = (problem.num_users(), problem.scenario.num_subchannels(), problem.num_layers());
    if u > grid.max_users || m > grid.max_subchannels || f > MAX_LAYERS {
        return Err(Error::invalid(
            "oracle",
            format!(
                "instance too large: {u} users (max {}), {m} subchannels (max {}), {f} layers (max {MAX_LAYERS})",
                grid.max_users, grid.max_subchannels
            ),
        ));
    }
    let total = grid.candidate_count(u, m, f);
    if total > MAX_CANDIDATES {
        return Err(Error::EnumerationTooLarge {
            count: total,
            limit: MAX_CANDIDATES,
        });
    }
    let per_split = total / (f as u128 + 1);
    let per_user = (m as u128).pow(2) * (grid.power_levels as u128).pow(2) * grid.r_levels as u128;
    let levels = Levels::new(problem, grid);

    let best = (0..=f)
        .into_par_iter()
        .filter_map(|s| {
            let mut best: Option<(f64, u128)> = None;
            let mut choices = vec![decode(0, m, grid); u];
            for code in 0..per_split {
                let mut rest = code;
                for c in choices.iter_mut() {
                    *c = decode(rest % per_user, m, grid);
                    rest /= per_user;
                }
                if !within_caps(problem, &choices) {
                    continue;
                }
                let g = problem.system_utility(&build(&choices, &levels, m, s), s);
                if best.is_none_or(|(b, _)| g < b) {
                    best = Some((g, code));
                }
            }
            best.map(|(g, code)| (g, s, code))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .ok_or(Error::Infeasible {
            ap: 0,
            users: u,
            slots: m * problem.scenario.radio.max_users_per_subchannel,
        })?;

    let (utility, split, code) = best;
    let mut rest = code;
    let choices: Vec<Choice> = (0..u)
        .map(|_| {
            let c = decode(rest % per_user, m, grid);
            rest /= per_user;
            c
        })
        .collect();
    Ok(OracleResult {
        split,
        alloc: build(&choices, &levels, m, split),
        utility,
        candidates: total,
    })
}

fn nearest(levels: &[f64], x: f64, log: bool) -> f64 {
    let key = |v: f64| if log && v > 0.0 && x > 0.0 { (v.ln() - x.ln()).abs() } else { (v - x).abs() };
    levels
        .iter()
        .copied()
        .min_by(|a, b| key(*a).total_cmp(&key(*b)))
        .expect("grid has levels")
}

/// Rounds `alloc` onto the oracle grid: one-hot subchannels via argmax with
/// cap repair, and the nearest grid level for every power and `r`.
pub fn snap_to_grid(problem: &Problem, alloc: &Allocation, grid: &OracleGrid) -> Result<Allocation> {
    grid.validate()?;
    let levels = Levels::new(problem, grid);
    let mut out = round_and_repair(alloc, &problem.scenario, Rounding::Argmax)?;
    for u in &mut out.users {
        u.p_up = nearest(&levels.p_up, u.p_up, true);
        u.p_down = nearest(&levels.p_down, u.p_down, true);
        u.r = nearest(&levels.r, u.r, false);
    }
    Ok(out)
}
