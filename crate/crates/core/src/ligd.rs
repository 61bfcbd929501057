//! Layer-looped projected gradient descent.
//!
//! For every candidate split `s = 0..=F` the continuous problem `min Γ_s`
//! over relaxed subchannel weights, powers and edge units is solved by
//! projected gradient descent. With warm starts each split begins at the
//! optimum of the previous one, since neighbouring layers have similar
//! workloads and cut sizes. The split with the smallest `Γ_s` wins and its
//! subchannel weights are rounded to a one-hot, cap-respecting assignment.
//!
//! Steps are taken in box-normalized coordinates: a variable with box width
//! `w` moves by `-step · w² · ∂Γ/∂x`.

use serde::{Deserialize, Serialize};

use crate::cost::Problem;
use crate::error::{Error, Result};
use crate::radio::Allocation;
use crate::scenario::{Link, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// Largest weight wins; ties go to the lowest subchannel.
    #[default]
    Argmax,
    /// Weights above one half become 1; users left without a subchannel
    /// fall back to argmax.
    ThresholdHalf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub step_size: f64,
    pub epsilon: f64,
    pub max_iters_per_layer: usize,
    pub rounding: Rounding,
    pub warm_start: bool,
    /// Halve the step until the utility does not increase.
    pub backtracking: bool,
    /// Re-optimize powers and compute units after rounding.
    pub polish: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            step_size: 10.0,
            epsilon: 1e-6,
            max_iters_per_layer: 5000,
            rounding: Rounding::Argmax,
            warm_start: true,
            backtracking: true,
            polish: true,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.epsilon > 0.0 && self.max_iters_per_layer >= 1) {
            return Err(Error::invalid(
                "optimizer config",
                "need step_size > 0, epsilon > 0 and max_iters_per_layer >= 1",
            ));
        }
        Ok(())
    }
}

/// Outcome of the descent for one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerResult {
    pub split: usize,
    /// Relaxed optimum.
    pub alloc: Allocation,
    /// `Γ_s` at the relaxed optimum.
    pub utility: f64,
    pub iterations: usize,
    /// `Γ_s` at the start and after every accepted step.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub per_layer: Vec<LayerResult>,
    pub best_split: usize,
    /// Rounded, cap-feasible allocation at `best_split`.
    pub best_alloc: Allocation,
    /// `Γ` of the relaxed optimum at `best_split`.
    pub relaxed_utility: f64,
    /// `Γ` of `best_alloc`.
    pub rounded_utility: f64,
    /// Per-layer traces concatenated in split order.
    pub utility_trace: Vec<f64>,
    /// Descent iterations summed over all splits, excluding the polish.
    pub total_iterations: usize,
    pub polish_iterations: usize,
}

impl SolveResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `(split, iteration, utility)` rows for convergence plots.
    pub fn trace_rows(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.per_layer
            .iter()
            .flat_map(|l| l.trace.iter().enumerate().map(move |(k, &u)| (l.split, k, u)))
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Clips powers and compute units into their boxes and projects each
/// subchannel weight vector onto the simplex.
pub fn project(alloc: &mut Allocation, scenario: &Scenario, r_box: (f64, f64)) {
    let radio = &scenario.radio;
    for u in &mut alloc.users {
        project_simplex(&mut u.beta_up);
        project_simplex(&mut u.beta_down);
        u.p_up = u.p_up.clamp(radio.p_min, radio.p_max);
        u.p_down = u.p_down.clamp(radio.pd_min, radio.pd_max);
        u.r = u.r.clamp(r_box.0, r_box.1);
    }
}

struct Widths {
    p_up: f64,
    p_down: f64,
    r: f64,
}

impl Widths {
    fn of(problem: &Problem) -> Self {
        let radio = &problem.scenario.radio;
        Widths {
            p_up: radio.p_max - radio.p_min,
            p_down: radio.pd_max - radio.pd_min,
            r: problem.params.r_max - problem.params.r_min,
        }
    }
}

/// Largest per-group Euclidean distance between two allocations in
/// normalized coordinates.
fn step_length(a: &Allocation, b: &Allocation, w: &Widths) -> f64 {
    let norm = |w: f64| if w > 0.0 { 1.0 / w } else { 0.0 };
    let (mut beta, mut power, mut r) = (0.0, 0.0, 0.0);
    for (x, y) in a.users.iter().zip(&b.users) {
        for (bx, by) in x.beta_up.iter().zip(&y.beta_up).chain(x.beta_down.iter().zip(&y.beta_down)) {
            beta += (bx - by).powi(2);
        }
        power += ((x.p_up - y.p_up) * norm(w.p_up)).powi(2) + ((x.p_down - y.p_down) * norm(w.p_down)).powi(2);
        r += ((x.r - y.r) * norm(w.r)).powi(2);
    }
    beta.sqrt().max(power.sqrt()).max(r.sqrt())
}

/// Projected gradient descent on `Γ_s` from `start`.
pub fn gd_solve_layer(
    problem: &Problem,
    s: usize,
    start: Allocation,
    config: &OptimizerConfig,
) -> Result<LayerResult> {
    descend(problem, s, start, config, false)
}

/// Descent over powers and compute units only, keeping the subchannel
/// weights of `start` fixed. Used after rounding.
pub fn polish(problem: &Problem, s: usize, start: Allocation, config: &OptimizerConfig) -> Result<LayerResult> {
    descend(problem, s, start, config, true)
}

fn descend(
    problem: &Problem,
    s: usize,
    start: Allocation,
    config: &OptimizerConfig,
    fix_beta: bool,
) -> Result<LayerResult> {
    let r_box = problem.params.r_box();
    let widths = Widths::of(problem);
    let mut x = start.with_split(s);
    project(&mut x, &problem.scenario, r_box);
    let mut f = problem.capped_system_utility(&x, s);
    if !f.is_finite() {
        return Err(Error::NonFiniteUtility(f));
    }
    let mut trace = vec![f];
    let mut iterations = 0;
    let m = problem.scenario.num_subchannels();
    let beta_scale = if fix_beta { 0.0 } else { 1.0 };

    while iterations < config.max_iters_per_layer {
        let g = problem.gradient(&x, s);
        let gnorm = g
            .beta_up
            .iter()
            .chain(&g.beta_down)
            .map(|v| beta_scale * v * v)
            .chain(g.p_up.iter().map(|v| (v * widths.p_up).powi(2)))
            .chain(g.p_down.iter().map(|v| (v * widths.p_down).powi(2)))
            .chain(g.r.iter().map(|v| (v * widths.r).powi(2)))
            .sum::<f64>()
            .sqrt();
        if gnorm < config.epsilon {
            break;
        }

        let mut step = config.step_size;
        let (next, f_next) = loop {
            let mut y = x.clone();
            for (i, u) in y.users.iter_mut().enumerate() {
                for k in 0..m {
                    u.beta_up[k] -= beta_scale * step * g.beta_up[i * m + k];
                    u.beta_down[k] -= beta_scale * step * g.beta_down[i * m + k];
                }
                u.p_up -= step * widths.p_up * widths.p_up * g.p_up[i];
                u.p_down -= step * widths.p_down * widths.p_down * g.p_down[i];
                u.r -= step * widths.r * widths.r * g.r[i];
            }
            project(&mut y, &problem.scenario, r_box);
            let fy = problem.capped_system_utility(&y, s);
            if !config.backtracking || fy <= f {
                break (y, fy);
            }
            if step_length(&x, &y, &widths) < config.epsilon {
                // No decrease is available at a resolvable step.
                break (x.clone(), f);
            }
            step *= 0.5;
        };

        iterations += 1;
        let moved = step_length(&x, &next, &widths);
        let change = (f_next - f).abs();
        x = next;
        f = f_next;
        trace.push(f);
        if change < config.epsilon || moved < config.epsilon {
            break;
        }
    }

    Ok(LayerResult {
        split: s,
        utility: problem.system_utility(&x, s),
        alloc: x,
        iterations,
        trace,
    })
}

/// Solves every split in order, then rounds the best one.
pub fn li_gd(problem: &Problem, config: &OptimizerConfig) -> Result<SolveResult> {
    config.validate()?;
    let r_box = problem.params.r_box();
    let initial = Allocation::uniform(&problem.scenario, r_box, 0);
    let mut per_layer: Vec<LayerResult> = Vec::with_capacity(problem.num_layers() + 1);
    for s in 0..=problem.num_layers() {
        let start = match per_layer.last() {
            Some(prev) if config.warm_start => prev.alloc.clone(),
            _ => initial.clone(),
        };
        let layer = gd_solve_layer(problem, s, start, config)?;
        log::debug!(
            "split {s}: utility {:.6e} after {} iterations",
            layer.utility,
            layer.iterations
        );
        per_layer.push(layer);
    }

    let best = per_layer
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.utility.total_cmp(&b.1.utility).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one split");
    let best_split = per_layer[best].split;
    let relaxed_utility = per_layer[best].utility;
    let mut best_alloc = round_and_repair(&per_layer[best].alloc, &problem.scenario, config.rounding)?;
    let mut polish_iterations = 0;
    if config.polish {
        let polished = polish(problem, best_split, best_alloc, config)?;
        polish_iterations = polished.iterations;
        best_alloc = polished.alloc;
    }
    let rounded_utility = problem.system_utility(&best_alloc, best_split);
    let utility_trace = per_layer.iter().flat_map(|l| l.trace.iter().copied()).collect();
    let total_iterations = per_layer.iter().map(|l| l.iterations).sum();
    Ok(SolveResult {
        per_layer,
        best_split,
        best_alloc,
        relaxed_utility,
        rounded_utility,
        utility_trace,
        total_iterations,
        polish_iterations,
    })
}

/// Li-GD without warm starts: every split starts from the default point.
pub fn cold_gd(problem: &Problem, config: &OptimizerConfig) -> Result<SolveResult> {
    let cold = OptimizerConfig {
        warm_start: false,
        ..config.clone()
    };
    li_gd(problem, &cold)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = k;
        }
    }
    best
}

/// Subchannel indices by descending weight, ties by index.
fn preference(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    idx
}

/// Rounds relaxed subchannel weights to one-hot vectors, then enforces the
/// per-(AP, subchannel) user cap in both directions.
///
/// While a cluster is over the cap, its member with the smallest relaxed
/// weight on that subchannel moves to its most preferred subchannel that
/// still has room.
pub fn round_and_repair(alloc: &Allocation, scenario: &Scenario, rounding: Rounding) -> Result<Allocation> {
    let m_count = scenario.num_subchannels();
    let cap = scenario.radio.max_users_per_subchannel;
    for ap in 0..scenario.num_aps() {
        let users = scenario.users_of(ap).len();
        if users > m_count * cap {
            return Err(Error::Infeasible {
                ap,
                users,
                slots: m_count * cap,
            });
        }
    }

    let mut out = alloc.clone();
    for link in [Link::Up, Link::Down] {
        let relaxed: Vec<&[f64]> = alloc.users.iter().map(|u| u.beta(link)).collect();
        let mut chosen: Vec<usize> = relaxed
            .iter()
            .map(|b| match rounding {
                Rounding::Argmax => argmax(b),
                Rounding::ThresholdHalf => b.iter().position(|&x| x > 0.5).unwrap_or_else(|| argmax(b)),
            })
            .collect();

        let mut count = vec![0usize; scenario.num_aps() * m_count];
        for (i, &m) in chosen.iter().enumerate() {
            count[scenario.serving_ap(i) * m_count + m] += 1;
        }
        while let Some(slot) = count.iter().position(|&c| c > cap) {
            let (ap, m) = (slot / m_count, slot % m_count);
            let mover = (0..chosen.len())
                .filter(|&i| scenario.serving_ap(i) == ap && chosen[i] == m)
                .min_by(|&a, &b| relaxed[a][m].total_cmp(&relaxed[b][m]).then(b.cmp(&a)))
                .expect("over-full cluster has members");
            let target = preference(relaxed[mover])
                .into_iter()
                .find(|&k| k != m && count[ap * m_count + k] < cap)
                .expect("capacity was checked up front");
            count[slot] -= 1;
            count[ap * m_count + target] += 1;
            chosen[mover] = target;
        }

        for (u, &m) in out.users.iter_mut().zip(&chosen) {
            let beta = match link {
                Link::Up => &mut u.beta_up,
                Link::Down => &mut u.beta_down,
            };
            beta.iter_mut().for_each(|b| *b = 0.0);
            beta[m] = 1.0;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{ComputeParams, Weights};
    use crate::profile::ModelProfile;
    use crate::radio::UserAlloc;
    use crate::scenario::{Layout, RadioParams, Tensor3};

    /// Sort-free oracle: bisection on the threshold θ with Σ max(v - θ, 0) = 1.
    fn simplex_oracle(v: &[f64]) -> Vec<f64> {
        let (mut lo, mut hi) = (v.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0, v.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let s: f64 = v.iter().map(|x| (x - mid).max(0.0)).sum();
            if s > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let theta = 0.5 * (lo + hi);
        v.iter().map(|x| (x - theta).max(0.0)).collect()
    }

    #[test]
    fn simplex_projection_cases() {
        let mut v = vec![0.8, 0.8];
        project_simplex(&mut v);
        assert_eq!(v, vec![0.5, 0.5]);
        let mut v = vec![0.2, 0.3, 0.5];
        project_simplex(&mut v);
        assert_eq!(v, vec![0.2, 0.3, 0.5]);
        let mut v = vec![2.0, -1.0, 0.0];
        project_simplex(&mut v);
        assert_eq!(v, vec![1.0, 0.0, 0.0]);
    }

    proptest::proptest! {
        #[test]
        fn simplex_matches_oracle(v in proptest::collection::vec(-3.0f64..3.0, 1..12)) {
            let mut p = v.clone();
            project_simplex(&mut p);
            let o = simplex_oracle(&v);
            let sum: f64 = p.iter().sum();
            proptest::prop_assert!((sum - 1.0).abs() < 1e-12);
            for (a, b) in p.iter().zip(&o) {
                proptest::prop_assert!((a - b).abs() < 1e-9);
            }
            let mut again = p.clone();
            project_simplex(&mut again);
            for (a, b) in p.iter().zip(&again) {
                proptest::prop_assert!((a - b).abs() < 1e-15);
            }
        }
    }

    fn one_ap_scenario(users: usize, m: usize, cap: usize) -> Scenario {
        let radio = RadioParams {
            num_subchannels: m,
            max_users_per_subchannel: cap,
            ..RadioParams::default()
        };
        let gu = Tensor3::filled([users, 1, m], 1e-10);
        let gd = Tensor3::filled([1, users, m], 1e-10);
        Scenario::from_parts(radio, vec![[0.0, 0.0]], vec![[1.0, 1.0]; users], gu, gd).unwrap()
    }

    fn with_betas(betas: &[Vec<f64>]) -> Allocation {
        Allocation {
            users: betas
                .iter()
                .map(|b| UserAlloc {
                    beta_up: b.clone(),
                    beta_down: b.clone(),
                    p_up: 0.1,
                    p_down: 1.0,
                    r: 1.0,
                    split: 0,
                })
                .collect(),
        }
    }

    #[test]
    fn projection_clips_boxes() {
        let sc = one_ap_scenario(1, 2, 3);
        let mut a = with_betas(&[vec![0.8, 0.8]]);
        a.users[0].p_up = 5.0;
        a.users[0].p_down = -1.0;
        a.users[0].r = 10.0;
        project(&mut a, &sc, (1.0, 4.0));
        assert_eq!(a.users[0].beta_up, vec![0.5, 0.5]);
        assert_eq!(a.users[0].p_up, sc.radio.p_max);
        assert_eq!(a.users[0].p_down, sc.radio.pd_min);
        assert_eq!(a.users[0].r, 4.0);
        let before = a.clone();
        project(&mut a, &sc, (1.0, 4.0));
        assert_eq!(a, before);
    }

    #[test]
    fn rounding_rules() {
        let sc = one_ap_scenario(1, 2, 3);
        let r = round_and_repair(&with_betas(&[vec![0.7, 0.3]]), &sc, Rounding::ThresholdHalf).unwrap();
        assert_eq!(r.users[0].beta_up, vec![1.0, 0.0]);
        let r = round_and_repair(&with_betas(&[vec![0.5, 0.5]]), &sc, Rounding::ThresholdHalf).unwrap();
        assert_eq!(r.users[0].beta_up, vec![1.0, 0.0]);
        let r = round_and_repair(&with_betas(&[vec![0.5, 0.5]]), &sc, Rounding::Argmax).unwrap();
        assert_eq!(r.users[0].beta_down, vec![1.0, 0.0]);
        let r = round_and_repair(&with_betas(&[vec![0.2, 0.3, 0.5]]), &one_ap_scenario(1, 3, 1), Rounding::ThresholdHalf)
            .unwrap();
        assert_eq!(r.users[0].beta_up, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn repair_moves_weakest_member() {
        // Four users prefer subchannel 0; user 2 holds it least firmly and
        // prefers subchannel 2 next.
        let sc = one_ap_scenario(4, 3, 3);
        let betas = vec![
            vec![0.9, 0.1, 0.0],
            vec![0.8, 0.15, 0.05],
            vec![0.5, 0.1, 0.4],
            vec![0.7, 0.3, 0.0],
        ];
        let r = round_and_repair(&with_betas(&betas), &sc, Rounding::Argmax).unwrap();
        let chosen: Vec<usize> = r.users.iter().map(|u| argmax(&u.beta_up)).collect();
        assert_eq!(chosen, vec![0, 0, 2, 0]);
        assert!(r.is_one_hot());
    }

    #[test]
    fn repair_reports_infeasible() {
        let sc = one_ap_scenario(5, 2, 2);
        let betas = vec![vec![0.5, 0.5]; 5];
        assert!(matches!(
            round_and_repair(&with_betas(&betas), &sc, Rounding::Argmax),
            Err(Error::Infeasible { users: 5, slots: 4, .. })
        ));
    }

    fn small_problem(seed: u64) -> Problem {
        let radio = RadioParams {
            num_subchannels: 2,
            ..RadioParams::default()
        };
        let layout = Layout {
            n_aps: 2,
            n_users: 3,
            area_side: 400.0,
        };
        let sc = Scenario::generate(seed, &layout, &radio).unwrap();
        Problem::new(ModelProfile::synthetic(3), sc, ComputeParams::default(), Weights::default()).unwrap()
    }

    #[test]
    fn early_exit_at_stationary_start() {
        let prob = small_problem(1);
        let f = prob.num_layers();
        // At s = F nothing depends on the variables: zero gradient.
        let start = Allocation::uniform(&prob.scenario, prob.params.r_box(), f);
        let res = gd_solve_layer(&prob, f, start.clone(), &OptimizerConfig::default()).unwrap();
        assert_eq!(res.iterations, 0);
        assert_eq!(res.alloc, start);
    }

    #[test]
    fn single_user_power_goes_to_max() {
        let radio = RadioParams {
            num_subchannels: 1,
            ..RadioParams::default()
        };
        let layout = Layout {
            n_aps: 1,
            n_users: 1,
            area_side: 300.0,
        };
        let sc = Scenario::generate(4, &layout, &radio).unwrap();
        let prob = Problem::new(ModelProfile::synthetic(2), sc, ComputeParams::default(), Weights::latency_only())
            .unwrap();
        let res = gd_solve_layer(
            &prob,
            0,
            Allocation::uniform(&prob.scenario, prob.params.r_box(), 0),
            &OptimizerConfig::default(),
        )
        .unwrap();
        let p = res.alloc.users[0].p_up;
        assert!((p - radio.p_max).abs() < 1e-6, "p_up = {p}");
        // Grid check: no power level beats the optimum.
        for k in 0..=50 {
            let mut a = res.alloc.clone();
            a.users[0].p_up = radio.p_min + (radio.p_max - radio.p_min) * k as f64 / 50.0;
            assert!(prob.system_utility(&a, 0) >= res.utility - 1e-12);
        }
    }

    #[test]
    fn traces_descend_and_result_is_feasible() {
        let prob = small_problem(2);
        let res = li_gd(&prob, &OptimizerConfig::default()).unwrap();
        for layer in &res.per_layer {
            assert!(layer.trace.windows(2).all(|w| w[1] <= w[0]), "split {}", layer.split);
        }
        res.best_alloc.validate(&prob.scenario, prob.params.r_box(), 0.0).unwrap();
        assert!(res.best_alloc.is_one_hot());
        let min = res.per_layer.iter().map(|l| l.utility).fold(f64::INFINITY, f64::min);
        assert_eq!(res.relaxed_utility, min);
        assert_eq!(res.per_layer.len(), prob.num_layers() + 1);
    }

    #[test]
    fn cold_start_uses_default_point_everywhere() {
        let prob = small_problem(3);
        let cold = cold_gd(&prob, &OptimizerConfig::default()).unwrap();
        for layer in &cold.per_layer {
            let fresh = gd_solve_layer(
                &prob,
                layer.split,
                Allocation::uniform(&prob.scenario, prob.params.r_box(), 0),
                &OptimizerConfig::default(),
            )
            .unwrap();
            assert_eq!(&fresh, layer);
        }
    }

    #[test]
    fn deterministic() {
        let prob = small_problem(4);
        let a = li_gd(&prob, &OptimizerConfig::default()).unwrap();
        let b = li_gd(&prob, &OptimizerConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
