//! Li-GD against exhaustive grid search on tiny instances.

use noma_split::ligd::li_gd;
use noma_split::oracle::{brute_force, OracleGrid};
use noma_split::{ComputeParams, Layout, ModelProfile, OptimizerConfig, Problem, RadioParams, Scenario, Weights};

fn main() {
    let radio = RadioParams {
        num_subchannels: 2,
        ..RadioParams::default()
    };
    let layout = Layout {
        n_aps: 2,
        n_users: 2,
        area_side: 200.0,
    };
    for seed in 0..3 {
        let scenario = Scenario::generate(seed, &layout, &radio).expect("valid layout");
        let problem = Problem::new(ModelProfile::synthetic(3), scenario, ComputeParams::default(), Weights::default())
            .expect("valid problem");
        let ours = li_gd(&problem, &OptimizerConfig::default()).expect("solvable");
        let best = brute_force(&problem, &OracleGrid::default()).expect("small enough");
        println!(
            "seed {seed}: Li-GD split {} Γ = {:.6}, oracle split {} Γ* = {:.6} over {} candidates, ratio {:.4}",
            ours.best_split,
            ours.rounded_utility,
            best.split,
            best.utility,
            best.candidates,
            ours.rounded_utility / best.utility
        );
    }
}
