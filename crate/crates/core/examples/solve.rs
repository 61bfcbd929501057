//! Runs Li-GD on a desk-scale network and reports the chosen split, the
//! per-split utilities and the final allocation.

use noma_split::ligd::li_gd;
use noma_split::{ComputeParams, Layout, ModelProfile, OptimizerConfig, Problem, RadioParams, Scenario, Weights};

fn main() {
    env_logger::init();
    let radio = RadioParams {
        num_subchannels: 4,
        ..RadioParams::default()
    };
    let layout = Layout {
        n_aps: 2,
        n_users: 8,
        area_side: 200.0,
    };
    let scenario = Scenario::generate(42, &layout, &radio).expect("valid layout");
    let problem = Problem::new(
        ModelProfile::builtin("nin9").unwrap(),
        scenario,
        ComputeParams::default(),
        Weights::default(),
    )
    .expect("valid problem");

    let result = li_gd(&problem, &OptimizerConfig::default()).expect("solvable");
    for layer in &result.per_layer {
        println!("split {:>2}: Γ = {:.5} after {:>4} iterations", layer.split, layer.utility, layer.iterations);
    }
    println!(
        "best split {}: relaxed Γ = {:.5}, rounded Γ = {:.5}, {} iterations",
        result.best_split, result.relaxed_utility, result.rounded_utility, result.total_iterations
    );
    for (i, u) in result.best_alloc.users.iter().enumerate() {
        let pick = |b: &[f64]| b.iter().position(|&x| x == 1.0).unwrap();
        println!(
            "user {i}: up sc {} at {:.3} W, down sc {} at {:.2} W, r = {:.2}",
            pick(&u.beta_up),
            u.p_up,
            pick(&u.beta_down),
            u.p_down,
            u.r
        );
    }
}
