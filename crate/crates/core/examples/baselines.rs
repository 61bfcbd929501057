//! Li-GD next to Device-Only, Edge-Only and the latency-min split.

use noma_split::baselines::{device_only, edge_only, latency_min};
use noma_split::ligd::li_gd;
use noma_split::{
    ComputeParams, CostBreakdown, Layout, ModelProfile, OptimizerConfig, Problem, RadioParams, Scenario, Weights,
};

fn mean(costs: &[CostBreakdown]) -> (f64, f64) {
    let n = costs.len() as f64;
    (
        costs.iter().map(|c| c.total_t).sum::<f64>() / n,
        costs.iter().map(|c| c.total_e).sum::<f64>() / n,
    )
}

fn main() {
    let radio = RadioParams {
        num_subchannels: 4,
        ..RadioParams::default()
    };
    let layout = Layout {
        n_aps: 2,
        n_users: 6,
        area_side: 200.0,
    };
    let scenario = Scenario::generate(3, &layout, &radio).expect("valid layout");
    let problem = Problem::new(
        ModelProfile::builtin("yolov2-17").unwrap(),
        scenario,
        ComputeParams::default(),
        Weights::default(),
    )
    .expect("valid problem");

    let ecc = li_gd(&problem, &OptimizerConfig::default()).expect("solvable");
    let (splits, lm) = latency_min(&problem);
    let rows = [
        ("Li-GD", problem.system_breakdowns(&ecc.best_alloc, ecc.best_split)),
        ("Device-Only", device_only(&problem)),
        ("Edge-Only", edge_only(&problem, &ecc.best_alloc)),
        ("latency-min", lm),
    ];
    let (t_dev, e_dev) = mean(&rows[1].1);
    println!("method        latency s   energy J   speedup   energy ratio");
    for (name, costs) in &rows {
        let (t, e) = mean(costs);
        println!("{name:<12} {t:>10.4} {e:>10.4} {:>9.2} {:>13.3}", t_dev / t, e_dev / e);
    }
    println!("Li-GD split {}, latency-min splits {splits:?}", ecc.best_split);
}
