//! Delay and energy of every split for one user of a fixed allocation.

use noma_split::{Allocation, ComputeParams, Layout, ModelProfile, Problem, RadioParams, Scenario, Weights};

fn main() {
    let radio = RadioParams {
        num_subchannels: 2,
        ..RadioParams::default()
    };
    let layout = Layout {
        n_aps: 1,
        n_users: 2,
        area_side: 100.0,
    };
    let scenario = Scenario::generate(1, &layout, &radio).expect("valid layout");
    let params = ComputeParams::default();
    let problem = Problem::new(ModelProfile::builtin("nin9").unwrap(), scenario, params.clone(), Weights::default())
        .expect("valid problem");

    let mut alloc = Allocation::uniform(&problem.scenario, params.r_box(), 0);
    alloc.users[0].beta_up = vec![1.0, 0.0];
    alloc.users[1].beta_up = vec![0.0, 1.0];

    println!("split   T_dev     T_edge    T_up      T_down    E_total   utility");
    for s in 0..=problem.num_layers() {
        let c = problem.system_breakdowns(&alloc, s)[0];
        println!(
            "{s:>5} {:>9.5} {:>9.5} {:>9.5} {:>9.5} {:>9.5} {:>9.5}",
            c.t_device, c.t_server, c.t_up, c.t_down, c.total_e, c.utility
        );
    }
}
