//! Subchannel sweep at fixed total bandwidth, written as CSV.
//!
//! `cargo run --release --example sweep -- out_dir`

use std::path::PathBuf;

use noma_split::bench::{run, write_report, ExperimentConfig, Method, Sweep, SweepDim};
use noma_split::RateModel;

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "sweep_out".into()));
    let mut config = ExperimentConfig {
        seeds: vec![0, 1],
        n_users: 6,
        models: vec![RateModel::Noma],
        methods: vec![Method::Ecc, Method::DeviceOnly],
        sweep: Some(Sweep {
            dim: SweepDim::Subchannels,
            values: vec![2.0, 4.0, 8.0],
        }),
        ..ExperimentConfig::default()
    };
    config.radio.max_users_per_subchannel = 3;

    let output = run(&config).expect("valid config");
    write_report(&dir, &output).expect("writable output directory");
    for r in output.rows.iter().filter(|r| r.method == Method::Ecc) {
        println!("seed {} M = {:>2}: speedup {:.2}", r.seed, r.sweep_value, r.latency_speedup);
    }
    println!("wrote {}", dir.display());
}
