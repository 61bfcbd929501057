//! Prints the per-split workload and cut sizes of a chain model.
//!
//! `cargo run --example profile_splits -- vgg16-24`

use noma_split::ModelProfile;

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "nin9".into());
    let profile = ModelProfile::resolve(&name).expect("known profile or JSON path");
    println!("{name}: {} layers, total work {:.3e}", profile.num_layers(), profile.total_work());
    println!("{:>5} {:>14} {:>14} {:>12} {:>12}", "split", "device_work", "edge_work", "cut_bits", "result_bits");
    for (s, row) in profile.split_table().iter().enumerate() {
        println!(
            "{s:>5} {:>14.4e} {:>14.4e} {:>12.4e} {:>12.4e}",
            row.device_work, row.edge_work, row.cut_bits, row.result_bits
        );
    }
}
