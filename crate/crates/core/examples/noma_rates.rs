//! Draws a small network and compares NOMA and OMA rates when every user
//! spreads evenly over the subchannels.

use noma_split::scenario::Link;
use noma_split::{Allocation, ComputeParams, Layout, RadioParams, RateModel, Scenario};
use noma_split::radio::rate_with;

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
    let scenario = Scenario::generate(7, &layout, &radio).expect("valid layout");
    let alloc = Allocation::uniform(&scenario, ComputeParams::default().r_box(), 0);

    println!("user  ap   up NOMA Mb/s   up OMA Mb/s   down NOMA Mb/s   down OMA Mb/s");
    for i in 0..scenario.num_users() {
        let r = |link, model| rate_with(&scenario, &alloc, i, link, model) / 1e6;
        println!(
            "{i:>4} {:>3} {:>14.3} {:>13.3} {:>16.3} {:>15.3}",
            scenario.serving_ap(i),
            r(Link::Up, RateModel::Noma),
            r(Link::Up, RateModel::Oma),
            r(Link::Down, RateModel::Noma),
            r(Link::Down, RateModel::Oma),
        );
    }
}
