//! End-to-end checks of the public API: profiles, scenarios, solver output.

use noma_split::ligd::{cold_gd, li_gd};
use noma_split::scenario::Tensor3;
use noma_split::{
    ComputeParams, LayerProfile, ModelProfile, OptimizerConfig, Problem, RadioParams, Scenario, SolveResult,
    UnitCosts, Weights,
};

fn one_layer() -> ModelProfile {
    ModelProfile::new(
        vec![LayerProfile {
            conv_count: 10,
            pool_count: 0,
            relu_count: 0,
            output_bits: 1e3,
        }],
        UnitCosts {
            f_conv: 1e8,
            f_pool: 0.0,
            f_relu: 0.0,
        },
        1e3,
        10.0,
    )
    .unwrap()
}

#[test]
fn free_radio_and_fast_edge_offload_everything() {
    let radio = RadioParams {
        num_subchannels: 1,
        ..RadioParams::default()
    };
    let sc = Scenario::from_parts(
        radio,
        vec![[0.0, 0.0]],
        vec![[1.0, 0.0]],
        Tensor3::filled([1, 1, 1], 1e6),
        Tensor3::filled([1, 1, 1], 1e6),
    )
    .unwrap();
    let params = ComputeParams {
        c_device: 1e9,
        c_min: 1e10,
        ..ComputeParams::default()
    };
    let prob = Problem::new(one_layer(), sc, params, Weights::latency_only()).unwrap();
    let res = li_gd(&prob, &OptimizerConfig::default()).unwrap();
    assert_eq!(res.per_layer.len(), 2);
    assert_eq!(res.best_split, 0);
    assert!(res.per_layer[0].utility < res.per_layer[1].utility);
    // Device-only is exactly one second of local compute.
    assert!((res.per_layer[1].utility - 1.0).abs() < 1e-12);
}

fn tiny(seed: u64) -> Problem {
    let radio = RadioParams {
        num_subchannels: 2,
        ..RadioParams::default()
    };
    let layout = noma_split::Layout {
        n_aps: 2,
        n_users: 3,
        area_side: 150.0,
    };
    let sc = Scenario::generate(seed, &layout, &radio).unwrap();
    Problem::new(ModelProfile::synthetic(4), sc, ComputeParams::default(), Weights::default()).unwrap()
}

#[test]
fn solve_result_json_round_trip() {
    let res = li_gd(&tiny(5), &OptimizerConfig::default()).unwrap();
    let back: SolveResult = serde_json::from_str(&res.to_json().unwrap()).unwrap();
    assert_eq!(back, res);
    assert_eq!(res.trace_rows().count(), res.utility_trace.len());
}

#[test]
fn returned_allocations_are_feasible() {
    for seed in 0..5 {
        let prob = tiny(seed);
        for res in [
            li_gd(&prob, &OptimizerConfig::default()).unwrap(),
            cold_gd(&prob, &OptimizerConfig::default()).unwrap(),
        ] {
            res.best_alloc.validate(&prob.scenario, prob.params.r_box(), 0.0).unwrap();
            assert!(res.best_alloc.is_one_hot());
            let gamma = prob.system_utility(&res.best_alloc, res.best_split);
            assert!((gamma - res.rounded_utility).abs() <= 1e-12 * gamma);
        }
    }
}

#[test]
fn solver_is_deterministic_across_threads() {
    let prob = tiny(9);
    let a = li_gd(&prob, &OptimizerConfig::default()).unwrap();
    let b = std::thread::spawn(move || li_gd(&prob, &OptimizerConfig::default()).unwrap())
        .join()
        .unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn profile_names_resolve() {
    for name in ["nin9", "yolov2-17", "vgg16-24"] {
        let p = ModelProfile::resolve(name).unwrap();
        let depth: usize = name.rsplit('-').next().unwrap().trim_start_matches("nin").parse().unwrap();
        assert_eq!(p.num_layers(), depth);
    }
    assert_eq!(ModelProfile::resolve("synthetic-7").unwrap(), ModelProfile::synthetic(7));
    assert!(ModelProfile::resolve("synthetic-0").is_err());
    assert!(ModelProfile::resolve("resnet-50").is_err());
}

#[test]
fn profile_and_scenario_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let profile = ModelProfile::builtin("yolov2-17").unwrap();
    let path = dir.path().join("profile.json");
    std::fs::write(&path, serde_json::to_string(&profile).unwrap()).unwrap();
    assert_eq!(ModelProfile::resolve(path.to_str().unwrap()).unwrap(), profile);

    let sc = tiny(2).scenario;
    let path = dir.path().join("scenario.json");
    sc.save(&path).unwrap();
    assert_eq!(Scenario::load(&path).unwrap(), sc);
}

#[test]
fn shipped_configs_are_valid() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let config = noma_split::bench::ExperimentConfig::load(&path).unwrap();
        config.validate().unwrap();
        assert!(!config.settings().unwrap().is_empty(), "{}", path.display());
        n += 1;
    }
    assert!(n >= 5);
}

#[test]
fn readme_config_parses() {
    let readme = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../README.md")).unwrap();
    let body = readme.split("```json\n").nth(1).unwrap().split("```").next().unwrap();
    let config = noma_split::bench::ExperimentConfig::from_json_str(body).unwrap();
    config.validate().unwrap();
}
