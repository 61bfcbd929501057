//! Chain-topology DNN profiles.
//!
//! A model is a sequence of `F` layer blocks. Block `δ` (1-based) holds some
//! number of convolution, pooling and ReLU operators; its work is the linear
//! combination of those counts with the per-operator [`UnitCosts`]. Splitting
//! at `s` runs blocks `1..=s` on the device and `s+1..=F` on the edge.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerProfile {
    #[serde(rename = "conv")]
    pub conv_count: u32,
    #[serde(rename = "pool")]
    pub pool_count: u32,
    #[serde(rename = "relu")]
    pub relu_count: u32,
    /// Size of this block's output activation in bits.
    pub output_bits: f64,
}

/// Work units per operator of each kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitCosts {
    pub f_conv: f64,
    pub f_pool: f64,
    pub f_relu: f64,
}

impl UnitCosts {
    pub fn scaled(&self, k: f64) -> UnitCosts {
        UnitCosts {
            f_conv: self.f_conv * k,
            f_pool: self.f_pool * k,
            f_relu: self.f_relu * k,
        }
    }
}

pub fn layer_work(layer: &LayerProfile, costs: &UnitCosts) -> f64 {
    layer.conv_count as f64 * costs.f_conv
        + layer.pool_count as f64 * costs.f_pool
        + layer.relu_count as f64 * costs.f_relu
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub layers: Vec<LayerProfile>,
    pub unit_costs: UnitCosts,
    /// Raw input size, sent when the whole model is offloaded (`s = 0`).
    pub input_bits: f64,
    /// Size of the final inference result returned on the downlink.
    pub result_bits: f64,
}

/// Names accepted by [`ModelProfile::builtin`].
pub const BUILTIN_PROFILES: [&str; 3] = ["nin9", "yolov2-17", "vgg16-24"];

// Generator constants for the built-in profiles. Work units are roughly
// FLOPs; activation sizes shrink geometrically from FIRST_OUTPUT_BITS to
// LAST_OUTPUT_BITS across the chain.
const GEN_UNIT_COSTS: UnitCosts = UnitCosts {
    f_conv: 40_000_000.0,
    f_pool: 2_000_000.0,
    f_relu: 1_000_000.0,
};
const GEN_INPUT_BITS: f64 = 224.0 * 224.0 * 3.0 * 8.0;
const GEN_FIRST_OUTPUT_BITS: f64 = 2.0 * GEN_INPUT_BITS;
const GEN_LAST_OUTPUT_BITS: f64 = 4096.0;
const GEN_RESULT_BITS: f64 = 320.0;

impl ModelProfile {
    pub fn new(
        layers: Vec<LayerProfile>,
        unit_costs: UnitCosts,
        input_bits: f64,
        result_bits: f64,
    ) -> Result<Self> {
        let profile = ModelProfile {
            layers,
            unit_costs,
            input_bits,
            result_bits,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// One of the synthetic chain models in [`BUILTIN_PROFILES`].
    pub fn builtin(name: &str) -> Result<Self> {
        let depth = match name {
            "nin9" => 9,
            "yolov2-17" => 17,
            "vgg16-24" => 24,
            _ => return Err(Error::UnknownProfile(name.to_string())),
        };
        Ok(Self::synthetic(depth))
    }

    /// Deterministic synthetic chain of `depth` blocks.
    ///
    /// Every block has one or two convolutions followed by as many ReLUs;
    /// every third block ends with a pooling stage.
    pub fn synthetic(depth: usize) -> Self {
        assert!(depth >= 1, "a model needs at least one layer");
        let ratio = if depth > 1 {
            (GEN_LAST_OUTPUT_BITS / GEN_FIRST_OUTPUT_BITS).powf(1.0 / (depth - 1) as f64)
        } else {
            1.0
        };
        let layers = (1..=depth)
            .map(|delta| {
                let pooled = delta % 3 == 0;
                let conv = if delta % 2 == 0 { 2 } else { 1 };
                let bits = (GEN_FIRST_OUTPUT_BITS * ratio.powi(delta as i32 - 1)).round();
                LayerProfile {
                    conv_count: conv,
                    pool_count: pooled as u32,
                    relu_count: conv,
                    output_bits: bits,
                }
            })
            .collect();
        ModelProfile {
            layers,
            unit_costs: GEN_UNIT_COSTS,
            input_bits: GEN_INPUT_BITS,
            result_bits: GEN_RESULT_BITS,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let profile: ModelProfile = serde_json::from_str(s)?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Built-in name, `synthetic-<depth>`, or path to a JSON profile.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        let depth = name_or_path
            .strip_prefix("synthetic-")
            .and_then(|d| d.parse::<usize>().ok())
            .filter(|&d| d >= 1);
        if BUILTIN_PROFILES.contains(&name_or_path) {
            Self::builtin(name_or_path)
        } else if let Some(depth) = depth {
            Ok(Self::synthetic(depth))
        } else if Path::new(name_or_path).exists() {
            Self::load(name_or_path)
        } else {
            Err(Error::UnknownProfile(name_or_path.to_string()))
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::invalid("profile", "needs at least one layer"));
        }
        let c = &self.unit_costs;
        let costs = [c.f_conv, c.f_pool, c.f_relu];
        if costs.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("profile", "unit costs must be finite and >= 0"));
        }
        if costs.iter().all(|v| *v == 0.0) {
            return Err(Error::invalid("profile", "unit costs are all zero"));
        }
        let bits_ok = |b: f64| b.is_finite() && b >= 0.0;
        if !bits_ok(self.input_bits) || !bits_ok(self.result_bits) {
            return Err(Error::invalid("profile", "input/result bits must be finite and >= 0"));
        }
        if let Some(pos) = self.layers.iter().position(|l| !bits_ok(l.output_bits)) {
            return Err(Error::invalid(
                "profile",
                format!("layer {} has invalid output_bits", pos + 1),
            ));
        }
        if self.total_work() <= 0.0 {
            return Err(Error::invalid("profile", "total work must be positive"));
        }
        Ok(())
    }

    /// Number of layer blocks `F`.
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Copy with every layer's work multiplied by `k`.
    pub fn with_workload(&self, k: f64) -> Self {
        ModelProfile {
            unit_costs: self.unit_costs.scaled(k),
            ..self.clone()
        }
    }

    /// Work of block `delta` (1-based).
    pub fn layer_work(&self, delta: usize) -> f64 {
        layer_work(&self.layers[delta - 1], &self.unit_costs)
    }

    /// Work of the whole model, `Z`.
    pub fn total_work(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| layer_work(l, &self.unit_costs))
            .sum()
    }

    fn check_split(&self, s: usize) -> Result<()> {
        if s > self.num_layers() {
            return Err(Error::SplitOutOfRange {
                split: s,
                layers: self.num_layers(),
            });
        }
        Ok(())
    }

    /// Work executed on the device for split `s`.
    pub fn device_work(&self, s: usize) -> Result<f64> {
        self.check_split(s)?;
        Ok(self.layers[..s]
            .iter()
            .fold(0.0, |acc, l| acc + layer_work(l, &self.unit_costs)))
    }

    /// Work executed on the edge for split `s`: `Z - device_work(s)`.
    pub fn edge_work(&self, s: usize) -> Result<f64> {
        Ok(self.total_work() - self.device_work(s)?)
    }

    /// Bits sent on the uplink for split `s`.
    ///
    /// The raw input at `s = 0`, block `s`'s activation for interior splits,
    /// and nothing at `s = F` where no edge work remains.
    pub fn cut_bits(&self, s: usize) -> Result<f64> {
        self.check_split(s)?;
        if s == 0 {
            Ok(self.input_bits)
        } else if s == self.num_layers() {
            Ok(0.0)
        } else {
            Ok(self.layers[s - 1].output_bits)
        }
    }

    /// Bits returned on the downlink for split `s` (zero when run fully on device).
    pub fn result_bits_at(&self, s: usize) -> Result<f64> {
        self.check_split(s)?;
        Ok(if s == self.num_layers() {
            0.0
        } else {
            self.result_bits
        })
    }

    /// Precomputed per-split aggregates, indexed by `s` in `0..=F`.
    pub fn split_table(&self) -> Vec<SplitCosts> {
        (0..=self.num_layers())
            .map(|s| SplitCosts {
                device_work: self.device_work(s).unwrap(),
                edge_work: self.edge_work(s).unwrap(),
                cut_bits: self.cut_bits(s).unwrap(),
                result_bits: self.result_bits_at(s).unwrap(),
            })
            .collect()
    }
}

/// The four split-dependent quantities the cost model consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCosts {
    pub device_work: f64,
    pub edge_work: f64,
    pub cut_bits: f64,
    pub result_bits: f64,
}
