//! Delay and energy of split inference, the weighted utility and its gradient.
//!
//! Per user `i` at split `s`:
//!
//! ```text
//! T_i = f_l/c_i + f_e/(λ(r_i) c_min) + w_s/R_i + m_i/Φ_i
//! E_i = ξ_i c_i² φ_i f_l + ξ_e (λ(r_i) c_min)² φ_e f_e + p_i w_s/R_i + P_i m_i/Φ_i
//! U_i = ω_T T_i + ω_E E_i,       Γ_s = Σ_i U_i
//! ```
//!
//! with `λ(r) = r^α`, `R_i`/`Φ_i` the uplink/downlink rates from [`crate::radio`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{ModelProfile, SplitCosts};
use crate::radio::{Allocation, LinkState, LinkTables, RateModel, UserAlloc};
use crate::scenario::{Link, Scenario};

/// Transmission delays are capped at this value inside the optimizer.
pub const DELAY_CAP_S: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComputeParams {
    /// Device capability `c_i`, work units/s.
    pub c_device: f64,
    /// Capability of one edge resource unit `c_min`, work units/s.
    pub c_min: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Exponent `α` of the compensation function `λ(r) = r^α`.
    pub lambda_alpha: f64,
    pub xi_device: f64,
    pub xi_edge: f64,
    /// CPU cycles per work unit on the device.
    pub phi_device: f64,
    pub phi_edge: f64,
}

impl Default for ComputeParams {
    /// One edge unit is 10x the device; at `r = 1` both spend the same
    /// energy per work unit, and more units cost quadratically more.
    fn default() -> Self {
        ComputeParams {
            c_device: 1e9,
            c_min: 1e10,
            r_min: 1.0,
            r_max: 4.0,
            lambda_alpha: 1.3,
            xi_device: 5e-32,
            xi_edge: 5e-34,
            phi_device: 1e4,
            phi_edge: 1e4,
        }
    }
}

impl ComputeParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.c_device,
            self.c_min,
            self.r_min,
            self.r_max,
            self.xi_device,
            self.xi_edge,
            self.phi_device,
            self.phi_edge,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("compute params", "all parameters must be positive"));
        }
        if self.r_min > self.r_max {
            return Err(Error::invalid("compute params", "r_min > r_max"));
        }
        if !(self.lambda_alpha >= 1.0) {
            return Err(Error::invalid("compute params", "lambda_alpha must be >= 1"));
        }
        Ok(())
    }

    /// Compensation function `λ(r)`.
    pub fn lambda(&self, r: f64) -> f64 {
        r.powf(self.lambda_alpha)
    }

    pub fn r_box(&self) -> (f64, f64) {
        (self.r_min, self.r_max)
    }

    fn check_r(&self, r: f64) -> Result<()> {
        if r.is_finite() && r >= self.r_min && r <= self.r_max {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                name: "r",
                value: r,
                min: self.r_min,
                max: self.r_max,
            })
        }
    }

    /// Energy per device work unit, `ξ_i c_i² φ_i`.
    fn device_energy_per_work(&self, c_device: f64) -> f64 {
        self.xi_device * c_device * c_device * self.phi_device
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub w_t: f64,
    pub w_e: f64,
}

impl Weights {
    pub fn new(w_t: f64, w_e: f64) -> Result<Self> {
        let w = Weights { w_t, w_e };
        w.validate()?;
        Ok(w)
    }

    pub fn latency_only() -> Self {
        Weights { w_t: 1.0, w_e: 0.0 }
    }

    pub fn energy_only() -> Self {
        Weights { w_t: 0.0, w_e: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |w: f64| (0.0..=1.0).contains(&w);
        if !unit(self.w_t) || !unit(self.w_e) || (self.w_t + self.w_e - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("weights", format!("need w_T + w_E = 1, got {self:?}")));
        }
        Ok(())
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights { w_t: 0.8, w_e: 0.2 }
    }
}

/// Delay (s) and energy (J) components of one user's task.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub t_device: f64,
    pub t_server: f64,
    pub t_up: f64,
    pub t_down: f64,
    pub e_device: f64,
    pub e_up: f64,
    pub e_edge: f64,
    pub e_down: f64,
    pub total_t: f64,
    pub total_e: f64,
    pub utility: f64,
}

impl CostBreakdown {
    /// Fills the totals from the components.
    pub fn from_parts(
        [t_device, t_server, t_up, t_down]: [f64; 4],
        [e_device, e_up, e_edge, e_down]: [f64; 4],
        weights: &Weights,
    ) -> Self {
        let total_t = total_latency(t_device, t_server, t_up, t_down);
        let total_e = e_device + e_up + e_edge + e_down;
        CostBreakdown {
            t_device,
            t_server,
            t_up,
            t_down,
            e_device,
            e_up,
            e_edge,
            e_down,
            total_t,
            total_e,
            utility: weights.w_t * total_t + weights.w_e * total_e,
        }
    }
}

pub fn device_delay(profile: &ModelProfile, s: usize, params: &ComputeParams) -> Result<f64> {
    Ok(profile.device_work(s)? / params.c_device)
}

pub fn edge_delay(profile: &ModelProfile, s: usize, r: f64, params: &ComputeParams) -> Result<f64> {
    params.check_r(r)?;
    Ok(profile.edge_work(s)? / (params.lambda(r) * params.c_min))
}

fn transfer_delay(bits: f64, rate: f64) -> f64 {
    if bits == 0.0 {
        0.0
    } else if rate > 0.0 {
        bits / rate
    } else {
        f64::INFINITY
    }
}

/// Intermediate-activation upload time; infinite when nothing can be sent.
pub fn uplink_delay(profile: &ModelProfile, s: usize, rate: f64) -> Result<f64> {
    Ok(transfer_delay(profile.cut_bits(s)?, rate))
}

pub fn downlink_delay(profile: &ModelProfile, s: usize, rate: f64) -> Result<f64> {
    Ok(transfer_delay(profile.result_bits_at(s)?, rate))
}

pub fn total_latency(t_device: f64, t_server: f64, t_up: f64, t_down: f64) -> f64 {
    t_device + t_server + t_up + t_down
}

pub fn device_energy(profile: &ModelProfile, s: usize, params: &ComputeParams) -> Result<f64> {
    Ok(params.device_energy_per_work(params.c_device) * profile.device_work(s)?)
}

pub fn uplink_energy(p_up: f64, uplink_delay: f64) -> f64 {
    if uplink_delay == 0.0 {
        0.0
    } else {
        p_up * uplink_delay
    }
}

pub fn downlink_energy(p_down: f64, downlink_delay: f64) -> f64 {
    uplink_energy(p_down, downlink_delay)
}

pub fn edge_energy(profile: &ModelProfile, s: usize, r: f64, params: &ComputeParams) -> Result<f64> {
    params.check_r(r)?;
    let speed = params.lambda(r) * params.c_min;
    Ok(params.xi_edge * speed * speed * params.phi_edge * profile.edge_work(s)?)
}

/// Gradient of `Γ_s` over every continuous variable, laid out per user.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocGradient {
    pub subchannels: usize,
    /// `[i * M + m]`
    pub beta_up: Vec<f64>,
    /// `[i * M + k]`
    pub beta_down: Vec<f64>,
    pub p_up: Vec<f64>,
    pub p_down: Vec<f64>,
    pub r: Vec<f64>,
}

impl AllocGradient {
    fn zeros(users: usize, subchannels: usize) -> Self {
        AllocGradient {
            subchannels,
            beta_up: vec![0.0; users * subchannels],
            beta_down: vec![0.0; users * subchannels],
            p_up: vec![0.0; users],
            p_down: vec![0.0; users],
            r: vec![0.0; users],
        }
    }

    pub fn beta(&self, link: Link, i: usize) -> &[f64] {
        let m = self.subchannels;
        match link {
            Link::Up => &self.beta_up[i * m..(i + 1) * m],
            Link::Down => &self.beta_down[i * m..(i + 1) * m],
        }
    }

    /// All components in a fixed order.
    pub fn components(&self) -> impl Iterator<Item = f64> + '_ {
        self.beta_up
            .iter()
            .chain(&self.beta_down)
            .chain(&self.p_up)
            .chain(&self.p_down)
            .chain(&self.r)
            .copied()
    }
}

/// A fully specified instance: model, network, parameters and weights.
///
/// Interference structure is precomputed once, so evaluating the utility or
/// its gradient for an allocation costs `O(U² M)`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub profile: ModelProfile,
    pub scenario: Scenario,
    pub params: ComputeParams,
    /// Per-user utility weights.
    pub weights: Vec<Weights>,
    /// Per-user device capability `c_i`.
    pub c_device: Vec<f64>,
    rate_model: RateModel,
    splits: Vec<SplitCosts>,
    up: LinkTables,
    down: LinkTables,
}

impl Problem {
    pub fn new(
        profile: ModelProfile,
        scenario: Scenario,
        params: ComputeParams,
        weights: Weights,
    ) -> Result<Self> {
        profile.validate()?;
        scenario.validate()?;
        params.validate()?;
        weights.validate()?;
        let u = scenario.num_users();
        Ok(Problem {
            splits: profile.split_table(),
            up: LinkTables::new(&scenario, Link::Up, RateModel::Noma),
            down: LinkTables::new(&scenario, Link::Down, RateModel::Noma),
            weights: vec![weights; u],
            c_device: vec![params.c_device; u],
            rate_model: RateModel::Noma,
            profile,
            scenario,
            params,
        })
    }

    pub fn with_rate_model(mut self, model: RateModel) -> Self {
        if model != self.rate_model {
            self.up = LinkTables::new(&self.scenario, Link::Up, model);
            self.down = LinkTables::new(&self.scenario, Link::Down, model);
            self.rate_model = model;
        }
        self
    }

    pub fn with_user_weights(mut self, weights: Vec<Weights>) -> Result<Self> {
        if weights.len() != self.num_users() {
            return Err(Error::invalid("weights", "need one entry per user"));
        }
        for w in &weights {
            w.validate()?;
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn rate_model(&self) -> RateModel {
        self.rate_model
    }

    pub fn num_users(&self) -> usize {
        self.scenario.num_users()
    }

    pub fn num_layers(&self) -> usize {
        self.profile.num_layers()
    }

    pub fn split_costs(&self, s: usize) -> &SplitCosts {
        &self.splits[s]
    }

    /// Uplink and downlink rates of every user.
    pub fn rates(&self, alloc: &Allocation) -> (Vec<f64>, Vec<f64>) {
        (self.up.evaluate(alloc).rate, self.down.evaluate(alloc).rate)
    }

    /// Cost of every user at the split stored in `alloc`.
    pub fn breakdowns(&self, alloc: &Allocation) -> Vec<CostBreakdown> {
        self.breakdowns_inner(alloc, None, false)
    }

    /// Cost of user `i` at the split stored in `alloc`.
    pub fn utility(&self, alloc: &Allocation, i: usize) -> CostBreakdown {
        self.breakdowns(alloc)[i]
    }

    /// `Γ_s`: summed utility with every user at split `s`.
    pub fn system_utility(&self, alloc: &Allocation, s: usize) -> f64 {
        sum_utility(&self.breakdowns_inner(alloc, Some(s), false))
    }

    /// `Γ_s` with transfer delays capped at [`DELAY_CAP_S`], as seen by the optimizer.
    pub fn capped_system_utility(&self, alloc: &Allocation, s: usize) -> f64 {
        sum_utility(&self.breakdowns_inner(alloc, Some(s), true))
    }

    pub fn system_breakdowns(&self, alloc: &Allocation, s: usize) -> Vec<CostBreakdown> {
        self.breakdowns_inner(alloc, Some(s), false)
    }

    fn breakdowns_inner(&self, alloc: &Allocation, split: Option<usize>, capped: bool) -> Vec<CostBreakdown> {
        let up = self.up.evaluate(alloc);
        let down = self.down.evaluate(alloc);
        alloc
            .users
            .iter()
            .enumerate()
            .map(|(i, ua)| {
                let s = split.unwrap_or(ua.split);
                self.user_cost(i, s, ua, up.rate[i], down.rate[i], capped)
            })
            .collect()
    }

    /// Cost of user `i` at split `s` with externally supplied link rates.
    /// Subchannel weights in `ua` are ignored.
    pub fn cost_at_rates(&self, i: usize, s: usize, ua: &UserAlloc, rate_up: f64, rate_down: f64) -> CostBreakdown {
        self.user_cost(i, s, ua, rate_up, rate_down, false)
    }

    fn user_cost(&self, i: usize, s: usize, ua: &UserAlloc, rate_up: f64, rate_down: f64, capped: bool) -> CostBreakdown {
        let sc = &self.splits[s];
        let p = &self.params;
        let cap = |t: f64| if capped { t.min(DELAY_CAP_S) } else { t };
        let t_device = sc.device_work / self.c_device[i];
        let speed = p.lambda(ua.r) * p.c_min;
        let t_server = sc.edge_work / speed;
        let t_up = cap(transfer_delay(sc.cut_bits, rate_up));
        let t_down = cap(transfer_delay(sc.result_bits, rate_down));
        let e_device = p.device_energy_per_work(self.c_device[i]) * sc.device_work;
        let e_edge = p.xi_edge * speed * speed * p.phi_edge * sc.edge_work;
        CostBreakdown::from_parts(
            [t_device, t_server, t_up, t_down],
            [
                e_device,
                uplink_energy(ua.p_up, t_up),
                e_edge,
                downlink_energy(ua.p_down, t_down),
            ],
            &self.weights[i],
        )
    }

    /// Analytic gradient of the capped `Γ_s` at `alloc`.
    ///
    /// Each user's transfer term `(ω_T + ω_E p) w / R` contributes through its
    /// own rate (subchannel weight and own power) and through every other
    /// user's rate it degrades (interference cross-terms).
    pub fn gradient(&self, alloc: &Allocation, s: usize) -> AllocGradient {
        let (u, mc) = (self.num_users(), self.scenario.num_subchannels());
        let mut grad = AllocGradient::zeros(u, mc);
        let sc = &self.splits[s];
        let p = &self.params;

        for (link, tables, bits) in [
            (Link::Up, &self.up, sc.cut_bits),
            (Link::Down, &self.down, sc.result_bits),
        ] {
            if bits == 0.0 {
                continue;
            }
            let state: LinkState = tables.evaluate(alloc);
            let mut coef = vec![0.0; u];
            let direct = match link {
                Link::Up => &mut grad.p_up,
                Link::Down => &mut grad.p_down,
            };
            for i in 0..u {
                let rate = state.rate[i];
                let delay = transfer_delay(bits, rate);
                if !(delay < DELAY_CAP_S) {
                    continue;
                }
                let w = &self.weights[i];
                let power = alloc.users[i].power(link);
                coef[i] = -(w.w_t + w.w_e * power) * bits / (rate * rate);
                direct[i] += w.w_e * delay;
            }
            let (gb, gp) = match link {
                Link::Up => (&mut grad.beta_up, &mut grad.p_up),
                Link::Down => (&mut grad.beta_down, &mut grad.p_down),
            };
            tables.rate_gradient(alloc, &state, &coef, gb, gp);
        }

        if sc.edge_work > 0.0 {
            let a = p.lambda_alpha;
            for (i, ua) in alloc.users.iter().enumerate() {
                let w = &self.weights[i];
                let dt = -a * sc.edge_work / (ua.r.powf(a + 1.0) * p.c_min);
                let de = 2.0 * a * p.xi_edge * p.c_min * p.c_min * p.phi_edge * sc.edge_work
                    * ua.r.powf(2.0 * a - 1.0);
                grad.r[i] = w.w_t * dt + w.w_e * de;
            }
        }
        grad
    }
}

fn sum_utility(b: &[CostBreakdown]) -> f64 {
    b.iter().map(|c| c.utility).sum()
}
