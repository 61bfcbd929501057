//! SINR and achievable rates on the NOMA uplink/downlink.
//!
//! Subchannel indicators are relaxed to `β ∈ [0, 1]` with `Σ_m β_m = 1` per
//! user. A user's rate is `Σ_m ρ_m · (B/M) · log2(1 + SINR_m)` where the
//! weight `ρ_m` is `β_m` under NOMA. Interference from user `v` is gated by
//! `β_v`, exactly like the received-power sums of the SINR expressions.
//!
//! Interference seen by user `j` on subchannel `m`:
//!
//! * uplink, at `j`'s AP: every user of another AP on `m`, plus same-AP users
//!   decoded after `j` (weaker uplink gain, SIC decodes strongest first);
//! * downlink, at user `j`: every other AP's transmissions on `m`, plus
//!   superposed signals for same-AP users decoded after `j` (stronger
//!   downlink gain, SIC decodes weakest first). Both reach `j` through the
//!   gain from the transmitting AP to `j`.
//!
//! [`RateModel::Oma`] removes intra-cell interference and instead
//! time-shares each (AP, subchannel) among its users: `ρ_m = β_m² / Σ_v β_v,m`
//! over users `v` of the same AP, which is `1/K` for `K` one-hot users.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::scenario::{Link, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateModel {
    #[default]
    Noma,
    Oma,
}

/// Decision variables of one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAlloc {
    /// Uplink subchannel weights at the serving AP, length `M`.
    pub beta_up: Vec<f64>,
    /// Downlink subchannel weights at the serving AP, length `M`.
    pub beta_down: Vec<f64>,
    /// Device transmit power, W.
    pub p_up: f64,
    /// AP transmit power toward this user, W.
    pub p_down: f64,
    /// Edge compute units.
    pub r: f64,
    /// Split layer `s`.
    pub split: usize,
}

impl UserAlloc {
    pub fn beta(&self, link: Link) -> &[f64] {
        match link {
            Link::Up => &self.beta_up,
            Link::Down => &self.beta_down,
        }
    }

    pub fn power(&self, link: Link) -> f64 {
        match link {
            Link::Up => self.p_up,
            Link::Down => self.p_down,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub users: Vec<UserAlloc>,
}

impl Allocation {
    /// Uniform `β`, powers and `r` at the midpoints of their boxes.
    pub fn uniform(scenario: &Scenario, r_box: (f64, f64), split: usize) -> Self {
        let m = scenario.num_subchannels();
        let radio = &scenario.radio;
        let user = UserAlloc {
            beta_up: vec![1.0 / m as f64; m],
            beta_down: vec![1.0 / m as f64; m],
            p_up: 0.5 * (radio.p_min + radio.p_max),
            p_down: 0.5 * (radio.pd_min + radio.pd_max),
            r: 0.5 * (r_box.0 + r_box.1),
            split,
        };
        Allocation {
            users: vec![user; scenario.num_users()],
        }
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn with_split(mut self, split: usize) -> Self {
        for u in &mut self.users {
            u.split = split;
        }
        self
    }

    /// Checks shapes, boxes and the per-user simplex sums within `tol`.
    pub fn validate(&self, scenario: &Scenario, r_box: (f64, f64), tol: f64) -> Result<()> {
        let m = scenario.num_subchannels();
        if self.users.len() != scenario.num_users() {
            return Err(Error::invalid("allocation", "user count does not match scenario"));
        }
        let radio = &scenario.radio;
        let within = |name, v: f64, (lo, hi): (f64, f64)| {
            if v.is_finite() && v >= lo - tol && v <= hi + tol {
                Ok(())
            } else {
                Err(Error::OutOfBounds {
                    name,
                    value: v,
                    min: lo,
                    max: hi,
                })
            }
        };
        for u in &self.users {
            for beta in [&u.beta_up, &u.beta_down] {
                if beta.len() != m {
                    return Err(Error::invalid("allocation", "beta length must equal M"));
                }
                for &b in beta {
                    within("beta", b, (0.0, 1.0))?;
                }
                let sum: f64 = beta.iter().sum();
                if (sum - 1.0).abs() > tol {
                    return Err(Error::invalid("allocation", format!("beta sums to {sum}")));
                }
            }
            within("p_up", u.p_up, (radio.p_min, radio.p_max))?;
            within("p_down", u.p_down, (radio.pd_min, radio.pd_max))?;
            within("r", u.r, r_box)?;
        }
        Ok(())
    }

    pub fn is_one_hot(&self) -> bool {
        self.users.iter().all(|u| {
            [&u.beta_up, &u.beta_down].iter().all(|b| {
                b.iter().all(|&x| x == 0.0 || x == 1.0) && b.iter().filter(|&&x| x == 1.0).count() == 1
            })
        })
    }
}

/// Gain through which user `v`'s signal reaches the decoder of user `j` on
/// subchannel `m`, or `None` when `v` does not interfere with `j`.
pub(crate) fn coupling(
    scenario: &Scenario,
    link: Link,
    model: RateModel,
    v: usize,
    j: usize,
    m: usize,
) -> Option<f64> {
    if v == j {
        return None;
    }
    let ap_j = scenario.serving_ap(j);
    let ap_v = scenario.serving_ap(v);
    let same_cell = ap_j == ap_v;
    if same_cell {
        if model == RateModel::Oma {
            return None;
        }
        let gj = scenario.gain(link, j, ap_j, m);
        let gv = scenario.gain(link, v, ap_j, m);
        let after = match link {
            Link::Up => gv < gj || (gv == gj && v > j),
            Link::Down => gv > gj || (gv == gj && v > j),
        };
        if !after {
            return None;
        }
    }
    Some(match link {
        Link::Up => scenario.gain(Link::Up, v, ap_j, m),
        Link::Down => scenario.gain(Link::Down, j, ap_v, m),
    })
}

fn sinr(scenario: &Scenario, alloc: &Allocation, link: Link, model: RateModel, j: usize, m: usize) -> f64 {
    let ap = scenario.serving_ap(j);
    let mut denom = scenario.radio.noise_power(link);
    for (v, user) in alloc.users.iter().enumerate() {
        if let Some(c) = coupling(scenario, link, model, v, j, m) {
            denom += user.beta(link)[m] * user.power(link) * c;
        }
    }
    alloc.users[j].power(link) * scenario.gain(link, j, ap, m) / denom
}

/// Rate weight `ρ` of user `j` on subchannel `m`.
fn rate_weight(scenario: &Scenario, alloc: &Allocation, link: Link, model: RateModel, j: usize, m: usize) -> f64 {
    let b = alloc.users[j].beta(link)[m];
    match model {
        RateModel::Noma => b,
        RateModel::Oma => {
            let ap = scenario.serving_ap(j);
            let share: f64 = (0..alloc.num_users())
                .filter(|&v| scenario.serving_ap(v) == ap)
                .map(|v| alloc.users[v].beta(link)[m])
                .sum();
            if share > 0.0 {
                b * b / share
            } else {
                0.0
            }
        }
    }
}

fn rate(scenario: &Scenario, alloc: &Allocation, link: Link, model: RateModel, j: usize) -> f64 {
    let c = scenario.radio.subchannel_bandwidth(link);
    (0..scenario.num_subchannels())
        .map(|m| {
            let w = rate_weight(scenario, alloc, link, model, j, m);
            if w == 0.0 {
                0.0
            } else {
                w * c * sinr(scenario, alloc, link, model, j, m).ln_1p() / LN_2
            }
        })
        .sum()
}

/// Uplink SINR of user `i` on subchannel `m` at its serving AP.
pub fn uplink_sinr(scenario: &Scenario, alloc: &Allocation, i: usize, m: usize) -> f64 {
    sinr(scenario, alloc, Link::Up, RateModel::Noma, i, m)
}

/// Uplink rate of user `i`, bit/s.
pub fn uplink_rate(scenario: &Scenario, alloc: &Allocation, i: usize) -> f64 {
    rate(scenario, alloc, Link::Up, RateModel::Noma, i)
}

/// Downlink SINR of user `i` on subchannel `k`.
pub fn downlink_sinr(scenario: &Scenario, alloc: &Allocation, i: usize, k: usize) -> f64 {
    sinr(scenario, alloc, Link::Down, RateModel::Noma, i, k)
}

/// Downlink rate of user `i`, bit/s.
pub fn downlink_rate(scenario: &Scenario, alloc: &Allocation, i: usize) -> f64 {
    rate(scenario, alloc, Link::Down, RateModel::Noma, i)
}

/// Rate of user `i` with exclusive (time-shared) subchannel occupancy.
pub fn oma_rate(scenario: &Scenario, alloc: &Allocation, i: usize, link: Link) -> f64 {
    rate(scenario, alloc, link, RateModel::Oma, i)
}

pub fn rate_with(scenario: &Scenario, alloc: &Allocation, i: usize, link: Link, model: RateModel) -> f64 {
    rate(scenario, alloc, link, model, i)
}

/// Interference structure of one direction, fixed for a scenario.
#[derive(Debug, Clone)]
pub(crate) struct LinkTables {
    pub link: Link,
    pub model: RateModel,
    pub users: usize,
    pub subchannels: usize,
    pub bandwidth: f64,
    pub noise: f64,
    /// `[j * M + m]` gain of `j`'s own signal.
    pub signal: Vec<f64>,
    /// `[j * M + m]` interferers `(v, coupling gain)`.
    pub interferers: Vec<Vec<(usize, f64)>>,
    /// Users of every AP, indexed by the serving AP of `j`.
    pub cell_of: Vec<usize>,
    pub cells: Vec<Vec<usize>>,
}

impl LinkTables {
    pub fn new(scenario: &Scenario, link: Link, model: RateModel) -> Self {
        let (u, m_count) = (scenario.num_users(), scenario.num_subchannels());
        let mut signal = Vec::with_capacity(u * m_count);
        let mut interferers = Vec::with_capacity(u * m_count);
        for j in 0..u {
            let ap = scenario.serving_ap(j);
            for m in 0..m_count {
                signal.push(scenario.gain(link, j, ap, m));
                interferers.push(
                    (0..u)
                        .filter_map(|v| coupling(scenario, link, model, v, j, m).map(|c| (v, c)))
                        .collect(),
                );
            }
        }
        let cells = (0..scenario.num_aps()).map(|n| scenario.users_of(n)).collect();
        LinkTables {
            link,
            model,
            users: u,
            subchannels: m_count,
            bandwidth: scenario.radio.subchannel_bandwidth(link),
            noise: scenario.radio.noise_power(link),
            signal,
            interferers,
            cell_of: scenario.association.clone(),
            cells,
        }
    }

    /// Evaluates SINRs and rates for every user under `alloc`.
    pub fn evaluate(&self, alloc: &Allocation) -> LinkState {
        let mc = self.subchannels;
        let n = self.users * mc;
        let mut state = LinkState {
            denom: vec![0.0; n],
            sinr: vec![0.0; n],
            log_term: vec![0.0; n],
            weight: vec![0.0; n],
            cell_share: vec![0.0; self.cells.len() * mc],
            rate: vec![0.0; self.users],
        };
        if self.model == RateModel::Oma {
            for (cell, members) in self.cells.iter().enumerate() {
                for m in 0..mc {
                    state.cell_share[cell * mc + m] =
                        members.iter().map(|&v| alloc.users[v].beta(self.link)[m]).sum();
                }
            }
        }
        for j in 0..self.users {
            let uj = &alloc.users[j];
            let beta_j = uj.beta(self.link);
            let pj = uj.power(self.link);
            let mut rate = 0.0;
            for m in 0..mc {
                let idx = j * mc + m;
                let mut d = self.noise;
                for &(v, c) in &self.interferers[idx] {
                    let uv = &alloc.users[v];
                    d += uv.beta(self.link)[m] * uv.power(self.link) * c;
                }
                let g = pj * self.signal[idx] / d;
                let l = g.ln_1p() / LN_2;
                let b = beta_j[m];
                let w = match self.model {
                    RateModel::Noma => b,
                    RateModel::Oma => {
                        let s = state.cell_share[self.cell_of[j] * mc + m];
                        if s > 0.0 {
                            b * b / s
                        } else {
                            0.0
                        }
                    }
                };
                state.denom[idx] = d;
                state.sinr[idx] = g;
                state.log_term[idx] = l;
                state.weight[idx] = w;
                rate += w * self.bandwidth * l;
            }
            state.rate[j] = rate;
        }
        state
    }

    /// Accumulates `Σ_j coef[j] · ∂R_j/∂x` into the `β` and power gradients.
    ///
    /// `coef[j]` is `∂Γ/∂R_j`. Results are added to `grad_beta[v * M + m]`
    /// and `grad_power[v]`.
    pub fn rate_gradient(
        &self,
        alloc: &Allocation,
        state: &LinkState,
        coef: &[f64],
        grad_beta: &mut [f64],
        grad_power: &mut [f64],
    ) {
        let mc = self.subchannels;
        let c = self.bandwidth;
        for j in 0..self.users {
            let cj = coef[j];
            if cj == 0.0 {
                continue;
            }
            let uj = &alloc.users[j];
            for m in 0..mc {
                let idx = j * mc + m;
                let l = state.log_term[idx];
                let w = state.weight[idx];
                // Weight term.
                match self.model {
                    RateModel::Noma => grad_beta[idx] += cj * c * l,
                    RateModel::Oma => {
                        let s = state.cell_share[self.cell_of[j] * mc + m];
                        let b = uj.beta(self.link)[m];
                        if s > 0.0 {
                            let q = b / s;
                            for &v in &self.cells[self.cell_of[j]] {
                                let dw = if v == j { 2.0 * q - q * q } else { -q * q };
                                grad_beta[v * mc + m] += cj * c * l * dw;
                            }
                        } else {
                            grad_beta[idx] += cj * c * l;
                        }
                    }
                }
                if w == 0.0 {
                    continue;
                }
                // SINR term: d(rate)/d(sinr) for this subchannel.
                let g = state.sinr[idx];
                let d = state.denom[idx];
                let k = cj * w * c / (LN_2 * (1.0 + g));
                grad_power[j] += k * self.signal[idx] / d;
                let kd = -k * g / d;
                for &(v, cv) in &self.interferers[idx] {
                    let uv = &alloc.users[v];
                    grad_beta[v * mc + m] += kd * uv.power(self.link) * cv;
                    grad_power[v] += kd * uv.beta(self.link)[m] * cv;
                }
            }
        }
    }
}

/// Per-(user, subchannel) quantities of one direction.
#[derive(Debug, Clone)]
pub(crate) struct LinkState {
    pub denom: Vec<f64>,
    pub sinr: Vec<f64>,
    pub log_term: Vec<f64>,
    pub weight: Vec<f64>,
    pub cell_share: Vec<f64>,
    pub rate: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{RadioParams, Tensor3};
    use proptest::prelude::*;

    fn radio(m: usize, sub_bw: f64, noise: f64) -> RadioParams {
        // Chooses the noise PSD that yields `noise` W per subchannel.
        let psd_w = noise / sub_bw;
        RadioParams {
            bandwidth_up: sub_bw * m as f64,
            bandwidth_down: sub_bw * m as f64,
            num_subchannels: m,
            noise_psd_dbm_hz: 10.0 * psd_w.log10() + 30.0,
            p_min: 0.0,
            p_max: 10.0,
            pd_min: 0.0,
            pd_max: 10.0,
            ..RadioParams::default()
        }
    }

    /// Users all served by AP 0 (AP 1 far away unless `split_cells`).
    fn fixture(gains: &[f64], m: usize, noise: f64) -> Scenario {
        let u = gains.len();
        let mut gu = Tensor3::filled([u, 2, m], 0.0);
        let mut gd = Tensor3::filled([2, u, m], 0.0);
        for (i, &g) in gains.iter().enumerate() {
            for k in 0..m {
                gu.set(i, 0, k, g);
                gd.set(0, i, k, g);
            }
        }
        Scenario::from_parts(
            radio(m, 1e6, noise),
            vec![[0.0, 0.0], [1e6, 0.0]],
            vec![[1.0, 0.0]; u],
            gu,
            gd,
        )
        .unwrap()
    }

    fn alloc(u: usize, m: usize, beta: &[f64], p: f64) -> Allocation {
        assert_eq!(beta.len(), m);
        let user = UserAlloc {
            beta_up: beta.to_vec(),
            beta_down: beta.to_vec(),
            p_up: p,
            p_down: p,
            r: 1.0,
            split: 0,
        };
        Allocation {
            users: vec![user; u],
        }
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(a.abs())
    }

    #[test]
    fn single_user_sinr() {
        let s = fixture(&[1e-10], 1, 1e-13);
        let a = alloc(1, 1, &[1.0], 1.0);
        assert!(close(uplink_sinr(&s, &a, 0, 0), 1000.0, 1e-12));
        assert!(close(downlink_sinr(&s, &a, 0, 0), 1000.0, 1e-12));
    }

    #[test]
    fn two_user_uplink_sic() {
        // Strong user decoded first sees the weak user's full power.
        let s = fixture(&[2e-10, 1e-10], 1, 1e-13);
        let a = alloc(2, 1, &[1.0], 1.0);
        let strong = uplink_sinr(&s, &a, 0, 0);
        let weak = uplink_sinr(&s, &a, 1, 0);
        assert!(close(strong, 2e-10 / (1e-10 + 1e-13), 1e-12));
        assert!((strong - 1.998).abs() < 1e-3);
        assert!(close(weak, 1000.0, 1e-12));
    }

    #[test]
    fn two_user_downlink_sic() {
        // Weak user decoded first; superposed signal for the strong user
        // reaches it through its own gain 1e-10.
        let s = fixture(&[2e-10, 1e-10], 1, 1e-13);
        let a = alloc(2, 1, &[1.0], 1.0);
        let weak = downlink_sinr(&s, &a, 1, 0);
        let strong = downlink_sinr(&s, &a, 0, 0);
        assert!(close(weak, 1e-10 / (1e-10 + 1e-13), 1e-12));
        assert!(close(strong, 2000.0, 1e-12));
    }

    #[test]
    fn zero_beta_interferers_vanish() {
        let s = fixture(&[2e-10, 1e-10], 2, 1e-13);
        let mut a = alloc(2, 2, &[1.0, 0.0], 1.0);
        a.users[1].beta_up = vec![0.0, 1.0];
        a.users[1].beta_down = vec![0.0, 1.0];
        let solo = fixture(&[2e-10], 2, 1e-13);
        let solo_a = alloc(1, 2, &[1.0, 0.0], 1.0);
        assert_eq!(uplink_sinr(&s, &a, 0, 0), uplink_sinr(&solo, &solo_a, 0, 0));
        assert_eq!(downlink_sinr(&s, &a, 0, 0), downlink_sinr(&solo, &solo_a, 0, 0));
    }

    #[test]
    fn rate_examples() {
        // p|h|^2/σ^2 = 3 gives log2(4) = 2 bits per Hz on a 1 MHz subchannel.
        let s = fixture(&[3e-13], 2, 1e-13);
        let a = alloc(1, 2, &[1.0, 0.0], 1.0);
        assert!(close(uplink_rate(&s, &a, 0), 2e6, 1e-12));
        assert!(close(downlink_rate(&s, &a, 0), 2e6, 1e-12));
        let zero = alloc(1, 2, &[0.0, 0.0], 1.0);
        assert_eq!(uplink_rate(&s, &zero, 0), 0.0);
        assert_eq!(downlink_rate(&s, &zero, 0), 0.0);
        // SINR 1 on both subchannels, half weight each: 0.5·1e6 + 0.5·1e6.
        let s = fixture(&[1e-13], 2, 1e-13);
        let a = alloc(1, 2, &[0.5, 0.5], 1.0);
        assert!(close(uplink_rate(&s, &a, 0), 1e6, 1e-12));
        assert!(close(downlink_rate(&s, &a, 0), 1e6, 1e-12));
    }

    #[test]
    fn oma_rate_cases() {
        let s = fixture(&[3e-13], 1, 1e-13);
        let a = alloc(1, 1, &[1.0], 1.0);
        for link in [Link::Up, Link::Down] {
            assert!(close(oma_rate(&s, &a, 0, link), 1e6 * 2.0, 1e-12));
        }
        assert_eq!(oma_rate(&s, &a, 0, Link::Up), uplink_rate(&s, &a, 0));
        // Two co-cluster users: half the time each, no intra-cell interference.
        let s = fixture(&[2e-10, 1e-10], 1, 1e-13);
        let a = alloc(2, 1, &[1.0], 1.0);
        let oma_first = oma_rate(&s, &a, 0, Link::Up);
        assert!(close(oma_first, 0.5 * 1e6 * (1.0f64 + 2000.0).log2(), 1e-12));
        assert!(oma_first >= uplink_rate(&s, &a, 0));
        let oma_first_down = oma_rate(&s, &a, 1, Link::Down);
        assert!(oma_first_down >= downlink_rate(&s, &a, 1));
    }

    #[test]
    fn tables_agree_with_direct_formulas() {
        let radio = RadioParams {
            num_subchannels: 3,
            ..RadioParams::default()
        };
        let layout = crate::scenario::Layout {
            n_aps: 2,
            n_users: 6,
            area_side: 300.0,
        };
        let s = Scenario::generate(11, &layout, &radio).unwrap();
        let mut a = Allocation::uniform(&s, (1.0, 4.0), 0);
        a.users[2].beta_up = vec![0.7, 0.2, 0.1];
        a.users[4].p_down = 3.0;
        for model in [RateModel::Noma, RateModel::Oma] {
            for link in [Link::Up, Link::Down] {
                let t = LinkTables::new(&s, link, model);
                let st = t.evaluate(&a);
                for j in 0..6 {
                    let direct = rate_with(&s, &a, j, link, model);
                    assert!(close(st.rate[j], direct, 1e-12), "{model:?} {link:?} {j}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn monotone_in_own_and_interferer_power(
            g in prop::collection::vec(1e-12f64..1e-9, 3),
            p in prop::collection::vec(0.01f64..1.0, 3),
            bump in 1.0f64..5.0,
        ) {
            let s = fixture(&g, 1, 1e-13);
            let mut a = alloc(3, 1, &[1.0], 1.0);
            for (u, &pw) in a.users.iter_mut().zip(&p) {
                u.p_up = pw;
            }
            for i in 0..3 {
                let base = uplink_rate(&s, &a, i);
                prop_assert!(base.is_finite() && base > 0.0);
                let mut own = a.clone();
                own.users[i].p_up *= bump;
                prop_assert!(uplink_rate(&s, &own, i) >= base);
                for v in (0..3).filter(|&v| v != i) {
                    let mut other = a.clone();
                    other.users[v].p_up *= bump;
                    prop_assert!(uplink_rate(&s, &other, i) <= base);
                }
            }
        }

        #[test]
        fn sic_first_user_gains_under_oma(
            snr_first in 10.0f64..1e4,
            frac in 0.0f64..1.0,
        ) {
            // Holds whenever the second user's SNR is at least sqrt(1 + SNR_first).
            let floor = (1.0 + snr_first).sqrt();
            let snr_second = floor + frac * (snr_first - floor).max(0.0);
            let s = fixture(&[snr_first * 1e-13, snr_second * 1e-13], 1, 1e-13);
            let a = alloc(2, 1, &[1.0], 1.0);
            prop_assert!(oma_rate(&s, &a, 0, Link::Up) >= uplink_rate(&s, &a, 0) * (1.0 - 1e-12));
        }
    }
}
