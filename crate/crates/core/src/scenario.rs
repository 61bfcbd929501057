//! Network scenarios: AP/user placement, nearest-AP association and
//! per-subchannel channel power gains.

use std::cmp::Ordering;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distances below this are clamped before applying path loss.
pub const MIN_DISTANCE_M: f64 = 1.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Transmission direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Link {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioParams {
    pub bandwidth_up: f64,
    pub bandwidth_down: f64,
    pub num_subchannels: usize,
    pub noise_psd_dbm_hz: f64,
    pub path_loss_exponent: f64,
    /// Device uplink power box, W.
    pub p_min: f64,
    pub p_max: f64,
    /// AP per-user downlink power box, W.
    pub pd_min: f64,
    pub pd_max: f64,
    pub max_users_per_subchannel: usize,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            bandwidth_up: 10e6,
            bandwidth_down: 10e6,
            num_subchannels: 250,
            noise_psd_dbm_hz: -174.0,
            path_loss_exponent: 5.0,
            p_min: dbm_to_watts(0.0),
            p_max: dbm_to_watts(25.0),
            pd_min: dbm_to_watts(20.0),
            pd_max: dbm_to_watts(50.0),
            max_users_per_subchannel: 3,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Err(Error::invalid("radio params", reason));
        if self.num_subchannels == 0 {
            return bad("num_subchannels must be >= 1");
        }
        if !(self.bandwidth_up > 0.0 && self.bandwidth_down > 0.0) {
            return bad("bandwidths must be positive");
        }
        if !(self.p_min >= 0.0 && self.p_min <= self.p_max) {
            return bad("need 0 <= p_min <= p_max");
        }
        if !(self.pd_min >= 0.0 && self.pd_min <= self.pd_max) {
            return bad("need 0 <= pd_min <= pd_max");
        }
        if self.max_users_per_subchannel == 0 {
            return bad("max_users_per_subchannel must be >= 1");
        }
        if !self.noise_psd_dbm_hz.is_finite() || !self.path_loss_exponent.is_finite() {
            return bad("noise psd and path loss exponent must be finite");
        }
        Ok(())
    }

    pub fn bandwidth(&self, link: Link) -> f64 {
        match link {
            Link::Up => self.bandwidth_up,
            Link::Down => self.bandwidth_down,
        }
    }

    pub fn subchannel_bandwidth(&self, link: Link) -> f64 {
        self.bandwidth(link) / self.num_subchannels as f64
    }

    /// Thermal noise power on one subchannel, W.
    pub fn noise_power(&self, link: Link) -> f64 {
        dbm_to_watts(self.noise_psd_dbm_hz) * self.subchannel_bandwidth(link)
    }

    pub fn power_box(&self, link: Link) -> (f64, f64) {
        match link {
            Link::Up => (self.p_min, self.p_max),
            Link::Down => (self.pd_min, self.pd_max),
        }
    }
}

/// Dense row-major rank-3 tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    pub dims: [usize; 3],
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn filled(dims: [usize; 3], value: f64) -> Self {
        Tensor3 {
            dims,
            data: vec![value; dims[0] * dims[1] * dims[2]],
        }
    }

    #[inline]
    fn offset(&self, a: usize, b: usize, c: usize) -> usize {
        debug_assert!(a < self.dims[0] && b < self.dims[1] && c < self.dims[2]);
        (a * self.dims[1] + b) * self.dims[2] + c
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[self.offset(a, b, c)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        let i = self.offset(a, b, c);
        self.data[i] = v;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub n_aps: usize,
    pub n_users: usize,
    /// Side of the square deployment area, m.
    pub area_side: f64,
}

/// Small-scale fading applied on top of path loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fading {
    /// Unit-mean exponential power gain, i.e. Rayleigh amplitude.
    #[default]
    Rayleigh,
    /// No fading: every draw is 1.
    Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub radio: RadioParams,
    pub ap_positions: Vec<[f64; 2]>,
    pub user_positions: Vec<[f64; 2]>,
    /// Serving AP of every user.
    pub association: Vec<usize>,
    /// `[user][ap][subchannel]` uplink power gain from a user to an AP.
    pub gain_up: Tensor3,
    /// `[ap][user][subchannel]` downlink power gain from an AP to a user.
    pub gain_down: Tensor3,
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Index of the closest AP for every user; ties go to the lower AP index.
pub fn associate_nearest(ap_positions: &[[f64; 2]], user_positions: &[[f64; 2]]) -> Vec<usize> {
    user_positions
        .iter()
        .map(|&u| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (n, &ap) in ap_positions.iter().enumerate() {
                let d = distance(u, ap);
                if d < best_d {
                    best = n;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

fn path_gain(d: f64, exponent: f64) -> f64 {
    d.max(MIN_DISTANCE_M).powf(-exponent)
}

impl Scenario {
    pub fn generate(seed: u64, layout: &Layout, radio: &RadioParams) -> Result<Self> {
        Self::generate_with_fading(seed, layout, radio, Fading::Rayleigh)
    }

    /// Uniform placement in the square, nearest-AP association, and
    /// independent fading per (user, AP, subchannel) for each direction.
    pub fn generate_with_fading(
        seed: u64,
        layout: &Layout,
        radio: &RadioParams,
        fading: Fading,
    ) -> Result<Self> {
        if layout.n_aps == 0 || layout.n_users == 0 {
            return Err(Error::invalid("layout", "need at least one AP and one user"));
        }
        if !(layout.area_side > 0.0) {
            return Err(Error::invalid("layout", "area side must be positive"));
        }
        radio.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let side = layout.area_side;
        let point = |rng: &mut ChaCha8Rng| [rng.random::<f64>() * side, rng.random::<f64>() * side];
        let ap_positions: Vec<[f64; 2]> = (0..layout.n_aps).map(|_| point(&mut rng)).collect();
        let user_positions: Vec<[f64; 2]> = (0..layout.n_users).map(|_| point(&mut rng)).collect();
        let association = associate_nearest(&ap_positions, &user_positions);

        let m_count = radio.num_subchannels;
        let draw = |rng: &mut ChaCha8Rng| match fading {
            Fading::Rayleigh => rng.sample::<f64, _>(Exp1),
            Fading::Unit => 1.0,
        };
        let mut gain_up = Tensor3::filled([layout.n_users, layout.n_aps, m_count], 0.0);
        for (u, &up) in user_positions.iter().enumerate() {
            for (n, &ap) in ap_positions.iter().enumerate() {
                let pl = path_gain(distance(up, ap), radio.path_loss_exponent);
                for m in 0..m_count {
                    gain_up.set(u, n, m, draw(&mut rng) * pl);
                }
            }
        }
        let mut gain_down = Tensor3::filled([layout.n_aps, layout.n_users, m_count], 0.0);
        for (n, &ap) in ap_positions.iter().enumerate() {
            for (u, &up) in user_positions.iter().enumerate() {
                let pl = path_gain(distance(up, ap), radio.path_loss_exponent);
                for m in 0..m_count {
                    gain_down.set(n, u, m, draw(&mut rng) * pl);
                }
            }
        }
        Ok(Scenario {
            radio: radio.clone(),
            ap_positions,
            user_positions,
            association,
            gain_up,
            gain_down,
        })
    }

    /// Scenario with explicit gains; association is derived from positions.
    pub fn from_parts(
        radio: RadioParams,
        ap_positions: Vec<[f64; 2]>,
        user_positions: Vec<[f64; 2]>,
        gain_up: Tensor3,
        gain_down: Tensor3,
    ) -> Result<Self> {
        let association = associate_nearest(&ap_positions, &user_positions);
        let s = Scenario {
            radio,
            ap_positions,
            user_positions,
            association,
            gain_up,
            gain_down,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        let (n, u, m) = (self.num_aps(), self.num_users(), self.radio.num_subchannels);
        if n == 0 || u == 0 {
            return Err(Error::invalid("scenario", "need at least one AP and one user"));
        }
        if self.association.len() != u || self.association.iter().any(|&a| a >= n) {
            return Err(Error::invalid("scenario", "every user must map to exactly one existing AP"));
        }
        if self.gain_up.dims != [u, n, m] || self.gain_down.dims != [n, u, m] {
            return Err(Error::invalid("scenario", "gain tensor shapes do not match U, N, M"));
        }
        if self.gain_up.data.len() != u * n * m || self.gain_down.data.len() != u * n * m {
            return Err(Error::invalid("scenario", "gain tensor storage has the wrong length"));
        }
        let ok = |g: &f64| g.is_finite() && *g >= 0.0;
        if !self.gain_up.data.iter().all(ok) || !self.gain_down.data.iter().all(ok) {
            return Err(Error::invalid("scenario", "gains must be finite and >= 0"));
        }
        if !(self.radio.noise_power(Link::Up) > 0.0 && self.radio.noise_power(Link::Down) > 0.0) {
            return Err(Error::invalid("scenario", "noise power must be positive"));
        }
        Ok(())
    }

    pub fn num_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }

    pub fn num_subchannels(&self) -> usize {
        self.radio.num_subchannels
    }

    pub fn serving_ap(&self, user: usize) -> usize {
        self.association[user]
    }

    pub fn users_of(&self, ap: usize) -> Vec<usize> {
        (0..self.num_users())
            .filter(|&u| self.association[u] == ap)
            .collect()
    }

    /// Power gain between `user` and `ap` on subchannel `m` for the given direction.
    #[inline]
    pub fn gain(&self, link: Link, user: usize, ap: usize, m: usize) -> f64 {
        match link {
            Link::Up => self.gain_up.get(user, ap, m),
            Link::Down => self.gain_down.get(ap, user, m),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

fn sic_order(scenario: &Scenario, link: Link, ap: usize, m: usize, members: &[usize]) -> Vec<usize> {
    let mut order = members.to_vec();
    order.sort_by(|&a, &b| {
        let (ga, gb) = (scenario.gain(link, a, ap, m), scenario.gain(link, b, ap, m));
        let by_gain = match link {
            Link::Up => gb.partial_cmp(&ga),
            Link::Down => ga.partial_cmp(&gb),
        };
        by_gain.unwrap_or(Ordering::Equal).then(a.cmp(&b))
    });
    order
}

/// Uplink decoding order at `ap` on subchannel `m`: strongest gain first.
pub fn sic_order_uplink(scenario: &Scenario, ap: usize, m: usize, members: &[usize]) -> Vec<usize> {
    sic_order(scenario, Link::Up, ap, m, members)
}

/// Downlink decoding order on subchannel `m` of `ap`: weakest gain first.
pub fn sic_order_downlink(scenario: &Scenario, ap: usize, m: usize, members: &[usize]) -> Vec<usize> {
    sic_order(scenario, Link::Down, ap, m, members)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_radio(m: usize) -> RadioParams {
        RadioParams {
            num_subchannels: m,
            ..RadioParams::default()
        }
    }

    fn layout(n: usize, u: usize) -> Layout {
        Layout {
            n_aps: n,
            n_users: u,
            area_side: 500.0,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = Scenario::generate(7, &layout(3, 10), &small_radio(4)).unwrap();
        let b = Scenario::generate(7, &layout(3, 10), &small_radio(4)).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = Scenario::generate(8, &layout(3, 10), &small_radio(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_path_loss_unit_fading_gives_unit_gains() {
        let radio = RadioParams {
            path_loss_exponent: 0.0,
            ..small_radio(3)
        };
        let s = Scenario::generate_with_fading(1, &layout(2, 4), &radio, Fading::Unit).unwrap();
        assert!(s.gain_up.data.iter().all(|&g| g == 1.0));
        assert!(s.gain_down.data.iter().all(|&g| g == 1.0));
    }

    #[test]
    fn noise_power_conversion() {
        // -174 dBm/Hz = 10^(-20.4) W/Hz over 1 MHz.
        let radio = RadioParams {
            bandwidth_up: 10e6,
            num_subchannels: 10,
            ..RadioParams::default()
        };
        let expected = 10f64.powf(-20.4) * 1e6;
        assert!((radio.noise_power(Link::Up) - expected).abs() < 1e-12 * expected);
        assert!((radio.noise_power(Link::Up) - 3.981e-15).abs() < 1e-18);
        assert!((dbm_to_watts(25.0) - 0.316_227_766).abs() < 1e-9);
    }

    #[test]
    fn nearest_association() {
        assert_eq!(associate_nearest(&[[0.0, 0.0]], &[[5.0, 1.0], [90.0, 9.0]]), vec![0, 0]);
        let aps = [[0.0, 0.0], [100.0, 0.0]];
        assert_eq!(associate_nearest(&aps, &[[50.0, 0.0]]), vec![0]);
        assert_eq!(associate_nearest(&aps, &[[30.0, 0.0], [70.0, 3.0]]), vec![0, 1]);
    }

    fn two_user_fixture(up: [f64; 4], down: [f64; 4]) -> Scenario {
        // 1 AP, users 0..4 on a single subchannel with the given gains.
        let mut gu = Tensor3::filled([4, 1, 1], 0.0);
        let mut gd = Tensor3::filled([1, 4, 1], 0.0);
        for u in 0..4 {
            gu.set(u, 0, 0, up[u]);
            gd.set(0, u, 0, down[u]);
        }
        Scenario::from_parts(
            small_radio(1),
            vec![[0.0, 0.0]],
            vec![[1.0, 0.0]; 4],
            gu,
            gd,
        )
        .unwrap()
    }

    #[test]
    fn sic_orders() {
        let s = two_user_fixture([5e-10, 2e-10, 1e-10, 1e-10], [5e-10, 2e-10, 1e-10, 1e-10]);
        assert_eq!(sic_order_uplink(&s, 0, 0, &[2]), vec![2]);
        assert_eq!(sic_order_uplink(&s, 0, 0, &[2, 1]), vec![1, 2]);
        assert_eq!(sic_order_uplink(&s, 0, 0, &[3, 2]), vec![2, 3]);
        assert_eq!(sic_order_downlink(&s, 0, 0, &[2]), vec![2]);
        assert_eq!(sic_order_downlink(&s, 0, 0, &[1, 2]), vec![2, 1]);
        assert_eq!(sic_order_downlink(&s, 0, 0, &[3, 2]), vec![2, 3]);
        // Same gains both ways with distinct values: one order reverses the other.
        let all = [0, 1, 2];
        let mut down = sic_order_downlink(&s, 0, 0, &all);
        down.reverse();
        assert_eq!(sic_order_uplink(&s, 0, 0, &all), down);
    }

    #[test]
    fn gains_finite_and_fading_unit_mean() {
        let radio = RadioParams {
            path_loss_exponent: 0.0,
            ..small_radio(50)
        };
        let s = Scenario::generate(3, &layout(5, 250), &radio).unwrap();
        let all: Vec<f64> = s.gain_up.data.iter().chain(&s.gain_down.data).copied().collect();
        assert!(all.len() >= 100_000);
        assert!(all.iter().all(|g| g.is_finite() && *g >= 0.0));
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean fading power {mean}");
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = Scenario::generate(2, &layout(2, 3), &small_radio(2)).unwrap();
        let back = Scenario::from_json_str(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
        let mut broken = s.clone();
        broken.association[0] = 9;
        assert!(broken.validate().is_err());
        let mut broken = s;
        broken.gain_up.data[0] = -1.0;
        assert!(broken.validate().is_err());
    }

    #[test]
    fn rejects_empty_layout() {
        assert!(Scenario::generate(0, &layout(0, 3), &small_radio(2)).is_err());
        assert!(Scenario::generate(0, &layout(1, 0), &small_radio(2)).is_err());
    }
}
