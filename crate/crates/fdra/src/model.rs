//! Domain types shared by all modules: the static cell description, per-drop
//! channel realizations, sub-channel assignments, power vectors and rate
//! reports.

use serde::Serialize;

use crate::error::{Error, Result};

/// Duplex capability of a mobile user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DuplexMode {
    HalfDuplex,
    FullDuplex,
}

/// Node positions in meters. The base station sits at `bs`, users at
/// `users[k]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Topology {
    pub bs: [f64; 2],
    pub users: Vec<[f64; 2]>,
}

impl Topology {
    /// Distance in meters between the BS and user `k`.
    pub fn bs_user_distance(&self, k: usize) -> f64 {
        distance(self.bs, self.users[k])
    }

    /// Distance in meters between users `k` and `j`.
    pub fn user_user_distance(&self, k: usize, j: usize) -> f64 {
        distance(self.users[k], self.users[j])
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Static description of the cell: who is there, what they may transmit,
/// how their traffic is weighted and how well self-interference is canceled.
///
/// All powers and noises are Watts, all gains linear. `si_coefficient` is the
/// residual self-interference factor beta in [0, 1]: 0 means perfect
/// cancellation, 1 none.
#[derive(Debug, Clone, Serialize)]
pub struct NetworkScenario {
    pub num_users: usize,
    pub num_subchannels: usize,
    pub duplex_mode: Vec<DuplexMode>,
    pub bs_power_budget: f64,
    pub user_power_budget: Vec<f64>,
    pub downlink_weight: Vec<f64>,
    pub uplink_weight: Vec<f64>,
    pub si_coefficient: f64,
    pub bs_noise: f64,
    pub user_noise: Vec<f64>,
    pub topology: Topology,
}

impl NetworkScenario {
    /// Checks the type invariants; call once after construction.
    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 {
            return Err(Error::Domain("num_users must be >= 1".into()));
        }
        if self.num_subchannels == 0 {
            return Err(Error::Domain("num_subchannels must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.si_coefficient) {
            return Err(Error::Domain(format!(
                "si_coefficient must lie in [0, 1], got {}",
                self.si_coefficient
            )));
        }
        let k = self.num_users;
        for (name, len) in [
            ("duplex_mode", self.duplex_mode.len()),
            ("user_power_budget", self.user_power_budget.len()),
            ("downlink_weight", self.downlink_weight.len()),
            ("uplink_weight", self.uplink_weight.len()),
            ("user_noise", self.user_noise.len()),
            ("topology.users", self.topology.users.len()),
        ] {
            if len != k {
                return Err(Error::Dimension(format!(
                    "{name} has length {len}, expected num_users = {k}"
                )));
            }
        }
        let nonneg = |name: &str, vals: &[f64]| -> Result<()> {
            for &v in vals {
                if !(v >= 0.0) {
                    return Err(Error::Domain(format!("{name} must be nonnegative, got {v}")));
                }
            }
            Ok(())
        };
        nonneg("bs_power_budget", &[self.bs_power_budget])?;
        nonneg("bs_noise", &[self.bs_noise])?;
        nonneg("user_power_budget", &self.user_power_budget)?;
        nonneg("downlink_weight", &self.downlink_weight)?;
        nonneg("uplink_weight", &self.uplink_weight)?;
        nonneg("user_noise", &self.user_noise)?;
        Ok(())
    }

    pub fn is_full_duplex(&self, k: usize) -> bool {
        self.duplex_mode[k] == DuplexMode::FullDuplex
    }
}

/// One drop's channel gains in linear scale.
///
/// `bs_user` holds g_k(n) for the reciprocal BS<->user link; `user_user`
/// holds g_{k,j}(n) between users, symmetric in (k, j) with the diagonal
/// unused.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    num_users: usize,
    num_subchannels: usize,
    bs_user: Vec<f64>,
    user_user: Vec<f64>,
}

impl ChannelRealization {
    /// Builds a realization from row-major gain tables: `bs_user[k * n_sc + n]`
    /// and `user_user[(k * num_users + j) * n_sc + n]`.
    pub fn from_tables(
        num_users: usize,
        num_subchannels: usize,
        bs_user: Vec<f64>,
        user_user: Vec<f64>,
    ) -> Result<Self> {
        if bs_user.len() != num_users * num_subchannels {
            return Err(Error::Dimension(format!(
                "bs_user has {} entries, expected {}",
                bs_user.len(),
                num_users * num_subchannels
            )));
        }
        if user_user.len() != num_users * num_users * num_subchannels {
            return Err(Error::Dimension(format!(
                "user_user has {} entries, expected {}",
                user_user.len(),
                num_users * num_users * num_subchannels
            )));
        }
        if bs_user.iter().chain(user_user.iter()).any(|&g| !(g >= 0.0)) {
            return Err(Error::Domain("channel gains must be nonnegative".into()));
        }
        Ok(Self {
            num_users,
            num_subchannels,
            bs_user,
            user_user,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_subchannels(&self) -> usize {
        self.num_subchannels
    }

    /// g_k(n): gain between the BS and user `k` on sub-channel `n`.
    pub fn bs_user_gain(&self, k: usize, n: usize) -> f64 {
        self.bs_user[k * self.num_subchannels + n]
    }

    /// g_{k,j}(n): gain between users `k` and `j` on sub-channel `n`.
    pub fn user_user_gain(&self, k: usize, j: usize, n: usize) -> f64 {
        self.user_user[(k * self.num_users + j) * self.num_subchannels + n]
    }
}

/// Per-sub-channel (downlink user, uplink user) pairing. `None` means the
/// direction is unused on that sub-channel.
///
/// With one optional user per direction per sub-channel, the disjointness
/// constraints on the derived sets S_{k,d} and S_{j,u} hold by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub dl_user: Vec<Option<usize>>,
    pub ul_user: Vec<Option<usize>>,
}

impl Assignment {
    /// An empty assignment over `num_subchannels` sub-channels.
    pub fn empty(num_subchannels: usize) -> Self {
        Self {
            dl_user: vec![None; num_subchannels],
            ul_user: vec![None; num_subchannels],
        }
    }

    pub fn num_subchannels(&self) -> usize {
        self.dl_user.len()
    }

    /// S_{k,d}: sub-channels carrying downlink traffic of user `k`.
    pub fn downlink_set(&self, k: usize) -> Vec<usize> {
        self.dl_user
            .iter()
            .enumerate()
            .filter_map(|(n, &u)| (u == Some(k)).then_some(n))
            .collect()
    }

    /// S_{j,u}: sub-channels carrying uplink traffic of user `j`.
    pub fn uplink_set(&self, j: usize) -> Vec<usize> {
        self.ul_user
            .iter()
            .enumerate()
            .filter_map(|(n, &u)| (u == Some(j)).then_some(n))
            .collect()
    }
}

/// Transmit powers in Watts, one downlink and one uplink slot per
/// sub-channel. Slots without an assigned user carry 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerAllocation {
    pub dl: Vec<f64>,
    pub ul: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(num_subchannels: usize) -> Self {
        Self {
            dl: vec![0.0; num_subchannels],
            ul: vec![0.0; num_subchannels],
        }
    }

    pub fn total_downlink(&self) -> f64 {
        self.dl.iter().sum()
    }
}

/// Weighted rates achieved by a scheme, in bits/s/Hz per sub-channel use,
/// plus the objective value after each DC iteration when the scheme ran one.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub downlink_rate: f64,
    pub uplink_rate: f64,
    pub sum_rate: f64,
    pub objective_trace: Vec<f64>,
}

impl RateReport {
    pub fn new(downlink_rate: f64, uplink_rate: f64, objective_trace: Vec<f64>) -> Self {
        Self {
            downlink_rate,
            uplink_rate,
            sum_rate: downlink_rate + uplink_rate,
            objective_trace,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_scenario() -> NetworkScenario {
        NetworkScenario {
            num_users: 2,
            num_subchannels: 3,
            duplex_mode: vec![DuplexMode::HalfDuplex, DuplexMode::FullDuplex],
            bs_power_budget: 1.0,
            user_power_budget: vec![0.5, 0.5],
            downlink_weight: vec![1.0, 1.0],
            uplink_weight: vec![1.0, 1.0],
            si_coefficient: 0.1,
            bs_noise: 1e-12,
            user_noise: vec![1e-12, 1e-12],
            topology: Topology {
                bs: [0.0, 0.0],
                users: vec![[3.0, 4.0], [-1.0, 0.0]],
            },
        }
    }

    #[test]
    fn validate_accepts_well_formed_scenario() {
        tiny_scenario().validate().unwrap();
    }

    #[test]
    fn validate_rejects_beta_out_of_range() {
        let mut s = tiny_scenario();
        s.si_coefficient = 1.5;
        assert!(matches!(s.validate(), Err(Error::Domain(_))));
        s.si_coefficient = -0.1;
        assert!(matches!(s.validate(), Err(Error::Domain(_))));
    }

    #[test]
    fn validate_rejects_wrong_lengths() {
        let mut s = tiny_scenario();
        s.user_noise.pop();
        assert!(matches!(s.validate(), Err(Error::Dimension(_))));
    }

    #[test]
    fn topology_distances() {
        let s = tiny_scenario();
        assert!((s.topology.bs_user_distance(0) - 5.0).abs() < 1e-12);
        assert!((s.topology.user_user_distance(0, 1) - 32.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn assignment_sets() {
        let mut a = Assignment::empty(4);
        a.dl_user[0] = Some(1);
        a.dl_user[2] = Some(1);
        a.ul_user[2] = Some(0);
        assert_eq!(a.downlink_set(1), vec![0, 2]);
        assert_eq!(a.uplink_set(0), vec![2]);
        assert!(a.downlink_set(0).is_empty());
    }

    #[test]
    fn channel_tables_dimension_checked() {
        let err = ChannelRealization::from_tables(2, 3, vec![0.0; 5], vec![0.0; 12]);
        assert!(matches!(err, Err(Error::Dimension(_))));
    }
}
