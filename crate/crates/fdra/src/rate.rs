//! Exact evaluation of the weighted downlink-plus-uplink sum-rate and
//! feasibility checking of the full constraint set.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Assignment, ChannelRealization, NetworkScenario, PowerAllocation, RateReport};

/// Absolute tolerance on power-sum constraints.
pub const POWER_TOLERANCE: f64 = 1e-9;

/// I_{k,j}(n): the gain with which uplink user `j` interferes with downlink
/// user `k` on sub-channel `n`. Equal to the self-interference coefficient
/// beta when `j == k` (a full-duplex user receiving while transmitting), and
/// to the inter-user gain g_{k,j}(n) otherwise.
pub fn effective_interference_gain(
    scenario: &NetworkScenario,
    channels: &ChannelRealization,
    k: usize,
    j: usize,
    n: usize,
) -> Result<f64> {
    if k >= scenario.num_users || j >= scenario.num_users {
        return Err(Error::Dimension(format!(
            "user index out of range: k={k}, j={j}, num_users={}",
            scenario.num_users
        )));
    }
    if k == j {
        if !scenario.is_full_duplex(k) {
            return Err(Error::Constraint(format!(
                "half-duplex user {k} cannot use sub-channel {n} in both directions"
            )));
        }
        Ok(scenario.si_coefficient)
    } else {
        Ok(channels.user_user_gain(k, j, n))
    }
}

/// Evaluates the weighted sum-rate of an (assignment, powers) pair.
///
/// Downlink on sub-channel n sees the co-channel uplink user's signal scaled
/// by I_{k,j}(n); uplink sees the BS's own transmission scaled by beta. When
/// a direction has no co-channel partner its interference term is 0. Rates
/// use log base 2.
pub fn weighted_sum_rate(
    scenario: &NetworkScenario,
    channels: &ChannelRealization,
    assignment: &Assignment,
    powers: &PowerAllocation,
) -> Result<RateReport> {
    let n_sc = scenario.num_subchannels;
    if assignment.dl_user.len() != n_sc
        || assignment.ul_user.len() != n_sc
        || powers.dl.len() != n_sc
        || powers.ul.len() != n_sc
        || channels.num_subchannels() != n_sc
        || channels.num_users() != scenario.num_users
    {
        return Err(Error::Dimension(format!(
            "assignment/powers/channels do not match scenario (K={}, N={n_sc})",
            scenario.num_users
        )));
    }

    let mut downlink = 0.0;
    let mut uplink = 0.0;
    for n in 0..n_sc {
        if let Some(k) = assignment.dl_user[n] {
            let interference = match assignment.ul_user[n] {
                Some(j) => {
                    effective_interference_gain(scenario, channels, k, j, n)? * powers.ul[n]
                }
                None => 0.0,
            };
            let snr = channels.bs_user_gain(k, n) * powers.dl[n]
                / (scenario.user_noise[k] + interference);
            downlink += scenario.downlink_weight[k] * (1.0 + snr).log2();
        }
        if let Some(j) = assignment.ul_user[n] {
            let self_interference = scenario.si_coefficient * powers.dl[n];
            let snr = channels.bs_user_gain(j, n) * powers.ul[n]
                / (scenario.bs_noise + self_interference);
            uplink += scenario.uplink_weight[j] * (1.0 + snr).log2();
        }
    }
    Ok(RateReport::new(downlink, uplink, Vec::new()))
}

/// A violated constraint, reported by [`check_feasible`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Total downlink power exceeds the BS budget (constraint on the BS).
    BsPowerBudget { total: f64, budget: f64 },
    /// A user's uplink power exceeds its budget.
    UserPowerBudget { user: usize, total: f64, budget: f64 },
    /// A negative power entry.
    NegativePower { subchannel: usize, uplink: bool },
    /// Power spent on a sub-channel slot with no assigned user.
    PowerOnUnassigned { subchannel: usize, uplink: bool },
    /// A half-duplex user assigned both directions of one sub-channel.
    HalfDuplexConflict { user: usize, subchannel: usize },
    /// An assignment entry referencing a nonexistent user, or mismatched
    /// vector lengths.
    Malformed(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BsPowerBudget { total, budget } => {
                write!(f, "BS power {total:.6e} exceeds budget {budget:.6e}")
            }
            Violation::UserPowerBudget { user, total, budget } => write!(
                f,
                "user {user} uplink power {total:.6e} exceeds budget {budget:.6e}"
            ),
            Violation::NegativePower { subchannel, uplink } => {
                let dir = if *uplink { "uplink" } else { "downlink" };
                write!(f, "negative {dir} power on sub-channel {subchannel}")
            }
            Violation::PowerOnUnassigned { subchannel, uplink } => {
                let dir = if *uplink { "uplink" } else { "downlink" };
                write!(f, "{dir} power on unassigned sub-channel {subchannel}")
            }
            Violation::HalfDuplexConflict { user, subchannel } => write!(
                f,
                "half-duplex user {user} uses sub-channel {subchannel} in both directions"
            ),
            Violation::Malformed(msg) => write!(f, "malformed input: {msg}"),
        }
    }
}

/// Outcome of a feasibility check: `feasible` is true iff `violations` is
/// empty.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// Checks every constraint of the joint problem within [`POWER_TOLERANCE`]
/// on the power sums. Never fails; malformed inputs are reported as
/// violations.
pub fn check_feasible(
    scenario: &NetworkScenario,
    assignment: &Assignment,
    powers: &PowerAllocation,
) -> FeasibilityReport {
    let mut violations = Vec::new();
    let n_sc = scenario.num_subchannels;

    if assignment.dl_user.len() != n_sc
        || assignment.ul_user.len() != n_sc
        || powers.dl.len() != n_sc
        || powers.ul.len() != n_sc
    {
        violations.push(Violation::Malformed(format!(
            "expected {n_sc} sub-channels, got assignment {}x{} powers {}x{}",
            assignment.dl_user.len(),
            assignment.ul_user.len(),
            powers.dl.len(),
            powers.ul.len()
        )));
        return FeasibilityReport {
            feasible: false,
            violations,
        };
    }

    for n in 0..n_sc {
        for (user, power, uplink) in [
            (assignment.dl_user[n], powers.dl[n], false),
            (assignment.ul_user[n], powers.ul[n], true),
        ] {
            if power < 0.0 {
                violations.push(Violation::NegativePower { subchannel: n, uplink });
            }
            match user {
                Some(u) if u >= scenario.num_users => {
                    violations.push(Violation::Malformed(format!(
                        "user index {u} out of range on sub-channel {n}"
                    )));
                }
                None if power != 0.0 => {
                    violations.push(Violation::PowerOnUnassigned { subchannel: n, uplink });
                }
                _ => {}
            }
        }
        if let (Some(k), Some(j)) = (assignment.dl_user[n], assignment.ul_user[n]) {
            if k == j && k < scenario.num_users && !scenario.is_full_duplex(k) {
                violations.push(Violation::HalfDuplexConflict { user: k, subchannel: n });
            }
        }
    }

    let dl_total = powers.total_downlink();
    if dl_total > scenario.bs_power_budget + POWER_TOLERANCE {
        violations.push(Violation::BsPowerBudget {
            total: dl_total,
            budget: scenario.bs_power_budget,
        });
    }
    for j in 0..scenario.num_users {
        let total: f64 = assignment.uplink_set(j).iter().map(|&n| powers.ul[n]).sum();
        if total > scenario.user_power_budget[j] + POWER_TOLERANCE {
            violations.push(Violation::UserPowerBudget {
                user: j,
                total,
                budget: scenario.user_power_budget[j],
            });
        }
    }

    FeasibilityReport {
        feasible: violations.is_empty(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DuplexMode, Topology};

    fn scenario(beta: f64, modes: Vec<DuplexMode>) -> NetworkScenario {
        let k = modes.len();
        NetworkScenario {
            num_users: k,
            num_subchannels: 1,
            duplex_mode: modes,
            bs_power_budget: 10.0,
            user_power_budget: vec![10.0; k],
            downlink_weight: vec![1.0; k],
            uplink_weight: vec![1.0; k],
            si_coefficient: beta,
            bs_noise: 1.0,
            user_noise: vec![1.0; k],
            topology: Topology {
                bs: [0.0, 0.0],
                users: vec![[1.0, 0.0]; k],
            },
        }
    }

    fn uniform_channels(k: usize, n: usize, bs_gain: f64, cross_gain: f64) -> ChannelRealization {
        ChannelRealization::from_tables(
            k,
            n,
            vec![bs_gain; k * n],
            vec![cross_gain; k * k * n],
        )
        .unwrap()
    }

    #[test]
    fn interference_gain_is_beta_for_fd_self_pair() {
        let s = scenario(1e-9, vec![DuplexMode::FullDuplex]);
        let ch = uniform_channels(1, 1, 1.0, 0.0);
        let g = effective_interference_gain(&s, &ch, 0, 0, 0).unwrap();
        assert_eq!(g, 1e-9);
    }

    #[test]
    fn interference_gain_is_cross_gain_for_distinct_users() {
        let s = scenario(0.5, vec![DuplexMode::HalfDuplex, DuplexMode::HalfDuplex]);
        let ch = uniform_channels(2, 1, 1.0, 0.5);
        let g = effective_interference_gain(&s, &ch, 0, 1, 0).unwrap();
        assert_eq!(g, 0.5);
    }

    #[test]
    fn interference_gain_zero_under_perfect_cancellation() {
        let s = scenario(0.0, vec![DuplexMode::FullDuplex]);
        let ch = uniform_channels(1, 1, 1.0, 0.0);
        assert_eq!(effective_interference_gain(&s, &ch, 0, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn interference_gain_rejects_hd_self_pair() {
        let s = scenario(0.5, vec![DuplexMode::HalfDuplex]);
        let ch = uniform_channels(1, 1, 1.0, 0.0);
        assert!(matches!(
            effective_interference_gain(&s, &ch, 0, 0, 0),
            Err(Error::Constraint(_))
        ));
    }

    #[test]
    fn zero_powers_give_zero_rate() {
        let s = scenario(0.5, vec![DuplexMode::FullDuplex]);
        let ch = uniform_channels(1, 1, 2.0, 0.0);
        let mut a = Assignment::empty(1);
        a.dl_user[0] = Some(0);
        a.ul_user[0] = Some(0);
        let p = PowerAllocation::zeros(1);
        let r = weighted_sum_rate(&s, &ch, &a, &p).unwrap();
        assert_eq!(r.downlink_rate, 0.0);
        assert_eq!(r.uplink_rate, 0.0);
        assert_eq!(r.sum_rate, 0.0);
    }

    #[test]
    fn single_downlink_closed_form() {
        // w=1, g=3, p=1, N_k=1 -> log2(4) = 2
        let s = scenario(0.0, vec![DuplexMode::HalfDuplex]);
        let ch = uniform_channels(1, 1, 3.0, 0.0);
        let mut a = Assignment::empty(1);
        a.dl_user[0] = Some(0);
        let p = PowerAllocation {
            dl: vec![1.0],
            ul: vec![0.0],
        };
        let r = weighted_sum_rate(&s, &ch, &a, &p).unwrap();
        assert!((r.downlink_rate - 2.0).abs() < 1e-12);
        assert_eq!(r.uplink_rate, 0.0);
    }

    #[test]
    fn fd_self_pair_hand_evaluated() {
        // w=v=1, g=1, p_dl=p_ul=1, N_k=N0=1, beta=1:
        // both directions see rate log2(1 + 1/(1+1)) = log2(1.5).
        let s = scenario(1.0, vec![DuplexMode::FullDuplex]);
        let ch = uniform_channels(1, 1, 1.0, 0.0);
        let mut a = Assignment::empty(1);
        a.dl_user[0] = Some(0);
        a.ul_user[0] = Some(0);
        let p = PowerAllocation {
            dl: vec![1.0],
            ul: vec![1.0],
        };
        let r = weighted_sum_rate(&s, &ch, &a, &p).unwrap();
        let expected = 1.5f64.log2();
        assert!((r.downlink_rate - expected).abs() < 1e-12);
        assert!((r.uplink_rate - expected).abs() < 1e-12);
        assert_eq!(r.sum_rate, r.downlink_rate + r.uplink_rate);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let s = scenario(0.0, vec![DuplexMode::HalfDuplex]);
        let ch = uniform_channels(1, 1, 1.0, 0.0);
        let a = Assignment::empty(2);
        let p = PowerAllocation::zeros(1);
        assert!(matches!(
            weighted_sum_rate(&s, &ch, &a, &p),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn empty_assignment_is_feasible() {
        let s = scenario(0.0, vec![DuplexMode::HalfDuplex]);
        let report = check_feasible(&s, &Assignment::empty(1), &PowerAllocation::zeros(1));
        assert!(report.feasible);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn bs_budget_violation_reported() {
        let s = scenario(0.0, vec![DuplexMode::HalfDuplex]);
        let mut a = Assignment::empty(1);
        a.dl_user[0] = Some(0);
        let p = PowerAllocation {
            dl: vec![s.bs_power_budget + 1.0],
            ul: vec![0.0],
        };
        let report = check_feasible(&s, &a, &p);
        assert!(!report.feasible);
        assert!(matches!(report.violations[0], Violation::BsPowerBudget { .. }));
    }

    #[test]
    fn hd_conflict_reported() {
        let s = scenario(0.0, vec![DuplexMode::HalfDuplex]);
        let mut a = Assignment::empty(1);
        a.dl_user[0] = Some(0);
        a.ul_user[0] = Some(0);
        let report = check_feasible(&s, &a, &PowerAllocation::zeros(1));
        assert!(!report.feasible);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::HalfDuplexConflict { user: 0, subchannel: 0 })));
    }

    #[test]
    fn budget_tolerance_is_absolute() {
        let s = scenario(0.0, vec![DuplexMode::HalfDuplex]);
        let mut a = Assignment::empty(1);
        a.dl_user[0] = Some(0);
        let p = PowerAllocation {
            dl: vec![s.bs_power_budget + 0.5 * POWER_TOLERANCE],
            ul: vec![0.0],
        };
        assert!(check_feasible(&s, &a, &p).feasible);
    }
}
