//! The comparison schemes: the proposed full-duplex method, half-duplex
//! downlink and uplink baselines, the hybrid half-duplex BS, the
//! no-interference upper bound, and a small-instance exhaustive-search
//! oracle.

use crate::allocator::{self, PairMode};
use crate::dcpower::{self, DcProblem, DcSettings, InitialPoint};
use crate::error::{Error, Result};
use crate::model::{Assignment, ChannelRealization, NetworkScenario, PowerAllocation, RateReport};
use crate::pairwise::{self, PairInstance};
use crate::rate::weighted_sum_rate;

/// What a scheme produced for one drop.
#[derive(Debug, Clone)]
pub struct SchemeResult {
    pub assignment: Assignment,
    pub powers: PowerAllocation,
    pub report: RateReport,
}

/// Exhaustive search refuses instances larger than this.
pub const EXHAUSTIVE_MAX_USERS: usize = 3;
pub const EXHAUSTIVE_MAX_SUBCHANNELS: usize = 4;

/// The proposed method: greedy sub-channel pairing followed by DC power
/// allocation warm-started from the provisional capped powers. Covers both
/// the all-FD and the FD-BS-with-HD-users systems through the scenario's
/// duplex flags.
pub fn scheme_fd(scenario: &NetworkScenario, channels: &ChannelRealization) -> Result<SchemeResult> {
    scheme_fd_with(scenario, channels, &DcSettings::default())
}

/// [`scheme_fd`] with explicit solver settings (the initial point is always
/// replaced by the allocator warm start).
pub fn scheme_fd_with(
    scenario: &NetworkScenario,
    channels: &ChannelRealization,
    base: &DcSettings,
) -> Result<SchemeResult> {
    let out = allocator::allocate(scenario, channels);
    let problem = DcProblem::from_assignment(scenario, channels, &out.assignment)?;
    let settings = DcSettings {
        initial_point: InitialPoint::WarmStart(problem.stack(&out.powers)),
        ..base.clone()
    };
    let dc = dcpower::dc_iterate(&problem, &settings)?;
    let mut report = weighted_sum_rate(scenario, channels, &out.assignment, &dc.powers)?;
    report.objective_trace = dc.trace;
    Ok(SchemeResult {
        assignment: out.assignment,
        powers: dc.powers,
        report,
    })
}

/// Half-duplex downlink baseline: each sub-channel goes to the user with the
/// best weighted rate at an equal power split, then multi-level
/// water-filling spreads the BS budget. No uplink.
pub fn scheme_hd_downlink(
    scenario: &NetworkScenario,
    channels: &ChannelRealization,
) -> Result<SchemeResult> {
    let n_sc = scenario.num_subchannels;
    let mut assignment = Assignment::empty(n_sc);
    for n in 0..n_sc {
        let mut best = 0usize;
        let mut best_metric = f64::NEG_INFINITY;
        for k in 0..scenario.num_users {
            let metric = hd_downlink_metric(scenario, channels, k, n);
            if metric > best_metric {
                best_metric = metric;
                best = k;
            }
        }
        assignment.dl_user[n] = Some(best);
    }

    let users: Vec<usize> = assignment.dl_user.iter().map(|u| u.unwrap()).collect();
    let weights: Vec<f64> = users.iter().map(|&k| scenario.downlink_weight[k]).collect();
    let gains: Vec<f64> = users
        .iter()
        .enumerate()
        .map(|(n, &k)| channels.bs_user_gain(k, n))
        .collect();
    let noises: Vec<f64> = users.iter().map(|&k| scenario.user_noise[k]).collect();
    let dl = dcpower::waterfill(&weights, &gains, &noises, scenario.bs_power_budget);

    let powers = PowerAllocation {
        dl,
        ul: vec![0.0; n_sc],
    };
    let report = weighted_sum_rate(scenario, channels, &assignment, &powers)?;
    Ok(SchemeResult {
        assignment,
        powers,
        report,
    })
}

/// The weighted-SNR rule of the downlink baseline: weighted rate at the
/// equal split P0/N. Isolated so the interpretation lives in one place.
fn hd_downlink_metric(
    scenario: &NetworkScenario,
    channels: &ChannelRealization,
    k: usize,
    n: usize,
) -> f64 {
    let equal_share = scenario.bs_power_budget / scenario.num_subchannels as f64;
    scenario.downlink_weight[k]
        * (1.0 + channels.bs_user_gain(k, n) * equal_share / scenario.user_noise[k]).log2()
}

/// Half-duplex uplink baseline: greedy sub-channel assignment by marginal
/// weighted rate at an equal split of each user's budget over its tentative
/// set, then per-user water-filling. No downlink.
pub fn scheme_hd_uplink(
    scenario: &NetworkScenario,
    channels: &ChannelRealization,
) -> Result<SchemeResult> {
    let n_sc = scenario.num_subchannels;
    let mut assignment = Assignment::empty(n_sc);
    let mut assigned_count = vec![0usize; scenario.num_users];

    for &n in &allocator::rank_subchannels(channels) {
        let mut best = 0usize;
        let mut best_metric = f64::NEG_INFINITY;
        for k in 0..scenario.num_users {
            let share = scenario.user_power_budget[k] / (assigned_count[k] + 1) as f64;
            let metric = scenario.uplink_weight[k]
                * (1.0 + channels.bs_user_gain(k, n) * share / scenario.bs_noise).log2();
            if metric > best_metric {
                best_metric = metric;
                best = k;
            }
        }
        assignment.ul_user[n] = Some(best);
        assigned_count[best] += 1;
    }

    let mut ul = vec![0.0; n_sc];
    for j in 0..scenario.num_users {
        let set = assignment.uplink_set(j);
        if set.is_empty() {
            continue;
        }
        let weights = vec![scenario.uplink_weight[j]; set.len()];
        let gains: Vec<f64> = set.iter().map(|&n| channels.bs_user_gain(j, n)).collect();
        let noises = vec![scenario.bs_noise; set.len()];
        let powers = dcpower::waterfill(&weights, &gains, &noises, scenario.user_power_budget[j]);
        for (i, &n) in set.iter().enumerate() {
            ul[n] = powers[i];
        }
    }

    let powers = PowerAllocation {
        dl: vec![0.0; n_sc],
        ul,
    };
    let report = weighted_sum_rate(scenario, channels, &assignment, &powers)?;
    Ok(SchemeResult {
        assignment,
        powers,
        report,
    })
}

/// Hybrid half-duplex BS: the greedy allocator restricted to one direction
/// per sub-channel, then multi-level water-filling on the downlink set and
/// per-user water-filling on the uplink sets.
pub fn scheme_hhd(scenario: &NetworkScenario, channels: &ChannelRealization) -> Result<SchemeResult> {
    let out = allocator::allocate_with_mode(scenario, channels, PairMode::Exclusive);
    let assignment = out.assignment;
    let n_sc = scenario.num_subchannels;

    let dl_set: Vec<usize> = (0..n_sc).filter(|&n| assignment.dl_user[n].is_some()).collect();
    let mut dl = vec![0.0; n_sc];
    if !dl_set.is_empty() {
        let users: Vec<usize> = dl_set.iter().map(|&n| assignment.dl_user[n].unwrap()).collect();
        let weights: Vec<f64> = users.iter().map(|&k| scenario.downlink_weight[k]).collect();
        let gains: Vec<f64> = dl_set
            .iter()
            .zip(&users)
            .map(|(&n, &k)| channels.bs_user_gain(k, n))
            .collect();
        let noises: Vec<f64> = users.iter().map(|&k| scenario.user_noise[k]).collect();
        let powers = dcpower::waterfill(&weights, &gains, &noises, scenario.bs_power_budget);
        for (i, &n) in dl_set.iter().enumerate() {
            dl[n] = powers[i];
        }
    }

    let mut ul = vec![0.0; n_sc];
    for j in 0..scenario.num_users {
        let set = assignment.uplink_set(j);
        if set.is_empty() {
            continue;
        }
        let weights = vec![scenario.uplink_weight[j]; set.len()];
        let gains: Vec<f64> = set.iter().map(|&n| channels.bs_user_gain(j, n)).collect();
        let noises = vec![scenario.bs_noise; set.len()];
        let powers = dcpower::waterfill(&weights, &gains, &noises, scenario.user_power_budget[j]);
        for (i, &n) in set.iter().enumerate() {
            ul[n] = powers[i];
        }
    }

    let powers = PowerAllocation { dl, ul };
    let report = weighted_sum_rate(scenario, channels, &assignment, &powers)?;
    Ok(SchemeResult {
        assignment,
        powers,
        report,
    })
}

/// The two half-duplex baselines overlaid without any interference.
#[derive(Debug, Clone)]
pub struct UpperBoundResult {
    pub sum_rate: f64,
    pub downlink: SchemeResult,
    pub uplink: SchemeResult,
}

/// Upper bound: HD downlink rate plus HD uplink rate, as if both networks
/// ran at once without interacting.
pub fn scheme_upper_bound(
    scenario: &NetworkScenario,
    channels: &ChannelRealization,
) -> Result<UpperBoundResult> {
    let downlink = scheme_hd_downlink(scenario, channels)?;
    let uplink = scheme_hd_uplink(scenario, channels)?;
    Ok(UpperBoundResult {
        sum_rate: downlink.report.sum_rate + uplink.report.sum_rate,
        downlink,
        uplink,
    })
}

/// Best-found joint solution by enumerating every legal per-sub-channel
/// (downlink, uplink) user combination and running the DC power loop from
/// multiple starting points for each. Guarded to small instances.
pub fn exhaustive_oracle(
    scenario: &NetworkScenario,
    channels: &ChannelRealization,
    settings: &DcSettings,
) -> Result<SchemeResult> {
    let k_users = scenario.num_users;
    let n_sc = scenario.num_subchannels;
    if k_users > EXHAUSTIVE_MAX_USERS || n_sc > EXHAUSTIVE_MAX_SUBCHANNELS {
        return Err(Error::Guard(format!(
            "exhaustive search limited to K <= {EXHAUSTIVE_MAX_USERS}, N <= {EXHAUSTIVE_MAX_SUBCHANNELS}; got K={k_users}, N={n_sc}"
        )));
    }

    // Legal per-sub-channel options: any user or none per direction, half-
    // duplex users never in both directions at once.
    let mut options: Vec<(Option<usize>, Option<usize>)> = Vec::new();
    for dl in std::iter::once(None).chain((0..k_users).map(Some)) {
        for ul in std::iter::once(None).chain((0..k_users).map(Some)) {
            if let (Some(k), Some(j)) = (dl, ul) {
                if k == j && !scenario.is_full_duplex(k) {
                    continue;
                }
            }
            options.push((dl, ul));
        }
    }

    let mut best: Option<SchemeResult> = None;
    let mut choice = vec![0usize; n_sc];
    loop {
        let mut assignment = Assignment::empty(n_sc);
        for n in 0..n_sc {
            let (dl, ul) = options[choice[n]];
            assignment.dl_user[n] = dl;
            assignment.ul_user[n] = ul;
        }

        let problem = DcProblem::from_assignment(scenario, channels, &assignment)?;
        let coupled = (0..n_sc)
            .any(|n| assignment.dl_user[n].is_some() && assignment.ul_user[n].is_some());
        let warm = provisional_for_assignment(scenario, channels, &assignment);
        let starts: &[InitialPoint] = if coupled {
            &[
                InitialPoint::Zero,
                InitialPoint::UniformFullBudget,
                InitialPoint::WarmStart(problem.stack(&warm)),
            ]
        } else {
            // Without coupling the surrogate is exact and any start reaches
            // the unique optimum.
            &[InitialPoint::UniformFullBudget]
        };

        for start in starts {
            let dc = dcpower::dc_iterate(
                &problem,
                &DcSettings {
                    initial_point: start.clone(),
                    ..settings.clone()
                },
            )?;
            let candidate_value = *dc.trace.last().unwrap();
            if best
                .as_ref()
                .map_or(true, |b| candidate_value > b.report.sum_rate)
            {
                let mut report = weighted_sum_rate(scenario, channels, &assignment, &dc.powers)?;
                report.objective_trace = dc.trace;
                best = Some(SchemeResult {
                    assignment: assignment.clone(),
                    powers: dc.powers,
                    report,
                });
            }
        }

        // next assignment in mixed-radix order
        let mut carry = true;
        for digit in choice.iter_mut() {
            if carry {
                *digit += 1;
                if *digit == options.len() {
                    *digit = 0;
                } else {
                    carry = false;
                }
            }
        }
        if carry {
            break;
        }
    }

    Ok(best.expect("enumeration covers at least the empty assignment"))
}

/// Equal-split capped powers for a fixed assignment: paired sub-channels get
/// the closed-form two-link solution under per-slot caps, one-sided channels
/// get their full cap.
fn provisional_for_assignment(
    scenario: &NetworkScenario,
    channels: &ChannelRealization,
    assignment: &Assignment,
) -> PowerAllocation {
    let n_sc = scenario.num_subchannels;
    let dl_count = assignment.dl_user.iter().flatten().count().max(1);
    let mut ul_counts = vec![0usize; scenario.num_users];
    for j in assignment.ul_user.iter().flatten() {
        ul_counts[*j] += 1;
    }

    let mut powers = PowerAllocation::zeros(n_sc);
    let bs_cap = scenario.bs_power_budget / dl_count as f64;
    for n in 0..n_sc {
        match (assignment.dl_user[n], assignment.ul_user[n]) {
            (Some(k), Some(j)) => {
                let i_kj = if k == j {
                    scenario.si_coefficient
                } else {
                    channels.user_user_gain(k, j, n)
                };
                let inst = PairInstance {
                    w_k: scenario.downlink_weight[k],
                    v_j: scenario.uplink_weight[j],
                    g_k: channels.bs_user_gain(k, n),
                    g_j: channels.bs_user_gain(j, n),
                    i_kj,
                    n_k: scenario.user_noise[k],
                    n0: scenario.bs_noise,
                    beta: scenario.si_coefficient,
                    p_max1: bs_cap,
                    p_max2: scenario.user_power_budget[j] / ul_counts[j] as f64,
                };
                let sol = pairwise::solve_pair(&inst);
                powers.dl[n] = sol.p_dl;
                powers.ul[n] = sol.p_ul;
            }
            (Some(_), None) => powers.dl[n] = bs_cap,
            (None, Some(j)) => {
                powers.ul[n] = scenario.user_power_budget[j] / ul_counts[j] as f64;
            }
            (None, None) => {}
        }
    }
    powers
}
