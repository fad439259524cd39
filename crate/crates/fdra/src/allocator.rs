//! Greedy per-sub-channel pairing of downlink and uplink users.
//!
//! Sub-channels are visited in order of their best BS-link gain. At each
//! step every legal (downlink, uplink) user pair is solved in closed form
//! with power caps that shrink as the BS and each user win more
//! sub-channels, and the pair with the largest two-link rate is assigned.
//! The resulting powers are provisional: the final allocation over the fixed
//! assignment is produced by [`crate::dcpower`].

use crate::model::{Assignment, ChannelRealization, NetworkScenario, PowerAllocation};
use crate::pairwise::{self, PairInstance, PairSolution};

/// Which candidate set the per-pair solver searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    /// The full five-candidate set; sub-channels may carry both directions.
    Full,
    /// Only the two one-directional candidates; used by the hybrid
    /// half-duplex baseline where the BS never transmits and receives on the
    /// same sub-channel.
    Exclusive,
}

/// One iteration of the greedy loop, recorded for inspection and testing.
#[derive(Debug, Clone)]
pub struct AllocationStep {
    pub subchannel: usize,
    /// d_0 before this assignment: the BS cap is `P0 / bs_divisor`.
    pub bs_divisor: usize,
    /// d_k before this assignment, per user: user k's cap is `P_k / user_divisors[k]`.
    pub user_divisors: Vec<usize>,
    /// (downlink user, uplink user) chosen by the pair search, before slots
    /// whose winning power is zero are dropped from the assignment.
    pub chosen: (Option<usize>, Option<usize>),
    pub p_dl: f64,
    pub p_ul: f64,
    pub objective: f64,
}

/// Output of the greedy allocation: the assignment, the provisional capped
/// powers, and the per-iteration trace.
#[derive(Debug, Clone)]
pub struct AllocationOutcome {
    pub assignment: Assignment,
    pub powers: PowerAllocation,
    pub steps: Vec<AllocationStep>,
}

/// Sorts sub-channel indices so the best per-sub-channel BS-link gain
/// max_k g_k(n) is nonincreasing; ties keep ascending index order.
pub fn rank_subchannels(channels: &ChannelRealization) -> Vec<usize> {
    let n_sc = channels.num_subchannels();
    let best_gain: Vec<f64> = (0..n_sc)
        .map(|n| {
            (0..channels.num_users())
                .map(|k| channels.bs_user_gain(k, n))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let mut order: Vec<usize> = (0..n_sc).collect();
    order.sort_by(|&a, &b| best_gain[b].partial_cmp(&best_gain[a]).unwrap());
    order
}

/// Runs the greedy allocation with the full candidate set.
pub fn allocate(scenario: &NetworkScenario, channels: &ChannelRealization) -> AllocationOutcome {
    allocate_with_mode(scenario, channels, PairMode::Full)
}

/// Runs the greedy allocation with the given candidate set.
pub fn allocate_with_mode(
    scenario: &NetworkScenario,
    channels: &ChannelRealization,
    mode: PairMode,
) -> AllocationOutcome {
    let k_users = scenario.num_users;
    let n_sc = scenario.num_subchannels;
    assert_eq!(channels.num_users(), k_users, "channel/scenario user mismatch");
    assert_eq!(
        channels.num_subchannels(),
        n_sc,
        "channel/scenario sub-channel mismatch"
    );

    let mut assignment = Assignment::empty(n_sc);
    let mut powers = PowerAllocation::zeros(n_sc);
    let mut steps = Vec::with_capacity(n_sc);
    let mut bs_divisor: usize = 1;
    let mut user_divisors: Vec<usize> = vec![1; k_users];

    for &n in &rank_subchannels(channels) {
        let bs_cap = scenario.bs_power_budget / bs_divisor as f64;
        let mut best: Option<(usize, usize, PairSolution)> = None;
        for k in 0..k_users {
            for j in 0..k_users {
                if k == j && !scenario.is_full_duplex(k) {
                    continue;
                }
                let sol =
                    pairwise_solution(scenario, channels, n, k, j, bs_cap, mode, &user_divisors);
                // Strict improvement keeps the lowest (k, j) on exact ties.
                if best.as_ref().map_or(true, |(_, _, b)| sol.objective > b.objective) {
                    best = Some((k, j, sol));
                }
            }
        }

        let (k, j, sol) = best.unwrap_or_else(|| {
            // No legal pair exists (a single half-duplex user): pick the
            // better one-directional use of the sub-channel.
            best_one_sided(scenario, channels, n, bs_cap, &user_divisors)
        });
        steps.push(apply_pair(
            &mut assignment,
            &mut powers,
            &mut bs_divisor,
            &mut user_divisors,
            n,
            k,
            j,
            &sol,
        ));
    }

    AllocationOutcome {
        assignment,
        powers,
        steps,
    }
}

/// Builds and solves the two-link problem for pair (k: downlink, j: uplink)
/// on sub-channel `n` under the current caps.
pub fn pairwise_solution(
    scenario: &NetworkScenario,
    channels: &ChannelRealization,
    n: usize,
    k: usize,
    j: usize,
    bs_cap: f64,
    mode: PairMode,
    user_divisors: &[usize],
) -> PairSolution {
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
        p_max2: scenario.user_power_budget[j] / user_divisors[j] as f64,
    };
    match mode {
        PairMode::Full => pairwise::solve_pair(&inst),
        PairMode::Exclusive => pairwise::solve_pair_exclusive(&inst),
    }
}

fn best_one_sided(
    scenario: &NetworkScenario,
    channels: &ChannelRealization,
    n: usize,
    bs_cap: f64,
    user_divisors: &[usize],
) -> (usize, usize, PairSolution) {
    // Same machinery, restricted candidate set: (cap, 0) and (0, cap) never
    // schedule a half-duplex user in both directions at once.
    let mut best: Option<(usize, usize, PairSolution)> = None;
    for k in 0..scenario.num_users {
        let sol = pairwise_solution(
            scenario,
            channels,
            n,
            k,
            k,
            bs_cap,
            PairMode::Exclusive,
            user_divisors,
        );
        if best.as_ref().map_or(true, |(_, _, b)| sol.objective > b.objective) {
            best = Some((k, k, sol));
        }
    }
    best.expect("at least one user")
}

#[allow(clippy::too_many_arguments)]
fn apply_pair(
    assignment: &mut Assignment,
    powers: &mut PowerAllocation,
    bs_divisor: &mut usize,
    user_divisors: &mut [usize],
    n: usize,
    k: usize,
    j: usize,
    sol: &PairSolution,
) -> AllocationStep {
    let step = AllocationStep {
        subchannel: n,
        bs_divisor: *bs_divisor,
        user_divisors: user_divisors.to_vec(),
        chosen: (
            (sol.p_dl > 0.0).then_some(k),
            (sol.p_ul > 0.0).then_some(j),
        ),
        p_dl: sol.p_dl,
        p_ul: sol.p_ul,
        objective: sol.objective,
    };
    if sol.p_dl > 0.0 {
        assignment.dl_user[n] = Some(k);
        powers.dl[n] = sol.p_dl;
        *bs_divisor += 1;
    }
    if sol.p_ul > 0.0 {
        assignment.ul_user[n] = Some(j);
        powers.ul[n] = sol.p_ul;
        user_divisors[j] += 1;
    }
    step
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channels, sample_topology, ScenarioTemplate};
    use crate::model::{DuplexMode, Topology};

    fn scenario(modes: Vec<DuplexMode>, n_sc: usize, beta: f64) -> NetworkScenario {
        let k = modes.len();
        NetworkScenario {
            num_users: k,
            num_subchannels: n_sc,
            duplex_mode: modes,
            bs_power_budget: 2.0,
            user_power_budget: vec![1.0; k],
            downlink_weight: vec![1.0; k],
            uplink_weight: vec![1.0; k],
            si_coefficient: beta,
            bs_noise: 1e-3,
            user_noise: vec![1e-3; k],
            topology: Topology {
                bs: [0.0, 0.0],
                users: vec![[1.0, 0.0]; k],
            },
        }
    }

    fn channels(k: usize, n_sc: usize, bs: Vec<f64>, cross: f64) -> ChannelRealization {
        ChannelRealization::from_tables(k, n_sc, bs, vec![cross; k * k * n_sc]).unwrap()
    }

    fn table_scenario(template: &ScenarioTemplate, modes: Vec<DuplexMode>, beta: f64) -> NetworkScenario {
        let k = modes.len();
        NetworkScenario {
            num_users: k,
            num_subchannels: template.num_subchannels,
            duplex_mode: modes,
            bs_power_budget: template.bs_power_watts(),
            user_power_budget: vec![template.ue_power_watts(); k],
            downlink_weight: vec![1.0; k],
            uplink_weight: vec![1.0; k],
            si_coefficient: beta,
            bs_noise: template.noise_per_subchannel_watts(),
            user_noise: vec![template.noise_per_subchannel_watts(); k],
            topology: Topology {
                bs: [0.0, 0.0],
                users: vec![[1.0, 0.0]; k],
            },
        }
    }

    #[test]
    fn ranking_sorts_by_best_gain_descending() {
        // best gains per sub-channel: [1, 3, 2] -> order [1, 2, 0]
        let ch = channels(1, 3, vec![1.0, 3.0, 2.0], 0.0);
        assert_eq!(rank_subchannels(&ch), vec![1, 2, 0]);
    }

    #[test]
    fn ranking_ties_keep_index_order() {
        let ch = channels(2, 3, vec![1.0; 6], 0.0);
        assert_eq!(rank_subchannels(&ch), vec![0, 1, 2]);
    }

    #[test]
    fn ranking_is_a_valid_permutation_with_nonincreasing_gains() {
        let t = ScenarioTemplate::outdoor();
        let topo = sample_topology(&t, 5, 3);
        let ch = sample_channels(&t, &topo, 4);
        let order = rank_subchannels(&ch);
        let mut seen = vec![false; 64];
        for &n in &order {
            seen[n] = true;
        }
        assert!(seen.iter().all(|&s| s));
        let best = |n: usize| {
            (0..5)
                .map(|k| ch.bs_user_gain(k, n))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        for w in order.windows(2) {
            assert!(best(w[0]) >= best(w[1]));
        }
    }

    #[test]
    fn single_fd_user_gets_both_directions_with_full_budgets() {
        let s = scenario(vec![DuplexMode::FullDuplex], 1, 0.0);
        let ch = channels(1, 1, vec![1.0], 0.0);
        let out = allocate(&s, &ch);
        assert_eq!(out.assignment.dl_user[0], Some(0));
        assert_eq!(out.assignment.ul_user[0], Some(0));
        assert_eq!(out.powers.dl[0], s.bs_power_budget);
        assert_eq!(out.powers.ul[0], s.user_power_budget[0]);
    }

    #[test]
    fn single_hd_user_is_served_one_direction_per_subchannel() {
        let s = scenario(vec![DuplexMode::HalfDuplex], 2, 0.5);
        let ch = channels(1, 2, vec![1.0, 0.9], 0.0);
        let out = allocate(&s, &ch);
        for n in 0..2 {
            let dl = out.assignment.dl_user[n].is_some();
            let ul = out.assignment.ul_user[n].is_some();
            assert!(dl != ul, "exactly one direction per sub-channel");
        }
    }

    #[test]
    fn downlink_only_network_reduces_to_best_weighted_gain_rule() {
        // Two HD users with zero uplink weights: every sub-channel goes to
        // the downlink of the user maximizing w_k log2(1 + g_k cap / N_k),
        // and no uplink power is ever spent.
        let mut s = scenario(vec![DuplexMode::HalfDuplex, DuplexMode::HalfDuplex], 4, 0.3);
        s.uplink_weight = vec![0.0, 0.0];
        s.downlink_weight = vec![1.0, 0.7];
        let bs = vec![
            0.9, 0.1, 0.5, 0.3, // user 0
            0.2, 0.8, 0.4, 0.6, // user 1
        ];
        let ch = channels(2, 4, bs, 0.05);
        let out = allocate(&s, &ch);

        assert!(out.powers.ul.iter().all(|&p| p == 0.0));
        assert!(out.assignment.ul_user.iter().all(|u| u.is_none()));

        // Replay the divisor mechanics with the direct rule.
        let mut divisor = 1usize;
        for &n in &rank_subchannels(&ch) {
            let cap = s.bs_power_budget / divisor as f64;
            let metric = |k: usize| {
                s.downlink_weight[k]
                    * (1.0 + ch.bs_user_gain(k, n) * cap / s.user_noise[k]).log2()
            };
            let expect = if metric(0) >= metric(1) { 0 } else { 1 };
            assert_eq!(out.assignment.dl_user[n], Some(expect), "sub-channel {n}");
            divisor += 1;
        }
    }

    #[test]
    fn greedy_choice_matches_per_step_enumeration() {
        // Independent re-enumeration of every legal pair at each recorded
        // step must reproduce the winner (argmax of L, lowest pair on ties).
        let template = ScenarioTemplate::indoor();
        for seed in 0..10u64 {
            let topo = sample_topology(&template, 2, seed);
            let full = sample_channels(&template, &topo, seed ^ 0x5eed);
            // shrink to N=2 by rebuilding tables
            let mut bs = Vec::new();
            for k in 0..2 {
                for n in 0..2 {
                    bs.push(full.bs_user_gain(k, n));
                }
            }
            let mut cross = vec![0.0; 2 * 2 * 2];
            for k in 0..2 {
                for j in 0..2 {
                    for n in 0..2 {
                        cross[(k * 2 + j) * 2 + n] = full.user_user_gain(k, j, n);
                    }
                }
            }
            let small = ChannelRealization::from_tables(2, 2, bs, cross).unwrap();
            let mut s = scenario(vec![DuplexMode::HalfDuplex, DuplexMode::FullDuplex], 2, 1e-9);
            s.topology = topo;

            let out = allocate(&s, &small);
            for step in &out.steps {
                let bs_cap = s.bs_power_budget / step.bs_divisor as f64;
                let mut best: Option<(usize, usize, PairSolution)> = None;
                for k in 0..2 {
                    for j in 0..2 {
                        if k == j && !s.is_full_duplex(k) {
                            continue;
                        }
                        let sol = pairwise_solution(
                            &s,
                            &small,
                            step.subchannel,
                            k,
                            j,
                            bs_cap,
                            PairMode::Full,
                            &step.user_divisors,
                        );
                        if best.as_ref().map_or(true, |(_, _, b)| sol.objective > b.objective) {
                            best = Some((k, j, sol));
                        }
                    }
                }
                let (k, j, sol) = best.unwrap();
                assert_eq!(
                    step.chosen,
                    ((sol.p_dl > 0.0).then_some(k), (sol.p_ul > 0.0).then_some(j)),
                    "seed {seed}, sub-channel {}",
                    step.subchannel
                );
                assert_eq!(step.objective, sol.objective);
            }
        }
    }

    #[test]
    fn outputs_satisfy_structure_and_caps_on_random_drops() {
        let template = ScenarioTemplate::outdoor();
        for seed in 0..5u64 {
            let topo = sample_topology(&template, 6, seed);
            let ch = sample_channels(&template, &topo, seed + 100);
            let modes: Vec<DuplexMode> = (0..6)
                .map(|k| {
                    if k % 2 == 0 {
                        DuplexMode::FullDuplex
                    } else {
                        DuplexMode::HalfDuplex
                    }
                })
                .collect();
            let mut s = table_scenario(&template, modes, 1e-9);
            s.topology = topo;
            let out = allocate(&s, &ch);

            for step in &out.steps {
                // caps respected
                assert!(step.p_dl <= s.bs_power_budget / step.bs_divisor as f64 + 1e-12);
                if let Some(j) = step.chosen.1 {
                    assert!(
                        step.p_ul
                            <= s.user_power_budget[j] / step.user_divisors[j] as f64 + 1e-12
                    );
                }
            }
            // HD exclusivity
            for n in 0..64 {
                if let (Some(k), Some(j)) = (out.assignment.dl_user[n], out.assignment.ul_user[n])
                {
                    if k == j {
                        assert!(s.is_full_duplex(k));
                    }
                }
            }
            // divisors monotone: recorded snapshots never decrease
            for w in out.steps.windows(2) {
                assert!(w[1].bs_divisor >= w[0].bs_divisor);
                for u in 0..6 {
                    assert!(w[1].user_divisors[u] >= w[0].user_divisors[u]);
                }
            }
        }
    }

    #[test]
    fn exclusive_mode_never_pairs_directions() {
        let template = ScenarioTemplate::indoor();
        let topo = sample_topology(&template, 4, 2);
        let ch = sample_channels(&template, &topo, 3);
        let mut s = table_scenario(&template, vec![DuplexMode::FullDuplex; 4], 0.0);
        s.topology = topo;
        let out = allocate_with_mode(&s, &ch, PairMode::Exclusive);
        for n in 0..64 {
            assert!(
                out.assignment.dl_user[n].is_none() || out.assignment.ul_user[n].is_none(),
                "sub-channel {n} carries both directions in exclusive mode"
            );
        }
    }
}
