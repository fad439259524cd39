//! Final power allocation over a fixed assignment.
//!
//! The weighted sum-rate is a difference of two concave functions f - h in
//! the stacked power vector. Each outer iteration replaces h by its tangent
//! at the current point and maximizes the concave surrogate over the power
//! constraints with a projected gradient method; the tangent upper-bounds h,
//! so the true objective never decreases across iterations. Also hosts the
//! weighted water-filling primitive used by the baseline schemes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Assignment, ChannelRealization, NetworkScenario, PowerAllocation};
use crate::rate::effective_interference_gain;

const LN_2: f64 = std::f64::consts::LN_2;

/// Downlink side of a sub-channel in the power problem.
#[derive(Debug, Clone, Copy)]
pub struct DlEntry {
    pub user: usize,
    pub gain: f64,
    pub weight: f64,
    pub noise: f64,
}

/// Uplink side of a sub-channel in the power problem.
#[derive(Debug, Clone, Copy)]
pub struct UlEntry {
    pub user: usize,
    pub gain: f64,
    pub weight: f64,
}

/// One sub-channel of the power problem. `cross_gain` is the effective gain
/// with which the uplink user interferes with the downlink user; 0 when
/// either side is absent.
#[derive(Debug, Clone)]
pub struct DcSubchannel {
    pub dl: Option<DlEntry>,
    pub ul: Option<UlEntry>,
    pub cross_gain: f64,
}

/// The power allocation problem over a fixed assignment. The optimization
/// vector stacks the N downlink powers first, then the N uplink powers;
/// slots without an assigned user are pinned at zero.
#[derive(Debug, Clone)]
pub struct DcProblem {
    pub subchannels: Vec<DcSubchannel>,
    pub bs_budget: f64,
    pub user_budgets: Vec<f64>,
    pub bs_noise: f64,
    pub si_coefficient: f64,
    /// Vector indices of active downlink slots.
    dl_slots: Vec<usize>,
    /// Per uplink user: (user, vector indices of its slots).
    ul_groups: Vec<(usize, Vec<usize>)>,
}

impl DcProblem {
    /// Builds the problem for a scenario, channel realization and fixed
    /// assignment.
    pub fn from_assignment(
        scenario: &NetworkScenario,
        channels: &ChannelRealization,
        assignment: &Assignment,
    ) -> Result<Self> {
        let n_sc = scenario.num_subchannels;
        if assignment.num_subchannels() != n_sc {
            return Err(Error::Dimension(format!(
                "assignment has {} sub-channels, scenario {}",
                assignment.num_subchannels(),
                n_sc
            )));
        }
        let mut subchannels = Vec::with_capacity(n_sc);
        for n in 0..n_sc {
            let dl = assignment.dl_user[n].map(|k| DlEntry {
                user: k,
                gain: channels.bs_user_gain(k, n),
                weight: scenario.downlink_weight[k],
                noise: scenario.user_noise[k],
            });
            let ul = assignment.ul_user[n].map(|j| UlEntry {
                user: j,
                gain: channels.bs_user_gain(j, n),
                weight: scenario.uplink_weight[j],
            });
            let cross_gain = match (assignment.dl_user[n], assignment.ul_user[n]) {
                (Some(k), Some(j)) => effective_interference_gain(scenario, channels, k, j, n)?,
                _ => 0.0,
            };
            subchannels.push(DcSubchannel { dl, ul, cross_gain });
        }
        Ok(Self::new(
            subchannels,
            scenario.bs_power_budget,
            scenario.user_power_budget.clone(),
            scenario.bs_noise,
            scenario.si_coefficient,
        ))
    }

    /// Builds the problem from explicit per-sub-channel entries.
    pub fn new(
        subchannels: Vec<DcSubchannel>,
        bs_budget: f64,
        user_budgets: Vec<f64>,
        bs_noise: f64,
        si_coefficient: f64,
    ) -> Self {
        let n_sc = subchannels.len();
        let dl_slots: Vec<usize> = (0..n_sc).filter(|&n| subchannels[n].dl.is_some()).collect();
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (n, sc) in subchannels.iter().enumerate() {
            if let Some(ul) = &sc.ul {
                groups.entry(ul.user).or_default().push(n_sc + n);
            }
        }
        Self {
            subchannels,
            bs_budget,
            user_budgets,
            bs_noise,
            si_coefficient,
            dl_slots,
            ul_groups: groups.into_iter().collect(),
        }
    }

    pub fn num_subchannels(&self) -> usize {
        self.subchannels.len()
    }

    /// Length of the stacked power vector (2N).
    pub fn num_vars(&self) -> usize {
        2 * self.subchannels.len()
    }

    fn power_scale(&self) -> f64 {
        let user_max = self.user_budgets.iter().cloned().fold(0.0, f64::max);
        self.bs_budget.max(user_max).max(1.0)
    }

    /// Splits a stacked vector into the (downlink, uplink) allocation.
    pub fn to_power_allocation(&self, p: &[f64]) -> PowerAllocation {
        let n_sc = self.num_subchannels();
        PowerAllocation {
            dl: p[..n_sc].to_vec(),
            ul: p[n_sc..].to_vec(),
        }
    }

    /// Stacks a power allocation into the optimization vector layout.
    pub fn stack(&self, powers: &PowerAllocation) -> Vec<f64> {
        let mut p = powers.dl.clone();
        p.extend_from_slice(&powers.ul);
        p
    }
}

/// Evaluates the concave pair (f, h) whose difference is the weighted
/// sum-rate: f sums weighted logs of noise + interference + signal, h sums
/// weighted logs of noise + interference.
pub fn split_dc(problem: &DcProblem, p: &[f64]) -> (f64, f64) {
    let n_sc = problem.num_subchannels();
    let mut f = 0.0;
    let mut h = 0.0;
    for (n, sc) in problem.subchannels.iter().enumerate() {
        let p_dl = p[n];
        let p_ul = p[n_sc + n];
        if let Some(dl) = &sc.dl {
            let base = dl.noise + sc.cross_gain * p_ul;
            f += dl.weight * (base + dl.gain * p_dl).log2();
            h += dl.weight * base.log2();
        }
        if let Some(ul) = &sc.ul {
            let base = problem.bs_noise + problem.si_coefficient * p_dl;
            f += ul.weight * (base + ul.gain * p_ul).log2();
            h += ul.weight * base.log2();
        }
    }
    (f, h)
}

/// The true objective f - h, evaluated in ratio form for accuracy.
pub fn objective(problem: &DcProblem, p: &[f64]) -> f64 {
    let n_sc = problem.num_subchannels();
    let mut total = 0.0;
    for (n, sc) in problem.subchannels.iter().enumerate() {
        let p_dl = p[n];
        let p_ul = p[n_sc + n];
        if let Some(dl) = &sc.dl {
            let denom = dl.noise + sc.cross_gain * p_ul;
            total += dl.weight * (1.0 + dl.gain * p_dl / denom).log2();
        }
        if let Some(ul) = &sc.ul {
            let denom = problem.bs_noise + problem.si_coefficient * p_dl;
            total += ul.weight * (1.0 + ul.gain * p_ul / denom).log2();
        }
    }
    total
}

/// Gradient of the subtracted concave term h. Entries are zero wherever the
/// slot is unassigned or the sub-channel has no co-channel partner.
pub fn grad_h(problem: &DcProblem, p: &[f64]) -> Vec<f64> {
    let n_sc = problem.num_subchannels();
    let mut g = vec![0.0; problem.num_vars()];
    for (n, sc) in problem.subchannels.iter().enumerate() {
        if let (Some(dl), Some(ul)) = (&sc.dl, &sc.ul) {
            // d h / d p_dl(n): the BS self-interference seen by the uplink.
            g[n] = ul.weight * problem.si_coefficient
                / (LN_2 * (problem.bs_noise + problem.si_coefficient * p[n]));
            // d h / d p_ul(n): the uplink user's interference into the downlink.
            g[n_sc + n] =
                dl.weight * sc.cross_gain / (LN_2 * (dl.noise + sc.cross_gain * p[n_sc + n]));
        }
    }
    g
}

/// Gradient of f, written into `out` (no allocation).
fn grad_f(problem: &DcProblem, p: &[f64], out: &mut [f64]) {
    let n_sc = problem.num_subchannels();
    out.fill(0.0);
    for (n, sc) in problem.subchannels.iter().enumerate() {
        let p_dl = p[n];
        let p_ul = p[n_sc + n];
        if let Some(dl) = &sc.dl {
            let denom = LN_2 * (dl.noise + sc.cross_gain * p_ul + dl.gain * p_dl);
            out[n] += dl.weight * dl.gain / denom;
            if sc.ul.is_some() {
                out[n_sc + n] += dl.weight * sc.cross_gain / denom;
            }
        }
        if let Some(ul) = &sc.ul {
            let denom = LN_2 * (problem.bs_noise + problem.si_coefficient * p_dl + ul.gain * p_ul);
            out[n_sc + n] += ul.weight * ul.gain / denom;
            if sc.dl.is_some() {
                out[n] += ul.weight * problem.si_coefficient / denom;
            }
        }
    }
}

/// Projects `p` in place onto the feasible set: zero on unassigned slots,
/// nonnegative, BS budget over downlink slots, per-user budgets over uplink
/// slots.
pub fn project_feasible(problem: &DcProblem, p: &mut [f64], buf: &mut Vec<f64>) {
    let n_sc = problem.num_subchannels();
    for n in 0..n_sc {
        if problem.subchannels[n].dl.is_none() {
            p[n] = 0.0;
        }
        if problem.subchannels[n].ul.is_none() {
            p[n_sc + n] = 0.0;
        }
    }
    project_budget_group(p, &problem.dl_slots, problem.bs_budget, buf);
    for (user, slots) in &problem.ul_groups {
        project_budget_group(p, slots, problem.user_budgets[*user], buf);
    }
}

/// Euclidean projection of the `slots` coordinates of `p` onto
/// {x >= 0, sum x <= budget}.
fn project_budget_group(p: &mut [f64], slots: &[usize], budget: f64, buf: &mut Vec<f64>) {
    if slots.is_empty() {
        return;
    }
    if budget <= 0.0 {
        for &i in slots {
            p[i] = 0.0;
        }
        return;
    }
    let clipped_sum: f64 = slots.iter().map(|&i| p[i].max(0.0)).sum();
    if clipped_sum <= budget {
        for &i in slots {
            p[i] = p[i].max(0.0);
        }
        return;
    }
    // Projection onto the scaled simplex {x >= 0, sum x = budget}: threshold
    // found from the sorted values.
    buf.clear();
    buf.extend(slots.iter().map(|&i| p[i]));
    buf.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (r, &v) in buf.iter().enumerate() {
        cumulative += v;
        let t = (cumulative - budget) / (r + 1) as f64;
        if v - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    for &i in slots {
        p[i] = (p[i] - tau).max(0.0);
    }
}

/// How the DC loop picks its starting point.
#[derive(Debug, Clone)]
pub enum InitialPoint {
    Zero,
    /// Every assigned slot gets an equal share of its budget.
    UniformFullBudget,
    /// A caller-supplied stacked vector, rescaled per budget group if it
    /// overshoots a budget.
    WarmStart(Vec<f64>),
}

/// Solver knobs. `obj_tol_rel` scales with the magnitude of the initial
/// objective (floored at 1) to give the outer stopping threshold; `kkt_tol`
/// scales with the largest budget to give the inner one.
#[derive(Debug, Clone)]
pub struct DcSettings {
    pub max_outer_iterations: usize,
    pub obj_tol_rel: f64,
    pub kkt_tol: f64,
    pub max_inner_iterations: usize,
    pub initial_point: InitialPoint,
}

impl Default for DcSettings {
    fn default() -> Self {
        Self {
            max_outer_iterations: 50,
            obj_tol_rel: 1e-6,
            kkt_tol: 1e-7,
            max_inner_iterations: 20_000,
            initial_point: InitialPoint::Zero,
        }
    }
}

/// Result of the DC loop. `trace[0]` is the objective at the initial point;
/// one entry follows per outer iteration. `converged` is false only when the
/// iteration cap stopped the loop first.
#[derive(Debug, Clone, Serialize)]
pub struct DcOutcome {
    pub powers: PowerAllocation,
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Maximizes the concave surrogate f(p) - grad_h(p_t)^T p over the power
/// constraints by projected gradient ascent with a Barzilai-Borwein step and
/// backtracking. Starts at `p_t` and only accepts ascent steps, so the
/// returned surrogate value never falls below the one at `p_t`.
pub fn inner_solve(problem: &DcProblem, p_t: &[f64], settings: &DcSettings) -> Result<Vec<f64>> {
    let linear = grad_h(problem, p_t);
    let m = problem.num_vars();
    assert_eq!(p_t.len(), m, "linearization point has wrong length");

    let surrogate = |p: &[f64]| -> f64 {
        let (f, _) = split_dc(problem, p);
        f - linear.iter().zip(p).map(|(c, x)| c * x).sum::<f64>()
    };

    let mut buf = Vec::new();
    let mut p = p_t.to_vec();
    project_feasible(problem, &mut p, &mut buf);

    let mut grad = vec![0.0; m];
    let mut grad_prev = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut residual_probe = vec![0.0; m];
    let mut p_prev = vec![0.0; m];

    let mut value = surrogate(&p);
    let scale = problem.power_scale();
    let tol = settings.kkt_tol * scale;

    let mut step = 0.0;
    let mut last_residual = f64::INFINITY;
    for iter in 0..settings.max_inner_iterations {
        grad_f(problem, &p, &mut grad);
        for i in 0..m {
            grad[i] -= linear[i];
        }

        // KKT residual: displacement of a unit-step projected ascent.
        residual_probe.copy_from_slice(&p);
        for i in 0..m {
            residual_probe[i] += grad[i];
        }
        project_feasible(problem, &mut residual_probe, &mut buf);
        let residual = residual_probe
            .iter()
            .zip(&p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        last_residual = residual;
        if residual <= tol {
            return Ok(p);
        }

        if iter == 0 {
            let gmax = grad.iter().fold(0.0f64, |a, &g| a.max(g.abs()));
            step = if gmax > 0.0 { scale / gmax } else { 1.0 };
        } else {
            // Barzilai-Borwein step from the last accepted move.
            let mut ss = 0.0;
            let mut sy = 0.0;
            for i in 0..m {
                let s = p[i] - p_prev[i];
                let y = grad_prev[i] - grad[i];
                ss += s * s;
                sy += s * y;
            }
            step = if sy > 1e-300 { ss / sy } else { step * 2.0 };
        }
        step = step.clamp(1e-20, 1e20);

        p_prev.copy_from_slice(&p);
        grad_prev.copy_from_slice(&grad);

        // Backtracking on the projected trial point (Armijo along the arc).
        let mut accepted = false;
        for _ in 0..60 {
            trial.copy_from_slice(&p);
            for i in 0..m {
                trial[i] += step * grad[i];
            }
            project_feasible(problem, &mut trial, &mut buf);
            let trial_value = surrogate(&trial);
            let inner_product: f64 = grad
                .iter()
                .zip(trial.iter().zip(&p))
                .map(|(g, (t, x))| g * (t - x))
                .sum();
            if trial_value >= value + 1e-4 * inner_product && trial_value >= value {
                p.copy_from_slice(&trial);
                value = trial_value;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // Line search exhausted at floating-point resolution: the point
            // is as stationary as the arithmetic allows.
            if residual <= tol * 10.0 {
                return Ok(p);
            }
            return Err(Error::InnerNonConvergence {
                residual,
                iterations: iter,
                best_iterate: p,
            });
        }
    }

    Err(Error::InnerNonConvergence {
        residual: last_residual,
        iterations: settings.max_inner_iterations,
        best_iterate: p,
    })
}

/// Runs the DC outer loop from the configured starting point until the
/// objective improvement drops below the tolerance or the iteration cap is
/// reached.
pub fn dc_iterate(problem: &DcProblem, settings: &DcSettings) -> Result<DcOutcome> {
    let mut buf = Vec::new();
    let mut p = initial_vector(problem, &settings.initial_point);
    project_feasible(problem, &mut p, &mut buf);

    let mut trace = vec![objective(problem, &p)];
    let eps_obj = settings.obj_tol_rel * trace[0].abs().max(1.0);

    let mut converged = false;
    for _ in 0..settings.max_outer_iterations {
        p = inner_solve(problem, &p, settings)?;
        let value = objective(problem, &p);
        let improvement = value - *trace.last().unwrap();
        trace.push(value);
        if improvement < eps_obj {
            converged = true;
            break;
        }
    }

    Ok(DcOutcome {
        powers: problem.to_power_allocation(&p),
        trace,
        converged,
    })
}

fn initial_vector(problem: &DcProblem, rule: &InitialPoint) -> Vec<f64> {
    let m = problem.num_vars();
    match rule {
        InitialPoint::Zero => vec![0.0; m],
        InitialPoint::UniformFullBudget => {
            let mut p = vec![0.0; m];
            if !problem.dl_slots.is_empty() {
                let share = problem.bs_budget / problem.dl_slots.len() as f64;
                for &i in &problem.dl_slots {
                    p[i] = share;
                }
            }
            for (user, slots) in &problem.ul_groups {
                let share = problem.user_budgets[*user] / slots.len() as f64;
                for &i in slots {
                    p[i] = share;
                }
            }
            p
        }
        InitialPoint::WarmStart(start) => {
            let mut p = start.clone();
            p.resize(m, 0.0);
            rescale_into_budgets(problem, &mut p);
            p
        }
    }
}

/// Scales each budget group down uniformly when it overshoots its budget;
/// leaves it untouched otherwise.
fn rescale_into_budgets(problem: &DcProblem, p: &mut [f64]) {
    fn scale_group(p: &mut [f64], slots: &[usize], budget: f64) {
        let total: f64 = slots.iter().map(|&i| p[i].max(0.0)).sum();
        let factor = if total > budget && total > 0.0 {
            budget / total
        } else {
            1.0
        };
        for &i in slots {
            p[i] = p[i].max(0.0) * factor;
        }
    }
    scale_group(p, &problem.dl_slots, problem.bs_budget);
    for (user, slots) in &problem.ul_groups {
        scale_group(p, slots, problem.user_budgets[*user]);
    }
}

/// Weighted water-filling: maximizes sum_i w_i log2(1 + g_i p_i / N_i) under
/// sum p_i <= budget, p_i >= 0. The multiplier is found by bisection until
/// the budget residual is below 1e-9 * budget.
pub fn waterfill(weights: &[f64], gains: &[f64], noises: &[f64], budget: f64) -> Vec<f64> {
    assert_eq!(weights.len(), gains.len());
    assert_eq!(weights.len(), noises.len());
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    let mut powers = vec![0.0; n];
    if budget <= 0.0 {
        return powers;
    }
    let active: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0 && gains[i] > 0.0).collect();
    if active.is_empty() {
        return powers;
    }

    // Bracket: at the lower end the single best channel already absorbs the
    // whole budget; at the upper end every allocation is zero.
    let mut lo = active
        .iter()
        .map(|&i| weights[i] * gains[i] / (noises[i] + budget * gains[i]))
        .fold(f64::INFINITY, f64::min);
    let mut hi = active
        .iter()
        .map(|&i| {
            if noises[i] > 0.0 {
                weights[i] * gains[i] / noises[i]
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0f64, f64::max);
    if !hi.is_finite() {
        hi = active.iter().map(|&i| weights[i]).sum::<f64>() / budget;
    }

    let fill = |lambda: f64, powers: &mut [f64]| -> f64 {
        let mut total = 0.0;
        for &i in &active {
            let p = (weights[i] / lambda - noises[i] / gains[i]).max(0.0);
            powers[i] = p;
            total += p;
        }
        total
    };

    let tol = 1e-9 * budget;
    for _ in 0..500 {
        let lambda = 0.5 * (lo + hi);
        let total = fill(lambda, &mut powers);
        if (total - budget).abs() <= tol {
            return powers;
        }
        if total > budget {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }
    // Bracket collapsed to rounding width; final evaluation at the midpoint.
    fill(0.5 * (lo + hi), &mut powers);
    powers
}
