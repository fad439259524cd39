//! Closed-form solver for the single-sub-channel two-link power problem: one
//! downlink user and one uplink user share a sub-channel, each power is
//! box-constrained, and the weighted two-link rate is maximized.
//!
//! The objective is quasi-separable: for either power with the other fixed,
//! any interior stationary point is the smaller root of a quadratic, and an
//! interior maximum can exist in at most one of the two coordinates. The
//! optimum therefore lies in a five-candidate set which is evaluated
//! directly.

use serde::Serialize;

/// Inputs of the two-link problem. `i_kj` is the effective gain with which
/// the uplink user interferes with the downlink user (the SI coefficient for
/// a self-pair, the inter-user gain otherwise); `beta` scales the BS
/// self-interference seen by the uplink.
#[derive(Debug, Clone, Copy)]
pub struct PairInstance {
    pub w_k: f64,
    pub v_j: f64,
    pub g_k: f64,
    pub g_j: f64,
    pub i_kj: f64,
    pub n_k: f64,
    pub n0: f64,
    pub beta: f64,
    pub p_max1: f64,
    pub p_max2: f64,
}

/// Which candidate of the optimal set won, in the order they are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Candidate {
    /// (0, P_max2): uplink only.
    UlOnly,
    /// (P_max1, 0): downlink only.
    DlOnly,
    /// (P_max1, P_max2): both at full cap.
    BothMax,
    /// (p_dl^a, P_max2): interior downlink stationary point.
    InteriorDl,
    /// (P_max1, p_ul^a): interior uplink stationary point.
    InteriorUl,
}

/// Optimal pair of powers with the objective value achieved.
#[derive(Debug, Clone, Copy)]
pub struct PairSolution {
    pub p_dl: f64,
    pub p_ul: f64,
    pub objective: f64,
    pub candidate: Candidate,
}

/// The weighted two-link rate L(p_dl, p_ul) in bits.
pub fn pair_objective(inst: &PairInstance, p_dl: f64, p_ul: f64) -> f64 {
    let dl = inst.w_k * (1.0 + inst.g_k * p_dl / (inst.n_k + inst.i_kj * p_ul)).log2();
    let ul = inst.v_j * (1.0 + inst.g_j * p_ul / (inst.n0 + inst.beta * p_dl)).log2();
    dl + ul
}

/// Coefficients (A, B, C) of the stationarity quadratic in the downlink
/// power at fixed uplink power: dL/dp_dl = 0 iff A p^2 + B p + C = 0.
pub fn quadratic_coefficients_dl(inst: &PairInstance, p_ul: f64) -> (f64, f64, f64) {
    let &PairInstance {
        w_k, v_j, g_k, g_j, i_kj, n_k, n0, beta, ..
    } = inst;
    let a = w_k * g_k * beta * beta;
    let b = 2.0 * w_k * n0 * g_k * beta + (w_k - v_j) * beta * g_k * g_j * p_ul;
    let c = w_k * g_k * n0 * n0 + w_k * g_k * g_j * n0 * p_ul
        - v_j * n_k * g_j * p_ul * beta
        - v_j * g_j * beta * i_kj * p_ul * p_ul;
    (a, b, c)
}

/// Coefficients (D, E, F) of the stationarity quadratic in the uplink power
/// at fixed downlink power.
pub fn quadratic_coefficients_ul(inst: &PairInstance, p_dl: f64) -> (f64, f64, f64) {
    let &PairInstance {
        w_k, v_j, g_k, g_j, i_kj, n_k, n0, beta, ..
    } = inst;
    let d = v_j * g_j * i_kj * i_kj;
    let e = 2.0 * v_j * n_k * g_j * i_kj + (v_j - w_k) * i_kj * g_k * g_j * p_dl;
    let f = v_j * g_j * n_k * n_k + v_j * g_k * g_j * n_k * p_dl
        - w_k * n0 * g_k * p_dl * i_kj
        - w_k * g_k * beta * i_kj * p_dl * p_dl;
    (d, e, f)
}

/// The smaller root of `a x^2 + b x + c = 0` when it lies strictly inside
/// (0, upper_bound); the linear root -c/b when a = 0. `None` when no such
/// interior candidate exists.
pub fn interior_root(a: f64, b: f64, c: f64, upper_bound: f64) -> Option<f64> {
    let root = if a == 0.0 {
        if b == 0.0 {
            return None;
        }
        -c / b
    } else if a > 0.0 {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        // Smaller root; pick the expression that avoids cancellation for the
        // sign of b (a can be as small as w*g*beta^2 with beta ~ 1e-9).
        if b <= 0.0 {
            2.0 * c / (-b + disc.sqrt())
        } else {
            (-b - disc.sqrt()) / (2.0 * a)
        }
    } else {
        // Negative leading coefficient does not arise from the formulas
        // above; fall back to the direct smaller root.
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        (-b - disc.sqrt()) / (2.0 * a)
    };
    (root.is_finite() && root > 0.0 && root < upper_bound).then_some(root)
}

/// Maximizes L over the full five-candidate set.
pub fn solve_pair(inst: &PairInstance) -> PairSolution {
    solve_pair_with(inst, false)
}

/// Maximizes L over the restricted set {(0, P_max2), (P_max1, 0)} — each
/// sub-channel carries one direction only. Used by the hybrid half-duplex
/// baseline.
pub fn solve_pair_exclusive(inst: &PairInstance) -> PairSolution {
    solve_pair_with(inst, true)
}

fn solve_pair_with(inst: &PairInstance, exclusive_only: bool) -> PairSolution {
    // Dominance shortcuts: with a dead downlink channel any downlink power
    // only injects BS self-interference, and vice versa.
    if !exclusive_only {
        if inst.g_k == 0.0 && inst.g_j > 0.0 {
            return evaluate(inst, Candidate::UlOnly, 0.0, inst.p_max2);
        }
        if inst.g_j == 0.0 && inst.g_k > 0.0 {
            return evaluate(inst, Candidate::DlOnly, inst.p_max1, 0.0);
        }
    }

    let mut candidates: Vec<(Candidate, f64, f64)> = vec![
        (Candidate::UlOnly, 0.0, inst.p_max2),
        (Candidate::DlOnly, inst.p_max1, 0.0),
    ];
    if !exclusive_only {
        candidates.push((Candidate::BothMax, inst.p_max1, inst.p_max2));
        let (a, b, c) = quadratic_coefficients_dl(inst, inst.p_max2);
        if let Some(p) = interior_root(a, b, c, inst.p_max1) {
            candidates.push((Candidate::InteriorDl, p, inst.p_max2));
        }
        let (d, e, f) = quadratic_coefficients_ul(inst, inst.p_max1);
        if let Some(q) = interior_root(d, e, f, inst.p_max2) {
            candidates.push((Candidate::InteriorUl, inst.p_max1, q));
        }
    }

    let mut best: Option<PairSolution> = None;
    for (tag, p_dl, p_ul) in candidates {
        let sol = evaluate(inst, tag, p_dl, p_ul);
        best = Some(match best {
            None => sol,
            Some(cur) => {
                // Ties go to the smaller total transmit power, then to the
                // earlier candidate in declaration order.
                let better = sol.objective > cur.objective
                    || (sol.objective == cur.objective
                        && sol.p_dl + sol.p_ul < cur.p_dl + cur.p_ul);
                if better {
                    sol
                } else {
                    cur
                }
            }
        });
    }
    best.expect("candidate set is never empty")
}

fn evaluate(inst: &PairInstance, candidate: Candidate, p_dl: f64, p_ul: f64) -> PairSolution {
    PairSolution {
        p_dl,
        p_ul,
        objective: pair_objective(inst, p_dl, p_ul),
        candidate,
    }
}
