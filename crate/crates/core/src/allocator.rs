//! Data placement strategies.
//!
//! * `Eq`: every node serves the same share.
//! * `Rb`: shares proportional to each node's download rate.
//! * `Opt`: the exact minimizer of the completion time
//!   `max_i (b_i + a_i * alpha_i)` subject to `sum(alpha) = 1`, `0 <= alpha_i <= 1`,
//!   where `b_i` is the request delay and `a_i = data_bits / rate_i`.
//!
//! `Opt` is computed by water-filling: raise a common level `T` until the
//! shares `alpha_i(T) = clamp((T - b_i) / a_i, lower, 1)` sum to one. The
//! resulting level is certified with [`kkt_residuals`].

use thiserror::Error;

use crate::model::{total_download_time, Allocation, ModelError, Snapshot, Strategy, TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("infeasible constraints: per-node lower bounds sum to {0} > 1")]
    InfeasibleConstraints(f64),
    #[error("the MSR lower bound needs at least two nodes")]
    MsrNeedsTwoNodes,
    #[error("grid oracle supports at most 4 nodes, got {0}")]
    OracleTooManyNodes(usize),
    #[error("grid oracle needs at least 100 steps, got {0}")]
    OracleGridTooCoarse(u32),
}

/// Optional constraints on top of the simplex.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AllocConstraints {
    /// Require `alpha_i >= 1 / (N - 1)` on every node (MSR storage floor).
    pub msr_lower_bound: bool,
}

impl AllocConstraints {
    fn lower_bound(&self, n: usize) -> Result<f64, AllocError> {
        if !self.msr_lower_bound {
            return Ok(0.0);
        }
        if n < 2 {
            return Err(AllocError::MsrNeedsTwoNodes);
        }
        let lower = 1.0 / (n - 1) as f64;
        let floor_sum = lower * n as f64;
        if floor_sum > 1.0 + TOLERANCE {
            return Err(AllocError::InfeasibleConstraints(floor_sum));
        }
        Ok(lower)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptSolution {
    pub allocation: Allocation,
    /// Optimal completion time (the LP epigraph variable).
    pub t_star: f64,
    /// Nodes with `0 < alpha < 1`.
    pub active_set: Vec<usize>,
    /// Nodes with `alpha == 1`.
    pub saturated_set: Vec<usize>,
    /// Nodes held at their lower bound (never contacted when the bound is 0).
    pub excluded_set: Vec<usize>,
    pub kkt_residual: f64,
}

pub fn alloc_equal(snapshot: &Snapshot) -> Allocation {
    let n = snapshot.len();
    let alphas = vec![1.0 / n as f64; n];
    finish(snapshot, alphas, Strategy::Eq)
}

pub fn alloc_rate(snapshot: &Snapshot) -> Allocation {
    let total_rate: f64 = snapshot.nodes().iter().map(|n| n.spec().rate_bps()).sum();
    let alphas = snapshot
        .nodes()
        .iter()
        .map(|n| n.spec().rate_bps() / total_rate)
        .collect();
    finish(snapshot, alphas, Strategy::Rb)
}

fn finish(snapshot: &Snapshot, alphas: Vec<f64>, strategy: Strategy) -> Allocation {
    // alphas are in [0,1] with matching length by construction
    let total_time_s = total_download_time(snapshot, &alphas).expect("valid alpha vector");
    Allocation {
        alphas,
        total_time_s,
        strategy,
    }
}

/// Water-filling over affine download times `b_i + a_i * alpha_i`.
///
/// Returns the level `T` where `sum_i clamp((T - b_i)/a_i, lower, 1) == 1`
/// together with the shares at that level. Requires `lower * N <= 1`.
pub(crate) fn water_fill(slopes: &[f64], offsets: &[f64], lower: f64) -> (f64, Vec<f64>) {
    debug_assert_eq!(slopes.len(), offsets.len());
    let share = |t: f64, i: usize| ((t - offsets[i]) / slopes[i]).clamp(lower, 1.0);
    let filled = |t: f64| (0..slopes.len()).map(|i| share(t, i)).sum::<f64>();

    let mut breakpoints: Vec<f64> = offsets
        .iter()
        .zip(slopes)
        .flat_map(|(&b, &a)| [b + lower * a, b + a])
        .collect();
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();

    // first breakpoint where the filled volume reaches 1; it exists because
    // at the last breakpoint every node is saturated
    let idx = breakpoints
        .partition_point(|&t| filled(t) < 1.0)
        .min(breakpoints.len() - 1);
    let upper = breakpoints[idx];

    let level = if idx == 0 {
        upper
    } else {
        // no breakpoint lies strictly inside (below, upper): classify nodes at
        // the midpoint and solve the linear equation of that segment. A flat
        // segment means rounding left filled(below) just short of 1.
        let below = breakpoints[idx - 1];
        let mid = 0.5 * (below + upper);
        let mut fixed = 0.0;
        let mut inv_slope_sum = 0.0;
        let mut weighted_offsets = 0.0;
        for (i, (&a, &b)) in slopes.iter().zip(offsets).enumerate() {
            if b + lower * a < mid && mid < b + a {
                inv_slope_sum += 1.0 / a;
                weighted_offsets += b / a;
            } else {
                fixed += share(mid, i);
            }
        }
        if inv_slope_sum == 0.0 {
            below
        } else {
            ((1.0 - fixed + weighted_offsets) / inv_slope_sum).clamp(below, upper)
        }
    };

    let alphas = (0..slopes.len()).map(|i| share(level, i)).collect();
    (level, alphas)
}

/// Exact minimizer of the completion time.
pub fn alloc_opt(snapshot: &Snapshot, constraints: AllocConstraints) -> Result<OptSolution, AllocError> {
    let n = snapshot.len();
    if n == 0 {
        return Err(ModelError::EmptySnapshot.into());
    }
    let lower = constraints.lower_bound(n)?;
    let slopes: Vec<f64> = snapshot
        .nodes()
        .iter()
        .map(|node| node.transfer_time_s(snapshot.data_bits()))
        .collect();
    let offsets: Vec<f64> = snapshot.nodes().iter().map(|n| n.request_delay_s()).collect();

    let (level, alphas) = if n == 1 {
        (offsets[0] + slopes[0], vec![1.0])
    } else {
        water_fill(&slopes, &offsets, lower)
    };

    // nodes pinned at a positive floor may finish after the water level
    let t_star = if lower > 0.0 {
        (0..n)
            .filter(|&i| alphas[i] <= lower)
            .map(|i| offsets[i] + lower * slopes[i])
            .fold(level, f64::max)
    } else {
        level
    };

    let mut active_set = Vec::new();
    let mut saturated_set = Vec::new();
    let mut excluded_set = Vec::new();
    for (i, &alpha) in alphas.iter().enumerate() {
        if alpha <= lower {
            excluded_set.push(i);
        } else if alpha >= 1.0 {
            saturated_set.push(i);
        } else {
            active_set.push(i);
        }
    }

    let kkt_residual = if lower > 0.0 {
        bounded_residuals(snapshot, &alphas, t_star, lower)
    } else {
        kkt_residuals(snapshot, &alphas, t_star)
    };
    let allocation = finish(snapshot, alphas, Strategy::Opt);
    Ok(OptSolution {
        allocation,
        t_star,
        active_set,
        saturated_set,
        excluded_set,
        kkt_residual,
    })
}

/// Largest violation of the optimality conditions of the placement LP at
/// `(alphas, t_star)`. Zero (up to rounding) iff the point is optimal.
///
/// With the multipliers eliminated the conditions read:
/// * primal feasibility of `alphas`;
/// * contacted nodes finish no later than `t_star`, and partially loaded
///   ones finish exactly at `t_star`;
/// * idle nodes could not start before `t_star` (`b_i >= t_star`);
/// * `t_star` is the actual completion time.
pub fn kkt_residuals(snapshot: &Snapshot, alphas: &[f64], t_star: f64) -> f64 {
    bounded_residuals(snapshot, alphas, t_star, 0.0)
}

fn bounded_residuals(snapshot: &Snapshot, alphas: &[f64], t_star: f64, lower: f64) -> f64 {
    if alphas.len() != snapshot.len() {
        return f64::INFINITY;
    }
    let data_bits = snapshot.data_bits();
    let mut worst = (alphas.iter().sum::<f64>() - 1.0).abs();
    let mut completion = 0.0_f64;

    for (node, &alpha) in snapshot.nodes().iter().zip(alphas) {
        worst = worst.max(lower - alpha).max(alpha - 1.0);
        let finish = node.request_delay_s() + alpha * node.transfer_time_s(data_bits);
        if alpha > 0.0 {
            completion = completion.max(finish);
        }
        if alpha > lower {
            worst = worst.max(finish - t_star);
            if alpha < 1.0 {
                worst = worst.max(t_star - finish);
            }
        } else {
            worst = worst.max(t_star - finish);
        }
    }
    if lower == 0.0 {
        worst = worst.max((t_star - completion).abs());
    }
    worst.max(0.0)
}

/// Exhaustive search over the simplex grid with `grid_steps` subdivisions.
///
/// Test oracle for [`alloc_opt`]; it uses only the objective. Branches whose
/// partial completion time already reaches the incumbent, or whose remaining
/// nodes cannot absorb the remaining share before the incumbent, are skipped;
/// neither cut can discard a strictly better grid point.
pub fn oracle_opt(snapshot: &Snapshot, grid_steps: u32) -> Result<Allocation, AllocError> {
    let n = snapshot.len();
    if n > 4 {
        return Err(AllocError::OracleTooManyNodes(n));
    }
    if grid_steps < 100 {
        return Err(AllocError::OracleGridTooCoarse(grid_steps));
    }
    let steps = grid_steps as usize;
    let data_bits = snapshot.data_bits();
    let unit_cost: Vec<f64> = snapshot
        .nodes()
        .iter()
        .map(|node| node.transfer_time_s(data_bits) / steps as f64)
        .collect();
    let offsets: Vec<f64> = snapshot.nodes().iter().map(|n| n.request_delay_s()).collect();

    let mut search = GridSearch {
        unit_cost: &unit_cost,
        offsets: &offsets,
        units: vec![0; n],
        best_units: vec![0; n],
        best_time: f64::INFINITY,
    };
    search.descend(0, steps, 0.0);

    let alphas = search.best_units.iter().map(|&u| u as f64 / steps as f64).collect();
    let total_time_s = search.best_time;
    Ok(Allocation {
        alphas,
        total_time_s,
        strategy: Strategy::Opt,
    })
}

struct GridSearch<'a> {
    unit_cost: &'a [f64],
    offsets: &'a [f64],
    units: Vec<usize>,
    best_units: Vec<usize>,
    best_time: f64,
}

impl GridSearch<'_> {
    fn node_time(&self, i: usize, units: usize) -> f64 {
        if units == 0 {
            0.0
        } else {
            self.offsets[i] + units as f64 * self.unit_cost[i]
        }
    }

    /// Largest unit count node `i` can take while finishing before the incumbent.
    fn capacity(&self, i: usize, remaining: usize) -> usize {
        if !self.best_time.is_finite() {
            return remaining;
        }
        let slack = self.best_time - self.offsets[i];
        if slack <= 0.0 {
            return 0;
        }
        let cap = (slack / self.unit_cost[i]).ceil() as usize;
        cap.min(remaining)
    }

    fn descend(&mut self, i: usize, remaining: usize, partial: f64) {
        let n = self.units.len();
        if i == n - 1 {
            let time = partial.max(self.node_time(i, remaining));
            if time < self.best_time {
                self.units[i] = remaining;
                self.best_time = time;
                self.best_units.copy_from_slice(&self.units);
            }
            return;
        }
        for u in 0..=remaining {
            let here = partial.max(self.node_time(i, u));
            if here >= self.best_time {
                break;
            }
            let rest = remaining - u;
            let absorbable: usize = (i + 1..n).map(|j| self.capacity(j, rest)).sum();
            if absorbable < rest {
                continue;
            }
            self.units[i] = u;
            self.descend(i + 1, rest, here);
        }
        self.units[i] = 0;
    }
}
