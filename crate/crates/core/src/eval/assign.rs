use itertools::Itertools;

use crate::array::Direction;
use crate::{Error, Result};

/// Largest target count handled by the exhaustive assignment.
pub const MAX_ASSIGN_TARGETS: usize = 6;

/// Matching of estimates to truth minimising the summed squared angular error.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `perm[i]` is the index of the estimate assigned to truth `i`.
    pub perm: Vec<usize>,
    /// Total squared error of the matching (deg^2).
    pub cost: f64,
}

/// Exhaustive search over all `K!` matchings; the first minimum in
/// lexicographic permutation order wins ties.
pub fn assign_targets(estimates: &[Direction], truth: &[Direction]) -> Result<Assignment> {
    let k = truth.len();
    if estimates.len() != k {
        return Err(Error::shape(format!(
            "{} estimates for {k} targets",
            estimates.len()
        )));
    }
    if k > MAX_ASSIGN_TARGETS {
        return Err(Error::domain(format!(
            "exhaustive assignment supports at most {MAX_ASSIGN_TARGETS} targets, got {k}"
        )));
    }
    let cost = |perm: &[usize]| -> f64 {
        truth
            .iter()
            .zip(perm)
            .map(|(t, &j)| estimates[j].squared_error(t))
            .sum()
    };
    let mut best = Assignment {
        perm: (0..k).collect(),
        cost: f64::INFINITY,
    };
    for perm in (0..k).permutations(k) {
        let c = cost(&perm);
        if c < best.cost {
            best = Assignment { perm, cost: c };
        }
    }
    if k == 0 {
        best.cost = 0.0;
    }
    Ok(best)
}

/// Root-mean-square angular error over `M` runs of `K` estimates each, after
/// optimal per-run assignment:
///
/// ```text
/// sqrt( 1/(K M) * sum_runs sum_targets [(dphi)^2 + (dtheta)^2] )
/// ```
pub fn rmse(runs: &[Vec<Direction>], truth: &[Direction]) -> Result<f64> {
    if runs.is_empty() || truth.is_empty() {
        return Err(Error::domain("RMSE needs at least one run and one target"));
    }
    let mut sum = 0.0;
    for run in runs {
        sum += assign_targets(run, truth)?.cost;
    }
    Ok((sum / (runs.len() * truth.len()) as f64).sqrt())
}
