//! Run-level quantities computed from trajectories.

use crate::scalar::Scalar;

/// Per-step record of the normal nodes. Row `k` holds `x[k]` and `x_hat[k]`
/// together with what happened during step `k` (the last row has no step).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory<T> {
    pub x: Vec<Vec<T>>,
    pub x_hat: Vec<Vec<T>>,
    pub fired: Vec<Vec<bool>>,
    pub updated: Vec<Vec<bool>>,
}

impl<T: Scalar> Trajectory<T> {
    /// Number of recorded rows (`horizon + 1`).
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn extremes<T: Scalar>(values: impl IntoIterator<Item = T>) -> (T, T) {
    values
        .into_iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn window(k: usize, tau: usize) -> std::ops::RangeInclusive<usize> {
    k.saturating_sub(tau)..=k
}

/// `V[k]`: max minus min of all normal states over steps `k - tau ..= k`.
/// Steps before 0 repeat row 0.
pub fn spread<T: Scalar>(x: &[Vec<T>], k: usize, tau: usize) -> T {
    let (lo, hi) = extremes(window(k, tau).flat_map(|t| x[t].iter().copied()));
    if lo > hi {
        T::zero()
    } else {
        hi - lo
    }
}

pub fn spread_series<T: Scalar>(x: &[Vec<T>], tau: usize) -> Vec<T> {
    (0..x.len()).map(|k| spread(x, k, tau)).collect()
}

/// Joint hull of initial states and initial transmitted states.
pub fn safety_interval<T: Scalar>(x0: &[T], x_hat0: &[T]) -> (T, T) {
    extremes(x0.iter().chain(x_hat0).copied())
}

/// Windowed joint minimum and maximum of states and transmitted states for
/// every row.
pub fn joint_envelope<T: Scalar>(traj: &Trajectory<T>, tau: usize) -> Vec<(T, T)> {
    (0..traj.len())
        .map(|k| extremes(window(k, tau).flat_map(|t| traj.x[t].iter().chain(&traj.x_hat[t]).copied())))
        .collect()
}

/// `4 c0 N theta / gamma^(N theta)`. Infinite when the power underflows,
/// zero when `c0` is zero.
pub fn theoretical_error_level<T: Scalar>(c0: T, n_normal: usize, theta: usize, gamma: T) -> T {
    if c0 == T::zero() {
        return T::zero();
    }
    let nt = n_normal * theta;
    let denom = gamma.powi(i32::try_from(nt).unwrap_or(i32::MAX));
    let c = T::of(4.0) * c0 * T::from_usize(nt).unwrap() / denom;
    if c.is_nan() {
        T::infinity()
    } else {
        c
    }
}

/// First `k` such that the spread stays at or below `eps` on
/// `k ..= k + hold`, with the whole stretch inside the series.
pub fn converged_at<T: Scalar>(spread: &[T], eps: T, hold: usize) -> Option<usize> {
    let mut run = 0usize;
    for (k, v) in spread.iter().enumerate() {
        if *v <= eps {
            run += 1;
            if run > hold {
                return Some(k - hold);
            }
        } else {
            run = 0;
        }
    }
    None
}
