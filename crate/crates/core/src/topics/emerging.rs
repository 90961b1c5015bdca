use alloc::collections::BTreeSet;

use super::TopicState;

/// Lower bound on the historical standard deviation.
pub const SIGMA_FLOOR: f64 = 0.01;

/// Flags topic `k` when its mean document proportion exceeds the mean of
/// the last `window` versions by more than `lambda` standard deviations
/// (population deviation, floored at [`SIGMA_FLOOR`]). Needs at least two
/// versions of history; otherwise nothing is flagged.
pub fn detect_emerging(
    current: &TopicState,
    prev: &[TopicState],
    window: usize,
    lambda: f64,
) -> BTreeSet<usize> {
    let m = window.min(prev.len());
    if m < 2 {
        return BTreeSet::new();
    }
    let history: alloc::vec::Vec<_> = prev[prev.len() - m..]
        .iter()
        .map(TopicState::mean_proportions)
        .collect();
    let now = current.mean_proportions();

    (0..current.k)
        .filter(|&k| {
            let n = history.len() as f64;
            let mu = history.iter().map(|h| h.get(k).copied().unwrap_or(0.0)).sum::<f64>() / n;
            let var = history
                .iter()
                .map(|h| {
                    let d = h.get(k).copied().unwrap_or(0.0) - mu;
                    d * d
                })
                .sum::<f64>()
                / n;
            let sigma = libm::sqrt(var).max(SIGMA_FLOOR);
            now[k] > mu + lambda * sigma
        })
        .collect()
}
