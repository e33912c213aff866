//! Loss-ranking selectors used as reference points for neighbour voting.

pub use super::gmm::baseline_gmm_loss;

/// Number of samples kept when a fraction `tau` is assumed noisy.
pub fn keep_count(n: usize, tau: f64) -> usize {
    let keep = ((1.0 - tau) * n as f64 - 1e-9).ceil();
    (keep.max(0.0) as usize).min(n)
}

/// Keeps the `ceil((1 - tau) * N)` smallest losses; ties go to the lower
/// index.
pub fn baseline_small_loss_predefined(losses: &[f64], tau: f64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..losses.len()).collect();
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
    let mut mask = vec![false; losses.len()];
    for &i in &order[..keep_count(losses.len(), tau)] {
        mask[i] = true;
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    fn selected(mask: &[bool]) -> Vec<usize> {
        mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    #[test]
    fn tau_zero_keeps_all() {
        assert!(baseline_small_loss_predefined(&[3.0, 1.0, 2.0], 0.0)
            .iter()
            .all(|&b| b));
    }

    #[test]
    fn keeps_smallest_half() {
        let m = baseline_small_loss_predefined(&[0.1, 0.9, 0.2, 0.8], 0.5);
        assert_eq!(selected(&m), vec![0, 2]);
    }

    #[test]
    fn equal_losses_tie_break_by_index() {
        let m = baseline_small_loss_predefined(&[0.5; 4], 0.5);
        assert_eq!(selected(&m), vec![0, 1]);
    }

    #[test]
    fn keep_count_rounds_up() {
        assert_eq!(keep_count(10, 0.2), 8);
        assert_eq!(keep_count(10, 0.25), 8);
        assert_eq!(keep_count(3, 0.5), 2);
        assert_eq!(keep_count(1000, 0.7), 300);
    }
}
