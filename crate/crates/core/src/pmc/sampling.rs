use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::error::{Result, SsrError};

/// Oversamples minority classes of a selection so every class present
/// appears as often as the largest one. Originals are kept; the shortfall is
/// drawn with replacement within the class. The result is shuffled.
pub fn oversample_balanced<R: Rng + ?Sized>(
    selected: &[usize],
    labels: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>> {
    if selected.is_empty() {
        return Err(SsrError::EmptySelection);
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &i in selected {
        by_class.entry(labels[i]).or_default().push(i);
    }
    let target = by_class.values().map(Vec::len).max().unwrap_or(0);
    let mut out = Vec::with_capacity(target * by_class.len());
    for members in by_class.values() {
        out.extend_from_slice(members);
        for _ in members.len()..target {
            out.push(*members.choose(rng).expect("non-empty class"));
        }
    }
    out.shuffle(rng);
    Ok(out)
}
