use std::collections::BTreeMap;

use crate::material::{ClassId, UNLABELED};

/// Class ID → vote count.
///
/// Iteration is in ascending class order, which is what makes the
/// lowest-ID tie-break fall out of a plain strict-greater scan.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VoteHistogram {
    counts: BTreeMap<ClassId, u64>,
}

impl VoteHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one vote. Unlabeled votes are ignored.
    #[inline]
    pub fn add(&mut self, class: ClassId) {
        self.add_n(class, 1);
    }

    pub fn add_n(&mut self, class: ClassId, n: u64) {
        if class != UNLABELED && n > 0 {
            *self.counts.entry(class).or_insert(0) += n;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        for (&c, &n) in &other.counts {
            self.add_n(c, n);
        }
    }

    pub fn count(&self, class: ClassId) -> u64 {
        self.counts.get(&class).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, u64)> + '_ {
        self.counts.iter().map(|(&c, &n)| (c, n))
    }

    /// Most voted class; ties go to the lowest class ID, empty → [`UNLABELED`].
    pub fn majority(&self) -> ClassId {
        let mut best = (UNLABELED, 0u64);
        for (c, n) in self.iter() {
            if n > best.1 {
                best = (c, n);
            }
        }
        best.0
    }
}

impl FromIterator<ClassId> for VoteHistogram {
    fn from_iter<I: IntoIterator<Item = ClassId>>(iter: I) -> Self {
        let mut h = Self::new();
        for c in iter {
            h.add(c);
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_rules() {
        assert_eq!(VoteHistogram::new().majority(), UNLABELED);
        let h: VoteHistogram = [5, 5, 2, 2, 9].into_iter().collect();
        assert_eq!(h.majority(), 2);
        let h: VoteHistogram = [255, 255, 7].into_iter().collect();
        assert_eq!((h.majority(), h.total()), (7, 1));
    }

    #[test]
    fn merge_adds_counts() {
        let mut a: VoteHistogram = [1, 1, 3].into_iter().collect();
        let b: VoteHistogram = [3, 3, 4].into_iter().collect();
        a.merge(&b);
        assert_eq!((a.count(1), a.count(3), a.count(4), a.total()), (2, 3, 1, 6));
    }
}
