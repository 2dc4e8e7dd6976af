use crate::error::{Error, Result};

/// Largest subsystem count the bitmask catalog supports.
pub const MAX_SUBSYSTEMS: usize = 16;

/// The `2^w - 1` candidate contracts, one per nonempty subsystem subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    w: usize,
    masks: Vec<u32>,
    sizes: Vec<usize>,
    by_size: Vec<usize>,
}

impl Catalog {
    pub fn new(w: usize) -> Result<Self> {
        if w == 0 {
            return Err(Error::InvalidInstance("at least one subsystem is required".into()));
        }
        if w > MAX_SUBSYSTEMS {
            return Err(Error::TooLarge(format!(
                "{w} subsystems exceeds the supported maximum of {MAX_SUBSYSTEMS}"
            )));
        }
        let n = (1usize << w) - 1;
        let masks: Vec<u32> = (1..=n as u32).collect();
        let sizes: Vec<usize> = masks.iter().map(|m| m.count_ones() as usize).collect();
        let mut by_size: Vec<usize> = (0..n).collect();
        by_size.sort_by_key(|&i| (sizes[i], i));
        Ok(Self {
            w,
            masks,
            sizes,
            by_size,
        })
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn n(&self) -> usize {
        self.masks.len()
    }

    /// Bitmask of covered subsystems (bit `k` for subsystem `k + 1`).
    pub fn mask(&self, i: usize) -> u32 {
        self.masks[i]
    }

    pub fn full_mask(&self) -> u32 {
        (1u32 << self.w) - 1
    }

    pub fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    pub fn indicator(&self, i: usize, k: usize) -> bool {
        self.masks[i] >> k & 1 == 1
    }

    pub fn index_of_mask(&self, mask: u32) -> Option<usize> {
        if mask == 0 || mask > self.full_mask() {
            None
        } else {
            Some(mask as usize - 1)
        }
    }

    /// Index of the contract covering every subsystem.
    pub fn full_bundle(&self) -> usize {
        self.n() - 1
    }

    /// Covered subsystems in ascending order.
    pub fn subsystems(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let mask = self.masks[i];
        (0..self.w).filter(move |k| mask >> k & 1 == 1)
    }

    /// Highest covered subsystem (zero-based).
    pub fn highest_subsystem(&self, i: usize) -> usize {
        31 - self.masks[i].leading_zeros() as usize
    }

    /// Contract indices ordered by (size, index).
    pub fn by_size(&self) -> &[usize] {
        &self.by_size
    }

    /// Full indicator matrix, rows are contracts.
    pub fn indicator_matrix(&self) -> Vec<Vec<bool>> {
        (0..self.n())
            .map(|i| (0..self.w).map(|k| self.indicator(i, k)).collect())
            .collect()
    }

    /// Human-readable subsystem list, one-based, e.g. `{1,3}`.
    pub fn label(&self, i: usize) -> String {
        let parts: Vec<String> = self.subsystems(i).map(|k| (k + 1).to_string()).collect();
        format!("{{{}}}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn contracts_are_distinct_nonempty_subsets() {
        for w in 1..=5 {
            let cat = Catalog::new(w).unwrap();
            assert_eq!(cat.n(), (1 << w) - 1);
            let rows: HashSet<Vec<bool>> = cat.indicator_matrix().into_iter().collect();
            assert_eq!(rows.len(), cat.n());
            for i in 0..cat.n() {
                let count = (0..w).filter(|&k| cat.indicator(i, k)).count();
                assert_eq!(cat.size(i), count);
                assert!(count >= 1);
            }
        }
    }

    #[test]
    fn empty_catalog_is_rejected() {
        assert!(Catalog::new(0).is_err());
    }

    #[test]
    fn labels_and_lookup() {
        let cat = Catalog::new(3).unwrap();
        let i = cat.index_of_mask(0b101).unwrap();
        assert_eq!(cat.label(i), "{1,3}");
        assert_eq!(cat.highest_subsystem(i), 2);
        assert_eq!(cat.full_bundle(), 6);
        assert_eq!(cat.by_size()[..3], [0, 1, 3]);
    }
}
