use super::{contract_price, discount, Catalog, Instance};
use crate::error::Result;

/// Integer solution: recommendations `x[i][j]`, advertising flags `y[i]`
/// and discount selections `z[i][h]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Decision {
    pub x: Vec<Vec<bool>>,
    pub y: Vec<bool>,
    pub z: Vec<Vec<bool>>,
}

/// Total order used to break profit ties: fewer advertised contracts first,
/// then the lexicographically smaller `(y, X, Z)` encoding.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DecisionKey {
    advertised: usize,
    y: Vec<bool>,
    x: Vec<bool>,
    z: Vec<bool>,
}

impl Decision {
    /// All-zero decision of the given shape (no discount level selected).
    pub fn empty(n: usize, m: usize, l: usize) -> Self {
        Self {
            x: vec![vec![false; m]; n],
            y: vec![false; n],
            z: vec![vec![false; l]; n],
        }
    }

    /// Build from recommendation sets and one level per contract.
    pub fn from_levels(x: Vec<Vec<bool>>, y: Vec<bool>, levels: &[usize], l: usize) -> Self {
        let z = levels.iter().map(|&h| (0..l).map(|k| k == h).collect()).collect();
        Self { x, y, z }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn set_level(&mut self, i: usize, h: usize) {
        for (k, cell) in self.z[i].iter_mut().enumerate() {
            *cell = k == h;
        }
    }

    /// The selected level of contract `i`, when exactly one is selected.
    pub fn level(&self, i: usize) -> Option<usize> {
        let mut it = self.z[i].iter().enumerate().filter(|(_, &on)| on);
        match (it.next(), it.next()) {
            (Some((h, _)), None) => Some(h),
            _ => None,
        }
    }

    pub fn levels(&self) -> Option<Vec<usize>> {
        (0..self.n()).map(|i| self.level(i)).collect()
    }

    pub fn advertised_count(&self) -> usize {
        self.y.iter().filter(|&&on| on).count()
    }

    pub fn recommended(&self, i: usize) -> bool {
        self.x[i].iter().any(|&on| on)
    }

    /// Rewrite the discount rows of non-advertised contracts into the
    /// canonical completion. Rows must already hold one level each.
    pub fn canonicalize(&mut self, catalog: &Catalog, l: usize) {
        if let Some(levels) = self.levels() {
            let canonical = discount::canonical_levels(catalog, l, &self.y, &levels);
            for (i, h) in canonical.into_iter().enumerate() {
                self.set_level(i, h);
            }
        }
    }

    pub fn key(&self) -> DecisionKey {
        DecisionKey {
            advertised: self.advertised_count(),
            y: self.y.clone(),
            x: self.x.iter().flatten().copied().collect(),
            z: self.z.iter().flatten().copied().collect(),
        }
    }
}

/// Selling prices `p[i][j]` derived from an instance and a decision.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub p: Vec<Vec<f64>>,
}

impl PriceTable {
    pub fn compute(instance: &Instance, catalog: &Catalog, decision: &Decision) -> Result<Self> {
        let p = (0..catalog.n())
            .map(|i| {
                (0..instance.m)
                    .map(|j| contract_price(instance, catalog, i, j, decision))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { p })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fewer_advertised_sorts_first() {
        let mut a = Decision::empty(3, 1, 2);
        let mut b = Decision::empty(3, 1, 2);
        a.y = vec![false, true, true];
        b.y = vec![true, false, false];
        assert!(b.key() < a.key());
        a.y = vec![false, false, true];
        assert!(a.key() < b.key());
    }

    #[test]
    fn level_requires_exactly_one() {
        let mut d = Decision::empty(1, 1, 3);
        assert_eq!(d.level(0), None);
        d.set_level(0, 2);
        assert_eq!(d.level(0), Some(2));
        d.z[0][0] = true;
        assert_eq!(d.level(0), None);
    }
}
