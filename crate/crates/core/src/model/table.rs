use super::{base_price, claim_cost, gross_attraction, Catalog, Instance};

/// Precomputed preference weight and unit margin for every
/// (contract, group, level) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct OfferTable {
    n: usize,
    m: usize,
    l: usize,
    weight: Vec<f64>,
    margin: Vec<f64>,
    claim: Vec<f64>,
}

impl OfferTable {
    pub fn new(instance: &Instance, catalog: &Catalog) -> Self {
        let (n, m, l) = (catalog.n(), instance.m, instance.l);
        let mut weight = vec![0.0; n * m * l];
        let mut margin = vec![0.0; n * m * l];
        let mut claim = vec![0.0; n * m];
        for i in 0..n {
            for j in 0..m {
                let base = base_price(instance, catalog, i, j);
                let gross = gross_attraction(instance, catalog, i, j);
                let cost = claim_cost(instance, catalog, i, j);
                claim[i * m + j] = cost;
                for h in 0..l {
                    let price = base * instance.d[h];
                    let at = (i * m + j) * l + h;
                    weight[at] = gross - instance.beta[j] * price;
                    margin[at] = price - cost;
                }
            }
        }
        Self {
            n,
            m,
            l,
            weight,
            margin,
            claim,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn weight(&self, i: usize, j: usize, h: usize) -> f64 {
        self.weight[(i * self.m + j) * self.l + h]
    }

    /// Selling price minus expected claim cost.
    pub fn margin(&self, i: usize, j: usize, h: usize) -> f64 {
        self.margin[(i * self.m + j) * self.l + h]
    }

    pub fn claim(&self, i: usize, j: usize) -> f64 {
        self.claim[i * self.m + j]
    }

    /// Contract `i` at level `h` may be recommended to group `j`.
    pub fn eligible(&self, i: usize, j: usize, h: usize) -> bool {
        self.weight(i, j, h) >= 0.0
    }

    /// Expected profit of one group choosing from `(contract, level)` offers.
    pub fn group_revenue(&self, u0: f64, j: usize, offers: impl IntoIterator<Item = (usize, usize)>) -> f64 {
        let mut num = 0.0;
        let mut den = u0;
        for (i, h) in offers {
            let u = self.weight(i, j, h);
            num += u * self.margin(i, j, h);
            den += u;
        }
        num / den
    }
}
