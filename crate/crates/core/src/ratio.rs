//! Single-ratio assortment maximization with a coverage side constraint.
//!
//! Maximizes `sum(u * m) / (u0 + sum(u))` over choices of at most one option
//! per slot (exactly one for forced slots), subject to the chosen slots'
//! masks covering a target mask. Solved by Dinkelbach iteration; each
//! parametric subproblem is exact thanks to a min-cost set-cover dynamic
//! program over the uncovered bits.

/// One (weight, margin) option of a slot; `tag` is caller data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Opt {
    pub weight: f64,
    pub margin: f64,
    pub tag: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub mask: u32,
    pub forced: bool,
    pub options: Vec<Opt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioProblem {
    pub u0: f64,
    pub target: u32,
    pub slots: Vec<Slot>,
}

/// Chosen option index per slot and the resulting ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSolution {
    pub value: f64,
    pub choice: Vec<Option<usize>>,
}

const MAX_ITERATIONS: usize = 200;

impl RatioProblem {
    pub fn ratio(&self, choice: &[Option<usize>]) -> f64 {
        let mut num = 0.0;
        let mut den = self.u0;
        for (slot, pick) in self.slots.iter().zip(choice) {
            if let Some(o) = pick {
                let opt = slot.options[*o];
                num += opt.weight * opt.margin;
                den += opt.weight;
            }
        }
        num / den
    }

    /// Whether any choice satisfies coverage and the forced slots.
    pub fn feasible(&self) -> bool {
        let mut union = 0u32;
        for slot in &self.slots {
            if slot.options.is_empty() {
                if slot.forced {
                    return false;
                }
                continue;
            }
            union |= slot.mask;
        }
        union & self.target == self.target
    }

    fn best_option(slot: &Slot, rho: f64) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (o, opt) in slot.options.iter().enumerate() {
            let value = opt.weight * (opt.margin - rho);
            if value > best.1 {
                best = (o, value);
            }
        }
        best
    }

    /// Maximizer of `sum(u * (m - rho))` over feasible choices.
    fn parametric(&self, rho: f64) -> Vec<Option<usize>> {
        let mut choice = vec![None; self.slots.len()];
        let mut covered = 0u32;
        let mut spare = Vec::new();
        for (s, slot) in self.slots.iter().enumerate() {
            if slot.options.is_empty() {
                continue;
            }
            let (o, value) = Self::best_option(slot, rho);
            if slot.forced || value > 0.0 {
                choice[s] = Some(o);
                covered |= slot.mask;
            } else {
                spare.push((s, o, -value));
            }
        }
        let missing = self.target & !covered;
        if missing != 0 {
            for s in min_cost_cover(missing, &spare, &self.slots) {
                let o = spare.iter().find(|e| e.0 == s).map(|e| e.1).unwrap();
                choice[s] = Some(o);
            }
        }
        choice
    }

    /// Optimal choice, or `None` when coverage cannot be met.
    pub fn maximize(&self) -> Option<RatioSolution> {
        if !self.feasible() {
            return None;
        }
        let mut choice = self.parametric(0.0);
        let mut value = self.ratio(&choice);
        for _ in 0..MAX_ITERATIONS {
            let next = self.parametric(value);
            let next_value = self.ratio(&next);
            if next_value <= value + 1e-15 * value.abs().max(1.0) {
                break;
            }
            choice = next;
            value = next_value;
        }
        Some(RatioSolution { value, choice })
    }
}

/// Cheapest set of spare slots whose masks jointly cover `missing`.
/// `spare` holds `(slot, option, cost)` with nonnegative costs.
fn min_cost_cover(missing: u32, spare: &[(usize, usize, f64)], slots: &[Slot]) -> Vec<usize> {
    let bits: Vec<u32> = (0..32).filter(|b| missing >> b & 1 == 1).collect();
    let compress = |mask: u32| -> usize {
        bits.iter()
            .enumerate()
            .filter(|(_, &b)| mask >> b & 1 == 1)
            .fold(0usize, |acc, (pos, _)| acc | 1 << pos)
    };
    let items: Vec<(usize, usize, f64)> = spare
        .iter()
        .map(|&(s, _, cost)| (s, compress(slots[s].mask), cost))
        .filter(|&(_, m, _)| m != 0)
        .collect();
    let full = (1usize << bits.len()) - 1;
    let mut cost = vec![f64::INFINITY; full + 1];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; full + 1];
    cost[0] = 0.0;
    for state in 0..full {
        if cost[state].is_infinite() {
            continue;
        }
        for (k, &(_, m, c)) in items.iter().enumerate() {
            let next = state | m;
            if next != state && cost[state] + c < cost[next] {
                cost[next] = cost[state] + c;
                parent[next] = Some((state, k));
            }
        }
    }
    let mut out = Vec::new();
    let mut state = full;
    while let Some((prev, k)) = parent[state] {
        out.push(items[k].0);
        state = prev;
    }
    out
}
