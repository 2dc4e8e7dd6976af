//! Best-bound-first search over advertised sets and discount levels.
//!
//! Contracts are decided in (size, index) order. Each contract is either off
//! or on at one level of its domain, no lower than the highest level already
//! given to an on-contract of strictly smaller size.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::model::{discount, profit_tolerance, Catalog, Decision, Instance, OfferTable};
use crate::ratio::{Opt, RatioProblem, Slot};
use crate::solution::Budget;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Each group gets its own covering subset of the advertised set.
    Personalized,
    /// Every advertised contract goes to every group.
    Shared,
}

pub(crate) struct Search<'a> {
    pub instance: &'a Instance,
    pub catalog: &'a Catalog,
    pub table: &'a OfferTable,
    pub mode: Mode,
    /// Allowed levels per contract, ascending.
    pub domains: Vec<Vec<usize>>,
    pub budget: Budget,
    /// Known achievable profit used for pruning from the start.
    pub incumbent: Option<f64>,
}

pub(crate) struct Outcome {
    pub candidates: Vec<(f64, Decision)>,
    pub complete: bool,
    pub nodes: u64,
}

const OFF: i8 = -1;

struct Node {
    bound: f64,
    seq: u64,
    assign: Vec<i8>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct State {
    best: f64,
    candidates: Vec<(f64, Decision)>,
    nodes: u64,
}

impl State {
    fn threshold(&self) -> f64 {
        if self.best.is_finite() {
            self.best - profit_tolerance(self.best, self.best)
        } else {
            f64::NEG_INFINITY
        }
    }

    fn offer(&mut self, profit: f64, decision: Decision) {
        if !self.best.is_finite() || profit > self.best {
            self.best = profit;
            let cut = self.threshold();
            self.candidates.retain(|(p, _)| *p >= cut);
        }
        if profit >= self.threshold() {
            self.candidates.push((profit, decision));
        }
    }
}

impl Search<'_> {
    fn order(&self) -> &[usize] {
        self.catalog.by_size()
    }

    /// Lowest allowed level at position `p` given the decided prefix.
    fn floor(&self, assign: &[i8], p: usize) -> usize {
        let order = self.order();
        let size = self.catalog.size(order[p]);
        assign
            .iter()
            .enumerate()
            .filter(|&(q, &h)| h != OFF && self.catalog.size(order[q]) < size)
            .map(|(_, &h)| h as usize)
            .max()
            .unwrap_or(0)
    }

    fn eligible_all(&self, i: usize, h: usize) -> bool {
        (0..self.instance.m).all(|j| self.table.eligible(i, j, h))
    }

    fn eligible_any(&self, i: usize, h: usize) -> bool {
        (0..self.instance.m).any(|j| self.table.eligible(i, j, h))
    }

    fn children(&self, assign: &[i8]) -> Vec<i8> {
        let p = assign.len();
        let i = self.order()[p];
        let floor = self.floor(assign, p);
        let mut out = vec![OFF];
        for &h in &self.domains[i] {
            if h < floor {
                continue;
            }
            let ok = match self.mode {
                Mode::Personalized => self.eligible_any(i, h),
                Mode::Shared => self.eligible_all(i, h),
            };
            if ok {
                out.push(h as i8);
            }
        }
        out
    }

    fn option(&self, i: usize, j: usize, h: usize) -> Opt {
        Opt {
            weight: self.table.weight(i, j, h),
            margin: self.table.margin(i, j, h),
            tag: h,
        }
    }

    /// Relaxed per-group revenue bound of the subtree below `assign`.
    fn bound(&self, assign: &[i8]) -> Option<f64> {
        let order = self.order();
        let n = order.len();
        let d = assign.len();
        let on = assign.iter().filter(|&&h| h != OFF).count();
        let floors: Vec<usize> = (d..n).map(|p| self.floor(assign, p)).collect();
        let mut total = 0.0;
        for j in 0..self.instance.m {
            let mut slots = Vec::with_capacity(n);
            for (p, &i) in order.iter().enumerate() {
                let mask = self.catalog.mask(i);
                if p < d {
                    let h = assign[p];
                    if h == OFF {
                        continue;
                    }
                    let h = h as usize;
                    match self.mode {
                        Mode::Personalized => {
                            if self.table.eligible(i, j, h) {
                                slots.push(Slot {
                                    mask,
                                    forced: false,
                                    options: vec![self.option(i, j, h)],
                                });
                            }
                        }
                        Mode::Shared => {
                            slots.push(Slot {
                                mask,
                                forced: true,
                                options: vec![self.option(i, j, h)],
                            });
                        }
                    }
                } else {
                    let floor = floors[p - d];
                    let options: Vec<Opt> = self.domains[i]
                        .iter()
                        .filter(|&&h| h >= floor)
                        .filter(|&&h| match self.mode {
                            Mode::Personalized => self.table.eligible(i, j, h),
                            Mode::Shared => self.eligible_all(i, h),
                        })
                        .map(|&h| self.option(i, j, h))
                        .collect();
                    if !options.is_empty() {
                        slots.push(Slot {
                            mask,
                            forced: false,
                            options,
                        });
                    }
                }
            }
            let problem = RatioProblem {
                u0: self.instance.u0[j],
                target: self.catalog.full_mask(),
                slots,
            };
            total += self.instance.lambda[j] * problem.maximize()?.value;
        }
        Some(total - self.instance.theta * on as f64)
    }

    /// Leaf slots for group `j`: the eligible on-contracts, one option each.
    fn leaf_problem(&self, levels: &[Option<usize>], j: usize, forced: bool) -> (RatioProblem, Vec<usize>) {
        let mut slots = Vec::new();
        let mut ids = Vec::new();
        for (i, level) in levels.iter().enumerate() {
            if let Some(h) = *level {
                if self.table.eligible(i, j, h) {
                    slots.push(Slot {
                        mask: self.catalog.mask(i),
                        forced,
                        options: vec![self.option(i, j, h)],
                    });
                    ids.push(i);
                }
            }
        }
        let problem = RatioProblem {
            u0: self.instance.u0[j],
            target: self.catalog.full_mask(),
            slots,
        };
        (problem, ids)
    }

    fn levels_of(&self, assign: &[i8]) -> Vec<Option<usize>> {
        let mut levels = vec![None; self.catalog.n()];
        for (p, &h) in assign.iter().enumerate() {
            if h != OFF {
                levels[self.order()[p]] = Some(h as usize);
            }
        }
        levels
    }

    /// Exact leaf value: `(profit, per-group recommended sets)`.
    fn leaf_value(&self, levels: &[Option<usize>]) -> Option<(f64, Vec<Vec<usize>>)> {
        let on: Vec<usize> = (0..levels.len()).filter(|&i| levels[i].is_some()).collect();
        if on.is_empty() {
            return None;
        }
        let mut total = 0.0;
        let mut sets = Vec::with_capacity(self.instance.m);
        match self.mode {
            Mode::Shared => {
                let cover = on.iter().fold(0u32, |acc, &i| acc | self.catalog.mask(i));
                if cover != self.catalog.full_mask() {
                    return None;
                }
                for j in 0..self.instance.m {
                    let offers = on.iter().map(|&i| (i, levels[i].unwrap()));
                    total += self.instance.lambda[j] * self.table.group_revenue(self.instance.u0[j], j, offers);
                    sets.push(on.clone());
                }
            }
            Mode::Personalized => {
                let mut union = vec![false; levels.len()];
                for j in 0..self.instance.m {
                    let (problem, ids) = self.leaf_problem(levels, j, false);
                    let sol = problem.maximize()?;
                    let set: Vec<usize> = ids
                        .iter()
                        .zip(&sol.choice)
                        .filter(|(_, c)| c.is_some())
                        .map(|(&i, _)| i)
                        .collect();
                    for &i in &set {
                        union[i] = true;
                    }
                    total += self.instance.lambda[j] * sol.value;
                    sets.push(set);
                }
                if on.iter().any(|&i| !union[i]) {
                    return None;
                }
            }
        }
        Some((total - self.instance.theta * on.len() as f64, sets))
    }

    /// Lexicographically smallest recommendation set of group `j` whose
    /// revenue stays within tolerance of the group optimum.
    fn refine_group(&self, levels: &[Option<usize>], j: usize) -> Option<Vec<usize>> {
        let (base, ids) = self.leaf_problem(levels, j, false);
        let optimum = base.maximize()?.value;
        let cut = optimum - profit_tolerance(optimum, optimum);
        let mut problem = base;
        let mut chosen = Vec::new();
        for s in 0..ids.len() {
            let saved = std::mem::take(&mut problem.slots[s].options);
            let without = problem.maximize().map(|sol| sol.value);
            if without.is_some_and(|v| v >= cut) {
                continue;
            }
            problem.slots[s].options = saved;
            problem.slots[s].forced = true;
            chosen.push(ids[s]);
        }
        Some(chosen)
    }

    fn build(&self, levels: &[Option<usize>], sets: &[Vec<usize>]) -> Decision {
        let n = self.catalog.n();
        let (m, l) = (self.instance.m, self.instance.l);
        let y: Vec<bool> = levels.iter().map(|h| h.is_some()).collect();
        let mut x = vec![vec![false; m]; n];
        for (j, set) in sets.iter().enumerate() {
            for &i in set {
                x[i][j] = true;
            }
        }
        let raw: Vec<usize> = levels.iter().map(|h| h.unwrap_or(0)).collect();
        let full = discount::canonical_levels(self.catalog, l, &y, &raw);
        Decision::from_levels(x, y, &full, l)
    }

    fn visit_leaf(&self, assign: &[i8], state: &mut State) {
        let levels = self.levels_of(assign);
        let Some((profit, mut sets)) = self.leaf_value(&levels) else {
            return;
        };
        if profit < state.threshold() {
            return;
        }
        if self.mode == Mode::Personalized {
            let mut union = vec![false; levels.len()];
            for (j, set) in sets.iter_mut().enumerate() {
                let Some(refined) = self.refine_group(&levels, j) else {
                    return;
                };
                for &i in &refined {
                    union[i] = true;
                }
                *set = refined;
            }
            if levels.iter().enumerate().any(|(i, h)| h.is_some() && !union[i]) {
                return;
            }
        }
        let decision = self.build(&levels, &sets);
        state.offer(profit, decision);
    }

    /// Greedy descent along the best-bound child to seed an incumbent.
    fn dive(&self, state: &mut State) {
        let n = self.catalog.n();
        let mut assign: Vec<i8> = Vec::with_capacity(n);
        loop {
            let children = self.children(&assign);
            if assign.len() + 1 == n {
                for h in children {
                    state.nodes += 1;
                    assign.push(h);
                    self.visit_leaf(&assign, state);
                    assign.pop();
                }
                return;
            }
            let mut best: Option<(f64, i8)> = None;
            for h in children {
                state.nodes += 1;
                assign.push(h);
                if let Some(b) = self.bound(&assign) {
                    if best.is_none_or(|(v, _)| b > v) {
                        best = Some((b, h));
                    }
                }
                assign.pop();
            }
            match best {
                Some((_, h)) => assign.push(h),
                None => return,
            }
        }
    }

    pub fn run(&self) -> Outcome {
        let start = Instant::now();
        let deadline = self.budget.deadline(start);
        let node_limit = self.budget.nodes.unwrap_or(u64::MAX);
        let n = self.catalog.n();
        let mut state = State {
            best: self.incumbent.unwrap_or(f64::NEG_INFINITY),
            candidates: Vec::new(),
            nodes: 0,
        };
        self.dive(&mut state);

        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        let mut complete = true;
        let mut pops = 0u64;
        if let Some(bound) = self.bound(&[]) {
            heap.push(Node {
                bound,
                seq,
                assign: Vec::new(),
            });
        }
        while let Some(node) = heap.pop() {
            if node.bound < state.threshold() {
                break;
            }
            pops += 1;
            if state.nodes >= node_limit || (pops.is_multiple_of(16) && Instant::now() >= deadline) {
                complete = false;
                break;
            }
            let mut assign = node.assign;
            for h in self.children(&assign) {
                state.nodes += 1;
                assign.push(h);
                if assign.len() == n {
                    self.visit_leaf(&assign, &mut state);
                } else if let Some(bound) = self.bound(&assign) {
                    if bound >= state.threshold() {
                        seq += 1;
                        heap.push(Node {
                            bound,
                            seq,
                            assign: assign.clone(),
                        });
                    }
                }
                assign.pop();
            }
        }
        Outcome {
            candidates: state.candidates,
            complete,
            nodes: state.nodes,
        }
    }
}
