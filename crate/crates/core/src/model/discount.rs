//! Discount-level rules shared by the solvers.
//!
//! Level `h` is a zero-based index into the ladder; larger `h` means a
//! smaller multiplier. The monotone rule therefore reads: a contract covering
//! more subsystems must sit at a level index no lower than any smaller contract.

use super::Catalog;

/// Initialization rule: the level indexed by the highest covered subsystem,
/// clamped to the ladder length.
pub fn z0_level(catalog: &Catalog, i: usize, l: usize) -> usize {
    catalog.highest_subsystem(i).min(l - 1)
}

/// Raw initialization levels before the monotone repair.
pub fn z0_levels(catalog: &Catalog, l: usize) -> Vec<usize> {
    (0..catalog.n()).map(|i| z0_level(catalog, i, l)).collect()
}

/// Raise each contract's level to the largest level held by any strictly
/// smaller contract. Visits contracts by ascending size, so the result is
/// the least monotone assignment that dominates the input pointwise.
pub fn sweep_up(catalog: &Catalog, levels: &mut [usize]) {
    let mut below = 0usize;
    let mut current = 0usize;
    let mut size = 0usize;
    for &i in catalog.by_size() {
        if catalog.size(i) != size {
            below = below.max(current);
            size = catalog.size(i);
        }
        levels[i] = levels[i].max(below);
        current = current.max(levels[i]);
    }
}

/// z0 levels repaired into a monotone assignment.
pub fn initial_levels(catalog: &Catalog, l: usize) -> Vec<usize> {
    let mut levels = z0_levels(catalog, l);
    sweep_up(catalog, &mut levels);
    levels
}

/// Every pair with a strictly larger contract at a strictly lower level.
pub fn monotone_violations(catalog: &Catalog, levels: &[Option<usize>]) -> Vec<(usize, usize)> {
    let n = catalog.n();
    let mut out = Vec::new();
    for i in 0..n {
        let Some(hi) = levels[i] else { continue };
        for i2 in 0..n {
            let Some(hi2) = levels[i2] else { continue };
            if catalog.size(i) > catalog.size(i2) && hi < hi2 {
                out.push((i, i2));
            }
        }
    }
    out
}

pub fn is_monotone(catalog: &Catalog, levels: &[usize]) -> bool {
    let mut below = 0usize;
    let mut current = 0usize;
    let mut size = 0usize;
    for &i in catalog.by_size() {
        if catalog.size(i) != size {
            below = below.max(current);
            size = catalog.size(i);
        }
        if levels[i] < below {
            return false;
        }
        current = current.max(levels[i]);
    }
    true
}

/// Completion that puts each non-advertised contract at the shallowest level
/// the monotone rule allows. Advertised rows are kept; they must be monotone.
pub fn shallow_levels(catalog: &Catalog, advertised: &[bool], levels: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = (0..catalog.n())
        .map(|i| if advertised[i] { levels[i] } else { 0 })
        .collect();
    sweep_up(catalog, &mut out);
    out
}

/// Canonical completion of the rows of non-advertised contracts.
///
/// Advertised rows are kept. Each other contract takes its z0 level clamped
/// below by every smaller contract already placed and above by every larger
/// advertised contract. When the advertised rows are monotone the result is
/// monotone over all contracts.
pub fn canonical_levels(catalog: &Catalog, l: usize, advertised: &[bool], levels: &[usize]) -> Vec<usize> {
    let w = catalog.w();
    // ceiling[s] = lowest advertised level among contracts larger than size s
    let mut min_at_size = vec![l - 1; w + 2];
    for i in 0..catalog.n() {
        if advertised[i] {
            let s = catalog.size(i);
            min_at_size[s] = min_at_size[s].min(levels[i]);
        }
    }
    let mut ceiling = vec![l - 1; w + 2];
    for s in (0..=w).rev() {
        ceiling[s] = ceiling[s + 1].min(min_at_size[s + 1]);
    }

    let mut out = levels.to_vec();
    let mut below = 0usize;
    let mut current = 0usize;
    let mut size = 0usize;
    for &i in catalog.by_size() {
        let s = catalog.size(i);
        if s != size {
            below = below.max(current);
            size = s;
        }
        if !advertised[i] {
            out[i] = z0_level(catalog, i, l).min(ceiling[s]).max(below);
        }
        current = current.max(out[i]);
    }
    out
}
