//! List sphere decoder.
//!
//! Depth-first search over the BPSK tree from the last symbol to the first,
//! visiting the child with the smaller partial-distance increment first
//! (Schnorr-Euchner order). Leaves inside the current radius enter the
//! candidate list instead of shrinking the radius; once the list holds
//! `N_L` points the radius tracks the farthest entry, and any closer point
//! evicts it.

use super::lattice::{LatticePoint, SearchProblem};
use super::FlopCounter;

/// The `N_L` best lattice points found so far, sorted by distance.
#[derive(Debug, Clone)]
pub struct CandidateList {
    entries: Vec<LatticePoint>,
    capacity: usize,
    radius_sq: f64,
}

impl CandidateList {
    pub fn new(capacity: usize, radius_sq: f64) -> Self {
        assert!(capacity > 0, "candidate list needs a positive capacity");
        Self {
            entries: Vec::with_capacity(capacity + 1),
            capacity,
            radius_sq,
        }
    }

    pub fn entries(&self) -> &[LatticePoint] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    /// Current squared search radius.
    pub fn radius_sq(&self) -> f64 {
        self.radius_sq
    }

    /// Inserts `point` if it lies inside the radius and beats the current
    /// farthest entry of a full list. Returns whether it was kept.
    pub fn insert(&mut self, point: LatticePoint) -> bool {
        if point.squared_distance > self.radius_sq {
            return false;
        }
        if self.is_full() {
            let last = self.entries.last().expect("full list is non-empty");
            if point.key_cmp(last).is_ge() {
                return false;
            }
        }
        let pos = self.entries.partition_point(|e| e.key_cmp(&point).is_lt());
        self.entries.insert(pos, point);
        if self.entries.len() > self.capacity {
            self.entries.pop();
        }
        if self.is_full() {
            self.radius_sq = self
                .entries
                .last()
                .map_or(self.radius_sq, |e| e.squared_distance);
        }
        true
    }

    /// Keeps only the `n` closest entries.
    pub fn truncate(&mut self, n: usize) {
        self.entries.truncate(n);
    }

    /// Distance of the farthest kept point, `√max d²`.
    pub fn farthest_distance(&self) -> Option<f64> {
        self.entries.last().map(|e| e.squared_distance.sqrt())
    }
}

/// Work done by one tree search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Tree nodes entered (children that passed the radius test).
    pub nodes_visited: u64,
    /// Leaves reached inside the radius in force at the time, including
    /// points that were later evicted.
    pub points_found: u64,
}

impl std::ops::AddAssign for SearchStats {
    fn add_assign(&mut self, rhs: Self) {
        self.nodes_visited += rhs.nodes_visited;
        self.points_found += rhs.points_found;
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub list: CandidateList,
    pub stats: SearchStats,
}

struct Search<'a> {
    problem: &'a SearchProblem,
    list: CandidateList,
    counter: &'a mut FlopCounter,
    stats: SearchStats,
    /// Radius bound on the partial distance `‖z − R a‖²`.
    bound: f64,
    symbols: Vec<f64>,
    bits: u64,
}

impl Search<'_> {
    fn refresh_bound(&mut self) {
        self.bound = self.list.radius_sq() - self.problem.offset();
        self.counter.add(1);
    }

    fn descend(&mut self, level: usize, partial: f64) {
        let n = self.problem.block_len();
        let row = self.problem.r_row(level);
        let mut center = self.problem.z()[level];
        for (r, a) in row[level + 1..].iter().zip(&self.symbols[level + 1..]) {
            center -= r * a;
        }
        let tail = (n - 1 - level) as u64;
        let step = self.problem.r_at(level, level) * self.problem.amplitude();
        // 2 per interference term, 1 for the diagonal product, then
        // sub + square + accumulate for each child.
        self.counter.add(2 * tail + 1 + 6);
        let d_plus = center - step;
        let d_minus = center + step;
        let inc_plus = partial + d_plus * d_plus;
        let inc_minus = partial + d_minus * d_minus;
        let children = if inc_plus <= inc_minus {
            [(1u64, inc_plus), (0u64, inc_minus)]
        } else {
            [(0u64, inc_minus), (1u64, inc_plus)]
        };
        for (bit, dist) in children {
            // The bound may have shrunk while exploring the first child.
            if dist > self.bound {
                // The second child is never closer than the first.
                break;
            }
            self.stats.nodes_visited += 1;
            let amp = self.problem.amplitude();
            self.symbols[level] = if bit == 1 { amp } else { -amp };
            if bit == 1 {
                self.bits |= 1 << level;
            } else {
                self.bits &= !(1 << level);
            }
            if level == 0 {
                self.counter.add(1);
                let point = LatticePoint {
                    bits: self.bits,
                    squared_distance: dist + self.problem.offset(),
                };
                self.stats.points_found += 1;
                let was_full = self.list.is_full();
                let radius_before = self.list.radius_sq();
                self.list.insert(point);
                if self.list.is_full() && (!was_full || self.list.radius_sq() != radius_before) {
                    self.refresh_bound();
                }
            } else {
                self.descend(level - 1, dist);
            }
        }
    }
}

/// Runs the list sphere decoder with squared radius `d_init_sq` (a bound on
/// the full distance `‖y − H a‖²`) and list capacity `n_l`. Every search
/// flop is charged to `counter`. The list may come back short or empty if
/// the sphere holds fewer than `n_l` points.
pub fn lsd_search(
    problem: &SearchProblem,
    d_init_sq: f64,
    n_l: usize,
    counter: &mut FlopCounter,
) -> SearchOutcome {
    let n = problem.block_len();
    let mut search = Search {
        problem,
        list: CandidateList::new(n_l, d_init_sq),
        counter,
        stats: SearchStats::default(),
        bound: 0.0,
        symbols: vec![0.0; n],
        bits: 0,
    };
    search.refresh_bound();
    if search.bound >= 0.0 && n > 0 {
        search.descend(n - 1, 0.0);
    }
    SearchOutcome {
        list: search.list,
        stats: search.stats,
    }
}

/// Number of lattice points with `‖y − H a‖² ≤ radius_sq`, stopping at
/// `limit`. This is the plain sphere population with no list and no
/// eviction; it is a diagnostic and charges no flops.
pub fn count_points_in_sphere(problem: &SearchProblem, radius_sq: f64, limit: u64) -> u64 {
    fn walk(
        p: &SearchProblem,
        level: usize,
        partial: f64,
        bound: f64,
        sym: &mut [f64],
        found: &mut u64,
        limit: u64,
    ) {
        let n = p.block_len();
        let row = p.r_row(level);
        let mut center = p.z()[level];
        for j in level + 1..n {
            center -= row[j] * sym[j];
        }
        let step = p.r_at(level, level) * p.amplitude();
        for s in [1.0, -1.0] {
            if *found >= limit {
                return;
            }
            let d = center - s * step;
            let dist = partial + d * d;
            if dist > bound {
                continue;
            }
            sym[level] = s * p.amplitude();
            if level == 0 {
                *found += 1;
            } else {
                walk(p, level - 1, dist, bound, sym, found, limit);
            }
        }
    }
    let n = problem.block_len();
    let bound = radius_sq - problem.offset();
    let mut found = 0;
    if bound >= 0.0 && n > 0 {
        walk(
            problem,
            n - 1,
            0.0,
            bound,
            &mut vec![0.0; n],
            &mut found,
            limit,
        );
    }
    found
}
