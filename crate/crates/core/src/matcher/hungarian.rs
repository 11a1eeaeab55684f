//! One-to-one assignment over a sparse set of scored candidate cells.
//!
//! The candidate graph is split into connected components and each component
//! is solved as a dense square minimization with the shortest-augmenting-path
//! Hungarian method. Costs are lexicographic pairs `(tier, value)`: candidate
//! cells cost `(0, -score)`, every other cell (non-candidate or padding)
//! costs `(1, 0)`, so the solver first maximizes the number of candidate pairs
//! and then their total score, without mixing a large sentinel into the floats.
//!
//! Among optimal matchings the lexicographically smallest sorted pair list is
//! returned: rows are fixed in order to the smallest tight column that still
//! admits a perfect matching in the tight subgraph.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::ops::{Add, AddAssign, Sub, SubAssign};

use petgraph::unionfind::UnionFind;

/// Reduced costs within this distance of zero count as tight.
const TIGHT_TOLERANCE: f64 = 1e-10;

type Cell = ((usize, usize), f64);

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cost {
    tier: i64,
    value: f64,
}

impl Cost {
    const ZERO: Cost = Cost { tier: 0, value: 0.0 };
    const INFINITE: Cost = Cost {
        tier: i64::MAX / 4,
        value: 0.0,
    };

    fn is_tight(self) -> bool {
        self.tier == 0 && self.value.abs() <= TIGHT_TOLERANCE
    }
}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.tier.cmp(&other.tier).then(self.value.total_cmp(&other.value)))
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        Cost {
            tier: self.tier + rhs.tier,
            value: self.value + rhs.value,
        }
    }
}

impl Sub for Cost {
    type Output = Cost;
    fn sub(self, rhs: Cost) -> Cost {
        Cost {
            tier: self.tier - rhs.tier,
            value: self.value - rhs.value,
        }
    }
}

impl AddAssign for Cost {
    fn add_assign(&mut self, rhs: Cost) {
        *self = *self + rhs;
    }
}

impl SubAssign for Cost {
    fn sub_assign(&mut self, rhs: Cost) {
        *self = *self - rhs;
    }
}

/// Maximum-cardinality, then maximum-score, one-to-one matching restricted to
/// `candidates` (`(row, col) -> score`). Non-finite scores are ignored.
pub fn assign(candidates: &BTreeMap<(usize, usize), f64>) -> BTreeSet<(usize, usize)> {
    let cells: Vec<Cell> = candidates
        .iter()
        .filter(|(_, s)| s.is_finite())
        .map(|(&k, &s)| (k, s))
        .collect();
    if cells.is_empty() {
        return BTreeSet::new();
    }

    let rows: BTreeSet<usize> = cells.iter().map(|((r, _), _)| *r).collect();
    let cols: BTreeSet<usize> = cells.iter().map(|((_, c), _)| *c).collect();
    let row_pos: BTreeMap<usize, usize> = rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let col_pos: BTreeMap<usize, usize> = cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();

    let mut uf = UnionFind::<usize>::new(rows.len() + cols.len());
    for ((r, c), _) in &cells {
        uf.union(row_pos[r], rows.len() + col_pos[c]);
    }
    let mut components: BTreeMap<usize, Vec<Cell>> = BTreeMap::new();
    for cell in cells {
        components.entry(uf.find(row_pos[&cell.0 .0])).or_default().push(cell);
    }

    components.into_values().flat_map(|cells| solve_component(&cells)).collect()
}

fn solve_component(cells: &[Cell]) -> Vec<(usize, usize)> {
    let rows: Vec<usize> = cells.iter().map(|((r, _), _)| *r).collect::<BTreeSet<_>>().into_iter().collect();
    let cols: Vec<usize> = cells.iter().map(|((_, c), _)| *c).collect::<BTreeSet<_>>().into_iter().collect();
    let n = rows.len().max(cols.len());
    let mut cost = vec![vec![Cost { tier: 1, value: 0.0 }; n]; n];
    let mut real = vec![vec![false; n]; n];
    for ((r, c), s) in cells {
        let i = rows.binary_search(r).expect("row present");
        let j = cols.binary_search(c).expect("column present");
        cost[i][j] = Cost { tier: 0, value: -s };
        real[i][j] = true;
    }

    let solved = Solved::run(&cost);
    let matching = solved.lexicographic_optimum(&cost, &real, rows.len(), cols.len());
    matching
        .into_iter()
        .enumerate()
        .take(rows.len())
        .filter(|&(i, j)| j < cols.len() && real[i][j])
        .map(|(i, j)| (rows[i], cols[j]))
        .collect()
}

/// Decisions already taken by the lexicographic pass.
struct Frozen<'a> {
    rows: &'a [bool],
    cols: &'a [bool],
    unmatched: &'a [bool],
    real: &'a [Vec<bool>],
}

struct Solved {
    /// Column assigned to each row.
    row_to_col: Vec<usize>,
    u: Vec<Cost>,
    v: Vec<Cost>,
}

impl Solved {
    /// Shortest augmenting path Hungarian method on a square cost matrix.
    fn run(cost: &[Vec<Cost>]) -> Solved {
        let n = cost.len();
        // 1-based potentials and matches; index 0 is the virtual root.
        let mut u = vec![Cost::ZERO; n + 1];
        let mut v = vec![Cost::ZERO; n + 1];
        let mut p = vec![0usize; n + 1];
        let mut way = vec![0usize; n + 1];
        for i in 1..=n {
            p[0] = i;
            let mut j0 = 0usize;
            let mut minv = vec![Cost::INFINITE; n + 1];
            let mut used = vec![false; n + 1];
            loop {
                used[j0] = true;
                let i0 = p[j0];
                let mut delta = Cost::INFINITE;
                let mut j1 = 0usize;
                for j in 1..=n {
                    if used[j] {
                        continue;
                    }
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
                for j in 0..=n {
                    if used[j] {
                        u[p[j]] += delta;
                        v[j] -= delta;
                    } else {
                        minv[j] -= delta;
                    }
                }
                j0 = j1;
                if p[j0] == 0 {
                    break;
                }
            }
            loop {
                let j1 = way[j0];
                p[j0] = p[j1];
                j0 = j1;
                if j0 == 0 {
                    break;
                }
            }
        }
        let mut row_to_col = vec![0usize; n];
        for j in 1..=n {
            row_to_col[p[j] - 1] = j - 1;
        }
        Solved {
            row_to_col,
            u: u[1..].to_vec(),
            v: v[1..].to_vec(),
        }
    }

    fn tight(&self, cost: &[Vec<Cost>], i: usize, j: usize) -> bool {
        (cost[i][j] - self.u[i] - self.v[j]).is_tight()
    }

    /// Re-selects, among perfect matchings of the tight subgraph, the one whose
    /// real pairs form the lexicographically smallest sorted list.
    fn lexicographic_optimum(
        &self,
        cost: &[Vec<Cost>],
        real: &[Vec<bool>],
        real_rows: usize,
        real_cols: usize,
    ) -> Vec<usize> {
        let n = cost.len();
        let mut row_to_col = self.row_to_col.clone();
        let mut col_to_row = vec![0usize; n];
        for (r, &c) in row_to_col.iter().enumerate() {
            col_to_row[c] = r;
        }
        let mut row_fixed = vec![false; n];
        let mut col_fixed = vec![false; n];
        // Rows settled as unmatched: they keep some non-candidate column, but
        // which one is free, so their column stays available to later rows.
        let mut unmatched = vec![false; n];

        for i in 0..real_rows {
            for j in 0..real_cols {
                if !real[i][j] || col_fixed[j] {
                    continue;
                }
                if row_to_col[i] == j {
                    break;
                }
                if !self.tight(cost, i, j) {
                    continue;
                }
                let state = Frozen {
                    rows: &row_fixed,
                    cols: &col_fixed,
                    unmatched: &unmatched,
                    real,
                };
                if let Some(path) = self.alternating_path(cost, i, j, &row_to_col, &col_to_row, &state) {
                    // Rotate the cycle i -> j -> ... -> row_to_col[i].
                    let freed = row_to_col[i];
                    let mut assignments = vec![(i, j)];
                    assignments.extend(path);
                    debug_assert_eq!(assignments.last().map(|&(_, c)| c), Some(freed));
                    for (r, c) in assignments {
                        row_to_col[r] = c;
                        col_to_row[c] = r;
                    }
                    break;
                }
            }
            if real[i][row_to_col[i]] {
                row_fixed[i] = true;
                col_fixed[row_to_col[i]] = true;
            } else {
                unmatched[i] = true;
            }
        }
        row_to_col
    }

    /// Breadth-first search for an alternating path that lets row `i` take
    /// column `j`: starting from `j`'s current row, each step moves a row to
    /// another tight column, ending at the column `i` gives up. Returns the
    /// new `(row, column)` assignments along the path.
    fn alternating_path(
        &self,
        cost: &[Vec<Cost>],
        i: usize,
        j: usize,
        row_to_col: &[usize],
        col_to_row: &[usize],
        frozen: &Frozen,
    ) -> Option<Vec<(usize, usize)>> {
        let n = cost.len();
        let target = row_to_col[i];
        let start = col_to_row[j];
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[start] = true;
        seen[i] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(r) = queue.pop_front() {
            #[allow(clippy::needless_range_loop)]
            for c in 0..n {
                if frozen.cols[c]
                    || c == j
                    || c == row_to_col[r]
                    || (frozen.unmatched[r] && frozen.real[r][c])
                    || !self.tight(cost, r, c)
                {
                    continue;
                }
                if c == target {
                    let mut path = vec![(r, c)];
                    let mut cur = r;
                    while let Some((prev_row, col)) = parent[cur] {
                        path.push((prev_row, col));
                        cur = prev_row;
                    }
                    path.reverse();
                    return Some(path);
                }
                let next = col_to_row[c];
                if !seen[next] && !frozen.rows[next] {
                    seen[next] = true;
                    parent[next] = Some((r, c));
                    queue.push_back(next);
                }
            }
        }
        None
    }
}
