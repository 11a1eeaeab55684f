//! Exhaustive reference implementations.

use std::collections::BTreeSet;

use ndarray::Array2;

type Pairs = BTreeSet<(usize, usize)>;
/// Size, total and sorted pairs of the best matching so far.
type Best = Option<(usize, f64, Vec<(usize, usize)>)>;

struct Search<'a> {
    m: &'a Array2<f64>,
    candidates: &'a Pairs,
    used: Vec<bool>,
    current: Vec<(usize, usize)>,
    best: Best,
}

impl Search<'_> {
    fn go(&mut self, row: usize) {
        let (p, q) = self.m.dim();
        if row == p {
            let total: f64 = self.current.iter().map(|&(i, j)| self.m[[i, j]]).sum();
            let key = (self.current.len(), total);
            let better = match &self.best {
                None => true,
                Some((n, t, pairs)) => key > (*n, *t) || (key == (*n, *t) && self.current < *pairs),
            };
            if better {
                self.best = Some((key.0, total, self.current.clone()));
            }
            return;
        }
        for j in 0..q {
            if !self.used[j] && self.candidates.contains(&(row, j)) {
                self.used[j] = true;
                self.current.push((row, j));
                self.go(row + 1);
                self.current.pop();
                self.used[j] = false;
            }
        }
        self.go(row + 1);
    }
}

/// Every matching inside `candidates`, ranked by (size, total) and then the
/// lexicographically smallest sorted pair list.
pub fn brute_force(m: &Array2<f64>, candidates: &Pairs) -> (Pairs, f64) {
    let mut search = Search {
        m,
        candidates,
        used: vec![false; m.ncols()],
        current: Vec::new(),
        best: None,
    };
    search.go(0);
    let (_, total, pairs) = search.best.expect("the empty matching always exists");
    (pairs.into_iter().collect(), total)
}
