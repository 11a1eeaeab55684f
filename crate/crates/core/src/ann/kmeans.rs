//! Seeded k-means with k-means++ initialization.

use rand::Rng;

pub(crate) const MAX_ITERATIONS: usize = 25;
pub(crate) const MOVEMENT_TOLERANCE: f64 = 1e-6;

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the smaller index.
pub(crate) fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn plus_plus_init<R: Rng>(points: &[&[f64]], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, points[first])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if r < w {
                        break;
                    }
                    r -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            // Every remaining point duplicates a centroid.
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        chosen[pick] = true;
        let c = points[pick].to_vec();
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(squared_distance(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd iterations from k-means++ seeds. Returns centroids and per-point assignments.
pub(crate) fn kmeans<R: Rng>(points: &[&[f64]], k: usize, rng: &mut R) -> (Vec<Vec<f64>>, Vec<usize>) {
    let dim = points[0].len();
    let mut centroids = plus_plus_init(points, k, rng);
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    for _ in 0..MAX_ITERATIONS {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            sums[a].iter_mut().zip(p.iter()).for_each(|(s, x)| *s += x);
        }
        let mut movement: f64 = 0.0;
        for c in 0..k {
            // Empty clusters keep their previous centroid.
            if counts[c] == 0 {
                continue;
            }
            let mean: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            movement = movement.max(squared_distance(&mean, &centroids[c]).sqrt());
            centroids[c] = mean;
        }
        assignment = points.iter().map(|p| nearest(p, &centroids)).collect();
        if movement < MOVEMENT_TOLERANCE {
            break;
        }
    }
    (centroids, assignment)
}
