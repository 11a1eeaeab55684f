//! Seeded synthetic vectors for the index tests.

use ndarray::Array2;
use polyalign::embedding::EmbeddingMatrix;
use polyalign::ontology::Iri;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn matrix(rows: Vec<Vec<f64>>) -> EmbeddingMatrix {
    let (n, d) = (rows.len(), rows[0].len());
    let keys = (0..n).map(|i| Iri::new(format!("urn:v:{i:05}")).unwrap()).collect();
    EmbeddingMatrix::from_raw(Array2::from_shape_vec((n, d), rows.concat()).unwrap(), keys, "synthetic").unwrap()
}

pub fn random_unit(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| unit(gaussian(&mut rng, d, 1.0))).collect()
}

/// `clusters * per_cluster` unit vectors around random unit centers, plus
/// `queries` fresh points drawn around the same centers.
pub fn clustered(clusters: usize, per_cluster: usize, d: usize, spread: f64, queries: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..clusters).map(|_| unit(gaussian(&mut rng, d, 1.0))).collect();
    let around = |c: &Vec<f64>, rng: &mut ChaCha8Rng| {
        let noise = gaussian(rng, d, spread / (d as f64).sqrt());
        unit(c.iter().zip(noise).map(|(a, b)| a + b).collect())
    };
    let points = (0..clusters * per_cluster).map(|i| around(&centers[i / per_cluster], &mut rng)).collect();
    let qs = (0..queries)
        .map(|_| {
            let c = rng.random_range(0..clusters);
            around(&centers[c], &mut rng)
        })
        .collect();
    (points, qs)
}
