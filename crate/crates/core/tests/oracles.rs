//! Library results against brute-force definitions on random instances.

mod common;

use common::*;
use rand::Rng;
use refgeo::geometry::{effective_rank, knn_distances, mean_knn_log_density};
use refgeo::metrics::{fit_gaussian, frechet_distance, kid_mmd, precision_recall};

const TOL: f64 = 1e-10;
const INSTANCES: u64 = 50;

#[test]
fn knn_distances_and_density() {
    for seed in 0..INSTANCES {
        let mut r = rng(seed);
        let n = r.gen_range(3..=100);
        let dim = r.gen_range(1..=8);
        let k = r.gen_range(1..n);
        let m = anisotropic_matrix(&mut r, n, dim);
        let got = knn_distances(&m, k).unwrap();
        let want = naive_kth(&m, k);
        for (g, w) in got.iter().zip(&want) {
            assert!(close(*g, *w, TOL), "seed {seed}: {g} vs {w}");
        }
        let d = mean_knn_log_density(&m, k).unwrap();
        assert!(close(d, naive_density(&m, k), TOL), "seed {seed}");
    }
}

#[test]
fn knn_across_tile_boundaries() {
    // more rows than one query/point tile
    let mut r = rng(7);
    let m = gaussian_matrix(&mut r, 1500, 5);
    for k in [1, 3, 80] {
        let got = knn_distances(&m, k).unwrap();
        let want = naive_kth(&m, k);
        for (g, w) in got.iter().zip(&want) {
            assert!(close(*g, *w, TOL));
        }
    }
}

#[test]
fn frechet_matches_symmetric_sqrt_route() {
    for seed in 0..INSTANCES {
        let mut r = rng(1000 + seed);
        let dim = r.gen_range(1..=8);
        let na = r.gen_range(dim + 2..=100);
        let nb = r.gen_range(dim + 2..=100);
        let a = anisotropic_matrix(&mut r, na, dim);
        let b = anisotropic_matrix(&mut r, nb, dim);
        let got = frechet_distance(&fit_gaussian(&a).unwrap(), &fit_gaussian(&b).unwrap()).unwrap();
        let want = naive_frechet(&a, &b);
        assert!(close(got, want, TOL), "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn kid_over_full_sets_matches_naive_mmd() {
    for seed in 0..INSTANCES {
        let mut r = rng(2000 + seed);
        let n = r.gen_range(2..=60);
        let dim = r.gen_range(1..=8);
        let a = anisotropic_matrix(&mut r, n, dim);
        let b = anisotropic_matrix(&mut r, n, dim);
        // subset size n with shared indices is a joint permutation of both
        // sets, which leaves the statistic unchanged
        let got = kid_mmd(&a, &b, n, 1, seed).unwrap().value;
        let want = naive_mmd2(&a, &b);
        assert!(close(got, want, TOL), "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn precision_recall_match_manifold_definition() {
    for seed in 0..INSTANCES {
        let mut r = rng(3000 + seed);
        let dim = r.gen_range(1..=8);
        let nr = r.gen_range(3..=100);
        let ng = r.gen_range(3..=100);
        let k = r.gen_range(1..nr.min(ng));
        let a = anisotropic_matrix(&mut r, nr, dim);
        let b = anisotropic_matrix(&mut r, ng, dim);
        let got = precision_recall(&a, &b, k).unwrap();
        let (p, rc) = naive_precision_recall(&a, &b, k);
        assert!(close(got.precision, p, TOL), "seed {seed}");
        assert!(close(got.recall, rc, TOL), "seed {seed}");
    }
}

#[test]
fn effective_rank_matches_entropy_of_spectrum() {
    for seed in 0..INSTANCES {
        let mut r = rng(4000 + seed);
        let dim = r.gen_range(1..=8);
        let n = r.gen_range(dim + 2..=100);
        let m = anisotropic_matrix(&mut r, n, dim);
        let got = effective_rank(&m).unwrap();
        let want = naive_erank(&m);
        assert!(close(got, want, TOL), "seed {seed}: {got} vs {want}");
    }
}
