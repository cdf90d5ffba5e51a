use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use rainrate_core::features::{mst_length, normalized_mst, CropBox, MonteCarloReference};

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Minimum over every labelled spanning tree, enumerated by Prüfer code.
fn brute_force_mst(points: &[[f64; 3]]) -> f64 {
    let n = points.len();
    if n == 2 {
        return dist(points[0], points[1]);
    }
    let mut best = f64::INFINITY;
    let mut code = vec![0usize; n - 2];
    loop {
        let mut degree = vec![1usize; n];
        for &c in &code {
            degree[c] += 1;
        }
        let mut total = 0.0;
        for &c in &code {
            let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
            total += dist(points[leaf], points[c]);
            degree[leaf] -= 1;
            degree[c] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        total += dist(points[rest[0]], points[rest[1]]);
        best = best.min(total);

        let mut k = 0;
        loop {
            if k == code.len() {
                return best;
            }
            code[k] += 1;
            if code[k] < n {
                break;
            }
            code[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn prim_matches_brute_force_on_small_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for draw in 0..200 {
        let n = 2 + draw % 5;
        let pts: Vec<[f64; 3]> = (0..n)
            .map(|_| [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
            .collect();
        let prim = mst_length(&pts).unwrap();
        let brute = brute_force_mst(&pts);
        // identical edge lengths, summed in a different order
        assert!((prim - brute).abs() <= 1e-12 * brute, "draw {draw}: prim {prim} vs brute force {brute}");
    }
    assert_eq!(mst_length::<[f64; 3]>(&[[1.0, 2.0, 3.0]]), None);
}

#[test]
fn normalized_length_regimes() {
    let h = 10.0;
    let bbox = CropBox::new(h).unwrap();
    let reference = MonteCarloReference::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    let mut mean = 0.0;
    for _ in 0..50 {
        let pts: Vec<[f64; 3]> = (0..200).map(|_| [(); 3].map(|_| rng.random_range(-h..h))).collect();
        mean += normalized_mst(&pts, &bbox, &reference).unwrap() / 50.0;
    }
    assert!((0.9..=1.1).contains(&mean), "uniform l = {mean}");

    let tight = Normal::new(0.0, h / 50.0).unwrap();
    let pts: Vec<[f64; 3]> = (0..200).map(|_| [(); 3].map(|_| tight.sample(&mut rng))).collect();
    let clustered = normalized_mst(&pts, &bbox, &reference).unwrap();
    assert!(clustered < 0.5, "clustered l = {clustered}");

    // 25 points per corner on a jittered 2.2 m lattice reaching 0.46 h in from each corner
    let pts: Vec<[f64; 3]> = (0..200)
        .map(|i| {
            let (corner, cell) = (i % 8, i / 8);
            let sign =
                [(corner & 1) as f64, ((corner >> 1) & 1) as f64, ((corner >> 2) & 1) as f64].map(|c| 2.0 * c - 1.0);
            let offset =
                [cell % 3, (cell / 3) % 3, cell / 9].map(|k| 0.22 * h * k as f64 + rng.random_range(0.0..0.02 * h));
            core::array::from_fn(|a| sign[a] * (h - offset[a]))
        })
        .collect();
    let edged = normalized_mst(&pts, &bbox, &reference).unwrap();
    assert!(edged > 1.0, "corner l = {edged}");

    let corners: Vec<[f64; 3]> = (0..8)
        .map(|i: usize| {
            [i & 1, (i >> 1) & 1, (i >> 2) & 1].map(|c| (2.0 * c as f64 - 1.0) * (h - rng.random_range(0.0..0.1 * h)))
        })
        .collect();
    assert!(normalized_mst(&corners, &bbox, &reference).unwrap() > 1.0);
}
