use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ttda_core::ttda::{branch_storage, closed_form_storage, normalized_storage, optimal_branch_count, storage_g};
use ttda_core::{select_branch_points, BranchSpec};

fn prod(s: &[usize]) -> f64 {
    s.iter().map(|&i| i as f64).product()
}

/// All strictly increasing boundary lists of length `k` inside `1..n`.
fn all_boundaries(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for d in start..n {
            cur.push(d);
            rec(d + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, n, k, &mut Vec::new(), &mut out);
    out
}

fn log_cost(shape: &[usize], bounds: &[usize], f: usize) -> f64 {
    let target = prod(shape).ln() / f as f64;
    let mut edges = vec![0];
    edges.extend(bounds);
    edges.push(shape.len());
    edges.windows(2).map(|w| (prod(&shape[w[0]..w[1]]).ln() - target).abs()).sum()
}

#[test]
fn branch_points_match_exhaustive_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    for _ in 0..40 {
        let n = rng.random_range(2..=6);
        let shape: Vec<usize> = (0..n).map(|_| rng.random_range(1..=40)).collect();
        // two branches: absolute product gap
        let gaps: Vec<f64> = (1..n).map(|d| (prod(&shape[..d]) - prod(&shape[d..])).abs()).collect();
        let best = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
        let d = 1 + gaps.iter().position(|&g| g <= best * (1.0 + 1e-12)).unwrap();
        assert_eq!(select_branch_points(&shape, 2).unwrap().boundaries(), &[d], "{shape:?}");
        for f in 3..=n {
            let all = all_boundaries(n, f - 1);
            let costs: Vec<f64> = all.iter().map(|b| log_cost(&shape, b, f)).collect();
            let best = costs.iter().cloned().fold(f64::INFINITY, f64::min);
            let pick = &all[costs.iter().position(|&c| c <= best + 1e-12).unwrap()];
            assert_eq!(select_branch_points(&shape, f).unwrap().boundaries(), pick.as_slice(), "{shape:?} f={f}");
        }
    }
}

proptest! {
    #[test]
    fn two_branch_split_is_reversal_covariant(shape in prop::collection::vec(1usize..=30, 2..=6)) {
        let n = shape.len();
        let gaps: Vec<f64> = (1..n).map(|d| (prod(&shape[..d]) - prod(&shape[d..])).abs()).collect();
        let best = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
        let ties = gaps.iter().filter(|&&g| g <= best * (1.0 + 1e-12) + 1e-12).count();
        prop_assume!(ties == 1);
        let d = select_branch_points(&shape, 2).unwrap().boundaries()[0];
        let rev: Vec<usize> = shape.iter().rev().copied().collect();
        let dr = select_branch_points(&rev, 2).unwrap().boundaries()[0];
        prop_assert_eq!(dr, n - d);
    }
}

#[test]
fn exact_counts_equal_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(601);
    for _ in 0..10 {
        let n = rng.random_range(3..=6);
        let i = rng.random_range(2..=9);
        let r = rng.random_range(1..=5);
        let c = rng.random_range(1..=6);
        let k = rng.random_range(1..=10);
        let shape = vec![i; n];
        for f in [1, 2, 3, n] {
            let spec = select_branch_points(&shape, f).unwrap();
            let ranks: Vec<Vec<usize>> = spec.ranges().iter().map(|rg| vec![r; rg.len()]).collect();
            let exact = branch_storage(&shape, &spec, &ranks, c * k).unwrap();
            assert_eq!(exact, closed_form_storage(n, f, i, r, c, k), "n={n} f={f} i={i} r={r}");
        }
    }
}

#[test]
fn uncompressed_tt_costs_at_least_the_data() {
    for (n, i) in [(3usize, 4usize), (2, 5), (4, 2)] {
        let shape = vec![i; n];
        let spec = BranchSpec::single(n).unwrap();
        // full ranks R_n = I^n, so every sample keeps a length-D feature vector
        let ranks = vec![(1..=n).map(|m| i.pow(m as u32)).collect::<Vec<_>>()];
        let stored = branch_storage(&shape, &spec, &ranks, 6).unwrap();
        assert!(normalized_storage(stored, 6, &shape) >= 1.0);
    }
}

#[test]
fn optimal_branch_count_tracks_exhaustive_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(602);
    for _ in 0..20 {
        let n = rng.random_range(3..=8);
        let r = rng.random_range(2..=8);
        let i = rng.random_range(4..=64);
        let c = rng.random_range(2..=20);
        let k = rng.random_range(1..=20);
        let opt = optimal_branch_count(r, i, c, k, Some(n)).unwrap();
        let best = (1..=n)
            .min_by(|&a, &b| {
                let ga = storage_g(a as f64, n, r as f64, i as f64, c as f64, k as f64);
                let gb = storage_g(b as f64, n, r as f64, i as f64, c as f64, k as f64);
                ga.partial_cmp(&gb).unwrap()
            })
            .unwrap();
        assert!(opt.rounded.abs_diff(best) <= 1, "raw {} rounded {} exhaustive {best}", opt.raw, opt.rounded);
    }
}
