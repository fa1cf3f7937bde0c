mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ttda_core::discriminant::{sorted_eigen, trace_objective};
use ttda_core::ttda::{an_matrix, assemble_an};
use ttda_core::{
    cmda, dgtda, lda_solve, multibranch_fit, scatter_matrices, ttda_fit, BranchSpec, CmdaConfig, DenseTensor,
    LabeledTensorSet, MultiBranchConfig, TtdaConfig,
};

#[test]
fn an_matches_loop_contraction_for_two_factors() {
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let dims = [2, 3];
    let chain = random_chain(&mut rng, &dims, &[2, 2]);
    let s = random_symmetric(&mut rng, 6);
    let a = assemble_an(&chain, &s, 0).unwrap();
    assert_eq!(a.shape(), &[1, 2, 2, 1, 2, 2]);
    let u2 = chain.factor(1).core();
    for i in 0..2 {
        for b in 0..2 {
            for ip in 0..2 {
                for bp in 0..2 {
                    let mut acc = 0.0;
                    for r in 0..2 {
                        for j in 0..3 {
                            for jp in 0..3 {
                                let row = offset(&dims, &[i, j]);
                                let col = offset(&dims, &[ip, jp]);
                                acc += s[(row, col)] * at(u2, &[b, j, r]) * at(u2, &[bp, jp, r]);
                            }
                        }
                    }
                    assert!((at(&a, &[0, i, b, 0, ip, bp]) - acc).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn an_objective_identity_and_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    let cases: [(&[usize], &[usize]); 4] =
        [(&[3, 4, 2], &[2, 3, 2]), (&[2, 2, 2, 2], &[2, 3, 2, 2]), (&[4, 3], &[3, 1]), (&[5], &[2])];
    for (dims, ranks) in cases {
        let chain = random_chain(&mut rng, dims, ranks);
        let d: usize = dims.iter().product();
        let s = random_symmetric(&mut rng, d);
        let u = chain_subspace_oracle(&chain);
        let want = trace_objective(&s, &u);
        let order = dims.len();
        for n in 0..order {
            let a = assemble_an(&chain, &s, n).unwrap();
            let f = chain.factor(n);
            let expected_shape = if n + 1 < order {
                vec![f.left_rank(), f.dim(), f.right_rank(), f.left_rank(), f.dim(), f.right_rank()]
            } else {
                vec![f.left_rank(), f.dim(), f.left_rank(), f.dim()]
            };
            assert_eq!(a.shape(), expected_shape.as_slice());
            let raw = a.unfold(a.order() / 2);
            assert!((&raw - raw.transpose()).amax() <= 1e-10 * raw.amax());
            let m = an_matrix(&chain, &s, n).unwrap();
            let got = if n + 1 < order {
                let v = DVector::from_column_slice(f.core().data());
                v.dot(&(&m * &v))
            } else {
                trace_objective(&m, &f.left_unfolding())
            };
            assert!((got - want).abs() <= 1e-8 * (1.0 + want.abs()), "n={n}: {got} vs {want}");
        }
    }
}

#[test]
fn single_mode_ttda_equals_lda() {
    let mut rng = ChaCha8Rng::seed_from_u64(402);
    for _ in 0..10 {
        let d = rng.random_range(4..=32);
        let r = rng.random_range(1..=3);
        let data = random_labeled(&mut rng, &[d], 3, 6, 2.0);
        let lambda = rng.random_range(0.1..10.0);
        let lda = lda_solve(&scatter_matrices(&data, lambda).unwrap(), r).unwrap();
        let model = ttda_fit(&data, &TtdaConfig::new(vec![r], lambda)).unwrap();
        let obj = model.objective().unwrap();
        assert!((obj - lda.objective).abs() <= 1e-6, "{obj} vs {}", lda.objective);
    }
}

#[test]
fn objective_trace_is_monotone_and_bounded() {
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let data = random_labeled(&mut rng, &[4, 4, 4], 3, 8, 1.5);
        let model = ttda_fit(&data, &TtdaConfig::new(vec![2, 3, 2], 1.0)).unwrap();
        let objs: Vec<f64> = model.log.iter().map(|r| r.objective).collect();
        for w in objs.windows(2) {
            assert!(w[1] <= w[0] + 1e-8, "seed {seed}: {} after {}", w[1], w[0]);
        }
        assert!(*objs.last().unwrap() >= model.lower_bound - 1e-8);
        assert!(model.chain.max_orthogonality_error() <= 1e-10);
        let u = model.chain.subspace().unwrap();
        let s = scatter_matrices(&data, 1.0).unwrap().s;
        assert!((trace_objective(&s, &u) - objs.last().unwrap()).abs() <= 1e-8 * (1.0 + objs.last().unwrap().abs()));
    }
}

#[test]
fn lemma_bound_is_attained_when_means_avoid_within_scatter() {
    let mut rng = ChaCha8Rng::seed_from_u64(403);
    let q = random_orthonormal(&mut rng, 12, 12);
    let mean_dirs = q.columns(0, 2).into_owned();
    let noise_dirs = q.columns(2, 10).into_owned();
    let centers = [[3.0, 0.0], [-1.0, 2.0], [0.5, -2.5]];
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for (c, m) in centers.iter().enumerate() {
        // class-centered noise keeps the sample means exactly on the mean directions
        let zs: Vec<DVector<f64>> = (0..5).map(|_| DVector::from_fn(10, |_, _| gauss(&mut rng))).collect();
        let zbar = zs.iter().fold(DVector::zeros(10), |a, z| a + z) / 5.0;
        for z in &zs {
            let v = &mean_dirs * DVector::from_column_slice(m) + &noise_dirs * (z - &zbar);
            samples.push(DenseTensor::from_vector(&v, &[3, 4]).unwrap());
            labels.push(c);
        }
    }
    let data = LabeledTensorSet::new(samples, labels).unwrap();
    for lambda in [0.5, 2.0] {
        let model = ttda_fit(&data, &TtdaConfig::new(vec![3, 2], lambda)).unwrap();
        let obj = model.objective().unwrap();
        assert!((obj - model.lower_bound).abs() <= 1e-6, "{obj} vs {}", model.lower_bound);
        let sp = scatter_matrices(&data, lambda).unwrap();
        let (vals, _) = sorted_eigen(&sp.s_b);
        let top: f64 = vals.iter().rev().take(2).sum();
        assert!((model.lower_bound + lambda * top).abs() <= 1e-9);
    }
}

#[test]
fn single_branch_reproduces_ttda() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let data = random_labeled(&mut rng, &[3, 4, 3], 3, 6, 1.0);
    let ranks = vec![2, 3, 2];
    let t = ttda_fit(&data, &TtdaConfig::new(ranks.clone(), 0.7)).unwrap();
    let cfg = MultiBranchConfig::new(BranchSpec::single(3).unwrap(), vec![ranks], 0.7);
    let b = multibranch_fit(&data, &cfg).unwrap();
    let tl: Vec<f64> = t.log.iter().map(|r| r.objective).collect();
    let bl: Vec<f64> = b.log.iter().map(|r| r.record.objective).collect();
    assert_eq!(tl.len(), bl.len());
    for (x, y) in tl.iter().zip(&bl) {
        assert!((x - y).abs() <= 1e-8);
    }
    for (x, core) in t.features.iter().zip(&b.cores) {
        assert_eq!(core.shape(), &[2]);
        assert!((x - core.vectorize()).amax() <= 1e-8);
    }
}

#[test]
fn two_branch_core_is_matrix_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(405);
    let data = random_labeled(&mut rng, &[3, 2, 4, 2], 3, 5, 1.0);
    let spec = BranchSpec::new(4, vec![2]).unwrap();
    let cfg = MultiBranchConfig::new(spec, vec![vec![3, 2], vec![2, 3]], 1.0);
    let model = multibranch_fit(&data, &cfg).unwrap();
    let u1 = chain_subspace_oracle(&model.chains[0]);
    let u2 = chain_subspace_oracle(&model.chains[1]);
    for (y, core) in data.samples().iter().zip(&model.cores) {
        assert_eq!(core.shape(), &[2, 3]);
        let td = DMatrix::from_column_slice(6, 8, y.data());
        let direct = u1.transpose() * td * &u2;
        assert!((core.unfold(1) - direct).amax() <= 1e-10);
        assert!((model.core(y).unwrap().unfold(1) - core.unfold(1)).amax() <= 1e-12);
    }
    for c in &model.chains {
        assert!(c.max_orthogonality_error() <= 1e-10);
    }
    assert_eq!(model.log.iter().map(|u| u.pass).max(), Some(2));
}

#[test]
fn one_mode_branches_give_tucker_cores() {
    let mut rng = ChaCha8Rng::seed_from_u64(406);
    let data = random_labeled(&mut rng, &[3, 4, 3], 2, 5, 1.0);
    let spec = BranchSpec::new(3, vec![1, 2]).unwrap();
    let cfg = MultiBranchConfig::new(spec, vec![vec![2], vec![3], vec![2]], 1.0);
    let model = multibranch_fit(&data, &cfg).unwrap();
    let tucker = ttda_core::TuckerModel { subspaces: model.subspaces.clone() };
    for (y, core) in data.samples().iter().zip(&model.cores) {
        assert_eq!(core.shape(), &[2, 3, 2]);
        assert!(tucker.core(y).unwrap().max_abs_diff(core).unwrap() <= 1e-12);
    }
}

#[test]
fn three_branch_core_shape() {
    let mut rng = ChaCha8Rng::seed_from_u64(407);
    let data = random_labeled(&mut rng, &[2, 3, 2, 3], 3, 4, 1.0);
    let spec = BranchSpec::new(4, vec![1, 2]).unwrap();
    let cfg = MultiBranchConfig::new(spec, vec![vec![2], vec![3], vec![2, 2]], 1.0);
    let model = multibranch_fit(&data, &cfg).unwrap();
    assert_eq!(model.cores[0].shape(), &[2, 3, 2]);
    assert_eq!(model.storage_elements(), 4 + 9 + (4 + 12) + 12 * 12);
}

#[test]
fn cmda_sweeps_do_not_increase_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(408);
    let data = random_labeled(&mut rng, &[4, 3, 4], 3, 6, 1.0);
    let res = cmda(&data, &CmdaConfig::new(vec![2, 2, 2], 1.0)).unwrap();
    assert!(res.iterations <= 20);
    for w in res.sweep_objectives.windows(2) {
        assert!(w[1] <= w[0] + 1e-8);
    }
    for u in &res.model.subspaces {
        assert!((u.transpose() * u - DMatrix::identity(u.ncols(), u.ncols())).amax() <= 1e-10);
    }
}

#[test]
fn dgtda_outputs_orthonormal_mode_bases() {
    let mut rng = ChaCha8Rng::seed_from_u64(409);
    let data = random_labeled(&mut rng, &[4, 3, 4], 3, 6, 1.0);
    let res = dgtda(&data, &[2, 3, 1]).unwrap();
    assert_eq!(res.model.ranks(), vec![2, 3, 1]);
    assert!(res.lambdas.iter().all(|&l| l > 0.0));
    for u in &res.model.subspaces {
        assert!((u.transpose() * u - DMatrix::identity(u.ncols(), u.ncols())).amax() <= 1e-10);
    }
    assert!(dgtda(&data, &[5, 1, 1]).is_err());
}

#[test]
fn ttda_rejects_bad_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(410);
    let data = random_labeled(&mut rng, &[3, 3], 2, 3, 1.0);
    assert!(ttda_fit(&data, &TtdaConfig::new(vec![4, 2], 1.0)).is_err());
    assert!(ttda_fit(&data, &TtdaConfig::new(vec![2], 1.0)).is_err());
    let mut cfg = TtdaConfig::new(vec![2, 2], 1.0);
    cfg.dense_ceiling = 8;
    assert!(matches!(ttda_fit(&data, &cfg), Err(ttda_core::Error::TooLarge { .. })));
    assert!(ttda_fit(&data, &TtdaConfig::new(vec![2, 2], -1.0)).is_err());
}

#[test]
fn zero_scatter_keeps_initial_factors() {
    let t = DenseTensor::from_fn(&[2, 2], |i| (i[0] + 2 * i[1]) as f64);
    let data = LabeledTensorSet::new(vec![t.clone(), t.clone(), t.clone(), t], vec![0, 0, 1, 1]).unwrap();
    let model = ttda_fit(&data, &TtdaConfig::new(vec![2, 1], 1.0)).unwrap();
    assert!(model.log.is_empty());
    assert!(model.chain.max_orthogonality_error() <= 1e-12);
}
