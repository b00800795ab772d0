use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rffnet::kernel_analysis::{empirical_kernel, kpca_project, KernelMatrix};
use rffnet::numerics::{gaussian_matrix, sym_eig, sym_eig_topk, DenseMatrix, Rng};
use rffnet::rff_layer::RffLayer;

fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
    let a = gaussian_matrix(n, n, 0.0, 1.0, &mut Rng::new(seed)).unwrap();
    DenseMatrix::from_fn(n, n, |i, j| a[(i, j)] + a[(j, i)])
}

#[test]
fn eigenvalues_match_nalgebra() {
    for (n, seed) in [(1, 0), (2, 1), (5, 2), (12, 3), (30, 4)] {
        let a = random_symmetric(n, seed);
        let ours = sym_eig(&a).unwrap();
        let mut theirs: Vec<f64> = SymmetricEigen::new(to_na(&a))
            .eigenvalues
            .iter()
            .copied()
            .collect();
        theirs.sort_by(|p, q| q.total_cmp(p));
        for (x, y) in ours.values.iter().zip(&theirs) {
            assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()), "n={n}: {x} vs {y}");
        }
    }
}

#[test]
fn topk_residuals_and_orthonormality() {
    let a = random_symmetric(20, 9);
    let (values, vectors) = sym_eig_topk(&a, 6).unwrap();
    let av = a.matmul(&vectors).unwrap();
    for c in 0..6 {
        let v = vectors.column(c);
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-10);
        let res: f64 = (0..20)
            .map(|i| (av[(i, c)] - values[c] * v[i]).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(res < 1e-8 * values[0].abs().max(1.0), "pair {c}: {res}");
        for d in 0..c {
            let w = vectors.column(d);
            let ip: f64 = v.iter().zip(&w).map(|(p, q)| p * q).sum();
            assert!(ip.abs() < 1e-9);
        }
    }
    assert!(values.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn matmul_matches_nalgebra() {
    let mut rng = Rng::new(5);
    let a = gaussian_matrix(7, 11, 0.0, 1.0, &mut rng).unwrap();
    let b = gaussian_matrix(11, 4, 0.0, 1.0, &mut rng).unwrap();
    let c = gaussian_matrix(9, 11, 0.0, 1.0, &mut rng).unwrap();
    let check = |ours: DenseMatrix, theirs: DMatrix<f64>| {
        assert_eq!((ours.rows(), ours.cols()), theirs.shape());
        for i in 0..ours.rows() {
            for j in 0..ours.cols() {
                assert!((ours[(i, j)] - theirs[(i, j)]).abs() < 1e-12);
            }
        }
    };
    check(a.matmul(&b).unwrap(), to_na(&a) * to_na(&b));
    check(
        a.matmul_transpose(&c).unwrap(),
        to_na(&a) * to_na(&c).transpose(),
    );
    check(
        a.transpose_matmul(&a).unwrap(),
        to_na(&a).transpose() * to_na(&a),
    );
}

fn rff_kernel(n: usize, seed: u64) -> KernelMatrix {
    let mut rng = Rng::new(seed);
    let x = gaussian_matrix(n, 3, 0.0, 1.0, &mut rng).unwrap();
    let layer = RffLayer::init(3, 50, 1.0, &mut rng).unwrap();
    empirical_kernel(&layer.trig_features(&x).unwrap().0, 0).unwrap()
}

/// Brute-force kPCA: explicit centering matrix and nalgebra's eigensolver.
fn kpca_oracle(k: &DenseMatrix, dims: usize) -> DMatrix<f64> {
    let n = k.rows();
    let h = DMatrix::<f64>::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let kc = &h * to_na(k) * &h;
    let eig = SymmetricEigen::new(kc);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    DMatrix::from_fn(n, dims, |i, c| {
        let j = order[c];
        eig.eigenvectors[(i, j)] * eig.eigenvalues[j].max(0.0).sqrt()
    })
}

#[test]
fn kpca_matches_brute_force_up_to_sign() {
    for seed in 0..5 {
        let k = rff_kernel(5, 40 + seed);
        let ours = kpca_project(&k, 3).unwrap();
        let oracle = kpca_oracle(&k.values, 3);
        for c in 0..3 {
            let same: f64 = (0..5)
                .map(|i| (ours.coords[(i, c)] - oracle[(i, c)]).abs())
                .fold(0.0, f64::max);
            let flip: f64 = (0..5)
                .map(|i| (ours.coords[(i, c)] + oracle[(i, c)]).abs())
                .fold(0.0, f64::max);
            assert!(
                same.min(flip) < 1e-8,
                "seed {seed} component {c}: {same} / {flip}"
            );
        }
    }
}

#[test]
fn kernel_invariants_hold_for_raw_features() {
    for seed in 0..10 {
        let c = rff_kernel(25, seed).check().unwrap();
        assert!(c.passes(), "{c:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kpca_is_permutation_equivariant(seed in 0u64..1000, rot in 1usize..7) {
        let k = rff_kernel(8, seed);
        let perm: Vec<usize> = (0..8).map(|i| (i + rot) % 8).collect();
        let permuted = KernelMatrix {
            values: DenseMatrix::from_fn(8, 8, |i, j| k.values[(perm[i], perm[j])]),
            layer_index: 0,
        };
        let a = kpca_project(&k, 2).unwrap();
        let b = kpca_project(&permuted, 2).unwrap();
        // Skip nearly degenerate spectra where the components may rotate.
        let gap = (a.eigenvalues[0] - a.eigenvalues[1]).abs().min(a.eigenvalues[1].abs());
        prop_assume!(gap > 1e-6);
        for c in 0..2 {
            let same = (0..8).map(|i| (b.coords[(i, c)] - a.coords[(perm[i], c)]).abs()).fold(0.0, f64::max);
            let flip = (0..8).map(|i| (b.coords[(i, c)] + a.coords[(perm[i], c)]).abs()).fold(0.0, f64::max);
            prop_assert!(same.min(flip) < 1e-7, "component {}: {} / {}", c, same, flip);
        }
    }
}
