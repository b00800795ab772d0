use crate::error::{Error, Result};

use super::DenseMatrix;

const SYMMETRY_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector for `values[j]`.
    pub vectors: DenseMatrix,
}

/// Full eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps over all off-diagonal pairs until the off-diagonal mass is
/// negligible relative to the matrix norm. Eigenvalues come back sorted in
/// descending order with matching eigenvector columns.
pub fn sym_eig(a: &DenseMatrix) -> Result<SymEigen> {
    check_symmetric(a)?;
    let n = a.rows();
    let mut m = a.clone();
    // Symmetrize exactly so rotations act on a truly symmetric matrix.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    let mut v = DenseMatrix::identity(n);
    let norm = m.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * norm || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-18 * norm {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s, t, apq);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

#[allow(clippy::too_many_arguments)]
fn rotate(
    m: &mut DenseMatrix,
    v: &mut DenseMatrix,
    p: usize,
    q: usize,
    c: f64,
    s: f64,
    t: f64,
    apq: f64,
) {
    let n = m.rows();
    m[(p, p)] -= t * apq;
    m[(q, q)] += t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = m[(r, p)];
        let arq = m[(r, q)];
        let new_rp = c * arp - s * arq;
        let new_rq = s * arp + c * arq;
        m[(r, p)] = new_rp;
        m[(p, r)] = new_rp;
        m[(r, q)] = new_rq;
        m[(q, r)] = new_rq;
    }
    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = c * vrp - s * vrq;
        v[(r, q)] = s * vrp + c * vrq;
    }
}

/// Top-`k` eigenpairs of a symmetric matrix.
pub fn sym_eig_topk(a: &DenseMatrix, k: usize) -> Result<(Vec<f64>, DenseMatrix)> {
    check_symmetric(a)?;
    if k == 0 || k > a.rows() {
        return Err(Error::Parameter(format!(
            "k = {k} outside 1..={}",
            a.rows()
        )));
    }
    let full = sym_eig(a)?;
    let n = a.rows();
    let vectors = DenseMatrix::from_fn(n, k, |r, c| full.vectors[(r, c)]);
    Ok((full.values[..k].to_vec(), vectors))
}

fn check_symmetric(a: &DenseMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::shape("sym_eig", a.shape(), (a.cols(), a.rows())));
    }
    let scale = a.max_abs().max(1.0);
    let asym = a.asymmetry();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::Symmetry(asym));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_matrix, Rng};

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        let g = gaussian_matrix(n, n, 0.0, 1.0, &mut Rng::new(seed)).unwrap();
        g.add(&g.transpose()).unwrap().scale(0.5)
    }

    #[test]
    fn diagonal_top_two() {
        let mut a = DenseMatrix::zeros(3, 3);
        a[(0, 0)] = 3.0;
        a[(1, 1)] = 1.0;
        a[(2, 2)] = 2.0;
        let (vals, vecs) = sym_eig_topk(&a, 2).unwrap();
        assert_eq!(vals, vec![3.0, 2.0]);
        assert_eq!(vecs.column(0), vec![1.0, 0.0, 0.0]);
        assert_eq!(vecs.column(1), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn identity_eigenvalue_one() {
        let (vals, vecs) = sym_eig_topk(&DenseMatrix::identity(5), 1).unwrap();
        assert_eq!(vals, vec![1.0]);
        let norm: f64 = vecs.column(0).iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_asymmetric() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eig_topk(&a, 1), Err(Error::Symmetry(_))));
    }

    #[test]
    fn rejects_k_out_of_range() {
        let a = DenseMatrix::identity(3);
        assert!(matches!(sym_eig_topk(&a, 0), Err(Error::Parameter(_))));
        assert!(matches!(sym_eig_topk(&a, 4), Err(Error::Parameter(_))));
    }

    #[test]
    fn residuals_are_tiny() {
        for seed in 0..20 {
            let n = 2 + (seed as usize % 12);
            let a = random_symmetric(n, seed);
            let (vals, vecs) = sym_eig_topk(&a, n).unwrap();
            for w in vals.windows(2) {
                assert!(w[0] >= w[1]);
            }
            for (j, &lam) in vals.iter().enumerate() {
                let v = vecs.column(j);
                let vm = DenseMatrix::from_vec(n, 1, v.clone()).unwrap();
                let av = a.matmul(&vm).unwrap();
                let res: f64 = av
                    .as_slice()
                    .iter()
                    .zip(&v)
                    .map(|(x, y)| (x - lam * y).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let vnorm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((vnorm - 1.0).abs() < 1e-12);
                assert!(res / vnorm < 1e-8, "seed {seed} residual {res}");
            }
        }
    }
}
