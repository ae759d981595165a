//! Small dense linear-algebra helpers shared by the pointwise solvers.

use nalgebra::{DMatrix, DVector};

/// Outcome of a pivoted pointwise solve.
#[derive(Clone, Debug)]
pub struct Solved {
    pub x: Vec<f64>,
    /// Ratio of extreme singular values of the system matrix.
    pub condition: f64,
}

/// Solves `a x = b` by LU with partial pivoting, reporting the 2-norm
/// condition number. Returns `None` when the matrix is numerically singular.
pub fn solve_pivoted(a: &DMatrix<f64>, b: &[f64]) -> Option<Solved> {
    let condition = condition_number(a);
    if !condition.is_finite() || condition > 1e14 {
        return None;
    }
    let rhs = DVector::from_column_slice(b);
    let x = a.clone().lu().solve(&rhs)?;
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(Solved {
        x: x.as_slice().to_vec(),
        condition,
    })
}

pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Unit vector spanning the (assumed one-dimensional) kernel of `a`, taken as
/// the right singular vector of the smallest singular value.
pub fn kernel_vector(a: &DMatrix<f64>) -> Vec<f64> {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
    v_t.row(idx).iter().cloned().collect()
}

/// Leading principal minors test for positive definiteness.
pub fn is_positive_definite(m: &DMatrix<f64>, tol: f64) -> bool {
    let n = m.nrows();
    (1..=n).all(|k| m.view((0, 0), (k, k)).determinant() > tol)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| alpha * a + b).collect()
}

pub fn scale(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

pub fn basis_vector(dim: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[i] = 1.0;
    e
}

/// Orthonormal basis of the orthogonal complement of the unit vector `q`,
/// produced by Gram-Schmidt against the coordinate basis.
pub fn orthonormal_complement(q: &[f64]) -> Vec<Vec<f64>> {
    let n = q.len();
    let mut basis: Vec<Vec<f64>> = vec![q.to_vec()];
    let mut order: Vec<usize> = (0..n).collect();
    // Start with the coordinate directions least aligned with q.
    order.sort_by(|&a, &b| q[a].abs().partial_cmp(&q[b].abs()).unwrap());
    for i in order {
        if basis.len() == n {
            break;
        }
        let mut v = basis_vector(n, i);
        for b in &basis {
            let c = dot(&v, b);
            v = axpy(-c, b, &v);
        }
        let len = norm(&v);
        if len > 1e-8 {
            basis.push(scale(1.0 / len, &v));
        }
    }
    basis.remove(0);
    basis
}

/// Pfaffian of an antisymmetric matrix by expansion along the first row.
pub fn pfaffian(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 1.0;
    }
    if n % 2 == 1 {
        return 0.0;
    }
    let idx: Vec<usize> = (0..n).collect();
    pfaffian_rec(m, &idx)
}

fn pfaffian_rec(m: &DMatrix<f64>, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 1.0;
    }
    let first = idx[0];
    let mut total = 0.0;
    for j in 1..idx.len() {
        let a = m[(first, idx[j])];
        if a == 0.0 {
            continue;
        }
        let rest: Vec<usize> = idx
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != 0 && *k != j)
            .map(|(_, v)| *v)
            .collect();
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * a * pfaffian_rec(m, &rest);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pfaffian_of_standard_blocks() {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = -1.0;
        m[(2, 3)] = 1.0;
        m[(3, 2)] = -1.0;
        assert!((pfaffian(&m) - 1.0).abs() < 1e-15);
        // Pf^2 = det on a random antisymmetric matrix.
        let vals = [0.3, -1.2, 0.7, 2.0, 0.1, -0.4];
        let mut a = DMatrix::zeros(4, 4);
        let mut k = 0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                a[(i, j)] = vals[k];
                a[(j, i)] = -vals[k];
                k += 1;
            }
        }
        let pf = pfaffian(&a);
        assert!((pf * pf - a.determinant()).abs() < 1e-12);
    }

    #[test]
    fn complement_is_orthonormal() {
        let q = [0.6, 0.0, 0.8];
        let basis = orthonormal_complement(&q);
        assert_eq!(basis.len(), 2);
        for (i, b) in basis.iter().enumerate() {
            assert!(dot(b, &q).abs() < 1e-14);
            assert!((norm(b) - 1.0).abs() < 1e-14);
            for c in &basis[i + 1..] {
                assert!(dot(b, c).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_system_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(solve_pivoted(&a, &[1.0, 1.0]).is_none());
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let s = solve_pivoted(&b, &[1.0, 2.0]).unwrap();
        assert!((s.x[0] + 2.0).abs() < 1e-14 && (s.x[1] - 1.0).abs() < 1e-14);
        assert!((s.condition - 1.0).abs() < 1e-12);
    }
}
