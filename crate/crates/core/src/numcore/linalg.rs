use crate::error::{Error, Result};
use crate::numcore::matrix::{dot, DenseMatrix};

/// Relative pivot threshold for Cholesky.
pub const PIVOT_REL_TOL: f64 = 1e-12;
/// Singular values below `s₁ · PINV_CUTOFF` are treated as zero.
pub const PINV_CUTOFF: f64 = 1e-10;

/// Lower Cholesky factor `A = L Lᵀ`, reusable for many right-hand sides.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch { expected: a.rows(), found: a.cols() });
        }
        let n = a.rows();
        let scale = a.max_abs();
        if !a.is_symmetric(1e-10 * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::NotSymmetric);
        }
        let max_diag = a.diagonal().into_iter().fold(0.0f64, f64::max);
        let tol = PIVOT_REL_TOL * max_diag;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let s = a.get(j, j) - dot(&l[j * n..j * n + j], &l[j * n..j * n + j]);
            if !(s > tol) {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let d = s.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let s = a.get(i, j) - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> DenseMatrix {
        DenseMatrix::from_parts(self.n, self.n, self.l.clone())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.len() });
        }
        let mut y = b.to_vec();
        for i in 0..n {
            let s = y[i] - dot(&self.l[i * n..i * n + i], &y[..i]);
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        Ok(y)
    }

    /// `A⁻¹` as a dense matrix.
    pub fn inverse(&self) -> DenseMatrix {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.solve(&e).expect("dimension checked");
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
        // symmetrize away round-off
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (data[i * n + j] + data[j * n + i]);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        DenseMatrix::from_parts(n, n, data)
    }
}

/// Solves `A x = b` for symmetric positive-definite `A`.
pub fn solve_spd(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Cholesky::new(a)?.solve(b)
}

/// Thin SVD `A = U diag(s) Vᵀ` with `s` sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub vt: DenseMatrix,
}

impl Svd {
    pub fn reconstruct(&self, rank: usize) -> DenseMatrix {
        let k = rank.min(self.s.len());
        let (m, n) = (self.u.rows(), self.vt.cols());
        let mut data = vec![0.0; m * n];
        for r in 0..k {
            let s = self.s[r];
            for i in 0..m {
                let us = self.u.get(i, r) * s;
                if us == 0.0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += us * self.vt.get(r, j);
                }
            }
        }
        DenseMatrix::from_parts(m, n, data)
    }
}

/// One-sided Jacobi SVD. Accurate to working precision in every singular value.
pub fn svd(a: &DenseMatrix) -> Svd {
    if a.rows() < a.cols() {
        let t = svd(&a.transpose());
        return Svd { u: t.vt.transpose(), s: t.s, vt: t.u.transpose() };
    }
    let (m, n) = a.shape();
    // column-major working copies
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n).map(|j| unit(n, j)).collect();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for &j in &order {
        if norms[j] > 0.0 {
            u_cols.push(cols[j].iter().map(|x| x / norms[j]).collect());
        } else {
            u_cols.push(vec![0.0; m]);
        }
    }
    complete_orthonormal(&mut u_cols, &order.iter().map(|&j| norms[j] > 0.0).collect::<Vec<_>>());
    let u = DenseMatrix::from_parts(m, n, (0..m).flat_map(|i| u_cols.iter().map(move |c| c[i])).collect());
    let vt = DenseMatrix::from_parts(n, n, order.iter().flat_map(|&j| v[j].clone()).collect());
    Svd { u, s: order.iter().map(|&j| norms[j]).collect(), vt }
}

fn unit(n: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j] = 1.0;
    e
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Replaces the columns flagged `false` by unit vectors orthogonal to the rest.
fn complete_orthonormal(cols: &mut [Vec<f64>], keep: &[bool]) {
    let m = cols.first().map_or(0, Vec::len);
    let mut next = 0;
    for j in 0..cols.len() {
        if keep[j] {
            continue;
        }
        while next < m {
            let mut e = unit(m, next);
            next += 1;
            for _ in 0..2 {
                for (k, c) in cols.iter().enumerate() {
                    if k != j && (keep[k] || k < j) {
                        let d = dot(&e, c);
                        e.iter_mut().zip(c).for_each(|(x, y)| *x -= d * y);
                    }
                }
            }
            let nrm = dot(&e, &e).sqrt();
            if nrm > 1e-8 {
                cols[j] = e.into_iter().map(|x| x / nrm).collect();
                break;
            }
        }
    }
}

/// Symmetric eigendecomposition with eigenvalues sorted descending.
/// Column `r` of the returned matrix is the eigenvector for `values[r]`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

/// Cyclic Jacobi eigen-solver for symmetric matrices.
pub fn sym_eigen(a: &DenseMatrix) -> Result<SymEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows(), found: a.cols() });
    }
    if !a.is_symmetric(1e-10 * a.max_abs().max(f64::MIN_POSITIVE)) {
        return Err(Error::NotSymmetric);
    }
    let n = a.rows();
    let mut w: Vec<f64> = a.as_slice().to_vec();
    let mut v: Vec<f64> = DenseMatrix::identity(n).into_vec();
    let total: f64 = w.iter().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| w[i * n + j] * w[i * n + j]).sum();
        if off <= 1e-32 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (w[q * n + q] - w[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (w[k * n + p], w[k * n + q]);
                    w[k * n + p] = c * akp - s * akq;
                    w[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (w[p * n + k], w[q * n + k]);
                    w[p * n + k] = c * apk - s * aqk;
                    w[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| w[i * n + i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, r| v[i * n + order[r]])?;
    Ok(SymEigen { values, vectors })
}

/// Moore–Penrose pseudo-inverse with cutoff `s₁ · PINV_CUTOFF`.
pub fn pinv(a: &DenseMatrix) -> DenseMatrix {
    let dec = svd(a);
    let cutoff = dec.s.first().copied().unwrap_or(0.0) * PINV_CUTOFF;
    let (m, n) = a.shape();
    let mut data = vec![0.0; n * m];
    for (r, &s) in dec.s.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        for i in 0..n {
            let v = dec.vt.get(r, i) / s;
            for j in 0..m {
                data[i * m + j] += v * dec.u.get(j, r);
            }
        }
    }
    DenseMatrix::from_parts(n, m, data)
}

/// Symmetric PSD solve: Cholesky first, pseudo-inverse on failure.
/// The flag reports whether the fallback was used.
pub fn solve_psd_or_pinv(a: &DenseMatrix, b: &[f64]) -> Result<(Vec<f64>, bool)> {
    match solve_spd(a, b) {
        Ok(x) => Ok((x, false)),
        Err(Error::NotPositiveDefinite { .. }) => Ok((pinv(a).matvec(b)?, true)),
        Err(e) => Err(e),
    }
}

/// Largest singular value.
pub fn spectral_norm(a: &DenseMatrix) -> f64 {
    svd(a).s.first().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identity_solve() {
        let x = solve_spd(&DenseMatrix::identity(2), &[4.0, 5.0]).unwrap();
        assert_eq!(x, vec![4.0, 5.0]);
    }

    #[test]
    fn hand_eliminated_two_by_two() {
        // [[2,1],[1,2]] x = (4,5): x2 = (5 - 4/2)/(2 - 1/2) = 2, x1 = (4 - 2)/2 = 1
        let x = solve_spd(&m(&[&[2.0, 1.0], &[1.0, 2.0]]), &[4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_is_rejected() {
        let r = solve_spd(&m(&[&[1.0, 1.0], &[1.0, 1.0]]), &[1.0, 3.0]);
        assert!(matches!(r, Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn asymmetric_is_rejected() {
        assert_eq!(solve_spd(&m(&[&[2.0, 1.0], &[0.0, 2.0]]), &[1.0, 1.0]), Err(Error::NotSymmetric));
    }

    #[test]
    fn svd_small_cases() {
        let s = svd(&DenseMatrix::diag(&[1.0, 3.0])).s;
        assert!((s[0] - 3.0).abs() < 1e-14 && (s[1] - 1.0).abs() < 1e-14);
        assert_eq!(svd(&DenseMatrix::zeros(2, 2)).s, vec![0.0, 0.0]);
        // u = (2,0), v = (0,3,0): s1 = |u||v| = 6
        let uv = m(&[&[0.0, 6.0, 0.0], &[0.0, 0.0, 0.0]]);
        let s = svd(&uv).s;
        assert!((s[0] - 6.0).abs() < 1e-13 && s[1].abs() < 1e-13);
    }

    #[test]
    fn pinv_of_rank_one() {
        let a = m(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let p = pinv(&a);
        // pinv of J = J/4
        assert!(p.max_abs_diff(&a.scale(0.25)) < 1e-14);
        let (x, fallback) = solve_psd_or_pinv(&a, &[2.0, 2.0]).unwrap();
        assert!(fallback);
        assert!((x[0] - 1.0).abs() < 1e-13 && (x[1] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn eigen_sorted() {
        let e = sym_eigen(&m(&[&[1.0, 0.0], &[0.0, 5.0]])).unwrap();
        assert_eq!(e.values, vec![5.0, 1.0]);
        assert!((e.vectors.get(1, 0).abs() - 1.0).abs() < 1e-15);
    }

    fn random_matrix(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
        prop::collection::vec(-1.0f64..1.0, rows * cols)
            .prop_map(move |v| DenseMatrix::new(rows, cols, v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn spd_round_trip(d in 1usize..=20, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let b = DenseMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0)).unwrap();
            let a = b.gram().add_diagonal(0.1);
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let ax = a.matvec(&x).unwrap();
            let got = solve_spd(&a, &ax).unwrap();
            let err: f64 = got.iter().zip(&x).map(|(g, t)| (g - t).powi(2)).sum::<f64>().sqrt();
            let nx: f64 = x.iter().map(|t| t * t).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-7 * nx.max(1e-300));
            // residual bound from the solver contract
            let res: f64 = a.matvec(&got).unwrap().iter().zip(&ax).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            let ng: f64 = got.iter().map(|t| t * t).sum::<f64>().sqrt();
            let nb: f64 = ax.iter().map(|t| t * t).sum::<f64>().sqrt();
            prop_assert!(res <= 1e-8 * (spectral_norm(&a) * ng + nb));
        }

        #[test]
        fn svd_reconstructs(a in (1usize..7, 1usize..7).prop_flat_map(|(r, c)| random_matrix(r, c))) {
            let dec = svd(&a);
            let back = dec.reconstruct(dec.s.len());
            let scale = dec.s.first().copied().unwrap_or(0.0).max(1e-300);
            prop_assert!(back.max_abs_diff(&a) <= 1e-8 * scale);
            prop_assert!(dec.s.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(dec.s.iter().all(|s| *s >= 0.0));
        }

        #[test]
        fn svd_factors_orthonormal(a in (1usize..7, 1usize..7).prop_flat_map(|(r, c)| random_matrix(r, c))) {
            let dec = svd(&a);
            let p = dec.s.len();
            let utu = dec.u.transpose().matmul(&dec.u).unwrap();
            let vvt = dec.vt.matmul(&dec.vt.transpose()).unwrap();
            prop_assert!(utu.max_abs_diff(&DenseMatrix::identity(p)) < 1e-12);
            prop_assert!(vvt.max_abs_diff(&DenseMatrix::identity(p)) < 1e-12);
        }

        #[test]
        fn eigen_reconstructs(b in (1usize..9).prop_flat_map(|n| random_matrix(n, n))) {
            let a = b.add(&b.transpose()).unwrap();
            let e = sym_eigen(&a).unwrap();
            let n = a.rows();
            let lam = DenseMatrix::diag(&e.values);
            let back = e.vectors.matmul(&lam).unwrap().matmul(&e.vectors.transpose()).unwrap();
            prop_assert!(back.max_abs_diff(&a) < 1e-12 * a.max_abs().max(1.0));
            let vtv = e.vectors.transpose().matmul(&e.vectors).unwrap();
            prop_assert!(vtv.max_abs_diff(&DenseMatrix::identity(n)) < 1e-12);
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn eckart_young(a in (2usize..7, 2usize..7).prop_flat_map(|(r, c)| random_matrix(r, c)), k in 1usize..6) {
            let dec = svd(&a);
            let k = k.min(dec.s.len() - 1);
            let err = a.sub(&dec.reconstruct(k)).unwrap();
            let got = spectral_norm(&err);
            prop_assert!((got - dec.s[k]).abs() <= 1e-8 * dec.s[0].max(1e-300));
        }
    }
}
