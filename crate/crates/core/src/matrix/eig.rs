//! Cyclic Jacobi eigensolver for Hermitian matrices, and the SVD obtained
//! from the Hermitian dilation `[[0, C], [C^*, 0]]`.

use super::{CMat, C64, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Spectrum of a Hermitian matrix: ascending eigenvalues, orthonormal
/// eigenvectors as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct EigResult {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl EigResult {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// `V diag(values) V^*`.
    pub fn reconstruct(&self) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            for i in 0..n {
                scaled[(i, j)] *= self.values[j];
            }
        }
        scaled.matmul(&self.vectors.adjoint())
    }
}

fn off_diagonal_norm_sqr(a: &CMat) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// The input is checked against `hermitian_tol`, then symmetrized. Output is
/// deterministic: eigenvalues ascending, each eigenvector phase-normalized so
/// its largest-magnitude entry (first on ties) is real positive.
pub fn herm_eig(x: &CMat, hermitian_tol: f64) -> Result<EigResult> {
    let n = x.ensure_square()?;
    let dev = x.hermitian_deviation();
    if dev > hermitian_tol {
        return Err(Error::NonHermitian { deviation: dev });
    }
    jacobi(x.hermitian_part(), CMat::identity(n))
}

/// [`herm_eig`] started from a unitary guess `basis` for the eigenvectors.
/// Sweeps act on `basis^* X basis`, so a good guess leaves few rotations.
pub(crate) fn herm_eig_from(x: &CMat, basis: &CMat) -> Result<EigResult> {
    let n = x.ensure_square()?;
    if basis.shape() != (n, n) {
        return Err(Error::dims("eigenvector guess", n, basis.rows()));
    }
    let a = basis.adjoint().matmul(&x.hermitian_part()).matmul(basis).hermitian_part();
    jacobi(a, basis.clone())
}

fn jacobi(mut a: CMat, mut v: CMat) -> Result<EigResult> {
    let n = a.rows;
    let scale = a.frobenius_norm();
    if n > 1 && scale > 0.0 {
        let target = (f64::EPSILON * scale).powi(2) * 1e-2;
        for _ in 0..MAX_SWEEPS {
            if off_diagonal_norm_sqr(&a) <= target {
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]).then(i.cmp(&j)));

    let mut vectors = CMat::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        fix_phase(&mut col);
        vectors.set_column(k, &col);
    }
    Ok(EigResult {
        values: order.iter().map(|&i| diag[i]).collect(),
        vectors,
    })
}

fn fix_phase(col: &mut [C64]) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in col.iter().enumerate() {
        // ties broken toward the first index; the slack absorbs round-off
        if z.norm() > best_abs * (1.0 + 1e-9) {
            best_abs = z.norm();
            best = i;
        }
    }
    if best_abs > 0.0 {
        let phase = col[best].conj() / col[best].norm();
        for z in col.iter_mut() {
            *z *= phase;
        }
        col[best] = C64::new(col[best].re, 0.0);
    }
}

/// One complex Jacobi rotation annihilating `a[p][q]`.
fn rotate(a: &mut CMat, v: &mut CMat, p: usize, q: usize) {
    let n = a.rows;
    let apq = a.data[p * n + q];
    let mag2 = apq.norm_sqr();
    if mag2 == 0.0 {
        return;
    }
    let mag = mag2.sqrt();
    let app = a.data[p * n + p].re;
    let aqq = a.data[q * n + q].re;
    if mag <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a.data[p * n + q] = ZERO;
        a.data[q * n + p] = ZERO;
        return;
    }
    // phase e = apq / |apq|; after D = diag(1, conj(e)) the pivot is real
    let e = apq / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // J = [[c, s], [-s conj(e), c conj(e)]] on the (p, q) coordinates
    let j_qp = -e.conj() * s;
    let j_qq = e.conj() * c;

    // J^* A J on the off-pivot entries; rows follow from Hermitian symmetry
    let d = &mut a.data;
    for i in 0..n {
        if i == p || i == q {
            continue;
        }
        let aip = d[i * n + p];
        let aiq = d[i * n + q];
        let np = aip * c + aiq * j_qp;
        let nq = aip * s + aiq * j_qq;
        d[i * n + p] = np;
        d[i * n + q] = nq;
        d[p * n + i] = np.conj();
        d[q * n + i] = nq.conj();
    }
    d[p * n + q] = ZERO;
    d[q * n + p] = ZERO;
    d[p * n + p] = C64::new(app - t * mag, 0.0);
    d[q * n + q] = C64::new(aqq + t * mag, 0.0);
    let w = &mut v.data;
    for i in 0..n {
        let vip = w[i * n + p];
        let viq = w[i * n + q];
        w[i * n + p] = vip * c + viq * j_qp;
        w[i * n + q] = vip * s + viq * j_qq;
    }
}

/// Thin singular value decomposition `C = Σ σ_k u_k v_k^*` restricted to
/// singular values above `cutoff`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub values: Vec<f64>,
    pub left: Vec<Vec<C64>>,
    pub right: Vec<Vec<C64>>,
}

impl Svd {
    pub fn reconstruct(&self, rows: usize, cols: usize) -> CMat {
        let mut out = CMat::zeros(rows, cols);
        for ((s, u), v) in self.values.iter().zip(&self.left).zip(&self.right) {
            out.add_assign_scaled(&CMat::outer(u, v), C64::new(*s, 0.0));
        }
        out
    }
}

/// SVD through the eigendecomposition of the Hermitian dilation.
///
/// Singular values at or below `cutoff` (absolute) are dropped. Values are
/// returned in descending order.
pub fn svd(c: &CMat, cutoff: f64) -> Svd {
    let (r, k) = c.shape();
    let mut dil = CMat::zeros(r + k, r + k);
    for i in 0..r {
        for j in 0..k {
            dil[(i, r + j)] = c[(i, j)];
            dil[(r + j, i)] = c[(i, j)].conj();
        }
    }
    let eig = herm_eig(&dil, f64::INFINITY).expect("dilation is square");
    let root2 = std::f64::consts::SQRT_2;
    let mut out = Svd {
        values: Vec::new(),
        left: Vec::new(),
        right: Vec::new(),
    };
    for idx in (0..r + k).rev() {
        let s = eig.values[idx];
        if s <= cutoff {
            break;
        }
        let w = eig.vector(idx);
        let mut u: Vec<C64> = w[..r].iter().map(|z| z * root2).collect();
        let mut v: Vec<C64> = w[r..].iter().map(|z| z * root2).collect();
        // re-normalize against round-off in the split
        super::normalize(&mut u);
        super::normalize(&mut v);
        out.values.push(s);
        out.left.push(u);
        out.right.push(v);
    }
    out
}

/// Numerical rank from singular values above `rel_cutoff * σ_max`.
pub fn numerical_rank(c: &CMat, rel_cutoff: f64) -> usize {
    let s = svd(c, 0.0);
    let top = s.values.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.values.iter().filter(|&&x| x > rel_cutoff * top).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn unit_check(v: &CMat) -> f64 {
        v.adjoint().matmul(v).distance(&CMat::identity(v.cols()))
    }

    fn check(x: &CMat) {
        let e = herm_eig(x, 1e-10).unwrap();
        let scale = x.frobenius_norm().max(1.0);
        assert!(e.reconstruct().distance(x) <= 1e-10 * scale);
        assert!(unit_check(&e.vectors) <= 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn identity_and_diagonal() {
        let e = herm_eig(&CMat::identity(2), 1e-10).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        let e = herm_eig(&CMat::diag_real(&[3.0, -1.0]), 1e-10).unwrap();
        assert_eq!(e.values, vec![-1.0, 3.0]);
    }

    #[test]
    fn random_hermitian_reconstruction() {
        let mut r = rng::stream(11, "eig", 0);
        for dim in [1, 2, 3, 5, 9, 16, 27] {
            check(&rng::random_hermitian(&mut r, dim));
        }
    }

    #[test]
    fn warm_start_matches_cold() {
        let mut r = rng::stream(5, "eig", 2);
        let x = rng::random_hermitian(&mut r, 9);
        let mut y = x.clone();
        y.add_assign_scaled(&rng::random_hermitian(&mut r, 9), C64::new(1e-3, 0.0));
        let cold = herm_eig(&y, 1e-10).unwrap();
        let warm = herm_eig_from(&y, &herm_eig(&x, 1e-10).unwrap().vectors).unwrap();
        assert!(warm.reconstruct().distance(&y) <= 1e-10 * y.frobenius_norm());
        assert!(unit_check(&warm.vectors) <= 1e-10);
        for (a, b) in cold.values.iter().zip(&warm.values) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn degenerate_spectrum() {
        let mut r = rng::stream(3, "eig", 1);
        let u = herm_eig(&rng::random_hermitian(&mut r, 6), 1e-10).unwrap().vectors;
        let d = CMat::diag_real(&[1.0, 1.0, 1.0, -2.0, -2.0, 0.0]);
        let x = u.matmul(&d).matmul(&u.adjoint()).hermitian_part();
        check(&x);
        let e = herm_eig(&x, 1e-10).unwrap();
        assert!((e.values[0] + 2.0).abs() < 1e-12 && (e.values[5] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian_and_non_square() {
        let mut x = CMat::identity(2);
        x[(0, 1)] = crate::matrix::ONE;
        assert!(matches!(herm_eig(&x, 1e-10), Err(Error::NonHermitian { .. })));
        assert!(matches!(herm_eig(&CMat::zeros(2, 3), 1e-10), Err(Error::NonSquare { .. })));
    }

    #[test]
    fn svd_reconstructs_rectangular() {
        let mut r = rng::stream(5, "svd", 0);
        let c = rng::ginibre(&mut r, 4, 3);
        let s = svd(&c, 1e-14);
        assert_eq!(s.values.len(), 3);
        assert!(s.reconstruct(4, 3).distance(&c) < 1e-11);
        let low = rng::ginibre(&mut r, 4, 1).matmul(&rng::ginibre(&mut r, 1, 4));
        assert_eq!(numerical_rank(&low, 1e-9), 1);
    }

    #[test]
    fn deterministic() {
        let mut r = rng::stream(8, "eig", 2);
        let x = rng::random_hermitian(&mut r, 7);
        let a = herm_eig(&x, 1e-10).unwrap();
        let b = herm_eig(&x, 1e-10).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }
}
