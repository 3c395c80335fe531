use super::{CMat, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Kronecker product: block `(i, j)` of the result is `a[i][j] * b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMat::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// `Σ_i e_i ⊗ e_i` (unnormalized).
pub fn max_entangled_vector(n: usize) -> Vec<C64> {
    let mut v = vec![ZERO; n * n];
    for i in 0..n {
        v[i * n + i] = ONE;
    }
    v
}

/// `E = Σ_{i,j} e_i e_j^* ⊗ e_i e_j^*`, the unnormalized maximally entangled matrix.
pub fn max_entangled(n: usize) -> CMat {
    let psi = max_entangled_vector(n);
    CMat::projector(&psi)
}

/// Swap operator `F(v ⊗ w) = w ⊗ v` on `C^n ⊗ C^n`.
pub fn swap_operator(n: usize) -> CMat {
    let mut f = CMat::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            f[(j * n + i, i * n + j)] = ONE;
        }
    }
    f
}

/// Which tensor factor a partial operation acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// Partial transpose on `M_m ⊗ M_n`.
pub fn partial_transpose(x: &CMat, dims: (usize, usize), side: Side) -> Result<CMat> {
    let (m, n) = dims;
    let d = m * n;
    if x.shape() != (d, d) {
        return Err(Error::dims(
            "partial transpose",
            format!("{d}x{d} for dims ({m},{n})"),
            format!("{}x{}", x.rows(), x.cols()),
        ));
    }
    let mut out = CMat::zeros(d, d);
    for a in 0..m {
        for b in 0..n {
            for c in 0..m {
                for e in 0..n {
                    let src = match side {
                        Side::Second => (a * n + e, c * n + b),
                        Side::First => (c * n + b, a * n + e),
                    };
                    out[(a * n + b, c * n + e)] = x[src];
                }
            }
        }
    }
    Ok(out)
}

/// Column-stacking vectorization, leftmost column first.
pub fn vec(x: &CMat) -> Vec<C64> {
    let (r, c) = x.shape();
    let mut v = Vec::with_capacity(r * c);
    for j in 0..c {
        for i in 0..r {
            v.push(x[(i, j)]);
        }
    }
    v
}

/// Inverse of [`vec`].
pub fn unvec(v: &[C64], rows: usize, cols: usize) -> Result<CMat> {
    if v.len() != rows * cols {
        return Err(Error::dims("unvec", rows * cols, v.len()));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| v[j * rows + i]))
}

/// `Tr(XY)`.
pub fn trace_pairing(x: &CMat, y: &CMat) -> Result<C64> {
    if !x.is_square() || x.shape() != y.shape() {
        return Err(Error::dims(
            "trace pairing",
            format!("{}x{}", x.rows(), x.rows()),
            format!("{}x{}", y.rows(), y.cols()),
        ));
    }
    let n = x.rows();
    let mut s = ZERO;
    for i in 0..n {
        for k in 0..n {
            s += x[(i, k)] * y[(k, i)];
        }
    }
    Ok(s)
}

/// `Tr(XY)` for Hermitian operands of equal shape, returned as a real number.
pub(crate) fn real_pairing(x: &CMat, y: &CMat) -> f64 {
    trace_pairing(x, y).expect("pairing of equal square shapes").re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{basis_vector, herm_eig, kron_vec};
    use crate::rng;

    fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    #[test]
    fn kron_identity_and_units() {
        assert_eq!(kron(&CMat::identity(2), &CMat::identity(2)), CMat::identity(4));
        let p = kron(&CMat::unit(2, 2, 0, 0), &CMat::unit(2, 2, 1, 1));
        assert_eq!(p, CMat::unit(4, 4, 1, 1));
    }

    #[test]
    fn kron_mixed_product() {
        let mut r = rng::stream(1, "kron", 0);
        let [a, b, c, d] = [0, 1, 2, 3].map(|_| rng::ginibre(&mut r, 2, 2));
        let lhs = kron(&a, &b).matmul(&kron(&c, &d));
        let rhs = kron(&a.matmul(&c), &b.matmul(&d));
        assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn max_entangled_entries() {
        assert_eq!(max_entangled(1), CMat::identity(1));
        let e = max_entangled(2);
        for i in 0..4 {
            for j in 0..4 {
                let want = if [0, 3].contains(&i) && [0, 3].contains(&j) { 1.0 } else { 0.0 };
                assert_eq!(e[(i, j)], C64::new(want, 0.0));
            }
        }
        for n in 2..=4 {
            assert_eq!(max_entangled(n).trace(), C64::new(n as f64, 0.0));
        }
    }

    #[test]
    fn max_entangled_spectrum() {
        let e = herm_eig(&max_entangled(2), 1e-12).unwrap();
        let want = [0.0, 0.0, 0.0, 2.0];
        for (a, b) in e.values.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_on_basis_and_involution() {
        for n in 1..=3 {
            let f = swap_operator(n);
            for i in 0..n {
                for j in 0..n {
                    let v = kron_vec(&basis_vector(n, i), &basis_vector(n, j));
                    let w = kron_vec(&basis_vector(n, j), &basis_vector(n, i));
                    assert_eq!(f.mul_vec(&v), w);
                }
            }
            assert_eq!(f.matmul(&f), CMat::identity(n * n));
            assert_eq!(f.transpose(), f);
        }
        let f2 = swap_operator(2);
        assert_eq!(f2, {
            let mut p = CMat::zeros(4, 4);
            p[(0, 0)] = ONE;
            p[(1, 2)] = ONE;
            p[(2, 1)] = ONE;
            p[(3, 3)] = ONE;
            p
        });
        let e = herm_eig(&f2, 1e-12).unwrap();
        assert_eq!(e.values.iter().map(|x| x.round() as i32).collect::<Vec<_>>(), vec![-1, 1, 1, 1]);
    }

    #[test]
    fn partial_transpose_examples() {
        let id = CMat::identity(4);
        assert_eq!(partial_transpose(&id, (2, 2), Side::Second).unwrap(), id);
        let pt = partial_transpose(&max_entangled(2), (2, 2), Side::Second).unwrap();
        assert_eq!(pt, swap_operator(2));
        let pt1 = partial_transpose(&max_entangled(2), (2, 2), Side::First).unwrap();
        assert_eq!(pt1, swap_operator(2));
        assert!(partial_transpose(&id, (2, 3), Side::Second).is_err());
    }

    #[test]
    fn partial_transpose_rectangular_dims() {
        let mut r = rng::stream(2, "pt", 0);
        let y = rng::random_hermitian(&mut r, 2);
        let z = rng::random_hermitian(&mut r, 3);
        let x = kron(&y, &z);
        assert!(close(&partial_transpose(&x, (2, 3), Side::Second).unwrap(), &kron(&y, &z.transpose()), 1e-14));
        assert!(close(&partial_transpose(&x, (2, 3), Side::First).unwrap(), &kron(&y.transpose(), &z), 1e-14));
    }

    #[test]
    fn vec_conventions() {
        let v = vec(&CMat::identity(2));
        assert_eq!(v, vec![ONE, ZERO, ZERO, ONE]);
        let mut r = rng::stream(4, "vec", 0);
        let f = swap_operator(2);
        for _ in 0..100 {
            let x = rng::ginibre(&mut r, 2, 2);
            let lhs = vec(&x.transpose());
            let rhs = f.mul_vec(&vec(&x));
            assert!(lhs.iter().zip(&rhs).all(|(a, b)| (a - b).norm() <= 1e-12));
            assert_eq!(unvec(&vec(&x), 2, 2).unwrap(), x);
        }
        assert!(unvec(&[ONE; 3], 2, 2).is_err());
    }

    #[test]
    fn pairing_examples() {
        let i2 = CMat::identity(2);
        assert_eq!(trace_pairing(&i2, &i2).unwrap(), C64::new(2.0, 0.0));
        let e = max_entangled(2);
        let f = swap_operator(2);
        assert_eq!(trace_pairing(&e, &f).unwrap(), C64::new(2.0, 0.0));
        assert_eq!(trace_pairing(&e, &e).unwrap(), C64::new(4.0, 0.0));
        assert!(trace_pairing(&i2, &CMat::identity(3)).is_err());
    }
}
