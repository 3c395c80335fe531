//! Finitely generated cones of Hermitian matrices and exact membership by
//! active-set nonnegative least squares (Lawson–Hanson).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Certificate, Evidence, Verdict, Witness};
use crate::error::{Error, Result};
use crate::matrix::{CMat, C64};

/// Finitely generated cone `{Σ c_i G_i : c_i ≥ 0}` of Hermitian matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenCone {
    dim: usize,
    gens: Vec<CMat>,
}

impl GenCone {
    /// Checks that every generator is a nonzero Hermitian `dim × dim` matrix.
    /// Mildly asymmetric generators are symmetrized.
    pub fn new(dim: usize, gens: Vec<CMat>) -> Result<Self> {
        let mut out = Vec::with_capacity(gens.len());
        for g in gens {
            if g.shape() != (dim, dim) {
                return Err(Error::dims("cone generator", format!("{dim}x{dim}"), format!("{}x{}", g.rows(), g.cols())));
            }
            let g = g.symmetrized(1e-10 * g.max_abs().max(1.0))?;
            if g.max_abs() == 0.0 {
                return Err(Error::PreconditionFailed("cone generators must be nonzero".into()));
            }
            out.push(g);
        }
        Ok(GenCone { dim, gens: out })
    }

    /// Like [`GenCone::new`] but silently drops zero generators.
    pub fn from_nonzero(dim: usize, gens: Vec<CMat>) -> Result<Self> {
        GenCone::new(dim, gens.into_iter().filter(|g| g.max_abs() > 1e-14).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gens(&self) -> &[CMat] {
        &self.gens
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn push(&mut self, g: CMat) -> Result<()> {
        let extra = GenCone::new(self.dim, vec![g])?;
        self.gens.extend(extra.gens);
        Ok(())
    }

    pub fn extended(&self, extra: impl IntoIterator<Item = CMat>) -> Result<GenCone> {
        let mut gens = self.gens.clone();
        gens.extend(extra);
        GenCone::new(self.dim, gens)
    }

    /// `Σ c_i G_i`.
    pub fn combine(&self, coefficients: &[f64]) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for (g, &c) in self.gens.iter().zip(coefficients) {
            if c != 0.0 {
                out.add_assign_scaled(g, C64::new(c, 0.0));
            }
        }
        out
    }

    /// Exact NNLS membership; see [`nnls_membership`].
    pub fn contains(&self, x: &CMat, tol: f64) -> Result<Verdict> {
        nnls_membership(self, x, tol)
    }
}

/// Real coordinates of a Hermitian matrix in which the Frobenius inner product
/// is the Euclidean one: the diagonal, then `√2 Re` and `√2 Im` of each
/// strictly-upper entry.
pub fn realify(x: &CMat) -> Vec<f64> {
    let d = x.rows();
    let r2 = std::f64::consts::SQRT_2;
    let mut v = Vec::with_capacity(d * d);
    for i in 0..d {
        v.push(x[(i, i)].re);
    }
    for i in 0..d {
        for j in i + 1..d {
            let z = (x[(i, j)] + x[(j, i)].conj()) * 0.5;
            v.push(r2 * z.re);
            v.push(r2 * z.im);
        }
    }
    v
}

#[cfg(test)]
fn unrealify(v: &[f64], d: usize) -> CMat {
    let r2 = std::f64::consts::SQRT_2;
    let mut x = CMat::zeros(d, d);
    for i in 0..d {
        x[(i, i)] = C64::new(v[i], 0.0);
    }
    let mut p = d;
    for i in 0..d {
        for j in i + 1..d {
            let z = C64::new(v[p] / r2, v[p + 1] / r2);
            x[(i, j)] = z;
            x[(j, i)] = z.conj();
            p += 2;
        }
    }
    x
}

/// Least squares on the columns in `active`, by QR with an SVD fallback when
/// the active columns are numerically dependent.
fn solve_active(a: &DMatrix<f64>, b: &DVector<f64>, active: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(active);
    let qr = sub.clone().qr();
    let r = qr.r();
    let rmax = (0..r.ncols()).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let well_posed = (0..r.ncols()).all(|i| r[(i, i)].abs() > 1e-11 * rmax.max(1e-300));
    if well_posed {
        let qtb = qr.q().transpose() * b;
        if let Some(s) = r.solve_upper_triangular(&qtb) {
            return s;
        }
    }
    let svd = sub.svd(true, true);
    svd.solve(b, 1e-12).unwrap_or_else(|_| DVector::zeros(active.len()))
}

/// Lawson–Hanson active-set NNLS: `min ‖A c − b‖` over `c ≥ 0`.
pub(crate) fn lawson_hanson(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, usize) {
    let ncols = a.ncols();
    let mut x = DVector::zeros(ncols);
    let mut passive = vec![false; ncols];
    // columns that re-entered and left again without moving x
    let mut blocked = vec![false; ncols];
    let at = a.transpose();
    let bnorm = b.norm().max(1.0);
    let wtol = 1e-13 * bnorm;
    let max_outer = 3 * ncols + 10;
    let mut iterations = 0;
    for _ in 0..max_outer {
        let w = &at * (b - a * &x);
        let mut best = None;
        for j in 0..ncols {
            if !passive[j] && !blocked[j] && w[j] > wtol && best.is_none_or(|(_, bw)| w[j] > bw) {
                best = Some((j, w[j]));
            }
        }
        let Some((t, _)) = best else { break };
        passive[t] = true;
        let before = x.clone();
        loop {
            iterations += 1;
            let active: Vec<usize> = (0..ncols).filter(|&j| passive[j]).collect();
            let s_act = solve_active(a, b, &active);
            if s_act.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (&j, &v) in active.iter().zip(s_act.iter()) {
                    x[j] = v;
                }
                blocked.fill(false);
                break;
            }
            let mut alpha = f64::INFINITY;
            for (&j, &sj) in active.iter().zip(s_act.iter()) {
                if sj <= 0.0 {
                    let denom = x[j] - sj;
                    if denom > 0.0 {
                        alpha = alpha.min(x[j] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            let mut s_full = DVector::zeros(ncols);
            for (&j, &v) in active.iter().zip(s_act.iter()) {
                s_full[j] = v;
            }
            x = &x + (&s_full - &x) * alpha;
            let mut removed = false;
            for &j in &active {
                if x[j] <= 1e-15 * bnorm {
                    x[j] = 0.0;
                    passive[j] = false;
                    removed = true;
                }
            }
            if !removed || !passive.iter().any(|&p| p) {
                passive[t] = false;
                break;
            }
        }
        if !passive[t] && x == before {
            blocked[t] = true;
        }
    }
    (x, iterations)
}

/// Membership in a finitely generated cone.
///
/// `Member` iff the NNLS residual `r = X − Σ c_i G_i` has norm at most
/// `tol · max(1, ‖X‖_F)`, with the coefficients as certificate. Otherwise
/// `W = −r/‖r‖` separates: `Tr(W G_i) ≥ 0` at the optimum and `Tr(W X) = −‖r‖`.
pub fn nnls_membership(cone: &GenCone, x: &CMat, tol: f64) -> Result<Verdict> {
    if cone.is_empty() {
        return Err(Error::EmptyCone);
    }
    if x.shape() != (cone.dim, cone.dim) {
        return Err(Error::dims("cone query", format!("{0}x{0}", cone.dim), format!("{}x{}", x.rows(), x.cols())));
    }
    let x = x.symmetrized(1e-10 * x.max_abs().max(1.0))?;
    let d2 = cone.dim * cone.dim;
    let mut a = DMatrix::zeros(d2, cone.len());
    let mut norms = Vec::with_capacity(cone.len());
    for (j, g) in cone.gens.iter().enumerate() {
        let col = realify(g);
        let nrm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        norms.push(nrm);
        for (i, v) in col.iter().enumerate() {
            a[(i, j)] = v / nrm;
        }
    }
    let b = DVector::from_vec(realify(&x));
    let (c, iterations) = lawson_hanson(&a, &b);
    let coefficients: Vec<f64> = c.iter().zip(&norms).map(|(v, n)| v / n).collect();
    let resid = cone.combine(&coefficients).sub(&x);
    let rnorm = resid.frobenius_norm();
    let evidence = Evidence { restarts: 1, iterations };
    if rnorm <= tol * x.frobenius_norm().max(1.0) {
        return Ok(Verdict::member(Certificate::Conic { coefficients, residual: rnorm }, rnorm).with_evidence(evidence));
    }
    let w = resid.scale_real(1.0 / rnorm);
    let value = crate::matrix::real_pairing(&w, &x);
    Ok(Verdict::not_member(Witness::Matrix(w), value).with_evidence(evidence))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choi::LinMap;
    use crate::cones::Status;
    use crate::matrix::real_pairing;
    use crate::rng;

    #[test]
    fn realify_is_isometric() {
        let mut r = rng::stream(1, "re", 0);
        let x = rng::random_hermitian(&mut r, 5);
        let y = rng::random_hermitian(&mut r, 5);
        let dot: f64 = realify(&x).iter().zip(realify(&y)).map(|(a, b)| a * b).sum();
        assert!((dot - real_pairing(&x, &y)).abs() < 1e-12);
        assert!(unrealify(&realify(&x), 5).distance(&x) < 1e-14);
    }

    #[test]
    fn single_generator() {
        let g = CMat::unit(4, 4, 0, 0);
        let cone = GenCone::new(4, vec![g.clone()]).unwrap();
        let v = nnls_membership(&cone, &g, 1e-9).unwrap();
        assert_eq!(v.status, Status::Member);
        let Some(Certificate::Conic { coefficients, .. }) = &v.certificate else { panic!() };
        assert!((coefficients[0] - 1.0).abs() < 1e-14);

        let v = nnls_membership(&cone, &g.neg(), 1e-9).unwrap();
        assert_eq!(v.status, Status::NotMember);
        assert!((v.value + 1.0).abs() < 1e-12);
        let Some(Witness::Matrix(w)) = &v.witness else { panic!() };
        assert!(real_pairing(w, &g) >= -1e-12);
    }

    #[test]
    fn average_of_random_cp_chois() {
        let mut r = rng::stream(2, "nnls", 0);
        let gens: Vec<CMat> = (0..40)
            .map(|_| LinMap::ad(&rng::ginibre(&mut r, 2, 2)).unwrap().into_choi())
            .collect();
        let avg = gens.iter().fold(CMat::zeros(4, 4), |acc, g| acc.add(g)).scale_real(1.0 / 40.0);
        let cone = GenCone::new(4, gens).unwrap();
        let v = nnls_membership(&cone, &avg, 1e-9).unwrap();
        assert!(v.is_member());
        let Some(Certificate::Conic { coefficients, residual }) = &v.certificate else { panic!() };
        assert!(*residual <= 1e-10);
        assert!(coefficients.iter().all(|&c| c >= 0.0));
        assert!(cone.combine(coefficients).distance(&avg) <= 1e-10);
    }

    #[test]
    fn separating_witness_pairs_nonnegatively() {
        let mut r = rng::stream(3, "nnls", 1);
        let gens: Vec<CMat> = (0..12)
            .map(|_| LinMap::ad(&rng::ginibre(&mut r, 2, 2)).unwrap().into_choi())
            .collect();
        let cone = GenCone::new(4, gens).unwrap();
        for t in 0..20 {
            let mut rr = rng::stream(3, "q", t);
            let q = rng::random_hermitian(&mut rr, 4);
            let v = nnls_membership(&cone, &q, 1e-9).unwrap();
            if let Some(Witness::Matrix(w)) = &v.witness {
                assert!(real_pairing(w, &q) < 0.0);
                for g in cone.gens() {
                    assert!(real_pairing(w, g) >= -1e-9, "{}", real_pairing(w, g));
                }
            }
        }
    }

    #[test]
    fn errors() {
        let cone = GenCone::new(4, vec![]).unwrap();
        assert!(matches!(nnls_membership(&cone, &CMat::identity(4), 1e-9), Err(Error::EmptyCone)));
        assert!(GenCone::new(4, vec![CMat::zeros(4, 4)]).is_err());
        assert!(GenCone::new(4, vec![CMat::identity(2)]).is_err());
    }
}
