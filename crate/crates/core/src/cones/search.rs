//! Alternating minimizers over product vectors, Schmidt-rank-k vectors and
//! locally filtered reduction witnesses.
//!
//! Each run alternates exact minimal-eigenvector solves of a subproblem, so
//! the value is non-increasing along a run. Restarts use independent seeded
//! streams and the best run wins; ties keep the earliest restart.

use super::{check_dims, Evidence};
use crate::error::{Error, Result};
use crate::matrix::{herm_eig, herm_eig_from, inner, kron, norm, svd, CMat, C64, ZERO};
use crate::rng::{self, StreamRng};
use crate::SearchOpts;

/// Result of [`min_product_value`].
#[derive(Clone, Debug)]
pub struct ProductMin {
    pub value: f64,
    pub v: Vec<C64>,
    pub w: Vec<C64>,
    pub evidence: Evidence,
}

/// Result of [`min_schmidt_value`].
#[derive(Clone, Debug)]
pub struct SchmidtMin {
    pub value: f64,
    pub z: Vec<C64>,
    pub evidence: Evidence,
}

/// Result of [`filtered_reduction_search`].
#[derive(Clone, Debug)]
pub struct FilterMin {
    pub value: f64,
    /// `W = G^*(I - ψψ^*/k)G` with `G = P ⊗ Q`, `‖P‖_F = ‖Q‖_F = 1`.
    pub witness: CMat,
    pub evidence: Evidence,
}

/// Minimal eigenpair of `h`, warm-started from the previous eigenbasis in `basis`.
fn min_pair_from(h: &CMat, basis: &mut Option<CMat>) -> (f64, Vec<C64>) {
    let e = match basis {
        Some(b) => herm_eig_from(h, b),
        None => herm_eig(&h.hermitian_part(), f64::INFINITY),
    }
    .expect("square contraction");
    let out = (e.min(), e.vector(0));
    *basis = Some(e.vectors);
    out
}

/// `M[a][c] = Σ_{b,d} conj(w_b) X[(a,b),(c,d)] w_d`.
fn contract_second(x: &CMat, (m, n): (usize, usize), w: &[C64]) -> CMat {
    CMat::from_fn(m, m, |a, c| {
        let mut s = ZERO;
        for b in 0..n {
            let mut t = ZERO;
            for d in 0..n {
                t += x[(a * n + b, c * n + d)] * w[d];
            }
            s += w[b].conj() * t;
        }
        s
    })
}

fn contract_first(x: &CMat, (m, n): (usize, usize), v: &[C64]) -> CMat {
    CMat::from_fn(n, n, |b, d| {
        let mut s = ZERO;
        for a in 0..m {
            let mut t = ZERO;
            for c in 0..m {
                t += x[(a * n + b, c * n + d)] * v[c];
            }
            s += v[a].conj() * t;
        }
        s
    })
}

/// Heuristic minimum of `(v⊗w)^* X (v⊗w)` over unit `v ∈ C^m`, `w ∈ C^n`.
///
/// Restart 0 starts from the best product approximation of the global
/// minimal eigenvector; the others start from random `w`.
pub fn min_product_value(x: &CMat, dims: (usize, usize), opts: &SearchOpts) -> Result<ProductMin> {
    check_dims(x, dims)?;
    let x = x.symmetrized(opts.tol.hermitian)?;
    let (m, n) = dims;
    let global = herm_eig(&x, f64::INFINITY)?;
    let mut best: Option<ProductMin> = None;
    let mut iterations = 0;
    let restarts = opts.restarts.max(1);
    for r in 0..restarts {
        let mut rng = rng::stream(opts.seed, "product", r as u64);
        let mut w = if r == 0 {
            let (_, right) = top_schmidt_pairs(&global.vector(0), dims, 1);
            right.into_iter().next().unwrap_or_else(|| rng::random_unit_vector(&mut rng, n))
        } else {
            rng::random_unit_vector(&mut rng, n)
        };
        let mut v = vec![ZERO; m];
        let mut value = f64::INFINITY;
        let (mut vb, mut wb) = (None, None);
        for _ in 0..opts.max_iter.max(1) {
            iterations += 1;
            let (_, nv) = min_pair_from(&contract_second(&x, dims, &w), &mut vb);
            v = nv;
            let (val, nw) = min_pair_from(&contract_first(&x, dims, &v), &mut wb);
            w = nw;
            let done = value - val < opts.improve_eps;
            value = value.min(val);
            if done {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(ProductMin { value, v: v.clone(), w: w.clone(), evidence: Evidence::default() });
        }
    }
    let mut best = best.expect("at least one restart");
    // report the value of the returned pair itself
    best.value = x.quadratic_form(&crate::matrix::kron_vec(&best.v, &best.w)).re;
    best.evidence = Evidence { restarts, iterations };
    Ok(best)
}

/// Schmidt decomposition pieces of `z ∈ C^m ⊗ C^n`: the top `k` terms
/// `σ_r u_r ⊗ w_r`, returned as (σ_r u_r, w_r).
fn top_schmidt_pairs(z: &[C64], (m, n): (usize, usize), k: usize) -> (Vec<Vec<C64>>, Vec<Vec<C64>>) {
    let zm = CMat::from_fn(m, n, |a, b| z[a * n + b]);
    let s = svd(&zm, 1e-300);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for r in 0..k.min(s.values.len()) {
        left.push(s.left[r].iter().map(|c| c * s.values[r]).collect());
        right.push(s.right[r].iter().map(|c| c.conj()).collect());
    }
    (left, right)
}

/// Modified Gram-Schmidt; dependent columns are replaced by random ones so
/// exactly `cols.len()` orthonormal vectors come back.
fn orthonormalize(cols: &[Vec<C64>], dim: usize, rng: &mut StreamRng) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(cols.len());
    let mut queue: Vec<Vec<C64>> = cols.to_vec();
    let mut idx = 0;
    while out.len() < cols.len() {
        let mut v = if idx < queue.len() {
            std::mem::take(&mut queue[idx])
        } else {
            rng::random_vector(rng, dim)
        };
        idx += 1;
        let scale = norm(&v).max(1e-300);
        for _ in 0..2 {
            for q in &out {
                let c = inner(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let nv = norm(&v);
        if nv > 1e-10 * scale && nv > 1e-300 {
            out.push(v.iter().map(|c| c / nv).collect());
        }
    }
    out
}

/// Isometry `C^{m k} → C^m ⊗ C^n`, `α ↦ Σ_{a,r} α[a k + r] e_a ⊗ b_r`.
fn embed_first(basis: &[Vec<C64>], m: usize, n: usize) -> CMat {
    let k = basis.len();
    let mut l = CMat::zeros(m * n, m * k);
    for a in 0..m {
        for (r, br) in basis.iter().enumerate() {
            for b in 0..n {
                l[(a * n + b, a * k + r)] = br[b];
            }
        }
    }
    l
}

/// Isometry `C^{n k} → C^m ⊗ C^n`, `β ↦ Σ_{b,r} β[b k + r] a_r ⊗ e_b`.
fn embed_second(basis: &[Vec<C64>], m: usize, n: usize) -> CMat {
    let k = basis.len();
    let mut l = CMat::zeros(m * n, n * k);
    for (r, ar) in basis.iter().enumerate() {
        for a in 0..m {
            for b in 0..n {
                l[(a * n + b, b * k + r)] = ar[a];
            }
        }
    }
    l
}

fn columns_of(coeffs: &[C64], outer: usize, k: usize) -> Vec<Vec<C64>> {
    (0..k).map(|r| (0..outer).map(|a| coeffs[a * k + r]).collect()).collect()
}

/// Heuristic minimum of `z^* X z` over unit `z` of Schmidt rank at most `k`.
///
/// Writes `z = Σ_{r<k} a_r ⊗ b_r` and alternates exact solves: with the span
/// of the `b_r` fixed (orthonormalized), the optimal `a_r` come from the
/// minimal eigenvector of `L^* X L` for the embedding `L`; then the roles
/// swap. Restart 0 starts from the rank-k truncation of the global minimal
/// eigenvector. For `k ≥ min(m, n)` the constraint is vacuous and the global
/// minimum is returned.
pub fn min_schmidt_value(x: &CMat, dims: (usize, usize), k: usize, opts: &SearchOpts) -> Result<SchmidtMin> {
    check_dims(x, dims)?;
    let (m, n) = dims;
    let kmax = m.min(n);
    if k == 0 || k > kmax {
        return Err(Error::BadK { k, max: kmax });
    }
    let x = x.symmetrized(opts.tol.hermitian)?;
    let global = herm_eig(&x, f64::INFINITY)?;
    if k == kmax {
        return Ok(SchmidtMin { value: global.min(), z: global.vector(0), evidence: Evidence::default() });
    }
    let restarts = opts.restarts.max(1);
    let mut best: Option<SchmidtMin> = None;
    let mut iterations = 0;
    for r in 0..restarts {
        let mut rng = rng::stream(opts.seed, "schmidt", r as u64);
        let init: Vec<Vec<C64>> = if r == 0 {
            top_schmidt_pairs(&global.vector(0), dims, k).1
        } else {
            (0..k).map(|_| rng::random_vector(&mut rng, n)).collect()
        };
        let mut b_basis = orthonormalize(&init, n, &mut rng);
        let mut value = f64::INFINITY;
        let mut z = Vec::new();
        let (mut ab, mut bb) = (None, None);
        for _ in 0..opts.max_iter.max(1) {
            iterations += 1;
            let l = embed_first(&b_basis, m, n);
            let (_, alpha) = min_pair_from(&l.adjoint().matmul(&x).matmul(&l), &mut ab);
            let a_basis = orthonormalize(&columns_of(&alpha, m, k), m, &mut rng);
            let l = embed_second(&a_basis, m, n);
            let (val, beta) = min_pair_from(&l.adjoint().matmul(&x).matmul(&l), &mut bb);
            z = l.mul_vec(&beta);
            b_basis = orthonormalize(&columns_of(&beta, n, k), n, &mut rng);
            let done = value - val < opts.improve_eps;
            value = value.min(val);
            if done {
                break;
            }
        }
        let zn = norm(&z);
        let z: Vec<C64> = z.iter().map(|c| c / zn).collect();
        let value = x.quadratic_form(&z).re;
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(SchmidtMin { value, z, evidence: Evidence::default() });
        }
    }
    let mut best = best.expect("at least one restart");
    best.evidence = Evidence { restarts, iterations };
    Ok(best)
}

/// Reorders `C^m ⊗ C^n` into `C^n ⊗ C^m`.
fn swap_factors(x: &CMat, (m, n): (usize, usize)) -> CMat {
    let d = m * n;
    let mut out = CMat::zeros(d, d);
    for a in 0..m {
        for b in 0..n {
            for c in 0..m {
                for e in 0..n {
                    out[(b * m + a, e * m + c)] = x[(a * n + b, c * n + e)];
                }
            }
        }
    }
    out
}

/// `I - ψψ^*/k` on `C^m ⊗ C^n` with `ψ = Σ_{i < min(m,n)} e_i ⊗ e_i`.
pub(crate) fn reduction_witness(dims: (usize, usize), k: usize) -> CMat {
    let (m, n) = dims;
    let mut psi = vec![ZERO; m * n];
    for i in 0..m.min(n) {
        psi[i * n + i] = C64::new(1.0, 0.0);
    }
    let mut w = CMat::identity(m * n);
    w.add_assign_scaled(&CMat::projector(&psi), C64::new(-1.0 / k as f64, 0.0));
    w
}

/// Hermitian form `H` with `Tr(W0 (P⊗Q) X (P⊗Q)^*) = p^* H p`, where
/// `p[i m + j] = P[i][j]` and `Q` is held fixed.
fn filter_form(w0: &CMat, x: &CMat, (m, n): (usize, usize), q: &CMat) -> CMat {
    let iq = kron(&CMat::identity(m), q);
    let kmat = iq.matmul(x).matmul(&iq.adjoint());
    let mut h = CMat::zeros(m * m, m * m);
    for kk in 0..m {
        for i in 0..m {
            for l in 0..m {
                for j in 0..m {
                    let mut s = ZERO;
                    for a in 0..n {
                        for b in 0..n {
                            s += w0[(kk * n + a, i * n + b)] * kmat[(j * n + b, l * n + a)];
                        }
                    }
                    h[(kk * m + l, i * m + j)] = s;
                }
            }
        }
    }
    h
}

fn unit_filter(p: &[C64], m: usize) -> CMat {
    CMat::from_fn(m, m, |i, j| p[i * m + j])
}

/// Searches for a locally filtered reduction witness against Schmidt number
/// at most `k`: minimizes `Tr(G^* W0 G X)` over `G = P ⊗ Q` with unit
/// Frobenius norms, where `W0 = I - ψψ^*/k`. Each `G^* W0 G` is nonnegative
/// on Schmidt-rank-`k` vectors, so a negative value refutes membership.
pub fn filtered_reduction_search(x: &CMat, dims: (usize, usize), k: usize, opts: &SearchOpts) -> Result<FilterMin> {
    check_dims(x, dims)?;
    let (m, n) = dims;
    let kmax = m.min(n);
    if k == 0 || k > kmax {
        return Err(Error::BadK { k, max: kmax });
    }
    let x = x.symmetrized(opts.tol.hermitian)?;
    let w0 = reduction_witness(dims, k);
    let xs = swap_factors(&x, dims);
    let w0s = swap_factors(&w0, dims);
    let restarts = opts.restarts.max(1);
    let mut best: Option<FilterMin> = None;
    let mut iterations = 0;
    for r in 0..restarts {
        let mut rng = rng::stream(opts.seed, "filter", r as u64);
        let (mut p, mut q) = if r == 0 {
            (CMat::identity(m).scale_real(1.0 / (m as f64).sqrt()), CMat::identity(n).scale_real(1.0 / (n as f64).sqrt()))
        } else {
            let p = rng::ginibre(&mut rng, m, m);
            let q = rng::ginibre(&mut rng, n, n);
            let (pn, qn) = (p.frobenius_norm(), q.frobenius_norm());
            (p.scale_real(1.0 / pn), q.scale_real(1.0 / qn))
        };
        let mut value = f64::INFINITY;
        let (mut pb, mut qb) = (None, None);
        for _ in 0..opts.max_iter.max(1) {
            iterations += 1;
            let (_, pv) = min_pair_from(&filter_form(&w0, &x, dims, &q), &mut pb);
            p = unit_filter(&pv, m);
            let (val, qv) = min_pair_from(&filter_form(&w0s, &xs, (n, m), &p), &mut qb);
            q = unit_filter(&qv, n);
            let done = value - val < opts.improve_eps;
            value = value.min(val);
            if done {
                break;
            }
        }
        let g = kron(&p, &q);
        let witness = g.adjoint().matmul(&w0).matmul(&g).hermitian_part();
        let value = crate::matrix::real_pairing(&witness, &x);
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(FilterMin { value, witness, evidence: Evidence::default() });
        }
    }
    let mut best = best.expect("at least one restart");
    best.evidence = Evidence { restarts, iterations };
    Ok(best)
}

/// Schmidt rank of `z` (numerical, relative cutoff).
pub fn schmidt_rank(z: &[C64], (m, n): (usize, usize), rel_cutoff: f64) -> usize {
    let zm = CMat::from_fn(m, n, |a, b| z[a * n + b]);
    crate::matrix::numerical_rank(&zm, rel_cutoff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{kron_vec, max_entangled, swap_operator};

    fn iso(n: usize, lambda: f64) -> CMat {
        CMat::identity(n * n).sub(&max_entangled(n).scale_real(lambda))
    }

    #[test]
    fn product_examples() {
        let o = SearchOpts::default();
        let r = min_product_value(&CMat::identity(4), (2, 2), &o).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = min_product_value(&swap_operator(2), (2, 2), &o).unwrap();
        assert!(r.value.abs() < 1e-10 && r.value >= -1e-12);
        let z = kron_vec(&r.v, &r.w);
        assert!((swap_operator(2).quadratic_form(&z).re - r.value).abs() < 1e-14);
        let r = min_product_value(&iso(2, 1.0), (2, 2), &o).unwrap();
        assert!(r.value.abs() < 1e-10);
    }

    #[test]
    fn schmidt_matches_closed_form() {
        let o = SearchOpts::default();
        for k in 1..=3 {
            for lambda in [0.2, 1.0 / 3.0, 0.5, 1.0] {
                let r = min_schmidt_value(&iso(3, lambda), (3, 3), k, &o).unwrap();
                let want = 1.0 - lambda * k as f64;
                assert!((r.value - want).abs() < 1e-6, "k={k} λ={lambda}: {} vs {want}", r.value);
                assert!(schmidt_rank(&r.z, (3, 3), 1e-8) <= k);
            }
        }
        let r = min_schmidt_value(&swap_operator(2), (2, 2), 2, &o).unwrap();
        assert!((r.value + 1.0).abs() < 1e-12);
        let r = min_schmidt_value(&swap_operator(2), (2, 2), 1, &o).unwrap();
        assert!(r.value.abs() < 1e-10);
        assert!(matches!(min_schmidt_value(&swap_operator(2), (2, 2), 3, &o), Err(Error::BadK { .. })));
    }

    #[test]
    fn schmidt_rectangular_and_deterministic() {
        let o = SearchOpts::default().with_seed(9);
        let mut r = rng::stream(3, "t", 0);
        let x = rng::random_hermitian(&mut r, 6);
        let a = min_schmidt_value(&x, (2, 3), 1, &o).unwrap();
        let b = min_schmidt_value(&x, (2, 3), 1, &o).unwrap();
        assert_eq!(a.value, b.value);
        let p = min_product_value(&x, (2, 3), &o).unwrap();
        assert!((a.value - p.value).abs() < 1e-8);
        assert!(a.value >= herm_eig(&x, 1e-10).unwrap().min() - 1e-12);
    }

    #[test]
    fn filtered_reduction_detects_entanglement() {
        let o = SearchOpts::default();
        // unfiltered start already gives Tr(W0 E)/9 = (3 - 9/2)/9
        let r = filtered_reduction_search(&max_entangled(3), (3, 3), 2, &o).unwrap();
        assert!(r.value <= -1.0 / 6.0 + 1e-12);
        let witness_min = min_schmidt_value(&r.witness, (3, 3), 2, &o).unwrap().value;
        assert!(witness_min >= -1e-9);
        // separable operator: never negative
        let r = filtered_reduction_search(&CMat::identity(9), (3, 3), 1, &o).unwrap();
        assert!(r.value >= -1e-12);
    }

    #[test]
    fn swap_factor_roundtrip() {
        let mut r = rng::stream(1, "sw", 0);
        let x = rng::ginibre(&mut r, 6, 6);
        assert_eq!(swap_factors(&swap_factors(&x, (2, 3)), (3, 2)), x);
    }
}
