use super::nnls::{nnls_membership, GenCone};
use super::search::{filtered_reduction_search, min_schmidt_value, reduction_witness};
use super::spectral::{is_ppt, is_psd};
use super::{check_dims, choi_dims, Certificate, ConeId, Verdict, Witness};
use crate::choi::LinMap;
use crate::error::{Error, Result};
use crate::matrix::{
    basis_vector, herm_eig, kron_vec, max_entangled, max_entangled_vector, partial_transpose, real_pairing, CMat,
    Side, C64, ZERO,
};
use crate::rng;
use crate::{SearchOpts, Tolerances};

const DECOMPOSITION_ITERS: usize = 1500;

/// Least-squares fit `X ≈ a I + c E` on `C^n ⊗ C^n`; `Some` when exact.
fn isotropic_fit(x: &CMat, dims: (usize, usize)) -> Option<(f64, f64)> {
    let (m, n) = dims;
    if m != n || n < 2 {
        return None;
    }
    let nf = n as f64;
    let tr = x.trace().re;
    let psi = max_entangled_vector(n);
    let te = x.quadratic_form(&psi).re;
    // [[n², n], [n, n²]] [a, c]^T = [Tr X, Tr(E X)]
    let det = nf.powi(4) - nf * nf;
    let a = (nf * nf * tr - nf * te) / det;
    let c = (nf * nf * te - nf * tr) / det;
    let mut fit = CMat::identity(n * n).scale_real(a);
    fit.add_assign_scaled(&max_entangled(n), C64::new(c, 0.0));
    (fit.distance(x) <= 1e-10 * x.frobenius_norm().max(1.0)).then_some((a, c))
}

/// Schmidt-rank-`k` unit vector attaining `min(a, a + ck)` on `aI + cE`.
fn isotropic_extremal(n: usize, k: usize, toward_e: bool) -> Vec<C64> {
    if toward_e {
        let s = 1.0 / (k as f64).sqrt();
        let mut z = vec![ZERO; n * n];
        for i in 0..k {
            z[i * n + i] = C64::new(s, 0.0);
        }
        z
    } else {
        kron_vec(&basis_vector(n, 0), &basis_vector(n, 1))
    }
}

/// Alternating PSD projections looking for `X = P + Q^Γ` with `P, Q ⪰ 0`.
/// Returns `Q` once `X − Q^Γ` is PSD within `margin`.
fn decomposition_search(x: &CMat, dims: (usize, usize), margin: f64) -> Option<CMat> {
    let scale = x.frobenius_norm().max(1.0);
    let pt = |y: &CMat| partial_transpose(y, dims, Side::Second).expect("dims checked");
    let psd_part = |y: &CMat| {
        let e = herm_eig(&y.hermitian_part(), f64::INFINITY).expect("square");
        let clipped: Vec<f64> = e.values.iter().map(|v| v.max(0.0)).collect();
        let mut out = CMat::zeros(y.rows(), y.rows());
        for (j, &v) in clipped.iter().enumerate() {
            if v > 0.0 {
                out.add_assign_scaled(&CMat::projector(&e.vector(j)), C64::new(v, 0.0));
            }
        }
        out
    };
    let mut p = psd_part(x);
    let mut q = psd_part(&pt(&x.sub(&p)));
    for _ in 0..DECOMPOSITION_ITERS {
        let rest = x.sub(&pt(&q)).hermitian_part();
        let min = herm_eig(&rest, f64::INFINITY).expect("square").min();
        if min >= -margin {
            return Some(q);
        }
        p = psd_part(&rest);
        let q_new = psd_part(&pt(&x.sub(&p)));
        if q_new.distance(&q) <= 1e-15 * scale {
            return None;
        }
        q = q_new;
    }
    None
}

/// Block-positivity (the Choi cone of positive maps).
///
/// `NotMember` on a product vector below `−margin`; `Member` on a PSD,
/// PT-PSD, isotropic or decomposition certificate; else `Inconclusive`.
pub fn is_block_positive(x: &CMat, dims: (usize, usize), opts: &SearchOpts) -> Result<Verdict> {
    schmidt_block_positive(x, dims, 1, opts)
}

/// Nonnegativity on Schmidt-rank-`k` vectors.
pub fn schmidt_block_positive(x: &CMat, dims: (usize, usize), k: usize, opts: &SearchOpts) -> Result<Verdict> {
    check_dims(x, dims)?;
    let kmax = dims.0.min(dims.1);
    if k == 0 || k > kmax {
        return Err(Error::BadK { k, max: kmax });
    }
    let x = x.symmetrized(opts.tol.hermitian)?;
    let margin = opts.margin();
    let psd = is_psd(&x, &opts.tol)?;
    if psd.is_member() || k == kmax {
        return Ok(psd);
    }
    if let Some((a, c)) = isotropic_fit(&x, dims) {
        let kf = k as f64;
        let bound = a.min(a + c * kf);
        let cert = Certificate::Isotropic { identity_weight: a, entangled_weight: c, bound };
        return Ok(if bound >= -margin {
            Verdict::member(cert, bound)
        } else {
            let z = isotropic_extremal(dims.0, k, a + c * kf < a);
            let value = x.quadratic_form(&z).re;
            Verdict::not_member(Witness::Schmidt { z, k }, value)
        });
    }
    let search = min_schmidt_value(&x, dims, k, opts)?;
    let ev = search.evidence;
    if search.value < -margin {
        let w = if k == 1 {
            let (v, w) = split_product(&search.z, dims);
            Witness::Product { v, w }
        } else {
            Witness::Schmidt { z: search.z.clone(), k }
        };
        return Ok(Verdict::not_member(w, search.value).with_evidence(ev));
    }
    if k == 1 {
        let ppt = is_ppt(&x, dims, &opts.tol)?;
        if let Some(Certificate::PartialTransposeSpectrum { min_eigenvalue }) = ppt.certificate {
            let cert = Certificate::PartialTransposeSpectrum { min_eigenvalue };
            return Ok(Verdict::member(cert, search.value).with_evidence(ev));
        }
        if let Some(q) = decomposition_search(&x, dims, margin) {
            let p = x.sub(&partial_transpose(&q, dims, Side::Second)?);
            let cert = Certificate::Named(format!(
                "decomposable: X = P + Q^Γ with min eig(P) = {:.3e}, min eig(Q) = {:.3e}",
                herm_eig(&p.hermitian_part(), f64::INFINITY)?.min(),
                herm_eig(&q, f64::INFINITY)?.min()
            ));
            return Ok(Verdict::member(cert, search.value).with_evidence(ev));
        }
    }
    Ok(Verdict::inconclusive(search.value).with_evidence(ev))
}

/// Splits a (numerically) product unit vector into its factors.
fn split_product(z: &[C64], (m, n): (usize, usize)) -> (Vec<C64>, Vec<C64>) {
    let zm = CMat::from_fn(m, n, |a, b| z[a * n + b]);
    let s = crate::matrix::svd(&zm, 0.0);
    let v: Vec<C64> = s.left[0].iter().map(|c| c * s.values[0]).collect();
    let w: Vec<C64> = s.right[0].iter().map(|c| c.conj()).collect();
    (v, w)
}

fn validate_map_k(map: &LinMap, k: usize) -> Result<()> {
    if k == 0 || k > map.n() {
        return Err(Error::BadK { k, max: map.n() });
    }
    Ok(())
}

/// `k`-positivity of a map through its Choi matrix.
pub fn is_k_positive(map: &LinMap, k: usize, opts: &SearchOpts) -> Result<Verdict> {
    validate_map_k(map, k)?;
    schmidt_block_positive(map.choi(), choi_dims(map), k, opts)
}

/// Gurvits–Barnum ball: `‖ρ − I/D‖_F ≤ 1/√(D(D−1))` implies separability.
fn separable_ball(x: &CMat) -> Option<Certificate> {
    let d = x.rows() as f64;
    let tr = x.trace().re;
    if tr <= 0.0 {
        return None;
    }
    let rho = x.scale_real(1.0 / tr);
    let dist = rho.distance(&CMat::identity(x.rows()).scale_real(1.0 / d));
    let radius = 1.0 / (d * (d - 1.0)).sqrt();
    (dist <= radius).then_some(Certificate::SeparableBall { distance: dist, radius })
}

fn random_schmidt_vector(r: &mut rng::StreamRng, dims: (usize, usize), k: usize) -> Vec<C64> {
    let (m, n) = dims;
    let mut z = vec![ZERO; m * n];
    for _ in 0..k {
        let t = kron_vec(&rng::random_vector(r, m), &rng::random_vector(r, n));
        for (zi, ti) in z.iter_mut().zip(t) {
            *zi += ti;
        }
    }
    z
}

/// Rank-≤k truncation of `z` in its Schmidt decomposition.
fn truncate_schmidt(z: &[C64], dims: (usize, usize), k: usize) -> Vec<C64> {
    let (m, n) = dims;
    let zm = CMat::from_fn(m, n, |a, b| z[a * n + b]);
    let s = crate::matrix::svd(&zm, 0.0);
    let mut out = vec![ZERO; m * n];
    for r in 0..k.min(s.values.len()) {
        let w: Vec<C64> = s.right[r].iter().map(|c| c.conj()).collect();
        let t = kron_vec(&s.left[r], &w);
        for (o, ti) in out.iter_mut().zip(t) {
            *o += ti * s.values[r];
        }
    }
    out
}

/// Membership certificates for Schmidt number at most `k` of a PSD `x`.
fn schmidt_certificates(x: &CMat, dims: (usize, usize), k: usize, opts: &SearchOpts) -> Result<Option<Certificate>> {
    let margin = opts.margin();
    let scale = x.frobenius_norm().max(1.0);
    if let Some(c) = separable_ball(x) {
        return Ok(Some(c));
    }
    let eig = herm_eig(x, f64::INFINITY)?;
    let cutoff = 1e-12 * eig.max().abs().max(1e-300);
    let mut spectral = CMat::zeros(x.rows(), x.rows());
    let mut candidates = Vec::new();
    for (j, &lam) in eig.values.iter().enumerate() {
        if lam <= cutoff {
            continue;
        }
        let v = eig.vector(j);
        let t = truncate_schmidt(&v, dims, k);
        spectral.add_assign_scaled(&CMat::projector(&t), C64::new(lam, 0.0));
        candidates.push(CMat::projector(&t));
    }
    let residual = spectral.distance(x);
    if residual <= margin * scale {
        return Ok(Some(Certificate::SchmidtSpectral { k, residual }));
    }
    let mut r = rng::stream(opts.seed, "schmidt-cert", k as u64);
    for _ in 0..opts.certificate_samples {
        candidates.push(CMat::projector(&random_schmidt_vector(&mut r, dims, k)));
    }
    let (m, n) = dims;
    for a in 0..m {
        for b in 0..n {
            candidates.push(CMat::projector(&kron_vec(&basis_vector(m, a), &basis_vector(n, b))));
        }
    }
    let cone = GenCone::from_nonzero(x.rows(), candidates)?;
    let v = nnls_membership(&cone, x, margin)?;
    Ok(if v.is_member() { v.certificate } else { None })
}

/// Separability on `C^m ⊗ C^n`.
///
/// Refuted exactly when the query or its partial transpose fails PSD. PPT is
/// sufficient at 2⊗2, 2⊗3 and 3⊗2 (and trivially when a factor is 1-dimensional);
/// elsewhere `Member` needs an explicit certificate.
pub fn is_separable(x: &CMat, dims: (usize, usize), opts: &SearchOpts) -> Result<Verdict> {
    schmidt_number_membership(x, dims, 1, opts)
}

/// Membership in the cone of operators with Schmidt number at most `k`.
pub fn schmidt_number_membership(x: &CMat, dims: (usize, usize), k: usize, opts: &SearchOpts) -> Result<Verdict> {
    check_dims(x, dims)?;
    let (m, n) = dims;
    let kmax = m.min(n);
    if k == 0 || k > kmax {
        return Err(Error::BadK { k, max: kmax });
    }
    let x = x.symmetrized(opts.tol.hermitian)?;
    let margin = opts.margin();
    let psd = is_psd(&x, &opts.tol)?;
    if !psd.is_member() || k == kmax {
        return Ok(psd);
    }
    let psd_min = psd.value;
    if let Some((a, c)) = isotropic_fit(&x, dims) {
        let w0 = reduction_witness(dims, k);
        let bound = real_pairing(&w0, &x);
        let cert = Certificate::Isotropic { identity_weight: a, entangled_weight: c, bound };
        return Ok(if bound >= -margin {
            Verdict::member(cert, bound)
        } else {
            Verdict::not_member(Witness::Matrix(w0), bound)
        });
    }
    if k == 1 {
        let ppt = is_ppt(&x, dims, &opts.tol)?;
        if ppt.is_not_member() {
            return Ok(ppt);
        }
        if matches!((m, n), (2, 2) | (2, 3) | (3, 2)) {
            let Some(Certificate::PartialTransposeSpectrum { min_eigenvalue }) = ppt.certificate else {
                unreachable!("PPT member carries its spectrum")
            };
            let cert = Certificate::PptLowDimension { min_eigenvalue: psd_min, min_pt_eigenvalue: min_eigenvalue };
            return Ok(Verdict::member(cert, psd_min.min(min_eigenvalue)));
        }
    }
    if let Some(cert) = schmidt_certificates(&x, dims, k, opts)? {
        return Ok(Verdict::member(cert, psd_min));
    }
    let search = filtered_reduction_search(&x, dims, k, opts)?;
    let ev = search.evidence;
    if search.value < -margin {
        return Ok(Verdict::not_member(Witness::Matrix(search.witness), search.value).with_evidence(ev));
    }
    Ok(Verdict::inconclusive(search.value).with_evidence(ev))
}

/// `k`-superpositivity: the Choi matrix has Schmidt number at most `k`.
pub fn is_ksp(map: &LinMap, k: usize, opts: &SearchOpts) -> Result<Verdict> {
    validate_map_k(map, k)?;
    schmidt_number_membership(map.choi(), choi_dims(map), k, opts)
}

/// Membership in the dual of the cone generated by `gens`:
/// `Tr(C_Ψ C_Φi) ≥ −margin` for every generator.
pub fn dual_pairing_test(gens: &[LinMap], psi: &LinMap, tol: &Tolerances) -> Result<Verdict> {
    if gens.is_empty() {
        return Err(Error::EmptyCone);
    }
    let mut min = f64::INFINITY;
    let mut worst = 0;
    for (i, g) in gens.iter().enumerate() {
        if g.n() != psi.n() {
            return Err(Error::dims("dual pairing generator", psi.n(), g.n()));
        }
        let p = real_pairing(psi.choi(), g.choi());
        if p < min {
            min = p;
            worst = i;
        }
    }
    Ok(pairing_verdict(min, worst, gens.len(), tol.decision))
}

/// Matrix version of [`dual_pairing_test`] against a generated cone.
pub fn dual_pairing_matrix(cone: &GenCone, y: &CMat, tol: &Tolerances) -> Result<Verdict> {
    if cone.is_empty() {
        return Err(Error::EmptyCone);
    }
    let d = cone.dim();
    if y.shape() != (d, d) {
        return Err(Error::dims("dual pairing query", format!("{d}x{d}"), format!("{}x{}", y.rows(), y.cols())));
    }
    let y = y.symmetrized(tol.hermitian)?;
    let (mut min, mut worst) = (f64::INFINITY, 0);
    for (i, g) in cone.gens().iter().enumerate() {
        let p = real_pairing(&y, g);
        if p < min {
            min = p;
            worst = i;
        }
    }
    Ok(pairing_verdict(min, worst, cone.len(), tol.decision))
}

fn pairing_verdict(min: f64, worst: usize, count: usize, margin: f64) -> Verdict {
    if min >= -margin {
        Verdict::member(Certificate::Pairings { min_pairing: min, count }, min)
    } else {
        Verdict::not_member(Witness::Generator { index: worst, pairing: min }, min)
    }
}

/// Membership of a matrix on `C^m ⊗ C^n` in a canonical cone; map tags stand
/// for their Choi cones.
pub fn matrix_membership(cone: ConeId, x: &CMat, dims: (usize, usize), opts: &SearchOpts) -> Result<Verdict> {
    check_dims(x, dims)?;
    cone.validate(dims.0.min(dims.1))?;
    match cone.choi_cone() {
        ConeId::Psd => is_psd(x, &opts.tol),
        ConeId::Ppt => is_ppt(x, dims, &opts.tol),
        ConeId::BlockPos => is_block_positive(x, dims, opts),
        ConeId::SchmidtBp(k) => schmidt_block_positive(x, dims, k, opts),
        ConeId::Sep => is_separable(x, dims, opts),
        ConeId::Ksp(k) => schmidt_number_membership(x, dims, k, opts),
        other => unreachable!("choi_cone returned map tag {other}"),
    }
}

/// Membership of a map in a canonical cone.
pub fn map_membership(cone: ConeId, map: &LinMap, opts: &SearchOpts) -> Result<Verdict> {
    cone.validate(map.n())?;
    matrix_membership(cone, map.choi(), choi_dims(map), opts)
}
