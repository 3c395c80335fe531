//! Random elements of the canonical cones, used by every verification suite.

use rand::Rng;

use super::ConeId;
use crate::choi::{KrausPair, LinMap};
use crate::error::Result;
use crate::matrix::{kron, kron_vec, partial_transpose, CMat, Side, C64, ZERO};
use crate::rng;

#[derive(Clone, Debug)]
pub enum Sampled {
    Map(LinMap),
    Matrix(CMat),
}

/// A sampled cone element. `exact` is false when only a subcone is sampled
/// (positive maps for `n ≥ 3`, where only decomposable maps are produced).
#[derive(Clone, Debug)]
pub struct Sample {
    pub value: Sampled,
    pub exact: bool,
}

/// Samples a map for map tags and an `n² × n²` matrix for matrix tags.
pub fn sample<R: Rng + ?Sized>(cone: ConeId, n: usize, rng: &mut R) -> Result<Sample> {
    if cone.is_map_cone() {
        let exact = !(cone == ConeId::PosMaps && n >= 3);
        if !exact {
            log::debug!("positive maps at n = {n}: sampling the decomposable subcone");
        }
        Ok(Sample { value: Sampled::Map(sample_map(cone, n, rng)?), exact })
    } else {
        Ok(Sample { value: Sampled::Matrix(sample_matrix(cone, (n, n), rng)?), exact: true })
    }
}

fn kraus_map(ops: Vec<CMat>) -> Result<LinMap> {
    LinMap::from_kraus(ops.into_iter().map(KrausPair::symmetric).collect())
}

fn cp_map<R: Rng + ?Sized>(n: usize, rank: Option<usize>, rng: &mut R) -> Result<LinMap> {
    let terms = rng.random_range(1..=n * n);
    let s = 1.0 / (terms as f64).sqrt();
    let ops = (0..terms)
        .map(|_| {
            let a = match rank {
                Some(k) if k < n => rng::ginibre(rng, n, k).matmul(&rng::ginibre(rng, k, n)),
                _ => rng::ginibre(rng, n, n),
            };
            a.scale_real(s)
        })
        .collect();
    kraus_map(ops)
}

/// Samples a map from a map cone; matrix tags are sampled through their
/// Choi cone and wrapped.
pub fn sample_map<R: Rng + ?Sized>(cone: ConeId, n: usize, rng: &mut R) -> Result<LinMap> {
    cone.validate(n)?;
    match cone {
        ConeId::Cp | ConeId::Psd => cp_map(n, None, rng),
        ConeId::CoCp | ConeId::Ppt => cp_map(n, None, rng)?.compose(&LinMap::transpose_map(n)),
        ConeId::Ksp(k) => cp_map(n, Some(k), rng),
        ConeId::Sep => cp_map(n, Some(1), rng),
        ConeId::PosMaps | ConeId::BlockPos => {
            let cp = cp_map(n, None, rng)?;
            let cocp = cp_map(n, None, rng)?.compose(&LinMap::transpose_map(n))?;
            cp.add(&cocp)
        }
        ConeId::KPos(k) | ConeId::SchmidtBp(k) => {
            let terms = rng.random_range(1..=2);
            let mut out: Option<LinMap> = None;
            for _ in 0..terms {
                let lambda = rng.random::<f64>() / k as f64;
                let a = rng::ginibre(rng, n, n);
                let b = rng::ginibre(rng, n, n);
                let t = LinMap::ad(&a)?
                    .compose(&LinMap::reduction(n, lambda))?
                    .compose(&LinMap::ad(&b)?)?;
                out = Some(match out {
                    None => t,
                    Some(o) => o.add(&t)?,
                });
            }
            let mut out = out.expect("at least one term");
            if rng.random_bool(0.5) {
                out = out.add(&cp_map(n, None, rng)?.scale(0.5))?;
            }
            Ok(out)
        }
    }
}

fn psd_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let terms = rng.random_range(1..=d);
    let mut x = CMat::zeros(d, d);
    for _ in 0..terms {
        x = x.add(&CMat::projector(&rng::random_vector(rng, d)));
    }
    x
}

fn schmidt_matrix<R: Rng + ?Sized>(dims: (usize, usize), k: usize, rng: &mut R) -> CMat {
    let (m, n) = dims;
    let terms = rng.random_range(1..=m * n);
    let mut x = CMat::zeros(m * n, m * n);
    for _ in 0..terms {
        let mut z = vec![ZERO; m * n];
        for _ in 0..k {
            for (zi, ti) in z.iter_mut().zip(kron_vec(&rng::random_vector(rng, m), &rng::random_vector(rng, n))) {
                *zi += ti;
            }
        }
        x = x.add(&CMat::projector(&z));
    }
    x
}

/// Samples a matrix on `C^m ⊗ C^n` from a canonical cone; map tags stand for
/// their Choi cones.
pub fn sample_matrix<R: Rng + ?Sized>(cone: ConeId, dims: (usize, usize), rng: &mut R) -> Result<CMat> {
    let (m, n) = dims;
    let d = m * n;
    cone.validate(m.min(n))?;
    let pt = |x: &CMat| partial_transpose(x, dims, Side::Second);
    Ok(match cone.choi_cone() {
        ConeId::Psd => psd_matrix(d, rng),
        ConeId::Ppt => pt(&psd_matrix(d, rng))?,
        ConeId::BlockPos => psd_matrix(d, rng).add(&pt(&psd_matrix(d, rng))?),
        ConeId::Sep => schmidt_matrix(dims, 1, rng),
        ConeId::Ksp(k) => schmidt_matrix(dims, k, rng),
        ConeId::SchmidtBp(k) => {
            let mut psi = vec![ZERO; d];
            for i in 0..m.min(n) {
                psi[i * n + i] = C64::new(1.0, 0.0);
            }
            let e = CMat::projector(&psi);
            let terms = rng.random_range(1..=2);
            let mut x = CMat::zeros(d, d);
            for _ in 0..terms {
                let lambda = rng.random::<f64>() / k as f64;
                let mut core = CMat::identity(d);
                core.add_assign_scaled(&e, C64::new(-lambda, 0.0));
                let g = kron(&rng::ginibre(rng, m, m), &rng::ginibre(rng, n, n));
                x = x.add(&g.adjoint().matmul(&core).matmul(&g));
            }
            if rng.random_bool(0.5) {
                x = x.add(&psd_matrix(d, rng).scale_real(0.5));
            }
            x.hermitian_part()
        }
        other => unreachable!("choi_cone returned map tag {other}"),
    })
}
