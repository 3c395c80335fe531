//! Membership oracles for cones of matrices and of maps.
//!
//! Exact spectral tests (PSD, partial-transpose PSD) decide both ways.
//! Everything else is three-valued: optimizers can only produce violation
//! witnesses, and `Member` is reported only with a checkable certificate.

mod nnls;
mod oracles;
mod sample;
mod search;
mod spectral;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::choi::LinMap;
use crate::error::{Error, Result};
use crate::matrix::{partial_transpose, real_pairing, CMat, Side, C64};

pub use nnls::{nnls_membership, realify, GenCone};
pub use oracles::{
    dual_pairing_matrix, dual_pairing_test, is_block_positive, is_k_positive, is_ksp, is_separable,
    map_membership, matrix_membership, schmidt_block_positive, schmidt_number_membership,
};
pub use sample::{sample, sample_map, sample_matrix, Sample, Sampled};
pub use search::{
    filtered_reduction_search, min_product_value, min_schmidt_value, schmidt_rank, FilterMin,
    ProductMin, SchmidtMin,
};
pub use spectral::{is_psd, is_ppt};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Member,
    NotMember,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Member => "member",
            Status::NotMember => "not-member",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// Evidence that a query lies in a cone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Certificate {
    /// Smallest eigenvalue of the query.
    Spectrum { min_eigenvalue: f64 },
    /// Smallest eigenvalue of the partial transpose of the query.
    PartialTransposeSpectrum { min_eigenvalue: f64 },
    /// Both the query and its partial transpose are PSD, and the dimensions
    /// are ones where that suffices for separability (2⊗2, 2⊗3, 1⊗n).
    PptLowDimension { min_eigenvalue: f64, min_pt_eigenvalue: f64 },
    /// Nonnegative combination of the listed generators.
    Conic { coefficients: Vec<f64>, residual: f64 },
    /// `X = a I + c E`, decided in closed form.
    Isotropic { identity_weight: f64, entangled_weight: f64, bound: f64 },
    /// Inside the separable ball around the identity.
    SeparableBall { distance: f64, radius: f64 },
    /// All pairings with a finite generator list are nonnegative.
    Pairings { min_pairing: f64, count: usize },
    /// The spectral decomposition with each eigenvector truncated to Schmidt
    /// rank `k` reproduces the query up to `residual`.
    SchmidtSpectral { k: usize, residual: f64 },
    /// No violation in `trials` seeded trials. Statistical support only;
    /// re-checkable by rerunning with the same seed.
    Sampled { trials: usize, inconclusive: usize },
    /// A registered analytic fact.
    Named(String),
}

/// Evidence that a query lies outside a cone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Witness {
    /// `v^* X v < 0`.
    Vector(Vec<C64>),
    /// `v^* X^Γ v < 0` with Γ the partial transpose on `side`.
    PartialTransposeVector { vector: Vec<C64>, first_factor: bool },
    /// `(v ⊗ w)^* X (v ⊗ w) < 0`.
    Product { v: Vec<C64>, w: Vec<C64> },
    /// `z^* X z < 0` for a unit vector of Schmidt rank at most `k`.
    Schmidt { z: Vec<C64>, k: usize },
    /// `Tr(W X) < 0` for `W` in the dual cone.
    Matrix(CMat),
    /// A generator of a finitely generated cone pairs negatively with the query.
    Generator { index: usize, pairing: f64 },
    /// `input` was pushed (by `filter`, or by the map under test) to an
    /// image that `inner` refutes; [`Witness::evaluate`] expects the image.
    Pushed { input: CMat, filter: Option<CMat>, inner: Box<Witness> },
}

impl Witness {
    /// Re-evaluates the violation value of this witness against `x`.
    pub fn evaluate(&self, x: &CMat, dims: (usize, usize)) -> Result<f64> {
        Ok(match self {
            Witness::Vector(v) | Witness::Schmidt { z: v, .. } => {
                check_len(v.len(), x.rows())?;
                x.quadratic_form(v).re
            }
            Witness::PartialTransposeVector { vector, first_factor } => {
                let side = if *first_factor { Side::First } else { Side::Second };
                let pt = partial_transpose(x, dims, side)?;
                check_len(vector.len(), x.rows())?;
                pt.quadratic_form(vector).re
            }
            Witness::Product { v, w } => {
                let z = crate::matrix::kron_vec(v, w);
                check_len(z.len(), x.rows())?;
                x.quadratic_form(&z).re
            }
            Witness::Matrix(w) => {
                if w.shape() != x.shape() {
                    return Err(Error::dims("witness", format!("{:?}", x.shape()), format!("{:?}", w.shape())));
                }
                real_pairing(w, x)
            }
            Witness::Generator { pairing, .. } => *pairing,
            Witness::Pushed { inner, .. } => inner.evaluate(x, dims)?,
        })
    }
}

fn check_len(have: usize, want: usize) -> Result<()> {
    if have != want {
        return Err(Error::dims("witness vector", want, have));
    }
    Ok(())
}

/// Work done by an oracle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub restarts: usize,
    pub iterations: usize,
}

/// Three-valued membership verdict.
///
/// `value` is the violation value for `NotMember` and the best bound found
/// for `Inconclusive`. For `Member` it is the optimizer's bound when a search
/// ran, otherwise the certificate's slack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub certificate: Option<Certificate>,
    pub witness: Option<Witness>,
    pub value: f64,
    pub evidence: Evidence,
}

impl Verdict {
    pub fn member(certificate: Certificate, value: f64) -> Self {
        Verdict {
            status: Status::Member,
            certificate: Some(certificate),
            witness: None,
            value,
            evidence: Evidence::default(),
        }
    }

    pub fn not_member(witness: Witness, value: f64) -> Self {
        Verdict {
            status: Status::NotMember,
            certificate: None,
            witness: Some(witness),
            value,
            evidence: Evidence::default(),
        }
    }

    pub fn inconclusive(bound: f64) -> Self {
        Verdict {
            status: Status::Inconclusive,
            certificate: None,
            witness: None,
            value: bound,
            evidence: Evidence::default(),
        }
    }

    pub fn with_evidence(mut self, evidence: Evidence) -> Self {
        self.evidence = evidence;
        self
    }

    pub fn is_member(&self) -> bool {
        self.status == Status::Member
    }

    pub fn is_not_member(&self) -> bool {
        self.status == Status::NotMember
    }
}

/// Canonical cones of matrices (on `M_m ⊗ M_n`) and of maps on `M_n`.
///
/// Map tags double as tags for their Choi-matrix cones: `Cp` ↔ PSD,
/// `CoCp` ↔ PPT, `KPos(k)` ↔ Schmidt-k block-positive, `Ksp(k)` ↔ Schmidt
/// number at most k, `PosMaps` ↔ block-positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConeId {
    Psd,
    Ppt,
    BlockPos,
    SchmidtBp(usize),
    Sep,
    Cp,
    CoCp,
    KPos(usize),
    Ksp(usize),
    PosMaps,
}

impl ConeId {
    /// The matrix cone holding the Choi matrices of this cone's maps.
    pub fn choi_cone(self) -> ConeId {
        match self {
            ConeId::Cp => ConeId::Psd,
            ConeId::CoCp => ConeId::Ppt,
            ConeId::KPos(k) => ConeId::SchmidtBp(k),
            ConeId::PosMaps => ConeId::BlockPos,
            ConeId::Ksp(1) => ConeId::Sep,
            other => other,
        }
    }

    pub fn is_map_cone(self) -> bool {
        matches!(self, ConeId::Cp | ConeId::CoCp | ConeId::KPos(_) | ConeId::Ksp(_) | ConeId::PosMaps)
    }

    pub fn level(self) -> Option<usize> {
        match self {
            ConeId::SchmidtBp(k) | ConeId::KPos(k) | ConeId::Ksp(k) => Some(k),
            _ => None,
        }
    }

    pub fn validate(self, n: usize) -> Result<()> {
        if let Some(k) = self.level() {
            if k == 0 || k > n {
                return Err(Error::BadK { k, max: n });
            }
        }
        Ok(())
    }
}

impl fmt::Display for ConeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeId::Psd => f.write_str("psd"),
            ConeId::Ppt => f.write_str("ppt"),
            ConeId::BlockPos => f.write_str("blockpos"),
            ConeId::SchmidtBp(k) => write!(f, "schmidtbp:{k}"),
            ConeId::Sep => f.write_str("sep"),
            ConeId::Cp => f.write_str("cp"),
            ConeId::CoCp => f.write_str("cocp"),
            ConeId::KPos(k) => write!(f, "kpos:{k}"),
            ConeId::Ksp(k) => write!(f, "ksp:{k}"),
            ConeId::PosMaps => f.write_str("pos"),
        }
    }
}

impl FromStr for ConeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (tag, level) = match lower.split_once(':') {
            Some((t, k)) => {
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::Unsupported(format!("bad cone level in `{s}`")))?;
                (t.to_string(), Some(k))
            }
            None => (lower.clone(), None),
        };
        let need = |l: Option<usize>| l.ok_or_else(|| Error::Unsupported(format!("cone `{s}` needs a level, e.g. `{tag}:2`")));
        let id = match (tag.as_str(), level) {
            ("psd", None) => ConeId::Psd,
            ("ppt", None) => ConeId::Ppt,
            ("blockpos", None) => ConeId::BlockPos,
            ("sep", None) => ConeId::Sep,
            ("cp", None) => ConeId::Cp,
            ("cocp", None) => ConeId::CoCp,
            ("pos", None) | ("posmaps", None) => ConeId::PosMaps,
            ("schmidtbp", l) => ConeId::SchmidtBp(need(l)?),
            ("kpos", l) => ConeId::KPos(need(l)?),
            ("ksp", l) => ConeId::Ksp(need(l)?),
            _ => return Err(Error::Unsupported(format!("unknown cone `{s}`"))),
        };
        Ok(id)
    }
}

/// Infers `(n, n)` dimensions for a square matrix of size `n²`.
pub fn square_dims(x: &CMat) -> Result<(usize, usize)> {
    let d = x.ensure_square()?;
    let n = (d as f64).sqrt().round() as usize;
    if n * n != d {
        return Err(Error::dims("bipartite dimensions", "a perfect-square size", d));
    }
    Ok((n, n))
}

pub(crate) fn check_dims(x: &CMat, dims: (usize, usize)) -> Result<()> {
    let d = dims.0 * dims.1;
    if x.shape() != (d, d) {
        return Err(Error::dims(
            "bipartite operator",
            format!("{d}x{d} for dims {dims:?}"),
            format!("{}x{}", x.rows(), x.cols()),
        ));
    }
    Ok(())
}

pub(crate) fn choi_dims(map: &LinMap) -> (usize, usize) {
    (map.n(), map.n())
}
