use super::{check_dims, Certificate, Verdict, Witness};
use crate::error::Result;
use crate::matrix::{herm_eig, partial_transpose, CMat, Side};
use crate::Tolerances;

/// PSD test: `Member` iff the smallest eigenvalue is at least `-tol.decision`.
pub fn is_psd(x: &CMat, tol: &Tolerances) -> Result<Verdict> {
    let x = x.symmetrized(tol.hermitian)?;
    let eig = herm_eig(&x, f64::INFINITY)?;
    let min = eig.min();
    Ok(if min >= -tol.decision {
        Verdict::member(Certificate::Spectrum { min_eigenvalue: min }, min)
    } else {
        Verdict::not_member(Witness::Vector(eig.vector(0)), min)
    })
}

/// PSD test of the partial transpose on the second factor.
pub fn is_ppt(x: &CMat, dims: (usize, usize), tol: &Tolerances) -> Result<Verdict> {
    check_dims(x, dims)?;
    let x = x.symmetrized(tol.hermitian)?;
    let pt = partial_transpose(&x, dims, Side::Second)?;
    let eig = herm_eig(&pt, f64::INFINITY)?;
    let min = eig.min();
    Ok(if min >= -tol.decision {
        Verdict::member(Certificate::PartialTransposeSpectrum { min_eigenvalue: min }, min)
    } else {
        Verdict::not_member(
            Witness::PartialTransposeVector { vector: eig.vector(0), first_factor: false },
            min,
        )
    })
}
