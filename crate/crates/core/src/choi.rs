//! Linear maps on `M_n` stored through their Choi matrices.
//!
//! `C_Φ = (id ⊗ Φ)(E) = Σ_{ij} e_i e_j^* ⊗ Φ(e_i e_j^*)`, so block `(i, j)`
//! of the Choi matrix is `Φ(e_i e_j^*)`. A generalized Kraus pair `(A, B)`
//! realizes `X ↦ A X B^*` and contributes `vec(A) vec(B)^*` to `C_Φ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, herm_eig, max_entangled, swap_operator, CMat, C64, ZERO};
use crate::rng;

/// One term `X ↦ left · X · right^*` of a generalized Kraus decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrausPair {
    pub left: CMat,
    pub right: CMat,
}

impl KrausPair {
    pub fn symmetric(a: CMat) -> Self {
        KrausPair {
            left: a.clone(),
            right: a,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.left == self.right
    }
}

/// A linear map `Φ: M_n → M_n`.
#[derive(Clone, Debug)]
pub struct LinMap {
    n: usize,
    choi: CMat,
    kraus: Option<Vec<KrausPair>>,
    hermiticity_preserving: bool,
}

const KRAUS_CHECK_TOL: f64 = 1e-10;

fn hermitian_flag(choi: &CMat) -> bool {
    choi.hermitian_deviation() <= 1e-10 * choi.max_abs().max(1.0)
}

fn choi_of_pairs(n: usize, pairs: &[KrausPair]) -> CMat {
    let mut c = CMat::zeros(n * n, n * n);
    for p in pairs {
        let a = matrix::vec(&p.left);
        let b = matrix::vec(&p.right);
        c = c.add(&CMat::outer(&a, &b));
    }
    c
}

impl LinMap {
    /// Wraps a Choi matrix of size `n² x n²`.
    pub fn from_choi(n: usize, choi: CMat) -> Result<Self> {
        if n == 0 || choi.shape() != (n * n, n * n) {
            return Err(Error::dims(
                "Choi matrix",
                format!("{0}x{0}", n * n),
                format!("{}x{}", choi.rows(), choi.cols()),
            ));
        }
        let hermiticity_preserving = hermitian_flag(&choi);
        Ok(LinMap {
            n,
            choi,
            kraus: None,
            hermiticity_preserving,
        })
    }

    /// Builds the map from a Choi matrix whose size determines `n`.
    pub fn from_choi_matrix(choi: CMat) -> Result<Self> {
        let d = choi.ensure_square()?;
        let n = (d as f64).sqrt().round() as usize;
        if n * n != d {
            return Err(Error::dims("Choi matrix", "a perfect-square size", d));
        }
        LinMap::from_choi(n, choi)
    }

    /// Builds `X ↦ Σ A_i X B_i^*`; the pairs are cached alongside the Choi matrix.
    pub fn from_kraus(pairs: Vec<KrausPair>) -> Result<Self> {
        let first = pairs.first().ok_or(Error::EmptyCone)?;
        let n = first.left.ensure_square()?;
        for p in &pairs {
            for m in [&p.left, &p.right] {
                if m.shape() != (n, n) {
                    return Err(Error::dims(
                        "Kraus operator",
                        format!("{n}x{n}"),
                        format!("{}x{}", m.rows(), m.cols()),
                    ));
                }
            }
        }
        let choi = choi_of_pairs(n, &pairs);
        let mut map = LinMap::from_choi(n, choi)?;
        map.kraus = Some(pairs);
        Ok(map)
    }

    /// `C_Φ = Σ e_i e_j^* ⊗ Φ(e_i e_j^*)`, after checking linearity of `action`
    /// on a few seeded random pairs.
    pub fn from_action(n: usize, action: impl Fn(&CMat) -> CMat) -> Result<Self> {
        if n == 0 {
            return Err(Error::dims("map dimension", "n >= 1", 0));
        }
        let eval = |x: &CMat| -> Result<CMat> {
            let y = action(x);
            if y.shape() != (n, n) {
                return Err(Error::dims(
                    "map output",
                    format!("{n}x{n}"),
                    format!("{}x{}", y.rows(), y.cols()),
                ));
            }
            Ok(y)
        };
        let mut choi = CMat::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                choi.set_block(i, j, &eval(&CMat::unit(n, n, i, j))?);
            }
        }
        let mut r = rng::stream(0x11ea, "linearity", n as u64);
        for _ in 0..3 {
            let x = rng::ginibre(&mut r, n, n);
            let y = rng::ginibre(&mut r, n, n);
            let a = rng::complex_gaussian(&mut r);
            let b = rng::complex_gaussian(&mut r);
            let lhs = eval(&x.scale(a).add(&y.scale(b)))?;
            let rhs = eval(&x)?.scale(a).add(&eval(&y)?.scale(b));
            let dev = lhs.distance(&rhs);
            if dev > 1e-9 * rhs.frobenius_norm().max(1.0) {
                return Err(Error::NonLinearAction { deviation: dev });
            }
        }
        LinMap::from_choi(n, choi)
    }

    /// `Ad_A(X) = A^* X A`.
    pub fn ad(a: &CMat) -> Result<Self> {
        a.ensure_square()?;
        LinMap::from_kraus(vec![KrausPair::symmetric(a.adjoint())])
    }

    pub fn identity(n: usize) -> Self {
        LinMap::from_kraus(vec![KrausPair::symmetric(CMat::identity(n))]).expect("square identity")
    }

    /// The transpose map `T`; its Choi matrix is the swap operator.
    pub fn transpose_map(n: usize) -> Self {
        LinMap::from_choi(n, swap_operator(n)).expect("swap has Choi shape")
    }

    /// `X ↦ Tr(X) I`.
    pub fn trace_map(n: usize) -> Self {
        LinMap::from_choi(n, CMat::identity(n * n)).expect("identity has Choi shape")
    }

    /// `Φ_λ(X) = Tr(X) I − λ X`, with Choi matrix `I ⊗ I − λ E`.
    ///
    /// `Φ_λ` is k-positive exactly when `λ ≤ 1/k`.
    pub fn reduction(n: usize, lambda: f64) -> Self {
        let c = CMat::identity(n * n).sub(&max_entangled(n).scale_real(lambda));
        LinMap::from_choi(n, c).expect("Choi shape")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    pub fn into_choi(self) -> CMat {
        self.choi
    }

    pub fn cached_kraus(&self) -> Option<&[KrausPair]> {
        self.kraus.as_deref()
    }

    pub fn is_hermiticity_preserving(&self) -> bool {
        self.hermiticity_preserving
    }

    /// Returns a copy with the Kraus cache filled in.
    pub fn with_kraus(mut self) -> Self {
        if self.kraus.is_none() {
            self.kraus = Some(self.kraus_from_choi());
        }
        self
    }

    /// Generalized Kraus pairs reproducing this map.
    ///
    /// A positive semidefinite Choi matrix gives the canonical CP form with
    /// `left == right` from its eigendecomposition. Anything else goes
    /// through the singular value decomposition of `C_Φ`.
    pub fn kraus_from_choi(&self) -> Vec<KrausPair> {
        if let Some(k) = &self.kraus {
            return k.clone();
        }
        let n = self.n;
        let scale = self.choi.max_abs().max(1.0);
        let unvec = |v: &[C64], s: f64| -> CMat {
            matrix::unvec(&v.iter().map(|z| z * s).collect::<Vec<_>>(), n, n).expect("n² entries")
        };
        if self.hermiticity_preserving {
            let eig = herm_eig(&self.choi.hermitian_part(), f64::INFINITY).expect("square");
            if eig.min() >= -1e-13 * scale {
                let pairs: Vec<KrausPair> = (0..n * n)
                    .rev()
                    .filter(|&k| eig.values[k] > 1e-15 * scale)
                    .map(|k| KrausPair::symmetric(unvec(&eig.vector(k), eig.values[k].sqrt())))
                    .collect();
                return if pairs.is_empty() {
                    vec![KrausPair::symmetric(CMat::zeros(n, n))]
                } else {
                    pairs
                };
            }
        }
        let s = matrix::svd(&self.choi, 1e-15 * scale);
        let pairs: Vec<KrausPair> = s
            .values
            .iter()
            .zip(s.left.iter().zip(&s.right))
            .map(|(&sv, (u, v))| KrausPair {
                left: unvec(u, sv.sqrt()),
                right: unvec(v, sv.sqrt()),
            })
            .collect();
        if pairs.is_empty() {
            vec![KrausPair::symmetric(CMat::zeros(n, n))]
        } else {
            pairs
        }
    }

    /// Frobenius residual between the Choi matrix and the one rebuilt from `pairs`.
    pub fn kraus_residual(&self, pairs: &[KrausPair]) -> f64 {
        choi_of_pairs(self.n, pairs).distance(&self.choi)
    }

    pub fn check_kraus_cache(&self) -> bool {
        match &self.kraus {
            None => true,
            Some(p) => self.kraus_residual(p) <= KRAUS_CHECK_TOL * self.choi.frobenius_norm().max(1.0),
        }
    }

    /// `Φ(X)`.
    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        let n = self.n;
        if x.shape() != (n, n) {
            return Err(Error::dims(
                "map input",
                format!("{n}x{n}"),
                format!("{}x{}", x.rows(), x.cols()),
            ));
        }
        if let Some(pairs) = &self.kraus {
            let mut out = CMat::zeros(n, n);
            for p in pairs {
                out = out.add(&p.left.matmul(x).matmul(&p.right.adjoint()));
            }
            return Ok(out);
        }
        Ok(self.apply_by_blocks(x))
    }

    /// `Φ(X) = Σ_{ij} X_{ij} Φ(e_i e_j^*)` read off the Choi blocks.
    fn apply_by_blocks(&self, x: &CMat) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let s = x[(i, j)];
                if s == ZERO {
                    continue;
                }
                for k in 0..n {
                    for l in 0..n {
                        out[(k, l)] += s * self.choi[(i * n + k, j * n + l)];
                    }
                }
            }
        }
        out
    }

    /// `(id_m ⊗ Φ)(X)` for `X ∈ M_m ⊗ M_n`: Φ applied to every `n x n` block.
    pub fn apply_amplified(&self, m: usize, x: &CMat) -> Result<CMat> {
        let n = self.n;
        let d = m * n;
        if x.shape() != (d, d) {
            return Err(Error::dims(
                "amplified input",
                format!("{d}x{d}"),
                format!("{}x{}", x.rows(), x.cols()),
            ));
        }
        let mut out = CMat::zeros(d, d);
        for a in 0..m {
            for b in 0..m {
                let blk = x.block(a, b, n);
                out.set_block(a, b, &self.apply(&blk)?);
            }
        }
        Ok(out)
    }

    /// `(Φ ⊗ id_m)(X)` for `X ∈ M_n ⊗ M_m`.
    pub fn apply_left_amplified(&self, m: usize, x: &CMat) -> Result<CMat> {
        let n = self.n;
        let d = n * m;
        if x.shape() != (d, d) {
            return Err(Error::dims(
                "left-amplified input",
                format!("{d}x{d}"),
                format!("{}x{}", x.rows(), x.cols()),
            ));
        }
        let mut out = CMat::zeros(d, d);
        for k in 0..m {
            for l in 0..m {
                let slice = CMat::from_fn(n, n, |i, j| x[(i * m + k, j * m + l)]);
                let img = self.apply(&slice)?;
                for i in 0..n {
                    for j in 0..n {
                        out[(i * m + k, j * m + l)] = img[(i, j)];
                    }
                }
            }
        }
        Ok(out)
    }

    fn ensure_same_n(&self, other: &LinMap) -> Result<()> {
        if self.n != other.n {
            return Err(Error::dims("map composition", self.n, other.n));
        }
        Ok(())
    }

    /// `self ∘ other`, with `C_{Φ∘Ψ} = (id ⊗ Φ)(C_Ψ)`.
    pub fn compose(&self, other: &LinMap) -> Result<LinMap> {
        self.ensure_same_n(other)?;
        let choi = self.apply_amplified(self.n, &other.choi)?;
        let mut out = LinMap::from_choi(self.n, choi)?;
        if let (Some(outer), Some(inner)) = (&self.kraus, &other.kraus) {
            if outer.len() * inner.len() <= 4 * self.n * self.n {
                let pairs = outer
                    .iter()
                    .flat_map(|p| {
                        inner.iter().map(move |q| KrausPair {
                            left: p.left.matmul(&q.left),
                            right: p.right.matmul(&q.right),
                        })
                    })
                    .collect();
                out.kraus = Some(pairs);
                debug_assert!(out.check_kraus_cache());
            }
        }
        Ok(out)
    }

    /// `Φ^†`, defined by `Tr(Φ(X) Y) = Tr(X Φ^†(Y))`; its Choi matrix is `F C_Φ^T F`.
    pub fn adjoint(&self) -> LinMap {
        let f = swap_operator(self.n);
        let choi = f.matmul(&self.choi.transpose()).matmul(&f);
        let mut out = LinMap::from_choi(self.n, choi).expect("same shape");
        out.kraus = self.kraus.as_ref().map(|pairs| {
            pairs
                .iter()
                .map(|p| KrausPair {
                    left: p.right.adjoint(),
                    right: p.left.adjoint(),
                })
                .collect()
        });
        out
    }

    /// `T ∘ Φ ∘ T`; its Choi matrix is `C_Φ^T`.
    pub fn transpose_twirl(&self) -> LinMap {
        let mut out = LinMap::from_choi(self.n, self.choi.transpose()).expect("same shape");
        out.kraus = self.kraus.as_ref().map(|pairs| {
            pairs
                .iter()
                .map(|p| KrausPair {
                    left: p.right.conj(),
                    right: p.left.conj(),
                })
                .collect()
        });
        out
    }

    pub fn scale(&self, s: f64) -> LinMap {
        LinMap::from_choi(self.n, self.choi.scale_real(s)).expect("same shape")
    }

    pub fn add(&self, other: &LinMap) -> Result<LinMap> {
        self.ensure_same_n(other)?;
        LinMap::from_choi(self.n, self.choi.add(&other.choi))
    }

    /// Frobenius distance between Choi matrices.
    pub fn distance(&self, other: &LinMap) -> f64 {
        self.choi.distance(&other.choi)
    }

    /// Checks `(id ⊗ Φ)(E) = ((T ∘ Φ^† ∘ T) ⊗ id)(E)` with the right side
    /// computed through the adjoint, the transpose twirl and a left-slot
    /// amplification.
    pub fn verify_flip_identity(&self, tol: f64) -> FlipReport {
        let n = self.n;
        let e = max_entangled(n);
        let left = self.apply_amplified(n, &e).expect("E has Choi shape");
        let twisted = self.adjoint().transpose_twirl();
        let right = twisted.apply_left_amplified(n, &e).expect("E has Choi shape");
        let gap = left.distance(&right);
        let scale = self.choi.frobenius_norm().max(1.0);
        FlipReport {
            gap,
            scale,
            pass: gap <= tol * scale,
        }
    }
}

/// Outcome of the left/right Choi flip identity check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlipReport {
    pub gap: f64,
    pub scale: f64,
    pub pass: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{kron, partial_transpose, trace_pairing, Side, ONE};
    use crate::rng::{self, StreamRng};

    fn random_map(r: &mut StreamRng, n: usize) -> LinMap {
        LinMap::from_choi(n, rng::ginibre(r, n * n, n * n)).unwrap()
    }

    fn basis_oracle(map: &LinMap, x: &CMat) -> CMat {
        // Σ x_ij Φ(E_ij) with Φ(E_ij) recovered through apply on matrix units
        let n = map.n();
        let mut out = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let img = map.apply(&CMat::unit(n, n, i, j)).unwrap();
                out.add_assign_scaled(&img, x[(i, j)]);
            }
        }
        out
    }

    #[test]
    fn action_examples() {
        let id = LinMap::from_action(2, |x| x.clone()).unwrap();
        assert_eq!(id.choi(), &max_entangled(2));
        let t = LinMap::from_action(2, |x| x.transpose()).unwrap();
        assert_eq!(t.choi(), &swap_operator(2));
        let tr = LinMap::from_action(2, |x| CMat::identity(2).scale(x.trace())).unwrap();
        assert_eq!(tr.choi(), &CMat::identity(4));
    }

    #[test]
    fn action_rejects_nonlinear() {
        let err = LinMap::from_action(2, |x| {
            let mut y = x.clone();
            y[(0, 0)] += ONE;
            y
        });
        assert!(matches!(err, Err(Error::NonLinearAction { .. })));
        let sq = LinMap::from_action(2, |x| x.matmul(x));
        assert!(matches!(sq, Err(Error::NonLinearAction { .. })));
    }

    #[test]
    fn ad_examples() {
        assert_eq!(LinMap::ad(&CMat::identity(2)).unwrap().choi(), &max_entangled(2));
        let m = LinMap::ad(&CMat::unit(2, 2, 0, 1)).unwrap();
        let e = herm_eig(m.choi(), 1e-12).unwrap();
        assert!((m.choi().trace().re - 1.0).abs() < 1e-15);
        assert!(e.values[..3].iter().all(|v| v.abs() < 1e-12));
        let mut r = rng::stream(3, "ad", 0);
        for _ in 0..20 {
            let a = rng::ginibre(&mut r, 3, 3);
            let m = LinMap::ad(&a).unwrap();
            assert!(herm_eig(m.choi(), 1e-10).unwrap().min() >= -1e-10);
        }
        assert!(matches!(LinMap::ad(&CMat::zeros(2, 3)), Err(Error::NonSquare { .. })));
    }

    #[test]
    fn kraus_examples() {
        let id = LinMap::from_choi(2, max_entangled(2)).unwrap();
        let k = id.kraus_from_choi();
        assert_eq!(k.len(), 1);
        let x = CMat::from_fn(2, 2, |i, j| C64::new(i as f64 + 1.0, j as f64 - 0.5));
        let via = k[0].left.matmul(&x).matmul(&k[0].right.adjoint());
        assert!(via.distance(&x) < 1e-12);

        let mut r = rng::stream(5, "kraus", 0);
        let a = rng::ginibre(&mut r, 3, 3);
        let ad = LinMap::from_choi(3, LinMap::ad(&a).unwrap().into_choi()).unwrap();
        let k = ad.kraus_from_choi();
        assert_eq!(k.len(), 1);
        for i in 0..3 {
            for j in 0..3 {
                let u = CMat::unit(3, 3, i, j);
                let want = a.adjoint().matmul(&u).matmul(&a);
                let got = k[0].left.matmul(&u).matmul(&k[0].right.adjoint());
                assert!(got.distance(&want) < 1e-10);
            }
        }
        for _ in 0..50 {
            let m = random_map(&mut r, 2);
            let k = m.kraus_from_choi();
            assert!(m.kraus_residual(&k) < 1e-10 * m.choi().frobenius_norm());
        }
    }

    #[test]
    fn apply_paths_agree() {
        let mut r = rng::stream(6, "apply", 0);
        let x = rng::ginibre(&mut r, 2, 2);
        assert_eq!(LinMap::identity(2).apply(&x).unwrap(), x);
        let tr = LinMap::trace_map(2);
        assert_eq!(tr.apply(&CMat::unit(2, 2, 0, 1)).unwrap(), CMat::zeros(2, 2));
        let a = rng::ginibre(&mut r, 3, 3);
        let x3 = rng::ginibre(&mut r, 3, 3);
        let ad = LinMap::ad(&a).unwrap();
        let lit = a.adjoint().matmul(&x3).matmul(&a);
        assert!(ad.apply(&x3).unwrap().distance(&lit) < 1e-12 * lit.frobenius_norm().max(1.0));
        for _ in 0..20 {
            let m = random_map(&mut r, 3);
            let mk = m.clone().with_kraus();
            assert!(mk.check_kraus_cache());
            let x = rng::ginibre(&mut r, 3, 3);
            let oracle = basis_oracle(&m, &x);
            assert!(m.apply(&x).unwrap().distance(&oracle) < 1e-10 * oracle.frobenius_norm().max(1.0));
            assert!(mk.apply(&x).unwrap().distance(&oracle) < 1e-10 * oracle.frobenius_norm().max(1.0));
        }
        assert!(LinMap::identity(2).apply(&CMat::identity(3)).is_err());
    }

    #[test]
    fn amplified_examples() {
        let mut r = rng::stream(7, "amp", 0);
        let x = rng::ginibre(&mut r, 4, 4);
        assert_eq!(LinMap::identity(2).apply_amplified(2, &x).unwrap(), x);
        let t = LinMap::transpose_map(2);
        assert_eq!(t.apply_amplified(2, &max_entangled(2)).unwrap(), swap_operator(2));
        let phi = random_map(&mut r, 2);
        let y = rng::ginibre(&mut r, 3, 3);
        let z = rng::ginibre(&mut r, 2, 2);
        let got = phi.apply_amplified(3, &kron(&y, &z)).unwrap();
        let want = kron(&y, &phi.apply(&z).unwrap());
        assert!(got.distance(&want) < 1e-12 * want.frobenius_norm());
        let left = phi.apply_left_amplified(3, &kron(&z, &y)).unwrap();
        assert!(left.distance(&kron(&phi.apply(&z).unwrap(), &y)) < 1e-12 * want.frobenius_norm());
        assert!(phi.apply_amplified(3, &x).is_err());
    }

    #[test]
    fn compose_examples() {
        let mut r = rng::stream(8, "compose", 0);
        let phi = random_map(&mut r, 2);
        assert!(phi.compose(&LinMap::identity(2)).unwrap().distance(&phi) < 1e-14);
        let t = LinMap::transpose_map(2);
        assert_eq!(t.compose(&t).unwrap().choi(), &max_entangled(2));
        let a = rng::ginibre(&mut r, 2, 2);
        let b = rng::ginibre(&mut r, 2, 2);
        let lhs = LinMap::ad(&a).unwrap().compose(&LinMap::ad(&b).unwrap()).unwrap();
        let rhs = LinMap::ad(&b.matmul(&a)).unwrap();
        assert!(lhs.choi().max_abs_diff(rhs.choi()) <= 1e-12 * rhs.choi().max_abs().max(1.0));
        assert!(phi.compose(&LinMap::identity(3)).is_err());
    }

    #[test]
    fn adjoint_examples() {
        let mut r = rng::stream(9, "adj", 0);
        let id = LinMap::identity(2);
        assert_eq!(id.adjoint().choi(), id.choi());
        let a = rng::ginibre(&mut r, 3, 3);
        let ad_dag = LinMap::ad(&a).unwrap().adjoint();
        let want = LinMap::ad(&a.adjoint()).unwrap();
        assert!(ad_dag.distance(&want) < 1e-12);
        for _ in 0..50 {
            let m = random_map(&mut r, 2);
            assert!(m.adjoint().adjoint().distance(&m) < 1e-14);
            let x = rng::random_hermitian(&mut r, 2);
            let y = rng::random_hermitian(&mut r, 2);
            let lhs = trace_pairing(&m.apply(&x).unwrap(), &y).unwrap();
            let rhs = trace_pairing(&x, &m.adjoint().apply(&y).unwrap()).unwrap();
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn twirl_examples() {
        let mut r = rng::stream(10, "twirl", 0);
        let id = LinMap::identity(2);
        assert_eq!(id.transpose_twirl().choi(), id.choi());
        let t = LinMap::transpose_map(2);
        assert_eq!(t.transpose_twirl().choi(), t.choi());
        let a = rng::ginibre(&mut r, 2, 2);
        let tw = LinMap::ad(&a).unwrap().transpose_twirl();
        let want = LinMap::ad(&a.conj()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let u = CMat::unit(2, 2, i, j);
                assert!(tw.apply(&u).unwrap().distance(&want.apply(&u).unwrap()) < 1e-12);
            }
        }
        let m = random_map(&mut r, 3);
        let t3 = LinMap::transpose_map(3);
        let via = t3.compose(&m).unwrap().compose(&t3).unwrap();
        assert!(via.distance(&m.transpose_twirl()) < 1e-10);
    }

    #[test]
    fn flip_identity() {
        assert_eq!(LinMap::identity(2).verify_flip_identity(1e-10).gap, 0.0);
        let mut r = rng::stream(12, "flip", 0);
        let a = rng::ginibre(&mut r, 3, 3);
        let ad = LinMap::ad(&a).unwrap();
        assert!(ad.verify_flip_identity(1e-10).pass);
        // (id ⊗ Ad_A)(E) = (Ad_{A^T} ⊗ id)(E)
        let e = max_entangled(3);
        let lhs = ad.apply_amplified(3, &e).unwrap();
        let rhs = LinMap::ad(&a.transpose()).unwrap().apply_left_amplified(3, &e).unwrap();
        assert!(lhs.distance(&rhs) < 1e-10 * lhs.frobenius_norm());
        for _ in 0..100 {
            let m = random_map(&mut r, 2);
            assert!(m.verify_flip_identity(1e-10).pass);
        }
    }

    #[test]
    fn co_cp_choi_is_partial_transpose() {
        let mut r = rng::stream(13, "cocp", 0);
        let m = random_map(&mut r, 2);
        let c = m.compose(&LinMap::transpose_map(2)).unwrap();
        let pt = partial_transpose(m.choi(), (2, 2), Side::First).unwrap();
        assert!(c.choi().distance(&pt) < 1e-14);
    }
}
