//! Cones of maps on `M_n`, their link to operator-system structures, and
//! sampled checks of invariance, semigroup and symmetry properties.
//!
//! Every check is refutation-exact: a reported violation carries a witness
//! that re-evaluates to a negative value. `Supported` is statistical.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::choi::LinMap;
use crate::cones::{
    dual_pairing_test, is_psd, map_membership, matrix_membership, min_product_value, nnls_membership,
    sample_map, ConeId, GenCone, Status, Verdict, Witness,
};
use crate::config::SearchOpts;
use crate::error::{Error, Result};
use crate::matrix::{kron, max_entangled_vector, swap_operator, CMat, C64};
use crate::opsys::{cp_between, dual_system, OSystem, SystemKind, SystemTag};
use crate::rng;

#[derive(Clone, Debug)]
pub enum MapConeKind {
    Canonical(ConeId),
    /// Cone generated by the maps. Membership is NNLS over their Choi
    /// matrices unless `oracle` names a canonical cone to ask instead.
    Generated { gens: Vec<LinMap>, oracle: Option<ConeId> },
    /// `Φ ∈ C` iff `C_Φ` lies in the top cone of the structure.
    Induced(OSystem),
    /// `{Φ^† : Φ ∈ C}`.
    Adjoint(Box<MapCone>),
}

#[derive(Clone, Debug)]
pub struct MapCone {
    n: usize,
    kind: MapConeKind,
}

impl MapCone {
    pub fn canonical(n: usize, cone: ConeId) -> Result<Self> {
        if !cone.is_map_cone() {
            return Err(Error::Unsupported(format!("`{cone}` is a matrix cone, not a map cone")));
        }
        cone.validate(n)?;
        Ok(MapCone { n, kind: MapConeKind::Canonical(cone) })
    }

    /// Entanglement-breaking maps.
    pub fn superpositive(n: usize) -> Self {
        MapCone { n, kind: MapConeKind::Canonical(ConeId::Ksp(1)) }
    }

    pub fn generated(gens: Vec<LinMap>, oracle: Option<ConeId>) -> Result<Self> {
        let n = gens.first().ok_or(Error::EmptyCone)?.n();
        if let Some(g) = gens.iter().find(|g| g.n() != n) {
            return Err(Error::dims("cone generator", n, g.n()));
        }
        if let Some(c) = oracle {
            c.validate(n)?;
        }
        Ok(MapCone { n, kind: MapConeKind::Generated { gens, oracle } })
    }

    pub fn induced(o: OSystem) -> Self {
        MapCone { n: o.n(), kind: MapConeKind::Induced(o) }
    }

    pub fn adjoint_cone(&self) -> MapCone {
        match &self.kind {
            MapConeKind::Adjoint(inner) => (**inner).clone(),
            _ => MapCone { n: self.n, kind: MapConeKind::Adjoint(Box::new(self.clone())) },
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &MapConeKind {
        &self.kind
    }

    pub fn label(&self) -> String {
        match &self.kind {
            MapConeKind::Canonical(c) => c.to_string(),
            MapConeKind::Generated { gens, .. } => format!("generated({})", gens.len()),
            MapConeKind::Induced(o) => match o.tag() {
                Some(t) => format!("cp({t})"),
                None => "cp(generated)".into(),
            },
            MapConeKind::Adjoint(c) => format!("adjoint({})", c.label()),
        }
    }

    pub fn contains(&self, phi: &LinMap, opts: &SearchOpts) -> Result<Verdict> {
        if phi.n() != self.n {
            return Err(Error::dims("map cone query", self.n, phi.n()));
        }
        match &self.kind {
            MapConeKind::Canonical(c) => map_membership(*c, phi, opts),
            MapConeKind::Generated { oracle: Some(c), .. } => map_membership(*c, phi, opts),
            MapConeKind::Generated { gens, oracle: None } => {
                let cone = GenCone::new(self.n * self.n, gens.iter().map(|g| g.choi().clone()).collect())?;
                nnls_membership(&cone, phi.choi(), opts.margin())
            }
            MapConeKind::Induced(o) => o.contains(phi.choi(), self.n, opts),
            MapConeKind::Adjoint(c) => c.contains(&phi.adjoint(), opts),
        }
    }

    /// Membership of a matrix in the Choi cone.
    pub fn choi_contains(&self, x: &CMat, opts: &SearchOpts) -> Result<Verdict> {
        match &self.kind {
            MapConeKind::Canonical(c) | MapConeKind::Generated { oracle: Some(c), .. } => {
                matrix_membership(*c, x, (self.n, self.n), opts)
            }
            MapConeKind::Induced(o) => o.contains(x, self.n, opts),
            _ => self.contains(&LinMap::from_choi(self.n, x.clone())?, opts),
        }
    }

    /// The `idx`-th sample of the cone under `seed`.
    pub fn sample(&self, seed: u64, idx: u64) -> Result<LinMap> {
        let mut r = rng::stream(seed, "mapcone-sample", idx);
        match &self.kind {
            MapConeKind::Canonical(c) => sample_map(*c, self.n, &mut r),
            MapConeKind::Generated { gens, .. } => {
                let mut out = gens[r.random_range(0..gens.len())].scale(r.random::<f64>() + 0.1);
                for _ in 0..r.random_range(0..3) {
                    let g = &gens[r.random_range(0..gens.len())];
                    out = out.add(&g.scale(r.random::<f64>()))?;
                }
                Ok(out)
            }
            MapConeKind::Induced(o) => match o.kind() {
                SystemKind::Canonical(t) => {
                    sample_map(mapcone_tag(*t, self.n), self.n, &mut r)
                }
                _ => {
                    let gens = o.generators(&SearchOpts::default().with_seed(seed))?;
                    let mut x = CMat::zeros(self.n * self.n, self.n * self.n);
                    for _ in 0..r.random_range(1..=3) {
                        x.add_assign_scaled(&gens[r.random_range(0..gens.len())], C64::new(r.random::<f64>() + 0.1, 0.0));
                    }
                    LinMap::from_choi(self.n, x)
                }
            },
            MapConeKind::Adjoint(c) => Ok(c.sample(seed, idx)?.adjoint()),
        }
    }

    /// Whether [`MapCone::sample`] covers the whole cone (false only for
    /// positive maps at `n ≥ 3`, where the decomposable part is sampled).
    pub fn exact_sampling(&self) -> bool {
        match &self.kind {
            MapConeKind::Canonical(c) => !(*c == ConeId::PosMaps && self.n >= 3),
            MapConeKind::Induced(o) => !(matches!(o.tag(), Some(SystemTag::Omin | SystemTag::OminK(1))) && self.n >= 3),
            MapConeKind::Adjoint(c) => c.exact_sampling(),
            MapConeKind::Generated { .. } => true,
        }
    }
}

fn mapcone_tag(t: SystemTag, n: usize) -> ConeId {
    match t {
        SystemTag::Naive => ConeId::Cp,
        SystemTag::Omin => ConeId::PosMaps,
        SystemTag::Omax => ConeId::Ksp(1),
        SystemTag::OminK(k) if k >= n => ConeId::Cp,
        SystemTag::OminK(1) => ConeId::PosMaps,
        SystemTag::OminK(k) => ConeId::KPos(k),
        SystemTag::OmaxK(k) => ConeId::Ksp(k),
        SystemTag::PptSys => ConeId::CoCp,
    }
}

/// Choi matrices of the generators, or of `samples` samples.
pub fn choi_cone(c: &MapCone, samples: usize, seed: u64) -> Result<GenCone> {
    let d = c.n * c.n;
    match &c.kind {
        MapConeKind::Generated { gens, .. } => GenCone::new(d, gens.iter().map(|g| g.choi().clone()).collect()),
        _ => {
            let chois = (0..samples as u64)
                .map(|i| c.sample(seed, i).map(LinMap::into_choi))
                .collect::<Result<Vec<_>>>()?;
            GenCone::from_nonzero(d, chois)
        }
    }
}

/// The structure whose top cone is the Choi cone of `c`. Canonical cones map
/// to their catalog structures; others must pass the right-invariance check.
pub fn os_from_mapcone(c: &MapCone, samples: usize, opts: &SearchOpts) -> Result<OSystem> {
    let n = c.n;
    let tag = match &c.kind {
        MapConeKind::Canonical(id) => Some(match id {
            ConeId::Cp => SystemTag::Naive,
            ConeId::PosMaps => SystemTag::Omin,
            ConeId::Ksp(1) => SystemTag::Omax,
            ConeId::KPos(1) => SystemTag::Omin,
            ConeId::KPos(k) => SystemTag::OminK(*k),
            ConeId::Ksp(k) => SystemTag::OmaxK(*k),
            ConeId::CoCp => SystemTag::PptSys,
            other => return Err(Error::Unsupported(format!("`{other}` is not a map cone"))),
        }),
        MapConeKind::Induced(o) => return Ok(o.clone()),
        _ => None,
    };
    if let Some(t) = tag {
        return OSystem::canonical(n, t);
    }
    let rep = check_right_cp_invariance(c, samples, opts)?;
    if rep.status == ReportStatus::Refuted {
        let v = &rep.violations[0];
        return Err(Error::NotRightCpInvariant(format!("trial {}: {}", v.trial, v.description)));
    }
    Ok(OSystem::generated_unchecked(n, choi_cone(c, samples, opts.seed)?))
}

/// The map cone `{Φ : C_Φ ∈ C_n(O)}`.
pub fn mapcone_from_os(o: &OSystem) -> MapCone {
    MapCone::induced(o.clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportStatus {
    Supported,
    Refuted,
}

impl std::fmt::Display for ReportStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReportStatus::Supported => "supported",
            ReportStatus::Refuted => "refuted",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: usize,
    pub description: String,
    /// Named inputs (Choi matrices of maps, filter matrices).
    pub inputs: Vec<(String, CMat)>,
    /// Re-checkable against the matrix named by `checked`.
    pub witness: Witness,
    pub checked: String,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub trials: usize,
    pub violations: Vec<Violation>,
    pub status: ReportStatus,
    pub seed: u64,
    pub inconclusive: usize,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl PropertyReport {
    pub fn new(property: impl Into<String>, seed: u64) -> Self {
        PropertyReport {
            property: property.into(),
            trials: 0,
            violations: Vec::new(),
            status: ReportStatus::Supported,
            seed,
            inconclusive: 0,
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn refute(&mut self, v: Violation) {
        self.status = ReportStatus::Refuted;
        self.violations.push(v);
    }

    pub fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    fn min_metric(&mut self, key: &str, value: f64) {
        let e = self.metrics.entry(key.to_string()).or_insert(f64::INFINITY);
        *e = e.min(value);
    }

    fn count(&mut self, key: &str) {
        *self.metrics.entry(key.to_string()).or_insert(0.0) += 1.0;
    }

    pub fn supported(&self) -> bool {
        self.status == ReportStatus::Supported
    }
}

fn choi_input(name: &str, phi: &LinMap) -> (String, CMat) {
    (format!("{name} (Choi)"), phi.choi().clone())
}

fn sample_filter(n: usize, seed: u64, label: &str, idx: u64) -> CMat {
    rng::ginibre(&mut rng::stream(seed, label, idx), n, n)
}

fn record(rep: &mut PropertyReport, v: &Verdict) -> bool {
    match v.status {
        Status::Inconclusive => {
            rep.inconclusive += 1;
            false
        }
        Status::NotMember => true,
        Status::Member => false,
    }
}

/// Samples `Φ ∈ C` and `B`, and tests `Φ ∘ Ad_B ∈ C`.
pub fn check_right_cp_invariance(c: &MapCone, samples: usize, opts: &SearchOpts) -> Result<PropertyReport> {
    let mut rep = PropertyReport::new(format!("right CP invariance of {}", c.label()), opts.seed);
    for t in 0..samples {
        let phi = c.sample(opts.seed, t as u64)?;
        let b = sample_filter(c.n, opts.seed, "right-filter", t as u64);
        let comp = phi.compose(&LinMap::ad(&b)?)?;
        let v = c.contains(&comp, opts)?;
        rep.trials += 1;
        if record(&mut rep, &v) {
            rep.refute(Violation {
                trial: t,
                description: "Φ∘Ad_B left the cone".into(),
                inputs: vec![choi_input("Φ", &phi), ("B".into(), b)],
                witness: v.witness.expect("not-member carries a witness"),
                checked: "Choi matrix of Φ∘Ad_B".into(),
                margin: v.value,
            });
        }
    }
    Ok(rep)
}

/// Mirror of [`check_right_cp_invariance`] with `Ad_B ∘ Φ`. Also runs the
/// right check on `C^†` and records whether the two statuses agree.
pub fn check_left_cp_invariance(c: &MapCone, samples: usize, opts: &SearchOpts) -> Result<PropertyReport> {
    let mut rep = PropertyReport::new(format!("left CP invariance of {}", c.label()), opts.seed);
    for t in 0..samples {
        let phi = c.sample(opts.seed, t as u64)?;
        let b = sample_filter(c.n, opts.seed, "left-filter", t as u64);
        let comp = LinMap::ad(&b)?.compose(&phi)?;
        let v = c.contains(&comp, opts)?;
        rep.trials += 1;
        if record(&mut rep, &v) {
            rep.refute(Violation {
                trial: t,
                description: "Ad_B∘Φ left the cone".into(),
                inputs: vec![choi_input("Φ", &phi), ("B".into(), b)],
                witness: v.witness.expect("not-member carries a witness"),
                checked: "Choi matrix of Ad_B∘Φ".into(),
                margin: v.value,
            });
        }
    }
    let right_adj = check_right_cp_invariance(&c.adjoint_cone(), samples, opts)?;
    let agree = right_adj.status == rep.status;
    rep.metric("adjoint_right_agrees", if agree { 1.0 } else { 0.0 });
    if !agree {
        rep.notes.push(format!("right check on the adjoint cone is {}", right_adj.status));
    }
    Ok(rep)
}

/// Tests `Φ ∘ Ψ ∈ C`: first on the fixed members among `{id, T}`, then on
/// sampled pairs.
pub fn check_semigroup(c: &MapCone, samples: usize, opts: &SearchOpts) -> Result<PropertyReport> {
    let n = c.n;
    let mut rep = PropertyReport::new(format!("semigroup property of {}", c.label()), opts.seed);
    let mut fixed = Vec::new();
    for (name, m) in [("id", LinMap::identity(n)), ("T", LinMap::transpose_map(n))] {
        if c.contains(&m, opts)?.is_member() {
            fixed.push((name, m));
        }
    }
    let mut trial = 0;
    for (na, a) in &fixed {
        for (nb, b) in &fixed {
            let comp = a.compose(b)?;
            let v = c.contains(&comp, opts)?;
            rep.trials += 1;
            if record(&mut rep, &v) {
                rep.refute(Violation {
                    trial,
                    description: format!("{na}∘{nb} left the cone"),
                    inputs: vec![choi_input(na, a), choi_input(nb, b)],
                    witness: v.witness.expect("not-member carries a witness"),
                    checked: format!("Choi matrix of {na}∘{nb}"),
                    margin: v.value,
                });
                return Ok(rep);
            }
            trial += 1;
        }
    }
    for t in 0..samples {
        let a = c.sample(opts.seed, 2 * t as u64)?;
        let b = c.sample(opts.seed, 2 * t as u64 + 1)?;
        let comp = a.compose(&b)?;
        let v = c.contains(&comp, opts)?;
        rep.trials += 1;
        if record(&mut rep, &v) {
            rep.refute(Violation {
                trial,
                description: "Φ∘Ψ left the cone".into(),
                inputs: vec![choi_input("Φ", &a), choi_input("Ψ", &b)],
                witness: v.witness.expect("not-member carries a witness"),
                checked: "Choi matrix of Φ∘Ψ".into(),
                margin: v.value,
            });
        }
        trial += 1;
    }
    Ok(rep)
}

fn combined(a: &Verdict, b: &Verdict) -> Status {
    use Status::*;
    match (a.status, b.status) {
        (NotMember, _) | (_, NotMember) => NotMember,
        (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
        _ => Member,
    }
}

/// Closure of the Choi cone under `X ↦ X^T` and `X ↦ FXF` (route A),
/// compared trial by trial with membership of `T∘Φ∘T` and `Φ^†` (route B).
pub fn check_symmetric(c: &MapCone, samples: usize, opts: &SearchOpts) -> Result<PropertyReport> {
    let n = c.n;
    let f = swap_operator(n);
    let mut rep = PropertyReport::new(format!("symmetry of {}", c.label()), opts.seed);
    let mut disagreements = 0;
    for t in 0..samples {
        let phi = c.sample(opts.seed, t as u64)?;
        let x = phi.choi();
        let xt = x.transpose();
        let fxf = f.matmul(x).matmul(&f);
        let a1 = c.choi_contains(&xt, opts)?;
        let a2 = c.choi_contains(&fxf, opts)?;
        let twirl = phi.transpose_twirl();
        let adj = phi.adjoint();
        let b1 = c.contains(&twirl, opts)?;
        let b2 = c.contains(&adj, opts)?;
        rep.trials += 1;
        let (sa, sb) = (combined(&a1, &a2), combined(&b1, &b2));
        if sa != sb {
            disagreements += 1;
        }
        if sa == Status::Inconclusive || sb == Status::Inconclusive {
            rep.inconclusive += 1;
        }
        for (v, checked, input) in [
            (a1, "X^T", xt),
            (a2, "FXF", fxf),
            (b1, "Choi matrix of T∘Φ∘T", twirl.into_choi()),
            (b2, "Choi matrix of Φ^†", adj.into_choi()),
        ] {
            if v.is_not_member() {
                rep.refute(Violation {
                    trial: t,
                    description: format!("{checked} left the cone"),
                    inputs: vec![choi_input("Φ", &phi), (checked.into(), input)],
                    witness: v.witness.expect("not-member carries a witness"),
                    checked: checked.into(),
                    margin: v.value,
                });
            }
        }
    }
    rep.metric("route_disagreements", disagreements as f64);
    Ok(rep)
}

/// Forward and reverse directions of the duality-composition criterion for
/// the cone generated by `cgens` and right compositions with `Ad_B`.
///
/// For each trial a dual candidate `Ψ` is paired against the generators.
/// Passing candidates need `C_{Ψ^†∘Φ} ⪰ 0` for a sampled `Φ = G ∘ Ad_B`;
/// failing ones need a generator with `ψ^* C_{Ψ^†∘G} ψ < 0`.
pub fn verify_duality_composition(cgens: &[LinMap], dual_samples: &[LinMap], samples: usize, opts: &SearchOpts) -> Result<PropertyReport> {
    if cgens.is_empty() || dual_samples.is_empty() {
        return Err(Error::EmptyCone);
    }
    let n = cgens[0].n();
    let mut rep = PropertyReport::new("duality-composition criterion", opts.seed);
    let psi_vec = max_entangled_vector(n);
    for t in 0..samples {
        let psi = &dual_samples[t % dual_samples.len()];
        let pairing = dual_pairing_test(cgens, psi, &opts.tol)?;
        rep.trials += 1;
        if pairing.is_member() {
            let mut r = rng::stream(opts.seed, "duality-composition", t as u64);
            let g = &cgens[r.random_range(0..cgens.len())];
            let b = rng::ginibre(&mut r, n, n);
            let phi = g.compose(&LinMap::ad(&b)?)?;
            let comp = psi.adjoint().compose(&phi)?;
            let v = is_psd(comp.choi(), &opts.tol)?;
            rep.min_metric("min_eigenvalue", v.value);
            rep.count("forward_trials");
            if v.is_not_member() {
                rep.refute(Violation {
                    trial: t,
                    description: "dual member Ψ with Ψ^†∘Φ not completely positive".into(),
                    inputs: vec![choi_input("Ψ", psi), choi_input("Φ", &phi)],
                    witness: v.witness.expect("witness"),
                    checked: "Choi matrix of Ψ^†∘Φ".into(),
                    margin: v.value,
                });
            }
        } else {
            rep.count("reverse_trials");
            let Some(Witness::Generator { index, .. }) = pairing.witness else { unreachable!() };
            let g = &cgens[index];
            let comp = psi.adjoint().compose(g)?;
            let value = comp.choi().quadratic_form(&psi_vec).re;
            if value < -opts.margin() {
                rep.count("reverse_confirmed");
            } else {
                rep.refute(Violation {
                    trial: t,
                    description: "non-dual Ψ without a refuting composite".into(),
                    inputs: vec![choi_input("Ψ", psi), choi_input("G", g)],
                    witness: Witness::Vector(psi_vec.clone()),
                    checked: "Choi matrix of Ψ^†∘G".into(),
                    margin: value,
                });
            }
        }
    }
    Ok(rep)
}

/// The known dual cone of a canonical cone.
pub fn dual_cone(c: &MapCone) -> Result<MapCone> {
    let n = c.n;
    match &c.kind {
        MapConeKind::Canonical(id) => MapCone::canonical(
            n,
            match id {
                ConeId::Cp => ConeId::Cp,
                ConeId::CoCp => ConeId::CoCp,
                ConeId::PosMaps => ConeId::Ksp(1),
                ConeId::Ksp(1) => ConeId::PosMaps,
                ConeId::KPos(k) => ConeId::Ksp(*k),
                ConeId::Ksp(k) => ConeId::KPos(*k),
                other => return Err(Error::Unsupported(format!("no dual registered for `{other}`"))),
            },
        ),
        MapConeKind::Induced(o) => Ok(MapCone::induced(dual_system(o))),
        _ => Err(Error::Unsupported("dual cone sampler needs a canonical cone".into())),
    }
}

fn scaled_margin(opts: &SearchOpts, a: &CMat, b: &CMat) -> f64 {
    opts.margin() * (a.frobenius_norm() * b.frobenius_norm()).max(1.0)
}

/// For a semigroup cone containing CP: `Φ^†∘Ψ` stays in the dual for
/// `Φ ∈ C`, `Ψ ∈ C°`, checked by pairing with a sampled `Ω ∈ C` per trial.
pub fn verify_dual_semigroup(c: &MapCone, samples: usize, opts: &SearchOpts) -> Result<PropertyReport> {
    let n = c.n;
    for i in 0..8 {
        let cp = sample_map(ConeId::Cp, n, &mut rng::stream(opts.seed, "dual-semigroup-cp", i))?;
        if c.contains(&cp, opts)?.is_not_member() {
            return Err(Error::PreconditionFailed(format!("{} does not contain the CP maps", c.label())));
        }
    }
    let dual = dual_cone(c)?;
    let mut rep = PropertyReport::new(format!("dual composition for {}", c.label()), opts.seed);
    for t in 0..samples {
        let phi = c.sample(opts.seed, 3 * t as u64)?;
        let omega = c.sample(opts.seed, 3 * t as u64 + 1)?;
        let psi = dual.sample(opts.seed, 3 * t as u64 + 2)?;
        let comp = phi.adjoint().compose(&psi)?;
        let p = crate::matrix::trace_pairing(comp.choi(), omega.choi())?.re;
        rep.trials += 1;
        rep.min_metric("min_pairing", p);
        if p < -scaled_margin(opts, comp.choi(), omega.choi()) {
            rep.refute(Violation {
                trial: t,
                description: "Φ^†∘Ψ pairs negatively with Ω".into(),
                inputs: vec![choi_input("Φ", &phi), choi_input("Ψ", &psi), choi_input("Ω", &omega)],
                witness: Witness::Matrix(omega.choi().clone()),
                checked: "Choi matrix of Φ^†∘Ψ".into(),
                margin: p,
            });
        }
    }
    Ok(rep)
}

/// Registered `(C, O)` instances: `KPos(k)` or `PosMaps` with `OMIN_k`, and
/// `CP` with the naive structure.
fn registered_semigroup_pair(c: &MapCone, o: &OSystem) -> Option<usize> {
    let n = c.n;
    match (&c.kind, o.tag()) {
        (MapConeKind::Canonical(ConeId::KPos(k)), Some(SystemTag::OminK(j))) if *k == j => Some(*k),
        (MapConeKind::Canonical(ConeId::PosMaps), Some(SystemTag::Omin | SystemTag::OminK(1))) => Some(1),
        (MapConeKind::Canonical(ConeId::Cp), Some(SystemTag::Naive)) => Some(n),
        (MapConeKind::Canonical(ConeId::KPos(k)), Some(SystemTag::Naive)) if *k == n => Some(n),
        _ => None,
    }
}

/// Maps used for verdict comparisons: the reduction family at `lambdas`,
/// then `samples` cone samples and the same number of Gaussian
/// Hermitian-preserving maps (mostly non-members).
fn comparison_maps(c: &MapCone, lambdas: &[f64], samples: usize, seed: u64) -> Result<Vec<(String, LinMap)>> {
    let n = c.n;
    let mut out: Vec<(String, LinMap)> =
        lambdas.iter().map(|&l| (format!("reduction λ={l}"), LinMap::reduction(n, l))).collect();
    for i in 0..samples {
        out.push((format!("sample {i}"), c.sample(seed, 1000 + i as u64)?));
        let mut r = rng::stream(seed, "correspondence-herm", i as u64);
        let h = rng::random_hermitian(&mut r, n * n);
        out.push((format!("hermitian {i}"), LinMap::from_choi(n, h)?));
    }
    Ok(out)
}

fn definite_conflict(a: &Verdict, b: &Verdict) -> Option<Verdict> {
    match (a.status, b.status) {
        (Status::Member, Status::NotMember) => Some(b.clone()),
        (Status::NotMember, Status::Member) => Some(a.clone()),
        _ => None,
    }
}

/// Semigroup cone sandwiched between CP and the positive maps, identified
/// with the CP maps of a structure and of its dual.
///
/// Checks (i) semigroup and sandwich on samples, (ii) `CP(O)` verdicts
/// against `C` verdicts, (iii) `CP(O°)` verdicts against `CP(O)^†`
/// verdicts, and adjoint symmetry `C(Φ) = C(Φ^†)`. The reduction maps at
/// `lambdas` are compared first; their `CP(O)` values land in the metrics.
pub fn verify_system_correspondence(c: &MapCone, o: &OSystem, lambdas: &[f64], samples: usize, opts: &SearchOpts) -> Result<PropertyReport> {
    let n = c.n;
    if o.n() != n {
        return Err(Error::dims("structure", n, o.n()));
    }
    let k = registered_semigroup_pair(c, o)
        .ok_or_else(|| Error::UnregisteredPair(format!("({}, {:?})", c.label(), o.tag())))?;
    let od = dual_system(o);
    let mut rep = PropertyReport::new(format!("semigroup cone {} as CP of a structure", c.label()), opts.seed);
    rep.metric("k", k as f64);

    let semi = check_semigroup(c, samples.min(50), opts)?;
    rep.trials += semi.trials;
    rep.inconclusive += semi.inconclusive;
    for v in semi.violations {
        rep.refute(v);
    }
    for i in 0..samples.min(50) {
        let cp = sample_map(ConeId::Cp, n, &mut rng::stream(opts.seed, "correspondence-cp", i as u64))?;
        let v = c.contains(&cp, opts)?;
        rep.trials += 1;
        if record(&mut rep, &v) {
            rep.refute(Violation {
                trial: i,
                description: "CP map outside the cone".into(),
                inputs: vec![choi_input("Φ", &cp)],
                witness: v.witness.expect("witness"),
                checked: "Choi matrix of Φ".into(),
                margin: v.value,
            });
        }
        let s = c.sample(opts.seed, 5000 + i as u64)?;
        let pm = min_product_value(s.choi(), (n, n), opts)?;
        rep.trials += 1;
        if pm.value < -opts.margin() * s.choi().frobenius_norm().max(1.0) {
            rep.refute(Violation {
                trial: i,
                description: "cone sample is not a positive map".into(),
                inputs: vec![choi_input("Φ", &s)],
                witness: Witness::Product { v: pm.v, w: pm.w },
                checked: "Choi matrix of Φ".into(),
                margin: pm.value,
            });
        }
    }

    let maps = comparison_maps(c, lambdas, samples, opts.seed)?;
    let mut agree = [0usize; 3];
    for (t, (name, phi)) in maps.iter().enumerate() {
        let vc = c.contains(phi, opts)?;
        let vo = cp_between(phi, o, o, 8, opts)?;
        let vd = cp_between(phi, &od, &od, 8, opts)?;
        let vo_adj = cp_between(&phi.adjoint(), o, o, 8, opts)?;
        let vc_adj = c.contains(&phi.adjoint(), opts)?;
        if t < lambdas.len() {
            let tag = |v: &Verdict| match v.status {
                Status::Member => 1.0,
                Status::NotMember => -1.0,
                Status::Inconclusive => 0.0,
            };
            rep.metric(format!("{name}: CP(O)"), tag(&vo));
            rep.metric(format!("{name}: CP(O dual)"), tag(&vd));
            rep.metric(format!("{name}: cone"), tag(&vc));
        }
        rep.trials += 1;
        for (slot, (a, b, what)) in [
            (&vo, &vc, "CP(O) against the cone"),
            (&vd, &vo_adj, "CP(O dual) against CP(O)^†"),
            (&vc, &vc_adj, "cone against its adjoint"),
        ]
        .into_iter()
        .enumerate()
        {
            if a.status == b.status {
                agree[slot] += 1;
            } else if a.status == Status::Inconclusive || b.status == Status::Inconclusive {
                rep.inconclusive += 1;
            }
            if let Some(bad) = definite_conflict(a, b) {
                rep.refute(Violation {
                    trial: t,
                    description: format!("{name}: {what} disagree"),
                    inputs: vec![choi_input("Φ", phi)],
                    witness: bad.witness.expect("witness"),
                    checked: "the refuted side's query".into(),
                    margin: bad.value,
                });
            }
        }
    }
    rep.metric("compared_maps", maps.len() as f64);
    rep.metric("agree_cp_o", agree[0] as f64);
    rep.metric("agree_cp_dual", agree[1] as f64);
    rep.metric("agree_adjoint", agree[2] as f64);
    Ok(rep)
}

/// Registered structure pairs on `M_n`.
pub fn registered_pairs(n: usize) -> Vec<(SystemTag, SystemTag)> {
    let mut tags = vec![SystemTag::Naive, SystemTag::Omin, SystemTag::Omax, SystemTag::PptSys];
    for k in 2..n {
        tags.push(SystemTag::OminK(k));
        tags.push(SystemTag::OmaxK(k));
    }
    let mut out = Vec::new();
    for &a in &tags {
        for &b in &tags {
            if crate::opsys::registered_cp_cone(a, b, n).is_some() {
                out.push((a, b));
            }
        }
    }
    out
}

/// Non-positive maps never get a `Member` verdict from [`cp_between`], and
/// the `I ⊗ xx^*` probe refutes them; CP maps are never refuted by it.
pub fn verify_positivity_probe(n: usize, samples: usize, opts: &SearchOpts) -> Result<PropertyReport> {
    let mut rep = PropertyReport::new("CP between structures implies positivity", opts.seed);
    let mut maps = vec![("−id".to_string(), LinMap::identity(n).scale(-1.0))];
    maps.push(("reduction λ=1.2".into(), LinMap::reduction(n, 1.2)));
    let mut i = 0u64;
    while maps.len() < samples.max(2) && i < 20 * samples as u64 + 20 {
        let mut r = rng::stream(opts.seed, "probe", i);
        let h = rng::random_hermitian(&mut r, n * n);
        let phi = LinMap::from_choi(n, h)?;
        if min_product_value(phi.choi(), (n, n), opts)?.value < -opts.margin() {
            maps.push((format!("hermitian {i}"), phi));
        }
        i += 1;
    }
    let pairs = registered_pairs(n);
    let light = SearchOpts { certificate_samples: 4, ..*opts };
    for (t, (name, phi)) in maps.iter().enumerate() {
        let pm = min_product_value(phi.choi(), (n, n), opts)?;
        let x: Vec<C64> = pm.v.iter().map(|c| c.conj()).collect();
        let probe = kron(&CMat::identity(n), &CMat::projector(&x));
        let img = phi.apply_amplified(n, &probe)?;
        let mut u = vec![C64::new(0.0, 0.0); n * n];
        for (j, wj) in pm.w.iter().enumerate() {
            u[j] = *wj;
        }
        let probe_value = img.quadratic_form(&u).re;
        rep.trials += 1;
        if probe_value < -opts.margin() {
            rep.count("probe_refutations");
        } else {
            rep.notes.push(format!("{name}: probe value {probe_value:.3e}"));
        }
        for (a, b) in &pairs {
            let o1 = OSystem::canonical(n, *a)?;
            let o2 = OSystem::canonical(n, *b)?;
            let v = cp_between(phi, &o1, &o2, 4, &light)?;
            rep.trials += 1;
            if v.is_member() {
                rep.refute(Violation {
                    trial: t,
                    description: format!("{name} certified in CP({a}, {b}) though not positive"),
                    inputs: vec![choi_input("Φ", phi), ("probe".into(), probe.clone())],
                    witness: Witness::Pushed {
                        input: probe.clone(),
                        filter: None,
                        inner: Box::new(Witness::Vector(u.clone())),
                    },
                    checked: "(id ⊗ Φ)(probe)".into(),
                    margin: probe_value,
                });
            } else if v.status == Status::Inconclusive {
                rep.inconclusive += 1;
            }
        }
    }
    for i in 0..samples {
        let phi = sample_map(ConeId::Cp, n, &mut rng::stream(opts.seed, "probe-cp", i as u64))?;
        let pm = min_product_value(phi.choi(), (n, n), opts)?;
        rep.trials += 1;
        rep.min_metric("cp_probe_min", pm.value);
        if pm.value < -opts.margin() * phi.choi().frobenius_norm().max(1.0) {
            rep.refute(Violation {
                trial: i,
                description: "CP map refuted by the probe".into(),
                inputs: vec![choi_input("Φ", &phi)],
                witness: Witness::Product { v: pm.v, w: pm.w },
                checked: "Choi matrix of Φ".into(),
                margin: pm.value,
            });
        }
    }
    Ok(rep)
}
