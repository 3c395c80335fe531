//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use conecalc::cones::{
    is_k_positive, min_schmidt_value, sample_map, sample_matrix, ConeId, Status, Witness,
};
use conecalc::mapcone::{check_semigroup, check_symmetric, verify_duality_composition, verify_dual_semigroup, MapCone};
use conecalc::matrix::{herm_eig, max_entangled, svd, swap_operator};
use conecalc::opsys::{
    build_cm, constructed_membership, cp_between, default_a_samples, is_super_homogeneous, level_checks,
    push_first, push_second, OSystem, SystemTag,
};
use conecalc::{rng, CMat, LinMap, SearchOpts, C64};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: conecalc::Error) -> String {
    e.to_string()
}

fn random_map(seed: u64, label: &str, i: u64, n: usize) -> LinMap {
    let mut r = rng::stream(seed, label, i);
    LinMap::from_choi(n, rng::ginibre(&mut r, n * n, n * n)).unwrap()
}

fn flip_identity() -> Outcome {
    let mut worst = 0.0f64;
    for n in [2, 3] {
        for i in 0..100 {
            let phi = random_map(1, "acc-flip", i, n);
            let rep = phi.verify_flip_identity(1e-10);
            worst = worst.max(rep.gap / rep.scale);
            ensure(rep.pass, || format!("n={n} map {i}: gap {:.3e}", rep.gap))?;
        }
    }
    Ok(format!("max relative gap {worst:.2e}"))
}

/// `Φ^†` from the bilinear pairing, entry by entry.
fn adjoint_by_pairing(phi: &LinMap) -> LinMap {
    let n = phi.n();
    let images: Vec<CMat> = (0..n * n)
        .map(|ij| phi.apply(&CMat::unit(n, n, ij / n, ij % n)).unwrap())
        .collect();
    LinMap::from_action(n, |y| {
        CMat::from_fn(n, n, |j, i| conecalc::matrix::trace_pairing(&images[i * n + j], y).unwrap())
    })
    .unwrap()
}

fn choi_identities() -> Outcome {
    let mut worst = 0.0f64;
    for n in [2, 3] {
        let f = swap_operator(n);
        for i in 0..100 {
            let phi = random_map(2, "acc-choi", i, n);
            let c = phi.choi();
            let adj = adjoint_by_pairing(&phi);
            let want = f.matmul(&c.transpose()).matmul(&f);
            let gap_adj = adj.choi().max_abs_diff(&want);
            let twirl = LinMap::from_action(n, |x| phi.apply(&x.transpose()).unwrap().transpose()).unwrap();
            let gap_t = twirl.choi().max_abs_diff(&c.transpose());
            let gap_lib = phi.adjoint().choi().max_abs_diff(&want).max(phi.transpose_twirl().choi().max_abs_diff(&c.transpose()));
            let g = gap_adj.max(gap_t).max(gap_lib);
            worst = worst.max(g);
            ensure(g <= 1e-12, || format!("n={n} map {i}: entry gap {g:.3e}"))?;
        }
    }
    Ok(format!("max entry gap {worst:.2e}"))
}

fn composition() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = 2 + (i % 2) as usize;
        let phi = random_map(3, "acc-comp-a", i, n);
        let psi = random_map(3, "acc-comp-b", i, n);
        let x = rng::ginibre(&mut rng::stream(3, "acc-comp-x", i), n, n);
        let via_choi = phi.compose(&psi).map_err(err)?;
        let via_action = LinMap::from_action(n, |y| phi.apply(&psi.apply(y).unwrap()).unwrap()).unwrap();
        let scale = via_choi.choi().frobenius_norm().max(1.0);
        let g1 = via_choi.choi().distance(via_action.choi()) / scale;
        let lhs = via_choi.apply(&x).unwrap();
        let rhs = phi.apply(&psi.apply(&x).unwrap()).unwrap();
        let g2 = lhs.distance(&rhs) / rhs.frobenius_norm().max(1.0);
        worst = worst.max(g1).max(g2);
        ensure(g1 <= 1e-10 && g2 <= 1e-10, || format!("triple {i}: gaps {g1:.3e}, {g2:.3e}"))?;
    }
    let mut ad_worst = 0.0f64;
    for i in 0..100 {
        let n = 2 + (i % 2) as usize;
        let mut r = rng::stream(3, "acc-ad", i);
        let a = rng::ginibre(&mut r, n, n);
        let b = rng::ginibre(&mut r, n, n);
        let lhs = LinMap::ad(&a).unwrap().compose(&LinMap::ad(&b).unwrap()).unwrap();
        let rhs = LinMap::ad(&b.matmul(&a)).unwrap();
        let g = lhs.choi().max_abs_diff(rhs.choi()) / rhs.choi().max_abs().max(1.0);
        ad_worst = ad_worst.max(g);
        ensure(g <= 1e-12, || format!("Ad pair {i}: gap {g:.3e}"))?;
    }
    Ok(format!("compose gap {worst:.2e}, Ad gap {ad_worst:.2e}"))
}

fn k_positivity_boundary() -> Outcome {
    let n = 3;
    let o = SearchOpts::default();
    let mut worst = 0.0f64;
    for k in 1..=3 {
        for lambda in [0.2, 1.0 / 3.0, 0.5, 1.0] {
            let x = LinMap::reduction(n, lambda).into_choi();
            let v = min_schmidt_value(&x, (n, n), k, &o).map_err(err)?.value;
            let want = 1.0 - lambda * k as f64;
            worst = worst.max((v - want).abs());
            ensure((v - want).abs() <= 1e-6, || format!("k={k} λ={lambda}: {v} vs {want}"))?;
        }
        let lambda = 1.0 / k as f64 + 0.05;
        let v = is_k_positive(&LinMap::reduction(n, lambda), k, &o).map_err(err)?;
        ensure(v.status == Status::NotMember, || format!("k={k} λ={lambda}: {}", v.status))?;
    }
    Ok(format!("max deviation {worst:.2e}"))
}

fn transpose_separations() -> Outcome {
    let o = SearchOpts::default();
    let t = LinMap::transpose_map(2);
    let v1 = is_k_positive(&t, 1, &o).map_err(err)?;
    ensure(v1.value >= -1e-9 && v1.status != Status::NotMember, || format!("level 1: {} {}", v1.status, v1.value))?;
    let v2 = is_k_positive(&t, 2, &o).map_err(err)?;
    ensure(v2.status == Status::NotMember, || format!("level 2: {}", v2.status))?;
    let w = v2.witness.as_ref().unwrap().evaluate(t.choi(), (2, 2)).map_err(err)?;
    ensure((w + 1.0).abs() <= 1e-9 && (v2.value + 1.0).abs() <= 1e-9, || format!("witness value {w}"))?;
    Ok(format!("level 1 {} ({:.1e}), level 2 witness {w:.12}", v1.status, v1.value))
}

fn duality_composition_positive_maps() -> Outcome {
    let o = SearchOpts::default().with_seed(6);
    let pos = MapCone::canonical(2, ConeId::PosMaps).map_err(err)?;
    let eb = MapCone::canonical(2, ConeId::Ksp(1)).map_err(err)?;
    let gens: Vec<LinMap> = (0..40).map(|i| pos.sample(6, i).unwrap()).collect();
    let duals: Vec<LinMap> = (0..200).map(|i| eb.sample(7, i).unwrap()).collect();
    let rep = verify_duality_composition(&gens, &duals, 200, &o).map_err(err)?;
    let fwd = rep.metrics.get("forward_trials").copied().unwrap_or(0.0);
    let min = rep.metrics.get("min_eigenvalue").copied().unwrap_or(f64::NAN);
    ensure(rep.supported() && fwd == 200.0 && min >= -1e-9, || format!("{} forward {fwd} min {min}", rep.status))?;
    Ok(format!("200 pairs, min eigenvalue {min:.2e}"))
}

fn non_psd(n: usize, i: u64) -> CMat {
    let mut r = rng::stream(8, "acc-nonpsd", i);
    let h = rng::random_hermitian(&mut r, n);
    let low = herm_eig(&h, f64::INFINITY).unwrap().min();
    let mut out = h;
    out.add_assign_scaled(&CMat::identity(n), C64::new(-(low + 0.05 + 0.5 * (i % 7) as f64 / 7.0), 0.0));
    out
}

fn level_one_identity() -> Outcome {
    let n = 2;
    let o = SearchOpts::default();
    let mut worst_res = 0.0f64;
    let mut round = 0.0f64;
    for tag in [SystemTag::Naive, SystemTag::Omin, SystemTag::Omax] {
        let sys = OSystem::canonical(n, tag).map_err(err)?;
        let cm = build_cm(&sys, 1, &default_a_samples(n, 1, 8, 0), &o).map_err(err)?;
        for i in 0..100 {
            let x = sample_matrix(ConeId::Psd, (1, n), &mut rng::stream(8, "acc-psd", i)).unwrap();
            let v = constructed_membership(&sys, &cm, &x, 1, &o).map_err(err)?;
            let res = match &v.certificate {
                Some(conecalc::cones::Certificate::Conic { residual, .. }) => *residual,
                _ => f64::INFINITY,
            };
            worst_res = worst_res.max(res);
            ensure(v.is_member() && res <= 1e-9, || format!("{tag}: PSD sample {i} {} res {res:.2e}", v.status))?;
            let y = non_psd(n, i);
            let v = constructed_membership(&sys, &cm, &y, 1, &o).map_err(err)?;
            ensure(v.is_not_member(), || format!("{tag}: non-PSD sample {i} {}", v.status))?;
        }
        for m in 1..=n {
            let g = rng::ginibre(&mut rng::stream(8, "acc-iso", m as u64), n, m);
            let s = svd(&g, 0.0);
            let v = CMat::from_fn(n, m, |i, j| s.left[j][i]);
            let cmm = build_cm(&sys, m, &default_a_samples(n, m, 2, 1), &o).map_err(err)?;
            for x in cmm.gens().iter().step_by(7).take(10) {
                let up = push_first(&v.adjoint(), x, n).map_err(err)?;
                let back = push_first(&v, &up, n).map_err(err)?;
                round = round.max(back.max_abs_diff(x) / x.max_abs().max(1.0));
                let mem = sys.contains(&up, n, &o).map_err(err)?;
                ensure(mem.status != Status::NotMember, || format!("{tag}: lifted level-{m} generator refuted"))?;
            }
        }
    }
    ensure(round <= 1e-12, || format!("isometry round trip {round:.2e}"))?;
    Ok(format!("max NNLS residual {worst_res:.2e}, round trip {round:.2e}"))
}

fn acceptance_maps(i: u64) -> LinMap {
    let n = 2;
    let mut r = rng::stream(9, "acc-reduction", i);
    match i % 6 {
        0 => sample_map(ConeId::Cp, n, &mut r).unwrap(),
        1 => sample_map(ConeId::CoCp, n, &mut r).unwrap(),
        2 => sample_map(ConeId::PosMaps, n, &mut r).unwrap(),
        3 => LinMap::from_choi(n, rng::random_hermitian(&mut r, n * n)).unwrap(),
        4 => LinMap::reduction(n, 0.25 * (i / 6) as f64),
        _ => LinMap::transpose_map(n).compose(&sample_map(ConeId::Ksp(1), n, &mut r).unwrap()).unwrap(),
    }
}

fn reduction_to_top_level() -> Outcome {
    let o = SearchOpts { certificate_samples: 8, ..SearchOpts::default() };
    let naive = OSystem::canonical(2, SystemTag::Naive).map_err(err)?;
    let ppt = OSystem::canonical(2, SystemTag::PptSys).map_err(err)?;
    let mut counts = [0usize; 3];
    for (name, target) in [("naive", &naive), ("ppt", &ppt)] {
        for i in 0..50 {
            let phi = acceptance_maps(i);
            let a = cp_between(&phi, &naive, target, 8, &o).map_err(err)?;
            let b = level_checks(&phi, &naive, target, 1..=4, &o).map_err(err)?;
            ensure(a.status == b.status, || format!("{name} map {i}: cp_between {} vs levels {}", a.status, b.status))?;
            counts[match a.status {
                Status::Member => 0,
                Status::NotMember => 1,
                Status::Inconclusive => 2,
            }] += 1;
        }
    }
    Ok(format!("100/100 agree ({} member, {} not-member, {} inconclusive)", counts[0], counts[1], counts[2]))
}

fn symmetry() -> Outcome {
    let o = SearchOpts::default().with_seed(10);
    let mut parts = Vec::new();
    for c in [ConeId::Cp, ConeId::CoCp, ConeId::KPos(2), ConeId::Ksp(2)] {
        let cone = MapCone::canonical(3, c).map_err(err)?;
        let rep = check_symmetric(&cone, 200, &o).map_err(err)?;
        let dis = rep.metrics["route_disagreements"];
        ensure(rep.supported() && rep.trials == 200 && dis == 0.0, || format!("{c}: {} disagreements {dis}", rep.status))?;
        parts.push(format!("{c} ({} inconclusive)", rep.inconclusive));
    }
    Ok(format!("supported: {}", parts.join(", ")))
}

fn cocp_not_semigroup() -> Outcome {
    let cone = MapCone::canonical(2, ConeId::CoCp).map_err(err)?;
    let e = max_entangled(2);
    for seed in 0..5 {
        let rep = check_semigroup(&cone, 0, &SearchOpts::default().with_seed(seed)).map_err(err)?;
        ensure(!rep.supported(), || format!("seed {seed}: supported"))?;
        let v = &rep.violations[0];
        ensure(v.description.starts_with("T∘T"), || v.description.clone())?;
        let w = v.witness.evaluate(&e, (2, 2)).map_err(err)?;
        ensure((w + 1.0).abs() <= 1e-12 && (v.margin + 1.0).abs() <= 1e-12, || format!("eigenvalue {w}"))?;
        ensure(matches!(v.witness, Witness::PartialTransposeVector { .. }), || "witness kind".into())?;
    }
    Ok("T∘T = id refuted, PPT eigenvalue −1 on every seed".into())
}

fn semigroup_duality() -> Outcome {
    let o = SearchOpts::default().with_seed(11);
    let kpos = MapCone::canonical(3, ConeId::KPos(2)).map_err(err)?;
    let rep = verify_dual_semigroup(&kpos, 100, &o).map_err(err)?;
    let min = rep.metrics["min_pairing"];
    ensure(rep.supported() && min >= -1e-9, || format!("{} min pairing {min}", rep.status))?;
    let omin = OSystem::canonical(3, SystemTag::OminK(2)).map_err(err)?;
    let omax = OSystem::canonical(3, SystemTag::OmaxK(2)).map_err(err)?;
    let mut table = Vec::new();
    for (lambda, expect) in [(0.3, Status::Member), (0.5, Status::Member), (0.55, Status::NotMember), (1.0, Status::NotMember)] {
        let phi = LinMap::reduction(3, lambda);
        let oracle = is_k_positive(&phi, 2, &o).map_err(err)?.status;
        let a = cp_between(&phi, &omin, &omin, 8, &o).map_err(err)?.status;
        let b = cp_between(&phi, &omax, &omax, 8, &o).map_err(err)?.status;
        ensure(oracle == expect && a == oracle && b == oracle, || format!("λ={lambda}: oracle {oracle}, omin {a}, omax {b}"))?;
        table.push(format!("λ={lambda}:{oracle}"));
    }
    Ok(format!("min pairing {min:.2e}; {}", table.join(" ")))
}

fn super_homogeneity() -> Outcome {
    let o = SearchOpts { certificate_samples: 16, ..SearchOpts::default().with_seed(12) };
    for tag in [SystemTag::Naive, SystemTag::OminK(1), SystemTag::OmaxK(1), SystemTag::PptSys] {
        let sys = OSystem::canonical(2, tag).map_err(err)?;
        let v = is_super_homogeneous(&sys, 200, &o).map_err(err)?;
        ensure(v.is_member(), || format!("{tag}: {}", v.status))?;
    }
    let x0 = sample_matrix(ConeId::Psd, (2, 2), &mut rng::stream(12, "acc-orbit", 0)).unwrap();
    let sys = OSystem::from_seeds(2, vec![x0], 10_000).map_err(err)?;
    let v = is_super_homogeneous(&sys, 200, &o).map_err(err)?;
    ensure(v.is_not_member(), || format!("single orbit: {}", v.status))?;
    let Some(Witness::Pushed { input, filter: Some(b), inner }) = &v.witness else {
        return Err("missing (G, B) witness".into());
    };
    let img = push_second(b, input, 2).map_err(err)?;
    let val = inner.evaluate(&img, (2, 2)).map_err(err)?;
    ensure(val < 0.0, || format!("witness re-evaluates to {val}"))?;
    Ok(format!("four canonical systems supported; single orbit refuted ({val:.2e})"))
}

struct Criterion {
    id: usize,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "flip identity", limit: Duration::from_secs(5), run: flip_identity },
        Criterion { id: 2, name: "Choi identities", limit: Duration::from_secs(5), run: choi_identities },
        Criterion { id: 3, name: "composition consistency", limit: Duration::from_secs(5), run: composition },
        Criterion { id: 4, name: "k-positivity boundary", limit: Duration::from_secs(30), run: k_positivity_boundary },
        Criterion { id: 5, name: "transpose separations", limit: Duration::from_secs(5), run: transpose_separations },
        Criterion { id: 6, name: "duality composition (positive maps)", limit: Duration::from_secs(30), run: duality_composition_positive_maps },
        Criterion { id: 7, name: "level-one cone identity", limit: Duration::from_secs(60), run: level_one_identity },
        Criterion { id: 8, name: "reduction to the top level", limit: Duration::from_secs(60), run: reduction_to_top_level },
        Criterion { id: 9, name: "symmetric cones", limit: Duration::from_secs(60), run: symmetry },
        Criterion { id: 10, name: "co-CP is not a semigroup", limit: Duration::from_secs(1), run: cocp_not_semigroup },
        Criterion { id: 11, name: "semigroup duality", limit: Duration::from_secs(60), run: semigroup_duality },
        Criterion { id: 12, name: "super-homogeneity", limit: Duration::from_secs(30), run: super_homogeneity },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= c.limit => (true, d),
            Ok(d) => (false, format!("{d}; took {took:.2?} over the {:?} limit", c.limit)),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<38} {} [{:.2?}] {}",
            c.id,
            c.name,
            if ok { "PASS" } else { "FAIL" },
            took,
            detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
