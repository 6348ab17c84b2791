//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{rngs::StdRng, Rng, SeedableRng};
use solenoid::circle::{
    birkhoff_spread, golden_mean, invariance_defect, invariant_measure, rotation_number_estimate, standard_observables,
    CantorTransversal, DenjoyMap, HolonomySystem,
};
use solenoid::forms::{build_dictionary, bump, BoxRegion, EntryFlag, Monomial, Phase, SmoothFunction, TrigPoly};
use solenoid::levelset::{lemma_alpha_certificate, CertificateConfig, ScalarFieldBundle};
use solenoid::surgery::{
    approximate_current, chunk, surgery, ApproximateConfig, GluedSolenoid, SolenoidHandle, SurgeryPlan, TargetCurrent,
};
use solenoid::suspension::{
    default_start, homology_class, leaf_limit_experiment, realize_class, rs_current, rs_pair, RealizeConfig,
};

type Verdict = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sin_sin(amp: f64) -> SmoothFunction {
    TrigPoly::monomial(2, Monomial::new(&[(1, Phase::Sin), (1, Phase::Sin)]), amp).into()
}

fn bumped_saddle() -> ScalarFieldBundle {
    let b = bump(&BoxRegion::new(2, [0.5, 0.5, 0.0], [0.25, 0.25, 0.0]).unwrap(), 0.2).unwrap();
    ScalarFieldBundle::new(b.mul(&sin_sin(0.1))).unwrap()
}

fn denjoy_correctness() -> Verdict {
    let t = Instant::now();
    let map = DenjoyMap::golden();
    let err = (rotation_number_estimate(&map, 100_000) - golden_mean()).abs();
    let semi = map.semiconjugacy_defect();
    let secs = t.elapsed().as_secs_f64();
    ensure(
        err <= 1e-4 && semi <= 1e-12 && secs <= 5.0,
        format!("|rho_N - rho| = {err:.2e}, semiconjugacy {semi:.2e}, {secs:.2}s"),
    )
}

fn measure_invariance() -> Verdict {
    let map = DenjoyMap::golden();
    let t = CantorTransversal::from_denjoy(&map, 64).unwrap();
    let m = invariant_measure(&map, 64).unwrap();
    let d = invariance_defect(&map, &t, &m);
    ensure(d <= 1e-12, format!("max |mu(h^-1 A) - mu(A)| = {d:.2e} over {} bands", t.len()))
}

fn unique_ergodicity() -> Verdict {
    let map = DenjoyMap::golden();
    let t = CantorTransversal::from_denjoy(&map, 64).unwrap();
    let m = invariant_measure(&map, 64).unwrap();
    let obs = standard_observables(&t);
    let system = HolonomySystem::new(t, std::sync::Arc::new(map), m);
    let a = birkhoff_spread(&system, &obs, 100, 100_000).unwrap().spread;
    let b = birkhoff_spread(&system, &obs, 100, 1_000_000).unwrap().spread;
    ensure(obs.len() == 10 && a <= 0.01 && b < a, format!("spread {a:.2e} at 1e5, {b:.2e} at 1e6"))
}

fn closedness() -> Verdict {
    let dict = build_dictionary(2, 1, 3).unwrap();
    let exact = dict.indices_with(EntryFlag::Exact);
    let mut rng = StdRng::seed_from_u64(20);
    let mut worst = 0.0f64;
    let mut quadrature = 0.0f64;
    for k in 0..20 {
        let a: Vec<f64> = loop {
            let a = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            if a.iter().any(|v: &f64| v.abs() > 0.05) {
                break a;
            }
        };
        let s = realize_class(&a, &RealizeConfig::default()).map_err(|e| e.to_string())?;
        let c = rs_current(&s, &dict).unwrap();
        worst = exact.iter().fold(worst, |m, &i| m.max(c.pairings[i].abs()));
        if k == 0 {
            // Trapezoid cross-check of the closed-form segment integrals.
            for &i in &exact {
                quadrature = quadrature.max(rs_pair(&s, &dict.entry(i).form.to_kform(), 256).unwrap().abs());
            }
        }
    }
    ensure(
        worst <= 1e-3 && quadrature <= 1e-3,
        format!("max |<S, dg>| = {worst:.2e} over {} exact entries, 20 classes; trapezoid check {quadrature:.2e}", exact.len()),
    )
}

fn realization() -> Verdict {
    let classes: [&[f64]; 5] = [&[0.3, 0.7], &[1.0, 0.0], &[-0.4, 0.25], &[0.2, -0.5, 0.9], &[2.0, 3.0, -1.0]];
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for a in classes {
        let t = Instant::now();
        let s = realize_class(a, &RealizeConfig::default()).map_err(|e| e.to_string())?;
        let h = homology_class(&s).unwrap();
        slowest = slowest.max(t.elapsed());
        for (hi, ai) in h.iter().zip(a) {
            worst = worst.max((hi - ai / s.scale()).abs());
        }
    }
    let secs = slowest.as_secs_f64();
    ensure(worst <= 1e-3 && secs <= 30.0, format!("max |H - a/scale| = {worst:.2e}, slowest class {secs:.2}s"))
}

fn leaf_limit() -> Verdict {
    let dict = build_dictionary(2, 1, 2).unwrap();
    let s = realize_class(&[0.3, 0.7], &RealizeConfig::default()).unwrap();
    let rows = leaf_limit_experiment(&s, default_start(&s), &[10, 100, 1000], &dict).unwrap();
    let (d10, d1000) = (rows[0].weak_distance, rows[2].weak_distance);
    ensure(d1000 <= 0.01 && d10 >= 5.0 * d1000, format!("distance {d10:.2e} at R=10, {d1000:.2e} at R=1000"))
}

fn level_set_certificate() -> Verdict {
    let dict = build_dictionary(2, 1, 2).unwrap();
    let global = ScalarFieldBundle::new(sin_sin(0.1)).unwrap();
    let g = lemma_alpha_certificate(&global, &dict, &CertificateConfig::default()).unwrap().report;
    let comps = g.region.regular_components();
    let excludes_critical = [-0.1, 0.0, 0.1].iter().all(|&c| comps.iter().all(|iv| !(iv[0] <= c && c <= iv[1])));
    let cfg = CertificateConfig::default();
    let a = lemma_alpha_certificate(&bumped_saddle(), &dict, &cfg).unwrap().report;
    let b = lemma_alpha_certificate(&bumped_saddle(), &dict, &cfg.refined()).unwrap().report;
    ensure(
        excludes_critical && g.coarea_gap <= 1e-3 && a.pass && a.max_observed <= a.max_budget && b.max_observed < a.max_observed,
        format!(
            "coarea gap {:.2e}; discrepancy {:.2e} <= budget {:.2e}; refined {:.2e}",
            g.coarea_gap, a.max_observed, a.max_budget, b.max_observed
        ),
    )
}

fn surgery_error() -> Verdict {
    let dict = build_dictionary(2, 1, 2).unwrap();
    let base = realize_class(&[0.3, 0.7], &RealizeConfig::default()).unwrap();
    let g = GluedSolenoid::from_base(base);
    let cert = lemma_alpha_certificate(&bumped_saddle(), &dict, &CertificateConfig::default()).unwrap();
    let piece = chunk(&SolenoidHandle::LevelSet(cert.solenoid), g.transversal_mass()).unwrap().remove(0);
    let direct = g.current(&dict).unwrap().add(&piece.current(&dict).unwrap()).unwrap();
    let mut errs = Vec::new();
    let mut within = true;
    for eps in [1e-1, 1e-2, 1e-3] {
        let out = surgery(&SurgeryPlan::new(g.clone(), piece.clone(), eps).unwrap(), &dict).unwrap();
        let diff = out.current.abs_diff(&direct).unwrap();
        within &= diff.iter().zip(&out.bound).all(|(d, b)| d <= b);
        errs.push(diff.iter().cloned().fold(0.0, f64::max));
    }
    let slope = (errs[0] / errs[2]).log10() / 2.0;
    ensure(within && slope >= 0.9, format!("max errors {:.2e}, {:.2e}, {:.2e}; slope {slope:.3}", errs[0], errs[1], errs[2]))
}

fn end_to_end() -> Verdict {
    let dict = build_dictionary(2, 1, 2).unwrap();
    let target = TargetCurrent { class: vec![0.3, 0.7], beta: sin_sin(0.1) };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let t = Instant::now();
    let a =
        pool.install(|| approximate_current(&target, 0.05, &dict, &ApproximateConfig::default())).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let r = &a.report;
    let ue5 = a.solenoid.ue_diagnostic(100, 100_000).unwrap().spread;
    let ue6 = a.solenoid.ue_diagnostic(100, 1_000_000).unwrap().spread;
    ensure(
        r.final_distance <= 0.05 && r.class_check.max_error <= 1e-3 && ue5 <= 0.01 && ue6 < ue5 && secs <= 300.0,
        format!(
            "distance {:.2e}, class error {:.2e}, spread {ue5:.2e} -> {ue6:.2e}, {secs:.1}s single-threaded",
            r.final_distance, r.class_check.max_error
        ),
    )
}

fn run_cli(cmd: &str, config: Option<&Path>, out: &Path) -> Result<(), String> {
    let mut c = Command::new(env!("CARGO_BIN_EXE_solenoid"));
    c.arg(cmd).arg("--out").arg(out);
    if let Some(p) = config {
        c.arg("--config").arg(p);
    }
    let status = c.status().map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("{cmd} exited with {status}"))
    }
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let approx = dir.path().join("approximate.json");
    std::fs::write(&approx, r#"{"eps": 0.2, "approximate": {"ue_iterations": 20000, "certificate": {"exclusion_res": 1024}}}"#)
        .unwrap();
    let cmds: [(&str, Option<&Path>); 5] =
        [("denjoy", None), ("realize", None), ("leaf-limit", None), ("levelset", None), ("approximate", Some(&approx))];
    let mut files = 0;
    for (cmd, cfg) in cmds {
        let (a, b) = (dir.path().join(format!("{cmd}-1")), dir.path().join(format!("{cmd}-2")));
        run_cli(cmd, cfg, &a)?;
        run_cli(cmd, cfg, &b)?;
        let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for n in names {
            if std::fs::read(a.join(&n)).unwrap() != std::fs::read(b.join(&n)).unwrap() {
                return Err(format!("{cmd}: {} differs between runs", n.to_string_lossy()));
            }
            files += 1;
        }
    }
    Ok(format!("{files} report files identical across two runs of all 5 commands"))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Verdict); 10] = [
        ("A1", "Denjoy correctness", denjoy_correctness),
        ("A2", "measure invariance", measure_invariance),
        ("A3", "unique ergodicity diagnostic", unique_ergodicity),
        ("A4", "closedness of currents", closedness),
        ("A5", "class realization", realization),
        ("A6", "leaf limit", leaf_limit),
        ("A7", "level-set certificate", level_set_certificate),
        ("A8", "surgery error bound", surgery_error),
        ("A9", "end-to-end approximation", end_to_end),
        ("A10", "CLI determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| p == id) {
            continue;
        }
        let t = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match verdict {
            Ok(d) => println!("{id:<4} PASS  {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("{id:<4} FAIL  {name}: {d} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
