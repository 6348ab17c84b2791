//! Hot loops under the default rayon pool and under a one-thread pool.
//! Build with `--no-default-features` to time the plain-iterator fallback
//! instead; the group is then labelled `sequential-fallback`.

use criterion::{criterion_group, criterion_main, Criterion};
use solenoid::circle::{birkhoff_spread, invariant_measure, standard_observables, CantorTransversal, DenjoyMap, HolonomySystem};
use solenoid::forms::{build_dictionary, bump, BoxRegion, Monomial, Phase, SmoothFunction, TrigPoly};
use solenoid::levelset::{lemma_alpha_certificate, CertificateConfig, ScalarFieldBundle};
use solenoid::suspension::{realize_class, rs_current, RealizeConfig};

fn workloads() -> Vec<(&'static str, Box<dyn Fn() + Send + Sync>)> {
    let dict2 = build_dictionary(2, 1, 3).unwrap();
    let s = realize_class(&[0.3, 0.7], &RealizeConfig::default()).unwrap();

    let map = DenjoyMap::golden();
    let t = CantorTransversal::from_denjoy(&map, 64).unwrap();
    let m = invariant_measure(&map, 64).unwrap();
    let obs = standard_observables(&t);
    let system = HolonomySystem::new(t, std::sync::Arc::new(map), m);

    let b = bump(&BoxRegion::new(2, [0.5, 0.5, 0.0], [0.25, 0.25, 0.0]).unwrap(), 0.2).unwrap();
    let f: SmoothFunction = TrigPoly::monomial(2, Monomial::new(&[(1, Phase::Sin), (1, Phase::Sin)]), 0.1).into();
    let field = ScalarFieldBundle::new(b.mul(&f)).unwrap();
    let cfg = CertificateConfig { grid_res: 128, exclusion_res: 512, lebesgue_values: 200, ..CertificateConfig::default() };
    let dict1 = build_dictionary(2, 1, 2).unwrap();

    vec![
        ("rs_current", Box::new(move || drop(rs_current(&s, &dict2).unwrap()))),
        ("birkhoff_spread", Box::new(move || drop(birkhoff_spread(&system, &obs, 32, 20_000).unwrap()))),
        ("certificate", Box::new(move || drop(lemma_alpha_certificate(&field, &dict1, &cfg).unwrap()))),
    ]
}

#[cfg(feature = "parallel")]
fn bench(c: &mut Criterion) {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut g = c.benchmark_group("parallel_vs_sequential");
    g.sample_size(10);
    for (name, work) in workloads() {
        g.bench_function(format!("{name}/pool"), |b| b.iter(&work));
        g.bench_function(format!("{name}/one-thread"), |b| b.iter(|| one.install(&work)));
    }
    g.finish();
}

#[cfg(not(feature = "parallel"))]
fn bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("sequential-fallback");
    g.sample_size(10);
    for (name, work) in workloads() {
        g.bench_function(name, |b| b.iter(&work));
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
