use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;
use solenoid::circle::{
    birkhoff_spread, invariance_defect, invariant_measure, rotation_number_estimate, standard_observables, BirkhoffReport,
    CantorTransversal, DenjoyMap, GapSchedule, HolonomySystem, RotationNumber,
};
use solenoid::forms::{build_dictionary, CurrentVector, Dictionary};
use solenoid::levelset::{lemma_alpha_certificate, CertificateReport};
use solenoid::num::sig17;
use solenoid::surgery::{approximate_current, ApproximationReport, TargetCurrent};
use solenoid::suspension::{
    default_start, homology_class, leaf_limit_csv, leaf_limit_experiment, realize_class, rs_current, LeafLimitRow,
};

use crate::config::{trig_function, ApproximateRunConfig, DenjoyConfig, LeafLimitConfig, LevelsetConfig, RealizeRunConfig};
use crate::CliError;

/// Files to write and whether every asserted invariant held.
pub struct Outcome {
    pub pass: bool,
    pub files: Vec<(&'static str, String)>,
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn birkhoff_csv(r: &BirkhoffReport) -> String {
    let mut s = String::from("observable,spread,mean\n");
    for ((label, spread), mean) in r.labels.iter().zip(&r.spreads).zip(&r.means) {
        writeln!(s, "{label},{},{}", sig17::format(*spread), sig17::format(*mean)).unwrap();
    }
    s
}

fn current_csv(dict: &Dictionary, c: &CurrentVector) -> String {
    let mut s = String::from("index,label,pairing\n");
    for (i, v) in c.pairings.iter().enumerate() {
        writeln!(s, "{i},{},{}", dict.entry(i).label, sig17::format(*v)).unwrap();
    }
    s
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    #[serde(with = "sig17")]
    value: f64,
    #[serde(with = "sig17")]
    tolerance: f64,
    pass: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self { name, value, tolerance, pass: value <= tolerance }
    }

    fn at_least(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self { name, value, tolerance, pass: value >= tolerance }
    }
}

#[derive(Serialize)]
struct DenjoyReport<'a> {
    config: &'a DenjoyConfig,
    #[serde(with = "sig17")]
    rho_estimate: f64,
    #[serde(with = "sig17")]
    semiconjugacy_defect: f64,
    #[serde(with = "sig17")]
    invariance_defect: f64,
    bands: usize,
    birkhoff: BirkhoffReport,
    checks: Vec<Check>,
    pass: bool,
}

pub fn denjoy(cfg: &DenjoyConfig, log: &dyn Fn(&str)) -> Result<Outcome, CliError> {
    let rho = RotationNumber::new(cfg.rho)?;
    let schedule = GapSchedule::inverse_square(cfg.schedule_range, cfg.schedule_total)?;
    let map = DenjoyMap::build_checked(rho, schedule, cfg.measure_depth)?;
    log("estimating the rotation number");
    let rho_estimate = rotation_number_estimate(&map, cfg.rotation_iterations);
    let semiconjugacy_defect = map.semiconjugacy_defect();
    log("building the invariant measure");
    let transversal = CantorTransversal::from_denjoy(&map, cfg.measure_depth)?;
    let measure = invariant_measure(&map, cfg.measure_depth)?;
    let inv = invariance_defect(&map, &transversal, &measure);
    log("running the Birkhoff diagnostic");
    let observables = standard_observables(&transversal);
    let system = HolonomySystem::new(transversal.clone(), Arc::new(map), measure);
    let birkhoff = birkhoff_spread(&system, &observables, cfg.ue_starts, cfg.ue_iterations)?;
    let checks = vec![
        Check::at_most("rotation_number_error", (rho_estimate - cfg.rho).abs(), cfg.rho_tolerance),
        Check::at_most("semiconjugacy_defect", semiconjugacy_defect, cfg.semiconjugacy_tolerance),
        Check::at_most("invariance_defect", inv, cfg.invariance_tolerance),
        Check::at_most("birkhoff_spread", birkhoff.spread, cfg.ue_tolerance),
    ];
    let pass = checks.iter().all(|c| c.pass);
    let csv = birkhoff_csv(&birkhoff);
    let report = DenjoyReport {
        config: cfg,
        rho_estimate,
        semiconjugacy_defect,
        invariance_defect: inv,
        bands: transversal.len(),
        birkhoff,
        checks,
        pass,
    };
    Ok(Outcome { pass, files: vec![("report.json", json(&report)?), ("birkhoff.csv", csv)] })
}

#[derive(Serialize)]
struct RealizeReport<'a> {
    config: &'a RealizeRunConfig,
    #[serde(with = "sig17")]
    scale: f64,
    #[serde(with = "sig17::vec")]
    achieved_class: Vec<f64>,
    bands: usize,
    ue_diagnostic: BirkhoffReport,
    current: CurrentVector,
    checks: Vec<Check>,
    pass: bool,
}

pub fn realize(cfg: &RealizeRunConfig, log: &dyn Fn(&str)) -> Result<Outcome, CliError> {
    let dict = build_dictionary(cfg.class.len(), 1, cfg.degree)?;
    log("realizing the class");
    let s = realize_class(&cfg.class, &cfg.realize)?;
    let achieved: Vec<f64> = homology_class(&s)?.iter().map(|h| h * s.scale()).collect();
    log("pairing with the dictionary");
    let current = rs_current(&s, &dict)?.scale(s.scale());
    let ue = s.ue_diagnostic(cfg.realize.ue_starts, cfg.realize.ue_iterations)?;
    let checks = vec![
        Check::at_most("class_error", max_abs_diff(&achieved, &cfg.class), cfg.class_tolerance),
        Check::at_most("birkhoff_spread", ue.spread, cfg.realize.ue_tolerance),
    ];
    let pass = checks.iter().all(|c| c.pass);
    let csv = current_csv(&dict, &current);
    let report = RealizeReport {
        config: cfg,
        scale: s.scale(),
        achieved_class: achieved,
        bands: s.transversal().len(),
        ue_diagnostic: ue,
        current,
        checks,
        pass,
    };
    Ok(Outcome { pass, files: vec![("report.json", json(&report)?), ("current.csv", csv)] })
}

#[derive(Serialize)]
struct LeafLimitReport<'a> {
    config: &'a LeafLimitConfig,
    #[serde(with = "sig17")]
    start: f64,
    rows: Vec<LeafLimitRow>,
    monotone: bool,
    checks: Vec<Check>,
    pass: bool,
}

pub fn leaf_limit(cfg: &LeafLimitConfig, log: &dyn Fn(&str)) -> Result<Outcome, CliError> {
    if cfg.returns.is_empty() {
        return Err(CliError::Config("returns must list at least one value".into()));
    }
    let dict = build_dictionary(cfg.class.len(), 1, cfg.degree)?;
    log("realizing the class");
    let s = realize_class(&cfg.class, &cfg.realize)?;
    let start = cfg.start.unwrap_or_else(|| default_start(&s));
    log("following the leaf");
    let rows = leaf_limit_experiment(&s, start, &cfg.returns, &dict)?;
    let first = rows[0].weak_distance;
    let last = rows[rows.len() - 1].weak_distance;
    let monotone = rows.windows(2).all(|w| w[1].weak_distance <= w[0].weak_distance);
    let decrease = if last > 0.0 { first / last } else { f64::INFINITY };
    let checks = vec![
        Check::at_most("final_distance", last, cfg.distance_tolerance),
        Check::at_least("decrease_factor", decrease, cfg.min_decrease),
    ];
    let pass = monotone && checks.iter().all(|c| c.pass);
    let csv = leaf_limit_csv(&rows);
    let report = LeafLimitReport { config: cfg, start, rows, monotone, checks, pass };
    Ok(Outcome { pass, files: vec![("report.json", json(&report)?), ("leaf_limit.csv", csv)] })
}

fn certificate_csv(dict: &Dictionary, r: &CertificateReport) -> String {
    let total = r.budget.total();
    let mut s = String::from("index,label,direct,solenoid,lebesgue,observed,budget\n");
    for i in 0..dict.len() {
        writeln!(
            s,
            "{i},{},{},{},{},{},{}",
            dict.entry(i).label,
            sig17::format(r.direct[i]),
            sig17::format(r.solenoid[i]),
            sig17::format(r.lebesgue[i]),
            sig17::format(r.observed[i]),
            sig17::format(total[i])
        )
        .unwrap();
    }
    s
}

pub fn levelset(cfg: &LevelsetConfig, log: &dyn Fn(&str)) -> Result<Outcome, CliError> {
    let dict = build_dictionary(2, 1, cfg.degree)?;
    let field = cfg.scalar_field()?;
    log("tracing level sets");
    let c = lemma_alpha_certificate(&field, &dict, &cfg.certificate)?;
    let pass = c.report.pass;
    Ok(Outcome {
        pass,
        files: vec![
            ("certificate.json", json(&c.report)?),
            ("entries.csv", certificate_csv(&dict, &c.report)),
            ("contours.csv", c.solenoid.to_csv()),
        ],
    })
}

pub fn approximate(cfg: &ApproximateRunConfig, log: &dyn Fn(&str)) -> Result<Outcome, CliError> {
    let dict = build_dictionary(2, 1, cfg.degree)?;
    let target = TargetCurrent { class: cfg.class.clone(), beta: trig_function(&cfg.beta)? };
    log("running the approximation pipeline");
    let a = approximate_current(&target, cfg.eps, &dict, &cfg.approximate)?;
    let report: &ApproximationReport = &a.report;
    Ok(Outcome { pass: report.pass, files: vec![("report.json", json(report)?), ("entries.csv", a.entry_csv(&dict)?)] })
}
