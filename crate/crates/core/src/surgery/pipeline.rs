use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::chunk::{chunk, SolenoidHandle};
use super::glue::{sup_d_bounds, surgery, GluedSolenoid, SurgeryPlan};
use crate::circle::BirkhoffReport;
use crate::forms::{partition_of_unity, quadrant_cover, weak_distance, BoxRegion, CurrentVector, Dictionary, SmoothFunction};
use crate::levelset::{lemma_alpha_certificate_on, CertificateConfig, CertificateGrids, ContourFamily, ScalarFieldBundle};
use crate::num::sig17;
use crate::suspension::{realize_class, rs_current, RealizeConfig};
use crate::{Error, Result};

/// Closed current `S_a + d beta` on `T^2`: a homology class and a smooth
/// primitive of the exact part.
#[derive(Debug, Clone)]
pub struct TargetCurrent {
    pub class: Vec<f64>,
    pub beta: SmoothFunction,
}

impl TargetCurrent {
    /// `int_{T^2} d beta ^ w` for every entry.
    pub fn exact_pairings(&self, dict: &Dictionary, res: usize) -> Result<Vec<f64>> {
        if self.beta.is_zero() {
            return Ok(vec![0.0; dict.len()]);
        }
        dict.pair_wedge(res, |x| self.beta.gradient(x))
    }
}

/// Pieces `rho_i beta` for a partition of unity subordinate to `cover`.
/// Each is compactly supported in its box, and their differentials sum to
/// `d beta`. A one-box cover gives `beta` itself.
pub fn decompose_exact(beta: &SmoothFunction, cover: &[BoxRegion], margin: f64) -> Result<Vec<ScalarFieldBundle>> {
    let rho = partition_of_unity(cover, margin)?;
    rho.iter()
        .map(|r| {
            let f = if beta.is_zero() { SmoothFunction::zero(2) } else { r.mul(beta) };
            ScalarFieldBundle::new(f)
        })
        .collect()
}

/// `max_w |sum_i int dF_i ^ w - int d beta ^ w|`.
pub fn reconstruction_defect(fields: &[ScalarFieldBundle], beta: &SmoothFunction, dict: &Dictionary, res: usize) -> Result<f64> {
    let whole = TargetCurrent { class: vec![], beta: beta.clone() }.exact_pairings(dict, res)?;
    let mut sum = vec![0.0; dict.len()];
    for f in fields {
        if f.f.is_zero() {
            continue;
        }
        for (s, v) in sum.iter_mut().zip(dict.pair_wedge(res, |x| f.f.gradient(x))?) {
            *s += v;
        }
    }
    Ok(sum.iter().zip(&whole).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApproximateConfig {
    pub realize: RealizeConfig,
    pub certificate: CertificateConfig,
    /// Overlap of the four quadrant boxes.
    pub cover_overlap: f64,
    /// Transition width of the partition-of-unity bumps.
    pub cover_margin: f64,
    /// Grid for `int d beta ^ w`.
    pub wedge_res: usize,
    /// Largest tube radius used even when the budget allows more.
    pub max_tube: f64,
    /// Halvings of the certificate tolerances tried before giving up.
    pub max_refinements: usize,
    pub ue_starts: usize,
    pub ue_iterations: usize,
    pub ue_tolerance: f64,
    pub class_tolerance: f64,
}

impl Default for ApproximateConfig {
    fn default() -> Self {
        Self {
            realize: RealizeConfig::default(),
            certificate: CertificateConfig { exclusion_res: 4096, ..CertificateConfig::default() },
            cover_overlap: 0.02,
            cover_margin: 0.2,
            wedge_res: 256,
            max_tube: 1e-2,
            max_refinements: 12,
            ue_starts: 100,
            ue_iterations: 100_000,
            ue_tolerance: 0.01,
            class_tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetReport {
    #[serde(with = "sig17::vec")]
    pub class: Vec<f64>,
    pub dictionary_id: String,
    #[serde(with = "sig17::vec")]
    pub pairings: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceReport {
    pub index: usize,
    #[serde(with = "sig17")]
    pub epsilon: f64,
    #[serde(with = "sig17")]
    pub epsilon_measure: f64,
    #[serde(with = "sig17")]
    pub observed: f64,
    #[serde(with = "sig17")]
    pub budget: f64,
    pub certificate_pass: bool,
    pub chunks: usize,
    #[serde(with = "sig17")]
    pub transversal_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    #[serde(with = "sig17")]
    pub exact_part: f64,
    #[serde(with = "sig17")]
    pub tube_part: f64,
    #[serde(with = "sig17")]
    pub per_piece: f64,
    #[serde(with = "sig17")]
    pub epsilon_tube: f64,
    /// Largest per-entry sum of the tube bounds.
    #[serde(with = "sig17")]
    pub tube_bound: f64,
    /// Largest per-entry observed tube correction.
    #[serde(with = "sig17")]
    pub tube_observed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDistances {
    /// `S_a` alone against the target.
    #[serde(with = "sig17")]
    pub realized: f64,
    /// `S_a` plus the level-set solenoids, before surgery.
    #[serde(with = "sig17")]
    pub with_levelsets: f64,
    #[serde(with = "sig17")]
    pub glued: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCheck {
    #[serde(with = "sig17::vec")]
    pub expected: Vec<f64>,
    #[serde(with = "sig17::vec")]
    pub achieved: Vec<f64>,
    #[serde(with = "sig17")]
    pub max_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationReport {
    pub target: TargetReport,
    #[serde(with = "sig17")]
    pub eps: f64,
    pub pieces: Vec<PieceReport>,
    pub budgets: BudgetReport,
    pub distances: StageDistances,
    #[serde(with = "sig17")]
    pub final_distance: f64,
    #[serde(with = "sig17")]
    pub reconstruction_defect: f64,
    pub class_check: ClassCheck,
    pub ue_diagnostic: BirkhoffReport,
    pub surgeries: usize,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct Approximation {
    pub solenoid: GluedSolenoid,
    pub current: CurrentVector,
    pub target: CurrentVector,
    pub report: ApproximationReport,
}

impl Approximation {
    /// Per-entry `|output - target|`.
    pub fn entry_csv(&self, dict: &Dictionary) -> Result<String> {
        let diff = self.current.abs_diff(&self.target)?;
        let mut s = String::from("index,label,output,target,abs_diff\n");
        for (i, d) in diff.iter().enumerate() {
            writeln!(
                s,
                "{i},{},{},{},{}",
                dict.entry(i).label,
                sig17::format(self.current.pairings[i]),
                sig17::format(self.target.pairings[i]),
                sig17::format(*d)
            )
            .unwrap();
        }
        Ok(s)
    }
}

/// Tube radius with `sup|dw| sum w (2 eps len + 4 eps^2) <= budget`.
fn tube_radius(plans: &[SurgeryPlan], sup_d: f64, budget: f64, cap: f64) -> f64 {
    let a: f64 = plans.iter().flat_map(|p| &p.tubes).map(|t| 2.0 * t.weight * t.length).sum();
    let b: f64 = plans.iter().flat_map(|p| &p.tubes).map(|t| 4.0 * t.weight).sum();
    if sup_d == 0.0 || (a == 0.0 && b == 0.0) {
        return cap;
    }
    let c = budget / sup_d;
    let root = if b > 0.0 { (-a + (a * a + 4.0 * b * c).sqrt()) / (2.0 * b) } else { c / a };
    // Shaved so rounding cannot push the sum over the budget.
    (0.999 * root).min(cap)
}

fn plan_all(start: &GluedSolenoid, chunks: &[ContourFamily], eps_tube: f64) -> Result<Vec<SurgeryPlan>> {
    let mut g = start.clone();
    let mut plans = Vec::with_capacity(chunks.len());
    for c in chunks {
        let p = SurgeryPlan::new(g.clone(), c.clone(), eps_tube)?;
        // Advance the cursor without computing currents.
        g = p.advanced();
        plans.push(p);
    }
    Ok(plans)
}

/// Approximates `target` within `eps` in the dictionary's weak distance by a
/// single solenoid whose holonomy is that of `realize_class(a)`.
pub fn approximate_current(
    target: &TargetCurrent,
    eps: f64,
    dict: &Dictionary,
    config: &ApproximateConfig,
) -> Result<Approximation> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if dict.dim() != 2 || target.class.len() != 2 {
        return Err(Error::InvalidArgument("the density pipeline runs on T^2".into()));
    }
    let s_a = realize_class(&target.class, &config.realize)?;
    let class_current = rs_current(&s_a, dict)?.scale(s_a.scale());
    let exact = target.exact_pairings(dict, config.wedge_res)?;
    let mut tp = class_current.pairings.clone();
    for (t, e) in tp.iter_mut().zip(&exact) {
        *t += e;
    }
    let target_vec = CurrentVector::with_proxy_mass(dict, tp)?;

    let fields = decompose_exact(&target.beta, &quadrant_cover(config.cover_overlap), config.cover_margin)?;
    let defect = reconstruction_defect(&fields, &target.beta, dict, config.wedge_res)?;
    let active: Vec<(usize, &ScalarFieldBundle)> = fields.iter().enumerate().filter(|(_, f)| !f.f.is_zero()).collect();
    let per_piece = if active.is_empty() { 0.5 * eps } else { 0.5 * eps / active.len() as f64 };

    // Pieces run in turn: each holds a fine grid, and the tracing inside is
    // already parallel.
    let certs: Vec<Result<_>> = active
        .iter()
        .map(|&(i, f)| {
            let mut cfg = config.certificate;
            let grids = CertificateGrids::sample(f, &cfg)?;
            for _ in 0..=config.max_refinements {
                let c = lemma_alpha_certificate_on(f, &grids, dict, &cfg)?;
                if !c.report.pass {
                    return Err(Error::BudgetInfeasible(format!(
                        "exact part, piece {i}: observed {:.3e} exceeds certificate budget {:.3e}",
                        c.report.max_observed, c.report.max_budget
                    )));
                }
                if c.report.max_budget <= per_piece {
                    return Ok((i, c));
                }
                // Tighten whichever tolerance drives the binding entry.
                let b = &c.report.budget;
                let total = b.total();
                let k = (0..total.len()).max_by(|&x, &y| total[x].total_cmp(&total[y])).unwrap_or(0);
                if b.eq1[k] + b.eq2[k] >= b.cantor[k] {
                    cfg.epsilon *= 0.5;
                } else {
                    cfg.epsilon_measure *= 0.5;
                }
            }
            Err(Error::BudgetInfeasible(format!(
                "exact part, piece {i}: certificate budget stays above {per_piece:.3e} after {} refinements",
                config.max_refinements
            )))
        })
        .collect();
    let certs = certs.into_iter().collect::<Result<Vec<_>>>()?;

    let mut glued = GluedSolenoid::from_base(s_a);
    let bound = glued.transversal_mass();
    let mut chunks = Vec::new();
    let mut pieces = Vec::new();
    let mut with_levelsets = class_current.clone();
    for (i, c) in &certs {
        let parts = chunk(&SolenoidHandle::LevelSet(c.solenoid.clone()), bound)?;
        with_levelsets = with_levelsets.add(&c.current)?;
        pieces.push(PieceReport {
            index: *i,
            epsilon: c.report.config.epsilon,
            epsilon_measure: c.report.config.epsilon_measure,
            observed: c.report.max_observed,
            budget: c.report.max_budget,
            certificate_pass: c.report.pass,
            chunks: parts.len(),
            transversal_mass: c.solenoid.transversal_mass(),
        });
        chunks.extend(parts);
    }

    let sup_d = sup_d_bounds(dict);
    let sup_d_max = sup_d.iter().cloned().fold(0.0, f64::max);
    let dry = plan_all(&glued, &chunks, config.max_tube)?;
    let eps_tube = tube_radius(&dry, sup_d_max, 0.5 * eps, config.max_tube);
    let mut tube_bound = vec![0.0; dict.len()];
    let mut tube_observed = vec![0.0; dict.len()];
    let mut current = glued.current(dict)?;
    for c in &chunks {
        let plan = SurgeryPlan::new(glued, c.clone(), eps_tube)?;
        let out = surgery(&plan, dict)?;
        for k in 0..dict.len() {
            tube_bound[k] += out.bound[k];
            tube_observed[k] += out.correction[k];
        }
        glued = out.solenoid;
        current = out.current;
    }

    let final_distance = weak_distance(&current, &target_vec)?;
    let achieved: Vec<f64> = (0..2).map(|j| dict.basis_index(j).map(|i| current.pairings[i]).unwrap_or(f64::NAN)).collect();
    let class_err = achieved.iter().zip(&target.class).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ue = glued.ue_diagnostic(config.ue_starts, config.ue_iterations)?;
    let class_check =
        ClassCheck { expected: target.class.clone(), achieved, max_error: class_err, pass: class_err <= config.class_tolerance };
    let pass = final_distance <= eps && class_check.pass && ue.spread <= config.ue_tolerance;
    let report = ApproximationReport {
        target: TargetReport {
            class: target.class.clone(),
            dictionary_id: dict.id().to_string(),
            pairings: target_vec.pairings.clone(),
        },
        eps,
        pieces,
        budgets: BudgetReport {
            exact_part: 0.5 * eps,
            tube_part: 0.5 * eps,
            per_piece,
            epsilon_tube: eps_tube,
            tube_bound: tube_bound.iter().cloned().fold(0.0, f64::max),
            tube_observed: tube_observed.iter().cloned().fold(0.0, f64::max),
        },
        distances: StageDistances {
            realized: weak_distance(&class_current, &target_vec)?,
            with_levelsets: weak_distance(&with_levelsets, &target_vec)?,
            glued: final_distance,
        },
        final_distance,
        reconstruction_defect: defect,
        class_check,
        ue_diagnostic: ue,
        surgeries: chunks.len(),
        pass,
    };
    Ok(Approximation { solenoid: glued, current, target: target_vec, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{build_dictionary, Monomial, Phase, TrigPoly};

    fn sin_sin(amp: f64) -> SmoothFunction {
        TrigPoly::monomial(2, Monomial::new(&[(1, Phase::Sin), (1, Phase::Sin)]), amp).into()
    }

    fn quick() -> ApproximateConfig {
        ApproximateConfig { ue_starts: 10, ue_iterations: 10_000, ..ApproximateConfig::default() }
    }

    #[test]
    fn zero_primitive_gives_the_realized_current() {
        let dict = build_dictionary(2, 1, 2).unwrap();
        let target = TargetCurrent { class: vec![0.3, 0.7], beta: SmoothFunction::zero(2) };
        let a = approximate_current(&target, 0.05, &dict, &quick()).unwrap();
        assert!(a.report.pieces.is_empty());
        assert_eq!(a.report.surgeries, 0);
        assert!(a.report.final_distance <= 1e-12, "{}", a.report.final_distance);
        assert!(a.report.class_check.pass);
    }

    #[test]
    fn quadrant_pieces_reconstruct_the_primitive() {
        let dict = build_dictionary(2, 1, 2).unwrap();
        let beta = sin_sin(0.1);
        let fields = decompose_exact(&beta, &quadrant_cover(0.02), 0.2).unwrap();
        assert_eq!(fields.len(), 4);
        assert!(reconstruction_defect(&fields, &beta, &dict, 256).unwrap() <= 1e-3);
    }

    #[test]
    fn whole_torus_box_gives_one_piece() {
        let dict = build_dictionary(2, 1, 2).unwrap();
        let beta = sin_sin(0.1);
        let whole = BoxRegion { n: 2, center: [0.5, 0.5, 0.0], half: [0.5, 0.5, 0.0] };
        let fields = decompose_exact(&beta, &[whole], 0.2).unwrap();
        assert_eq!(fields.len(), 1);
        assert!(reconstruction_defect(&fields, &beta, &dict, 128).unwrap() <= 1e-9);
    }

    #[test]
    fn nonpositive_eps_is_rejected() {
        let dict = build_dictionary(2, 1, 2).unwrap();
        let target = TargetCurrent { class: vec![0.3, 0.7], beta: SmoothFunction::zero(2) };
        assert!(matches!(approximate_current(&target, 0.0, &dict, &quick()), Err(Error::InvalidArgument(_))));
    }
}
