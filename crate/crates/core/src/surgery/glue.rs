use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::circle::{
    birkhoff_spread, compose_holonomy, standard_observables, transport_map, Band, BirkhoffReport, CantorTransversal,
    HolonomySystem, IdentityMap, TransportMap, TransversalMeasure,
};
use crate::forms::dictionary::trig_d;
use crate::forms::quadrature::{norm, sub};
use crate::forms::{CurrentVector, Dictionary, Point};
use crate::levelset::ContourFamily;
use crate::num::{sig17, wrap_half};
use crate::suspension::{rs_current, SuspensionSolenoid};
use crate::{Error, Result};

/// Thin loop left by one leaf's excursion through the tube: out along `+eps`
/// and back along `-eps` from the straight path `start -> end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    #[serde(with = "sig17")]
    pub weight: f64,
    pub start: Point,
    pub end: Point,
    #[serde(with = "sig17")]
    pub length: f64,
}

impl Tube {
    pub fn loop_points(&self, eps: f64) -> Vec<Point> {
        let d = sub(&self.end, &self.start);
        let len = norm(&d);
        if len == 0.0 {
            return Vec::new();
        }
        let nrm = [-d[1] / len * eps, d[0] / len * eps, 0.0];
        let off = |p: &Point, s: f64| [p[0] + s * nrm[0], p[1] + s * nrm[1], 0.0];
        let a = off(&self.start, 1.0);
        vec![a, off(&self.end, 1.0), off(&self.end, -1.0), off(&self.start, -1.0), a]
    }
}

/// A level-set chunk glued into the base solenoid.
#[derive(Debug, Clone)]
pub struct GluedPiece {
    pub family: ContourFamily,
    /// Cumulative-measure interval of the base transversal it replaces.
    pub source_mass: [f64; 2],
    pub tubes: Vec<Tube>,
    pub epsilon_tube: f64,
}

impl GluedPiece {
    /// Pairings of all tube loops, weighted.
    pub fn tube_correction(&self, dict: &Dictionary) -> Result<Vec<f64>> {
        let mut out = vec![0.0; dict.len()];
        for t in &self.tubes {
            let pts = t.loop_points(self.epsilon_tube);
            for w in pts.windows(2) {
                dict.pair_segment_into(&w[0], &w[1], t.weight, &mut out);
            }
        }
        Ok(out)
    }

    /// `sup|d w| * sum weight * 2 eps (length + 2 eps)` per entry: Stokes on
    /// each loop, with `4 eps^2` per tube for the smoothed corners.
    pub fn tube_bound(&self, sup_d: &[f64]) -> Vec<f64> {
        let e = self.epsilon_tube;
        let g: f64 = self.tubes.iter().map(|t| t.weight * 2.0 * e * (t.length + 2.0 * e)).sum();
        sup_d.iter().map(|s| s * g).collect()
    }
}

/// Base suspension solenoid (with its measure scaled by the solenoid's
/// positive scale) plus the chunks glued into it.
#[derive(Debug, Clone)]
pub struct GluedSolenoid {
    base: SuspensionSolenoid,
    system: HolonomySystem,
    pieces: Vec<GluedPiece>,
    /// Cumulative-measure position where the next sub-transversal starts.
    cursor: f64,
}

impl GluedSolenoid {
    pub fn from_base(base: SuspensionSolenoid) -> Self {
        let s = base.system();
        let system = HolonomySystem::new(s.transversal.clone(), s.map.clone(), s.measure.scaled(base.scale()));
        Self { base, system, pieces: Vec::new(), cursor: 0.0 }
    }

    pub fn base(&self) -> &SuspensionSolenoid {
        &self.base
    }

    pub fn system(&self) -> &HolonomySystem {
        &self.system
    }

    pub fn pieces(&self) -> &[GluedPiece] {
        &self.pieces
    }

    pub fn transversal_mass(&self) -> f64 {
        self.system.measure.total()
    }

    pub fn current(&self, dict: &Dictionary) -> Result<CurrentVector> {
        let mut cur = rs_current(&self.base, dict)?.scale(self.base.scale());
        for p in &self.pieces {
            let mut v = p.family.current(dict)?;
            for (a, c) in v.pairings.iter_mut().zip(p.tube_correction(dict)?) {
                *a += c;
            }
            cur = cur.add(&v)?;
        }
        Ok(cur)
    }

    pub fn ue_diagnostic(&self, starts: usize, iterations: usize) -> Result<BirkhoffReport> {
        birkhoff_spread(&self.system, &standard_observables(&self.system.transversal), starts, iterations)
    }

    /// Bands of the base transversal between cumulative masses `m0 < m1`,
    /// cut proportionally at the ends.
    fn sub_transversal(&self, m0: f64, m1: f64) -> Result<(CantorTransversal, TransversalMeasure)> {
        let t = &self.system.transversal;
        let mut bands = Vec::new();
        let mut weights = Vec::new();
        let mut c: f64 = 0.0;
        for (b, &w) in t.bands().iter().zip(self.system.measure.weights()) {
            let (lo, hi) = (c.max(m0), (c + w).min(m1));
            if hi > lo && w > 0.0 {
                let (f0, f1) = ((lo - c) / w, (hi - c) / w);
                bands.push(Band::plain(b.lo + f0 * b.width(), b.lo + f1 * b.width()));
                weights.push(hi - lo);
            }
            c += w;
            if c >= m1 {
                break;
            }
        }
        Ok((CantorTransversal::from_bands(t.depth(), bands)?, TransversalMeasure::new(weights)))
    }

    /// Base transversal point at cumulative mass `m`.
    fn point_at_mass(&self, m: f64) -> f64 {
        let t = &self.system.transversal;
        let mut c = 0.0;
        for (b, &w) in t.bands().iter().zip(self.system.measure.weights()) {
            if c + w >= m && w > 0.0 {
                return b.lo + ((m - c) / w).clamp(0.0, 1.0) * b.width();
            }
            c += w;
        }
        t.span().1
    }
}

/// Everything needed to glue a level-set chunk into a glued solenoid.
#[derive(Debug, Clone)]
pub struct SurgeryPlan {
    pub s1: GluedSolenoid,
    pub s2: ContourFamily,
    pub transport: Option<TransportMap>,
    pub source: Option<(CantorTransversal, TransversalMeasure)>,
    /// Chunk transversal rebuilt order-isomorphic to `source`.
    pub target: Option<(CantorTransversal, TransversalMeasure)>,
    pub source_mass: [f64; 2],
    pub tubes: Vec<Tube>,
    pub epsilon_tube: f64,
}

impl SurgeryPlan {
    /// Chooses the next sub-transversal of `s1` with the chunk's mass
    /// (left to right, wrapping to the start when the rest is too short),
    /// the transport onto the chunk's transversal, and one tube per leaf.
    pub fn new(s1: GluedSolenoid, s2: ContourFamily, epsilon_tube: f64) -> Result<Self> {
        if !(epsilon_tube > 0.0) {
            return Err(Error::InvalidArgument(format!("tube radius must be positive, got {epsilon_tube}")));
        }
        let m = s2.transversal_mass();
        let total = s1.transversal_mass();
        if m > total * (1.0 + 1e-12) {
            return Err(Error::MassMismatch(m, total));
        }
        if m <= 0.0 {
            let c = s1.cursor;
            return Ok(Self {
                s1,
                s2,
                transport: None,
                source: None,
                target: None,
                source_mass: [c, c],
                tubes: Vec::new(),
                epsilon_tube,
            });
        }
        let m0 = if s1.cursor + m > total { 0.0 } else { s1.cursor };
        let m1 = (m0 + m).min(total);
        let (st, sm) = s1.sub_transversal(m0, m1)?;
        let (a, b) = st.span();
        let place = |x: f64| 0.25 + 0.5 * (x - a) / (b - a);
        let tb: Vec<Band> = st.bands().iter().map(|bd| Band::plain(place(bd.lo), place(bd.hi))).collect();
        let tt = CantorTransversal::from_bands(st.depth(), tb)?;
        let tm = sm.clone();
        let phi = transport_map((&st, &sm), (&tt, &tm))?;

        // Leaf k occupies the cumulative-mass slice [c, c + w) of the source;
        // its tube starts at the base transversal point in the middle of it.
        let mut tubes = Vec::new();
        let mut c = m0;
        let base = s1.base();
        for (ai, ci) in s2.leaves() {
            let atom = &s2.atoms[ai];
            let y = s1.point_at_mass((c + 0.5 * atom.weight).min(m1));
            c += atom.weight;
            let p1 = base.piece(y)[0];
            let contour = &atom.contours[ci];
            let end = contour.points[..contour.points.len() - 1]
                .iter()
                .map(|q| [p1[0] + wrap_half(q[0] - p1[0]), p1[1] + wrap_half(q[1] - p1[1]), 0.0])
                .min_by(|u, v| norm(&sub(u, &p1)).total_cmp(&norm(&sub(v, &p1))))
                .expect("contours have points");
            tubes.push(Tube { weight: atom.weight, start: p1, end, length: norm(&sub(&end, &p1)) });
        }
        Ok(Self {
            s1,
            s2,
            transport: Some(phi),
            source: Some((st, sm)),
            target: Some((tt, tm)),
            source_mass: [m0, m1],
            tubes,
            epsilon_tube,
        })
    }

    /// Total tube volume `sum weight * 2 eps (length + 2 eps)`.
    pub fn tube_volume(&self) -> f64 {
        let e = self.epsilon_tube;
        self.tubes.iter().map(|t| t.weight * 2.0 * e * (t.length + 2.0 * e)).sum()
    }

    /// `s1` with its cursor moved past this plan's sub-transversal, for
    /// planning later surgeries without performing this one.
    pub fn advanced(&self) -> GluedSolenoid {
        let mut g = self.s1.clone();
        g.cursor = self.source_mass[1];
        g
    }

    pub fn max_tube_length(&self) -> f64 {
        self.tubes.iter().map(|t| t.length).fold(0.0, f64::max)
    }
}

/// `sup |d w|` for every entry, from the l1 norm of the coefficients.
pub fn sup_d_bounds(dict: &Dictionary) -> Vec<f64> {
    dict.entries()
        .iter()
        .map(|e| trig_d(&e.form).components().map(|(_, p)| p.terms().map(|(_, c)| c.abs()).sum::<f64>()).fold(0.0, f64::max))
        .collect()
}

const ROUNDING_SLACK: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone)]
pub struct SurgeryOutcome {
    pub solenoid: GluedSolenoid,
    pub current: CurrentVector,
    /// Per-entry `|<S> - <S1> - <S2>|`.
    pub correction: Vec<f64>,
    pub bound: Vec<f64>,
}

/// Glues the chunk into `s1`: the holonomy becomes `phi^-1 o id o phi o h1`
/// and the current is the sum of both currents plus the tube loops.
pub fn surgery(plan: &SurgeryPlan, dict: &Dictionary) -> Result<SurgeryOutcome> {
    let mut out = plan.s1.clone();
    let before = plan.s1.current(dict)?;
    let Some(phi) = &plan.transport else {
        return Ok(SurgeryOutcome {
            solenoid: out,
            correction: vec![0.0; dict.len()],
            bound: vec![0.0; dict.len()],
            current: before,
        });
    };
    let (tt, tm) = plan.target.clone().expect("target exists with a transport");
    let h2 = HolonomySystem::new(tt, Arc::new(IdentityMap), tm);
    out.system = compose_holonomy(&plan.s1.system, &h2, phi)?;
    let piece = GluedPiece {
        family: plan.s2.clone(),
        source_mass: plan.source_mass,
        tubes: plan.tubes.clone(),
        epsilon_tube: plan.epsilon_tube,
    };
    let correction = piece.tube_correction(dict)?;
    let chunk_current = plan.s2.current(dict)?;
    // Rounding allowance: closed entries have a zero analytic bound but
    // pick up roundoff from the loop sums and the current additions.
    let e = plan.epsilon_tube;
    let loops: f64 = plan.tubes.iter().map(|t| t.weight * (2.0 * t.length + 8.0 * e)).sum();
    let bound = piece
        .tube_bound(&sup_d_bounds(dict))
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let scale = before.pairings[i].abs() + chunk_current.pairings[i].abs() + loops * dict.entry(i).sup_norm;
            b + ROUNDING_SLACK * scale
        })
        .collect();
    let mut current = before.add(&chunk_current)?;
    for (a, c) in current.pairings.iter_mut().zip(&correction) {
        *a += c;
    }
    out.cursor = plan.source_mass[1];
    out.pieces.push(piece);
    Ok(SurgeryOutcome { solenoid: out, current, correction: correction.iter().map(|c| c.abs()).collect(), bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::build_dictionary;
    use crate::levelset::{Contour, LevelAtom};
    use crate::suspension::{realize_class, RealizeConfig};

    fn base() -> SuspensionSolenoid {
        realize_class(&[0.3, 0.7], &RealizeConfig { depth: 512, ue_iterations: 0, ..RealizeConfig::default() }).unwrap()
    }

    fn blob(mass: f64) -> ContourFamily {
        let circle = |r: f64| -> Contour {
            let pts = (0..=64)
                .map(|k| {
                    let t = -(k as f64) / 64.0 * std::f64::consts::TAU;
                    [0.7 + r * t.cos(), 0.3 + r * t.sin(), 0.0]
                })
                .collect();
            Contour { value: r, points: pts }
        };
        let atoms =
            (1..=4).map(|k| LevelAtom { value: k as f64, weight: mass / 4.0, contours: vec![circle(0.03 * k as f64)] }).collect();
        ContourFamily { atoms }
    }

    #[test]
    fn error_within_bound_and_linear_in_tube_radius() {
        let dict = build_dictionary(2, 1, 2).unwrap();
        let g = GluedSolenoid::from_base(base());
        let mut errs = Vec::new();
        for eps in [1e-1, 1e-2, 1e-3] {
            let plan = SurgeryPlan::new(g.clone(), blob(0.1), eps).unwrap();
            assert!(plan.tube_volume() <= (plan.max_tube_length() + 2.0) * eps * 0.1 + 1e-15);
            let out = surgery(&plan, &dict).unwrap();
            let direct = g.current(&dict).unwrap().add(&blob(0.1).current(&dict).unwrap()).unwrap();
            let diff = out.current.abs_diff(&direct).unwrap();
            for i in 0..dict.len() {
                assert!(diff[i] <= out.bound[i] + 1e-15, "{eps} {i} {} {}", diff[i], out.bound[i]);
            }
            errs.push(diff.iter().cloned().fold(0.0, f64::max));
        }
        let slope = (errs[0] / errs[2]).log10() / 2.0;
        assert!(slope >= 0.9, "{errs:?}");
    }

    #[test]
    fn empty_chunk_changes_nothing() {
        let dict = build_dictionary(2, 1, 1).unwrap();
        let g = GluedSolenoid::from_base(base());
        let out = surgery(&SurgeryPlan::new(g.clone(), ContourFamily::default(), 1e-2).unwrap(), &dict).unwrap();
        let d = out.current.abs_diff(&g.current(&dict).unwrap()).unwrap();
        assert!(d.iter().all(|&x| x <= 1e-12));
    }

    #[test]
    fn holonomy_is_unchanged_by_trivial_gluing() {
        let dict = build_dictionary(2, 1, 1).unwrap();
        let g = GluedSolenoid::from_base(base());
        let out = surgery(&SurgeryPlan::new(g.clone(), blob(0.2), 1e-2).unwrap(), &dict).unwrap();
        for &y in &g.system().start_points(50) {
            let a = g.system().map.apply(y);
            let b = out.solenoid.system().map.apply(y);
            assert!((a - b).abs() < 1e-12, "{y} {a} {b}");
        }
        let r = out.solenoid.ue_diagnostic(20, 20000).unwrap();
        assert!(r.spread <= 0.01);
    }

    #[test]
    fn oversized_chunk_is_a_mass_mismatch() {
        let g = GluedSolenoid::from_base(base());
        let m = g.transversal_mass();
        assert!(matches!(SurgeryPlan::new(g, blob(2.0 * m), 1e-2), Err(Error::MassMismatch(..))));
    }
}
