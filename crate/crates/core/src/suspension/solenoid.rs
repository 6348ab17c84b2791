use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::geometry::{CoreModel, Cycle};
use crate::circle::{
    birkhoff_spread, golden_mean, invariant_measure, partition_by_mass, standard_observables, Band, BirkhoffReport,
    CantorTransversal, DenjoyDocument, DenjoyMap, GapSchedule, HolonomySystem, RigidRotation, RotationNumber, TransversalMeasure,
    DEFAULT_SCHEDULE_RANGE,
};
use crate::forms::quadrature::{line_integral, norm, sub, Polyline};
use crate::forms::{build_dictionary, CurrentVector, Dictionary, KForm, Point};
use crate::num::{frac, sig17};
use crate::{par, Error, Result};

/// Allowed deviation of the total mass from 1.
pub const MASS_TOL: f64 = 1e-9;

/// Bands per work unit when pairing in parallel; fixed so that sums do not
/// depend on the thread count.
const BAND_CHUNK: usize = 64;

/// How leaves through the transversal are drawn in `T^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Embedding {
    /// Leaf through `y` runs along `t -> (t, y + rho t)`, `t in [0, 1]`.
    Rotation {
        #[serde(with = "sig17")]
        rho: f64,
    },
    /// Leaf through `y` crosses the core, then follows the cycle assigned to
    /// the part of the transversal containing `y` back to the entry arc.
    Core {
        core: CoreModel,
        cycles: Vec<Cycle>,
        /// `cuts[i]` is the left end of part `i`; part `i` uses `cycles[i]`.
        #[serde(with = "sig17::vec")]
        cuts: Vec<f64>,
    },
}

impl Embedding {
    /// Index of the itinerary part containing `y`.
    pub fn part_of(&self, y: f64) -> usize {
        match self {
            Embedding::Rotation { .. } => 0,
            Embedding::Core { cuts, .. } => cuts.partition_point(|&c| c <= y).saturating_sub(1),
        }
    }
}

/// Measured 1-solenoid given as the suspension of a holonomy system, with
/// an explicit leafwise immersion into `T^n`.
///
/// The transversal measure is scaled so that leafwise length times
/// transversal measure is 1.
#[derive(Debug, Clone)]
pub struct SuspensionSolenoid {
    n: usize,
    system: HolonomySystem,
    denjoy: Option<DenjoyMap>,
    embedding: Embedding,
    orientation: f64,
    scale: f64,
}

/// Parameters of [`realize_class`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RealizeConfig {
    pub rho: f64,
    pub schedule_range: usize,
    pub schedule_total: f64,
    pub depth: usize,
    pub core_radius: f64,
    pub core_width: f64,
    pub ue_starts: usize,
    pub ue_iterations: usize,
    pub ue_tolerance: f64,
}

impl Default for RealizeConfig {
    fn default() -> Self {
        Self {
            rho: golden_mean(),
            schedule_range: DEFAULT_SCHEDULE_RANGE,
            schedule_total: 0.5,
            depth: 2048,
            core_radius: 0.05,
            core_width: 0.1,
            ue_starts: 10,
            ue_iterations: 20_000,
            ue_tolerance: 0.01,
        }
    }
}

impl RealizeConfig {
    pub fn denjoy_map(&self) -> Result<DenjoyMap> {
        let rho = RotationNumber::new(self.rho)?;
        let schedule = GapSchedule::inverse_square(self.schedule_range, self.schedule_total)?;
        DenjoyMap::build_checked(rho, schedule, self.depth)
    }
}

impl SuspensionSolenoid {
    /// Assembles a solenoid and rescales its measure to unit total mass.
    pub fn from_system(
        n: usize,
        system: HolonomySystem,
        denjoy: Option<DenjoyMap>,
        embedding: Embedding,
        scale: f64,
    ) -> Result<Self> {
        let mut s = Self { n, system, denjoy, embedding, orientation: 1.0, scale };
        let mass = s.raw_mass();
        if !(mass > 0.0) {
            return Err(Error::NonPositiveMass(mass));
        }
        s.system.measure = s.system.measure.scaled(1.0 / mass);
        Ok(s)
    }

    /// Suspension of the rigid rotation by `rho`, drawn as straight lines of
    /// slope `rho` on `T^2`; the transversal `{x = 0}` is cut into `bands`
    /// equal arcs.
    pub fn rotation(rho: f64, bands: usize) -> Result<Self> {
        RotationNumber::new(rho)?;
        if bands == 0 {
            return Err(Error::InvalidArgument("need at least one band".into()));
        }
        let b: Vec<Band> = (0..bands)
            .map(|k| {
                let (lo, hi) = (k as f64 / bands as f64, (k + 1) as f64 / bands as f64);
                Band { lo, hi, mlo: lo, mhi: hi, rep: 0.5 * (lo + hi) }
            })
            .collect();
        let t = CantorTransversal::from_bands(0, b)?;
        let m = TransversalMeasure::new(vec![1.0 / bands as f64; bands]);
        let system = HolonomySystem::new(t, Arc::new(RigidRotation::new(rho)), m);
        let scale = (1.0 + rho * rho).sqrt();
        Self::from_system(2, system, None, Embedding::Rotation { rho }, scale)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn system(&self) -> &HolonomySystem {
        &self.system
    }

    pub fn denjoy(&self) -> Option<&DenjoyMap> {
        self.denjoy.as_ref()
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    /// Factor with `homology_class * scale` equal to the realized class.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn transversal(&self) -> &CantorTransversal {
        &self.system.transversal
    }

    pub fn measure(&self) -> &TransversalMeasure {
        &self.system.measure
    }

    /// The same solenoid with reversed orientation.
    pub fn reversed(&self) -> Self {
        let mut s = self.clone();
        s.orientation = -s.orientation;
        s
    }

    /// The same solenoid with its measure multiplied by `c > 0` (mass `c`).
    pub fn with_mass(&self, c: f64) -> Self {
        let mut s = self.clone();
        s.system.measure = s.system.measure.scaled(c / s.total_mass());
        s
    }

    /// Leaf path from the entry point of `y` to the entry point of `h(y)`,
    /// shifted by the cycle it travels along.
    pub fn piece(&self, y: f64) -> Vec<Point> {
        let lift = self.system.map.lift(y);
        match &self.embedding {
            Embedding::Rotation { .. } => vec![[0.0, y, 0.0], [1.0, lift, 0.0]],
            Embedding::Core { core, cycles, .. } => {
                let c = &cycles[self.embedding.part_of(y)];
                let mut end = core.entry(frac(lift));
                end[c.axis] += c.sign as f64;
                vec![core.entry(y), core.exit(y, lift), end]
            }
        }
    }

    pub fn piece_length(&self, y: f64) -> f64 {
        self.piece(y).windows(2).map(|w| norm(&sub(&w[1], &w[0]))).sum()
    }

    fn raw_mass(&self) -> f64 {
        let bands = self.system.transversal.bands();
        let w = self.system.measure.weights();
        par::sum_range(bands.len().div_ceil(BAND_CHUNK), |c| {
            let r = c * BAND_CHUNK..((c + 1) * BAND_CHUNK).min(bands.len());
            r.map(|i| w[i] * self.piece_length(bands[i].rep)).sum()
        })
    }

    /// Leafwise length integrated against the transversal measure.
    pub fn total_mass(&self) -> f64 {
        self.raw_mass()
    }

    /// Mean return length with respect to the normalized measure.
    pub fn mean_return_length(&self) -> f64 {
        1.0 / self.system.measure.total()
    }

    fn check_normalized(&self) -> Result<()> {
        let m = self.total_mass();
        if (m - 1.0).abs() > MASS_TOL {
            return Err(Error::NotNormalized(m));
        }
        Ok(())
    }

    /// Same solenoid over the depth-`depth` transversal of its Denjoy map.
    pub fn refined(&self, depth: usize) -> Result<Self> {
        let map = self.denjoy.clone().ok_or_else(|| Error::InvalidArgument("only Denjoy suspensions can be refined".into()))?;
        let t = CantorTransversal::from_denjoy(&map, depth)?;
        let m = invariant_measure(&map, depth)?;
        let system = HolonomySystem::new(t, Arc::new(map.clone()), m);
        let mut s = Self::from_system(self.n, system, Some(map), self.embedding.clone(), 1.0)?;
        s.orientation = self.orientation;
        s.scale = self.scale * self.mean_return_length() / s.mean_return_length();
        Ok(s)
    }

    /// Birkhoff-spread diagnostic of the holonomy.
    pub fn ue_diagnostic(&self, starts: usize, iterations: usize) -> Result<BirkhoffReport> {
        birkhoff_spread(&self.system, &standard_observables(&self.system.transversal), starts, iterations)
    }

    pub fn document(&self) -> SolenoidDocument {
        let holonomy = match (&self.embedding, &self.denjoy) {
            (Embedding::Rotation { .. }, _) => HolonomyDocument::Rotation { bands: self.transversal().len() },
            (_, Some(map)) if self.system.transversal.depth() > 0 => {
                HolonomyDocument::Denjoy(map.document(&self.system.transversal, &self.system.measure))
            }
            _ => HolonomyDocument::Other {
                bands: self.transversal().bands().iter().map(|b| [b.lo, b.hi]).collect(),
                weights: self.measure().weights().to_vec(),
            },
        };
        SolenoidDocument {
            n: self.n,
            orientation: self.orientation,
            scale: self.scale,
            holonomy,
            embedding: self.embedding.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HolonomyDocument {
    Rotation {
        bands: usize,
    },
    Denjoy(DenjoyDocument),
    /// Composed holonomies are recorded by their transversal only.
    Other {
        #[serde(with = "sig17::pairs")]
        bands: Vec<[f64; 2]>,
        #[serde(with = "sig17::vec")]
        weights: Vec<f64>,
    },
}

/// JSON form of a solenoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolenoidDocument {
    pub n: usize,
    #[serde(with = "sig17")]
    pub orientation: f64,
    #[serde(with = "sig17")]
    pub scale: f64,
    pub holonomy: HolonomyDocument,
    pub embedding: Embedding,
}

impl SolenoidDocument {
    pub fn restore(&self) -> Result<SuspensionSolenoid> {
        let mut s = match (&self.holonomy, &self.embedding) {
            (HolonomyDocument::Rotation { bands }, Embedding::Rotation { rho }) => SuspensionSolenoid::rotation(*rho, *bands)?,
            (HolonomyDocument::Denjoy(doc), emb) => {
                let (map, t, m) = doc.restore()?;
                let system = HolonomySystem::new(t, Arc::new(map.clone()), m);
                SuspensionSolenoid { n: self.n, system, denjoy: Some(map), embedding: emb.clone(), orientation: 1.0, scale: 1.0 }
            }
            _ => return Err(Error::Serialization("holonomy cannot be restored from this document".into())),
        };
        s.orientation = self.orientation;
        s.scale = self.scale;
        Ok(s)
    }
}

/// Ruelle-Sullivan pairing with a 1-form: the sum over bands of band weight
/// times the line integral along the leaf piece through the band
/// representative.
pub fn rs_pair(solenoid: &SuspensionSolenoid, form: &KForm, res: usize) -> Result<f64> {
    solenoid.check_normalized()?;
    if form.dim() != solenoid.n || form.degree() != 1 {
        return Err(Error::InvalidArgument(format!(
            "need a 1-form on T^{}, got a {}-form on T^{}",
            solenoid.n,
            form.degree(),
            form.dim()
        )));
    }
    let bands = solenoid.system.transversal.bands();
    let w = solenoid.system.measure.weights();
    let parts = par::map_range(bands.len().div_ceil(BAND_CHUNK), |c| {
        let r = c * BAND_CHUNK..((c + 1) * BAND_CHUNK).min(bands.len());
        let mut s = 0.0;
        for i in r {
            let p = Polyline::new(solenoid.piece(bands[i].rep));
            s += w[i] * line_integral(&p, form, res)?;
        }
        Ok(s)
    });
    let total: f64 = parts.into_iter().collect::<Result<Vec<f64>>>()?.into_iter().sum();
    Ok(solenoid.orientation * total)
}

/// [`rs_pair`] against every dictionary entry, with the line integrals
/// along the straight leaf pieces done in closed form.
pub fn rs_current(solenoid: &SuspensionSolenoid, dict: &Dictionary) -> Result<CurrentVector> {
    solenoid.check_normalized()?;
    if dict.dim() != solenoid.n || dict.form_degree() != 1 {
        return Err(Error::DictionaryMismatch(format!("{} for a solenoid in T^{}", dict.id(), solenoid.n)));
    }
    let bands = solenoid.system.transversal.bands();
    let w = solenoid.system.measure.weights();
    let pairings = par::sum_vectors(bands.len().div_ceil(BAND_CHUNK), dict.len(), |c| {
        let r = c * BAND_CHUNK..((c + 1) * BAND_CHUNK).min(bands.len());
        let mut out = vec![0.0; dict.len()];
        for i in r {
            let p = solenoid.piece(bands[i].rep);
            for seg in p.windows(2) {
                dict.pair_segment_into(&seg[0], &seg[1], w[i], &mut out);
            }
        }
        out
    });
    let pairings = pairings.into_iter().map(|p| solenoid.orientation * p).collect();
    CurrentVector::new(dict, pairings, solenoid.total_mass())
}

/// Pairings with the closed basis forms `dx_1, ..., dx_n`.
pub fn homology_class(solenoid: &SuspensionSolenoid) -> Result<Vec<f64>> {
    let basis = build_dictionary(solenoid.n, 1, 0)?;
    Ok(rs_current(solenoid, &basis)?.pairings)
}

/// Builds a uniquely ergodic solenoid whose homology class is a positive
/// multiple of `a`: coordinate loops `C_i` weighted by `|a_i| / sum |a_j|`,
/// oriented by the sign of `a_i`, joined through a core ball carrying the
/// Denjoy holonomy.
pub fn realize_class(a: &[f64], config: &RealizeConfig) -> Result<SuspensionSolenoid> {
    let n = a.len();
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidArgument(format!("classes live in H_1(T^2) or H_1(T^3), got length {n}")));
    }
    if a.iter().all(|&v| v == 0.0) {
        return Err(Error::NullClass);
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite class {a:?}")));
    }
    let s1: f64 = a.iter().map(|v| v.abs()).sum();
    let active: Vec<usize> = (0..n).filter(|&i| a[i] != 0.0).collect();
    let lambdas: Vec<f64> = active.iter().map(|&i| a[i].abs() / s1).collect();

    let mut center = [0.5; 3];
    if n == 2 {
        center[2] = 0.0;
    }
    let core = CoreModel::new(n, center, config.core_radius, config.core_width)?;
    let cycles =
        active.iter().map(|&i| Cycle::coordinate(&core, i, if a[i] > 0.0 { 1 } else { -1 })).collect::<Result<Vec<_>>>()?;

    let map = config.denjoy_map()?;
    let t = CantorTransversal::from_denjoy(&map, config.depth)?;
    let m = invariant_measure(&map, config.depth)?;
    let partition = partition_by_mass(&t, &m, &lambdas)?;
    let bands = t.bands();
    let cuts = partition
        .ranges
        .iter()
        .map(|r| if r.start == 0 { 0.0 } else { 0.5 * (bands[r.start - 1].hi + bands[r.start].lo) })
        .collect();
    let achieved = partition.masses.clone();

    let system = HolonomySystem::new(t, Arc::new(map.clone()), m);
    let embedding = Embedding::Core { core, cycles, cuts };
    let mut s = SuspensionSolenoid::from_system(n, system, Some(map), embedding, 1.0)?;
    // The class is sum_i achieved_i sign_i e_i / L with L the mean return
    // length; scale it so that it reads a / scale.
    let ach_sum: f64 = achieved.iter().sum();
    s.scale = s1 * ach_sum * s.mean_return_length();

    if config.ue_iterations > 0 {
        let report = s.ue_diagnostic(config.ue_starts, config.ue_iterations)?;
        if report.spread > config.ue_tolerance {
            return Err(Error::NotUniquelyErgodic { spread: report.spread, tolerance: config.ue_tolerance });
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{EntryFlag, SmoothFunction, TrigPoly};

    fn quick_config() -> RealizeConfig {
        RealizeConfig { depth: 512, ..RealizeConfig::default() }
    }

    #[test]
    fn rotation_suspension_class() {
        let rho = golden_mean();
        let s = SuspensionSolenoid::rotation(rho, 256).unwrap();
        let dx = rs_pair(&s, &KForm::basis(2, &[0]).unwrap(), 1024).unwrap();
        let dy = rs_pair(&s, &KForm::basis(2, &[1]).unwrap(), 1024).unwrap();
        assert!((dx * s.scale() - 1.0).abs() < 1e-6);
        assert!((dy * s.scale() - rho).abs() < 1e-6);
        let c = homology_class(&s.reversed()).unwrap();
        assert!((c[0] * s.scale() + 1.0).abs() < 1e-6);
        assert!((c[1] * s.scale() + rho).abs() < 1e-6);
    }

    #[test]
    fn unnormalized_solenoid_is_rejected() {
        let s = SuspensionSolenoid::rotation(golden_mean(), 16).unwrap().with_mass(2.0);
        assert!(matches!(rs_pair(&s, &KForm::basis(2, &[0]).unwrap(), 256), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn realized_classes_and_closedness() {
        let dict = build_dictionary(2, 1, 2).unwrap();
        for a in [[1.0, 0.0], [0.3, 0.7], [-0.3, 0.7]] {
            let s = realize_class(&a, &quick_config()).unwrap();
            assert!(s.scale() > 0.0);
            let v = rs_current(&s, &dict).unwrap();
            assert!((v.mass - 1.0).abs() < 1e-9);
            for (j, aj) in a.iter().enumerate() {
                let got = v.pairings[dict.basis_index(j).unwrap()] * s.scale();
                assert!((got - aj).abs() < 3e-3, "a={a:?} got {got}");
            }
            for i in dict.indices_with(EntryFlag::Exact) {
                assert!(v.pairings[i].abs() < 1e-3, "{}: {}", dict.entry(i).label, v.pairings[i]);
            }
        }
        assert!(matches!(realize_class(&[0.0, 0.0], &quick_config()), Err(Error::NullClass)));
    }

    #[test]
    fn quadrature_pairing_matches_closed_form() {
        let s = realize_class(&[0.3, 0.7], &RealizeConfig { depth: 64, ue_iterations: 0, ..RealizeConfig::default() }).unwrap();
        let dict = build_dictionary(2, 1, 1).unwrap();
        let v = rs_current(&s, &dict).unwrap();
        for i in [0, 5, 13] {
            let w = dict.entry(i).form.to_kform();
            let p = rs_pair(&s, &w, 4096).unwrap();
            assert!((p - v.pairings[i]).abs() < 1e-6, "{p} vs {}", v.pairings[i]);
        }
        let g: SmoothFunction = TrigPoly::constant(2, 1.0).into();
        assert!(rs_pair(&s, &KForm::function(g), 64).is_err());
    }

    #[test]
    fn document_round_trip() {
        let s = realize_class(&[0.3, -0.7], &RealizeConfig { depth: 32, ue_iterations: 0, ..RealizeConfig::default() }).unwrap();
        let json = serde_json::to_string(&s.document()).unwrap();
        let doc: SolenoidDocument = serde_json::from_str(&json).unwrap();
        let back = doc.restore().unwrap();
        let dict = build_dictionary(2, 1, 1).unwrap();
        let a = rs_current(&s, &dict).unwrap();
        let b = rs_current(&back, &dict).unwrap();
        assert_eq!(a, b);
    }
}
