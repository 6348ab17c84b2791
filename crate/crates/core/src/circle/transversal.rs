use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::denjoy::{Code, DenjoyMap};
use crate::error::{Error, Result};
use crate::num::frac;

/// A closed arc of a transversal.
///
/// `lo..=hi` are positions on the transversal; `mlo..=mhi` is the image of
/// the band in measure coordinates (the semiconjugacy image for Denjoy
/// transversals, the band itself otherwise). `rep` is the point splitting
/// the band's mass in half.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub mlo: f64,
    pub mhi: f64,
    pub rep: f64,
}

impl Band {
    pub fn plain(lo: f64, hi: f64) -> Self {
        Self { lo, hi, mlo: lo, mhi: hi, rep: 0.5 * (lo + hi) }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Finite-depth representation of a Cantor set: cyclically ordered,
/// pairwise disjoint closed bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorTransversal {
    depth: usize,
    bands: Vec<Band>,
}

impl CantorTransversal {
    /// Bands of the circle minus the gaps `I_n`, `|n| <= depth`.
    pub fn from_denjoy(map: &DenjoyMap, depth: usize) -> Result<Self> {
        if depth as i64 > map.range() {
            return Err(Error::DepthExceedsSchedule { depth, range: map.range() as usize });
        }
        let d = depth as i64;
        let mut gaps: Vec<i64> = (-d..=d).collect();
        gaps.sort_by(|&a, &b| map.orbit_point(a).total_cmp(&map.orbit_point(b)));
        let bands = (0..gaps.len())
            .map(|k| {
                let g = gaps[k];
                let lo = map.gap(g).1;
                let mlo = map.orbit_point(g);
                let (hi, mhi) = match gaps.get(k + 1) {
                    Some(&next) => (map.gap(next).0, map.orbit_point(next)),
                    None => (1.0, 1.0),
                };
                let rep = map.position(Code::Cantor(0.5 * (mlo + mhi))).clamp(lo, hi);
                Band { lo, hi, mlo, mhi, rep }
            })
            .collect();
        Ok(Self { depth, bands })
    }

    pub fn from_bands(depth: usize, bands: Vec<Band>) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::InvalidArgument("transversal needs at least one band".into()));
        }
        for w in bands.windows(2) {
            if !(w[0].hi <= w[1].lo && w[0].lo < w[0].hi) {
                return Err(Error::InvalidArgument(format!(
                    "bands must be nonempty, ordered and overlap at most in endpoints: [{}, {}] then [{}, {}]",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        if let Some(b) = bands.iter().find(|b| !(b.lo <= b.hi)) {
            return Err(Error::InvalidArgument(format!("empty band [{}, {}]", b.lo, b.hi)));
        }
        Ok(Self { depth, bands })
    }

    /// Sub-transversal made of a contiguous run of bands.
    pub fn sub(&self, range: Range<usize>) -> Self {
        Self { depth: self.depth, bands: self.bands[range].to_vec() }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn band_containing(&self, x: f64) -> Option<usize> {
        let k = self.bands.partition_point(|b| b.lo <= x);
        (k > 0 && self.bands[k - 1].contains(x)).then(|| k - 1)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.band_containing(x).is_some()
    }

    /// Extent `[lo of first band, hi of last band]`.
    pub fn span(&self) -> (f64, f64) {
        (self.bands[0].lo, self.bands[self.bands.len() - 1].hi)
    }
}

/// Band weights of a transversal measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalMeasure {
    weights: Vec<f64>,
    total: f64,
}

impl TransversalMeasure {
    pub fn new(weights: Vec<f64>) -> Self {
        let total = weights.iter().sum();
        Self { weights, total }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, band: usize) -> f64 {
        self.weights[band]
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.weights.iter().map(|w| w * c).collect())
    }

    pub fn normalized(&self) -> Self {
        self.scaled(1.0 / self.total)
    }

    pub fn sub(&self, range: Range<usize>) -> Self {
        Self::new(self.weights[range].to_vec())
    }

    /// Mass of a union of bands.
    pub fn mass_of(&self, bands: impl IntoIterator<Item = usize>) -> f64 {
        bands.into_iter().map(|b| self.weights[b]).sum()
    }

    /// Mass of the part of the transversal lying at or below `x`, with
    /// each band's mass spread uniformly over the band.
    pub fn cumulative(&self, transversal: &CantorTransversal, x: f64) -> f64 {
        let bands = transversal.bands();
        let k = bands.partition_point(|b| b.hi <= x);
        let mut acc: f64 = self.weights[..k].iter().sum();
        if let Some(b) = bands.get(k) {
            if x > b.lo {
                let w = b.width();
                acc += if w > 0.0 { self.weights[k] * (x - b.lo) / w } else { self.weights[k] };
            }
        }
        acc
    }
}

/// The unique invariant probability measure of a Denjoy map, on the
/// depth-`depth` band algebra: each band weighs the Lebesgue measure of its
/// semiconjugacy image.
pub fn invariant_measure(map: &DenjoyMap, depth: usize) -> Result<TransversalMeasure> {
    let t = CantorTransversal::from_denjoy(map, depth)?;
    Ok(TransversalMeasure::new(t.bands().iter().map(|b| b.mhi - b.mlo).collect()))
}

/// Largest `|mu(h^-1 A) - mu(A)|` over every cyclic run of consecutive
/// bands `A`.
pub fn invariance_defect(map: &DenjoyMap, transversal: &CantorTransversal, measure: &TransversalMeasure) -> f64 {
    let bands = transversal.bands();
    let nb = bands.len();
    // Measure of h^-1 of the arc [lo of band i, hi of band j], computed from
    // the semiconjugacy images of the pulled-back endpoints.
    let pulled: Vec<(f64, f64)> = bands
        .iter()
        .map(|b| {
            let lo = map.theta_of(map.backward(map.code(b.lo)));
            let hi = if b.hi >= 1.0 {
                map.theta_of(map.backward(Code::Cantor(0.0)))
            } else {
                map.theta_of(map.backward(map.code(b.hi)))
            };
            (lo, hi)
        })
        .collect();
    let mut worst = 0.0f64;
    for i in 0..nb {
        let mut mass = 0.0;
        for len in 1..nb {
            let j = (i + len - 1) % nb;
            mass += measure.weight(j);
            let pulled_mass = frac(pulled[j].1 - pulled[i].0);
            worst = worst.max((pulled_mass - mass).abs());
        }
    }
    worst
}

/// Consecutive runs of bands with prescribed masses.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub parts: Vec<CantorTransversal>,
    pub ranges: Vec<Range<usize>>,
    pub masses: Vec<f64>,
    /// Largest `|mu(K_i) - lambda_i * total|`.
    pub max_error: f64,
    pub max_band_weight: f64,
}

impl Partition {
    /// Index of the part containing `band`.
    pub fn part_of(&self, band: usize) -> usize {
        self.ranges.partition_point(|r| r.end <= band)
    }
}

/// Splits the transversal, at band boundaries, into `masses.len()`
/// consecutive chunks `K_1, ..., K_r` in cyclic order with
/// `mu(K_i) ~ lambda_i`.
pub fn partition_by_mass(transversal: &CantorTransversal, measure: &TransversalMeasure, masses: &[f64]) -> Result<Partition> {
    if let Some(&m) = masses.iter().find(|m| !(**m > 0.0)) {
        return Err(Error::NonPositiveMass(m));
    }
    let sum: f64 = masses.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::MassesDoNotSumToOne(sum));
    }
    let nb = transversal.len();
    let r = masses.len();
    if r > nb {
        return Err(Error::InvalidArgument(format!("{r} parts requested from {nb} bands")));
    }
    let total = measure.total();
    let mut cum = Vec::with_capacity(nb + 1);
    cum.push(0.0);
    for w in measure.weights() {
        cum.push(cum.last().unwrap() + w);
    }
    let mut bounds = vec![0usize];
    let mut target = 0.0;
    for (i, m) in masses.iter().enumerate().take(r - 1) {
        target += m * total;
        let lo = bounds[i] + 1;
        let hi = nb - (r - 1 - i);
        let j = (lo..=hi)
            .min_by(|&a, &b| (cum[a] - target).abs().total_cmp(&(cum[b] - target).abs()))
            .expect("non-empty search range");
        bounds.push(j);
    }
    bounds.push(nb);
    let ranges: Vec<Range<usize>> = bounds.windows(2).map(|w| w[0]..w[1]).collect();
    let achieved: Vec<f64> = ranges.iter().map(|rg| cum[rg.end] - cum[rg.start]).collect();
    let max_error = achieved.iter().zip(masses).map(|(a, m)| (a - m * total).abs()).fold(0.0, f64::max);
    Ok(Partition {
        parts: ranges.iter().map(|rg| transversal.sub(rg.clone())).collect(),
        ranges,
        masses: achieved,
        max_error,
        max_band_weight: measure.max_weight(),
    })
}
