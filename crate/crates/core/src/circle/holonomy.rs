use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::rotation::CircleMap;
use super::transversal::{CantorTransversal, TransversalMeasure};
use crate::error::{Error, Result};
use crate::par;

/// A transversal, the holonomy map acting on it and its invariant measure.
#[derive(Clone)]
pub struct HolonomySystem {
    pub transversal: CantorTransversal,
    pub map: Arc<dyn CircleMap>,
    pub measure: TransversalMeasure,
}

impl std::fmt::Debug for HolonomySystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HolonomySystem")
            .field("bands", &self.transversal.len())
            .field("mass", &self.measure.total())
            .field("identity", &self.map.is_identity())
            .finish()
    }
}

impl HolonomySystem {
    pub fn new(transversal: CantorTransversal, map: Arc<dyn CircleMap>, measure: TransversalMeasure) -> Self {
        Self { transversal, map, measure }
    }

    /// `n` start points spread evenly through the bands (band mass midpoints).
    pub fn start_points(&self, n: usize) -> Vec<f64> {
        let nb = self.transversal.len();
        (0..n).map(|i| self.transversal.bands()[(i * nb) / n.max(1)].rep).collect()
    }
}

/// Test function on the transversal.
#[derive(Clone)]
pub struct Observable {
    pub label: String,
    pub eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Observable {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), eval: Arc::new(f) }
    }

    /// Indicator of the union of bands `range` of `transversal`.
    pub fn band_indicator(transversal: &CantorTransversal, range: std::ops::Range<usize>) -> Self {
        let lo = transversal.bands()[range.start].lo;
        let hi = transversal.bands()[range.end - 1].hi;
        Self::new(format!("1[bands {}..{}]", range.start, range.end), move |x| if lo <= x && x <= hi { 1.0 } else { 0.0 })
    }
}

/// The 10-observable battery used by the unique-ergodicity diagnostic:
/// five band-algebra indicators and five continuous functions.
pub fn standard_observables(transversal: &CantorTransversal) -> Vec<Observable> {
    let nb = transversal.len();
    let at = |f: f64| ((f * nb as f64) as usize).min(nb);
    let mut obs: Vec<Observable> = [(0.0, 0.1), (0.1, 0.35), (0.3, 0.8), (0.5, 0.55), (0.7, 1.0)]
        .iter()
        .map(|&(a, b)| {
            let (i, j) = (at(a), at(b).max(at(a) + 1));
            Observable::band_indicator(transversal, i..j)
        })
        .collect();
    obs.push(Observable::new("x", |x| x));
    obs.push(Observable::new("x^2", |x| x * x));
    obs.push(Observable::new("|x-1/2|", |x| (x - 0.5).abs()));
    obs.push(Observable::new("4x(1-x)", |x| 4.0 * x * (1.0 - x)));
    obs.push(Observable::new("tent@0.3", |x| (1.0 - 4.0 * (x - 0.3).abs()).max(0.0)));
    obs
}

/// `(1/N) sum_(j<N) f(h^j(start))`.
pub fn birkhoff_average(system: &HolonomySystem, observable: &Observable, start: f64, n: usize) -> Result<f64> {
    if !system.transversal.contains(start) {
        return Err(Error::NotOnTransversal(start));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("Birkhoff average needs N >= 1".into()));
    }
    let mut acc = 0.0;
    system.map.orbit(start, n, &mut |y| acc += (observable.eval)(y));
    Ok(acc / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffReport {
    pub iterations: usize,
    pub starts: usize,
    pub labels: Vec<String>,
    /// Largest minus smallest average over start points, per observable.
    pub spreads: Vec<f64>,
    /// Mean over start points, per observable.
    pub means: Vec<f64>,
    pub spread: f64,
}

/// Uniform-convergence diagnostic for unique ergodicity: Birkhoff averages
/// of every observable from `starts` start points, `n` iterations each.
pub fn birkhoff_spread(system: &HolonomySystem, observables: &[Observable], starts: usize, n: usize) -> Result<BirkhoffReport> {
    if n == 0 || starts == 0 {
        return Err(Error::InvalidArgument("Birkhoff spread needs N >= 1 and at least one start".into()));
    }
    let points = system.start_points(starts);
    let k = observables.len();
    let rows: Vec<Vec<f64>> = par::map_slice(&points, |&x| {
        let mut acc = vec![0.0; k];
        system.map.orbit(x, n, &mut |y| {
            for (a, o) in acc.iter_mut().zip(observables) {
                *a += (o.eval)(y);
            }
        });
        acc.into_iter().map(|a| a / n as f64).collect()
    });
    let mut spreads = vec![0.0; k];
    let mut means = vec![0.0; k];
    for j in 0..k {
        let (lo, hi, sum) =
            rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, s), r| (lo.min(r[j]), hi.max(r[j]), s + r[j]));
        spreads[j] = hi - lo;
        means[j] = sum / starts as f64;
    }
    Ok(BirkhoffReport {
        iterations: n,
        starts,
        labels: observables.iter().map(|o| o.label.clone()).collect(),
        spread: spreads.iter().copied().fold(0.0, f64::max),
        spreads,
        means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{invariant_measure, DenjoyMap};

    fn golden_system(depth: usize) -> HolonomySystem {
        let map = DenjoyMap::golden();
        let t = CantorTransversal::from_denjoy(&map, depth).unwrap();
        let m = invariant_measure(&map, depth).unwrap();
        HolonomySystem::new(t, Arc::new(map), m)
    }

    #[test]
    fn constant_observable_averages_to_one() {
        let s = golden_system(16);
        let one = Observable::new("1", |_| 1.0);
        for n in [1, 7, 1000] {
            assert_eq!(birkhoff_average(&s, &one, s.start_points(1)[0], n).unwrap(), 1.0);
        }
    }

    #[test]
    fn start_in_gap_is_rejected() {
        let s = golden_system(16);
        let map = DenjoyMap::golden();
        let (a, b) = map.gap(3);
        let one = Observable::new("1", |_| 1.0);
        assert!(matches!(birkhoff_average(&s, &one, 0.5 * (a + b), 10), Err(Error::NotOnTransversal(_))));
    }

    #[test]
    fn indicator_average_converges_to_measure() {
        let s = golden_system(64);
        let obs = Observable::band_indicator(&s.transversal, 10..50);
        let mass = s.measure.mass_of(10..50);
        let avg = birkhoff_average(&s, &obs, s.start_points(3)[1], 100_000).unwrap();
        assert!((avg - mass).abs() < 0.01, "{avg} vs {mass}");
    }
}
