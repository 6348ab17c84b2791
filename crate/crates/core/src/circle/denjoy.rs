use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::rotation::{rotate, rotate_back, CircleMap, RotationNumber};
use crate::error::{Error, Result};
use crate::num::frac;

/// Default number of gaps on each side of the orbit, `n in [-range, range]`.
pub const DEFAULT_SCHEDULE_RANGE: usize = 4096;

/// Gap lengths `l_n` for `n in [-range, range]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSchedule {
    range: usize,
    lengths: Vec<f64>,
    total: f64,
}

impl GapSchedule {
    /// `l_n = c / (n^2 + 4)`, normalized so the lengths sum to `total`.
    pub fn inverse_square(range: usize, total: f64) -> Result<Self> {
        if !(total > 0.0) {
            return Err(Error::InvalidSchedule(format!("total must be positive, got {total}")));
        }
        let raw: Vec<f64> = (-(range as i64)..=range as i64).map(|n| 1.0 / ((n * n) as f64 + 4.0)).collect();
        let s: f64 = raw.iter().sum();
        Self::from_lengths(range, raw.iter().map(|r| r * total / s).collect())
    }

    pub fn from_lengths(range: usize, lengths: Vec<f64>) -> Result<Self> {
        if lengths.len() != 2 * range + 1 {
            return Err(Error::InvalidSchedule(format!("expected {} lengths, got {}", 2 * range + 1, lengths.len())));
        }
        if let Some(l) = lengths.iter().find(|l| !(**l > 0.0)) {
            return Err(Error::InvalidSchedule(format!("non-positive gap length {l}")));
        }
        let total = lengths.iter().sum::<f64>();
        if total >= 1.0 {
            return Err(Error::GapsExhaustCircle(total));
        }
        Ok(Self { range, lengths, total })
    }

    pub fn default_schedule() -> Self {
        Self::inverse_square(DEFAULT_SCHEDULE_RANGE, 0.5).expect("default schedule is valid")
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn length(&self, n: i64) -> f64 {
        self.lengths[(n + self.range as i64) as usize]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// `l_(n+1)/l_n` moves monotonically towards 1 as `|n|` grows, from
    /// `|n| = 2` on.
    pub fn ratio_condition_holds(&self) -> bool {
        let r = self.range as i64;
        let ratio = |n: i64| {
            let (a, b) = (self.length(n), self.length(n + n.signum()));
            b / a
        };
        let mut prev = f64::INFINITY;
        for n in 2..r {
            let dev = (1.0 - ratio(n)).abs().max((1.0 - ratio(-n)).abs());
            if dev > prev + 1e-15 {
                return false;
            }
            prev = dev;
        }
        true
    }
}

/// A point of the circle in semiconjugacy coordinates: either inside gap
/// `I_n` at relative position `s in [0, 1]`, or a point of the Cantor part
/// with rotation coordinate `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Code {
    Gap { n: i64, s: f64 },
    Cantor(f64),
}

#[derive(Debug)]
struct Tables {
    /// `theta[n + range]`: orbit point `{n rho}` of the rigid rotation.
    theta: Vec<f64>,
    /// Gap indices (offset by `range`) sorted by orbit position.
    order: Vec<usize>,
    /// Position of each gap in `order`.
    rank: Vec<usize>,
    sorted_theta: Vec<f64>,
    /// Left endpoint of each gap, in sorted order.
    left: Vec<f64>,
    /// Lengths of the gaps preceding each sorted gap.
    prefix: Vec<f64>,
}

/// Denjoy counterexample: a circle homeomorphism with rotation number
/// `rho`, semiconjugate to `R_rho` by the monotone map that collapses every
/// gap `I_n` to the orbit point `{n rho}`.
///
/// The gap `I_n` is mapped affinely onto `I_(n+1)` for `n < range`. The
/// schedule is finite, so the last gap `I_range` collapses onto the orbit
/// point `{(range+1) rho}`, a set of length below `1e-7` for the default
/// schedule.
#[derive(Debug, Clone)]
pub struct DenjoyMap {
    rho: RotationNumber,
    schedule: GapSchedule,
    slope: f64,
    tables: Arc<Tables>,
}

impl DenjoyMap {
    pub fn build(rho: RotationNumber, schedule: GapSchedule) -> Self {
        let r = schedule.range();
        let count = 2 * r + 1;
        let rv = rho.value();
        let mut theta = vec![0.0; count];
        for n in 1..=r {
            theta[r + n] = rotate(theta[r + n - 1], rv);
            theta[r - n] = rotate_back(theta[r - n + 1], rv);
        }
        let mut order: Vec<usize> = (0..count).collect();
        order.sort_by(|&a, &b| theta[a].total_cmp(&theta[b]));
        let mut rank = vec![0; count];
        for (k, &i) in order.iter().enumerate() {
            rank[i] = k;
        }
        let slope = 1.0 - schedule.total();
        let sorted_theta: Vec<f64> = order.iter().map(|&i| theta[i]).collect();
        let mut prefix = Vec::with_capacity(count);
        let mut acc = 0.0;
        for &i in &order {
            prefix.push(acc);
            acc += schedule.lengths()[i];
        }
        let left = (0..count).map(|k| slope * sorted_theta[k] + prefix[k]).collect();
        Self { rho, schedule, slope, tables: Arc::new(Tables { theta, order, rank, sorted_theta, left, prefix }) }
    }

    /// Builds the map and checks that a transversal of the requested depth
    /// is representable.
    pub fn build_checked(rho: RotationNumber, schedule: GapSchedule, depth: usize) -> Result<Self> {
        if depth > schedule.range() {
            return Err(Error::DepthExceedsSchedule { depth, range: schedule.range() });
        }
        Ok(Self::build(rho, schedule))
    }

    pub fn golden() -> Self {
        Self::build(
            RotationNumber::new(super::golden_mean()).expect("golden mean is irrational"),
            GapSchedule::default_schedule(),
        )
    }

    pub fn rho(&self) -> &RotationNumber {
        &self.rho
    }

    pub fn schedule(&self) -> &GapSchedule {
        &self.schedule
    }

    pub fn range(&self) -> i64 {
        self.schedule.range() as i64
    }

    /// Orbit point `{n rho}` where gap `I_n` sits.
    pub fn orbit_point(&self, n: i64) -> f64 {
        self.tables.theta[(n + self.range()) as usize]
    }

    /// Closed gap `[a, b]` in circle coordinates.
    pub fn gap(&self, n: i64) -> (f64, f64) {
        let i = (n + self.range()) as usize;
        let a = self.tables.left[self.tables.rank[i]];
        (a, a + self.schedule.lengths()[i])
    }

    /// Circle position of a code.
    pub fn position(&self, code: Code) -> f64 {
        match code {
            Code::Gap { n, s } => {
                let (a, b) = self.gap(n);
                if s >= 1.0 {
                    b
                } else {
                    a + s * (b - a)
                }
            }
            Code::Cantor(theta) => {
                let t = &self.tables;
                let k = t.sorted_theta.partition_point(|&u| u < theta);
                let acc = if k < t.prefix.len() { t.prefix[k] } else { self.schedule.total() };
                self.slope * theta + acc
            }
        }
    }

    /// Inverse of [`position`](Self::position) on `[0, 1)`.
    pub fn code(&self, x: f64) -> Code {
        let x = frac(x);
        let t = &self.tables;
        let k = t.left.partition_point(|&a| a <= x).saturating_sub(1);
        let i = t.order[k];
        let n = i as i64 - self.range();
        let len = self.schedule.lengths()[i];
        let a = t.left[k];
        if x <= a + len {
            return Code::Gap { n, s: ((x - a) / len).clamp(0.0, 1.0) };
        }
        let mut theta = t.sorted_theta[k] + (x - a - len) / self.slope;
        let upper = t.sorted_theta.get(k + 1).copied().unwrap_or(1.0);
        if theta >= upper {
            theta = upper.next_down();
        }
        Code::Cantor(theta)
    }

    /// Semiconjugacy `pi`: collapses every gap to its orbit point.
    pub fn semiconjugacy(&self, x: f64) -> f64 {
        match self.code(x) {
            Code::Gap { n, .. } => self.orbit_point(n),
            Code::Cantor(theta) => theta,
        }
    }

    pub fn theta_of(&self, code: Code) -> f64 {
        match code {
            Code::Gap { n, .. } => self.orbit_point(n),
            Code::Cantor(theta) => theta,
        }
    }

    pub fn forward(&self, code: Code) -> Code {
        match code {
            Code::Gap { n, s } if n < self.range() => Code::Gap { n: n + 1, s },
            Code::Gap { n, .. } => Code::Cantor(rotate(self.orbit_point(n), self.rho.value())),
            Code::Cantor(theta) => Code::Cantor(rotate(theta, self.rho.value())),
        }
    }

    pub fn backward(&self, code: Code) -> Code {
        match code {
            Code::Gap { n, s } if n > -self.range() => Code::Gap { n: n - 1, s },
            Code::Gap { n, .. } => Code::Cantor(rotate_back(self.orbit_point(n), self.rho.value())),
            Code::Cantor(theta) => Code::Cantor(rotate_back(theta, self.rho.value())),
        }
    }

    /// Largest `|pi(h(x)) - R_rho(pi(x))|` over all gap endpoints.
    pub fn semiconjugacy_defect(&self) -> f64 {
        let rho = self.rho.value();
        let mut worst = 0.0f64;
        for n in -self.range()..=self.range() {
            let (a, b) = self.gap(n);
            for x in [a, b] {
                let lhs = self.semiconjugacy(self.apply(x));
                let rhs = rotate(self.semiconjugacy(x), rho);
                worst = worst.max(crate::num::circle_dist(lhs, rhs));
            }
        }
        worst
    }

    pub fn document(&self, transversal: &super::CantorTransversal, measure: &super::TransversalMeasure) -> DenjoyDocument {
        DenjoyDocument {
            rho: self.rho.value(),
            schedule: (-self.range()..=self.range()).map(|n| (n, crate::num::sig17::format(self.schedule.length(n)))).collect(),
            depth: transversal.depth(),
            bands: transversal.bands().iter().map(|b| [b.lo, b.hi]).collect(),
            weights: measure.weights().to_vec(),
        }
    }
}

impl CircleMap for DenjoyMap {
    fn lift(&self, x: f64) -> f64 {
        let k = x.floor();
        let code = self.code(x - k);
        let image = self.forward(code);
        let wrapped = self.theta_of(image) < self.theta_of(code);
        k + self.position(image) + if wrapped { 1.0 } else { 0.0 }
    }

    fn apply(&self, x: f64) -> f64 {
        frac(self.position(self.forward(self.code(x))))
    }

    fn inverse(&self, x: f64) -> f64 {
        frac(self.position(self.backward(self.code(x))))
    }

    fn orbit(&self, x: f64, n: usize, visit: &mut dyn FnMut(f64)) {
        let mut code = self.code(x);
        for _ in 0..n {
            visit(self.position(code));
            code = self.forward(code);
        }
    }
}

/// JSON document for a Denjoy map together with a transversal and its
/// measure. Reals are decimal strings with 17 significant digits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenjoyDocument {
    #[serde(with = "crate::num::sig17")]
    pub rho: f64,
    pub schedule: BTreeMap<i64, String>,
    pub depth: usize,
    #[serde(with = "crate::num::sig17::pairs")]
    pub bands: Vec<[f64; 2]>,
    #[serde(with = "crate::num::sig17::vec")]
    pub weights: Vec<f64>,
}

impl DenjoyDocument {
    /// Rebuilds the map, transversal and measure described by the document.
    pub fn restore(&self) -> Result<(DenjoyMap, super::CantorTransversal, super::TransversalMeasure)> {
        let range =
            self.schedule.keys().next_back().copied().ok_or_else(|| Error::InvalidSchedule("empty schedule".into()))? as usize;
        let lengths = self
            .schedule
            .values()
            .map(|s| crate::num::sig17::parse(s).map_err(|e| Error::Serialization(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let map =
            DenjoyMap::build_checked(RotationNumber::new(self.rho)?, GapSchedule::from_lengths(range, lengths)?, self.depth)?;
        let transversal = super::CantorTransversal::from_denjoy(&map, self.depth)?;
        let measure = super::TransversalMeasure::new(self.weights.clone());
        Ok((map, transversal, measure))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{golden_mean, rotation_number_estimate};

    fn golden() -> DenjoyMap {
        DenjoyMap::golden()
    }

    #[test]
    fn schedule_errors_and_ratio_condition() {
        let s = GapSchedule::inverse_square(64, 0.5).unwrap();
        assert!((s.total() - 0.5).abs() < 1e-15);
        assert!(s.ratio_condition_holds());
        assert!(matches!(GapSchedule::inverse_square(8, 1.0), Err(Error::GapsExhaustCircle(_))));
        let err = DenjoyMap::build_checked(RotationNumber::new(golden_mean()).unwrap(), s, 65);
        assert!(matches!(err, Err(Error::DepthExceedsSchedule { .. })));
    }

    #[test]
    fn left_endpoint_of_i0_maps_to_left_endpoint_of_i1() {
        let h = golden();
        assert_eq!(h.gap(0).0, 0.0);
        assert_eq!(h.apply(h.gap(0).0), h.gap(1).0);
    }

    #[test]
    fn gaps_map_affinely_onto_next_gap() {
        let h = golden();
        for n in [-4096, -17, 0, 5, 4095] {
            let (a, b) = h.gap(n);
            let (c, d) = h.gap(n + 1);
            for s in [0.0, 0.25, 0.5, 1.0] {
                let y = h.apply(a + s * (b - a));
                assert!((y - (c + s * (d - c))).abs() < 1e-15, "n={n} s={s}");
            }
        }
    }

    #[test]
    fn semiconjugacy_identity_holds_at_gap_endpoints() {
        assert!(golden().semiconjugacy_defect() <= 1e-12);
    }

    #[test]
    fn code_and_position_are_inverse() {
        let h = golden();
        for i in 0..1000 {
            let x = (i as f64 + 0.37) / 1000.0;
            assert!((h.position(h.code(x)) - x).abs() < 1e-14);
            assert!((h.inverse(h.apply(x)) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_number_matches_rho() {
        let est = rotation_number_estimate(&golden(), 100_000);
        assert!((est - golden_mean()).abs() <= 1e-4, "{est}");
    }
}
