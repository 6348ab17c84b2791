use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::solenoid::{rs_current, SuspensionSolenoid};
use crate::forms::quadrature::{norm, sub};
use crate::forms::{weak_distance, CurrentVector, Dictionary, Point};
use crate::num::{sig17, wrap_half};
use crate::{par, Error, Result};

/// Finite piece of the leaf through `start`, closed up by a short cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafSegment {
    #[serde(with = "sig17")]
    pub start: f64,
    pub returns: usize,
    /// Transversal point reached after the last return, `h^R(start)`.
    #[serde(with = "sig17")]
    pub end: f64,
    pub points: Vec<Point>,
    #[serde(with = "sig17")]
    pub length: f64,
    /// Shortest segment in `T^n` from the last point back to the first.
    pub cap: [Point; 2],
    #[serde(with = "sig17")]
    pub cap_length: f64,
}

impl LeafSegment {
    pub fn cap_ratio(&self) -> f64 {
        self.cap_length / self.length
    }

    /// The curve followed by its cap, a closed loop in `T^n`.
    pub fn closed_loop(&self) -> Vec<Point> {
        let mut p = self.points.clone();
        p.push(self.cap[1]);
        p
    }
}

/// The leaf through `y0` followed for `returns` passages through the
/// transversal.
pub fn leaf_segment(solenoid: &SuspensionSolenoid, y0: f64, returns: usize) -> Result<LeafSegment> {
    if returns == 0 {
        return Err(Error::InvalidArgument("need at least one return".into()));
    }
    if !solenoid.transversal().contains(y0) {
        return Err(Error::NotOnTransversal(y0));
    }
    let mut ys = Vec::with_capacity(returns + 1);
    solenoid.system().map.orbit(y0, returns + 1, &mut |y| ys.push(y));
    let mut points: Vec<Point> = Vec::with_capacity(3 * returns + 1);
    let mut offset = [0.0; 3];
    for k in 0..returns {
        let piece = solenoid.piece(ys[k]);
        let skip = if k == 0 { 0 } else { 1 };
        for p in &piece[skip..] {
            points.push([p[0] + offset[0], p[1] + offset[1], p[2] + offset[2]]);
        }
        // The piece ends on the entry point of the next transversal point,
        // shifted by an integer vector.
        let next_start = solenoid.piece(ys[k + 1])[0];
        let last = piece.last().unwrap();
        for j in 0..3 {
            offset[j] += (last[j] - next_start[j]).round();
        }
    }
    let length = points.windows(2).map(|w| norm(&sub(&w[1], &w[0]))).sum();
    let first = points[0];
    let last = *points.last().unwrap();
    let d = sub(&first, &last);
    let step = [wrap_half(d[0]), wrap_half(d[1]), wrap_half(d[2])];
    let cap_end = [last[0] + step[0], last[1] + step[1], last[2] + step[2]];
    Ok(LeafSegment { start: y0, returns, end: ys[returns], points, length, cap: [last, cap_end], cap_length: norm(&step) })
}

/// Current of the leaf segment divided by its length.
pub fn leaf_current(segment: &LeafSegment, dict: &Dictionary) -> Result<CurrentVector> {
    let raw = dict.pair_polyline(&segment.points)?;
    CurrentVector::new(dict, raw.into_iter().map(|p| p / segment.length).collect(), 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafLimitRow {
    pub returns: usize,
    #[serde(with = "sig17")]
    pub leaf_length: f64,
    #[serde(with = "sig17")]
    pub cap_ratio: f64,
    #[serde(with = "sig17")]
    pub weak_distance: f64,
    #[serde(with = "sig17")]
    pub mass: f64,
}

/// Weak distance between the normalized leaf current through `y0` and the
/// solenoid current, for each number of returns in `schedule`.
pub fn leaf_limit_experiment(
    solenoid: &SuspensionSolenoid,
    y0: f64,
    schedule: &[usize],
    dict: &Dictionary,
) -> Result<Vec<LeafLimitRow>> {
    let target = rs_current(solenoid, dict)?;
    let rows = par::map_slice(schedule, |&r| {
        let seg = leaf_segment(solenoid, y0, r)?;
        let mut cur = leaf_current(&seg, dict)?;
        if solenoid.orientation() < 0.0 {
            cur = cur.scale(-1.0);
        }
        Ok(LeafLimitRow {
            returns: r,
            leaf_length: seg.length,
            cap_ratio: seg.cap_ratio(),
            weak_distance: weak_distance(&cur, &target)?,
            mass: cur.mass,
        })
    });
    rows.into_iter().collect()
}

pub fn leaf_limit_csv(rows: &[LeafLimitRow]) -> String {
    let mut s = String::from("R,leaf_length,cap_ratio,weak_distance\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{}",
            r.returns,
            sig17::format(r.leaf_length),
            sig17::format(r.cap_ratio),
            sig17::format(r.weak_distance)
        )
        .unwrap();
    }
    s
}

/// A start point in the middle of the transversal.
pub fn default_start(solenoid: &SuspensionSolenoid) -> f64 {
    let b = solenoid.transversal().bands();
    b[b.len() / 2].rep
}
