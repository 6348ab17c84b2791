use serde::{Deserialize, Serialize};

use crate::forms::quadrature::{norm, sub};
use crate::forms::Point;
use crate::num::{sig17, wrap_half};
use crate::{Error, Result};

/// The coordinate ball where leaves cross from the entry arc to the exit arc.
///
/// Points of the transversal `y in [0, 1)` enter at
/// `center - radius e_1 + width (y - 1/2) e_2` and leave at
/// `center + radius e_1 + width (H(y) - 1/2) e_2`, where `H` is the lift of
/// the holonomy. In between, the leaf at time `t in [-1, 1]` sits at height
/// `h_t(y) = (1 - s) y + s H(y)`, `s = (t + 1) / 2`, which is the straight
/// segment joining the two arcs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreModel {
    pub n: usize,
    #[serde(with = "sig17::vec3")]
    pub center: Point,
    #[serde(with = "sig17")]
    pub radius: f64,
    #[serde(with = "sig17")]
    pub width: f64,
}

impl CoreModel {
    pub fn new(n: usize, center: Point, radius: f64, width: f64) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(Error::InvalidArgument(format!("core models live on T^2 or T^3, not T^{n}")));
        }
        if !(radius > 0.0 && width > 0.0 && radius < 0.25 && width < 0.5) {
            return Err(Error::InvalidArgument(format!("core radius {radius} / width {width} out of range")));
        }
        Ok(Self { n, center, radius, width })
    }

    pub fn standard(n: usize) -> Self {
        Self { n, center: [0.5; 3], radius: 0.05, width: 0.1 }
    }

    /// Isotopy from the identity (`t = -1`) to the lift `H` (`t = 1`).
    pub fn isotopy(t: f64, y: f64, lift: f64) -> f64 {
        let s = 0.5 * (t + 1.0);
        (1.0 - s) * y + s * lift
    }

    /// Point of the core at time `t` on the leaf through `y`.
    pub fn track(&self, t: f64, y: f64, lift: f64) -> Point {
        let mut p = self.center;
        p[0] += self.radius * t;
        p[1] += self.width * (Self::isotopy(t, y, lift) - 0.5);
        p
    }

    pub fn entry(&self, y: f64) -> Point {
        self.track(-1.0, y, y)
    }

    pub fn exit(&self, y: f64, lift: f64) -> Point {
        self.track(1.0, y, lift)
    }

    /// Diameter bound of the region the core occupies.
    pub fn diameter(&self) -> f64 {
        2.0 * (self.radius * self.radius + self.width * self.width).sqrt()
    }
}

/// Closed piecewise-linear loop in `T^n`, stored in unwrapped coordinates:
/// the last point equals the first shifted by the integer `winding`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub points: Vec<Point>,
    pub winding: [i64; 3],
    /// `+1` or `-1`; `winding` already includes it.
    pub sign: i64,
    /// Coordinate axis the loop winds around.
    pub axis: usize,
}

impl Cycle {
    /// The loop through the core that closes up after one turn around axis
    /// `axis`, oriented by `sign`.
    pub fn coordinate(core: &CoreModel, axis: usize, sign: i64) -> Result<Self> {
        if axis >= core.n || sign.abs() != 1 {
            return Err(Error::InvalidArgument(format!("no coordinate cycle for axis {axis}, sign {sign}")));
        }
        let start = core.entry(0.5);
        let mid = core.exit(0.5, 0.5);
        let mut end = start;
        end[axis] += sign as f64;
        let mut winding = [0; 3];
        winding[axis] = sign;
        Ok(Self { points: vec![start, mid, end], winding, sign, axis })
    }

    /// Distance on `T^n` between the two ends.
    pub fn closure_gap(&self) -> f64 {
        let d = sub(self.points.last().unwrap(), &self.points[0]);
        norm(&[wrap_half(d[0]), wrap_half(d[1]), wrap_half(d[2])])
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| norm(&sub(&w[1], &w[0]))).sum()
    }
}
