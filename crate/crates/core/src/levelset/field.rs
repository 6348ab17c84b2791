use serde::{Deserialize, Serialize};

use crate::forms::quadrature::grid_point;
use crate::forms::{Point, SmoothFunction, Support};
use crate::num::sig17;
use crate::{par, Error, Result};

/// Default resolution of the grid used to locate near-critical points.
pub const DEFAULT_EXCLUSION_RES: usize = 1024;

/// Compactly supported scalar field `F: T^2 -> R`.
#[derive(Debug, Clone)]
pub struct ScalarFieldBundle {
    pub f: SmoothFunction,
    pub support: Support,
}

impl ScalarFieldBundle {
    pub fn new(f: SmoothFunction) -> Result<Self> {
        if f.dim() != 2 {
            return Err(Error::InvalidArgument(format!("level-set fields live on T^2, got T^{}", f.dim())));
        }
        let support = f.support();
        Ok(Self { f, support })
    }

    pub fn zero() -> Self {
        Self::new(SmoothFunction::zero(2)).expect("zero field on T^2")
    }
}

/// Values and gradients of a field on the uniform `res x res` grid, first
/// axis fastest.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub res: usize,
    pub values: Vec<f64>,
    pub grads: Vec<Point>,
}

impl FieldGrid {
    pub fn sample(field: &ScalarFieldBundle, res: usize) -> Result<Self> {
        if res < 8 {
            return Err(Error::InvalidArgument(format!("grid resolution {res} < 8")));
        }
        let rows =
            par::map_range(res, |j| (0..res).map(|i| field.f.eval_grad(&grid_point(j * res + i, res, 2))).collect::<Vec<_>>());
        let (values, grads) = rows.into_iter().flatten().unzip();
        Ok(Self { res, values, grads })
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        (j % self.res) * self.res + (i % self.res)
    }

    pub fn grad_norm(&self, idx: usize) -> f64 {
        let g = self.grads[idx];
        (g[0] * g[0] + g[1] * g[1]).sqrt()
    }

    pub fn range(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Near-critical locus `C_eps = {|grad F| < eps}` and an open set of values
/// `U` containing `F(C_eps)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalRegion {
    #[serde(with = "sig17")]
    pub epsilon: f64,
    /// Largest radius of the interval placed around a flagged value.
    #[serde(with = "sig17")]
    pub delta: f64,
    /// Largest local bound on the gradient's Lipschitz constant.
    #[serde(with = "sig17")]
    pub hessian_bound: f64,
    pub grid_res: usize,
    /// Disjoint open intervals, sorted.
    #[serde(with = "sig17::pairs")]
    pub intervals: Vec<[f64; 2]>,
    /// Range of `F` sampled on the grid.
    #[serde(with = "sig17::pairs")]
    pub range: Vec<[f64; 2]>,
    /// Fraction of grid points flagged as near-critical.
    #[serde(with = "sig17")]
    pub flagged_fraction: f64,
}

impl CriticalRegion {
    pub fn contains(&self, c: f64) -> bool {
        let k = self.intervals.partition_point(|iv| iv[0] < c);
        k > 0 && c < self.intervals[k - 1][1]
    }

    /// Lebesgue measure of `U`.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|iv| iv[1] - iv[0]).sum()
    }

    /// Lebesgue measure of `U` inside the range of `F`.
    pub fn measure_in_range(&self) -> f64 {
        let [lo, hi] = self.range[0];
        self.intervals.iter().map(|iv| (iv[1].min(hi) - iv[0].max(lo)).max(0.0)).sum()
    }

    /// Connected components of `range(F) \ U`, as closed intervals of
    /// positive length.
    pub fn regular_components(&self) -> Vec<[f64; 2]> {
        let [lo, hi] = self.range[0];
        let mut out = Vec::new();
        let mut cur = lo;
        for iv in &self.intervals {
            if iv[1] <= cur {
                continue;
            }
            if iv[0] >= hi {
                break;
            }
            if iv[0] > cur {
                out.push([cur, iv[0]]);
            }
            cur = cur.max(iv[1]);
        }
        if cur < hi {
            out.push([cur, hi]);
        }
        out
    }
}

/// Flags grid point `g` when `|grad F(g)| < eps + L_g h`, where `h` is the
/// grid step and `L_g` is twice the largest gradient difference quotient
/// to the eight neighbours, and excludes every value within
/// `delta_g = (eps + L_g h) h` of `F(g)`. Every point of `C_eps` lies
/// within `h` of a grid point, so `F(C_eps)` is inside `U`.
pub fn exclusion_set(field: &ScalarFieldBundle, epsilon: f64, grid_res: usize) -> Result<CriticalRegion> {
    let grid = FieldGrid::sample(field, grid_res)?;
    exclusion_from_grid(&grid, epsilon)
}

pub fn exclusion_from_grid(grid: &FieldGrid, epsilon: f64) -> Result<CriticalRegion> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let res = grid.res;
    let h = 1.0 / res as f64;
    let rows = par::map_range(res, |j| {
        let mut flagged = Vec::new();
        let mut lmax: f64 = 0.0;
        for i in 0..res {
            let k = grid.idx(i, j);
            let g = grid.grads[k];
            let mut l: f64 = 0.0;
            for (di, dj) in [(1, 0), (res - 1, 0), (0, 1), (0, res - 1), (1, 1), (res - 1, res - 1), (1, res - 1), (res - 1, 1)] {
                let q = grid.grads[grid.idx(i + di, j + dj)];
                let dist = if di != 0 && dj != 0 { std::f64::consts::SQRT_2 * h } else { h };
                l = l.max(((g[0] - q[0]).powi(2) + (g[1] - q[1]).powi(2)).sqrt() / dist);
            }
            // Margin for the gradient's variation between grid measurements.
            let l = 2.0 * l;
            lmax = lmax.max(l);
            let threshold = epsilon + l * h;
            if grid.grad_norm(k) < threshold {
                let delta = threshold * h;
                flagged.push([grid.values[k] - delta, grid.values[k] + delta]);
            }
        }
        (flagged, lmax)
    });
    let hessian_bound = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut flagged: Vec<[f64; 2]> = rows.into_iter().flat_map(|r| r.0).collect();
    let flagged_fraction = flagged.len() as f64 / grid.values.len() as f64;
    flagged.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut intervals: Vec<[f64; 2]> = Vec::new();
    let mut delta: f64 = 0.0;
    for [a, b] in flagged {
        delta = delta.max(0.5 * (b - a));
        match intervals.last_mut() {
            Some(last) if a <= last[1] => last[1] = last[1].max(b),
            _ => intervals.push([a, b]),
        }
    }
    let (lo, hi) = grid.range();
    Ok(CriticalRegion { epsilon, delta, hessian_bound, grid_res: res, intervals, range: vec![[lo, hi]], flagged_fraction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{Monomial, Phase, TrigPoly};

    fn sin_x() -> ScalarFieldBundle {
        ScalarFieldBundle::new(TrigPoly::monomial(2, Monomial::new(&[(1, Phase::Sin)]), 1.0).into()).unwrap()
    }

    #[test]
    fn zero_field_excludes_zero() {
        let r = exclusion_set(&ScalarFieldBundle::zero(), 1e-2, 64).unwrap();
        assert!(r.contains(0.0));
        assert!(r.regular_components().is_empty());
    }

    #[test]
    fn sine_excludes_only_extreme_values_and_shrinks() {
        let mut prev = f64::INFINITY;
        for res in [128, 256, 512, 1024] {
            let r = exclusion_set(&sin_x(), 1e-2, res).unwrap();
            assert!(r.contains(1.0 - 1e-9) && r.contains(-1.0 + 1e-9));
            assert!(!r.contains(0.0) && !r.contains(0.5));
            let m = r.measure_in_range();
            assert!(m < prev);
            prev = m;
            assert_eq!(r.regular_components().len(), 1);
        }
        // |sin' | < eps near x = 1/4 means |1 - F| < eps^2 / (8 pi^2) ~ 1e-6.
        assert!(prev < 1e-3, "{prev}");
    }
}
