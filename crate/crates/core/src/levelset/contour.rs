use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::field::{CriticalRegion, FieldGrid};
use crate::forms::quadrature::{norm, sub};
use crate::forms::Point;
use crate::num::{sig17, wrap_half};
use crate::{par, Error, Result};

/// Closed oriented polyline on a level set. Points are unwrapped, so the
/// last point equals the first up to an integer vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    #[serde(with = "sig17")]
    pub value: f64,
    pub points: Vec<Point>,
}

impl Contour {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| norm(&sub(&w[1], &w[0]))).sum()
    }

    /// Integer displacement from the first to the last point.
    pub fn winding(&self) -> [i64; 2] {
        let (a, b) = (self.points[0], self.points[self.points.len() - 1]);
        [(b[0] - a[0]).round() as i64, (b[1] - a[1]).round() as i64]
    }

    pub fn closure_gap(&self) -> f64 {
        let (a, b) = (self.points[0], self.points[self.points.len() - 1]);
        let w = self.winding();
        ((b[0] - a[0] - w[0] as f64).powi(2) + (b[1] - a[1] - w[1] as f64).powi(2)).sqrt()
    }
}

struct Segment {
    edges: [usize; 2],
    /// Positive when `edges[0] -> edges[1]` follows `grad F` rotated by +90 degrees.
    vote: f64,
}

/// Edge ids: `2 k` is the horizontal edge from grid point `k` to its right
/// neighbour, `2 k + 1` the vertical edge from `k` to the point above.
fn edge_point(grid: &FieldGrid, edge: usize, c: f64) -> Point {
    let res = grid.res;
    let k = edge / 2;
    let (i, j) = (k % res, k / res);
    let nb = if edge % 2 == 0 { grid.idx(i + 1, j) } else { grid.idx(i, j + 1) };
    let (va, vb) = (grid.values[k], grid.values[nb]);
    let t = (c - va) / (vb - va);
    let h = 1.0 / res as f64;
    if edge % 2 == 0 {
        [(i as f64 + t) * h, j as f64 * h, 0.0]
    } else {
        [i as f64 * h, (j as f64 + t) * h, 0.0]
    }
}

/// `|grad F|` interpolated linearly to the crossing point on an edge.
fn crossing_grad_norm(grid: &FieldGrid, edge: usize, c: f64) -> f64 {
    let res = grid.res;
    let k = edge / 2;
    let nb = if edge % 2 == 0 { grid.idx(k % res + 1, k / res) } else { grid.idx(k % res, k / res + 1) };
    let t = (c - grid.values[k]) / (grid.values[nb] - grid.values[k]);
    let (a, b) = (grid.grads[k], grid.grads[nb]);
    let g = [(1.0 - t) * a[0] + t * b[0], (1.0 - t) * a[1] + t * b[1]];
    (g[0] * g[0] + g[1] * g[1]).sqrt()
}

fn unwrap_near(p: Point, near: &Point) -> Point {
    [near[0] + wrap_half(p[0] - near[0]), near[1] + wrap_half(p[1] - near[1]), 0.0]
}

fn cell_segments(grid: &FieldGrid, i: usize, j: usize, c: f64, out: &mut Vec<Segment>) {
    let res = grid.res;
    let corners = [grid.idx(i, j), grid.idx(i + 1, j), grid.idx(i + 1, j + 1), grid.idx(i, j + 1)];
    let v = corners.map(|k| grid.values[k]);
    let above = v.map(|x| x >= c);
    if above.iter().all(|&a| a) || above.iter().all(|&a| !a) {
        return;
    }
    // Cell edges in counter-clockwise order: bottom, right, top, left.
    let edges = [2 * corners[0], 2 * corners[1] + 1, 2 * corners[3], 2 * corners[0] + 1];
    // Corner k sits between edges k - 1 and k.
    let cut_corner = |k: usize| [edges[(k + 3) % 4], edges[k]];
    let crossings: Vec<usize> = (0..4).filter(|&e| above[e] != above[(e + 1) % 4]).collect();
    let mut pairs: Vec<[usize; 2]> = Vec::with_capacity(2);
    if crossings.len() == 2 {
        pairs.push([edges[crossings[0]], edges[crossings[1]]]);
    } else {
        // Saddle cell: the bilinear interpolant's saddle value decides which
        // pair of corners is connected.
        let den = v[0] + v[2] - v[1] - v[3];
        let saddle = if den != 0.0 { (v[0] * v[2] - v[1] * v[3]) / den } else { 0.25 * v.iter().sum::<f64>() };
        let centre_above = saddle >= c;
        for k in 0..4 {
            if above[k] != centre_above {
                pairs.push(cut_corner(k));
            }
        }
    }
    let h = 1.0 / res as f64;
    let origin = [i as f64 * h, j as f64 * h, 0.0];
    for edges in pairs {
        let a = unwrap_near(edge_point(grid, edges[0], c), &origin);
        let b = unwrap_near(edge_point(grid, edges[1], c), &origin);
        let (u, w) = (((a[0] + b[0]) * 0.5 - origin[0]) / h, ((a[1] + b[1]) * 0.5 - origin[1]) / h);
        let gx = ((v[1] - v[0]) * (1.0 - w) + (v[2] - v[3]) * w) / h;
        let gy = ((v[3] - v[0]) * (1.0 - u) + (v[2] - v[1]) * u) / h;
        let vote = (b[0] - a[0]) * (-gy) + (b[1] - a[1]) * gx;
        out.push(Segment { edges, vote });
    }
}

/// Traces the level set `{F = c}` by marching squares on the periodic grid,
/// with saddle cells resolved by the asymptotic decider. Each contour is
/// oriented so that its tangent is `grad F` rotated by +90 degrees.
///
/// When `region` is given, values in `U` are rejected and the gradient at
/// the traced cells must be at least `eps / 2`.
pub fn contour_trace(grid: &FieldGrid, c: f64, region: Option<&CriticalRegion>) -> Result<Vec<Contour>> {
    Ok(contour_trace_many(grid, &[c], region)?.pop().expect("one value in, one out"))
}

/// Values traced per pass over the cells; bounds the segment buffers.
const TRACE_BATCH: usize = 256;

/// [`contour_trace`] for many values, sharing one pass over the cells per
/// batch of values.
pub fn contour_trace_many(grid: &FieldGrid, values: &[f64], region: Option<&CriticalRegion>) -> Result<Vec<Vec<Contour>>> {
    if let Some(r) = region {
        if let Some(&c) = values.iter().find(|&&c| r.contains(c)) {
            return Err(Error::ExcludedValue(c));
        }
    }
    let res = grid.res;
    let cells: Vec<(f64, f64)> = (0..res * res)
        .map(|k| {
            let (i, j) = (k % res, k / res);
            let v = [grid.idx(i, j), grid.idx(i + 1, j), grid.idx(i + 1, j + 1), grid.idx(i, j + 1)].map(|q| grid.values[q]);
            (v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        })
        .collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out: Vec<Vec<Contour>> = vec![Vec::new(); values.len()];
    for batch in order.chunks(TRACE_BATCH) {
        let sorted: Vec<f64> = batch.iter().map(|&k| values[k]).collect();
        let mut segs: Vec<Vec<Segment>> = (0..batch.len()).map(|_| Vec::new()).collect();
        for (k, &(lo, hi)) in cells.iter().enumerate() {
            // A cell is crossed by c exactly when lo < c <= hi.
            let a = sorted.partition_point(|&c| c <= lo);
            let b = sorted.partition_point(|&c| c <= hi);
            for m in a..b {
                cell_segments(grid, k % res, k / res, sorted[m], &mut segs[m]);
            }
        }
        let linked = par::map_range(batch.len(), |m| link(grid, sorted[m], &segs[m], region));
        for (&k, contours) in batch.iter().zip(linked) {
            out[k] = contours?;
        }
    }
    Ok(out)
}

fn link(grid: &FieldGrid, c: f64, segs: &[Segment], region: Option<&CriticalRegion>) -> Result<Vec<Contour>> {
    if let Some(r) = region {
        let threshold = 0.5 * r.epsilon;
        let min_grad = segs.iter().flat_map(|s| s.edges).map(|e| crossing_grad_norm(grid, e, c)).fold(f64::INFINITY, f64::min);
        if min_grad < threshold {
            return Err(Error::NotRegular { value: c, min_grad, threshold });
        }
    }
    let mut incident: HashMap<usize, [usize; 2]> = HashMap::with_capacity(2 * segs.len());
    for (s, seg) in segs.iter().enumerate() {
        for e in seg.edges {
            let slot = incident.entry(e).or_insert([usize::MAX; 2]);
            if slot[0] == usize::MAX {
                slot[0] = s;
            } else {
                slot[1] = s;
            }
        }
    }
    let mut used = vec![false; segs.len()];
    let mut contours = Vec::new();
    for s0 in 0..segs.len() {
        if used[s0] {
            continue;
        }
        used[s0] = true;
        let start = segs[s0].edges[0];
        let mut chain = vec![start, segs[s0].edges[1]];
        let mut vote = segs[s0].vote;
        let mut prev = s0;
        loop {
            let e = *chain.last().unwrap();
            if e == start {
                break;
            }
            let Some(&next) = incident[&e].iter().find(|&&t| t != usize::MAX && t != prev && !used[t]) else {
                break;
            };
            used[next] = true;
            let seg = &segs[next];
            if seg.edges[0] == e {
                chain.push(seg.edges[1]);
                vote += seg.vote;
            } else {
                chain.push(seg.edges[0]);
                vote -= seg.vote;
            }
            prev = next;
        }
        if vote < 0.0 {
            chain.reverse();
        }
        let mut points: Vec<Point> = Vec::with_capacity(chain.len());
        for &e in &chain {
            let p = edge_point(grid, e, c);
            points.push(match points.last() {
                Some(q) => unwrap_near(p, q),
                None => p,
            });
        }
        contours.push(Contour { value: c, points });
    }
    Ok(contours)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{bump, BoxRegion, Monomial, Phase, SmoothFunction, TrigPoly};
    use crate::levelset::field::{exclusion_set, ScalarFieldBundle};

    fn mono(f: &[(u32, Phase)]) -> SmoothFunction {
        TrigPoly::monomial(2, Monomial::new(f), 1.0).into()
    }

    #[test]
    fn vertical_lines_of_a_sine() {
        let field = ScalarFieldBundle::new(mono(&[(1, Phase::Sin)])).unwrap();
        let grid = FieldGrid::sample(&field, 64).unwrap();
        let cs = contour_trace(&grid, 0.3, None).unwrap();
        assert_eq!(cs.len(), 2);
        for c in &cs {
            assert!(c.closure_gap() < 1e-12);
            assert!((c.length() - 1.0).abs() < 1e-12);
            let w = c.winding();
            assert_eq!(w[0], 0);
            // grad F = (2 pi cos 2 pi x, 0): rotated tangent points up where
            // cos > 0, i.e. on the line near x = 0.05.
            let up = c.points[0][0].rem_euclid(1.0) < 0.25;
            assert_eq!(w[1], if up { 1 } else { -1 });
        }
    }

    #[test]
    fn circle_of_a_radial_bump_has_expected_length_and_orientation() {
        // Level sets of sin(2 pi x) sin(2 pi y) near its maximum are nearly
        // round; orientation is clockwise around the maximum.
        let field = ScalarFieldBundle::new(mono(&[(1, Phase::Sin), (1, Phase::Sin)])).unwrap();
        let grid = FieldGrid::sample(&field, 256).unwrap();
        let cs = contour_trace(&grid, 0.9, None).unwrap();
        let around_max: Vec<_> = cs.iter().filter(|c| (c.points[0][0].rem_euclid(1.0) - 0.25).abs() < 0.2).collect();
        assert_eq!(around_max.len(), 1);
        let c = around_max[0];
        let area: f64 = c.points.windows(2).map(|w| w[0][0] * w[1][1] - w[1][0] * w[0][1]).sum::<f64>() * 0.5;
        assert!(area < 0.0, "{area}");
        assert_eq!(c.winding(), [0, 0]);
    }

    #[test]
    fn saddle_values_are_traced_without_open_chains() {
        let field = ScalarFieldBundle::new(mono(&[(1, Phase::Sin), (1, Phase::Sin)])).unwrap();
        let grid = FieldGrid::sample(&field, 63).unwrap();
        for c in [-0.5, -1e-3, 1e-3, 0.5] {
            for ct in contour_trace(&grid, c, None).unwrap() {
                assert!(ct.closure_gap() < 1e-12);
            }
        }
    }

    #[test]
    fn excluded_value_is_rejected() {
        let f = bump(&BoxRegion::new(2, [0.5, 0.5, 0.0], [0.1, 0.1, 0.0]).unwrap(), 0.2).unwrap();
        let field = ScalarFieldBundle::new(f).unwrap();
        let region = exclusion_set(&field, 1e-2, 128).unwrap();
        let grid = FieldGrid::sample(&field, 128).unwrap();
        assert!(matches!(contour_trace(&grid, 1.0 - 1e-9, Some(&region)), Err(Error::ExcludedValue(_))));
        assert!(contour_trace(&grid, 0.5, Some(&region)).unwrap().len() == 1);
        assert!(contour_trace(&grid, 2.0, Some(&region)).unwrap().is_empty());
    }

    #[test]
    fn zero_field_has_no_contours() {
        let grid = FieldGrid::sample(&ScalarFieldBundle::zero(), 16).unwrap();
        assert!(contour_trace(&grid, 0.0, None).unwrap().is_empty());
    }

    #[test]
    fn negated_field_reverses_orientation() {
        let f = mono(&[(1, Phase::Sin), (2, Phase::Cos)]);
        let pos = FieldGrid::sample(&ScalarFieldBundle::new(f.clone()).unwrap(), 64).unwrap();
        let neg = FieldGrid::sample(&ScalarFieldBundle::new(f.scale(-1.0)).unwrap(), 64).unwrap();
        let signed_area = |cs: &[Contour]| -> Vec<f64> {
            let mut v: Vec<f64> =
                cs.iter().map(|c| c.points.windows(2).map(|w| w[0][0] * w[1][1] - w[1][0] * w[0][1]).sum::<f64>()).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let a = signed_area(&contour_trace(&pos, 0.4, None).unwrap());
        let mut b: Vec<f64> = signed_area(&contour_trace(&neg, -0.4, None).unwrap()).iter().map(|x| -x).collect();
        b.sort_by(f64::total_cmp);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9, "{x} {y}");
        }
    }

    #[test]
    fn bump_half_max_level_is_one_loop_around_centre() {
        let f = bump(&BoxRegion::new(2, [0.4, 0.6, 0.0], [0.05, 0.05, 0.0]).unwrap(), 0.2).unwrap();
        let grid = FieldGrid::sample(&ScalarFieldBundle::new(f).unwrap(), 128).unwrap();
        let cs = contour_trace(&grid, 0.5, None).unwrap();
        assert_eq!(cs.len(), 1);
        let c = &cs[0];
        assert_eq!(c.winding(), [0, 0]);
        let n = (c.points.len() - 1) as f64;
        let mean = c.points[..c.points.len() - 1].iter().fold([0.0, 0.0], |m, p| [m[0] + p[0] / n, m[1] + p[1] / n]);
        assert!((mean[0] - 0.4).abs() < 1e-2 && (mean[1] - 0.6).abs() < 1e-2, "{mean:?}");
        for p in &c.points {
            assert!((grid_value(p) - 0.5).abs() < 2e-2);
        }
        fn grid_value(p: &Point) -> f64 {
            let f = bump(&BoxRegion::new(2, [0.4, 0.6, 0.0], [0.05, 0.05, 0.0]).unwrap(), 0.2).unwrap();
            f.eval(p)
        }
    }
}
