use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::trig::TrigPoly;
use super::Point;
use crate::num::wrap_half;
use crate::{Error, Result};

/// Step for finite-difference gradients of derived nodes.
const FD_STEP: f64 = 1e-5;

/// Coordinate box on `T^n`, given by its center and half-widths. A half-width
/// of at least `1/2` spans the whole axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub n: usize,
    pub center: Point,
    pub half: Point,
}

impl BoxRegion {
    pub fn new(n: usize, center: Point, half: Point) -> Result<Self> {
        if n == 0 || n > 3 {
            return Err(Error::InvalidArgument(format!("dimension {n} not in 1..=3")));
        }
        if half[..n].iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidArgument("box half-widths must be positive".into()));
        }
        Ok(Self { n, center, half })
    }

    /// Box from corner `lo` with side lengths `side`.
    pub fn from_corner(n: usize, lo: Point, side: Point) -> Result<Self> {
        let mut c = [0.0; 3];
        let mut h = [0.0; 3];
        for j in 0..n {
            c[j] = lo[j] + 0.5 * side[j];
            h[j] = 0.5 * side[j];
        }
        Self::new(n, c, h)
    }

    pub fn whole(n: usize) -> Self {
        Self { n, center: [0.5; 3], half: [0.5; 3] }
    }

    pub fn expanded(&self, margin: f64) -> Self {
        let mut b = *self;
        for j in 0..self.n {
            b.half[j] += margin;
        }
        b
    }

    pub fn contains(&self, x: &Point) -> bool {
        (0..self.n).all(|j| self.half[j] >= 0.5 || wrap_half(x[j] - self.center[j]).abs() <= self.half[j])
    }

    pub fn volume(&self) -> f64 {
        (0..self.n).map(|j| (2.0 * self.half[j]).min(1.0)).product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Support {
    Global,
    Box(BoxRegion),
}

impl Support {
    pub fn contains(&self, x: &Point) -> bool {
        match self {
            Support::Global => true,
            Support::Box(b) => b.contains(x),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Support::Global => 1.0,
            Support::Box(b) => b.volume(),
        }
    }
}

enum Node {
    Trig(TrigPoly),
    Bump { inner: BoxRegion, margin: f64 },
    Sum(SmoothFunction, SmoothFunction),
    Product(SmoothFunction, SmoothFunction),
    Scaled(f64, SmoothFunction),
    Quotient(SmoothFunction, SmoothFunction),
    Partial(SmoothFunction, usize),
}

/// Smooth real function on `T^n` with an evaluable gradient.
///
/// Trigonometric polynomials and bumps have closed-form gradients; sums,
/// products and quotients combine them by the usual rules. Only
/// [`SmoothFunction::partial`] of a non-polynomial falls back to central
/// differences for its own gradient.
#[derive(Clone)]
pub struct SmoothFunction {
    n: usize,
    node: Arc<Node>,
}

impl fmt::Debug for SmoothFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &*self.node {
            Node::Trig(p) => return write!(f, "Trig({p:?})"),
            Node::Bump { .. } => "Bump",
            Node::Sum(..) => "Sum",
            Node::Product(..) => "Product",
            Node::Scaled(..) => "Scaled",
            Node::Quotient(..) => "Quotient",
            Node::Partial(..) => "Partial",
        };
        write!(f, "SmoothFunction::{kind}(T^{})", self.n)
    }
}

impl From<TrigPoly> for SmoothFunction {
    fn from(p: TrigPoly) -> Self {
        Self { n: p.dim(), node: Arc::new(Node::Trig(p)) }
    }
}

impl SmoothFunction {
    fn wrap(n: usize, node: Node) -> Self {
        Self { n, node: Arc::new(node) }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        TrigPoly::constant(n, c).into()
    }

    pub fn zero(n: usize) -> Self {
        TrigPoly::zero(n).into()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_trig(&self) -> Option<&TrigPoly> {
        match &*self.node {
            Node::Trig(p) => Some(p),
            _ => None,
        }
    }

    /// True when the function is structurally zero.
    pub fn is_zero(&self) -> bool {
        match &*self.node {
            Node::Trig(p) => p.is_zero(),
            Node::Scaled(c, f) => *c == 0.0 || f.is_zero(),
            Node::Product(a, b) => a.is_zero() || b.is_zero(),
            Node::Quotient(a, _) => a.is_zero(),
            _ => false,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        if let (Some(a), Some(b)) = (self.as_trig(), other.as_trig()) {
            return a.add(b).into();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        Self::wrap(self.n.max(other.n), Node::Sum(self.clone(), other.clone()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        if let (Some(a), Some(b)) = (self.as_trig(), other.as_trig()) {
            return a.mul(b).into();
        }
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.n.max(other.n));
        }
        Self::wrap(self.n.max(other.n), Node::Product(self.clone(), other.clone()))
    }

    pub fn scale(&self, c: f64) -> Self {
        if let Some(p) = self.as_trig() {
            return p.scale(c).into();
        }
        Self::wrap(self.n, Node::Scaled(c, self.clone()))
    }

    /// `self / den`; the caller guarantees `den > 0` wherever `self != 0`.
    pub fn div(&self, den: &Self) -> Self {
        if self.is_zero() {
            return Self::zero(self.n);
        }
        Self::wrap(self.n.max(den.n), Node::Quotient(self.clone(), den.clone()))
    }

    /// `d self / d x_j`, exact for polynomials.
    pub fn partial(&self, j: usize) -> Self {
        if let Some(p) = self.as_trig() {
            return p.partial(j).into();
        }
        Self::wrap(self.n, Node::Partial(self.clone(), j))
    }

    pub fn eval(&self, x: &Point) -> f64 {
        match &*self.node {
            Node::Trig(p) => p.eval(x),
            Node::Bump { inner, margin } => {
                let mut v = 1.0;
                for j in 0..inner.n {
                    v *= bump_axis(inner, *margin, j, x[j]).0;
                    if v == 0.0 {
                        break;
                    }
                }
                v
            }
            Node::Sum(a, b) => a.eval(x) + b.eval(x),
            Node::Product(a, b) => {
                let va = a.eval(x);
                if va == 0.0 {
                    0.0
                } else {
                    va * b.eval(x)
                }
            }
            Node::Scaled(c, a) => c * a.eval(x),
            Node::Quotient(a, b) => {
                let va = a.eval(x);
                if va == 0.0 {
                    0.0
                } else {
                    va / b.eval(x)
                }
            }
            Node::Partial(a, j) => a.gradient(x)[*j],
        }
    }

    /// Value and gradient together.
    pub fn eval_grad(&self, x: &Point) -> (f64, Point) {
        match &*self.node {
            Node::Trig(p) => (p.eval(x), p.gradient(x)),
            Node::Bump { inner, margin } => {
                let n = inner.n;
                let mut vals = [1.0; 3];
                let mut ders = [0.0; 3];
                for j in 0..n {
                    let (v, d) = bump_axis(inner, *margin, j, x[j]);
                    vals[j] = v;
                    ders[j] = d;
                }
                let mut g = [0.0; 3];
                for (j, gj) in g.iter_mut().enumerate().take(n) {
                    *gj = ders[j] * (0..n).filter(|&i| i != j).map(|i| vals[i]).product::<f64>();
                }
                (vals[..n].iter().product(), g)
            }
            Node::Sum(a, b) => {
                let (va, ga) = a.eval_grad(x);
                let (vb, gb) = b.eval_grad(x);
                (va + vb, add3(&ga, &gb, 1.0))
            }
            Node::Product(a, b) => {
                let (va, ga) = a.eval_grad(x);
                if va == 0.0 && ga.iter().all(|&g| g == 0.0) {
                    return (0.0, [0.0; 3]);
                }
                let (vb, gb) = b.eval_grad(x);
                let mut g = [0.0; 3];
                for j in 0..3 {
                    g[j] = ga[j] * vb + va * gb[j];
                }
                (va * vb, g)
            }
            Node::Scaled(c, a) => {
                let (v, g) = a.eval_grad(x);
                (c * v, [c * g[0], c * g[1], c * g[2]])
            }
            Node::Quotient(a, b) => {
                let (va, ga) = a.eval_grad(x);
                if va == 0.0 && ga.iter().all(|&g| g == 0.0) {
                    return (0.0, [0.0; 3]);
                }
                let (vb, gb) = b.eval_grad(x);
                let q = va / vb;
                let mut g = [0.0; 3];
                for j in 0..3 {
                    g[j] = (ga[j] - q * gb[j]) / vb;
                }
                (q, g)
            }
            Node::Partial(a, j) => {
                let v = a.gradient(x)[*j];
                let mut g = [0.0; 3];
                for (i, gi) in g.iter_mut().enumerate().take(self.n) {
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[i] += FD_STEP;
                    xm[i] -= FD_STEP;
                    *gi = (a.gradient(&xp)[*j] - a.gradient(&xm)[*j]) / (2.0 * FD_STEP);
                }
                (v, g)
            }
        }
    }

    pub fn gradient(&self, x: &Point) -> Point {
        self.eval_grad(x).1
    }

    /// A region outside which the function vanishes.
    pub fn support(&self) -> Support {
        match &*self.node {
            Node::Trig(p) if p.is_zero() => Support::Box(BoxRegion { n: self.n, center: [0.0; 3], half: [0.0; 3] }),
            Node::Trig(_) => Support::Global,
            Node::Bump { inner, margin } => Support::Box(inner.expanded(*margin)),
            Node::Sum(a, b) => match (a.support(), b.support()) {
                (Support::Box(x), Support::Box(y)) if x == y => Support::Box(x),
                _ => Support::Global,
            },
            Node::Product(a, b) => match a.support() {
                Support::Global => b.support(),
                s => s,
            },
            Node::Scaled(_, a) | Node::Quotient(a, _) | Node::Partial(a, _) => a.support(),
        }
    }
}

fn add3(a: &Point, b: &Point, s: f64) -> Point {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

/// `exp(-1/s)` for `s > 0`, else 0.
fn flat(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth step: 1 for `t <= 0`, 0 for `t >= 1`, with its derivative.
pub fn smooth_step(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (1.0, 0.0);
    }
    if t >= 1.0 {
        return (0.0, 0.0);
    }
    let a = flat(1.0 - t);
    let b = flat(t);
    let s = a + b;
    let d = -a * b * (1.0 / ((1.0 - t) * (1.0 - t)) + 1.0 / (t * t)) / (s * s);
    (a / s, d)
}

fn bump_axis(inner: &BoxRegion, margin: f64, j: usize, xj: f64) -> (f64, f64) {
    if inner.half[j] >= 0.5 {
        return (1.0, 0.0);
    }
    let off = wrap_half(xj - inner.center[j]);
    let t = (off.abs() - inner.half[j]) / margin;
    let (v, d) = smooth_step(t);
    (v, d * off.signum() / margin)
}

/// Smooth function equal to 1 on `inner`, vanishing outside `inner`
/// expanded by `margin`, with values in `[0, 1]`.
pub fn bump(inner: &BoxRegion, margin: f64) -> Result<SmoothFunction> {
    if !(margin > 0.0) {
        return Err(Error::InvalidArgument(format!("bump margin must be positive, got {margin}")));
    }
    for j in 0..inner.n {
        if inner.half[j] < 0.5 && inner.half[j] + margin >= 0.5 {
            return Err(Error::InvalidArgument(format!("expanded box does not fit in a chart along axis {j}")));
        }
    }
    Ok(SmoothFunction::wrap(inner.n, Node::Bump { inner: *inner, margin }))
}

/// Resolution of the grid on which [`partition_of_unity`] verifies coverage.
pub const COVER_CHECK_RES: usize = 64;

/// Normalized bumps `rho_i = b_i / sum_j b_j` for the boxes of `cover`, with
/// `b_i` equal to 1 on box `i` and supported in box `i` expanded by `margin`.
pub fn partition_of_unity(cover: &[BoxRegion], margin: f64) -> Result<Vec<SmoothFunction>> {
    let n = cover.first().map(|b| b.n).ok_or_else(|| Error::InvalidArgument("empty cover".into()))?;
    check_cover(cover, n)?;
    if cover.len() == 1 && cover[0].volume() >= 1.0 {
        return Ok(vec![SmoothFunction::constant(n, 1.0)]);
    }
    let bumps = cover.iter().map(|b| bump(b, margin)).collect::<Result<Vec<_>>>()?;
    let mut total = bumps[0].clone();
    for b in &bumps[1..] {
        total = total.add(b);
    }
    Ok(bumps.iter().map(|b| b.div(&total)).collect())
}

/// Every grid point lies in some box of the cover.
fn check_cover(cover: &[BoxRegion], n: usize) -> Result<()> {
    let r = COVER_CHECK_RES;
    let count = r.pow(n as u32);
    for idx in 0..count {
        let mut x = [0.0; 3];
        let mut rem = idx;
        for xj in x.iter_mut().take(n) {
            *xj = (rem % r) as f64 / r as f64;
            rem /= r;
        }
        if !cover.iter().any(|b| b.contains(&x)) {
            return Err(Error::NotACover(x[..n].to_vec()));
        }
    }
    Ok(())
}

/// Four boxes covering `T^2`, one per quadrant, each overlapping its
/// neighbours by `overlap` on every side.
pub fn quadrant_cover(overlap: f64) -> Vec<BoxRegion> {
    let mut out = Vec::with_capacity(4);
    for cy in [0.25, 0.75] {
        for cx in [0.25, 0.75] {
            out.push(BoxRegion { n: 2, center: [cx, cy, 0.0], half: [0.25 + overlap, 0.25 + overlap, 0.0] });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::trig::{Monomial, Phase};
    use rand::{Rng, SeedableRng};

    fn fd_check(f: &SmoothFunction, n: usize, seed: u64) -> f64 {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let mut x = [0.0; 3];
            for xj in x.iter_mut().take(n) {
                *xj = rng.gen::<f64>();
            }
            let g = f.gradient(&x);
            for j in 0..n {
                let h = 1e-5;
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let fd = (f.eval(&xp) - f.eval(&xm)) / (2.0 * h);
                worst = worst.max((fd - g[j]).abs());
            }
        }
        worst
    }

    fn sample_box() -> BoxRegion {
        BoxRegion::new(2, [0.4, 0.6, 0.0], [0.1, 0.15, 0.0]).unwrap()
    }

    #[test]
    fn bump_values() {
        let b = bump(&sample_box(), 0.1).unwrap();
        assert_eq!(b.eval(&[0.4, 0.6, 0.0]), 1.0);
        assert_eq!(b.eval(&[0.45, 0.7, 0.0]), 1.0);
        assert_eq!(b.eval(&[0.75, 0.6, 0.0]), 0.0);
        assert_eq!(b.eval(&[0.4, 0.95, 0.0]), 0.0);
        let mid = b.eval(&[0.55, 0.6, 0.0]);
        assert!(mid > 0.0 && mid < 1.0);
        assert!(bump(&sample_box(), 0.0).is_err());
        assert!(bump(&sample_box(), 0.4).is_err());
    }

    #[test]
    fn bump_gradient_matches_finite_differences() {
        let b = bump(&sample_box(), 0.2).unwrap();
        let w = fd_check(&b, 2, 1);
        assert!(w < 1e-6, "{w}");
    }

    #[test]
    fn composite_gradient_matches_finite_differences() {
        let s = TrigPoly::monomial(2, Monomial::new(&[(1, Phase::Sin), (2, Phase::Cos)]), 0.7);
        let b = bump(&sample_box(), 0.2).unwrap();
        let f = SmoothFunction::from(s).mul(&b).add(&b.scale(0.3));
        assert!(fd_check(&f, 2, 2) < 1e-6);
        let parts = partition_of_unity(&quadrant_cover(0.02), 0.2).unwrap();
        let w = fd_check(&parts[2], 2, 3);
        assert!(w < 1e-6, "{w}");
    }

    #[test]
    fn partition_sums_to_one_and_respects_supports() {
        let cover = quadrant_cover(0.05);
        let parts = partition_of_unity(&cover, 0.05).unwrap();
        let r = 100;
        for i in 0..r {
            for j in 0..r {
                let x = [i as f64 / r as f64, j as f64 / r as f64, 0.0];
                let vals: Vec<f64> = parts.iter().map(|p| p.eval(&x)).collect();
                assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for (k, v) in vals.iter().enumerate() {
                    assert!(*v >= 0.0);
                    if !cover[k].expanded(0.05).contains(&x) {
                        assert_eq!(*v, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn single_box_partition_is_one_and_gaps_are_caught() {
        let parts = partition_of_unity(&[BoxRegion::whole(2)], 0.1).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].eval(&[0.3, 0.9, 0.0]), 1.0);
        let holey = vec![sample_box()];
        assert!(matches!(partition_of_unity(&holey, 0.05), Err(Error::NotACover(_))));
    }
}
