use super::kform::KForm;
use super::Point;
use crate::{par, Error, Result};

/// Default grid resolution per axis for `T^2`.
pub const DEFAULT_RES_T2: usize = 256;
/// Default grid resolution per axis for `T^3`.
pub const DEFAULT_RES_T3: usize = 64;
/// Default curve samples per unit length.
pub const DEFAULT_CURVE_RES: usize = 4096;

pub fn default_torus_res(n: usize) -> usize {
    if n >= 3 {
        DEFAULT_RES_T3
    } else {
        DEFAULT_RES_T2
    }
}

/// Point `idx` of the uniform `res^n` grid on `T^n`, first axis fastest.
pub fn grid_point(idx: usize, res: usize, n: usize) -> Point {
    let mut x = [0.0; 3];
    let mut rem = idx;
    for xj in x.iter_mut().take(n) {
        *xj = (rem % res) as f64 / res as f64;
        rem /= res;
    }
    x
}

/// Mean of `f` over the uniform `res^n` grid, which is the composite
/// trapezoid rule for periodic integrands.
pub fn torus_mean<F>(n: usize, res: usize, f: F) -> f64
where
    F: Fn(&Point) -> f64 + Sync + Send,
{
    let row = res;
    let rows = res.pow(n as u32) / row;
    let total = par::sum_range(rows, |r| {
        let mut s = 0.0;
        for c in 0..row {
            s += f(&grid_point(r * row + c, res, n));
        }
        s
    });
    total / res.pow(n as u32) as f64
}

/// `int_{T^n} w` for a top-degree form.
pub fn integrate_torus(w: &KForm, res: usize) -> Result<f64> {
    if res < 8 {
        return Err(Error::InvalidArgument(format!("resolution {res} < 8")));
    }
    let Some(f) = w.top_coefficient()? else {
        return Ok(0.0);
    };
    Ok(torus_mean(w.dim(), res, |x| f.eval(x)))
}

/// Piecewise-C^1 path in `T^n`, parametrized over `[0, 1]` in unwrapped
/// coordinates.
pub trait Curve: Sync {
    fn point(&self, t: f64) -> Point;
    fn velocity(&self, t: f64) -> Point;

    /// Parameters where the velocity may jump, including 0 and 1.
    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0, 1.0]
    }

    /// Approximate length of the piece between two parameters.
    fn piece_length(&self, a: f64, b: f64) -> f64 {
        let m = 16;
        (0..m)
            .map(|i| {
                let t = a + (b - a) * (i as f64 + 0.5) / m as f64;
                norm(&self.velocity(t)) * (b - a) / m as f64
            })
            .sum()
    }

    fn length(&self) -> f64 {
        let bp = self.breakpoints();
        bp.windows(2).map(|w| self.piece_length(w[0], w[1])).sum()
    }
}

pub fn norm(v: &Point) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Straight segment from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Point,
    pub end: Point,
}

impl Segment {
    pub fn new(start: Point, end: Point) -> Self {
        Self { start, end }
    }
}

impl Curve for Segment {
    fn point(&self, t: f64) -> Point {
        let mut p = [0.0; 3];
        for j in 0..3 {
            p[j] = self.start[j] + t * (self.end[j] - self.start[j]);
        }
        p
    }

    fn velocity(&self, _t: f64) -> Point {
        sub(&self.end, &self.start)
    }

    fn piece_length(&self, a: f64, b: f64) -> f64 {
        norm(&sub(&self.end, &self.start)) * (b - a)
    }
}

/// Polygonal path through `points` at uniform parameter spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<Point>,
}

impl Polyline {
    pub fn new(points: Vec<Point>) -> Self {
        Self { points }
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.points.windows(2).map(|w| Segment::new(w[0], w[1]))
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let m = self.points.len().saturating_sub(1).max(1);
        let s = (t * m as f64).clamp(0.0, m as f64);
        let i = (s.floor() as usize).min(m - 1);
        (i, s - i as f64)
    }
}

impl Curve for Polyline {
    fn point(&self, t: f64) -> Point {
        let (i, u) = self.locate(t);
        Segment::new(self.points[i], self.points[i + 1]).point(u)
    }

    fn velocity(&self, t: f64) -> Point {
        let (i, _) = self.locate(t);
        let m = (self.points.len() - 1) as f64;
        let v = sub(&self.points[i + 1], &self.points[i]);
        [v[0] * m, v[1] * m, v[2] * m]
    }

    fn breakpoints(&self) -> Vec<f64> {
        let m = self.points.len() - 1;
        (0..=m).map(|i| i as f64 / m as f64).collect()
    }

    fn piece_length(&self, a: f64, b: f64) -> f64 {
        let (i, _) = self.locate(0.5 * (a + b));
        let m = (self.points.len() - 1) as f64;
        norm(&sub(&self.points[i + 1], &self.points[i])) * (b - a) * m
    }

    fn length(&self) -> f64 {
        self.segments().map(|s| norm(&sub(&s.end, &s.start))).sum()
    }
}

/// Curve given by closures for position and velocity.
pub struct ParamCurve<P, V> {
    pub pos: P,
    pub vel: V,
}

impl<P, V> Curve for ParamCurve<P, V>
where
    P: Fn(f64) -> Point + Sync,
    V: Fn(f64) -> Point + Sync,
{
    fn point(&self, t: f64) -> Point {
        (self.pos)(t)
    }

    fn velocity(&self, t: f64) -> Point {
        (self.vel)(t)
    }
}

/// Number of trapezoid subintervals for a piece of length `len`.
pub fn subintervals(len: f64, res: usize) -> usize {
    ((len * res as f64).ceil() as usize).max(8)
}

/// `int_curve w` for a 1-form `w`, by the composite trapezoid rule on each
/// smooth piece with `res` subintervals per unit length.
pub fn line_integral(curve: &dyn Curve, w: &KForm, res: usize) -> Result<f64> {
    if w.degree() != 1 {
        return Err(Error::InvalidArgument(format!("line integral of a {}-form", w.degree())));
    }
    let integrand = |t: f64| {
        let x = curve.point(t);
        let v = curve.velocity(t);
        let c = w.covector(&x);
        c[0] * v[0] + c[1] * v[1] + c[2] * v[2]
    };
    let bp = curve.breakpoints();
    let mut total = 0.0;
    for piece in bp.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        if b <= a {
            continue;
        }
        let m = subintervals(curve.piece_length(a, b), res);
        let h = (b - a) / m as f64;
        // Evaluate just inside the endpoints so one-sided velocities are used.
        let eps = h * 1e-9;
        let mut s = 0.5 * (integrand(a + eps) + integrand(b - eps));
        for i in 1..m {
            s += integrand(a + i as f64 * h);
        }
        total += s * h;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::function::SmoothFunction;
    use crate::forms::trig::{Monomial, Phase, TrigPoly};

    fn sin2_form() -> KForm {
        let s = TrigPoly::monomial(2, Monomial::new(&[(1, Phase::Sin)]), 1.0);
        let f: SmoothFunction = s.mul(&s).into();
        KForm::monomial(2, &[0, 1], f).unwrap()
    }

    #[test]
    fn torus_integrals() {
        let vol = KForm::basis(2, &[0, 1]).unwrap();
        assert!((integrate_torus(&vol, 64).unwrap() - 1.0).abs() < 1e-12);
        assert!((integrate_torus(&sin2_form(), 256).unwrap() - 0.5).abs() < 1e-9);
        assert!(matches!(integrate_torus(&KForm::basis(2, &[0]).unwrap(), 64), Err(Error::NotTopDegree(1, 2))));
        assert!(integrate_torus(&vol, 4).is_err());
    }

    #[test]
    fn trapezoid_exact_below_nyquist() {
        let p = TrigPoly::monomial(2, Monomial::new(&[(3, Phase::Cos), (2, Phase::Cos)]), 1.0);
        let f = p.mul(&p);
        let w = KForm::monomial(2, &[0, 1], f.into()).unwrap();
        let a = integrate_torus(&w, 24).unwrap();
        assert!((a - 0.25).abs() < 1e-12);
    }

    #[test]
    fn loop_and_diagonal_line_integrals() {
        let dx = KForm::basis(2, &[0]).unwrap();
        let dy = KForm::basis(2, &[1]).unwrap();
        let loop_ = Segment::new([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert!((line_integral(&loop_, &dx, 4096).unwrap() - 1.0).abs() < 1e-12);
        assert!(line_integral(&loop_, &dy, 4096).unwrap().abs() < 1e-12);
        let rho = 0.618;
        let diag = ParamCurve { pos: |t: f64| [t, rho * t, 0.0], vel: |_t: f64| [1.0, rho, 0.0] };
        assert!((line_integral(&diag, &dy, 4096).unwrap() - rho).abs() < 1e-9);
        let poly = Polyline::new(vec![[0.0, 0.0, 0.0], [0.5, 0.2, 0.0], [1.0, 1.0, 0.0]]);
        assert!((line_integral(&poly, &dy, 4096).unwrap() - 1.0).abs() < 1e-12);
    }
}
