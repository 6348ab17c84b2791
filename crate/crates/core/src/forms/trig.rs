use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cos,
    Sin,
}

/// `prod_j phi_j(x_j)` with `phi_j = cos(2 pi k_j x_j)` or `sin(2 pi k_j x_j)`;
/// a zero frequency stands for the constant 1 (stored with phase `Cos`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Monomial {
    pub freqs: [(u32, Phase); 3],
}

impl Monomial {
    pub const ONE: Monomial = Monomial { freqs: [(0, Phase::Cos); 3] };

    pub fn new(freqs: &[(u32, Phase)]) -> Self {
        let mut m = Self::ONE;
        for (j, &(k, p)) in freqs.iter().enumerate() {
            m.freqs[j] = if k == 0 { (0, Phase::Cos) } else { (k, p) };
        }
        m
    }

    pub fn degree(&self) -> u32 {
        self.freqs.iter().map(|f| f.0).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn max_freq(&self) -> u32 {
        self.freqs.iter().map(|f| f.0).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.freqs
            .iter()
            .zip(x)
            .map(|(&(k, p), &xj)| match (k, p) {
                (0, _) => 1.0,
                (k, Phase::Cos) => (TAU * k as f64 * xj).cos(),
                (k, Phase::Sin) => (TAU * k as f64 * xj).sin(),
            })
            .product()
    }

    pub fn eval_table(&self, t: &TrigTable) -> f64 {
        let mut v = 1.0;
        for (j, &(k, p)) in self.freqs.iter().enumerate() {
            if k != 0 {
                v *= match p {
                    Phase::Cos => t.cos[j][k as usize],
                    Phase::Sin => t.sin[j][k as usize],
                };
            }
        }
        v
    }

    /// `int_0^1 m(a + t v) dt` in closed form: the product of cosines and
    /// sines is expanded into exponentials `exp(i (alpha + beta t))`.
    pub fn segment_mean(&self, a: &Point, v: &Point) -> f64 {
        // (coefficient re, im, alpha, beta); at most 8 terms.
        let mut terms = [(0.0f64, 0.0f64, 0.0f64, 0.0f64); 8];
        terms[0] = (1.0, 0.0, 0.0, 0.0);
        let mut len = 1;
        for (j, &(k, p)) in self.freqs.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let w = TAU * k as f64;
            let (al, be) = (w * a[j], w * v[j]);
            // cos = (e+ + e-)/2, sin = (e+ - e-)/(2i) = -i/2 e+ + i/2 e-
            let (plus, minus) = match p {
                Phase::Cos => ((0.5, 0.0), (0.5, 0.0)),
                Phase::Sin => ((0.0, -0.5), (0.0, 0.5)),
            };
            for i in 0..len {
                let (re, im, alpha, beta) = terms[i];
                terms[i + len] = (re * minus.0 - im * minus.1, re * minus.1 + im * minus.0, alpha - al, beta - be);
                terms[i] = (re * plus.0 - im * plus.1, re * plus.1 + im * plus.0, alpha + al, beta + be);
            }
            len *= 2;
        }
        let mut total = 0.0;
        for &(re, im, alpha, beta) in &terms[..len] {
            // mean of exp(i beta t) over [0, 1]
            let (er, ei) = if beta.abs() < 1e-4 {
                let b2 = beta * beta;
                (1.0 - b2 / 6.0 + b2 * b2 / 120.0, beta / 2.0 - beta * b2 / 24.0)
            } else {
                let (sb, cb) = beta.sin_cos();
                (sb / beta, (1.0 - cb) / beta)
            };
            let (sa, ca) = alpha.sin_cos();
            // Re[(re + i im) (ca + i sa) (er + i ei)]
            let (pr, pi) = (re * ca - im * sa, re * sa + im * ca);
            total += pr * er - pi * ei;
        }
        total
    }

    pub fn label(&self, n: usize) -> String {
        let names = ["x", "y", "z"];
        let parts: Vec<String> = self.freqs[..n]
            .iter()
            .zip(names)
            .filter(|(f, _)| f.0 != 0)
            .map(|(&(k, p), v)| {
                let f = if p == Phase::Cos { "cos" } else { "sin" };
                if k == 1 {
                    format!("{f}(2pi{v})")
                } else {
                    format!("{f}(2pi{k}{v})")
                }
            })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

/// Values of `cos(2 pi k x_j)`, `sin(2 pi k x_j)` for `k <= kmax` at one point.
#[derive(Debug, Clone)]
pub struct TrigTable {
    pub cos: [Vec<f64>; 3],
    pub sin: [Vec<f64>; 3],
}

impl TrigTable {
    pub fn new(kmax: usize) -> Self {
        let z = || vec![0.0; kmax + 1];
        Self { cos: [z(), z(), z()], sin: [z(), z(), z()] }
    }

    /// Fills the table at `x` for the first `n` axes.
    pub fn fill(&mut self, x: &Point, n: usize) {
        for j in 0..n {
            let (s, c) = (TAU * x[j]).sin_cos();
            self.fill_axis(j, c, s);
        }
    }

    /// Fills axis `j` from `cos(2 pi x_j)`, `sin(2 pi x_j)` by angle addition.
    pub fn fill_axis(&mut self, j: usize, c1: f64, s1: f64) {
        let kmax = self.cos[j].len() - 1;
        self.cos[j][0] = 1.0;
        self.sin[j][0] = 0.0;
        if kmax == 0 {
            return;
        }
        self.cos[j][1] = c1;
        self.sin[j][1] = s1;
        for k in 2..=kmax {
            let (c, s) = (self.cos[j][k - 1], self.sin[j][k - 1]);
            self.cos[j][k] = c * c1 - s * s1;
            self.sin[j][k] = s * c1 + c * s1;
        }
    }
}

/// Finite trigonometric sum on `T^n` with exact differentiation and products.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrigPoly {
    n: usize,
    #[serde(with = "terms_table")]
    terms: BTreeMap<Monomial, f64>,
}

mod terms_table {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row {
        coeff: f64,
        freqs: Vec<(u32, Phase)>,
    }

    pub fn serialize<S: Serializer>(t: &BTreeMap<Monomial, f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(t.iter().map(|(m, &c)| Row { coeff: c, freqs: m.freqs.to_vec() }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Monomial, f64>, D::Error> {
        let rows = Vec::<Row>::deserialize(d)?;
        Ok(rows.into_iter().map(|r| (Monomial::new(&r.freqs), r.coeff)).collect())
    }
}

impl TrigPoly {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::monomial(n, Monomial::ONE, c)
    }

    pub fn monomial(n: usize, m: Monomial, coeff: f64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(m, coeff);
        p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).fold(0.0, f64::max)
    }

    pub fn max_freq(&self) -> u32 {
        self.terms.keys().map(|m| m.max_freq()).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.terms.entry(m).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.terms.remove(&m);
        }
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.eval(x)).sum()
    }

    pub fn eval_table(&self, t: &TrigTable) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.eval_table(t)).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut p = Self::zero(self.n);
        for (m, c) in &self.terms {
            p.add_term(*m, c * s);
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (m, c) in &other.terms {
            p.add_term(*m, *c);
        }
        p
    }

    /// Exact partial derivative along axis `j`.
    pub fn partial(&self, j: usize) -> Self {
        let mut p = Self::zero(self.n);
        for (m, c) in &self.terms {
            let (k, phase) = m.freqs[j];
            if k == 0 {
                continue;
            }
            let w = TAU * k as f64;
            let mut dm = *m;
            let sign = match phase {
                Phase::Cos => {
                    dm.freqs[j] = (k, Phase::Sin);
                    -1.0
                }
                Phase::Sin => {
                    dm.freqs[j] = (k, Phase::Cos);
                    1.0
                }
            };
            p.add_term(dm, sign * w * c);
        }
        p
    }

    pub fn gradient(&self, x: &Point) -> Point {
        let mut g = [0.0; 3];
        for (j, gj) in g.iter_mut().enumerate().take(self.n) {
            *gj = self.partial(j).eval(x);
        }
        g
    }

    /// Exact product, expanded with product-to-sum identities axis by axis.
    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self::zero(self.n.max(other.n));
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut partial: Vec<(Monomial, f64)> = vec![(Monomial::ONE, ca * cb)];
                for j in 0..3 {
                    let factors = axis_product(ma.freqs[j], mb.freqs[j]);
                    partial = partial
                        .into_iter()
                        .flat_map(|(m, c)| {
                            factors.iter().map(move |&(f, s)| {
                                let mut m2 = m;
                                m2.freqs[j] = f;
                                (m2, c * s)
                            })
                        })
                        .collect();
                }
                for (m, c) in partial {
                    p.add_term(m, c);
                }
            }
        }
        p
    }
}

/// `phi_a(x) * phi_b(x)` on one axis as a sum of single-axis basis functions.
fn axis_product(a: (u32, Phase), b: (u32, Phase)) -> Vec<((u32, Phase), f64)> {
    use Phase::*;
    if a.0 == 0 {
        return vec![(b, 1.0)];
    }
    if b.0 == 0 {
        return vec![(a, 1.0)];
    }
    let (p, q) = (a.0 as i64, b.0 as i64);
    // Basis function of signed frequency f, returning (canonical, sign).
    let basis = |f: i64, phase: Phase| -> ((u32, Phase), f64) {
        match phase {
            Cos => ((f.unsigned_abs() as u32, Cos), 1.0),
            Sin if f == 0 => ((0, Cos), 0.0),
            Sin => ((f.unsigned_abs() as u32, Sin), f.signum() as f64),
        }
    };
    let terms = match (a.1, b.1) {
        (Cos, Cos) => [(p - q, Cos, 0.5), (p + q, Cos, 0.5)],
        (Sin, Sin) => [(p - q, Cos, 0.5), (p + q, Cos, -0.5)],
        (Sin, Cos) => [(p + q, Sin, 0.5), (p - q, Sin, 0.5)],
        (Cos, Sin) => [(p + q, Sin, 0.5), (p - q, Sin, -0.5)],
    };
    terms
        .iter()
        .map(|&(f, ph, c)| {
            let (m, s) = basis(f, ph);
            (m, c * s)
        })
        .filter(|(_, c)| *c != 0.0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m2(a: (u32, Phase), b: (u32, Phase)) -> Monomial {
        Monomial::new(&[a, b])
    }

    #[test]
    fn partial_derivative_of_sin() {
        let p = TrigPoly::monomial(2, m2((1, Phase::Sin), (0, Phase::Cos)), 1.0);
        let d = p.partial(0);
        let x = [0.13, 0.7, 0.0];
        assert!((d.eval(&x) - TAU * (TAU * 0.13).cos()).abs() < 1e-12);
        assert!(p.partial(1).is_zero());
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let m = Monomial::new(&[(3, Phase::Sin), (2, Phase::Cos), (1, Phase::Sin)]);
        let x = [0.21, -0.4, 0.93];
        let mut t = TrigTable::new(3);
        t.fill(&x, 3);
        assert!((m.eval(&x) - m.eval_table(&t)).abs() < 1e-13);
    }

    #[test]
    fn segment_mean_matches_fine_quadrature() {
        let m = Monomial::new(&[(2, Phase::Sin), (1, Phase::Cos), (3, Phase::Sin)]);
        for (a, v) in [([0.1, 0.2, 0.3], [0.7, -0.4, 0.05]), ([0.0; 3], [1.0, 0.0, 0.0]), ([0.3, 0.9, 0.1], [1e-7, 2.0, 0.0])] {
            let n = 200_000;
            let mut q = 0.0;
            for i in 0..=n {
                let t = i as f64 / n as f64;
                let x = [a[0] + t * v[0], a[1] + t * v[1], a[2] + t * v[2]];
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                q += w * m.eval(&x);
            }
            q /= n as f64;
            assert!((q - m.segment_mean(&a, &v)).abs() < 1e-9, "{q} vs {}", m.segment_mean(&a, &v));
        }
    }

    proptest! {
        #[test]
        fn product_matches_pointwise(ka in 0u32..4, kb in 0u32..4, la in 0u32..3, lb in 0u32..3,
                                     pa: bool, pb: bool, qa: bool, qb: bool,
                                     x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let ph = |b: bool| if b { Phase::Sin } else { Phase::Cos };
            let a = TrigPoly::monomial(2, m2((ka, ph(pa)), (la, ph(qa))), 1.5);
            let b = TrigPoly::monomial(2, m2((kb, ph(pb)), (lb, ph(qb))), -0.5);
            let pt = [x, y, 0.0];
            prop_assert!((a.mul(&b).eval(&pt) - a.eval(&pt) * b.eval(&pt)).abs() < 1e-12);
        }
    }
}
