use std::collections::BTreeMap;

use super::function::SmoothFunction;
use super::trig::TrigPoly;
use super::Point;
use crate::{Error, Result};

/// Differential `k`-form on `T^n`: coefficient functions indexed by strictly
/// increasing multi-indices.
#[derive(Debug, Clone)]
pub struct KForm {
    n: usize,
    k: usize,
    components: BTreeMap<Vec<usize>, SmoothFunction>,
}

/// Sign of the permutation sorting the concatenation `a ++ b`, or `None` if
/// the two index sets overlap.
fn merge_sign(a: &[usize], b: &[usize]) -> Option<(f64, Vec<usize>)> {
    let mut inversions = 0usize;
    for &i in a {
        for &j in b {
            if i == j {
                return None;
            }
            if i > j {
                inversions += 1;
            }
        }
    }
    let mut merged: Vec<usize> = a.iter().chain(b).copied().collect();
    merged.sort_unstable();
    Some((if inversions % 2 == 0 { 1.0 } else { -1.0 }, merged))
}

impl KForm {
    pub fn zero(n: usize, k: usize) -> Self {
        Self { n, k, components: BTreeMap::new() }
    }

    /// The 0-form `f`.
    pub fn function(f: SmoothFunction) -> Self {
        let mut w = Self::zero(f.dim(), 0);
        w.set(Vec::new(), f);
        w
    }

    /// `f dx_I`, with `I` in any order (sign adjusted).
    pub fn monomial(n: usize, index: &[usize], f: SmoothFunction) -> Result<Self> {
        if index.iter().any(|&i| i >= n) {
            return Err(Error::InvalidArgument(format!("index {index:?} out of range for T^{n}")));
        }
        let mut w = Self::zero(n, index.len());
        let mut sorted = index.to_vec();
        let mut sign = 1.0;
        for i in 0..sorted.len() {
            for j in 0..sorted.len() - 1 - i {
                if sorted[j] > sorted[j + 1] {
                    sorted.swap(j, j + 1);
                    sign = -sign;
                }
            }
        }
        if sorted.windows(2).any(|p| p[0] == p[1]) {
            return Ok(w);
        }
        w.set(sorted, f.scale(sign));
        Ok(w)
    }

    /// The closed form `dx_I` with unit coefficient.
    pub fn basis(n: usize, index: &[usize]) -> Result<Self> {
        Self::monomial(n, index, SmoothFunction::constant(n, 1.0))
    }

    /// 1-form `sum_i c_i dx_i` from coefficient functions.
    pub fn one_form(coeffs: Vec<SmoothFunction>) -> Self {
        let n = coeffs.len();
        let mut w = Self::zero(n, 1);
        for (i, c) in coeffs.into_iter().enumerate() {
            w.set(vec![i], c);
        }
        w
    }

    fn set(&mut self, index: Vec<usize>, f: SmoothFunction) {
        if f.is_zero() {
            self.components.remove(&index);
        } else {
            self.components.insert(index, f);
        }
    }

    fn accumulate(&mut self, index: Vec<usize>, f: SmoothFunction) {
        let next = match self.components.get(&index) {
            Some(g) => g.add(&f),
            None => f,
        };
        self.set(index, next);
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn components(&self) -> impl Iterator<Item = (&Vec<usize>, &SmoothFunction)> {
        self.components.iter()
    }

    pub fn component(&self, index: &[usize]) -> Option<&SmoothFunction> {
        self.components.get(index)
    }

    /// True when no coefficient is stored (structurally zero).
    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    /// Whether every coefficient is a trigonometric polynomial.
    pub fn is_trig(&self) -> bool {
        self.components.values().all(|f| f.as_trig().is_some())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.n, self.k) != (other.n, other.k) {
            return Err(Error::InvalidArgument(format!(
                "cannot add a {}-form on T^{} to a {}-form on T^{}",
                self.k, self.n, other.k, other.n
            )));
        }
        let mut w = self.clone();
        for (i, f) in &other.components {
            w.accumulate(i.clone(), f.clone());
        }
        Ok(w)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut w = Self::zero(self.n, self.k);
        for (i, f) in &self.components {
            w.set(i.clone(), f.scale(c));
        }
        w
    }

    /// Coefficients at `x`, keyed by multi-index.
    pub fn eval(&self, x: &Point) -> Vec<(Vec<usize>, f64)> {
        self.components.iter().map(|(i, f)| (i.clone(), f.eval(x))).collect()
    }

    /// For a 1-form, the covector `(w_0(x), ..., w_(n-1)(x))`.
    pub fn covector(&self, x: &Point) -> Point {
        let mut c = [0.0; 3];
        for (i, f) in &self.components {
            if let [j] = i.as_slice() {
                c[*j] = f.eval(x);
            }
        }
        c
    }

    /// Coefficient of `dx_1 ^ ... ^ dx_n` for a top-degree form.
    pub fn top_coefficient(&self) -> Result<Option<&SmoothFunction>> {
        if self.k != self.n {
            return Err(Error::NotTopDegree(self.k, self.n));
        }
        Ok(self.components.values().next())
    }

    /// Trig-polynomial coefficients, when every coefficient is one.
    pub fn trig_components(&self) -> Option<Vec<(Vec<usize>, TrigPoly)>> {
        self.components.iter().map(|(i, f)| f.as_trig().map(|p| (i.clone(), p.clone()))).collect()
    }
}

/// `d w`. Exact for polynomial coefficients; other coefficients use the
/// closed-form gradients of their building blocks.
pub fn exterior_derivative(w: &KForm) -> Result<KForm> {
    if w.k >= w.n {
        return Err(Error::TopDegree(w.n));
    }
    let mut out = KForm::zero(w.n, w.k + 1);
    for (index, f) in &w.components {
        for j in 0..w.n {
            if let Some((sign, merged)) = merge_sign(&[j], index) {
                let df = f.partial(j);
                if !df.is_zero() {
                    out.accumulate(merged, df.scale(sign));
                }
            }
        }
    }
    Ok(out)
}

pub fn wedge(a: &KForm, b: &KForm) -> Result<KForm> {
    if a.n != b.n {
        return Err(Error::InvalidArgument(format!("forms live on T^{} and T^{}", a.n, b.n)));
    }
    if a.k + b.k > a.n {
        return Err(Error::DegreeOverflow(a.k, b.k, a.n));
    }
    let mut out = KForm::zero(a.n, a.k + b.k);
    for (i, f) in &a.components {
        for (j, g) in &b.components {
            if let Some((sign, merged)) = merge_sign(i, j) {
                out.accumulate(merged, f.mul(g).scale(sign));
            }
        }
    }
    Ok(out)
}
