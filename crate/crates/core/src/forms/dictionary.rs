use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::function::SmoothFunction;
use super::kform::KForm;
use super::quadrature::{grid_point, subintervals, Curve};
use super::trig::{Monomial, Phase, TrigPoly, TrigTable};
use super::Point;
use crate::{par, Error, Result};

/// Default dictionary degree on `T^2` and `T^3`.
pub fn default_degree(n: usize) -> u32 {
    if n >= 3 {
        2
    } else {
        3
    }
}

/// Grid resolution used to estimate entry sup norms.
const SUP_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryFlag {
    Closed,
    Exact,
    General,
}

impl EntryFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            EntryFlag::Closed => "closed",
            EntryFlag::Exact => "exact",
            EntryFlag::General => "general",
        }
    }
}

/// Form with trigonometric-polynomial coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigForm {
    pub n: usize,
    pub k: usize,
    pub components: BTreeMap<String, TrigPoly>,
}

fn index_key(index: &[usize]) -> String {
    index.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_key(key: &str) -> Vec<usize> {
    if key.is_empty() {
        return Vec::new();
    }
    key.split(',').map(|s| s.parse().expect("multi-index key")).collect()
}

impl TrigForm {
    pub fn from_kform(w: &KForm) -> Option<Self> {
        let comps = w.trig_components()?;
        Some(Self { n: w.dim(), k: w.degree(), components: comps.into_iter().map(|(i, p)| (index_key(&i), p)).collect() })
    }

    pub fn to_kform(&self) -> KForm {
        let mut w = KForm::zero(self.n, self.k);
        for (key, p) in &self.components {
            let f: SmoothFunction = p.clone().into();
            w = w.add(&KForm::monomial(self.n, &parse_key(key), f).expect("valid index")).expect("same degree");
        }
        w
    }

    pub fn components(&self) -> impl Iterator<Item = (Vec<usize>, &TrigPoly)> {
        self.components.iter().map(|(k, p)| (parse_key(k), p))
    }

    pub fn is_zero(&self) -> bool {
        self.components.values().all(|p| p.is_zero())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DictEntry {
    pub label: String,
    pub flag: EntryFlag,
    pub form: TrigForm,
    /// For exact entries, a form whose exterior derivative is `form`.
    pub primitive: Option<TrigForm>,
    /// Grid estimate of `sup |form|` (Euclidean norm of the coefficients).
    pub sup_norm: f64,
    /// Grid estimate of `sup |d form|`.
    pub sup_d: f64,
}

/// Flat list of `(axis, monomial slot, coefficient)` terms of 1-form entries.
#[derive(Debug, Clone, Default)]
struct Compiled {
    monomials: Vec<Monomial>,
    terms: Vec<Vec<(usize, usize, f64)>>,
    kmax: usize,
}

/// Ordered battery of trig-monomial test forms of one degree on `T^n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "DictionaryData", into = "DictionaryData")]
pub struct Dictionary {
    id: String,
    n: usize,
    k: usize,
    degree: u32,
    entries: Vec<DictEntry>,
    compiled: Compiled,
}

#[derive(Serialize, Deserialize)]
struct DictionaryData {
    id: String,
    n: usize,
    k: usize,
    degree: u32,
    entries: Vec<DictEntry>,
}

impl From<DictionaryData> for Dictionary {
    fn from(d: DictionaryData) -> Self {
        Dictionary::from_entries(d.n, d.k, d.degree, d.entries)
    }
}

impl From<Dictionary> for DictionaryData {
    fn from(d: Dictionary) -> Self {
        DictionaryData { id: d.id, n: d.n, k: d.k, degree: d.degree, entries: d.entries }
    }
}

/// Non-constant trig monomials on `T^n` of total degree at most `degree`,
/// ordered by degree.
pub fn monomials(n: usize, degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    for total in 1..=degree {
        let mut freqs = Vec::new();
        collect_freqs(n, total, &mut vec![], &mut freqs);
        for f in freqs {
            let nonzero: Vec<usize> = (0..n).filter(|&j| f[j] > 0).collect();
            for mask in 0..(1u32 << nonzero.len()) {
                let mut spec = vec![(0u32, Phase::Cos); n];
                for (b, &j) in nonzero.iter().enumerate() {
                    let phase = if mask >> b & 1 == 1 { Phase::Sin } else { Phase::Cos };
                    spec[j] = (f[j], phase);
                }
                out.push(Monomial::new(&spec));
            }
        }
    }
    out
}

fn collect_freqs(n: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() == n - 1 {
        let used: u32 = prefix.iter().sum();
        let mut f = prefix.clone();
        f.push(total - used);
        out.push(f);
        return;
    }
    let used: u32 = prefix.iter().sum();
    for k in (0..=total - used).rev() {
        prefix.push(k);
        collect_freqs(n, total, prefix, out);
        prefix.pop();
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0..(1u32 << n) {
        if mask.count_ones() as usize == k {
            out.push((0..n).filter(|&j| mask >> j & 1 == 1).collect());
        }
    }
    out.sort();
    out
}

fn basis_label(index: &[usize]) -> String {
    let names = ["dx", "dy", "dz"];
    index.iter().map(|&i| names[i]).collect::<Vec<_>>().join("^")
}

/// Exact exterior derivative of a trig form.
pub fn trig_d(w: &TrigForm) -> TrigForm {
    let d = super::kform::exterior_derivative(&w.to_kform()).expect("degree below top");
    TrigForm::from_kform(&d).expect("trig coefficients stay trig")
}

/// Builds the dictionary: the closed basis forms `dx_I`, the general forms
/// `g dx_I` for every non-constant monomial `g` of degree at most `degree`,
/// and the exact forms `d(g dx_J)` (primitive stored) that are nonzero.
pub fn build_dictionary(n: usize, k: usize, degree: u32) -> Result<Dictionary> {
    if !(1..=3).contains(&n) || k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("no dictionary for k = {k} on T^{n}")));
    }
    let monos = monomials(n, degree);
    let mut entries = Vec::new();
    let one = |i: &[usize], p: TrigPoly| {
        let mut components = BTreeMap::new();
        components.insert(index_key(i), p);
        TrigForm { n, k: i.len(), components }
    };
    for i in subsets(n, k) {
        entries.push(raw_entry(basis_label(&i), EntryFlag::Closed, one(&i, TrigPoly::constant(n, 1.0)), None));
    }
    for m in &monos {
        for i in subsets(n, k) {
            let label = format!("{} {}", m.label(n), basis_label(&i));
            entries.push(raw_entry(label, EntryFlag::General, one(&i, TrigPoly::monomial(n, *m, 1.0)), None));
        }
    }
    for m in &monos {
        for j in subsets(n, k - 1) {
            let prim = one(&j, TrigPoly::monomial(n, *m, 1.0));
            let form = trig_d(&prim);
            if form.is_zero() {
                continue;
            }
            let label =
                if j.is_empty() { format!("d[{}]", m.label(n)) } else { format!("d[{} {}]", m.label(n), basis_label(&j)) };
            entries.push(raw_entry(label, EntryFlag::Exact, form, Some(prim)));
        }
    }
    let entries = par::map_slice(&entries, |e| with_norms(e.clone()));
    Ok(Dictionary::from_entries(n, k, degree, entries))
}

fn raw_entry(label: String, flag: EntryFlag, form: TrigForm, primitive: Option<TrigForm>) -> DictEntry {
    DictEntry { label, flag, form, primitive, sup_norm: 0.0, sup_d: 0.0 }
}

fn with_norms(mut e: DictEntry) -> DictEntry {
    let n = e.form.n;
    let d = if e.form.k < n && e.flag == EntryFlag::General { Some(trig_d(&e.form)) } else { None };
    let count = SUP_GRID.pow(n as u32);
    let (mut sup, mut sup_d) = (0.0f64, 0.0f64);
    for idx in 0..count {
        let x = grid_point(idx, SUP_GRID, n);
        let s: f64 = e.form.components.values().map(|p| p.eval(&x).powi(2)).sum();
        sup = sup.max(s.sqrt());
        if let Some(d) = &d {
            let s: f64 = d.components.values().map(|p| p.eval(&x).powi(2)).sum();
            sup_d = sup_d.max(s.sqrt());
        }
    }
    e.sup_norm = sup;
    e.sup_d = sup_d;
    e
}

impl Dictionary {
    fn from_entries(n: usize, k: usize, degree: u32, entries: Vec<DictEntry>) -> Self {
        let mut d = Self { id: format!("T{n}-k{k}-D{degree}"), n, k, degree, entries, compiled: Compiled::default() };
        d.compile();
        d
    }

    fn compile(&mut self) {
        if self.k != 1 {
            return;
        }
        let mut slots: BTreeMap<Monomial, usize> = BTreeMap::new();
        let mut monomials = Vec::new();
        let mut terms = Vec::with_capacity(self.entries.len());
        let mut kmax = 0;
        for e in &self.entries {
            let mut t = Vec::new();
            for (index, p) in e.form.components() {
                for (m, c) in p.terms() {
                    let slot = *slots.entry(*m).or_insert_with(|| {
                        monomials.push(*m);
                        monomials.len() - 1
                    });
                    kmax = kmax.max(m.max_freq() as usize);
                    t.push((index[0], slot, *c));
                }
            }
            terms.push(t);
        }
        self.compiled = Compiled { monomials, terms, kmax };
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn form_degree(&self) -> usize {
        self.k
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[DictEntry] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &DictEntry {
        &self.entries[i]
    }

    /// Index of the closed basis form `dx_j` (1-form dictionaries).
    pub fn basis_index(&self, j: usize) -> Option<usize> {
        let key = j.to_string();
        self.entries
            .iter()
            .position(|e| e.flag == EntryFlag::Closed && e.form.components.len() == 1 && e.form.components.contains_key(&key))
    }

    pub fn indices_with(&self, flag: EntryFlag) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.entries[i].flag == flag).collect()
    }

    fn require_one_forms(&self) -> Result<()> {
        if self.k != 1 {
            return Err(Error::InvalidArgument(format!("curve pairing needs 1-forms, dictionary has degree {}", self.k)));
        }
        Ok(())
    }

    fn table(&self) -> TrigTable {
        TrigTable::new(self.compiled.kmax.max(1))
    }

    /// Adds `weight * <entry(x), v>` to `out[e]` for every entry; `table`
    /// must already hold the trig values at `x`.
    fn accumulate(&self, table: &TrigTable, v: &Point, weight: f64, mvals: &mut Vec<f64>, out: &mut [f64]) {
        mvals.clear();
        mvals.extend(self.compiled.monomials.iter().map(|m| m.eval_table(table)));
        for (o, terms) in out.iter_mut().zip(&self.compiled.terms) {
            let mut s = 0.0;
            for &(axis, slot, c) in terms {
                s += c * mvals[slot] * v[axis];
            }
            *o += weight * s;
        }
    }

    /// Line integrals of every entry along the straight segment `a -> b`,
    /// in closed form, added to `out` with factor `weight`.
    pub fn pair_segment_into(&self, a: &Point, b: &Point, weight: f64, out: &mut [f64]) {
        let v = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        if v == [0.0; 3] {
            return;
        }
        let means: Vec<f64> = self.compiled.monomials.iter().map(|m| m.segment_mean(a, &v)).collect();
        for (o, terms) in out.iter_mut().zip(&self.compiled.terms) {
            let mut s = 0.0;
            for &(axis, slot, c) in terms {
                s += c * means[slot] * v[axis];
            }
            *o += weight * s;
        }
    }

    /// Line integrals of every entry along a polygonal path, in closed form.
    pub fn pair_polyline(&self, points: &[Point]) -> Result<Vec<f64>> {
        self.require_one_forms()?;
        let mut out = vec![0.0; self.len()];
        for w in points.windows(2) {
            self.pair_segment_into(&w[0], &w[1], 1.0, &mut out);
        }
        Ok(out)
    }

    /// Line integrals of every entry along a general curve.
    pub fn pair_curve(&self, curve: &dyn Curve, res: usize) -> Result<Vec<f64>> {
        self.require_one_forms()?;
        let mut out = vec![0.0; self.len()];
        let mut table = self.table();
        let mut mvals = Vec::new();
        for piece in curve.breakpoints().windows(2) {
            let (a, b) = (piece[0], piece[1]);
            if b <= a {
                continue;
            }
            let m = subintervals(curve.piece_length(a, b), res);
            let h = (b - a) / m as f64;
            let eps = h * 1e-9;
            for i in 0..=m {
                let t = (a + i as f64 * h).clamp(a + eps, b - eps);
                let x = curve.point(t);
                table.fill(&x, self.n);
                let w = if i == 0 || i == m { 0.5 * h } else { h };
                self.accumulate(&table, &curve.velocity(t), w, &mut mvals, &mut out);
            }
        }
        Ok(out)
    }

    /// `int_{T^2} alpha ^ w` for every entry `w`, where `alpha` is a 1-form
    /// given by its covector samples on the uniform `res x res` grid (first
    /// axis fastest).
    pub fn pair_wedge_samples(&self, res: usize, alpha: &[Point]) -> Result<Vec<f64>> {
        self.require_one_forms()?;
        if self.n != 2 || alpha.len() != res * res {
            return Err(Error::InvalidArgument("wedge pairing needs a 1-form grid on T^2".into()));
        }
        let rows = par::map_range(res, |r| {
            let mut out = vec![0.0; self.len()];
            let mut table = self.table();
            let mut mvals = Vec::new();
            for c in 0..res {
                let idx = r * res + c;
                let a = alpha[idx];
                if a[0] == 0.0 && a[1] == 0.0 {
                    continue;
                }
                table.fill(&grid_point(idx, res, 2), 2);
                // alpha ^ w = (a_x w_y - a_y w_x) dx ^ dy = <w, (-a_y, a_x)>
                self.accumulate(&table, &[-a[1], a[0], 0.0], 1.0, &mut mvals, &mut out);
            }
            out
        });
        let mut acc = vec![0.0; self.len()];
        for row in rows {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        let cell = 1.0 / (res * res) as f64;
        Ok(acc.into_iter().map(|v| v * cell).collect())
    }

    /// [`Dictionary::pair_wedge_samples`] with `alpha` evaluated by a closure.
    pub fn pair_wedge<F>(&self, res: usize, alpha: F) -> Result<Vec<f64>>
    where
        F: Fn(&Point) -> Point + Sync + Send,
    {
        let samples = par::map_range(res * res, |i| alpha(&grid_point(i, res, 2)));
        self.pair_wedge_samples(res, &samples)
    }

    /// `max_i |pairings_i| / sup|entry_i|`, a lower proxy for the comass
    /// norm of the current.
    pub fn mass_proxy(&self, pairings: &[f64]) -> f64 {
        pairings
            .iter()
            .zip(&self.entries)
            .filter(|(_, e)| e.sup_norm > 0.0)
            .map(|(p, e)| p.abs() / e.sup_norm)
            .fold(0.0, f64::max)
    }
}
