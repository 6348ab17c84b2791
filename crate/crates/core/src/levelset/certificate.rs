use serde::{Deserialize, Serialize};

use super::contour::contour_trace_many;
use super::family::ContourFamily;
use super::field::{exclusion_from_grid, CriticalRegion, FieldGrid, ScalarFieldBundle, DEFAULT_EXCLUSION_RES};
use crate::forms::{CurrentVector, Dictionary, EntryFlag};
use crate::num::sig17;
use crate::{Error, Result};

/// Midpoint rule on each interval, `cells` nodes in total split in
/// proportion to length (at least one per interval). Pairs `[value, weight]`.
pub fn lebesgue_weights(components: &[[f64; 2]], cells: usize) -> Result<Vec<[f64; 2]>> {
    let total: f64 = components.iter().map(|c| c[1] - c[0]).sum();
    if !(total > 0.0) {
        return Err(Error::EmptyRange);
    }
    let mut out = Vec::new();
    for &[a, b] in components {
        let m = ((cells as f64 * (b - a) / total).round() as usize).max(1);
        let h = (b - a) / m as f64;
        out.extend((0..m).map(|i| [a + (i as f64 + 0.5) * h, h]));
    }
    Ok(out)
}

/// Atomic measure on a middle-portion Cantor set inside each interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorWeights {
    pub depth: usize,
    /// Relative length of the middle portion removed at each step.
    #[serde(with = "sig17")]
    pub removed_fraction: f64,
    /// Pairs `[value, weight]`: cylinder midpoints and the Lebesgue mass of
    /// their cells.
    #[serde(with = "sig17::pairs")]
    pub atoms: Vec<[f64; 2]>,
    /// Exact 1-Wasserstein distance to Lebesgue measure on the intervals.
    #[serde(with = "sig17")]
    pub w1: f64,
}

/// Removes the open middle portion of relative length `eps_measure` from
/// each interval, `ceil(log2(1 / eps_measure))` times. Each depth-`d`
/// cylinder carries the Lebesgue mass of the cell between the midpoints of
/// its neighbours' gaps, placed at the cylinder midpoint.
pub fn cantor_weights(components: &[[f64; 2]], eps_measure: f64) -> Result<CantorWeights> {
    if !(eps_measure > 0.0 && eps_measure < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon_measure must lie in (0, 1), got {eps_measure}")));
    }
    if !(components.iter().map(|c| c[1] - c[0]).sum::<f64>() > 0.0) {
        return Err(Error::EmptyRange);
    }
    let depth = (1.0 / eps_measure).log2().ceil().max(1.0) as usize;
    let mut atoms = Vec::new();
    let mut w1 = 0.0;
    for &[a, b] in components {
        let mut cyl = vec![[a, b]];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(2 * cyl.len());
            for &[l, r] in &cyl {
                let keep = 0.5 * (1.0 - eps_measure) * (r - l);
                next.push([l, l + keep]);
                next.push([r - keep, r]);
            }
            cyl = next;
        }
        let mids: Vec<f64> = cyl.iter().map(|c| 0.5 * (c[0] + c[1])).collect();
        for (k, &p) in mids.iter().enumerate() {
            let lo = if k == 0 { a } else { 0.5 * (cyl[k - 1][1] + cyl[k][0]) };
            let hi = if k + 1 == cyl.len() { b } else { 0.5 * (cyl[k][1] + cyl[k + 1][0]) };
            atoms.push([p, hi - lo]);
            // The monotone coupling sends each cell onto its atom.
            w1 += 0.5 * ((p - lo).powi(2) + (hi - p).powi(2));
        }
    }
    Ok(CantorWeights { depth, removed_fraction: eps_measure, atoms, w1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertificateConfig {
    pub epsilon: f64,
    pub epsilon_measure: f64,
    /// Grid for contours and the direct pairing.
    pub grid_res: usize,
    /// Grid for locating near-critical points.
    pub exclusion_res: usize,
    /// Number of midpoint-rule values for the Lebesgue reference.
    pub lebesgue_values: usize,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self { epsilon: 1e-2, epsilon_measure: 1e-2, grid_res: 256, exclusion_res: DEFAULT_EXCLUSION_RES, lebesgue_values: 400 }
    }
}

impl CertificateConfig {
    /// Halves both tolerances and doubles both grids.
    pub fn refined(&self) -> Self {
        Self {
            epsilon: 0.5 * self.epsilon,
            epsilon_measure: 0.5 * self.epsilon_measure,
            grid_res: 2 * self.grid_res,
            exclusion_res: 2 * self.exclusion_res,
            lebesgue_values: 2 * self.lebesgue_values,
        }
    }
}

/// Per-entry error terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// `eps Vol(supp F) sup|w|`: the near-critical set.
    #[serde(with = "sig17::vec")]
    pub eq1: Vec<f64>,
    /// `C Vol(U)` with `C = sup|w| max length`: regular points over excluded values.
    #[serde(with = "sig17::vec")]
    pub eq2: Vec<f64>,
    /// `Lip W1`: Cantor substitution.
    #[serde(with = "sig17::vec")]
    pub cantor: Vec<f64>,
}

impl Budget {
    pub fn total(&self) -> Vec<f64> {
        (0..self.eq1.len()).map(|i| self.eq1[i] + self.eq2[i] + self.cantor[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub dictionary_id: String,
    pub config: CertificateConfig,
    /// `int dF ^ w` by grid quadrature.
    #[serde(with = "sig17::vec")]
    pub direct: Vec<f64>,
    /// Pairings of the Cantor-weighted level-set solenoid.
    #[serde(with = "sig17::vec")]
    pub solenoid: Vec<f64>,
    /// Pairings with Lebesgue weights on the regular values.
    #[serde(with = "sig17::vec")]
    pub lebesgue: Vec<f64>,
    pub budget: Budget,
    /// `|direct - solenoid|` per entry.
    #[serde(with = "sig17::vec")]
    pub observed: Vec<f64>,
    #[serde(with = "sig17")]
    pub max_observed: f64,
    #[serde(with = "sig17")]
    pub max_budget: f64,
    /// `max |direct - lebesgue|`.
    #[serde(with = "sig17")]
    pub coarea_gap: f64,
    /// `max |solenoid|` over exact entries.
    #[serde(with = "sig17")]
    pub exact_max: f64,
    #[serde(with = "sig17::vec")]
    pub homology: Vec<f64>,
    #[serde(with = "sig17")]
    pub support_volume: f64,
    #[serde(with = "sig17")]
    pub excluded_measure: f64,
    /// Longest level set seen, regular or excluded.
    #[serde(with = "sig17")]
    pub max_length: f64,
    #[serde(with = "sig17::vec")]
    pub lipschitz: Vec<f64>,
    #[serde(with = "sig17")]
    pub w1: f64,
    pub cantor_depth: usize,
    #[serde(with = "sig17")]
    pub transversal_mass: f64,
    pub region: CriticalRegion,
    pub pass: bool,
}

/// Everything the certificate computes, including the traced solenoid.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub report: CertificateReport,
    pub solenoid: ContourFamily,
    pub current: CurrentVector,
}

/// The two samplings a certificate needs: the tracing grid and the finer
/// grid the exclusion set is computed on. Reusable across tolerances.
#[derive(Debug, Clone)]
pub struct CertificateGrids {
    pub grid: FieldGrid,
    pub fine: FieldGrid,
}

impl CertificateGrids {
    pub fn sample(field: &ScalarFieldBundle, config: &CertificateConfig) -> Result<Self> {
        let grid = FieldGrid::sample(field, config.grid_res)?;
        let fine =
            if config.exclusion_res == config.grid_res { grid.clone() } else { FieldGrid::sample(field, config.exclusion_res)? };
        Ok(Self { grid, fine })
    }
}

/// Compares `int dF ^ w` with the current of the Cantor-weighted level-set
/// solenoid of `F` and checks the discrepancy against the error budget.
pub fn lemma_alpha_certificate(field: &ScalarFieldBundle, dict: &Dictionary, config: &CertificateConfig) -> Result<Certificate> {
    check_inputs(dict, config)?;
    let grids = CertificateGrids::sample(field, config)?;
    lemma_alpha_certificate_on(field, &grids, dict, config)
}

fn check_inputs(dict: &Dictionary, config: &CertificateConfig) -> Result<()> {
    if dict.dim() != 2 || dict.form_degree() != 1 {
        return Err(Error::DictionaryMismatch(format!("level-set certificate needs 1-forms on T^2, got {}", dict.id())));
    }
    if !(config.epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", config.epsilon)));
    }
    Ok(())
}

/// [`lemma_alpha_certificate`] on grids sampled beforehand. The grid
/// resolutions in `config` are ignored in favour of those of `grids`.
pub fn lemma_alpha_certificate_on(
    field: &ScalarFieldBundle,
    grids: &CertificateGrids,
    dict: &Dictionary,
    config: &CertificateConfig,
) -> Result<Certificate> {
    check_inputs(dict, config)?;
    let config = &CertificateConfig { grid_res: grids.grid.res, exclusion_res: grids.fine.res, ..*config };
    let grid = &grids.grid;
    let region = exclusion_from_grid(&grids.fine, config.epsilon)?;
    let direct = dict.pair_wedge_samples(grid.res, &grid.grads)?;
    let components = region.regular_components();
    let m = dict.len();
    let sup: Vec<f64> = dict.entries().iter().map(|e| e.sup_norm).collect();
    let support_volume = field.support.volume();
    let excluded_measure = region.measure_in_range();

    let (solenoid, lebesgue, lipschitz, w1, depth, lengths) = if components.is_empty() {
        (ContourFamily::default(), vec![0.0; m], vec![0.0; m], 0.0, 0, Vec::new())
    } else {
        let leb_values = lebesgue_weights(&components, config.lebesgue_values)?;
        let leb = ContourFamily::trace(grid, &region, &leb_values)?;
        let rows = leb.atom_pairings(dict)?;
        let mut lebesgue = vec![0.0; m];
        for (a, row) in leb.atoms.iter().zip(&rows) {
            for (s, v) in lebesgue.iter_mut().zip(row) {
                *s += a.weight * v;
            }
        }
        // Lipschitz constant of c -> <level set c, w>, between neighbouring
        // values of the same component.
        let mut lip = vec![0.0f64; m];
        for k in 1..leb.atoms.len() {
            let (a, b) = (&leb.atoms[k - 1], &leb.atoms[k]);
            let dc = b.value - a.value;
            if (dc - 0.5 * (a.weight + b.weight)).abs() > 1e-9 * dc.abs().max(1e-300) {
                continue;
            }
            for i in 0..m {
                lip[i] = lip[i].max((rows[k][i] - rows[k - 1][i]).abs() / dc);
            }
        }
        let cw = cantor_weights(&components, config.epsilon_measure)?;
        let sol = ContourFamily::trace(grid, &region, &cw.atoms)?;
        let lengths: Vec<f64> = leb.atoms.iter().chain(&sol.atoms).map(|a| a.length()).collect();
        (sol, lebesgue, lip, cw.w1, cw.depth, lengths)
    };
    let current = solenoid.current(dict)?;

    // Level-set lengths over excluded values, for the constant of the
    // second term.
    let [lo, hi] = region.range[0];
    let mut probes: Vec<f64> = region
        .intervals
        .iter()
        .filter(|iv| iv[1] > lo && iv[0] < hi)
        .flat_map(|iv| {
            let (a, b) = (iv[0].max(lo), iv[1].min(hi));
            (1..8).map(move |j| a + (b - a) * j as f64 / 8.0)
        })
        .collect();
    probes.truncate(512);
    let excluded_lengths: Vec<f64> =
        contour_trace_many(grid, &probes, None)?.iter().map(|cs| cs.iter().map(|c| c.length()).sum()).collect();
    let max_length = lengths.iter().chain(&excluded_lengths).fold(0.0f64, |a, &b| a.max(b));

    let budget = Budget {
        eq1: sup.iter().map(|s| config.epsilon * support_volume * s).collect(),
        eq2: sup.iter().map(|s| s * max_length * excluded_measure).collect(),
        cantor: lipschitz.iter().map(|l| l * w1).collect(),
    };
    let total = budget.total();
    let observed: Vec<f64> = direct.iter().zip(&current.pairings).map(|(d, s)| (d - s).abs()).collect();
    let pass = observed.iter().zip(&total).all(|(o, t)| o <= t);
    let coarea_gap = direct.iter().zip(&lebesgue).map(|(d, l)| (d - l).abs()).fold(0.0, f64::max);
    let exact_max = dict.indices_with(EntryFlag::Exact).iter().map(|&i| current.pairings[i].abs()).fold(0.0, f64::max);
    let report = CertificateReport {
        dictionary_id: dict.id().to_string(),
        config: *config,
        max_observed: observed.iter().cloned().fold(0.0, f64::max),
        max_budget: total.iter().cloned().fold(0.0, f64::max),
        direct,
        solenoid: current.pairings.clone(),
        lebesgue,
        budget,
        observed,
        coarea_gap,
        exact_max,
        homology: solenoid.homology_class().to_vec(),
        support_volume,
        excluded_measure,
        max_length,
        lipschitz,
        w1,
        cantor_depth: depth,
        transversal_mass: solenoid.transversal_mass(),
        region,
        pass,
    };
    Ok(Certificate { report, solenoid, current })
}
