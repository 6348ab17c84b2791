use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::contour::{contour_trace_many, Contour};
use super::field::{CriticalRegion, FieldGrid};
use crate::forms::{CurrentVector, Dictionary};
use crate::num::sig17;
use crate::{par, Result};

/// The contours of one regular value together with its transversal weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelAtom {
    #[serde(with = "sig17")]
    pub value: f64,
    #[serde(with = "sig17")]
    pub weight: f64,
    pub contours: Vec<Contour>,
}

impl LevelAtom {
    pub fn length(&self) -> f64 {
        self.contours.iter().map(Contour::length).sum()
    }
}

/// Solenoid with trivial holonomy made of weighted level sets.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ContourFamily {
    pub atoms: Vec<LevelAtom>,
}

impl ContourFamily {
    /// Traces every value in `weighted` (pairs `[value, weight]`).
    pub fn trace(grid: &FieldGrid, region: &CriticalRegion, weighted: &[[f64; 2]]) -> Result<Self> {
        let values: Vec<f64> = weighted.iter().map(|p| p[0]).collect();
        let traced = contour_trace_many(grid, &values, Some(region))?;
        let atoms =
            weighted.iter().zip(traced).map(|(&[value, weight], contours)| LevelAtom { value, weight, contours }).collect();
        Ok(Self { atoms })
    }

    /// Total transversal mass: each contour is a leaf carrying its value's
    /// weight.
    pub fn transversal_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight * a.contours.len() as f64).sum()
    }

    /// Leaves in order, as `(atom, contour)` indices.
    pub fn leaves(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.atoms.iter().enumerate().flat_map(|(i, a)| (0..a.contours.len()).map(move |j| (i, j)))
    }

    /// Mass of the current, `sum w_j length_j`.
    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight * a.length()).sum()
    }

    /// Unweighted pairings of each atom's level set with every entry.
    pub fn atom_pairings(&self, dict: &Dictionary) -> Result<Vec<Vec<f64>>> {
        let rows = par::map_slice(&self.atoms, |a| {
            let mut out = vec![0.0; dict.len()];
            for c in &a.contours {
                for w in c.points.windows(2) {
                    dict.pair_segment_into(&w[0], &w[1], 1.0, &mut out);
                }
            }
            out
        });
        if self.atoms.is_empty() {
            // Still validates the dictionary degree.
            dict.pair_polyline(&[])?;
        }
        Ok(rows)
    }

    pub fn current(&self, dict: &Dictionary) -> Result<CurrentVector> {
        let rows = self.atom_pairings(dict)?;
        let mut acc = vec![0.0; dict.len()];
        for (a, row) in self.atoms.iter().zip(rows) {
            for (s, v) in acc.iter_mut().zip(row) {
                *s += a.weight * v;
            }
        }
        CurrentVector::new(dict, acc, self.mass())
    }

    /// `sum w_j winding_j`, zero for level sets of a compactly supported
    /// field.
    pub fn homology_class(&self) -> [f64; 2] {
        let mut h = [0.0; 2];
        for a in &self.atoms {
            for c in &a.contours {
                let w = c.winding();
                h[0] += a.weight * w[0] as f64;
                h[1] += a.weight * w[1] as f64;
            }
        }
        h
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for a in &mut out.atoms {
            a.weight *= s;
        }
        out
    }

    /// Plot-ready polylines: one row per vertex.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("value,weight,contour,vertex,x,y\n");
        for a in &self.atoms {
            for (ci, c) in a.contours.iter().enumerate() {
                for (vi, p) in c.points.iter().enumerate() {
                    writeln!(
                        s,
                        "{},{},{ci},{vi},{},{}",
                        sig17::format(a.value),
                        sig17::format(a.weight),
                        sig17::format(p[0]),
                        sig17::format(p[1])
                    )
                    .unwrap();
                }
            }
        }
        s
    }
}
