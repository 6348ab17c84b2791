use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::dictionary::Dictionary;
use crate::num::sig17;
use crate::{Error, Result};

/// A current restricted to a dictionary: one pairing per entry, plus a mass
/// estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentVector {
    pub dictionary_id: String,
    #[serde(with = "sig17::vec")]
    pub pairings: Vec<f64>,
    #[serde(with = "sig17")]
    pub mass: f64,
}

impl CurrentVector {
    /// Vector with an explicitly known mass (e.g. the geometric mass of a
    /// measured solenoid).
    pub fn new(dict: &Dictionary, pairings: Vec<f64>, mass: f64) -> Result<Self> {
        if pairings.len() != dict.len() {
            return Err(Error::DictionaryMismatch(format!(
                "{} pairings for a dictionary of {} entries",
                pairings.len(),
                dict.len()
            )));
        }
        Ok(Self { dictionary_id: dict.id().to_string(), pairings, mass })
    }

    /// Vector whose mass is the dictionary proxy `max |p_i| / sup|w_i|`.
    pub fn with_proxy_mass(dict: &Dictionary, pairings: Vec<f64>) -> Result<Self> {
        let mass = dict.mass_proxy(&pairings);
        Self::new(dict, pairings, mass)
    }

    pub fn zeros(dict: &Dictionary) -> Self {
        Self { dictionary_id: dict.id().to_string(), pairings: vec![0.0; dict.len()], mass: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.pairings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairings.is_empty()
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.dictionary_id != other.dictionary_id || self.len() != other.len() {
            return Err(Error::DictionaryMismatch(format!(
                "{} ({}) vs {} ({})",
                self.dictionary_id,
                self.len(),
                other.dictionary_id,
                other.len()
            )));
        }
        Ok(())
    }

    /// Entry-wise sum; the mass is the triangle-inequality bound.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self {
            dictionary_id: self.dictionary_id.clone(),
            pairings: self.pairings.iter().zip(&other.pairings).map(|(a, b)| a + b).collect(),
            mass: self.mass + other.mass,
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            dictionary_id: self.dictionary_id.clone(),
            pairings: self.pairings.iter().map(|p| c * p).collect(),
            mass: c.abs() * self.mass,
        }
    }

    /// `|self_i - other_i|` per entry.
    pub fn abs_diff(&self, other: &Self) -> Result<Vec<f64>> {
        self.check(other)?;
        Ok(self.pairings.iter().zip(&other.pairings).map(|(a, b)| (a - b).abs()).collect())
    }

    /// CSV with one row per dictionary entry.
    pub fn to_csv(&self, dict: &Dictionary) -> Result<String> {
        if dict.id() != self.dictionary_id {
            return Err(Error::DictionaryMismatch(format!("{} vs {}", dict.id(), self.dictionary_id)));
        }
        let mut s = String::from("index,flag,label,pairing\n");
        for (i, (p, e)) in self.pairings.iter().zip(dict.entries()).enumerate() {
            writeln!(s, "{i},{},\"{}\",{}", e.flag.as_str(), e.label, sig17::format(*p)).unwrap();
        }
        Ok(s)
    }
}

/// `max_i |a_i - b_i|` over a shared dictionary.
pub fn weak_distance(a: &CurrentVector, b: &CurrentVector) -> Result<f64> {
    Ok(a.abs_diff(b)?.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::dictionary::build_dictionary;
    use rand::{Rng, SeedableRng};

    #[test]
    fn weak_distance_is_a_metric_on_samples() {
        let d = build_dictionary(2, 1, 1).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        let mut random = || {
            let p: Vec<f64> = (0..d.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            CurrentVector::with_proxy_mass(&d, p).unwrap()
        };
        for _ in 0..100 {
            let (a, b, c) = (random(), random(), random());
            assert_eq!(weak_distance(&a, &a).unwrap(), 0.0);
            assert_eq!(weak_distance(&a, &b).unwrap(), weak_distance(&b, &a).unwrap());
            let lhs = weak_distance(&a, &c).unwrap();
            let rhs = weak_distance(&a, &b).unwrap() + weak_distance(&b, &c).unwrap();
            assert!(lhs <= rhs + 1e-15);
        }
    }

    #[test]
    fn mismatched_dictionaries_are_rejected() {
        let d1 = build_dictionary(2, 1, 1).unwrap();
        let d2 = build_dictionary(2, 1, 2).unwrap();
        let a = CurrentVector::zeros(&d1);
        let b = CurrentVector::zeros(&d2);
        assert!(matches!(weak_distance(&a, &b), Err(Error::DictionaryMismatch(_))));
        assert!(CurrentVector::new(&d1, vec![0.0; 3], 0.0).is_err());
    }

    #[test]
    fn csv_and_json_round_trip() {
        let d = build_dictionary(2, 1, 1).unwrap();
        let v = CurrentVector::new(&d, (0..d.len()).map(|i| 0.1 * i as f64 + 1e-17).collect(), 1.0).unwrap();
        let csv = v.to_csv(&d).unwrap();
        assert_eq!(csv.lines().count(), d.len() + 1);
        assert!(csv.starts_with("index,flag,label,pairing"));
        let back: CurrentVector = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
    }
}
