use crate::levelset::ContourFamily;
use crate::suspension::SuspensionSolenoid;
use crate::{Error, Result};

use super::glue::GluedSolenoid;

/// Any solenoid the pipeline hands around.
#[derive(Debug, Clone)]
pub enum SolenoidHandle {
    Suspension(Box<SuspensionSolenoid>),
    LevelSet(ContourFamily),
    Glued(Box<GluedSolenoid>),
}

impl SolenoidHandle {
    pub fn has_trivial_holonomy(&self) -> bool {
        matches!(self, Self::LevelSet(_))
    }
}

/// Splits a solenoid with trivial holonomy into pieces of transversal mass
/// at most `mass_bound`, greedily in leaf order. A value whose leaves do
/// not fit is split by weight across consecutive pieces.
pub fn chunk(solenoid: &SolenoidHandle, mass_bound: f64) -> Result<Vec<ContourFamily>> {
    let SolenoidHandle::LevelSet(family) = solenoid else {
        return Err(Error::CannotChunk);
    };
    if !(mass_bound > 0.0) {
        return Err(Error::InvalidArgument(format!("mass bound must be positive, got {mass_bound}")));
    }
    if family.transversal_mass() <= mass_bound {
        return Ok(vec![family.clone()]);
    }
    let mut out = Vec::new();
    let mut cur = ContourFamily::default();
    let mut room = mass_bound;
    for atom in &family.atoms {
        let n = atom.contours.len() as f64;
        let mut left = atom.weight;
        loop {
            let need = left * n;
            if need <= room * (1.0 + 1e-12) {
                let mut a = atom.clone();
                a.weight = left;
                cur.atoms.push(a);
                room -= need;
                break;
            }
            let take = room / n;
            if take > 0.0 {
                let mut a = atom.clone();
                a.weight = take;
                cur.atoms.push(a);
                left -= take;
            }
            out.push(std::mem::take(&mut cur));
            room = mass_bound;
        }
    }
    if !cur.atoms.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::build_dictionary;
    use crate::levelset::{Contour, LevelAtom};

    fn square(c: [f64; 2], r: f64) -> Contour {
        let p = |x: f64, y: f64| [c[0] + x * r, c[1] + y * r, 0.0];
        Contour { value: 0.0, points: vec![p(-1.0, -1.0), p(1.0, -1.0), p(1.0, 1.0), p(-1.0, 1.0), p(-1.0, -1.0)] }
    }

    fn family() -> ContourFamily {
        let atoms = (0..10)
            .map(|k| LevelAtom {
                value: k as f64,
                weight: 0.1,
                contours: vec![square([0.3 + 0.04 * k as f64, 0.5], 0.1 + 0.01 * k as f64)],
            })
            .collect();
        ContourFamily { atoms }
    }

    #[test]
    fn greedy_split_of_unit_mass() {
        let f = family();
        assert!((f.transversal_mass() - 1.0).abs() < 1e-12);
        let parts = chunk(&SolenoidHandle::LevelSet(f.clone()), 0.3).unwrap();
        assert_eq!(parts.len(), 4);
        assert!(parts.iter().all(|p| p.transversal_mass() <= 0.3 + 1e-12));
        assert!((parts.iter().map(|p| p.transversal_mass()).sum::<f64>() - 1.0).abs() < 1e-12);
        let dict = build_dictionary(2, 1, 2).unwrap();
        let whole = f.current(&dict).unwrap();
        let mut sum = vec![0.0; dict.len()];
        for p in &parts {
            for (s, v) in sum.iter_mut().zip(p.current(&dict).unwrap().pairings) {
                *s += v;
            }
        }
        for (a, b) in sum.iter().zip(&whole.pairings) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn large_bound_gives_one_piece() {
        let parts = chunk(&SolenoidHandle::LevelSet(family()), 5.0).unwrap();
        assert_eq!(parts.len(), 1);
    }

    #[test]
    fn nontrivial_holonomy_cannot_chunk() {
        let s = SuspensionSolenoid::rotation(crate::circle::golden_mean(), 16).unwrap();
        assert!(matches!(chunk(&SolenoidHandle::Suspension(Box::new(s)), 0.1), Err(Error::CannotChunk)));
    }
}
