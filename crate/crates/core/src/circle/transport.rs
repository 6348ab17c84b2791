use std::sync::Arc;

use super::holonomy::HolonomySystem;
use super::rotation::CircleMap;
use super::transversal::{CantorTransversal, TransversalMeasure};
use crate::error::{Error, Result};
use crate::num::{frac, wrap_half};

/// One affine piece of a transport map.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    src: (f64, f64),
    tgt: (f64, f64),
}

impl Piece {
    fn forward(&self, x: f64) -> f64 {
        affine(self.src, self.tgt, x)
    }
    fn backward(&self, y: f64) -> f64 {
        affine(self.tgt, self.src, y)
    }
}

fn affine(from: (f64, f64), to: (f64, f64), x: f64) -> f64 {
    let w = from.1 - from.0;
    if w == 0.0 {
        return to.0;
    }
    let t = ((x - from.0) / w).clamp(0.0, 1.0);
    to.0 + t * (to.1 - to.0)
}

/// Order-preserving, piecewise-affine, measure-preserving map between two
/// transversals, obtained by matching cumulative measures band by band.
///
/// Both transversals are refined to a common band structure first: the
/// pieces are order-isomorphic and carry equal masses.
#[derive(Debug, Clone)]
pub struct TransportMap {
    pieces: Vec<Piece>,
    masses: Vec<f64>,
}

/// Builds the transport `phi: source -> target`.
pub fn transport_map(
    source: (&CantorTransversal, &TransversalMeasure),
    target: (&CantorTransversal, &TransversalMeasure),
) -> Result<TransportMap> {
    let (st, sm) = source;
    let (tt, tm) = target;
    let (a, b) = (sm.total(), tm.total());
    if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
        return Err(Error::MassMismatch(a, b));
    }
    let mut pieces = Vec::new();
    let mut masses = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    // Mass already consumed inside the current source / target band.
    let (mut used_s, mut used_t) = (0.0f64, 0.0f64);
    let skip = |k: &mut usize, used: &mut f64, m: &TransversalMeasure| {
        while *k < m.weights().len() && m.weight(*k) - *used <= 0.0 {
            *k += 1;
            *used = 0.0;
        }
    };
    loop {
        skip(&mut i, &mut used_s, sm);
        skip(&mut j, &mut used_t, tm);
        if i >= sm.weights().len() || j >= tm.weights().len() {
            break;
        }
        let (ws, wt) = (sm.weight(i), tm.weight(j));
        let (rs, rt) = (ws - used_s, wt - used_t);
        let delta = rs.min(rt);
        let (bs, bt) = (st.bands()[i], tt.bands()[j]);
        let pos = |lo: f64, hi: f64, used: f64, w: f64| lo + (hi - lo) * (used / w);
        let last_s = rs <= rt;
        let last_t = rt <= rs;
        let s0 = pos(bs.lo, bs.hi, used_s, ws);
        let s1 = if last_s { bs.hi } else { pos(bs.lo, bs.hi, used_s + delta, ws) };
        let t0 = pos(bt.lo, bt.hi, used_t, wt);
        let t1 = if last_t { bt.hi } else { pos(bt.lo, bt.hi, used_t + delta, wt) };
        pieces.push(Piece { src: (s0, s1), tgt: (t0, t1) });
        masses.push(delta);
        if last_s {
            i += 1;
            used_s = 0.0;
        } else {
            used_s += delta;
        }
        if last_t {
            j += 1;
            used_t = 0.0;
        } else {
            used_t += delta;
        }
    }
    Ok(TransportMap { pieces, masses })
}

impl TransportMap {
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Masses carried by the common-refinement pieces.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn source_span(&self) -> (f64, f64) {
        (self.pieces[0].src.0, self.pieces[self.pieces.len() - 1].src.1)
    }

    pub fn target_span(&self) -> (f64, f64) {
        (self.pieces[0].tgt.0, self.pieces[self.pieces.len() - 1].tgt.1)
    }

    pub fn apply(&self, x: f64) -> Option<f64> {
        let k = self.pieces.partition_point(|p| p.src.1 < x);
        let p = self.pieces.get(k)?;
        (p.src.0 <= x).then(|| p.forward(x))
    }

    pub fn inverse(&self, y: f64) -> Option<f64> {
        let k = self.pieces.partition_point(|p| p.tgt.1 < y);
        let p = self.pieces.get(k)?;
        (p.tgt.0 <= y).then(|| p.backward(y))
    }

    /// Largest `|source-mass(phi^-1(B)) - target-mass(B)|` over target bands.
    pub fn pushforward_defect(
        &self,
        source: (&CantorTransversal, &TransversalMeasure),
        target: (&CantorTransversal, &TransversalMeasure),
    ) -> f64 {
        let (st, sm) = source;
        let (tt, tm) = target;
        tt.bands()
            .iter()
            .enumerate()
            .filter(|(j, _)| tm.weight(*j) > 0.0)
            .map(|(j, b)| {
                let lo = self.inverse(b.lo).unwrap_or(st.span().0);
                let hi = self.inverse(b.hi).unwrap_or(st.span().1);
                let pulled = sm.cumulative(st, hi) - sm.cumulative(st, lo);
                (pulled - tm.weight(j)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Whether the map is increasing on the piece endpoints.
    pub fn is_monotone(&self) -> bool {
        self.pieces.windows(2).all(|w| w[0].src.1 <= w[1].src.0 && w[0].tgt.1 <= w[1].tgt.0)
            && self.pieces.iter().all(|p| p.src.0 <= p.src.1 && p.tgt.0 <= p.tgt.1)
    }
}

/// `phi^-1 o h2 o phi o h1` on the transversal of `h1`: points whose
/// `h1`-image lies outside the domain of `phi` follow `h1` alone.
pub struct ComposedHolonomy {
    h1: Arc<dyn CircleMap>,
    h2: Arc<dyn CircleMap>,
    phi: TransportMap,
}

impl ComposedHolonomy {
    fn through(&self, y: f64) -> f64 {
        match self.phi.apply(y) {
            Some(z) => {
                let w = if self.h2.is_identity() { z } else { self.h2.apply(z) };
                self.phi.inverse(w).unwrap_or(y)
            }
            None => y,
        }
    }

    fn through_back(&self, y: f64) -> f64 {
        match self.phi.apply(y) {
            Some(z) => {
                let w = if self.h2.is_identity() { z } else { self.h2.inverse(z) };
                self.phi.inverse(w).unwrap_or(y)
            }
            None => y,
        }
    }
}

impl CircleMap for ComposedHolonomy {
    fn lift(&self, x: f64) -> f64 {
        let l = self.h1.lift(x);
        let y = frac(l);
        l + wrap_half(self.through(y) - y)
    }

    fn apply(&self, x: f64) -> f64 {
        frac(self.through(self.h1.apply(x)))
    }

    fn inverse(&self, x: f64) -> f64 {
        self.h1.inverse(self.through_back(x))
    }

    fn is_identity(&self) -> bool {
        self.h1.is_identity() && self.h2.is_identity()
    }
}

/// Holonomy of the glued solenoid: `phi^-1 o h2 o phi o h1`, acting on the
/// transversal of `h1`.
pub fn compose_holonomy(h1: &HolonomySystem, h2: &HolonomySystem, phi: &TransportMap) -> Result<HolonomySystem> {
    if phi.is_empty() {
        return Err(Error::DomainMismatch("transport map is empty".into()));
    }
    let inside = |t: &CantorTransversal, (lo, hi): (f64, f64)| {
        let (a, b) = t.span();
        a <= lo + 1e-12 && hi <= b + 1e-12
    };
    if !inside(&h1.transversal, phi.source_span()) {
        return Err(Error::DomainMismatch("transport source lies outside the first transversal".into()));
    }
    if !inside(&h2.transversal, phi.target_span()) {
        return Err(Error::DomainMismatch("transport target lies outside the second transversal".into()));
    }
    let composed = ComposedHolonomy { h1: h1.map.clone(), h2: h2.map.clone(), phi: phi.clone() };
    Ok(HolonomySystem::new(h1.transversal.clone(), Arc::new(composed), h1.measure.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{invariant_measure, DenjoyMap, GapSchedule, IdentityMap, RotationNumber};

    fn denjoy(rho: f64, depth: usize) -> (DenjoyMap, CantorTransversal, TransversalMeasure) {
        let map = DenjoyMap::build(RotationNumber::new(rho).unwrap(), GapSchedule::inverse_square(256, 0.5).unwrap());
        let t = CantorTransversal::from_denjoy(&map, depth).unwrap();
        let m = invariant_measure(&map, depth).unwrap();
        (map, t, m)
    }

    #[test]
    fn self_transport_is_identity() {
        let (_, t, m) = denjoy(crate::circle::golden_mean(), 32);
        let phi = transport_map((&t, &m), (&t, &m)).unwrap();
        for b in t.bands() {
            for x in [b.lo, b.rep, b.hi] {
                assert!((phi.apply(x).unwrap() - x).abs() < 1e-15);
            }
        }
        assert!(phi.pushforward_defect((&t, &m), (&t, &m)) <= 1e-12);
    }

    #[test]
    fn golden_to_silver_transport() {
        let (_, ta, ma) = denjoy(crate::circle::golden_mean(), 32);
        let (_, tb, mb) = denjoy(2f64.sqrt() - 1.0, 20);
        let mb = mb.scaled(ma.total() / mb.total());
        let phi = transport_map((&ta, &ma), (&tb, &mb)).unwrap();
        assert!(phi.is_monotone());
        assert!(phi.pushforward_defect((&ta, &ma), (&tb, &mb)) <= 1e-12);
        let mc = mb.scaled(0.5);
        assert!(matches!(transport_map((&ta, &ma), (&tb, &mc)), Err(Error::MassMismatch(..))));
    }

    #[test]
    fn composing_with_identity_recovers_h1() {
        let (map, t, m) = denjoy(crate::circle::golden_mean(), 32);
        let h1 = HolonomySystem::new(t.clone(), Arc::new(map.clone()), m.clone());
        let id = HolonomySystem::new(t.clone(), Arc::new(IdentityMap), m.clone());
        let phi = transport_map((&t, &m), (&t, &m)).unwrap();
        let h = compose_holonomy(&h1, &id, &phi).unwrap();
        for b in t.bands() {
            assert!((h.map.apply(b.rep) - map.apply(b.rep)).abs() < 1e-14);
        }
        // h1 = id, phi = id: the composition is h2.
        let h = compose_holonomy(&id, &h1, &phi).unwrap();
        for b in t.bands() {
            assert!((h.map.apply(b.rep) - map.apply(b.rep)).abs() < 1e-14);
        }
    }
}
