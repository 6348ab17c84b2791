//! Numeric helpers shared across modules.

/// Fractional part in `[0, 1)`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Distance on the unit circle `R/Z`.
#[inline]
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = frac(a - b);
    d.min(1.0 - d)
}

/// Shortest representative of `x` modulo 1, in `[-1/2, 1/2]`.
#[inline]
pub fn wrap_half(x: f64) -> f64 {
    x - x.round()
}

/// Serde adapters writing floats as decimal strings with 17 significant
/// digits, which round-trip every `f64` exactly.
pub mod sig17 {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn format(x: f64) -> String {
        format!("{x:.16e}")
    }

    pub fn parse(s: &str) -> Result<f64, std::num::ParseFloatError> {
        s.parse::<f64>()
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(D::Error::custom)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(xs.iter().map(|x| format(*x)))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter().map(|s| parse(s).map_err(D::Error::custom)).collect()
        }
    }

    pub mod vec3 {
        use super::*;

        pub fn serialize<S: Serializer>(x: &[f64; 3], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(x.iter().map(|v| format(*v)))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; 3], D::Error> {
            let v = <[String; 3]>::deserialize(d)?;
            let mut out = [0.0; 3];
            for (o, s) in out.iter_mut().zip(&v) {
                *o = parse(s).map_err(D::Error::custom)?;
            }
            Ok(out)
        }
    }

    pub mod pairs {
        use super::*;

        pub fn serialize<S: Serializer>(xs: &[[f64; 2]], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(xs.iter().map(|p| [format(p[0]), format(p[1])]))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<[f64; 2]>, D::Error> {
            let v = Vec::<[String; 2]>::deserialize(d)?;
            v.iter().map(|p| Ok([parse(&p[0]).map_err(D::Error::custom)?, parse(&p[1]).map_err(D::Error::custom)?])).collect()
        }
    }
}
