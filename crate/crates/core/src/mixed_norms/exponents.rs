use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A pair of mixed-norm exponents `(p, q)` in `[1, ∞]`.
///
/// `p` acts on the first (time) axis, `q` on the remaining `d` axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExponents")]
pub struct MixedExponents {
    #[serde(with = "exponent_value")]
    p: f64,
    #[serde(with = "exponent_value")]
    q: f64,
}

#[derive(Deserialize)]
struct RawExponents {
    #[serde(with = "exponent_value")]
    p: f64,
    #[serde(with = "exponent_value")]
    q: f64,
}

impl TryFrom<RawExponents> for MixedExponents {
    type Error = Error;

    fn try_from(raw: RawExponents) -> Result<Self> {
        Self::new(raw.p, raw.q)
    }
}

/// Serde for one exponent: finite values as numbers, `∞` as `"inf"`, so
/// documents stay valid JSON. Strings go through [`parse_exponent`].
pub mod exponent_value {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => super::parse_exponent(&t).map_err(serde::de::Error::custom),
        }
    }
}

impl MixedExponents {
    pub const INF: f64 = f64::INFINITY;

    pub fn new(p: f64, q: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q)] {
            if v.is_nan() || v < 1.0 {
                return Err(Error::BadParams(format!("exponent {name} = {v} must lie in [1, inf]")));
            }
        }
        Ok(Self { p, q })
    }

    /// Panicking constructor for literals in tests and corpus code.
    pub fn of(p: f64, q: f64) -> Self {
        Self::new(p, q).expect("exponents in [1, inf]")
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p_conjugate(&self) -> f64 {
        conjugate(self.p)
    }

    pub fn q_conjugate(&self) -> f64 {
        conjugate(self.q)
    }

    pub fn conjugates(&self) -> MixedExponents {
        MixedExponents {
            p: self.p_conjugate(),
            q: self.q_conjugate(),
        }
    }
}

/// Hölder conjugate with the `1 <-> ∞` convention.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Parses `"inf"`, `"∞"` or a decimal.
pub fn parse_exponent(s: &str) -> Result<f64> {
    let t = s.trim().to_ascii_lowercase();
    let v = match t.as_str() {
        "inf" | "infinity" | "∞" => f64::INFINITY,
        _ => t
            .parse::<f64>()
            .map_err(|_| Error::BadParams(format!("cannot parse exponent `{s}`")))?,
    };
    if v.is_nan() || v < 1.0 {
        return Err(Error::BadParams(format!("exponent {v} must lie in [1, inf]")));
    }
    Ok(v)
}

/// Accumulates an `l^p` norm of nonnegative terms with max-scaling.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PowerSum {
    p: f64,
    scale: f64,
    sum: f64,
}

impl PowerSum {
    pub fn new(p: f64) -> Self {
        Self { p, scale: 0.0, sum: 0.0 }
    }

    /// Adds `weight * x^p` (or takes the max when `p = ∞`; weight is ignored there).
    pub fn push(&mut self, x: f64, weight: f64) {
        debug_assert!(x >= 0.0);
        if self.p.is_infinite() {
            if x > self.scale {
                self.scale = x;
            }
            return;
        }
        if x == 0.0 {
            return;
        }
        if x > self.scale {
            if self.scale > 0.0 {
                self.sum *= (self.scale / x).powf(self.p);
            }
            self.scale = x;
        }
        self.sum += weight * (x / self.scale).powf(self.p);
    }

    pub fn finish(self) -> f64 {
        if self.p.is_infinite() {
            self.scale
        } else if self.scale == 0.0 {
            0.0
        } else {
            self.scale * self.sum.powf(1.0 / self.p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_exponents_round_trip_through_json() {
        let e = MixedExponents::of(1.5, f64::INFINITY);
        let text = serde_json::to_string(&e).unwrap();
        assert_eq!(text, r#"{"p":1.5,"q":"inf"}"#);
        assert_eq!(serde_json::from_str::<MixedExponents>(&text).unwrap(), e);
        assert!(serde_json::from_str::<MixedExponents>(r#"{"p":0.5,"q":2}"#).is_err());
    }

    #[test]
    fn conjugates_follow_holder() {
        let e = MixedExponents::of(1.0, 2.0);
        assert!(e.p_conjugate().is_infinite());
        assert_eq!(e.q_conjugate(), 2.0);
        let e = MixedExponents::of(f64::INFINITY, 3.0);
        assert_eq!(e.p_conjugate(), 1.0);
        assert!((1.0 / 3.0 + 1.0 / e.q_conjugate() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_subunit_exponents() {
        assert!(MixedExponents::new(0.5, 2.0).is_err());
        assert!(MixedExponents::new(2.0, f64::NAN).is_err());
        assert!(parse_exponent("0.9").is_err());
        assert!(parse_exponent("inf").unwrap().is_infinite());
    }

    #[test]
    fn power_sum_scaling_is_stable() {
        let mut s = PowerSum::new(2.0);
        for x in [3.0, 4.0] {
            s.push(x, 1.0);
        }
        assert!((s.finish() - 5.0).abs() < 1e-14);

        let mut s = PowerSum::new(50.0);
        s.push(1e300, 1.0);
        s.push(1e300, 1.0);
        assert!((s.finish() / 1e300 - 2f64.powf(1.0 / 50.0)).abs() < 1e-12);
    }
}
