//! Exact evaluation of the counting bounds and size thresholds.
//!
//! Thresholds with fractional exponents, `|E| ≥ C·q^(a/b)`, are decided by
//! comparing `|E|^b` with `C^b·q^a` in big-rational arithmetic. Floats only
//! appear in the `*_approx` display helpers.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The existential constants `C_d`, `C_k`, `C'_d`; all default to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    #[serde(with = "rational_string")]
    pub c_d: BigRational,
    #[serde(with = "rational_string")]
    pub c_k: BigRational,
    #[serde(with = "rational_string")]
    pub c_prime: BigRational,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c_d: BigRational::one(),
            c_k: BigRational::one(),
            c_prime: BigRational::one(),
        }
    }
}

impl Constants {
    pub fn validate(&self) -> Result<()> {
        for (name, c) in [("c_d", &self.c_d), ("c_k", &self.c_k), ("c_prime", &self.c_prime)] {
            if !c.is_positive() {
                return Err(Error::Invalid(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Parses `"3"`, `"3/4"` or a decimal such as `"0.75"` exactly.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let bad = || Error::Invalid(format!("not a rational number: `{text}`"));
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int_val = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            BigInt::from_str(int).map_err(|_| bad())?
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_val = BigInt::from_str(frac).map_err(|_| bad())?;
        let magnitude = int_val.abs() * &scale + frac_val;
        let num = if negative { -magnitude } else { magnitude };
        return Ok(BigRational::new(num, scale));
    }
    Ok(BigRational::from_integer(BigInt::from_str(text).map_err(|_| bad())?))
}

/// `n` or `n/d` in lowest terms.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub mod rational_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        super::parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

pub mod opt_rational_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&super::format_rational(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigRational>, D::Error> {
        let text: Option<String> = Option::deserialize(d)?;
        text.map(|t| super::parse_rational(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

fn int(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

fn pow(base: u64, e: u64) -> BigRational {
    int(BigInt::from(base).pow(e as u32))
}

fn rpow(base: &BigRational, e: u64) -> BigRational {
    num_traits::pow(base.clone(), e as usize)
}

/// `count ≥ bound`, exactly.
pub fn count_meets(count: u128, bound: &BigRational) -> bool {
    int(count) >= *bound
}

/// `size ≥ c · q^(num/den)`, decided as `size^den ≥ c^den · q^num`.
pub fn meets_power_threshold(size: u64, c: &BigRational, q: u64, num: u64, den: u64) -> bool {
    assert!(den > 0);
    pow(size, den) >= rpow(c, den) * pow(q, num)
}

/// `c · q^(num/den)` as a float, for display only.
pub fn power_threshold_approx(c: &BigRational, q: u64, num: u64, den: u64) -> f64 {
    c.to_f64().unwrap_or(f64::NAN) * (q as f64).powf(num as f64 / den as f64)
}

/// Exponent of the main size threshold, `d − 1/(d−1) = (d² − d − 1)/(d − 1)`, as `(num, den)`.
/// Undefined for `d = 1`.
pub fn main_exponent(d: usize) -> Option<(u64, u64)> {
    if d < 2 {
        return None;
    }
    let d = d as u64;
    Some((d * d - d - 1, d - 1))
}

/// `|E| ≥ C_d · q^(d − 1/(d−1))`.
pub fn main_threshold_met(q: u64, d: usize, size: u64, c_d: &BigRational) -> bool {
    match main_exponent(d) {
        Some((num, den)) => meets_power_threshold(size, c_d, q, num, den),
        None => false,
    }
}

/// `|E| ≥ C_k · q^((d+1)/2)`, the size hypothesis of the k-star lower bound.
pub fn kstar_hypothesis_met(q: u64, d: usize, size: u64, c_k: &BigRational) -> bool {
    meets_power_threshold(size, c_k, q, d as u64 + 1, 2)
}

/// `|E| ≥ C_d · q^(d − 1/2)`, the threshold the bad-star aggregate alone needs.
pub fn final_threshold_met(q: u64, d: usize, size: u64, c_d: &BigRational) -> bool {
    meets_power_threshold(size, c_d, q, 2 * d as u64 - 1, 2)
}

/// `|E|^(k+1) / (2 q^k)`.
pub fn kstar_rhs(q: u64, k: usize, size: u64) -> BigRational {
    pow(size, k as u64 + 1) / (int(2) * pow(q, k as u64))
}

/// `|E|^(d+1) / (3 q^d)`.
pub fn indep_rhs(q: u64, d: usize, size: u64) -> BigRational {
    pow(size, d as u64 + 1) / (int(3) * pow(q, d as u64))
}

/// Exponent `d² − kd − d + k = (d − k)(d − 1)` of the bad-star bound.
pub fn bad_exponent(d: usize, k: usize) -> u64 {
    ((d - k) * (d - 1)) as u64
}

/// `C'_d · |E|^k · q^(d² − kd − d + k)`.
pub fn bad_rhs(q: u64, d: usize, k: usize, size: u64, c_prime: &BigRational) -> BigRational {
    c_prime * pow(size, k as u64) * pow(q, bad_exponent(d, k))
}

/// `(d − 1) · C'_d · |E|^(d−1) · q^(d−1)`.
pub fn aggregate_rhs(q: u64, d: usize, size: u64, c_prime: &BigRational) -> BigRational {
    int(d as u64 - 1) * c_prime * pow(size, d as u64 - 1) * pow(q, d as u64 - 1)
}

/// Every bound at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub q: u64,
    pub d: usize,
    pub k: usize,
    pub size: u64,
    /// `d − 1/(d−1)` as `num/den`; absent for `d = 1`.
    pub main_exponent: Option<String>,
    pub main_threshold_approx: Option<f64>,
    pub main_threshold_met: bool,
    pub kstar_threshold_approx: f64,
    pub kstar_hypothesis_met: bool,
    #[serde(with = "rational_string")]
    pub kstar_rhs: BigRational,
    #[serde(with = "rational_string")]
    pub indep_rhs: BigRational,
    /// Bad-star bound for the requested `k`; absent unless `1 ≤ k ≤ d−1`.
    #[serde(with = "opt_rational_string")]
    pub bad_rhs: Option<BigRational>,
    pub bad_exponent: Option<u64>,
    /// Bad-star bounds for every `k = 1..d−1`.
    pub bad_rhs_by_k: Vec<String>,
    #[serde(with = "opt_rational_string")]
    pub aggregate_rhs: Option<BigRational>,
    /// `aggregate < |E|^(d+1)/(3 q^d)`: the closing inequality of the main argument.
    pub aggregate_below_indep: Option<bool>,
    pub final_threshold_approx: f64,
    pub final_threshold_met: bool,
}

pub fn evaluate_bounds(q: u64, d: usize, k: usize, size: u64, constants: &Constants) -> Result<BoundSet> {
    constants.validate()?;
    if d == 0 || k == 0 {
        return Err(Error::Invalid("d and k must be at least 1".into()));
    }
    let exp = main_exponent(d);
    let indep = indep_rhs(q, d, size);
    let aggregate = (d >= 2).then(|| aggregate_rhs(q, d, size, &constants.c_prime));
    Ok(BoundSet {
        q,
        d,
        k,
        size,
        main_exponent: exp.map(|(n, m)| format_rational(&BigRational::new(n.into(), m.into()))),
        main_threshold_approx: exp.map(|(n, m)| power_threshold_approx(&constants.c_d, q, n, m)),
        main_threshold_met: main_threshold_met(q, d, size, &constants.c_d),
        kstar_threshold_approx: power_threshold_approx(&constants.c_k, q, d as u64 + 1, 2),
        kstar_hypothesis_met: kstar_hypothesis_met(q, d, size, &constants.c_k),
        kstar_rhs: kstar_rhs(q, k, size),
        bad_rhs: (k < d).then(|| bad_rhs(q, d, k, size, &constants.c_prime)),
        bad_exponent: (k < d).then(|| bad_exponent(d, k)),
        bad_rhs_by_k: (1..d)
            .map(|j| format_rational(&bad_rhs(q, d, j, size, &constants.c_prime)))
            .collect(),
        aggregate_below_indep: aggregate.as_ref().map(|a| *a < indep),
        aggregate_rhs: aggregate,
        indep_rhs: indep,
        final_threshold_approx: power_threshold_approx(&constants.c_d, q, 2 * d as u64 - 1, 2),
        final_threshold_met: final_threshold_met(q, d, size, &constants.c_d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(format_rational(&r("6/4")), "3/2");
        assert_eq!(format_rational(&r("0.75")), "3/4");
        assert_eq!(format_rational(&r("-1.5")), "-3/2");
        assert_eq!(format_rational(&r("12")), "12");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.").is_err());
    }

    #[test]
    fn exponents() {
        assert_eq!(main_exponent(3), Some((5, 2)));
        assert_eq!(main_exponent(4), Some((11, 3)));
        assert_eq!(main_exponent(1), None);
        assert_eq!(bad_exponent(3, 2), 2);
        assert_eq!(bad_exponent(4, 1), 9);
        // d² − kd − d + k for a sweep of (d, k)
        for d in 2..8usize {
            for k in 1..d {
                assert_eq!(bad_exponent(d, k) as i64, (d * d) as i64 - (k * d) as i64 - d as i64 + k as i64);
            }
        }
    }

    #[test]
    fn kstar_rhs_value() {
        assert_eq!(kstar_rhs(3, 2, 48), r("6144"));
        assert_eq!(kstar_rhs(5, 3, 125), r("1953125/2"));
        assert_eq!(indep_rhs(5, 3, 125), r("1953125/3"));
    }

    #[test]
    fn thresholds_are_exact() {
        // 13^(5/2) = 609.34…: 609 misses, 610 meets
        let one = BigRational::one();
        assert!(!main_threshold_met(13, 3, 609, &one));
        assert!(main_threshold_met(13, 3, 610, &one));
        // 11^(5/2) = 401.31…
        assert!(!main_threshold_met(11, 3, 401, &one));
        assert!(main_threshold_met(11, 3, 402, &one));
        // perfect powers hit the boundary: 4^(3/2) = 8 exactly (q need not be prime here)
        assert!(meets_power_threshold(8, &one, 4, 3, 2));
        assert!(!meets_power_threshold(7, &one, 4, 3, 2));
        assert!(kstar_hypothesis_met(5, 3, 25, &one));
        assert!(!kstar_hypothesis_met(5, 3, 24, &one));
        assert!(meets_power_threshold(50, &r("2"), 5, 2, 1));
        assert!(!meets_power_threshold(49, &r("2"), 5, 2, 1));
    }

    #[test]
    fn evaluate_bounds_examples() {
        let b = evaluate_bounds(3, 3, 2, 48, &Constants::default()).unwrap();
        assert_eq!(b.main_exponent.as_deref(), Some("5/2"));
        assert_eq!(b.kstar_rhs, r("6144"));
        assert_eq!(b.bad_exponent, Some(2));
        assert_eq!(b.bad_rhs, Some(r(&(48u64 * 48 * 9).to_string())));
        assert_eq!(b.bad_rhs_by_k.len(), 2);
        assert_eq!(b.aggregate_rhs, Some(r(&(2u64 * 48 * 48 * 9).to_string())));

        let bad = Constants {
            c_d: r("0"),
            ..Constants::default()
        };
        assert!(evaluate_bounds(3, 3, 2, 48, &bad).is_err());
        assert!(evaluate_bounds(3, 3, 3, 48, &Constants::default()).unwrap().bad_rhs.is_none());
    }

    #[test]
    fn aggregate_dominated_above_final_threshold() {
        // with unit constants, (d−1)|E|^(d−1) q^(d−1) < |E|^(d+1)/(3q^d) ⇔ |E|² > 3(d−1) q^(2d−1)
        let c = Constants::default();
        for &(q, d) in &[(5u64, 3usize), (7, 3), (5, 4)] {
            let cut = (3.0 * (d as f64 - 1.0) * (q as f64).powi(2 * d as i32 - 1)).sqrt();
            let above = cut.ceil() as u64 + 1;
            let below = cut.floor() as u64 - 1;
            assert_eq!(evaluate_bounds(q, d, 1, above, &c).unwrap().aggregate_below_indep, Some(true));
            assert_eq!(evaluate_bounds(q, d, 1, below, &c).unwrap().aggregate_below_indep, Some(false));
        }
    }
}
