//! Family parameters (A, B, eps, kappa) with the validity rules that keep
//! every downstream formula pole-free.

use num::integer::gcd;
use num::rational::Ratio;

/// The (A, B) pairs exercised across the cross-check suites; every pair is
/// valid together with either flag value.
pub const PARAM_GRID: [(i64, i64); 7] =
    [(1, 6), (1, 4), (1, 3), (2, 5), (3, 8), (5, 12), (1, 12)];

#[derive(Debug, thiserror::Error, PartialEq, Eq, Clone)]
pub enum ParamError {
    #[error("A and B must be positive, got A={0}, B={1}")]
    Nonpositive(i64, i64),
    #[error("eps and kappa must be 0 or 1, got eps={0}, kappa={1}")]
    BadFlag(i64, i64),
    #[error("A={0} and B={1} must be coprime")]
    NotCoprime(i64, i64),
    #[error("B={1} divides 2A={0}: the second Lambert sum degenerates")]
    DegenerateDenominator(i64, i64),
}

/// Validated (A, B, eps, kappa) tuple. Construction canonicalizes A into
/// 0 < A < B (only A/B mod 1 matters) and rejects the degenerate cases;
/// B* = B/2 for even B and B for odd B, s = B/2 - A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShadowParams {
    a: i64,
    b: i64,
    eps: u8,
    kappa: u8,
}

pub fn validate_params(a: i64, b: i64, eps: i64, kappa: i64) -> Result<ShadowParams, ParamError> {
    if a <= 0 || b <= 0 {
        return Err(ParamError::Nonpositive(a, b));
    }
    if !(0..=1).contains(&eps) || !(0..=1).contains(&kappa) {
        return Err(ParamError::BadFlag(eps, kappa));
    }
    let a_red = a.rem_euclid(b);
    if gcd(a_red, b) != 1 {
        return Err(ParamError::NotCoprime(a, b));
    }
    if (2 * a_red) % b == 0 {
        return Err(ParamError::DegenerateDenominator(2 * a, b));
    }
    Ok(ShadowParams { a: a_red, b, eps: eps as u8, kappa: kappa as u8 })
}

impl ShadowParams {
    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn b(&self) -> i64 {
        self.b
    }

    pub fn eps(&self) -> u8 {
        self.eps
    }

    pub fn kappa(&self) -> u8 {
        self.kappa
    }

    /// B(1/2 + {B/2}): B/2 for even B, B for odd B.
    pub fn b_star(&self) -> Ratio<i64> {
        if self.b % 2 == 0 {
            Ratio::new(self.b, 2)
        } else {
            Ratio::from_integer(self.b)
        }
    }

    /// s = B/2 - A.
    pub fn s(&self) -> Ratio<i64> {
        Ratio::new(self.b, 2) - Ratio::from_integer(self.a)
    }

    pub fn a_over_b(&self) -> Ratio<i64> {
        Ratio::new(self.a, self.b)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "A": self.a,
            "B": self.b,
            "eps": self.eps,
            "kappa": self.kappa,
        })
    }
}

impl std::fmt::Display for ShadowParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(A/B={}/{}, eps={}, kappa={})", self.a, self.b, self.eps, self.kappa)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_reference_parameters() {
        let p = validate_params(1, 6, 0, 1).unwrap();
        assert_eq!(p.b_star(), Ratio::from_integer(3));
        assert_eq!(p.s(), Ratio::from_integer(2));
    }

    #[test]
    fn odd_b_keeps_full_b_star() {
        let p = validate_params(1, 5, 0, 0).unwrap();
        assert_eq!(p.b_star(), Ratio::from_integer(5));
        assert_eq!(p.s(), Ratio::new(3, 2));
    }

    #[test]
    fn rejects_degenerate_denominator() {
        assert_eq!(
            validate_params(1, 2, 0, 0).unwrap_err(),
            ParamError::DegenerateDenominator(2, 2)
        );
    }

    #[test]
    fn rejects_common_factor_and_bad_flags() {
        assert!(matches!(validate_params(2, 6, 0, 0), Err(ParamError::NotCoprime(2, 6))));
        assert!(matches!(validate_params(0, 5, 0, 0), Err(ParamError::Nonpositive(0, 5))));
        assert!(matches!(validate_params(1, 6, 2, 0), Err(ParamError::BadFlag(2, 0))));
        assert!(matches!(validate_params(1, 6, 0, -1), Err(ParamError::BadFlag(0, -1))));
    }

    #[test]
    fn reduces_a_mod_b_explicitly() {
        let p = validate_params(7, 6, 1, 0).unwrap();
        assert_eq!(p.a(), 1);
        assert_eq!(p.b(), 6);
        let q = validate_params(13, 4, 0, 0).unwrap();
        assert_eq!(q.a(), 1);
    }
}
