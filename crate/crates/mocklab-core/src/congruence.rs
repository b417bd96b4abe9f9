//! p-adic valuations of truncated series and congruence predicates built on
//! them. Everything here is a range-limited certificate: a statement checked
//! for all exponents below the series order, nothing more.

use crate::classical::{partition_series, ramanujan_f_series};
use crate::family::product_series_thm1;
use crate::params::ShadowParams;
use crate::primes::PrimeTools;
use crate::series::{Exp, SeriesError, TruncatedSeries};
use num::bigint::BigInt;
use num::{One, Signed, Zero};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CongruenceError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus exponent must be positive")]
    BadModulusExponent,
    #[error("lattice mismatch: {0} vs {1}")]
    LatticeMismatch(i64, i64),
    #[error("order mismatch: {0} vs {1}")]
    OrderMismatch(Exp, Exp),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Minimum p-adic valuation over the stored coefficients. `value = None`
/// encodes +infinity (no nonzero coefficient below `through_order`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Valuation {
    pub value: Option<i64>,
    pub through_order: Exp,
}

impl Valuation {
    pub fn is_finite(&self) -> bool {
        self.value.is_some()
    }
}

fn int_valuation(x: &BigInt, p: u64) -> i64 {
    debug_assert!(!x.is_zero());
    let p = BigInt::from(p);
    let mut x = x.abs();
    let mut v = 0;
    loop {
        let (q, r) = num::Integer::div_rem(&x, &p);
        if !r.is_zero() {
            return v;
        }
        x = q;
        v += 1;
    }
}

fn ensure_prime(p: u64) -> Result<(), CongruenceError> {
    if PrimeTools::default().is_prime(p) {
        Ok(())
    } else {
        Err(CongruenceError::NotPrime(p))
    }
}

/// nu_p over the coefficients known to `s`. Rational coefficients contribute
/// nu_p(numerator) − nu_p(denominator), so negative values are possible.
pub fn padic_valuation(s: &TruncatedSeries, p: u64) -> Result<Valuation, CongruenceError> {
    ensure_prime(p)?;
    let mut best: Option<i64> = None;
    for (_, c) in s.terms() {
        let v = int_valuation(c.numer(), p) - int_valuation(c.denom(), p);
        best = Some(match best {
            Some(b) => b.min(v),
            None => v,
        });
    }
    Ok(Valuation { value: best, through_order: s.order() })
}

/// Outcome of a congruence test g ≡ h (mod p^m), meaning
/// nu_p(g − h) >= nu_p(g) + m over the shared range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongruenceCheck {
    pub holds: bool,
    pub first_violation: Option<Exp>,
    pub nu_g: Valuation,
    pub nu_diff: Valuation,
    pub modulus_exponent: u32,
}

pub fn congruent_mod(
    g: &TruncatedSeries,
    h: &TruncatedSeries,
    p: u64,
    m: u32,
) -> Result<CongruenceCheck, CongruenceError> {
    ensure_prime(p)?;
    if m == 0 {
        return Err(CongruenceError::BadModulusExponent);
    }
    if g.lattice() != h.lattice() {
        return Err(CongruenceError::LatticeMismatch(g.lattice(), h.lattice()));
    }
    if g.order() != h.order() {
        return Err(CongruenceError::OrderMismatch(g.order(), h.order()));
    }
    let diff = g.sub(h)?;
    let nu_g = padic_valuation(g, p)?;
    let nu_diff = padic_valuation(&diff, p)?;
    let (holds, first_violation) = match nu_g.value {
        // zero g: the bound nu_p(diff) >= +inf forces diff = 0
        None => (diff.is_zero(), diff.terms().next().map(|(e, _)| *e)),
        Some(vg) => {
            let need = vg + m as i64;
            let mut bad = None;
            for (e, c) in diff.terms() {
                if int_valuation(c.numer(), p) - int_valuation(c.denom(), p) < need {
                    bad = Some(*e);
                    break;
                }
            }
            (bad.is_none(), bad)
        }
    };
    Ok(CongruenceCheck { holds, first_violation, nu_g, nu_diff, modulus_exponent: m })
}

/// The third-order series against the partition generating function,
/// mod 2^m, through `order`.
pub fn ramanujan_f_vs_partition(
    order: Exp,
    m: u32,
) -> Result<CongruenceCheck, CongruenceError> {
    let f = ramanujan_f_series(order);
    let p_series = partition_series(order);
    congruent_mod(&f, &p_series, 2, m)
}

/// The product f·Θ for `p` against the partition series mod `pr`, both
/// through `order` on a common lattice. Expected to fail with a witness.
pub fn product_vs_partition(
    p: &ShadowParams,
    order: Exp,
    pr: u64,
) -> Result<CongruenceCheck, CongruenceError> {
    let prod = product_series_thm1(p, order);
    let part = partition_series(order).lift_to_lattice(2)?;
    congruent_mod(&prod, &part, pr, 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionCongruenceReport {
    pub bound: u64,
    pub pass: bool,
    pub first_failure: Option<(u64, u64)>,
}

/// p(5n+4) ≡ 0 (5), p(7n+5) ≡ 0 (7), p(11n+6) ≡ 0 (11) for n <= bound.
/// Coefficients come from the Euler-product inverse, not enumeration.
pub fn verify_partition_congruences(bound: u64) -> PartitionCongruenceReport {
    let order = crate::series::exp_int(11 * bound as i64 + 7);
    let series = partition_series(order);
    let mut first_failure = None;
    'outer: for (step, offset, modulus) in [(5u64, 4u64, 5u64), (7, 5, 7), (11, 6, 11)] {
        for n in 0..=bound {
            let idx = step * n + offset;
            let c = series.coeff_or_zero(crate::series::exp_int(idx as i64));
            debug_assert!(c.denom().is_one());
            let r = c.numer() % BigInt::from(modulus);
            if !r.is_zero() {
                first_failure = Some((modulus, idx));
                break 'outer;
            }
        }
    }
    PartitionCongruenceReport { bound, pass: first_failure.is_none(), first_failure }
}

/// Valuation-driven splitting of H into the designated series plus a
/// correction. When j = nu_p(H) < 0, the scaled correction g = p^{−j}(H − f)
/// satisfies p^{−j}H ≡ g (mod p^{−j}) over the range; that congruence is
/// checked before returning.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub j: Valuation,
    pub correction: TruncatedSeries,
    pub scaled: Option<TruncatedSeries>,
    pub verified: bool,
}

pub fn corollary1_decompose(
    h: &TruncatedSeries,
    f_series: &TruncatedSeries,
    p: u64,
) -> Result<Decomposition, CongruenceError> {
    ensure_prime(p)?;
    let j = padic_valuation(h, p)?;
    let correction = h.sub(f_series)?;
    match j.value {
        Some(jv) if jv < 0 => {
            let scale = num::BigRational::from(BigInt::from(p).pow((-jv) as u32));
            let scaled_h = h.scale(&scale);
            let g = correction.scale(&scale);
            let check = congruent_mod(&scaled_h, &g, p, (-jv) as u32)?;
            Ok(Decomposition { j, correction, scaled: Some(g), verified: check.holds })
        }
        _ => Ok(Decomposition { j, correction, scaled: None, verified: false }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_params;
    use crate::series::{coeff_frac, coeff_int, exp_int, TruncatedSeries};

    fn s_int(terms: &[(i64, i64)], order: i64) -> TruncatedSeries {
        TruncatedSeries::from_terms(
            1,
            exp_int(order),
            terms.iter().map(|(e, c)| (exp_int(*e), coeff_int(*c))),
        )
        .unwrap()
    }

    #[test]
    fn valuation_of_plain_integers() {
        let v = padic_valuation(&s_int(&[(0, 4), (1, 8)], 5), 2).unwrap();
        assert_eq!(v.value, Some(2));
    }

    #[test]
    fn valuation_sees_denominators() {
        let s = TruncatedSeries::from_terms(1, exp_int(5), [(exp_int(1), coeff_frac(1, 3))])
            .unwrap();
        assert_eq!(padic_valuation(&s, 3).unwrap().value, Some(-1));
    }

    #[test]
    fn zero_series_has_infinite_valuation() {
        let z = TruncatedSeries::zero(1, exp_int(4)).unwrap();
        let v = padic_valuation(&z, 7).unwrap();
        assert_eq!(v.value, None);
        assert!(!v.is_finite());
    }

    #[test]
    fn composite_modulus_rejected() {
        let s = s_int(&[(0, 1)], 3);
        assert_eq!(padic_valuation(&s, 6).unwrap_err(), CongruenceError::NotPrime(6));
    }

    #[test]
    fn equal_series_congruent_at_any_strength() {
        let s = s_int(&[(0, 3), (2, -7)], 6);
        for m in 1..5 {
            assert!(congruent_mod(&s, &s, 5, m).unwrap().holds);
        }
    }

    #[test]
    fn congruence_respects_product_valuations() {
        // 3 + 6q vs 3 + 31q: difference -25q, nu_5 = 2 >= 0 + 2
        let g = s_int(&[(0, 3), (1, 6)], 4);
        let h = s_int(&[(0, 3), (1, 31)], 4);
        assert!(congruent_mod(&g, &h, 5, 2).unwrap().holds);
        let c = congruent_mod(&g, &h, 5, 3).unwrap();
        assert!(!c.holds);
        assert_eq!(c.first_violation, Some(exp_int(1)));
    }

    #[test]
    fn third_order_series_matches_partitions_mod_four() {
        let check = ramanujan_f_vs_partition(exp_int(120), 2).unwrap();
        assert!(check.holds, "violation at {:?}", check.first_violation);
    }

    #[test]
    fn third_order_series_breaks_mod_eight_at_two() {
        let check = ramanujan_f_vs_partition(exp_int(120), 3).unwrap();
        assert!(!check.holds);
        assert_eq!(check.first_violation, Some(exp_int(2)));
    }

    #[test]
    fn partition_congruences_small_bound() {
        let rep = verify_partition_congruences(12);
        assert!(rep.pass);
        assert_eq!(rep.first_failure, None);
    }

    #[test]
    fn product_differs_from_partition_series() {
        let p = validate_params(1, 6, 0, 1).unwrap();
        for pr in [3u64, 5, 7] {
            let check = product_vs_partition(&p, exp_int(40), pr).unwrap();
            assert!(!check.holds, "pr={pr}");
            assert!(check.first_violation.is_some());
        }
    }

    #[test]
    fn decompose_constructed_negative_valuation() {
        let f = s_int(&[(0, 1), (1, 2)], 6);
        let mut h = f.clone();
        h.add_term(exp_int(1), coeff_frac(1, 5)).unwrap();
        let d = corollary1_decompose(&h, &f, 5).unwrap();
        assert_eq!(d.j.value, Some(-1));
        assert!(d.verified);
        let g = d.scaled.unwrap();
        assert_eq!(g.coeff_or_zero(exp_int(1)), coeff_int(1));
    }

    #[test]
    fn decompose_nonnegative_valuation_does_not_apply() {
        let f = s_int(&[(0, 1)], 4);
        let h = s_int(&[(0, 1), (2, 10)], 4);
        let d = corollary1_decompose(&h, &f, 5).unwrap();
        assert_eq!(d.j.value, Some(0));
        assert!(d.scaled.is_none());
        assert!(!d.verified);
    }

    #[test]
    fn valuation_multiplicative_on_products() {
        let a = s_int(&[(0, 4), (1, 2)], 9);
        let b = s_int(&[(0, 6), (2, 10)], 9);
        let ab = a.mul(&b).unwrap();
        let va = padic_valuation(&a, 2).unwrap().value.unwrap();
        let vb = padic_valuation(&b, 2).unwrap().value.unwrap();
        let vab = padic_valuation(&ab, 2).unwrap().value.unwrap();
        assert_eq!(vab, va + vb);
    }
}
