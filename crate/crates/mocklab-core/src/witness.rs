//! Search engines that exhibit non-vanishing coefficients c(n) at indices of
//! the shape Q·p^m·k, plus the indicator identities those searches lean on.
//!
//! Candidate order is fixed: Q ascending through the sieved list, then k
//! through a priority block {4, 8, 4l, 8l} (odd p) or {1, l, ...} (p = 2)
//! before the general coprime sweep. Chunks of candidates are evaluated in
//! parallel but the reported hit, and every statistic, is what a sequential
//! scan would have produced, so output is identical at any thread count.

use crate::family::{
    coefficient_by_divisor_scan, coefficient_closed_form, product_series_thm1, psi, FamilyError,
};
use crate::params::ShadowParams;
use crate::primes::{primes_upto, FactorError, PrimeTools};
use crate::series::{coeff_int, exp_frac};
use num::integer::gcd;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchStats {
    pub q_tried: u64,
    pub coefficients_evaluated: u64,
    pub skipped_factorizations: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessReport {
    pub params: ShadowParams,
    pub p: u64,
    pub m: u32,
    pub q: u64,
    pub k: u64,
    pub n: u64,
    pub c: i64,
    pub c_mod: u64,
    pub stats: SearchStats,
}

impl WitnessReport {
    /// Fixed-order JSON; the CLI wire format.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"params\":{},\"p\":{},\"m\":{},\"Q\":{},\"k\":{},\"n\":{},\"c\":{},\"c_mod\":{},\"search_stats\":{{\"q_tried\":{},\"coefficients_evaluated\":{},\"skipped_factorizations\":{}}}}}",
            self.params.to_json(),
            self.p,
            self.m,
            self.q,
            self.k,
            self.n,
            self.c,
            self.c_mod,
            self.stats.q_tried,
            self.stats.coefficients_evaluated,
            self.stats.skipped_factorizations
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WitnessError {
    #[error("no witness in the configured ranges ({0:?})")]
    NotFound(SearchStats),
    #[error("{0} must be an odd prime here")]
    OddPrimeRequired(u64),
    #[error("{0} is not prime or out of range")]
    BadPrime(u64),
    #[error("denominator {0} unsupported for this check")]
    UnsupportedDenominator(i64),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

/// Bounds for the (Q, k) sweep. Defaults match the reference search: Q from
/// 10^3 up, first 50 (odd p) or 25 (p = 2) matching primes, k to 10^4.
#[derive(Debug, Clone, Copy)]
pub struct SearchRanges {
    pub q_floor: u64,
    pub q_max: u64,
    pub q_count: usize,
    pub k_max: u64,
}

impl Default for SearchRanges {
    fn default() -> Self {
        Self { q_floor: 1000, q_max: 100_000, q_count: 50, k_max: 10_000 }
    }
}

enum CandOutcome {
    Hit { c: i64, c_mod: u64 },
    Miss,
    Skip,
}

/// Evaluate candidates in fixed chunks; return the sequentially-first hit and
/// the stats a sequential scan would report.
fn scan_candidates<F>(cands: &[u64], stats: &mut SearchStats, eval: F) -> Option<(u64, i64, u64)>
where
    F: Fn(u64) -> CandOutcome + Sync,
{
    for chunk in cands.chunks(64) {
        let results: Vec<CandOutcome> = chunk.par_iter().map(|&k| eval(k)).collect();
        for (k, outcome) in chunk.iter().zip(results) {
            match outcome {
                CandOutcome::Skip => stats.skipped_factorizations += 1,
                CandOutcome::Miss => stats.coefficients_evaluated += 1,
                CandOutcome::Hit { c, c_mod } => {
                    stats.coefficients_evaluated += 1;
                    return Some((*k, c, c_mod));
                }
            }
        }
    }
    None
}

fn small_primes_congruent(pool: &[u64], modulus: i64, residue: i64, skip: u64, count: usize) -> Vec<u64> {
    pool.iter()
        .copied()
        .filter(|&l| l != skip && (l as i64).rem_euclid(modulus) == residue.rem_euclid(modulus))
        .take(count)
        .collect()
}

/// Independent recomputation of c(n): through the Lambert-route series for
/// small n, by trial-division re-enumeration otherwise.
pub fn revalidate_coefficient(p: &ShadowParams, n: u64, c: i64) -> bool {
    if n <= 400 {
        let s = product_series_thm1(p, exp_frac(n as i64 + 2, 2));
        let bs = p.b_star();
        // coefficient of q^{n/2} is (B*/B)·c(n)
        let expected = coeff_int(c) * crate::series::coeff_frac(*bs.numer(), p.b() * *bs.denom());
        s.coeff_or_zero(exp_frac(n as i64, 2)) == expected
    } else {
        coefficient_by_divisor_scan(p, n).c == c
    }
}

/// First (Q, k) with Q ≡ −1 (mod pr), gcd(k, Q·pr) = 1 and
/// c(Q·pr^m·k) ≢ 0 (mod pr).
pub fn find_witness_odd(
    params: &ShadowParams,
    pr: u64,
    m: u32,
    ranges: &SearchRanges,
    tools: &PrimeTools,
) -> Result<WitnessReport, WitnessError> {
    if pr == 2 || !tools.is_prime(pr) {
        return Err(WitnessError::OddPrimeRequired(pr));
    }
    let pool = primes_upto(ranges.q_max);
    let qs: Vec<u64> = pool
        .iter()
        .copied()
        .filter(|&q| q >= ranges.q_floor && q % pr == pr - 1)
        .take(ranges.q_count)
        .collect();
    let ells = small_primes_congruent(&pool, params.b(), params.a(), pr, 3);
    let pm = pr.pow(m);
    let mut stats = SearchStats::default();

    for q in qs {
        stats.q_tried += 1;
        let mut prio: Vec<u64> = vec![4, 8];
        prio.extend(ells.iter().map(|l| 4 * l));
        prio.extend(ells.iter().map(|l| 8 * l));
        let prio_set: Vec<u64> = prio.clone();
        let mut cands: Vec<u64> = Vec::new();
        for k in prio {
            if gcd(k, q * pr) == 1 && !cands.contains(&k) {
                cands.push(k);
            }
        }
        cands.extend(
            (1..=ranges.k_max).filter(|k| gcd(*k, q * pr) == 1 && !prio_set.contains(k)),
        );

        let hit = scan_candidates(&cands, &mut stats, |k| {
            let n = q * pm * k;
            match coefficient_closed_form(params, n, tools) {
                Ok(rec) => {
                    let r = rec.c.rem_euclid(pr as i64) as u64;
                    if r != 0 {
                        CandOutcome::Hit { c: rec.c, c_mod: r }
                    } else {
                        CandOutcome::Miss
                    }
                }
                Err(FamilyError::Factor(FactorError::BudgetExhausted(_))) => CandOutcome::Skip,
                Err(_) => CandOutcome::Skip,
            }
        });
        if let Some((k, c, c_mod)) = hit {
            let n = q * pm * k;
            assert!(revalidate_coefficient(params, n, c), "revalidation failed at n={n}");
            return Ok(WitnessReport { params: *params, p: pr, m, q, k, n, c, c_mod, stats });
        }
    }
    Err(WitnessError::NotFound(stats))
}

/// First (m, Q, k) with m >= 2, Q ≡ ±1 (mod B), k odd coprime to Q and
/// c(Q·2^m·k) ≡ 2 (mod 4).
pub fn find_witness_mod4(
    params: &ShadowParams,
    m_max: u32,
    ranges: &SearchRanges,
    tools: &PrimeTools,
) -> Result<WitnessReport, WitnessError> {
    let b = params.b() as u64;
    let pool = primes_upto(ranges.q_max);
    let qs: Vec<u64> = pool
        .iter()
        .copied()
        .filter(|&q| q >= ranges.q_floor && (q % b == 1 || q % b == b - 1))
        .take(ranges.q_count.min(25))
        .collect();
    let ells = small_primes_congruent(&pool, params.b(), params.a(), 2, 3);
    let mut stats = SearchStats::default();

    for m in 2..=m_max.max(2) {
        for &q in &qs {
            stats.q_tried += 1;
            let prio: Vec<u64> = std::iter::once(1)
                .chain(ells.iter().copied().filter(|l| l % 2 == 1))
                .collect();
            let mut cands: Vec<u64> =
                prio.iter().copied().filter(|&k| gcd(k, 2 * q) == 1).collect();
            cands.extend(
                (1..=ranges.k_max)
                    .step_by(2)
                    .filter(|k| gcd(*k, q) == 1 && !prio.contains(k)),
            );
            cands.truncate(200);

            let hit = scan_candidates(&cands, &mut stats, |k| {
                let n = q * (1u64 << m) * k;
                match coefficient_closed_form(params, n, tools) {
                    Ok(rec) => {
                        if rec.c.rem_euclid(4) == 2 {
                            CandOutcome::Hit { c: rec.c, c_mod: 2 }
                        } else {
                            CandOutcome::Miss
                        }
                    }
                    Err(FamilyError::Factor(FactorError::BudgetExhausted(_))) => CandOutcome::Skip,
                    Err(_) => CandOutcome::Skip,
                }
            });
            if let Some((k, c, c_mod)) = hit {
                let n = q * (1u64 << m) * k;
                assert!(revalidate_coefficient(params, n, c), "revalidation failed at n={n}");
                return Ok(WitnessReport { params: *params, p: 2, m, q, k, n, c, c_mod, stats });
            }
        }
    }
    Err(WitnessError::NotFound(stats))
}

/// Indicator identities at indices 4Q and 8Q for denominators 6 and 10:
/// for B = 6 all four indicators are 1 at every x ∈ {1, Q}; for B = 10 the
/// first three agree and the fourth differs.
pub fn check_psi_lemma(params: &ShadowParams, q: u64) -> Result<bool, WitnessError> {
    let tools = PrimeTools::default();
    if q <= 5 || !tools.is_prime(q) || q % (params.b() as u64) == 0 {
        return Err(WitnessError::BadPrime(q));
    }
    let px = |n: u64, b: i64| psi(params, n, b).map_err(WitnessError::from);
    match params.b() {
        6 => {
            for x in [1, q as i64] {
                let all = [
                    px(4 * q, 2 * x)?,
                    px(4 * q, 4 * x)?,
                    px(8 * q, 2 * x)?,
                    px(8 * q, 8 * x)?,
                ];
                if all != [1, 1, 1, 1] {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        10 => {
            for x in [1, q as i64] {
                let a1 = px(8 * q, 2 * x)?;
                let a2 = px(8 * q, 8 * x)?;
                let a3 = px(4 * q, 2 * x)?;
                let a4 = px(4 * q, 4 * x)?;
                if !(a1 == a2 && a2 == a3 && a3 != a4) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        other => Err(WitnessError::UnsupportedDenominator(other)),
    }
}

/// Weaker indicator bound for any B ≡ 2 (mod 4): among each tested pair of
/// indices at most one indicator fires.
pub fn check_psi_sum_bounds(params: &ShadowParams, q: u64) -> Result<bool, WitnessError> {
    let tools = PrimeTools::default();
    if params.b().rem_euclid(4) != 2 {
        return Err(WitnessError::UnsupportedDenominator(params.b()));
    }
    if q <= 5 || !tools.is_prime(q) || q % (params.b() as u64) == 0 {
        return Err(WitnessError::BadPrime(q));
    }
    let px = |n: u64, b: i64| psi(params, n, b).map_err(WitnessError::from);
    for x in [1, q as i64] {
        let s1 = px(4 * q, 2 * x)? + px(4 * q, 4 * x)?;
        let s2 = px(8 * q, 2 * x)? + px(8 * q, 8 * x)?;
        let s3 = px(4 * q, 4 * x)? + px(8 * q, 8 * x)?;
        if s1 > 1 || s2 > 1 || s3 > 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_params;

    fn params(a: i64, b: i64, e: i64, k: i64) -> ShadowParams {
        validate_params(a, b, e, k).unwrap()
    }

    #[test]
    fn psi_lemma_holds_at_small_primes() {
        for a in [1, 5] {
            let p = params(a, 6, 0, 1);
            for q in [7u64, 11, 13, 97] {
                assert!(check_psi_lemma(&p, q).unwrap(), "B=6 A={a} Q={q}");
            }
        }
        for a in [1, 3, 7, 9] {
            let p = params(a, 10, 0, 0);
            for q in [7u64, 11, 13, 97] {
                assert!(check_psi_lemma(&p, q).unwrap(), "B=10 A={a} Q={q}");
            }
        }
    }

    #[test]
    fn psi_lemma_rejects_bad_inputs() {
        let p = params(1, 6, 0, 1);
        assert!(matches!(check_psi_lemma(&p, 4), Err(WitnessError::BadPrime(4))));
        assert!(matches!(check_psi_lemma(&p, 5), Err(WitnessError::BadPrime(5))));
        let p8 = params(1, 8, 0, 1);
        assert!(matches!(
            check_psi_lemma(&p8, 7),
            Err(WitnessError::UnsupportedDenominator(8))
        ));
    }

    #[test]
    fn psi_sum_bounds_for_larger_even_denominators() {
        for b in [14i64, 18, 22] {
            let p = params(1, b, 0, 0);
            for q in [7u64, 11, 13, 23] {
                if q % (b as u64) == 0 {
                    continue;
                }
                assert!(check_psi_sum_bounds(&p, q).unwrap(), "B={b} Q={q}");
            }
        }
        let p = params(1, 8, 0, 1);
        assert!(matches!(
            check_psi_sum_bounds(&p, 7),
            Err(WitnessError::UnsupportedDenominator(8))
        ));
    }

    #[test]
    fn odd_witness_found_and_revalidated() {
        let p = params(1, 6, 0, 1);
        let tools = PrimeTools::default();
        let rep = find_witness_odd(&p, 3, 1, &SearchRanges::default(), &tools).unwrap();
        assert_eq!(rep.p, 3);
        assert_eq!(rep.m, 1);
        assert_eq!(rep.q % 3, 2);
        assert_eq!(gcd(rep.k, rep.q * 3), 1);
        assert_eq!(rep.n, rep.q * 3 * rep.k);
        assert!(rep.c_mod > 0 && rep.c_mod < 3);
        assert_eq!(rep.c.rem_euclid(3) as u64, rep.c_mod);
    }

    #[test]
    fn odd_witness_rejects_two() {
        let p = params(1, 6, 0, 1);
        let tools = PrimeTools::default();
        assert!(matches!(
            find_witness_odd(&p, 2, 0, &SearchRanges::default(), &tools),
            Err(WitnessError::OddPrimeRequired(2))
        ));
    }

    #[test]
    fn mod4_witness_found_with_constraints() {
        let p = params(1, 6, 0, 1);
        let tools = PrimeTools::default();
        let rep = find_witness_mod4(&p, 8, &SearchRanges::default(), &tools).unwrap();
        assert_eq!(rep.p, 2);
        assert!(rep.m >= 2);
        assert_eq!(rep.c_mod, 2);
        assert_eq!(rep.c.rem_euclid(4), 2);
        assert_eq!(rep.k % 2, 1);
        let b = 6u64;
        assert!(rep.q % b == 1 || rep.q % b == b - 1);
        assert_eq!(rep.n, rep.q * (1 << rep.m) * rep.k);
    }

    #[test]
    fn search_is_deterministic_across_runs() {
        let p = params(2, 5, 1, 0);
        let tools = PrimeTools::default();
        let a = find_witness_odd(&p, 5, 0, &SearchRanges::default(), &tools).unwrap();
        let b = find_witness_odd(&p, 5, 0, &SearchRanges::default(), &tools).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn exhausted_ranges_report_not_found() {
        let p = params(1, 6, 0, 1);
        let tools = PrimeTools::default();
        // no primes at all in [4, 4]
        let ranges = SearchRanges { q_floor: 4, q_max: 4, q_count: 5, k_max: 3 };
        match find_witness_odd(&p, 3, 0, &ranges, &tools) {
            Err(WitnessError::NotFound(stats)) => assert_eq!(stats.q_tried, 0),
            other => panic!("expected not-found, got {other:?}"),
        }
    }

    #[test]
    fn revalidation_routes_agree_small_and_large() {
        let p = params(1, 6, 0, 1);
        let tools = PrimeTools::default();
        for n in [8u64, 76, 396] {
            let c = coefficient_closed_form(&p, n, &tools).unwrap().c;
            assert!(revalidate_coefficient(&p, n, c), "series route n={n}");
            assert!(!revalidate_coefficient(&p, n, c + 1));
        }
        for n in [4040u64, 12108] {
            let c = coefficient_closed_form(&p, n, &tools).unwrap().c;
            assert!(revalidate_coefficient(&p, n, c), "scan route n={n}");
            assert!(!revalidate_coefficient(&p, n, c + 1));
        }
    }

    #[test]
    fn report_json_shape() {
        let p = params(1, 6, 0, 1);
        let rep = WitnessReport {
            params: p,
            p: 3,
            m: 1,
            q: 1009,
            k: 4,
            n: 12108,
            c: 5,
            c_mod: 2,
            stats: SearchStats { q_tried: 1, coefficients_evaluated: 1, skipped_factorizations: 0 },
        };
        assert_eq!(
            rep.to_json(),
            "{\"params\":{\"A\":1,\"B\":6,\"eps\":0,\"kappa\":1},\"p\":3,\"m\":1,\"Q\":1009,\"k\":4,\"n\":12108,\"c\":5,\"c_mod\":2,\"search_stats\":{\"q_tried\":1,\"coefficients_evaluated\":1,\"skipped_factorizations\":0}}"
        );
    }
}
