//! The two-parameter series family and its two expansion routes.
//!
//! `product_series_thm1` builds the product f·Θ from Lambert-type sums plus an
//! E2 correction; `product_series_closed` rebuilds it coefficient by
//! coefficient from signed divisor pairs. The two routes share no code paths
//! past the series type, which is what makes their termwise agreement a real
//! check.

use crate::classical::eisenstein_e2;
use crate::params::ShadowParams;
use crate::primes::{FactorError, PrimeTools};
use crate::series::{coeff_frac, coeff_int, exp_frac, exp_int, Coeff, Exp, SeriesError, TruncatedSeries, geometric_expand};
use num::One;

#[derive(Debug, thiserror::Error)]
pub enum FamilyError {
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("{b} does not divide {n}")]
    NotADivisor { n: u64, b: i64 },
}

/// A factored index pair (a, b) with a·b = n and b + B·a ≡ 2A (mod 2B).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DivisorPair {
    pub a: i64,
    pub b: i64,
}

/// One coefficient of the product series in the normalization
/// f·Θ = B*/(12B) + (B*/B)·Σ_{n≥1} c(n) q^{n/2}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientRecord {
    pub n: u64,
    pub divisor_part: i64,
    pub sigma_part: i64,
    pub c: i64,
    pub pairs: Vec<DivisorPair>,
}

impl CoefficientRecord {
    /// JSON with a fixed field order; this is the CLI wire format.
    pub fn to_json(&self) -> String {
        let pairs = self
            .pairs
            .iter()
            .map(|p| format!("[{},{}]", p.a, p.b))
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "{{\"n\":{},\"divisor_part\":{},\"sigma_part\":{},\"c\":{},\"pairs\":[{}]}}",
            self.n, self.divisor_part, self.sigma_part, self.c, pairs
        )
    }
}

/// Unary theta attached to the params, evaluated at Bτ:
/// (B*)^κ Σ_m (−1)^{εm} (m + A/B)^κ q^{B(m+A/B)²}, exponents on lattice B.
///
/// The sign convention takes the parity of the integer offset m.
pub fn theta_unary_btau(p: &ShadowParams, order: Exp) -> TruncatedSeries {
    let b = p.b();
    let mut s = TruncatedSeries::zero(b, order).expect("positive lattice");
    // exponent at offset m is B(m + A/B)^2 >= B(|m|-1)^2, so scan until that
    // floor clears the order
    let mut m_lim: i64 = 1;
    while exp_int(b * (m_lim - 1) * (m_lim - 1)) < order {
        m_lim += 1;
    }
    let bs = p.b_star();
    for m in -m_lim..=m_lim {
        let e = exp_frac(b * m * m + 2 * p.a() * m, 1) + exp_frac(p.a() * p.a(), b);
        if e >= order {
            continue;
        }
        let mut c = if p.eps() == 1 && m.rem_euclid(2) == 1 {
            -Coeff::one()
        } else {
            Coeff::one()
        };
        if p.kappa() == 1 {
            let weight = coeff_frac(*bs.numer(), *bs.denom())
                * (coeff_int(m) + coeff_frac(p.a(), b));
            c *= weight;
        }
        s.add_term(e, c).expect("on lattice");
    }
    s
}

/// Smallest t with B((t-1)² - 1)/2 >= Ω; every Lambert term with |n| > t has
/// its lowest expanded exponent at or beyond Ω in both sums.
fn lambert_index_bound(b: i64, order: Exp) -> i64 {
    let mut t: i64 = 1;
    while exp_frac(b * ((t - 1) * (t - 1) - 1), 2) < order {
        t += 1;
    }
    t
}

/// Product f·Θ via the Lambert-sum route, with `margin` extra indices past the
/// analytic cutoff. The margin must not change the result; a test insists.
pub fn product_series_thm1_with_margin(
    p: &ShadowParams,
    order: Exp,
    margin: i64,
) -> TruncatedSeries {
    let (a, b) = (p.a(), p.b());
    let n_lim = lambert_index_bound(b, order) + 2 + margin.max(0);
    let mut acc = TruncatedSeries::zero(2, order).expect("positive lattice");

    // sum one: n q^{(Bn^2+2An)/2} / (1 - q^{Bn}) over n != 0
    for n in -n_lim..=n_lim {
        if n == 0 {
            continue;
        }
        let sign = eps_sign(p.eps(), n);
        let c = coeff_int(sign * n);
        let h = exp_frac(b * n * n + 2 * a * n, 2);
        let k = exp_int(b * n);
        let g = geometric_expand(&c, h, k, order, 2).expect("k nonzero");
        acc = acc.add(&g).expect("same lattice");
    }

    // sum two: (n - 2A/B) q^{(Bn^2-2An)/2} / (1 - q^{Bn-2A}) over all n,
    // weighted by (-1)^kappa; the denominator exponent Bn-2A is never zero
    // because B does not divide 2A
    let kappa_sign = if p.kappa() == 1 { -1 } else { 1 };
    for n in -n_lim..=n_lim {
        let sign = eps_sign(p.eps(), n) * kappa_sign;
        let c = coeff_frac(sign * (b * n - 2 * a), b);
        let h = exp_frac(b * n * n - 2 * a * n, 2);
        let k = b * n - 2 * a;
        let head = if k > 0 { h } else { h + exp_int(-k) };
        if head >= order {
            continue;
        }
        let g = geometric_expand(&c, h, exp_int(k), order, 2).expect("k nonzero");
        acc = acc.add(&g).expect("same lattice");
    }

    // E2 / 12B on integer exponents
    let e2 = eisenstein_e2(order)
        .scale(&coeff_frac(1, 12 * b))
        .lift_to_lattice(2)
        .expect("1 divides 2");
    acc = acc.add(&e2).expect("same lattice");

    let bs = p.b_star();
    acc.scale(&coeff_frac(*bs.numer(), *bs.denom()))
}

pub fn product_series_thm1(p: &ShadowParams, order: Exp) -> TruncatedSeries {
    product_series_thm1_with_margin(p, order, 0)
}

fn eps_sign(eps: u8, n: i64) -> i64 {
    if eps == 1 && n.rem_euclid(2) == 1 {
        -1
    } else {
        1
    }
}

fn admissible(p: &ShadowParams, a: i64, b: i64) -> bool {
    let m = 2 * p.b();
    (b + p.b() * a - 2 * p.a()).rem_euclid(m) == 0
}

fn pair_checked(p: &ShadowParams, a: i64, b: i64) -> DivisorPair {
    // |b| = B|a| would make the kappa sign factor sgn(0); excluded for
    // coprime A, B, so enumeration treats it as corruption, not data
    assert!(
        b.unsigned_abs() != p.b().unsigned_abs() * a.unsigned_abs(),
        "sign-degenerate pair ({a},{b})"
    );
    DivisorPair { a, b }
}

fn sort_pairs(pairs: &mut Vec<DivisorPair>) {
    pairs.sort_by_key(|p| (p.a.abs(), p.a));
}

/// All (a, b) with a·b = n and b + Ba ≡ 2A (mod 2B), ordered by (|a|, sign a).
/// Needs only the factorization of n.
pub fn enumerate_vn(
    p: &ShadowParams,
    n: u64,
    tools: &PrimeTools,
) -> Result<Vec<DivisorPair>, FamilyError> {
    let mut out = Vec::new();
    for d in tools.divisors(n)? {
        let (a, b) = (d as i64, (n / d) as i64);
        if admissible(p, a, b) {
            out.push(pair_checked(p, a, b));
        }
        if admissible(p, -a, -b) {
            out.push(pair_checked(p, -a, -b));
        }
    }
    sort_pairs(&mut out);
    Ok(out)
}

/// Same set as `enumerate_vn` but found by trial division; the slow
/// cross-check route.
pub fn enumerate_vn_by_scan(p: &ShadowParams, n: u64) -> Vec<DivisorPair> {
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            let mut firsts = vec![d];
            if d != n / d {
                firsts.push(n / d);
            }
            for first in firsts {
                let (a, b) = (first as i64, (n / first) as i64);
                if admissible(p, a, b) {
                    out.push(pair_checked(p, a, b));
                }
                if admissible(p, -a, -b) {
                    out.push(pair_checked(p, -a, -b));
                }
            }
        }
        d += 1;
    }
    sort_pairs(&mut out);
    out
}

fn divisor_sum(pairs: &[DivisorPair], p: &ShadowParams) -> i64 {
    let big_b = p.b() as i128;
    let mut total: i128 = 0;
    for pair in pairs {
        let (a, b) = (pair.a as i128, pair.b as i128);
        let gap = b * b - big_b * big_b * a * a;
        let sgn_pow = if p.kappa() == 1 { gap.signum() } else { 1 };
        let eps_factor = eps_sign(p.eps(), pair.a) as i128;
        total += sgn_pow * eps_factor * (b.abs().min(big_b * a.abs()));
    }
    i64::try_from(total).expect("divisor sum fits i64")
}

fn assemble_record(p: &ShadowParams, n: u64, pairs: Vec<DivisorPair>, sigma_half: u64) -> CoefficientRecord {
    let divisor_part = divisor_sum(&pairs, p);
    let sigma_part = if n % 2 == 0 { -2 * (sigma_half as i64) } else { 0 };
    CoefficientRecord { n, divisor_part, sigma_part, c: divisor_part + sigma_part, pairs }
}

/// c(n) from the divisor-pair sum plus the sigma term. Fast path: only the
/// factorization of n is needed, never a series expansion.
pub fn coefficient_closed_form(
    p: &ShadowParams,
    n: u64,
    tools: &PrimeTools,
) -> Result<CoefficientRecord, FamilyError> {
    let pairs = enumerate_vn(p, n, tools)?;
    let sigma_half = if n % 2 == 0 { tools.sigma1(n / 2)? } else { 0 };
    Ok(assemble_record(p, n, pairs, sigma_half))
}

/// c(n) with every divisor found by trial division and sigma summed directly;
/// fully independent of `PrimeTools`.
pub fn coefficient_by_divisor_scan(p: &ShadowParams, n: u64) -> CoefficientRecord {
    let pairs = enumerate_vn_by_scan(p, n);
    let sigma_half = if n % 2 == 0 { crate::classical::sigma1(n / 2) } else { 0 };
    assemble_record(p, n, pairs, sigma_half)
}

/// Product f·Θ assembled from closed-form coefficients:
/// B*/(12B) + (B*/B)·Σ c(n) q^{n/2}.
pub fn product_series_closed(
    p: &ShadowParams,
    order: Exp,
    tools: &PrimeTools,
) -> Result<TruncatedSeries, FamilyError> {
    let bs = p.b_star();
    let mut s = TruncatedSeries::constant(
        coeff_frac(*bs.numer(), 12 * p.b() * *bs.denom()),
        2,
        order,
    )?;
    let scale = coeff_frac(*bs.numer(), p.b() * *bs.denom());
    let n_hi = (order * exp_int(2)).ceil().to_integer();
    for n in 1..=n_hi.max(0) {
        let e = exp_frac(n, 2);
        if e >= order {
            continue;
        }
        let rec = coefficient_closed_form(p, n as u64, tools)?;
        if rec.c != 0 {
            s.add_term(e, &scale * coeff_int(rec.c))?;
        }
    }
    Ok(s)
}

/// The mock part alone: (f·Θ)/Θ on lattice 2B. Lowest exponent is −A²/B.
pub fn mock_part_series(p: &ShadowParams, order: Exp) -> Result<TruncatedSeries, SeriesError> {
    let a2b = exp_frac(p.a() * p.a(), p.b());
    let prod = product_series_thm1(p, order + a2b);
    let theta = theta_unary_btau(p, order + a2b + a2b + exp_int(1));
    let theta_inv = theta.invert(order + a2b + exp_int(1))?;
    let f = prod
        .lift_to_lattice(2 * p.b())?
        .mul(&theta_inv.lift_to_lattice(2 * p.b())?)?;
    Ok(f.truncate(order))
}

/// Indicator: 1 when +b or −b pairs with n to satisfy the divisor congruence
/// x + B(n/x) ≡ 2A (mod 2B).
pub fn psi(p: &ShadowParams, n: u64, b: i64) -> Result<u8, FamilyError> {
    if b == 0 || n % b.unsigned_abs() != 0 {
        return Err(FamilyError::NotADivisor { n, b });
    }
    for x in [b, -b] {
        let partner = (n as i64) / x;
        if admissible(p, partner, x) {
            return Ok(1);
        }
    }
    Ok(0)
}

/// Solutions (s, m) of n = (s−m)(2A+B(s+m)), found through signed divisors
/// s−m of n; ordered by (s, m).
pub fn enumerate_un(p: &ShadowParams, n: u64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let n_i = n as i64;
    let mut d = 1i64;
    while d * d <= n_i {
        if n_i % d == 0 {
            for a in [d, -d, n_i / d, -(n_i / d)] {
                let w = n_i / a;
                let t_num = w - 2 * p.a();
                if t_num.rem_euclid(p.b()) != 0 {
                    continue;
                }
                let t = t_num / p.b();
                if (a - t).rem_euclid(2) != 0 {
                    continue;
                }
                out.push(((a + t) / 2, (t - a) / 2));
            }
        }
        d += 1;
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// The explicit map U_n → V_n: (s, m) ↦ (s−m, 2A+B(s+m)).
pub fn un_to_vn(p: &ShadowParams, s: i64, m: i64) -> DivisorPair {
    DivisorPair { a: s - m, b: 2 * p.a() + p.b() * (s + m) }
}
