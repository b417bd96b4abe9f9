//! Classical integer-lattice q-series: the Euler product, the partition
//! generating function, the third-order series f(q), sigma, and E2.

use crate::series::{coeff_int, exp_int, Coeff, Exp, SeriesError, TruncatedSeries};
use num::One;

/// prod_{n>=1} (1 - q^n) expanded by the pentagonal number theorem:
/// sum_{k in Z} (-1)^k q^{k(3k-1)/2}. The q^{1/24} eta prefactor is omitted,
/// so the partition generating function is exactly the inverse of this.
pub fn eta_euler(order: Exp) -> TruncatedSeries {
    let mut s = TruncatedSeries::zero(1, order).expect("lattice 1");
    if exp_int(0) < order {
        s.add_term(exp_int(0), Coeff::one()).unwrap();
    }
    let mut k: i64 = 1;
    loop {
        let g1 = exp_int(k * (3 * k - 1) / 2);
        let g2 = exp_int(k * (3 * k + 1) / 2);
        if g1 >= order && g2 >= order {
            break;
        }
        let sign = if k % 2 == 0 { coeff_int(1) } else { coeff_int(-1) };
        if g1 < order {
            s.add_term(g1, sign.clone()).unwrap();
        }
        if g2 < order {
            s.add_term(g2, sign).unwrap();
        }
        k += 1;
    }
    s
}

/// Same series by direct multiplication of (1-q)(1-q^2)...; independent route
/// kept as an oracle for the pentagonal expansion.
pub fn eta_euler_product(order: Exp) -> Result<TruncatedSeries, SeriesError> {
    let mut acc = TruncatedSeries::constant(Coeff::one(), 1, order)?;
    let mut n: i64 = 1;
    while exp_int(n) < order {
        let factor = TruncatedSeries::from_terms(
            1,
            order,
            [(exp_int(0), coeff_int(1)), (exp_int(n), coeff_int(-1))],
        )?;
        acc = acc.mul(&factor)?;
        n += 1;
    }
    Ok(acc)
}

/// P(q) = 1 + sum p(n) q^n as the inverse of the Euler product.
pub fn partition_series(order: Exp) -> TruncatedSeries {
    eta_euler(order).invert(order).expect("euler product starts at 1")
}

/// Count partitions of n by direct recursive enumeration (no generating
/// function); the independent oracle for partition_series.
pub fn count_partitions_by_enumeration(n: u64) -> u64 {
    fn count(n: u64, max_part: u64) -> u64 {
        if n == 0 {
            return 1;
        }
        let mut total = 0;
        let mut k = max_part.min(n);
        while k >= 1 {
            total += count(n - k, k);
            k -= 1;
        }
        total
    }
    count(n, n.max(1))
}

/// 1 + sum_{n>=1} q^{n^2}/(-q;q)_n^2, the third-order series. Each reciprocal
/// factor uses 1/(1+q^n)^2 = sum_{j>=0} (-1)^j (j+1) q^{jn}, folded in
/// incrementally so the n-th step costs one sparse multiplication.
pub fn ramanujan_f_series(order: Exp) -> TruncatedSeries {
    let mut f = TruncatedSeries::zero(1, order).expect("lattice 1");
    if exp_int(0) < order {
        f.add_term(exp_int(0), Coeff::one()).unwrap();
    }
    let mut inv = TruncatedSeries::constant(Coeff::one(), 1, order).expect("lattice 1");
    let mut n: i64 = 1;
    while exp_int(n * n) < order {
        let mut g = TruncatedSeries::zero(1, order).expect("lattice 1");
        let mut j: i64 = 0;
        while exp_int(j * n) < order {
            let c = if j % 2 == 0 { coeff_int(j + 1) } else { coeff_int(-(j + 1)) };
            g.add_term(exp_int(j * n), c).unwrap();
            j += 1;
        }
        inv = inv.mul(&g).expect("same lattice");
        let shifted = inv.shift(exp_int(n * n)).expect("integer shift");
        f = f.add(&shifted.truncate(order)).expect("same lattice");
        n += 1;
    }
    f
}

/// sigma(n) = sum of positive divisors of n.
pub fn sigma1(n: u64) -> u64 {
    assert!(n > 0, "sigma is defined on positive integers");
    let mut total = 0u64;
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            total += d;
            let e = n / d;
            if e != d {
                total += e;
            }
        }
        d += 1;
    }
    total
}

/// Sieved table of sigma(n) for n up to a bound.
pub struct SigmaCache {
    table: Vec<u64>,
}

impl SigmaCache {
    pub fn up_to(bound: u64) -> Self {
        let mut table = vec![0u64; bound as usize + 1];
        for d in 1..=bound as usize {
            let mut m = d;
            while m <= bound as usize {
                table[m] += d as u64;
                m += d;
            }
        }
        Self { table }
    }

    pub fn get(&self, n: u64) -> Option<u64> {
        if n == 0 {
            None
        } else {
            self.table.get(n as usize).copied()
        }
    }
}

/// E2 = 1 - 24 sum_{n>=1} sigma(n) q^n.
pub fn eisenstein_e2(order: Exp) -> TruncatedSeries {
    let mut s = TruncatedSeries::zero(1, order).expect("lattice 1");
    if exp_int(0) < order {
        s.add_term(exp_int(0), Coeff::one()).unwrap();
    }
    let bound = order.ceil().to_integer().max(0) as u64;
    if bound >= 1 {
        let cache = SigmaCache::up_to(bound);
        for n in 1..=bound {
            let e = exp_int(n as i64);
            if e < order {
                let c = coeff_int(-24) * coeff_int(cache.get(n).unwrap() as i64);
                s.add_term(e, c).unwrap();
            }
        }
    }
    s
}
