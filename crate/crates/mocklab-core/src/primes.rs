//! Deterministic 64-bit primality testing and budgeted integer factorization.

/// Primality plus a trial-division / Brent-rho factorizer with a configurable
/// effort bound. Budget exhaustion is an explicit error, never a wrong answer.
#[derive(Debug, Clone)]
pub struct PrimeTools {
    rho_budget: u64,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq, Clone)]
pub enum FactorError {
    #[error("factoring budget exhausted on {0}")]
    BudgetExhausted(u64),
    #[error("cannot factor zero")]
    Zero,
}

impl Default for PrimeTools {
    fn default() -> Self {
        Self { rho_budget: 1 << 22 }
    }
}

impl PrimeTools {
    pub fn with_budget(rho_budget: u64) -> Self {
        Self { rho_budget: rho_budget.max(1) }
    }

    /// Deterministic Miller-Rabin; the fixed witness set below decides
    /// primality correctly for every 64-bit integer.
    pub fn is_prime(&self, n: u64) -> bool {
        if n < 2 {
            return false;
        }
        for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
            if n == p {
                return true;
            }
            if n % p == 0 {
                return false;
            }
        }
        let mut d = n - 1;
        let mut r = 0u32;
        while d % 2 == 0 {
            d /= 2;
            r += 1;
        }
        'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
            let mut x = pow_mod(a, d, n);
            if x == 1 || x == n - 1 {
                continue;
            }
            for _ in 1..r {
                x = mul_mod(x, x, n);
                if x == n - 1 {
                    continue 'witness;
                }
            }
            return false;
        }
        true
    }

    /// Prime factorization as (prime, multiplicity) pairs in ascending order.
    pub fn factor(&self, n: u64) -> Result<Vec<(u64, u32)>, FactorError> {
        if n == 0 {
            return Err(FactorError::Zero);
        }
        let mut out: Vec<(u64, u32)> = Vec::new();
        let mut n = n;
        for p in 2u64..1024 {
            if p * p > n {
                break;
            }
            if n % p == 0 {
                let mut e = 0;
                while n % p == 0 {
                    n /= p;
                    e += 1;
                }
                out.push((p, e));
            }
        }
        if n > 1 {
            let mut stack = vec![n];
            while let Some(m) = stack.pop() {
                if self.is_prime(m) {
                    push_factor(&mut out, m);
                } else {
                    let d = self.rho_split(m).ok_or(FactorError::BudgetExhausted(m))?;
                    stack.push(d);
                    stack.push(m / d);
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Brent's cycle variant of the rho method; returns a proper divisor or
    /// None once the iteration budget is spent.
    fn rho_split(&self, n: u64) -> Option<u64> {
        if n % 2 == 0 {
            return Some(2);
        }
        let mut spent = 0u64;
        for c in 1u64.. {
            let mut x = 2u64;
            let mut y = 2u64;
            let mut d = 1u64;
            let f = |v: u64| (mul_mod(v, v, n) + c) % n;
            let mut count = 0u64;
            while d == 1 {
                x = f(x);
                y = f(f(y));
                d = gcd_u64(x.abs_diff(y), n);
                count += 1;
                spent += 1;
                if spent >= self.rho_budget {
                    return None;
                }
                if count > n.isqrt() + 2 {
                    break;
                }
            }
            if d != n && d != 1 {
                return Some(d);
            }
        }
        None
    }

    /// All positive divisors of n in ascending order.
    pub fn divisors(&self, n: u64) -> Result<Vec<u64>, FactorError> {
        let factors = self.factor(n)?;
        let mut out = vec![1u64];
        for (p, e) in factors {
            let prev = out.clone();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                out.extend(prev.iter().map(|d| d * pk));
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// sigma(n) from the factorization: product of (p^{e+1}-1)/(p-1).
    pub fn sigma1(&self, n: u64) -> Result<u64, FactorError> {
        let mut total = 1u128;
        for (p, e) in self.factor(n)? {
            let mut term = 1u128;
            let mut pk = 1u128;
            for _ in 0..e {
                pk *= p as u128;
                term += pk;
            }
            total *= term;
        }
        Ok(total as u64)
    }
}

/// Ascending primes up to and including `n`, by sieve.
pub fn primes_upto(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for p in 2..=n {
        if !composite[p] {
            out.push(p as u64);
            let mut m = p * p;
            while m <= n {
                composite[m] = true;
                m += p;
            }
        }
    }
    out
}

fn push_factor(out: &mut Vec<(u64, u32)>, p: u64) {
    for (q, e) in out.iter_mut() {
        if *q == p {
            *e += 1;
            return;
        }
    }
    out.push((p, 1));
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_prime_trial(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn primality_matches_trial_division_below_threshold() {
        let t = PrimeTools::default();
        for n in 0..5000u64 {
            assert_eq!(t.is_prime(n), is_prime_trial(n), "n={n}");
        }
        for n in (0..1_000_000).step_by(997) {
            assert_eq!(t.is_prime(n), is_prime_trial(n), "n={n}");
        }
    }

    #[test]
    fn primality_on_larger_known_cases() {
        let t = PrimeTools::default();
        assert!(t.is_prime(2_147_483_647)); // 2^31 - 1
        assert!(t.is_prime((1 << 61) - 1));
        assert!(!t.is_prime(3_215_031_751)); // strong pseudoprime to bases 2,3,5,7
        assert!(!t.is_prime((1 << 61) - 3));
    }

    #[test]
    fn factorization_multiplies_back() {
        let t = PrimeTools::default();
        for n in [1u64, 2, 360, 1009, 104729 * 104729, 600851475143, 10_000_000_019] {
            let f = t.factor(n).unwrap();
            let back: u64 = f.iter().map(|(p, e)| p.pow(*e)).product();
            assert_eq!(back, n);
            for (p, _) in &f {
                assert!(t.is_prime(*p), "factor {p} of {n}");
            }
        }
    }

    #[test]
    fn divisors_ascending_and_complete() {
        let t = PrimeTools::default();
        assert_eq!(t.divisors(28).unwrap(), vec![1, 2, 4, 7, 14, 28]);
        assert_eq!(t.divisors(1).unwrap(), vec![1]);
        let d360 = t.divisors(360).unwrap();
        assert_eq!(d360.len(), 24);
        assert!(d360.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sigma_agrees_with_direct_sum() {
        let t = PrimeTools::default();
        for n in 1..500u64 {
            assert_eq!(t.sigma1(n).unwrap(), crate::classical::sigma1(n), "n={n}");
        }
    }

    #[test]
    fn sieve_agrees_with_primality_test() {
        let t = PrimeTools::default();
        let sieved = primes_upto(2000);
        let direct: Vec<u64> = (0..=2000).filter(|&n| t.is_prime(n)).collect();
        assert_eq!(sieved, direct);
        assert!(primes_upto(1).is_empty());
    }

    #[test]
    fn tiny_budget_fails_loudly_on_hard_composites() {
        let t = PrimeTools::with_budget(1);
        // product of two 10-digit primes; trial division cannot reach them
        let hard = 1_000_000_007u64 * 1_000_000_009u64;
        assert_eq!(t.factor(hard).unwrap_err(), FactorError::BudgetExhausted(hard));
    }
}
