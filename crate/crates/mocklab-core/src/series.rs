//! Exact truncated Laurent series in q with rational exponents.
//!
//! A series knows its coefficients only for exponents strictly below a
//! truncation order. All exponent denominators divide a per-series lattice
//! denominator D, so a series lives on the lattice (1/D)Z. Coefficients are
//! arbitrary-precision rationals and zero coefficients are never stored.

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{BigRational, One, Signed, ToPrimitive, Zero};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Exponent type: reduced rational with machine-sized parts.
pub type Exp = Ratio<i64>;
/// Coefficient type: exact arbitrary-precision rational.
pub type Coeff = BigRational;

pub fn exp_int(n: i64) -> Exp {
    Exp::from_integer(n)
}

pub fn exp_frac(n: i64, d: i64) -> Exp {
    Exp::new(n, d)
}

pub fn coeff_int(n: i64) -> Coeff {
    Coeff::from_integer(BigInt::from(n))
}

pub fn coeff_frac(n: i64, d: i64) -> Coeff {
    Coeff::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, thiserror::Error, PartialEq, Eq, Clone)]
pub enum SeriesError {
    #[error("lattice mismatch: /{0} vs /{1}")]
    LatticeMismatch(i64, i64),
    #[error("exponent {0} is not on the lattice (1/{1})Z")]
    OffLattice(Exp, i64),
    #[error("lattice denominator must be positive, got {0}")]
    BadLattice(i64),
    #[error("lattice /{0} does not refine into /{1}")]
    LatticeRefinement(i64, i64),
    #[error("cannot invert: no nonzero term through the truncation order")]
    ZeroInverse,
    #[error("geometric expansion has a pole: k = 0")]
    GeometricPole,
    #[error("numeric evaluation requires Im(tau) > 0")]
    NonUpperHalfPlane,
    #[error("parse error: {0}")]
    Parse(String),
}

/// Truncated series: coefficients are known (possibly zero) exactly for
/// exponents e with e < order, and unknown at or beyond it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedSeries {
    terms: BTreeMap<Exp, Coeff>,
    order: Exp,
    lattice: i64,
}

fn on_lattice(e: Exp, lattice: i64) -> bool {
    lattice % e.denom() == 0
}

impl TruncatedSeries {
    /// The zero series on the given lattice, known through `order`.
    pub fn zero(lattice: i64, order: Exp) -> Result<Self, SeriesError> {
        if lattice < 1 {
            return Err(SeriesError::BadLattice(lattice));
        }
        Ok(Self { terms: BTreeMap::new(), order, lattice })
    }

    /// Constant series c·q^0 on the given lattice.
    pub fn constant(c: Coeff, lattice: i64, order: Exp) -> Result<Self, SeriesError> {
        let mut s = Self::zero(lattice, order)?;
        s.add_term(Exp::zero(), c)?;
        Ok(s)
    }

    /// Build from (exponent, coefficient) pairs; zeros are dropped, exponents
    /// at or beyond `order` are rejected nowhere (they are simply unknown and
    /// therefore discarded), off-lattice exponents are an error. Repeated
    /// exponents accumulate.
    pub fn from_terms<I>(lattice: i64, order: Exp, it: I) -> Result<Self, SeriesError>
    where
        I: IntoIterator<Item = (Exp, Coeff)>,
    {
        let mut s = Self::zero(lattice, order)?;
        for (e, c) in it {
            s.add_term(e, c)?;
        }
        Ok(s)
    }

    /// Add `c` to the coefficient at exponent `e` (no-op beyond the order).
    pub fn add_term(&mut self, e: Exp, c: Coeff) -> Result<(), SeriesError> {
        if !on_lattice(e, self.lattice) {
            return Err(SeriesError::OffLattice(e, self.lattice));
        }
        if e >= self.order || c.is_zero() {
            return Ok(());
        }
        let entry = self.terms.entry(e).or_insert_with(Coeff::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
        Ok(())
    }

    pub fn order(&self) -> Exp {
        self.order
    }

    pub fn lattice(&self) -> i64 {
        self.lattice
    }

    /// Smallest exponent carrying a nonzero term; 0 for the zero series.
    pub fn min_exp(&self) -> Exp {
        self.terms.keys().next().copied().unwrap_or_else(Exp::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Coefficient at `e`: Some (possibly zero) below the order, None beyond.
    pub fn coeff(&self, e: Exp) -> Option<Coeff> {
        if e < self.order {
            Some(self.terms.get(&e).cloned().unwrap_or_else(Coeff::zero))
        } else {
            None
        }
    }

    pub fn coeff_or_zero(&self, e: Exp) -> Coeff {
        self.terms.get(&e).cloned().unwrap_or_else(Coeff::zero)
    }

    /// Stored (nonzero) terms in ascending exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&Exp, &Coeff)> {
        self.terms.iter()
    }

    /// Termwise sum; the result is known through min(order_a, order_b).
    pub fn add(&self, b: &Self) -> Result<Self, SeriesError> {
        if self.lattice != b.lattice {
            return Err(SeriesError::LatticeMismatch(self.lattice, b.lattice));
        }
        let order = self.order.min(b.order);
        let mut s = Self::zero(self.lattice, order)?;
        for (e, c) in self.terms.iter().chain(b.terms.iter()) {
            s.add_term(*e, c.clone())?;
        }
        Ok(s)
    }

    pub fn neg(&self) -> Self {
        let terms = self.terms.iter().map(|(e, c)| (*e, -c.clone())).collect();
        Self { terms, order: self.order, lattice: self.lattice }
    }

    pub fn sub(&self, b: &Self) -> Result<Self, SeriesError> {
        self.add(&b.neg())
    }

    pub fn scale(&self, c: &Coeff) -> Self {
        if c.is_zero() {
            return Self { terms: BTreeMap::new(), order: self.order, lattice: self.lattice };
        }
        let terms = self.terms.iter().map(|(e, k)| (*e, k * c)).collect();
        Self { terms, order: self.order, lattice: self.lattice }
    }

    /// Multiply by q^delta: shifts every exponent and the order by delta.
    pub fn shift(&self, delta: Exp) -> Result<Self, SeriesError> {
        if !on_lattice(delta, self.lattice) {
            return Err(SeriesError::OffLattice(delta, self.lattice));
        }
        let terms = self.terms.iter().map(|(e, c)| (*e + delta, c.clone())).collect();
        Ok(Self { terms, order: self.order + delta, lattice: self.lattice })
    }

    /// Cauchy product. The result is known through
    /// min(order_a + min_exp_b, order_b + min_exp_a): a term of a at or beyond
    /// order_a pairs with the lowest term of b to land there, and vice versa.
    pub fn mul(&self, b: &Self) -> Result<Self, SeriesError> {
        if self.lattice != b.lattice {
            return Err(SeriesError::LatticeMismatch(self.lattice, b.lattice));
        }
        let order = (self.order + b.min_exp()).min(b.order + self.min_exp());
        let mut s = Self::zero(self.lattice, order)?;
        for (ea, ca) in &self.terms {
            if *ea + b.min_exp() >= order {
                break;
            }
            for (eb, cb) in &b.terms {
                let e = *ea + *eb;
                if e >= order {
                    break;
                }
                s.add_term(e, ca * cb)?;
            }
        }
        Ok(s)
    }

    /// Restrict knowledge to a smaller order, dropping terms at or beyond it.
    pub fn truncate(&self, new_order: Exp) -> Self {
        let order = self.order.min(new_order);
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| **e < order)
            .map(|(e, c)| (*e, c.clone()))
            .collect();
        Self { terms, order, lattice: self.lattice }
    }

    /// Re-declare the series on a finer lattice (old D must divide new D).
    /// Refinement is always explicit; binary ops never rescale silently.
    pub fn lift_to_lattice(&self, new_lattice: i64) -> Result<Self, SeriesError> {
        if new_lattice < 1 {
            return Err(SeriesError::BadLattice(new_lattice));
        }
        if new_lattice % self.lattice != 0 {
            return Err(SeriesError::LatticeRefinement(self.lattice, new_lattice));
        }
        Ok(Self { terms: self.terms.clone(), order: self.order, lattice: new_lattice })
    }

    /// Multiplicative inverse through min(requested order, what the known part
    /// of `self` determines). The lowest term is factored out first, so the
    /// result is a Laurent series when min_exp > 0.
    pub fn invert(&self, order: Exp) -> Result<Self, SeriesError> {
        let (m, c0) = match self.terms.iter().next() {
            Some((e, c)) => (*e, c.clone()),
            None => return Err(SeriesError::ZeroInverse),
        };
        // self = c0 q^m (1 + t), with t known through order_self - m.
        let unit_order = (self.order - m).min(order);
        let d = self.lattice;
        let mut unit_terms: Vec<(Exp, Coeff)> = Vec::with_capacity(self.terms.len());
        for (e, c) in &self.terms {
            if *e == m {
                continue;
            }
            let shifted = *e - m;
            if shifted < unit_order {
                unit_terms.push((shifted, c / &c0));
            }
        }
        // Dense incremental inversion over lattice steps:
        // B[0] = 1, B[e] = -sum_{0 < f <= e} t[f] B[e-f].
        let steps = (unit_order * exp_int(d)).to_integer();
        let mut inv_dense: Vec<Coeff> = Vec::new();
        if steps > 0 {
            inv_dense.push(Coeff::one());
            for j in 1..steps {
                let e = exp_frac(j, d);
                let mut acc = Coeff::zero();
                for (f, tc) in &unit_terms {
                    if *f > e {
                        break;
                    }
                    let rem = e - *f;
                    let idx = (rem * exp_int(d)).to_integer() as usize;
                    let prev = &inv_dense[idx];
                    if !prev.is_zero() {
                        acc += tc * prev;
                    }
                }
                inv_dense.push(-acc);
            }
        }
        let mut out = Self::zero(d, unit_order - m)?;
        let c0_inv = Coeff::one() / c0;
        for (j, c) in inv_dense.into_iter().enumerate() {
            if !c.is_zero() {
                out.add_term(exp_frac(j as i64, d) - m, c * &c0_inv)?;
            }
        }
        Ok(out)
    }

    /// Evaluate numerically at tau in the upper half-plane:
    /// sum of c·e^{2 pi i e tau}, plus a crude geometric tail magnitude
    /// |q|^order / (1 - |q|) for error reporting.
    pub fn eval_num(&self, tau: Complex64) -> Result<SeriesEval, SeriesError> {
        if tau.im <= 0.0 {
            return Err(SeriesError::NonUpperHalfPlane);
        }
        let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        let mut value = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let ef = e.to_f64().unwrap();
            let cf = c.to_f64().unwrap_or(f64::NAN);
            value += cf * (two_pi_i * ef * tau).exp();
        }
        let qabs = (-2.0 * std::f64::consts::PI * tau.im).exp();
        let of = self.order.to_f64().unwrap();
        let tail = if qabs < 1.0 { qabs.powf(of) / (1.0 - qabs) } else { f64::INFINITY };
        Ok(SeriesEval { value, tail_bound: tail })
    }

    /// Text form: header `ORDER <num>/<den> LATTICE <D>`, then one term per
    /// line, `<coeff_num>/<coeff_den> <exp_num>/<exp_den>`, ascending exponent.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ORDER {}/{} LATTICE {}", self.order.numer(), self.order.denom(), self.lattice);
        for (e, c) in &self.terms {
            let _ = writeln!(out, "{}/{} {}/{}", c.numer(), c.denom(), e.numer(), e.denom());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SeriesError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| SeriesError::Parse("empty input".into()))?;
        let hp: Vec<&str> = header.split_whitespace().collect();
        if hp.len() != 4 || hp[0] != "ORDER" || hp[2] != "LATTICE" {
            return Err(SeriesError::Parse(format!("bad header: {header}")));
        }
        let order = parse_exp(hp[1])?;
        let lattice: i64 = hp[3]
            .parse()
            .map_err(|_| SeriesError::Parse(format!("bad lattice: {}", hp[3])))?;
        let mut s = Self::zero(lattice, order)?;
        let mut prev: Option<Exp> = None;
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(SeriesError::Parse(format!("bad term line: {line}")));
            }
            let c = parse_coeff(parts[0])?;
            let e = parse_exp(parts[1])?;
            if c.is_zero() {
                return Err(SeriesError::Parse(format!("explicit zero coefficient at {e}")));
            }
            if e >= order {
                return Err(SeriesError::Parse(format!("exponent {e} at or beyond order")));
            }
            if let Some(p) = prev {
                if e <= p {
                    return Err(SeriesError::Parse(format!("exponents not strictly ascending at {e}")));
                }
            }
            prev = Some(e);
            s.add_term(e, c)?;
        }
        Ok(s)
    }

    /// JSON form: `{"order":[num,den],"lattice":D,"terms":[[en,ed,cn,cd],...]}`
    /// with coefficient parts as decimal strings (they exceed 53-bit JSON
    /// number precision for deep expansions) and exponent parts as numbers.
    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(e, c)| {
                serde_json::json!([
                    e.numer(),
                    e.denom(),
                    c.numer().to_string(),
                    c.denom().to_string()
                ])
            })
            .collect();
        serde_json::json!({
            "order": [self.order.numer(), self.order.denom()],
            "lattice": self.lattice,
            "terms": terms,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, SeriesError> {
        let bad = |m: &str| SeriesError::Parse(m.to_string());
        let order_arr = v["order"].as_array().ok_or_else(|| bad("order must be [num,den]"))?;
        if order_arr.len() != 2 {
            return Err(bad("order must be [num,den]"));
        }
        let on = order_arr[0].as_i64().ok_or_else(|| bad("order numerator"))?;
        let od = order_arr[1].as_i64().ok_or_else(|| bad("order denominator"))?;
        if od <= 0 {
            return Err(bad("order denominator must be positive"));
        }
        let lattice = v["lattice"].as_i64().ok_or_else(|| bad("lattice"))?;
        let mut s = Self::zero(lattice, Exp::new(on, od))?;
        let terms = v["terms"].as_array().ok_or_else(|| bad("terms must be an array"))?;
        for t in terms {
            let t = t.as_array().ok_or_else(|| bad("term must be [en,ed,cn,cd]"))?;
            if t.len() != 4 {
                return Err(bad("term must be [en,ed,cn,cd]"));
            }
            let en = t[0].as_i64().ok_or_else(|| bad("exponent numerator"))?;
            let ed = t[1].as_i64().ok_or_else(|| bad("exponent denominator"))?;
            if ed <= 0 {
                return Err(bad("exponent denominator must be positive"));
            }
            let cn: BigInt = t[2]
                .as_str()
                .and_then(|x| x.parse().ok())
                .ok_or_else(|| bad("coefficient numerator"))?;
            let cd: BigInt = t[3]
                .as_str()
                .and_then(|x| x.parse().ok())
                .ok_or_else(|| bad("coefficient denominator"))?;
            if cd.is_zero() {
                return Err(bad("coefficient denominator must be nonzero"));
            }
            s.add_term(Exp::new(en, ed), Coeff::new(cn, cd))?;
        }
        Ok(s)
    }
}

pub struct SeriesEval {
    pub value: Complex64,
    pub tail_bound: f64,
}

fn parse_exp(s: &str) -> Result<Exp, SeriesError> {
    let (n, d) = s
        .split_once('/')
        .ok_or_else(|| SeriesError::Parse(format!("expected num/den, got {s}")))?;
    let n: i64 = n.parse().map_err(|_| SeriesError::Parse(format!("bad numerator {n}")))?;
    let d: i64 = d.parse().map_err(|_| SeriesError::Parse(format!("bad denominator {d}")))?;
    if d <= 0 {
        return Err(SeriesError::Parse(format!("denominator must be positive in {s}")));
    }
    Ok(Exp::new(n, d))
}

fn parse_coeff(s: &str) -> Result<Coeff, SeriesError> {
    let (n, d) = s
        .split_once('/')
        .ok_or_else(|| SeriesError::Parse(format!("expected num/den, got {s}")))?;
    let n: BigInt = n.parse().map_err(|_| SeriesError::Parse(format!("bad numerator {n}")))?;
    let d: BigInt = d.parse().map_err(|_| SeriesError::Parse(format!("bad denominator {d}")))?;
    if !d.is_positive() {
        return Err(SeriesError::Parse(format!("denominator must be positive in {s}")));
    }
    Ok(Coeff::new(n, d))
}

/// Expansion of c·q^h/(1 - q^k) as a series bounded below.
///
/// For k > 0 this is c·sum_{j>=0} q^{h+jk}. For k < 0 the identity
/// 1/(1-q^k) = -q^{-k}/(1-q^{-k}) converts it first, giving
/// -c·sum_{j>=1} q^{h+|k|j}. k = 0 is a pole and an error.
pub fn geometric_expand(
    c: &Coeff,
    h: Exp,
    k: Exp,
    order: Exp,
    lattice: i64,
) -> Result<TruncatedSeries, SeriesError> {
    if k.is_zero() {
        return Err(SeriesError::GeometricPole);
    }
    let mut s = TruncatedSeries::zero(lattice, order)?;
    if c.is_zero() {
        return Ok(s);
    }
    if k > Exp::zero() {
        let mut e = h;
        while e < order {
            s.add_term(e, c.clone())?;
            e += k;
        }
    } else {
        let step = -k;
        let mut e = h + step;
        let neg = -c.clone();
        while e < order {
            s.add_term(e, neg.clone())?;
            e += step;
        }
    }
    Ok(s)
}
