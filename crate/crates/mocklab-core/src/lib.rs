//! Exact truncated q-series with fractional exponents, a two-route expansion
//! of a family of half-integral-weight products, divisor-sum coefficient
//! formulas, p-adic congruence checks with witness search, and floating-point
//! verification of the transformation laws behind the series identities.

pub mod classical;
pub mod congruence;
pub mod family;
pub mod numerics;
pub mod params;
pub mod primes;
pub mod series;
pub mod witness;
