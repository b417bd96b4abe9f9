//! Batch front end over the core library: series expansion, coefficient
//! records, congruence verification, witness scans, and numeric residual
//! suites. Every invocation is deterministic given its flags, and output
//! bytes do not depend on --jobs.
//!
//! Exit codes: 0 verified or found, 1 check failed or search exhausted
//! (a report is still printed), 2 usage error.

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mocklab_core::congruence::{ramanujan_f_vs_partition, verify_partition_congruences};
use mocklab_core::family::{
    coefficient_closed_form, product_series_closed, product_series_thm1, FamilyError,
};
use mocklab_core::numerics::{
    beta1_suite, e2hat_suite, elliptic_suite, modular_suite, thm1_suite, Residual,
};
use mocklab_core::params::{validate_params, ShadowParams};
use mocklab_core::primes::{FactorError, PrimeTools};
use mocklab_core::series::{exp_int, TruncatedSeries};
use mocklab_core::witness::{
    check_psi_lemma, check_psi_sum_bounds, find_witness_mod4, find_witness_odd, SearchRanges,
    WitnessError,
};

const NUMERIC_TOL_TRANSFORM: f64 = 1e-8;
const NUMERIC_TOL_BETA1: f64 = 1e-10;
const NUMERIC_TOL_THM1: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "mocklab", version, about = "q-series toolbox: exact expansions, congruence checks, witness scans, numeric identity residuals")]
struct Cli {
    /// Worker threads for parallel scans; output is identical for any value
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum Route {
    Thm1,
    Closed,
    Both,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Copy, Clone, ValueEnum)]
enum SuiteName {
    All,
    Elliptic,
    Modular,
    E2hat,
    Beta1,
    Thm1,
}

#[derive(Subcommand)]
enum Command {
    /// Expand the product series through q^ORDER by one or both routes
    Expand {
        a: i64,
        b: i64,
        eps: i64,
        kappa: i64,
        #[arg(long, default_value_t = 50)]
        order: i64,
        #[arg(long, value_enum, default_value_t = Route::Thm1)]
        route: Route,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// One coefficient record with its divisor pairs, or a CSV table up to N
    Coeff {
        a: i64,
        b: i64,
        eps: i64,
        kappa: i64,
        n: u64,
        /// Emit n,divisor_part,sigma_part,c rows for 1..=N instead of JSON
        #[arg(long)]
        csv: bool,
    },
    /// Check a congruence statement over a truncated range
    Verify {
        #[command(subcommand)]
        target: VerifyTarget,
    },
    /// Search for an index n = Q p^m k whose coefficient violates a congruence
    ScanWitness {
        a: i64,
        b: i64,
        eps: i64,
        kappa: i64,
        /// The congruence prime; 2 selects the mod-4 search
        #[arg(long)]
        prime: u64,
        /// Power of the odd prime in the index (odd primes only)
        #[arg(long, default_value_t = 1)]
        exponent: u32,
        /// Largest power of 2 tried (prime 2 only)
        #[arg(long, default_value_t = 8)]
        m_max: u32,
        #[arg(long, default_value_t = 1000)]
        q_floor: u64,
        #[arg(long, default_value_t = 100_000)]
        q_max: u64,
        #[arg(long, default_value_t = 50)]
        q_count: usize,
        #[arg(long, default_value_t = 10_000)]
        k_max: u64,
    },
    /// Check the divisor-indicator identities for a parameter pair
    PsiLemma {
        a: i64,
        b: i64,
        /// Check all primes 5 < Q < this bound
        #[arg(long, default_value_t = 100)]
        q_max: u64,
    },
    /// Run the numeric identity residual suites and report each residual
    CheckNumerics {
        #[arg(long, value_enum, default_value_t = SuiteName::All)]
        suite: SuiteName,
        /// Configurations per seeded suite
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 1729)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum VerifyTarget {
    /// Third-order series against the partition series modulo a power of 2
    Eq11 {
        #[arg(long = "mod", default_value_t = 4)]
        modulus: u64,
        #[arg(long, default_value_t = 500)]
        order: i64,
    },
    /// p(5n+4), p(7n+5), p(11n+6) divisibility up to the bound
    PartitionCongruences {
        #[arg(long, default_value_t = 100)]
        bound: u64,
    },
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn params_or_exit(a: i64, b: i64, eps: i64, kappa: i64) -> Result<ShadowParams, ExitCode> {
    validate_params(a, b, eps, kappa).map_err(|e| usage_error(&e.to_string()))
}

/// Factoring budget from MOCKLAB_FACTOR_BUDGET, default otherwise.
fn prime_tools() -> Result<PrimeTools, ExitCode> {
    match std::env::var("MOCKLAB_FACTOR_BUDGET") {
        Ok(v) => match v.parse::<u64>() {
            Ok(b) => Ok(PrimeTools::with_budget(b)),
            Err(_) => Err(usage_error(&format!("MOCKLAB_FACTOR_BUDGET must be an integer, got {v:?}"))),
        },
        Err(_) => Ok(PrimeTools::default()),
    }
}

fn emit_series(s: &TruncatedSeries, format: Format) {
    match format {
        Format::Json => println!("{}", s.to_json()),
        Format::Text => print!("{}", s.to_text()),
    }
}

fn cmd_expand(p: &ShadowParams, order: i64, route: Route, format: Format) -> ExitCode {
    let order = exp_int(order);
    match route {
        Route::Thm1 => {
            emit_series(&product_series_thm1(p, order), format);
            ExitCode::SUCCESS
        }
        Route::Closed => match product_series_closed(p, order, &PrimeTools::default()) {
            Ok(s) => {
                emit_series(&s, format);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Route::Both => {
            let thm1 = product_series_thm1(p, order);
            let closed = match product_series_closed(p, order, &PrimeTools::default()) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            let diff = thm1.sub(&closed).expect("same lattice and order");
            let diff_exps: Vec<String> = diff.terms().map(|(e, _)| e.to_string()).collect();
            match format {
                Format::Json => {
                    println!(
                        "{{\"thm1\":{},\"closed\":{},\"diff\":[{}]}}",
                        thm1.to_json(),
                        closed.to_json(),
                        diff_exps.iter().map(|e| format!("\"{e}\"")).collect::<Vec<_>>().join(",")
                    );
                }
                Format::Text => {
                    println!("THM1");
                    print!("{}", thm1.to_text());
                    println!("CLOSED");
                    print!("{}", closed.to_text());
                    if diff_exps.is_empty() {
                        println!("DIFF");
                    } else {
                        println!("DIFF {}", diff_exps.join(" "));
                    }
                }
            }
            if diff.is_zero() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn cmd_coeff(p: &ShadowParams, n: u64, csv: bool, tools: &PrimeTools) -> ExitCode {
    if csv {
        println!("n,divisor_part,sigma_part,c");
        for i in 1..=n {
            match coefficient_closed_form(p, i, tools) {
                Ok(r) => println!("{},{},{},{}", r.n, r.divisor_part, r.sigma_part, r.c),
                Err(FamilyError::Factor(FactorError::BudgetExhausted(x))) => {
                    eprintln!("notice: skipped n={i}, factoring budget exhausted on {x}");
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            }
        }
        ExitCode::SUCCESS
    } else {
        match coefficient_closed_form(p, n, tools) {
            Ok(r) => {
                println!("{}", r.to_json());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        }
    }
}

fn cmd_verify(target: VerifyTarget) -> ExitCode {
    match target {
        VerifyTarget::Eq11 { modulus, order } => {
            if !modulus.is_power_of_two() || modulus < 2 {
                return usage_error(&format!("--mod must be a power of 2 at least 2, got {modulus}"));
            }
            if order < 1 {
                return usage_error("--order must be positive");
            }
            let m = modulus.trailing_zeros();
            let check = ramanujan_f_vs_partition(exp_int(order), m).expect("valid modulus");
            let witness = check
                .first_violation
                .map(|e| e.to_integer().to_string())
                .unwrap_or_else(|| "null".into());
            println!(
                "{{\"target\":\"eq11\",\"modulus\":{modulus},\"order\":{order},\"holds\":{},\"first_violation\":{witness}}}",
                check.holds
            );
            if check.holds { ExitCode::SUCCESS } else { ExitCode::FAILURE }
        }
        VerifyTarget::PartitionCongruences { bound } => {
            let report = verify_partition_congruences(bound);
            let failure = report
                .first_failure
                .map(|(m, i)| format!("[{m},{i}]"))
                .unwrap_or_else(|| "null".into());
            println!(
                "{{\"target\":\"partition-congruences\",\"bound\":{bound},\"pass\":{},\"first_failure\":{failure}}}",
                report.pass
            );
            if report.pass { ExitCode::SUCCESS } else { ExitCode::FAILURE }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_scan_witness(
    p: &ShadowParams,
    prime: u64,
    exponent: u32,
    m_max: u32,
    ranges: SearchRanges,
    tools: &PrimeTools,
) -> ExitCode {
    let result = if prime == 2 {
        find_witness_mod4(p, m_max, &ranges, tools)
    } else {
        find_witness_odd(p, prime, exponent, &ranges, tools)
    };
    match result {
        Ok(report) => {
            println!("{}", report.to_json());
            ExitCode::SUCCESS
        }
        Err(WitnessError::NotFound(stats)) => {
            println!(
                "{{\"found\":false,\"search_stats\":{{\"q_tried\":{},\"coefficients_evaluated\":{},\"skipped_factorizations\":{}}}}}",
                stats.q_tried, stats.coefficients_evaluated, stats.skipped_factorizations
            );
            ExitCode::FAILURE
        }
        Err(e) => usage_error(&e.to_string()),
    }
}

fn cmd_psi_lemma(a: i64, b: i64, q_max: u64) -> ExitCode {
    let p = match params_or_exit(a, b, 0, 1) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let tools = PrimeTools::default();
    let exact_pattern = matches!(p.b(), 6 | 10);
    if !exact_pattern && p.b() % 4 != 2 {
        return usage_error(&format!("B = {} is not 2 mod 4; no indicator identity applies", p.b()));
    }
    let mode = if exact_pattern { "exact-pattern" } else { "sum-bounds" };
    let mut checked = 0u64;
    let mut failures: Vec<u64> = Vec::new();
    for q in (6..q_max).filter(|&q| tools.is_prime(q)) {
        if q == p.b() as u64 || p.b() as u64 % q == 0 {
            continue;
        }
        checked += 1;
        let ok = if exact_pattern {
            check_psi_lemma(&p, q)
        } else {
            check_psi_sum_bounds(&p, q)
        };
        match ok {
            Ok(true) => {}
            _ => failures.push(q),
        }
    }
    let pass = failures.is_empty();
    println!(
        "{{\"A\":{},\"B\":{},\"mode\":\"{mode}\",\"q_checked\":{checked},\"pass\":{pass},\"failures\":[{}]}}",
        p.a(),
        p.b(),
        failures.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
    );
    if pass { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}

fn cmd_check_numerics(suite: SuiteName, count: usize, seed: u64) -> ExitCode {
    let mut residuals: Vec<Residual> = Vec::new();
    let want = |name: SuiteName, target: SuiteName| {
        matches!(name, SuiteName::All) || std::mem::discriminant(&name) == std::mem::discriminant(&target)
    };
    if want(suite, SuiteName::Elliptic) {
        residuals.extend(elliptic_suite(count, seed, NUMERIC_TOL_TRANSFORM));
    }
    if want(suite, SuiteName::Modular) {
        residuals.extend(modular_suite(count, seed, NUMERIC_TOL_TRANSFORM));
    }
    if want(suite, SuiteName::E2hat) {
        residuals.extend(e2hat_suite(count, seed, NUMERIC_TOL_TRANSFORM));
    }
    if want(suite, SuiteName::Beta1) {
        residuals.extend(beta1_suite(NUMERIC_TOL_BETA1));
    }
    if want(suite, SuiteName::Thm1) {
        residuals.extend(thm1_suite(NUMERIC_TOL_THM1));
    }
    let body: Vec<String> = residuals.iter().map(Residual::to_json).collect();
    println!("[{}]", body.join(","));
    if residuals.iter().all(|r| r.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return usage_error("--jobs must be positive");
        }
        // ignore the error when a global pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match cli.command {
        Command::Expand { a, b, eps, kappa, order, route, format } => {
            if order < 1 {
                return usage_error("--order must be positive");
            }
            match params_or_exit(a, b, eps, kappa) {
                Ok(p) => cmd_expand(&p, order, route, format),
                Err(code) => code,
            }
        }
        Command::Coeff { a, b, eps, kappa, n, csv } => {
            if n == 0 {
                return usage_error("coefficient index must be positive");
            }
            let tools = match prime_tools() {
                Ok(t) => t,
                Err(code) => return code,
            };
            match params_or_exit(a, b, eps, kappa) {
                Ok(p) => cmd_coeff(&p, n, csv, &tools),
                Err(code) => code,
            }
        }
        Command::Verify { target } => cmd_verify(target),
        Command::ScanWitness { a, b, eps, kappa, prime, exponent, m_max, q_floor, q_max, q_count, k_max } => {
            let tools = match prime_tools() {
                Ok(t) => t,
                Err(code) => return code,
            };
            let ranges = SearchRanges { q_floor, q_max, q_count, k_max };
            match params_or_exit(a, b, eps, kappa) {
                Ok(p) => cmd_scan_witness(&p, prime, exponent, m_max, ranges, &tools),
                Err(code) => code,
            }
        }
        Command::PsiLemma { a, b, q_max } => cmd_psi_lemma(a, b, q_max),
        Command::CheckNumerics { suite, count, seed } => {
            if count == 0 {
                return usage_error("--count must be positive");
            }
            cmd_check_numerics(suite, count, seed)
        }
    }
}
