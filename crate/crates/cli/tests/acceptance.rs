//! Exit criteria, one line per criterion. Command-level checks run the
//! `diagsurf` binary; the rest call the library.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use diagsurf::cubic::{cubic_soluble_at, q3_bad_set};
use diagsurf::density::{a_coeff, closed_form, sigma_p_cubic, v_coeff};
use diagsurf::padic::PrimeTable;
use diagsurf::quartic::quartic_soluble_at;
use diagsurf::search::{search_diagonal, DEFAULT_NODE_BUDGET};

const BIN: &str = env!("CARGO_BIN_EXE_diagsurf");

struct Run {
    stdout: Vec<u8>,
    json: Value,
    elapsed: Duration,
}

fn cli(args: &[&str]) -> Result<Run, String> {
    let start = Instant::now();
    let out = Command::new(BIN)
        .args(args)
        .output()
        .map_err(|e| format!("cannot run {BIN}: {e}"))?;
    let elapsed = start.elapsed();
    if !out.status.success() {
        return Err(format!(
            "`diagsurf {}` exited with {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    let json = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    Ok(Run {
        stdout: out.stdout,
        json,
        elapsed,
    })
}

fn num(v: &Value, path: &[&str]) -> Result<f64, String> {
    let mut cur = v;
    for key in path {
        cur = cur
            .get(key)
            .ok_or_else(|| format!("missing key {key:?} in {}", path.join(".")))?;
    }
    cur.as_f64().ok_or_else(|| format!("{} is not a number", path.join(".")))
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Each check returns `Ok(detail)` when the criterion holds and `Err(detail)`
/// otherwise.
type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn euler_product() -> Outcome {
    let r = cli(&["cubic", "euler-product", "--limit", "1000000", "--threads", "1"])?;
    let value = num(&r.json, &["results", "product", "partial_product"])?;
    let secs = r.elapsed.as_secs_f64();
    let detail = format!("product {value:.6} vs 0.860564 (tol 1e-4), {secs:.1} s (limit 60 s)");
    if (value - 0.860564).abs() <= 1e-4 && secs < 60.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn exact_identities() -> Outcome {
    let table = PrimeTable::new(10_000).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for &p in table.primes() {
        let p = p as u64;
        let v: Vec<BigRational> = (1..=5).map(|i| v_coeff(p, i).unwrap()).collect();
        let mass: BigRational = v.iter().sum();
        if !mass.is_one() {
            return Err(format!("sum of V_i at p = {p} is {mass}"));
        }
        let sum: BigRational = (1..=5).map(|i| a_coeff(p, i).unwrap() * &v[i - 1]).sum();
        let expected = closed_form(p).unwrap_or_else(BigRational::one);
        if sum != expected {
            return Err(format!("p = {p}: sum A_i V_i = {sum}, closed form {expected}"));
        }
        if sigma_p_cubic(p).map_err(|e| e.to_string())?.value != sum {
            return Err(format!("p = {p}: sigma_p disagrees with sum A_i V_i"));
        }
        checked += 1;
    }
    Ok(format!("{checked} primes up to 10^4, exact"))
}

fn sigma_three() -> Outcome {
    let pre = num_traits::pow(q(2, 3), 3) / num_traits::pow(q(26, 27), 3);
    let poly = BigRational::one()
        + q(3, 3)
        + q(46, 81)
        + q(7, 27)
        + q(62, 9 * 81)
        + q(19, 9 * 243)
        + q(1, 729);
    let expected = pre * poly;
    let got = sigma_p_cubic(3).map_err(|e| e.to_string())?.value;
    if got == expected {
        Ok(format!("sigma_3 = {got}"))
    } else {
        Err(format!("sigma_3 = {got}, expected {expected}"))
    }
}

fn random_cubic(rng: &mut ChaCha8Rng, p: i128) -> [i128; 4] {
    std::array::from_fn(|_| {
        let unit = loop {
            let u = rng.random_range(1..10_000i128);
            if u % p != 0 {
                break u;
            }
        };
        let sign = if rng.random_bool(0.5) { 1 } else { -1 };
        sign * unit * p.pow(rng.random_range(0..=5))
    })
}

fn criterion_vs_search() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut insoluble = Vec::new();
    for p in [3u64, 7, 13, 31] {
        let mut bad = 0;
        for _ in 0..10_000 {
            let a = random_cubic(&mut rng, p as i128);
            let rule = cubic_soluble_at(a, p).map_err(|e| e.to_string())?;
            let search = search_diagonal(3, a, p, DEFAULT_NODE_BUDGET)
                .map_err(|e| e.to_string())?
                .is_soluble()
                .ok_or_else(|| format!("search undecided on {a:?} at p = {p}"))?;
            if rule != search {
                return Err(format!("{a:?} at p = {p}: criterion {rule}, search {search}"));
            }
            bad += usize::from(!rule);
        }
        insoluble.push(format!("p={p}: {bad} insoluble"));
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("0 disagreements in 4 x 10^4 ({}), {secs:.1} s", insoluble.join(", "));
    if secs < 300.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn remark_examples() -> Outcome {
    for a in [[1, 2, 4, 9], [-1, 2, 4, 9]] {
        let rule = cubic_soluble_at(a, 3).map_err(|e| e.to_string())?;
        let search = search_diagonal(3, a, 3, DEFAULT_NODE_BUDGET)
            .map_err(|e| e.to_string())?
            .is_soluble();
        if rule || search != Some(false) {
            return Err(format!("{a:?}: criterion {rule}, search {search:?}"));
        }
    }
    let units: Vec<i128> = (1..9).filter(|u| u % 3 != 0).collect();
    let (mut bad, mut total) = (0i64, 0i64);
    for &u0 in &units {
        for &u1 in &units {
            for &u2 in &units {
                for &u3 in &units {
                    let a = [u0, u1, u2, 9 * u3];
                    let rule = cubic_soluble_at(a, 3).map_err(|e| e.to_string())?;
                    let search = search_diagonal(3, a, 3, DEFAULT_NODE_BUDGET)
                        .map_err(|e| e.to_string())?
                        .is_soluble();
                    if search != Some(rule) {
                        return Err(format!("{a:?}: criterion {rule}, search {search:?}"));
                    }
                    total += 1;
                    bad += i64::from(!rule);
                }
            }
        }
    }
    let fraction = q(bad, total);
    if fraction == q(2, 9) {
        Ok(format!("both examples insoluble; class sweep {bad}/{total} = 2/9"))
    } else {
        Err(format!("class sweep insoluble fraction {fraction}, expected 2/9"))
    }
}

fn bad_set_size() -> Outcome {
    match q3_bad_set().len() {
        48 => Ok("48 elements".into()),
        n => Err(format!("{n} elements, expected 48")),
    }
}

fn cubic_empirical() -> Outcome {
    let r = cli(&["cubic", "empirical", "--height", "50"])?;
    let f = num(&r.json, &["results", "empirical", "fraction"])?;
    let detail = format!(
        "fraction {f:.4} vs 0.8606 (tol 0.02), {:.1} s",
        r.elapsed.as_secs_f64()
    );
    if (f - 0.8606).abs() <= 0.02 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn quartic_mc() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (p, target) in [("2", 0.55), ("3", 0.87), ("5", 0.79)] {
        let r = cli(&[
            "quartic", "mc-density", "--prime", p, "--samples", "1000000", "--seed", "42",
        ])?;
        let f = num(&r.json, &["results", "soluble_fraction"])?;
        let u = num(&r.json, &["results", "undecided_fraction"])?;
        ok &= (f - target).abs() <= 0.02 && u < 1e-4;
        parts.push(format!("sigma_{p} {f:.4} vs {target} (undecided {u})"));
    }
    let detail = format!("{} (tol 0.02)", parts.join(", "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn geometric_quartics() -> Outcome {
    for p in [2i128, 3, 5, 7, 11] {
        let a = [1, p, p * p, p * p * p];
        if quartic_soluble_at(a, p as u64).map_err(|e| e.to_string())? {
            return Err(format!("{a:?} soluble at {p}"));
        }
    }
    Ok("insoluble at p = 2, 3, 5, 7, 11".into())
}

fn quartic_empirical() -> Outcome {
    let r = cli(&["quartic", "empirical", "--height", "30"])?;
    let f = num(&r.json, &["results", "empirical", "fraction"])?;
    let note = r.json["results"]["archimedean_discrepancy"].is_string();
    let detail = format!(
        "fraction {f:.4} vs 0.24 (tol 0.03), discrepancy note {}, {:.1} s",
        if note { "present" } else { "missing" },
        r.elapsed.as_secs_f64()
    );
    if (f - 0.24).abs() <= 0.03 && note {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn transversality_decay() -> Outcome {
    let r = cli(&[
        "sieve",
        "transversality",
        "--heights",
        "100,200,400,800",
        "--min-prime",
        "10",
    ])?;
    let rows = r.json["results"]["rows"]
        .as_array()
        .ok_or("missing rows")?
        .clone();
    let fractions: Vec<f64> = rows
        .iter()
        .map(|row| num(row, &["fraction"]))
        .collect::<Result<_, _>>()?;
    let scaled: Vec<f64> = rows
        .iter()
        .map(|row| num(row, &["fraction_times_logB"]))
        .collect::<Result<_, _>>()?;
    let decreasing = fractions.windows(2).all(|w| w[1] < w[0]);
    let hi = scaled.iter().cloned().fold(f64::MIN, f64::max);
    let lo = scaled.iter().cloned().fold(f64::MAX, f64::min);
    let detail = format!(
        "fractions {fractions:.5?} ({}), fraction*log B spread {:.2}x (limit 2x), {:.1} s",
        if decreasing { "strictly decreasing" } else { "not decreasing" },
        hi / lo,
        r.elapsed.as_secs_f64()
    );
    if decreasing && hi <= 2.0 * lo {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Outcome {
    let invocations: &[&[&str]] = &[
        &["cubic", "exact-density", "--prime", "7"],
        &["cubic", "euler-product", "--limit", "20000"],
        &["cubic", "local-test", "--coeffs", "1,2,4,9", "--prime", "3"],
        &["cubic", "global-test", "--coeffs", "-1,2,7,14"],
        &["cubic", "empirical", "--height", "8"],
        &["quartic", "mc-density", "--prime", "3", "--samples", "20000", "--seed", "7"],
        &["quartic", "local-test", "--coeffs", "1,2,4,8", "--prime", "2"],
        &["quartic", "empirical", "--height", "5"],
        &["quartic", "sigma-infty"],
        &["sieve", "transversality", "--heights", "20,40", "--min-prime", "10"],
    ];
    for args in invocations {
        let mut outputs = Vec::new();
        for threads in ["1", "1", "4"] {
            let mut full = args.to_vec();
            full.extend(["--threads", threads]);
            outputs.push(cli(&full)?.stdout);
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            return Err(format!("`diagsurf {}` output varies", args.join(" ")));
        }
    }
    Ok(format!(
        "{} subcommands byte-identical over 3 runs (threads 1, 1, 4)",
        invocations.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 12] = [
        ("euler product at 10^6", euler_product),
        ("exact identities up to 10^4", exact_identities),
        ("sigma_3 closed form", sigma_three),
        ("criterion agrees with search", criterion_vs_search),
        ("insoluble examples at 3 and class sweep", remark_examples),
        ("bad residue set size", bad_set_size),
        ("cubic empirical at height 50", cubic_empirical),
        ("quartic local densities by Monte Carlo", quartic_mc),
        ("geometric quartic family", geometric_quartics),
        ("quartic empirical at height 30", quartic_empirical),
        ("transversality decay", transversality_decay),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag}: {name}: {detail}", i + 1);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
