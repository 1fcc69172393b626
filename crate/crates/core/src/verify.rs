//! Acceptance suites `c1` ... `c10`. Each returns a [`CriterionReport`];
//! the `acceptance` integration test and `murmur verify` both run them.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::arith::{is_prime_power, list_fundamental_discriminants, sieve_primes};
use crate::dirichlet::DirichletCharacter;
use crate::elliptic::{ap, count_points, count_points_naive, EllipticCurve};
use crate::explicit::{zero_pair_term, zero_sum_truncated, DirichletFormula, EllipticFormula, Truncation, ZeroSet};
use crate::family::{
    build_kronecker_family_first, build_odd_character_family, compute_family_zeros, default_x_grid, detect_jumps,
    geometric_grid, murmuration_series_dirichlet, murmuration_series_elliptic, structure_metric, Family, FamilyKind,
    MurmurationSeries, ZeroMap, DEFAULT_GRID_POINTS, DEFAULT_JUMP_WINDOW,
};
use crate::io::{parse_curves, parse_zeros};
use crate::lfunc::{
    dirichlet_l, expected_zero_count, find_zeros, hurwitz_zeta, zero_count_slack, EvalAccuracy, HardyZ, BRACKET_WIDTH,
};

pub const TOY_CURVES: &str = include_str!("../data/toy_curves.csv");
pub const TOY_ZEROS: &str = include_str!("../data/toy_zeros.csv");

/// Non-prime-power locations compared against the jumps at 4 and 9.
pub const CONTROL_LOCATIONS: [f64; 20] = [
    6.0, 10.0, 12.0, 14.0, 15.0, 18.0, 20.0, 21.0, 22.0, 24.0, 26.0, 28.0, 30.0, 33.0, 34.0, 35.0, 36.0, 38.0, 39.0,
    40.0,
];

/// Desk-scale family size for the structure and jump criteria.
pub const DESK_FAMILY_SIZE: usize = 40;
pub const DESK_ODD_MODULUS: u64 = 541;
pub const DESK_ODD_SEED: u64 = 1;
pub const DESK_HEIGHT: f64 = 60.0;
pub const DESK_PRIME_LIMIT: u64 = 10_000;

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {} {}: {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

type Outcome = Result<String, String>;

fn timed(
    id: &'static str,
    title: &'static str,
    limit: Option<Duration>,
    body: impl FnOnce() -> Outcome,
) -> CriterionReport {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if let Some(limit) = limit {
        if elapsed > limit {
            passed = false;
            detail.push_str(&format!("; exceeded the {:.0} s budget", limit.as_secs_f64()));
        }
    }
    CriterionReport {
        id,
        title,
        passed,
        detail,
        elapsed,
    }
}

fn check(cond: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}

fn rms(values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn c1() -> CriterionReport {
    timed(
        "c1",
        "fundamental discriminants in [9000, 10000]",
        Some(Duration::from_secs(1)),
        || {
            let n = list_fundamental_discriminants(9000, 10000).len();
            check(n == 307, || format!("{n} entries, expected 307"))?;
            Ok(format!("{n} entries (both endpoints inclusive)"))
        },
    )
}

/// Grid used by [`c2`]: 500 geometric points in `[20, 2000]` minus those
/// within 0.5 of a prime power.
pub fn closure_grid() -> Vec<f64> {
    let powers: Vec<f64> = (2..=2001u64).filter(|&n| is_prime_power(n)).map(|n| n as f64).collect();
    geometric_grid(20.0, 2000.0, 500)
        .expect("valid grid")
        .into_iter()
        .filter(|x| powers.iter().all(|p| (p - x).abs() >= 0.5))
        .collect()
}

pub fn c2() -> CriterionReport {
    timed(
        "c2",
        "explicit-formula closure for even Kronecker characters",
        Some(Duration::from_secs(600)),
        || {
            let acc = EvalAccuracy::default();
            let primes = sieve_primes(2001).map_err(|e| e.to_string())?;
            let grid = closure_grid();
            let mut lines = Vec::new();
            let mut failures = Vec::new();
            for d in [5i64, 8, 13, 17] {
                let chi = DirichletCharacter::kronecker(d).map_err(|e| e.to_string())?;
                let zeros = find_zeros(&chi, 60.0, &acc, None).map_err(|e| e.to_string())?;
                let formula = DirichletFormula::new(&chi, &primes, true, &acc).map_err(|e| e.to_string())?;
                let set = ZeroSet::SelfConjugate(&zeros);
                let mut residual_rms = Vec::new();
                for t in [20.0, 40.0, 60.0] {
                    let trunc = Truncation::Height(t);
                    let r = grid
                        .iter()
                        .map(|&x| formula.sample(set, x, trunc).map(|s| s.residual.norm()))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| e.to_string())?;
                    residual_rms.push(rms(&r));
                }
                let gold: Vec<f64> = grid
                    .iter()
                    .map(|&x| x.ln() / x.sqrt() + zero_sum_truncated(set, x, Truncation::Height(60.0)).re)
                    .collect();
                let gold_rms = rms(&gold);
                let ratio = residual_rms[2] / gold_rms;
                let decreasing = residual_rms.windows(2).all(|w| w[1] < w[0]);
                lines.push(format!(
                    "D={d}: rms {:.4}/{:.4}/{:.4}, gold {:.4}, ratio {:.3}",
                    residual_rms[0], residual_rms[1], residual_rms[2], gold_rms, ratio
                ));
                if !decreasing {
                    failures.push(format!("D={d} not decreasing"));
                }
                if ratio > 0.2 {
                    failures.push(format!("D={d} ratio {ratio:.3} > 0.2"));
                }
            }
            let summary = format!("{} grid points; {}", grid.len(), lines.join("; "));
            if failures.is_empty() {
                Ok(summary)
            } else {
                Err(format!("{}; {summary}", failures.join(", ")))
            }
        },
    )
}

/// Characters checked by [`c3`].
pub fn zero_finder_corpus() -> Vec<DirichletCharacter> {
    let mut out: Vec<DirichletCharacter> = [5i64, 8, 13, 17, -3, -4, -7, 12]
        .iter()
        .map(|&d| DirichletCharacter::kronecker(d).unwrap())
        .collect();
    for (q, g, k) in [(7, 3, 1), (7, 3, 5), (13, 2, 2), (13, 2, 3), (541, 2, 17)] {
        out.push(DirichletCharacter::mod_prime(q, g, k).unwrap());
    }
    out
}

pub fn c3() -> CriterionReport {
    timed("c3", "zero-finder count and bracket sanity", None, || {
        let acc = EvalAccuracy::default();
        let height = 60.0;
        let mut counts = Vec::new();
        for chi in zero_finder_corpus() {
            let z = find_zeros(&chi, height, &acc, None).map_err(|e| e.to_string())?;
            let q = chi.modulus();
            let expected = expected_zero_count(q, height);
            let slack = zero_count_slack(q, height);
            check((z.len() as f64 - expected).abs() <= slack, || {
                format!("{}: {} zeros, expected {expected:.1} +/- {slack:.1}", chi.id(), z.len())
            })?;
            check(z.brackets.len() == z.len(), || {
                format!("{}: bracket count mismatch", chi.id())
            })?;
            let hz = HardyZ::new(&chi);
            for (&g, &(a, b)) in z.gammas.iter().zip(&z.brackets) {
                check(b - a <= BRACKET_WIDTH && a <= g && g <= b, || {
                    format!("{}: bracket [{a}, {b}] around {g}", chi.id())
                })?;
                let za = hz.eval(a, &acc).map_err(|e| e.to_string())?;
                let zb = hz.eval(b, &acc).map_err(|e| e.to_string())?;
                check(za * zb <= 0.0, || format!("{}: no sign change on [{a}, {b}]", chi.id()))?;
                let lo = hz.eval(g - 1e-6, &acc).map_err(|e| e.to_string())?;
                let hi = hz.eval(g + 1e-6, &acc).map_err(|e| e.to_string())?;
                check(lo * hi <= 0.0, || format!("{}: no straddle at {g}", chi.id()))?;
            }
            counts.push(format!("{}:{}", chi.id(), z.len()));
        }
        Ok(format!("T=60, counts {}", counts.join(" ")))
    })
}

pub fn c4() -> CriterionReport {
    timed("c4", "L-value oracles", None, || {
        let acc = EvalAccuracy::default();
        let chi = DirichletCharacter::kronecker(-4).map_err(|e| e.to_string())?;
        let l1 = dirichlet_l(Complex64::new(1.0, 0.0), &chi, &acc).map_err(|e| e.to_string())?;
        // Leibniz series, averaged over consecutive partial sums
        let n = 2_000_000usize;
        let mut partial = 0.0;
        let mut prev = 0.0;
        for k in 0..n {
            prev = partial;
            partial += if k % 2 == 0 { 1.0 } else { -1.0 } / (2 * k + 1) as f64;
        }
        let leibniz = 0.5 * (partial + prev);
        let e1 = (l1.re - leibniz).abs().max((l1.re - std::f64::consts::FRAC_PI_4).abs());
        check(e1 < 1e-8 && l1.im.abs() < 1e-12, || format!("L(1, chi_-4) = {l1}"))?;

        let h = hurwitz_zeta(Complex64::new(2.0, 0.0), 0.5, &acc).map_err(|e| e.to_string())?;
        let direct: f64 = (0..4_000_000u64)
            .map(|k| 1.0 / ((k as f64 + 0.5) * (k as f64 + 0.5)))
            .sum::<f64>()
            + 1.0 / 4_000_000.0;
        let e2 = (h.re - direct).abs();
        check(e2 < 1e-10, || format!("zeta(2, 1/2) = {h}, series {direct}"))?;

        let l2 = dirichlet_l(Complex64::new(2.0, 0.0), &chi, &acc).map_err(|e| e.to_string())?;
        let mut s = 0.0;
        let mut last = 0.0;
        for k in 0..2_000_000usize {
            last = s;
            s += if k % 2 == 0 { 1.0 } else { -1.0 } / ((2 * k + 1) as f64).powi(2);
        }
        let catalan = 0.5 * (s + last);
        let e3 = (l2.re - catalan).abs();
        check(e3 < 1e-9, || format!("L(2, chi_-4) = {l2}, series {catalan}"))?;
        Ok(format!("errors {e1:.1e}, {e2:.1e}, {e3:.1e}"))
    })
}

/// The first ten curves of the bundled corpus.
pub fn toy_curves() -> Vec<EllipticCurve> {
    parse_curves(TOY_CURVES).expect("bundled curves parse").curves
}

pub fn toy_zeros() -> ZeroMap {
    parse_zeros(TOY_ZEROS).expect("bundled zeros parse")
}

pub fn c5() -> CriterionReport {
    timed("c5", "trace of Frobenius", Some(Duration::from_secs(30)), || {
        let curves: Vec<EllipticCurve> = toy_curves().into_iter().take(10).collect();
        let primes = sieve_primes(200).map_err(|e| e.to_string())?;
        let mut checked = 0;
        for e in &curves {
            for &p in primes.primes() {
                if e.has_good_reduction(p) {
                    let fast = count_points(e, p).map_err(|err| err.to_string())?;
                    let naive = count_points_naive(e, p);
                    check(fast == naive, || format!("{} p={p}: {fast} vs {naive}", e.label()))?;
                }
                let a = ap(e, p);
                check((a * a) as f64 <= 4.0 * p as f64, || {
                    format!("{} p={p}: a_p = {a} breaks Hasse", e.label())
                })?;
                checked += 1;
            }
        }
        let c11 = EllipticCurve::new("11a1", [0, -1, 1, -10, -20], 11, 0).map_err(|e| e.to_string())?;
        let got: Vec<(u64, i64)> = [2, 3, 5, 7, 11].iter().map(|&p| (p, ap(&c11, p))).collect();
        check(got == [(2, -2), (3, -1), (5, 1), (7, -2), (11, 1)], || {
            format!("11a1 traces {got:?}")
        })?;
        Ok(format!("{} curves, {checked} (curve, p) pairs", curves.len()))
    })
}

pub fn c6() -> CriterionReport {
    timed("c6", "zero-pair identity", Some(Duration::from_secs(1)), || {
        let mut rng = Xoshiro256StarStar::seed_from_u64(6);
        let unit = |r: &mut Xoshiro256StarStar| (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let gamma = 300.0 * unit(&mut rng).max(1e-12);
            let x = (1e6f64.ln() * unit(&mut rng).max(1e-12)).exp();
            let l = x.ln();
            let direct = Complex64::from_polar(1.0, gamma * l) / Complex64::new(0.5, gamma)
                + Complex64::from_polar(1.0, -gamma * l) / Complex64::new(0.5, -gamma);
            worst = worst
                .max((direct.re - zero_pair_term(gamma, x)).abs())
                .max(direct.im.abs());
        }
        check(worst <= 1e-14, || format!("max deviation {worst:e}"))?;
        Ok(format!("10^4 samples, max deviation {worst:.1e}"))
    })
}

/// The matched desk-scale families: the first [`DESK_FAMILY_SIZE`]
/// fundamental discriminants from `kronecker_lo`, and as many seeded odd
/// characters mod [`DESK_ODD_MODULUS`].
pub fn desk_families(kronecker_lo: i64) -> Result<(Family, Family), String> {
    let kron = build_kronecker_family_first(kronecker_lo, DESK_FAMILY_SIZE).map_err(|e| e.to_string())?;
    let odd =
        build_odd_character_family(DESK_ODD_MODULUS, DESK_FAMILY_SIZE, DESK_ODD_SEED).map_err(|e| e.to_string())?;
    Ok((kron, odd))
}

fn desk_series(family: &Family, include_r: bool) -> Result<MurmurationSeries, String> {
    let acc = EvalAccuracy::default();
    let zeros = compute_family_zeros(family, DESK_HEIGHT, &acc, None).map_err(|e| e.to_string())?;
    let primes = sieve_primes(DESK_PRIME_LIMIT).map_err(|e| e.to_string())?;
    let grid = default_x_grid(&primes, DEFAULT_GRID_POINTS).map_err(|e| e.to_string())?;
    murmuration_series_dirichlet(
        family,
        &zeros,
        &grid,
        Truncation::Height(DESK_HEIGHT),
        include_r,
        &primes,
        &acc,
    )
    .map_err(|e| e.to_string())
}

pub fn c7() -> CriterionReport {
    timed(
        "c7",
        "structure ordering, Kronecker vs odd",
        Some(Duration::from_secs(1200)),
        || {
            let (kron, odd) = desk_families(5)?;
            let mk = structure_metric(&desk_series(&kron, false)?).map_err(|e| e.to_string())?;
            let mo = structure_metric(&desk_series(&odd, false)?).map_err(|e| e.to_string())?;
            let detail = format!("{} metric {mk:.4}, {} metric {mo:.4}", kron.id, odd.id);
            check(mk > mo, || detail.clone())?;
            Ok(detail)
        },
    )
}

/// `|jump|` at 4 and 9 against the median `|jump|` at the control locations.
pub fn jump_contrast(series: &MurmurationSeries) -> Result<(f64, f64, f64), String> {
    let at = detect_jumps(series, &[4.0, 9.0], DEFAULT_JUMP_WINDOW).map_err(|e| e.to_string())?;
    let size = |c: f64| at.iter().find(|j| j.location == c).map(|j| j.size.abs()).unwrap_or(0.0);
    let mut controls: Vec<f64> = detect_jumps(series, &CONTROL_LOCATIONS, DEFAULT_JUMP_WINDOW)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|j| j.size.abs())
        .collect();
    Ok((size(4.0), size(9.0), median(&mut controls)))
}

/// Variance of black over variance of blue on grid points at least
/// `exclusion` away from every prime power.
pub fn variance_ratio(series: &MurmurationSeries, exclusion: f64) -> f64 {
    let top = series.x_grid.last().copied().unwrap_or(0.0) + exclusion + 1.0;
    let powers: Vec<f64> = (2..=top as u64)
        .filter(|&n| is_prime_power(n))
        .map(|n| n as f64)
        .collect();
    let keep: Vec<usize> = (0..series.len())
        .filter(|&i| {
            let x = series.x_grid[i];
            let j = powers.partition_point(|&p| p < x);
            let near = |k: usize| powers.get(k).is_some_and(|p| (p - x).abs() < exclusion);
            !(j > 0 && near(j - 1)) && !near(j)
        })
        .collect();
    let var = |col: &[Complex64]| {
        let n = keep.len() as f64;
        let mean = keep.iter().map(|&i| col[i].re).sum::<f64>() / n;
        keep.iter().map(|&i| (col[i].re - mean).powi(2)).sum::<f64>() / n
    };
    var(&series.black) / var(&series.avg_lhs)
}

pub fn c8() -> CriterionReport {
    timed("c8", "black-curve jumps at squares of primes", None, || {
        let mut notes = Vec::new();
        let mut failures = Vec::new();

        let (kron, _) = desk_families(5)?;
        let s = desk_series(&kron, false)?;
        let (j4, j9, med) = jump_contrast(&s)?;
        notes.push(format!(
            "{}: |J4| {j4:.4}, |J9| {j9:.4}, control median {med:.4}",
            kron.id
        ));
        if !(j4 > 3.0 * med && j9 > 3.0 * med) {
            failures.push(format!("{} jumps below 3x control median", kron.id));
        }

        let curves = toy_curves();
        let zeros = toy_zeros();
        let family =
            Family::from_curves("toy-corpus", FamilyKind::EllipticCustom, curves).map_err(|e| e.to_string())?;
        let primes = sieve_primes(DESK_PRIME_LIMIT).map_err(|e| e.to_string())?;
        let grid = default_x_grid(&primes, DEFAULT_GRID_POINTS).map_err(|e| e.to_string())?;
        let es =
            murmuration_series_elliptic(&family, &zeros, &grid, Truncation::All, &primes).map_err(|e| e.to_string())?;
        let (e4, e9, emed) = jump_contrast(&es)?;
        notes.push(format!(
            "toy curves ({}): |J4| {e4:.4}, |J9| {e9:.4}, control median {emed:.4}",
            family.len()
        ));
        if !(e4 > 3.0 * emed && e9 > 3.0 * emed) {
            failures.push("toy-corpus jumps below 3x control median".to_string());
        }
        let ratio = variance_ratio(&es, DEFAULT_JUMP_WINDOW);
        notes.push(format!("toy variance ratio black/blue {ratio:.3}"));
        if ratio > 0.2 {
            failures.push(format!("toy variance ratio {ratio:.3} > 0.2"));
        }

        if failures.is_empty() {
            Ok(notes.join("; "))
        } else {
            Err(format!("{}; {}", failures.join(", "), notes.join("; ")))
        }
    })
}

fn scratch_dir(tag: &str) -> Result<PathBuf, String> {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    let dir = std::env::temp_dir().join(format!("murmur-{tag}-{}-{nanos}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    Ok(dir)
}

/// Runs every CLI command once in `dir`, returning the output files.
fn cli_round(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    std::fs::write(dir.join("curves.csv"), TOY_CURVES).map_err(|e| e.to_string())?;
    std::fs::write(dir.join("ec_zeros.csv"), TOY_ZEROS).map_err(|e| e.to_string())?;
    let commands: Vec<Vec<String>> = vec![
        vec!["sieve", "--limit", "100000", "--out", &p("primes.csv")],
        vec![
            "ap",
            "--curves",
            &p("curves.csv"),
            "--limit",
            "500",
            "--out",
            &p("ap.csv"),
        ],
        vec![
            "zeros",
            "--kind",
            "kronecker",
            "--lo",
            "5",
            "--hi",
            "40",
            "--height",
            "30",
            "--out",
            &p("kz.csv"),
        ],
        vec![
            "zeros",
            "--kind",
            "modprime",
            "--modulus",
            "101",
            "--count",
            "4",
            "--seed",
            "7",
            "--height",
            "20",
            "--out",
            &p("oz.csv"),
        ],
        vec![
            "hist",
            "--zeros",
            &p("kz.csv"),
            "--bin-width",
            "0.5",
            "--gamma-max",
            "30",
            "--normalize",
            "--out",
            &p("h.csv"),
        ],
        vec![
            "murmurate",
            "--kind",
            "ec",
            "--curves",
            &p("curves.csv"),
            "--zeros",
            &p("ec_zeros.csv"),
            "--trunc",
            "count:100",
            "--grid",
            "500",
            "--xmax",
            "5000",
            "--out",
            &p("ec.csv"),
        ],
        vec![
            "murmurate",
            "--kind",
            "kronecker",
            "--lo",
            "5",
            "--hi",
            "40",
            "--zeros",
            &p("kz.csv"),
            "--include-r",
            "--grid",
            "500",
            "--xmax",
            "5000",
            "--out",
            &p("kron.csv"),
        ],
        vec![
            "murmurate",
            "--kind",
            "odd",
            "--modulus",
            "101",
            "--count",
            "4",
            "--seed",
            "7",
            "--height",
            "20",
            "--grid",
            "300",
            "--xmax",
            "3000",
            "--out",
            &p("odd.csv"),
        ],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    let mut outputs = Vec::new();
    for args in commands {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = crate::cli::run(
            std::iter::once("murmur".to_string()).chain(args.iter().cloned()),
            &mut out,
            &mut err,
        );
        if code != 0 {
            return Err(format!(
                "{} exited {code}: {}",
                args[0],
                String::from_utf8_lossy(&err).trim()
            ));
        }
        let target = args
            .iter()
            .skip_while(|a| *a != "--out")
            .nth(1)
            .cloned()
            .unwrap_or_default();
        let bytes = std::fs::read(&target).map_err(|e| format!("{target}: {e}"))?;
        outputs.push((args[0].clone(), bytes));
        outputs.push((format!("{} stdout", args[0]), out));
    }
    Ok(outputs)
}

pub fn c9() -> CriterionReport {
    timed("c9", "byte-identical CLI re-runs", None, || {
        let (a, b) = (scratch_dir("c9a")?, scratch_dir("c9b")?);
        let first = cli_round(&a);
        let second = cli_round(&b);
        let _ = std::fs::remove_dir_all(&a);
        let _ = std::fs::remove_dir_all(&b);
        let (first, second) = (first?, second?);
        let normalize =
            |bytes: &[u8], dir: &Path| String::from_utf8_lossy(bytes).replace(&*dir.to_string_lossy(), "DIR");
        let mut files = 0;
        for ((name, x), (_, y)) in first.iter().zip(&second) {
            if name.ends_with("stdout") {
                check(normalize(x, &a) == normalize(y, &b), || format!("{name} differs"))?;
            } else {
                check(x == y, || format!("{name} output differs between runs"))?;
                check(!x.is_empty(), || format!("{name} wrote nothing"))?;
                files += 1;
            }
        }
        Ok(format!("{files} output files identical across two runs"))
    })
}

fn random_split(n: usize, rng: &mut Xoshiro256StarStar) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        idx.swap(i, j);
    }
    let size = 2 + (rng.next_u64() % (n as u64 - 2)) as usize;
    let cut = 1 + (rng.next_u64() % (size as u64 - 1)) as usize;
    let mut a = idx[..cut].to_vec();
    let mut b = idx[cut..size].to_vec();
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

fn linear_gap(u: &MurmurationSeries, a: &MurmurationSeries, b: &MurmurationSeries) -> f64 {
    let n = (a.metadata.member_count + b.metadata.member_count) as f64;
    let (wa, wb) = (a.metadata.member_count as f64 / n, b.metadata.member_count as f64 / n);
    let cols = |s: &MurmurationSeries| [s.avg_lhs.clone(), s.avg_zero_term.clone(), s.black.clone()];
    let (cu, ca, cb) = (cols(u), cols(a), cols(b));
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        for i in 0..u.len() {
            worst = worst.max((cu[k][i] - (wa * ca[k][i] + wb * cb[k][i])).norm());
        }
    }
    worst
}

pub fn c10() -> CriterionReport {
    timed("c10", "linearity and heuristic consistency", None, || {
        let mut rng = Xoshiro256StarStar::seed_from_u64(10);
        let primes = sieve_primes(3001).map_err(|e| e.to_string())?;
        let grid = geometric_grid(2.0, 3000.0, 300).map_err(|e| e.to_string())?;
        let acc = EvalAccuracy::default();
        let mut worst_linear: f64 = 0.0;
        let mut worst_heuristic: f64 = 0.0;

        let curves = toy_curves();
        let ezeros = toy_zeros();
        let formulas: Vec<EllipticFormula> = curves.iter().map(|e| EllipticFormula::new(e, &primes)).collect();
        for round in 0..6 {
            let trunc = [Truncation::All, Truncation::Count(50), Truncation::Height(80.0)][round % 3];
            let (ia, ib) = random_split(curves.len(), &mut rng);
            let pick = |ix: &[usize]| ix.iter().map(|&i| curves[i].clone()).collect::<Vec<_>>();
            let all: Vec<usize> = ia.iter().chain(&ib).copied().collect();
            let build = |ix: &[usize], id: &str| {
                let fam = Family::from_curves(id, FamilyKind::EllipticCustom, pick(ix)).map_err(|e| e.to_string())?;
                murmuration_series_elliptic(&fam, &ezeros, &grid, trunc, &primes).map_err(|e| e.to_string())
            };
            let (sa, sb, su) = (build(&ia, "a")?, build(&ib, "b")?, build(&all, "u")?);
            worst_linear = worst_linear.max(linear_gap(&su, &sa, &sb));
            let base = su.metadata.mean_rank_term.unwrap_or(f64::NAN);
            for (i, &x) in grid.iter().enumerate() {
                let mut mean = 0.0;
                for &m in &all {
                    let f = &formulas[m];
                    let s = f
                        .sample(&ezeros[f.curve().label()], x, trunc)
                        .map_err(|e| e.to_string())?;
                    mean += s.residual.re;
                }
                mean /= all.len() as f64;
                worst_heuristic = worst_heuristic.max((su.black[i].re - base - mean).abs());
            }
        }

        let chars: Vec<DirichletCharacter> = list_fundamental_discriminants(5, 120)
            .into_iter()
            .map(|d| DirichletCharacter::kronecker(d).unwrap())
            .collect();
        let whole =
            Family::from_characters("k", FamilyKind::KroneckerRange, chars.clone()).map_err(|e| e.to_string())?;
        let czeros = compute_family_zeros(&whole, 20.0, &acc, None).map_err(|e| e.to_string())?;
        let cformulas = chars
            .iter()
            .map(|c| DirichletFormula::new(c, &primes, true, &acc))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        for _ in 0..4 {
            let trunc = Truncation::Height(20.0);
            let (ia, ib) = random_split(chars.len(), &mut rng);
            let all: Vec<usize> = ia.iter().chain(&ib).copied().collect();
            let build = |ix: &[usize], id: &str| {
                let members = ix.iter().map(|&i| chars[i].clone()).collect();
                let fam =
                    Family::from_characters(id, FamilyKind::KroneckerRange, members).map_err(|e| e.to_string())?;
                murmuration_series_dirichlet(&fam, &czeros, &grid, trunc, true, &primes, &acc)
                    .map_err(|e| e.to_string())
            };
            let (sa, sb, su) = (build(&ia, "a")?, build(&ib, "b")?, build(&all, "u")?);
            worst_linear = worst_linear.max(linear_gap(&su, &sa, &sb));
            for (i, &x) in grid.iter().enumerate() {
                let mut mean = Complex64::new(0.0, 0.0);
                for &m in &all {
                    let z = &czeros[&chars[m].id()];
                    mean += cformulas[m]
                        .sample(ZeroSet::SelfConjugate(z), x, trunc)
                        .map_err(|e| e.to_string())?
                        .residual;
                }
                mean /= all.len() as f64;
                worst_heuristic = worst_heuristic.max((su.black[i] - mean).norm());
            }
        }
        check(worst_linear <= 1e-12, || format!("linearity gap {worst_linear:e}"))?;
        check(worst_heuristic <= 1e-12, || {
            format!("heuristic gap {worst_heuristic:e}")
        })?;
        Ok(format!(
            "10 random splits, linearity gap {worst_linear:.1e}, heuristic gap {worst_heuristic:.1e}"
        ))
    })
}

type Criterion = fn() -> CriterionReport;

pub const CRITERIA: [(&str, Criterion); 10] = [
    ("c1", c1),
    ("c2", c2),
    ("c3", c3),
    ("c4", c4),
    ("c5", c5),
    ("c6", c6),
    ("c7", c7),
    ("c8", c8),
    ("c9", c9),
    ("c10", c10),
];

/// Suites taking seconds rather than minutes.
pub const QUICK: [&str; 7] = ["c1", "c3", "c4", "c5", "c6", "c9", "c10"];

/// Runs `all`, `quick` or a single criterion, printing one line each.
/// Returns whether every criterion passed.
pub fn run_suite(name: &str, out: &mut dyn Write) -> Result<bool, String> {
    let selected: Vec<&(&str, Criterion)> = match name {
        "all" => CRITERIA.iter().collect(),
        "quick" => CRITERIA.iter().filter(|(id, _)| QUICK.contains(id)).collect(),
        _ => CRITERIA.iter().filter(|(id, _)| *id == name).collect(),
    };
    if selected.is_empty() {
        return Err(format!("unknown suite {name:?}; expected all, quick or c1 ... c10"));
    }
    let mut all_passed = true;
    for (_, run) in selected {
        let report = run();
        all_passed &= report.passed;
        writeln!(out, "{report}").map_err(|e| e.to_string())?;
    }
    Ok(all_passed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lfunc::ZeroList;

    #[test]
    fn closure_grid_avoids_prime_powers() {
        let g = closure_grid();
        assert!(g.len() > 300 && g.len() < 500);
        for x in &g {
            let n = x.round() as u64;
            for m in n.saturating_sub(1)..=n + 1 {
                if is_prime_power(m) {
                    assert!((m as f64 - x).abs() >= 0.5);
                }
            }
        }
    }

    #[test]
    fn variance_ratio_of_identical_columns_is_one() {
        let grid = geometric_grid(2.0, 100.0, 400).unwrap();
        let col: Vec<Complex64> = grid.iter().map(|x| Complex64::new(x.sin(), 0.0)).collect();
        let s = MurmurationSeries {
            x_grid: grid,
            avg_lhs: col.clone(),
            avg_zero_term: col.clone(),
            black: col,
            metadata: crate::family::SeriesMetadata {
                family_id: "t".into(),
                member_count: 1,
                truncation: Truncation::All,
                mean_rank_term: None,
                include_r: false,
            },
        };
        assert!((variance_ratio(&s, 0.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn unknown_suite_rejected() {
        assert!(run_suite("c11", &mut Vec::new()).is_err());
    }

    #[test]
    fn quick_criteria_pass() {
        for id in ["c1", "c4", "c5", "c6"] {
            let mut out = Vec::new();
            assert!(run_suite(id, &mut out).unwrap(), "{}", String::from_utf8_lossy(&out));
        }
    }

    #[test]
    fn toy_zero_ids_match_curves() {
        let zeros = toy_zeros();
        for e in toy_curves() {
            let list: &ZeroList = &zeros[e.label()];
            assert!(list.len() >= 100, "{}", e.label());
        }
    }
}
