//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::collections::BTreeSet;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use autoseq::arith::{self, SieveConfig};
use autoseq::arrangement;
use autoseq::automaton::{self, cerny, periodic_dfa, thue_morse};
use autoseq::cli;
use autoseq::complexity::{self, SubwordOptions};
use autoseq::equidist;
use autoseq::exactmath::{self, ExponentC};
use autoseq::sequences::{self, IndexMode, SequenceSpec, Weight};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn c(p: u32, q: u32) -> ExponentC {
    ExponentC::new(p, q).unwrap()
}

/// `⌊n^{p/q}⌋` from a floating-point enclosure, refined by fixed-point
/// bisection with 256 fractional bits when the enclosure straddles an integer.
fn floor_power_oracle(n: u64, p: u32, q: u32) -> BigUint {
    let v = (n as f64).powf(p as f64 / q as f64);
    let (lo, hi) = (v * (1.0 - 1e-14), v * (1.0 + 1e-14));
    if lo.floor() == hi.floor() && hi < 2f64.powi(52) {
        return BigUint::from(lo.floor() as u64);
    }
    const FRAC: usize = 256;
    let target = num_traits::pow(BigUint::from(n), p as usize) << (FRAC * q as usize);
    // Largest Y with Y^q ≤ n^p·2^(256q), by bisection.
    let mut a = BigUint::from(lo.max(0.0).floor() as u64) << FRAC;
    let mut b = (BigUint::from(hi.ceil() as u64) + 2u32) << FRAC;
    while &b - &a > BigUint::one() {
        let mid: BigUint = (&a + &b) >> 1;
        if num_traits::pow(mid.clone(), q as usize) <= target {
            a = mid;
        } else {
            b = mid;
        }
    }
    // n^c ∈ [a, a+1)/2^256, and n^c = a/2^256 exactly iff a^q equals the target.
    a >> FRAC
}

fn criterion_1() -> Outcome {
    let cc = c(3, 2);
    let t = Instant::now();
    let mut mismatches = 0u64;
    for n in 1..=1_000_000u64 {
        if exactmath::ps_floor(n, cc) != floor_power_oracle(n, 3, 2) {
            mismatches += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    // Timing of ps_floor alone, single-threaded.
    let t = Instant::now();
    let mut acc = 0u128;
    for n in 1..=1_000_000u64 {
        acc = acc.wrapping_add(exactmath::ps_floor_u128(n, cc).unwrap());
    }
    let ps_secs = t.elapsed().as_secs_f64();
    std::hint::black_box(acc);
    outcome(
        mismatches == 0 && ps_secs < 30.0,
        format!("{mismatches} mismatches over n ≤ 10^6; ps_floor {ps_secs:.2}s, with oracle {secs:.2}s"),
    )
}

fn freq_check(spec: &SequenceSpec, n: u64, target: f64, tol: f64) -> Outcome {
    let f = sequences::letter_frequencies(spec, n).unwrap();
    let rates = f.rates();
    let worst = rates.values().map(|r| (r - target).abs()).fold(0.0, f64::max);
    let ok = rates.len() == 4 && worst <= tol;
    outcome(ok, format!("rates {:?}, max |rate − {target}| = {worst:.5} (tol {tol})", rates.values().map(|r| format!("{r:.5}")).collect::<Vec<_>>()))
}

fn criterion_2() -> Outcome {
    let spec = SequenceSpec::piatetski(periodic_dfa(4, 2).unwrap(), c(3, 2));
    freq_check(&spec, 1_000_000, 0.25, 0.01)
}

fn criterion_3() -> Outcome {
    let spec = SequenceSpec::new(periodic_dfa(4, 2).unwrap(), IndexMode::PiatetskiPrimes(c(3, 2)));
    let pi = arith::primes_up_to(1_000_000).count() as u64;
    let o = freq_check(&spec, pi, 0.25, 0.02);
    outcome(o.pass, format!("π(10^6) = {pi}; {}", o.detail))
}

fn criterion_4() -> Outcome {
    let spec = SequenceSpec::piatetski(periodic_dfa(4, 2).unwrap(), c(3, 2));
    let t = sequences::weighted_totals(&spec, Weight::Mobius, 1_000_000, &SieveConfig::default()).unwrap();
    let exact = t.exact.unwrap();
    let worst = exact.values().map(|v| v.unsigned_abs()).max().unwrap_or(0);
    outcome(exact.len() == 4 && worst <= 10_000, format!("per-letter Möbius sums {:?}, max |·| = {worst} (bound 10000)", exact.values().collect::<Vec<_>>()))
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, cc) in [("mod:4:2", c(3, 2)), ("mod:3:3", c(5, 3))] {
        let spec = SequenceSpec::piatetski(automaton::builtin(name).unwrap(), cc);
        let r = sequences::pnt_report(&spec, 1_000_000, None, &SieveConfig::default()).unwrap();
        let ratios: Vec<f64> = r.rows.iter().map(|row| row.ratio.unwrap_or(f64::NAN)).collect();
        let worst = ratios.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
        pass &= worst <= 0.02 && worst.is_finite();
        parts.push(format!("{name} c={cc}: max |ratio − 1| = {worst:.5}"));
    }
    outcome(pass, parts.join("; "))
}

struct ScanData {
    profile: complexity::SubwordProfile,
}

fn mod2_scan() -> ScanData {
    let spec = SequenceSpec::piatetski(periodic_dfa(2, 2).unwrap(), c(3, 2));
    // Windows start at 1..=10^7 − 64, so every letter read has n < 10^7.
    let n = 10_000_000 - 64;
    let profile = complexity::subword_count_with(&spec, 1, n, 64, &SubwordOptions::default()).unwrap();
    ScanData { profile }
}

fn criterion_6(scan: &ScanData) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for h in [8usize, 16, 24] {
        let nh = scan.profile.count(h);
        let ok = nh as f64 >= (h * h) as f64 / 4.0;
        pass &= ok;
        parts.push(format!("N_{h} = {nh} (≥ {})", h * h / 4));
    }
    let spec = SequenceSpec::piatetski(periodic_dfa(2, 2).unwrap(), c(3, 2));
    let words = complexity::lower_bound_words(2, 8).unwrap();
    let distinct: Vec<Vec<u32>> = words.distinct().into_iter().collect();
    let found = complexity::find_occurrences(&spec, &distinct, 10_000_000, 1).unwrap();
    let missing: Vec<&Vec<u32>> = distinct.iter().zip(&found).filter(|(_, o)| o.index().is_none()).map(|(w, _)| w).collect();
    if missing.is_empty() {
        parts.push(format!("all {} words u_(l,i) (m=2, H=8) occur by n ≤ 10^7", distinct.len()));
    } else {
        parts.push(format!("downgraded to counts: {} of {} u_(l,i) not found by 10^7: {missing:?}", missing.len(), distinct.len()));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_7(scan: &ScanData) -> Outcome {
    let slope = complexity::exponent_fit(&scan.profile, 8, 64);
    outcome((2.0..=6.0).contains(&slope), format!("slope of ln N_H on ln H, H = 8..64, n < 10^7: {slope:.4} (need [2, 6])"))
}

fn entropy_max(spec: &SequenceSpec) -> f64 {
    let p = complexity::subword_count(spec, 1, 1_000_000, 14).unwrap();
    (8..=14).map(|h| (p.count(h) as f64).log2() / h as f64).fold(0.0, f64::max)
}

fn criterion_8() -> Outcome {
    let mod2 = entropy_max(&SequenceSpec::piatetski(periodic_dfa(2, 2).unwrap(), c(3, 2)));
    let tm = entropy_max(&SequenceSpec::piatetski(thue_morse(), c(4, 3)));
    outcome(
        mod2 <= 0.2 && tm >= 0.8,
        format!("mod 2, c=3/2: {mod2:.4} (need ≤ 0.2); Thue–Morse, c=4/3: {tm:.4} (need ≥ 0.8)"),
    )
}

fn criterion_9() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let tm = automaton::is_synchronizing(&thue_morse());
    pass &= !tm.synchronizing;
    parts.push(format!("thue_morse synchronizing = {}", tm.synchronizing));
    let p = automaton::is_synchronizing(&periodic_dfa(4, 2).unwrap());
    let plen = p.reset_word.as_ref().map(Vec::len);
    pass &= p.synchronizing && plen == Some(2);
    parts.push(format!("periodic_dfa(4,2) reset length {plen:?}"));
    for n in 2..=5u32 {
        let len = automaton::shortest_reset_word(&cerny(n).unwrap()).unwrap().map(|w| w.len());
        let want = ((n - 1) * (n - 1)) as usize;
        pass &= len == Some(want);
        parts.push(format!("cerny({n}) {len:?}/{want}"));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_gap = 0.0f64;
    let mut et_failures = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=200);
        let pts: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let nf = n as f64;
        let mut brute = 0.0f64;
        for &a in pts.iter().chain([1.0].iter()) {
            let lt = pts.iter().filter(|&&x| x < a).count() as f64;
            let le = pts.iter().filter(|&&x| x <= a).count() as f64;
            brute = brute.max((lt / nf - a).abs()).max((le / nf - a).abs());
        }
        let d = equidist::star_discrepancy(&pts).unwrap();
        worst_gap = worst_gap.max((d - brute).abs());
        for k in [1, 2, 8, 32] {
            if equidist::erdos_turan_bound(&pts, k, 3.0).unwrap() < d {
                et_failures += 1;
            }
        }
    }
    outcome(
        worst_gap <= 1e-12 && et_failures == 0,
        format!("max |sorted − brute| = {worst_gap:.2e}; Erdős–Turán (C=3, K ∈ {{1,2,8,32}}) below d_star in {et_failures} cases"),
    )
}

fn criterion_11() -> Outcome {
    let cfg = SieveConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [2u64, 3, 5] {
        for w in [Weight::Unit, Weight::Mangoldt] {
            let r = equidist::residue_counts(c(3, 2), m, 1_000_000, w, &cfg).unwrap();
            let rel = r.max_rel_dev.unwrap_or(f64::INFINITY);
            pass &= rel <= 0.01;
            parts.push(format!("m={m} {w}: {rel:.2e}"));
        }
        let r = equidist::residue_counts(c(3, 2), m, 1_000_000, Weight::Mobius, &cfg).unwrap();
        let sum: i64 = r.exact.unwrap().iter().sum();
        let mertens = arith::mertens(1_000_000).unwrap();
        pass &= sum == mertens;
        parts.push(format!("m={m} mobius Σ = {sum} (M = {mertens})"));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_12() -> Outcome {
    let spec = SequenceSpec::piatetski(periodic_dfa(2, 2).unwrap(), c(3, 2));
    let letters = spec.stream(10_000, 1_000_000 - 10_000 + 1).unwrap();
    let observed = complexity::distinct_factors(&letters, 5);
    let model = arrangement::enumerate_words_2d(2, 5, None).unwrap();
    let missing: Vec<_> = observed.iter().filter(|w| !model.contains_key(*w)).collect();
    let bound = arrangement::count_cells_bound(2, 5, 1).unwrap();
    let pass = missing.is_empty() && BigUint::from(model.len()) <= bound;
    outcome(
        pass,
        format!("{} observed words, {} realized by the model, {} missing; cell bound {bound}", observed.len(), model.len(), missing.len()),
    )
}

fn criterion_13() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut bad = 0;
    for _ in 0..1000 {
        let len = rng.gen_range(2..=7);
        let mut set = BTreeSet::new();
        while set.len() < len {
            set.insert(rng.gen_range(-1000i64..=1000));
        }
        let mut hs: Vec<i64> = set.into_iter().collect();
        // Unsorted order as well.
        let rot = rng.gen_range(0..len);
        hs.rotate_left(rot);
        if !arrangement::vandermonde_identity_check(&hs).unwrap().equal {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{bad} of 1000 tuples unequal"))
}

fn criterion_14() -> Outcome {
    let k = automaton::kernel(&thue_morse()).unwrap();
    let p = periodic_dfa(4, 2).unwrap();
    let word = automaton::is_synchronizing(&p).reset_word.unwrap();
    let shared = automaton::kernel_shares_reset_word(&p, &word).unwrap();
    outcome(
        k.output_functions.len() == 2 && shared,
        format!("thue_morse kernel output functions: {}; periodic_dfa(4,2) reset word {word:?} shared by all kernel elements: {shared}", k.output_functions.len()),
    )
}

/// Report body: everything from the column line on.
fn body(text: &str) -> String {
    text.lines().skip_while(|l| l.starts_with("# ")).collect::<Vec<_>>().join("\n")
}

fn criterion_15() -> Outcome {
    let runs: Vec<Vec<&str>> = vec![
        vec!["freq", "--builtin", "mod:4:2", "--c", "3/2", "--N", "300000"],
        vec!["freq", "--builtin", "mod:4:2", "--c", "3/2", "--primes", "--N", "20000"],
        vec!["pnt", "--builtin", "mod:3:3", "--c", "5/3", "--N", "300000"],
        vec!["mobius", "--builtin", "mod:4:2", "--c", "3/2", "--N", "300000"],
        vec!["subwords", "--builtin", "mod:2:2", "--c", "3/2", "--N", "300000", "--Hmax", "40"],
        vec!["subwords", "--builtin", "mod:2:2", "--c", "3/2", "--N", "20000", "--Hmax", "150"],
        vec!["residues", "--c", "3/2", "--m", "5", "--N", "300000", "--weight", "mangoldt"],
        vec!["expsum", "--A", "1", "--c", "3/2", "--N", "100000", "--weight", "mangoldt"],
        vec!["discrepancy", "--c", "3/2", "--N", "5000", "--K", "16"],
        vec!["cells", "--m", "2", "--H", "5", "--c", "3/2", "--samples", "3000", "--seed", "9"],
        vec!["lowerbound", "--m", "2", "--H", "8", "--builtin", "mod:2:2", "--c", "3/2", "--limit", "200000"],
        vec!["sieve", "--N", "300000"],
        vec!["sync", "--builtin", "cerny:4", "--format", "json"],
    ];
    let mut bad = Vec::new();
    for args in &runs {
        let mut bodies = Vec::new();
        for workers in ["1", "4", "8"] {
            let mut argv = vec!["autoseq"];
            argv.extend(args.iter());
            argv.extend(["--workers", workers]);
            let (code, out, err) = cli::run_captured(&argv);
            if code != 0 {
                bad.push(format!("{} exited {code}: {err}", args[0]));
            }
            let b = if argv.contains(&"json") {
                let mut v: serde_json::Value = serde_json::from_str(&out).unwrap_or_default();
                v.as_object_mut().map(|o| o.remove("config"));
                v.to_string()
            } else {
                body(&out)
            };
            bodies.push(b);
        }
        if bodies.iter().any(|b| b != &bodies[0]) || bodies[0].is_empty() {
            bad.push(format!("{} differs across worker counts", args.join(" ")));
        }
    }
    outcome(bad.is_empty(), if bad.is_empty() { format!("{} configurations byte-identical at 1, 4, 8 workers", runs.len()) } else { bad.join("; ") })
}

fn main() {
    let started = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut run = |id: u32, title: &'static str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let mut o = f();
        o.detail = format!("{} [{:.1}s]", o.detail, t.elapsed().as_secs_f64());
        println!("{} #{id:<2} {title}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, title, o));
    };
    run(1, "exact floor(n^(3/2))", &criterion_1);
    run(2, "letter frequencies along floor(n^c)", &criterion_2);
    run(3, "letter frequencies along floor(p^c)", &criterion_3);
    run(4, "Möbius-weighted letter sums", &criterion_4);
    run(5, "Λ-weighted letter sums vs θ̂·Ψ(N)", &criterion_5);
    let scan = mod2_scan();
    run(6, "N_H ≥ H²/4 and the words u_(l,i)", &|| criterion_6(&scan));
    run(7, "polynomial growth of N_H", &|| criterion_7(&scan));
    run(8, "entropy slope contrast", &criterion_8);
    run(9, "synchronization suite", &criterion_9);
    run(10, "discrepancy oracle and Erdős–Turán", &criterion_10);
    run(11, "residue classes of floor(n^c)", &criterion_11);
    run(12, "strip model cross-validation", &criterion_12);
    run(13, "Vandermonde identity", &criterion_13);
    run(14, "kernel and shared reset word", &criterion_14);
    run(15, "CLI determinism across worker counts", &criterion_15);
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed{} in {:.1}s",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" ({failed:?})") },
        started.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
