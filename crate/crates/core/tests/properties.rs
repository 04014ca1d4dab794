//! Generative checks of the invariants each module promises.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use autoseq::arith::{self, SieveConfig, SieveTable};
use autoseq::arrangement;
use autoseq::automaton::{self, Dfa, LeadingZeroPolicy};
use autoseq::complexity::{self, SubwordOptions};
use autoseq::equidist;
use autoseq::exactmath::{self, ExponentC};
use autoseq::sequences::{self, IntPolynomial, SequenceSpec};

fn arb_dfa() -> impl Strategy<Value = Dfa> {
    (2u32..=3, 1usize..=6).prop_flat_map(|(k, n)| {
        (
            proptest::collection::vec(proptest::collection::vec(0u32..n as u32, k as usize), n),
            proptest::collection::vec(0u32..3, n),
        )
            .prop_map(move |(delta, out)| Dfa::new(k, delta, 0, out, None, LeadingZeroPolicy::Repair).unwrap())
    })
}

fn arb_exponent() -> impl Strategy<Value = ExponentC> {
    (2u32..=9, 2u32..=5)
        .prop_filter("non-integer in (1, 3)", |&(p, q)| p % q != 0 && p > q && p < 3 * q)
        .prop_map(|(p, q)| ExponentC::new(p, q).unwrap())
}

fn words_of(k: u32, len: u32) -> impl Iterator<Item = Vec<u8>> {
    (0..(k as u64).pow(len)).map(move |mut code| {
        let mut w = vec![0u8; len as usize];
        for slot in w.iter_mut().rev() {
            *slot = (code % k as u64) as u8;
            code /= k as u64;
        }
        w
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iroot_brackets(x in proptest::collection::vec(any::<u32>(), 1..8), q in 1u32..=8) {
        let x = BigUint::from_slice(&x);
        let r = exactmath::iroot(&x, q).unwrap();
        prop_assert!(num_traits::pow(r.clone(), q as usize) <= x);
        prop_assert!(num_traits::pow(r + 1u32, q as usize) > x);
    }

    #[test]
    fn ps_floor_monotone_and_exact(n in 1u64..u64::MAX / 2, c in arb_exponent()) {
        let a = exactmath::ps_floor(n, c);
        let b = exactmath::ps_floor(n + 1, c);
        prop_assert!(a <= b);
        let lhs = num_traits::pow(a.clone(), c.denom() as usize);
        let pw = num_traits::pow(BigUint::from(n), c.numer() as usize);
        prop_assert!(lhs <= pw);
        prop_assert!(num_traits::pow(a + 1u32, c.denom() as usize) > pw);
    }

    #[test]
    fn minimize_preserves_eval(d in arb_dfa()) {
        let m = d.minimize();
        prop_assert!(m.num_states() <= d.num_states());
        prop_assert_eq!(m.minimize().num_states(), m.num_states());
        for n in 0..2000u128 {
            prop_assert_eq!(m.eval(n), d.eval(n));
        }
    }

    #[test]
    fn serialize_roundtrip(d in arb_dfa()) {
        let back = Dfa::parse(&d.serialize(), LeadingZeroPolicy::Reject).unwrap();
        for n in 0..500u128 {
            prop_assert_eq!(back.eval(n), d.eval(n));
        }
    }

    #[test]
    fn reset_words_reset(d in arb_dfa()) {
        let r = automaton::is_synchronizing(&d);
        let min = d.minimize();
        match &r.reset_word {
            Some(w) => {
                prop_assert!(r.synchronizing);
                prop_assert!(min.is_reset_word(w));
                prop_assert!(automaton::kernel_shares_reset_word(&d, w).unwrap());
                if min.num_states() <= 10 {
                    let best = automaton::shortest_reset_word(&min).unwrap().unwrap();
                    prop_assert!(best.len() <= w.len());
                    prop_assert!(min.is_reset_word(&best));
                }
            }
            None => {
                prop_assert!(!r.synchronizing);
                prop_assert_eq!(automaton::shortest_reset_word(&min).unwrap(), None);
            }
        }
    }

    #[test]
    fn nonsync_count_matches_enumeration(d in arb_dfa()) {
        let max_len = if d.base() == 2 { 10 } else { 6 };
        for len in 0..=max_len {
            let brute = words_of(d.base(), len).filter(|w| !d.is_reset_word(w)).count() as u128;
            prop_assert_eq!(automaton::count_nonsync_words(&d, len).unwrap(), brute);
        }
    }

    #[test]
    fn kernel_elements_are_subsequences(d in arb_dfa()) {
        let ker = automaton::kernel(&d).unwrap();
        let k = d.base() as u128;
        for e in &ker.elements {
            let (lambda, r) = e.lambda_r(d.base());
            let scale = k.pow(lambda);
            for n in 0..300u128 {
                prop_assert_eq!(e.eval(&d, n), d.eval(n * scale + r));
            }
        }
    }

    #[test]
    fn stream_concatenates(d in arb_dfa(), c in arb_exponent(), a in 0u64..5000, n in 0u64..300, m in 0u64..300) {
        let spec = SequenceSpec::piatetski(d, c);
        let mut left = spec.stream(a, n).unwrap();
        left.extend(spec.stream(a + n, m).unwrap());
        prop_assert_eq!(left, spec.stream_with(a, n + m, 3).unwrap());
    }

    #[test]
    fn frequencies_sum_to_one(d in arb_dfa(), c in arb_exponent(), n in 1u64..20_000) {
        let spec = SequenceSpec::piatetski(d, c);
        let f = sequences::letter_frequencies(&spec, n).unwrap();
        prop_assert_eq!(f.rate_sum_exact(), BigRational::one());
        prop_assert_eq!(f.counts.values().sum::<u64>(), n);
    }

    #[test]
    fn subword_chain_and_hash_agree(bits in proptest::collection::vec(0u32..2, 200..2000)) {
        let opts = SubwordOptions { memory_budget: 1 << 30, ..SubwordOptions::default() };
        // 150 one-bit letters do not fit a packed key, forcing the hash path.
        let h_max = 150.min(bits.len());
        let n = bits.len() - h_max + 1;
        let prof = complexity::subword_profile_of(&bits, h_max, &opts).unwrap();
        prop_assert!(prof.check_invariants().is_ok());
        for h in [1, 2, 5, 17, 64, 65, 129, h_max] {
            if h <= h_max {
                let exact = complexity::distinct_factors(&bits[..n + h - 1], h).len() as u64;
                prop_assert_eq!(prof.count(h), exact, "H = {}", h);
            }
        }
    }

    #[test]
    fn star_discrepancy_oracle(pts in proptest::collection::vec(0.0f64..1.0, 1..200)) {
        let n = pts.len() as f64;
        let mut brute = 0.0f64;
        for &a in pts.iter().chain([1.0].iter()) {
            let lt = pts.iter().filter(|&&x| x < a).count() as f64;
            let le = pts.iter().filter(|&&x| x <= a).count() as f64;
            brute = brute.max((lt / n - a).abs()).max((le / n - a).abs());
        }
        let r = equidist::discrepancy(&pts).unwrap();
        prop_assert!((r.d_star - brute).abs() <= 1e-12);
        let e = r.d_extreme.unwrap();
        prop_assert!(r.d_star <= e + 1e-15 && e <= 2.0 * r.d_star + 1e-15);
    }

    #[test]
    fn poly_mod_period_invariance(
        z in proptest::collection::vec(-50i64..50, 2..5),
        r in proptest::collection::vec(-3i64..3, 1..5),
        q in 1u64..400,
    ) {
        prop_assume!(z[1..].iter().any(|&v| v != 0));
        let p = IntPolynomial::new(z.clone());
        prop_assume!(p.degree() >= 1);
        let mut shifted = z.clone();
        shifted.resize(z.len().max(r.len()), 0);
        for (i, ri) in r.iter().enumerate() {
            shifted[i] += q as i64 * ri;
        }
        let p2 = IntPolynomial::new(shifted);
        prop_assume!(p2.degree() >= 1);
        let a: Vec<u64> = (0..q).map(|n| p.eval_mod(n, q)).collect();
        let b: Vec<u64> = (0..q).map(|n| p2.eval_mod(n, q)).collect();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(
            equidist::poly_mod_discrepancy(&p, q).unwrap().d_star,
            equidist::poly_mod_discrepancy(&p2, q).unwrap().d_star
        );
    }

    #[test]
    fn high_digits_partition(z in proptest::collection::vec(-20i64..20, 2..4), k in 2u32..6, lambda in 1u32..6, mu_frac in 0.0f64..1.0) {
        let p = IntPolynomial::new(z);
        prop_assume!(p.degree() >= 1);
        prop_assume!((k as u64).pow(lambda) <= 20_000);
        let mu = ((lambda as f64) * mu_frac) as u32;
        let hist = equidist::high_digit_histogram(&p, k, lambda, mu).unwrap();
        prop_assert_eq!(hist.iter().sum::<u64>(), (k as u64).pow(lambda));
    }

    #[test]
    fn vandermonde_identity(hs in proptest::collection::btree_set(-50i64..=50, 2..=7)) {
        let hs: Vec<i64> = hs.into_iter().collect();
        let r = arrangement::vandermonde_identity_check(&hs).unwrap();
        prop_assert!(r.equal);
        prop_assert_eq!(r.lhs, r.rhs);
    }

    #[test]
    fn sieve_segment_independence(cut in proptest::collection::btree_set(2u64..20_000, 1..10)) {
        let whole = arith::sieve_segment(1, 20_000).unwrap();
        let mut bounds: Vec<u64> = std::iter::once(1).chain(cut).chain(std::iter::once(20_000)).collect();
        bounds.dedup();
        let parts: Vec<SieveTable> = bounds.windows(2).map(|w| arith::sieve_segment(w[0], w[1]).unwrap()).collect();
        prop_assert_eq!(SieveTable::concat(parts).unwrap(), whole);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sampled_words_are_enumerated(m in 2u32..4, h in 2u32..6, seed in any::<u64>(), eps_num in 0i64..5) {
        let model = arrangement::ErrorModel::new(BigRational::new(eps_num.into(), 1000.into()), vec![]).unwrap();
        let exact = arrangement::enumerate_words_2d(m, h, Some(&model)).unwrap();
        let sampled = arrangement::sample_words_fixed(1, m, h, 400, seed, Some(&model)).unwrap();
        prop_assert!(sampled.keys().all(|w| exact.contains_key(w)));
        let f = model.errors(h, 1).unwrap();
        for s in exact.values().chain(sampled.values()) {
            prop_assert_eq!(&s.recompute(m, &f), &s.word);
        }
        prop_assert!(BigUint::from(exact.len()) <= arrangement::count_cells_bound(m as u64, h as u64, 1).unwrap());
    }
}

#[test]
fn sieve_matches_definitions() {
    let t = arith::sieve_segment(1, 10_001).unwrap();
    for n in 1..=10_000u64 {
        let mut x = n;
        let mut primes = Vec::new();
        let mut squarefree = true;
        let mut p = 2;
        while p * p <= x {
            if x % p == 0 {
                let mut e = 0;
                while x % p == 0 {
                    x /= p;
                    e += 1;
                }
                squarefree &= e == 1;
                primes.push(p);
            }
            p += 1;
        }
        if x > 1 {
            primes.push(x);
        }
        let mu = if !squarefree { 0 } else if primes.len() % 2 == 0 { 1 } else { -1 };
        assert_eq!(t.mobius(n), mu, "μ({n})");
        let carrier = if primes.len() == 1 { primes[0] } else { 0 };
        assert_eq!(t.mangoldt_prime(n), carrier, "Λ({n})");
        assert_eq!(t.is_prime(n), primes.len() == 1 && primes[0] == n);
    }
}

#[test]
fn summatory_functions_ignore_worker_count() {
    let base = SieveConfig { segment_len: 1 << 12, ..SieveConfig::default() };
    let m1 = arith::mertens_with(300_000, &base).unwrap();
    let p1 = arith::chebyshev_psi_with(300_000, &base).unwrap();
    for workers in [2, 4, 8] {
        let cfg = SieveConfig { workers, ..base };
        assert_eq!(arith::mertens_with(300_000, &cfg).unwrap(), m1);
        assert_eq!(arith::chebyshev_psi_with(300_000, &cfg).unwrap().to_bits(), p1.to_bits());
    }
}

#[test]
fn prime_mode_counts_sum_to_n() {
    let spec = SequenceSpec::new(automaton::periodic_dfa(4, 2).unwrap(), sequences::IndexMode::PiatetskiPrimes(ExponentC::new(3, 2).unwrap()));
    let f = sequences::letter_frequencies(&spec, 5000).unwrap();
    assert_eq!(f.counts.values().sum::<u64>(), 5000);
}

#[test]
fn theta_deviation_shrinks() {
    let c = ExponentC::new(3, 2).unwrap();
    for name in ["mod:4:2", "mod:3:3"] {
        let spec = SequenceSpec::piatetski(automaton::builtin(name).unwrap(), c);
        let theta = sequences::theta_estimate(&spec.dfa, 8).unwrap();
        let devs: Vec<f64> = [10_000u64, 100_000, 1_000_000]
            .iter()
            .map(|&n| sequences::mean_theta_deviation(&sequences::letter_frequencies(&spec, n).unwrap(), &theta))
            .collect();
        assert!(devs[0] > devs[1] && devs[1] > devs[2], "{name}: {devs:?}");
    }
}

#[test]
fn lower_bound_words_found_are_counted() {
    let spec = SequenceSpec::piatetski(automaton::periodic_dfa(2, 2).unwrap(), ExponentC::new(3, 2).unwrap());
    let h = 8;
    let words = complexity::lower_bound_words(2, h).unwrap();
    let distinct: Vec<Vec<u32>> = words.distinct().into_iter().collect();
    let found = complexity::find_occurrences(&spec, &distinct, 200_000, 1).unwrap();
    let hits = found.iter().filter(|o| o.index().is_some()).count() as u64;
    let prof = complexity::subword_count(&spec, 1, 200_000, h as usize).unwrap();
    assert!(prof.count(h as usize) >= hits);
    let observed: BTreeSet<Vec<u32>> = complexity::distinct_factors(&spec.stream(1, 200_000 + h as u64 - 1).unwrap(), h as usize);
    for (w, o) in distinct.iter().zip(&found) {
        assert_eq!(o.index().is_some(), observed.contains(w));
    }
}

#[test]
fn taylor_model_encloses_power() {
    let c = ExponentC::new(3, 2).unwrap();
    for n in [2u64, 10, 1000, 123_456] {
        for h in 1..6u64 {
            let err = exactmath::taylor_error(n, h, c, 80).unwrap();
            assert!(err.lo() > &BigRational::zero(), "n={n}, h={h}");
        }
    }
}
