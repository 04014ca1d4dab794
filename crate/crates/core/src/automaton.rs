//! Complete deterministic automata with output, read most-significant digit first.
//!
//! A [`Dfa`] over the digit alphabet `{0, .., k-1}` generates the `k`-automatic
//! sequence `n ↦ output(δ*(initial, digits_k(n)))`. Every automaton satisfies
//! `δ(initial, 0) = initial`, so leading zeros never change the value.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{domain, invalid, resource, Error, Result};

pub type State = u32;
pub type Letter = u32;
pub type Digit = u8;

/// Largest state count accepted by the subset-based analyses.
pub const MAX_SUBSET_STATES: usize = 64;
/// Cap on the number of distinct subsets tracked by subset dynamic programming.
pub const MAX_TRACKED_SUBSETS: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    k: u32,
    delta: Vec<Vec<State>>,
    initial: State,
    output: Vec<Letter>,
    names: Vec<String>,
    letter_names: Vec<String>,
}

/// How [`Dfa::new`] treats an initial state that is not fixed by digit `0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeadingZeroPolicy {
    #[default]
    Reject,
    /// Add a zero-absorbing copy of the initial state.
    Repair,
}

impl Dfa {
    /// Validates and normalizes an automaton: drops unreachable states and
    /// enforces `δ(initial, 0) = initial` according to `policy`.
    pub fn new(
        k: u32,
        delta: Vec<Vec<State>>,
        initial: State,
        output: Vec<Letter>,
        names: Option<Vec<String>>,
        policy: LeadingZeroPolicy,
    ) -> Result<Self> {
        if k < 2 {
            return Err(invalid!("base must be at least 2, got {k}"));
        }
        if k > 256 {
            return Err(invalid!("base {k} exceeds the supported maximum 256"));
        }
        let n = delta.len();
        if n == 0 {
            return Err(invalid!("automaton has no states"));
        }
        if output.len() != n {
            return Err(invalid!("{} outputs for {n} states", output.len()));
        }
        if initial as usize >= n {
            return Err(invalid!("initial state {initial} out of range"));
        }
        for (s, row) in delta.iter().enumerate() {
            if row.len() != k as usize {
                return Err(invalid!("state {s} has {} transitions, expected {k}", row.len()));
            }
            if let Some(t) = row.iter().find(|&&t| t as usize >= n) {
                return Err(invalid!("state {s} has transition to missing state {t}"));
            }
        }
        let mut names = match names {
            Some(v) if v.len() == n => v,
            Some(v) => return Err(invalid!("{} state names for {n} states", v.len())),
            None => (0..n).map(|i| format!("s{i}")).collect(),
        };
        let mut delta = delta;
        let mut output = output;
        let mut initial = initial;
        if delta[initial as usize][0] != initial {
            match policy {
                LeadingZeroPolicy::Reject => {
                    return Err(invalid!(
                        "initial state is not fixed by digit 0; leading zeros would change values"
                    ))
                }
                LeadingZeroPolicy::Repair => {
                    let fresh = n as State;
                    let mut row = delta[initial as usize].clone();
                    row[0] = fresh;
                    delta.push(row);
                    output.push(output[initial as usize]);
                    let mut name = format!("{}_start", names[initial as usize]);
                    while names.contains(&name) {
                        name.push('\'');
                    }
                    names.push(name);
                    initial = fresh;
                }
            }
        }
        let dfa = Dfa { k, delta, initial, output, names, letter_names: Vec::new() };
        Ok(dfa.restrict_to_reachable())
    }

    /// Attaches display names for letters `0..names.len()`.
    pub fn with_letter_names(mut self, names: Vec<String>) -> Result<Self> {
        if let Some(&max) = self.output.iter().max() {
            if !names.is_empty() && (max as usize) >= names.len() {
                return Err(invalid!("letter {max} has no display name"));
            }
        }
        self.letter_names = names;
        Ok(self)
    }

    fn restrict_to_reachable(self) -> Self {
        let n = self.delta.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial as usize] = true;
        while let Some(s) = queue.pop_front() {
            for &t in &self.delta[s as usize] {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    queue.push_back(t);
                }
            }
        }
        if seen.iter().all(|&b| b) {
            return self;
        }
        let mut remap = vec![State::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if seen[s] {
                remap[s] = next;
                next += 1;
            }
        }
        fn keep<T: Clone>(v: &[T], seen: &[bool]) -> Vec<T> {
            v.iter().zip(seen).filter(|(_, &b)| b).map(|(x, _)| x.clone()).collect()
        }
        let delta = keep(&self.delta, &seen)
            .into_iter()
            .map(|row: Vec<State>| row.into_iter().map(|t| remap[t as usize]).collect())
            .collect();
        Dfa {
            k: self.k,
            delta,
            initial: remap[self.initial as usize],
            output: keep(&self.output, &seen),
            names: keep(&self.names, &seen),
            letter_names: self.letter_names,
        }
    }

    pub fn base(&self) -> u32 {
        self.k
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn initial(&self) -> State {
        self.initial
    }

    pub fn step(&self, s: State, d: Digit) -> State {
        self.delta[s as usize][d as usize]
    }

    pub fn output_of(&self, s: State) -> Letter {
        self.output[s as usize]
    }

    pub fn outputs(&self) -> &[Letter] {
        &self.output
    }

    pub fn transitions(&self) -> &[Vec<State>] {
        &self.delta
    }

    pub fn state_names(&self) -> &[String] {
        &self.names
    }

    pub fn letter_names(&self) -> &[String] {
        &self.letter_names
    }

    /// Display name of a letter (its number when no table is attached).
    pub fn letter_name(&self, a: Letter) -> String {
        self.letter_names.get(a as usize).cloned().unwrap_or_else(|| a.to_string())
    }

    /// Sorted distinct output letters.
    pub fn alphabet(&self) -> Vec<Letter> {
        self.output.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// State reached from `s` after reading `word`.
    pub fn run_from(&self, s: State, word: &[Digit]) -> State {
        word.iter().fold(s, |s, &d| self.step(s, d))
    }

    /// State reached after reading the base-`k` digits of `n`, MSD first.
    pub fn state_of(&self, n: u128) -> State {
        if n == 0 {
            return self.initial;
        }
        let mut s = self.initial;
        if self.k == 2 {
            let top = 127 - n.leading_zeros();
            for i in (0..=top).rev() {
                s = self.delta[s as usize][((n >> i) & 1) as usize];
            }
            return s;
        }
        let mut buf = [0u8; 128];
        let mut len = 0;
        let k = self.k as u128;
        let mut m = n;
        while m > 0 {
            buf[len] = (m % k) as u8;
            m /= k;
            len += 1;
        }
        for &d in buf[..len].iter().rev() {
            s = self.delta[s as usize][d as usize];
        }
        s
    }

    /// `a(n)`.
    pub fn eval(&self, n: u128) -> Letter {
        self.output[self.state_of(n) as usize]
    }

    /// `a(n)` for an arbitrary-size index.
    pub fn eval_big(&self, n: &BigUint) -> Letter {
        if let Some(small) = n.to_u128() {
            return self.eval(small);
        }
        let s = n.to_radix_be(self.k).into_iter().fold(self.initial, |s, d| self.step(s, d));
        self.output[s as usize]
    }

    /// Base-`k` digits of `n`, most significant first (empty for `n = 0`).
    pub fn digits(&self, mut n: u128) -> Vec<Digit> {
        let mut out = Vec::new();
        while n > 0 {
            out.push((n % self.k as u128) as Digit);
            n /= self.k as u128;
        }
        out.reverse();
        out
    }

    /// Minimal automaton generating the same sequence (Moore refinement).
    pub fn minimize(&self) -> Dfa {
        let n = self.num_states();
        let mut class: Vec<u32> = {
            let mut ids = BTreeMap::new();
            self.output
                .iter()
                .map(|o| {
                    let len = ids.len() as u32;
                    *ids.entry(*o).or_insert(len)
                })
                .collect()
        };
        let mut count = class.iter().copied().collect::<BTreeSet<_>>().len();
        loop {
            let mut ids: HashMap<(u32, Vec<u32>), u32> = HashMap::new();
            let next: Vec<u32> = (0..n)
                .map(|s| {
                    let sig: Vec<u32> = self.delta[s].iter().map(|&t| class[t as usize]).collect();
                    let len = ids.len() as u32;
                    *ids.entry((class[s], sig)).or_insert(len)
                })
                .collect();
            let new_count = ids.len();
            class = next;
            if new_count == count {
                break;
            }
            count = new_count;
        }
        // Renumber classes in BFS order from the initial state.
        let mut order = vec![u32::MAX; count];
        let mut reps = Vec::with_capacity(count);
        let mut queue = VecDeque::from([self.initial]);
        order[class[self.initial as usize] as usize] = 0;
        reps.push(self.initial);
        while let Some(s) = queue.pop_front() {
            for &t in &self.delta[s as usize] {
                let c = class[t as usize] as usize;
                if order[c] == u32::MAX {
                    order[c] = reps.len() as u32;
                    reps.push(t);
                    queue.push_back(t);
                }
            }
        }
        let delta = reps
            .iter()
            .map(|&r| {
                self.delta[r as usize]
                    .iter()
                    .map(|&t| order[class[t as usize] as usize])
                    .collect()
            })
            .collect();
        Dfa {
            k: self.k,
            delta,
            initial: 0,
            output: reps.iter().map(|&r| self.output[r as usize]).collect(),
            names: reps.iter().map(|&r| self.names[r as usize].clone()).collect(),
            letter_names: self.letter_names.clone(),
        }
    }

    /// Image of a set of states under a word.
    pub fn image(&self, states: &[State], word: &[Digit]) -> BTreeSet<State> {
        states.iter().map(|&s| self.run_from(s, word)).collect()
    }

    /// True when `word` sends every state to the same state.
    pub fn is_reset_word(&self, word: &[Digit]) -> bool {
        let all: Vec<State> = (0..self.num_states() as State).collect();
        self.image(&all, word).len() == 1
    }

    /// Applies the action of every digit word `w` as a map `s ↦ δ*(s, w)`.
    pub fn word_action(&self, word: &[Digit]) -> Vec<State> {
        (0..self.num_states() as State).map(|s| self.run_from(s, word)).collect()
    }

    /// Text serialization; see [`Dfa::parse`].
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        writeln!(out, "base: {}", self.k).unwrap();
        writeln!(out, "states: {}", self.names.join(" ")).unwrap();
        writeln!(out, "initial: {}", self.names[self.initial as usize]).unwrap();
        let outs: Vec<String> = self.output.iter().map(|o| o.to_string()).collect();
        writeln!(out, "output: {}", outs.join(" ")).unwrap();
        if !self.letter_names.is_empty() {
            writeln!(out, "letters: {}", self.letter_names.join(" ")).unwrap();
        }
        for (s, row) in self.delta.iter().enumerate() {
            let targets: Vec<&str> = row.iter().map(|&t| self.names[t as usize].as_str()).collect();
            writeln!(out, "delta {}: {}", self.names[s], targets.join(" ")).unwrap();
        }
        out
    }

    /// Parses the key/value text format:
    ///
    /// ```text
    /// # Thue-Morse
    /// base: 2
    /// states: s0 s1
    /// initial: s0
    /// output: 0 1
    /// letters: even odd        (optional)
    /// delta s0: s0 s1
    /// delta s1: s1 s0
    /// ```
    pub fn parse(text: &str, policy: LeadingZeroPolicy) -> Result<Dfa> {
        let mut base = None;
        let mut states: Option<Vec<String>> = None;
        let mut initial = None;
        let mut output = None;
        let mut letters = Vec::new();
        let mut rows: Vec<(String, Vec<String>, usize)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key: value`", lineno + 1)))?;
            let key = key.trim();
            let words: Vec<String> = value.split_whitespace().map(str::to_owned).collect();
            let one = |what: &str| -> Result<String> {
                match words.as_slice() {
                    [w] => Ok(w.clone()),
                    _ => Err(Error::Parse(format!("line {}: `{what}` takes one value", lineno + 1))),
                }
            };
            match key {
                "base" => {
                    base = Some(one("base")?.parse::<u32>().map_err(|e| {
                        Error::Parse(format!("line {}: base: {e}", lineno + 1))
                    })?)
                }
                "states" => states = Some(words),
                "initial" => initial = Some(one("initial")?),
                "output" => {
                    output = Some(
                        words
                            .iter()
                            .map(|w| w.parse::<Letter>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|e| Error::Parse(format!("line {}: output: {e}", lineno + 1)))?,
                    )
                }
                "letters" => letters = words,
                _ if key.starts_with("delta ") => {
                    rows.push((key["delta ".len()..].trim().to_owned(), words, lineno + 1))
                }
                _ => return Err(Error::Parse(format!("line {}: unknown key `{key}`", lineno + 1))),
            }
        }
        let base = base.ok_or_else(|| Error::Parse("missing `base`".into()))?;
        let states = states.ok_or_else(|| Error::Parse("missing `states`".into()))?;
        let index: HashMap<&str, State> =
            states.iter().enumerate().map(|(i, s)| (s.as_str(), i as State)).collect();
        if index.len() != states.len() {
            return Err(Error::Parse("duplicate state names".into()));
        }
        let lookup = |name: &str, line: usize| -> Result<State> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Parse(format!("line {line}: unknown state `{name}`")))
        };
        let initial = lookup(&initial.ok_or_else(|| Error::Parse("missing `initial`".into()))?, 0)?;
        let output = output.ok_or_else(|| Error::Parse("missing `output`".into()))?;
        let mut delta: Vec<Option<Vec<State>>> = vec![None; states.len()];
        for (src, targets, line) in rows {
            let s = lookup(&src, line)?;
            if delta[s as usize].is_some() {
                return Err(Error::Parse(format!("line {line}: duplicate row for `{src}`")));
            }
            let row = targets.iter().map(|t| lookup(t, line)).collect::<Result<Vec<_>>>()?;
            delta[s as usize] = Some(row);
        }
        let delta = delta
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.ok_or_else(|| Error::Parse(format!("missing row for `{}`", states[i]))))
            .collect::<Result<Vec<_>>>()?;
        let dfa = Dfa::new(base, delta, initial, output, Some(states), policy)?;
        if letters.is_empty() {
            Ok(dfa)
        } else {
            dfa.with_letter_names(letters)
        }
    }
}

/// The two-state Thue–Morse automaton.
pub fn thue_morse() -> Dfa {
    Dfa::new(
        2,
        vec![vec![0, 1], vec![1, 0]],
        0,
        vec![0, 1],
        Some(vec!["s0".into(), "s1".into()]),
        LeadingZeroPolicy::Reject,
    )
    .expect("valid builtin")
}

/// `n ↦ n mod m` in base `k`: `δ(s, d) = (k·s + d) mod m`, output `s`.
pub fn periodic_dfa(m: u32, k: u32) -> Result<Dfa> {
    if m == 0 {
        return Err(invalid!("period must be positive"));
    }
    let delta = (0..m as u64)
        .map(|s| (0..k as u64).map(|d| ((k as u64 * s + d) % m as u64) as State).collect())
        .collect();
    Dfa::new(k, delta, 0, (0..m).collect(), None, LeadingZeroPolicy::Reject)
}

/// Černý automaton `C_n` over base 2. Digit `1` rotates the states
/// cyclically; digit `0` sends state `0` to `1` and fixes the rest. The
/// initial state is `1` (fixed by digit `0`); outputs are state ids.
pub fn cerny(n: u32) -> Result<Dfa> {
    if n < 2 {
        return Err(invalid!("cerny automaton needs n >= 2"));
    }
    let delta = (0..n).map(|s| vec![if s == 0 { 1 } else { s }, (s + 1) % n]).collect();
    Dfa::new(2, delta, 1, (0..n).collect(), None, LeadingZeroPolicy::Reject)
}

/// Constant sequence `a(n) = letter` in base `k`.
pub fn constant_dfa(k: u32, letter: Letter) -> Result<Dfa> {
    Dfa::new(k, vec![vec![0; k as usize]], 0, vec![letter], None, LeadingZeroPolicy::Reject)
}

/// Resolves `thue-morse`, `mod:m:k`, `cerny:n` or `const:a:k`.
pub fn builtin(name: &str) -> Result<Dfa> {
    let parts: Vec<&str> = name.split(':').collect();
    let num = |s: &str| -> Result<u32> {
        s.parse::<u32>().map_err(|e| Error::Parse(format!("builtin `{name}`: {e}")))
    };
    match parts.as_slice() {
        ["thue-morse"] => Ok(thue_morse()),
        ["mod", m, k] => periodic_dfa(num(m)?, num(k)?),
        ["cerny", n] => cerny(num(n)?),
        ["const", a, k] => constant_dfa(num(k)?, num(a)?),
        _ => Err(invalid!("unknown builtin automaton `{name}`")),
    }
}

/// Result of the synchronization analysis on the minimal automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncReport {
    pub synchronizing: bool,
    pub reset_word: Option<Vec<Digit>>,
    pub minimal_states: usize,
}

/// Shortest merging words for every pair of states, found by backward BFS on
/// the pair automaton. `next[pair]` is the first digit of a shortest merging
/// word, or `None` if the pair cannot be merged.
struct PairTable {
    n: usize,
    first_digit: Vec<Option<Digit>>,
}

impl PairTable {
    fn idx(n: usize, a: State, b: State) -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        a as usize * n + b as usize
    }

    fn build(dfa: &Dfa) -> PairTable {
        let n = dfa.num_states();
        let k = dfa.k as usize;
        // preimages[t][d] = states s with δ(s, d) = t
        let mut pre = vec![vec![Vec::new(); k]; n];
        for s in 0..n {
            for d in 0..k {
                pre[dfa.delta[s][d] as usize][d].push(s as State);
            }
        }
        let mut first_digit = vec![None; n * n];
        let mut done = vec![false; n * n];
        let mut queue = VecDeque::new();
        for s in 0..n {
            done[Self::idx(n, s as State, s as State)] = true;
            queue.push_back((s as State, s as State));
        }
        while let Some((a, b)) = queue.pop_front() {
            for (d, (pa, pb)) in pre[a as usize].iter().zip(&pre[b as usize]).enumerate() {
                for &x in pa {
                    for &y in pb {
                        let i = Self::idx(n, x, y);
                        if !done[i] {
                            done[i] = true;
                            first_digit[i] = Some(d as Digit);
                            queue.push_back((x, y));
                        }
                    }
                }
            }
        }
        PairTable { n, first_digit }
    }

    fn merging_word(&self, dfa: &Dfa, mut a: State, mut b: State) -> Option<Vec<Digit>> {
        let mut word = Vec::new();
        while a != b {
            let d = self.first_digit[Self::idx(self.n, a, b)]?;
            word.push(d);
            a = dfa.step(a, d);
            b = dfa.step(b, d);
        }
        Some(word)
    }
}

/// Minimal automata up to this size get a shortest reset word from the
/// subset search instead of the greedy construction.
pub const EXACT_RESET_STATES: usize = 16;

/// Synchronization check on the minimal automaton. Small automata report a
/// shortest reset word; larger ones use [`greedy_reset_word`].
pub fn is_synchronizing(dfa: &Dfa) -> SyncReport {
    let min = dfa.minimize();
    let minimal_states = min.num_states();
    let reset_word = match greedy_reset_word(&min) {
        Some(_) if minimal_states <= EXACT_RESET_STATES => {
            shortest_reset_word(&min).expect("small subset search")
        }
        w => w,
    };
    SyncReport { synchronizing: reset_word.is_some(), reset_word, minimal_states }
}

/// Reset word built by repeatedly merging the pair of current states with the
/// shortest merging word (pair automaton BFS). `None` when some pair cannot
/// be merged, i.e. the automaton is not synchronizing.
pub fn greedy_reset_word(min: &Dfa) -> Option<Vec<Digit>> {
    let table = PairTable::build(min);
    let mut current: BTreeSet<State> = (0..min.num_states() as State).collect();
    let mut word = Vec::new();
    while current.len() > 1 {
        // Pick the pair with the shortest merging word.
        let states: Vec<State> = current.iter().copied().collect();
        let mut best: Option<Vec<Digit>> = None;
        for (i, &a) in states.iter().enumerate() {
            for &b in &states[i + 1..] {
                let w = table.merging_word(min, a, b)?;
                if best.as_ref().is_none_or(|bw| w.len() < bw.len()) {
                    best = Some(w);
                }
            }
        }
        let w = best.expect("at least one pair");
        current = current.iter().map(|&s| min.run_from(s, &w)).collect();
        word.extend(w);
    }
    Some(word)
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn image_mask(dfa: &Dfa, mask: u64, d: usize) -> u64 {
    let mut out = 0u64;
    let mut m = mask;
    while m != 0 {
        let s = m.trailing_zeros() as usize;
        out |= 1u64 << dfa.delta[s][d];
        m &= m - 1;
    }
    out
}

/// Shortest reset word by breadth-first search over the subset automaton of
/// `dfa` as given (no minimization). Exponential in the state count.
pub fn shortest_reset_word(dfa: &Dfa) -> Result<Option<Vec<Digit>>> {
    let n = dfa.num_states();
    if n > 30 {
        return Err(resource!("exhaustive reset search limited to 30 states, got {n}"));
    }
    let start = full_mask(n);
    if start.count_ones() == 1 {
        return Ok(Some(Vec::new()));
    }
    let mut parent: HashMap<u64, (u64, Digit)> = HashMap::new();
    parent.insert(start, (0, 0));
    let mut queue = VecDeque::from([start]);
    while let Some(mask) = queue.pop_front() {
        for d in 0..dfa.k as usize {
            let img = image_mask(dfa, mask, d);
            if parent.contains_key(&img) {
                continue;
            }
            parent.insert(img, (mask, d as Digit));
            if img.count_ones() == 1 {
                let mut word = Vec::new();
                let mut cur = img;
                while cur != start {
                    let (p, d) = parent[&cur];
                    word.push(d);
                    cur = p;
                }
                word.reverse();
                return Ok(Some(word));
            }
            if parent.len() > MAX_TRACKED_SUBSETS {
                return Err(resource!("subset search exceeded {MAX_TRACKED_SUBSETS} subsets"));
            }
            queue.push_back(img);
        }
    }
    Ok(None)
}

/// Number of words of length `len` whose action leaves more than one state
/// in the image of the full state set. Subset dynamic programming; never
/// enumerates the `k^len` words.
pub fn count_nonsync_words(dfa: &Dfa, len: u32) -> Result<u128> {
    let n = dfa.num_states();
    if n > MAX_SUBSET_STATES {
        return Err(resource!("subset DP supports at most {MAX_SUBSET_STATES} states, got {n}"));
    }
    if (dfa.k as u128).checked_pow(len).is_none() {
        return Err(resource!("k^L = {}^{len} overflows the counter", dfa.k));
    }
    let mut layer: HashMap<u64, u128> = HashMap::from([(full_mask(n), 1u128)]);
    for _ in 0..len {
        let mut next: HashMap<u64, u128> = HashMap::with_capacity(layer.len() * 2);
        for (&mask, &count) in &layer {
            for d in 0..dfa.k as usize {
                *next.entry(image_mask(dfa, mask, d)).or_insert(0) += count;
            }
        }
        if next.len() > MAX_TRACKED_SUBSETS {
            return Err(resource!("subset DP exceeded {MAX_TRACKED_SUBSETS} subsets"));
        }
        layer = next;
    }
    Ok(layer.iter().filter(|(m, _)| m.count_ones() > 1).map(|(_, c)| *c).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaRow {
    pub len: u32,
    pub count: u128,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaEstimate {
    pub rows: Vec<EtaRow>,
    /// First length at which some word of that length resets the automaton.
    pub first_sync_len: Option<u32>,
    /// `min η_L` over `L >= first_sync_len`.
    pub eta_hat: Option<f64>,
}

/// Per-length exponents `η_L = 1 - log_k(count_L)/L` for the non-synchronizing
/// word counts of the minimal automaton. A zero count is reported as `η_L = 1`.
pub fn estimate_eta(dfa: &Dfa, max_len: u32) -> Result<EtaEstimate> {
    let min = dfa.minimize();
    if !is_synchronizing(&min).synchronizing {
        return Err(domain!("automaton is not synchronizing; η is undefined"));
    }
    let k = min.k as f64;
    let mut rows = Vec::new();
    for len in 1..=max_len {
        let count = count_nonsync_words(&min, len)?;
        let eta = if count == 0 { 1.0 } else { 1.0 - (count as f64).ln() / k.ln() / len as f64 };
        rows.push(EtaRow { len, count, eta });
    }
    let k_int = min.k as u128;
    let first_sync_len = rows.iter().find(|r| r.count < k_int.pow(r.len)).map(|r| r.len);
    let eta_hat = first_sync_len.and_then(|l0| {
        rows.iter().filter(|r| r.len >= l0).map(|r| r.eta).min_by(|a, b| a.total_cmp(b))
    });
    Ok(EtaEstimate { rows, first_sync_len, eta_hat })
}

/// One element `n ↦ a(n·k^λ + r)` of the `k`-kernel, represented by the
/// action of the digit word `w` (the `λ`-digit expansion of `r`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelElement {
    pub state_map: Vec<State>,
    pub output_fn: Vec<Letter>,
    pub witness: Vec<Digit>,
}

impl KernelElement {
    /// `(λ, r)` encoded by the witness word.
    pub fn lambda_r(&self, k: u32) -> (u32, u128) {
        let r = self.witness.iter().fold(0u128, |acc, &d| acc * k as u128 + d as u128);
        (self.witness.len() as u32, r)
    }

    pub fn is_constant(&self) -> bool {
        self.output_fn.windows(2).all(|w| w[0] == w[1])
    }

    /// The kernel sequence evaluated at `n`.
    pub fn eval(&self, dfa: &Dfa, n: u128) -> Letter {
        self.output_fn[dfa.state_of(n) as usize]
    }

    /// The automaton generating this kernel sequence.
    pub fn automaton(&self, dfa: &Dfa) -> Dfa {
        Dfa {
            k: dfa.k,
            delta: dfa.delta.clone(),
            initial: dfa.initial,
            output: self.output_fn.clone(),
            names: dfa.names.clone(),
            letter_names: dfa.letter_names.clone(),
        }
        .restrict_to_reachable()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kernel {
    pub elements: Vec<KernelElement>,
    /// Distinct output functions, in discovery order.
    pub output_functions: Vec<Vec<Letter>>,
}

impl Kernel {
    /// Letters `a` such that some kernel element is the constant sequence `a`.
    pub fn constant_letters(&self) -> BTreeSet<Letter> {
        self.elements.iter().filter(|e| e.is_constant()).map(|e| e.output_fn[0]).collect()
    }
}

/// Closure of the word actions `φ_w` under appending digits, starting at the
/// empty word. Terminates after at most `|S|^|S|` maps.
pub fn kernel(dfa: &Dfa) -> Result<Kernel> {
    let n = dfa.num_states();
    let identity: Vec<State> = (0..n as State).collect();
    let mut seen: HashMap<Vec<State>, usize> = HashMap::new();
    let mut elements = Vec::new();
    let mut queue = VecDeque::new();
    let push = |map: Vec<State>, witness: Vec<Digit>, elements: &mut Vec<KernelElement>, seen: &mut HashMap<Vec<State>, usize>, queue: &mut VecDeque<usize>| {
        if seen.contains_key(&map) {
            return;
        }
        let output_fn = map.iter().map(|&s| dfa.output[s as usize]).collect();
        seen.insert(map.clone(), elements.len());
        queue.push_back(elements.len());
        elements.push(KernelElement { state_map: map, output_fn, witness });
    };
    push(identity, Vec::new(), &mut elements, &mut seen, &mut queue);
    while let Some(i) = queue.pop_front() {
        for d in 0..dfa.k as usize {
            let map: Vec<State> = elements[i].state_map.iter().map(|&s| dfa.delta[s as usize][d]).collect();
            let mut witness = elements[i].witness.clone();
            witness.push(d as Digit);
            push(map, witness, &mut elements, &mut seen, &mut queue);
            if elements.len() > MAX_TRACKED_SUBSETS {
                return Err(resource!("kernel closure exceeded {MAX_TRACKED_SUBSETS} maps"));
            }
        }
    }
    let mut output_functions: Vec<Vec<Letter>> = Vec::new();
    for e in &elements {
        if !output_functions.contains(&e.output_fn) {
            output_functions.push(e.output_fn.clone());
        }
    }
    Ok(Kernel { elements, output_functions })
}

/// Checks that `word` resets the minimal automaton of every kernel element.
pub fn kernel_shares_reset_word(dfa: &Dfa, word: &[Digit]) -> Result<bool> {
    let ker = kernel(dfa)?;
    Ok(ker.elements.iter().all(|e| e.automaton(dfa).minimize().is_reset_word(word)))
}
