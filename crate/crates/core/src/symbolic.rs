//! Symbol sequences over `{-1, +1}` and the classes built from them.
//!
//! A trajectory `y` realizes a sequence `a` when `a_n y(n) > 0` at every
//! integer `n`. Admissible sequences have every run of equal symbols of
//! length at least 3. Periodic sequences are stored as one period, indexed
//! so that `word[0]` is the symbol at time 0; connection sequences are
//! stored lazily as two periodic tails and a finite middle word.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum run length of a sequence in M.
pub const MIN_RUN: usize = 3;

/// Minimum period of a non-constant periodic sequence in M.
pub const MIN_PERIOD: usize = 2 * MIN_RUN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Minus => Sign::Plus,
            Sign::Plus => Sign::Minus,
        }
    }

    fn as_char(self) -> char {
        match self {
            Sign::Minus => '-',
            Sign::Plus => '+',
        }
    }
}

/// Anything that assigns a sign to each integer time.
pub trait Symbols {
    fn sign_at(&self, n: i64) -> Sign;
}

/// A run of equal symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub sign: Sign,
    pub len: usize,
}

/// Finite non-empty word over `{-, +}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolWord(Vec<Sign>);

impl SymbolWord {
    pub fn new(symbols: Vec<Sign>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidSymbols("empty word".into()));
        }
        Ok(Self(symbols))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Sign {
        self.0[i]
    }

    pub fn symbols(&self) -> &[Sign] {
        &self.0
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&s| s == self.0[0])
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|s| s.flip()).collect())
    }

    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }

    /// Runs in order. In cyclic mode a first and last run of the same sign
    /// are merged and reported last.
    pub fn runs(&self, cyclic: bool) -> Vec<Run> {
        runs_of(self.0.iter().copied(), cyclic)
    }

    pub fn block_lengths(&self, cyclic: bool) -> Vec<usize> {
        self.runs(cyclic).iter().map(|r| r.len).collect()
    }

    /// Membership in M: every run has length at least 3.
    pub fn in_m(&self, cyclic: bool) -> bool {
        self.runs(cyclic).iter().all(|r| r.len >= MIN_RUN)
    }
}

fn runs_of(symbols: impl IntoIterator<Item = Sign>, cyclic: bool) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for s in symbols {
        match runs.last_mut() {
            Some(r) if r.sign == s => r.len += 1,
            _ => runs.push(Run { sign: s, len: 1 }),
        }
    }
    if cyclic && runs.len() > 1 && runs[0].sign == runs[runs.len() - 1].sign {
        let first = runs.remove(0);
        runs.last_mut().expect("at least one run left").len += first.len;
    }
    runs
}

impl FromStr for SymbolWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .trim()
            .chars()
            .map(|c| match c {
                '+' => Ok(Sign::Plus),
                '-' | '−' => Ok(Sign::Minus),
                other => Err(Error::InvalidSymbols(format!(
                    "unexpected character {other:?} in {s:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(symbols)
    }
}

impl fmt::Display for SymbolWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|s| write!(f, "{}", s.as_char()))
    }
}

/// One period `b_0 … b_{N-1}` of an N-periodic sequence in `M \ {e±}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PeriodicSymbols {
    word: SymbolWord,
}

impl PeriodicSymbols {
    pub fn new(word: SymbolWord) -> Result<Self> {
        if word.len() < MIN_PERIOD {
            return Err(Error::InvalidSymbols(format!(
                "period {} is below {MIN_PERIOD}",
                word.len()
            )));
        }
        if word.is_constant() {
            return Err(Error::InvalidSymbols(
                "constant sequences are excluded from periodic classes".into(),
            ));
        }
        if let Some(r) = word.runs(true).iter().find(|r| r.len < MIN_RUN) {
            return Err(Error::InvalidSymbols(format!(
                "{word} has a run of length {} (need at least {MIN_RUN})",
                r.len
            )));
        }
        Ok(Self { word })
    }

    pub fn period(&self) -> usize {
        self.word.len()
    }

    pub fn word(&self) -> &SymbolWord {
        &self.word
    }

    /// Membership in S_N: `b_j = b_{N-j}` for all j.
    pub fn is_symmetric(&self) -> bool {
        let n = self.period();
        (0..n).all(|j| self.word.get(j) == self.word.get((n - j) % n))
    }

    /// The k-fold concatenation `kb`, an element of `P_{kN}`.
    pub fn repeat(&self, k: usize) -> Self {
        assert!(k >= 1);
        let symbols = self.word.symbols().repeat(k);
        Self {
            word: SymbolWord(symbols),
        }
    }

    pub fn flipped(&self) -> Self {
        Self {
            word: self.word.flipped(),
        }
    }

    /// The sequence `n ↦ b_{n+s}`.
    pub fn shifted(&self, s: i64) -> Self {
        let n = self.period() as i64;
        let symbols = (0..n).map(|j| self.sign_at(j + s)).collect();
        Self {
            word: SymbolWord(symbols),
        }
    }
}

impl Symbols for PeriodicSymbols {
    fn sign_at(&self, n: i64) -> Sign {
        self.word.get(n.rem_euclid(self.period() as i64) as usize)
    }
}

impl FromStr for PeriodicSymbols {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(s.parse()?)
    }
}

impl fmt::Display for PeriodicSymbols {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.word.fmt(f)
    }
}

/// A bi-infinite sequence `a` that follows `b⁻` for `n ≤ K⁻ - 1`, the
/// middle word from `start` on, and `b⁺` for `n ≥ K⁺ + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectionSpec {
    b_minus: PeriodicSymbols,
    b_plus: PeriodicSymbols,
    middle: SymbolWord,
    start: i64,
    k_minus: i64,
    k_plus: i64,
}

/// On-disk form of [`ConnectionSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectionSpecJson {
    pub b_minus: String,
    pub b_plus: String,
    pub middle: String,
    #[serde(default)]
    pub start: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_minus: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_plus: Option<i64>,
}

impl ConnectionSpec {
    /// Builds the spec with offsets computed from the sequences.
    pub fn new(
        b_minus: PeriodicSymbols,
        b_plus: PeriodicSymbols,
        middle: SymbolWord,
        start: i64,
    ) -> Result<Self> {
        Self::with_offsets(b_minus, b_plus, middle, start, None)
    }

    /// Builds the spec, checking explicit offsets `(K⁻, K⁺)` if given.
    pub fn with_offsets(
        b_minus: PeriodicSymbols,
        b_plus: PeriodicSymbols,
        middle: SymbolWord,
        start: i64,
        offsets: Option<(i64, i64)>,
    ) -> Result<Self> {
        for (name, b) in [("b_minus", &b_minus), ("b_plus", &b_plus)] {
            if !b.is_symmetric() {
                return Err(Error::InvalidSpec(format!(
                    "{name} = {b} is not symmetric (b_j = b_(N-j))"
                )));
            }
        }
        let mut spec = Self {
            b_minus,
            b_plus,
            middle,
            start,
            k_minus: 0,
            k_plus: 0,
        };
        let (kpm_minus, kpm_plus) = spec.extremal_defects().ok_or_else(|| {
            Error::InvalidSpec(
                "sequence coincides with its periodic tails; nothing to connect".into(),
            )
        })?;
        let (k_minus, k_plus) = if kpm_minus < kpm_plus {
            (kpm_minus, kpm_plus)
        } else {
            // the tails agree on an overlap, so the extremal defects cross;
            // fall back to the span of the middle word
            let k_minus = kpm_minus.min(spec.start);
            let k_plus = kpm_plus.max(spec.end()).max(k_minus + 1);
            (k_minus, k_plus)
        };
        if let Some((km, kp)) = offsets {
            let consistent = if kpm_minus < kpm_plus {
                km == kpm_minus && kp == kpm_plus
            } else {
                km < kp && km <= kpm_minus && kp >= kpm_plus
            };
            if !consistent {
                return Err(Error::InvalidSpec(format!(
                    "offsets ({km}, {kp}) disagree with the sequence, expected ({k_minus}, {k_plus})"
                )));
            }
            spec.k_minus = km;
            spec.k_plus = kp;
        } else {
            spec.k_minus = k_minus;
            spec.k_plus = k_plus;
        }
        spec.check_runs()?;
        Ok(spec)
    }

    pub fn from_json_value(raw: ConnectionSpecJson) -> Result<Self> {
        let offsets = match (raw.k_minus, raw.k_plus) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => {
                return Err(Error::InvalidSpec(
                    "give both k_minus and k_plus or neither".into(),
                ))
            }
        };
        Self::with_offsets(
            raw.b_minus.parse()?,
            raw.b_plus.parse()?,
            raw.middle.parse()?,
            raw.start,
            offsets,
        )
    }

    pub fn to_json_value(&self) -> ConnectionSpecJson {
        ConnectionSpecJson {
            b_minus: self.b_minus.to_string(),
            b_plus: self.b_plus.to_string(),
            middle: self.middle.to_string(),
            start: self.start,
            k_minus: Some(self.k_minus),
            k_plus: Some(self.k_plus),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_value(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_json_value())?)
    }

    pub fn b_minus(&self) -> &PeriodicSymbols {
        &self.b_minus
    }

    pub fn b_plus(&self) -> &PeriodicSymbols {
        &self.b_plus
    }

    pub fn middle(&self) -> &SymbolWord {
        &self.middle
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Last index covered by the middle word.
    pub fn end(&self) -> i64 {
        self.start + self.middle.len() as i64 - 1
    }

    pub fn k_minus(&self) -> i64 {
        self.k_minus
    }

    pub fn k_plus(&self) -> i64 {
        self.k_plus
    }

    pub fn is_homoclinic(&self) -> bool {
        self.b_minus == self.b_plus
    }

    /// `(min{n | a_n ≠ b⁻_n}, max{n | a_n ≠ b⁺_n})`, or `None` when `a`
    /// coincides with both tails.
    pub fn extremal_defects(&self) -> Option<(i64, i64)> {
        let l = lcm(self.b_minus.period(), self.b_plus.period()) as i64;
        let k_plus = (self.start - l..=self.end())
            .rev()
            .find(|&n| self.sign_at(n) != self.b_plus.sign_at(n));
        let k_minus =
            (self.start..=self.end() + l).find(|&n| self.sign_at(n) != self.b_minus.sign_at(n));
        match (k_minus, k_plus) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        }
    }

    /// Finite window that contains every run touching the middle.
    fn check_window(&self) -> (i64, i64) {
        let margin = 2 * self.b_minus.period().max(self.b_plus.period()) as i64;
        (
            self.start.min(self.k_minus) - margin,
            self.end().max(self.k_plus) + margin,
        )
    }

    fn check_runs(&self) -> Result<()> {
        let (lo, hi) = self.check_window();
        let runs = runs_of((lo..=hi).map(|n| self.sign_at(n)), false);
        // the first and last runs are cut by the window and lie in the tails
        let inner = &runs[1..runs.len().saturating_sub(1)];
        let mut n = lo + runs[0].len as i64;
        for r in inner {
            if r.len < MIN_RUN {
                return Err(Error::InvalidSpec(format!(
                    "run of length {} starting at n = {n} (need at least {MIN_RUN})",
                    r.len
                )));
            }
            n += r.len as i64;
        }
        Ok(())
    }

    /// Membership of the assembled sequence in M.
    pub fn in_m(&self) -> bool {
        self.check_runs().is_ok()
    }

    /// The spec of `n ↦ a_{-n}` with the tails swapped.
    pub fn reflected(&self) -> Result<Self> {
        Self::new(
            self.b_plus.clone(),
            self.b_minus.clone(),
            self.middle.reversed(),
            -self.end(),
        )
    }

    /// Symbols on `[lo, hi]` as a word.
    pub fn window_word(&self, lo: i64, hi: i64) -> SymbolWord {
        SymbolWord((lo..=hi).map(|n| self.sign_at(n)).collect())
    }
}

impl Symbols for ConnectionSpec {
    fn sign_at(&self, n: i64) -> Sign {
        if n < self.start {
            self.b_minus.sign_at(n)
        } else if n > self.end() {
            self.b_plus.sign_at(n)
        } else {
            self.middle.get((n - self.start) as usize)
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}
