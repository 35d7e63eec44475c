//! String rewriting over words: single steps, normalization under several
//! strategies, critical pairs and sampled termination certificates.
//!
//! [`RewriteSystem::locally_free`] instantiates the eight rule schemas that
//! normalize the locally free group over a finite atom window.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::word::{random_word, Atom, Channel, Gen, Letter, Window, Word};

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub lhs: Word,
    pub rhs: Word,
    pub tag: String,
}

impl Rule {
    pub fn new(lhs: Word, rhs: Word, tag: impl Into<String>) -> Result<Rule> {
        if lhs.is_empty() {
            return Err(Error::domain("rule left-hand side must be nonempty"));
        }
        Ok(Rule {
            lhs,
            rhs,
            tag: tag.into(),
        })
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) {} -> {}", self.tag, self.lhs, self.rhs)
    }
}

/// Which redex to contract when several are available.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Leftmost,
    Rightmost,
    Random(u64),
}

/// The eight schemas of the locally free system, indexed by an atom `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Schema {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
}

impl Schema {
    pub const ALL: [Schema; 8] = [
        Schema::I,
        Schema::II,
        Schema::III,
        Schema::IV,
        Schema::V,
        Schema::VI,
        Schema::VII,
        Schema::VIII,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Schema::I => "i",
            Schema::II => "ii",
            Schema::III => "iii",
            Schema::IV => "iv",
            Schema::V => "v",
            Schema::VI => "vi",
            Schema::VII => "vii",
            Schema::VIII => "viii",
        }
    }

    /// Atoms the instance at `a` mentions.
    fn atoms(self, a: Atom) -> Vec<Atom> {
        match self {
            Schema::I | Schema::II | Schema::III | Schema::IV => vec![a],
            _ => vec![a, a.succ()],
        }
    }

    /// The instance `(lhs, rhs)` at atom `a`.
    pub fn instance(self, a: Atom) -> (Word, Word) {
        let x = |b: Atom| Gen::Pair(b, Channel::Zero);
        let y = |b: Atom| Gen::Pair(b, Channel::One);
        let s = a.succ();
        let (lhs, rhs) = match self {
            Schema::I => (vec![x(a).pos(), x(a).neg()], vec![]),
            Schema::II => (vec![x(a).neg(), x(a).pos()], vec![]),
            Schema::III => (vec![y(a).pos(), y(a).neg()], vec![]),
            Schema::IV => (vec![y(a).neg(), y(a).pos()], vec![]),
            Schema::V => (vec![x(s).pos(), y(a).pos()], vec![y(s).neg(), x(s).pos()]),
            Schema::VI => (vec![x(s).pos(), y(a).neg()], vec![y(s).pos(), x(s).pos()]),
            Schema::VII => (vec![x(s).neg(), y(s).pos()], vec![y(a).neg(), x(s).neg()]),
            Schema::VIII => (vec![x(s).neg(), y(s).neg()], vec![y(a).pos(), x(s).neg()]),
        };
        (Word::new(lhs), Word::new(rhs))
    }

    /// The schema instance, at any atom, whose left side is `l1 l2`.
    pub fn match_pair(l1: Letter, l2: Letter) -> Option<(Schema, Atom)> {
        let (a1, a2) = (l1.gen.atom()?, l2.gen.atom()?);
        if l1.channel().is_none() || l2.channel().is_none() {
            return None;
        }
        let lhs = [l1, l2];
        for a in [a1, a2, a1.pred()] {
            for schema in Schema::ALL {
                if schema.instance(a).0.letters() == lhs {
                    return Some((schema, a));
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone)]
pub struct RewriteSystem {
    rules: Vec<Rule>,
    by_first: HashMap<Letter, Vec<usize>>,
    max_lhs: usize,
    window: Option<Window>,
    budget: u64,
}

impl RewriteSystem {
    pub fn new(rules: Vec<Rule>) -> RewriteSystem {
        let mut by_first: HashMap<Letter, Vec<usize>> = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            by_first.entry(r.lhs.letters()[0]).or_default().push(i);
        }
        let max_lhs = rules.iter().map(|r| r.lhs.len()).max().unwrap_or(1);
        RewriteSystem {
            rules,
            by_first,
            max_lhs,
            window: None,
            budget: DEFAULT_BUDGET,
        }
    }

    /// The locally free system, instantiated for every atom whose instance
    /// stays inside `window`.
    pub fn locally_free(window: Window) -> RewriteSystem {
        let mut rules = Vec::new();
        for schema in Schema::ALL {
            for a in window.atoms() {
                if schema.atoms(a).into_iter().all(|b| window.contains(b)) {
                    let (lhs, rhs) = schema.instance(a);
                    rules.push(Rule { lhs, rhs, tag: schema.tag().to_string() });
                }
            }
        }
        let mut sys = RewriteSystem::new(rules);
        sys.window = Some(window);
        sys
    }

    /// Free cancellation over `gens` together with the given rules.
    pub fn with_free_cancellation(gens: &[Gen], extra: Vec<Rule>) -> RewriteSystem {
        let mut rules = Vec::new();
        for &g in gens {
            rules.push(Rule {
                lhs: Word::new(vec![g.pos(), g.neg()]),
                rhs: Word::empty(),
                tag: "cancel".into(),
            });
            rules.push(Rule {
                lhs: Word::new(vec![g.neg(), g.pos()]),
                rhs: Word::empty(),
                tag: "cancel".into(),
            });
        }
        rules.extend(extra);
        RewriteSystem::new(rules)
    }

    /// `x`-letters move left past `y`-letters, inverting them; relator
    /// `x y x' y`.
    pub fn klein() -> RewriteSystem {
        let (x, y) = (Gen::named("x"), Gen::named("y"));
        let rule = |lhs: Vec<Letter>, rhs: Vec<Letter>| Rule {
            lhs: Word::new(lhs),
            rhs: Word::new(rhs),
            tag: "commute".into(),
        };
        Self::with_free_cancellation(
            &[x, y],
            vec![
                rule(vec![y.pos(), x.pos()], vec![x.pos(), y.neg()]),
                rule(vec![y.neg(), x.pos()], vec![x.pos(), y.pos()]),
                rule(vec![y.pos(), x.neg()], vec![x.neg(), y.neg()]),
                rule(vec![y.neg(), x.neg()], vec![x.neg(), y.pos()]),
            ],
        )
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn window(&self) -> Option<Window> {
        self.window
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// Generators mentioned by any rule, sorted.
    pub fn alphabet(&self) -> Vec<Gen> {
        let set: BTreeSet<Gen> = self
            .rules
            .iter()
            .flat_map(|r| r.lhs.gens().chain(r.rhs.gens()))
            .collect();
        set.into_iter().collect()
    }

    fn rule_at(&self, letters: &[Letter], pos: usize) -> Option<usize> {
        self.by_first.get(&letters[pos])?.iter().copied().find(|&i| {
            let lhs = self.rules[i].lhs.letters();
            letters[pos..].starts_with(lhs)
        })
    }

    /// Every `(position, rule index)` at which some rule applies.
    pub fn redexes(&self, w: &Word) -> Vec<(usize, usize)> {
        let letters = w.letters();
        let mut out = Vec::new();
        for pos in 0..letters.len() {
            if let Some(ids) = self.by_first.get(&letters[pos]) {
                for &i in ids {
                    if letters[pos..].starts_with(self.rules[i].lhs.letters()) {
                        out.push((pos, i));
                    }
                }
            }
        }
        out
    }

    pub fn is_terminus(&self, w: &Word) -> bool {
        let letters = w.letters();
        (0..letters.len()).all(|p| self.rule_at(letters, p).is_none())
    }

    /// Apply rule `rule` at `pos`.
    pub fn step(&self, w: &Word, pos: usize, rule: usize) -> Word {
        let r = &self.rules[rule];
        let letters = w.letters();
        let mut out = Vec::with_capacity(letters.len() + r.rhs.len());
        out.extend_from_slice(&letters[..pos]);
        out.extend_from_slice(r.rhs.letters());
        out.extend_from_slice(&letters[pos + r.lhs.len()..]);
        Word::new(out)
    }

    /// Rewrite to a terminus.
    pub fn normalize(&self, w: &Word, strategy: Strategy) -> Result<Word> {
        match strategy {
            Strategy::Leftmost => self.normalize_leftmost(w),
            Strategy::Rightmost => self.normalize_by(w, |redexes| redexes.last().copied()),
            Strategy::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                self.normalize_by(w, |redexes| {
                    if redexes.is_empty() {
                        None
                    } else {
                        Some(redexes[rng.gen_range(0..redexes.len())])
                    }
                })
            }
        }
    }

    fn normalize_leftmost(&self, w: &Word) -> Result<Word> {
        let mut letters = w.letters().to_vec();
        let mut steps = 0u64;
        let mut pos = 0;
        while pos < letters.len() {
            match self.rule_at(&letters, pos) {
                Some(i) => {
                    steps += 1;
                    if steps > self.budget {
                        return Err(Error::BudgetExceeded(self.budget));
                    }
                    let r = &self.rules[i];
                    letters.splice(pos..pos + r.lhs.len(), r.rhs.iter().copied());
                    pos = pos.saturating_sub(self.max_lhs - 1);
                }
                None => pos += 1,
            }
        }
        Ok(Word::new(letters))
    }

    fn normalize_by<F>(&self, w: &Word, mut choose: F) -> Result<Word>
    where
        F: FnMut(&[(usize, usize)]) -> Option<(usize, usize)>,
    {
        let mut current = w.clone();
        let mut steps = 0u64;
        loop {
            let redexes = self.redexes(&current);
            let Some((pos, rule)) = choose(&redexes) else {
                return Ok(current);
            };
            steps += 1;
            if steps > self.budget {
                return Err(Error::BudgetExceeded(self.budget));
            }
            current = self.step(&current, pos, rule);
        }
    }

    /// All critical pairs: proper overlaps of two left sides (a suffix of
    /// the first equal to a prefix of the second) and containments of one
    /// left side in another. Disjoint redexes are not critical.
    pub fn critical_pairs(&self) -> Vec<CriticalPair> {
        let mut out = Vec::new();
        for (i, r1) in self.rules.iter().enumerate() {
            let l1 = r1.lhs.letters();
            // proper overlaps
            for k in 1..l1.len() {
                let start = l1.len() - k;
                let Some(cands) = self.by_first.get(&l1[start]) else {
                    continue;
                };
                for &j in cands {
                    let r2 = &self.rules[j];
                    let l2 = r2.lhs.letters();
                    if l2.len() <= k || l1[start..] != l2[..k] {
                        continue;
                    }
                    let peak = Word::new([l1, &l2[k..]].concat());
                    let left = Word::new([r1.rhs.letters(), &l2[k..]].concat());
                    let right = Word::new([&l1[..start], r2.rhs.letters()].concat());
                    out.push(CriticalPair {
                        peak,
                        left,
                        right,
                        rules: (r1.tag.clone(), r2.tag.clone()),
                        rule_ids: (i, j),
                        overlap: start,
                    });
                }
            }
            // containments
            for p in 0..l1.len() {
                let Some(cands) = self.by_first.get(&l1[p]) else {
                    continue;
                };
                for &j in cands {
                    if j == i {
                        continue;
                    }
                    let r2 = &self.rules[j];
                    let l2 = r2.lhs.letters();
                    if p + l2.len() > l1.len() || l1[p..p + l2.len()] != *l2 {
                        continue;
                    }
                    if l2.len() == l1.len() && j < i {
                        continue;
                    }
                    let right = Word::new(
                        [&l1[..p], r2.rhs.letters(), &l1[p + l2.len()..]].concat(),
                    );
                    out.push(CriticalPair {
                        peak: r1.lhs.clone(),
                        left: r1.rhs.clone(),
                        right,
                        rules: (r1.tag.clone(), r2.tag.clone()),
                        rule_ids: (i, j),
                        overlap: p,
                    });
                }
            }
        }
        out
    }

    /// Joinability of every critical pair, decided by normalizing both
    /// sides.
    pub fn check_local_confluence(&self) -> Result<ConfluenceReport> {
        let pairs = self.critical_pairs();
        let mut failures = Vec::new();
        for cp in &pairs {
            let l = self.normalize(&cp.left, Strategy::Leftmost)?;
            let r = self.normalize(&cp.right, Strategy::Leftmost)?;
            if l != r {
                failures.push(cp.clone());
            }
        }
        Ok(ConfluenceReport {
            pairs_checked: pairs.len(),
            failures,
        })
    }

    /// Walk random rewrite sequences from `samples` random words of length
    /// at most `max_len` and check that every available single step lowers
    /// `measure`.
    pub fn check_termination(
        &self,
        measure: &dyn TerminationMeasure,
        samples: usize,
        max_len: usize,
        seed: u64,
    ) -> TerminationReport {
        let alphabet = self.alphabet();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = TerminationReport {
            measure: measure.name().to_string(),
            samples,
            steps_checked: 0,
            violations: Vec::new(),
            exhausted: 0,
        };
        for _ in 0..samples {
            let len = rng.gen_range(0..=max_len);
            let mut current = random_word(&mut rng, &alphabet, len);
            let mut steps = 0u64;
            'walk: loop {
                let redexes = self.redexes(&current);
                if redexes.is_empty() {
                    break;
                }
                let before = measure.eval(&current);
                for &(pos, rule) in &redexes {
                    let next = self.step(&current, pos, rule);
                    let after = measure.eval(&next);
                    report.steps_checked += 1;
                    if after >= before {
                        report.violations.push(Violation {
                            word: current.clone(),
                            rule: self.rules[rule].tag.clone(),
                            position: pos,
                            before,
                            after,
                        });
                        break 'walk;
                    }
                }
                steps += 1;
                if steps > self.budget {
                    report.exhausted += 1;
                    break;
                }
                let (pos, rule) = redexes[rng.gen_range(0..redexes.len())];
                current = self.step(&current, pos, rule);
            }
        }
        report
    }
}

/// The instance at `a` of every locally free schema that would apply to
/// `l1 l2` in the unbounded system, if any.
pub fn unbounded_redex(l1: Letter, l2: Letter) -> Option<(Schema, Atom)> {
    Schema::match_pair(l1, l2)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalPair {
    pub peak: Word,
    pub left: Word,
    pub right: Word,
    pub rules: (String, String),
    pub rule_ids: (usize, usize),
    /// Position in `peak` at which the second rule applies.
    pub overlap: usize,
}

impl fmt::Display for CriticalPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "peak={} left={} right={} rules={},{}",
            self.peak, self.left, self.right, self.rules.0, self.rules.1
        )
    }
}

#[derive(Debug, Clone)]
pub struct ConfluenceReport {
    pub pairs_checked: usize,
    pub failures: Vec<CriticalPair>,
}

impl ConfluenceReport {
    pub fn joinable(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for ConfluenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "status: {}", if self.joinable() { "PASS" } else { "FAIL" })?;
        writeln!(f, "pairs-checked: {}", self.pairs_checked)?;
        writeln!(f, "failures: {}", self.failures.len())?;
        for cp in &self.failures {
            writeln!(f, "{cp}")?;
        }
        Ok(())
    }
}

/// A natural-number valued function on words.
pub trait TerminationMeasure {
    fn name(&self) -> &str;
    fn eval(&self, w: &Word) -> u64;
}

/// `Len(w)`.
pub struct Length;

impl TerminationMeasure for Length {
    fn name(&self) -> &str {
        "len"
    }

    fn eval(&self, w: &Word) -> u64 {
        w.len() as u64
    }
}

/// `Len(w) + j(w)`, where `j` counts pairs of a channel-0 letter with a
/// channel-1 letter somewhere to its right.
pub struct LenPlusJ;

impl TerminationMeasure for LenPlusJ {
    fn name(&self) -> &str {
        "len+j"
    }

    fn eval(&self, w: &Word) -> u64 {
        w.len() as u64 + j_count(w)
    }
}

pub fn j_count(w: &Word) -> u64 {
    let mut ones_right = 0u64;
    let mut total = 0u64;
    for l in w.letters().iter().rev() {
        match l.channel() {
            Some(Channel::One) => ones_right += 1,
            Some(Channel::Zero) => total += ones_right,
            None => {}
        }
    }
    total
}

/// `Len(w) + j(w)`.
pub fn measure(w: &Word) -> u64 {
    LenPlusJ.eval(w)
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub word: Word,
    pub rule: String,
    pub position: usize,
    pub before: u64,
    pub after: u64,
}

#[derive(Debug, Clone)]
pub struct TerminationReport {
    pub measure: String,
    pub samples: usize,
    pub steps_checked: u64,
    pub violations: Vec<Violation>,
    /// Walks cut off by the step budget.
    pub exhausted: usize,
}

impl TerminationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.exhausted == 0
    }
}

impl fmt::Display for TerminationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "status: {}", if self.passed() { "PASS" } else { "FAIL" })?;
        writeln!(f, "measure: {}", self.measure)?;
        writeln!(f, "samples: {}", self.samples)?;
        writeln!(f, "steps-checked: {}", self.steps_checked)?;
        writeln!(f, "budget-exhausted: {}", self.exhausted)?;
        writeln!(f, "violations: {}", self.violations.len())?;
        for v in &self.violations {
            writeln!(
                f,
                "word={} rule={} at={} before={} after={}",
                v.word, v.rule, v.position, v.before, v.after
            )?;
        }
        Ok(())
    }
}
