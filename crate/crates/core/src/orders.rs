//! Orders: shortlex on normal forms, the Magnus order on free groups, a
//! lexicographic order on the dyadic group, finite signing search and the
//! shift-equivariance contradiction trace.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::catalog::{GroupElement, GroupSpec, MarkedGroup};
use crate::dyadic::{to_dyadic, DyadicVector};
use crate::error::{Error, Result};
use crate::word::{free_reduce, Atom, Gen, Letter, ShiftAutomorphism, Word};

/// Letter precedence: `g' < g`, generators in their derived order (atoms by
/// family then position, channel 0 before channel 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LetterOrder;

impl LetterOrder {
    pub fn compare(&self, a: Letter, b: Letter) -> Ordering {
        a.cmp(&b)
    }

    pub fn shortlex(&self, u: &Word, v: &Word) -> Ordering {
        u.len().cmp(&v.len()).then_with(|| {
            u.iter()
                .zip(v.iter())
                .map(|(a, b)| self.compare(*a, *b))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }
}

/// Towers have no canonical normal forms and so no letter order.
pub fn letter_order(group: &MarkedGroup) -> Option<LetterOrder> {
    group.has_canonical_nf().then_some(LetterOrder)
}

pub fn shortlex_compare(u: &GroupElement, v: &GroupElement) -> Result<Ordering> {
    if u.owner() != v.owner() {
        return Err(Error::OwnerMismatch(u.owner().to_string(), v.owner().to_string()));
    }
    let order = letter_order(u.owner())
        .ok_or_else(|| Error::domain(format!("{} has no letter order", u.owner())))?;
    Ok(order.shortlex(u.word(), v.word()))
}

type Series = HashMap<Vec<u16>, BigInt>;

/// Magnus expansion of `w` truncated above degree `degree`.
fn magnus_series(basis: &[Gen], w: &Word, degree: usize) -> Result<Series> {
    let mut series: Series = HashMap::from([(Vec::new(), BigInt::one())]);
    for l in w.iter() {
        let i = basis
            .iter()
            .position(|g| *g == l.gen)
            .ok_or_else(|| Error::domain(format!("{l} is not a basis letter")))? as u16;
        let mut next: Series = HashMap::with_capacity(series.len() * 2);
        for (m, c) in &series {
            let room = degree - m.len();
            // x -> 1 + x, x' -> 1 - x + x^2 - ...
            let top = if l.positive { room.min(1) } else { room };
            for j in 0..=top {
                let sign_negative = !l.positive && j % 2 == 1;
                let mut mono = m.clone();
                mono.extend(std::iter::repeat(i).take(j));
                let entry = next.entry(mono).or_insert_with(BigInt::zero);
                if sign_negative {
                    *entry -= c;
                } else {
                    *entry += c;
                }
            }
        }
        next.retain(|_, c| !c.is_zero());
        series = next;
    }
    Ok(series)
}

/// Sign of `w` in the Magnus order: the sign of the coefficient of the least
/// non-constant monomial (graded, then lexicographic by basis order).
pub fn magnus_sign(basis: &[Gen], w: &Word) -> Result<Ordering> {
    let w = free_reduce(w);
    if w.is_empty() {
        return Ok(Ordering::Equal);
    }
    let mut degree = 1;
    loop {
        let series = magnus_series(basis, &w, degree)?;
        let lead = series
            .iter()
            .filter(|(m, _)| !m.is_empty())
            .min_by(|(a, _), (b, _)| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        if let Some((_, c)) = lead {
            return Ok(if c.is_positive() {
                Ordering::Greater
            } else {
                Ordering::Less
            });
        }
        if degree >= w.len() {
            return Err(Error::Verification(format!(
                "no non-constant Magnus term up to degree {} for {w}",
                w.len()
            )));
        }
        degree = (degree * 2).min(w.len());
    }
}

/// `u < v` iff `u v'` is negative.
pub fn magnus_compare(free: &MarkedGroup, u: &Word, v: &Word) -> Result<Ordering> {
    if !free.is_free() {
        return Err(Error::domain(format!("{free} is not a free group")));
    }
    free.validate(u)?;
    free.validate(v)?;
    magnus_sign(&free.generators(), &u.concat(&v.inverse()))
}

/// Compare at the least family where the components differ.
pub fn dyadic_lex_compare(x: &DyadicVector, y: &DyadicVector) -> Ordering {
    let families: BTreeSet<u32> = x.components().chain(y.components()).map(|(f, _)| f).collect();
    families
        .into_iter()
        .map(|f| x.component(f).cmp(&y.component(f)))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

pub fn dyadic_lex_compare_words(u: &Word, v: &Word) -> Result<Ordering> {
    Ok(dyadic_lex_compare(&to_dyadic(u)?, &to_dyadic(v)?))
}

pub const DEFAULT_BALL_CAP: usize = 4;

/// All normal forms of products of at most `radius` generators (or the
/// given ones) and their inverses, in shortlex order.
pub fn ball(group: &Arc<MarkedGroup>, radius: usize, gens: Option<&[Gen]>) -> Result<Vec<GroupElement>> {
    if radius > DEFAULT_BALL_CAP {
        return Err(Error::domain(format!(
            "radius {radius} exceeds the cap {DEFAULT_BALL_CAP}"
        )));
    }
    if !group.has_canonical_nf() {
        return Err(Error::domain(format!("{group} has no canonical normal forms")));
    }
    let gens: Vec<Gen> = match gens {
        Some(g) => g.to_vec(),
        None => group.generators(),
    };
    let letters: Vec<Word> = gens
        .iter()
        .flat_map(|g| [Word::letter(g.neg()), Word::letter(g.pos())])
        .collect();
    for l in &letters {
        group.validate(l)?;
    }
    let mut seen: BTreeSet<Word> = BTreeSet::from([Word::empty()]);
    let mut frontier = vec![Word::empty()];
    for _ in 0..radius {
        let mut next = Vec::new();
        for u in &frontier {
            for l in &letters {
                let w = group.nf(&u.concat(l))?;
                if seen.insert(w.clone()) {
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    let mut out: Vec<Word> = seen.into_iter().collect();
    out.sort_by(|a, b| LetterOrder.shortlex(a, b));
    out.iter().map(|w| group.element(w)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Left,
    Bi,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Left => "left",
            Mode::Bi => "bi",
        })
    }
}

pub const DEFAULT_SIGNING_CAP: usize = 64;

/// A choice of sign for every element of a finite symmetric set.
#[derive(Debug, Clone)]
pub struct Signing {
    pub mode: Mode,
    /// Shortlex sorted.
    pub domain: Vec<Word>,
    pub positive: BTreeSet<Word>,
}

impl Signing {
    pub fn is_positive(&self, w: &Word) -> bool {
        self.positive.contains(w)
    }

    /// Re-check every signing axiom directly against the group.
    pub fn verify(&self, group: &MarkedGroup) -> Result<()> {
        let domain: BTreeSet<Word> = self.domain.iter().cloned().collect();
        for g in &self.domain {
            let inv = group.nf(&g.inverse())?;
            if self.is_positive(g) == self.is_positive(&inv) {
                return Err(Error::Verification(format!("{g} and its inverse have the same sign")));
            }
        }
        let broken = |what: String| Err(Error::Verification(what));
        for g in &self.positive {
            for h in &self.positive {
                let gh = group.nf(&g.concat(h))?;
                if gh.is_empty() || (domain.contains(&gh) && !self.is_positive(&gh)) {
                    return broken(format!("{g} and {h} are positive but {gh} is not"));
                }
            }
            if self.mode == Mode::Bi {
                for k in conjugators(group, &self.domain) {
                    let Some(c) = try_nf(group, &g.conjugate_by(&k))? else { continue };
                    if domain.contains(&c) && !self.is_positive(&c) {
                        return broken(format!("{g} is positive but its conjugate {c} by {k} is not"));
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Signing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.domain {
            writeln!(f, "{} {}", if self.is_positive(w) { '+' } else { '-' }, w)?;
        }
        Ok(())
    }
}

/// Normal form, or `None` when the window cannot represent the word.
fn try_nf(group: &MarkedGroup, w: &Word) -> Result<Option<Word>> {
    match group.nf(w) {
        Ok(n) => Ok(Some(n)),
        Err(Error::WindowBoundary(_) | Error::OutsideWindow { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// The domain together with generators and their inverses.
fn conjugators(group: &MarkedGroup, domain: &[Word]) -> Vec<Word> {
    let mut ks: BTreeSet<Word> = domain.iter().cloned().collect();
    for g in group.generators() {
        ks.insert(Word::letter(g.pos()));
        ks.insert(Word::letter(g.neg()));
    }
    ks.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepKind {
    /// Case `1` asserts the split element, case `2` its inverse.
    Assume { case: u8 },
    Product(usize, usize),
    Conjugate { by: Word, of: usize },
    /// The element of this step is the inverse of the one established at
    /// `with`; closes the innermost open case.
    Clash { from: usize, with: usize },
}

/// One line of a refutation: `element` must be positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub element: Word,
    pub kind: StepKind,
}

/// A case-split refutation of every signing of `elements`.
#[derive(Debug, Clone)]
pub struct ObstructionCertificate {
    pub mode: Mode,
    /// The subset of the searched set the refutation uses, shortlex sorted.
    pub elements: Vec<Word>,
    pub steps: Vec<Step>,
}

impl ObstructionCertificate {
    /// Replay every step against the group's normal forms.
    pub fn verify(&self, group: &MarkedGroup) -> Result<()> {
        let fail = |i: usize, what: &str| Err(Error::Verification(format!("step {}: {what}", i + 1)));
        let domain: BTreeSet<Word> = self.elements.iter().cloned().collect();
        let ks: BTreeSet<Word> = conjugators(group, &self.elements).into_iter().collect();
        let mut active = vec![false; self.steps.len()];
        // open cases: (case-1 step of the split, case number, first step of the case)
        let mut open: Vec<(usize, u8, usize)> = Vec::new();
        let mut closed = false;
        let mut expect_case2: Option<usize> = None;
        for (i, step) in self.steps.iter().enumerate() {
            if closed {
                return fail(i, "steps after the refutation closed");
            }
            let live = |j: usize| j < i && active[j];
            if !domain.contains(&step.element) {
                return fail(i, "element outside the certificate's set");
            }
            if expect_case2.is_some() && step.kind != (StepKind::Assume { case: 2 }) {
                return fail(i, "expected the second case of a split");
            }
            match &step.kind {
                StepKind::Assume { case: 1 } => open.push((i, 1, i)),
                StepKind::Assume { case: 2 } => {
                    let Some(first) = expect_case2.take() else {
                        return fail(i, "second case without a first");
                    };
                    if !group.nf(&self.steps[first].element.concat(&step.element))?.is_empty() {
                        return fail(i, "second case is not the inverse of the first");
                    }
                    open.push((first, 2, i));
                }
                StepKind::Assume { .. } => return fail(i, "bad case number"),
                StepKind::Product(a, b) => {
                    if !live(*a) || !live(*b) {
                        return fail(i, "product cites an inactive step");
                    }
                    let p = group.nf(&self.steps[*a].element.concat(&self.steps[*b].element))?;
                    if p != step.element {
                        return fail(i, "product does not match");
                    }
                }
                StepKind::Conjugate { by, of } => {
                    if self.mode != Mode::Bi {
                        return fail(i, "conjugation is only available for bi-orders");
                    }
                    if !live(*of) || !ks.contains(by) {
                        return fail(i, "conjugation cites an inactive step or a bad conjugator");
                    }
                    if group.nf(&self.steps[*of].element.conjugate_by(by))? != step.element {
                        return fail(i, "conjugate does not match");
                    }
                }
                StepKind::Clash { from, with } => {
                    if !live(*from) || !live(*with) || self.steps[*from].element != step.element {
                        return fail(i, "clash cites an inactive step");
                    }
                    if !group.nf(&step.element.concat(&self.steps[*with].element))?.is_empty() {
                        return fail(i, "clashing elements are not inverse");
                    }
                }
            }
            active[i] = true;
            if matches!(step.kind, StepKind::Clash { .. }) {
                // close cases until one still has its second branch pending
                loop {
                    let Some((first, case, start)) = open.pop() else {
                        closed = true;
                        break;
                    };
                    for a in &mut active[start..=i] {
                        *a = false;
                    }
                    if case == 1 {
                        expect_case2 = Some(first);
                        break;
                    }
                }
            }
        }
        if !closed {
            return Err(Error::Verification("refutation does not close every case".into()));
        }
        Ok(())
    }
}

impl fmt::Display for ObstructionCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "OBSTRUCTION")?;
        // print each fact as a sign on the shortlex-least of the pair
        let signed = |w: &Word| -> String {
            let inv = free_reduce(&w.inverse());
            if self.elements.contains(&inv) && LetterOrder.shortlex(&inv, w).is_lt() {
                format!("{inv} must be -")
            } else {
                format!("{w} must be +")
            }
        };
        for (i, s) in self.steps.iter().enumerate() {
            let why = match &s.kind {
                StepKind::Assume { case } => format!("case {case} of 2"),
                StepKind::Product(a, b) => format!("product {} {}", a + 1, b + 1),
                StepKind::Conjugate { by, of } => format!("conjugation by {by} {}", of + 1),
                StepKind::Clash { from, with } => format!("contradiction {} {}", from + 1, with + 1),
            };
            writeln!(f, "{}: {} because {}", i + 1, signed(&s.element), why)?;
        }
        write!(f, "elements:")?;
        for w in &self.elements {
            write!(f, " {w}")?;
        }
        writeln!(f)
    }
}

#[derive(Debug, Clone)]
pub enum SigningOutcome {
    Signing(Signing),
    Obstruction(ObstructionCertificate),
}

#[derive(Debug, Clone)]
enum Rule {
    Product(usize, usize),
    Conjugate { by: Word, by_elem: Option<usize>, of: usize },
}

#[derive(Debug, Clone)]
struct Clause {
    premises: Vec<usize>,
    conclusion: usize,
    rule: Rule,
}

/// Elements and closure constraints for a sign search.
struct Problem {
    elements: Vec<Word>,
    inverse: Vec<usize>,
    clauses: Vec<Clause>,
}

impl Problem {
    fn build(group: &MarkedGroup, set: &[Word], mode: Mode) -> Result<Problem> {
        let mut elements: BTreeSet<Word> = BTreeSet::new();
        for w in set {
            let n = group.nf(w)?;
            if n.is_empty() {
                return Err(Error::domain("the identity cannot be signed"));
            }
            elements.insert(group.nf(&n.inverse())?);
            elements.insert(n);
        }
        if elements.len() > DEFAULT_SIGNING_CAP {
            return Err(Error::domain(format!(
                "{} elements exceed the signing cap {DEFAULT_SIGNING_CAP}",
                elements.len()
            )));
        }
        let mut elements: Vec<Word> = elements.into_iter().collect();
        elements.sort_by(|a, b| LetterOrder.shortlex(a, b));
        let index: HashMap<Word, usize> = elements.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let mut inverse = Vec::with_capacity(elements.len());
        for w in &elements {
            inverse.push(index[&group.nf(&w.inverse())?]);
        }
        let mut clauses = Vec::new();
        for (i, g) in elements.iter().enumerate() {
            for (j, h) in elements.iter().enumerate() {
                if let Some(p) = try_nf(group, &g.concat(h))? {
                    if let Some(&k) = index.get(&p) {
                        clauses.push(Clause {
                            premises: vec![i, j],
                            conclusion: k,
                            rule: Rule::Product(i, j),
                        });
                    }
                }
            }
        }
        if mode == Mode::Bi {
            for by in conjugators(group, &elements) {
                let by_elem = index.get(&by).copied();
                let is_gen = by.len() == 1 && group.generators().contains(&by.letters()[0].gen);
                for (i, g) in elements.iter().enumerate() {
                    if let Some(c) = try_nf(group, &g.conjugate_by(&by))? {
                        if let Some(&k) = index.get(&c) {
                            if k != i {
                                clauses.push(Clause {
                                    premises: vec![i],
                                    conclusion: k,
                                    rule: Rule::Conjugate {
                                        by: by.clone(),
                                        by_elem: if is_gen { None } else { by_elem },
                                        of: i,
                                    },
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(Problem {
            elements,
            inverse,
            clauses,
        })
    }

    /// Pair representatives: the shortlex-least of each `{g, g'}`.
    fn representatives(&self, keep: &[bool]) -> Vec<usize> {
        (0..self.elements.len())
            .filter(|&i| keep[i] && i <= self.inverse[i])
            .collect()
    }

    fn solve(&self, keep: &[bool]) -> (Option<Vec<usize>>, Vec<Step>) {
        let watch = {
            let mut watch: Vec<Vec<usize>> = vec![Vec::new(); self.elements.len()];
            for (c, clause) in self.clauses.iter().enumerate() {
                let usable = clause.premises.iter().all(|&p| keep[p])
                    && keep[clause.conclusion]
                    && match &clause.rule {
                        Rule::Conjugate { by_elem: Some(k), .. } => keep[*k],
                        _ => true,
                    };
                if usable {
                    for &p in &clause.premises {
                        watch[p].push(c);
                    }
                }
            }
            watch
        };
        let mut s = Search {
            problem: self,
            watch,
            fact: vec![None; self.elements.len()],
            trail: Vec::new(),
            steps: Vec::new(),
        };
        let reps = self.representatives(keep);
        let model = s.refute(&reps);
        (model, s.steps)
    }
}

struct Search<'a> {
    problem: &'a Problem,
    watch: Vec<Vec<usize>>,
    /// Step that made the element positive.
    fact: Vec<Option<usize>>,
    trail: Vec<usize>,
    steps: Vec<Step>,
}

impl Search<'_> {
    fn positive(&self, e: usize) -> bool {
        self.fact[e].is_some()
    }

    fn negative(&self, e: usize) -> bool {
        self.fact[self.problem.inverse[e]].is_some()
    }

    fn set(&mut self, e: usize, kind: StepKind) -> usize {
        self.steps.push(Step {
            element: self.problem.elements[e].clone(),
            kind,
        });
        let s = self.steps.len() - 1;
        self.fact[e] = Some(s);
        self.trail.push(e);
        s
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let e = self.trail.pop().unwrap();
            self.fact[e] = None;
        }
    }

    /// Forward closure from the elements made positive since `from`;
    /// false on a clash (which is recorded).
    fn propagate(&mut self, from: usize) -> bool {
        let mut queue = from;
        while queue < self.trail.len() {
            let e = self.trail[queue];
            queue += 1;
            for ci in 0..self.watch[e].len() {
                let clause = &self.problem.clauses[self.watch[e][ci]];
                if !clause.premises.iter().all(|&p| self.positive(p)) || self.positive(clause.conclusion) {
                    continue;
                }
                let kind = match &clause.rule {
                    Rule::Product(a, b) => StepKind::Product(self.fact[*a].unwrap(), self.fact[*b].unwrap()),
                    Rule::Conjugate { by, of, .. } => StepKind::Conjugate {
                        by: by.clone(),
                        of: self.fact[*of].unwrap(),
                    },
                };
                let c = clause.conclusion;
                if self.negative(c) {
                    let with = self.fact[self.problem.inverse[c]].unwrap();
                    let element = self.problem.elements[c].clone();
                    self.steps.push(Step {
                        element: element.clone(),
                        kind,
                    });
                    let from = self.steps.len() - 1;
                    self.steps.push(Step {
                        element,
                        kind: StepKind::Clash { from, with },
                    });
                    return false;
                }
                self.set(c, kind);
            }
        }
        true
    }

    /// Some positive set if satisfiable; otherwise the steps hold a refutation.
    fn refute(&mut self, reps: &[usize]) -> Option<Vec<usize>> {
        let Some(&v) = reps.iter().find(|&&r| !self.positive(r) && !self.negative(r)) else {
            return Some(self.trail.clone());
        };
        for (case, e) in [(1u8, v), (2u8, self.problem.inverse[v])] {
            let mark = self.trail.len();
            self.set(e, StepKind::Assume { case });
            if self.propagate(mark) {
                if let Some(m) = self.refute(reps) {
                    return Some(m);
                }
            }
            self.undo(mark);
        }
        None
    }
}

/// Search for a signing of the symmetric closure of `set`, or refute one.
pub fn search_signing(group: &MarkedGroup, set: &[Word], mode: Mode) -> Result<SigningOutcome> {
    let problem = Problem::build(group, set, mode)?;
    let n = problem.elements.len();
    let mut keep = vec![true; n];
    if let (Some(model), _) = problem.solve(&keep) {
        let positive = model.into_iter().map(|e| problem.elements[e].clone()).collect();
        let signing = Signing {
            mode,
            domain: problem.elements.clone(),
            positive,
        };
        signing.verify(group)?;
        return Ok(SigningOutcome::Signing(signing));
    }
    // greedy removal of pairs, latest first
    for r in problem.representatives(&keep).into_iter().rev() {
        let inv = problem.inverse[r];
        keep[r] = false;
        keep[inv] = false;
        if problem.solve(&keep).0.is_some() {
            keep[r] = true;
            keep[inv] = true;
        }
    }
    let (_, steps) = problem.solve(&keep);
    let cert = ObstructionCertificate {
        mode,
        elements: (0..n).filter(|&i| keep[i]).map(|i| problem.elements[i].clone()).collect(),
        steps,
    };
    cert.verify(group)?;
    Ok(SigningOutcome::Obstruction(cert))
}

/// A conditional derivation from a sign premise and shift-equivariance.
#[derive(Debug, Clone)]
pub struct ContradictionTrace {
    pub premises: Vec<String>,
    pub steps: Vec<TraceStep>,
    pub conclusion: String,
}

#[derive(Debug, Clone)]
pub struct TraceStep {
    pub claim: String,
    /// `lhs = rhs` checked by the group's normal forms.
    pub identity: Option<(Word, Word)>,
    /// `tau(from) = to` checked by applying the shift.
    pub shift: Option<(ShiftAutomorphism, Word, Word)>,
}

impl ContradictionTrace {
    pub fn replay(&self, group: &MarkedGroup) -> Result<()> {
        for (i, s) in self.steps.iter().enumerate() {
            if let Some((l, r)) = &s.identity {
                if !group.equal(l, r)? {
                    return Err(Error::Verification(format!("step {}: {l} != {r}", i + 1)));
                }
            }
            if let Some((tau, from, to)) = &s.shift {
                if tau.apply(from) != *to {
                    return Err(Error::Verification(format!("step {}: shift of {from} is not {to}", i + 1)));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for ContradictionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.premises {
            writeln!(f, "premise: {p}")?;
        }
        for (i, s) in self.steps.iter().enumerate() {
            write!(f, "step {}: {}", i + 1, s.claim)?;
            if s.identity.is_some() || s.shift.is_some() {
                write!(f, " [verified]")?;
            }
            writeln!(f)?;
        }
        writeln!(f, "conclusion: {}", self.conclusion)
    }
}

fn sign_char(positive: bool) -> char {
    if positive {
        '+'
    } else {
        '-'
    }
}

/// Replay the contradiction between a sign on `(a,1)` (or `a` in the dyadic
/// group) and invariance under the unit shift of `family`.
pub fn replay_tau_obstruction(group: &MarkedGroup, family: u32, premise: bool) -> Result<ContradictionTrace> {
    let win = match group.spec() {
        GroupSpec::LocallyFree(w) | GroupSpec::Dyadic(w) => w,
        other => return Err(Error::domain(format!("the shift trace needs a G or A window, not {other}"))),
    };
    if family > win.max_family || win.max_position < 1 {
        return Err(Error::domain(format!("family {family} with its successor is outside {group}")));
    }
    let a = Atom::new(family, 0);
    let s = a.succ();
    let tau = ShiftAutomorphism::single(family, 1);
    let (p, q) = (sign_char(premise), sign_char(!premise));
    let trace = match group.spec() {
        GroupSpec::LocallyFree(_) => {
            let ya = Word::gen(Gen::y(a.family, a.position));
            let ys = Word::gen(Gen::y(s.family, s.position));
            let xs = Word::gen(Gen::x(s.family, s.position));
            let lhs = ya.conjugate_by(&xs);
            ContradictionTrace {
                premises: vec![format!("sgn({ya}) = {p}"), "sgn is invariant under the shift".into()],
                steps: vec![
                    TraceStep {
                        claim: format!("{lhs} = {}", ys.inverse()),
                        identity: Some((lhs.clone(), ys.inverse())),
                        shift: None,
                    },
                    TraceStep {
                        claim: format!(
                            "conjugation invariance gives sgn({}) = {p}, so sgn({ys}) = {q}",
                            ys.inverse()
                        ),
                        identity: None,
                        shift: None,
                    },
                    TraceStep {
                        claim: format!("shift invariance gives sgn({ys}) = sgn({ya}) = {p}"),
                        identity: None,
                        shift: Some((tau, ya, ys)),
                    },
                ],
                conclusion: "CONTRADICTION".into(),
            }
        }
        _ => {
            let aa = Word::gen(Gen::abelian(a.family, a.position));
            let sa = Word::gen(Gen::abelian(s.family, s.position));
            let rhs = sa.inverse().pow(2);
            ContradictionTrace {
                premises: vec![format!("sgn({aa}) = {p}"), "sgn is invariant under the shift".into()],
                steps: vec![
                    TraceStep {
                        claim: format!("{aa} = {rhs}"),
                        identity: Some((aa.clone(), rhs)),
                        shift: None,
                    },
                    TraceStep {
                        claim: format!(
                            "a square has the sign of its root, so sgn({}) = {p} and sgn({sa}) = {q}",
                            sa.inverse()
                        ),
                        identity: None,
                        shift: None,
                    },
                    TraceStep {
                        claim: format!("shift invariance gives sgn({sa}) = sgn({aa}) = {p}"),
                        identity: None,
                        shift: Some((tau, aa, sa)),
                    },
                ],
                conclusion: "CONTRADICTION".into(),
            }
        }
    };
    trace.replay(group)?;
    Ok(trace)
}

/// The dyadic value of `a[n,k]` alternates in sign with `k`.
pub fn dyadic_generator_sign(family: u32, position: i64) -> Ordering {
    let v = to_dyadic(&Word::gen(Gen::abelian(family, position))).expect("abelian letter");
    dyadic_lex_compare(&v, &DyadicVector::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_group, nf_product};
    use crate::word::{parse_word, random_word};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> Word {
        parse_word(s).unwrap()
    }

    fn group(s: &str) -> Arc<MarkedGroup> {
        Arc::new(make_group(s).unwrap())
    }

    #[test]
    fn shortlex_examples() {
        let g = group("G[1,4]");
        let el = |s: &str| g.element(&w(s)).unwrap();
        assert_eq!(shortlex_compare(&el(""), &el("x[0,0]")).unwrap(), Ordering::Less);
        assert_eq!(shortlex_compare(&el("x[0,0]'"), &el("x[0,0]")).unwrap(), Ordering::Less);
        assert_eq!(shortlex_compare(&el("x[0,0]"), &el("y[0,0]")).unwrap(), Ordering::Less);
        assert_eq!(shortlex_compare(&el("x[0,0]"), &el("y[0,0]'")).unwrap(), Ordering::Less);
        assert_eq!(shortlex_compare(&el("x[0,3]"), &el("x[1,-3]")).unwrap(), Ordering::Less);
        let t = group("tower[2]");
        let e = t.element(&w("t")).unwrap();
        assert!(shortlex_compare(&e, &e).is_err());
    }

    #[test]
    fn shortlex_is_strict_total_on_balls() {
        for spec in ["klein", "free:2", "G[0,3]"] {
            let g = group(spec);
            let gens: Vec<Gen> = g.sample_generators().into_iter().take(4).collect();
            let b = ball(&g, 3, Some(&gens)).unwrap();
            for u in &b {
                assert_eq!(shortlex_compare(u, u).unwrap(), Ordering::Equal);
                for v in &b {
                    let uv = shortlex_compare(u, v).unwrap();
                    assert_eq!(uv, shortlex_compare(v, u).unwrap().reverse());
                    assert_eq!(uv == Ordering::Equal, u == v);
                }
            }
            // ball() returns shortlex order, so transitivity reduces to sortedness
            for win in b.windows(2) {
                assert_eq!(shortlex_compare(&win[0], &win[1]).unwrap(), Ordering::Less);
            }
        }
    }

    #[test]
    fn shortlex_is_shift_equivariant_but_not_left_invariant() {
        let g = group("G[1,5]");
        let gens = [Gen::x(0, 1), Gen::y(0, 0), Gen::y(0, 1), Gen::x(1, 0)];
        let b = ball(&g, 2, Some(&gens)).unwrap();
        let tau = ShiftAutomorphism::single(0, 1);
        for u in &b {
            for v in &b {
                let tu = g.element(&tau.apply(u.word())).unwrap();
                let tv = g.element(&tau.apply(v.word())).unwrap();
                assert_eq!(shortlex_compare(u, v).unwrap(), shortlex_compare(&tu, &tv).unwrap());
            }
        }
        let mut witness = None;
        'outer: for u in &b {
            for v in &b {
                for k in &b {
                    if shortlex_compare(u, v).unwrap().is_lt()
                        && shortlex_compare(&nf_product(k, u).unwrap(), &nf_product(k, v).unwrap())
                            .unwrap()
                            .is_gt()
                    {
                        witness = Some((u.clone(), v.clone(), k.clone()));
                        break 'outer;
                    }
                }
            }
        }
        assert!(witness.is_some());
    }

    #[test]
    fn magnus_examples() {
        let f = make_group("free:2").unwrap();
        assert_eq!(magnus_compare(&f, &w("a b"), &w("a b")).unwrap(), Ordering::Equal);
        assert_eq!(magnus_compare(&f, &w(""), &w("a")).unwrap(), Ordering::Less);
        assert_eq!(magnus_compare(&f, &w(""), &w("a b a' b'")).unwrap(), Ordering::Less);
        assert_eq!(magnus_compare(&f, &w("b"), &w("a")).unwrap(), Ordering::Less);
        assert!(magnus_compare(&make_group("klein").unwrap(), &w("x"), &w("y")).is_err());
    }

    #[test]
    fn magnus_is_a_bi_order_on_samples() {
        let f = make_group("free:2").unwrap();
        let basis = f.generators();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let mut pick = || {
                let len = rng.gen_range(0..=6);
                random_word(&mut rng, &basis, len)
            };
            let (u, v, k) = (pick(), pick(), pick());
            let su = magnus_sign(&basis, &u).unwrap();
            let sv = magnus_sign(&basis, &v).unwrap();
            assert_eq!(su.is_eq(), free_reduce(&u).is_empty());
            if su.is_gt() && sv.is_gt() {
                assert!(magnus_sign(&basis, &u.concat(&v)).unwrap().is_gt());
            }
            if su.is_gt() {
                assert!(magnus_sign(&basis, &u.conjugate_by(&k)).unwrap().is_gt());
            }
            assert_eq!(magnus_sign(&basis, &u.inverse()).unwrap(), su.reverse());
        }
    }

    #[test]
    fn dyadic_lex_examples() {
        let z = DyadicVector::zero();
        let v = |s: &str| to_dyadic(&w(s)).unwrap();
        assert_eq!(dyadic_lex_compare(&z, &z), Ordering::Equal);
        assert_eq!(dyadic_lex_compare(&v("a[0,0]"), &z), Ordering::Greater);
        assert_eq!(dyadic_lex_compare(&v("a[0,1]"), &z), Ordering::Less);
        assert_eq!(dyadic_lex_compare(&v("a[1,0]"), &v("a[0,1] a[1,0]")), Ordering::Greater);
        for k in -5..5 {
            assert_eq!(dyadic_generator_sign(0, k), dyadic_generator_sign(0, k + 1).reverse());
        }
    }

    #[test]
    fn dyadic_lex_is_translation_invariant() {
        let gens: Vec<Gen> = (0..2).flat_map(|f| (-3..=3).map(move |k| Gen::abelian(f, k))).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let mut pick = || to_dyadic(&random_word(&mut rng, &gens, 5)).unwrap();
            let (x, y, z) = (pick(), pick(), pick());
            assert_eq!(dyadic_lex_compare(&x, &y), dyadic_lex_compare(&(&x + &z), &(&y + &z)));
        }
    }

    #[test]
    fn ball_examples() {
        let k = group("klein");
        let b: Vec<Word> = ball(&k, 1, None).unwrap().iter().map(|e| e.word().clone()).collect();
        assert_eq!(b, vec![w(""), w("x'"), w("x"), w("y'"), w("y")]);
        assert_eq!(ball(&group("free:1"), 2, None).unwrap().len(), 5);
        assert!(ball(&k, 5, None).is_err());
        assert!(ball(&group("tower[2]"), 1, None).is_err());
        let g = group("G[0,4]");
        let gens = [Gen::x(0, 1), Gen::y(0, 0), Gen::y(0, 1)];
        let b = ball(&g, 2, Some(&gens)).unwrap();
        // distinct classes among all words of length <= 2, by pairwise nf equality
        let mut words = vec![Word::empty()];
        for a in gens.iter().flat_map(|g| [g.pos(), g.neg()]) {
            words.push(Word::letter(a));
            for c in gens.iter().flat_map(|g| [g.pos(), g.neg()]) {
                words.push(Word::new(vec![a, c]));
            }
        }
        let mut reps: Vec<Word> = Vec::new();
        for u in &words {
            if !reps.iter().any(|r| g.equal(r, u).unwrap()) {
                reps.push(u.clone());
            }
        }
        assert_eq!(b.len(), reps.len());
    }

    fn symmetric(group: &MarkedGroup, ws: &[Word]) -> Vec<Word> {
        let mut out = BTreeSet::new();
        for u in ws {
            let n = group.nf(u).unwrap();
            if !n.is_empty() {
                out.insert(group.nf(&n.inverse()).unwrap());
                out.insert(n);
            }
        }
        out.into_iter().collect()
    }

    /// Exhaustive check over every choice of signs.
    fn brute_force_satisfiable(group: &MarkedGroup, set: &[Word], mode: Mode) -> bool {
        let set = symmetric(group, set);
        let reps: Vec<Word> = set
            .iter()
            .filter(|u| LetterOrder.shortlex(u, &group.nf(&u.inverse()).unwrap()).is_lt())
            .cloned()
            .collect();
        assert!(reps.len() <= 12);
        (0u32..1 << reps.len()).any(|mask| {
            let positive: BTreeSet<Word> = reps
                .iter()
                .enumerate()
                .map(|(i, r)| if mask >> i & 1 == 1 { r.clone() } else { group.nf(&r.inverse()).unwrap() })
                .collect();
            Signing {
                mode,
                domain: set.clone(),
                positive,
            }
            .verify(group)
            .is_ok()
        })
    }

    #[test]
    fn klein_bi_obstruction() {
        let k = make_group("klein").unwrap();
        let set = [w("y"), w("x y x'")];
        match search_signing(&k, &set, Mode::Bi).unwrap() {
            SigningOutcome::Obstruction(c) => {
                assert!(c.elements.len() <= 4);
                c.verify(&k).unwrap();
                let text = c.to_string();
                assert!(text.starts_with("OBSTRUCTION\n1: "));
            }
            SigningOutcome::Signing(s) => panic!("unexpected signing\n{s}"),
        }
        assert!(!brute_force_satisfiable(&k, &set, Mode::Bi));
    }

    #[test]
    fn klein_left_signing_exists() {
        let k = Arc::new(make_group("klein").unwrap());
        let set: Vec<Word> = ball(&k, 2, None).unwrap().iter().skip(1).map(|e| e.word().clone()).collect();
        let SigningOutcome::Signing(s) = search_signing(&k, &set, Mode::Left).unwrap() else {
            panic!("expected a signing");
        };
        s.verify(&k).unwrap();
        assert!(brute_force_satisfiable(&k, &set, Mode::Left));
        let SigningOutcome::Obstruction(c) = search_signing(&k, &set, Mode::Bi).unwrap() else {
            panic!("expected an obstruction");
        };
        c.verify(&k).unwrap();
    }

    #[test]
    fn search_agrees_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for spec in ["klein", "free:2", "G[0,3]", "freeab:2"] {
            let g = Arc::new(make_group(spec).unwrap());
            let gens: Vec<Gen> = g.sample_generators().into_iter().take(3).collect();
            for _ in 0..15 {
                let set: Vec<Word> = (0..rng.gen_range(1..6))
                    .map(|_| {
                        let len = rng.gen_range(1..4);
                        random_word(&mut rng, &gens, len)
                    })
                    .filter(|u| !g.nf(u).unwrap().is_empty())
                    .collect();
                for mode in [Mode::Left, Mode::Bi] {
                    let found = search_signing(&g, &set, mode).unwrap();
                    let expected = brute_force_satisfiable(&g, &set, mode);
                    match found {
                        SigningOutcome::Signing(s) => {
                            assert!(expected, "{spec} {mode}");
                            s.verify(&g).unwrap();
                        }
                        SigningOutcome::Obstruction(c) => {
                            assert!(!expected, "{spec} {mode}");
                            c.verify(&g).unwrap();
                            assert!(!brute_force_satisfiable(&g, &c.elements, mode));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tampered_obstruction_fails_replay() {
        let k = make_group("klein").unwrap();
        let SigningOutcome::Obstruction(mut c) = search_signing(&k, &[w("y")], Mode::Bi).unwrap() else {
            panic!("expected an obstruction");
        };
        c.steps.pop();
        assert!(c.verify(&k).is_err());
    }

    #[test]
    fn signing_rejects_identity_and_large_sets() {
        let f = Arc::new(make_group("free:2").unwrap());
        assert!(search_signing(&f, &[w("a a'")], Mode::Bi).is_err());
        let big: Vec<Word> = ball(&f, 4, None).unwrap().iter().skip(1).map(|e| e.word().clone()).collect();
        assert!(search_signing(&f, &big, Mode::Bi).is_err());
    }

    #[test]
    fn tau_traces() {
        let g = make_group("G[1,6]").unwrap();
        for premise in [true, false] {
            let t = replay_tau_obstruction(&g, 0, premise).unwrap();
            assert_eq!(t.steps.len(), 3);
            assert_eq!(t.conclusion, "CONTRADICTION");
            t.replay(&g).unwrap();
        }
        let text = replay_tau_obstruction(&g, 0, true).unwrap().to_string();
        assert!(text.contains("step 1: x[0,1] y[0,0] x[0,1]' = y[0,1]' [verified]"), "{text}");
        let a = make_group("A[0,4]").unwrap();
        let t = replay_tau_obstruction(&a, 0, true).unwrap();
        assert!(t.steps[0].claim.contains("a[0,0] = a[0,1]^-2"), "{}", t.steps[0].claim);
        assert!(replay_tau_obstruction(&g, 2, true).is_err());
        assert!(replay_tau_obstruction(&make_group("klein").unwrap(), 0, true).is_err());
    }
}
