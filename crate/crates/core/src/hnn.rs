//! Two-level HNN towers over a free base and their Britton reduction.
//!
//! Level one adjoins stable letters `t[z]` with `t[z] s(z) t[z]' = s(z+1)`
//! for a map `s` from integers to nontrivial base words. Level two adjoins
//! `t` with `t t[z] t' = t[z+1]`, i.e. `t` conjugates the free group on the
//! `t[z]` by the index shift. Everything is truncated to `z` in `[-Z, Z]`;
//! relations exist for `z` in `[-Z, Z-1]`, and a pinch whose resolution
//! would need a letter outside the window is an error rather than a silently
//! kept factor.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::word::{free_reduce, Gen, Letter, Word};

/// `k` with `w = u^k` in the free group, if any.
pub fn cyclic_membership(w: &Word, u: &Word) -> Result<Option<i64>> {
    let u = free_reduce(u);
    if u.is_empty() {
        return Err(Error::domain("cyclic membership needs a nontrivial generator"));
    }
    let w = free_reduce(w);
    if w.is_empty() {
        return Ok(Some(0));
    }
    let bound = w.len() as i64;
    for k in 1..=bound {
        for k in [k, -k] {
            if u.pow(k) == w {
                return Ok(Some(k));
            }
        }
    }
    Ok(None)
}

/// How the base words `s(z)` are chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SigmaSpec {
    /// `s(z) = u[z]`, distinct basis letters of the base.
    FreshBasis,
    /// `s(z) = g` for `z >= 0` and `h` for `z < 0`, over the base `F(a, b)`.
    TwoElement { g: Word, h: Word },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Base,
    Stable(i64),
    Top,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TowerGroup {
    half_width: i64,
    sigma: SigmaSpec,
    base: Vec<Gen>,
}

pub fn stable(z: i64) -> Gen {
    Gen::indexed("t", z)
}

pub fn top() -> Gen {
    Gen::named("t")
}

pub fn basis(z: i64) -> Gen {
    Gen::indexed("u", z)
}

impl TowerGroup {
    pub fn new(half_width: i64, sigma: SigmaSpec) -> Result<TowerGroup> {
        if half_width < 1 {
            return Err(Error::domain("tower window half-width must be at least 1"));
        }
        let base = match &sigma {
            SigmaSpec::FreshBasis => (-half_width..=half_width).map(basis).collect(),
            SigmaSpec::TwoElement { g, h } => {
                let base = vec![Gen::named("a"), Gen::named("b")];
                for w in [g, h] {
                    if free_reduce(w).is_empty() {
                        return Err(Error::domain("tower base words must be nontrivial"));
                    }
                    if let Some(l) = w.iter().find(|l| !base.contains(&l.gen)) {
                        return Err(Error::UnknownLetter {
                            letter: l.to_string(),
                            group: "F(a,b)".into(),
                        });
                    }
                }
                base
            }
        };
        Ok(TowerGroup {
            half_width,
            sigma,
            base,
        })
    }

    pub fn fresh(half_width: i64) -> Result<TowerGroup> {
        Self::new(half_width, SigmaSpec::FreshBasis)
    }

    pub fn two_element(half_width: i64, g: Word, h: Word) -> Result<TowerGroup> {
        Self::new(half_width, SigmaSpec::TwoElement { g, h })
    }

    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    pub fn sigma_spec(&self) -> &SigmaSpec {
        &self.sigma
    }

    pub fn base_generators(&self) -> &[Gen] {
        &self.base
    }

    pub fn stable_letters(&self) -> Vec<Gen> {
        (-self.half_width..=self.half_width).map(stable).collect()
    }

    /// Base letters, then stable letters, then `t`.
    pub fn generators(&self) -> Vec<Gen> {
        let mut g = self.base.clone();
        g.extend(self.stable_letters());
        g.push(top());
        g
    }

    /// `s(z)`; defined for every integer even where no letter `t[z]` exists.
    pub fn sigma(&self, z: i64) -> Word {
        match &self.sigma {
            SigmaSpec::FreshBasis => Word::gen(basis(z)),
            SigmaSpec::TwoElement { g, h } => free_reduce(if z >= 0 { g } else { h }),
        }
    }

    /// The defining relators `t[z] s(z) t[z]' s(z+1)'` and `t t[z] t' t[z+1]'`.
    pub fn relators(&self) -> Vec<Word> {
        let mut out = Vec::new();
        for z in -self.half_width..self.half_width {
            let tz = Word::gen(stable(z));
            out.push(
                self.sigma(z)
                    .conjugate_by(&tz)
                    .concat(&self.sigma(z + 1).inverse()),
            );
            out.push(
                tz.conjugate_by(&Word::gen(top()))
                    .concat(&Word::gen(stable(z + 1)).inverse()),
            );
        }
        out
    }

    fn classify(&self, g: Gen) -> Result<Class> {
        match g {
            Gen::Named(s) if s.as_str() == "t" => Ok(Class::Top),
            Gen::Indexed(s, z) if s.as_str() == "t" => {
                if z.abs() <= self.half_width {
                    Ok(Class::Stable(z))
                } else {
                    Err(Error::OutsideWindow {
                        letter: g.to_string(),
                        group: self.to_string(),
                    })
                }
            }
            _ if self.base.contains(&g) => Ok(Class::Base),
            Gen::Indexed(s, _) if s.as_str() == "u" && self.sigma == SigmaSpec::FreshBasis => {
                Err(Error::OutsideWindow {
                    letter: g.to_string(),
                    group: self.to_string(),
                })
            }
            _ => Err(Error::UnknownLetter {
                letter: g.to_string(),
                group: self.to_string(),
            }),
        }
    }

    pub fn validate(&self, w: &Word) -> Result<()> {
        w.iter().try_for_each(|l| self.classify(l.gen).map(|_| ()))
    }

    /// Kill the base letters: the retraction of the first level onto the
    /// free group on the stable letters (and `t`, which it fixes).
    pub fn retract(&self, w: &Word) -> Word {
        free_reduce(
            &w.iter()
                .copied()
                .filter(|l| !self.base.contains(&l.gen))
                .collect(),
        )
    }

    /// Britton reduction.
    pub fn britton_reduce(&self, w: &Word) -> Result<BrittonWord> {
        self.validate(w)?;
        let mut stack: Vec<Level2> = Vec::new();
        for &l in w.iter() {
            match self.classify(l.gen)? {
                Class::Top => self.push_top(&mut stack, l.positive)?,
                _ => match stack.last_mut() {
                    Some(Level2::Segment(seg)) => seg.push(l),
                    _ => stack.push(Level2::Segment(vec![l])),
                },
            }
        }
        let mut syllables = Vec::new();
        for item in stack {
            match item {
                Level2::Top(p) => syllables.push(BrittonSyllable::Top { positive: p }),
                Level2::Segment(seg) => {
                    let reduced = self.reduce_level1(&seg)?;
                    syllables.extend(reduced);
                }
            }
        }
        Ok(BrittonWord { syllables })
    }

    /// Whether `u` and `v` denote the same element.
    pub fn equal(&self, u: &Word, v: &Word) -> Result<bool> {
        Ok(self.britton_reduce(&u.concat(&v.inverse()))?.is_empty())
    }

    fn push_top(&self, stack: &mut Vec<Level2>, positive: bool) -> Result<()> {
        let n = stack.len();
        let (opening, segment) = match stack.as_slice() {
            [.., Level2::Top(p), Level2::Segment(seg)] if *p != positive => (*p, seg.clone()),
            [.., Level2::Top(p)] if *p != positive => (*p, Vec::new()),
            _ => {
                stack.push(Level2::Top(positive));
                return Ok(());
            }
        };
        let segment = Word::new(segment);
        let retracted = self.retract(&segment);
        if !self.level1_is_trivial(&segment.concat(&retracted.inverse()))? {
            stack.push(Level2::Top(positive));
            return Ok(());
        }
        // t v t' -> shift up, t' v t -> shift down
        let offset = if opening { 1 } else { -1 };
        let mut image = Vec::with_capacity(retracted.len());
        for l in retracted.iter() {
            let Gen::Indexed(_, z) = l.gen else {
                unreachable!("retract leaves stable letters only")
            };
            if (z + offset).abs() > self.half_width {
                return Err(Error::WindowBoundary(format!(
                    "conjugating {} by t^{} leaves the stable-letter window [-{}, {}]",
                    retracted, offset, self.half_width, self.half_width
                )));
            }
            image.push(Letter::new(stable(z + offset), l.positive));
        }
        let drop = if segment.is_empty() { 1 } else { 2 };
        stack.truncate(n - drop);
        match stack.last_mut() {
            Some(Level2::Segment(prev)) => prev.extend(image),
            _ if image.is_empty() => {}
            _ => stack.push(Level2::Segment(image)),
        }
        Ok(())
    }

    fn level1_is_trivial(&self, w: &Word) -> Result<bool> {
        Ok(self.reduce_level1(w.letters())?.is_empty())
    }

    fn reduce_level1(&self, letters: &[Letter]) -> Result<Vec<BrittonSyllable>> {
        let mut stack: Vec<BrittonSyllable> = Vec::new();
        for &l in letters {
            match self.classify(l.gen)? {
                Class::Base => push_base(&mut stack, std::slice::from_ref(&l)),
                Class::Stable(z) => self.push_stable(&mut stack, z, l.positive)?,
                Class::Top => unreachable!("segments contain no top letter"),
            }
        }
        Ok(stack)
    }

    fn push_stable(&self, stack: &mut Vec<BrittonSyllable>, z: i64, positive: bool) -> Result<()> {
        let (opening, u) = match stack.as_slice() {
            [.., BrittonSyllable::Stable { index, positive: p }, BrittonSyllable::Base(u)]
                if *index == z && *p != positive =>
            {
                (*p, u.clone())
            }
            [.., BrittonSyllable::Stable { index, positive: p }] if *index == z && *p != positive => {
                (*p, Word::empty())
            }
            _ => {
                stack.push(BrittonSyllable::Stable { index: z, positive });
                return Ok(());
            }
        };
        // t[z] u t[z]' pinches when u is a power of s(z); t[z]' u t[z] when
        // u is a power of s(z+1)
        let (source, target) = if opening { (z, z + 1) } else { (z + 1, z) };
        let Some(k) = cyclic_membership(&u, &self.sigma(source))? else {
            stack.push(BrittonSyllable::Stable { index: z, positive });
            return Ok(());
        };
        if k != 0 && z >= self.half_width {
            return Err(Error::WindowBoundary(format!(
                "pinch across t[{z}] needs the relation for t[{z}], outside the window"
            )));
        }
        let replacement = self.sigma(target).pow(k);
        let drop = if u.is_empty() { 1 } else { 2 };
        stack.truncate(stack.len() - drop);
        push_base(stack, replacement.letters());
        Ok(())
    }
}

fn push_base(stack: &mut Vec<BrittonSyllable>, letters: &[Letter]) {
    if letters.is_empty() {
        return;
    }
    if let Some(BrittonSyllable::Base(prev)) = stack.last_mut() {
        let merged = free_reduce(&prev.concat(&Word::new(letters.to_vec())));
        if merged.is_empty() {
            stack.pop();
        } else {
            *prev = merged;
        }
    } else {
        let w = free_reduce(&Word::new(letters.to_vec()));
        if !w.is_empty() {
            stack.push(BrittonSyllable::Base(w));
        }
    }
}

impl fmt::Display for TowerGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.sigma {
            SigmaSpec::FreshBasis => write!(f, "tower[{}]", self.half_width),
            SigmaSpec::TwoElement { g, h } => {
                write!(f, "tower[{}; g={}, h={}]", self.half_width, g, h)
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Level2 {
    Top(bool),
    Segment(Vec<Letter>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BrittonSyllable {
    /// Freely reduced nonempty base word.
    Base(Word),
    Stable { index: i64, positive: bool },
    Top { positive: bool },
}

/// A pinch-free word.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BrittonWord {
    pub syllables: Vec<BrittonSyllable>,
}

impl BrittonWord {
    pub fn is_empty(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn to_word(&self) -> Word {
        let mut letters = Vec::new();
        for s in &self.syllables {
            match s {
                BrittonSyllable::Base(w) => letters.extend_from_slice(w.letters()),
                BrittonSyllable::Stable { index, positive } => {
                    letters.push(Letter::new(stable(*index), *positive))
                }
                BrittonSyllable::Top { positive } => letters.push(Letter::new(top(), *positive)),
            }
        }
        Word::new(letters)
    }

    /// Number of stable letters (both levels).
    pub fn stable_count(&self) -> usize {
        self.syllables
            .iter()
            .filter(|s| !matches!(s, BrittonSyllable::Base(_)))
            .count()
    }
}

impl fmt::Display for BrittonWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_word())
    }
}

/// `t[-1]`, which conjugates `h` to `g` in a two-element tower; checked by
/// Britton reduction before it is returned.
pub fn conjugacy_witness(tower: &TowerGroup) -> Result<Word> {
    let SigmaSpec::TwoElement { g, h } = tower.sigma_spec() else {
        return Err(Error::domain("conjugacy witness needs a two-element tower"));
    };
    let c = Word::gen(stable(-1));
    let check = h.conjugate_by(&c).concat(&g.inverse());
    if !tower.britton_reduce(&check)?.is_empty() {
        return Err(Error::Verification(format!(
            "t[-1] ({h}) t[-1]' does not reduce to {g}"
        )));
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeOp {
    Seed,
    Product(usize, usize),
    Inverse(usize),
}

#[derive(Debug, Clone)]
pub struct LambdaNode {
    pub label: String,
    pub op: NodeOp,
    pub cost: u64,
    /// The element this node is claimed to denote.
    pub claim: Word,
}

/// A derivation of an upper bound on any subadditive length function:
/// seeds cost `M`, a product costs one more than its dearer factor and an
/// inverse one more than its argument.
#[derive(Debug, Clone)]
pub struct LambdaCertificate {
    pub seed_cost: u64,
    pub n: u64,
    pub nodes: Vec<LambdaNode>,
    pub root: usize,
}

impl LambdaCertificate {
    pub fn cost(&self) -> u64 {
        self.nodes[self.root].cost
    }

    pub fn node(&self, label: &str) -> Option<&LambdaNode> {
        self.nodes.iter().find(|n| n.label == label)
    }

    /// Recompute every cost from the axioms and re-check every node's claim
    /// by Britton reduction.
    pub fn verify(&self, tower: &TowerGroup) -> Result<()> {
        for (i, node) in self.nodes.iter().enumerate() {
            let (cost, denoted) = match node.op {
                NodeOp::Seed => (self.seed_cost, node.claim.clone()),
                NodeOp::Product(a, b) => {
                    if a >= i || b >= i {
                        return Err(Error::Verification("certificate is not topologically ordered".into()));
                    }
                    let (na, nb) = (&self.nodes[a], &self.nodes[b]);
                    (na.cost.max(nb.cost) + 1, na.claim.concat(&nb.claim))
                }
                NodeOp::Inverse(a) => {
                    if a >= i {
                        return Err(Error::Verification("certificate is not topologically ordered".into()));
                    }
                    (self.nodes[a].cost + 1, self.nodes[a].claim.inverse())
                }
            };
            if cost != node.cost {
                return Err(Error::Verification(format!(
                    "node {} has cost {} but the axioms give {}",
                    node.label, node.cost, cost
                )));
            }
            if !tower.equal(&denoted, &node.claim)? {
                return Err(Error::Verification(format!(
                    "node {} denotes {} rather than {}",
                    node.label, denoted, node.claim
                )));
            }
        }
        Ok(())
    }

    /// Indented DAG dump; nodes already printed are referenced by label.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut printed = vec![false; self.nodes.len()];
        self.dump_node(self.root, 0, &mut printed, &mut out);
        out
    }

    fn dump_node(&self, i: usize, depth: usize, printed: &mut [bool], out: &mut String) {
        let node = &self.nodes[i];
        let indent = "  ".repeat(depth);
        let op = match node.op {
            NodeOp::Seed => "seed".to_string(),
            NodeOp::Product(a, b) => {
                format!("product({}, {})", self.nodes[a].label, self.nodes[b].label)
            }
            NodeOp::Inverse(a) => format!("inverse({})", self.nodes[a].label),
        };
        if printed[i] {
            out.push_str(&format!("{indent}{} (above) cost={}\n", node.label, node.cost));
            return;
        }
        printed[i] = true;
        out.push_str(&format!(
            "{indent}{} = {} [{}] cost={}\n",
            node.label, op, node.claim, node.cost
        ));
        match node.op {
            NodeOp::Seed => {}
            NodeOp::Product(a, b) => {
                self.dump_node(a, depth + 1, printed, out);
                self.dump_node(b, depth + 1, printed, out);
            }
            NodeOp::Inverse(a) => self.dump_node(a, depth + 1, printed, out),
        }
    }
}

struct CertificateBuilder {
    seed_cost: u64,
    nodes: Vec<LambdaNode>,
    by_label: HashMap<String, usize>,
}

impl CertificateBuilder {
    fn seed(&mut self, label: &str, claim: Word) -> usize {
        self.push(label, NodeOp::Seed, self.seed_cost, claim)
    }

    fn product(&mut self, label: &str, a: usize, b: usize, claim: Word) -> usize {
        let cost = self.nodes[a].cost.max(self.nodes[b].cost) + 1;
        self.push(label, NodeOp::Product(a, b), cost, claim)
    }

    fn push(&mut self, label: &str, op: NodeOp, cost: u64, claim: Word) -> usize {
        self.nodes.push(LambdaNode {
            label: label.to_string(),
            op,
            cost,
            claim,
        });
        let i = self.nodes.len() - 1;
        self.by_label.insert(label.to_string(), i);
        i
    }
}

/// Bound the length of `s(n)` in a fresh-basis tower, starting from seeds
/// `1, s(0), t[0], t[0]', t, t'` of cost `M`.
///
/// Powers `t^k` are accumulated from the identity seed (cost `M+k`);
/// `t[m]^{+-1}` is `(t^m t[0]^{+-1}) t^{-m}` (cost `M+m+2` for `m >= 1`,
/// with the identity factor `t^0` dropped on the right for `m = 0`); and
/// `s(m) = (t[m-1] s(m-1)) t[m-1]'`. The root costs `M + 2n + 1` for
/// `n >= 1`.
pub fn lambda_certificate(tower: &TowerGroup, n: u64, seed_cost: u64) -> Result<LambdaCertificate> {
    if tower.sigma_spec() != &SigmaSpec::FreshBasis {
        return Err(Error::domain("length certificates need a fresh-basis tower"));
    }
    if seed_cost < 1 {
        return Err(Error::domain("seed cost M must be at least 1"));
    }
    if n as i64 > tower.half_width() - 1 {
        return Err(Error::domain(format!(
            "n = {n} needs a tower window of at least {} (have {})",
            n + 1,
            tower.half_width()
        )));
    }
    let mut b = CertificateBuilder {
        seed_cost,
        nodes: Vec::new(),
        by_label: HashMap::new(),
    };
    let t = Word::gen(top());
    let one = b.seed("1", Word::empty());
    let g0 = b.seed("g[0]", tower.sigma(0));
    let t0 = b.seed("t[0]", Word::gen(stable(0)));
    let t0_inv = b.seed("t[0]'", Word::gen(stable(0)).inverse());
    let t_seed = b.seed("t", t.clone());
    let t_inv_seed = b.seed("t'", t.inverse());

    let mut up = vec![one];
    let mut down = vec![one];
    for k in 1..n.max(1) {
        let k = k as usize;
        let claim_up = t.pow(k as i64);
        let claim_down = t.pow(-(k as i64));
        up.push(b.product(&format!("t^{k}"), up[k - 1], t_seed, claim_up));
        down.push(b.product(&format!("t^-{k}"), down[k - 1], t_inv_seed, claim_down));
    }

    let mut g = g0;
    for m in 1..=n as usize {
        let j = m - 1;
        let conjugators = [(t0, true), (t0_inv, false)].map(|(seed, positive)| {
            let claim = Word::letter(Letter::new(stable(j as i64), positive));
            let suffix = if positive { "" } else { "'" };
            let head_claim = t.pow(j as i64).concat(&Word::letter(Letter::new(stable(0), positive)));
            let head = b.product(&format!("t^{j} t[0]{suffix}"), up[j], seed, head_claim);
            if j == 0 {
                // t^0 on the right is the identity; the head already is t[0]^{+-1}
                b.nodes[head].claim = claim;
                b.nodes[head].label = format!("t[0]{suffix} via t^0");
                b.by_label.insert(b.nodes[head].label.clone(), head);
                head
            } else {
                b.product(&format!("t[{j}]{suffix}"), head, down[j], claim)
            }
        });
        let [tj, tj_inv] = conjugators;
        let left = b.product(
            &format!("t[{j}] g[{j}]"),
            tj,
            g,
            Word::gen(stable(j as i64)).concat(&tower.sigma(j as i64)),
        );
        g = b.product(&format!("g[{m}]"), left, tj_inv, tower.sigma(m as i64));
    }
    Ok(LambdaCertificate {
        seed_cost,
        n,
        nodes: b.nodes,
        root: g,
    })
}

/// Smallest `n` with `n^2 > M + 2n + 1`.
pub fn crossover(seed_cost: u64) -> u64 {
    (0..).find(|&n| n * n > seed_cost + 2 * n + 1).expect("quadratic outgrows linear")
}
