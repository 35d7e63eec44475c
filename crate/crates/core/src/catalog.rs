//! The catalog of marked groups, each with a normal-form oracle.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::dyadic::{nf_of, to_dyadic};
use crate::error::{Error, Result};
use crate::hnn::TowerGroup;
use crate::rewrite::{unbounded_redex, RewriteSystem, Strategy};
use crate::word::{free_reduce, parse_word, substitute, Atom, Channel, Gen, Letter, LetterMap, Window, Word};

/// A parsed group spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupSpec {
    Free(u32),
    FreeAbelian(u32),
    Klein,
    /// `G[F,K]`: the locally free group on families `0..=F`, positions `-K..=K`.
    LocallyFree(Window),
    /// `H[K]`: indices `-K..=K`.
    H(i64),
    /// `A[F,K]`.
    Dyadic(Window),
    /// `tower[Z]`, fresh-basis mode.
    Tower(i64),
}

const MAX_RANK: u32 = 26;

impl FromStr for GroupSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<GroupSpec> {
        let bad = |message: &str| Error::BadSpec {
            spec: s.to_string(),
            message: message.to_string(),
        };
        let text = s.trim();
        let int = |t: &str| -> Result<i64> {
            t.trim()
                .parse::<i64>()
                .map_err(|_| bad(&format!("`{}` is not an integer", t.trim())))
        };
        let bracketed = |prefix: &str| -> Option<&str> {
            text.strip_prefix(prefix)?.strip_prefix('[')?.strip_suffix(']')
        };
        let pair = |inner: &str| -> Result<(i64, i64)> {
            let (f, k) = inner.split_once(',').ok_or_else(|| bad("expected `[F,K]`"))?;
            Ok((int(f)?, int(k)?))
        };
        let window = |(f, k): (i64, i64)| -> Result<Window> {
            if f < 0 || f > u32::MAX as i64 || k < 0 {
                return Err(bad("family and position bounds must be non-negative"));
            }
            Ok(Window::new(f as u32, k))
        };
        let rank = |t: &str| -> Result<u32> {
            let r = int(t)?;
            if !(0..=MAX_RANK as i64).contains(&r) {
                return Err(bad(&format!("rank must lie in 0..={MAX_RANK}")));
            }
            Ok(r as u32)
        };
        if text == "klein" {
            Ok(GroupSpec::Klein)
        } else if let Some(r) = text.strip_prefix("freeab:") {
            Ok(GroupSpec::FreeAbelian(rank(r)?))
        } else if let Some(r) = text.strip_prefix("free:") {
            Ok(GroupSpec::Free(rank(r)?))
        } else if let Some(inner) = bracketed("G") {
            Ok(GroupSpec::LocallyFree(window(pair(inner)?)?))
        } else if let Some(inner) = bracketed("A") {
            Ok(GroupSpec::Dyadic(window(pair(inner)?)?))
        } else if let Some(inner) = bracketed("H") {
            let k = int(inner)?;
            if k < 0 {
                return Err(bad("window must be non-negative"));
            }
            Ok(GroupSpec::H(k))
        } else if let Some(inner) = bracketed("tower") {
            Ok(GroupSpec::Tower(int(inner)?))
        } else {
            Err(bad("expected free:R, freeab:R, klein, G[F,K], H[K], A[F,K] or tower[Z]"))
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Free(r) => write!(f, "free:{r}"),
            GroupSpec::FreeAbelian(r) => write!(f, "freeab:{r}"),
            GroupSpec::Klein => write!(f, "klein"),
            GroupSpec::LocallyFree(w) => write!(f, "G[{},{}]", w.max_family, w.max_position),
            GroupSpec::H(k) => write!(f, "H[{k}]"),
            GroupSpec::Dyadic(w) => write!(f, "A[{},{}]", w.max_family, w.max_position),
            GroupSpec::Tower(z) => write!(f, "tower[{z}]"),
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Free(Vec<Gen>),
    FreeAbelian(Vec<Gen>),
    Klein(RewriteSystem),
    LocallyFree(RewriteSystem),
    H,
    Dyadic,
    Tower(TowerGroup),
}

/// A group together with a generating set and a normal-form oracle.
#[derive(Debug, Clone)]
pub struct MarkedGroup {
    spec: GroupSpec,
    kind: Kind,
}

impl PartialEq for MarkedGroup {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Eq for MarkedGroup {}

impl fmt::Display for MarkedGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.spec)
    }
}

pub fn make_group(spec: &str) -> Result<MarkedGroup> {
    MarkedGroup::new(spec.parse()?)
}

fn letter_names(rank: u32) -> Vec<Gen> {
    (0..rank)
        .map(|i| Gen::named(&((b'a' + i as u8) as char).to_string()))
        .collect()
}

impl MarkedGroup {
    pub fn new(spec: GroupSpec) -> Result<MarkedGroup> {
        let small = |what: &str| Error::domain(format!("window too small for {spec}: {what}"));
        let kind = match spec {
            GroupSpec::Free(r) => Kind::Free(letter_names(r)),
            GroupSpec::FreeAbelian(r) => Kind::FreeAbelian(letter_names(r)),
            GroupSpec::Klein => Kind::Klein(RewriteSystem::klein()),
            GroupSpec::LocallyFree(w) => {
                if w.max_position < 1 {
                    return Err(small("need positions -1..=1 at least"));
                }
                Kind::LocallyFree(RewriteSystem::locally_free(w))
            }
            GroupSpec::H(_) => Kind::H,
            GroupSpec::Dyadic(w) => {
                if w.max_position < 1 {
                    return Err(small("need positions -1..=1 at least"));
                }
                Kind::Dyadic
            }
            GroupSpec::Tower(z) => Kind::Tower(TowerGroup::fresh(z).map_err(|_| small("Z must be at least 1"))?),
        };
        Ok(MarkedGroup { spec, kind })
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn is_free(&self) -> bool {
        matches!(self.kind, Kind::Free(_))
    }

    pub fn tower(&self) -> Option<&TowerGroup> {
        match &self.kind {
            Kind::Tower(t) => Some(t),
            _ => None,
        }
    }

    pub fn rewrite_system(&self) -> Option<&RewriteSystem> {
        match &self.kind {
            Kind::Klein(r) | Kind::LocallyFree(r) => Some(r),
            _ => None,
        }
    }

    /// Whether `nf` returns a unique representative (towers return some
    /// reduced form instead, compare those with [`MarkedGroup::equal`]).
    pub fn has_canonical_nf(&self) -> bool {
        !matches!(self.kind, Kind::Tower(_))
    }

    /// Generators in letter order.
    pub fn generators(&self) -> Vec<Gen> {
        let mut gens = match (&self.kind, self.spec) {
            (Kind::Free(g) | Kind::FreeAbelian(g), _) => g.clone(),
            (Kind::Klein(_), _) => vec![Gen::named("x"), Gen::named("y")],
            (_, GroupSpec::LocallyFree(w)) => w
                .atoms()
                .flat_map(|a| [Gen::x(a.family, a.position), Gen::y(a.family, a.position)])
                .collect(),
            (_, GroupSpec::H(k)) => (-k..=k)
                .flat_map(|i| [Gen::indexed("x", i), Gen::indexed("y", i)])
                .collect(),
            (_, GroupSpec::Dyadic(w)) => w.atoms().map(|a| Gen::abelian(a.family, a.position)).collect(),
            (Kind::Tower(t), _) => t.generators(),
            _ => unreachable!(),
        };
        if !matches!(self.kind, Kind::Tower(_)) {
            gens.sort();
        }
        gens
    }

    /// Generators kept one step inside the window, so that products of
    /// normal forms over them never need letters outside it.
    pub fn sample_generators(&self) -> Vec<Gen> {
        match self.spec {
            GroupSpec::LocallyFree(w) => self
                .generators()
                .into_iter()
                .filter(|g| g.atom().is_some_and(|a| a.position.abs() < w.max_position))
                .collect(),
            _ => self.generators(),
        }
    }

    fn outside(&self, l: &Letter) -> Error {
        Error::OutsideWindow {
            letter: l.to_string(),
            group: self.spec.to_string(),
        }
    }

    fn unknown(&self, l: &Letter) -> Error {
        Error::UnknownLetter {
            letter: l.to_string(),
            group: self.spec.to_string(),
        }
    }

    /// Check that every letter is a generator. Dyadic positions are only
    /// bounded in family, since normal forms may use any position.
    pub fn validate(&self, w: &Word) -> Result<()> {
        if let Kind::Tower(t) = &self.kind {
            return t.validate(w);
        }
        for l in w.iter() {
            match (&self.kind, self.spec, l.gen) {
                (Kind::Free(g) | Kind::FreeAbelian(g), _, gen) if g.contains(&gen) => {}
                (Kind::Klein(_), _, Gen::Named(s)) if matches!(s.as_str(), "x" | "y") => {}
                (_, GroupSpec::LocallyFree(win), Gen::Pair(a, _)) => {
                    if !win.contains(a) {
                        return Err(self.outside(l));
                    }
                }
                (_, GroupSpec::H(k), Gen::Indexed(s, i)) if matches!(s.as_str(), "x" | "y") => {
                    if i.abs() > k {
                        return Err(self.outside(l));
                    }
                }
                (_, GroupSpec::Dyadic(win), Gen::Abelian(a)) => {
                    if a.family > win.max_family {
                        return Err(self.outside(l));
                    }
                }
                _ => return Err(self.unknown(l)),
            }
        }
        Ok(())
    }

    /// Parse a word and check it against the window.
    pub fn parse(&self, text: &str) -> Result<Word> {
        let w = parse_word(text)?;
        self.validate(&w)?;
        if let GroupSpec::Dyadic(win) = self.spec {
            if let Some(l) = w.iter().find(|l| l.gen.atom().is_some_and(|a| !win.contains(a))) {
                return Err(self.outside(l));
            }
        }
        Ok(w)
    }

    pub fn nf(&self, w: &Word) -> Result<Word> {
        self.validate(w)?;
        match &self.kind {
            Kind::Free(_) => Ok(free_reduce(w)),
            Kind::FreeAbelian(gens) => {
                let mut exps = vec![0i64; gens.len()];
                for l in w.iter() {
                    let i = gens.iter().position(|g| *g == l.gen).expect("validated");
                    exps[i] += l.exponent() as i64;
                }
                Ok(gens
                    .iter()
                    .zip(exps)
                    .flat_map(|(g, e)| Word::gen(*g).pow(e).into_letters())
                    .collect())
            }
            Kind::Klein(sys) => sys.normalize(w, Strategy::Leftmost),
            Kind::LocallyFree(sys) => {
                let t = sys.normalize(w, Strategy::Leftmost)?;
                for p in t.letters().windows(2) {
                    if let Some((schema, a)) = unbounded_redex(p[0], p[1]) {
                        return Err(Error::WindowBoundary(format!(
                            "{} {} needs rule {} at {} outside {}",
                            p[0],
                            p[1],
                            schema.tag(),
                            Gen::x(a.family, a.position),
                            self.spec
                        )));
                    }
                }
                Ok(t)
            }
            Kind::H => {
                let GroupSpec::H(k) = self.spec else { unreachable!() };
                rho_n(k, w)
            }
            Kind::Dyadic => nf_of(&to_dyadic(w)?).to_word(),
            Kind::Tower(t) => Ok(t.britton_reduce(w)?.to_word()),
        }
    }

    pub fn equal(&self, u: &Word, v: &Word) -> Result<bool> {
        match &self.kind {
            Kind::Tower(t) => t.equal(u, v),
            _ => Ok(self.nf(u)? == self.nf(v)?),
        }
    }

    pub fn is_identity(&self, w: &Word) -> Result<bool> {
        self.equal(w, &Word::empty())
    }

    pub fn element(self: &Arc<Self>, w: &Word) -> Result<GroupElement> {
        Ok(GroupElement {
            owner: Arc::clone(self),
            word: self.nf(w)?,
        })
    }
}

/// A normal-form word tied to its group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupElement {
    owner: Arc<MarkedGroup>,
    word: Word,
}

impl GroupElement {
    pub fn owner(&self) -> &Arc<MarkedGroup> {
        &self.owner
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn is_identity(&self) -> bool {
        self.word.is_empty()
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.word)
    }
}

fn same_owner(g: &GroupElement, h: &GroupElement) -> Result<()> {
    if g.owner != h.owner {
        return Err(Error::OwnerMismatch(
            g.owner.spec.to_string(),
            h.owner.spec.to_string(),
        ));
    }
    Ok(())
}

pub fn nf_product(g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
    same_owner(g, h)?;
    g.owner.element(&g.word.concat(&h.word))
}

pub fn nf_inverse(g: &GroupElement) -> Result<GroupElement> {
    g.owner.element(&g.word.inverse())
}

/// Delete letters of families above `n` and renormalize.
pub fn retract_rn(n: u32, g: &GroupElement) -> Result<GroupElement> {
    let win = match g.owner.spec {
        GroupSpec::LocallyFree(w) | GroupSpec::Dyadic(w) => w,
        other => return Err(Error::domain(format!("r_n is defined on G and A windows, not {other}"))),
    };
    if n > win.max_family {
        return Err(Error::domain(format!(
            "n = {n} exceeds the window's largest family {}",
            win.max_family
        )));
    }
    if n == win.max_family {
        return Ok(g.clone());
    }
    let map = LetterMap::identity().deleting_families(n + 1..=win.max_family);
    g.owner.element(&substitute(&map, &g.word)?)
}

/// `x[k]` for `(a[n,k],0)` and `y[k]` for `(a[n,k],1)`; other letters are rejected.
pub fn g_to_h(w: &Word) -> Result<Word> {
    w.iter()
        .map(|l| match l.gen {
            Gen::Pair(a, c) => {
                let name = if c == Channel::Zero { "x" } else { "y" };
                Ok(Letter::new(Gen::indexed(name, a.position), l.positive))
            }
            _ => Err(Error::domain(format!("{l} is not a letter of G"))),
        })
        .collect()
}

/// Inverse of [`g_to_h`], landing in `family`.
pub fn h_to_g(family: u32, w: &Word) -> Result<Word> {
    w.iter()
        .map(|l| match l.gen {
            Gen::Indexed(s, k) if s.as_str() == "x" => Ok(Letter::new(Gen::x(family, k), l.positive)),
            Gen::Indexed(s, k) if s.as_str() == "y" => Ok(Letter::new(Gen::y(family, k), l.positive)),
            _ => Err(Error::domain(format!("{l} is not a letter of H"))),
        })
        .collect()
}

/// Rewrite an `H` word over the free basis `x[m]` (`m <= n`), `y[n]`:
/// `y[n-k]` becomes `y[n]^{(-1)^k}` conjugated by `x[n-k+1]' ... x[n]'`.
pub fn rho_n(n: i64, w: &Word) -> Result<Word> {
    let mut map = LetterMap::identity();
    for g in w.gens() {
        let Gen::Indexed(s, m) = g else {
            return Err(Error::domain(format!("{g} is not a letter of H")));
        };
        if !matches!(s.as_str(), "x" | "y") {
            return Err(Error::domain(format!("{g} is not a letter of H")));
        }
        if m > n {
            return Err(Error::domain(format!("{g} has index above N = {n}")));
        }
        if s.as_str() == "y" && m < n {
            let k = n - m;
            let conj: Word = (m + 1..=n).map(|i| Gen::indexed("x", i).neg()).collect();
            let core = Word::gen(Gen::indexed("y", n)).pow(if k % 2 == 0 { 1 } else { -1 });
            map = map.with(g, conj.concat(&core).concat(&conj.inverse()));
        }
    }
    substitute(&map, w)
}

/// Relator `(s(a),0)(a,1)(s(a),0)'(s(a),1)` of G.
pub fn g_relator(a: Atom) -> Word {
    let s = a.succ();
    Word::new(vec![
        Gen::x(s.family, s.position).pos(),
        Gen::y(a.family, a.position).pos(),
        Gen::x(s.family, s.position).neg(),
        Gen::y(s.family, s.position).pos(),
    ])
}

/// Relator `a s(a)^2` of A.
pub fn a_relator(a: Atom) -> Word {
    let s = a.succ();
    Word::new(vec![
        Gen::abelian(a.family, a.position).pos(),
        Gen::abelian(s.family, s.position).pos(),
        Gen::abelian(s.family, s.position).pos(),
    ])
}

/// Relator `y[m] (x[m+1]' y[m+1]' x[m+1])'` of H.
pub fn h_relator(m: i64) -> Word {
    let x = Gen::indexed("x", m + 1);
    let y = Gen::indexed("y", m + 1);
    Word::new(vec![Gen::indexed("y", m).pos(), x.neg(), y.pos(), x.pos()])
}

/// Folded graph of a finitely generated subgroup of a free group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgroupGraph {
    pub vertices: usize,
    /// `(from, label, to)`.
    pub edges: Vec<(usize, Gen, usize)>,
    pub base: usize,
}

impl SubgroupGraph {
    /// Petals for each generator, folded, then trimmed to the core.
    pub fn build(gens: &[Word]) -> SubgroupGraph {
        let mut vertices = 1;
        let mut edges = Vec::new();
        for w in gens {
            let w = free_reduce(w);
            if w.is_empty() {
                continue;
            }
            let mut at = 0;
            for (i, l) in w.iter().enumerate() {
                let next = if i + 1 == w.len() {
                    0
                } else {
                    vertices += 1;
                    vertices - 1
                };
                if l.positive {
                    edges.push((at, l.gen, next));
                } else {
                    edges.push((next, l.gen, at));
                }
                at = next;
            }
        }
        let mut g = SubgroupGraph {
            vertices,
            edges,
            base: 0,
        };
        g.fold();
        g.trim();
        g
    }

    fn fold(&mut self) {
        loop {
            let mut merge = None;
            'search: for (i, &(a, l, b)) in self.edges.iter().enumerate() {
                for &(c, m, d) in &self.edges[i + 1..] {
                    if l == m && a == c && b != d {
                        merge = Some((b, d));
                        break 'search;
                    }
                    if l == m && b == d && a != c {
                        merge = Some((a, c));
                        break 'search;
                    }
                }
            }
            let Some((keep, gone)) = merge else { break };
            let (keep, gone) = (keep.min(gone), keep.max(gone));
            let relabel = |v: usize| {
                if v == gone {
                    keep
                } else if v > gone {
                    v - 1
                } else {
                    v
                }
            };
            for e in &mut self.edges {
                *e = (relabel(e.0), e.1, relabel(e.2));
            }
            self.base = relabel(self.base);
            self.vertices -= 1;
            self.edges.sort();
            self.edges.dedup();
        }
    }

    /// Remove non-base vertices of degree one until none remain.
    fn trim(&mut self) {
        loop {
            let degree = |v: usize, edges: &[(usize, Gen, usize)]| {
                edges.iter().map(|e| (e.0 == v) as usize + (e.2 == v) as usize).sum::<usize>()
            };
            let Some(v) = (0..self.vertices).find(|&v| v != self.base && degree(v, &self.edges) <= 1) else {
                break;
            };
            self.edges.retain(|e| e.0 != v && e.2 != v);
            for e in &mut self.edges {
                if e.0 > v {
                    e.0 -= 1;
                }
                if e.2 > v {
                    e.2 -= 1;
                }
            }
            if self.base > v {
                self.base -= 1;
            }
            self.vertices -= 1;
        }
    }

    pub fn rank(&self) -> usize {
        if self.edges.is_empty() {
            return 0;
        }
        self.edges.len() + 1 - self.vertices
    }

    pub fn is_folded(&self) -> bool {
        self.edges.iter().enumerate().all(|(i, &(a, l, b))| {
            self.edges[i + 1..]
                .iter()
                .all(|&(c, m, d)| l != m || (a != c && b != d))
        })
    }

    /// Read `w` from the base vertex.
    pub fn contains(&self, w: &Word) -> bool {
        let mut at = self.base;
        for l in free_reduce(w).iter() {
            let next = if l.positive {
                self.edges.iter().find(|e| e.0 == at && e.1 == l.gen).map(|e| e.2)
            } else {
                self.edges.iter().find(|e| e.2 == at && e.1 == l.gen).map(|e| e.0)
            };
            match next {
                Some(v) => at = v,
                None => return false,
            }
        }
        at == self.base
    }
}

/// Rank of the subgroup generated by `gens`, with its folded core graph.
pub fn stallings_rank(ambient: &MarkedGroup, gens: &[Word]) -> Result<(usize, SubgroupGraph)> {
    if !ambient.is_free() {
        return Err(Error::domain(format!("{ambient} is not a free group")));
    }
    for w in gens {
        ambient.validate(w)?;
    }
    let g = SubgroupGraph::build(gens);
    Ok((g.rank(), g))
}

pub fn subgroup_membership(graph: &SubgroupGraph, w: &Word) -> bool {
    graph.contains(w)
}
