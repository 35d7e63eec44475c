//! Atoms, letters and words: the syntax shared by every group in the crate.
//!
//! An atom is a coordinate `(family, position)`; each family is ordered like
//! the integers and the successor of an atom is the next position in the same
//! family. Letters are generators over atoms (the two channels `x`/`y` of the
//! locally free group, the single channel `a` of the dyadic group) or plain
//! named generators used by the catalog groups (`a`, `b`, `t`, `u[3]`, ...).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::ops::RangeInclusive;
use std::sync::{Mutex, OnceLock};

use rand::Rng;

use crate::error::{Error, Result};

/// Interned generator name.
#[derive(Clone, Copy)]
pub struct Sym(&'static str);

impl Sym {
    pub fn new(name: &str) -> Sym {
        static TABLE: OnceLock<Mutex<HashSet<&'static str>>> = OnceLock::new();
        let mut table = TABLE
            .get_or_init(Default::default)
            .lock()
            .expect("symbol table poisoned");
        if let Some(existing) = table.get(name) {
            return Sym(existing);
        }
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        table.insert(leaked);
        Sym(leaked)
    }

    pub fn as_str(&self) -> &'static str {
        self.0
    }
}

impl PartialEq for Sym {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.0, other.0) || self.0 == other.0
    }
}

impl Eq for Sym {}

impl PartialOrd for Sym {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Sym {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.cmp(other.0)
    }
}

impl std::hash::Hash for Sym {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

/// A point `position` of the integer-ordered family `family`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub family: u32,
    pub position: i64,
}

impl Atom {
    pub const fn new(family: u32, position: i64) -> Atom {
        Atom { family, position }
    }

    /// The next atom of the same family.
    pub const fn succ(self) -> Atom {
        Atom::new(self.family, self.position + 1)
    }

    pub const fn pred(self) -> Atom {
        Atom::new(self.family, self.position - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    Zero,
    One,
}

impl Channel {
    pub fn index(self) -> u8 {
        match self {
            Channel::Zero => 0,
            Channel::One => 1,
        }
    }
}

/// A generator (letter up to sign).
///
/// The derived order is the letter precedence used by shortlex: atoms by
/// family, then position, then channel; named generators by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gen {
    /// `x[n,k]` (channel 0) or `y[n,k]` (channel 1).
    Pair(Atom, Channel),
    /// `a[n,k]`, a generator of the dyadic group.
    Abelian(Atom),
    /// `name[k]`, e.g. `t[2]`, `u[-1]`, or the `x[k]`/`y[k]` letters of H.
    Indexed(Sym, i64),
    /// A bare name such as `a`, `b` or `t`.
    Named(Sym),
}

impl Gen {
    pub fn x(family: u32, position: i64) -> Gen {
        Gen::Pair(Atom::new(family, position), Channel::Zero)
    }

    pub fn y(family: u32, position: i64) -> Gen {
        Gen::Pair(Atom::new(family, position), Channel::One)
    }

    pub fn abelian(family: u32, position: i64) -> Gen {
        Gen::Abelian(Atom::new(family, position))
    }

    pub fn named(name: &str) -> Gen {
        Gen::Named(Sym::new(name))
    }

    pub fn indexed(name: &str, index: i64) -> Gen {
        Gen::Indexed(Sym::new(name), index)
    }

    pub fn atom(self) -> Option<Atom> {
        match self {
            Gen::Pair(a, _) | Gen::Abelian(a) => Some(a),
            _ => None,
        }
    }

    pub fn pos(self) -> Letter {
        Letter::new(self, true)
    }

    pub fn neg(self) -> Letter {
        Letter::new(self, false)
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gen::Pair(a, Channel::Zero) => write!(f, "x[{},{}]", a.family, a.position),
            Gen::Pair(a, Channel::One) => write!(f, "y[{},{}]", a.family, a.position),
            Gen::Abelian(a) => write!(f, "a[{},{}]", a.family, a.position),
            Gen::Indexed(name, k) => write!(f, "{name}[{k}]"),
            Gen::Named(name) => write!(f, "{name}"),
        }
    }
}

/// A generator with exponent `+1` (`positive`) or `-1`.
///
/// Ordered generator-first with the inverse before the generator, which is
/// the letter order `g' < g < h' < h` for generators `g < h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub gen: Gen,
    pub positive: bool,
}

impl Letter {
    pub const fn new(gen: Gen, positive: bool) -> Letter {
        Letter { gen, positive }
    }

    pub fn inverse(self) -> Letter {
        Letter::new(self.gen, !self.positive)
    }

    pub fn exponent(self) -> i32 {
        if self.positive {
            1
        } else {
            -1
        }
    }

    pub fn channel(self) -> Option<Channel> {
        match self.gen {
            Gen::Pair(_, c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.gen)
        } else {
            write!(f, "{}'", self.gen)
        }
    }
}

/// A finite sequence of letters, not necessarily reduced.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<Letter>) -> Word {
        Word(letters)
    }

    pub fn letter(l: Letter) -> Word {
        Word(vec![l])
    }

    pub fn gen(g: Gen) -> Word {
        Word(vec![g.pos()])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Letter> {
        self.0.iter()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Formal inverse: reversed, every letter inverted. No reduction.
    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    /// Freely reduced `self^k`.
    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = Vec::new();
        for _ in 0..k.unsigned_abs() {
            out.extend_from_slice(&base.0);
        }
        free_reduce(&Word(out))
    }

    pub fn is_freely_reduced(&self) -> bool {
        self.0.windows(2).all(|p| p[0] != p[1].inverse())
    }

    /// `u v u^{-1}`, unreduced.
    pub fn conjugate_by(&self, u: &Word) -> Word {
        u.concat(self).concat(&u.inverse())
    }

    pub fn gens(&self) -> impl Iterator<Item = Gen> + '_ {
        self.0.iter().map(|l| l.gen)
    }
}

impl FromIterator<Letter> for Word {
    fn from_iter<I: IntoIterator<Item = Letter>>(iter: I) -> Self {
        Word(iter.into_iter().collect())
    }
}

impl From<Vec<Letter>> for Word {
    fn from(v: Vec<Letter>) -> Self {
        Word(v)
    }
}

impl<'a> IntoIterator for &'a Word {
    type Item = &'a Letter;
    type IntoIter = std::slice::Iter<'a, Letter>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Canonical serialization: runs of a repeated letter collapse to `g^k`,
/// a single inverse letter prints as `g'`.
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut i = 0;
        let mut first = true;
        while i < self.0.len() {
            let l = self.0[i];
            let mut j = i + 1;
            while j < self.0.len() && self.0[j] == l {
                j += 1;
            }
            let run = (j - i) as i64;
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            match (run, l.positive) {
                (1, true) => write!(f, "{}", l.gen)?,
                (1, false) => write!(f, "{}'", l.gen)?,
                (k, true) => write!(f, "{}^{}", l.gen, k)?,
                (k, false) => write!(f, "{}^-{}", l.gen, k)?,
            }
            i = j;
        }
        Ok(())
    }
}

/// Cancel adjacent `l l'` pairs until none remain.
pub fn free_reduce(w: &Word) -> Word {
    let mut out: Vec<Letter> = Vec::with_capacity(w.len());
    for &l in w.iter() {
        if out.last() == Some(&l.inverse()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    Word(out)
}

/// Finite window of atoms: families `0..=max_family`, positions
/// `-max_position..=max_position`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub max_family: u32,
    pub max_position: i64,
}

impl Default for Window {
    fn default() -> Self {
        Window::new(3, 8)
    }
}

impl Window {
    pub const fn new(max_family: u32, max_position: i64) -> Window {
        Window {
            max_family,
            max_position,
        }
    }

    pub fn contains(&self, a: Atom) -> bool {
        a.family <= self.max_family && a.position.abs() <= self.max_position
    }

    pub fn positions(&self) -> RangeInclusive<i64> {
        -self.max_position..=self.max_position
    }

    /// All atoms, by family then position.
    pub fn atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        (0..=self.max_family)
            .flat_map(move |n| self.positions().map(move |k| Atom::new(n, k)))
    }
}

/// Translation of each family by a fixed offset; families not listed are
/// fixed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ShiftAutomorphism {
    offsets: BTreeMap<u32, i64>,
}

impl ShiftAutomorphism {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Shift `family` by `offset`, fix everything else.
    pub fn single(family: u32, offset: i64) -> Self {
        let mut s = Self::default();
        s.set(family, offset);
        s
    }

    pub fn from_offsets(offsets: impl IntoIterator<Item = (u32, i64)>) -> Self {
        let mut s = Self::default();
        for (n, k) in offsets {
            s.set(n, s.offset(n) + k);
        }
        s
    }

    fn set(&mut self, family: u32, offset: i64) {
        if offset == 0 {
            self.offsets.remove(&family);
        } else {
            self.offsets.insert(family, offset);
        }
    }

    pub fn offset(&self, family: u32) -> i64 {
        self.offsets.get(&family).copied().unwrap_or(0)
    }

    pub fn offsets(&self) -> &BTreeMap<u32, i64> {
        &self.offsets
    }

    pub fn is_identity(&self) -> bool {
        self.offsets.is_empty()
    }

    /// The shift acting as `self` after `first`.
    pub fn compose(&self, first: &ShiftAutomorphism) -> ShiftAutomorphism {
        Self::from_offsets(
            self.offsets
                .iter()
                .chain(first.offsets.iter())
                .map(|(&n, &k)| (n, k)),
        )
    }

    pub fn inverse(&self) -> ShiftAutomorphism {
        Self::from_offsets(self.offsets.iter().map(|(&n, &k)| (n, -k)))
    }

    pub fn apply_atom(&self, a: Atom) -> Atom {
        Atom::new(a.family, a.position + self.offset(a.family))
    }

    pub fn apply_gen(&self, g: Gen) -> Gen {
        match g {
            Gen::Pair(a, c) => Gen::Pair(self.apply_atom(a), c),
            Gen::Abelian(a) => Gen::Abelian(self.apply_atom(a)),
            other => other,
        }
    }

    pub fn apply(&self, w: &Word) -> Word {
        w.iter()
            .map(|l| Letter::new(self.apply_gen(l.gen), l.positive))
            .collect()
    }
}

pub fn apply_shift(tau: &ShiftAutomorphism, w: &Word) -> Word {
    tau.apply(w)
}

/// What a [`LetterMap`] does with a generator it has no image for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    Identity,
    Delete,
    Undefined,
}

/// Matches atom generators by family range and optionally channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyPattern {
    pub families: RangeInclusive<u32>,
    pub channel: Option<Channel>,
}

impl FamilyPattern {
    fn matches(&self, g: Gen) -> bool {
        match g {
            Gen::Pair(a, c) => {
                self.families.contains(&a.family) && self.channel.is_none_or(|ch| ch == c)
            }
            Gen::Abelian(a) => self.families.contains(&a.family) && self.channel.is_none(),
            _ => false,
        }
    }
}

/// A homomorphism of free groups given by images of generators.
///
/// Images are stated for positive generators; the inverse letter maps to the
/// inverse word, so the map respects inverses by construction.
#[derive(Debug, Clone)]
pub struct LetterMap {
    images: BTreeMap<Gen, Word>,
    patterns: Vec<(FamilyPattern, Word)>,
    fallback: Fallback,
}

impl LetterMap {
    pub fn new(fallback: Fallback) -> Self {
        LetterMap {
            images: BTreeMap::new(),
            patterns: Vec::new(),
            fallback,
        }
    }

    pub fn identity() -> Self {
        Self::new(Fallback::Identity)
    }

    pub fn with(mut self, g: Gen, image: Word) -> Self {
        self.images.insert(g, image);
        self
    }

    pub fn with_pattern(mut self, pattern: FamilyPattern, image: Word) -> Self {
        self.patterns.push((pattern, image));
        self
    }

    /// Delete every atom letter whose family lies in `families`.
    pub fn deleting_families(self, families: RangeInclusive<u32>) -> Self {
        self.with_pattern(
            FamilyPattern {
                families,
                channel: None,
            },
            Word::empty(),
        )
    }

    pub fn image_of_gen(&self, g: Gen) -> Result<Word> {
        if let Some(w) = self.images.get(&g) {
            return Ok(w.clone());
        }
        if let Some((_, w)) = self.patterns.iter().find(|(p, _)| p.matches(g)) {
            return Ok(w.clone());
        }
        match self.fallback {
            Fallback::Identity => Ok(Word::gen(g)),
            Fallback::Delete => Ok(Word::empty()),
            Fallback::Undefined => Err(Error::UndefinedLetter(g.to_string())),
        }
    }

    pub fn image(&self, l: Letter) -> Result<Word> {
        let w = self.image_of_gen(l.gen)?;
        Ok(if l.positive { w } else { w.inverse() })
    }
}

/// Concatenate the images of the letters of `w` and freely reduce.
pub fn substitute(m: &LetterMap, w: &Word) -> Result<Word> {
    let mut out = Vec::with_capacity(w.len());
    for &l in w.iter() {
        out.extend(m.image(l)?.into_letters());
    }
    Ok(free_reduce(&Word(out)))
}

/// Uniformly random word of length `len` over `alphabet` and its inverses.
pub fn random_word<R: Rng + ?Sized>(rng: &mut R, alphabet: &[Gen], len: usize) -> Word {
    (0..len)
        .map(|_| Letter::new(alphabet[rng.gen_range(0..alphabet.len())], rng.gen_bool(0.5)))
        .collect()
}

/// Parse a word in the text grammar.
///
/// Tokens are whitespace separated: `x[n,k]`, `y[n,k]`, `a[n,k]`,
/// `name[k]` or `name`, optionally followed by `'` or `^k`. The result is
/// the literal unreduced word.
pub fn parse_word(text: &str) -> Result<Word> {
    let bytes = text.as_bytes();
    let mut letters = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let (gen, exp, next) = parse_token(text, i)?;
        if next < bytes.len() && !bytes[next].is_ascii_whitespace() {
            return Err(Error::syntax(next, "expected whitespace between tokens"));
        }
        let l = Letter::new(gen, exp > 0);
        for _ in 0..exp.unsigned_abs() {
            letters.push(l);
        }
        i = next;
    }
    Ok(Word(letters))
}

fn parse_token(text: &str, start: usize) -> Result<(Gen, i64, usize)> {
    let bytes = text.as_bytes();
    let mut i = start;
    if !(bytes[i].is_ascii_alphabetic() || bytes[i] == b'_') {
        return Err(Error::syntax(i, "expected a generator name"));
    }
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
        i += 1;
    }
    let name = &text[start..i];
    let mut indices = Vec::new();
    if i < bytes.len() && bytes[i] == b'[' {
        i += 1;
        loop {
            let (v, next) = parse_int(text, i)?;
            indices.push(v);
            i = next;
            match bytes.get(i) {
                Some(b',') => i += 1,
                Some(b']') => {
                    i += 1;
                    break;
                }
                _ => return Err(Error::syntax(i, "expected `,` or `]`")),
            }
        }
    }
    let gen = match (name, indices.as_slice()) {
        (_, []) => Gen::named(name),
        (_, [k]) => Gen::indexed(name, *k),
        ("x" | "y" | "a", [n, k]) => {
            let family = u32::try_from(*n)
                .map_err(|_| Error::syntax(start, "family index must be a natural number"))?;
            let atom = Atom::new(family, *k);
            match name {
                "x" => Gen::Pair(atom, Channel::Zero),
                "y" => Gen::Pair(atom, Channel::One),
                _ => Gen::Abelian(atom),
            }
        }
        _ => {
            return Err(Error::syntax(
                start,
                format!("`{name}` does not take {} indices", indices.len()),
            ))
        }
    };
    let mut exp = 1;
    match bytes.get(i) {
        Some(b'\'') => {
            exp = -1;
            i += 1;
        }
        Some(b'^') => {
            let (v, next) = parse_int(text, i + 1)?;
            exp = v;
            i = next;
        }
        _ => {}
    }
    Ok((gen, exp, i))
}

fn parse_int(text: &str, start: usize) -> Result<(i64, usize)> {
    let bytes = text.as_bytes();
    let mut i = start;
    if matches!(bytes.get(i), Some(b'-') | Some(b'+')) {
        i += 1;
    }
    let digits = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i == digits {
        return Err(Error::syntax(start, "expected an integer"));
    }
    text[start..i]
        .parse()
        .map(|v| (v, i))
        .map_err(|_| Error::syntax(start, "integer out of range"))
}
