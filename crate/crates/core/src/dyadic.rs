//! Exact arithmetic for the dyadic abelian group, a direct sum of copies of
//! `Z[1/2]` indexed by family.
//!
//! The atom `a[n,k]` embeds as `(-2)^(-k)` in component `n`, so the relator
//! `a s(a)^2` maps to zero.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::word::{Atom, Gen, Letter, ShiftAutomorphism, Word};

/// Longest word [`AbelianNormalWord::to_word`] will expand to.
pub const MAX_EXPANDED_LEN: usize = 1 << 20;

/// `numerator * 2^exponent` with the numerator odd, or zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DyadicRational {
    numerator: BigInt,
    exponent: i64,
}

impl DyadicRational {
    pub fn zero() -> Self {
        DyadicRational {
            numerator: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn new(numerator: impl Into<BigInt>, exponent: i64) -> Self {
        let mut numerator = numerator.into();
        if numerator.is_zero() {
            return Self::zero();
        }
        let tz = numerator.trailing_zeros().unwrap_or(0);
        numerator >>= tz;
        DyadicRational {
            numerator,
            exponent: exponent + tz as i64,
        }
    }

    pub fn from_int(v: impl Into<BigInt>) -> Self {
        Self::new(v, 0)
    }

    /// `(-2)^(-k)`.
    pub fn neg_two_pow(k: i64) -> Self {
        let sign = if k.is_odd() { -1 } else { 1 };
        Self::new(sign, -k)
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    pub fn signum(&self) -> i32 {
        if self.numerator.is_positive() {
            1
        } else if self.numerator.is_negative() {
            -1
        } else {
            0
        }
    }

    /// Numerators of `self` and `other` over the common denominator
    /// `2^min_exponent`.
    fn aligned(&self, other: &Self) -> (BigInt, BigInt, i64) {
        let e = self.exponent.min(other.exponent);
        (
            &self.numerator << (self.exponent - e) as usize,
            &other.numerator << (other.exponent - e) as usize,
            e,
        )
    }

    pub fn scale(&self, m: i64) -> Self {
        Self::new(&self.numerator * m, self.exponent)
    }

    /// Multiply by `2^k`.
    pub fn shl(&self, k: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        DyadicRational {
            numerator: self.numerator.clone(),
            exponent: self.exponent + k,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(
            &self.numerator * &other.numerator,
            self.exponent + other.exponent,
        )
    }
}

impl Add for &DyadicRational {
    type Output = DyadicRational;

    fn add(self, rhs: Self) -> DyadicRational {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let (a, b, e) = self.aligned(rhs);
        DyadicRational::new(a + b, e)
    }
}

impl Neg for &DyadicRational {
    type Output = DyadicRational;

    fn neg(self) -> DyadicRational {
        DyadicRational {
            numerator: -&self.numerator,
            exponent: self.exponent,
        }
    }
}

impl Sub for &DyadicRational {
    type Output = DyadicRational;

    fn sub(self, rhs: Self) -> DyadicRational {
        self + &(-rhs)
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.numerator, self.exponent)
    }
}

/// Finitely supported map from family to dyadic rational. Zero components
/// are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct DyadicVector(BTreeMap<u32, DyadicRational>);

impl DyadicVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn unit(family: u32, value: DyadicRational) -> Self {
        let mut v = Self::zero();
        v.set(family, value);
        v
    }

    fn set(&mut self, family: u32, value: DyadicRational) {
        if value.is_zero() {
            self.0.remove(&family);
        } else {
            self.0.insert(family, value);
        }
    }

    pub fn component(&self, family: u32) -> DyadicRational {
        self.0.get(&family).cloned().unwrap_or_else(DyadicRational::zero)
    }

    pub fn components(&self) -> impl Iterator<Item = (u32, &DyadicRational)> {
        self.0.iter().map(|(&n, q)| (n, q))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_component(&mut self, family: u32, value: &DyadicRational) {
        let sum = &self.component(family) + value;
        self.set(family, sum);
    }

    pub fn scale(&self, m: i64) -> Self {
        let mut out = Self::zero();
        for (n, q) in self.components() {
            out.set(n, q.scale(m));
        }
        out
    }
}

impl Add for &DyadicVector {
    type Output = DyadicVector;

    fn add(self, rhs: Self) -> DyadicVector {
        let mut out = self.clone();
        for (n, q) in rhs.components() {
            out.add_component(n, q);
        }
        out
    }
}

impl Neg for &DyadicVector {
    type Output = DyadicVector;

    fn neg(self) -> DyadicVector {
        DyadicVector(self.0.iter().map(|(&n, q)| (n, -q)).collect())
    }
}

impl Sub for &DyadicVector {
    type Output = DyadicVector;

    fn sub(self, rhs: Self) -> DyadicVector {
        self + &(-rhs)
    }
}

/// One `family: u*2^e` line per nonzero component.
impl fmt::Display for DyadicVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, q) in self.components() {
            writeln!(f, "{n}: {q}")?;
        }
        Ok(())
    }
}

/// `a_0^{z_0} ... a_m^{z_m}` with odd exponents and strictly increasing
/// families.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AbelianNormalWord(Vec<(Atom, BigInt)>);

impl AbelianNormalWord {
    pub fn terms(&self) -> &[(Atom, BigInt)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Expand to letters.
    pub fn to_word(&self) -> Result<Word> {
        let mut letters = Vec::new();
        for (atom, z) in &self.0 {
            let count = z
                .abs()
                .to_usize()
                .filter(|&c| letters.len() + c <= MAX_EXPANDED_LEN)
                .ok_or_else(|| {
                    Error::domain(format!(
                        "normal form exponent {z} on a[{},{}] is too large to expand",
                        atom.family, atom.position
                    ))
                })?;
            let l = Letter::new(Gen::Abelian(*atom), z.is_positive());
            letters.extend(std::iter::repeat_n(l, count));
        }
        Ok(Word::new(letters))
    }
}

impl fmt::Display for AbelianNormalWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(a, z)| {
                if z.is_one() {
                    format!("a[{},{}]", a.family, a.position)
                } else {
                    format!("a[{},{}]^{}", a.family, a.position, z)
                }
            })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// Image of an abelian word in the direct sum.
pub fn to_dyadic(w: &Word) -> Result<DyadicVector> {
    let mut v = DyadicVector::zero();
    for l in w.iter() {
        let Gen::Abelian(a) = l.gen else {
            return Err(Error::UnknownLetter {
                letter: l.to_string(),
                group: "the dyadic group".into(),
            });
        };
        let q = DyadicRational::neg_two_pow(a.position);
        let q = if l.positive { q } else { -&q };
        v.add_component(a.family, &q);
    }
    Ok(v)
}

/// The unique odd-exponent normal word of `v`.
///
/// A component `u * 2^e` with `u` odd becomes `a[n,-e]^(u * (-1)^e)`.
pub fn nf_of(v: &DyadicVector) -> AbelianNormalWord {
    AbelianNormalWord(
        v.components()
            .map(|(n, q)| {
                let e = q.exponent();
                let z = if e.is_odd() {
                    -q.numerator()
                } else {
                    q.numerator().clone()
                };
                (Atom::new(n, -e), z)
            })
            .collect(),
    )
}

/// Action of a shift on the direct sum: shifting family `n` by `s` scales
/// component `n` by `(-2)^(-s)`.
pub fn shift_action(tau: &ShiftAutomorphism, v: &DyadicVector) -> DyadicVector {
    let mut out = DyadicVector::zero();
    for (n, q) in v.components() {
        out.add_component(n, &q.mul(&DyadicRational::neg_two_pow(tau.offset(n))));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::{parse_word, random_word};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> Word {
        parse_word(s).unwrap()
    }

    fn q(num: i64, exp: i64) -> DyadicRational {
        DyadicRational::new(num, exp)
    }

    #[test]
    fn representation_is_unique() {
        assert_eq!(q(4, -3), q(1, -1));
        assert_eq!(q(4, -3).numerator(), &BigInt::from(1));
        assert_eq!(q(0, 7), DyadicRational::zero());
        assert_eq!(&q(3, -2) + &q(1, -2), q(1, 0));
        assert!(q(-1, -1) < DyadicRational::zero());
        assert!(q(3, -2) > q(1, -1));
    }

    #[test]
    fn to_dyadic_examples() {
        assert_eq!(
            to_dyadic(&w("a[0,0]")).unwrap(),
            DyadicVector::unit(0, q(1, 0))
        );
        assert!(to_dyadic(&w("a[0,0] a[0,1]^2")).unwrap().is_zero());
        assert_eq!(
            to_dyadic(&w("a[0,1]")).unwrap(),
            DyadicVector::unit(0, q(-1, -1))
        );
        assert!(to_dyadic(&w("x[0,0]")).is_err());
    }

    #[test]
    fn nf_examples() {
        assert!(nf_of(&DyadicVector::zero()).is_empty());
        let two = to_dyadic(&w("a[0,0]^2")).unwrap();
        assert_eq!(nf_of(&two).to_word().unwrap(), w("a[0,-1]'"));
        let v = &DyadicVector::unit(0, q(1, 0)) + &DyadicVector::unit(2, q(3, 0));
        assert_eq!(nf_of(&v).to_word().unwrap(), w("a[0,0] a[2,0]^3"));
        assert_eq!(nf_of(&v).to_string(), "a[0,0] a[2,0]^3");
    }

    #[test]
    fn shift_examples() {
        let tau = ShiftAutomorphism::single(0, 1);
        let one = DyadicVector::unit(0, q(1, 0));
        assert_eq!(shift_action(&tau, &one), DyadicVector::unit(0, q(-1, -1)));
        assert_eq!(
            shift_action(&tau, &shift_action(&tau, &one)),
            DyadicVector::unit(0, q(1, -2))
        );
        assert_eq!(shift_action(&ShiftAutomorphism::identity(), &one), one);
    }

    #[test]
    fn vector_serialization() {
        let v = &DyadicVector::unit(2, q(-3, 1)) + &DyadicVector::unit(0, q(1, -1));
        assert_eq!(v.to_string(), "0: 1*2^-1\n2: -3*2^1\n");
    }

    #[test]
    fn shift_action_matches_word_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let alphabet: Vec<Gen> = (0..2)
            .flat_map(|n| (-3..=3).map(move |k| Gen::abelian(n, k)))
            .collect();
        for _ in 0..500 {
            let len = rng.gen_range(0..10);
            let u = random_word(&mut rng, &alphabet, len);
            let tau = ShiftAutomorphism::from_offsets([(0, rng.gen_range(-3..=3)), (1, 1)]);
            assert_eq!(
                to_dyadic(&tau.apply(&u)).unwrap(),
                shift_action(&tau, &to_dyadic(&u).unwrap())
            );
        }
    }

    fn arb_vector() -> impl Strategy<Value = DyadicVector> {
        prop::collection::vec((0u32..4, -40i64..40, -8i64..8), 0..4).prop_map(|terms| {
            let mut v = DyadicVector::zero();
            for (n, num, e) in terms {
                v.add_component(n, &DyadicRational::new(num, e));
            }
            v
        })
    }

    proptest! {
        #[test]
        fn group_laws(x in arb_vector(), y in arb_vector(), z in arb_vector()) {
            prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
            prop_assert_eq!(&x + &y, &y + &x);
            prop_assert!((&x + &(-&x)).is_zero());
            prop_assert_eq!(&x + &DyadicVector::zero(), x.clone());
        }

        #[test]
        fn normal_form_round_trips(v in arb_vector()) {
            let nf = nf_of(&v);
            prop_assert!(nf.terms().iter().all(|(_, z)| z.is_odd()));
            prop_assert!(nf.terms().windows(2).all(|p| p[0].0.family < p[1].0.family));
            let word = nf.to_word().unwrap();
            prop_assert_eq!(to_dyadic(&word).unwrap(), v.clone());
            let reparsed = parse_word(&word.to_string()).unwrap();
            prop_assert_eq!(nf_of(&to_dyadic(&reparsed).unwrap()), nf);
        }

        #[test]
        fn torsion_free(v in arb_vector(), m in 1i64..=10) {
            prop_assume!(!v.is_zero());
            prop_assert!(!v.scale(m).is_zero());
        }
    }
}
