//! Prime fields and words.
//!
//! A [`Word`] is a function from a finite coordinate set into `F_p`.
//! Coordinates are opaque integer identifiers kept in sorted order, so
//! restriction and lexicographic tie-breaking are deterministic.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rand::Rng;

use crate::error::{LtcError, Result};
use crate::rational::{ratio_of_counts, Rational};

/// The prime field `F_p`, `p < 2^16`. Primality is checked once at
/// construction; elements then carry the modulus around with them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Field {
    p: u16,
}

fn is_prime(p: u16) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    let p = p as u32;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl Field {
    pub fn new(p: u16) -> Result<Field> {
        if !is_prime(p) {
            return Err(LtcError::Domain(format!("{p} is not prime")));
        }
        Ok(Field { p })
    }

    pub fn modulus(&self) -> u16 {
        self.p
    }

    pub fn element(&self, value: u64) -> FieldElement {
        FieldElement {
            value: (value % self.p as u64) as u16,
            field: *self,
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.element(0)
    }

    pub fn one(&self) -> FieldElement {
        self.element(1)
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.p).map(move |v| FieldElement { value: v, field: *self })
    }

    // Raw-value arithmetic for matrix kernels; inputs must be < p.
    #[inline]
    pub(crate) fn add_raw(&self, a: u16, b: u16) -> u16 {
        let s = a as u32 + b as u32;
        let p = self.p as u32;
        (if s >= p { s - p } else { s }) as u16
    }

    #[inline]
    pub(crate) fn sub_raw(&self, a: u16, b: u16) -> u16 {
        let p = self.p as u32;
        ((a as u32 + p - b as u32) % p) as u16
    }

    #[inline]
    pub(crate) fn mul_raw(&self, a: u16, b: u16) -> u16 {
        ((a as u32 * b as u32) % self.p as u32) as u16
    }

    #[inline]
    pub(crate) fn neg_raw(&self, a: u16) -> u16 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    pub(crate) fn inv_raw(&self, a: u16) -> Result<u16> {
        if a == 0 {
            return Err(LtcError::Domain("inverse of zero".into()));
        }
        // extended Euclid on (a, p)
        let (mut r0, mut r1) = (a as i64, self.p as i64);
        let (mut s0, mut s1) = (1i64, 0i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        debug_assert_eq!(r0, 1, "modulus must be prime");
        Ok(s0.rem_euclid(self.p as i64) as u16)
    }
}

/// An element of a prime field.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u16,
    field: Field,
}

impl FieldElement {
    pub fn value(&self) -> u16 {
        self.value
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    /// Multiplicative inverse; fails on zero.
    pub fn inverse(&self) -> Result<FieldElement> {
        Ok(FieldElement {
            value: self.field.inv_raw(self.value)?,
            field: self.field,
        })
    }

    pub fn pow(&self, mut e: u64) -> FieldElement {
        let mut base = *self;
        let mut acc = self.field.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.field.p)
    }
}

macro_rules! same_field {
    ($a:expr, $b:expr) => {
        assert_eq!(
            $a.field.p, $b.field.p,
            "field elements have different moduli"
        );
    };
}

impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: FieldElement) -> FieldElement {
        same_field!(self, rhs);
        FieldElement {
            value: self.field.add_raw(self.value, rhs.value),
            field: self.field,
        }
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: FieldElement) -> FieldElement {
        same_field!(self, rhs);
        FieldElement {
            value: self.field.sub_raw(self.value, rhs.value),
            field: self.field,
        }
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        same_field!(self, rhs);
        FieldElement {
            value: self.field.mul_raw(self.value, rhs.value),
            field: self.field,
        }
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement {
            value: self.field.neg_raw(self.value),
            field: self.field,
        }
    }
}

pub type CoordId = u32;

/// A finite set of coordinate identifiers, stored sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CoordSet {
    ids: Vec<CoordId>,
}

impl CoordSet {
    pub fn new(mut ids: Vec<CoordId>) -> CoordSet {
        ids.sort_unstable();
        ids.dedup();
        CoordSet { ids }
    }

    /// The canonical ground set `{0, .., n-1}`.
    pub fn range(n: u32) -> CoordSet {
        CoordSet {
            ids: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[CoordId] {
        &self.ids
    }

    pub fn iter(&self) -> impl Iterator<Item = CoordId> + '_ {
        self.ids.iter().copied()
    }

    pub fn contains(&self, id: CoordId) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    /// Position of `id` in sorted order, if present.
    pub fn index_of(&self, id: CoordId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    pub fn get(&self, index: usize) -> CoordId {
        self.ids[index]
    }

    pub fn is_subset_of(&self, other: &CoordSet) -> bool {
        self.ids.iter().all(|id| other.contains(*id))
    }

    pub fn intersection(&self, other: &CoordSet) -> CoordSet {
        CoordSet {
            ids: self.ids.iter().copied().filter(|id| other.contains(*id)).collect(),
        }
    }
}

/// A word: a total assignment of field elements to a coordinate set.
/// Values are kept in the coordinate set's sorted order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    field: Field,
    coords: Arc<CoordSet>,
    values: Vec<u16>,
}

impl Word {
    pub fn new(field: Field, coords: Arc<CoordSet>, values: Vec<u16>) -> Result<Word> {
        if values.len() != coords.len() {
            return Err(LtcError::Structure(format!(
                "{} values for {} coordinates",
                values.len(),
                coords.len()
            )));
        }
        if let Some(v) = values.iter().find(|&&v| v >= field.modulus()) {
            return Err(LtcError::Structure(format!(
                "value {v} out of range for modulus {}",
                field.modulus()
            )));
        }
        Ok(Word { field, coords, values })
    }

    pub fn zero(field: Field, coords: Arc<CoordSet>) -> Word {
        let n = coords.len();
        Word {
            field,
            coords,
            values: vec![0; n],
        }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn coords(&self) -> &Arc<CoordSet> {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    pub fn value_at(&self, index: usize) -> u16 {
        self.values[index]
    }

    pub fn get(&self, id: CoordId) -> Option<FieldElement> {
        self.coords
            .index_of(id)
            .map(|i| self.field.element(self.values[i] as u64))
    }

    pub(crate) fn set_at(&mut self, index: usize, value: u16) {
        debug_assert!(value < self.field.modulus());
        self.values[index] = value;
    }

    fn check_compatible(&self, other: &Word) -> Result<()> {
        if self.field != other.field {
            return Err(LtcError::Structure("words have different moduli".into()));
        }
        if self.coords != other.coords {
            return Err(LtcError::Structure(
                "words are defined on different coordinate sets".into(),
            ));
        }
        Ok(())
    }

    /// Number of coordinates where the two words disagree.
    pub fn hamming(&self, other: &Word) -> Result<usize> {
        self.check_compatible(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a != b)
            .count())
    }

    /// Fraction of coordinates where the two words disagree, exact.
    pub fn distance(&self, other: &Word) -> Result<Rational> {
        Ok(ratio_of_counts(self.hamming(other)?, self.len()))
    }

    pub fn weight(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    /// The word on `subset` that agrees with `self` pointwise.
    pub fn restrict(&self, subset: &Arc<CoordSet>) -> Result<Word> {
        if !subset.is_subset_of(&self.coords) {
            return Err(LtcError::Structure(
                "restriction target is not a subset of the word's coordinates".into(),
            ));
        }
        let values = subset
            .iter()
            .map(|id| self.values[self.coords.index_of(id).unwrap()])
            .collect();
        Ok(Word {
            field: self.field,
            coords: Arc::clone(subset),
            values,
        })
    }

    /// Whether `self` agrees with `other` on every coordinate of
    /// `subset`; both words must contain `subset`.
    pub fn agrees_on(&self, other: &Word, subset: &CoordSet) -> Result<bool> {
        if self.field != other.field {
            return Err(LtcError::Structure("words have different moduli".into()));
        }
        for id in subset.iter() {
            let a = self
                .coords
                .index_of(id)
                .ok_or_else(|| LtcError::Structure(format!("coordinate {id} missing")))?;
            let b = other
                .coords
                .index_of(id)
                .ok_or_else(|| LtcError::Structure(format!("coordinate {id} missing")))?;
            if self.values[a] != other.values[b] {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Disagreement count over `subset` only.
    pub fn hamming_on(&self, other: &Word, subset: &CoordSet) -> Result<usize> {
        if self.field != other.field {
            return Err(LtcError::Structure("words have different moduli".into()));
        }
        let mut count = 0;
        for id in subset.iter() {
            let a = self
                .coords
                .index_of(id)
                .ok_or_else(|| LtcError::Structure(format!("coordinate {id} missing")))?;
            let b = other
                .coords
                .index_of(id)
                .ok_or_else(|| LtcError::Structure(format!("coordinate {id} missing")))?;
            if self.values[a] != other.values[b] {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Total order on words over the same coordinate set: value
    /// sequences compared in canonical coordinate order.
    pub fn lex_cmp(&self, other: &Word) -> Ordering {
        debug_assert_eq!(self.coords, other.coords);
        self.values.cmp(&other.values)
    }
}

/// Uniformly random word on `coords`.
pub fn random_word<R: Rng>(field: Field, coords: &Arc<CoordSet>, rng: &mut R) -> Word {
    let values = (0..coords.len())
        .map(|_| rng.gen_range(0..field.modulus()))
        .collect();
    Word::new(field, Arc::clone(coords), values).expect("generated values are in range")
}

/// Flips `count` distinct coordinates of `w`, each to a uniformly
/// random different field element.
pub fn corrupt_word<R: Rng>(w: &Word, count: usize, rng: &mut R) -> Word {
    assert!(count <= w.len(), "cannot corrupt more coordinates than exist");
    let p = w.field().modulus();
    assert!(p >= 2);
    let mut out = w.clone();
    let picks = rand::seq::index::sample(rng, w.len(), count);
    for idx in picks.iter() {
        let old = out.value_at(idx);
        let shift = rng.gen_range(1..p);
        out.set_at(idx, ((old as u32 + shift as u32) % p as u32) as u16);
    }
    out
}
