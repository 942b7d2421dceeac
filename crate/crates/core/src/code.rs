//! Linear codes as parity-check systems.
//!
//! Codes are kernels of check matrices over a prime field. Distance and
//! nearest-codeword queries are exhaustive over the codeword list, with
//! a budget guard; exhaustion keeps them exact, which is the point.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::Rng;

use crate::error::{LtcError, Result};
use crate::exec;
use crate::field::{CoordSet, Field, Word};
use crate::rational::{ratio_of_counts, Rational};

/// Default cap on `p^dimension` for exhaustive codeword enumeration.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 24;

const PAR_CHUNK: u64 = 1 << 12;

/// A linear code given by parity checks, with its reduced row echelon
/// form and a kernel basis cached at construction.
#[derive(Debug, Clone)]
pub struct LinearCode {
    field: Field,
    coords: Arc<CoordSet>,
    checks: Vec<Vec<u16>>,
    rref: Vec<Vec<u16>>,
    basis: Vec<Vec<u16>>,
}

/// Row-reduces `rows` in place over `field`; returns (reduced rows, pivot columns).
/// Zero rows are dropped.
pub(crate) fn row_reduce(
    field: Field,
    mut rows: Vec<Vec<u16>>,
    width: usize,
) -> (Vec<Vec<u16>>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..width {
        let Some(pivot_row) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, pivot_row);
        let inv = field.inv_raw(rows[rank][col]).expect("pivot is nonzero");
        for x in rows[rank].iter_mut() {
            *x = field.mul_raw(*x, inv);
        }
        for r in 0..rows.len() {
            if r != rank && rows[r][col] != 0 {
                let factor = rows[r][col];
                for c in 0..width {
                    let sub = field.mul_raw(factor, rows[rank][c]);
                    rows[r][c] = field.sub_raw(rows[r][c], sub);
                }
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rows.truncate(rank);
    (rows, pivots)
}

/// Basis for the null space of the row-reduced matrix.
fn kernel_basis(field: Field, rref: &[Vec<u16>], pivots: &[usize], width: usize) -> Vec<Vec<u16>> {
    let is_pivot: Vec<bool> = {
        let mut v = vec![false; width];
        for &c in pivots {
            v[c] = true;
        }
        v
    };
    let mut basis = Vec::new();
    for free in 0..width {
        if is_pivot[free] {
            continue;
        }
        let mut vec = vec![0u16; width];
        vec[free] = 1;
        for (row, &pc) in rref.iter().zip(pivots) {
            // pivot column value solves row . vec = 0
            vec[pc] = field.neg_raw(row[free]);
        }
        basis.push(vec);
    }
    basis
}

impl LinearCode {
    pub fn from_check_rows(
        field: Field,
        coords: Arc<CoordSet>,
        check_rows: Vec<Vec<u16>>,
    ) -> Result<LinearCode> {
        let width = coords.len();
        for row in &check_rows {
            if row.len() != width {
                return Err(LtcError::Structure(format!(
                    "check of length {} over {} coordinates",
                    row.len(),
                    width
                )));
            }
            if row.iter().any(|&v| v >= field.modulus()) {
                return Err(LtcError::Structure("check value out of field range".into()));
            }
        }
        let (rref, pivots) = row_reduce(field, check_rows.clone(), width);
        let basis = kernel_basis(field, &rref, &pivots, width);
        let code = LinearCode {
            field,
            coords,
            checks: check_rows,
            rref,
            basis,
        };
        debug_assert!(code.basis_satisfies_checks());
        Ok(code)
    }

    /// Checks given as words interpreted as linear functionals.
    pub fn from_checks(field: Field, coords: Arc<CoordSet>, checks: &[Word]) -> Result<LinearCode> {
        let mut rows = Vec::with_capacity(checks.len());
        for c in checks {
            if c.coords() != &coords {
                return Err(LtcError::Structure(
                    "check is defined on a different coordinate set".into(),
                ));
            }
            if c.field() != field {
                return Err(LtcError::Structure("check has a different modulus".into()));
            }
            rows.push(c.values().to_vec());
        }
        Self::from_check_rows(field, coords, rows)
    }

    /// The kernel description of the span of `generators`: parity checks
    /// are a basis of the dual space.
    pub fn from_generators(
        field: Field,
        coords: Arc<CoordSet>,
        generators: Vec<Vec<u16>>,
    ) -> Result<LinearCode> {
        let width = coords.len();
        for g in &generators {
            if g.len() != width {
                return Err(LtcError::Structure("generator length mismatch".into()));
            }
        }
        let (gen_rref, gen_pivots) = row_reduce(field, generators, width);
        let generator_rank = gen_rref.len();
        let checks = kernel_basis(field, &gen_rref, &gen_pivots, width);
        let code = Self::from_check_rows(field, coords, checks)?;
        debug_assert_eq!(code.dimension(), generator_rank);
        Ok(code)
    }

    pub fn full_space(field: Field, coords: Arc<CoordSet>) -> LinearCode {
        Self::from_check_rows(field, coords, Vec::new()).expect("no checks cannot fail")
    }

    fn basis_satisfies_checks(&self) -> bool {
        self.basis.iter().all(|b| {
            self.checks
                .iter()
                .all(|row| self.dot(row, b) == 0)
        })
    }

    fn dot(&self, row: &[u16], values: &[u16]) -> u16 {
        let p = self.field.modulus() as u64;
        let mut acc = 0u64;
        for (a, b) in row.iter().zip(values) {
            acc = (acc + *a as u64 * *b as u64) % p;
        }
        acc as u16
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn coords(&self) -> &Arc<CoordSet> {
        &self.coords
    }

    pub fn length(&self) -> usize {
        self.coords.len()
    }

    pub fn check_count(&self) -> usize {
        self.checks.len()
    }

    pub fn check_rows(&self) -> &[Vec<u16>] {
        &self.checks
    }

    pub fn rank(&self) -> usize {
        self.rref.len()
    }

    pub fn dimension(&self) -> usize {
        self.length() - self.rank()
    }

    pub fn basis_rows(&self) -> &[Vec<u16>] {
        &self.basis
    }

    pub fn basis_words(&self) -> Vec<Word> {
        self.basis
            .iter()
            .map(|b| Word::new(self.field, Arc::clone(&self.coords), b.clone()).unwrap())
            .collect()
    }

    /// Number of codewords if it fits in u64.
    pub fn codeword_count(&self) -> Option<u64> {
        let p = self.field.modulus() as u64;
        let mut acc: u64 = 1;
        for _ in 0..self.dimension() {
            acc = acc.checked_mul(p)?;
        }
        Some(acc)
    }

    fn guard_enumeration(&self, budget: u64) -> Result<u64> {
        match self.codeword_count() {
            Some(count) if count <= budget => Ok(count),
            _ => Err(LtcError::Resource(format!(
                "codeword enumeration needs {}^{} words, budget is {}; \
                 use smaller parameters",
                self.field.modulus(),
                self.dimension(),
                budget
            ))),
        }
    }

    pub fn contains(&self, w: &Word) -> Result<bool> {
        if w.coords() != &self.coords {
            return Err(LtcError::Structure(
                "membership query on a different coordinate set".into(),
            ));
        }
        if w.field() != self.field {
            return Err(LtcError::Structure("membership query with wrong modulus".into()));
        }
        Ok(self.rref.iter().all(|row| self.dot(row, w.values()) == 0))
    }

    /// The codeword whose coefficient vector (over the kernel basis) is
    /// the base-p expansion of `index`.
    fn codeword_at(&self, index: u64) -> Vec<u16> {
        let p = self.field.modulus() as u64;
        let width = self.length();
        let mut values = vec![0u16; width];
        let mut rest = index;
        for b in self.basis.iter().rev() {
            let digit = (rest % p) as u16;
            rest /= p;
            if digit != 0 {
                for (v, &bv) in values.iter_mut().zip(b) {
                    *v = self.field.add_raw(*v, self.field.mul_raw(digit, bv));
                }
            }
        }
        values
    }

    /// Walks codewords `start..end` (by coefficient index), feeding each
    /// to `visit`. The odometer update adds one basis row per step.
    fn scan_range<F: FnMut(&[u16])>(&self, start: u64, end: u64, mut visit: F) {
        if start >= end {
            return;
        }
        let p = self.field.modulus() as u64;
        let dim = self.dimension();
        let mut digits = vec![0u16; dim];
        {
            let mut rest = start;
            for i in (0..dim).rev() {
                digits[i] = (rest % p) as u16;
                rest /= p;
            }
        }
        let mut values = self.codeword_at(start);
        visit(&values);
        for _ in start + 1..end {
            // increment base-p odometer; each carry adds basis row once,
            // and p consecutive adds of the same row cancel mod p
            let mut i = dim;
            loop {
                i -= 1;
                for (v, &bv) in values.iter_mut().zip(&self.basis[i]) {
                    *v = self.field.add_raw(*v, bv);
                }
                digits[i] += 1;
                if (digits[i] as u64) < p {
                    break;
                }
                digits[i] = 0;
            }
            visit(&values);
        }
    }

    /// All codewords, in coefficient order.
    pub fn enumerate(&self, budget: u64) -> Result<Vec<Word>> {
        let count = self.guard_enumeration(budget)?;
        let chunks = exec::par_chunk_reduce(
            count,
            PAR_CHUNK,
            |a, b| {
                let mut out = Vec::with_capacity((b - a) as usize);
                self.scan_range(a, b, |vals| out.push(vals.to_vec()));
                out
            },
            |mut x, mut y| {
                x.append(&mut y);
                x
            },
            Vec::new(),
        );
        chunks
            .into_iter()
            .map(|v| Word::new(self.field, Arc::clone(&self.coords), v))
            .collect()
    }

    /// Exact relative minimum weight over nonzero codewords.
    pub fn minimum_distance(&self, budget: u64) -> Result<Rational> {
        if self.dimension() == 0 {
            return Err(LtcError::Domain(
                "minimum distance is undefined for the trivial code".into(),
            ));
        }
        let count = self.guard_enumeration(budget)?;
        let min_weight = exec::par_chunk_reduce(
            count,
            PAR_CHUNK,
            |a, b| {
                let mut best = usize::MAX;
                let mut idx = a;
                self.scan_range(a, b, |vals| {
                    if idx != 0 {
                        let w = vals.iter().filter(|&&v| v != 0).count();
                        if w < best {
                            best = w;
                        }
                    }
                    idx += 1;
                });
                best
            },
            usize::min,
            usize::MAX,
        );
        Ok(ratio_of_counts(min_weight, self.length()))
    }

    /// Closest codeword to `w` and its distance. Ties go to the
    /// codeword with lexicographically smallest value sequence.
    pub fn nearest_codeword(&self, w: &Word, budget: u64) -> Result<(Word, Rational)> {
        if w.coords() != &self.coords {
            return Err(LtcError::Structure(
                "nearest-codeword query on a different coordinate set".into(),
            ));
        }
        let count = self.guard_enumeration(budget)?;
        let target = w.values();
        let best = exec::par_chunk_reduce(
            count,
            PAR_CHUNK,
            |a, b| {
                let mut best: Option<(usize, Vec<u16>)> = None;
                self.scan_range(a, b, |vals| {
                    let d = vals.iter().zip(target).filter(|(x, y)| x != y).count();
                    let better = match &best {
                        None => true,
                        Some((bd, bv)) => match d.cmp(bd) {
                            Ordering::Less => true,
                            Ordering::Equal => vals < bv.as_slice(),
                            Ordering::Greater => false,
                        },
                    };
                    if better {
                        best = Some((d, vals.to_vec()));
                    }
                });
                best
            },
            |x, y| match (x, y) {
                (None, b) => b,
                (a, None) => a,
                (Some(a), Some(b)) => {
                    if (b.0, &b.1) < (a.0, &a.1) {
                        Some(b)
                    } else {
                        Some(a)
                    }
                }
            },
            None,
        )
        .expect("enumeration is never empty");
        let dist = ratio_of_counts(best.0, self.length());
        Ok((Word::new(self.field, Arc::clone(&self.coords), best.1)?, dist))
    }

    /// Uniformly random codeword (uniform coefficients over the basis).
    pub fn random_codeword<R: Rng>(&self, rng: &mut R) -> Word {
        let p = self.field.modulus();
        let mut values = vec![0u16; self.length()];
        for b in &self.basis {
            let c = rng.gen_range(0..p);
            if c != 0 {
                for (v, &bv) in values.iter_mut().zip(b) {
                    *v = self.field.add_raw(*v, self.field.mul_raw(c, bv));
                }
            }
        }
        Word::new(self.field, Arc::clone(&self.coords), values).unwrap()
    }
}
