//! Affine subspaces of F_p^n, the uniform flat hierarchy with its
//! agreement test, and the polynomial evaluation codes that live on it.
//!
//! Flats are kept in a canonical form (reduced echelon basis, offset
//! reduced against it), so equality, hashing and enumeration order are
//! all deterministic.

use std::collections::HashMap;
use std::sync::Arc;

use crate::agreement::AgreementGraph;
use crate::code::LinearCode;
use crate::error::{LtcError, Result};
use crate::field::{CoordSet, Field, Word};
use crate::system::LayeredSystem;

/// Cap on the ambient point count for flat enumeration.
pub const FLAT_ENUMERATION_GUARD: u64 = 243;

/// An affine subspace of F_p^n in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineSubspace {
    p: u16,
    n: usize,
    offset: Vec<u16>,
    /// Reduced echelon basis rows; empty for a point.
    basis: Vec<Vec<u16>>,
    pivots: Vec<usize>,
}

fn vec_add(field: Field, a: &[u16], b: &[u16]) -> Vec<u16> {
    a.iter().zip(b).map(|(x, y)| field.add_raw(*x, *y)).collect()
}

fn vec_scale(field: Field, c: u16, a: &[u16]) -> Vec<u16> {
    a.iter().map(|x| field.mul_raw(c, *x)).collect()
}

impl AffineSubspace {
    /// Builds the flat `offset + span(basis)`, canonicalizing both.
    /// Fails if the basis rows are linearly dependent.
    pub fn new(p: u16, n: usize, offset: Vec<u16>, basis: Vec<Vec<u16>>) -> Result<AffineSubspace> {
        let field = Field::new(p)?;
        if offset.len() != n || basis.iter().any(|b| b.len() != n) {
            return Err(LtcError::Structure("vector length mismatch".into()));
        }
        let claimed = basis.len();
        let (rref, pivots) = crate::code::row_reduce(field, basis, n);
        if rref.len() != claimed {
            return Err(LtcError::Structure("basis rows are linearly dependent".into()));
        }
        // reduce the offset so its pivot coordinates vanish
        let mut offset: Vec<u16> = offset.iter().map(|v| v % p).collect();
        for (row, &piv) in rref.iter().zip(&pivots) {
            let c = offset[piv];
            if c != 0 {
                let scaled = vec_scale(field, field.neg_raw(c), row);
                offset = vec_add(field, &offset, &scaled);
            }
        }
        Ok(AffineSubspace {
            p,
            n,
            offset,
            basis: rref,
            pivots,
        })
    }

    pub fn point(p: u16, coords: Vec<u16>) -> Result<AffineSubspace> {
        let n = coords.len();
        AffineSubspace::new(p, n, coords, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn modulus(&self) -> u16 {
        self.p
    }

    pub fn offset(&self) -> &[u16] {
        &self.offset
    }

    pub fn basis(&self) -> &[Vec<u16>] {
        &self.basis
    }

    fn field(&self) -> Field {
        Field::new(self.p).expect("modulus validated at construction")
    }

    /// Reduces `v` against the basis; the remainder is zero iff `v`
    /// lies in the direction span.
    fn in_span(&self, v: &[u16]) -> bool {
        let field = self.field();
        let mut v = v.to_vec();
        for (row, &piv) in self.basis.iter().zip(&self.pivots) {
            let c = v[piv];
            if c != 0 {
                let scaled = vec_scale(field, field.neg_raw(c), row);
                v = vec_add(field, &v, &scaled);
            }
        }
        v.iter().all(|&x| x == 0)
    }

    pub fn contains_point(&self, pt: &[u16]) -> bool {
        let field = self.field();
        let diff: Vec<u16> = pt
            .iter()
            .zip(&self.offset)
            .map(|(a, b)| field.sub_raw(*a % self.p, *b))
            .collect();
        self.in_span(&diff)
    }

    /// Algebraic containment: offsets differ by a direction and every
    /// direction of `other` lies in this flat's span.
    pub fn contains_flat(&self, other: &AffineSubspace) -> bool {
        debug_assert_eq!((self.p, self.n), (other.p, other.n));
        if other.dim() > self.dim() {
            return false;
        }
        let field = self.field();
        let diff: Vec<u16> = other
            .offset
            .iter()
            .zip(&self.offset)
            .map(|(a, b)| field.sub_raw(*a, *b))
            .collect();
        self.in_span(&diff) && other.basis.iter().all(|b| self.in_span(b))
    }

    /// All points, in coefficient-lexicographic order.
    pub fn points(&self) -> Vec<Vec<u16>> {
        let field = self.field();
        let d = self.dim();
        let count = (self.p as u64).pow(d as u32);
        let mut out = Vec::with_capacity(count as usize);
        let mut digits = vec![0u16; d];
        loop {
            let mut pt = self.offset.clone();
            for (c, b) in digits.iter().zip(&self.basis) {
                if *c != 0 {
                    pt = vec_add(field, &pt, &vec_scale(field, *c, b));
                }
            }
            out.push(pt);
            // advance base-p odometer
            let mut i = d;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < self.p {
                    break;
                }
                digits[i] = 0;
                if i == 0 {
                    return out;
                }
            }
        }
    }

    /// The point ids of this flat under the canonical enumeration of
    /// F_p^n (big-endian base-p digits).
    pub fn coord_set(&self) -> CoordSet {
        CoordSet::new(self.points().iter().map(|pt| point_id(self.p, pt)).collect())
    }

    /// All sub-flats of dimension `d`, produced by mapping the flats of
    /// the parameter space through the affine chart.
    pub fn subflats(&self, d: usize) -> Result<Vec<AffineSubspace>> {
        if d > self.dim() {
            return Ok(Vec::new());
        }
        let field = self.field();
        let inner = enumerate_affine(self.p, self.dim(), d)?;
        inner
            .into_iter()
            .map(|small| {
                let mut offset = self.offset.clone();
                for (c, b) in small.offset.iter().zip(&self.basis) {
                    if *c != 0 {
                        offset = vec_add(field, &offset, &vec_scale(field, *c, b));
                    }
                }
                let basis = small
                    .basis
                    .iter()
                    .map(|row| {
                        let mut out = vec![0u16; self.n];
                        for (c, b) in row.iter().zip(&self.basis) {
                            if *c != 0 {
                                out = vec_add(field, &out, &vec_scale(field, *c, b));
                            }
                        }
                        out
                    })
                    .collect();
                AffineSubspace::new(self.p, self.n, offset, basis)
            })
            .collect()
    }
}

/// Index of a point of F_p^n in the canonical enumeration.
pub fn point_id(p: u16, pt: &[u16]) -> u32 {
    let mut id = 0u32;
    for &c in pt {
        id = id * p as u32 + (c % p) as u32;
    }
    id
}

/// Gaussian binomial coefficient: the number of d-dimensional linear
/// subspaces of F_p^n.
pub fn gaussian_binomial(p: u128, n: usize, d: usize) -> u128 {
    if d > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..d {
        let num = p.pow((n - i) as u32) - 1;
        let den = p.pow((i + 1) as u32) - 1;
        acc = acc * num / den;
    }
    acc
}

fn check_flat_guard(p: u16, n: usize) -> Result<()> {
    let points = (p as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if points > FLAT_ENUMERATION_GUARD {
        return Err(LtcError::Resource(format!(
            "flat enumeration over {p}^{n} points exceeds the guard of {FLAT_ENUMERATION_GUARD}"
        )));
    }
    Ok(())
}

fn combinations(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if d > n {
        return out;
    }
    let mut comb: Vec<usize> = (0..d).collect();
    loop {
        out.push(comb.clone());
        // next lexicographic combination
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if comb[i] != i + n - d {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        comb[i] += 1;
        for j in i + 1..d {
            comb[j] = comb[j - 1] + 1;
        }
    }
}

/// Every affine flat of dimension `d` in F_p^n, each exactly once.
/// Flats are generated directly in canonical form: one reduced echelon
/// basis per linear subspace and one reduced offset per coset.
pub fn enumerate_affine(p: u16, n: usize, d: usize) -> Result<Vec<AffineSubspace>> {
    check_flat_guard(p, n)?;
    if d > n {
        return Err(LtcError::Structure(format!(
            "dimension {d} exceeds ambient dimension {n}"
        )));
    }
    let mut out = Vec::new();
    for pivots in combinations(n, d) {
        let is_pivot = {
            let mut v = vec![false; n];
            for &c in &pivots {
                v[c] = true;
            }
            v
        };
        // free positions of the echelon basis: non-pivot columns to the
        // right of each row's pivot
        let mut free_slots: Vec<(usize, usize)> = Vec::new();
        for (row, &piv) in pivots.iter().enumerate() {
            for col in piv + 1..n {
                if !is_pivot[col] {
                    free_slots.push((row, col));
                }
            }
        }
        let basis_count = (p as u64).pow(free_slots.len() as u32);
        for basis_idx in 0..basis_count {
            let mut basis = vec![vec![0u16; n]; d];
            for (row, &piv) in pivots.iter().enumerate() {
                basis[row][piv] = 1;
            }
            let mut rest = basis_idx;
            for &(row, col) in &free_slots {
                basis[row][col] = (rest % p as u64) as u16;
                rest /= p as u64;
            }
            // canonical offsets vanish on pivot columns
            let offset_slots: Vec<usize> = (0..n).filter(|c| !is_pivot[*c]).collect();
            let offset_count = (p as u64).pow(offset_slots.len() as u32);
            for offset_idx in 0..offset_count {
                let mut offset = vec![0u16; n];
                let mut rest = offset_idx;
                for &col in &offset_slots {
                    offset[col] = (rest % p as u64) as u16;
                    rest /= p as u64;
                }
                let flat = AffineSubspace {
                    p,
                    n,
                    offset,
                    basis: basis.clone(),
                    pivots: pivots.clone(),
                };
                debug_assert_eq!(
                    flat,
                    AffineSubspace::new(p, n, flat.offset.clone(), flat.basis.clone()).unwrap()
                );
                out.push(flat);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrassmannParams {
    pub p: u16,
    pub n: usize,
    pub q0: usize,
    pub q1: usize,
    pub q2: usize,
}

/// The flat hierarchy with the uniform downward chain and the
/// two-supersets-of-a-common-flat agreement test.
#[derive(Debug)]
pub struct GrassmannInstance {
    pub params: GrassmannParams,
    pub system: Arc<LayeredSystem>,
    pub graph: AgreementGraph,
    pub t_flats: Vec<AffineSubspace>,
    pub k_flats: Vec<AffineSubspace>,
    pub s_flats: Vec<AffineSubspace>,
    /// Whether the dimensions satisfy the headline regime
    /// q2 >= 3*q1 + 2. Reported, never enforced.
    pub regime_ok: bool,
}

/// Uniform kernel rows built from an adjacency list.
fn uniform_kernel(adjacency: Vec<Vec<usize>>) -> Result<Vec<crate::system::KernelRow>> {
    adjacency
        .into_iter()
        .enumerate()
        .map(|(src, hits)| {
            if hits.is_empty() {
                return Err(LtcError::Structure(format!(
                    "element {src} has no superset in the next layer"
                )));
            }
            let p = crate::rational::ratio_of_counts(1, hits.len());
            Ok(hits.into_iter().map(|dst| (dst, p.clone())).collect())
        })
        .collect()
}

/// Upward adjacency from lower flats to the higher flats containing
/// them, computed by enumerating sub-flats of each higher flat.
fn upward_adjacency(
    lower: &[AffineSubspace],
    higher: &[AffineSubspace],
    lower_dim: usize,
) -> Result<Vec<Vec<usize>>> {
    let index: HashMap<&AffineSubspace, usize> =
        lower.iter().enumerate().map(|(i, f)| (f, i)).collect();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); lower.len()];
    for (hi_idx, hi) in higher.iter().enumerate() {
        for sub in hi.subflats(lower_dim)? {
            let lo_idx = *index
                .get(&sub)
                .ok_or_else(|| LtcError::Structure("sub-flat missing from enumeration".into()))?;
            adjacency[lo_idx].push(hi_idx);
        }
    }
    for row in &mut adjacency {
        row.sort_unstable();
        row.dedup();
    }
    Ok(adjacency)
}

pub fn grassmann_mas(params: GrassmannParams) -> Result<GrassmannInstance> {
    let GrassmannParams { p, n, q0, q1, q2 } = params;
    if !(0 < q0 && q0 < q1 && q1 < q2 && q2 <= n) {
        return Err(LtcError::Structure(format!(
            "need 0 < q0 < q1 < q2 <= n, got ({q0}, {q1}, {q2}) with n = {n}"
        )));
    }
    check_flat_guard(p, n)?;
    Field::new(p)?;

    let t_flats = enumerate_affine(p, n, q0)?;
    let k_flats = enumerate_affine(p, n, q1)?;
    let s_flats = enumerate_affine(p, n, q2)?;

    let point_count = (p as u32).pow(n as u32);
    let ground = Arc::new(CoordSet::range(point_count));

    // t's through each point
    let mut t_through: Vec<Vec<usize>> = vec![Vec::new(); point_count as usize];
    for (t_idx, t) in t_flats.iter().enumerate() {
        for pt in t.points() {
            t_through[point_id(p, &pt) as usize].push(t_idx);
        }
    }
    let t_given_v = uniform_kernel(t_through)?;
    let k_given_t = uniform_kernel(upward_adjacency(&t_flats, &k_flats, q0)?)?;
    let s_given_k = uniform_kernel(upward_adjacency(&k_flats, &s_flats, q1)?)?;

    let v_marginal = vec![
        crate::rational::ratio_of_counts(1, point_count as usize);
        point_count as usize
    ];
    let to_sets = |flats: &[AffineSubspace]| -> Vec<Arc<CoordSet>> {
        flats.iter().map(|f| Arc::new(f.coord_set())).collect()
    };
    let system = Arc::new(LayeredSystem::new(
        ground,
        to_sets(&t_flats),
        to_sets(&k_flats),
        to_sets(&s_flats),
        v_marginal,
        t_given_v,
        k_given_t,
        s_given_k,
    )?);
    let graph = AgreementGraph::from_chain(&system);
    Ok(GrassmannInstance {
        params,
        system,
        graph,
        t_flats,
        k_flats,
        s_flats,
        regime_ok: q2 >= 3 * q1 + 2,
    })
}

/// A two-layer degenerate hierarchy: T = all lines of F_p^n, with both
/// upper layers collapsed to the whole space. Enough structure for
/// lifting and testing on small ambient spaces.
pub fn line_system(p: u16, n: usize) -> Result<(Arc<LayeredSystem>, Vec<AffineSubspace>)> {
    check_flat_guard(p, n)?;
    let lines = enumerate_affine(p, n, 1)?;
    let point_count = (p as u32).pow(n as u32);
    let ground = Arc::new(CoordSet::range(point_count));
    let t_sets: Vec<Arc<CoordSet>> = lines.iter().map(|f| Arc::new(f.coord_set())).collect();
    let system = LayeredSystem::uniform(
        Arc::clone(&ground),
        t_sets,
        vec![Arc::clone(&ground)],
        vec![ground],
    )?;
    Ok((Arc::new(system), lines))
}

/// Evaluations of univariate polynomials of degree at most `r` under
/// an affine parameterization of the line. The code depends only on
/// the line, not on the chosen parameterization.
pub fn reed_solomon_base(p: u16, r: usize, line: &AffineSubspace) -> Result<LinearCode> {
    if line.dim() != 1 {
        return Err(LtcError::Structure(format!(
            "base codes live on lines; got a flat of dimension {}",
            line.dim()
        )));
    }
    let field = Field::new(p)?;
    let coords = Arc::new(line.coord_set());
    let degree_cap = r.min(p as usize - 1);
    let points = line.points();
    let mut generators = Vec::with_capacity(degree_cap + 1);
    for j in 0..=degree_cap as u64 {
        let mut row = vec![0u16; coords.len()];
        for (lambda, pt) in points.iter().enumerate() {
            let id = point_id(p, pt);
            let pos = coords.index_of(id).expect("point of the line");
            row[pos] = field.element(lambda as u64).pow(j).value();
        }
        generators.push(row);
    }
    LinearCode::from_generators(field, coords, generators)
}

/// Evaluation code of n-variate polynomials of total degree at most
/// `r`, individual degrees below p.
pub fn reed_muller(p: u16, n: usize, r: usize) -> Result<LinearCode> {
    check_flat_guard(p, n)?;
    let field = Field::new(p)?;
    let point_count = (p as u32).pow(n as u32);
    let coords = Arc::new(CoordSet::range(point_count));

    // reduced monomial exponent vectors with total degree <= r
    let mut exponents: Vec<Vec<u16>> = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for e in &exponents {
            let used: usize = e.iter().map(|&x| x as usize).sum();
            for d in 0..p {
                if used + d as usize <= r {
                    let mut e2 = e.clone();
                    e2.push(d);
                    next.push(e2);
                }
            }
        }
        exponents = next;
    }

    let generators: Vec<Vec<u16>> = exponents
        .iter()
        .map(|exp| {
            (0..point_count)
                .map(|id| {
                    // big-endian base-p digits of the point id
                    let mut digits = vec![0u16; n];
                    let mut rest = id;
                    for i in (0..n).rev() {
                        digits[i] = (rest % p as u32) as u16;
                        rest /= p as u32;
                    }
                    let mut acc = field.one();
                    for (x, e) in digits.iter().zip(exp) {
                        acc = acc * field.element(*x as u64).pow(*e as u64);
                    }
                    acc.value()
                })
                .collect()
        })
        .collect();
    LinearCode::from_generators(field, coords, generators)
}

#[derive(Debug, Clone)]
pub struct LiftRmReport {
    pub lift_dimension: usize,
    pub rm_dimension: usize,
    pub rm_contained: bool,
    /// A lifted codeword outside the evaluation code, when the lift is
    /// strictly larger.
    pub witness: Option<Word>,
}

/// Compares the lift of degree-r line codes against the degree-r
/// evaluation code on the same space. Containment of the evaluation
/// code is verified; strictness is reported with a witness when found.
pub fn lift_vs_rm_compare(p: u16, n: usize, r: usize) -> Result<LiftRmReport> {
    let (system, lines) = line_system(p, n)?;
    let field = Field::new(p)?;
    let bases = lines
        .iter()
        .map(|line| reed_solomon_base(p, r, line))
        .collect::<Result<Vec<_>>>()?;
    let family = crate::tanner::LiftedCodeFamily::new(system, field, bases)?;
    let lift = family.lift(crate::tanner::LiftTarget::Global);
    let rm = reed_muller(p, n, r)?;

    let mut rm_contained = true;
    for b in rm.basis_words() {
        if !lift.contains(&b)? {
            rm_contained = false;
        }
    }
    let witness = if lift.dimension() > rm.dimension() {
        lift.basis_words().into_iter().find(|w| {
            !rm.contains(w).unwrap_or(false)
        })
    } else {
        None
    };
    Ok(LiftRmReport {
        lift_dimension: lift.dimension(),
        rm_dimension: rm.dimension(),
        rm_contained,
        witness,
    })
}
