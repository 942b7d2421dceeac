//! Four-layer set systems with a downward Markov chain, containment
//! graphs, and sampler audits.
//!
//! The chain factorizes as marginal(V), then kernels V->T, T->K, K->S,
//! each supported on containing sets. Probabilities are exact
//! rationals throughout; Monte Carlo appears only in `sample_chain`.

use std::sync::{Arc, OnceLock};

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{LtcError, Result};
use crate::exec;
use crate::field::{CoordId, CoordSet};
use crate::rational::Rational;
use crate::rng::{task_rng, Purpose};

/// Default cap on the size of the side that subsets range over in the
/// exhaustive sampler audit (2^size subsets are scanned).
pub const DEFAULT_SAMPLER_EXACT_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    V,
    T,
    K,
    S,
}

impl Layer {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::V => "V",
            Layer::T => "T",
            Layer::K => "K",
            Layer::S => "S",
        }
    }
}

/// Sparse kernel row: (target index, probability).
pub type KernelRow = Vec<(usize, Rational)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A kernel row gives positive weight to a non-containing target.
    Containment {
        kernel: &'static str,
        source: usize,
        target: usize,
    },
    /// A kernel row does not sum to one.
    Normalization {
        kernel: &'static str,
        source: usize,
        sum: Rational,
    },
    NegativeWeight {
        kernel: &'static str,
        source: usize,
        target: usize,
    },
    /// A layer element carries zero marginal probability.
    ZeroMass { layer: &'static str, index: usize },
    /// A set is not a subset of the ground set.
    NotInGround { layer: &'static str, index: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Containment { kernel, source, target } => {
                write!(f, "{kernel}: row {source} weights non-containing target {target}")
            }
            Violation::Normalization { kernel, source, sum } => {
                write!(f, "{kernel}: row {source} sums to {sum} instead of 1")
            }
            Violation::NegativeWeight { kernel, source, target } => {
                write!(f, "{kernel}: negative weight at ({source}, {target})")
            }
            Violation::ZeroMass { layer, index } => {
                write!(f, "layer {layer}: element {index} has zero marginal")
            }
            Violation::NotInGround { layer, index } => {
                write!(f, "layer {layer}: set {index} is not contained in V")
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainSample {
    pub v: CoordId,
    pub v_index: usize,
    pub t_index: usize,
    pub k_index: usize,
    pub s_index: usize,
}

#[derive(Default)]
struct Caches {
    t_marginal: OnceLock<Vec<Rational>>,
    k_marginal: OnceLock<Vec<Rational>>,
    s_marginal: OnceLock<Vec<Rational>>,
    s_given_v: OnceLock<Vec<KernelRow>>,
    k_given_s: OnceLock<Vec<KernelRow>>,
}

impl std::fmt::Debug for Caches {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Caches { .. }")
    }
}

/// The layered set system V, T, K, S with its factorized chain.
/// Immutable after construction; marginals and derived conditionals
/// are computed lazily and cached.
#[derive(Debug)]
pub struct LayeredSystem {
    v: Arc<CoordSet>,
    t_sets: Vec<Arc<CoordSet>>,
    k_sets: Vec<Arc<CoordSet>>,
    s_sets: Vec<Arc<CoordSet>>,
    v_marginal: Vec<Rational>,
    t_given_v: Vec<KernelRow>,
    k_given_t: Vec<KernelRow>,
    s_given_k: Vec<KernelRow>,
    caches: Caches,
}

fn push_forward(source: &[Rational], kernel: &[KernelRow], target_len: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); target_len];
    for (src_idx, mass) in source.iter().enumerate() {
        if mass.is_zero() {
            continue;
        }
        for (dst, p) in &kernel[src_idx] {
            out[*dst] += mass * p;
        }
    }
    out
}

impl LayeredSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        v: Arc<CoordSet>,
        t_sets: Vec<Arc<CoordSet>>,
        k_sets: Vec<Arc<CoordSet>>,
        s_sets: Vec<Arc<CoordSet>>,
        v_marginal: Vec<Rational>,
        t_given_v: Vec<KernelRow>,
        k_given_t: Vec<KernelRow>,
        s_given_k: Vec<KernelRow>,
    ) -> Result<LayeredSystem> {
        if v_marginal.len() != v.len()
            || t_given_v.len() != v.len()
            || k_given_t.len() != t_sets.len()
            || s_given_k.len() != k_sets.len()
        {
            return Err(LtcError::Structure(
                "chain table lengths do not match the layers".into(),
            ));
        }
        let index_ok = |rows: &[KernelRow], bound: usize| {
            rows.iter().all(|row| row.iter().all(|(i, _)| *i < bound))
        };
        if !index_ok(&t_given_v, t_sets.len())
            || !index_ok(&k_given_t, k_sets.len())
            || !index_ok(&s_given_k, s_sets.len())
        {
            return Err(LtcError::Structure("kernel row indexes out of range".into()));
        }
        Ok(LayeredSystem {
            v,
            t_sets,
            k_sets,
            s_sets,
            v_marginal,
            t_given_v,
            k_given_t,
            s_given_k,
            caches: Caches::default(),
        })
    }

    /// Uniform ground marginal with uniform upward kernels: t uniform
    /// over sets containing v, k uniform over supersets of t, s uniform
    /// over supersets of k. Fails if any element or set has nothing
    /// above it.
    pub fn uniform(
        v: Arc<CoordSet>,
        t_sets: Vec<Arc<CoordSet>>,
        k_sets: Vec<Arc<CoordSet>>,
        s_sets: Vec<Arc<CoordSet>>,
    ) -> Result<LayeredSystem> {
        let n = v.len();
        let v_marginal = vec![Rational::new(1.into(), (n as i64).into()); n];

        let uniform_rows = |sources: usize, contains: &dyn Fn(usize, usize) -> bool, targets: usize, what: &str| -> Result<Vec<KernelRow>> {
            let mut rows = Vec::with_capacity(sources);
            for src in 0..sources {
                let hits: Vec<usize> = (0..targets).filter(|&dst| contains(src, dst)).collect();
                if hits.is_empty() {
                    return Err(LtcError::Structure(format!(
                        "{what} {src} has no containing set in the next layer"
                    )));
                }
                let p = Rational::new(1.into(), (hits.len() as i64).into());
                rows.push(hits.into_iter().map(|dst| (dst, p.clone())).collect());
            }
            Ok(rows)
        };

        let t_given_v = uniform_rows(
            n,
            &|vi, ti| t_sets[ti].contains(v.get(vi)),
            t_sets.len(),
            "ground element",
        )?;
        let k_given_t = uniform_rows(
            t_sets.len(),
            &|ti, ki| t_sets[ti].is_subset_of(&k_sets[ki]),
            k_sets.len(),
            "T set",
        )?;
        let s_given_k = uniform_rows(
            k_sets.len(),
            &|ki, si| k_sets[ki].is_subset_of(&s_sets[si]),
            s_sets.len(),
            "K set",
        )?;
        LayeredSystem::new(
            v, t_sets, k_sets, s_sets, v_marginal, t_given_v, k_given_t, s_given_k,
        )
    }

    pub fn ground(&self) -> &Arc<CoordSet> {
        &self.v
    }

    pub fn layer_sets(&self, layer: Layer) -> &[Arc<CoordSet>] {
        match layer {
            Layer::V => std::slice::from_ref(&self.v),
            Layer::T => &self.t_sets,
            Layer::K => &self.k_sets,
            Layer::S => &self.s_sets,
        }
    }

    pub fn layer_len(&self, layer: Layer) -> usize {
        match layer {
            Layer::V => self.v.len(),
            Layer::T => self.t_sets.len(),
            Layer::K => self.k_sets.len(),
            Layer::S => self.s_sets.len(),
        }
    }

    pub fn v_marginal(&self) -> &[Rational] {
        &self.v_marginal
    }

    pub fn t_given_v(&self) -> &[KernelRow] {
        &self.t_given_v
    }

    pub fn k_given_t(&self) -> &[KernelRow] {
        &self.k_given_t
    }

    pub fn s_given_k(&self) -> &[KernelRow] {
        &self.s_given_k
    }

    /// Exact marginal distribution of a layer under the chain.
    pub fn marginal(&self, layer: Layer) -> &[Rational] {
        match layer {
            Layer::V => &self.v_marginal,
            Layer::T => self.caches.t_marginal.get_or_init(|| {
                push_forward(&self.v_marginal, &self.t_given_v, self.t_sets.len())
            }),
            Layer::K => self.caches.k_marginal.get_or_init(|| {
                push_forward(self.marginal(Layer::T), &self.k_given_t, self.k_sets.len())
            }),
            Layer::S => self.caches.s_marginal.get_or_init(|| {
                push_forward(self.marginal(Layer::K), &self.s_given_k, self.s_sets.len())
            }),
        }
    }

    /// Conditional distribution of s given the chain started at each
    /// ground element; used for plurality decoding.
    pub fn s_given_v(&self) -> &[KernelRow] {
        self.caches.s_given_v.get_or_init(|| {
            let mut rows = Vec::with_capacity(self.v.len());
            for v_idx in 0..self.v.len() {
                let mut acc = vec![Rational::zero(); self.s_sets.len()];
                for (t, pt) in &self.t_given_v[v_idx] {
                    for (k, pk) in &self.k_given_t[*t] {
                        let ptk = pt * pk;
                        for (s, ps) in &self.s_given_k[*k] {
                            acc[*s] += &ptk * ps;
                        }
                    }
                }
                rows.push(
                    acc.into_iter()
                        .enumerate()
                        .filter(|(_, p)| !p.is_zero())
                        .collect(),
                );
            }
            rows
        })
    }

    /// Bayes reversal of the top kernel: distribution of k given s.
    pub fn k_given_s(&self) -> &[KernelRow] {
        self.caches.k_given_s.get_or_init(|| {
            let k_marginal = self.marginal(Layer::K).to_vec();
            let s_marginal = self.marginal(Layer::S);
            let mut rows: Vec<KernelRow> = vec![Vec::new(); self.s_sets.len()];
            for (k_idx, pk) in k_marginal.iter().enumerate() {
                if pk.is_zero() {
                    continue;
                }
                for (s_idx, ps_given_k) in &self.s_given_k[k_idx] {
                    let joint = pk * ps_given_k;
                    if !joint.is_zero() {
                        rows[*s_idx].push((k_idx, joint / &s_marginal[*s_idx]));
                    }
                }
            }
            rows
        })
    }

    /// Smallest positive T-marginal; drives the default round cap of
    /// the correction loop.
    pub fn min_t_marginal(&self) -> Rational {
        self.marginal(Layer::T)
            .iter()
            .filter(|p| !p.is_zero())
            .min()
            .cloned()
            .unwrap_or_else(Rational::one)
    }

    /// Diagnostic check of containment, normalization and
    /// non-degeneracy. An empty report means the system is a valid
    /// chain over nested layers.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let one = Rational::one();

        for (name, sets) in [("T", &self.t_sets), ("K", &self.k_sets), ("S", &self.s_sets)] {
            for (i, set) in sets.iter().enumerate() {
                if !set.is_subset_of(&self.v) {
                    violations.push(Violation::NotInGround { layer: name, index: i });
                }
            }
        }

        let check_kernel = |name: &'static str,
                                rows: &[KernelRow],
                                contains: &dyn Fn(usize, usize) -> bool,
                                violations: &mut Vec<Violation>| {
            for (src, row) in rows.iter().enumerate() {
                let mut sum = Rational::zero();
                for (dst, p) in row {
                    if *p < Rational::zero() {
                        violations.push(Violation::NegativeWeight {
                            kernel: name,
                            source: src,
                            target: *dst,
                        });
                    }
                    if !p.is_zero() && !contains(src, *dst) {
                        violations.push(Violation::Containment {
                            kernel: name,
                            source: src,
                            target: *dst,
                        });
                    }
                    sum += p;
                }
                if sum != one {
                    violations.push(Violation::Normalization {
                        kernel: name,
                        source: src,
                        sum,
                    });
                }
            }
        };

        check_kernel(
            "t|v",
            &self.t_given_v,
            &|vi, ti| self.t_sets[ti].contains(self.v.get(vi)),
            &mut violations,
        );
        check_kernel(
            "k|t",
            &self.k_given_t,
            &|ti, ki| self.t_sets[ti].is_subset_of(&self.k_sets[ki]),
            &mut violations,
        );
        check_kernel(
            "s|k",
            &self.s_given_k,
            &|ki, si| self.k_sets[ki].is_subset_of(&self.s_sets[si]),
            &mut violations,
        );

        {
            let mut total = Rational::zero();
            for (i, p) in self.v_marginal.iter().enumerate() {
                if p.is_zero() || *p < Rational::zero() {
                    violations.push(Violation::ZeroMass { layer: "V", index: i });
                }
                total += p;
            }
            if total != one {
                violations.push(Violation::Normalization {
                    kernel: "v marginal",
                    source: 0,
                    sum: total,
                });
            }
        }
        for (name, layer) in [("T", Layer::T), ("K", Layer::K), ("S", Layer::S)] {
            for (i, p) in self.marginal(layer).iter().enumerate() {
                if p.is_zero() {
                    violations.push(Violation::ZeroMass { layer: name, index: i });
                }
            }
        }

        ValidationReport { violations }
    }

    /// Weighted containment graph between two adjacent layers; edge
    /// weights are the chain probabilities of sampling the pair.
    /// Subsets in sampler audits range over the `upper` side.
    pub fn containment_graph(&self, lower: Layer, upper: Layer) -> Result<BipartiteWeighted> {
        let (source_marginal, kernel, lower_len, upper_len) = match (lower, upper) {
            (Layer::V, Layer::T) => (
                self.v_marginal.to_vec(),
                &self.t_given_v,
                self.v.len(),
                self.t_sets.len(),
            ),
            (Layer::T, Layer::K) => (
                self.marginal(Layer::T).to_vec(),
                &self.k_given_t,
                self.t_sets.len(),
                self.k_sets.len(),
            ),
            (Layer::K, Layer::S) => (
                self.marginal(Layer::K).to_vec(),
                &self.s_given_k,
                self.k_sets.len(),
                self.s_sets.len(),
            ),
            _ => {
                return Err(LtcError::Unsupported(format!(
                    "layers {} and {} are not adjacent in the chain",
                    lower.name(),
                    upper.name()
                )))
            }
        };
        let mut edges = Vec::new();
        for (src, mass) in source_marginal.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            for (dst, p) in &kernel[src] {
                let w = mass * p;
                if !w.is_zero() {
                    edges.push((src, *dst, w));
                }
            }
        }
        BipartiteWeighted::from_edges(lower_len, upper_len, edges)
    }

    /// One draw from the factorized chain; deterministic for a fixed
    /// (seed, draw) pair.
    pub fn sample_chain(&self, seed: u64, draw: u64) -> ChainSample {
        let mut rng = task_rng(seed, Purpose::ChainDraw, draw);
        let dense: Vec<(usize, &Rational)> = self.v_marginal.iter().enumerate().collect();
        let v_index = draw_discrete(&mut rng, dense.iter().map(|(i, p)| (*i, (*p).clone())));
        let t_index = draw_discrete(&mut rng, self.t_given_v[v_index].iter().cloned());
        let k_index = draw_discrete(&mut rng, self.k_given_t[t_index].iter().cloned());
        let s_index = draw_discrete(&mut rng, self.s_given_k[k_index].iter().cloned());
        ChainSample {
            v: self.v.get(v_index),
            v_index,
            t_index,
            k_index,
            s_index,
        }
    }
}

/// Exact inverse-CDF draw from a finite rational distribution.
/// Weights are brought to a common denominator and an integer below
/// the total is drawn uniformly.
pub(crate) fn draw_discrete<R: Rng>(
    rng: &mut R,
    items: impl Iterator<Item = (usize, Rational)>,
) -> usize {
    let items: Vec<(usize, Rational)> = items.collect();
    assert!(!items.is_empty(), "cannot draw from an empty distribution");
    let mut denom = BigUint::one();
    for (_, p) in &items {
        let d = p.denom().magnitude();
        denom = num_integer::lcm(denom, d.clone());
    }
    let weights: Vec<BigUint> = items
        .iter()
        .map(|(_, p)| p.numer().magnitude() * (&denom / p.denom().magnitude()))
        .collect();
    let total: BigUint = weights.iter().sum();
    assert!(!total.is_zero());
    let x = rng.gen_biguint_below(&total);
    let mut acc = BigUint::zero();
    for ((idx, _), w) in items.iter().zip(&weights) {
        acc += w;
        if x < acc {
            return *idx;
        }
    }
    items.last().unwrap().0
}

/// A weighted bipartite graph with edge weights summing to one.
/// Conditional rows are stored per left vertex; audit subsets range
/// over the right side.
#[derive(Debug, Clone)]
pub struct BipartiteWeighted {
    left_len: usize,
    right_len: usize,
    edges: Vec<(usize, usize, Rational)>,
    left_marginal: Vec<Rational>,
    right_marginal: Vec<Rational>,
    /// rows[u] = conditional distribution over right vertices given
    /// left vertex u.
    rows: Vec<KernelRow>,
}

/// Result of the exhaustive sampler audit: the least constant lambda
/// such that every subset B of the right side and every positive
/// threshold obey the sampler inequality, with a witness attaining it.
#[derive(Debug, Clone)]
pub struct SamplerAudit {
    pub lambda: Rational,
    pub witness: Option<SamplerWitness>,
    pub subsets_scanned: u64,
}

#[derive(Debug, Clone)]
pub struct SamplerWitness {
    /// Right-side subset attaining the maximum.
    pub subset: Vec<usize>,
    /// The exceedance threshold at the maximum.
    pub gap: Rational,
    /// Mass of left vertices meeting or exceeding that gap.
    pub exceptional_mass: Rational,
    pub subset_mass: Rational,
}

#[derive(Debug, Clone)]
pub struct LambdaEstimate {
    /// Max over probed subsets; a lower bound on the exact constant.
    pub lower_bound: Rational,
    pub probes: usize,
    pub best: Option<SamplerWitness>,
    pub note: &'static str,
}

impl BipartiteWeighted {
    pub fn from_edges(
        left_len: usize,
        right_len: usize,
        edges: Vec<(usize, usize, Rational)>,
    ) -> Result<BipartiteWeighted> {
        let mut total = Rational::zero();
        let mut left_marginal = vec![Rational::zero(); left_len];
        let mut right_marginal = vec![Rational::zero(); right_len];
        for (u, v, w) in &edges {
            if *u >= left_len || *v >= right_len {
                return Err(LtcError::Structure("edge endpoint out of range".into()));
            }
            if *w < Rational::zero() {
                return Err(LtcError::Structure("negative edge weight".into()));
            }
            left_marginal[*u] += w;
            right_marginal[*v] += w;
            total += w;
        }
        if total != Rational::one() {
            return Err(LtcError::Structure(format!(
                "edge weights sum to {total}, expected 1"
            )));
        }
        let mut rows: Vec<KernelRow> = vec![Vec::new(); left_len];
        for (u, v, w) in &edges {
            if !w.is_zero() {
                rows[*u].push((*v, w / &left_marginal[*u]));
            }
        }
        Ok(BipartiteWeighted {
            left_len,
            right_len,
            edges,
            left_marginal,
            right_marginal,
            rows,
        })
    }

    pub fn left_len(&self) -> usize {
        self.left_len
    }

    pub fn right_len(&self) -> usize {
        self.right_len
    }

    pub fn edges(&self) -> &[(usize, usize, Rational)] {
        &self.edges
    }

    pub fn left_marginal(&self) -> &[Rational] {
        &self.left_marginal
    }

    pub fn right_marginal(&self) -> &[Rational] {
        &self.right_marginal
    }

    /// Swaps sides, so audits can range over the other one.
    pub fn transpose(&self) -> BipartiteWeighted {
        let edges = self
            .edges
            .iter()
            .map(|(u, v, w)| (*v, *u, w.clone()))
            .collect();
        BipartiteWeighted::from_edges(self.right_len, self.left_len, edges)
            .expect("transposing preserves validity")
    }

    /// The sampler constant contributed by one right-side subset: the
    /// max over achieved gaps g of g^2 * P{gap >= g} / P(B). Only the
    /// achieved gaps matter because the exceptional set is piecewise
    /// constant in the threshold.
    fn subset_candidate(&self, membership: &[bool]) -> Option<SamplerWitness> {
        let subset_mass: Rational = self
            .right_marginal
            .iter()
            .zip(membership)
            .filter(|(_, m)| **m)
            .map(|(p, _)| p.clone())
            .sum();
        if subset_mass.is_zero() {
            return None;
        }
        let mut gaps: Vec<(Rational, &Rational)> = Vec::new();
        for (u, row) in self.rows.iter().enumerate() {
            if self.left_marginal[u].is_zero() {
                continue;
            }
            let conditional: Rational = row
                .iter()
                .filter(|(v, _)| membership[*v])
                .map(|(_, p)| p.clone())
                .sum();
            if conditional > subset_mass {
                gaps.push((conditional - &subset_mass, &self.left_marginal[u]));
            }
        }
        if gaps.is_empty() {
            return None;
        }
        gaps.sort_by(|a, b| b.0.cmp(&a.0));
        let mut best: Option<(Rational, Rational, Rational)> = None;
        let mut mass = Rational::zero();
        let mut i = 0;
        while i < gaps.len() {
            let gap = gaps[i].0.clone();
            // accumulate every vertex achieving at least this gap
            while i < gaps.len() && gaps[i].0 == gap {
                mass += gaps[i].1;
                i += 1;
            }
            let cand = &gap * &gap * &mass / &subset_mass;
            if best.as_ref().map_or(true, |(b, _, _)| cand > *b) {
                best = Some((cand, gap, mass.clone()));
            }
        }
        let (_, gap, exceptional_mass) = best.unwrap();
        let subset = membership
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(|(i, _)| i)
            .collect();
        Some(SamplerWitness {
            subset,
            gap,
            exceptional_mass,
            subset_mass,
        })
    }

    fn witness_value(&self, w: &SamplerWitness) -> Rational {
        &w.gap * &w.gap * &w.exceptional_mass / &w.subset_mass
    }

    /// The least lambda making the sampler inequality hold for every
    /// right-side subset and every positive threshold, by exhaustive
    /// scan over subsets. `max_right` guards the 2^right blowup.
    pub fn sampler_lambda_exact(&self, max_right: usize) -> Result<SamplerAudit> {
        if self.right_len > max_right {
            return Err(LtcError::Resource(format!(
                "exhaustive sampler audit over {} right vertices exceeds the cap of {}; \
                 use the randomized estimator",
                self.right_len, max_right
            )));
        }
        let total: u64 = 1u64 << self.right_len;
        let best = exec::par_chunk_reduce(
            total,
            1 << 10,
            |a, b| {
                let mut membership = vec![false; self.right_len];
                let mut local: Option<(Rational, SamplerWitness)> = None;
                for mask in a..b {
                    if mask == 0 {
                        continue;
                    }
                    for (i, m) in membership.iter_mut().enumerate() {
                        *m = mask >> i & 1 == 1;
                    }
                    if let Some(w) = self.subset_candidate(&membership) {
                        let value = self.witness_value(&w);
                        if local.as_ref().map_or(true, |(b, _)| value > *b) {
                            local = Some((value, w));
                        }
                    }
                }
                local
            },
            |x, y| match (x, y) {
                (None, b) => b,
                (a, None) => a,
                (Some(a), Some(b)) => {
                    if b.0 > a.0 {
                        Some(b)
                    } else {
                        Some(a)
                    }
                }
            },
            None,
        );
        let (lambda, witness) = match best {
            Some((value, w)) => (value, Some(w)),
            None => (Rational::zero(), None),
        };
        Ok(SamplerAudit {
            lambda,
            witness,
            subsets_scanned: total - 1,
        })
    }

    /// Randomized lower bound on the sampler constant. Probes
    /// singletons and left-vertex neighborhoods always, plus `trials`
    /// random subsets at mixed densities. Never claims an upper bound.
    pub fn sampler_lambda_estimate(&self, trials: usize, seed: u64) -> LambdaEstimate {
        let mut probes: Vec<Vec<bool>> = Vec::new();
        for v in 0..self.right_len {
            let mut m = vec![false; self.right_len];
            m[v] = true;
            probes.push(m);
        }
        for row in &self.rows {
            let mut m = vec![false; self.right_len];
            for (v, _) in row {
                m[*v] = true;
            }
            probes.push(m);
        }
        let densities = [0.1, 0.25, 0.5];
        for trial in 0..trials {
            let mut rng = task_rng(seed, Purpose::LambdaProbe, trial as u64);
            let density = densities[trial % densities.len()];
            let m: Vec<bool> = (0..self.right_len).map(|_| rng.gen_bool(density)).collect();
            probes.push(m);
        }

        let candidates = exec::par_map(&probes, |m| self.subset_candidate(m));
        let mut best: Option<(Rational, SamplerWitness)> = None;
        for w in candidates.into_iter().flatten() {
            let value = self.witness_value(&w);
            if best.as_ref().map_or(true, |(b, _)| value > *b) {
                best = Some((value, w));
            }
        }
        let probes_len = probes.len();
        match best {
            Some((value, w)) => LambdaEstimate {
                lower_bound: value,
                probes: probes_len,
                best: Some(w),
                note: "lower bound only: max over probed subsets",
            },
            None => LambdaEstimate {
                lower_bound: Rational::zero(),
                probes: probes_len,
                best: None,
                note: "lower bound only: no probed subset produced a positive gap",
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn cs(ids: &[CoordId]) -> Arc<CoordSet> {
        Arc::new(CoordSet::new(ids.to_vec()))
    }

    /// V = {0,1}, T = {{0},{1}}, K = {{0},{1}}, S = {{0,1}}.
    fn tiny_system() -> LayeredSystem {
        LayeredSystem::uniform(
            cs(&[0, 1]),
            vec![cs(&[0]), cs(&[1])],
            vec![cs(&[0]), cs(&[1])],
            vec![cs(&[0, 1])],
        )
        .unwrap()
    }

    #[test]
    fn uniform_system_is_valid() {
        let sys = tiny_system();
        let report = sys.validate();
        assert!(report.is_valid(), "violations: {:?}", report.violations);
    }

    #[test]
    fn validation_flags_bad_rows() {
        let sys = LayeredSystem::new(
            cs(&[0, 1]),
            vec![cs(&[0]), cs(&[1])],
            vec![cs(&[0]), cs(&[1])],
            vec![cs(&[0, 1])],
            vec![rat(1, 2), rat(1, 2)],
            // row sums to 1/2 only
            vec![vec![(0, rat(1, 2))], vec![(1, rat_int(1))]],
            // t={1} weighted into k={0}: containment violation
            vec![vec![(0, rat_int(1))], vec![(0, rat_int(1))]],
            vec![vec![(0, rat_int(1))], vec![(0, rat_int(1))]],
        )
        .unwrap();
        let report = sys.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Normalization { kernel: "t|v", .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Containment { kernel: "k|t", source: 1, target: 0 })));
    }

    #[test]
    fn marginals_of_symmetric_system_are_uniform() {
        let sys = tiny_system();
        assert_eq!(sys.marginal(Layer::T), &[rat(1, 2), rat(1, 2)]);
        assert_eq!(sys.marginal(Layer::K), &[rat(1, 2), rat(1, 2)]);
        // single-element layer: point mass
        assert_eq!(sys.marginal(Layer::S), &[rat_int(1)]);
    }

    #[test]
    fn marginals_sum_to_one() {
        let sys = tiny_system();
        for layer in [Layer::V, Layer::T, Layer::K, Layer::S] {
            let total: Rational = sys.marginal(layer).iter().sum();
            assert_eq!(total, rat_int(1));
        }
    }

    #[test]
    fn containment_graph_marginals_match_layer_marginals() {
        let sys = tiny_system();
        let g = sys.containment_graph(Layer::T, Layer::K).unwrap();
        assert_eq!(g.left_marginal(), sys.marginal(Layer::T));
        assert_eq!(g.right_marginal(), sys.marginal(Layer::K));
        let total: Rational = g.edges().iter().map(|(_, _, w)| w.clone()).sum();
        assert_eq!(total, rat_int(1));
    }

    #[test]
    fn point_mass_kernel_yields_matching_graph() {
        // k|t is a point mass here, so the T-K graph is a perfect
        // matching weighted by the T marginal
        let sys = tiny_system();
        let g = sys.containment_graph(Layer::T, Layer::K).unwrap();
        assert_eq!(g.edges().len(), 2);
        for (t, k, w) in g.edges() {
            assert_eq!(t, k);
            assert_eq!(w, &rat(1, 2));
        }
    }

    #[test]
    fn non_adjacent_layers_rejected() {
        let sys = tiny_system();
        assert!(matches!(
            sys.containment_graph(Layer::V, Layer::K),
            Err(LtcError::Unsupported(_))
        ));
        assert!(matches!(
            sys.containment_graph(Layer::T, Layer::S),
            Err(LtcError::Unsupported(_))
        ));
    }

    fn perfect_matching() -> BipartiteWeighted {
        BipartiteWeighted::from_edges(
            2,
            2,
            vec![(0, 0, rat(1, 2)), (1, 1, rat(1, 2))],
        )
        .unwrap()
    }

    fn complete_product() -> BipartiteWeighted {
        let mut edges = Vec::new();
        for u in 0..2 {
            for v in 0..3 {
                edges.push((u, v, rat(1, 6)));
            }
        }
        BipartiteWeighted::from_edges(2, 3, edges).unwrap()
    }

    #[test]
    fn complete_product_graph_has_lambda_zero() {
        let audit = complete_product().sampler_lambda_exact(20).unwrap();
        assert_eq!(audit.lambda, rat_int(0));
        assert!(audit.witness.is_none());
    }

    #[test]
    fn perfect_matching_lambda_is_one_quarter() {
        // B = one right vertex: P(B) = 1/2, its partner sees it with
        // probability 1, so gap = 1/2, exceptional mass 1/2, giving
        // (1/2)^2 * (1/2) / (1/2) = 1/4. The scan over all four
        // subsets can do no better.
        let audit = perfect_matching().sampler_lambda_exact(20).unwrap();
        assert_eq!(audit.lambda, rat(1, 4));
        let w = audit.witness.unwrap();
        assert_eq!(w.subset.len(), 1);
        assert_eq!(w.gap, rat(1, 2));
    }

    #[test]
    fn exact_lambda_bounds_every_subset_and_threshold() {
        // brute-force re-check of the defining inequality, with the
        // exceptional set recomputed from scratch per (B, delta)
        let g = perfect_matching();
        let audit = g.sampler_lambda_exact(20).unwrap();
        let mut attained = false;
        for mask in 1u64..4 {
            let membership: Vec<bool> = (0..2).map(|i| mask >> i & 1 == 1).collect();
            let pb: Rational = g
                .right_marginal()
                .iter()
                .zip(&membership)
                .filter(|(_, m)| **m)
                .map(|(p, _)| p.clone())
                .sum();
            let mut gaps: Vec<(Rational, Rational)> = Vec::new();
            for u in 0..2 {
                let cond: Rational = g.rows[u]
                    .iter()
                    .filter(|(v, _)| membership[*v])
                    .map(|(_, p)| p.clone())
                    .sum();
                if cond > pb {
                    gaps.push((cond - &pb, g.left_marginal()[u].clone()));
                }
            }
            for (gap, _) in &gaps {
                let mass: Rational = gaps
                    .iter()
                    .filter(|(g2, _)| g2 >= gap)
                    .map(|(_, m)| m.clone())
                    .sum();
                let lhs = gap * gap * &mass / &pb;
                assert!(lhs <= audit.lambda);
                if lhs == audit.lambda {
                    attained = true;
                }
            }
        }
        assert!(attained, "the exact constant must be attained");
    }

    #[test]
    fn estimator_examples() {
        let est = complete_product().sampler_lambda_estimate(16, 99);
        assert_eq!(est.lower_bound, rat_int(0));

        // singletons are always probed, so the matching bound appears
        let est = perfect_matching().sampler_lambda_estimate(0, 1);
        assert_eq!(est.lower_bound, rat(1, 4));
    }

    #[test]
    fn estimator_never_exceeds_exact() {
        // random small graphs from seeded draws
        for seed in 0..10u64 {
            let mut rng = task_rng(seed, Purpose::LambdaProbe, 7777);
            let left = 2 + (rng.gen_range(0..3u32) as usize);
            let right = 2 + (rng.gen_range(0..3u32) as usize);
            let mut raw: Vec<(usize, usize, i64)> = Vec::new();
            let mut total = 0i64;
            for u in 0..left {
                for v in 0..right {
                    let w = rng.gen_range(0..4i64);
                    if w > 0 {
                        raw.push((u, v, w));
                        total += w;
                    }
                }
            }
            if total == 0 || raw.iter().map(|(u, _, _)| u).collect::<std::collections::HashSet<_>>().len() < left {
                continue;
            }
            let edges: Vec<(usize, usize, Rational)> = raw
                .into_iter()
                .map(|(u, v, w)| (u, v, rat(w, total)))
                .collect();
            let Ok(g) = BipartiteWeighted::from_edges(left, right, edges) else {
                continue;
            };
            let exact = g.sampler_lambda_exact(20).unwrap().lambda;
            let est = g.sampler_lambda_estimate(20, seed).lower_bound;
            assert!(est <= exact, "estimate {est} exceeds exact {exact}");
        }
    }

    #[test]
    fn budget_guard_redirects_to_estimator() {
        let g = complete_product();
        assert!(matches!(g.sampler_lambda_exact(2), Err(LtcError::Resource(_))));
    }

    #[test]
    fn chain_sampling_respects_support_and_determinism() {
        let sys = tiny_system();
        for draw in 0..50 {
            let a = sys.sample_chain(11, draw);
            let b = sys.sample_chain(11, draw);
            assert_eq!(a, b);
            let t = &sys.layer_sets(Layer::T)[a.t_index];
            let k = &sys.layer_sets(Layer::K)[a.k_index];
            let s = &sys.layer_sets(Layer::S)[a.s_index];
            assert!(t.contains(a.v));
            assert!(t.is_subset_of(k));
            assert!(k.is_subset_of(s));
        }
    }

    #[test]
    fn point_mass_system_always_samples_the_unique_chain() {
        let sys = LayeredSystem::uniform(
            cs(&[0]),
            vec![cs(&[0])],
            vec![cs(&[0])],
            vec![cs(&[0])],
        )
        .unwrap();
        for draw in 0..5 {
            let s = sys.sample_chain(3, draw);
            assert_eq!((s.v_index, s.t_index, s.k_index, s.s_index), (0, 0, 0, 0));
        }
    }

    #[test]
    fn empirical_t_frequencies_match_marginal() {
        let sys = tiny_system();
        let exact = sys.marginal(Layer::T).to_vec();
        let n = 20_000u64;
        let mut counts = vec![0u64; exact.len()];
        for draw in 0..n {
            counts[sys.sample_chain(5, draw).t_index] += 1;
        }
        // 3 sigma in exact integer arithmetic:
        // (count*b - a*n)^2 <= 9 a (b-a) n  for marginal a/b
        for (count, p) in counts.iter().zip(&exact) {
            let a = p.numer().clone();
            let b = p.denom().clone();
            let lhs = (count * b.clone() - &a * n).pow(2);
            let rhs = 9 * &a * (&b - &a) * n;
            assert!(lhs <= rhs, "empirical frequency outside 3 sigma");
        }
    }
}
