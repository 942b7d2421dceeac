//! Agreement graphs over the top layer, local ensembles, plurality
//! decoding, and soundness measurement.
//!
//! An agreement edge carries two S-sets and a K-label contained in
//! their intersection; the value of an ensemble is the probability
//! that the two endpoint functions agree on the entire label.

use std::sync::Arc;

use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{LtcError, Result};
use crate::exec;
use crate::field::{corrupt_word, random_word, CoordSet, Field, Word};
use crate::rational::{Rational};
use crate::rng::{task_rng, Purpose};
use crate::system::{KernelRow, Layer, LayeredSystem, ValidationReport, Violation};

#[derive(Debug, Clone)]
pub struct AgreementEdge {
    pub s1: usize,
    pub s2: usize,
    pub label: usize,
    pub weight: Rational,
}

/// Weighted graph on the S layer with K-labeled edges. Edges are
/// ordered pairs whose weights sum to one; the first-endpoint marginal
/// and the per-vertex label distribution are derived from the edges.
#[derive(Debug, Clone)]
pub struct AgreementGraph {
    s_sets: Vec<Arc<CoordSet>>,
    k_sets: Vec<Arc<CoordSet>>,
    edges: Vec<AgreementEdge>,
    s_marginal: Vec<Rational>,
    /// label_given_s[s] = distribution of the label conditioned on the
    /// first endpoint being s.
    label_given_s: Vec<KernelRow>,
}

impl AgreementGraph {
    pub fn from_edges(
        s_sets: Vec<Arc<CoordSet>>,
        k_sets: Vec<Arc<CoordSet>>,
        edges: Vec<AgreementEdge>,
    ) -> Result<AgreementGraph> {
        let mut total = Rational::zero();
        let mut s_marginal = vec![Rational::zero(); s_sets.len()];
        let mut label_joint: Vec<std::collections::BTreeMap<usize, Rational>> =
            vec![Default::default(); s_sets.len()];
        for e in &edges {
            if e.s1 >= s_sets.len() || e.s2 >= s_sets.len() || e.label >= k_sets.len() {
                return Err(LtcError::Structure("edge index out of range".into()));
            }
            if e.weight < Rational::zero() {
                return Err(LtcError::Structure("negative edge weight".into()));
            }
            let k = &k_sets[e.label];
            if !k.is_subset_of(&s_sets[e.s1]) || !k.is_subset_of(&s_sets[e.s2]) {
                return Err(LtcError::Structure(format!(
                    "label {} is not contained in both endpoints ({}, {})",
                    e.label, e.s1, e.s2
                )));
            }
            total += &e.weight;
            s_marginal[e.s1] += &e.weight;
            *label_joint[e.s1].entry(e.label).or_insert_with(Rational::zero) += &e.weight;
        }
        if total != Rational::one() {
            return Err(LtcError::Structure(format!(
                "edge weights sum to {total}, expected 1"
            )));
        }
        let label_given_s = label_joint
            .into_iter()
            .enumerate()
            .map(|(s, joint)| {
                joint
                    .into_iter()
                    .filter(|(_, w)| !w.is_zero())
                    .map(|(k, w)| (k, w / &s_marginal[s]))
                    .collect()
            })
            .collect();
        Ok(AgreementGraph {
            s_sets,
            k_sets,
            edges,
            s_marginal,
            label_given_s,
        })
    }

    /// The canonical agreement test of a layered system: sample k from
    /// its marginal, then two supersets s, s' independently given k.
    pub fn from_chain(system: &LayeredSystem) -> AgreementGraph {
        let k_marginal = system.marginal(Layer::K).to_vec();
        let mut edges = Vec::new();
        for (k_idx, pk) in k_marginal.iter().enumerate() {
            if pk.is_zero() {
                continue;
            }
            let row = &system.s_given_k()[k_idx];
            for (s1, p1) in row {
                for (s2, p2) in row {
                    let w = pk * p1 * p2;
                    if !w.is_zero() {
                        edges.push(AgreementEdge {
                            s1: *s1,
                            s2: *s2,
                            label: k_idx,
                            weight: w,
                        });
                    }
                }
            }
        }
        AgreementGraph::from_edges(
            system.layer_sets(Layer::S).to_vec(),
            system.layer_sets(Layer::K).to_vec(),
            edges,
        )
        .expect("chain-derived edges are valid by construction")
    }

    pub fn s_sets(&self) -> &[Arc<CoordSet>] {
        &self.s_sets
    }

    pub fn k_sets(&self) -> &[Arc<CoordSet>] {
        &self.k_sets
    }

    pub fn edges(&self) -> &[AgreementEdge] {
        &self.edges
    }

    pub fn s_marginal(&self) -> &[Rational] {
        &self.s_marginal
    }

    pub fn label_given_s(&self) -> &[KernelRow] {
        &self.label_given_s
    }

    /// Verifies that the (s, label) marginal of the edges equals the
    /// (s, k) marginal of the system's chain.
    pub fn chain_consistency(&self, system: &LayeredSystem) -> ValidationReport {
        let mut violations = Vec::new();
        let k_marginal = system.marginal(Layer::K).to_vec();
        let mut chain_joint =
            vec![vec![Rational::zero(); self.k_sets.len()]; self.s_sets.len()];
        for (k_idx, pk) in k_marginal.iter().enumerate() {
            for (s_idx, ps) in &system.s_given_k()[k_idx] {
                chain_joint[*s_idx][k_idx] += pk * ps;
            }
        }
        let mut edge_joint = vec![vec![Rational::zero(); self.k_sets.len()]; self.s_sets.len()];
        for e in &self.edges {
            edge_joint[e.s1][e.label] += &e.weight;
        }
        for s in 0..self.s_sets.len() {
            for k in 0..self.k_sets.len() {
                if chain_joint[s][k] != edge_joint[s][k] {
                    violations.push(Violation::Normalization {
                        kernel: "agreement (s,k) marginal",
                        source: s,
                        sum: edge_joint[s][k].clone() - &chain_joint[s][k],
                    });
                }
            }
        }
        ValidationReport { violations }
    }
}

/// An assignment of a local word to every S-set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalEnsemble {
    assignments: Vec<Word>,
}

impl LocalEnsemble {
    pub fn new(s_sets: &[Arc<CoordSet>], assignments: Vec<Word>) -> Result<LocalEnsemble> {
        if assignments.len() != s_sets.len() {
            return Err(LtcError::Structure(format!(
                "{} assignments for {} sets",
                assignments.len(),
                s_sets.len()
            )));
        }
        for (w, s) in assignments.iter().zip(s_sets) {
            if w.coords() != s {
                return Err(LtcError::Structure(
                    "assignment is defined on the wrong coordinate set".into(),
                ));
            }
        }
        Ok(LocalEnsemble { assignments })
    }

    /// The perfectly global ensemble of a word on V.
    pub fn from_global(s_sets: &[Arc<CoordSet>], w: &Word) -> Result<LocalEnsemble> {
        let assignments = s_sets
            .iter()
            .map(|s| w.restrict(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(LocalEnsemble { assignments })
    }

    pub fn word(&self, s: usize) -> &Word {
        &self.assignments[s]
    }

    pub fn words(&self) -> &[Word] {
        &self.assignments
    }

    pub fn replace(&mut self, s: usize, w: Word) -> Result<()> {
        if w.coords() != self.assignments[s].coords() {
            return Err(LtcError::Structure(
                "replacement word is on the wrong coordinate set".into(),
            ));
        }
        self.assignments[s] = w;
        Ok(())
    }
}

/// Probability that the two endpoint functions of a random edge agree
/// on every coordinate of the label. Exact.
pub fn agreement_value(graph: &AgreementGraph, ensemble: &LocalEnsemble) -> Result<Rational> {
    if ensemble.assignments.len() != graph.s_sets.len() {
        return Err(LtcError::Structure("ensemble does not cover the vertex set".into()));
    }
    let mut value = Rational::zero();
    for e in &graph.edges {
        let k = &graph.k_sets[e.label];
        if ensemble.word(e.s1).agrees_on(ensemble.word(e.s2), k)? {
            value += &e.weight;
        }
    }
    Ok(value)
}

#[derive(Debug, Clone)]
pub struct DeltaCheck {
    pub ok: bool,
    /// Index of the first violating edge, if any.
    pub witness: Option<usize>,
}

/// Checks the dichotomy: on every edge the two endpoint restrictions
/// to the label either agree exactly or differ on at least a `delta`
/// fraction of it.
pub fn is_delta_ensemble(
    graph: &AgreementGraph,
    ensemble: &LocalEnsemble,
    delta: &Rational,
) -> Result<DeltaCheck> {
    for (idx, e) in graph.edges.iter().enumerate() {
        let k = &graph.k_sets[e.label];
        let ham = ensemble.word(e.s1).hamming_on(ensemble.word(e.s2), k)?;
        if ham == 0 {
            continue;
        }
        // ham / |k| >= delta, compared without division
        let lhs = Rational::from_integer((ham as i64).into());
        let rhs = delta * Rational::from_integer((k.len() as i64).into());
        if lhs < rhs {
            return Ok(DeltaCheck {
                ok: false,
                witness: Some(idx),
            });
        }
    }
    Ok(DeltaCheck { ok: true, witness: None })
}

/// Constructive global decoding: at each ground element, the plurality
/// of the local values weighted by the chain's conditional distribution
/// of s given v. Ties break toward the smallest field element.
pub fn plurality_global(
    system: &LayeredSystem,
    field: Field,
    ensemble: &LocalEnsemble,
) -> Result<Word> {
    let s_sets = system.layer_sets(Layer::S);
    if ensemble.assignments.len() != s_sets.len() {
        return Err(LtcError::Structure("ensemble does not cover the S layer".into()));
    }
    let ground = system.ground();
    let p = field.modulus() as usize;
    let mut values = Vec::with_capacity(ground.len());
    for (v_idx, row) in system.s_given_v().iter().enumerate() {
        let v = ground.get(v_idx);
        let mut mass = vec![Rational::zero(); p];
        let mut covered = false;
        for (s_idx, weight) in row {
            if let Some(elem) = ensemble.word(*s_idx).get(v) {
                mass[elem.value() as usize] += weight;
                covered = true;
            }
        }
        if !covered {
            return Err(LtcError::Structure(format!(
                "ground element {v} is not covered by any set with positive weight"
            )));
        }
        let mut best = 0usize;
        for cand in 1..p {
            if mass[cand] > mass[best] {
                best = cand;
            }
        }
        values.push(best as u16);
    }
    Word::new(field, Arc::clone(ground), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMode {
    /// Probability that the local word differs from the restriction of
    /// the global word anywhere, s from the vertex marginal.
    Set,
    /// Probability that the restrictions to a random label differ,
    /// (s, k) from the vertex marginal and the label distribution.
    Label,
}

/// Distance from an ensemble to a global word under the chosen mode.
pub fn distance_to_global(
    graph: &AgreementGraph,
    ensemble: &LocalEnsemble,
    global: &Word,
    mode: DistanceMode,
) -> Result<Rational> {
    if ensemble.assignments.len() != graph.s_sets.len() {
        return Err(LtcError::Structure("ensemble does not cover the vertex set".into()));
    }
    let mut out = Rational::zero();
    match mode {
        DistanceMode::Set => {
            for (s_idx, s) in graph.s_sets.iter().enumerate() {
                if graph.s_marginal[s_idx].is_zero() {
                    continue;
                }
                let restriction = global.restrict(s)?;
                if ensemble.word(s_idx) != &restriction {
                    out += &graph.s_marginal[s_idx];
                }
            }
        }
        DistanceMode::Label => {
            for (s_idx, labels) in graph.label_given_s.iter().enumerate() {
                let s_mass = &graph.s_marginal[s_idx];
                if s_mass.is_zero() {
                    continue;
                }
                for (k_idx, pk) in labels {
                    let k = &graph.k_sets[*k_idx];
                    if !ensemble.word(s_idx).agrees_on(global, k)? {
                        out += s_mass * pk;
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub enum AlphaSkip {
    NotDeltaEnsemble,
    ZeroLabelDistance,
}

#[derive(Debug, Clone)]
pub struct AlphaSample {
    pub trial: usize,
    pub strategy: &'static str,
    pub corruptions: usize,
    pub agreement: Rational,
    pub label_distance: Option<Rational>,
    pub ratio: Option<Rational>,
    pub skipped: Option<AlphaSkip>,
}

#[derive(Debug, Clone)]
pub struct AlphaEstimate {
    /// Min over surviving trials of (1 - agreement) / label distance to
    /// the plurality word; an empirical upper bound on the achievable
    /// soundness constant, or None if every trial was skipped.
    pub alpha_hat: Option<Rational>,
    pub samples: Vec<AlphaSample>,
    pub trials: usize,
}

/// Empirical soundness constant. Corrupts random global words at mixed
/// rates, keeps only trials that remain delta-ensembles, decodes by
/// plurality, and takes the minimum deficiency-to-distance ratio.
/// Assumes the instance is small enough that plurality decoding is a
/// good proxy for the best global word.
pub fn soundness_alpha_estimate(
    system: &LayeredSystem,
    graph: &AgreementGraph,
    field: Field,
    trials: usize,
    delta: &Rational,
    seed: u64,
) -> Result<AlphaEstimate> {
    let s_sets = graph.s_sets();
    let ground = system.ground();
    let total_local_values: usize = s_sets.iter().map(|s| s.len()).sum();
    let rates = [(1usize, 100usize), (5, 100), (10, 100), (20, 100)];

    let samples: Vec<Result<AlphaSample>> = exec::par_map_range(trials, |trial| {
        let mut rng = task_rng(seed, Purpose::AlphaTrial, trial as u64);
        let global = random_word(field, ground, &mut rng);
        let mut ensemble = LocalEnsemble::from_global(s_sets, &global)?;

        let (num, den) = rates[trial % rates.len()];
        let budget = (total_local_values * num / den).max(1);
        // alternate corruption styles: scattered single-value flips vs
        // whole-set rewrites
        let whole_sets = trial % 2 == 1;
        let (strategy, corruptions) = if whole_sets {
            let count = (budget / s_sets[0].len().max(1)).max(1).min(s_sets.len());
            let picks = rand::seq::index::sample(&mut rng, s_sets.len(), count);
            for s_idx in picks.iter() {
                let w = random_word(field, &s_sets[s_idx], &mut rng);
                ensemble.replace(s_idx, w)?;
            }
            ("rewrite-sets", count)
        } else {
            for _ in 0..budget {
                let s_idx = rng.gen_range(0..s_sets.len());
                let corrupted = corrupt_word(ensemble.word(s_idx), 1, &mut rng);
                ensemble.replace(s_idx, corrupted)?;
            }
            ("flip-values", budget)
        };

        let check = is_delta_ensemble(graph, &ensemble, delta)?;
        if !check.ok {
            return Ok(AlphaSample {
                trial,
                strategy,
                corruptions,
                agreement: Rational::zero(),
                label_distance: None,
                ratio: None,
                skipped: Some(AlphaSkip::NotDeltaEnsemble),
            });
        }
        let agreement = agreement_value(graph, &ensemble)?;
        let decoded = plurality_global(system, field, &ensemble)?;
        let label_distance =
            distance_to_global(graph, &ensemble, &decoded, DistanceMode::Label)?;
        if label_distance.is_zero() {
            return Ok(AlphaSample {
                trial,
                strategy,
                corruptions,
                agreement,
                label_distance: Some(label_distance),
                ratio: None,
                skipped: Some(AlphaSkip::ZeroLabelDistance),
            });
        }
        let ratio = (Rational::one() - &agreement) / &label_distance;
        Ok(AlphaSample {
            trial,
            strategy,
            corruptions,
            agreement,
            label_distance: Some(label_distance),
            ratio: Some(ratio),
            skipped: None,
        })
    });

    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let alpha_hat = samples
        .iter()
        .filter_map(|s| s.ratio.as_ref())
        .min()
        .cloned();
    Ok(AlphaEstimate {
        alpha_hat,
        samples,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::CoordId;
    use crate::rational::{rat, rat_int};
    use rand::SeedableRng;

    fn cs(ids: &[CoordId]) -> Arc<CoordSet> {
        Arc::new(CoordSet::new(ids.to_vec()))
    }

    fn f(p: u16) -> Field {
        Field::new(p).unwrap()
    }

    /// V = {0,1,2,3}; S = three triples overlapping pairwise; K = the
    /// pairwise intersections; T = singletons. Element 2 lies in all
    /// three S-sets with equal conditional weight.
    fn triple_overlap() -> (Arc<LayeredSystem>, AgreementGraph) {
        let v = cs(&[0, 1, 2, 3]);
        let t = vec![cs(&[0]), cs(&[1]), cs(&[2]), cs(&[3])];
        let k = vec![cs(&[1, 2]), cs(&[0, 2]), cs(&[2, 3])];
        let s = vec![cs(&[0, 1, 2]), cs(&[1, 2, 3]), cs(&[0, 2, 3])];
        let sys = LayeredSystem::uniform(v, t, k, s).unwrap();
        assert!(sys.validate().is_valid());
        let graph = AgreementGraph::from_chain(&sys);
        (Arc::new(sys), graph)
    }

    /// Ten pairs around a ring; every pair is its own T, K and S set.
    fn ring_pairs() -> (Arc<LayeredSystem>, AgreementGraph) {
        let ids: Vec<CoordId> = (0..10).collect();
        let v = cs(&ids);
        let pairs: Vec<Arc<CoordSet>> = (0..10u32)
            .map(|i| cs(&[i, (i + 1) % 10]))
            .collect();
        let sys = LayeredSystem::uniform(v, pairs.clone(), pairs.clone(), pairs).unwrap();
        assert!(sys.validate().is_valid());
        let graph = AgreementGraph::from_chain(&sys);
        (Arc::new(sys), graph)
    }

    #[test]
    fn chain_derived_graph_is_consistent() {
        let (sys, graph) = triple_overlap();
        assert!(graph.chain_consistency(&sys).is_valid());
        let total: Rational = graph.edges().iter().map(|e| e.weight.clone()).sum();
        assert_eq!(total, rat_int(1));
    }

    #[test]
    fn perfectly_global_ensembles_have_value_one() {
        let (sys, graph) = triple_overlap();
        let field = f(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..25 {
            let w = random_word(field, sys.ground(), &mut rng);
            let e = LocalEnsemble::from_global(graph.s_sets(), &w).unwrap();
            assert_eq!(agreement_value(&graph, &e).unwrap(), rat_int(1));
        }
    }

    #[test]
    fn single_edge_disagreement_examples() {
        // one edge, endpoints differing at one label coordinate: value 0
        let s_sets = vec![cs(&[0, 1]), cs(&[0, 2])];
        let k_sets = vec![cs(&[0])];
        let field = f(2);
        let edges = vec![AgreementEdge {
            s1: 0,
            s2: 1,
            label: 0,
            weight: rat_int(1),
        }];
        let graph = AgreementGraph::from_edges(s_sets.clone(), k_sets, edges).unwrap();
        let e = LocalEnsemble::new(
            &s_sets,
            vec![
                Word::new(field, s_sets[0].clone(), vec![1, 0]).unwrap(),
                Word::new(field, s_sets[1].clone(), vec![0, 0]).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(agreement_value(&graph, &e).unwrap(), rat_int(0));

        // two equal-weight edges, one agreeing and one not: value 1/2
        let s_sets = vec![cs(&[0, 1]), cs(&[0, 2]), cs(&[0, 3])];
        let k_sets = vec![cs(&[0])];
        let edges = vec![
            AgreementEdge { s1: 0, s2: 1, label: 0, weight: rat(1, 2) },
            AgreementEdge { s1: 0, s2: 2, label: 0, weight: rat(1, 2) },
        ];
        let graph = AgreementGraph::from_edges(s_sets.clone(), k_sets, edges).unwrap();
        let e = LocalEnsemble::new(
            &s_sets,
            vec![
                Word::new(field, s_sets[0].clone(), vec![1, 0]).unwrap(),
                Word::new(field, s_sets[1].clone(), vec![0, 0]).unwrap(),
                Word::new(field, s_sets[2].clone(), vec![1, 0]).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(agreement_value(&graph, &e).unwrap(), rat(1, 2));
    }

    #[test]
    fn delta_ensemble_examples() {
        let (sys, graph) = triple_overlap();
        let field = f(2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let w = random_word(field, sys.ground(), &mut rng);
        let global = LocalEnsemble::from_global(graph.s_sets(), &w).unwrap();
        for delta in [rat(1, 10), rat(1, 2), rat_int(1)] {
            assert!(is_delta_ensemble(&graph, &global, &delta).unwrap().ok);
        }

        // labels have 2 coordinates here; a single-coordinate
        // disagreement is a 1/2 fraction, so delta = 3/4 rejects it
        let mut corrupted = global.clone();
        let mut w0 = corrupted.word(0).clone();
        let flip = (w0.value_at(2) + 1) % 2;
        w0.set_at(2, flip);
        corrupted.replace(0, w0).unwrap();
        let check = is_delta_ensemble(&graph, &corrupted, &rat(3, 4)).unwrap();
        assert!(!check.ok);
        assert!(check.witness.is_some());
        assert!(is_delta_ensemble(&graph, &corrupted, &rat(1, 2)).unwrap().ok);
    }

    #[test]
    fn plurality_recovers_global_words() {
        let (sys, graph) = triple_overlap();
        let field = f(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let w = random_word(field, sys.ground(), &mut rng);
            let e = LocalEnsemble::from_global(graph.s_sets(), &w).unwrap();
            assert_eq!(plurality_global(&sys, field, &e).unwrap(), w);
        }
    }

    #[test]
    fn plurality_outvotes_a_single_corruption() {
        // element 2 is covered by all three S-sets with weight 1/3
        // each; corrupt one local value there and the other two win
        let (sys, graph) = triple_overlap();
        let field = f(3);
        let row = &sys.s_given_v()[2];
        assert_eq!(row.len(), 3);
        for (_, weight) in row {
            assert_eq!(weight, &rat(1, 3));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for trial in 0..10 {
            let w = random_word(field, sys.ground(), &mut rng);
            let mut e = LocalEnsemble::from_global(graph.s_sets(), &w).unwrap();
            let s_star = trial % 3;
            let mut corrupted = e.word(s_star).clone();
            let pos = corrupted.coords().index_of(2).unwrap();
            corrupted.set_at(pos, (corrupted.value_at(pos) + 1) % 3);
            e.replace(s_star, corrupted).unwrap();
            assert_eq!(plurality_global(&sys, field, &e).unwrap(), w);
        }
    }

    #[test]
    fn plurality_ties_break_to_zero() {
        // two sets cover element 0 with equal weight and disagree there
        let v = cs(&[0, 1]);
        let t = vec![cs(&[0]), cs(&[1])];
        let k = vec![cs(&[0, 1])];
        let s = vec![cs(&[0, 1])];
        // build a two-S system by hand: both S-sets equal V so the
        // ensemble can disagree at 0
        let sys = LayeredSystem::new(
            v.clone(),
            t,
            k,
            vec![s[0].clone(), s[0].clone()],
            vec![rat(1, 2), rat(1, 2)],
            vec![vec![(0, rat_int(1))], vec![(1, rat_int(1))]],
            vec![vec![(0, rat_int(1))], vec![(0, rat_int(1))]],
            vec![vec![(0, rat(1, 2)), (1, rat(1, 2))]],
        )
        .unwrap();
        let field = f(2);
        let s_sets = sys.layer_sets(Layer::S).to_vec();
        let e = LocalEnsemble::new(
            &s_sets,
            vec![
                Word::new(field, s_sets[0].clone(), vec![1, 1]).unwrap(),
                Word::new(field, s_sets[1].clone(), vec![0, 1]).unwrap(),
            ],
        )
        .unwrap();
        let decoded = plurality_global(&sys, field, &e).unwrap();
        assert_eq!(decoded.values(), &[0, 1]);
    }

    #[test]
    fn distances_to_global_examples() {
        let (sys, graph) = triple_overlap();
        let field = f(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let w = random_word(field, sys.ground(), &mut rng);
        let e = LocalEnsemble::from_global(graph.s_sets(), &w).unwrap();
        assert_eq!(
            distance_to_global(&graph, &e, &w, DistanceMode::Set).unwrap(),
            rat_int(0)
        );
        assert_eq!(
            distance_to_global(&graph, &e, &w, DistanceMode::Label).unwrap(),
            rat_int(0)
        );
    }

    #[test]
    fn label_distance_never_exceeds_set_distance() {
        let (sys, graph) = triple_overlap();
        let field = f(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let w = random_word(field, sys.ground(), &mut rng);
            let mut e = LocalEnsemble::from_global(graph.s_sets(), &w).unwrap();
            for s_idx in 0..graph.s_sets().len() {
                if rng.gen_bool(0.5) {
                    let corrupted = corrupt_word(e.word(s_idx), 1, &mut rng);
                    e.replace(s_idx, corrupted).unwrap();
                }
            }
            let target = random_word(field, sys.ground(), &mut rng);
            let set_d = distance_to_global(&graph, &e, &target, DistanceMode::Set).unwrap();
            let label_d = distance_to_global(&graph, &e, &target, DistanceMode::Label).unwrap();
            assert!(label_d <= set_d);
        }
    }

    #[test]
    fn label_distance_equals_direct_chain_summation() {
        // independent route: sum the chain's (s, k) joint directly
        let (sys, graph) = triple_overlap();
        let field = f(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let s_marginal = sys.marginal(Layer::S).to_vec();
        let k_given_s = sys.k_given_s().to_vec();
        let k_sets = sys.layer_sets(Layer::K);
        for _ in 0..20 {
            let w = random_word(field, sys.ground(), &mut rng);
            let mut e = LocalEnsemble::from_global(graph.s_sets(), &w).unwrap();
            for s_idx in 0..graph.s_sets().len() {
                if rng.gen_bool(0.6) {
                    let c = corrupt_word(e.word(s_idx), 1, &mut rng);
                    e.replace(s_idx, c).unwrap();
                }
            }
            let target = random_word(field, sys.ground(), &mut rng);
            let mut direct = Rational::zero();
            for (s_idx, row) in k_given_s.iter().enumerate() {
                for (k_idx, pk) in row {
                    if !e.word(s_idx).agrees_on(&target, &k_sets[*k_idx]).unwrap() {
                        direct += &s_marginal[s_idx] * pk;
                    }
                }
            }
            let via_graph =
                distance_to_global(&graph, &e, &target, DistanceMode::Label).unwrap();
            assert_eq!(via_graph, direct);
        }
    }

    #[test]
    fn corrupted_set_of_mass_one_tenth() {
        // corrupt one pair entirely; its marginal mass is 1/10 and it
        // disagrees with the global word on its whole label
        let (sys, graph) = ring_pairs();
        let field = f(2);
        let w = Word::zero(field, Arc::clone(sys.ground()));
        let mut e = LocalEnsemble::from_global(graph.s_sets(), &w).unwrap();
        let s_star = 4;
        assert_eq!(graph.s_marginal()[s_star], rat(1, 10));
        let bad = Word::new(field, graph.s_sets()[s_star].clone(), vec![1, 1]).unwrap();
        e.replace(s_star, bad).unwrap();
        assert_eq!(
            distance_to_global(&graph, &e, &w, DistanceMode::Set).unwrap(),
            rat(1, 10)
        );
        assert_eq!(
            distance_to_global(&graph, &e, &w, DistanceMode::Label).unwrap(),
            rat(1, 10)
        );
    }

    #[test]
    fn alpha_estimate_produces_finite_positive_ratios() {
        let (sys, graph) = triple_overlap();
        let field = f(2);
        // labels have two coordinates: delta = 1/2 admits single flips
        let est =
            soundness_alpha_estimate(&sys, &graph, field, 24, &rat(1, 2), 31).unwrap();
        let alpha = est.alpha_hat.expect("some trial must survive");
        assert!(alpha > rat_int(0));
        // internal consistency on its own sample set
        for s in &est.samples {
            if let (Some(d), None) = (&s.label_distance, &s.skipped) {
                assert!(Rational::one() - &s.agreement >= alpha.clone() * d);
            }
        }
    }

    #[test]
    fn alpha_estimate_skips_perfect_ensembles_and_is_monotone() {
        let (sys, graph) = triple_overlap();
        let field = f(2);
        let short =
            soundness_alpha_estimate(&sys, &graph, field, 8, &rat(1, 2), 31).unwrap();
        let long =
            soundness_alpha_estimate(&sys, &graph, field, 24, &rat(1, 2), 31).unwrap();
        if let (Some(a), Some(b)) = (&short.alpha_hat, &long.alpha_hat) {
            assert!(b <= a, "more trials can only lower the minimum");
        }
        // a perfectly global ensemble has label distance zero and is
        // skipped rather than dividing by zero
        let w = Word::zero(field, Arc::clone(sys.ground()));
        let e = LocalEnsemble::from_global(graph.s_sets(), &w).unwrap();
        let decoded = plurality_global(&sys, field, &e).unwrap();
        let d = distance_to_global(&graph, &e, &decoded, DistanceMode::Label).unwrap();
        assert!(d.is_zero());
    }
}
