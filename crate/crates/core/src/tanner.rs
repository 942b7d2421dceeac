//! Lifting base codes through the layered system and the natural
//! tester: sample a T-set from the chain marginal and accept iff the
//! word's restriction lies in that set's base code.

use std::sync::{Arc, OnceLock};

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};

use crate::code::LinearCode;
use crate::error::{LtcError, Result};
use crate::exec;
use crate::field::{corrupt_word, Field, Word};
use crate::rational::Rational;
use crate::rng::{task_rng, Purpose};
use crate::system::{Layer, LayeredSystem};

/// Where to lift the base family to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftTarget {
    /// The whole ground set.
    Global,
    /// A K-layer set, by index.
    K(usize),
    /// An S-layer set, by index.
    S(usize),
}

/// A layered system together with one base code per T-set and lazily
/// built lifted codes. Lifted codes and codeword enumerations are
/// cached; initialization is per-entry and idempotent, so concurrent
/// readers see either nothing or a fully built value.
pub struct LiftedCodeFamily {
    system: Arc<LayeredSystem>,
    field: Field,
    base: Vec<Arc<LinearCode>>,
    lift_global: OnceLock<Arc<LinearCode>>,
    lift_k: Vec<OnceLock<Arc<LinearCode>>>,
    lift_s: Vec<OnceLock<Arc<LinearCode>>>,
    words_global: OnceLock<Arc<Vec<Word>>>,
    words_s: Vec<OnceLock<Arc<Vec<Word>>>>,
    t_cdf: OnceLock<(BigUint, Vec<BigUint>)>,
}

impl std::fmt::Debug for LiftedCodeFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiftedCodeFamily")
            .field("t_sets", &self.base.len())
            .finish()
    }
}

/// One run of the natural tester.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestTranscript {
    pub t_index: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct RhoSample {
    pub level: usize,
    pub trial: usize,
    /// Exact distance of the corrupted word to the lifted code.
    pub distance: Rational,
    pub fail: Rational,
    /// fail / distance; None when the corruption landed back in the code.
    pub ratio: Option<Rational>,
}

#[derive(Debug, Clone)]
pub struct RhoEstimate {
    pub samples: Vec<RhoSample>,
    /// Minimum observed ratio: the empirical lower envelope of the
    /// tester strength.
    pub rho_hat: Option<Rational>,
    pub skipped: usize,
}

impl LiftedCodeFamily {
    pub fn new(
        system: Arc<LayeredSystem>,
        field: Field,
        base: Vec<LinearCode>,
    ) -> Result<LiftedCodeFamily> {
        let t_sets = system.layer_sets(Layer::T);
        if base.len() != t_sets.len() {
            return Err(LtcError::Structure(format!(
                "{} base codes for {} T-sets",
                base.len(),
                t_sets.len()
            )));
        }
        for (code, t) in base.iter().zip(t_sets) {
            if code.coords() != t {
                return Err(LtcError::Structure(
                    "base code is defined on the wrong T-set".into(),
                ));
            }
            if code.field() != field {
                return Err(LtcError::Structure("base code has the wrong modulus".into()));
            }
        }
        let k_len = system.layer_len(Layer::K);
        let s_len = system.layer_len(Layer::S);
        Ok(LiftedCodeFamily {
            system,
            field,
            base: base.into_iter().map(Arc::new).collect(),
            lift_global: OnceLock::new(),
            lift_k: (0..k_len).map(|_| OnceLock::new()).collect(),
            lift_s: (0..s_len).map(|_| OnceLock::new()).collect(),
            words_global: OnceLock::new(),
            words_s: (0..s_len).map(|_| OnceLock::new()).collect(),
            t_cdf: OnceLock::new(),
        })
    }

    pub fn system(&self) -> &Arc<LayeredSystem> {
        &self.system
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn base_code(&self, t_index: usize) -> &Arc<LinearCode> {
        &self.base[t_index]
    }

    pub fn base_codes(&self) -> &[Arc<LinearCode>] {
        &self.base
    }

    fn build_lift(&self, target: LiftTarget) -> Arc<LinearCode> {
        let (target_set, label) = match target {
            LiftTarget::Global => (Arc::clone(self.system.ground()), "V"),
            LiftTarget::K(i) => (Arc::clone(&self.system.layer_sets(Layer::K)[i]), "K"),
            LiftTarget::S(i) => (Arc::clone(&self.system.layer_sets(Layer::S)[i]), "S"),
        };
        let _ = label;
        let t_sets = self.system.layer_sets(Layer::T);
        let mut rows: Vec<Vec<u16>> = Vec::new();
        for (t_idx, t) in t_sets.iter().enumerate() {
            if !t.is_subset_of(&target_set) {
                continue;
            }
            // re-index this base code's checks into the target set
            let positions: Vec<usize> = t
                .iter()
                .map(|id| target_set.index_of(id).expect("subset just verified"))
                .collect();
            for check in self.base[t_idx].check_rows() {
                let mut row = vec![0u16; target_set.len()];
                for (value, pos) in check.iter().zip(&positions) {
                    row[*pos] = *value;
                }
                rows.push(row);
            }
        }
        // no contained T-set leaves the full space; callers can see
        // this via check_count() == 0
        Arc::new(
            LinearCode::from_check_rows(self.field, target_set, rows)
                .expect("re-indexed checks are structurally valid"),
        )
    }

    /// The lifted code on the target set: kernel of the union of all
    /// contained base codes' checks.
    pub fn lift(&self, target: LiftTarget) -> Arc<LinearCode> {
        let slot = match target {
            LiftTarget::Global => &self.lift_global,
            LiftTarget::K(i) => &self.lift_k[i],
            LiftTarget::S(i) => &self.lift_s[i],
        };
        Arc::clone(slot.get_or_init(|| self.build_lift(target)))
    }

    /// Cached codeword enumeration for the global code or an S-code.
    pub fn codewords(&self, target: LiftTarget, budget: u64) -> Result<Arc<Vec<Word>>> {
        let slot = match target {
            LiftTarget::Global => &self.words_global,
            LiftTarget::S(i) => &self.words_s[i],
            LiftTarget::K(_) => {
                return self.lift(target).enumerate(budget).map(Arc::new);
            }
        };
        if let Some(words) = slot.get() {
            return Ok(Arc::clone(words));
        }
        let words = Arc::new(self.lift(target).enumerate(budget)?);
        Ok(Arc::clone(slot.get_or_init(|| words)))
    }

    /// Exact probability that a random T-set rejects `w`.
    pub fn fail_probability(&self, w: &Word) -> Result<Rational> {
        if w.coords() != self.system.ground() {
            return Err(LtcError::Structure("word is not defined on the ground set".into()));
        }
        let t_sets = self.system.layer_sets(Layer::T);
        let marginal = self.system.marginal(Layer::T);
        let mut fail = Rational::zero();
        for (t_idx, t) in t_sets.iter().enumerate() {
            if marginal[t_idx].is_zero() {
                continue;
            }
            let restriction = w.restrict(t)?;
            if !self.base[t_idx].contains(&restriction)? {
                fail += &marginal[t_idx];
            }
        }
        Ok(fail)
    }

    fn t_cdf(&self) -> &(BigUint, Vec<BigUint>) {
        self.t_cdf.get_or_init(|| {
            let marginal = self.system.marginal(Layer::T);
            let mut denom = BigUint::one();
            for p in marginal {
                denom = num_integer::lcm(denom, p.denom().magnitude().clone());
            }
            let mut acc = BigUint::zero();
            let cumulative = marginal
                .iter()
                .map(|p| {
                    acc += p.numer().magnitude() * (&denom / p.denom().magnitude());
                    acc.clone()
                })
                .collect();
            (denom, cumulative)
        })
    }

    /// One tester run; deterministic for fixed (seed, draw).
    pub fn tanner_test_once(&self, w: &Word, seed: u64, draw: u64) -> Result<TestTranscript> {
        if w.coords() != self.system.ground() {
            return Err(LtcError::Structure("word is not defined on the ground set".into()));
        }
        let (total, cumulative) = self.t_cdf();
        let mut rng = task_rng(seed, Purpose::TannerDraw, draw);
        let x = rng.gen_biguint_below(total);
        let t_index = cumulative.partition_point(|c| *c <= x);
        let t = &self.system.layer_sets(Layer::T)[t_index];
        let accepted = self.base[t_index].contains(&w.restrict(t)?)?;
        Ok(TestTranscript { t_index, accepted })
    }

    /// Empirical rejection rate over `draws` tester runs, in parallel
    /// chunks with per-draw determinism.
    pub fn rejection_rate(&self, w: &Word, draws: u64, seed: u64) -> Result<(u64, u64)> {
        // prime the shared caches before fanning out
        let _ = self.t_cdf();
        let rejected = exec::par_chunk_reduce(
            draws,
            1 << 12,
            |a, b| {
                let mut count = 0u64;
                for draw in a..b {
                    let t = self
                        .tanner_test_once(w, seed, draw)
                        .expect("word already validated");
                    if !t.accepted {
                        count += 1;
                    }
                }
                count
            },
            |x, y| x + y,
            0,
        );
        Ok((rejected, draws))
    }

    /// Corrupt random codewords at each level, measure exact failure
    /// probability and exact distance to the code, and report the
    /// minimum ratio. Distances come from exhaustive enumeration only.
    pub fn rho_estimate(
        &self,
        levels: &[usize],
        trials_per_level: usize,
        budget: u64,
        seed: u64,
    ) -> Result<RhoEstimate> {
        let code = self.lift(LiftTarget::Global);
        if code.dimension() == 0 {
            return Err(LtcError::Domain(
                "the lifted code is trivial; tester strength is undefined".into(),
            ));
        }
        let codewords = self.codewords(LiftTarget::Global, budget).map_err(|e| match e {
            LtcError::Resource(msg) => LtcError::Resource(format!(
                "{msg}; exact distances need full enumeration"
            )),
            other => other,
        })?;

        let tasks: Vec<(usize, usize)> = levels
            .iter()
            .flat_map(|&level| (0..trials_per_level).map(move |trial| (level, trial)))
            .collect();
        let samples: Vec<Result<RhoSample>> = exec::par_map(&tasks, |&(level, trial)| {
            let task_id = (level as u64) << 32 | trial as u64;
            let mut rng = task_rng(seed, Purpose::RhoSample, task_id);
            let clean = code.random_codeword(&mut rng);
            let corrupted = corrupt_word(&clean, level.min(clean.len()), &mut rng);
            let fail = self.fail_probability(&corrupted)?;
            let mut distance: Option<Rational> = None;
            for cw in codewords.iter() {
                let d = corrupted.distance(cw)?;
                if distance.as_ref().map_or(true, |b| d < *b) {
                    distance = Some(d);
                }
            }
            let distance = distance.expect("code has at least the zero word");
            let ratio = if distance.is_zero() {
                None
            } else {
                Some(&fail / &distance)
            };
            Ok(RhoSample {
                level,
                trial,
                distance,
                fail,
                ratio,
            })
        });
        let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
        let skipped = samples.iter().filter(|s| s.ratio.is_none()).count();
        let rho_hat = samples
            .iter()
            .filter_map(|s| s.ratio.as_ref())
            .min()
            .cloned();
        Ok(RhoEstimate {
            samples,
            rho_hat,
            skipped,
        })
    }

    /// Counting lower bound on the lifted dimension: |V| minus the sum
    /// of base check ranks. The true dimension can only be larger,
    /// since shared constraints overlap.
    pub fn dimension_lower_bound(&self) -> i64 {
        let n = self.system.ground().len() as i64;
        let total_rank: i64 = self.base.iter().map(|c| c.rank() as i64).sum();
        n - total_rank
    }

    /// Minimum distance over all lifted K-codes and the attaining index.
    pub fn min_k_distance(&self, budget: u64) -> Result<(Rational, usize)> {
        let k_len = self.system.layer_len(Layer::K);
        if k_len == 0 {
            return Err(LtcError::Structure("the K layer is empty".into()));
        }
        let distances: Vec<Result<Rational>> = exec::par_map_range(k_len, |k_idx| {
            self.lift(LiftTarget::K(k_idx)).minimum_distance(budget)
        });
        let mut best: Option<(Rational, usize)> = None;
        for (k_idx, d) in distances.into_iter().enumerate() {
            let d = d?;
            if best.as_ref().map_or(true, |(b, _)| d < *b) {
                best = Some((d, k_idx));
            }
        }
        Ok(best.unwrap())
    }
}
