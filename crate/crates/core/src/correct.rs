//! Iterative self-correction.
//!
//! One round replaces a word by the plurality decode of the ensemble
//! of nearest local codewords. The loop keeps exact per-round metrics,
//! continues only while the failure probability strictly decreases,
//! and never reports a corrected word whose failure probability is
//! positive.

use num_traits::{One, Zero};

use crate::agreement::{
    agreement_value, distance_to_global, plurality_global, AgreementGraph, DistanceMode,
    LocalEnsemble,
};
use crate::error::{LtcError, Result};
use crate::exec;
use crate::field::Word;
use crate::rational::{ceil_log2, rat_int, Rational};
use crate::system::{Layer, LayeredSystem};
use crate::tanner::{LiftTarget, LiftedCodeFamily};

/// One correction round with every quantity the analysis tracks.
#[derive(Debug, Clone)]
pub struct CorrectionRound {
    pub input: Word,
    pub ensemble: LocalEnsemble,
    /// Agreement value of the ensemble.
    pub agreement: Rational,
    pub output: Word,
    /// Failure probability of the input word.
    pub fail_in: Rational,
    /// Failure probability of the output word.
    pub fail_out: Rational,
    /// Distance between input and output.
    pub step_distance: Rational,
    /// Label distance from the ensemble to the output word.
    pub ensemble_label_distance: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The final word passes every test.
    FailZero,
    /// The failure probability stopped strictly decreasing.
    Stall,
    /// The round cap was reached first.
    RoundCap,
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::FailZero => "fail-zero",
            Termination::Stall => "stall",
            Termination::RoundCap => "round-cap",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorrectionTrace {
    pub rounds: Vec<CorrectionRound>,
    pub terminal: Word,
    pub reason: Termination,
}

impl CorrectionTrace {
    /// Sum of per-round step distances.
    pub fn total_distance(&self) -> Rational {
        self.rounds
            .iter()
            .map(|r| r.step_distance.clone())
            .sum()
    }

    pub fn is_corrected(&self) -> bool {
        self.reason == Termination::FailZero
    }
}

/// The ensemble of nearest local codewords: for every S-set, the
/// closest codeword of its lifted code to the word's restriction,
/// with deterministic lexicographic tie-breaking.
pub fn build_ensemble(
    family: &LiftedCodeFamily,
    w: &Word,
    budget: u64,
) -> Result<LocalEnsemble> {
    let system = family.system();
    let s_sets = system.layer_sets(Layer::S);
    let words: Vec<Result<Word>> = exec::par_map_range(s_sets.len(), |s_idx| {
        let restriction = w.restrict(&s_sets[s_idx])?;
        let code = family.lift(LiftTarget::S(s_idx));
        if code.contains(&restriction)? {
            // already local: nearest is itself
            return Ok(restriction);
        }
        let (nearest, _) = code.nearest_codeword(&restriction, budget)?;
        Ok(nearest)
    });
    let words = words.into_iter().collect::<Result<Vec<_>>>()?;
    LocalEnsemble::new(s_sets, words)
}

/// Runs one full round and measures everything; no hypothesis checks
/// happen here.
pub fn correction_round(
    family: &LiftedCodeFamily,
    graph: &AgreementGraph,
    w: &Word,
    budget: u64,
) -> Result<CorrectionRound> {
    let fail_in = family.fail_probability(w)?;
    let ensemble = build_ensemble(family, w, budget)?;
    let agreement = agreement_value(graph, &ensemble)?;
    let output = plurality_global(family.system(), family.field(), &ensemble)?;
    let fail_out = family.fail_probability(&output)?;
    let step_distance = w.distance(&output)?;
    let ensemble_label_distance =
        distance_to_global(graph, &ensemble, &output, DistanceMode::Label)?;
    Ok(CorrectionRound {
        input: w.clone(),
        ensemble,
        agreement,
        output,
        fail_in,
        fail_out,
        step_distance,
        ensemble_label_distance,
    })
}

/// Default cap: one log factor of the smallest T-mass, plus one.
pub fn default_round_cap(system: &LayeredSystem) -> usize {
    let min_mass = system.min_t_marginal();
    ceil_log2(&(Rational::one() / min_mass)) as usize + 1
}

/// Iterates correction rounds until the failure probability reaches
/// zero, stops strictly decreasing, or the cap is hit. A trace is
/// always returned; only a fail-zero trace claims a codeword.
pub fn iterative_self_correct(
    family: &LiftedCodeFamily,
    graph: &AgreementGraph,
    w0: &Word,
    round_cap: Option<usize>,
    budget: u64,
) -> Result<CorrectionTrace> {
    let cap = round_cap.unwrap_or_else(|| default_round_cap(family.system()));
    if cap == 0 {
        return Err(LtcError::Structure("round cap must be at least 1".into()));
    }
    let mut rounds = Vec::new();
    let mut current = w0.clone();
    loop {
        let round = correction_round(family, graph, &current, budget)?;
        let next = round.output.clone();
        let fail_in = round.fail_in.clone();
        let fail_out = round.fail_out.clone();
        rounds.push(round);
        if fail_out.is_zero() {
            return Ok(CorrectionTrace {
                rounds,
                terminal: next,
                reason: Termination::FailZero,
            });
        }
        if fail_out >= fail_in {
            return Ok(CorrectionTrace {
                rounds,
                terminal: next,
                reason: Termination::Stall,
            });
        }
        if rounds.len() >= cap {
            return Ok(CorrectionTrace {
                rounds,
                terminal: next,
                reason: Termination::RoundCap,
            });
        }
        current = next;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricSource {
    Exact,
    Empirical { trials: usize },
}

impl MetricSource {
    pub fn label(&self) -> String {
        match self {
            MetricSource::Exact => "exact".into(),
            MetricSource::Empirical { trials } => format!("empirical({trials} trials)"),
        }
    }
}

/// The measured constants the analysis consumes, with provenance.
#[derive(Debug, Clone)]
pub struct MeasuredConstants {
    pub rho: Rational,
    pub rho_source: MetricSource,
    pub delta: Rational,
    pub delta_source: MetricSource,
    pub lambda: Rational,
    pub lambda_source: MetricSource,
    pub alpha: Rational,
    pub alpha_source: MetricSource,
}

#[derive(Debug, Clone)]
pub struct HypothesisReport {
    /// rho * delta * alpha / 64.
    pub threshold: Rational,
    pub lambda: Rational,
    /// lambda <= threshold.
    pub met: bool,
    /// The implied testability constant rho * delta * alpha / 16.
    pub testability: Rational,
    /// Trivial local codes make the whole audit vacuous.
    pub degenerate_delta: bool,
    pub notes: Vec<String>,
}

/// Pure arithmetic on the measured constants: compares the sampler
/// constant against rho * delta * alpha / 64 and reports the implied
/// testability constant.
pub fn hypothesis_audit(m: &MeasuredConstants) -> HypothesisReport {
    let product = &m.rho * &m.delta * &m.alpha;
    let threshold = &product / rat_int(64);
    let testability = &product / rat_int(16);
    let met = m.lambda <= threshold;
    let degenerate_delta = m.delta.is_zero();
    let mut notes = Vec::new();
    for (name, source) in [
        ("rho", &m.rho_source),
        ("delta", &m.delta_source),
        ("lambda", &m.lambda_source),
        ("alpha", &m.alpha_source),
    ] {
        notes.push(format!("{name}: {}", source.label()));
    }
    if degenerate_delta {
        notes.push("delta is zero: local codes are trivial".into());
    }
    HypothesisReport {
        threshold,
        lambda: m.lambda.clone(),
        met,
        testability,
        degenerate_delta,
        notes,
    }
}

/// Per-round inequality checks against measured constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClaimChecks {
    /// 1 - agreement <= 4 * fail_in / (rho * delta).
    pub agreement_bound: bool,
    /// step distance <= 8 * fail_in / (rho * delta * alpha).
    pub step_bound: bool,
    /// fail_out <= fail_in / 2.
    pub halving: bool,
}

impl ClaimChecks {
    pub fn all(&self) -> bool {
        self.agreement_bound && self.step_bound && self.halving
    }
}

pub fn check_round_claims(round: &CorrectionRound, m: &MeasuredConstants) -> ClaimChecks {
    let rho_delta = &m.rho * &m.delta;
    let rho_delta_alpha = &rho_delta * &m.alpha;
    // compare without division: (1 - a) * rho * delta <= 4 * fail
    let agreement_bound =
        (Rational::one() - &round.agreement) * &rho_delta <= rat_int(4) * &round.fail_in;
    let step_bound =
        round.step_distance.clone() * &rho_delta_alpha <= rat_int(8) * &round.fail_in;
    let halving = round.fail_out.clone() * rat_int(2) <= round.fail_in;
    ClaimChecks {
        agreement_bound,
        step_bound,
        halving,
    }
}

/// total distance <= 16 * fail(w0) / (rho * delta * alpha).
pub fn check_trace_total(trace: &CorrectionTrace, m: &MeasuredConstants) -> bool {
    let Some(first) = trace.rounds.first() else {
        return true;
    };
    let rho_delta_alpha = &m.rho * &m.delta * &m.alpha;
    trace.total_distance() * rho_delta_alpha <= rat_int(16) * &first.fail_in
}
