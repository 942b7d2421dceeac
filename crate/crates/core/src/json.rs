//! Interchange formats.
//!
//! One JSON document carries a system: modulus, ground set, layers,
//! the sparse chain tables, and optionally base codes and agreement
//! edges. Rationals travel as `"num/den"` strings so nothing is lost
//! to floating point. Trace documents record correction rounds with
//! `{num, den}` metric objects and words in canonical coordinate
//! order.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agreement::{AgreementEdge, AgreementGraph};
use crate::code::LinearCode;
use crate::correct::CorrectionTrace;
use crate::error::{LtcError, Result};
use crate::field::{CoordId, CoordSet, Field, Word};
use crate::rational::{format_ratio, parse_ratio, Rational};
use crate::system::{KernelRow, Layer, LayeredSystem};

pub const SYSTEM_SCHEMA: &str = "system/v1";
pub const TRACE_SCHEMA: &str = "trace/v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemDoc {
    pub schema: String,
    pub p: u16,
    pub v: Vec<CoordId>,
    pub layers: LayersDoc,
    pub chain: ChainDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<BTreeMap<String, BaseCodeDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement: Option<AgreementDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayersDoc {
    pub t: Vec<Vec<CoordId>>,
    pub k: Vec<Vec<CoordId>>,
    pub s: Vec<Vec<CoordId>>,
}

/// Sparse rational tables. Marginal entries are `[index, "num/den"]`;
/// kernel entries are `[source, target, "num/den"]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainDoc {
    pub v_marginal: Vec<(usize, String)>,
    pub t_given_v: Vec<(usize, usize, String)>,
    pub k_given_t: Vec<(usize, usize, String)>,
    pub s_given_k: Vec<(usize, usize, String)>,
}

/// Parity checks as value rows aligned with the T-set's sorted coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseCodeDoc {
    pub checks: Vec<Vec<u16>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgreementDoc {
    /// Entries are `[s1, s2, k, "num/den"]`.
    pub edges: Vec<(usize, usize, usize, String)>,
}

fn kernel_to_doc(rows: &[KernelRow]) -> Vec<(usize, usize, String)> {
    rows.iter()
        .enumerate()
        .flat_map(|(src, row)| {
            row.iter()
                .map(move |(dst, p)| (src, *dst, format_ratio(p)))
        })
        .collect()
}

fn kernel_from_doc(
    entries: &[(usize, usize, String)],
    sources: usize,
    targets: usize,
    what: &str,
) -> Result<Vec<KernelRow>> {
    let mut rows: Vec<KernelRow> = vec![Vec::new(); sources];
    for (src, dst, p) in entries {
        if *src >= sources || *dst >= targets {
            return Err(LtcError::Format(format!(
                "{what}: entry ({src}, {dst}) out of range"
            )));
        }
        rows[*src].push((*dst, parse_ratio(p)?));
    }
    Ok(rows)
}

pub fn system_to_doc(
    system: &LayeredSystem,
    p: u16,
    base: Option<&[Arc<LinearCode>]>,
    graph: Option<&AgreementGraph>,
) -> SystemDoc {
    let sets = |layer: Layer| -> Vec<Vec<CoordId>> {
        system
            .layer_sets(layer)
            .iter()
            .map(|s| s.ids().to_vec())
            .collect()
    };
    SystemDoc {
        schema: SYSTEM_SCHEMA.to_string(),
        p,
        v: system.ground().ids().to_vec(),
        layers: LayersDoc {
            t: sets(Layer::T),
            k: sets(Layer::K),
            s: sets(Layer::S),
        },
        chain: ChainDoc {
            v_marginal: system
                .v_marginal()
                .iter()
                .enumerate()
                .map(|(i, p)| (i, format_ratio(p)))
                .collect(),
            t_given_v: kernel_to_doc(system.t_given_v()),
            k_given_t: kernel_to_doc(system.k_given_t()),
            s_given_k: kernel_to_doc(system.s_given_k()),
        },
        base: base.map(|codes| {
            codes
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    (
                        i.to_string(),
                        BaseCodeDoc {
                            checks: c.check_rows().to_vec(),
                        },
                    )
                })
                .collect()
        }),
        agreement: graph.map(|g| AgreementDoc {
            edges: g
                .edges()
                .iter()
                .map(|e| (e.s1, e.s2, e.label, format_ratio(&e.weight)))
                .collect(),
        }),
    }
}

pub fn doc_to_system(doc: &SystemDoc) -> Result<(Field, Arc<LayeredSystem>)> {
    if doc.schema != SYSTEM_SCHEMA {
        return Err(LtcError::Format(format!(
            "unknown system schema {:?}",
            doc.schema
        )));
    }
    let field = Field::new(doc.p)?;
    // positions in the tables refer to the listed order, so the ground
    // set must already be sorted and duplicate-free
    if doc.v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LtcError::Format(
            "ground set must be strictly increasing".into(),
        ));
    }
    let ground = Arc::new(CoordSet::new(doc.v.clone()));
    let to_sets = |raw: &[Vec<CoordId>]| -> Vec<Arc<CoordSet>> {
        raw.iter()
            .map(|ids| Arc::new(CoordSet::new(ids.clone())))
            .collect()
    };
    let t_sets = to_sets(&doc.layers.t);
    let k_sets = to_sets(&doc.layers.k);
    let s_sets = to_sets(&doc.layers.s);

    let mut v_marginal = vec![Rational::from_integer(0.into()); ground.len()];
    for (idx, p) in &doc.chain.v_marginal {
        if *idx >= ground.len() {
            return Err(LtcError::Format(format!(
                "v_marginal index {idx} out of range"
            )));
        }
        v_marginal[*idx] = parse_ratio(p)?;
    }
    let t_given_v = kernel_from_doc(&doc.chain.t_given_v, ground.len(), t_sets.len(), "t_given_v")?;
    let k_given_t = kernel_from_doc(&doc.chain.k_given_t, t_sets.len(), k_sets.len(), "k_given_t")?;
    let s_given_k = kernel_from_doc(&doc.chain.s_given_k, k_sets.len(), s_sets.len(), "s_given_k")?;

    let system = LayeredSystem::new(
        ground, t_sets, k_sets, s_sets, v_marginal, t_given_v, k_given_t, s_given_k,
    )?;
    Ok((field, Arc::new(system)))
}

/// Base codes from the document, aligned with the system's T layer.
pub fn doc_base_codes(
    doc: &SystemDoc,
    system: &LayeredSystem,
    field: Field,
) -> Result<Option<Vec<LinearCode>>> {
    let Some(base) = &doc.base else {
        return Ok(None);
    };
    let t_sets = system.layer_sets(Layer::T);
    let mut codes = Vec::with_capacity(t_sets.len());
    for (t_idx, t) in t_sets.iter().enumerate() {
        let entry = base.get(&t_idx.to_string()).ok_or_else(|| {
            LtcError::Format(format!("base code for T-set {t_idx} is missing"))
        })?;
        codes.push(LinearCode::from_check_rows(
            field,
            Arc::clone(t),
            entry.checks.clone(),
        )?);
    }
    Ok(Some(codes))
}

/// The agreement graph from the document edges when present, or the
/// canonical chain-derived graph otherwise.
pub fn doc_agreement_graph(doc: &SystemDoc, system: &LayeredSystem) -> Result<AgreementGraph> {
    match &doc.agreement {
        None => Ok(AgreementGraph::from_chain(system)),
        Some(spec) => {
            let edges = spec
                .edges
                .iter()
                .map(|(s1, s2, k, w)| {
                    Ok(AgreementEdge {
                        s1: *s1,
                        s2: *s2,
                        label: *k,
                        weight: parse_ratio(w)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            AgreementGraph::from_edges(
                system.layer_sets(Layer::S).to_vec(),
                system.layer_sets(Layer::K).to_vec(),
                edges,
            )
        }
    }
}

pub fn read_system_doc(text: &str) -> Result<SystemDoc> {
    serde_json::from_str(text).map_err(|e| LtcError::Format(format!("system document: {e}")))
}

pub fn write_system_doc(doc: &SystemDoc) -> String {
    serde_json::to_string_pretty(doc).expect("document serialization cannot fail")
}

/// Ensemble wire form: S-set index (as a string key) to values in
/// canonical coordinate order.
pub fn ensemble_to_doc(words: &[Word]) -> BTreeMap<String, Vec<u16>> {
    words
        .iter()
        .enumerate()
        .map(|(i, w)| (i.to_string(), w.values().to_vec()))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RatPair {
    pub num: String,
    pub den: String,
}

impl RatPair {
    pub fn of(r: &Rational) -> RatPair {
        RatPair {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
        }
    }

    pub fn to_rational(&self) -> Result<Rational> {
        parse_ratio(&format!("{}/{}", self.num, self.den))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRoundDoc {
    pub input: Vec<u16>,
    pub output: Vec<u16>,
    pub agreement: RatPair,
    pub fail_in: RatPair,
    pub fail_out: RatPair,
    pub step_distance: RatPair,
    pub ensemble_label_distance: RatPair,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceDoc {
    pub schema: String,
    pub rounds: Vec<TraceRoundDoc>,
    pub terminal: Vec<u16>,
    pub reason: String,
    pub total_distance: RatPair,
}

pub fn trace_to_doc(trace: &CorrectionTrace) -> TraceDoc {
    TraceDoc {
        schema: TRACE_SCHEMA.to_string(),
        rounds: trace
            .rounds
            .iter()
            .map(|r| TraceRoundDoc {
                input: r.input.values().to_vec(),
                output: r.output.values().to_vec(),
                agreement: RatPair::of(&r.agreement),
                fail_in: RatPair::of(&r.fail_in),
                fail_out: RatPair::of(&r.fail_out),
                step_distance: RatPair::of(&r.step_distance),
                ensemble_label_distance: RatPair::of(&r.ensemble_label_distance),
            })
            .collect(),
        terminal: trace.terminal.values().to_vec(),
        reason: trace.reason.name().to_string(),
        total_distance: RatPair::of(&trace.total_distance()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::rat;
    use crate::system::Layer;
    use crate::tanner::{LiftTarget, LiftedCodeFamily};

    #[test]
    fn system_documents_round_trip() {
        let fx = fixtures::grid_parity();
        let doc = system_to_doc(
            fx.system(),
            fx.field.modulus(),
            Some(fx.family.base_codes()),
            Some(&fx.graph),
        );
        let text = write_system_doc(&doc);
        let parsed = read_system_doc(&text).unwrap();
        let (field, system) = doc_to_system(&parsed).unwrap();
        assert_eq!(field, fx.field);
        assert!(system.validate().is_valid());
        assert_eq!(system.ground(), fx.system().ground());
        assert_eq!(
            system.marginal(Layer::T),
            fx.system().marginal(Layer::T)
        );

        let base = doc_base_codes(&parsed, &system, field).unwrap().unwrap();
        let family = LiftedCodeFamily::new(system.clone(), field, base).unwrap();
        assert_eq!(
            family.lift(LiftTarget::Global).dimension(),
            fx.family.lift(LiftTarget::Global).dimension()
        );

        let graph = doc_agreement_graph(&parsed, &system).unwrap();
        assert!(graph.chain_consistency(&system).is_valid());
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert!(read_system_doc("{").is_err());
        let fx = fixtures::grid_parity();
        let mut doc = system_to_doc(fx.system(), 2, None, None);
        doc.schema = "something/v9".into();
        assert!(doc_to_system(&doc).is_err());

        let mut doc = system_to_doc(fx.system(), 2, None, None);
        doc.chain.t_given_v.push((100, 0, "1/2".into()));
        assert!(doc_to_system(&doc).is_err());
    }

    #[test]
    fn rat_pairs_round_trip() {
        let r = rat(-22, 7);
        assert_eq!(RatPair::of(&r).to_rational().unwrap(), r);
    }

    #[test]
    fn ensemble_wire_form_keys_by_set_index() {
        let fx = fixtures::grid_parity();
        let w = crate::field::Word::zero(fx.field, std::sync::Arc::clone(fx.system().ground()));
        let e = crate::agreement::LocalEnsemble::from_global(fx.graph.s_sets(), &w).unwrap();
        let doc = ensemble_to_doc(e.words());
        assert_eq!(doc.len(), 1);
        assert_eq!(doc["0"], vec![0u16; 9]);
        let text = serde_json::to_string(&doc).unwrap();
        assert_eq!(text, r#"{"0":[0,0,0,0,0,0,0,0,0]}"#);
    }

    #[test]
    fn missing_base_entries_are_detected() {
        let fx = fixtures::grid_parity();
        let mut doc = system_to_doc(fx.system(), 2, Some(fx.family.base_codes()), None);
        doc.base.as_mut().unwrap().remove("3");
        let (field, system) = doc_to_system(&doc).unwrap();
        assert!(doc_base_codes(&doc, &system, field).is_err());
    }
}
