//! Resolves the configured system source into a ready instance.

use std::sync::Arc;

use ltc_core::agreement::AgreementGraph;
use ltc_core::grassmann::{grassmann_mas, line_system, reed_solomon_base, GrassmannParams};
use ltc_core::json::{doc_agreement_graph, doc_base_codes, doc_to_system, read_system_doc};
use ltc_core::rational::{rat_int, Rational};
use ltc_core::system::LayeredSystem;
use ltc_core::tanner::LiftedCodeFamily;
use ltc_core::{Field, LinearCode};

use crate::config::{BaseSource, ResolvedConfig, SystemSource};
use crate::HarnessError;

pub struct Instance {
    pub field: Field,
    pub system: Arc<LayeredSystem>,
    pub graph: AgreementGraph,
    pub family: Option<LiftedCodeFamily>,
    /// p^-(q1-q0): the folklore sampler target for flat hierarchies.
    pub fact_target: Option<Rational>,
    /// Whether q2 >= 3*q1 + 2 holds; reported, never enforced.
    pub regime_ok: Option<bool>,
    pub label: String,
    pub notes: Vec<String>,
}

fn rs_degree(cfg: &ResolvedConfig) -> Result<usize, HarnessError> {
    match &cfg.doc.base {
        None => Ok(1),
        Some(BaseSource::RsDegree(r)) => Ok(*r),
        Some(BaseSource::FromFile(_)) => Err(HarnessError::Config(
            "base.from_file: needs a file system source".into(),
        )),
    }
}

pub fn resolve_instance(cfg: &ResolvedConfig) -> Result<Instance, HarnessError> {
    let source = cfg.doc.system.as_ref().expect("validated in resolve()");
    match source {
        SystemSource::Grassmann { p, n, q0, q1, q2 } => {
            let inst = grassmann_mas(GrassmannParams {
                p: *p,
                n: *n,
                q0: *q0,
                q1: *q1,
                q2: *q2,
            })?;
            let field = Field::new(*p)?;
            let r = rs_degree(cfg)?;
            let bases = inst
                .t_flats
                .iter()
                .map(|line| reed_solomon_base(*p, r, line))
                .collect::<ltc_core::Result<Vec<LinearCode>>>()?;
            let family = LiftedCodeFamily::new(Arc::clone(&inst.system), field, bases)?;
            let mut target = rat_int(1);
            for _ in *q0..*q1 {
                target = target / rat_int(*p as i64);
            }
            let mut notes = Vec::new();
            if !inst.regime_ok {
                notes.push(format!(
                    "dimension regime q2 >= 3*q1 + 2 does not hold (q1={q1}, q2={q2}); \
                     constants are measured, not guaranteed"
                ));
            }
            Ok(Instance {
                field,
                system: inst.system,
                graph: inst.graph,
                family: Some(family),
                fact_target: Some(target),
                regime_ok: Some(inst.regime_ok),
                label: format!("grassmann(p={p}, n={n}, q0={q0}, q1={q1}, q2={q2}), degree-{r} base"),
                notes,
            })
        }
        SystemSource::Lines { p, n } => {
            let (system, lines) = line_system(*p, *n)?;
            let field = Field::new(*p)?;
            let r = rs_degree(cfg)?;
            let bases = lines
                .iter()
                .map(|line| reed_solomon_base(*p, r, line))
                .collect::<ltc_core::Result<Vec<LinearCode>>>()?;
            let graph = AgreementGraph::from_chain(&system);
            let family = LiftedCodeFamily::new(Arc::clone(&system), field, bases)?;
            Ok(Instance {
                field,
                system,
                graph,
                family: Some(family),
                fact_target: None,
                regime_ok: None,
                label: format!("lines(p={p}, n={n}), degree-{r} base"),
                notes: vec!["upper layers collapsed to the whole space".into()],
            })
        }
        SystemSource::File(path) => {
            if matches!(cfg.doc.base, Some(BaseSource::RsDegree(_))) {
                return Err(HarnessError::Config(
                    "base.rs_degree: needs a generator system source".into(),
                ));
            }
            let text = std::fs::read_to_string(path).map_err(|e| {
                HarnessError::Config(format!("system.file {path}: {e}"))
            })?;
            let doc = read_system_doc(&text)?;
            let (field, system) = doc_to_system(&doc)?;
            let graph = doc_agreement_graph(&doc, &system)?;
            let family = doc_base_codes(&doc, &system, field)?
                .map(|bases| LiftedCodeFamily::new(Arc::clone(&system), field, bases))
                .transpose()?;
            Ok(Instance {
                field,
                system,
                graph,
                family,
                fact_target: None,
                regime_ok: None,
                label: format!("file({path})"),
                notes: Vec::new(),
            })
        }
    }
}

impl Instance {
    pub fn family(&self) -> Result<&LiftedCodeFamily, HarnessError> {
        self.family.as_ref().ok_or_else(|| {
            HarnessError::Config(
                "base: this experiment needs base codes (rs_degree or a file with base codes)"
                    .into(),
            )
        })
    }
}
