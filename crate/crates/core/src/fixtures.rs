//! Small hand-built systems used by tests and the CLI.

use std::sync::Arc;

use crate::agreement::AgreementGraph;
use crate::code::LinearCode;
use crate::error::Result;
use crate::field::{CoordId, CoordSet, Field};
use crate::grassmann::{line_system, reed_solomon_base};
use crate::system::LayeredSystem;
use crate::tanner::LiftedCodeFamily;

/// A complete instance: system, its agreement graph, and base codes.
pub struct MasFixture {
    pub field: Field,
    pub graph: AgreementGraph,
    pub family: LiftedCodeFamily,
}

impl MasFixture {
    pub fn system(&self) -> &Arc<LayeredSystem> {
        self.family.system()
    }
}

fn assemble(
    field: Field,
    system: Arc<LayeredSystem>,
    base: Vec<LinearCode>,
) -> Result<MasFixture> {
    let graph = AgreementGraph::from_chain(&system);
    let family = LiftedCodeFamily::new(system, field, base)?;
    Ok(MasFixture { field, graph, family })
}

/// Degree-`r` line codes on F_p^n with the two upper layers collapsed
/// to the whole space. The smallest setting where lifting, testing and
/// one-shot correction are all meaningful.
pub fn line_lift(p: u16, n: usize, r: usize) -> Result<MasFixture> {
    let field = Field::new(p)?;
    let (system, lines) = line_system(p, n)?;
    let base = lines
        .iter()
        .map(|line| reed_solomon_base(p, r, line))
        .collect::<Result<Vec<_>>>()?;
    assemble(field, system, base)
}

/// The 3x3 parity grid over F_2: T-sets are the three rows and three
/// columns, each carrying a single parity check, and both upper layers
/// are the whole grid. Every T-set is contained in the single K-set,
/// so the containment graph is complete with product weights and its
/// sampler constant is exactly zero. Codewords are the sixteen 0/1
/// matrices with even row and column sums.
pub fn grid_parity() -> MasFixture {
    let field = Field::new(2).expect("2 is prime");
    let cell = |row: u32, col: u32| -> CoordId { 3 * row + col };
    let ground = Arc::new(CoordSet::range(9));
    let mut t_sets = Vec::new();
    for r in 0..3 {
        t_sets.push(Arc::new(CoordSet::new((0..3).map(|c| cell(r, c)).collect())));
    }
    for c in 0..3 {
        t_sets.push(Arc::new(CoordSet::new((0..3).map(|r| cell(r, c)).collect())));
    }
    let system = Arc::new(
        LayeredSystem::uniform(
            Arc::clone(&ground),
            t_sets.clone(),
            vec![Arc::clone(&ground)],
            vec![ground],
        )
        .expect("grid layers are well formed"),
    );
    let base = t_sets
        .iter()
        .map(|t| {
            LinearCode::from_check_rows(field, Arc::clone(t), vec![vec![1, 1, 1]])
                .expect("parity check is valid")
        })
        .collect();
    assemble(field, system, base).expect("grid fixture is well formed")
}

/// Repetition codes around an odd cycle: T, K and S all equal the set
/// of adjacent pairs. The lifted code is the two constants; plurality
/// decoding can fail to make progress here, which exercises stall
/// detection.
pub fn cycle_repetition(len: usize) -> MasFixture {
    assert!(len >= 3);
    let field = Field::new(2).expect("2 is prime");
    let ids: Vec<CoordId> = (0..len as u32).collect();
    let ground = Arc::new(CoordSet::new(ids));
    let pairs: Vec<Arc<CoordSet>> = (0..len as u32)
        .map(|i| Arc::new(CoordSet::new(vec![i, (i + 1) % len as u32])))
        .collect();
    let system = Arc::new(
        LayeredSystem::uniform(
            Arc::clone(&ground),
            pairs.clone(),
            pairs.clone(),
            pairs.clone(),
        )
        .expect("cycle layers are well formed"),
    );
    let base = pairs
        .iter()
        .map(|t| {
            LinearCode::from_check_rows(field, Arc::clone(t), vec![vec![1, 1]])
                .expect("repetition check is valid")
        })
        .collect();
    assemble(field, system, base).expect("cycle fixture is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};
    use crate::system::Layer;
    use crate::tanner::LiftTarget;

    #[test]
    fn grid_fixture_shape() {
        let fx = grid_parity();
        let sys = fx.system();
        assert!(sys.validate().is_valid());
        assert_eq!(sys.ground().len(), 9);
        assert_eq!(sys.layer_len(Layer::T), 6);
        assert_eq!(sys.layer_len(Layer::K), 1);
        assert_eq!(sys.layer_len(Layer::S), 1);
        assert!(fx.graph.chain_consistency(sys).is_valid());

        let code = fx.family.lift(LiftTarget::Global);
        assert_eq!(code.dimension(), 4);
        assert_eq!(code.minimum_distance(64).unwrap(), rat(4, 9));

        // complete containment with product weights: sampler constant 0
        let g = sys.containment_graph(Layer::T, Layer::K).unwrap();
        let audit = g.sampler_lambda_exact(20).unwrap();
        assert_eq!(audit.lambda, rat_int(0));
    }

    #[test]
    fn line_fixture_shape() {
        let fx = line_lift(3, 2, 1).unwrap();
        let sys = fx.system();
        assert!(sys.validate().is_valid());
        assert_eq!(sys.layer_len(Layer::T), 12);
        let code = fx.family.lift(LiftTarget::Global);
        assert_eq!(code.dimension(), 3);
    }

    #[test]
    fn cycle_fixture_shape() {
        let fx = cycle_repetition(5);
        let sys = fx.system();
        assert!(sys.validate().is_valid());
        let code = fx.family.lift(LiftTarget::Global);
        // constants only
        assert_eq!(code.dimension(), 1);
    }
}
