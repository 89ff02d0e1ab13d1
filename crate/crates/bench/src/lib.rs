//! Benchmark fixtures shared by the criterion benches and their smoke tests.

use spinphonon::dynamics::{Blocks, EvolutionSpec, InitialState};
use spinphonon::experiments::{fig3_params, fig6_params, ModelKind};
use spinphonon::linalg::C64;
use spinphonon::models::{LindbladModel, ModelRecipe};
use spinphonon::qops::StateVector;
use spinphonon::Result;

/// A model, its block decomposition and a starting vector.
pub struct Fixture {
    pub model: LindbladModel,
    pub initial: InitialState,
    pub blocks: Blocks,
    pub y0: Vec<C64>,
}

impl Fixture {
    fn new(model: LindbladModel, levels: &[usize]) -> Result<Self> {
        let initial: InitialState = StateVector::basis(&model.space, levels)?.into();
        let blocks = Blocks::new(&model, &initial, true)?;
        let y0 = blocks.initial(&model.space, &initial)?;
        Ok(Fixture { model, initial, blocks, y0 })
    }

    /// One right-hand-side evaluation; returns the output so it is not optimised away.
    pub fn rhs(&self, scratch: &mut Vec<C64>) -> Vec<C64> {
        let mut dy = vec![C64::new(0.0, 0.0); self.y0.len()];
        self.blocks.rhs(0.0, &self.y0, &mut dy, scratch);
        dy
    }

    pub fn spec(&self, t_end: f64, n_samples: usize) -> EvolutionSpec {
        EvolutionSpec::new(0.0, t_end, n_samples, self.initial.clone())
    }
}

/// JC model of the strongest Fig. 3 curve.
pub fn jc(truncation: usize) -> Result<Fixture> {
    let p = fig3_params(5e4, 4.0);
    let lambda = ModelKind::Jc.coupling(&p)?;
    let model = ModelKind::Jc.build(&ModelRecipe::new(p, vec![truncation]), lambda, 1, 0.0)?;
    Fixture::new(model, &[1, 0])
}

/// Anti-JC model, whose phonon number grows without bound.
pub fn anti_jc(truncation: usize) -> Result<Fixture> {
    let p = fig3_params(5e4, 4.0);
    let lambda = ModelKind::AntiJc.coupling(&p)?;
    let model = ModelKind::AntiJc.build(&ModelRecipe::new(p, vec![truncation]), lambda, 1, 0.0)?;
    Fixture::new(model, &[0, 0])
}

/// Holstein–Primakoff cooling model at the Fig. 6 parameters, started from |k⟩.
pub fn cooling(truncation: usize, k: usize) -> Result<Fixture> {
    let p = fig6_params();
    let lambda = ModelKind::CoolingHp.coupling(&p)?;
    let model = ModelKind::CoolingHp.build(&ModelRecipe::new(p, vec![truncation, truncation]), lambda, 100, 0.0)?;
    Fixture::new(model, &[k, 0])
}
