use crate::error::Result;
use crate::model::{ForwardModel, ModelParams, ModelWorkspace};

/// Log-likelihood the sampler tempers.
pub trait Target: Sync {
    type Workspace: Send;

    fn workspace(&self) -> Result<Self::Workspace>;

    fn log_likelihood(&self, ws: &mut Self::Workspace, params: &ModelParams) -> Result<f64>;
}

impl Target for ForwardModel<'_> {
    type Workspace = ModelWorkspace;

    fn workspace(&self) -> Result<ModelWorkspace> {
        ForwardModel::workspace(self)
    }

    fn log_likelihood(&self, ws: &mut ModelWorkspace, params: &ModelParams) -> Result<f64> {
        ForwardModel::log_likelihood(self, ws, params)
    }
}
