//! Dense feedforward approximators with analytic gradients, an Adam optimizer
//! and running input normalization.

mod adam;
mod dense;
mod normalizer;

pub use adam::AdamState;
pub use dense::{BatchTrace, DenseNet, Head};
pub use normalizer::{Normalizer, NORMALIZED_CLIP, OBSERVATION_CLIP};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Portable, layer-major snapshot of one network plus the normalizers that
/// feed it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetCheckpoint {
    pub layer_dims: Vec<usize>,
    pub head: Head,
    pub params: Vec<f64>,
    #[serde(default)]
    pub normalizers: BTreeMap<String, Normalizer>,
}

impl NetCheckpoint {
    pub fn from_net(net: &DenseNet, normalizers: BTreeMap<String, Normalizer>) -> Self {
        Self {
            layer_dims: net.layer_dims().to_vec(),
            head: net.head(),
            params: net.params().to_vec(),
            normalizers,
        }
    }

    pub fn to_net(&self) -> crate::Result<DenseNet> {
        DenseNet::from_params(self.layer_dims.clone(), self.head, self.params.clone())
    }
}
