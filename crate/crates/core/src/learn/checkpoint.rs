use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::MlpModel;
use super::train::TrainConfig;
use crate::defendant::{
    AgeGroup, Childcare, Children, Employment, Gender, Race, Transportation, WorkHour,
    ONE_HOT_WIDTH,
};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "fairsched-mlp/1";

/// One categorical feature's block in the one-hot input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedFeature {
    pub name: String,
    pub offset: usize,
    pub categories: Vec<String>,
}

/// The concatenated one-hot layout the network was trained on.
pub fn one_hot_encoding() -> Vec<EncodedFeature> {
    fn labels<T: Copy>(all: &[T], f: impl Fn(T) -> &'static str) -> Vec<String> {
        all.iter().map(|v| f(*v).to_string()).collect()
    }
    let blocks = [
        ("race", labels(Race::ALL, Race::label)),
        ("age", labels(AgeGroup::ALL, AgeGroup::label)),
        ("gender", labels(Gender::ALL, Gender::label)),
        ("transportation", labels(Transportation::ALL, Transportation::label)),
        ("employment", labels(Employment::ALL, Employment::label)),
        ("work_hour", labels(WorkHour::ALL, WorkHour::label)),
        ("children", labels(Children::ALL, Children::label)),
        ("childcare", labels(Childcare::ALL, Childcare::label)),
    ];
    let mut offset = 0;
    blocks
        .into_iter()
        .map(|(name, categories)| {
            let f = EncodedFeature {
                name: name.to_string(),
                offset,
                categories,
            };
            offset += f.categories.len();
            f
        })
        .collect()
}

/// Serialized model: layer dims, row-major weights, encoding and the
/// configuration that produced it. `metadata` is free-form run context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub layer_dims: Vec<usize>,
    /// `weights[l]` is layer `l`'s `out × in` matrix, row-major.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub encoding: Vec<EncodedFeature>,
    pub config: TrainConfig,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl Checkpoint {
    pub fn new(model: &MlpModel, config: &TrainConfig, metadata: serde_json::Value) -> Self {
        let layers = model.dims().len() - 1;
        let (weights, biases) = (0..layers)
            .map(|l| {
                let (w, b) = model.layer(l);
                (w.to_vec(), b.to_vec())
            })
            .unzip();
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            layer_dims: model.dims().to_vec(),
            weights,
            biases,
            encoding: one_hot_encoding(),
            config: config.clone(),
            metadata,
        }
    }

    pub fn model(&self) -> Result<MlpModel> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::invalid(format!("unsupported checkpoint format {:?}", self.format)));
        }
        if self.encoding != one_hot_encoding() || self.layer_dims.first() != Some(&ONE_HOT_WIDTH) {
            return Err(Error::invalid("checkpoint feature encoding differs from this build"));
        }
        if self.weights.len() + 1 != self.layer_dims.len() || self.biases.len() != self.weights.len() {
            return Err(Error::invalid("checkpoint layer count mismatch"));
        }
        let params = self
            .weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect();
        MlpModel::from_parts(self.layer_dims.clone(), params)
    }

    pub fn pool_size(&self) -> usize {
        *self.layer_dims.last().expect("validated dims")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })
    }
}
