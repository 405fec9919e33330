//! Synthetic defendant pools sampled from a causal graph of demographic,
//! socioeconomic and scheduling-preference variables.

mod cpt;
mod fidelity;
mod generate;
mod io;

pub use cpt::{Cpt, CptSet, COURT_SLOTS, TABLE_SHAPES};
pub use fidelity::{cpt_fidelity, ChiSquareResult, FIDELITY_ALPHA};
pub use generate::{
    choice_slots, generate_dataset, generate_pool, grid_for, preference_row, Dataset, DatasetMeta,
    GenConfig, PartitionAttribute, Pool, DATASET_VERSION, DEFAULT_CHOICE_WEIGHTS,
};
pub use io::{read_dataset, write_dataset, write_dataset_to};
