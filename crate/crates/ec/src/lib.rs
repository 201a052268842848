//! Evolutionary operators. Objective vectors handed to these functions are
//! in minimization form (see `ObjectiveVector::as_minimization`).

mod dominance;
mod error;
mod nsga2;
mod pbt;
mod variation;

pub use dominance::{crowding_distance, dominates, dominates_min, fast_nondominated_sort, FrontPartition};
pub use error::EcError;
pub use nsga2::{binary_tournament_mating, nsga2_survival, rank_population, Population, Ranked};
pub use pbt::{apply_exploit, pbt_exploit, pbt_explore, PbtConfig, PbtMember};
pub use variation::{
    es_variation, poly_delta, polynomial_mutation, polynomial_mutation_coding, sbx_crossover, sbx_crossover_coding,
    GaConfig,
};
