//! Charted manifolds carrying a pair of forms `(ω, η)`: closedness, structure
//! classification, Reeb fields and the bracket on basic functions.

mod bracket;
mod chart;
mod structure;

pub use bracket::{
    bracket_function, hamiltonian_vector, min_norm_solve, poisson_bracket, BracketOptions,
    BracketValue,
};
pub use chart::{Axis, ChartedManifold, Disk, Grid, GridPoint, MIN_GRID_COUNT};
pub use structure::{
    basicness_check, classify_structure, reeb_field, reeb_residuals, verify_closed,
    ClosednessResiduals, FormPair, StructureClassification, Verdict, DEFAULT_BASIC_TOL,
    DEFAULT_TOL_CLOSED, REASON_LEMMA, REASON_NOT_STRICT, REASON_OMEGA_RANK_VARIES,
    REASON_RANK_VARIES,
};
