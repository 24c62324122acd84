//! Dense operators on small composite Hilbert spaces and the two
//! supersystems: a two-level system with one oscillator reaction coordinate,
//! and the triple quantum dot.

mod operator;
mod space;
mod supersystem;

pub use operator::{
    eigh, gibbs, min_eigenvalue, partial_trace, trace_distance, CMatrix, Eigen, GibbsState, OperatorMatrix,
};
pub use space::{HilbertSpace, DEFAULT_DIM_CAP};
pub use supersystem::{
    adaptive_n_max, build_supersystem, check_truncation, mean_force_state, Supersystem, SupersystemSpec,
    SystemOperator, TlsRc, TripleDot,
};
