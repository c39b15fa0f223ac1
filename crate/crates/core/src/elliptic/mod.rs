pub mod green;
pub mod operator;
pub mod regularity;
pub mod stream;

pub use green::{
    assemble_green_solution, green_check, green_disk, green_domain, solve_green_remainder, GreenCheck, GreenRemainder,
};
pub use operator::{EllipticOperator, SolveStats};
pub use stream::{
    div_b_residual, solve_stream, velocity_from_stream, StreamSolution, StreamSolver,
    DEFAULT_SOLVE_TOL,
};
pub use regularity::{regularity_report, RegularityOptions, RegularityReport};
