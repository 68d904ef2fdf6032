//! Fleet size-and-mix optimization for heterogeneous mobile robot fleets.
//!
//! A fleet is a vector `k` counting robots per AMR type. The total cost of a
//! plan is the fixed cost of the robots it uses plus the operational cost of
//! their routes. Finding the best plan nests three searches:
//!
//! * [`tsptw`]: single-robot pickup-and-delivery routing with time windows,
//!   battery state of charge and cargo capacities (branch and bound),
//! * [`rap`]: partitioning the task set among the robots of a fixed fleet
//!   (branch and bound over assignments, one TSPTW per robot and node),
//! * [`fco`]: growing the fleet candidate by candidate until the whole
//!   composition space up to the per-type maxima is either searched or pruned.
//!
//! [`uct`] adds a Monte Carlo tree search over fleet sizes and compositions
//! that produces good solutions quickly, and [`hybrid`] runs it next to the
//! exact search, sharing incumbents through [`pool::IncumbentPool`] so that
//! each side prunes with the other's bounds.
//!
//! [`instance`] defines the problem input, its JSON format and the
//! per-robot subproblem extraction; [`generator`] builds seeded random
//! instances that are feasible by construction.

pub mod fco;
pub mod generator;
pub mod hybrid;
pub mod instance;
pub mod matrix;
pub mod pool;
pub mod rap;
pub mod solution;
pub mod tsptw;
pub mod uct;

pub use fco::{solve_fco, FcoParams, FcoReport};
pub use generator::{generate_instance, GeneratorParams};
pub use hybrid::{run_hybrid, HybridConfig, HybridReport, Mode};
pub use instance::{load_instance, save_instance, ProblemInstance};
pub use pool::IncumbentPool;
pub use rap::{solve_rap, RapParams, RapResult};
pub use solution::{validate_solution, Solution};
pub use uct::{run_uct, UctConfig, UctReport};
