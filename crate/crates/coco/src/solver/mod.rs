//! Built-in exact optimization: LP relaxations, branch-and-bound with
//! solution pooling, and trust-region predict-and-search.

mod bnb;
mod search;
mod simplex;

pub use bnb::{
    branch_and_bound, Branching, BnbConfig, BnbResult, BnbStatus, NodeOrder, SolutionPool,
    TraceEvent,
};
pub use search::{
    build_trust_region, predict_and_search, search_with_marginals, select_fix_sets, SearchConfig,
};
pub use simplex::{solve_lp, solve_lp_with_bounds, LpResult, LpStatus};
