//! Metric temporal logic over discrete-time trajectories.

mod formula;
mod parse;
mod semantics;
mod smooth;

pub use formula::{Formula, Predicate, Relation, Window};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use semantics::{
    eval_boolean, interval_robustness, robustness, robustness_signal, RobustnessInterval,
};
pub use smooth::{
    max_arity, smooth_error_bound, smooth_robustness, softmax, softmin, SmoothRobustness,
};
