//! Default budgets used by the command line and the acceptance suite.
//!
//! | parameter            | default |
//! |----------------------|---------|
//! | persistence margin   | 1       |
//! | separation scales    | 1..=10  |
//! | separation depth     | 200     |
//! | excisive depths      | 50, 100, 150, 200 |
//! | cohomology depth     | 60      |
//! | ends inner radii     | 1..=6   |
//! | ends outer radius    | 10      |
//! | corona budget        | 10      |
//! | algebra ground bound | 3       |
//! | algebra generators   | 2       |
//! | random seed          | 7       |

pub const DEFAULT_MARGIN: i64 = 1;
pub const DEFAULT_SCALES: std::ops::RangeInclusive<i64> = 1..=10;
pub const DEFAULT_DEPTH: usize = 200;
pub const DEFAULT_EXCISIVE_DEPTHS: [usize; 4] = [50, 100, 150, 200];
pub const DEFAULT_COHOMOLOGY_DEPTH: usize = 60;
pub const DEFAULT_ENDS_INNER: std::ops::RangeInclusive<usize> = 1..=6;
pub const DEFAULT_ENDS_OUTER: usize = 10;
pub const DEFAULT_CORONA_BUDGET: usize = 10;
pub const DEFAULT_MAX_GROUND: usize = 3;
pub const DEFAULT_MAX_GENERATORS: usize = 2;
pub const DEFAULT_SEED: u64 = 7;

/// Scales at which the corona cross-check runs the separation search on a
/// Cayley ball. Small, because neighbourhoods in a Cayley ball are computed
/// by breadth-first search.
pub const CORONA_CROSSCHECK_SCALES: [i64; 3] = [1, 2, 3];
