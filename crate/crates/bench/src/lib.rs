//! Fixtures shared by the benchmarks.

use sitnikov::{Bc, Grid, PeriodicSymbols, Trajectory};

/// The eight-periodic word used throughout the benchmarks.
pub const WORD: &str = "+++---++";

pub fn symbols() -> PeriodicSymbols {
    WORD.parse().expect("valid word")
}

/// Smooth admissible periodic trajectory on `[0, 8]` at `m` nodes per unit.
pub fn smooth_periodic(m: usize) -> Trajectory {
    let b = symbols();
    let grid = Grid::new(m, 0, b.period() as i64).expect("grid");
    sitnikov::periodic::seed_periodic(&b, grid, 1.0).expect("seed")
}

/// Same values as [`smooth_periodic`] without the periodic identification.
pub fn smooth_free(m: usize) -> Trajectory {
    let p = smooth_periodic(m);
    Trajectory::new(p.grid, p.values, Bc::Free).expect("trajectory")
}
