//! Rayon-backed variants of the core samplers. Results are identical to the
//! sequential ones; only the evaluation order changes.

use rayon::prelude::*;
use soliton_core::field::{evaluate_partials, sample_field, with_potential, FieldSample, Grid, Partial};
use soliton_core::params::SolitonParams;
use soliton_core::Result;

/// [`sample_field`], spreading the grid nodes over the thread pool when `parallel`.
pub fn sample(
    params: &SolitonParams,
    n: usize,
    grid: &Grid,
    partials: &[Partial],
    parallel: bool,
) -> Result<FieldSample> {
    if !parallel {
        return sample_field(params, n, grid, partials);
    }
    let partials = with_potential(partials);
    let points: Vec<(f64, f64)> = grid.points().collect();
    let nodes = points
        .par_iter()
        .map(|&(t, x)| evaluate_partials(params, n, t, x, &partials))
        .collect::<Result<Vec<_>>>()?;
    FieldSample::from_nodes(params, n, grid.clone(), partials, nodes)
}

/// Maps `f` over `items`, in parallel when asked, keeping the input order.
pub fn map_ordered<T: Sync, U: Send>(items: &[T], parallel: bool, f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}
