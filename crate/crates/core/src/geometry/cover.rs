//! Greedy packing of a grid by metric balls and the overlap of their dilates.

use super::distance::GridMetric;
use crate::error::{Error, Result};

/// Centres of a maximal `R/2`-packing, so that the `R`-balls cover the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BallCover {
    pub centers: Vec<Vec<f64>>,
    pub center_nodes: Vec<usize>,
    pub radius: f64,
    pub dilation: f64,
    /// `histogram[k]` = number of grid points lying in exactly `k` dilated balls.
    pub overlap_histogram: Vec<usize>,
    pub max_overlap: usize,
}

/// Scan the grid in lexicographic order and open a new centre at every node
/// not yet within `R` of an existing one.
pub fn greedy_cover(metric: &GridMetric, r: f64, h: f64) -> Result<BallCover> {
    if !(r > 0.0) || !(h >= 1.0) {
        return Err(Error::InvalidParameter(format!("cover needs R > 0 and H >= 1, got R={r}, H={h}")));
    }
    let len = metric.domain().len();
    let mut covered = vec![false; len];
    let mut overlap = vec![0usize; len];
    let mut centers = Vec::new();
    let mut center_nodes = Vec::new();
    for i in 0..len {
        if covered[i] {
            continue;
        }
        let view = metric.from_node(i, h * r)?;
        for j in 0..len {
            let d = view.dist(j);
            if d < r {
                covered[j] = true;
            }
            if d < h * r {
                overlap[j] += 1;
            }
        }
        if !covered[i] {
            return Err(Error::InvalidParameter("distance field does not vanish at its source".into()));
        }
        centers.push(view.source.clone());
        center_nodes.push(i);
    }
    if covered.iter().any(|c| !c) {
        return Err(Error::InvalidParameter("cover leaves grid points uncovered".into()));
    }
    let max_overlap = overlap.iter().cloned().max().unwrap_or(0);
    let mut overlap_histogram = vec![0usize; max_overlap + 1];
    for o in &overlap {
        overlap_histogram[*o] += 1;
    }
    Ok(BallCover { centers, center_nodes, radius: r, dilation: h, overlap_histogram, max_overlap })
}
