use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BoxDomain, GridMetric};

/// Construction parameters of a [`BallFamily`].
#[derive(Clone, Debug, PartialEq)]
pub struct BallFamilyConfig {
    /// Every `stride`-th node along each axis is a centre.
    pub stride: usize,
    /// Smallest radius; the others are `r0 * ratio^k`.
    pub r0: f64,
    pub ratio: f64,
    pub levels: usize,
    /// Extra radii inserted geometrically between consecutive levels (0 for none).
    pub subdivisions: usize,
}

impl BallFamilyConfig {
    pub fn dyadic(stride: usize, r0: f64, levels: usize) -> BallFamilyConfig {
        BallFamilyConfig { stride, r0, ratio: 2.0, levels, subdivisions: 0 }
    }

    /// The main radii `r0 * ratio^k` are computed exactly as without
    /// subdivisions, so refining a configuration keeps every original ball.
    pub fn radii(&self) -> Vec<f64> {
        let sub = self.subdivisions + 1;
        let mut out = Vec::new();
        for k in 0..self.levels {
            let r = self.r0 * self.ratio.powi(k as i32);
            out.push(r);
            if k + 1 < self.levels {
                for s in 1..sub {
                    out.push(r * self.ratio.powf(s as f64 / sub as f64));
                }
            }
        }
        out
    }

    /// Centres twice as dense per axis and one extra radius between consecutive levels.
    pub fn enlarged(&self) -> BallFamilyConfig {
        BallFamilyConfig { stride: (self.stride / 2).max(1), subdivisions: 2 * self.subdivisions + 1, ..self.clone() }
    }

    fn validate(&self) -> Result<()> {
        if self.stride == 0 || self.levels == 0 || !(self.r0 > 0.0) || !(self.ratio > 1.0) {
            return Err(Error::InvalidParameter(format!("ball family {self:?}")));
        }
        Ok(())
    }
}

/// One ball of the family with its member nodes.
#[derive(Clone, Debug)]
pub struct FamilyBall {
    pub center: usize,
    pub level: usize,
    pub members: Vec<u32>,
}

/// Finite family of control balls on a grid. Suprema over "all balls
/// containing x" are taken over this family only, so every maximal function
/// built on it is a lower bound of the true one. Balls touching the boundary
/// of the box are dropped and counted in `clipped`.
#[derive(Clone, Debug)]
pub struct BallFamily {
    domain: BoxDomain,
    radii: Vec<f64>,
    balls: Vec<FamilyBall>,
    pub clipped: usize,
}

/// Nodes within `rmax` of `center`, sorted by distance, and the position of
/// the first boundary node in that order.
fn sorted_ball(metric: &GridMetric, center: usize, rmax: f64) -> Result<(Vec<(f64, u32)>, usize)> {
    let view = metric.from_node(center, rmax * 1.05)?;
    let dom = metric.domain();
    let mut near: Vec<(f64, u32)> = (0..dom.len()).filter_map(|i| {
        let d = view.dist(i);
        (d < rmax).then_some((d, i as u32))
    }).collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let first_boundary = near.iter().position(|(_, i)| dom.on_boundary(*i as usize)).unwrap_or(near.len());
    Ok((near, first_boundary))
}

fn balls_at(near: &[(f64, u32)], first_boundary: usize, center: usize, radii: &[f64], levels: &[usize]) -> (Vec<FamilyBall>, usize) {
    let mut out = Vec::new();
    let mut clipped = 0;
    for &level in levels {
        let n = near.partition_point(|(d, _)| *d < radii[level]);
        if first_boundary < n {
            clipped += 1;
            continue;
        }
        let mut members: Vec<u32> = near[..n].iter().map(|(_, i)| *i).collect();
        members.sort_unstable();
        out.push(FamilyBall { center, level, members });
    }
    (out, clipped)
}

impl BallFamily {
    /// Balls of every radius around every `stride`-th node, completed so that
    /// each non-boundary node lies in a ball of each radius (a ball centred
    /// at the node itself is added when needed and not clipped).
    pub fn new(metric: &GridMetric, cfg: &BallFamilyConfig) -> Result<BallFamily> {
        cfg.validate()?;
        let dom = metric.domain().clone();
        let radii = cfg.radii();
        let rmax = *radii.last().expect("at least one level");
        let all: Vec<usize> = (0..radii.len()).collect();
        let centers: Vec<usize> = (0..dom.len())
            .filter(|&i| dom.multi_index(i).iter().all(|k| k % cfg.stride == 0))
            .collect();
        let built: Vec<(Vec<FamilyBall>, usize)> = centers
            .par_iter()
            .map(|&c| sorted_ball(metric, c, rmax).map(|(near, fb)| balls_at(&near, fb, c, &radii, &all)))
            .collect::<Result<_>>()?;
        let mut balls = Vec::new();
        let mut clipped = 0;
        for (b, c) in built {
            balls.extend(b);
            clipped += c;
        }

        // completion: uncovered interior nodes become centres at the missing levels
        let mut covered = vec![vec![false; dom.len()]; radii.len()];
        for b in &balls {
            for &m in &b.members {
                covered[b.level][m as usize] = true;
            }
        }
        let missing: Vec<(usize, Vec<usize>)> = (0..dom.len())
            .filter(|&i| !dom.on_boundary(i))
            .filter_map(|i| {
                let lv: Vec<usize> = (0..radii.len()).filter(|&l| !covered[l][i]).collect();
                (!lv.is_empty()).then_some((i, lv))
            })
            .collect();
        let extra: Vec<(Vec<FamilyBall>, usize)> = missing
            .par_iter()
            .map(|(c, lv)| {
                let r = radii[*lv.last().expect("non-empty")];
                sorted_ball(metric, *c, r).map(|(near, fb)| balls_at(&near, fb, *c, &radii, lv))
            })
            .collect::<Result<_>>()?;
        for (b, c) in extra {
            balls.extend(b);
            clipped += c;
        }
        Ok(BallFamily { domain: dom, radii, balls, clipped })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn balls(&self) -> &[FamilyBall] {
        &self.balls
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    /// Non-boundary nodes contained in no ball of the given level. After
    /// completion these are exactly the nodes whose own ball touches the boundary.
    pub fn uncovered(&self, level: usize) -> Vec<usize> {
        let mut covered = vec![false; self.domain.len()];
        for b in self.balls.iter().filter(|b| b.level == level) {
            for &m in &b.members {
                covered[m as usize] = true;
            }
        }
        (0..self.domain.len()).filter(|&i| !self.domain.on_boundary(i) && !covered[i]).collect()
    }

    /// A family restricted to the levels with radius at most `r`.
    pub fn up_to(&self, r: f64) -> BallFamily {
        let keep = self.radii.partition_point(|v| *v <= r * (1.0 + 1e-12));
        BallFamily {
            domain: self.domain.clone(),
            radii: self.radii[..keep].to_vec(),
            balls: self.balls.iter().filter(|b| b.level < keep).cloned().collect(),
            clipped: self.clipped,
        }
    }
}

/// Node indices of the control ball `B(center, r)`, or `None` when it
/// touches the boundary of the grid.
pub fn ball_members(metric: &GridMetric, center: usize, r: f64) -> Result<Option<Vec<u32>>> {
    let (near, fb) = sorted_ball(metric, center, r)?;
    if fb < near.len() {
        return Ok(None);
    }
    let mut m: Vec<u32> = near.into_iter().map(|(_, i)| i).collect();
    m.sort_unstable();
    Ok(Some(m))
}
