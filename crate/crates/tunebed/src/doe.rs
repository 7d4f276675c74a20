//! Design of experiments: latin-hypercube sampling and search regions.
//!
//! All sampling happens in the encoded space (see [`crate::space`]). A
//! latin-hypercube draw of `h` points splits every dimension into `h`
//! equal-width intervals and places exactly one point in each, using an
//! independent random permutation per dimension — so marginal coverage is
//! uniform by construction, not by luck. Integer parameters are sampled as
//! reals and only round at materialization; boolean/categorical parameters
//! stratify the code range `[0, K)` and floor, which weights every category
//! equally (up to the h/K remainder).
//!
//! A [`Region`] is a per-dimension box inside the encoded space.
//! [`bound_region`] builds the box bound-and-search explores around an
//! incumbent: each side moves to the nearest pool coordinate strictly
//! beyond the incumbent, falling back to the space bound when no pool value
//! sits on that side.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::space::{Configuration, ConfigurationSpace};

/// An axis-aligned box in encoded space.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    bounds: Vec<(f64, f64)>,
}

impl Region {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        for &(lo, hi) in &bounds {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidInput(format!(
                    "region side [{lo}, {hi}] is not an ordered finite interval"
                )));
            }
        }
        Ok(Region { bounds })
    }

    /// The whole encoded space of `space`.
    pub fn full(space: &ConfigurationSpace) -> Self {
        Region {
            bounds: space.parameters().iter().map(|p| p.encoded_interval()).collect(),
        }
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    /// Whether an encoded point lies inside the box (inclusive).
    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.bounds.len()
            && self
                .bounds
                .iter()
                .zip(point)
                .all(|(&(lo, hi), &x)| x >= lo && x <= hi)
    }
}

/// Latin-hypercube draw over an arbitrary box. One permutation per
/// dimension; each point gets a uniform offset inside its interval.
fn lhs_box(bounds: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![vec![0.0; bounds.len()]; count];
    for (d, &(lo, hi)) in bounds.iter().enumerate() {
        let mut intervals: Vec<usize> = (0..count).collect();
        intervals.shuffle(&mut rng);
        let width = (hi - lo) / count as f64;
        for (sample, &interval) in samples.iter_mut().zip(&intervals) {
            let offset: f64 = rng.random();
            // Zero-width sides (degenerate regions) collapse to `lo`.
            sample[d] = lo + (interval as f64 + offset) * width;
        }
    }
    samples
}

/// Latin-hypercube sample of `count` points over the full encoded space,
/// before materialization. Exposed so stratification can be checked on the
/// raw draw; rounding integer parameters afterwards necessarily collapses
/// strata.
pub fn lhs_encoded(space: &ConfigurationSpace, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    Ok(lhs_box(Region::full(space).bounds(), count, seed))
}

/// Latin-hypercube sample of `count` valid configurations.
pub fn lhs(space: &ConfigurationSpace, count: usize, seed: u64) -> Result<Vec<Configuration>> {
    lhs_encoded(space, count, seed)?
        .iter()
        .map(|x| space.decode(x))
        .collect()
}

/// Latin-hypercube sample of `count` configurations from a region.
pub fn sample_region(
    space: &ConfigurationSpace,
    region: &Region,
    count: usize,
    seed: u64,
) -> Result<Vec<Configuration>> {
    if count == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    if region.dimension() != space.dimension() {
        return Err(Error::DimensionMismatch {
            expected: space.dimension(),
            got: region.dimension(),
        });
    }
    lhs_box(region.bounds(), count, seed)
        .iter()
        .map(|x| space.decode(x))
        .collect()
}

/// The box bound-and-search samples around `incumbent`: per dimension, the
/// largest pool coordinate strictly below the incumbent and the smallest
/// strictly above it; the space bound where no pool value qualifies. Pool
/// coordinates equal to the incumbent's leave that side at its fallback.
pub fn bound_region(
    space: &ConfigurationSpace,
    incumbent: &[f64],
    pool: &[Vec<f64>],
) -> Result<Region> {
    let n = space.dimension();
    if incumbent.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: incumbent.len() });
    }
    for p in pool {
        if p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
    }
    let bounds = (0..n)
        .map(|d| {
            let (cb_lo, cb_hi) = space.parameter(d).encoded_interval();
            let x = incumbent[d];
            let mut lo = cb_lo;
            let mut hi = cb_hi;
            for p in pool {
                let v = p[d];
                if v < x && v > lo {
                    lo = v;
                } else if v > x && v < hi {
                    hi = v;
                }
            }
            // Keep the box inside the space even if pool points are not.
            (lo.max(cb_lo), hi.min(cb_hi))
        })
        .collect();
    Region::new(bounds)
}
