//! Exact arithmetic on grid-supported probability distributions.
//!
//! Every cost and return law in this crate is a [`GridDist`]: a probability
//! vector over the uniform grid `{0, 1/(M-1), ..., 1}` with `M >= 2` support
//! points. The dominating measure is the counting measure on the grid, so
//! densities are probability masses and every integral is a finite sum, which
//! keeps maximum-likelihood computations exact.
//!
//! Besides moments, the module provides the two divergences the confidence-set
//! machinery is built on — triangular discrimination
//! `D(f||g) = sum (f-g)^2/(f+g)` and squared Hellinger distance
//! `H^2(f||g) = 1/2 sum (sqrt f - sqrt g)^2` — together with clamped
//! convolution and pointwise mixtures.

use rand::Rng;

use crate::error::{Error, Result};

/// Constructor tolerance: mass vectors must sum to 1 within this bound, and
/// are renormalized afterwards to absorb summation-order effects.
pub const MASS_SUM_TOL: f64 = 1e-12;

/// Absolute slack used by every inequality check in the crate.
pub const INEQ_SLACK: f64 = 1e-9;

/// A probability distribution on the uniform grid `{0, 1/(M-1), ..., 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDist {
    masses: Vec<f64>,
}

impl GridDist {
    /// Builds a distribution from a mass vector of length `M >= 2`.
    ///
    /// Masses must be nonnegative and sum to 1 within [`MASS_SUM_TOL`]; the
    /// vector is renormalized exactly once so downstream sums start from a
    /// normalized state.
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.len() < 2 {
            return Err(Error::GridTooSmall(masses.len()));
        }
        let mut sum = 0.0;
        for (idx, &m) in masses.iter().enumerate() {
            if m < 0.0 || !m.is_finite() {
                return Err(Error::NegativeMass { idx, value: m });
            }
            sum += m;
        }
        if (sum - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::NotNormalized { sum });
        }
        let masses = masses.into_iter().map(|m| m / sum).collect();
        Ok(GridDist { masses })
    }

    /// The point mass at grid index `idx`.
    pub fn point_mass(grid_size: usize, idx: usize) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::GridTooSmall(grid_size));
        }
        if idx >= grid_size {
            return Err(Error::OffGrid { idx, grid_size });
        }
        let mut masses = vec![0.0; grid_size];
        masses[idx] = 1.0;
        Ok(GridDist { masses })
    }

    pub fn grid_size(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, idx: usize) -> f64 {
        self.masses[idx]
    }

    /// The grid value at index `idx`, i.e. `idx / (M-1)`.
    pub fn value(&self, idx: usize) -> f64 {
        idx as f64 / (self.masses.len() - 1) as f64
    }

    /// Largest grid index carrying positive mass.
    pub fn max_support_idx(&self) -> usize {
        self.masses
            .iter()
            .rposition(|&m| m > 0.0)
            .expect("a GridDist always has total mass 1")
    }

    /// Mean of the distribution, `sum_z z f(z)`, in `[0, 1]`.
    pub fn mean(&self) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .map(|(i, &m)| self.value(i) * m)
            .sum()
    }

    /// Variance `sum_z (z - mean)^2 f(z)`, in `[0, 1/4]`.
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.masses
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let d = self.value(i) - mu;
                d * d * m
            })
            .sum()
    }

    /// Draws a grid index by inverse-CDF over the mass vector, consuming one
    /// `f64` from the generator.
    pub fn sample_idx<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_from_weights(&self.masses, rng)
    }
}

/// Inverse-CDF draw from a nonnegative weight vector summing to ~1.
/// Consumes exactly one `f64` from the generator.
pub(crate) fn sample_from_weights<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        cum += w;
        if u < cum {
            return i;
        }
    }
    // Rounding can leave cum slightly below 1; fall back to the last
    // positive-weight entry.
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .expect("weights must not be all zero")
}

fn check_same_grid(f: &GridDist, g: &GridDist) -> Result<()> {
    if f.grid_size() != g.grid_size() {
        return Err(Error::GridMismatch(f.grid_size(), g.grid_size()));
    }
    Ok(())
}

/// Triangular discrimination `sum_y (f(y)-g(y))^2 / (f(y)+g(y))`, with the
/// convention that summands where `f(y)+g(y) = 0` contribute 0.
///
/// Symmetric, zero iff `f = g`, and at most 2 (attained on disjoint supports).
pub fn triangular_discrimination(f: &GridDist, g: &GridDist) -> Result<f64> {
    check_same_grid(f, g)?;
    let mut total = 0.0;
    for (pf, pg) in f.masses.iter().zip(&g.masses) {
        let denom = pf + pg;
        if denom > 0.0 {
            let diff = pf - pg;
            total += diff * diff / denom;
        }
    }
    Ok(total)
}

/// Squared Hellinger distance `1/2 sum_y (sqrt f(y) - sqrt g(y))^2`, in `[0,1]`.
pub fn hellinger_sq(f: &GridDist, g: &GridDist) -> Result<f64> {
    check_same_grid(f, g)?;
    let mut total = 0.0;
    for (pf, pg) in f.masses.iter().zip(&g.masses) {
        let d = pf.sqrt() - pg.sqrt();
        total += d * d;
    }
    Ok(0.5 * total)
}

/// Law of `X + Y` for independent `X ~ f`, `Y ~ g`, on the shared grid.
///
/// Grid values add exactly (`i/(M-1) + j/(M-1) = (i+j)/(M-1)`), so the
/// convolution is an index convolution. Mass that would land above the top
/// grid point is accumulated at the top index and the returned flag reports
/// whether that happened; environments are certified so it never does.
pub fn convolve_clamped(f: &GridDist, g: &GridDist) -> Result<(GridDist, bool)> {
    check_same_grid(f, g)?;
    let m = f.grid_size();
    let top = m - 1;
    let mut out = vec![0.0; m];
    let mut clamped = false;
    for (i, &pf) in f.masses.iter().enumerate() {
        if pf == 0.0 {
            continue;
        }
        for (j, &pg) in g.masses.iter().enumerate() {
            if pg == 0.0 {
                continue;
            }
            let k = i + j;
            if k <= top {
                out[k] += pf * pg;
            } else {
                out[top] += pf * pg;
                clamped = true;
            }
        }
    }
    Ok((GridDist::new(out)?, clamped))
}

/// Pointwise convex combination of distributions on a shared grid.
///
/// `components` pairs each distribution with its nonnegative weight; the
/// weights must sum to 1 within [`MASS_SUM_TOL`].
pub fn mixture(components: &[(f64, &GridDist)]) -> Result<GridDist> {
    let Some(&(_, first)) = components.first() else {
        return Err(Error::DomainMismatch("mixture of zero components".into()));
    };
    let m = first.grid_size();
    let mut wsum = 0.0;
    for &(w, d) in components {
        if w < 0.0 || !w.is_finite() {
            return Err(Error::NegativeMass { idx: 0, value: w });
        }
        if d.grid_size() != m {
            return Err(Error::GridMismatch(m, d.grid_size()));
        }
        wsum += w;
    }
    if (wsum - 1.0).abs() > MASS_SUM_TOL {
        return Err(Error::RowNotNormalized { sum: wsum });
    }
    let mut out = vec![0.0; m];
    for &(w, d) in components {
        if w == 0.0 {
            continue;
        }
        for (k, &p) in d.masses.iter().enumerate() {
            out[k] += w * p;
        }
    }
    GridDist::new(out)
}
