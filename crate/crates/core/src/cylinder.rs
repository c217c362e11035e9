//! Closed-form calculus on round k-cylinders `R B_2^k x R^(n-k)`.
//!
//! For a Gaussian measure `a` the radius is `R_k(a) = J_{k-1}^{-1}(c_{k-1} a)`,
//! the perimeter is `s_k(a) = g_{k-1}(R_k) / c_{k-1}` and the log-derivative of
//! `1/s_k` is `phi_k(a) = c_{k-1} (R_k^2 - k + 1) / g_k(R_k)`.

use crate::error::{domain, invalid, Result};
use crate::quad::bisect;
use crate::specfun::{c_raw, g_raw, j_inverse_raw, j_inverse_tail_raw, j_raw};
use serde::Serialize;

fn check(k: usize, a: f64) -> Result<()> {
    if k == 0 {
        return Err(invalid("cylinder dimension k must be at least 1"));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(domain(format!(
            "cylinder measure must lie in (0,1), got {a}"
        )));
    }
    Ok(())
}

/// Round k-cylinder of radius `radius` and Gaussian measure `measure` in
/// dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CylinderSpec {
    pub n: usize,
    pub k: usize,
    pub radius: f64,
    pub measure: f64,
}

impl CylinderSpec {
    pub fn from_radius(n: usize, k: usize, radius: f64) -> Result<Self> {
        if k == 0 || k > n {
            return Err(invalid(format!("need 1 <= k <= n, got k={k}, n={n}")));
        }
        if !(radius > 0.0) {
            return Err(invalid(format!("radius must be positive, got {radius}")));
        }
        Ok(Self {
            n,
            k,
            radius,
            measure: measure_of_radius(k, radius),
        })
    }

    pub fn from_measure(n: usize, k: usize, measure: f64) -> Result<Self> {
        if k > n {
            return Err(invalid(format!("need 1 <= k <= n, got k={k}, n={n}")));
        }
        Ok(Self {
            n,
            k,
            radius: radius_of_measure(k, measure)?,
            measure,
        })
    }
}

/// `J_{k-1}(R) / c_{k-1}`; independent of the ambient dimension.
pub fn measure_of_radius(k: usize, radius: f64) -> f64 {
    let p = k as f64 - 1.0;
    j_raw(p, radius) / c_raw(p)
}

pub fn radius_of_measure(k: usize, a: f64) -> Result<f64> {
    check(k, a)?;
    radius_raw(k, a)
}

pub(crate) fn radius_raw(k: usize, a: f64) -> Result<f64> {
    radius_split(k, a, 1.0 - a)
}

/// `R_k(a)` given both `a` and `1 - a`; the complement carries the accuracy
/// when `a` is close to 1.
pub(crate) fn radius_split(k: usize, a: f64, one_minus: f64) -> Result<f64> {
    let p = k as f64 - 1.0;
    if a <= 0.5 {
        j_inverse_raw(p, c_raw(p) * a)
    } else {
        j_inverse_tail_raw(p, c_raw(p) * one_minus)
    }
}

pub fn perimeter_s(k: usize, a: f64) -> Result<f64> {
    check(k, a)?;
    Ok(perimeter_of_radius(k, radius_raw(k, a)?))
}

pub(crate) fn perimeter_of_radius(k: usize, r: f64) -> f64 {
    let p = k as f64 - 1.0;
    g_raw(p, r) / c_raw(p)
}

pub fn phi_k(k: usize, a: f64) -> Result<f64> {
    check(k, a)?;
    Ok(phi_of_radius(k, radius_raw(k, a)?))
}

pub(crate) fn phi_of_radius(k: usize, r: f64) -> f64 {
    let kf = k as f64;
    c_raw(kf - 1.0) * (r * r - (kf - 1.0)) / g_raw(kf, r)
}

/// Concavity power of `C_k(a)`:
/// `1 - c_{k-1} a (k - 1 - R^2) / g_k(R)` with `R = R_k(a)`.
pub fn ps_cylinder(k: usize, a: f64) -> Result<f64> {
    check(k, a)?;
    let r = radius_raw(k, a)?;
    let kf = k as f64;
    Ok(1.0 - c_raw(kf - 1.0) * a * (kf - 1.0 - r * r) / g_raw(kf, r))
}

/// Measure at which `phi_k` vanishes (`R = sqrt(k-1)`); `None` for `k = 1`.
pub fn phi_zero(k: usize) -> Option<f64> {
    (k >= 2).then(|| measure_of_radius(k, (k as f64 - 1.0).sqrt()))
}

/// Index (1-based) minimizing `f(k)` over `1..=n`; ties go to the smaller k.
pub(crate) fn argmin_k(n: usize, mut f: impl FnMut(usize) -> f64) -> (usize, f64) {
    let mut best = (1, f(1));
    for k in 2..=n {
        let v = f(k);
        if v < best.1 {
            best = (k, v);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionRow {
    pub a: f64,
    pub phi_argmin: usize,
    pub phi_min: f64,
    pub s_argmin: usize,
    pub s_min: f64,
}

/// Abscissa where `f_i = f_j`, located by bisection between grid points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub i: usize,
    pub j: usize,
    pub a: f64,
}

/// Per-grid-point minimizers of `phi_k` (the sets E_k) and of `s_k` (the sets
/// I_k), with the crossings of every pair of curves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionTable {
    pub n: usize,
    pub rows: Vec<PartitionRow>,
    pub phi_crossings: Vec<Crossing>,
    pub s_crossings: Vec<Crossing>,
}

impl PartitionTable {
    /// Grid points where the two minimizers disagree.
    pub fn mismatches(&self) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.phi_argmin != r.s_argmin)
            .map(|r| r.a)
            .collect()
    }

    /// Largest located crossing of `phi_i` and `phi_j`.
    pub fn last_phi_crossing(&self, i: usize, j: usize) -> Option<f64> {
        let (i, j) = (i.min(j), i.max(j));
        self.phi_crossings
            .iter()
            .filter(|c| c.i == i && c.j == j)
            .map(|c| c.a)
            .fold(None, |m, a| Some(m.map_or(a, |m: f64| m.max(a))))
    }

    /// Grid abscissas where the minimizer of `phi_k` changes.
    pub fn phi_switches(&self) -> usize {
        self.rows
            .windows(2)
            .filter(|w| w[0].phi_argmin != w[1].phi_argmin)
            .count()
    }

    pub fn s_switches(&self) -> usize {
        self.rows
            .windows(2)
            .filter(|w| w[0].s_argmin != w[1].s_argmin)
            .count()
    }
}

pub fn partition(n: usize, grid: &[f64]) -> Result<PartitionTable> {
    if n == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("partition grid must be strictly increasing"));
    }
    let mut radii = Vec::with_capacity(grid.len());
    for &a in grid {
        check(1, a)?;
        let r: Result<Vec<f64>> = (1..=n).map(|k| radius_raw(k, a)).collect();
        radii.push(r?);
    }
    let mut rows = Vec::with_capacity(grid.len());
    for (idx, &a) in grid.iter().enumerate() {
        let rs = &radii[idx];
        let (pk, pv) = argmin_k(n, |k| phi_of_radius(k, rs[k - 1]));
        let (sk, sv) = argmin_k(n, |k| perimeter_of_radius(k, rs[k - 1]));
        rows.push(PartitionRow {
            a,
            phi_argmin: pk,
            phi_min: pv,
            s_argmin: sk,
            s_min: sv,
        });
    }
    let phi_at = |k: usize, a: f64| {
        radius_raw(k, a)
            .map(|r| phi_of_radius(k, r))
            .unwrap_or(f64::NAN)
    };
    let s_at = |k: usize, a: f64| {
        radius_raw(k, a)
            .map(|r| perimeter_of_radius(k, r))
            .unwrap_or(f64::NAN)
    };
    let phi_crossings = crossings(n, grid, &radii, phi_of_radius, phi_at);
    let s_crossings = crossings(n, grid, &radii, perimeter_of_radius, s_at);
    Ok(PartitionTable {
        n,
        rows,
        phi_crossings,
        s_crossings,
    })
}

fn crossings(
    n: usize,
    grid: &[f64],
    radii: &[Vec<f64>],
    of_radius: fn(usize, f64) -> f64,
    at: impl Fn(usize, f64) -> f64,
) -> Vec<Crossing> {
    let mut out = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            for w in 0..grid.len().saturating_sub(1) {
                let d0 = of_radius(i, radii[w][i - 1]) - of_radius(j, radii[w][j - 1]);
                let d1 = of_radius(i, radii[w + 1][i - 1]) - of_radius(j, radii[w + 1][j - 1]);
                if d0 == 0.0 {
                    out.push(Crossing { i, j, a: grid[w] });
                } else if d0.signum() != d1.signum() && d1 != 0.0 {
                    let a = bisect(|a| at(i, a) - at(j, a), grid[w], grid[w + 1], 60);
                    out.push(Crossing { i, j, a });
                }
            }
        }
    }
    out.sort_by(|x, y| x.a.total_cmp(&y.a));
    out
}

/// Uniform grid `1/(m+1), .., m/(m+1)` strictly inside `(0, 1)`.
pub fn open_grid(m: usize) -> Vec<f64> {
    (1..=m).map(|i| i as f64 / (m as f64 + 1.0)).collect()
}
