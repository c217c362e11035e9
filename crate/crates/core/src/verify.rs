//! Numerical checks of concavity statements and moment inequalities.
//!
//! Every comparison carries an error budget assembled from the reported
//! errors of its inputs, so each verdict is falsifiable: a violation is
//! declared only when a defect exceeds five budgets and survives a tighter
//! re-evaluation.

use crate::body::SupportBody;
use crate::error::{invalid, Error, Result};
use crate::gaussmoments::{
    expectations, gamma_one, measure, moments_bundle, Estimate, MomentsBundle, MultiPoly,
    RayPolynomial, SphereRule,
};
use crate::quad::{integrate1, Tol};
use crate::specfun::{eta, gauss_density, phi_inv, phi_raw, psi, psi_inv};
use crate::torsion::{torsion_gauge_lower, torsion_radial, Source, TorsionResult};
use crate::transform::Transform;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// A second difference above this many budgets is a violation.
pub const VIOLATION_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ConcaveWithinTol,
    Violation,
    Inconclusive,
}

/// `m` interior points `i / (m + 1)` of `(0, 1)`.
pub fn t_grid(m: usize) -> Vec<f64> {
    (1..=m).map(|i| i as f64 / (m + 1) as f64).collect()
}

fn grid_step(grid: &[f64]) -> Result<f64> {
    if grid.len() < 9 {
        return Err(invalid(format!(
            "concavity grid needs at least 9 points, got {}",
            grid.len()
        )));
    }
    if grid.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(invalid("concavity grid must lie inside (0,1)"));
    }
    let h = grid[1] - grid[0];
    let uniform = grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12);
    if !(h > 0.0) || !uniform {
        return Err(invalid("concavity grid must be uniform and increasing"));
    }
    Ok(h)
}

/// A tighter spherical rule for re-checking violations.
pub fn refine(rule: &SphereRule) -> SphereRule {
    SphereRule {
        tol: rule.tol / 16.0,
        max_panels: rule.max_panels * 2,
        mc_directions: rule.mc_directions * 4,
        ..*rule
    }
}

/// Gaussian measures along `K_t = (1 - t) K + t L`.
#[derive(Debug, Clone, Serialize)]
pub struct MeasurePath {
    pub k: String,
    pub l: String,
    pub grid: Vec<f64>,
    pub measures: Vec<Estimate>,
    #[serde(skip)]
    bodies: (SupportBody, SupportBody),
    #[serde(skip)]
    rule: SphereRule,
}

/// Grid points are evaluated concurrently and assembled in grid order.
pub fn measure_path(
    k: &SupportBody,
    l: &SupportBody,
    grid: &[f64],
    rule: &SphereRule,
) -> Result<MeasurePath> {
    if k.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            left: k.dim(),
            right: l.dim(),
        });
    }
    grid_step(grid)?;
    let measures: Result<Vec<Estimate>> = grid
        .par_iter()
        .map(|&t| measure(&SupportBody::interpolate(k, l, t)?, rule))
        .collect();
    Ok(MeasurePath {
        k: k.label(),
        l: l.label(),
        grid: grid.to_vec(),
        measures: measures?,
        bodies: (k.clone(), l.clone()),
        rule: *rule,
    })
}

impl MeasurePath {
    /// Same path with a tighter rule and (when `finer`) a doubled grid.
    pub fn refined(&self, finer: bool) -> Result<MeasurePath> {
        let grid = if finer {
            let h = self.grid[1] - self.grid[0];
            let mut g = Vec::with_capacity(2 * self.grid.len() - 1);
            for (i, t) in self.grid.iter().enumerate() {
                if i > 0 {
                    g.push(t - 0.5 * h);
                }
                g.push(*t);
            }
            g
        } else {
            self.grid.clone()
        };
        measure_path(&self.bodies.0, &self.bodies.1, &grid, &refine(&self.rule))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcavityReport {
    pub transform: String,
    pub pair: (String, String),
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub value_errors: Vec<f64>,
    pub transformed: Vec<f64>,
    /// `(F_{i-1} - 2 F_i + F_{i+1}) / dt^2` at interior grid points.
    pub second_differences: Vec<f64>,
    /// Per-difference budget `(d_{i-1} + 2 d_i + d_{i+1}) / dt^2`, `d` the
    /// transformed-value error.
    pub budgets: Vec<f64>,
    pub min_second_difference: f64,
    pub max_second_difference: f64,
    pub budget: f64,
    /// Largest second difference in units of its budget, and where.
    pub worst_ratio: f64,
    pub worst_t: f64,
    pub verdict: Verdict,
    /// For violations: whether a tighter rule on a doubled grid reproduces it.
    pub confirmed: Option<bool>,
}

/// Classifies `t -> F(gamma(K_t))` on an evaluated path.
pub fn classify(transform: &Transform, path: &MeasurePath) -> Result<ConcavityReport> {
    let h = grid_step(&path.grid)?;
    let m = path.grid.len();
    let mut f = Vec::with_capacity(m);
    let mut d = Vec::with_capacity(m);
    for e in &path.measures {
        let tv = transform.apply(e.value)?;
        f.push(tv.value);
        d.push(tv.err + tv.slope.abs() * (e.err + 4.0 * f64::EPSILON * e.value.abs()));
    }
    let h2 = h * h;
    let mut second = Vec::with_capacity(m - 2);
    let mut budgets = Vec::with_capacity(m - 2);
    for i in 1..m - 1 {
        second.push((f[i - 1] - 2.0 * f[i] + f[i + 1]) / h2);
        budgets.push((d[i - 1] + 2.0 * d[i] + d[i + 1]) / h2);
    }
    let (mut worst_ratio, mut worst_t) = (f64::NEG_INFINITY, path.grid[1]);
    for (i, (s, b)) in second.iter().zip(&budgets).enumerate() {
        let r = if *b > 0.0 {
            s / b
        } else if *s > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        if r > worst_ratio {
            worst_ratio = r;
            worst_t = path.grid[i + 1];
        }
    }
    let verdict = if second
        .iter()
        .zip(&budgets)
        .any(|(s, b)| *s > VIOLATION_FACTOR * b)
    {
        Verdict::Violation
    } else if second.iter().zip(&budgets).all(|(s, b)| s <= b) {
        Verdict::ConcaveWithinTol
    } else {
        Verdict::Inconclusive
    };
    Ok(ConcavityReport {
        transform: transform.id(),
        pair: (path.k.clone(), path.l.clone()),
        grid: path.grid.clone(),
        values: path.measures.iter().map(|e| e.value).collect(),
        value_errors: path.measures.iter().map(|e| e.err).collect(),
        transformed: f,
        min_second_difference: second.iter().copied().fold(f64::INFINITY, f64::min),
        max_second_difference: second.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        budget: budgets.iter().copied().fold(0.0, f64::max),
        second_differences: second,
        budgets,
        worst_ratio,
        worst_t,
        verdict,
        confirmed: None,
    })
}

/// [`classify`] plus the re-check: a violation that a tighter rule on a
/// doubled grid does not reproduce is downgraded to inconclusive.
pub fn classify_confirmed(transform: &Transform, path: &MeasurePath) -> Result<ConcavityReport> {
    let mut rep = classify(transform, path)?;
    if rep.verdict == Verdict::Violation {
        let again = classify(transform, &path.refined(true)?)?;
        let ok = again.verdict == Verdict::Violation;
        rep.confirmed = Some(ok);
        if !ok {
            rep.verdict = Verdict::Inconclusive;
        }
    }
    Ok(rep)
}

pub fn concavity_check(
    transform: &Transform,
    k: &SupportBody,
    l: &SupportBody,
    grid: &[f64],
    rule: &SphereRule,
) -> Result<ConcavityReport> {
    classify_confirmed(transform, &measure_path(k, l, grid, rule)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerReport {
    pub pair: (String, String),
    /// Midpoint of the final bracket.
    pub power: f64,
    /// Largest power found concave within budget.
    pub lower: f64,
    /// Smallest power found not concave (or the search limit).
    pub upper: f64,
    pub bracket: f64,
}

pub const POWER_RANGE: (f64, f64) = (-4.0, 8.0);
pub const POWER_BISECTIONS: usize = 30;

/// Largest `p` in `[-4, 8]` with `t -> gamma(K_t)^p` concave on the grid
/// within budget, by bisection (`p = 0` meaning log-concave).
pub fn max_power(
    k: &SupportBody,
    l: &SupportBody,
    grid: &[f64],
    rule: &SphereRule,
) -> Result<PowerReport> {
    max_power_on(&measure_path(k, l, grid, rule)?)
}

pub fn max_power_on(path: &MeasurePath) -> Result<PowerReport> {
    let concave = |p: f64| -> Result<bool> {
        // a^p/p is concave iff gamma^p is concave (p > 0) or convex (p < 0).
        Ok(classify(&Transform::power(p), path)?.verdict == Verdict::ConcaveWithinTol)
    };
    let (mut lo, mut hi) = POWER_RANGE;
    let pair = (path.k.clone(), path.l.clone());
    if concave(hi)? {
        return Ok(PowerReport {
            pair,
            power: hi,
            lower: hi,
            upper: hi,
            bracket: 0.0,
        });
    }
    if !concave(lo)? {
        return Ok(PowerReport {
            pair,
            power: lo,
            lower: lo,
            upper: lo,
            bracket: 0.0,
        });
    }
    for _ in 0..POWER_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if concave(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(PowerReport {
        pair,
        power: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
        bracket: hi - lo,
    })
}

/// Sum of one-at-a-time perturbation effects, a first-order error bound
/// for `f` at `x` with input errors `dx`.
fn propagate(f: &dyn Fn(&[f64]) -> f64, x: &[f64], dx: &[f64]) -> f64 {
    let base = f(x);
    let mut y = x.to_vec();
    let mut total = 0.0;
    for i in 0..x.len() {
        if dx[i] > 0.0 {
            y[i] = x[i] + dx[i];
            let up = f(&y);
            y[i] = x[i] - dx[i];
            let down = f(&y);
            y[i] = x[i];
            total += (up - base).abs().max((down - base).abs());
        }
    }
    total
}

fn first_axis(n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    e
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussMainReport {
    pub body: String,
    /// Lower bound for the concavity power at the maximizing `alpha`.
    pub bound: f64,
    pub err: f64,
    pub alpha_star: f64,
    /// The closed form quoted alongside the bound, and the bound there.
    pub alpha_quoted: f64,
    pub bound_at_quoted: f64,
    pub sweep_max: f64,
    pub sweep_dominated: bool,
    pub components: BTreeMap<String, f64>,
}

/// `sup_alpha [c (E(1-g^2)(alpha-g^2))^2 - Var g^2] / (alpha - E g^2)^2
/// + 1/(n - E|X|^2)` with `g = ||X||_K`, `c = r(K)^2 / (2 E g^2)`.
///
/// With `V = E g^2`, `D = Var g^2` and `u = 1/(alpha - V)` the first term
/// is `c ((1 - V) + D u)^2 - D u^2`, maximized at
/// `u* = c (1 - V) / (1 - c D)` with value `c (1 - V)^2 / (1 - c D)`; the
/// supremum is infinite when `c D >= 1`.
pub fn gauss_main_bound(k: &SupportBody, rule: &SphereRule) -> Result<GaussMainReport> {
    if !k.is_symmetric() {
        return Err(Error::Unsupported(
            "the moment bound needs a symmetric body".into(),
        ));
    }
    let n = k.dim();
    let mb = moments_bundle(k, &first_axis(n), rule)?;
    let r = k.inradius()?;
    let inputs = [mb.gk2.value, mb.gk4.value, r.value, mb.m2.value];
    let errs = [mb.gk2.err, mb.gk4.err, r.err, mb.m2.err];
    let nf = n as f64;
    let term = |x: &[f64], u: f64| {
        let (v, w, r) = (x[0], x[1], x[2]);
        let c = 0.5 * r * r / v;
        let d = w - v * v;
        c * ((1.0 - v) + d * u).powi(2) - d * u * u
    };
    let u_star = |x: &[f64]| {
        let (v, w, r) = (x[0], x[1], x[2]);
        let c = 0.5 * r * r / v;
        c * (1.0 - v) / (1.0 - c * (w - v * v))
    };
    let best = |x: &[f64]| {
        let (v, w, r) = (x[0], x[1], x[2]);
        let c = 0.5 * r * r / v;
        let d = w - v * v;
        let tail = 1.0 / (nf - x[3]);
        if c * d >= 1.0 {
            f64::INFINITY
        } else {
            c * (1.0 - v).powi(2) / (1.0 - c * d) + tail
        }
    };
    let bound = best(&inputs);
    let err = if bound.is_finite() {
        propagate(&best, &inputs, &errs)
    } else {
        0.0
    };
    let (v, w, rr) = (inputs[0], inputs[1], inputs[2]);
    let us = u_star(&inputs);
    let alpha_star = v + 1.0 / us;
    let alpha_quoted = (1.0 + 4.0 * rr * rr * v * (v - w)) / (2.0 * rr * rr * v * (1.0 - v));
    let tail = 1.0 / (nf - mb.m2.value);
    let bound_at_quoted = term(&inputs, 1.0 / (alpha_quoted - v)) + tail;
    let mut sweep_max = f64::NEG_INFINITY;
    for i in 0..100 {
        let u = us * (1.0 + (i as f64 - 49.5) / 25.0);
        sweep_max = sweep_max.max(term(&inputs, u) + tail);
    }
    let components = BTreeMap::from([
        ("measure".to_string(), mb.a.value),
        ("e_x2".to_string(), mb.m2.value),
        ("e_gauge2".to_string(), v),
        ("e_gauge4".to_string(), w),
        ("inradius".to_string(), rr),
        ("dimension_term".to_string(), tail),
    ]);
    Ok(GaussMainReport {
        body: k.label(),
        bound,
        err,
        alpha_star,
        alpha_quoted,
        bound_at_quoted,
        sweep_max,
        sweep_dominated: !bound.is_finite() || sweep_max <= bound + 1e-9,
        components,
    })
}

/// Exact torsion when `K` is a round cylinder, the gauge lower bound
/// otherwise.
pub fn best_torsion(k: &SupportBody, rule: &SphereRule) -> Result<TorsionResult> {
    match k.round_params() {
        Some((kk, r)) if k.is_symmetric() => torsion_radial(kk, r, k.dim(), &Source::one()),
        _ => torsion_gauge_lower(k, &Source::one(), rule),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TorsionPowerReport {
    pub body: String,
    pub value: f64,
    pub err: f64,
    pub torsion: TorsionResult,
    pub e_x2: Estimate,
}

/// `2 T(K) + 1 / (n - E|X|^2)`.
pub fn cor_t1_bound(k: &SupportBody, rule: &SphereRule) -> Result<TorsionPowerReport> {
    let t = best_torsion(k, rule)?;
    let e = expectations(k, &[RayPolynomial::norm_pow(2)], rule)?;
    let m2 = e[0];
    let nf = k.dim() as f64;
    let q = nf - m2.value;
    Ok(TorsionPowerReport {
        body: k.label(),
        value: 2.0 * t.value + 1.0 / q,
        err: 2.0 * t.err + m2.err / (q * q),
        torsion: t,
        e_x2: m2,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MinkowskiReport {
    pub pair: (String, String),
    pub gamma_one: Estimate,
    pub gamma_k: Estimate,
    pub gamma_l: Estimate,
    pub e_x2: Estimate,
    /// `(n - E X^2) gamma(K)^(1-p) gamma(L)^p`, `p = 1/(n - E X^2)`.
    pub rhs_sharp: f64,
    /// The same with the weaker factor `1 - E X^2 / n`.
    pub rhs_stated: f64,
    pub slack: f64,
    pub slack_stated: f64,
    pub budget: f64,
    /// `gamma(K) (n - E X^2)`, which equals `gamma_1(K, K)`.
    pub self_value: f64,
}

pub fn minkowski_first_check(
    k: &SupportBody,
    l: &SupportBody,
    rule: &SphereRule,
) -> Result<MinkowskiReport> {
    let g1 = gamma_one(k, l, rule)?;
    let e = expectations(k, &[RayPolynomial::norm_pow(2)], rule)?;
    let (m2, gk) = (e[0], e[1]);
    let gl = measure(l, rule)?;
    let nf = k.dim() as f64;
    let sharp = |x: &[f64]| {
        let q = nf - x[0];
        let p = 1.0 / q;
        q * x[1].powf(1.0 - p) * x[2].powf(p)
    };
    let x = [m2.value, gk.value, gl.value];
    let dx = [m2.err, gk.err, gl.err];
    let rhs_sharp = sharp(&x);
    let rhs_stated = rhs_sharp / nf;
    let budget = g1.err + propagate(&sharp, &x, &dx);
    Ok(MinkowskiReport {
        pair: (k.label(), l.label()),
        gamma_one: g1,
        gamma_k: gk,
        gamma_l: gl,
        e_x2: m2,
        rhs_sharp,
        rhs_stated,
        slack: g1.value - rhs_sharp,
        slack_stated: g1.value - rhs_stated,
        budget,
        self_value: gk.value * (nf - m2.value),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlMode {
    /// `Var f <= E |grad f|^2`.
    Gaussian,
    /// `Var f <= E |grad f|^2 / 2` for even `f` on symmetric `K`.
    GaussianEvenHalf,
}

#[derive(Debug, Clone, Serialize)]
pub struct BrascampLiebReport {
    pub body: String,
    pub mode: BlMode,
    pub variance: Estimate,
    pub grad_sq: Estimate,
    /// `constant * E|grad f|^2 - Var f`.
    pub slack: f64,
    pub budget: f64,
}

pub fn brascamp_lieb_check(
    k: &SupportBody,
    f: &MultiPoly,
    mode: BlMode,
    rule: &SphereRule,
) -> Result<BrascampLiebReport> {
    if f.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            left: k.dim(),
            right: f.dim(),
        });
    }
    let constant = match mode {
        BlMode::Gaussian => 1.0,
        BlMode::GaussianEvenHalf => {
            if !f.is_even() || !k.is_symmetric() {
                return Err(invalid(
                    "the factor 1/2 needs an even polynomial on a symmetric body",
                ));
            }
            0.5
        }
    };
    let e = expectations(
        k,
        &[f.to_ray(), f.mul(f).to_ray(), f.grad_norm_sq().to_ray()],
        rule,
    )?;
    let variance = e[1].minus(&e[0].times(&e[0]));
    let grad_sq = e[2];
    Ok(BrascampLiebReport {
        body: k.label(),
        mode,
        variance,
        grad_sq,
        slack: constant * grad_sq.value - variance.value,
        budget: constant * grad_sq.err + variance.err,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub body: String,
    pub moments: MomentsBundle,
    /// `(E X^2)^2 + 2 E X^2 - E X^4`.
    pub cfm_margin: Option<f64>,
    /// `n - E X^2`.
    pub second_moment_margin: f64,
    /// `1 - E <X, theta>^2`.
    pub directional_margin: f64,
    pub alpha: Option<f64>,
    /// `1 - alpha(K)`.
    pub alpha_margin: Option<f64>,
    pub beta: Option<f64>,
    /// `beta(K) + 1`.
    pub beta_margin: Option<f64>,
    /// `1 - E <X,theta>^2 - eta(gamma(K)) (E <X,theta>)^2`.
    pub eta_margin: f64,
    /// Error scale of the margins.
    pub budget: f64,
}

/// Moment functionals of the Gaussian restricted to `K`. The symmetric-only
/// entries are `None` for translated bodies.
pub fn moment_inequality_suite(
    k: &SupportBody,
    theta: &[f64],
    rule: &SphereRule,
) -> Result<MomentReport> {
    let mb = moments_bundle(k, theta, rule)?;
    let n = k.dim() as f64;
    let (m2, m4) = (mb.m2.value, mb.m4.value);
    let sym = k.is_symmetric();
    let alpha = (n * (n - 1.0) - (2.0 * n + 1.0) * m2 + m4) / ((n - m2) * (n - m2));
    let beta = (n * n - 2.0 * (n + 1.0) * m2 + m4) / (2.0 * m2 - mb.var_x2.value);
    let a = mb.a.value.min(1.0 - f64::EPSILON);
    let eta_a = eta(a)?;
    let budget = 10.0
        * (mb.m2.err * (1.0 + 2.0 * m2 + 2.0 * n) + mb.m4.err + mb.dir2.err + mb.dir1.err)
        / (n - m2).powi(2).min(1.0);
    Ok(MomentReport {
        body: k.label(),
        cfm_margin: sym.then_some(m2 * m2 + 2.0 * m2 - m4),
        second_moment_margin: n - m2,
        directional_margin: 1.0 - mb.dir2.value,
        alpha: sym.then_some(alpha),
        alpha_margin: sym.then_some(1.0 - alpha),
        beta: sym.then_some(beta),
        beta_margin: sym.then_some(beta + 1.0),
        eta_margin: 1.0 - mb.dir2.value - eta_a * mb.dir1.value * mb.dir1.value,
        budget,
        moments: mb,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfspaceAlpha {
    pub measure: f64,
    /// `alpha(H)` from quadrature of the truncated Gaussian moments.
    pub alpha: f64,
    pub err: f64,
    /// `-b^3 e^(-b^2/2)`, `b = psi^-1(a)`.
    pub quoted: f64,
    /// `-eta(a) = -sqrt(2 pi) a b e^(b^2/2)`.
    pub minus_eta: f64,
}

/// `alpha` of a half-space of measure `a`. Only the first coordinate is
/// restricted, and the functional reduces to
/// `(E X_1^4 - 3 E X_1^2) / (1 - E X_1^2)^2` over `{x_1 <= b}`.
pub fn halfspace_alpha(a: f64) -> Result<HalfspaceAlpha> {
    let b = psi_inv(a)?;
    let lo = b - 40.0;
    let tol = Tol::new(0.0, 1e-14);
    let (e2, r2, _) = integrate1(|t| t * t * gauss_density(t), lo, b, tol);
    let (e4, r4, _) = integrate1(|t| t.powi(4) * gauss_density(t), lo, b, tol);
    let (e2, e4) = (e2 / a, e4 / a);
    let f = |x: &[f64]| (x[1] - 3.0 * x[0]) / (1.0 - x[0]).powi(2);
    let alpha = f(&[e2, e4]);
    let err = propagate(&f, &[e2, e4], &[r2 / a, r4 / a]);
    Ok(HalfspaceAlpha {
        measure: a,
        alpha,
        err,
        quoted: -b.powi(3) * (-0.5 * b * b).exp(),
        minus_eta: -eta(a)?,
    })
}

pub const S_SCALES: [f64; 5] = [1.0, 1.2, 1.5, 2.0, 3.0];

#[derive(Debug, Clone, Serialize)]
pub struct SInequalityReport {
    pub body: String,
    /// Half-width of the strip of equal measure.
    pub strip_width: f64,
    pub scales: Vec<f64>,
    /// `gamma(t K) - gamma(t S_K)`.
    pub margins: Vec<f64>,
    pub budgets: Vec<f64>,
}

pub fn s_inequality_check(k: &SupportBody, rule: &SphereRule) -> Result<SInequalityReport> {
    if !k.is_symmetric() {
        return Err(Error::Unsupported(
            "S-inequality for translated bodies".into(),
        ));
    }
    let a = measure(k, rule)?;
    let w = phi_inv(a.value.min(1.0 - f64::EPSILON))?;
    // d w / d a = 1 / (2 density(w)).
    let w_err = a.err / (2.0 * gauss_density(w));
    let mut margins = Vec::new();
    let mut budgets = Vec::new();
    for &t in &S_SCALES {
        let (m, e) = if t == 1.0 {
            (a, Estimate::closed(a.value))
        } else {
            (
                measure(&k.scale(t)?, rule)?,
                Estimate::closed(phi_raw(t * w)),
            )
        };
        margins.push(m.value - e.value);
        budgets
            .push(m.err + a.err.max(2.0 * t * gauss_density(t * w) * w_err) + 4.0 * f64::EPSILON);
    }
    Ok(SInequalityReport {
        body: k.label(),
        strip_width: w,
        scales: S_SCALES.to_vec(),
        margins,
        budgets,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PropGaussReport {
    pub body: String,
    /// `E ||Hess u||^2`.
    pub lhs: Estimate,
    /// `E |grad u|^2 + (E L u)^2 / (n - E|X|^2)`.
    pub rhs: f64,
    pub slack: f64,
    pub budget: f64,
}

pub fn propgauss_check(
    k: &SupportBody,
    u: &MultiPoly,
    rule: &SphereRule,
) -> Result<PropGaussReport> {
    if !u.is_even() {
        return Err(invalid("the Hessian inequality needs an even polynomial"));
    }
    if u.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            left: k.dim(),
            right: u.dim(),
        });
    }
    let fs = [
        u.hessian_norm_sq().to_ray(),
        u.grad_norm_sq().to_ray(),
        u.ou_generator().to_ray(),
        RayPolynomial::norm_pow(2),
    ];
    let e = expectations(k, &fs, rule)?;
    let nf = k.dim() as f64;
    let rhs_of = |x: &[f64]| x[0] + x[1] * x[1] / (nf - x[2]);
    let x = [e[1].value, e[2].value, e[3].value];
    let dx = [e[1].err, e[2].err, e[3].err];
    let rhs = rhs_of(&x);
    Ok(PropGaussReport {
        body: k.label(),
        lhs: e[0],
        rhs,
        slack: e[0].value - rhs,
        budget: e[0].err + propagate(&rhs_of, &x, &dx) + 1e-12 * rhs.abs(),
    })
}

/// Parametrized pair families for the counterexample search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Symmetric intervals (`n = 1`).
    Intervals,
    /// A strip against a disc (`n = 2`).
    StripBall,
    /// Two discs (`n = 2`).
    Balls,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intervals" => Ok(Family::Intervals),
            "strip-ball" | "strip_ball" => Ok(Family::StripBall),
            "balls" => Ok(Family::Balls),
            _ => Err(Error::Parse(format!(
                "unknown family `{s}` (intervals, strip-ball, balls)"
            ))),
        }
    }
}

/// Log-spaced sizes from 0.05 to 3.
pub fn size_grid(m: usize) -> Vec<f64> {
    let (lo, hi) = (0.05f64.ln(), 3.0f64.ln());
    (0..m)
        .map(|i| (lo + (hi - lo) * i as f64 / (m - 1).max(1) as f64).exp())
        .collect()
}

pub fn family_pairs(family: Family, sizes: &[f64]) -> Result<Vec<(SupportBody, SupportBody)>> {
    let mut out = Vec::new();
    for (i, &x) in sizes.iter().enumerate() {
        for (j, &y) in sizes.iter().enumerate() {
            match family {
                Family::Intervals if i < j => {
                    out.push((SupportBody::strip(1, x)?, SupportBody::strip(1, y)?))
                }
                Family::Balls if i < j => {
                    out.push((SupportBody::ball(2, x)?, SupportBody::ball(2, y)?))
                }
                Family::StripBall => {
                    out.push((SupportBody::strip(2, x)?, SupportBody::ball(2, y)?))
                }
                _ => {}
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub pair: (String, String),
    pub t: f64,
    /// Second difference in units of its budget.
    pub magnitude: f64,
    pub second_difference: f64,
    pub budget: f64,
    /// Reproduced with a tighter rule on a doubled grid.
    pub confirmed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub transform: String,
    pub family: Family,
    pub pairs_searched: usize,
    pub grid_points: usize,
    /// Confirmed violations found.
    pub witnesses: usize,
    pub first_witness: Option<Witness>,
    /// Violations that the re-check did not reproduce.
    pub unconfirmed: usize,
    pub finding: String,
}

/// Scans a family for a second difference of `F(gamma(K_t))` above five
/// budgets. Findings are reported; absence is not a proof of concavity.
pub fn counterexample_search(
    transform: &Transform,
    family: Family,
    sizes: &[f64],
    grid: &[f64],
    rule: &SphereRule,
) -> Result<CounterexampleReport> {
    let pairs = family_pairs(family, sizes)?;
    let reports: Result<Vec<ConcavityReport>> = pairs
        .par_iter()
        .map(|(k, l)| concavity_check(transform, k, l, grid, rule))
        .collect();
    let reports = reports?;
    let mut witnesses = 0;
    let mut unconfirmed = 0;
    let mut first = None;
    for rep in &reports {
        match rep.confirmed {
            Some(true) => {
                witnesses += 1;
                if first.is_none() {
                    let i = rep
                        .grid
                        .iter()
                        .position(|t| *t == rep.worst_t)
                        .map(|i| i - 1)
                        .unwrap_or(0);
                    first = Some(Witness {
                        pair: rep.pair.clone(),
                        t: rep.worst_t,
                        magnitude: rep.worst_ratio,
                        second_difference: rep.second_differences[i],
                        budget: rep.budgets[i],
                        confirmed: true,
                    });
                }
            }
            Some(false) => unconfirmed += 1,
            None => {}
        }
    }
    let finding = if witnesses > 0 {
        format!("{witnesses} confirmed witness(es)")
    } else {
        "none found at this resolution".to_string()
    };
    Ok(CounterexampleReport {
        transform: transform.id(),
        family,
        pairs_searched: pairs.len(),
        grid_points: grid.len(),
        witnesses,
        first_witness: first,
        unconfirmed,
        finding,
    })
}

/// `gamma(K_{1/2}) - sqrt(gamma(K) gamma(L))`, nonnegative by
/// log-concavity of the Gaussian measure.
pub fn log_concavity_margin(
    k: &SupportBody,
    l: &SupportBody,
    rule: &SphereRule,
) -> Result<Estimate> {
    let mid = measure(&SupportBody::interpolate(k, l, 0.5)?, rule)?;
    let gk = measure(k, rule)?;
    let gl = measure(l, rule)?;
    let g = (gk.value * gl.value).sqrt();
    let e = 0.5 * g * (gk.err / gk.value + gl.err / gl.value);
    Ok(Estimate {
        value: mid.value - g,
        err: mid.err + e,
        ..mid
    })
}

/// `T(K) <= T(H)` for the half-space `H` of equal measure (`F = 1`).
#[derive(Debug, Clone, Serialize)]
pub struct SaintVenantReport {
    pub body: String,
    pub measure: Estimate,
    pub torsion: TorsionResult,
    pub halfspace: TorsionResult,
    pub margin: f64,
    pub budget: f64,
}

pub fn saint_venant_check(k: &SupportBody, rule: &SphereRule) -> Result<SaintVenantReport> {
    let a = measure(k, rule)?;
    let t = best_torsion(k, rule)?;
    let h = crate::torsion::torsion_halfspace(a.value.min(1.0 - f64::EPSILON))?;
    // dT_H/da by a central difference, for the measure error.
    let slope = if a.err > 0.0 {
        let d = 1e-4 * a.value.min(1.0 - a.value);
        let up = crate::torsion::torsion_halfspace(a.value + d)?.value;
        let down = crate::torsion::torsion_halfspace(a.value - d)?.value;
        (up - down) / (2.0 * d)
    } else {
        0.0
    };
    Ok(SaintVenantReport {
        body: k.label(),
        measure: a,
        margin: h.value - t.value,
        budget: h.err + t.err + slope.abs() * a.err,
        torsion: t,
        halfspace: h,
    })
}

/// `psi(t)` re-exported for report consumers that compare half-lines.
pub fn halfline_measure(b: f64) -> f64 {
    psi(b)
}
