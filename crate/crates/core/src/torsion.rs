//! Gaussian torsional rigidity with Dirichlet data.
//!
//! `T^F(K) = sup (E_K F v)^2 / E_K |grad v|^2` over `v` vanishing on the
//! boundary, with expectations over the Gaussian restricted to `K`. The
//! maximizer solves `L u = F`, `L = Delta - <x, grad>`. Exact values exist
//! only where the problem reduces to one radial variable; elsewhere the
//! module gives lower bounds.

use crate::body::SupportBody;
use crate::error::{domain, failure, invalid, Error, Result};
use crate::gaussmoments::{expectations, Estimate, MultiPoly, RayPolynomial, SphereRule};
use crate::quad::{brent_min, brent_root, integrate1, Tol};
use crate::specfun::{gauss_density, j_raw, phi_inv_raw, psi, psi_inv_raw, SQRT_2PI};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TorsionKind {
    ExactRadial,
    Halfspace,
    VariationalLower,
    GaugeLower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorsionResult {
    pub value: f64,
    pub err: f64,
    pub kind: TorsionKind,
    pub f_label: String,
    /// Named intermediate bounds, when several were compared.
    pub components: BTreeMap<String, f64>,
}

/// Source terms with both a radial profile and a polynomial form.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// `F = c`.
    Constant(f64),
    /// `F = k - |x_1..k|^2`, the equality case of the gauge bound on
    /// `k`-cylinders.
    Touch(usize),
}

impl Source {
    pub fn one() -> Self {
        Source::Constant(1.0)
    }

    pub fn label(&self) -> String {
        match self {
            Source::Constant(c) => format!("const:c={c}"),
            Source::Touch(k) => format!("touch:k={k}"),
        }
    }

    /// `F` as a function of `|x_1..k|` (for `Touch`, `k` must match).
    pub fn profile(&self, s: f64) -> f64 {
        match self {
            Source::Constant(c) => *c,
            Source::Touch(k) => *k as f64 - s * s,
        }
    }

    pub fn poly(&self, n: usize) -> Result<MultiPoly> {
        match self {
            Source::Constant(c) => Ok(MultiPoly::constant(n, *c)),
            Source::Touch(k) => {
                if *k == 0 || *k > n {
                    return Err(invalid(format!(
                        "touch source needs 1 <= k <= n, got k={k}, n={n}"
                    )));
                }
                let sq = (0..*k).fold(MultiPoly::zero(n), |acc, i| {
                    acc.add(&MultiPoly::var(n, i).mul(&MultiPoly::var(n, i)))
                });
                Ok(MultiPoly::constant(n, *k as f64).sub(&sq))
            }
        }
    }
}

impl std::str::FromStr for Source {
    type Err = Error;

    /// `1`, a number, `const:c=<x>`, or `touch:k=<k>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(c) = s.parse::<f64>() {
            return Ok(Source::Constant(c));
        }
        if let Some(rest) = s.strip_prefix("const:c=") {
            return rest
                .parse()
                .map(Source::Constant)
                .map_err(|_| Error::Parse(format!("bad constant source `{s}`")));
        }
        if let Some(rest) = s.strip_prefix("touch:k=") {
            return rest
                .parse()
                .map(Source::Touch)
                .map_err(|_| Error::Parse(format!("bad touch source `{s}`")));
        }
        Err(Error::Parse(format!(
            "unknown source term `{s}` (use 1, const:c=x or touch:k=k)"
        )))
    }
}

fn tight() -> Tol {
    Tol::new(0.0, 1e-13).with_max_panels(2000)
}

/// Exact torsion of `R B_2^k x R^(n-k)` for the source `F(|x_1..k|)`.
pub fn torsion_radial(k: usize, r: f64, n: usize, source: &Source) -> Result<TorsionResult> {
    if let Source::Touch(j) = source {
        if *j != k {
            return Err(invalid(format!(
                "touch:k={j} is not radial in the first {k} coordinates"
            )));
        }
    }
    torsion_profile(k, r, n, &source.label(), &|s| source.profile(s))
}

/// [`torsion_radial`] for an arbitrary continuous profile `f(|x_1..k|)`.
///
/// With `w(r) = int_0^r s^(k-1) e^(-s^2/2) f(s) ds` the solution has
/// `u'(r) = r^(1-k) e^(r^2/2) w(r)`, and
/// `T = J_{k-1}(R)^-1 int_0^R w(r)^2 r^(1-k) e^(r^2/2) dr`.
pub fn torsion_profile(
    k: usize,
    r: f64,
    n: usize,
    label: &str,
    f: &dyn Fn(f64) -> f64,
) -> Result<TorsionResult> {
    if k == 0 || k > n {
        return Err(invalid(format!(
            "cylinder needs 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(domain(format!(
            "radius must be positive and finite, got {r}"
        )));
    }
    let kf = k as f64;
    let mut worst = 0.0f64;
    let mut ok = true;
    let outer = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let (w, e, conv) = integrate1(
            |s| s.powf(kf - 1.0) * (-0.5 * s * s).exp() * f(s),
            0.0,
            t,
            tight(),
        );
        ok &= conv;
        if w != 0.0 {
            worst = worst.max(e / w.abs());
        }
        w * w * t.powf(1.0 - kf) * (0.5 * t * t).exp()
    };
    let (v, e, conv) = integrate1(outer, 0.0, r, tight());
    if !ok {
        return Err(failure("inner torsion integral", worst));
    }
    if !conv {
        return Err(failure("outer torsion integral", e));
    }
    let jr = j_raw(kf - 1.0, r);
    let value = v / jr;
    Ok(TorsionResult {
        value,
        err: e / jr + 2.0 * worst * value.abs() + 4.0 * f64::EPSILON * value.abs(),
        kind: TorsionKind::ExactRadial,
        f_label: label.to_string(),
        components: BTreeMap::new(),
    })
}

/// Truncation depth of the half-space integral below `psi^-1(a)`.
pub const HALFSPACE_DEPTH: f64 = 12.0;

/// Torsion (`F = 1`) of `{x_1 <= psi^-1(a)}`:
/// `u'(t) = sqrt(2 pi) psi(t) e^(t^2/2)` and
/// `T = a^-1 sqrt(2 pi) int_{-inf}^b psi(t)^2 e^(t^2/2) dt`.
/// The integral stops at `b - 12`; the tail is at most `phi(T)/|T|^3`.
pub fn torsion_halfspace(a: f64) -> Result<TorsionResult> {
    if !(a > 0.0 && a < 1.0) {
        return Err(domain(format!(
            "half-space measure must lie in (0,1), got {a}"
        )));
    }
    if a < 1e-250 {
        return Err(domain(format!(
            "half-space measure {a} is below the resolvable range"
        )));
    }
    let b = psi_inv_raw(a);
    let lo = b - HALFSPACE_DEPTH;
    // psi(t) e^(t^2/4), squared, keeps both factors in range.
    let f = |t: f64| {
        let s = psi(t) * (0.25 * t * t).exp();
        s * s
    };
    let (v, e, conv) = integrate1(f, lo, b, tight());
    if !conv {
        return Err(failure("half-space torsion integral", e));
    }
    let tail = gauss_density(lo) / lo.abs().powi(3);
    Ok(TorsionResult {
        value: SQRT_2PI * v / a,
        err: (SQRT_2PI * e + tail) / a,
        kind: TorsionKind::Halfspace,
        f_label: Source::one().label(),
        components: BTreeMap::new(),
    })
}

/// Lower bounds from the test function `1 - ||x||_K^2`:
/// `r(K)^2 (E F (1 - ||X||^2))^2 / (4 E ||X||^2)`, and for constant
/// sources `F = c` also `c^2 phi^-1(a)^2 / (4 e^2 n^2)`. Returns the larger.
pub fn torsion_gauge_lower(
    k: &SupportBody,
    source: &Source,
    rule: &SphereRule,
) -> Result<TorsionResult> {
    if !k.is_symmetric() {
        return Err(Error::Unsupported(
            "torsion bounds for translated bodies".into(),
        ));
    }
    let n = k.dim();
    let fpoly = source.poly(n)?.to_ray();
    let one_minus = RayPolynomial::constant(1.0).sub(&RayPolynomial::gauge_pow(2));
    let e = expectations(
        k,
        &[fpoly.mul(&one_minus), RayPolynomial::gauge_pow(2)],
        rule,
    )?;
    let (num, den, a) = (e[0], e[1], e[2]);
    let r = k.inradius()?;
    let touch = r.value * r.value * num.value * num.value / (4.0 * den.value);
    let touch_err = touch.abs()
        * (2.0 * r.err / r.value
            + 2.0 * num.err / num.value.abs().max(f64::MIN_POSITIVE)
            + den.err / den.value);
    let mut components = BTreeMap::from([("last_touch".to_string(), touch)]);
    let (mut value, mut err) = (touch, touch_err);
    if let Source::Constant(c) = source {
        let w = phi_inv_raw(a.value.min(1.0));
        let scale = c * c / (4.0 * std::f64::consts::E.powi(2) * (n * n) as f64);
        let bound = scale * w * w;
        // d/da phi^-1(a) = 1 / (2 density(w)).
        let bound_err = scale * 2.0 * w * a.err / (2.0 * gauss_density(w));
        components.insert("measure".to_string(), bound);
        if bound > value {
            value = bound;
            err = bound_err;
        }
    }
    Ok(TorsionResult {
        value,
        err,
        kind: TorsionKind::GaugeLower,
        f_label: source.label(),
        components,
    })
}

/// `v(x) = P(||x||_K)` with `P(1) = 0`, so `v` vanishes on the boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeProfile {
    coeffs: Vec<f64>,
}

impl GaugeProfile {
    /// Coefficients of `P` in increasing degree.
    pub fn new(coeffs: &[f64]) -> Result<Self> {
        let scale: f64 = coeffs.iter().map(|c| c.abs()).sum();
        let at_one: f64 = coeffs.iter().sum();
        if coeffs.is_empty() || !(scale > 0.0) || !scale.is_finite() {
            return Err(invalid(
                "test profile needs finite, not all zero coefficients",
            ));
        }
        if at_one.abs() > 1e-12 * scale {
            return Err(invalid(format!(
                "test profile must vanish at gauge 1, P(1) = {at_one}"
            )));
        }
        Ok(Self {
            coeffs: coeffs.to_vec(),
        })
    }

    /// `1 - s^2`.
    pub fn parabola() -> Self {
        Self {
            coeffs: vec![1.0, 0.0, -1.0],
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.coeffs.iter().map(|x| c * x).collect::<Vec<_>>())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn derivative_sq(&self) -> Vec<f64> {
        let d: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| j as f64 * c)
            .collect();
        let mut out = vec![0.0; (2 * d.len()).saturating_sub(1).max(1)];
        for (i, a) in d.iter().enumerate() {
            for (j, b) in d.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        out
    }
}

/// Step of the central differences of the gauge.
const GAUGE_FD_STEP: f64 = 1e-4;

/// `|grad ||.||_K|^2` at `theta` by central differences at `h` and `2h`,
/// returning the `h` value and the discrepancy as its error.
fn gauge_grad_sq(k: &SupportBody, theta: &[f64]) -> (f64, f64) {
    let n = theta.len();
    let mut x = theta.to_vec();
    let mut d = |i: usize, h: f64| -> f64 {
        x[i] = theta[i] + h;
        let p = k.gauge(&x).unwrap_or(f64::NAN);
        x[i] = theta[i] - h;
        let m = k.gauge(&x).unwrap_or(f64::NAN);
        x[i] = theta[i];
        (p - m) / (2.0 * h)
    };
    let (mut g1, mut g2) = (0.0, 0.0);
    for i in 0..n {
        let a = d(i, GAUGE_FD_STEP);
        let b = d(i, 2.0 * GAUGE_FD_STEP);
        g1 += a * a;
        g2 += b * b;
    }
    (g1, (g1 - g2).abs())
}

/// The Rayleigh quotient `(E_K F v)^2 / E_K |grad v|^2` for `v = P(||x||_K)`.
///
/// Along rays `|grad v|^2 = P'(t/rho)^2 |grad ||.||_K(theta)|^2`; the gauge
/// gradient comes from central differences, whose step discrepancy is
/// carried into the denominator's error. The returned error is first
/// order; `value - err` is a lower bound for `T^F(K)` whenever the
/// numerator sign is resolved.
pub fn rayleigh(
    k: &SupportBody,
    source: &Source,
    v: &GaugeProfile,
    rule: &SphereRule,
) -> Result<Estimate> {
    let n = k.dim();
    let fpoly = source.poly(n)?.to_ray();
    let pc = v.coeffs.clone();
    let vray = RayPolynomial::new(pc.len() - 1, move |_, rho, out| {
        for (j, c) in pc.iter().enumerate() {
            out[j] = if j == 0 {
                *c
            } else if rho.is_infinite() {
                0.0
            } else {
                c * rho.powi(-(j as i32))
            };
        }
    });
    let q = v.derivative_sq();
    let grad = |with_err: bool| {
        let body = k.clone();
        let q = q.clone();
        RayPolynomial::new(q.len() - 1, move |theta, rho, out| {
            let (g, e) = gauge_grad_sq(&body, theta);
            let w = if with_err { e } else { g };
            for (j, c) in q.iter().enumerate() {
                out[j] = if j == 0 {
                    c * w
                } else if rho.is_infinite() {
                    0.0
                } else {
                    c * w * rho.powi(-(j as i32))
                };
            }
        })
    };
    let e = expectations(k, &[fpoly.mul(&vray), grad(false), grad(true)], rule)?;
    let (num, mut den, fd) = (e[0], e[1], e[2]);
    den.err += fd.value.abs();
    if !(den.value > 0.0) {
        return Err(failure(
            "Dirichlet energy of the test function vanished",
            den.err,
        ));
    }
    if den.err > 1e-3 * den.value {
        return Err(failure(
            "gauge gradient finite differences",
            den.err / den.value,
        ));
    }
    Ok(num.times(&num).ratio(&den))
}

/// `int_0^y e^(t^2/2) dt` by its power series (all terms share a sign).
pub(crate) fn erfi_integral(y: f64) -> f64 {
    let y2 = y * y;
    let mut term = y;
    let mut sum = y;
    let mut k = 0.0;
    loop {
        term *= y2 / (2.0 * (k + 1.0));
        let add = term / (2.0 * k + 3.0);
        sum += add;
        k += 1.0;
        if add.abs() <= 1e-17 * sum.abs() || k > 5000.0 {
            return sum;
        }
    }
}

/// A continuous function on `[lo, hi]` split into monotone pieces, with its
/// decreasing rearrangement against the standard Gaussian.
pub struct Rearrangement<'a> {
    f: &'a (dyn Fn(f64) -> f64 + Sync),
    pieces: Vec<(f64, f64, bool)>,
    min: f64,
    max: f64,
    /// Gaussian mass of the domain.
    pub mass: f64,
}

const PIECE_SAMPLES: usize = 1024;

impl<'a> Rearrangement<'a> {
    /// Extrema are located on a uniform sample and refined by Brent;
    /// oscillation finer than the sample is not resolved.
    pub fn new(f: &'a (dyn Fn(f64) -> f64 + Sync), lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(format!(
                "rearrangement needs a finite interval, got [{lo}, {hi}]"
            )));
        }
        let m = PIECE_SAMPLES;
        let xs: Vec<f64> = (0..=m)
            .map(|i| lo + (hi - lo) * i as f64 / m as f64)
            .collect();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(failure(
                "source term is not finite on the interval",
                f64::INFINITY,
            ));
        }
        let mut cuts = vec![lo];
        let mut dir = 0i8;
        for i in 1..=m {
            let d = ys[i] - ys[i - 1];
            let s = if d > 0.0 {
                1
            } else if d < 0.0 {
                -1
            } else {
                0
            };
            if s != 0 && dir != 0 && s != dir {
                let (a, b) = (xs[i.saturating_sub(2)], xs[i]);
                let sign = if dir > 0 { -1.0 } else { 1.0 };
                let (x, _, _) = brent_min(|x| sign * f(x), a, b, 1e-13, 200);
                if x > *cuts.last().unwrap() {
                    cuts.push(x);
                }
            }
            if s != 0 {
                dir = s;
            }
        }
        cuts.push(hi);
        let mut pieces = Vec::new();
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for w in cuts.windows(2) {
            let (fa, fb) = (f(w[0]), f(w[1]));
            min = min.min(fa).min(fb);
            max = max.max(fa).max(fb);
            pieces.push((w[0], w[1], fb >= fa));
        }
        Ok(Self {
            f,
            pieces,
            min,
            max,
            mass: psi(hi) - psi(lo),
        })
    }

    /// Gaussian mass of `{f > s}`.
    pub fn distribution(&self, s: f64) -> f64 {
        let f = self.f;
        self.pieces
            .iter()
            .map(|&(a, b, up)| {
                let (fa, fb) = (f(a), f(b));
                let (low_end, high_end) = if up { (fa, fb) } else { (fb, fa) };
                if high_end <= s {
                    0.0
                } else if low_end > s {
                    psi(b) - psi(a)
                } else {
                    let x = brent_root(
                        |x| f(x) - s,
                        a,
                        b,
                        1e-15 * (1.0 + a.abs().max(b.abs())),
                        200,
                    )
                    .unwrap_or(a);
                    if up {
                        psi(b) - psi(x)
                    } else {
                        psi(x) - psi(a)
                    }
                }
            })
            .sum()
    }

    /// `f#(mu) = inf { s : mass{f > s} <= mu }`, the nonincreasing
    /// rearrangement in the mass variable.
    pub fn sharp(&self, mu: f64) -> f64 {
        if self.min == self.max || mu <= 0.0 {
            return self.max;
        }
        let xtol = 1e-15 * (1.0 + self.max.abs().max(self.min.abs()));
        brent_root(
            |s| self.distribution(s) - mu,
            self.min - 1.0,
            self.max,
            xtol,
            300,
        )
        .unwrap_or(self.max)
    }

    /// Rearrangement onto the half-line `(-inf, psi^-1(mass)]`.
    pub fn star(&self, x: f64) -> f64 {
        self.sharp(psi(x))
    }
}

/// One point of the Talenti comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TalentiPoint {
    pub x: f64,
    pub u_star: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TalentiReport {
    pub interval: (f64, f64),
    pub f_label: String,
    /// `gamma_1(K)`.
    pub measure: f64,
    /// Right end of the comparison half-line.
    pub h: f64,
    /// Largest `u* - v` over the grid.
    pub max_excess: f64,
    pub argmax: f64,
    /// Smallest sampled `u` on `K`.
    pub min_u: f64,
    pub points: Vec<TalentiPoint>,
}

/// Levels used for the comparison grid.
pub const TALENTI_LEVELS: usize = 160;

/// Compares the Ehrhard rearrangement `u*` of the solution of `L u = -F`
/// on `K = [-w1, w2]` (`u = 0` on the boundary) with the solution `v` of
/// `L v = -F*` on the half-line of equal measure. `w1 = inf` gives a
/// half-line `K`, truncated at `w2 - 12`.
pub fn talenti_1d(
    w1: f64,
    w2: f64,
    f: &(dyn Fn(f64) -> f64 + Sync),
    label: &str,
) -> Result<TalentiReport> {
    if !(w2.is_finite() && w1 > -w2) || w1.is_nan() {
        return Err(domain(format!(
            "interval [-{w1}, {w2}] is empty or unbounded on the right"
        )));
    }
    if (w1.is_finite() && w1.abs() > 10.0) || w2.abs() > 10.0 {
        return Err(domain("interval endpoints beyond 10 are out of range"));
    }
    let half_line = w1.is_infinite();
    let lo = if half_line { w2 - HALFSPACE_DEPTH } else { -w1 };
    let hi = w2;
    let rf = Rearrangement::new(f, lo, hi)?;
    if rf.min < 0.0 {
        return Err(domain("source term must be nonnegative"));
    }
    let tol = tight();
    let d = erfi_integral;
    // int_lo^x e^(-s^2/2) f(s) (D(y) - D(s)) ds.
    let moment = |x: f64, y: f64| -> Result<f64> {
        let (v, e, ok) = integrate1(|s| (-0.5 * s * s).exp() * f(s) * (d(y) - d(s)), lo, x, tol);
        if ok {
            Ok(v)
        } else {
            Err(failure("Talenti solution integral", e))
        }
    };
    let c = if half_line {
        0.0
    } else {
        moment(hi, hi)? / (d(hi) - d(lo))
    };
    let g = |x: f64| integrate1(|s| (-0.5 * s * s).exp() * f(s), lo, x, tol).0;
    // u(x) = C (D(x) - D(lo)) - int_lo^x e^(-s^2/2) f(s) (D(x) - D(s)) ds, or
    // for a half-line u(x) = int_lo^hi e^(-s^2/2) f(s) (D(hi) - D(max(x,s))) ds.
    let u = |x: f64| -> Result<f64> {
        if half_line {
            Ok(moment(hi, hi)? - moment(x, hi)? + (d(hi) - d(x)) * g(x))
        } else {
            Ok(c * (d(x) - d(lo)) - moment(x, x)?)
        }
    };

    let a = rf.mass;
    let h = psi_inv_raw(a.min(1.0));
    // Level sets {u > s}: (x_l, x_r) around the maximizer, or (-inf, x_r).
    let mut levels: Vec<(f64, f64)> = Vec::new();
    if half_line {
        // The far tail adds nothing visible; sample the last eight units.
        let start = hi - 8.0;
        for i in 0..TALENTI_LEVELS {
            let x = start + (hi - start) * i as f64 / TALENTI_LEVELS as f64;
            levels.push((u(x)?, psi(x)));
        }
    } else {
        let xm = brent_root(|x| c - g(x), lo, hi, 1e-14, 300)
            .ok_or_else(|| failure("locating the maximum of u", f64::NAN))?;
        let pts: Result<Vec<(f64, f64)>> = (0..TALENTI_LEVELS)
            .into_par_iter()
            .map(|i| {
                let xl = lo + (xm - lo) * i as f64 / TALENTI_LEVELS as f64;
                let s = if i == 0 { 0.0 } else { u(xl)? };
                let xr = if i == 0 {
                    hi
                } else {
                    let mut err = None;
                    let r = brent_root(
                        |x| match u(x) {
                            Ok(v) => v - s,
                            Err(e) => {
                                err = Some(e);
                                0.0
                            }
                        },
                        xm,
                        hi,
                        1e-14,
                        300,
                    );
                    if let Some(e) = err {
                        return Err(e);
                    }
                    r.ok_or_else(|| failure("level set of u", f64::NAN))?
                };
                Ok((s, psi(xr) - psi(xl)))
            })
            .collect();
        levels = pts?;
    }
    // v(x) = int_{-inf}^h e^(-s^2/2) F*(s) (D(h) - D(max(x, s))) ds, split at
    // x; the part below x is truncated 12 units down like the half-space.
    let v = |x: f64| -> Result<f64> {
        if x >= h {
            return Ok(0.0);
        }
        let weight = |t: f64| (-0.5 * t * t).exp() * rf.star(t);
        let (head, e1, ok1) = integrate1(weight, x - HALFSPACE_DEPTH, x, Tol::new(0.0, 1e-13));
        let (rest, e2, ok2) = integrate1(|t| weight(t) * (d(h) - d(t)), x, h, Tol::new(0.0, 1e-13));
        if !(ok1 && ok2) {
            return Err(failure("Talenti comparison integral", e1.max(e2)));
        }
        Ok((d(h) - d(x)) * head + rest)
    };
    let points: Result<Vec<TalentiPoint>> = levels
        .par_iter()
        .filter(|(_, m)| *m > 0.0)
        .map(|&(s, m)| {
            let x = psi_inv_raw(m.min(a));
            Ok(TalentiPoint {
                x,
                u_star: s,
                v: v(x)?,
            })
        })
        .collect();
    let points = points?;
    let (mut max_excess, mut argmax) = (f64::NEG_INFINITY, h);
    for p in &points {
        if p.u_star - p.v > max_excess {
            max_excess = p.u_star - p.v;
            argmax = p.x;
        }
    }
    let mut min_u = f64::INFINITY;
    for i in 0..=64 {
        let x = lo + (hi - lo) * i as f64 / 64.0;
        min_u = min_u.min(u(x)?);
    }
    Ok(TalentiReport {
        interval: (-w1, w2),
        f_label: label.to_string(),
        measure: a,
        h,
        max_excess,
        argmax,
        min_u,
        points,
    })
}
