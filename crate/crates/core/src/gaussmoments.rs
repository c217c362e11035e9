//! Gaussian measure and moments of bodies in polar coordinates.
//!
//! For `f(t theta) = sum_j a_j(theta) t^j`,
//! `int_K f dgamma = c_{n-1}^-1 * mean_theta sum_j a_j(theta) J_{n+j-1}(rho(theta))`,
//! where the mean is over the uniform probability on the sphere. Spheres are
//! integrated adaptively (`n <= 3`) or by random directions (`n = 4`).

use crate::body::SupportBody;
use crate::error::{failure, invalid, Error, Result};
use crate::quad::{integrate_dyn, Tol};
use crate::specfun::{c_raw, j_raw, phi_raw};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Closed,
    Quadrature,
    MonteCarlo,
}

impl Method {
    fn join(self, other: Method) -> Method {
        use Method::*;
        match (self, other) {
            (MonteCarlo, _) | (_, MonteCarlo) => MonteCarlo,
            (Quadrature, _) | (_, Quadrature) => Quadrature,
            _ => Closed,
        }
    }
}

/// A value with a claimed absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
    pub method: Method,
    pub n_samples: Option<u64>,
    pub seed: Option<u64>,
}

impl Estimate {
    pub fn closed(value: f64) -> Self {
        Self {
            value,
            err: 0.0,
            method: Method::Closed,
            n_samples: None,
            seed: None,
        }
    }

    pub fn quadrature(value: f64, err: f64) -> Self {
        Self {
            value,
            err,
            method: Method::Quadrature,
            n_samples: None,
            seed: None,
        }
    }

    fn derived(&self, other: &Estimate, value: f64, err: f64) -> Self {
        Self {
            value,
            err,
            method: self.method.join(other.method),
            n_samples: self.n_samples.or(other.n_samples),
            seed: self.seed.or(other.seed),
        }
    }

    /// `self / other`, errors propagated to first order.
    pub fn ratio(&self, other: &Estimate) -> Estimate {
        let v = self.value / other.value;
        let e = self.err / other.value.abs()
            + (self.value * other.err).abs() / (other.value * other.value);
        self.derived(other, v, e)
    }

    pub fn plus(&self, other: &Estimate) -> Estimate {
        self.derived(other, self.value + other.value, self.err + other.err)
    }

    pub fn minus(&self, other: &Estimate) -> Estimate {
        self.derived(other, self.value - other.value, self.err + other.err)
    }

    pub fn times(&self, other: &Estimate) -> Estimate {
        let e = self.err * other.value.abs() + other.err * self.value.abs() + self.err * other.err;
        self.derived(other, self.value * other.value, e)
    }

    pub fn scaled(&self, c: f64) -> Estimate {
        Estimate {
            value: c * self.value,
            err: c.abs() * self.err,
            ..*self
        }
    }

    /// `|self - other| <= k (err_self + err_other)`.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        (self.value - other.value).abs() <= k * (self.err + other.err)
    }
}

/// Settings for the spherical integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereRule {
    /// Absolute and relative target per integrated channel.
    pub tol: f64,
    /// Panel budget of each adaptive pass.
    pub max_panels: usize,
    /// Directions drawn in dimension 4.
    pub mc_directions: usize,
    pub seed: u64,
    /// An unconverged result whose error exceeds this is a failure.
    pub fail_tol: f64,
}

impl Default for SphereRule {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_panels: 20_000,
            mc_directions: 200_000,
            seed: 20_240_917,
            fail_tol: 1e-6,
        }
    }
}

type CoeffFn = dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync;

/// A function known along rays: `f(t theta) = sum_j a_j(theta, rho(theta)) t^j`
/// for `t >= 0`. The oracle also receives `rho(theta)` so that gauge powers
/// (`||t theta||_K = t / rho`) are expressible.
#[derive(Clone)]
pub struct RayPolynomial {
    degree: usize,
    f: Arc<CoeffFn>,
}

impl std::fmt::Debug for RayPolynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RayPolynomial(degree {})", self.degree)
    }
}

impl RayPolynomial {
    /// `f(theta, rho, out)` writes `degree + 1` coefficients (zeroed on entry).
    pub fn new(degree: usize, f: impl Fn(&[f64], f64, &mut [f64]) + Send + Sync + 'static) -> Self {
        Self {
            degree,
            f: Arc::new(f),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficients(&self, theta: &[f64], rho: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.degree + 1];
        (self.f)(theta, rho, &mut out);
        out
    }

    /// Value at `t theta`.
    pub fn at(&self, theta: &[f64], rho: f64, t: f64) -> f64 {
        self.coefficients(theta, rho)
            .iter()
            .rev()
            .fold(0.0, |acc, a| acc * t + a)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(0, move |_, _, out| out[0] = c)
    }

    /// `|x|^m`.
    pub fn norm_pow(m: usize) -> Self {
        Self::new(m, move |_, _, out| out[m] = 1.0)
    }

    /// `||x||_K^j`.
    pub fn gauge_pow(j: usize) -> Self {
        Self::new(j, move |_, rho, out| {
            out[j] = if rho.is_infinite() {
                0.0
            } else {
                rho.powi(-(j as i32))
            };
        })
    }

    /// `<x, dir>^j`.
    pub fn directional(dir: &[f64], j: usize) -> Self {
        let dir = dir.to_vec();
        Self::new(j, move |theta, _, out| {
            let d: f64 = theta.iter().zip(&dir).map(|(a, b)| a * b).sum();
            out[j] = d.powi(j as i32);
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        let f = self.f.clone();
        Self::new(self.degree, move |th, rho, out| {
            f(th, rho, out);
            out.iter_mut().for_each(|x| *x *= c);
        })
    }

    pub fn add(&self, other: &RayPolynomial) -> Self {
        self.lin(other, 1.0)
    }

    pub fn sub(&self, other: &RayPolynomial) -> Self {
        self.lin(other, -1.0)
    }

    fn lin(&self, other: &RayPolynomial, s: f64) -> Self {
        let (f, g) = (self.f.clone(), other.f.clone());
        let (df, dg) = (self.degree, other.degree);
        Self::new(df.max(dg), move |th, rho, out| {
            let mut a = vec![0.0; df + 1];
            let mut b = vec![0.0; dg + 1];
            f(th, rho, &mut a);
            g(th, rho, &mut b);
            for (i, x) in a.iter().enumerate() {
                out[i] += x;
            }
            for (i, x) in b.iter().enumerate() {
                out[i] += s * x;
            }
        })
    }

    pub fn mul(&self, other: &RayPolynomial) -> Self {
        let (f, g) = (self.f.clone(), other.f.clone());
        let (df, dg) = (self.degree, other.degree);
        Self::new(df + dg, move |th, rho, out| {
            let mut a = vec![0.0; df + 1];
            let mut b = vec![0.0; dg + 1];
            f(th, rho, &mut a);
            g(th, rho, &mut b);
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
        })
    }
}

/// A polynomial in `n` variables with real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    n: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl MultiPoly {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::monomial(n, &vec![0; n], c)
    }

    /// `x_i` (zero-based).
    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Self::monomial(n, &e, 1.0)
    }

    pub fn monomial(n: usize, exps: &[u32], c: f64) -> Self {
        assert_eq!(
            exps.len(),
            n,
            "exponent vector length must equal the dimension"
        );
        let mut p = Self::zero(n);
        if c != 0.0 {
            p.terms.insert(exps.to_vec(), c);
        }
        p
    }

    /// `|x|^2 / 2`.
    pub fn half_norm_sq(n: usize) -> Self {
        (0..n).fold(Self::zero(n), |acc, i| {
            acc.add(&Self::var(n, i).mul(&Self::var(n, i)).scale(0.5))
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    fn insert(&mut self, e: Vec<u32>, c: f64) {
        let v = self.terms.entry(e).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.terms.retain(|_, c| *c != 0.0);
        }
    }

    pub fn add(&self, o: &MultiPoly) -> Self {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.insert(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, o: &MultiPoly) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.n);
        if s != 0.0 {
            for (e, c) in &self.terms {
                out.terms.insert(e.clone(), c * s);
            }
        }
        out
    }

    pub fn mul(&self, o: &MultiPoly) -> Self {
        let mut out = Self::zero(self.n);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.insert(e, c1 * c2);
            }
        }
        out
    }

    /// `d/dx_i`.
    pub fn deriv(&self, i: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = e.clone();
                f[i] -= 1;
                out.insert(f, c * e[i] as f64);
            }
        }
        out
    }

    pub fn gradient(&self) -> Vec<MultiPoly> {
        (0..self.n).map(|i| self.deriv(i)).collect()
    }

    pub fn hessian(&self) -> Vec<Vec<MultiPoly>> {
        let g = self.gradient();
        g.iter()
            .map(|gi| (0..self.n).map(|j| gi.deriv(j)).collect())
            .collect()
    }

    pub fn laplacian(&self) -> Self {
        (0..self.n).fold(Self::zero(self.n), |acc, i| {
            acc.add(&self.deriv(i).deriv(i))
        })
    }

    /// `L u = Delta u - <x, grad u>`.
    pub fn ou_generator(&self) -> Self {
        let mut drift = Self::zero(self.n);
        for i in 0..self.n {
            drift = drift.add(&Self::var(self.n, i).mul(&self.deriv(i)));
        }
        self.laplacian().sub(&drift)
    }

    /// `|grad u|^2`.
    pub fn grad_norm_sq(&self) -> Self {
        self.gradient()
            .iter()
            .fold(Self::zero(self.n), |acc, g| acc.add(&g.mul(g)))
    }

    /// Hilbert-Schmidt norm squared of the Hessian.
    pub fn hessian_norm_sq(&self) -> Self {
        self.hessian()
            .iter()
            .flatten()
            .fold(Self::zero(self.n), |acc, h| acc.add(&h.mul(h)))
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Every monomial has even total degree.
    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|e| e.iter().sum::<u32>() % 2 == 0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(x)
                    .map(|(k, xi)| xi.powi(*k as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// Coefficients of `t -> p(t theta)`.
    pub fn ray_coefficients(&self, theta: &[f64], out: &mut [f64]) {
        for (e, c) in &self.terms {
            let d = e.iter().sum::<u32>() as usize;
            out[d] += c * e
                .iter()
                .zip(theta)
                .map(|(k, t)| t.powi(*k as i32))
                .product::<f64>();
        }
    }

    pub fn to_ray(&self) -> RayPolynomial {
        let p = self.clone();
        RayPolynomial::new(self.degree(), move |th, _, out| p.ray_coefficients(th, out))
    }
}

/// Mean over the unit sphere of channels written by `f`. Channels
/// `[0, m)` are integrated to tolerance; channels `[m, 2m)` carry
/// nonnegative per-direction error terms added to the matching value's
/// error. Returns `(values, errors, samples)`.
fn sphere_mean<F>(
    n: usize,
    m: usize,
    rule: &SphereRule,
    body: &SupportBody,
    f: &F,
) -> Result<(Vec<f64>, Vec<f64>, Option<u64>)>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let w = 2 * m;
    let tol = Tol::new(rule.tol, rule.tol).with_max_panels(rule.max_panels);
    let check = |values: &[f64], errs: &[f64], converged: bool| -> Result<()> {
        if values.iter().chain(errs).any(|x| !x.is_finite()) {
            return Err(failure(
                "spherical integration produced a non-finite value",
                f64::INFINITY,
            ));
        }
        if !converged {
            for (v, e) in values.iter().zip(errs) {
                if *e > rule.fail_tol * v.abs().max(1.0) {
                    return Err(failure("spherical integration", *e));
                }
            }
        }
        Ok(())
    };
    match n {
        1 => {
            let mut a = vec![0.0; w];
            let mut b = vec![0.0; w];
            f(&[1.0], &mut a);
            f(&[-1.0], &mut b);
            let values: Vec<f64> = (0..m).map(|i| 0.5 * (a[i] + b[i])).collect();
            let errs: Vec<f64> = (0..m).map(|i| 0.5 * (a[m + i] + b[m + i])).collect();
            check(&values, &errs, true)?;
            Ok((values, errs, None))
        }
        2 => {
            let mut breaks = vec![PI];
            breaks.extend(body.planar_kinks().iter().map(|t| t.rem_euclid(2.0 * PI)));
            let g = |t: f64, out: &mut [f64]| f(&[t.cos(), t.sin()], out);
            let r = integrate_dyn(&g, 0.0, 2.0 * PI, &breaks, w, m, tol, false);
            let s = 1.0 / (2.0 * PI);
            let values: Vec<f64> = (0..m).map(|i| s * r.value[i]).collect();
            let errs: Vec<f64> = (0..m)
                .map(|i| s * (r.err[i] + r.value[m + i].abs()))
                .collect();
            check(&values, &errs, r.converged)?;
            Ok((values, errs, None))
        }
        3 => {
            // dS = dz dphi on the unit sphere.
            let inner_tol =
                Tol::new(0.1 * rule.tol, 0.1 * rule.tol).with_max_panels(rule.max_panels);
            let failed = std::sync::atomic::AtomicBool::new(false);
            let outer = |z: f64, out: &mut [f64]| {
                let s = (1.0 - z * z).max(0.0).sqrt();
                let g = |t: f64, o: &mut [f64]| f(&[s * t.cos(), s * t.sin(), z], o);
                let mut breaks = vec![PI];
                breaks.extend(body.kinks_at_height(z));
                let r = integrate_dyn(&g, 0.0, 2.0 * PI, &breaks, w, m, inner_tol, false);
                if !r.converged {
                    failed.store(true, std::sync::atomic::Ordering::Relaxed);
                }
                for i in 0..m {
                    out[i] = r.value[i];
                    out[m + i] = r.value[m + i].abs() + r.err[i];
                }
            };
            let mut zbreaks = vec![0.0];
            zbreaks.extend(body.kink_heights());
            let r = integrate_dyn(&outer, -1.0, 1.0, &zbreaks, w, m, tol, true);
            let s = 1.0 / (4.0 * PI);
            let values: Vec<f64> = (0..m).map(|i| s * r.value[i]).collect();
            let errs: Vec<f64> = (0..m)
                .map(|i| s * (r.err[i] + r.value[m + i].abs()))
                .collect();
            check(&values, &errs, r.converged && !failed.into_inner())?;
            Ok((values, errs, None))
        }
        4 => {
            let (values, errs) = random_direction_mean(n, w, m, rule.mc_directions, rule.seed, f);
            check(&values, &errs, true)?;
            Ok((values, errs, Some(rule.mc_directions as u64)))
        }
        _ => Err(Error::Unsupported(format!(
            "Gaussian integration in dimension {n} (at most 4)"
        ))),
    }
}

const SHARD: usize = 8192;

/// Uniform directions from per-shard ChaCha streams; error is three
/// standard errors plus the mean error channel.
fn random_direction_mean<F>(
    n: usize,
    w: usize,
    m: usize,
    count: usize,
    seed: u64,
    f: &F,
) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let shards = count.div_ceil(SHARD);
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard as u64);
            let take = SHARD.min(count - shard * SHARD);
            let mut sum = vec![0.0; w];
            let mut sq = vec![0.0; m];
            let mut x = vec![0.0; n];
            let mut out = vec![0.0; w];
            for _ in 0..take {
                let r = loop {
                    for xi in x.iter_mut() {
                        *xi = StandardNormal.sample(&mut rng);
                    }
                    let r = x.iter().map(|t| t * t).sum::<f64>().sqrt();
                    if r > 0.0 {
                        break r;
                    }
                };
                x.iter_mut().for_each(|t| *t /= r);
                out.iter_mut().for_each(|o| *o = 0.0);
                f(&x, &mut out);
                for i in 0..w {
                    sum[i] += out[i];
                }
                for i in 0..m {
                    sq[i] += out[i] * out[i];
                }
            }
            (sum, sq)
        })
        .collect();
    let mut sum = vec![0.0; w];
    let mut sq = vec![0.0; m];
    for (s, q) in partial {
        for i in 0..w {
            sum[i] += s[i];
        }
        for i in 0..m {
            sq[i] += q[i];
        }
    }
    let nf = count as f64;
    let values: Vec<f64> = (0..m).map(|i| sum[i] / nf).collect();
    let errs: Vec<f64> = (0..m)
        .map(|i| {
            let var = (sq[i] / nf - values[i] * values[i]).max(0.0);
            3.0 * (var / nf).sqrt() + (sum[m + i] / nf).abs()
        })
        .collect();
    (values, errs)
}

fn estimates(values: Vec<f64>, errs: Vec<f64>, samples: Option<u64>, seed: u64) -> Vec<Estimate> {
    values
        .into_iter()
        .zip(errs)
        .map(|(value, err)| Estimate {
            value,
            err,
            method: if samples.is_some() {
                Method::MonteCarlo
            } else {
                Method::Quadrature
            },
            n_samples: samples,
            seed: samples.map(|_| seed),
        })
        .collect()
}

/// Fails early (with the body's own error) when its radial oracle cannot be
/// evaluated, instead of integrating NaNs.
fn probe(k: &SupportBody) -> Result<()> {
    let n = k.dim();
    let theta: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    k.radial(&theta).map(|_| ())
}

/// `sum_j a_j J_{n-1+j}(rho) / c_{n-1}` for each polynomial.
fn ray_values(
    n: usize,
    fs: &[RayPolynomial],
    theta: &[f64],
    rho: f64,
    js: &mut [f64],
    out: &mut [f64],
) {
    let cn = c_raw(n as f64 - 1.0);
    for (j, slot) in js.iter_mut().enumerate() {
        let p = (n + j) as f64 - 1.0;
        *slot = if rho.is_infinite() {
            c_raw(p)
        } else {
            j_raw(p, rho)
        };
    }
    for (f, o) in fs.iter().zip(out.iter_mut()) {
        let a = f.coefficients(theta, rho);
        *o = a.iter().zip(js.iter()).map(|(a, j)| a * j).sum::<f64>() / cn;
    }
}

/// `int_K f dgamma` for each `f` (unnormalized).
pub fn ray_integrals(
    k: &SupportBody,
    fs: &[RayPolynomial],
    rule: &SphereRule,
) -> Result<Vec<Estimate>> {
    probe(k)?;
    let n = k.dim();
    let m = fs.len();
    let maxdeg = fs.iter().map(|f| f.degree()).max().unwrap_or(0);
    let f = |theta: &[f64], out: &mut [f64]| {
        let Ok(r) = k.radial(theta) else {
            out.iter_mut().for_each(|o| *o = f64::NAN);
            return;
        };
        let mut js = vec![0.0; maxdeg + 1];
        ray_values(n, fs, theta, r.value, &mut js, &mut out[..m]);
        if r.err > 0.0 && r.value.is_finite() {
            let mut low = vec![0.0; m];
            ray_values(n, fs, theta, (r.value - r.err).max(0.0), &mut js, &mut low);
            for i in 0..m {
                out[m + i] = (out[i] - low[i]).abs();
            }
        }
    };
    let (values, errs, samples) = sphere_mean(n, m, rule, k, &f)?;
    Ok(estimates(values, errs, samples, rule.seed))
}

pub fn ray_integral(k: &SupportBody, f: &RayPolynomial, rule: &SphereRule) -> Result<Estimate> {
    Ok(ray_integrals(k, std::slice::from_ref(f), rule)?[0])
}

/// `gamma(K)` in closed form where available.
pub fn closed_measure(k: &SupportBody) -> Option<f64> {
    if k.is_whole() {
        return Some(1.0);
    }
    if let Some((kk, r)) = k.round_params() {
        let p = kk as f64 - 1.0;
        return Some(j_raw(p, r) / c_raw(p));
    }
    k.box_params()
        .map(|a| a.iter().map(|&x| phi_raw(x)).product())
}

/// `gamma(K)`, closed form for round cylinders and boxes, quadrature
/// otherwise.
pub fn measure(k: &SupportBody, rule: &SphereRule) -> Result<Estimate> {
    match closed_measure(k) {
        Some(v) => Ok(Estimate::closed(v)),
        None => measure_quadrature(k, rule),
    }
}

/// `gamma(K)` by the spherical rule even when a closed form exists.
pub fn measure_quadrature(k: &SupportBody, rule: &SphereRule) -> Result<Estimate> {
    ray_integral(k, &RayPolynomial::constant(1.0), rule)
}

/// Normalized expectations `E_K f` over the Gaussian restricted to `K`,
/// followed by `gamma(K)` as the last entry.
pub fn expectations(
    k: &SupportBody,
    fs: &[RayPolynomial],
    rule: &SphereRule,
) -> Result<Vec<Estimate>> {
    let mut all = fs.to_vec();
    all.push(RayPolynomial::constant(1.0));
    let raw = ray_integrals(k, &all, rule)?;
    let a = *raw.last().expect("measure channel");
    if !(a.value > 0.0) {
        return Err(failure("expectation over a body of zero measure", a.err));
    }
    let mut out: Vec<Estimate> = raw[..fs.len()].iter().map(|e| e.ratio(&a)).collect();
    out.push(a);
    Ok(out)
}

/// Moments of the Gaussian restricted to `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentsBundle {
    /// `gamma(K)`.
    pub a: Estimate,
    /// `E|X|^2`.
    pub m2: Estimate,
    /// `E|X|^4`.
    pub m4: Estimate,
    /// `E||X||_K^2`.
    pub gk2: Estimate,
    /// `E||X||_K`.
    pub gk1: Estimate,
    /// `E||X||_K^4`.
    pub gk4: Estimate,
    /// `Var |X|^2`.
    pub var_x2: Estimate,
    /// `E<X, theta>^2`.
    pub dir2: Estimate,
    /// `E<X, theta>`.
    pub dir1: Estimate,
}

pub fn moments_bundle(k: &SupportBody, theta: &[f64], rule: &SphereRule) -> Result<MomentsBundle> {
    if theta.len() != k.dim() {
        return Err(Error::DimensionMismatch {
            left: k.dim(),
            right: theta.len(),
        });
    }
    let nt = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
    if !(nt > 0.0) {
        return Err(invalid("moment direction must be nonzero"));
    }
    let dir: Vec<f64> = theta.iter().map(|t| t / nt).collect();
    let fs = [
        RayPolynomial::norm_pow(2),
        RayPolynomial::norm_pow(4),
        RayPolynomial::gauge_pow(2),
        RayPolynomial::gauge_pow(1),
        RayPolynomial::gauge_pow(4),
        RayPolynomial::directional(&dir, 2),
        RayPolynomial::directional(&dir, 1),
    ];
    let e = expectations(k, &fs, rule)?;
    let m2 = e[0];
    let m4 = e[1];
    let var_x2 = m4.minus(&m2.times(&m2));
    Ok(MomentsBundle {
        a: e[7],
        m2,
        m4,
        gk2: e[2],
        gk1: e[3],
        gk4: e[4],
        var_x2,
        dir2: e[5],
        dir1: e[6],
    })
}

/// `mu_p(K)` for the density proportional to `exp(-|x|^p / p)`, `p >= 1`.
///
/// Along a ray the mass is a regularized incomplete gamma function:
/// `int_0^rho t^(n-1) e^(-t^p/p) dt / int_0^inf (same) = P(n/p, rho^p/p)`,
/// evaluated as `J_q(sqrt(2x)) / c_q` with `q = 2n/p - 1`, `x = rho^p/p`.
pub fn measure_general(k: &SupportBody, p: f64, rule: &SphereRule) -> Result<Estimate> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid(format!(
            "radial potential needs finite p >= 1, got {p}"
        )));
    }
    probe(k)?;
    let n = k.dim();
    let q = 2.0 * n as f64 / p - 1.0;
    let cq = c_raw(q);
    let mass = move |rho: f64| {
        if rho.is_infinite() {
            1.0
        } else {
            let x = rho.powf(p) / p;
            (j_raw(q, (2.0 * x).sqrt()) / cq).min(1.0)
        }
    };
    let f = |theta: &[f64], out: &mut [f64]| match k.radial(theta) {
        Ok(r) => {
            out[0] = mass(r.value);
            if r.err > 0.0 && r.value.is_finite() {
                out[1] = out[0] - mass((r.value - r.err).max(0.0));
            }
        }
        Err(_) => out[0] = f64::NAN,
    };
    let (values, errs, samples) = sphere_mean(n, 1, rule, k, &f)?;
    Ok(estimates(values, errs, samples, rule.seed)[0])
}

const MC_SHARD: usize = 65_536;

/// Fraction of `count` standard Gaussian samples inside `K`, with an error of
/// three binomial standard errors. Shard `i` draws from the ChaCha stream
/// `(seed, i)`, so the result does not depend on scheduling.
pub fn mc_measure(k: &SupportBody, count: usize, seed: u64) -> Result<Estimate> {
    if count == 0 {
        return Err(invalid("Monte Carlo needs at least one sample"));
    }
    probe(k)?;
    let n = k.dim();
    let shards = count.div_ceil(MC_SHARD);
    let hits: Result<Vec<u64>> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard as u64);
            let take = MC_SHARD.min(count - shard * MC_SHARD);
            let mut x = vec![0.0; n];
            let mut inside = 0u64;
            for _ in 0..take {
                for xi in x.iter_mut() {
                    *xi = StandardNormal.sample(&mut rng);
                }
                if k.contains(&x)? {
                    inside += 1;
                }
            }
            Ok(inside)
        })
        .collect();
    let hits: u64 = hits?.into_iter().sum();
    let nf = count as f64;
    let p = hits as f64 / nf;
    Ok(Estimate {
        value: p,
        err: 3.0 * (p * (1.0 - p) / nf).sqrt(),
        method: Method::MonteCarlo,
        n_samples: Some(count as u64),
        seed: Some(seed),
    })
}

/// Relative step of the one-sided differences in [`gamma_one`], in units
/// of the in-radius of `K`.
pub const GAMMA_ONE_STEP: f64 = 1e-2;

/// `gamma_1(K, L) = d/de gamma(K + e L)` at `e = 0+`.
///
/// Infinite when `L` is unbounded in a direction where `K` is bounded, since
/// `gamma(K + e L)` then jumps at `e = 0`.
///
/// One-sided differences at `h, h/2, h/4` are combined by two Richardson
/// levels (error `O(h^3)`). The reported error is the last extrapolation
/// change plus the amplified measure errors.
pub fn gamma_one(k: &SupportBody, l: &SupportBody, rule: &SphereRule) -> Result<Estimate> {
    if !k.is_symmetric() || !l.is_symmetric() {
        return Err(Error::Unsupported(
            "mixed measure of translated bodies".into(),
        ));
    }
    if k.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            left: k.dim(),
            right: l.dim(),
        });
    }
    if k.is_whole() {
        return Ok(Estimate::closed(0.0));
    }
    if l.span() < k.span() {
        return Ok(Estimate::closed(f64::INFINITY));
    }
    let r = k.inradius()?.value;
    let h = GAMMA_ONE_STEP * r.min(1.0 / GAMMA_ONE_STEP);
    let g0 = measure(k, rule)?;
    let mut d = [0.0; 3];
    let mut e = [0.0; 3];
    let mut method = g0.method;
    for (i, hi) in [h, h / 2.0, h / 4.0].into_iter().enumerate() {
        let kh = SupportBody::combine(&[(1.0, k), (hi, l)])?;
        let gh = measure(&kh, rule)?;
        method = method.join(gh.method);
        d[i] = (gh.value - g0.value) / hi;
        e[i] = (gh.err + g0.err) / hi;
    }
    let r1 = 2.0 * d[1] - d[0];
    let r2 = 2.0 * d[2] - d[1];
    let value = (4.0 * r2 - r1) / 3.0;
    let err = (value - r2).abs() + (e[0] + 6.0 * e[1] + 8.0 * e[2]) / 3.0;
    if !(err <= 1e-3 * value.abs().max(1e-3)) {
        return Err(failure("extrapolating the mixed measure", err));
    }
    Ok(Estimate {
        value,
        err,
        method: if method == Method::Closed {
            Method::Quadrature
        } else {
            method
        },
        n_samples: None,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::phi_raw;

    fn rule() -> SphereRule {
        SphereRule::default()
    }

    #[test]
    fn ball_and_strip_by_quadrature() {
        for r in [0.3, 1.0, 2.5] {
            let b = SupportBody::ball(2, r).unwrap();
            let e = measure_quadrature(&b, &rule()).unwrap();
            assert!(
                (e.value - (1.0 - (-0.5 * r * r).exp())).abs() < 1e-12,
                "{e:?}"
            );
        }
        for n in [1, 2, 3] {
            let s = SupportBody::strip(n, 0.8).unwrap();
            let e = measure_quadrature(&s, &rule()).unwrap();
            assert!((e.value - phi_raw(0.8)).abs() < 1e-10, "n={n} {e:?}");
        }
        let c = SupportBody::cylinder(3, 2, 1.2).unwrap();
        let e = measure_quadrature(&c, &rule()).unwrap();
        assert!((e.value - (1.0 - (-0.72f64).exp())).abs() < 1e-10, "{e:?}");
    }

    #[test]
    fn box_quadrature_matches_product() {
        for a in [vec![0.5, 1.5], vec![1.0, 0.4, 2.0]] {
            let b = SupportBody::boxed(&a).unwrap();
            let q = measure_quadrature(&b, &rule()).unwrap();
            let want: f64 = a.iter().map(|&x| phi_raw(x)).product();
            assert!((q.value - want).abs() < 1e-9, "{a:?} {q:?}");
            assert!((q.value - want).abs() <= q.err.max(1e-12) * 10.0 + 1e-10);
        }
    }

    #[test]
    fn gaussian_moments_of_whole_space() {
        for n in [1, 2, 3] {
            let w = SupportBody::whole(n).unwrap();
            let mut th = vec![0.0; n];
            th[0] = 1.0;
            let m = moments_bundle(&w, &th, &rule()).unwrap();
            assert!((m.m2.value - n as f64).abs() < 1e-10);
            assert!((m.m4.value - (n * (n + 2)) as f64).abs() < 1e-9);
            assert!((m.dir2.value - 1.0).abs() < 1e-10);
            assert!(m.dir1.value.abs() < 1e-10);
        }
    }

    #[test]
    fn multipoly_calculus() {
        let n = 2;
        let x = MultiPoly::var(n, 0);
        let y = MultiPoly::var(n, 1);
        let u = x.mul(&x).mul(&y).add(&y.scale(3.0));
        assert_eq!(u.degree(), 3);
        assert!(!u.is_even());
        assert_eq!(u.deriv(0), x.mul(&y).scale(2.0));
        let v = MultiPoly::half_norm_sq(3);
        assert_eq!(v.laplacian(), MultiPoly::constant(3, 3.0));
        // L(|x|^2/2) = n - |x|^2.
        let lv = v.ou_generator();
        assert!((lv.eval(&[1.0, 2.0, 0.5]) - (3.0 - 5.25)).abs() < 1e-14);
        assert!((v.hessian_norm_sq().eval(&[0.3, 0.1, 0.2]) - 3.0).abs() < 1e-14);
        let r = u.to_ray();
        let th = [0.6, 0.8];
        assert!((r.at(&th, 1.0, 1.7) - u.eval(&[0.6 * 1.7, 0.8 * 1.7])).abs() < 1e-13);
    }

    #[test]
    fn ray_polynomial_algebra() {
        let a = RayPolynomial::norm_pow(2);
        let b = RayPolynomial::gauge_pow(1);
        let c = a
            .mul(&b)
            .add(&RayPolynomial::constant(2.0))
            .sub(&b.scale(0.5));
        // At t theta with rho = 2: t^3/2 + 2 - t/4.
        let t: f64 = 1.3;
        assert!((c.at(&[1.0, 0.0], 2.0, t) - (t.powi(3) / 2.0 + 2.0 - t / 4.0)).abs() < 1e-14);
    }

    #[test]
    fn general_measure_reduces_to_gaussian_and_normalizes() {
        let b = SupportBody::ball(2, 1.3).unwrap();
        let g = measure_general(&b, 2.0, &rule()).unwrap();
        assert!((g.value - (1.0 - (-0.5f64 * 1.69).exp())).abs() < 1e-12);
        let w = SupportBody::whole(3).unwrap();
        assert_eq!(measure_general(&w, 3.0, &rule()).unwrap().value, 1.0);
        // Independent oracle: 1-D quadrature of the radial density in n = 2.
        let p = 3.0;
        let r: f64 = 1.1;
        let (num, _, _) = crate::quad::integrate1(
            |t: f64| t * (-t.powf(p) / p).exp(),
            0.0,
            r,
            Default::default(),
        );
        let (den, _, _) = crate::quad::integrate1(
            |t: f64| t * (-t.powf(p) / p).exp(),
            0.0,
            40.0,
            Default::default(),
        );
        let bb = SupportBody::ball(2, r).unwrap();
        let mu = measure_general(&bb, p, &rule()).unwrap();
        assert!(
            (mu.value - num / den).abs() < 1e-11,
            "{mu:?} vs {}",
            num / den
        );
    }

    #[test]
    fn monte_carlo_is_deterministic_and_close() {
        let b = SupportBody::ball(2, 1.0).unwrap();
        let e1 = mc_measure(&b, 100_000, 7).unwrap();
        let e2 = mc_measure(&b, 100_000, 7).unwrap();
        assert_eq!(e1, e2);
        let want = 1.0 - (-0.5f64).exp();
        assert!((e1.value - want).abs() <= e1.err);
        assert_eq!(
            mc_measure(&SupportBody::whole(3).unwrap(), 1000, 1)
                .unwrap()
                .value,
            1.0
        );
    }

    #[test]
    fn mixed_measure_of_balls_and_strips() {
        let r: f64 = 1.2;
        let b = SupportBody::ball(2, r).unwrap();
        let one = SupportBody::ball(2, 1.0).unwrap();
        let g = gamma_one(&b, &one, &rule()).unwrap();
        assert!((g.value - r * (-0.5 * r * r).exp()).abs() < 1e-7, "{g:?}");
        let s = SupportBody::strip(2, 0.6).unwrap();
        let g = gamma_one(&s, &one, &rule()).unwrap();
        let want = (2.0 / PI).sqrt() * (-0.18f64).exp();
        assert!((g.value - want).abs() < 1e-7, "{g:?}");
        assert!((g.value - want).abs() <= g.err + 1e-12);
    }

    #[test]
    fn mixed_measure_is_infinite_for_a_wider_span() {
        let b = SupportBody::ball(2, 1.0).unwrap();
        let s = SupportBody::strip(2, 0.5).unwrap();
        assert_eq!(gamma_one(&b, &s, &rule()).unwrap().value, f64::INFINITY);
        assert!(gamma_one(&s, &b, &rule()).unwrap().value.is_finite());
    }
}
