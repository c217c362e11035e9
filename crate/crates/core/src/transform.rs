//! Monotone transforms `F` applied to Gaussian measures before testing
//! concavity of `t -> F(gamma(K_t))`.
//!
//! The two integral transforms have the form
//! `F(a) = int_0^a exp(int_{C0}^t rate(s) ds) dt`. They are tabulated once in
//! the logit variable `v = log(a / (1 - a))`, where both the rate (times
//! `a(1-a)`) and the outer integrand stay bounded at the ends of `(0, 1)`.

use crate::cylinder::{argmin_k, perimeter_of_radius, phi_of_radius, radius_raw, radius_split};
use crate::error::{domain, failure, invalid, Result};
use crate::quad::{bisect, gk21, integrate, Tol};
use crate::specfun::{c_raw, g_raw, gauss_density, phi_inv_raw, phi_inv_split, psi_inv_raw};
use std::f64::consts::E;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformKind {
    PsiInv,
    PhiInv,
    /// `F` built from `min_k phi_k`.
    ConjectureF {
        n: usize,
        c0: f64,
    },
    /// `F` built from the proven weaker rate.
    WeakF {
        n: usize,
        c0: f64,
    },
    /// `a^p / p`, or `log a` at `p = 0`; concave iff `gamma^p` is (up to
    /// sign). The constant `-1/p` of the continuous family is dropped
    /// because subtracting it destroys the precision of small `a^p`.
    Power(f64),
    /// Cylinder radii glued along the perimeter minimizers.
    BadFunc {
        n: usize,
    },
}

/// Transform value with its error bound and derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformValue {
    pub value: f64,
    pub err: f64,
    pub slope: f64,
}

#[derive(Debug, Clone)]
pub struct Transform {
    kind: TransformKind,
    table: Option<Arc<ExpIntegralTable>>,
    glue: Option<Arc<GluedRadius>>,
}

impl Transform {
    pub fn psi_inv() -> Self {
        Self::plain(TransformKind::PsiInv)
    }

    pub fn phi_inv() -> Self {
        Self::plain(TransformKind::PhiInv)
    }

    pub fn power(p: f64) -> Self {
        Self::plain(TransformKind::Power(p))
    }

    fn plain(kind: TransformKind) -> Self {
        Self {
            kind,
            table: None,
            glue: None,
        }
    }

    pub fn conjecture(n: usize, c0: f64) -> Result<Self> {
        let table = ExpIntegralTable::build(n, c0, Rate::MinPhi)?;
        Ok(Self {
            kind: TransformKind::ConjectureF { n, c0 },
            table: Some(Arc::new(table)),
            glue: None,
        })
    }

    pub fn weak(n: usize, c0: f64) -> Result<Self> {
        let table = ExpIntegralTable::build(n, c0, Rate::Weak)?;
        Ok(Self {
            kind: TransformKind::WeakF { n, c0 },
            table: Some(Arc::new(table)),
            glue: None,
        })
    }

    pub fn bad_func(n: usize) -> Result<Self> {
        Ok(Self {
            kind: TransformKind::BadFunc { n },
            table: None,
            glue: Some(Arc::new(GluedRadius::build(n)?)),
        })
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn id(&self) -> String {
        match self.kind {
            TransformKind::PsiInv => "psi_inv".into(),
            TransformKind::PhiInv => "phi_inv".into(),
            TransformKind::ConjectureF { .. } => "conjecture_F".into(),
            TransformKind::WeakF { .. } => "weak_F".into(),
            TransformKind::Power(p) => format!("power({p})"),
            TransformKind::BadFunc { .. } => "bad_func".into(),
        }
    }

    /// Evaluates the transform at a measure `a`.
    pub fn apply(&self, a: f64) -> Result<TransformValue> {
        match self.kind {
            TransformKind::PsiInv => {
                open_unit(a)?;
                let x = psi_inv_raw(a);
                Ok(TransformValue {
                    value: x,
                    err: 4.0 * f64::EPSILON * x.abs().max(1.0),
                    slope: 1.0 / gauss_density(x),
                })
            }
            TransformKind::PhiInv => {
                open_unit(a)?;
                let x = phi_inv_raw(a);
                Ok(TransformValue {
                    value: x,
                    err: 4.0 * f64::EPSILON * x.abs().max(1.0),
                    slope: 0.5 / gauss_density(x),
                })
            }
            TransformKind::Power(p) => {
                if !(a > 0.0) {
                    return Err(domain(format!("power transform needs a > 0, got {a}")));
                }
                let (value, slope) = if p == 0.0 {
                    (a.ln(), 1.0 / a)
                } else {
                    (a.powf(p) / p, a.powf(p - 1.0))
                };
                Ok(TransformValue {
                    value,
                    err: 4.0 * f64::EPSILON * value.abs(),
                    slope,
                })
            }
            TransformKind::ConjectureF { .. } | TransformKind::WeakF { .. } => self
                .table
                .as_ref()
                .expect("table built with transform")
                .eval(a),
            TransformKind::BadFunc { .. } => self
                .glue
                .as_ref()
                .expect("glue built with transform")
                .eval(a),
        }
    }

    /// `F(a)` alone, for plotting and tables.
    pub fn value(&self, a: f64) -> Result<f64> {
        self.apply(a).map(|v| v.value)
    }

    /// Measures at which the gluing switches cylinder families (bad_func) or
    /// the rate switches minimizer (conjecture_F).
    pub fn switch_points(&self) -> Vec<f64> {
        if let Some(t) = &self.table {
            return t.breaks.iter().map(|&v| logistic(v).0).collect();
        }
        if let Some(g) = &self.glue {
            return g.segments.iter().skip(1).map(|s| s.lo).collect();
        }
        Vec::new()
    }
}

fn open_unit(a: f64) -> Result<()> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "transform argument must lie in (0,1), got {a}"
        )))
    }
}

/// `(s, 1 - s)` for `s = 1/(1 + e^-v)`, each computed without cancellation.
fn logistic(v: f64) -> (f64, f64) {
    (1.0 / (1.0 + (-v).exp()), 1.0 / (1.0 + v.exp()))
}

fn logit(a: f64) -> f64 {
    (a / (1.0 - a)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Rate {
    MinPhi,
    Weak,
}

/// Lower edge of the logit table, per unit of dimension.
const V_LO_PER_DIM: f64 = -40.0;
const V_HI: f64 = 27.0;
const NODE_STEP: f64 = 0.5;
const SCAN_STEP: f64 = 0.05;

#[derive(Debug)]
struct ExpIntegralTable {
    n: usize,
    rate: Rate,
    nodes: Vec<f64>,
    log_slope: Vec<f64>,
    log_slope_err: Vec<f64>,
    value: Vec<f64>,
    value_err: Vec<f64>,
    breaks: Vec<f64>,
}

impl ExpIntegralTable {
    fn build(n: usize, c0: f64, rate: Rate) -> Result<Self> {
        if n == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(c0 > 0.0 && c0 < 1.0) {
            return Err(invalid(format!("C0 must lie in (0,1), got {c0}")));
        }
        let v_lo = V_LO_PER_DIM * n as f64;
        let v_c = logit(c0);
        let breaks = match rate {
            Rate::MinPhi => min_phi_breaks(n, v_lo, V_HI)?,
            Rate::Weak => Vec::new(),
        };
        let mut nodes: Vec<f64> = Vec::new();
        let steps = ((V_HI - v_lo) / NODE_STEP).round() as usize;
        for i in 0..=steps {
            nodes.push(v_lo + i as f64 * NODE_STEP);
        }
        nodes.extend(breaks.iter().copied());
        nodes.push(v_c);
        nodes.sort_by(|a, b| a.total_cmp(b));
        nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let ic = nodes
            .iter()
            .position(|&v| (v - v_c).abs() < 1e-9)
            .expect("C0 node present");
        nodes[ic] = v_c;

        let mut table = Self {
            n,
            rate,
            log_slope: vec![0.0; nodes.len()],
            log_slope_err: vec![0.0; nodes.len()],
            value: vec![0.0; nodes.len()],
            value_err: vec![0.0; nodes.len()],
            nodes,
            breaks,
        };
        let tol = Tol::new(1e-15, 1e-14);
        for i in ic + 1..table.nodes.len() {
            let (a, b) = (table.nodes[i - 1], table.nodes[i]);
            let r = integrate(|v| [table.weighted_rate(v)], a, b, &[], tol);
            table.log_slope[i] = table.log_slope[i - 1] + r.value[0];
            table.log_slope_err[i] = table.log_slope_err[i - 1] + r.err[0];
        }
        for i in (0..ic).rev() {
            let (a, b) = (table.nodes[i], table.nodes[i + 1]);
            let r = integrate(|v| [table.weighted_rate(v)], a, b, &[], tol);
            table.log_slope[i] = table.log_slope[i + 1] - r.value[0];
            table.log_slope_err[i] = table.log_slope_err[i + 1] + r.err[0];
        }
        if table.log_slope.iter().any(|x| !x.is_finite()) {
            return Err(failure("tabulating the transform rate", f64::INFINITY));
        }
        // exp(Phi(t)) ~ C t^(-(n-1)/n) near 0 for both rates.
        let (s0, _) = logistic(table.nodes[0]);
        let tail = n as f64 * s0 * table.log_slope[0].exp();
        table.value[0] = tail;
        table.value_err[0] = tail;
        for i in 1..table.nodes.len() {
            let (piece, err) = table.panel_integral(i - 1, table.nodes[i]);
            table.value[i] = table.value[i - 1] + piece;
            table.value_err[i] = table.value_err[i - 1]
                + err
                + piece * (table.log_slope_err[i - 1].max(table.log_slope_err[i])).min(1.0);
        }
        Ok(table)
    }

    /// `rate(s) * s * (1 - s)` at `s = logistic(v)`.
    fn weighted_rate(&self, v: f64) -> f64 {
        let (s, one_minus) = logistic(v);
        let r = match self.rate {
            Rate::MinPhi => (1..=self.n)
                .map(|k| {
                    radius_split(k, s, one_minus)
                        .map(|r| phi_of_radius(k, r))
                        .unwrap_or(f64::NAN)
                })
                .fold(f64::INFINITY, f64::min),
            Rate::Weak => weak_rate_split(self.n, s, one_minus),
        };
        r * s * one_minus
    }

    /// `Phi(v) - Phi(nodes[i])` for `v` inside panel `i`.
    fn inner(&self, i: usize, v: f64) -> f64 {
        if v == self.nodes[i] {
            return 0.0;
        }
        gk21(&mut |u| [self.weighted_rate(u)], self.nodes[i], v).value[0]
    }

    fn panel_integral(&self, i: usize, v: f64) -> (f64, f64) {
        let base = self.log_slope[i];
        let r = integrate(
            |u| {
                let (s, one_minus) = logistic(u);
                [(base + self.inner(i, u)).exp() * s * one_minus]
            },
            self.nodes[i],
            v,
            &[],
            Tol::new(0.0, 1e-13),
        );
        (r.value[0], r.err[0])
    }

    fn eval(&self, a: f64) -> Result<TransformValue> {
        if a == 0.0 {
            return Ok(TransformValue {
                value: 0.0,
                err: 0.0,
                slope: f64::INFINITY,
            });
        }
        open_unit(a)?;
        let v = logit(a);
        let last = *self.nodes.last().expect("nonempty");
        if v < self.nodes[0] || v > last {
            return Err(failure(
                format!("transform outside its tabulated range at a={a:e}"),
                f64::INFINITY,
            ));
        }
        let i = match self.nodes.binary_search_by(|x| x.total_cmp(&v)) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
        .min(self.nodes.len() - 2);
        let (piece, err) = self.panel_integral(i, v);
        let log_slope = self.log_slope[i] + self.inner(i, v);
        Ok(TransformValue {
            value: self.value[i] + piece,
            err: self.value_err[i] + err + 1e-15 * (self.value[i] + piece).abs(),
            slope: log_slope.exp(),
        })
    }
}

/// The rate of the proven transform:
/// `phi^-1(s)^2 / (2 e^2 n^2 s) + 1/(n s - J_{n+1}(R_n(s))/c_{n-1}) - 1/s`.
///
/// `n s - J_{n+1}(R)/c_{n-1} = g_n(R)/c_{n-1}` by `J_{n+1} = n J_{n-1} - g_n`,
/// which avoids the cancellation as `s -> 1`.
pub fn weak_rate(n: usize, s: f64) -> f64 {
    weak_rate_split(n, s, 1.0 - s)
}

fn weak_rate_split(n: usize, s: f64, one_minus: f64) -> f64 {
    let nf = n as f64;
    let w = phi_inv_split(s, one_minus);
    let r = match radius_split(n, s, one_minus) {
        Ok(r) => r,
        Err(_) => return f64::NAN,
    };
    w * w / (2.0 * E * E * nf * nf * s) + c_raw(nf - 1.0) / g_raw(nf, r) - 1.0 / s
}

/// Second term of [`weak_rate`] evaluated literally as `n s - J_{n+1}(R_n(s))/c_{n-1}`.
pub fn weak_rate_denominator_literal(n: usize, s: f64) -> Result<(f64, f64)> {
    let nf = n as f64;
    let r = radius_raw(n, s)?;
    Ok((nf * s, crate::specfun::j_raw(nf + 1.0, r) / c_raw(nf - 1.0)))
}

fn min_phi_at(n: usize, v: f64) -> (usize, f64) {
    let (s, _) = logistic(v);
    argmin_k(n, |k| {
        radius_raw(k, s)
            .map(|r| phi_of_radius(k, r))
            .unwrap_or(f64::NAN)
    })
}

/// Logit abscissas where the minimizer of `phi_k` switches.
fn min_phi_breaks(n: usize, v_lo: f64, v_hi: f64) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    if n == 1 {
        return Ok(out);
    }
    let steps = ((v_hi - v_lo) / SCAN_STEP).ceil() as usize;
    let mut prev = (v_lo, min_phi_at(n, v_lo).0);
    for i in 1..=steps {
        let v = (v_lo + i as f64 * SCAN_STEP).min(v_hi);
        let (k, _) = min_phi_at(n, v);
        if k != prev.1 {
            let (i_k, j_k) = (prev.1, k);
            let f = |v: f64| {
                let (s, _) = logistic(v);
                let pi = radius_raw(i_k, s)
                    .map(|r| phi_of_radius(i_k, r))
                    .unwrap_or(f64::NAN);
                let pj = radius_raw(j_k, s)
                    .map(|r| phi_of_radius(j_k, r))
                    .unwrap_or(f64::NAN);
                pi - pj
            };
            out.push(bisect(f, prev.0, v, 60));
        }
        prev = (v, k);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
struct Segment {
    lo: f64,
    k: usize,
    offset: f64,
}

/// `R_k(a) + a_k` on the stretches where `s_k` is minimal, with offsets
/// accumulated left to right from zero so the result is continuous.
#[derive(Debug)]
struct GluedRadius {
    segments: Vec<Segment>,
}

impl GluedRadius {
    fn build(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        let s_min = |v: f64| {
            let (s, _) = logistic(v);
            argmin_k(n, |k| {
                radius_raw(k, s)
                    .map(|r| perimeter_of_radius(k, r))
                    .unwrap_or(f64::NAN)
            })
            .0
        };
        let v_lo = V_LO_PER_DIM * n as f64;
        let steps = ((V_HI - v_lo) / SCAN_STEP).ceil() as usize;
        let mut segments = vec![Segment {
            lo: 0.0,
            k: s_min(v_lo),
            offset: 0.0,
        }];
        let mut prev_v = v_lo;
        for i in 1..=steps {
            let v = (v_lo + i as f64 * SCAN_STEP).min(V_HI);
            let k = s_min(v);
            let last = segments.last().expect("nonempty").clone();
            if k != last.k {
                let f = |v: f64| {
                    let (s, _) = logistic(v);
                    let si = radius_raw(last.k, s)
                        .map(|r| perimeter_of_radius(last.k, r))
                        .unwrap_or(f64::NAN);
                    let sj = radius_raw(k, s)
                        .map(|r| perimeter_of_radius(k, r))
                        .unwrap_or(f64::NAN);
                    si - sj
                };
                let (a_sw, _) = logistic(bisect(f, prev_v, v, 60));
                let offset = last.offset + radius_raw(last.k, a_sw)? - radius_raw(k, a_sw)?;
                segments.push(Segment {
                    lo: a_sw,
                    k,
                    offset,
                });
            }
            prev_v = v;
        }
        Ok(Self { segments })
    }

    fn eval(&self, a: f64) -> Result<TransformValue> {
        open_unit(a)?;
        let seg = self
            .segments
            .iter()
            .rev()
            .find(|s| s.lo <= a)
            .expect("first segment starts at 0");
        let r = radius_raw(seg.k, a)?;
        let value = r + seg.offset;
        Ok(TransformValue {
            value,
            err: 1e-12 * (1.0 + value.abs()),
            slope: 1.0 / perimeter_of_radius(seg.k, r),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::{open_grid, perimeter_s, radius_of_measure};

    #[test]
    fn conjecture_in_one_dimension_is_scaled_phi_inverse() {
        // exp(int phi_1) = s_1(C0)/s_1(t) = s_1(C0) R_1'(t).
        let f = Transform::conjecture(1, 0.5).unwrap();
        let s0 = perimeter_s(1, 0.5).unwrap();
        for &a in &[1e-6, 0.05, 0.3, 0.7, 0.99, 0.999_999] {
            let v = f.apply(a).unwrap();
            let want = s0 * phi_inv_raw(a);
            assert!(
                (v.value - want).abs() < 1e-10 * want.max(1.0),
                "a={a}: {} vs {want}",
                v.value
            );
            assert!(v.err < 1e-9);
        }
        assert_eq!(f.value(0.0).unwrap(), 0.0);
    }

    #[test]
    fn conjecture_is_affine_in_radius_on_one_stretch() {
        // On a stretch where k minimizes phi_k, F(a) - F(b) = s_k(C0)(R_k(a) - R_k(b)).
        let n = 2;
        let c0 = 0.5;
        let f = Transform::conjecture(n, c0).unwrap();
        let sw = f.switch_points();
        assert_eq!(sw.len(), 1);
        let k = min_phi_at(n, logit(0.3)).0;
        assert_eq!(k, 2);
        let s0 = perimeter_s(k, c0).unwrap();
        let (a, b) = (0.2, 0.6);
        let lhs = f.value(b).unwrap() - f.value(a).unwrap();
        let rhs = s0 * (radius_of_measure(k, b).unwrap() - radius_of_measure(k, a).unwrap());
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn c0_change_rescales_f() {
        for n in [2, 3] {
            let f3 = Transform::conjecture(n, 0.3).unwrap();
            let f7 = Transform::conjecture(n, 0.7).unwrap();
            let ratio = f3.value(0.5).unwrap() / f7.value(0.5).unwrap();
            for a in open_grid(9) {
                let r = f3.value(a).unwrap() / f7.value(a).unwrap();
                assert!((r / ratio - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn slope_is_derivative() {
        for t in [
            Transform::conjecture(3, 0.5).unwrap(),
            Transform::weak(2, 0.5).unwrap(),
        ] {
            for &a in &[0.1, 0.45, 0.93] {
                let h = 1e-5;
                let fd = (t.value(a + h).unwrap() - t.value(a - h).unwrap()) / (2.0 * h);
                let s = t.apply(a).unwrap().slope;
                assert!(((fd - s) / s).abs() < 1e-7, "{} a={a}: {fd} vs {s}", t.id());
            }
        }
    }

    #[test]
    fn weak_rate_denominator_positive() {
        for n in [2, 3] {
            for i in 0..=998 {
                let s = 1e-3 + i as f64 * 1e-3;
                let (lin, j) = weak_rate_denominator_literal(n, s).unwrap();
                assert!(lin > j, "n={n} s={s}");
                assert!(weak_rate(n, s).is_finite());
            }
        }
    }

    #[test]
    fn weak_f_increasing_and_zero_at_zero() {
        let f = Transform::weak(3, 0.5).unwrap();
        assert_eq!(f.value(0.0).unwrap(), 0.0);
        let vals: Vec<f64> = open_grid(49).iter().map(|&a| f.value(a).unwrap()).collect();
        assert!(vals[0] > 0.0);
        assert!(vals.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bad_func_is_continuous_and_c1() {
        let f = Transform::bad_func(2).unwrap();
        let sw = f.switch_points();
        assert_eq!(sw.len(), 1);
        let a = sw[0];
        let h = 1e-9;
        let l = f.apply(a - h).unwrap();
        let r = f.apply(a + h).unwrap();
        assert!((l.value - r.value).abs() < 1e-7);
        assert!(((l.slope - r.slope) / l.slope).abs() < 1e-6);
        // Left of the switch the ball family is glued with zero offset.
        let x = 0.5 * a;
        assert!((f.value(x).unwrap() - radius_of_measure(2, x).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn power_and_inverse_transforms() {
        let p = Transform::power(0.5);
        let v = p.apply(0.25).unwrap();
        assert!((v.value - 1.0).abs() < 1e-15);
        assert!((v.slope - 2.0).abs() < 1e-15);
        assert!((Transform::power(0.0).value(1.0).unwrap()).abs() < 1e-16);
        assert!(Transform::psi_inv().apply(1.0).is_err());
        assert_eq!(Transform::phi_inv().id(), "phi_inv");
        assert_eq!(Transform::power(0.25).id(), "power(0.25)");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Transform::conjecture(0, 0.5).is_err());
        assert!(Transform::conjecture(2, 1.0).is_err());
        assert!(Transform::weak(2, 0.0).is_err());
        assert!(Transform::bad_func(0).is_err());
    }
}
