//! Convex bodies described by support functions.
//!
//! Every body is a symmetric core, possibly translated. Cores are closed-form
//! atoms (balls, strips, round cylinders, boxes, `l_p` balls, ellipsoids) or
//! positive Minkowski combinations of atoms. A core whose support is finite
//! only on the first `d` coordinates ("span `d`") is `K' x R^(n-d)` with `K'`
//! bounded; support values are `+inf` off that subspace.

use crate::error::{invalid, Error, Result};
use crate::quad::{brent_min, brent_root};
use std::fmt::Write as _;

/// A radial value `rho(theta)` with an absolute error bound. Numeric radials
/// over-estimate: `value - err <= rho <= value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radial {
    pub value: f64,
    pub err: f64,
}

impl Radial {
    fn exact(value: f64) -> Self {
        Self { value, err: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Atom {
    /// `r B_2^k x R^(n-k)`.
    Round {
        k: usize,
        r: f64,
    },
    Box {
        a: Vec<f64>,
    },
    Lp {
        r: f64,
        p: f64,
    },
    Ellipsoid {
        c: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Core {
    Whole,
    Atom(Atom),
    /// Positive weights; at least two atoms.
    Sum(Vec<(f64, Atom)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportBody {
    n: usize,
    core: Core,
    shift: Vec<f64>,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn lp_norm(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        x.iter().fold(0.0, |m, t| m.max(t.abs()))
    } else if p == 1.0 {
        x.iter().map(|t| t.abs()).sum()
    } else if p == 2.0 {
        norm(x)
    } else {
        let m = x.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * x
            .iter()
            .map(|t| (t.abs() / m).powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "{name} must be positive and finite, got {x}"
        )))
    }
}

impl Atom {
    fn span(&self, n: usize) -> usize {
        match self {
            Atom::Round { k, .. } => *k,
            _ => n,
        }
    }

    fn support(&self, u: &[f64]) -> f64 {
        match self {
            Atom::Round { k, r } => {
                if u[*k..].iter().any(|&t| t != 0.0) {
                    f64::INFINITY
                } else {
                    r * norm(&u[..*k])
                }
            }
            Atom::Box { a } => a.iter().zip(u).map(|(a, t)| a * t.abs()).sum(),
            Atom::Lp { r, p } => r * lp_norm(u, conjugate(*p)),
            Atom::Ellipsoid { c } => c
                .iter()
                .zip(u)
                .map(|(c, t)| (c * t) * (c * t))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// `rho(theta)` for a unit `theta`.
    fn radial(&self, theta: &[f64]) -> f64 {
        match self {
            Atom::Round { k, r } if *k == theta.len() => *r,
            Atom::Round { k, r } => r / norm(&theta[..*k]),
            Atom::Box { a } => a
                .iter()
                .zip(theta)
                .map(|(a, t)| a / t.abs())
                .fold(f64::INFINITY, f64::min),
            Atom::Lp { r, p } => r / lp_norm(theta, *p),
            Atom::Ellipsoid { c } => {
                1.0 / c
                    .iter()
                    .zip(theta)
                    .map(|(c, t)| (t / c) * (t / c))
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }

    fn inradius(&self, n: usize) -> f64 {
        match self {
            Atom::Round { r, .. } => *r,
            Atom::Box { a } => a.iter().copied().fold(f64::INFINITY, f64::min),
            Atom::Lp { r, p } => r * (n as f64).powf((0.5 - 1.0 / p).min(0.0)),
            Atom::Ellipsoid { c } => c.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// Largest `|x|` over the body restricted to its span; a Lipschitz
    /// constant for the support function there.
    fn circumradius(&self, n: usize) -> f64 {
        match self {
            Atom::Round { r, .. } => *r,
            Atom::Box { a } => norm(a),
            Atom::Lp { r, p } => r * (n as f64).powf((0.5 - 1.0 / p).max(0.0)),
            Atom::Ellipsoid { c } => c.iter().copied().fold(0.0, f64::max),
        }
    }

    fn scaled(&self, t: f64) -> Atom {
        match self {
            Atom::Round { k, r } => Atom::Round { k: *k, r: r * t },
            Atom::Box { a } => Atom::Box {
                a: a.iter().map(|x| x * t).collect(),
            },
            Atom::Lp { r, p } => Atom::Lp { r: r * t, p: *p },
            Atom::Ellipsoid { c } => Atom::Ellipsoid {
                c: c.iter().map(|x| x * t).collect(),
            },
        }
    }

    fn describe(&self, n: usize, out: &mut String) {
        let join = |v: &[f64]| v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join("/");
        match self {
            Atom::Round { k, r } if *k == n => {
                let _ = write!(out, "ball:R={},n={n}", fmt_num(*r));
            }
            Atom::Round { k: 1, r } => {
                let _ = write!(out, "strip:w={},n={n}", fmt_num(*r));
            }
            Atom::Round { k, r } => {
                let _ = write!(out, "cylinder:k={k},R={},n={n}", fmt_num(*r));
            }
            Atom::Box { a } => {
                let _ = write!(out, "box:a={}", join(a));
            }
            Atom::Lp { r, p } => {
                let _ = write!(out, "lp:r={},p={},n={n}", fmt_num(*r), fmt_num(*p));
            }
            Atom::Ellipsoid { c } => {
                let _ = write!(out, "ellipsoid:c={}", join(c));
            }
        }
    }
}

/// Shortest decimal that parses back to the same `f64`.
fn fmt_num(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x}")
}

impl SupportBody {
    fn from_core(n: usize, core: Core) -> Self {
        Self {
            n,
            core,
            shift: vec![0.0; n],
        }
    }

    fn atom(n: usize, a: Atom) -> Result<Self> {
        if n == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        Ok(Self::from_core(n, Core::Atom(a)))
    }

    /// All of `R^n`.
    pub fn whole(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        Ok(Self::from_core(n, Core::Whole))
    }

    pub fn ball(n: usize, r: f64) -> Result<Self> {
        positive("ball radius", r)?;
        Self::atom(n, Atom::Round { k: n, r })
    }

    /// The slab `|x_1| <= w`.
    pub fn strip(n: usize, w: f64) -> Result<Self> {
        positive("strip half-width", w)?;
        Self::atom(n, Atom::Round { k: 1, r: w })
    }

    /// `r B_2^k x R^(n-k)`.
    pub fn cylinder(n: usize, k: usize, r: f64) -> Result<Self> {
        positive("cylinder radius", r)?;
        if k == 0 || k > n {
            return Err(invalid(format!(
                "cylinder needs 1 <= k <= n, got k={k}, n={n}"
            )));
        }
        Self::atom(n, Atom::Round { k, r })
    }

    /// `prod [-a_i, a_i]`.
    pub fn boxed(a: &[f64]) -> Result<Self> {
        for &x in a {
            positive("box half-side", x)?;
        }
        Self::atom(a.len(), Atom::Box { a: a.to_vec() })
    }

    /// `{ |x|_p <= r }`, `p` in `[1, inf]`.
    pub fn lp_ball(n: usize, r: f64, p: f64) -> Result<Self> {
        positive("l_p radius", r)?;
        if !(p >= 1.0) {
            return Err(invalid(format!("l_p ball needs p >= 1, got {p}")));
        }
        Self::atom(n, Atom::Lp { r, p })
    }

    /// Axis-aligned ellipsoid with semi-axes `c`.
    pub fn ellipsoid(c: &[f64]) -> Result<Self> {
        for &x in c {
            positive("ellipsoid semi-axis", x)?;
        }
        Self::atom(c.len(), Atom::Ellipsoid { c: c.to_vec() })
    }

    /// `K + v`. The origin must stay interior.
    pub fn translate(&self, v: &[f64]) -> Result<Self> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(invalid("translation must be finite"));
        }
        let shift: Vec<f64> = self.shift.iter().zip(v).map(|(a, b)| a + b).collect();
        let out = Self {
            n: self.n,
            core: self.core.clone(),
            shift,
        };
        let minus: Vec<f64> = out.shift.iter().map(|x| -x).collect();
        if out.core_gauge(&minus)? >= 1.0 {
            return Err(invalid("translation moves the origin out of the interior"));
        }
        Ok(out)
    }

    /// `t K` for `t > 0`.
    pub fn scale(&self, t: f64) -> Result<Self> {
        positive("scale factor", t)?;
        let core = match &self.core {
            Core::Whole => Core::Whole,
            Core::Atom(a) => Core::Atom(a.scaled(t)),
            Core::Sum(parts) => Core::Sum(parts.iter().map(|(w, a)| (w * t, a.clone())).collect()),
        };
        Ok(Self {
            n: self.n,
            core,
            shift: self.shift.iter().map(|x| x * t).collect(),
        })
    }

    /// `(1 - lambda) K + lambda L`.
    pub fn interpolate(k: &SupportBody, l: &SupportBody, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(invalid(format!(
                "interpolation parameter must lie in [0,1], got {lambda}"
            )));
        }
        Self::combine(&[(1.0 - lambda, k), (lambda, l)])
    }

    /// `sum w_i K_i` for `w_i >= 0`, not all zero. Closed forms are kept
    /// where they exist: parts sharing one round shape, boxes, equal-`p` balls,
    /// anything of span 1 (a strip) and anything containing `R^n`.
    pub fn combine(parts: &[(f64, &SupportBody)]) -> Result<Self> {
        let n = parts
            .first()
            .map(|p| p.1.n)
            .ok_or_else(|| invalid("empty combination"))?;
        let mut shift = vec![0.0; n];
        let mut atoms: Vec<(f64, Atom)> = Vec::new();
        let mut whole = false;
        for (w, b) in parts {
            if b.n != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: b.n,
                });
            }
            if !(*w >= 0.0 && w.is_finite()) {
                return Err(invalid(format!(
                    "combination weights must be nonnegative, got {w}"
                )));
            }
            if *w == 0.0 {
                continue;
            }
            for (s, v) in shift.iter_mut().zip(&b.shift) {
                *s += w * v;
            }
            match &b.core {
                Core::Whole => whole = true,
                Core::Atom(a) => atoms.push((*w, a.clone())),
                Core::Sum(ps) => atoms.extend(ps.iter().map(|(u, a)| (w * u, a.clone()))),
            }
        }
        if !whole && atoms.is_empty() {
            return Err(invalid("combination with all weights zero"));
        }
        let core = if whole {
            Core::Whole
        } else {
            simplify(n, atoms)
        };
        Ok(Self { n, core, shift })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_symmetric(&self) -> bool {
        self.shift.iter().all(|&x| x == 0.0)
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// Number of leading coordinates on which the support is finite.
    pub fn span(&self) -> usize {
        match &self.core {
            Core::Whole => 0,
            Core::Atom(a) => a.span(self.n),
            Core::Sum(ps) => ps
                .iter()
                .map(|(_, a)| a.span(self.n))
                .min()
                .unwrap_or(self.n),
        }
    }

    /// True when `radial` is closed form (up to a scalar root for
    /// translates) rather than a numerical minimization.
    pub fn has_exact_radial(&self) -> bool {
        !matches!(self.core, Core::Sum(_))
    }

    /// `(k, r)` when the body is the centered round cylinder `r B_2^k x R^(n-k)`.
    pub fn round_params(&self) -> Option<(usize, f64)> {
        match (&self.core, self.is_symmetric()) {
            (Core::Atom(Atom::Round { k, r }), true) => Some((*k, *r)),
            _ => None,
        }
    }

    /// Half-sides when the body is a centered box.
    pub fn box_params(&self) -> Option<&[f64]> {
        match (&self.core, self.is_symmetric()) {
            (Core::Atom(Atom::Box { a }), true) => Some(a),
            _ => None,
        }
    }

    /// True for `R^n` itself.
    pub fn is_whole(&self) -> bool {
        matches!(self.core, Core::Whole)
    }

    /// Planar angles in `[0, 2 pi)` where the radial function of a catalog
    /// atom has a corner; empty outside the plane.
    pub fn planar_kinks(&self) -> Vec<f64> {
        if self.n != 2 || !self.is_symmetric() {
            return Vec::new();
        }
        let corner = |x: f64, y: f64| {
            let t = y.atan2(x);
            [
                t,
                std::f64::consts::PI - t,
                std::f64::consts::PI + t,
                2.0 * std::f64::consts::PI - t,
            ]
        };
        match &self.core {
            Core::Atom(Atom::Box { a }) => corner(a[0], a[1]).to_vec(),
            Core::Atom(Atom::Lp { p, .. }) if p.is_infinite() => corner(1.0, 1.0).to_vec(),
            Core::Atom(Atom::Lp { p, .. }) if *p < 2.0 => corner(1.0, 0.0).to_vec(),
            _ => Vec::new(),
        }
    }

    /// For `n = 3`: azimuths in `[0, 2 pi)` where the radial function of a
    /// catalog atom has a corner on the circle of height `z`.
    pub fn kinks_at_height(&self, z: f64) -> Vec<f64> {
        if self.n != 3 || !self.is_symmetric() {
            return Vec::new();
        }
        let a = match &self.core {
            Core::Atom(Atom::Box { a }) => a.clone(),
            Core::Atom(Atom::Lp { p, .. }) if p.is_infinite() => vec![1.0; 3],
            // Non-smooth where a coordinate vanishes.
            Core::Atom(Atom::Lp { p, .. }) if *p < 2.0 => {
                return (0..4)
                    .map(|i| i as f64 * std::f64::consts::FRAC_PI_2)
                    .collect();
            }
            _ => return Vec::new(),
        };
        let s = (1.0 - z * z).max(0.0).sqrt();
        let mut out = Vec::new();
        let push4 = |out: &mut Vec<f64>, t: f64| {
            use std::f64::consts::PI;
            out.extend([t, PI - t, PI + t, 2.0 * PI - t].map(|x| x.rem_euclid(2.0 * PI)));
        };
        // |theta_1|/a_1 = |theta_2|/a_2.
        push4(&mut out, a[1].atan2(a[0]));
        if s > 0.0 {
            // |theta_1|/a_1 = |z|/a_3 and |theta_2|/a_2 = |z|/a_3.
            let c = a[0] * z.abs() / (a[2] * s);
            if c <= 1.0 {
                push4(&mut out, c.acos());
            }
            let c = a[1] * z.abs() / (a[2] * s);
            if c <= 1.0 {
                push4(&mut out, c.asin());
            }
        }
        out
    }

    /// For `n = 3`: heights where [`Self::kinks_at_height`] changes
    /// structure.
    pub fn kink_heights(&self) -> Vec<f64> {
        if self.n != 3 || !self.is_symmetric() {
            return Vec::new();
        }
        let a = match &self.core {
            Core::Atom(Atom::Box { a }) => a.clone(),
            Core::Atom(Atom::Lp { p, .. }) if p.is_infinite() => vec![1.0; 3],
            _ => return Vec::new(),
        };
        let mut out = Vec::new();
        for d in [a[0].hypot(a[2]), a[1].hypot(a[2]), norm(&a)] {
            out.push(a[2] / d);
            out.push(-a[2] / d);
        }
        out
    }

    /// The canonical textual form, which [`parse`] reads back.
    pub fn label(&self) -> String {
        let mut out = String::new();
        self.describe_core(&mut out);
        if !self.is_symmetric() {
            let v: Vec<String> = self.shift.iter().map(|x| fmt_num(*x)).collect();
            out = format!("translate:v={};{}", v.join("/"), bracket(&out));
        }
        out
    }

    fn describe_core(&self, out: &mut String) {
        match &self.core {
            Core::Whole => {
                let _ = write!(out, "whole:n={}", self.n);
            }
            Core::Atom(a) => a.describe(self.n, out),
            Core::Sum(ps) => {
                let items: Vec<String> = ps
                    .iter()
                    .map(|(w, a)| {
                        let mut s = String::new();
                        a.describe(self.n, &mut s);
                        format!("{}*{}", fmt_num(*w), bracket(&s))
                    })
                    .collect();
                let _ = write!(out, "sum:;{}", items.join("|"));
            }
        }
    }

    /// `h_K(u)` for any `u` (positively 1-homogeneous); may be `+inf`.
    pub fn support(&self, u: &[f64]) -> f64 {
        self.core_support(u) + self.shift.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
    }

    fn core_support(&self, u: &[f64]) -> f64 {
        match &self.core {
            Core::Whole => {
                if u.iter().all(|&t| t == 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Core::Atom(a) => a.support(u),
            Core::Sum(ps) => ps.iter().map(|(w, a)| w * a.support(u)).sum(),
        }
    }

    /// `rho_K(theta / |theta|)`, possibly `+inf`.
    pub fn radial(&self, theta: &[f64]) -> Result<Radial> {
        if theta.len() != self.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: theta.len(),
            });
        }
        let m = norm(theta);
        if !(m > 0.0) || !m.is_finite() {
            return Err(invalid("radial direction must be nonzero and finite"));
        }
        let unit: Vec<f64> = theta.iter().map(|t| t / m).collect();
        if self.is_symmetric() {
            return self.core_radial(&unit);
        }
        self.shifted_radial(&unit)
    }

    fn core_radial(&self, theta: &[f64]) -> Result<Radial> {
        match &self.core {
            Core::Whole => Ok(Radial::exact(f64::INFINITY)),
            Core::Atom(a) => Ok(Radial::exact(a.radial(theta))),
            Core::Sum(ps) => sum_radial(self.n, self.span(), ps, theta),
        }
    }

    /// Gauge of the untranslated core; `x` need not be a unit vector.
    fn core_gauge(&self, x: &[f64]) -> Result<f64> {
        let m = norm(x);
        if m == 0.0 {
            return Ok(0.0);
        }
        let unit: Vec<f64> = x.iter().map(|t| t / m).collect();
        Ok(m / self.core_radial(&unit)?.value)
    }

    fn shifted_radial(&self, theta: &[f64]) -> Result<Radial> {
        let mut y = vec![0.0; self.n];
        let mut f = |t: f64| -> f64 {
            for i in 0..self.n {
                y[i] = t * theta[i] - self.shift[i];
            }
            self.core_gauge(&y).unwrap_or(f64::NAN) - 1.0
        };
        let mut hi = 1.0;
        while f(hi) < 0.0 {
            hi *= 2.0;
            if hi > 1e15 {
                return Ok(Radial::exact(f64::INFINITY));
            }
        }
        let root = brent_root(&mut f, 0.0, hi, 1e-15 * hi, 300).ok_or_else(|| {
            Error::NumericalFailure {
                what: "radial of a translated body".into(),
                achieved: f64::INFINITY,
            }
        })?;
        let core_err = if self.has_exact_radial() {
            0.0
        } else {
            1e-9 * root
        };
        Ok(Radial {
            value: root,
            err: 4.0 * f64::EPSILON * root + 1e-15 * hi + core_err,
        })
    }

    /// `||x||_K`; zero at the origin.
    pub fn gauge(&self, x: &[f64]) -> Result<f64> {
        let m = norm(x);
        if m == 0.0 {
            return Ok(0.0);
        }
        Ok(m / self.radial(x)?.value)
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.gauge(x)? <= 1.0)
    }

    /// Closed-form in-radius where one exists.
    pub fn exact_inradius(&self) -> Option<f64> {
        if !self.is_symmetric() {
            return None;
        }
        match &self.core {
            Core::Whole => Some(f64::INFINITY),
            Core::Atom(a) => Some(a.inradius(self.n)),
            Core::Sum(_) => None,
        }
    }

    /// `r(K) = min_u h_K(u)` for symmetric bodies.
    pub fn inradius(&self) -> Result<Radial> {
        if !self.is_symmetric() {
            return Err(Error::Unsupported("in-radius of a translated body".into()));
        }
        if let Some(r) = self.exact_inradius() {
            return Ok(Radial::exact(r));
        }
        let Core::Sum(ps) = &self.core else {
            unreachable!()
        };
        sum_inradius(self.n, self.span(), ps)
    }
}

fn bracket(s: &str) -> String {
    if s.contains('|') || s.contains(';') {
        format!("({s})")
    } else {
        s.to_string()
    }
}

fn simplify(n: usize, atoms: Vec<(f64, Atom)>) -> Core {
    let d = atoms.iter().map(|(_, a)| a.span(n)).min().unwrap_or(n);
    if atoms.len() == 1 {
        let (w, a) = &atoms[0];
        return Core::Atom(a.scaled(*w));
    }
    if d == 1 {
        let mut e1 = vec![0.0; n];
        e1[0] = 1.0;
        let w = atoms.iter().map(|(w, a)| w * a.support(&e1)).sum();
        return Core::Atom(Atom::Round { k: 1, r: w });
    }
    if atoms.iter().all(|(_, a)| matches!(a, Atom::Round { .. })) {
        let r = atoms
            .iter()
            .map(|(w, a)| match a {
                Atom::Round { r, .. } => w * r,
                _ => unreachable!(),
            })
            .sum();
        return Core::Atom(Atom::Round { k: d, r });
    }
    if atoms.iter().all(|(_, a)| matches!(a, Atom::Box { .. })) {
        let mut out = vec![0.0; n];
        for (w, a) in &atoms {
            if let Atom::Box { a } = a {
                for (o, x) in out.iter_mut().zip(a) {
                    *o += w * x;
                }
            }
        }
        return Core::Atom(Atom::Box { a: out });
    }
    if let Atom::Lp { p: p0, .. } = atoms[0].1 {
        if atoms
            .iter()
            .all(|(_, a)| matches!(a, Atom::Lp { p, .. } if *p == p0))
        {
            let r = atoms
                .iter()
                .map(|(w, a)| match a {
                    Atom::Lp { r, .. } => w * r,
                    _ => unreachable!(),
                })
                .sum();
            return Core::Atom(Atom::Lp { r, p: p0 });
        }
    }
    // Round parts of equal span merge into one.
    let mut merged: Vec<(f64, Atom)> = Vec::new();
    for (w, a) in atoms {
        if let Atom::Round { k, r } = a {
            if let Some((_, Atom::Round { r: r0, .. })) = merged
                .iter_mut()
                .find(|(_, b)| matches!(b, Atom::Round { k: k0, .. } if *k0 == k))
            {
                *r0 += w * r;
                continue;
            }
            merged.push((1.0, Atom::Round { k, r: w * r }));
        } else {
            merged.push((w, a));
        }
    }
    Core::Sum(merged)
}

fn sum_support(parts: &[(f64, Atom)], u: &[f64]) -> f64 {
    parts.iter().map(|(w, a)| w * a.support(u)).sum()
}

fn sum_bounds(n: usize, parts: &[(f64, Atom)]) -> (f64, f64) {
    let lo = parts.iter().map(|(w, a)| w * a.inradius(n)).sum();
    let lip = parts.iter().map(|(w, a)| w * a.circumradius(n)).sum();
    (lo, lip)
}

/// Relative bracket tolerance for the inner minimizations.
const SUM_XTOL: f64 = 1e-10;

/// Two unit vectors completing `e` to an orthonormal basis of `R^3`.
fn complete_basis(e: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let i = (0..3)
        .min_by(|&i, &j| e[i].abs().total_cmp(&e[j].abs()))
        .unwrap_or(0);
    let mut t = [0.0; 3];
    t[i] = 1.0;
    let dot = e[i];
    let mut a = [t[0] - dot * e[0], t[1] - dot * e[1], t[2] - dot * e[2]];
    let na = norm(&a);
    a.iter_mut().for_each(|x| *x /= na);
    let b = [
        e[1] * a[2] - e[2] * a[1],
        e[2] * a[0] - e[0] * a[2],
        e[0] * a[1] - e[1] * a[0],
    ];
    (a, b)
}

/// Nearest point of the ellipsoid with semi-axes `c` to an outside `x`:
/// `y_i = c_i^2 x_i / (c_i^2 + l)` where `l >= 0` solves
/// `g(l) = sum (c_i x_i / (c_i^2 + l))^2 - 1 = 0`. `g` is convex and
/// decreasing, so Newton from `l = 0` increases monotonically to the root.
fn ellipsoid_nearest(c: &[f64], x: &[f64], y: &mut [f64]) {
    let mut l = 0.0;
    for _ in 0..100 {
        let mut g = -1.0;
        let mut dg = 0.0;
        for (ci, xi) in c.iter().zip(x) {
            let d = ci * ci + l;
            let q = ci * xi / d;
            g += q * q;
            dg -= 2.0 * q * q / d;
        }
        let step = g / dg;
        l -= step;
        if !(step.abs() > 1e-15 * l.abs()) {
            break;
        }
    }
    for ((yi, ci), xi) in y.iter_mut().zip(c).zip(x) {
        *yi = ci * ci * xi / (ci * ci + l);
    }
}

/// `A + s B_2^n` for a box or ellipsoid `A`: `t theta` is inside exactly
/// when `dist(t theta, A) <= s`. Past `rho_A` the distance is convex and
/// increasing in `t` with derivative `<theta, x - y> / |x - y|`, so Newton
/// from the right converges monotonically.
fn rounded_radial(n: usize, parts: &[(f64, Atom)], theta: &[f64]) -> Option<Radial> {
    let [(w0, a0), (w1, a1)] = parts else {
        return None;
    };
    let (s, (w, a)) = match (a0, a1) {
        (Atom::Round { k, r }, _) if *k == n => (w0 * r, (*w1, a1)),
        (_, Atom::Round { k, r }) if *k == n => (w1 * r, (*w0, a0)),
        _ => return None,
    };
    let a = match a {
        Atom::Box { .. } | Atom::Ellipsoid { .. } => a.scaled(w),
        _ => return None,
    };
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    // (dist - s, d dist / dt) at t.
    let mut eval = |t: f64| {
        for i in 0..n {
            x[i] = t * theta[i];
        }
        match &a {
            Atom::Box { a } => {
                for i in 0..n {
                    y[i] = x[i].clamp(-a[i], a[i]);
                }
            }
            Atom::Ellipsoid { c } => ellipsoid_nearest(c, &x, &mut y),
            _ => unreachable!(),
        }
        let mut d2 = 0.0;
        let mut dot = 0.0;
        for i in 0..n {
            let e = x[i] - y[i];
            d2 += e * e;
            dot += theta[i] * e;
        }
        let d = d2.sqrt();
        (d - s, if d > 0.0 { dot / d } else { 0.0 })
    };
    // |x - y| <= t - rho_A along the ray, so dist - s >= 0 at rho_A + s is
    // not guaranteed; but dist(t) >= (t - rho_A) <theta, nu> grows without
    // bound, so doubling finds a right endpoint.
    let lo = a.radial(theta);
    let mut t = lo + s;
    let mut fv = eval(t);
    while fv.0 < 0.0 {
        t = lo + 2.0 * (t - lo);
        fv = eval(t);
    }
    for _ in 0..100 {
        if fv.0 == 0.0 || !(fv.1 > 0.0) {
            break;
        }
        let step = fv.0 / fv.1;
        t -= step;
        fv = eval(t);
        if step.abs() <= 4.0 * f64::EPSILON * t {
            break;
        }
    }
    Some(Radial {
        value: t,
        err: 8.0 * f64::EPSILON * t,
    })
}

/// `rho = min { h(v) : <v, e> = 1, v in R^d }` divided by `|theta_d|`.
///
/// `h` is convex, so both the line search (`d = 2`) and the nested search
/// (`d = 3`, the outer function being a partial minimum of a convex function)
/// are unimodal and Brent's bracket is a true bracket. The over-estimate is
/// at most `Lip(h) * bracket width`.
fn sum_radial(n: usize, d: usize, parts: &[(f64, Atom)], theta: &[f64]) -> Result<Radial> {
    match rounded_radial(n, parts, theta) {
        Some(r) => Ok(r),
        None => minimized_radial(n, d, parts, theta),
    }
}

fn minimized_radial(n: usize, d: usize, parts: &[(f64, Atom)], theta: &[f64]) -> Result<Radial> {
    let m = norm(&theta[..d]);
    if m == 0.0 {
        return Ok(Radial::exact(f64::INFINITY));
    }
    let mut buf = vec![0.0; n];
    let mut h = |v: &[f64]| {
        buf[..v.len()].copy_from_slice(v);
        sum_support(parts, &buf)
    };
    let (r_lo, lip) = sum_bounds(n, parts);
    match d {
        1 => {
            let e = [theta[0].signum()];
            Ok(Radial::exact(h(&e) / m))
        }
        2 => {
            let e = [theta[0] / m, theta[1] / m];
            let s = h(&e) / r_lo;
            let (_, f, w) = brent_min(
                |t| h(&[e[0] - t * e[1], e[1] + t * e[0]]),
                -s,
                s,
                SUM_XTOL * s,
                500,
            );
            Ok(Radial {
                value: f / m,
                err: lip * w / m,
            })
        }
        3 => {
            let e = [theta[0] / m, theta[1] / m, theta[2] / m];
            let s = h(&e) / r_lo;
            let (a, b) = complete_basis(e);
            let mut inner_width: f64 = 0.0;
            let (_, f, w) = brent_min(
                |p| {
                    let (_, fi, wi) = brent_min(
                        |q| {
                            h(&[
                                e[0] + p * a[0] + q * b[0],
                                e[1] + p * a[1] + q * b[1],
                                e[2] + p * a[2] + q * b[2],
                            ])
                        },
                        -s,
                        s,
                        SUM_XTOL * s,
                        500,
                    );
                    inner_width = inner_width.max(wi);
                    fi
                },
                -s,
                s,
                SUM_XTOL * s,
                500,
            );
            Ok(Radial {
                value: f / m,
                err: lip * (w + inner_width) / m,
            })
        }
        _ => Err(Error::Unsupported(format!(
            "radial of a Minkowski combination with {d} bounded directions (at most 3)"
        ))),
    }
}

/// Grid sizes for the in-radius search of combinations.
const INRADIUS_GRID_2D: usize = 2048;
const INRADIUS_GRID_3D: usize = 8192;

/// `min h` on the unit sphere of `R^d` by a grid, then Brent refinement from
/// the five best seeds. The value is attained, so it over-estimates the
/// minimum; the error bound assumes the basin was seeded.
fn sum_inradius(n: usize, d: usize, parts: &[(f64, Atom)]) -> Result<Radial> {
    let mut buf = vec![0.0; n];
    let mut h = |v: &[f64]| {
        buf[..v.len()].copy_from_slice(v);
        sum_support(parts, &buf)
    };
    let (_, lip) = sum_bounds(n, parts);
    match d {
        1 => Ok(Radial::exact(h(&[1.0]))),
        2 => {
            let step = std::f64::consts::PI / INRADIUS_GRID_2D as f64;
            let mut seeds: Vec<(f64, f64)> = (0..INRADIUS_GRID_2D)
                .map(|i| {
                    let t = i as f64 * step;
                    (h(&[t.cos(), t.sin()]), t)
                })
                .collect();
            seeds.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut best = Radial::exact(f64::INFINITY);
            for &(_, t0) in seeds.iter().take(5) {
                let (_, f, w) =
                    brent_min(|t| h(&[t.cos(), t.sin()]), t0 - step, t0 + step, 1e-13, 300);
                if f < best.value {
                    best = Radial {
                        value: f,
                        err: lip * w,
                    };
                }
            }
            Ok(best)
        }
        3 => {
            let pts = fibonacci_sphere(INRADIUS_GRID_3D);
            let mut seeds: Vec<(f64, [f64; 3])> = pts.iter().map(|p| (h(p), *p)).collect();
            seeds.sort_by(|x, y| x.0.total_cmp(&y.0));
            let spacing = (4.0 * std::f64::consts::PI / INRADIUS_GRID_3D as f64).sqrt();
            let mut best = Radial::exact(f64::INFINITY);
            for &(_, p0) in seeds.iter().take(5) {
                let (a, b) = complete_basis(p0);
                let mut on_sphere = |x: f64, y: f64| {
                    let v = [
                        p0[0] + x * a[0] + y * b[0],
                        p0[1] + x * a[1] + y * b[1],
                        p0[2] + x * a[2] + y * b[2],
                    ];
                    let nv = norm(&v);
                    h(&[v[0] / nv, v[1] / nv, v[2] / nv])
                };
                let mut wy: f64 = 0.0;
                let (_, f, wx) = brent_min(
                    |x| {
                        let (_, fy, w) = brent_min(
                            |y| on_sphere(x, y),
                            -2.0 * spacing,
                            2.0 * spacing,
                            1e-12,
                            300,
                        );
                        wy = wy.max(w);
                        fy
                    },
                    -2.0 * spacing,
                    2.0 * spacing,
                    1e-12,
                    300,
                );
                if f < best.value {
                    best = Radial {
                        value: f,
                        err: lip * (wx + wy),
                    };
                }
            }
            Ok(best)
        }
        _ => Err(Error::Unsupported(format!(
            "in-radius of a Minkowski combination with {d} bounded directions (at most 3)"
        ))),
    }
}

/// `m` nearly uniform points on the unit sphere of `R^3`.
pub fn fibonacci_sphere(m: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..m)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / m as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// `m` equally spaced unit vectors in the plane.
pub fn circle_grid(m: usize) -> Vec<[f64; 2]> {
    (0..m)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            [t.cos(), t.sin()]
        })
        .collect()
}

/// Builds a catalog atom from `key=value` pairs. Recognized names: `whole`,
/// `ball` (`R`), `strip` (`w`), `cylinder` (`k`, `R`), `box` (`a`, slash
/// separated), `lp` (`r`, `p`), `ellipsoid` (`c`, slash separated). Any of
/// them may carry `n`, which must agree with `n` when both are given.
pub fn catalog(name: &str, n: usize, params: &[(&str, &str)]) -> Result<SupportBody> {
    let get = |key: &str| params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
    let num = |key: &str| -> Result<f64> {
        let v =
            get(key).ok_or_else(|| Error::Parse(format!("{name}: missing parameter `{key}`")))?;
        parse_num(v)
    };
    let list = |key: &str| -> Result<Vec<f64>> {
        let v =
            get(key).ok_or_else(|| Error::Parse(format!("{name}: missing parameter `{key}`")))?;
        v.split('/').map(parse_num).collect()
    };
    let allowed: &[&str] = match name {
        "whole" => &["n"],
        "ball" => &["R", "n"],
        "strip" => &["w", "n"],
        "cylinder" => &["k", "R", "n"],
        "box" => &["a", "n"],
        "lp" => &["r", "p", "n"],
        "ellipsoid" => &["c", "n"],
        _ => return Err(Error::Parse(format!("unknown body `{name}`"))),
    };
    if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(k)) {
        return Err(Error::Parse(format!("{name}: unknown parameter `{k}`")));
    }
    let n = match get("n") {
        Some(v) => {
            let m: usize = v
                .parse()
                .map_err(|_| Error::Parse(format!("bad dimension `{v}`")))?;
            if n != 0 && m != n {
                return Err(Error::DimensionMismatch { left: n, right: m });
            }
            m
        }
        None => n,
    };
    let need_n = || {
        if n == 0 {
            Err(Error::Parse(format!("{name}: dimension not given")))
        } else {
            Ok(n)
        }
    };
    let sized = |v: Vec<f64>| -> Result<Vec<f64>> {
        if n != 0 && v.len() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: v.len(),
            });
        }
        Ok(v)
    };
    match name {
        "whole" => SupportBody::whole(need_n()?),
        "ball" => SupportBody::ball(need_n()?, num("R")?),
        "strip" => SupportBody::strip(need_n()?, num("w")?),
        "cylinder" => {
            let k =
                get("k").ok_or_else(|| Error::Parse("cylinder: missing parameter `k`".into()))?;
            let k: usize = k
                .parse()
                .map_err(|_| Error::Parse(format!("bad k `{k}`")))?;
            SupportBody::cylinder(need_n()?, k, num("R")?)
        }
        "box" => SupportBody::boxed(&sized(list("a")?)?),
        "lp" => SupportBody::lp_ball(need_n()?, num("r")?, num("p")?),
        "ellipsoid" => SupportBody::ellipsoid(&sized(list("c")?)?),
        _ => unreachable!(),
    }
}

fn parse_num(s: &str) -> Result<f64> {
    let s = s.trim();
    match s {
        "inf" | "+inf" => Ok(f64::INFINITY),
        _ => s
            .parse()
            .map_err(|_| Error::Parse(format!("bad number `{s}`"))),
    }
}

fn split_params(s: &str) -> Result<Vec<(&str, &str)>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{kv}`")))
        })
        .collect()
}

/// Splits at `sep` occurrences outside parentheses.
fn split_top(s: &str, sep: char) -> Result<Vec<&str>> {
    let mut depth = 0i32;
    let mut out = Vec::new();
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::Parse(format!("unbalanced `)` in `{s}`")));
                }
            }
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::Parse(format!("unbalanced `(` in `{s}`")));
    }
    out.push(&s[start..]);
    Ok(out)
}

fn strip_parens(s: &str) -> &str {
    let t = s.trim();
    if t.starts_with('(') && t.ends_with(')') {
        // Only strip when the outer pair matches itself.
        let inner = &t[1..t.len() - 1];
        if split_top(inner, '|').is_ok() {
            return inner;
        }
    }
    t
}

/// Parses the one-line body grammar; `n = 0` means "take it from the text".
///
/// ```text
/// body    := atom | combo | "(" body ")"
/// atom    := name [":" key "=" value ("," key "=" value)*]
/// combo   := "interp:lambda=" num ";" body "|" body
///          | "translate:v=" num ("/" num)* ";" body
///          | "scale:t=" num ";" body
///          | "sum:;" num "*" body ("|" num "*" body)*
/// ```
/// Operands containing `|` or `;` must be parenthesized.
pub fn parse(text: &str, n: usize) -> Result<SupportBody> {
    let text = strip_parens(text);
    let (head, rest) = match split_top(text, ';')?.as_slice() {
        [only] => (*only, None),
        [h, ..] => (*h, Some(&text[h.len() + 1..])),
        [] => unreachable!(),
    };
    let (name, params) = head.split_once(':').unwrap_or((head, ""));
    let name = name.trim();
    let params = split_params(params)?;
    let num = |key: &str| -> Result<f64> {
        let v = params
            .iter()
            .find(|(k, _)| *k == key)
            .ok_or_else(|| Error::Parse(format!("{name}: missing `{key}`")))?;
        parse_num(v.1)
    };
    let operand = || rest.ok_or_else(|| Error::Parse(format!("{name}: missing operand after `;`")));
    match name {
        "interp" => {
            let ops = split_top(operand()?, '|')?;
            let [a, b] = ops.as_slice() else {
                return Err(Error::Parse(
                    "interp needs exactly two operands `A|B`".into(),
                ));
            };
            let k = parse(a, n)?;
            let l = parse(b, k.n)?;
            SupportBody::interpolate(&k, &l, num("lambda")?)
        }
        "translate" => {
            let v = params
                .iter()
                .find(|(k, _)| *k == "v")
                .ok_or_else(|| Error::Parse("translate: missing `v`".into()))?;
            let v: Vec<f64> = v.1.split('/').map(parse_num).collect::<Result<_>>()?;
            parse(operand()?, if n == 0 { v.len() } else { n })?.translate(&v)
        }
        "scale" => parse(operand()?, n)?.scale(num("t")?),
        "sum" => {
            let mut bodies = Vec::new();
            let mut dim = n;
            for item in split_top(operand()?, '|')? {
                let (w, b) = item.split_once('*').ok_or_else(|| {
                    Error::Parse(format!("sum term `{item}` needs `weight*body`"))
                })?;
                let body = parse(b, dim)?;
                dim = body.n;
                bodies.push((parse_num(w)?, body));
            }
            let refs: Vec<(f64, &SupportBody)> = bodies.iter().map(|(w, b)| (*w, b)).collect();
            SupportBody::combine(&refs)
        }
        _ => {
            if rest.is_some() {
                return Err(Error::Parse(format!("`{name}` takes no operand")));
            }
            catalog(name, n, &params)
        }
    }
}

impl std::str::FromStr for SupportBody {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse(s, 0)
    }
}

impl std::fmt::Display for SupportBody {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn closed_form_radials() {
        let b = SupportBody::ball(3, 2.0).unwrap();
        assert_eq!(b.radial(&[0.3, -0.4, 1.0]).unwrap().value, 2.0);
        let s = SupportBody::strip(2, 0.7).unwrap();
        let th = [0.6, 0.8];
        assert!(close(s.radial(&th).unwrap().value, 0.7 / 0.6, 1e-15));
        assert!(s.radial(&[0.0, 1.0]).unwrap().value.is_infinite());
        let bx = SupportBody::boxed(&[1.0, 2.0, 0.5]).unwrap();
        let th = [0.48, 0.6, 0.64];
        let want = [1.0 / 0.48, 2.0 / 0.6, 0.5 / 0.64]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        assert!(close(bx.radial(&th).unwrap().value, want, 1e-15));
        let c = SupportBody::cylinder(3, 2, 1.5).unwrap();
        assert!(close(
            c.radial(&th).unwrap().value,
            1.5 / (0.48f64.hypot(0.6)),
            1e-15
        ));
    }

    #[test]
    fn support_conventions_for_unbounded_bodies() {
        let s = SupportBody::strip(3, 2.0).unwrap();
        assert_eq!(s.support(&[-1.0, 0.0, 0.0]), 2.0);
        assert!(s.support(&[1.0, 1e-300, 0.0]).is_infinite());
        let c = SupportBody::cylinder(3, 2, 1.0).unwrap();
        assert_eq!(c.support(&[0.6, 0.8, 0.0]), 1.0);
        assert!(c.support(&[0.6, 0.0, 0.8]).is_infinite());
    }

    #[test]
    fn combinations_simplify() {
        let b1 = SupportBody::ball(2, 1.0).unwrap();
        let b3 = SupportBody::ball(2, 3.0).unwrap();
        let m = SupportBody::interpolate(&b1, &b3, 0.5).unwrap();
        assert!(m.has_exact_radial());
        assert!(close(m.support(&[0.0, 1.0]), 2.0, 1e-15));
        let s = SupportBody::strip(2, 0.4).unwrap();
        let sb = SupportBody::interpolate(&s, &b3, 0.25).unwrap();
        assert_eq!(sb.span(), 1);
        assert!(close(
            sb.radial(&[1.0, 0.0]).unwrap().value,
            0.75 * 0.4 + 0.25 * 3.0,
            1e-15
        ));
        let x = SupportBody::boxed(&[1.0, 2.0]).unwrap();
        let y = SupportBody::boxed(&[3.0, 1.0]).unwrap();
        let xy = SupportBody::interpolate(&x, &y, 0.5).unwrap();
        assert_eq!(xy.label(), "box:a=2/1.5");
        let mixed = SupportBody::interpolate(&x, &b1, 0.5).unwrap();
        assert!(!mixed.has_exact_radial());
        let w = SupportBody::whole(2).unwrap();
        assert_eq!(SupportBody::interpolate(&x, &w, 0.1).unwrap().span(), 0);
        assert_eq!(SupportBody::interpolate(&x, &w, 1.0).unwrap().span(), 0);
        assert_eq!(SupportBody::interpolate(&x, &w, 0.0).unwrap(), x);
    }

    #[test]
    fn sum_radial_matches_box_plus_ball_geometry() {
        // box(a) + r B: along e1 the radial is a_1 + r; along the diagonal
        // it reaches the rounded corner.
        for n in [2usize, 3] {
            let a = vec![1.0; n];
            let k = SupportBody::combine(&[
                (1.0, &SupportBody::boxed(&a).unwrap()),
                (1.0, &SupportBody::ball(n, 0.5).unwrap()),
            ])
            .unwrap();
            let mut e1 = vec![0.0; n];
            e1[0] = 1.0;
            let r = k.radial(&e1).unwrap();
            assert!(close(r.value, 1.5, 1e-9), "{r:?}");
            assert!(r.value - r.err <= 1.5 + 1e-15);
            let diag = vec![1.0; n];
            // The corner point (1,..,1) plus 0.5 along the diagonal.
            let want = (n as f64).sqrt() + 0.5;
            assert!(close(k.radial(&diag).unwrap().value, want, 1e-9));
            let inr = k.inradius().unwrap();
            assert!(close(inr.value, 1.5, 1e-9), "{inr:?}");
        }
    }

    #[test]
    fn rounded_fast_path_agrees_with_minimization() {
        for n in [2usize, 3] {
            let a: Vec<f64> = (0..n).map(|i| 0.6 + 0.3 * i as f64).collect();
            for base in [
                SupportBody::boxed(&a).unwrap(),
                SupportBody::ellipsoid(&a).unwrap(),
            ] {
                let k = SupportBody::interpolate(&base, &SupportBody::ball(n, 0.8).unwrap(), 0.4)
                    .unwrap();
                let Core::Sum(parts) = &k.core else {
                    panic!("expected a sum")
                };
                for th in [
                    vec![1.0, 0.3, -0.7],
                    vec![-0.2, 0.9, 0.4],
                    vec![0.5, 0.5, 0.5],
                ] {
                    let th = &th[..n];
                    let m = norm(th);
                    let unit: Vec<f64> = th.iter().map(|t| t / m).collect();
                    let fast = rounded_radial(n, parts, &unit).unwrap();
                    let slow = minimized_radial(n, n, parts, &unit).unwrap();
                    assert!(close(fast.value, slow.value, 1e-8), "{fast:?} {slow:?}");
                    assert!(slow.value >= fast.value - 1e-12);
                }
            }
        }
    }

    #[test]
    fn translate_radial_and_gauge() {
        let b = SupportBody::ball(2, 1.0)
            .unwrap()
            .translate(&[0.5, 0.0])
            .unwrap();
        assert!(!b.is_symmetric());
        assert!(close(b.radial(&[1.0, 0.0]).unwrap().value, 1.5, 1e-14));
        assert!(close(b.radial(&[-1.0, 0.0]).unwrap().value, 0.5, 1e-14));
        assert!(close(
            b.radial(&[0.0, 1.0]).unwrap().value,
            0.75f64.sqrt(),
            1e-14
        ));
        assert!(close(b.support(&[1.0, 0.0]), 1.5, 1e-15));
        assert!(b.inradius().is_err());
        assert!(SupportBody::ball(2, 1.0)
            .unwrap()
            .translate(&[1.0, 0.0])
            .is_err());
        let s = SupportBody::strip(2, 1.0)
            .unwrap()
            .translate(&[0.2, 5.0])
            .unwrap();
        assert!(s.radial(&[0.0, 1.0]).unwrap().value.is_infinite());
    }

    #[test]
    fn inradius_closed_forms() {
        assert_eq!(
            SupportBody::ball(2, 2.5).unwrap().inradius().unwrap().value,
            2.5
        );
        assert_eq!(
            SupportBody::boxed(&[1.0, 0.3, 2.0])
                .unwrap()
                .inradius()
                .unwrap()
                .value,
            0.3
        );
        let l1 = SupportBody::lp_ball(4, 1.0, 1.0)
            .unwrap()
            .inradius()
            .unwrap()
            .value;
        assert!(close(l1, 0.5, 1e-15));
        let l4 = SupportBody::lp_ball(3, 2.0, 4.0)
            .unwrap()
            .inradius()
            .unwrap()
            .value;
        assert_eq!(l4, 2.0);
        assert_eq!(
            SupportBody::ellipsoid(&[3.0, 1.2])
                .unwrap()
                .inradius()
                .unwrap()
                .value,
            1.2
        );
    }

    #[test]
    fn parse_round_trips() {
        for s in [
            "ball:R=1.5,n=3",
            "cylinder:k=2,R=1,n=3",
            "strip:w=0.7,n=2",
            "box:a=1/2/0.5",
            "ellipsoid:c=1/2",
            "lp:r=1,p=3,n=2",
            "lp:r=1,p=inf,n=2",
            "whole:n=2",
        ] {
            let b = parse(s, 0).unwrap();
            assert_eq!(b.label(), s);
            assert_eq!(parse(&b.label(), 0).unwrap(), b);
        }
        let k = parse("interp:lambda=0.25;ball:R=1|box:a=1/0.5", 2).unwrap();
        assert_eq!(parse(&k.label(), 0).unwrap(), k);
        let t = parse(
            "translate:v=0.1/0;(interp:lambda=0.5;ball:R=1|ellipsoid:c=2/1)",
            2,
        )
        .unwrap();
        assert_eq!(parse(&t.label(), 0).unwrap(), t);
        let sc = parse("scale:t=2;box:a=1/3", 0).unwrap();
        assert_eq!(sc.label(), "box:a=2/6");
        assert!(parse("ball:R=-1", 2).is_err());
        assert!(parse("ball:R=1", 0).is_err());
        assert!(parse("box:a=1/2", 3).is_err());
        assert!(parse("lp:r=1,p=0.5", 2).is_err());
        assert!(parse("blob:x=1", 2).is_err());
        assert!(parse("interp:lambda=0.5;ball:R=1", 2).is_err());
    }

    #[test]
    fn fibonacci_points_are_unit_and_balanced() {
        let pts = fibonacci_sphere(1000);
        let mut c = [0.0; 3];
        for p in &pts {
            assert!((norm(p) - 1.0).abs() < 1e-14);
            for i in 0..3 {
                c[i] += p[i] / 1000.0;
            }
        }
        assert!(norm(&c) < 1e-3);
    }
}
