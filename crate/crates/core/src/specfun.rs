//! Gaussian special functions.
//!
//! Notation used across the crate:
//!
//! * `psi`   standard normal CDF.
//! * `phi`   symmetric CDF, `phi(t) = 2 psi(t) - 1 = gamma_1([-t, t])`.
//! * `g(p, t) = t^p exp(-t^2/2)`.
//! * `J_p(R) = int_0^R g(p, t) dt`, with `J_p(inf) = c_p = Gamma((p+1)/2) 2^((p-1)/2)`.
//!
//! All functions are pure. The checked entry points return [`Error::Domain`]
//! outside their domain; the `*_raw` variants skip validation and are used on
//! hot paths inside the crate.

use crate::error::{domain, failure, Error, Result};
use std::f64::consts::{PI, SQRT_2};

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Default relative tolerance of the kernel.
pub const TOL_REL: f64 = 1e-12;

/// `t^p exp(-t^2/2)`.
pub fn g(p: f64, t: f64) -> Result<f64> {
    if !(p >= 0.0) || !(t >= 0.0) {
        return Err(domain(format!("g(p={p}, t={t}) needs p >= 0 and t >= 0")));
    }
    Ok(g_raw(p, t))
}

#[inline]
pub(crate) fn g_raw(p: f64, t: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    if p == 0.0 {
        return (-0.5 * t * t).exp();
    }
    if t == 0.0 {
        return 0.0;
    }
    (p * t.ln() - 0.5 * t * t).exp()
}

/// Gamma function with exact products for integer and half-integer
/// arguments.
pub(crate) fn gamma_fn(a: f64) -> f64 {
    let twice = 2.0 * a;
    if a > 0.0 && a <= 170.0 && twice.fract() == 0.0 {
        let (mut acc, mut x) = if twice as u64 % 2 == 0 {
            (1.0, 1.0)
        } else {
            (PI.sqrt(), 0.5)
        };
        while x < a {
            acc *= x;
            x += 1.0;
        }
        return acc;
    }
    libm::tgamma(a)
}

/// `c_p = J_p(+inf)`.
pub fn c(p: f64) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(domain(format!("c_p needs p >= 0, got {p}")));
    }
    Ok(c_raw(p))
}

#[inline]
pub(crate) fn c_raw(p: f64) -> f64 {
    gamma_fn(0.5 * (p + 1.0)) * 2f64.powf(0.5 * (p - 1.0))
}

/// `J_p(R) = int_0^R t^p exp(-t^2/2) dt`; `R = +inf` gives `c_p`.
pub fn j_lower(p: f64, r: f64) -> Result<f64> {
    if !(p >= 0.0) || !(r >= 0.0) {
        return Err(domain(format!(
            "J_p(R) needs p >= 0 and R >= 0, got p={p}, R={r}"
        )));
    }
    Ok(j_raw(p, r))
}

pub(crate) fn j_raw(p: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    if r.is_infinite() {
        return c_raw(p);
    }
    let a = 0.5 * (p + 1.0);
    let x = 0.5 * r * r;
    if x < a + 1.0 {
        prefactor(p, r) * lower_series(a, x)
    } else {
        c_raw(p) - prefactor(p, r) * upper_fraction(a, x)
    }
}

/// `int_R^inf t^p exp(-t^2/2) dt`, accurate in the far tail.
pub(crate) fn j_upper_raw(p: f64, r: f64) -> f64 {
    if r.is_infinite() {
        return 0.0;
    }
    let a = 0.5 * (p + 1.0);
    let x = 0.5 * r * r;
    if x < a + 1.0 {
        c_raw(p) - j_raw(p, r)
    } else {
        prefactor(p, r) * upper_fraction(a, x)
    }
}

/// `R^(p+1) exp(-R^2/2) / 2`, the common factor of both incomplete-gamma
/// expansions once rewritten in terms of `R`.
#[inline]
fn prefactor(p: f64, r: f64) -> f64 {
    0.5 * ((p + 1.0) * r.ln() - 0.5 * r * r).exp()
}

/// `sum_n x^n / (a (a+1) .. (a+n))`.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut k = a;
    for _ in 0..10_000 {
        k += 1.0;
        term *= x / k;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Continued fraction for `Gamma(a, x) e^x x^-a` (modified Lentz).
fn upper_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut cc = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        cc = b + an / cc;
        if cc.abs() < TINY {
            cc = TINY;
        }
        d = 1.0 / d;
        let del = d * cc;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Inverse of `J_p` on `[0, c_p)`.
pub fn j_inverse(p: f64, y: f64) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(domain(format!("J_p inverse needs p >= 0, got {p}")));
    }
    let cp = c_raw(p);
    if !(y >= 0.0) || y >= cp {
        return Err(domain(format!(
            "J_{p} inverse needs 0 <= y < {cp}, got {y}"
        )));
    }
    j_inverse_raw(p, y)
}

pub(crate) fn j_inverse_raw(p: f64, y: f64) -> Result<f64> {
    if y == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while j_raw(p, hi) <= y {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::NumericalFailure {
                what: format!("bracketing J_{p} inverse at y={y}"),
                achieved: f64::INFINITY,
            });
        }
    }
    // Small-y asymptotics J_p(R) ~ R^(p+1)/(p+1) give a near-exact start.
    let guess = ((p + 1.0) * y).powf(1.0 / (p + 1.0));
    let mut r = if guess > lo && guess < hi {
        guess
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..200 {
        let f = j_raw(p, r) - y;
        if f == 0.0 {
            return Ok(r);
        }
        if f < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let slope = g_raw(p, r);
        let mut next = r - f / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - r).abs();
        r = next;
        if step <= 4.0 * f64::EPSILON * r || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(r);
        }
    }
    Ok(r)
}

/// Solves `int_R^inf t^p exp(-t^2/2) dt = z` for `0 < z <= c_p`, keeping full
/// relative accuracy when `z` is tiny.
pub(crate) fn j_inverse_tail_raw(p: f64, z: f64) -> Result<f64> {
    let cp = c_raw(p);
    if !(z > 0.0) || z > cp {
        return Err(domain(format!(
            "tail inverse of J_{p} needs 0 < z <= {cp}, got {z}"
        )));
    }
    if z == cp {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while j_upper_raw(p, hi) >= z {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(failure(
                format!("bracketing tail inverse of J_{p} at z={z:e}"),
                f64::INFINITY,
            ));
        }
    }
    let ln_z = z.ln();
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let u = j_upper_raw(p, r);
        let f = u.ln() - ln_z;
        if f == 0.0 {
            return Ok(r);
        }
        if f > 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let mut next = r + f * u / g_raw(p, r);
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - r).abs();
        r = next;
        if step <= 4.0 * f64::EPSILON * r || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(r);
        }
    }
    Ok(r)
}

/// Standard normal density.
#[inline]
pub fn gauss_density(t: f64) -> f64 {
    (-0.5 * t * t).exp() / SQRT_2PI
}

/// Standard normal CDF.
pub fn psi(t: f64) -> f64 {
    0.5 * libm::erfc(-t / SQRT_2)
}

/// `phi(t) = 2 psi(t) - 1`, the Gaussian measure of `[-t, t]`.
pub fn phi(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(domain(format!("phi needs t >= 0, got {t}")));
    }
    Ok(phi_raw(t))
}

#[inline]
pub(crate) fn phi_raw(t: f64) -> f64 {
    if t.is_infinite() {
        return 1.0;
    }
    libm::erf(t / SQRT_2)
}

/// Inverse of [`psi`] on `(0, 1)`.
pub fn psi_inv(a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(domain(format!("psi inverse needs a in (0,1), got {a}")));
    }
    Ok(psi_inv_raw(a))
}

pub(crate) fn psi_inv_raw(a: f64) -> f64 {
    if a > 0.5 {
        // 1 - a is exact here.
        return -psi_inv_raw(1.0 - a);
    }
    let mut x = wichura(a);
    // One Halley step against the lower tail.
    if x.is_finite() {
        let e = psi(x) - a;
        let u = e * SQRT_2PI * (0.5 * x * x).exp();
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// Wichura's AS241 rational approximation (about 1e-16 relative).
fn wichura(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2.509_080_928_730_122_672_7e3 * r + 3.343_057_558_358_812_810_5e4)
            * r
            + 6.726_577_092_700_870_085_3e4)
            * r
            + 4.592_195_393_154_987_145_7e4)
            * r
            + 1.373_169_376_550_946_112_5e4)
            * r
            + 1.971_590_950_306_551_442_7e3)
            * r
            + 1.331_416_678_917_843_774_5e2)
            * r
            + 3.387_132_872_796_366_608_0)
            * q;
        let den = ((((((5.226_495_278_852_854_561_0e3 * r + 2.872_908_573_572_194_267_4e4) * r
            + 3.930_789_580_009_271_061_0e4)
            * r
            + 2.121_379_430_158_659_586_7e4)
            * r
            + 5.394_196_021_424_751_107_7e3)
            * r
            + 6.871_870_074_920_579_083_0e2)
            * r
            + 4.231_333_070_160_091_125_2e1)
            * r
            + 1.0;
        return num / den;
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414_076_4e-4 * r + 2.272_384_498_926_918_458_3e-2)
            * r
            + 2.417_807_251_774_506_117_7e-1)
            * r
            + 1.270_458_252_452_368_382_58)
            * r
            + 3.647_848_324_763_204_605_04)
            * r
            + 5.769_497_221_460_691_405_5)
            * r
            + 4.630_337_846_156_545_295_9)
            * r
            + 1.423_437_110_749_683_577_34;
        let den = ((((((1.050_750_071_644_416_843_24e-9 * r + 5.475_938_084_995_344_946e-4)
            * r
            + 1.519_866_656_361_645_719_66e-2)
            * r
            + 1.481_039_764_274_800_745_9e-1)
            * r
            + 6.897_673_349_851_000_045_5e-1)
            * r
            + 1.676_384_830_183_803_849_4)
            * r
            + 2.053_191_626_637_758_821_87)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_132_65e-7 * r + 2.711_555_568_743_487_578_15e-5)
            * r
            + 1.242_660_947_388_078_438_6e-3)
            * r
            + 2.653_218_952_657_612_309_3e-2)
            * r
            + 2.965_605_718_285_048_912_3e-1)
            * r
            + 1.784_826_539_917_291_335_8)
            * r
            + 5.463_784_911_164_114_369_9)
            * r
            + 6.657_904_643_501_103_777_2;
        let den = ((((((2.044_263_103_389_939_785_64e-15 * r + 1.421_511_758_316_445_888_7e-7)
            * r
            + 1.846_318_317_510_054_681_8e-5)
            * r
            + 7.868_691_311_456_132_591e-4)
            * r
            + 1.487_536_129_085_061_485_25e-2)
            * r
            + 1.369_298_809_227_358_053_1e-1)
            * r
            + 5.998_322_065_558_879_376_9e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Inverse of [`phi`] on `(0, 1)`.
pub fn phi_inv(a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(domain(format!("phi inverse needs a in (0,1), got {a}")));
    }
    Ok(phi_inv_raw(a))
}

pub(crate) fn phi_inv_raw(a: f64) -> f64 {
    phi_inv_split(a, 1.0 - a)
}

/// [`phi_inv_raw`] with an exact complement `1 - a` supplied by the caller.
pub(crate) fn phi_inv_split(a: f64, one_minus: f64) -> f64 {
    // Upper-tail form keeps a near 1 accurate; Newton on erf repairs small a.
    let mut x = -psi_inv_raw(0.5 * one_minus);
    if a < 0.5 {
        for _ in 0..3 {
            let f = phi_raw(x) - a;
            let d = 2.0 * gauss_density(x);
            let dx = f / d;
            x -= dx;
            if dx.abs() <= f64::EPSILON * x {
                break;
            }
        }
    }
    x
}

/// `eta(a) = sqrt(2 pi) a b exp(b^2/2)` with `b = psi^-1(a)`.
pub fn eta(a: f64) -> Result<f64> {
    let b = psi_inv(a)?;
    Ok(SQRT_2PI * a * b * (0.5 * b * b).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate1, Tol};

    fn quad_j(p: f64, r: f64) -> f64 {
        integrate1(
            |t| t.powf(p) * (-0.5 * t * t).exp(),
            0.0,
            r,
            Tol::new(0.0, 1e-14),
        )
        .0
    }

    #[test]
    fn g_edge_values() {
        assert_eq!(g(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(g(1.0, 0.0).unwrap(), 0.0);
        assert!((g(2.0, 1.0).unwrap() - (-0.5f64).exp()).abs() < 1e-16);
        assert!(matches!(g(-1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(g(1.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn complete_integrals() {
        assert!((j_lower(1.0, f64::INFINITY).unwrap() - 1.0).abs() < 1e-15);
        assert!((j_lower(0.0, f64::INFINITY).unwrap() - (PI / 2.0).sqrt()).abs() < 1e-15);
        assert!((c(2.0).unwrap() - (PI / 2.0).sqrt()).abs() < 1e-15);
        assert!((c(3.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((c(7.0).unwrap() - 48.0).abs() < 1e-12);
        assert!((c(2.5).unwrap() - libm::tgamma(1.75) * 2f64.powf(0.75)).abs() < 1e-14);
    }

    #[test]
    fn j_matches_high_precision_values() {
        // 30-digit reference quadrature.
        let cases = [
            (0.0, 1.0, 0.855_624_391_892_148_803_17),
            (3.0, 1.7, 0.847_201_685_641_827_283_06),
            (5.0, 1.0, 0.115_101_423_735_765_493_15),
            (2.5, 3.0, 1.478_759_296_759_183_747_4),
            (7.0, 10.0, 47.999_999_999_999_999_795),
            (1.0, 30.0, 1.0),
        ];
        for (p, r, want) in cases {
            let got = j_lower(p, r).unwrap();
            assert!(
                ((got - want) / want).abs() < 1e-13,
                "J_{p}({r}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn j_matches_quadrature_across_branches() {
        for &p in &[0.0, 0.5, 1.0, 2.0, 3.5, 6.0, 9.0] {
            for &r in &[1e-3, 0.1, 0.7, 1.3, 2.0, 3.1, 4.5, 7.0] {
                let got = j_raw(p, r);
                let want = quad_j(p, r);
                assert!(
                    ((got - want) / want).abs() < 1e-12,
                    "p={p} r={r}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn j_recurrence_by_quadrature_oracle() {
        // J_5(1) = 4 J_3(1) - g_4(1), both sides from quadrature.
        let lhs = quad_j(5.0, 1.0);
        let rhs = 4.0 * quad_j(3.0, 1.0) - g_raw(4.0, 1.0);
        assert!(((lhs - rhs) / lhs).abs() < 1e-12);
        assert!(((j_raw(5.0, 1.0) - lhs) / lhs).abs() < 1e-12);
    }

    #[test]
    fn j_inverse_cases() {
        assert_eq!(j_inverse(2.0, 0.0).unwrap(), 0.0);
        let y = 1.0 - (-2.0f64).exp();
        assert!((j_inverse(1.0, y).unwrap() - 2.0).abs() < 1e-12);
        let r = j_inverse(3.0, j_lower(3.0, 1.7).unwrap()).unwrap();
        assert!((r - 1.7).abs() < 1e-10);
        assert!(j_inverse(1.0, 1.0).is_err());
        assert!(j_inverse(1.0, -1e-3).is_err());
        // Tiny arguments stay relative-accurate.
        let r = j_inverse_raw(3.0, 1e-40).unwrap();
        assert!(((j_raw(3.0, r) - 1e-40) / 1e-40).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_and_inverses() {
        assert_eq!(psi(0.0), 0.5);
        assert_eq!(phi(0.0).unwrap(), 0.0);
        // 40-digit references at the exact binary64 inputs.
        let frozen = [
            (1e-20, -9.262_340_089_798_407_579_6),
            (1e-5, -4.264_890_793_922_824_610_2),
            (0.025, -1.959_963_984_540_054_211_8),
            (0.3, -0.524_400_512_708_040_815_97),
            (0.7, 0.524_400_512_708_040_656_31),
            (0.999_999, 4.753_424_308_817_087_765_7),
            (1e-300, -37.047_096_299_361_199_237),
        ];
        for (a, want) in frozen {
            let got = psi_inv(a).unwrap();
            assert!(
                (got - want).abs() < 1e-13 * want.abs().max(1.0),
                "psi_inv({a}) = {got}"
            );
        }
        assert_eq!(psi_inv(0.5).unwrap(), 0.0);
        assert!((phi_inv(phi(1.3).unwrap()).unwrap() - 1.3).abs() < 1e-12);
        assert!(psi_inv(0.0).is_err() && psi_inv(1.0).is_err());
        assert!(phi_inv(0.0).is_err() && phi_inv(1.0).is_err());
        assert!(phi(-0.1).is_err());
        let tiny = phi_inv(1e-12).unwrap();
        assert!((tiny / (1e-12 * (PI / 2.0).sqrt()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn phi_is_interval_measure() {
        for &t in &[0.1, 0.8, 1.7, 3.2] {
            let q = integrate1(gauss_density, -t, t, Tol::new(1e-15, 1e-15)).0;
            assert!((q - phi(t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_values() {
        assert_eq!(eta(0.5).unwrap(), 0.0);
        assert!((eta(0.9).unwrap() - 6.572_121_776_256_228_740_7).abs() < 1e-12);
        assert!(eta(0.2).unwrap() < 0.0);
        for i in 1..1000 {
            let a = i as f64 / 1000.0;
            assert!(eta(a).unwrap() >= -1.0);
        }
        assert!(eta(1.0).is_err());
    }
}
