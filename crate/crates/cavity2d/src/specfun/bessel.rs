//! Cylinder Bessel functions J0, J1, Y0, Y1 of a positive real argument,
//! and the Hankel functions of the first kind built from them.
//!
//! Evaluation strategy:
//!
//! * `x < 2`: ascending power series in plain f64 (no cancellation yet).
//! * `2 <= x < 17`: ascending series with the term recurrence carried in
//!   double-double arithmetic. The alternating series cancels its largest
//!   term (about `(x/2)^{2m}/(m!)^2` at `m ~ x/2`) down to an O(1) result,
//!   which costs `log10(max term)` digits in plain f64; the double-double
//!   carry keeps the final value good to ~1e-13 relative up to the
//!   crossover.
//! * `x >= 17`: Hankel asymptotic expansion with phase functions P, Q.
//!   At x = 17 the optimally truncated tail is below 1e-14.
//!
//! The two branches agree to better than 1e-12 across the overlap window
//! (checked in the tests), so the crossover introduces no visible seam.

use super::SpecFunError;
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Below this the plain f64 series is already at full precision.
const SERIES_F64_MAX: f64 = 2.0;
/// Series/asymptotic crossover.
const SERIES_MAX: f64 = 17.0;
/// Beyond this the f64 phase `x mod 2pi` has lost too many digits to
/// promise 12 significant figures.
const ARG_MAX: f64 = 1e8;

/// J and Y of order 0 or 1.
///
/// Accurate to at least 12 significant digits (relative to the envelope
/// `sqrt(J^2 + Y^2)`) for `x` in `[1e-6, 1e4]` and well beyond.
pub fn cyl_bessel_pair(order: u8, x: f64) -> Result<(f64, f64), SpecFunError> {
    let (j0, y0, j1, y1) = jy_all(x)?;
    match order {
        0 => Ok((j0, y0)),
        1 => Ok((j1, y1)),
        _ => Err(SpecFunError::UnsupportedOrder(order)),
    }
}

/// Hankel function of the first kind, `H_n(x) = J_n(x) + i Y_n(x)`.
pub fn hankel1(order: u8, x: f64) -> Result<Complex64, SpecFunError> {
    let (j, y) = cyl_bessel_pair(order, x)?;
    Ok(Complex64::new(j, y))
}

/// Both Hankel functions `(H0, H1)` in one evaluation; the kernel routines
/// need both orders at the same argument.
pub(crate) fn hankel_pair(x: f64) -> Result<(Complex64, Complex64), SpecFunError> {
    let (j0, y0, j1, y1) = jy_all(x)?;
    Ok((Complex64::new(j0, y0), Complex64::new(j1, y1)))
}

fn jy_all(x: f64) -> Result<(f64, f64, f64, f64), SpecFunError> {
    if !x.is_finite() || x <= 0.0 {
        return Err(SpecFunError::Domain(x));
    }
    if x > ARG_MAX {
        return Err(SpecFunError::OutOfRange(x));
    }
    Ok(if x < SERIES_F64_MAX {
        series_f64(x)
    } else if x < SERIES_MAX {
        series_dd(x)
    } else {
        asymptotic(x)
    })
}

// ---------------------------------------------------------------------------
// ascending series, plain f64 (x < 2)
// ---------------------------------------------------------------------------

fn series_f64(x: f64) -> (f64, f64, f64, f64) {
    let q = 0.25 * x * x;
    let log_term = (0.5 * x).ln() + EULER_GAMMA;

    // J0 and the Y0 series sum share the term q^m / (m!)^2.
    let mut t = 1.0;
    let mut j0 = 1.0;
    let mut s0 = 0.0; // sum (-1)^{m+1} H_m q^m / (m!)^2
    let mut h = 0.0;
    let mut sign = 1.0;
    for m in 1..200 {
        t *= q / ((m * m) as f64);
        h += 1.0 / m as f64;
        j0 += -sign * t; // (-1)^m t
        s0 += sign * h * t; // (-1)^{m+1} H_m t
        sign = -sign;
        if t < 1e-18 * (1.0 + j0.abs()) {
            break;
        }
    }
    let y0 = (2.0 / PI) * (log_term * j0 + s0);

    // J1 term: (x/2) q^k / (k!(k+1)!); Y1 series carries H_k + H_{k+1}.
    let half = 0.5 * x;
    let mut t1 = half;
    let mut j1 = half;
    let mut s1 = half; // k = 0: (H_0 + H_1) = 1
    let mut hk = 0.0;
    let mut hk1 = 1.0;
    let mut sign = -1.0;
    for k in 1..200 {
        t1 *= q / ((k * (k + 1)) as f64);
        hk += 1.0 / k as f64;
        hk1 += 1.0 / (k + 1) as f64;
        j1 += sign * t1;
        s1 += sign * (hk + hk1) * t1;
        sign = -sign;
        if t1 < 1e-18 * (1.0 + j1.abs()) {
            break;
        }
    }
    let y1 = (2.0 * log_term * j1 - 2.0 / x - s1) / PI;

    (j0, y0, j1, y1)
}

// ---------------------------------------------------------------------------
// ascending series with double-double term recurrence (2 <= x < 17)
// ---------------------------------------------------------------------------

/// Unevaluated double-f64 sum, good to ~1e-32 relative.
#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn renorm(s: f64, e: f64) -> Dd {
        let hi = s + e;
        Dd { hi, lo: e - (hi - s) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = self.hi + o.hi;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (o.hi - bb) + self.lo + o.lo;
        Dd::renorm(s, err)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + self.hi * o.lo + self.lo * o.hi;
        Dd::renorm(p, e)
    }

    fn div_f(self, f: f64) -> Dd {
        let q1 = self.hi / f;
        let p = q1 * f;
        let e = q1.mul_add(f, -p);
        let r = ((self.hi - p) - e) + self.lo;
        Dd::renorm(q1, r / f)
    }

    fn scale(self, f: f64) -> Dd {
        self.mul(Dd::from(f))
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

fn series_dd(x: f64) -> (f64, f64, f64, f64) {
    let xd = Dd::from(x);
    let q = xd.mul(xd).scale(0.25); // exact: two_prod then power-of-two scale
    let log_term = (0.5 * x).ln() + EULER_GAMMA;

    let mut t = Dd::from(1.0);
    let mut j0 = Dd::from(1.0);
    let mut s0 = Dd::from(0.0);
    let mut h = Dd::from(0.0);
    let mut sign = 1.0;
    for m in 1..400usize {
        t = t.mul(q).div_f((m * m) as f64);
        h = h.add(Dd::from(1.0).div_f(m as f64));
        j0 = j0.add(t.scale(-sign));
        s0 = s0.add(t.mul(h).scale(sign));
        sign = -sign;
        if t.hi.abs() < 1e-34 * (1.0 + j0.hi.abs()) {
            break;
        }
    }
    let y0 = Dd::from(log_term).mul(j0).add(s0).scale(2.0 / PI);

    let mut t1 = xd.scale(0.5);
    let mut j1 = t1;
    let mut s1 = t1;
    let mut hk = Dd::from(0.0);
    let mut hk1 = Dd::from(1.0);
    let mut sign = -1.0;
    for k in 1..400usize {
        t1 = t1.mul(q).div_f((k * (k + 1)) as f64);
        hk = hk.add(Dd::from(1.0).div_f(k as f64));
        hk1 = hk1.add(Dd::from(1.0).div_f((k + 1) as f64));
        j1 = j1.add(t1.scale(sign));
        s1 = s1.add(hk.add(hk1).mul(t1).scale(sign));
        sign = -sign;
        if t1.hi.abs() < 1e-34 * (1.0 + j1.hi.abs()) {
            break;
        }
    }
    let y1 = Dd::from(log_term)
        .mul(j1)
        .scale(2.0)
        .add(Dd::from(-2.0).div_f(x))
        .add(s1.neg())
        .scale(1.0 / PI);

    (j0.value(), y0.value(), j1.value(), y1.value())
}

// ---------------------------------------------------------------------------
// Hankel asymptotic expansion (x >= 17)
// ---------------------------------------------------------------------------

/// Phase-function sums P, Q for order nu at argument x.
fn pq(mu: f64, x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut q = 0.0;
    let mut d: f64 = 1.0; // a_k(nu) / x^k
    let mut last = f64::INFINITY;
    for k in 0..40usize {
        let mag = d.abs();
        if mag > last {
            break; // divergence onset: stop at the optimal truncation
        }
        last = mag;
        let j = k / 2;
        let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sgn * d;
        } else {
            q += sgn * d;
        }
        if mag < 1e-19 {
            break;
        }
        let odd = (2 * k + 1) as f64;
        d *= (mu - odd * odd) / (8.0 * (k + 1) as f64 * x);
    }
    (p, q)
}

fn asymptotic(x: f64) -> (f64, f64, f64, f64) {
    let amp = (2.0 / (PI * x)).sqrt();
    let (s, c) = x.sin_cos();

    // omega = x - pi/4: evaluate sin/cos through the addition formulas so no
    // precision is lost subtracting the phase offset from a large argument.
    let cos0 = (c + s) * FRAC_1_SQRT_2;
    let sin0 = (s - c) * FRAC_1_SQRT_2;
    let (p0, q0) = pq(0.0, x);
    let j0 = amp * (p0 * cos0 - q0 * sin0);
    let y0 = amp * (p0 * sin0 + q0 * cos0);

    // omega = x - 3pi/4
    let cos1 = (s - c) * FRAC_1_SQRT_2;
    let sin1 = -(s + c) * FRAC_1_SQRT_2;
    let (p1, q1) = pq(4.0, x);
    let j1 = amp * (p1 * cos1 - q1 * sin1);
    let y1 = amp * (p1 * sin1 + q1 * cos1);

    (j0, y0, j1, y1)
}
