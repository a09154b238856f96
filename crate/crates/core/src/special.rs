//! Sine and cosine integrals.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

const EULER: f64 = 0.577_215_664_901_532_9;
const SWITCH: f64 = 2.0;

/// Continued fraction for E1(ix), returning `h` with
/// `Ci(x) = -Re h` and `Si(x) = pi/2 + Im h` (x > SWITCH).
fn tail_fraction(t: f64) -> Complex64 {
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, t);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 2..200 {
        let a = -((i - 1) as f64).powi(2);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    Complex64::new(t.cos(), -t.sin()) * h
}

/// Series for `(Si(t), Ci(t) - ln t - gamma)`, `0 < t <= SWITCH`.
fn series(t: f64) -> (f64, f64) {
    let t2 = t * t;
    // Si = sum (-1)^k t^(2k+1) / ((2k+1)(2k+1)!)
    let mut si = 0.0;
    let mut term = t;
    let mut k = 0;
    loop {
        let v = term / (2 * k + 1) as f64;
        si += v;
        if v.abs() < 1e-18 * si.abs() {
            break;
        }
        term *= -t2 / (((2 * k + 2) * (2 * k + 3)) as f64);
        k += 1;
    }
    (si, -cin_series(t))
}

/// `Cin(t) = sum_{k>=1} (-1)^(k+1) t^(2k) / (2k (2k)!)`.
fn cin_series(t: f64) -> f64 {
    let t2 = t * t;
    let mut sum = 0.0;
    let mut term = t2 / 2.0; // t^2 / 2!
    let mut k = 1;
    loop {
        let v = term / (2 * k) as f64;
        sum += v;
        if v.abs() <= 1e-18 * sum.abs() {
            break;
        }
        term *= -t2 / (((2 * k + 1) * (2 * k + 2)) as f64);
        k += 1;
    }
    sum
}

/// Sine integral `Si(x) = ∫_0^x sin(t)/t dt`.
pub fn si(x: f64) -> f64 {
    let t = x.abs();
    let v = if t == 0.0 {
        0.0
    } else if t > SWITCH {
        FRAC_PI_2 + tail_fraction(t).im
    } else {
        series(t).0
    };
    v.copysign(x)
}

/// `pi/2 - Si(x)` for `x >= 0`, accurate for large `x`.
pub fn si_complement(x: f64) -> f64 {
    if x > SWITCH {
        -tail_fraction(x).im
    } else {
        FRAC_PI_2 - si(x)
    }
}

/// Cosine integral `Ci(x) = gamma + ln x + ∫_0^x (cos t - 1)/t dt`, `x > 0`.
pub fn ci(x: f64) -> f64 {
    if x <= 0.0 {
        return if x == 0.0 { f64::NEG_INFINITY } else { f64::NAN };
    }
    if x > SWITCH {
        -tail_fraction(x).re
    } else {
        EULER + x.ln() + series(x).1
    }
}

/// `Cin(x) = ∫_0^x (1 - cos t)/t dt`, even in `x`.
pub fn cin(x: f64) -> f64 {
    let t = x.abs();
    if t == 0.0 {
        0.0
    } else if t > SWITCH {
        EULER + t.ln() - ci(t)
    } else {
        cin_series(t)
    }
}
