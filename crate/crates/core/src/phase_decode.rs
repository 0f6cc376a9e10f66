//! N-step phase shifting: fringe synthesis and decoding into wrapped phase,
//! background intensity and modulation.
//!
//! Frames follow `I_n = I' + I'' cos(Phi + 2 pi n / N)`. With
//! `S = sum I_n sin(2 pi n / N)` and `C = sum I_n cos(2 pi n / N)` the wrapped
//! phase is `atan2(-S, C)`, the background is the frame mean and the modulation
//! is `(2 / N) sqrt(S^2 + C^2)`.

use crate::error::{Error, Result};
use crate::formats::{check_dims, FloatMap, FringeStack, Mask};
use crate::scalar::Real;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap<T: Real>(x: T) -> Result<T> {
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(wrap_with_turns(x).0)
}

/// Wraps a finite angle into `(-pi, pi]`, also returning the integer `m` with
/// `x - 2 pi m == wrapped`.
#[inline]
pub(crate) fn wrap_with_turns<T: Real>(x: T) -> (T, i64) {
    let tau = T::two_pi();
    let pi = T::PI();
    let m = (x / tau).round();
    let mut r = x - m * tau;
    let mut turns = m.to_i64().unwrap_or(0);
    if r <= -pi {
        r = r + tau;
        turns -= 1;
    } else if r > pi {
        r = r - tau;
        turns += 1;
    }
    (r, turns)
}

#[inline]
pub(crate) fn wrap_angle<T: Real>(x: T) -> T {
    wrap_with_turns(x).0
}

/// `sin(2 pi n / N)` and `cos(2 pi n / N)` for `n = 0..N`.
fn shift_table<T: Real>(n_steps: usize) -> Vec<(T, T)> {
    let n = T::lit(n_steps as f64);
    (0..n_steps)
        .map(|k| {
            let delta = T::two_pi() * T::lit(k as f64) / n;
            (delta.sin(), delta.cos())
        })
        .collect()
}

/// Renders `N` phase-shifted frames from continuous phase, background and modulation.
pub fn synthesize_fringes<T: Real>(
    phi: &FloatMap<T>,
    background: &FloatMap<T>,
    modulation: &FloatMap<T>,
    n_steps: usize,
) -> Result<FringeStack<T>> {
    if n_steps < 3 {
        return Err(Error::TooFewSteps(n_steps));
    }
    check_dims(
        phi.width(),
        phi.height(),
        background.width(),
        background.height(),
    )?;
    check_dims(
        phi.width(),
        phi.height(),
        modulation.width(),
        modulation.height(),
    )?;
    if modulation.data().iter().any(|&m| m < T::zero()) {
        return Err(Error::InvalidParameter("negative modulation".into()));
    }
    let n = T::lit(n_steps as f64);
    let frames = (0..n_steps)
        .map(|k| {
            let delta = T::two_pi() * T::lit(k as f64) / n;
            let data = phi
                .data()
                .iter()
                .zip(background.data())
                .zip(modulation.data())
                .map(|((&p, &a), &b)| a + b * (p + delta).cos())
                .collect();
            FloatMap::new(phi.width(), phi.height(), data)
        })
        .collect::<Result<Vec<_>>>()?;
    FringeStack::new(frames)
}

/// Per-point `(S, C)` sums.
fn quadrature_sums<T: Real>(stack: &FringeStack<T>) -> Vec<(T, T)> {
    let table = shift_table::<T>(stack.n_steps());
    let len = stack.width() * stack.height();
    let mut sums = vec![(T::zero(), T::zero()); len];
    for (frame, &(s, c)) in stack.frames().iter().zip(&table) {
        for (acc, &v) in sums.iter_mut().zip(frame.data()) {
            acc.0 = acc.0 + v * s;
            acc.1 = acc.1 + v * c;
        }
    }
    sums
}

/// Wrapped phase in `(-pi, pi]`. Points whose quadrature sums both vanish are
/// marked invalid (value 0).
pub fn decode_wrapped<T: Real>(stack: &FringeStack<T>) -> FloatMap<T> {
    let eps = T::degenerate_eps();
    let (w, h) = (stack.width(), stack.height());
    let sums = quadrature_sums(stack);
    let mut valid = vec![true; sums.len()];
    let data = sums
        .iter()
        .zip(valid.iter_mut())
        .map(|(&(s, c), ok)| {
            if s.abs() <= eps && c.abs() <= eps {
                *ok = false;
                return T::zero();
            }
            let phi = (-s).atan2(c);
            // atan2 reports -pi for a negative-zero numerator.
            if phi <= -T::PI() {
                T::PI()
            } else {
                phi
            }
        })
        .collect();
    let map = FloatMap::new(w, h, data).expect("atan2 of finite sums is finite");
    if valid.iter().all(|&b| b) {
        map
    } else {
        map.with_validity(Mask::new(w, h, valid).expect("length matches"))
            .expect("dims match")
    }
}

/// Background intensity: the pointwise frame mean.
pub fn decode_background<T: Real>(stack: &FringeStack<T>) -> FloatMap<T> {
    let n = T::lit(stack.n_steps() as f64);
    let mut acc = vec![T::zero(); stack.width() * stack.height()];
    for frame in stack.frames() {
        for (a, &v) in acc.iter_mut().zip(frame.data()) {
            *a = *a + v;
        }
    }
    let data = acc.into_iter().map(|a| a / n).collect();
    FloatMap::new(stack.width(), stack.height(), data).expect("mean of finite frames is finite")
}

/// Intensity modulation `(2 / N) sqrt(S^2 + C^2)`.
pub fn decode_modulation<T: Real>(stack: &FringeStack<T>) -> FloatMap<T> {
    let scale = T::lit(2.0) / T::lit(stack.n_steps() as f64);
    let data = quadrature_sums(stack)
        .into_iter()
        .map(|(s, c)| scale * s.hypot(c))
        .collect();
    FloatMap::new(stack.width(), stack.height(), data).expect("finite sums")
}

/// Phase-shifted binary (square-wave) patterns with a Gaussian defocus.
///
/// Fringes are vertical: intensity varies along columns with carrier phase
/// `2 pi (col + 0.5) / period`. Frame `n` is 1 where
/// `cos(carrier + 2 pi n / N) >= 0` and 0 elsewhere, i.e. a 50% duty square
/// wave shifted by `period / N` pixels per step. The defocus blur is applied
/// along the row on a pattern extended past the image border, so it behaves
/// like optical blur of an unbounded projected pattern.
pub fn synthesize_binary_patterns<T: Real>(
    period: f64,
    n_steps: usize,
    defocus_sigma: f64,
    width: usize,
    height: usize,
) -> Result<FringeStack<T>> {
    if n_steps < 3 {
        return Err(Error::TooFewSteps(n_steps));
    }
    if !(period >= 4.0) || !period.is_finite() {
        return Err(Error::InvalidParameter(format!("period {period} < 4")));
    }
    if !(defocus_sigma >= 0.0) || !defocus_sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "defocus sigma {defocus_sigma} must be >= 0"
        )));
    }
    let kernel = gaussian_kernel(defocus_sigma);
    let radius = kernel.len() / 2;
    let frames = (0..n_steps)
        .map(|n| {
            let shift = n as f64 / n_steps as f64;
            let extended: Vec<f64> = (0..width + 2 * radius)
                .map(|c| {
                    let x = c as f64 - radius as f64 + 0.5;
                    // Position within the period, offset so the bright half
                    // is centred on the cosine crest.
                    let t = (x / period + shift + 0.25).rem_euclid(1.0);
                    if t < 0.5 {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let row: Vec<T> = (0..width)
                .map(|c| {
                    let v: f64 = kernel
                        .iter()
                        .zip(&extended[c..c + kernel.len()])
                        .map(|(k, v)| k * v)
                        .sum();
                    T::lit(v)
                })
                .collect();
            FloatMap::from_fn(width, height, |_, col| row[col])
        })
        .collect();
    FringeStack::new(frames)
}

/// Normalized Gaussian kernel truncated at four sigma; a single tap for sigma 0.
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![1.0];
    }
    let radius = (4.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}
