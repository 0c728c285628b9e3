//! Autocorrelation-method linear prediction and the FIR/IIR helpers built on it.

use crate::error::{Error, Result};

/// Biased autocorrelation `r[k] = Σ x[n] x[n+k]` for `k = 0..=max_lag`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|k| {
            if k >= x.len() {
                0.0
            } else {
                x[..x.len() - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum()
            }
        })
        .collect()
}

/// Levinson-Durbin recursion. Returns the inverse-filter polynomial
/// `[1, a1, .., ap]` of `A(z) = 1 + Σ a_k z^-k` and the final prediction error.
///
/// If the prediction error collapses before reaching `order` (a perfectly
/// predictable input) the remaining coefficients stay zero.
pub fn levinson(r: &[f64], order: usize) -> Result<(Vec<f64>, f64)> {
    if r.len() <= order {
        return Err(Error::InvalidParameter(format!(
            "need {} autocorrelation lags, got {}",
            order + 1,
            r.len()
        )));
    }
    if !(r[0] > 0.0) || !r[0].is_finite() {
        return Err(Error::Degenerate("zero-energy frame has no LP model".into()));
    }
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    let mut prev = a.clone();
    for i in 1..=order {
        if err <= r[0] * 1e-12 {
            break;
        }
        let acc: f64 = (0..i).map(|j| a[j] * r[i - j]).sum();
        let k = -acc / err;
        prev[..i].copy_from_slice(&a[..i]);
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
    }
    Ok((a, err))
}

/// LP coefficients of a (caller-windowed) frame by the autocorrelation
/// method. The returned polynomial is minimum phase.
pub fn lp_coefficients(frame: &[f64], order: usize) -> Result<Vec<f64>> {
    if order == 0 {
        return Err(Error::InvalidParameter("LP order must be positive".into()));
    }
    if frame.len() <= 3 * order {
        return Err(Error::InvalidParameter(format!(
            "frame of {} samples is too short for order {order}",
            frame.len()
        )));
    }
    let mut r = autocorrelation(frame, order);
    // Tiny white-noise floor keeps the recursion well conditioned.
    r[0] *= 1.0 + 1e-9;
    levinson(&r, order).map(|(a, _)| a)
}

/// FIR filtering `y[n] = Σ b[k] x[n-k]` with zero initial state.
pub fn fir_filter(b: &[f64], x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| {
            b.iter()
                .enumerate()
                .take(n + 1)
                .map(|(k, bk)| bk * x[n - k])
                .sum()
        })
        .collect()
}

/// All-pole filtering `y[n] = x[n] - Σ_{k≥1} a[k] y[n-k]` for `a = [1, a1, ..]`.
pub fn all_pole_filter(a: &[f64], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for n in 0..x.len() {
        let mut acc = x[n];
        for (k, ak) in a.iter().enumerate().skip(1) {
            if k > n {
                break;
            }
            acc -= ak * y[n - k];
        }
        y[n] = acc;
    }
    y
}

/// Leaky integrator `y[n] = x[n] + leak * y[n-1]`.
pub fn leaky_integrate(x: &[f64], leak: f64) -> Vec<f64> {
    let mut state = 0.0;
    x.iter()
        .map(|&v| {
            state = v + leak * state;
            state
        })
        .collect()
}
