//! Log-domain helpers shared by every solver.
//!
//! All sums of exponentials are shifted by their largest exponent before
//! evaluation, so inverse temperatures of order 1e6 neither overflow nor
//! underflow.

/// `log Σ exp(x_i)`, shifted by the maximum. Returns `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// `log Σ w_i exp(x_i)` for nonnegative weights. Zero-weight terms are skipped.
pub fn weighted_log_sum_exp(weights: &[f64], xs: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), xs.len());
    let m = weights
        .iter()
        .zip(xs)
        .filter(|(&w, _)| w > 0.0)
        .map(|(_, &x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = weights
        .iter()
        .zip(xs)
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, &x)| w * (x - m).exp())
        .sum();
    m + s.ln()
}

/// Certainty equivalent `(1/β) log Σ p_i exp(β u_i)` of utilities `u` under the
/// normalized weights `p`.
///
/// The exponent is shifted by the utility that maximizes `β u`, so the result
/// is `u* + (1/β) log s` with `s ∈ (0, 1]`. When `s` is close to one (small
/// `|β|` or nearly constant utilities) the logarithm is taken through
/// `expm1`/`ln_1p`, which keeps full precision down to `|β| ~ 1e-12`.
/// `β = 0` returns the expectation exactly.
pub fn certainty_equivalent(p: &[f64], u: &[f64], beta: f64) -> f64 {
    debug_assert_eq!(p.len(), u.len());
    if beta == 0.0 {
        return expectation(p, u);
    }
    let pivot = p
        .iter()
        .zip(u)
        .filter(|(&w, _)| w > 0.0)
        .map(|(_, &x)| x)
        .fold(None, |acc: Option<f64>, x| match acc {
            Some(best) if beta * best >= beta * x => Some(best),
            _ => Some(x),
        });
    let Some(pivot) = pivot else {
        return f64::NAN;
    };
    let s: f64 = p
        .iter()
        .zip(u)
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, &x)| w * (beta * (x - pivot)).exp())
        .sum();
    let log_s = if s > 0.5 {
        // s - 1 = Σ p_i expm1(β(u_i - u*)) when Σ p_i = 1
        let total: f64 = p.iter().filter(|&&w| w > 0.0).sum();
        let dev: f64 = p
            .iter()
            .zip(u)
            .filter(|(&w, _)| w > 0.0)
            .map(|(&w, &x)| w * (beta * (x - pivot)).exp_m1())
            .sum();
        (dev + (total - 1.0)).ln_1p()
    } else {
        s.ln()
    };
    pivot + log_s / beta
}

/// `Σ p_i u_i`.
pub fn expectation(p: &[f64], u: &[f64]) -> f64 {
    p.iter().zip(u).map(|(a, b)| a * b).sum()
}

/// `x log x` with the convention `0 log 0 = 0`.
pub fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Relative entropy `KL(q ‖ p)` in nats. Terms with `q_i = 0` contribute zero;
/// `q_i > 0` with `p_i = 0` gives `+inf`.
pub fn kl_divergence(q: &[f64], p: &[f64]) -> f64 {
    debug_assert_eq!(q.len(), p.len());
    q.iter()
        .zip(p)
        .map(|(&qi, &pi)| {
            if qi == 0.0 {
                0.0
            } else if pi == 0.0 {
                f64::INFINITY
            } else {
                qi * (qi / pi).ln()
            }
        })
        .sum()
}

/// Normalizes log-weights into probabilities; returns `(probabilities, log normalizer)`.
///
/// Probabilities are formed as `exp(w_i - max) / Σ exp(w_j - max)` rather
/// than `exp(w_i - lse)`, which would lose digits when `lse` is large.
pub fn softmax_with_log_normalizer(log_weights: &[f64]) -> (Vec<f64>, f64) {
    let m = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return (vec![f64::NAN; log_weights.len()], m);
    }
    let e: Vec<f64> = log_weights.iter().map(|&w| (w - m).exp()).collect();
    let s: f64 = e.iter().sum();
    (e.into_iter().map(|x| x / s).collect(), m + s.ln())
}

/// Inclusive linear grid of `count` points from `start` to `stop`.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (count - 1) as f64;
            (0..count)
                .map(|i| {
                    if i + 1 == count {
                        stop
                    } else {
                        start + step * i as f64
                    }
                })
                .collect()
        }
    }
}
