//! Small statistics helpers for the Monte Carlo checks.

/// Kolmogorov-Smirnov distance between the empirical distribution of event
/// times and a possibly defective CDF, on `[0, t_max]`.
///
/// `times` holds one entry per trajectory; `None` (or a time beyond
/// `t_max`) means no event was observed in the window.
pub fn ks_distance(times: &[Option<f64>], t_max: f64, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = times.len().max(1) as f64;
    let mut seen: Vec<f64> = times.iter().flatten().copied().filter(|&t| t <= t_max).collect();
    seen.sort_by(f64::total_cmp);
    let mut d: f64 = 0.0;
    for (i, &t) in seen.iter().enumerate() {
        let f = cdf(t);
        d = d.max((i as f64 / n - f).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d.max((seen.len() as f64 / n - cdf(t_max)).abs())
}

/// Fraction of entries with an event at or before `t`.
pub fn empirical_cdf(times: &[Option<f64>], t: f64) -> f64 {
    let hits = times.iter().flatten().filter(|&&s| s <= t).count();
    hits as f64 / times.len().max(1) as f64
}

/// Maximum-likelihood rate of an exponential from first-event times
/// censored at `t_max`: events divided by total exposure.
pub fn censored_exponential_rate(times: &[Option<f64>], t_max: f64) -> f64 {
    let mut events = 0usize;
    let mut exposure = 0.0;
    for t in times {
        match t {
            Some(s) if *s <= t_max => {
                events += 1;
                exposure += s;
            }
            _ => exposure += t_max,
        }
    }
    if exposure > 0.0 {
        events as f64 / exposure
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = xs.iter().zip(ys).map(|(x, y)| y - (slope * x + intercept)).collect();
    Some(LinearFit { slope, intercept, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_perfect_grid_sample() {
        // Quantiles of the uniform law on [0, 1].
        let n = 100;
        let times: Vec<Option<f64>> = (0..n).map(|i| Some((i as f64 + 0.5) / n as f64)).collect();
        let d = ks_distance(&times, 1.0, |t| t);
        assert!((d - 0.005).abs() < 1e-12);
    }

    #[test]
    fn ks_with_censoring() {
        let times = vec![None, Some(0.5), None, Some(2.0)];
        // One event in [0, 1] out of four, against a CDF that is 0.25 at 1.
        let d = ks_distance(&times, 1.0, |t| 0.25 * t);
        assert!((d - 0.125).abs() < 1e-15);
    }

    #[test]
    fn censored_rate() {
        let times = vec![Some(1.0), Some(3.0), None];
        assert!((censored_exponential_rate(&times, 10.0) - 2.0 / 14.0).abs() < 1e-15);
    }

    #[test]
    fn exact_line() {
        let fit = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-15 && (fit.intercept - 1.0).abs() < 1e-15);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-15));
    }
}
