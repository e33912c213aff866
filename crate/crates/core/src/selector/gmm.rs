//! Two-component 1-D Gaussian mixture fitted by expectation-maximisation.

use crate::error::{Result, SsrError};

const MAX_ITERS: usize = 100;
const TOL: f64 = 1e-6;
const MIN_VARIANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

impl Component {
    fn log_density(&self, x: f64) -> f64 {
        let d = x - self.mean;
        self.weight.ln()
            - 0.5 * (2.0 * std::f64::consts::PI * self.variance).ln()
            - d * d / (2.0 * self.variance)
    }
}

/// A fitted mixture; `components[0]` always has the lower mean.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoGaussianFit {
    pub components: [Component; 2],
    pub log_likelihood: f64,
    pub iterations: usize,
}

impl TwoGaussianFit {
    /// Posterior probability that `x` came from the lower-mean component.
    pub fn posterior_low(&self, x: f64) -> f64 {
        let [lo, hi] = self.components;
        let (a, b) = (lo.log_density(x), hi.log_density(x));
        1.0 / (1.0 + (b - a).exp())
    }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Default initial state: means at the 10th/90th percentiles, equal weights,
/// both variances at the sample variance.
pub fn default_init(values: &[f64]) -> Result<[Component; 2]> {
    if values.len() < 2 {
        return Err(SsrError::Range(format!(
            "mixture fit needs at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if variance.is_nan() || variance < MIN_VARIANCE {
        return Err(SsrError::DegenerateFit { variance });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let c = |m| Component {
        weight: 0.5,
        mean: m,
        variance,
    };
    Ok([c(percentile(&sorted, 0.1)), c(percentile(&sorted, 0.9))])
}

pub fn fit_two_component(values: &[f64]) -> Result<TwoGaussianFit> {
    let init = default_init(values)?;
    fit_two_component_from(values, init)
}

/// EM from an explicit starting point. Stops after 100 iterations or when
/// the log-likelihood changes by less than 1e-6.
pub fn fit_two_component_from(values: &[f64], init: [Component; 2]) -> Result<TwoGaussianFit> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(SsrError::NonFiniteInput { row: i });
    }
    let n = values.len() as f64;
    let mut comps = init;
    let mut resp = vec![0.0; values.len()];
    let mut prev_ll = f64::NEG_INFINITY;
    let mut ll = prev_ll;
    let mut iterations = 0;

    while iterations < MAX_ITERS {
        iterations += 1;

        // E-step: responsibility of component 0, log-likelihood
        ll = 0.0;
        for (r, &x) in resp.iter_mut().zip(values) {
            let a = comps[0].log_density(x);
            let b = comps[1].log_density(x);
            let m = a.max(b);
            let lse = m + ((a - m).exp() + (b - m).exp()).ln();
            *r = (a - lse).exp();
            ll += lse;
        }

        // M-step
        let mut next = comps;
        for (k, comp) in next.iter_mut().enumerate() {
            let w = |r: f64| if k == 0 { r } else { 1.0 - r };
            let nk: f64 = resp.iter().map(|&r| w(r)).sum();
            if nk <= 0.0 {
                return Err(SsrError::DegenerateFit { variance: 0.0 });
            }
            let mean = resp.iter().zip(values).map(|(&r, &x)| w(r) * x).sum::<f64>() / nk;
            let variance = resp
                .iter()
                .zip(values)
                .map(|(&r, &x)| w(r) * (x - mean).powi(2))
                .sum::<f64>()
                / nk;
            if variance.is_nan() || variance < MIN_VARIANCE {
                return Err(SsrError::DegenerateFit { variance });
            }
            *comp = Component {
                weight: nk / n,
                mean,
                variance,
            };
        }
        comps = next;

        if (ll - prev_ll).abs() < TOL {
            break;
        }
        prev_ll = ll;
    }

    if comps[0].mean > comps[1].mean {
        comps.swap(0, 1);
    }
    Ok(TwoGaussianFit {
        components: comps,
        log_likelihood: ll,
        iterations,
    })
}

/// Loss-mixture selection: keeps samples whose posterior under the
/// lower-mean component exceeds 0.5.
pub fn baseline_gmm_loss(losses: &[f64]) -> Result<Vec<bool>> {
    let fit = fit_two_component(losses)?;
    Ok(losses.iter().map(|&x| fit.posterior_low(x) > 0.5).collect())
}
