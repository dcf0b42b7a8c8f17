use crate::error::{Error, Result};
use crate::stats::{mean, sample_variance};

/// Classic (unsplit) potential scale reduction factor.
///
/// `B = n/(m-1) Σ (mean_j - mean)²`, `W` = average within-chain sample
/// variance, `R̂ = sqrt(((n-1)/n W + B/n) / W)`.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> Result<f64> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 chains, got {m}")));
    }
    let n = chains[0].len();
    if n < 2 || chains.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidArgument(
            "chains must share a length of at least 2".into(),
        ));
    }
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let b = nf * sample_variance(&means);
    let w = chains.iter().map(|c| sample_variance(c)).sum::<f64>() / m as f64;
    if w == 0.0 {
        if b == 0.0 {
            return Ok(1.0);
        }
        return Err(Error::DegenerateChains(
            "zero within-chain variance with distinct chain means".into(),
        ));
    }
    Ok((((nf - 1.0) / nf * w + b / nf) / w).sqrt())
}

/// Monte-Carlo standard error of the mean by non-overlapping batch means.
pub fn batch_means_se(draws: &[f64], n_batches: usize) -> f64 {
    let size = draws.len() / n_batches;
    assert!(size >= 1 && n_batches >= 2, "too few draws for batch means");
    let batch: Vec<f64> = (0..n_batches)
        .map(|b| mean(&draws[b * size..(b + 1) * size]))
        .collect();
    (sample_variance(&batch) / n_batches as f64).sqrt()
}
