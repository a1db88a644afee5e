use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpearmanError {
    #[error("need at least 3 pairs, got {0}")]
    InsufficientPairs(usize),
    #[error("paired inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("input is constant; correlation is undefined")]
    ConstantInput,
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn mean_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation, clamped to `[-1, 1]`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, SpearmanError> {
    if x.len() != y.len() {
        return Err(SpearmanError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(SpearmanError::ConstantInput);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation: Pearson correlation of mean ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, SpearmanError> {
    if x.len() != y.len() {
        return Err(SpearmanError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(SpearmanError::InsufficientPairs(x.len()));
    }
    if let Some(k) = x.iter().chain(y).position(|v| !v.is_finite()) {
        return Err(SpearmanError::NonFinite(k % x.len()));
    }
    pearson(&mean_ranks(x), &mean_ranks(y))
}
