use super::AgentConfig;

/// `clip(exp(advantage / temperature), lo, hi)`.
pub fn exp_clip(advantage: f64, cfg: &AgentConfig) -> f64 {
    (advantage / cfg.awr_temperature)
        .exp()
        .clamp(cfg.exp_clip_lo, cfg.exp_clip_hi)
}

/// 1 for advantages above the threshold, `eps_min` otherwise.
pub fn best_advantage_factor(advantage: f64, threshold: f64, cfg: &AgentConfig) -> f64 {
    if advantage > threshold {
        1.0
    } else {
        cfg.eps_min
    }
}

/// Imitation weight `gamma^offset * exp_clip(A) * eps(A)`.
pub fn wgcsl_weight(advantage: f64, offset: usize, threshold: f64, cfg: &AgentConfig) -> f64 {
    cfg.gamma.powi(offset as i32) * exp_clip(advantage, cfg) * best_advantage_factor(advantage, threshold, cfg)
}

/// Linearly interpolated sample quantile (`q` in `[0, 1]`).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}
