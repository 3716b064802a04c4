/// Number of warmup steps: `round(warmup_ratio * total_steps)`.
pub fn warmup_steps(total_steps: usize, warmup_ratio: f64) -> usize {
    (warmup_ratio * total_steps as f64).round() as usize
}

/// Linear warmup from 0 to `base_lr` over `[0, w]`, then linear decay to 0 at `total_steps`.
/// Steps past `total_steps` get 0.
pub fn lr_at_step(step: usize, total_steps: usize, base_lr: f64, warmup_ratio: f64) -> f64 {
    let w = warmup_steps(total_steps, warmup_ratio);
    if step >= total_steps && total_steps > w {
        return 0.0;
    }
    if step <= w {
        if w == 0 {
            base_lr
        } else {
            base_lr * (step as f64 / w as f64)
        }
    } else {
        base_lr * ((total_steps - step) as f64 / (total_steps - w) as f64)
    }
}
