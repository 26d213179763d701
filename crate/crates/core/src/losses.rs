//! Detection losses with analytic gradients, and a central-difference checker.
//!
//! All positive-normalized losses are zero (with zero gradient) when there are
//! no positives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Loss weights: `beta = [bbox, cls, dir]`, focal `alpha` per class and `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub beta: [f64; 3],
    pub alpha: Vec<f64>,
    pub gamma: f64,
}

impl LossWeights {
    /// PointPillars-style defaults: beta (2, 1, 0.2), alpha 0.25, gamma 2.
    pub fn defaults(num_classes: usize) -> Self {
        Self {
            beta: [2.0, 1.0, 0.2],
            alpha: vec![0.25; num_classes],
            gamma: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.beta.iter().chain(&self.alpha).chain(std::iter::once(&self.gamma));
        for v in all {
            if !(*v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("loss weights must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[inline]
pub fn smooth_l1(x: f64) -> f64 {
    if x.abs() < 1.0 {
        0.5 * x * x
    } else {
        x.abs() - 0.5
    }
}

/// Derivative of [`smooth_l1`]; at |x| = 1 the linear branch's slope is used.
#[inline]
pub fn smooth_l1_grad(x: f64) -> f64 {
    if x.abs() < 1.0 {
        x
    } else {
        x.signum()
    }
}

/// Mean over positives of the summed per-field SmoothL1 residual error.
pub fn loss_bbox(pred: &[[f64; 7]], target: &[[f64; 7]]) -> Result<(f64, Vec<[f64; 7]>)> {
    if pred.len() != target.len() {
        return Err(Error::Shape(format!(
            "{} predicted residuals vs {} targets",
            pred.len(),
            target.len()
        )));
    }
    let n = pred.len();
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    let inv = 1.0 / n as f64;
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(n);
    for (p, t) in pred.iter().zip(target) {
        let mut g = [0.0; 7];
        for k in 0..7 {
            let x = p[k] - t[k];
            total += smooth_l1(x);
            g[k] = smooth_l1_grad(x) * inv;
        }
        grad.push(g);
    }
    Ok((total * inv, grad))
}

/// Focal classification loss over the positives' per-class probabilities
/// (row-major `N_pos x num_classes`); only the true class term contributes.
pub fn loss_cls(
    probs: &[f64],
    num_classes: usize,
    true_class: &[usize],
    weights: &LossWeights,
) -> Result<(f64, Vec<f64>)> {
    if num_classes == 0 || probs.len() != true_class.len() * num_classes {
        return Err(Error::Shape(format!(
            "{} probabilities for {} samples x {num_classes} classes",
            probs.len(),
            true_class.len()
        )));
    }
    if weights.alpha.len() != num_classes {
        return Err(Error::Shape(format!(
            "{} focal alphas for {num_classes} classes",
            weights.alpha.len()
        )));
    }
    for (k, &p) in probs.iter().enumerate() {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::ProbabilityOutOfRange {
                row: k / num_classes,
                col: k % num_classes,
                value: p,
            });
        }
    }
    let n = true_class.len();
    let mut grad = vec![0.0; probs.len()];
    if n == 0 {
        return Ok((0.0, grad));
    }
    let inv = 1.0 / n as f64;
    let gamma = weights.gamma;
    let mut total = 0.0;
    for (i, &c) in true_class.iter().enumerate() {
        if c >= num_classes {
            return Err(Error::Shape(format!("class index {c} out of range for {num_classes} classes")));
        }
        let p = probs[i * num_classes + c];
        let alpha = weights.alpha[c];
        let q = 1.0 - p;
        let ln_p = p.ln();
        let mod_factor = q.powf(gamma);
        total += alpha * mod_factor * ln_p;
        // d/dp [(1-p)^g ln p] = -g (1-p)^(g-1) ln p + (1-p)^g / p
        let decay = if gamma == 0.0 || ln_p == 0.0 {
            0.0
        } else {
            -gamma * q.powf(gamma - 1.0) * ln_p
        };
        grad[i * num_classes + c] = -alpha * inv * (decay + mod_factor / p);
    }
    Ok((-total * inv, grad))
}

/// Mean two-bin softmax cross-entropy of the direction logits.
pub fn loss_dir(logits: &[[f64; 2]], targets: &[u8]) -> Result<(f64, Vec<[f64; 2]>)> {
    if logits.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} direction logits vs {} targets",
            logits.len(),
            targets.len()
        )));
    }
    let n = logits.len();
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    let inv = 1.0 / n as f64;
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(n);
    for (z, &t) in logits.iter().zip(targets) {
        if t > 1 {
            return Err(Error::Shape(format!("direction target {t} is not a bin in {{0, 1}}")));
        }
        let m = z[0].max(z[1]);
        let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
        total += lse - z[t as usize];
        let s = [(z[0] - lse).exp(), (z[1] - lse).exp()];
        let mut g = [s[0] * inv, s[1] * inv];
        g[t as usize] -= inv;
        grad.push(g);
    }
    Ok((total * inv, grad))
}

/// Values and gradients of the three component losses.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossParts {
    pub bbox: f64,
    pub cls: f64,
    pub dir: f64,
    pub grad_bbox: Vec<[f64; 7]>,
    pub grad_cls: Vec<f64>,
    pub grad_dir: Vec<[f64; 2]>,
}

impl LossParts {
    pub fn values(bbox: f64, cls: f64, dir: f64) -> Self {
        Self {
            bbox,
            cls,
            dir,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossReport {
    pub l_bbox: f64,
    pub l_cls: f64,
    pub l_dir: f64,
    pub l_total: f64,
    /// Gradients of the total loss, each already scaled by its weight.
    pub grad_bbox: Vec<[f64; 7]>,
    pub grad_cls: Vec<f64>,
    pub grad_dir: Vec<[f64; 2]>,
}

impl LossReport {
    /// All gradients flattened in (bbox, cls, dir) order.
    pub fn concatenated_gradient(&self) -> Vec<f64> {
        self.grad_bbox
            .iter()
            .flatten()
            .chain(&self.grad_cls)
            .chain(self.grad_dir.iter().flatten())
            .copied()
            .collect()
    }
}

/// Weighted sum of the component losses.
pub fn loss_total(parts: &LossParts, weights: &LossWeights) -> LossReport {
    let [b1, b2, b3] = weights.beta;
    LossReport {
        l_bbox: parts.bbox,
        l_cls: parts.cls,
        l_dir: parts.dir,
        l_total: b1 * parts.bbox + b2 * parts.cls + b3 * parts.dir,
        grad_bbox: parts.grad_bbox.iter().map(|g| g.map(|v| b1 * v)).collect(),
        grad_cls: parts.grad_cls.iter().map(|v| b2 * v).collect(),
        grad_dir: parts.grad_dir.iter().map(|g| g.map(|v| b3 * v)).collect(),
    }
}

/// Central-difference gradient of `f` at `x`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            let orig = probe[k];
            probe[k] = orig + step;
            let up = f(&probe);
            probe[k] = orig - step;
            let down = f(&probe);
            probe[k] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Largest `|a - b| / max(|a|, |b|, floor)` over paired entries.
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}
