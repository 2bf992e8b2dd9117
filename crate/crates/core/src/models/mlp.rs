use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::dataset::{Dataset, Row};
use crate::error::{Error, Result};
use crate::model_api::{
    log_prior_grad, Classifier, GradientEstimate, Minibatch, Model, ParamVector, PriorConfig,
};
use crate::rng::{ChainRng, NoiseSource};

/// Where one fully connected layer lives in the flat parameter vector.
///
/// Weights are row-major `fan_in × fan_out` (`w[i * fan_out + j]` connects
/// input `i` to output `j`), followed by `fan_out` biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerLayout {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

impl LayerLayout {
    fn weights<'a>(&self, theta: &'a [f64]) -> &'a [f64] {
        &theta[self.weight_offset..self.weight_offset + self.fan_in * self.fan_out]
    }

    fn biases<'a>(&self, theta: &'a [f64]) -> &'a [f64] {
        &theta[self.bias_offset..self.bias_offset + self.fan_out]
    }

    fn end(&self) -> usize {
        self.bias_offset + self.fan_out
    }
}

/// Fully connected network: ReLU hidden layers, softmax output, categorical
/// likelihood (labels are class indices `0..K`).
#[derive(Debug, Clone)]
pub struct MlpModel {
    sizes: Vec<usize>,
    layout: Vec<LayerLayout>,
    dim: usize,
    prior: PriorConfig,
    data: Arc<Dataset>,
}

impl MlpModel {
    /// `sizes` lists every layer width, input first, e.g. `[784, 100, 10]`.
    pub fn new(sizes: Vec<usize>, prior: PriorConfig, data: Arc<Dataset>) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::invalid(
                "layer sizes",
                "need at least input and output widths, all positive",
            ));
        }
        if data.cols() != sizes[0] {
            return Err(Error::DimensionMismatch {
                expected: sizes[0],
                found: data.cols(),
            });
        }
        let k = *sizes.last().unwrap();
        if let Some(bad) = data.labels().iter().find(|&&y| y < 0 || y as usize >= k) {
            return Err(Error::Dataset(alloc::format!(
                "label {bad} outside 0..{k}"
            )));
        }
        let mut layout = Vec::with_capacity(sizes.len() - 1);
        let mut offset = 0;
        for w in sizes.windows(2) {
            let l = LayerLayout {
                fan_in: w[0],
                fan_out: w[1],
                weight_offset: offset,
                bias_offset: offset + w[0] * w[1],
            };
            offset = l.end();
            layout.push(l);
        }
        Ok(Self {
            sizes,
            layout,
            dim: offset,
            prior,
            data,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn layout(&self) -> &[LayerLayout] {
        &self.layout
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.data
    }

    fn check_row(&self, x: &Row<'_>) -> Result<()> {
        match x {
            Row::Dense(v) if v.len() != self.sizes[0] => Err(Error::DimensionMismatch {
                expected: self.sizes[0],
                found: v.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Forward pass keeping every layer's pre-activation; returns output logits
    /// in the last entry.
    fn forward_into(&self, theta: &[f64], x: Row<'_>, pre: &mut [Vec<f64>]) {
        for (l, layer) in self.layout.iter().enumerate() {
            let w = layer.weights(theta);
            let (done, rest) = pre.split_at_mut(l);
            let z = &mut rest[0];
            z.clear();
            z.extend_from_slice(layer.biases(theta));
            let mut add_input = |i: usize, a: f64| {
                let wr = &w[i * layer.fan_out..(i + 1) * layer.fan_out];
                z.iter_mut().zip(wr).for_each(|(zj, wij)| *zj += a * wij);
            };
            if l == 0 {
                x.nonzeros().for_each(|(i, a)| add_input(i, a));
            } else {
                for (i, &zi) in done[l - 1].iter().enumerate() {
                    if zi > 0.0 {
                        add_input(i, zi);
                    }
                }
            }
        }
    }

    fn scratch(&self) -> Vec<Vec<f64>> {
        self.sizes[1..].iter().map(|&s| Vec::with_capacity(s)).collect()
    }

    fn class_index(&self, i: usize) -> usize {
        self.data.label(i) as usize
    }
}

/// Softmax with max subtraction; returns probabilities and `log Σ exp`.
fn softmax(logits: &[f64]) -> (Vec<f64>, f64) {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits.iter().map(|z| libm::exp(z - m)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    (p, m + libm::log(s))
}

/// Class probabilities for one input.
pub fn mlp_forward(model: &MlpModel, theta: &[f64], x: Row<'_>) -> Result<Vec<f64>> {
    model.check_dim(theta)?;
    model.check_row(&x)?;
    let mut pre = model.scratch();
    model.forward_into(theta, x, &mut pre);
    Ok(softmax(pre.last().unwrap()).0)
}

impl Model for MlpModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn data_len(&self) -> usize {
        self.data.len()
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        self.prior.log_density(theta)
    }

    fn log_prior_grad(&self, theta: &[f64]) -> ParamVector {
        log_prior_grad(theta, &self.prior)
    }

    /// Backpropagation of the mean log-likelihood (negative cross-entropy).
    /// ReLU uses subgradient 0 at exactly zero pre-activation.
    fn minibatch_grad(&self, theta: &[f64], batch: &Minibatch) -> Result<GradientEstimate> {
        self.check_dim(theta)?;
        batch.check_against(self.data.len())?;
        let mut grad = ParamVector::zeros(self.dim);
        let mut pre = self.scratch();
        let mut delta: Vec<Vec<f64>> = self.sizes[1..].iter().map(|&s| alloc::vec![0.0; s]).collect();
        let inv_n = 1.0 / batch.len() as f64;
        let depth = self.layout.len();
        for &i in batch.indices() {
            let x = self.data.row(i);
            self.forward_into(theta, x, &mut pre);
            let (p, _) = softmax(&pre[depth - 1]);
            let out = &mut delta[depth - 1];
            out.iter_mut().zip(&p).for_each(|(d, pk)| *d = -pk * inv_n);
            out[self.class_index(i)] += inv_n;

            for l in (0..depth).rev() {
                let layer = self.layout[l];
                let (lower, upper) = delta.split_at_mut(l);
                let d_out = &upper[0];
                let gb = &mut grad[layer.bias_offset..layer.bias_offset + layer.fan_out];
                gb.iter_mut().zip(d_out).for_each(|(g, d)| *g += d);
                let gw = &mut grad[layer.weight_offset..layer.bias_offset];
                let mut outer = |r: usize, a: f64| {
                    let row = &mut gw[r * layer.fan_out..(r + 1) * layer.fan_out];
                    row.iter_mut().zip(d_out).for_each(|(g, d)| *g += a * d);
                };
                if l == 0 {
                    x.nonzeros().for_each(|(r, a)| outer(r, a));
                } else {
                    let below = &pre[l - 1];
                    below
                        .iter()
                        .enumerate()
                        .filter(|(_, z)| **z > 0.0)
                        .for_each(|(r, &z)| outer(r, z));
                    let w = layer.weights(theta);
                    let d_in = &mut lower[l - 1];
                    for (r, (dr, &z)) in d_in.iter_mut().zip(below).enumerate() {
                        *dr = if z > 0.0 {
                            w[r * layer.fan_out..(r + 1) * layer.fan_out]
                                .iter()
                                .zip(d_out)
                                .map(|(a, b)| a * b)
                                .sum()
                        } else {
                            0.0
                        };
                    }
                }
            }
        }
        GradientEstimate::new(grad, batch.len(), self.data.len())
    }

    fn mean_log_likelihood(&self, theta: &[f64], batch: &Minibatch) -> Result<f64> {
        self.check_dim(theta)?;
        batch.check_against(self.data.len())?;
        let mut pre = self.scratch();
        let mut total = 0.0;
        for &i in batch.indices() {
            self.forward_into(theta, self.data.row(i), &mut pre);
            let logits = pre.last().unwrap();
            let (_, lse) = softmax(logits);
            total += logits[self.class_index(i)] - lse;
        }
        Ok(total / batch.len() as f64)
    }

    /// Weights 𝒩(0, 1/fan_in), biases zero.
    fn init_theta(&self, rng: &mut ChainRng) -> ParamVector {
        let mut theta = ParamVector::zeros(self.dim);
        for layer in &self.layout {
            let std = 1.0 / libm::sqrt(layer.fan_in as f64);
            theta[layer.weight_offset..layer.bias_offset]
                .iter_mut()
                .for_each(|w| *w = std * rng.standard_normal());
        }
        theta
    }
}

impl Classifier for MlpModel {
    fn num_classes(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn predict_proba(&self, theta: &[f64], x: Row<'_>) -> Result<Vec<f64>> {
        mlp_forward(self, theta, x)
    }

    fn class_of(&self, label: i32) -> Option<usize> {
        usize::try_from(label).ok().filter(|&k| k < self.num_classes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn data(cols: usize, rows: Vec<Vec<f64>>, labels: Vec<i32>) -> Arc<Dataset> {
        Arc::new(Dataset::dense("t", cols, rows.concat(), labels).unwrap())
    }

    fn prior() -> PriorConfig {
        PriorConfig::new(1.0).unwrap()
    }

    #[test]
    fn layout_partitions_parameter_vector() {
        let m = MlpModel::new(vec![4, 3, 5, 2], prior(), data(4, vec![vec![0.0; 4]], vec![0])).unwrap();
        let mut covered = vec![0u8; m.dim()];
        for l in m.layout() {
            for c in &mut covered[l.weight_offset..l.end()] {
                *c += 1;
            }
        }
        assert!(covered.iter().all(|&c| c == 1));
        assert_eq!(m.dim(), 4 * 3 + 3 + 3 * 5 + 5 + 5 * 2 + 2);
    }

    #[test]
    fn zero_parameters_give_uniform_output() {
        let m = MlpModel::new(vec![3, 4, 10], prior(), data(3, vec![vec![1.0, 2.0, 3.0]], vec![0])).unwrap();
        let p = mlp_forward(&m, &vec![0.0; m.dim()], m.dataset().row(0)).unwrap();
        assert!(p.iter().all(|&v| (v - 0.1).abs() < 1e-15));
    }

    #[test]
    fn linear_layer_logits_are_affine() {
        let m = MlpModel::new(vec![2, 2], prior(), data(2, vec![vec![3.0, -1.0]], vec![0])).unwrap();
        // W = I, b = (0.5, -0.5): logits = (3.5, -1.5)
        let theta = [1.0, 0.0, 0.0, 1.0, 0.5, -0.5];
        let mut pre = m.scratch();
        m.forward_into(&theta, m.dataset().row(0), &mut pre);
        assert_eq!(pre[0], vec![3.5, -1.5]);
        let p = mlp_forward(&m, &theta, m.dataset().row(0)).unwrap();
        let e = libm::exp(5.0);
        assert!((p[0] - e / (1.0 + e)).abs() < 1e-15);
    }

    #[test]
    fn saturated_prediction_has_near_zero_gradient() {
        let m = MlpModel::new(vec![1, 2], prior(), data(1, vec![vec![1.0]], vec![1])).unwrap();
        let theta = [-50.0, 50.0, 0.0, 0.0];
        let g = m.minibatch_grad(&theta, &Minibatch::full(1)).unwrap();
        assert!(g.g_bar.iter().all(|v| v.abs() < 1e-40));
    }

    #[test]
    fn duplicated_batch_keeps_mean_gradient() {
        let rows = vec![vec![0.3, -1.2], vec![1.5, 0.4], vec![-0.7, 0.9]];
        let labels = vec![0, 2, 1];
        let m1 = MlpModel::new(vec![2, 3, 3], prior(), data(2, rows.clone(), labels.clone())).unwrap();
        let mut doubled = rows.clone();
        doubled.extend(rows);
        let mut l2 = labels.clone();
        l2.extend(labels);
        let m2 = MlpModel::new(vec![2, 3, 3], prior(), data(2, doubled, l2)).unwrap();
        let theta = m1.init_theta(&mut ChainRng::seed_from(3));
        let g1 = m1.minibatch_grad(&theta, &Minibatch::full(3)).unwrap();
        let g2 = m2.minibatch_grad(&theta, &Minibatch::full(6)).unwrap();
        for (a, b) in g1.g_bar.iter().zip(g2.g_bar.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let m = MlpModel::new(vec![3, 5, 4], prior(), data(3, vec![vec![0.2, -3.0, 7.0]], vec![1])).unwrap();
        let mut rng = ChainRng::seed_from(11);
        for _ in 0..20 {
            let theta: Vec<f64> = (0..m.dim()).map(|_| 5.0 * rng.standard_normal()).collect();
            let p = mlp_forward(&m, &theta, m.dataset().row(0)).unwrap();
            assert!(p.iter().all(|&v| v >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let d = data(3, vec![vec![0.0; 3]], vec![0]);
        assert!(MlpModel::new(vec![2, 2], prior(), d.clone()).is_err());
        assert!(MlpModel::new(vec![3], prior(), d.clone()).is_err());
        let m = MlpModel::new(vec![3, 2], prior(), d).unwrap();
        assert!(mlp_forward(&m, &[0.0; 3], m.dataset().row(0)).is_err());
        assert!(mlp_forward(&m, &[0.0; 8], Row::Dense(&[1.0, 2.0])).is_err());
        let bad_label = data(1, vec![vec![0.0]], vec![5]);
        assert!(MlpModel::new(vec![1, 2], prior(), bad_label).is_err());
    }

    #[test]
    fn diag_hessian_unsupported() {
        let m = MlpModel::new(vec![1, 2], prior(), data(1, vec![vec![1.0]], vec![1])).unwrap();
        assert!(!m.supports_diag_hessian());
        assert_eq!(
            m.diag_hessian(&[0.0; 4], &Minibatch::full(1)),
            Err(Error::Unsupported("diagonal Hessian"))
        );
    }
}
