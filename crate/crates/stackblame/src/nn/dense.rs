//! Fully connected layer with explicit forward/backward.

use rand::Rng;

use crate::nn::tensor::{axpy, dot, glorot_limit, matvec_t_add, outer_add, Tensor};

/// `y = W x + b` with `W` of shape (output × input).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Tensor,
    pub b: Tensor,
}

impl Dense {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng>(input: usize, output: usize, rng: &mut R) -> Dense {
        let mut w = Tensor::zeros(&[output, input]);
        w.init_uniform(rng, glorot_limit(input, output));
        Dense { w, b: Tensor::zeros(&[output]) }
    }

    pub fn zeros(input: usize, output: usize) -> Dense {
        Dense { w: Tensor::zeros(&[output, input]), b: Tensor::zeros(&[output]) }
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.b.data().to_vec();
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += dot(self.w.row(i), x);
        }
        y
    }

    /// Accumulates `dW += dy xᵀ`, `db += dy`, and optionally `dx += Wᵀ dy`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grads: &mut Dense, dx: Option<&mut [f64]>) {
        outer_add(&mut grads.w, dy, x);
        axpy(1.0, dy, grads.b.data_mut());
        if let Some(dx) = dx {
            matvec_t_add(&self.w, dy, dx);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::grad_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_matches_hand_computation() {
        let layer = Dense {
            w: Tensor::from_vec(&[2, 3], vec![1.0, 0.0, -1.0, 2.0, 1.0, 0.5]).unwrap(),
            b: Tensor::from_vec(&[2], vec![0.5, -0.5]).unwrap(),
        };
        let y = layer.forward(&[1.0, 2.0, 3.0]);
        assert_eq!(y, vec![1.0 - 3.0 + 0.5, 2.0 + 2.0 + 1.5 - 0.5]);
    }

    #[test]
    fn backward_agrees_with_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let layer = Dense::new(3, 2, &mut rng);
        let x = [0.3, -0.7, 1.1];
        // Scalar loss: weighted sum of outputs.
        let loss_w = [0.9, -1.3];

        // Flatten (w, b, x) into one parameter vector for the checker.
        let mut theta: Vec<f64> = layer.w.data().to_vec();
        theta.extend(layer.b.data());
        theta.extend(x);
        let f = |t: &[f64]| {
            let w = Tensor::from_vec(&[2, 3], t[..6].to_vec()).unwrap();
            let b = Tensor::from_vec(&[2], t[6..8].to_vec()).unwrap();
            let layer = Dense { w, b };
            let y = layer.forward(&t[8..11]);
            y.iter().zip(loss_w).map(|(a, b)| a * b).sum()
        };

        let mut grads = Dense::zeros(3, 2);
        let mut dx = vec![0.0; 3];
        layer.backward(&x, &loss_w, &mut grads, Some(&mut dx));
        let mut analytic: Vec<f64> = grads.w.data().to_vec();
        analytic.extend(grads.b.data());
        analytic.extend(&dx);

        let err = grad_check(f, &theta, &analytic, 1e-5);
        assert!(err < 1e-9, "max relative error {err}");
    }
}
