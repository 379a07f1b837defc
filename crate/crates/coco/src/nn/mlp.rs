//! Dense linear layers and the two-layer ReLU MLP block used everywhere in
//! the GNN, with hand-written backward passes.

use crate::rng::SplitMix64;

/// Row-major dense layer: `y = W x + b`, `W` is `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Linear {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    /// Uniform fan-in initialization: every weight and bias is drawn from
    /// `U(-1/sqrt(in_dim), 1/sqrt(in_dim))`, weights first (row-major).
    pub fn init(rng: &mut SplitMix64, in_dim: usize, out_dim: usize) -> Self {
        let scale = 1.0 / (in_dim as f64).sqrt();
        let w = (0..in_dim * out_dim)
            .map(|_| rng.gen_uniform(-scale, scale))
            .collect();
        let b = (0..out_dim).map(|_| rng.gen_uniform(-scale, scale)).collect();
        Self {
            w,
            b,
            in_dim,
            out_dim,
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            w: vec![0.0; in_dim * out_dim],
            b: vec![0.0; out_dim],
            in_dim,
            out_dim,
        }
    }

    pub fn forward(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.in_dim);
        debug_assert_eq!(y.len(), self.out_dim);
        for o in 0..self.out_dim {
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.b[o];
            for (wi, xi) in row.iter().zip(x.iter()) {
                acc += wi * xi;
            }
            y[o] = acc;
        }
    }

    /// Accumulates parameter gradients into `grads` and input gradients into
    /// `gx` given upstream `gy`.
    pub fn backward(&self, x: &[f64], gy: &[f64], grads: &mut Linear, gx: &mut [f64]) {
        for o in 0..self.out_dim {
            let g = gy[o];
            if g == 0.0 {
                continue;
            }
            grads.b[o] += g;
            let wrow = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            let grow = &mut grads.w[o * self.in_dim..(o + 1) * self.in_dim];
            for i in 0..self.in_dim {
                grow[i] += g * x[i];
                gx[i] += g * wrow[i];
            }
        }
    }
}

/// `Linear -> ReLU -> Linear`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Mlp {
    pub l1: Linear,
    pub l2: Linear,
}

impl Mlp {
    pub fn init(rng: &mut SplitMix64, in_dim: usize, hidden: usize, out_dim: usize) -> Self {
        Self {
            l1: Linear::init(rng, in_dim, hidden),
            l2: Linear::init(rng, hidden, out_dim),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            l1: Linear::zeros(self.l1.in_dim, self.l1.out_dim),
            l2: Linear::zeros(self.l2.in_dim, self.l2.out_dim),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.l1.out_dim
    }

    #[allow(dead_code)] // test helper
    pub fn out_dim(&self) -> usize {
        self.l2.out_dim
    }

    /// Forward pass; `hid_pre` receives the pre-activation of the hidden
    /// layer (needed for the backward pass), `out` the output.
    pub fn forward(&self, x: &[f64], hid_pre: &mut [f64], out: &mut [f64]) {
        self.l1.forward(x, hid_pre);
        let mut h = hid_pre.to_vec();
        for v in h.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        self.l2.forward(&h, out);
    }

    /// Backward pass given the cached input and hidden pre-activation.
    /// Parameter gradients accumulate into `grads`, input gradients into
    /// `gx`.
    pub fn backward(
        &self,
        x: &[f64],
        hid_pre: &[f64],
        g_out: &[f64],
        grads: &mut Mlp,
        gx: &mut [f64],
    ) {
        let hidden = self.hidden_dim();
        let mut h = vec![0.0; hidden];
        for (hv, &p) in h.iter_mut().zip(hid_pre.iter()) {
            *hv = p.max(0.0);
        }
        let mut g_h = vec![0.0; hidden];
        self.l2.backward(&h, g_out, &mut grads.l2, &mut g_h);
        for (gv, &p) in g_h.iter_mut().zip(hid_pre.iter()) {
            if p <= 0.0 {
                *gv = 0.0;
            }
        }
        self.l1.backward(x, &g_h, &mut grads.l1, gx);
    }

    #[allow(dead_code)] // test helper
    pub fn param_count(&self) -> usize {
        self.l1.w.len() + self.l1.b.len() + self.l2.w.len() + self.l2.b.len()
    }

    /// Visits parameters in canonical order: l1.w, l1.b, l2.w, l2.b.
    pub fn visit(&self, f: &mut impl FnMut(f64)) {
        for &v in self.l1.w.iter().chain(&self.l1.b).chain(&self.l2.w).chain(&self.l2.b) {
            f(v);
        }
    }

    pub fn visit_mut(&mut self, f: &mut impl FnMut(&mut f64)) {
        for v in self
            .l1
            .w
            .iter_mut()
            .chain(self.l1.b.iter_mut())
            .chain(self.l2.w.iter_mut())
            .chain(self.l2.b.iter_mut())
        {
            f(v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_forward_matches_hand_computation() {
        let lin = Linear {
            w: vec![1.0, 2.0, -1.0, 0.5],
            b: vec![0.1, -0.2],
            in_dim: 2,
            out_dim: 2,
        };
        let mut y = vec![0.0; 2];
        lin.forward(&[3.0, -1.0], &mut y);
        assert_eq!(y, vec![3.0 - 2.0 + 0.1, -3.0 - 0.5 - 0.2]);
    }

    #[test]
    fn mlp_gradients_match_finite_differences() {
        let mut rng = SplitMix64::new(17);
        let mlp = Mlp::init(&mut rng, 3, 5, 2);
        let x = [0.3, -0.7, 1.1];
        let g_out = [1.0, -2.0];

        let loss = |m: &Mlp, x: &[f64]| -> f64 {
            let mut hid = vec![0.0; m.hidden_dim()];
            let mut out = vec![0.0; m.out_dim()];
            m.forward(x, &mut hid, &mut out);
            out.iter().zip(g_out.iter()).map(|(o, g)| o * g).sum()
        };

        let mut hid = vec![0.0; mlp.hidden_dim()];
        let mut out = vec![0.0; mlp.out_dim()];
        mlp.forward(&x, &mut hid, &mut out);
        let mut grads = mlp.zeros_like();
        let mut gx = vec![0.0; 3];
        mlp.backward(&x, &hid, &g_out, &mut grads, &mut gx);

        let eps = 1e-6;
        // Parameter gradients.
        let mut flat_grads = Vec::new();
        grads.visit(&mut |v| flat_grads.push(v));
        let mut idx = 0;
        let mut perturbed = mlp.clone();
        let count = mlp.param_count();
        for i in 0..count {
            let mut k = 0;
            perturbed.visit_mut(&mut |v| {
                if k == i {
                    *v += eps;
                }
                k += 1;
            });
            let up = loss(&perturbed, &x);
            let mut k = 0;
            perturbed.visit_mut(&mut |v| {
                if k == i {
                    *v -= 2.0 * eps;
                }
                k += 1;
            });
            let down = loss(&perturbed, &x);
            let mut k = 0;
            perturbed.visit_mut(&mut |v| {
                if k == i {
                    *v += eps;
                }
                k += 1;
            });
            let fd = (up - down) / (2.0 * eps);
            assert!(
                (fd - flat_grads[idx]).abs() <= 1e-7 * flat_grads[idx].abs().max(1.0),
                "param {i}: fd {fd} vs analytic {}",
                flat_grads[idx]
            );
            idx += 1;
        }
        // Input gradients.
        for i in 0..3 {
            let mut xp = x;
            xp[i] += eps;
            let up = loss(&mlp, &xp);
            xp[i] -= 2.0 * eps;
            let down = loss(&mlp, &xp);
            let fd = (up - down) / (2.0 * eps);
            assert!((fd - gx[i]).abs() <= 1e-7 * gx[i].abs().max(1.0));
        }
    }
}
