//! Single-layer gated recurrent unit with an affine readout.
//!
//! ```text
//! z_t = σ(W_z x_t + U_z h_{t-1} + b_z)
//! r_t = σ(W_r x_t + U_r h_{t-1} + b_r)
//! n_t = tanh(W_n x_t + r_t ⊙ (U_n h_{t-1}) + b_n)
//! h_t = (1 - z_t) ⊙ n_t + z_t ⊙ h_{t-1}
//! y   = W_out h_T + b_out
//! ```
//!
//! `h_0 = 0`. All parameters live in one flat buffer, laid out tensor by
//! tensor in [`Tensor::ALL`] order, each row-major.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tensor {
    WZ,
    WR,
    WN,
    UZ,
    UR,
    UN,
    BZ,
    BR,
    BN,
    WOut,
    BOut,
}

impl Tensor {
    pub const ALL: [Tensor; 11] = [
        Tensor::WZ,
        Tensor::WR,
        Tensor::WN,
        Tensor::UZ,
        Tensor::UR,
        Tensor::UN,
        Tensor::BZ,
        Tensor::BR,
        Tensor::BN,
        Tensor::WOut,
        Tensor::BOut,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tensor::WZ => "w_z",
            Tensor::WR => "w_r",
            Tensor::WN => "w_n",
            Tensor::UZ => "u_z",
            Tensor::UR => "u_r",
            Tensor::UN => "u_n",
            Tensor::BZ => "b_z",
            Tensor::BR => "b_r",
            Tensor::BN => "b_n",
            Tensor::WOut => "w_out",
            Tensor::BOut => "b_out",
        }
    }

    /// `(rows, cols)` for a model with `f` inputs and `h` hidden units.
    pub fn shape(self, f: usize, h: usize) -> (usize, usize) {
        match self {
            Tensor::WZ | Tensor::WR | Tensor::WN => (h, f),
            Tensor::UZ | Tensor::UR | Tensor::UN => (h, h),
            Tensor::BZ | Tensor::BR | Tensor::BN => (h, 1),
            Tensor::WOut => (f, h),
            Tensor::BOut => (f, 1),
        }
    }

    pub fn is_bias(self) -> bool {
        matches!(self, Tensor::BZ | Tensor::BR | Tensor::BN | Tensor::BOut)
    }
}

/// Offsets of each tensor inside the flat parameter buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    f: usize,
    h: usize,
}

impl Layout {
    fn offset(self, t: Tensor) -> usize {
        Tensor::ALL
            .iter()
            .take_while(|&&x| x != t)
            .map(|x| {
                let (r, c) = x.shape(self.f, self.h);
                r * c
            })
            .sum()
    }

    fn range(self, t: Tensor) -> std::ops::Range<usize> {
        let (r, c) = t.shape(self.f, self.h);
        let o = self.offset(t);
        o..o + r * c
    }

    fn len(self) -> usize {
        3 * (self.h * self.f + self.h * self.h + self.h) + self.f * self.h + self.f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruForecaster {
    input_dim: usize,
    hidden_dim: usize,
    seed: u64,
    params: Vec<f64>,
}

/// Gradient buffer with the same layout as the model parameters.
pub type Gradients = Vec<f64>;

pub fn init_forecaster(input_dim: usize, hidden_dim: usize, seed: u64) -> Result<GruForecaster> {
    if input_dim == 0 || hidden_dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "forecaster dims must be >= 1 (input {input_dim}, hidden {hidden_dim})"
        )));
    }
    let layout = Layout {
        f: input_dim,
        h: hidden_dim,
    };
    let bound = 1.0 / (hidden_dim as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = vec![0.0; layout.len()];
    for t in Tensor::ALL {
        if !t.is_bias() {
            for p in &mut params[layout.range(t)] {
                *p = rng.random_range(-bound..bound);
            }
        }
    }
    Ok(GruForecaster {
        input_dim,
        hidden_dim,
        seed,
        params,
    })
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `out[i] += Σ_j m[i, j] v[j]` for a row-major `out.len() x v.len()` matrix.
#[inline]
fn matvec_acc(out: &mut [f64], m: &[f64], v: &[f64]) {
    let cols = v.len();
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out[j] += Σ_i m[i, j] v[i]`, i.e. `out += mᵀ v`.
#[inline]
fn matvec_t_acc(out: &mut [f64], m: &[f64], v: &[f64]) {
    let cols = out.len();
    for (vi, row) in v.iter().zip(m.chunks_exact(cols)) {
        if *vi != 0.0 {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vi;
            }
        }
    }
}

/// `g += a ⊗ b` for a row-major `a.len() x b.len()` block.
#[inline]
fn outer_acc(g: &mut [f64], a: &[f64], b: &[f64]) {
    let cols = b.len();
    for (ai, row) in a.iter().zip(g.chunks_exact_mut(cols)) {
        if *ai != 0.0 {
            for (gj, bj) in row.iter_mut().zip(b) {
                *gj += ai * bj;
            }
        }
    }
}

/// Per-step activations kept for backpropagation.
#[derive(Default)]
struct Trace {
    /// `h_{t-1}` for each step, then the final state.
    hidden: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
    /// `U_n h_{t-1}` before gating by `r`.
    un_h: Vec<f64>,
}

impl GruForecaster {
    fn layout(&self) -> Layout {
        Layout {
            f: self.input_dim,
            h: self.hidden_dim,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn tensor(&self, t: Tensor) -> &[f64] {
        &self.params[self.layout().range(t)]
    }

    pub fn tensor_mut(&mut self, t: Tensor) -> &mut [f64] {
        let r = self.layout().range(t);
        &mut self.params[r]
    }

    /// Rebuilds a model from a flat parameter buffer in layout order.
    pub fn from_params(input_dim: usize, hidden_dim: usize, seed: u64, params: Vec<f64>) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(Error::InvalidArgument("forecaster dims must be >= 1".into()));
        }
        let layout = Layout {
            f: input_dim,
            h: hidden_dim,
        };
        if params.len() != layout.len() {
            return Err(Error::Dimension(format!(
                "expected {} parameters, got {}",
                layout.len(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Domain("non-finite parameter".into()));
        }
        Ok(GruForecaster {
            input_dim,
            hidden_dim,
            seed,
            params,
        })
    }

    fn check_window(&self, window: &[f64]) -> Result<usize> {
        let f = self.input_dim;
        if window.is_empty() || !window.len().is_multiple_of(f) {
            return Err(Error::Dimension(format!(
                "window of {} values is not a whole number of {f}-flow steps",
                window.len()
            )));
        }
        Ok(window.len() / f)
    }

    /// Runs the recurrence; with `trace` set, records what backprop needs.
    fn run(&self, window: &[f64], steps: usize, mut trace: Option<&mut Trace>) -> Vec<f64> {
        let l = self.layout();
        let (f, h) = (l.f, l.h);
        let p = &self.params;
        let (wz, wr, wn) = (
            &p[l.range(Tensor::WZ)],
            &p[l.range(Tensor::WR)],
            &p[l.range(Tensor::WN)],
        );
        let (uz, ur, un) = (
            &p[l.range(Tensor::UZ)],
            &p[l.range(Tensor::UR)],
            &p[l.range(Tensor::UN)],
        );
        let (bz, br, bn) = (
            &p[l.range(Tensor::BZ)],
            &p[l.range(Tensor::BR)],
            &p[l.range(Tensor::BN)],
        );

        if let Some(tr) = trace.as_deref_mut() {
            for v in [&mut tr.hidden, &mut tr.z, &mut tr.r, &mut tr.n, &mut tr.un_h] {
                v.clear();
            }
        }
        let mut state = vec![0.0; h];
        let (mut z, mut r, mut n, mut unh) = (vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]);
        for x in window.chunks_exact(f).take(steps) {
            z.copy_from_slice(bz);
            r.copy_from_slice(br);
            n.copy_from_slice(bn);
            unh.iter_mut().for_each(|v| *v = 0.0);
            matvec_acc(&mut z, wz, x);
            matvec_acc(&mut z, uz, &state);
            matvec_acc(&mut r, wr, x);
            matvec_acc(&mut r, ur, &state);
            matvec_acc(&mut n, wn, x);
            matvec_acc(&mut unh, un, &state);
            for k in 0..h {
                z[k] = sigmoid(z[k]);
                r[k] = sigmoid(r[k]);
                n[k] = (n[k] + r[k] * unh[k]).tanh();
            }
            if let Some(tr) = trace.as_deref_mut() {
                tr.hidden.extend_from_slice(&state);
                tr.z.extend_from_slice(&z);
                tr.r.extend_from_slice(&r);
                tr.n.extend_from_slice(&n);
                tr.un_h.extend_from_slice(&unh);
            }
            for k in 0..h {
                state[k] = (1.0 - z[k]) * n[k] + z[k] * state[k];
            }
        }
        if let Some(tr) = trace {
            tr.hidden.extend_from_slice(&state);
        }
        let mut y = p[l.range(Tensor::BOut)].to_vec();
        matvec_acc(&mut y, &p[l.range(Tensor::WOut)], &state);
        y
    }

    /// One-step-ahead forecast from a `(L-1) x F` step-major window.
    pub fn forward(&self, window: &[f64]) -> Result<Vec<f64>> {
        let steps = self.check_window(window)?;
        Ok(self.run(window, steps, None))
    }

    /// Mean squared error over a batch (and all flows) plus its gradient,
    /// by backpropagation through the whole window.
    ///
    /// `inputs[i]` is one `(L-1) x F` window, `targets[i]` its `F` targets.
    pub fn loss_and_gradients(&self, inputs: &[&[f64]], targets: &[&[f64]]) -> Result<(f64, Gradients)> {
        let mut grad = vec![0.0; self.params.len()];
        let loss = self.accumulate_gradients(inputs, targets, &mut grad)?;
        Ok((loss, grad))
    }

    /// Like [`loss_and_gradients`](Self::loss_and_gradients) but adds into an
    /// existing buffer, which must be zeroed by the caller.
    pub fn accumulate_gradients(&self, inputs: &[&[f64]], targets: &[&[f64]], grad: &mut [f64]) -> Result<f64> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::Dimension(format!(
                "{} input windows for {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if grad.len() != self.params.len() {
            return Err(Error::Dimension("gradient buffer has the wrong length".into()));
        }
        let l = self.layout();
        let (f, h) = (l.f, l.h);
        let scale = 1.0 / (inputs.len() * f) as f64;
        let p = &self.params;
        let wout = &p[l.range(Tensor::WOut)];
        let (uz, ur, un) = (
            &p[l.range(Tensor::UZ)],
            &p[l.range(Tensor::UR)],
            &p[l.range(Tensor::UN)],
        );

        let mut trace = Trace::default();
        let mut total = 0.0;
        let (mut dh, mut dh_prev) = (vec![0.0; h], vec![0.0; h]);
        let (mut daz, mut dar, mut dan, mut dan_r) = (vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]);

        for (b, (window, target)) in inputs.iter().zip(targets).enumerate() {
            let steps = self.check_window(window)?;
            if target.len() != f {
                return Err(Error::Dimension(format!(
                    "target of length {} for {f} flows",
                    target.len()
                )));
            }
            let y = self.run(window, steps, Some(&mut trace));
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric { batch_index: b });
            }
            let dy: Vec<f64> = y
                .iter()
                .zip(target.iter())
                .map(|(yi, ti)| {
                    total += (yi - ti) * (yi - ti);
                    2.0 * (yi - ti) * scale
                })
                .collect();

            let h_final = &trace.hidden[steps * h..];
            outer_acc(&mut grad[l.range(Tensor::WOut)], &dy, h_final);
            for (g, d) in grad[l.range(Tensor::BOut)].iter_mut().zip(&dy) {
                *g += d;
            }
            dh.iter_mut().for_each(|v| *v = 0.0);
            matvec_t_acc(&mut dh, wout, &dy);

            for t in (0..steps).rev() {
                let x = &window[t * f..(t + 1) * f];
                let hp = &trace.hidden[t * h..(t + 1) * h];
                let z = &trace.z[t * h..(t + 1) * h];
                let r = &trace.r[t * h..(t + 1) * h];
                let n = &trace.n[t * h..(t + 1) * h];
                let unh = &trace.un_h[t * h..(t + 1) * h];
                for k in 0..h {
                    let dn = dh[k] * (1.0 - z[k]);
                    let dz = dh[k] * (hp[k] - n[k]);
                    dh_prev[k] = dh[k] * z[k];
                    dan[k] = dn * (1.0 - n[k] * n[k]);
                    dan_r[k] = dan[k] * r[k];
                    dar[k] = dan[k] * unh[k] * r[k] * (1.0 - r[k]);
                    daz[k] = dz * z[k] * (1.0 - z[k]);
                }
                outer_acc(&mut grad[l.range(Tensor::WZ)], &daz, x);
                outer_acc(&mut grad[l.range(Tensor::WR)], &dar, x);
                outer_acc(&mut grad[l.range(Tensor::WN)], &dan, x);
                outer_acc(&mut grad[l.range(Tensor::UZ)], &daz, hp);
                outer_acc(&mut grad[l.range(Tensor::UR)], &dar, hp);
                outer_acc(&mut grad[l.range(Tensor::UN)], &dan_r, hp);
                for (tensor, d) in [(Tensor::BZ, &daz), (Tensor::BR, &dar), (Tensor::BN, &dan)] {
                    for (g, v) in grad[l.range(tensor)].iter_mut().zip(d.iter()) {
                        *g += v;
                    }
                }
                matvec_t_acc(&mut dh_prev, uz, &daz);
                matvec_t_acc(&mut dh_prev, ur, &dar);
                matvec_t_acc(&mut dh_prev, un, &dan_r);
                std::mem::swap(&mut dh, &mut dh_prev);
            }
        }
        Ok(total * scale)
    }

    /// Mean squared error over a set of windows, without gradients.
    pub fn mse(&self, inputs: &[&[f64]], targets: &[&[f64]]) -> Result<f64> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::Dimension(
                "mse needs matching, non-empty inputs and targets".into(),
            ));
        }
        let mut total = 0.0;
        for (b, (x, t)) in inputs.iter().zip(targets).enumerate() {
            let y = self.forward(x)?;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric { batch_index: b });
            }
            total += y.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        Ok(total / (inputs.len() * self.input_dim) as f64)
    }
}
