//! Layer primitives with hand-written forward and backward passes.
//!
//! Every layer owns its parameters and matching gradient accumulators.
//! `for_each_param_grad` walks (parameter, gradient) pairs in a fixed order,
//! which is the contract the optimizer and the finite-difference checks rely
//! on.

use ndarray::{s, Array1, Array2, ArrayView1};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Uniform fan-in initialization: U(-sqrt(1/fan_in), sqrt(1/fan_in)).
fn init_matrix(rows: usize, cols: usize, fan_in: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let a = (1.0 / fan_in as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-a..a))
}

/// acc[i, j] += a[i] * b[j]
fn add_outer(acc: &mut Array2<f64>, a: &Array1<f64>, b: ArrayView1<'_, f64>) {
    for (mut row, ai) in acc.rows_mut().into_iter().zip(a.iter()) {
        row.scaled_add(*ai, &b);
    }
}

fn sigmoid_inplace(v: &mut Array1<f64>) {
    v.mapv_inplace(|z| {
        if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        }
    });
}

/// Fully connected layer: y = W x + b.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Linear {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    gw: Array2<f64>,
    gb: Array1<f64>,
}

impl Linear {
    pub fn new(out_dim: usize, in_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        Linear {
            w: init_matrix(out_dim, in_dim, in_dim, rng),
            b: Array1::zeros(out_dim),
            gw: Array2::zeros((out_dim, in_dim)),
            gb: Array1::zeros(out_dim),
        }
    }

    pub fn forward(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        self.w.dot(&x) + &self.b
    }

    /// Accumulates parameter gradients and returns dL/dx.
    pub fn backward(&mut self, x: ArrayView1<'_, f64>, dy: &Array1<f64>) -> Array1<f64> {
        add_outer(&mut self.gw, dy, x);
        self.gb += dy;
        self.w.t().dot(dy)
    }

    pub fn zero_grads(&mut self) {
        self.gw.fill(0.0);
        self.gb.fill(0.0);
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }

    pub fn for_each_param_grad(&mut self, f: &mut dyn FnMut(&mut f64, &f64)) {
        for (p, g) in self.w.iter_mut().zip(self.gw.iter()) {
            f(p, g);
        }
        for (p, g) in self.b.iter_mut().zip(self.gb.iter()) {
            f(p, g);
        }
    }
}

/// Elman recurrent cell: h_t = tanh(Wx x_t + Wh h_{t-1} + b).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RnnCell {
    pub wx: Array2<f64>,
    pub wh: Array2<f64>,
    pub b: Array1<f64>,
    gwx: Array2<f64>,
    gwh: Array2<f64>,
    gb: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct RnnStepCache {
    x: Array1<f64>,
    h_prev: Array1<f64>,
    h: Array1<f64>,
}

impl RnnCell {
    pub fn new(hidden: usize, input_width: usize, rng: &mut ChaCha8Rng) -> Self {
        RnnCell {
            wx: init_matrix(hidden, input_width, input_width, rng),
            wh: init_matrix(hidden, hidden, hidden, rng),
            b: Array1::zeros(hidden),
            gwx: Array2::zeros((hidden, input_width)),
            gwh: Array2::zeros((hidden, hidden)),
            gb: Array1::zeros(hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.wx.nrows()
    }

    pub fn step(&self, x: ArrayView1<'_, f64>, h_prev: &Array1<f64>) -> (Array1<f64>, RnnStepCache) {
        let mut h = self.wx.dot(&x) + self.wh.dot(h_prev) + &self.b;
        h.mapv_inplace(f64::tanh);
        let cache = RnnStepCache {
            x: x.to_owned(),
            h_prev: h_prev.clone(),
            h: h.clone(),
        };
        (h, cache)
    }

    /// One step of backpropagation through time. Returns (dx, dh_prev).
    pub fn backward_step(
        &mut self,
        cache: &RnnStepCache,
        dh: &Array1<f64>,
    ) -> (Array1<f64>, Array1<f64>) {
        let mut da = dh.clone();
        for (d, h) in da.iter_mut().zip(cache.h.iter()) {
            *d *= 1.0 - h * h;
        }
        add_outer(&mut self.gwx, &da, cache.x.view());
        add_outer(&mut self.gwh, &da, cache.h_prev.view());
        self.gb += &da;
        (self.wx.t().dot(&da), self.wh.t().dot(&da))
    }

    pub fn zero_grads(&mut self) {
        self.gwx.fill(0.0);
        self.gwh.fill(0.0);
        self.gb.fill(0.0);
    }

    pub fn param_count(&self) -> usize {
        self.wx.len() + self.wh.len() + self.b.len()
    }

    pub fn for_each_param_grad(&mut self, f: &mut dyn FnMut(&mut f64, &f64)) {
        for (p, g) in self.wx.iter_mut().zip(self.gwx.iter()) {
            f(p, g);
        }
        for (p, g) in self.wh.iter_mut().zip(self.gwh.iter()) {
            f(p, g);
        }
        for (p, g) in self.b.iter_mut().zip(self.gb.iter()) {
            f(p, g);
        }
    }
}

/// LSTM cell with gates stacked [input, forget, cell, output] along the
/// first axis. Forget bias starts at 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LstmCell {
    pub wx: Array2<f64>,
    pub wh: Array2<f64>,
    pub b: Array1<f64>,
    gwx: Array2<f64>,
    gwh: Array2<f64>,
    gb: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmStepCache {
    x: Array1<f64>,
    h_prev: Array1<f64>,
    c_prev: Array1<f64>,
    i: Array1<f64>,
    f: Array1<f64>,
    g: Array1<f64>,
    o: Array1<f64>,
    tanh_c: Array1<f64>,
}

impl LstmCell {
    pub fn new(hidden: usize, input_width: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut b = Array1::zeros(4 * hidden);
        b.slice_mut(s![hidden..2 * hidden]).fill(1.0);
        LstmCell {
            wx: init_matrix(4 * hidden, input_width, input_width, rng),
            wh: init_matrix(4 * hidden, hidden, hidden, rng),
            b,
            gwx: Array2::zeros((4 * hidden, input_width)),
            gwh: Array2::zeros((4 * hidden, hidden)),
            gb: Array1::zeros(4 * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.wx.nrows() / 4
    }

    pub fn step(
        &self,
        x: ArrayView1<'_, f64>,
        h_prev: &Array1<f64>,
        c_prev: &Array1<f64>,
    ) -> (Array1<f64>, Array1<f64>, LstmStepCache) {
        let hid = self.hidden();
        let z = self.wx.dot(&x) + self.wh.dot(h_prev) + &self.b;
        let mut i = z.slice(s![0..hid]).to_owned();
        sigmoid_inplace(&mut i);
        let mut f = z.slice(s![hid..2 * hid]).to_owned();
        sigmoid_inplace(&mut f);
        let mut g = z.slice(s![2 * hid..3 * hid]).to_owned();
        g.mapv_inplace(f64::tanh);
        let mut o = z.slice(s![3 * hid..4 * hid]).to_owned();
        sigmoid_inplace(&mut o);

        let c = &f * c_prev + &i * &g;
        let tanh_c = c.mapv(f64::tanh);
        let h = &o * &tanh_c;
        let cache = LstmStepCache {
            x: x.to_owned(),
            h_prev: h_prev.clone(),
            c_prev: c_prev.clone(),
            i,
            f,
            g,
            o,
            tanh_c,
        };
        (h, c, cache)
    }

    /// One BPTT step. Returns (dx, dh_prev, dc_prev).
    pub fn backward_step(
        &mut self,
        cache: &LstmStepCache,
        dh: &Array1<f64>,
        dc_in: &Array1<f64>,
    ) -> (Array1<f64>, Array1<f64>, Array1<f64>) {
        let hid = self.hidden();
        // dc = dc_in + dh * o * tanh'(c)
        let mut dc = dc_in.clone();
        for ((d, (dh_k, o_k)), t) in dc
            .iter_mut()
            .zip(dh.iter().zip(cache.o.iter()))
            .zip(cache.tanh_c.iter())
        {
            *d += dh_k * o_k * (1.0 - t * t);
        }

        let mut dz = Array1::zeros(4 * hid);
        {
            let mut dzi = dz.slice_mut(s![0..hid]);
            for (((d, dc_k), g_k), i_k) in dzi
                .iter_mut()
                .zip(dc.iter())
                .zip(cache.g.iter())
                .zip(cache.i.iter())
            {
                *d = dc_k * g_k * i_k * (1.0 - i_k);
            }
        }
        {
            let mut dzf = dz.slice_mut(s![hid..2 * hid]);
            for (((d, dc_k), cp), f_k) in dzf
                .iter_mut()
                .zip(dc.iter())
                .zip(cache.c_prev.iter())
                .zip(cache.f.iter())
            {
                *d = dc_k * cp * f_k * (1.0 - f_k);
            }
        }
        {
            let mut dzg = dz.slice_mut(s![2 * hid..3 * hid]);
            for (((d, dc_k), i_k), g_k) in dzg
                .iter_mut()
                .zip(dc.iter())
                .zip(cache.i.iter())
                .zip(cache.g.iter())
            {
                *d = dc_k * i_k * (1.0 - g_k * g_k);
            }
        }
        {
            let mut dzo = dz.slice_mut(s![3 * hid..4 * hid]);
            for (((d, dh_k), t), o_k) in dzo
                .iter_mut()
                .zip(dh.iter())
                .zip(cache.tanh_c.iter())
                .zip(cache.o.iter())
            {
                *d = dh_k * t * o_k * (1.0 - o_k);
            }
        }

        add_outer(&mut self.gwx, &dz, cache.x.view());
        add_outer(&mut self.gwh, &dz, cache.h_prev.view());
        self.gb += &dz;

        let dx = self.wx.t().dot(&dz);
        let dh_prev = self.wh.t().dot(&dz);
        let dc_prev = &dc * &cache.f;
        (dx, dh_prev, dc_prev)
    }

    pub fn zero_grads(&mut self) {
        self.gwx.fill(0.0);
        self.gwh.fill(0.0);
        self.gb.fill(0.0);
    }

    pub fn param_count(&self) -> usize {
        self.wx.len() + self.wh.len() + self.b.len()
    }

    pub fn for_each_param_grad(&mut self, f: &mut dyn FnMut(&mut f64, &f64)) {
        for (p, g) in self.wx.iter_mut().zip(self.gwx.iter()) {
            f(p, g);
        }
        for (p, g) in self.wh.iter_mut().zip(self.gwh.iter()) {
            f(p, g);
        }
        for (p, g) in self.b.iter_mut().zip(self.gb.iter()) {
            f(p, g);
        }
    }
}

/// Valid 1-D convolution along the time axis. The kernel is stored flattened
/// to (filters, kernel_size * input_width).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Conv1d {
    pub kernel: Array2<f64>,
    pub bias: Array1<f64>,
    pub kernel_size: usize,
    pub input_width: usize,
    gk: Array2<f64>,
    gb: Array1<f64>,
}

impl Conv1d {
    pub fn new(filters: usize, kernel_size: usize, input_width: usize, rng: &mut ChaCha8Rng) -> Self {
        let flat = kernel_size * input_width;
        Conv1d {
            kernel: init_matrix(filters, flat, flat, rng),
            bias: Array1::zeros(filters),
            kernel_size,
            input_width,
            gk: Array2::zeros((filters, flat)),
            gb: Array1::zeros(filters),
        }
    }

    pub fn filters(&self) -> usize {
        self.kernel.nrows()
    }

    pub fn output_len(&self, seq_len: usize) -> usize {
        seq_len + 1 - self.kernel_size
    }

    /// Returns (pre-activation output (T x F), window matrix (T x K*W)).
    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let t_out = self.output_len(x.nrows());
        let flat = self.kernel_size * self.input_width;
        let mut windows = Array2::zeros((t_out, flat));
        for t in 0..t_out {
            let window = x.slice(s![t..t + self.kernel_size, ..]);
            windows
                .row_mut(t)
                .assign(&Array1::from_iter(window.iter().copied()));
        }
        let out = windows.dot(&self.kernel.t()) + &self.bias;
        (out, windows)
    }

    /// Accumulates kernel/bias gradients and returns dL/dx (S x W).
    pub fn backward(
        &mut self,
        windows: &Array2<f64>,
        d_out: &Array2<f64>,
        seq_len: usize,
    ) -> Array2<f64> {
        self.gk += &d_out.t().dot(windows);
        self.gb += &d_out.sum_axis(ndarray::Axis(0));
        let d_windows = d_out.dot(&self.kernel);
        let mut dx = Array2::zeros((seq_len, self.input_width));
        for t in 0..d_windows.nrows() {
            for k in 0..self.kernel_size {
                let seg = d_windows.slice(s![t, k * self.input_width..(k + 1) * self.input_width]);
                let mut target = dx.row_mut(t + k);
                target += &seg;
            }
        }
        dx
    }

    pub fn zero_grads(&mut self) {
        self.gk.fill(0.0);
        self.gb.fill(0.0);
    }

    pub fn param_count(&self) -> usize {
        self.kernel.len() + self.bias.len()
    }

    pub fn for_each_param_grad(&mut self, f: &mut dyn FnMut(&mut f64, &f64)) {
        for (p, g) in self.kernel.iter_mut().zip(self.gk.iter()) {
            f(p, g);
        }
        for (p, g) in self.bias.iter_mut().zip(self.gb.iter()) {
            f(p, g);
        }
    }
}

/// Non-overlapping max pooling along the time axis; trailing rows that do
/// not fill a window are dropped. Returns the pooled matrix and the source
/// row of each pooled element for the backward scatter.
pub fn max_pool_time(x: &Array2<f64>, pool: usize) -> (Array2<f64>, Array2<usize>) {
    let windows = x.nrows() / pool;
    let cols = x.ncols();
    let mut out = Array2::zeros((windows, cols));
    let mut argmax = Array2::zeros((windows, cols));
    for u in 0..windows {
        for c in 0..cols {
            let mut best = u * pool;
            for t in u * pool + 1..(u + 1) * pool {
                if x[[t, c]] > x[[best, c]] {
                    best = t;
                }
            }
            out[[u, c]] = x[[best, c]];
            argmax[[u, c]] = best;
        }
    }
    (out, argmax)
}

pub fn max_pool_backward(
    d_out: &Array2<f64>,
    argmax: &Array2<usize>,
    input_rows: usize,
) -> Array2<f64> {
    let mut dx = Array2::zeros((input_rows, d_out.ncols()));
    for u in 0..d_out.nrows() {
        for c in 0..d_out.ncols() {
            dx[[argmax[[u, c]], c]] += d_out[[u, c]];
        }
    }
    dx
}
