//! The three classifier heads. Each net reads a reshaped embedding
//! (sequence x feature width), encodes it, and emits a single logit; the
//! sigmoid and loss live in the training loop.

use ndarray::{array, s, Array1, Array2};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    max_pool_backward, max_pool_time, Conv1d, Linear, LstmCell, LstmStepCache, RnnCell,
    RnnStepCache,
};
use super::Architecture;
use crate::error::{Error, Result};

/// Per-sample input: one reshaped embedding, or three for the multi-channel
/// net's per-provider mode.
#[derive(Debug, Clone)]
pub enum NetInput {
    Single(Array2<f64>),
    Triple(Box<[Array2<f64>; 3]>),
}

impl NetInput {
    fn single(&self) -> Result<&Array2<f64>> {
        match self {
            NetInput::Single(x) => Ok(x),
            NetInput::Triple(_) => Err(Error::Input(
                "this architecture takes a single embedding, not three".into(),
            )),
        }
    }

    /// Channel view: the single input is shared by all channels.
    fn channel(&self, i: usize) -> &Array2<f64> {
        match self {
            NetInput::Single(x) => x,
            NetInput::Triple(t) => &t[i],
        }
    }
}

/// Bidirectional Elman RNN; the two directions' final states are
/// concatenated into the dense head.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiRnn {
    fwd: RnnCell,
    bwd: RnnCell,
    head: Linear,
    #[serde(skip)]
    cache: Option<BiRnnCache>,
}

#[derive(Debug, Clone)]
struct BiRnnCache {
    steps_f: Vec<RnnStepCache>,
    steps_b: Vec<RnnStepCache>,
    concat: Array1<f64>,
}

impl BiRnn {
    pub fn new(hidden: usize, width: usize, rng: &mut ChaCha8Rng) -> Self {
        BiRnn {
            fwd: RnnCell::new(hidden, width, rng),
            bwd: RnnCell::new(hidden, width, rng),
            head: Linear::new(1, 2 * hidden, rng),
            cache: None,
        }
    }

    fn encode(&self, x: &Array2<f64>, collect: bool) -> BiRnnCache {
        let hidden = self.fwd.hidden();
        let mut steps_f = Vec::new();
        let mut h = Array1::zeros(hidden);
        for t in 0..x.nrows() {
            let (next, cache) = self.fwd.step(x.row(t), &h);
            h = next;
            if collect {
                steps_f.push(cache);
            }
        }
        let mut steps_b = Vec::new();
        let mut hb = Array1::zeros(hidden);
        for t in (0..x.nrows()).rev() {
            let (next, cache) = self.bwd.step(x.row(t), &hb);
            hb = next;
            if collect {
                steps_b.push(cache);
            }
        }
        let concat = Array1::from_iter(h.iter().chain(hb.iter()).copied());
        BiRnnCache {
            steps_f,
            steps_b,
            concat,
        }
    }

    fn forward_train(&mut self, x: &NetInput) -> Result<f64> {
        let state = self.encode(x.single()?, true);
        let logit = self.head.forward(state.concat.view())[0];
        self.cache = Some(state);
        Ok(logit)
    }

    fn infer(&self, x: &NetInput) -> Result<f64> {
        let state = self.encode(x.single()?, false);
        Ok(self.head.forward(state.concat.view())[0])
    }

    fn backward(&mut self, dlogit: f64) {
        let cache = self.cache.take().expect("backward without forward");
        let d_concat = self.head.backward(cache.concat.view(), &array![dlogit]);
        let hidden = self.fwd.hidden();
        let mut dh = d_concat.slice(s![0..hidden]).to_owned();
        for step in cache.steps_f.iter().rev() {
            let (_, dh_prev) = self.fwd.backward_step(step, &dh);
            dh = dh_prev;
        }
        let mut dhb = d_concat.slice(s![hidden..]).to_owned();
        for step in cache.steps_b.iter().rev() {
            let (_, dh_prev) = self.bwd.backward_step(step, &dhb);
            dhb = dh_prev;
        }
    }

    fn zero_grads(&mut self) {
        self.fwd.zero_grads();
        self.bwd.zero_grads();
        self.head.zero_grads();
    }

    fn param_count(&self) -> usize {
        self.fwd.param_count() + self.bwd.param_count() + self.head.param_count()
    }

    fn for_each_param_grad(&mut self, f: &mut dyn FnMut(&mut f64, &f64)) {
        self.fwd.for_each_param_grad(f);
        self.bwd.for_each_param_grad(f);
        self.head.for_each_param_grad(f);
    }
}

/// Bidirectional LSTM, same head wiring as [`BiRnn`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiLstm {
    fwd: LstmCell,
    bwd: LstmCell,
    head: Linear,
    #[serde(skip)]
    cache: Option<BiLstmCache>,
}

#[derive(Debug, Clone)]
struct BiLstmCache {
    steps_f: Vec<LstmStepCache>,
    steps_b: Vec<LstmStepCache>,
    concat: Array1<f64>,
}

impl BiLstm {
    pub fn new(hidden: usize, width: usize, rng: &mut ChaCha8Rng) -> Self {
        BiLstm {
            fwd: LstmCell::new(hidden, width, rng),
            bwd: LstmCell::new(hidden, width, rng),
            head: Linear::new(1, 2 * hidden, rng),
            cache: None,
        }
    }

    fn run_direction(
        cell: &LstmCell,
        x: &Array2<f64>,
        reverse: bool,
        collect: bool,
    ) -> (Array1<f64>, Vec<LstmStepCache>) {
        let hidden = cell.hidden();
        let mut h = Array1::zeros(hidden);
        let mut c = Array1::zeros(hidden);
        let mut steps = Vec::new();
        let times: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new((0..x.nrows()).rev())
        } else {
            Box::new(0..x.nrows())
        };
        for t in times {
            let (hn, cn, cache) = cell.step(x.row(t), &h, &c);
            h = hn;
            c = cn;
            if collect {
                steps.push(cache);
            }
        }
        (h, steps)
    }

    fn encode(&self, x: &Array2<f64>, collect: bool) -> BiLstmCache {
        let (hf, steps_f) = Self::run_direction(&self.fwd, x, false, collect);
        let (hb, steps_b) = Self::run_direction(&self.bwd, x, true, collect);
        let concat = Array1::from_iter(hf.iter().chain(hb.iter()).copied());
        BiLstmCache {
            steps_f,
            steps_b,
            concat,
        }
    }

    fn forward_train(&mut self, x: &NetInput) -> Result<f64> {
        let state = self.encode(x.single()?, true);
        let logit = self.head.forward(state.concat.view())[0];
        self.cache = Some(state);
        Ok(logit)
    }

    fn infer(&self, x: &NetInput) -> Result<f64> {
        let state = self.encode(x.single()?, false);
        Ok(self.head.forward(state.concat.view())[0])
    }

    fn backward(&mut self, dlogit: f64) {
        let cache = self.cache.take().expect("backward without forward");
        let d_concat = self.head.backward(cache.concat.view(), &array![dlogit]);
        let hidden = self.fwd.hidden();
        for (cell, steps, range) in [
            (&mut self.fwd, &cache.steps_f, 0..hidden),
            (&mut self.bwd, &cache.steps_b, hidden..2 * hidden),
        ] {
            let mut dh = d_concat.slice(s![range]).to_owned();
            let mut dc = Array1::zeros(hidden);
            for step in steps.iter().rev() {
                let (_, dh_prev, dc_prev) = cell.backward_step(step, &dh, &dc);
                dh = dh_prev;
                dc = dc_prev;
            }
        }
    }

    fn zero_grads(&mut self) {
        self.fwd.zero_grads();
        self.bwd.zero_grads();
        self.head.zero_grads();
    }

    fn param_count(&self) -> usize {
        self.fwd.param_count() + self.bwd.param_count() + self.head.param_count()
    }

    fn for_each_param_grad(&mut self, f: &mut dyn FnMut(&mut f64, &f64)) {
        self.fwd.for_each_param_grad(f);
        self.bwd.for_each_param_grad(f);
        self.head.for_each_param_grad(f);
    }
}

/// One multi-channel branch: conv (own kernel size) -> ReLU -> max pool ->
/// LSTM; the channel's output is the LSTM's final hidden state.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct McnnChannel {
    conv: Conv1d,
    pool: usize,
    lstm: LstmCell,
}

#[derive(Debug, Clone)]
struct ChannelCache {
    windows: Array2<f64>,
    relu_mask: Array2<f64>,
    argmax: Array2<usize>,
    conv_rows: usize,
    input_rows: usize,
    lstm_steps: Vec<LstmStepCache>,
}

impl McnnChannel {
    fn new(
        kernel_size: usize,
        filters: usize,
        pool: usize,
        hidden: usize,
        width: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        McnnChannel {
            conv: Conv1d::new(filters, kernel_size, width, rng),
            pool,
            lstm: LstmCell::new(hidden, filters, rng),
        }
    }

    fn run(&self, x: &Array2<f64>, collect: bool) -> (Array1<f64>, Option<ChannelCache>) {
        let (pre, windows) = self.conv.forward(x);
        let relu_mask = pre.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        let act = pre.mapv(|v| v.max(0.0));
        let (pooled, argmax) = max_pool_time(&act, self.pool);

        let hidden = self.lstm.hidden();
        let mut h = Array1::zeros(hidden);
        let mut c = Array1::zeros(hidden);
        let mut steps = Vec::new();
        for t in 0..pooled.nrows() {
            let (hn, cn, cache) = self.lstm.step(pooled.row(t), &h, &c);
            h = hn;
            c = cn;
            if collect {
                steps.push(cache);
            }
        }
        let cache = collect.then(|| ChannelCache {
            windows,
            relu_mask,
            argmax,
            conv_rows: act.nrows(),
            input_rows: x.nrows(),
            lstm_steps: steps,
        });
        (h, cache)
    }

    fn backward(&mut self, cache: &ChannelCache, dh_last: &Array1<f64>) {
        let hidden = self.lstm.hidden();
        let filters = self.conv.filters();
        let mut d_pooled = Array2::zeros((cache.lstm_steps.len(), filters));
        let mut dh = dh_last.clone();
        let mut dc = Array1::zeros(hidden);
        for (t, step) in cache.lstm_steps.iter().enumerate().rev() {
            let (dx, dh_prev, dc_prev) = self.lstm.backward_step(step, &dh, &dc);
            d_pooled.row_mut(t).assign(&dx);
            dh = dh_prev;
            dc = dc_prev;
        }
        let d_act = max_pool_backward(&d_pooled, &cache.argmax, cache.conv_rows);
        let d_pre = &d_act * &cache.relu_mask;
        self.conv.backward(&cache.windows, &d_pre, cache.input_rows);
    }

    fn zero_grads(&mut self) {
        self.conv.zero_grads();
        self.lstm.zero_grads();
    }

    fn param_count(&self) -> usize {
        self.conv.param_count() + self.lstm.param_count()
    }

    fn for_each_param_grad(&mut self, f: &mut dyn FnMut(&mut f64, &f64)) {
        self.conv.for_each_param_grad(f);
        self.lstm.for_each_param_grad(f);
    }
}

/// Multi-channel CNN-LSTM: three parallel conv/pool/LSTM branches with
/// distinct kernel sizes, concatenated into one dense sigmoid head.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McnnLstm {
    channels: Vec<McnnChannel>,
    head: Linear,
    #[serde(skip)]
    cache: Option<McnnCache>,
}

#[derive(Debug, Clone)]
struct McnnCache {
    channels: Vec<ChannelCache>,
    concat: Array1<f64>,
}

impl McnnLstm {
    pub fn new(
        kernel_sizes: [usize; 3],
        filters: usize,
        pool: usize,
        hidden: usize,
        width: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let channels = kernel_sizes
            .iter()
            .map(|k| McnnChannel::new(*k, filters, pool, hidden, width, rng))
            .collect();
        McnnLstm {
            channels,
            head: Linear::new(1, 3 * hidden, rng),
            cache: None,
        }
    }

    fn forward_train(&mut self, x: &NetInput) -> Result<f64> {
        let mut caches = Vec::with_capacity(3);
        let mut parts = Vec::with_capacity(3);
        for (i, channel) in self.channels.iter().enumerate() {
            let (h, cache) = channel.run(x.channel(i), true);
            caches.push(cache.expect("collect requested"));
            parts.push(h);
        }
        let concat = Array1::from_iter(parts.iter().flat_map(|h| h.iter().copied()));
        let logit = self.head.forward(concat.view())[0];
        self.cache = Some(McnnCache {
            channels: caches,
            concat,
        });
        Ok(logit)
    }

    fn infer(&self, x: &NetInput) -> Result<f64> {
        let mut parts = Vec::with_capacity(3);
        for (i, channel) in self.channels.iter().enumerate() {
            let (h, _) = channel.run(x.channel(i), false);
            parts.push(h);
        }
        let concat = Array1::from_iter(parts.iter().flat_map(|h| h.iter().copied()));
        Ok(self.head.forward(concat.view())[0])
    }

    fn backward(&mut self, dlogit: f64) {
        let cache = self.cache.take().expect("backward without forward");
        let d_concat = self.head.backward(cache.concat.view(), &array![dlogit]);
        let hidden = self.channels[0].lstm.hidden();
        for (i, (channel, ch_cache)) in
            self.channels.iter_mut().zip(cache.channels.iter()).enumerate()
        {
            let dh = d_concat.slice(s![i * hidden..(i + 1) * hidden]).to_owned();
            channel.backward(ch_cache, &dh);
        }
    }

    fn zero_grads(&mut self) {
        for c in &mut self.channels {
            c.zero_grads();
        }
        self.head.zero_grads();
    }

    fn param_count(&self) -> usize {
        self.channels.iter().map(McnnChannel::param_count).sum::<usize>()
            + self.head.param_count()
    }

    fn for_each_param_grad(&mut self, f: &mut dyn FnMut(&mut f64, &f64)) {
        for c in &mut self.channels {
            c.for_each_param_grad(f);
        }
        self.head.for_each_param_grad(f);
    }
}

/// Closed set of networks, dispatched by architecture.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum NetKind {
    BiRnn(BiRnn),
    BiLstm(BiLstm),
    McnnLstm(McnnLstm),
}

impl NetKind {
    pub fn architecture(&self) -> Architecture {
        match self {
            NetKind::BiRnn(_) => Architecture::BiRnn,
            NetKind::BiLstm(_) => Architecture::BiLstm,
            NetKind::McnnLstm(_) => Architecture::McnnLstm,
        }
    }

    /// Forward pass that retains activations for [`Self::backward`].
    pub fn forward_train(&mut self, x: &NetInput) -> Result<f64> {
        match self {
            NetKind::BiRnn(n) => n.forward_train(x),
            NetKind::BiLstm(n) => n.forward_train(x),
            NetKind::McnnLstm(n) => n.forward_train(x),
        }
    }

    /// Cache-free forward pass; safe on a shared reference.
    pub fn infer(&self, x: &NetInput) -> Result<f64> {
        match self {
            NetKind::BiRnn(n) => n.infer(x),
            NetKind::BiLstm(n) => n.infer(x),
            NetKind::McnnLstm(n) => n.infer(x),
        }
    }

    /// Accumulate gradients for the most recent [`Self::forward_train`].
    pub fn backward(&mut self, dlogit: f64) {
        match self {
            NetKind::BiRnn(n) => n.backward(dlogit),
            NetKind::BiLstm(n) => n.backward(dlogit),
            NetKind::McnnLstm(n) => n.backward(dlogit),
        }
    }

    pub fn zero_grads(&mut self) {
        match self {
            NetKind::BiRnn(n) => n.zero_grads(),
            NetKind::BiLstm(n) => n.zero_grads(),
            NetKind::McnnLstm(n) => n.zero_grads(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            NetKind::BiRnn(n) => n.param_count(),
            NetKind::BiLstm(n) => n.param_count(),
            NetKind::McnnLstm(n) => n.param_count(),
        }
    }

    pub fn for_each_param_grad(&mut self, f: &mut dyn FnMut(&mut f64, &f64)) {
        match self {
            NetKind::BiRnn(n) => n.for_each_param_grad(f),
            NetKind::BiLstm(n) => n.for_each_param_grad(f),
            NetKind::McnnLstm(n) => n.for_each_param_grad(f),
        }
    }
}
