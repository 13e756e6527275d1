//! Per-modality feed-forward stance classifiers.
//!
//! One hidden ReLU layer with dropout on the hidden activation, followed by
//! a two-way softmax output trained with cross-entropy. Backpropagation is
//! written out by hand.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;
use crate::stance::{Modality, StanceLabel};

const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// Adam with decoupled weight decay.
    AdamW,
    Sgd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub dropout: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub optimizer: Optimizer,
    pub epochs: usize,
    pub seed: u64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for HeadParams {
    fn default() -> Self {
        HeadParams {
            input_dim: 0,
            hidden_dim: 64,
            dropout: 0.2,
            batch_size: 128,
            lr: 1e-2,
            optimizer: Optimizer::Sgd,
            epochs: 100,
            seed: 0,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl HeadParams {
    /// AdamW at 3e-5 for 40 epochs.
    pub fn text_default(input_dim: usize) -> Self {
        HeadParams {
            input_dim,
            lr: 3e-5,
            optimizer: Optimizer::AdamW,
            epochs: 40,
            ..Default::default()
        }
    }

    /// Plain SGD at 1e-2 for 100 epochs.
    pub fn graph_default(input_dim: usize) -> Self {
        HeadParams {
            input_dim,
            lr: 1e-2,
            optimizer: Optimizer::Sgd,
            epochs: 100,
            ..Default::default()
        }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        let field = |f: &str| format!("{prefix}{f}");
        if self.input_dim < 1 {
            return Err(Error::param(field("input_dim"), "must be >= 1"));
        }
        if self.hidden_dim < 1 {
            return Err(Error::param(field("hidden_dim"), "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::param(field("dropout"), "must be in [0, 1)"));
        }
        if self.batch_size < 1 {
            return Err(Error::param(field("batch_size"), "must be >= 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::param(field("lr"), "must be > 0"));
        }
        if self.epochs < 1 {
            return Err(Error::param(field("epochs"), "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(Error::param(field("beta1"), "must be in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::param(field("beta2"), "must be in [0, 1)"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::param(field("weight_decay"), "must be >= 0"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::param(field("eps"), "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StanceProbs {
    pub favor: f64,
    pub against: f64,
}

impl StanceProbs {
    pub fn of(self, label: StanceLabel) -> f64 {
        match label {
            StanceLabel::Favor => self.favor,
            StanceLabel::Against => self.against,
        }
    }

    /// Argmax with an exact tie resolving to against.
    pub fn predict(self) -> (StanceLabel, f64) {
        if self.favor > self.against {
            (StanceLabel::Favor, self.favor)
        } else {
            (StanceLabel::Against, self.against)
        }
    }
}

/// Two-way softmax over `[favor, against]` logits.
pub fn softmax2(logits: [f64; 2]) -> StanceProbs {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let s = e0 + e1;
    StanceProbs {
        favor: e0 / s,
        against: e1 / s,
    }
}

/// `-ln p_gold`, with `p_gold` floored at 1e-12.
pub fn cross_entropy(probs: StanceProbs, gold: StanceLabel) -> f64 {
    let p = probs.of(gold);
    if p < PROB_FLOOR {
        log::warn!("gold-class probability {p} clamped to {PROB_FLOOR}");
    }
    -p.max(PROB_FLOOR).ln()
}

/// Parameter tensors of one head, also used for gradients and optimizer state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadTensors {
    /// `hidden x input`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `2 x hidden`, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl HeadTensors {
    fn zeros(input: usize, hidden: usize) -> Self {
        HeadTensors {
            w1: vec![0.0; hidden * input],
            b1: vec![0.0; hidden],
            w2: vec![0.0; 2 * hidden],
            b2: vec![0.0; 2],
        }
    }

    fn slices_mut(&mut self) -> [&mut [f64]; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    fn slices(&self) -> [&[f64]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedHead {
    pub modality: Modality,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub params: HeadTensors,
    pub config: HeadParams,
}

struct Activations {
    z1: Vec<f64>,
    h: Vec<f64>,
    probs: StanceProbs,
}

impl TrainedHead {
    /// Glorot-uniform weights, zero biases.
    pub fn init(modality: Modality, config: &HeadParams) -> Self {
        let (i, h) = (config.input_dim, config.hidden_dim);
        let mut rng = seeding::stream(config.seed, &[0x4EAD, modality.position() as u64]);
        let mut t = HeadTensors::zeros(i, h);
        let a1 = (6.0 / (i + h) as f64).sqrt();
        t.w1.iter_mut().for_each(|w| *w = rng.gen_range(-a1..a1));
        let a2 = (6.0 / (h + 2) as f64).sqrt();
        t.w2.iter_mut().for_each(|w| *w = rng.gen_range(-a2..a2));
        TrainedHead {
            modality,
            input_dim: i,
            hidden_dim: h,
            params: t,
            config: config.clone(),
        }
    }

    pub fn from_tensors(modality: Modality, config: &HeadParams, params: HeadTensors) -> Result<Self> {
        let (i, h) = (config.input_dim, config.hidden_dim);
        if params.w1.len() != h * i || params.b1.len() != h || params.w2.len() != 2 * h || params.b2.len() != 2 {
            return Err(Error::Checkpoint("tensor shapes do not match config".into()));
        }
        Ok(TrainedHead {
            modality,
            input_dim: i,
            hidden_dim: h,
            params,
            config: config.clone(),
        })
    }

    fn activations(&self, x: &[f64], mask: Option<&[f64]>) -> Activations {
        let (i, h) = (self.input_dim, self.hidden_dim);
        let p = &self.params;
        let mut z1 = p.b1.clone();
        for (r, z) in z1.iter_mut().enumerate() {
            let row = &p.w1[r * i..(r + 1) * i];
            *z += row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        }
        let mut hid: Vec<f64> = z1.iter().map(|z| z.max(0.0)).collect();
        if let Some(m) = mask {
            hid.iter_mut().zip(m).for_each(|(a, k)| *a *= k);
        }
        let mut logits = [p.b2[0], p.b2[1]];
        for (c, l) in logits.iter_mut().enumerate() {
            let row = &p.w2[c * h..(c + 1) * h];
            *l += row.iter().zip(&hid).map(|(w, a)| w * a).sum::<f64>();
        }
        Activations {
            z1,
            h: hid,
            probs: softmax2(logits),
        }
    }

    /// Inference forward pass (no dropout).
    pub fn forward(&self, x: &[f64]) -> Result<StanceProbs> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: x.len(),
            });
        }
        Ok(self.activations(x, None).probs)
    }

    pub fn predict(&self, x: &[f64]) -> Result<(StanceLabel, f64)> {
        self.forward(x).map(StanceProbs::predict)
    }

    /// Mean cross-entropy over a batch, dropout disabled.
    pub fn batch_loss(&self, xs: &[&[f64]], ys: &[StanceLabel]) -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(x, &y)| cross_entropy(self.activations(x, None).probs, y))
            .sum::<f64>()
            / xs.len() as f64
    }

    /// Mean batch loss and its gradient. `masks`, when given, holds one
    /// already-scaled dropout mask per example.
    pub fn loss_and_grads(
        &self,
        xs: &[&[f64]],
        ys: &[StanceLabel],
        masks: Option<&[Vec<f64>]>,
    ) -> (f64, HeadTensors) {
        let (i, h) = (self.input_dim, self.hidden_dim);
        let mut g = HeadTensors::zeros(i, h);
        let scale = 1.0 / xs.len() as f64;
        let mut loss = 0.0;
        let mut dh = vec![0.0; h];
        for (n, (x, &y)) in xs.iter().zip(ys).enumerate() {
            let mask = masks.map(|m| m[n].as_slice());
            let a = self.activations(x, mask);
            loss += cross_entropy(a.probs, y);

            let mut dlogit = [a.probs.favor, a.probs.against];
            dlogit[y.index()] -= 1.0;
            for (c, &dl) in dlogit.iter().enumerate() {
                let dl = dl * scale;
                g.b2[c] += dl;
                for (gw, &hv) in g.w2[c * h..(c + 1) * h].iter_mut().zip(&a.h) {
                    *gw += dl * hv;
                }
            }
            for (r, d) in dh.iter_mut().enumerate() {
                let mut v = scale * (dlogit[0] * self.params.w2[r] + dlogit[1] * self.params.w2[h + r]);
                if let Some(m) = mask {
                    v *= m[r];
                }
                *d = if a.z1[r] > 0.0 { v } else { 0.0 };
            }
            for (r, &d) in dh.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.b1[r] += d;
                for (gw, &xv) in g.w1[r * i..(r + 1) * i].iter_mut().zip(x.iter()) {
                    *gw += d * xv;
                }
            }
        }
        (loss * scale, g)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut BufReader::new(file))
    }

    const MAGIC: &'static [u8; 8] = b"SGHEAD\0\0";
    const VERSION: u32 = 1;

    /// Magic, version, modality, shapes, JSON config echo, then f64 LE
    /// tensors `w1, b1, w2, b2`.
    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&Self::VERSION.to_le_bytes())?;
        w.write_all(&[self.modality.position() as u8])?;
        w.write_all(&(self.input_dim as u32).to_le_bytes())?;
        w.write_all(&(self.hidden_dim as u32).to_le_bytes())?;
        let cfg = serde_json::to_vec(&self.config).map_err(std::io::Error::other)?;
        w.write_all(&(cfg.len() as u32).to_le_bytes())?;
        w.write_all(&cfg)?;
        for s in self.params.slices() {
            for x in s {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let io = |e: std::io::Error| Error::Checkpoint(e.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != Self::MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4).map_err(io)?;
        let version = u32::from_le_bytes(b4);
        if version != Self::VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag).map_err(io)?;
        let modality = *Modality::ALL
            .get(tag[0] as usize)
            .ok_or_else(|| Error::Checkpoint(format!("bad modality tag {}", tag[0])))?;
        r.read_exact(&mut b4).map_err(io)?;
        let input_dim = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4).map_err(io)?;
        let hidden_dim = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4).map_err(io)?;
        let mut cfg = vec![0u8; u32::from_le_bytes(b4) as usize];
        r.read_exact(&mut cfg).map_err(io)?;
        let config: HeadParams = serde_json::from_slice(&cfg)?;
        if config.input_dim != input_dim || config.hidden_dim != hidden_dim {
            return Err(Error::Checkpoint("shape header disagrees with config".into()));
        }
        let mut params = HeadTensors::zeros(input_dim, hidden_dim);
        let mut b8 = [0u8; 8];
        for s in params.slices_mut() {
            for x in s.iter_mut() {
                r.read_exact(&mut b8).map_err(io)?;
                *x = f64::from_le_bytes(b8);
            }
        }
        Self::from_tensors(modality, &config, params)
    }
}

struct OptimizerState {
    m: HeadTensors,
    v: HeadTensors,
    t: i32,
}

fn apply_update(head: &mut TrainedHead, grads: &HeadTensors, state: &mut OptimizerState) {
    let c = &head.config;
    match c.optimizer {
        Optimizer::Sgd => {
            for (p, g) in head.params.slices_mut().into_iter().zip(grads.slices()) {
                p.iter_mut().zip(g).for_each(|(p, g)| *p -= c.lr * g);
            }
        }
        Optimizer::AdamW => {
            state.t += 1;
            let bc1 = 1.0 - c.beta1.powi(state.t);
            let bc2 = 1.0 - c.beta2.powi(state.t);
            let params = head.params.slices_mut();
            let ms = state.m.slices_mut();
            let vs = state.v.slices_mut();
            for (((p, g), m), v) in params.into_iter().zip(grads.slices()).zip(ms).zip(vs) {
                for k in 0..p.len() {
                    m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
                    v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
                    let mhat = m[k] / bc1;
                    let vhat = v[k] / bc2;
                    p[k] -= c.lr * c.weight_decay * p[k];
                    p[k] -= c.lr * mhat / (vhat.sqrt() + c.eps);
                }
            }
        }
    }
}

/// Mini-batch training with a seeded shuffle each epoch and inverted dropout
/// on the hidden layer.
pub fn train_head(
    modality: Modality,
    features: &[&[f64]],
    labels: &[StanceLabel],
    params: &HeadParams,
) -> Result<TrainedHead> {
    params.validate(&format!("heads.{modality}."))?;
    if features.is_empty() {
        return Err(Error::param("features", "empty training set"));
    }
    if features.len() != labels.len() {
        return Err(Error::param(
            "labels",
            format!("{} features vs {} labels", features.len(), labels.len()),
        ));
    }
    if let Some(x) = features.iter().find(|x| x.len() != params.input_dim) {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim,
            found: x.len(),
        });
    }

    let mut head = TrainedHead::init(modality, params);
    let mut state = OptimizerState {
        m: HeadTensors::zeros(params.input_dim, params.hidden_dim),
        v: HeadTensors::zeros(params.input_dim, params.hidden_dim),
        t: 0,
    };
    let mut order: Vec<usize> = (0..features.len()).collect();
    let keep = 1.0 - params.dropout;
    let mut rng = seeding::stream(params.seed, &[0x7EA1, modality.position() as u64]);
    let mut xs = Vec::with_capacity(params.batch_size);
    let mut ys = Vec::with_capacity(params.batch_size);
    let mut masks: Vec<Vec<f64>> = Vec::with_capacity(params.batch_size);

    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        for (b, batch) in order.chunks(params.batch_size).enumerate() {
            xs.clear();
            ys.clear();
            masks.clear();
            for &k in batch {
                xs.push(features[k]);
                ys.push(labels[k]);
                if params.dropout > 0.0 {
                    masks.push(
                        (0..params.hidden_dim)
                            .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                            .collect(),
                    );
                }
            }
            let m = (params.dropout > 0.0).then_some(masks.as_slice());
            let (loss, grads) = head.loss_and_grads(&xs, &ys, m);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    loss,
                    context: format!("{modality} head, epoch {epoch}, batch {b}"),
                });
            }
            apply_update(&mut head, &grads, &mut state);
        }
    }
    if !head.params.is_finite() {
        return Err(Error::NonFiniteLoss {
            loss: f64::NAN,
            context: format!("{modality} head parameters diverged"),
        });
    }
    Ok(head)
}
