use lmrk_core::{Layer, PolicyParams, Rng};
use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::RlError;

pub const LEAKY_SLOPE: f64 = 0.01;

fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

fn leaky_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Head {
    /// Softmax over `k` logits.
    Categorical(usize),
    /// Diagonal Gaussian with state-independent log-std.
    Gaussian(usize),
}

impl Head {
    pub fn width(self) -> usize {
        match self {
            Head::Categorical(k) | Head::Gaussian(k) => k,
        }
    }
}

/// Layer widths of a policy network. The critic reuses the trunk and adds
/// `critic_extra` hidden layers before its scalar output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetShape {
    pub obs_dim: usize,
    pub trunk: Vec<usize>,
    pub critic_extra: Vec<usize>,
    pub head: Head,
}

impl NetShape {
    pub fn pendulum() -> Self {
        NetShape {
            obs_dim: 3,
            trunk: vec![256, 128],
            critic_extra: vec![128, 64],
            head: Head::Gaussian(1),
        }
    }

    pub fn ponglite() -> Self {
        NetShape {
            obs_dim: 6,
            trunk: vec![256, 128],
            critic_extra: vec![],
            head: Head::Categorical(3),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// in × out
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    fn init(inp: usize, out: usize, scale: f64, rng: &mut Rng) -> Self {
        let bound = scale / (inp as f64).sqrt();
        Dense {
            w: Array2::from_shape_fn((inp, out), |_| rng.random_range(-bound..bound)),
            b: Array1::zeros(out),
        }
    }

    fn zeros_like(&self) -> Self {
        Dense {
            w: Array2::zeros(self.w.raw_dim()),
            b: Array1::zeros(self.b.raw_dim()),
        }
    }

    fn apply(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }

    fn to_layer(&self) -> Layer {
        Layer {
            rows: self.w.nrows() as u32,
            cols: self.w.ncols() as u32,
            weights: self.w.iter().map(|&v| v as f32).collect(),
            bias: self.b.iter().map(|&v| v as f32).collect(),
        }
    }

    fn from_layer(l: &Layer, inp: usize, out: usize) -> Result<Self, RlError> {
        if l.rows as usize != inp || l.cols as usize != out {
            return Err(RlError::Shape(format!(
                "layer is {}x{}, expected {inp}x{out}",
                l.rows, l.cols
            )));
        }
        Ok(Dense {
            w: Array2::from_shape_vec((inp, out), l.weights.iter().map(|&v| v as f64).collect())
                .map_err(|e| RlError::Shape(e.to_string()))?,
            b: Array1::from_iter(l.bias.iter().map(|&v| v as f64)),
        })
    }
}

/// Policy network with a critic head sharing the trunk.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpPolicy {
    shape: NetShape,
    pub trunk: Vec<Dense>,
    pub policy_out: Dense,
    pub critic: Vec<Dense>,
    /// Empty for categorical heads.
    pub log_std: Array1<f64>,
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    trunk_in: Vec<Array2<f64>>,
    trunk_pre: Vec<Array2<f64>>,
    hidden: Array2<f64>,
    critic_in: Vec<Array2<f64>>,
    critic_pre: Vec<Array2<f64>>,
    /// Logits or Gaussian means, batch × width.
    pub head: Array2<f64>,
    pub values: Array1<f64>,
}

impl Forward {
    /// Sign of every hidden pre-activation; the loss is smooth wherever this
    /// pattern is locally constant.
    pub fn activation_pattern(&self) -> Vec<bool> {
        let hidden_critic = &self.critic_pre[..self.critic_pre.len() - 1];
        self.trunk_pre
            .iter()
            .chain(hidden_critic)
            .flat_map(|m| m.iter().map(|&x| x > 0.0))
            .collect()
    }
}

impl MlpPolicy {
    pub fn new(shape: NetShape, rng: &mut Rng) -> Self {
        let mut inp = shape.obs_dim;
        let mut trunk = Vec::new();
        for &w in &shape.trunk {
            trunk.push(Dense::init(inp, w, 1.0, rng));
            inp = w;
        }
        // small initial head keeps the first policy close to uniform / zero-mean
        let policy_out = Dense::init(inp, shape.head.width(), 0.01, rng);
        let mut critic = Vec::new();
        for &w in &shape.critic_extra {
            critic.push(Dense::init(inp, w, 1.0, rng));
            inp = w;
        }
        critic.push(Dense::init(inp, 1, 1.0, rng));
        let log_std = match shape.head {
            Head::Gaussian(k) => Array1::zeros(k),
            Head::Categorical(_) => Array1::zeros(0),
        };
        MlpPolicy {
            shape,
            trunk,
            policy_out,
            critic,
            log_std,
        }
    }

    pub fn shape(&self) -> &NetShape {
        &self.shape
    }

    pub fn zeros_like(&self) -> Self {
        MlpPolicy {
            shape: self.shape.clone(),
            trunk: self.trunk.iter().map(Dense::zeros_like).collect(),
            policy_out: self.policy_out.zeros_like(),
            critic: self.critic.iter().map(Dense::zeros_like).collect(),
            log_std: Array1::zeros(self.log_std.len()),
        }
    }

    fn tensors(&self) -> Vec<&Dense> {
        self.trunk
            .iter()
            .chain(std::iter::once(&self.policy_out))
            .chain(self.critic.iter())
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Dense> {
        self.trunk
            .iter_mut()
            .chain(std::iter::once(&mut self.policy_out))
            .chain(self.critic.iter_mut())
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|d| d.w.len() + d.b.len()).sum::<usize>() + self.log_std.len()
    }

    /// All parameters in a fixed order: per tensor weights then bias, log-std last.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for d in self.tensors() {
            out.extend(d.w.iter());
            out.extend(d.b.iter());
        }
        out.extend(self.log_std.iter());
        out
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.num_params(), "flat parameter length");
        let mut it = values.iter().copied();
        for d in self.tensors_mut() {
            d.w.iter_mut().for_each(|v| *v = it.next().unwrap());
            d.b.iter_mut().for_each(|v| *v = it.next().unwrap());
        }
        self.log_std.iter_mut().for_each(|v| *v = it.next().unwrap());
    }

    /// Finite, and still finite once narrowed to the f32 wire format.
    pub fn is_finite(&self) -> bool {
        let ok = |v: &f64| (*v as f32).is_finite();
        self.tensors().iter().all(|d| d.w.iter().chain(d.b.iter()).all(ok)) && self.log_std.iter().all(ok)
    }

    /// Layers in the order trunk, policy head, critic, then log-std as a 1×k layer.
    pub fn to_params(&self) -> PolicyParams {
        let mut layers: Vec<Layer> = self.tensors().iter().map(|d| d.to_layer()).collect();
        if let Head::Gaussian(k) = self.shape.head {
            layers.push(Layer {
                rows: 1,
                cols: k as u32,
                weights: self.log_std.iter().map(|&v| v as f32).collect(),
                bias: vec![0.0; k],
            });
        }
        PolicyParams::new(layers).expect("network tensors are finite and well-shaped")
    }

    pub fn from_params(shape: &NetShape, params: &PolicyParams) -> Result<Self, RlError> {
        let layers = params.layers();
        let gaussian = matches!(shape.head, Head::Gaussian(_));
        let expected = shape.trunk.len() + 1 + shape.critic_extra.len() + 1 + gaussian as usize;
        if layers.len() != expected {
            return Err(RlError::Shape(format!(
                "{} layers, expected {expected}",
                layers.len()
            )));
        }
        let mut it = layers.iter();
        let mut inp = shape.obs_dim;
        let mut trunk = Vec::new();
        for &w in &shape.trunk {
            trunk.push(Dense::from_layer(it.next().unwrap(), inp, w)?);
            inp = w;
        }
        let policy_out = Dense::from_layer(it.next().unwrap(), inp, shape.head.width())?;
        let mut critic = Vec::new();
        for &w in &shape.critic_extra {
            critic.push(Dense::from_layer(it.next().unwrap(), inp, w)?);
            inp = w;
        }
        critic.push(Dense::from_layer(it.next().unwrap(), inp, 1)?);
        let log_std = if let Head::Gaussian(k) = shape.head {
            let l = it.next().unwrap();
            if l.rows != 1 || l.cols as usize != k {
                return Err(RlError::Shape("log-std layer".into()));
            }
            Array1::from_iter(l.weights.iter().map(|&v| v as f64))
        } else {
            Array1::zeros(0)
        };
        Ok(MlpPolicy {
            shape: shape.clone(),
            trunk,
            policy_out,
            critic,
            log_std,
        })
    }

    /// Batched forward pass; `obs` is batch × obs_dim.
    pub fn forward(&self, obs: ArrayView2<f64>) -> Forward {
        let mut trunk_in = Vec::with_capacity(self.trunk.len());
        let mut trunk_pre = Vec::with_capacity(self.trunk.len());
        let mut x = obs.to_owned();
        for d in &self.trunk {
            let pre = d.apply(&x.view());
            let next = pre.mapv(leaky);
            trunk_in.push(x);
            trunk_pre.push(pre);
            x = next;
        }
        let hidden = x;
        let head = self.policy_out.apply(&hidden.view());
        let mut critic_in = Vec::with_capacity(self.critic.len());
        let mut critic_pre = Vec::with_capacity(self.critic.len());
        let mut c = hidden.clone();
        let last = self.critic.len() - 1;
        for (i, d) in self.critic.iter().enumerate() {
            let pre = d.apply(&c.view());
            let next = if i == last { pre.clone() } else { pre.mapv(leaky) };
            critic_in.push(c);
            critic_pre.push(pre);
            c = next;
        }
        let values = c.column(0).to_owned();
        Forward {
            trunk_in,
            trunk_pre,
            hidden,
            critic_in,
            critic_pre,
            head,
            values,
        }
    }

    /// Single observation: (head output, value).
    pub fn evaluate(&self, obs: &[f64]) -> (Vec<f64>, f64) {
        let x = ArrayView2::from_shape((1, obs.len()), obs).expect("observation row");
        let f = self.forward(x);
        (f.head.row(0).to_vec(), f.values[0])
    }

    /// Gradients of a loss given its derivatives w.r.t. the head output
    /// (batch × width), the values (batch) and the log-std (width).
    pub fn backward(
        &self,
        fwd: &Forward,
        d_head: &Array2<f64>,
        d_values: &Array1<f64>,
        d_log_std: &Array1<f64>,
    ) -> MlpPolicy {
        let mut g = self.zeros_like();
        g.policy_out.w = fwd.hidden.t().dot(d_head);
        g.policy_out.b = d_head.sum_axis(Axis(0));
        let mut d_hidden = d_head.dot(&self.policy_out.w.t());

        let n = d_values.len();
        let mut dc = d_values.clone().into_shape_with_order((n, 1)).expect("column");
        let last = self.critic.len() - 1;
        for i in (0..self.critic.len()).rev() {
            if i != last {
                dc.zip_mut_with(&fwd.critic_pre[i], |d, &p| *d *= leaky_grad(p));
            }
            g.critic[i].w = fwd.critic_in[i].t().dot(&dc);
            g.critic[i].b = dc.sum_axis(Axis(0));
            dc = dc.dot(&self.critic[i].w.t());
        }
        d_hidden += &dc;

        let mut dx = d_hidden;
        for i in (0..self.trunk.len()).rev() {
            dx.zip_mut_with(&fwd.trunk_pre[i], |d, &p| *d *= leaky_grad(p));
            g.trunk[i].w = fwd.trunk_in[i].t().dot(&dx);
            g.trunk[i].b = dx.sum_axis(Axis(0));
            if i > 0 {
                dx = dx.dot(&self.trunk[i].w.t());
            }
        }
        g.log_std = d_log_std.clone();
        g
    }
}

/// Rows of a batch as a matrix view helper.
pub fn stack_rows(rows: &[Vec<f64>], width: usize) -> Array2<f64> {
    let mut m = Array2::zeros((rows.len(), width));
    for (i, r) in rows.iter().enumerate() {
        m.slice_mut(s![i, ..]).assign(&ndarray::ArrayView1::from(&r[..]));
    }
    m
}
