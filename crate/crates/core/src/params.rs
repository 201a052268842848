use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// One dense layer `y = x W + b`, with `W` stored row-major as `rows x cols`
/// (`rows` = input width, `cols` = output width) and `b` of length `cols`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub rows: u32,
    pub cols: u32,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl Layer {
    pub fn zeros(rows: u32, cols: u32) -> Self {
        Layer {
            rows,
            cols,
            weights: vec![0.0; rows as usize * cols as usize],
            bias: vec![0.0; cols as usize],
        }
    }

    fn check(&self, index: usize) -> Result<(), CoreError> {
        let expected = self.rows as usize * self.cols as usize;
        if self.weights.len() != expected {
            return Err(CoreError::LayerShape {
                index,
                what: "weights",
                expected,
                got: self.weights.len(),
            });
        }
        if self.bias.len() != self.cols as usize {
            return Err(CoreError::LayerShape {
                index,
                what: "biases",
                expected: self.cols as usize,
                got: self.bias.len(),
            });
        }
        if self.weights.iter().chain(&self.bias).any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite { index });
        }
        Ok(())
    }
}

/// Flat parameter set of a policy, as shipped to actors.
///
/// The list is not required to form a single chain: a policy with a critic
/// branch stores its trunk, heads and branch layers one after another and
/// checks each branch itself. [`PolicyParams::is_chain`] tests the plain case.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolicyParams {
    layers: Vec<Layer>,
}

impl PolicyParams {
    pub fn new(layers: Vec<Layer>) -> Result<Self, CoreError> {
        for (i, layer) in layers.iter().enumerate() {
            layer.check(i)?;
        }
        Ok(PolicyParams { layers })
    }

    pub fn empty() -> Self {
        PolicyParams::default()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    /// True when the output width of each layer is the input width of the next.
    pub fn is_chain(&self) -> bool {
        self.layers.windows(2).all(|w| w[0].cols == w[1].rows)
    }

    pub fn num_values(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// All values in wire order (per layer: weights then biases).
    pub fn flat(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.num_values());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Same shapes, new values (in [`PolicyParams::flat`] order).
    pub fn with_flat(&self, values: &[f32]) -> Result<Self, CoreError> {
        let mut layers = self.layers.clone();
        let mut it = values.iter().copied();
        for l in &mut layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = it.next().ok_or(CoreError::LayerShape {
                    index: 0,
                    what: "flat values",
                    expected: self.num_values(),
                    got: values.len(),
                })?;
            }
        }
        if values.len() != self.num_values() {
            return Err(CoreError::LayerShape {
                index: 0,
                what: "flat values",
                expected: self.num_values(),
                got: values.len(),
            });
        }
        PolicyParams::new(layers)
    }
}

/// Policy version: the learner's gradient-step counter.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct Version(pub u64);

impl Version {
    pub fn next(self) -> Version {
        Version(self.0 + 1)
    }
}

impl std::fmt::Display for Version {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// A versioned policy snapshot broadcast from the learner to actors.
///
/// `produced_at` is local bookkeeping (logical time of emission); it is not
/// part of the wire format, and a decoded packet carries `produced_at = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyPacket {
    pub version: Version,
    pub params: PolicyParams,
    pub produced_at: f64,
}

impl PolicyPacket {
    pub fn new(version: Version, params: PolicyParams) -> Self {
        PolicyPacket {
            version,
            params,
            produced_at: 0.0,
        }
    }

    pub fn at(mut self, t: f64) -> Self {
        self.produced_at = t;
        self
    }

    /// Equality of everything carried on the wire.
    pub fn same_content(&self, other: &PolicyPacket) -> bool {
        self.version == other.version && self.params == other.params
    }
}

/// Hands out strictly increasing versions; a learner owns exactly one.
#[derive(Debug, Clone, Default)]
pub struct VersionCounter {
    current: Version,
}

impl VersionCounter {
    pub fn starting_at(v: Version) -> Self {
        VersionCounter { current: v }
    }

    pub fn current(&self) -> Version {
        self.current
    }

    pub fn advance(&mut self) -> Version {
        self.current = self.current.next();
        self.current
    }
}
