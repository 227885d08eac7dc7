//! ReLU networks viewed as continuous piecewise-affine functions.
//!
//! An [`ActivationIndicator`] fixes every neuron on or off. Under a fixed
//! indicator each pre-activation is an affine function of the input, the
//! network output is `w·x + b`, and the inputs that realise the indicator form
//! a polyhedron with one half-space per neuron.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::dot;
use crate::polyhedron::Polyhedron;

pub const DEFAULT_TOL_ZERO: f64 = 1e-9;
pub const DEFAULT_BRANCH_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Row-major, one row per neuron.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn width(&self) -> usize {
        self.bias.len()
    }
}

/// A fully connected ReLU network with a scalar affine head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork")]
pub struct ReluNetwork {
    pub input_dim: usize,
    pub layers: Vec<Layer>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

#[derive(Deserialize)]
struct RawNetwork {
    input_dim: usize,
    layers: Vec<Layer>,
    output_weights: Vec<f64>,
    output_bias: f64,
}

impl TryFrom<RawNetwork> for ReluNetwork {
    type Error = Error;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        ReluNetwork::new(
            raw.input_dim,
            raw.layers,
            raw.output_weights,
            raw.output_bias,
        )
    }
}

impl ReluNetwork {
    pub fn new(
        input_dim: usize,
        layers: Vec<Layer>,
        output_weights: Vec<f64>,
        output_bias: f64,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidNetwork("input dimension is zero".into()));
        }
        let mut prev = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.weights.len() != layer.bias.len() {
                return Err(Error::InvalidNetwork(format!(
                    "layer {}: {} weight rows but {} biases",
                    i + 1,
                    layer.weights.len(),
                    layer.bias.len()
                )));
            }
            if let Some(row) = layer.weights.iter().find(|r| r.len() != prev) {
                return Err(Error::InvalidNetwork(format!(
                    "layer {}: weight row of length {} after a layer of width {}",
                    i + 1,
                    row.len(),
                    prev
                )));
            }
            prev = layer.width();
        }
        if output_weights.len() != prev {
            return Err(Error::InvalidNetwork(format!(
                "output weights have length {} but the last layer has width {}",
                output_weights.len(),
                prev
            )));
        }
        let finite = layers
            .iter()
            .flat_map(|l| l.weights.iter().flatten().chain(l.bias.iter()))
            .chain(output_weights.iter())
            .chain(std::iter::once(&output_bias))
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidNetwork("non-finite parameter".into()));
        }
        Ok(ReluNetwork {
            input_dim,
            layers,
            output_weights,
            output_bias,
        })
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(Layer::width).collect()
    }

    pub fn neuron_count(&self) -> usize {
        self.layers.iter().map(Layer::width).sum()
    }

    /// Multiplies the output head `(ω, φ)` by `k`.
    pub fn scale_output(&self, k: f64) -> ReluNetwork {
        let mut net = self.clone();
        net.output_weights.iter_mut().for_each(|w| *w *= k);
        net.output_bias *= k;
        net
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "input of length {} for a network over R^{}",
                x.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    fn check_shape(&self, layers: usize, widths: impl Iterator<Item = usize>) -> Result<()> {
        if layers != self.layers.len() || !widths.eq(self.layers.iter().map(Layer::width)) {
            return Err(Error::DimensionMismatch(
                "indicator shape does not match the network".into(),
            ));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let mut z = x.to_vec();
        for layer in &self.layers {
            z = layer
                .weights
                .iter()
                .zip(&layer.bias)
                .map(|(w, b)| (dot(w, &z) + b).max(0.0))
                .collect();
        }
        Ok(dot(&self.output_weights, &z) + self.output_bias)
    }

    /// Pre-activation values of every neuron, layer by layer.
    pub fn preactivations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x)?;
        let mut z = x.to_vec();
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let pre: Vec<f64> = layer
                .weights
                .iter()
                .zip(&layer.bias)
                .map(|(w, b)| dot(w, &z) + b)
                .collect();
            z = pre.iter().map(|v| v.max(0.0)).collect();
            out.push(pre);
        }
        Ok(out)
    }

    /// The affine piece selected by `c`.
    pub fn affine_map(&self, c: &ActivationIndicator) -> Result<RegionAffine> {
        self.check_shape(c.layers.len(), c.layers.iter().map(Vec::len))?;
        let n = self.input_dim;
        // Outputs of the previous layer as affine forms in x; starts at identity.
        let mut prev: Vec<AffineForm> = (0..n)
            .map(|i| {
                let mut coeffs = vec![0.0; n];
                coeffs[i] = 1.0;
                AffineForm {
                    coeffs,
                    offset: 0.0,
                }
            })
            .collect();
        let mut pre_all = Vec::with_capacity(self.layers.len());
        for (layer, mask) in self.layers.iter().zip(&c.layers) {
            let pre: Vec<AffineForm> = layer
                .weights
                .iter()
                .zip(&layer.bias)
                .map(|(w, &b)| {
                    let mut form = AffineForm {
                        coeffs: vec![0.0; n],
                        offset: b,
                    };
                    for (wk, zk) in w.iter().zip(&prev) {
                        form.add_scaled(zk, *wk);
                    }
                    form
                })
                .collect();
            prev = pre
                .iter()
                .zip(mask)
                .map(|(f, &on)| if on { f.clone() } else { AffineForm::zero(n) })
                .collect();
            pre_all.push(pre);
        }
        let mut out = AffineForm {
            coeffs: vec![0.0; n],
            offset: self.output_bias,
        };
        for (z, &om) in prev.iter().zip(&self.output_weights) {
            out.add_scaled(z, om);
        }
        Ok(RegionAffine {
            w: out.coeffs,
            b: out.offset,
            preactivations: pre_all,
        })
    }

    /// The polyhedron of inputs that realise `c`: one row per neuron, duplicates kept.
    pub fn region_constraints(&self, c: &ActivationIndicator) -> Result<Polyhedron> {
        let affine = self.affine_map(c)?;
        Ok(affine.region_constraints(c))
    }

    /// All indicators realised by `x`, branching every neuron whose
    /// pre-activation is within `tol_zero` of zero. Downstream pre-activations
    /// are recomputed per branch because a masked neuron changes later layers.
    pub fn feasible_indicators(
        &self,
        x: &[f64],
        tol_zero: f64,
        cap: usize,
    ) -> Result<Vec<ActivationIndicator>> {
        self.check_input(x)?;
        let mut found = BTreeSet::new();
        let mut prefix = Vec::with_capacity(self.layers.len());
        self.branch(0, x.to_vec(), &mut prefix, 0, tol_zero, cap, &mut found)?;
        Ok(found.into_iter().collect())
    }

    #[allow(clippy::too_many_arguments)]
    fn branch(
        &self,
        depth: usize,
        z: Vec<f64>,
        prefix: &mut Vec<Vec<bool>>,
        zeros_so_far: usize,
        tol_zero: f64,
        cap: usize,
        found: &mut BTreeSet<ActivationIndicator>,
    ) -> Result<()> {
        let Some(layer) = self.layers.get(depth) else {
            found.insert(ActivationIndicator {
                layers: prefix.clone(),
            });
            return Ok(());
        };
        let pre: Vec<f64> = layer
            .weights
            .iter()
            .zip(&layer.bias)
            .map(|(w, b)| dot(w, &z) + b)
            .collect();
        let ambiguous: Vec<usize> = (0..pre.len())
            .filter(|&j| pre[j].abs() <= tol_zero)
            .collect();
        let zeros = zeros_so_far + ambiguous.len();
        if zeros > cap {
            return Err(Error::CombinatorialBlowup { count: zeros, cap });
        }
        let base: Vec<bool> = pre.iter().map(|&v| v > 0.0).collect();
        for bits in 0u64..(1u64 << ambiguous.len()) {
            let mut mask = base.clone();
            for (k, &j) in ambiguous.iter().enumerate() {
                mask[j] = bits >> (ambiguous.len() - 1 - k) & 1 == 1;
            }
            let next: Vec<f64> = pre
                .iter()
                .zip(&mask)
                .map(|(&v, &on)| if on { v } else { 0.0 })
                .collect();
            prefix.push(mask);
            self.branch(depth + 1, next, prefix, zeros, tol_zero, cap, found)?;
            prefix.pop();
        }
        Ok(())
    }

    /// Interval bound propagation over `lo..=hi`: neurons whose pre-activation
    /// is provably positive are on, provably negative are off, the rest
    /// undetermined.
    pub fn ibp_candidate(&self, lo: &[f64], hi: &[f64]) -> Result<CandidateIndicator> {
        self.check_input(lo)?;
        self.check_input(hi)?;
        let mut zl = lo.to_vec();
        let mut zu = hi.to_vec();
        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut states = Vec::with_capacity(layer.width());
            let mut nl = Vec::with_capacity(layer.width());
            let mut nu = Vec::with_capacity(layer.width());
            for (w, &b) in layer.weights.iter().zip(&layer.bias) {
                let (mut l, mut u) = (b, b);
                for ((&wk, &a), &c) in w.iter().zip(&zl).zip(&zu) {
                    if wk >= 0.0 {
                        l += wk * a;
                        u += wk * c;
                    } else {
                        l += wk * c;
                        u += wk * a;
                    }
                }
                states.push(if l > 0.0 {
                    NeuronState::Active
                } else if u < 0.0 {
                    NeuronState::Inactive
                } else {
                    NeuronState::Undetermined
                });
                nl.push(l.max(0.0));
                nu.push(u.max(0.0));
            }
            zl = nl;
            zu = nu;
            layers.push(states);
        }
        Ok(CandidateIndicator { layers })
    }
}

/// `coeffs·x + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineForm {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl AffineForm {
    pub fn zero(n: usize) -> Self {
        AffineForm {
            coeffs: vec![0.0; n],
            offset: 0.0,
        }
    }

    fn add_scaled(&mut self, other: &AffineForm, k: f64) {
        if k == 0.0 {
            return;
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += k * b;
        }
        self.offset += k * other.offset;
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.coeffs, x) + self.offset
    }
}

/// The affine piece `h(x) = w·x + b` of one activation pattern, together with
/// every neuron's pre-activation pulled back to input coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionAffine {
    pub w: Vec<f64>,
    pub b: f64,
    pub preactivations: Vec<Vec<AffineForm>>,
}

impl RegionAffine {
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.b
    }

    pub fn region_constraints(&self, c: &ActivationIndicator) -> Polyhedron {
        let n = self.w.len();
        let mut p = Polyhedron::universe(n);
        for (forms, mask) in self.preactivations.iter().zip(&c.layers) {
            for (f, &on) in forms.iter().zip(mask) {
                if on {
                    // pre >= 0  <=>  -coeffs·x <= offset
                    p.push(f.coeffs.iter().map(|v| -v).collect(), f.offset);
                } else {
                    p.push(f.coeffs.clone(), -f.offset);
                }
            }
        }
        p
    }
}

/// One on/off bit per neuron, grouped by layer. Ordered lexicographically on
/// the flattened bits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActivationIndicator {
    pub layers: Vec<Vec<bool>>,
}

impl ActivationIndicator {
    pub fn from_bits(layers: &[&[u8]]) -> Self {
        ActivationIndicator {
            layers: layers
                .iter()
                .map(|l| l.iter().map(|&b| b != 0).collect())
                .collect(),
        }
    }

    /// Every indicator of the given shape is all-off.
    pub fn all_off(widths: &[usize]) -> Self {
        ActivationIndicator {
            layers: widths.iter().map(|&w| vec![false; w]).collect(),
        }
    }

    /// Indicator number `k` of a given shape, the first neuron being the most
    /// significant bit.
    pub fn from_index(widths: &[usize], k: u64) -> Self {
        let total: usize = widths.iter().sum();
        let mut bit = total;
        let layers = widths
            .iter()
            .map(|&w| {
                (0..w)
                    .map(|_| {
                        bit -= 1;
                        k >> bit & 1 == 1
                    })
                    .collect()
            })
            .collect();
        ActivationIndicator { layers }
    }

    /// Parses the `Display` form, e.g. `1010|01`.
    pub fn parse(text: &str) -> Option<Self> {
        let layers = text
            .split('|')
            .map(|l| {
                l.chars()
                    .map(|c| match c {
                        '0' => Some(false),
                        '1' => Some(true),
                        _ => None,
                    })
                    .collect::<Option<Vec<bool>>>()
            })
            .collect::<Option<Vec<_>>>()?;
        Some(ActivationIndicator { layers })
    }
}

impl fmt::Display for ActivationIndicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, layer) in self.layers.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            for &b in layer {
                f.write_str(if b { "1" } else { "0" })?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NeuronState {
    Inactive,
    Active,
    Undetermined,
}

/// Partially determined activation pattern produced by interval bound propagation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CandidateIndicator {
    pub layers: Vec<Vec<NeuronState>>,
}

impl CandidateIndicator {
    /// Builds from `1`/`0`/`-1` entries.
    pub fn from_ternary(layers: &[&[i8]]) -> Self {
        CandidateIndicator {
            layers: layers
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|&v| match v {
                            1 => NeuronState::Active,
                            0 => NeuronState::Inactive,
                            _ => NeuronState::Undetermined,
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn undetermined_count(&self) -> usize {
        self.layers
            .iter()
            .flatten()
            .filter(|s| **s == NeuronState::Undetermined)
            .count()
    }

    /// Replaces every undetermined entry by both 0 and 1, in lexicographic order.
    pub fn expand(&self, cap: usize) -> Result<Vec<ActivationIndicator>> {
        let k = self.undetermined_count();
        if k > cap {
            return Err(Error::CombinatorialBlowup { count: k, cap });
        }
        let mut out = Vec::with_capacity(1 << k);
        for bits in 0u64..(1u64 << k) {
            let mut slot = k;
            let layers = self
                .layers
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|s| match s {
                            NeuronState::Active => true,
                            NeuronState::Inactive => false,
                            NeuronState::Undetermined => {
                                slot -= 1;
                                bits >> slot & 1 == 1
                            }
                        })
                        .collect()
                })
                .collect();
            out.push(ActivationIndicator { layers });
        }
        Ok(out)
    }
}

/// Small networks used by tests, benches and examples.
pub mod fixtures {
    use super::*;

    /// `h(x) = 1 - |x1| - |x2|`: zero level set is the unit diamond.
    pub fn diamond() -> ReluNetwork {
        ReluNetwork::new(
            2,
            vec![Layer {
                weights: vec![
                    vec![1.0, 0.0],
                    vec![-1.0, 0.0],
                    vec![0.0, 1.0],
                    vec![0.0, -1.0],
                ],
                bias: vec![0.0; 4],
            }],
            vec![-1.0; 4],
            1.0,
        )
        .expect("diamond network is well formed")
    }

    /// `h(x) = 1 - |x1|` over R^2: the boundary is two disjoint lines.
    pub fn strip() -> ReluNetwork {
        ReluNetwork::new(
            2,
            vec![Layer {
                weights: vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
                bias: vec![0.0; 2],
            }],
            vec![-1.0, -1.0],
            1.0,
        )
        .expect("strip network is well formed")
    }

    /// A network with standard-normal weights and biases throughout.
    pub fn gaussian<R: rand::Rng + ?Sized>(
        rng: &mut R,
        input_dim: usize,
        widths: &[usize],
    ) -> ReluNetwork {
        use rand_distr::StandardNormal;
        let mut draw =
            |k: usize| -> Vec<f64> { (0..k).map(|_| rng.sample(StandardNormal)).collect() };
        let mut layers = Vec::with_capacity(widths.len());
        let mut fan_in = input_dim;
        for &w in widths {
            layers.push(Layer {
                weights: (0..w).map(|_| draw(fan_in)).collect(),
                bias: draw(w),
            });
            fan_in = w;
        }
        let output_weights = draw(fan_in);
        let output_bias = draw(1)[0];
        ReluNetwork::new(input_dim, layers, output_weights, output_bias)
            .expect("shapes follow the requested widths")
    }

    /// All weights zero, `h ≡ 1`.
    pub fn constant_one(n: usize) -> ReluNetwork {
        ReluNetwork::new(
            n,
            vec![Layer {
                weights: vec![vec![0.0; n]; 2],
                bias: vec![0.0; 2],
            }],
            vec![0.0; 2],
            1.0,
        )
        .expect("constant network is well formed")
    }
}
