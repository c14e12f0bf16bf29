//! Minimal GNN inference: GCN-style and mean-aggregation forward passes built
//! on the sampled SpMM kernel, plus model/dataset loading and accuracy.
//!
//! A layer computes `activation(A * (H W) + bias)`. The dense product `H W`
//! runs first, then the sparse aggregation, so the SpMM always sees the
//! narrower of the two feature widths.

use std::collections::BTreeSet;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::csr::CsrMatrix;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sampler::SamplingStrategy;
use crate::spmm::{spmm_sampled_with_stats, NormMode, SpmmStats, TileConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregator {
    /// Plain neighbor sum — unnormalized SpMM.
    Sum,
    /// Mean over retained neighbors — row-normalized SpMM.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    None,
}

#[derive(Debug, Clone)]
pub struct LayerSpec {
    pub weight: DenseMatrix,
    pub bias: Option<Vec<f32>>,
    pub aggregator: Aggregator,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct GnnModel {
    pub layers: Vec<LayerSpec>,
}

impl GnnModel {
    /// Checks that consecutive layer dimensions chain and biases match.
    pub fn check(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Manifest("model must have at least one layer".into()));
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[0].weight.cols != pair[1].weight.rows {
                return Err(Error::Manifest(format!(
                    "layer {} output dim {} does not chain into layer {} input dim {}",
                    i,
                    pair[0].weight.cols,
                    i + 1,
                    pair[1].weight.rows
                )));
            }
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if let Some(bias) = &layer.bias {
                if bias.len() != layer.weight.cols {
                    return Err(Error::Manifest(format!(
                        "layer {} bias length {} != output dim {}",
                        i,
                        bias.len(),
                        layer.weight.cols
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub graph: CsrMatrix,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub eval_mask: Vec<usize>,
}

/// Kernel-facing knobs shared by every layer of a forward pass.
#[derive(Debug, Clone, Copy)]
pub struct InferConfig {
    pub strategy: SamplingStrategy,
    pub tile: TileConfig,
    /// Normalization used when a layer's aggregator is Mean.
    pub mean_norm: NormMode,
    pub threads: usize,
}

impl InferConfig {
    pub fn new(strategy: SamplingStrategy, tile: TileConfig) -> Self {
        InferConfig {
            strategy,
            tile,
            mean_norm: NormMode::SampledCount,
            threads: 1,
        }
    }
}

/// One layer: dense `h * weight`, sparse aggregation, bias, activation.
/// Returns the activations plus the SpMM counters for the layer.
pub fn gnn_layer(
    a: &CsrMatrix,
    h: &DenseMatrix,
    layer: &LayerSpec,
    cfg: &InferConfig,
) -> Result<(DenseMatrix, SpmmStats)> {
    if h.cols != layer.weight.rows {
        return Err(Error::DimMismatch {
            left: "features H".into(),
            left_dims: format!("{}x{}", h.rows, h.cols),
            right: "weight W".into(),
            right_dims: format!("{}x{}", layer.weight.rows, layer.weight.cols),
        });
    }
    let hw = h.matmul(&layer.weight);
    let norm = match layer.aggregator {
        Aggregator::Sum => NormMode::None,
        Aggregator::Mean => cfg.mean_norm,
    };
    let (mut out, stats) =
        spmm_sampled_with_stats(a, &hw, cfg.strategy, cfg.tile, norm, cfg.threads)?;
    if let Some(bias) = &layer.bias {
        for row in 0..out.rows {
            for (o, b) in out.row_mut(row).iter_mut().zip(bias) {
                *o += b;
            }
        }
    }
    if layer.activation == Activation::Relu {
        for v in out.data.iter_mut() {
            *v = v.max(0.0);
        }
    }
    Ok((out, stats))
}

/// Full forward pass; returns logits and per-layer SpMM counters.
pub fn forward_with_stats(
    model: &GnnModel,
    data: &LabeledDataset,
    cfg: &InferConfig,
) -> Result<(DenseMatrix, Vec<SpmmStats>)> {
    model.check()?;
    let mut h = data.features.clone();
    let mut per_layer = Vec::with_capacity(model.layers.len());
    for layer in &model.layers {
        let (next, stats) = gnn_layer(&data.graph, &h, layer, cfg)?;
        per_layer.push(stats);
        h = next;
    }
    Ok((h, per_layer))
}

pub fn forward(model: &GnnModel, data: &LabeledDataset, cfg: &InferConfig) -> Result<DenseMatrix> {
    forward_with_stats(model, data, cfg).map(|(logits, _)| logits)
}

/// Fraction of masked nodes whose argmax logit equals the label.
/// Ties break to the lowest class index.
pub fn accuracy(logits: &DenseMatrix, labels: &[usize], eval_mask: &[usize]) -> Result<f64> {
    if eval_mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut correct = 0usize;
    for &node in eval_mask {
        let row = logits.row(node);
        let mut best = 0usize;
        for (j, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = j;
            }
        }
        if best == labels[node] {
            correct += 1;
        }
    }
    Ok(correct as f64 / eval_mask.len() as f64)
}

#[derive(Debug, Deserialize)]
struct ManifestLayer {
    weight: String,
    #[serde(default)]
    bias: Option<String>,
    aggregator: String,
    activation: String,
}

#[derive(Debug, Deserialize)]
struct Manifest {
    layers: Vec<ManifestLayer>,
}

/// Loads a model manifest (JSON) and the weight/bias tensors it points to.
/// Relative paths resolve against the manifest's directory.
pub fn load_model(path: impl AsRef<Path>) -> Result<GnnModel> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(&display, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Manifest(e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &str| -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for (i, spec) in manifest.layers.iter().enumerate() {
        let weight = DenseMatrix::load(resolve(&spec.weight))?;
        let bias = match &spec.bias {
            Some(p) => {
                let m = DenseMatrix::load(resolve(p))?;
                if m.rows != 1 || m.cols != weight.cols {
                    return Err(Error::Manifest(format!(
                        "layer {i} bias must be 1x{}, got {}x{}",
                        weight.cols, m.rows, m.cols
                    )));
                }
                Some(m.data)
            }
            None => None,
        };
        let aggregator = match spec.aggregator.as_str() {
            "sum" => Aggregator::Sum,
            "mean" => Aggregator::Mean,
            other => {
                return Err(Error::Manifest(format!(
                    "layer {i}: unknown aggregator `{other}`"
                )))
            }
        };
        let activation = match spec.activation.as_str() {
            "relu" => Activation::Relu,
            "none" => Activation::None,
            other => {
                return Err(Error::Manifest(format!(
                    "layer {i}: unknown activation `{other}`"
                )))
            }
        };
        layers.push(LayerSpec {
            weight,
            bias,
            aggregator,
            activation,
        });
    }
    let model = GnnModel { layers };
    model.check()?;
    Ok(model)
}

/// Labels file: CSV lines `node_id,label`, optional header.
pub fn load_labels(path: impl AsRef<Path>, n_nodes: usize) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::io(&display, e))?;
    let mut labels = vec![0usize; n_nodes];
    for (line_no, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|e| Error::io(&display, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split(',');
        let a = fields.next().map(str::trim);
        let b = fields.next().map(str::trim);
        let (Some(a), Some(b)) = (a, b) else {
            return Err(Error::Parse {
                path: display,
                line: line_no,
                message: "expected `node_id,label`".into(),
            });
        };
        // tolerate one header line
        if line_no == 1 && a.parse::<usize>().is_err() {
            continue;
        }
        let node: usize = a.parse().map_err(|_| Error::Parse {
            path: display.clone(),
            line: line_no,
            message: format!("bad node id `{a}`"),
        })?;
        let label: usize = b.parse().map_err(|_| Error::Parse {
            path: display.clone(),
            line: line_no,
            message: format!("bad label `{b}`"),
        })?;
        if node >= n_nodes {
            return Err(Error::NodeIndexOutOfRange {
                path: display,
                line: line_no,
                index: node,
                n_nodes,
            });
        }
        labels[node] = label;
    }
    Ok(labels)
}

/// Mask file: one node id per line; duplicates collapse, order is ascending.
pub fn load_mask(path: impl AsRef<Path>, n_nodes: usize) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::io(&display, e))?;
    let mut mask = BTreeSet::new();
    for (line_no, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|e| Error::io(&display, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let node: usize = trimmed.parse().map_err(|_| Error::Parse {
            path: display.clone(),
            line: line_no,
            message: format!("bad node id `{trimmed}`"),
        })?;
        if node >= n_nodes {
            return Err(Error::NodeIndexOutOfRange {
                path: display,
                line: line_no,
                index: node,
                n_nodes,
            });
        }
        mask.insert(node);
    }
    Ok(mask.into_iter().collect())
}
