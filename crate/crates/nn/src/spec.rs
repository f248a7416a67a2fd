use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d {
        out_channels: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    },
    MaxPool1d {
        size: usize,
    },
    BatchNorm1d {
        eps: f64,
        momentum: f64,
    },
    Dense {
        out: usize,
    },
    Relu,
    Tanh,
    Softmax,
    Dropout {
        p: f64,
    },
    Flatten,
    Lstm {
        hidden: usize,
    },
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Conv1d { .. } => "Conv1D",
            Self::MaxPool1d { .. } => "MaxPool1D",
            Self::BatchNorm1d { .. } => "BatchNorm1D",
            Self::Dense { .. } => "Dense",
            Self::Relu => "ReLU",
            Self::Tanh => "Tanh",
            Self::Softmax => "Softmax",
            Self::Dropout { .. } => "Dropout",
            Self::Flatten => "Flatten",
            Self::Lstm { .. } => "LSTM",
        }
    }

    pub fn batch_norm() -> Self {
        Self::BatchNorm1d {
            eps: 1e-5,
            momentum: 0.1,
        }
    }

    /// Per-sample output shape for a per-sample input shape.
    pub fn output_shape(&self, input: &[usize]) -> std::result::Result<Vec<usize>, String> {
        let need3 = |what: &str| -> std::result::Result<(usize, usize), String> {
            match input {
                [c, l] => Ok((*c, *l)),
                _ => Err(format!("{what} needs (channels, length) input, got {input:?}")),
            }
        };
        match *self {
            Self::Conv1d {
                out_channels,
                kernel,
                stride,
                pad,
            } => {
                let (_, l) = need3("Conv1D")?;
                if kernel == 0 || stride == 0 || out_channels == 0 {
                    return Err("kernel, stride and channels must be positive".into());
                }
                if l + 2 * pad < kernel {
                    return Err(format!("length {l} with pad {pad} shorter than kernel {kernel}"));
                }
                Ok(vec![out_channels, (l + 2 * pad - kernel) / stride + 1])
            }
            Self::MaxPool1d { size } => {
                let (c, l) = need3("MaxPool1D")?;
                if size == 0 || l < size {
                    return Err(format!("cannot pool length {l} by {size}"));
                }
                Ok(vec![c, l / size])
            }
            Self::BatchNorm1d { eps, momentum } => {
                if eps <= 0.0 || !(0.0..=1.0).contains(&momentum) {
                    return Err("eps must be positive and momentum in [0, 1]".into());
                }
                if input.is_empty() || input.len() > 2 {
                    return Err(format!("BatchNorm1D needs 1 or 2 per-sample dims, got {input:?}"));
                }
                Ok(input.to_vec())
            }
            Self::Dense { out } => match input {
                [_] if out > 0 => Ok(vec![out]),
                [_] => Err("Dense width must be positive".into()),
                _ => Err(format!("Dense needs flat input, got {input:?}")),
            },
            Self::Relu | Self::Tanh => Ok(input.to_vec()),
            Self::Softmax => match input {
                [_] => Ok(input.to_vec()),
                _ => Err(format!("Softmax needs flat input, got {input:?}")),
            },
            Self::Dropout { p } => {
                if !(0.0..1.0).contains(&p) {
                    return Err(format!("dropout p={p} outside [0, 1)"));
                }
                Ok(input.to_vec())
            }
            Self::Flatten => Ok(vec![input.iter().product()]),
            Self::Lstm { hidden } => {
                need3("LSTM")?;
                if hidden == 0 {
                    return Err("LSTM hidden size must be positive".into());
                }
                Ok(vec![hidden])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    /// Per-sample input shape, without the batch dimension.
    pub input: Vec<usize>,
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    /// Per-sample shapes after each layer. Checks shape compatibility and
    /// that Softmax, if present, is the last layer.
    pub fn shapes(&self) -> Result<Vec<Vec<usize>>> {
        if self.layers.is_empty() {
            return Err(NnError::InvalidSpec("no layers".into()));
        }
        let mut shapes = Vec::with_capacity(self.layers.len());
        let mut cur = self.input.clone();
        for (index, layer) in self.layers.iter().enumerate() {
            if matches!(layer, LayerSpec::Softmax) && index + 1 != self.layers.len() {
                return Err(NnError::InvalidSpec(format!("Softmax at layer {index} is not terminal")));
            }
            cur = layer.output_shape(&cur).map_err(|message| NnError::Layer {
                index,
                name: layer.name(),
                message,
            })?;
            shapes.push(cur.clone());
        }
        Ok(shapes)
    }

    pub fn output_shape(&self) -> Result<Vec<usize>> {
        Ok(self.shapes()?.pop().unwrap())
    }

    pub fn count(&self, pred: impl Fn(&LayerSpec) -> bool) -> usize {
        self.layers.iter().filter(|l| pred(l)).count()
    }
}

/// Layer sizes for the preset architectures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnConfig {
    pub channels: Vec<usize>,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub pool: usize,
    /// Hidden dense widths; the class layer is appended.
    pub dense: Vec<usize>,
    pub dropout: f64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self {
            channels: vec![8, 16, 32, 64],
            kernel: 16,
            stride: 2,
            pad: 8,
            pool: 2,
            dense: vec![256, 128, 64],
            dropout: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PresetConfig {
    pub cnn: CnnConfig,
    /// Conv channels of the two C-RNN blocks.
    pub crnn_channels: Vec<usize>,
    pub lstm_hidden: usize,
}

impl Default for PresetConfig {
    fn default() -> Self {
        Self {
            cnn: CnnConfig::default(),
            crnn_channels: vec![8, 16],
            lstm_hidden: 128,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ModelPreset {
    #[serde(rename = "CNN1D")]
    Cnn1d,
    #[serde(rename = "CRNN")]
    Crnn,
    LstmRnn,
}

impl FromStr for ModelPreset {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "cnn1d" | "cnn" => Ok(Self::Cnn1d),
            "crnn" => Ok(Self::Crnn),
            "lstmrnn" | "lstm" => Ok(Self::LstmRnn),
            _ => Err(NnError::InvalidSpec(format!("unknown model preset {s:?}"))),
        }
    }
}

fn conv_block(out: &mut Vec<LayerSpec>, channels: usize, cfg: &CnnConfig) {
    out.push(LayerSpec::Conv1d {
        out_channels: channels,
        kernel: cfg.kernel,
        stride: cfg.stride,
        pad: cfg.pad,
    });
    out.push(LayerSpec::MaxPool1d { size: cfg.pool });
    out.push(LayerSpec::batch_norm());
    out.push(LayerSpec::Relu);
}

impl ModelPreset {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Cnn1d => "CNN1D",
            Self::Crnn => "CRNN",
            Self::LstmRnn => "LSTM_RNN",
        }
    }

    /// Build the layer stack for `(channels, length)` inputs.
    pub fn build(self, input: [usize; 2], n_classes: usize, cfg: &PresetConfig) -> Result<ModelSpec> {
        let mut layers = Vec::new();
        match self {
            Self::Cnn1d => {
                for &c in &cfg.cnn.channels {
                    conv_block(&mut layers, c, &cfg.cnn);
                }
                layers.push(LayerSpec::Flatten);
                for &w in &cfg.cnn.dense {
                    layers.push(LayerSpec::Dense { out: w });
                    layers.push(LayerSpec::Relu);
                    layers.push(LayerSpec::Dropout { p: cfg.cnn.dropout });
                }
            }
            Self::Crnn => {
                for &c in &cfg.crnn_channels {
                    conv_block(&mut layers, c, &cfg.cnn);
                }
                layers.push(LayerSpec::Lstm { hidden: cfg.lstm_hidden });
            }
            Self::LstmRnn => layers.push(LayerSpec::Lstm { hidden: cfg.lstm_hidden }),
        }
        layers.push(LayerSpec::Dense { out: n_classes });
        layers.push(LayerSpec::Softmax);
        let spec = ModelSpec {
            name: self.as_str().into(),
            input: input.to_vec(),
            layers,
        };
        spec.shapes()?;
        Ok(spec)
    }
}
