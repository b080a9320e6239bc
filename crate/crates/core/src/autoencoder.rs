//! The five encoder/decoder configurations over layer schedules (A)/(B)/(C):
//! assembly, encoding/decoding, state-part extraction, parameter counting,
//! and the point-projection diagnostic.
//!
//! Configuration kinds:
//! - `NNA`  — nonlinear encoder (mirrored dims) and nonlinear decoder, plain data;
//! - `LNA_ext` — trainable bias-free linear encoder, nonlinear decoder, time-extended data;
//! - `LNA`  — trainable bias-free linear encoder, nonlinear decoder, plain data;
//! - `LNA_ext_fix` — frozen first-unit-vector encoder (reads the time row), nonlinear decoder;
//! - `NLA`  — nonlinear encoder, bias-free identity-activation decoder stack,
//!   whose image is a genuine linear subspace of dimension ≤ r.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{
    self, init_params, Activation, MlpSpec, ModelParams,
};
use crate::scalar::{format_g17, Scalar};

/// Autoencoder configuration kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AeKind {
    Nna,
    LnaExt,
    Lna,
    LnaExtFix,
    Nla,
}

impl AeKind {
    pub const ALL: [AeKind; 5] = [
        AeKind::Nna,
        AeKind::LnaExt,
        AeKind::Lna,
        AeKind::LnaExtFix,
        AeKind::Nla,
    ];

    /// Whether the kind consumes time-extended (1+n)-dimensional data.
    pub fn is_extended(self) -> bool {
        matches!(self, AeKind::LnaExt | AeKind::LnaExtFix)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AeKind::Nna => "NNA",
            AeKind::LnaExt => "LNA_ext",
            AeKind::Lna => "LNA",
            AeKind::LnaExtFix => "LNA_ext_fix",
            AeKind::Nla => "NLA",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        AeKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == text)
            .ok_or_else(|| Error::InvalidInput(format!("unknown autoencoder kind {text:?}")))
    }
}

impl fmt::Display for AeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Decoder layer schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    A,
    B,
    C,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::A, Scenario::B, Scenario::C];

    /// Interior layer widths between the latent dimension and the ambient one.
    pub fn hidden_dims(self) -> &'static [usize] {
        match self {
            Scenario::A => &[3, 9, 27, 81, 243],
            Scenario::B => &[4, 16, 64, 256],
            Scenario::C => &[5, 25, 125],
        }
    }

    /// Full decoder schedule `r, hidden..., ambient`.
    pub fn decoder_dims(self, latent: usize, ambient: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_dims().len() + 2);
        dims.push(latent);
        dims.extend_from_slice(self.hidden_dims());
        dims.push(ambient);
        dims
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::A => "A",
            Scenario::B => "B",
            Scenario::C => "C",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Scenario::ALL
            .iter()
            .copied()
            .find(|s| s.as_str() == text)
            .ok_or_else(|| Error::InvalidInput(format!("unknown scenario {text:?}")))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Kind, schedule, latent dimension, and state dimension of one autoencoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AutoencoderConfig {
    pub kind: AeKind,
    pub scenario: Scenario,
    pub r: usize,
    pub state_dim: usize,
}

impl AutoencoderConfig {
    pub fn new(kind: AeKind, scenario: Scenario, r: usize, state_dim: usize) -> Self {
        AutoencoderConfig {
            kind,
            scenario,
            r,
            state_dim,
        }
    }

    /// Ambient dimension N: the state dimension, plus the time row for
    /// extended kinds.
    pub fn ambient_dim(&self) -> usize {
        self.state_dim + usize::from(self.kind.is_extended())
    }
}

/// Encoder branch.
#[derive(Debug, Clone)]
pub enum Encoder<T> {
    /// Mirrored nonlinear network.
    Mlp {
        spec: MlpSpec<T>,
        params: ModelParams<T>,
    },
    /// Trainable bias-free map, an `r × N` matrix.
    Linear { weights: Matrix<T> },
    /// Frozen selector of the leading `r` components (the first unit
    /// vectors); zero trainable parameters.
    FixedSelector,
}

/// One assembled autoencoder.
#[derive(Debug, Clone)]
pub struct Autoencoder<T> {
    pub config: AutoencoderConfig,
    pub encoder: Encoder<T>,
    pub decoder_spec: MlpSpec<T>,
    pub decoder_params: ModelParams<T>,
}

/// Builds an autoencoder with freshly initialized trainable parts. The
/// encoder draws first, then the decoder, so replays are reproducible.
pub fn build<T: Scalar>(config: &AutoencoderConfig, rng: &mut ChaCha8Rng) -> Result<Autoencoder<T>> {
    if config.r == 0 || config.state_dim == 0 {
        return Err(Error::InvalidInput(
            "latent and state dimensions must be positive".into(),
        ));
    }
    let ambient = config.ambient_dim();
    let decoder_dims = config.scenario.decoder_dims(config.r, ambient);

    let encoder = match config.kind {
        AeKind::Nna | AeKind::Nla => {
            let mut dims = decoder_dims.clone();
            dims.reverse();
            let spec = MlpSpec::with_activation(dims, Activation::leaky_default(), true)?;
            let params = init_params(&spec, rng);
            Encoder::Mlp { spec, params }
        }
        AeKind::LnaExt | AeKind::Lna => {
            use rand::Rng;
            let bound = 1.0 / (ambient as f64).sqrt();
            let weights =
                Matrix::from_fn(config.r, ambient, |_, _| T::of(rng.gen_range(-bound..bound)));
            Encoder::Linear { weights }
        }
        AeKind::LnaExtFix => Encoder::FixedSelector,
    };

    // The NLA decoder is a bias-free identity-activation stack: a product of
    // matrices, hence a linear map of rank ≤ r.
    let decoder_spec = match config.kind {
        AeKind::Nla => MlpSpec::with_activation(decoder_dims, Activation::Identity, false)?,
        _ => MlpSpec::with_activation(decoder_dims, Activation::leaky_default(), true)?,
    };
    let decoder_params = init_params(&decoder_spec, rng);

    Ok(Autoencoder {
        config: *config,
        encoder,
        decoder_spec,
        decoder_params,
    })
}

impl<T: Scalar> Autoencoder<T> {
    /// Applies the encoder to a batch of ambient columns.
    pub fn encode_batch(&self, input: &Matrix<T>) -> Result<Matrix<T>> {
        if input.rows() != self.config.ambient_dim() {
            return Err(Error::InvalidInput(format!(
                "encode expects {} rows, got {}",
                self.config.ambient_dim(),
                input.rows()
            )));
        }
        match &self.encoder {
            Encoder::Mlp { spec, params } => {
                let (out, _) = nn::forward_batch(spec, params, input)?;
                Ok(out)
            }
            Encoder::Linear { weights } => Ok(weights.matmul(input)),
            Encoder::FixedSelector => Ok(Matrix::from_fn(self.config.r, input.cols(), |i, j| {
                input.get(i, j)
            })),
        }
    }

    /// Applies the decoder to a batch of latent columns.
    pub fn decode_batch(&self, latent: &Matrix<T>) -> Result<Matrix<T>> {
        if latent.rows() != self.config.r {
            return Err(Error::InvalidInput(format!(
                "decode expects {} rows, got {}",
                self.config.r,
                latent.rows()
            )));
        }
        let (out, _) = nn::forward_batch(&self.decoder_spec, &self.decoder_params, latent)?;
        Ok(out)
    }

    pub fn reconstruct_batch(&self, input: &Matrix<T>) -> Result<Matrix<T>> {
        self.decode_batch(&self.encode_batch(input)?)
    }

    pub fn encode(&self, input: &[T]) -> Result<Vec<T>> {
        let col = Matrix::from_vec(input.len(), 1, input.to_vec())?;
        Ok(self.encode_batch(&col)?.col(0))
    }

    pub fn decode(&self, latent: &[T]) -> Result<Vec<T>> {
        let col = Matrix::from_vec(latent.len(), 1, latent.to_vec())?;
        Ok(self.decode_batch(&col)?.col(0))
    }

    pub fn reconstruct(&self, input: &[T]) -> Result<Vec<T>> {
        self.decode(&self.encode(input)?)
    }

    /// Number of trainable scalars; the frozen selector contributes none.
    pub fn param_count(&self) -> usize {
        let encoder = match &self.encoder {
            Encoder::Mlp { params, .. } => params.len(),
            Encoder::Linear { weights } => weights.rows() * weights.cols(),
            Encoder::FixedSelector => 0,
        };
        encoder + self.decoder_params.len()
    }

    /// `|encode(decode(u)) − u|` for scalar latents (r = 1).
    pub fn point_projection_deviation(&self, latent_samples: &[T]) -> Result<Vec<T>> {
        if self.config.r != 1 {
            return Err(Error::InvalidInput(
                "point projection diagnostic expects r = 1".into(),
            ));
        }
        latent_samples
            .iter()
            .map(|&u| {
                let round_trip = self.encode(&self.decode(&[u])?)?;
                Ok((round_trip[0] - u).abs())
            })
            .collect()
    }

    /// Equidistant latent samples spanning the encoded range of `data`
    /// (ambient columns); the diagnostic grid for the deviation curve.
    pub fn latent_grid(&self, data: &Matrix<T>, points: usize) -> Result<Vec<T>> {
        if self.config.r != 1 {
            return Err(Error::InvalidInput("latent grid expects r = 1".into()));
        }
        if points < 2 || data.cols() == 0 {
            return Err(Error::InvalidInput(
                "latent grid needs ≥2 points and non-empty data".into(),
            ));
        }
        let encoded = self.encode_batch(data)?;
        let mut lo = encoded.get(0, 0);
        let mut hi = lo;
        for j in 0..encoded.cols() {
            let u = encoded.get(0, j);
            lo = lo.min(u);
            hi = hi.max(u);
        }
        let denom = T::of((points - 1) as f64);
        Ok((0..points)
            .map(|i| lo + (hi - lo) * (T::of(i as f64) / denom))
            .collect())
    }
}

/// Drops the time row of an extended ambient vector; identity for plain kinds.
pub fn state_part<T>(ambient: &[T], kind: AeKind) -> &[T] {
    if kind.is_extended() {
        &ambient[1..]
    } else {
        ambient
    }
}

/// Row-matrix version of [`state_part`].
pub fn state_rows<T: Scalar>(ambient: &Matrix<T>, kind: AeKind) -> Matrix<T> {
    if kind.is_extended() {
        Matrix::from_fn(ambient.rows() - 1, ambient.cols(), |i, j| {
            ambient.get(i + 1, j)
        })
    } else {
        ambient.clone()
    }
}

/// Saves an autoencoder: a one-line header `AE <kind> <scenario> <r> <N>`
/// followed by the encoder branch (a `LINv1` block for linear encoders,
/// nothing for the frozen selector) and the decoder parameter block.
pub fn write_autoencoder<T: Scalar, W: Write>(ae: &Autoencoder<T>, out: &mut W) -> std::io::Result<()> {
    writeln!(
        out,
        "AE {} {} {} {}",
        ae.config.kind,
        ae.config.scenario,
        ae.config.r,
        ae.config.ambient_dim()
    )?;
    match &ae.encoder {
        Encoder::Mlp { params, .. } => nn::write_params(params, out)?,
        Encoder::Linear { weights } => {
            writeln!(out, "LINv1 {} {}", weights.rows(), weights.cols())?;
            for &x in weights.data() {
                writeln!(out, "{}", format_g17(x))?;
            }
        }
        Encoder::FixedSelector => {}
    }
    nn::write_params(&ae.decoder_params, out)
}

/// Loads an autoencoder written by [`write_autoencoder`]. Architecture and
/// activations are reconstructed from the header; parameter shapes are
/// validated against the scenario schedule.
pub fn read_autoencoder<T: Scalar, R: BufRead>(input: &mut R) -> Result<Autoencoder<T>> {
    let mut header = String::new();
    input
        .read_line(&mut header)
        .map_err(|e| Error::Format(format!("read failure: {e}")))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "AE" {
        return Err(Error::Format(format!("bad autoencoder header: {header:?}")));
    }
    let kind = AeKind::parse(fields[1])?;
    let scenario = Scenario::parse(fields[2])?;
    let r: usize = fields[3]
        .parse()
        .map_err(|_| Error::Format("bad latent dimension".into()))?;
    let ambient: usize = fields[4]
        .parse()
        .map_err(|_| Error::Format("bad ambient dimension".into()))?;
    let state_dim = ambient - usize::from(kind.is_extended());
    let config = AutoencoderConfig::new(kind, scenario, r, state_dim);
    let decoder_dims = scenario.decoder_dims(r, ambient);

    let encoder = match kind {
        AeKind::Nna | AeKind::Nla => {
            let mut dims = decoder_dims.clone();
            dims.reverse();
            let spec = MlpSpec::with_activation(dims, Activation::leaky_default(), true)?;
            let params = nn::read_params(input, true)?;
            if params.shapes().len() != spec.num_layers() {
                return Err(Error::Format("encoder block shape mismatch".into()));
            }
            Encoder::Mlp { spec, params }
        }
        AeKind::LnaExt | AeKind::Lna => {
            let mut line = String::new();
            input
                .read_line(&mut line)
                .map_err(|e| Error::Format(format!("read failure: {e}")))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 || fields[0] != "LINv1" {
                return Err(Error::Format(format!("bad linear encoder block: {line:?}")));
            }
            let rows: usize = fields[1]
                .parse()
                .map_err(|_| Error::Format("bad LINv1 rows".into()))?;
            let cols: usize = fields[2]
                .parse()
                .map_err(|_| Error::Format("bad LINv1 cols".into()))?;
            if rows != r || cols != ambient {
                return Err(Error::Format("linear encoder shape mismatch".into()));
            }
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                let mut value_line = String::new();
                input
                    .read_line(&mut value_line)
                    .map_err(|e| Error::Format(format!("read failure: {e}")))?;
                let value = crate::scalar::parse_g17(&value_line)
                    .ok_or_else(|| Error::Format(format!("bad value {value_line:?}")))?;
                data.push(value);
            }
            Encoder::Linear {
                weights: Matrix::from_vec(rows, cols, data)?,
            }
        }
        AeKind::LnaExtFix => Encoder::FixedSelector,
    };

    let decoder_spec = match kind {
        AeKind::Nla => MlpSpec::with_activation(decoder_dims.clone(), Activation::Identity, false)?,
        _ => MlpSpec::with_activation(decoder_dims.clone(), Activation::leaky_default(), true)?,
    };
    let decoder_params = nn::read_params(input, decoder_spec.use_bias)?;
    let expected: Vec<(usize, usize)> = decoder_dims.windows(2).map(|w| (w[1], w[0])).collect();
    if decoder_params.shapes() != expected.as_slice() {
        return Err(Error::Format("decoder block shape mismatch".into()));
    }
    Ok(Autoencoder {
        config,
        encoder,
        decoder_spec,
        decoder_params,
    })
}

/// Convenience wrapper writing to a file path.
pub fn save_autoencoder<T: Scalar>(ae: &Autoencoder<T>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_autoencoder(ae, &mut out).map_err(|e| Error::io(path, e))
}

/// Convenience wrapper reading from a file path.
pub fn load_autoencoder<T: Scalar>(path: &Path) -> Result<Autoencoder<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_autoencoder(&mut BufReader::new(file))
}
