//! Binary checkpoint format, all integers and reals little-endian:
//!
//! ```text
//! "BCN" version-digit
//! u64 |V|, d, w, H, K
//! f64 embeddings          |V| × d
//! f64 combiner + bias     ((2w+1)d + 1) × H   (bias is the last row)
//! f64 output + bias       (H + 1) × K         (bias is the last row)
//! u64 transition rows     0 in softmax mode, else K+2
//! f64 transitions         (K+2) × (K+2)
//! u64 |V|, then per entry u32 byte length + UTF-8
//! u64 K, then per tag     u32 byte length + UTF-8
//! u32 byte length + config echo (key=value lines)
//! ```

use std::io::Write as _;
use std::path::Path;

use ndarray::{concatenate, s, Array2, Axis};

use super::crf::TransitionParams;
use super::encoder::{EncoderParams, WindowEncoder, COMBINER, COMBINER_BIAS, EMBEDDINGS, OUTPUT, OUTPUT_BIAS};
use super::train::{ModelCheckpoint, TrainConfig};
use super::vocab::Vocab;
use super::ModelError;
use crate::tagscheme::{JointTag, TagSet};

const MAGIC: &[u8; 3] = b"BCN";
pub const FORMAT_VERSION: u8 = 1;

fn put_u64(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u64).to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn put_matrix(out: &mut Vec<u8>, m: &Array2<f64>) {
    for v in m.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn to_bytes(model: &ModelCheckpoint) -> Vec<u8> {
    let p = model.encoder.params();
    let cfg = model.encoder.config();
    let k = model.tagset.len();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(b'0' + FORMAT_VERSION);
    for v in [model.vocab.len(), cfg.embedding_dim, cfg.window, cfg.hidden_dim, k] {
        put_u64(&mut out, v);
    }
    put_matrix(&mut out, &p[EMBEDDINGS]);
    put_matrix(&mut out, &concatenate![Axis(0), p[COMBINER], p[COMBINER_BIAS]]);
    put_matrix(&mut out, &concatenate![Axis(0), p[OUTPUT], p[OUTPUT_BIAS]]);
    match &model.transitions {
        Some(a) => {
            put_u64(&mut out, k + 2);
            put_matrix(&mut out, a.scores());
        }
        None => put_u64(&mut out, 0),
    }
    put_u64(&mut out, model.vocab.len());
    for e in model.vocab.entries() {
        put_str(&mut out, e);
    }
    put_u64(&mut out, k);
    for t in model.tagset.tags() {
        put_str(&mut out, &t.to_string());
    }
    put_str(&mut out, &model.config.echo());
    out
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

fn corrupt(msg: impl Into<String>) -> ModelError {
    ModelError::CorruptCheckpoint(msg.into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ModelError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| corrupt(format!("truncated while reading {what}")))?;
        let bytes = &self.data[self.pos..end];
        self.pos = end;
        Ok(bytes)
    }

    fn u64(&mut self, what: &str) -> Result<usize, ModelError> {
        let b = self.take(8, what)?;
        let v = u64::from_le_bytes(b.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| corrupt(format!("{what} = {v} is too large")))
    }

    fn u32(&mut self, what: &str) -> Result<usize, ModelError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }

    fn string(&mut self, what: &str) -> Result<String, ModelError> {
        let n = self.u32(what)?;
        let b = self.take(n, what)?;
        String::from_utf8(b.to_vec()).map_err(|_| corrupt(format!("{what} is not UTF-8")))
    }

    fn matrix(&mut self, rows: usize, cols: usize, what: &str) -> Result<Array2<f64>, ModelError> {
        let count = rows
            .checked_mul(cols)
            .and_then(|c| c.checked_mul(8))
            .ok_or_else(|| corrupt(format!("{what} dimensions overflow")))?;
        let bytes = self.take(count, what)?;
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Array2::from_shape_vec((rows, cols), values).expect("length checked"))
    }
}

pub fn from_bytes(data: &[u8]) -> Result<ModelCheckpoint, ModelError> {
    if data.len() < 4 || &data[..3] != MAGIC || !data[3].is_ascii_digit() {
        return Err(corrupt("missing BCN header"));
    }
    let version = data[3] - b'0';
    if version > FORMAT_VERSION {
        return Err(ModelError::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    if version != FORMAT_VERSION {
        return Err(corrupt(format!("unknown format version {version}")));
    }
    let mut r = Reader { data, pos: 4 };
    let v = r.u64("vocabulary size")?;
    let d = r.u64("embedding dimension")?;
    let w = r.u64("window")?;
    let h = r.u64("hidden dimension")?;
    let k = r.u64("tag count")?;
    let input = w
        .checked_mul(2)
        .and_then(|x| x.checked_add(1))
        .and_then(|x| x.checked_mul(d))
        .ok_or_else(|| corrupt("window dimensions overflow"))?;

    let embeddings = r.matrix(v, d, "embeddings")?;
    let combiner = r.matrix(input + 1, h, "combiner")?;
    let output = r.matrix(h + 1, k, "output layer")?;
    let trans_rows = r.u64("transition rows")?;
    let trans = match trans_rows {
        0 => None,
        n if n == k + 2 => Some(r.matrix(n, n, "transitions")?),
        n => return Err(corrupt(format!("{n} transition rows for {k} tags"))),
    };

    let nv = r.u64("vocabulary count")?;
    if nv != v {
        return Err(corrupt(format!("{nv} vocabulary entries, header says {v}")));
    }
    let entries = (0..nv)
        .map(|_| r.string("vocabulary entry"))
        .collect::<Result<Vec<_>, _>>()?;
    let vocab = Vocab::from_entries(entries).map_err(corrupt)?;

    let nk = r.u64("tag count")?;
    if nk != k {
        return Err(corrupt(format!("{nk} tags, header says {k}")));
    }
    let tags = (0..nk)
        .map(|_| {
            r.string("tag")?
                .parse::<JointTag>()
                .map_err(|e| corrupt(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let tagset = TagSet::from_tags(tags).map_err(|e| corrupt(e.to_string()))?;
    let config = TrainConfig::from_echo(&r.string("config")?).map_err(|e| corrupt(e.to_string()))?;
    if r.pos != data.len() {
        return Err(corrupt(format!("{} trailing bytes", data.len() - r.pos)));
    }

    let params: EncoderParams = [
        embeddings,
        combiner.slice(s![..input, ..]).to_owned(),
        combiner.slice(s![input.., ..]).to_owned(),
        output.slice(s![..h, ..]).to_owned(),
        output.slice(s![h.., ..]).to_owned(),
    ];
    if params.iter().any(|p| p.iter().any(|x| !x.is_finite())) {
        return Err(corrupt("non-finite encoder weight"));
    }
    let encoder = WindowEncoder::from_params(params, w).map_err(|e| corrupt(e.to_string()))?;
    let transitions = trans
        .map(|m| {
            TransitionParams::for_tagset(&tagset)
                .with_scores(m)
                .map_err(|e| corrupt(e.to_string()))
        })
        .transpose()?;
    Ok(ModelCheckpoint {
        vocab,
        encoder,
        transitions,
        tagset,
        config,
    })
}

/// Writes the checkpoint through a temporary file in the target directory,
/// so a failed write never leaves a partial file behind.
pub fn save_checkpoint(model: &ModelCheckpoint, path: &Path) -> Result<(), ModelError> {
    let io = |source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(&to_bytes(model)).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelCheckpoint, ModelError> {
    let data = std::fs::read(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_bytes(&data)
}
