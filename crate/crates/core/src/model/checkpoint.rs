//! Binary checkpoint persistence.
//!
//! Layout (all integers little-endian): magic `RKDS`, format version (u32),
//! arch id (u32 length + UTF-8 bytes), margin epsilon (f64), then for each
//! parameter tensor in model order: rank (u32), dims (u32 each), values as
//! f32. The arch id determines the tensor list, so no count field is
//! needed; a reader knows exactly what to expect and rejects anything else.

use std::fs;
use std::path::Path;

use super::{arch_layers, ModelError, ScorerModel};

const MAGIC: &[u8; 4] = b"RKDS";
const VERSION: u32 = 1;

/// Writes the model to `path`, weights narrowed to f32.
///
/// Only registered architectures can be persisted — the format stores the
/// arch id, not the layer list.
pub fn save_checkpoint(model: &ScorerModel, path: &Path) -> Result<(), ModelError> {
    match arch_layers(model.arch_id()) {
        Some(layers) if layers.as_slice() == model.layers() => {}
        _ => {
            return Err(ModelError::InvalidArch(format!(
                "checkpoints need a registered architecture, `{}` is not one",
                model.arch_id()
            )))
        }
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let id = model.arch_id().as_bytes();
    buf.extend_from_slice(&u32::try_from(id.len()).expect("short arch id").to_le_bytes());
    buf.extend_from_slice(id);
    buf.extend_from_slice(&model.epsilon().to_le_bytes());
    for t in model.params() {
        buf.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in t.data() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Reads a checkpoint written by [`save_checkpoint`]. Any structural
/// problem fails the whole load; a partially filled model is never
/// returned.
pub fn load_checkpoint(path: &Path) -> Result<ScorerModel, ModelError> {
    let buf = fs::read(path)?;
    let mut cur = Cursor { buf: &buf, pos: 0 };
    let magic = cur.take(4)?;
    if magic != MAGIC {
        return Err(ModelError::VersionMismatch(format!(
            "bad magic bytes {magic:02x?}"
        )));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(ModelError::VersionMismatch(format!(
            "unsupported format version {version}"
        )));
    }
    let id_len = cur.u32()? as usize;
    let id = std::str::from_utf8(cur.take(id_len)?)
        .map_err(|_| ModelError::CorruptCheckpoint("arch id is not UTF-8".into()))?
        .to_string();
    let epsilon = f64::from_le_bytes(cur.take(8)?.try_into().expect("8 bytes"));
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(ModelError::CorruptCheckpoint(format!(
            "stored epsilon {epsilon} is not a positive finite value"
        )));
    }
    let layers = arch_layers(&id).ok_or_else(|| ModelError::UnknownArch(id.clone()))?;
    let mut model = ScorerModel::with_layers(&id, layers, epsilon, 0)?;
    for (t, tensor) in model.params_mut().iter_mut().enumerate() {
        let rank = cur.u32()? as usize;
        if rank != tensor.shape().len() {
            return Err(ModelError::ShapeMismatch(format!(
                "tensor {t}: rank {rank}, expected {}",
                tensor.shape().len()
            )));
        }
        for (d, &expected) in tensor.shape().to_vec().iter().enumerate() {
            let dim = cur.u32()? as usize;
            if dim != expected {
                return Err(ModelError::ShapeMismatch(format!(
                    "tensor {t} dim {d}: {dim}, expected {expected}"
                )));
            }
        }
        for v in tensor.data_mut() {
            *v = f64::from(f32::from_le_bytes(cur.take(4)?.try_into().expect("4 bytes")));
        }
    }
    if cur.pos != buf.len() {
        return Err(ModelError::CorruptCheckpoint(format!(
            "{} trailing bytes",
            buf.len() - cur.pos
        )));
    }
    Ok(model)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        if self.pos + n > self.buf.len() {
            return Err(ModelError::CorruptCheckpoint(
                "unexpected end of file".into(),
            ));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}
