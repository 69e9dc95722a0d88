//! Binary model format. All integers and floats little-endian:
//!
//! ```text
//! magic        4 bytes   "HDFF"
//! version      u16       1
//! hd_dim       u32
//! master_seed  u64
//! pooling      u8        0 = max, 1 = avg
//! num_layers   u32
//!   layer_id u32, channels u32, count u64, mean f32 x channels
//! num_classes  u32
//!   class_id u32, count u64, descriptor f32 x hd_dim
//! has_ensemble u8        0 or 1
//!   num_members u32, binding_seed u64 x num_members,
//!   then num_classes entries of: class_id u32, count u64, descriptor f32 x hd_dim
//! ```
//!
//! Projection matrices are not stored; they are regenerated from
//! `master_seed` and the layer table.

use std::fs;
use std::path::Path;

use crate::descriptor::{
    ClassDescriptor, EnsembleDescriptors, FittedModel, LayerSpec, LayerStats, PoolingMode,
};
use crate::error::{Error, Result};
use crate::hdc::HdVector;

pub const MODEL_MAGIC: &[u8; 4] = b"HDFF";
pub const MODEL_VERSION: u16 = 1;

pub fn encode_model(model: &FittedModel) -> Result<Vec<u8>> {
    model.validate()?;
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    put_u32(&mut out, model.hd_dim)?;
    out.extend_from_slice(&model.master_seed.to_le_bytes());
    out.push(match model.pooling {
        PoolingMode::Max => 0,
        PoolingMode::Avg => 1,
    });
    put_u32(&mut out, model.layers.len())?;
    for (layer, stats) in model.layers.iter().zip(&model.stats) {
        out.extend_from_slice(&layer.layer_id.to_le_bytes());
        put_u32(&mut out, layer.channels)?;
        out.extend_from_slice(&stats.count.to_le_bytes());
        put_f32s(&mut out, &stats.mean);
    }
    put_classes(&mut out, &model.classes)?;
    match &model.ensemble {
        None => out.push(0),
        Some(ens) => {
            out.push(1);
            put_u32(&mut out, ens.binding_seeds.len())?;
            for s in &ens.binding_seeds {
                out.extend_from_slice(&s.to_le_bytes());
            }
            if ens.classes.len() != model.classes.len() {
                return Err(Error::Fit(
                    "ensemble table size differs from class table".into(),
                ));
            }
            for c in &ens.classes {
                put_class(&mut out, c);
            }
        }
    }
    Ok(out)
}

pub fn decode_model(bytes: &[u8], path: &Path) -> Result<FittedModel> {
    let mut r = Reader {
        bytes,
        pos: 0,
        path,
    };
    let magic = r.take(4)?;
    if magic != MODEL_MAGIC {
        return Err(Error::format(path, Some(0), "expected magic \"HDFF\""));
    }
    let version = r.u16()?;
    if version != MODEL_VERSION {
        return Err(Error::format(
            path,
            Some(4),
            format!("unsupported model version {version}, expected {MODEL_VERSION}"),
        ));
    }
    let hd_dim = r.u32()? as usize;
    if hd_dim == 0 {
        return Err(r.error("hd_dim must be positive"));
    }
    let master_seed = r.u64()?;
    let pooling = match r.u8()? {
        0 => PoolingMode::Max,
        1 => PoolingMode::Avg,
        other => return Err(r.error(format!("unknown pooling code {other}"))),
    };
    let num_layers = r.u32()? as usize;
    let mut layers = Vec::new();
    let mut stats = Vec::new();
    for _ in 0..num_layers {
        let layer_id = r.u32()?;
        let channels = r.u32()? as usize;
        let count = r.u64()?;
        let mean = r.f32s(channels)?;
        layers.push(LayerSpec { layer_id, channels });
        stats.push(LayerStats { mean, count });
    }
    let num_classes = r.u32()? as usize;
    let classes = (0..num_classes)
        .map(|_| r.class(hd_dim))
        .collect::<Result<Vec<_>>>()?;
    let ensemble = match r.u8()? {
        0 => None,
        1 => {
            let members = r.u32()? as usize;
            r.ensure(members.saturating_mul(8))?;
            let binding_seeds = (0..members).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
            let classes = (0..num_classes)
                .map(|_| r.class(hd_dim))
                .collect::<Result<Vec<_>>>()?;
            Some(EnsembleDescriptors {
                binding_seeds,
                classes,
            })
        }
        other => return Err(r.error(format!("bad ensemble flag {other}"))),
    };
    if r.pos != bytes.len() {
        return Err(r.error(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let model = FittedModel {
        hd_dim,
        master_seed,
        pooling,
        layers,
        stats,
        classes,
        ensemble,
    };
    model
        .validate()
        .map_err(|e| Error::format(path, None, format!("inconsistent model: {e}")))?;
    Ok(model)
}

pub fn save_model(model: &FittedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_model(model)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FittedModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes, path)
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::usage(format!("{v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_f32s(out: &mut Vec<u8>, values: &[f32]) {
    out.reserve(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn put_class(out: &mut Vec<u8>, c: &ClassDescriptor) {
    out.extend_from_slice(&c.class_id.to_le_bytes());
    out.extend_from_slice(&c.count.to_le_bytes());
    put_f32s(out, c.descriptor.values());
}

fn put_classes(out: &mut Vec<u8>, classes: &[ClassDescriptor]) -> Result<()> {
    put_u32(out, classes.len())?;
    for c in classes {
        put_class(out, c);
    }
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::format(self.path, Some(self.pos as u64), msg)
    }

    /// Fails before any allocation if fewer than `n` bytes remain.
    fn ensure(&self, n: usize) -> Result<()> {
        if self.bytes.len() - self.pos < n {
            return Err(self.error(format!(
                "truncated: need {n} more bytes, {} remain",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        self.ensure(n)?;
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(
            n.checked_mul(4)
                .ok_or_else(|| self.error("length overflow"))?,
        )?;
        Ok(crate::io::npy::decode_f32(bytes))
    }

    fn class(&mut self, hd_dim: usize) -> Result<ClassDescriptor> {
        let class_id = self.u32()?;
        let count = self.u64()?;
        let at = self.pos;
        let values = self.f32s(hd_dim)?;
        let descriptor = HdVector::new(values)
            .map_err(|e| Error::format(self.path, Some(at as u64), e.to_string()))?;
        Ok(ClassDescriptor {
            class_id,
            count,
            descriptor,
        })
    }
}
