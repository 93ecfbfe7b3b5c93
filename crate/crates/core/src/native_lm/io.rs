//! Parameter file: `"REMM"`, a version, the config block, then every tensor
//! as `name | shape | f32 little-endian data`.

use super::config::ModelConfig;
use super::params::ModelParams;
use super::ModelError;
use crate::bio_io::write_atomic;
use std::path::Path;

pub const MODEL_MAGIC: [u8; 4] = *b"REMM";
pub const MODEL_VERSION: u32 = 1;

impl ModelParams {
    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let mut out = Vec::with_capacity(64 + self.num_parameters() * 4);
        out.extend_from_slice(&MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        for v in [
            c.head_dim,
            c.heads,
            c.layers,
            c.vocab,
            c.struct_vocab,
            c.rel_window,
            c.ffn_dim,
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&c.mask_rate.to_le_bytes());
        out.extend_from_slice(&c.init_std.to_le_bytes());
        out.extend_from_slice(&c.seed.to_le_bytes());
        let tensors = self.tensors();
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, t) in tensors {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&2u32.to_le_bytes());
            out.extend_from_slice(&(t.nrows() as u32).to_le_bytes());
            out.extend_from_slice(&(t.ncols() as u32).to_le_bytes());
            for v in t.iter() {
                out.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4)?.try_into().expect("four bytes");
        if magic != MODEL_MAGIC {
            return Err(ModelError::BadMagic(magic));
        }
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(ModelError::UnsupportedVersion(version));
        }
        let mut dims = [0usize; 7];
        for d in dims.iter_mut() {
            *d = r.u32()? as usize;
        }
        let config = ModelConfig {
            head_dim: dims[0],
            heads: dims[1],
            layers: dims[2],
            vocab: dims[3],
            struct_vocab: dims[4],
            rel_window: dims[5],
            ffn_dim: dims[6],
            mask_rate: f64::from_le_bytes(r.take(8)?.try_into().expect("eight bytes")),
            init_std: f64::from_le_bytes(r.take(8)?.try_into().expect("eight bytes")),
            seed: u64::from_le_bytes(r.take(8)?.try_into().expect("eight bytes")),
        };
        config.validate()?;
        let mut params = ModelParams::zeros(&config);
        let count = r.u32()? as usize;
        let mut tensors = params.tensors_mut();
        if count != tensors.len() {
            return Err(ModelError::Format(format!(
                "file has {count} tensors, config implies {}",
                tensors.len()
            )));
        }
        for (expected_name, t) in tensors.iter_mut() {
            let name_len = u16::from_le_bytes(r.take(2)?.try_into().expect("two bytes")) as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| ModelError::Format("tensor name is not utf-8".into()))?;
            if name != expected_name {
                return Err(ModelError::Format(format!(
                    "expected tensor '{expected_name}', found '{name}'"
                )));
            }
            let ndim = r.u32()? as usize;
            let shape: Vec<usize> = (0..ndim)
                .map(|_| r.u32().map(|v| v as usize))
                .collect::<Result<_, _>>()?;
            if shape != [t.nrows(), t.ncols()] {
                return Err(ModelError::Format(format!(
                    "tensor '{name}' has shape {shape:?}, expected [{}, {}]",
                    t.nrows(),
                    t.ncols()
                )));
            }
            for v in t.iter_mut() {
                *v = f32::from_le_bytes(r.take(4)?.try_into().expect("four bytes")) as f64;
            }
        }
        drop(tensors);
        if r.pos != bytes.len() {
            return Err(ModelError::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        if !params.is_finite() {
            return Err(ModelError::Format("non-finite parameter".into()));
        }
        Ok(params)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(ModelError::Format(format!(
                "truncated: needed {end} bytes, have {}",
                self.bytes.len()
            )));
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("four bytes")))
    }
}

pub fn save_model(path: &Path, params: &ModelParams) -> Result<(), ModelError> {
    write_atomic(path, &params.to_bytes()).map_err(|e| ModelError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    })
}

pub fn load_model(path: &Path) -> Result<ModelParams, ModelError> {
    let bytes = std::fs::read(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ModelParams::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ModelParams {
        ModelParams::init(&ModelConfig {
            head_dim: 2,
            heads: 2,
            layers: 1,
            struct_vocab: 3,
            rel_window: 2,
            ffn_dim: 5,
            seed: 42,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn round_trip_is_stable() {
        let p = small();
        let bytes = p.to_bytes();
        assert_eq!(&bytes[..4], b"REMM");
        let back = ModelParams::from_bytes(&bytes).unwrap();
        assert_eq!(back.config, p.config);
        assert_eq!(back.to_bytes(), bytes);
        for ((_, a), (_, b)) in p.tensors().iter().zip(back.tensors()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.remm");
        let p = small();
        save_model(&path, &p).unwrap();
        assert_eq!(load_model(&path).unwrap().to_bytes(), p.to_bytes());
        assert!(matches!(
            load_model(&dir.path().join("nope")),
            Err(ModelError::Io { .. })
        ));
    }

    #[test]
    fn rejects_corruption() {
        let bytes = small().to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(ModelParams::from_bytes(&bad), Err(ModelError::BadMagic(_))));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(
            ModelParams::from_bytes(&bad),
            Err(ModelError::UnsupportedVersion(9))
        ));
        assert!(matches!(
            ModelParams::from_bytes(&bytes[..bytes.len() - 1]),
            Err(ModelError::Format(_))
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(ModelParams::from_bytes(&long), Err(ModelError::Format(_))));
    }
}
