use super::StructError;
use crate::bio_io::write_atomic;
use std::path::Path;

pub const CODEBOOK_MAGIC: &[u8; 4] = b"REMC";
pub const CODEBOOK_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8;

/// K centroids in descriptor space, stored as `f32` so that a save/load
/// round trip is bit-exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    k: usize,
    dim: usize,
    centroids: Vec<f32>,
    seed: u64,
}

impl Codebook {
    pub fn new(k: usize, dim: usize, centroids: Vec<f32>, seed: u64) -> Result<Self, StructError> {
        if k == 0 {
            return Err(StructError::InvalidCodebook("k must be at least 1".into()));
        }
        if dim == 0 {
            return Err(StructError::InvalidCodebook("dim must be at least 1".into()));
        }
        if centroids.len() != k * dim {
            return Err(StructError::InvalidCodebook(format!(
                "{} centroid values for k={k}, dim={dim}",
                centroids.len()
            )));
        }
        if centroids.iter().any(|c| !c.is_finite()) {
            return Err(StructError::InvalidCodebook("non-finite centroid".into()));
        }
        Ok(Self {
            k,
            dim,
            centroids,
            seed,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Row-major `k x dim` centroid values.
    pub fn centroids(&self) -> &[f32] {
        &self.centroids
    }

    pub fn centroid(&self, c: usize) -> &[f32] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    pub(crate) fn centroids_f64(&self) -> Vec<f64> {
        self.centroids.iter().map(|&x| x as f64).collect()
    }

    /// `"REMC" | version u32 | k u32 | dim u32 | seed u64 | f32 centroids`,
    /// all little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.centroids.len() * 4);
        out.extend_from_slice(CODEBOOK_MAGIC);
        out.extend_from_slice(&CODEBOOK_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.k as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for c in &self.centroids {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StructError> {
        if bytes.len() < HEADER_LEN {
            return Err(StructError::Truncated {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
        if &magic != CODEBOOK_MAGIC {
            return Err(StructError::BadMagic(magic));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != CODEBOOK_VERSION {
            return Err(StructError::UnsupportedVersion(version));
        }
        let k = u32_at(8) as usize;
        let dim = u32_at(12) as usize;
        let seed = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
        if k == 0 || dim == 0 {
            return Err(StructError::InvalidCodebook(format!("k={k}, dim={dim}")));
        }
        let expected = HEADER_LEN + k * dim * 4;
        if bytes.len() != expected {
            return Err(StructError::Truncated {
                expected,
                found: bytes.len(),
            });
        }
        let centroids = bytes[HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(k, dim, centroids, seed)
    }
}

pub fn save_codebook(path: &Path, codebook: &Codebook) -> Result<(), StructError> {
    write_atomic(path, &codebook.to_bytes()).map_err(|e| StructError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    })
}

pub fn load_codebook(path: &Path) -> Result<Codebook, StructError> {
    let bytes = std::fs::read(path).map_err(|e| StructError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Codebook::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Codebook {
        Codebook::new(3, 2, vec![0.1, -2.5, f32::MIN_POSITIVE, 7.0, 1e-30, 3.25], 99).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cb.bin");
        let cb = sample();
        save_codebook(&path, &cb).unwrap();
        let back = load_codebook(&path).unwrap();
        assert_eq!(back, cb);
        let bits = |c: &Codebook| c.centroids().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&cb));
        assert_eq!(back.seed(), 99);
    }

    #[test]
    fn header_layout() {
        let bytes = sample().to_bytes();
        assert_eq!(&bytes[0..4], b"REMC");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 24 + 6 * 4);
    }

    #[test]
    fn corrupted_magic() {
        let mut bytes = sample().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(Codebook::from_bytes(&bytes), Err(StructError::BadMagic(_))));
    }

    #[test]
    fn zero_k_rejected() {
        let mut bytes = sample().to_bytes();
        bytes[8..12].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(
            Codebook::from_bytes(&bytes),
            Err(StructError::InvalidCodebook(_))
        ));
    }

    #[test]
    fn truncated_and_trailing() {
        let bytes = sample().to_bytes();
        assert!(matches!(
            Codebook::from_bytes(&bytes[..bytes.len() - 1]),
            Err(StructError::Truncated { .. })
        ));
        assert!(matches!(
            Codebook::from_bytes(&bytes[..10]),
            Err(StructError::Truncated { .. })
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(Codebook::from_bytes(&long).is_err());
    }
}
