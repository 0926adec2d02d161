//! The `.tdfe` binary feature format: magic `TDFE`, little-endian u32 row
//! and column counts, then rows·cols little-endian 32-bit floats, row-major,
//! one matrix per file. Round-trips are bit-exact.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numcore::Tensor;

pub const TDFE_MAGIC: [u8; 4] = *b"TDFE";

/// Per-video feature matrix (frames/clips × feature dim), stored at the
/// 32-bit precision of the on-disk format.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    rows: usize,
    cols: usize,
    values: Vec<f32>,
}

impl FeatureFile {
    pub fn new(rows: usize, cols: usize, values: Vec<f32>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows.checked_mul(cols) != Some(values.len()) {
            return Err(Error::Shape {
                op: "FeatureFile::new",
                lhs: vec![rows, cols],
                rhs: vec![values.len()],
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract(
                "feature values must be finite".to_string(),
            ));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Widens to the double-precision tensor the encoder consumes.
    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_vec(
            vec![self.rows, self.cols],
            self.values.iter().map(|&v| v as f64).collect(),
        )
        .expect("dimensions validated at construction")
    }
}

pub fn encode_features(f: &FeatureFile) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * f.values.len());
    out.extend_from_slice(&TDFE_MAGIC);
    out.extend_from_slice(&(f.rows as u32).to_le_bytes());
    out.extend_from_slice(&(f.cols as u32).to_le_bytes());
    for v in &f.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Strict decoder: bad magic, truncation, trailing bytes, zero extents and
/// non-finite values are all format errors naming the offending byte offset.
pub fn decode_features(bytes: &[u8]) -> Result<FeatureFile> {
    if bytes.len() < 4 || bytes[..4] != TDFE_MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!(
                "bad magic: expected {:?}, found {:?}",
                TDFE_MAGIC,
                &bytes[..bytes.len().min(4)]
            ),
        });
    }
    if bytes.len() < 12 {
        return Err(Error::Format {
            offset: bytes.len(),
            message: "truncated header: need 12 bytes".to_string(),
        });
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::Format {
            offset: 4,
            message: format!("zero extent: {rows}x{cols}"),
        });
    }
    let count = (rows as u64) * (cols as u64);
    let expected = 12u64 + 4 * count;
    if (bytes.len() as u64) != expected {
        return Err(Error::Format {
            offset: bytes.len().min(expected as usize),
            message: format!(
                "expected {expected} bytes for a {rows}x{cols} matrix, found {}",
                bytes.len()
            ),
        });
    }
    let mut values = Vec::with_capacity(count as usize);
    for (i, chunk) in bytes[12..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::Format {
                offset: 12 + 4 * i,
                message: "non-finite feature value".to_string(),
            });
        }
        values.push(v);
    }
    Ok(FeatureFile { rows, cols, values })
}

pub fn write_feature_file(path: &Path, f: &FeatureFile) -> Result<()> {
    std::fs::write(path, encode_features(f)).map_err(|e| Error::io(path, e))
}

pub fn read_feature_file(path: &Path) -> Result<FeatureFile> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_features(&bytes)
}

/// Loads features from a `.tdfe` file or a directory of them. Video ids are
/// file stems; the map is ordered for deterministic iteration.
pub fn load_features(path: &Path) -> Result<BTreeMap<String, FeatureFile>> {
    let mut out = BTreeMap::new();
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.is_file() {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        out.insert(stem, read_feature_file(path)?);
        return Ok(out);
    }
    for entry in std::fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let entry = entry.map_err(|e| Error::io(path, e))?;
        let p = entry.path();
        if p.extension().map(|e| e == "tdfe").unwrap_or(false) {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            out.insert(stem, read_feature_file(&p)?);
        }
    }
    if out.is_empty() {
        return Err(Error::Config(format!(
            "no .tdfe feature files under {}",
            path.display()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::Rng;
    use sha2::{Digest, Sha256};

    #[test]
    fn round_trip_is_bitwise_exact() {
        let f = FeatureFile::new(2, 3, vec![1.5, -2.25, 0.0, 3.75, 1e-20, -0.1]).unwrap();
        let bytes = encode_features(&f);
        let back = decode_features(&bytes).unwrap();
        assert_eq!(f, back);
        for (a, b) in f.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn truncated_file_is_a_format_error_not_a_crash() {
        let f = FeatureFile::new(2, 3, vec![0.5; 6]).unwrap();
        let bytes = encode_features(&f);
        for cut in [0, 3, 11, 12, 20, bytes.len() - 1] {
            let err = decode_features(&bytes[..cut]).unwrap_err();
            assert!(matches!(err, Error::Format { .. }), "cut={cut}: {err}");
        }
    }

    #[test]
    fn bad_magic_and_trailing_bytes_are_rejected() {
        let f = FeatureFile::new(1, 1, vec![1.0]).unwrap();
        let mut bytes = encode_features(&f);
        bytes.push(0);
        assert!(matches!(
            decode_features(&bytes),
            Err(Error::Format { .. })
        ));
        let mut bad = encode_features(&f);
        bad[0] = b'X';
        let err = decode_features(&bad).unwrap_err();
        assert!(err.to_string().contains("byte 0"), "{err}");
    }

    #[test]
    fn declared_size_overflow_is_handled() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&TDFE_MAGIC);
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(
            decode_features(&bytes),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn random_matrix_round_trips_under_checksum() {
        let mut rng = Rng::new(404);
        let values: Vec<f32> = (0..25 * 128)
            .map(|_| rng.uniform(-3.0, 3.0) as f32)
            .collect();
        let f = FeatureFile::new(25, 128, values).unwrap();
        let bytes = encode_features(&f);
        let digest_before: [u8; 32] = Sha256::digest(&bytes).into();
        let back = decode_features(&bytes).unwrap();
        let digest_after: [u8; 32] = Sha256::digest(encode_features(&back)).into();
        assert_eq!(digest_before, digest_after);
    }

    #[test]
    fn file_io_round_trip_and_directory_load() {
        let dir = tempfile::tempdir().unwrap();
        let a = FeatureFile::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = FeatureFile::new(3, 1, vec![-1.0, 0.0, 1.0]).unwrap();
        write_feature_file(&dir.path().join("vid_a.tdfe"), &a).unwrap();
        write_feature_file(&dir.path().join("vid_b.tdfe"), &b).unwrap();
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let map = load_features(dir.path()).unwrap();
        assert_eq!(map.len(), 2);
        assert_eq!(map["vid_a"], a);
        assert_eq!(map["vid_b"], b);
    }

    #[test]
    fn non_finite_values_are_format_errors() {
        let f = FeatureFile::new(1, 2, vec![1.0, 2.0]).unwrap();
        let mut bytes = encode_features(&f);
        bytes[12..16].copy_from_slice(&f32::NAN.to_le_bytes());
        let err = decode_features(&bytes).unwrap_err();
        assert!(err.to_string().contains("byte 12"), "{err}");
    }
}
