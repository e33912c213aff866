//! `SSRD` binary embedding files.
//!
//! Layout, all integers little-endian:
//!
//! | field          | type            |
//! |----------------|-----------------|
//! | magic          | `b"SSRD"`       |
//! | version        | u16 (= 1)       |
//! | N, d, M        | u32 each        |
//! | flags          | u8: bit0 true labels, bit1 noisy mask |
//! | features       | N*d f32, row-major |
//! | observed       | N u32           |
//! | true labels    | N i32, -1 = open set (if bit0) |
//! | noisy mask     | N u8 (if bit1)  |
//!
//! Out-of-distribution pools use the same layout with `M = 0` and all
//! observed labels 0.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::dataset::{GroundTruth, NoisyDataset, TrueLabel};
use crate::error::{Result, SsrError};

pub const MAGIC: &[u8; 4] = b"SSRD";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 * 3 + 1;
const FLAG_TRUE_LABELS: u8 = 1;
const FLAG_NOISY_MASK: u8 = 2;

/// Raw file contents before interpretation as a dataset or pool.
#[derive(Debug, Clone, PartialEq)]
pub struct SsrdFile {
    pub features: Array2<f32>,
    pub observed_labels: Vec<u32>,
    pub num_classes: u32,
    pub true_labels: Option<Vec<i32>>,
    pub noisy_mask: Option<Vec<u8>>,
}

impl SsrdFile {
    pub fn encode(&self) -> Vec<u8> {
        let (n, d) = self.features.dim();
        let mut flags = 0;
        if self.true_labels.is_some() {
            flags |= FLAG_TRUE_LABELS;
        }
        if self.noisy_mask.is_some() {
            flags |= FLAG_NOISY_MASK;
        }
        let mut buf = Vec::with_capacity(HEADER_LEN + n * d * 4 + n * 9);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        for v in [n as u32, d as u32, self.num_classes] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.push(flags);
        for v in self.features.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.observed_labels {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(t) = &self.true_labels {
            for v in t {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        if let Some(mask) = &self.noisy_mask {
            buf.extend_from_slice(mask);
        }
        buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(SsrError::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(SsrError::TruncatedFile {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(SsrError::UnsupportedVersion(version));
        }
        let (n, d, m) = (u32_at(6) as usize, u32_at(10) as usize, u32_at(14));
        let flags = bytes[18];
        let has_true = flags & FLAG_TRUE_LABELS != 0;
        let has_mask = flags & FLAG_NOISY_MASK != 0;

        let expected = HEADER_LEN
            + n * d * 4
            + n * 4
            + if has_true { n * 4 } else { 0 }
            + if has_mask { n } else { 0 };
        if bytes.len() < expected {
            return Err(SsrError::TruncatedFile {
                expected,
                found: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(SsrError::ShapeMismatch(format!(
                "{} trailing bytes after payload",
                bytes.len() - expected
            )));
        }

        let mut off = HEADER_LEN;
        let mut take4 = |count: usize| {
            let chunk = &bytes[off..off + count * 4];
            off += count * 4;
            chunk
                .chunks_exact(4)
                .map(|c| <[u8; 4]>::try_from(c).unwrap())
                .collect::<Vec<_>>()
        };
        let feats: Vec<f32> = take4(n * d).into_iter().map(f32::from_le_bytes).collect();
        let observed: Vec<u32> = take4(n).into_iter().map(u32::from_le_bytes).collect();
        let true_labels = has_true.then(|| take4(n).into_iter().map(i32::from_le_bytes).collect());
        let noisy_mask = has_mask.then(|| bytes[expected - n..expected].to_vec());
        Ok(Self {
            features: Array2::from_shape_vec((n, d), feats).expect("sized above"),
            observed_labels: observed,
            num_classes: m,
            true_labels,
            noisy_mask,
        })
    }

    pub fn from_dataset(dataset: &NoisyDataset) -> Self {
        let gt = dataset.ground_truth.as_ref();
        Self {
            features: dataset.features.mapv(|v| v as f32),
            observed_labels: dataset.observed_labels.iter().map(|&l| l as u32).collect(),
            num_classes: dataset.num_classes as u32,
            true_labels: gt.map(|g| {
                g.true_labels
                    .iter()
                    .map(|t| match t {
                        TrueLabel::Class(c) => *c as i32,
                        TrueLabel::OpenSet => -1,
                    })
                    .collect()
            }),
            noisy_mask: gt.map(|g| g.is_noisy.iter().map(|&b| b as u8).collect()),
        }
    }

    pub fn from_pool(features: &Array2<f64>) -> Self {
        Self {
            features: features.mapv(|v| v as f32),
            observed_labels: vec![0; features.nrows()],
            num_classes: 0,
            true_labels: None,
            noisy_mask: None,
        }
    }

    /// Interprets the file as a dataset and validates it. The stored noisy
    /// mask, when present, must agree with the labels.
    pub fn into_dataset(self) -> Result<NoisyDataset> {
        let features = self.features.mapv(f64::from);
        let observed: Vec<usize> = self.observed_labels.iter().map(|&l| l as usize).collect();
        let ground_truth = match self.true_labels {
            Some(t) => {
                let truth = t
                    .iter()
                    .enumerate()
                    .map(|(index, &v)| match v {
                        -1 => Ok(TrueLabel::OpenSet),
                        v if v >= 0 => Ok(TrueLabel::Class(v as usize)),
                        v => Err(SsrError::LabelOutOfRange {
                            index,
                            label: v.unsigned_abs() as usize,
                            num_classes: self.num_classes as usize,
                        }),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let gt = GroundTruth::from_true_labels(truth, &observed);
                if let Some(mask) = &self.noisy_mask {
                    if let Some(i) = (0..mask.len()).find(|&i| (mask[i] != 0) != gt.is_noisy[i]) {
                        return Err(SsrError::ShapeMismatch(format!(
                            "stored noisy flag at index {i} disagrees with labels"
                        )));
                    }
                }
                Some(gt)
            }
            None => None,
        };
        let ds = NoisyDataset {
            features,
            observed_labels: observed,
            num_classes: self.num_classes as usize,
            ground_truth,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn into_pool(self) -> Array2<f64> {
        self.features.mapv(f64::from)
    }
}

pub fn write_embeddings(path: impl AsRef<Path>, dataset: &NoisyDataset) -> Result<()> {
    write_bytes(path, &SsrdFile::from_dataset(dataset).encode())
}

pub fn write_pool(path: impl AsRef<Path>, pool: &Array2<f64>) -> Result<()> {
    write_bytes(path, &SsrdFile::from_pool(pool).encode())
}

fn write_bytes(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

/// Reads and validates a dataset file. Without a true-label section the
/// dataset carries no ground truth and evaluation metrics are unavailable.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<NoisyDataset> {
    SsrdFile::decode(&std::fs::read(path)?)?.into_dataset()
}

pub fn load_pool(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    Ok(SsrdFile::decode(&std::fs::read(path)?)?.into_pool())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample() -> NoisyDataset {
        let observed = vec![0, 2, 1];
        let truth = vec![TrueLabel::Class(0), TrueLabel::OpenSet, TrueLabel::Class(2)];
        NoisyDataset {
            features: array![[0.5, -1.25], [3.0, 0.0], [1e-3, 7.0]].mapv(|v: f64| v as f32 as f64),
            ground_truth: Some(GroundTruth::from_true_labels(truth, &observed)),
            observed_labels: observed,
            num_classes: 3,
        }
    }

    #[test]
    fn header_layout() {
        let bytes = SsrdFile::from_dataset(&sample()).encode();
        assert_eq!(&bytes[..4], b"SSRD");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..10], &3u32.to_le_bytes());
        assert_eq!(&bytes[10..14], &2u32.to_le_bytes());
        assert_eq!(&bytes[14..18], &3u32.to_le_bytes());
        assert_eq!(bytes[18], 3);
        assert_eq!(bytes.len(), 19 + 3 * 2 * 4 + 3 * 4 + 3 * 4 + 3);
        // open-set sentinel
        let true_off = 19 + 24 + 12;
        assert_eq!(&bytes[true_off + 4..true_off + 8], &(-1i32).to_le_bytes());
    }

    #[test]
    fn round_trip() {
        let ds = sample();
        let back = SsrdFile::decode(&SsrdFile::from_dataset(&ds).encode())
            .unwrap()
            .into_dataset()
            .unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = SsrdFile::from_dataset(&sample()).encode();
        bytes[0] = b'X';
        assert_eq!(SsrdFile::decode(&bytes), Err(SsrError::BadMagic));
    }

    #[test]
    fn truncated_payload() {
        let bytes = SsrdFile::from_dataset(&sample()).encode();
        assert!(matches!(
            SsrdFile::decode(&bytes[..bytes.len() - 5]),
            Err(SsrError::TruncatedFile { .. })
        ));
        // header claims far more rows than the payload holds
        let mut big = bytes.clone();
        big[6..10].copy_from_slice(&1000u32.to_le_bytes());
        assert!(matches!(
            SsrdFile::decode(&big),
            Err(SsrError::TruncatedFile { .. })
        ));
    }

    #[test]
    fn missing_truth_section_drops_ground_truth() {
        let mut file = SsrdFile::from_dataset(&sample());
        file.true_labels = None;
        file.noisy_mask = None;
        let ds = SsrdFile::decode(&file.encode()).unwrap().into_dataset().unwrap();
        assert!(ds.ground_truth.is_none());
    }

    #[test]
    fn pool_round_trip() {
        let pool = array![[1.0, 2.0], [3.0, 4.5]];
        let file = SsrdFile::decode(&SsrdFile::from_pool(&pool).encode()).unwrap();
        assert_eq!(file.num_classes, 0);
        assert_eq!(file.into_pool(), pool);
    }
}
