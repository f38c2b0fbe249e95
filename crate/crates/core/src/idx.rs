//! Reading and writing the IDX binary format used by the MNIST files.

use std::path::Path;

use crate::error::{Error, Result};
use crate::loss::DataPoint;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

pub const DEFAULT_POSITIVE: [u8; 2] = [9, 8];
pub const DEFAULT_NEGATIVE: [u8; 2] = [1, 4];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub rows: u32,
    pub cols: u32,
    /// Row-major pixels, `rows · cols` bytes per image.
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn len(&self) -> usize {
        self.pixels.len().checked_div(self.image_size()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn image_size(&self) -> usize {
        self.rows as usize * self.cols as usize
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let size = self.image_size();
        &self.pixels[i * size..(i + 1) * size]
    }
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format { offset: offset as u64, message: message.into() }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let word = bytes.get(offset..offset + 4).ok_or_else(|| format_err(offset, "file ends inside the header"))?;
    Ok(u32::from_be_bytes(word.try_into().expect("4-byte slice")))
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let magic = read_u32(bytes, 0)?;
    if magic != expected {
        return Err(format_err(0, format!("magic number {magic} does not match {expected}")));
    }
    Ok(())
}

fn check_payload(bytes: &[u8], header: usize, expected: usize) -> Result<()> {
    let actual = bytes.len() - header;
    if actual < expected {
        return Err(format_err(bytes.len(), format!("truncated: expected {expected} payload bytes, found {actual}")));
    }
    if actual > expected {
        return Err(format_err(header + expected, format!("{} trailing bytes", actual - expected)));
    }
    Ok(())
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)?;
    let cols = read_u32(bytes, 12)?;
    let expected = count
        .checked_mul(rows as usize)
        .and_then(|n| n.checked_mul(cols as usize))
        .ok_or_else(|| format_err(4, "image dimensions overflow"))?;
    check_payload(bytes, 16, expected)?;
    Ok(IdxImages { rows, cols, pixels: bytes[16..].to_vec() })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    check_payload(bytes, 8, count)?;
    Ok(bytes[8..].to_vec())
}

pub fn encode_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&images.rows.to_be_bytes());
    out.extend_from_slice(&images.cols.to_be_bytes());
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Keeps the listed digits, labels `positive` as +1 and `negative` as −1, and
/// turns pixels into unit-norm feature vectors. The group id is the digit.
pub fn to_dataset(
    images: &IdxImages,
    labels: &[u8],
    positive: &[u8],
    negative: &[u8],
    limit: Option<usize>,
) -> Result<Vec<DataPoint>> {
    if images.len() != labels.len() {
        // the label count lives at byte 4 of the label file
        return Err(format_err(4, format!("{} images but {} labels", images.len(), labels.len())));
    }
    if let Some(d) = positive.iter().find(|d| negative.contains(d)) {
        return Err(Error::input(format!("digit {d} is listed as both positive and negative")));
    }
    let mut out = Vec::new();
    for (i, &digit) in labels.iter().enumerate() {
        if limit.is_some_and(|n| out.len() >= n) {
            break;
        }
        let label = if positive.contains(&digit) {
            1
        } else if negative.contains(&digit) {
            -1
        } else {
            continue;
        };
        let mut features: Vec<f64> = images.image(i).iter().map(|&p| f64::from(p) / 255.0).collect();
        let norm = crate::space::l2_norm(&features);
        if norm > 0.0 {
            features.iter_mut().for_each(|x| *x /= norm);
        }
        out.push(DataPoint::labeled(features, label, u32::from(digit))?);
    }
    Ok(out)
}

pub fn load_idx(
    images_path: &Path,
    labels_path: &Path,
    positive: &[u8],
    negative: &[u8],
    limit: Option<usize>,
) -> Result<Vec<DataPoint>> {
    let images = parse_images(&std::fs::read(images_path)?)?;
    let labels = parse_labels(&std::fs::read(labels_path)?)?;
    to_dataset(&images, &labels, positive, negative, limit)
}
