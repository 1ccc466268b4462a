//! IDX dataset ingestion and PGM image output.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

/// Flattened 28×28 images with pixels in `[0, 1]`, optionally labelled.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub images: Matrix,
    pub labels: Option<Vec<u8>>,
}

impl ImageSet {
    pub fn new(images: Matrix, labels: Option<Vec<u8>>) -> Result<Self> {
        if images.cols() != IMAGE_PIXELS {
            return Err(Error::DimensionMismatch {
                expected: IMAGE_PIXELS,
                actual: images.cols(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != images.rows() {
                return Err(Error::DimensionMismatch {
                    expected: images.rows(),
                    actual: l.len(),
                });
            }
        }
        Ok(Self { images, labels })
    }

    pub fn len(&self) -> usize {
        self.images.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.images.rows() == 0
    }

    /// Attaches labels read separately, checking the counts agree.
    pub fn with_labels(self, labels: Vec<u8>) -> Result<Self> {
        Self::new(self.images, Some(labels))
    }

    /// Keeps the first `n` images (all of them if fewer).
    pub fn take(&self, n: usize) -> Self {
        let n = n.min(self.len());
        let rows: Vec<&[f64]> = self.images.row_iter().take(n).collect();
        Self {
            images: Matrix::from_rows(&rows, IMAGE_PIXELS).expect("rows have image width"),
            labels: self.labels.as_ref().map(|l| l[..n].to_vec()),
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn u32_be(&mut self, what: &str) -> Result<u32> {
        let end = self.offset + 4;
        let chunk = self.bytes.get(self.offset..end).ok_or_else(|| Error::Format {
            offset: self.offset,
            message: format!("file truncated while reading {what}"),
        })?;
        let v = u32::from_be_bytes(chunk.try_into().expect("4-byte slice"));
        self.offset = end;
        Ok(v)
    }

    fn body(&self, len: usize, what: &str) -> Result<&'a [u8]> {
        self.bytes
            .get(self.offset..self.offset + len)
            .ok_or_else(|| Error::Format {
                offset: self.bytes.len(),
                message: format!("file truncated: {what} needs {len} bytes from offset {}", self.offset),
            })
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let magic = self.u32_be("magic number")?;
        if magic != expected {
            return Err(Error::Format {
                offset: 0,
                message: format!("magic {magic:#010x}, expected {expected:#010x}"),
            });
        }
        Ok(())
    }
}

/// Parses an uncompressed IDX image file of 28×28 images, scaling bytes by 1/255.
pub fn parse_idx_images(bytes: &[u8]) -> Result<ImageSet> {
    let mut r = Reader { bytes, offset: 0 };
    r.magic(IMAGE_MAGIC)?;
    let n = r.u32_be("image count")? as usize;
    for what in ["row count", "column count"] {
        let offset = r.offset;
        let dim = r.u32_be(what)? as usize;
        if dim != IMAGE_SIDE {
            return Err(Error::Format {
                offset,
                message: format!("{what} is {dim}, expected {IMAGE_SIDE}"),
            });
        }
    }
    let body = r.body(n * IMAGE_PIXELS, "image data")?;
    let data = body.iter().map(|&b| b as f64 / 255.0).collect();
    ImageSet::new(Matrix::from_vec(n, IMAGE_PIXELS, data)?, None)
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut r = Reader { bytes, offset: 0 };
    r.magic(LABEL_MAGIC)?;
    let n = r.u32_be("label count")? as usize;
    let body = r.body(n, "label data")?;
    if let Some(i) = body.iter().position(|&l| l > 9) {
        return Err(Error::Format {
            offset: r.offset + i,
            message: format!("label {} outside 0-9", body[i]),
        });
    }
    Ok(body.to_vec())
}

pub fn read_idx_images(path: impl AsRef<Path>) -> Result<ImageSet> {
    parse_idx_images(&fs::read(path)?)
}

pub fn read_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    parse_idx_labels(&fs::read(path)?)
}

/// Reads an image file and its label file, checking that the counts match.
pub fn read_labelled(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<ImageSet> {
    read_idx_images(images)?.with_labels(read_idx_labels(labels)?)
}

/// Serializes images as IDX, quantizing pixels like [`write_pgm`].
pub fn encode_idx_images(images: &Matrix) -> Result<Vec<u8>> {
    if images.cols() != IMAGE_PIXELS {
        return Err(Error::DimensionMismatch {
            expected: IMAGE_PIXELS,
            actual: images.cols(),
        });
    }
    let mut out = Vec::with_capacity(16 + images.as_slice().len());
    for v in [IMAGE_MAGIC, images.rows() as u32, IMAGE_SIDE as u32, IMAGE_SIDE as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for &p in images.as_slice() {
        out.push(quantize(p)?);
    }
    Ok(out)
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Subset with the given label, preserving order.
pub fn filter_class(set: &ImageSet, class_id: u8) -> Result<ImageSet> {
    let labels = set
        .labels
        .as_ref()
        .ok_or_else(|| Error::Config("class filtering needs labels".into()))?;
    if class_id > 9 {
        return Err(Error::Config(format!("class {class_id} outside 0-9")));
    }
    let keep: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class_id).collect();
    let rows: Vec<&[f64]> = keep.iter().map(|&i| set.images.row(i)).collect();
    ImageSet::new(
        Matrix::from_rows(&rows, IMAGE_PIXELS)?,
        Some(vec![class_id; keep.len()]),
    )
}

/// Pixel in `[0, 1]` to byte, rounding half up.
fn quantize(p: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Encoding(format!("pixel {p} outside [0, 1]")));
    }
    Ok((p * 255.0 + 0.5).floor() as u8)
}

/// Binary PGM (`P5`, 28×28, maxval 255).
pub fn encode_pgm(image: &[f64]) -> Result<Vec<u8>> {
    if image.len() != IMAGE_PIXELS {
        return Err(Error::DimensionMismatch {
            expected: IMAGE_PIXELS,
            actual: image.len(),
        });
    }
    let mut out = format!("P5\n{IMAGE_SIDE} {IMAGE_SIDE}\n255\n").into_bytes();
    for &p in image {
        out.push(quantize(p)?);
    }
    Ok(out)
}

pub fn write_pgm(image: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_pgm(image)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

/// Parses a 28×28 binary PGM with maxval 255, as written by [`write_pgm`].
pub fn parse_pgm(bytes: &[u8]) -> Result<Vec<f64>> {
    // header: magic, width, height, maxval separated by whitespace, then one whitespace byte
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if bytes.get(pos) == Some(&b'#') {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format {
                offset: pos,
                message: "truncated PGM header".into(),
            });
        }
        fields.push((start, String::from_utf8_lossy(&bytes[start..pos]).into_owned()));
    }
    pos += 1;
    let expect = [("P5", "magic"), ("28", "width"), ("28", "height"), ("255", "maxval")];
    for ((offset, got), (want, what)) in fields.iter().zip(expect) {
        if got != want {
            return Err(Error::Format {
                offset: *offset,
                message: format!("PGM {what} is {got:?}, expected {want}"),
            });
        }
    }
    let body = bytes.get(pos..pos + IMAGE_PIXELS).ok_or_else(|| Error::Format {
        offset: bytes.len(),
        message: "PGM pixel data truncated".into(),
    })?;
    Ok(body.iter().map(|&b| b as f64 / 255.0).collect())
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    parse_pgm(&fs::read(path)?)
}
