//! Binary PGM (P5) reader and writer.
//!
//! Samples wider than 8 bits (maxval > 255) are stored as two big-endian
//! bytes. The decoder accepts `#` comments between header tokens and rejects
//! anything after the raster.

use thiserror::Error;

/// Largest accepted width or height.
pub const MAX_DIMENSION: usize = 16_384;
/// Largest accepted pixel count.
pub const MAX_PIXELS: usize = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PgmError {
    #[error("not a binary PGM (expected magic P5)")]
    BadMagic,
    #[error("unexpected end of data")]
    UnexpectedEof,
    #[error("malformed header: {0}")]
    BadHeader(&'static str),
    #[error("image {width}x{height} exceeds decoder limits")]
    TooLarge { width: usize, height: usize },
    #[error("maxval {0} outside 1..=65535")]
    BadMaxval(u32),
    #[error("sample {value} at pixel {index} exceeds maxval {maxval}")]
    SampleOutOfRange { index: usize, value: u16, maxval: u16 },
    #[error("{0} trailing bytes after raster")]
    TrailingData(usize),
    #[error("pixel buffer holds {actual} samples, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmImage {
    width: usize,
    height: usize,
    maxval: u16,
    samples: Vec<u16>,
}

impl PgmImage {
    pub fn new(width: usize, height: usize, maxval: u16, samples: Vec<u16>) -> Result<Self, PgmError> {
        check_dims(width, height)?;
        if maxval == 0 {
            return Err(PgmError::BadMaxval(0));
        }
        if samples.len() != width * height {
            return Err(PgmError::LengthMismatch {
                expected: width * height,
                actual: samples.len(),
            });
        }
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, v)| **v > maxval) {
            return Err(PgmError::SampleOutOfRange { index, value, maxval });
        }
        Ok(PgmImage {
            width,
            height,
            maxval,
            samples,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn maxval(&self) -> u16 {
        self.maxval
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u16> {
        self.samples
    }

    fn bytes_per_sample(&self) -> usize {
        if self.maxval > 255 {
            2
        } else {
            1
        }
    }
}

fn check_dims(width: usize, height: usize) -> Result<(), PgmError> {
    if width == 0 || height == 0 {
        return Err(PgmError::BadHeader("zero dimension"));
    }
    if width > MAX_DIMENSION || height > MAX_DIMENSION || width * height > MAX_PIXELS {
        return Err(PgmError::TooLarge { width, height });
    }
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.data.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<u32, PgmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        let mut value: u32 = 0;
        while let Some(&b) = self.data.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u32::from(b - b'0')))
                .ok_or(PgmError::BadHeader("number overflows"))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(if self.pos >= self.data.len() {
                PgmError::UnexpectedEof
            } else {
                PgmError::BadHeader("expected a decimal number")
            });
        }
        Ok(value)
    }
}

/// Parses a complete P5 file.
pub fn decode(data: &[u8]) -> Result<PgmImage, PgmError> {
    if data.len() < 2 {
        return Err(PgmError::UnexpectedEof);
    }
    if &data[..2] != b"P5" {
        return Err(PgmError::BadMagic);
    }
    let mut cur = Cursor { data, pos: 2 };
    match data.get(2) {
        Some(b) if b.is_ascii_whitespace() || *b == b'#' => {}
        Some(_) => return Err(PgmError::BadMagic),
        None => return Err(PgmError::UnexpectedEof),
    }
    let width = cur.number()? as usize;
    let height = cur.number()? as usize;
    let maxval = cur.number()?;
    check_dims(width, height)?;
    if maxval == 0 || maxval > 65_535 {
        return Err(PgmError::BadMaxval(maxval));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match data.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        Some(_) => return Err(PgmError::BadHeader("missing separator before raster")),
        None => return Err(PgmError::UnexpectedEof),
    }
    let maxval = maxval as u16;
    let bps = if maxval > 255 { 2 } else { 1 };
    let n = width * height;
    let raster = &data[cur.pos..];
    let need = n * bps;
    if raster.len() < need {
        return Err(PgmError::UnexpectedEof);
    }
    if raster.len() > need {
        return Err(PgmError::TrailingData(raster.len() - need));
    }
    let samples: Vec<u16> = if bps == 2 {
        raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        raster.iter().map(|b| u16::from(*b)).collect()
    };
    PgmImage::new(width, height, maxval, samples)
}

pub fn encode(img: &PgmImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n{}\n", img.width, img.height, img.maxval);
    let mut out = Vec::with_capacity(header.len() + img.samples.len() * img.bytes_per_sample());
    out.extend_from_slice(header.as_bytes());
    if img.bytes_per_sample() == 2 {
        for s in &img.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    } else {
        out.extend(img.samples.iter().map(|s| *s as u8));
    }
    out
}
