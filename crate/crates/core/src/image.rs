//! 8-bit raster images with binary PPM/PGM I/O.
//!
//! Images are row-major, top-left origin, 1 (gray) or 3 (RGB) channels.
//! File I/O uses the binary portable pixmap formats P6/P5 so outputs are
//! bit-exact across platforms without an image dependency.

use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("invalid image geometry: {0}")]
    InvalidGeometry(String),
    #[error("unsupported pixmap magic {0:?} (expected P5 or P6)")]
    BadMagic(String),
    #[error("malformed pixmap header: {0}")]
    BadHeader(String),
    #[error("pixel payload truncated: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

/// Row-major 8-bit image, 1 or 3 channels, top-left origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    channels: u32,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: u32, height: u32, channels: u32) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::InvalidGeometry(format!(
                "zero dimension {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(ImageError::InvalidGeometry(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        let len = width as usize * height as usize * channels as usize;
        Ok(Self {
            width,
            height,
            channels,
            data: vec![0; len],
        })
    }

    /// Color image filled with a constant RGB value.
    pub fn filled_rgb(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, ImageError> {
        let mut img = Self::new(width, height, 3)?;
        for px in img.data.chunks_exact_mut(3) {
            px.copy_from_slice(&rgb);
        }
        Ok(img)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    /// Pixel value; panics when out of bounds (callers clip first).
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> &[u8] {
        let o = self.offset(x, y);
        &self.data[o..o + self.channels as usize]
    }

    #[inline]
    pub fn put(&mut self, x: u32, y: u32, px: &[u8]) {
        let o = self.offset(x, y);
        let c = self.channels as usize;
        self.data[o..o + c].copy_from_slice(&px[..c]);
    }

    /// Splits the pixel rows for parallel rendering.
    pub fn rows_mut(&mut self) -> impl rayon::iter::IndexedParallelIterator<Item = (usize, &mut [u8])> {
        use rayon::prelude::*;
        let stride = self.width as usize * self.channels as usize;
        self.data.par_chunks_mut(stride).enumerate()
    }

    /// Bilinear sample at a continuous pixel coordinate with edge clamping.
    ///
    /// The coordinate convention places the center of pixel (i, j) at
    /// (i + 0.5, j + 0.5); samples outside the image clamp to the border.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> [u8; 3] {
        let c = self.channels as usize;
        // Shift to the lattice of pixel centers.
        let fx = x - 0.5;
        let fy = y - 0.5;
        let x0 = fx.floor();
        let y0 = fy.floor();
        let tx = fx - x0;
        let ty = fy - y0;
        let clamp_x = |v: f64| (v.max(0.0) as u32).min(self.width - 1);
        let clamp_y = |v: f64| (v.max(0.0) as u32).min(self.height - 1);
        let x0c = clamp_x(x0);
        let x1c = clamp_x(x0 + 1.0);
        let y0c = clamp_y(y0);
        let y1c = clamp_y(y0 + 1.0);

        let mut out = [0u8; 3];
        for ch in 0..c {
            let p00 = self.get(x0c, y0c)[ch] as f64;
            let p10 = self.get(x1c, y0c)[ch] as f64;
            let p01 = self.get(x0c, y1c)[ch] as f64;
            let p11 = self.get(x1c, y1c)[ch] as f64;
            let v = p00 * (1.0 - tx) * (1.0 - ty)
                + p10 * tx * (1.0 - ty)
                + p01 * (1.0 - tx) * ty
                + p11 * tx * ty;
            out[ch] = v.round().clamp(0.0, 255.0) as u8;
        }
        if c == 1 {
            out[1] = out[0];
            out[2] = out[0];
        }
        out
    }

    /// Encodes as binary P6 (3 channels) or P5 (1 channel).
    pub fn encode_pnm(&self) -> Vec<u8> {
        let magic = if self.channels == 3 { "P6" } else { "P5" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn decode_pnm(bytes: &[u8]) -> Result<Self, ImageError> {
        let mut cursor = 0usize;
        let magic = read_token(bytes, &mut cursor)
            .ok_or_else(|| ImageError::BadHeader("missing magic".into()))?;
        let channels = match magic.as_str() {
            "P6" => 3,
            "P5" => 1,
            other => return Err(ImageError::BadMagic(other.to_string())),
        };
        let width: u32 = parse_header_int(bytes, &mut cursor, "width")?;
        let height: u32 = parse_header_int(bytes, &mut cursor, "height")?;
        let maxval: u32 = parse_header_int(bytes, &mut cursor, "maxval")?;
        if maxval != 255 {
            return Err(ImageError::BadHeader(format!(
                "only maxval 255 supported, got {maxval}"
            )));
        }
        // Exactly one whitespace byte separates the header from the payload.
        cursor += 1;
        let expected = width as usize * height as usize * channels as usize;
        let got = bytes.len().saturating_sub(cursor);
        if got < expected {
            return Err(ImageError::Truncated { expected, got });
        }
        let mut img = Image::new(width, height, channels as u32)?;
        img.data.copy_from_slice(&bytes[cursor..cursor + expected]);
        Ok(img)
    }

    pub fn read_pnm(path: &Path) -> Result<Self, ImageError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::decode_pnm(&bytes)
    }

    pub fn write_pnm(&self, path: &Path) -> Result<(), ImageError> {
        let bytes = self.encode_pnm();
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(&bytes)?;
        tmp.persist(path).map_err(|e| ImageError::Io(e.error))?;
        Ok(())
    }
}

/// Reads one whitespace-delimited header token, skipping `#` comments.
fn read_token(bytes: &[u8], cursor: &mut usize) -> Option<String> {
    let mut i = *cursor;
    loop {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        break;
    }
    let start = i;
    while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
        i += 1;
    }
    if start == i {
        return None;
    }
    // Leave the cursor on the whitespace byte after the token so the
    // header/payload separator can be consumed exactly once.
    *cursor = i;
    String::from_utf8(bytes[start..i].to_vec()).ok()
}

fn parse_header_int(bytes: &[u8], cursor: &mut usize, what: &str) -> Result<u32, ImageError> {
    let tok = read_token(bytes, cursor)
        .ok_or_else(|| ImageError::BadHeader(format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| ImageError::BadHeader(format!("bad {what}: {tok:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pnm_round_trip_color() {
        let mut img = Image::new(5, 3, 3).unwrap();
        for (i, b) in img.data_mut().iter_mut().enumerate() {
            *b = (i * 7 % 256) as u8;
        }
        let back = Image::decode_pnm(&img.encode_pnm()).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn pnm_round_trip_gray() {
        let mut img = Image::new(4, 4, 1).unwrap();
        img.put(2, 1, &[200]);
        let back = Image::decode_pnm(&img.encode_pnm()).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn pnm_header_comments_are_skipped() {
        let img = Image::filled_rgb(2, 2, [1, 2, 3]).unwrap();
        let mut enc = b"P6\n# a comment\n2 2\n255\n".to_vec();
        enc.extend_from_slice(img.data());
        let back = Image::decode_pnm(&enc).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn pnm_rejects_bad_magic() {
        assert!(matches!(
            Image::decode_pnm(b"P3\n1 1\n255\n000"),
            Err(ImageError::BadMagic(_))
        ));
    }

    #[test]
    fn pnm_rejects_truncated_payload() {
        assert!(matches!(
            Image::decode_pnm(b"P6\n2 2\n255\n\x00\x01"),
            Err(ImageError::Truncated { .. })
        ));
    }

    #[test]
    fn bilinear_constant_image_is_constant() {
        let img = Image::filled_rgb(8, 8, [90, 91, 92]).unwrap();
        for &(x, y) in &[(0.1, 0.1), (4.4, 6.6), (7.9, 7.9), (-2.0, 11.0)] {
            assert_eq!(img.sample_bilinear(x, y), [90, 91, 92]);
        }
    }

    #[test]
    fn bilinear_interpolates_between_pixel_centers() {
        let mut img = Image::new(2, 1, 1).unwrap();
        img.put(0, 0, &[0]);
        img.put(1, 0, &[100]);
        // Halfway between the two pixel centers (0.5,0.5) and (1.5,0.5).
        let v = img.sample_bilinear(1.0, 0.5);
        assert_eq!(v[0], 50);
    }

    #[test]
    fn write_read_round_trip(){
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.ppm");
        let img = Image::filled_rgb(3, 2, [9, 8, 7]).unwrap();
        img.write_pnm(&path).unwrap();
        assert_eq!(Image::read_pnm(&path).unwrap(), img);
    }
}
