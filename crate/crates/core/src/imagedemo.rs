//! Squaring a grayscale image through the approximate multiplier.
//!
//! Every pixel `v` is replaced by `v * v` computed by the datapath, giving a
//! 16-bit product plane; its high byte forms an 8-bit display plane. Quality
//! is scored on the 16-bit planes against exact squaring.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::multiplier::{evaluate, MultiplierConfig};

pub const IMAGE_WIDTH_BITS: u32 = 8;
/// Peak value of the 16-bit product plane.
pub const PEAK: f64 = 65535.0;
pub const SSIM_WINDOW: usize = 8;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major.
    pub pixels: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plane16 {
    pub width: usize,
    pub height: usize,
    pub values: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || width.checked_mul(height) != Some(pixels.len()) {
            return Err(Error::Dimension(format!(
                "{width}x{height} image cannot hold {} pixels",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }
}

impl Plane16 {
    pub fn new(width: usize, height: usize, values: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 || width.checked_mul(height) != Some(values.len()) {
            return Err(Error::Dimension(format!(
                "{width}x{height} plane cannot hold {} values",
                values.len()
            )));
        }
        Ok(Self { width, height, values })
    }
}

struct Header {
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let bad = |msg: &str| Error::Image(msg.to_string());
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(if bytes.starts_with(b"P2") {
            bad("ASCII PGM (P2) is not supported, expected binary P5")
        } else {
            bad("not a binary PGM: missing P5 magic")
        });
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for field in fields.iter_mut() {
        // whitespace and comments may separate header fields
        loop {
            match bytes.get(pos) {
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(bad("malformed header: expected a decimal field"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("malformed header: field out of range"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("malformed header: missing separator before pixel data"));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(bad("image has zero width or height"));
    }
    Ok(Header {
        width: usize::try_from(width).map_err(|_| bad("width too large"))?,
        height: usize::try_from(height).map_err(|_| bad("height too large"))?,
        maxval: u32::try_from(maxval).map_err(|_| bad("maxval too large"))?,
        data_start: pos + 1,
    })
}

/// Parses a binary PGM with maxval 255.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let h = parse_header(bytes)?;
    if h.maxval != 255 {
        return Err(Error::Image(format!("maxval {} unsupported, expected 255", h.maxval)));
    }
    let count = h
        .width
        .checked_mul(h.height)
        .ok_or_else(|| Error::Image("image dimensions overflow".into()))?;
    let data = &bytes[h.data_start..];
    if data.len() < count {
        return Err(Error::Image(format!(
            "truncated payload: {} of {count} pixels present",
            data.len()
        )));
    }
    GrayImage::new(h.width, h.height, data[..count].to_vec())
}

pub fn load_pgm(path: &Path) -> Result<GrayImage> {
    parse_pgm(&fs::read(path)?)
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn save_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    Ok(fs::write(path, encode_pgm(img))?)
}

/// 16-bit binary PGM, big-endian samples.
pub fn encode_pgm16(plane: &Plane16) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", plane.width, plane.height).into_bytes();
    out.extend(plane.values.iter().flat_map(|v| v.to_be_bytes()));
    out
}

pub fn save_pgm16(plane: &Plane16, path: &Path) -> Result<()> {
    Ok(fs::write(path, encode_pgm16(plane))?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquaredImage {
    pub product: Plane16,
    /// High byte of each product.
    pub display: GrayImage,
}

fn check_config(cfg: &MultiplierConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.n != IMAGE_WIDTH_BITS {
        return Err(Error::WidthMismatch {
            left: IMAGE_WIDTH_BITS,
            right: cfg.n,
        });
    }
    Ok(())
}

fn planes(img: &GrayImage, values: Vec<u16>) -> SquaredImage {
    let display = values.iter().map(|v| (v >> 8) as u8).collect();
    SquaredImage {
        product: Plane16 { width: img.width, height: img.height, values },
        display: GrayImage { width: img.width, height: img.height, pixels: display },
    }
}

pub fn square_image(img: &GrayImage, cfg: &MultiplierConfig) -> Result<SquaredImage> {
    check_config(cfg)?;
    let values = img
        .pixels
        .par_iter()
        .map(|&v| evaluate(v as u64, v as u64, cfg).product as u16)
        .collect();
    Ok(planes(img, values))
}

/// Exact squaring, the scoring reference.
pub fn square_exact(img: &GrayImage) -> SquaredImage {
    planes(img, img.pixels.iter().map(|&v| v as u16 * v as u16).collect())
}

fn serialize_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QualityScore {
    pub ssim: f64,
    /// `inf` for identical planes.
    #[serde(serialize_with = "serialize_db")]
    pub psnr: f64,
}

pub fn psnr(reference: &Plane16, test: &Plane16) -> Result<f64> {
    check_dims(reference, test)?;
    let sse: f64 = reference
        .values
        .iter()
        .zip(&test.values)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    if sse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse / reference.values.len() as f64;
    Ok(10.0 * (PEAK * PEAK / mse).log10())
}

/// Mean SSIM over non-overlapping 8x8 windows. Windows at the right and
/// bottom edges are clipped to the image.
pub fn ssim(reference: &Plane16, test: &Plane16) -> Result<f64> {
    check_dims(reference, test)?;
    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let (w, h) = (reference.width, reference.height);
    let mut total = 0.0;
    let mut windows = 0usize;
    for y0 in (0..h).step_by(SSIM_WINDOW) {
        for x0 in (0..w).step_by(SSIM_WINDOW) {
            let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            let mut count = 0.0;
            for y in y0..(y0 + SSIM_WINDOW).min(h) {
                for x in x0..(x0 + SSIM_WINDOW).min(w) {
                    let a = reference.values[y * w + x] as f64;
                    let b = test.values[y * w + x] as f64;
                    sx += a;
                    sy += b;
                    sxx += a * a;
                    syy += b * b;
                    sxy += a * b;
                    count += 1.0;
                }
            }
            let (mx, my) = (sx / count, sy / count);
            let vx = sxx / count - mx * mx;
            let vy = syy / count - my * my;
            let cov = sxy / count - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            windows += 1;
        }
    }
    Ok(total / windows as f64)
}

fn check_dims(a: &Plane16, b: &Plane16) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

pub fn score(reference: &Plane16, test: &Plane16) -> Result<QualityScore> {
    Ok(QualityScore {
        ssim: ssim(reference, test)?,
        psnr: psnr(reference, test)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DemoSummary {
    pub config: MultiplierConfig,
    pub width: usize,
    pub height: usize,
    #[serde(flatten)]
    pub score: QualityScore,
}

/// Squares `img` with `cfg` and scores it against exact squaring.
pub fn run_demo(img: &GrayImage, cfg: &MultiplierConfig) -> Result<(SquaredImage, DemoSummary)> {
    let approx = square_image(img, cfg)?;
    let score = score(&square_exact(img).product, &approx.product)?;
    let summary = DemoSummary {
        config: *cfg,
        width: img.width,
        height: img.height,
        score,
    };
    Ok((approx, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_small_p5() {
        let mut bytes = b"P5\n# comment\n2 2\n255\n".to_vec();
        bytes.extend([0, 255, 128, 64]);
        let img = parse_pgm(&bytes).unwrap();
        assert_eq!((img.width, img.height), (2, 2));
        assert_eq!(img.pixels, vec![0, 255, 128, 64]);
        assert_eq!(parse_pgm(&encode_pgm(&img)).unwrap(), img);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(parse_pgm(b"P2\n2 2\n255\n0 1 2 3\n"), Err(Error::Image(m)) if m.contains("P2")));
        assert!(parse_pgm(b"P5\n2 2\n65535\n\0\0\0\0\0\0\0\0").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\0\0\0").is_err());
        assert!(parse_pgm(b"P5\n2 x\n255\n\0\0\0\0").is_err());
        assert!(parse_pgm(b"P5\n0 2\n255\n").is_err());
        assert!(parse_pgm(b"").is_err());
    }

    #[test]
    fn pixel_products() {
        let img = GrayImage::new(3, 1, vec![0, 255, 11]).unwrap();
        let exact = square_image(&img, &MultiplierConfig::degenerate(8, 4).unwrap()).unwrap();
        assert_eq!(exact.product.values, vec![0, 65025, 121]);
        assert_eq!(exact.display.pixels, vec![0, 254, 0]);
        let cfg = MultiplierConfig::new(7, 3, true).unwrap();
        assert!(matches!(square_image(&img, &cfg), Err(Error::WidthMismatch { .. })));
    }

    #[test]
    fn sixteen_bit_encoding() {
        let plane = Plane16::new(2, 1, vec![0x1234, 65535]).unwrap();
        let bytes = encode_pgm16(&plane);
        assert!(bytes.starts_with(b"P5\n2 1\n65535\n"));
        assert_eq!(&bytes[bytes.len() - 4..], &[0x12, 0x34, 0xff, 0xff]);
    }

    #[test]
    fn identical_and_offset_planes() {
        let values: Vec<u16> = (0..64 * 48).map(|i| (i * 37 % 65000) as u16).collect();
        let a = Plane16::new(64, 48, values.clone()).unwrap();
        let s = score(&a, &a).unwrap();
        assert_eq!(s.ssim, 1.0);
        assert!(s.psnr.is_infinite());
        let b = Plane16::new(64, 48, values.iter().map(|v| v + 1).collect()).unwrap();
        let p = psnr(&a, &b).unwrap();
        assert!((p - 96.3296).abs() < 1e-3, "{p}");
        let c = Plane16::new(48, 64, values).unwrap();
        assert!(matches!(score(&a, &c), Err(Error::Dimension(_))));
    }

    #[test]
    fn score_json_renders_infinity() {
        let s = QualityScore { ssim: 1.0, psnr: f64::INFINITY };
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"ssim":1.0,"psnr":"inf"}"#);
    }

    #[test]
    fn accurate_mode_scores_perfectly() {
        let img = GrayImage::new(9, 10, (0..90).map(|v| (v * 13 % 256) as u8).collect()).unwrap();
        let (_, summary) = run_demo(&img, &MultiplierConfig::degenerate(8, 4).unwrap()).unwrap();
        assert_eq!(summary.score.ssim, 1.0);
        assert!(summary.score.psnr.is_infinite());
    }
}
