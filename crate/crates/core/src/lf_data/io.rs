//! Dataset directory layout, PNG views and PFM float maps.
//!
//! A dataset directory holds `meta.json` plus one `view_{r}_{c}.png` per grid
//! position. Disparity and weight maps are single-channel little-endian PFM.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use serde::{Deserialize, Serialize};

use super::{DisparityMap, LightField};
use crate::error::{Error, Result};
use crate::image::ImageGrid;

pub const META_FILE: &str = "meta.json";

/// Contents of `meta.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub rows: usize,
    pub cols: usize,
    pub offset_step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disparity_range: Option<[f64; 2]>,
}

impl Meta {
    pub fn parse(text: &str) -> Result<Self> {
        let meta: Meta = serde_json::from_str(text).map_err(|e| Error::Parse {
            what: META_FILE.into(),
            reason: format!("line {} column {}: {e}", e.line(), e.column()),
        })?;
        if meta.rows == 0 || meta.cols == 0 {
            return Err(Error::Parse {
                what: META_FILE.into(),
                reason: "field `rows`/`cols`: must be >= 1".into(),
            });
        }
        if !(meta.offset_step > 0.0) {
            return Err(Error::Parse {
                what: META_FILE.into(),
                reason: "field `offset_step`: must be > 0".into(),
            });
        }
        if let Some([lo, hi]) = meta.disparity_range {
            if !(lo <= hi) {
                return Err(Error::Parse {
                    what: META_FILE.into(),
                    reason: "field `disparity_range`: min exceeds max".into(),
                });
            }
        }
        Ok(meta)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Convert sRGB-encoded samples to linear light after loading.
    pub linearize: bool,
}

pub fn view_file_name(r: usize, c: usize) -> String {
    format!("view_{r}_{c}.png")
}

/// sRGB-encoded samples to linear light.
pub fn linearize(img: &ImageGrid) -> ImageGrid {
    img.map(srgb_to_linear)
}

/// Linear-light samples back to sRGB encoding, for writing results of a linearized run.
pub fn delinearize(img: &ImageGrid) -> ImageGrid {
    img.map(linear_to_srgb)
}

fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

fn linear_to_srgb(v: f64) -> f64 {
    if v <= 0.0031308 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

fn load_err(path: &Path, reason: impl ToString) -> Error {
    Error::Load {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

/// Reads an 8/16-bit gray or RGB PNG into `[0, 1]` samples. Alpha is dropped.
pub fn load_png(path: &Path) -> Result<ImageGrid> {
    let img = image::open(path).map_err(|e| load_err(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (channels, data): (usize, Vec<f64>) = match img {
        DynamicImage::ImageLuma8(b) => (1, b.into_raw().into_iter().map(|v| v as f64 / 255.0).collect()),
        DynamicImage::ImageLuma16(b) => (1, b.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect()),
        DynamicImage::ImageLumaA8(_) => (1, img.to_luma8().into_raw().into_iter().map(|v| v as f64 / 255.0).collect()),
        DynamicImage::ImageLumaA16(_) => (1, img.to_luma16().into_raw().into_iter().map(|v| v as f64 / 65535.0).collect()),
        DynamicImage::ImageRgb16(b) => (3, b.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect()),
        DynamicImage::ImageRgba16(_) => (3, img.to_rgb16().into_raw().into_iter().map(|v| v as f64 / 65535.0).collect()),
        other => (3, other.to_rgb8().into_raw().into_iter().map(|v| v as f64 / 255.0).collect()),
    };
    ImageGrid::from_vec(h, w, channels, data)
}

fn quantize(v: f64, max: f64) -> f64 {
    (v.clamp(0.0, 1.0) * max).round()
}

/// Encodes to 8-bit PNG bytes (gray for one channel, RGB for three).
pub fn encode_png(img: &ImageGrid) -> Result<Vec<u8>> {
    let (h, w, ch) = img.dims();
    let raw: Vec<u8> = img.data().iter().map(|&v| quantize(v, 255.0) as u8).collect();
    let dynamic = match ch {
        1 => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w as u32, h as u32, raw).expect("sized buffer"),
        ),
        3 => DynamicImage::ImageRgb8(
            ImageBuffer::<Rgb<u8>, _>::from_raw(w as u32, h as u32, raw).expect("sized buffer"),
        ),
        n => return Err(Error::contract(format!("cannot encode {n}-channel image as PNG"))),
    };
    let mut bytes = Vec::new();
    dynamic
        .write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| Error::contract(format!("png encoding failed: {e}")))?;
    Ok(bytes)
}

pub fn save_png(img: &ImageGrid, path: &Path) -> Result<()> {
    fs::write(path, encode_png(img)?)?;
    Ok(())
}

/// 16-bit variant of [`save_png`], used where quantization must stay below the noise floor.
pub fn save_png_16(img: &ImageGrid, path: &Path) -> Result<()> {
    let (h, w, ch) = img.dims();
    let raw: Vec<u16> = img.data().iter().map(|&v| quantize(v, 65535.0) as u16).collect();
    let dynamic = match ch {
        1 => DynamicImage::ImageLuma16(ImageBuffer::from_raw(w as u32, h as u32, raw).expect("sized buffer")),
        3 => DynamicImage::ImageRgb16(ImageBuffer::from_raw(w as u32, h as u32, raw).expect("sized buffer")),
        n => return Err(Error::contract(format!("cannot encode {n}-channel image as PNG"))),
    };
    dynamic
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| load_err(path, e))
}

pub fn load_light_field(dir: &Path) -> Result<LightField> {
    load_light_field_with(dir, LoadOptions::default())
}

/// Reads and validates `meta.json` of a dataset directory.
pub fn read_meta(dir: &Path) -> Result<Meta> {
    let meta_path = dir.join(META_FILE);
    let text = fs::read_to_string(&meta_path).map_err(|e| load_err(&meta_path, e))?;
    Meta::parse(&text)
}

pub fn load_light_field_with(dir: &Path, opts: LoadOptions) -> Result<LightField> {
    let meta = read_meta(dir)?;
    let mut views: Vec<ImageGrid> = Vec::with_capacity(meta.rows * meta.cols);
    for r in 0..meta.rows {
        for c in 0..meta.cols {
            let path: PathBuf = dir.join(view_file_name(r, c));
            if !path.is_file() {
                return Err(load_err(&path, "view image is missing"));
            }
            let mut view = load_png(&path)?;
            if let Some(first) = views.first() {
                if !first.same_shape(&view) {
                    return Err(load_err(
                        &path,
                        format!(
                            "size {}x{}x{} differs from view_0_0.png ({}x{}x{})",
                            view.height(),
                            view.width(),
                            view.channels(),
                            first.height(),
                            first.width(),
                            first.channels()
                        ),
                    ));
                }
            }
            if opts.linearize {
                view = linearize(&view);
            }
            views.push(view);
        }
    }
    LightField::from_grid(views, meta.rows, meta.cols, meta.offset_step)
}

/// Writes a regular-grid light field as `meta.json` plus 16-bit PNG views.
pub fn write_light_field(
    dir: &Path,
    lf: &LightField,
    offset_step: f64,
    disparity_range: Option<[f64; 2]>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let meta = Meta {
        rows: lf.rows(),
        cols: lf.cols(),
        offset_step,
        disparity_range,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::contract(e.to_string()))?;
    fs::write(dir.join(META_FILE), json)?;
    for r in 0..lf.rows() {
        for c in 0..lf.cols() {
            save_png_16(lf.view(r * lf.cols() + c), &dir.join(view_file_name(r, c)))?;
        }
    }
    Ok(())
}

/// Writes a single-channel little-endian PFM, rows stored bottom-up.
pub fn write_pfm(path: &Path, height: usize, width: usize, values: &[f64]) -> Result<()> {
    if values.len() != height * width {
        return Err(Error::contract("pfm buffer does not match dimensions"));
    }
    let mut out = Vec::with_capacity(32 + 4 * values.len());
    write!(out, "Pf\n{width} {height}\n-1.0\n")?;
    for y in (0..height).rev() {
        for &v in &values[y * width..(y + 1) * width] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

fn pfm_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Parse {
        what: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Reads a single-channel PFM in top-down row order. Either endianness is accepted.
pub fn read_pfm(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let bytes = fs::read(path).map_err(|e| load_err(path, e))?;
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    // magic, width, height, scale separated by whitespace; one byte of whitespace ends the header
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(pfm_err(path, "truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| pfm_err(path, "non-ascii header"))?);
    }
    if pos >= bytes.len() {
        return Err(pfm_err(path, "truncated header"));
    }
    pos += 1;
    match fields[0] {
        "Pf" => {}
        "PF" => return Err(pfm_err(path, "expected a single-channel map (Pf), found 3 channels (PF)")),
        other => return Err(pfm_err(path, format!("bad magic `{other}`"))),
    }
    let width: usize = fields[1].parse().map_err(|_| pfm_err(path, "bad width"))?;
    let height: usize = fields[2].parse().map_err(|_| pfm_err(path, "bad height"))?;
    let scale: f32 = fields[3].parse().map_err(|_| pfm_err(path, "bad scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(pfm_err(path, "scale must be non-zero"));
    }
    let little = scale < 0.0;
    let expected = width * height * 4;
    let body = &bytes[pos..];
    if body.len() < expected {
        return Err(pfm_err(
            path,
            format!("truncated data: expected {expected} bytes, found {}", body.len()),
        ));
    }
    let mut values = vec![0f32; width * height];
    for (i, chunk) in body[..expected].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (row, col) = (i / width, i % width);
        values[(height - 1 - row) * width + col] = v;
    }
    Ok((height, width, values))
}

pub fn write_disparity(path: &Path, dmap: &DisparityMap) -> Result<()> {
    write_pfm(path, dmap.height(), dmap.width(), dmap.values())
}

pub fn load_disparity(path: &Path) -> Result<DisparityMap> {
    let (h, w, values) = read_pfm(path)?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(pfm_err(path, "non-finite disparity value"));
    }
    DisparityMap::new(h, w, values.into_iter().map(f64::from).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_reports_line_and_field() {
        let err = Meta::parse("{\n  \"rows\": 3,\n  \"cols\": \"x\"\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        let err = Meta::parse(r#"{"rows": 3, "cols": 3, "offset_step": 0}"#).unwrap_err();
        assert!(err.to_string().contains("offset_step"));
        let ok = Meta::parse(r#"{"rows": 3, "cols": 3, "offset_step": 1.0, "disparity_range": [0, 4]}"#).unwrap();
        assert_eq!(ok.disparity_range, Some([0.0, 4.0]));
    }

    #[test]
    fn zero_disparity_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.pfm");
        write_pfm(&path, 4, 4, &[0.0; 16]).unwrap();
        let d = load_disparity(&path).unwrap();
        assert_eq!((d.height(), d.width(), d.d_min(), d.d_max()), (4, 4, 0.0, 0.0));
    }

    #[test]
    fn pfm_rows_are_bottom_up_little_endian() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.pfm");
        write_pfm(&path, 2, 1, &[1.0, 2.0]).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"Pf\n1 2\n-1.0\n"));
        let body = &bytes[bytes.len() - 8..];
        assert_eq!(&body[..4], &2.0f32.to_le_bytes());
        assert_eq!(&body[4..], &1.0f32.to_le_bytes());
    }

    #[test]
    fn big_endian_pfm_is_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("be.pfm");
        let mut bytes = b"Pf\n2 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&1.5f32.to_be_bytes());
        bytes.extend_from_slice(&(-2.0f32).to_be_bytes());
        fs::write(&path, bytes).unwrap();
        assert_eq!(read_pfm(&path).unwrap(), (1, 2, vec![1.5, -2.0]));
    }

    #[test]
    fn truncated_and_colour_pfm_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pfm");
        write_pfm(&path, 4, 4, &[0.5; 16]).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_disparity(&path), Err(Error::Parse { .. })));
        fs::write(&path, b"Pf\n4").unwrap();
        assert!(matches!(load_disparity(&path), Err(Error::Parse { .. })));

        let mut rgb = b"PF\n1 1\n-1.0\n".to_vec();
        rgb.extend_from_slice(&[0u8; 12]);
        fs::write(&path, rgb).unwrap();
        let err = load_disparity(&path).unwrap_err();
        assert!(err.to_string().contains("single-channel"));
    }

    #[test]
    fn png_round_trip_8_and_16_bit() {
        let dir = tempfile::tempdir().unwrap();
        let img = ImageGrid::from_fn(3, 5, 3, |y, x, c| ((y * 15 + x * 3 + c) % 256) as f64 / 255.0);
        let p8 = dir.path().join("a.png");
        save_png(&img, &p8).unwrap();
        assert!(load_png(&p8).unwrap().max_abs_diff(&img) < 1e-12);
        let gray = ImageGrid::from_fn(4, 4, 1, |y, x, _| (y * 4 + x) as f64 / 65535.0 * 1000.0);
        let p16 = dir.path().join("b.png");
        save_png_16(&gray, &p16).unwrap();
        let back = load_png(&p16).unwrap();
        assert_eq!(back.channels(), 1);
        assert!(back.max_abs_diff(&gray) <= 0.5 / 65535.0 + 1e-15);
    }

    #[test]
    fn srgb_round_trip() {
        for v in [0.0, 0.01, 0.2, 0.5, 1.0] {
            assert!((linear_to_srgb(srgb_to_linear(v)) - v).abs() < 1e-12);
        }
    }
}
