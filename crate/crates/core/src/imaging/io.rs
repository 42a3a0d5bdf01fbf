//! Raster codecs: PNG/JPEG for captured images, binary PGM (P5) for debug
//! dumps and template archives.

use std::io::Cursor;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat, Luma, RgbImage};

use super::{ColorImage, GrayImage};
use crate::{Error, Result};

/// Decodes PNG or JPEG (format sniffed from the bytes).
pub fn decode_color(bytes: &[u8]) -> Result<ColorImage> {
    let format = image::guess_format(bytes).map_err(|e| Error::Decode(e.to_string()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg | ImageFormat::Pnm) {
        return Err(Error::Decode(format!("unsupported format {format:?}")));
    }
    let img = image::load_from_memory_with_format(bytes, format).map_err(|e| Error::Decode(e.to_string()))?;
    Ok(from_dynamic(img))
}

pub fn open_color(path: &Path) -> Result<ColorImage> {
    decode_color(&std::fs::read(path)?)
}

fn from_dynamic(img: DynamicImage) -> ColorImage {
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    ColorImage::new(w, h, rgb.pixels().map(|p| p.0).collect()).expect("decoded image is non-empty")
}

fn to_rgb(img: &ColorImage) -> RgbImage {
    let raw = img.pixels().iter().flatten().copied().collect();
    RgbImage::from_raw(img.width() as u32, img.height() as u32, raw).expect("buffer matches dimensions")
}

pub fn encode_png(img: &ColorImage) -> Vec<u8> {
    let mut out = Vec::new();
    to_rgb(img).write_to(&mut Cursor::new(&mut out), ImageFormat::Png).expect("in-memory PNG encoding does not fail");
    out
}

pub fn encode_jpeg(img: &ColorImage) -> Vec<u8> {
    let mut out = Vec::new();
    to_rgb(img).write_to(&mut Cursor::new(&mut out), ImageFormat::Jpeg).expect("in-memory JPEG encoding does not fail");
    out
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = Vec::new();
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(img.pixels(), img.width() as u32, img.height() as u32, ExtendedColorType::L8)
        .expect("in-memory PGM encoding does not fail");
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Pnm)
        .map_err(|e| Error::Decode(e.to_string()))?
        .to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    GrayImage::new(w, h, img.pixels().map(|p: &Luma<u8>| p.0[0]).collect())
}

pub fn write_pgm(img: &GrayImage, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, encode_pgm(img))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let img = GrayImage::from_fn(7, 3, |x, y| (x * 30 + y) as u8);
        let bytes = encode_pgm(&img);
        assert!(bytes.starts_with(b"P5"));
        assert_eq!(decode_pgm(&bytes).unwrap(), img);
    }

    #[test]
    fn png_round_trip_and_garbage_rejected() {
        let img = ColorImage::new(2, 1, vec![[1, 2, 3], [250, 128, 0]]).unwrap();
        assert_eq!(decode_color(&encode_png(&img)).unwrap(), img);
        assert!(matches!(decode_color(b"not an image"), Err(Error::Decode(_))));
    }
}
