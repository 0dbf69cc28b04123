//! PNG codecs for semantic masks (8-bit palette, index = class code) and
//! RGB images. Masks carry their grid in a `goldbev-grid` text chunk.

use std::io::Cursor;
use thiserror::Error;

use crate::grid::BevGridSpec;
use crate::imaging::RgbImage;
use crate::raster::{Raster, SemanticMask};
use crate::synthworld::class_color;
use crate::taxonomy::ClassId;

pub const GRID_KEYWORD: &str = "goldbev-grid";
/// Display color of IGNORE/VOID cells.
pub const VOID_RGB: [u8; 3] = [255, 0, 255];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PngError {
    #[error("png decode: {0}")]
    Decode(String),
    #[error("png encode: {0}")]
    Encode(String),
    #[error("expected {expected}, found {found}")]
    Format { expected: &'static str, found: String },
    #[error("mask uses invalid class codes {0:?}")]
    InvalidCodes(Vec<u8>),
    #[error("mask grid: {0}")]
    Grid(String),
}

/// 256-entry RGB palette: class colors, magenta for IGNORE, black elsewhere.
pub fn mask_palette() -> Vec<u8> {
    (0..=255u8)
        .flat_map(|code| match ClassId::new(code) {
            Ok(c) if c.is_ignore() => VOID_RGB,
            Ok(c) => class_color(c),
            Err(_) => [0, 0, 0],
        })
        .collect()
}

fn decoder_options() -> png::DecodeOptions {
    let mut o = png::DecodeOptions::default();
    o.set_ignore_adler32(false);
    o.set_ignore_crc(false);
    o.set_skip_ancillary_crc_failures(false);
    o
}

fn grid_text(g: &BevGridSpec) -> String {
    format!("extent_m={};size_px={}", g.extent_m(), g.size_px())
}

fn parse_grid_text(t: &str) -> Result<BevGridSpec, PngError> {
    let mut extent = None;
    let mut size = None;
    for kv in t.split(';') {
        match kv.split_once('=') {
            Some(("extent_m", v)) => extent = v.parse::<f64>().ok(),
            Some(("size_px", v)) => size = v.parse::<usize>().ok(),
            _ => return Err(PngError::Grid(format!("unexpected entry {kv:?}"))),
        }
    }
    match (extent, size) {
        (Some(e), Some(s)) => BevGridSpec::new(e, s).map_err(|e| PngError::Grid(e.to_string())),
        _ => Err(PngError::Grid(format!("incomplete grid text {t:?}"))),
    }
}

pub fn encode_mask_png(mask: &SemanticMask) -> Result<Vec<u8>, PngError> {
    let g = mask.grid();
    let n = g.size_px() as u32;
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, n, n);
        enc.set_color(png::ColorType::Indexed);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_palette(mask_palette());
        enc.set_compression(png::Compression::Fast);
        enc.add_text_chunk(GRID_KEYWORD.into(), grid_text(g))
            .map_err(|e| PngError::Encode(e.to_string()))?;
        let mut w = enc.write_header().map_err(|e| PngError::Encode(e.to_string()))?;
        let codes: Vec<u8> = mask.data().iter().map(|c| c.code()).collect();
        w.write_image_data(&codes).map_err(|e| PngError::Encode(e.to_string()))?;
        w.finish().map_err(|e| PngError::Encode(e.to_string()))?;
    }
    Ok(out)
}

struct Decoded {
    width: u32,
    height: u32,
    color: png::ColorType,
    depth: png::BitDepth,
    grid_text: Option<String>,
    data: Vec<u8>,
}

fn decode(bytes: &[u8]) -> Result<Decoded, PngError> {
    let err = |e: png::DecodingError| PngError::Decode(e.to_string());
    let dec = png::Decoder::new_with_options(Cursor::new(bytes), decoder_options());
    let mut reader = dec.read_info().map_err(err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| PngError::Decode("image too large".into()))?;
    let mut data = vec![0; size];
    let info = reader.next_frame(&mut data).map_err(err)?;
    data.truncate(info.buffer_size());
    reader.finish().map_err(err)?;
    let meta = reader.info();
    Ok(Decoded {
        width: info.width,
        height: info.height,
        color: info.color_type,
        depth: info.bit_depth,
        grid_text: meta
            .uncompressed_latin1_text
            .iter()
            .find(|t| t.keyword == GRID_KEYWORD)
            .map(|t| t.text.clone()),
        data,
    })
}

/// Decodes a mask PNG. The grid comes from the embedded text chunk when
/// present, else from `fallback`; either way it must match the image size.
pub fn decode_mask_png(bytes: &[u8], fallback: Option<BevGridSpec>) -> Result<SemanticMask, PngError> {
    let d = decode(bytes)?;
    if d.color != png::ColorType::Indexed || d.depth != png::BitDepth::Eight {
        return Err(PngError::Format {
            expected: "8-bit indexed",
            found: format!("{:?} {:?}", d.color, d.depth),
        });
    }
    let grid = match (&d.grid_text, fallback) {
        (Some(t), _) => parse_grid_text(t)?,
        (None, Some(g)) => g,
        (None, None) => return Err(PngError::Grid("no grid chunk and no fallback".into())),
    };
    if (d.width as usize, d.height as usize) != (grid.size_px(), grid.size_px()) {
        return Err(PngError::Grid(format!(
            "image is {}x{} but grid has {} cells per side",
            d.width,
            d.height,
            grid.size_px()
        )));
    }
    let mut bad: Vec<u8> = d.data.iter().copied().filter(|&c| !ClassId::is_valid_code(c)).collect();
    if !bad.is_empty() {
        bad.sort_unstable();
        bad.dedup();
        return Err(PngError::InvalidCodes(bad));
    }
    let data = d.data.into_iter().map(|c| ClassId::new(c).expect("validated")).collect();
    Raster::from_vec(grid, data).map_err(|e| PngError::Grid(e.to_string()))
}

pub fn encode_rgb_png(img: &RgbImage) -> Result<Vec<u8>, PngError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Fast);
        let mut w = enc.write_header().map_err(|e| PngError::Encode(e.to_string()))?;
        w.write_image_data(img.as_raw()).map_err(|e| PngError::Encode(e.to_string()))?;
        w.finish().map_err(|e| PngError::Encode(e.to_string()))?;
    }
    Ok(out)
}

/// RGBA overlay PNG: `rgba` is interleaved, `width × height × 4`.
pub fn encode_rgba_png(width: usize, height: usize, rgba: &[u8]) -> Result<Vec<u8>, PngError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Fast);
        let mut w = enc.write_header().map_err(|e| PngError::Encode(e.to_string()))?;
        w.write_image_data(rgba).map_err(|e| PngError::Encode(e.to_string()))?;
        w.finish().map_err(|e| PngError::Encode(e.to_string()))?;
    }
    Ok(out)
}

pub fn decode_rgb_png(bytes: &[u8]) -> Result<RgbImage, PngError> {
    let d = decode(bytes)?;
    if d.color != png::ColorType::Rgb || d.depth != png::BitDepth::Eight {
        return Err(PngError::Format {
            expected: "8-bit RGB",
            found: format!("{:?} {:?}", d.color, d.depth),
        });
    }
    RgbImage::from_raw(d.width as usize, d.height as usize, d.data).map_err(|e| PngError::Decode(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask() -> SemanticMask {
        let g = BevGridSpec::new(2.1, 30).unwrap();
        let codes = [0u8, 1, 2, 3, 4, 254, 255];
        Raster::from_fn(g, |r, c| ClassId::new(codes[(r * 7 + c * 3) % 7]).unwrap())
    }

    #[test]
    fn mask_round_trip_and_palette() {
        let m = mask();
        let bytes = encode_mask_png(&m).unwrap();
        assert_eq!(decode_mask_png(&bytes, None).unwrap(), m);
        assert_eq!(&mask_palette()[255 * 3..], &VOID_RGB);
    }

    #[test]
    fn invalid_codes_are_listed() {
        let n = 4u32;
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, n, n);
            enc.set_color(png::ColorType::Indexed);
            enc.set_depth(png::BitDepth::Eight);
            enc.set_palette(mask_palette());
            let mut w = enc.write_header().unwrap();
            let mut px = vec![0u8; 16];
            px[3] = 9;
            px[7] = 7;
            px[8] = 9;
            w.write_image_data(&px).unwrap();
        }
        let g = BevGridSpec::new(1.0, 4).unwrap();
        assert_eq!(decode_mask_png(&out, Some(g)), Err(PngError::InvalidCodes(vec![7, 9])));
    }

    #[test]
    fn every_byte_flip_is_detected() {
        let g = BevGridSpec::new(1.0, 6).unwrap();
        let m = Raster::from_fn(g, |r, c| ClassId::new(((r + c) % 5) as u8).unwrap());
        let bytes = encode_mask_png(&m).unwrap();
        for i in 0..bytes.len() {
            let mut b = bytes.clone();
            b[i] ^= 0x21;
            assert!(decode_mask_png(&b, Some(g)).is_err(), "flip at {i} went unnoticed");
        }
    }

    #[test]
    fn rgb_round_trip() {
        let img = RgbImage::from_raw(5, 3, (0..45).collect()).unwrap();
        assert_eq!(decode_rgb_png(&encode_rgb_png(&img).unwrap()).unwrap(), img);
    }
}
