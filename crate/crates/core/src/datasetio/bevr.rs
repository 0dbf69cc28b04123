//! `BEVR` multi-channel raster container.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "BEVR" | u16 version | u16 channels | u32 height | u32 width | u8 dtype
//! channels × (u16 name_len | name bytes)
//! u32 crc32 of all header bytes above
//! channels × (height × width values, row-major)
//! channels × u32 crc32 of that channel's payload bytes
//! ```
//!
//! dtype: 0 = u8, 1 = u16, 2 = f32.

use thiserror::Error;

use super::reader::{ByteReader, ReadError};
use crate::bevraster::{LidarBevRaster, LidarRasterParams, SparseLabelRaster};
use crate::grid::BevGridSpec;
use crate::imaging::{LabelImage, Plane};
use crate::raster::{BinaryMask, ProbabilityMap, Raster, RasterError, SemanticMask};
use crate::taxonomy::ClassId;

pub const BEVR_MAGIC: &[u8; 4] = b"BEVR";
pub const BEVR_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BevrError {
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error("unknown dtype tag {tag} at offset {offset}")]
    Dtype { tag: u8, offset: usize },
    #[error("channel {index} has {actual} values, expected {expected}")]
    ChannelLength { index: usize, expected: usize, actual: usize },
    #[error("channels mix dtypes")]
    MixedDtypes,
    #[error("channel name {0:?} is longer than 65535 bytes")]
    NameTooLong(String),
    #[error("missing channel {0:?}")]
    MissingChannel(String),
    #[error("channel {name:?}: {reason}")]
    BadChannel { name: String, reason: String },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    U8 = 0,
    U16 = 1,
    F32 = 2,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelData {
    U8(Vec<u8>),
    U16(Vec<u16>),
    F32(Vec<f32>),
}

impl ChannelData {
    pub fn dtype(&self) -> Dtype {
        match self {
            ChannelData::U8(_) => Dtype::U8,
            ChannelData::U16(_) => Dtype::U16,
            ChannelData::F32(_) => Dtype::F32,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ChannelData::U8(v) => v.len(),
            ChannelData::U16(v) => v.len(),
            ChannelData::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn extend_bytes(&self, out: &mut Vec<u8>) {
        match self {
            ChannelData::U8(v) => out.extend_from_slice(v),
            ChannelData::U16(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            ChannelData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub data: ChannelData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BevrRaster {
    pub height: usize,
    pub width: usize,
    pub channels: Vec<Channel>,
}

impl BevrRaster {
    pub fn channel(&self, name: &str) -> Option<&ChannelData> {
        self.channels.iter().find(|c| c.name == name).map(|c| &c.data)
    }

    /// Channel whose name is `base` or starts with `base;`.
    pub fn channel_prefixed(&self, base: &str) -> Option<&Channel> {
        self.channels
            .iter()
            .find(|c| c.name == base || c.name.strip_prefix(base).is_some_and(|r| r.starts_with(';')))
    }
}

pub fn encode_bevr(r: &BevrRaster) -> Result<Vec<u8>, BevrError> {
    let n = r.height * r.width;
    let dtype = r.channels.first().map_or(Dtype::U8, |c| c.data.dtype());
    for (index, c) in r.channels.iter().enumerate() {
        if c.data.dtype() != dtype {
            return Err(BevrError::MixedDtypes);
        }
        if c.data.len() != n {
            return Err(BevrError::ChannelLength {
                index,
                expected: n,
                actual: c.data.len(),
            });
        }
        if c.name.len() > u16::MAX as usize {
            return Err(BevrError::NameTooLong(c.name.clone()));
        }
    }
    let mut out = Vec::new();
    out.extend_from_slice(BEVR_MAGIC);
    out.extend_from_slice(&BEVR_VERSION.to_le_bytes());
    out.extend_from_slice(&(r.channels.len() as u16).to_le_bytes());
    out.extend_from_slice(&(r.height as u32).to_le_bytes());
    out.extend_from_slice(&(r.width as u32).to_le_bytes());
    out.push(dtype as u8);
    for c in &r.channels {
        out.extend_from_slice(&(c.name.len() as u16).to_le_bytes());
        out.extend_from_slice(c.name.as_bytes());
    }
    let header_crc = crc32fast::hash(&out);
    out.extend_from_slice(&header_crc.to_le_bytes());
    let mut crcs = Vec::with_capacity(r.channels.len());
    for c in &r.channels {
        let start = out.len();
        c.data.extend_bytes(&mut out);
        crcs.push(crc32fast::hash(&out[start..]));
    }
    for crc in crcs {
        out.extend_from_slice(&crc.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_bevr(bytes: &[u8]) -> Result<BevrRaster, BevrError> {
    let mut rd = ByteReader::new(bytes);
    rd.magic(BEVR_MAGIC)?;
    rd.version(BEVR_VERSION)?;
    let nchan = rd.u16()? as usize;
    let height = rd.u32()? as usize;
    let width = rd.u32()? as usize;
    let dtype_offset = rd.offset();
    let tag = rd.u8()?;
    let mut names = Vec::with_capacity(nchan.min(1024));
    for _ in 0..nchan {
        names.push(rd.string_u16()?);
    }
    rd.check_crc("header", 0)?;
    let dtype = match tag {
        0 => Dtype::U8,
        1 => Dtype::U16,
        2 => Dtype::F32,
        _ => {
            return Err(BevrError::Dtype {
                tag,
                offset: dtype_offset,
            })
        }
    };
    let elem = match dtype {
        Dtype::U8 => 1,
        Dtype::U16 => 2,
        Dtype::F32 => 4,
    };
    let chan_bytes = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(elem))
        .ok_or(ReadError::Truncated {
            offset: rd.offset(),
            needed: usize::MAX,
        })?;
    let payload_start = rd.offset();
    let mut raw = Vec::with_capacity(nchan);
    for _ in 0..nchan {
        raw.push(rd.take(chan_bytes)?);
    }
    for (i, name) in names.iter().enumerate() {
        let stored = rd.u32()?;
        if crc32fast::hash(raw[i]) != stored {
            return Err(ReadError::Checksum {
                section: format!("channel {name:?}"),
                offset: payload_start + i * chan_bytes,
            }
            .into());
        }
    }
    rd.finish()?;
    let channels = names
        .into_iter()
        .zip(raw)
        .map(|(name, b)| {
            let data = match dtype {
                Dtype::U8 => ChannelData::U8(b.to_vec()),
                Dtype::U16 => ChannelData::U16(b.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect()),
                Dtype::F32 => ChannelData::F32(b.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect()),
            };
            Channel { name, data }
        })
        .collect();
    Ok(BevrRaster {
        height,
        width,
        channels,
    })
}

fn f32_channel<'a>(r: &'a BevrRaster, base: &str) -> Result<(&'a str, &'a [f32]), BevrError> {
    match r.channel_prefixed(base) {
        Some(Channel {
            name,
            data: ChannelData::F32(v),
        }) => Ok((name, v)),
        Some(c) => Err(BevrError::BadChannel {
            name: c.name.clone(),
            reason: "expected f32 values".into(),
        }),
        None => Err(BevrError::MissingChannel(base.into())),
    }
}

fn param(name: &str, key: &str) -> Option<f64> {
    name.split(';')
        .skip(1)
        .find_map(|kv| kv.strip_prefix(key)?.strip_prefix('=')?.parse().ok())
}

fn square_grid(r: &BevrRaster, extent_m: f64) -> Result<BevGridSpec, BevrError> {
    if r.height != r.width {
        return Err(BevrError::BadChannel {
            name: "*".into(),
            reason: format!("raster is {}x{}, not square", r.width, r.height),
        });
    }
    BevGridSpec::new(extent_m, r.width).map_err(|e| BevrError::BadChannel {
        name: "*".into(),
        reason: e.to_string(),
    })
}

/// Occupancy, height, density and counts as f32 channels. Normalization
/// parameters travel in the channel names.
pub fn lidar_to_bevr(r: &LidarBevRaster) -> BevrRaster {
    let p = &r.params;
    let g = r.grid();
    let chan = |name: String, v: Vec<f32>| Channel {
        name,
        data: ChannelData::F32(v),
    };
    BevrRaster {
        height: g.size_px(),
        width: g.size_px(),
        channels: vec![
            chan(format!("occupancy;extent_m={}", g.extent_m()), r.occupancy.data().to_vec()),
            chan(format!("height;min={};max={}", p.height_min_m, p.height_max_m), r.height.data().to_vec()),
            chan(format!("density;cap={}", p.density_cap), r.density.data().to_vec()),
            chan("counts".into(), r.counts.data().iter().map(|&n| n as f32).collect()),
        ],
    }
}

pub fn bevr_to_lidar(r: &BevrRaster) -> Result<LidarBevRaster, BevrError> {
    let (occ_name, occ) = f32_channel(r, "occupancy")?;
    let (h_name, height) = f32_channel(r, "height")?;
    let (d_name, density) = f32_channel(r, "density")?;
    let (_, counts) = f32_channel(r, "counts")?;
    let bad = |name: &str, what: &str| BevrError::BadChannel {
        name: name.into(),
        reason: format!("missing parameter {what}"),
    };
    let grid = square_grid(r, param(occ_name, "extent_m").ok_or_else(|| bad(occ_name, "extent_m"))?)?;
    let params = LidarRasterParams {
        height_min_m: param(h_name, "min").ok_or_else(|| bad(h_name, "min"))?,
        height_max_m: param(h_name, "max").ok_or_else(|| bad(h_name, "max"))?,
        density_cap: param(d_name, "cap").ok_or_else(|| bad(d_name, "cap"))? as u32,
    };
    Ok(LidarBevRaster {
        params,
        occupancy: Raster::from_vec(grid, occ.to_vec())?,
        height: Raster::from_vec(grid, height.to_vec())?,
        density: Raster::from_vec(grid, density.to_vec())?,
        counts: Raster::from_vec(grid, counts.iter().map(|&v| v as u32).collect())?,
    })
}

/// One f32 channel per class, named `p:<class>;extent_m=<m>`.
pub fn probs_to_bevr(p: &ProbabilityMap, classes: &[ClassId]) -> BevrRaster {
    let g = p.grid();
    BevrRaster {
        height: g.size_px(),
        width: g.size_px(),
        channels: p
            .planes()
            .into_iter()
            .zip(classes)
            .map(|(plane, c)| Channel {
                name: format!("p:{};extent_m={}", c.name(), g.extent_m()),
                data: ChannelData::F32(plane),
            })
            .collect(),
    }
}

pub fn bevr_to_probs(r: &BevrRaster) -> Result<(ProbabilityMap, Vec<ClassId>), BevrError> {
    let first = r.channels.first().ok_or(RasterError::NoClasses)?;
    let extent = param(&first.name, "extent_m").ok_or_else(|| BevrError::BadChannel {
        name: first.name.clone(),
        reason: "missing parameter extent_m".into(),
    })?;
    let grid = square_grid(r, extent)?;
    let mut planes = Vec::new();
    let mut classes = Vec::new();
    for c in &r.channels {
        let label = c.name.split(';').next().and_then(|s| s.strip_prefix("p:"));
        let class = label.and_then(ClassId::from_name).ok_or_else(|| BevrError::BadChannel {
            name: c.name.clone(),
            reason: "expected p:<class>".into(),
        })?;
        let ChannelData::F32(v) = &c.data else {
            return Err(BevrError::BadChannel {
                name: c.name.clone(),
                reason: "expected f32 values".into(),
            });
        };
        planes.push(v.clone());
        classes.push(class);
    }
    Ok((ProbabilityMap::from_planes(grid, &planes)?, classes))
}

/// Class codes as a single u8 channel named `label;extent_m=<m>`.
pub fn mask_to_bevr(m: &SemanticMask) -> BevrRaster {
    let g = m.grid();
    BevrRaster {
        height: g.size_px(),
        width: g.size_px(),
        channels: vec![Channel {
            name: format!("label;extent_m={}", g.extent_m()),
            data: ChannelData::U8(m.data().iter().map(|c| c.code()).collect()),
        }],
    }
}

fn u8_channel<'a>(r: &'a BevrRaster, base: &str) -> Result<(&'a str, &'a [u8]), BevrError> {
    match r.channel_prefixed(base) {
        Some(Channel {
            name,
            data: ChannelData::U8(v),
        }) => Ok((name, v)),
        Some(c) => Err(BevrError::BadChannel {
            name: c.name.clone(),
            reason: "expected u8 values".into(),
        }),
        None => Err(BevrError::MissingChannel(base.into())),
    }
}

fn extent_of(name: &str) -> Result<f64, BevrError> {
    param(name, "extent_m").ok_or_else(|| BevrError::BadChannel {
        name: name.into(),
        reason: "missing parameter extent_m".into(),
    })
}

fn class_codes(name: &str, codes: &[u8]) -> Result<Vec<ClassId>, BevrError> {
    codes
        .iter()
        .map(|&c| {
            ClassId::new(c).map_err(|e| BevrError::BadChannel {
                name: name.into(),
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn bevr_to_mask(r: &BevrRaster) -> Result<SemanticMask, BevrError> {
    let (name, codes) = u8_channel(r, "label")?;
    let grid = square_grid(r, extent_of(name)?)?;
    Ok(Raster::from_vec(grid, class_codes(name, codes)?)?)
}

/// A boolean mask as a u8 channel of zeros and ones.
pub fn binary_to_bevr(m: &BinaryMask, name: &str) -> BevrRaster {
    let g = m.grid();
    BevrRaster {
        height: g.size_px(),
        width: g.size_px(),
        channels: vec![Channel {
            name: format!("{name};extent_m={}", g.extent_m()),
            data: ChannelData::U8(m.data().iter().map(|&b| b as u8).collect()),
        }],
    }
}

pub fn bevr_to_binary(r: &BevrRaster, name: &str) -> Result<BinaryMask, BevrError> {
    let (full, v) = u8_channel(r, name)?;
    let grid = square_grid(r, extent_of(full)?)?;
    if let Some(bad) = v.iter().find(|&&b| b > 1) {
        return Err(BevrError::BadChannel {
            name: full.into(),
            reason: format!("value {bad} is not 0 or 1"),
        });
    }
    Ok(Raster::from_vec(grid, v.iter().map(|&b| b == 1).collect())?)
}

/// Sparse labels and their support as f32 channels, exact below 2^24.
pub fn sparse_to_bevr(s: &SparseLabelRaster) -> BevrRaster {
    let g = s.grid();
    let chan = |name: String, v: Vec<f32>| Channel {
        name,
        data: ChannelData::F32(v),
    };
    BevrRaster {
        height: g.size_px(),
        width: g.size_px(),
        channels: vec![
            chan(
                format!("sparse_label;extent_m={}", g.extent_m()),
                s.label.data().iter().map(|c| c.code() as f32).collect(),
            ),
            chan("support".into(), s.support.data().iter().map(|&n| n as f32).collect()),
        ],
    }
}

pub fn bevr_to_sparse(r: &BevrRaster) -> Result<SparseLabelRaster, BevrError> {
    let (name, label) = f32_channel(r, "sparse_label")?;
    let (_, support) = f32_channel(r, "support")?;
    let grid = square_grid(r, extent_of(name)?)?;
    let codes: Vec<u8> = label.iter().map(|&v| v as u8).collect();
    Ok(SparseLabelRaster {
        label: Raster::from_vec(grid, class_codes(name, &codes)?)?,
        support: Raster::from_vec(grid, support.iter().map(|&v| v as u32).collect())?,
    })
}

/// A full-resolution image label plane, e.g. aerial ground truth.
pub fn label_image_to_bevr(l: &LabelImage) -> BevrRaster {
    BevrRaster {
        height: l.height(),
        width: l.width(),
        channels: vec![Channel {
            name: "label".into(),
            data: ChannelData::U8(l.data().iter().map(|c| c.code()).collect()),
        }],
    }
}

pub fn bevr_to_label_image(r: &BevrRaster) -> Result<LabelImage, BevrError> {
    let (name, codes) = u8_channel(r, "label")?;
    Plane::from_vec(r.width, r.height, class_codes(name, codes)?).map_err(|e| BevrError::BadChannel {
        name: name.into(),
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BevrRaster {
        BevrRaster {
            height: 2,
            width: 3,
            channels: vec![
                Channel {
                    name: "a".into(),
                    data: ChannelData::F32(vec![0.0, -1.5, f32::MAX, 1e-30, 7.0, f32::NAN]),
                },
                Channel {
                    name: "b;k=1".into(),
                    data: ChannelData::F32(vec![1.0; 6]),
                },
            ],
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let r = sample();
        let bytes = encode_bevr(&r).unwrap();
        let back = decode_bevr(&bytes).unwrap();
        assert_eq!(encode_bevr(&back).unwrap(), bytes);
        let ChannelData::F32(v) = &back.channels[0].data else { panic!() };
        assert!(v[5].is_nan());
    }

    #[test]
    fn distinct_errors() {
        let bytes = encode_bevr(&sample()).unwrap();
        let mut b = bytes.clone();
        b[0] = b'X';
        assert!(matches!(decode_bevr(&b), Err(BevrError::Read(ReadError::BadMagic { .. }))));
        let mut b = bytes.clone();
        b[4] = 9;
        assert!(matches!(decode_bevr(&b), Err(BevrError::Read(ReadError::Version { found: 9, .. }))));
        assert!(matches!(
            decode_bevr(&bytes[..bytes.len() - 1]),
            Err(BevrError::Read(ReadError::Truncated { .. }))
        ));
        let mut b = bytes.clone();
        let i = bytes.len() - 8 - 24 - 10;
        b[i] ^= 1;
        match decode_bevr(&b) {
            Err(BevrError::Read(ReadError::Checksum { section, .. })) => assert_eq!(section, "channel \"a\""),
            other => panic!("{other:?}"),
        }
        let mut b = bytes.clone();
        b.push(0);
        assert!(matches!(decode_bevr(&b), Err(BevrError::Read(ReadError::Trailing { .. }))));
    }

    #[test]
    fn rejects_ragged_channels() {
        let mut r = sample();
        r.channels[1].data = ChannelData::F32(vec![1.0; 5]);
        assert!(matches!(encode_bevr(&r), Err(BevrError::ChannelLength { index: 1, .. })));
        r.channels[1].data = ChannelData::U8(vec![1; 6]);
        assert_eq!(encode_bevr(&r), Err(BevrError::MixedDtypes));
    }

    #[test]
    fn lidar_round_trip() {
        let g = BevGridSpec::new(4.2, 6).unwrap();
        let pts: Vec<_> = (0..20)
            .map(|i| crate::sensors::LidarPoint {
                x: i as f32 * 0.1 - 1.0,
                y: 0.3,
                z: i as f32 * 0.2,
                intensity: 0.0,
                t_us: 0,
                class: ClassId::IGNORE,
            })
            .collect();
        let r = crate::bevraster::rasterize_lidar([&pts[..]], g, &LidarRasterParams::default());
        let back = bevr_to_lidar(&decode_bevr(&encode_bevr(&lidar_to_bevr(&r)).unwrap()).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn probs_round_trip() {
        let g = BevGridSpec::new(1.0, 2).unwrap();
        let p = ProbabilityMap::new(g, 2, vec![0.25, 0.75, 1.0, 0.0, 0.5, 0.5, 0.1, 0.9]).unwrap();
        let classes = [ClassId::ROAD, ClassId::TREE];
        let (back, c) = bevr_to_probs(&decode_bevr(&encode_bevr(&probs_to_bevr(&p, &classes)).unwrap()).unwrap()).unwrap();
        assert_eq!(back, p);
        assert_eq!(c, classes);
    }

    #[test]
    fn mask_sparse_and_binary_round_trip() {
        let g = BevGridSpec::new(0.3, 3).unwrap();
        let codes = [0u8, 1, 2, 3, 4, 254, 255, 0, 1];
        let m = Raster::from_vec(g, codes.iter().map(|&c| ClassId::new(c).unwrap()).collect()).unwrap();
        let back = bevr_to_mask(&decode_bevr(&encode_bevr(&mask_to_bevr(&m)).unwrap()).unwrap()).unwrap();
        assert_eq!(back, m);
        let b = m.map(|c| c.is_trainable());
        assert_eq!(bevr_to_binary(&binary_to_bevr(&b, "valid"), "valid").unwrap(), b);
        let s = SparseLabelRaster {
            label: m.map(|c| if c.is_trainable() { c } else { ClassId::IGNORE }),
            support: Raster::from_fn(g, |r, c| (r * 3 + c) as u32 * 1000),
        };
        assert_eq!(bevr_to_sparse(&sparse_to_bevr(&s)).unwrap(), s);
        let l = Plane::from_vec(3, 2, vec![ClassId::ROAD; 6]).unwrap();
        assert_eq!(bevr_to_label_image(&label_image_to_bevr(&l)).unwrap(), l);
    }
}
