//! Point-cloud files.
//!
//! ```text
//! magic "GBPC" | u16 version | u16 sensor_id_len | sensor_id | u64 count
//! count × (f32 x | f32 y | f32 z | f32 intensity | u64 t_us | u8 class)
//! u32 crc32 of everything above
//! ```
//!
//! Class 255 marks unlabeled points, so labeled and unlabeled sweeps share
//! one layout.

use thiserror::Error;

use super::reader::{ByteReader, ReadError};
use crate::sensors::{LidarPoint, LidarSweep};
use crate::taxonomy::{ClassId, InvalidClass};

pub const PCLD_MAGIC: &[u8; 4] = b"GBPC";
pub const PCLD_VERSION: u16 = 1;
const RECORD_BYTES: usize = 25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PointCloudError {
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error("point {index}: {source}")]
    Class { index: usize, source: InvalidClass },
    #[error("sensor id longer than 65535 bytes")]
    SensorIdTooLong,
}

pub fn encode_point_cloud(sweep: &LidarSweep) -> Result<Vec<u8>, PointCloudError> {
    if sweep.sensor_id.len() > u16::MAX as usize {
        return Err(PointCloudError::SensorIdTooLong);
    }
    let mut out = Vec::with_capacity(20 + sweep.sensor_id.len() + sweep.points.len() * RECORD_BYTES);
    out.extend_from_slice(PCLD_MAGIC);
    out.extend_from_slice(&PCLD_VERSION.to_le_bytes());
    out.extend_from_slice(&(sweep.sensor_id.len() as u16).to_le_bytes());
    out.extend_from_slice(sweep.sensor_id.as_bytes());
    out.extend_from_slice(&(sweep.points.len() as u64).to_le_bytes());
    for p in &sweep.points {
        for v in [p.x, p.y, p.z, p.intensity] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&p.t_us.to_le_bytes());
        out.push(p.class.code());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

pub fn decode_point_cloud(bytes: &[u8]) -> Result<LidarSweep, PointCloudError> {
    let mut rd = ByteReader::new(bytes);
    rd.magic(PCLD_MAGIC)?;
    rd.version(PCLD_VERSION)?;
    let sensor_id = rd.string_u16()?;
    let count_offset = rd.offset();
    let count = rd.u64()?;
    let body = count
        .checked_mul(RECORD_BYTES as u64)
        .filter(|&b| b <= (bytes.len() - rd.offset()) as u64)
        .ok_or(ReadError::Truncated {
            offset: count_offset,
            needed: RECORD_BYTES,
        })?;
    let mut records = ByteReader::new(rd.take(body as usize)?);
    rd.check_crc("file", 0)?;
    rd.finish()?;
    let mut points = Vec::with_capacity(count as usize);
    for index in 0..count as usize {
        let x = records.f32()?;
        let y = records.f32()?;
        let z = records.f32()?;
        let intensity = records.f32()?;
        let t_us = records.u64()?;
        let class = ClassId::new(records.u8()?).map_err(|source| PointCloudError::Class { index, source })?;
        points.push(LidarPoint {
            x,
            y,
            z,
            intensity,
            t_us,
            class,
        });
    }
    Ok(LidarSweep { sensor_id, points })
}
