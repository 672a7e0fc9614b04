//! 8-bit PNG I/O for [`ImageF`].
//!
//! Samples map to `v / 255` on decode and back via clamp, scale by 255, and
//! round half away from zero on encode. Alpha is dropped; palette and sub-byte
//! images are expanded to 8-bit; 16-bit files are rejected.

use std::io::Cursor;

use png::{BitDepth, ColorType, Transformations};

use crate::error::{Error, Result};
use crate::image::ImageF;

pub fn decode_png(bytes: &[u8]) -> Result<ImageF> {
    let mut cursor = Cursor::new(bytes);
    let decode_err = |cursor: &Cursor<&[u8]>, e: png::DecodingError| Error::Decode {
        offset: cursor.position(),
        message: e.to_string(),
    };

    let mut decoder = png::Decoder::new(&mut cursor);
    decoder.set_transformations(Transformations::EXPAND);
    let reader = decoder.read_info();
    let mut reader = match reader {
        Ok(r) => r,
        Err(e) => return Err(decode_err(&cursor, e)),
    };

    if reader.info().bit_depth == BitDepth::Sixteen {
        return Err(Error::UnsupportedFormat(
            "16-bit PNG; only 8-bit samples are supported".into(),
        ));
    }

    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::UnsupportedFormat("image too large to buffer".into()))?;
    let mut buf = vec![0u8; size];
    let frame = match reader.next_frame(&mut buf) {
        Ok(f) => f,
        Err(e) => {
            drop(reader);
            return Err(decode_err(&cursor, e));
        }
    };
    if frame.bit_depth != BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!(
            "unexpected output bit depth {:?}",
            frame.bit_depth
        )));
    }

    let (src_channels, keep) = match frame.color_type {
        ColorType::Grayscale => (1, 1),
        ColorType::GrayscaleAlpha => (2, 1),
        ColorType::Rgb => (3, 3),
        ColorType::Rgba => (4, 3),
        ColorType::Indexed => {
            return Err(Error::UnsupportedFormat(
                "palette image was not expanded".into(),
            ))
        }
    };

    let (w, h) = (frame.width as usize, frame.height as usize);
    let mut data = Vec::with_capacity(w * h * keep);
    for row in buf.chunks(frame.line_size).take(h) {
        for px in row[..w * src_channels].chunks_exact(src_channels) {
            data.extend(px[..keep].iter().map(|&b| f64::from(b) / 255.0));
        }
    }
    ImageF::new(h, w, keep, data)
}

/// Maps one sample to its 8-bit code.
#[inline]
pub fn to_byte(v: f64) -> u8 {
    // f64::round is half-away-from-zero.
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_png(img: &ImageF) -> Result<Vec<u8>> {
    let color = match img.channels() {
        1 => ColorType::Grayscale,
        _ => ColorType::Rgb,
    };
    let bytes: Vec<u8> = img.data().iter().map(|&v| to_byte(v)).collect();

    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        encoder.set_color(color);
        encoder.set_depth(BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Encode(e.to_string()))?;
        writer
            .write_image_data(&bytes)
            .map_err(|e| Error::Encode(e.to_string()))?;
        writer.finish().map_err(|e| Error::Encode(e.to_string()))?;
    }
    Ok(out)
}
