//! Lossless image encodings for the frame buffers.
//!
//! * color: 8-bit RGB PNG
//! * depth, normal: PFM (`Pf` one channel, `PF` three), little-endian
//!   (scale −1.0), rows stored bottom to top as the format requires
//! * ID channels: binary PGM (`P5`), maxval 65535, big-endian samples

use crate::error::{Error, Result};
use crate::render::FrameBuffers;

/// File suffixes of the encoded channels, in [`encode_buffers`] order.
pub const CHANNEL_SUFFIXES: [&str; 6] = ["png", "depth.pfm", "normal.pfm", "inst.pgm", "sem.pgm", "fine.pgm"];

/// One encoded channel and the suffix it is stored under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileBlob {
    pub suffix: &'static str,
    pub bytes: Vec<u8>,
}

pub fn encode_png_rgb8(width: u32, height: u32, pixels: &[[u8; 3]]) -> Result<Vec<u8>> {
    let err = |e: png::EncodingError| Error::Encode {
        channel: "color".into(),
        message: e.to_string(),
    };
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(err)?;
        writer.write_image_data(pixels.as_flattened()).map_err(err)?;
        writer.finish().map_err(err)?;
    }
    Ok(out)
}

pub fn decode_png_rgb8(bytes: &[u8]) -> Result<(u32, u32, Vec<[u8; 3]>)> {
    let err = |e: png::DecodingError| Error::decode("PNG", e.to_string());
    let mut reader = png::Decoder::new(std::io::Cursor::new(bytes)).read_info().map_err(err)?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf).map_err(err)?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::decode("PNG", format!("expected 8-bit RGB, got {:?} {:?}", info.color_type, info.bit_depth)));
    }
    let pixels = buf[..info.buffer_size()]
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    Ok((info.width, info.height, pixels))
}

/// `channels` is 1 or 3; `samples` is row-major top to bottom.
pub fn encode_pfm(width: u32, height: u32, channels: usize, samples: &[f32]) -> Vec<u8> {
    let tag = if channels == 3 { "PF" } else { "Pf" };
    let mut out = format!("{tag}\n{width} {height}\n-1.0\n").into_bytes();
    let row = width as usize * channels;
    for r in samples.chunks_exact(row).rev() {
        for s in r {
            out.extend_from_slice(&s.to_le_bytes());
        }
    }
    out
}

/// Splits a PNM-style header into `count` whitespace-separated tokens and
/// returns them with the offset of the first data byte.
fn header_tokens(bytes: &[u8], count: usize, what: &str) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::new();
    let mut pos = 0;
    while tokens.len() < count {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
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
            return Err(Error::decode(what, "truncated header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // Exactly one whitespace byte separates the header from the data.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::decode(what, "missing data"));
    }
    Ok((tokens, pos + 1))
}

fn parse_dim(s: &str, what: &str) -> Result<u32> {
    s.parse()
        .map_err(|_| Error::decode(what, format!("bad dimension '{s}'")))
}

/// Returns `(width, height, channels, samples)` with rows top to bottom.
pub fn decode_pfm(bytes: &[u8]) -> Result<(u32, u32, usize, Vec<f32>)> {
    let (t, data_start) = header_tokens(bytes, 4, "PFM")?;
    let channels = match t[0].as_str() {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(Error::decode("PFM", format!("bad magic '{other}'"))),
    };
    let (w, h) = (parse_dim(&t[1], "PFM")?, parse_dim(&t[2], "PFM")?);
    let scale: f32 = t[3]
        .parse()
        .map_err(|_| Error::decode("PFM", format!("bad scale '{}'", t[3])))?;
    let little = scale < 0.0;
    let row = w as usize * channels;
    let data = &bytes[data_start..];
    if data.len() != row * h as usize * 4 {
        return Err(Error::decode("PFM", format!("expected {} data bytes, found {}", row * h as usize * 4, data.len())));
    }
    let values: Vec<f32> = data
        .chunks_exact(4)
        .map(|b| {
            let b = [b[0], b[1], b[2], b[3]];
            if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) }
        })
        .collect();
    let samples = if row == 0 {
        Vec::new()
    } else {
        values.chunks_exact(row).rev().flatten().copied().collect()
    };
    Ok((w, h, channels, samples))
}

pub fn encode_pgm16(width: u32, height: u32, samples: &[u16]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    for s in samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

pub fn decode_pgm16(bytes: &[u8]) -> Result<(u32, u32, Vec<u16>)> {
    let (t, data_start) = header_tokens(bytes, 4, "PGM")?;
    if t[0] != "P5" {
        return Err(Error::decode("PGM", format!("bad magic '{}'", t[0])));
    }
    if t[3] != "65535" {
        return Err(Error::decode("PGM", format!("expected maxval 65535, got {}", t[3])));
    }
    let (w, h) = (parse_dim(&t[1], "PGM")?, parse_dim(&t[2], "PGM")?);
    let data = &bytes[data_start..];
    if data.len() != w as usize * h as usize * 2 {
        return Err(Error::decode("PGM", format!("expected {} data bytes, found {}", w as usize * h as usize * 2, data.len())));
    }
    Ok((w, h, data.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect()))
}

/// Encodes all six channels, in [`CHANNEL_SUFFIXES`] order.
pub fn encode_buffers(fb: &FrameBuffers) -> Result<Vec<FileBlob>> {
    let (w, h) = (fb.width, fb.height);
    let normals: Vec<f32> = fb.normal.iter().flatten().copied().collect();
    let bytes = [
        encode_png_rgb8(w, h, &fb.color)?,
        encode_pfm(w, h, 1, &fb.depth),
        encode_pfm(w, h, 3, &normals),
        encode_pgm16(w, h, &fb.instance),
        encode_pgm16(w, h, &fb.semantic),
        encode_pgm16(w, h, &fb.fine_grained),
    ];
    Ok(CHANNEL_SUFFIXES
        .iter()
        .zip(bytes)
        .map(|(&suffix, bytes)| FileBlob { suffix, bytes })
        .collect())
}

/// Inverse of [`encode_buffers`].
pub fn decode_buffers(blobs: &[FileBlob]) -> Result<FrameBuffers> {
    let get = |suffix: &str| {
        blobs
            .iter()
            .find(|b| b.suffix == suffix)
            .map(|b| b.bytes.as_slice())
            .ok_or_else(|| Error::decode("frame", format!("missing channel {suffix}")))
    };
    let (w, h, color) = decode_png_rgb8(get("png")?)?;
    let mut fb = FrameBuffers::blank(w, h);
    fb.color = color;
    let check = |what: &str, dims: (u32, u32)| {
        if dims == (w, h) {
            Ok(())
        } else {
            Err(Error::decode(what, format!("size {dims:?} differs from color {w}×{h}")))
        }
    };
    let (dw, dh, dc, depth) = decode_pfm(get("depth.pfm")?)?;
    check("depth", (dw, dh))?;
    let (nw, nh, nc, normal) = decode_pfm(get("normal.pfm")?)?;
    check("normal", (nw, nh))?;
    if dc != 1 || nc != 3 {
        return Err(Error::decode("frame", "depth must have 1 channel and normal 3"));
    }
    fb.depth = depth;
    fb.normal = normal.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    for (suffix, slot) in [
        ("inst.pgm", &mut fb.instance),
        ("sem.pgm", &mut fb.semantic),
        ("fine.pgm", &mut fb.fine_grained),
    ] {
        let (pw, ph, ids) = decode_pgm16(get(suffix)?)?;
        check(suffix, (pw, ph))?;
        *slot = ids;
    }
    Ok(fb)
}
