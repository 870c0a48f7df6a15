//! Decoded RGB images used as background fills and wavy-water height maps.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear RGB texels in [0,1], row-major from the top-left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Texture {
    pub width: u32,
    pub height: u32,
    pub texels: Vec<[f32; 3]>,
}

impl Texture {
    pub fn from_rgb8(width: u32, height: u32, data: &[u8]) -> Result<Texture> {
        if width == 0 || height == 0 || data.len() != (width * height * 3) as usize {
            return Err(Error::decode("texture", "dimension/data mismatch"));
        }
        let texels = data
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]].map(|b| b as f32 / 255.0))
            .collect();
        Ok(Texture {
            width,
            height,
            texels,
        })
    }

    pub fn load_png(path: &Path) -> Result<Texture> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        let mut decoder = png::Decoder::new(std::io::BufReader::new(file));
        decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
        let mut reader = decoder
            .read_info()
            .map_err(|e| Error::decode(path.display().to_string(), e.to_string()))?;
        let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
        let info = reader
            .next_frame(&mut buf)
            .map_err(|e| Error::decode(path.display().to_string(), e.to_string()))?;
        let buf = &buf[..info.buffer_size()];
        let rgb: Vec<u8> = match info.color_type {
            png::ColorType::Rgb => buf.to_vec(),
            png::ColorType::Rgba => buf.chunks_exact(4).flat_map(|c| [c[0], c[1], c[2]]).collect(),
            png::ColorType::Grayscale => buf.iter().flat_map(|&g| [g, g, g]).collect(),
            png::ColorType::GrayscaleAlpha => {
                buf.chunks_exact(2).flat_map(|c| [c[0], c[0], c[0]]).collect()
            }
            png::ColorType::Indexed => {
                return Err(Error::decode(path.display().to_string(), "unexpanded palette"))
            }
        };
        Texture::from_rgb8(info.width, info.height, &rgb)
    }

    pub fn texel(&self, x: u32, y: u32) -> [f32; 3] {
        self.texels[(y * self.width + x) as usize]
    }

    /// Nearest texel for normalized coordinates in [0,1)², clamped at the edges.
    pub fn sample_nearest(&self, u: f64, v: f64) -> [f32; 3] {
        let x = ((u * self.width as f64) as i64).clamp(0, self.width as i64 - 1) as u32;
        let y = ((v * self.height as f64) as i64).clamp(0, self.height as i64 - 1) as u32;
        self.texel(x, y)
    }

    /// Bilinear luminance with wrap-around addressing; `u`, `v` in texel units.
    pub fn luminance_wrapped(&self, u: f64, v: f64) -> f64 {
        let (w, h) = (self.width as i64, self.height as i64);
        let (fu, fv) = (u - 0.5, v - 0.5);
        let (x0, y0) = (fu.floor(), fv.floor());
        let (tx, ty) = (fu - x0, fv - y0);
        let lum = |x: i64, y: i64| {
            let t = self.texel(x.rem_euclid(w) as u32, y.rem_euclid(h) as u32);
            0.2126 * t[0] as f64 + 0.7152 * t[1] as f64 + 0.0722 * t[2] as f64
        };
        let (x0, y0) = (x0 as i64, y0 as i64);
        let a = lum(x0, y0) * (1.0 - tx) + lum(x0 + 1, y0) * tx;
        let b = lum(x0, y0 + 1) * (1.0 - tx) + lum(x0 + 1, y0 + 1) * tx;
        a * (1.0 - ty) + b * ty
    }
}
