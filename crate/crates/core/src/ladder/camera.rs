use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec::Exec;

/// Camera quality levels in vertical pixels, highest first.
pub const CAMERA_LADDER: [u32; 8] = [2160, 1080, 720, 540, 360, 270, 180, 135];

const LANCZOS_LOBES: f64 = 3.0;

/// 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if data.len() != width as usize * height as usize * 3 {
            return Err(Error::invalid(format!(
                "{}x{} RGB image needs {} bytes, got {}",
                width,
                height,
                width as usize * height as usize * 3,
                data.len()
            )));
        }
        Ok(RasterImage { width, height, data })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let data = rgb.repeat(width as usize * height as usize);
        RasterImage { width, height, data }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

fn ladder_width(height: u32) -> u32 {
    height * 16 / 9
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

fn lanczos(x: f64) -> f64 {
    if x.abs() < LANCZOS_LOBES {
        sinc(x) * sinc(x / LANCZOS_LOBES)
    } else {
        0.0
    }
}

// Normalized filter taps for each output coordinate: (first source index, weights).
fn taps(src: usize, dst: usize) -> Vec<(usize, Vec<f32>)> {
    let ratio = src as f64 / dst as f64;
    let scale = ratio.max(1.0);
    let support = LANCZOS_LOBES * scale;
    (0..dst)
        .map(|i| {
            let center = (i as f64 + 0.5) * ratio;
            let left = ((center - support).floor().max(0.0)) as usize;
            let right = ((center + support).ceil() as usize).min(src);
            let w: Vec<f64> = (left..right)
                .map(|j| lanczos((j as f64 + 0.5 - center) / scale))
                .collect();
            let sum: f64 = w.iter().sum();
            (left, w.iter().map(|v| (v / sum) as f32).collect())
        })
        .collect()
}

fn lanczos_resize(img: &RasterImage, w: u32, h: u32, exec: Exec) -> RasterImage {
    let (sw, sh) = (img.width as usize, img.height as usize);
    let (w, h) = (w as usize, h as usize);

    // horizontal pass into a float buffer of sh rows × w columns
    let htaps = taps(sw, w);
    let mut mid = vec![0f32; sh * w * 3];
    exec.for_each_chunk_mut(&mut mid, w * 3, |y, row| {
        let src = &img.data[y * sw * 3..(y + 1) * sw * 3];
        for (x, (left, weights)) in htaps.iter().enumerate() {
            let mut acc = [0f32; 3];
            for (k, wt) in weights.iter().enumerate() {
                let s = (left + k) * 3;
                for c in 0..3 {
                    acc[c] += wt * src[s + c] as f32;
                }
            }
            row[x * 3..x * 3 + 3].copy_from_slice(&acc);
        }
    });

    let vtaps = taps(sh, h);
    let mut out = vec![0u8; w * h * 3];
    exec.for_each_chunk_mut(&mut out, w * 3, |y, row| {
        let (top, weights) = &vtaps[y];
        for x in 0..w * 3 {
            let mut acc = 0f32;
            for (k, wt) in weights.iter().enumerate() {
                acc += wt * mid[(top + k) * w * 3 + x];
            }
            row[x] = acc.round().clamp(0.0, 255.0) as u8;
        }
    });
    RasterImage {
        width: w as u32,
        height: h as u32,
        data: out,
    }
}

fn nearest_resize(img: &RasterImage, w: u32, h: u32, exec: Exec) -> RasterImage {
    let (sw, sh) = (img.width as u64, img.height as u64);
    let mut out = vec![0u8; w as usize * h as usize * 3];
    exec.for_each_chunk_mut(&mut out, w as usize * 3, |y, row| {
        let sy = (y as u64 * sh / h as u64) as usize;
        for x in 0..w as usize {
            let sx = (x as u64 * sw / w as u64) as usize;
            let s = (sy * sw as usize + sx) * 3;
            row[x * 3..x * 3 + 3].copy_from_slice(&img.data[s..s + 3]);
        }
    });
    RasterImage {
        width: w,
        height: h,
        data: out,
    }
}

/// Resample a 16:9 frame to a ladder height: nearest neighbour when
/// upsampling, Lanczos-3 when downsampling, a copy when the height already
/// matches. Output width is `target_height · 16 / 9`.
pub fn resample_image(img: &RasterImage, target_height: u32, exec: Exec) -> Result<RasterImage> {
    if !CAMERA_LADDER.contains(&target_height) {
        return Err(Error::NotInLadder(target_height));
    }
    if img.width as u64 * 9 != img.height as u64 * 16 {
        return Err(Error::invalid(format!(
            "source image {}x{} is not 16:9",
            img.width, img.height
        )));
    }
    let target_width = ladder_width(target_height);
    Ok(if target_height > img.height {
        nearest_resize(img, target_width, target_height, exec)
    } else if target_height < img.height {
        lanczos_resize(img, target_width, target_height, exec)
    } else {
        img.clone()
    })
}
