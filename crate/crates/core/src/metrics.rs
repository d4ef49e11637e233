//! Image, depth and mask metrics over masked pixels.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::math::Vec3;

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

pub const PSNR_CAP: f64 = 99.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("{what}: expected {expected} values, got {got}")]
    SizeMismatch { what: &'static str, expected: usize, got: usize },
}

fn check(what: &'static str, expected: usize, got: usize) -> Result<(), MetricsError> {
    if expected != got {
        return Err(MetricsError::SizeMismatch { what, expected, got });
    }
    Ok(())
}

/// Mean squared error over every channel of the pixels where `mask` is set
/// (all pixels without a mask). Zero when no pixel is selected.
pub fn mse(pred: &[f64], gt: &[f64], channels: usize, mask: Option<&[bool]>) -> Result<f64, MetricsError> {
    check("ground truth", pred.len(), gt.len())?;
    if let Some(m) = mask {
        check("mask", pred.len() / channels.max(1), m.len())?;
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, (p, g)) in pred.chunks(channels).zip(gt.chunks(channels)).enumerate() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        for (a, b) in p.iter().zip(g) {
            sum += (a - b) * (a - b);
        }
        count += channels;
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// `−10 log10(MSE)` for unit-range signals, capped at 99 dB.
pub fn psnr(pred: &[f64], gt: &[f64], channels: usize, mask: Option<&[bool]>) -> Result<f64, MetricsError> {
    Ok(psnr_from_mse(mse(pred, gt, channels, mask)?))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP;
    }
    (-10.0 * mse.log10()).min(PSNR_CAP)
}

pub fn flatten(rgb: &[Vec3]) -> Vec<f64> {
    rgb.iter().flat_map(|c| c.to_array()).collect()
}

/// Mean absolute depth error over masked pixels.
pub fn depth_mae(pred: &[f64], gt: &[f64], mask: &[bool]) -> Result<f64, MetricsError> {
    check("ground truth", pred.len(), gt.len())?;
    check("mask", pred.len(), mask.len())?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for ((p, g), m) in pred.iter().zip(gt).zip(mask) {
        if *m {
            sum += (p - g).abs();
            n += 1;
        }
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// IoU of `pred ≥ 0.5` against the ground-truth mask; 1 when both are empty.
pub fn mask_iou(pred: &[f64], gt: &[bool]) -> Result<f64, MetricsError> {
    check("ground truth", pred.len(), gt.len())?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (p, g) in pred.iter().zip(gt) {
        let a = *p >= 0.5;
        inter += usize::from(a && *g);
        union += usize::from(a || *g);
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FrameMetrics {
    pub frame: usize,
    pub psnr: f64,
    pub mse: f64,
    pub depth_mae: f64,
    pub iou: f64,
}

/// Per-frame metrics and their means.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub frames: Vec<FrameMetrics>,
}

impl MetricsReport {
    /// Component-wise mean over frames (`frame` is the frame count).
    pub fn aggregate(&self) -> FrameMetrics {
        let n = self.frames.len().max(1) as f64;
        let mut a = FrameMetrics { frame: self.frames.len(), ..FrameMetrics::default() };
        for f in &self.frames {
            a.psnr += f.psnr / n;
            a.mse += f.mse / n;
            a.depth_mae += f.depth_mae / n;
            a.iou += f.iou / n;
        }
        a
    }

    pub fn csv(&self) -> alloc::string::String {
        use core::fmt::Write;
        let mut s = alloc::string::String::from("frame,psnr,mse,depth_mae,iou\n");
        for f in &self.frames {
            let _ = writeln!(s, "{},{:.6},{:.8},{:.6},{:.6}", f.frame, f.psnr, f.mse, f.depth_mae, f.iou);
        }
        let a = self.aggregate();
        let _ = writeln!(s, "mean,{:.6},{:.8},{:.6},{:.6}", a.psnr, a.mse, a.depth_mae, a.iou);
        s
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>8} {:>9} {:>11} {:>10} {:>7}", "frame", "PSNR", "MSE", "depth MAE", "IoU")?;
        for m in &self.frames {
            writeln!(f, "{:>8} {:>9.3} {:>11.6} {:>10.5} {:>7.4}", m.frame, m.psnr, m.mse, m.depth_mae, m.iou)?;
        }
        let a = self.aggregate();
        write!(f, "{:>8} {:>9.3} {:>11.6} {:>10.5} {:>7.4}", "mean", a.psnr, a.mse, a.depth_mae, a.iou)
    }
}
