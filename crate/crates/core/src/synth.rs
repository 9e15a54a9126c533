//! Analytic test images and geometric resampling.
//!
//! Coordinates: `x` is the column, `y` the row, the centre is pixel
//! `(N/2, N/2)` and angles are measured from `+x` towards `+y`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{EqwsError, Result};
use crate::fft::{signed_frequency, Fft2d};
use crate::image::ImageField;

pub const FWHM_PER_SIGMA: f64 = 2.355;

fn check_side(side: usize) -> Result<()> {
    if side < 2 || !side.is_power_of_two() {
        return Err(EqwsError::InvalidParams(format!("side {side} is not a power of two")));
    }
    Ok(())
}

fn check_fwhm(fwhm: f64) -> Result<()> {
    if !(fwhm.is_finite() && fwhm > 0.0) {
        return Err(EqwsError::InvalidParams(format!("fwhm must be positive, got {fwhm}")));
    }
    Ok(())
}

fn gaussian_of_distance(d2: f64, fwhm: f64) -> f64 {
    let sigma = fwhm / FWHM_PER_SIGMA;
    (-d2 / (2.0 * sigma * sigma)).exp()
}

/// Squared distance from `p` to the segment `a -> b`.
fn segment_distance2(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (ex, ey) = (p.0 - a.0 - t * dx, p.1 - a.1 - t * dy);
    ex * ex + ey * ey
}

/// Two rods sharing one end at the centre, at angles `sigma ± delta / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RodSpec {
    #[serde(rename = "sigmaAngle")]
    pub sigma_angle: f64,
    #[serde(rename = "openingAngle")]
    pub opening_angle: f64,
    #[serde(rename = "armLength")]
    pub arm_length: f64,
    pub fwhm: f64,
    pub side: usize,
}

impl Default for RodSpec {
    fn default() -> Self {
        RodSpec {
            sigma_angle: 0.0,
            opening_angle: 180.0,
            arm_length: 40.0,
            fwhm: 6.0,
            side: 256,
        }
    }
}

pub fn make_rod(spec: &RodSpec) -> Result<ImageField> {
    check_side(spec.side)?;
    check_fwhm(spec.fwhm)?;
    let half = (spec.side / 2) as f64;
    if !(spec.arm_length >= 0.0 && spec.arm_length < half) {
        return Err(EqwsError::InvalidParams(format!(
            "arm length must lie in [0, N/2), got {}",
            spec.arm_length
        )));
    }
    let c = (half, half);
    let ends: Vec<(f64, f64)> = [1.0, -1.0]
        .iter()
        .map(|s| {
            let a = (spec.sigma_angle + s * spec.opening_angle / 2.0)
                .rem_euclid(360.0)
                .to_radians();
            (c.0 + spec.arm_length * a.cos(), c.1 + spec.arm_length * a.sin())
        })
        .collect();
    ImageField::from_fn(spec.side, |x, y| {
        let p = (x as f64, y as f64);
        let d2 = segment_distance2(p, c, ends[0]).min(segment_distance2(p, c, ends[1]));
        gaussian_of_distance(d2, spec.fwhm)
    })
}

/// A rod of length `rod_length` bent into a circular arc of curvature
/// `2 pi f_bend / rod_length`; `f_bend = 1` closes it into a ring. The arc
/// midpoint sits at the centre with its tangent along `sigma`; the centre
/// of curvature lies at `sigma + 90°`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSpec {
    #[serde(rename = "fBend")]
    pub f_bend: f64,
    #[serde(rename = "sigmaAngle")]
    pub sigma_angle: f64,
    #[serde(rename = "rodLength")]
    pub rod_length: f64,
    pub fwhm: f64,
    pub side: usize,
}

impl Default for ArcSpec {
    fn default() -> Self {
        ArcSpec {
            f_bend: 1.0,
            sigma_angle: 0.0,
            rod_length: 20.0,
            fwhm: 6.0,
            side: 256,
        }
    }
}

pub fn make_arc(spec: &ArcSpec) -> Result<ImageField> {
    check_side(spec.side)?;
    check_fwhm(spec.fwhm)?;
    if !(spec.f_bend > 0.0 && spec.f_bend <= 1.0) {
        return Err(EqwsError::InvalidParams(format!(
            "fBend must lie in (0, 1], got {}",
            spec.f_bend
        )));
    }
    if !(spec.rod_length > 0.0 && spec.rod_length < spec.side as f64) {
        return Err(EqwsError::InvalidParams("rod length must lie in (0, N)".into()));
    }
    let half = (spec.side / 2) as f64;
    let radius = spec.rod_length / (2.0 * std::f64::consts::PI * spec.f_bend);
    let normal = (spec.sigma_angle + 90.0).to_radians();
    let centre = (half + radius * normal.cos(), half + radius * normal.sin());
    // Polar angle of the arc midpoint as seen from the centre of curvature.
    let base = normal + std::f64::consts::PI;
    let half_span = spec.rod_length / (2.0 * radius);
    let end = |s: f64| {
        let a = base + s * half_span;
        (centre.0 + radius * a.cos(), centre.1 + radius * a.sin())
    };
    let (e1, e2) = (end(1.0), end(-1.0));
    ImageField::from_fn(spec.side, |x, y| {
        let (vx, vy) = (x as f64 - centre.0, y as f64 - centre.1);
        let rel =
            (vy.atan2(vx) - base + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
        let d2 = if rel.abs() <= half_span {
            let d = vx.hypot(vy) - radius;
            d * d
        } else {
            let p = (x as f64, y as f64);
            let d1 = (p.0 - e1.0).powi(2) + (p.1 - e1.1).powi(2);
            let d2 = (p.0 - e2.0).powi(2) + (p.1 - e2.1).powi(2);
            d1.min(d2)
        };
        gaussian_of_distance(d2, spec.fwhm)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscSpec {
    pub radius: f64,
    pub fwhm: f64,
    pub side: usize,
}

/// Hard disc about the centre, blurred by a Gaussian applied in the
/// Fourier domain.
pub fn make_disc(spec: &DiscSpec) -> Result<ImageField> {
    check_side(spec.side)?;
    if !(spec.radius.is_finite() && spec.radius > 0.0) {
        return Err(EqwsError::InvalidParams("disc radius must be positive".into()));
    }
    if !(spec.fwhm.is_finite() && spec.fwhm >= 0.0) {
        return Err(EqwsError::InvalidParams("fwhm must be non-negative".into()));
    }
    let n = spec.side;
    let half = (n / 2) as f64;
    let r2 = spec.radius * spec.radius;
    let hard = ImageField::from_fn(n, |x, y| {
        let (dx, dy) = (x as f64 - half, y as f64 - half);
        if dx * dx + dy * dy <= r2 {
            1.0
        } else {
            0.0
        }
    })?;
    if spec.fwhm == 0.0 {
        return Ok(hard);
    }
    let sigma = spec.fwhm / FWHM_PER_SIGMA;
    let fft = Fft2d::new(n);
    let mut scratch = fft.make_scratch();
    let mut spec_buf = fft.forward_real(hard.data(), &mut scratch);
    let k = -2.0 * (std::f64::consts::PI * sigma / n as f64).powi(2);
    for (i, z) in spec_buf.iter_mut().enumerate() {
        let kx = signed_frequency(i % n, n) as f64;
        let ky = signed_frequency(i / n, n) as f64;
        *z *= (k * (kx * kx + ky * ky)).exp();
    }
    fft.inverse(&mut spec_buf, &mut scratch);
    // The truncated Gaussian rings slightly below zero next to sharp edges.
    ImageField::new(n, spec_buf.iter().map(|z| z.re.max(0.0)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Fill {
    #[default]
    Zero,
    Mean,
}

/// Radial Tukey window weight at distance `rho` from the centre.
pub fn tukey_weight(rho: f64, alpha: f64, side: usize) -> f64 {
    let half = side as f64 / 2.0;
    let flat = (1.0 - alpha) * half;
    if rho <= flat {
        1.0
    } else if rho >= half {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (rho - flat) / (alpha * half)).cos())
    }
}

/// Blends each pixel toward `fill` with a radial Tukey window.
pub fn apodize(img: &ImageField, alpha: f64, fill: Fill) -> Result<ImageField> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(EqwsError::InvalidParams(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let n = img.side();
    let half = (n / 2) as f64;
    let mut out = Vec::with_capacity(img.data().len());
    for c in 0..img.channels() {
        let ch = img.channel(c);
        let value = match fill {
            Fill::Zero => 0.0,
            Fill::Mean => ch.iter().sum::<f64>() / ch.len() as f64,
        };
        for y in 0..n {
            for x in 0..n {
                let rho = (x as f64 - half).hypot(y as f64 - half);
                let w = tukey_weight(rho, alpha, n);
                let v = ch[y * n + x];
                out.push(if w == 1.0 { v } else { value + w * (v - value) });
            }
        }
    }
    ImageField::with_channels(n, img.channels(), out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Bilinear,
    #[default]
    Bicubic,
    Lanczos3,
}

impl std::str::FromStr for Interpolation {
    type Err = EqwsError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(Interpolation::Bilinear),
            "bicubic" => Ok(Interpolation::Bicubic),
            "lanczos3" => Ok(Interpolation::Lanczos3),
            other => Err(EqwsError::InvalidParams(format!("unknown interpolation {other:?}"))),
        }
    }
}

fn keys_cubic(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn lanczos3(t: f64) -> f64 {
    if t.abs() < 3.0 {
        sinc(t) * sinc(t / 3.0)
    } else {
        0.0
    }
}

impl Interpolation {
    /// Taps `(first index, weights)` for sampling at `s`.
    fn taps(self, s: f64) -> (i64, Vec<f64>) {
        let f = s.floor();
        let t = s - f;
        let i = f as i64;
        match self {
            Interpolation::Bilinear => (i, vec![1.0 - t, t]),
            Interpolation::Bicubic => (i - 1, (-1..=2).map(|k| keys_cubic(t - k as f64)).collect()),
            Interpolation::Lanczos3 => {
                let w: Vec<f64> = (-2..=3).map(|k| lanczos3(t - k as f64)).collect();
                let total: f64 = w.iter().sum();
                (i - 2, w.into_iter().map(|v| v / total).collect())
            }
        }
    }
}

/// Rotates every channel by `angle` degrees about the centre. Multiples of
/// 90° are exact index permutations; other angles resample with samples
/// outside the source taken as zero.
pub fn rotate(img: &ImageField, angle: f64, method: Interpolation) -> Result<ImageField> {
    if !angle.is_finite() {
        return Err(EqwsError::InvalidParams("rotation angle must be finite".into()));
    }
    let n = img.side();
    let a = angle.rem_euclid(360.0);
    let quarter = (a / 90.0).round();
    if (a - 90.0 * quarter).abs() == 0.0 {
        return Ok(rotate_quarter(img, quarter as usize % 4));
    }
    let (sin, cos) = a.to_radians().sin_cos();
    let half = (n / 2) as f64;
    let mut out = Vec::with_capacity(img.data().len());
    for c in 0..img.channels() {
        let ch = img.channel(c);
        for y in 0..n {
            for x in 0..n {
                let (dx, dy) = (x as f64 - half, y as f64 - half);
                // Inverse rotation maps output pixels onto the source.
                let sx = half + cos * dx + sin * dy;
                let sy = half - sin * dx + cos * dy;
                out.push(sample_zero(ch, n, sx, sy, method));
            }
        }
    }
    ImageField::with_channels(n, img.channels(), out)
}

fn sample_zero(ch: &[f64], n: usize, sx: f64, sy: f64, method: Interpolation) -> f64 {
    let (x0, wx) = method.taps(sx);
    let (y0, wy) = method.taps(sy);
    let mut acc = 0.0;
    for (dy, wyv) in wy.iter().enumerate() {
        let yy = y0 + dy as i64;
        if yy < 0 || yy >= n as i64 {
            continue;
        }
        let row = &ch[yy as usize * n..(yy as usize + 1) * n];
        let mut line = 0.0;
        for (dx, wxv) in wx.iter().enumerate() {
            let xx = x0 + dx as i64;
            if xx >= 0 && xx < n as i64 {
                line += wxv * row[xx as usize];
            }
        }
        acc += wyv * line;
    }
    acc
}

fn rotate_quarter(img: &ImageField, quarters: usize) -> ImageField {
    let n = img.side();
    let mut out = Vec::with_capacity(img.data().len());
    for c in 0..img.channels() {
        let ch = img.channel(c);
        for y in 0..n {
            for x in 0..n {
                let (sx, sy) = match quarters {
                    0 => (x, y),
                    1 => (y, (n - x) % n),
                    2 => ((n - x) % n, (n - y) % n),
                    _ => ((n - y) % n, x),
                };
                out.push(ch[sy * n + sx]);
            }
        }
    }
    ImageField::with_channels(n, img.channels(), out).expect("same shape")
}

/// Upsamples to `new_side` with half-pixel alignment.
///
/// Bilinear extrapolates linearly past the outermost samples, so affine
/// images stay exact; the wider kernels clamp to the edge.
pub fn resize(img: &ImageField, new_side: usize, method: Interpolation) -> Result<ImageField> {
    check_side(new_side)?;
    let n = img.side();
    if new_side < n {
        return Err(EqwsError::Unsupported(format!("downsampling {n} -> {new_side}")));
    }
    if new_side == n {
        return Ok(img.clone());
    }
    let scale = n as f64 / new_side as f64;
    let taps: Vec<Vec<(usize, f64)>> = (0..new_side)
        .map(|d| {
            let s = (d as f64 + 0.5) * scale - 0.5;
            match method {
                Interpolation::Bilinear => {
                    let i0 = (s.floor() as i64).clamp(0, n as i64 - 2) as usize;
                    let t = s - i0 as f64;
                    vec![(i0, 1.0 - t), (i0 + 1, t)]
                }
                _ => {
                    let (first, w) = method.taps(s);
                    w.into_iter()
                        .enumerate()
                        .map(|(k, v)| ((first + k as i64).clamp(0, n as i64 - 1) as usize, v))
                        .collect()
                }
            }
        })
        .collect();
    let m = new_side;
    let mut out = Vec::with_capacity(m * m * img.channels());
    for c in 0..img.channels() {
        let ch = img.channel(c);
        // Rows first: n x m
        let mut tmp = vec![0.0; n * m];
        for y in 0..n {
            for (x, tx) in taps.iter().enumerate() {
                tmp[y * m + x] = tx.iter().map(|&(i, w)| w * ch[y * n + i]).sum();
            }
        }
        for ty in &taps {
            for x in 0..m {
                out.push(ty.iter().map(|&(i, w)| w * tmp[i * m + x]).sum());
            }
        }
    }
    ImageField::with_channels(m, img.channels(), out)
}

/// Circular shift: the pixel at `(x, y)` moves to `(x + dx, y + dy)`.
pub fn shift_periodic(img: &ImageField, dx: i64, dy: i64) -> ImageField {
    let n = img.side();
    let ni = n as i64;
    let mut out = Vec::with_capacity(img.data().len());
    for c in 0..img.channels() {
        let ch = img.channel(c);
        for y in 0..ni {
            let sy = (y - dy).rem_euclid(ni) as usize;
            for x in 0..ni {
                let sx = (x - dx).rem_euclid(ni) as usize;
                out.push(ch[sy * n + sx]);
            }
        }
    }
    ImageField::with_channels(n, img.channels(), out).expect("same shape")
}

/// Places `img` at the centre of a zero canvas of side `canvas`, offset
/// so that the source centre lands on pixel `(canvas/2, canvas/2)`.
pub fn embed(pixels: &[f64], width: usize, height: usize, canvas: usize) -> Result<ImageField> {
    check_side(canvas)?;
    if width > canvas || height > canvas || pixels.len() != width * height {
        return Err(EqwsError::InvalidParams(format!(
            "cannot embed {width}x{height} into {canvas}x{canvas}"
        )));
    }
    let ox = (canvas - width) / 2;
    let oy = (canvas - height) / 2;
    let mut data = vec![0.0; canvas * canvas];
    for y in 0..height {
        data[(oy + y) * canvas + ox..(oy + y) * canvas + ox + width]
            .copy_from_slice(&pixels[y * width..(y + 1) * width]);
    }
    ImageField::new(canvas, data)
}

/// Multiplies an image spectrum-wise; handy for generating band-limited
/// test fields.
pub fn fourier_filter(img: &ImageField, gain: impl Fn(i64, i64) -> f64) -> Result<ImageField> {
    img.require_single_channel()?;
    let n = img.side();
    let fft = Fft2d::new(n);
    let mut scratch = fft.make_scratch();
    let mut buf: Vec<Complex64> = fft.forward_real(img.data(), &mut scratch);
    for (i, z) in buf.iter_mut().enumerate() {
        *z *= gain(signed_frequency(i % n, n), signed_frequency(i / n, n));
    }
    fft.inverse(&mut buf, &mut scratch);
    ImageField::new(n, buf.iter().map(|z| z.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(side: usize, seed: u64) -> ImageField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageField::from_fn(side, |_, _| rng.gen::<f64>()).unwrap()
    }

    #[test]
    fn rod_symmetries() {
        let base = RodSpec {
            side: 64,
            arm_length: 20.0,
            ..Default::default()
        };
        let a = make_rod(&base).unwrap();
        let b = make_rod(&RodSpec {
            sigma_angle: 360.0,
            ..base.clone()
        })
        .unwrap();
        assert_eq!(a, b);
        let c = make_rod(&RodSpec {
            sigma_angle: 180.0,
            ..base.clone()
        })
        .unwrap();
        for (x, y) in a.data().iter().zip(c.data()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(a.data().iter().all(|&v| v >= 0.0));
        // Vertical: bright along the central column.
        assert!((a.get(32, 40) - 1.0).abs() < 1e-12);
        assert!(a.get(48, 32) < 1e-3);
    }

    #[test]
    fn arc_limits() {
        let straight = make_rod(&RodSpec {
            sigma_angle: 30.0 - 90.0,
            opening_angle: 180.0,
            arm_length: 10.0,
            fwhm: 6.0,
            side: 64,
        })
        .unwrap();
        let arc = make_arc(&ArcSpec {
            f_bend: 1e-6,
            sigma_angle: 30.0,
            rod_length: 20.0,
            fwhm: 6.0,
            side: 64,
        })
        .unwrap();
        for (x, y) in straight.data().iter().zip(arc.data()) {
            assert!((x - y).abs() < 1e-4);
        }
        let ring = make_arc(&ArcSpec {
            side: 64,
            f_bend: 1.0,
            rod_length: 60.0,
            fwhm: 2.0,
            ..Default::default()
        })
        .unwrap();
        let r = 60.0 / (2.0 * std::f64::consts::PI);
        // Ring centre sits at +90° from the image centre.
        let (cx, cy) = (32.0, 32.0 + r);
        for deg in (0..360).step_by(15) {
            let a = (deg as f64).to_radians();
            let x = (cx + r * a.cos()).round() as usize;
            let y = (cy + r * a.sin()).round() as usize;
            assert!(ring.get(x, y) > 0.5, "{deg}");
        }
        assert!(ring.get(32, 32 + r.round() as usize) < 1e-4);
    }

    #[test]
    fn disc_area_and_symmetry() {
        let d = make_disc(&DiscSpec {
            radius: 16.0,
            fwhm: 1e-3,
            side: 64,
        })
        .unwrap();
        let area = std::f64::consts::PI * 256.0;
        assert!((d.sum() - area).abs() < 0.02 * area);
        assert!(d.data().iter().all(|&v| v >= 0.0));
        let blurred = make_disc(&DiscSpec {
            radius: 8.0,
            fwhm: 4.0,
            side: 64,
        })
        .unwrap();
        let r = rotate(&blurred, 90.0, Interpolation::Bilinear).unwrap();
        for (x, y) in blurred.data().iter().zip(r.data()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(blurred.data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn apodization() {
        let img = noise(32, 1);
        let hard = apodize(&img, 0.0, Fill::Zero).unwrap();
        assert_eq!(hard.get(0, 0), 0.0);
        assert_eq!(hard.get(16, 16), img.get(16, 16));
        assert_eq!(hard.get(16, 1), img.get(16, 1));
        let soft = apodize(&img, 0.3, Fill::Zero).unwrap();
        assert_eq!(soft.get(0, 0), 0.0);
        assert_eq!(soft.get(31, 31), 0.0);
        let constant = ImageField::from_fn(32, |_, _| 0.25).unwrap();
        assert_eq!(apodize(&constant, 0.3, Fill::Mean).unwrap(), constant);
        let again = apodize(&hard, 0.0, Fill::Zero).unwrap();
        assert_eq!(again, hard);
        assert!(apodize(&img, 1.5, Fill::Zero).is_err());
    }

    #[test]
    fn quarter_rotations() {
        let img = noise(16, 7);
        assert_eq!(rotate(&img, 0.0, Interpolation::Bicubic).unwrap(), img);
        let mut r = img.clone();
        for _ in 0..4 {
            r = rotate(&r, 90.0, Interpolation::Lanczos3).unwrap();
        }
        assert_eq!(r, img);
        let r90 = rotate(&img, 90.0, Interpolation::Bicubic).unwrap();
        let r180 = rotate(&img, 180.0, Interpolation::Bicubic).unwrap();
        assert_eq!(rotate(&r90, 90.0, Interpolation::Bicubic).unwrap(), r180);
        assert_eq!(rotate(&img, -270.0, Interpolation::Bicubic).unwrap(), r90);
        // +x moves to +y.
        let n = 16;
        let dot = ImageField::from_fn(n, |x, y| if x == 12 && y == 8 { 1.0 } else { 0.0 }).unwrap();
        let turned = rotate(&dot, 90.0, Interpolation::Bilinear).unwrap();
        assert_eq!(turned.get(8, 12), 1.0);
    }

    #[test]
    fn interpolated_rotation_agrees_with_exact_direction() {
        let n = 32;
        let dot = ImageField::from_fn(n, |x, y| if x == 24 && y == 16 { 1.0 } else { 0.0 }).unwrap();
        let turned = rotate(&dot, 89.999999, Interpolation::Bilinear).unwrap();
        assert!((turned.get(16, 24) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn kernels_sum_to_one() {
        for m in [Interpolation::Bilinear, Interpolation::Bicubic, Interpolation::Lanczos3] {
            for s in [0.0, 0.1, 0.5, 0.77] {
                let (_, w) = m.taps(3.0 + s);
                assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn resizing() {
        let img = noise(8, 2);
        assert_eq!(resize(&img, 8, Interpolation::Bicubic).unwrap(), img);
        assert!(resize(&img, 4, Interpolation::Bicubic).is_err());
        let c = ImageField::from_fn(8, |_, _| 0.7).unwrap();
        for m in [Interpolation::Bilinear, Interpolation::Bicubic, Interpolation::Lanczos3] {
            let up = resize(&c, 32, m).unwrap();
            assert!(up.data().iter().all(|v| (v - 0.7).abs() < 1e-14));
        }
        let ramp = ImageField::from_fn(8, |x, y| 2.0 * x as f64 - 0.5 * y as f64).unwrap();
        let up = resize(&ramp, 16, Interpolation::Bilinear).unwrap();
        for y in 0..16 {
            for x in 0..16 {
                let sx = (x as f64 + 0.5) / 2.0 - 0.5;
                let sy = (y as f64 + 0.5) / 2.0 - 0.5;
                assert!((up.get(x, y) - (2.0 * sx - 0.5 * sy)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shifting() {
        let img = noise(16, 3);
        assert_eq!(shift_periodic(&img, 0, 0), img);
        assert_eq!(shift_periodic(&img, 16, 0), img);
        assert_eq!(shift_periodic(&shift_periodic(&img, 3, -5), -3, 5), img);
        let s = shift_periodic(&img, 2, 1);
        assert_eq!(s.get(2, 1), img.get(0, 0));
    }

    #[test]
    fn embedding() {
        let px: Vec<f64> = (0..28 * 28).map(|i| i as f64).collect();
        let e = embed(&px, 28, 28, 32).unwrap();
        assert_eq!(e.get(2, 2), 0.0);
        assert_eq!(e.get(1, 1), 0.0);
        assert_eq!(e.get(2 + 5, 2 + 3), px[3 * 28 + 5]);
        assert!(embed(&px, 28, 28, 16).is_err());
    }
}
