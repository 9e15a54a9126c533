//! Triglet filter banks.
//!
//! A triglet is a real, non-negative Fourier-domain window that is the
//! product of a cosine in log-radius and a cosine in polar angle. For every
//! scale `j` and direction `l` the bank holds one triglet; a single `phi`
//! filter takes the residual so that, point-wise inside the Nyquist disc,
//! `sum(psi^2) + phi^2 == 1`.
//!
//! Grid convention: bin `(row, col)` of an `N x N` DFT has frequency
//! `ky = signed(row)`, `kx = signed(col)` with `signed` mapping to
//! `-N/2..N/2-1`, and polar angle `atan2(ky, kx)`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{EqwsError, Result};
use crate::fft::signed_frequency;

/// Parameters of a triglet bank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBankParams {
    /// Number of angular bins `L`.
    #[serde(rename = "L")]
    pub angles: usize,
    /// Radial density `c`: scale centres are spaced by `2^(1/c)`.
    #[serde(rename = "c")]
    pub radial_density: usize,
    /// 1 when the `L` bins tile the half plane, 2 for the full plane.
    #[serde(rename = "t")]
    pub plane: u8,
    /// Angular width in multiples of `180/L` degrees, before the
    /// per-scale widening.
    #[serde(rename = "wBase")]
    pub base_width: usize,
    /// Pooling power `p` (1 or 2).
    #[serde(rename = "p")]
    pub pooling: u8,
    /// `log2` of the image side.
    #[serde(rename = "jIm")]
    pub log2_size: u32,
    /// Prefactor on the well-sampledness bound for the angular width.
    #[serde(rename = "widthSlack")]
    pub width_slack: f64,
}

impl Default for FilterBankParams {
    fn default() -> Self {
        FilterBankParams {
            angles: 8,
            radial_density: 1,
            plane: 1,
            base_width: 2,
            pooling: 2,
            log2_size: 8,
            width_slack: 1.0,
        }
    }
}

/// Largest supported `log2` image side; 4096² filters are already ~128 MiB dense.
pub const MAX_LOG2_SIZE: u32 = 12;

impl FilterBankParams {
    pub fn for_size(log2_size: u32) -> Self {
        FilterBankParams {
            log2_size,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EqwsError::InvalidParams(msg));
        if !(3..=MAX_LOG2_SIZE).contains(&self.log2_size) {
            return bad(format!("jIm must be in [3, {MAX_LOG2_SIZE}], got {}", self.log2_size));
        }
        if self.angles < 2 {
            return bad(format!("L must be at least 2, got {}", self.angles));
        }
        if self.radial_density < 1 {
            return bad("c must be at least 1".into());
        }
        if self.base_width < 1 {
            return bad("wBase must be at least 1".into());
        }
        if !matches!(self.plane, 1 | 2) {
            return bad(format!("t must be 1 or 2, got {}", self.plane));
        }
        if !matches!(self.pooling, 1 | 2) {
            return bad(format!("p must be 1 or 2, got {}", self.pooling));
        }
        if !(self.width_slack.is_finite() && self.width_slack > 0.0) {
            return bad(format!("widthSlack must be positive, got {}", self.width_slack));
        }
        // A wider angular window wraps onto itself and breaks the equal
        // split of power across directions.
        if let Some(j) = self
            .scale_values()
            .into_iter()
            .find(|&j| 2 * effective_width(self, j) > self.angles)
        {
            return bad(format!(
                "angular width {} at j = {j} exceeds L/2 = {}",
                effective_width(self, j),
                self.angles / 2
            ));
        }
        Ok(())
    }

    pub fn side(&self) -> usize {
        1usize << self.log2_size
    }

    /// Number of scales, `c * (jIm - 3) + 1`.
    pub fn n_scales(&self) -> usize {
        self.radial_density * (self.log2_size as usize - 3) + 1
    }

    /// Scale values `1, 1 + 1/c, ..., jIm - 2`.
    pub fn scale_values(&self) -> Vec<f64> {
        (0..self.n_scales())
            .map(|i| 1.0 + i as f64 / self.radial_density as f64)
            .collect()
    }

    fn nyquist_radius(&self) -> f64 {
        (self.side() / 2) as f64
    }
}

/// Smallest integer `w >= wBase` with
/// `w > widthSlack * L / (2^(jIm - j - 1) * t * 180)`.
pub fn effective_width(params: &FilterBankParams, j: f64) -> usize {
    let rhs = params.width_slack * params.angles as f64
        / (2f64.powf(params.log2_size as f64 - j - 1.0) * params.plane as f64 * 180.0);
    let dynamic = rhs.floor() as usize + 1;
    dynamic.max(params.base_width)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FilterLabel {
    Psi { scale: usize, j: f64, angle: usize },
    Phi,
}

/// A Fourier-domain filter stored as sorted `(flat index, value)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFilter {
    pub label: FilterLabel,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseFilter {
    /// Builds a filter from unsorted entries. Duplicates and non-finite
    /// values are rejected.
    pub fn from_entries(label: FilterLabel, mut entries: Vec<(u32, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(EqwsError::InvalidBank("duplicate grid index".into()));
        }
        if entries.iter().any(|e| !e.1.is_finite()) {
            return Err(EqwsError::NonFinite("filter values"));
        }
        let (indices, values) = entries.into_iter().unzip();
        Ok(SparseFilter { label, indices, values })
    }

    /// Keeps every non-zero entry of a dense `side x side` array.
    pub fn from_dense(label: FilterLabel, dense: &[f64]) -> Result<Self> {
        let entries = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i as u32, *v))
            .collect();
        Self::from_entries(label, entries)
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().zip(&self.values).map(|(&i, &v)| (i as usize, v))
    }

    pub fn to_dense(&self, side: usize) -> Vec<f64> {
        let mut out = vec![0.0; side * side];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Evaluates one triglet on integer frequencies.
#[derive(Debug, Clone)]
struct TrigletShape {
    log_center: f64,
    density: f64,
    angular_scale: f64,
    center_deg: f64,
    half_period_deg: f64,
    norm: f64,
    nyquist: f64,
    half_plane: bool,
}

impl TrigletShape {
    fn new(params: &FilterBankParams, j: f64, angle: usize) -> Self {
        let w = effective_width(params, j) as f64;
        let t = params.plane as f64;
        let l = params.angles as f64;
        TrigletShape {
            log_center: params.log2_size as f64 - j - 1.0,
            density: params.radial_density as f64,
            angular_scale: l / (2.0 * w * t),
            center_deg: angle as f64 * t * 180.0 / l,
            half_period_deg: 90.0 * t,
            norm: 1.0 / w.sqrt(),
            nyquist: params.nyquist_radius(),
            half_plane: params.plane == 1,
        }
    }

    fn eval(&self, kx: i64, ky: i64) -> f64 {
        if kx == 0 && ky == 0 {
            return 0.0;
        }
        let r = ((kx * kx + ky * ky) as f64).sqrt();
        if r >= self.nyquist {
            return 0.0;
        }
        let radial_deg = 90.0 * self.density * (r.log2() - self.log_center);
        if radial_deg.abs() >= 90.0 {
            return 0.0;
        }
        // Half-plane filters are even in k; evaluate on the upper half so
        // that psi(k) == psi(-k) holds bit-for-bit.
        let (ux, uy) = if self.half_plane && (ky < 0 || (ky == 0 && kx < 0)) {
            (-kx, -ky)
        } else {
            (kx, ky)
        };
        let mut theta = (uy as f64).atan2(ux as f64).to_degrees();
        if theta < 0.0 {
            theta += 360.0;
        }
        let period = 2.0 * self.half_period_deg;
        let mut delta = theta - self.center_deg;
        while delta >= self.half_period_deg {
            delta -= period;
        }
        while delta < -self.half_period_deg {
            delta += period;
        }
        let angular_deg = self.angular_scale * delta;
        if angular_deg.abs() >= 90.0 {
            return 0.0;
        }
        self.norm * radial_deg.to_radians().cos() * angular_deg.to_radians().cos()
    }

    /// Largest radius at which the radial window can be non-zero.
    fn outer_radius(&self) -> f64 {
        2f64.powf(self.log_center + 1.0 / self.density).min(self.nyquist)
    }
}

fn flat_index(kx: i64, ky: i64, side: usize) -> u32 {
    let n = side as i64;
    let col = kx.rem_euclid(n) as usize;
    let row = ky.rem_euclid(n) as usize;
    (row * side + col) as u32
}

/// Builds the triglet for scale index `scale` (value `1 + scale/c`) and
/// direction `angle`.
pub fn build_triglet(params: &FilterBankParams, scale: usize, angle: usize) -> Result<SparseFilter> {
    params.validate()?;
    if scale >= params.n_scales() || angle >= params.angles {
        return Err(EqwsError::InvalidParams(format!(
            "(scale {scale}, angle {angle}) outside the bank's {}x{} index set",
            params.n_scales(),
            params.angles
        )));
    }
    let j = params.scale_values()[scale];
    let shape = TrigletShape::new(params, j, angle);
    let side = params.side();
    let reach = shape.outer_radius().ceil() as i64;
    let half = (side / 2) as i64;
    let lo = (-reach).max(-half);
    let hi = reach.min(half - 1);
    let mut entries = Vec::new();
    for ky in lo..=hi {
        for kx in lo..=hi {
            let v = shape.eval(kx, ky);
            if v > 0.0 {
                entries.push((flat_index(kx, ky, side), v));
            }
        }
    }
    SparseFilter::from_entries(FilterLabel::Psi { scale, j, angle }, entries)
}

/// Tolerance above 1 for the summed squared triglets before the bank is
/// rejected.
pub const PHI_OVERSHOOT_TOLERANCE: f64 = 1e-8;

/// Residual power `1 - sum(psi^2)` at or below this is treated as zero.
/// Where the triglets tile exactly, the computed residual is rounding
/// noise; its square root (~1e-8) would otherwise differ between grid
/// points related by symmetry.
pub const PHI_RESIDUAL_FLOOR: f64 = 1e-12;

fn squared_sum(side: usize, psi: &[SparseFilter]) -> Vec<f64> {
    let mut acc = vec![0.0; side * side];
    for f in psi {
        for (i, v) in f.iter() {
            acc[i] += v * v;
        }
    }
    acc
}

fn in_nyquist_disc(index: usize, side: usize) -> bool {
    let kx = signed_frequency(index % side, side);
    let ky = signed_frequency(index / side, side);
    let half = (side / 2) as i64;
    kx * kx + ky * ky <= half * half
}

/// The residual filter `sqrt(1 - sum(psi^2))` over the Nyquist disc.
pub fn build_phi(params: &FilterBankParams, psi: &[SparseFilter]) -> Result<SparseFilter> {
    params.validate()?;
    let side = params.side();
    if psi.len() != params.n_scales() * params.angles || psi.iter().any(|f| matches!(f.label, FilterLabel::Phi)) {
        return Err(EqwsError::InvalidBank(
            "phi needs the complete set of psi filters".into(),
        ));
    }
    let acc = squared_sum(side, psi);
    let mut entries = Vec::new();
    for (i, &s) in acc.iter().enumerate() {
        if !in_nyquist_disc(i, side) {
            continue;
        }
        if s > 1.0 + PHI_OVERSHOOT_TOLERANCE {
            return Err(EqwsError::InvalidBank(format!(
                "sum of squared triglets reaches {s} at grid index {i}"
            )));
        }
        let residual = 1.0 - s;
        let v = if residual > PHI_RESIDUAL_FLOOR {
            residual.sqrt()
        } else {
            0.0
        };
        if v > 0.0 {
            entries.push((i as u32, v));
        }
    }
    SparseFilter::from_entries(FilterLabel::Phi, entries)
}

/// Deviation of a filter set from point-wise flatness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    /// `max |sum(psi^2) + phi^2 - 1|` over the Nyquist disc.
    pub max_deviation: f64,
    /// `max sum(psi^2)` over the whole grid.
    pub max_psi_power: f64,
    /// Largest filter value outside the Nyquist disc.
    pub max_outside: f64,
}

pub fn flatness(side: usize, psi: &[SparseFilter], phi: &SparseFilter) -> FlatnessReport {
    let psi_acc = squared_sum(side, psi);
    let max_psi_power = psi_acc.iter().cloned().fold(0.0, f64::max);
    let mut total = psi_acc;
    for (i, v) in phi.iter() {
        total[i] += v * v;
    }
    let mut max_deviation: f64 = 0.0;
    let mut max_outside: f64 = 0.0;
    for (i, &s) in total.iter().enumerate() {
        if in_nyquist_disc(i, side) {
            max_deviation = max_deviation.max((s - 1.0).abs());
        } else {
            max_outside = max_outside.max(s.sqrt());
        }
    }
    FlatnessReport {
        max_deviation,
        max_psi_power,
        max_outside,
    }
}

/// An immutable triglet bank plus its residual `phi`.
#[derive(Debug, Clone)]
pub struct FilterBank {
    params: FilterBankParams,
    scales: Vec<f64>,
    widths: Vec<usize>,
    psi: Vec<SparseFilter>,
    phi: SparseFilter,
    id: String,
}

impl FilterBank {
    pub fn build(params: FilterBankParams) -> Result<Self> {
        params.validate()?;
        let mut psi = Vec::with_capacity(params.n_scales() * params.angles);
        for scale in 0..params.n_scales() {
            for angle in 0..params.angles {
                psi.push(build_triglet(&params, scale, angle)?);
            }
        }
        let phi = build_phi(&params, &psi)?;
        Self::from_parts(params, psi, phi)
    }

    /// Assembles a bank from stored filters, e.g. after loading from disk.
    pub fn from_parts(params: FilterBankParams, psi: Vec<SparseFilter>, phi: SparseFilter) -> Result<Self> {
        params.validate()?;
        let scales = params.scale_values();
        if psi.len() != scales.len() * params.angles {
            return Err(EqwsError::InvalidBank(format!(
                "expected {} psi filters, got {}",
                scales.len() * params.angles,
                psi.len()
            )));
        }
        for (k, f) in psi.iter().enumerate() {
            match f.label {
                FilterLabel::Psi { scale, angle, .. } if scale == k / params.angles && angle == k % params.angles => {}
                _ => {
                    return Err(EqwsError::InvalidBank(format!(
                        "psi filter {k} is out of canonical order"
                    )))
                }
            }
        }
        if phi.label != FilterLabel::Phi {
            return Err(EqwsError::InvalidBank("last filter must be phi".into()));
        }
        let widths = scales.iter().map(|&j| effective_width(&params, j)).collect();
        let id = bank_id(&params, &psi, &phi);
        Ok(FilterBank {
            params,
            scales,
            widths,
            psi,
            phi,
            id,
        })
    }

    pub fn params(&self) -> &FilterBankParams {
        &self.params
    }

    pub fn side(&self) -> usize {
        self.params.side()
    }

    pub fn n_scales(&self) -> usize {
        self.scales.len()
    }

    pub fn n_angles(&self) -> usize {
        self.params.angles
    }

    pub fn scale_values(&self) -> &[f64] {
        &self.scales
    }

    pub fn effective_widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn psi(&self, scale: usize, angle: usize) -> &SparseFilter {
        &self.psi[scale * self.params.angles + angle]
    }

    /// All triglets in `(scale, angle)` lexicographic order.
    pub fn psi_filters(&self) -> &[SparseFilter] {
        &self.psi
    }

    pub fn phi(&self) -> &SparseFilter {
        &self.phi
    }

    /// Triglets followed by `phi`; the order used for both scattering layers.
    pub fn filters(&self) -> impl Iterator<Item = &SparseFilter> {
        self.psi.iter().chain(std::iter::once(&self.phi))
    }

    pub fn flatness(&self) -> FlatnessReport {
        flatness(self.side(), &self.psi, &self.phi)
    }

    /// Content hash of parameters and filter values.
    pub fn id(&self) -> &str {
        &self.id
    }

    /// Same filters with a different pooling power.
    pub fn with_pooling(&self, pooling: u8) -> Result<Self> {
        let params = FilterBankParams {
            pooling,
            ..self.params.clone()
        };
        params.validate()?;
        Self::from_parts(params, self.psi.clone(), self.phi.clone())
    }
}

fn bank_id(params: &FilterBankParams, psi: &[SparseFilter], phi: &SparseFilter) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(params).expect("params serialize"));
    for f in psi.iter().chain(std::iter::once(phi)) {
        hasher.update((f.len() as u64).to_le_bytes());
        for (i, v) in f.iter() {
            hasher.update((i as u64).to_le_bytes());
            hasher.update(v.to_bits().to_le_bytes());
        }
    }
    hex::encode(&hasher.finalize()[..8])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(l: usize, c: usize, t: u8, j_im: u32) -> FilterBankParams {
        FilterBankParams {
            angles: l,
            radial_density: c,
            plane: t,
            log2_size: j_im,
            ..Default::default()
        }
    }

    /// Dense evaluation of the triglet formula over every grid point,
    /// written independently of `TrigletShape`.
    fn dense_triglet(p: &FilterBankParams, j: f64, l: usize) -> Vec<f64> {
        let n = p.side();
        let w = effective_width(p, j) as f64;
        let t = p.plane as f64;
        let mut out = vec![0.0; n * n];
        for row in 0..n {
            for col in 0..n {
                let kx = signed_frequency(col, n) as f64;
                let ky = signed_frequency(row, n) as f64;
                let r = kx.hypot(ky);
                if r == 0.0 || r >= (n / 2) as f64 {
                    continue;
                }
                let a = 90.0 * p.radial_density as f64 * (r.log2() - (p.log2_size as f64 - j - 1.0));
                // Smallest angular distance modulo 180 t degrees.
                let theta = ky.atan2(kx).to_degrees();
                let centre = l as f64 * t * 180.0 / p.angles as f64;
                let period = 180.0 * t;
                let d = ((theta - centre) % period + period) % period;
                let d = if d >= period / 2.0 { d - period } else { d };
                let b = p.angles as f64 / (2.0 * w * t) * d;
                if a.abs() < 90.0 && b.abs() < 90.0 {
                    out[row * n + col] = a.to_radians().cos() * b.to_radians().cos() / w.sqrt();
                }
            }
        }
        out
    }

    #[test]
    fn width_examples() {
        let p = FilterBankParams {
            angles: 8,
            plane: 1,
            log2_size: 8,
            base_width: 2,
            width_slack: 1.0,
            ..Default::default()
        };
        assert_eq!(effective_width(&p, 1.0), 2);
        // RHS = 8 / (2 * 180) ~ 0.022.
        let rhs: f64 = 8.0 / (2.0 * 1.0 * 180.0);
        assert!(rhs < 2.0);
        assert_eq!(effective_width(&p, 6.0), 2);

        let p = FilterBankParams {
            angles: 64,
            plane: 1,
            log2_size: 6,
            base_width: 1,
            width_slack: 180.0,
            ..Default::default()
        };
        // Brute force: smallest integer w >= 1 with w > 64 / 2.
        let want = (1..).find(|&w| w as f64 > 180.0 * 64.0 / (2.0 * 180.0)).unwrap();
        assert_eq!(want, 33);
        assert_eq!(effective_width(&p, 4.0), want);
    }

    #[test]
    fn triglet_peak_and_edge() {
        let p = params(8, 1, 1, 8);
        let n = p.side();
        for scale in 0..p.n_scales() {
            let j = p.scale_values()[scale];
            let peak_r = 2f64.powf(8.0 - j - 1.0) as i64;
            let w = effective_width(&p, j) as f64;
            // l = 0 peaks on the +kx axis, l = 4 on the +ky axis.
            let f0 = build_triglet(&p, scale, 0).unwrap().to_dense(n);
            let v = f0[flat_index(peak_r, 0, n) as usize];
            assert!((v - 1.0 / w.sqrt()).abs() < 1e-15, "scale {scale}: {v}");
            let f4 = build_triglet(&p, scale, 4).unwrap().to_dense(n);
            let v = f4[flat_index(0, peak_r, n) as usize];
            assert!((v - 1.0 / w.sqrt()).abs() < 1e-15);
            // Radial edge at 2^(jIm - j).
            let edge = 2 * peak_r;
            if edge < (n / 2) as i64 {
                assert_eq!(f0[flat_index(edge, 0, n) as usize], 0.0);
            }
        }
    }

    #[test]
    fn sparse_matches_dense_oracle() {
        let p = params(8, 1, 1, 8);
        let n = p.side();
        let sparse = build_triglet(&p, 2, 0).unwrap();
        let dense = dense_triglet(&p, 3.0, 0);
        let sum_dense: f64 = dense.iter().map(|v| v * v).sum();
        let sum_sparse = sparse.sum_of_squares();
        assert!((sum_dense - sum_sparse).abs() <= 1e-12 * sum_dense);
        // Entry-for-entry agreement for a few more filters, both planes.
        for (t, scale, l) in [(1u8, 0usize, 3usize), (1, 4, 5), (2, 1, 7), (2, 3, 2)] {
            let p = params(8, 1, t, 7);
            let j = p.scale_values()[scale];
            let sparse = build_triglet(&p, scale, l).unwrap().to_dense(p.side());
            let dense = dense_triglet(&p, j, l);
            for (a, b) in sparse.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-12, "t={t} scale={scale} l={l}: {a} vs {b}");
            }
        }
        let _ = n;
    }

    #[test]
    fn phi_values() {
        let p = params(8, 1, 1, 8);
        let bank = FilterBank::build(p.clone()).unwrap();
        let n = p.side();
        let phi = bank.phi().to_dense(n);
        assert_eq!(phi[0], 1.0);
        // On the j = 1 peak circle the triglets carry all the power.
        let r = 1i64 << (p.log2_size - 2);
        assert_eq!(phi[flat_index(r, 0, n) as usize], 0.0);
        assert_eq!(phi[flat_index(0, -r, n) as usize], 0.0);
        for (i, v) in phi.iter().enumerate() {
            if !in_nyquist_disc(i, n) {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn phi_rejects_overfull_bank() {
        let p = params(8, 1, 1, 6);
        let mut psi: Vec<SparseFilter> = (0..p.n_scales())
            .flat_map(|s| (0..8).map(move |l| (s, l)))
            .map(|(s, l)| build_triglet(&p, s, l).unwrap())
            .collect();
        let doubled: Vec<(u32, f64)> = psi[0].iter().map(|(i, v)| (i as u32, 2.0 * v)).collect();
        psi[0] = SparseFilter::from_entries(psi[0].label, doubled).unwrap();
        assert!(matches!(build_phi(&p, &psi), Err(EqwsError::InvalidBank(_))));
    }

    #[test]
    fn bank_sizes() {
        let b = FilterBank::build(params(8, 1, 1, 8)).unwrap();
        assert_eq!(b.n_scales(), 6);
        assert_eq!(b.psi_filters().len(), 48);
        assert_eq!(b.filters().count(), 49);

        let b = FilterBank::build(params(8, 2, 1, 8)).unwrap();
        let expect: Vec<f64> = (0..11).map(|i| 1.0 + 0.5 * i as f64).collect();
        assert_eq!(b.scale_values(), &expect[..]);
        assert_eq!(b.psi_filters().len(), 88);
        assert_eq!(b.n_scales(), 2 * (8 - 3) + 1);

        let b = FilterBank::build(FilterBankParams {
            base_width: 1,
            ..params(2, 1, 1, 4)
        })
        .unwrap();
        assert_eq!(b.n_scales(), 2);
        assert_eq!(b.psi_filters().len(), 4);
    }

    #[test]
    fn rejects_bad_indices_and_params() {
        let p = params(8, 1, 1, 6);
        assert!(build_triglet(&p, 4, 0).is_err());
        assert!(build_triglet(&p, 0, 8).is_err());
        assert!(FilterBank::build(params(1, 1, 1, 6)).is_err());
        assert!(FilterBank::build(params(8, 1, 3, 6)).is_err());
        assert!(FilterBank::build(params(8, 1, 1, 2)).is_err());
        assert!(FilterBank::build(params(2, 1, 1, 6)).is_err());
        assert!(FilterBank::build(FilterBankParams {
            base_width: 5,
            ..params(8, 1, 1, 6)
        })
        .is_err());
    }

    #[test]
    fn flat_for_many_parameter_sets() {
        for (l, c, t, j_im) in [
            (8, 1, 1, 6),
            (8, 2, 1, 6),
            (4, 1, 1, 7),
            (16, 1, 1, 6),
            (8, 1, 2, 6),
            (6, 3, 1, 5),
            (8, 1, 1, 3),
        ] {
            let b = FilterBank::build(params(l, c, t, j_im)).unwrap();
            let rep = b.flatness();
            assert!(rep.max_deviation <= 1e-10, "{l},{c},{t},{j_im}: {rep:?}");
            assert!(rep.max_psi_power <= 1.0 + 1e-10);
            assert_eq!(rep.max_outside, 0.0);
        }
    }

    #[test]
    fn angular_partition_depends_only_on_radius() {
        let p = params(8, 1, 1, 7);
        let b = FilterBank::build(p.clone()).unwrap();
        let n = p.side();
        for scale in 0..p.n_scales() {
            let mut acc = vec![0.0; n * n];
            for l in 0..8 {
                for (i, v) in b.psi(scale, l).iter() {
                    acc[i] += v * v;
                }
            }
            // Compare every grid point against the radial window alone.
            let j = p.scale_values()[scale];
            for (i, &s) in acc.iter().enumerate() {
                let kx = signed_frequency(i % n, n) as f64;
                let ky = signed_frequency(i / n, n) as f64;
                let r = kx.hypot(ky);
                let want = if r == 0.0 || r >= (n / 2) as f64 {
                    0.0
                } else {
                    let a = 90.0 * (r.log2() - (p.log2_size as f64 - j - 1.0));
                    if a.abs() < 90.0 {
                        a.to_radians().cos().powi(2)
                    } else {
                        0.0
                    }
                };
                assert!((s - want).abs() < 1e-10, "scale {scale} at {i}: {s} vs {want}");
            }
        }
    }

    #[test]
    fn quarter_turn_shifts_angle_index() {
        let p = params(8, 1, 1, 7);
        let b = FilterBank::build(p.clone()).unwrap();
        let n = p.side();
        let half = (n / 2) as i64;
        for scale in 0..p.n_scales() {
            for l in 0..8 {
                let a = b.psi(scale, l).to_dense(n);
                let c = b.psi(scale, (l + 4) % 8).to_dense(n);
                for ky in -half + 1..half {
                    for kx in -half + 1..half {
                        // R90 (kx, ky) = (-ky, kx)
                        let rotated = a[flat_index(-ky, kx, n) as usize];
                        let orig = c[flat_index(kx, ky, n) as usize];
                        assert!((rotated - orig).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn support_inside_annulus() {
        let p = params(8, 1, 1, 8);
        let b = FilterBank::build(p.clone()).unwrap();
        let n = p.side();
        for f in b.psi_filters() {
            let FilterLabel::Psi { j, .. } = f.label else {
                unreachable!()
            };
            let lo = 2f64.powf(8.0 - j - 2.0);
            let hi = 2f64.powf(8.0 - j);
            let mut annulus = 0;
            for i in 0..n * n {
                let r = (signed_frequency(i % n, n) as f64).hypot(signed_frequency(i / n, n) as f64);
                if r > lo && r < hi {
                    annulus += 1;
                }
            }
            assert!(f.len() <= annulus);
            for (i, v) in f.iter() {
                let r = (signed_frequency(i % n, n) as f64).hypot(signed_frequency(i / n, n) as f64);
                assert!(r < (n / 2) as f64 && v > 0.0);
            }
        }
    }

    #[test]
    fn half_plane_filters_are_even() {
        let p = params(8, 1, 1, 6);
        let b = FilterBank::build(p.clone()).unwrap();
        let n = p.side();
        for f in b.filters() {
            let d = f.to_dense(n);
            for row in 0..n {
                for col in 0..n {
                    let mirror = ((n - row) % n) * n + (n - col) % n;
                    assert_eq!(d[row * n + col].to_bits(), d[mirror].to_bits());
                }
            }
        }
    }

    #[test]
    fn id_tracks_content() {
        let a = FilterBank::build(params(8, 1, 1, 6)).unwrap();
        let b = FilterBank::build(params(8, 1, 1, 6)).unwrap();
        let c = FilterBank::build(params(4, 1, 1, 6)).unwrap();
        assert_eq!(a.id(), b.id());
        assert_ne!(a.id(), c.id());
        assert_ne!(a.id(), a.with_pooling(1).unwrap().id());
    }
}
