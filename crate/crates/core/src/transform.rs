//! Scattering coefficients.
//!
//! The fast path multiplies sparse filters against the image spectrum and
//! pools second-layer power in the Fourier domain. Pairs of real fields are
//! packed into one complex FFT wherever the bank's filters are even in `k`.
//! [`scatter_reference`] is a deliberately plain dense path used as an oracle
//! and as the benchmark baseline.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{EqwsError, Result};
use crate::fft::{signed_frequency, Fft2d};
use crate::filterbank::{FilterBank, FilterBankParams, SparseFilter};
use crate::image::{Domain, ImageField};

/// Returns `(Ī, mu0, sigma0sq)` with `Ī = (I - mu0) / sqrt(sigma0sq)`,
/// `mu0` the pixel mean and `sigma0sq` the summed squared deviation.
pub fn normalize_image(img: &ImageField) -> Result<(ImageField, f64, f64)> {
    img.require_single_channel()?;
    if img.domain() != Domain::Real {
        return Err(EqwsError::InvalidParams(
            "normalization needs a real-domain image".into(),
        ));
    }
    let mu0 = img.mean();
    let sigma0sq: f64 = img.data().iter().map(|v| (v - mu0) * (v - mu0)).sum();
    let scale2: f64 = img.power();
    if sigma0sq.is_nan() || sigma0sq <= 1e-24 * scale2 || sigma0sq == 0.0 {
        return Err(EqwsError::DegenerateImage);
    }
    let inv = 1.0 / sigma0sq.sqrt();
    let data = img.data().iter().map(|v| (v - mu0) * inv).collect();
    Ok((ImageField::new(img.side(), data)?, mu0, sigma0sq))
}

/// Number of REG and ISO coefficients, S0 and all `phi` terms included.
pub fn coefficient_count(params: &FilterBankParams) -> Result<(usize, usize)> {
    params.validate()?;
    let layout = CoefficientLayout::new(params.n_scales(), params.angles);
    Ok((layout.reg_len(), layout.iso_len()))
}

/// Shape of a coefficient set and its canonical flattening.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientLayout {
    pub n_scales: usize,
    pub n_angles: usize,
}

impl CoefficientLayout {
    pub fn new(n_scales: usize, n_angles: usize) -> Self {
        CoefficientLayout { n_scales, n_angles }
    }

    pub fn for_bank(bank: &FilterBank) -> Self {
        Self::new(bank.n_scales(), bank.n_angles())
    }

    fn jl(&self) -> usize {
        self.n_scales * self.n_angles
    }

    /// `4 + 3JL + (JL)^2`
    pub fn reg_len(&self) -> usize {
        let jl = self.jl();
        4 + 3 * jl + jl * jl
    }

    /// `4 + 3J + J^2 L`
    pub fn iso_len(&self) -> usize {
        let j = self.n_scales;
        4 + 3 * j + j * j * self.n_angles
    }

    /// Column names of the REG vector, in [`ScatteringCoefficients::to_vec`] order.
    pub fn reg_names(&self) -> Vec<String> {
        let (nj, nl) = (self.n_scales, self.n_angles);
        let mut out = vec!["mu0".to_string(), "sigma0sq".to_string()];
        for j in 0..nj {
            for l in 0..nl {
                out.push(format!("s1[j={j},l={l}]"));
            }
        }
        out.push("s1phi".into());
        for j1 in 0..nj {
            for l1 in 0..nl {
                for j2 in 0..nj {
                    for l2 in 0..nl {
                        out.push(format!("s2[j1={j1},l1={l1},j2={j2},l2={l2}]"));
                    }
                }
            }
        }
        for j in 0..nj {
            for l in 0..nl {
                out.push(format!("s2phi1[j2={j},l2={l}]"));
            }
        }
        for j in 0..nj {
            for l in 0..nl {
                out.push(format!("s2phi2[j1={j},l1={l}]"));
            }
        }
        out.push("s2phiphi".into());
        out
    }

    /// Column names of the ISO vector.
    pub fn iso_names(&self) -> Vec<String> {
        let (nj, nl) = (self.n_scales, self.n_angles);
        let mut out = vec!["mu0".to_string(), "sigma0sq".to_string()];
        for j in 0..nj {
            out.push(format!("s1iso[j={j}]"));
        }
        out.push("s1phi".into());
        for j1 in 0..nj {
            for j2 in 0..nj {
                for dl in 0..nl {
                    out.push(format!("s2iso[j1={j1},j2={j2},dl={dl}]"));
                }
            }
        }
        for j in 0..nj {
            out.push(format!("s2phi1iso[j2={j}]"));
        }
        for j in 0..nj {
            out.push(format!("s2phi2iso[j1={j}]"));
        }
        out.push("s2phiphi".into());
        out
    }
}

/// Power that falls outside the Nyquist disc, per layer.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CornerPower {
    /// Fraction of the normalized image's power with `|k| > N/2`.
    pub image: f64,
    /// Same quantity for each first-layer modulus field, triglets in
    /// `(j, l)` order followed by `phi`.
    pub first_layer: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringCoefficients {
    pub layout: CoefficientLayout,
    pub mu0: f64,
    pub sigma0sq: f64,
    /// `J x L`, index `j * L + l`.
    pub s1: Vec<f64>,
    pub s1_phi: f64,
    /// `(JL) x (JL)`, index `(j1 * L + l1) * JL + j2 * L + l2`.
    pub s2: Vec<f64>,
    /// `phi` in the first layer, triglet `(j2, l2)` in the second.
    pub s2_phi_first: Vec<f64>,
    /// Triglet `(j1, l1)` in the first layer, `phi` in the second.
    pub s2_phi_second: Vec<f64>,
    pub s2_phi_phi: f64,
    pub pooling: u8,
    pub bank_id: String,
    pub corner: CornerPower,
}

impl ScatteringCoefficients {
    pub fn n_scales(&self) -> usize {
        self.layout.n_scales
    }

    pub fn n_angles(&self) -> usize {
        self.layout.n_angles
    }

    pub fn s1_at(&self, j: usize, l: usize) -> f64 {
        self.s1[j * self.layout.n_angles + l]
    }

    pub fn s2_at(&self, j1: usize, l1: usize, j2: usize, l2: usize) -> f64 {
        let nl = self.layout.n_angles;
        self.s2[(j1 * nl + l1) * self.layout.jl() + j2 * nl + l2]
    }

    /// Flattened REG vector in canonical column order.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layout.reg_len());
        out.push(self.mu0);
        out.push(self.sigma0sq);
        out.extend_from_slice(&self.s1);
        out.push(self.s1_phi);
        out.extend_from_slice(&self.s2);
        out.extend_from_slice(&self.s2_phi_first);
        out.extend_from_slice(&self.s2_phi_second);
        out.push(self.s2_phi_phi);
        out
    }

    /// Inverse of [`to_vec`](Self::to_vec). Metadata not carried by the
    /// vector (pooling, bank id, corner power) is left at defaults.
    pub fn from_vec(layout: CoefficientLayout, v: &[f64]) -> Result<Self> {
        if v.len() != layout.reg_len() {
            return Err(EqwsError::SizeMismatch {
                expected: layout.reg_len(),
                got: v.len(),
            });
        }
        let jl = layout.jl();
        let mut at = 0;
        let mut take = |n: usize| {
            let s = v[at..at + n].to_vec();
            at += n;
            s
        };
        let s0 = take(2);
        let s1 = take(jl);
        let s1_phi = take(1)[0];
        let s2 = take(jl * jl);
        let s2_phi_first = take(jl);
        let s2_phi_second = take(jl);
        let s2_phi_phi = take(1)[0];
        Ok(ScatteringCoefficients {
            layout,
            mu0: s0[0],
            sigma0sq: s0[1],
            s1,
            s1_phi,
            s2,
            s2_phi_first,
            s2_phi_second,
            s2_phi_phi,
            pooling: 0,
            bank_id: String::new(),
            corner: CornerPower::default(),
        })
    }

    /// Sum of all first-layer coefficients, `phi` included.
    pub fn first_layer_total(&self) -> f64 {
        self.s1.iter().sum::<f64>() + self.s1_phi
    }

    /// For first-layer triglet `(j1, l1)`: second-layer power plus the
    /// measured corner remainder. Equals `S1(j1, l1)` for `p = 2`.
    pub fn second_layer_total(&self, j1: usize, l1: usize) -> f64 {
        let jl = self.layout.jl();
        let m = j1 * self.layout.n_angles + l1;
        let row: f64 = self.s2[m * jl..(m + 1) * jl].iter().sum();
        row + self.s2_phi_second[m] + self.corner.first_layer.get(m).copied().unwrap_or(0.0)
    }
}

/// First-order coefficients only; much cheaper than a full scatter.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrder {
    pub layout: CoefficientLayout,
    pub mu0: f64,
    pub sigma0sq: f64,
    pub s1: Vec<f64>,
    pub s1_phi: f64,
    pub corner: f64,
}

impl FirstOrder {
    pub fn s1_at(&self, j: usize, l: usize) -> f64 {
        self.s1[j * self.layout.n_angles + l]
    }
}

/// Cross-channel second-order products for multi-channel images.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorScatteringCoefficients {
    pub layout: CoefficientLayout,
    /// `(mu0, sigma0sq)` per channel.
    pub s0: Vec<(f64, f64)>,
    /// Channel pairs `(c1, c2)` with `c1 <= c2`, in lexicographic order.
    pub pairs: Vec<(usize, usize)>,
    /// Per pair, a `(JL) x (JL)` table indexed like [`ScatteringCoefficients::s2`]:
    /// `sum_x |Ī_c1 * psi_a| |Ī_c2 * psi_b|`.
    pub cross: Vec<Vec<f64>>,
    pub bank_id: String,
}

impl ColorScatteringCoefficients {
    pub fn pair_index(&self, c1: usize, c2: usize) -> Option<usize> {
        let key = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
        self.pairs.iter().position(|p| *p == key)
    }

    pub fn cross_at(&self, c1: usize, c2: usize, j1: usize, l1: usize, j2: usize, l2: usize) -> f64 {
        let nl = self.layout.n_angles;
        let jl = self.layout.jl();
        let (a, b) = ((j1 * nl + l1), (j2 * nl + l2));
        let p = self.pair_index(c1, c2).expect("channel pair in range");
        // Swapping channels swaps the roles of the two filters.
        if c1 <= c2 {
            self.cross[p][a * jl + b]
        } else {
            self.cross[p][b * jl + a]
        }
    }

    /// Flattened cross tables in pair order.
    pub fn to_vec(&self) -> Vec<f64> {
        self.cross.iter().flatten().copied().collect()
    }
}

/// Reusable scattering setup for one bank: FFT plans and the corner mask.
#[derive(Debug, Clone)]
pub struct ScatterEngine<'a> {
    bank: &'a FilterBank,
    fft: Fft2d,
    corner: Vec<u32>,
    negate: Vec<u32>,
    even: bool,
}

fn corner_indices(side: usize) -> Vec<u32> {
    let half = (side / 2) as i64;
    (0..side * side)
        .filter(|&i| {
            let kx = signed_frequency(i % side, side);
            let ky = signed_frequency(i / side, side);
            kx * kx + ky * ky > half * half
        })
        .map(|i| i as u32)
        .collect()
}

fn negated_indices(side: usize) -> Vec<u32> {
    (0..side * side)
        .map(|i| {
            let (row, col) = (i / side, i % side);
            (((side - row) % side) * side + (side - col) % side) as u32
        })
        .collect()
}

impl<'a> ScatterEngine<'a> {
    pub fn new(bank: &'a FilterBank) -> Self {
        let side = bank.side();
        ScatterEngine {
            bank,
            fft: Fft2d::new(side),
            corner: corner_indices(side),
            negate: negated_indices(side),
            even: bank.params().plane == 1,
        }
    }

    pub fn bank(&self) -> &FilterBank {
        self.bank
    }

    fn check(&self, img: &ImageField) -> Result<()> {
        if img.side() != self.bank.side() {
            return Err(EqwsError::SizeMismatch {
                expected: self.bank.side(),
                got: img.side(),
            });
        }
        Ok(())
    }

    fn corner_sum(&self, power: impl Fn(usize) -> f64) -> f64 {
        self.corner.iter().map(|&i| power(i as usize)).sum()
    }

    pub fn scatter_first_order(&self, img: &ImageField) -> Result<FirstOrder> {
        self.check(img)?;
        let (bar, mu0, sigma0sq) = normalize_image(img)?;
        let n2 = (img.side() * img.side()) as f64;
        let mut scratch = self.fft.make_scratch();
        let spec = self.fft.forward_real(bar.data(), &mut scratch);
        let bank = self.bank;
        let (s1, s1_phi) = if bank.params().pooling == 2 {
            let pool = |f: &SparseFilter| fourier_pool(f, |i| spec[i].norm_sqr()) / n2;
            (bank.psi_filters().iter().map(pool).collect(), pool(bank.phi()))
        } else {
            let fields = self.first_layer_fields(&spec, &mut scratch);
            let mut sums: Vec<f64> = fields.iter().map(|u| u.iter().sum()).collect();
            let phi = sums.pop().expect("phi field");
            (sums, phi)
        };
        Ok(FirstOrder {
            layout: CoefficientLayout::for_bank(bank),
            mu0,
            sigma0sq,
            s1,
            s1_phi,
            corner: self.corner_sum(|i| spec[i].norm_sqr()) / n2,
        })
    }

    /// `|ifft(filter * spec)|` for every first-layer filter, triglets first.
    fn first_layer_fields(&self, spec: &[Complex64], scratch: &mut [Complex64]) -> Vec<Vec<f64>> {
        let filters: Vec<&SparseFilter> = self.bank.filters().collect();
        let nn = spec.len();
        let mut out = Vec::with_capacity(filters.len());
        let mut buf = vec![Complex64::default(); nn];
        if self.even {
            // Both products are Hermitian, so their inverse transforms are
            // real and can share one complex transform.
            for pair in filters.chunks(2) {
                buf.fill(Complex64::default());
                for (i, v) in pair[0].iter() {
                    buf[i] += spec[i] * v;
                }
                if let Some(b) = pair.get(1) {
                    for (i, v) in b.iter() {
                        buf[i] += Complex64::new(0.0, v) * spec[i];
                    }
                }
                self.fft.inverse(&mut buf, scratch);
                out.push(buf.iter().map(|z| z.re.abs()).collect());
                if pair.len() == 2 {
                    out.push(buf.iter().map(|z| z.im.abs()).collect());
                }
            }
        } else {
            for f in filters {
                buf.fill(Complex64::default());
                for (i, v) in f.iter() {
                    buf[i] = spec[i] * v;
                }
                self.fft.inverse(&mut buf, scratch);
                out.push(buf.iter().map(|z| z.norm()).collect());
            }
        }
        out
    }

    /// Spectra of pairs of real fields through one complex transform.
    fn real_pair_spectra(
        &self,
        a: &[f64],
        b: Option<&[f64]>,
        scratch: &mut [Complex64],
    ) -> (Vec<Complex64>, Option<Vec<Complex64>>) {
        let Some(b) = b else {
            return (self.fft.forward_real(a, scratch), None);
        };
        let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.fft.forward(&mut z, scratch);
        let mut ga = Vec::with_capacity(z.len());
        let mut gb = Vec::with_capacity(z.len());
        for (i, &zk) in z.iter().enumerate() {
            let zm = z[self.negate[i] as usize].conj();
            ga.push((zk + zm) * 0.5);
            // (zk - zm) / 2i
            let d = (zk - zm) * 0.5;
            gb.push(Complex64::new(d.im, -d.re));
        }
        (ga, Some(gb))
    }

    pub fn scatter(&self, img: &ImageField) -> Result<ScatteringCoefficients> {
        self.check(img)?;
        let (bar, mu0, sigma0sq) = normalize_image(img)?;
        let side = img.side();
        let n2 = (side * side) as f64;
        let bank = self.bank;
        let pooling = bank.params().pooling;
        let mut scratch = self.fft.make_scratch();
        let spec = self.fft.forward_real(bar.data(), &mut scratch);
        let image_corner = self.corner_sum(|i| spec[i].norm_sqr()) / n2;

        let fields = self.first_layer_fields(&spec, &mut scratch);
        let filters: Vec<&SparseFilter> = bank.filters().collect();
        let m = filters.len();

        let first: Vec<f64> = if pooling == 2 {
            filters
                .iter()
                .map(|f| fourier_pool(f, |i| spec[i].norm_sqr()) / n2)
                .collect()
        } else {
            fields.iter().map(|u| u.iter().sum()).collect()
        };

        let mut table = vec![0.0; m * m];
        let mut corners = vec![0.0; m];
        let mut buf = vec![Complex64::default(); side * side];
        let mut a = 0;
        while a < m {
            let b = (a + 1 < m).then_some(a + 1);
            let (ga, gb) = self.real_pair_spectra(&fields[a], b.map(|b| &fields[b][..]), &mut scratch);
            for (row, g) in std::iter::once((a, ga)).chain(b.zip(gb)) {
                corners[row] = self.corner_sum(|i| g[i].norm_sqr()) / n2;
                let out = &mut table[row * m..(row + 1) * m];
                if pooling == 2 {
                    let power: Vec<f64> = g.iter().map(|z| z.norm_sqr()).collect();
                    for (slot, f) in out.iter_mut().zip(&filters) {
                        *slot = fourier_pool(f, |i| power[i]) / n2;
                    }
                } else {
                    self.real_pool_l1(&g, &filters, out, &mut buf, &mut scratch);
                }
            }
            a += 2;
        }

        let jl = m - 1;
        let mut s2 = Vec::with_capacity(jl * jl);
        let mut s2_phi_second = Vec::with_capacity(jl);
        for row in 0..jl {
            s2.extend_from_slice(&table[row * m..row * m + jl]);
            s2_phi_second.push(table[row * m + jl]);
        }
        let s2_phi_first = table[jl * m..jl * m + jl].to_vec();
        let s2_phi_phi = table[jl * m + jl];
        let mut s1 = first;
        let s1_phi = s1.pop().expect("phi coefficient");

        Ok(ScatteringCoefficients {
            layout: CoefficientLayout::for_bank(bank),
            mu0,
            sigma0sq,
            s1,
            s1_phi,
            s2,
            s2_phi_first,
            s2_phi_second,
            s2_phi_phi,
            pooling,
            bank_id: bank.id().to_string(),
            corner: CornerPower {
                image: image_corner,
                first_layer: corners,
            },
        })
    }

    /// `sum_x |ifft(filter * g)|` for each filter.
    fn real_pool_l1(
        &self,
        g: &[Complex64],
        filters: &[&SparseFilter],
        out: &mut [f64],
        buf: &mut [Complex64],
        scratch: &mut [Complex64],
    ) {
        if self.even {
            for (k, pair) in filters.chunks(2).enumerate() {
                buf.fill(Complex64::default());
                for (i, v) in pair[0].iter() {
                    buf[i] += g[i] * v;
                }
                if let Some(f) = pair.get(1) {
                    for (i, v) in f.iter() {
                        buf[i] += Complex64::new(0.0, v) * g[i];
                    }
                }
                self.fft.inverse(buf, scratch);
                out[2 * k] = buf.iter().map(|z| z.re.abs()).sum();
                if pair.len() == 2 {
                    out[2 * k + 1] = buf.iter().map(|z| z.im.abs()).sum();
                }
            }
        } else {
            for (slot, f) in out.iter_mut().zip(filters) {
                buf.fill(Complex64::default());
                for (i, v) in f.iter() {
                    buf[i] = g[i] * v;
                }
                self.fft.inverse(buf, scratch);
                *slot = buf.iter().map(|z| z.norm()).sum();
            }
        }
    }

    /// Scatters a batch in parallel on the current rayon pool.
    pub fn scatter_batch(&self, images: &[ImageField]) -> Result<Vec<ScatteringCoefficients>> {
        images.par_iter().map(|img| self.scatter(img)).collect()
    }

    pub fn scatter_color(&self, img: &ImageField) -> Result<ColorScatteringCoefficients> {
        self.check(img)?;
        if self.bank.params().pooling != 2 {
            return Err(EqwsError::InvalidParams("colour scattering needs a p = 2 bank".into()));
        }
        let mut scratch = self.fft.make_scratch();
        let mut s0 = Vec::new();
        let mut per_channel = Vec::new();
        for c in 0..img.channels() {
            let (bar, mu0, sigma0sq) = normalize_image(&img.channel_field(c))?;
            s0.push((mu0, sigma0sq));
            let spec = self.fft.forward_real(bar.data(), &mut scratch);
            let mut fields = self.first_layer_fields(&spec, &mut scratch);
            fields.pop();
            per_channel.push(fields);
        }
        let mut pairs = Vec::new();
        let mut cross = Vec::new();
        for c1 in 0..img.channels() {
            for c2 in c1..img.channels() {
                let mut t = Vec::new();
                for ua in &per_channel[c1] {
                    for ub in &per_channel[c2] {
                        t.push(ua.iter().zip(ub).map(|(x, y)| x * y).sum());
                    }
                }
                pairs.push((c1, c2));
                cross.push(t);
            }
        }
        Ok(ColorScatteringCoefficients {
            layout: CoefficientLayout::for_bank(self.bank),
            s0,
            pairs,
            cross,
            bank_id: self.bank.id().to_string(),
        })
    }
}

fn fourier_pool(f: &SparseFilter, power: impl Fn(usize) -> f64) -> f64 {
    f.iter().map(|(i, v)| v * v * power(i)).sum()
}

/// Multiplies a spectrum by a sparse filter, zero off its support.
pub fn apply_sparse(filter: &SparseFilter, spectrum: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); spectrum.len()];
    for (i, v) in filter.iter() {
        out[i] = spectrum[i] * v;
    }
    out
}

/// Multiplies a spectrum by a dense filter array.
pub fn apply_dense(filter: &[f64], spectrum: &[Complex64]) -> Vec<Complex64> {
    spectrum.iter().zip(filter).map(|(s, &v)| s * v).collect()
}

pub fn scatter(img: &ImageField, bank: &FilterBank) -> Result<ScatteringCoefficients> {
    ScatterEngine::new(bank).scatter(img)
}

pub fn scatter_first_order(img: &ImageField, bank: &FilterBank) -> Result<FirstOrder> {
    ScatterEngine::new(bank).scatter_first_order(img)
}

pub fn scatter_color(img: &ImageField, bank: &FilterBank) -> Result<ColorScatteringCoefficients> {
    ScatterEngine::new(bank).scatter_color(img)
}

/// Dense, unpacked, real-domain scattering. Every filter is expanded to a
/// full array and every coefficient is pooled in real space.
pub fn scatter_reference(img: &ImageField, bank: &FilterBank) -> Result<ScatteringCoefficients> {
    if img.side() != bank.side() {
        return Err(EqwsError::SizeMismatch {
            expected: bank.side(),
            got: img.side(),
        });
    }
    let (bar, mu0, sigma0sq) = normalize_image(img)?;
    let side = bank.side();
    let n2 = (side * side) as f64;
    let p = bank.params().pooling;
    let fft = Fft2d::new(side);
    let mut scratch = fft.make_scratch();
    let dense: Vec<Vec<f64>> = bank.filters().map(|f| f.to_dense(side)).collect();
    let corner = corner_indices(side);
    let pool = |field: &[Complex64]| -> f64 {
        if p == 2 {
            field.iter().map(|z| z.norm_sqr()).sum()
        } else {
            field.iter().map(|z| z.norm()).sum()
        }
    };
    let spec = fft.forward_real(bar.data(), &mut scratch);
    let image_corner = corner.iter().map(|&i| spec[i as usize].norm_sqr()).sum::<f64>() / n2;
    let m = dense.len();
    let mut first = Vec::with_capacity(m);
    let mut table = vec![0.0; m * m];
    let mut corners = Vec::with_capacity(m);
    for (a, fa) in dense.iter().enumerate() {
        let mut u = apply_dense(fa, &spec);
        fft.inverse(&mut u, &mut scratch);
        first.push(pool(&u));
        let modulus: Vec<f64> = u.iter().map(|z| z.norm()).collect();
        let g = fft.forward_real(&modulus, &mut scratch);
        corners.push(corner.iter().map(|&i| g[i as usize].norm_sqr()).sum::<f64>() / n2);
        for (b, fb) in dense.iter().enumerate() {
            let mut v = apply_dense(fb, &g);
            fft.inverse(&mut v, &mut scratch);
            table[a * m + b] = pool(&v);
        }
    }
    let jl = m - 1;
    let s1_phi = first[jl];
    first.truncate(jl);
    let mut s2 = Vec::with_capacity(jl * jl);
    let mut s2_phi_second = Vec::with_capacity(jl);
    for row in 0..jl {
        s2.extend_from_slice(&table[row * m..row * m + jl]);
        s2_phi_second.push(table[row * m + jl]);
    }
    Ok(ScatteringCoefficients {
        layout: CoefficientLayout::for_bank(bank),
        mu0,
        sigma0sq,
        s1: first,
        s1_phi,
        s2,
        s2_phi_first: table[jl * m..jl * m + jl].to_vec(),
        s2_phi_second,
        s2_phi_phi: table[jl * m + jl],
        pooling: p,
        bank_id: bank.id().to_string(),
        corner: CornerPower {
            image: image_corner,
            first_layer: corners,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bank(j_im: u32, p: u8) -> FilterBank {
        FilterBank::build(FilterBankParams {
            log2_size: j_im,
            pooling: p,
            ..Default::default()
        })
        .unwrap()
    }

    fn noise(side: usize, seed: u64) -> ImageField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageField::from_fn(side, |_, _| rng.gen::<f64>()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        let s = a.abs().max(b.abs());
        if s == 0.0 {
            0.0
        } else {
            (a - b).abs() / s
        }
    }

    #[test]
    fn normalization() {
        assert!(matches!(
            normalize_image(&ImageField::zeros(32).unwrap()),
            Err(EqwsError::DegenerateImage)
        ));
        assert!(normalize_image(&ImageField::from_fn(16, |_, _| 0.1).unwrap()).is_err());
        let img = ImageField::from_fn(4, |x, y| if x == 0 && y == 0 { 1.0 } else { 0.0 }).unwrap();
        let (bar, mu, s2) = normalize_image(&img).unwrap();
        assert!((mu - 1.0 / 16.0).abs() < 1e-16);
        assert!((s2 - 15.0 / 16.0).abs() < 1e-15);
        assert!((bar.power() - 1.0).abs() < 1e-15);
        let img = noise(16, 3);
        let (a, _, _) = normalize_image(&img).unwrap();
        let (b, _, _) = normalize_image(&a).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn counts() {
        let want = [
            (8, 2452, 310),
            (7, 1724, 219),
            (6, 1124, 144),
            (5, 652, 85),
            (4, 308, 42),
            (3, 92, 15),
        ];
        for (j_im, reg, iso) in want {
            let got = coefficient_count(&FilterBankParams::for_size(j_im)).unwrap();
            assert_eq!(got, (reg, iso), "jIm = {j_im}");
            let layout = CoefficientLayout::new(j_im as usize - 2, 8);
            assert_eq!(layout.reg_names().len(), reg);
            assert_eq!(layout.iso_names().len(), iso);
        }
    }

    #[test]
    fn vector_round_trip() {
        let b = bank(5, 2);
        let c = scatter(&noise(32, 1), &b).unwrap();
        let v = c.to_vec();
        assert_eq!(v.len(), c.layout.reg_len());
        let back = ScatteringCoefficients::from_vec(c.layout, &v).unwrap();
        assert_eq!(back.to_vec(), v);
        assert_eq!(back.s2_at(1, 2, 0, 5), c.s2_at(1, 2, 0, 5));
    }

    #[test]
    fn plane_wave() {
        let b = bank(6, 2);
        let n = 64;
        let j = 2usize;
        let r = 1usize << (6 - 3 - 1);
        // cos(2 pi r x / N): power only at (+-r, 0).
        let img =
            ImageField::from_fn(n, |x, _| (2.0 * std::f64::consts::PI * (r * x) as f64 / n as f64).cos()).unwrap();
        let c = scatter(&img, &b).unwrap();
        let peak_value = b.psi(j, 0).to_dense(n)[r];
        assert!((c.s1_at(j, 0) - peak_value * peak_value).abs() < 1e-12);
        let top = c.s1.iter().cloned().fold(0.0, f64::max);
        assert_eq!(top, c.s1_at(j, 0));
        assert!((c.first_layer_total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn white_noise_first_layer_sum() {
        let b = bank(7, 2);
        let img = noise(128, 9);
        let c = scatter(&img, &b).unwrap();
        let (bar, _, _) = normalize_image(&img).unwrap();
        let fft = Fft2d::new(128);
        let spec = fft.forward_real(bar.data(), &mut fft.make_scratch());
        let corner: f64 = corner_indices(128)
            .iter()
            .map(|&i| spec[i as usize].norm_sqr())
            .sum::<f64>()
            / (128.0 * 128.0);
        assert!(corner > 0.1);
        assert!((c.first_layer_total() - (1.0 - corner)).abs() < 1e-9);
        assert!((c.corner.image - corner).abs() < 1e-15);
    }

    #[test]
    fn layer_two_conservation() {
        let b = bank(6, 2);
        let c = scatter(&noise(64, 4), &b).unwrap();
        for j in 0..c.n_scales() {
            for l in 0..8 {
                assert!((c.second_layer_total(j, l) - c.s1_at(j, l)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fast_matches_reference() {
        for p in [2u8, 1] {
            let b = bank(5, p);
            let img = noise(32, 11 + p as u64);
            let fast = scatter(&img, &b).unwrap();
            let slow = scatter_reference(&img, &b).unwrap();
            for (x, y) in fast.to_vec().iter().zip(slow.to_vec()) {
                assert!(rel(*x, y) < 1e-10, "p={p}: {x} vs {y}");
            }
            for (x, y) in fast.corner.first_layer.iter().zip(&slow.corner.first_layer) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_plane_bank_matches_reference() {
        let b = FilterBank::build(FilterBankParams {
            log2_size: 5,
            plane: 2,
            ..Default::default()
        })
        .unwrap();
        let img = noise(32, 5);
        let fast = scatter(&img, &b).unwrap();
        let slow = scatter_reference(&img, &b).unwrap();
        for (x, y) in fast.to_vec().iter().zip(slow.to_vec()) {
            assert!(rel(*x, y) < 1e-10);
        }
    }

    #[test]
    fn first_order_matches_full() {
        for p in [1u8, 2] {
            let b = bank(5, p);
            let img = noise(32, 2);
            let full = scatter(&img, &b).unwrap();
            let first = scatter_first_order(&img, &b).unwrap();
            assert_eq!(first.s1, full.s1);
            assert_eq!(first.s1_phi, full.s1_phi);
        }
    }

    #[test]
    fn rejects_wrong_size() {
        let b = bank(5, 2);
        assert!(matches!(
            scatter(&noise(64, 0), &b),
            Err(EqwsError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn colour_cross_terms() {
        let b = bank(5, 2);
        let r = noise(32, 1);
        let g = noise(32, 2);
        let blue = noise(32, 3);
        let img = ImageField::stack(&[r.clone(), g.clone(), blue]).unwrap();
        let c = scatter_color(&img, &b).unwrap();
        assert_eq!(c.pairs.len(), 6);
        for (ch, field) in [(0, &r), (1, &g)] {
            let s = scatter(field, &b).unwrap();
            for j in 0..c.layout.n_scales {
                for l in 0..8 {
                    assert!(rel(c.cross_at(ch, ch, j, l, j, l), s.s1_at(j, l)) < 1e-10);
                }
            }
        }
        for j1 in 0..3 {
            for j2 in 0..3 {
                for (l1, l2) in [(0, 0), (1, 5), (7, 2)] {
                    let x = c.cross_at(0, 2, j1, l1, j2, l2);
                    let bound = c.cross_at(0, 0, j1, l1, j1, l1) * c.cross_at(2, 2, j2, l2, j2, l2);
                    assert!(x * x <= bound * (1.0 + 1e-12));
                    assert_eq!(x, c.cross_at(2, 0, j2, l2, j1, l1));
                }
            }
        }
        let dup = ImageField::stack(&[r.clone(), r.clone(), g]).unwrap();
        let c = scatter_color(&dup, &b).unwrap();
        assert_eq!(
            c.cross[c.pair_index(0, 1).unwrap()],
            c.cross[c.pair_index(0, 0).unwrap()]
        );
    }

    #[test]
    fn batch_matches_single() {
        let b = bank(5, 2);
        let engine = ScatterEngine::new(&b);
        let imgs: Vec<ImageField> = (0..4).map(|s| noise(32, s)).collect();
        let batch = engine.scatter_batch(&imgs).unwrap();
        for (img, c) in imgs.iter().zip(&batch) {
            assert_eq!(engine.scatter(img).unwrap(), *c);
        }
    }
}
